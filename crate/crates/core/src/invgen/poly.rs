//! Rational-coefficient polynomials in moment symbols.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};

pub type Coeff = Ratio<i64>;

/// The moment `η^n_{p_1..p_M}`; `channel` is zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentSymbol {
    pub channel: usize,
    pub orders: Vec<usize>,
}

impl MomentSymbol {
    pub fn new(channel: usize, orders: Vec<usize>) -> Self {
        Self { channel, orders }
    }

    pub fn order(&self) -> usize {
        self.orders.iter().sum()
    }
}

impl fmt::Display for MomentSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let orders: Vec<String> = self.orders.iter().map(|o| o.to_string()).collect();
        write!(f, "eta[{};{}]", self.channel + 1, orders.join(","))
    }
}

/// Sorted multiset of moment symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<MomentSymbol>);

impl Monomial {
    pub fn new(mut factors: Vec<MomentSymbol>) -> Self {
        factors.sort();
        Self(factors)
    }

    pub fn factors(&self) -> &[MomentSymbol] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Monomial::new(v)
    }
}

/// A polynomial in canonical form: monomials sorted, like terms merged,
/// zero coefficients dropped. Equality is equality of canonical forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MomentPolynomial {
    terms: BTreeMap<Monomial, Coeff>,
}

impl MomentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Coeff, Monomial)>,
    {
        let mut p = Self::zero();
        for (c, m) in terms {
            p.add_term(c, m);
        }
        p
    }

    pub fn add_term(&mut self, coeff: Coeff, monomial: Monomial) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(monomial) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree of the first monomial (all monomials share it for generated invariants).
    pub fn degree(&self) -> usize {
        self.terms.keys().next().map_or(0, Monomial::degree)
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.keys().all(|m| m.degree() == d)
    }

    /// Highest total order of any moment symbol present.
    pub fn max_order(&self) -> usize {
        self.symbols().map(MomentSymbol::order).max().unwrap_or(0)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &MomentSymbol> {
        self.terms.keys().flat_map(|m| m.factors().iter())
    }

    pub fn scale(&self, factor: Coeff) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), *c * factor)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*c, m.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(*ca * *cb, ma.mul(mb));
            }
        }
        out
    }

    /// The polynomial divided by the GCD of its coefficients and sign-fixed so
    /// the smallest monomial has a positive coefficient. Two polynomials that
    /// differ by a nonzero rational factor share this form.
    pub fn primitive(&self) -> Self {
        let Some(first) = self.terms.values().next() else {
            return Self::zero();
        };
        let num_gcd = self
            .terms
            .values()
            .fold(0i64, |g, c| g.gcd(c.numer()));
        let den_lcm = self.terms.values().fold(1i64, |l, c| l.lcm(c.denom()));
        let mut factor = Coeff::new(den_lcm, num_gcd);
        if first.is_negative() {
            factor = -factor;
        }
        self.scale(factor)
    }

    /// `Some(c)` with `self = c * other` when the two are proportional.
    pub fn ratio_to(&self, other: &Self) -> Option<Coeff> {
        if self.is_zero() || other.is_zero() || self.terms.len() != other.terms.len() {
            return None;
        }
        let mut ratio: Option<Coeff> = None;
        for ((ma, ca), (mb, cb)) in self.terms.iter().zip(&other.terms) {
            if ma != mb {
                return None;
            }
            let r = *ca / *cb;
            match ratio {
                None => ratio = Some(r),
                Some(q) if q != r => return None,
                _ => {}
            }
        }
        ratio
    }

    /// Evaluates with a caller-supplied symbol lookup.
    pub fn eval_with<F>(&self, mut value: F) -> f64
    where
        F: FnMut(&MomentSymbol) -> f64,
    {
        self.terms
            .iter()
            .map(|(m, c)| {
                let coeff = *c.numer() as f64 / *c.denom() as f64;
                m.factors().iter().fold(coeff, |acc, s| acc * value(s))
            })
            .sum()
    }

    /// Formal partial derivative with respect to `symbol`.
    pub fn partial(&self, symbol: &MomentSymbol) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let count = m.factors().iter().filter(|s| *s == symbol).count();
            if count == 0 {
                continue;
            }
            let mut rest = m.factors().to_vec();
            let pos = rest.iter().position(|s| s == symbol).unwrap();
            rest.remove(pos);
            out.add_term(*c * Coeff::from_integer(count as i64), Monomial::new(rest));
        }
        out
    }
}

pub(crate) fn format_coeff(c: &Coeff) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0/1");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", format_coeff(c))?;
            for s in m.factors() {
                write!(f, " * {s}")?;
            }
        }
        Ok(())
    }
}

/// Shorthand for a symbol with a one-based channel, as written in the literature.
pub fn eta(channel_one_based: usize, orders: &[usize]) -> MomentSymbol {
    MomentSymbol::new(channel_one_based - 1, orders.to_vec())
}

pub fn int(c: i64) -> Coeff {
    Coeff::from_integer(c)
}
