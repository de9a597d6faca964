//! Fundamental differential operators and primitives, their products, and
//! the enumeration of all products admissible under a degree/order budget.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Transform model an invariant is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// Total rotation: the outer transform is a rotation.
    Tr,
    /// Rotation-affine: the outer transform is a general affine map.
    Ra,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Tr => "TR",
            Model::Ra => "RA",
        })
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TR" => Ok(Model::Tr),
            "RA" => Ok(Model::Ra),
            _ => Err(Error::param(format!("unknown model {s:?}, expected TR or RA"))),
        }
    }
}

/// `Phi(a, b)` is the gradient dot product at points `a`, `b`; `Psi(bs)` is
/// the determinant of the gradients at the `M` points `bs`. Point indices are
/// one-based. General index order is accepted: swapping two `Psi` columns
/// flips the sign and repeating one gives zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorAtom {
    Phi(usize, usize),
    Psi(Vec<usize>),
}

impl OperatorAtom {
    fn points(&self) -> Vec<usize> {
        match self {
            OperatorAtom::Phi(a, b) => vec![*a, *b],
            OperatorAtom::Psi(bs) => bs.clone(),
        }
    }
}

/// `Gamma(c1, c2)` is the channel-vector dot product at two points;
/// `Lambda(ds)` is the determinant of the channel vectors at `N` points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveAtom {
    Gamma(usize, usize),
    Lambda(Vec<usize>),
}

impl PrimitiveAtom {
    fn points(&self) -> Vec<usize> {
        match self {
            PrimitiveAtom::Gamma(a, b) => vec![*a, *b],
            PrimitiveAtom::Lambda(ds) => ds.clone(),
        }
    }
}

fn write_indices(f: &mut fmt::Formatter<'_>, name: &str, idx: &[usize]) -> fmt::Result {
    if idx.iter().all(|&i| i < 10) {
        write!(f, "{name}")?;
        for i in idx {
            write!(f, "{i}")?;
        }
        Ok(())
    } else {
        let s: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        write!(f, "{name}({})", s.join(","))
    }
}

impl fmt::Display for OperatorAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorAtom::Phi(a, b) => write_indices(f, "phi", &[*a, *b]),
            OperatorAtom::Psi(bs) => write_indices(f, "psi", bs),
        }
    }
}

impl fmt::Display for PrimitiveAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimitiveAtom::Gamma(a, b) => write_indices(f, "Gamma", &[*a, *b]),
            PrimitiveAtom::Lambda(ds) => write_indices(f, "Lambda", ds),
        }
    }
}

/// Product of operator atoms with positive exponents, kept in atom order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorProduct {
    factors: Vec<(OperatorAtom, u32)>,
}

impl OperatorProduct {
    /// Builds a product, merging repeated atoms. `Psi` atoms must carry
    /// `coord_dim` indices; all indices must be at least 1.
    pub fn new(factors: Vec<(OperatorAtom, u32)>, coord_dim: usize) -> Result<Self> {
        let mut merged: Vec<(OperatorAtom, u32)> = Vec::new();
        for (atom, e) in factors {
            if e == 0 {
                continue;
            }
            if let OperatorAtom::Psi(bs) = &atom {
                if bs.len() != coord_dim {
                    return Err(Error::param(format!(
                        "psi needs {coord_dim} point indices, got {}",
                        bs.len()
                    )));
                }
            }
            if atom.points().contains(&0) {
                return Err(Error::param("point indices are one-based"));
            }
            match merged.iter_mut().find(|(a, _)| *a == atom) {
                Some((_, x)) => *x += e,
                None => merged.push((atom, e)),
            }
        }
        if merged.is_empty() {
            return Err(Error::param("operator product needs at least one atom"));
        }
        merged.sort();
        Ok(Self { factors: merged })
    }

    pub fn factors(&self) -> &[(OperatorAtom, u32)] {
        &self.factors
    }

    /// Sorted distinct point indices.
    pub fn points(&self) -> Vec<usize> {
        let mut pts: Vec<usize> = self.factors.iter().flat_map(|(a, _)| a.points()).collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// Differential order contributed at each point, indexed by point − 1.
    pub fn point_orders(&self) -> Vec<usize> {
        let k = self.points().last().copied().unwrap_or(0);
        let mut orders = vec![0; k];
        for (atom, e) in &self.factors {
            for p in atom.points() {
                orders[p - 1] += *e as usize;
            }
        }
        orders
    }

    pub fn order(&self) -> usize {
        self.point_orders().into_iter().max().unwrap_or(0)
    }
}

impl fmt::Display for OperatorProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (atom, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{atom}")?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Product of primitive atoms using every point exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimitiveProduct {
    factors: Vec<PrimitiveAtom>,
}

impl PrimitiveProduct {
    pub fn new(mut factors: Vec<PrimitiveAtom>, channel_dim: usize) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::param("primitive product needs at least one atom"));
        }
        let mut seen = Vec::new();
        for atom in &factors {
            if let PrimitiveAtom::Lambda(ds) = atom {
                if ds.len() != channel_dim {
                    return Err(Error::param(format!(
                        "Lambda needs {channel_dim} point indices, got {}",
                        ds.len()
                    )));
                }
            }
            for p in atom.points() {
                if p == 0 {
                    return Err(Error::param("point indices are one-based"));
                }
                if seen.contains(&p) {
                    return Err(Error::param(format!("point {p} used more than once in a primitive product")));
                }
                seen.push(p);
            }
        }
        factors.sort();
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[PrimitiveAtom] {
        &self.factors
    }

    pub fn points(&self) -> Vec<usize> {
        let mut pts: Vec<usize> = self.factors.iter().flat_map(PrimitiveAtom::points).collect();
        pts.sort_unstable();
        pts
    }

    pub fn has_gamma(&self) -> bool {
        self.factors.iter().any(|a| matches!(a, PrimitiveAtom::Gamma(..)))
    }

    /// Number of `Lambda` factors, the exponent of `det(A_out)` under RA.
    pub fn lambda_count(&self) -> usize {
        self.factors.iter().filter(|a| matches!(a, PrimitiveAtom::Lambda(_))).count()
    }
}

impl fmt::Display for PrimitiveProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

fn parse_indices(body: &str) -> Result<Vec<usize>> {
    let bad = || Error::param(format!("bad point indices {body:?}"));
    if let Some(inner) = body.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
        inner
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| bad()))
            .collect()
    } else if !body.is_empty() && body.chars().all(|c| c.is_ascii_digit()) {
        Ok(body.chars().map(|c| c as usize - '0' as usize).collect())
    } else {
        Err(bad())
    }
}

/// Parses `phi12^2*psi12` style text.
pub fn parse_operator_product(text: &str, coord_dim: usize) -> Result<OperatorProduct> {
    let mut factors = Vec::new();
    for tok in text.split('*').map(str::trim) {
        let (base, exp) = match tok.split_once('^') {
            Some((b, e)) => (b, e.parse::<u32>().map_err(|_| Error::param(format!("bad exponent in {tok:?}")))?),
            None => (tok, 1),
        };
        let atom = if let Some(rest) = base.strip_prefix("phi") {
            let idx = parse_indices(rest)?;
            if idx.len() != 2 {
                return Err(Error::param(format!("phi takes two points: {tok:?}")));
            }
            OperatorAtom::Phi(idx[0].min(idx[1]), idx[0].max(idx[1]))
        } else if let Some(rest) = base.strip_prefix("psi") {
            OperatorAtom::Psi(parse_indices(rest)?)
        } else {
            return Err(Error::param(format!("unknown operator atom {tok:?}")));
        };
        factors.push((atom, exp));
    }
    OperatorProduct::new(factors, coord_dim)
}

/// Parses `Gamma12*Lambda34` style text.
pub fn parse_primitive_product(text: &str, channel_dim: usize) -> Result<PrimitiveProduct> {
    let mut factors = Vec::new();
    for tok in text.split('*').map(str::trim) {
        let atom = if let Some(rest) = tok.strip_prefix("Gamma") {
            let idx = parse_indices(rest)?;
            if idx.len() != 2 {
                return Err(Error::param(format!("Gamma takes two points: {tok:?}")));
            }
            PrimitiveAtom::Gamma(idx[0].min(idx[1]), idx[0].max(idx[1]))
        } else if let Some(rest) = tok.strip_prefix("Lambda") {
            PrimitiveAtom::Lambda(parse_indices(rest)?)
        } else {
            return Err(Error::param(format!("unknown primitive atom {tok:?}")));
        };
        factors.push(atom);
    }
    PrimitiveProduct::new(factors, channel_dim)
}

fn combinations(pool: &[usize], r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    if pool.len() < r {
        return vec![];
    }
    let mut out = Vec::new();
    for (i, &first) in pool.iter().enumerate() {
        for mut rest in combinations(&pool[i + 1..], r - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All fundamental operators over points `1..=k` in canonical order.
pub fn operator_atoms(k: usize, coord_dim: usize) -> Vec<OperatorAtom> {
    let mut atoms = Vec::new();
    for a in 1..=k {
        for b in a..=k {
            atoms.push(OperatorAtom::Phi(a, b));
        }
    }
    let pts: Vec<usize> = (1..=k).collect();
    for c in combinations(&pts, coord_dim) {
        atoms.push(OperatorAtom::Psi(c));
    }
    atoms
}

/// All operator products over points `1..=k` in which every point appears
/// and no point carries more than `max_order` derivatives.
pub fn enumerate_operator_products(k: usize, coord_dim: usize, max_order: usize) -> Vec<OperatorProduct> {
    let atoms = operator_atoms(k, coord_dim);
    let loads: Vec<Vec<usize>> = atoms
        .iter()
        .map(|a| {
            let mut l = vec![0; k];
            for p in a.points() {
                l[p - 1] += 1;
            }
            l
        })
        .collect();
    let mut out = Vec::new();
    let mut exps = vec![0u32; atoms.len()];
    let mut budget = vec![0usize; k];
    fn dfs(
        i: usize,
        atoms: &[OperatorAtom],
        loads: &[Vec<usize>],
        max_order: usize,
        exps: &mut Vec<u32>,
        budget: &mut Vec<usize>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if i == atoms.len() {
            if budget.iter().all(|&b| b >= 1) {
                out.push(exps.clone());
            }
            return;
        }
        dfs(i + 1, atoms, loads, max_order, exps, budget, out);
        let mut e = 0;
        loop {
            if budget.iter().zip(&loads[i]).any(|(b, l)| b + l > max_order) {
                break;
            }
            for (b, l) in budget.iter_mut().zip(&loads[i]) {
                *b += l;
            }
            e += 1;
            exps[i] = e;
            dfs(i + 1, atoms, loads, max_order, exps, budget, out);
        }
        for (b, l) in budget.iter_mut().zip(&loads[i]) {
            *b -= l * e as usize;
        }
        exps[i] = 0;
    }
    let mut raw = Vec::new();
    dfs(0, &atoms, &loads, max_order, &mut exps, &mut budget, &mut raw);
    for e in raw {
        let factors = atoms.iter().cloned().zip(e).filter(|(_, x)| *x > 0).collect();
        out.push(OperatorProduct::new(factors, coord_dim).expect("enumerated atoms are valid"));
    }
    out.sort();
    out
}

/// All partitions of points `1..=k` into `Gamma` pairs and `Lambda`
/// `channel_dim`-tuples; `Gamma` is excluded under [`Model::Ra`].
pub fn enumerate_primitive_products(k: usize, channel_dim: usize, model: Model) -> Vec<PrimitiveProduct> {
    fn rec(
        free: &[usize],
        n: usize,
        allow_gamma: bool,
        acc: &mut Vec<PrimitiveAtom>,
        out: &mut Vec<Vec<PrimitiveAtom>>,
    ) {
        let Some((&first, rest)) = free.split_first() else {
            out.push(acc.clone());
            return;
        };
        if allow_gamma {
            for (j, &other) in rest.iter().enumerate() {
                let remaining: Vec<usize> = rest.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, &p)| p).collect();
                acc.push(PrimitiveAtom::Gamma(first, other));
                rec(&remaining, n, allow_gamma, acc, out);
                acc.pop();
            }
        }
        for combo in combinations(rest, n - 1) {
            let remaining: Vec<usize> = rest.iter().copied().filter(|p| !combo.contains(p)).collect();
            let mut ds = vec![first];
            ds.extend(combo);
            acc.push(PrimitiveAtom::Lambda(ds));
            rec(&remaining, n, allow_gamma, acc, out);
            acc.pop();
        }
    }
    if k == 0 || channel_dim == 0 {
        return Vec::new();
    }
    let pts: Vec<usize> = (1..=k).collect();
    let mut raw = Vec::new();
    rec(&pts, channel_dim, model == Model::Tr, &mut Vec::new(), &mut raw);
    let mut out: Vec<PrimitiveProduct> = raw
        .into_iter()
        .map(|f| PrimitiveProduct::new(f, channel_dim).expect("enumerated partitions are valid"))
        .collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_universe_for_two_points() {
        let u: Vec<String> = operator_atoms(2, 2).iter().map(|a| a.to_string()).collect();
        assert_eq!(u, ["phi11", "phi12", "phi22", "psi12"]);
    }

    #[test]
    fn single_point_order_two() {
        let ds = enumerate_operator_products(1, 2, 2);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].to_string(), "phi11");
        assert_eq!(ds[0].order(), 2);
        assert!(enumerate_operator_products(1, 2, 1).is_empty());
    }

    #[test]
    fn two_points_match_brute_force() {
        let (k, m, o) = (2, 2, 3);
        let atoms = operator_atoms(k, m);
        let mut brute = Vec::new();
        let cap = o as u32;
        let n = atoms.len();
        let total = (cap + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let exps: Vec<u32> = (0..n)
                .map(|_| {
                    let e = c % (cap + 1);
                    c /= cap + 1;
                    e
                })
                .collect();
            let mut orders = vec![0usize; k];
            for (a, &e) in atoms.iter().zip(&exps) {
                for p in a.points() {
                    orders[p - 1] += e as usize;
                }
            }
            if orders.iter().all(|&x| (1..=o).contains(&x)) {
                let f = atoms.iter().cloned().zip(exps).filter(|(_, e)| *e > 0).collect();
                brute.push(OperatorProduct::new(f, m).unwrap());
            }
        }
        brute.sort();
        assert_eq!(enumerate_operator_products(k, m, o), brute);
    }

    #[test]
    fn primitive_partitions() {
        let s = |v: Vec<PrimitiveProduct>| v.iter().map(|p| p.to_string()).collect::<Vec<_>>();
        assert_eq!(s(enumerate_primitive_products(2, 2, Model::Tr)), ["Gamma12", "Lambda12"]);
        assert_eq!(s(enumerate_primitive_products(2, 2, Model::Ra)), ["Lambda12"]);
        assert_eq!(s(enumerate_primitive_products(3, 3, Model::Ra)), ["Lambda123"]);
        assert!(enumerate_primitive_products(2, 3, Model::Ra).is_empty());
        assert!(enumerate_primitive_products(1, 2, Model::Tr).is_empty());
        // Four points, two channels: three pairings, each pair Gamma or Lambda.
        assert_eq!(enumerate_primitive_products(4, 2, Model::Tr).len(), 12);
    }

    #[test]
    fn primitive_products_reject_reuse() {
        let bad = vec![PrimitiveAtom::Gamma(1, 2), PrimitiveAtom::Lambda(vec![2, 3])];
        assert!(PrimitiveProduct::new(bad, 2).is_err());
    }

    #[test]
    fn parse_roundtrip() {
        let d = parse_operator_product("psi12^2*phi12", 2).unwrap();
        assert_eq!(d.to_string(), "phi12*psi12^2");
        assert_eq!(parse_operator_product(&d.to_string(), 2).unwrap(), d);
        let p = parse_primitive_product("Gamma(1,2)", 2).unwrap();
        assert_eq!(p.to_string(), "Gamma12");
        assert!(parse_operator_product("chi12", 2).is_err());
        assert!(parse_operator_product("psi123", 2).is_err());
    }
}
