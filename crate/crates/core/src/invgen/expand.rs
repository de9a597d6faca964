//! Expansion of an operator/primitive pair into a moment polynomial.

use std::collections::HashMap;

use super::atoms::{OperatorAtom, OperatorProduct, PrimitiveAtom, PrimitiveProduct};
use super::poly::{Coeff, MomentPolynomial, MomentSymbol, Monomial};
use crate::error::{Error, Result};

/// Derivative counts per point and axis, flattened as `point * M + axis`.
type DerivTerms = HashMap<Vec<usize>, i64>;
/// Channel per point (`None` where the point is unused so far).
type ChannelTerms = HashMap<Vec<Option<usize>>, i64>;

/// Signed permutations of `0..n` (Heap's algorithm order is irrelevant here).
pub(crate) fn signed_permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, n, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], n, &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let mut inversions = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1 } else { -1 };
            (p, sign)
        })
        .collect()
}

fn deriv_atom(atom: &OperatorAtom, k: usize, m: usize) -> DerivTerms {
    let mut out = DerivTerms::new();
    match atom {
        OperatorAtom::Phi(a, b) => {
            for axis in 0..m {
                let mut key = vec![0; k * m];
                key[(a - 1) * m + axis] += 1;
                key[(b - 1) * m + axis] += 1;
                *out.entry(key).or_insert(0) += 1;
            }
        }
        OperatorAtom::Psi(bs) => {
            // det[∇_{b_1} … ∇_{b_M}] = Σ_π sgn π ∏_j ∂_{π(j)} at point b_j.
            for (perm, sign) in signed_permutations(m) {
                let mut key = vec![0; k * m];
                for (j, &b) in bs.iter().enumerate() {
                    key[(b - 1) * m + perm[j]] += 1;
                }
                *out.entry(key).or_insert(0) += sign;
            }
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn mul_deriv(a: &DerivTerms, b: &DerivTerms) -> DerivTerms {
    let mut out = DerivTerms::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let key: Vec<usize> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            *out.entry(key).or_insert(0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn channel_atom(atom: &PrimitiveAtom, k: usize, n: usize) -> ChannelTerms {
    let mut out = ChannelTerms::new();
    match atom {
        PrimitiveAtom::Gamma(a, b) => {
            for ch in 0..n {
                let mut key = vec![None; k];
                key[a - 1] = Some(ch);
                key[b - 1] = Some(ch);
                *out.entry(key).or_insert(0) += 1;
            }
        }
        PrimitiveAtom::Lambda(ds) => {
            for (perm, sign) in signed_permutations(n) {
                let mut key = vec![None; k];
                for (j, &d) in ds.iter().enumerate() {
                    key[d - 1] = Some(perm[j]);
                }
                *out.entry(key).or_insert(0) += sign;
            }
        }
    }
    out
}

fn mul_channel(a: &ChannelTerms, b: &ChannelTerms) -> ChannelTerms {
    let mut out = ChannelTerms::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let key: Vec<Option<usize>> = ka.iter().zip(kb).map(|(x, y)| x.or(*y)).collect();
            *out.entry(key).or_insert(0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Expands `D` into per-point mixed partial multi-indices.
pub(crate) fn expand_operator(d: &OperatorProduct, k: usize, m: usize) -> DerivTerms {
    let mut acc = DerivTerms::from([(vec![0; k * m], 1)]);
    for (atom, e) in d.factors() {
        let t = deriv_atom(atom, k, m);
        for _ in 0..*e {
            acc = mul_deriv(&acc, &t);
        }
    }
    acc
}

pub(crate) fn expand_primitive(p: &PrimitiveProduct, k: usize, n: usize) -> ChannelTerms {
    let mut acc = ChannelTerms::from([(vec![None; k], 1)]);
    for atom in p.factors() {
        acc = mul_channel(&acc, &channel_atom(atom, k, n));
    }
    acc
}

/// Expands the invariant built from `d` and `p` into moments: every
/// `∂^q / ∂(x^k)^q` becomes the Hermite index `q` of point `k`, and the
/// channel assigned to point `k` becomes the moment's channel. The integral
/// then factorizes into one moment per point.
pub fn expand_invariant(
    d: &OperatorProduct,
    p: &PrimitiveProduct,
    coord_dim: usize,
    channel_dim: usize,
) -> Result<MomentPolynomial> {
    let pts = d.points();
    if pts != p.points() {
        return Err(Error::PointMismatch {
            operator: pts,
            primitive: p.points(),
        });
    }
    if let Some(bad) = d.factors().iter().find_map(|(a, _)| match a {
        OperatorAtom::Psi(bs) if bs.len() != coord_dim => Some(bs.len()),
        _ => None,
    }) {
        return Err(Error::DimMismatch(format!("psi with {bad} points for M = {coord_dim}")));
    }
    if let Some(bad) = p.factors().iter().find_map(|a| match a {
        PrimitiveAtom::Lambda(ds) if ds.len() != channel_dim => Some(ds.len()),
        _ => None,
    }) {
        return Err(Error::DimMismatch(format!("Lambda with {bad} points for N = {channel_dim}")));
    }
    let k = *pts.last().expect("non-empty products");
    let m = coord_dim;
    let derivs = expand_operator(d, k, m);
    let channels = expand_primitive(p, k, channel_dim);
    let mut poly = MomentPolynomial::zero();
    for (dk, dc) in &derivs {
        for (ck, cc) in &channels {
            let factors: Vec<MomentSymbol> = pts
                .iter()
                .map(|&pt| {
                    let ch = ck[pt - 1].expect("every point has a channel");
                    MomentSymbol::new(ch, dk[(pt - 1) * m..pt * m].to_vec())
                })
                .collect();
            poly.add_term(Coeff::from_integer(dc * cc), Monomial::new(factors));
        }
    }
    Ok(poly)
}
