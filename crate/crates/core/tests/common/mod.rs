#![allow(dead_code)]

use mghmi::field::MultiChannelField;
use mghmi::invgen::{eta, int, MomentPolynomial, Monomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(coefficient, [(channel, p1, p2), ...])` terms, channels one-based.
pub type Term = (i64, Vec<(usize, usize, usize)>);

pub fn poly(terms: &[Term]) -> MomentPolynomial {
    MomentPolynomial::from_terms(terms.iter().map(|(c, fs)| {
        let syms = fs.iter().map(|&(n, a, b)| eta(n, &[a, b])).collect();
        (int(*c), Monomial::new(syms))
    }))
}

/// The same per-channel pattern written out for channels 1 and 2.
fn both(pattern: &[(i64, &[(usize, usize)])]) -> Vec<Term> {
    let mut out = Vec::new();
    for n in 1..=2 {
        for (c, fs) in pattern {
            out.push((*c, fs.iter().map(|&(a, b)| (n, a, b)).collect()));
        }
    }
    out
}

/// The seven reference TR invariants of 2-D vector fields, the seventh with
/// its mixed-channel term made channel-symmetric.
pub fn reference_tr_invariants() -> Vec<MomentPolynomial> {
    let rows: Vec<Vec<Term>> = vec![
        both(&[(1, &[(1, 0), (1, 0)]), (1, &[(0, 1), (0, 1)])]),
        both(&[
            (1, &[(1, 0), (3, 0)]),
            (1, &[(1, 0), (1, 2)]),
            (1, &[(0, 1), (2, 1)]),
            (1, &[(0, 1), (0, 3)]),
        ]),
        both(&[(1, &[(2, 0), (2, 0)]), (2, &[(1, 1), (1, 1)]), (1, &[(0, 2), (0, 2)])]),
        both(&[
            (1, &[(0, 1), (1, 2)]),
            (1, &[(0, 1), (3, 0)]),
            (-1, &[(1, 0), (0, 3)]),
            (-1, &[(1, 0), (2, 1)]),
        ]),
        both(&[(1, &[(2, 0), (0, 2)]), (-1, &[(1, 1), (1, 1)])]),
        both(&[
            (1, &[(3, 0), (3, 0)]),
            (3, &[(2, 1), (2, 1)]),
            (3, &[(1, 2), (1, 2)]),
            (1, &[(0, 3), (0, 3)]),
        ]),
        both(&[
            (1, &[(0, 3), (2, 1)]),
            (-1, &[(1, 2), (1, 2)]),
            (1, &[(1, 2), (3, 0)]),
            (-1, &[(2, 1), (2, 1)]),
        ]),
    ];
    rows.iter().map(|r| poly(r)).collect()
}

/// The seventh entry exactly as printed, with `η²₁₂ η¹₃₀`.
pub fn seventh_as_printed() -> MomentPolynomial {
    poly(&[
        (1, vec![(1, 0, 3), (1, 2, 1)]),
        (-1, vec![(1, 1, 2), (1, 1, 2)]),
        (1, vec![(1, 1, 2), (1, 3, 0)]),
        (-1, vec![(1, 2, 1), (1, 2, 1)]),
        (1, vec![(2, 0, 3), (2, 2, 1)]),
        (-1, vec![(2, 1, 2), (2, 1, 2)]),
        (1, vec![(2, 1, 2), (1, 3, 0)]),
        (-1, vec![(2, 2, 1), (2, 2, 1)]),
    ])
}

/// Field with independent uniform samples in `[-1, 1]`.
pub fn random_field(extent: &[usize], channels: usize, seed: u64) -> MultiChannelField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = extent.iter().product::<usize>() * channels;
    let data = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
    MultiChannelField::new(extent.to_vec(), channels, data).unwrap()
}

/// Smooth random field: a sum of a few random Gaussian bumps per channel,
/// so rotated versions are well resolved on the grid.
pub fn smooth_field(side: usize, channels: usize, seed: u64) -> MultiChannelField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = side as f64;
    let bumps: Vec<(f64, f64, f64, Vec<f64>)> = (0..6)
        .map(|_| {
            (
                rng.random_range(-0.3 * s..0.3 * s),
                rng.random_range(-0.3 * s..0.3 * s),
                rng.random_range(0.08 * s..0.2 * s),
                (0..channels).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
        })
        .collect();
    MultiChannelField::from_fn(vec![side, side], channels, |x, out| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (cx, cy, r, amp) in &bumps {
            let g = (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / (2.0 * r * r)).exp();
            for (o, a) in out.iter_mut().zip(amp) {
                *o += a * g;
            }
        }
    })
    .unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn factorial(p: usize) -> f64 {
    (1..=p).map(|k| k as f64).product()
}

/// `H_p(x)` from the explicit finite sum, independent of any recurrence.
pub fn hermite_explicit(p: u32, x: f64) -> f64 {
    let p = p as i32;
    (0..=p / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(p as usize) / (factorial(m as usize) * factorial((p - 2 * m) as usize))
                * (2.0 * x).powi(p - 2 * m)
        })
        .sum()
}

/// `(-σ)^-p exp(-x²/2σ²) H_p(x/σ)`.
pub fn gh_explicit(p: u32, x: f64, sigma: f64) -> f64 {
    (-sigma).powi(-(p as i32)) * (-x * x / (2.0 * sigma * sigma)).exp() * hermite_explicit(p, x / sigma)
}
