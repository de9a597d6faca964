//! Candidate generation and pruning.

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::atoms::{
    enumerate_operator_products, enumerate_primitive_products, Model, OperatorProduct, PrimitiveProduct,
};
use super::expand::expand_invariant;
use super::poly::{MomentPolynomial, MomentSymbol};
use super::set::{InvariantSet, Normalization};
use crate::moments::multi_indices;

pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 0x4d47_484d;

/// An expanded invariant with the operator/primitive pair it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub operator: OperatorProduct,
    pub primitive: PrimitiveProduct,
    pub degree: usize,
    pub order: usize,
    pub polynomial: MomentPolynomial,
}

impl Candidate {
    pub fn source(&self) -> String {
        format!("{} | {}", self.operator, self.primitive)
    }

    /// Sort key: degree, order, then source text.
    fn key(&self) -> (usize, usize, String) {
        (self.degree, self.order, self.source())
    }
}

/// Counts gathered while generating candidates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationReport {
    /// Operator/primitive pairs expanded.
    pub pairs: usize,
    /// Pairs whose expansion vanished identically.
    pub zero: usize,
    /// Expansions equal to an earlier one up to a constant factor.
    pub duplicate: usize,
    /// TR candidates dropped because they duplicate an RA invariant.
    pub ra_overlap: usize,
    pub candidates: Vec<Candidate>,
}

fn raw_candidates(m: usize, n: usize, model: Model, max_degree: usize, max_order: usize) -> (usize, Vec<Candidate>) {
    let mut jobs = Vec::new();
    for k in 1..=max_degree {
        let ps = enumerate_primitive_products(k, n, model);
        if ps.is_empty() {
            continue;
        }
        for d in enumerate_operator_products(k, m, max_order) {
            for p in &ps {
                if model == Model::Tr && !p.has_gamma() {
                    // Gamma-free pairs are RA invariants and belong to the RA set.
                    continue;
                }
                jobs.push((k, d.clone(), p.clone()));
            }
        }
    }
    let pairs = jobs.len();
    let mut cands: Vec<Candidate> = jobs
        .into_par_iter()
        .map(|(k, d, p)| {
            let poly = expand_invariant(&d, &p, m, n).expect("enumerated pairs share points");
            Candidate {
                order: d.order(),
                degree: k,
                operator: d,
                primitive: p,
                polynomial: poly,
            }
        })
        .collect();
    cands.sort_by_key(|c| c.key());
    (pairs, cands)
}

/// Pairs every operator product with every primitive product over the same
/// points, for up to `max_degree` points, expands them, and drops zero
/// polynomials and duplicates up to a rational factor. Under [`Model::Tr`]
/// only `Gamma`-containing primitives are used and anything proportional to
/// an RA candidate is removed, so the TR and RA pools never intersect.
pub fn generate(m: usize, n: usize, model: Model, max_degree: usize, max_order: usize) -> GenerationReport {
    let (pairs, cands) = raw_candidates(m, n, model, max_degree, max_order);
    let mut report = GenerationReport {
        pairs,
        ..Default::default()
    };
    let mut blocked: HashSet<MomentPolynomial> = HashSet::new();
    if model == Model::Tr {
        let (_, ra) = raw_candidates(m, n, Model::Ra, max_degree, max_order);
        blocked.extend(ra.iter().filter(|c| !c.polynomial.is_zero()).map(|c| c.polynomial.primitive()));
    }
    let mut seen: HashSet<MomentPolynomial> = HashSet::new();
    for c in cands {
        if c.polynomial.is_zero() {
            report.zero += 1;
            continue;
        }
        let key = c.polynomial.primitive();
        if blocked.contains(&key) {
            report.ra_overlap += 1;
            continue;
        }
        if !seen.insert(key) {
            report.duplicate += 1;
            continue;
        }
        report.candidates.push(c);
    }
    report
}

/// The candidate polynomials of [`generate`].
pub fn generate_all(m: usize, n: usize, model: Model, max_degree: usize, max_order: usize) -> Vec<MomentPolynomial> {
    generate(m, n, model, max_degree, max_order)
        .candidates
        .into_iter()
        .map(|c| c.polynomial)
        .collect()
}

/// Polynomials compiled against a fixed variable list for fast evaluation
/// of values and gradients.
struct Compiled {
    terms: Vec<(f64, Vec<usize>)>,
}

impl Compiled {
    fn new(poly: &MomentPolynomial, index: &HashMap<MomentSymbol, usize>) -> Option<Self> {
        let mut terms = Vec::with_capacity(poly.num_terms());
        for (mono, c) in poly.terms() {
            let idx: Option<Vec<usize>> = mono.factors().iter().map(|s| index.get(s).copied()).collect();
            terms.push((*c.numer() as f64 / *c.denom() as f64, idx?));
        }
        Some(Self { terms })
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for (c, idx) in &self.terms {
            for j in 0..idx.len() {
                let mut prod = *c;
                for (i, &v) in idx.iter().enumerate() {
                    if i != j {
                        prod *= x[v];
                    }
                }
                out[idx[j]] += prod;
            }
        }
    }
}

/// The variables of a functional-independence test: every moment symbol
/// with total order up to `max_order`.
pub fn moment_symbols(m: usize, n: usize, max_order: usize) -> Vec<MomentSymbol> {
    let idx = multi_indices(m, max_order);
    (0..n)
        .flat_map(|ch| idx.iter().map(move |p| MomentSymbol::new(ch, p.clone())))
        .collect()
}

fn numerical_rank(rows: &[Vec<f64>], cols: usize, tolerance: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mat = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
    let sv = mat.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tolerance * top).count()
}

/// Greedy functional-independence selection. At each of `trials` random
/// points of moment space (entries uniform in [-1, 1]) the Jacobian of the
/// kept polynomials is formed; a candidate is kept when appending its
/// gradient raises the numerical rank at a majority of the points. Rank is
/// tested point by point, since functional dependence shows up as a rank
/// deficiency at every point but not in gradients stacked across points.
pub fn independent_subset(
    polys: &[MomentPolynomial],
    m: usize,
    n: usize,
    max_order: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Vec<usize> {
    let vars = moment_symbols(m, n, max_order);
    let index: HashMap<MomentSymbol, usize> = vars.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..trials.max(1))
        .map(|_| (0..vars.len()).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let mut kept_rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); points.len()];
    let mut kept = Vec::new();
    for (ci, poly) in polys.iter().enumerate() {
        let Some(compiled) = Compiled::new(poly, &index) else {
            continue;
        };
        if poly.is_zero() {
            continue;
        }
        let grads: Vec<Vec<f64>> = points
            .par_iter()
            .map(|x| {
                let mut g = vec![0.0; vars.len()];
                compiled.gradient(x, &mut g);
                g
            })
            .collect();
        let full: usize = grads
            .par_iter()
            .zip(kept_rows.par_iter())
            .filter(|(g, rows)| {
                let mut all = (*rows).clone();
                all.push((*g).clone());
                numerical_rank(&all, vars.len(), tolerance) == all.len()
            })
            .count();
        if 2 * full > points.len() {
            kept.push(ci);
            for (rows, g) in kept_rows.iter_mut().zip(grads) {
                rows.push(g);
            }
        }
    }
    kept
}

/// [`independent_subset`] packaged as an [`InvariantSet`].
/// The set takes its normalization from `model`.
#[allow(clippy::too_many_arguments)]
pub fn independence_filter(
    polys: &[MomentPolynomial],
    m: usize,
    n: usize,
    model: Model,
    max_order: usize,
    trials: usize,
    tolerance: f64,
) -> InvariantSet {
    let kept = independent_subset(polys, m, n, max_order, trials, tolerance, DEFAULT_SEED);
    let members: Vec<MomentPolynomial> = kept.into_iter().map(|i| polys[i].clone()).collect();
    let degree = members.iter().map(MomentPolynomial::degree).max().unwrap_or(0);
    InvariantSet::new(m, n, model, degree, max_order, Normalization::for_model(model), members)
}

/// Generation plus independence filtering with the default trial count,
/// tolerance and seed. RA sets are sum-normalized, TR sets are not.
pub fn build_set(m: usize, n: usize, model: Model, max_degree: usize, max_order: usize) -> (GenerationReport, InvariantSet) {
    build_set_with(m, n, model, max_degree, max_order, DEFAULT_TRIALS, DEFAULT_TOLERANCE, DEFAULT_SEED)
}

/// [`build_set`] with explicit filter parameters.
#[allow(clippy::too_many_arguments)]
pub fn build_set_with(
    m: usize,
    n: usize,
    model: Model,
    max_degree: usize,
    max_order: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> (GenerationReport, InvariantSet) {
    let report = generate(m, n, model, max_degree, max_order);
    let polys: Vec<MomentPolynomial> = report.candidates.iter().map(|c| c.polynomial.clone()).collect();
    let kept = independent_subset(&polys, m, n, max_order, trials, tolerance, seed);
    let mut members = Vec::with_capacity(kept.len());
    let mut sources = Vec::with_capacity(kept.len());
    for i in kept {
        members.push(polys[i].clone());
        sources.push(report.candidates[i].source());
    }
    let set = InvariantSet::new(m, n, model, max_degree, max_order, Normalization::for_model(model), members).with_sources(sources);
    (report, set)
}
