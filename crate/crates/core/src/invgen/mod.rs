//! Symbolic generation of moment invariants.
//!
//! An invariant is the product of an operator polynomial `D` built from the
//! gradient products `phi` and `psi`, and a primitive polynomial `P` built
//! from the channel products `Gamma` and `Lambda`, integrated against
//! Gaussian-Hermite kernels over `K` points. Expanding both and collecting
//! per-point factors turns it into a degree-`K` polynomial in moments.

mod atoms;
mod expand;
mod generate;
mod poly;
mod set;

pub use atoms::{
    enumerate_operator_products, enumerate_primitive_products, operator_atoms, parse_operator_product,
    parse_primitive_product, Model, OperatorAtom, OperatorProduct, PrimitiveAtom, PrimitiveProduct,
};
pub use expand::expand_invariant;
pub use generate::{
    build_set, build_set_with, generate, generate_all, independence_filter, independent_subset, moment_symbols, Candidate,
    GenerationReport, DEFAULT_SEED, DEFAULT_TOLERANCE, DEFAULT_TRIALS,
};
pub use poly::{eta, int, Coeff, MomentPolynomial, MomentSymbol, Monomial};
pub use set::{load_invariant_set, save_invariant_set, InvariantSet, Normalization};

use crate::error::Result;

/// Expands a single operator/primitive pair given in text form, for example
/// `("psi12", "Lambda12")`, and wraps it as a one-member set.
pub fn single_pair_set(operator: &str, primitive: &str, coord_dim: usize, channel_dim: usize) -> Result<InvariantSet> {
    let d = parse_operator_product(operator, coord_dim)?;
    let p = parse_primitive_product(primitive, channel_dim)?;
    let poly = expand_invariant(&d, &p, coord_dim, channel_dim)?;
    let model = if p.has_gamma() { Model::Tr } else { Model::Ra };
    Ok(InvariantSet::new(
        coord_dim,
        channel_dim,
        model,
        p.points().len(),
        d.order(),
        Normalization::for_model(model),
        vec![poly],
    )
    .with_sources(vec![format!("{d} | {p}")]))
}
