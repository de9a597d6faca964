//! Expands the simplest RA invariant of 2-D vector fields, `psi12 | Lambda12`,
//! and checks its relative invariance on a synthetic flow.

use mghmi::field::{apply_outer_affine, rotate_spatial_2d, Interpolation};
use mghmi::harness::{mat2, synth_vortex_field, Vortex};
use mghmi::inveval::{CompiledSet, FeatureOptions};
use mghmi::invgen::single_pair_set;
use nalgebra::DVector;

fn main() -> mghmi::Result<()> {
    let set = single_pair_set("psi12", "Lambda12", 2, 2)?;
    println!("psi12 | Lambda12 = {}", set.members[0]);

    let v = Vortex {
        aspect: 1.5,
        orientation: 0.4,
        ..Vortex::round([14.0, 17.0], 5.0, 1.0)
    };
    let field = synth_vortex_field([33, 33], &[v], [0.1, 0.0])?;
    let a = mat2([[1.2, 0.3], [-0.1, 0.8]]);
    let det = a.determinant();
    let turned = rotate_spatial_2d(&field, std::f64::consts::FRAC_PI_2, Interpolation::Bilinear)?;
    let changed = apply_outer_affine(&turned, &a, &DVector::from_vec(vec![0.5, -0.2]))?;

    let compiled = CompiledSet::new(&set)?;
    let opts = FeatureOptions::new(6.0);
    let before = compiled.raw_field_values(&field, &opts)?[0];
    let after = compiled.raw_field_values(&changed, &opts)?[0];
    println!("value {before:.6e}, after rotation + affine {after:.6e}");
    println!("ratio {:.12}, det(A) = {det:.12}", after / before);
    Ok(())
}
