//! Gaussian-Hermite moments of a color texture, before and after a
//! quarter turn, plus a round trip through the raw field container.

use mghmi::field::{load_field, rotate_spatial_2d, save_field, FieldFormat, Interpolation};
use mghmi::harness::synth_texture;
use mghmi::moments::{compute_moments, sigma_guidance};

fn main() -> mghmi::Result<()> {
    let tex = synth_texture(65, 3)?;
    let sigma = 13.0;
    if let Some(w) = sigma_guidance(tex.extent(), sigma) {
        println!("warning: {w}");
    }
    let t = compute_moments(&tex, 2, sigma)?;
    let q = compute_moments(&rotate_spatial_2d(&tex, std::f64::consts::FRAC_PI_2, Interpolation::Bilinear)?, 2, sigma)?;
    println!("channel  p       moment   after quarter turn");
    for n in 0..3 {
        for p in t.multi_indices() {
            println!("{:7} {:?} {:12.5e} {:12.5e}", n + 1, p, t.get(n, p).unwrap(), q.get(n, p).unwrap());
        }
    }

    let path = std::env::temp_dir().join("mghmi_moments_example.mcf");
    save_field(&tex, &path, FieldFormat::Raw)?;
    let back = load_field(&path, FieldFormat::Raw)?;
    let r = compute_moments(&back, 2, sigma)?;
    let drift = t.values().iter().zip(r.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max moment change after f32 round trip: {drift:.3e}");
    let _ = std::fs::remove_file(path);
    Ok(())
}
