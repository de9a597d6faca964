//! Finds the vortices of a synthetic vortex street by scanning RA features
//! and ranking windows by chi-square distance to a vortex template. Pass a
//! path to also write the distance heatmap as PNG.

use mghmi::harness::{vortex_detection_study, DetectionStudyConfig};
use mghmi::invgen::{build_set, Model};

fn main() -> mghmi::Result<()> {
    let (_, set) = build_set(2, 2, Model::Ra, 2, 3);
    let cfg = DetectionStudyConfig::default();
    let r = vortex_detection_study(&set, &cfg)?;
    println!("top {} of the scan, hit radius {}", cfg.top_k, cfg.hit_radius);
    for (i, v) in r.vortices.iter().enumerate() {
        println!(
            "vortex at {:?} (spin {:+}): first hit at rank {:?}, with noise {:?}",
            v.center,
            v.strength,
            r.clean.first_hit[i],
            r.noisy.first_hit[i]
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        use mghmi::harness::{random_vortex_street, save_heatmap, sliding_window_scan, vortex_template};
        use mghmi::inveval::{CompiledSet, FeatureOptions};
        let (field, _) = random_vortex_street(&cfg.street, cfg.seed)?;
        let compiled = CompiledSet::new(&set)?;
        let opts = FeatureOptions::masked(cfg.sigma);
        let tf = compiled.features(&vortex_template(cfg.window, cfg.street.radius, cfg.street.aspect)?, &opts)?;
        let raster = sliding_window_scan(&field, &compiled, cfg.window, &opts, cfg.stride)?;
        save_heatmap(&raster, &tf.values, std::path::Path::new(&path))?;
        println!("heatmap written to {path}");
    }
    Ok(())
}
