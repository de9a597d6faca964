//! Benchmark harness: distances, MRE, nearest-neighbour classification,
//! sliding-window detection, synthetic data and the experiment drivers.

mod distance;
mod scan;
mod studies;
mod synth;

pub use distance::{chi_square_distance, mre, nearest, nn_classify, Classification, MreReport, CHI_EPS, MRE_FLOOR};
pub use scan::{
    distance_heatmap, distance_map, rank_matches, save_heatmap, sliding_window_scan, valid_centers,
    write_detection_csv, DetectionResult, FeatureRaster,
};
pub use studies::{
    angle_error_study, ra_version, raw_moment_baseline, resampling_error, rgb_study, special_tr_baseline, special_tr_stability,
    vortex_detection_study, AngleErrorRow, DetectionRun, DetectionStudyConfig, DetectionStudyReport, FlowTemplate,
    RgbStudyConfig, RgbStudyReport, StabilityRun,
};
pub use synth::{
    mat2, random_vortex_street, rms_magnitude, synth_texture, synth_vortex_field, vortex_template, StreetConfig, Vortex,
};
