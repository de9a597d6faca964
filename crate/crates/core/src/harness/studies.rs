//! End-to-end experiment drivers: stability (MRE), classification and
//! detection on synthetic data.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::distance::{mre, nn_classify, MreReport, MRE_FLOOR};
use super::scan::{rank_matches, sliding_window_scan, DetectionResult};
use super::synth::{random_vortex_street, rms_magnitude, superpose, synth_texture, vortex_template, StreetConfig, Vortex};
use crate::error::{Error, Result};
use crate::field::{
    add_gaussian_noise, apply_outer_affine, random_ra_transform, rotate_spatial_2d, rotation_2d, Interpolation,
    MultiChannelField, NoiseClamp, RaRanges,
};
use crate::inveval::{preprocess, CompiledSet, FeatureOptions};
use crate::invgen::InvariantSet;
use crate::moments::{compute_moments, MomentTensor};

/// Random color-image stability and classification study.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbStudyConfig {
    pub side: usize,
    pub textures: usize,
    /// Versions per texture; version `j` is rotated by `j·2π/versions`
    /// and then recolored by a random outer affine map.
    pub versions: usize,
    pub sigma: f64,
    /// Gaussian noise level for the noisy classification run.
    pub noise_sigma: f64,
    pub ranges: RaRanges,
    pub seed: u64,
}

impl Default for RgbStudyConfig {
    fn default() -> Self {
        Self {
            side: 129,
            textures: 10,
            versions: 12,
            sigma: 25.0,
            noise_sigma: 0.01,
            ranges: RaRanges::default(),
            seed: 2023,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgbStudyReport {
    pub mre: MreReport,
    pub accuracy_clean: f64,
    pub accuracy_noisy: f64,
    pub feature_len: usize,
}

/// Rotation by `theta` followed by a random outer affine map.
pub fn ra_version(field: &MultiChannelField, theta: f64, ranges: &RaRanges, seed: u64) -> Result<MultiChannelField> {
    let t = random_ra_transform(2, field.channel_dim(), ranges, seed)?;
    let rotated = rotate_spatial_2d(field, theta, Interpolation::Bilinear)?;
    apply_outer_affine(&rotated, &t.a_out, &t.t_out)
}

pub fn rgb_study(set: &InvariantSet, cfg: &RgbStudyConfig) -> Result<RgbStudyReport> {
    let compiled = CompiledSet::new(set)?;
    let opts = FeatureOptions::masked(cfg.sigma);
    let textures: Vec<MultiChannelField> = (0..cfg.textures)
        .map(|i| synth_texture(cfg.side, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let reference: Vec<Vec<f64>> = textures
        .par_iter()
        .map(|t| compiled.features(t, &opts).map(|f| f.values))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.textures).flat_map(|i| (0..cfg.versions).map(move |j| (i, j))).collect();
    let versions: Vec<(usize, MultiChannelField, MultiChannelField)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let theta = j as f64 * std::f64::consts::TAU / cfg.versions as f64;
            let seed = cfg.seed ^ ((i as u64) << 32 | j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let clean = ra_version(&textures[i], theta, &cfg.ranges, seed)?;
            let noisy = add_gaussian_noise(&clean, cfg.noise_sigma, seed ^ 0x5a5a, NoiseClamp::Unbounded)?;
            Ok((i, clean, noisy))
        })
        .collect::<Result<_>>()?;
    let clean: Vec<Vec<f64>> = versions
        .par_iter()
        .map(|(_, f, _)| compiled.features(f, &opts).map(|x| x.values))
        .collect::<Result<_>>()?;
    let noisy: Vec<Vec<f64>> = versions
        .par_iter()
        .map(|(_, _, f)| compiled.features(f, &opts).map(|x| x.values))
        .collect::<Result<_>>()?;
    let mut grouped = vec![Vec::new(); cfg.textures];
    for ((i, _, _), v) in versions.iter().zip(&clean) {
        grouped[*i].push(v.clone());
    }
    let report = mre(&reference, &grouped)?;
    let train: Vec<(String, Vec<f64>)> = reference.iter().enumerate().map(|(i, v)| (i.to_string(), v.clone())).collect();
    let truth: Vec<String> = versions.iter().map(|(i, _, _)| i.to_string()).collect();
    let accuracy_clean = nn_classify(&train, &clean, Some(&truth))?.accuracy.unwrap_or(0.0);
    let accuracy_noisy = nn_classify(&train, &noisy, Some(&truth))?.accuracy.unwrap_or(0.0);
    Ok(RgbStudyReport {
        mre: report,
        accuracy_clean,
        accuracy_noisy,
        feature_len: reference.first().map_or(0, Vec::len),
    })
}

/// Vortex detection on a random vortex street.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionStudyConfig {
    pub street: StreetConfig,
    pub window: usize,
    pub sigma: f64,
    pub stride: usize,
    pub top_k: usize,
    /// Chebyshev distance within which a ranked point counts as a hit.
    pub hit_radius: usize,
    /// Noise standard deviation as a fraction of the RMS vector magnitude.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for DetectionStudyConfig {
    fn default() -> Self {
        Self {
            street: StreetConfig::default(),
            window: 33,
            sigma: 9.0,
            stride: 2,
            top_k: 240,
            hit_radius: 3,
            noise_fraction: 0.25,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRun {
    pub result: DetectionResult,
    /// Per planted vortex: rank (zero-based) of the first hit, if any.
    pub first_hit: Vec<Option<usize>>,
}

impl DetectionRun {
    pub fn all_found(&self) -> bool {
        self.first_hit.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionStudyReport {
    pub vortices: Vec<Vortex>,
    pub clean: DetectionRun,
    pub noisy: DetectionRun,
}

fn score_hits(result: &DetectionResult, vortices: &[Vortex], radius: usize) -> Vec<Option<usize>> {
    vortices
        .iter()
        .map(|v| {
            result.ranked.iter().position(|(p, _)| {
                let dr = (p[0] as f64 - v.center[0]).abs();
                let dc = (p[1] as f64 - v.center[1]).abs();
                dr.max(dc) <= radius as f64
            })
        })
        .collect()
}

pub fn vortex_detection_study(set: &InvariantSet, cfg: &DetectionStudyConfig) -> Result<DetectionStudyReport> {
    let (field, vortices) = random_vortex_street(&cfg.street, cfg.seed)?;
    let compiled = CompiledSet::new(set)?;
    let opts = FeatureOptions::masked(cfg.sigma);
    let template = vortex_template(cfg.window, cfg.street.radius, cfg.street.aspect)?;
    let tf = compiled.features(&template, &opts)?.values;
    let run = |f: &MultiChannelField| -> Result<DetectionRun> {
        let raster = sliding_window_scan(f, &compiled, cfg.window, &opts, cfg.stride)?;
        let result = rank_matches(&raster, &tf, cfg.top_k)?;
        let first_hit = score_hits(&result, &vortices, cfg.hit_radius);
        Ok(DetectionRun { result, first_hit })
    };
    let clean = run(&field)?;
    let noise = cfg.noise_fraction * rms_magnitude(&field);
    let noisy_field = add_gaussian_noise(&field, noise, cfg.seed ^ 0xdead, NoiseClamp::Unbounded)?;
    let noisy = run(&noisy_field)?;
    Ok(DetectionStudyReport { vortices, clean, noisy })
}

/// Vector-field templates: windows of an analytic vortex flow, kept in
/// analytic form so rotated versions can be resampled either by
/// interpolation or exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTemplate {
    pub side: usize,
    pub vortices: Vec<Vortex>,
    pub background: [f64; 2],
}

impl FlowTemplate {
    /// The `side x side` window of a flow with its top-left sample at `origin`.
    pub fn crop(vortices: &[Vortex], background: [f64; 2], origin: [usize; 2], side: usize) -> Self {
        let vortices = vortices
            .iter()
            .map(|v| Vortex {
                center: [v.center[0] - origin[0] as f64, v.center[1] - origin[1] as f64],
                ..v.clone()
            })
            .collect();
        Self {
            side,
            vortices,
            background,
        }
    }

    /// `count` windows at random positions of a random vortex street.
    pub fn from_street(cfg: &StreetConfig, count: usize, side: usize, seed: u64) -> Result<Vec<Self>> {
        if cfg.extent.iter().any(|&e| e < side) {
            return Err(Error::WindowTooLarge {
                window: side,
                extent: cfg.extent.to_vec(),
            });
        }
        let (_, vortices) = random_vortex_street(cfg, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e4d);
        Ok((0..count)
            .map(|_| {
                let origin = [
                    rng.random_range(0..=cfg.extent[0] - side),
                    rng.random_range(0..=cfg.extent[1] - side),
                ];
                Self::crop(&vortices, cfg.background, origin, side)
            })
            .collect())
    }

    /// Wake used for stability templates: denser and larger than the
    /// detection street so most windows hold at least one core.
    pub fn template_street() -> StreetConfig {
        StreetConfig {
            extent: [80, 400],
            count: 10,
            radius: 5.0,
            ..StreetConfig::default()
        }
    }

    pub fn field(&self) -> Result<MultiChannelField> {
        superpose([self.side, self.side], &self.vortices, self.background)
    }

    /// The template after rotating positions by `theta_in` and vectors by
    /// `theta_out`, resampled by bilinear interpolation of a padded copy so
    /// the inscribed disc never reads outside the synthesized data.
    pub fn rotated(&self, theta_in: f64, theta_out: f64) -> Result<MultiChannelField> {
        let pad = self.side / 2 + 2;
        let big = self.side + 2 * pad;
        let shift = pad as f64;
        let moved: Vec<Vortex> = self
            .vortices
            .iter()
            .map(|v| Vortex {
                center: [v.center[0] + shift, v.center[1] + shift],
                ..v.clone()
            })
            .collect();
        let wide = superpose([big, big], &moved, self.background)?;
        let spun = rotate_spatial_2d(&wide, theta_in, Interpolation::Bilinear)?;
        let turned = apply_outer_affine(&spun, &rotation_2d(theta_out), &DVector::zeros(2))?;
        turned.window(&[pad, pad], &[self.side, self.side])
    }
}

/// Features of flow templates and their rotated versions at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRun {
    pub sigma: f64,
    pub angles: Vec<f64>,
    pub reference: Vec<Vec<f64>>,
    /// `versions[i][j]`: template `i` rotated to angle `j` by bilinear resampling.
    pub versions: Vec<Vec<Vec<f64>>>,
    /// Same layout, rotated versions sampled directly from the analytic flow.
    pub exact: Vec<Vec<Vec<f64>>>,
}

impl StabilityRun {
    pub fn mre(&self) -> Result<MreReport> {
        mre(&self.reference, &self.versions)
    }

    pub fn exact_mre(&self) -> Result<MreReport> {
        mre(&self.reference, &self.exact)
    }

    /// MRE over the angles whose index passes `keep`.
    pub fn mre_where<F: Fn(usize) -> bool>(&self, keep: F) -> Result<MreReport> {
        let subset: Vec<Vec<Vec<f64>>> = self
            .versions
            .iter()
            .map(|vs| vs.iter().enumerate().filter(|(j, _)| keep(*j)).map(|(_, v)| v.clone()).collect())
            .collect();
        mre(&self.reference, &subset)
    }

    /// Mean relative error (percent) per angle over templates and invariants.
    pub fn per_angle_error(&self) -> Vec<f64> {
        per_angle(&self.reference, &self.versions)
    }

    pub fn per_angle_exact_error(&self) -> Vec<f64> {
        per_angle(&self.reference, &self.exact)
    }

    /// Angles where interpolation, rather than the lattice itself, causes
    /// most of the error: the bilinear error exceeds `factor` times the
    /// error of exact sampling.
    pub fn resampling_dominated(&self, factor: f64) -> Vec<bool> {
        self.per_angle_error()
            .iter()
            .zip(self.per_angle_exact_error())
            .map(|(b, e)| *b > factor * e)
            .collect()
    }
}

fn per_angle(reference: &[Vec<f64>], versions: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let count = versions.first().map_or(0, Vec::len);
    (0..count)
        .map(|j| {
            let mut acc = 0.0;
            let mut n = 0usize;
            for (r, vs) in reference.iter().zip(versions) {
                for (a, b) in r.iter().zip(&vs[j]) {
                    if a.abs() >= MRE_FLOOR {
                        acc += (b - a).abs() / a.abs();
                        n += 1;
                    }
                }
            }
            100.0 * acc / n.max(1) as f64
        })
        .collect()
}

/// Relative L2 difference, inside the inscribed disc, between the bilinear
/// rotation and the exactly synthesized rotation of a template.
pub fn resampling_error(template: &FlowTemplate, theta: f64) -> Result<f64> {
    let approx = template.rotated(theta, theta)?;
    let exact = template.exact_rotation(theta)?;
    let disc = crate::field::inscribed_disc(approx.extent());
    let (mut num, mut den) = (0.0, 0.0);
    for (s, inside) in disc.iter().enumerate() {
        if *inside {
            for (a, e) in approx.sample(s).iter().zip(exact.sample(s)) {
                num += (a - e) * (a - e);
                den += e * e;
            }
        }
    }
    Ok((num / den.max(1e-300)).sqrt())
}

impl FlowTemplate {
    /// The special-TR rotation by `theta` sampled directly from the analytic model.
    pub fn exact_rotation(&self, theta: f64) -> Result<MultiChannelField> {
        let c = (self.side as f64 - 1.0) / 2.0;
        let (s, co) = theta.sin_cos();
        let vortices: Vec<Vortex> = self
            .vortices
            .iter()
            .map(|v| {
                let (dx, dy) = (v.center[0] - c, v.center[1] - c);
                // R A Rᵀ keeps the outer map attached to the rotated frame.
                let outer = v.outer.map(|a| {
                    let ra = [
                        [co * a[0][0] - s * a[1][0], co * a[0][1] - s * a[1][1]],
                        [s * a[0][0] + co * a[1][0], s * a[0][1] + co * a[1][1]],
                    ];
                    [
                        [ra[0][0] * co - ra[0][1] * s, ra[0][0] * s + ra[0][1] * co],
                        [ra[1][0] * co - ra[1][1] * s, ra[1][0] * s + ra[1][1] * co],
                    ]
                });
                Vortex {
                    center: [c + co * dx - s * dy, c + s * dx + co * dy],
                    orientation: v.orientation + theta,
                    outer,
                    ..v.clone()
                }
            })
            .collect();
        let b = self.background;
        superpose([self.side, self.side], &vortices, [co * b[0] - s * b[1], s * b[0] + co * b[1]])
    }
}

/// Features of `templates` and of their special-TR versions at
/// `j·2π/versions`, `j = 1..=versions`, for each scale in `sigmas`.
pub fn special_tr_stability(
    set: &InvariantSet,
    templates: &[FlowTemplate],
    versions: usize,
    sigmas: &[f64],
) -> Result<Vec<StabilityRun>> {
    let compiled = CompiledSet::new(set)?;
    let angles: Vec<f64> = (1..=versions).map(|j| j as f64 * std::f64::consts::TAU / versions as f64).collect();
    let base: Vec<MultiChannelField> = templates.iter().map(FlowTemplate::field).collect::<Result<_>>()?;
    let rotated: Vec<Vec<(MultiChannelField, MultiChannelField)>> = templates
        .par_iter()
        .map(|t| {
            angles
                .iter()
                .map(|&a| Ok((t.rotated(a, a)?, t.exact_rotation(a)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    sigmas
        .iter()
        .map(|&sigma| {
            let opts = FeatureOptions::masked(sigma);
            let feat = |f: &MultiChannelField| compiled.features(f, &opts).map(|v| v.values);
            let reference = base.iter().map(feat).collect::<Result<Vec<_>>>()?;
            let pairs = rotated
                .par_iter()
                .map(|vs| vs.iter().map(|(b, e)| Ok((feat(b)?, feat(e)?))).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let (versions, exact) = pairs.into_iter().map(|vs| vs.into_iter().unzip()).unzip();
            Ok(StabilityRun {
                sigma,
                angles: angles.clone(),
                reference,
                versions,
                exact,
            })
        })
        .collect()
}

/// Linear invariants of special TR from first- and third-order moments:
/// divergence- and curl-like combinations `D1, C1, D3, C3`.
pub fn special_tr_baseline(t: &MomentTensor) -> Result<Vec<f64>> {
    if t.coord_dim() != 2 || t.channel_dim() != 2 || t.max_order() < 3 {
        return Err(Error::DimMismatch("baseline needs a 2-D, 2-channel tensor of order >= 3".into()));
    }
    let g = |n: usize, p: [usize; 2]| t.get(n, &p).expect("order checked");
    let w = |n: usize| [g(n, [3, 0]) + g(n, [1, 2]), g(n, [2, 1]) + g(n, [0, 3])];
    let (w1, w2) = (w(0), w(1));
    Ok(vec![
        g(0, [1, 0]) + g(1, [0, 1]),
        g(1, [1, 0]) - g(0, [0, 1]),
        w1[0] + w2[1],
        w2[0] - w1[1],
    ])
}

/// All moments of order 1 and 2, which are not invariant to anything.
pub fn raw_moment_baseline(t: &MomentTensor) -> Vec<f64> {
    let mut out = Vec::new();
    for n in 0..t.channel_dim() {
        for p in t.multi_indices() {
            let o: usize = p.iter().sum();
            if (1..=2).contains(&o) {
                out.push(t.get(n, p).expect("own index"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleErrorRow {
    pub epsilon: f64,
    pub tr_accuracy: f64,
    pub special_tr_accuracy: f64,
    pub raw_accuracy: f64,
}

/// Classification of templates against versions with mismatched rotation
/// angles `θ_out = θ_in (1 + ε)`, comparing TR invariants with the
/// special-TR and raw-moment baselines.
pub fn angle_error_study(
    set_tr: &InvariantSet,
    templates: &[FlowTemplate],
    versions: usize,
    epsilons: &[f64],
    sigma: f64,
) -> Result<Vec<AngleErrorRow>> {
    let compiled = CompiledSet::new(set_tr)?;
    let opts = FeatureOptions::masked(sigma);
    let order = compiled.max_order().max(3);
    let describe = |f: &MultiChannelField| -> Result<[Vec<f64>; 3]> {
        let tr = compiled.features(f, &opts)?.values;
        let t = compute_moments(&preprocess(f, &opts)?, order, sigma)?;
        Ok([tr, special_tr_baseline(&t)?, raw_moment_baseline(&t)])
    };
    let train: Vec<[Vec<f64>; 3]> = templates
        .iter()
        .map(|t| describe(&t.field()?))
        .collect::<Result<_>>()?;
    let labelled = |k: usize| -> Vec<(String, Vec<f64>)> {
        train.iter().enumerate().map(|(i, f)| (i.to_string(), f[k].clone())).collect()
    };
    epsilons
        .iter()
        .map(|&eps| {
            let jobs: Vec<(usize, f64)> = (0..templates.len())
                .flat_map(|i| (1..=versions).map(move |j| (i, j as f64 * std::f64::consts::TAU / versions as f64)))
                .collect();
            let feats: Vec<[Vec<f64>; 3]> = jobs
                .par_iter()
                .map(|&(i, a)| describe(&templates[i].rotated(a, a * (1.0 + eps))?))
                .collect::<Result<_>>()?;
            let truth: Vec<String> = jobs.iter().map(|(i, _)| i.to_string()).collect();
            let acc = |k: usize| -> Result<f64> {
                let test: Vec<Vec<f64>> = feats.iter().map(|f| f[k].clone()).collect();
                Ok(nn_classify(&labelled(k), &test, Some(&truth))?.accuracy.unwrap_or(0.0))
            };
            Ok(AngleErrorRow {
                epsilon: eps,
                tr_accuracy: acc(0)?,
                special_tr_accuracy: acc(1)?,
                raw_accuracy: acc(2)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quarter_turn_resampling_is_exact() {
        let t = FlowTemplate::from_street(&FlowTemplate::template_street(), 1, 21, 3).unwrap().remove(0);
        let e = resampling_error(&t, FRAC_PI_2).unwrap();
        assert!(e < 1e-12, "{e}");
        assert!(resampling_error(&t, 0.3).unwrap() > 1e-6);
    }

    #[test]
    fn special_tr_baseline_is_rotation_invariant() {
        let t = FlowTemplate::from_street(&FlowTemplate::template_street(), 1, 25, 5).unwrap().remove(0);
        let opts = FeatureOptions::masked(4.0);
        let a = compute_moments(&preprocess(&t.field().unwrap(), &opts).unwrap(), 3, 4.0).unwrap();
        let b = compute_moments(&preprocess(&t.rotated(FRAC_PI_2, FRAC_PI_2).unwrap(), &opts).unwrap(), 3, 4.0).unwrap();
        let (fa, fb) = (special_tr_baseline(&a).unwrap(), special_tr_baseline(&b).unwrap());
        for (x, y) in fa.iter().zip(&fb) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-6), "{x} vs {y}");
        }
    }
}
