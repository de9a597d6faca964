//! Sliding-window feature scans and template ranking.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::distance::chi_square_distance;
use crate::error::{Error, Result};
use crate::field::{save_field, FieldFormat, MultiChannelField};
use crate::inveval::{CompiledSet, FeatureOptions};

/// Features at every scanned window center. `None` marks windows whose
/// features are undefined (for example a vanishing normalization sum).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRaster {
    pub window: usize,
    pub stride: usize,
    /// Scanned center coordinates along each axis.
    pub centers: Vec<Vec<usize>>,
    /// Row-major over `centers`.
    pub features: Vec<Option<Vec<f64>>>,
}

impl FeatureRaster {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.centers.iter().map(Vec::len).collect()
    }

    /// Grid position of the `i`-th scanned center.
    pub fn position(&self, mut i: usize) -> Vec<usize> {
        let mut pos = vec![0; self.centers.len()];
        for (slot, axis) in pos.iter_mut().zip(&self.centers).rev() {
            *slot = axis[i % axis.len()];
            i /= axis.len();
        }
        pos
    }
}

/// Centers whose full window fits in the field, every `stride` samples.
pub fn valid_centers(extent: &[usize], window: usize, stride: usize) -> Result<Vec<Vec<usize>>> {
    if window % 2 == 0 || window == 0 {
        return Err(Error::param(format!("window must be odd, got {window}")));
    }
    if stride == 0 {
        return Err(Error::param("stride must be at least 1"));
    }
    if extent.iter().any(|&e| e < window) {
        return Err(Error::WindowTooLarge {
            window,
            extent: extent.to_vec(),
        });
    }
    let half = window / 2;
    Ok(extent
        .iter()
        .map(|&e| (half..e - half).step_by(stride).collect())
        .collect())
}

/// Feature vector of the `window`-sided neighbourhood of every valid center.
pub fn sliding_window_scan(
    field: &MultiChannelField,
    set: &CompiledSet,
    window: usize,
    opts: &FeatureOptions,
    stride: usize,
) -> Result<FeatureRaster> {
    let centers = valid_centers(field.extent(), window, stride)?;
    let total: usize = centers.iter().map(Vec::len).product();
    let mut raster = FeatureRaster {
        window,
        stride,
        centers,
        features: Vec::new(),
    };
    let half = window / 2;
    let size = vec![window; field.coord_dim()];
    raster.features = (0..total)
        .into_par_iter()
        .map(|i| {
            let origin: Vec<usize> = raster.position(i).iter().map(|c| c - half).collect();
            let patch = field.window(&origin, &size)?;
            match set.features(&patch, opts) {
                Ok(fv) => Ok(Some(fv.values)),
                Err(Error::DegenerateNormalization { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(raster)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// `(grid position, distance)`, distances non-decreasing.
    pub ranked: Vec<(Vec<usize>, f64)>,
    pub window: usize,
    pub template: Vec<f64>,
}

/// Chi-square distance from every scanned center to `template`; undefined
/// features count as infinitely far.
pub fn distance_map(raster: &FeatureRaster, template: &[f64]) -> Result<Vec<f64>> {
    raster
        .features
        .iter()
        .map(|f| match f {
            Some(v) => chi_square_distance(v, template),
            None => Ok(f64::INFINITY),
        })
        .collect()
}

/// The `k` centers nearest to `template`, ties broken by row-major position.
pub fn rank_matches(raster: &FeatureRaster, template: &[f64], k: usize) -> Result<DetectionResult> {
    if k > raster.len() {
        return Err(Error::KTooLarge {
            k,
            available: raster.len(),
        });
    }
    let dist = distance_map(raster, template)?;
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    let ranked = order
        .into_iter()
        .take(k)
        .map(|i| (raster.position(i), dist[i]))
        .collect();
    Ok(DetectionResult {
        ranked,
        window: raster.window,
        template: template.to_vec(),
    })
}

/// Writes `rank,row,col,distance` (one-based rank; 2-D rasters).
pub fn write_detection_csv<W: Write>(result: &DetectionResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::param(format!("CSV write failed: {e}"));
    w.write_record(["rank", "row", "col", "distance"]).map_err(err)?;
    for (r, (pos, d)) in result.ranked.iter().enumerate() {
        let row = pos.first().copied().unwrap_or(0);
        let col = pos.get(1).copied().unwrap_or(0);
        w.write_record(&[(r + 1).to_string(), row.to_string(), col.to_string(), format!("{d:e}")])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<detection csv>", e))
}

/// Grayscale heatmap of a 2-D distance map, nearest match white and
/// undefined or farthest entries black.
pub fn distance_heatmap(raster: &FeatureRaster, template: &[f64]) -> Result<MultiChannelField> {
    let shape = raster.shape();
    if shape.len() != 2 {
        return Err(Error::DimMismatch("heatmaps need a 2-D scan".into()));
    }
    let dist = distance_map(raster, template)?;
    let finite: Vec<f64> = dist.iter().copied().filter(|d| d.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let data = dist
        .iter()
        .map(|&d| if d.is_finite() { 1.0 - (d - lo) / span } else { 0.0 })
        .collect();
    let padded = shape.iter().map(|&s| s.max(2)).collect();
    MultiChannelField::new(padded, 1, pad_to_min_two(&shape, data))
}

// A raster with a single scanned row or column is widened to two so it
// forms a valid field; the copy repeats the only row/column.
fn pad_to_min_two(shape: &[usize], data: Vec<f64>) -> Vec<f64> {
    if shape.iter().all(|&s| s >= 2) {
        return data;
    }
    let (r, c) = (shape[0], shape[1]);
    let (r2, c2) = (r.max(2), c.max(2));
    let mut out = Vec::with_capacity(r2 * c2);
    for i in 0..r2 {
        for j in 0..c2 {
            out.push(data[(i.min(r - 1)) * c + j.min(c - 1)]);
        }
    }
    out
}

pub fn save_heatmap(raster: &FeatureRaster, template: &[f64], path: &Path) -> Result<()> {
    save_field(&distance_heatmap(raster, template)?, path, FieldFormat::Image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invgen::single_pair_set;
    use crate::invgen::{InvariantSet, Model, Normalization};

    fn tr_set() -> InvariantSet {
        let a = single_pair_set("phi12", "Gamma12", 2, 2).unwrap();
        let b = single_pair_set("phi12^2", "Gamma12", 2, 2).unwrap();
        InvariantSet::new(2, 2, Model::Tr, 2, 2, Normalization::None, vec![a.members[0].clone(), b.members[0].clone()])
    }

    fn swirl(extent: [usize; 2], cx: f64, cy: f64) -> MultiChannelField {
        MultiChannelField::from_fn(extent.to_vec(), 2, |x, o| {
            let (dx, dy) = (x[0] - cx, x[1] - cy);
            let g = (-(dx * dx + dy * dy) / 8.0).exp();
            o[0] = -dy * g + 0.1 * dx;
            o[1] = dx * g;
        })
        .unwrap()
    }

    #[test]
    fn center_count_matches_extent_arithmetic() {
        let c = valid_centers(&[80, 640], 65, 1).unwrap();
        assert_eq!(c[0].len() * c[1].len(), (80 - 64) * (640 - 64));
        assert!(matches!(valid_centers(&[10, 10], 11, 1), Err(Error::WindowTooLarge { .. })));
        assert!(valid_centers(&[10, 10], 4, 1).is_err());
    }

    #[test]
    fn uniform_field_gives_identical_features() {
        let f = MultiChannelField::from_fn(vec![15, 17], 2, |_, o| {
            o[0] = 0.3;
            o[1] = -1.0;
        })
        .unwrap();
        let set = CompiledSet::new(&tr_set()).unwrap();
        let r = sliding_window_scan(&f, &set, 7, &FeatureOptions::new(2.0), 2).unwrap();
        let first = r.features[0].clone();
        assert!(r.features.iter().all(|x| *x == first));
    }

    #[test]
    fn planted_template_ranks_first() {
        let template = swirl([9, 9], 4.0, 4.0);
        let mut field = MultiChannelField::from_fn(vec![25, 31], 2, |x, o| {
            o[0] = (0.3 * x[0]).sin() * 0.2;
            o[1] = (0.2 * x[1]).cos() * 0.2;
        })
        .unwrap();
        field.paste(&template, &[10, 14]).unwrap();
        let set = CompiledSet::new(&tr_set()).unwrap();
        let opts = FeatureOptions::new(2.0);
        let tf = set.features(&template, &opts).unwrap();
        let r = sliding_window_scan(&field, &set, 9, &opts, 1).unwrap();
        let best = rank_matches(&r, &tf.values, 1).unwrap();
        assert_eq!(best.ranked[0].0, vec![14, 18]);
        assert_eq!(best.ranked[0].1, 0.0);
        let all = rank_matches(&r, &tf.values, r.len()).unwrap();
        assert!(all.ranked.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(matches!(rank_matches(&r, &tf.values, r.len() + 1), Err(Error::KTooLarge { .. })));
    }

    #[test]
    fn detection_csv_layout() {
        let res = DetectionResult {
            ranked: vec![(vec![3, 4], 0.5)],
            window: 3,
            template: vec![],
        };
        let mut buf = Vec::new();
        write_detection_csv(&res, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "rank,row,col,distance\n1,3,4,5e-1\n");
    }
}
