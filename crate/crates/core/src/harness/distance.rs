use rayon::prelude::*;

use crate::error::{Error, Result};

/// Guards the denominator of [`chi_square_distance`].
pub const CHI_EPS: f64 = 1e-12;
/// Reference values with smaller magnitude are excluded from [`mre`].
pub const MRE_FLOOR: f64 = 1e-30;

/// `Σ (u_i - v_i)² / (|u_i| + |v_i| + ε)`.
pub fn chi_square_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    Ok(u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b) / (a.abs() + b.abs() + CHI_EPS))
        .sum())
}

/// Per-invariant mean relative error in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct MreReport {
    /// `NaN` where every reference value was below [`MRE_FLOOR`].
    pub per_invariant: Vec<f64>,
    /// Number of (reference, version) pairs skipped per invariant.
    pub excluded: Vec<usize>,
}

impl MreReport {
    /// Largest finite entry.
    pub fn max(&self) -> f64 {
        self.per_invariant.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }
}

/// `transformed[i][j]` is version `j` of reference `i`. Each invariant's MRE
/// is the mean of `|v_ij - v_i| / |v_i|` over all pairs, as a percentage.
pub fn mre(reference: &[Vec<f64>], transformed: &[Vec<Vec<f64>>]) -> Result<MreReport> {
    if reference.len() != transformed.len() {
        return Err(Error::LengthMismatch(reference.len(), transformed.len()));
    }
    let dim = reference.first().map_or(0, Vec::len);
    let mut sums = vec![0.0; dim];
    let mut counts = vec![0usize; dim];
    let mut excluded = vec![0usize; dim];
    for (r, versions) in reference.iter().zip(transformed) {
        if r.len() != dim {
            return Err(Error::LengthMismatch(dim, r.len()));
        }
        for v in versions {
            if v.len() != dim {
                return Err(Error::LengthMismatch(dim, v.len()));
            }
            for k in 0..dim {
                if r[k].abs() < MRE_FLOOR {
                    excluded[k] += 1;
                    continue;
                }
                sums[k] += (v[k] - r[k]).abs() / r[k].abs();
                counts[k] += 1;
            }
        }
    }
    let per_invariant = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { 100.0 * s / c as f64 })
        .collect();
    Ok(MreReport { per_invariant, excluded })
}

/// Index of the chi-square-nearest training vector; ties go to the lowest index.
pub fn nearest(train: &[Vec<f64>], query: &[f64]) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let mut best = (f64::INFINITY, 0);
    for (i, t) in train.iter().enumerate() {
        let d = chi_square_distance(t, query)?;
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub labels: Vec<String>,
    /// Percentage of correct labels when truth was supplied.
    pub accuracy: Option<f64>,
}

/// Nearest-neighbour labels for every test vector. If `truth` is given the
/// accuracy is reported too.
pub fn nn_classify(
    train: &[(String, Vec<f64>)],
    test: &[Vec<f64>],
    truth: Option<&[String]>,
) -> Result<Classification> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let feats: Vec<Vec<f64>> = train.iter().map(|(_, f)| f.clone()).collect();
    let labels: Vec<String> = test
        .par_iter()
        .map(|q| nearest(&feats, q).map(|i| train[i].0.clone()))
        .collect::<Result<_>>()?;
    let accuracy = match truth {
        Some(t) => {
            if t.len() != labels.len() {
                return Err(Error::LengthMismatch(t.len(), labels.len()));
            }
            let hits = labels.iter().zip(t).filter(|(a, b)| a == b).count();
            Some(if labels.is_empty() { 100.0 } else { 100.0 * hits as f64 / labels.len() as f64 })
        }
        None => None,
    };
    Ok(Classification { labels, accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_basics() {
        assert_eq!(chi_square_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let d = chi_square_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-11);
        assert!(matches!(chi_square_distance(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn mre_hand_computed() {
        let r = mre(&[vec![2.0]], &[vec![vec![2.2], vec![1.8]]]).unwrap();
        assert!((r.per_invariant[0] - 10.0).abs() < 1e-12);
        let same = mre(&[vec![3.0, -1.0]], &[vec![vec![3.0, -1.0]]]).unwrap();
        assert_eq!(same.per_invariant, vec![0.0, 0.0]);
    }

    #[test]
    fn mre_skips_zero_references() {
        let r = mre(&[vec![0.0, 1.0]], &[vec![vec![0.5, 1.1]]]).unwrap();
        assert!(r.per_invariant[0].is_nan());
        assert_eq!(r.excluded, vec![1, 0]);
        assert!((r.per_invariant[1] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn classify_identity_and_ties() {
        let train = vec![("a".to_string(), vec![1.0, 0.0]), ("b".to_string(), vec![0.0, 1.0])];
        let test: Vec<Vec<f64>> = train.iter().map(|(_, f)| f.clone()).collect();
        let truth = vec!["a".to_string(), "b".to_string()];
        let c = nn_classify(&train, &test, Some(&truth)).unwrap();
        assert_eq!(c.accuracy, Some(100.0));
        let dup = vec![("x".to_string(), vec![1.0]), ("y".to_string(), vec![1.0])];
        assert_eq!(nn_classify(&dup, &[vec![1.0]], None).unwrap().labels, vec!["x"]);
        assert!(matches!(nn_classify(&[], &[vec![1.0]], None), Err(Error::EmptyTrain)));
    }
}
