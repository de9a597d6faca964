//! Numeric evaluation of invariant sets and feature extraction.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{circular_mask, inscribed_disc, subtract_channel_mean, subtract_channel_mean_within, MultiChannelField};
use crate::invgen::{InvariantSet, MomentPolynomial, Normalization};
use crate::moments::{compute_moments, MomentTensor};

/// Sums with magnitude below this make sum-normalization undefined.
pub const DEGENERATE_SUM: f64 = 1e-30;

/// A polynomial with every moment symbol resolved to its slot in a tensor
/// layout and coefficients converted to `f64`.
#[derive(Debug, Clone)]
pub struct CompiledPolynomial {
    terms: Vec<(f64, Vec<usize>)>,
}

impl CompiledPolynomial {
    /// Resolves symbols against `layout`, which fixes dims and maximum order.
    pub fn new(poly: &MomentPolynomial, layout: &MomentTensor) -> Result<Self> {
        let mut terms = Vec::with_capacity(poly.num_terms());
        for (mono, c) in poly.terms() {
            let mut idx = Vec::with_capacity(mono.degree());
            for s in mono.factors() {
                if s.orders.len() != layout.coord_dim() || s.channel >= layout.channel_dim() {
                    return Err(Error::DimMismatch(format!(
                        "{s} does not fit a tensor with M = {}, N = {}",
                        layout.coord_dim(),
                        layout.channel_dim()
                    )));
                }
                let pos = layout.position(s.channel, &s.orders).ok_or_else(|| Error::MissingMoment {
                    symbol: s.to_string(),
                    max_order: layout.max_order(),
                })?;
                idx.push(pos);
            }
            terms.push((*c.numer() as f64 / *c.denom() as f64, idx));
        }
        Ok(Self { terms })
    }

    pub fn eval(&self, moments: &MomentTensor) -> f64 {
        let v = moments.values();
        self.terms
            .iter()
            .map(|(c, idx)| idx.iter().fold(*c, |acc, &i| acc * v[i]))
            .sum()
    }
}

/// Value of `poly` at `moments`.
pub fn evaluate(poly: &MomentPolynomial, moments: &MomentTensor) -> Result<f64> {
    Ok(CompiledPolynomial::new(poly, moments)?.eval(moments))
}

/// Preprocessing and kernel options for [`feature_vector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    pub sigma: f64,
    /// Restrict the field to its inscribed disc before mean removal, which
    /// makes lattice-free rotations see the same support.
    pub circular_mask: bool,
}

impl FeatureOptions {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            circular_mask: false,
        }
    }

    pub fn masked(sigma: f64) -> Self {
        Self {
            sigma,
            circular_mask: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub set_id: String,
    pub sigma: f64,
    pub norm: Normalization,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Divides by the sum and drops the last entry, or passes values through.
pub fn normalize(raw: &[f64], norm: Normalization) -> Result<Vec<f64>> {
    match norm {
        Normalization::None => Ok(raw.to_vec()),
        Normalization::DivideBySum => {
            let sum: f64 = raw.iter().sum();
            if !(sum.abs() >= DEGENERATE_SUM) {
                return Err(Error::DegenerateNormalization { sum });
            }
            let mut out: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            out.pop();
            Ok(out)
        }
    }
}

/// An invariant set compiled for one moment layout, for evaluating many
/// fields of the same shape.
#[derive(Debug, Clone)]
pub struct CompiledSet {
    members: Vec<CompiledPolynomial>,
    max_order: usize,
    coord_dim: usize,
    channel_dim: usize,
    norm: Normalization,
    id: String,
}

impl CompiledSet {
    pub fn new(set: &InvariantSet) -> Result<Self> {
        let max_order = set.max_moment_order().max(1);
        let layout = MomentTensor::zeros(set.coord_dim, set.channel_dim, max_order, 1.0);
        let members = set
            .members
            .iter()
            .map(|p| CompiledPolynomial::new(p, &layout))
            .collect::<Result<_>>()?;
        Ok(Self {
            members,
            max_order,
            coord_dim: set.coord_dim,
            channel_dim: set.channel_dim,
            norm: set.norm,
            id: set.id(),
        })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Raw invariant values, before any normalization.
    pub fn raw_values(&self, moments: &MomentTensor) -> Result<Vec<f64>> {
        if moments.coord_dim() != self.coord_dim
            || moments.channel_dim() != self.channel_dim
            || moments.max_order() != self.max_order
        {
            return Err(Error::DimMismatch(format!(
                "tensor (M = {}, N = {}, order {}) does not match set (M = {}, N = {}, order {})",
                moments.coord_dim(),
                moments.channel_dim(),
                moments.max_order(),
                self.coord_dim,
                self.channel_dim,
                self.max_order
            )));
        }
        Ok(self.members.iter().map(|p| p.eval(moments)).collect())
    }

    /// Preprocessed moments of `field` at the order this set needs.
    pub fn moments(&self, field: &MultiChannelField, opts: &FeatureOptions) -> Result<MomentTensor> {
        if field.coord_dim() != self.coord_dim || field.channel_dim() != self.channel_dim {
            return Err(Error::DimMismatch(format!(
                "field has M = {}, N = {} but the set expects M = {}, N = {}",
                field.coord_dim(),
                field.channel_dim(),
                self.coord_dim,
                self.channel_dim
            )));
        }
        compute_moments(&preprocess(field, opts)?, self.max_order, opts.sigma)
    }

    /// Raw invariant values of `field` after preprocessing.
    pub fn raw_field_values(&self, field: &MultiChannelField, opts: &FeatureOptions) -> Result<Vec<f64>> {
        self.raw_values(&self.moments(field, opts)?)
    }

    pub fn features(&self, field: &MultiChannelField, opts: &FeatureOptions) -> Result<FeatureVector> {
        let raw = self.raw_field_values(field, opts)?;
        let values = normalize(&raw, self.norm)?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::DegenerateNormalization { sum: *bad });
        }
        Ok(FeatureVector {
            values,
            set_id: self.id.clone(),
            sigma: opts.sigma,
            norm: self.norm,
        })
    }
}

/// Masking (optional) followed by removal of the channel means within the
/// support that is kept.
pub fn preprocess(field: &MultiChannelField, opts: &FeatureOptions) -> Result<MultiChannelField> {
    if opts.circular_mask {
        let disc = inscribed_disc(field.extent());
        subtract_channel_mean_within(&circular_mask(field), &disc)
    } else {
        Ok(subtract_channel_mean(field))
    }
}

/// Feature vector of one field under an invariant set.
pub fn feature_vector(field: &MultiChannelField, set: &InvariantSet, opts: &FeatureOptions) -> Result<FeatureVector> {
    CompiledSet::new(set)?.features(field, opts)
}

/// Writes `id, v1, ..., vD` rows.
pub fn write_feature_csv<W: Write>(rows: &[(String, FeatureVector)], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let to_err = |e: csv::Error| Error::param(format!("CSV write failed: {e}"));
    for (id, fv) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(fv.values.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))
}

pub fn save_feature_csv(rows: &[(String, FeatureVector)], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_feature_csv(rows, std::io::BufWriter::new(file))
}

/// Reads rows written by [`write_feature_csv`] back as `(id, values)`.
pub fn load_feature_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::ParseLine { line: 0, msg: format!("{other:?}") },
        })?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let bad = |msg: String| Error::ParseLine { line: i + 1, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let id = rec.get(0).ok_or_else(|| bad("empty row".into()))?.to_string();
        let values = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("bad value {v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, values));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invgen::{eta, int, single_pair_set, Model, Monomial};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn worked() -> MomentPolynomial {
        single_pair_set("psi12", "Lambda12", 2, 2).unwrap().members.remove(0)
    }

    fn random_tensor(seed: u64) -> MomentTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = crate::moments::multi_indices(2, 3).len() * 2;
        MomentTensor::from_values(2, 2, 3, 1.0, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn worked_example_substitution() {
        let mut t = MomentTensor::zeros(2, 2, 1, 1.0);
        t.set(0, &[1, 0], 1.0).unwrap();
        t.set(1, &[0, 1], 1.0).unwrap();
        assert_eq!(evaluate(&worked(), &t).unwrap(), 2.0);
    }

    #[test]
    fn zero_tensor_gives_zero() {
        let t = MomentTensor::zeros(2, 2, 3, 1.0);
        for p in crate::invgen::generate_all(2, 2, Model::Tr, 2, 3) {
            assert_eq!(evaluate(&p, &t).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_naive_evaluator() {
        let t = random_tensor(3);
        let p = single_pair_set("psi12^2", "Gamma12", 2, 2).unwrap().members.remove(0);
        let naive: f64 = p
            .terms()
            .map(|(m, c)| {
                let mut v = *c.numer() as f64 / *c.denom() as f64;
                for s in m.factors() {
                    v *= t.get(s.channel, &s.orders).unwrap();
                }
                v
            })
            .sum();
        let got = evaluate(&p, &t).unwrap();
        assert!((got - naive).abs() <= 1e-14 * naive.abs().max(1.0));
    }

    #[test]
    fn missing_moment_is_reported() {
        let t = MomentTensor::zeros(2, 2, 1, 1.0);
        let p = MomentPolynomial::from_terms([(int(1), Monomial::new(vec![eta(1, &[2, 0]), eta(1, &[0, 1])]))]);
        assert!(matches!(evaluate(&p, &t), Err(Error::MissingMoment { .. })));
    }

    #[test]
    fn linear_in_each_symbol() {
        // Finite differences against the formal partial derivative.
        let t = random_tensor(8);
        let p = single_pair_set("phi11*phi22", "Gamma12", 2, 2).unwrap().members.remove(0);
        let sym = eta(1, &[1, 0]);
        let analytic = evaluate(&p.partial(&sym), &t).unwrap();
        let h = 1e-5;
        let base = t.get(0, &[1, 0]).unwrap();
        let mut plus = t.clone();
        plus.set(0, &[1, 0], base + h).unwrap();
        let mut minus = t.clone();
        minus.set(0, &[1, 0], base - h).unwrap();
        let fd = (evaluate(&p, &plus).unwrap() - evaluate(&p, &minus).unwrap()) / (2.0 * h);
        assert!((fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0));
    }

    #[test]
    fn sum_normalization() {
        let out = normalize(&[1.0, 2.0, 5.0], Normalization::DivideBySum).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[0] - 0.125).abs() < 1e-15 && (out[1] - 0.25).abs() < 1e-15);
        assert!(matches!(
            normalize(&[1e-31, -1e-32], Normalization::DivideBySum),
            Err(Error::DegenerateNormalization { .. })
        ));
        assert_eq!(normalize(&[1.0, 2.0], Normalization::None).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn feature_dims_are_checked() {
        let set = single_pair_set("psi12", "Lambda12", 2, 2).unwrap();
        let f = MultiChannelField::zeros(vec![9, 9], 3).unwrap();
        assert!(matches!(
            feature_vector(&f, &set, &FeatureOptions::new(2.0)),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn feature_csv_rows() {
        let fv = FeatureVector {
            values: vec![0.5, -2.0],
            set_id: "x".into(),
            sigma: 1.0,
            norm: Normalization::None,
        };
        let mut buf = Vec::new();
        write_feature_csv(&[("a".into(), fv)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,5e-1,-2e0\n");
    }
}
