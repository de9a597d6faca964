//! Gaussian-Hermite moments of multi-channel fields.
//!
//! `η^n_{p_1..p_M} = Σ_X Π_m Ĥ_{p_m}(x_m; σ) f_n(X) h^M`, a midpoint Riemann
//! sum over the centered grid. The tensor is computed separably, contracting
//! one axis at a time against its kernel table.

mod hermite;

pub use hermite::{gauss_hermite, hermite, orthogonality_check, orthogonality_reference, GhKernelTable};

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::MultiChannelField;

/// Multi-indices `p` with `|p| <= max_order`, lexicographic in `(p_1, .., p_M)`.
pub fn multi_indices(coord_dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: usize, budget: usize, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in 0..=budget {
            prefix.push(p);
            rec(prefix, left - 1, budget - p, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(coord_dim), coord_dim, max_order, &mut out);
    out
}

/// All moments `η^n_p` with `|p| <= max_order` of one field. Channels are
/// zero-based here and one-based in every text representation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensor {
    coord_dim: usize,
    channel_dim: usize,
    max_order: usize,
    sigma: f64,
    indices: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
    values: Vec<f64>,
}

impl MomentTensor {
    /// Tensor from explicit values laid out channel-major, multi-indices in
    /// [`multi_indices`] order.
    pub fn from_values(
        coord_dim: usize,
        channel_dim: usize,
        max_order: usize,
        sigma: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let indices = multi_indices(coord_dim, max_order);
        if values.len() != indices.len() * channel_dim {
            return Err(Error::DimMismatch(format!(
                "{} values for {} channels x {} multi-indices",
                values.len(),
                channel_dim,
                indices.len()
            )));
        }
        let lookup = indices.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Ok(Self {
            coord_dim,
            channel_dim,
            max_order,
            sigma,
            indices,
            lookup,
            values,
        })
    }

    pub fn zeros(coord_dim: usize, channel_dim: usize, max_order: usize, sigma: f64) -> Self {
        let len = multi_indices(coord_dim, max_order).len() * channel_dim;
        Self::from_values(coord_dim, channel_dim, max_order, sigma, vec![0.0; len])
            .expect("sized from the index set")
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn channel_dim(&self) -> usize {
        self.channel_dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Flat position of `(channel, orders)`, if present.
    pub fn position(&self, channel: usize, orders: &[usize]) -> Option<usize> {
        if channel >= self.channel_dim {
            return None;
        }
        self.lookup
            .get(orders)
            .map(|&i| channel * self.indices.len() + i)
    }

    pub fn get(&self, channel: usize, orders: &[usize]) -> Option<f64> {
        self.position(channel, orders).map(|i| self.values[i])
    }

    pub fn set(&mut self, channel: usize, orders: &[usize], value: f64) -> Result<()> {
        let i = self.position(channel, orders).ok_or_else(|| Error::MissingMoment {
            symbol: format!("eta[{};{:?}]", channel + 1, orders),
            max_order: self.max_order,
        })?;
        self.values[i] = value;
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rows `n,p1,...,pM,value` with 17 significant digits, one-based `n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for n in 0..self.channel_dim {
            for (i, p) in self.indices.iter().enumerate() {
                let v = self.values[n * self.indices.len() + i];
                let orders: Vec<String> = p.iter().map(|o| o.to_string()).collect();
                writeln!(out, "{},{},{:.16e}", n + 1, orders.join(","), v)?;
            }
        }
        Ok(())
    }
}

/// Recommended σ band `[extent / 9, extent / 3]`; returns a warning for σ outside it.
pub fn sigma_guidance(extent: &[usize], sigma: f64) -> Option<String> {
    let e = *extent.iter().min()? as f64;
    let (lo, hi) = (e / 9.0, e / 3.0);
    if sigma < lo {
        Some(format!(
            "sigma {sigma} < extent/9 = {lo:.2}: the kernels decay before covering the domain"
        ))
    } else if sigma > hi {
        Some(format!(
            "sigma {sigma} > extent/3 = {hi:.2}: the kernels extend past the domain"
        ))
    } else {
        None
    }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Contracts axis `axis` of a row-major array of shape `dims` against
/// `kernel[p][i]`, replacing that axis' length with `kernel.len()`.
fn contract_axis(input: &[f64], dims: &[usize], axis: usize, kernel: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let outer: usize = dims[..axis].iter().product();
    let len = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let orders = kernel.len();
    let mut out = vec![0.0; outer * orders * inner];
    let mut scratch = vec![0.0; len];
    for o in 0..outer {
        let base = o * len * inner;
        for (p, row) in kernel.iter().enumerate() {
            for r in 0..inner {
                for (i, (s, &k)) in scratch.iter_mut().zip(row).enumerate() {
                    *s = k * input[base + i * inner + r];
                }
                out[(o * orders + p) * inner + r] = pairwise_sum(&scratch);
            }
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[axis] = orders;
    (out, new_dims)
}

/// Full moment tensor of `field` up to total order `max_order`.
pub fn compute_moments(field: &MultiChannelField, max_order: usize, sigma: f64) -> Result<MomentTensor> {
    hermite::check_sigma(sigma)?;
    let m = field.coord_dim();
    let n = field.channel_dim();
    let mut dims: Vec<usize> = field.extent().to_vec();
    dims.push(n);
    let mut current = field.data().to_vec();
    for axis in 0..m {
        let table = GhKernelTable::new(field.axis_coordinates(axis), max_order, sigma)?;
        let (next, next_dims) = contract_axis(&current, &dims, axis, &table.values);
        current = next;
        dims = next_dims;
    }
    // `current` now has shape [P+1; M] x N.
    let weight = field.spacing().powi(m as i32);
    let indices = multi_indices(m, max_order);
    let stride = |p: &[usize]| p.iter().fold(0, |acc, &o| acc * (max_order + 1) + o);
    let mut values = Vec::with_capacity(indices.len() * n);
    for ch in 0..n {
        for p in &indices {
            values.push(current[stride(p) * n + ch] * weight);
        }
    }
    MomentTensor::from_values(m, n, max_order, sigma, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(extent: Vec<usize>, channels: usize, seed: u64) -> MultiChannelField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = extent.iter().product::<usize>() * channels;
        MultiChannelField::new(extent, channels, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Non-separable evaluation of the Riemann sum, straight from the definition.
    fn brute_force(field: &MultiChannelField, max_order: usize, sigma: f64) -> MomentTensor {
        let mut t = MomentTensor::zeros(field.coord_dim(), field.channel_dim(), max_order, sigma);
        let mut idx = vec![0; field.coord_dim()];
        for (n, p) in (0..field.channel_dim()).flat_map(|n| multi_indices(field.coord_dim(), max_order).into_iter().map(move |p| (n, p))) {
            let mut acc = 0.0;
            for s in 0..field.num_samples() {
                field.unravel_into(s, &mut idx);
                let mut w = 1.0;
                for (axis, (&i, &pm)) in idx.iter().zip(&p).enumerate() {
                    let x = field.coordinate(axis, i);
                    w *= hermite(pm, x / sigma) * (-x * x / (2.0 * sigma * sigma)).exp()
                        / (-sigma).powi(pm as i32);
                }
                acc += w * field.sample(s)[n];
            }
            t.set(n, &p, acc).unwrap();
        }
        t
    }

    #[test]
    fn index_set_size() {
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(3, 3).len(), 20);
        assert_eq!(multi_indices(2, 0), vec![vec![0, 0]]);
        assert_eq!(multi_indices(2, 1), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn zero_field_zero_moments() {
        let f = MultiChannelField::zeros(vec![9, 9], 2).unwrap();
        let t = compute_moments(&f, 3, 2.0).unwrap();
        assert_eq!(t.len(), 2 * 10);
        assert!(t.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_field_zeroth_moment() {
        for (m, extent, sigma) in [(2usize, 61usize, 4.0), (3, 31, 2.5)] {
            let f = MultiChannelField::new(vec![extent; m], 1, vec![1.0; extent.pow(m as u32)]).unwrap();
            let t = compute_moments(&f, 2, sigma).unwrap();
            let expected = (sigma * (2.0 * std::f64::consts::PI).sqrt()).powi(m as i32);
            let got = t.get(0, &vec![0; m]).unwrap();
            assert!((got - expected).abs() < 1e-3 * expected, "{got} vs {expected}");
        }
    }

    #[test]
    fn separable_equals_brute_force() {
        for (seed, extent, channels, p) in [(1, vec![9, 9], 2, 3), (2, vec![15, 13], 3, 4), (3, vec![5, 6, 7], 2, 3)] {
            let f = random_field(extent, channels, seed);
            let fast = compute_moments(&f, p, 2.7).unwrap();
            let slow = brute_force(&f, p, 2.7);
            let scale = slow.max_abs();
            for (a, b) in fast.values().iter().zip(slow.values()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(scale), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bad_sigma() {
        let f = random_field(vec![4, 4], 1, 0);
        assert!(compute_moments(&f, 2, 0.0).is_err());
        assert!(compute_moments(&f, 2, -1.0).is_err());
    }

    #[test]
    fn spacing_scales_coordinates_and_measure() {
        let f = random_field(vec![11, 11], 1, 4);
        let g = MultiChannelField::with_spacing(vec![11, 11], 1, 0.5, f.data().to_vec()).unwrap();
        // Coordinates halve, so σ must halve to hit the same kernel samples.
        let a = compute_moments(&f, 2, 3.0).unwrap();
        let b = compute_moments(&g, 2, 1.5).unwrap();
        for p in multi_indices(2, 2) {
            let order: usize = p.iter().sum();
            let expected = a.get(0, &p).unwrap() * 0.25 * 2f64.powi(order as i32);
            let got = b.get(0, &p).unwrap();
            assert!((got - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn csv_export_shape() {
        let t = compute_moments(&random_field(vec![5, 5], 2, 9), 1, 1.0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("1,0,0,"));
        assert!(lines[5].starts_with("2,1,0,"));
        let v: f64 = lines[5].rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(v, t.get(1, &[1, 0]).unwrap());
    }

    #[test]
    fn sigma_band() {
        assert!(sigma_guidance(&[257, 257], 50.0).is_none());
        assert!(sigma_guidance(&[257, 257], 20.0).is_some());
        assert!(sigma_guidance(&[257, 257], 90.0).is_some());
    }
}
