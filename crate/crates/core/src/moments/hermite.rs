use crate::error::{Error, Result};

/// Physicists' Hermite polynomial `H_p(x)` by the three-term recurrence.
/// Overflows to infinity for large `p`; use [`gauss_hermite`] in numeric code.
pub fn hermite(p: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if p == 0 {
        return prev;
    }
    for k in 2..=p {
        let next = 2.0 * x * cur - 2.0 * (k as f64 - 1.0) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Gaussian-Hermite polynomial
/// `Ĥ_p(x; σ) = (-σ)^-p exp(-x² / 2σ²) H_p(x / σ)`.
pub fn gauss_hermite(p: usize, x: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let mut out = vec![0.0; p + 1];
    gauss_hermite_all(x, sigma, &mut out);
    Ok(out[p])
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("sigma must be positive, got {sigma}")))
    }
}

/// Fills `out[p] = Ĥ_p(x; σ)` for `p < out.len()` using the modulated
/// recurrence `Ĥ_p = -(2x/σ²) Ĥ_{p-1} - (2(p-1)/σ²) Ĥ_{p-2}`, which never
/// forms the raw polynomial.
pub(crate) fn gauss_hermite_all(x: f64, sigma: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let inv_s2 = 1.0 / (sigma * sigma);
    out[0] = (-0.5 * x * x * inv_s2).exp();
    if out.len() > 1 {
        out[1] = -2.0 * x * inv_s2 * out[0];
    }
    for p in 2..out.len() {
        out[p] = -2.0 * x * inv_s2 * out[p - 1] - 2.0 * (p as f64 - 1.0) * inv_s2 * out[p - 2];
    }
}

/// Per-axis table of `Ĥ_p(x; σ)` for `p = 0..=max_order` at every grid
/// coordinate of that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GhKernelTable {
    pub sigma: f64,
    pub max_order: usize,
    pub coords: Vec<f64>,
    /// `values[p][i]`
    pub values: Vec<Vec<f64>>,
}

impl GhKernelTable {
    pub fn new(coords: Vec<f64>, max_order: usize, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let mut values = vec![vec![0.0; coords.len()]; max_order + 1];
        let mut buf = vec![0.0; max_order + 1];
        for (i, &x) in coords.iter().enumerate() {
            gauss_hermite_all(x, sigma, &mut buf);
            for (p, &v) in buf.iter().enumerate() {
                values[p][i] = v;
            }
        }
        Ok(Self {
            sigma,
            max_order,
            coords,
            values,
        })
    }
}

/// `∫ exp(-u²) H_p1(u) H_p2(u) du` over `[-halfwidth, halfwidth]` by the
/// composite trapezoid rule, evaluated through the Gaussian-Hermite form with
/// `σ = 1` (so `exp(-u²) H_p1 H_p2 = (-1)^(p1+p2) Ĥ_p1 Ĥ_p2`).
pub fn orthogonality_check(p1: usize, p2: usize, halfwidth: f64, step: f64) -> Result<f64> {
    if !(halfwidth > 0.0 && step > 0.0) {
        return Err(Error::param("halfwidth and step must be positive"));
    }
    let n = (2.0 * halfwidth / step).round() as usize;
    let h = 2.0 * halfwidth / n as f64;
    let top = p1.max(p2);
    let mut buf = vec![0.0; top + 1];
    let mut acc = 0.0;
    for i in 0..=n {
        let u = -halfwidth + i as f64 * h;
        gauss_hermite_all(u, 1.0, &mut buf);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * buf[p1] * buf[p2];
    }
    let sign = if (p1 + p2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * acc * h)
}

/// Exact value of the [`orthogonality_check`] integral over the whole line:
/// `p!·2^p·√π` when `p1 = p2`, else zero.
pub fn orthogonality_reference(p1: usize, p2: usize) -> f64 {
    if p1 != p2 {
        return 0.0;
    }
    let fact: f64 = (1..=p1).map(|k| k as f64).product();
    fact * 2f64.powi(p1 as i32) * std::f64::consts::PI.sqrt()
}
