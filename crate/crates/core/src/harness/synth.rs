//! Synthetic vortex fields and color textures.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::MultiChannelField;

/// One swirl of a synthetic flow. Positions are in sample-index units.
#[derive(Debug, Clone, PartialEq)]
pub struct Vortex {
    pub center: [f64; 2],
    /// Core radius `R` of the profile `(1 - exp(-r²/R²)) / r`.
    pub radius: f64,
    /// Signed circulation scale; the sign sets the spin direction.
    pub strength: f64,
    /// Rotation of the whole vortex (positions and vectors), radians.
    pub orientation: f64,
    /// Core elongation along the vortex's own first axis; 1 is round.
    pub aspect: f64,
    /// Optional outer linear map applied to this vortex's velocities.
    pub outer: Option<[[f64; 2]; 2]>,
}

impl Vortex {
    pub fn round(center: [f64; 2], radius: f64, strength: f64) -> Self {
        Self {
            center,
            radius,
            strength,
            orientation: 0.0,
            aspect: 1.0,
            outer: None,
        }
    }

    /// Velocity induced at index-space position `p`.
    pub fn velocity(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.orientation.sin_cos();
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        // Local frame: undo the orientation.
        let (q0, q1) = (c * dx + s * dy, -s * dx + c * dy);
        let rho2 = (q0 * q0 / (self.aspect * self.aspect) + q1 * q1) / (self.radius * self.radius);
        // (1 - e^{-ρ²}) / ρ², with its limit 1 at the core.
        let shape = if rho2 < 1e-12 { 1.0 - rho2 / 2.0 } else { -(-rho2).exp_m1() / rho2 };
        let k = self.strength * shape / self.radius;
        let (l0, l1) = (-k * q1, k * q0);
        let (mut v0, mut v1) = (c * l0 - s * l1, s * l0 + c * l1);
        if let Some(a) = self.outer {
            (v0, v1) = (a[0][0] * v0 + a[0][1] * v1, a[1][0] * v0 + a[1][1] * v1);
        }
        [v0, v1]
    }

    fn validate(&self, extent: &[usize]) -> Result<()> {
        if !(self.radius > 0.0) || !(self.aspect > 0.0) || !self.strength.is_finite() {
            return Err(Error::param("vortex radius and aspect must be positive and strength finite"));
        }
        for (axis, &c) in self.center.iter().enumerate() {
            if !(0.0..=(extent[axis] as f64 - 1.0)).contains(&c) {
                return Err(Error::param(format!("vortex center {:?} lies outside extent {extent:?}", self.center)));
            }
        }
        if let Some(a) = self.outer {
            if (a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs() < 1e-12 {
                return Err(Error::param("vortex outer map is singular"));
            }
        }
        Ok(())
    }
}

/// Superposition of `vortices` plus a uniform `background` on an
/// `extent[0] x extent[1]` grid (channel 0 along axis 0, channel 1 along axis 1).
pub fn synth_vortex_field(extent: [usize; 2], vortices: &[Vortex], background: [f64; 2]) -> Result<MultiChannelField> {
    for v in vortices {
        v.validate(&extent)?;
    }
    superpose(extent, vortices, background)
}

// No check that the centers lie inside the grid.
pub(crate) fn superpose(extent: [usize; 2], vortices: &[Vortex], background: [f64; 2]) -> Result<MultiChannelField> {
    let mut data = Vec::with_capacity(extent[0] * extent[1] * 2);
    for i in 0..extent[0] {
        for j in 0..extent[1] {
            let p = [i as f64, j as f64];
            let mut acc = background;
            for v in vortices {
                let u = v.velocity(p);
                acc[0] += u[0];
                acc[1] += u[1];
            }
            data.extend_from_slice(&acc);
        }
    }
    MultiChannelField::new(extent.to_vec(), 2, data)
}

/// Parameters of a random vortex street.
#[derive(Debug, Clone, PartialEq)]
pub struct StreetConfig {
    pub extent: [usize; 2],
    pub count: usize,
    pub radius: f64,
    pub aspect: f64,
    /// Half-width of the uniform interval the outer maps are drawn from
    /// around the identity (0 disables them).
    pub affine_jitter: f64,
    pub background: [f64; 2],
    /// Keep centers this far from the border.
    pub margin: usize,
}

impl Default for StreetConfig {
    fn default() -> Self {
        Self {
            extent: [80, 320],
            count: 6,
            radius: 4.0,
            aspect: 1.6,
            affine_jitter: 0.15,
            background: [0.0, 0.3],
            margin: 20,
        }
    }
}

/// Vortices spread along the long axis in two staggered rows with
/// alternating spin, random orientations and mild outer affine maps.
pub fn random_vortex_street(cfg: &StreetConfig, seed: u64) -> Result<(MultiChannelField, Vec<Vortex>)> {
    let [rows, cols] = cfg.extent;
    if cfg.count == 0 || rows <= 2 * cfg.margin || cols <= 2 * cfg.margin {
        return Err(Error::param("street needs at least one vortex and room inside the margins"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let usable = (cols - 2 * cfg.margin) as f64;
    let spacing = usable / cfg.count as f64;
    let mut vortices = Vec::with_capacity(cfg.count);
    for k in 0..cfg.count {
        let row_frac = if k % 2 == 0 { 0.38 } else { 0.62 };
        let row = (rows as f64 - 1.0) * row_frac + rng.random_range(-2.0..=2.0);
        let col = cfg.margin as f64 + spacing * (k as f64 + 0.5) + rng.random_range(-3.0..=3.0);
        let outer = if cfg.affine_jitter > 0.0 {
            let j = cfg.affine_jitter;
            Some([
                [1.0 + rng.random_range(-j..=j), rng.random_range(-j..=j)],
                [rng.random_range(-j..=j), 1.0 + rng.random_range(-j..=j)],
            ])
        } else {
            None
        };
        vortices.push(Vortex {
            center: [row.round(), col.round()],
            radius: cfg.radius,
            strength: if k % 2 == 0 { 1.0 } else { -1.0 },
            orientation: rng.random_range(0.0..std::f64::consts::TAU),
            aspect: cfg.aspect,
            outer,
        });
    }
    let field = synth_vortex_field(cfg.extent, &vortices, cfg.background)?;
    Ok((field, vortices))
}

/// A single centered vortex on a `side x side` grid, the detection template.
pub fn vortex_template(side: usize, radius: f64, aspect: f64) -> Result<MultiChannelField> {
    let c = (side as f64 - 1.0) / 2.0;
    let v = Vortex {
        aspect,
        ..Vortex::round([c, c], radius, 1.0)
    };
    synth_vortex_field([side, side], &[v], [0.0, 0.0])
}

/// Root-mean-square vector magnitude.
pub fn rms_magnitude(field: &MultiChannelField) -> f64 {
    let n = field.num_samples().max(1) as f64;
    (field.data().iter().map(|v| v * v).sum::<f64>() / n).sqrt()
}

/// A smooth random RGB texture with values in [0, 1]: a few oriented
/// sinusoid plane waves and Gaussian blobs, each with its own color.
pub fn synth_texture(side: usize, seed: u64) -> Result<MultiChannelField> {
    if side < 2 {
        return Err(Error::param("texture side must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = side as f64;
    struct Wave {
        k: [f64; 2],
        phase: f64,
        color: [f64; 3],
    }
    struct Blob {
        c: [f64; 2],
        r2: f64,
        color: [f64; 3],
    }
    let color = |rng: &mut ChaCha8Rng| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let waves: Vec<Wave> = (0..4)
        .map(|_| {
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let freq = rng.random_range(1.0..4.0) * std::f64::consts::TAU / s;
            Wave {
                k: [freq * angle.cos(), freq * angle.sin()],
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                color: color(&mut rng),
            }
        })
        .collect();
    let blobs: Vec<Blob> = (0..5)
        .map(|_| {
            let r = rng.random_range(0.06..0.18) * s;
            Blob {
                c: [rng.random_range(0.15..0.85) * s, rng.random_range(0.15..0.85) * s],
                r2: r * r,
                color: color(&mut rng),
            }
        })
        .collect();
    let base = [rng.random_range(0.35..0.65), rng.random_range(0.35..0.65), rng.random_range(0.35..0.65)];
    MultiChannelField::from_fn(vec![side, side], 3, |x, o| {
        let p = [x[0] + (s - 1.0) / 2.0, x[1] + (s - 1.0) / 2.0];
        let mut v = base;
        for w in &waves {
            let a = 0.08 * (w.k[0] * p[0] + w.k[1] * p[1] + w.phase).sin();
            for ch in 0..3 {
                v[ch] += a * w.color[ch];
            }
        }
        for b in &blobs {
            let d2 = (p[0] - b.c[0]).powi(2) + (p[1] - b.c[1]).powi(2);
            let a = 0.25 * (-d2 / (2.0 * b.r2)).exp();
            for ch in 0..3 {
                v[ch] += a * b.color[ch];
            }
        }
        for ch in 0..3 {
            o[ch] = v[ch].clamp(0.0, 1.0);
        }
    })
}

/// A `2 x 2` matrix as an `nalgebra` value.
pub fn mat2(a: [[f64; 2]; 2]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
}
