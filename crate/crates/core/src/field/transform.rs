//! Inner rotations, outer affine maps and the rotation-affine transform model.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::MultiChannelField;
use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-12;
/// Source positions this close to a lattice node are snapped onto it, so
/// lattice rotations resample without interpolation error.
const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
}

/// `Y = r_in X`, `G(Y) = a_out F(X) + t_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaTransform {
    pub r_in: DMatrix<f64>,
    pub a_out: DMatrix<f64>,
    pub t_out: DVector<f64>,
}

impl RaTransform {
    pub fn new(r_in: DMatrix<f64>, a_out: DMatrix<f64>, t_out: DVector<f64>) -> Result<Self> {
        check_rotation(&r_in)?;
        check_nonsingular(&a_out)?;
        if t_out.len() != a_out.nrows() {
            return Err(Error::DimMismatch(format!(
                "t_out has {} entries for a {}x{} a_out",
                t_out.len(),
                a_out.nrows(),
                a_out.ncols()
            )));
        }
        Ok(Self { r_in, a_out, t_out })
    }

    pub fn identity(coord_dim: usize, channel_dim: usize) -> Self {
        Self {
            r_in: DMatrix::identity(coord_dim, coord_dim),
            a_out: DMatrix::identity(channel_dim, channel_dim),
            t_out: DVector::zeros(channel_dim),
        }
    }

    /// Replaces the inner rotation.
    pub fn with_inner(mut self, r_in: DMatrix<f64>) -> Result<Self> {
        check_rotation(&r_in)?;
        self.r_in = r_in;
        Ok(self)
    }

    /// True when the outer matrix is itself a proper rotation.
    pub fn is_total_rotation(&self) -> bool {
        check_rotation(&self.a_out).is_ok()
    }

    pub fn apply(&self, field: &MultiChannelField, interp: Interpolation) -> Result<MultiChannelField> {
        let rotated = rotate_spatial(field, &self.r_in, interp)?;
        apply_outer_affine(&rotated, &self.a_out, &self.t_out)
    }
}

fn check_rotation(r: &DMatrix<f64>) -> Result<()> {
    if !r.is_square() {
        return Err(Error::NotRotation(format!("{}x{} is not square", r.nrows(), r.ncols())));
    }
    let n = r.nrows();
    let gram = r * r.transpose();
    let dev = (gram - DMatrix::<f64>::identity(n, n)).amax();
    if dev > ORTHO_TOL {
        return Err(Error::NotRotation(format!("|R R^T - I| = {dev:e}")));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ORTHO_TOL {
        return Err(Error::NotRotation(format!("det = {det}")));
    }
    Ok(())
}

fn check_nonsingular(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimMismatch(format!("{}x{} a_out is not square", a.nrows(), a.ncols())));
    }
    let det = a.determinant();
    if det.abs() <= SINGULAR_TOL || !det.is_finite() {
        return Err(Error::SingularMatrix { det });
    }
    Ok(())
}

/// Counter-clockwise rotation in the (axis 0, axis 1) plane.
pub fn rotation_2d(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Replaces every channel vector `v` with `a_out v + t_out`.
pub fn apply_outer_affine(
    field: &MultiChannelField,
    a_out: &DMatrix<f64>,
    t_out: &DVector<f64>,
) -> Result<MultiChannelField> {
    let n = field.channel_dim();
    if a_out.nrows() != n || a_out.ncols() != n || t_out.len() != n {
        return Err(Error::DimMismatch(format!(
            "outer transform is {}x{} (+{}) for {} channels",
            a_out.nrows(),
            a_out.ncols(),
            t_out.len(),
            n
        )));
    }
    check_nonsingular(a_out)?;
    let mut data = vec![0.0; field.data().len()];
    data.par_chunks_mut(n)
        .zip(field.data().par_chunks(n))
        .for_each(|(dst, src)| {
            for (r, d) in dst.iter_mut().enumerate() {
                let mut acc = t_out[r];
                for (c, &v) in src.iter().enumerate() {
                    acc += a_out[(r, c)] * v;
                }
                *d = acc;
            }
        });
    Ok(field.map_data(data))
}

/// `G(Y) = F(R^T Y)` about the grid center, same extent; pulls from outside
/// the domain read as zero. Channel values are not transformed.
pub fn rotate_spatial(
    field: &MultiChannelField,
    rotation: &DMatrix<f64>,
    interp: Interpolation,
) -> Result<MultiChannelField> {
    let m = field.coord_dim();
    if rotation.nrows() != m {
        return Err(Error::DimMismatch(format!(
            "{}x{} rotation for a {m}-dimensional field",
            rotation.nrows(),
            rotation.ncols()
        )));
    }
    check_rotation(rotation)?;
    let n = field.channel_dim();
    let center = field.center();
    let extent = field.extent().to_vec();
    let inverse = rotation.transpose();
    let mut data = vec![0.0; field.data().len()];

    data.par_chunks_mut(n).enumerate().for_each(|(s, out)| {
        let mut index = vec![0usize; m];
        field.unravel_into(s, &mut index);
        // Offsets from center in index units; spacing cancels.
        let y: Vec<f64> = index.iter().zip(&center).map(|(&i, &c)| i as f64 - c).collect();
        let src: Vec<f64> = (0..m)
            .map(|r| {
                let x: f64 = (0..m).map(|c| inverse[(r, c)] * y[c]).sum::<f64>() + center[r];
                let nearest = x.round();
                if (x - nearest).abs() < SNAP_TOL {
                    nearest
                } else {
                    x
                }
            })
            .collect();
        match interp {
            Interpolation::Nearest => {
                let mut idx = vec![0usize; m];
                for (slot, (&x, &e)) in idx.iter_mut().zip(src.iter().zip(&extent)) {
                    let r = x.round();
                    if r < 0.0 || r > (e - 1) as f64 {
                        return;
                    }
                    *slot = r as usize;
                }
                out.copy_from_slice(field.sample(field.sample_index(&idx)));
            }
            Interpolation::Bilinear => multilinear(field, &src, &extent, out),
        }
    });
    Ok(field.map_data(data))
}

fn multilinear(field: &MultiChannelField, src: &[f64], extent: &[usize], out: &mut [f64]) {
    let m = src.len();
    let base: Vec<f64> = src.iter().map(|x| x.floor()).collect();
    let frac: Vec<f64> = src.iter().zip(&base).map(|(x, b)| x - b).collect();
    let mut idx = vec![0usize; m];
    'corner: for corner in 0..(1usize << m) {
        let mut w = 1.0;
        for axis in 0..m {
            let hi = (corner >> axis) & 1 == 1;
            let wa = if hi { frac[axis] } else { 1.0 - frac[axis] };
            if wa == 0.0 {
                continue 'corner;
            }
            let i = base[axis] + if hi { 1.0 } else { 0.0 };
            if i < 0.0 || i > (extent[axis] - 1) as f64 {
                continue 'corner;
            }
            idx[axis] = i as usize;
            w *= wa;
        }
        for (o, &v) in out.iter_mut().zip(field.sample(field.sample_index(&idx))) {
            *o += w * v;
        }
    }
}

pub fn rotate_spatial_2d(
    field: &MultiChannelField,
    theta: f64,
    interp: Interpolation,
) -> Result<MultiChannelField> {
    if field.coord_dim() != 2 {
        return Err(Error::DimMismatch(format!(
            "angle rotation needs M = 2, field has M = {}",
            field.coord_dim()
        )));
    }
    rotate_spatial(field, &rotation_2d(theta), interp)
}

/// Spatial rotation by `theta` composed with the same rotation of the vectors.
pub fn apply_special_tr(
    field: &MultiChannelField,
    theta: f64,
    interp: Interpolation,
) -> Result<MultiChannelField> {
    if field.coord_dim() != 2 || field.channel_dim() != 2 {
        return Err(Error::DimMismatch(format!(
            "special TR needs M = N = 2, field has M = {}, N = {}",
            field.coord_dim(),
            field.channel_dim()
        )));
    }
    let r = rotation_2d(theta);
    let rotated = rotate_spatial(field, &r, interp)?;
    apply_outer_affine(&rotated, &r, &DVector::zeros(2))
}

/// Sampling intervals for random outer affine maps `R_x R_y R_z U + t`, with
/// `U` upper triangular (scales on the diagonal, shears above it).
#[derive(Debug, Clone, PartialEq)]
pub struct RaRanges {
    pub angles: [(f64, f64); 3],
    pub scales: [(f64, f64); 3],
    pub shears: [(f64, f64); 3],
    pub translations: [(f64, f64); 3],
}

impl Default for RaRanges {
    fn default() -> Self {
        let a = std::f64::consts::PI / 10.0;
        Self {
            angles: [(-a, a); 3],
            scales: [(0.7, 0.9); 3],
            shears: [(-0.1, 0.1); 3],
            translations: [(-0.1, 0.1); 3],
        }
    }
}

impl RaRanges {
    /// Every interval collapsed onto the identity transform.
    pub fn identity() -> Self {
        Self {
            angles: [(0.0, 0.0); 3],
            scales: [(1.0, 1.0); 3],
            shears: [(0.0, 0.0); 3],
            translations: [(0.0, 0.0); 3],
        }
    }

    fn validate(&self) -> Result<()> {
        let groups = [
            ("angle", &self.angles),
            ("scale", &self.scales),
            ("shear", &self.shears),
            ("translation", &self.translations),
        ];
        for (name, ivs) in groups {
            for (i, &(lo, hi)) in ivs.iter().enumerate() {
                if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::BadRange {
                        name: format!("{name}[{i}]"),
                        lo,
                        hi,
                    });
                }
            }
        }
        Ok(())
    }
}

fn axis_rotation(axis: usize, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut r = DMatrix::identity(3, 3);
    let (i, j) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    r[(i, i)] = c;
    r[(i, j)] = -s;
    r[(j, i)] = s;
    r[(j, j)] = c;
    r
}

/// Draws a random outer affine map (identity inner rotation). For three
/// channels `a_out = R_x R_y R_z U`; two channels use `R_z U` restricted to the
/// leading 2x2 block, one channel a pure scale.
pub fn random_ra_transform(
    coord_dim: usize,
    channel_dim: usize,
    ranges: &RaRanges,
    seed: u64,
) -> Result<RaTransform> {
    ranges.validate()?;
    if !(1..=3).contains(&channel_dim) {
        return Err(Error::param(format!(
            "random outer transforms support 1 to 3 channels, got {channel_dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    let angles = ranges.angles.map(&mut draw);
    let scales = ranges.scales.map(&mut draw);
    let shears = ranges.shears.map(&mut draw);
    let t = ranges.translations.map(&mut draw);

    let upper = DMatrix::from_row_slice(
        3,
        3,
        &[scales[0], shears[0], shears[1], 0.0, scales[1], shears[2], 0.0, 0.0, scales[2]],
    );
    let full = match channel_dim {
        3 => axis_rotation(0, angles[0]) * axis_rotation(1, angles[1]) * axis_rotation(2, angles[2]) * upper,
        _ => axis_rotation(2, angles[2]) * upper,
    };
    let a_out = full.view((0, 0), (channel_dim, channel_dim)).into_owned();
    let t_out = DVector::from_iterator(channel_dim, t.into_iter().take(channel_dim));
    RaTransform::new(DMatrix::identity(coord_dim, coord_dim), a_out, t_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ramp(extent: Vec<usize>, channels: usize) -> MultiChannelField {
        let len = extent.iter().product::<usize>() * channels;
        MultiChannelField::new(extent, channels, (0..len).map(|v| (v as f64).sin()).collect()).unwrap()
    }

    #[test]
    fn identity_affine_is_identity() {
        let f = ramp(vec![4, 5], 2);
        let g = apply_outer_affine(&f, &DMatrix::identity(2, 2), &DVector::zeros(2)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn doubling_affine_doubles() {
        let f = ramp(vec![4, 5], 2);
        let g = apply_outer_affine(&f, &(DMatrix::identity(2, 2) * 2.0), &DVector::zeros(2)).unwrap();
        for (a, b) in f.data().iter().zip(g.data()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn singular_affine_is_rejected() {
        let f = ramp(vec![3, 3], 2);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            apply_outer_affine(&f, &a, &DVector::zeros(2)),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn random_affine_matches_per_sample_matvec() {
        let f = ramp(vec![6, 7], 3);
        let t = random_ra_transform(2, 3, &RaRanges::default(), 7).unwrap();
        let g = apply_outer_affine(&f, &t.a_out, &t.t_out).unwrap();
        for s in 0..f.num_samples() {
            let v = DVector::from_column_slice(f.sample(s));
            let expected = &t.a_out * v + &t.t_out;
            for (e, got) in expected.iter().zip(g.sample(s)) {
                assert!((e - got).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_angle_rotation_is_identity() {
        let f = ramp(vec![5, 6], 2);
        assert_eq!(rotate_spatial_2d(&f, 0.0, Interpolation::Bilinear).unwrap(), f);
        assert_eq!(rotate_spatial_2d(&f, 0.0, Interpolation::Nearest).unwrap(), f);
    }

    #[test]
    fn quarter_turn_is_a_permutation() {
        for extent in [vec![7, 7], vec![6, 6]] {
            let f = ramp(extent.clone(), 2);
            let g = rotate_spatial_2d(&f, PI / 2.0, Interpolation::Bilinear).unwrap();
            let e = extent[0];
            // G(i, j) = F(R^T (i, j)) = F(j, e - 1 - i) about the center.
            for i in 0..e {
                for j in 0..e {
                    for c in 0..2 {
                        assert_eq!(g.value(&[i, j], c), f.value(&[j, e - 1 - i], c));
                    }
                }
            }
        }
    }

    #[test]
    fn non_rotation_is_rejected() {
        let f = ramp(vec![4, 4], 1);
        let reflect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            rotate_spatial(&f, &reflect, Interpolation::Bilinear),
            Err(Error::NotRotation(_))
        ));
        let scaled = DMatrix::identity(2, 2) * 1.1;
        assert!(rotate_spatial(&f, &scaled, Interpolation::Nearest).is_err());
    }

    #[test]
    fn forward_back_rotation_matches_composed_resampler() {
        let f = MultiChannelField::from_fn(vec![21, 21], 1, |x, o| {
            o[0] = (0.3 * x[0]).sin() + (0.2 * x[1]).cos();
        })
        .unwrap();
        let theta = PI / 6.0;
        let g = rotate_spatial_2d(&f, theta, Interpolation::Bilinear).unwrap();
        let back = rotate_spatial_2d(&g, -theta, Interpolation::Bilinear).unwrap();
        // Independent two-step bilinear resampler on the same grid.
        let e = 21usize;
        let c = 10.0;
        let sample = |img: &dyn Fn(i64, i64) -> f64, x: f64, y: f64| -> f64 {
            let (x0, y0) = (x.floor(), y.floor());
            let (fx, fy) = (x - x0, y - y0);
            let mut acc = 0.0;
            for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
                    acc += wx * wy * img(x0 as i64 + dx, y0 as i64 + dy);
                }
            }
            acc
        };
        let pull = |src: &dyn Fn(i64, i64) -> f64, th: f64, i: usize, j: usize| {
            let (s, co) = th.sin_cos();
            let (yi, yj) = (i as f64 - c, j as f64 - c);
            sample(src, co * yi + s * yj + c, -s * yi + co * yj + c)
        };
        let orig = |i: i64, j: i64| -> f64 {
            if i < 0 || j < 0 || i >= e as i64 || j >= e as i64 {
                0.0
            } else {
                f.value(&[i as usize, j as usize], 0)
            }
        };
        let mut step1 = vec![0.0; e * e];
        for i in 0..e {
            for j in 0..e {
                step1[i * e + j] = pull(&orig, theta, i, j);
            }
        }
        let s1 = |i: i64, j: i64| -> f64 {
            if i < 0 || j < 0 || i >= e as i64 || j >= e as i64 {
                0.0
            } else {
                step1[i as usize * e + j as usize]
            }
        };
        let mut max_dev: f64 = 0.0;
        for i in 0..e {
            for j in 0..e {
                let expected = pull(&s1, -theta, i, j);
                assert!((expected - back.value(&[i, j], 0)).abs() < 1e-12);
                if (i as f64 - c).hypot(j as f64 - c) < 7.0 {
                    max_dev = max_dev.max((back.value(&[i, j], 0) - f.value(&[i, j], 0)).abs());
                }
            }
        }
        // Blurred, not destroyed.
        assert!(max_dev < 0.1, "max deviation {max_dev}");
    }

    #[test]
    fn special_tr_quarter_turn_rotates_vectors() {
        let f = ramp(vec![5, 5], 2);
        let g = apply_special_tr(&f, PI / 2.0, Interpolation::Bilinear).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let (u, v) = (f.value(&[j, 4 - i], 0), f.value(&[j, 4 - i], 1));
                assert!((g.value(&[i, j], 0) + v).abs() < 1e-15);
                assert!((g.value(&[i, j], 1) - u).abs() < 1e-15);
            }
        }
        assert_eq!(apply_special_tr(&f, 0.0, Interpolation::Bilinear).unwrap(), f);
        assert!(matches!(
            apply_special_tr(&ramp(vec![4, 4], 3), 0.1, Interpolation::Bilinear),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn degenerate_ranges_give_identity() {
        let t = random_ra_transform(2, 3, &RaRanges::identity(), 1).unwrap();
        assert_eq!(t.a_out, DMatrix::identity(3, 3));
        assert_eq!(t.t_out, DVector::zeros(3));
    }

    #[test]
    fn default_ranges_bound_determinant() {
        for seed in 0..200 {
            let t = random_ra_transform(2, 3, &RaRanges::default(), seed).unwrap();
            let det = t.a_out.determinant();
            assert!((0.343 - 1e-12..=0.729 + 1e-12).contains(&det), "det {det}");
        }
    }

    #[test]
    fn same_seed_same_transform() {
        let a = random_ra_transform(2, 3, &RaRanges::default(), 42).unwrap();
        let b = random_ra_transform(2, 3, &RaRanges::default(), 42).unwrap();
        assert_eq!(a, b);
        let c = random_ra_transform(2, 3, &RaRanges::default(), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_interval_is_bad_range() {
        let mut r = RaRanges::default();
        r.scales[1] = (0.9, 0.7);
        assert!(matches!(
            random_ra_transform(2, 3, &r, 0),
            Err(Error::BadRange { .. })
        ));
    }
}
