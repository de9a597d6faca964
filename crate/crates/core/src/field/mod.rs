//! Grid-sampled multi-channel functions `F: R^M -> R^N`.
//!
//! Samples are stored in C order with the channel index fastest. Sample
//! `(i_1, ..., i_M)` sits at coordinate `(i_m - (extent_m - 1) / 2) * spacing`,
//! so the domain is centered on the origin.

mod io;
mod noise;
mod transform;

pub use io::{load_field, save_field, FieldFormat};
pub use noise::{add_gaussian_noise, add_salt_pepper, snr_db, NoiseClamp};
pub use transform::{
    apply_outer_affine, apply_special_tr, random_ra_transform, rotate_spatial, rotate_spatial_2d,
    rotation_2d, Interpolation, RaRanges, RaTransform,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelField {
    extent: Vec<usize>,
    channels: usize,
    spacing: f64,
    data: Vec<f64>,
}

impl MultiChannelField {
    pub fn new(extent: Vec<usize>, channels: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_spacing(extent, channels, 1.0, data)
    }

    pub fn with_spacing(
        extent: Vec<usize>,
        channels: usize,
        spacing: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if extent.is_empty() {
            return Err(Error::param("coordinate dimension must be at least 1"));
        }
        if channels == 0 {
            return Err(Error::param("channel dimension must be at least 1"));
        }
        if let Some(e) = extent.iter().find(|&&e| e < 2) {
            return Err(Error::param(format!("every extent must be >= 2, got {e}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param(format!("spacing must be positive, got {spacing}")));
        }
        let expected = extent.iter().product::<usize>() * channels;
        if data.len() != expected {
            return Err(Error::DimMismatch(format!(
                "data holds {} values, extent {:?} x {} channels needs {}",
                data.len(),
                extent,
                channels,
                expected
            )));
        }
        Ok(Self {
            extent,
            channels,
            spacing,
            data,
        })
    }

    pub fn zeros(extent: Vec<usize>, channels: usize) -> Result<Self> {
        let len = extent.iter().product::<usize>() * channels;
        Self::new(extent, channels, vec![0.0; len])
    }

    /// Builds a field by evaluating `f` at every sample coordinate; `f` writes
    /// the `channels` values of that sample into the provided slice.
    pub fn from_fn<F>(extent: Vec<usize>, channels: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut field = Self::zeros(extent, channels)?;
        let m = field.coord_dim();
        let mut coords = vec![0.0; m];
        let mut index = vec![0usize; m];
        for s in 0..field.num_samples() {
            field.unravel_into(s, &mut index);
            for (c, (&i, &e)) in coords.iter_mut().zip(index.iter().zip(&field.extent)) {
                *c = (i as f64 - (e as f64 - 1.0) / 2.0) * field.spacing;
            }
            let start = s * channels;
            f(&coords, &mut field.data[start..start + channels]);
        }
        Ok(field)
    }

    pub fn coord_dim(&self) -> usize {
        self.extent.len()
    }

    pub fn channel_dim(&self) -> usize {
        self.channels
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn num_samples(&self) -> usize {
        self.extent.iter().product()
    }

    /// Grid center in index units, per axis.
    pub fn center(&self) -> Vec<f64> {
        self.extent.iter().map(|&e| (e as f64 - 1.0) / 2.0).collect()
    }

    /// Coordinate of index `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - (self.extent[axis] as f64 - 1.0) / 2.0) * self.spacing
    }

    /// Coordinates of every grid index along `axis`.
    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.extent[axis])
            .map(|i| self.coordinate(axis, i))
            .collect()
    }

    /// Flat sample number of a multi-index.
    pub fn sample_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.extent)
            .fold(0, |acc, (&i, &e)| acc * e + i)
    }

    pub fn unravel_into(&self, mut sample: usize, index: &mut [usize]) {
        for (slot, &e) in index.iter_mut().zip(&self.extent).rev() {
            *slot = sample % e;
            sample /= e;
        }
    }

    /// Channel vector of one sample.
    pub fn sample(&self, sample: usize) -> &[f64] {
        &self.data[sample * self.channels..(sample + 1) * self.channels]
    }

    pub fn sample_mut(&mut self, sample: usize) -> &mut [f64] {
        &mut self.data[sample * self.channels..(sample + 1) * self.channels]
    }

    pub fn value(&self, index: &[usize], channel: usize) -> f64 {
        self.data[self.sample_index(index) * self.channels + channel]
    }

    pub(crate) fn map_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            extent: self.extent.clone(),
            channels: self.channels,
            spacing: self.spacing,
            data,
        }
    }

    /// Copies the axis-aligned box starting at `origin` with side `size` per axis.
    pub fn window(&self, origin: &[usize], size: &[usize]) -> Result<Self> {
        if origin.len() != self.coord_dim() || size.len() != self.coord_dim() {
            return Err(Error::DimMismatch("window rank differs from field rank".into()));
        }
        for ((&o, &s), &e) in origin.iter().zip(size).zip(&self.extent) {
            if o + s > e {
                return Err(Error::WindowTooLarge {
                    window: s,
                    extent: self.extent.clone(),
                });
            }
        }
        let out_samples: usize = size.iter().product();
        let mut data = Vec::with_capacity(out_samples * self.channels);
        let mut local = vec![0usize; size.len()];
        let mut global = vec![0usize; size.len()];
        for s in 0..out_samples {
            let mut rem = s;
            for (slot, &e) in local.iter_mut().zip(size).rev() {
                *slot = rem % e;
                rem /= e;
            }
            for ((g, &l), &o) in global.iter_mut().zip(&local).zip(origin) {
                *g = l + o;
            }
            data.extend_from_slice(self.sample(self.sample_index(&global)));
        }
        Self::with_spacing(size.to_vec(), self.channels, self.spacing, data)
    }

    /// Writes `patch` into this field with its first sample at `origin`.
    pub fn paste(&mut self, patch: &MultiChannelField, origin: &[usize]) -> Result<()> {
        if patch.channels != self.channels || patch.coord_dim() != self.coord_dim() {
            return Err(Error::DimMismatch("patch dimensions differ from field".into()));
        }
        for ((&o, &s), &e) in origin.iter().zip(&patch.extent).zip(&self.extent) {
            if o + s > e {
                return Err(Error::WindowTooLarge {
                    window: s,
                    extent: self.extent.clone(),
                });
            }
        }
        let mut local = vec![0usize; patch.coord_dim()];
        let mut global = vec![0usize; patch.coord_dim()];
        for s in 0..patch.num_samples() {
            patch.unravel_into(s, &mut local);
            for ((g, &l), &o) in global.iter_mut().zip(&local).zip(origin) {
                *g = l + o;
            }
            let dst = self.sample_index(&global);
            self.sample_mut(dst).copy_from_slice(patch.sample(s));
        }
        Ok(())
    }
}

/// Indicator of the inscribed disc (hyperball) centered at the grid center with
/// radius `(min extent - 1) / 2` in index units.
pub fn inscribed_disc(extent: &[usize]) -> Vec<bool> {
    let radius = (*extent.iter().min().expect("non-empty extent") as f64 - 1.0) / 2.0;
    let r2 = radius * radius;
    let centers: Vec<f64> = extent.iter().map(|&e| (e as f64 - 1.0) / 2.0).collect();
    let total: usize = extent.iter().product();
    let mut index = vec![0usize; extent.len()];
    (0..total)
        .map(|s| {
            let mut rem = s;
            for (slot, &e) in index.iter_mut().zip(extent).rev() {
                *slot = rem % e;
                rem /= e;
            }
            let d2: f64 = index
                .iter()
                .zip(&centers)
                .map(|(&i, &c)| (i as f64 - c).powi(2))
                .sum();
            d2 <= r2 + 1e-9
        })
        .collect()
}

/// Zeroes every sample outside the inscribed disc.
pub fn circular_mask(field: &MultiChannelField) -> MultiChannelField {
    let disc = inscribed_disc(field.extent());
    let n = field.channel_dim();
    let mut data = field.data().to_vec();
    for (s, inside) in disc.iter().enumerate() {
        if !inside {
            data[s * n..(s + 1) * n].fill(0.0);
        }
    }
    field.map_data(data)
}

/// Per-channel mean over all samples.
pub fn channel_means(field: &MultiChannelField) -> Vec<f64> {
    channel_means_within(field, None)
}

fn channel_means_within(field: &MultiChannelField, mask: Option<&[bool]>) -> Vec<f64> {
    let n = field.channel_dim();
    let mut sums = vec![0.0; n];
    let mut count = 0usize;
    for s in 0..field.num_samples() {
        if mask.is_some_and(|m| !m[s]) {
            continue;
        }
        count += 1;
        for (acc, &v) in sums.iter_mut().zip(field.sample(s)) {
            *acc += v;
        }
    }
    let count = count.max(1) as f64;
    sums.iter().map(|s| s / count).collect()
}

/// Removes each channel's mean over the whole domain.
pub fn subtract_channel_mean(field: &MultiChannelField) -> MultiChannelField {
    subtract_mean_impl(field, None)
}

/// Removes each channel's mean taken over the samples where `mask` is set;
/// samples outside the mask are left untouched.
pub fn subtract_channel_mean_within(
    field: &MultiChannelField,
    mask: &[bool],
) -> Result<MultiChannelField> {
    if mask.len() != field.num_samples() {
        return Err(Error::DimMismatch(format!(
            "mask has {} entries for {} samples",
            mask.len(),
            field.num_samples()
        )));
    }
    Ok(subtract_mean_impl(field, Some(mask)))
}

fn subtract_mean_impl(field: &MultiChannelField, mask: Option<&[bool]>) -> MultiChannelField {
    let means = channel_means_within(field, mask);
    let n = field.channel_dim();
    let mut data = field.data().to_vec();
    for s in 0..field.num_samples() {
        if mask.is_some_and(|m| !m[s]) {
            continue;
        }
        for (v, m) in data[s * n..(s + 1) * n].iter_mut().zip(&means) {
            *v -= m;
        }
    }
    field.map_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(extent: Vec<usize>, channels: usize) -> MultiChannelField {
        let len = extent.iter().product::<usize>() * channels;
        MultiChannelField::new(extent, channels, (0..len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        assert!(matches!(
            MultiChannelField::new(vec![3, 3], 2, vec![0.0; 17]),
            Err(Error::DimMismatch(_))
        ));
        assert!(MultiChannelField::new(vec![1, 3], 1, vec![0.0; 3]).is_err());
        assert!(MultiChannelField::with_spacing(vec![2, 2], 1, 0.0, vec![0.0; 4]).is_err());
    }

    #[test]
    fn coordinates_are_centered() {
        let f = MultiChannelField::zeros(vec![5, 4], 1).unwrap();
        assert_eq!(f.axis_coordinates(0), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(f.axis_coordinates(1), vec![-1.5, -0.5, 0.5, 1.5]);
    }

    #[test]
    fn from_fn_sees_coordinates() {
        let f = MultiChannelField::from_fn(vec![3, 3], 2, |x, out| {
            out[0] = x[0];
            out[1] = x[1];
        })
        .unwrap();
        assert_eq!(f.sample(0), &[-1.0, -1.0]);
        assert_eq!(f.sample(5), &[0.0, 1.0]);
    }

    #[test]
    fn constant_field_mean_removal_gives_zero() {
        let f = MultiChannelField::new(vec![4, 4], 2, vec![0.7; 32]).unwrap();
        let g = subtract_channel_mean(&f);
        assert!(g.data().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_mean_field_is_unchanged() {
        let f = subtract_channel_mean(&ramp(vec![5, 6], 3));
        let g = subtract_channel_mean(&f);
        for (a, b) in f.data().iter().zip(g.data()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn channel_means_vanish_by_direct_summation() {
        // Two channels with means 0.2 and 0.5 plus a zero-mean perturbation.
        let f = MultiChannelField::from_fn(vec![7, 9], 2, |x, out| {
            out[0] = 0.2 + 0.01 * x[0];
            out[1] = 0.5 - 0.03 * x[1];
        })
        .unwrap();
        let g = subtract_channel_mean(&f);
        for n in 0..2 {
            let total: f64 = (0..g.num_samples()).map(|s| g.sample(s)[n]).sum();
            assert!(total.abs() < 1e-12, "channel {n} sum {total}");
        }
    }

    #[test]
    fn masked_mean_leaves_outside_untouched() {
        let f = circular_mask(&MultiChannelField::new(vec![5, 5], 1, vec![2.0; 25]).unwrap());
        let disc = inscribed_disc(f.extent());
        let g = subtract_channel_mean_within(&f, &disc).unwrap();
        assert!(g.data().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn tiny_disc_is_a_plus_shape() {
        let f = circular_mask(&MultiChannelField::new(vec![3, 3], 1, vec![1.0; 9]).unwrap());
        assert_eq!(f.data(), &[0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn disc_count_matches_lattice_enumeration() {
        let f = circular_mask(&MultiChannelField::new(vec![257, 257], 1, vec![1.0; 257 * 257]).unwrap());
        let nonzero = f.data().iter().filter(|&&v| v != 0.0).count();
        let mut expected = 0;
        for x in 1..=257i64 {
            for y in 1..=257i64 {
                if (x - 129).pow(2) + (y - 129).pow(2) <= 128 * 128 {
                    expected += 1;
                }
            }
        }
        assert_eq!(nonzero, expected);
        assert_eq!(circular_mask(&f), f);
    }

    #[test]
    fn window_and_paste_roundtrip() {
        let f = ramp(vec![6, 7], 2);
        let w = f.window(&[1, 2], &[3, 4]).unwrap();
        assert_eq!(w.sample(0), f.sample(f.sample_index(&[1, 2])));
        let mut g = MultiChannelField::zeros(vec![6, 7], 2).unwrap();
        g.paste(&w, &[1, 2]).unwrap();
        assert_eq!(g.value(&[3, 5], 1), f.value(&[3, 5], 1));
        assert!(f.window(&[4, 0], &[3, 3]).is_err());
    }
}
