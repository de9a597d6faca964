use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::MultiChannelField;
use crate::error::{Error, Result};

/// Whether noisy values are clamped back into the unit interval (image data)
/// or left unbounded (vector fields).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseClamp {
    UnitInterval,
    Unbounded,
}

/// Adds zero-mean Gaussian noise with standard deviation `sigma` to every
/// value of every sample.
pub fn add_gaussian_noise(
    field: &MultiChannelField,
    sigma: f64,
    seed: u64,
    clamp: NoiseClamp,
) -> Result<MultiChannelField> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = field
        .data()
        .iter()
        .map(|&v| {
            let noisy = v + normal.sample(&mut rng);
            match clamp {
                NoiseClamp::UnitInterval => noisy.clamp(0.0, 1.0),
                NoiseClamp::Unbounded => noisy,
            }
        })
        .collect();
    Ok(field.map_data(data))
}

/// Replaces a fraction `density` of values with 0 or 1 (equal odds).
pub fn add_salt_pepper(field: &MultiChannelField, density: f64, seed: u64) -> Result<MultiChannelField> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::param(format!("salt-and-pepper density must lie in [0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = field
        .data()
        .iter()
        .map(|&v| {
            let hit = density >= 1.0 || rng.random::<f64>() < density;
            let salt = rng.random::<bool>();
            if hit {
                if salt {
                    1.0
                } else {
                    0.0
                }
            } else {
                v
            }
        })
        .collect();
    Ok(field.map_data(data))
}

/// Power-ratio SNR in dB: mean squared clean value over mean squared difference.
pub fn snr_db(clean: &MultiChannelField, noisy: &MultiChannelField) -> Result<f64> {
    if clean.data().len() != noisy.data().len() {
        return Err(Error::DimMismatch("fields differ in size".into()));
    }
    let signal: f64 = clean.data().iter().map(|v| v * v).sum();
    let noise: f64 = clean
        .data()
        .iter()
        .zip(noisy.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(10.0 * (signal / noise).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth(extent: usize) -> MultiChannelField {
        MultiChannelField::from_fn(vec![extent, extent], 3, |x, o| {
            o[0] = 0.5 + 0.3 * (0.1 * x[0]).sin();
            o[1] = 0.4 + 0.2 * (0.07 * x[1]).cos();
            o[2] = 0.6;
        })
        .unwrap()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let f = smooth(8);
        assert_eq!(add_gaussian_noise(&f, 0.0, 3, NoiseClamp::UnitInterval).unwrap(), f);
        assert_eq!(add_salt_pepper(&f, 0.0, 3).unwrap(), f);
    }

    #[test]
    fn full_density_saturates() {
        let f = smooth(8);
        let g = add_salt_pepper(&f, 1.0, 5).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let f = smooth(4);
        assert!(add_gaussian_noise(&f, -0.1, 0, NoiseClamp::Unbounded).is_err());
        assert!(add_salt_pepper(&f, 1.5, 0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let f = smooth(6);
        let a = add_gaussian_noise(&f, 0.05, 11, NoiseClamp::Unbounded).unwrap();
        let b = add_gaussian_noise(&f, 0.05, 11, NoiseClamp::Unbounded).unwrap();
        let c = add_gaussian_noise(&f, 0.05, 12, NoiseClamp::Unbounded).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn image_noise_is_clamped() {
        let f = smooth(16);
        let g = add_gaussian_noise(&f, 0.5, 1, NoiseClamp::UnitInterval).unwrap();
        assert!(g.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn snr_matches_direct_power_ratio() {
        let f = smooth(64);
        let sigma = 0.02;
        let g = add_gaussian_noise(&f, sigma, 9, NoiseClamp::UnitInterval).unwrap();
        let measured = snr_db(&f, &g).unwrap();
        let len = f.data().len() as f64;
        let signal = f.data().iter().map(|v| v * v).sum::<f64>() / len;
        let expected = 10.0 * (signal / (sigma * sigma)).log10();
        assert!((measured - expected).abs() < 1.0, "{measured} vs {expected}");
    }
}
