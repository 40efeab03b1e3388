//! Ground-truth multipath channels.
//!
//! A realization is a list of taps with complex gains, unit-modulus time
//! variation coefficients, delays snapped to the sampling grid and
//! departure/arrival angles. The number of taps is the classification label.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    /// Path gain including the power-delay-profile attenuation.
    pub gain: Complex64,
    /// Unit-modulus time variation, frozen for the frame.
    pub time_variation: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Angle of departure, radians in `[0, 2π)`.
    pub aod: f64,
    /// Angle of arrival, radians in `[0, 2π)`.
    pub aoa: f64,
}

impl Tap {
    /// Effective complex coefficient seen by a static frame.
    pub fn coefficient(&self) -> Complex64 {
        self.gain * self.time_variation
    }

    pub fn sample_index(&self, sample_rate: f64) -> usize {
        (self.delay * sample_rate).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Sorted by strictly increasing delay.
    pub taps: Vec<Tap>,
    pub sample_rate: f64,
}

impl ChannelRealization {
    /// Ground-truth tap count `L`.
    pub fn label(&self) -> usize {
        self.taps.len()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.coefficient().norm_sqr()).sum()
    }

    /// Shortest CIR vector that holds every tap.
    pub fn min_cir_length(&self) -> usize {
        self.taps
            .iter()
            .map(|t| t.sample_index(self.sample_rate) + 1)
            .max()
            .unwrap_or(1)
    }
}

/// Generation parameters for one tap-count class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelClassSpec {
    pub n_taps: usize,
    /// Seconds; taps are placed on `[0, max_delay)`.
    pub max_delay: f64,
    /// Exponential power-delay-profile rate in 1/seconds.
    pub pdp_decay: f64,
    /// Hz.
    pub sample_rate: f64,
}

impl ChannelClassSpec {
    /// Spec whose delay window spans `grid` samples at `sample_rate`.
    pub fn on_grid(n_taps: usize, grid: usize, pdp_decay: f64, sample_rate: f64) -> Self {
        Self {
            n_taps,
            max_delay: grid as f64 / sample_rate,
            pdp_decay,
            sample_rate,
        }
    }

    /// Number of sample positions available for taps.
    pub fn grid_len(&self) -> usize {
        // guard against 500/fs*fs = 499.999...
        (self.max_delay * self.sample_rate + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::InvalidChannelSpec("n_taps must be >= 1".into()));
        }
        if !(self.max_delay > 0.0) || !self.max_delay.is_finite() {
            return Err(Error::InvalidChannelSpec("max_delay must be > 0".into()));
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(Error::InvalidChannelSpec("sample_rate must be > 0".into()));
        }
        if !(self.pdp_decay >= 0.0) || !self.pdp_decay.is_finite() {
            return Err(Error::InvalidChannelSpec("pdp_decay must be >= 0".into()));
        }
        let grid = self.grid_len();
        if self.n_taps > grid {
            return Err(Error::PlacementInfeasible {
                n_taps: self.n_taps,
                grid,
            });
        }
        Ok(())
    }
}

/// Draw one realization. The first tap sits at delay zero, the remaining
/// ones on distinct grid positions chosen uniformly from `1..grid`.
pub fn sample_channel(spec: &ChannelClassSpec, seed: u64) -> Result<ChannelRealization> {
    spec.validate()?;
    let mut rng = seed::rng(seed);
    let grid = spec.grid_len();

    let mut indices: Vec<usize> = index::sample(&mut rng, grid - 1, spec.n_taps - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    indices.sort_unstable();
    indices.insert(0, 0);

    let taps = indices
        .into_iter()
        .map(|idx| {
            let delay = idx as f64 / spec.sample_rate;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let g = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            let gain = g * (-0.5 * spec.pdp_decay * delay).exp();
            let phase = rng.random_range(0.0..TAU);
            Tap {
                gain,
                time_variation: Complex64::from_polar(1.0, phase),
                delay,
                aod: rng.random_range(0.0..TAU),
                aoa: rng.random_range(0.0..TAU),
            }
        })
        .collect();

    Ok(ChannelRealization {
        taps,
        sample_rate: spec.sample_rate,
    })
}

/// Sample the delta train onto `length` taps.
pub fn discretize_cir(ch: &ChannelRealization, length: usize) -> Result<Vec<Complex64>> {
    let mut h = vec![Complex64::new(0.0, 0.0); length];
    for tap in &ch.taps {
        let idx = tap.sample_index(ch.sample_rate);
        if idx >= length {
            return Err(Error::LengthTooShort { length, index: idx });
        }
        h[idx] += tap.coefficient();
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 1e8;

    fn tap_at(index: usize, gain: Complex64) -> Tap {
        Tap {
            gain,
            time_variation: Complex64::new(1.0, 0.0),
            delay: index as f64 / FS,
            aod: 0.0,
            aoa: 0.0,
        }
    }

    #[test]
    fn single_tap_sits_at_zero() {
        let spec = ChannelClassSpec::on_grid(1, 500, 0.0, FS);
        let ch = sample_channel(&spec, 3).unwrap();
        assert_eq!(ch.label(), 1);
        assert_eq!(ch.taps[0].delay, 0.0);
    }

    #[test]
    fn seeded_draws_satisfy_invariants() {
        let spec = ChannelClassSpec::on_grid(5, 500, 1e6, FS);
        for s in 0..1000 {
            let ch = sample_channel(&spec, seed::derive(42, &[s])).unwrap();
            assert_eq!(ch.label(), 5);
            let idx: Vec<usize> = ch.taps.iter().map(|t| t.sample_index(FS)).collect();
            assert_eq!(idx[0], 0);
            assert!(idx.windows(2).all(|w| w[0] < w[1]), "{idx:?}");
            for t in &ch.taps {
                assert!((t.time_variation.norm() - 1.0).abs() < 1e-12);
                assert!(t.delay >= 0.0 && t.delay < spec.max_delay);
                assert!((0.0..TAU).contains(&t.aod) && (0.0..TAU).contains(&t.aoa));
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ChannelClassSpec::on_grid(5, 500, 0.0, FS);
        assert_eq!(sample_channel(&spec, 42).unwrap(), sample_channel(&spec, 42).unwrap());
        assert_ne!(sample_channel(&spec, 42).unwrap(), sample_channel(&spec, 43).unwrap());
    }

    #[test]
    fn full_grid_is_contiguous() {
        let spec = ChannelClassSpec::on_grid(7, 7, 0.0, FS);
        let ch = sample_channel(&spec, 1).unwrap();
        let idx: Vec<usize> = ch.taps.iter().map(|t| t.sample_index(FS)).collect();
        assert_eq!(idx, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn infeasible_placement_is_rejected() {
        let spec = ChannelClassSpec::on_grid(6, 5, 0.0, FS);
        assert!(matches!(
            sample_channel(&spec, 0),
            Err(Error::PlacementInfeasible { n_taps: 6, grid: 5 })
        ));
        let bad = ChannelClassSpec { n_taps: 0, ..spec };
        assert!(matches!(bad.validate(), Err(Error::InvalidChannelSpec(_))));
    }

    #[test]
    fn discretize_places_taps() {
        let one = ChannelRealization {
            taps: vec![tap_at(0, Complex64::new(1.0, 0.0))],
            sample_rate: FS,
        };
        let h = discretize_cir(&one, 4).unwrap();
        assert_eq!(h, vec![1.0.into(), 0.0.into(), 0.0.into(), 0.0.into()]);

        let two = ChannelRealization {
            taps: vec![
                tap_at(0, Complex64::new(1.0, 0.0)),
                tap_at(3, Complex64::new(0.0, -0.5)),
            ],
            sample_rate: FS,
        };
        let h = discretize_cir(&two, 6).unwrap();
        let nz: Vec<usize> = (0..6).filter(|&i| h[i].norm() > 0.0).collect();
        assert_eq!(nz, vec![0, 3]);
        assert!(matches!(
            discretize_cir(&two, 3),
            Err(Error::LengthTooShort { length: 3, index: 3 })
        ));
    }

    #[test]
    fn discretization_conserves_energy_and_label() {
        for l in 1..=30 {
            let spec = ChannelClassSpec::on_grid(l, 500, 2e6, FS);
            let ch = sample_channel(&spec, seed::derive(9, &[l as u64])).unwrap();
            let h = discretize_cir(&ch, 500).unwrap();
            assert_eq!(h.iter().filter(|c| c.norm() > 0.0).count(), l);
            let e: f64 = h.iter().map(|c| c.norm_sqr()).sum();
            assert!((e - ch.energy()).abs() < 1e-10);
        }
    }
}
