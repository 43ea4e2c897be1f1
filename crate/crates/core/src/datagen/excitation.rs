use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Parameters of a noisy linear chirp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSpec {
    /// N
    pub amplitude: f64,
    /// Lowest frequency (rad/s).
    pub w0: f64,
    /// Highest frequency (rad/s).
    pub w1: f64,
    /// s
    pub duration: f64,
    /// rad
    pub phase: f64,
    /// Variance of the additive Gaussian input noise (N^2).
    pub noise_var: f64,
}

impl ExcitationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) {
            return Err(Error::Config(format!("chirp amplitude must be positive, got {}", self.amplitude)));
        }
        if !(self.w0 > 0.0 && self.w0 <= self.w1) {
            return Err(Error::Config(format!(
                "chirp frequencies must satisfy 0 < w0 <= w1, got ({}, {})",
                self.w0, self.w1
            )));
        }
        if !(self.noise_var >= 0.0) || !(self.duration > 0.0) {
            return Err(Error::Config("chirp noise variance and duration must be non-negative".into()));
        }
        Ok(())
    }

    /// Noise-free part of the signal.
    pub fn clean(&self, t: f64) -> f64 {
        let sweep = (self.w1 - self.w0) / self.duration;
        self.amplitude * (sweep * t * t + self.w0 * t + self.phase).sin()
    }
}

/// `A sin(((w1 - w0) / T) t^2 + w0 t + phi) + d_c(t)`, `d_c ~ N(0, noise_var)`.
///
/// The noise sample is only drawn when `noise_var > 0`, so a clean chirp
/// does not advance `rng`.
pub fn chirp(ex: &ExcitationSpec, t: f64, rng: &mut Rng) -> f64 {
    let clean = ex.clean(t);
    if ex.noise_var > 0.0 {
        clean
            + Normal::new(0.0, ex.noise_var.sqrt())
                .expect("finite standard deviation")
                .sample(rng)
    } else {
        clean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn spec() -> ExcitationSpec {
        ExcitationSpec { amplitude: 1.5, w0: 0.5, w1: 8.0, duration: 10.0, phase: 0.0, noise_var: 0.0 }
    }

    #[test]
    fn starts_at_zero_without_phase() {
        let mut rng = substream(0, "c", 0);
        assert_eq!(chirp(&spec(), 0.0, &mut rng), 0.0);
    }

    #[test]
    fn degenerate_sweep_is_a_sinusoid() {
        let ex = ExcitationSpec { w1: 0.5, phase: 0.3, ..spec() };
        let mut rng = substream(0, "c", 0);
        for t in [0.0, 0.7, 3.1, 9.9] {
            assert_relative_eq!(chirp(&ex, t, &mut rng), 1.5 * (0.5 * t + 0.3).sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn quarter_phase_gives_amplitude() {
        let ex = ExcitationSpec { phase: std::f64::consts::FRAC_PI_2, ..spec() };
        let mut rng = substream(0, "c", 0);
        assert_relative_eq!(chirp(&ex, 0.0, &mut rng), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn noise_has_requested_variance() {
        let ex = ExcitationSpec { noise_var: 0.04, ..spec() };
        let mut rng = substream(9, "c", 0);
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|_| chirp(&ex, 0.0, &mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 0.04).abs() < 0.004, "variance {var}");
    }

    #[test]
    fn rejects_inverted_band() {
        assert!(ExcitationSpec { w0: 2.0, w1: 1.0, ..spec() }.validate().is_err());
        assert!(ExcitationSpec { amplitude: 0.0, ..spec() }.validate().is_err());
        assert!(spec().validate().is_ok());
    }
}
