use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub position: f64,
}

/// Piecewise-constant position targets; the velocity target is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    #[serde(rename = "segment")]
    pub segments: Vec<Segment>,
}

impl ReferenceSpec {
    pub fn constant(position: f64) -> Self {
        ReferenceSpec {
            segments: vec![Segment { start: 0.0, position }],
        }
    }

    /// `+amplitude, -amplitude, ...`, switching every `period` seconds up to `horizon`.
    pub fn alternating(amplitude: f64, period: f64, horizon: f64) -> Self {
        let count = ((horizon / period) - 1e-9).ceil().max(1.0) as usize;
        ReferenceSpec {
            segments: (0..count)
                .map(|i| Segment {
                    start: i as f64 * period,
                    position: if i % 2 == 0 { amplitude } else { -amplitude },
                })
                .collect(),
        }
    }

    /// The default tracking task: `±1` alternating every 2 s.
    pub fn square_wave(horizon: f64) -> Self {
        Self::alternating(1.0, 2.0, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::Config("reference has no segments".into()))?;
        if first.start != 0.0 {
            return Err(Error::Config("reference must start at t = 0".into()));
        }
        if self.segments.windows(2).any(|w| !(w[1].start > w[0].start)) {
            return Err(Error::Config("reference segments must be strictly increasing in time".into()));
        }
        if self.segments.iter().any(|s| !s.position.is_finite()) {
            return Err(Error::Config("reference positions must be finite".into()));
        }
        Ok(())
    }

    pub fn position_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .take_while(|s| s.start <= t + 1e-9)
            .last()
            .map_or(self.segments[0].position, |s| s.position)
    }

    /// `x_ref(k) = (z_ref(k dt), 0, ..)`.
    pub fn state_at<T: Real>(&self, k: usize, dt: f64, p: usize) -> DVector<T> {
        let mut x = DVector::zeros(p);
        x[0] = lit(self.position_at(k as f64 * dt));
        x
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("reference serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: ReferenceSpec = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        r.validate()?;
        Ok(r)
    }
}
