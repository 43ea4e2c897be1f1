use std::f64::consts::FRAC_PI_4;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Seed for the per-frame parameter tables of the built-in reconfiguring scenarios.
pub const FRAME_SEED: u64 = 0x5eed_f4a3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Continuously varying spring and damper.
    Ltv,
    /// `Ltv` plus cubic damping and input saturation.
    Nl,
    /// `Nl` plus a position-dependent stochastic velocity disturbance.
    Nld,
    /// Piecewise-constant parameters, switched every frame with a velocity kick.
    InstReconfig,
    /// Per-frame base parameters modulated in time, switched with a velocity kick.
    MixedReconfig,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Ltv,
        ScenarioKind::Nl,
        ScenarioKind::Nld,
        ScenarioKind::InstReconfig,
        ScenarioKind::MixedReconfig,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Ltv => "ltv",
            ScenarioKind::Nl => "nl",
            ScenarioKind::Nld => "nld",
            ScenarioKind::InstReconfig => "inst-reconfig",
            ScenarioKind::MixedReconfig => "mixed-reconfig",
        }
    }

    pub fn is_nonlinear(self) -> bool {
        matches!(self, ScenarioKind::Nl | ScenarioKind::Nld)
    }

    pub fn is_reconfig(self) -> bool {
        matches!(self, ScenarioKind::InstReconfig | ScenarioKind::MixedReconfig)
    }

    /// Whether the parameters follow the trigonometric modulation in time.
    pub fn is_modulated(self) -> bool {
        !matches!(self, ScenarioKind::InstReconfig)
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameParams {
    pub mass: f64,
    pub spring: f64,
    pub damping: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    /// Position around which the `Nld` disturbance acts (m).
    pub center: f64,
    /// Width of the Gaussian bump (m).
    pub width: f64,
    /// Standard deviation of the per-step bump amplitude (m/s^2).
    pub sigma: f64,
    /// Standard deviation of the velocity jump at frame switches (m/s).
    pub kick_sigma: f64,
}

impl Default for Disturbance {
    fn default() -> Self {
        Disturbance {
            center: 2.0,
            width: 0.25,
            sigma: 2.0,
            kick_sigma: 0.5,
        }
    }
}

/// How parameters are evaluated inside one sampling interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamHold {
    /// Parameters vary continuously with time (the physical plant).
    #[default]
    Continuous,
    /// Parameters are frozen at the start of each sample (the linearization's assumption).
    PerStep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// kg
    pub mass: f64,
    /// N/m
    pub spring: f64,
    /// N s/m
    pub damping: f64,
    /// N s^3/m^3, `Nl`/`Nld` only.
    pub cubic_damping: f64,
    /// Parameter modulation frequency (rad/s).
    pub param_freq: f64,
    /// Input saturation limit (N), `Nl`/`Nld` only.
    pub saturation: f64,
    pub disturbance: Disturbance,
    /// s
    pub frame_duration: f64,
    /// Per-frame `(m, C_s, C_d)`; empty for non-reconfiguring kinds.
    pub frames: Vec<FrameParams>,
    /// Sampling interval (s).
    pub dt: f64,
    /// s
    pub horizon: f64,
    /// RK4 sub-steps per sampling interval.
    pub substeps: usize,
    #[serde(default)]
    pub param_hold: ParamHold,
}

impl ScenarioSpec {
    /// One of the five built-in scenarios with default constants.
    pub fn builtin(kind: ScenarioKind) -> Self {
        let mut spec = ScenarioSpec {
            kind,
            mass: 1.0,
            spring: 1.0,
            damping: 0.5,
            cubic_damping: 0.1,
            param_freq: std::f64::consts::FRAC_PI_2,
            saturation: 5.0,
            disturbance: Disturbance::default(),
            frame_duration: 2.0,
            frames: Vec::new(),
            dt: 0.02,
            horizon: 10.0,
            substeps: 10,
            param_hold: ParamHold::Continuous,
        };
        if kind.is_reconfig() {
            spec.frames = sample_frames(spec.frame_count(), FRAME_SEED, kind);
        }
        spec
    }

    /// Resolves a built-in name or a scenario file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match ScenarioKind::from_str(name_or_path) {
            Ok(kind) => Ok(Self::builtin(kind)),
            Err(_) if Path::new(name_or_path).exists() => Self::load(name_or_path),
            Err(e) => Err(e),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: ScenarioSpec = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario spec serializes")
    }

    /// Number of sampling intervals `N = round(T / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// `ceil(T / frame_duration)`.
    pub fn frame_count(&self) -> usize {
        (self.horizon / self.frame_duration - 1e-9).ceil().max(1.0) as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Same plant over a different horizon. Reconfiguration frames are
    /// truncated, or extended from the built-in frame stream.
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        if self.kind.is_reconfig() {
            let count = self.frame_count();
            if count <= self.frames.len() {
                self.frames.truncate(count);
            } else {
                let extra = sample_frames(count, FRAME_SEED, self.kind);
                self.frames.extend_from_slice(&extra[self.frames.len()..]);
            }
        }
        self
    }

    /// Same plant with all stochastic disturbances switched off.
    pub fn without_disturbances(mut self) -> Self {
        self.disturbance.sigma = 0.0;
        self.disturbance.kick_sigma = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.mass > 0.0) {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt) {
            return bad(format!("horizon {} shorter than dt {}", self.horizon, self.dt));
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        if self.kind.is_nonlinear() && !(self.saturation > 0.0) {
            return bad(format!("saturation must be positive, got {}", self.saturation));
        }
        if self.kind.is_reconfig() {
            if (self.frame_duration - 2.0).abs() > 1e-12 {
                return bad(format!("frame duration must be 2 s, got {}", self.frame_duration));
            }
            if self.frames.len() != self.frame_count() {
                return bad(format!(
                    "expected {} frames, got {}",
                    self.frame_count(),
                    self.frames.len()
                ));
            }
            if let Some(f) = self.frames.iter().find(|f| !(f.mass > 0.0)) {
                return bad(format!("frame mass must be positive, got {}", f.mass));
            }
        } else if !self.frames.is_empty() {
            return bad(format!("{} takes no frame table", self.kind));
        }
        Ok(())
    }

    /// Frame index `floor(t / 2)`, clamped to the table.
    pub fn frame_index(&self, t: f64) -> usize {
        let i = ((t + 1e-9) / self.frame_duration).floor().max(0.0) as usize;
        i.min(self.frames.len().saturating_sub(1))
    }

    /// `(m, C_s(t), C_d(t))` at time `t`.
    pub fn params_at(&self, t: f64) -> Result<super::PlantParams> {
        let tol = 1e-9 * self.horizon.max(1.0);
        if !(t >= -tol && t <= self.horizon + tol) {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(self.params_in_frame(t, self.frame_index(t)))
    }

    /// Parameters at `t` with the frame fixed by the caller.
    pub(crate) fn params_in_frame(&self, t: f64, frame: usize) -> super::PlantParams {
        let (mass, spring, damping) = match self.kind {
            ScenarioKind::Ltv | ScenarioKind::Nl | ScenarioKind::Nld => {
                (self.mass, self.spring, self.damping)
            }
            ScenarioKind::InstReconfig | ScenarioKind::MixedReconfig => {
                let f = self.frames[frame];
                (f.mass, f.spring, f.damping)
            }
        };
        if self.kind.is_modulated() {
            let w = self.param_freq;
            super::PlantParams {
                mass,
                spring: (1.5 * w * t + FRAC_PI_4).cos().powi(2) * spring,
                damping: (1.5 + (w * t).cos()) * damping,
            }
        } else {
            super::PlantParams {
                mass,
                spring,
                damping,
            }
        }
    }
}

fn sample_frames(count: usize, seed: u64, kind: ScenarioKind) -> Vec<FrameParams> {
    let mut rng = substream(seed, "frames", kind as u64);
    (0..count)
        .map(|_| FrameParams {
            mass: rng.random_range(0.5..=2.0),
            spring: rng.random_range(0.5..=2.0),
            damping: rng.random_range(0.25..=1.0),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ltv_params_at_zero() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let p = spec.params_at(0.0).unwrap();
        assert_relative_eq!(p.spring, 0.5 * spec.spring, epsilon = 1e-15);
        assert_relative_eq!(p.damping, 2.5 * spec.damping, epsilon = 1e-15);
        assert_eq!(p.mass, spec.mass);
    }

    #[test]
    fn inst_reconfig_selects_frame() {
        let mut spec = ScenarioSpec::builtin(ScenarioKind::InstReconfig);
        spec.horizon = 4.0;
        spec.frames = vec![
            FrameParams { mass: 1.0, spring: 1.0, damping: 1.0 },
            FrameParams { mass: 2.0, spring: 3.0, damping: 4.0 },
        ];
        spec.validate().unwrap();
        let p = spec.params_at(2.0).unwrap();
        assert_eq!((p.mass, p.spring, p.damping), (2.0, 3.0, 4.0));
        let p = spec.params_at(1.999).unwrap();
        assert_eq!(p.mass, 1.0);
    }

    #[test]
    fn mixed_reconfig_modulates_frame_base() {
        let mut spec = ScenarioSpec::builtin(ScenarioKind::MixedReconfig);
        spec.frames[1] = FrameParams { mass: 1.5, spring: 3.0, damping: 4.0 };
        let w = spec.param_freq;
        let p = spec.params_at(2.0).unwrap();
        assert_relative_eq!(p.spring, (3.0 * w + FRAC_PI_4).cos().powi(2) * 3.0, epsilon = 1e-12);
        assert_relative_eq!(p.damping, (1.5 + (2.0 * w).cos()) * 4.0, epsilon = 1e-12);
        assert_eq!(p.mass, 1.5);
    }

    #[test]
    fn params_outside_horizon_is_domain_error() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        assert!(matches!(spec.params_at(-0.1), Err(Error::Domain(_))));
        assert!(matches!(spec.params_at(10.5), Err(Error::Domain(_))));
        assert!(spec.params_at(10.0).is_ok());
    }

    #[test]
    fn builtins_are_valid_and_sized() {
        for kind in ScenarioKind::ALL {
            let spec = ScenarioSpec::builtin(kind);
            spec.validate().unwrap();
            assert_eq!(spec.steps(), 500);
            let expected = if kind.is_reconfig() { 5 } else { 0 };
            assert_eq!(spec.frames.len(), expected);
            for f in &spec.frames {
                assert!((0.5..=2.0).contains(&f.mass));
                assert!((0.5..=2.0).contains(&f.spring));
                assert!((0.25..=1.0).contains(&f.damping));
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = ScenarioSpec::builtin(ScenarioKind::InstReconfig);
        spec.frames.pop();
        assert!(spec.validate().is_err());
        let mut spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        spec.mass = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        spec.horizon = 0.001;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let spec = ScenarioSpec::builtin(ScenarioKind::MixedReconfig);
        let back: ScenarioSpec = toml::from_str(&spec.to_toml()).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn names_parse() {
        for kind in ScenarioKind::ALL {
            assert_eq!(kind.name().parse::<ScenarioKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn horizon_change_keeps_frame_prefix() {
        let full = ScenarioSpec::builtin(ScenarioKind::InstReconfig);
        let short = full.clone().with_horizon(3.0);
        assert_eq!(short.frames, full.frames[..2]);
        short.validate().unwrap();
        let long = short.with_horizon(14.0);
        assert_eq!(long.frames[..5], full.frames[..]);
        assert_eq!(long.frames.len(), 7);
        long.validate().unwrap();
    }
}
