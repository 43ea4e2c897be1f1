use nalgebra::{DVector, Vector2};
use rand_distr::{Distribution, Normal};

use super::scenario::{ParamHold, ScenarioKind, ScenarioSpec};
use crate::datagen::Trajectory;
use crate::error::{Error, Result};
use crate::rng::{substream, Rng};

/// `[z, z']`: position (m) and velocity (m/s).
pub type StateVec = Vector2<f64>;

/// Instantaneous physical parameters `(m, C_s, C_d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantParams {
    pub mass: f64,
    pub spring: f64,
    pub damping: f64,
}

/// Clamps `u` to `[-limit, limit]`.
pub fn sat(u: f64, limit: f64) -> f64 {
    u.clamp(-limit, limit)
}

impl ScenarioSpec {
    /// State derivative at `t`. `kick` is the sampled disturbance amplitude;
    /// for `Nld` it is shaped by the Gaussian bump around the disturbance
    /// center, for other kinds it is added to the acceleration as is.
    pub fn derivative(&self, t: f64, x: &StateVec, u: f64, kick: f64) -> Result<StateVec> {
        let p = self.params_at(t)?;
        Ok(self.rate(&p, x, u, kick))
    }

    fn rate(&self, p: &PlantParams, x: &StateVec, u: f64, kick: f64) -> StateVec {
        let (pos, vel) = (x[0], x[1]);
        let mut force = -p.spring * pos - p.damping * vel;
        if self.kind.is_nonlinear() {
            force += -self.cubic_damping * vel.powi(3) + sat(u, self.saturation);
        } else {
            force += u;
        }
        let disturbance = if self.kind == ScenarioKind::Nld {
            let d = &self.disturbance;
            let offset = pos - d.center;
            kick * (-offset * offset / (2.0 * d.width * d.width)).exp()
        } else {
            kick
        };
        StateVec::new(vel, force / p.mass + disturbance)
    }

    /// Advances the plant over `[t, t + dt]` with `u` held constant.
    ///
    /// The interval is split into `substeps` classical RK4 steps. The frame of
    /// a reconfiguring plant is fixed by `t`, and the `Nld` disturbance
    /// amplitude is drawn once from `rng` and held for the whole interval.
    pub fn step_rk4(&self, t: f64, x: &StateVec, u: f64, dt: f64, rng: &mut Rng) -> Result<StateVec> {
        self.params_at(t)?;
        let kick = if self.kind == ScenarioKind::Nld {
            Normal::new(0.0, self.disturbance.sigma)
                .map_err(|e| Error::Config(e.to_string()))?
                .sample(rng)
        } else {
            0.0
        };
        let frame = self.frame_index(t);
        let held = self.params_in_frame(t, frame);
        let params = |s: f64| match self.param_hold {
            ParamHold::PerStep => held,
            ParamHold::Continuous => self.params_in_frame(s, frame),
        };

        let h = dt / self.substeps as f64;
        let mut y = *x;
        for i in 0..self.substeps {
            let s = t + i as f64 * h;
            let (p0, pm, p1) = (params(s), params(s + 0.5 * h), params(s + h));
            let k1 = self.rate(&p0, &y, u, kick);
            let k2 = self.rate(&pm, &(y + k1 * (0.5 * h)), u, kick);
            let k3 = self.rate(&pm, &(y + k2 * (0.5 * h)), u, kick);
            let k4 = self.rate(&p1, &(y + k3 * h), u, kick);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        if y.iter().all(|v| v.is_finite()) {
            Ok(y)
        } else {
            Err(Error::Integration { t })
        }
    }

    /// Open-loop simulation from `x0`. `input` is sampled at the start of
    /// every interval and held (zero-order hold).
    pub fn simulate(
        &self,
        x0: StateVec,
        mut input: impl FnMut(f64) -> f64,
        seed: u64,
    ) -> Result<Trajectory<f64>> {
        let n = self.steps();
        let mut stepper = PlantStepper::new(self, seed);
        let mut states = Vec::with_capacity(n + 1);
        let mut inputs = Vec::with_capacity(n);
        let mut x = x0;
        states.push(DVector::from_column_slice(x.as_slice()));
        for k in 0..n {
            let u = input(self.time(k));
            x = stepper.step(&x, u)?;
            inputs.push(DVector::from_element(1, u));
            states.push(DVector::from_column_slice(x.as_slice()));
        }
        Ok(Trajectory {
            times: (0..=n).map(|k| self.time(k)).collect(),
            states,
            inputs,
            seed,
            noisy: false,
        })
    }
}

/// Steps a plant one sampling interval at a time, applying the
/// reconfiguration velocity kicks at frame switches.
pub struct PlantStepper<'a> {
    spec: &'a ScenarioSpec,
    rng: Rng,
    kick_rng: Rng,
    k: usize,
    kicks: usize,
}

impl<'a> PlantStepper<'a> {
    pub fn new(spec: &'a ScenarioSpec, seed: u64) -> Self {
        PlantStepper {
            spec,
            rng: substream(seed, "plant", 0),
            kick_rng: substream(seed, "kick", 0),
            k: 0,
            kicks: 0,
        }
    }

    /// Index of the next interval to be simulated.
    pub fn step_index(&self) -> usize {
        self.k
    }

    /// Velocity kicks applied so far.
    pub fn kicks(&self) -> usize {
        self.kicks
    }

    pub fn step(&mut self, x: &StateVec, u: f64) -> Result<StateVec> {
        let spec = self.spec;
        let t = spec.time(self.k);
        let mut next = spec.step_rk4(t, x, u, spec.dt, &mut self.rng)?;
        self.k += 1;
        let t_next = spec.time(self.k);
        if spec.kind.is_reconfig()
            && t_next < spec.horizon - 1e-9
            && spec.frame_index(t_next) != spec.frame_index(t)
        {
            let kick = Normal::new(0.0, spec.disturbance.kick_sigma)
                .map_err(|e| Error::Config(e.to_string()))?
                .sample(&mut self.kick_rng);
            next[1] += kick;
            self.kicks += 1;
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{discretize, ScenarioKind};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn frozen(kind: ScenarioKind) -> ScenarioSpec {
        let mut spec = ScenarioSpec::builtin(kind).without_disturbances();
        spec.param_hold = ParamHold::PerStep;
        spec
    }

    #[test]
    fn sat_clamps() {
        assert_eq!(sat(3.0, 5.0), 3.0);
        assert_eq!(sat(7.0, 5.0), 5.0);
        assert_eq!(sat(-9.0, 5.0), -5.0);
    }

    #[test]
    fn equilibrium_has_zero_rate() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let dx = spec.derivative(0.3, &StateVec::zeros(), 0.0, 0.0).unwrap();
        assert_eq!(dx, StateVec::zeros());
    }

    #[test]
    fn saturation_clips_input_term() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Nl);
        let dx = spec.derivative(0.0, &StateVec::zeros(), 10.0, 0.0).unwrap();
        assert_relative_eq!(dx[1], 5.0 / spec.mass, epsilon = 1e-15);
    }

    #[test]
    fn undamped_spring_rate() {
        let mut spec = ScenarioSpec::builtin(ScenarioKind::InstReconfig);
        for f in &mut spec.frames {
            *f = crate::dynamics::FrameParams { mass: 1.0, spring: 1.0, damping: 0.0 };
        }
        let dx = spec.derivative(0.0, &StateVec::new(1.0, 0.0), 0.0, 0.0).unwrap();
        assert_eq!(dx, StateVec::new(0.0, -1.0));
    }

    #[test]
    fn nld_bump_peaks_at_center() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Nld);
        let at = spec.derivative(0.0, &StateVec::new(2.0, 0.0), 0.0, 1.0).unwrap();
        let off = spec.derivative(0.0, &StateVec::new(0.0, 0.0), 0.0, 1.0).unwrap();
        let p = spec.params_at(0.0).unwrap();
        assert_relative_eq!(at[1], -p.spring * 2.0 / p.mass + 1.0, epsilon = 1e-12);
        assert!(off[1].abs() < 1e-10);
    }

    #[test]
    fn zero_rate_leaves_state_unchanged() {
        let spec = frozen(ScenarioKind::Ltv);
        let mut rng = substream(1, "t", 0);
        let x = spec.step_rk4(0.0, &StateVec::zeros(), 0.0, spec.dt, &mut rng).unwrap();
        assert_eq!(x, StateVec::zeros());
    }

    #[test]
    fn rk4_matches_matrix_exponential() {
        let spec = frozen(ScenarioKind::Ltv);
        let dt = 1e-3;
        let t = 0.7;
        let p = spec.params_at(t).unwrap();
        let a_c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -p.spring / p.mass, -p.damping / p.mass]);
        let b_c = DMatrix::from_row_slice(2, 1, &[0.0, 1.0 / p.mass]);
        let exact = discretize(&a_c, &b_c, dt).unwrap();
        let x0 = StateVec::new(0.8, -0.3);
        let u = 0.4;
        let mut rng = substream(1, "t", 0);
        let x1 = spec.step_rk4(t, &x0, u, dt, &mut rng).unwrap();
        let expected = &exact.a * DVector::from_column_slice(x0.as_slice()) + &exact.b * u;
        for i in 0..2 {
            assert!((x1[i] - expected[i]).abs() <= 1e-8, "{} vs {}", x1[i], expected[i]);
        }
    }

    #[test]
    fn rk4_is_deterministic_for_a_seed() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Nld);
        let x0 = StateVec::new(2.0, 0.1);
        let a = spec.step_rk4(0.0, &x0, 1.0, spec.dt, &mut substream(3, "p", 0)).unwrap();
        let b = spec.step_rk4(0.0, &x0, 1.0, spec.dt, &mut substream(3, "p", 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integration_error_on_non_finite_state() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let mut rng = substream(1, "t", 0);
        let r = spec.step_rk4(0.0, &StateVec::new(f64::NAN, 0.0), 0.0, spec.dt, &mut rng);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn unforced_at_rest_stays_at_rest() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let traj = spec.simulate(StateVec::zeros(), |_| 0.0, 5).unwrap();
        assert_eq!(traj.states.len(), 501);
        assert!(traj.states.iter().all(|x| x.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn damped_plant_loses_energy() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let traj = spec.simulate(StateVec::new(1.0, 0.5), |_| 0.0, 5).unwrap();
        let energy = |k: usize| {
            let x = &traj.states[k];
            let p = spec.params_at(spec.time(k)).unwrap();
            0.5 * p.mass * x[1] * x[1] + 0.5 * p.spring * x[0] * x[0]
        };
        assert!(energy(spec.steps()) < energy(0));
    }

    #[test]
    fn inst_reconfig_kick_count() {
        let spec = ScenarioSpec::builtin(ScenarioKind::InstReconfig);
        let mut stepper = PlantStepper::new(&spec, 11);
        let mut x = StateVec::new(0.1, 0.0);
        for _ in 0..spec.steps() {
            x = stepper.step(&x, 0.0).unwrap();
        }
        assert_eq!(stepper.kicks(), spec.frame_count() - 1);
    }

    #[test]
    fn simulations_are_bitwise_reproducible() {
        for kind in ScenarioKind::ALL {
            let spec = ScenarioSpec::builtin(kind);
            let a = spec.simulate(StateVec::new(1.9, 0.0), |t| t.sin(), 42).unwrap();
            let b = spec.simulate(StateVec::new(1.9, 0.0), |t| t.sin(), 42).unwrap();
            assert_eq!(a.states, b.states);
        }
    }
}
