use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::ScenarioSpec;
use crate::error::{Error, Result};
use crate::ident::{LtvModel, Method};
use crate::scalar::{lit, Real};

/// One step of a discrete LTV system: `x(k+1) = A x(k) + B u(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPair<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
}

impl<T: Real> MatrixPair<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.nrows() {
            return Err(Error::Shape(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(MatrixPair { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn cast<U: Real>(&self) -> MatrixPair<U> {
        MatrixPair {
            a: self.a.map(|v| lit(crate::scalar::to_f64(v))),
            b: self.b.map(|v| lit(crate::scalar::to_f64(v))),
        }
    }
}

/// Zero-order-hold discretization.
///
/// Both blocks come from one exponential of the augmented generator
/// `[[A_c, B_c], [0, 0]] dt`, which stays valid for singular `A_c`.
pub fn discretize<T: Real>(a_c: &DMatrix<T>, b_c: &DMatrix<T>, dt: T) -> Result<MatrixPair<T>> {
    let (p, q) = (a_c.nrows(), b_c.ncols());
    if !a_c.is_square() || b_c.nrows() != p {
        return Err(Error::Shape(format!(
            "A_c is {}x{}, B_c is {}x{}",
            p,
            a_c.ncols(),
            b_c.nrows(),
            q
        )));
    }
    if !(dt > T::zero()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let mut aug = DMatrix::<T>::zeros(p + q, p + q);
    aug.view_mut((0, 0), (p, p)).copy_from(&(a_c * dt));
    aug.view_mut((0, p), (p, q)).copy_from(&(b_c * dt));
    let e = aug.exp();
    let pair = MatrixPair {
        a: e.view((0, 0), (p, p)).into_owned(),
        b: e.view((0, p), (p, q)).into_owned(),
    };
    if pair.a.iter().chain(pair.b.iter()).all(|v| v.is_finite()) {
        Ok(pair)
    } else {
        Err(Error::Numerical("matrix exponential is not finite".into()))
    }
}

/// Linearized discrete model of a scenario: parameters frozen at `k dt`,
/// cubic damping and saturation dropped, then discretized per step.
pub fn ground_truth_ltv<T: Real>(spec: &ScenarioSpec) -> Result<LtvModel<T>> {
    spec.validate()?;
    let n = spec.steps();
    let dt: T = lit(spec.dt);
    let pairs = (0..n)
        .map(|k| {
            let t = spec.time(k);
            let p = spec.params_in_frame(t, spec.frame_index(t));
            let a_c = DMatrix::from_row_slice(
                2,
                2,
                &[
                    T::zero(),
                    T::one(),
                    lit(-p.spring / p.mass),
                    lit(-p.damping / p.mass),
                ],
            );
            let b_c = DMatrix::from_row_slice(2, 1, &[T::zero(), lit(1.0 / p.mass)]);
            discretize(&a_c, &b_c, dt)
        })
        .collect::<Result<Vec<_>>>()?;
    LtvModel::new(pairs, spec.dt, Method::Linearization, BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ParamHold, ScenarioKind, StateVec};
    use crate::ident::predict_rollout;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;

    #[test]
    fn zero_generator_gives_identity_and_scaled_input() {
        let a_c = DMatrix::<f64>::zeros(2, 2);
        let b_c = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let d = discretize(&a_c, &b_c, 0.1).unwrap();
        assert_relative_eq!(d.a, DMatrix::identity(2, 2), epsilon = 1e-15);
        assert_relative_eq!(d.b, &b_c * 0.1, epsilon = 1e-15);
    }

    #[test]
    fn rotation_generator() {
        let a_c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b_c = DMatrix::zeros(2, 1);
        let dt: f64 = 0.37;
        let d = discretize(&a_c, &b_c, dt).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[dt.cos(), dt.sin(), -dt.sin(), dt.cos()]);
        assert_relative_eq!(d.a, expected, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_generator() {
        let a_c = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let d = discretize(&a_c, &DMatrix::zeros(2, 1), 2f64.ln()).unwrap();
        assert_relative_eq!(d.a, DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25])), epsilon = 1e-14);
    }

    #[test]
    fn matches_inverse_formula_for_invertible_generator() {
        let a_c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.3]);
        let b_c = DMatrix::from_row_slice(2, 1, &[0.0, 0.5]);
        let dt = 0.05;
        let d = discretize(&a_c, &b_c, dt).unwrap();
        let via_inverse = a_c.clone().try_inverse().unwrap() * (&d.a - DMatrix::identity(2, 2)) * &b_c;
        assert_relative_eq!(d.b, via_inverse, epsilon = 1e-13);
    }

    #[test]
    fn single_precision_path() {
        let a_c = DMatrix::from_row_slice(2, 2, &[0.0f32, 1.0, -1.0, 0.0]);
        let d = discretize(&a_c, &DMatrix::zeros(2, 1), 0.5f32).unwrap();
        assert!((d.a[(0, 0)] - 0.5f32.cos()).abs() < 1e-6);
    }

    #[test]
    fn non_positive_dt_rejected() {
        let a = DMatrix::<f64>::zeros(2, 2);
        assert!(discretize(&a, &DMatrix::zeros(2, 1), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn semigroup(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
                     t1 in 0.001f64..0.5, t2 in 0.001f64..0.5) {
            let a_c = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
            let b_c = DMatrix::zeros(2, 1);
            let whole = discretize(&a_c, &b_c, t1 + t2).unwrap().a;
            let split = discretize(&a_c, &b_c, t2).unwrap().a * discretize(&a_c, &b_c, t1).unwrap().a;
            prop_assert!((whole - split).amax() < 1e-12);
        }
    }

    #[test]
    fn constant_parameters_give_constant_model() {
        let mut spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        spec.param_freq = 0.0;
        let m = ground_truth_ltv::<f64>(&spec).unwrap();
        assert!(m.pairs.iter().all(|p| p == &m.pairs[0]));
    }

    #[test]
    fn inst_reconfig_piecewise_constant() {
        let spec = ScenarioSpec::builtin(ScenarioKind::InstReconfig);
        let m = ground_truth_ltv::<f64>(&spec).unwrap();
        let per_frame = (spec.frame_duration / spec.dt).round() as usize;
        for (k, pair) in m.pairs.iter().enumerate() {
            let start = (k / per_frame) * per_frame;
            assert_eq!(pair, &m.pairs[start]);
        }
        assert_ne!(m.pairs[per_frame - 1], m.pairs[per_frame]);
    }

    #[test]
    fn top_row_matches_exponential() {
        let spec = ScenarioSpec::builtin(ScenarioKind::MixedReconfig);
        let m = ground_truth_ltv::<f64>(&spec).unwrap();
        for k in (0..spec.steps()).step_by(37) {
            let p = spec.params_at(spec.time(k)).unwrap();
            let a_c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -p.spring / p.mass, -p.damping / p.mass]);
            let e = (a_c * spec.dt).exp();
            assert_relative_eq!(m.pairs[k].a.row(0), e.row(0), epsilon = 1e-14);
        }
    }

    #[test]
    fn rollout_matches_fine_integration_of_linear_plant() {
        let mut spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        spec.param_hold = ParamHold::PerStep;
        let input = |t: f64| (1.3 * t).sin();
        let traj = spec.simulate(StateVec::new(0.5, -0.2), input, 1).unwrap();
        let model = ground_truth_ltv::<f64>(&spec).unwrap();
        let pred = predict_rollout(&model, &traj.states[0], &traj.inputs).unwrap();
        for (a, b) in pred.iter().zip(&traj.states) {
            assert!((a - b).amax() <= 1e-4);
        }
    }

    #[test]
    fn continuous_plant_stays_close_to_linearization() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let traj = spec.simulate(StateVec::new(0.5, -0.2), |t| (1.3 * t).sin(), 1).unwrap();
        let model = ground_truth_ltv::<f64>(&spec).unwrap();
        let pred = predict_rollout(&model, &traj.states[0], &traj.inputs).unwrap();
        let worst = pred.iter().zip(&traj.states).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        assert!(worst < 0.05, "worst deviation {worst}");
    }
}
