use crate::datagen::Trajectory;
use crate::error::{Error, Result};
use crate::ident::{predict_rollout, LtvModel};
use crate::scalar::{to_f64, Real};

/// Empirical CDF: ascending samples with fractions `k/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EcdfSeries {
    pub values: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl EcdfSeries {
    pub fn from_samples(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let fractions = (1..=values.len()).map(|k| k as f64 / n).collect();
        EcdfSeries { values, fractions }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.values.partition_point(|v| *v <= x);
        count as f64 / self.values.len().max(1) as f64
    }

    /// Smallest sample with at least fraction `p` at or below it.
    pub fn quantile(&self, p: f64) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        let idx = ((p * self.values.len() as f64).ceil() as usize).clamp(1, self.values.len()) - 1;
        self.values[idx]
    }
}

/// `|x1_hat(k) - x1(k)| / mean_k |x1(k)|` for `k = 1..N`, pooled over trajectories.
///
/// Trajectories whose mean absolute position is zero have no scale and are skipped.
pub fn ecdf_residuals<T: Real>(model: &LtvModel<T>, trajectories: &[Trajectory<T>]) -> Result<EcdfSeries> {
    let mut samples = Vec::new();
    for traj in trajectories {
        let scale = traj.states.iter().map(|x| to_f64(x[0]).abs()).sum::<f64>() / traj.states.len() as f64;
        if !(scale > 0.0) {
            log::warn!("skipping a trajectory with zero mean position");
            continue;
        }
        let pred = predict_rollout(model, &traj.states[0], &traj.inputs)?;
        samples.extend(
            pred.iter()
                .zip(&traj.states)
                .skip(1)
                .map(|(a, b)| {
                    let r = (to_f64(a[0]) - to_f64(b[0])).abs() / scale;
                    if r.is_finite() { r } else { f64::INFINITY }
                }),
        );
    }
    if samples.is_empty() {
        return Err(Error::Shape("no trajectories with a position scale".into()));
    }
    Ok(EcdfSeries::from_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_are_k_over_n() {
        let e = EcdfSeries::from_samples(vec![3.0, 1.0, 2.0, 2.0]);
        assert_eq!(e.values, vec![1.0, 2.0, 2.0, 3.0]);
        assert_eq!(e.fractions, vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(e.cdf(2.0), 0.75);
        assert_eq!(e.cdf(0.5), 0.0);
        assert_eq!(e.quantile(0.5), 2.0);
        assert_eq!(e.quantile(1.0), 3.0);
    }
}
