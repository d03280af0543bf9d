//! Root-mean-square error across Monte Carlo runs.
//!
//! For epoch `k` the position RMSE is
//! `sqrt( (1/N) Σ_runs Σ_{c ∈ position} (x_c − x̂_c)² )` and likewise for
//! speed. Position is `(x1, x2)`, speed is `(x3, x4)`. The reported average
//! is the mean of the per-epoch values over all epochs.

use serde::{Deserialize, Serialize};

use crate::scenario::Algorithm;

/// State components scored as position.
pub const POSITION_COMPONENTS: [usize; 2] = [0, 1];
/// State components scored as speed.
pub const SPEED_COMPONENTS: [usize; 2] = [2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Smoothed,
    Filtered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub algorithm: Algorithm,
    pub estimate: EstimateKind,
    pub runs: usize,
    pub avg_position_rmse: f64,
    pub avg_speed_rmse: f64,
    pub per_epoch_position_rmse: Vec<f64>,
    pub per_epoch_speed_rmse: Vec<f64>,
    /// Summed per-run compute time, seconds.
    pub wall_time_s: f64,
}

/// Sums squared errors run by run; adding runs in a fixed order makes the
/// result independent of how the runs were scheduled.
#[derive(Debug, Clone)]
pub struct RmseAccumulator {
    position_sq: Vec<f64>,
    speed_sq: Vec<f64>,
    runs: usize,
}

fn squared_error(truth: &[f64], estimate: &[f64], components: &[usize]) -> f64 {
    components
        .iter()
        .map(|&c| {
            let e = truth[c] - estimate[c];
            e * e
        })
        .sum()
}

impl RmseAccumulator {
    pub fn new(epochs: usize) -> Self {
        Self {
            position_sq: vec![0.0; epochs],
            speed_sq: vec![0.0; epochs],
            runs: 0,
        }
    }

    pub fn epochs(&self) -> usize {
        self.position_sq.len()
    }

    /// Adds one run's per-epoch truth and estimate.
    pub fn add_run<'a>(&mut self, truth: &[Vec<f64>], estimates: impl IntoIterator<Item = &'a [f64]>) {
        let mut count = 0;
        for (k, (x, xhat)) in truth.iter().zip(estimates).enumerate() {
            self.position_sq[k] += squared_error(x, xhat, &POSITION_COMPONENTS);
            self.speed_sq[k] += squared_error(x, xhat, &SPEED_COMPONENTS);
            count += 1;
        }
        assert_eq!(count, self.epochs(), "run length differs from the accumulator");
        assert_eq!(truth.len(), self.epochs(), "run length differs from the accumulator");
        self.runs += 1;
    }

    pub fn finish(self, algorithm: Algorithm, estimate: EstimateKind, wall_time_s: f64) -> RmseReport {
        let n = self.runs.max(1) as f64;
        let per_epoch = |sq: &[f64]| -> Vec<f64> { sq.iter().map(|s| (s / n).sqrt()).collect() };
        let per_epoch_position_rmse = per_epoch(&self.position_sq);
        let per_epoch_speed_rmse = per_epoch(&self.speed_sq);
        RmseReport {
            algorithm,
            estimate,
            runs: self.runs,
            avg_position_rmse: mean(&per_epoch_position_rmse),
            avg_speed_rmse: mean(&per_epoch_speed_rmse),
            per_epoch_position_rmse,
            per_epoch_speed_rmse,
            wall_time_s,
        }
    }
}

/// Arithmetic mean; zero for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(epochs: usize) -> Vec<Vec<f64>> {
        (0..epochs).map(|k| vec![k as f64, 1.0, -2.0, 0.5 * k as f64]).collect()
    }

    #[test]
    fn exact_estimates_score_zero() {
        let t = truth(5);
        let mut acc = RmseAccumulator::new(5);
        for _ in 0..3 {
            acc.add_run(&t, t.iter().map(Vec::as_slice));
        }
        let r = acc.finish(Algorithm::Cks, EstimateKind::Smoothed, 0.0);
        assert_eq!(r.runs, 3);
        assert_eq!(r.avg_position_rmse, 0.0);
        assert_eq!(r.avg_speed_rmse, 0.0);
        assert!(r.per_epoch_position_rmse.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_offset_on_one_component() {
        let c = -1.75;
        let t = truth(4);
        let est: Vec<Vec<f64>> = t.iter().map(|x| vec![x[0] + c, x[1], x[2], x[3]]).collect();
        let mut acc = RmseAccumulator::new(4);
        acc.add_run(&t, est.iter().map(Vec::as_slice));
        acc.add_run(&t, est.iter().map(Vec::as_slice));
        let r = acc.finish(Algorithm::Acks, EstimateKind::Filtered, 0.0);
        assert!(r.per_epoch_position_rmse.iter().all(|&v| (v - c.abs()).abs() < 1e-15));
        assert!((r.avg_position_rmse - 1.75).abs() < 1e-15);
        assert_eq!(r.avg_speed_rmse, 0.0);
    }

    #[test]
    fn averages_squares_over_runs_before_the_root() {
        // errors 3 and 4 on x3 in two runs: sqrt((9 + 16) / 2)
        let t = truth(1);
        let mut acc = RmseAccumulator::new(1);
        for e in [3.0, 4.0] {
            let est = [vec![t[0][0], t[0][1], t[0][2] + e, t[0][3]]];
            acc.add_run(&t, est.iter().map(Vec::as_slice));
        }
        let r = acc.finish(Algorithm::Wrwacrts, EstimateKind::Smoothed, 0.0);
        assert!((r.avg_speed_rmse - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "run length")]
    fn rejects_short_runs() {
        let t = truth(3);
        let mut acc = RmseAccumulator::new(4);
        acc.add_run(&t, t.iter().map(Vec::as_slice));
    }
}
