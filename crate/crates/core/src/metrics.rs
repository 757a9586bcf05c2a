//! Disagreement measures and event detection on recorded trajectories.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::integrator::Trajectory;

/// Default absolute threshold for consensus and manifold detection.
pub const DEFAULT_EPSILON: f64 = 1e-2;

/// `V = 1/4 sum_i sum_j a_ij (x_j - x_i)^2`.
pub fn disagreement(g: &Graph, x: &[f64]) -> f64 {
    0.25 * g
        .adjacency()
        .iter()
        .enumerate()
        .map(|(i, nbrs)| {
            nbrs.iter()
                .map(|&(j, a)| {
                    let d = x[j] - x[i];
                    a * d * d
                })
                .sum::<f64>()
        })
        .sum::<f64>()
}

/// `max(x) - min(x)`, zero for an empty or single-agent state.
pub fn max_spread(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if x.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Earliest recorded time from which `values` stays below `epsilon` through the
/// last sample.
fn sustained_below(times: &[f64], values: &[f64], epsilon: f64) -> Option<f64> {
    let first_ok = values.iter().rposition(|&v| !(v < epsilon)).map_or(0, |k| k + 1);
    times.get(first_ok).copied()
}

/// Sustained consensus time and the final-sample mean.
pub fn consensus_time(traj: &Trajectory, epsilon: f64) -> Option<(f64, f64)> {
    let t = sustained_below(&traj.times, &traj.spread, epsilon)?;
    let last = traj.states.last()?;
    let mean = last.x.iter().sum::<f64>() / last.x.len() as f64;
    Some((t, mean))
}

/// Sustained time at which every `|s_i|` is below `epsilon`.
pub fn reaching_time(traj: &Trajectory, epsilon: f64) -> Result<Option<f64>> {
    let surfaces = traj.surfaces.as_ref().ok_or(Error::MissingRecords("sliding surface"))?;
    let worst: Vec<f64> = surfaces
        .iter()
        .map(|s| s.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        .collect();
    Ok(sustained_below(&traj.times, &worst, epsilon))
}

/// Largest `|u_i|` over all integration steps.
pub fn max_control(traj: &Trajectory) -> f64 {
    traj.step_max_control.iter().copied().fold(0.0, f64::max)
}

/// Largest drift of the weighted sum `sum w_i x_i` from its initial value, with
/// `w = p` or uniform `1/n`.
pub fn conservation_error(traj: &Trajectory, weights: Option<&[f64]>) -> f64 {
    let n = traj.agents();
    if n == 0 {
        return 0.0;
    }
    let uniform = 1.0 / n as f64;
    let weighted = |x: &[f64]| -> f64 {
        match weights {
            Some(p) => x.iter().zip(p).map(|(xi, pi)| xi * pi).sum(),
            None => x.iter().map(|xi| xi * uniform).sum(),
        }
    };
    let start = weighted(&traj.states[0].x);
    traj.states
        .iter()
        .map(|s| (weighted(&s.x) - start).abs())
        .fold(0.0, f64::max)
}

/// Outcome of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusReport {
    pub scenario: String,
    pub consensus_time: Option<f64>,
    pub consensus_value: Option<f64>,
    /// Consensus-time bound for the protocol, absent when its radicand is not positive.
    pub bound: Option<f64>,
    /// `consensus_time <= bound`, absent unless both exist.
    pub within_bound: Option<bool>,
    /// Sufficiency conditions of the protocol; absent when unknown.
    pub condition_satisfied: Option<bool>,
    pub max_spread_final: f64,
    pub max_control: f64,
    pub conservation_error: f64,
    /// Sliding mode only.
    pub reaching_time: Option<f64>,
    /// Sliding mode only.
    pub reaching_bound: Option<f64>,
}

impl ConsensusReport {
    /// Builds the report for `traj`; bounds come from the caller because they
    /// depend on the protocol and graph, not on the trajectory.
    pub fn from_trajectory(
        scenario: &str,
        traj: &Trajectory,
        epsilon: f64,
        weights: Option<&[f64]>,
        bound: Option<f64>,
        reaching_bound: Option<f64>,
        condition_satisfied: Option<bool>,
    ) -> Self {
        let consensus = consensus_time(traj, epsilon);
        let consensus_time = consensus.map(|(t, _)| t);
        Self {
            scenario: scenario.to_owned(),
            consensus_time,
            consensus_value: consensus.map(|(_, v)| v),
            bound,
            within_bound: consensus_time.zip(bound).map(|(t, b)| t <= b),
            condition_satisfied,
            max_spread_final: traj.spread.last().copied().unwrap_or(0.0),
            max_control: max_control(traj),
            conservation_error: conservation_error(traj, weights),
            reaching_time: reaching_time(traj, epsilon).ok().flatten(),
            reaching_bound,
        }
    }

    /// Every key [`entries`](Self::entries) can produce, in order.
    pub fn summary_keys() -> &'static [&'static str] {
        &[
            "scenario",
            "consensus_time",
            "consensus_value",
            "bound",
            "within_bound",
            "condition_satisfied",
            "max_spread_final",
            "max_control",
            "conservation_error",
            "reaching_time",
            "reaching_bound",
        ]
    }

    /// Ordered `key=value` pairs; absent values print as `none`.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_owned(), |v| v.to_string());
        let mut out = vec![
            ("scenario", self.scenario.clone()),
            ("consensus_time", opt(self.consensus_time)),
            ("consensus_value", opt(self.consensus_value)),
            ("bound", opt(self.bound)),
            (
                "within_bound",
                self.within_bound.map_or_else(|| "none".to_owned(), |b| b.to_string()),
            ),
            (
                "condition_satisfied",
                self.condition_satisfied
                    .map_or_else(|| "none".to_owned(), |b| b.to_string()),
            ),
            ("max_spread_final", self.max_spread_final.to_string()),
            ("max_control", self.max_control.to_string()),
            ("conservation_error", self.conservation_error.to_string()),
        ];
        if self.reaching_bound.is_some() || self.reaching_time.is_some() {
            out.push(("reaching_time", opt(self.reaching_time)));
            out.push(("reaching_bound", opt(self.reaching_bound)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::SwarmState;

    fn traj_from(xs: &[Vec<f64>], dt: f64) -> Trajectory {
        let g = Graph::from_edges(xs[0].len(), &[]).unwrap();
        let mut t = Trajectory::default();
        for (k, x) in xs.iter().enumerate() {
            t.times.push(k as f64 * dt);
            t.states.push(SwarmState::initial(x, false));
            t.controls.push(vec![0.0; x.len()]);
            t.disagreement.push(disagreement(&g, x));
            t.spread.push(max_spread(x));
            t.step_max_control.push(0.0);
        }
        t
    }

    #[test]
    fn disagreement_examples() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(disagreement(&g, &[0.0, 2.0]), 2.0);
        assert_eq!(disagreement(&g, &[3.0, 3.0]), 0.0);
    }

    #[test]
    fn spread_examples() {
        assert_eq!(max_spread(&[-5.0, 2.0, 4.0, -2.0, -4.0, 5.0]), 10.0);
        assert_eq!(max_spread(&[7.0]), 0.0);
        assert_eq!(max_spread(&[1.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn constant_consensus_detected_at_start() {
        let t = traj_from(&vec![vec![2.0, 2.0]; 5], 0.1);
        assert_eq!(consensus_time(&t, 1e-2), Some((0.0, 2.0)));
    }

    #[test]
    fn consensus_must_be_sustained() {
        let xs = vec![
            vec![0.0, 1.0],
            vec![0.0, 0.001],
            vec![0.0, 0.5],
            vec![0.0, 0.002],
            vec![0.0, 0.001],
        ];
        let t = traj_from(&xs, 1.0);
        assert_eq!(consensus_time(&t, 1e-2).unwrap().0, 3.0);
        assert_eq!(consensus_time(&t, 0.6).unwrap().0, 1.0);
    }

    #[test]
    fn diverging_never_reaches() {
        let xs: Vec<Vec<f64>> = (0..10).map(|k| vec![-(k as f64), k as f64]).collect();
        assert_eq!(consensus_time(&traj_from(&xs, 0.1), 1e-2), None);
    }

    #[test]
    fn reaching_requires_surfaces() {
        let t = traj_from(&[vec![0.0]], 0.1);
        assert!(matches!(reaching_time(&t, 1e-2), Err(Error::MissingRecords(_))));
    }

    #[test]
    fn max_control_examples() {
        let mut t = traj_from(&vec![vec![0.0, 0.0]; 3], 0.1);
        assert_eq!(max_control(&t), 0.0);
        t.step_max_control = vec![2.0, 2.0, 2.0];
        assert_eq!(max_control(&t), 2.0);
    }

    #[test]
    fn conservation_drift() {
        let xs = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![2.5, 2.0]];
        let t = traj_from(&xs, 0.1);
        assert_eq!(conservation_error(&t, None), 0.25);
        assert_eq!(conservation_error(&t, Some(&[0.0, 1.0])), 1.0);
    }
}
