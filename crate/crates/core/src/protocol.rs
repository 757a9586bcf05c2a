//! Consensus protocols driven by adaptive gains.
//!
//! Every protocol shares the gain law
//!
//! ```text
//! theta_i' = -lambda theta_i + rho sum_j a_ij (x_j - x_i)^2,   theta_i(0) = 0
//! ```
//!
//! and differs in how the gains turn relative states into a control:
//!
//! * fixed-time: `u_i = theta_i * inv(sum_j a_ij (x_j - x_i))`
//! * average: `u_i = sum_j a_ij (theta_i + theta_j) inv(x_j - x_i)`
//! * weighted: the average law scaled by `1 / p_i`
//! * sliding mode: the average law plus a reaching term `-(eta_i + d) sgn(s_i)`
//!   with `s_i = x_i - xbar_i - int_0^t nominal_i` and
//!   `eta_i' = -omega eta_i + mu |s_i|`.
//!
//! `inv` is the exact inverse when `gamma = 0` and `z / (z^2 + gamma)` otherwise.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::disturbance::DisturbanceSpec;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::integrator::OdeSystem;
use crate::scalar::sgn;

/// Largest tolerated `|sum p_i - 1|` for weighted consensus.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FixedTime,
    Average,
    Weighted,
    SlidingMode,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::FixedTime => "fixed_time",
            Variant::Average => "average",
            Variant::Weighted => "weighted",
            Variant::SlidingMode => "sliding_mode",
        })
    }
}

/// Reaching-law gains of the sliding-mode protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingGains {
    /// Decay of `eta` (omega_s).
    pub omega: f64,
    /// Growth of `eta` from `|s|`.
    pub mu: f64,
    /// Known disturbance bound.
    pub d: f64,
    /// Manifold offsets `xbar`; empty means all zero.
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    FixedTime,
    Average,
    Weighted { weights: Vec<f64> },
    SlidingMode(SlidingGains),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub lambda: f64,
    pub rho: f64,
    pub gamma: f64,
    pub protocol: Protocol,
}

impl ProtocolConfig {
    pub fn new(lambda: f64, rho: f64, gamma: f64, protocol: Protocol) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(lambda > 0.0 && lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {lambda}"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return bad(format!("rho must be positive, got {rho}"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return bad(format!("gamma must be nonnegative, got {gamma}"));
        }
        match &protocol {
            Protocol::Weighted { weights } => {
                if let Some((i, p)) = weights.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
                    return bad(format!("weight p[{i}] = {p} must be positive"));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() >= WEIGHT_SUM_TOLERANCE {
                    return bad(format!("weights must sum to 1, got {sum}"));
                }
            }
            Protocol::SlidingMode(s) => {
                if !(s.omega > 0.0 && s.omega.is_finite()) {
                    return bad(format!("omega_s must be positive, got {}", s.omega));
                }
                if !(s.mu > 0.0 && s.mu.is_finite()) {
                    return bad(format!("mu must be positive, got {}", s.mu));
                }
                if !(s.d >= 0.0 && s.d.is_finite()) {
                    return bad(format!("d must be nonnegative, got {}", s.d));
                }
                if s.offsets.iter().any(|v| !v.is_finite()) {
                    return bad("xbar entries must be finite".into());
                }
            }
            Protocol::FixedTime | Protocol::Average => {}
        }
        Ok(Self {
            lambda,
            rho,
            gamma,
            protocol,
        })
    }

    pub fn variant(&self) -> Variant {
        match self.protocol {
            Protocol::FixedTime => Variant::FixedTime,
            Protocol::Average => Variant::Average,
            Protocol::Weighted { .. } => Variant::Weighted,
            Protocol::SlidingMode(_) => Variant::SlidingMode,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match &self.protocol {
            Protocol::Weighted { weights } => Some(weights),
            _ => None,
        }
    }

    pub fn sliding(&self) -> Option<&SlidingGains> {
        match &self.protocol {
            Protocol::SlidingMode(s) => Some(s),
            _ => None,
        }
    }

    /// Checks per-agent vectors against the agent count.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        match &self.protocol {
            Protocol::Weighted { weights } if weights.len() != n => Err(Error::LengthMismatch {
                what: "weights p",
                expected: n,
                found: weights.len(),
            }),
            Protocol::SlidingMode(s) if !s.offsets.is_empty() && s.offsets.len() != n => Err(Error::LengthMismatch {
                what: "manifold offsets xbar",
                expected: n,
                found: s.offsets.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Bound parameters with kappa and K derived from the graph and weights.
    pub fn bound_params(&self, graph: &Graph) -> Result<BoundParams> {
        let sliding = self.sliding();
        Ok(BoundParams {
            variant: self.variant(),
            lambda: self.lambda,
            rho: self.rho,
            mu: sliding.map_or(0.0, |s| s.mu),
            omega_s: sliding.map_or(0.0, |s| s.omega),
            n: graph.n(),
            kappa: graph.min_positive_weight()?,
            k_max: self.weights().map_or(0.0, |p| p.iter().copied().fold(0.0, f64::max)),
        })
    }
}

/// Agent states and auxiliary gains at time `t`.
///
/// `eta` and `integral` are empty for protocols without a reaching law.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub t: f64,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
    pub integral: Vec<f64>,
}

impl SwarmState {
    /// State at `t = 0` with all gains (and integrals) zero.
    pub fn initial(x0: &[f64], sliding: bool) -> Self {
        let n = x0.len();
        let aux = if sliding { vec![0.0; n] } else { Vec::new() };
        Self {
            t: 0.0,
            x: x0.to_vec(),
            theta: vec![0.0; n],
            eta: aux.clone(),
            integral: aux,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        [&self.x[..], &self.theta, &self.eta, &self.integral].concat()
    }

    pub(crate) fn from_flat(t: f64, n: usize, y: &[f64]) -> Self {
        let part = |k: usize| y.get(k * n..(k + 1) * n).map_or_else(Vec::new, <[f64]>::to_vec);
        Self {
            t,
            x: part(0),
            theta: part(1),
            eta: part(2),
            integral: part(3),
        }
    }
}

/// `1/z` for `gamma = 0`, `z / (z^2 + gamma)` otherwise. `None` marks the
/// singular case `gamma = 0, z = 0`.
pub fn regularized_inverse(z: f64, gamma: f64) -> Option<f64> {
    if gamma > 0.0 {
        Some(z / (z * z + gamma))
    } else if z != 0.0 {
        Some(1.0 / z)
    } else {
        None
    }
}

fn fixed_time_into(graph: &Graph, x: &[f64], theta: &[f64], gamma: f64, t: f64, out: &mut [f64]) -> Result<()> {
    for (i, nbrs) in graph.adjacency().iter().enumerate() {
        let aggregate: f64 = nbrs.iter().map(|&(j, a)| a * (x[j] - x[i])).sum();
        out[i] = if theta[i] == 0.0 {
            0.0
        } else {
            let inv = regularized_inverse(aggregate, gamma).ok_or(Error::Singularity {
                t,
                agent: i,
                neighbor: None,
            })?;
            theta[i] * inv
        };
    }
    Ok(())
}

/// Edge-symmetric law `sum_j a_ij (theta_i + theta_j) inv(x_j - x_i)`, divided
/// by `p_i` when weights are given.
fn pairwise_into(
    graph: &Graph,
    x: &[f64],
    theta: &[f64],
    gamma: f64,
    weights: Option<&[f64]>,
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    for (i, nbrs) in graph.adjacency().iter().enumerate() {
        let mut acc = 0.0;
        for &(j, a) in nbrs {
            let gain = a * (theta[i] + theta[j]);
            if gain == 0.0 {
                continue;
            }
            let inv = regularized_inverse(x[j] - x[i], gamma).ok_or(Error::Singularity {
                t,
                agent: i,
                neighbor: Some(j),
            })?;
            acc += gain * inv;
        }
        out[i] = match weights {
            Some(p) => acc / p[i],
            None => acc,
        };
    }
    Ok(())
}

fn theta_rhs_into(graph: &Graph, x: &[f64], theta: &[f64], lambda: f64, rho: f64, out: &mut [f64]) {
    for (i, nbrs) in graph.adjacency().iter().enumerate() {
        let energy: f64 = nbrs
            .iter()
            .map(|&(j, a)| {
                let diff = x[j] - x[i];
                a * diff * diff
            })
            .sum();
        out[i] = -lambda * theta[i] + rho * energy;
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { what, expected, found })
    }
}

fn check_state(graph: &Graph, s: &SwarmState) -> Result<()> {
    check_len("state x", graph.n(), s.x.len())?;
    check_len("gains theta", graph.n(), s.theta.len())
}

fn wrong_variant(expected: Variant, c: &ProtocolConfig) -> Error {
    Error::InvalidConfig(format!("expected a {expected} protocol, got {}", c.variant()))
}

pub fn control_fixed_time(g: &Graph, s: &SwarmState, c: &ProtocolConfig) -> Result<Vec<f64>> {
    check_state(g, s)?;
    let mut u = vec![0.0; g.n()];
    fixed_time_into(g, &s.x, &s.theta, c.gamma, s.t, &mut u)?;
    Ok(u)
}

pub fn control_average(g: &Graph, s: &SwarmState, c: &ProtocolConfig) -> Result<Vec<f64>> {
    check_state(g, s)?;
    let mut u = vec![0.0; g.n()];
    pairwise_into(g, &s.x, &s.theta, c.gamma, None, s.t, &mut u)?;
    Ok(u)
}

pub fn control_weighted(g: &Graph, s: &SwarmState, c: &ProtocolConfig) -> Result<Vec<f64>> {
    check_state(g, s)?;
    let p = c.weights().ok_or_else(|| wrong_variant(Variant::Weighted, c))?;
    check_len("weights p", g.n(), p.len())?;
    let mut u = vec![0.0; g.n()];
    pairwise_into(g, &s.x, &s.theta, c.gamma, Some(p), s.t, &mut u)?;
    Ok(u)
}

pub fn theta_rhs(g: &Graph, s: &SwarmState, c: &ProtocolConfig) -> Result<Vec<f64>> {
    check_state(g, s)?;
    let mut out = vec![0.0; g.n()];
    theta_rhs_into(g, &s.x, &s.theta, c.lambda, c.rho, &mut out);
    Ok(out)
}

fn surface_into(x: &[f64], integral: &[f64], offsets: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        let xbar = offsets.get(i).copied().unwrap_or(0.0);
        out[i] = x[i] - xbar - integral[i];
    }
}

/// `s_i = x_i - xbar_i - I_i`.
pub fn sliding_surface(s: &SwarmState, c: &ProtocolConfig) -> Result<Vec<f64>> {
    let gains = c.sliding().ok_or_else(|| wrong_variant(Variant::SlidingMode, c))?;
    check_len("control integrals", s.n(), s.integral.len())?;
    let mut out = vec![0.0; s.n()];
    surface_into(&s.x, &s.integral, &gains.offsets, &mut out);
    Ok(out)
}

/// Returns `(u, nominal)`; the nominal part also drives the stored integral.
pub fn control_sliding(g: &Graph, s: &SwarmState, c: &ProtocolConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    check_state(g, s)?;
    check_len("sliding gains eta", g.n(), s.eta.len())?;
    let gains = c.sliding().ok_or_else(|| wrong_variant(Variant::SlidingMode, c))?;
    let surface = sliding_surface(s, c)?;
    let mut nominal = vec![0.0; g.n()];
    pairwise_into(g, &s.x, &s.theta, c.gamma, None, s.t, &mut nominal)?;
    let u = nominal
        .iter()
        .zip(&s.eta)
        .zip(&surface)
        .map(|((nom, eta), si)| nom - (eta + gains.d) * sgn(*si))
        .collect();
    Ok((u, nominal))
}

pub fn eta_rhs(s: &SwarmState, c: &ProtocolConfig) -> Result<Vec<f64>> {
    let gains = c.sliding().ok_or_else(|| wrong_variant(Variant::SlidingMode, c))?;
    check_len("sliding gains eta", s.n(), s.eta.len())?;
    let surface = sliding_surface(s, c)?;
    Ok(s.eta
        .iter()
        .zip(&surface)
        .map(|(eta, si)| -gains.omega * eta + gains.mu * si.abs())
        .collect())
}

/// Control applied by whichever protocol `c` selects.
pub fn control(g: &Graph, s: &SwarmState, c: &ProtocolConfig) -> Result<Vec<f64>> {
    match c.protocol {
        Protocol::FixedTime => control_fixed_time(g, s, c),
        Protocol::Average => control_average(g, s, c),
        Protocol::Weighted { .. } => control_weighted(g, s, c),
        Protocol::SlidingMode(_) => control_sliding(g, s, c).map(|(u, _)| u),
    }
}

/// Inputs to the sufficiency conditions and time bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub variant: Variant,
    pub lambda: f64,
    pub rho: f64,
    /// Sliding mode only.
    pub mu: f64,
    /// Sliding mode only.
    pub omega_s: f64,
    pub n: usize,
    /// Minimum positive edge weight.
    pub kappa: f64,
    /// Largest weight `p_i` (weighted only).
    pub k_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub satisfied: bool,
    pub threshold: f64,
}

impl Condition {
    fn greater(value: f64, threshold: f64) -> Self {
        Self {
            satisfied: value > threshold,
            threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    /// Threshold on `rho`.
    pub consensus: Condition,
    /// Threshold on `mu` (sliding mode only).
    pub reaching: Option<Condition>,
}

impl ConditionCheck {
    pub fn satisfied(&self) -> bool {
        self.consensus.satisfied && self.reaching.is_none_or(|c| c.satisfied)
    }
}

impl BoundParams {
    /// Scale `c` such that the consensus radicand reads `c * rho - lambda^2 / 4`.
    fn rho_scale(&self) -> f64 {
        let n = self.n as f64;
        let k2 = self.kappa * self.kappa;
        match self.variant {
            Variant::FixedTime => 4.0,
            Variant::Average | Variant::SlidingMode => 2.0 * k2 / n,
            Variant::Weighted => 2.0 * k2 / (self.k_max * n).powi(3),
        }
    }
}

/// Sufficient conditions for the fixed-time guarantees. Reporting only: the
/// protocols still run, and often converge, when these fail.
pub fn check_condition(p: &BoundParams) -> ConditionCheck {
    let quarter_l2 = p.lambda * p.lambda / 4.0;
    ConditionCheck {
        consensus: Condition::greater(p.rho, quarter_l2 / p.rho_scale()),
        reaching: (p.variant == Variant::SlidingMode).then(|| Condition::greater(p.mu, p.omega_s * p.omega_s / 4.0)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusBound {
    pub total: f64,
    /// Time to consensus once (for sliding mode) the manifold is reached.
    pub consensus: f64,
    /// Time to reach the sliding manifold.
    pub reaching: Option<f64>,
}

fn half_period(radicand: f64, condition: &'static str, lhs: f64, rhs: f64) -> Result<f64> {
    if radicand > 0.0 {
        Ok(PI / radicand.sqrt())
    } else {
        Err(Error::ConditionViolated { condition, lhs, rhs })
    }
}

/// Upper bound on the time to reach the sliding manifold.
pub fn bound_reaching_time(mu: f64, omega_s: f64) -> Result<f64> {
    let quarter_w2 = omega_s * omega_s / 4.0;
    half_period(mu - quarter_w2, "mu - omega_s^2/4 > 0", mu, quarter_w2)
}

/// Upper bound on the consensus time for the selected protocol.
pub fn bound_consensus_time(p: &BoundParams) -> Result<ConsensusBound> {
    let quarter_l2 = p.lambda * p.lambda / 4.0;
    let scaled = p.rho_scale() * p.rho;
    let name = match p.variant {
        Variant::FixedTime => "4 rho - lambda^2/4 > 0",
        Variant::Average | Variant::SlidingMode => "2 kappa^2 rho / n - lambda^2/4 > 0",
        Variant::Weighted => "2 kappa^2 rho / (K n)^3 - lambda^2/4 > 0",
    };
    let consensus = half_period(scaled - quarter_l2, name, scaled, quarter_l2)?;
    let reaching = match p.variant {
        Variant::SlidingMode => Some(bound_reaching_time(p.mu, p.omega_s)?),
        _ => None,
    };
    Ok(ConsensusBound {
        total: consensus + reaching.unwrap_or(0.0),
        consensus,
        reaching,
    })
}

/// The closed-loop swarm as an ODE on `[x, theta, eta, I]`.
pub struct SwarmDynamics<'a> {
    pub graph: &'a Graph,
    pub config: &'a ProtocolConfig,
    pub disturbance: &'a DisturbanceSpec,
}

impl SwarmDynamics<'_> {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn is_sliding(&self) -> bool {
        self.config.sliding().is_some()
    }

    /// Control and, for sliding mode, the sliding variables at a flat state.
    pub(crate) fn control_into(&self, t: f64, y: &[f64], u: &mut [f64], surface: &mut [f64]) -> Result<()> {
        let n = self.n();
        let (x, rest) = y.split_at(n);
        let theta = &rest[..n];
        let gamma = self.config.gamma;
        match &self.config.protocol {
            Protocol::FixedTime => fixed_time_into(self.graph, x, theta, gamma, t, u),
            Protocol::Average => pairwise_into(self.graph, x, theta, gamma, None, t, u),
            Protocol::Weighted { weights } => pairwise_into(self.graph, x, theta, gamma, Some(weights), t, u),
            Protocol::SlidingMode(gains) => {
                let eta = &rest[n..2 * n];
                let integral = &rest[2 * n..3 * n];
                pairwise_into(self.graph, x, theta, gamma, None, t, u)?;
                surface_into(x, integral, &gains.offsets, surface);
                for i in 0..n {
                    u[i] -= (eta[i] + gains.d) * sgn(surface[i]);
                }
                Ok(())
            }
        }
    }
}

impl OdeSystem for SwarmDynamics<'_> {
    fn dim(&self) -> usize {
        if self.is_sliding() {
            4 * self.n()
        } else {
            2 * self.n()
        }
    }

    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.n();
        let (x, rest) = y.split_at(n);
        let theta = &rest[..n];
        let (dx, drest) = dy.split_at_mut(n);
        let (dtheta, dsliding) = drest.split_at_mut(n);
        let gamma = self.config.gamma;
        match &self.config.protocol {
            Protocol::FixedTime => fixed_time_into(self.graph, x, theta, gamma, t, dx)?,
            Protocol::Average => pairwise_into(self.graph, x, theta, gamma, None, t, dx)?,
            Protocol::Weighted { weights } => pairwise_into(self.graph, x, theta, gamma, Some(weights), t, dx)?,
            Protocol::SlidingMode(gains) => {
                let eta = &rest[n..2 * n];
                let integral = &rest[2 * n..3 * n];
                let (deta, dintegral) = dsliding.split_at_mut(n);
                pairwise_into(self.graph, x, theta, gamma, None, t, dintegral)?;
                for i in 0..n {
                    let xbar = gains.offsets.get(i).copied().unwrap_or(0.0);
                    let s = x[i] - xbar - integral[i];
                    dx[i] = dintegral[i] - (eta[i] + gains.d) * sgn(s);
                    deta[i] = -gains.omega * eta[i] + gains.mu * s.abs();
                }
            }
        }
        if !self.disturbance.agents.is_empty() {
            for (dxi, terms) in dx.iter_mut().zip(&self.disturbance.agents) {
                *dxi += terms.iter().map(|term| term.eval(t)).sum::<f64>();
            }
        }
        theta_rhs_into(self.graph, x, theta, self.config.lambda, self.config.rho, dtheta);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> Graph {
        Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap()
    }

    fn state(x: &[f64], theta: &[f64]) -> SwarmState {
        SwarmState {
            theta: theta.to_vec(),
            ..SwarmState::initial(x, false)
        }
    }

    fn cfg(gamma: f64, protocol: Protocol) -> ProtocolConfig {
        ProtocolConfig::new(2.0, 1.0, gamma, protocol).unwrap()
    }

    fn sliding_gains() -> Protocol {
        Protocol::SlidingMode(SlidingGains {
            omega: 4.0,
            mu: 10.0,
            d: 1.0,
            offsets: Vec::new(),
        })
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(regularized_inverse(0.0, 0.01), Some(0.0));
        assert_eq!(regularized_inverse(1.0, 0.0), Some(1.0));
        assert_eq!(regularized_inverse(2.0, 0.01), Some(2.0 / 4.01));
        assert_eq!(regularized_inverse(0.0, 0.0), None);
        assert_eq!(regularized_inverse(-2.0, 0.01), Some(-2.0 / 4.01));
    }

    #[test]
    fn fixed_time_examples() {
        let g = pair();
        let c = cfg(0.0, Protocol::FixedTime);
        let u = control_fixed_time(&g, &state(&[0.0, 2.0], &[1.0, 1.0]), &c).unwrap();
        assert_eq!(u, vec![0.5, -0.5]);
        // zero gains never touch the inverse
        let u = control_fixed_time(&g, &state(&[1.0, 1.0], &[0.0, 0.0]), &c).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
        let err = control_fixed_time(&g, &state(&[1.0, 1.0], &[1.0, 0.0]), &c).unwrap_err();
        assert!(matches!(
            err,
            Error::Singularity {
                agent: 0,
                neighbor: None,
                ..
            }
        ));
        let c = cfg(0.01, Protocol::FixedTime);
        let u = control_fixed_time(&g, &state(&[3.0, 3.0], &[5.0, 2.0]), &c).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
    }

    #[test]
    fn average_examples() {
        let g = pair();
        let c = cfg(0.0, Protocol::Average);
        let u = control_average(&g, &state(&[0.0, 2.0], &[1.0, 3.0]), &c).unwrap();
        assert_eq!(u, vec![2.0, -2.0]);
        let err = control_average(&g, &state(&[1.0, 1.0], &[1.0, 0.0]), &c).unwrap_err();
        assert!(matches!(
            err,
            Error::Singularity {
                agent: 0,
                neighbor: Some(1),
                ..
            }
        ));
        let c = cfg(0.01, Protocol::Average);
        let u = control_average(&g, &state(&[4.0, 4.0], &[1.0, 3.0]), &c).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
    }

    #[test]
    fn weighted_examples() {
        let g = pair();
        let c = cfg(
            0.01,
            Protocol::Weighted {
                weights: vec![0.25, 0.75],
            },
        );
        let s = state(&[0.0, 2.0], &[1.0, 3.0]);
        let u = control_weighted(&g, &s, &c).unwrap();
        assert!((0.25 * u[0] + 0.75 * u[1]).abs() < 1e-15);
        let u = control_weighted(&g, &state(&[1.0, 1.0], &[1.0, 3.0]), &c).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
        assert!(control_weighted(&g, &s, &cfg(0.01, Protocol::Average)).is_err());
    }

    #[test]
    fn theta_rhs_examples() {
        let g = pair();
        let c = ProtocolConfig::new(2.0, 1.0, 0.01, Protocol::FixedTime).unwrap();
        assert_eq!(
            theta_rhs(&g, &state(&[0.0, 2.0], &[0.0, 0.0]), &c).unwrap(),
            vec![4.0, 4.0]
        );
        assert_eq!(
            theta_rhs(&g, &state(&[1.0, 1.0], &[1.0, 0.5]), &c).unwrap(),
            vec![-2.0, -1.0]
        );
    }

    #[test]
    fn sliding_examples() {
        let g = Graph::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (0, 4, 1.0),
                (0, 5, 1.0),
                (1, 2, 1.0),
                (1, 4, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        let c = cfg(0.01, sliding_gains());
        let x0 = [1.0, -2.0, 3.0, -4.0, 5.0, -6.0];
        let s = SwarmState::initial(&x0, true);
        assert_eq!(sliding_surface(&s, &c).unwrap(), x0.to_vec());
        let (u, nominal) = control_sliding(&g, &s, &c).unwrap();
        assert_eq!(u, vec![-1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        assert_eq!(nominal, vec![0.0; 6]);

        // starting on the shifted manifold
        let shifted = cfg(
            0.01,
            Protocol::SlidingMode(SlidingGains {
                offsets: x0.to_vec(),
                ..sliding_gains_inner()
            }),
        );
        assert_eq!(sliding_surface(&s, &shifted).unwrap(), vec![0.0; 6]);
        let on_manifold = SwarmState {
            theta: vec![1.0, 2.0, 0.5, 0.0, 3.0, 1.0],
            eta: vec![7.0; 6],
            ..s.clone()
        };
        let (u, nominal) = control_sliding(&g, &on_manifold, &shifted).unwrap();
        assert_eq!(u, nominal);
    }

    fn sliding_gains_inner() -> SlidingGains {
        match sliding_gains() {
            Protocol::SlidingMode(s) => s,
            _ => unreachable!(),
        }
    }

    #[test]
    fn eta_examples() {
        let c = cfg(0.01, sliding_gains());
        let mut s = SwarmState::initial(&[0.0, 2.0], true);
        assert_eq!(eta_rhs(&s, &c).unwrap(), vec![0.0, 20.0]);
        s.x = vec![0.0, 0.0];
        s.eta = vec![1.0, 0.0];
        assert_eq!(eta_rhs(&s, &c).unwrap(), vec![-4.0, 0.0]);
    }

    #[test]
    fn reaching_term_only() {
        let c = cfg(0.01, sliding_gains());
        let s = SwarmState::initial(&[0.5, 0.5], true);
        let (u, _) = control_sliding(&pair(), &s, &c).unwrap();
        assert_eq!(u, vec![-1.0, -1.0]);
    }

    fn params(variant: Variant, lambda: f64, rho: f64) -> BoundParams {
        BoundParams {
            variant,
            lambda,
            rho,
            mu: 10.0,
            omega_s: 4.0,
            n: 6,
            kappa: 1.0,
            k_max: 0.25,
        }
    }

    #[test]
    fn conditions() {
        let c = check_condition(&params(Variant::FixedTime, 2.0, 2.0));
        assert!(c.satisfied());
        assert_eq!(c.consensus.threshold, 0.25);
        let c = check_condition(&params(Variant::Average, 2.0, 2.0));
        assert!(!c.satisfied());
        assert_eq!(c.consensus.threshold, 3.0);
        let c = check_condition(&params(Variant::Weighted, 2.0, 1.0));
        assert!(!c.satisfied());
        assert!((c.consensus.threshold - 1.6875).abs() < 1e-12);
        let c = check_condition(&params(Variant::SlidingMode, 2.0, 0.4));
        assert_eq!(
            c.reaching,
            Some(Condition {
                satisfied: true,
                threshold: 4.0
            })
        );
        assert!(!c.consensus.satisfied);
    }

    #[test]
    fn bounds() {
        let b = bound_consensus_time(&params(Variant::FixedTime, 2.0, 2.0)).unwrap();
        assert!((b.total - PI / 7f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.reaching, None);
        let b = bound_consensus_time(&params(Variant::Average, 2.0, 8.0)).unwrap();
        assert!((b.total - PI / (5.0f64 / 3.0).sqrt()).abs() < 1e-14);
        let b = bound_consensus_time(&params(Variant::SlidingMode, 2.0, 8.0)).unwrap();
        assert!((b.reaching.unwrap() - PI / 6f64.sqrt()).abs() < 1e-15);
        assert!((b.total - b.consensus - b.reaching.unwrap()).abs() < 1e-15);
        assert!((bound_reaching_time(10.0, 4.0).unwrap() - PI / 6f64.sqrt()).abs() < 1e-15);
        assert!(bound_reaching_time(4.0, 4.0).is_err());
        let err = bound_consensus_time(&params(Variant::SlidingMode, 2.0, 0.4)).unwrap_err();
        assert!(err.to_string().contains("kappa"), "{err}");
    }

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::new(0.0, 1.0, 0.0, Protocol::Average).is_err());
        assert!(ProtocolConfig::new(1.0, -1.0, 0.0, Protocol::Average).is_err());
        assert!(ProtocolConfig::new(1.0, 1.0, -0.1, Protocol::Average).is_err());
        assert!(ProtocolConfig::new(
            1.0,
            1.0,
            0.0,
            Protocol::Weighted {
                weights: vec![0.5, 0.6]
            }
        )
        .is_err());
        assert!(ProtocolConfig::new(
            1.0,
            1.0,
            0.0,
            Protocol::Weighted {
                weights: vec![1.5, -0.5]
            }
        )
        .is_err());
        let bad_mu = Protocol::SlidingMode(SlidingGains {
            mu: 0.0,
            ..sliding_gains_inner()
        });
        assert!(ProtocolConfig::new(1.0, 1.0, 0.0, bad_mu).is_err());
        let c = cfg(
            0.0,
            Protocol::Weighted {
                weights: vec![0.5, 0.5],
            },
        );
        assert!(c.validate_for(2).is_ok());
        assert!(c.validate_for(3).is_err());
    }

    #[test]
    fn dynamics_matches_public_ops() {
        let g = pair();
        let dist = DisturbanceSpec::zero();
        let c = cfg(0.01, sliding_gains());
        let s = SwarmState {
            t: 0.3,
            x: vec![0.2, -1.0],
            theta: vec![0.7, 1.1],
            eta: vec![0.4, 0.0],
            integral: vec![0.1, -0.3],
        };
        let dyn_ = SwarmDynamics {
            graph: &g,
            config: &c,
            disturbance: &dist,
        };
        let mut dy = vec![0.0; 8];
        dyn_.derivative(s.t, &s.to_flat(), &mut dy).unwrap();
        let (u, nominal) = control_sliding(&g, &s, &c).unwrap();
        let expected = [u, theta_rhs(&g, &s, &c).unwrap(), eta_rhs(&s, &c).unwrap(), nominal].concat();
        assert_eq!(dy, expected);
        assert_eq!(SwarmState::from_flat(0.3, 2, &s.to_flat()), s);
    }
}
