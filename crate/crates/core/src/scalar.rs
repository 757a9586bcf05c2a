//! Scalar fixed-time regulator
//!
//! ```text
//! x'     = -theta * sgn(x)
//! theta' = -lambda * theta + rho * |x|,   theta(0) = 0
//! ```
//!
//! While `x` keeps its sign, `|x|` and `theta` obey a damped linear oscillator
//! whose first zero depends only on the gains, which is what makes the
//! convergence deadline independent of `x(0)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrator::{self, IntegratorSettings, Method, OdeSystem};

/// Sign with `sgn(0) = 0`.
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarState {
    pub x: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarGains {
    lambda: f64,
    rho: f64,
}

impl ScalarGains {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0 && rho > 0.0) || !lambda.is_finite() || !rho.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "scalar gains must be positive (lambda={lambda}, rho={rho})"
            )));
        }
        Ok(Self { lambda, rho })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Damped frequency `sqrt(rho - lambda^2 / 4)`, if the gains oscillate.
    pub fn frequency(&self) -> Result<f64> {
        frequency(self.lambda, self.rho)
    }
}

fn frequency(lambda: f64, rho: f64) -> Result<f64> {
    let threshold = lambda * lambda / 4.0;
    if rho > threshold {
        Ok((rho - threshold).sqrt())
    } else {
        Err(Error::ConditionViolated {
            condition: "rho > lambda^2/4",
            lhs: rho,
            rhs: threshold,
        })
    }
}

pub fn scalar_rhs(s: ScalarState, g: &ScalarGains) -> (f64, f64) {
    (-s.theta * sgn(s.x), -g.lambda * s.theta + g.rho * s.x.abs())
}

/// Convergence deadline `pi / sqrt(rho - lambda^2 / 4)`.
///
/// Takes raw gains so that `lambda = 0` can be evaluated; only the
/// oscillation condition is enforced.
pub fn scalar_bound(lambda: f64, rho: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    Ok(PI / frequency(lambda, rho)?)
}

/// First positive zero of `cos(wt) + (lambda / 2w) sin(wt)`, always below `pi / w`.
pub fn first_zero_time(g: &ScalarGains) -> Result<f64> {
    let w = g.frequency()?;
    Ok((PI - (2.0 * w).atan2(g.lambda)) / w)
}

/// Closed-form `|x(t)|` from `|x(0)| = x0_abs`:
///
/// ```text
/// |x(t)| = exp(-lambda t / 2) (cos(wt) + lambda/(2w) sin(wt)) |x(0)|
/// ```
///
/// obtained by partial fractions of `(s + lambda) / ((s + lambda/2)^2 + w^2)`.
/// The sine coefficient is `lambda / (2w)`, not `lambda / w`. Identically zero
/// after the first zero.
pub fn analytic_abs_x(t: f64, x0_abs: f64, g: &ScalarGains) -> Result<f64> {
    let w = g.frequency()?;
    if t >= first_zero_time(g)? {
        return Ok(0.0);
    }
    let envelope = (-0.5 * g.lambda * t).exp();
    let shape = (w * t).cos() + g.lambda / (2.0 * w) * (w * t).sin();
    Ok((envelope * shape * x0_abs).max(0.0))
}

struct ScalarSystem<'a>(&'a ScalarGains);

impl OdeSystem for ScalarSystem<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn derivative(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (dx, dtheta) = scalar_rhs(ScalarState { x: y[0], theta: y[1] }, self.0);
        dy[0] = dx;
        dy[1] = dtheta;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ScalarState>,
}

impl ScalarTrajectory {
    /// Earliest recorded time at which `|x| < tol`, `x` has changed sign
    /// relative to `x(0)`, or `|x|` is within one step of travel (`theta * dt`)
    /// of zero.
    ///
    /// The last case matters: at the sgn discontinuity RK4 stages cancel and
    /// the discrete solution can settle at a small positive `x` of order
    /// `theta * dt` without ever changing sign.
    pub fn first_zero(&self, tol: f64) -> Option<f64> {
        let x0 = self.states.first()?.x;
        let dt = match self.times.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        };
        self.times
            .iter()
            .zip(&self.states)
            .find(|(_, s)| s.x.abs() < tol || s.x * x0 < 0.0 || s.x.abs() <= s.theta.abs() * dt)
            .map(|(&t, _)| t)
    }
}

/// Integrates the scalar regulator from `(x0, 0)` with RK4, recording every step.
pub fn simulate_scalar(x0: f64, g: &ScalarGains, dt: f64, t_end: f64) -> Result<ScalarTrajectory> {
    let settings = IntegratorSettings::new(Method::Rk4, dt, t_end, Some(1))?;
    let sol = integrator::solve(&ScalarSystem(g), &[x0, 0.0], &settings)?;
    Ok(ScalarTrajectory {
        times: sol.times,
        states: sol
            .states
            .into_iter()
            .map(|y| ScalarState { x: y[0], theta: y[1] })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let g = ScalarGains::new(1.0, 2.0).unwrap();
        assert_eq!(scalar_rhs(ScalarState { x: 0.0, theta: 0.0 }, &g), (0.0, 0.0));
        assert_eq!(scalar_rhs(ScalarState { x: 1.0, theta: 0.0 }, &g), (0.0, 2.0));
        assert_eq!(scalar_rhs(ScalarState { x: -2.0, theta: 3.0 }, &g), (3.0, 1.0));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(scalar_bound(0.0, 1.0).unwrap(), PI);
        assert_eq!(scalar_bound(2.0, 2.0).unwrap(), PI);
        let err = scalar_bound(2.0, 1.0).unwrap_err();
        match err {
            Error::ConditionViolated { lhs, rhs, .. } => assert_eq!((lhs, rhs), (1.0, 1.0)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn analytic_endpoints() {
        let g = ScalarGains::new(2.0, 2.0).unwrap();
        assert_eq!(analytic_abs_x(0.0, 3.5, &g).unwrap(), 3.5);
        let t0 = first_zero_time(&g).unwrap();
        assert_eq!(analytic_abs_x(t0, 1.0, &g).unwrap(), 0.0);
        assert_eq!(analytic_abs_x(t0 + 1.0, 1.0, &g).unwrap(), 0.0);
        assert!(analytic_abs_x(t0 - 1e-6, 1.0, &g).unwrap() > 0.0);
        assert!(t0 < scalar_bound(2.0, 2.0).unwrap());
        assert!(analytic_abs_x(0.1, 1.0, &ScalarGains::new(2.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn zero_start_stays_zero() {
        let g = ScalarGains::new(2.0, 2.0).unwrap();
        let traj = simulate_scalar(0.0, &g, 1e-3, 1.0).unwrap();
        assert!(traj.states.iter().all(|s| s.x == 0.0 && s.theta == 0.0));
    }

    #[test]
    fn odd_symmetry() {
        let g = ScalarGains::new(2.0, 2.0).unwrap();
        let pos = simulate_scalar(5.0, &g, 1e-4, 2.0).unwrap();
        let neg = simulate_scalar(-5.0, &g, 1e-4, 2.0).unwrap();
        for (a, b) in pos.states.iter().zip(&neg.states) {
            assert_eq!(a.x, -b.x);
            assert_eq!(a.theta, b.theta);
        }
        assert_eq!(pos.first_zero(1e-3), neg.first_zero(1e-3));
    }

    #[test]
    fn unit_start_meets_deadline() {
        let g = ScalarGains::new(2.0, 2.0).unwrap();
        let traj = simulate_scalar(1.0, &g, 1e-4, 4.0).unwrap();
        assert!(traj.first_zero(1e-3).unwrap() <= PI);
    }

    #[test]
    fn sgn_zero() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(-0.0), 0.0);
        assert_eq!(sgn(-3.0), -1.0);
    }
}
