//! Fixed-step explicit integration with sample recording.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{disagreement, max_spread};
use crate::protocol::{SwarmDynamics, SwarmState};

/// Upper bound on recorded rows when `record_every` is left to the default.
pub const MAX_DEFAULT_ROWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSettings {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl IntegratorSettings {
    /// Validates the settings; a missing `record_every` is chosen so that at
    /// most [`MAX_DEFAULT_ROWS`] samples are recorded.
    pub fn new(method: Method, dt: f64, t_end: f64, record_every: Option<usize>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if !(t_end >= dt) || !t_end.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "t_end must be at least dt ({dt}), got {t_end}"
            )));
        }
        let record_every = match record_every {
            Some(0) => return Err(Error::InvalidConfig("record_every must be >= 1".into())),
            Some(r) => r,
            None => Self::default_record_every(dt, t_end),
        };
        Ok(Self {
            method,
            dt,
            t_end,
            record_every,
        })
    }

    pub fn default_record_every(dt: f64, t_end: f64) -> usize {
        (step_count(dt, t_end) + 1).div_ceil(MAX_DEFAULT_ROWS).max(1)
    }

    /// Number of steps taken; the last step ends at or just past `t_end`.
    pub fn steps(&self) -> usize {
        step_count(self.dt, self.t_end)
    }
}

fn step_count(dt: f64, t_end: f64) -> usize {
    // tolerate t_end/dt landing a hair above an integer
    let ratio = t_end / dt;
    (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0) as usize
}

/// A first-order system `y' = f(t, y)` on a flat state vector.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.1)(t, y, dy);
        Ok(())
    }
}

/// Advances a state vector one step at a time, reusing scratch buffers.
pub struct Stepper {
    method: Method,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stepper {
    pub fn new(method: Method, dim: usize) -> Self {
        Self {
            method,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, dt: f64, y: &mut [f64]) -> Result<()> {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        sys.derivative(t, y, k1)?;
        match self.method {
            Method::Euler => {
                for (yi, ki) in y.iter_mut().zip(k1.iter()) {
                    *yi += dt * ki;
                }
            }
            Method::Rk4 => {
                let half = 0.5 * dt;
                axpy(tmp, y, half, k1);
                sys.derivative(t + half, tmp, k2)?;
                axpy(tmp, y, half, k2);
                sys.derivative(t + half, tmp, k3)?;
                axpy(tmp, y, dt, k3);
                sys.derivative(t + dt, tmp, k4)?;
                let sixth = dt / 6.0;
                for i in 0..y.len() {
                    y[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        Ok(())
    }
}

fn axpy(out: &mut [f64], y: &[f64], a: f64, k: &[f64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}

/// Integrates from `t = 0`, calling `observe(step, t, y)` at the start of every
/// step and once more at the final state. Returns the final state.
///
/// Aborts with [`Error::NonFinite`] as soon as any component stops being finite.
pub fn integrate<S, F>(sys: &S, y0: &[f64], settings: &IntegratorSettings, mut observe: F) -> Result<Vec<f64>>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    if y0.len() != sys.dim() {
        return Err(Error::LengthMismatch {
            what: "initial state",
            expected: sys.dim(),
            found: y0.len(),
        });
    }
    let mut y = y0.to_vec();
    let mut stepper = Stepper::new(settings.method, y.len());
    let steps = settings.steps();
    for k in 0..=steps {
        let t = k as f64 * settings.dt;
        observe(k, t, &y)?;
        if k == steps {
            break;
        }
        stepper.step(sys, t, settings.dt, &mut y)?;
        if let Some(component) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: t + settings.dt,
                component,
            });
        }
    }
    Ok(y)
}

/// Recorded samples of a generic system: every `record_every`-th step.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

pub fn solve<S: OdeSystem + ?Sized>(sys: &S, y0: &[f64], settings: &IntegratorSettings) -> Result<Solution> {
    let mut sol = Solution {
        times: Vec::new(),
        states: Vec::new(),
    };
    integrate(sys, y0, settings, |k, t, y| {
        if k % settings.record_every == 0 {
            sol.times.push(t);
            sol.states.push(y.to_vec());
        }
        Ok(())
    })?;
    Ok(sol)
}

/// Recorded swarm run: snapshots, controls and the metric traces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SwarmState>,
    /// Control applied over the step starting at each recorded time.
    pub controls: Vec<Vec<f64>>,
    /// Disagreement `V` at each recorded time.
    pub disagreement: Vec<f64>,
    /// `max(x) - min(x)` at each recorded time.
    pub spread: Vec<f64>,
    /// Largest `|u_i|` over every integration step since the previous record.
    pub step_max_control: Vec<f64>,
    /// Sliding variables, present only for sliding-mode runs.
    pub surfaces: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn agents(&self) -> usize {
        self.states.first().map_or(0, |s| s.x.len())
    }
}

/// Integrates the closed-loop swarm from `s0`, recording every
/// `record_every`-th step. The control is evaluated at the start of every step
/// so that `step_max_control` sees all of them, not only the recorded ones.
pub fn integrate_swarm(
    dynamics: &SwarmDynamics<'_>,
    s0: &SwarmState,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let n = dynamics.n();
    let sliding = dynamics.is_sliding();
    let mut traj = Trajectory {
        surfaces: sliding.then(Vec::new),
        ..Trajectory::default()
    };
    let mut u = vec![0.0; n];
    let mut surface = vec![0.0; n];
    let mut running_max = 0.0f64;
    let y0 = s0.to_flat();
    integrate(dynamics, &y0, settings, |k, t, y| {
        dynamics.control_into(t, y, &mut u, &mut surface)?;
        running_max = u.iter().fold(running_max, |m, v| m.max(v.abs()));
        if k % settings.record_every == 0 {
            let x = &y[..n];
            traj.times.push(t);
            traj.states.push(SwarmState::from_flat(t, n, y));
            traj.controls.push(u.clone());
            traj.disagreement.push(disagreement(dynamics.graph, x));
            traj.spread.push(max_spread(x));
            traj.step_max_control.push(running_max);
            if let Some(surfaces) = traj.surfaces.as_mut() {
                surfaces.push(surface.clone());
            }
            running_max = 0.0;
        }
        Ok(())
    })?;
    if let Some(last) = traj.step_max_control.last_mut() {
        *last = last.max(running_max);
    }
    Ok(traj)
}
