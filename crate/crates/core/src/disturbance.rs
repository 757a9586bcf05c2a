//! Bounded sinusoidal disturbances added to each agent's input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sine,
    Cosine,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub waveform: Waveform,
    pub amplitude: f64,
    /// rad per unit time
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Term {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self {
            waveform: Waveform::Sine,
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn cosine(amplitude: f64, frequency: f64) -> Self {
        Self {
            waveform: Waveform::Cosine,
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let arg = self.frequency * t + self.phase;
        match self.waveform {
            Waveform::Sine => self.amplitude * arg.sin(),
            Waveform::Cosine => self.amplitude * arg.cos(),
            Waveform::Zero => 0.0,
        }
    }
}

/// Per-agent sums of sinusoidal terms. An empty spec is the zero disturbance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisturbanceSpec {
    pub agents: Vec<Vec<Term>>,
}

impl DisturbanceSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.agents
            .iter()
            .flatten()
            .all(|term| term.waveform == Waveform::Zero || term.amplitude == 0.0)
    }

    pub fn evaluate(&self, t: f64, n: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n];
        self.evaluate_into(t, &mut out)?;
        Ok(out)
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if self.agents.is_empty() {
            out.fill(0.0);
            return Ok(());
        }
        if self.agents.len() != out.len() {
            return Err(Error::LengthMismatch {
                what: "disturbance agents",
                expected: out.len(),
                found: self.agents.len(),
            });
        }
        for (o, terms) in out.iter_mut().zip(&self.agents) {
            *o = terms.iter().map(|term| term.eval(t)).sum();
        }
        Ok(())
    }

    /// Max over agents of the summed term amplitudes.
    pub fn implied_bound(&self) -> f64 {
        self.agents
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .filter(|term| term.waveform != Waveform::Zero)
                    .map(|term| term.amplitude.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}
