//! Restarted type-II Anderson acceleration.
//!
//! Given pairs `(u_i, g_i)` with `g_i = T u_i` (or `T^s u_i` for interval s)
//! and residuals `f_i = g_i − u_i`, a proposal solves
//! `γ = argmin ‖f_k − ΔF γ‖₂` and returns `û = g_k − ΔG γ`.

use thiserror::Error;

use crate::dense::{least_squares_columns, sub};

/// |R_ii| below this makes a proposal fail instead of regularizing.
pub const RANK_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AndersonError {
    #[error("invalid Anderson configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fewer than two stored pairs")]
    NotReady,
    #[error("residual differences are rank deficient (|R[{column}][{column}]| = {diag:e})")]
    RankDeficient { column: usize, diag: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AndersonConfig {
    memory: usize,
    interval: usize,
}

impl AndersonConfig {
    pub fn new(memory: usize, interval: usize) -> Result<Self, AndersonError> {
        if memory < 2 {
            return Err(AndersonError::InvalidConfig(format!(
                "memory must be at least 2, got {memory}"
            )));
        }
        if interval < 1 {
            return Err(AndersonError::InvalidConfig(
                "interval must be at least 1".into(),
            ));
        }
        Ok(AndersonConfig { memory, interval })
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn interval(&self) -> usize {
        self.interval
    }
}

impl Default for AndersonConfig {
    fn default() -> Self {
        AndersonConfig {
            memory: 15,
            interval: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AndersonProposal {
    /// `g_k − ΔG γ`, the accelerated point.
    pub u_hat: Vec<f64>,
    /// `u_k − ΔU γ`, the same affine combination of the inputs.
    pub u_combination: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AndersonState {
    dim: usize,
    memory: usize,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
}

impl AndersonState {
    pub fn new(dim: usize, config: &AndersonConfig) -> Self {
        AndersonState {
            dim,
            memory: config.memory,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_differences(&self) -> usize {
        self.inputs.len().saturating_sub(1)
    }

    pub fn clear(&mut self) {
        self.inputs.clear();
        self.outputs.clear();
    }

    /// Stores a pair; once the window would exceed `memory` differences the
    /// whole memory is discarded first.
    pub fn update(&mut self, u: &[f64], tu: &[f64]) -> Result<(), AndersonError> {
        for got in [u.len(), tu.len()] {
            if got != self.dim {
                return Err(AndersonError::DimensionMismatch {
                    expected: self.dim,
                    got,
                });
            }
        }
        if self.inputs.len() > self.memory {
            self.clear();
        }
        self.inputs.push(u.to_vec());
        self.outputs.push(tu.to_vec());
        Ok(())
    }

    pub fn propose(&self) -> Result<AndersonProposal, AndersonError> {
        let k = self.inputs.len();
        if k < 2 {
            return Err(AndersonError::NotReady);
        }
        let f: Vec<Vec<f64>> = self
            .inputs
            .iter()
            .zip(&self.outputs)
            .map(|(u, g)| sub(g, u))
            .collect();
        let df: Vec<Vec<f64>> = f.windows(2).map(|w| sub(&w[1], &w[0])).collect();
        let gamma = least_squares_columns(&df, &f[k - 1], RANK_TOL).map_err(|e| {
            AndersonError::RankDeficient {
                column: e.column,
                diag: e.diag,
            }
        })?;
        let mut u_hat = self.outputs[k - 1].clone();
        let mut u_combination = self.inputs[k - 1].clone();
        for (i, &gi) in gamma.iter().enumerate() {
            for t in 0..self.dim {
                u_hat[t] -= gi * (self.outputs[i + 1][t] - self.outputs[i][t]);
                u_combination[t] -= gi * (self.inputs[i + 1][t] - self.inputs[i][t]);
            }
        }
        Ok(AndersonProposal {
            u_hat,
            u_combination,
            gamma,
        })
    }
}
