//! Additive eigenvalue estimation, normalization, and stationary solutions.

use crate::grid::{GridError, GridFunction};
use crate::hamiltonian::{Hamiltonian, HamiltonianError};
use crate::solver::{evolve_with, resolve_scheme, EvolutionTrace, Scheme, SolverConfig, SolverError, Stride};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErgodicError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("discounted problem at delta = {delta} not converged after {iterations} iterations (residual {residual})")]
    DiscountNotConverged {
        delta: f64,
        iterations: usize,
        residual: f64,
        /// Residual every 1000 iterations.
        history: Vec<f64>,
    },
    #[error("evolution not settled by t = {horizon}: last unit-time increment {increment}")]
    NotConverged {
        horizon: f64,
        increment: f64,
        /// `(t, |u(t_i) - u(t_{i-1})|)` per snapshot interval.
        curve: Vec<(f64, f64)>,
    },
    #[error("invalid ergodic configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueEstimate {
    pub c_longtime: Option<f64>,
    pub c_discount: Option<f64>,
    /// `max - min` of `-(u(2T) - u(T)) / T`.
    pub spread: Option<f64>,
    pub horizon: Option<f64>,
    pub ladder: Vec<f64>,
    /// `-delta mean(v_delta)` per rung, before extrapolation.
    pub discount_values: Vec<f64>,
    /// Final residual per rung.
    pub residuals: Vec<f64>,
}

impl EigenvalueEstimate {
    /// `|c_longtime - c_discount|` when both are present.
    pub fn gap(&self) -> Option<f64> {
        Some((self.c_longtime? - self.c_discount?).abs())
    }

    /// Fills the fields of `self` that are missing from `other`'s.
    pub fn merge(mut self, other: EigenvalueEstimate) -> Self {
        self.c_longtime = self.c_longtime.or(other.c_longtime);
        self.spread = self.spread.or(other.spread);
        self.horizon = self.horizon.or(other.horizon);
        if self.c_discount.is_none() {
            self.c_discount = other.c_discount;
            self.ladder = other.ladder;
            self.discount_values = other.discount_values;
            self.residuals = other.residuals;
        }
        self
    }
}

fn only_final(config: &SolverConfig, horizon: f64) -> SolverConfig {
    config.with_horizon(horizon).with_stride(Stride::Steps(usize::MAX))
}

/// `c = -mean_x (u(2T) - u(T)) / T`, from `u0` evolved with one shared scheme.
pub fn eigenvalue_longtime(
    h: &Hamiltonian,
    u0: &GridFunction,
    config: &SolverConfig,
    horizon: f64,
) -> Result<EigenvalueEstimate, ErgodicError> {
    let scheme = resolve_scheme(h, config, &[u0])?;
    eigenvalue_longtime_with(h, u0, config, &scheme, horizon)
}

pub fn eigenvalue_longtime_with(
    h: &Hamiltonian,
    u0: &GridFunction,
    config: &SolverConfig,
    scheme: &Scheme,
    horizon: f64,
) -> Result<EigenvalueEstimate, ErgodicError> {
    let leg = only_final(config, horizon);
    let first = evolve_with(u0, h, &leg, scheme)?;
    let second = evolve_with(first.last(), h, &leg, scheme)?;
    let rate = second
        .last()
        .zip_with(first.last(), |a, b| -(a - b) / horizon)?;
    Ok(EigenvalueEstimate {
        c_longtime: Some(rate.mean()),
        c_discount: None,
        spread: Some(rate.max() - rate.min()),
        horizon: Some(horizon),
        ladder: Vec::new(),
        discount_values: Vec::new(),
        residuals: Vec::new(),
    })
}

pub const DEFAULT_LADDER: [f64; 3] = [0.1, 0.05, 0.025];
const DISCOUNT_TOL: f64 = 1e-6;
const DISCOUNT_MAX_ITER: usize = 5_000_000;

/// Solves `delta v + H(x, Dv) = 0` for each rung by the damped iteration
/// `v <- v - tau (delta v + R(v))`, `tau = 1 / (1/dt + delta)`, and extrapolates
/// `-delta mean(v_delta)` to `delta = 0` through all rungs.
pub fn eigenvalue_discount(
    h: &Hamiltonian,
    ladder: &[f64],
    config: &SolverConfig,
) -> Result<EigenvalueEstimate, ErgodicError> {
    if ladder.is_empty() || ladder.iter().any(|d| !(*d > 0.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ErgodicError::Config(format!(
            "discount ladder {ladder:?} must be positive and decreasing"
        )));
    }
    let zero = GridFunction::constant(&config.grid, 0.0);
    let scheme = resolve_scheme(h, config, &[&zero])?;
    let nodes = h.on_grid(&config.grid)?;
    let mut values = Vec::with_capacity(ladder.len());
    let mut residuals = Vec::with_capacity(ladder.len());
    let mut v = zero.into_values();
    let mut prev_delta: Option<f64> = None;
    for &delta in ladder {
        if let Some(pd) = prev_delta {
            // v_delta ~ -c / delta: rescale the previous rung as a warm start
            for x in &mut v {
                *x *= pd / delta;
            }
        }
        let tau = 1.0 / (1.0 / scheme.dt + delta);
        let mut history = Vec::new();
        let mut iterations = 0;
        let residual = loop {
            let u = GridFunction::new(config.grid.clone(), v.clone())?;
            let r = scheme.operator(&u, &nodes)?;
            let mut res = 0.0f64;
            for (vi, ri) in v.iter_mut().zip(&r) {
                let g = delta * *vi + ri;
                res = res.max(g.abs());
                *vi -= tau * g;
            }
            if iterations % 1000 == 0 {
                history.push(res);
            }
            if res <= DISCOUNT_TOL {
                break res;
            }
            iterations += 1;
            if iterations >= DISCOUNT_MAX_ITER || !res.is_finite() {
                return Err(ErgodicError::DiscountNotConverged {
                    delta,
                    iterations,
                    residual: res,
                    history,
                });
            }
        };
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        values.push(-delta * mean);
        residuals.push(residual);
        prev_delta = Some(delta);
    }
    Ok(EigenvalueEstimate {
        c_longtime: None,
        c_discount: Some(neville_at_zero(ladder, &values)),
        spread: None,
        horizon: None,
        ladder: ladder.to_vec(),
        discount_values: values,
        residuals,
    })
}

/// Value at 0 of the interpolating polynomial through `(xs[i], ys[i])`.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// `H - c`.
pub fn normalize(h: &Hamiltonian, c: f64) -> Hamiltonian {
    h.normalize(c)
}

/// A numerical solution `v0` of the normalized stationary problem together with the
/// trajectory that produced it.
#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub v0: GridFunction,
    /// `0 <= u(t) - v0 <= c0` on every snapshot of `trace`.
    pub c0: f64,
    /// Amount subtracted from the final snapshot to obtain `v0`.
    pub shift: f64,
    pub trace: EvolutionTrace,
    /// `|u(T) - u(T - 1)|`.
    pub final_increment: f64,
}

pub const STATIONARY_TOL: f64 = 1e-6;

/// Evolves `seed` with the normalized `h` until the last unit-time increment is below
/// `1e-6`, then shifts the final snapshot down so that `0 <= u - v0` along the whole trace.
pub fn stationary_solution(
    h: &Hamiltonian,
    seed: &GridFunction,
    config: &SolverConfig,
) -> Result<StationarySolution, ErgodicError> {
    let scheme = resolve_scheme(h, config, &[seed])?;
    stationary_solution_with(h, seed, config, &scheme)
}

pub fn stationary_solution_with(
    h: &Hamiltonian,
    seed: &GridFunction,
    config: &SolverConfig,
    scheme: &Scheme,
) -> Result<StationarySolution, ErgodicError> {
    let trace = evolve_with(seed, h, config, scheme)?;
    let final_increment = trace.tail_increment(1.0).ok_or_else(|| {
        ErgodicError::Config(format!("horizon {} shorter than one time unit", config.horizon))
    })?;
    if final_increment > STATIONARY_TOL {
        return Err(ErgodicError::NotConverged {
            horizon: trace.horizon(),
            increment: final_increment,
            curve: trace.times[1..]
                .iter()
                .copied()
                .zip(trace.increments.iter().copied())
                .collect(),
        });
    }
    let pre = trace.last().clone();
    let d = seed.sup_distance(&pre)?;
    let mut shift = d;
    for s in &trace.snapshots {
        let below = pre
            .values()
            .iter()
            .zip(s.values())
            .fold(f64::NEG_INFINITY, |m, (v, u)| m.max(v - u));
        shift = shift.max(below);
    }
    let v0 = pre.shifted(-shift)?;
    let mut c0 = 2.0 * d;
    for s in &trace.snapshots {
        let above = s
            .values()
            .iter()
            .zip(v0.values())
            .fold(f64::NEG_INFINITY, |m, (u, v)| m.max(u - v));
        c0 = c0.max(above);
    }
    Ok(StationarySolution {
        v0,
        c0,
        shift,
        trace,
        final_increment,
    })
}
