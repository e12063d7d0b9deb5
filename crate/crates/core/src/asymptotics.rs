//! Large-time diagnostics built on the Lyapunov-type functional
//!
//! ```text
//! w+(x,t) = sup_{s >= t}  [u(x,t) - v0(x) - theta (u(x,s) - v0(x) + eta (s - t))]
//! w-(x,t) = max_{s <= t}  [u(x,t) - v0(x) - theta (u(x,s) - v0(x) - eta (s - t))]
//! ```
//!
//! evaluated on the snapshot times of a trace, together with the limit profile and the
//! contraction property of the scheme.

use crate::grid::{GridError, GridFunction};
use crate::hamiltonian::{Hamiltonian, HamiltonianError};
use crate::solver::{evolve_with, resolve_scheme, EvolutionTrace, Scheme, SolverConfig, SolverError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("invalid w parameters: {0}")]
    Config(String),
    #[error("0 <= u - v0 <= C0 fails at t = {time}: u - v0 ranges over [{min}, {max}], C0 = {c0}")]
    Normalization { time: f64, min: f64, max: f64, c0: f64 },
    #[error("trace not settled: last unit-time increment {increment}")]
    NotConverged {
        increment: f64,
        curve: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WConfig {
    pub eta: f64,
    pub theta: f64,
    pub variant: Variant,
    /// Replaces the default search window length.
    pub window: Option<f64>,
}

impl WConfig {
    pub fn new(eta: f64, theta: f64, variant: Variant) -> Self {
        Self {
            eta,
            theta,
            variant,
            window: None,
        }
    }

    fn validate(&self) -> Result<(), AsymptoticsError> {
        if !(self.eta > 0.0 && self.theta > 1.0 && self.eta.is_finite() && self.theta.is_finite()) {
            return Err(AsymptoticsError::Config(format!(
                "need eta > 0 and theta > 1, got eta = {}, theta = {}",
                self.eta, self.theta
            )));
        }
        if let Some(w) = self.window {
            if !(w > 0.0) {
                return Err(AsymptoticsError::Config(format!("window {w} must be positive")));
            }
        }
        Ok(())
    }

    /// Length of the `s`-window: `C0 (1 + theta) / (theta eta)` forward for the plus variant,
    /// `C0 / eta` backward for the minus variant.
    pub fn window_length(&self, c0: f64) -> f64 {
        self.window.unwrap_or(match self.variant {
            Variant::Plus => c0 * (1.0 + self.theta) / (self.theta * self.eta),
            Variant::Minus => c0 / self.eta,
        })
    }
}

/// `w` at every snapshot time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WSeries {
    pub config: WConfig,
    pub c0: f64,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<GridFunction>,
    /// The window at this time reaches past the trace and the tail is not certified.
    pub truncated: Vec<bool>,
    /// `theta (max |u_t| + eta) * max snapshot spacing`: bound on the error from replacing
    /// the supremum over continuous `s` by a maximum over snapshots.
    pub quantization_bound: f64,
}

impl WSeries {
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.times.len()).filter(|&i| !self.truncated[i])
    }
}

/// Checks `0 <= u - v0 <= C0` on every snapshot, with `1e-9` slack.
pub fn check_normalization(trace: &EvolutionTrace, v0: &GridFunction, c0: f64) -> Result<(), AsymptoticsError> {
    for (t, s) in trace.times.iter().zip(&trace.snapshots) {
        let d = s.zip_with(v0, |u, v| u - v)?;
        if d.min() < -1e-9 || d.max() > c0 + 1e-9 {
            return Err(AsymptoticsError::Normalization {
                time: *t,
                min: d.min(),
                max: d.max(),
                c0,
            });
        }
    }
    Ok(())
}

/// Discrete `w` over the snapshot times of `trace`.
///
/// For the plus variant the window `[t, t + C0 (1+theta)/(theta eta)]` can run past the trace.
/// Such times are flagged truncated unless the final stationary residual is at most `eta`: the
/// scheme's time derivative is nonincreasing in sup norm, so then the objective past the horizon
/// cannot exceed its value at the final snapshot.
pub fn compute_w(
    trace: &EvolutionTrace,
    v0: &GridFunction,
    c0: f64,
    cfg: &WConfig,
) -> Result<WSeries, AsymptoticsError> {
    cfg.validate()?;
    check_normalization(trace, v0, c0)?;
    let gaps: Vec<Vec<f64>> = trace
        .snapshots
        .iter()
        .map(|s| s.values().iter().zip(v0.values()).map(|(u, v)| u - v).collect())
        .collect();
    let window = cfg.window_length(c0);
    let (eta, theta) = (cfg.eta, cfg.theta);
    let times = &trace.times;
    let t_end = trace.horizon();
    let tail_certified = trace.final_residual.is_some_and(|r| r <= eta);
    let n = times.len();
    let range = |i: usize| -> (usize, usize) {
        match cfg.variant {
            Variant::Plus => (i, times.partition_point(|&s| s <= times[i] + window)),
            Variant::Minus => (times.partition_point(|&s| s < times[i] - window), i + 1),
        }
    };
    let sign = match cfg.variant {
        Variant::Plus => 1.0,
        Variant::Minus => -1.0,
    };
    let one = |i: usize| -> Result<GridFunction, GridError> {
        let (lo, hi) = range(i);
        let a = &gaps[i];
        let mut w = vec![f64::NEG_INFINITY; a.len()];
        for j in lo..hi {
            let drift = sign * eta * (times[j] - times[i]);
            for (k, wk) in w.iter_mut().enumerate() {
                let obj = a[k] - theta * (gaps[j][k] + drift);
                if obj > *wk {
                    *wk = obj;
                }
            }
        }
        GridFunction::new(v0.grid().clone(), w)
    };
    let values: Vec<GridFunction> = (0..n).into_par_iter().map(one).collect::<Result<_, _>>()?;
    let truncated = (0..n)
        .map(|i| cfg.variant == Variant::Plus && times[i] + window > t_end && !tail_certified)
        .collect();
    let mut rate: f64 = 0.0;
    let mut spacing: f64 = 0.0;
    for (k, inc) in trace.increments.iter().enumerate() {
        let dt = times[k + 1] - times[k];
        rate = rate.max(inc / dt);
        spacing = spacing.max(dt);
    }
    Ok(WSeries {
        config: *cfg,
        c0,
        times: times.clone(),
        values,
        truncated,
        quantization_bound: theta * (rate + eta) * spacing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub time: f64,
    pub node: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub outcome: Outcome,
    pub lower: f64,
    pub upper: f64,
    pub min: f64,
    pub max: f64,
    pub worst: Option<Offender>,
}

/// `-C0 (theta - 1) <= w <= C0` everywhere, with `1e-9` slack.
pub fn w_bounds_check(w: &WSeries, c0: f64, theta: f64) -> BoundsReport {
    let lower = -c0 * (theta - 1.0);
    let upper = c0;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst: Option<(f64, Offender)> = None;
    for (t, f) in w.times.iter().zip(&w.values) {
        for (node, &v) in f.values().iter().enumerate() {
            min = min.min(v);
            max = max.max(v);
            let excess = (lower - v).max(v - upper);
            if excess > 1e-9 && worst.as_ref().map_or(true, |(e, _)| excess > *e) {
                worst = Some((excess, Offender { time: *t, node, value: v }));
            }
        }
    }
    BoundsReport {
        outcome: if worst.is_none() { Outcome::Pass } else { Outcome::Fail },
        lower,
        upper,
        min,
        max,
        worst: worst.map(|(_, o)| o),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub outcome: Outcome,
    /// `(t, max_x max{w, 0})` at every snapshot time, truncated ones included.
    pub curve: Vec<(f64, f64)>,
    pub tail_mean: Option<f64>,
    pub tolerance: f64,
    pub valid_times: usize,
}

pub const DEFAULT_DECAY_TOL: f64 = 1e-2;

/// `m(t) = max_x max{w(x,t), 0}`; passes when its mean over the last quarter of the
/// non-truncated time range is at most `tolerance`.
pub fn w_positive_part_decay(w: &WSeries, tolerance: f64) -> DecayReport {
    let curve: Vec<(f64, f64)> = w
        .times
        .iter()
        .zip(&w.values)
        .map(|(t, f)| (*t, f.max().max(0.0)))
        .collect();
    let valid: Vec<usize> = w.valid_indices().collect();
    if valid.len() < 4 {
        return DecayReport {
            outcome: Outcome::Inconclusive,
            curve,
            tail_mean: None,
            tolerance,
            valid_times: valid.len(),
        };
    }
    let (t0, t1) = (w.times[valid[0]], w.times[*valid.last().expect("nonempty")]);
    let cut = t0 + 0.75 * (t1 - t0);
    let tail: Vec<f64> = valid.iter().filter(|&&i| w.times[i] >= cut).map(|&i| curve[i].1).collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    DecayReport {
        outcome: if mean <= tolerance { Outcome::Pass } else { Outcome::Fail },
        curve,
        tail_mean: Some(mean),
        tolerance,
        valid_times: valid.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityCell {
    pub eta: f64,
    pub theta: f64,
    pub variant: Variant,
    /// `(theta - 1) C0 + theta eta + eps`.
    pub slack: f64,
    /// Earliest snapshot time after which no pair violates the inequality.
    pub t_eps: Option<f64>,
    /// Largest `u(t) - u(t +- s) - slack` at or after `t_eps` (negative when satisfied).
    pub margin_after: Option<f64>,
    /// `(t, max over pairs and x of u(t) - u(t +- s) - slack)`.
    pub margin_curve: Vec<(f64, f64)>,
    pub outcome: Outcome,
}

/// Checks `u(t) <= u(t + s) + (theta-1) C0 + theta eta + eps` for `0 <= s <= 1` (plus) or the
/// same with `t - s` (minus) on snapshot pairs, for each `(eta, theta)`.
///
/// Passes when the inequality holds from some `T_eps` on, over at least the last
/// `max(1, T/4)` of the trace.
pub fn near_monotonicity_check(
    trace: &EvolutionTrace,
    c0: f64,
    etas: &[f64],
    thetas: &[f64],
    eps: f64,
    variant: Variant,
) -> Vec<MonotonicityCell> {
    let times = &trace.times;
    let n = times.len();
    // largest u(t) - u(t +- s) per time, independent of (eta, theta)
    let drop: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let js: Box<dyn Iterator<Item = usize>> = match variant {
                Variant::Plus => Box::new((i + 1..n).take_while(|&j| times[j] <= times[i] + 1.0)),
                Variant::Minus => Box::new((0..i).rev().take_while(|&j| times[j] >= times[i] - 1.0)),
            };
            let ui = trace.snapshots[i].values();
            js.map(|j| {
                ui.iter()
                    .zip(trace.snapshots[j].values())
                    .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b))
            })
            .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let t_end = trace.horizon();
    let mut cells = Vec::new();
    for &eta in etas {
        for &theta in thetas {
            let slack = (theta - 1.0) * c0 + theta * eta + eps;
            let margin_curve: Vec<(f64, f64)> = times
                .iter()
                .zip(&drop)
                .filter(|(_, d)| d.is_finite())
                .map(|(t, d)| (*t, d - slack))
                .collect();
            let last_bad = margin_curve.iter().rposition(|(_, m)| *m > 0.0);
            let start = last_bad.map_or(0, |k| k + 1);
            let t_eps = match last_bad {
                None => Some(times[0]),
                Some(_) => margin_curve.get(start).map(|(t, _)| *t),
            };
            let margin_after = margin_curve[start..]
                .iter()
                .map(|(_, m)| *m)
                .reduce(f64::max);
            let outcome = match t_eps {
                Some(t) if t_end - t >= (t_end / 4.0).max(1.0) => Outcome::Pass,
                _ => Outcome::Fail,
            };
            cells.push(MonotonicityCell {
                eta,
                theta,
                variant,
                slack,
                t_eps,
                margin_after,
                margin_curve,
                outcome,
            });
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitProfile {
    #[serde(skip)]
    pub u_infty: GridFunction,
    /// `(t, |u(t) - u_infty|)`.
    pub curve: Vec<(f64, f64)>,
    /// Largest increase between consecutive points of `curve`.
    pub max_rise: f64,
    pub nonincreasing: bool,
    pub tail_increment: f64,
}

pub const LIMIT_TOL: f64 = 1e-6;

/// The final snapshot as `u_infty`, once the increment over the last `tail_window` time units
/// is at most `1e-6`.
pub fn extract_u_infty(trace: &EvolutionTrace, tail_window: f64) -> Result<LimitProfile, AsymptoticsError> {
    let tail = trace
        .tail_increment(tail_window)
        .ok_or_else(|| AsymptoticsError::Config(format!("trace shorter than the tail window {tail_window}")))?;
    if tail > LIMIT_TOL {
        return Err(AsymptoticsError::NotConverged {
            increment: tail,
            curve: trace.times[1..].iter().copied().zip(trace.increments.iter().copied()).collect(),
        });
    }
    let u_infty = trace.last().clone();
    let curve: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.snapshots)
        .map(|(t, s)| Ok((*t, s.sup_distance(&u_infty)?)))
        .collect::<Result<_, GridError>>()?;
    let max_rise = curve
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    Ok(LimitProfile {
        u_infty,
        curve,
        max_rise,
        nonincreasing: max_rise <= 1e-10,
        tail_increment: tail,
    })
}

/// Sup norm of the scheme's spatial operator at `u`.
pub fn stationary_residual(u: &GridFunction, h: &Hamiltonian, scheme: &Scheme) -> Result<f64, AsymptoticsError> {
    let nodes = h.on_grid(u.grid())?;
    Ok(scheme.residual(u, &nodes)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairContraction {
    pub initial_distance: f64,
    pub max_distance: f64,
    /// `max_t |u(t) - v(t)| - |u0 - v0|`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub outcome: Outcome,
    pub pairs: Vec<PairContraction>,
}

/// Evolves every pair with one shared scheme and checks
/// `|u(t) - v(t)| <= |u0 - v0| + 1e-10` at every snapshot.
pub fn contraction_check(
    h: &Hamiltonian,
    pairs: &[(GridFunction, GridFunction)],
    config: &SolverConfig,
) -> Result<ContractionReport, AsymptoticsError> {
    let all: Vec<&GridFunction> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    if all.is_empty() {
        return Ok(ContractionReport {
            outcome: Outcome::Pass,
            pairs: Vec::new(),
        });
    }
    let scheme = resolve_scheme(h, config, &all)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (u0, v0) in pairs {
        let u = evolve_with(u0, h, config, &scheme)?;
        let v = evolve_with(v0, h, config, &scheme)?;
        let d0 = u0.sup_distance(v0)?;
        let mut dmax: f64 = 0.0;
        for (a, b) in u.snapshots.iter().zip(&v.snapshots) {
            dmax = dmax.max(a.sup_distance(b)?);
        }
        out.push(PairContraction {
            initial_distance: d0,
            max_distance: dmax,
            excess: dmax - d0,
        });
    }
    let ok = out.iter().all(|p| p.excess <= 1e-10);
    Ok(ContractionReport {
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        pairs: out,
    })
}

/// Diagnostics of one `(eta, theta, variant)` combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WDiagnostics {
    pub eta: f64,
    pub theta: f64,
    pub variant: Variant,
    pub window: f64,
    pub truncated_times: usize,
    pub quantization_bound: f64,
    pub bounds: BoundsReport,
    pub decay: DecayReport,
    pub monotonicity: MonotonicityCell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WParams {
    pub etas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub variants: Vec<Variant>,
    pub monotonicity_eps: f64,
    pub decay_tol: f64,
}

impl Default for WParams {
    fn default() -> Self {
        Self {
            etas: vec![0.1],
            thetas: vec![1.2],
            variants: vec![Variant::Plus, Variant::Minus],
            monotonicity_eps: 1e-3,
            decay_tol: DEFAULT_DECAY_TOL,
        }
    }
}

pub fn w_diagnostics(
    trace: &EvolutionTrace,
    v0: &GridFunction,
    c0: f64,
    params: &WParams,
) -> Result<Vec<WDiagnostics>, AsymptoticsError> {
    let mut out = Vec::new();
    for &variant in &params.variants {
        let mono = near_monotonicity_check(trace, c0, &params.etas, &params.thetas, params.monotonicity_eps, variant);
        let mut mono = mono.into_iter();
        for &eta in &params.etas {
            for &theta in &params.thetas {
                let cfg = WConfig::new(eta, theta, variant);
                let w = compute_w(trace, v0, c0, &cfg)?;
                out.push(WDiagnostics {
                    eta,
                    theta,
                    variant,
                    window: cfg.window_length(c0),
                    truncated_times: w.truncated.iter().filter(|&&b| b).count(),
                    quantization_bound: w.quantization_bound,
                    bounds: w_bounds_check(&w, c0, theta),
                    decay: w_positive_part_decay(&w, params.decay_tol),
                    monotonicity: mono.next().expect("one cell per (eta, theta)"),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid {
        TorusGrid::new(&[16]).unwrap()
    }

    fn v0() -> GridFunction {
        GridFunction::from_fn(&grid(), |x| (2.0 * PI * x[0]).cos()).unwrap()
    }

    fn trace_of(times: &[f64], f: impl Fn(f64) -> GridFunction) -> EvolutionTrace {
        EvolutionTrace::from_snapshots(times.to_vec(), times.iter().map(|&t| f(t)).collect()).unwrap()
    }

    fn brute(trace: &EvolutionTrace, v0: &GridFunction, cfg: &WConfig) -> Vec<Vec<f64>> {
        let t = &trace.times;
        (0..t.len())
            .map(|i| {
                (0..v0.len())
                    .map(|k| {
                        let a = |j: usize| trace.snapshots[j].values()[k] - v0.values()[k];
                        let js: Vec<usize> = match cfg.variant {
                            Variant::Plus => (i..t.len()).collect(),
                            Variant::Minus => (0..=i).collect(),
                        };
                        js.into_iter()
                            .map(|j| match cfg.variant {
                                Variant::Plus => a(i) - cfg.theta * (a(j) + cfg.eta * (t[j] - t[i])),
                                Variant::Minus => a(i) - cfg.theta * (a(j) - cfg.eta * (t[j] - t[i])),
                            })
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn stationary_trace_gives_zero() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let tr = trace_of(&times, |_| v0());
        for variant in [Variant::Plus, Variant::Minus] {
            let w = compute_w(&tr, &v0(), 1.0, &WConfig::new(0.1, 1.2, variant)).unwrap();
            assert!(w.values.iter().all(|f| f.sup_norm() == 0.0));
            let b = w_bounds_check(&w, 1.0, 1.2);
            assert_eq!(b.outcome, Outcome::Pass);
        }
        let cells = near_monotonicity_check(&tr, 1.0, &[0.1], &[1.2], 0.0, Variant::Plus);
        assert_eq!(cells[0].t_eps, Some(0.0));
        assert_eq!(cells[0].outcome, Outcome::Pass);
        assert!((cells[0].margin_after.unwrap() + 0.2 + 0.12).abs() < 1e-12);
    }

    #[test]
    fn single_snapshot() {
        let u = v0().shifted(0.5).unwrap();
        let tr = trace_of(&[3.0], |_| u.clone());
        let w = compute_w(&tr, &v0(), 1.0, &WConfig::new(0.1, 1.5, Variant::Plus)).unwrap();
        for v in w.values[0].values() {
            assert!((v - (1.0 - 1.5) * 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_brute_force() {
        let times: Vec<f64> = (0..80).map(|k| k as f64 * 0.05).collect();
        let tr = trace_of(&times, |t| {
            GridFunction::from_fn(&grid(), |x| (2.0 * PI * x[0]).cos() + (-t).exp() * (1.0 + (6.0 * x[0]).sin()))
                .unwrap()
        });
        for variant in [Variant::Plus, Variant::Minus] {
            let cfg = WConfig {
                window: Some(100.0),
                ..WConfig::new(0.1, 1.2, variant)
            };
            let w = compute_w(&tr, &v0(), 2.0, &cfg).unwrap();
            let b = brute(&tr, &v0(), &cfg);
            for (f, row) in w.values.iter().zip(&b) {
                for (a, e) in f.values().iter().zip(row) {
                    assert!((a - e).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn normalization_is_enforced() {
        let tr = trace_of(&[0.0, 1.0], |t| v0().shifted(-t).unwrap());
        assert!(matches!(
            compute_w(&tr, &v0(), 5.0, &WConfig::new(0.1, 1.2, Variant::Plus)),
            Err(AsymptoticsError::Normalization { .. })
        ));
    }

    #[test]
    fn truncation_flags() {
        let times: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let tr = trace_of(&times, |_| v0());
        let w = compute_w(&tr, &v0(), 1.0, &WConfig::new(0.5, 2.0, Variant::Plus)).unwrap();
        // window 1 * 3 / 1 = 3: the last three times see past the end
        let flagged: Vec<usize> = (0..11).filter(|&i| w.truncated[i]).collect();
        assert_eq!(flagged, vec![8, 9, 10]);
        let mut certified = tr.clone();
        certified.final_residual = Some(0.0);
        let w = compute_w(&certified, &v0(), 1.0, &WConfig::new(0.5, 2.0, Variant::Plus)).unwrap();
        assert!(w.truncated.iter().all(|&b| !b));
        let w = compute_w(&tr, &v0(), 1.0, &WConfig::new(0.5, 2.0, Variant::Minus)).unwrap();
        assert!(w.truncated.iter().all(|&b| !b));
    }

    #[test]
    fn oscillating_trace_fails_decay_and_monotonicity() {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let tr = trace_of(&times, |t| v0().shifted(1.0 + (PI * t).sin()).unwrap());
        let mut tr = tr;
        tr.final_residual = Some(0.0);
        let w = compute_w(&tr, &v0(), 2.0, &WConfig::new(0.1, 1.2, Variant::Plus)).unwrap();
        let d = w_positive_part_decay(&w, DEFAULT_DECAY_TOL);
        assert_eq!(d.outcome, Outcome::Fail, "{:?}", d.tail_mean);
        let cells = near_monotonicity_check(&tr, 2.0, &[0.1], &[1.2], 1e-3, Variant::Plus);
        assert_eq!(cells[0].outcome, Outcome::Fail);
        let cells = near_monotonicity_check(&tr, 2.0, &[0.1], &[1.2], 1e-3, Variant::Minus);
        assert_eq!(cells[0].outcome, Outcome::Fail);
    }

    #[test]
    fn decay_inconclusive_without_valid_times() {
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let tr = trace_of(&times, |_| v0());
        let w = compute_w(&tr, &v0(), 1.0, &WConfig::new(0.1, 1.2, Variant::Plus)).unwrap();
        assert_eq!(w_positive_part_decay(&w, 1e-2).outcome, Outcome::Inconclusive);
    }

    #[test]
    fn zero_w_decays() {
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let tr = trace_of(&times, |_| v0());
        let w = compute_w(&tr, &v0(), 1.0, &WConfig::new(0.1, 1.2, Variant::Minus)).unwrap();
        let d = w_positive_part_decay(&w, 1e-2);
        assert_eq!(d.outcome, Outcome::Pass);
        assert!(d.curve.iter().all(|(_, m)| *m == 0.0));
    }

    #[test]
    fn limit_extraction() {
        let times: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let tr = trace_of(&times, |t| v0().shifted((-10.0 * t).exp()).unwrap());
        let lp = extract_u_infty(&tr, 1.0).unwrap();
        assert!(lp.nonincreasing);
        assert_eq!(lp.curve.last().unwrap().1, 0.0);
        let slow = trace_of(&times, |t| v0().shifted(-t).unwrap());
        assert!(matches!(extract_u_infty(&slow, 1.0), Err(AsymptoticsError::NotConverged { .. })));
    }
}
