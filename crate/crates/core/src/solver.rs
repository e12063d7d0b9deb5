//! Explicit Lax-Friedrichs time stepping for `u_t + H(x, Du) = 0` on the torus.
//!
//! The spatial operator is
//!
//! ```text
//! R(u)_i = H(x_i, Dc u_i) - sum_k (alpha_k / 2) (u_{i+e_k} - 2 u_i + u_{i-e_k}) / h_k
//! ```
//!
//! with `Dc` the central gradient. With `alpha_k >= |dH/dp_k|` on the realized gradients and
//! `dt <= cfl * h_k / (dim * alpha_k)` one step `u - dt R(u)` is nondecreasing in every nodal
//! value and commutes with constants, hence order preserving and sup-norm nonexpansive.

use crate::grid::{GridError, GridFunction, TorusGrid};
use crate::hamiltonian::{coercivity_radius, HamiltonianError, Hamiltonian, NodeHamiltonian};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("CFL violation: dt = {dt} exceeds the stable step {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },
    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },
    #[error("discrete gradient {lipschitz} exceeds the bound {bound} used for alpha at t = {time}")]
    GradientBound {
        time: f64,
        lipschitz: f64,
        bound: f64,
    },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlphaMode {
    Auto,
    Manual(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stride {
    /// Keep every n-th step.
    Steps(usize),
    /// Largest stride whose snapshot spacing does not exceed this time.
    MaxSpacing(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: TorusGrid,
    pub cfl: f64,
    pub alpha: AlphaMode,
    pub horizon: f64,
    pub stride: Stride,
    /// Gradient bound `G` for the automatic `alpha`; derived from the data when `None`.
    pub gradient_bound: Option<f64>,
}

impl SolverConfig {
    pub fn new(grid: TorusGrid, horizon: f64) -> Self {
        Self {
            grid,
            cfl: 0.9,
            alpha: AlphaMode::Auto,
            horizon,
            stride: Stride::Steps(1),
            gradient_bound: None,
        }
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    pub fn with_stride(mut self, stride: Stride) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::Config(format!("cfl {} not in (0, 1]", self.cfl)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SolverError::Config(format!("horizon {} must be positive", self.horizon)));
        }
        match self.stride {
            Stride::Steps(0) => return Err(SolverError::Config("stride must be >= 1".into())),
            Stride::MaxSpacing(s) if !(s > 0.0) => {
                return Err(SolverError::Config(format!("snapshot spacing {s} must be positive")))
            }
            _ => {}
        }
        if let AlphaMode::Manual(a) = &self.alpha {
            if a.len() != self.grid.dim() || a.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(SolverError::Config(format!("manual alpha {a:?} invalid for this grid")));
            }
        }
        if let Some(g) = self.gradient_bound {
            if !(g > 0.0) {
                return Err(SolverError::Config(format!("gradient bound {g} must be positive")));
            }
        }
        Ok(())
    }
}

/// Sampling for [`estimate_alpha`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlphaSampling {
    /// Maximum x-nodes per axis taken from the grid.
    pub x_per_axis: usize,
    /// Lattice intervals per axis over `[-G, G]`.
    pub p_per_axis: usize,
}

impl AlphaSampling {
    pub fn for_dim(dim: usize) -> Self {
        match dim {
            1 => Self {
                x_per_axis: 64,
                p_per_axis: 400,
            },
            _ => Self {
                x_per_axis: 16,
                p_per_axis: 40,
            },
        }
    }
}

const ALPHA_DELTA: f64 = 1e-4;
const ALPHA_SAFETY: f64 = 1.1;

/// Per-axis artificial viscosity: the sampled maximum of the symmetric difference quotient
/// `|H(x, p + d e_k) - H(x, p - d e_k)| / 2d` over `|p| <= G`, times 1.1.
pub fn estimate_alpha(
    h: &Hamiltonian,
    gradient_bound: f64,
    grid: &TorusGrid,
    sampling: AlphaSampling,
) -> Result<Vec<f64>, HamiltonianError> {
    let dim = h.dim();
    let xs = x_subsample(h, grid, sampling.x_per_axis);
    let m = sampling.p_per_axis.max(2);
    let axis: Vec<f64> = (0..=m)
        .map(|i| (2.0 * i as f64 * gradient_bound) / m as f64 - gradient_bound)
        .collect();
    let ps: Vec<Vec<f64>> = match dim {
        1 => axis.iter().map(|&a| vec![a]).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .filter(|p| p[0] * p[0] + p[1] * p[1] <= gradient_bound * gradient_bound * (1.0 + 1e-12))
            .collect(),
    };
    let mut alpha = vec![0.0f64; dim];
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    for x in &xs {
        for p in &ps {
            for k in 0..dim {
                plus.copy_from_slice(p);
                minus.copy_from_slice(p);
                plus[k] += ALPHA_DELTA;
                minus[k] -= ALPHA_DELTA;
                let q = (h.eval(x, &plus)? - h.eval(x, &minus)?).abs() / (2.0 * ALPHA_DELTA);
                alpha[k] = alpha[k].max(q);
            }
        }
    }
    Ok(alpha.into_iter().map(|a| a * ALPHA_SAFETY).collect())
}

fn x_subsample(h: &Hamiltonian, grid: &TorusGrid, per_axis: usize) -> Vec<Vec<f64>> {
    if !h.depends_on_x() {
        return vec![vec![0.0; h.dim()]];
    }
    let axes: Vec<Vec<f64>> = grid
        .resolution()
        .iter()
        .map(|&n| {
            let step = n.div_ceil(per_axis.max(1)).max(1);
            (0..n).step_by(step).map(|i| i as f64 / n as f64).collect()
        })
        .collect();
    match axes.len() {
        1 => axes[0].iter().map(|&a| vec![a]).collect(),
        _ => axes[0]
            .iter()
            .flat_map(|&a| axes[1].iter().map(move |&b| vec![a, b]))
            .collect(),
    }
}

/// A fully resolved Lax-Friedrichs scheme: viscosity per axis and a fixed time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub alpha: Vec<f64>,
    pub dt: f64,
    pub cfl: f64,
    /// Gradient bound the viscosity was sized for; the run aborts if it is exceeded.
    pub gradient_bound: Option<f64>,
}

/// Largest step allowed by `dt <= cfl * min_k h_k / (dim * alpha_k)`.
pub fn max_stable_dt(grid: &TorusGrid, alpha: &[f64], cfl: f64) -> f64 {
    let dim = grid.dim() as f64;
    (0..grid.dim())
        .map(|k| {
            if alpha[k] > 0.0 {
                cfl * grid.spacing(k) / (dim * alpha[k])
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

impl Scheme {
    /// Scheme with the largest stable step, capped at `cfl * min_k h_k`.
    pub fn new(grid: &TorusGrid, alpha: Vec<f64>, cfl: f64, gradient_bound: Option<f64>) -> Self {
        let dt = max_stable_dt(grid, &alpha, cfl).min(cfl * grid.min_spacing());
        Self {
            alpha,
            dt,
            cfl,
            gradient_bound,
        }
    }

    /// `R(u)` at every node.
    pub fn operator(&self, u: &GridFunction, h: &NodeHamiltonian) -> Result<Vec<f64>, SolverError> {
        let grid = u.grid();
        let n = grid.len();
        let node = |i: usize| -> Result<f64, SolverError> {
            let mut grad = [0.0; 2];
            let grad = &mut grad[..grid.dim()];
            u.central_gradient_into(i, grad);
            let vals = u.values();
            let mut visc = 0.0;
            for (k, a) in self.alpha.iter().enumerate() {
                let lap = vals[grid.neighbor(i, k, 1)] - 2.0 * vals[i] + vals[grid.neighbor(i, k, -1)];
                visc += 0.5 * a * lap / grid.spacing(k);
            }
            Ok(h.eval(i, grad)? - visc)
        };
        if n >= PARALLEL_NODES {
            (0..n).into_par_iter().map(node).collect()
        } else {
            (0..n).map(node).collect()
        }
    }

    /// `sup_i |R(u)_i|`.
    pub fn residual(&self, u: &GridFunction, h: &NodeHamiltonian) -> Result<f64, SolverError> {
        Ok(self
            .operator(u, h)?
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs())))
    }

    /// One explicit step `u - dt R(u)`.
    pub fn step(
        &self,
        u: &GridFunction,
        h: &NodeHamiltonian,
        dt: f64,
        step_index: usize,
    ) -> Result<GridFunction, SolverError> {
        let max_dt = max_stable_dt(u.grid(), &self.alpha, self.cfl);
        if dt > max_dt * (1.0 + 1e-9) {
            return Err(SolverError::Cfl { dt, max_dt });
        }
        let r = self.operator(u, h)?;
        let values: Vec<f64> = u.values().iter().zip(&r).map(|(v, r)| v - dt * r).collect();
        GridFunction::new(u.grid().clone(), values)
            .map_err(|_| SolverError::NonFinite { step: step_index })
    }
}

const PARALLEL_NODES: usize = 4096;

/// Single Lax-Friedrichs step with explicit viscosity and CFL number.
pub fn lf_step(
    u: &GridFunction,
    h: &Hamiltonian,
    dt: f64,
    alpha: &[f64],
    cfl: f64,
) -> Result<GridFunction, SolverError> {
    let scheme = Scheme {
        alpha: alpha.to_vec(),
        dt,
        cfl,
        gradient_bound: None,
    };
    let nodes = h.on_grid(u.grid())?;
    scheme.step(u, &nodes, dt, 0)
}

/// Default gradient bound for a set of initial data: the larger of `2 L(u0) + 1` and the
/// coercivity radius at level `max |H(x, Dc u0)| + 1`.
pub fn default_gradient_bound(
    h: &Hamiltonian,
    initial: &[&GridFunction],
) -> Result<f64, SolverError> {
    let mut lip: f64 = 0.0;
    let mut level: f64 = 0.0;
    for u0 in initial {
        lip = lip.max(u0.lipschitz_estimate());
        let nodes = h.on_grid(u0.grid())?;
        for i in 0..u0.len() {
            level = level.max(nodes.eval(i, &u0.central_gradient(i))?.abs());
        }
    }
    let grid = initial
        .first()
        .map(|u| u.grid().clone())
        .ok_or_else(|| SolverError::Config("no initial data".into()))?;
    let xs = x_subsample(h, &grid, 64);
    // a non-coercive H gives no radius; the Lipschitz-based bound alone is used then
    let radius = match coercivity_radius(h, level + 1.0, &xs, 33) {
        Ok(r) => r,
        Err(HamiltonianError::NotCoercive { .. }) => 0.0,
        Err(e) => return Err(e.into()),
    };
    Ok((2.0 * lip + 1.0).max(radius))
}

/// Resolves viscosity and time step for a configuration. All trajectories that are to be
/// compared with each other must share one resolved scheme.
pub fn resolve_scheme(
    h: &Hamiltonian,
    config: &SolverConfig,
    initial: &[&GridFunction],
) -> Result<Scheme, SolverError> {
    config.validate()?;
    let (alpha, bound) = match &config.alpha {
        AlphaMode::Manual(a) => (a.clone(), config.gradient_bound),
        AlphaMode::Auto => {
            let g = match config.gradient_bound {
                Some(g) => g,
                None => default_gradient_bound(h, initial)?,
            };
            let a = estimate_alpha(h, g, &config.grid, AlphaSampling::for_dim(config.grid.dim()))?;
            (a, Some(g))
        }
    };
    Ok(Scheme::new(&config.grid, alpha, config.cfl, bound))
}

/// Time-stamped snapshots of a discrete trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    /// `lipschitz_estimate` of each snapshot.
    pub lipschitz: Vec<f64>,
    /// `sup_distance` between consecutive snapshots; one shorter than `times`.
    pub increments: Vec<f64>,
    pub scheme: Option<Scheme>,
    /// `sup |R(u)|` at the final snapshot, when produced by the solver.
    pub final_residual: Option<f64>,
}

impl EvolutionTrace {
    /// Trace assembled from given snapshots, e.g. synthetic test data.
    pub fn from_snapshots(times: Vec<f64>, snapshots: Vec<GridFunction>) -> Result<Self, SolverError> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(SolverError::Config("times and snapshots must be nonempty and equal length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SolverError::Config("times must be strictly increasing".into()));
        }
        for s in &snapshots[1..] {
            snapshots[0].check_same_grid(s)?;
        }
        let lipschitz = snapshots.iter().map(GridFunction::lipschitz_estimate).collect();
        let increments = snapshots
            .windows(2)
            .map(|w| w[0].sup_distance(&w[1]))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            times,
            snapshots,
            lipschitz,
            increments,
            scheme: None,
            final_residual: None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("trace is nonempty")
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("trace is nonempty")
    }

    pub fn grid(&self) -> &TorusGrid {
        self.snapshots[0].grid()
    }

    /// Index of the latest snapshot with time `<= t` (the first one if none).
    pub fn index_at_or_before(&self, t: f64) -> usize {
        match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k => k - 1,
        }
    }

    /// `sup_distance(u(T), u(s))` for the latest snapshot `s <= T - span`; `None` when the trace
    /// is shorter than `span`.
    pub fn tail_increment(&self, span: f64) -> Option<f64> {
        let t_end = self.horizon();
        if self.times[0] > t_end - span {
            return None;
        }
        let j = self.index_at_or_before(t_end - span);
        self.last().sup_distance(&self.snapshots[j]).ok()
    }
}

/// Evolves `u0` to `config.horizon` with the scheme resolved from `u0`.
pub fn evolve(
    u0: &GridFunction,
    h: &Hamiltonian,
    config: &SolverConfig,
) -> Result<EvolutionTrace, SolverError> {
    let scheme = resolve_scheme(h, config, &[u0])?;
    evolve_with(u0, h, config, &scheme)
}

/// Evolves `u0` with a given scheme: fixed step `scheme.dt`, the last step shortened so the
/// final time equals the horizon exactly.
pub fn evolve_with(
    u0: &GridFunction,
    h: &Hamiltonian,
    config: &SolverConfig,
    scheme: &Scheme,
) -> Result<EvolutionTrace, SolverError> {
    config.validate()?;
    if u0.grid() != &config.grid {
        return Err(GridError::Shape {
            left: u0.grid().resolution().to_vec(),
            right: config.grid.resolution().to_vec(),
        }
        .into());
    }
    let nodes = h.on_grid(&config.grid)?;
    let horizon = config.horizon;
    let dt = scheme.dt;
    let mut n_steps = (horizon / dt).ceil().max(1.0) as usize;
    if n_steps > 1 && horizon - (n_steps - 1) as f64 * dt < 1e-9 * dt {
        n_steps -= 1;
    }
    let stride = match config.stride {
        Stride::Steps(s) => s,
        Stride::MaxSpacing(s) => ((s / dt).floor() as usize).max(1),
    };

    let mut times = vec![0.0];
    let mut snapshots = vec![u0.clone()];
    let mut lipschitz = vec![u0.lipschitz_estimate()];
    let mut increments = Vec::new();
    let mut u = u0.clone();
    for step in 1..=n_steps {
        let (t, this_dt) = if step == n_steps {
            (horizon, horizon - (n_steps - 1) as f64 * dt)
        } else {
            (step as f64 * dt, dt)
        };
        u = scheme.step(&u, &nodes, this_dt, step)?;
        if let Some(bound) = scheme.gradient_bound {
            let l = u.lipschitz_estimate();
            if l > bound {
                return Err(SolverError::GradientBound {
                    time: t,
                    lipschitz: l,
                    bound,
                });
            }
        }
        if step % stride == 0 || step == n_steps {
            increments.push(u.sup_distance(snapshots.last().expect("nonempty"))?);
            lipschitz.push(u.lipschitz_estimate());
            times.push(t);
            snapshots.push(u.clone());
        }
    }
    let final_residual = Some(scheme.residual(&u, &nodes)?);
    Ok(EvolutionTrace {
        times,
        snapshots,
        lipschitz,
        increments,
        scheme: Some(scheme.clone()),
        final_residual,
    })
}
