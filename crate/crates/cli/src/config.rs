//! Scenario configuration: a TOML file whose keys can be overridden by flags.

use crate::CliError;
use hjlab::asymptotics::{Variant, WParams};
use hjlab::conditions::{ConditionKind, Verdict};
use hjlab::ergodic::DEFAULT_LADDER;
use hjlab::expr::Expression;
use hjlab::solver::{SolverConfig, Stride};
use hjlab::{GridFunction, Hamiltonian, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: Option<u64>,
    /// Not part of the config hash, so identical scenarios written to different
    /// directories carry identical headers.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub hamiltonian: HamiltonianSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub check: CheckSection,
    pub eigenvalue: EigenvalueSection,
    pub w: WSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: None,
            threads: None,
            hamiltonian: HamiltonianSection::default(),
            grid: GridSection::default(),
            solver: SolverSection::default(),
            check: CheckSection::default(),
            eigenvalue: EigenvalueSection::default(),
            w: WSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamiltonianSection {
    pub kind: String,
    pub dim: usize,
    pub expr: Option<String>,
    pub f_expr: Option<String>,
}

impl Default for HamiltonianSection {
    fn default() -> Self {
        Self {
            kind: "fig1".into(),
            dim: 1,
            expr: None,
            f_expr: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// One entry per axis, or a single entry used for every axis.
    pub n: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: vec![256] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub horizon: f64,
    pub cfl: f64,
    /// Expression in `x1[, x2]`, or `random` (needs a seed).
    pub initial: String,
    /// Largest time between stored snapshots.
    pub snapshot_spacing: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            cfl: 0.9,
            initial: "0".into(),
            snapshot_spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub kinds: Vec<String>,
    /// `KIND:VERDICT` with VERDICT one of `sat`, `refuted`, `inconclusive`.
    pub expect: Vec<String>,
    pub eta0: f64,
    pub theta0: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            kinds: Vec::new(),
            expect: Vec::new(),
            eta0: 0.2,
            theta0: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenvalueSection {
    /// Length of each long-time leg; the solver horizon when absent.
    pub horizon: Option<f64>,
    pub ladder: Vec<f64>,
    pub discount: bool,
    /// Largest accepted `|c_longtime - c_discount|`.
    pub tolerance: f64,
}

impl Default for EigenvalueSection {
    fn default() -> Self {
        Self {
            horizon: None,
            ladder: DEFAULT_LADDER.to_vec(),
            discount: true,
            tolerance: 5e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WSection {
    pub etas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub variants: Vec<Variant>,
    pub monotonicity_eps: f64,
    pub decay_tol: f64,
    pub residual_tol: f64,
    pub tail_window: f64,
}

impl Default for WSection {
    fn default() -> Self {
        let w = WParams::default();
        Self {
            etas: w.etas,
            thetas: w.thetas,
            variants: w.variants,
            monotonicity_eps: w.monotonicity_eps,
            decay_tol: w.decay_tol,
            residual_tol: 5e-2,
            tail_window: 1.0,
        }
    }
}

/// A requested verdict for one condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Expectation {
    pub kind: ConditionKind,
    pub verdict: Verdict,
}

impl FromStr for Expectation {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CliError::Config(format!("expectation `{s}` is not KIND:sat|refuted|inconclusive"));
        let (kind, verdict) = s.rsplit_once(':').ok_or_else(bad)?;
        let kind = kind.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        let verdict = match verdict.trim().to_ascii_lowercase().as_str() {
            "sat" | "satisfied" | "satisfied-on-samples" => Verdict::SatisfiedOnSamples,
            "refuted" | "refuted-with-witness" => Verdict::RefutedWithWitness,
            "inconclusive" => Verdict::Inconclusive,
            _ => return Err(bad()),
        };
        Ok(Self { kind, verdict })
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_hamiltonian(&self) -> Result<Hamiltonian, CliError> {
        let h = &self.hamiltonian;
        Hamiltonian::from_config(&h.kind, h.dim, h.expr.as_deref(), h.f_expr.as_deref())
            .map_err(|e| CliError::Config(format!("hamiltonian: {e}")))
    }

    pub fn build_grid(&self) -> Result<TorusGrid, CliError> {
        let dim = self.hamiltonian.dim;
        let n = match self.grid.n.as_slice() {
            [n] => vec![*n; dim],
            ns => ns.to_vec(),
        };
        if n.len() != dim {
            return Err(CliError::Config(format!("grid.n has {} entries for dimension {dim}", n.len())));
        }
        TorusGrid::new(&n).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn build_solver(&self, grid: &TorusGrid) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(grid.clone(), s.horizon);
        cfg.cfl = s.cfl;
        if let Some(sp) = s.snapshot_spacing {
            cfg = cfg.with_stride(Stride::MaxSpacing(sp));
        }
        cfg.validate().map_err(|e| CliError::Config(format!("solver: {e}")))?;
        Ok(cfg)
    }

    pub fn build_initial(&self, grid: &TorusGrid) -> Result<GridFunction, CliError> {
        let text = self.solver.initial.trim();
        if text == "random" {
            let seed = self
                .seed
                .ok_or_else(|| CliError::Config("solver.initial = \"random\" needs --seed".into()))?;
            return Ok(random_initial(grid, seed));
        }
        let e = Expression::parse(text, grid.dim()).map_err(|e| CliError::Config(format!("solver.initial: {e}")))?;
        if e.uses_p() {
            return Err(CliError::Config("solver.initial must not depend on p".into()));
        }
        let values = (0..grid.len())
            .map(|i| e.evaluate(&grid.coords(i), &[]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("solver.initial: {e}")))?;
        GridFunction::new(grid.clone(), values).map_err(|e| CliError::Config(format!("solver.initial: {e}")))
    }

    pub fn expectations(&self) -> Result<Vec<Expectation>, CliError> {
        self.check.expect.iter().map(|s| s.parse()).collect()
    }

    pub fn kinds(&self) -> Result<Vec<ConditionKind>, CliError> {
        let mut kinds: Vec<ConditionKind> = self
            .check
            .kinds
            .iter()
            .map(|k| k.parse().map_err(|e| CliError::Config(format!("{e}"))))
            .collect::<Result<_, _>>()?;
        for e in self.expectations()? {
            if !kinds.contains(&e.kind) {
                kinds.push(e.kind);
            }
        }
        if kinds.is_empty() {
            kinds = vec![
                ConditionKind::A6Plus,
                ConditionKind::A6Minus,
                ConditionKind::APlus,
                ConditionKind::AMinus,
            ];
        }
        Ok(kinds)
    }

    pub fn w_params(&self) -> Result<WParams, CliError> {
        let w = &self.w;
        if w.etas.is_empty() || w.thetas.is_empty() || w.variants.is_empty() {
            return Err(CliError::Config("w.etas, w.thetas and w.variants must be nonempty".into()));
        }
        if w.etas.iter().any(|e| !(*e > 0.0)) || w.thetas.iter().any(|t| !(*t > 1.0)) {
            return Err(CliError::Config("w needs eta > 0 and theta > 1".into()));
        }
        Ok(WParams {
            etas: w.etas.clone(),
            thetas: w.thetas.clone(),
            variants: w.variants.clone(),
            monotonicity_eps: w.monotonicity_eps,
            decay_tol: w.decay_tol,
        })
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), CliError> {
        self.build_hamiltonian()?;
        let grid = self.build_grid()?;
        self.build_solver(&grid)?;
        self.build_initial(&grid)?;
        self.kinds()?;
        self.w_params()?;
        if let Some(t) = self.eigenvalue.horizon {
            if !(t > 0.0) {
                return Err(CliError::Config(format!("eigenvalue.horizon {t} must be positive")));
            }
        }
        Ok(())
    }
}

/// A few low Fourier modes with seeded amplitudes and phases.
fn random_initial(grid: &TorusGrid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for axis in 0..grid.dim() {
        for k in 1..=3 {
            let k = k as f64;
            modes.push((axis, k, rng.gen_range(-0.5..0.5) / k, rng.gen_range(0.0..2.0 * PI)));
        }
    }
    GridFunction::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(axis, k, a, ph)| a * (2.0 * PI * k * x[*axis] + ph).sin())
            .sum()
    })
    .expect("finite trigonometric sum")
}
