//! Sampled verification and refutation of convexity-type structural conditions on `H`.
//!
//! Every check is an inner approximation: the admissible set of the condition is replaced by a
//! finite lattice of the ball `B_R` (plus dyadic probe points near the origin), so a verdict of
//! `satisfied-on-samples` is evidence, never a proof. Refutations carry witnesses that can be
//! re-evaluated independently.

use crate::grid::{GridError, GridFunction};
use crate::hamiltonian::{coercivity_radius, default_x_samples, Hamiltonian, HamiltonianError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid condition spec: {0}")]
    Spec(String),
    #[error("unknown condition kind '{0}'")]
    UnknownKind(String),
    #[error("potential must be nonnegative, got {value} at node {index}")]
    NegativePotential { index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionKind {
    #[serde(rename = "A6+")]
    A6Plus,
    #[serde(rename = "A6-")]
    A6Minus,
    #[serde(rename = "A7+")]
    A7Plus,
    #[serde(rename = "A7-")]
    A7Minus,
    #[serde(rename = "A8+")]
    A8Plus,
    #[serde(rename = "A8-")]
    A8Minus,
    #[serde(rename = "A9+")]
    A9Plus,
    #[serde(rename = "A9-")]
    A9Minus,
    #[serde(rename = "A+")]
    APlus,
    #[serde(rename = "A-")]
    AMinus,
    #[serde(rename = "NR")]
    Nr,
    #[serde(rename = "SUBLEVEL-CONVEX")]
    SublevelConvex,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 12] = [
        Self::A6Plus,
        Self::A6Minus,
        Self::A7Plus,
        Self::A7Minus,
        Self::A8Plus,
        Self::A8Minus,
        Self::A9Plus,
        Self::A9Minus,
        Self::APlus,
        Self::AMinus,
        Self::Nr,
        Self::SublevelConvex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::A6Plus => "A6+",
            Self::A6Minus => "A6-",
            Self::A7Plus => "A7+",
            Self::A7Minus => "A7-",
            Self::A8Plus => "A8+",
            Self::A8Minus => "A8-",
            Self::A9Plus => "A9+",
            Self::A9Minus => "A9-",
            Self::APlus => "A+",
            Self::AMinus => "A-",
            Self::Nr => "NR",
            Self::SublevelConvex => "SUBLEVEL-CONVEX",
        }
    }

    /// Kinds with a `psi` table over `(eta, theta)`.
    pub fn has_psi_table(self) -> bool {
        matches!(
            self,
            Self::A6Plus
                | Self::A6Minus
                | Self::A7Plus
                | Self::A7Minus
                | Self::A8Plus
                | Self::A8Minus
                | Self::A9Plus
                | Self::A9Minus
        )
    }

    fn is_minus(self) -> bool {
        matches!(self, Self::A6Minus | Self::A7Minus | Self::A8Minus | Self::A9Minus | Self::AMinus)
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionKind {
    type Err = ConditionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == upper)
            .ok_or_else(|| ConditionError::UnknownKind(s.to_string()))
    }
}

/// Lattice and x-sampling budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionSampling {
    /// x-nodes per axis on the torus (ignored when `H` does not depend on `x`).
    pub x_per_axis: usize,
    /// The p/q lattice is `{k R / m : |k| <= m}` per axis, clipped to the ball.
    pub lattice_half: usize,
    /// Add the points `+-2^-k`, `k = 0..=24`, on each axis.
    pub dyadic_probes: bool,
}

impl ConditionSampling {
    pub fn for_dim(dim: usize) -> Self {
        match dim {
            1 => Self {
                x_per_axis: 64,
                lattice_half: 100,
                dyadic_probes: true,
            },
            _ => Self {
                x_per_axis: 8,
                lattice_half: 10,
                dyadic_probes: true,
            },
        }
    }

    /// Same sampling with twice the lattice density; contains the original lattice.
    pub fn refined(self) -> Self {
        Self {
            lattice_half: 2 * self.lattice_half,
            ..self
        }
    }
}

/// `theta` values used for the linear-margin condition `A+`.
pub const A_PLUS_THETAS: [f64; 12] = [
    1.0001, 1.001, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0,
];
/// `lambda` values used for `A-`.
pub const A_MINUS_LAMBDAS: [f64; 10] = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 0.9999];
const SUBLEVEL_LAMBDAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const DYADIC_DEPTH: i32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSpec {
    pub kind: ConditionKind,
    pub eta0: f64,
    pub theta0: f64,
    pub eta_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    /// Base equality tolerance; scaled by `max(1, range of H)` at each x.
    pub eps_eq: f64,
    pub eps_con: f64,
    /// `A+-` are refuted when the sampled `nu` does not exceed this floor.
    pub nu_floor: f64,
    /// Subsolution margin for `A9+-`.
    #[serde(skip)]
    pub potential: Option<GridFunction>,
    pub sampling: ConditionSampling,
}

impl ConditionSpec {
    pub fn new(kind: ConditionKind, dim: usize) -> Self {
        Self::with_constants(kind, dim, 0.2, 1.5)
    }

    pub fn with_constants(kind: ConditionKind, dim: usize, eta0: f64, theta0: f64) -> Self {
        Self {
            kind,
            eta0,
            theta0,
            eta_grid: default_eta_grid(eta0),
            theta_grid: default_theta_grid(theta0),
            eps_eq: 1e-3,
            eps_con: 1e-9,
            nu_floor: 1e-4,
            potential: None,
            sampling: ConditionSampling::for_dim(dim),
        }
    }

    pub fn with_potential(mut self, f: GridFunction) -> Self {
        self.potential = Some(f);
        self
    }

    pub fn validate(&self, dim: usize) -> Result<(), ConditionError> {
        let bad = |m: String| Err(ConditionError::Spec(m));
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad(format!("eta0 = {} must be positive", self.eta0));
        }
        if !(self.theta0 > 1.0 && self.theta0.is_finite()) {
            return bad(format!("theta0 = {} must exceed 1", self.theta0));
        }
        if self.eta_grid.is_empty() || self.theta_grid.is_empty() {
            return bad("eta and theta grids must be nonempty".into());
        }
        if let Some(e) = self.eta_grid.iter().find(|&&e| !(e > 0.0 && e < self.eta0)) {
            return bad(format!("eta {e} outside (0, {})", self.eta0));
        }
        if let Some(t) = self.theta_grid.iter().find(|&&t| !(t > 1.0 && t < self.theta0)) {
            return bad(format!("theta {t} outside (1, {})", self.theta0));
        }
        if !(self.eps_eq > 0.0 && self.eps_con > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.nu_floor >= 0.0) {
            return bad(format!("nu floor {} must be nonnegative", self.nu_floor));
        }
        if self.sampling.lattice_half == 0 || self.sampling.x_per_axis == 0 {
            return bad("sampling budget must be positive".into());
        }
        if matches!(self.kind, ConditionKind::A9Plus | ConditionKind::A9Minus) {
            match &self.potential {
                None => return bad(format!("{} needs a potential f", self.kind)),
                Some(f) if f.grid().dim() != dim => {
                    return bad("potential grid dimension differs from H".into())
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn default_eta_grid(eta0: f64) -> Vec<f64> {
    vec![eta0 / 8.0, eta0 / 4.0, eta0 / 2.0]
}

pub fn default_theta_grid(theta0: f64) -> Vec<f64> {
    let d = theta0 - 1.0;
    vec![1.0 + d / 8.0, 1.0 + d / 2.0, theta0 - d / 8.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "satisfied-on-samples")]
    SatisfiedOnSamples,
    #[serde(rename = "refuted-with-witness")]
    RefutedWithWitness,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SatisfiedOnSamples => "satisfied-on-samples",
            Self::RefutedWithWitness => "refuted-with-witness",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// What a witness is a counterexample to; fixes how `lhs` and `rhs` are recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessTest {
    /// `H(x, p + theta (q - p)) > theta eta` required.
    SegmentPlus,
    /// `H(x, p + theta (q - p)) > -theta eta` required.
    SegmentMinus,
    /// `H(x, p + theta (q - p)) > theta H(x, q) + nu (theta - 1)` required.
    LinearPlus,
    /// `H(x, (1 - lambda) p + lambda q) < lambda H(x, q) - nu lambda (1 - lambda)` required.
    LinearMinus,
    /// `H` at the midpoint must not exceed the chord.
    MidpointConvexity,
    /// The point `(1 - lambda) p + lambda q` must stay in `{H <= 0}`.
    Sublevel,
    /// `H(x, p) >= H(x, 0)` required.
    MinimumAtZero,
}

impl WitnessTest {
    /// `true` when the condition asks for `lhs > rhs`; otherwise it asks for `lhs < rhs`.
    pub fn wants_greater(self) -> bool {
        matches!(
            self,
            Self::SegmentPlus | Self::SegmentMinus | Self::LinearPlus | Self::MinimumAtZero
        )
    }
}

/// A sampled point at which a condition fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub test: WitnessTest,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub theta: Option<f64>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub nu: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

fn segment_point(p: &[f64], q: &[f64], t: f64) -> Vec<f64> {
    p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect()
}

impl Witness {
    fn build(
        h: &Hamiltonian,
        test: WitnessTest,
        x: &[f64],
        p: &[f64],
        q: &[f64],
        t: f64,
        eta: Option<f64>,
        nu: Option<f64>,
    ) -> Result<Self, HamiltonianError> {
        let uses_theta = matches!(
            test,
            WitnessTest::SegmentPlus | WitnessTest::SegmentMinus | WitnessTest::LinearPlus
        );
        let mut w = Witness {
            test,
            x: x.to_vec(),
            p: p.to_vec(),
            q: q.to_vec(),
            theta: uses_theta.then_some(t),
            lambda: (!uses_theta && test != WitnessTest::MinimumAtZero).then_some(t),
            eta,
            nu,
            lhs: 0.0,
            rhs: 0.0,
        };
        let (lhs, rhs) = w.recompute(h)?;
        w.lhs = lhs;
        w.rhs = rhs;
        Ok(w)
    }

    /// The `A+` witness at the given point with margin `nu`.
    pub fn linear_plus(
        h: &Hamiltonian,
        x: &[f64],
        p: &[f64],
        q: &[f64],
        theta: f64,
        nu: f64,
    ) -> Result<Self, HamiltonianError> {
        Self::build(h, WitnessTest::LinearPlus, x, p, q, theta, None, Some(nu))
    }

    /// The `A-` witness at the given point with margin `nu`.
    pub fn linear_minus(
        h: &Hamiltonian,
        x: &[f64],
        p: &[f64],
        q: &[f64],
        lambda: f64,
        nu: f64,
    ) -> Result<Self, HamiltonianError> {
        Self::build(h, WitnessTest::LinearMinus, x, p, q, lambda, None, Some(nu))
    }

    /// Recomputes `(lhs, rhs)` from the stored inputs.
    pub fn recompute(&self, h: &Hamiltonian) -> Result<(f64, f64), HamiltonianError> {
        let x = &self.x;
        let t = self.theta.or(self.lambda).unwrap_or(0.0);
        let eta = self.eta.unwrap_or(0.0);
        let nu = self.nu.unwrap_or(0.0);
        let at = |t: f64| h.eval(x, &segment_point(&self.p, &self.q, t));
        Ok(match self.test {
            WitnessTest::SegmentPlus => (at(t)?, t * eta),
            WitnessTest::SegmentMinus => (at(t)?, -t * eta),
            WitnessTest::LinearPlus => (at(t)?, t * h.eval(x, &self.q)? + nu * (t - 1.0)),
            WitnessTest::LinearMinus => (at(t)?, t * h.eval(x, &self.q)? - nu * t * (1.0 - t)),
            WitnessTest::MidpointConvexity => {
                (at(t)?, (1.0 - t) * h.eval(x, &self.p)? + t * h.eval(x, &self.q)?)
            }
            WitnessTest::Sublevel => (at(t)?, 0.0),
            WitnessTest::MinimumAtZero => (h.eval(x, &self.p)?, h.eval(x, &vec![0.0; x.len()])?),
        })
    }

    /// Whether the stored values violate the required strict inequality.
    pub fn is_violation(&self) -> bool {
        if self.test.wants_greater() {
            self.lhs <= self.rhs
        } else {
            self.lhs >= self.rhs
        }
    }

    /// Re-evaluates the witness: values agree with the stored ones to `1e-12` and still
    /// violate the condition.
    pub fn reproduces(&self, h: &Hamiltonian) -> Result<bool, HamiltonianError> {
        let (lhs, rhs) = self.recompute(h)?;
        Ok((lhs - self.lhs).abs() <= 1e-12 && (rhs - self.rhs).abs() <= 1e-12 && self.is_violation())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiCell {
    pub eta: f64,
    pub theta: f64,
    /// `None` when no admissible triple was sampled (serialized as `null`).
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuCell {
    pub eta: f64,
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionParams {
    pub eta0: f64,
    pub theta0: f64,
    pub eps_eq: f64,
    pub eps_con: f64,
    pub nu_floor: f64,
    pub sampling: ConditionSampling,
    pub r_search: f64,
    pub x_samples: usize,
    pub lattice_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    pub hamiltonian: String,
    pub params: ConditionParams,
    pub verdict: Verdict,
    pub psi_table: Vec<PsiCell>,
    pub nu_table: Vec<NuCell>,
    /// Smallest finite table entry.
    pub margin: Option<f64>,
    pub witnesses: Vec<Witness>,
    pub sub_checks: Vec<SubCheck>,
}

impl ConditionReport {
    pub fn psi(&self, eta: f64, theta: f64) -> Option<f64> {
        self.psi_table
            .iter()
            .find(|c| c.eta == eta && c.theta == theta)
            .and_then(|c| c.psi)
    }

    pub fn nu(&self, eta: f64) -> Option<f64> {
        self.nu_table.iter().find(|c| c.eta == eta).and_then(|c| c.nu)
    }

    /// Flat `eta,theta,psi` table; vacuous cells are written as `vacuous`.
    pub fn psi_csv(&self) -> String {
        let mut out = String::from("eta,theta,psi\n");
        for c in &self.psi_table {
            let v = c.psi.map_or_else(|| "vacuous".to_string(), |v| v.to_string());
            out.push_str(&format!("{},{},{}\n", c.eta, c.theta, v));
        }
        out
    }
}

/// The finite sample set shared by all checks on one Hamiltonian.
struct Sampler {
    xs: Vec<Vec<f64>>,
    /// Potential value at each x-sample (A9 only).
    f_at_x: Option<Vec<f64>>,
    points: Vec<Vec<f64>>,
    r_search: f64,
}

fn lattice(dim: usize, radius: f64, half: usize, probes: bool) -> Vec<Vec<f64>> {
    let m = half as i64;
    let axis: Vec<f64> = (-m..=m).map(|k| (k as f64 * radius) / m as f64).collect();
    let mut pts: Vec<Vec<f64>> = match dim {
        1 => axis.iter().map(|&a| vec![a]).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .filter(|p| p[0] * p[0] + p[1] * p[1] <= radius * radius * (1.0 + 1e-12))
            .collect(),
    };
    if probes {
        for k in 0..=DYADIC_DEPTH {
            let v = 2f64.powi(-k);
            if v > radius {
                continue;
            }
            for s in [v, -v] {
                for axis in 0..dim {
                    let mut p = vec![0.0; dim];
                    p[axis] = s;
                    pts.push(p);
                }
            }
        }
    }
    pts.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pts.dedup();
    pts
}

impl Sampler {
    fn new(h: &Hamiltonian, spec: &ConditionSpec) -> Result<Self, ConditionError> {
        let (xs, f_at_x) = match (&spec.potential, spec.kind) {
            (Some(f), ConditionKind::A9Plus | ConditionKind::A9Minus) => {
                let xs: Vec<Vec<f64>> = (0..f.len()).map(|i| f.grid().coords(i)).collect();
                (xs, Some(f.values().to_vec()))
            }
            _ => (default_x_samples(h, spec.sampling.x_per_axis), None),
        };
        let r_search = coercivity_radius(h, spec.eta0 * spec.theta0 + 1.0, &xs, 33)?;
        let points = lattice(h.dim(), r_search, spec.sampling.lattice_half, spec.sampling.dyadic_probes);
        Ok(Self {
            xs,
            f_at_x,
            points,
            r_search,
        })
    }

    fn values_at(&self, h: &Hamiltonian, x: &[f64]) -> Result<Vec<f64>, HamiltonianError> {
        self.points.iter().map(|p| h.eval(x, p)).collect()
    }

    fn params(&self, spec: &ConditionSpec) -> ConditionParams {
        ConditionParams {
            eta0: spec.eta0,
            theta0: spec.theta0,
            eps_eq: spec.eps_eq,
            eps_con: spec.eps_con,
            nu_floor: spec.nu_floor,
            sampling: spec.sampling,
            r_search: self.r_search,
            x_samples: self.xs.len(),
            lattice_points: self.points.len(),
        }
    }
}

fn range(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Running minimum with the location that attains it, first occurrence wins.
#[derive(Debug, Clone)]
struct Best {
    value: f64,
    at: Option<(usize, usize, usize, usize)>,
}

impl Best {
    fn empty() -> Self {
        Self {
            value: f64::INFINITY,
            at: None,
        }
    }

    fn offer(&mut self, value: f64, at: (usize, usize, usize, usize)) {
        if value < self.value || self.at.is_none() {
            self.value = value;
            self.at = Some(at);
        }
    }

    fn merge(&mut self, other: &Best) {
        if let Some(at) = other.at {
            if other.value < self.value || self.at.is_none() {
                self.value = other.value;
                self.at = Some(at);
            }
        }
    }
}

struct Table {
    /// `cells[e][t]`: best over admissible triples; location is `(x, p, q, t)`.
    cells: Vec<Vec<Best>>,
    any_p_admissible: bool,
}

/// Core scan shared by the segment conditions (`A6`-`A9`) and the linear ones (`A+-`).
fn scan(
    h: &Hamiltonian,
    spec: &ConditionSpec,
    sampler: &Sampler,
    ts: &[f64],
) -> Result<Table, ConditionError> {
    let kind = spec.kind;
    let etas = &spec.eta_grid;
    let per_x = |xi: usize| -> Result<Table, ConditionError> {
        let x = &sampler.xs[xi];
        let hv = sampler.values_at(h, x)?;
        let eq = spec.eps_eq * range(&hv).max(1.0);
        let con = spec.eps_con;
        let p_ok = |v: f64| match kind {
            ConditionKind::A8Plus | ConditionKind::A8Minus => v >= -eq && v <= con,
            ConditionKind::A9Plus | ConditionKind::A9Minus => {
                v <= -sampler.f_at_x.as_ref().expect("validated")[xi] + con
            }
            _ => v <= con,
        };
        let q_ok = |v: f64, eta: f64| match kind {
            ConditionKind::A8Plus => v >= eta - con && v <= eta + eq,
            ConditionKind::A8Minus => v >= -eta - con && v <= -eta + eq,
            ConditionKind::AMinus => v <= -eta + con,
            k if k.is_minus() => v >= -eta - con,
            _ => v >= eta - con,
        };
        let ps: Vec<usize> = (0..hv.len()).filter(|&i| p_ok(hv[i])).collect();
        let qs: Vec<(usize, Vec<bool>)> = (0..hv.len())
            .map(|j| (j, etas.iter().map(|&e| q_ok(hv[j], e)).collect::<Vec<_>>()))
            .filter(|(_, m)| m.iter().any(|&b| b))
            .collect();
        let mut cells = vec![vec![Best::empty(); ts.len()]; etas.len()];
        for &i in &ps {
            let p = &sampler.points[i];
            for (j, mask) in &qs {
                let q = &sampler.points[*j];
                for (ti, &t) in ts.iter().enumerate() {
                    let val = h.eval(x, &segment_point(p, q, t))?;
                    for (ei, &eta) in etas.iter().enumerate() {
                        if !mask[ei] {
                            continue;
                        }
                        let objective = match kind {
                            ConditionKind::APlus => (val - t * hv[*j]) / (t - 1.0),
                            ConditionKind::AMinus => (t * hv[*j] - val) / (t * (1.0 - t)),
                            k if k.is_minus() => val + t * eta,
                            _ => val - t * eta,
                        };
                        cells[ei][ti].offer(objective, (xi, i, *j, ti));
                    }
                }
            }
        }
        Ok(Table {
            cells,
            any_p_admissible: !ps.is_empty(),
        })
    };
    let partial: Vec<Table> = if sampler.xs.len() > 1 {
        (0..sampler.xs.len())
            .into_par_iter()
            .map(per_x)
            .collect::<Result<_, _>>()?
    } else {
        vec![per_x(0)?]
    };
    let mut total = Table {
        cells: vec![vec![Best::empty(); ts.len()]; etas.len()],
        any_p_admissible: false,
    };
    for t in &partial {
        total.any_p_admissible |= t.any_p_admissible;
        for (row, prow) in total.cells.iter_mut().zip(&t.cells) {
            for (c, pc) in row.iter_mut().zip(prow) {
                c.merge(pc);
            }
        }
    }
    Ok(total)
}

/// Sampled `psi(eta, theta)` for a segment condition; `None` when no triple is admissible.
pub fn psi_empirical(
    h: &Hamiltonian,
    eta: f64,
    theta: f64,
    spec: &ConditionSpec,
) -> Result<Option<f64>, ConditionError> {
    if !spec.kind.has_psi_table() {
        return Err(ConditionError::Spec(format!("{} has no psi table", spec.kind)));
    }
    let one = ConditionSpec {
        eta_grid: vec![eta],
        theta_grid: vec![theta],
        ..spec.clone()
    };
    let sampler = Sampler::new(h, &one)?;
    let table = scan(h, &one, &sampler, &[theta])?;
    let c = &table.cells[0][0];
    Ok(c.at.map(|_| c.value))
}

/// Sampled `nu(eta)` for `A+` or `A-`; `None` when no triple is admissible.
pub fn nu_empirical(
    h: &Hamiltonian,
    eta: f64,
    spec: &ConditionSpec,
) -> Result<Option<f64>, ConditionError> {
    let ts: &[f64] = match spec.kind {
        ConditionKind::APlus => &A_PLUS_THETAS,
        ConditionKind::AMinus => &A_MINUS_LAMBDAS,
        k => return Err(ConditionError::Spec(format!("{k} has no nu table"))),
    };
    let one = ConditionSpec {
        eta_grid: vec![eta],
        ..spec.clone()
    };
    let sampler = Sampler::new(h, &one)?;
    let table = scan(h, &one, &sampler, ts)?;
    let best = table.cells[0].iter().fold(Best::empty(), |mut acc, c| {
        acc.merge(c);
        acc
    });
    Ok(best.at.map(|_| best.value))
}

/// Runs the full check described by `spec`.
pub fn check_condition(h: &Hamiltonian, spec: &ConditionSpec) -> Result<ConditionReport, ConditionError> {
    spec.validate(h.dim())?;
    let sampler = Sampler::new(h, spec)?;
    let mut report = ConditionReport {
        kind: spec.kind,
        hamiltonian: h.name().to_string(),
        params: sampler.params(spec),
        verdict: Verdict::Inconclusive,
        psi_table: Vec::new(),
        nu_table: Vec::new(),
        margin: None,
        witnesses: Vec::new(),
        sub_checks: Vec::new(),
    };
    match spec.kind {
        k if k.has_psi_table() => segment_report(h, spec, &sampler, &mut report)?,
        ConditionKind::APlus | ConditionKind::AMinus => linear_report(h, spec, &sampler, &mut report)?,
        ConditionKind::Nr => nr_report(h, spec, &sampler, &mut report)?,
        _ => {
            let mut refuted = false;
            let mut inconclusive = false;
            for x in &sampler.xs {
                let s = check_sublevel_convexity(h, x, Strictness::NonStrict, spec)?;
                match s.verdict {
                    Verdict::RefutedWithWitness => {
                        refuted = true;
                        report.witnesses.extend(s.witness);
                        break;
                    }
                    Verdict::Inconclusive => inconclusive = true,
                    Verdict::SatisfiedOnSamples => {}
                }
            }
            report.verdict = if refuted {
                Verdict::RefutedWithWitness
            } else if inconclusive {
                Verdict::Inconclusive
            } else {
                Verdict::SatisfiedOnSamples
            };
        }
    }
    Ok(report)
}

fn witness_from(
    h: &Hamiltonian,
    sampler: &Sampler,
    test: WitnessTest,
    at: (usize, usize, usize, usize),
    t: f64,
    eta: Option<f64>,
    nu: Option<f64>,
) -> Result<Witness, HamiltonianError> {
    let (xi, i, j, _) = at;
    Witness::build(
        h,
        test,
        &sampler.xs[xi],
        &sampler.points[i],
        &sampler.points[j],
        t,
        eta,
        nu,
    )
}

fn segment_report(
    h: &Hamiltonian,
    spec: &ConditionSpec,
    sampler: &Sampler,
    report: &mut ConditionReport,
) -> Result<(), ConditionError> {
    let table = scan(h, spec, sampler, &spec.theta_grid)?;
    let test = if spec.kind.is_minus() {
        WitnessTest::SegmentMinus
    } else {
        WitnessTest::SegmentPlus
    };
    let mut refuted = false;
    for (ei, &eta) in spec.eta_grid.iter().enumerate() {
        for (ti, &theta) in spec.theta_grid.iter().enumerate() {
            let c = &table.cells[ei][ti];
            let psi = c.at.map(|_| c.value);
            if let (Some(v), Some(at)) = (psi, c.at) {
                report.margin = Some(report.margin.map_or(v, |m: f64| m.min(v)));
                if v <= 0.0 {
                    refuted = true;
                    report
                        .witnesses
                        .push(witness_from(h, sampler, test, at, theta, Some(eta), None)?);
                }
            }
            report.psi_table.push(PsiCell { eta, theta, psi });
        }
    }
    report.verdict = if refuted {
        Verdict::RefutedWithWitness
    } else if !table.any_p_admissible {
        Verdict::Inconclusive
    } else {
        Verdict::SatisfiedOnSamples
    };
    Ok(())
}

fn linear_report(
    h: &Hamiltonian,
    spec: &ConditionSpec,
    sampler: &Sampler,
    report: &mut ConditionReport,
) -> Result<(), ConditionError> {
    let (ts, test): (&[f64], _) = if spec.kind == ConditionKind::APlus {
        (&A_PLUS_THETAS, WitnessTest::LinearPlus)
    } else {
        (&A_MINUS_LAMBDAS, WitnessTest::LinearMinus)
    };
    let table = scan(h, spec, sampler, ts)?;
    let mut refuted = false;
    for (ei, &eta) in spec.eta_grid.iter().enumerate() {
        let best = table.cells[ei].iter().fold(Best::empty(), |mut acc, c| {
            acc.merge(c);
            acc
        });
        let nu = best.at.map(|_| best.value);
        if let (Some(v), Some(at)) = (nu, best.at) {
            report.margin = Some(report.margin.map_or(v, |m: f64| m.min(v)));
            if v <= spec.nu_floor {
                refuted = true;
                // a negative ratio already violates the inequality with nu = 0
                let used = if v < 0.0 { 0.0 } else { spec.nu_floor };
                report
                    .witnesses
                    .push(witness_from(h, sampler, test, at, ts[at.3], Some(eta), Some(used))?);
            }
        }
        report.nu_table.push(NuCell { eta, nu });
    }
    report.verdict = if refuted {
        Verdict::RefutedWithWitness
    } else if !table.any_p_admissible {
        Verdict::Inconclusive
    } else {
        Verdict::SatisfiedOnSamples
    };
    Ok(())
}

fn nr_report(
    h: &Hamiltonian,
    spec: &ConditionSpec,
    sampler: &Sampler,
    report: &mut ConditionReport,
) -> Result<(), ConditionError> {
    let dim = h.dim();
    let zero = vec![0.0; dim];
    let mut convex_worst = 0.0f64;
    let mut convex_witness = None;
    let mut min_worst = 0.0f64;
    let mut min_witness = None;
    let mut max_h0 = f64::NEG_INFINITY;
    for x in &sampler.xs {
        let hv = sampler.values_at(h, x)?;
        let h0 = h.eval(x, &zero)?;
        max_h0 = max_h0.max(h0);
        for i in 0..hv.len() {
            let deficit = h0 - hv[i];
            if deficit > spec.eps_con && deficit > min_worst {
                min_worst = deficit;
                min_witness = Some((x.clone(), i));
            }
            for j in i + 1..hv.len() {
                let mid = segment_point(&sampler.points[i], &sampler.points[j], 0.5);
                let chord = 0.5 * (hv[i] + hv[j]);
                let excess = h.eval(x, &mid)? - chord;
                if excess > spec.eps_con * chord.abs().max(1.0) && excess > convex_worst {
                    convex_worst = excess;
                    convex_witness = Some((x.clone(), i, j));
                }
            }
        }
    }
    let eq = spec.eps_eq;
    let coercive = coercivity_radius(h, spec.eta0 * spec.theta0 + 1.0, &sampler.xs, 33);
    report.sub_checks = vec![
        SubCheck {
            name: "NR1".into(),
            passed: convex_witness.is_none(),
            value: convex_worst,
            detail: "largest midpoint excess over the chord".into(),
        },
        SubCheck {
            name: "NR2".into(),
            passed: min_witness.is_none(),
            value: min_worst,
            detail: "largest H(x,0) - H(x,p) over the lattice".into(),
        },
        SubCheck {
            name: "NR3".into(),
            passed: max_h0.abs() <= eq,
            value: max_h0,
            detail: "max over x of H(x,0)".into(),
        },
        SubCheck {
            name: "NR4".into(),
            passed: coercive.is_ok(),
            value: coercive.as_ref().copied().unwrap_or(f64::INFINITY),
            detail: "coercivity radius at level eta0*theta0+1".into(),
        },
    ];
    if let Some((x, i, j)) = convex_witness {
        report.witnesses.push(Witness::build(
            h,
            WitnessTest::MidpointConvexity,
            &x,
            &sampler.points[i],
            &sampler.points[j],
            0.5,
            None,
            None,
        )?);
    }
    if let Some((x, i)) = min_witness {
        report.witnesses.push(Witness::build(
            h,
            WitnessTest::MinimumAtZero,
            &x,
            &sampler.points[i],
            &zero,
            0.0,
            None,
            None,
        )?);
    }
    report.verdict = if report.sub_checks.iter().all(|c| c.passed) {
        Verdict::SatisfiedOnSamples
    } else {
        Verdict::RefutedWithWitness
    };
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strictness {
    /// `{H <= 0}`
    NonStrict,
    /// `{H < 0}`
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelReport {
    pub verdict: Verdict,
    pub members: usize,
    pub witness: Option<Witness>,
}

/// Tests whether `{p : H(x,p) <= 0}` (or `< 0`) is convex on the sampled lattice.
pub fn check_sublevel_convexity(
    h: &Hamiltonian,
    x: &[f64],
    strictness: Strictness,
    spec: &ConditionSpec,
) -> Result<SublevelReport, ConditionError> {
    let radius = coercivity_radius(h, 1.0, &[x.to_vec()], 33)?;
    let points = lattice(h.dim(), radius, spec.sampling.lattice_half, spec.sampling.dyadic_probes);
    let con = spec.eps_con;
    let mut members = Vec::new();
    for p in &points {
        let v = h.eval(x, p)?;
        let inside = match strictness {
            Strictness::NonStrict => v <= con,
            Strictness::Strict => v < -con,
        };
        if inside {
            members.push(p);
        }
    }
    if members.len() < 2 {
        return Ok(SublevelReport {
            verdict: if members.len() == 1 {
                Verdict::SatisfiedOnSamples
            } else {
                Verdict::Inconclusive
            },
            members: members.len(),
            witness: None,
        });
    }
    let mut worst: Option<(f64, usize, usize, f64)> = None;
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            for &l in &SUBLEVEL_LAMBDAS {
                let v = h.eval(x, &segment_point(members[a], members[b], l))?;
                if v > con && worst.map_or(true, |w| v > w.0) {
                    worst = Some((v, a, b, l));
                }
            }
        }
    }
    let witness = worst
        .map(|(_, a, b, l)| {
            Witness::build(h, WitnessTest::Sublevel, x, members[a], members[b], l, None, None)
        })
        .transpose()?;
    Ok(SublevelReport {
        verdict: if witness.is_some() {
            Verdict::RefutedWithWitness
        } else {
            Verdict::SatisfiedOnSamples
        },
        members: members.len(),
        witness,
    })
}

/// `min_x max{(theta - 1) f(x), theta eta - f(x)}` over the grid nodes.
pub fn psi_nr(f: &GridFunction, eta: f64, theta: f64) -> Result<f64, ConditionError> {
    if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(ConditionError::NegativePotential { index, value });
    }
    if !(eta > 0.0 && theta > 1.0) {
        return Err(ConditionError::Spec(format!("need eta > 0 and theta > 1, got {eta}, {theta}")));
    }
    Ok(f
        .values()
        .iter()
        .map(|&v| ((theta - 1.0) * v).max(theta * eta - v))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;

    fn spec(kind: ConditionKind) -> ConditionSpec {
        ConditionSpec::new(kind, 1)
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ConditionKind::ALL {
            assert_eq!(k.as_str().parse::<ConditionKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.as_str()));
        }
        assert!("A10".parse::<ConditionKind>().is_err());
    }

    #[test]
    fn quadratic_psi_matches_closed_form() {
        let h = Hamiltonian::quadratic(1);
        let psi = psi_empirical(&h, 0.1, 1.5, &spec(ConditionKind::A6Plus)).unwrap().unwrap();
        // objective 2.25 q^2 - 0.15 over q^2 >= 0.1 - eps, sampled from above
        let lower = 2.25 * (0.1 - 1e-9) - 0.15;
        assert!(psi >= lower - 1e-12, "{psi}");
        assert!(psi <= 0.075 + 0.02, "{psi}");
    }

    #[test]
    fn vacuous_cells() {
        // H = -1 has no q with H >= eta, but it is not coercive, so no search ball exists
        let h = Hamiltonian::user(1, "-1").unwrap();
        assert!(matches!(
            psi_empirical(&h, 0.1, 1.5, &spec(ConditionKind::A6Plus)),
            Err(ConditionError::Hamiltonian(HamiltonianError::NotCoercive { .. }))
        ));
        // H >= 0 has no q with H <= -eta
        let r = check_condition(&Hamiltonian::quadratic(1), &spec(ConditionKind::AMinus)).unwrap();
        assert!(r.nu_table.iter().all(|c| c.nu.is_none()));
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples);
        // no p with H <= 0 at all
        let h = Hamiltonian::user(1, "p1^2+1").unwrap();
        let r = check_condition(&h, &spec(ConditionKind::A6Plus)).unwrap();
        assert!(r.psi_table.iter().all(|c| c.psi.is_none()));
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn fig2_verdicts() {
        let h = Hamiltonian::fig2();
        let r = check_condition(&h, &spec(ConditionKind::A6Plus)).unwrap();
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples, "{:?}", r.psi_table);
        let r = check_condition(&h, &spec(ConditionKind::APlus)).unwrap();
        assert_eq!(r.verdict, Verdict::RefutedWithWitness, "{:?}", r.nu_table);
        assert!(r.witnesses.iter().all(|w| w.reproduces(&h).unwrap()));
    }

    #[test]
    fn fig1_verdicts() {
        let h = Hamiltonian::fig1(1);
        let r = check_condition(&h, &ConditionSpec::with_constants(ConditionKind::A6Plus, 1, 0.2, 1.9)).unwrap();
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples, "{:?}", r.psi_table);
        let r = check_condition(&h, &spec(ConditionKind::APlus)).unwrap();
        assert_eq!(r.verdict, Verdict::RefutedWithWitness);
        for w in &r.witnesses {
            assert!(w.reproduces(&h).unwrap());
        }
        let w = Witness::linear_plus(&h, &[0.0], &[0.0], &[1.0], 1.5, 0.0).unwrap();
        assert_eq!((w.lhs, w.rhs), (1.0, 1.5));
        assert!(w.is_violation());
    }

    #[test]
    fn fig3_verdicts() {
        let h = Hamiltonian::fig3();
        let r = check_condition(&h, &spec(ConditionKind::A6Minus)).unwrap();
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples, "{:?}", r.psi_table);
        let r = check_condition(&h, &spec(ConditionKind::AMinus)).unwrap();
        assert_eq!(r.verdict, Verdict::RefutedWithWitness, "{:?}", r.nu_table);
        assert!(r.witnesses.iter().all(|w| w.reproduces(&h).unwrap()));
    }

    #[test]
    fn fig3_linear_minus_ratio_shrinks_with_k() {
        let h = Hamiltonian::fig3();
        let ratio = |k: i32, l: f64| {
            let q = 2f64.powi(-k);
            let w = Witness::linear_minus(&h, &[0.0], &[0.0], &[q], l, 0.0).unwrap();
            (w.rhs - w.lhs) / (l * (1.0 - l))
        };
        let r2 = ratio(2, 0.75);
        let r6 = ratio(6, 0.75);
        assert!(r6 < r2 && r6 > 0.0);
        assert!((r6 - 0.25 / (64.0 * 0.75)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_all_satisfied() {
        let h = Hamiltonian::quadratic(1);
        for k in [ConditionKind::A6Plus, ConditionKind::A6Minus, ConditionKind::APlus, ConditionKind::AMinus] {
            let r = check_condition(&h, &spec(k)).unwrap();
            assert_eq!(r.verdict, Verdict::SatisfiedOnSamples, "{k}");
        }
    }

    #[test]
    fn quadratic_two_dimensional() {
        let h = Hamiltonian::quadratic(2);
        let r = check_condition(&h, &ConditionSpec::new(ConditionKind::A6Plus, 2)).unwrap();
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples);
    }

    #[test]
    fn refinement_never_increases_psi() {
        for h in [Hamiltonian::fig1(1), Hamiltonian::fig3(), Hamiltonian::quadratic(1)] {
            for kind in [ConditionKind::A6Plus, ConditionKind::A6Minus] {
                let mut s = spec(kind);
                s.sampling.lattice_half = 40;
                let coarse = check_condition(&h, &s).unwrap();
                s.sampling = s.sampling.refined();
                let fine = check_condition(&h, &s).unwrap();
                for (c, f) in coarse.psi_table.iter().zip(&fine.psi_table) {
                    let cv = c.psi.unwrap_or(f64::INFINITY);
                    let fv = f.psi.unwrap_or(f64::INFINITY);
                    assert!(fv <= cv, "{} {kind}: {fv} > {cv}", h.name());
                }
            }
        }
    }

    #[test]
    fn a9_with_zero_potential_is_a6() {
        let h = Hamiltonian::fig3();
        let f = GridFunction::constant(&TorusGrid::new(&[1]).unwrap(), 0.0);
        let a9 = check_condition(&h, &spec(ConditionKind::A9Minus).with_potential(f)).unwrap();
        let a6 = check_condition(&h, &spec(ConditionKind::A6Minus)).unwrap();
        assert_eq!(a9.psi_table, a6.psi_table);
        assert_eq!(a9.verdict, a6.verdict);
    }

    #[test]
    fn a9_needs_potential() {
        let h = Hamiltonian::quadratic(1);
        assert!(matches!(
            check_condition(&h, &spec(ConditionKind::A9Plus)),
            Err(ConditionError::Spec(_))
        ));
    }

    #[test]
    fn nr_checks() {
        let h = Hamiltonian::nrquad(1, "1-cos(2*3.141592653589793*x1)").unwrap();
        let mut s = spec(ConditionKind::Nr);
        s.sampling.x_per_axis = 16;
        let r = check_condition(&h, &s).unwrap();
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples, "{:?}", r.sub_checks);
        assert_eq!(r.sub_checks.len(), 4);
        let r = check_condition(&Hamiltonian::fig3(), &spec(ConditionKind::Nr)).unwrap();
        assert_eq!(r.verdict, Verdict::RefutedWithWitness);
        assert!(r.witnesses.iter().all(|w| w.reproduces(&Hamiltonian::fig3()).unwrap()));
    }

    #[test]
    fn sublevel_examples() {
        let s = spec(ConditionKind::SublevelConvex);
        let h = Hamiltonian::user(1, "p1^2-1").unwrap();
        let r = check_sublevel_convexity(&h, &[0.0], Strictness::NonStrict, &s).unwrap();
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples);
        let r = check_sublevel_convexity(&Hamiltonian::fig1(1), &[0.0], Strictness::NonStrict, &s).unwrap();
        assert_eq!(r.verdict, Verdict::SatisfiedOnSamples);
        let h = Hamiltonian::user(1, "min((p1-1)^2,(p1+1)^2)-0.25").unwrap();
        let r = check_sublevel_convexity(&h, &[0.0], Strictness::NonStrict, &s).unwrap();
        assert_eq!(r.verdict, Verdict::RefutedWithWitness);
        let w = r.witness.unwrap();
        let mid = segment_point(&w.p, &w.q, w.lambda.unwrap());
        assert!(mid[0].abs() < 1e-12, "{mid:?}");
        assert!((w.lhs - 0.75).abs() < 1e-12);
        assert!(w.reproduces(&h).unwrap());
    }

    #[test]
    fn psi_nr_examples() {
        let g = TorusGrid::new(&[4096]).unwrap();
        let zero = GridFunction::constant(&g, 0.0);
        assert!((psi_nr(&zero, 0.1, 1.5).unwrap() - 0.15).abs() < 1e-15);
        let one = GridFunction::constant(&g, 1.0);
        assert!((psi_nr(&one, 0.1, 1.5).unwrap() - 0.5).abs() < 1e-15);
        let f = GridFunction::from_fn(&g, |x| 1.0 - (2.0 * std::f64::consts::PI * x[0]).cos()).unwrap();
        assert!((psi_nr(&f, 0.1, 1.5).unwrap() - 0.05).abs() <= 1e-3);
        let neg = GridFunction::constant(&g, -0.1);
        assert!(matches!(psi_nr(&neg, 0.1, 1.5), Err(ConditionError::NegativePotential { .. })));
    }

    #[test]
    fn report_serializes_vacuous_as_null() {
        let h = Hamiltonian::quadratic(1);
        let r = check_condition(&h, &spec(ConditionKind::AMinus)).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["nu_table"][0]["nu"].is_null());
        assert_eq!(json["verdict"], "satisfied-on-samples");
        assert!(r.psi_csv().starts_with("eta,theta,psi\n"));
    }
}
