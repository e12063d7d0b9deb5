//! The identity bundle: exact values of the catalog Hamiltonians at their dyadic
//! counterexample points, the FIG1 linear-growth witness and a `psi_NR` table.

use crate::output::Artifacts;
use crate::CliError;
use hjlab::conditions::{psi_nr, Witness};
use hjlab::{GridFunction, Hamiltonian, TorusGrid};
use serde::Serialize;
use std::f64::consts::PI;

pub const IDENTITY_TOL: f64 = 1e-12;
pub const PSI_NR_TOL: f64 = 1e-3;
pub const PSI_NR_N: usize = 4096;
pub const FIG2_THETAS: [f64; 3] = [1.1, 1.5, 1.9];
pub const PSI_NR_ETAS: [f64; 3] = [0.05, 0.1, 0.15];
pub const PSI_NR_THETAS: [f64; 3] = [1.1, 1.5, 1.9];

/// The Hamiltonians the bundle is computed from; tests swap in altered ones.
#[derive(Debug, Clone)]
pub struct PaperHamiltonians {
    pub fig1: Hamiltonian,
    pub fig2: Hamiltonian,
    pub fig3: Hamiltonian,
}

impl Default for PaperHamiltonians {
    fn default() -> Self {
        Self {
            fig1: Hamiltonian::fig1(1),
            fig2: Hamiltonian::fig2(),
            fig3: Hamiltonian::fig3(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Row {
    pub j: u32,
    pub theta: f64,
    pub q: f64,
    /// `H(theta q) - theta H(q)`
    pub lhs: f64,
    /// `(theta - 1)^2 / 2^(j+1)`
    pub rhs: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Row {
    pub k: u32,
    pub q: f64,
    pub value: f64,
    /// `-(k+1) / 2^(k+1)`
    pub expected: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiNrRow {
    pub eta: f64,
    pub theta: f64,
    pub psi: f64,
    /// `(theta - 1) eta`, attained where `f = eta`.
    pub oracle: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Counterexample {
    pub witness: Witness,
    pub reproduces: bool,
    pub expected_lhs: f64,
    pub expected_rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bundle {
    pub fig2: Vec<Fig2Row>,
    pub fig3: Vec<Fig3Row>,
    pub fig1: Fig1Counterexample,
    pub psi_nr: Vec<PsiNrRow>,
    /// One line per row that misses its tolerance.
    pub failures: Vec<String>,
}

fn eval1(h: &Hamiltonian, p: f64) -> Result<f64, CliError> {
    h.eval(&[0.0], &[p]).map_err(|e| CliError::Stage {
        stage: "reproduce",
        message: format!("{}: {e}", h.name()),
    })
}

pub fn compute(hs: &PaperHamiltonians) -> Result<Bundle, CliError> {
    let mut failures = Vec::new();
    let mut fig2 = Vec::new();
    for j in 1..=6u32 {
        let q = 0.5f64.powi(j as i32 + 1);
        for theta in FIG2_THETAS {
            let lhs = eval1(&hs.fig2, theta * q)? - theta * eval1(&hs.fig2, q)?;
            let rhs = (theta - 1.0).powi(2) / 2f64.powi(j as i32 + 1);
            let error = (lhs - rhs).abs();
            if !(error <= IDENTITY_TOL) {
                failures.push(format!("fig2 identity row j={j} theta={theta}: error {error:e}"));
            }
            fig2.push(Fig2Row { j, theta, q, lhs, rhs, error });
        }
    }
    let mut fig3 = Vec::new();
    for k in 1..=8u32 {
        let q = 0.5f64.powi(k as i32);
        let value = eval1(&hs.fig3, q)?;
        let expected = -((k + 1) as f64) / 2f64.powi(k as i32 + 1);
        let error = (value - expected).abs();
        if !(error <= IDENTITY_TOL) {
            failures.push(format!("fig3 value row k={k}: error {error:e}"));
        }
        fig3.push(Fig3Row { k, q, value, expected, error });
    }
    let witness = Witness::linear_plus(&hs.fig1, &[0.0], &[0.0], &[1.0], 1.5, 0.0).map_err(|e| CliError::Stage {
        stage: "reproduce",
        message: format!("fig1 witness: {e}"),
    })?;
    let reproduces = witness.reproduces(&hs.fig1).unwrap_or(false);
    if !(reproduces && (witness.lhs - 1.0).abs() <= IDENTITY_TOL && (witness.rhs - 1.5).abs() <= IDENTITY_TOL) {
        failures.push(format!(
            "fig1 counterexample row p=0 q=1 theta=1.5: lhs {} rhs {}",
            witness.lhs, witness.rhs
        ));
    }
    let fig1 = Fig1Counterexample {
        witness,
        reproduces,
        expected_lhs: 1.0,
        expected_rhs: 1.5,
    };
    let grid = TorusGrid::new(&[PSI_NR_N]).map_err(|e| CliError::Config(e.to_string()))?;
    let f = GridFunction::from_fn(&grid, |x| 1.0 - (2.0 * PI * x[0]).cos()).map_err(|e| CliError::Config(e.to_string()))?;
    let mut psi_rows = Vec::new();
    for eta in PSI_NR_ETAS {
        for theta in PSI_NR_THETAS {
            let psi = psi_nr(&f, eta, theta).map_err(|e| CliError::Config(e.to_string()))?;
            let oracle = (theta - 1.0) * eta;
            let error = (psi - oracle).abs();
            if !(error <= PSI_NR_TOL) {
                failures.push(format!("psi_nr row eta={eta} theta={theta}: error {error:e}"));
            }
            psi_rows.push(PsiNrRow { eta, theta, psi, oracle, error });
        }
    }
    Ok(Bundle {
        fig2,
        fig3,
        fig1,
        psi_nr: psi_rows,
        failures,
    })
}

fn pass(ok: bool) -> String {
    if ok { "pass" } else { "fail" }.to_string()
}

/// Writes the four artifact files.
pub fn write(bundle: &Bundle, out: &mut Artifacts) -> Result<(), CliError> {
    out.csv(
        "fig2_identity.csv",
        &["j", "theta", "q", "lhs", "rhs", "error", "status"],
        bundle.fig2.iter().map(|r| {
            [
                r.j.to_string(),
                r.theta.to_string(),
                r.q.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.error.to_string(),
                pass(r.error <= IDENTITY_TOL),
            ]
        }),
    )?;
    out.csv(
        "fig3_values.csv",
        &["k", "q", "value", "expected", "error", "status"],
        bundle.fig3.iter().map(|r| {
            [
                r.k.to_string(),
                r.q.to_string(),
                r.value.to_string(),
                r.expected.to_string(),
                r.error.to_string(),
                pass(r.error <= IDENTITY_TOL),
            ]
        }),
    )?;
    out.json("fig1_counterexample.json", &bundle.fig1)?;
    out.csv(
        "psi_nr.csv",
        &["eta", "theta", "psi", "oracle", "error", "status"],
        bundle.psi_nr.iter().map(|r| {
            [
                r.eta.to_string(),
                r.theta.to_string(),
                r.psi.to_string(),
                r.oracle.to_string(),
                r.error.to_string(),
                pass(r.error <= PSI_NR_TOL),
            ]
        }),
    )?;
    Ok(())
}
