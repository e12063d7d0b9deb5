use crate::config::{Expectation, ScenarioConfig};
use crate::output::{cell, Artifacts};
use crate::reproduce::{self, PaperHamiltonians};
use crate::CliError;
use hjlab::asymptotics::{extract_u_infty, stationary_residual, w_diagnostics, Outcome, Variant, WDiagnostics};
use hjlab::conditions::{check_condition, ConditionError, ConditionKind, ConditionReport, ConditionSpec, Verdict};
use hjlab::ergodic::{
    eigenvalue_discount, eigenvalue_longtime, normalize, stationary_solution, EigenvalueEstimate, ErgodicError,
};
use hjlab::hamiltonian::{coercivity_radius, default_x_samples};
use hjlab::solver::{self, SolverConfig, SolverError, Stride};
use hjlab::{GridFunction, Hamiltonian, HamiltonianError, TorusGrid};
use serde::Serialize;

fn stage(stage: &'static str) -> impl Fn(String) -> CliError {
    move |message| CliError::Stage { stage, message }
}

fn solver_error(name: &'static str, e: SolverError) -> CliError {
    match e {
        SolverError::Config(m) => CliError::Config(m),
        other => stage(name)(other.to_string()),
    }
}

fn ergodic_error(name: &'static str, e: ErgodicError) -> CliError {
    match e {
        ErgodicError::Config(m) => CliError::Config(m),
        ErgodicError::Solver(s) => solver_error(name, s),
        other => stage(name)(other.to_string()),
    }
}

fn condition_error(e: ConditionError) -> CliError {
    match e {
        ConditionError::Spec(m) => CliError::Config(m),
        ConditionError::UnknownKind(k) => CliError::Config(format!("unknown condition `{k}`")),
        ConditionError::Hamiltonian(h @ HamiltonianError::NotCoercive { .. }) => stage("coercivity")(h.to_string()),
        other => stage("check")(other.to_string()),
    }
}

fn potential(h: &Hamiltonian, n: usize) -> Result<GridFunction, CliError> {
    let grid = TorusGrid::uniform(h.dim(), n).map_err(|e| CliError::Config(e.to_string()))?;
    let values = (0..grid.len())
        .map(|i| match h.potential_at(&grid.coords(i)) {
            Ok(Some(v)) => Ok(v),
            Ok(None) => Err(CliError::Config(format!("A9 needs a potential; {} has none", h.name()))),
            Err(e) => Err(CliError::Config(e.to_string())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    GridFunction::new(grid, values).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Serialize)]
struct ExpectationResult {
    kind: ConditionKind,
    expected: Verdict,
    actual: Verdict,
    matched: bool,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    hamiltonian: &'a str,
    reports: &'a [ConditionReport],
    expectations: Vec<ExpectationResult>,
    verdict: Outcome,
}

fn file_tag(kind: ConditionKind) -> String {
    kind.as_str().replace('+', "plus").replace('-', "minus").to_ascii_lowercase()
}

pub fn check(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let h = cfg.build_hamiltonian()?;
    let expectations: Vec<Expectation> = cfg.expectations()?;
    let mut reports = Vec::new();
    for kind in cfg.kinds()? {
        let mut spec = ConditionSpec::with_constants(kind, h.dim(), cfg.check.eta0, cfg.check.theta0);
        if matches!(kind, ConditionKind::A9Plus | ConditionKind::A9Minus) {
            let f = potential(&h, spec.sampling.x_per_axis)?;
            spec = spec.with_potential(f);
        }
        spec.validate(h.dim()).map_err(condition_error)?;
        let report = check_condition(&h, &spec).map_err(condition_error)?;
        println!("{} {}: {}", h.name(), kind, report.verdict);
        if kind.has_psi_table() {
            out.csv(
                &format!("psi_{}.csv", file_tag(kind)),
                &["eta", "theta", "psi"],
                report
                    .psi_table
                    .iter()
                    .map(|c| [c.eta.to_string(), c.theta.to_string(), cell(c.psi)]),
            )?;
        }
        if !report.nu_table.is_empty() {
            out.csv(
                &format!("nu_{}.csv", file_tag(kind)),
                &["eta", "nu"],
                report.nu_table.iter().map(|c| [c.eta.to_string(), cell(c.nu)]),
            )?;
        }
        reports.push(report);
    }
    let results: Vec<ExpectationResult> = expectations
        .iter()
        .map(|e| {
            let actual = reports.iter().find(|r| r.kind == e.kind).expect("expected kinds are checked").verdict;
            ExpectationResult {
                kind: e.kind,
                expected: e.verdict,
                actual,
                matched: actual == e.verdict,
            }
        })
        .collect();
    for r in results.iter().filter(|r| !r.matched) {
        println!("mismatch {}: expected {}, got {}", r.kind, r.expected, r.actual);
    }
    let ok = results.iter().all(|r| r.matched);
    out.json(
        "check.json",
        &CheckReport {
            hamiltonian: h.name(),
            reports: &reports,
            expectations: results,
            verdict: if ok { Outcome::Pass } else { Outcome::Fail },
        },
    )?;
    Ok(ok)
}

#[derive(Serialize)]
struct EvolveManifest<'a> {
    hamiltonian: &'a str,
    config: &'a SolverConfig,
    times: &'a [f64],
    files: Vec<String>,
    lipschitz: &'a [f64],
    increments: &'a [f64],
    scheme: &'a Option<hjlab::solver::Scheme>,
    final_residual: Option<f64>,
}

pub fn evolve(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let h = cfg.build_hamiltonian()?;
    let grid = cfg.build_grid()?;
    let mut solver = cfg.build_solver(&grid)?;
    if cfg.solver.snapshot_spacing.is_none() {
        let spacing = solver.horizon / 20.0;
        solver = solver.with_stride(Stride::MaxSpacing(spacing));
    }
    let u0 = cfg.build_initial(&grid)?;
    let trace = solver::evolve(&u0, &h, &solver).map_err(|e| solver_error("evolve", e))?;
    let mut files = Vec::new();
    for (k, snap) in trace.snapshots.iter().enumerate() {
        let name = format!("snapshots/u_{k:05}.csv");
        out.grid_function(&name, snap)?;
        files.push(name);
    }
    out.curve("lipschitz.csv", "lipschitz", &trace.times.iter().copied().zip(trace.lipschitz.iter().copied()).collect::<Vec<_>>())?;
    out.json(
        "evolve.json",
        &EvolveManifest {
            hamiltonian: h.name(),
            config: &solver,
            times: &trace.times,
            files,
            lipschitz: &trace.lipschitz,
            increments: &trace.increments,
            scheme: &trace.scheme,
            final_residual: trace.final_residual,
        },
    )?;
    println!("{}: evolved to t = {} ({} snapshots)", h.name(), trace.horizon(), trace.len());
    Ok(true)
}

#[derive(Serialize)]
struct EigenvalueReport<'a> {
    hamiltonian: &'a str,
    estimate: &'a EigenvalueEstimate,
    gap: Option<f64>,
    tolerance: f64,
    v0_written: bool,
    v0_note: Option<String>,
    verdict: Outcome,
}

fn longtime(cfg: &ScenarioConfig, h: &Hamiltonian, u0: &GridFunction, solver: &SolverConfig) -> Result<EigenvalueEstimate, CliError> {
    let t = cfg.eigenvalue.horizon.unwrap_or(cfg.solver.horizon);
    eigenvalue_longtime(h, u0, solver, t).map_err(|e| ergodic_error("eigenvalue", e))
}

pub fn eigenvalue(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let h = cfg.build_hamiltonian()?;
    let grid = cfg.build_grid()?;
    let solver = cfg.build_solver(&grid)?;
    let u0 = cfg.build_initial(&grid)?;
    let mut est = longtime(cfg, &h, &u0, &solver)?;
    if cfg.eigenvalue.discount {
        let d = eigenvalue_discount(&h, &cfg.eigenvalue.ladder, &solver).map_err(|e| ergodic_error("discount", e))?;
        est = est.merge(d);
    }
    let gap = est.gap();
    let ok = gap.map_or(true, |g| g <= cfg.eigenvalue.tolerance);
    let c = est.c_longtime.expect("long-time estimate present");
    let (v0_written, v0_note) = match stationary_solution(&normalize(&h, c), &u0, &solver.with_stride(Stride::MaxSpacing(0.5))) {
        Ok(st) => {
            out.grid_function("v0.csv", &st.v0)?;
            (true, None)
        }
        Err(e) => (false, Some(e.to_string())),
    };
    println!(
        "{}: c_longtime = {}, c_discount = {}",
        h.name(),
        c,
        est.c_discount.map_or("-".into(), |v| v.to_string())
    );
    out.json(
        "eigenvalue.json",
        &EigenvalueReport {
            hamiltonian: h.name(),
            estimate: &est,
            gap,
            tolerance: cfg.eigenvalue.tolerance,
            v0_written,
            v0_note,
            verdict: if ok { Outcome::Pass } else { Outcome::Fail },
        },
    )?;
    Ok(ok)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub hamiltonian: String,
    pub coercivity_radius: f64,
    pub c_longtime: f64,
    pub c0: f64,
    pub shift: f64,
    pub snapshot_spacing: f64,
    pub stationary_residual: f64,
    pub residual_tol: f64,
    pub curve_nonincreasing: bool,
    pub curve_max_rise: f64,
    pub tail_increment: f64,
    pub w: Vec<WDiagnostics>,
    pub verdict: Outcome,
}

fn variant_tag(v: Variant) -> &'static str {
    match v {
        Variant::Plus => "plus",
        Variant::Minus => "minus",
    }
}

/// Coercivity, eigenvalue, normalization, stationary solution, w diagnostics and the limit.
/// Artifacts of completed stages stay on disk when a later stage fails.
pub fn asymptotics(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let h = cfg.build_hamiltonian()?;
    let grid = cfg.build_grid()?;
    let u0 = cfg.build_initial(&grid)?;
    let params = cfg.w_params()?;

    let xs = default_x_samples(&h, 16);
    let level = xs
        .iter()
        .map(|x| h.eval(x, &vec![0.0; h.dim()]).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| stage("coercivity")(e.to_string()))?
        .into_iter()
        .fold(0.0, f64::max)
        + 1.0;
    let radius = coercivity_radius(&h, level, &xs, 33).map_err(|e| stage("coercivity")(e.to_string()))?;

    let eta_max = params.etas.iter().copied().fold(0.0, f64::max);
    let spacing = cfg.solver.snapshot_spacing.unwrap_or(f64::INFINITY).min(1e-3 / eta_max);
    let solver = cfg.build_solver(&grid)?.with_stride(Stride::MaxSpacing(spacing));
    let est = longtime(cfg, &h, &u0, &solver)?;
    out.json("eigenvalue.json", &est)?;
    let c = est.c_longtime.expect("long-time estimate present");

    let hn = normalize(&h, c);
    let st = stationary_solution(&hn, &u0, &solver).map_err(|e| ergodic_error("stationary", e))?;
    out.grid_function("v0.csv", &st.v0)?;

    let diags = w_diagnostics(&st.trace, &st.v0, st.c0, &params).map_err(|e| stage("w")(e.to_string()))?;
    for d in &diags {
        let tag = format!("{}_eta{}_theta{}", variant_tag(d.variant), d.eta, d.theta);
        out.curve(&format!("w_decay_{tag}.csv"), "max_positive_w", &d.decay.curve)?;
        out.curve(&format!("monotonicity_{tag}.csv"), "margin", &d.monotonicity.margin_curve)?;
    }

    let limit = extract_u_infty(&st.trace, cfg.w.tail_window).map_err(|e| stage("limit")(e.to_string()))?;
    out.grid_function("u_infty.csv", &limit.u_infty)?;
    out.curve("convergence.csv", "distance_to_limit", &limit.curve)?;
    let scheme = st.trace.scheme.as_ref().expect("evolved traces carry their scheme");
    let residual = stationary_residual(&limit.u_infty, &hn, scheme).map_err(|e| stage("residual")(e.to_string()))?;

    let w_ok = diags.iter().all(|d| {
        d.bounds.outcome == Outcome::Pass && d.decay.outcome != Outcome::Fail && d.monotonicity.outcome != Outcome::Fail
    });
    let ok = w_ok && limit.nonincreasing && residual <= cfg.w.residual_tol;
    let report = AsymptoticsReport {
        hamiltonian: h.name().to_string(),
        coercivity_radius: radius,
        c_longtime: c,
        c0: st.c0,
        shift: st.shift,
        snapshot_spacing: spacing,
        stationary_residual: residual,
        residual_tol: cfg.w.residual_tol,
        curve_nonincreasing: limit.nonincreasing,
        curve_max_rise: limit.max_rise,
        tail_increment: limit.tail_increment,
        w: diags,
        verdict: if ok { Outcome::Pass } else { Outcome::Fail },
    };
    out.json("asymptotics.json", &report)?;
    println!(
        "{}: c = {c}, C0 = {}, residual = {residual:e}, verdict {}",
        h.name(),
        st.c0,
        if ok { "pass" } else { "fail" }
    );
    Ok(ok)
}

pub fn reproduce_paper(hs: &PaperHamiltonians, out: &mut Artifacts) -> Result<bool, CliError> {
    let bundle = reproduce::compute(hs)?;
    reproduce::write(&bundle, out)?;
    for f in &bundle.failures {
        println!("FAIL {f}");
    }
    if bundle.failures.is_empty() {
        println!("all identities hold; bundle in {}", out.dir().display());
    }
    Ok(bundle.failures.is_empty())
}
