use hjlab::asymptotics::{
    compute_w, contraction_check, extract_u_infty, near_monotonicity_check, stationary_residual, w_bounds_check,
    w_positive_part_decay, Outcome, Variant, WConfig, DEFAULT_DECAY_TOL,
};
use hjlab::ergodic::{eigenvalue_longtime, normalize, stationary_solution, StationarySolution};
use hjlab::solver::{resolve_scheme, SolverConfig, Stride};
use hjlab::{GridFunction, Hamiltonian, TorusGrid};
use std::f64::consts::PI;

const ETA: f64 = 0.1;
const THETA: f64 = 1.2;

fn settle(h: &Hamiltonian, u0: &GridFunction, horizon: f64) -> (Hamiltonian, StationarySolution) {
    let g = u0.grid().clone();
    let cfg = SolverConfig::new(g, horizon).with_stride(Stride::MaxSpacing(1e-3 / ETA));
    let c = eigenvalue_longtime(h, u0, &cfg, horizon).unwrap().c_longtime.unwrap();
    let hn = normalize(h, c);
    let st = stationary_solution(&hn, u0, &cfg).unwrap();
    (hn, st)
}

fn quadratic_run() -> (Hamiltonian, StationarySolution) {
    let g = TorusGrid::new(&[256]).unwrap();
    let u0 = GridFunction::from_fn(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
    settle(&Hamiltonian::quadratic(1), &u0, 20.0)
}

fn brute_force(st: &StationarySolution, cfg: &WConfig) -> Vec<Vec<f64>> {
    let (t, snaps, v0) = (&st.trace.times, &st.trace.snapshots, &st.v0);
    (0..t.len())
        .map(|i| {
            let js: Vec<usize> = match cfg.variant {
                Variant::Plus => (i..t.len()).collect(),
                Variant::Minus => (0..=i).collect(),
            };
            (0..v0.len())
                .map(|k| {
                    let a = |j: usize| snaps[j].values()[k] - v0.values()[k];
                    js.iter()
                        .map(|&j| {
                            let drift = cfg.eta * (t[j] - t[i]);
                            let drift = if cfg.variant == Variant::Plus { drift } else { -drift };
                            a(i) - cfg.theta * (a(j) + drift)
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        })
        .collect()
}

#[test]
fn quadratic_w_suite() {
    let (_, st) = quadratic_run();
    assert!(st.trace.final_residual.unwrap() <= ETA);
    for variant in [Variant::Plus, Variant::Minus] {
        let cfg = WConfig::new(ETA, THETA, variant);
        let w = compute_w(&st.trace, &st.v0, st.c0, &cfg).unwrap();
        assert!(w.truncated.iter().all(|&b| !b));
        let full = brute_force(&st, &cfg);
        for (f, row) in w.values.iter().zip(&full) {
            for (a, e) in f.values().iter().zip(row) {
                assert!((a - e).abs() <= 1e-12, "{variant:?}: {a} vs {e}");
            }
        }
        assert_eq!(w_bounds_check(&w, st.c0, THETA).outcome, Outcome::Pass);
        let decay = w_positive_part_decay(&w, DEFAULT_DECAY_TOL);
        assert_eq!(decay.outcome, Outcome::Pass, "{:?}", decay.tail_mean);
        let cells = near_monotonicity_check(&st.trace, st.c0, &[0.05, ETA], &[1.1, THETA], 1e-3, variant);
        assert!(cells.iter().all(|c| c.outcome == Outcome::Pass));
        // the slack shrinks as (eta, theta) approach (0, 1)
        assert!(cells[0].slack < cells[3].slack);
    }
}

#[test]
fn minus_window_restriction_is_exact() {
    let (_, st) = quadratic_run();
    let restricted = compute_w(&st.trace, &st.v0, st.c0, &WConfig::new(ETA, THETA, Variant::Minus)).unwrap();
    let full = WConfig {
        window: Some(1e9),
        ..WConfig::new(ETA, THETA, Variant::Minus)
    };
    let full = compute_w(&st.trace, &st.v0, st.c0, &full).unwrap();
    assert_eq!(restricted.values, full.values);
}

fn nr_profile(x: f64) -> f64 {
    let f = x - (2.0 * PI * x).sin() / (2.0 * PI);
    f.min(1.0 - f)
}

#[test]
fn eikonal_limit_profile_and_residual() {
    let g = TorusGrid::new(&[256]).unwrap();
    let h = Hamiltonian::eikonal(1, "1-cos(2*pi*x1)").unwrap();
    let (hn, st) = settle(&h, &GridFunction::constant(&g, 0.0), 20.0);
    let lp = extract_u_infty(&st.trace, 1.0).unwrap();
    assert!(lp.nonincreasing, "rise {}", lp.max_rise);
    let oracle = GridFunction::from_fn(&g, |x| nr_profile(x[0])).unwrap();
    let err = lp.u_infty.anchored().sup_distance(&oracle.anchored()).unwrap();
    assert!(err <= 5e-2, "{err}");
    let scheme = st.trace.scheme.clone().unwrap();
    let r = stationary_residual(&lp.u_infty, &hn, &scheme).unwrap();
    assert!(r <= 5e-2, "{r}");
    let wrong = lp.u_infty.zip_with(&GridFunction::from_fn(&g, |x| (2.0 * PI * x[0]).sin()).unwrap(), |a, b| a + b).unwrap();
    assert!(stationary_residual(&wrong, &hn, &scheme).unwrap() > 0.5);
}

#[test]
fn residual_of_constant_is_zero() {
    let g = TorusGrid::new(&[64]).unwrap();
    let h = Hamiltonian::quadratic(1);
    let u = GridFunction::constant(&g, 2.5);
    let scheme = resolve_scheme(&h, &SolverConfig::new(g, 1.0), &[&u]).unwrap();
    assert!(stationary_residual(&u, &h, &scheme).unwrap() <= 1e-12);
}

#[test]
fn limit_map_is_nonexpansive() {
    let g = TorusGrid::new(&[128]).unwrap();
    let h = Hamiltonian::eikonal(1, "1-cos(2*pi*x1)").unwrap();
    let a = GridFunction::constant(&g, 0.0);
    let b = GridFunction::from_fn(&g, |x| 0.2 * (2.0 * PI * x[0]).cos()).unwrap();
    let cfg = SolverConfig::new(g, 20.0);
    let h = normalize(&h, eigenvalue_longtime(&h, &a, &cfg, 20.0).unwrap().c_longtime.unwrap());
    let limit = |u0: &GridFunction| {
        let st = stationary_solution(&h, u0, &cfg).unwrap();
        extract_u_infty(&st.trace, 1.0).unwrap().u_infty
    };
    let d = limit(&a).sup_distance(&limit(&b)).unwrap();
    assert!(d <= a.sup_distance(&b).unwrap() + 2e-2, "{d}");
}

#[test]
fn contraction_on_shifted_pair() {
    let g = TorusGrid::new(&[64]).unwrap();
    let u = GridFunction::from_fn(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
    let v = u.shifted(0.3).unwrap();
    let rep = contraction_check(&Hamiltonian::fig3(), &[(u.clone(), v), (u.clone(), u)], &SolverConfig::new(g, 1.0)).unwrap();
    assert_eq!(rep.outcome, Outcome::Pass);
    assert!((rep.pairs[0].max_distance - 0.3).abs() <= 1e-12);
    assert_eq!(rep.pairs[1].max_distance, 0.0);
}
