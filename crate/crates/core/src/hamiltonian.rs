//! Built-in and user-defined Hamiltonians `H(x, p)` on `T^n x R^n`, plus quantities derived
//! from them by sampling (coercivity radius, modulus of continuity in `p`).

use crate::expr::{EvalError, Expression, ParseError};
use crate::grid::TorusGrid;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("Hamiltonian `{name}` is only defined in dimension {supported}, requested {requested}")]
    Dimension {
        name: String,
        supported: usize,
        requested: usize,
    },
    #[error("potential expression `{0}` must not depend on p")]
    PotentialUsesP(String),
    #[error("not coercive at this scale: min H on shells never exceeded {level} up to |p| = {cap}")]
    NotCoercive { level: f64, cap: f64 },
    #[error("unknown Hamiltonian kind `{0}`")]
    UnknownKind(String),
    #[error("missing `{0}` for this Hamiltonian kind")]
    MissingExpression(&'static str),
    #[error("non-finite value of H at x={x:?}, p={p:?}")]
    NonFinite { x: Vec<f64>, p: Vec<f64> },
}

/// Structural facts a catalog entry is known to satisfy or violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Property {
    #[serde(rename = "A6+")]
    A6Plus,
    #[serde(rename = "A6-")]
    A6Minus,
    #[serde(rename = "not-A+")]
    NotAPlus,
    #[serde(rename = "not-A-")]
    NotAMinus,
    #[serde(rename = "NR")]
    Nr,
    #[serde(rename = "strictly-convex")]
    StrictlyConvex,
}

pub type CustomFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Kind {
    /// `max{min{|p|^2, 1}, |p|^2/4}`
    Fig1,
    /// `|p+1| - 1 + H0(p) + H0(-p-1)` with the dyadic piecewise-quadratic `H0`.
    Fig2,
    /// `max{g(p), g(1-p)}`, `g(p) = -p + sum_k 2^-k tent(2^k p)`.
    Fig3,
    /// `|p| - f(x)`
    Eikonal(Expression),
    /// `|p|^2 - f(x)`
    NrQuad(Expression),
    User(Expression),
    Custom(CustomFn),
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Fig1 => write!(f, "Fig1"),
            Kind::Fig2 => write!(f, "Fig2"),
            Kind::Fig3 => write!(f, "Fig3"),
            Kind::Eikonal(e) => write!(f, "Eikonal({})", e.source()),
            Kind::NrQuad(e) => write!(f, "NrQuad({})", e.source()),
            Kind::User(e) => write!(f, "User({})", e.source()),
            Kind::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    dim: usize,
    kind: Kind,
    name: String,
    properties: BTreeSet<Property>,
    shift: f64,
}

impl Hamiltonian {
    pub fn fig1(dim: usize) -> Self {
        Self {
            dim,
            kind: Kind::Fig1,
            name: "fig1".into(),
            properties: [Property::A6Plus, Property::NotAPlus].into(),
            shift: 0.0,
        }
    }

    pub fn fig2() -> Self {
        Self {
            dim: 1,
            kind: Kind::Fig2,
            name: "fig2".into(),
            properties: [Property::A6Plus, Property::NotAPlus].into(),
            shift: 0.0,
        }
    }

    pub fn fig3() -> Self {
        Self {
            dim: 1,
            kind: Kind::Fig3,
            name: "fig3".into(),
            properties: [Property::A6Minus, Property::NotAMinus].into(),
            shift: 0.0,
        }
    }

    fn potential(dim: usize, f_expr: &str) -> Result<Expression, HamiltonianError> {
        let f = Expression::parse(f_expr, dim)?;
        if f.uses_p() {
            return Err(HamiltonianError::PotentialUsesP(f_expr.to_string()));
        }
        Ok(f)
    }

    pub fn eikonal(dim: usize, f_expr: &str) -> Result<Self, HamiltonianError> {
        Ok(Self {
            dim,
            kind: Kind::Eikonal(Self::potential(dim, f_expr)?),
            name: format!("eikonal[{f_expr}]"),
            properties: BTreeSet::new(),
            shift: 0.0,
        })
    }

    pub fn nrquad(dim: usize, f_expr: &str) -> Result<Self, HamiltonianError> {
        Ok(Self {
            dim,
            kind: Kind::NrQuad(Self::potential(dim, f_expr)?),
            name: format!("nrquad[{f_expr}]"),
            properties: [Property::StrictlyConvex].into(),
            shift: 0.0,
        })
    }

    /// `|p|^2`, the strictly convex reference case.
    pub fn quadratic(dim: usize) -> Self {
        let mut h = Self::nrquad(dim, "0").expect("constant potential parses");
        h.name = "quadratic".into();
        h.properties = [Property::StrictlyConvex, Property::A6Plus, Property::A6Minus].into();
        h
    }

    pub fn user(dim: usize, expr: &str) -> Result<Self, HamiltonianError> {
        Ok(Self {
            dim,
            kind: Kind::User(Expression::parse(expr, dim)?),
            name: format!("user[{expr}]"),
            properties: BTreeSet::new(),
            shift: 0.0,
        })
    }

    pub fn custom(name: &str, dim: usize, f: CustomFn) -> Self {
        Self {
            dim,
            kind: Kind::Custom(f),
            name: name.to_string(),
            properties: BTreeSet::new(),
            shift: 0.0,
        }
    }

    /// Builds a catalog entry from its configuration keys.
    pub fn from_config(
        kind: &str,
        dim: usize,
        expr: Option<&str>,
        f_expr: Option<&str>,
    ) -> Result<Self, HamiltonianError> {
        let one_d = |h: Hamiltonian| {
            if dim != 1 {
                Err(HamiltonianError::Dimension {
                    name: h.name.clone(),
                    supported: 1,
                    requested: dim,
                })
            } else {
                Ok(h)
            }
        };
        match kind {
            "fig1" => Ok(Self::fig1(dim)),
            "fig2" => one_d(Self::fig2()),
            "fig3" => one_d(Self::fig3()),
            "quadratic" => Ok(Self::quadratic(dim)),
            "eikonal" => Self::eikonal(dim, f_expr.ok_or(HamiltonianError::MissingExpression("hamiltonian.f_expr"))?),
            "nrquad" => Self::nrquad(dim, f_expr.ok_or(HamiltonianError::MissingExpression("hamiltonian.f_expr"))?),
            "user" => Self::user(dim, expr.ok_or(HamiltonianError::MissingExpression("hamiltonian.expr"))?),
            other => Err(HamiltonianError::UnknownKind(other.to_string())),
        }
    }

    pub fn with_properties(mut self, properties: impl IntoIterator<Item = Property>) -> Self {
        self.properties = properties.into_iter().collect();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn properties(&self) -> &BTreeSet<Property> {
        &self.properties
    }

    /// Constant subtracted from the base evaluator (see [`Hamiltonian::normalize`]).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `H - c`.
    pub fn normalize(&self, c: f64) -> Self {
        let mut h = self.clone();
        h.shift += c;
        h
    }

    pub fn depends_on_x(&self) -> bool {
        match &self.kind {
            Kind::Fig1 | Kind::Fig2 | Kind::Fig3 => false,
            Kind::Eikonal(f) | Kind::NrQuad(f) => f.uses_x(),
            Kind::User(e) => e.uses_x(),
            Kind::Custom(_) => true,
        }
    }

    /// The potential `f(x)` of the eikonal / NR families.
    pub fn potential_at(&self, x: &[f64]) -> Result<Option<f64>, HamiltonianError> {
        match &self.kind {
            Kind::Eikonal(f) | Kind::NrQuad(f) => Ok(Some(f.evaluate(&reduce(x), &[])?)),
            _ => Ok(None),
        }
    }

    pub fn eval(&self, x: &[f64], p: &[f64]) -> Result<f64, HamiltonianError> {
        debug_assert_eq!(p.len(), self.dim);
        let v = match &self.kind {
            Kind::Fig1 => fig1(norm_sq(p)),
            Kind::Fig2 => fig2(p[0]),
            Kind::Fig3 => fig3(p[0]),
            Kind::Eikonal(f) => norm_sq(p).sqrt() - f.evaluate(&reduce(x), p)?,
            Kind::NrQuad(f) => norm_sq(p) - f.evaluate(&reduce(x), p)?,
            Kind::User(e) => e.evaluate(&reduce(x), p)?,
            Kind::Custom(f) => f(&reduce(x), p),
        } - self.shift;
        if !v.is_finite() {
            return Err(HamiltonianError::NonFinite {
                x: x.to_vec(),
                p: p.to_vec(),
            });
        }
        Ok(v)
    }

    /// Binds the Hamiltonian to the nodes of `grid`, caching anything that depends on `x` only.
    pub fn on_grid(&self, grid: &TorusGrid) -> Result<NodeHamiltonian<'_>, HamiltonianError> {
        let coords: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.coords(i)).collect();
        let potential = match &self.kind {
            Kind::Eikonal(f) | Kind::NrQuad(f) => coords
                .iter()
                .map(|x| f.evaluate(x, &[]))
                .collect::<Result<Vec<_>, _>>()?,
            _ => Vec::new(),
        };
        Ok(NodeHamiltonian {
            h: self,
            coords,
            potential,
        })
    }
}

/// A Hamiltonian evaluated at the nodes of a fixed grid.
pub struct NodeHamiltonian<'a> {
    h: &'a Hamiltonian,
    coords: Vec<Vec<f64>>,
    potential: Vec<f64>,
}

impl NodeHamiltonian<'_> {
    pub fn hamiltonian(&self) -> &Hamiltonian {
        self.h
    }

    pub fn coords(&self, node: usize) -> &[f64] {
        &self.coords[node]
    }

    pub fn eval(&self, node: usize, p: &[f64]) -> Result<f64, HamiltonianError> {
        let v = match &self.h.kind {
            Kind::Eikonal(_) => norm_sq(p).sqrt() - self.potential[node] - self.h.shift,
            Kind::NrQuad(_) => norm_sq(p) - self.potential[node] - self.h.shift,
            _ => return self.h.eval(&self.coords[node], p),
        };
        if !v.is_finite() {
            return Err(HamiltonianError::NonFinite {
                x: self.coords[node].clone(),
                p: p.to_vec(),
            });
        }
        Ok(v)
    }
}

fn reduce(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.rem_euclid(1.0)).collect()
}

pub(crate) fn norm_sq(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum()
}

fn fig1(p2: f64) -> f64 {
    p2.min(1.0).max(p2 / 4.0)
}

/// Deepest dyadic branch of `fig2_h0`; below `2^-53` the branch family is cut off.
const FIG2_MAX_BRANCH: i32 = 52;

pub(crate) fn fig2_h0(p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return p + (p - 1.0) * (p - 1.0);
    }
    // branch j lives on [2^-(j+1), 2^-j)
    let mut hi = 1.0;
    for _ in 0..=FIG2_MAX_BRANCH {
        let lo = hi * 0.5;
        if p >= lo {
            let d = p - lo;
            return p * lo + d * d / lo;
        }
        hi = lo;
    }
    0.0
}

fn fig2(p: f64) -> f64 {
    (p + 1.0).abs() - 1.0 + fig2_h0(p) + fig2_h0(-p - 1.0)
}

fn fig3_tent(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else if y <= 0.5 {
        -y / 2.0
    } else {
        -(y - 1.0) * (y - 1.0)
    }
}

/// `g(p) = -p + sum_{k>=1} 2^-k tent(2^k p)`. Only terms with `2^k p` in `(0, 1)` are nonzero,
/// so the sum is finite and evaluated exactly term by term.
pub(crate) fn fig3_g(p: f64) -> f64 {
    let mut s = -p;
    if p > 0.0 {
        let mut y = 2.0 * p;
        let mut scale = 0.5;
        while y < 1.0 {
            s += scale * fig3_tent(y);
            y *= 2.0;
            scale *= 0.5;
        }
    }
    s
}

fn fig3(p: f64) -> f64 {
    fig3_g(p).max(fig3_g(1.0 - p))
}

/// Points with `|p|` in `[r, 2r]`: `radii` radii and, in 2-D, 16 directions.
fn shell_points(dim: usize, r: f64, radii: usize) -> Vec<Vec<f64>> {
    let radii = radii.max(2);
    let mut out = Vec::new();
    for j in 0..radii {
        let rho = r * (1.0 + j as f64 / (radii - 1) as f64);
        match dim {
            1 => {
                out.push(vec![rho]);
                out.push(vec![-rho]);
            }
            _ => {
                for a in 0..16 {
                    let t = a as f64 * std::f64::consts::PI / 8.0;
                    out.push(vec![rho * t.cos(), rho * t.sin()]);
                }
            }
        }
    }
    out
}

/// Largest radius tried by [`coercivity_radius`].
pub const COERCIVITY_CAP: f64 = (1u64 << 20) as f64;

/// Smallest `R` in `{1, 2, 4, ..., 2^20}` such that the sampled minimum of `H` over
/// `|p| in [R, 2R]` and all `x_samples` exceeds `level`.
pub fn coercivity_radius(
    h: &Hamiltonian,
    level: f64,
    x_samples: &[Vec<f64>],
    ray_samples: usize,
) -> Result<f64, HamiltonianError> {
    let mut r = 1.0;
    while r <= COERCIVITY_CAP {
        let mut min = f64::INFINITY;
        for p in shell_points(h.dim(), r, ray_samples) {
            for x in x_samples {
                min = min.min(h.eval(x, &p)?);
            }
        }
        if min > level {
            return Ok(r);
        }
        r *= 2.0;
    }
    Err(HamiltonianError::NotCoercive {
        level,
        cap: COERCIVITY_CAP,
    })
}

/// Default x-samples: the nodes of a uniform grid with `n` points per axis, or the single
/// origin when `H` does not depend on `x`.
pub fn default_x_samples(h: &Hamiltonian, n: usize) -> Vec<Vec<f64>> {
    if !h.depends_on_x() {
        return vec![vec![0.0; h.dim()]];
    }
    let grid = TorusGrid::uniform(h.dim(), n).expect("nonzero resolution");
    (0..grid.len()).map(|i| grid.coords(i)).collect()
}

/// Lattice of spacing `2R / m` per axis restricted to the closed ball of radius `R`.
fn ball_lattice(dim: usize, radius: f64, m: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..=m)
        .map(|i| (2.0 * i as f64 * radius) / m as f64 - radius)
        .collect();
    match dim {
        1 => axis.into_iter().map(|v| vec![v]).collect(),
        _ => {
            let mut out = Vec::new();
            for &a in &axis {
                for &b in &axis {
                    if a * a + b * b <= radius * radius * (1.0 + 1e-12) {
                        out.push(vec![a, b]);
                    }
                }
            }
            out
        }
    }
}

/// Sampled lower bound of `omega_{H,R}(r) = sup{|H(x,p) - H(x,q)| : p, q in B_R, |p-q| <= r}`.
///
/// Pairs are drawn from one fixed lattice of the ball, so the value is nondecreasing in `r`
/// and vanishes at `r = 0`.
pub fn modulus_omega(
    h: &Hamiltonian,
    radius: f64,
    r: f64,
    x_samples: &[Vec<f64>],
    lattice: usize,
) -> Result<f64, HamiltonianError> {
    Ok(*modulus_curve(h, radius, &[r], x_samples, lattice)?
        .first()
        .unwrap_or(&0.0))
}

/// [`modulus_omega`] at each of `rs`, made nondecreasing by a running maximum.
pub fn modulus_curve(
    h: &Hamiltonian,
    radius: f64,
    rs: &[f64],
    x_samples: &[Vec<f64>],
    lattice: usize,
) -> Result<Vec<f64>, HamiltonianError> {
    let points = ball_lattice(h.dim(), radius, lattice);
    let tol = 1e-12 * radius.max(1.0);
    let mut values = vec![0.0f64; rs.len()];
    for x in x_samples {
        let hv = points
            .iter()
            .map(|p| h.eval(x, p))
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = norm_sq(
                    &points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| a - b)
                        .collect::<Vec<_>>(),
                )
                .sqrt();
                let diff = (hv[i] - hv[j]).abs();
                for (k, &r) in rs.iter().enumerate() {
                    if d <= r + tol && diff > values[k] {
                        values[k] = diff;
                    }
                }
            }
        }
    }
    let mut run: f64 = 0.0;
    let mut order: Vec<usize> = (0..rs.len()).collect();
    order.sort_by(|&a, &b| rs[a].total_cmp(&rs[b]));
    let mut out = values.clone();
    for &k in &order {
        run = run.max(values[k]);
        out[k] = run;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_values() {
        let h = Hamiltonian::fig1(1);
        assert_eq!(h.eval(&[0.0], &[1.5]).unwrap(), 1.0);
        assert_eq!(h.eval(&[0.0], &[3.0]).unwrap(), 2.25);
        assert_eq!(h.eval(&[0.0], &[0.5]).unwrap(), 0.25);
        for theta in [1.01, 1.3, 1.99] {
            assert_eq!(h.eval(&[0.0], &[theta]).unwrap(), 1.0);
            assert_eq!(h.eval(&[0.0], &[-theta]).unwrap(), 1.0);
        }
    }

    #[test]
    fn fig2_dyadic_values() {
        let h = Hamiltonian::fig2();
        let q = 0.25; // j = 1
        assert!((h.eval(&[0.0], &[q]).unwrap() - 0.3125).abs() < 1e-15);
        for j in 1..=6 {
            let q = 0.5f64.powi(j + 1);
            let expect = q + q * q;
            assert!((h.eval(&[0.0], &[q]).unwrap() - expect).abs() < 1e-15);
        }
        // H vanishes at the origin, and equals p on [-1, 0]
        assert_eq!(h.eval(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(h.eval(&[0.0], &[-0.5]).unwrap(), -0.5);
        assert_eq!(h.eval(&[0.0], &[-1.0]).unwrap(), -1.0);
    }

    #[test]
    fn fig2_branches_are_right_open() {
        // at p = 2^-j the branch j-1 applies: value 2^-2j + 0 offset from its left end
        for j in 1..10 {
            let p = 0.5f64.powi(j);
            assert_eq!(fig2_h0(p), p * p);
        }
        assert_eq!(fig2_h0(1e-17), 0.0);
        assert_eq!(fig2_h0(1.0), 1.0);
    }

    #[test]
    fn fig2_identity() {
        let h = Hamiltonian::fig2();
        for j in 1..=6 {
            let q = 0.5f64.powi(j + 1);
            for theta in [1.1, 1.5, 1.9] {
                let lhs = h.eval(&[0.0], &[theta * q]).unwrap() - theta * h.eval(&[0.0], &[q]).unwrap();
                let rhs = (theta - 1.0) * (theta - 1.0) / 2f64.powi(j + 1);
                assert!((lhs - rhs).abs() <= 1e-12, "j={j} theta={theta}");
            }
        }
    }

    #[test]
    fn fig3_values() {
        let h = Hamiltonian::fig3();
        assert_eq!(h.eval(&[0.0], &[0.25]).unwrap(), -3.0 / 8.0);
        for k in 1..=8 {
            let q = 0.5f64.powi(k);
            let expect = -((k + 1) as f64) / 2f64.powi(k + 1);
            assert!((h.eval(&[0.0], &[q]).unwrap() - expect).abs() <= 1e-12);
        }
        assert_eq!(h.eval(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(h.eval(&[0.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(h.eval(&[0.0], &[-2.0]).unwrap(), 2.0);
        assert_eq!(h.eval(&[0.0], &[3.0]).unwrap(), 2.0);
        assert!(h.eval(&[0.0], &[f64::MIN_POSITIVE / 8.0]).unwrap().is_finite());
    }

    #[test]
    fn fig3_g_branch_identity() {
        for k in 1..=10 {
            let q = 0.5f64.powi(k);
            for i in 0..=20 {
                let lambda = 0.5 + 0.5 * i as f64 / 20.0;
                let lhs = fig3_g(lambda * q);
                let rhs = lambda * fig3_g(q) - (lambda - 1.0) * (lambda - 1.0) / 2f64.powi(k);
                assert!((lhs - rhs).abs() <= 1e-14, "k={k} lambda={lambda}");
            }
        }
        // at k = 1 both branches of the max coincide at q
        assert_eq!(fig3_g(0.5), fig3_g(1.0 - 0.5));
    }

    #[test]
    fn eikonal_and_periodicity() {
        let h = Hamiltonian::eikonal(1, "2-cos(2*3.141592653589793*x1)").unwrap();
        assert!((h.eval(&[0.0], &[3.0]).unwrap() - 2.0).abs() < 1e-15);
        // exact periodicity at dyadic nodes
        for i in 0..64 {
            let x = i as f64 / 64.0;
            for p in [-1.5, 0.0, 0.7] {
                assert_eq!(h.eval(&[x + 1.0], &[p]).unwrap(), h.eval(&[x], &[p]).unwrap());
                assert_eq!(h.eval(&[x - 3.0], &[p]).unwrap(), h.eval(&[x], &[p]).unwrap());
            }
        }
        let h2 = Hamiltonian::nrquad(2, "1-cos(2*3.141592653589793*x1)*cos(2*3.141592653589793*x2)").unwrap();
        assert_eq!(
            h2.eval(&[0.25, 1.5], &[1.0, 1.0]).unwrap(),
            h2.eval(&[0.25, 0.5], &[1.0, 1.0]).unwrap()
        );
        assert!(matches!(
            Hamiltonian::eikonal(1, "p1"),
            Err(HamiltonianError::PotentialUsesP(_))
        ));
    }

    #[test]
    fn node_evaluation_matches_direct() {
        let grid = TorusGrid::new(&[32]).unwrap();
        let h = Hamiltonian::nrquad(1, "1-cos(2*3.141592653589793*x1)")
            .unwrap()
            .normalize(0.25);
        let nodes = h.on_grid(&grid).unwrap();
        for i in 0..32 {
            assert_eq!(
                nodes.eval(i, &[0.3]).unwrap(),
                h.eval(&grid.coords(i), &[0.3]).unwrap()
            );
        }
    }

    #[test]
    fn normalize_shifts() {
        let h = Hamiltonian::nrquad(1, "-1").unwrap();
        let n = h.normalize(1.0);
        for p in [-2.0, 0.0, 0.5] {
            assert_eq!(n.eval(&[0.0], &[p]).unwrap(), p * p);
        }
        let z = h.normalize(0.0);
        assert_eq!(z.eval(&[0.3], &[1.5]).unwrap(), h.eval(&[0.3], &[1.5]).unwrap());
    }

    #[test]
    fn coercivity_examples() {
        let x = vec![vec![0.0]];
        let q = Hamiltonian::quadratic(1);
        assert_eq!(coercivity_radius(&q, 4.0, &x, 33).unwrap(), 4.0);
        // FIG1 is >= 1 for |p| >= 1, so the first shell [1, 2] already clears 0.5.
        assert_eq!(coercivity_radius(&Hamiltonian::fig1(1), 0.5, &x, 33).unwrap(), 1.0);
        let s = Hamiltonian::user(1, "sin(p1)").unwrap();
        assert!(matches!(
            coercivity_radius(&s, 0.0, &x, 33),
            Err(HamiltonianError::NotCoercive { .. })
        ));
        let q2 = Hamiltonian::quadratic(2);
        assert_eq!(coercivity_radius(&q2, 4.0, &[vec![0.0, 0.0]], 9).unwrap(), 4.0);
    }

    #[test]
    fn modulus_examples() {
        let x = vec![vec![0.0]];
        let q = Hamiltonian::quadratic(1);
        assert_eq!(modulus_omega(&q, 1.0, 0.0, &x, 200).unwrap(), 0.0);
        let w = modulus_omega(&q, 1.0, 0.5, &x, 2000).unwrap();
        // closed form: max over |p|,|q| <= R, |p-q| <= r of |p^2 - q^2| = r (2R - r)
        assert!((w - 0.75).abs() <= 1e-3, "{w}");
        let c = Hamiltonian::user(1, "3").unwrap();
        assert_eq!(modulus_omega(&c, 2.0, 1.0, &x, 100).unwrap(), 0.0);
        let curve = modulus_curve(&Hamiltonian::fig3(), 2.0, &[0.0, 0.1, 0.05, 1.0, 0.5], &x, 200).unwrap();
        assert_eq!(curve[0], 0.0);
        assert!(curve[2] <= curve[1] && curve[1] <= curve[4] && curve[4] <= curve[3]);
    }

    #[test]
    fn from_config_kinds() {
        assert!(Hamiltonian::from_config("fig2", 2, None, None).is_err());
        assert!(Hamiltonian::from_config("eikonal", 1, None, None).is_err());
        assert!(Hamiltonian::from_config("bogus", 1, None, None).is_err());
        let h = Hamiltonian::from_config("user", 1, Some("p1^2+1"), None).unwrap();
        assert_eq!(h.eval(&[0.0], &[2.0]).unwrap(), 5.0);
    }
}
