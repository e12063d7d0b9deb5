//! Uniform periodic grids on the unit torus and the grid functions living on them.
//!
//! Nodes are indexed in row-major order: on a 2-D grid with resolution `[n0, n1]` the node
//! `(i0, i1)` has flat index `i0 * n1 + i1` and coordinate `(i0 / n0, i1 / n1)`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {left:?} vs {right:?}")]
    Shape { left: Vec<usize>, right: Vec<usize> },
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("malformed grid function text: {0}")]
    Format(String),
}

/// A uniform grid on the flat torus `[0,1)^dim`, `dim` in {1, 2}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    resolution: Vec<usize>,
}

impl TorusGrid {
    pub fn new(resolution: &[usize]) -> Result<Self, GridError> {
        if resolution.is_empty() || resolution.len() > 2 {
            return Err(GridError::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                resolution.len()
            )));
        }
        if let Some(k) = resolution.iter().position(|&n| n == 0) {
            return Err(GridError::InvalidGrid(format!("axis {k} has zero nodes")));
        }
        Ok(Self {
            resolution: resolution.to_vec(),
        })
    }

    pub fn uniform(dim: usize, n: usize) -> Result<Self, GridError> {
        Self::new(&vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Spacing along `axis`, stored implicitly as `1 / N`.
    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.resolution[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.spacing(k))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn stride(&self, axis: usize) -> usize {
        self.resolution[axis + 1..].iter().product()
    }

    /// Multi-index of a flat node index.
    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        let mut rest = index;
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = rest % self.resolution[k];
            rest /= self.resolution[k];
        }
        out
    }

    /// Coordinates of a node, each in `[0, 1)`.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .iter()
            .zip(&self.resolution)
            .map(|(&i, &n)| i as f64 / n as f64)
            .collect()
    }

    /// Flat index of the neighbour `offset` steps along `axis`, wrapping periodically.
    pub fn neighbor(&self, index: usize, axis: usize, offset: isize) -> usize {
        let n = self.resolution[axis] as isize;
        let stride = self.stride(axis);
        let i = ((index / stride) % self.resolution[axis]) as isize;
        let j = (i + offset).rem_euclid(n) as usize;
        index - (i as usize) * stride + j * stride
    }
}

/// Real samples on every node of a [`TorusGrid`]. Values are always finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct GridFunctionJson {
    dim: usize,
    resolution: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct GridFunctionJsonRef<'a> {
    dim: usize,
    resolution: &'a [usize],
    values: &'a [f64],
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ValueCount {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self, GridError> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid.clone(), values)
    }

    pub fn try_from_fn<E>(
        grid: &TorusGrid,
        f: impl Fn(&[f64]) -> Result<f64, E>,
    ) -> Result<Result<Self, GridError>, E> {
        let values = (0..grid.len())
            .map(|i| f(&grid.coords(i)))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(Self::new(grid.clone(), values))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, GridError> {
        self.check_same_grid(other)?;
        Self::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn shifted(&self, c: f64) -> Result<Self, GridError> {
        self.map(|v| v + c)
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::Shape {
                left: self.grid.resolution.clone(),
                right: other.grid.resolution.clone(),
            });
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Arithmetic mean, summed in node order.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Subtracts the minimum so that the result has minimum exactly zero.
    pub fn anchored(&self) -> Self {
        let m = self.min();
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    /// `max_i |f_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `max_i |f_i - g_i|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64, GridError> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Central difference gradient at a node, periodic wrap on every axis.
    pub fn central_gradient(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.dim()];
        self.central_gradient_into(index, &mut out);
        out
    }

    pub fn central_gradient_into(&self, index: usize, out: &mut [f64]) {
        for (k, g) in out.iter_mut().enumerate() {
            let fwd = self.values[self.grid.neighbor(index, k, 1)];
            let bwd = self.values[self.grid.neighbor(index, k, -1)];
            *g = (fwd - bwd) / (2.0 * self.grid.spacing(k));
        }
    }

    /// Largest absolute forward difference quotient over all nodes and axes.
    pub fn lipschitz_estimate(&self) -> f64 {
        let mut l: f64 = 0.0;
        for k in 0..self.grid.dim() {
            let h = self.grid.spacing(k);
            for i in 0..self.len() {
                let fwd = self.values[self.grid.neighbor(i, k, 1)];
                l = l.max(((fwd - self.values[i]) / h).abs());
            }
        }
        l
    }

    /// CSV text: a `# dim,N1[,N2]` header line, then one value per line in row-major order.
    /// `preamble` lines are emitted first, each prefixed with `# `.
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut s = String::new();
        for line in preamble {
            let _ = writeln!(s, "# {line}");
        }
        let dims: Vec<String> = self.grid.resolution.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "# {},{}", self.grid.dim(), dims.join(","));
        for v in &self.values {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    /// Parses [`GridFunction::to_csv`] output. Comment lines that are not the shape header are
    /// skipped.
    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let mut grid = None;
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if grid.is_none() {
                    if let Some(g) = parse_shape_header(comment)? {
                        grid = Some(g);
                    }
                }
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| GridError::Format(format!("line {}: bad value {line:?}", lineno + 1)))?;
            values.push(v);
        }
        let grid = grid.ok_or_else(|| GridError::Format("missing `# dim,N` header".into()))?;
        Self::new(grid, values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GridFunctionJsonRef {
            dim: self.grid.dim(),
            resolution: &self.grid.resolution,
            values: &self.values,
        })
        .expect("grid function serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GridError> {
        let raw: GridFunctionJson =
            serde_json::from_str(text).map_err(|e| GridError::Format(e.to_string()))?;
        if raw.dim != raw.resolution.len() {
            return Err(GridError::Format(format!(
                "dim {} does not match resolution {:?}",
                raw.dim, raw.resolution
            )));
        }
        Self::new(TorusGrid::new(&raw.resolution)?, raw.values)
    }
}

fn parse_shape_header(comment: &str) -> Result<Option<TorusGrid>, GridError> {
    let fields: Vec<&str> = comment.trim().split(',').map(str::trim).collect();
    let Ok(nums) = fields
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
    else {
        return Ok(None);
    };
    if nums.len() < 2 || nums[0] != nums.len() - 1 {
        return Err(GridError::Format(format!("bad shape header {comment:?}")));
    }
    TorusGrid::new(&nums[1..]).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(&[n]).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(&[]).is_err());
        assert!(TorusGrid::new(&[4, 4, 4]).is_err());
        assert!(TorusGrid::new(&[0]).is_err());
        assert!(TorusGrid::new(&[8, 0]).is_err());
    }

    #[test]
    fn spacing_times_n_is_one() {
        for n in [1, 3, 7, 64, 255, 4096] {
            let g = grid1(n);
            assert_eq!(g.spacing(0), 1.0 / n as f64);
        }
    }

    #[test]
    fn neighbors_wrap_on_both_axes() {
        let g = TorusGrid::new(&[3, 4]).unwrap();
        // node (0, 0)
        assert_eq!(g.neighbor(0, 0, -1), 2 * 4);
        assert_eq!(g.neighbor(0, 1, -1), 3);
        // node (2, 3)
        let i = 2 * 4 + 3;
        assert_eq!(g.neighbor(i, 0, 1), 3);
        assert_eq!(g.neighbor(i, 1, 1), 2 * 4);
        assert_eq!(g.multi_index(i), vec![2, 3]);
        assert_eq!(g.coords(i), vec![2.0 / 3.0, 0.75]);
    }

    #[test]
    fn sup_norm_examples() {
        let g = grid1(4);
        assert_eq!(GridFunction::constant(&g, 0.0).sup_norm(), 0.0);
        assert_eq!(GridFunction::constant(&g, -3.5).sup_norm(), 3.5);
        let s = GridFunction::from_fn(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        assert!((s.sup_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sup_distance_examples() {
        let g = grid1(16);
        let one = GridFunction::constant(&g, 1.0);
        let minus = GridFunction::constant(&g, -1.0);
        assert_eq!(one.sup_distance(&one).unwrap(), 0.0);
        assert_eq!(one.sup_distance(&minus).unwrap(), 2.0);
        let other = GridFunction::constant(&grid1(8), 1.0);
        assert!(matches!(one.sup_distance(&other), Err(GridError::Shape { .. })));
    }

    #[test]
    fn sup_distance_matches_dense_scan_at_nodes() {
        let n = 256;
        let big_f = |x: f64| x - (2.0 * PI * x).sin() / (2.0 * PI);
        let f = GridFunction::from_fn(&grid1(n), |x| big_f(x[0])).unwrap();
        let zero = GridFunction::constant(&grid1(n), 0.0);
        let d = f.sup_distance(&zero).unwrap();
        // Dense scan (~1e5 points, a multiple of n so every node is shared) of the closed form.
        let dense = 400 * n;
        let mut best: f64 = 0.0;
        for j in 0..dense {
            let x = j as f64 / dense as f64;
            let node = x * n as f64;
            if (node - node.round()).abs() < 1e-9 {
                best = best.max(big_f(node.round() / n as f64).abs());
            }
        }
        assert!((d - best).abs() <= 1e-12, "{d} vs {best}");
        // Node maximum is at the last node, close to the sup of the closed form (which is 1).
        assert!(d <= 1.0 && d > 0.99);
    }

    #[test]
    fn central_gradient_examples() {
        let g = grid1(8);
        let c = GridFunction::constant(&g, 2.5);
        assert_eq!(c.central_gradient(5), vec![0.0]);
        let f = GridFunction::from_fn(&g, |x| x[0]).unwrap();
        assert_eq!(f.central_gradient(3), vec![1.0]);
        assert_eq!(f.central_gradient(0), vec![-3.0]);
    }

    #[test]
    fn lipschitz_examples() {
        let n = 256;
        assert_eq!(GridFunction::constant(&grid1(n), 7.0).lipschitz_estimate(), 0.0);
        let f = GridFunction::from_fn(&grid1(n), |x| {
            x[0] - (2.0 * PI * x[0]).sin() / (2.0 * PI)
        })
        .unwrap();
        // periodic wrap at the last node jumps by -1; the estimate uses the periodic extension
        // of the sampled data, so compare the interior slopes instead.
        let interior = (0..n - 1)
            .map(|i| (f.values()[i + 1] - f.values()[i]) * n as f64)
            .fold(0.0f64, |a, b| a.max(b.abs()));
        assert!((interior - 2.0).abs() < 0.05);
        // hat with slopes +-1 sampled at its breakpoints
        let hat = GridFunction::from_fn(&grid1(8), |x| 0.5 - (x[0] - 0.5).abs()).unwrap();
        assert!((hat.lipschitz_estimate() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_and_json_roundtrip() {
        let g = TorusGrid::new(&[3, 2]).unwrap();
        let f = GridFunction::new(g, vec![0.1, -2.0, 1e-300, 3.0, 0.0, 1.0 / 3.0]).unwrap();
        let csv = f.to_csv(&["provenance line".to_string()]);
        assert!(csv.contains("# 2,3,2\n"));
        assert_eq!(GridFunction::from_csv(&csv).unwrap(), f);
        assert_eq!(GridFunction::from_json(&f.to_json()).unwrap(), f);
        assert!(GridFunction::from_csv("# 1,4\n1\n2\n").is_err());
        assert!(GridFunction::from_csv("1\n2\n").is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let g = grid1(2);
        assert!(matches!(
            GridFunction::new(g, vec![1.0, f64::NAN]),
            Err(GridError::NonFinite { index: 1, .. })
        ));
    }

    fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1e3f64..1e3, n)
    }

    proptest! {
        #[test]
        fn sup_distance_is_a_metric(a in values(16), b in values(16), c in values(16)) {
            let g = grid1(16);
            let f = GridFunction::new(g.clone(), a).unwrap();
            let h = GridFunction::new(g.clone(), b).unwrap();
            let k = GridFunction::new(g, c).unwrap();
            let fh = f.sup_distance(&h).unwrap();
            prop_assert_eq!(fh, h.sup_distance(&f).unwrap());
            let via = f.sup_distance(&k).unwrap() + k.sup_distance(&h).unwrap();
            prop_assert!(fh <= via * (1.0 + f64::EPSILON));
        }

        #[test]
        fn gradient_of_constant_is_zero(c in -1e6f64..1e6, n0 in 1usize..9, n1 in 1usize..9) {
            let g = TorusGrid::new(&[n0, n1]).unwrap();
            let f = GridFunction::constant(&g, c);
            for i in 0..g.len() {
                prop_assert_eq!(f.central_gradient(i), vec![0.0, 0.0]);
            }
        }

        // Exact equality needs exactly representable sums: values and shifts on a dyadic lattice.
        #[test]
        fn lipschitz_shift_invariant(a in proptest::collection::vec(-1000i32..1000, 12), c in -1000i32..1000) {
            let g = grid1(12);
            let f = GridFunction::new(g, a.iter().map(|&v| v as f64 / 64.0).collect()).unwrap();
            let shifted = f.shifted(c as f64 / 8.0).unwrap();
            prop_assert_eq!(f.lipschitz_estimate(), shifted.lipschitz_estimate());
        }

        #[test]
        fn lipschitz_shift_invariant_to_rounding(a in values(12), c in -1e3f64..1e3) {
            let g = grid1(12);
            let f = GridFunction::new(g, a).unwrap();
            let shifted = f.shifted(c).unwrap();
            let scale = 12.0 * 4.0 * f64::EPSILON * (2e3 + c.abs());
            prop_assert!((f.lipschitz_estimate() - shifted.lipschitz_estimate()).abs() <= scale);
        }
    }
}
