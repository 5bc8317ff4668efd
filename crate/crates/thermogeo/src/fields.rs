//! Fields over a chart: closures with optional analytic partials. When a
//! partial is not supplied, 4th-order central differences with the chart's
//! grid step are used instead.

use std::sync::Arc;

use crate::chart::{Chart, CoordinateKind, Point};
use crate::tensor::{Mat, Ten3, Ten4, Vec3};

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type VecFn = Arc<dyn Fn(&Point) -> Vec3 + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&Point) -> Mat + Send + Sync>;

/// 4th-order central first derivative of a single-variable function.
pub(crate) fn central1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// 4th-order central second derivative.
pub(crate) fn central2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

pub(crate) fn shifted(x: &Point, axis: usize, dx: f64) -> Point {
    let mut y = *x;
    y[axis] += dx;
    y
}

#[derive(Clone)]
pub struct ScalarField {
    chart: Chart,
    value: ScalarFn,
    gradient: Option<VecFn>,
    hessian: Option<MatFn>,
}

impl ScalarField {
    pub fn new(chart: Chart, value: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField { chart, value: Arc::new(value), gradient: None, hessian: None }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&Point) -> Vec3 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian(mut self, hess: impl Fn(&Point) -> Mat + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hess));
        self
    }

    pub fn constant(chart: Chart, v: f64) -> Self {
        let d = chart.dim();
        ScalarField::new(chart, move |_| v)
            .with_gradient(|_| [0.0; 3])
            .with_hessian(move |_| Mat::zeros(d))
    }

    /// Grid-backed field: multilinear interpolation between nodes, partials
    /// by lattice differences at the nearest node (the stencil is shifted
    /// inward near the boundary).
    pub fn from_grid(chart: Chart, values: Vec<f64>) -> crate::error::Result<Self> {
        let dim = chart.dim();
        let n: Vec<usize> = (0..dim).map(|a| chart.grid_shape(a)).collect();
        let total: usize = n.iter().product();
        if values.len() != total {
            return Err(crate::error::Error::InvalidInput(format!(
                "grid data has {} entries, chart needs {total}",
                values.len()
            )));
        }
        let data = Arc::new(values);
        let grid = GridData { chart: chart.clone(), data };
        let g_eval = grid.clone();
        let g_grad = grid.clone();
        let g_hess = grid;
        Ok(ScalarField {
            chart,
            value: Arc::new(move |x| g_eval.interp(x)),
            gradient: Some(Arc::new(move |x| g_grad.gradient(x))),
            hessian: Some(Arc::new(move |x| g_hess.hessian(x))),
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.gradient.is_some() && self.hessian.is_some()
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &Point) -> Vec3 {
        if let Some(g) = &self.gradient {
            return g(x);
        }
        let mut out = [0.0; 3];
        for a in 0..self.chart.dim() {
            let h = self.chart.step(a);
            out[a] = central1(|t| (self.value)(&shifted(x, a, t - x[a])), x[a], h);
        }
        out
    }

    pub fn partial(&self, x: &Point, axis: usize) -> f64 {
        self.grad(x)[axis]
    }

    pub fn hess(&self, x: &Point) -> Mat {
        if let Some(hs) = &self.hessian {
            return hs(x);
        }
        let d = self.chart.dim();
        Mat::from_fn(d, |a, b| {
            let ha = self.chart.step(a);
            if a == b {
                central2(|t| (self.value)(&shifted(x, a, t - x[a])), x[a], ha)
            } else {
                let hb = self.chart.step(b);
                central1(
                    |u| {
                        let xa = shifted(x, a, u - x[a]);
                        if let Some(g) = &self.gradient {
                            g(&xa)[b]
                        } else {
                            central1(|v| (self.value)(&shifted(&xa, b, v - xa[b])), x[b], hb)
                        }
                    },
                    x[a],
                    ha,
                )
            }
        })
    }

    pub fn second_partial(&self, x: &Point, a: usize, b: usize) -> f64 {
        self.hess(x)[(a, b)]
    }

    /// Laplace-Beltrami operator of the flat metric written in this chart's
    /// coordinates.
    pub fn flat_laplacian(&self, x: &Point) -> f64 {
        let g = self.grad(x);
        let h = self.hess(x);
        match self.chart.kind() {
            CoordinateKind::Cartesian => (0..self.chart.dim()).map(|a| h[(a, a)]).sum(),
            CoordinateKind::Polar => {
                let r = x[0];
                h[(0, 0)] + g[0] / r + h[(1, 1)] / (r * r)
            }
            CoordinateKind::Cylindrical => {
                let r = x[0];
                h[(0, 0)] + g[0] / r + h[(1, 1)] / (r * r) + h[(2, 2)]
            }
            CoordinateKind::Spherical => {
                let (r, th) = (x[0], x[1]);
                let s = th.sin();
                h[(0, 0)]
                    + 2.0 * g[0] / r
                    + (h[(1, 1)] + g[1] * th.cos() / s + h[(2, 2)] / (s * s)) / (r * r)
            }
        }
    }

    /// Sup of |f| over grid nodes at the given margin.
    pub fn sup_over_nodes(&self, margin: usize) -> f64 {
        self.chart
            .nodes_with_margin(margin)
            .fold(0.0, |m, p| f64::max(m, self.eval(&p).abs()))
    }
}

#[derive(Clone)]
struct GridData {
    chart: Chart,
    data: Arc<Vec<f64>>,
}

impl GridData {
    fn shape(&self, a: usize) -> usize {
        if a < self.chart.dim() {
            self.chart.grid_shape(a)
        } else {
            1
        }
    }

    fn at(&self, i: [usize; 3]) -> f64 {
        let (n1, n2) = (self.shape(1), self.shape(2));
        self.data[(i[0] * n1 + i[1]) * n2 + i[2]]
    }

    /// Cell containing x, and the fractional position inside it.
    fn locate(&self, x: &Point) -> ([usize; 3], [f64; 3]) {
        let mut cell = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.chart.dim() {
            let n = self.shape(a);
            let lo = self.chart.bounds(a)[0];
            let t = ((x[a] - lo) / self.chart.step(a)).clamp(0.0, (n - 1) as f64);
            let c = (t.floor() as usize).min(n - 2);
            cell[a] = c;
            frac[a] = t - c as f64;
        }
        (cell, frac)
    }

    fn interp(&self, x: &Point) -> f64 {
        let dim = self.chart.dim();
        let (cell, frac) = self.locate(x);
        let corners = 1usize << dim;
        let mut acc = 0.0;
        for corner in 0..corners {
            let mut idx = cell;
            let mut w = 1.0;
            for a in 0..dim {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            acc += w * self.at(idx);
        }
        acc
    }

    fn nearest_node(&self, x: &Point) -> [usize; 3] {
        let (cell, frac) = self.locate(x);
        let mut idx = cell;
        for a in 0..self.chart.dim() {
            if frac[a] > 0.5 {
                idx[a] += 1;
            }
        }
        idx
    }

    /// Stencil base such that base..base+4 stays on the grid, centered when
    /// possible.
    fn stencil_center(&self, i: usize, n: usize) -> usize {
        i.clamp(2, n - 3)
    }

    fn lattice_d1(&self, idx: [usize; 3], a: usize) -> f64 {
        let n = self.shape(a);
        let c = self.stencil_center(idx[a], n);
        let v = |k: i64| {
            let mut j = idx;
            j[a] = (c as i64 + k) as usize;
            self.at(j)
        };
        (-v(2) + 8.0 * v(1) - 8.0 * v(-1) + v(-2)) / (12.0 * self.chart.step(a))
    }

    fn lattice_d2(&self, idx: [usize; 3], a: usize) -> f64 {
        let n = self.shape(a);
        let c = self.stencil_center(idx[a], n);
        let v = |k: i64| {
            let mut j = idx;
            j[a] = (c as i64 + k) as usize;
            self.at(j)
        };
        let h = self.chart.step(a);
        (-v(2) + 16.0 * v(1) - 30.0 * v(0) + 16.0 * v(-1) - v(-2)) / (12.0 * h * h)
    }

    fn gradient(&self, x: &Point) -> Vec3 {
        let idx = self.nearest_node(x);
        let mut out = [0.0; 3];
        for a in 0..self.chart.dim() {
            out[a] = self.lattice_d1(idx, a);
        }
        out
    }

    fn hessian(&self, x: &Point) -> Mat {
        let idx = self.nearest_node(x);
        let d = self.chart.dim();
        Mat::from_fn(d, |a, b| {
            if a == b {
                return self.lattice_d2(idx, a);
            }
            // first-derivative stencil in a of first derivatives in b
            let n = self.shape(a);
            let c = self.stencil_center(idx[a], n);
            let g = |k: i64| {
                let mut j = idx;
                j[a] = (c as i64 + k) as usize;
                self.lattice_d1(j, b)
            };
            (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * self.chart.step(a))
        })
    }
}

#[derive(Clone)]
pub struct VectorField {
    chart: Chart,
    value: VecFn,
    jacobian: Option<MatFn>,
    hessian: Option<Arc<dyn Fn(&Point) -> [Mat; 3] + Send + Sync>>,
}

impl VectorField {
    pub fn new(chart: Chart, value: impl Fn(&Point) -> Vec3 + Send + Sync + 'static) -> Self {
        VectorField { chart, value: Arc::new(value), jacobian: None, hessian: None }
    }

    /// jacobian(x)[(a, b)] = d U^a / d X^b
    pub fn with_jacobian(mut self, j: impl Fn(&Point) -> Mat + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    /// hessian(x)[a][(b, c)] = d^2 U^a / d X^b d X^c
    pub fn with_hessian(mut self, h: impl Fn(&Point) -> [Mat; 3] + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn eval(&self, x: &Point) -> Vec3 {
        (self.value)(x)
    }

    pub fn jac(&self, x: &Point) -> Mat {
        if let Some(j) = &self.jacobian {
            return j(x);
        }
        let d = self.chart.dim();
        Mat::from_fn(d, |a, b| {
            let h = self.chart.step(b);
            central1(|t| (self.value)(&shifted(x, b, t - x[b]))[a], x[b], h)
        })
    }

    pub fn hess(&self, x: &Point) -> [Mat; 3] {
        if let Some(hs) = &self.hessian {
            return hs(x);
        }
        let d = self.chart.dim();
        let mut out = [Mat::zeros(d), Mat::zeros(d), Mat::zeros(d)];
        for (a, slot) in out.iter_mut().enumerate().take(d) {
            *slot = Mat::from_fn(d, |b, c| {
                let hb = self.chart.step(b);
                if b == c {
                    central2(|t| (self.value)(&shifted(x, b, t - x[b]))[a], x[b], hb)
                } else {
                    central1(
                        |u| {
                            let xb = shifted(x, b, u - x[b]);
                            if let Some(j) = &self.jacobian {
                                j(&xb)[(a, c)]
                            } else {
                                let hc = self.chart.step(c);
                                central1(|v| (self.value)(&shifted(&xb, c, v - xb[c]))[a], x[c], hc)
                            }
                        },
                        x[b],
                        hb,
                    )
                }
            });
        }
        out
    }
}

/// Rank-2 tensor field given by a closure (stress fields, Ricci fields, ...).
#[derive(Clone)]
pub struct MatField {
    chart: Chart,
    value: MatFn,
}

impl MatField {
    pub fn new(chart: Chart, value: impl Fn(&Point) -> Mat + Send + Sync + 'static) -> Self {
        MatField { chart, value: Arc::new(value) }
    }

    pub fn from_arc(chart: Chart, value: MatFn) -> Self {
        MatField { chart, value }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn eval(&self, x: &Point) -> Mat {
        (self.value)(x)
    }

    pub fn partial(&self, x: &Point, axis: usize) -> Mat {
        let h = self.chart.step(axis);
        let d = self.chart.dim();
        let v = |t: f64| (self.value)(&shifted(x, axis, t - x[axis]));
        let (p2, p1, m1, m2) = (v(x[axis] + 2.0 * h), v(x[axis] + h), v(x[axis] - h), v(x[axis] - 2.0 * h));
        Mat::from_fn(d, |i, j| {
            (-p2[(i, j)] + 8.0 * p1[(i, j)] - 8.0 * m1[(i, j)] + m2[(i, j)]) / (12.0 * h)
        })
    }

    pub fn sup_over_nodes(&self, margin: usize) -> f64 {
        self.chart
            .nodes_with_margin(margin)
            .fold(0.0, |m, p| f64::max(m, self.eval(&p).sup_norm()))
    }
}

#[derive(Clone)]
pub struct Ten3Field {
    chart: Chart,
    value: Arc<dyn Fn(&Point) -> Ten3 + Send + Sync>,
}

impl Ten3Field {
    pub fn new(chart: Chart, value: impl Fn(&Point) -> Ten3 + Send + Sync + 'static) -> Self {
        Ten3Field { chart, value: Arc::new(value) }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn eval(&self, x: &Point) -> Ten3 {
        (self.value)(x)
    }

    pub fn sup_over_nodes(&self, margin: usize) -> f64 {
        self.chart
            .nodes_with_margin(margin)
            .fold(0.0, |m, p| f64::max(m, self.eval(&p).sup_norm()))
    }
}

#[derive(Clone)]
pub struct Ten4Field {
    chart: Chart,
    value: Arc<dyn Fn(&Point) -> Ten4 + Send + Sync>,
}

impl Ten4Field {
    pub fn new(chart: Chart, value: impl Fn(&Point) -> Ten4 + Send + Sync + 'static) -> Self {
        Ten4Field { chart, value: Arc::new(value) }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn eval(&self, x: &Point) -> Ten4 {
        (self.value)(x)
    }

    pub fn sup_over_nodes(&self, margin: usize) -> f64 {
        self.chart
            .nodes_with_margin(margin)
            .fold(0.0, |m, p| f64::max(m, self.eval(&p).sup_norm()))
    }
}
