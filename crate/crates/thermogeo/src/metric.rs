//! Metric tensor fields and affine connection fields on a chart.

use std::sync::Arc;

use crate::chart::{Chart, CoordinateKind, Point};
use crate::error::{Error, Result};
use crate::fields::{shifted, MatFn, ScalarField};
use crate::tensor::{Mat, Ten3};

type DMatFn = Arc<dyn Fn(&Point) -> [Mat; 3] + Send + Sync>;
type DDMatFn = Arc<dyn Fn(&Point) -> [[Mat; 3]; 3] + Send + Sync>;

/// Symmetric positive-definite rank-2 field G_IJ(x), with optional analytic
/// first and second partial derivatives.
#[derive(Clone)]
pub struct MetricField {
    chart: Chart,
    value: MatFn,
    d_value: Option<DMatFn>,
    dd_value: Option<DDMatFn>,
}

impl MetricField {
    pub fn new(chart: Chart, value: impl Fn(&Point) -> Mat + Send + Sync + 'static) -> Self {
        MetricField { chart, value: Arc::new(value), d_value: None, dd_value: None }
    }

    /// d(x)[K] = d G / d X^K
    pub fn with_partials(
        mut self,
        d: impl Fn(&Point) -> [Mat; 3] + Send + Sync + 'static,
    ) -> Self {
        self.d_value = Some(Arc::new(d));
        self
    }

    /// dd(x)[K][L] = d^2 G / d X^K d X^L
    pub fn with_second_partials(
        mut self,
        dd: impl Fn(&Point) -> [[Mat; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        self.dd_value = Some(Arc::new(dd));
        self
    }

    /// Flat metric written in the chart's coordinates, with analytic partials.
    pub fn flat(chart: Chart) -> Self {
        let d = chart.dim();
        match chart.kind() {
            CoordinateKind::Cartesian => MetricField::new(chart, move |_| Mat::identity(d))
                .with_partials(move |_| [Mat::zeros(d); 3])
                .with_second_partials(move |_| [[Mat::zeros(d); 3]; 3]),
            CoordinateKind::Polar => MetricField::new(chart, |x| Mat::diag(2, &[1.0, x[0] * x[0]]))
                .with_partials(|x| {
                    [Mat::diag(2, &[0.0, 2.0 * x[0]]), Mat::zeros(2), Mat::zeros(2)]
                })
                .with_second_partials(|_| {
                    let mut dd = [[Mat::zeros(2); 3]; 3];
                    dd[0][0] = Mat::diag(2, &[0.0, 2.0]);
                    dd
                }),
            CoordinateKind::Cylindrical => {
                MetricField::new(chart, |x| Mat::diag(3, &[1.0, x[0] * x[0], 1.0]))
                    .with_partials(|x| {
                        [Mat::diag(3, &[0.0, 2.0 * x[0], 0.0]), Mat::zeros(3), Mat::zeros(3)]
                    })
                    .with_second_partials(|_| {
                        let mut dd = [[Mat::zeros(3); 3]; 3];
                        dd[0][0] = Mat::diag(3, &[0.0, 2.0, 0.0]);
                        dd
                    })
            }
            CoordinateKind::Spherical => {
                MetricField::new(chart, |x| {
                    let (r, th) = (x[0], x[1]);
                    Mat::diag(3, &[1.0, r * r, (r * th.sin()).powi(2)])
                })
                .with_partials(|x| {
                    let (r, th) = (x[0], x[1]);
                    let (s, c) = (th.sin(), th.cos());
                    [
                        Mat::diag(3, &[0.0, 2.0 * r, 2.0 * r * s * s]),
                        Mat::diag(3, &[0.0, 0.0, 2.0 * r * r * s * c]),
                        Mat::zeros(3),
                    ]
                })
                .with_second_partials(|x| {
                    let (r, th) = (x[0], x[1]);
                    let (s, c) = (th.sin(), th.cos());
                    let mut dd = [[Mat::zeros(3); 3]; 3];
                    dd[0][0] = Mat::diag(3, &[0.0, 2.0, 2.0 * s * s]);
                    dd[0][1] = Mat::diag(3, &[0.0, 0.0, 4.0 * r * s * c]);
                    dd[1][0] = dd[0][1];
                    dd[1][1] = Mat::diag(3, &[0.0, 0.0, 2.0 * r * r * (c * c - s * s)]);
                    dd
                })
            }
        }
    }

    /// e^{2 Omega} times a base metric. Analytic partials are chained when
    /// both factors supply them.
    pub fn conformal(omega: &ScalarField, base: &MetricField) -> Result<Self> {
        omega.chart().expect_same(base.chart())?;
        let chart = base.chart().clone();
        let dim = chart.dim();
        let om_v = omega.clone();
        let base_v = base.clone();
        let mut out = MetricField::new(chart, move |x| {
            base_v.at(x).scale((2.0 * om_v.eval(x)).exp())
        });
        if omega.has_analytic_partials() && base.d_value.is_some() {
            let om = omega.clone();
            let b = base.clone();
            out = out.with_partials(move |x| {
                let e = (2.0 * om.eval(x)).exp();
                let g = om.grad(x);
                let bv = b.at(x);
                let bd = b.partials(x);
                let mut o = [Mat::zeros(dim); 3];
                for (k, slot) in o.iter_mut().enumerate().take(dim) {
                    *slot = bd[k].add(&bv.scale(2.0 * g[k])).scale(e);
                }
                o
            });
            if base.dd_value.is_some() {
                let om = omega.clone();
                let b = base.clone();
                out = out.with_second_partials(move |x| {
                    let e = (2.0 * om.eval(x)).exp();
                    let g = om.grad(x);
                    let hs = om.hess(x);
                    let bv = b.at(x);
                    let bd = b.partials(x);
                    let bdd = b.second_partials(x);
                    let mut o = [[Mat::zeros(dim); 3]; 3];
                    for k in 0..dim {
                        for l in 0..dim {
                            // d_l d_k (e^{2W} B) = e^{2W} [ B_{,kl}
                            //   + 2 W_{,k} B_{,l} + 2 W_{,l} B_{,k}
                            //   + (2 W_{,kl} + 4 W_{,k} W_{,l}) B ]
                            o[k][l] = bdd[k][l]
                                .add(&bd[l].scale(2.0 * g[k]))
                                .add(&bd[k].scale(2.0 * g[l]))
                                .add(&bv.scale(2.0 * hs[(k, l)] + 4.0 * g[k] * g[l]))
                                .scale(e);
                        }
                    }
                    o
                });
            }
        }
        Ok(out)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.d_value.is_some()
    }

    pub fn has_analytic_second_partials(&self) -> bool {
        self.dd_value.is_some()
    }

    pub fn at(&self, x: &Point) -> Mat {
        (self.value)(x)
    }

    pub fn inverse_at(&self, x: &Point) -> Result<Mat> {
        self.at(x)
            .inverse()
            .ok_or_else(|| Error::SingularMetric { x: *x, detail: "determinant vanishes".into() })
    }

    pub fn partials(&self, x: &Point) -> [Mat; 3] {
        if let Some(d) = &self.d_value {
            return d(x);
        }
        let dim = self.chart.dim();
        let mut out = [Mat::zeros(dim); 3];
        for (k, slot) in out.iter_mut().enumerate().take(dim) {
            let h = self.chart.step(k);
            let v = |t: f64| (self.value)(&shifted(x, k, t - x[k]));
            let (p2, p1, m1, m2) =
                (v(x[k] + 2.0 * h), v(x[k] + h), v(x[k] - h), v(x[k] - 2.0 * h));
            *slot = Mat::from_fn(dim, |i, j| {
                (-p2[(i, j)] + 8.0 * p1[(i, j)] - 8.0 * m1[(i, j)] + m2[(i, j)]) / (12.0 * h)
            });
        }
        out
    }

    pub fn second_partials(&self, x: &Point) -> [[Mat; 3]; 3] {
        if let Some(dd) = &self.dd_value {
            return dd(x);
        }
        let dim = self.chart.dim();
        let mut out = [[Mat::zeros(dim); 3]; 3];
        for k in 0..dim {
            let h = self.chart.step(k);
            for l in 0..dim {
                out[k][l] = if k == l {
                    let v = |t: f64| (self.value)(&shifted(x, k, t - x[k]));
                    let (p2, p1, p0, m1, m2) = (
                        v(x[k] + 2.0 * h),
                        v(x[k] + h),
                        v(x[k]),
                        v(x[k] - h),
                        v(x[k] - 2.0 * h),
                    );
                    Mat::from_fn(dim, |i, j| {
                        (-p2[(i, j)] + 16.0 * p1[(i, j)] - 30.0 * p0[(i, j)] + 16.0 * m1[(i, j)]
                            - m2[(i, j)])
                            / (12.0 * h * h)
                    })
                } else {
                    let v = |t: f64| {
                        let xk = shifted(x, k, t - x[k]);
                        self.partials(&xk)[l]
                    };
                    let (p2, p1, m1, m2) =
                        (v(x[k] + 2.0 * h), v(x[k] + h), v(x[k] - h), v(x[k] - 2.0 * h));
                    Mat::from_fn(dim, |i, j| {
                        (-p2[(i, j)] + 8.0 * p1[(i, j)] - 8.0 * m1[(i, j)] + m2[(i, j)])
                            / (12.0 * h)
                    })
                };
            }
        }
        out
    }

    /// Checks positive-definiteness on every grid node.
    pub fn validate_spd(&self) -> Result<()> {
        for p in self.chart.nodes() {
            let g = self.at(&p);
            if g.max_asymmetry() > 1e-10 * (1.0 + g.sup_norm()) {
                return Err(Error::SingularMetric { x: p, detail: "not symmetric".into() });
            }
            if g.cholesky().is_none() {
                return Err(Error::SingularMetric {
                    x: p,
                    detail: "Cholesky factorization failed".into(),
                });
            }
        }
        Ok(())
    }
}

/// Affine connection coefficients Gamma^A_{BC}(x), stored with the
/// differentiation direction in the first lower slot: nabla_B e_C =
/// Gamma^A_{BC} e_A.
#[derive(Clone)]
pub struct ConnectionField {
    chart: Chart,
    coeffs: Arc<dyn Fn(&Point) -> Ten3 + Send + Sync>,
    d_coeffs: Option<Arc<dyn Fn(&Point) -> [Ten3; 3] + Send + Sync>>,
}

impl ConnectionField {
    pub fn new(chart: Chart, coeffs: impl Fn(&Point) -> Ten3 + Send + Sync + 'static) -> Self {
        ConnectionField { chart, coeffs: Arc::new(coeffs), d_coeffs: None }
    }

    /// d(x)[K] = d Gamma / d X^K
    pub fn with_partials(
        mut self,
        d: impl Fn(&Point) -> [Ten3; 3] + Send + Sync + 'static,
    ) -> Self {
        self.d_coeffs = Some(Arc::new(d));
        self
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.d_coeffs.is_some()
    }

    pub fn at(&self, x: &Point) -> Ten3 {
        (self.coeffs)(x)
    }

    pub fn partials(&self, x: &Point) -> [Ten3; 3] {
        if let Some(d) = &self.d_coeffs {
            return d(x);
        }
        let dim = self.chart.dim();
        let mut out = [Ten3::zeros(dim); 3];
        for (k, slot) in out.iter_mut().enumerate().take(dim) {
            let h = self.chart.step(k);
            let v = |t: f64| (self.coeffs)(&shifted(x, k, t - x[k]));
            let (p2, p1, m1, m2) =
                (v(x[k] + 2.0 * h), v(x[k] + h), v(x[k] - h), v(x[k] - 2.0 * h));
            *slot = Ten3::from_fn(dim, |a, b, c| {
                (-p2[(a, b, c)] + 8.0 * p1[(a, b, c)] - 8.0 * m1[(a, b, c)] + m2[(a, b, c)])
                    / (12.0 * h)
            });
        }
        out
    }

    /// Coordinate-basis torsion T^A_{BC} = Gamma^A_{BC} - Gamma^A_{CB}.
    pub fn torsion_at(&self, x: &Point) -> Ten3 {
        let g = self.at(x);
        Ten3::from_fn(self.chart.dim(), |a, b, c| g[(a, b, c)] - g[(a, c, b)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_polar_metric_partials_match_fd() {
        let chart = Chart::polar([0.5, 2.0], [0.0, 1.0], [33, 9]).unwrap();
        let g = MetricField::flat(chart.clone());
        let g_fd = MetricField::new(chart, |x| Mat::diag(2, &[1.0, x[0] * x[0]]));
        let x = [1.2, 0.3, 0.0];
        let a = g.partials(&x);
        let b = g_fd.partials(&x);
        for k in 0..2 {
            assert!(a[k].sub(&b[k]).sup_norm() < 1e-9);
        }
        let dda = g.second_partials(&x);
        let ddb = g_fd.second_partials(&x);
        for k in 0..2 {
            for l in 0..2 {
                assert!(dda[k][l].sub(&ddb[k][l]).sup_norm() < 1e-7);
            }
        }
    }

    #[test]
    fn conformal_metric_chains_partials() {
        let chart = Chart::cartesian_2d([[-1.0, 1.0], [-1.0, 1.0]], [33, 33]).unwrap();
        let omega = ScalarField::new(chart.clone(), |x| 0.3 * x[0] + 0.1 * x[1] * x[1])
            .with_gradient(|x| [0.3, 0.2 * x[1], 0.0])
            .with_hessian(|_| Mat::from_fn(2, |i, j| if i == 1 && j == 1 { 0.2 } else { 0.0 }));
        let base = MetricField::flat(chart.clone());
        let g = MetricField::conformal(&omega, &base).unwrap();
        assert!(g.has_analytic_partials() && g.has_analytic_second_partials());

        let g_fd = {
            let om = omega.clone();
            MetricField::new(chart, move |x| Mat::identity(2).scale((2.0 * om.eval(x)).exp()))
        };
        let x = [0.25, -0.4, 0.0];
        assert!(g.at(&x).sub(&g_fd.at(&x)).sup_norm() < 1e-14);
        for k in 0..2 {
            assert!(g.partials(&x)[k].sub(&g_fd.partials(&x)[k]).sup_norm() < 1e-6);
            for l in 0..2 {
                assert!(
                    g.second_partials(&x)[k][l].sub(&g_fd.second_partials(&x)[k][l]).sup_norm()
                        < 1e-5
                );
            }
        }
    }

    #[test]
    fn spd_validation_flags_indefinite_metrics() {
        let chart = Chart::cartesian_2d([[-1.0, 1.0], [-1.0, 1.0]], [9, 9]).unwrap();
        let bad = MetricField::new(chart.clone(), |x| Mat::diag(2, &[1.0, x[0]]));
        assert!(matches!(bad.validate_spd(), Err(Error::SingularMetric { .. })));
        let good = MetricField::flat(chart);
        assert!(good.validate_spd().is_ok());
    }
}
