//! Levi-Civita connections, curvature bundles, and the conformal shortcuts
//! for metrics of the form e^{2 Omega} times a base metric.
//!
//! Conventions. Connection coefficients are stored direction-first:
//! nabla_B e_C = Gamma^A_{BC} e_A. Curvature is
//!   R^A_{BCD} = d_C Gamma^A_{DB} - d_D Gamma^A_{CB}
//!             + Gamma^A_{CE} Gamma^E_{DB} - Gamma^A_{DE} Gamma^E_{CB},
//! which for symmetric connections coincides with the usual formula written
//! with Gamma^A_{BD} etc.; Ricci contracts the first and third slots,
//! R_{BD} = R^A_{BAD}. The round sphere then has positive scalar curvature.

use std::sync::Arc;

use crate::chart::{Chart, Point};
use crate::error::{Error, Result};
use crate::fields::{central1, shifted, MatField, ScalarField, Ten3Field, Ten4Field};
use crate::metric::{ConnectionField, MetricField};
use crate::tensor::{Mat, Ten3, Ten4};

/// Margin (in grid cells) consumed by one nested finite-difference layer.
const FD_MARGIN: usize = 4;

/// Levi-Civita connection of a metric:
/// Gamma^K_{IJ} = 1/2 G^{KL} (d_I G_{JL} + d_J G_{IL} - d_L G_{IJ}).
/// Analytic coefficient derivatives are wired through when the metric
/// carries analytic first and second partials.
pub fn levi_civita(metric: &MetricField) -> Result<ConnectionField> {
    metric.validate_spd()?;
    let chart = metric.chart().clone();
    let dim = chart.dim();

    let m = metric.clone();
    let coeffs = move |x: &Point| -> Ten3 {
        let inv = m.at(x).inverse().expect("SPD metric validated at construction");
        let dg = m.partials(x);
        Ten3::from_fn(dim, |k, i, j| {
            let mut s = 0.0;
            for l in 0..dim {
                s += inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
            }
            0.5 * s
        })
    };

    let mut conn = ConnectionField::new(chart, coeffs);
    if metric.has_analytic_partials() && metric.has_analytic_second_partials() {
        let m = metric.clone();
        conn = conn.with_partials(move |x| {
            let inv = m.at(x).inverse().expect("SPD metric validated at construction");
            let dg = m.partials(x);
            let ddg = m.second_partials(x);
            let mut out = [Ten3::zeros(dim); 3];
            for (mth, slot) in out.iter_mut().enumerate().take(dim) {
                // d_m G^{KL} = -G^{KA} G^{LB} d_m G_{AB}
                let dinv = Mat::from_fn(dim, |k, l| {
                    let mut s = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            s -= inv[(k, a)] * inv[(l, b)] * dg[mth][(a, b)];
                        }
                    }
                    s
                });
                *slot = Ten3::from_fn(dim, |k, i, j| {
                    let mut s = 0.0;
                    for l in 0..dim {
                        let bracket = dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)];
                        let dbracket = ddg[mth][i][(j, l)] + ddg[mth][j][(i, l)]
                            - ddg[mth][l][(i, j)];
                        s += dinv[(k, l)] * bracket + inv[(k, l)] * dbracket;
                    }
                    0.5 * s
                });
            }
            out
        });
    }
    Ok(conn)
}

#[derive(Clone, Copy, Debug)]
pub struct CurvatureSup {
    pub riemann: f64,
    pub ricci: f64,
    pub scalar: f64,
    pub torsion: f64,
    pub weyl_schouten: Option<f64>,
    /// Grid cells excluded at each boundary when taking the sups.
    pub margin: usize,
}

/// Pointwise curvature data of a connection plus the metric used to trace it.
#[derive(Clone)]
pub struct CurvatureBundle {
    chart: Chart,
    conn: ConnectionField,
    metric: MetricField,
    ricci_override: Option<Arc<dyn Fn(&Point) -> Mat + Send + Sync>>,
    pub weyl_schouten: Option<Ten3Field>,
    pub sup_norms: CurvatureSup,
}

fn riemann_from(conn: &ConnectionField, x: &Point) -> Ten4 {
    let d = conn.chart().dim();
    let g = conn.at(x);
    let dg = conn.partials(x);
    Ten4::from_fn(d, |a, b, c, dd| {
        let mut s = dg[c][(a, dd, b)] - dg[dd][(a, c, b)];
        for e in 0..d {
            s += g[(a, c, e)] * g[(e, dd, b)] - g[(a, dd, e)] * g[(e, c, b)];
        }
        s
    })
}

fn ricci_from_riemann(r: &Ten4, d: usize) -> Mat {
    Mat::from_fn(d, |b, dd| (0..d).map(|a| r[(a, b, a, dd)]).sum())
}

/// Curvature of a connection, traced with the given metric. Sup norms are
/// taken over grid nodes; in finite-difference mode a 4-cell band at each
/// boundary is excluded so every stencil stays inside the chart.
pub fn curvature(conn: &ConnectionField, metric: &MetricField) -> Result<CurvatureBundle> {
    conn.chart().expect_same(metric.chart())?;
    let chart = conn.chart().clone();
    let dim = chart.dim();
    let margin = if conn.has_analytic_partials() { 0 } else { FD_MARGIN };
    for a in 0..dim {
        if chart.grid_shape(a) <= 2 * margin {
            return Err(Error::StencilOutOfBounds(format!(
                "axis {a}: {} samples cannot host a margin of {margin}",
                chart.grid_shape(a)
            )));
        }
    }

    let mut sup = CurvatureSup {
        riemann: 0.0,
        ricci: 0.0,
        scalar: 0.0,
        torsion: 0.0,
        weyl_schouten: None,
        margin,
    };
    for p in chart.nodes_with_margin(margin) {
        let r = riemann_from(conn, &p);
        let ric = ricci_from_riemann(&r, dim);
        let inv = metric.inverse_at(&p)?;
        let mut scal = 0.0;
        for b in 0..dim {
            for d in 0..dim {
                scal += inv[(b, d)] * ric[(b, d)];
            }
        }
        sup.riemann = sup.riemann.max(r.sup_norm());
        sup.ricci = sup.ricci.max(ric.sup_norm());
        sup.scalar = sup.scalar.max(scal.abs());
        sup.torsion = sup.torsion.max(conn.torsion_at(&p).sup_norm());
    }

    Ok(CurvatureBundle {
        chart,
        conn: conn.clone(),
        metric: metric.clone(),
        ricci_override: None,
        weyl_schouten: None,
        sup_norms: sup,
    })
}

impl CurvatureBundle {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn riemann_at(&self, x: &Point) -> Ten4 {
        riemann_from(&self.conn, x)
    }

    pub fn ricci_at(&self, x: &Point) -> Mat {
        match &self.ricci_override {
            Some(f) => f(x),
            None => ricci_from_riemann(&self.riemann_at(x), self.chart.dim()),
        }
    }

    pub fn scalar_at(&self, x: &Point) -> f64 {
        let d = self.chart.dim();
        let ric = self.ricci_at(x);
        let inv = self.metric.at(x).inverse().expect("metric invertible on chart");
        let mut s = 0.0;
        for b in 0..d {
            for dd in 0..d {
                s += inv[(b, dd)] * ric[(b, dd)];
            }
        }
        s
    }

    pub fn torsion_at(&self, x: &Point) -> Ten3 {
        self.conn.torsion_at(x)
    }

    pub fn riemann(&self) -> Ten4Field {
        let conn = self.conn.clone();
        Ten4Field::new(self.chart.clone(), move |x| riemann_from(&conn, x))
    }

    pub fn ricci(&self) -> MatField {
        let this = self.clone();
        MatField::new(self.chart.clone(), move |x| this.ricci_at(x))
    }

    pub fn scalar(&self) -> ScalarField {
        let this = self.clone();
        ScalarField::new(self.chart.clone(), move |x| this.scalar_at(x))
    }

    pub fn torsion(&self) -> Ten3Field {
        let conn = self.conn.clone();
        Ten3Field::new(self.chart.clone(), move |x| conn.torsion_at(x))
    }

    /// Computes and stores the Weyl-Schouten field of the traced metric.
    /// Its stencil reaches two cells beyond the curvature stencil, hence the
    /// wider margin for the sup norm.
    pub fn attach_weyl_schouten(&mut self) -> Result<()> {
        let field = weyl_schouten(&self.metric)?;
        self.sup_norms.weyl_schouten = Some(field.sup_over_nodes(self.sup_norms.margin.max(FD_MARGIN + 2)));
        self.weyl_schouten = Some(field);
        Ok(())
    }

    /// Flatness verdict: sup|Ricci| scaled by the squared chart diameter.
    pub fn scaled_ricci_residual(&self) -> f64 {
        self.sup_norms.ricci * self.chart.diameter().powi(2)
    }
}

/// Scalar curvature of the 2D metric e^{2 Omega} delta:
/// R = -2 e^{-2 Omega} Lap(Omega), with the flat Laplacian taken in the
/// chart's coordinates.
pub fn conformal_scalar_2d(omega: &ScalarField) -> Result<ScalarField> {
    omega.chart().expect_dim(2)?;
    let om = omega.clone();
    Ok(ScalarField::new(omega.chart().clone(), move |x| {
        -2.0 * (-2.0 * om.eval(x)).exp() * om.flat_laplacian(x)
    }))
}

/// Ricci tensor of G = e^{2 Omega} B through the conformal transformation
/// formula
///   R_IJ = R0_IJ - (n-2) Hess_IJ - B_IJ Lap
///        + (n-2) (dOmega_I dOmega_J - B_IJ |dOmega|^2),
/// with Hess, Lap and |dOmega|^2 taken with respect to the base metric B.
/// The returned bundle evaluates Ricci through this formula while its
/// Riemann tensor comes from the Levi-Civita connection of G, so the two
/// routes stay independent.
pub fn conformal_ricci(omega: &ScalarField, base: &MetricField) -> Result<CurvatureBundle> {
    omega.chart().expect_same(base.chart())?;
    let chart = omega.chart().clone();
    let n = chart.dim();

    let base_conn = levi_civita(base)?;
    let g = MetricField::conformal(omega, base)?;
    let conn = levi_civita(&g)?;
    let mut bundle = curvature(&conn, &g)?;

    let om = omega.clone();
    let b = base.clone();
    let bconn = base_conn.clone();
    let analytic = omega.has_analytic_partials() && base.has_analytic_partials();
    let ricci = move |x: &Point| -> Mat {
        let grad = om.grad(x);
        let hess = om.hess(x);
        let gam = bconn.at(x);
        let bv = b.at(x);
        let binv = bv.inverse().expect("base metric invertible");
        let r0 = ricci_from_riemann(&riemann_from(&bconn, x), n);
        // covariant Hessian wrt the base connection
        let ch = Mat::from_fn(n, |i, j| {
            let mut s = hess[(i, j)];
            for k in 0..n {
                s -= gam[(k, i, j)] * grad[k];
            }
            s
        });
        let mut lap = 0.0;
        let mut grad2 = 0.0;
        for k in 0..n {
            for l in 0..n {
                lap += binv[(k, l)] * ch[(k, l)];
                grad2 += binv[(k, l)] * grad[k] * grad[l];
            }
        }
        let fnm2 = (n - 2) as f64;
        Mat::from_fn(n, |i, j| {
            r0[(i, j)] - fnm2 * ch[(i, j)] - bv[(i, j)] * lap + fnm2 * grad[i] * grad[j]
                - fnm2 * bv[(i, j)] * grad2
        })
    };

    let margin = if analytic && base_conn.has_analytic_partials() { 0 } else { FD_MARGIN };
    let mut sup_ricci = 0.0_f64;
    let mut sup_scalar = 0.0_f64;
    for p in chart.nodes_with_margin(margin) {
        let ric = ricci(&p);
        sup_ricci = sup_ricci.max(ric.sup_norm());
        let inv = g.inverse_at(&p)?;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += inv[(i, j)] * ric[(i, j)];
            }
        }
        sup_scalar = sup_scalar.max(s.abs());
    }
    bundle.sup_norms.ricci = sup_ricci;
    bundle.sup_norms.scalar = sup_scalar;
    bundle.sup_norms.margin = bundle.sup_norms.margin.max(margin);
    bundle.ricci_override = Some(Arc::new(ricci));
    Ok(bundle)
}

/// Weyl-Schouten tensor of a 3D metric,
///   C_IJK = nab_K R_IJ - nab_J R_IK
///         - 1/4 (G_IJ d_K R - G_IK d_J R);
/// its vanishing characterizes conformal flatness in three dimensions.
pub fn weyl_schouten(metric: &MetricField) -> Result<Ten3Field> {
    metric.chart().expect_dim(3)?;
    let chart = metric.chart().clone();
    let conn = levi_civita(metric)?;
    let m = metric.clone();

    let ricci_at = {
        let conn = conn.clone();
        move |x: &Point| ricci_from_riemann(&riemann_from(&conn, x), 3)
    };
    let scalar_at = {
        let ricci_at = ricci_at.clone();
        let m = m.clone();
        move |x: &Point| -> f64 {
            let inv = m.at(x).inverse().expect("metric invertible on chart");
            let ric = ricci_at(x);
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += inv[(i, j)] * ric[(i, j)];
                }
            }
            s
        }
    };

    let ch = chart.clone();
    Ok(Ten3Field::new(chart, move |x| {
        let gam = conn.at(x);
        let gv = m.at(x);
        let ric = ricci_at(x);
        // d_K R_IJ by finite differences of the Ricci closure
        let mut dric = [Mat::zeros(3); 3];
        for (k, slot) in dric.iter_mut().enumerate() {
            let h = ch.step(k);
            let v = |t: f64| ricci_at(&shifted(x, k, t - x[k]));
            let (p2, p1, m1, m2) = (v(x[k] + 2.0 * h), v(x[k] + h), v(x[k] - h), v(x[k] - 2.0 * h));
            *slot = Mat::from_fn(3, |i, j| {
                (-p2[(i, j)] + 8.0 * p1[(i, j)] - 8.0 * m1[(i, j)] + m2[(i, j)]) / (12.0 * h)
            });
        }
        let mut dscal = [0.0; 3];
        for (k, slot) in dscal.iter_mut().enumerate() {
            *slot = central1(|t| scalar_at(&shifted(x, k, t - x[k])), x[k], ch.step(k));
        }
        let cov = |k: usize, i: usize, j: usize| -> f64 {
            let mut s = dric[k][(i, j)];
            for l in 0..3 {
                s -= gam[(l, k, i)] * ric[(l, j)] + gam[(l, k, j)] * ric[(i, l)];
            }
            s
        };
        Ten3::from_fn(3, |i, j, k| {
            cov(k, i, j) - cov(j, i, k) - 0.25 * (gv[(i, j)] * dscal[k] - gv[(i, k)] * dscal[j])
        })
    }))
}
