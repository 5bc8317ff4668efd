//! Orthonormal material frames, the multiplicative decomposition of the
//! deformation gradient through them, commutation coefficients and torsion
//! in non-coordinate bases, and the canonical flat connection a frame
//! induces.

use std::sync::Arc;

use crate::chart::{Chart, Point};
use crate::error::{Error, Result};
use crate::fields::{central1, MatField, ScalarField, Ten3Field};
use crate::metric::{ConnectionField, MetricField};
use crate::tensor::{Mat, Ten3};
use crate::thermal::{thermal_conformal_factor, ExpansionLaw, TemperatureField};
use crate::tol;

type MatFn = Arc<dyn Fn(&Point) -> Mat + Send + Sync>;
type DMatFn = Arc<dyn Fn(&Point) -> [Mat; 3] + Send + Sync>;
type DDMatFn = Arc<dyn Fn(&Point) -> [[Mat; 3]; 3] + Send + Sync>;

/// An orthonormal frame on the material chart. Row A of `f_hat` holds the
/// chart components of the frame vector e_A; `f_hat_inv` holds the dual
/// coframe, so f_hat * f_hat_inv^T = I.
#[derive(Clone)]
pub struct FrameField {
    chart: Chart,
    f_hat: MatFn,
    f_hat_inv: MatFn,
    d_f_hat: Option<DMatFn>,
    d_f_hat_inv: Option<DMatFn>,
    dd_f_hat_inv: Option<DDMatFn>,
}

impl FrameField {
    /// Build from the frame matrix and its dual, checking the duality
    /// pairing on the grid.
    pub fn new(
        chart: Chart,
        f_hat: impl Fn(&Point) -> Mat + Send + Sync + 'static,
        f_hat_inv: impl Fn(&Point) -> Mat + Send + Sync + 'static,
    ) -> Result<Self> {
        let frame = FrameField {
            chart,
            f_hat: Arc::new(f_hat),
            f_hat_inv: Arc::new(f_hat_inv),
            d_f_hat: None,
            d_f_hat_inv: None,
            dd_f_hat_inv: None,
        };
        frame.validate_duality()?;
        Ok(frame)
    }

    /// Attach analytic first partials of f_hat and f_hat_inv.
    pub fn with_partials(
        mut self,
        d_f_hat: impl Fn(&Point) -> [Mat; 3] + Send + Sync + 'static,
        d_f_hat_inv: impl Fn(&Point) -> [Mat; 3] + Send + Sync + 'static,
    ) -> Self {
        self.d_f_hat = Some(Arc::new(d_f_hat));
        self.d_f_hat_inv = Some(Arc::new(d_f_hat_inv));
        self
    }

    /// Attach analytic second partials of the coframe (used for the
    /// curvature of the induced connection).
    pub fn with_second_partials(
        mut self,
        dd_f_hat_inv: impl Fn(&Point) -> [[Mat; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        self.dd_f_hat_inv = Some(Arc::new(dd_f_hat_inv));
        self
    }

    fn validate_duality(&self) -> Result<()> {
        let d = self.chart.dim();
        for p in self.chart.nodes() {
            let prod = self.f_hat(&p).mul(&self.f_hat_inv(&p).transpose());
            if prod.sub(&Mat::identity(d)).sup_norm() > tol::FRAME_INVERSE {
                return Err(Error::DegenerateFrame { x: p, det: self.f_hat(&p).det() });
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn f_hat(&self, x: &Point) -> Mat {
        (self.f_hat)(x)
    }

    pub fn f_hat_inv(&self, x: &Point) -> Mat {
        (self.f_hat_inv)(x)
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.d_f_hat.is_some() && self.d_f_hat_inv.is_some()
    }

    fn fd_partials(&self, f: &MatFn, x: &Point) -> [Mat; 3] {
        let d = self.chart.dim();
        let mut out = [Mat::zeros(d), Mat::zeros(d), Mat::zeros(d)];
        for (axis, slot) in out.iter_mut().enumerate().take(d) {
            let h = self.chart.step(axis);
            *slot = Mat::from_fn(d, |i, j| {
                central1(
                    |s| {
                        let mut q = *x;
                        q[axis] = s;
                        f(&q)[(i, j)]
                    },
                    x[axis],
                    h,
                )
            });
        }
        out
    }

    /// Partials of f_hat, analytic when attached, 4th-order stencils
    /// otherwise.
    pub fn d_f_hat(&self, x: &Point) -> [Mat; 3] {
        match &self.d_f_hat {
            Some(f) => f(x),
            None => self.fd_partials(&self.f_hat, x),
        }
    }

    pub fn d_f_hat_inv(&self, x: &Point) -> [Mat; 3] {
        match &self.d_f_hat_inv {
            Some(f) => f(x),
            None => self.fd_partials(&self.f_hat_inv, x),
        }
    }

    pub fn dd_f_hat_inv(&self, x: &Point) -> [[Mat; 3]; 3] {
        if let Some(f) = &self.dd_f_hat_inv {
            return f(x);
        }
        let d = self.chart.dim();
        let zero = [Mat::zeros(d), Mat::zeros(d), Mat::zeros(d)];
        let mut out = [zero, zero, zero];
        for l in 0..d {
            let h = self.chart.step(l);
            for j in 0..d {
                out[l][j] = Mat::from_fn(d, |a, b| {
                    central1(
                        |s| {
                            let mut q = *x;
                            q[l] = s;
                            self.d_f_hat_inv(&q)[j][(a, b)]
                        },
                        x[l],
                        h,
                    )
                });
            }
        }
        out
    }

    /// Rotate the frame: row vectors mix under the given rotation, leaving
    /// orthonormality intact.
    pub fn with_gauge(&self, gauge: &MatField) -> Result<FrameField> {
        self.chart.expect_same(gauge.chart())?;
        let d = self.chart.dim();
        for p in self.chart.nodes() {
            let lam = gauge.eval(&p);
            if lam.mul(&lam.transpose()).sub(&Mat::identity(d)).sup_norm() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "gauge field is not a rotation at {:?}",
                    p
                )));
            }
        }
        let (f, g) = (self.f_hat.clone(), gauge.clone());
        let f_hat: MatFn = Arc::new(move |x| g.eval(x).mul(&f(x)));
        let (fi, g) = (self.f_hat_inv.clone(), gauge.clone());
        let f_hat_inv: MatFn = Arc::new(move |x| g.eval(x).mul(&fi(x)));
        let frame = FrameField {
            chart: self.chart.clone(),
            f_hat,
            f_hat_inv,
            d_f_hat: None,
            d_f_hat_inv: None,
            dd_f_hat_inv: None,
        };
        frame.validate_duality()?;
        Ok(frame)
    }
}

fn is_conformal(g: &MetricField) -> bool {
    let d = g.chart().dim();
    for p in g.chart().nodes() {
        let m = g.at(&p);
        let scale = m[(0, 0)].abs();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { m[(0, 0)] } else { 0.0 };
                if (m[(i, j)] - want).abs() > 1e-14 * scale {
                    return false;
                }
            }
        }
    }
    true
}

/// Orthonormal frame of a positive-definite metric. The default gauge is
/// the inverse Cholesky factor; a metric recognized as scalar * identity
/// uses the exact conformal frame instead. A gauge rotation, when given,
/// post-rotates the frame.
pub fn orthonormal_frame(g: &MetricField, gauge: Option<&MatField>) -> Result<FrameField> {
    g.validate_spd()?;
    let d = g.chart().dim();

    let frame = if is_conformal(g) {
        let gm = g.clone();
        let vartheta = ScalarField::new(g.chart().clone(), move |x| gm.at(x)[(0, 0)].sqrt());
        conformal_frame(&vartheta)?
    } else {
        let gm = g.clone();
        let f_hat = move |x: &Point| -> Mat {
            let l = gm.at(x).cholesky().expect("metric lost positive-definiteness off grid");
            l.inverse().expect("Cholesky factor is invertible")
        };
        let gm = g.clone();
        let f_hat_inv = move |x: &Point| -> Mat {
            gm.at(x).cholesky().expect("metric lost positive-definiteness off grid").transpose()
        };
        FrameField::new(g.chart().clone(), f_hat, f_hat_inv)?
    };

    let frame = match gauge {
        Some(lam) => frame.with_gauge(lam)?,
        None => frame,
    };

    // orthonormality F G F^T = I on the grid
    for p in g.chart().nodes() {
        let f = frame.f_hat(&p);
        let res = f.mul(&g.at(&p)).mul(&f.transpose()).sub(&Mat::identity(d)).sup_norm();
        if res > tol::FRAME_ORTHONORMALITY {
            return Err(Error::SingularMetric {
                x: p,
                detail: format!("orthonormality residual {res:.3e} exceeds tolerance"),
            });
        }
    }
    Ok(frame)
}

/// The exact frame of the conformal metric vartheta^2 * identity:
/// f_hat = vartheta^{-1} I. Analytic partials chain through the scalar
/// field when it carries them.
pub fn conformal_frame(vartheta: &ScalarField) -> Result<FrameField> {
    let chart = vartheta.chart().clone();
    let d = chart.dim();
    for p in chart.nodes() {
        let v = vartheta.eval(&p);
        if !(v > 0.0) {
            return Err(Error::InvalidInput(format!(
                "conformal factor must be positive, got {v} at {:?}",
                p
            )));
        }
    }
    let v = vartheta.clone();
    let f_hat = move |x: &Point| Mat::identity(d).scale(1.0 / v.eval(x));
    let v = vartheta.clone();
    let f_hat_inv = move |x: &Point| Mat::identity(d).scale(v.eval(x));
    let mut frame = FrameField::new(chart, f_hat, f_hat_inv)?;

    if vartheta.has_analytic_partials() {
        let v = vartheta.clone();
        let d_f_hat = move |x: &Point| -> [Mat; 3] {
            let val = v.eval(x);
            let grad = v.grad(x);
            [0, 1, 2].map(|k| Mat::identity(d).scale(-grad[k] / (val * val)))
        };
        let v = vartheta.clone();
        let d_f_hat_inv = move |x: &Point| -> [Mat; 3] {
            let grad = v.grad(x);
            [0, 1, 2].map(|k| Mat::identity(d).scale(grad[k]))
        };
        frame = frame.with_partials(d_f_hat, d_f_hat_inv);
        let v = vartheta.clone();
        frame = frame.with_second_partials(move |x: &Point| -> [[Mat; 3]; 3] {
            let h = v.hess(x);
            [0, 1, 2].map(|l| [0, 1, 2].map(|j| Mat::identity(d).scale(h[(l, j)])))
        });
    }
    Ok(frame)
}

/// The thermal part of the deformation gradient, a uniform pointwise
/// expansion by vartheta = e^{omega(T)}.
#[derive(Clone)]
pub struct ThermalDeformationGradient {
    pub vartheta: ScalarField,
}

impl ThermalDeformationGradient {
    pub fn new(temp: &TemperatureField, law: &ExpansionLaw) -> Self {
        let omega = thermal_conformal_factor(temp, law);
        let w = omega.clone();
        let mut vartheta =
            ScalarField::new(temp.chart().clone(), move |x| w.eval(x).exp());
        if omega.has_analytic_partials() {
            let w = omega.clone();
            vartheta = vartheta.with_gradient(move |x| {
                let e = w.eval(x).exp();
                let g = w.grad(x);
                [e * g[0], e * g[1], e * g[2]]
            });
            let w = omega;
            let dim = temp.chart().dim();
            vartheta = vartheta.with_hessian(move |x| {
                let e = w.eval(x).exp();
                let g = w.grad(x);
                let h = w.hess(x);
                Mat::from_fn(dim, |i, j| e * (h[(i, j)] + g[i] * g[j]))
            });
        }
        ThermalDeformationGradient { vartheta }
    }

    /// The orthonormal frame this thermal expansion induces.
    pub fn frame(&self) -> Result<FrameField> {
        conformal_frame(&self.vartheta)
    }
}

/// The deformation gradient re-expressed in the orthonormal material frame:
/// (F_e)^a_A = sum_B F^a_B f_hat[A][B]. For the conformal frame this is
/// exactly F * F_T^{-1}, the elastic factor of the decomposition.
pub fn elastic_part(f: &MatField, frame: &FrameField) -> Result<MatField> {
    f.chart().expect_same(frame.chart())?;
    let (fm, fr) = (f.clone(), frame.clone());
    Ok(MatField::new(f.chart().clone(), move |x| {
        fm.eval(x).mul(&fr.f_hat(x).transpose())
    }))
}

/// Commutation coefficients c_{AB}^C of the frame vector fields, stored as
/// [(C, A, B)]: [e_A, e_B] = c_{AB}^C e_C.
pub fn commutation_coefficients(frame: &FrameField) -> Ten3Field {
    let fr = frame.clone();
    let d = frame.chart().dim();
    Ten3Field::new(frame.chart().clone(), move |x| {
        let f = fr.f_hat(x);
        let df = fr.d_f_hat(x);
        let finv = fr.f_hat_inv(x);
        Ten3::from_fn(d, |c, a, b| {
            let mut s = 0.0;
            for dd in 0..d {
                let mut bracket = 0.0;
                for e in 0..d {
                    bracket += f[(a, e)] * df[e][(b, dd)] - f[(b, e)] * df[e][(a, dd)];
                }
                s += finv[(c, dd)] * bracket;
            }
            s
        })
    })
}

/// Connection coefficients in the frame basis, stored as [(C, A, B)] with A
/// the differentiation direction:
/// Gamma_bar_{AB}^C = f_A^D f^C_F (d_D f_B^F + f_B^E Gamma^F_{DE}).
pub fn frame_connection(frame: &FrameField, gamma: &ConnectionField) -> Result<Ten3Field> {
    frame.chart().expect_same(gamma.chart())?;
    let (fr, gm) = (frame.clone(), gamma.clone());
    let d = frame.chart().dim();
    Ok(Ten3Field::new(frame.chart().clone(), move |x| {
        let f = fr.f_hat(x);
        let df = fr.d_f_hat(x);
        let finv = fr.f_hat_inv(x);
        let g = gm.at(x);
        Ten3::from_fn(d, |c, a, b| {
            let mut s = 0.0;
            for dir in 0..d {
                for ff in 0..d {
                    let mut inner = df[dir][(b, ff)];
                    for e in 0..d {
                        inner += f[(b, e)] * g[(ff, dir, e)];
                    }
                    s += f[(a, dir)] * finv[(c, ff)] * inner;
                }
            }
            s
        })
    }))
}

/// Torsion in the non-coordinate basis:
/// T^C_{AB} = Gamma_bar_{AB}^C - Gamma_bar_{BA}^C - c_{AB}^C.
pub fn noncoordinate_torsion(frame_conn: &Ten3Field, c: &Ten3Field) -> Result<Ten3Field> {
    frame_conn.chart().expect_same(c.chart())?;
    let (g, cc) = (frame_conn.clone(), c.clone());
    let d = frame_conn.chart().dim();
    Ok(Ten3Field::new(frame_conn.chart().clone(), move |x| {
        let gv = g.eval(x);
        let cv = cc.eval(x);
        Ten3::from_fn(d, |k, a, b| gv[(k, a, b)] - gv[(k, b, a)] - cv[(k, a, b)])
    }))
}

/// The canonical connection induced by a frame, Gamma^I_{JK} =
/// sum_A f_A^I d_J f^A_K, the unique connection parallelizing the frame:
/// its curvature vanishes identically while torsion survives.
pub fn ap_connection(frame: &FrameField) -> ConnectionField {
    let fr = frame.clone();
    let d = frame.chart().dim();
    let conn = ConnectionField::new(frame.chart().clone(), move |x| {
        let f = fr.f_hat(x);
        let dfinv = fr.d_f_hat_inv(x);
        Ten3::from_fn(d, |i, j, k| {
            (0..d).map(|a| f[(a, i)] * dfinv[j][(a, k)]).sum()
        })
    });
    if frame.has_analytic_partials() && frame.dd_f_hat_inv.is_some() {
        let fr = frame.clone();
        conn.with_partials(move |x| {
            let f = fr.f_hat(x);
            let df = fr.d_f_hat(x);
            let dfinv = fr.d_f_hat_inv(x);
            let ddfinv = fr.dd_f_hat_inv(x);
            [0, 1, 2].map(|l| {
                Ten3::from_fn(d, |i, j, k| {
                    (0..d)
                        .map(|a| {
                            df[l][(a, i)] * dfinv[j][(a, k)] + f[(a, i)] * ddfinv[l][j][(a, k)]
                        })
                        .sum()
                })
            })
        })
    } else {
        conn
    }
}

/// Residual of covariant constancy of the frame under a connection:
/// sup over frame legs of |d_J E^I + Gamma^I_{JK} E^K|.
pub fn parallel_transport_residual(
    frame: &FrameField,
    conn: &ConnectionField,
    x: &Point,
) -> f64 {
    let d = frame.chart().dim();
    let df = frame.d_f_hat(x);
    let f = frame.f_hat(x);
    let g = conn.at(x);
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut r = df[j][(a, i)];
                for k in 0..d {
                    r += g[(i, j, k)] * f[(a, k)];
                }
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{curvature, levi_civita};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chart2() -> Chart {
        Chart::cartesian_2d([[-1.0, 1.0], [-1.0, 1.0]], [9, 9]).unwrap()
    }

    fn chart3() -> Chart {
        Chart::cartesian_3d([[-1.0, 1.0]; 3], [9, 9, 9]).unwrap()
    }

    fn vartheta_field(chart: &Chart) -> ScalarField {
        // smooth positive factor with analytic partials
        ScalarField::new(chart.clone(), |x| 1.0 + 0.1 * (x[0] * x[0] + x[1] * x[1]))
            .with_gradient(|x| [0.2 * x[0], 0.2 * x[1], 0.0])
            .with_hessian(|_| Mat::diag(3, &[0.2, 0.2, 0.0]))
    }

    #[test]
    fn identity_metric_gives_identity_frame() {
        let g = MetricField::flat(chart2());
        let frame = orthonormal_frame(&g, None).unwrap();
        let x = [0.3, -0.4, 0.0];
        assert!(frame.f_hat(&x).sub(&Mat::identity(2)).sup_norm() < 1e-15);
    }

    #[test]
    fn conformal_metric_uses_exact_shortcut() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let vv = v.clone();
        let g = MetricField::new(chart.clone(), move |x| {
            let t = vv.eval(x);
            Mat::identity(3).scale(t * t)
        });
        let frame = orthonormal_frame(&g, None).unwrap();
        let x = [0.5, -0.25, 0.75];
        let want = Mat::identity(3).scale(1.0 / v.eval(&x));
        assert!(frame.f_hat(&x).sub(&want).sup_norm() < 1e-14);

        let direct = conformal_frame(&v).unwrap();
        assert!(frame.f_hat(&x).sub(&direct.f_hat(&x)).sup_norm() < 1e-14);
    }

    fn random_spd_metric(chart: &Chart, seed: u64) -> MetricField {
        let d = chart.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp: Vec<f64> = (0..9).map(|_| 0.2 * (rng.gen::<f64>() - 0.5)).collect();
        MetricField::new(chart.clone(), move |x| {
            let mut a = Mat::identity(d);
            for i in 0..d {
                for j in 0..d {
                    a[(i, j)] += amp[i * 3 + j] * (x[0] + 0.5 * x[1]).sin()
                        + 0.1 * amp[j * 3 + i] * x[(i + j) % d];
                }
            }
            // Gram matrix keeps it symmetric positive-definite
            a.transpose().mul(&a)
        })
    }

    #[test]
    fn orthonormality_holds_for_random_metrics_and_gauges() {
        let chart = chart3();
        for seed in 0..5u64 {
            let g = random_spd_metric(&chart, seed);
            let frame = orthonormal_frame(&g, None).unwrap();
            for p in chart.nodes() {
                let f = frame.f_hat(&p);
                let res = f.mul(&g.at(&p)).mul(&f.transpose()).sub(&Mat::identity(3));
                assert!(res.sup_norm() < 1e-10);
            }

            // rotation about the z axis with position-dependent angle
            let gauge = MatField::new(chart.clone(), |x| {
                let t = 0.7 * x[0];
                let (s, c) = t.sin_cos();
                Mat::from_fn(3, |i, j| {
                    [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]][i][j]
                })
            });
            let rotated = orthonormal_frame(&g, Some(&gauge)).unwrap();
            for p in chart.nodes_with_margin(2) {
                let f = rotated.f_hat(&p);
                let res = f.mul(&g.at(&p)).mul(&f.transpose()).sub(&Mat::identity(3));
                assert!(res.sup_norm() < 1e-10);
            }
        }
    }

    #[test]
    fn elastic_part_examples_and_gauge_covariance() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let frame = conformal_frame(&v).unwrap();

        // uniform free expansion F = vartheta I is elastically trivial
        let vv = v.clone();
        let f_thermal =
            MatField::new(chart.clone(), move |x| Mat::identity(3).scale(vv.eval(x)));
        let fe = elastic_part(&f_thermal, &frame).unwrap();
        let x = [0.4, 0.1, -0.6];
        assert!(fe.eval(&x).sub(&Mat::identity(3)).sup_norm() < 1e-14);

        // flat metric leaves F untouched
        let id_frame = orthonormal_frame(&MetricField::flat(chart.clone()), None).unwrap();
        let f_any = MatField::new(chart.clone(), |x| {
            Mat::from_fn(3, |i, j| if i == j { 1.0 + 0.1 * x[0] } else { 0.05 * x[1] })
        });
        let fe_flat = elastic_part(&f_any, &id_frame).unwrap();
        assert!(fe_flat.eval(&x).sub(&f_any.eval(&x)).sup_norm() < 1e-15);

        // gauge covariance: F_e transforms by right multiplication with
        // the transposed rotation
        let gauge = MatField::new(chart.clone(), |x| {
            let t = 0.5 + 0.3 * x[1];
            let (s, c) = t.sin_cos();
            Mat::from_fn(3, |i, j| {
                [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]][i][j]
            })
        });
        let rotated = frame.with_gauge(&gauge).unwrap();
        let fe_rot = elastic_part(&f_any, &rotated).unwrap();
        let want = fe.eval(&x); // conformal-frame elastic part of f_thermal
        let _ = want;
        let lhs = fe_rot.eval(&x);
        let rhs = elastic_part(&f_any, &frame).unwrap().eval(&x).mul(&gauge.eval(&x).transpose());
        assert!(lhs.sub(&rhs).sup_norm() < 1e-13);
    }

    #[test]
    fn free_energy_invariance_across_descriptions() {
        // mu tr(g F G^{-1} F^T) computed in coordinates equals the same
        // contraction of F_e with the frame metric delta, any gauge
        let chart = chart3();
        let g_mat = random_spd_metric(&chart, 11);
        let frame = orthonormal_frame(&g_mat, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let vals: [f64; 9] = rng.gen();
            let f = Mat::from_fn(3, |i, j| {
                (if i == j { 1.0 } else { 0.0 }) + 0.3 * (vals[3 * i + j] - 0.5)
            });
            let x = [
                -0.8 + 1.6 * rng.gen::<f64>(),
                -0.8 + 1.6 * rng.gen::<f64>(),
                -0.8 + 1.6 * rng.gen::<f64>(),
            ];
            let mu = 1.7;
            let ginv = g_mat.inverse_at(&x).unwrap();
            let riem = mu * f.mul(&ginv).mul(&f.transpose()).trace();
            let fe = f.mul(&frame.f_hat(&x).transpose());
            let lr = mu * fe.mul(&fe.transpose()).trace();
            assert!(
                (riem - lr).abs() < 1e-12 * riem.abs().max(1.0),
                "{riem} vs {lr}"
            );
        }
    }

    #[test]
    fn commutation_constant_frame_vanishes() {
        let chart = chart2();
        let frame = orthonormal_frame(&MetricField::flat(chart.clone()), None).unwrap();
        let c = commutation_coefficients(&frame);
        assert!(c.sup_over_nodes(2) < 1e-13);
    }

    #[test]
    fn commutation_conformal_closed_form_and_antisymmetry() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let frame = conformal_frame(&v).unwrap();
        let c = commutation_coefficients(&frame);
        for p in chart.nodes_with_margin(2) {
            let val = c.eval(&p);
            let t = v.eval(&p);
            let grad = v.grad(&p);
            for cc in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        let da = if a == cc { 1.0 } else { 0.0 };
                        let db = if b == cc { 1.0 } else { 0.0 };
                        let want = (da * grad[b] - db * grad[a]) / (t * t);
                        assert!(
                            (val[(cc, a, b)] - want).abs() < 1e-12,
                            "c[{cc}{a}{b}] at {:?}",
                            p
                        );
                        assert!((val[(cc, a, b)] + val[(cc, b, a)]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn frame_connection_conformal_closed_form() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let vv = v.clone();
        let vg = v.clone();
        let vh = v.clone();
        let metric = MetricField::new(chart.clone(), move |x| {
            let t = vv.eval(x);
            Mat::identity(3).scale(t * t)
        })
        .with_partials(move |x| {
            let t = vg.eval(x);
            let grad = vg.grad(x);
            [0, 1, 2].map(|k| Mat::identity(3).scale(2.0 * t * grad[k]))
        })
        .with_second_partials(move |x| {
            let t = vh.eval(x);
            let grad = vh.grad(x);
            let hess = vh.hess(x);
            [0, 1, 2].map(|l| {
                [0, 1, 2].map(|k| {
                    Mat::identity(3).scale(2.0 * (grad[l] * grad[k] + t * hess[(l, k)]))
                })
            })
        });
        let frame = conformal_frame(&v).unwrap();
        let lc = levi_civita(&metric).unwrap();
        let bar = frame_connection(&frame, &lc).unwrap();
        for p in chart.nodes_with_margin(1) {
            let val = bar.eval(&p);
            let t = v.eval(&p);
            let grad = v.grad(&p);
            for c in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        // Gamma_bar_{AB}^C = (grad_B delta_A^C - grad_C delta_{AB}) / t^2
                        let dac = if a == c { 1.0 } else { 0.0 };
                        let dab = if a == b { 1.0 } else { 0.0 };
                        let want = (grad[b] * dac - grad[c] * dab) / (t * t);
                        assert!(
                            (val[(c, a, b)] - want).abs() < 1e-11,
                            "Gamma_bar[{c}{a}{b}] at {:?}: {} vs {want}",
                            p,
                            val[(c, a, b)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn frame_connection_of_levi_civita_is_metric_compatible() {
        // lowering with delta, the frame connection of a Levi-Civita
        // connection is antisymmetric in its last two indices; the residual
        // here is pure 4th-order stencil truncation (4.3e-6 observed at
        // this spacing, falling 8x per halving)
        let chart = Chart::cartesian_3d([[-1.0, 1.0]; 3], [17, 17, 17]).unwrap();
        let g = random_spd_metric(&chart, 8);
        let frame = orthonormal_frame(&g, None).unwrap();
        let lc = levi_civita(&g).unwrap();
        let bar = frame_connection(&frame, &lc).unwrap();
        for p in chart.nodes_with_margin(3) {
            let val = bar.eval(&p);
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        assert!(
                            (val[(c, a, b)] + val[(b, a, c)]).abs() < 1e-5,
                            "at {:?}: [{c}{a}{b}]",
                            p
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn torsion_vanishes_for_levi_civita_in_frame_basis() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let vv = v.clone();
        let metric = MetricField::new(chart.clone(), move |x| {
            let t = vv.eval(x);
            Mat::identity(3).scale(t * t)
        });
        let frame = conformal_frame(&v).unwrap();
        let lc = levi_civita(&metric).unwrap();
        let bar = frame_connection(&frame, &lc).unwrap();
        let c = commutation_coefficients(&frame);
        let t = noncoordinate_torsion(&bar, &c).unwrap();
        assert!(t.sup_over_nodes(3) < 1e-8);

        // a generic metric's Cholesky frame
        let g = random_spd_metric(&chart, 21);
        let frame_g = orthonormal_frame(&g, None).unwrap();
        let lc_g = levi_civita(&g).unwrap();
        let bar_g = frame_connection(&frame_g, &lc_g).unwrap();
        let c_g = commutation_coefficients(&frame_g);
        let t_g = noncoordinate_torsion(&bar_g, &c_g).unwrap();
        assert!(t_g.sup_over_nodes(3) < 1e-6);

        // zero connection: torsion reduces to minus the commutation
        let zero = ConnectionField::new(chart.clone(), |_| Ten3::zeros(3));
        let bar_zero = frame_connection(&frame_g, &zero).unwrap();
        let t_zero = noncoordinate_torsion(&bar_zero, &c_g).unwrap();
        let p = [0.25, -0.5, 0.125];
        let lhs = t_zero.eval(&p);
        let gv = bar_zero.eval(&p);
        let cv = c_g.eval(&p);
        for k in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    let want = gv[(k, a, b)] - gv[(k, b, a)] - cv[(k, a, b)];
                    assert!((lhs[(k, a, b)] - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ap_connection_conformal_closed_form() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let frame = conformal_frame(&v).unwrap();
        let ap = ap_connection(&frame);
        for p in chart.nodes_with_margin(1) {
            let val = ap.at(&p);
            let t = v.eval(&p);
            let grad = v.grad(&p);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let want = if i == k { grad[j] / t } else { 0.0 };
                        assert!(
                            (val[(i, j, k)] - want).abs() < 1e-13,
                            "Gamma[{i}{j}{k}] at {:?}",
                            p
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ap_connection_is_flat_with_torsion() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let frame = conformal_frame(&v).unwrap();
        let ap = ap_connection(&frame);
        let vv = v.clone();
        let metric = MetricField::new(chart.clone(), move |x| {
            let t = vv.eval(x);
            Mat::identity(3).scale(t * t)
        });
        let bundle = curvature(&ap, &metric).unwrap();
        assert!(bundle.sup_norms.riemann < 1e-8, "riemann {}", bundle.sup_norms.riemann);
        assert!(bundle.sup_norms.torsion > 1e-3, "torsion {}", bundle.sup_norms.torsion);
    }

    #[test]
    fn ap_connection_parallelizes_the_frame() {
        let chart = chart3();
        let v = vartheta_field(&chart);
        let frame = conformal_frame(&v).unwrap();
        let ap = ap_connection(&frame);
        for p in chart.nodes_with_margin(2) {
            assert!(parallel_transport_residual(&frame, &ap, &p) < 1e-12);
        }

        // FD route: a Cholesky frame without analytic partials; the
        // residual is stencil truncation (2.2e-6 observed, 4th order)
        let fine = Chart::cartesian_3d([[-1.0, 1.0]; 3], [17, 17, 17]).unwrap();
        let g = random_spd_metric(&fine, 5);
        let frame_g = orthonormal_frame(&g, None).unwrap();
        let ap_g = ap_connection(&frame_g);
        for p in fine.nodes_with_margin(3) {
            assert!(parallel_transport_residual(&frame_g, &ap_g, &p) < 1e-5);
        }
    }

    #[test]
    fn reversed_composition_does_not_parallelize_the_frame() {
        // The opposite composition order, Gamma^i_{jk} = (F^-1)^a_i d_j F^a_k,
        // flips the sign of the gradient terms for conformal frames and fails
        // covariant constancy with defect 2 sup_j |d_j vartheta| / vartheta^2.
        // Pinned so the convention cannot drift silently.
        let chart = chart3();
        let v = vartheta_field(&chart);
        let frame = conformal_frame(&v).unwrap();
        let fr = frame.clone();
        let reversed = ConnectionField::new(chart.clone(), move |x| {
            let finv = fr.f_hat_inv(x);
            let df = fr.d_f_hat(x);
            Ten3::from_fn(3, |i, j, k| (0..3).map(|a| finv[(a, i)] * df[j][(a, k)]).sum())
        });
        let p = [0.5, -0.25, 0.75];
        assert!(parallel_transport_residual(&frame, &ap_connection(&frame), &p) < 1e-12);
        let defect = parallel_transport_residual(&frame, &reversed, &p);
        let t = v.eval(&p);
        let g = v.grad(&p);
        let want = 2.0 * g.iter().fold(0.0f64, |m, c| m.max(c.abs())) / (t * t);
        assert!((defect - want).abs() < 1e-10, "defect {defect} want {want}");
    }

    #[test]
    fn ap_connection_constant_frame_is_zero() {
        let chart = chart2();
        let frame = orthonormal_frame(&MetricField::flat(chart.clone()), None).unwrap();
        let ap = ap_connection(&frame);
        assert!(ap.at(&[0.1, 0.2, 0.0]).sup_norm() < 1e-14);
    }

    #[test]
    fn ap_flatness_for_generic_frame_fd() {
        // flatness of the canonical connection is frame-independent
        let chart = Chart::cartesian_3d([[-1.0, 1.0]; 3], [17, 17, 17]).unwrap();
        let g = random_spd_metric(&chart, 13);
        let frame = orthonormal_frame(&g, None).unwrap();
        let ap = ap_connection(&frame);
        let bundle = curvature(&ap, &g).unwrap();
        assert!(
            bundle.sup_norms.riemann < 5e-4,
            "riemann sup {}",
            bundle.sup_norms.riemann
        );
    }

    #[test]
    fn thermal_gradient_matches_law() {
        let chart = chart2();
        let law = ExpansionLaw::constant(300.0, 1e-3);
        let temp = crate::stress_free::radial_scalar_field(
            &chart,
            |r| 300.0 + 50.0 * r,
            |_| 50.0,
            |_| 0.0,
        );
        let ft = ThermalDeformationGradient::new(&temp, &law);
        let x: Point = [0.5, 0.25, 0.0];
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let want = (1e-3 * 50.0 * r).exp();
        assert!((ft.vartheta.eval(&x) - want).abs() < 1e-14);
        assert!(ft.frame().is_ok());
    }
}
