//! Temperature-dependent material metrics G(X, T) = H(X) e^{2 omega(T)},
//! their anisotropic generalization, volume forms, referential mass density,
//! and the two-metric Jacobian of a deformation.

use std::sync::Arc;

use crate::chart::{Chart, Point};
use crate::error::{Error, Result};
use crate::fields::{central1, ScalarField};
use crate::metric::MetricField;
use crate::quad::{adaptive_simpson};
use crate::tensor::{Mat, Vec3};
use crate::tol;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Temperature profiles are scalar fields on the material chart.
pub type TemperatureField = ScalarField;

/// Thermal expansion law: scale factor omega(T) with omega(T0) = 0 and
/// coefficient alpha(T) = d omega / d T.
#[derive(Clone)]
pub struct ExpansionLaw {
    t0: f64,
    omega: RealFn,
    alpha: RealFn,
    dalpha: Option<RealFn>,
}

fn law_fd_step(t: f64) -> f64 {
    1e-4 * (1.0 + t.abs())
}

impl ExpansionLaw {
    /// Constant coefficient: omega(T) = alpha0 (T - T0).
    pub fn constant(t0: f64, alpha0: f64) -> Self {
        ExpansionLaw {
            t0,
            omega: Arc::new(move |t| alpha0 * (t - t0)),
            alpha: Arc::new(move |_| alpha0),
            dalpha: Some(Arc::new(|_| 0.0)),
        }
    }

    /// From a scale function; alpha comes from differentiation. The supplied
    /// omega is shifted so that omega(T0) = 0.
    pub fn from_omega(t0: f64, omega: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let om = Arc::new(omega);
        let off = om(t0);
        let om_shift: RealFn = {
            let om = om.clone();
            Arc::new(move |t| om(t) - off)
        };
        let alpha: RealFn = Arc::new(move |t| central1(|u| om(u), t, law_fd_step(t)));
        ExpansionLaw { t0, omega: om_shift, alpha, dalpha: None }
    }

    /// From a coefficient; omega comes from adaptive quadrature of alpha.
    pub fn from_alpha(t0: f64, alpha: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let al = Arc::new(alpha);
        let al2 = al.clone();
        let omega: RealFn = Arc::new(move |t| {
            adaptive_simpson(&|u| al2(u), t0, t, tol::QUADRATURE_ABS)
                .expect("expansion-law quadrature diverged")
        });
        ExpansionLaw { t0, omega, alpha: al, dalpha: None }
    }

    /// Both closures supplied; their consistency d omega / dT = alpha is
    /// checked on a sample of the given temperature range.
    pub fn from_both(
        t0: f64,
        omega: impl Fn(f64) -> f64 + Send + Sync + 'static,
        alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_range: [f64; 2],
    ) -> Result<Self> {
        let om = Arc::new(omega);
        let al = Arc::new(alpha);
        let samples = 17;
        for i in 0..samples {
            let t = t_range[0] + (t_range[1] - t_range[0]) * i as f64 / (samples - 1) as f64;
            let d = central1(|u| om(u), t, law_fd_step(t));
            let a = al(t);
            if (d - a).abs() > 1e-6 * (1.0 + a.abs()) {
                return Err(Error::InvalidInput(format!(
                    "omega and alpha disagree at T = {t}: d omega/dT = {d}, alpha = {a}"
                )));
            }
        }
        let off = om(t0);
        let om_shift: RealFn = Arc::new(move |t| om(t) - off);
        Ok(ExpansionLaw { t0, omega: om_shift, alpha: al, dalpha: None })
    }

    pub fn with_dalpha(mut self, dalpha: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.dalpha = Some(Arc::new(dalpha));
        self
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn omega(&self, t: f64) -> f64 {
        (self.omega)(t)
    }

    pub fn alpha(&self, t: f64) -> f64 {
        (self.alpha)(t)
    }

    /// d alpha / dT, analytic when supplied.
    pub fn dalpha(&self, t: f64) -> f64 {
        match &self.dalpha {
            Some(f) => f(t),
            None => {
                let al = &self.alpha;
                central1(|u| al(u), t, law_fd_step(t))
            }
        }
    }
}

/// omega(T(X)) as a scalar field, with partials chained through the law when
/// the temperature field carries analytic ones.
pub fn thermal_conformal_factor(temp: &TemperatureField, law: &ExpansionLaw) -> ScalarField {
    let chart = temp.chart().clone();
    let dim = chart.dim();
    let (t, l) = (temp.clone(), law.clone());
    let mut out = ScalarField::new(chart, move |x| l.omega(t.eval(x)));
    if temp.has_analytic_partials() {
        let (t, l) = (temp.clone(), law.clone());
        out = out.with_gradient(move |x| {
            let a = l.alpha(t.eval(x));
            let g = t.grad(x);
            [a * g[0], a * g[1], a * g[2]]
        });
        let (t, l) = (temp.clone(), law.clone());
        out = out.with_hessian(move |x| {
            let tv = t.eval(x);
            let a = l.alpha(tv);
            let da = l.dalpha(tv);
            let g = t.grad(x);
            let h = t.hess(x);
            Mat::from_fn(dim, |i, j| da * g[i] * g[j] + a * h[(i, j)])
        });
    }
    out
}

/// Material metric G = H e^{2 omega(T)}.
pub fn build_material_metric(
    base: &MetricField,
    temp: &TemperatureField,
    law: &ExpansionLaw,
) -> Result<MetricField> {
    base.chart().expect_same(temp.chart())?;
    let omega = thermal_conformal_factor(temp, law);
    MetricField::conformal(&omega, base)
}

/// Per-direction expansion: three covector fields (the rows of `coframe`)
/// with one expansion law each.
#[derive(Clone)]
pub struct AnisotropicExpansion {
    chart: Chart,
    laws: Vec<ExpansionLaw>,
    coframe: Arc<dyn Fn(&Point) -> Mat + Send + Sync>,
}

impl AnisotropicExpansion {
    pub fn new(
        chart: Chart,
        laws: Vec<ExpansionLaw>,
        coframe: impl Fn(&Point) -> Mat + Send + Sync + 'static,
    ) -> Result<Self> {
        if laws.len() != chart.dim() {
            return Err(Error::DimensionMismatch { expected: chart.dim(), got: laws.len() });
        }
        let cf = Arc::new(coframe);
        for p in chart.nodes() {
            let m = cf(&p);
            let scale = m.sup_norm().max(1.0);
            if m.det().abs() < 1e-12 * scale.powi(chart.dim() as i32) {
                return Err(Error::DegenerateFrame { x: p, det: m.det() });
            }
        }
        Ok(AnisotropicExpansion { chart, laws, coframe: cf })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }
}

/// G = sum_I e^{2 omega_I(T)} E^I (x) E^I over the coframe covectors.
pub fn build_anisotropic_metric(
    aniso: &AnisotropicExpansion,
    temp: &TemperatureField,
) -> Result<MetricField> {
    aniso.chart.expect_same(temp.chart())?;
    let dim = aniso.chart.dim();
    let laws = aniso.laws.clone();
    let cf = aniso.coframe.clone();
    let t = temp.clone();
    Ok(MetricField::new(aniso.chart.clone(), move |x| {
        let tv = t.eval(x);
        let e = cf(x);
        Mat::from_fn(dim, |j, k| {
            (0..dim)
                .map(|i| (2.0 * laws[i].omega(tv)).exp() * e[(i, j)] * e[(i, k)])
                .sum()
        })
    }))
}

/// sqrt(det G): density of the Riemannian volume form in chart coordinates.
pub fn volume_form(metric: &MetricField) -> ScalarField {
    let m = metric.clone();
    ScalarField::new(metric.chart().clone(), move |x| m.at(x).det().sqrt())
}

/// Referential mass density rho0(X, T0) together with its expansion law.
#[derive(Clone)]
pub struct MassDensity {
    pub rho_ref: ScalarField,
    pub law: ExpansionLaw,
}

/// rho0(X, T) = rho0(X, T0) exp(-N int_{T0}^T alpha); N is the chart
/// dimension, so mass rho0 dV stays constant as the body heats up.
pub fn density_at_temperature(density: &MassDensity, x: &Point, t: f64) -> Result<f64> {
    let n = density.rho_ref.chart().dim() as f64;
    let al = density.law.clone();
    let integral = adaptive_simpson(&|u| al.alpha(u), density.law.t0(), t, tol::QUADRATURE_ABS)?;
    Ok(density.rho_ref.eval(x) * (-n * integral).exp())
}

/// A configuration map and its gradient F^a_A.
#[derive(Clone)]
pub struct DeformationMap {
    chart: Chart,
    phi: Arc<dyn Fn(&Point) -> Point + Send + Sync>,
    grad: Arc<dyn Fn(&Point) -> Mat + Send + Sync>,
}

impl DeformationMap {
    pub fn new(
        chart: Chart,
        phi: impl Fn(&Point) -> Point + Send + Sync + 'static,
        grad: impl Fn(&Point) -> Mat + Send + Sync + 'static,
    ) -> Self {
        DeformationMap { chart, phi: Arc::new(phi), grad: Arc::new(grad) }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn phi(&self, x: &Point) -> Point {
        (self.phi)(x)
    }

    pub fn grad(&self, x: &Point) -> Mat {
        (self.grad)(x)
    }
}

/// J(X) = det F sqrt(det g(phi(X)) / det G(X)); J = 1 is incompressibility.
pub fn jacobian(
    map: &DeformationMap,
    material: &MetricField,
    spatial: &MetricField,
) -> Result<ScalarField> {
    map.chart().expect_same(material.chart())?;
    for p in map.chart().nodes() {
        let f = map.grad(&p);
        if f.det().abs() < 1e-12 {
            return Err(Error::SingularF { x: p });
        }
    }
    let (m, s, mp) = (material.clone(), spatial.clone(), map.clone());
    Ok(ScalarField::new(map.chart().clone(), move |x| {
        let f = mp.grad(x);
        let y = mp.phi(x);
        f.det() * (s.at(&y).det() / m.at(x).det()).sqrt()
    }))
}

/// sup |J - 1| over the chart grid.
pub fn incompressibility_defect(j: &ScalarField) -> f64 {
    j.chart().nodes().fold(0.0, |m, p| f64::max(m, (j.eval(&p) - 1.0).abs()))
}

/// Rotation-invariant data of a symmetric matrix: (trace, trace of the
/// adjugate, determinant). Two symmetric matrices share eigenvalues iff
/// these match.
pub fn symmetric_invariants(m: &Mat) -> Vec3 {
    let d = m.dim();
    let tr = m.trace();
    let det = m.det();
    let tr_adj = match d {
        2 => tr, // the adjugate of a 2x2 matrix has the same trace
        3 => {
            let mut s = 0.0;
            for i in 0..3 {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                s += m[(j, j)] * m[(k, k)] - m[(j, k)] * m[(k, j)];
            }
            s
        }
        _ => 0.0,
    };
    [tr, tr_adj, det]
}
