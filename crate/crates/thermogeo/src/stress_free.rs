//! Classification and construction of zero-stress temperature distributions:
//! the 2D harmonic-exponent criterion and its radial family, cone geometry,
//! the inverse coefficient problem alpha(T), and the nonlinear 3D flatness
//! system with its closed-form solution.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::chart::{Chart, CoordinateKind, Point};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::{conformal_ricci, conformal_scalar_2d};
use crate::interp::MonotoneCubic;
use crate::metric::MetricField;
use crate::tensor::Mat;
use crate::thermal::TemperatureField;
use crate::thermal::ExpansionLaw;
use crate::tol;

/// Verdict of a flatness check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlatnessVerdict {
    Flat,
    NotFlat,
    /// Curvature vanishes, but the domain is multiply connected and the
    /// conformal factor varies, so a single-valued flat realization is
    /// obstructed globally.
    FlatLocalOnly,
}

impl FlatnessVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlatnessVerdict::Flat => "flat",
            FlatnessVerdict::NotFlat => "not_flat",
            FlatnessVerdict::FlatLocalOnly => "flat_local_only",
        }
    }
}

/// Outcome of a stress-free classification. Residual norms are already
/// scaled by diameter^2 so they are dimensionless and comparable to the
/// stored tolerance.
#[derive(Clone, Debug)]
pub struct FlatnessReport {
    pub residual_norms: Vec<(String, f64)>,
    pub verdict: FlatnessVerdict,
    pub tolerance: f64,
    pub notes: String,
}

impl FlatnessReport {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residual_norms.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// The classification a stress-free candidate must meet: anything but
    /// `not_flat`.
    pub fn passes(&self) -> bool {
        self.verdict != FlatnessVerdict::NotFlat
    }
}

fn flatness_tolerance(field: &ScalarField) -> f64 {
    if field.has_analytic_partials() {
        tol::FLAT_ANALYTIC
    } else {
        let chart = field.chart();
        let mut h: f64 = 0.0;
        for a in 0..chart.dim() {
            h = h.max(chart.step(a));
        }
        tol::GRID_FLATNESS_C * h.powi(4)
    }
}

fn field_is_constant(field: &ScalarField) -> bool {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in field.chart().nodes() {
        let v = field.eval(&p);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo <= 1e-10 * (1.0 + hi.abs().max(lo.abs()))
}

/// Classify the 2D metric e^{2 Omega} (flat base) by the harmonicity of
/// Omega: the scalar curvature is -2 e^{-2 Omega} (flat Laplacian of Omega),
/// so zero stress means Laplacian Omega = 0. On a full annulus a varying
/// Omega is flagged `flat_local_only`: curvature vanishes but matching the
/// flat pieces around the hole is globally obstructed.
pub fn check_stress_free_2d(omega_field: &ScalarField) -> Result<FlatnessReport> {
    let chart = omega_field.chart();
    chart.expect_dim(2)?;
    let margin = if omega_field.has_analytic_partials() { 0 } else { 2 };
    let diam2 = chart.diameter().powi(2);

    let lap = {
        let f = omega_field.clone();
        ScalarField::new(chart.clone(), move |x| f.flat_laplacian(x))
    };
    let sup_lap = lap.sup_over_nodes(margin) * diam2;
    let sup_scalar = conformal_scalar_2d(omega_field)?.sup_over_nodes(margin) * diam2;

    let tolerance = flatness_tolerance(omega_field);
    let curvature_free = sup_lap < tolerance;
    let constant = field_is_constant(omega_field);

    let (verdict, notes) = if !curvature_free {
        (FlatnessVerdict::NotFlat, "nonzero curvature: stresses are unavoidable".to_string())
    } else if chart.is_full_annulus() && !constant {
        (
            FlatnessVerdict::FlatLocalOnly,
            "curvature-free, but the annulus is multiply connected and the scale factor varies; \
             a global single-valued flat realization is obstructed"
                .to_string(),
        )
    } else if constant {
        (FlatnessVerdict::Flat, "uniform scale factor: homothety of the flat base".to_string())
    } else {
        (
            FlatnessVerdict::Flat,
            "curvature-free on a simply connected chart; globally realizable here, though \
             extension around a full annulus would be obstructed"
                .to_string(),
        )
    };

    Ok(FlatnessReport {
        residual_norms: vec![
            ("laplacian".to_string(), sup_lap),
            ("scalar_curvature".to_string(), sup_scalar),
        ],
        verdict,
        tolerance,
        notes,
    })
}

/// The radial zero-stress family e^{2 Omega} = gamma R^{2 beta}.
#[derive(Clone, Copy, Debug)]
pub struct RadialStressFreeFamily {
    pub gamma: f64,
    pub beta: f64,
    pub r0: f64,
    pub r1: f64,
}

impl RadialStressFreeFamily {
    pub fn new(gamma: f64, beta: f64, r0: f64, r1: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
        }
        if !(r0 > 0.0 && r0 < r1) {
            return Err(Error::InvalidInput(format!(
                "radii must satisfy 0 < R0 < R1, got [{r0}, {r1}]"
            )));
        }
        Ok(RadialStressFreeFamily { gamma, beta, r0, r1 })
    }

    /// e^{2 Omega(R)}.
    pub fn conformal_factor(&self, r: f64) -> f64 {
        self.gamma * r.powf(2.0 * self.beta)
    }

    /// Omega = (1/2) ln gamma + beta ln R as a field on `chart`.
    pub fn omega_field(&self, chart: &Chart) -> Result<ScalarField> {
        chart.expect_dim(2)?;
        let (g, b) = (self.gamma, self.beta);
        Ok(radial_scalar_field(
            chart,
            move |r| 0.5 * g.ln() + b * r.ln(),
            move |r| b / r,
            move |r| -b / (r * r),
        ))
    }
}

/// A scalar field depending on the radius alone, with analytic partials.
/// On Cartesian charts the radius is |X|; on polar, cylindrical, and
/// spherical charts it is the first coordinate.
pub fn radial_scalar_field(
    chart: &Chart,
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ddf: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> ScalarField {
    let dim = chart.dim();
    match chart.kind() {
        CoordinateKind::Cartesian => {
            let f = Arc::new(f);
            let df = Arc::new(df);
            let ddf = Arc::new(ddf);
            let radius = move |x: &Point| -> f64 {
                x[..dim].iter().map(|c| c * c).sum::<f64>().sqrt()
            };
            let (fv, r0) = (f.clone(), radius);
            let field = ScalarField::new(chart.clone(), move |x| fv(r0(x)));
            let (d1, r1) = (df.clone(), radius);
            let field = field.with_gradient(move |x| {
                let r = r1(x);
                let s = d1(r) / r;
                [s * x[0], s * x[1], if dim == 3 { s * x[2] } else { 0.0 }]
            });
            field.with_hessian(move |x| {
                let r = radius(x);
                let d1 = df(r);
                let d2 = ddf(r);
                Mat::from_fn(dim, |i, j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    d2 * x[i] * x[j] / (r * r) + d1 * (delta / r - x[i] * x[j] / (r * r * r))
                })
            })
        }
        _ => {
            let f = Arc::new(f);
            let fv = f.clone();
            ScalarField::new(chart.clone(), move |x| fv(x[0]))
                .with_gradient(move |x| [df(x[0]), 0.0, 0.0])
                .with_hessian(move |x| {
                    let mut h = Mat::zeros(dim);
                    h[(0, 0)] = ddf(x[0]);
                    h
                })
        }
    }
}

/// Temperature realizing the radial family under a constant coefficient:
/// T(R) = T0 + (beta / alpha0) ln(R / R0). Anchoring T(R0) = T0 fixes the
/// overall scale at gamma = R0^{-2 beta}; any other gamma differs by a
/// homothety, equivalently a uniform temperature shift.
pub fn radial_family_to_temperature(
    family: &RadialStressFreeFamily,
    alpha0: f64,
    t0: f64,
    chart: &Chart,
) -> Result<TemperatureField> {
    if !(alpha0 > 0.0) {
        return Err(Error::InvalidInput(format!("alpha0 must be positive, got {alpha0}")));
    }
    chart.expect_dim(2)?;
    let k = family.beta / alpha0;
    let r0 = family.r0;
    Ok(radial_scalar_field(
        chart,
        move |r| t0 + k * (r / r0).ln(),
        move |r| k / r,
        move |r| -k / (r * r),
    ))
}

/// An annular piece of a cone: opening parameter c = 1/(beta + 1) and
/// deficit angle 2 pi (1 - 1/|c|).
#[derive(Clone, Copy, Debug)]
pub struct ConeDescriptor {
    pub beta: f64,
    pub c: f64,
    pub deficit_angle: f64,
    /// Whether the cone embeds isometrically in Euclidean 3-space as a
    /// surface of revolution (deficit strictly between 0 and 2 pi).
    pub embeddable_in_r3: bool,
}

pub fn cone_from_beta(beta: f64) -> Result<ConeDescriptor> {
    if beta == -1.0 {
        return Err(Error::DegenerateCone);
    }
    let c = 1.0 / (beta + 1.0);
    let deficit_angle = 2.0 * PI * (1.0 - 1.0 / c.abs());
    Ok(ConeDescriptor {
        beta,
        c,
        deficit_angle,
        embeddable_in_r3: -2.0 < beta && beta < 0.0,
    })
}

/// Solution of the inverse coefficient problem for a radial temperature:
/// alpha(R) = beta / (R T'(R)), with the monotone profile inverted so the
/// coefficient can also be read as a function of temperature.
pub struct InverseAlphaSolution {
    alpha_of_r: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    t_of_r: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    r_of_t: MonotoneCubic,
    pub r_range: [f64; 2],
    pub t_range: [f64; 2],
}

impl InverseAlphaSolution {
    pub fn alpha_at_radius(&self, r: f64) -> f64 {
        (self.alpha_of_r)(r)
    }

    pub fn temperature_at_radius(&self, r: f64) -> f64 {
        (self.t_of_r)(r)
    }

    /// alpha(T) through the inverted profile.
    pub fn alpha_at_temperature(&self, t: f64) -> f64 {
        (self.alpha_of_r)(self.r_of_t.eval(t))
    }

    /// The coefficient as an expansion law anchored at T(R0).
    pub fn expansion_law(&self) -> ExpansionLaw {
        let t0 = (self.t_of_r)(self.r_range[0]);
        let a = self.alpha_of_r.clone();
        let inv = self.r_of_t.clone();
        ExpansionLaw::from_alpha(t0, move |t| a(inv.eval(t)))
    }
}

/// Solve alpha(T) given a radial temperature profile and the target family
/// exponent beta. The profile must be strictly monotone on `r_range`.
pub fn inverse_alpha_radial(
    t_profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    t_derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    beta: f64,
    r_range: [f64; 2],
) -> Result<InverseAlphaSolution> {
    let [r0, r1] = r_range;
    if !(r0 > 0.0 && r0 < r1) {
        return Err(Error::InvalidInput(format!(
            "radii must satisfy 0 < R0 < R1, got [{r0}, {r1}]"
        )));
    }
    let t_profile = Arc::new(t_profile);
    let t_derivative = Arc::new(t_derivative);

    let n = tol::INVERSION_SAMPLES;
    let mut rs = Vec::with_capacity(n);
    let mut ts = Vec::with_capacity(n);
    let sign = t_derivative(r0).signum();
    for i in 0..n {
        let r = r0 + (r1 - r0) * i as f64 / (n - 1) as f64;
        let d = t_derivative(r);
        if d == 0.0 || d.signum() != sign {
            return Err(Error::NonMonotoneTemperature { lo: r0, hi: r1 });
        }
        rs.push(r);
        ts.push(t_profile(r));
    }
    // invert T(R): interpolate R against increasing T
    let (xs, ys) = if sign > 0.0 {
        (ts.clone(), rs.clone())
    } else {
        (ts.iter().rev().copied().collect(), rs.iter().rev().copied().collect())
    };
    let r_of_t = MonotoneCubic::new(xs, ys)?;

    let td = t_derivative.clone();
    let alpha_of_r: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
        Arc::new(move |r| beta / (r * td(r)));
    let t_lo = t_profile(r0);
    let t_hi = t_profile(r1);
    Ok(InverseAlphaSolution {
        alpha_of_r,
        t_of_r: t_profile,
        r_of_t,
        r_range,
        t_range: [t_lo.min(t_hi), t_lo.max(t_hi)],
    })
}

/// Pointwise residual of the zero-stress condition for T on a flat 2D chart:
/// Laplacian of omega(T) expanded by the chain rule,
/// (d alpha / dT) |grad T|^2 + alpha(T) Laplacian T.
pub fn zero_stress_residual(temp: &TemperatureField, law: &ExpansionLaw) -> Result<ScalarField> {
    let chart = temp.chart();
    chart.expect_dim(2)?;
    chart.expect_kind(CoordinateKind::Cartesian)?;
    let (t, l) = (temp.clone(), law.clone());
    Ok(ScalarField::new(chart.clone(), move |x| {
        let tv = t.eval(x);
        let g = t.grad(x);
        let grad2 = g[0] * g[0] + g[1] * g[1];
        l.dalpha(tv) * grad2 + l.alpha(tv) * t.flat_laplacian(x)
    }))
}

/// Residuals of the six nonlinear flatness equations for G = e^{2 Omega}
/// delta on a 3D Cartesian chart. Ordering: the three off-diagonal
/// equations Omega_{,IJ} - Omega_{,I} Omega_{,J} for (I,J) = (1,2), (1,3),
/// (2,3), then the three diagonal equations
/// Omega_{,II} + Laplacian Omega + sum_{J != I} Omega_{,J}^2.
pub fn flatness_system_residuals_3d(omega_field: &ScalarField) -> Result<[ScalarField; 6]> {
    let chart = omega_field.chart();
    chart.expect_dim(3)?;
    chart.expect_kind(CoordinateKind::Cartesian)?;

    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let mut out: Vec<ScalarField> = Vec::with_capacity(6);
    for &(i, j) in &pairs {
        let f = omega_field.clone();
        out.push(ScalarField::new(chart.clone(), move |x| {
            let g = f.grad(x);
            f.hess(x)[(i, j)] - g[i] * g[j]
        }));
    }
    for i in 0..3 {
        let f = omega_field.clone();
        out.push(ScalarField::new(chart.clone(), move |x| {
            let g = f.grad(x);
            let h = f.hess(x);
            let lap = h[(0, 0)] + h[(1, 1)] + h[(2, 2)];
            let cross: f64 = (0..3).filter(|&j| j != i).map(|j| g[j] * g[j]).sum();
            h[(i, i)] + lap + cross
        }));
    }
    Ok([
        out[0].clone(),
        out[1].clone(),
        out[2].clone(),
        out[3].clone(),
        out[4].clone(),
        out[5].clone(),
    ])
}

/// The same six residuals with the quadratic gradient terms dropped, the
/// small-Omega form in which linear profiles become exactly stress-free.
pub fn flatness_system_linearized_residuals_3d(
    omega_field: &ScalarField,
) -> Result<[ScalarField; 6]> {
    let chart = omega_field.chart();
    chart.expect_dim(3)?;
    chart.expect_kind(CoordinateKind::Cartesian)?;

    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let mut out: Vec<ScalarField> = Vec::with_capacity(6);
    for &(i, j) in &pairs {
        let f = omega_field.clone();
        out.push(ScalarField::new(chart.clone(), move |x| f.hess(x)[(i, j)]));
    }
    for i in 0..3 {
        let f = omega_field.clone();
        out.push(ScalarField::new(chart.clone(), move |x| {
            let h = f.hess(x);
            h[(i, i)] + h[(0, 0)] + h[(1, 1)] + h[(2, 2)]
        }));
    }
    Ok([
        out[0].clone(),
        out[1].clone(),
        out[2].clone(),
        out[3].clone(),
        out[4].clone(),
        out[5].clone(),
    ])
}

/// Classify a 3D conformal factor by the full nonlinear system, reporting
/// both the full and the linearized per-equation residuals together with
/// the conformal Ricci sup.
pub fn check_stress_free_3d(omega_field: &ScalarField) -> Result<FlatnessReport> {
    let chart = omega_field.chart();
    let margin = if omega_field.has_analytic_partials() { 0 } else { 2 };
    let diam2 = chart.diameter().powi(2);

    let full = flatness_system_residuals_3d(omega_field)?;
    let lin = flatness_system_linearized_residuals_3d(omega_field)?;
    let base = MetricField::flat(chart.clone());
    let ricci_sup = conformal_ricci(omega_field, &base)?.sup_norms.ricci * diam2;

    let mut residual_norms = vec![("ricci".to_string(), ricci_sup)];
    let mut worst: f64 = 0.0;
    for (k, field) in full.iter().enumerate() {
        let v = field.sup_over_nodes(margin) * diam2;
        worst = worst.max(v);
        residual_norms.push((format!("eq{}", k + 1), v));
    }
    for (k, field) in lin.iter().enumerate() {
        residual_norms.push((format!("eq{}_lin", k + 1), field.sup_over_nodes(margin) * diam2));
    }

    let tolerance = flatness_tolerance(omega_field);
    let (verdict, notes) = if worst < tolerance {
        (
            FlatnessVerdict::Flat,
            "all six flatness equations vanish: realizable without stress".to_string(),
        )
    } else {
        (FlatnessVerdict::NotFlat, "the nonlinear flatness system has a residual".to_string())
    };

    Ok(FlatnessReport { residual_norms, verdict, tolerance, notes })
}

/// The closed-form 3D solution Omega = -ln(c0 |X - origin|^2): the material
/// is carried to the flat metric by the inversion through `origin`.
pub fn closed_form_3d(chart: &Chart, c0: f64, origin: Point) -> Result<ScalarField> {
    chart.expect_dim(3)?;
    chart.expect_kind(CoordinateKind::Cartesian)?;
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!("c0 must be positive, got {c0}")));
    }
    if chart.contains(&origin) {
        return Err(Error::OriginInDomain);
    }
    let f = ScalarField::new(chart.clone(), move |x| {
        let s: f64 = (0..3).map(|i| (x[i] - origin[i]).powi(2)).sum();
        -(c0 * s).ln()
    });
    let f = f.with_gradient(move |x| {
        let d = [x[0] - origin[0], x[1] - origin[1], x[2] - origin[2]];
        let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        [-2.0 * d[0] / s, -2.0 * d[1] / s, -2.0 * d[2] / s]
    });
    Ok(f.with_hessian(move |x| {
        let d = [x[0] - origin[0], x[1] - origin[1], x[2] - origin[2]];
        let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        Mat::from_fn(3, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            -2.0 * delta / s + 4.0 * d[i] * d[j] / (s * s)
        })
    }))
}

/// The inversion X -> origin + (X - origin) / (c0 |X - origin|^2), an
/// isometry from the closed-form material metric to the flat one.
pub fn inversion_map(c0: f64, origin: Point, x: &Point) -> Point {
    let d = [x[0] - origin[0], x[1] - origin[1], x[2] - origin[2]];
    let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    [
        origin[0] + d[0] / (c0 * s),
        origin[1] + d[1] / (c0 * s),
        origin[2] + d[2] / (c0 * s),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::central1;
    use crate::thermal::build_material_metric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn annulus() -> Chart {
        Chart::annulus([0.5, 2.0], [17, 17]).unwrap()
    }

    #[test]
    fn constant_omega_is_flat() {
        let omega = ScalarField::constant(annulus(), 0.7);
        let rep = check_stress_free_2d(&omega).unwrap();
        assert_eq!(rep.verdict, FlatnessVerdict::Flat);
        assert!(rep.residual("laplacian").unwrap() < 1e-12);
    }

    #[test]
    fn radial_family_members_are_curvature_free() {
        for beta in [-1.5, -0.5, 0.5, 1.0] {
            let family = RadialStressFreeFamily::new(1.3, beta, 0.5, 2.0).unwrap();
            let omega = family.omega_field(&annulus()).unwrap();
            let rep = check_stress_free_2d(&omega).unwrap();
            assert!(rep.passes(), "beta = {beta}: {:?}", rep.verdict);
            assert_eq!(rep.verdict, FlatnessVerdict::FlatLocalOnly, "beta = {beta}");
            assert!(rep.residual("scalar_curvature").unwrap() < 1e-10);
        }
    }

    #[test]
    fn sector_is_globally_fine() {
        let sector = Chart::polar([0.5, 2.0], [0.0, PI / 3.0], [17, 17]).unwrap();
        let family = RadialStressFreeFamily::new(1.0, -0.5, 0.5, 2.0).unwrap();
        let omega = family.omega_field(&sector).unwrap();
        let rep = check_stress_free_2d(&omega).unwrap();
        assert_eq!(rep.verdict, FlatnessVerdict::Flat);
        assert!(rep.notes.contains("simply connected"));
    }

    #[test]
    fn quadratic_omega_residual_is_four_diam_squared() {
        let chart = annulus();
        let omega = radial_scalar_field(&chart, |r| r * r, |r| 2.0 * r, |_| 2.0);
        let rep = check_stress_free_2d(&omega).unwrap();
        assert_eq!(rep.verdict, FlatnessVerdict::NotFlat);
        let expect = 4.0 * chart.diameter().powi(2);
        let got = rep.residual("laplacian").unwrap();
        assert!((got - expect).abs() < 1e-9 * expect, "got {got}, want {expect}");
    }

    #[test]
    fn cartesian_harmonic_and_nonharmonic_omegas() {
        let chart = Chart::cartesian_2d([[0.3, 1.5], [0.2, 1.1]], [17, 17]).unwrap();
        // harmonic: Re (x + i y)^2 = x^2 - y^2
        let harmonic = ScalarField::new(chart.clone(), |x| x[0] * x[0] - x[1] * x[1])
            .with_gradient(|x| [2.0 * x[0], -2.0 * x[1], 0.0])
            .with_hessian(|_| Mat::diag(2, &[2.0, -2.0]));
        assert_eq!(check_stress_free_2d(&harmonic).unwrap().verdict, FlatnessVerdict::Flat);

        let bumped = ScalarField::new(chart, |x| x[0] * x[0]);
        assert_eq!(check_stress_free_2d(&bumped).unwrap().verdict, FlatnessVerdict::NotFlat);
    }

    #[test]
    fn temperature_round_trip_reproduces_family() {
        let chart = annulus();
        let alpha0 = 2e-3;
        let t0 = 300.0;
        let beta = 0.8;
        let r0: f64 = 0.5;
        let family =
            RadialStressFreeFamily::new(r0.powf(-2.0 * beta), beta, r0, 2.0).unwrap();
        let temp = radial_family_to_temperature(&family, alpha0, t0, &chart).unwrap();
        let law = ExpansionLaw::constant(t0, alpha0);
        let base = MetricField::flat(chart.clone());
        let g = build_material_metric(&base, &temp, &law).unwrap();
        for p in chart.nodes() {
            let want = family.conformal_factor(p[0]);
            let got = g.at(&p)[(0, 0)];
            assert!((got / want - 1.0).abs() < 1e-12, "at R = {}", p[0]);
        }

        // beta = alpha0 / 2 gives the half-log profile
        let family2 = RadialStressFreeFamily::new(1.0, alpha0 / 2.0, r0, 2.0).unwrap();
        let temp2 = radial_family_to_temperature(&family2, alpha0, t0, &chart).unwrap();
        let r = 1.7;
        assert!((temp2.eval(&[r, 0.0, 0.0]) - (t0 + 0.5 * (r / r0).ln())).abs() < 1e-12);

        // beta = 0 leaves the temperature uniform
        let family0 = RadialStressFreeFamily::new(1.0, 0.0, r0, 2.0).unwrap();
        let temp0 = radial_family_to_temperature(&family0, alpha0, t0, &chart).unwrap();
        assert_eq!(temp0.eval(&[1.234, 0.5, 0.0]), t0);
    }

    #[test]
    fn cone_descriptors() {
        let flat = cone_from_beta(0.0).unwrap();
        assert_eq!(flat.deficit_angle, 0.0);

        let half = cone_from_beta(-0.5).unwrap();
        assert!((half.c - 2.0).abs() < 1e-15);
        assert!((half.deficit_angle - PI).abs() < 1e-12);
        assert!(half.embeddable_in_r3);

        let excess = cone_from_beta(1.0).unwrap();
        assert!((excess.deficit_angle + 2.0 * PI).abs() < 1e-12);
        assert!(!excess.embeddable_in_r3);

        let inverted = cone_from_beta(-1.5).unwrap();
        assert!((inverted.c + 2.0).abs() < 1e-15);
        assert!((inverted.deficit_angle - PI).abs() < 1e-12);
        assert!(inverted.embeddable_in_r3);

        assert!(matches!(cone_from_beta(-1.0), Err(Error::DegenerateCone)));
    }

    #[test]
    fn deficit_matches_beta_formula() {
        for beta in [-1.9, -1.2, -0.7, -0.3, 0.4, 2.5] {
            let cone = cone_from_beta(beta).unwrap();
            let expect = 2.0 * PI * (1.0 - (beta + 1.0).abs());
            assert!((cone.deficit_angle - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_alpha_three_closed_forms() {
        let beta = 0.6;
        let r0 = 0.5;
        let range = [r0, 2.0];

        // linear profile: alpha(R) = alpha0 R0 / R
        let b = 40.0;
        let lin = inverse_alpha_radial(
            move |r| 300.0 + b * (r - r0),
            move |_| b,
            beta,
            range,
        )
        .unwrap();
        let alpha0 = beta / (r0 * b);
        for r in [0.5, 0.9, 1.7] {
            assert!((lin.alpha_at_radius(r) - alpha0 * r0 / r).abs() < 1e-14);
        }

        // reciprocal profile: alpha(R) = alpha0 R / R0
        let c = -30.0; // T increasing
        let rec = inverse_alpha_radial(
            move |r| 300.0 + c * (1.0 / r - 1.0 / r0),
            move |r| -c / (r * r),
            beta,
            range,
        )
        .unwrap();
        let alpha0 = -beta * r0 / c;
        for r in [0.5, 1.1, 2.0] {
            assert!((rec.alpha_at_radius(r) - alpha0 * r / r0).abs() < 1e-14);
        }

        // log profile: alpha constant
        let k = 25.0;
        let log = inverse_alpha_radial(
            move |r| 300.0 + k * (r / r0).ln(),
            move |r| k / r,
            beta,
            range,
        )
        .unwrap();
        for r in [0.5, 1.3, 2.0] {
            assert!((log.alpha_at_radius(r) - beta / k).abs() < 1e-15);
        }

        // alpha as a function of temperature agrees through the inversion
        for r in [0.6, 1.0, 1.9] {
            let t = lin.temperature_at_radius(r);
            assert!((lin.alpha_at_temperature(t) - lin.alpha_at_radius(r)).abs() < 1e-8);
        }
    }

    #[test]
    fn non_monotone_profile_is_rejected() {
        let res = inverse_alpha_radial(
            |r| (r - 1.2) * (r - 1.2),
            |r| 2.0 * (r - 1.2),
            0.5,
            [0.5, 2.0],
        );
        assert!(matches!(res, Err(Error::NonMonotoneTemperature { .. })));
    }

    fn cartesian_box() -> Chart {
        Chart::cartesian_2d([[0.6, 1.8], [0.4, 1.6]], [13, 13]).unwrap()
    }

    #[test]
    fn zero_stress_residual_closed_form_pairs() {
        let chart = cartesian_box();
        let beta = 0.6;
        let r0 = 0.5;
        let t0 = 300.0;

        // pair 1: T = T0 + b (R - R0), alpha(T) = beta / (b R0 + T - T0)
        let b = 40.0;
        let t1 = radial_scalar_field(&chart, move |r| t0 + b * (r - r0), move |_| b, |_| 0.0);
        let law1 = ExpansionLaw::from_alpha(t0, move |t| beta / (b * r0 + t - t0))
            .with_dalpha(move |t| -beta / (b * r0 + t - t0).powi(2));
        let res1 = zero_stress_residual(&t1, &law1).unwrap();

        // pair 2: T = T0 + c (1/R - 1/R0), alpha(T) = -beta / (T - T0 + c/R0)
        let c = -30.0;
        let t2 = radial_scalar_field(
            &chart,
            move |r| t0 + c * (1.0 / r - 1.0 / r0),
            move |r| -c / (r * r),
            move |r| 2.0 * c / (r * r * r),
        );
        let law2 = ExpansionLaw::from_alpha(t0, move |t| -beta / (t - t0 + c / r0))
            .with_dalpha(move |t| beta / (t - t0 + c / r0).powi(2));
        let res2 = zero_stress_residual(&t2, &law2).unwrap();

        // pair 3: T = T0 + k ln(R/R0), alpha constant
        let k = 25.0;
        let t3 = radial_scalar_field(
            &chart,
            move |r| t0 + k * (r / r0).ln(),
            move |r| k / r,
            move |r| -k / (r * r),
        );
        let law3 = ExpansionLaw::constant(t0, beta / k);
        let res3 = zero_stress_residual(&t3, &law3).unwrap();

        for p in chart.nodes() {
            assert!(res1.eval(&p).abs() < 1e-8, "pair 1 at {:?}", p);
            assert!(res2.eval(&p).abs() < 1e-8, "pair 2 at {:?}", p);
            assert!(res3.eval(&p).abs() < 1e-8, "pair 3 at {:?}", p);
        }
    }

    #[test]
    fn zero_stress_residual_examples() {
        let chart = cartesian_box();
        let law = ExpansionLaw::constant(0.0, 2e-3);

        let uniform = TemperatureField::constant(chart.clone(), 40.0);
        let r_uniform = zero_stress_residual(&uniform, &law).unwrap();
        assert_eq!(r_uniform.eval(&[1.0, 1.0, 0.0]), 0.0);

        // harmonic T with constant alpha
        let harmonic = ScalarField::new(chart.clone(), |x| x[0] * x[1])
            .with_gradient(|x| [x[1], x[0], 0.0])
            .with_hessian(|_| Mat::zeros(2));
        let r_harm = zero_stress_residual(&harmonic, &law).unwrap();
        assert!(r_harm.eval(&[1.0, 0.8, 0.0]).abs() < 1e-15);

        // T = R^2: residual = 4 alpha
        let quad = radial_scalar_field(&chart, |r| r * r, |r| 2.0 * r, |_| 2.0);
        let r_quad = zero_stress_residual(&quad, &law).unwrap();
        assert!((r_quad.eval(&[1.0, 0.8, 0.0]) - 4.0 * 2e-3).abs() < 1e-15);
    }

    #[test]
    fn inverse_alpha_round_trip_is_stress_free() {
        // feed the recovered law back through the material metric and the
        // 2D classifier
        let beta = 0.6;
        let r0 = 0.5;
        let b = 40.0;
        let sol = inverse_alpha_radial(
            move |r| 300.0 + b * (r - r0),
            move |_| b,
            beta,
            [r0, 2.0],
        )
        .unwrap();
        let law = sol.expansion_law();
        let chart = annulus();
        let temp =
            radial_scalar_field(&chart, move |r| 300.0 + b * (r - r0), move |_| b, |_| 0.0);
        let base = MetricField::flat(chart.clone());
        let g = build_material_metric(&base, &temp, &law).unwrap();

        // conformal factor must match gamma R^{2 beta} up to interpolation error
        let gamma = g.at(&[1.0, 0.0, 0.0])[(0, 0)];
        for p in chart.nodes() {
            let want = gamma * p[0].powf(2.0 * beta);
            assert!((g.at(&p)[(0, 0)] / want - 1.0).abs() < 1e-6, "R = {}", p[0]);
        }

        // classify via the exponent: omega(T(R)) sampled as a radial field
        let omega = {
            let (l, t) = (law.clone(), temp.clone());
            ScalarField::new(chart.clone(), move |x| l.omega(t.eval(x)))
        };
        let rep = check_stress_free_2d(&omega).unwrap();
        assert!(rep.passes(), "verdict {:?}", rep.verdict);
    }

    fn chart3() -> Chart {
        // 17 nodes per axis keeps the grid-mode tolerance C h^4 below the
        // residual of the perturbed profile tested further down
        Chart::cartesian_3d([[1.0, 2.0], [0.5, 1.5], [0.25, 1.25]], [17, 17, 17]).unwrap()
    }

    #[test]
    fn flatness_system_trivial_and_linear_omega() {
        let chart = chart3();
        let constant = ScalarField::constant(chart.clone(), 0.3);
        for eq in flatness_system_residuals_3d(&constant).unwrap() {
            assert!(eq.sup_over_nodes(0) < 1e-14);
        }

        let linear = ScalarField::new(chart.clone(), |x| x[0])
            .with_gradient(|_| [1.0, 0.0, 0.0])
            .with_hessian(|_| Mat::zeros(3));
        let eqs = flatness_system_residuals_3d(&linear).unwrap();
        let p = [1.5, 1.0, 0.75];
        for k in 0..4 {
            assert!(eqs[k].eval(&p).abs() < 1e-15, "eq{}", k + 1);
        }
        // the Omega_{,1}^2 term survives in both remaining diagonal equations
        assert_eq!(eqs[4].eval(&p), 1.0);
        assert_eq!(eqs[5].eval(&p), 1.0);

        // all six linearized equations vanish for a linear profile
        for eq in flatness_system_linearized_residuals_3d(&linear).unwrap() {
            assert!(eq.sup_over_nodes(0) < 1e-15);
        }
    }

    #[test]
    fn closed_form_3d_solves_the_system() {
        let chart = chart3();
        let c0 = 0.8;
        let omega = closed_form_3d(&chart, c0, [0.0, 0.0, 0.0]).unwrap();
        for eq in flatness_system_residuals_3d(&omega).unwrap() {
            assert!(eq.sup_over_nodes(0) < 1e-13);
        }
        let rep = check_stress_free_3d(&omega).unwrap();
        assert_eq!(rep.verdict, FlatnessVerdict::Flat);
        assert!(rep.residual("ricci").unwrap() < 1e-10);

        // scale point: Omega(R = 1/sqrt(c0)) = 0
        let r = 1.0 / c0.sqrt();
        let p = [r / 3f64.sqrt(), r / 3f64.sqrt(), r / 3f64.sqrt()];
        assert!(omega.eval(&p).abs() < 1e-14);
    }

    #[test]
    fn closed_form_rejects_origin_in_chart() {
        let chart = Chart::cartesian_3d([[-1.0, 1.0]; 3], [5, 5, 5]).unwrap();
        assert!(matches!(
            closed_form_3d(&chart, 1.0, [0.0, 0.0, 0.0]),
            Err(Error::OriginInDomain)
        ));
        assert!(closed_form_3d(&chart, 1.0, [3.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn inversion_pulls_back_to_flat() {
        // D(phi)^T D(phi) = e^{2 Omega} delta at sampled points
        let chart = chart3();
        let c0 = 0.8;
        let origin = [0.1, -0.2, 0.05];
        let omega = closed_form_3d(&chart, c0, origin).unwrap();
        for p in chart.nodes_with_margin(2) {
            let mut jac = Mat::zeros(3);
            for b in 0..3 {
                for a in 0..3 {
                    jac[(a, b)] = central1(
                        |s| {
                            let mut q = p;
                            q[b] = s;
                            inversion_map(c0, origin, &q)[a]
                        },
                        p[b],
                        1e-3,
                    );
                }
            }
            let pullback = jac.transpose().mul(&jac);
            let factor = (2.0 * omega.eval(&p)).exp();
            let want = Mat::diag(3, &[factor, factor, factor]);
            assert!(
                pullback.sub(&want).sup_norm() < 1e-9 * factor.max(1.0),
                "at {:?}",
                p
            );
        }
    }

    #[test]
    fn perturbed_closed_form_fails_the_system() {
        let chart = chart3();
        let omega0 = closed_form_3d(&chart, 0.8, [0.0, 0.0, 0.0]).unwrap();
        let perturbed = {
            let f = omega0.clone();
            ScalarField::new(chart.clone(), move |x| f.eval(x) + 0.01 * x[0] * x[1])
        };
        let rep = check_stress_free_3d(&perturbed).unwrap();
        assert_eq!(rep.verdict, FlatnessVerdict::NotFlat);
        let worst = (1..=6)
            .map(|k| rep.residual(&format!("eq{k}")).unwrap())
            .fold(0.0f64, f64::max);
        assert!(worst > 1e-4, "worst residual {worst}");
    }

    #[test]
    fn system_matches_conformal_ricci_on_random_fields() {
        // R_{IJ} = -eq_{IJ} entrywise for G = e^{2 Omega} delta
        let chart = Chart::cartesian_3d([[-0.5, 0.5]; 3], [5, 5, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for draw in 0..20 {
            let a: [f64; 3] = rng.gen::<[f64; 3]>().map(|v| 0.4 * (v - 0.5));
            let mut b = [[0.0f64; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let v = 0.3 * (rng.gen::<f64>() - 0.5);
                    b[i][j] = v;
                    b[j][i] = v;
                }
            }
            let c: [f64; 3] = rng.gen::<[f64; 3]>().map(|v| 0.2 * (v - 0.5));
            let omega = ScalarField::new(chart.clone(), move |x| {
                let mut s = 0.0;
                for i in 0..3 {
                    s += a[i] * x[i] + c[i] * x[i].sin();
                    for j in 0..3 {
                        s += b[i][j] * x[i] * x[j];
                    }
                }
                s
            })
            .with_gradient(move |x| {
                let mut g = [0.0; 3];
                for i in 0..3 {
                    g[i] = a[i] + c[i] * x[i].cos();
                    for j in 0..3 {
                        g[i] += 2.0 * b[i][j] * x[j];
                    }
                }
                g
            })
            .with_hessian(move |x| {
                Mat::from_fn(3, |i, j| {
                    let sin = if i == j { -c[i] * x[i].sin() } else { 0.0 };
                    2.0 * b[i][j] + sin
                })
            });

            let base = MetricField::flat(chart.clone());
            let bundle = conformal_ricci(&omega, &base).unwrap();
            let eqs = flatness_system_residuals_3d(&omega).unwrap();
            let slots = [(0, 1), (0, 2), (1, 2), (0, 0), (1, 1), (2, 2)];
            for p in chart.nodes_with_margin(1) {
                let ric = bundle.ricci_at(&p);
                for (k, &(i, j)) in slots.iter().enumerate() {
                    let lhs = ric[(i, j)];
                    let rhs = -eqs[k].eval(&p);
                    assert!(
                        (lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()),
                        "draw {draw} eq{} at {:?}: ricci {lhs} vs -eq {rhs}",
                        k + 1,
                        p
                    );
                }
            }
        }
    }
}
