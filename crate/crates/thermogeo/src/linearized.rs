//! Linearization about a stress-free Euclidean reference: the elastic
//! moduli tensors of the geometric theory, the classical Navier operator
//! they reproduce, a 1D verification solver, and the trace condition
//! relating the metric and strain derivatives of a free energy.

use crate::error::{Error, Result};
use crate::fields::{MatField, ScalarField, VectorField};
use crate::geometry::levi_civita;
use crate::metric::MetricField;
use crate::tensor::{Mat, Ten4, Vec3};
use crate::tol;

/// Saint Venant-Kirchhoff moduli.
#[derive(Clone, Copy, Debug)]
pub struct SVKModuli {
    pub lambda: f64,
    pub mu: f64,
}

impl SVKModuli {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidInput(format!("shear modulus must be positive, got {mu}")));
        }
        if !(3.0 * lambda + 2.0 * mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bulk response 3 lambda + 2 mu must be positive, got {}",
                3.0 * lambda + 2.0 * mu
            )));
        }
        Ok(SVKModuli { lambda, mu })
    }
}

/// The constant coefficient tensors of the linearized balance in aligned
/// Cartesian frames at a stress-free Euclidean reference.
#[derive(Clone)]
pub struct ElasticTensors {
    /// A[(a,A,b,B)] = dP^{aA}/dF^b_B.
    pub a: Ten4,
    /// B[(a,A,C,D)] = dP^{aA}/dG_{CD}.
    pub b: Ten4,
    /// C[(A,B,C,D)] = dS^{AB}/dC_{CD}; the classical stiffness dS/dE is
    /// twice this, and A = 2C under (aA bB) <-> (AB CD).
    pub c_elast: Ten4,
}

fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Moduli tensors of the Saint Venant-Kirchhoff solid at the reference.
pub fn svk_tensors(moduli: SVKModuli) -> ElasticTensors {
    let (l, m) = (moduli.lambda, moduli.mu);
    let a = Ten4::from_fn(3, |a, aa, b, bb| {
        l * kron(a, aa) * kron(b, bb) + m * (kron(aa, bb) * kron(a, b) + kron(a, bb) * kron(aa, b))
    });
    let b = Ten4::from_fn(3, |a, aa, c, d| {
        -l / 2.0 * kron(a, aa) * kron(c, d)
            - m / 2.0 * (kron(a, c) * kron(aa, d) + kron(a, d) * kron(aa, c))
    });
    let c_elast = Ten4::from_fn(3, |a, b, c, d| {
        l / 2.0 * kron(a, b) * kron(c, d)
            + m / 2.0 * (kron(a, c) * kron(b, d) + kron(a, d) * kron(b, c))
    });
    ElasticTensors { a, b, c_elast }
}

/// The thermal load of the linearized problem.
pub struct LinearizedLoad {
    /// beta = 2 alpha dT/d eps: the rate of conformal change of the
    /// material metric under the temperature perturbation.
    pub beta: ScalarField,
    /// Reference stress; None means a stress-free reference.
    pub prestress: Option<MatField>,
}

impl LinearizedLoad {
    pub fn stress_free(beta: ScalarField) -> Self {
        LinearizedLoad { beta, prestress: None }
    }
}

/// The linearized balance of linear momentum at a Euclidean reference:
/// (A U_{,B})_{,A} + (B G beta)_{,A} + (3/2) beta_{,B} P^{aB}.
pub fn linearized_operator(
    tensors: &ElasticTensors,
    load: &LinearizedLoad,
    u: &VectorField,
) -> Result<VectorField> {
    u.chart().expect_same(load.beta.chart())?;
    if let Some(p) = &load.prestress {
        u.chart().expect_same(p.chart())?;
    }
    u.chart().expect_dim(3)?;
    let t = tensors.clone();
    let beta = load.beta.clone();
    let prestress = load.prestress.clone();
    let uf = u.clone();
    Ok(VectorField::new(u.chart().clone(), move |x| {
        let hess = uf.hess(x);
        let grad_beta = beta.grad(x);
        let mut out: Vec3 = [0.0; 3];
        for a in 0..3 {
            let mut s = 0.0;
            for aa in 0..3 {
                for b in 0..3 {
                    for bb in 0..3 {
                        s += t.a[(a, aa, b, bb)] * hess[b][(bb, aa)];
                    }
                }
                // (B_{aACD} G_CD beta)_{,A} with G_CD = delta_CD constant
                let mut contraction = 0.0;
                for k in 0..3 {
                    contraction += t.b[(a, aa, k, k)];
                }
                s += contraction * grad_beta[aa];
            }
            if let Some(p) = &prestress {
                let pm = p.eval(x);
                for bb in 0..3 {
                    s += 1.5 * grad_beta[bb] * pm[(a, bb)];
                }
            }
            out[a] = s;
        }
        out
    }))
}

/// Classical linear thermoelasticity residual,
/// mu u_{a,bb} + (lambda+mu) u_{b,ba} - (3 lambda + 2 mu) alpha dT_{,a}.
pub fn classical_navier_residual(
    moduli: SVKModuli,
    alpha: f64,
    delta_t: &ScalarField,
    u: &VectorField,
) -> Result<VectorField> {
    u.chart().expect_same(delta_t.chart())?;
    u.chart().expect_dim(3)?;
    let (l, m) = (moduli.lambda, moduli.mu);
    let dt = delta_t.clone();
    let uf = u.clone();
    Ok(VectorField::new(u.chart().clone(), move |x| {
        let hess = uf.hess(x);
        let grad_t = dt.grad(x);
        let mut out: Vec3 = [0.0; 3];
        for a in 0..3 {
            let mut lap = 0.0;
            let mut divgrad = 0.0;
            for b in 0..3 {
                lap += hess[a][(b, b)];
                divgrad += hess[b][(b, a)];
            }
            out[a] = m * lap + (l + m) * divgrad - (3.0 * l + 2.0 * m) * alpha * grad_t[a];
        }
        out
    }))
}

/// End condition of the 1D rod.
#[derive(Clone, Copy, Debug)]
pub enum EndCondition {
    Displacement(f64),
    Traction(f64),
}

/// Nodal solution of the 1D thermoelastic rod.
pub struct Rod1D {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Second-order finite-difference solve of the 1D specialization
/// (lambda + 2 mu) u'' = (3 lambda + 2 mu) alpha dT'(x) on [a, b], with
/// sigma = (lambda + 2 mu) u' - (3 lambda + 2 mu) alpha dT. Traction ends
/// use a ghost node, keeping the system tridiagonal and second order.
pub fn solve_linearized_1d(
    moduli: SVKModuli,
    alpha: f64,
    delta_t: impl Fn(f64) -> f64,
    domain: [f64; 2],
    bc: (EndCondition, EndCondition),
    n: usize,
) -> Result<Rod1D> {
    if n < 16 {
        return Err(Error::InvalidInput(format!("need at least 16 grid points, got {n}")));
    }
    if !(domain[1] > domain[0]) {
        return Err(Error::InvalidInput(format!("empty domain [{}, {}]", domain[0], domain[1])));
    }
    if let (EndCondition::Traction(_), EndCondition::Traction(_)) = bc {
        // traction at both ends leaves the displacement defined only up
        // to a constant
        return Err(Error::SingularSystem(
            "traction at both ends fixes displacement only up to a constant".into(),
        ));
    }
    let (l, m) = (moduli.lambda, moduli.mu);
    let stiff = l + 2.0 * m;
    let therm = (3.0 * l + 2.0 * m) * alpha;
    let h = (domain[1] - domain[0]) / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| domain[0] + i as f64 * h).collect();
    let t: Vec<f64> = x.iter().map(|&xi| delta_t(xi)).collect();
    let t_prime = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * t[0] + 4.0 * t[1] - t[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * t[n - 1] - 4.0 * t[n - 2] + t[n - 3]) / (2.0 * h)
        } else {
            (t[i + 1] - t[i - 1]) / (2.0 * h)
        }
    };

    // tridiagonal system sub[i] u_{i-1} + diag[i] u_i + sup[i] u_{i+1} = rhs[i]
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        sub[i] = stiff / (h * h);
        diag[i] = -2.0 * stiff / (h * h);
        sup[i] = stiff / (h * h);
        rhs[i] = therm * t_prime(i);
    }
    match bc.0 {
        EndCondition::Displacement(v) => {
            diag[0] = 1.0;
            rhs[0] = v;
        }
        EndCondition::Traction(tr) => {
            // ghost node: u'(a) central = (u_1 - u_{-1})/2h with
            // stiff u'(a) = tr + therm T(a)
            let slope = (tr + therm * t[0]) / stiff;
            diag[0] = -2.0 * stiff / (h * h);
            sup[0] = 2.0 * stiff / (h * h);
            rhs[0] = therm * t_prime(0) + 2.0 * stiff * slope / h;
        }
    }
    match bc.1 {
        EndCondition::Displacement(v) => {
            diag[n - 1] = 1.0;
            rhs[n - 1] = v;
        }
        EndCondition::Traction(tr) => {
            let slope = (tr + therm * t[n - 1]) / stiff;
            diag[n - 1] = -2.0 * stiff / (h * h);
            sub[n - 1] = 2.0 * stiff / (h * h);
            rhs[n - 1] = therm * t_prime(n - 1) - 2.0 * stiff * slope / h;
        }
    }

    // Thomas elimination
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return Err(Error::SingularSystem("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv.abs() < 1e-300 {
            return Err(Error::SingularSystem("zero pivot in tridiagonal solve".into()));
        }
        c[i] = sup[i] / piv;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    let mut u = vec![0.0; n];
    u[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = d[i] - c[i] * u[i + 1];
    }

    let u_prime = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h)
        } else {
            (u[i + 1] - u[i - 1]) / (2.0 * h)
        }
    };
    let sigma: Vec<f64> = (0..n).map(|i| stiff * u_prime(i) - therm * t[i]).collect();
    Ok(Rod1D { x, u, sigma })
}

/// Perturb the (i, j) entry of a symmetric matrix, keeping it symmetric.
fn perturb_sym(m: &Mat, i: usize, j: usize, h: f64) -> Mat {
    let mut out = m.clone();
    out[(i, j)] += h;
    if i != j {
        out[(j, i)] += h;
    }
    out
}

/// Which argument of the free energy a perturbation targets.
#[derive(Clone, Copy)]
enum Slot {
    C,
    G,
}

/// Trace condition on a free energy Psi(C, G) at the stress-free reference
/// C = G = I: the second PK stress S = 2 dPsi/dC must satisfy
/// sum_k (dS_lj/dC_kk + dS_lj/dG_kk) = 0. Returns the sup over (l, j) of
/// the defect, computed by nested central differences with Richardson
/// extrapolation; diverging estimates raise NonDifferentiable.
pub fn bc_condition_check(psi: impl Fn(&Mat, &Mat) -> f64, dim: usize) -> Result<f64> {
    let eye = Mat::identity(dim);
    let eval = |slot1: Slot, i1: usize, j1: usize, slot2: Slot, k: usize, s1: f64, s2: f64| {
        let (mut c, mut g) = (eye.clone(), eye.clone());
        match slot1 {
            Slot::C => c = perturb_sym(&c, i1, j1, s1),
            Slot::G => g = perturb_sym(&g, i1, j1, s1),
        }
        match slot2 {
            Slot::C => c = perturb_sym(&c, k, k, s2),
            Slot::G => g = perturb_sym(&g, k, k, s2),
        }
        psi(&c, &g)
    };
    // mixed second derivative 2 d^2 Psi / d slot1_{lj} d slot2_{kk}
    let d2 = |slot1: Slot, l: usize, j: usize, slot2: Slot, k: usize, h: f64| -> f64 {
        2.0 * (eval(slot1, l, j, slot2, k, h, h) - eval(slot1, l, j, slot2, k, h, -h)
            - eval(slot1, l, j, slot2, k, -h, h)
            + eval(slot1, l, j, slot2, k, -h, -h))
            / (4.0 * h * h)
    };
    let defect = |h: f64| -> Mat {
        Mat::from_fn(dim, |l, j| {
            let mut s = 0.0;
            for k in 0..dim {
                s += d2(Slot::C, l, j, Slot::C, k, h) + d2(Slot::C, l, j, Slot::G, k, h);
            }
            s
        })
    };
    let h0 = tol::ENERGY_FD_STEP;
    let m0 = defect(h0);
    let m1 = defect(h0 / 2.0);
    let m2 = defect(h0 / 4.0);
    let e1 = m1.sub(&m0).sup_norm();
    let e2 = m2.sub(&m1).sup_norm();
    let scale = m2.sup_norm().max(1.0);
    if !e1.is_finite() || !e2.is_finite() {
        return Err(Error::NonDifferentiable("free energy produced non-finite differences".into()));
    }
    // a second-order method must contract the level differences; growth
    // means the energy is not twice differentiable at the reference
    if e2 > 0.6 * e1 && e2 > 1e-8 * scale {
        return Err(Error::NonDifferentiable(format!(
            "difference estimates do not contract: {e1:.3e} then {e2:.3e}"
        )));
    }
    // Richardson extrapolation of the two finest levels
    let extrapolated = m2.scale(4.0 / 3.0).sub(&m1.scale(1.0 / 3.0));
    Ok(extrapolated.sup_norm())
}

/// Rate of change of the connection trace under the conformal family
/// G_eps = e^{eps beta} G: returns the vector field
/// d(Gamma^A_{AB})/d eps at eps = 0, which equals (N/2) d beta/dX^B.
pub fn connection_trace_rate(metric: &MetricField, beta: &ScalarField) -> Result<VectorField> {
    metric.chart().expect_same(beta.chart())?;
    let chart = metric.chart().clone();
    let d = chart.dim();
    let eps = 1e-4;
    let mut traces = Vec::new();
    for s in [eps, -eps] {
        let g = metric.clone();
        let b = beta.clone();
        let scaled = MetricField::new(chart.clone(), move |x| {
            g.at(x).scale((s * b.eval(x)).exp())
        });
        let gamma = levi_civita(&scaled)?;
        traces.push(gamma);
    }
    let plus = traces.remove(0);
    let minus = traces.remove(0);
    Ok(VectorField::new(chart, move |x| {
        let gp = plus.at(x);
        let gm = minus.at(x);
        let mut out: Vec3 = [0.0; 3];
        for b in 0..d {
            let mut tp = 0.0;
            let mut tm = 0.0;
            for a in 0..d {
                tp += gp[(a, a, b)];
                tm += gm[(a, a, b)];
            }
            out[b] = (tp - tm) / (2.0 * eps);
        }
        out
    }))
}
