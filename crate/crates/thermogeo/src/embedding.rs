//! Isometric embeddings of radially symmetric 2D material metrics into
//! Euclidean 3-space as surfaces of revolution, plus OBJ mesh export.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::cumulative_gl5;

/// Discrete profile of a surface of revolution: at each radius sample,
/// the cylindrical radius rho = R e^{Omega(R)}, the height z, and the
/// meridian slope |dz / d rho|.
#[derive(Clone, Debug)]
pub struct EmbeddingProfile {
    pub r_samples: Vec<f64>,
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    pub slope: Vec<f64>,
}

impl EmbeddingProfile {
    pub fn len(&self) -> usize {
        self.r_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_samples.is_empty()
    }

    pub fn is_planar(&self) -> bool {
        self.z.iter().all(|&z| z == 0.0)
    }
}

/// Solve (dz/dR)^2 + e^{2 Omega} (1 + R Omega')^2 = e^{2 Omega} for z(R)
/// on [r0, r1], taking the nondecreasing branch with z(r0) = 0. Solvable
/// iff -2/R < Omega' < 0 strictly (equality only at an isolated endpoint,
/// where the integrand is clamped at zero) or Omega' vanishes identically,
/// which yields a planar annulus.
pub fn embed_radial(
    omega: impl Fn(f64) -> f64,
    omega_prime: impl Fn(f64) -> f64,
    r0: f64,
    r1: f64,
    samples: usize,
) -> Result<EmbeddingProfile> {
    if !(r0 > 0.0 && r0 < r1) {
        return Err(Error::InvalidInput(format!(
            "radii must satisfy 0 < R0 < R1, got [{r0}, {r1}]"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {samples}")));
    }

    let r_samples: Vec<f64> = (0..samples)
        .map(|i| r0 + (r1 - r0) * i as f64 / (samples - 1) as f64)
        .collect();

    // planar shortcut: Omega' identically zero
    let planar = r_samples.iter().all(|&r| (r * omega_prime(r)).abs() < 1e-12);
    if !planar {
        for (i, &r) in r_samples.iter().enumerate() {
            let op = omega_prime(r);
            let interior = i != 0 && i + 1 != samples;
            let upper_ok = if interior { op < 0.0 } else { op <= 0.0 };
            let lower_ok = if interior { op > -2.0 / r } else { op >= -2.0 / r };
            if !(upper_ok && lower_ok) {
                return Err(Error::NotEmbeddable { r, omega_prime: op });
            }
        }
    }

    let integrand = |r: f64| {
        let t = 1.0 + r * omega_prime(r);
        // clamp: equality at an endpoint drives 1 - t^2 to 0 from below
        // under round-off
        omega(r).exp() * (1.0 - t * t).max(0.0).sqrt()
    };
    let z = if planar {
        vec![0.0; samples]
    } else {
        cumulative_gl5(&integrand, r0, r1, samples - 1)
    };

    let rho: Vec<f64> = r_samples.iter().map(|&r| r * omega(r).exp()).collect();
    let slope: Vec<f64> = r_samples
        .iter()
        .map(|&r| {
            let t = 1.0 + r * omega_prime(r);
            if planar {
                0.0
            } else {
                (1.0 / (t * t) - 1.0).max(0.0).sqrt()
            }
        })
        .collect();

    Ok(EmbeddingProfile { r_samples, rho, z, slope })
}

/// C-style `%.12e`: one leading digit, 12 fractional digits, two-digit
/// signed exponent, matching the CSV/JSON artifacts byte for byte.
fn sci12(x: f64) -> String {
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("{:e} always contains an exponent");
    let e: i32 = exp.parse().expect("exponent is an integer");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// Render the profile as a surface of revolution in OBJ text: `v x y z`
/// vertex lines then 1-indexed `f i j k` triangles, LF newlines. The
/// angular seam reuses the first column of vertices, so the mesh is
/// watertight and holds exactly len * angular_samples vertices.
pub fn export_surface(profile: &EmbeddingProfile, angular_samples: usize) -> Result<String> {
    if angular_samples < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 angular samples, got {angular_samples}"
        )));
    }
    if profile.len() < 2 {
        return Err(Error::InvalidInput("profile needs at least 2 samples".to_string()));
    }

    let n = profile.len();
    let m = angular_samples;
    let mut out = String::with_capacity(n * m * 40);
    for i in 0..n {
        for k in 0..m {
            let phi = 2.0 * PI * k as f64 / m as f64;
            let (x, y) = (profile.rho[i] * phi.cos(), profile.rho[i] * phi.sin());
            out.push_str(&format!("v {} {} {}\n", sci12(x), sci12(y), sci12(profile.z[i])));
        }
    }
    let idx = |i: usize, k: usize| i * m + (k % m) + 1;
    for i in 0..n - 1 {
        for k in 0..m {
            let (a, b, c, d) = (idx(i, k), idx(i + 1, k), idx(i + 1, k + 1), idx(i, k + 1));
            out.push_str(&format!("f {a} {b} {c}\n"));
            out.push_str(&format!("f {a} {c} {d}\n"));
        }
    }
    Ok(out)
}
