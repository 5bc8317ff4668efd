//! Tolerance constants shared by solvers, verdicts, and the built-in checks.

/// Flatness verdict: sup|Ricci| * diameter^2 must fall below this when all
/// derivatives are analytic.
pub const FLAT_ANALYTIC: f64 = 1e-6;

/// Grid-mode flatness threshold is GRID_FLATNESS_C * h^4 (h = largest grid
/// step, residual already scaled by diameter^2). The constant bounds the
/// 4th-order truncation term of the nested difference stencils for conformal
/// factors with order-one derivatives on order-one charts; measured constants
/// on such fields stay below ~20, so 1e3 leaves two orders of headroom
/// without masking genuine curvature.
pub const GRID_FLATNESS_C: f64 = 1e3;

/// Default absolute tolerance for adaptive quadrature of expansion laws.
pub const QUADRATURE_ABS: f64 = 1e-10;

/// Orthonormality defect allowed for frame fields at validation samples.
pub const FRAME_ORTHONORMALITY: f64 = 1e-10;

/// Frame inverse consistency: |F Finv - I|.
pub const FRAME_INVERSE: f64 = 1e-12;

/// Shooting solver: scaled boundary residual target.
pub const SHOOTING_RESIDUAL: f64 = 1e-12;

/// Shooting solver iteration cap.
pub const SHOOTING_MAX_ITER: usize = 200;

/// Base step, relative to the variable's scale, for Richardson-extrapolated
/// constitutive derivatives (single differentiation).
pub const CONSTITUTIVE_FD_STEP: f64 = 1e-5;

/// Base relative step for nested second derivatives of a free energy; wider
/// than CONSTITUTIVE_FD_STEP because two stacked differences amplify
/// round-off by 1/h^2.
pub const ENERGY_FD_STEP: f64 = 1e-2;

/// Default panel count for the radial quadrature of the axisymmetric solver.
pub const AXISYM_PANELS: usize = 2048;

/// Samples used when inverting monotone temperature profiles.
pub const INVERSION_SAMPLES: usize = 512;
