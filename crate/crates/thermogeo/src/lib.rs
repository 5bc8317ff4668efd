//! Geometric machinery for thermal stresses: temperature-dependent material
//! metrics, curvature-based zero-stress criteria, embeddings of stress-free
//! configurations, orthonormal-frame decompositions of the deformation
//! gradient, an axisymmetric nonlinear solver, and the linearization that
//! recovers classical thermoelasticity.

pub mod chart;
pub mod embedding;
pub mod equilibrium;
pub mod error;
pub mod fields;
pub mod frames;
pub mod geometry;
pub mod interp;
pub mod linearized;
pub mod metric;
pub mod quad;
pub mod stress_free;
pub mod tensor;
pub mod thermal;
pub mod tol;
pub mod verify;

pub use chart::{Chart, CoordinateKind, Point};
pub use embedding::{embed_radial, export_surface, EmbeddingProfile};
pub use equilibrium::{
    divergence_pk1, divergence_pk1_euclidean, pk1_neo_hookean, solve_axisym, AxisymProblem,
    AxisymSolution, BoundaryMode, NeoHookean2D,
};
pub use error::{Error, Result};
pub use fields::{MatField, ScalarField, Ten3Field, Ten4Field, VectorField};
pub use frames::{
    ap_connection, commutation_coefficients, conformal_frame, elastic_part, frame_connection,
    noncoordinate_torsion, orthonormal_frame, parallel_transport_residual, FrameField,
    ThermalDeformationGradient,
};
pub use geometry::{conformal_ricci, conformal_scalar_2d, curvature, levi_civita, weyl_schouten, CurvatureBundle, CurvatureSup};
pub use linearized::{
    bc_condition_check, classical_navier_residual, connection_trace_rate, linearized_operator,
    solve_linearized_1d, svk_tensors, ElasticTensors, EndCondition, LinearizedLoad, Rod1D,
    SVKModuli,
};
pub use metric::{ConnectionField, MetricField};
pub use stress_free::{
    check_stress_free_2d, check_stress_free_3d, closed_form_3d, cone_from_beta,
    flatness_system_linearized_residuals_3d, flatness_system_residuals_3d, inverse_alpha_radial,
    inversion_map, radial_family_to_temperature, radial_scalar_field, zero_stress_residual,
    ConeDescriptor, FlatnessReport, FlatnessVerdict, InverseAlphaSolution,
    RadialStressFreeFamily,
};
pub use tensor::{Mat, Ten3, Ten4, Vec3};
pub use thermal::{
    build_anisotropic_metric, build_material_metric, density_at_temperature, jacobian,
    thermal_conformal_factor, volume_form, AnisotropicExpansion, DeformationMap, ExpansionLaw,
    MassDensity, TemperatureField,
};
pub use verify::{run_all, CheckResult};
