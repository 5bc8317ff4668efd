//! Scenario dispatch: build the module pipeline for each kind, write the
//! artifacts, and assemble a deterministic report.json.

use std::path::{Path, PathBuf};

use thermogeo::{
    ap_connection, bc_condition_check, check_stress_free_2d, check_stress_free_3d,
    classical_navier_residual, closed_form_3d, commutation_coefficients, cone_from_beta,
    conformal_frame, curvature, embed_radial, export_surface, frame_connection, levi_civita,
    linearized_operator, noncoordinate_torsion, radial_scalar_field, solve_axisym,
    solve_linearized_1d, svk_tensors, zero_stress_residual, AxisymProblem, BoundaryMode, Chart,
    EndCondition, ExpansionLaw, FlatnessVerdict, LinearizedLoad, Mat, MetricField, NeoHookean2D,
    RadialStressFreeFamily, SVKModuli, ScalarField, VectorField,
};

use crate::fmt::{write_csv, JsonObj};
use crate::scenario::{CliError, Kind, Scenario};

pub struct RunReport {
    pub residuals: Vec<(String, f64)>,
    pub verdicts: Vec<(String, String)>,
    pub artifacts: Vec<String>,
}

fn solver(e: thermogeo::Error) -> CliError {
    CliError::Solver(e.to_string())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Solver(format!("cannot write artifact: {e}"))
}

fn verdict_str(v: FlatnessVerdict) -> &'static str {
    match v {
        FlatnessVerdict::Flat => "flat",
        FlatnessVerdict::NotFlat => "not_flat",
        FlatnessVerdict::FlatLocalOnly => "flat_local_only",
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| a + step * i as f64)
}

/// Run one validated scenario, writing artifacts into `out_dir`.
pub fn run_scenario(sc: &Scenario, out_dir: &Path, tol: f64) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Solver(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut report = match sc.kind {
        Kind::Flatness2d => flatness2d(sc, out_dir)?,
        Kind::Flatness3d => flatness3d(sc, out_dir)?,
        Kind::InverseAlpha => inverse_alpha(sc, out_dir)?,
        Kind::Embed => embed(sc, out_dir)?,
        Kind::Axisym => axisym(sc, out_dir)?,
        Kind::Linearized => linearized(sc, out_dir)?,
        Kind::Decomposition => decomposition(sc, out_dir, tol)?,
    };
    write_report(sc, out_dir, &mut report)?;
    Ok(report)
}

fn write_report(sc: &Scenario, out_dir: &Path, report: &mut RunReport) -> Result<(), CliError> {
    report.artifacts.push("report.json".to_string());
    let mut residuals = JsonObj::new();
    for (name, value) in &report.residuals {
        residuals.field_f64(name, *value);
    }
    let mut verdicts = JsonObj::new();
    for (name, value) in &report.verdicts {
        verdicts.field_str(name, value);
    }
    let mut doc = JsonObj::new();
    doc.field_str("kind", sc.kind.as_str())
        .field_raw("parameters", &sc.params.echo_json())
        .field_obj("residuals", &residuals)
        .field_obj("verdicts", &verdicts)
        .field_str_list("artifact_paths", &report.artifacts);
    doc.write(&out_dir.join("report.json")).map_err(io_err)
}

fn flatness2d(sc: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    let p = &sc.params;
    p.check_keys(&["omega", "beta"], &["gamma", "r0", "r1", "grid_r", "grid_theta"])?;
    let family_name = p.str_or("omega", "")?;
    if family_name != "beta_log_r" {
        return Err(CliError::Validation(format!(
            "parameter \"omega\" must be \"beta_log_r\", got \"{family_name}\""
        )));
    }
    let beta = p.f64("beta")?;
    let gamma = p.f64_or("gamma", 1.0)?;
    let r0 = p.f64_or("r0", 0.5)?;
    let r1 = p.f64_or("r1", 2.0)?;
    let grid_r = p.usize_or("grid_r", 33)?;
    let grid_theta = p.usize_or("grid_theta", 17)?;

    let chart = Chart::annulus([r0, r1], [grid_r, grid_theta]).map_err(solver)?;
    let family = RadialStressFreeFamily::new(gamma, beta, r0, r1).map_err(solver)?;
    let omega = family.omega_field(&chart).map_err(solver)?;
    let flatness = check_stress_free_2d(&omega).map_err(solver)?;
    let cone = cone_from_beta(beta).map_err(solver)?;

    let rows: Vec<Vec<f64>> =
        linspace(r0, r1, grid_r).map(|r| vec![r, omega.eval(&[r, 0.0, 0.0])]).collect();
    write_csv(&out_dir.join("omega.csv"), &["R", "omega"], &rows).map_err(io_err)?;

    let mut residuals: Vec<(String, f64)> = flatness.residual_norms.clone();
    residuals.push(("cone_deficit_angle".into(), cone.deficit_angle));
    Ok(RunReport {
        residuals,
        verdicts: vec![
            ("flatness".into(), verdict_str(flatness.verdict).into()),
            ("cone_embeddable_in_r3".into(), if cone.embeddable_in_r3 { "yes" } else { "no" }.into()),
        ],
        artifacts: vec!["omega.csv".into()],
    })
}

fn flatness3d(sc: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    let p = &sc.params;
    p.check_keys(&["omega"], &["c0", "low", "high", "n"])?;
    let family_name = p.str_or("omega", "")?;
    if family_name != "closed_form" {
        return Err(CliError::Validation(format!(
            "parameter \"omega\" must be \"closed_form\", got \"{family_name}\""
        )));
    }
    let c0 = p.f64_or("c0", 1.0)?;
    let low = p.f64_or("low", 0.6)?;
    let high = p.f64_or("high", 1.4)?;
    let n = p.usize_or("n", 17)?;

    let chart = Chart::cartesian_3d([[low, high]; 3], [n, n, n]).map_err(solver)?;
    let omega = closed_form_3d(&chart, c0, [0.0; 3]).map_err(solver)?;
    let flatness = check_stress_free_3d(&omega).map_err(solver)?;

    let rows: Vec<Vec<f64>> = linspace(low, high, n)
        .map(|t| vec![t, omega.eval(&[t, t, t])])
        .collect();
    write_csv(&out_dir.join("omega_diagonal.csv"), &["X", "omega"], &rows).map_err(io_err)?;

    Ok(RunReport {
        residuals: flatness.residual_norms.clone(),
        verdicts: vec![("flatness".into(), verdict_str(flatness.verdict).into())],
        artifacts: vec!["omega_diagonal.csv".into()],
    })
}

fn inverse_alpha(sc: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    let p = &sc.params;
    p.check_keys(&["beta"], &["profile", "t0", "coefficient", "r0", "r1", "rows"])?;
    let beta = p.f64("beta")?;
    let profile = p.str_or("profile", "log")?;
    let t0 = p.f64_or("t0", 300.0)?;
    let coeff = p.f64_or("coefficient", 25.0)?;
    let r0 = p.f64_or("r0", 0.5)?;
    let r1 = p.f64_or("r1", 2.0)?;
    let rows_n = p.usize_or("rows", 65)?;

    let shape = match profile.as_str() {
        "log" => 0u8,
        "linear" => 1,
        "reciprocal" => 2,
        other => {
            return Err(CliError::Validation(format!(
                "parameter \"profile\" must be log, linear, or reciprocal, got \"{other}\""
            )))
        }
    };
    let t_fn = move |r: f64| match shape {
        0 => t0 + coeff * (r / r0).ln(),
        1 => t0 + coeff * (r - r0),
        _ => t0 + coeff * (1.0 / r - 1.0 / r0),
    };
    let dt_fn = move |r: f64| match shape {
        0 => coeff / r,
        1 => coeff,
        _ => -coeff / (r * r),
    };
    let ddt_fn = move |r: f64| match shape {
        0 => -coeff / (r * r),
        1 => 0.0,
        _ => 2.0 * coeff / (r * r * r),
    };
    let sol = thermogeo::inverse_alpha_radial(t_fn, dt_fn, beta, [r0, r1]).map_err(solver)?;

    let rows: Vec<Vec<f64>> = linspace(r0, r1, rows_n)
        .map(|r| vec![r, sol.temperature_at_radius(r), sol.alpha_at_radius(r)])
        .collect();
    write_csv(&out_dir.join("inverse_alpha.csv"), &["R", "T", "alpha"], &rows).map_err(io_err)?;

    // the residual operator needs a 2D Cartesian chart; pick a box whose
    // radii stay inside [r0, r1] (valid whenever r1/r0 > 1.39)
    let chart = Chart::cartesian_2d(
        [[0.9 * r0, 0.65 * r1], [0.6 * r0, 0.6 * r1]],
        [13, 13],
    )
    .map_err(solver)?;
    let temp = radial_scalar_field(&chart, t_fn, dt_fn, ddt_fn);
    let law = sol.expansion_law();
    let residual = zero_stress_residual(&temp, &law).map_err(solver)?.sup_over_nodes(0);

    Ok(RunReport {
        residuals: vec![("zero_stress_residual".into(), residual)],
        verdicts: vec![("profile_invertible".into(), "yes".into())],
        artifacts: vec!["inverse_alpha.csv".into()],
    })
}

fn embed(sc: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    let p = &sc.params;
    p.check_keys(&["beta"], &["r0", "r1", "samples", "angular_samples"])?;
    let beta = p.f64("beta")?;
    let r0 = p.f64_or("r0", 0.5)?;
    let r1 = p.f64_or("r1", 2.0)?;
    let samples = p.usize_or("samples", 400)?;
    let angular = p.usize_or("angular_samples", 64)?;

    let profile = embed_radial(move |r: f64| beta * r.ln(), move |r| beta / r, r0, r1, samples)
        .map_err(solver)?;

    let mut isometry_defect: f64 = 0.0;
    for i in 0..profile.len() - 1 {
        let dr = profile.r_samples[i + 1] - profile.r_samples[i];
        let drho = profile.rho[i + 1] - profile.rho[i];
        let dz = profile.z[i + 1] - profile.z[i];
        let mid = 0.5 * (profile.r_samples[i + 1] + profile.r_samples[i]);
        let want = (2.0 * beta * mid.ln()).exp() * dr * dr;
        isometry_defect = isometry_defect.max(((dz * dz + drho * drho) / want - 1.0).abs());
    }

    let rows: Vec<Vec<f64>> = (0..profile.len())
        .map(|i| vec![profile.r_samples[i], profile.rho[i], profile.z[i], profile.slope[i]])
        .collect();
    write_csv(&out_dir.join("profile.csv"), &["R", "rho", "z", "slope"], &rows).map_err(io_err)?;
    let obj = export_surface(&profile, angular).map_err(solver)?;
    std::fs::write(out_dir.join("surface.obj"), obj).map_err(io_err)?;

    Ok(RunReport {
        residuals: vec![("isometry_defect_rel".into(), isometry_defect)],
        verdicts: vec![("embeddable".into(), "yes".into())],
        artifacts: vec!["profile.csv".into(), "surface.obj".into()],
    })
}

fn axisym(sc: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    let p = &sc.params;
    p.check_keys(
        &["mu", "alpha"],
        &["t0", "r1", "r2", "profile", "k", "t_uniform", "bc", "panels", "rows"],
    )?;
    let mu = p.f64("mu")?;
    let alpha = p.f64("alpha")?;
    let t0 = p.f64_or("t0", 300.0)?;
    let r1 = p.f64_or("r1", 0.5)?;
    let r2 = p.f64_or("r2", 2.0)?;
    let profile = p.str_or("profile", "log")?;
    let k = p.f64_or("k", 60.0)?;
    let t_uniform = p.f64_or("t_uniform", t0 + 50.0)?;
    let bc_name = p.str_or("bc", "traction_free")?;
    let panels = p.usize_or("panels", 2048)?;
    let rows_n = p.usize_or("rows", 65)?;

    let bc = match bc_name.as_str() {
        "traction_free" => BoundaryMode::TractionFree,
        "paper_datum" => BoundaryMode::PaperDatum,
        other => {
            return Err(CliError::Validation(format!(
                "parameter \"bc\" must be traction_free or paper_datum, got \"{other}\""
            )))
        }
    };
    let material = NeoHookean2D::new(mu).map_err(solver)?;
    let law = ExpansionLaw::constant(t0, alpha);
    let problem = match profile.as_str() {
        "log" => AxisymProblem::new(r1, r2, move |r: f64| t0 + k * (r / r1).ln(), law, material, bc)
            .map_err(solver)?
            .with_t_derivative(move |r| k / r),
        "uniform" => {
            AxisymProblem::new(r1, r2, move |_| t_uniform, law, material, bc)
                .map_err(solver)?
                .with_t_derivative(|_| 0.0)
        }
        other => {
            return Err(CliError::Validation(format!(
                "parameter \"profile\" must be log or uniform, got \"{other}\""
            )))
        }
    }
    .with_panels(panels)
    .map_err(solver)?;

    let sol = solve_axisym(&problem).map_err(solver)?;
    let rows: Vec<Vec<f64>> = sol.sample(rows_n).into_iter().map(|r| r.to_vec()).collect();
    write_csv(&out_dir.join("axisym.csv"), &["R", "r", "p", "P_rR", "P_thTh"], &rows)
        .map_err(io_err)?;

    Ok(RunReport {
        residuals: vec![
            ("equilibrium_residual".into(), sol.residual_equilibrium),
            ("bc_residual".into(), sol.residual_bc),
            ("incompressibility_defect".into(), sol.incompressibility_defect(rows_n)),
        ],
        verdicts: vec![("converged".into(), "yes".into())],
        artifacts: vec!["axisym.csv".into()],
    })
}

fn linearized(sc: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    let p = &sc.params;
    p.check_keys(
        &["lambda", "mu", "alpha"],
        &["n", "length", "profile", "magnitude", "bc"],
    )?;
    let lambda = p.f64("lambda")?;
    let mu = p.f64("mu")?;
    let alpha = p.f64("alpha")?;
    let n = p.usize_or("n", 129)?;
    let length = p.f64_or("length", 1.0)?;
    let profile = p.str_or("profile", "uniform")?;
    let magnitude = p.f64_or("magnitude", 50.0)?;
    let bc_name = p.str_or("bc", "clamped_free")?;

    let moduli = SVKModuli::new(lambda, mu).map_err(solver)?;
    let delta_t: Box<dyn Fn(f64) -> f64> = match profile.as_str() {
        "uniform" => Box::new(move |_| magnitude),
        "linear" => Box::new(move |x| magnitude * x / length),
        other => {
            return Err(CliError::Validation(format!(
                "parameter \"profile\" must be uniform or linear, got \"{other}\""
            )))
        }
    };
    let clamp = EndCondition::Displacement(0.0);
    let free = EndCondition::Traction(0.0);
    let bc = match bc_name.as_str() {
        "clamped_clamped" => (clamp, clamp),
        "clamped_free" => (clamp, free),
        "free_clamped" => (free, clamp),
        "free_free" => (free, free),
        other => {
            return Err(CliError::Validation(format!(
                "parameter \"bc\" must be one of clamped_clamped, clamped_free, free_clamped, \
                 free_free, got \"{other}\""
            )))
        }
    };
    let rod = solve_linearized_1d(moduli, alpha, &delta_t, [0.0, length], bc, n).map_err(solver)?;

    let rows: Vec<Vec<f64>> = (0..rod.x.len())
        .map(|i| vec![rod.x[i], rod.u[i], rod.sigma[i]])
        .collect();
    write_csv(&out_dir.join("rod.csv"), &["x", "u", "sigma"], &rows).map_err(io_err)?;

    // operator-level equivalence on one deterministic draw with these moduli
    let chart = Chart::cartesian_3d([[-1.0, 1.0]; 3], [9, 9, 9]).map_err(solver)?;
    let u = VectorField::new(chart.clone(), |x| {
        [
            0.3 * x[0] * x[0] + 0.1 * x[1] * x[2],
            -0.2 * x[1] * x[1] * x[0] + 0.4 * x[2],
            0.5 * x[2] * x[2] * x[2] - 0.3 * x[0] * x[1],
        ]
    });
    let dt_field = ScalarField::new(chart.clone(), |x| 40.0 * x[0] + 15.0 * x[1] * x[1]);
    let beta = ScalarField::new(chart.clone(), {
        let dt = dt_field.clone();
        move |x| 2.0 * alpha * dt.eval(x)
    });
    let geometric = linearized_operator(&svk_tensors(moduli), &LinearizedLoad::stress_free(beta), &u)
        .map_err(solver)?;
    let classical = classical_navier_residual(moduli, alpha, &dt_field, &u).map_err(solver)?;
    let mut equiv: f64 = 0.0;
    for x in [[0.2, -0.3, 0.4], [-0.5, 0.1, 0.0], [0.0, 0.45, -0.25], [0.3, 0.3, 0.3]] {
        let g = geometric.eval(&x);
        let c = classical.eval(&x);
        for a in 0..3 {
            equiv = equiv.max((g[a] - c[a]).abs() / g[a].abs().max(c[a].abs()).max(1e-8));
        }
    }

    let t = svk_tensors(moduli);
    let mut contraction_dev: f64 = 0.0;
    for a in 0..3 {
        for aa in 0..3 {
            let sum: f64 = (0..3).map(|kk| t.b[(a, aa, kk, kk)]).sum();
            let want = if a == aa { -(3.0 * lambda + 2.0 * mu) / 2.0 } else { 0.0 };
            contraction_dev = contraction_dev.max((sum - want).abs());
        }
    }

    let svk_energy = move |cm: &Mat, gm: &Mat| {
        let e = cm.sub(gm).scale(0.5);
        let tr = e.trace();
        lambda / 2.0 * tr * tr + mu * e.mul(&e).trace()
    };
    let bc_residual = bc_condition_check(svk_energy, 3).map_err(solver)?;

    Ok(RunReport {
        residuals: vec![
            ("navier_equivalence_rel".into(), equiv),
            ("b_contraction_deviation".into(), contraction_dev),
            ("bc_condition_residual".into(), bc_residual),
        ],
        verdicts: vec![("rod_solved".into(), "yes".into())],
        artifacts: vec!["rod.csv".into()],
    })
}

fn decomposition(sc: &Scenario, out_dir: &Path, tol: f64) -> Result<RunReport, CliError> {
    let p = &sc.params;
    p.check_keys(&["vartheta"], &["q", "n"])?;
    let family_name = p.str_or("vartheta", "")?;
    if family_name != "one_plus_q_r2" {
        return Err(CliError::Validation(format!(
            "parameter \"vartheta\" must be \"one_plus_q_r2\", got \"{family_name}\""
        )));
    }
    let q = p.f64_or("q", 0.1)?;
    let n = p.usize_or("n", 9)?;

    let chart = Chart::cartesian_3d([[-1.0, 1.0]; 3], [n, n, n]).map_err(solver)?;
    let vartheta = ScalarField::new(chart.clone(), move |x| {
        1.0 + q * (x[0] * x[0] + x[1] * x[1])
    })
    .with_gradient(move |x| [2.0 * q * x[0], 2.0 * q * x[1], 0.0])
    .with_hessian(move |_| Mat::diag(3, &[2.0 * q, 2.0 * q, 0.0]));

    let frame = conformal_frame(&vartheta).map_err(solver)?;
    let ap = ap_connection(&frame);
    let v = vartheta.clone();
    let metric = MetricField::new(chart.clone(), move |x| {
        let t = v.eval(x);
        Mat::identity(3).scale(t * t)
    });
    let bundle = curvature(&ap, &metric).map_err(solver)?;

    let omega = ScalarField::new(chart.clone(), move |x| {
        (1.0 + q * (x[0] * x[0] + x[1] * x[1])).ln()
    })
    .with_gradient(move |x| {
        let t = 1.0 + q * (x[0] * x[0] + x[1] * x[1]);
        [2.0 * q * x[0] / t, 2.0 * q * x[1] / t, 0.0]
    })
    .with_hessian(move |x| {
        let t = 1.0 + q * (x[0] * x[0] + x[1] * x[1]);
        Mat::from_fn(3, |i, j| {
            if i > 1 || j > 1 {
                return 0.0;
            }
            let delta = if i == j { 1.0 } else { 0.0 };
            2.0 * q * delta / t - 4.0 * q * q * x[i] * x[j] / (t * t)
        })
    });
    let g = MetricField::conformal(&omega, &MetricField::flat(chart.clone())).map_err(solver)?;
    let lc = levi_civita(&g).map_err(solver)?;
    let fc = frame_connection(&frame, &lc).map_err(solver)?;
    let comm = commutation_coefficients(&frame);
    let frame_torsion_field = noncoordinate_torsion(&fc, &comm).map_err(solver)?;
    let mut lc_coord: f64 = 0.0;
    let mut lc_frame: f64 = 0.0;
    for pt in chart.nodes_with_margin(2) {
        lc_coord = lc_coord.max(lc.torsion_at(&pt).sup_norm());
        lc_frame = lc_frame.max(frame_torsion_field.eval(&pt).sup_norm());
    }

    let rows: Vec<Vec<f64>> = linspace(-1.0, 1.0, n)
        .map(|t| vec![t, 1.0 + q * t * t])
        .collect();
    write_csv(&out_dir.join("vartheta_axis.csv"), &["X", "vartheta"], &rows).map_err(io_err)?;

    Ok(RunReport {
        residuals: vec![
            ("ap_riemann".into(), bundle.sup_norms.riemann),
            ("ap_torsion".into(), bundle.sup_norms.torsion),
            ("lc_torsion_coordinate".into(), lc_coord),
            ("lc_torsion_frame".into(), lc_frame),
        ],
        verdicts: vec![
            (
                "ap_flat".into(),
                if bundle.sup_norms.riemann < 1e-8 * tol { "yes" } else { "no" }.into(),
            ),
            (
                "ap_torsion_nonvanishing".into(),
                if bundle.sup_norms.torsion > 1e-3 { "yes" } else { "no" }.into(),
            ),
        ],
        artifacts: vec!["vartheta_axis.csv".into()],
    })
}

/// Resolve the output directory for one scenario: `--out` wins, then the
/// scenario's own `output_dir`, then the current directory. In batch mode
/// each scenario is isolated in a subdirectory named after its file stem.
pub fn resolve_out_dir(
    sc: &Scenario,
    cli_out: Option<&Path>,
    scenario_path: &Path,
    batch: bool,
) -> PathBuf {
    let base = cli_out
        .map(Path::to_path_buf)
        .or_else(|| sc.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    if batch {
        let stem = scenario_path.file_stem().unwrap_or_default();
        base.join(stem)
    } else {
        base
    }
}
