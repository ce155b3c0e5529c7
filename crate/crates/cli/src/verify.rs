//! Property suite behind the `verify` command.

use nalgebra::{Point2, Rotation3, Vector2, Vector3};
use serde::Serialize;

use helfrich::directors::{
    angle_parametrize, check_normal_estimate, check_pseudo_estimate, recovery_director,
    structural_residuals, DirectorField, Family, RatioStats,
};
use helfrich::energy::{discrete_energy, gauss_map, gauss_map_jacobian, spot_check_assumptions, Integrand};
use helfrich::optimize::objective_gradient;
use helfrich::surfaces::{catalog, SurfaceCatalogEntry};
use helfrich::{EdgeKey, Error};

use crate::commands::{build_level, initial_field, Level};
use crate::config::ExperimentConfig;
use crate::report::write_json;
use crate::CliError;

pub const DERIVATIVE_GRAD_TOL: f64 = 1e-6;
pub const DERIVATIVE_HESS_TOL: f64 = 1e-5;
pub const STRUCTURAL_TOL: f64 = 1e-12;
pub const INVARIANCE_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const JACOBIAN_TOL: f64 = 1e-6;
/// Edges probed by the finite-difference gradient check.
const GRADIENT_PROBES: usize = 40;
const ASSUMPTION_SAMPLES: usize = 200;

/// One failed check, with the edge responsible when there is one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub surface: String,
    pub check: String,
    pub detail: String,
    pub edge: Option<EdgeKey>,
}

impl Failure {
    pub fn from_error(check: &str, err: &Error) -> Self {
        Failure {
            surface: String::new(),
            check: check.to_string(),
            detail: err.to_string(),
            edge: error_edge(err),
        }
    }
}

fn error_edge(err: &Error) -> Option<EdgeKey> {
    match err {
        Error::FoldBack { edge }
        | Error::DegenerateProjection { edge }
        | Error::OrientationViolation { edge, .. }
        | Error::ConstraintViolation { edge, .. }
        | Error::FlatMismatch { edge, .. }
        | Error::DegenerateDual { edge, .. } => Some(*edge),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub surface: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<EdgeKey>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    /// Comparison ratio statistics per surface, for the record.
    pub unit_ratios: Vec<(String, RatioStats)>,
    pub pseudo_ratios: Vec<(String, RatioStats)>,
}

impl VerifyReport {
    fn record(&mut self, surface: &str, check: &str, passed: bool, detail: String) {
        self.checks.push(CheckOutcome {
            surface: surface.to_string(),
            check: check.to_string(),
            passed,
            detail,
            edge: None,
        });
    }

    fn record_error(&mut self, surface: &str, check: &str, err: &Error) {
        self.checks.push(CheckOutcome {
            surface: surface.to_string(),
            check: check.to_string(),
            passed: false,
            detail: err.to_string(),
            edge: error_edge(err),
        });
    }

    pub fn failures(&self) -> Vec<Failure> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| Failure {
                surface: c.surface.clone(),
                check: c.check.clone(),
                detail: c.detail.clone(),
                edge: c.edge,
            })
            .collect()
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.surface.len()).max().unwrap_or(0);
        let check_width = self.checks.iter().map(|c| c.check.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            out += &format!(
                "{} {:width$} {:check_width$} {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.surface,
                c.check,
                c.detail
            );
        }
        out
    }
}

/// Runs the suite on the configured surface, or on every catalog surface when
/// the name is `all`.
pub fn run_suite(config: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let surfaces = if config.surface.name == "all" {
        catalog()
    } else {
        vec![config.surface()?]
    };
    let mut checked = config.clone();
    checked.surface.name = surfaces[0].name().to_string();
    checked.validate()?;
    let integrand = config.integrand()?;

    let mut report = VerifyReport::default();
    check_gauss_map(&mut report);
    let assumptions = spot_check_assumptions(&integrand, ASSUMPTION_SAMPLES, 7);
    report.record(
        "-",
        "integrand assumptions",
        assumptions.passed(),
        format!(
            "{}: {} samples, {} coercivity and {} convexity failures",
            integrand.name(),
            assumptions.samples,
            assumptions.coercivity_failures,
            assumptions.convexity_failures
        ),
    );
    for surface in &surfaces {
        let mut local = config.clone();
        local.surface.name = surface.name().to_string();
        check_surface(&local, surface, &integrand, &mut report)?;
    }
    Ok(report)
}

pub fn cmd_verify(config: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let report = run_suite(config)?;
    print!("{}", report.table());
    std::fs::create_dir_all(&config.output.dir)?;
    let failures = report.failures();
    #[derive(Serialize)]
    struct Output<'a> {
        passed: bool,
        report: &'a VerifyReport,
        failures: &'a [Failure],
    }
    write_json(
        &config.output.dir.join("verify.json"),
        &Output {
            passed: failures.is_empty(),
            report: &report,
            failures: &failures,
        },
    )?;
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Verification(failures))
    }
}

/// Deterministic, well-spread sample points of the slope plane.
fn slope_samples(count: usize) -> impl Iterator<Item = Vector2<f64>> {
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    (0..count).map(move |k| {
        let radius = 3.0 * ((k as f64 + 0.5) / count as f64).sqrt();
        let angle = 2.0 * std::f64::consts::PI * k as f64 / golden;
        Vector2::new(radius * angle.cos(), radius * angle.sin())
    })
}

fn check_gauss_map(report: &mut VerifyReport) {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for p in slope_samples(100) {
        let jac = gauss_map_jacobian(&p);
        for k in 0..2 {
            let mut step = Vector2::zeros();
            step[k] = h;
            let fd = (gauss_map(&(p + step)) - gauss_map(&(p - step))) / (2.0 * h);
            worst = worst.max((fd - jac.column(k)).amax());
        }
    }
    report.record(
        "-",
        "gauss map jacobian",
        worst <= JACOBIAN_TOL,
        format!("max deviation from central differences {worst:e} at 100 slopes"),
    );
}

fn check_surface(
    config: &ExperimentConfig,
    surface: &SurfaceCatalogEntry,
    integrand: &Integrand,
    report: &mut VerifyReport,
) -> Result<(), CliError> {
    let name = surface.name();
    let level = match build_level(config, surface, config.mesh.n) {
        Ok(level) => level,
        Err(CliError::Numerical(err)) => {
            report.record_error(name, "mesh", &err);
            return Ok(());
        }
        Err(other) => return Err(other),
    };
    let complex = &level.complex;
    let mesh = complex.base();

    let (mut grad_err, mut hess_err) = (0.0f64, 0.0f64);
    for t in 0..mesh.triangles().len() {
        let pts = mesh.triangle_points(t);
        let centroid = Point2::from((pts[0].coords + pts[1].coords + pts[2].coords) / 3.0);
        let (g, h) = surface.graph.derivative_mismatch(&centroid);
        grad_err = grad_err.max(g);
        hess_err = hess_err.max(h);
    }
    report.record(
        name,
        "surface derivatives",
        grad_err <= DERIVATIVE_GRAD_TOL && hess_err <= DERIVATIVE_HESS_TOL,
        format!("gradient {grad_err:e}, hessian {hess_err:e} against central differences"),
    );

    let regularity = complex.regularity();
    report.record(
        name,
        "mesh regularity",
        regularity.is_regular(config.tolerances.regularity),
        format!(
            "h = {:e}, C* = {:e} (threshold {:e})",
            regularity.size_h, regularity.c_star, config.tolerances.regularity
        ),
    );

    let source = match config.directors.source.as_str() {
        "optimize" => "recovery",
        other => other,
    };
    let field = match initial_field(config, surface, &level, source) {
        Ok(field) => field,
        Err(CliError::Numerical(err)) => {
            report.record_error(name, "director constraints", &err);
            return Ok(());
        }
        Err(other) => return Err(other),
    };
    if let Err(err) = field.validate(complex) {
        report.record_error(name, "director constraints", &err);
        return Ok(());
    }
    report.record(
        name,
        "director constraints",
        true,
        format!("{} {} directors on {} edges", source, field.family().as_str(), field.values().len()),
    );

    let residuals = structural_residuals(complex, &field);
    report.record(
        name,
        "structural identities",
        residuals.max() <= STRUCTURAL_TOL,
        format!(
            "lift {:e}, normal {:e}, midpoint {:e}",
            residuals.lift, residuals.normal, residuals.midpoint
        ),
    );

    check_estimates(surface, &level, &field, config.tolerances.pseudo_threshold, report);
    check_invariance(name, &level, &field, report);
    check_gradient(name, &level, &field, integrand, config.quadrature.order, report);
    Ok(())
}

fn check_estimates(
    surface: &SurfaceCatalogEntry,
    level: &Level,
    field: &DirectorField,
    threshold: f64,
    report: &mut VerifyReport,
) {
    let name = surface.name();
    let complex = &level.complex;
    // the unit estimate needs a unit field; fall back on recovery otherwise
    let unit = match field.family() {
        Family::Unit => Ok(field.clone()),
        Family::PseudoUnit => recovery_director(complex, &surface.graph),
    };
    let unit = match unit {
        Ok(unit) => unit,
        Err(err) => return report.record_error(name, "normal estimate", &err),
    };
    match check_normal_estimate(complex, &unit) {
        Ok(stats) => {
            report.record(name, "normal estimate", true, ratio_detail(&stats));
            report.unit_ratios.push((name.to_string(), stats));
        }
        Err(err) => report.record_error(name, "normal estimate", &err),
    }
    let pseudo = match field.family() {
        Family::PseudoUnit => Ok(field.clone()),
        Family::Unit => field.to_pseudo_unit(complex),
    };
    match pseudo {
        Ok(pseudo) => {
            let stats = check_pseudo_estimate(complex, &pseudo, threshold);
            report.record(
                name,
                "pseudo estimate",
                true,
                format!("{}, {} hypothesis failures", ratio_detail(&stats.ratios), stats.hypothesis_failures),
            );
            report.pseudo_ratios.push((name.to_string(), stats.ratios));
        }
        Err(err) => report.record_error(name, "pseudo estimate", &err),
    }
}

fn ratio_detail(stats: &RatioStats) -> String {
    if stats.count == 0 {
        return format!("vacuous, {} flat pairs", stats.flat_pairs);
    }
    format!(
        "max ratio {:.4}, mean {:.4} over {} pairs, {} flat pairs",
        stats.max, stats.mean, stats.count, stats.flat_pairs
    )
}

/// Discrete Willmore energy under a rigid motion and a dilation.
fn check_invariance(name: &str, level: &Level, field: &DirectorField, report: &mut VerifyReport) {
    let willmore = Integrand::willmore();
    let complex = &level.complex;
    let outcome = (|| -> Result<(f64, f64, f64), Error> {
        let base = discrete_energy(complex, field, &willmore, 1)?.total;
        let rotation = Rotation3::from_euler_angles(0.3, -0.7, 1.1);
        let moved = complex.rigidly_moved(&rotation, &Vector3::new(0.4, -1.3, 2.0))?;
        let rotated: Vec<Vector3<f64>> = field.values().iter().map(|v| rotation * v).collect();
        let rotated = DirectorField::new_unchecked(rotated, field.family());
        let moved_energy = discrete_energy(&moved, &rotated, &willmore, 1)?.total;
        let scaled = complex.scaled(2.5)?;
        let scaled_energy = discrete_energy(&scaled, field, &willmore, 1)?.total;
        Ok((base, moved_energy, scaled_energy))
    })();
    match outcome {
        Ok((base, moved, scaled)) => {
            let scale = base.abs().max(1.0);
            let rigid = (moved - base).abs() / scale;
            let dilation = (scaled - base).abs() / scale;
            report.record(
                name,
                "willmore invariance",
                rigid <= INVARIANCE_TOL && dilation <= INVARIANCE_TOL,
                format!("rigid motion {rigid:e}, scaling {dilation:e}"),
            );
        }
        Err(err) => report.record_error(name, "willmore invariance", &err),
    }
}

/// Analytic parameter gradient against central differences on a spread of
/// edges.
fn check_gradient(
    name: &str,
    level: &Level,
    field: &DirectorField,
    integrand: &Integrand,
    quad_order: usize,
    report: &mut VerifyReport,
) {
    let complex = &level.complex;
    let outcome = (|| -> Result<f64, Error> {
        let grad = objective_gradient(complex, field, integrand, quad_order)?;
        let edges = complex.num_edges();
        let stride = edges.div_ceil(GRADIENT_PROBES).max(1);
        let h = 1e-6;
        let mut diff_sq = 0.0;
        let mut norm_sq = 0.0;
        for e in (0..edges).step_by(stride) {
            let frame = angle_parametrize(complex, e);
            let shifted = |delta: f64| -> Result<f64, Error> {
                let mut values = field.values().to_vec();
                values[e] = match field.family() {
                    Family::PseudoUnit => frame.pseudo(frame.slope_of(&values[e]) + delta),
                    Family::Unit => frame.unit(frame.angle_of(&values[e]) + delta),
                };
                let perturbed = DirectorField::new_unchecked(values, field.family());
                Ok(discrete_energy(complex, &perturbed, integrand, quad_order)?.total)
            };
            let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
            diff_sq += (fd - grad[e]).powi(2);
            norm_sq += fd * fd;
        }
        Ok(diff_sq.sqrt() / norm_sq.sqrt().max(1.0))
    })();
    match outcome {
        Ok(err) => report.record(
            name,
            "objective gradient",
            err <= GRADIENT_TOL,
            format!("relative deviation from central differences {err:e}"),
        ),
        Err(err) => report.record_error(name, "objective gradient", &err),
    }
}
