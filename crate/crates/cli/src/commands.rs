//! The five subcommands. Each reads a resolved config, writes its files into
//! the output directory and prints a short summary.

use std::path::{Path, PathBuf};

use serde::Serialize;

use helfrich::directors::{recovery_director, DirectorField, Family};
use helfrich::energy::{continuous_energy, discrete_energy, fd_energy};
use helfrich::io::{director_entries, read_mesh_path, write_mesh_path, MeshFile};
use helfrich::mesh::{structured_mesh, Rectangle, TriangularComplex3D, Triangulation2D};
use helfrich::optimize::{optimize, OptimizationProblem, OptimizationResult};
use helfrich::surfaces::{nodal_sample, SurfaceCatalogEntry};

use crate::config::ExperimentConfig;
use crate::report::{energy_csv, write_json, ConvergeSummary, EnergyJson, EnergyRow};
use crate::study::{measure_level, LevelOptions};
use crate::CliError;

/// Planar mesh at resolution `n` as the config describes it.
pub fn generate_mesh(
    config: &ExperimentConfig,
    surface: &SurfaceCatalogEntry,
    n: usize,
) -> Result<Triangulation2D, CliError> {
    let pattern = config.pattern()?;
    let mesh = match config.mesh.domain.as_deref() {
        Some("unit-square") => structured_mesh(&Rectangle::unit_square(), n, pattern)?,
        Some("centered-square") => structured_mesh(&Rectangle::centered_square(0.5), n, pattern)?,
        Some(other) => return Err(CliError::Usage(format!("unknown domain `{other}`"))),
        None => surface.mesher.mesh(n, pattern)?,
    };
    Ok(mesh)
}

/// The lifted complex of one level, plus the mesh file it came from if any.
pub struct Level {
    pub complex: TriangularComplex3D,
    pub file: Option<MeshFile>,
}

pub fn build_level(
    config: &ExperimentConfig,
    surface: &SurfaceCatalogEntry,
    n: usize,
) -> Result<Level, CliError> {
    let (mesh, nodal, file) = match &config.mesh.file {
        Some(path) => {
            let file = read_mesh_path(path)?;
            (file.mesh.clone(), file.nodal.clone(), Some(file))
        }
        None => (generate_mesh(config, surface, n)?, None, None),
    };
    let nodal = match nodal {
        Some(values) => values,
        None => nodal_sample(&surface.graph, &mesh)?,
    };
    let complex = TriangularComplex3D::push_forward(&mesh, &nodal)?;
    Ok(Level { complex, file })
}

/// Director values stored in a file, matched to the complex by edge key.
pub fn directors_from_file(
    complex: &TriangularComplex3D,
    file: &MeshFile,
) -> Result<DirectorField, CliError> {
    let (family, entries) = file
        .directors
        .as_ref()
        .ok_or_else(|| CliError::Usage("mesh file has no directors section".into()))?;
    let edges = complex.base().edges();
    let mut values = vec![None; edges.len()];
    for (key, value) in entries {
        let e = complex
            .base()
            .edge_index(*key)
            .ok_or_else(|| CliError::Usage(format!("director file names missing edge {key:?}")))?;
        values[e] = Some(*value);
    }
    let values = values
        .into_iter()
        .zip(edges)
        .map(|(v, edge)| {
            v.ok_or_else(|| CliError::Usage(format!("director file lacks edge {:?}", edge.key)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DirectorField::new_unchecked(values, *family))
}

fn file_for_directors(config: &ExperimentConfig, level: &Level) -> Result<MeshFile, CliError> {
    match (&config.directors.file, &level.file) {
        (Some(path), _) => Ok(read_mesh_path(path)?),
        (None, Some(file)) => Ok(file.clone()),
        (None, None) => Err(CliError::Usage("director source `file` needs a director file".into())),
    }
}

/// Starting field for the configured family: the recovery field, the
/// a-priori normals, or the contents of a file. File fields are not validated
/// here so `verify` can report their violations.
pub fn initial_field(
    config: &ExperimentConfig,
    surface: &SurfaceCatalogEntry,
    level: &Level,
    source: &str,
) -> Result<DirectorField, CliError> {
    let family = config.family()?;
    let complex = &level.complex;
    Ok(match source {
        "recovery" | "optimize" => {
            let recovery = recovery_director(complex, &surface.graph)?;
            match family {
                Family::Unit => recovery,
                Family::PseudoUnit => recovery.to_pseudo_unit(complex)?,
            }
        }
        "n0" => DirectorField::apriori(complex, family),
        "file" => directors_from_file(complex, &file_for_directors(config, level)?)?,
        other => return Err(CliError::Usage(format!("unknown director source `{other}`"))),
    })
}

pub fn run_optimization(
    config: &ExperimentConfig,
    complex: &TriangularComplex3D,
    initial: DirectorField,
) -> Result<OptimizationResult, CliError> {
    let mut problem = OptimizationProblem::new(complex.clone(), config.integrand()?, initial)?;
    problem.tolerances = config.tolerances(problem.family());
    problem.quad_order = config.quadrature.order;
    problem.boundary = config.boundary()?;
    Ok(optimize(&problem)?)
}

/// The field the configured director source produces, validated.
pub fn director_field(
    config: &ExperimentConfig,
    surface: &SurfaceCatalogEntry,
    level: &Level,
) -> Result<DirectorField, CliError> {
    let source = config.directors.source.as_str();
    let initial = initial_field(config, surface, level, source)?;
    initial.validate(&level.complex)?;
    if source == "optimize" {
        return Ok(run_optimization(config, &level.complex, initial)?.field);
    }
    Ok(initial)
}

fn output_dir(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&config.output.dir)?;
    Ok(config.output.dir.clone())
}

pub fn cmd_mesh(config: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf, CliError> {
    config.validate()?;
    let surface = config.surface()?;
    let mesh = generate_mesh(config, &surface, config.mesh.n)?;
    let mut file = MeshFile::new(mesh);
    if config.mesh.domain.is_none() {
        file.nodal = Some(nodal_sample(&surface.graph, &file.mesh)?);
    }
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => output_dir(config)?.join("mesh.txt"),
    };
    write_mesh_path(&path, &file)?;
    let regularity = file.mesh.regularity();
    println!(
        "wrote {} vertices, {} triangles (h = {:e}, C* = {:e}) to {}",
        file.mesh.vertices().len(),
        file.mesh.triangles().len(),
        regularity.size_h,
        regularity.c_star,
        path.display()
    );
    Ok(path)
}

#[derive(Debug, Serialize)]
struct EnergyOutput {
    surface: String,
    directors: String,
    family: String,
    discrete: EnergyJson,
    continuous: EnergyJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    fd: Option<EnergyJson>,
    error_abs: f64,
    error_rel: f64,
}

pub fn cmd_energy(config: &ExperimentConfig) -> Result<EnergyRow, CliError> {
    config.validate()?;
    let surface = config.surface()?;
    let integrand = config.integrand()?;
    let level = build_level(config, &surface, config.mesh.n)?;
    let field = director_field(config, &surface, &level)?;
    let discrete = discrete_energy(&level.complex, &field, &integrand, config.quadrature.order)?;
    let continuous = continuous_energy(
        &surface.graph,
        &integrand,
        config.quadrature.reference_order,
        level.complex.base(),
    )?;
    let fd = if config.output.fd {
        Some(fd_energy(&level.complex)?)
    } else {
        None
    };
    let row = EnergyRow::new(&discrete, &continuous, fd.as_ref());
    let dir = output_dir(config)?;
    let csv = energy_csv(std::slice::from_ref(&row), config.output.fd)?;
    std::fs::write(dir.join("energy.csv"), &csv)?;
    let per_triangle = config.output.per_triangle;
    write_json(
        &dir.join("energy.json"),
        &EnergyOutput {
            surface: surface.name().to_string(),
            directors: config.directors.source.clone(),
            family: field.family().as_str().to_string(),
            discrete: EnergyJson::new(&discrete, per_triangle),
            continuous: EnergyJson::new(&continuous, per_triangle),
            fd: fd.as_ref().map(|r| EnergyJson::new(r, per_triangle)),
            error_abs: row.error_abs,
            error_rel: row.error_rel,
        },
    )?;
    print!("{csv}");
    Ok(row)
}

pub fn cmd_converge(config: &ExperimentConfig) -> Result<ConvergeSummary, CliError> {
    config.validate()?;
    if config.mesh.refinements < 3 {
        return Err(CliError::Usage("converge needs at least 3 refinements".into()));
    }
    if config.mesh.file.is_some() {
        return Err(CliError::Usage("converge generates its own meshes; drop the mesh file".into()));
    }
    if config.directors.source == "file" {
        return Err(CliError::Usage("converge cannot read directors from a file".into()));
    }
    let surface = config.surface()?;
    let integrand = config.integrand()?;
    let family = config.family()?;
    let options = LevelOptions {
        quad_order: config.quadrature.order,
        reference_order: config.quadrature.reference_order,
        with_fd: config.output.fd,
        pseudo_threshold: config.tolerances.pseudo_threshold,
        compare_recovery: (config.directors.source != "recovery").then_some(family),
    };
    let source = |complex: &TriangularComplex3D, surface: &SurfaceCatalogEntry| {
        let level = Level {
            complex: complex.clone(),
            file: None,
        };
        director_field(config, surface, &level).map_err(|e| match e {
            CliError::Numerical(err) => err,
            other => helfrich::Error::InvalidInput(other.to_string()),
        })
    };
    let mut levels = Vec::new();
    for n in config.levels() {
        let mesh = generate_mesh(config, &surface, n)?;
        levels.push(measure_level(&surface, &integrand, n, &mesh, &source, &options)?);
    }
    let summary = ConvergeSummary::new(
        surface.name().to_string(),
        config.mesh.pattern.clone(),
        integrand.name(),
        format!("{}/{}", config.directors.source, family.as_str()),
        levels,
    );
    let dir = output_dir(config)?;
    let csv = summary.csv(config.output.fd)?;
    std::fs::write(dir.join("converge.csv"), &csv)?;
    write_json(&dir.join("converge.json"), &summary)?;
    print!("{csv}");
    println!(
        "fitted slopes: energy {:.3}, height {:.3}, slope {:.3}, director {:.3}, director gradient {:.3}",
        summary.energy.slope,
        summary.height.slope,
        summary.slope.slope,
        summary.director.slope,
        summary.director_gradient.slope
    );
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct OptimizeOutput {
    surface: String,
    family: String,
    integrand: String,
    initial: String,
    objective: f64,
    initial_objective: f64,
    discrete_energy: f64,
    iterations: usize,
    converged: bool,
    kkt_residual: f64,
    history: Vec<f64>,
    directors_file: PathBuf,
}

pub fn cmd_optimize(config: &ExperimentConfig) -> Result<OptimizationResult, CliError> {
    config.validate()?;
    let surface = config.surface()?;
    let integrand = config.integrand()?;
    let level = build_level(config, &surface, config.mesh.n)?;
    let source = match config.directors.source.as_str() {
        "optimize" => "recovery",
        other => other,
    };
    let initial = initial_field(config, &surface, &level, source)?;
    if initial.family() != config.family()? {
        return Err(CliError::Usage(format!(
            "initial directors are {}, config asks for {}",
            initial.family().as_str(),
            config.directors.family
        )));
    }
    initial.validate(&level.complex)?;
    let result = run_optimization(config, &level.complex, initial)?;
    let energy = discrete_energy(&level.complex, &result.field, &integrand, config.quadrature.order)?;

    let dir = output_dir(config)?;
    let base = level.complex.base().clone();
    let nodal: Vec<f64> = level.complex.points().iter().map(|p| p.z).collect();
    let mut file = MeshFile::new(base);
    file.directors = Some((
        result.field.family(),
        director_entries(&file.mesh, result.field.values()),
    ));
    file.nodal = Some(nodal);
    let directors_file = dir.join("optimized.txt");
    write_mesh_path(&directors_file, &file)?;
    write_json(
        &dir.join("optimize.json"),
        &OptimizeOutput {
            surface: surface.name().to_string(),
            family: result.field.family().as_str().to_string(),
            integrand: integrand.name(),
            initial: source.to_string(),
            objective: result.objective,
            initial_objective: result.initial_objective,
            discrete_energy: energy.total,
            iterations: result.iterations,
            converged: result.converged,
            kkt_residual: result.kkt_residual,
            history: result.history.clone(),
            directors_file: directors_file.clone(),
        },
    )?;
    println!(
        "{} directors: objective {:e} (initial {:e}) after {} iterations, converged = {}, residual {:e}",
        result.field.family().as_str(),
        result.objective,
        result.initial_objective,
        result.iterations,
        result.converged,
        result.kkt_residual
    );
    if !result.converged {
        eprintln!("warning: iteration limit reached; wrote the best iterate");
    }
    Ok(result)
}
