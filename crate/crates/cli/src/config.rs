//! Experiment configuration: TOML file sections overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use helfrich::directors::{Family, DEFAULT_PSEUDO_THRESHOLD};
use helfrich::energy::Integrand;
use helfrich::mesh::{Pattern, DEFAULT_REGULARITY_THRESHOLD};
use helfrich::optimize::{BoundaryDirectors, Tolerances};
use helfrich::quadrature::MAX_QUADRATURE_ORDER;
use helfrich::surfaces::{lookup, SurfaceCatalogEntry};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub surface: SurfaceSection,
    pub mesh: MeshSection,
    pub integrand: IntegrandSection,
    pub directors: DirectorSection,
    pub quadrature: QuadratureSection,
    pub tolerances: ToleranceSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSection {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub pattern: String,
    /// Subdivisions of the coarsest mesh.
    pub n: usize,
    pub refinements: usize,
    /// `unit-square`, `centered-square`, or unset for the surface's own domain.
    pub domain: Option<String>,
    /// Read the mesh from this file instead of generating it.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrandSection {
    pub spec: String,
    pub allow_assumption_violating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectorSection {
    /// `recovery`, `n0`, `optimize` or `file`.
    pub source: String,
    pub family: String,
    pub file: Option<PathBuf>,
    pub boundary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub order: usize,
    pub reference_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    pub grad_tol: Option<f64>,
    pub step_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub pseudo_threshold: f64,
    pub regularity: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            grad_tol: None,
            step_tol: None,
            max_iters: None,
            pseudo_threshold: DEFAULT_PSEUDO_THRESHOLD,
            regularity: DEFAULT_REGULARITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub fd: bool,
    pub per_triangle: bool,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self {
            name: "paraboloid".into(),
        }
    }
}

impl Default for MeshSection {
    fn default() -> Self {
        Self {
            pattern: "right".into(),
            n: 8,
            refinements: 3,
            domain: None,
            file: None,
        }
    }
}

impl Default for IntegrandSection {
    fn default() -> Self {
        Self {
            spec: "willmore".into(),
            allow_assumption_violating: false,
        }
    }
}

impl Default for DirectorSection {
    fn default() -> Self {
        Self {
            source: "recovery".into(),
            family: "unit".into(),
            file: None,
            boundary: "free".into(),
        }
    }
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            order: 4,
            reference_order: MAX_QUADRATURE_ORDER,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            fd: false,
            per_triangle: false,
        }
    }
}

/// Command-line overrides; every config key has one.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Catalog surface name
    #[arg(long, global = true)]
    pub surface: Option<String>,
    /// Triangulation pattern: right or crisscross
    #[arg(long, global = true)]
    pub pattern: Option<String>,
    /// Subdivisions of the coarsest mesh
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub refinements: Option<usize>,
    /// unit-square or centered-square; defaults to the surface's domain
    #[arg(long, global = true)]
    pub domain: Option<String>,
    #[arg(long, global = true)]
    pub mesh_file: Option<PathBuf>,
    /// willmore, p-willmore:<p>, weighted-willmore:<a>, spontaneous-curvature:<h0>
    #[arg(long, global = true)]
    pub integrand: Option<String>,
    #[arg(long, global = true)]
    pub allow_assumption_violating: bool,
    /// recovery, n0, optimize or file
    #[arg(long, global = true)]
    pub directors: Option<String>,
    /// unit or pseudo_unit
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub director_file: Option<PathBuf>,
    /// free or fixed
    #[arg(long, global = true)]
    pub boundary: Option<String>,
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    #[arg(long, global = true)]
    pub reference_order: Option<usize>,
    #[arg(long, global = true)]
    pub grad_tol: Option<f64>,
    #[arg(long, global = true)]
    pub step_tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    #[arg(long, global = true)]
    pub pseudo_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Add the finite-difference energy column
    #[arg(long, global = true)]
    pub fd: bool,
    /// Include per-triangle contributions in JSON reports
    #[arg(long, global = true)]
    pub per_triangle: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        set(&mut self.surface.name, &o.surface);
        set(&mut self.mesh.pattern, &o.pattern);
        set(&mut self.mesh.n, &o.n);
        set(&mut self.mesh.refinements, &o.refinements);
        if o.domain.is_some() {
            self.mesh.domain = o.domain.clone();
        }
        if o.mesh_file.is_some() {
            self.mesh.file = o.mesh_file.clone();
        }
        set(&mut self.integrand.spec, &o.integrand);
        self.integrand.allow_assumption_violating |= o.allow_assumption_violating;
        set(&mut self.directors.source, &o.directors);
        set(&mut self.directors.family, &o.family);
        if o.director_file.is_some() {
            self.directors.file = o.director_file.clone();
        }
        set(&mut self.directors.boundary, &o.boundary);
        set(&mut self.quadrature.order, &o.quad_order);
        set(&mut self.quadrature.reference_order, &o.reference_order);
        if o.grad_tol.is_some() {
            self.tolerances.grad_tol = o.grad_tol;
        }
        if o.step_tol.is_some() {
            self.tolerances.step_tol = o.step_tol;
        }
        if o.max_iters.is_some() {
            self.tolerances.max_iters = o.max_iters;
        }
        set(&mut self.tolerances.pseudo_threshold, &o.pseudo_threshold);
        set(&mut self.output.dir, &o.out_dir);
        self.output.fd |= o.fd;
        self.output.per_triangle |= o.per_triangle;
    }

    pub fn surface(&self) -> Result<SurfaceCatalogEntry, CliError> {
        lookup(&self.surface.name).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn pattern(&self) -> Result<Pattern, CliError> {
        self.mesh
            .pattern
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown pattern `{}`", self.mesh.pattern)))
    }

    pub fn family(&self) -> Result<Family, CliError> {
        self.directors
            .family
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown director family `{}`", self.directors.family)))
    }

    pub fn boundary(&self) -> Result<BoundaryDirectors, CliError> {
        match self.directors.boundary.as_str() {
            "free" => Ok(BoundaryDirectors::Free),
            "fixed" => Ok(BoundaryDirectors::Fixed),
            other => Err(CliError::Usage(format!("unknown boundary mode `{other}`"))),
        }
    }

    pub fn integrand(&self) -> Result<Integrand, CliError> {
        Integrand::parse(&self.integrand.spec, self.integrand.allow_assumption_violating)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn tolerances(&self, family: Family) -> Tolerances {
        let mut t = Tolerances::for_family(family);
        if let Some(v) = self.tolerances.grad_tol {
            t.grad_tol = v;
        }
        if let Some(v) = self.tolerances.step_tol {
            t.step_tol = v;
        }
        if let Some(v) = self.tolerances.max_iters {
            t.max_iters = v;
        }
        t
    }

    /// Resolution of every level of a refinement study.
    pub fn levels(&self) -> Vec<usize> {
        (0..=self.mesh.refinements).map(|k| self.mesh.n << k).collect()
    }

    /// Checks names and ranges before any work is done.
    pub fn validate(&self) -> Result<(), CliError> {
        self.surface()?;
        self.pattern()?;
        self.family()?;
        self.boundary()?;
        self.integrand()?;
        if self.mesh.n == 0 {
            return Err(CliError::Usage("mesh.n must be positive".into()));
        }
        if !matches!(self.directors.source.as_str(), "recovery" | "n0" | "optimize" | "file") {
            return Err(CliError::Usage(format!(
                "unknown director source `{}`",
                self.directors.source
            )));
        }
        if self.directors.source == "file" && self.directors.file.is_none() && self.mesh.file.is_none() {
            return Err(CliError::Usage("director source `file` needs a director file".into()));
        }
        for order in [self.quadrature.order, self.quadrature.reference_order] {
            if order == 0 || order > MAX_QUADRATURE_ORDER {
                return Err(CliError::Usage(format!(
                    "quadrature order {order} outside 1..={MAX_QUADRATURE_ORDER}"
                )));
            }
        }
        if let Some(domain) = &self.mesh.domain {
            if !matches!(domain.as_str(), "unit-square" | "centered-square") {
                return Err(CliError::Usage(format!("unknown domain `{domain}`")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults_and_flags_override_file() {
        let mut config = ExperimentConfig::parse(
            "[surface]\nname = \"saddle\"\n[mesh]\nn = 4\npattern = \"crisscross\"\n",
        )
        .unwrap();
        assert_eq!(config.surface.name, "saddle");
        assert_eq!(config.mesh.refinements, ExperimentConfig::default().mesh.refinements);
        config.apply(&Overrides {
            n: Some(16),
            fd: true,
            ..Default::default()
        });
        assert_eq!(config.mesh.n, 16);
        assert_eq!(config.mesh.pattern, "crisscross");
        assert!(config.output.fd);
        assert_eq!(config.levels(), vec![16, 32, 64, 128]);
        config.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_names_are_usage_errors() {
        assert!(matches!(ExperimentConfig::parse("[mesh]\nsize = 3\n"), Err(CliError::Usage(_))));
        let mut config = ExperimentConfig::default();
        config.mesh.pattern = "diagonal".into();
        assert!(matches!(config.validate(), Err(CliError::Usage(_))));
        let mut config = ExperimentConfig::default();
        config.surface.name = "torus".into();
        assert!(matches!(config.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn tolerance_overrides_reach_the_solver_settings() {
        let mut config = ExperimentConfig::default();
        config.tolerances.max_iters = Some(7);
        let t = config.tolerances(Family::PseudoUnit);
        assert_eq!(t.max_iters, 7);
        assert_eq!(t.grad_tol, 1e-10);
    }
}
