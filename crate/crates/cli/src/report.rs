//! CSV tables and JSON reports written by the commands.

use std::path::Path;

use serde::Serialize;

use helfrich::energy::EnergyReport;

use crate::study::{fit_rates, LevelMetrics, RateFit};
use crate::CliError;

/// Shortest representation that parses back to the same value.
fn real(v: f64) -> String {
    format!("{v:e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub const ENERGY_COLUMNS: [&str; 7] = [
    "h",
    "c_star",
    "E_discrete",
    "E_continuous",
    "E_fd",
    "error_abs",
    "error_rel",
];

/// Energy table with the E_fd column present only when requested.
pub fn energy_csv(rows: &[EnergyRow], with_fd: bool) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = ENERGY_COLUMNS
        .iter()
        .copied()
        .filter(|c| with_fd || *c != "E_fd")
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for row in rows {
        let mut record = vec![real(row.h), real(row.c_star), real(row.e_discrete), real(row.e_continuous)];
        if with_fd {
            record.push(optional(row.e_fd));
        }
        record.push(real(row.error_abs));
        record.push(real(row.error_rel));
        w.write_record(&record).map_err(csv_error)?;
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub h: f64,
    pub c_star: f64,
    pub e_discrete: f64,
    pub e_continuous: f64,
    pub e_fd: Option<f64>,
    pub error_abs: f64,
    pub error_rel: f64,
}

impl EnergyRow {
    pub fn new(discrete: &EnergyReport, continuous: &EnergyReport, fd: Option<&EnergyReport>) -> Self {
        let error_abs = (discrete.total - continuous.total).abs();
        Self {
            h: discrete.size_h,
            c_star: discrete.c_star,
            e_discrete: discrete.total,
            e_continuous: continuous.total,
            e_fd: fd.map(|r| r.total),
            error_abs,
            error_rel: relative(error_abs, continuous.total),
        }
    }
}

pub fn relative(error: f64, reference: f64) -> f64 {
    if reference != 0.0 {
        error / reference.abs()
    } else {
        error
    }
}

/// JSON form of an energy report; per-triangle values only on request.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyJson {
    pub integrand: String,
    pub h: f64,
    pub c_star: f64,
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_triangle: Option<Vec<f64>>,
    pub quad_order: usize,
}

impl EnergyJson {
    pub fn new(report: &EnergyReport, per_triangle: bool) -> Self {
        Self {
            integrand: report.integrand.clone(),
            h: report.size_h,
            c_star: report.c_star,
            total: report.total,
            per_triangle: per_triangle.then(|| report.per_triangle.clone()),
            quad_order: report.quad_order,
        }
    }
}

pub const CONVERGE_COLUMNS: [&str; 24] = [
    "n",
    "h",
    "c_star",
    "E_discrete",
    "E_continuous",
    "E_fd",
    "E_recovery",
    "error_abs",
    "error_rel",
    "rate_energy",
    "height_sup",
    "rate_height",
    "slope_l2",
    "rate_slope",
    "director_midpoint",
    "rate_director",
    "director_gradient_sup",
    "rate_director_gradient",
    "unit_ratio_max",
    "unit_ratio_mean",
    "pseudo_ratio_max",
    "pseudo_ratio_mean",
    "pseudo_hypothesis_failures",
    "flat_pairs",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeSummary {
    pub surface: String,
    pub pattern: String,
    pub integrand: String,
    pub directors: String,
    pub energy: RateFit,
    pub height: RateFit,
    pub slope: RateFit,
    pub director: RateFit,
    pub director_gradient: RateFit,
    pub levels: Vec<LevelMetrics>,
}

impl ConvergeSummary {
    pub fn new(
        surface: String,
        pattern: String,
        integrand: String,
        directors: String,
        levels: Vec<LevelMetrics>,
    ) -> Self {
        let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let fit = |f: fn(&LevelMetrics) -> f64| {
            let err: Vec<f64> = levels.iter().map(f).collect();
            fit_rates(&h, &err)
        };
        Self {
            energy: fit(|m| m.error_abs),
            height: fit(|m| m.height_sup),
            slope: fit(|m| m.slope_l2),
            director: fit(|m| m.director_midpoint),
            director_gradient: fit(|m| m.director_gradient_sup),
            surface,
            pattern,
            integrand,
            directors,
            levels,
        }
    }

    pub fn csv(&self, with_fd: bool) -> Result<String, CliError> {
        let with_recovery = self.levels.iter().any(|l| l.e_recovery.is_some());
        let keep = |c: &str| (with_fd || c != "E_fd") && (with_recovery || c != "E_recovery");
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = CONVERGE_COLUMNS.iter().copied().filter(|c| keep(c)).collect();
        w.write_record(&header).map_err(csv_error)?;
        let rate = |fit: &RateFit, k: usize| {
            if k == 0 {
                String::new()
            } else {
                real(fit.successive[k - 1])
            }
        };
        for (k, m) in self.levels.iter().enumerate() {
            let cells: Vec<(&str, String)> = vec![
                ("n", m.n.to_string()),
                ("h", real(m.h)),
                ("c_star", real(m.c_star)),
                ("E_discrete", real(m.e_discrete)),
                ("E_continuous", real(m.e_continuous)),
                ("E_fd", optional(m.e_fd)),
                ("E_recovery", optional(m.e_recovery)),
                ("error_abs", real(m.error_abs)),
                ("error_rel", real(m.error_rel)),
                ("rate_energy", rate(&self.energy, k)),
                ("height_sup", real(m.height_sup)),
                ("rate_height", rate(&self.height, k)),
                ("slope_l2", real(m.slope_l2)),
                ("rate_slope", rate(&self.slope, k)),
                ("director_midpoint", real(m.director_midpoint)),
                ("rate_director", rate(&self.director, k)),
                ("director_gradient_sup", real(m.director_gradient_sup)),
                ("rate_director_gradient", rate(&self.director_gradient, k)),
                ("unit_ratio_max", real(m.unit_ratio.max)),
                ("unit_ratio_mean", real(m.unit_ratio.mean)),
                ("pseudo_ratio_max", real(m.pseudo_ratio.max)),
                ("pseudo_ratio_mean", real(m.pseudo_ratio.mean)),
                ("pseudo_hypothesis_failures", m.pseudo_hypothesis_failures.to_string()),
                ("flat_pairs", m.unit_ratio.flat_pairs.to_string()),
            ];
            let record: Vec<String> = cells
                .into_iter()
                .filter(|(c, _)| keep(c))
                .map(|(_, v)| v)
                .collect();
            w.write_record(&record).map_err(csv_error)?;
        }
        finish(w)
    }
}

fn csv_error(err: csv::Error) -> CliError {
    CliError::Usage(format!("csv: {err}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("json: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
