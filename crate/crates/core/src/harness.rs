//! Experiment harness: runs variant matrices over instances and reserve
//! levels, re-validates every returned point, and renders CSV or markdown
//! comparison reports with objective errors anchored to the
//! individual-unit formulation.

use crate::formulation::{
    build_formulation, check_schedule_feasibility, extract_schedule, BuildOptions, Variant,
};
use crate::instance::{generate_random_instance, parse_instance, GeneratorConfig, InstanceError, SystemInstance};
use crate::milp::ModelStats;
use crate::solver::{solve_model, BridgeError, SolveStatus, SolverConfig};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub enum InstanceSource {
    Path(PathBuf),
    Generated { label: String, config: GeneratorConfig },
    Inline { label: String, instance: SystemInstance },
}

impl InstanceSource {
    fn label(&self) -> String {
        match self {
            InstanceSource::Path(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            InstanceSource::Generated { label, .. } | InstanceSource::Inline { label, .. } => {
                label.clone()
            }
        }
    }

    fn load(&self) -> Result<SystemInstance, HarnessError> {
        match self {
            InstanceSource::Path(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", p.display())))?;
                parse_instance(&text).map_err(|e| HarnessError::Instance(self.label(), e))
            }
            InstanceSource::Generated { config, .. } => generate_random_instance(config)
                .map_err(|e| HarnessError::Instance(self.label(), e)),
            InstanceSource::Inline { instance, .. } => Ok(instance.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub instances: Vec<InstanceSource>,
    pub variants: Vec<Variant>,
    /// Reserve requirement overrides as fractions of demand; when empty the
    /// instance's own reserve series are used.
    pub reserve_levels: Vec<f64>,
    pub solver: SolverConfig,
    pub repetitions: u32,
    pub iuc_noise_pct: f64,
    pub noise_seed: u64,
    /// Concurrent solver processes; 0 picks the rayon default.
    pub workers: usize,
}

impl ExperimentPlan {
    pub fn new(solver: SolverConfig) -> Self {
        ExperimentPlan {
            instances: Vec::new(),
            variants: Variant::ALL.to_vec(),
            reserve_levels: Vec::new(),
            solver,
            repetitions: 1,
            iuc_noise_pct: 0.0,
            noise_seed: 0,
            workers: 0,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.instances.is_empty() || self.variants.is_empty() {
            return Err(HarnessError::Plan(
                "plan needs at least one instance and one variant".into(),
            ));
        }
        if self.reserve_levels.iter().any(|r| *r < 0.0) {
            return Err(HarnessError::Plan("reserve levels must be >= 0".into()));
        }
        if self.repetitions < 1 {
            return Err(HarnessError::Plan("repetitions must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub instance: String,
    pub reserve: Option<f64>,
    pub variant: Variant,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// (IUC - objective) / IUC; positive when the variant undercuts the
    /// individual-unit optimum.
    pub error_vs_iuc: Option<f64>,
    pub runtime_s: f64,
    pub gap: Option<f64>,
    pub stats: ModelStats,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub cells: Vec<CellResult>,
}

#[derive(Debug)]
pub enum HarnessError {
    Plan(String),
    Io(String),
    Instance(String, InstanceError),
    Bridge(BridgeError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Plan(m) => write!(f, "invalid experiment plan: {m}"),
            HarnessError::Io(m) => write!(f, "{m}"),
            HarnessError::Instance(label, e) => write!(f, "instance {label}: {e}"),
            HarnessError::Bridge(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<BridgeError> for HarnessError {
    fn from(e: BridgeError) -> Self {
        HarnessError::Bridge(e)
    }
}

struct CellSpec {
    base: usize,
    instance_label: String,
    reserve: Option<f64>,
    variant: Variant,
}

/// Runs the full matrix. The individual-unit cells of each (instance,
/// reserve) pair are solved first so every other cell can report its
/// objective error against that anchor; per-cell solver failures are
/// recorded in the cell and do not stop the run.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport, HarnessError> {
    plan.validate()?;
    plan.solver.validate()?;

    let mut bases: Vec<(String, Option<f64>, SystemInstance)> = Vec::new();
    for source in &plan.instances {
        let instance = source.load()?;
        if plan.reserve_levels.is_empty() {
            bases.push((source.label(), None, instance));
        } else {
            for &level in &plan.reserve_levels {
                bases.push((
                    source.label(),
                    Some(level),
                    instance.with_reserve_fraction(level),
                ));
            }
        }
    }

    let mut cells: Vec<CellSpec> = Vec::new();
    for (base, (label, reserve, _)) in bases.iter().enumerate() {
        for &variant in &plan.variants {
            for _rep in 0..plan.repetitions {
                cells.push(CellSpec {
                    base,
                    instance_label: label.clone(),
                    reserve: *reserve,
                    variant,
                });
            }
        }
    }

    let run_phase = |specs: Vec<(usize, &CellSpec)>,
                     anchors: &[Option<f64>]|
     -> Vec<(usize, CellResult)> {
        let body = || {
            use rayon::prelude::*;
            specs
                .par_iter()
                .map(|(index, spec)| {
                    let (_, _, instance) = &bases[spec.base];
                    let anchor = anchors.get(spec.base).copied().flatten();
                    (*index, run_cell(plan, spec, instance, anchor))
                })
                .collect()
        };
        match plan.workers {
            0 => body(),
            n => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("worker pool")
                .install(body),
        }
    };

    // Phase 1: anchor solves.
    let iuc_specs: Vec<(usize, &CellSpec)> = cells
        .iter()
        .enumerate()
        .filter(|(_, s)| s.variant == Variant::Iuc)
        .map(|(i, s)| (i, s))
        .collect();
    let no_anchors = vec![None; bases.len()];
    let iuc_results = run_phase(iuc_specs, &no_anchors);

    let mut anchors: Vec<Option<f64>> = vec![None; bases.len()];
    for (index, result) in &iuc_results {
        let base = cells[*index].base;
        if anchors[base].is_none() {
            anchors[base] = result.objective;
        }
    }

    // Phase 2: everything else, with errors against the anchors.
    let rest_specs: Vec<(usize, &CellSpec)> = cells
        .iter()
        .enumerate()
        .filter(|(_, s)| s.variant != Variant::Iuc)
        .map(|(i, s)| (i, s))
        .collect();
    let rest_results = run_phase(rest_specs, &anchors);

    let mut slots: Vec<Option<CellResult>> = vec![None; cells.len()];
    for (index, mut result) in iuc_results.into_iter().chain(rest_results) {
        if cells[index].variant == Variant::Iuc {
            result.error_vs_iuc = result.objective.map(|_| 0.0);
        }
        slots[index] = Some(result);
    }
    Ok(ExperimentReport {
        cells: slots.into_iter().map(|c| c.expect("all cells ran")).collect(),
    })
}

fn relative_error(anchor: f64, objective: f64) -> Option<f64> {
    if anchor == 0.0 {
        if objective == 0.0 {
            Some(0.0)
        } else {
            None
        }
    } else {
        Some((anchor - objective) / anchor)
    }
}

fn run_cell(
    plan: &ExperimentPlan,
    spec: &CellSpec,
    instance: &SystemInstance,
    anchor: Option<f64>,
) -> CellResult {
    let opts = BuildOptions {
        instance_id: spec.instance_label.clone(),
        iuc_noise_pct: if spec.variant == Variant::Iuc {
            plan.iuc_noise_pct
        } else {
            0.0
        },
        noise_seed: plan.noise_seed,
    };
    let mut cell = CellResult {
        instance: spec.instance_label.clone(),
        reserve: spec.reserve,
        variant: spec.variant,
        status: SolveStatus::Error,
        objective: None,
        error_vs_iuc: None,
        runtime_s: 0.0,
        gap: None,
        stats: ModelStats::default(),
        message: None,
    };

    let model = match build_formulation(instance, spec.variant, &opts) {
        Ok(m) => m,
        Err(e) => {
            cell.message = Some(e.to_string());
            return cell;
        }
    };
    cell.stats = model.statistics();

    let outcome = match solve_model(&model, &plan.solver, false) {
        Ok(o) => o,
        Err(e) => {
            cell.message = Some(e.to_string());
            return cell;
        }
    };
    cell.status = outcome.status;
    cell.runtime_s = outcome.wall_secs;
    cell.gap = outcome.gap;
    cell.message = outcome.message;

    if let Some(point) = &outcome.point {
        match extract_schedule(instance, spec.variant, point) {
            Ok(schedule) => {
                let violations = check_schedule_feasibility(instance, spec.variant, &schedule);
                if violations.is_empty() {
                    cell.objective = outcome.objective;
                    cell.error_vs_iuc = anchor.and_then(|a| {
                        outcome.objective.and_then(|o| relative_error(a, o))
                    });
                } else {
                    cell.status = SolveStatus::Error;
                    cell.message = Some(format!(
                        "feasibility recheck failed: {} (+{} more)",
                        violations[0],
                        violations.len().saturating_sub(1)
                    ));
                }
            }
            Err(e) => {
                cell.status = SolveStatus::Error;
                cell.message = Some(format!("schedule extraction failed: {e}"));
            }
        }
    }
    cell
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown format {other}; expected csv or markdown")),
        }
    }
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => emit_markdown(report),
    }
}

pub const CSV_HEADER: &str = "instance,reserve,variant,objective,error_vs_iuc,runtime_s,gap,\
n_binary,n_integer,n_continuous,n_constraints,n_nonzeros";

fn emit_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for cell in &report.cells {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{},{},{},{},{},{}\n",
            cell.instance,
            opt(cell.reserve),
            cell.variant,
            opt(cell.objective),
            opt(cell.error_vs_iuc),
            cell.runtime_s,
            opt(cell.gap),
            cell.stats.n_binary,
            cell.stats.n_integer,
            cell.stats.n_continuous,
            cell.stats.n_constraints,
            cell.stats.n_nonzeros,
        ));
    }
    out
}

/// Percentage with two decimals, Table-style: 0.0072 renders as "0.72%".
fn format_error(e: f64) -> String {
    format!("{:.2}%", e * 100.0)
}

fn emit_markdown(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let mut groups: Vec<(String, Option<f64>)> = Vec::new();
    for cell in &report.cells {
        let key = (cell.instance.clone(), cell.reserve);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (instance, reserve) in groups {
        let cells: Vec<&CellResult> = report
            .cells
            .iter()
            .filter(|c| c.instance == instance && c.reserve == reserve)
            .collect();
        let mut variants: Vec<Variant> = Vec::new();
        for c in &cells {
            if !variants.contains(&c.variant) {
                variants.push(c.variant);
            }
        }
        let first = |v: Variant| cells.iter().find(|c| c.variant == v);

        match reserve {
            Some(r) => out.push_str(&format!("## {} (reserve {:.4}%)\n\n", instance, r * 100.0)),
            None => out.push_str(&format!("## {}\n\n", instance)),
        }
        out.push_str("| Result |");
        for v in &variants {
            out.push_str(&format!(" {v} |"));
        }
        out.push('\n');
        out.push_str("|---|");
        out.push_str(&"---|".repeat(variants.len()));
        out.push('\n');

        out.push_str("| O.f. |");
        for v in &variants {
            match first(*v).and_then(|c| c.objective) {
                Some(obj) => out.push_str(&format!(" {obj:.4} |")),
                None => out.push_str(" err |"),
            }
        }
        out.push('\n');
        out.push_str("| O.f. Error |");
        for v in &variants {
            let text = match first(*v) {
                Some(c) if c.variant == Variant::Iuc && c.objective.is_some() => "-".to_string(),
                Some(c) => c
                    .error_vs_iuc
                    .map(format_error)
                    .unwrap_or_else(|| "n/a".to_string()),
                None => "n/a".to_string(),
            };
            out.push_str(&format!(" {text} |"));
        }
        out.push('\n');
        out.push_str("| Rtime [s] |");
        for v in &variants {
            match first(*v) {
                Some(c) => out.push_str(&format!(" {:.2} |", c.runtime_s)),
                None => out.push_str(" n/a |"),
            }
        }
        out.push_str("\n\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cell() -> CellResult {
        CellResult {
            instance: "demo".to_string(),
            reserve: Some(0.05),
            variant: Variant::Ccuc,
            status: SolveStatus::Optimal,
            objective: Some(1234.5),
            error_vs_iuc: Some(0.0072),
            runtime_s: 0.25,
            gap: Some(1e-6),
            stats: ModelStats {
                n_binary: 0,
                n_integer: 72,
                n_continuous: 96,
                n_constraints: 200,
                n_nonzeros: 600,
            },
            message: None,
        }
    }

    #[test]
    fn csv_row_has_twelve_fields() {
        let report = ExperimentReport {
            cells: vec![sample_cell()],
        };
        let csv = emit_csv(&report);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 12);
        assert_eq!(lines[1].split(',').count(), 12);
        assert!(lines[1].starts_with("demo,0.05,CCUC,1234.5,0.0072,"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = emit_csv(&ExperimentReport::default());
        assert_eq!(csv.trim_end(), CSV_HEADER);
    }

    #[test]
    fn error_formats_as_percentage() {
        assert_eq!(format_error(0.0072), "0.72%");
        assert_eq!(format_error(0.0), "0.00%");
        assert_eq!(format_error(-0.001), "-0.10%");
    }

    #[test]
    fn markdown_mirrors_table_rows() {
        let mut iuc = sample_cell();
        iuc.variant = Variant::Iuc;
        iuc.error_vs_iuc = Some(0.0);
        let report = ExperimentReport {
            cells: vec![iuc, sample_cell()],
        };
        let md = emit_markdown(&report);
        assert!(md.contains("| Result | IUC | CCUC |"));
        assert!(md.contains("| O.f. |"));
        assert!(md.contains("| O.f. Error | - | 0.72% |"));
        assert!(md.contains("| Rtime [s] |"));
    }
}
