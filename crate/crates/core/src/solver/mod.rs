//! External-process solver bridge: serialize a model to MPS, run a
//! templated solver command in a scratch directory, parse the solution
//! file back, and re-validate the point in the IR before reporting it.
//!
//! Any MILP solver that reads MPS and writes one of the supported solution
//! formats plugs in through the command template. The `ucflex solve-mps`
//! subcommand is the bundled default.

mod mps;
mod solution;

pub use mps::{parse_mps, write_mps, MpsError};
pub use solution::{
    parse_solution, ParsedSolution, ParsedStatus, SolutionFormat, SolutionParseError,
};

use crate::milp::{evaluate_point, MilpModel, Point};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

/// Environment variable consulted for the solver command template.
pub const SOLVER_CMD_ENV: &str = "UCFLEX_SOLVER_CMD";

/// Grace period past the time limit before the child is killed.
const KILL_GRACE_SECS: f64 = 10.0;

/// Relative agreement required between a solver-reported objective and the
/// objective recomputed from the returned point.
pub const OBJECTIVE_AGREEMENT_RTOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Command template; `{model_path}` and `{solution_path}` are required
    /// placeholders, `{gap}` and `{timelimit}` optional.
    pub command: String,
    /// Relative MIP optimality gap passed to the solver.
    pub mip_gap: f64,
    /// Time limit in seconds.
    pub time_limit: f64,
    /// Scratch space for model/solution files; a fresh temp directory per
    /// solve when unset.
    pub workdir: Option<PathBuf>,
    pub format: SolutionFormat,
}

impl SolverConfig {
    pub fn new(command: impl Into<String>) -> Self {
        SolverConfig {
            command: command.into(),
            mip_gap: 1e-6,
            time_limit: 600.0,
            workdir: None,
            format: SolutionFormat::Pairs,
        }
    }

    pub fn validate(&self) -> Result<(), BridgeError> {
        if !self.command.contains("{model_path}") || !self.command.contains("{solution_path}") {
            return Err(BridgeError::Config(format!(
                "solver command must contain {{model_path}} and {{solution_path}}: {:?}",
                self.command
            )));
        }
        if self.mip_gap < 0.0 {
            return Err(BridgeError::Config("mip gap must be >= 0".into()));
        }
        if !(self.time_limit > 0.0) {
            return Err(BridgeError::Config("time limit must be > 0".into()));
        }
        Ok(())
    }
}

/// Command template invoking this binary's own `solve-mps` subcommand.
pub fn self_hosted_command(exe: &Path) -> String {
    format!(
        "{} solve-mps {{model_path}} --sol {{solution_path}} --gap {{gap}} --timelimit {{timelimit}}",
        exe.display()
    )
}

/// Resolution order for the solver command: explicit flag, then the
/// `UCFLEX_SOLVER_CMD` environment variable.
pub fn resolve_command(flag: Option<&str>) -> Option<String> {
    flag.map(str::to_string)
        .or_else(|| std::env::var(SOLVER_CMD_ENV).ok())
}

#[derive(Debug, Clone, PartialEq)]
pub enum BridgeError {
    Config(String),
    Io(String),
}

impl fmt::Display for BridgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BridgeError::Config(m) => write!(f, "solver configuration error: {m}"),
            BridgeError::Io(m) => write!(f, "solver bridge io error: {m}"),
        }
    }
}

impl std::error::Error for BridgeError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Feasible point returned with a nonzero remaining gap.
    FeasibleGap,
    Infeasible,
    Timeout,
    Error,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleGap => "feasible-gap",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Timeout => "timeout",
            SolveStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Objective recomputed from the returned point; present iff a point is.
    pub objective: Option<f64>,
    pub point: Option<Point>,
    /// Gap reported by the solver, when it reports one.
    pub gap: Option<f64>,
    /// Wall time of the child process alone.
    pub wall_secs: f64,
    pub message: Option<String>,
}

impl SolveOutcome {
    fn failed(status: SolveStatus, wall_secs: f64, message: String) -> Self {
        SolveOutcome {
            status,
            objective: None,
            point: None,
            gap: None,
            wall_secs,
            message: Some(message),
        }
    }

    pub fn objective_or_err(&self) -> Result<f64, BridgeError> {
        self.objective.ok_or_else(|| {
            BridgeError::Io(format!(
                "solve ended with status {} ({})",
                self.status,
                self.message.as_deref().unwrap_or("no detail")
            ))
        })
    }
}

/// Raw result of one child-process run.
#[derive(Debug)]
pub struct Invocation {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    pub timed_out: bool,
    pub wall_secs: f64,
}

/// Substitutes the path/gap/timelimit placeholders and runs the templated
/// command, killing it `KILL_GRACE_SECS` past the configured time limit.
pub fn invoke_solver(
    cfg: &SolverConfig,
    model_path: &Path,
    solution_path: &Path,
) -> Result<Invocation, BridgeError> {
    invoke_with_grace(cfg, model_path, solution_path, KILL_GRACE_SECS)
}

fn invoke_with_grace(
    cfg: &SolverConfig,
    model_path: &Path,
    solution_path: &Path,
    grace_secs: f64,
) -> Result<Invocation, BridgeError> {
    cfg.validate()?;
    let tokens: Vec<String> = cfg
        .command
        .split_whitespace()
        .map(|tok| {
            tok.replace("{model_path}", &model_path.display().to_string())
                .replace("{solution_path}", &solution_path.display().to_string())
                .replace("{gap}", &format!("{:e}", cfg.mip_gap))
                .replace("{timelimit}", &format!("{}", cfg.time_limit))
        })
        .collect();
    if tokens.is_empty() {
        return Err(BridgeError::Config("empty solver command".into()));
    }

    let mut command = Command::new(&tokens[0]);
    command
        .args(&tokens[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(dir) = &cfg.workdir {
        command.current_dir(dir);
    }

    let start = Instant::now();
    let mut child = command.spawn().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            BridgeError::Io(format!("solver executable not found: {}", tokens[0]))
        } else {
            BridgeError::Io(format!("failed to spawn {}: {e}", tokens[0]))
        }
    })?;

    // Drain pipes from threads so a chatty solver cannot deadlock on a
    // full pipe while we poll for exit.
    let stdout_reader = spawn_reader(child.stdout.take());
    let stderr_reader = spawn_reader(child.stderr.take());

    let deadline = Duration::from_secs_f64(cfg.time_limit + grace_secs);
    let mut timed_out = false;
    let exit = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status.code(),
            Ok(None) => {
                if start.elapsed() > deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    timed_out = true;
                    break None;
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(BridgeError::Io(format!("wait failed: {e}"))),
        }
    };
    let wall_secs = start.elapsed().as_secs_f64();

    // A killed solver can leave grandchildren holding the pipes; abandon
    // the reader threads instead of blocking on them.
    let collect = |handle: std::thread::JoinHandle<String>| {
        if timed_out {
            String::new()
        } else {
            handle.join().unwrap_or_default()
        }
    };
    Ok(Invocation {
        stdout: collect(stdout_reader),
        stderr: collect(stderr_reader),
        exit_code: exit,
        timed_out,
        wall_secs,
    })
}

fn spawn_reader<R: std::io::Read + Send + 'static>(
    source: Option<R>,
) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buf = String::new();
        if let Some(mut r) = source {
            let _ = r.read_to_string(&mut buf);
        }
        buf
    })
}

/// Full solve pipeline: MPS write, child solver run, solution parse, and
/// IR re-validation. With `relaxed` the integrality is dropped before
/// writing. Solver-side failures are reported through the outcome status;
/// only configuration and filesystem problems are hard errors.
pub fn solve_model(
    model: &MilpModel,
    cfg: &SolverConfig,
    relaxed: bool,
) -> Result<SolveOutcome, BridgeError> {
    cfg.validate()?;
    let target = if relaxed {
        model.relax_integrality()
    } else {
        model.clone()
    };

    let scratch = match &cfg.workdir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| BridgeError::Io(format!("cannot create workdir: {e}")))?;
            tempfile::tempdir_in(dir)
        }
        None => tempfile::tempdir(),
    }
    .map_err(|e| BridgeError::Io(format!("cannot create scratch directory: {e}")))?;
    let model_path = scratch.path().join("model.mps");
    let solution_path = scratch.path().join("model.sol");
    std::fs::write(&model_path, write_mps(&target))
        .map_err(|e| BridgeError::Io(format!("cannot write {}: {e}", model_path.display())))?;

    let run = match invoke_solver(cfg, &model_path, &solution_path) {
        Ok(run) => run,
        Err(BridgeError::Io(message)) => {
            return Ok(SolveOutcome::failed(SolveStatus::Error, 0.0, message))
        }
        Err(e) => return Err(e),
    };

    if run.timed_out {
        return Ok(SolveOutcome::failed(
            SolveStatus::Timeout,
            run.wall_secs,
            "solver exceeded the time limit and was killed".to_string(),
        ));
    }
    let solution_text = match std::fs::read_to_string(&solution_path) {
        Ok(text) => text,
        Err(_) => {
            let detail = if run.stderr.trim().is_empty() {
                run.stdout.trim().to_string()
            } else {
                run.stderr.trim().to_string()
            };
            return Ok(SolveOutcome::failed(
                SolveStatus::Error,
                run.wall_secs,
                format!(
                    "solver exited with {:?} and wrote no solution file: {}",
                    run.exit_code, detail
                ),
            ));
        }
    };

    let parsed = match parse_solution(&solution_text, cfg.format, &target) {
        Ok(parsed) => parsed,
        Err(e) => {
            return Ok(SolveOutcome::failed(
                SolveStatus::Error,
                run.wall_secs,
                e.to_string(),
            ))
        }
    };

    match parsed.status {
        Some(ParsedStatus::Infeasible) => {
            return Ok(SolveOutcome {
                status: SolveStatus::Infeasible,
                objective: None,
                point: None,
                gap: None,
                wall_secs: run.wall_secs,
                message: None,
            })
        }
        Some(ParsedStatus::Unbounded) => {
            return Ok(SolveOutcome::failed(
                SolveStatus::Error,
                run.wall_secs,
                "solver reports the model unbounded".to_string(),
            ))
        }
        Some(ParsedStatus::Timeout) => {
            return Ok(SolveOutcome::failed(
                SolveStatus::Timeout,
                run.wall_secs,
                "solver stopped at its time limit without a feasible point".to_string(),
            ))
        }
        Some(ParsedStatus::Error) => {
            return Ok(SolveOutcome::failed(
                SolveStatus::Error,
                run.wall_secs,
                format!("solver reported an error: {}", run.stderr.trim()),
            ))
        }
        Some(ParsedStatus::Optimal) | Some(ParsedStatus::Feasible) | None => {}
    }

    let evaluation = match evaluate_point(&target, &parsed.point) {
        Ok(e) => e,
        Err(e) => {
            return Ok(SolveOutcome::failed(
                SolveStatus::Error,
                run.wall_secs,
                e.to_string(),
            ))
        }
    };
    if !evaluation.is_clean() {
        let worst = evaluation
            .violated
            .iter()
            .map(|v| (v.amount, v.name.as_str()))
            .chain(evaluation.integrality.iter().map(|v| (1.0, v.name.as_str())))
            .chain(evaluation.bounds.iter().map(|v| (1.0, v.name.as_str())))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        return Ok(SolveOutcome::failed(
            SolveStatus::Error,
            run.wall_secs,
            format!(
                "returned point violates the model ({} rows, {} integrality, {} bounds; worst {:?})",
                evaluation.violated.len(),
                evaluation.integrality.len(),
                evaluation.bounds.len(),
                worst
            ),
        ));
    }
    if let Some(reported) = parsed.objective {
        let scale = reported.abs().max(1.0);
        if (reported - evaluation.objective).abs() > OBJECTIVE_AGREEMENT_RTOL * scale {
            return Ok(SolveOutcome::failed(
                SolveStatus::Error,
                run.wall_secs,
                format!(
                    "solver objective {} disagrees with recomputed {}",
                    reported, evaluation.objective
                ),
            ));
        }
    }

    let status = match parsed.status {
        Some(ParsedStatus::Feasible) => SolveStatus::FeasibleGap,
        _ => SolveStatus::Optimal,
    };
    Ok(SolveOutcome {
        status,
        objective: Some(evaluation.objective),
        point: Some(parsed.point),
        gap: parsed.gap,
        wall_secs: run.wall_secs,
        message: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{assemble_model, ModelMetadata, Sense, VarKind, Variable};

    fn tiny_model() -> MilpModel {
        assemble_model(
            vec![Variable::new("x", VarKind::Continuous, 0.0, 10.0, "p")],
            vec![crate::milp::LinearConstraint {
                name: "floor_t1".to_string(),
                terms: vec![("x".to_string(), 1.0)],
                sense: Sense::Ge,
                rhs: 2.0,
                tag: "floor".to_string(),
            }],
            vec![("x".to_string(), 1.0)],
            ModelMetadata::default(),
        )
        .unwrap()
    }

    #[test]
    fn command_template_substitutes_both_paths() {
        let cfg = SolverConfig::new("echo {model_path} --sol {solution_path} --gap {gap}");
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("m.mps");
        let sol = dir.path().join("m.sol");
        std::fs::write(&model, "").unwrap();
        let run = invoke_solver(&cfg, &model, &sol).unwrap();
        assert_eq!(run.exit_code, Some(0));
        assert!(run.stdout.contains("m.mps"));
        assert!(run.stdout.contains("m.sol"));
        assert!(run.stdout.contains("1e-6"));
    }

    #[test]
    fn missing_executable_is_an_error_outcome_not_a_crash() {
        let cfg = SolverConfig::new("definitely-not-a-solver {model_path} {solution_path}");
        let outcome = solve_model(&tiny_model(), &cfg, false).unwrap();
        assert_eq!(outcome.status, SolveStatus::Error);
        assert!(outcome.message.unwrap().contains("not found"));
    }

    #[test]
    fn template_without_placeholders_is_rejected() {
        let cfg = SolverConfig::new("mysolver");
        assert!(matches!(cfg.validate(), Err(BridgeError::Config(_))));
    }

    #[test]
    fn overrunning_process_is_killed_and_reported_as_timeout() {
        // The "solver" is a shell script that sleeps far past the limit.
        let mut cfg = SolverConfig::new("sh {model_path} {solution_path}");
        cfg.time_limit = 0.1;
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("m.mps");
        std::fs::write(&model, "sleep 30\n").unwrap();
        let run = invoke_with_grace(&cfg, &model, &dir.path().join("m.sol"), 0.2).unwrap();
        assert!(run.timed_out);
        assert!(run.wall_secs < 5.0);
    }
}
