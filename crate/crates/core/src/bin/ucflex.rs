//! Command-line entry point: instance generation, single solves, variant
//! comparison matrices, the enumeration oracle, solution re-checking, and
//! the bundled MPS solver used as the default external solver process.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use ucflex::formulation::{
    build_formulation, check_schedule_feasibility, extract_schedule, BuildOptions, Variant,
};
use ucflex::harness::{
    emit_report, run_experiment, ExperimentPlan, InstanceSource, ReportFormat,
};
use ucflex::instance::{
    build_ramp_trap_instance, build_ramp_trap_reduced, generate_random_instance, parse_instance,
    serialize_instance, GeneratorConfig, InstanceError, IntRange, ValueRange,
};
use ucflex::milp::evaluate_point;
use ucflex::oracle::{brute_force_optimum, OracleError};
use ucflex::solver::{
    parse_mps, parse_solution, resolve_command, self_hosted_command, solve_model, SolutionFormat,
    SolveStatus, SolverConfig,
};

const EXIT_USAGE: i32 = 1;
const EXIT_SOLVER: i32 = 2;
const EXIT_INVALID: i32 = 3;

struct Fail {
    code: i32,
    message: String,
}

impl Fail {
    fn usage(message: impl Into<String>) -> Self {
        Fail {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        Fail {
            code: EXIT_SOLVER,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Fail {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<InstanceError> for Fail {
    fn from(e: InstanceError) -> Self {
        Fail::invalid(e.to_string())
    }
}

impl From<ucflex::formulation::FormulationError> for Fail {
    fn from(e: ucflex::formulation::FormulationError) -> Self {
        Fail::invalid(e.to_string())
    }
}

impl From<ucflex::solver::BridgeError> for Fail {
    fn from(e: ucflex::solver::BridgeError) -> Self {
        Fail::solver(e.to_string())
    }
}

type CliResult = Result<(), Fail>;

fn read_file(path: &PathBuf) -> Result<String, Fail> {
    std::fs::read_to_string(path)
        .map_err(|e| Fail::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), Fail> {
    std::fs::write(path, text)
        .map_err(|e| Fail::usage(format!("cannot write {}: {e}", path.display())))
}

fn parse_value_range(s: &str) -> Result<ValueRange, String> {
    let parse = |t: &str| -> Result<f64, String> {
        t.parse().map_err(|_| format!("bad number {t:?} in range"))
    };
    match s.split_once(':') {
        Some((lo, hi)) => Ok(ValueRange::new(parse(lo)?, parse(hi)?)),
        None => Ok(ValueRange::fixed(parse(s)?)),
    }
}

fn parse_int_range(s: &str) -> Result<IntRange, String> {
    let parse = |t: &str| -> Result<u32, String> {
        t.parse().map_err(|_| format!("bad integer {t:?} in range"))
    };
    match s.split_once(':') {
        Some((lo, hi)) => Ok(IntRange::new(parse(lo)?, parse(hi)?)),
        None => Ok(IntRange::fixed(parse(s)?)),
    }
}

#[derive(Parser)]
#[command(
    name = "ucflex",
    version,
    about = "Clustered unit-commitment formulations, solver bridge, and comparison harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a deterministic synthetic instance file
    Gen(GenArgs),
    /// Build one formulation variant and solve it
    Solve(SolveArgs),
    /// Solve a variant matrix and emit a comparison report
    Compare(CompareArgs),
    /// Exact brute-force optimum for tiny instances
    Oracle(OracleArgs),
    /// Re-check a solution file against a formulation
    Check(CheckArgs),
    /// Bundled MILP solver: reads an MPS file, writes a solution file
    SolveMps(SolveMpsArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    /// Output instance path
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    clusters: u32,
    #[arg(long, default_value_t = 3)]
    units: u32,
    #[arg(long, default_value_t = 24)]
    horizon: u32,
    #[arg(long, default_value_t = 0.1)]
    reserve_fraction: f64,
    #[arg(long, default_value_t = 2.0)]
    peak_base_ratio: f64,
    #[arg(long, default_value_t = 0.02)]
    demand_noise: f64,
    /// Ranges are `lo:hi` or a single value
    #[arg(long, value_parser = parse_value_range)]
    p_max: Option<ValueRange>,
    #[arg(long, value_parser = parse_value_range)]
    p_min: Option<ValueRange>,
    /// Ramp limit as a fraction of (p_max - p_min), applied up and down
    #[arg(long, value_parser = parse_value_range)]
    ramp_frac: Option<ValueRange>,
    #[arg(long, value_parser = parse_value_range)]
    su_frac: Option<ValueRange>,
    #[arg(long, value_parser = parse_value_range)]
    sd_frac: Option<ValueRange>,
    #[arg(long, value_parser = parse_int_range)]
    min_up: Option<IntRange>,
    #[arg(long, value_parser = parse_int_range)]
    min_down: Option<IntRange>,
    #[arg(long, value_parser = parse_value_range)]
    cost_fixed: Option<ValueRange>,
    #[arg(long, value_parser = parse_value_range)]
    cost_variable: Option<ValueRange>,
    #[arg(long, value_parser = parse_value_range)]
    cost_startup: Option<ValueRange>,
    #[arg(long, value_parser = parse_value_range)]
    cost_shutdown: Option<ValueRange>,
    /// Emit the directed ramp-trap instance instead of a random one
    #[arg(long, conflicts_with = "ramp_trap_reduced")]
    ramp_trap: bool,
    /// Emit the reduced (oracle-sized) ramp-trap instance
    #[arg(long)]
    ramp_trap_reduced: bool,
}

#[derive(clap::Args)]
struct SolverFlags {
    /// Solver command template with {model_path} {solution_path} [{gap}]
    /// [{timelimit}]; defaults to this binary's solve-mps subcommand or
    /// the UCFLEX_SOLVER_CMD environment variable
    #[arg(long)]
    solver_cmd: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    mip_gap: f64,
    /// Solver time limit in seconds
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    /// Format of the solver's solution file: pairs or highs
    #[arg(long, default_value = "pairs")]
    sol_format: SolutionFormat,
}

impl SolverFlags {
    fn config(&self) -> Result<SolverConfig, Fail> {
        let command = resolve_command(self.solver_cmd.as_deref()).unwrap_or_else(|| {
            let exe = std::env::current_exe().expect("current executable path");
            self_hosted_command(&exe)
        });
        let mut cfg = SolverConfig::new(command);
        cfg.mip_gap = self.mip_gap;
        cfg.time_limit = self.time_limit;
        cfg.format = self.sol_format;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    variant: Variant,
    #[command(flatten)]
    solver: SolverFlags,
    /// Solve the LP relaxation instead of the MILP
    #[arg(long)]
    relaxed: bool,
    /// Write the solution point (name value pairs) here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Percent noise on per-unit variable cost (IUC only)
    #[arg(long, default_value_t = 0.0)]
    iuc_noise_pct: f64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
}

#[derive(clap::Args)]
struct CompareArgs {
    /// Instance files, comma separated
    #[arg(long, required = true, value_delimiter = ',')]
    instances: Vec<PathBuf>,
    /// Variants to run, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = Variant::ALL)]
    variants: Vec<Variant>,
    /// Reserve levels as fractions of demand, overriding instance series
    #[arg(long, value_delimiter = ',')]
    reserve_levels: Vec<f64>,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    /// Concurrent solver processes (0 = number of cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0.0)]
    iuc_noise_pct: f64,
    /// Seed for the IUC cost-noise draw
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    variant: Variant,
    /// Solution file to verify
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value = "pairs")]
    sol_format: SolutionFormat,
}

#[derive(clap::Args)]
struct SolveMpsArgs {
    /// MPS model file
    model: PathBuf,
    /// Solution output path
    #[arg(long)]
    sol: PathBuf,
    /// Relative MIP gap
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Time limit in seconds
    #[arg(long, default_value_t = 1e7)]
    timelimit: f64,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Cmd::Gen(args) => run_gen(args),
        Cmd::Solve(args) => run_solve(args),
        Cmd::Compare(args) => run_compare(args),
        Cmd::Oracle(args) => run_oracle(args),
        Cmd::Check(args) => run_check(args),
        Cmd::SolveMps(args) => run_solve_mps(args),
    };
    if let Err(fail) = result {
        eprintln!("error: {}", fail.message);
        std::process::exit(fail.code);
    }
}

fn run_gen(args: GenArgs) -> CliResult {
    let instance = if args.ramp_trap {
        build_ramp_trap_instance()
    } else if args.ramp_trap_reduced {
        build_ramp_trap_reduced()
    } else {
        let mut cfg = GeneratorConfig {
            seed: args.seed,
            n_clusters: args.clusters,
            units_per_cluster: args.units,
            horizon: args.horizon,
            reserve_fraction: args.reserve_fraction,
            peak_base_ratio: args.peak_base_ratio,
            demand_noise: args.demand_noise,
            ..GeneratorConfig::default()
        };
        if let Some(r) = args.p_max {
            cfg.p_max = r;
        }
        if let Some(r) = args.p_min {
            cfg.p_min = r;
        }
        if let Some(r) = args.ramp_frac {
            cfg.ramp_up_frac = r;
            cfg.ramp_down_frac = r;
        }
        if let Some(r) = args.su_frac {
            cfg.su_frac = r;
        }
        if let Some(r) = args.sd_frac {
            cfg.sd_frac = r;
        }
        if let Some(r) = args.min_up {
            cfg.min_up = r;
        }
        if let Some(r) = args.min_down {
            cfg.min_down = r;
        }
        if let Some(r) = args.cost_fixed {
            cfg.cost_fixed = r;
        }
        if let Some(r) = args.cost_variable {
            cfg.cost_variable = r;
        }
        if let Some(r) = args.cost_startup {
            cfg.cost_startup = r;
        }
        if let Some(r) = args.cost_shutdown {
            cfg.cost_shutdown = r;
        }
        generate_random_instance(&cfg)?
    };
    write_file(&args.out, &serialize_instance(&instance))?;
    println!(
        "wrote {} ({} clusters, {} units, T = {})",
        args.out.display(),
        instance.clusters.len(),
        instance.total_units(),
        instance.horizon
    );
    Ok(())
}

fn run_solve(args: SolveArgs) -> CliResult {
    let instance = parse_instance(&read_file(&args.instance)?)?;
    let label = args
        .instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string());
    let opts = BuildOptions {
        instance_id: label,
        iuc_noise_pct: args.iuc_noise_pct,
        noise_seed: args.noise_seed,
    };
    let model = build_formulation(&instance, args.variant, &opts)?;
    let stats = model.statistics();
    let cfg = args.solver.config()?;
    let outcome = solve_model(&model, &cfg, args.relaxed)?;

    println!(
        "variant {} status {} wall {:.3}s",
        args.variant, outcome.status, outcome.wall_secs
    );
    println!(
        "model: {} binary, {} integer, {} continuous, {} constraints, {} nonzeros",
        stats.n_binary, stats.n_integer, stats.n_continuous, stats.n_constraints, stats.n_nonzeros
    );
    match outcome.status {
        SolveStatus::Optimal | SolveStatus::FeasibleGap => {}
        SolveStatus::Infeasible => {
            println!("objective: infeasible");
            return Ok(());
        }
        SolveStatus::Timeout | SolveStatus::Error => {
            return Err(Fail::solver(format!(
                "solve failed ({}): {}",
                outcome.status,
                outcome.message.unwrap_or_default()
            )));
        }
    }
    let objective = outcome.objective.expect("objective for point status");
    println!("objective: {objective}");
    if let Some(gap) = outcome.gap {
        println!("gap: {gap:e}");
    }
    let point = outcome.point.expect("point for point status");

    if let Some(out) = &args.out {
        let mut text = format!("=status= {}\n=obj= {}\n", outcome.status, objective);
        for v in model.variables() {
            text.push_str(&format!("{} {:.17e}\n", v.name, point[&v.name]));
        }
        write_file(out, &text)?;
        println!("solution written to {}", out.display());
    }

    if !args.relaxed {
        let schedule = extract_schedule(&instance, args.variant, &point)
            .map_err(|e| Fail::invalid(format!("schedule extraction failed: {e}")))?;
        let violations = check_schedule_feasibility(&instance, args.variant, &schedule);
        if !violations.is_empty() {
            for v in violations.iter().take(10) {
                eprintln!("violation: {v}");
            }
            return Err(Fail::invalid(format!(
                "independent feasibility check flagged {} rows",
                violations.len()
            )));
        }
        println!("feasibility recheck: clean");
    }
    Ok(())
}

fn run_compare(args: CompareArgs) -> CliResult {
    let mut plan = ExperimentPlan::new(args.solver.config()?);
    plan.instances = args
        .instances
        .iter()
        .map(|p| InstanceSource::Path(p.clone()))
        .collect();
    plan.variants = args.variants.clone();
    plan.reserve_levels = args.reserve_levels.clone();
    plan.repetitions = args.repetitions;
    plan.iuc_noise_pct = args.iuc_noise_pct;
    plan.noise_seed = args.seed;
    plan.workers = args.workers;

    let report = run_experiment(&plan).map_err(|e| Fail::solver(e.to_string()))?;
    let text = emit_report(&report, args.format);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    let failed: Vec<&str> = report
        .cells
        .iter()
        .filter(|c| c.objective.is_none())
        .map(|c| c.instance.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(Fail::solver(format!(
            "{} of {} cells failed to solve cleanly",
            failed.len(),
            report.cells.len()
        )));
    }
    Ok(())
}

fn run_oracle(args: OracleArgs) -> CliResult {
    let instance = parse_instance(&read_file(&args.instance)?)?;
    let cfg = args.solver.config()?;
    let outcome = brute_force_optimum(&instance, &cfg).map_err(|e| match e {
        OracleError::TooLarge { .. } | OracleError::Invalid(_) => Fail::invalid(e.to_string()),
        _ => Fail::solver(e.to_string()),
    })?;
    println!(
        "oracle objective: {} ({} patterns evaluated)",
        outcome.objective, outcome.patterns_evaluated
    );
    for (unit, schedule) in outcome.pattern.per_unit_on.iter().enumerate() {
        let mask: String = schedule.iter().map(|on| if *on { '1' } else { '0' }).collect();
        println!("unit {}: {}", unit + 1, mask);
    }
    Ok(())
}

fn run_check(args: CheckArgs) -> CliResult {
    let instance = parse_instance(&read_file(&args.instance)?)?;
    let model = build_formulation(&instance, args.variant, &BuildOptions::default())?;
    let text = read_file(&args.solution)?;
    let parsed = parse_solution(&text, args.sol_format, &model)
        .map_err(|e| Fail::invalid(e.to_string()))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {warning}");
    }
    let evaluation = evaluate_point(&model, &parsed.point)
        .map_err(|e| Fail::invalid(e.to_string()))?;
    let schedule = extract_schedule(&instance, args.variant, &parsed.point)
        .map_err(|e| Fail::invalid(format!("schedule extraction failed: {e}")))?;
    let violations = check_schedule_feasibility(&instance, args.variant, &schedule);
    println!("objective (recomputed): {}", evaluation.objective);
    if evaluation.is_clean() && violations.is_empty() {
        println!("feasible: all equation families satisfied at 1e-6");
        Ok(())
    } else {
        for v in violations.iter().take(20) {
            println!("violation: {v}");
        }
        for v in evaluation.violated.iter().take(20) {
            println!("model row violated: {} by {:.3e}", v.name, v.amount);
        }
        Err(Fail::invalid(format!(
            "{} schedule violations, {} model-row violations",
            violations.len(),
            evaluation.violated.len()
        )))
    }
}

fn run_solve_mps(args: SolveMpsArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| Fail::solver(format!("cannot read {}: {e}", args.model.display())))?;
    let model = parse_mps(&text).map_err(|e| Fail::solver(e.to_string()))?;
    let out = solve_with_highs(&model, args.gap, args.timelimit);
    std::fs::write(&args.sol, out)
        .map_err(|e| Fail::solver(format!("cannot write {}: {e}", args.sol.display())))?;
    Ok(())
}

/// In-process HiGHS solve of a parsed model, rendered in the `pairs`
/// solution format.
fn solve_with_highs(model: &ucflex::milp::MilpModel, gap: f64, timelimit: f64) -> String {
    use highs::HighsModelStatus as Status;

    if model.variables().is_empty() {
        return "=status= optimal\n=obj= 0\n".to_string();
    }

    let costs: std::collections::HashMap<&str, f64> = model
        .objective()
        .iter()
        .map(|(n, c)| (n.as_str(), *c))
        .collect();
    let mut problem = highs::RowProblem::default();
    let mut cols = Vec::with_capacity(model.variables().len());
    let mut index = std::collections::HashMap::with_capacity(model.variables().len());
    let mut any_integer = false;
    for (i, v) in model.variables().iter().enumerate() {
        let cost = costs.get(v.name.as_str()).copied().unwrap_or(0.0);
        any_integer |= v.is_integral();
        let col = problem.add_column_with_integrality(cost, v.lower..=v.upper, v.is_integral());
        cols.push(col);
        index.insert(v.name.as_str(), i);
    }
    for c in model.constraints() {
        let factors: Vec<(highs::Col, f64)> = c
            .terms
            .iter()
            .map(|(name, coef)| (cols[index[name.as_str()]], *coef))
            .collect();
        match c.sense {
            ucflex::milp::Sense::Le => problem.add_row(..=c.rhs, factors),
            ucflex::milp::Sense::Ge => problem.add_row(c.rhs.., factors),
            ucflex::milp::Sense::Eq => problem.add_row(c.rhs..=c.rhs, factors),
        };
    }

    let mut solver = problem.optimise(highs::Sense::Minimise);
    solver.set_option("output_flag", false);
    solver.set_option("threads", 1i32);
    solver.set_option("mip_rel_gap", gap);
    solver.set_option("time_limit", timelimit);
    solver.set_option("primal_feasibility_tolerance", 1e-9);
    solver.set_option("dual_feasibility_tolerance", 1e-9);
    solver.set_option("mip_feasibility_tolerance", 1e-9);
    let solved = solver.solve();

    let status = solved.status();
    match status {
        Status::Optimal => {}
        Status::Infeasible => return "=status= infeasible\n".to_string(),
        Status::Unbounded | Status::UnboundedOrInfeasible => {
            return "=status= unbounded\n".to_string()
        }
        Status::ReachedTimeLimit => return "=status= timeout\n".to_string(),
        Status::ModelEmpty => return "=status= optimal\n=obj= 0\n".to_string(),
        other => return format!("=status= error\n# highs status {other:?}\n"),
    }

    let solution = solved.get_solution();
    let mut out = String::from("=status= optimal\n");
    out.push_str(&format!("=obj= {:.17e}\n", solved.objective_value()));
    if any_integer {
        let mip_gap = solved.mip_gap();
        if mip_gap.is_finite() {
            out.push_str(&format!("=gap= {:.17e}\n", mip_gap));
        }
    }
    for (v, value) in model.variables().iter().zip(solution.columns()) {
        out.push_str(&format!("{} {:.17e}\n", v.name, value));
    }
    out
}
