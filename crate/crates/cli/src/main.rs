use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use exoopt_core::controller::{run_controller, ControllerConfig};
use exoopt_core::gait::{load_trace, two_leg_synthetic};
use exoopt_core::optimizer::{Constraint, GridAxis, GridMetric, Optimizer};
use exoopt_core::plant::closed_loop_torque_tf;
use exoopt_core::requirements::{requirements_for_age, RequirementOverrides, Requirements};
use exoopt_core::sim::{bandwidth_neg3db, frequency_response, BANDWIDTH_SEARCH_HI, BANDWIDTH_SEARCH_LO};
use exoopt_core::{scale_motor, Error, ModelConfig};

#[derive(Parser, Debug)]
#[command(name = "exoopt", version, about = "Knee exoskeleton actuator design toolkit")]
struct Cli {
    #[command(flatten)]
    flags: ConfigFlags,

    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Each overrides the config file.
#[derive(Args, Debug, Clone)]
struct ConfigFlags {
    /// JSON run configuration; missing fields take built-in defaults.
    #[arg(long, env = "EXOOPT_CONFIG", global = true)]
    config: Option<PathBuf>,
    /// Coupling stiffness k_c (N*m/rad).
    #[arg(long, global = true)]
    kc: Option<f64>,
    /// Proportional torque gain k_p.
    #[arg(long, global = true)]
    kp: Option<f64>,
    /// Simulation step (s).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Supply voltage (V).
    #[arg(long, global = true)]
    voltage: Option<f64>,
    /// Gap-radius search bounds, lo:hi (m).
    #[arg(long, value_parser = parse_pair, global = true)]
    rg_bounds: Option<(f64, f64)>,
    /// Gear-ratio search bounds, lo:hi.
    #[arg(long, value_parser = parse_pair, global = true)]
    n_bounds: Option<(f64, f64)>,
    /// Gait cycle frequency (Hz).
    #[arg(long, global = true)]
    gait_freq: Option<f64>,
    /// Gait amplitude scale.
    #[arg(long, global = true)]
    gait_scale: Option<f64>,
    /// Required output torque (N*m), replacing the age-based value.
    #[arg(long, global = true)]
    req_torque: Option<f64>,
    /// Required output speed (rad/s).
    #[arg(long, global = true)]
    req_speed: Option<f64>,
    /// Required closed-loop natural frequency (Hz).
    #[arg(long, global = true)]
    req_omega_hz: Option<f64>,
    /// Largest allowed average backdrive torque (N*m).
    #[arg(long, global = true)]
    max_backdrive: Option<f64>,
    /// Worker threads for grids and sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write data here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check one design against the requirements for an age.
    Evaluate(EvaluateArgs),
    /// Find the lightest feasible design for one or more ages.
    Optimize(OptimizeArgs),
    /// Tabulate a metric over gap radius and gear ratio.
    Grid(GridArgs),
    /// Closed-loop torque frequency response.
    Bode(BodeArgs),
    /// Run the assistance controller over a two-leg gait trace.
    Controller(ControllerArgs),
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    /// Gap radius (m).
    #[arg(long)]
    rg: f64,
    /// Gear ratio.
    #[arg(long)]
    n: f64,
    /// Age (years).
    #[arg(long)]
    age: f64,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("which").required(true).args(["age", "ages"])))]
struct OptimizeArgs {
    /// A single age (years).
    #[arg(long)]
    age: Option<f64>,
    /// Ages as lo:hi:step.
    #[arg(long, value_parser = parse_age_range)]
    ages: Option<AgeRange>,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    /// max_torque, max_speed, natural_frequency, backdrive_avg or mass.
    #[arg(long)]
    metric: GridMetric,
    /// Gap radii as lo:hi:count (m).
    #[arg(long, value_parser = parse_axis)]
    rg: GridAxis,
    /// Gear ratios as lo:hi:count.
    #[arg(long, value_parser = parse_axis)]
    n: GridAxis,
    /// Adds a margin column against this age's requirement.
    #[arg(long)]
    age: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct BodeArgs {
    /// Gap radius (m).
    #[arg(long, default_value_t = 0.021)]
    rg: f64,
    /// Gear ratio.
    #[arg(long, default_value_t = 36.0)]
    n: f64,
    /// Lowest frequency (Hz).
    #[arg(long, default_value_t = 0.1)]
    flo: f64,
    /// Highest frequency (Hz).
    #[arg(long, default_value_t = 1000.0)]
    fhi: f64,
    /// Log-spaced frequency points.
    #[arg(long, default_value_t = 200)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "synthetic"])))]
struct ControllerArgs {
    /// Two-leg gait CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Use the built-in two-leg waveform.
    #[arg(long)]
    synthetic: bool,
    /// Synthetic run length (s).
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Synthetic right-leg lag as a fraction of a cycle.
    #[arg(long, default_value_t = 0.5)]
    phase_offset: f64,
    /// Smoothing factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// Torque per unit asymmetry (N*m).
    #[arg(long)]
    kappa: Option<f64>,
    /// Time shift (s).
    #[arg(long)]
    shift: Option<f64>,
    /// Controller sample period (s).
    #[arg(long)]
    sample_period: Option<f64>,
    /// Symmetric torque limit (N*m).
    #[arg(long)]
    torque_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct AgeRange {
    lo: f64,
    hi: f64,
    step: f64,
}

impl AgeRange {
    fn ages(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

/// Everything that shapes a run; echoed into every output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    model: ModelConfig,
    requirements: RequirementOverrides,
    controller: ControllerConfig,
}

fn split_numbers(s: &str, parts: usize) -> Result<Vec<f64>, String> {
    let fields: Vec<&str> = s.split(':').collect();
    if fields.len() != parts {
        return Err(format!("expected {parts} colon-separated numbers, got '{s}'"));
    }
    fields
        .iter()
        .map(|f| f.trim().parse::<f64>().map_err(|e| format!("'{f}': {e}")))
        .collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = split_numbers(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_axis(s: &str) -> Result<GridAxis, String> {
    let v = split_numbers(s, 3)?;
    if v[2].fract() != 0.0 || v[2] < 1.0 {
        return Err(format!("point count must be a positive integer, got {}", v[2]));
    }
    GridAxis::new(v[0], v[1], v[2] as usize).map_err(|e| e.to_string())
}

fn parse_age_range(s: &str) -> Result<AgeRange, String> {
    let v = split_numbers(s, 3)?;
    if !(v[2] > 0.0) || !(v[0] <= v[1]) {
        return Err("need lo <= hi and a positive step".into());
    }
    Ok(AgeRange {
        lo: v[0],
        hi: v[1],
        step: v[2],
    })
}

struct Failure {
    code: u8,
    message: String,
}

fn core_exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain { .. } | Error::Validation { .. } | Error::Unsupported(_) | Error::Parse { .. } => 2,
        Error::Infeasible { .. } | Error::Divergence { .. } | Error::NotFound(_) => 3,
        Error::AtDesign { source, .. } => core_exit_code(source),
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: core_exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))
}

fn resolve_config(flags: &ConfigFlags) -> Result<RunConfig, Failure> {
    let mut cfg = match &flags.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let m = &mut cfg.model;
    if let Some(v) = flags.kc {
        m.coupling_stiffness = v;
    }
    if let Some(v) = flags.kp {
        m.kp = v;
    }
    if let Some(v) = flags.dt {
        m.sim.dt = v;
    }
    if let Some(v) = flags.voltage {
        m.supply_voltage = v;
    }
    if let Some((lo, hi)) = flags.rg_bounds {
        m.bounds.gap_radius = [lo, hi];
    }
    if let Some((lo, hi)) = flags.n_bounds {
        m.bounds.gear_ratio = [lo, hi];
    }
    if let Some(v) = flags.gait_freq {
        m.gait.cycle_freq = v;
    }
    if let Some(v) = flags.gait_scale {
        m.gait.amplitude_scale = v;
    }
    let r = &mut cfg.requirements;
    r.required_torque = flags.req_torque.or(r.required_torque);
    r.required_speed = flags.req_speed.or(r.required_speed);
    r.required_natural_frequency_hz = flags.req_omega_hz.or(r.required_natural_frequency_hz);
    r.max_backdrive_torque = flags.max_backdrive.or(r.max_backdrive_torque);
    cfg.model.validate()?;
    Ok(cfg)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// `#`-prefixed header lines carrying the resolved configuration.
fn write_csv_header(out: &mut dyn Write, cfg: &RunConfig, command: &str, args: &impl Serialize) -> Result<(), Failure> {
    writeln!(out, "# exoopt {command}")?;
    writeln!(out, "# config: {}", serde_json::to_string(cfg)?)?;
    writeln!(out, "# args: {}", serde_json::to_string(args)?)?;
    Ok(())
}

fn evaluate(cfg: &RunConfig, args: &EvaluateArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let req = requirements_for_age(args.age, &cfg.requirements)?;
    scale_motor(args.rg)?;
    let opt = Optimizer::new(cfg.model)?;
    let report = opt.evaluate_design(args.rg, args.n, &req)?;
    write_json(
        out,
        &json!({
            "config": cfg,
            "args": args,
            "requirements": req,
            "report": report,
        }),
    )?;
    if !report.feasible {
        let violated: Vec<&str> = report.violated().iter().map(|c| c.label()).collect();
        eprintln!("infeasible: {}", violated.join(", "));
        return Ok(3);
    }
    Ok(0)
}

fn optimize(cfg: &RunConfig, args: &OptimizeArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let ages = match (args.age, args.ages) {
        (Some(a), _) => vec![a],
        (None, Some(range)) => range.ages(),
        (None, None) => unreachable!("clap requires one of --age, --ages"),
    };
    // Reject bad ages before any simulation runs.
    for &age in &ages {
        requirements_for_age(age, &cfg.requirements)?;
    }
    let opt = Optimizer::new(cfg.model)?;
    let outcomes = opt.sweep_ages(&ages, &cfg.requirements);

    let mut rows = Vec::new();
    let mut code = 0;
    eprintln!("{:>6} {:>9} {:>8} {:>9}  active", "age", "r_g (m)", "n", "mass (kg)");
    for (age, res) in &outcomes {
        match res {
            Ok(r) => {
                let active: Vec<&str> = r.active_constraints.iter().map(|c| c.label()).collect();
                eprintln!(
                    "{age:>6.2} {:>9.5} {:>8.3} {:>9.4}  {}",
                    r.gap_radius,
                    r.gear_ratio,
                    r.actuator_mass,
                    active.join(",")
                );
                rows.push(json!({ "age": age, "result": r }));
            }
            Err(e) => {
                code = code.max(core_exit_code(e));
                eprintln!("{age:>6.2}  {e}");
                rows.push(json!({ "age": age, "error": e.to_string() }));
            }
        }
    }
    write_json(out, &json!({ "config": cfg, "args": args, "results": rows }))?;
    Ok(code)
}

fn requirement_for(metric: GridMetric, req: &Requirements) -> Option<(Constraint, f64)> {
    match metric {
        GridMetric::MaxTorque => Some((Constraint::RequiredTorque, req.required_torque)),
        GridMetric::MaxSpeed => Some((Constraint::MaxSpeed, req.required_speed)),
        GridMetric::NaturalFrequency => Some((Constraint::NaturalFrequency, req.required_natural_frequency_hz)),
        GridMetric::BackdriveAvg => Some((Constraint::Backdrive, req.max_backdrive_torque)),
        GridMetric::Mass => None,
    }
}

fn grid(cfg: &RunConfig, args: &GridArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let threshold = match args.age {
        Some(age) => {
            let req = requirements_for_age(age, &cfg.requirements)?;
            match requirement_for(args.metric, &req) {
                Some(t) => Some(t),
                None => return Err(invalid(format!("metric {} has no requirement to compare against", args.metric))),
            }
        }
        None => None,
    };
    let opt = Optimizer::new(cfg.model)?;
    let cells = opt.constraint_grid(args.metric, &args.rg, &args.n)?;

    write_csv_header(out, cfg, "grid", args)?;
    writeln!(out, "# metric: {} ({})", args.metric, args.metric.unit())?;
    match threshold {
        Some((c, t)) => {
            writeln!(out, "# margin: {c} against {t}; positive where satisfied")?;
            writeln!(out, "gap_radius_m,gear_ratio,value,margin")?;
        }
        None => writeln!(out, "gap_radius_m,gear_ratio,value")?,
    }
    for cell in &cells {
        match threshold {
            Some((c, t)) => {
                let margin = if c == Constraint::Backdrive { t - cell.value } else { cell.value - t };
                writeln!(out, "{},{},{},{}", cell.gap_radius, cell.gear_ratio, cell.value, margin)?;
            }
            None => writeln!(out, "{},{},{}", cell.gap_radius, cell.gear_ratio, cell.value)?,
        }
    }
    out.flush()?;
    Ok(0)
}

fn bode(cfg: &RunConfig, args: &BodeArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let motor = scale_motor(args.rg)?;
    if !(args.n >= 1.0) {
        return Err(invalid(format!("gear ratio {} must be at least 1", args.n)));
    }
    let tf = closed_loop_torque_tf(&motor, &cfg.model.drivetrain(args.n), &cfg.model.gains())?;
    let fr = frequency_response(&tf, args.flo, args.fhi, args.points)?;
    write_csv_header(out, cfg, "bode", args)?;
    writeln!(out, "# num: {:?}", tf.num)?;
    writeln!(out, "# den: {:?}", tf.den)?;
    fr.write_csv(&mut *out)?;
    out.flush()?;
    match bandwidth_neg3db(&tf) {
        Ok(bw) => eprintln!("bandwidth_-3db_hz: {bw}"),
        Err(Error::NotFound(_)) => {
            eprintln!("bandwidth_-3db_hz: none in [{BANDWIDTH_SEARCH_LO}, {BANDWIDTH_SEARCH_HI}] Hz")
        }
        Err(e) => return Err(e.into()),
    }
    Ok(0)
}

fn controller(cfg: &mut RunConfig, args: &ControllerArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let c = &mut cfg.controller;
    c.alpha = args.alpha.unwrap_or(c.alpha);
    c.gain = args.kappa.unwrap_or(c.gain);
    c.shift = args.shift.unwrap_or(c.shift);
    c.sample_period = args.sample_period.unwrap_or(c.sample_period);
    c.torque_cap = args.torque_cap.or(c.torque_cap);
    c.validate()?;
    let trace = match &args.input {
        Some(path) => load_trace(path)?,
        None => two_leg_synthetic(cfg.model.gait.cycle_freq, args.duration, c.sample_period, args.phase_offset)?,
    };
    let torques = run_controller(&trace, c)?;
    write_csv_header(out, cfg, "controller", args)?;
    torques.write_csv(&mut *out)?;
    out.flush()?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(jobs) = cli.flags.jobs {
        if jobs == 0 {
            return Err(invalid("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
    }
    let mut cfg = resolve_config(&cli.flags)?;
    let mut out = open_output(cli.flags.output.as_deref())?;
    match &cli.command {
        Command::Evaluate(a) => evaluate(&cfg, a, &mut *out),
        Command::Optimize(a) => optimize(&cfg, a, &mut *out),
        Command::Grid(a) => grid(&cfg, a, &mut *out),
        Command::Bode(a) => bode(&cfg, a, &mut *out),
        Command::Controller(a) => controller(&mut cfg, a, &mut *out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
