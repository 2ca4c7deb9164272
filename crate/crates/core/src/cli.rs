//! The `kinetic` command line: build, simulate, equilibrium, verify and
//! lattice-stats.
//!
//! Every subcommand also accepts `--config FILE`, a JSON object whose keys are
//! long option names (`"t_end": 200`, `"seed_broadwell": 2`, ...). Values from
//! the file are applied first, so flags given on the command line win.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 invalid input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::{
    exponential_bound_check, integrate, lower_bound_check, random_initial_state, rhs, weak_form, DynamicsError,
    IntegrateOptions, Invariants, Sampling, Trajectory,
};
use crate::equilibrium::{
    solve_equilibrium_with_momentum, solve_exponential_equilibrium, solve_wke_equilibrium, verify_stationary,
    EquilibriumError, EquilibriumParams,
};
use crate::interaction::{InteractionError, InteractionLaw};
use crate::model::{
    autopopulate_reactions, check_normal, extend_model, grow_within_box, model_to_json, read_model, seed_broadwell,
    Model, ModelError, NormalityReport, RateRule, VelocitySet,
};
use crate::quadrature::{build_gamma, shell_stats, QuadratureError, QuadratureSpec, SphereFn};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Domain(#[from] InteractionError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            // a failing step controller is a numerical failure, not bad input
            CliError::Dynamics(DynamicsError::StepUnderflow { .. } | DynamicsError::TooManySteps { .. })
            | CliError::Dynamics(DynamicsError::InvariantDrift { .. } | DynamicsError::NonMonotone { .. })
            | CliError::Equilibrium(EquilibriumError::NoConvergence { .. }) => EXIT_FAILED,
            _ => EXIT_INVALID,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kinetic",
    version,
    about = "Normal discrete kinetic models",
    args_override_self = true
)]
pub struct Cli {
    /// JSON file with default option values for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model, print its normality report and write canonical JSON.
    Build(BuildArgs),
    /// Integrate a model and write the trajectory CSV and a summary.
    Simulate(SimulateArgs),
    /// Solve for a stationary state.
    Equilibrium(EquilibriumArgs),
    /// Run normality, conservation and H-monotonicity checks on a model.
    Verify(VerifyArgs),
    /// Integer points on spheres and their equidistribution, as CSV.
    LatticeStats(LatticeStatsArgs),
}

#[derive(Debug, Args, Default)]
pub struct ModelSource {
    /// Read the model from a JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Extended Broadwell seed model in dimension D.
    #[arg(long, value_name = "D")]
    pub seed_broadwell: Option<usize>,
    /// The four-point planar Broadwell model.
    #[arg(long)]
    pub broadwell4: bool,
    /// Full grid {−R..R}ᵈ·H with every collision quadruple.
    #[arg(long = "box", num_args = 3, value_names = ["D", "H", "R"])]
    pub grid: Option<Vec<String>>,
    /// With --box: lattice quadrature rates instead of unit rates.
    #[arg(long)]
    pub quadrature: bool,
    /// Add a point through the right-angle anchor A,B,C (1-based). Repeatable.
    #[arg(long, value_name = "A,B,C")]
    pub extend: Vec<String>,
    /// Greedily extend N times within the box of radius --grow-radius.
    #[arg(long, value_name = "N")]
    pub grow: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub grow_radius: i64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// Interaction law: boltzmann, nuu-boson, nuu-fermion, anion:ALPHA, wke.
    #[arg(long, default_value = "wke")]
    pub law: String,
    /// Explicit initial state, comma separated.
    #[arg(long, value_name = "F1,F2,...")]
    pub f0: Option<String>,
    /// Random initial state with this seed (zero momentum by construction).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplies the random state; keep below 1 for fermions.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-11)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub atol: f64,
    /// Relative invariant drift that aborts the run.
    #[arg(long, default_value_t = 1e-10)]
    pub drift_tol: f64,
    /// Accept initial data with nonzero momentum.
    #[arg(long)]
    pub allow_momentum: bool,
    /// Samples before t = 1/λ and after it.
    #[arg(long, default_value_t = 50)]
    pub uniform_samples: usize,
    #[arg(long, default_value_t = 150)]
    pub geometric_samples: usize,
    /// Trajectory CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Summary JSON path; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value = "wke")]
    pub law: String,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub temperature: f64,
    /// Target momentum, comma separated; selects the full exponential family.
    #[arg(long, value_name = "P1,P2,...")]
    pub momentum: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LatticeStatsArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Comma-separated shells; overrides --m-max.
    #[arg(long, value_name = "M1,M2,...")]
    pub m: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub m_max: u64,
    /// Test functions: one, w1, w1sq, w1quart, w1w2.
    #[arg(long, default_value = "w1sq,w1quart")]
    pub tests: String,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| invalid(format!("bad {what} entry '{s}'")))
        })
        .collect()
}

impl ModelSource {
    fn load(&self) -> Result<Model, CliError> {
        let chosen = [
            self.model.is_some(),
            self.seed_broadwell.is_some(),
            self.broadwell4,
            self.grid.is_some(),
        ]
        .iter()
        .filter(|&&x| x)
        .count();
        if chosen != 1 {
            return Err(invalid(
                "choose exactly one of --model, --seed-broadwell, --broadwell4, --box",
            ));
        }
        let mut model = if let Some(path) = &self.model {
            read_model(path)?
        } else if let Some(d) = self.seed_broadwell {
            seed_broadwell(d)?
        } else if self.broadwell4 {
            let v = VelocitySet::broadwell_four();
            let t = autopopulate_reactions(&v, &RateRule::Constant(1.0))?;
            Model::new(v, t)?
        } else {
            let g = self.grid.as_ref().unwrap();
            let d: usize = g[0].parse().map_err(|_| invalid("box dimension must be an integer"))?;
            let h: f64 = g[1].parse().map_err(|_| invalid("box mesh step must be a number"))?;
            let r: i64 = g[2].parse().map_err(|_| invalid("box radius must be an integer"))?;
            let v = VelocitySet::grid(d, h, r)?;
            let t = if self.quadrature {
                build_gamma(&QuadratureSpec::new(d, h, r)?, &v)?
            } else {
                autopopulate_reactions(&v, &RateRule::Constant(1.0))?
            };
            Model::new(v, t)?
        };
        for anchor in &self.extend {
            let idx: Vec<usize> = parse_list(anchor, "anchor")?;
            if idx.len() != 3 || idx.contains(&0) {
                return Err(invalid(format!("anchor '{anchor}' must be three 1-based indices")));
            }
            model = extend_model(&model, (idx[0] - 1, idx[1] - 1, idx[2] - 1))?;
        }
        if let Some(steps) = self.grow {
            if let Some(last) = grow_within_box(&model, self.grow_radius, steps)?.pop() {
                model = last;
            }
        }
        Ok(model)
    }
}

fn parse_law(text: &str) -> Result<InteractionLaw, CliError> {
    text.parse::<InteractionLaw>().map_err(|e| invalid(e.to_string()))
}

fn initial_state(model: &Model, args: &StateArgs) -> Result<Vec<f64>, CliError> {
    match (&args.f0, args.seed) {
        (Some(list), None) => {
            let f: Vec<f64> = parse_list(list, "f0")?;
            if f.len() != model.n() {
                return Err(invalid(format!(
                    "f0 has {} entries, model has {} points",
                    f.len(),
                    model.n()
                )));
            }
            Ok(f)
        }
        (None, Some(seed)) => Ok(random_initial_state(&model.velocities, seed, args.scale)?),
        (None, None) => Err(invalid("give --f0 or --seed")),
        (Some(_), Some(_)) => Err(invalid("--f0 and --seed are exclusive")),
    }
}

/// Stationary state with the moments of `inv`: the `β = 0` wave kinetic
/// solution on symmetric sets, the full exponential family otherwise.
pub fn matching_equilibrium(
    v: &VelocitySet,
    law: &InteractionLaw,
    inv: &Invariants,
) -> Result<EquilibriumParams, EquilibriumError> {
    if *law == InteractionLaw::Wke && v.is_symmetric() && inv.momentum_norm() <= 1e-12 * inv.rho {
        solve_wke_equilibrium(v, inv.rho, inv.temperature)
    } else {
        solve_equilibrium_with_momentum(v, law, inv.rho, &inv.momentum, inv.temperature)
    }
}

fn normality_json(rep: &NormalityReport) -> Value {
    json!({
        "normal": rep.is_normal(),
        "condition_a": rep.condition_a,
        "condition_b": rep.condition_b,
        "condition_c": rep.condition_c,
        "rank_phi": rep.rank_phi,
        "rank_p": rep.rank_p,
        "rank_p_required": rep.p_max,
        "isolated_points": rep.isolated_points.iter().map(|i| i + 1).collect::<Vec<_>>(),
    })
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_build(args: &BuildArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let model = args.source.load()?;
    let rep = check_normal(&model);
    let warning = (!rep.is_normal()).then(|| {
        let mut failed = Vec::new();
        if !rep.condition_a {
            failed.push("a");
        }
        if !rep.condition_b {
            failed.push("b");
        }
        if !rep.condition_c {
            failed.push("c");
        }
        format!("model is not normal: condition(s) {} fail", failed.join(", "))
    });
    writeln!(err, "{}", serde_json::to_string(&normality_json(&rep)).expect("json"))?;
    emit(out, args.output.as_deref(), &model_to_json(&model, warning.as_deref()))?;
    Ok(EXIT_OK)
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = args.source.load()?;
    let law = parse_law(&args.state.law)?;
    let f0 = initial_state(&model, &args.state)?;
    if !(args.rtol > 0.0 && args.atol > 0.0 && args.drift_tol > 0.0) {
        return Err(invalid("tolerances must be positive"));
    }
    let opts = IntegrateOptions {
        rtol: args.rtol,
        atol: args.atol,
        drift_tolerance: args.drift_tol,
        require_zero_momentum: law == InteractionLaw::Wke && !args.allow_momentum,
        sampling: Sampling::Cadence {
            uniform: args.uniform_samples,
            geometric: args.geometric_samples,
        },
        ..Default::default()
    };
    let traj = integrate(&model, &law, &f0, args.t_end, &opts)?;
    if let Some(path) = &args.csv {
        let mut file = std::io::BufWriter::new(fs::File::create(path)?);
        traj.write_csv(&mut file)?;
        file.flush()?;
    }
    let summary = simulation_summary(&model, &law, &f0, &traj);
    emit(out, args.summary.as_deref(), &pretty(&summary))?;
    Ok(EXIT_OK)
}

/// Summary of one run: distance to the matching equilibrium, drifts, H steps
/// and (for the wave kinetic law) the positivity bounds.
pub fn simulation_summary(model: &Model, law: &InteractionLaw, f0: &[f64], traj: &Trajectory) -> Value {
    let inv0 = Invariants::of(&model.velocities, f0);
    let last = traj.last();
    let equilibrium = matching_equilibrium(&model.velocities, law, &inv0)
        .and_then(|p| p.state(&model.velocities, law).map(|f| (p, f)));
    let (eq_json, distance) = match equilibrium {
        Ok((p, f)) => (serde_json::to_value(&p).expect("json"), Some(sup_distance(&last.f, &f))),
        Err(e) => (json!({ "error": e.to_string() }), None),
    };
    let (h_min, h_max) = traj.h_step_range();
    let bounds = (*law == InteractionLaw::Wke).then(|| {
        let lower = traj.samples.iter().all(|s| lower_bound_check(f0, &s.f, inv0.rho));
        let exponential = traj
            .samples
            .iter()
            .all(|s| exponential_bound_check(f0, &s.f, s.t, traj.damping));
        json!({ "product_lower_bound": lower, "exponential_bound": exponential })
    });
    json!({
        "law": law.to_string(),
        "n": model.n(),
        "t_end": last.t,
        "samples": traj.samples.len(),
        "accepted_steps": traj.stats.accepted,
        "rejected_steps": traj.stats.rejected,
        "lambda": traj.lambda,
        "initial": inv0,
        "final": last.invariants,
        "max_mass_drift": traj.stats.max_mass_drift,
        "max_energy_drift": traj.stats.max_energy_drift,
        "max_momentum_drift": traj.stats.max_momentum_drift,
        "min_h_step": h_min,
        "max_h_step": h_max,
        "final_w": last.w,
        "equilibrium": eq_json,
        "final_distance": distance,
        "bounds": bounds,
    })
}

fn cmd_equilibrium(args: &EquilibriumArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = args.source.load()?;
    let law = parse_law(&args.law)?;
    let v = &model.velocities;
    let params = match (&args.momentum, law) {
        (Some(p), _) => {
            let p: Vec<f64> = parse_list(p, "momentum")?;
            solve_equilibrium_with_momentum(v, &law, args.rho, &p, args.temperature)?
        }
        (None, InteractionLaw::Wke) => solve_wke_equilibrium(v, args.rho, args.temperature)?,
        (None, _) => solve_exponential_equilibrium(v, &law, args.rho, args.temperature)?,
    };
    let rep = verify_stationary(&model, &law, &params)?;
    let mut doc = serde_json::to_value(&params).expect("json");
    doc["f_st"] = json!(rep.f_st);
    doc["residuals"] = json!({
        "q_sup": rep.q_sup,
        "w": rep.w,
        "mass_error": rep.mass_error,
        "temperature_error": rep.temperature_error,
        "stationary": rep.stationary,
    });
    emit(out, None, &pretty(&doc))?;
    Ok(if rep.pass { EXIT_OK } else { EXIT_FAILED })
}

/// The checks run by `verify`, as a JSON report and an overall verdict.
pub fn verify_model(model: &Model, seed: u64) -> Result<(Value, bool), CliError> {
    use rand::{Rng, SeedableRng};
    let rep = check_normal(model);
    let v = &model.velocities;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    // conservation and weak form on random states in every law's range
    let mut conservation_err: f64 = 0.0;
    let mut weak_err: f64 = 0.0;
    for law in InteractionLaw::all_families() {
        for _ in 0..5 {
            let f: Vec<f64> = (0..model.n()).map(|_| rng.gen_range(0.05..0.45)).collect();
            let h: Vec<f64> = (0..model.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = rhs(model, &law, &f)?;
            let scale = 1.0 + q.iter().map(|x| x.abs()).sum::<f64>() * v.max_speed_sq().max(1.0);
            let mass: f64 = q.iter().sum();
            let energy: f64 = q.iter().enumerate().map(|(i, x)| x * v.speed_sq(i)).sum();
            let mut worst = mass.abs().max(energy.abs());
            for a in 0..v.dim() {
                let p: f64 = q.iter().enumerate().map(|(i, x)| x * v.velocity(i)[a]).sum();
                worst = worst.max(p.abs());
            }
            conservation_err = conservation_err.max(worst / scale);
            let direct: f64 = q.iter().zip(&h).map(|(a, b)| a * b).sum();
            weak_err = weak_err.max((weak_form(model, &law, &f, &h)? - direct).abs() / scale);
        }
    }

    // short runs for H-monotonicity, one per law
    let mut h_checks = Vec::new();
    let mut h_ok = true;
    for law in InteractionLaw::all_families() {
        let f0: Vec<f64> = (0..model.n()).map(|_| rng.gen_range(0.05..0.45)).collect();
        let opts = IntegrateOptions {
            sampling: Sampling::Cadence {
                uniform: 20,
                geometric: 40,
            },
            ..Default::default()
        };
        let traj = integrate(model, &law, &f0, 5.0, &opts)?;
        let worst_step = traj
            .samples
            .windows(2)
            .map(|w| (w[1].h - w[0].h) / (1.0 + w[0].h.abs()))
            .fold(f64::NEG_INFINITY, f64::max);
        let min_w = traj.samples.iter().map(|s| s.w).fold(f64::INFINITY, f64::min);
        let ok = worst_step <= 1e-11 && min_w >= -1e-12;
        h_ok &= ok;
        h_checks.push(json!({ "law": law.to_string(), "max_relative_h_step": worst_step, "min_w": min_w, "pass": ok }));
    }

    let conservation_ok = conservation_err <= 1e-12 && weak_err <= 1e-12;
    let pass = rep.is_normal() && conservation_ok && h_ok;
    Ok((
        json!({
            "n": model.n(),
            "reactions": model.reactions.len(),
            "normality": normality_json(&rep),
            "conservation": { "max_relative_error": conservation_err, "weak_form_error": weak_err, "pass": conservation_ok },
            "h_theorem": h_checks,
            "pass": pass,
        }),
        pass,
    ))
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = args.source.load()?;
    let (report, pass) = verify_model(&model, args.seed)?;
    emit(out, None, &pretty(&report))?;
    Ok(if pass { EXIT_OK } else { EXIT_FAILED })
}

type TestFn = fn(&[f64]) -> f64;

fn test_function(name: &str) -> Result<TestFn, CliError> {
    Ok(match name {
        "one" => |_| 1.0,
        "w1" => |w| w[0],
        "w1sq" => |w| w[0] * w[0],
        "w1quart" => |w| w[0].powi(4),
        "w1w2" => |w| w[0] * w[0] * w[1] * w[1],
        other => return Err(invalid(format!("unknown test function '{other}'"))),
    })
}

fn cmd_lattice_stats(args: &LatticeStatsArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let names: Vec<&str> = args.tests.split(',').map(str::trim).collect();
    let fns: Vec<TestFn> = names.iter().map(|n| test_function(n)).collect::<Result<_, _>>()?;
    let dyn_fns: Vec<&SphereFn> = fns.iter().map(|f| f as &SphereFn).collect();
    let shells: Vec<u64> = match &args.m {
        Some(list) => parse_list(list, "shell")?,
        None => (1..=args.m_max).collect(),
    };
    let mut header = vec!["m".to_owned(), "residue_mod_8".into(), format!("r_{}", args.dim)];
    header.extend(names.iter().map(|n| format!("err_{n}")));
    writeln!(out, "{}", header.join(","))?;
    for m in shells {
        let row = shell_stats(m, args.dim, &dyn_fns)?;
        let mut cells = vec![row.m.to_string(), row.residue_mod_8.to_string(), row.count.to_string()];
        cells.extend(
            row.errors
                .iter()
                .map(|e| e.map_or(String::new(), |x| format!("{x:.6e}"))),
        );
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(EXIT_OK)
}

/// Turns a JSON object into `--key value` arguments.
fn config_args(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(invalid("config must be a JSON object"));
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                if key == "box" {
                    out.push(flag.into());
                    out.extend(joined.into_iter().map(OsString::from));
                } else if key == "extend" {
                    for item in joined {
                        out.push(flag.clone().into());
                        out.push(item.into());
                    }
                } else {
                    out.push(flag.into());
                    out.push(joined.join(",").into());
                }
            }
            other => {
                out.push(flag.into());
                out.push(scalar(&other)?.into());
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Array(items) => Ok(items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(",")),
        _ => Err(invalid("config values must be scalars or arrays")),
    }
}

/// Splices config-file arguments right after the subcommand name.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let pos = args.iter().position(|a| a == "--config");
    let inline = args.iter().position(|a| a.to_string_lossy().starts_with("--config="));
    let (path, mut rest) = match (pos, inline) {
        (Some(p), _) if p + 1 < args.len() => {
            let mut rest = args.clone();
            let path = PathBuf::from(rest.remove(p + 1));
            rest.remove(p);
            (path, rest)
        }
        (_, Some(p)) => {
            let mut rest = args.clone();
            let a = rest.remove(p);
            (PathBuf::from(&a.to_string_lossy()["--config=".len()..]), rest)
        }
        _ => return Ok(args),
    };
    let sub = rest
        .iter()
        .position(|a| {
            matches!(
                a.to_str(),
                Some("build" | "simulate" | "equilibrium" | "verify" | "lattice-stats")
            )
        })
        .ok_or_else(|| invalid("--config needs a subcommand"))?;
    let extra = config_args(&path)?;
    rest.splice(sub + 1..sub + 1, extra);
    Ok(rest)
}

fn configure_threads() {
    if let Some(n) = std::env::var("KINETIC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        // a second call (tests running in-process) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs the command line with explicit streams; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    configure_threads();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Build(a) => cmd_build(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Equilibrium(a) => cmd_equilibrium(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::LatticeStats(a) => cmd_lattice_stats(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the binary.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
