//! Command-line surface: flag parsing, config resolution, file emission,
//! and the exit-code policy.
//!
//! Exit codes: 0 — success and all checks passed; 1 — usage, configuration,
//! or local runtime error; 2 — a verified bound or audit failed; 3 —
//! transport or framing failure in the networked mode.
//!
//! Angles are radians; `pi`-fraction literals ("pi/4", "2pi/3", "-pi/2",
//! "0.5pi") are accepted anywhere an angle is. `CRAC_SEED` overrides the
//! built-in default seed; an explicit `--seed` flag or a `--config` file
//! beats the environment. Flags always beat the config file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    bias_parameters, case_study, es_grid_witness, optimize_gain, random_ic_audit, sweep_sharded,
    sweep_to_csv, CaseId, GainObjective, SelfTest, SweepGrid,
};
use crate::error::{CracError, Result};
use crate::geometry::{EquatorDirection, QuadrantPartition};
use crate::infotheory::{audit_bounds, BiasParameters, InformationGain};
use crate::machines::{identity_op, pcc_op, swap_op, ClonerAngle};
use crate::netsim::{loopback_run, serve_alice, serve_bob, NetOptions};
use crate::ozawa::{disturbance_eta, meter_first_moments, noise_epsilon};
use crate::protocol::{
    exact_statistics, records_to_csv, run_trials, run_trials_sharded, BitsPrior, PhiMode,
    ProtocolConfig,
};
use crate::qcore::PureState;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_TRANSPORT: i32 = 3;

/// Parse an angle given as plain radians or a pi-fraction literal.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("angle {t:?} is not finite"))
        };
    }
    let (sign, rest) = match t.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, t.strip_prefix('+').unwrap_or(t)),
    };
    let Some(idx) = rest.find("pi") else {
        return Err(format!(
            "cannot parse angle {s:?}: use radians or a pi-fraction like pi/4"
        ));
    };
    let coef_str = &rest[..idx];
    let tail = &rest[idx + 2..];
    let coef: f64 = if coef_str.is_empty() {
        1.0
    } else {
        coef_str
            .parse()
            .map_err(|_| format!("bad coefficient {coef_str:?} in angle {s:?}"))?
    };
    let den: f64 = if tail.is_empty() {
        1.0
    } else {
        let den_str = tail
            .strip_prefix('/')
            .ok_or_else(|| format!("bad angle {s:?}: expected pi or pi/<denominator>"))?;
        den_str
            .parse()
            .map_err(|_| format!("bad denominator {den_str:?} in angle {s:?}"))?
    };
    if den == 0.0 || !coef.is_finite() || !den.is_finite() {
        return Err(format!("degenerate pi-fraction {s:?}"));
    }
    Ok(sign * coef * PI / den)
}

#[derive(Parser, Debug)]
#[command(
    name = "crac",
    version,
    about = "Coarse-grained random access code: two sequential qubit measurements against information bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample seeded trials and compare them with the exact statistics.
    Simulate(SimulateArgs),
    /// Check closed-form biases, the entropy bound, and randomized
    /// information-causality audits.
    Verify(VerifyArgs),
    /// Tabulate biases and information gains over an (eta, delta) grid.
    Sweep(SweepArgs),
    /// Locate the balanced design point of the protocol.
    Optimize(OptimizeArgs),
    /// Report rms noise and disturbance of a probe interaction.
    Ozawa(OzawaArgs),
    /// Run the protocol between two endpoints over TCP.
    Netsim(NetsimArgs),
    /// Reproduce the three limiting-case studies.
    Cases(CasesArgs),
}

#[derive(Args, Clone, Debug)]
struct ConfigFlags {
    /// Channel-A measurement axis.
    #[arg(long, value_parser = parse_angle)]
    axis_a: Option<f64>,
    /// Channel-B measurement axis.
    #[arg(long, value_parser = parse_angle)]
    axis_b: Option<f64>,
    /// Cloner angle eta in [0, pi/2].
    #[arg(long, value_parser = parse_angle)]
    eta: Option<f64>,
    /// Fixed encoding angle phi (implies --phi-mode fixed).
    #[arg(long, value_parser = parse_angle)]
    phi: Option<f64>,
    /// "fixed" or "uniform" (uniform samples phi inside the drawn quadrant).
    #[arg(long)]
    phi_mode: Option<String>,
    /// Comma-separated prior weights p00,p01,p10,p11.
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file mirroring the resolved config; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigFlags,
    /// Directory for trials.csv, stats.json, and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trial sharding.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_angle)]
    axis_a: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    axis_b: Option<f64>,
    /// Side length of the (eta, delta) grid for the bias cross-check.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Step of the entropy-bound witness grid on [0, 1].
    #[arg(long, default_value_t = 1e-3)]
    es_grid_step: f64,
    /// Number of randomized configurations for the causality audit.
    #[arg(long, default_value_t = 200)]
    ic_samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Deliberately corrupt a bound to prove the detector fires.
    #[arg(long, value_enum)]
    self_test: Option<SelfTestArg>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_parser = parse_angle)]
    axis_a: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    axis_b: Option<f64>,
    #[arg(long, default_value_t = 25)]
    eta_steps: usize,
    #[arg(long, default_value_t = 25)]
    delta_steps: usize,
    /// Directory for sweep.csv and manifest.json; omit to print CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// Axis preset; "orthogonal" is the canonical maximally incompatible pair.
    #[arg(long, value_enum)]
    axes: Option<AxesPreset>,
    #[arg(long, value_parser = parse_angle)]
    axis_a: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    axis_b: Option<f64>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::XiSqSum)]
    objective: ObjectiveArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OzawaArgs {
    #[arg(long, value_enum)]
    unitary: UnitaryArg,
    /// Cloner angle for --unitary pcc.
    #[arg(long, value_parser = parse_angle)]
    eta: Option<f64>,
    /// Axis of the observable being read and disturbed.
    #[arg(long, value_parser = parse_angle)]
    axis: Option<f64>,
    /// Number of equatorial sample states.
    #[arg(long, default_value_t = 64)]
    states: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NetsimArgs {
    #[command(subcommand)]
    role: NetRole,
}

#[derive(Subcommand, Debug)]
enum NetRole {
    /// Listen, encode, announce beta, and collect the guesses.
    Alice {
        #[command(flatten)]
        cfg: ConfigFlags,
        /// host:port to bind.
        #[arg(long)]
        listen: String,
        /// Suppress the classical bit (budget-ablation experiment).
        #[arg(long)]
        ablate_beta: bool,
        /// JSONL dump of every message this endpoint sees.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Connect, decode, and answer with guesses.
    Bob {
        #[command(flatten)]
        cfg: ConfigFlags,
        /// host:port of the Alice endpoint.
        #[arg(long)]
        connect: String,
        #[arg(long)]
        ablate_beta: bool,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run both endpoints over localhost and check agreement with the
    /// in-process engine.
    Loopback {
        #[command(flatten)]
        cfg: ConfigFlags,
        #[arg(long)]
        ablate_beta: bool,
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CasesArgs {
    /// a, b, c, or all.
    #[arg(long, default_value = "all")]
    case: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SelfTestArg {
    NegateXi,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AxesPreset {
    Orthogonal,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ObjectiveArg {
    XiSqSum,
    MutualInfo,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum UnitaryArg {
    Swap,
    Identity,
    Pcc,
}

/// Manifest emitted alongside every output file; re-running the same
/// subcommand with this config reproduces the outputs.
#[derive(Serialize, Debug)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

fn write_outputs(
    dir: &Path,
    subcommand: &str,
    config: serde_json::Value,
    seed: u64,
    files: &[(&str, String)],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
        outputs.push((*name).to_string());
    }
    outputs.push("manifest.json".to_string());
    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        config,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs,
    };
    fs::write(
        dir.join("manifest.json"),
        to_pretty(&serde_json::to_value(&manifest).expect("manifest serializes")),
    )?;
    Ok(())
}

fn to_pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("CRAC_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CracError::contract(format!("CRAC_SEED must be an integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn resolve_config(f: &ConfigFlags) -> Result<ProtocolConfig> {
    let mut cfg = if let Some(path) = &f.config {
        let text = fs::read_to_string(path)?;
        serde_json::from_str::<ProtocolConfig>(&text).map_err(|e| {
            CracError::contract(format!("config file {}: {e}", path.display()))
        })?
    } else {
        let mut base = ProtocolConfig::baseline();
        if let Some(seed) = env_seed()? {
            base.seed = seed;
        }
        base
    };
    if let Some(a) = f.axis_a {
        cfg.axis_a = EquatorDirection::new(a);
    }
    if let Some(b) = f.axis_b {
        cfg.axis_b = EquatorDirection::new(b);
    }
    if let Some(e) = f.eta {
        cfg.cloner_eta = ClonerAngle::new(e)?;
    }
    match (f.phi_mode.as_deref(), f.phi) {
        (Some("uniform"), None) => cfg.phi_mode = PhiMode::UniformQuadrant,
        (Some("uniform"), Some(_)) => {
            return Err(CracError::contract(
                "--phi conflicts with --phi-mode uniform",
            ))
        }
        (Some("fixed"), Some(p)) | (None, Some(p)) => {
            cfg.phi_mode = PhiMode::Fixed {
                angle: EquatorDirection::new(p),
            }
        }
        (Some("fixed"), None) => {
            if !matches!(cfg.phi_mode, PhiMode::Fixed { .. }) {
                return Err(CracError::contract("--phi-mode fixed needs --phi"));
            }
        }
        (Some(other), _) => {
            return Err(CracError::contract(format!(
                "unknown phi mode {other:?} (expected fixed or uniform)"
            )))
        }
        (None, None) => {}
    }
    if let Some(p) = &f.prior {
        cfg.bits_prior = parse_prior(p)?;
    }
    if let Some(t) = f.trials {
        cfg.trials = t;
    }
    if let Some(s) = f.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_prior(s: &str) -> Result<BitsPrior> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(CracError::contract(format!(
            "--prior needs four comma-separated weights, got {}",
            parts.len()
        )));
    }
    let mut weights = [0.0; 4];
    for (w, p) in weights.iter_mut().zip(&parts) {
        *w = p
            .trim()
            .parse()
            .map_err(|_| CracError::contract(format!("bad prior weight {p:?}")))?;
    }
    let prior = BitsPrior(weights);
    prior.validate()?;
    Ok(prior)
}

fn partition_from(axis_a: Option<f64>, axis_b: Option<f64>) -> Result<QuadrantPartition> {
    QuadrantPartition::new(
        EquatorDirection::new(axis_a.unwrap_or(0.0)),
        EquatorDirection::new(axis_b.unwrap_or(FRAC_PI_2)),
    )
}

fn gain_json(g: &InformationGain) -> serde_json::Value {
    json!({"i_a": g.i_a, "i_b": g.i_b, "total": g.total})
}

fn config_json(cfg: &ProtocolConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

/// Entry point: parse, dispatch, translate errors to exit codes.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CracError::Transport(_) | CracError::Frame(_) => EXIT_TRANSPORT,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Ozawa(args) => cmd_ozawa(args),
        Command::Netsim(args) => cmd_netsim(args),
        Command::Cases(args) => cmd_cases(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let cfg = resolve_config(&args.cfg)?;
    let (records, sampled) = run_trials_sharded(&cfg, args.parallel.max(1))?;
    let exact = exact_statistics(&cfg)?;
    let sampled_gain = sampled.information();
    let exact_gain = exact.information();
    let (s_a, s_b) = (
        exact.joint_a.success_probability(),
        exact.joint_b.success_probability(),
    );

    // The per-channel tables are binary-symmetric — and the ξ² bounds
    // therefore theorems — for any fixed-phi ensemble, and for quadrant-
    // uniform ensembles under a uniform prior.
    let bias = match cfg.phi_mode {
        PhiMode::Fixed { angle } => Some((
            "closed_form",
            bias_parameters(&cfg.partition()?, angle, cfg.cloner_eta)?,
        )),
        PhiMode::UniformQuadrant if cfg.bits_prior == BitsPrior::uniform() => Some((
            "effective",
            BiasParameters::new(
                (2.0 * s_a - 1.0).max(0.0),
                (2.0 * s_b - 1.0).max(0.0),
            )?,
        )),
        PhiMode::UniformQuadrant => None,
    };
    let (bias_json, bounds_json, pass) = match &bias {
        Some((kind, b)) => {
            let ledger = audit_bounds(&exact_gain, b, 1e-9);
            (
                json!({"kind": kind, "xi_a": b.xi_a, "xi_b": b.xi_b, "xi_sq_sum": b.xi_sq_sum()}),
                serde_json::to_value(ledger).expect("ledger serializes"),
                ledger.within_bounds,
            )
        }
        None => (json!(null), json!(null), true),
    };

    let summary = json!({
        "config": config_json(&cfg),
        "sampled": {
            "information": gain_json(&sampled_gain),
            "success_a": sampled.joint_a.success_probability(),
            "success_b": sampled.joint_b.success_probability(),
            "trials": cfg.trials,
            "classical_bits_used": sampled.classical_bits_used,
        },
        "exact": {
            "information": gain_json(&exact_gain),
            "success_a": s_a,
            "success_b": s_b,
        },
        "bias": bias_json,
        "bounds": bounds_json,
        "pass": pass,
    });
    print!("{}", to_pretty(&summary));

    if let Some(dir) = &args.out {
        let stats_body = json!({
            "sampled": serde_json::to_value(sampled).expect("stats serialize"),
            "exact": serde_json::to_value(exact).expect("stats serialize"),
            "summary": summary,
        });
        write_outputs(
            dir,
            "simulate",
            config_json(&cfg),
            cfg.seed,
            &[
                ("trials.csv", records_to_csv(&records)),
                ("stats.json", to_pretty(&stats_body)),
            ],
        )?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    if args.grid < 2 {
        return Err(CracError::contract("--grid must be at least 2"));
    }
    let axes = partition_from(args.axis_a, args.axis_b)?;
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(7),
    };
    let grid = SweepGrid::regular(axes, args.grid, args.grid)?;
    let oracle = crate::analysis::verify_bias_oracle(&grid)?;
    let es = es_grid_witness(args.es_grid_step)?;
    let self_test = match args.self_test {
        Some(SelfTestArg::NegateXi) => SelfTest::NegateBudget,
        None => SelfTest::Off,
    };
    let ic = random_ic_audit(args.ic_samples, seed, self_test)?;
    let pass = oracle.pass && es.pass && ic.all_within;
    let report = json!({
        "bias_closed_form": serde_json::to_value(oracle).expect("report serializes"),
        "entropy_bound": serde_json::to_value(es).expect("report serializes"),
        "information_causality": serde_json::to_value(ic).expect("report serializes"),
        "self_test": args.self_test.map(|_| "negate-xi"),
        "pass": pass,
    });
    print!("{}", to_pretty(&report));
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let axes = partition_from(args.axis_a, args.axis_b)?;
    let grid = SweepGrid::regular(axes, args.eta_steps, args.delta_steps)?;
    let rows = sweep_sharded(&grid, args.parallel.max(1))?;
    let csv = sweep_to_csv(&rows);
    let worst_budget_margin = rows
        .iter()
        .map(|r| r.xi_sq_sum - r.i_total)
        .fold(f64::INFINITY, f64::min);
    let summary = json!({
        "rows": rows.len(),
        "eta_steps": args.eta_steps,
        "delta_steps": args.delta_steps,
        "worst_budget_margin": worst_budget_margin,
        "max_i_total": rows.iter().map(|r| r.i_total).fold(0.0, f64::max),
    });
    match &args.out {
        Some(dir) => {
            let config = json!({
                "axis_a": axes.axis_a().radians(),
                "axis_b": axes.axis_b().radians(),
                "eta_steps": args.eta_steps,
                "delta_steps": args.delta_steps,
            });
            write_outputs(dir, "sweep", config, 0, &[("sweep.csv", csv)])?;
            print!("{}", to_pretty(&summary));
        }
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<i32> {
    let axes = match (args.axes, args.axis_a, args.axis_b) {
        (Some(AxesPreset::Orthogonal), None, None) => partition_from(None, None)?,
        (None, a, b) => partition_from(a, b)?,
        _ => {
            return Err(CracError::contract(
                "--axes preset conflicts with explicit --axis-a/--axis-b",
            ))
        }
    };
    let objective = match args.objective {
        ObjectiveArg::XiSqSum => GainObjective::XiSqSum,
        ObjectiveArg::MutualInfo => GainObjective::MutualInfoTotal,
    };
    let (eta_star, delta_star, value) = optimize_gain(&axes, objective)?;
    let report = json!({
        "objective": format!("{objective:?}"),
        "axis_a": axes.axis_a().radians(),
        "axis_b": axes.axis_b().radians(),
        "eta_star": eta_star,
        "delta_star": delta_star,
        "value": value,
        "point": format!("({eta_star:.6}, {delta_star:.6}, {value:.6})"),
    });
    print!("{}", to_pretty(&report));
    if let Some(dir) = &args.out {
        write_outputs(
            dir,
            "optimize",
            json!({"axis_a": axes.axis_a().radians(), "axis_b": axes.axis_b().radians(), "objective": format!("{objective:?}")}),
            0,
            &[("optimize.json", to_pretty(&report))],
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_ozawa(args: OzawaArgs) -> Result<i32> {
    if args.states < 2 {
        return Err(CracError::contract("--states must be at least 2"));
    }
    let axis = EquatorDirection::new(args.axis.unwrap_or(0.0));
    let (u, label, eta) = match args.unitary {
        UnitaryArg::Swap => (swap_op(), "swap", None),
        UnitaryArg::Identity => (identity_op(), "identity", None),
        UnitaryArg::Pcc => {
            let eta = ClonerAngle::new(args.eta.unwrap_or(FRAC_PI_4))?;
            (pcc_op(eta), "pcc", Some(eta.radians()))
        }
    };
    let probe = PureState::basis(2, 0);

    let mut states: Vec<PureState> = (0..args.states)
        .map(|k| crate::geometry::phase_state(EquatorDirection::new(TAU * k as f64 / args.states as f64)))
        .collect();
    states.push(PureState::basis(2, 0));
    states.push(PureState::basis(2, 1));

    let mut eps_max: f64 = 0.0;
    let mut dist_max: f64 = 0.0;
    let mut moment_gap_max: f64 = 0.0;
    for psi in &states {
        eps_max = eps_max.max(noise_epsilon(&u, psi, axis, &probe)?);
        dist_max = dist_max.max(disturbance_eta(&u, psi, axis, &probe)?);
        let (m_out, a_in) = meter_first_moments(&u, psi, axis, &probe)?;
        moment_gap_max = moment_gap_max.max((m_out - a_in).abs());
    }
    let aligned = crate::geometry::phase_state(axis);
    let report = json!({
        "unitary": label,
        "eta": eta,
        "axis": axis.radians(),
        "states_sampled": states.len(),
        "epsilon_max": eps_max,
        "epsilon_aligned": noise_epsilon(&u, &aligned, axis, &probe)?,
        "disturbance_max": dist_max,
        "meter_moment_gap_max": moment_gap_max,
    });
    print!("{}", to_pretty(&report));
    if let Some(dir) = &args.out {
        write_outputs(
            dir,
            "ozawa",
            json!({"unitary": label, "eta": eta, "axis": axis.radians()}),
            0,
            &[("ozawa.json", to_pretty(&report))],
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_netsim(args: NetsimArgs) -> Result<i32> {
    match args.role {
        NetRole::Alice {
            cfg,
            listen,
            ablate_beta,
            transcript,
            out,
        } => {
            let cfg = resolve_config(&cfg)?;
            let opts = NetOptions {
                ablate_beta,
                transcript,
            };
            let run = serve_alice(&cfg, &listen, &opts)?;
            let gain = run.stats.information();
            let summary = json!({
                "role": "alice",
                "config": config_json(&cfg),
                "trials": run.records.len(),
                "classical_bits_sent": run.bob_classical_bits,
                "information": gain_json(&gain),
                "ablate_beta": ablate_beta,
            });
            print!("{}", to_pretty(&summary));
            if let Some(dir) = &out {
                write_outputs(
                    dir,
                    "netsim-alice",
                    config_json(&cfg),
                    cfg.seed,
                    &[
                        ("trials.csv", records_to_csv(&run.records)),
                        (
                            "stats.json",
                            to_pretty(
                                &serde_json::to_value(run.stats).expect("stats serialize"),
                            ),
                        ),
                    ],
                )?;
            }
            Ok(EXIT_OK)
        }
        NetRole::Bob {
            cfg,
            connect,
            ablate_beta,
            transcript,
        } => {
            let cfg = resolve_config(&cfg)?;
            let opts = NetOptions {
                ablate_beta,
                transcript,
            };
            let (stats, audit) = serve_bob(&cfg, connect.as_str(), &opts)?;
            let expected_bits = if ablate_beta { 0 } else { cfg.trials };
            let budget_ok = audit.classical_bits_observed == expected_bits;
            let report = json!({
                "role": "bob",
                "stats": serde_json::to_value(stats).expect("stats serialize"),
                "audit": serde_json::to_value(audit).expect("audit serializes"),
                "budget_ok": budget_ok,
                "ablate_beta": ablate_beta,
            });
            print!("{}", to_pretty(&report));
            Ok(if budget_ok { EXIT_OK } else { EXIT_VIOLATION })
        }
        NetRole::Loopback {
            cfg,
            ablate_beta,
            transcript,
            out,
        } => {
            let cfg = resolve_config(&cfg)?;
            let opts = NetOptions {
                ablate_beta,
                transcript,
            };
            let (run, bob_stats, audit) = loopback_run(&cfg, &opts)?;
            let expected_bits = if ablate_beta { 0 } else { cfg.trials };
            let budget_ok = audit.classical_bits_observed == expected_bits
                && audit.quantum_fabric_messages == cfg.trials;
            // The wire run must replay the in-process engine exactly —
            // checkable only when beta actually travels.
            let transcript_identical = if ablate_beta {
                serde_json::Value::Null
            } else {
                let (records, _) = run_trials(&cfg)?;
                serde_json::Value::Bool(run.records == records)
            };
            let gain = run.stats.information();
            let pass = budget_ok && transcript_identical != serde_json::Value::Bool(false);
            let report = json!({
                "role": "loopback",
                "config": config_json(&cfg),
                "trials": run.records.len(),
                "audit": serde_json::to_value(audit).expect("audit serializes"),
                "budget_ok": budget_ok,
                "transcript_identical": transcript_identical,
                "information": gain_json(&gain),
                "bob_stats_match": bob_stats == run.stats,
                "pass": pass,
            });
            print!("{}", to_pretty(&report));
            if let Some(dir) = &out {
                write_outputs(
                    dir,
                    "netsim-loopback",
                    config_json(&cfg),
                    cfg.seed,
                    &[("trials.csv", records_to_csv(&run.records))],
                )?;
            }
            Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
        }
    }
}

fn cmd_cases(args: CasesArgs) -> Result<i32> {
    let which: Vec<CaseId> = match args.case.to_ascii_lowercase().as_str() {
        "a" => vec![CaseId::A],
        "b" => vec![CaseId::B],
        "c" => vec![CaseId::C],
        "all" => vec![CaseId::A, CaseId::B, CaseId::C],
        other => {
            return Err(CracError::contract(format!(
                "unknown case {other:?} (a, b, c, or all)"
            )))
        }
    };
    let reports = which
        .into_iter()
        .map(case_study)
        .collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let body = json!({
        "cases": serde_json::to_value(&reports).expect("reports serialize"),
        "pass": pass,
    });
    print!("{}", to_pretty(&body));
    if let Some(dir) = &args.out {
        write_outputs(
            dir,
            "cases",
            json!({"case": args.case}),
            0,
            &[("cases.json", to_pretty(&body))],
        )?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn angle_literals() {
        assert_abs_diff_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert_abs_diff_eq!(parse_angle("pi").unwrap(), PI);
        assert_abs_diff_eq!(parse_angle("pi/4").unwrap(), FRAC_PI_4);
        assert_abs_diff_eq!(parse_angle("-pi/2").unwrap(), -FRAC_PI_2);
        assert_abs_diff_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_abs_diff_eq!(parse_angle("0.5pi").unwrap(), FRAC_PI_2);
        assert_abs_diff_eq!(parse_angle(" 3pi ").unwrap(), 3.0 * PI);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("nan").is_err());
        assert!(parse_angle("").is_err());
    }

    #[test]
    fn prior_parsing() {
        let p = parse_prior("0.25, 0.25, 0.25, 0.25").unwrap();
        assert_eq!(p, BitsPrior::uniform());
        assert!(parse_prior("1,0,0").is_err());
        assert!(parse_prior("0.5,0.5,0.5,0.5").is_err());
        assert!(parse_prior("a,b,c,d").is_err());
    }

    #[test]
    fn flags_override_defaults_and_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        let mut file_cfg = ProtocolConfig::baseline();
        file_cfg.trials = 123;
        file_cfg.seed = 5;
        std::fs::write(&path, serde_json::to_string(&file_cfg).unwrap()).unwrap();

        let flags = ConfigFlags {
            axis_a: None,
            axis_b: None,
            eta: Some(0.3),
            phi: None,
            phi_mode: None,
            prior: None,
            trials: None,
            seed: Some(11),
            config: Some(path),
        };
        let cfg = resolve_config(&flags).unwrap();
        assert_eq!(cfg.trials, 123);
        assert_eq!(cfg.seed, 11);
        assert_abs_diff_eq!(cfg.cloner_eta.radians(), 0.3);
    }

    #[test]
    fn phi_mode_flag_combinations() {
        let base = ConfigFlags {
            axis_a: None,
            axis_b: None,
            eta: None,
            phi: None,
            phi_mode: None,
            prior: None,
            trials: None,
            seed: None,
            config: None,
        };
        let mut uniform = base.clone();
        uniform.phi_mode = Some("uniform".into());
        assert_eq!(
            resolve_config(&uniform).unwrap().phi_mode,
            PhiMode::UniformQuadrant
        );

        let mut conflict = base.clone();
        conflict.phi_mode = Some("uniform".into());
        conflict.phi = Some(0.1);
        assert!(resolve_config(&conflict).is_err());

        let mut unknown = base.clone();
        unknown.phi_mode = Some("banana".into());
        assert!(resolve_config(&unknown).is_err());

        let mut bare_phi = base;
        bare_phi.phi = Some(1.0);
        let cfg = resolve_config(&bare_phi).unwrap();
        assert!(
            matches!(cfg.phi_mode, PhiMode::Fixed { angle } if (angle.radians() - 1.0).abs() < 1e-12)
        );
    }

    #[test]
    fn usage_errors_exit_one_and_help_exits_zero() {
        assert_eq!(run(["crac", "simulate", "--banana"]), EXIT_USAGE);
        assert_eq!(run(["crac", "--help"]), EXIT_OK);
        assert_eq!(run(["crac"]), EXIT_USAGE);
    }
}
