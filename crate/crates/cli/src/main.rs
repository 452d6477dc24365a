//! Batch front end: simulate coherentified protocols, run error-corrected
//! pipelines, map rate-region points, run concentration sweeps, and verify
//! the exact resource identities. Outputs are machine readable (JSON/CSV)
//! and deterministic for a fixed seed.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cobitsim_core::compose::{f_of, plan, FParams, Ledger};
use cobitsim_core::concentrate::{concentrate, BoundParams, SchmidtSpectrum};
use cobitsim_core::protocol::{p_prime_width, run_p_prime};
use cobitsim_core::qstate::{schmidt, Party};
use cobitsim_core::resource::{
    apply_named_map, check_derivation, verify_identity, verify_tp_sd_ledger, DerivationScript,
    Identity, MAP_NAMES,
};
use cobitsim_core::Error;

use cobitsim_cli::files::{PipelineFile, ProtocolFile};
use cobitsim_cli::reports::{
    ConcentrateSummary, MapReport, PipelineSummary, PrRow, SimulateReport, VerifyReport,
};

const EXIT_SCHEMA: u8 = 2;
const EXIT_WIDTH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cobitsim",
    about = "Simulate and verify bidirectional coherent classical communication protocols",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base seed for all randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial sweeps (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Numeric tolerance for the checks this tool itself performs.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tolerance: f64,
    /// Refuse simulations needing more qubits than this.
    #[arg(long, global = true, default_value_t = 22)]
    max_qubits: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coherentified protocol and report its gamma decomposition.
    Simulate(SimulateArgs),
    /// Run the error-corrected composition for many seeded trials.
    Pipeline(PipelineArgs),
    /// Map a rate point between achievable regions, or check a derivation
    /// script.
    Regions(RegionsArgs),
    /// Concentration sweep on a Schmidt spectrum.
    Concentrate(ConcentrateArgs),
    /// Build the four exact identity circuits and report their deviations.
    VerifyIdentities(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Protocol description file.
    #[arg(long)]
    protocol: PathBuf,
    /// Enumerate every message pair (the default when -a/-b are absent).
    #[arg(long)]
    all_messages: bool,
    /// Alice's message bits, e.g. "10".
    #[arg(short = 'a')]
    a: Option<String>,
    /// Bob's message bits.
    #[arg(short = 'b')]
    b: Option<String>,
    /// Write the report as JSON here ("-" for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Seeded trials to run.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Per-trial ledger rows as CSV ("-" for stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Summary JSON ("-" for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the first trial's step-by-step transcript as JSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct RegionsArgs {
    /// Named map to apply (see --list-maps).
    #[arg(long)]
    map: Option<String>,
    /// Comma-separated coordinates, e.g. "-1,2,0".
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Derivation script to execute.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Print the registry of named maps.
    #[arg(long)]
    list_maps: bool,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ConcentrateArgs {
    /// Comma-separated spectrum probabilities, e.g. "0.25,0.25,0.25,0.25".
    #[arg(long)]
    spectrum: String,
    /// Copies to concentrate per trial.
    #[arg(long)]
    k_prime: usize,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Bound parameters: rates, protocol error, gate Schmidt number, uses.
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    sch_u: usize,
    #[arg(long, default_value_t = 1)]
    n_uses: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    json: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::WidthOverflow { .. } => EXIT_WIDTH,
        _ => EXIT_SCHEMA,
    }
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> std::io::Result<()> {
    match path {
        None => Ok(()),
        Some(p) if p.as_os_str() == "-" => {
            std::io::stdout().write_all(contents.as_bytes())
        }
        Some(p) => std::fs::write(p, contents),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .ok();
    }
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(&cli, args),
        Command::Pipeline(args) => cmd_pipeline(&cli, args),
        Command::Regions(args) => cmd_regions(&cli, args),
        Command::Concentrate(args) => cmd_concentrate(&cli, args),
        Command::VerifyIdentities(args) => cmd_verify(&cli, args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Schema(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_SCHEMA)
        }
        Err(CliError::Core(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
        Err(CliError::Io(err)) => {
            eprintln!("io error: {err}");
            ExitCode::from(1)
        }
    }
}

enum CliError {
    Schema(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<String> for CliError {
    fn from(e: String) -> Self {
        CliError::Schema(e)
    }
}

type CmdResult = Result<ExitCode, CliError>;

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn parse_bits_arg(label: &str, bits: &Option<String>, width: usize) -> Result<usize, CliError> {
    match bits {
        None => Ok(0),
        Some(s) => {
            if s.len() != width {
                return Err(CliError::Schema(format!(
                    "{label} needs exactly {width} bits, got `{s}`"
                )));
            }
            usize::from_str_radix(s, 2)
                .map_err(|e| CliError::Schema(format!("{label}: {e}")))
        }
    }
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> CmdResult {
    let file: ProtocolFile = load_json(&args.protocol)?;
    let protocol = file.protocol.resolve()?;
    let width = p_prime_width(&protocol)?;
    if width > cli.max_qubits {
        return Err(CliError::Core(Error::WidthOverflow {
            needed: width,
            cap: cli.max_qubits,
        }));
    }
    let requested = if args.all_messages || (args.a.is_none() && args.b.is_none()) {
        None
    } else {
        Some((
            parse_bits_arg("-a", &args.a, protocol.c1_bits)?,
            parse_bits_arg("-b", &args.b, protocol.c2_bits)?,
        ))
    };
    let (a, b) = requested.unwrap_or((0, 0));
    let out = run_p_prime(&protocol, a, b)?;
    let gamma = &out.gamma;
    let mut pr_table = Vec::new();
    if protocol.c1_bits + protocol.c2_bits > 0 {
        for (&(a, b, ap, bp), &pr) in &gamma.prob {
            pr_table.push(PrRow {
                a,
                b,
                a_out: ap,
                b_out: bp,
                pr,
            });
        }
    }
    let g00 = gamma.gamma00().normalized()?;
    let sd = schmidt(&g00, &[Party::Alice])?;
    let report = SimulateReport {
        version: 1,
        protocol: protocol.name.clone(),
        c1_bits: protocol.c1_bits,
        c2_bits: protocol.c2_bits,
        total_qubits: width,
        epsilon_measured: gamma.epsilon_measured,
        epsilon_bar: gamma.epsilon_bar,
        pr_table,
        gamma00_weight: gamma.gamma00().weight(),
        gamma00_entropy: sd.entropy_bits,
        gamma00_rank: sd.rank,
        decoupling_error: out.decoupling_error,
        requested,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if args.json.is_some() {
        write_output(&args.json, &json)?;
    } else {
        println!("{json}");
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

fn ledger_csv_row(trial: u64, seed: u64, ledger: &Ledger, k_prime: usize) -> String {
    format!(
        "{trial},{seed},{},{},{},{},{},{},{k_prime},{},{}",
        ledger.u_uses,
        ledger.ebits_in,
        ledger.ebits_out,
        ledger.cobits_fwd,
        ledger.cobits_back,
        ledger.p_fail,
        ledger.trial_success,
        ledger.message_error
    )
}

fn cmd_pipeline(cli: &Cli, args: &PipelineArgs) -> CmdResult {
    let file: PipelineFile = load_json(&args.config)?;
    let cfg = file.to_config()?;
    let width = p_prime_width(&cfg.protocol)?;
    if width > cli.max_qubits {
        return Err(CliError::Core(Error::WidthOverflow {
            needed: width,
            cap: cli.max_qubits,
        }));
    }
    let pl = plan(&cfg)?;
    let gamma_eps = pl.gamma.epsilon_measured;

    if args.transcript.is_some() {
        let (_, transcript) = pl.trial(&cfg, &file.messages_a, &file.messages_b, cli.seed)?;
        let json = serde_json::to_string_pretty(&transcript).expect("transcript serializes");
        write_output(&args.transcript, &json)?;
    }

    let rows: Vec<(u64, u64, Ledger, usize)> = (0..args.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = cli.seed.wrapping_add(trial.wrapping_mul(0x9e3779b97f4a7c15));
            let (ledger, transcript) = pl
                .trial(&cfg, &file.messages_a, &file.messages_b, seed)
                .expect("trial on validated config");
            (trial, seed, ledger, transcript.k_prime)
        })
        .collect();

    if args.csv.is_some() {
        let mut csv = String::new();
        csv.push_str(Ledger::csv_header());
        csv.push_str("\r\n");
        for (trial, seed, ledger, k_prime) in &rows {
            csv.push_str(&ledger_csv_row(*trial, *seed, ledger, *k_prime));
            csv.push_str("\r\n");
        }
        write_output(&args.csv, &csv)?;
    }

    let p = &cfg.protocol;
    let sch_u = p.gate.resolve()?.schmidt_number();
    let accounting = f_of(&FParams {
        k: cfg.k as f64,
        n: p.n_uses as f64,
        alpha: cfg.alpha,
        r: cfg.r_side_channel,
        sch_u: sch_u as f64,
        c1: p.c1_bits as f64,
        c2: p.c2_bits as f64,
        eps_n: gamma_eps,
        delta_n: cfg.delta_n,
        catalysis_c: None,
    })?;
    let trials = rows.len().max(1) as f64;
    let successes = rows.iter().filter(|(_, _, l, _)| l.trial_success).count() as f64;
    let summary = PipelineSummary {
        version: 1,
        protocol: p.name.clone(),
        k: cfg.k,
        alpha: cfg.alpha,
        trials: args.trials,
        p_fail: pl.p_fail(&cfg, cfg.code_a.encode(&file.messages_a)?, {
            cfg.code_b.encode(&file.messages_b)?
        }),
        decoupling_error: pl.decoupling_error,
        chernoff_premise: rows
            .first()
            .map(|(_, _, l, _)| l.chernoff_premise)
            .unwrap_or(gamma_eps == 0.0 || cfg.alpha >= -2.0 / gamma_eps.log2()),
        p_fail_bound_ok: rows
            .first()
            .map(|(_, _, l, _)| l.p_fail_bound_ok)
            .unwrap_or(true),
        success_rate: successes / trials,
        message_error_rate: rows
            .iter()
            .filter(|(_, _, l, _)| l.message_error)
            .count() as f64
            / trials,
        mean_ebits_out: rows.iter().map(|(_, _, l, _)| l.ebits_out).sum::<f64>() / trials,
        mean_k_prime: rows.iter().map(|(_, _, _, k)| *k as f64).sum::<f64>() / trials,
        cobits_fwd_per_success: if successes > 0.0 {
            rows.iter().map(|(_, _, l, _)| l.cobits_fwd).sum::<f64>() / successes
        } else {
            0.0
        },
        cobits_back_per_success: if successes > 0.0 {
            rows.iter().map(|(_, _, l, _)| l.cobits_back).sum::<f64>() / successes
        } else {
            0.0
        },
        accounting,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if args.json.is_some() {
        write_output(&args.json, &json)?;
    } else {
        println!("{json}");
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// regions
// ---------------------------------------------------------------------------

fn cmd_regions(_cli: &Cli, args: &RegionsArgs) -> CmdResult {
    if args.list_maps {
        let json = serde_json::to_string_pretty(MAP_NAMES).expect("names serialize");
        println!("{json}");
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(script_path) = &args.script {
        let script: DerivationScript = load_json(script_path)?;
        let verdict = check_derivation(&script)?;
        let json = serde_json::to_string_pretty(&verdict).expect("verdict serializes");
        if args.json.is_some() {
            write_output(&args.json, &json)?;
        } else {
            println!("{json}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let (Some(map), Some(point)) = (&args.map, &args.point) else {
        return Err(CliError::Schema(
            "regions needs --map with --point, or --script".into(),
        ));
    };
    let coords: Result<Vec<f64>, _> = point.split(',').map(|s| s.trim().parse()).collect();
    let coords = coords.map_err(|e| CliError::Schema(format!("--point: {e}")))?;
    let output = apply_named_map(map, &coords)?;
    let report = MapReport {
        version: 1,
        map: map.clone(),
        input: coords,
        output,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if args.json.is_some() {
        write_output(&args.json, &json)?;
    } else {
        println!("{json}");
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// concentrate
// ---------------------------------------------------------------------------

fn cmd_concentrate(cli: &Cli, args: &ConcentrateArgs) -> CmdResult {
    let probs: Result<Vec<f64>, _> = args
        .spectrum
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let probs = probs.map_err(|e| CliError::Schema(format!("--spectrum: {e}")))?;
    let spectrum = SchmidtSpectrum::new(probs)?;
    let params = BoundParams {
        c1: args.c1,
        c2: args.c2,
        eps: args.eps,
        sch_u: args.sch_u,
        n: args.n_uses,
    };
    let reports: Vec<_> = (0..args.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = cli.seed.wrapping_add(trial.wrapping_mul(0x9e3779b97f4a7c15));
            concentrate(&spectrum, args.k_prime, seed, &params).expect("validated params")
        })
        .collect();
    if args.csv.is_some() {
        let mut csv = String::new();
        csv.push_str(cobitsim_core::concentrate::ConcentrationReport::csv_header());
        csv.push_str("\r\n");
        for r in &reports {
            csv.push_str(&r.csv_row());
            csv.push_str("\r\n");
        }
        write_output(&args.csv, &csv)?;
    }
    let trials = reports.len().max(1) as f64;
    let summary = ConcentrateSummary {
        version: 1,
        k_prime: args.k_prime,
        trials: args.trials,
        mean_ebits_out: reports.iter().map(|r| r.ebits_out).sum::<f64>() / trials,
        mean_per_copy: reports.iter().map(|r| r.ebits_out).sum::<f64>()
            / trials
            / args.k_prime as f64,
        success_rate: reports.iter().filter(|r| r.success).count() as f64 / trials,
        bound_ebits: reports.first().map(|r| r.bound_ebits).unwrap_or(0.0),
        bound_prob: reports.first().map(|r| r.bound_prob).unwrap_or(0.0),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if args.json.is_some() {
        write_output(&args.json, &json)?;
    } else {
        println!("{json}");
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify-identities
// ---------------------------------------------------------------------------

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> CmdResult {
    let mut values = [0.0f64; 4];
    for (i, id) in Identity::ALL.iter().enumerate() {
        values[i] = verify_identity(*id)?;
    }
    let (_, probe_ebits) = verify_tp_sd_ledger()?;
    let all_pass = values.iter().all(|&v| v <= cli.tolerance);
    let report = VerifyReport {
        version: 1,
        teleport: values[0],
        superdense: values[1],
        two_cobits: values[2],
        tp_sd: values[3],
        tp_sd_probe_ebits: probe_ebits,
        tolerance: cli.tolerance,
        all_pass,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if args.json.is_some() {
        write_output(&args.json, &json)?;
    } else {
        println!("{json}");
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
