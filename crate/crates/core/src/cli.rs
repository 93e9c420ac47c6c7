//! Command-line front end: config resolution (file then flag overrides),
//! subcommand dispatch, worker-pool setup, and output file management.
//!
//! Exit codes: 0 success, 1 invalid input, 2 internal numeric failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{
    power_gain_slope, pr_closed_form, pr_monte_carlo, ScalingLawParams,
};
use crate::chansim::{sample_channels, ScenarioConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    default_distance_schemes, eta_table, summarize, sweep_distance, sweep_elements, write_csv,
    Scheme, SweepOutput,
};
use crate::model::PhaseResolution;
use crate::solver::{solve_p1, SolveOptions};
use crate::units::watts_to_dbm;

/// `--bits` argument: an integer bit count or `cont`.
#[derive(Debug, Clone, Copy)]
pub struct BitsArg(pub Option<u32>);

impl FromStr for BitsArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("cont") {
            Ok(BitsArg(None))
        } else {
            s.parse::<u32>()
                .map_err(|_| format!("expected an integer or 'cont', got '{s}'"))
                .map(|b| BitsArg(Some(b)))
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "irsim", version, about = "IRS-aided downlink transmit power minimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct CommonOpts {
    /// Flat key-value (TOML) config file mirroring the scenario field names.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// IRS elements (0 = no IRS).
    #[arg(long)]
    n: Option<usize>,
    /// AP antennas.
    #[arg(long)]
    m: Option<usize>,
    /// Phase-shifter bits, or 'cont' for continuous phases.
    #[arg(long)]
    bits: Option<BitsArg>,
    /// SNR target, dB.
    #[arg(long)]
    gamma_db: Option<f64>,
    /// Noise power, dBm.
    #[arg(long)]
    noise_dbm: Option<f64>,
    /// AP-user horizontal distance, meters.
    #[arg(long)]
    d: Option<f64>,
    /// AP-IRS horizontal distance, meters.
    #[arg(long)]
    d0: Option<f64>,
    /// Vertical offset of the user line, meters.
    #[arg(long)]
    dv: Option<f64>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Force h_d = 0 and M = 1.
    #[arg(long, action = ArgAction::SetTrue)]
    suppress_direct_link: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a single channel draw and print the result.
    Solve {
        #[command(flatten)]
        common: CommonOpts,
        /// Trial index selecting the channel draw.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Required transmit power versus AP-user distance, all benchmark schemes.
    SweepDistance {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 15.0)]
        d_min: f64,
        #[arg(long, default_value_t = 50.0)]
        d_max: f64,
        #[arg(long, default_value_t = 5.0)]
        d_step: f64,
        /// Comma-separated scheme list, e.g. 'continuous-ao,ao-1bit,no-irs'.
        #[arg(long)]
        schemes: Option<String>,
    },
    /// Required transmit power versus IRS size, per bit resolution.
    SweepElements {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated ascending N grid.
        #[arg(long, default_value = "20,60,100,140,180,220,260,300")]
        n_list: String,
        /// Comma-separated bit resolutions.
        #[arg(long, default_value = "1,2")]
        b_list: String,
    },
    /// Print the quantization-loss table eta(b).
    EtaTable {
        /// Largest bit count.
        #[arg(long, default_value_t = 3)]
        bits: u32,
    },
    /// Monte Carlo verification of the closed-form received-power law and
    /// the squared power gain in N.
    VerifyScaling {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated N grid for the log-log slope fit.
        #[arg(long, default_value = "64,128,256,512,1024")]
        n_list: String,
        /// Trials per point of the slope fit.
        #[arg(long, default_value_t = 2000)]
        slope_trials: u64,
    },
}

/// Optional file-level overrides; any subset of the scenario fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    m: Option<usize>,
    n: Option<usize>,
    bits: Option<toml::Value>,
    gamma_db: Option<f64>,
    sigma2_dbm: Option<f64>,
    d0: Option<f64>,
    dv: Option<f64>,
    d: Option<f64>,
    alpha_au: Option<f64>,
    alpha_ai: Option<f64>,
    alpha_iu: Option<f64>,
    ref_loss_db: Option<f64>,
    seed: Option<u64>,
    trials: Option<u64>,
    suppress_direct_link: Option<bool>,
}

fn parse_file_bits(v: &toml::Value) -> Result<Option<u32>> {
    match v {
        toml::Value::Integer(i) if *i >= 1 => Ok(Some(*i as u32)),
        toml::Value::String(s) if s.eq_ignore_ascii_case("cont") => Ok(None),
        other => Err(Error::InvalidInput(format!(
            "config key 'bits' must be an integer >= 1 or \"cont\", got {other}"
        ))),
    }
}

/// Defaults, then config file values, then flag overrides.
fn resolve_config(common: &CommonOpts) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config file {}: {e}", path.display())))?;
        if let Some(v) = file.m {
            cfg.m = v;
        }
        if let Some(v) = file.n {
            cfg.n = v;
        }
        if let Some(v) = &file.bits {
            cfg.bits = parse_file_bits(v)?;
        }
        if let Some(v) = file.gamma_db {
            cfg.gamma_db = v;
        }
        if let Some(v) = file.sigma2_dbm {
            cfg.sigma2_dbm = v;
        }
        if let Some(v) = file.d0 {
            cfg.d0 = v;
        }
        if let Some(v) = file.dv {
            cfg.dv = v;
        }
        if let Some(v) = file.d {
            cfg.d = v;
        }
        if let Some(v) = file.alpha_au {
            cfg.alpha_au = v;
        }
        if let Some(v) = file.alpha_ai {
            cfg.alpha_ai = v;
        }
        if let Some(v) = file.alpha_iu {
            cfg.alpha_iu = v;
        }
        if let Some(v) = file.ref_loss_db {
            cfg.ref_loss_db = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.trials {
            cfg.trials = v;
        }
        if let Some(v) = file.suppress_direct_link {
            cfg.suppress_direct_link = v;
        }
    }
    if let Some(v) = common.m {
        cfg.m = v;
    }
    if let Some(v) = common.n {
        cfg.n = v;
    }
    if let Some(BitsArg(bits)) = common.bits {
        cfg.bits = bits;
    }
    if let Some(v) = common.gamma_db {
        cfg.gamma_db = v;
    }
    if let Some(v) = common.noise_dbm {
        cfg.sigma2_dbm = v;
    }
    if let Some(v) = common.d {
        cfg.d = v;
    }
    if let Some(v) = common.d0 {
        cfg.d0 = v;
    }
    if let Some(v) = common.dv {
        cfg.dv = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.trials {
        cfg.trials = v;
    }
    if common.suppress_direct_link {
        cfg.suppress_direct_link = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::InvalidInput(format!("bad {what} entry '{t}'")))
        })
        .collect()
}

fn echo_config(cfg: &ScenarioConfig) {
    println!(
        "config: {}",
        serde_json::to_string(cfg).expect("config serializes")
    );
}

fn with_pool<F: FnOnce() -> Result<R> + Send, R: Send>(workers: Option<usize>, f: F) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidInput("workers must be >= 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn write_sweep_artifacts(
    out_dir: &Path,
    stem: &str,
    cfg: &ScenarioConfig,
    output: &SweepOutput,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let mut csv = Vec::new();
    write_csv(&output.results, &mut csv)?;
    fs::write(&csv_path, &csv)?;

    let summary = summarize(cfg, output);
    let json_path = out_dir.join(format!("{stem}_summary.json"));
    fs::write(
        &json_path,
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;

    for w in &output.warnings {
        println!("warning: {w}");
    }
    for p in &summary.points {
        let gap = p
            .gap_to_continuous_db
            .map(|g| format!(" gap-to-cont {g:+.3} dB"))
            .unwrap_or_default();
        println!(
            "{:<16} d={:<6} N={:<5} b={:<4} mean {:.4} dBm (se {:.3e} W){}",
            p.scheme, p.d_m, p.n, p.b, p.mean_power_dbm, p.se_power_watts, gap
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_solve(common: &CommonOpts, trial: u64) -> Result<()> {
    let cfg = resolve_config(common)?;
    echo_config(&cfg);
    let ch = sample_channels(&cfg, trial);
    let budget = cfg.link_budget()?;
    let res = solve_p1(&ch, cfg.resolution(), &budget, &SolveOptions::default())?;
    println!("trial:        {trial}");
    println!("objective:    {:.6e}  (combined channel gain)", res.objective);
    println!(
        "power:        {:.6e} W = {:.4} dBm",
        res.power_watts,
        watts_to_dbm(res.power_watts)
    );
    println!("sweeps:       {}", res.iterations);
    println!("converged:    {}", res.converged);
    Ok(())
}

fn cmd_sweep_distance(
    common: &CommonOpts,
    d_min: f64,
    d_max: f64,
    d_step: f64,
    schemes: Option<&str>,
) -> Result<()> {
    let cfg = resolve_config(common)?;
    echo_config(&cfg);
    if !(d_step > 0.0 && d_min > 0.0 && d_max >= d_min) {
        return Err(Error::InvalidInput(
            "need 0 < d_min <= d_max and d_step > 0".into(),
        ));
    }
    let mut d_values = Vec::new();
    let mut d = d_min;
    while d <= d_max + 1e-9 {
        d_values.push(d.min(d_max));
        d += d_step;
    }
    let schemes: Vec<Scheme> = match schemes {
        Some(list) => parse_list::<Scheme>(list, "scheme")?,
        None => default_distance_schemes(cfg.bits.unwrap_or(1)),
    };
    let output = with_pool(common.workers, || sweep_distance(&cfg, &d_values, &schemes))?;
    write_sweep_artifacts(&common.out, "sweep_distance", &cfg, &output)
}

fn cmd_sweep_elements(common: &CommonOpts, n_list: &str, b_list: &str) -> Result<()> {
    let cfg = resolve_config(common)?;
    echo_config(&cfg);
    let n_values: Vec<usize> = parse_list(n_list, "N")?;
    let b_values: Vec<u32> = parse_list(b_list, "bits")?;
    let output = with_pool(common.workers, || sweep_elements(&cfg, &n_values, &b_values))?;
    write_sweep_artifacts(&common.out, "sweep_elements", &cfg, &output)
}

fn cmd_eta_table(bits: u32) -> Result<()> {
    println!("{:<6} {:>10} {:>12}", "b", "eta", "eta_dB");
    for row in eta_table(bits)? {
        println!("{:<6} {:>10.4} {:>12.4}", row.b, row.eta, row.eta_db);
    }
    Ok(())
}

fn cmd_verify_scaling(common: &CommonOpts, n_list: &str, slope_trials: u64) -> Result<()> {
    let cfg = resolve_config(common)?;
    let n = cfg.n.max(1);
    let trials = cfg.trials;
    let seed = cfg.seed;
    println!("closed-form vs Monte Carlo received power, N = {n}, {trials} trials:");
    let mut rows = Vec::new();
    for resolution in [
        PhaseResolution::Bits(1),
        PhaseResolution::Bits(2),
        PhaseResolution::Continuous,
    ] {
        let params = ScalingLawParams::unit(resolution, n);
        let (mean, se) = pr_monte_carlo(&params, trials, seed)?;
        let expected = pr_closed_form(&params)?;
        let sigmas = (mean - expected).abs() / se;
        println!(
            "  b={:<5} mc {:.4}  closed-form {:.4}  |diff| = {:.2} se",
            resolution.label(),
            mean,
            expected,
            sigmas
        );
        rows.push(serde_json::json!({
            "b": resolution.label(),
            "n": n,
            "trials": trials,
            "monte_carlo_mean": mean,
            "monte_carlo_se": se,
            "closed_form": expected,
            "abs_diff_in_se": sigmas,
        }));
    }
    let n_values: Vec<usize> = parse_list(n_list, "N")?;
    let slope = power_gain_slope(PhaseResolution::Bits(1), &n_values, slope_trials, seed)?;
    println!("log-log slope of received power vs N (b=1): {slope:.4}");
    fs::create_dir_all(&common.out)?;
    let path = common.out.join("verify_scaling.json");
    fs::write(
        &path,
        serde_json::to_string_pretty(&serde_json::json!({
            "seed": seed,
            "points": rows,
            "slope_n_list": n_values,
            "slope_trials": slope_trials,
            "power_gain_slope_b1": slope,
        }))
        .expect("json serializes"),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Parse `argv` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.cmd {
        Command::Solve { common, trial } => cmd_solve(common, *trial),
        Command::SweepDistance {
            common,
            d_min,
            d_max,
            d_step,
            schemes,
        } => cmd_sweep_distance(common, *d_min, *d_max, *d_step, schemes.as_deref()),
        Command::SweepElements {
            common,
            n_list,
            b_list,
        } => cmd_sweep_elements(common, n_list, b_list),
        Command::EtaTable { bits } => cmd_eta_table(*bits),
        Command::VerifyScaling {
            common,
            n_list,
            slope_trials,
        } => cmd_verify_scaling(common, n_list, *slope_trials),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::DegenerateChannel | Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

#[allow(dead_code)]
fn assert_cli_definition() {
    Cli::command().debug_assert();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn bits_arg_parsing() {
        assert_eq!("cont".parse::<BitsArg>().unwrap().0, None);
        assert_eq!("3".parse::<BitsArg>().unwrap().0, Some(3));
        assert!("x".parse::<BitsArg>().is_err());
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let dir = std::env::temp_dir().join("irsim-cli-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.toml");
        fs::write(&path, "n = 12\nseed = 9\nbits = \"cont\"\ntrials = 7\n").unwrap();
        let common = CommonOpts {
            config: Some(path),
            seed: Some(11),
            trials: None,
            n: None,
            m: None,
            bits: None,
            gamma_db: None,
            noise_dbm: None,
            d: None,
            d0: None,
            dv: None,
            out: PathBuf::from("out"),
            workers: None,
            suppress_direct_link: false,
        };
        let cfg = resolve_config(&common).unwrap();
        assert_eq!(cfg.n, 12);
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.bits, None);
        // flag beats file
        assert_eq!(cfg.seed, 11);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = std::env::temp_dir().join("irsim-cli-test2");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        fs::write(&path, "nn = 12\n").unwrap();
        let common = CommonOpts {
            config: Some(path),
            seed: None,
            trials: None,
            n: None,
            m: None,
            bits: None,
            gamma_db: None,
            noise_dbm: None,
            d: None,
            d0: None,
            dv: None,
            out: PathBuf::from("out"),
            workers: None,
            suppress_direct_link: false,
        };
        assert!(resolve_config(&common).is_err());
    }

    #[test]
    fn run_rejects_unknown_subcommand() {
        assert_eq!(run(["irsim", "frobnicate"]), 1);
    }

    #[test]
    fn eta_table_runs() {
        assert_eq!(run(["irsim", "eta-table", "--bits", "3"]), 0);
    }
}
