//! Command-line front end: integrability checks, noise validation, single
//! runs, Monte Carlo sweeps, the inequality lab, and report rendering.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 runtime failure, 3 inequality
//! violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spde_lab::config::Config;
use spde_lab::error::Error;
use spde_lab::kernels::{
    bessel_pairing, check_local_integrability, check_reinforced_dalang, parse_kernel,
    QuadratureConfig,
};
use spde_lab::noise::NoiseSampler;
use spde_lab::numeric::fmt_f64;
use spde_lab::solver::simulate;
use spde_lab::sweep::{run_lemma_suite, run_sweep, LemmaSuiteParams};

#[derive(Parser)]
#[command(
    name = "spde-lab",
    about = "Numerical laboratory for stochastic heat-type PDEs with colored noise",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (sectioned key = value); defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key as section.key=value (repeatable), e.g.
    /// --set grid.n=256 --set diffusion.lambda=0.7
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica-level parallelism (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the reinforced integrability condition and its local
    /// equivalent for a kernel.
    CheckDalang {
        /// Kernel spec: white | riesz:alpha=<f> | ou:beta=<f> | constant |
        /// bump:r=<f>,amp=<f> | table:<path>
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Radial quadrature cutoff.
        #[arg(long, default_value_t = 1e4)]
        rho_max: f64,
    },
    /// Build a noise sampler and validate its covariance by Monte Carlo;
    /// writes a CSV of (lag, target, estimate, stderr).
    SampleNoise {
        #[command(flatten)]
        common: Common,
        /// Number of increments for the covariance estimate.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Run a single replica and write its trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        replica: u64,
        /// Also write the final field as a binary snapshot.
        #[arg(long, default_value_t = false)]
        snapshot: bool,
    },
    /// Monte Carlo sweep over (lambda, kernel) cells.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Run the inequality-lab battery and write JSON reports.
    LemmaSuite {
        #[command(flatten)]
        common: Common,
        /// Deliberately violate the mollifier recipe (expected failure).
        #[arg(long, default_value_t = false)]
        negative_control: bool,
    },
    /// Render a sweep summary as a table.
    Report {
        /// Sweep output directory containing summary.json.
        #[arg(long)]
        dir: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<Config, Error> {
    let mut text = match &common.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    // later sections override earlier keys, so appending implements --set
    for item in &common.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects section.key=value, got `{item}`")))?;
        let (section, key) = key
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("--set expects section.key=value, got `{item}`")))?;
        text.push_str(&format!("\n[{section}]\n{key} = {value}\n"));
    }
    let mut cfg = Config::from_text(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run() -> Result<i32, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::CheckDalang {
            kernel,
            eta,
            dim,
            rho_max,
        } => {
            let k = parse_kernel(&kernel, dim)?;
            let qc = QuadratureConfig {
                rho_max,
                ..QuadratureConfig::default()
            };
            let spectral = check_reinforced_dalang(&k, eta, &qc)?;
            let local = check_local_integrability(&k, eta, &qc)?;
            let pairing = bessel_pairing(&k, eta, &qc)?;
            println!("kernel: {kernel} (d = {dim}), eta = {eta}");
            println!(
                "reinforced condition: converged = {}, value = {}, tail exponent = {}",
                spectral.converged,
                fmt_f64(spectral.value),
                fmt_f64(spectral.tail_exponent)
            );
            println!(
                "local equivalent:     converged = {}, case = {:?}, value = {}",
                local.report.converged,
                local.case,
                fmt_f64(local.report.value)
            );
            println!(
                "kernel pairing:       converged = {}, value = {}",
                pairing.converged,
                fmt_f64(pairing.value)
            );
            if spectral.converged != local.report.converged {
                println!("WARNING: the two checkers disagree");
                return Ok(2);
            }
            Ok(0)
        }
        Command::SampleNoise { common, samples } => {
            let cfg = load_config(&common)?;
            cfg.validate()?.iter().for_each(|w| eprintln!("warning: {w}"));
            let kernel = cfg.kernel()?;
            let grid = cfg.grid()?;
            let sampler = NoiseSampler::build(&kernel, grid, cfg.seed)?;
            println!(
                "sampler built: kernel = {}, n = {}, dx = {}, defect = {}",
                kernel.label(),
                grid.n(),
                fmt_f64(grid.dx()),
                fmt_f64(sampler.defect())
            );
            let lags: Vec<[isize; 2]> = match grid.dim() {
                1 => vec![[0, 0], [1, 0], [3, 0], [8, 0], [17, 0]],
                _ => vec![[0, 0], [1, 0], [0, 3], [5, 5], [11, 0]],
            };
            let rows = sampler.empirical_covariance(samples, &lags)?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&out)?;
            let path = out.join("covariance.csv");
            let mut w = String::from("lag0,lag1,target,estimate,stderr\n");
            for row in &rows {
                w.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.lag[0],
                    row.lag[1],
                    fmt_f64(row.target),
                    fmt_f64(row.estimate),
                    fmt_f64(row.stderr)
                ));
                println!(
                    "lag ({:3}, {:3}): target {:>14}, estimate {:>14} +- {}",
                    row.lag[0],
                    row.lag[1],
                    fmt_f64(row.target),
                    fmt_f64(row.estimate),
                    fmt_f64(row.stderr)
                );
            }
            std::fs::write(&path, w)?;
            println!("wrote {}", path.display());
            let (skew, kurt) = sampler.anchor_moments(samples);
            println!(
                "anchor moments: skewness = {}, excess kurtosis = {}",
                fmt_f64(skew),
                fmt_f64(kurt)
            );
            Ok(0)
        }
        Command::Simulate {
            common,
            replica,
            snapshot,
        } => {
            let cfg = load_config(&common)?;
            cfg.validate()?.iter().for_each(|w| eprintln!("warning: {w}"));
            let setup = cfg.run_setup(None, None)?;
            let traj = simulate(&setup, replica)?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&out)?;
            let path = out.join(format!("trajectory_{replica:04}.csv"));
            let f = std::fs::File::create(&path)?;
            traj.write_csv(std::io::BufWriter::new(f))?;
            println!("wrote {}", path.display());
            if snapshot {
                let snap = out.join(format!("final_{replica:04}.field"));
                traj.final_field
                    .write_snapshot_file(&snap, *traj.times.last().unwrap())?;
                println!("wrote {}", snap.display());
            }
            let last_radius = traj.support_radius[0].last().cloned().flatten();
            println!(
                "final time {}: support radius {}, clipped mass {}",
                fmt_f64(*traj.times.last().unwrap()),
                last_radius.map(fmt_f64).unwrap_or_else(|| "none".into()),
                fmt_f64(traj.clipped_mass)
            );
            Ok(0)
        }
        Command::Sweep { common } => {
            let cfg = load_config(&common)?;
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from(cfg.out_dir.clone()));
            let result = run_sweep(&cfg, common.workers, &out)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "sweep complete: {} replica rows, {} aggregates, {} blow-ups",
                result.rows.len(),
                result.aggregates.len(),
                result.rows.iter().filter(|r| r.blow_up).count()
            );
            print_aggregates(&result.aggregates);
            println!("outputs in {}", out.display());
            Ok(0)
        }
        Command::LemmaSuite {
            common,
            negative_control,
        } => {
            let cfg = load_config(&common)?;
            let params = LemmaSuiteParams {
                negative_control,
                seed: cfg.seed,
                ..LemmaSuiteParams::default()
            };
            let out = common.out.unwrap_or_else(|| PathBuf::from("out/lemma"));
            let outcome = run_lemma_suite(&params, &out)?;
            println!(
                "lab battery: {} records, {} violations; reports in {}",
                outcome.records.len(),
                outcome.violations,
                out.display()
            );
            if outcome.violations > 0 {
                return Ok(3);
            }
            Ok(0)
        }
        Command::Report { dir } => {
            let text = std::fs::read_to_string(dir.join("summary.json"))?;
            let summary: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad summary.json: {e}")))?;
            println!(
                "config hash: {}",
                summary["config_hash"].as_str().unwrap_or("?")
            );
            println!(
                "monotone trend in lambda: {}",
                summary["monotone_trend"].as_bool().unwrap_or(false)
            );
            println!("blow-ups: {}", summary["blow_ups"]);
            if let Some(rows) = summary["aggregates"].as_array() {
                println!(
                    "{:>8} {:>20} {:>10} {:>10} {:>8} {:>20} {:>8}",
                    "lambda", "kernel", "eps_rel", "fraction", "n", "wilson 95%", "regime"
                );
                for r in rows {
                    println!(
                        "{:>8} {:>20} {:>10} {:>10.4} {:>8} [{:>7.4}, {:>7.4}] {:>8}",
                        r["lambda"].as_f64().unwrap_or(f64::NAN),
                        r["kernel"].as_str().unwrap_or("?"),
                        r["eps_rel"].as_f64().unwrap_or(f64::NAN),
                        r["fraction"].as_f64().unwrap_or(f64::NAN),
                        r["replicas"].as_u64().unwrap_or(0),
                        r["ci_low"].as_f64().unwrap_or(f64::NAN),
                        r["ci_high"].as_f64().unwrap_or(f64::NAN),
                        if r["failure_regime"].as_bool().unwrap_or(false) {
                            "failure"
                        } else {
                            "csp"
                        }
                    );
                }
            }
            Ok(0)
        }
    }
}

fn print_aggregates(aggregates: &[spde_lab::sweep::AggregateRow]) {
    println!(
        "{:>8} {:>20} {:>10} {:>10} {:>20}",
        "lambda", "kernel", "eps_rel", "fraction", "wilson 95%"
    );
    for a in aggregates {
        println!(
            "{:>8} {:>20} {:>10} {:>10.4} [{:>7.4}, {:>7.4}]",
            a.lambda, a.kernel, a.eps_rel, a.fraction, a.ci_low, a.ci_high
        );
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
