//! Monte Carlo sweep over the sub-linearity exponent: estimate the
//! bounded-support fraction per lambda with Wilson intervals and check the
//! monotone trend. A reduced-replica version of the default experiment.
//!
//!     cargo run --release -p spde-lab --example csp_sweep

use spde_lab::config::Config;
use spde_lab::sweep::{monotone_trend_ok, run_sweep};

fn main() {
    let cfg = Config::from_text("[sweep]\nreplicas = 16\nout = out/example_sweep\n").unwrap();
    let out = std::path::PathBuf::from(&cfg.out_dir);
    let result = run_sweep(&cfg, 0, &out).unwrap();
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    println!(
        "{:>8} {:>10} {:>10} {:>20} {:>8}",
        "lambda", "eps_rel", "fraction", "wilson 95%", "regime"
    );
    for a in result
        .aggregates
        .iter()
        .filter(|a| (a.eps_rel - 1e-8).abs() < 1e-20)
    {
        println!(
            "{:>8} {:>10.0e} {:>10.3} [{:>8.3}, {:>8.3}] {:>8}",
            a.lambda,
            a.eps_rel,
            a.fraction,
            a.ci_low,
            a.ci_high,
            if a.failure_regime { "failure" } else { "csp" }
        );
    }
    println!(
        "\nmonotone trend in lambda: {}",
        monotone_trend_ok(&result.aggregates)
    );
    println!("blow-ups: {}", result.rows.iter().filter(|r| r.blow_up).count());
    println!("outputs in {}", out.display());
}
