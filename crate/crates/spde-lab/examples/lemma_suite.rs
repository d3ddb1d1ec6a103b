//! The analytic-inequality battery: exponent identities, reverse-Jensen
//! ensembles in space and time, the exact covariance lower bound per
//! kernel, and the Lipschitz cutoff family. Writes JSON reports.
//!
//!     cargo run --release -p spde-lab --example lemma_suite

use spde_lab::sweep::{run_lemma_suite, LemmaSuiteParams};

fn main() {
    let params = LemmaSuiteParams::default();
    let out = std::path::PathBuf::from("out/example_lemma");
    let outcome = run_lemma_suite(&params, &out).unwrap();

    println!(
        "{:>36} {:>12} {:>12} {:>12} {:>6}",
        "check", "lhs", "rhs", "ratio", "holds"
    );
    for rec in &outcome.records {
        // the exponent lattice alone is 162 records; show a digest
        if rec.lemma == "exponent_identity" {
            continue;
        }
        println!(
            "{:>36} {:>12.4e} {:>12.4e} {:>12.4e} {:>6}",
            rec.lemma, rec.lhs, rec.rhs, rec.ratio, rec.holds
        );
    }
    let exponent_ok = outcome
        .records
        .iter()
        .filter(|r| r.lemma == "exponent_identity")
        .all(|r| r.holds);
    println!("exponent identity lattice: all hold = {exponent_ok}");
    println!("violations: {}", outcome.violations);
    println!("reports in {}", out.display());
}
