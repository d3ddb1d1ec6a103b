//! The Lipschitz cutoff family h_n that regularizes h(u) = u^lambda:
//! exact vanishing at zero, uniform convergence to h on compacts, and
//! Lipschitz constants growing like n^{1-lambda}.
//!
//!     cargo run --release -p spde-lab --example cutoff_family

use spde_lab::lemma_lab::cutoff_report;
use spde_lab::solver::DiffusionFn;

fn main() {
    let lambda = 0.5;
    let rows = cutoff_report(lambda, 1.0, &[10, 100, 1000], 10.0).unwrap();
    println!(
        "{:>6} {:>10} {:>14} {:>16} {:>14}",
        "n", "h_n(0)", "Lipschitz", "sup|h_n - h|", "max h_n/(1+u)"
    );
    for r in &rows {
        println!(
            "{:>6} {:>10} {:>14.4} {:>16.6} {:>14.6}",
            r.n, r.at_zero, r.lipschitz, r.sup_deviation, r.linear_bound
        );
    }
    for w in rows.windows(2) {
        let measured = w[1].lipschitz / w[0].lipschitz;
        let predicted = (w[1].n as f64 / w[0].n as f64).powf(1.0 - lambda);
        println!(
            "Lipschitz growth {} -> {}: measured x{measured:.2}, n^(1-lambda) predicts x{predicted:.2}",
            w[0].n, w[1].n
        );
    }

    // pointwise feel for the smoothing near the origin
    let h = DiffusionFn::new(lambda, 1.0).unwrap();
    let h100 = h.with_cutoff(100).unwrap();
    println!("\n{:>10} {:>12} {:>12}", "u", "h(u)", "h_100(u)");
    for u in [0.0, 0.001, 0.01, 0.1, 1.0, 10.0, 150.0, 250.0] {
        println!("{:>10} {:>12.6} {:>12.6}", u, h.eval(u), h100.eval(u));
    }
}
