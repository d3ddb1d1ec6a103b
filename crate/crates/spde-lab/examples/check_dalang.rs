//! Integrability checks across the kernel catalog: for each kernel and
//! regularity parameter eta, evaluate the reinforced spectral condition and
//! its local equivalent, and confirm the two verdicts agree.
//!
//!     cargo run --release -p spde-lab --example check_dalang

use spde_lab::kernels::{
    check_local_integrability, check_reinforced_dalang, parse_kernel, QuadratureConfig,
};

fn main() {
    let qc = QuadratureConfig::default();
    for dim in [1usize, 2] {
        println!("--- d = {dim} ---");
        println!("{:>20} {:>5} {:>10} {:>10} {:>16}", "kernel", "eta", "spectral", "local", "case");
        let mut specs = vec!["white", "ou:beta=1", "ou:beta=2", "constant", "bump:r=0.5,amp=1"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for alpha in [0.5, 1.0, 1.5] {
            if alpha < 2.0_f64.min(dim as f64) {
                specs.push(format!("riesz:alpha={alpha}"));
            }
        }
        for spec in &specs {
            let kernel = parse_kernel(spec, dim).unwrap();
            for eta in [0.2, 0.4, 0.6, 0.8] {
                let spectral = check_reinforced_dalang(&kernel, eta, &qc).unwrap();
                let local = check_local_integrability(&kernel, eta, &qc).unwrap();
                assert_eq!(spectral.converged, local.report.converged, "{spec} eta={eta}");
                println!(
                    "{:>20} {:>5} {:>10} {:>10} {:>16}",
                    spec,
                    eta,
                    spectral.converged,
                    local.report.converged,
                    format!("{:?}", local.case)
                );
            }
        }
    }
    println!("\nall verdicts agree across both checkers");
}
