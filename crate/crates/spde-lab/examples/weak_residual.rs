//! Weak-form consistency of the scheme: the discrete residual of the
//! integral identity against smooth test functions, shown exact for
//! constant coefficients, refining for variable coefficients, and small at
//! the diagnostic resolution for a noisy run.
//!
//!     cargo run --release -p spde-lab --example weak_residual

use spde_lab::config::Config;
use spde_lab::noise::NoiseSampler;
use spde_lab::solver::{simulate, simulate_with_sampler, weak_form_residual, TestFunction};

fn residual_for(cfg_text: &str, noisy: bool, replica: u64) -> f64 {
    let cfg = Config::from_text(cfg_text).unwrap();
    let setup = cfg.run_setup(None, None).unwrap();
    let traj = if noisy {
        simulate(&setup, replica).unwrap()
    } else {
        let sampler = NoiseSampler::build(&setup.kernel, setup.grid, 1)
            .unwrap()
            .silenced();
        simulate_with_sampler(&setup, &sampler, replica).unwrap()
    };
    weak_form_residual(
        &traj,
        TestFunction::Gaussian {
            center: [0.0, 0.0],
            width: 2.0,
        },
        &setup.coeffs,
        &setup.diffusion,
    )
    .unwrap()
}

fn main() {
    let record = "[recording]\nstride = 1\nsnapshots = true\nincrements = true\n";

    println!("noise-free, constant coefficients (exact discrete adjoint):");
    for n in [64usize, 128] {
        let r = residual_for(
            &format!("[grid]\nn = {n}\n[time]\nt_end = 0.1\n{record}"),
            false,
            0,
        );
        println!("  n = {n:4}: residual {r:.3e}");
    }

    println!("noise-free, variable (trig) coefficients (O(dt + dx^2)):");
    for n in [64usize, 128, 256] {
        let r = residual_for(
            &format!(
                "[grid]\nn = {n}\n[coefficients]\nmodel = trig\neps = 0.25\nk = 2\n\
                 [time]\nt_end = 0.1\n{record}"
            ),
            false,
            0,
        );
        println!("  n = {n:4}: residual {r:.3e}");
    }

    println!("noisy run, lambda = 0.5, diagnostic resolution:");
    let r = residual_for(
        &format!("[grid]\nn = 1024\n[time]\nt_end = 0.1\n{record}"),
        true,
        0,
    );
    println!("  n = 1024: residual {r:.3e} (gate 1e-2)");
}
