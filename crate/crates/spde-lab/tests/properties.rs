//! Property-based invariants over randomized inputs.

use proptest::prelude::*;

use spde_lab::grid::{Field, Grid};
use spde_lab::kernels::{check_reinforced_dalang, CorrelationKernel, QuadratureConfig};
use spde_lab::lemma_lab::ExponentSet;
use spde_lab::noise::NoiseSampler;
use spde_lab::observables::{support_radius, weighted_sup};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Riesz scaling f(c r) = c^{-alpha} f(r), exactly in floating point
    /// up to one rounding of the power function.
    #[test]
    fn riesz_scaling(alpha in 0.05f64..0.95, r in 1e-3f64..1e3, c in 1e-3f64..1e3) {
        let k = CorrelationKernel::riesz(alpha, 1).unwrap();
        let lhs = k.evaluate(c * r).unwrap();
        let rhs = c.powf(-alpha) * k.evaluate(r).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
    }

    /// Lower support thresholds see more cells: eps1 <= eps2 implies
    /// radius(eps1) >= radius(eps2), with None below everything.
    #[test]
    fn support_radius_monotone(seed in 0u64..1000, e1 in -9.0f64..-1.0, de in 0.0f64..4.0) {
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let field = spde_lab::lemma_lab::random_test_field(grid, seed);
        let eps1 = 10f64.powf(e1);
        let eps2 = 10f64.powf(e1 + de);
        let r1 = support_radius(&field, eps1);
        let r2 = support_radius(&field, eps2);
        match (r1, r2) {
            (Some(a), Some(b)) => prop_assert!(a >= b),
            (None, Some(_)) => prop_assert!(false, "higher threshold kept cells"),
            _ => {}
        }
    }

    /// The weighted sup never exceeds the plain sup, with equality when the
    /// maximum sits at the origin.
    #[test]
    fn weighted_sup_bounded_by_sup(seed in 0u64..1000, a in 0.1f64..4.0) {
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let field = spde_lab::lemma_lab::random_test_field(grid, seed);
        let ws = weighted_sup(&field, a);
        prop_assert!(ws <= field.max() + 1e-15);

        let mut spiked = Field::zeros(grid);
        spiked.values[grid.n() / 2] = 2.0; // cell at the origin
        prop_assert!((weighted_sup(&spiked, a) - 2.0).abs() < 1e-12);
    }

    /// Exponent bookkeeping holds across the whole admissible box.
    #[test]
    fn exponent_identity(gamma in 0.01f64..0.99, lambda in 0.01f64..0.99, d in 1usize..4) {
        let e = ExponentSet::new(gamma, lambda, d).unwrap();
        prop_assert!(e.l > 0.0 && e.l < 1.0);
        prop_assert!(e.big_l > 1.0);
        prop_assert!(e.identity_defect() < 1e-14);
        prop_assert!((e.big_l - e.big_l_expanded()).abs() < 1e-13);
    }

    /// Riesz integrability verdict matches the closed-form exponent rule
    /// eta < 1 - alpha/2 away from the critical line.
    #[test]
    fn riesz_verdict_rule(alpha in 0.05f64..0.95, eta in 0.05f64..0.95) {
        let boundary = 1.0 - alpha / 2.0;
        prop_assume!((eta - boundary).abs() > 0.02);
        let k = CorrelationKernel::riesz(alpha, 1).unwrap();
        let rep = check_reinforced_dalang(&k, eta, &QuadratureConfig::default()).unwrap();
        prop_assert_eq!(rep.converged, eta < boundary);
    }

    /// Noise increments are a pure function of (seed, step, replica).
    #[test]
    fn increments_pure(seed in 0u64..50, step in 0u64..50, replica in 0u64..8) {
        let grid = Grid::new(1, 32, 4.0).unwrap();
        let kernel = CorrelationKernel::bump(0.5, 1.0, 1).unwrap();
        let s1 = NoiseSampler::build(&kernel, grid, seed).unwrap();
        let s2 = NoiseSampler::build(&kernel, grid, seed).unwrap();
        let a = s1.increment(0.1, step, replica);
        let b = s2.increment(0.1, step, replica);
        prop_assert_eq!(a.values, b.values);
    }
}
