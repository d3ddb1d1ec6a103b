//! Small numeric building blocks shared across the crate: the gamma
//! function, Gauss-Legendre quadrature, a counter-based Gaussian stream,
//! and a stable content hash.

use std::f64::consts::PI;

/// Lanczos approximation of the gamma function for positive real arguments.
///
/// Accurate to ~1e-13 relative over the range used here (arguments in
/// roughly (0, 30)).
pub fn gamma(x: f64) -> f64 {
    assert!(x > 0.0, "gamma defined here for positive arguments only");
    // g = 7, 9-term coefficients
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Surface area of the unit sphere in `dim` dimensions (2 for d=1, 2π for d=2, ...).
pub fn unit_sphere_area(dim: usize) -> f64 {
    2.0 * PI.powf(dim as f64 / 2.0) / gamma(dim as f64 / 2.0)
}

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // Newton iteration from the Chebyshev-based initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate `f` over [a, b] with a fixed composite Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for &(x, w) in &rule {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    total * 0.5 * h
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic counter-based random stream.
///
/// Every draw is a pure function of the key tuple and the draw index, so
/// streams keyed by (seed, step, replica) reproduce bit-exactly regardless
/// of thread count or evaluation order.
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn from_key(parts: &[u64]) -> Self {
        let mut key = 0x243f_6a88_85a3_08d3; // pi fraction, arbitrary non-zero start
        for &p in parts {
            key = mix64(key ^ p).wrapping_add(GOLDEN);
        }
        CounterRng { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key ^ self.counter.wrapping_mul(GOLDEN).wrapping_add(1));
        self.counter += 1;
        v
    }

    /// Uniform in (0, 1].
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller (one value per call, pairs cached).
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        // Regenerating both members of the pair keeps the stream a pure
        // function of the counter; we simply discard the sine branch.
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Uniform integer in [0, n).
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next_uniform() - 0.5e-16).max(0.0)
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.next_gaussian();
        }
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-(x * x) / 2.0).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 rational
/// approximation of erf (absolute error below 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    0.5 * (1.0 + erf(t))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Solve phi(m) + m Phi(m) = a for m, i.e. E[(m + Z)_+] = a with Z standard
/// normal. Monotone in m; Newton iteration with a bracketing fallback.
pub fn censored_mean_shift(a: f64) -> f64 {
    assert!(a > 0.0);
    if a >= 8.0 {
        // phi(8) ~ 5e-15: the shift is below resolution
        return a;
    }
    // E[(m+Z)_+] ~ phi(m)/m^2 for very negative m; start from a crude
    // inversion and polish
    let mut m = if a > 0.6 {
        a - normal_pdf(a)
    } else {
        -(-2.0 * (a * (2.0 * PI).sqrt()).ln()).max(0.0).sqrt()
    };
    for _ in 0..80 {
        let f = normal_pdf(m) + m * normal_cdf(m) - a;
        let df = normal_cdf(m).max(1e-300);
        let step = f / df;
        m -= step.clamp(-2.0, 2.0);
        if step.abs() < 1e-12 * (1.0 + m.abs()) {
            break;
        }
    }
    m
}

/// FNV-1a hash of a byte string; used for stable config fingerprints.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Fixed-precision float formatting for CSV output (deterministic bytes).
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.12e}")
    }
}

/// Wilson 95% score interval for k successes out of n trials.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0);
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_known_values() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-12);
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
        // recurrence check
        for &x in &[0.25, 0.9, 1.7, 3.3] {
            assert!((gamma(x + 1.0) - x * gamma(x)).abs() / gamma(x + 1.0) < 1e-12);
        }
    }

    #[test]
    fn unit_sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-12);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-12);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn quadrature_exact_on_polynomials() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 4, 8);
        // antiderivative x^4/4 - x^2 + x
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn counter_stream_is_reproducible_and_centered() {
        let mut a = CounterRng::from_key(&[7, 3, 11]);
        let mut b = CounterRng::from_key(&[7, 3, 11]);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = CounterRng::from_key(&[7, 3, 12]);
        assert_ne!(a.next_u64(), c.next_u64());

        let mut rng = CounterRng::from_key(&[42]);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let g = rng.next_gaussian();
            sum += g;
            sq += g * g;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-9);
        assert!((normal_cdf(1.0) - 0.841_344_746).abs() < 1e-6);
        assert!((normal_cdf(-2.0) - 0.022_750_131_9).abs() < 1e-6);
    }

    #[test]
    fn censored_shift_solves_its_equation() {
        for &a in &[1e-6, 1e-3, 0.05, 0.3, 1.0, 2.5, 6.0] {
            let m = censored_mean_shift(a);
            let back = normal_pdf(m) + m * normal_cdf(m);
            assert!(
                (back - a).abs() < 1e-7 * (1.0 + a),
                "a={a}: m={m}, back={back}"
            );
        }
        // resolved regime: the shift vanishes
        assert_eq!(censored_mean_shift(9.0), 9.0);
        // Monte Carlo check of E[(m+Z)_+] = a at a front-like value
        let a = 0.02;
        let m = censored_mean_shift(a);
        let mut rng = CounterRng::from_key(&[99]);
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += (m + rng.next_gaussian()).max(0.0);
        }
        let mean = acc / n as f64;
        assert!((mean - a).abs() < 3e-4, "mean {mean} vs {a}");
    }

    #[test]
    fn wilson_examples() {
        let (lo, _) = wilson_interval(30, 30);
        assert!(lo > 0.88, "lo {lo}");
        let (lo, hi) = wilson_interval(15, 30);
        assert!((lo - 0.33).abs() < 0.01, "lo {lo}");
        assert!((hi - 0.67).abs() < 0.01, "hi {hi}");
    }
}
