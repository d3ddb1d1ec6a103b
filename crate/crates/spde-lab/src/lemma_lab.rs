//! Numerical verification of the analytic ingredients the qualitative
//! theory rests on: the exponent bookkeeping, the reverse-Jensen integral
//! inequalities over annuli and time intervals, the covariance lower bound
//! through a constructed mollifier pair, and the Lipschitz cutoff family.
//!
//! The inequalities with unspecified constants are exercised as
//! boundedness-under-refinement ensembles; the covariance lower bound has
//! no loose constant and is checked exactly (up to 1e-10 relative).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::{periodic_convolution, periodic_correlation};
use crate::grid::{Field, Grid};
use crate::kernels::CorrelationKernel;
use crate::noise::NoiseSampler;
use crate::numeric::{gamma as gamma_fn, CounterRng};
use crate::solver::DiffusionFn;

/// Derived exponents: l = (gamma lambda + d) / (gamma + d) in (0, 1) and
/// L = (gamma + 1) / (gamma l + 1) > 1, tied by L (gamma l + 1) = gamma + 1.
#[derive(Clone, Copy, Debug)]
pub struct ExponentSet {
    pub gamma: f64,
    pub lambda: f64,
    pub dim: usize,
    pub l: f64,
    pub big_l: f64,
}

impl ExponentSet {
    pub fn new(gamma: f64, lambda: f64, dim: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Precondition(format!("gamma={gamma} outside (0,1)")));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Precondition(format!("lambda={lambda} outside (0,1)")));
        }
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        let d = dim as f64;
        let l = (gamma * lambda + d) / (gamma + d);
        let big_l = (gamma + 1.0) / (gamma * l + 1.0);
        debug_assert!(l > 0.0 && l < 1.0);
        debug_assert!(big_l > 1.0);
        Ok(ExponentSet {
            gamma,
            lambda,
            dim,
            l,
            big_l,
        })
    }

    /// The same L through the expanded rational form; an independent
    /// algebraic route for cross-checking.
    pub fn big_l_expanded(&self) -> f64 {
        let (g, la, d) = (self.gamma, self.lambda, self.dim as f64);
        (g * (g + d) + g + d) / (g * (g * la + d) + g + d)
    }

    /// | L (gamma l + 1) - (gamma + 1) |, which is zero algebraically.
    pub fn identity_defect(&self) -> f64 {
        (self.big_l * (self.gamma * self.l + 1.0) - (self.gamma + 1.0)).abs()
    }
}

/// Sample with a prescribed Hölder exponent and constant: a truncated
/// random Fourier series with coefficient decay k^{-(2 gamma + 1)/2},
/// shifted nonnegative and rescaled so that both the sup and the measured
/// Hölder quotient sit at the target constant.
#[derive(Clone, Debug)]
pub struct HolderSample {
    pub gamma: f64,
    pub target_h: f64,
    /// Measured Hölder quotient on the defining grid (<= target by
    /// construction).
    pub measured_h: f64,
    modes: Vec<([f64; 2], f64, f64)>,
    offset: f64,
    scale: f64,
    /// Temporal samples vanish at zero by construction.
    temporal: bool,
}

impl HolderSample {
    fn raw_eval(&self, x: [f64; 2]) -> f64 {
        let mut acc = 0.0;
        for (k, amp, phase) in &self.modes {
            let arg = k[0] * x[0] + k[1] * x[1] + phase;
            acc += amp * arg.sin();
        }
        acc
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        if self.temporal {
            // |series| keeps the Hölder class, pins g(0) = 0, and is >= 0
            self.scale * self.raw_eval(x).abs()
        } else {
            self.scale * (self.raw_eval(x) - self.offset)
        }
    }

    pub fn eval_t(&self, t: f64) -> f64 {
        self.eval([t, 0.0])
    }

    /// Spatial sample on the annulus R + a r < |x| < R + b r, measured on a
    /// grid with `cells_across` cells across the annulus thickness.
    #[allow(clippy::too_many_arguments)]
    pub fn annulus(
        gamma: f64,
        target_h: f64,
        dim: usize,
        inner: f64,
        outer: f64,
        cells_across: usize,
        n_modes: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0 < gamma && gamma < 1.0) || !(target_h > 0.0) || inner >= outer {
            return Err(Error::Precondition("bad annulus sample parameters".into()));
        }
        let mut rng = CounterRng::from_key(&[seed, 0x5a]);
        let base_freq = std::f64::consts::PI / outer;
        let mut modes = Vec::with_capacity(n_modes);
        for k in 1..=n_modes {
            let amp = (k as f64).powf(-(2.0 * gamma + 1.0) / 2.0) * rng.next_gaussian();
            let phase = rng.next_uniform() * std::f64::consts::TAU;
            let dir = if dim == 1 {
                [1.0, 0.0]
            } else {
                let th = rng.next_uniform() * std::f64::consts::TAU;
                [th.cos(), th.sin()]
            };
            let freq = base_freq * k as f64;
            modes.push(([dir[0] * freq, dir[1] * freq], amp, phase));
        }
        let mut sample = HolderSample {
            gamma,
            target_h,
            measured_h: 0.0,
            modes,
            offset: 0.0,
            scale: 1.0,
            temporal: false,
        };

        // angular measurement spacing tied to the shortest mode wavelength
        let arc = outer / (4.0 * n_modes as f64);
        let pts = annulus_quadrature(dim, inner, outer, cells_across, arc);
        if pts.is_empty() {
            return Err(Error::Geometry("annulus resolves no grid cells".into()));
        }
        let raw: Vec<f64> = pts.iter().map(|p| sample.raw_eval(p.0)).collect();
        let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        sample.offset = min;

        let (sup, quot) = measure_holder(&pts, &raw, min, gamma, seed);
        let scale = target_h / sup.max(quot).max(1e-300);
        sample.scale = scale;
        sample.measured_h = quot * scale;
        Ok(sample)
    }

    /// Temporal sample on [0, T] with g(0) = 0.
    pub fn temporal(
        gamma: f64,
        target_h: f64,
        t_end: f64,
        points: usize,
        n_modes: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0 < gamma && gamma < 1.0) || !(target_h > 0.0) || !(t_end > 0.0) {
            return Err(Error::Precondition("bad temporal sample parameters".into()));
        }
        let mut rng = CounterRng::from_key(&[seed, 0x7a]);
        let base_freq = std::f64::consts::PI / t_end;
        let mut modes = Vec::with_capacity(n_modes);
        for k in 1..=n_modes {
            let amp = (k as f64).powf(-(2.0 * gamma + 1.0) / 2.0) * rng.next_gaussian();
            // sin with zero phase vanishes at t = 0
            modes.push(([base_freq * k as f64, 0.0], amp, 0.0));
        }
        let mut sample = HolderSample {
            gamma,
            target_h,
            measured_h: 0.0,
            modes,
            offset: 0.0,
            scale: 1.0,
            temporal: true,
        };

        let h = t_end / points as f64;
        let pts: Vec<([f64; 2], f64)> = (0..=points)
            .map(|i| ([i as f64 * h, 0.0], i as f64 * h))
            .collect();
        let raw: Vec<f64> = pts.iter().map(|p| sample.raw_eval(p.0).abs()).collect();
        let (sup, quot) = measure_holder(&pts, &raw, 0.0, gamma, seed);
        let _ = sup; // the temporal lemma constrains only the quotient
        sample.scale = target_h / quot.max(1e-300);
        sample.measured_h = quot * sample.scale;
        Ok(sample)
    }
}

/// Quadrature nodes covering the annulus inner < |x| < outer: midpoint
/// lattices on both components in d = 1; a polar product rule (midpoint in
/// r, uniform in theta, weight r dr dtheta) in d = 2. `cells_across` sets
/// the radial resolution; `arc_step` the target angular spacing.
fn annulus_quadrature(
    dim: usize,
    inner: f64,
    outer: f64,
    cells_across: usize,
    arc_step: f64,
) -> Vec<([f64; 2], f64)> {
    let h = (outer - inner) / cells_across as f64;
    let mut pts = Vec::new();
    match dim {
        1 => {
            for i in 0..cells_across {
                let r = inner + (i as f64 + 0.5) * h;
                pts.push(([r, 0.0], h));
                pts.push(([-r, 0.0], h));
            }
        }
        _ => {
            let n_theta = ((std::f64::consts::TAU * outer / arc_step).ceil() as usize).max(8);
            let dtheta = std::f64::consts::TAU / n_theta as f64;
            for i in 0..cells_across {
                let r = inner + (i as f64 + 0.5) * h;
                let w = r * h * dtheta;
                for j in 0..n_theta {
                    let th = (j as f64 + 0.5) * dtheta;
                    pts.push(([r * th.cos(), r * th.sin()], w));
                }
            }
        }
    }
    pts
}

/// (sup of offset-adjusted values, max Hölder quotient) over neighbor pairs
/// plus a randomized pair subsample.
fn measure_holder(
    pts: &[([f64; 2], f64)],
    raw: &[f64],
    offset: f64,
    gamma: f64,
    seed: u64,
) -> (f64, f64) {
    let sup = raw
        .iter()
        .map(|v| v - offset)
        .fold(0.0_f64, f64::max);
    let mut quot = 0.0_f64;
    let mut consider = |i: usize, j: usize| {
        let dx = pts[i].0[0] - pts[j].0[0];
        let dy = pts[i].0[1] - pts[j].0[1];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist > 0.0 {
            quot = quot.max((raw[i] - raw[j]).abs() / dist.powf(gamma));
        }
    };
    for i in 1..pts.len() {
        consider(i - 1, i);
    }
    let mut rng = CounterRng::from_key(&[seed, 0x9a]);
    for _ in 0..50_000.min(pts.len() * pts.len()) {
        consider(rng.next_index(pts.len()), rng.next_index(pts.len()));
    }
    (sup, quot)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JensenReport {
    pub lhs: f64,
    pub rhs_integral: f64,
    pub ratio: f64,
}

/// Largest admissible annulus scale for the spatial reverse-Jensen
/// inequality: r must stay below R/b and below
/// (1/(b-a)) [2^{-(g+1)/g} H^{-d/g} R^{d-1} d pi^{d/2} / Gamma(d/2+1)]^{1/(g+d-1)}.
pub fn jensen_x_max_r(gamma: f64, h_const: f64, r_big: f64, a: f64, b: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let ball = d * std::f64::consts::PI.powf(d / 2.0) / gamma_fn(d / 2.0 + 1.0);
    let bracket = 2.0_f64.powf(-(gamma + 1.0) / gamma)
        * h_const.powf(-d / gamma)
        * r_big.powf(d - 1.0)
        * ball;
    (r_big / b).min(bracket.powf(1.0 / (gamma + d - 1.0)) / (b - a))
}

/// Spatial reverse-Jensen check on the annulus R + a r < |x| < R + b r:
///   lhs = (int g)^{(g l + d)/(g + d)},
///   rhs = R^{d(d-1)/(g+d)} (r(b-a))^{-d(g+d-1)/(g+d)} int g^lambda,
/// and the inequality asserts lhs <= N(gamma, lambda, H) rhs. In d = 1 the
/// annulus has two components and both are integrated.
#[allow(clippy::too_many_arguments)]
pub fn reverse_jensen_x(
    g: &dyn Fn([f64; 2]) -> f64,
    r_big: f64,
    r: f64,
    a: f64,
    b: f64,
    gamma: f64,
    lambda: f64,
    h_const: f64,
    dim: usize,
    cells_across: usize,
    arc_step: f64,
) -> Result<JensenReport> {
    if !(r_big > 1.0) {
        return Err(Error::Precondition("R must exceed 1".into()));
    }
    if !(h_const > 1.0) {
        return Err(Error::Precondition("H must exceed 1".into()));
    }
    if !(0.0 <= a && a < b) {
        return Err(Error::Precondition("need 0 <= a < b".into()));
    }
    let r_max = jensen_x_max_r(gamma, h_const, r_big, a, b, dim);
    if !(r > 0.0 && r < r_max) {
        return Err(Error::Precondition(format!(
            "annulus scale r={r} outside the admissible range (0, {r_max:.6e})"
        )));
    }

    let d = dim as f64;
    let inner = r_big + a * r;
    let outer = r_big + b * r;
    let arc = if arc_step > 0.0 { arc_step } else { (outer - inner).max(1e-12) };
    let pts = annulus_quadrature(dim, inner, outer, cells_across, arc);
    if pts.is_empty() {
        return Err(Error::Geometry("annulus resolves no grid cells".into()));
    }
    let mut int_g = 0.0;
    let mut int_g_lambda = 0.0;
    for (x, w) in &pts {
        let v = g(*x).max(0.0);
        int_g += v * w;
        int_g_lambda += v.powf(lambda) * w;
    }

    let lhs = int_g.powf((gamma * lambda + d) / (gamma + d));
    let rhs = r_big.powf(d * (d - 1.0) / (gamma + d))
        * (r * (b - a)).powf(-d * (gamma + d - 1.0) / (gamma + d))
        * int_g_lambda;
    Ok(JensenReport {
        lhs,
        rhs_integral: rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// Temporal reverse-Jensen check on [0, T] for g with g(0) = 0:
///   lhs = (int_0^T g)^{(g l + 1)/(g + 1)}, rhs = H^{1/gamma} int_0^T g^lambda.
pub fn reverse_jensen_t(
    g: &dyn Fn(f64) -> f64,
    t_end: f64,
    gamma: f64,
    lambda: f64,
    h_const: f64,
    points: usize,
) -> Result<JensenReport> {
    if !(h_const > 1.0) {
        return Err(Error::Precondition("H must exceed 1".into()));
    }
    let g0 = g(0.0);
    if g0.abs() > 1e-9 * h_const * t_end.powf(gamma) {
        return Err(Error::Precondition(format!("g(0) = {g0} must vanish")));
    }
    let h = t_end / points as f64;
    let mut int_g = 0.0;
    let mut int_g_lambda = 0.0;
    for i in 0..points {
        let v = g((i as f64 + 0.5) * h).max(0.0);
        int_g += v * h;
        int_g_lambda += v.powf(lambda) * h;
    }
    let lhs = int_g.powf((gamma * lambda + 1.0) / (gamma + 1.0));
    let rhs = h_const.powf(1.0 / gamma) * int_g_lambda;
    Ok(JensenReport {
        lhs,
        rhs_integral: rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// The comparison mollifier pair behind the covariance lower bound.
#[derive(Clone, Debug)]
pub struct MollifierReport {
    /// The constructed test function phi (smooth, nonnegative, supported in
    /// |x| <= r/2 so its self-correlation stays inside |x| <= r).
    pub phi: Field,
    /// Value of the doubly mollified kernel at the origin.
    pub f_eps_origin: f64,
    /// inf of the doubly mollified kernel over |x| <= r.
    pub c: f64,
    /// Radius over which the inf is taken.
    pub r: f64,
    /// Discrete squared L2 norm of phi (held at c/4 <= c/2).
    pub norm_sq: f64,
}

/// The grid representation of the kernel used by the covariance pairing:
/// the inverse transform of the clipped circulant spectrum (the white
/// kernel pairs as the discrete point mass delta/dx^d automatically).
pub fn grid_kernel(kernel: &CorrelationKernel, grid: Grid) -> Result<Vec<f64>> {
    let sampler = NoiseSampler::build(kernel, grid, 0)?;
    Ok(sampler.population_covariance_fft())
}

/// The triangular-product mollifier, peak-normalized per-axis width 2 eps,
/// with its discrete mass normalized to exactly 1 so convolution with it
/// never inflates spectra.
fn product_mollifier(grid: Grid, eps: f64) -> Field {
    let mut psi = Field::from_fn(grid, move |x| {
        let mut v = 1.0;
        for &t in x.iter().take(grid.dim()) {
            v *= (1.0 - (t / (2.0 * eps)).abs()).max(0.0);
        }
        v
    });
    let mass: f64 = psi.values.iter().sum::<f64>() * grid.cell_volume();
    for v in psi.values.iter_mut() {
        *v /= mass;
    }
    psi
}

/// Build the nonnegative test function phi for the covariance lower bound:
/// mollify the grid kernel twice with the triangular-product kernel at
/// scale epsilon, locate a radius r where the mollified kernel stays above
/// half its origin value, and return a smooth bump supported in |x| <= r/2
/// whose squared L2 norm is pinned at c/4.
pub fn build_phi(kernel: &CorrelationKernel, epsilon: f64, grid: Grid) -> Result<MollifierReport> {
    if !(epsilon > grid.dx()) {
        return Err(Error::Construction(format!(
            "mollifier scale epsilon={epsilon} must exceed the grid spacing {}",
            grid.dx()
        )));
    }
    if 4.0 * epsilon >= grid.half_extent() {
        return Err(Error::Construction(
            "mollifier support does not fit in the grid".into(),
        ));
    }
    let f_c = grid_kernel(kernel, grid)?;
    let psi = product_mollifier(grid, epsilon);
    let once = periodic_convolution(&grid, &psi.values, &psi.values);
    let f_eps = periodic_convolution(&grid, &once, &f_c);
    let f_eps_origin = f_eps[0];
    if !(f_eps_origin > 0.0) {
        return Err(Error::Construction(format!(
            "mollified kernel not positive at the origin ({f_eps_origin:.3e}); \
             epsilon too small for this kernel"
        )));
    }

    // largest dyadic radius on which f_eps keeps half its origin value
    let mut radius = grid.half_extent() / 2.0;
    let floor = 2.0 * grid.dx();
    let mut chosen = None;
    while radius >= floor {
        let inf = (0..grid.cells())
            .filter(|&i| {
                let m = grid.min_image(i);
                let rr = match grid.dim() {
                    1 => m[0].abs(),
                    _ => (m[0] * m[0] + m[1] * m[1]).sqrt(),
                };
                rr <= radius
            })
            .map(|i| f_eps[i])
            .fold(f64::INFINITY, f64::min);
        if inf >= 0.5 * f_eps_origin {
            chosen = Some((radius, inf));
            break;
        }
        radius /= 2.0;
    }
    let (r, c) = chosen.ok_or_else(|| {
        Error::Construction("no radius with positive mollified infimum".into())
    })?;

    // smooth bump on |x| <= r/2 scaled to ||phi||^2 = c/4
    let half = r / 2.0;
    let mut phi = Field::from_fn(grid, move |x| {
        let rr = match grid.dim() {
            1 => x[0].abs(),
            _ => (x[0] * x[0] + x[1] * x[1]).sqrt(),
        };
        if rr < half {
            let t = (std::f64::consts::PI * rr / (2.0 * half)).cos();
            t * t
        } else {
            0.0
        }
    });
    let norm: f64 = phi.values.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
    if norm == 0.0 {
        return Err(Error::Construction("phi support resolves no cells".into()));
    }
    let target = c / 4.0;
    let s = (target / norm).sqrt();
    for v in phi.values.iter_mut() {
        *v *= s;
    }
    Ok(MollifierReport {
        phi,
        f_eps_origin,
        c,
        r,
        norm_sq: target,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Exact covariance lower bound check:
///   lhs = sum (g * g~)(x) f(x) dx^d  >=  rhs = sum |(g * phi)(x)|^2 dx^d.
/// Supports of g * g~ and g * phi must not wrap around the box.
pub fn covariance_lower_bound_check(
    g: &Field,
    phi: &Field,
    kernel: &CorrelationKernel,
) -> Result<BoundReport> {
    let grid = g.grid;
    if phi.grid != grid {
        return Err(Error::Geometry("phi lives on a different grid".into()));
    }
    // max-norm support radius in box coordinates around the origin
    let support_radius = |f: &Field| -> f64 {
        let mut r = 0.0_f64;
        for (i, v) in f.values.iter().enumerate() {
            if *v != 0.0 {
                let c = grid.coord(i);
                let rr = match grid.dim() {
                    1 => c[0].abs(),
                    _ => c[0].abs().max(c[1].abs()),
                };
                r = r.max(rr);
            }
        }
        r
    };
    let rg = support_radius(g);
    let rp = support_radius(phi);
    let l = grid.half_extent();
    if 2.0 * rg >= l - grid.dx() || rg + rp >= l - grid.dx() {
        return Err(Error::Geometry(format!(
            "supports wrap: g radius {rg}, phi radius {rp}, half extent {l}"
        )));
    }

    let f_c = grid_kernel(kernel, grid)?;
    let vol = grid.cell_volume();
    let gg = periodic_correlation(&grid, &g.values, &g.values);
    let lhs: f64 = gg.iter().zip(&f_c).map(|(a, b)| a * b).sum::<f64>() * vol;
    let gphi = periodic_convolution(&grid, &g.values, &phi.values);
    let rhs: f64 = gphi.iter().map(|v| v * v).sum::<f64>() * vol;
    Ok(BoundReport {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-10 * lhs.abs(),
    })
}

/// Random nonnegative compactly supported field: a few random tent bumps
/// confined to |x| <= L/4 so that self-correlations stay wrap-free.
pub fn random_test_field(grid: Grid, seed: u64) -> Field {
    let mut rng = CounterRng::from_key(&[seed, 0xf1e1d]);
    let l = grid.half_extent();
    let bumps: usize = 2 + rng.next_index(3);
    let mut params = Vec::with_capacity(bumps);
    for _ in 0..bumps {
        let cx = rng.next_range(-l / 4.0, l / 4.0);
        let cy = if grid.dim() == 2 {
            rng.next_range(-l / 4.0, l / 4.0)
        } else {
            0.0
        };
        let w = rng.next_range(2.0 * grid.dx(), l / 8.0);
        let a = rng.next_range(0.1, 1.0);
        params.push((cx, cy, w, a));
    }
    Field::from_fn(grid, move |x| {
        let mut acc = 0.0;
        for (cx, cy, w, a) in &params {
            let dx = x[0] - cx;
            let dy = x[1] - cy;
            let r = (dx * dx + dy * dy).sqrt();
            acc += a * (1.0 - r / w).max(0.0);
        }
        acc
    })
}

/// One row of the cutoff-family report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffRow {
    pub n: u32,
    pub at_zero: f64,
    pub lipschitz: f64,
    pub sup_deviation: f64,
    /// max over the scan of h_n(u) / (1 + u); bounded uniformly in n.
    pub linear_bound: f64,
}

/// Measure the cutoff family h_n over the given levels: exact vanishing at
/// zero, Lipschitz constants (finite, growing like n^{1-lambda}), uniform
/// convergence to h on [0, M], and the n-independent linear bound.
pub fn cutoff_report(lambda: f64, k: f64, levels: &[u32], m_cap: f64) -> Result<Vec<CutoffRow>> {
    let h = DiffusionFn::new(lambda, k)?;
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let hn = h.with_cutoff(n)?;
        let at_zero = hn.eval(0.0);

        // dense finite differences, concentrated near the 1/n scale where
        // the slope peaks
        let nf = n as f64;
        let mut lipschitz = 0.0_f64;
        let fine = 1.0 / (50.0 * nf);
        let mut u = 0.0;
        while u < 4.0 / nf {
            let d = (hn.eval(u + fine) - hn.eval(u)) / fine;
            lipschitz = lipschitz.max(d.abs());
            u += fine;
        }
        let mut u = 4.0 / nf;
        while u < 2.0 * nf {
            let step = (u * 0.05).max(fine);
            let d = (hn.eval(u + step) - hn.eval(u)) / step;
            lipschitz = lipschitz.max(d.abs());
            u += step;
        }

        let mut sup_dev = 0.0_f64;
        let mut linear_bound = 0.0_f64;
        let scan = 2000;
        for i in 0..=scan {
            let u = m_cap * i as f64 / scan as f64;
            let v = hn.eval(u);
            sup_dev = sup_dev.max((v - h.eval(u)).abs());
            linear_bound = linear_bound.max(v / (1.0 + u));
        }
        rows.push(CutoffRow {
            n,
            at_zero,
            lipschitz,
            sup_deviation: sup_dev,
            linear_bound,
        });
    }
    Ok(rows)
}

/// JSON record emitted by the lab harness.
#[derive(Clone, Debug, Serialize)]
pub struct LabRecord {
    pub lemma: String,
    pub params: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
    pub resolution: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::parse_kernel;

    #[test]
    fn exponent_examples() {
        let e = ExponentSet::new(0.2, 0.5, 1).unwrap();
        assert!((e.l - 1.1 / 1.2).abs() < 1e-12);
        assert!((e.big_l - 1.2 / (0.2 * (1.1 / 1.2) + 1.0)).abs() < 1e-12);
        assert!((e.big_l - 1.01408).abs() < 1e-4);
        assert!(e.identity_defect() < 1e-15);
        assert!((e.big_l - e.big_l_expanded()).abs() < 1e-14);

        let e = ExponentSet::new(0.5, 0.5, 2).unwrap();
        assert!((e.l - 0.9).abs() < 1e-15);

        // lambda -> 1 pushes both exponents to 1
        let e = ExponentSet::new(0.3, 1.0 - 1e-9, 1).unwrap();
        assert!((e.l - 1.0).abs() < 1e-9);
        assert!((e.big_l - 1.0).abs() < 1e-9);

        assert!(ExponentSet::new(0.0, 0.5, 1).is_err());
        assert!(ExponentSet::new(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn exponent_identity_over_lattice() {
        for gi in 1..10 {
            for li in 1..10 {
                for d in 1..=3 {
                    let e = ExponentSet::new(gi as f64 / 10.0, li as f64 / 10.0, d).unwrap();
                    assert!(e.l > 0.0 && e.l < 1.0);
                    assert!(e.big_l > 1.0);
                    assert!(e.identity_defect() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn holder_sample_respects_targets() {
        let s = HolderSample::annulus(0.5, 2.0, 1, 2.0, 2.5, 200, 30, 7).unwrap();
        assert!(s.measured_h <= 1.05 * s.target_h);
        let pts = annulus_quadrature(1, 2.0, 2.5, 200, 0.0);
        for p in &pts {
            assert!(s.eval(p.0) >= 0.0);
            assert!(s.eval(p.0) <= s.target_h * 1.0001);
        }

        let t = HolderSample::temporal(0.4, 3.0, 1.0, 400, 30, 9).unwrap();
        assert_eq!(t.eval_t(0.0), 0.0);
        assert!(t.measured_h <= 1.05 * t.target_h);
        assert!((0..=400).all(|i| t.eval_t(i as f64 / 400.0) >= 0.0));
    }

    #[test]
    fn jensen_x_zero_and_constant() {
        let zero = |_: [f64; 2]| 0.0;
        let rep =
            reverse_jensen_x(&zero, 2.0, 0.003, 0.0, 1.0, 0.5, 0.5, 2.0, 1, 200, 0.0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.ratio, 0.0);

        // constant g = 1 on the two-component annulus in d = 1:
        // int g = 2 r (b - a), int g^lambda = 2 r (b - a)
        let (r_big, r, a, b, gamma, lambda) = (2.0, 0.003, 0.0, 1.0, 0.5, 0.5);
        let one = |_: [f64; 2]| 1.0;
        let rep = reverse_jensen_x(&one, r_big, r, a, b, gamma, lambda, 2.0, 1, 400, 0.0).unwrap();
        let measure = 2.0 * r * (b - a);
        let lhs = measure.powf((gamma * lambda + 1.0) / (gamma + 1.0));
        let rhs = (r * (b - a)).powf(-(gamma) / (gamma + 1.0)) * measure;
        assert!((rep.lhs - lhs).abs() < 1e-10 * lhs, "{} vs {lhs}", rep.lhs);
        assert!(
            (rep.rhs_integral - rhs).abs() < 1e-10 * rhs,
            "{} vs {rhs}",
            rep.rhs_integral
        );
    }

    #[test]
    fn jensen_x_rejects_inadmissible_r() {
        let one = |_: [f64; 2]| 1.0;
        let r_max = jensen_x_max_r(0.5, 2.0, 2.0, 0.0, 1.0, 1);
        let res = reverse_jensen_x(&one, 2.0, r_max * 1.01, 0.0, 1.0, 0.5, 0.5, 2.0, 1, 100, 0.0);
        assert!(matches!(res, Err(Error::Precondition(_))));
        assert!(reverse_jensen_x(&one, 0.9, 0.01, 0.0, 1.0, 0.5, 0.5, 2.0, 1, 100, 0.0).is_err());
    }

    #[test]
    fn jensen_t_extremal_profile_power_matching() {
        // g = H t^gamma: the T powers of both sides match exactly, so the
        // ratio is T-independent; verify numerically at T and 4T
        let (gamma, lambda, h_const) = (0.4, 0.6, 2.5);
        let g = move |t: f64| h_const * t.powf(gamma);
        let r1 = reverse_jensen_t(&g, 1.0, gamma, lambda, h_const, 40_000).unwrap();
        let r4 = reverse_jensen_t(&g, 4.0, gamma, lambda, h_const, 40_000).unwrap();
        assert!(
            (r1.ratio - r4.ratio).abs() < 1e-3 * r1.ratio,
            "{} vs {}",
            r1.ratio,
            r4.ratio
        );

        // closed forms for both sides at T = 1
        let lhs = (h_const / (gamma + 1.0)).powf((gamma * lambda + 1.0) / (gamma + 1.0));
        let rhs = h_const.powf(1.0 / gamma) * h_const.powf(lambda) / (gamma * lambda + 1.0);
        assert!((r1.lhs - lhs).abs() < 1e-3 * lhs);
        assert!((r1.rhs_integral - rhs).abs() < 1e-3 * rhs);

        let zero = |_: f64| 0.0;
        let rep = reverse_jensen_t(&zero, 1.0, 0.5, 0.5, 2.0, 100).unwrap();
        assert_eq!(rep.ratio, 0.0);

        // g(0) != 0 is rejected
        let bad = |_: f64| 1.0;
        assert!(reverse_jensen_t(&bad, 1.0, 0.5, 0.5, 2.0, 100).is_err());
    }

    #[test]
    fn build_phi_constant_kernel() {
        let grid = Grid::new(1, 256, 8.0).unwrap();
        let kernel = CorrelationKernel::constant(1).unwrap();
        let rep = build_phi(&kernel, 0.25, grid).unwrap();
        // unit-mass mollifiers leave the constant kernel untouched
        assert!((rep.f_eps_origin - 1.0).abs() < 1e-10);
        assert!((rep.c - 1.0).abs() < 1e-10);
        assert!(rep.norm_sq <= rep.c / 2.0 + 1e-12);
        let measured: f64 =
            rep.phi.values.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        assert!((measured - rep.norm_sq).abs() < 1e-12);
    }

    #[test]
    fn build_phi_bump_kernel_matches_direct_convolution() {
        let grid = Grid::new(1, 512, 8.0).unwrap();
        let kernel = CorrelationKernel::bump(0.5, 1.0, 1).unwrap();
        let eps = 0.25;
        let rep = build_phi(&kernel, eps, grid).unwrap();

        // direct O(n^2) double-convolution oracle at the origin
        let psi = product_mollifier(grid, eps);
        let f_c = grid_kernel(&kernel, grid).unwrap();
        let n = grid.cells();
        let vol = grid.cell_volume();
        let mut direct = 0.0;
        for y in 0..n {
            let mut inner = 0.0;
            for z in 0..n {
                inner += psi.values[z] * f_c[(y + n - z) % n];
            }
            direct += psi.values[y] * inner * vol * vol;
        }
        // direct = (psi * psi * f)(0) since psi is even
        assert!(
            (rep.f_eps_origin - direct).abs() < 1e-8 * direct.abs(),
            "{} vs {direct}",
            rep.f_eps_origin
        );
    }

    #[test]
    fn build_phi_riesz_2d() {
        let grid = Grid::new(2, 64, 4.0).unwrap();
        let kernel = CorrelationKernel::riesz(1.0, 2).unwrap();
        let rep = build_phi(&kernel, 0.2, grid).unwrap();
        assert!(rep.f_eps_origin.is_finite() && rep.f_eps_origin > 0.0);
        assert!(rep.c > 0.0);
    }

    #[test]
    fn covariance_bound_zero_and_single_cell() {
        let grid = Grid::new(1, 256, 8.0).unwrap();
        let kernel = CorrelationKernel::constant(1).unwrap();
        let rep = build_phi(&kernel, 0.25, grid).unwrap();

        let zero = Field::zeros(grid);
        let b = covariance_lower_bound_check(&zero, &rep.phi, &kernel).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert_eq!(b.rhs, 0.0);
        assert!(b.holds);

        // single-cell indicator: lhs = mass^2, rhs = mass^2 ||phi||^2
        let mut g = Field::zeros(grid);
        g.values[grid.cells() / 2 + 3] = 2.0;
        let mass = 2.0 * grid.cell_volume();
        let b = covariance_lower_bound_check(&g, &rep.phi, &kernel).unwrap();
        assert!((b.lhs - mass * mass).abs() < 1e-12 * mass * mass);
        let expect_rhs = mass * mass * rep.norm_sq;
        assert!((b.rhs - expect_rhs).abs() < 1e-10 * expect_rhs);
        assert!(b.holds);
        assert!(b.rhs <= b.lhs / 2.0);
    }

    #[test]
    fn covariance_bound_random_ensemble_smoke() {
        for spec in ["white", "constant", "riesz:alpha=0.5", "ou:beta=1", "bump:r=0.5,amp=1"] {
            let grid = Grid::new(1, 256, 8.0).unwrap();
            let kernel = parse_kernel(spec, 1).unwrap();
            let rep = build_phi(&kernel, 0.25, grid).unwrap();
            for seed in 0..10 {
                let g = random_test_field(grid, seed);
                let b = covariance_lower_bound_check(&g, &rep.phi, &kernel).unwrap();
                assert!(b.holds, "{spec} seed {seed}: lhs {} rhs {}", b.lhs, b.rhs);
            }
        }
    }

    #[test]
    fn covariance_bound_negative_control() {
        // an oversized phi (norm^2 = 2 > c/2) must break the bound for the
        // constant kernel, where lhs = mass^2 and rhs = mass^2 ||phi||^2
        let grid = Grid::new(1, 256, 8.0).unwrap();
        let kernel = CorrelationKernel::constant(1).unwrap();
        let rep = build_phi(&kernel, 0.25, grid).unwrap();
        let mut bad = rep.phi.clone();
        let s = (2.0 / rep.norm_sq).sqrt();
        for v in bad.values.iter_mut() {
            *v *= s;
        }
        let mut violations = 0;
        for seed in 0..10 {
            let g = random_test_field(grid, seed);
            let b = covariance_lower_bound_check(&g, &bad, &kernel).unwrap();
            if !b.holds {
                violations += 1;
            }
        }
        assert!(violations > 0, "negative control has no power");
    }

    #[test]
    fn covariance_bound_wrap_guard() {
        let grid = Grid::new(1, 64, 2.0).unwrap();
        let kernel = CorrelationKernel::constant(1).unwrap();
        let wide = Field::from_fn(grid, |_| 1.0);
        let phi = Field::zeros(grid);
        assert!(matches!(
            covariance_lower_bound_check(&wide, &phi, &kernel),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn cutoff_report_trends() {
        let rows = cutoff_report(0.5, 1.0, &[10, 100, 1000], 10.0).unwrap();
        for row in &rows {
            assert_eq!(row.at_zero, 0.0);
            assert!(row.lipschitz.is_finite());
            assert!(row.linear_bound <= 1.0 + 1e-9);
        }
        assert!(rows[0].sup_deviation > rows[1].sup_deviation);
        assert!(rows[1].sup_deviation > rows[2].sup_deviation);
        // Lipschitz constants grow like n^{1 - lambda}
        for w in rows.windows(2) {
            let measured = w[1].lipschitz / w[0].lipschitz;
            let predicted = (w[1].n as f64 / w[0].n as f64).powf(1.0 - 0.5);
            assert!(
                measured / predicted < 4.0 && predicted / measured < 4.0,
                "growth {measured} vs {predicted}"
            );
        }
    }
}
