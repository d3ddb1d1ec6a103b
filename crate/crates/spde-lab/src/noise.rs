//! Synthesis of the driving noise: independent across time steps, spatially
//! stationary Gaussian with covariance given by the correlation kernel,
//! realized on the periodic grid by circulant embedding.
//!
//! An increment over a step of length dt is
//!     dF = sqrt(dt) * IDFT( sqrt(s_k) * DFT(g) ),
//! where g is a field of i.i.d. standard Gaussians keyed by
//! (base_seed, step_index, replica) and s_k is the clipped circulant
//! spectrum of the wrapped kernel. The population covariance is then
//! exactly dt times the inverse transform of the clipped spectrum.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::grid::{Field, Grid};
use crate::kernels::{CorrelationKernel, KernelVariant, DEFECT_GATE};
use crate::numeric::CounterRng;

#[derive(Clone)]
pub struct NoiseSampler {
    grid: Grid,
    kernel: CorrelationKernel,
    /// Square roots of the clipped circulant spectrum, one per mode.
    amplitudes: Vec<f64>,
    /// Wrapped-kernel covariance targets c_j (pre-clipping).
    wrapped: Vec<f64>,
    defect: f64,
    base_seed: u64,
    fft: GridFft,
    cell_variance: f64,
}

impl NoiseSampler {
    pub fn build(kernel: &CorrelationKernel, grid: Grid, base_seed: u64) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::Config(format!(
                "kernel dimension {} does not match grid dimension {}",
                kernel.dim(),
                grid.dim()
            )));
        }
        let cells = grid.cells();
        let fft = GridFft::new(&grid);

        let (wrapped, spectrum, defect) = match kernel.variant() {
            KernelVariant::White => {
                // delta covariance: cell variance 1/dx^d per unit time
                let var = 1.0 / grid.cell_volume();
                let mut wrapped = vec![0.0; cells];
                wrapped[0] = var;
                (wrapped, vec![var; cells], 0.0)
            }
            KernelVariant::Constant => {
                // perfect spatial correlation: only the zero mode is active
                let mut spectrum = vec![0.0; cells];
                spectrum[0] = cells as f64;
                (vec![1.0; cells], spectrum, 0.0)
            }
            _ => {
                let mut wrapped = vec![0.0; cells];
                for (i, w) in wrapped.iter_mut().enumerate() {
                    let m = grid.min_image(i);
                    *w = if i == 0 {
                        kernel.origin_cell_average(grid.dx())?
                    } else {
                        kernel.covariance(m)?
                    };
                }
                let raw = fft.forward_real(&wrapped);
                let mut clipped = 0.0;
                let mut total = 0.0;
                let mut spectrum = Vec::with_capacity(cells);
                for c in &raw {
                    total += c.re.abs();
                    if c.re < 0.0 {
                        clipped += -c.re;
                    }
                    spectrum.push(c.re.max(0.0));
                }
                let defect = if total > 0.0 { clipped / total } else { 0.0 };
                (wrapped, spectrum, defect)
            }
        };

        if defect >= DEFECT_GATE {
            return Err(Error::EmbeddingDefect { defect });
        }

        let cell_variance = spectrum.iter().sum::<f64>() / cells as f64;
        Ok(NoiseSampler {
            grid,
            kernel: kernel.clone(),
            amplitudes: spectrum.iter().map(|s| s.sqrt()).collect(),
            wrapped,
            defect,
            base_seed,
            fft,
            cell_variance,
        })
    }

    /// Realized per-cell variance of an increment per unit time (the zero
    /// lag of the clipped-spectrum covariance).
    pub fn cell_variance(&self) -> f64 {
        self.cell_variance
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kernel(&self) -> &CorrelationKernel {
        &self.kernel
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// A sampler whose increments are identically zero (noise disabled).
    pub fn silenced(&self) -> Self {
        let mut s = self.clone();
        s.amplitudes = vec![0.0; s.amplitudes.len()];
        s.cell_variance = 0.0;
        s
    }

    /// Wrapped-kernel covariance at a lattice lag, per unit time.
    pub fn target_covariance(&self, lag: [isize; 2]) -> f64 {
        let idx = self.grid.index(lag[0], lag[1]);
        self.wrapped[idx]
    }

    /// Population covariance realized by the amplitudes, per unit time,
    /// summed directly over modes.
    pub fn population_covariance(&self, lag: [isize; 2]) -> f64 {
        let n = self.grid.n();
        let cells = self.grid.cells();
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut acc = 0.0;
        match self.grid.dim() {
            1 => {
                let l0 = lag[0].rem_euclid(n as isize) as f64;
                for (k, a) in self.amplitudes.iter().enumerate() {
                    acc += a * a * (two_pi * k as f64 * l0 / n as f64).cos();
                }
            }
            _ => {
                let l0 = lag[0].rem_euclid(n as isize) as f64;
                let l1 = lag[1].rem_euclid(n as isize) as f64;
                for k0 in 0..n {
                    for k1 in 0..n {
                        let a = self.amplitudes[k0 * n + k1];
                        let phase = two_pi * (k0 as f64 * l0 + k1 as f64 * l1) / n as f64;
                        acc += a * a * phase.cos();
                    }
                }
            }
        }
        acc / cells as f64
    }

    /// Population covariance via the inverse transform of the clipped
    /// spectrum (the linear-algebra route; must agree with
    /// `population_covariance` to machine precision).
    pub fn population_covariance_fft(&self) -> Vec<f64> {
        let spec: Vec<Complex<f64>> = self
            .amplitudes
            .iter()
            .map(|a| Complex::new(a * a, 0.0))
            .collect();
        self.fft.inverse_real(spec)
    }

    /// Centered Gaussian increment with covariance dt * f_wrapped, fully
    /// determined by (base_seed, step_index, replica).
    pub fn increment(&self, dt: f64, step_index: u64, replica: u64) -> Field {
        assert!(dt > 0.0, "dt must be positive");
        let cells = self.grid.cells();
        let mut rng = CounterRng::from_key(&[self.base_seed, step_index, replica]);
        let mut buf: Vec<Complex<f64>> = Vec::with_capacity(cells);
        for _ in 0..cells {
            buf.push(Complex::new(rng.next_gaussian(), 0.0));
        }
        self.fft.forward(&mut buf);
        let root_dt = dt.sqrt();
        for (c, a) in buf.iter_mut().zip(&self.amplitudes) {
            *c *= a * root_dt;
        }
        let values = self.fft.inverse_real(buf);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Monte Carlo covariance estimates against the wrapped-kernel target.
    /// Rows are (lag, target, estimate, stderr); the estimate is
    /// Cov(dF(anchor), dF(anchor + lag)) / dt.
    pub fn empirical_covariance(
        &self,
        nsamples: usize,
        lags: &[[isize; 2]],
    ) -> Result<Vec<CovarianceRow>> {
        self.empirical_covariance_at(nsamples, lags, self.anchor_index())
    }

    pub fn anchor_index(&self) -> usize {
        let h = self.grid.n() as isize / 2;
        match self.grid.dim() {
            1 => self.grid.index(h, 0),
            _ => self.grid.index(h, h),
        }
    }

    pub fn empirical_covariance_at(
        &self,
        nsamples: usize,
        lags: &[[isize; 2]],
        anchor: usize,
    ) -> Result<Vec<CovarianceRow>> {
        if nsamples < 100 {
            return Err(Error::Precondition(
                "need at least 100 samples for covariance estimation".into(),
            ));
        }
        let n = self.grid.n() as isize;
        let (anchor0, anchor1) = match self.grid.dim() {
            1 => (anchor as isize, 0),
            _ => ((anchor as isize) / n, (anchor as isize) % n),
        };
        let dt = 1.0;
        let mut sums = vec![0.0; lags.len()];
        let mut sq = vec![0.0; lags.len()];
        for s in 0..nsamples {
            let field = self.increment(dt, s as u64, 0);
            let base = field.values[anchor];
            for (j, lag) in lags.iter().enumerate() {
                let other = field.values[self.grid.index(anchor0 + lag[0], anchor1 + lag[1])];
                let prod = base * other / dt;
                sums[j] += prod;
                sq[j] += prod * prod;
            }
        }
        let m = nsamples as f64;
        Ok(lags
            .iter()
            .enumerate()
            .map(|(j, &lag)| {
                let mean = sums[j] / m;
                let var = (sq[j] / m - mean * mean).max(0.0);
                CovarianceRow {
                    lag,
                    target: self.target_covariance(lag),
                    estimate: mean,
                    stderr: (var / m).sqrt(),
                }
            })
            .collect())
    }

    /// Sample skewness and excess kurtosis of the increment at the anchor
    /// cell, for the Gaussianity gate.
    pub fn anchor_moments(&self, nsamples: usize) -> (f64, f64) {
        let anchor = self.anchor_index();
        let mut xs = Vec::with_capacity(nsamples);
        for s in 0..nsamples {
            xs.push(self.increment(1.0, s as u64, 1).values[anchor]);
        }
        let m = nsamples as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for x in &xs {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= m;
        m3 /= m;
        m4 /= m;
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CovarianceRow {
    pub lag: [isize; 2],
    pub target: f64,
    pub estimate: f64,
    pub stderr: f64,
}
