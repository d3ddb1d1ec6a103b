//! Thin wrapper around rustfft for the d in {1, 2} transforms used by the
//! noise sampler and the convolution helpers. All transforms are
//! complex-to-complex on row-major buffers; forward is unnormalized,
//! inverse carries the 1/N factor.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

#[derive(Clone)]
pub struct GridFft {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridFft {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        GridFft {
            dim: grid.dim(),
            n: grid.n(),
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn transform(&self, data: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>, normalize: bool) {
        let n = self.n;
        match self.dim {
            1 => fft.process(data),
            _ => {
                // rows
                for row in data.chunks_exact_mut(n) {
                    fft.process(row);
                }
                // columns via transpose, rows, transpose back
                transpose_square(data, n);
                for row in data.chunks_exact_mut(n) {
                    fft.process(row);
                }
                transpose_square(data, n);
            }
        }
        if normalize {
            let scale = 1.0 / data.len() as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex<f64>]) {
        self.transform(data, &self.forward.clone(), false);
    }

    pub fn inverse(&self, data: &mut [Complex<f64>]) {
        self.transform(data, &self.inverse.clone(), true);
    }

    /// Forward transform of a real field; returns a fresh complex buffer.
    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform, keeping only the real part.
    pub fn inverse_real(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

fn transpose_square(data: &mut [Complex<f64>], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Periodic convolution of two real fields on the same grid:
/// (a * b)(x) = sum_y a(y) b(x - y) dx^d.
pub fn periodic_convolution(grid: &Grid, a: &[f64], b: &[f64]) -> Vec<f64> {
    let fft = GridFft::new(grid);
    let fa = fft.forward_real(a);
    let fb = fft.forward_real(b);
    let vol = grid.cell_volume();
    let prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(x, y)| x * y * vol).collect();
    fft.inverse_real(prod)
}

/// Periodic cross-correlation (a * b~)(x) = sum_y a(y) b(y - x) dx^d
/// where b~(z) = b(-z).
pub fn periodic_correlation(grid: &Grid, a: &[f64], b: &[f64]) -> Vec<f64> {
    let fft = GridFft::new(grid);
    let fa = fft.forward_real(a);
    let fb = fft.forward_real(b);
    let vol = grid.cell_volume();
    let prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj() * vol).collect();
    fft.inverse_real(prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn roundtrip_1d_and_2d() {
        for dim in [1usize, 2] {
            let grid = Grid::new(dim, 16, 2.0).unwrap();
            let vals: Vec<f64> = (0..grid.cells()).map(|i| (i as f64 * 0.37).sin()).collect();
            let fft = GridFft::new(&grid);
            let spec = fft.forward_real(&vals);
            let back = fft.inverse_real(spec);
            for (a, b) in vals.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let grid = Grid::new(1, 16, 4.0).unwrap();
        let a: Vec<f64> = (0..16).map(|i| ((i * 7 + 3) % 5) as f64).collect();
        let b: Vec<f64> = (0..16).map(|i| ((i * 3 + 1) % 4) as f64).collect();
        let conv = periodic_convolution(&grid, &a, &b);
        for x in 0..16usize {
            let mut direct = 0.0;
            for y in 0..16usize {
                direct += a[y] * b[(x + 16 - y) % 16];
            }
            direct *= grid.cell_volume();
            assert!((conv[x] - direct).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn correlation_of_symmetric_equals_convolution() {
        let grid = Grid::new(1, 16, 4.0).unwrap();
        let a: Vec<f64> = (0..16).map(|i| (i as f64).cos()).collect();
        let corr = periodic_correlation(&grid, &a, &a);
        // (a * a~)(0) = ||a||^2
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        assert!((corr[0] - norm).abs() < 1e-10);
    }
}
