//! Periodic grids on the box [-L, L)^d for d in {1, 2}, and scalar fields
//! living on them. Snapshots serialize to a small little-endian binary
//! format (magic, dim, n, dx, time, values).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"SPDEFLD1";

/// Uniform periodic grid: `n` points per axis (power of two), spacing
/// `dx = 2L/n`, cell centers at `-L + i*dx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_extent: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_extent: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("grid dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_extent > 0.0) {
            return Err(Error::Config("grid half-extent must be positive".into()));
        }
        Ok(Grid { dim, n, half_extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    /// Cell volume dx^d.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Coordinate of cell `idx` (row-major for d=2), components in [-L, L).
    #[inline]
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let dx = self.dx();
        match self.dim {
            1 => [-self.half_extent + idx as f64 * dx, 0.0],
            _ => {
                let i0 = idx / self.n;
                let i1 = idx % self.n;
                [
                    -self.half_extent + i0 as f64 * dx,
                    -self.half_extent + i1 as f64 * dx,
                ]
            }
        }
    }

    /// Euclidean norm of the cell coordinate (no wrapping).
    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let c = self.coord(idx);
        match self.dim {
            1 => c[0].abs(),
            _ => (c[0] * c[0] + c[1] * c[1]).sqrt(),
        }
    }

    /// Minimum-image displacement for a lattice offset of `k` cells along one axis.
    #[inline]
    pub fn min_image_offset(&self, k: usize) -> f64 {
        let k = k % self.n;
        let half = self.n / 2;
        let signed = if k > half { k as f64 - self.n as f64 } else { k as f64 };
        signed * self.dx()
    }

    /// Minimum-image coordinates of cell `idx` interpreted as a displacement
    /// from the origin cell.
    #[inline]
    pub fn min_image(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.min_image_offset(idx), 0.0],
            _ => [
                self.min_image_offset(idx / self.n),
                self.min_image_offset(idx % self.n),
            ],
        }
    }

    /// Flat index from per-axis indices (wrapping).
    #[inline]
    pub fn index(&self, i0: isize, i1: isize) -> usize {
        let n = self.n as isize;
        let w0 = i0.rem_euclid(n) as usize;
        match self.dim {
            1 => w0,
            _ => w0 * self.n + i1.rem_euclid(n) as usize,
        }
    }
}

/// Scalar field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.cells()],
        }
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.cells()).map(|i| f(grid.coord(i))).collect();
        Field { grid, values }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Total mass sum(u) * dx^d.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn write_snapshot<W: Write>(&self, mut w: W, time: f64) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        w.write_all(&(self.grid.n as u32).to_le_bytes())?;
        w.write_all(&self.grid.dx().to_le_bytes())?;
        w.write_all(&time.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn write_snapshot_file<P: AsRef<Path>>(&self, path: P, time: f64) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_snapshot(std::io::BufWriter::new(f), time)
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<(Self, f64)> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Config("bad snapshot magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let dx = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        let grid = Grid::new(dim, n, dx * n as f64 / 2.0)?;
        let mut values = Vec::with_capacity(grid.cells());
        for _ in 0..grid.cells() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Ok((Field { grid, values }, time))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 48, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(2, 64, 0.0).is_err());
    }

    #[test]
    fn coords_and_min_image() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.coord(0)[0], -4.0);
        assert_eq!(g.coord(7)[0], 3.0);
        assert_eq!(g.min_image_offset(1), 1.0);
        assert_eq!(g.min_image_offset(7), -1.0);
        assert_eq!(g.min_image_offset(4), 4.0);

        let g2 = Grid::new(2, 8, 4.0).unwrap();
        assert_eq!(g2.cells(), 64);
        let c = g2.coord(8 + 2);
        assert_eq!(c, [-3.0, -2.0]);
    }

    #[test]
    fn snapshot_roundtrip() {
        let g = Grid::new(2, 8, 2.0).unwrap();
        let f = Field::from_fn(g, |x| x[0] + 2.0 * x[1]);
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf, 1.25).unwrap();
        let (back, t) = Field::read_snapshot(&buf[..]).unwrap();
        assert_eq!(t, 1.25);
        assert_eq!(back, f);
    }
}
