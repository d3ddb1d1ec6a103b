//! Observables measured on solution fields: the epsilon-support radius,
//! annulus-averaged surface integrals, hyperbolic-cosine weighted sup norms,
//! and a budgeted Hölder-seminorm estimator on recorded trajectories.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::numeric::{fmt_f64, CounterRng};

/// The decay weight 1 / cosh(a |x|).
#[inline]
pub fn cosh_weight(a: f64, radius: f64) -> f64 {
    1.0 / (a * radius).cosh()
}

/// Largest cell-center radius where the field exceeds `eps`; `None` when the
/// field is everywhere <= eps.
pub fn support_radius(field: &Field, eps: f64) -> Option<f64> {
    assert!(eps > 0.0, "support threshold must be positive");
    let mut best: Option<f64> = None;
    for (i, &v) in field.values.iter().enumerate() {
        if v > eps {
            let r = field.grid.radius(i);
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best
}

/// max over cells of u(x) / cosh(a |x|).
pub fn weighted_sup(field: &Field, a: f64) -> f64 {
    assert!(a > 0.0, "weight parameter must be positive");
    let mut best = 0.0_f64;
    for (i, &v) in field.values.iter().enumerate() {
        let w = v * cosh_weight(a, field.grid.radius(i));
        best = best.max(w);
    }
    best
}

/// Annulus-average approximation of the surface integral over the sphere of
/// radius R: cells with R - w/2 <= |x| < R + w/2 contribute u * dx^d / w.
#[derive(Clone, Debug)]
pub struct ShellGeometry {
    grid: Grid,
    radius: f64,
    width: f64,
    cells: Vec<usize>,
}

impl ShellGeometry {
    /// Default annulus width max(3 dx, R / 50).
    pub fn new(grid: Grid, radius: f64) -> Result<Self> {
        let w = (3.0 * grid.dx()).max(radius / 50.0);
        Self::with_width(grid, radius, w)
    }

    pub fn with_width(grid: Grid, radius: f64, width: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Geometry("shell radius must be positive".into()));
        }
        let min_width = grid.dx() * (grid.dim() as f64).sqrt();
        if width < min_width {
            return Err(Error::Geometry(format!(
                "shell width {width} below resolvable {min_width}"
            )));
        }
        let lo = radius - width / 2.0;
        let hi = radius + width / 2.0;
        let cells: Vec<usize> = (0..grid.cells())
            .filter(|&i| {
                let r = grid.radius(i);
                r >= lo && r < hi
            })
            .collect();
        if cells.is_empty() {
            return Err(Error::Geometry(format!(
                "empty shell at R={radius}, width={width}"
            )));
        }
        Ok(ShellGeometry {
            grid,
            radius,
            width,
            cells,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn integrate(&self, field: &Field) -> Result<f64> {
        if field.grid != self.grid {
            return Err(Error::Geometry("field grid does not match shell".into()));
        }
        let scale = self.grid.cell_volume() / self.width;
        Ok(self.cells.iter().map(|&i| field.values[i]).sum::<f64>() * scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMetadata {
    pub config_hash: u64,
    pub replica: u64,
    pub base_seed: u64,
    pub lambda: f64,
}

/// Time series of observables recorded over one solver run, plus optional
/// full-field snapshots and the noise increments that drove the run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Absolute support thresholds, one series per threshold.
    pub eps_list: Vec<f64>,
    /// support_radius[eps_idx][time_idx]
    pub support_radius: Vec<Vec<Option<f64>>>,
    pub shell_radii: Vec<f64>,
    /// shell_integrals[shell_idx][time_idx]
    pub shell_integrals: Vec<Vec<f64>>,
    pub weight_params: Vec<f64>,
    /// weighted_sup[weight_idx][time_idx]
    pub weighted_sup: Vec<Vec<f64>>,
    pub snapshots: Option<Vec<(f64, Field)>>,
    pub increments: Option<Vec<Field>>,
    pub clipped_mass: f64,
    pub final_field: Field,
    pub meta: RunMetadata,
}

impl Trajectory {
    /// True iff the recorded support radius for threshold `eps` stays within
    /// `r_max` (a vanished field counts as bounded).
    pub fn support_bounded(&self, eps: f64, r_max: f64) -> Result<bool> {
        let idx = self
            .eps_list
            .iter()
            .position(|e| (e - eps).abs() <= 1e-12 * eps.abs().max(1e-300))
            .ok_or_else(|| {
                Error::UnusableTrajectory(format!("threshold {eps} was not recorded"))
            })?;
        Ok(self.support_radius[idx]
            .iter()
            .all(|r| r.map_or(true, |r| r <= r_max)))
    }

    /// Budgeted estimate of ||Psi_a u||_{C^gamma}: the sup of weighted
    /// difference quotients over sampled space-time pairs plus the weighted
    /// sup norm.
    pub fn holder_seminorm(&self, gamma: f64, a: f64) -> Result<f64> {
        self.holder_seminorm_with_budget(gamma, a, 100_000, 0x5eed)
    }

    pub fn holder_seminorm_with_budget(
        &self,
        gamma: f64,
        a: f64,
        budget: usize,
        seed: u64,
    ) -> Result<f64> {
        if !(0.0 < gamma && gamma < 1.0) {
            return Err(Error::Precondition("gamma must lie in (0,1)".into()));
        }
        let snaps = self
            .snapshots
            .as_ref()
            .ok_or_else(|| Error::UnusableTrajectory("no snapshots recorded".into()))?;
        if snaps.len() < 2 {
            return Err(Error::UnusableTrajectory(
                "need at least two snapshots".into(),
            ));
        }
        let grid = snaps[0].1.grid;
        let cells = grid.cells();

        let weighted = |k: usize, i: usize| -> f64 {
            snaps[k].1.values[i] * cosh_weight(a, grid.radius(i))
        };

        let mut sup = 0.0_f64;
        for k in 0..snaps.len() {
            for i in 0..cells {
                sup = sup.max(weighted(k, i).abs());
            }
        }

        let dist = |k1: usize, i1: usize, k2: usize, i2: usize| -> f64 {
            let dt = (snaps[k1].0 - snaps[k2].0).abs();
            let c1 = grid.coord(i1);
            let c2 = grid.coord(i2);
            let dxv = [c1[0] - c2[0], c1[1] - c2[1]];
            dt + (dxv[0] * dxv[0] + dxv[1] * dxv[1]).sqrt()
        };

        let mut semi = 0.0_f64;
        let mut consider = |k1: usize, i1: usize, k2: usize, i2: usize| {
            let d = dist(k1, i1, k2, i2);
            if d > 0.0 {
                let q = (weighted(k1, i1) - weighted(k2, i2)).abs() / d.powf(gamma);
                if q > semi {
                    semi = q;
                }
            }
        };

        // structured pass: adjacent snapshots at the same cell
        let pairs_structured = (snaps.len() - 1) * cells;
        let stride = (pairs_structured / (budget / 2).max(1)).max(1);
        for k in 0..snaps.len() - 1 {
            let mut i = 0;
            while i < cells {
                consider(k, i, k + 1, i);
                i += stride;
            }
        }

        // randomized pass over arbitrary pairs
        let mut rng = CounterRng::from_key(&[seed, budget as u64]);
        for _ in 0..budget {
            let k1 = rng.next_index(snaps.len());
            let i1 = rng.next_index(cells);
            let k2 = rng.next_index(snaps.len());
            let i2 = rng.next_index(cells);
            consider(k1, i1, k2, i2);
        }

        Ok(semi + sup)
    }

    /// CSV export: time, support radius per threshold, shell integrals,
    /// weighted sups. Metadata rides in `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# config_hash={:016x} replica={} seed={} lambda={}",
            self.meta.config_hash, self.meta.replica, self.meta.base_seed, self.meta.lambda
        )?;
        writeln!(w, "# clipped_mass={}", fmt_f64(self.clipped_mass))?;
        let mut header = vec!["time".to_string()];
        for (i, eps) in self.eps_list.iter().enumerate() {
            if i == 0 {
                header.push("support_radius".to_string());
            } else {
                header.push(format!("support_radius_eps{}", fmt_f64(*eps)));
            }
        }
        for r in &self.shell_radii {
            header.push(format!("shell_R{r}"));
        }
        for a in &self.weight_params {
            header.push(format!("weighted_sup_a{a}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.times.len() {
            let mut row = vec![fmt_f64(self.times[t])];
            for series in &self.support_radius {
                row.push(series[t].map(fmt_f64).unwrap_or_default());
            }
            for series in &self.shell_integrals {
                row.push(fmt_f64(series[t]));
            }
            for series in &self.weighted_sup {
                row.push(fmt_f64(series[t]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    #[test]
    fn support_radius_examples() {
        let grid = grid1(64, 8.0);
        let zero = Field::zeros(grid);
        assert_eq!(support_radius(&zero, 1e-8), None);

        // indicator of |x| <= 3 on dx = 0.25
        let ind = Field::from_fn(grid, |x| if x[0].abs() <= 3.0 { 1.0 } else { 0.0 });
        assert_eq!(grid.dx(), 0.25);
        assert_eq!(support_radius(&ind, 0.5), Some(3.0));

        // gaussian profile, eps = e^{-8}: radius within dx of 4
        let gauss = Field::from_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
        let r = support_radius(&gauss, (-8.0_f64).exp()).unwrap();
        assert!(r <= 4.0 && r >= 4.0 - grid.dx(), "r = {r}");
    }

    #[test]
    fn support_radius_monotone_in_threshold() {
        let grid = grid1(128, 8.0);
        let f = Field::from_fn(grid, |x| (-x[0].abs()).exp());
        let r1 = support_radius(&f, 1e-3).unwrap();
        let r2 = support_radius(&f, 1e-2).unwrap();
        assert!(r1 >= r2);
    }

    #[test]
    fn weighted_sup_examples() {
        let grid = grid1(64, 8.0);
        let ones = Field::from_fn(grid, |_| 1.0);
        assert_eq!(weighted_sup(&ones, 2.0), 1.0);

        let a = 1.0;
        let coshf = Field::from_fn(grid, |x| (a * x[0].abs()).cosh());
        let s = weighted_sup(&coshf, a);
        assert!((s - 1.0).abs() < 1e-12);

        // single occupied cell at |x0| = 5
        let spike = Field::from_fn(grid, |x| if (x[0] - 5.0).abs() < 1e-9 { 1.0 } else { 0.0 });
        let s = weighted_sup(&spike, 1.0);
        assert!((s - 1.0 / 5.0_f64.cosh()).abs() < 1e-12);
        assert!(s <= spike.max());
    }

    #[test]
    fn shell_integral_matches_sphere_area() {
        // d=2, constant field: integral ~ c * 2 pi R
        let grid = Grid::new(2, 256, 8.0).unwrap();
        let c = 1.7;
        let f = Field::from_fn(grid, |_| c);
        let shell = ShellGeometry::new(grid, 4.0).unwrap();
        let got = shell.integrate(&f).unwrap();
        let expect = c * 2.0 * PI * 4.0;
        assert!(
            (got - expect).abs() / expect < 0.02,
            "got {got}, expect {expect}"
        );

        // d=1: two boundary points
        let grid = grid1(256, 8.0);
        let f = Field::from_fn(grid, |_| c);
        let shell = ShellGeometry::with_width(grid, 4.0, 4.0 * grid.dx()).unwrap();
        let got = shell.integrate(&f).unwrap();
        assert!((got - 2.0 * c).abs() / (2.0 * c) < 0.05, "got {got}");

        let zero = Field::zeros(grid);
        assert_eq!(shell.integrate(&zero).unwrap(), 0.0);
    }

    #[test]
    fn shell_partition_is_exact_bookkeeping() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let f = Field::from_fn(grid, |x| (x[0] + 2.0 * x[1]).sin().abs() + 0.3);
        // tile [1, 5) with half-open shells of width w
        let w = 0.5;
        let mut covered = 0.0;
        for i in 0..8 {
            let r = 1.0 + w / 2.0 + i as f64 * w;
            let shell = ShellGeometry::with_width(grid, r, w).unwrap();
            covered += shell.integrate(&f).unwrap() * w;
        }
        // direct mass over the annulus 1 <= |x| < 5
        let direct: f64 = (0..grid.cells())
            .filter(|&i| {
                let r = grid.radius(i);
                (1.0..5.0).contains(&r)
            })
            .map(|i| f.values[i])
            .sum::<f64>()
            * grid.cell_volume();
        assert!(
            (covered - direct).abs() <= 1e-10 * direct.abs(),
            "covered {covered} direct {direct}"
        );
    }

    #[test]
    fn empty_shell_is_an_error() {
        let grid = grid1(32, 4.0);
        assert!(ShellGeometry::with_width(grid, 3.0, 0.01).is_err());
    }

    #[test]
    fn cosh_weight_gradient_bound() {
        // centered finite differences: |D Psi_a| <= a Psi_a + 10 a dx^2
        for dim in [1usize, 2] {
            let grid = Grid::new(dim, 64, 6.0).unwrap();
            let a = 1.3;
            let psi = Field::from_fn(grid, |x| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                cosh_weight(a, if dim == 1 { x[0].abs() } else { r })
            });
            let n = grid.n() as isize;
            let dx = grid.dx();
            for i in 0..grid.cells() {
                let (i0, i1) = match dim {
                    1 => (i as isize, 0),
                    _ => ((i / grid.n()) as isize, (i % grid.n()) as isize),
                };
                let mut grad2 = 0.0;
                let dplus = psi.values[grid.index((i0 + 1).rem_euclid(n), i1)];
                let dminus = psi.values[grid.index((i0 - 1).rem_euclid(n), i1)];
                grad2 += ((dplus - dminus) / (2.0 * dx)).powi(2);
                if dim == 2 {
                    let dplus = psi.values[grid.index(i0, (i1 + 1).rem_euclid(n))];
                    let dminus = psi.values[grid.index(i0, (i1 - 1).rem_euclid(n))];
                    grad2 += ((dplus - dminus) / (2.0 * dx)).powi(2);
                }
                // skip the wrap seam where |x| is not smooth
                let on_seam = i0 == 0 || (dim == 2 && i1 == 0);
                if on_seam {
                    continue;
                }
                let bound = a * psi.values[i] + 10.0 * a * dx * dx;
                assert!(
                    grad2.sqrt() <= bound,
                    "dim {dim} cell {i}: grad {} bound {bound}",
                    grad2.sqrt()
                );
            }
        }
    }

    fn toy_trajectory(snaps: Vec<(f64, Field)>, _grid: Grid) -> Trajectory {
        Trajectory {
            times: snaps.iter().map(|s| s.0).collect(),
            eps_list: vec![1e-8],
            support_radius: vec![vec![None; snaps.len()]],
            shell_radii: vec![],
            shell_integrals: vec![],
            weight_params: vec![],
            weighted_sup: vec![],
            final_field: snaps.last().unwrap().1.clone(),
            snapshots: Some(snaps),
            increments: None,
            clipped_mass: 0.0,
            meta: RunMetadata {
                config_hash: 0,
                replica: 0,
                base_seed: 0,
                lambda: 0.5,
            },
        }
    }

    #[test]
    fn holder_seminorm_witnesses() {
        let grid = grid1(32, 4.0);

        // constant in time and space: seminorm 0, total = the constant
        let c = 0.75;
        let snaps: Vec<(f64, Field)> = (0..3)
            .map(|k| (k as f64 * 0.5, Field::from_fn(grid, |_| c)))
            .collect();
        // weight by cosh makes the field x-dependent, so use the weighted sup
        let traj = toy_trajectory(snaps, grid);
        let v = traj.holder_seminorm(0.5, 1.0).unwrap();
        // the weighted field varies in space, but its sup is c at the origin
        assert!(v >= c);

        // u(t,x) = t: the pair ((0,0),(1,0)) gives quotient 1, and the sup
        // norm adds 1
        let snaps: Vec<(f64, Field)> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&t| (t, Field::from_fn(grid, move |_| t)))
            .collect();
        let traj = toy_trajectory(snaps, grid);
        let v = traj.holder_seminorm(0.5, 1.0).unwrap();
        assert!(v >= 1.0, "v = {v}");
    }

    #[test]
    fn holder_seminorm_needs_snapshots() {
        let grid = grid1(32, 4.0);
        let snaps = vec![(0.0, Field::zeros(grid))];
        let traj = toy_trajectory(snaps, grid);
        assert!(traj.holder_seminorm(0.5, 1.0).is_err());

        let mut traj2 = toy_trajectory(vec![(0.0, Field::zeros(grid))], grid);
        traj2.snapshots = None;
        assert!(traj2.holder_seminorm(0.5, 1.0).is_err());
    }

    #[test]
    fn support_bounded_thresholds() {
        let grid = grid1(32, 4.0);
        let mut traj = toy_trajectory(
            vec![(0.0, Field::zeros(grid)), (1.0, Field::zeros(grid))],
            grid,
        );
        traj.support_radius = vec![vec![Some(1.0), Some(1.5), Some(2.2)]];
        traj.times = vec![0.0, 0.5, 1.0];
        assert!(!traj.support_bounded(1e-8, 2.0).unwrap());
        assert!(traj.support_bounded(1e-8, 2.2).unwrap());
        assert!(traj.support_bounded(1e-6, 2.0).is_err());

        traj.support_radius = vec![vec![None, None, None]];
        assert!(traj.support_bounded(1e-8, 0.1).unwrap());
    }
}
