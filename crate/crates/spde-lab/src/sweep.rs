//! Parallel Monte Carlo sweeps over (lambda, kernel, replica): validation
//! first, replica-level parallelism, deterministic aggregation into
//! bounded-support fractions with Wilson intervals, and diff-friendly
//! output (per-cell trajectory CSVs, one aggregate CSV, one summary.json).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{parse_kernel, CorrelationKernel};
use crate::lemma_lab::{
    build_phi, covariance_lower_bound_check, cutoff_report, random_test_field, reverse_jensen_t,
    reverse_jensen_x, jensen_x_max_r, ExponentSet, HolderSample, LabRecord,
};
use crate::noise::NoiseSampler;
use crate::numeric::{fmt_f64, fnv1a, wilson_interval};
use crate::observables::Trajectory;
use crate::solver::simulate_with_sampler;

/// Per-replica record of one sweep cell.
#[derive(Clone, Debug, Serialize)]
pub struct ReplicaRow {
    pub lambda: f64,
    pub kernel: String,
    pub replica: u64,
    /// (relative threshold, bounded-support indicator)
    pub csp: Vec<(f64, bool)>,
    /// Final support radius at the middle threshold, if any cell is occupied.
    pub final_radius: Option<f64>,
    pub clipped_mass: f64,
    pub blow_up: bool,
}

/// Aggregate over replicas for one (lambda, kernel, threshold).
#[derive(Clone, Debug, Serialize)]
pub struct AggregateRow {
    pub lambda: f64,
    pub kernel: String,
    pub eps_rel: f64,
    pub bounded: usize,
    pub replicas: usize,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Wilson intervals need a minimum cell size to mean anything.
    pub reliable: bool,
    /// lambda >= 1 lies outside the bounded-support regime.
    pub failure_regime: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub rows: Vec<ReplicaRow>,
    pub aggregates: Vec<AggregateRow>,
    pub warnings: Vec<String>,
    pub config_hash: String,
}

/// Wilson-score 95% aggregation of bounded-support indicators; blow-ups
/// count as unbounded.
pub fn estimate_csp_probability(rows: &[ReplicaRow]) -> Vec<AggregateRow> {
    let mut cells: BTreeMap<(String, String, String), (usize, usize, f64, f64)> = BTreeMap::new();
    for row in rows {
        for (eps, bounded) in &row.csp {
            let key = (
                fmt_f64(row.lambda),
                row.kernel.clone(),
                fmt_f64(*eps),
            );
            let entry = cells.entry(key).or_insert((0, 0, row.lambda, *eps));
            entry.1 += 1;
            if *bounded && !row.blow_up {
                entry.0 += 1;
            }
        }
    }
    cells
        .into_iter()
        .map(|((_, kernel, _), (bounded, total, lambda, eps))| {
            let (lo, hi) = wilson_interval(bounded, total);
            AggregateRow {
                lambda,
                kernel,
                eps_rel: eps,
                bounded,
                replicas: total,
                fraction: bounded as f64 / total as f64,
                ci_low: lo,
                ci_high: hi,
                reliable: total >= 30,
                failure_regime: lambda >= 1.0,
            }
        })
        .collect()
}

/// Check that the bounded-support fraction is non-increasing in lambda up
/// to confidence-interval overlap, per kernel and threshold.
pub fn monotone_trend_ok(aggregates: &[AggregateRow]) -> bool {
    let mut groups: BTreeMap<(String, String), Vec<&AggregateRow>> = BTreeMap::new();
    for agg in aggregates {
        groups
            .entry((agg.kernel.clone(), fmt_f64(agg.eps_rel)))
            .or_default()
            .push(agg);
    }
    for (_, mut rows) in groups {
        rows.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        for w in rows.windows(2) {
            let non_increasing = w[1].fraction <= w[0].fraction + 1e-12;
            let overlap = w[1].ci_low <= w[0].ci_high && w[0].ci_low <= w[1].ci_high;
            if !non_increasing && !overlap {
                return false;
            }
        }
    }
    true
}

fn run_one_replica(
    cfg: &Config,
    sampler: &NoiseSampler,
    lambda: f64,
    kernel_spec: &str,
    replica: u64,
) -> Result<(ReplicaRow, Option<Trajectory>)> {
    let setup = cfg.run_setup(Some(lambda), Some(kernel_spec))?;
    match simulate_with_sampler(&setup, sampler, replica) {
        Ok(traj) => {
            let mut csp = Vec::with_capacity(cfg.eps_rel.len());
            for (j, eps_rel) in cfg.eps_rel.iter().enumerate() {
                let eps_abs = traj.eps_list[j];
                csp.push((*eps_rel, traj.support_bounded(eps_abs, cfg.r_max)?));
            }
            let mid = cfg.eps_rel.len() / 2;
            let final_radius = traj.support_radius[mid].last().cloned().flatten();
            Ok((
                ReplicaRow {
                    lambda,
                    kernel: kernel_spec.to_string(),
                    replica,
                    csp,
                    final_radius,
                    clipped_mass: traj.clipped_mass,
                    blow_up: false,
                },
                Some(traj),
            ))
        }
        Err(Error::BlowUp { .. }) => Ok((
            ReplicaRow {
                lambda,
                kernel: kernel_spec.to_string(),
                replica,
                csp: cfg.eps_rel.iter().map(|e| (*e, false)).collect(),
                final_radius: None,
                clipped_mass: f64::NAN,
                blow_up: true,
            },
            None,
        )),
        Err(e) => Err(e),
    }
}

/// Execute the full sweep: every (lambda, kernel) cell times `replicas`,
/// writing per-replica trajectory CSVs, an aggregate CSV, and a JSON
/// summary. Deterministic for a fixed config, independent of `workers`.
pub fn run_sweep(cfg: &Config, workers: usize, out_dir: &Path) -> Result<SweepResult> {
    let warnings = cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let mut rows: Vec<ReplicaRow> = Vec::new();
    let mut cell_files: Vec<(PathBuf, Trajectory)> = Vec::new();

    for kernel_spec in &cfg.sweep_kernels {
        let kernel = parse_kernel(kernel_spec, cfg.grid_dim)?;
        let grid = cfg.grid()?;
        for &lambda in &cfg.sweep_lambdas {
            // distinct seeds per cell so cells see independent noise
            let cell_seed = cfg
                .seed
                .wrapping_add(fnv1a(format!("{kernel_spec}|{lambda}").as_bytes()));
            let mut cell_cfg = cfg.clone();
            cell_cfg.seed = cell_seed;
            let sampler = NoiseSampler::build(&kernel, grid, cell_seed)?;

            let results: Vec<Result<(ReplicaRow, Option<Trajectory>)>> = pool.install(|| {
                (0..cfg.replicas as u64)
                    .into_par_iter()
                    .map(|replica| {
                        run_one_replica(&cell_cfg, &sampler, lambda, kernel_spec, replica)
                    })
                    .collect()
            });

            let cell_dir = out_dir.join(cell_dir_name(kernel_spec, lambda));
            std::fs::create_dir_all(&cell_dir)?;
            for (replica, res) in results.into_iter().enumerate() {
                let (row, traj) = res?;
                if let Some(traj) = traj {
                    cell_files.push((cell_dir.join(format!("replica_{replica:04}.csv")), traj));
                }
                rows.push(row);
            }
        }
    }

    // deterministic single-threaded output pass
    for (path, traj) in &cell_files {
        let f = std::fs::File::create(path)?;
        traj.write_csv(std::io::BufWriter::new(f))?;
    }

    let aggregates = estimate_csp_probability(&rows);
    let result = SweepResult {
        rows,
        aggregates,
        warnings,
        config_hash: format!("{:016x}", cfg.hash()),
    };
    write_sweep_csv(&result, &out_dir.join("sweep.csv"))?;
    write_summary_json(cfg, &result, &out_dir.join("summary.json"))?;
    Ok(result)
}

fn cell_dir_name(kernel_spec: &str, lambda: f64) -> String {
    let safe: String = kernel_spec
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    format!("cell_{safe}_lambda{lambda}")
}

fn write_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "lambda,kernel,replica,eps_rel,bounded,final_radius,clipped_mass,blow_up,failure_regime"
    )?;
    for row in &result.rows {
        for (eps, bounded) in &row.csp {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(row.lambda),
                row.kernel,
                row.replica,
                fmt_f64(*eps),
                bounded,
                row.final_radius.map(fmt_f64).unwrap_or_default(),
                if row.clipped_mass.is_nan() {
                    String::new()
                } else {
                    fmt_f64(row.clipped_mass)
                },
                row.blow_up,
                row.lambda >= 1.0,
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: &'a str,
    aggregates: &'a [AggregateRow],
    monotone_trend: bool,
    blow_ups: usize,
    warnings: &'a [String],
}

fn write_summary_json(cfg: &Config, result: &SweepResult, path: &Path) -> Result<()> {
    let _ = cfg;
    let summary = Summary {
        config_hash: &result.config_hash,
        aggregates: &result.aggregates,
        monotone_trend: monotone_trend_ok(&result.aggregates),
        blow_ups: result.rows.iter().filter(|r| r.blow_up).count(),
        warnings: &result.warnings,
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Parameters of the inequality-lab battery.
#[derive(Clone, Debug)]
pub struct LemmaSuiteParams {
    pub gamma: f64,
    pub lambda: f64,
    pub h_const: f64,
    pub ensemble: usize,
    pub kernels: Vec<String>,
    pub epsilon: f64,
    pub grid_n: usize,
    pub grid_half_extent: f64,
    pub fields_per_kernel: usize,
    /// Deliberately violate the mollifier norm recipe to prove the
    /// covariance check has power (expected to fail).
    pub negative_control: bool,
    pub seed: u64,
}

impl Default for LemmaSuiteParams {
    fn default() -> Self {
        LemmaSuiteParams {
            gamma: 0.3,
            lambda: 0.5,
            h_const: 2.0,
            ensemble: 50,
            kernels: vec![
                "white".into(),
                "riesz:alpha=0.5".into(),
                "ou:beta=1".into(),
                "constant".into(),
                "bump:r=0.5,amp=1".into(),
            ],
            epsilon: 0.25,
            grid_n: 256,
            grid_half_extent: 8.0,
            fields_per_kernel: 100,
            negative_control: false,
            seed: 7,
        }
    }
}

/// Outcome of the lab battery: the emitted records plus whether any
/// zero-tolerance inequality was violated.
pub struct LemmaSuiteOutcome {
    pub records: Vec<LabRecord>,
    pub violations: usize,
}

fn params_map(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect()
}

/// Run the full battery and write one JSON report per family into
/// `out_dir`: exponent identities, reverse-Jensen x and t ensembles, the
/// covariance lower bound per kernel, and the cutoff family.
pub fn run_lemma_suite(params: &LemmaSuiteParams, out_dir: &Path) -> Result<LemmaSuiteOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut all_records = Vec::new();
    let mut violations = 0usize;

    // exponent identities over a lattice
    let mut exp_records = Vec::new();
    for gi in 1..10 {
        for li in 1..10 {
            for d in 1..=2usize {
                let e = ExponentSet::new(gi as f64 / 10.0, li as f64 / 10.0, d)?;
                let ok = e.identity_defect() < 1e-14 && e.l > 0.0 && e.l < 1.0 && e.big_l > 1.0;
                if !ok {
                    violations += 1;
                }
                exp_records.push(LabRecord {
                    lemma: "exponent_identity".into(),
                    params: params_map(&[
                        ("gamma", e.gamma),
                        ("lambda", e.lambda),
                        ("d", d as f64),
                    ]),
                    lhs: e.big_l * (e.gamma * e.l + 1.0),
                    rhs: e.gamma + 1.0,
                    ratio: e.identity_defect(),
                    holds: ok,
                    resolution: 0.0,
                });
            }
        }
    }
    write_records(&out_dir.join("exponents.json"), &exp_records)?;
    all_records.extend(exp_records);

    // reverse-Jensen in x, both dimensions, two resolutions
    let mut x_records = Vec::new();
    let n_modes = 30usize;
    for dim in [1usize, 2] {
        let (r_big, a, b) = (2.0, 1.0, 2.0);
        let r = 0.5 * jensen_x_max_r(params.gamma, params.h_const, r_big, a, b, dim);
        let outer = r_big + b * r;
        let base_cells = if dim == 1 { 200 } else { 16 };
        // angular spacing resolves the shortest sample wavelength
        let base_arc = 2.0 * outer / n_modes as f64 / 8.0;
        for scale in [1usize, 4] {
            let cells = base_cells * scale;
            let arc = base_arc / scale as f64;
            let mut max_ratio = 0.0_f64;
            for s in 0..params.ensemble {
                let sample = HolderSample::annulus(
                    params.gamma,
                    params.h_const,
                    dim,
                    r_big + a * r,
                    outer,
                    cells,
                    n_modes,
                    params.seed.wrapping_add(s as u64),
                )?;
                let rep = reverse_jensen_x(
                    &|x| sample.eval(x),
                    r_big,
                    r,
                    a,
                    b,
                    params.gamma,
                    params.lambda,
                    params.h_const,
                    dim,
                    cells,
                    arc,
                )?;
                max_ratio = max_ratio.max(rep.ratio);
            }
            x_records.push(LabRecord {
                lemma: "reverse_jensen_x".into(),
                params: params_map(&[
                    ("gamma", params.gamma),
                    ("lambda", params.lambda),
                    ("H", params.h_const),
                    ("d", dim as f64),
                    ("R", r_big),
                    ("r", r),
                ]),
                lhs: max_ratio,
                rhs: 0.0,
                ratio: max_ratio,
                holds: max_ratio.is_finite(),
                resolution: cells as f64,
            });
        }
    }
    // stability of the max ratio under 4x refinement
    for pair in x_records.chunks(2) {
        let (coarse, fine) = (&pair[0], &pair[1]);
        if fine.ratio > 2.0 * coarse.ratio || coarse.ratio > 2.0 * fine.ratio {
            violations += 1;
        }
    }
    write_records(&out_dir.join("reverse_jensen_x.json"), &x_records)?;
    all_records.extend(x_records);

    // reverse-Jensen in t, two resolutions
    let mut t_records = Vec::new();
    for scale in [1usize, 4] {
        let points = 2000 * scale;
        let mut max_ratio = 0.0_f64;
        for s in 0..params.ensemble {
            let sample = HolderSample::temporal(
                params.gamma,
                params.h_const,
                1.0,
                points,
                30,
                params.seed.wrapping_add(1000 + s as u64),
            )?;
            let rep = reverse_jensen_t(
                &|t| sample.eval_t(t),
                1.0,
                params.gamma,
                params.lambda,
                params.h_const,
                points,
            )?;
            max_ratio = max_ratio.max(rep.ratio);
        }
        t_records.push(LabRecord {
            lemma: "reverse_jensen_t".into(),
            params: params_map(&[
                ("gamma", params.gamma),
                ("lambda", params.lambda),
                ("H", params.h_const),
            ]),
            lhs: max_ratio,
            rhs: 0.0,
            ratio: max_ratio,
            holds: max_ratio.is_finite(),
            resolution: points as f64,
        });
    }
    if t_records[1].ratio > 2.0 * t_records[0].ratio
        || t_records[0].ratio > 2.0 * t_records[1].ratio
    {
        violations += 1;
    }
    write_records(&out_dir.join("reverse_jensen_t.json"), &t_records)?;
    all_records.extend(t_records);

    // covariance lower bound, exact, per kernel
    let mut cov_records = Vec::new();
    let grid = Grid::new(1, params.grid_n, params.grid_half_extent)?;
    for spec in &params.kernels {
        let kernel: CorrelationKernel = parse_kernel(spec, 1)?;
        let built = build_phi(&kernel, params.epsilon, grid)?;
        let mut phi = built.phi.clone();
        if params.negative_control {
            // break the recipe: push ||phi||^2 far above c/2
            let s = (50.0 * built.c / built.norm_sq).sqrt();
            for v in phi.values.iter_mut() {
                *v *= s;
            }
        }
        let mut holds_all = true;
        let mut worst = f64::INFINITY;
        for s in 0..params.fields_per_kernel {
            let g = random_test_field(grid, params.seed.wrapping_add(5000 + s as u64));
            let rep = covariance_lower_bound_check(&g, &phi, &kernel)?;
            if !rep.holds {
                holds_all = false;
            }
            if rep.rhs > 0.0 {
                worst = worst.min(rep.lhs / rep.rhs);
            }
        }
        if !holds_all {
            violations += 1;
        }
        cov_records.push(LabRecord {
            lemma: "covariance_lower_bound".into(),
            params: params_map(&[
                ("epsilon", params.epsilon),
                ("c", built.c),
                ("r", built.r),
                ("phi_norm_sq", built.norm_sq),
                ("fields", params.fields_per_kernel as f64),
            ]),
            lhs: worst,
            rhs: 1.0,
            ratio: worst,
            holds: holds_all,
            resolution: params.grid_n as f64,
        });
        let last = cov_records.last_mut().unwrap();
        last.lemma = format!("covariance_lower_bound[{spec}]");
    }
    write_records(&out_dir.join("covariance_bound.json"), &cov_records)?;
    all_records.extend(cov_records);

    // cutoff family
    let rows = cutoff_report(params.lambda, params.h_const.max(1.0), &[10, 100, 1000], 10.0)?;
    let mut cut_records = Vec::new();
    let mut ok = true;
    for w in rows.windows(2) {
        if w[1].sup_deviation >= w[0].sup_deviation {
            ok = false;
        }
        let measured = w[1].lipschitz / w[0].lipschitz;
        let predicted = (w[1].n as f64 / w[0].n as f64).powf(1.0 - params.lambda);
        if measured / predicted >= 4.0 || predicted / measured >= 4.0 {
            ok = false;
        }
    }
    for row in &rows {
        if row.at_zero != 0.0 {
            ok = false;
        }
        cut_records.push(LabRecord {
            lemma: "cutoff_family".into(),
            params: params_map(&[("lambda", params.lambda), ("n", row.n as f64)]),
            lhs: row.sup_deviation,
            rhs: row.lipschitz,
            ratio: row.linear_bound,
            holds: row.at_zero == 0.0,
            resolution: row.n as f64,
        });
    }
    if !ok {
        violations += 1;
    }
    write_records(&out_dir.join("cutoff.json"), &cut_records)?;
    all_records.extend(cut_records);

    Ok(LemmaSuiteOutcome {
        records: all_records,
        violations,
    })
}

fn write_records(path: &Path, records: &[LabRecord]) -> Result<()> {
    let json = serde_json::to_string_pretty(records)
        .map_err(|e| Error::Config(format!("record serialization: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> Config {
        Config::from_text(
            "[grid]\nn = 64\nhalf_extent = 16\n\
             [time]\nt_end = 0.02\n\
             [sweep]\nlambda = 0.5\nreplicas = 4\nr_max = 8\n",
        )
        .unwrap()
    }

    #[test]
    fn small_sweep_produces_files_and_fractions() {
        let dir = std::env::temp_dir().join("spde_lab_sweep_test");
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = tiny_config();
        let result = run_sweep(&cfg, 2, &dir).unwrap();
        assert_eq!(result.rows.len(), 4);
        for agg in &result.aggregates {
            assert!(agg.fraction >= 0.0 && agg.fraction <= 1.0);
            assert!(agg.ci_low <= agg.fraction && agg.fraction <= agg.ci_high);
            assert!(!agg.reliable); // only 4 replicas
        }
        assert!(dir.join("sweep.csv").exists());
        assert!(dir.join("summary.json").exists());
        let cell = dir.join("cell_white_lambda0.5");
        for i in 0..4 {
            assert!(cell.join(format!("replica_{i:04}.csv")).exists());
        }
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn sweep_is_deterministic_across_worker_counts() {
        let dir1 = std::env::temp_dir().join("spde_lab_sweep_w1");
        let dir2 = std::env::temp_dir().join("spde_lab_sweep_w4");
        let _ = std::fs::remove_dir_all(&dir1);
        let _ = std::fs::remove_dir_all(&dir2);
        let cfg = tiny_config();
        run_sweep(&cfg, 1, &dir1).unwrap();
        run_sweep(&cfg, 4, &dir2).unwrap();
        let a = std::fs::read(dir1.join("summary.json")).unwrap();
        let b = std::fs::read(dir2.join("summary.json")).unwrap();
        assert_eq!(a, b);
        let a = std::fs::read(dir1.join("sweep.csv")).unwrap();
        let b = std::fs::read(dir2.join("sweep.csv")).unwrap();
        assert_eq!(a, b);
        let _ = std::fs::remove_dir_all(&dir1);
        let _ = std::fs::remove_dir_all(&dir2);
    }

    #[test]
    fn wilson_aggregation_examples() {
        let rows: Vec<ReplicaRow> = (0..30)
            .map(|i| ReplicaRow {
                lambda: 0.5,
                kernel: "white".into(),
                replica: i,
                csp: vec![(1e-8, true)],
                final_radius: Some(2.0),
                clipped_mass: 0.0,
                blow_up: false,
            })
            .collect();
        let agg = estimate_csp_probability(&rows);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].fraction, 1.0);
        assert!(agg[0].ci_low > 0.88);
        assert!(agg[0].reliable);

        let rows: Vec<ReplicaRow> = (0..30)
            .map(|i| ReplicaRow {
                lambda: 1.3,
                kernel: "white".into(),
                replica: i,
                csp: vec![(1e-8, i < 15)],
                final_radius: None,
                clipped_mass: 0.0,
                blow_up: false,
            })
            .collect();
        let agg = estimate_csp_probability(&rows);
        assert!((agg[0].fraction - 0.5).abs() < 1e-12);
        assert!((agg[0].ci_low - 0.33).abs() < 0.01);
        assert!((agg[0].ci_high - 0.67).abs() < 0.01);
        assert!(agg[0].failure_regime);
    }

    #[test]
    fn monotone_trend_detects_violations() {
        let mk = |lambda: f64, fraction: f64, lo: f64, hi: f64| AggregateRow {
            lambda,
            kernel: "white".into(),
            eps_rel: 1e-8,
            bounded: 0,
            replicas: 50,
            fraction,
            ci_low: lo,
            ci_high: hi,
            reliable: true,
            failure_regime: lambda >= 1.0,
        };
        let good = vec![
            mk(0.3, 1.0, 0.9, 1.0),
            mk(0.6, 0.9, 0.8, 0.97),
            mk(1.3, 0.2, 0.1, 0.33),
        ];
        assert!(monotone_trend_ok(&good));
        let bad = vec![mk(0.3, 0.2, 0.1, 0.33), mk(1.3, 0.9, 0.8, 0.97)];
        assert!(!monotone_trend_ok(&bad));
    }

    #[test]
    fn lemma_suite_writes_reports_and_detects_control() {
        let dir = std::env::temp_dir().join("spde_lab_lemma_suite_test");
        let _ = std::fs::remove_dir_all(&dir);
        let mut params = LemmaSuiteParams {
            ensemble: 5,
            fields_per_kernel: 5,
            kernels: vec!["constant".into()],
            ..Default::default()
        };
        let outcome = run_lemma_suite(&params, &dir).unwrap();
        assert_eq!(outcome.violations, 0);
        for name in [
            "exponents.json",
            "reverse_jensen_x.json",
            "reverse_jensen_t.json",
            "covariance_bound.json",
            "cutoff.json",
        ] {
            assert!(dir.join(name).exists(), "{name} missing");
        }

        params.negative_control = true;
        let outcome = run_lemma_suite(&params, &dir).unwrap();
        assert!(outcome.violations > 0, "negative control not detected");
        let _ = std::fs::remove_dir_all(&dir);
    }
}
