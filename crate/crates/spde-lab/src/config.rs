//! Run configuration: a sectioned key = value text file with sections
//! {grid, kernel, coefficients, diffusion, initial, time, recording, sweep}.
//! Unknown keys are rejected; every field has a default, so an empty file
//! is a valid configuration.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{check_reinforced_dalang, parse_kernel, CorrelationKernel, QuadratureConfig};
use crate::numeric::fnv1a;
use crate::solver::{cfl_max_dt, Coefficients, DiffusionFn, InitialData, Recording, RunSetup, CFL_SAFETY};

#[derive(Clone, Debug)]
pub struct Config {
    pub grid_dim: usize,
    pub grid_n: usize,
    pub grid_half_extent: f64,

    pub kernel_spec: String,
    /// Regularity parameter for the integrability gate.
    pub eta: f64,

    pub coeff_model: String,
    pub coeff_a_diag: [f64; 2],
    pub coeff_b: [f64; 2],
    pub coeff_c: f64,
    pub coeff_eps: f64,
    pub coeff_k: f64,

    pub lambda: f64,
    pub diffusion_k: f64,
    pub cutoff_n: Option<u32>,

    pub initial_r0: f64,
    pub initial_height: f64,

    pub t_end: f64,
    pub dt: Option<f64>,

    pub stride: usize,
    pub eps_rel: Vec<f64>,
    pub shells: Vec<f64>,
    pub weights: Vec<f64>,
    pub snapshots: bool,
    pub increments: bool,

    pub sweep_lambdas: Vec<f64>,
    pub sweep_kernels: Vec<String>,
    pub replicas: usize,
    pub r_max: f64,
    pub seed: u64,
    pub out_dir: String,

    canonical: String,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            grid_dim: 1,
            grid_n: 512,
            grid_half_extent: 16.0,
            kernel_spec: "white".into(),
            eta: 0.4,
            // diffusivity 2 places the heat front just past the default
            // r_max at t_end, so the bounded-support trend in lambda is
            // visible at desk scale
            coeff_model: "constant".into(),
            coeff_a_diag: [2.0, 2.0],
            coeff_b: [0.0, 0.0],
            coeff_c: 0.0,
            coeff_eps: 0.25,
            coeff_k: 2.0,
            lambda: 0.5,
            diffusion_k: 1.0,
            cutoff_n: None,
            initial_r0: 1.0,
            initial_height: 1.0,
            t_end: 0.5,
            dt: None,
            stride: 8,
            eps_rel: vec![1e-6, 1e-8, 1e-10],
            shells: vec![],
            weights: vec![1.0],
            snapshots: false,
            increments: false,
            sweep_lambdas: vec![0.3, 0.6, 0.9, 1.3],
            sweep_kernels: vec!["white".into()],
            replicas: 50,
            r_max: 8.0,
            seed: 20260808,
            out_dir: "out/sweep".into(),
            canonical: String::new(),
        }
    }
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut section = String::from("");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::Config(format!("line {}: bad section header", lineno + 1)));
            }
            section = line[1..line.len() - 1].trim().to_string();
            out.entry(section.clone()).or_default();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        out.entry(section.clone())
            .or_default()
            .insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take_f64(map: &mut BTreeMap<String, String>, key: &str, into: &mut f64) -> Result<()> {
    if let Some(v) = map.remove(key) {
        *into = v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad number `{v}`")))?;
    }
    Ok(())
}

fn take_usize(map: &mut BTreeMap<String, String>, key: &str, into: &mut usize) -> Result<()> {
    if let Some(v) = map.remove(key) {
        *into = v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad integer `{v}`")))?;
    }
    Ok(())
}

fn take_bool(map: &mut BTreeMap<String, String>, key: &str, into: &mut bool) -> Result<()> {
    if let Some(v) = map.remove(key) {
        *into = match v.as_str() {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            _ => return Err(Error::Config(format!("{key}: bad boolean `{v}`"))),
        };
    }
    Ok(())
}

fn take_list_f64(map: &mut BTreeMap<String, String>, key: &str, into: &mut Vec<f64>) -> Result<()> {
    if let Some(v) = map.remove(key) {
        let parsed: std::result::Result<Vec<f64>, _> = v
            .split([' ', ','])
            .filter(|s| !s.is_empty())
            .map(|s| s.parse())
            .collect();
        *into = parsed.map_err(|_| Error::Config(format!("{key}: bad number list `{v}`")))?;
    }
    Ok(())
}

fn reject_unknown(section: &str, map: &BTreeMap<String, String>) -> Result<()> {
    if let Some(k) = map.keys().next() {
        return Err(Error::Config(format!("unknown key `{k}` in section [{section}]")));
    }
    Ok(())
}

impl Config {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut sections = parse_sections(text)?;

        if let Some(mut s) = sections.remove("grid") {
            take_usize(&mut s, "dim", &mut cfg.grid_dim)?;
            take_usize(&mut s, "n", &mut cfg.grid_n)?;
            take_f64(&mut s, "half_extent", &mut cfg.grid_half_extent)?;
            reject_unknown("grid", &s)?;
        }
        if let Some(mut s) = sections.remove("kernel") {
            if let Some(v) = s.remove("spec") {
                cfg.kernel_spec = v;
            }
            take_f64(&mut s, "eta", &mut cfg.eta)?;
            reject_unknown("kernel", &s)?;
        }
        if let Some(mut s) = sections.remove("coefficients") {
            if let Some(v) = s.remove("model") {
                cfg.coeff_model = v;
            }
            take_f64(&mut s, "a11", &mut cfg.coeff_a_diag[0])?;
            take_f64(&mut s, "a22", &mut cfg.coeff_a_diag[1])?;
            take_f64(&mut s, "b1", &mut cfg.coeff_b[0])?;
            take_f64(&mut s, "b2", &mut cfg.coeff_b[1])?;
            take_f64(&mut s, "c", &mut cfg.coeff_c)?;
            take_f64(&mut s, "eps", &mut cfg.coeff_eps)?;
            take_f64(&mut s, "k", &mut cfg.coeff_k)?;
            reject_unknown("coefficients", &s)?;
        }
        if let Some(mut s) = sections.remove("diffusion") {
            take_f64(&mut s, "lambda", &mut cfg.lambda)?;
            take_f64(&mut s, "k", &mut cfg.diffusion_k)?;
            if let Some(v) = s.remove("cutoff_n") {
                let n: u32 = v
                    .parse()
                    .map_err(|_| Error::Config(format!("cutoff_n: bad integer `{v}`")))?;
                cfg.cutoff_n = Some(n);
            }
            reject_unknown("diffusion", &s)?;
        }
        if let Some(mut s) = sections.remove("initial") {
            if let Some(v) = s.remove("profile") {
                if v != "bump" {
                    return Err(Error::Config(format!("unsupported initial profile `{v}`")));
                }
            }
            take_f64(&mut s, "r0", &mut cfg.initial_r0)?;
            take_f64(&mut s, "height", &mut cfg.initial_height)?;
            reject_unknown("initial", &s)?;
        }
        if let Some(mut s) = sections.remove("time") {
            take_f64(&mut s, "t_end", &mut cfg.t_end)?;
            if let Some(v) = s.remove("dt") {
                let dt: f64 = v
                    .parse()
                    .map_err(|_| Error::Config(format!("dt: bad number `{v}`")))?;
                cfg.dt = Some(dt);
            }
            reject_unknown("time", &s)?;
        }
        if let Some(mut s) = sections.remove("recording") {
            take_usize(&mut s, "stride", &mut cfg.stride)?;
            take_list_f64(&mut s, "eps", &mut cfg.eps_rel)?;
            take_list_f64(&mut s, "shells", &mut cfg.shells)?;
            take_list_f64(&mut s, "weights", &mut cfg.weights)?;
            take_bool(&mut s, "snapshots", &mut cfg.snapshots)?;
            take_bool(&mut s, "increments", &mut cfg.increments)?;
            reject_unknown("recording", &s)?;
        }
        if let Some(mut s) = sections.remove("sweep") {
            take_list_f64(&mut s, "lambda", &mut cfg.sweep_lambdas)?;
            if let Some(v) = s.remove("kernels") {
                cfg.sweep_kernels = v
                    .split([' ', ','])
                    .filter(|s| !s.is_empty())
                    .map(|s| s.to_string())
                    .collect();
            }
            take_usize(&mut s, "replicas", &mut cfg.replicas)?;
            take_f64(&mut s, "r_max", &mut cfg.r_max)?;
            if let Some(v) = s.remove("seed") {
                cfg.seed = v
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: bad integer `{v}`")))?;
            }
            if let Some(v) = s.remove("out") {
                cfg.out_dir = v;
            }
            reject_unknown("sweep", &s)?;
        }
        if let Some((sec, _)) = sections.iter().next() {
            if !sec.is_empty() {
                return Err(Error::Config(format!("unknown section [{sec}]")));
            }
            if let Some(k) = sections[sec].keys().next() {
                return Err(Error::Config(format!("key `{k}` outside any section")));
            }
        }

        cfg.canonical = cfg.canonical_text();
        Ok(cfg)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    fn canonical_text(&self) -> String {
        format!("{self:?}")
    }

    /// Stable fingerprint of the full configuration.
    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical.as_bytes())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_dim, self.grid_n, self.grid_half_extent)
    }

    pub fn kernel(&self) -> Result<CorrelationKernel> {
        parse_kernel(&self.kernel_spec, self.grid_dim)
    }

    pub fn coefficients(&self) -> Result<Coefficients> {
        match self.coeff_model.as_str() {
            "laplacian" => Ok(Coefficients::laplacian()),
            "constant" => Ok(Coefficients::constant(
                self.coeff_a_diag,
                self.coeff_b,
                self.coeff_c,
                self.coeff_k,
            )),
            "trig" => Ok(Coefficients::trig(
                self.coeff_eps,
                std::f64::consts::PI / self.grid_half_extent,
                self.coeff_k,
            )),
            other => Err(Error::Config(format!("unknown coefficient model `{other}`"))),
        }
    }

    pub fn recording(&self) -> Recording {
        Recording {
            stride: self.stride,
            eps_rel: self.eps_rel.clone(),
            shell_radii: self.shells.clone(),
            weight_params: self.weights.clone(),
            snapshots: self.snapshots,
            increments: self.increments,
        }
    }

    /// The single-run setup, with optional overrides of lambda and kernel
    /// (used by the sweep; the base seed is offset per cell so that cells
    /// draw independent noise).
    pub fn run_setup(&self, lambda: Option<f64>, kernel_spec: Option<&str>) -> Result<RunSetup> {
        let spec = kernel_spec.unwrap_or(&self.kernel_spec);
        let kernel = parse_kernel(spec, self.grid_dim)?;
        let lambda = lambda.unwrap_or(self.lambda);
        let mut diffusion = DiffusionFn::new(lambda, self.diffusion_k)?;
        if let Some(n) = self.cutoff_n {
            diffusion = diffusion.with_cutoff(n)?;
        }
        Ok(RunSetup {
            grid: self.grid()?,
            kernel,
            coeffs: self.coefficients()?,
            diffusion,
            initial: InitialData::bump(self.initial_r0, self.initial_height)?,
            t_end: self.t_end,
            dt: self.dt,
            base_seed: self.seed,
            recording: self.recording(),
        })
    }

    /// Validation-before-compute: named checks in order — grid, kernel
    /// admissibility, the reinforced integrability condition for the kernel
    /// and eta, coefficient ellipticity and bounds, and the CFL cap.
    /// Returns accumulated warnings; any failing check is an error naming
    /// itself.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();

        let grid = self
            .grid()
            .map_err(|e| Error::Config(format!("grid check failed: {e}")))?;

        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!(
                "kernel check failed: eta = {} outside (0, 1]",
                self.eta
            )));
        }
        let mut specs: Vec<&str> = vec![self.kernel_spec.as_str()];
        for k in &self.sweep_kernels {
            if !specs.contains(&k.as_str()) {
                specs.push(k);
            }
        }
        for spec in specs {
            let kernel = parse_kernel(spec, self.grid_dim)
                .map_err(|e| Error::Config(format!("kernel check failed for `{spec}`: {e}")))?;
            let dal = check_reinforced_dalang(&kernel, self.eta, &QuadratureConfig::default())
                .map_err(|e| Error::Config(format!("integrability check failed for `{spec}`: {e}")))?;
            if !dal.converged {
                return Err(Error::Config(format!(
                    "integrability check failed: kernel `{spec}` with eta = {} does not satisfy \
                     the reinforced condition (tail exponent {:.3})",
                    self.eta, dal.tail_exponent
                )));
            }
        }

        let coeffs = self.coefficients()?;
        let times = [0.0, 0.5 * self.t_end, self.t_end];
        coeffs
            .validate(&grid, &times)
            .map_err(|e| Error::Config(format!("ellipticity check failed: {e}")))?;

        if let Some(dt) = self.dt {
            let cap = CFL_SAFETY * cfl_max_dt(&coeffs, &grid);
            if dt > cap * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "cfl check failed: dt = {dt} exceeds {cap}"
                )));
            }
        }

        if self.sweep_lambdas.is_empty() {
            return Err(Error::Config("sweep check failed: empty lambda list".into()));
        }
        if self.replicas < 1 {
            return Err(Error::Config("sweep check failed: replicas must be >= 1".into()));
        }
        if !(self.r_max < self.grid_half_extent) {
            return Err(Error::Config(format!(
                "sweep check failed: r_max = {} must stay below the half extent {}",
                self.r_max, self.grid_half_extent
            )));
        }
        for eps in &self.eps_rel {
            if !(*eps > 0.0) {
                return Err(Error::Config("recording check failed: eps must be positive".into()));
            }
        }

        let setup = self.run_setup(None, None)?;
        if let Some(w) = setup.wrap_warning() {
            warnings.push(w);
        }
        for lam in &self.sweep_lambdas {
            if *lam >= 1.0 {
                warnings.push(format!(
                    "lambda = {lam} is in the failure regime for bounded support"
                ));
            }
        }
        Ok(warnings)
    }
}
