//! Batch pipelines: per-realization evaluation of a model, parameter scans,
//! matrix analysis reports and the spreading cross-check.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::averages::{average_report, AverageReport};
use crate::dynamics::{spreading_diffusion, suggested_horizon};
use crate::error::{Error, Result};
use crate::models::{
    born_mean_free_path, build_ring, build_sparse_ensemble, drude_reference, EnsembleSpec, ModelOutput,
    RingSpec,
};
use crate::network::{inverse_resistivity_with, ProbePlacement};
use crate::response::{
    conductance_with, kubo_diffusion, slrt_diffusion_with, ConductanceOptions, OccupationSpec, RateNetwork,
    ResponseResult, DEFAULT_WINDOW_SIZE,
};
use crate::spectral::{
    range_statistics, sparsity_measures, BandWindow, CouplingMatrix, LineShape, RangeStatistics,
    SparsityReport, SpectralWeight,
};
use crate::svg::{histogram_svg, LinePlot, Series};

/// Environment variable capping the number of scan workers.
pub const THREADS_ENV: &str = "SLRT_THREADS";

/// Fraction of failed realizations above which a scan counts as failed.
pub const FAILURE_TOLERANCE: f64 = 0.1;

/// Drive parameters: RMS amplitude, line shape and band `b_c` in levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingSpec {
    #[serde(default = "one")]
    pub rms_drive: f64,
    #[serde(default)]
    pub shape: LineShape,
    #[serde(default = "default_band")]
    pub cutoff_band: f64,
}

fn one() -> f64 {
    1.0
}

fn default_band() -> f64 {
    10.0
}

impl Default for DrivingSpec {
    fn default() -> Self {
        Self {
            rms_drive: 1.0,
            shape: LineShape::Rectangular,
            cutoff_band: default_band(),
        }
    }
}

impl DrivingSpec {
    pub fn weight(&self, density: f64) -> Result<SpectralWeight> {
        SpectralWeight::single(self.rms_drive, self.shape, self.cutoff_band, density)
    }
}

/// How one realization is turned into a [`ResponseResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub driving: DrivingSpec,
    pub occupation: OccupationSpec,
    /// Level index the occupation and the semi-linear window are moved to.
    pub center_index: Option<usize>,
    pub window_size: usize,
    pub placement: ProbePlacement,
    /// Born constant in `l = kappa (c / W)^2`.
    pub kappa: f64,
}

impl Evaluation {
    pub fn ring_default() -> Self {
        Self {
            driving: DrivingSpec::default(),
            occupation: default_ring_occupation(),
            center_index: None,
            window_size: DEFAULT_WINDOW_SIZE,
            placement: ProbePlacement::Endpoints,
            kappa: 1.0,
        }
    }

    pub fn ensemble_default(size: usize) -> Self {
        Self {
            occupation: OccupationSpec::Microcanonical { index: size / 2 },
            ..Self::ring_default()
        }
    }

    fn occupation_for(&self, model: &ModelOutput) -> Result<OccupationSpec> {
        let Some(k) = self.center_index else {
            return Ok(self.occupation);
        };
        if k >= model.levels.len() {
            return Err(Error::Argument(format!("center index {k} outside {} levels", model.levels.len())));
        }
        match self.occupation {
            OccupationSpec::Microcanonical { .. } => Ok(OccupationSpec::Microcanonical { index: k }),
            OccupationSpec::FermiWindow { temperature, .. } => Ok(OccupationSpec::FermiWindow {
                fermi_energy: model.levels.energy(k),
                temperature,
            }),
            OccupationSpec::Boltzmann { .. } => {
                Err(Error::Config("a Boltzmann occupation cannot be re-centered".into()))
            }
        }
    }
}

fn default_ring_occupation() -> OccupationSpec {
    OccupationSpec::FermiWindow {
        fermi_energy: 0.0,
        temperature: 0.05,
    }
}

/// Ring conductances `G = pi rho^2 <<|v|^2>> / L^2` with the Drude
/// reference `G_0`; diffusion and absorption follow as `D = G rms^2 / rho`
/// and `EAR = G rms^2`.
pub fn evaluate_ring(spec: &RingSpec, eval: &Evaluation) -> Result<ResponseResult> {
    let model = build_ring(spec)?;
    evaluate_ring_model(&model, spec, eval)
}

pub fn evaluate_ring_model(model: &ModelOutput, spec: &RingSpec, eval: &Evaluation) -> Result<ResponseResult> {
    let occupation = eval.occupation_for(model)?;
    let v2 = model.velocity_squared().ok_or_else(|| Error::Argument("not a ring model".into()))?;
    let n = model.levels.len();
    let center = occupation.peak_index(&model.levels)?;
    let window = BandWindow::centered(n, center, eval.window_size).range(n);
    let rho = model.levels.slice(window)?.density();
    let s = eval.driving.weight(rho)?;
    let options = ConductanceOptions {
        window_size: eval.window_size,
        placement: eval.placement,
    };
    let g = conductance_with(&v2, &model.levels, &s, &occupation, spec.length as f64, &options)?;
    let ell = born_mean_free_path(spec.hopping, spec.disorder, eval.kappa)?;
    let g0 = if ell.is_finite() {
        drude_reference(spec.width, ell, spec.length as f64)?
    } else {
        f64::INFINITY
    };
    let rms2 = s.mean_square_drive();
    Ok(ResponseResult {
        d_lrt: g.lrt * rms2 / rho,
        d_slrt: g.slrt * rms2 / rho,
        g_lrt: g.lrt,
        g_slrt: g.slrt,
        g_c: g.lrt / g0,
        g_s: g.slrt / g.lrt,
        ear_lrt: g.lrt * rms2,
        ear_slrt: g.slrt * rms2,
        reference: g0,
        connected: g.connected,
    })
}

/// Kinetic reference `D_0 = pi rho rms^2 sum_r F(r) B(r)` of an ensemble.
pub fn ensemble_reference(spec: &EnsembleSpec, s: &SpectralWeight) -> f64 {
    let sum: f64 = (1..=spec.band).map(|r| 2.0 * s.weight(r as i64) * spec.envelope(r)).sum();
    PI * s.density() * s.mean_square_drive() * sum
}

/// Ensemble diffusion coefficients (levels at unit spacing); `G = rho D /
/// rms^2` and `EAR = rho D`.
pub fn evaluate_ensemble(spec: &EnsembleSpec, eval: &Evaluation) -> Result<ResponseResult> {
    let model = build_sparse_ensemble(spec)?;
    let occupation = eval.occupation_for(&model)?;
    let n = model.levels.len();
    let rho = model.levels.density();
    let s = eval.driving.weight(rho)?;
    let d_lrt = kubo_diffusion(&model.coupling, &model.levels, &s, &occupation)?;
    let center = occupation.peak_index(&model.levels)?;
    let window = BandWindow::centered(n, center, eval.window_size);
    let slrt = slrt_diffusion_with(&model.coupling, &model.levels, &s, &window, eval.placement)?;
    let d0 = ensemble_reference(spec, &s);
    let rms2 = s.mean_square_drive();
    Ok(ResponseResult {
        d_lrt,
        d_slrt: slrt.value,
        g_lrt: rho * d_lrt / rms2,
        g_slrt: rho * slrt.value / rms2,
        g_c: d_lrt / d0,
        g_s: slrt.value / d_lrt,
        ear_lrt: rho * d_lrt,
        ear_slrt: rho * slrt.value,
        reference: d0,
        connected: slrt.connected,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTemplate {
    Ring(RingSpec),
    Ensemble(EnsembleSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    DisorderW,
    SpreadSigma,
    BandBc,
    WindowCenter,
}

impl ScanParameter {
    pub fn label(&self) -> &'static str {
        match self {
            ScanParameter::DisorderW => "W",
            ScanParameter::SpreadSigma => "sigma",
            ScanParameter::BandBc => "b_c",
            ScanParameter::WindowCenter => "window center",
        }
    }
}

/// JSON scan description. Omitted fields take the defaults recorded in the
/// manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub model: ModelTemplate,
    pub scan_parameter: ScanParameter,
    pub grid: Vec<f64>,
    #[serde(default = "one_realization")]
    pub realizations: usize,
    #[serde(default)]
    pub occupation: Option<OccupationSpec>,
    #[serde(default)]
    pub driving: DrivingSpec,
    #[serde(default = "default_window")]
    pub window_size: usize,
    #[serde(default)]
    pub placement: ProbePlacement,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn one_realization() -> usize {
    1
}

fn default_window() -> usize {
    DEFAULT_WINDOW_SIZE
}

fn default_output() -> PathBuf {
    PathBuf::from("slrt-out")
}

fn yes() -> bool {
    true
}

impl ScanConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config.with_defaults())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fills in the model-dependent default occupation.
    pub fn with_defaults(mut self) -> Self {
        if self.occupation.is_none() {
            self.occupation = Some(match &self.model {
                ModelTemplate::Ring(_) => default_ring_occupation(),
                ModelTemplate::Ensemble(e) => OccupationSpec::Microcanonical { index: e.size / 2 },
            });
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.grid.is_empty() {
            return bad("grid must not be empty".into());
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return bad("grid values must be finite".into());
        }
        if self.realizations < 1 {
            return bad("realizations must be >= 1".into());
        }
        if self.window_size < 2 {
            return bad("window_size must be >= 2".into());
        }
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive".into());
        }
        if !(self.driving.rms_drive > 0.0) || !(self.driving.cutoff_band >= 1.0) {
            return bad("driving needs rms_drive > 0 and cutoff_band >= 1".into());
        }
        let size = match &self.model {
            ModelTemplate::Ring(r) => {
                r.validate().map_err(|e| Error::Config(e.to_string()))?;
                r.sites()
            }
            ModelTemplate::Ensemble(e) => {
                e.validate().map_err(|e| Error::Config(e.to_string()))?;
                e.size
            }
        };
        match (self.scan_parameter, &self.model) {
            (ScanParameter::DisorderW, ModelTemplate::Ensemble(_)) => {
                return bad("disorder_w scans need a ring model".into())
            }
            (ScanParameter::SpreadSigma, ModelTemplate::Ring(_)) => {
                return bad("spread_sigma scans need an ensemble model".into())
            }
            (ScanParameter::DisorderW | ScanParameter::SpreadSigma, _) if self.grid.iter().any(|&v| v < 0.0) => {
                return bad("grid values must be >= 0".into())
            }
            (ScanParameter::BandBc, _) if self.grid.iter().any(|&v| v < 1.0) => {
                return bad("band grid values must be >= 1".into())
            }
            (ScanParameter::WindowCenter, _) => {
                if self.grid.iter().any(|&v| v < 0.0 || v.fract() != 0.0 || v as usize >= size) {
                    return bad(format!("window centers must be level indices below {size}"));
                }
                if matches!(self.occupation, Some(OccupationSpec::Boltzmann { .. })) {
                    return bad("window_center scans need a microcanonical or Fermi occupation".into());
                }
            }
            _ => {}
        }
        if let Some(OccupationSpec::Microcanonical { index }) = self.occupation {
            if index >= size {
                return bad(format!("microcanonical index {index} outside {size} levels"));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form,
    /// leaving out where and how artifacts are written.
    pub fn content_hash(&self) -> String {
        let mut physics = self.clone();
        physics.output_dir = PathBuf::new();
        physics.svg = true;
        let canonical = serde_json::to_string(&physics).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn evaluation(&self, value: f64) -> Evaluation {
        let mut eval = Evaluation {
            driving: self.driving.clone(),
            occupation: self.occupation.unwrap_or_else(default_ring_occupation),
            center_index: None,
            window_size: self.window_size,
            placement: self.placement,
            kappa: self.kappa,
        };
        match self.scan_parameter {
            ScanParameter::BandBc => eval.driving.cutoff_band = value,
            ScanParameter::WindowCenter => eval.center_index = Some(value as usize),
            _ => {}
        }
        eval
    }

    /// Runs one grid point and realization; realization `r` uses seed
    /// `seed + r` at every grid point.
    pub fn evaluate(&self, value: f64, realization: usize) -> Result<ResponseResult> {
        let seed = self.realization_seed(realization);
        let eval = self.evaluation(value);
        match &self.model {
            ModelTemplate::Ring(template) => {
                let mut spec = template.clone();
                spec.seed = seed;
                if self.scan_parameter == ScanParameter::DisorderW {
                    spec.disorder = value;
                }
                evaluate_ring(&spec, &eval)
            }
            ModelTemplate::Ensemble(template) => {
                let mut spec = template.clone();
                spec.seed = seed;
                if self.scan_parameter == ScanParameter::SpreadSigma {
                    spec.spread_sigma = value;
                }
                evaluate_ensemble(&spec, &eval)
            }
        }
    }

    pub fn realization_seed(&self, realization: usize) -> u64 {
        self.seed.wrapping_add(realization as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanFailure {
    pub param: f64,
    pub realization: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub param: f64,
    pub realization: usize,
    pub seed: u64,
    pub result: ResponseResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ScanConfig,
    pub content_hash: String,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub rows: usize,
    pub failures: Vec<ScanFailure>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
    pub manifest: Manifest,
}

impl ScanOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.manifest.failures.is_empty()
    }

    /// More than [`FAILURE_TOLERANCE`] of the realizations failed.
    pub fn failed(&self) -> bool {
        let total = self.rows.len() + self.manifest.failures.len();
        self.manifest.failures.len() as f64 > FAILURE_TOLERANCE * total as f64
    }
}

/// Worker count: [`THREADS_ENV`] if set, else the available parallelism.
pub fn worker_count() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(available)
}

/// CSV text with one row per successful realization, sorted by grid index
/// and realization.
pub fn results_csv(hash: &str, rows: &[ScanRow]) -> String {
    let mut out = ResponseResult::csv_header();
    out.push('\n');
    for row in rows {
        out.push_str(&row.result.csv_row(hash, row.param, row.seed));
        out.push('\n');
    }
    out
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    values.retain(|v| v.is_finite());
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Medians across realizations at each grid value.
pub fn median_curves(config: &ScanConfig, rows: &[ScanRow], pick: impl Fn(&ResponseResult) -> f64) -> Vec<(f64, f64)> {
    config
        .grid
        .iter()
        .filter_map(|&v| {
            let values: Vec<f64> = rows.iter().filter(|r| r.param == v).map(|r| pick(&r.result)).collect();
            median(values).map(|m| (v, m))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Evaluates every grid point and realization on a worker pool, then writes
/// `results.csv`, `manifest.json` and (optionally) median plots on linear and
/// logarithmic axes into the output directory.
pub fn run_scan(config: &ScanConfig) -> Result<ScanOutcome> {
    config.validate()?;
    let config = config.clone().with_defaults();
    let start = Instant::now();
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let tasks: Vec<(usize, usize)> = (0..config.grid.len())
        .flat_map(|g| (0..config.realizations).map(move |r| (g, r)))
        .collect();
    let threads = worker_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    // Indexed collection keeps the task order regardless of completion order.
    let outcomes: Vec<Result<ResponseResult>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, r)| config.evaluate(config.grid[g], r))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&(g, r), outcome) in tasks.iter().zip(outcomes) {
        let param = config.grid[g];
        let seed = config.realization_seed(r);
        match outcome {
            Ok(result) => rows.push(ScanRow {
                param,
                realization: r,
                seed,
                result,
            }),
            Err(e) => failures.push(ScanFailure {
                param,
                realization: r,
                seed,
                error: e.to_string(),
            }),
        }
    }

    let hash = config.content_hash();
    write_file(&dir.join("results.csv"), &results_csv(&hash, &rows))?;
    let mut files = vec!["results.csv".to_string()];

    if config.svg {
        let (quantity, lrt, slrt): (&str, fn(&ResponseResult) -> f64, fn(&ResponseResult) -> f64) =
            match config.model {
                ModelTemplate::Ring(_) => ("G", |r| r.g_lrt, |r| r.g_slrt),
                ModelTemplate::Ensemble(_) => ("D", |r| r.d_lrt, |r| r.d_slrt),
            };
        for (log_y, name) in [(false, "plot_linear.svg"), (true, "plot_log.svg")] {
            let plot = LinePlot {
                title: format!("median {quantity} vs {}", config.scan_parameter.label()),
                x_label: config.scan_parameter.label().into(),
                y_label: quantity.into(),
                log_y,
                series: vec![
                    Series::new(format!("{quantity} LRT"), median_curves(&config, &rows, lrt)),
                    Series::new(format!("{quantity} SLRT"), median_curves(&config, &rows, slrt)),
                ],
            };
            write_file(&dir.join(name), &plot.render())?;
            files.push(name.into());
        }
    }

    files.push("manifest.json".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        content_hash: hash,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        threads,
        rows: rows.len(),
        failures,
        files,
    };
    write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(ScanOutcome { rows, manifest })
}

/// Sparsity report plus per-distance mean and median.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixAnalysis {
    pub size: usize,
    pub window: BandWindow,
    pub sparsity: SparsityReport,
    pub by_range: Vec<RangeStatistics>,
}

pub fn analyze(x: &CouplingMatrix, window: &BandWindow) -> Result<MatrixAnalysis> {
    Ok(MatrixAnalysis {
        size: x.size(),
        window: *window,
        sparsity: sparsity_measures(x, window)?,
        by_range: range_statistics(x, window)?,
    })
}

/// Reads a coupling-matrix CSV and writes `report.json` and, with `svg`,
/// `histogram.svg` (mean and median markers) and `profile.svg` into `out`.
pub fn analyze_matrix(input: &Path, window: &BandWindow, out: &Path, svg: bool) -> Result<MatrixAnalysis> {
    let x = CouplingMatrix::read_csv(input)?;
    let report = analyze(&x, window)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    if svg {
        let s = &report.sparsity;
        let hist = histogram_svg(
            "in-band elements",
            &s.histogram,
            &[("mean", s.mean), ("median", s.median)],
        );
        write_file(&out.join("histogram.svg"), &hist)?;
        let points = |f: fn(&RangeStatistics) -> f64| -> Vec<(f64, f64)> {
            report.by_range.iter().map(|st| (st.r as f64, f(st))).collect()
        };
        let plot = LinePlot {
            title: "mean and median vs r".into(),
            x_label: "r".into(),
            y_label: "X".into(),
            log_y: true,
            series: vec![
                Series::new("mean", points(|st| st.mean)),
                Series::new("median", points(|st| st.median)),
            ],
        };
        write_file(&out.join("profile.svg"), &plot.render())?;
    }
    Ok(report)
}

/// One-shot averages of a matrix file with a rectangular band `b_c`.
pub fn average_matrix(input: &Path, shape: LineShape, cutoff_band: f64) -> Result<AverageReport> {
    let x = CouplingMatrix::read_csv(input)?;
    let f = SpectralWeight::single(1.0, shape, cutoff_band, 1.0)?;
    average_report(&x, &f)
}

/// Cross-check of spreading against the network average on seeded sparse
/// ensembles used directly as rate networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "oracle_size")]
    pub size: usize,
    #[serde(default = "oracle_band")]
    pub band: usize,
    #[serde(default = "oracle_sigma")]
    pub spread_sigma: f64,
    #[serde(default = "oracle_networks")]
    pub networks: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "oracle_tolerance")]
    pub tolerance: f64,
}

fn oracle_size() -> usize {
    400
}

fn oracle_band() -> usize {
    10
}

fn oracle_sigma() -> f64 {
    2.0
}

fn oracle_networks() -> usize {
    20
}

fn oracle_tolerance() -> f64 {
    0.15
}

impl Default for OracleConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.networks < 1 {
            return Err(Error::Config("networks must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        EnsembleSpec::flat(self.size, self.band, self.spread_sigma, 0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub seed: u64,
    pub spreading: f64,
    pub network: f64,
    pub relative_deviation: f64,
    pub fit_window: (f64, f64),
    pub saturated: bool,
    pub within_tolerance: bool,
}

/// Rate network `w_nm = X_nm` of one seeded ensemble.
pub fn oracle_network(config: &OracleConfig, seed: u64) -> Result<RateNetwork> {
    let spec = EnsembleSpec::flat(config.size, config.band, config.spread_sigma, seed);
    let model = build_sparse_ensemble(&spec)?;
    RateNetwork::from_matrix(model.coupling.as_matrix().clone())
}

/// Spreading from the middle level versus the four-probe network value.
pub fn oracle_case(w: &RateNetwork, seed: u64, tolerance: f64) -> Result<(OracleCase, crate::SpreadingResult)> {
    let n0 = w.size() / 2;
    let spreading = spreading_diffusion(w, n0, suggested_horizon(w))?;
    let network = inverse_resistivity_with(&w.to_network(), ProbePlacement::Interior)?.inverse_resistivity;
    let dev = if network > 0.0 {
        (spreading.fitted_diffusion - network).abs() / network
    } else if spreading.fitted_diffusion == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((
        OracleCase {
            seed,
            spreading: spreading.fitted_diffusion,
            network,
            relative_deviation: dev,
            fit_window: spreading.fit_window,
            saturated: spreading.saturated,
            within_tolerance: dev <= tolerance,
        },
        spreading,
    ))
}

/// Runs all oracle cases, writing per-network spreading CSV and JSON plus a
/// `oracle.json` summary into `out`.
pub fn run_oracle(config: &OracleConfig, out: &Path) -> Result<Vec<OracleCase>> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<(OracleCase, crate::SpreadingResult)>> = pool.install(|| {
        (0..config.networks)
            .into_par_iter()
            .map(|k| {
                let seed = config.seed.wrapping_add(k as u64);
                oracle_case(&oracle_network(config, seed)?, seed, config.tolerance)
            })
            .collect()
    });
    let mut cases = Vec::new();
    for r in results {
        let (case, spreading) = r?;
        spreading.write(out, &format!("spreading_{}", case.seed))?;
        cases.push(case);
    }
    write_file(&out.join("oracle.json"), &serde_json::to_string_pretty(&cases)?)?;
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ensemble_config(dir: &Path) -> ScanConfig {
        ScanConfig::from_json(&format!(
            r#"{{
                "model": {{"ensemble": {{"size": 60, "band": 4, "spread_sigma": 0.0}}}},
                "scan_parameter": "spread_sigma",
                "grid": [0.0, 2.0, 4.0],
                "realizations": 2,
                "window_size": 40,
                "driving": {{"cutoff_band": 4}},
                "output_dir": {:?}
            }}"#,
            dir.display().to_string()
        ))
        .unwrap()
    }

    #[test]
    fn scan_writes_sorted_rows_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let config = ensemble_config(dir.path());
        let out = run_scan(&config).unwrap();
        assert!(out.all_succeeded());
        let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].starts_with("spec_hash,param,seed,D_LRT"));
        assert!(lines[1].contains(",0,0,"));
        assert!(lines[6].contains(",4,1,"));
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["rows"], 6);
        assert_eq!(manifest["config"]["window_size"], 40);
        assert!(dir.path().join("plot_log.svg").exists());
    }

    #[test]
    fn ensemble_reference_matches_flat_band() {
        // Flat B and rectangular F over the whole band: sum_r F B = 1.
        let spec = EnsembleSpec::flat(100, 10, 0.0, 0);
        let s = DrivingSpec::default().weight(1.0).unwrap();
        assert!((ensemble_reference(&spec, &s) - PI).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let cases = [
            r#"{"model": {"ensemble": {"size": 60, "band": 4, "spread_sigma": 0}}, "scan_parameter": "spread_sigma", "grid": []}"#,
            r#"{"model": {"ensemble": {"size": 60, "band": 4, "spread_sigma": 0}}, "scan_parameter": "disorder_w", "grid": [1]}"#,
            r#"{"model": {"ensemble": {"size": 60, "band": 4, "spread_sigma": 0}}, "scan_parameter": "spread_sigma", "grid": [1], "realizations": 0}"#,
            r#"{"model": {"ring": {"length": 10, "width": 2, "hopping": 1, "disorder": 1}}, "scan_parameter": "window_center", "grid": [25]}"#,
            r#"{"model": {"ring": {"length": 10, "width": 2, "hopping": 1, "disorder": 1}}, "scan_parameter": "disorder_w", "grid": [1], "colour": 1}"#,
        ];
        for text in cases {
            assert!(matches!(ScanConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn content_hash_tracks_config() {
        let dir = tempfile::tempdir().unwrap();
        let a = ensemble_config(dir.path());
        let mut b = a.clone();
        assert_eq!(a.content_hash(), b.content_hash());
        b.output_dir = PathBuf::from("elsewhere");
        b.svg = false;
        assert_eq!(a.content_hash(), b.content_hash());
        b.seed = 1;
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 16);
    }

    #[test]
    fn ring_evaluation_reports_drude_reference() {
        let spec = RingSpec::new(30, 2, 1.0, 1.0, 3);
        let mut eval = Evaluation::ring_default();
        eval.window_size = 30;
        eval.driving.cutoff_band = 4.0;
        let r = evaluate_ring(&spec, &eval).unwrap();
        assert!((r.reference - 2.0 / (2.0 * PI * 30.0)).abs() < 1e-15);
        assert!(r.g_slrt <= r.g_lrt * (1.0 + 1e-9));
        assert!((r.ear_lrt - r.g_lrt).abs() < 1e-15);
    }

    #[test]
    fn analysis_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let model = build_sparse_ensemble(&EnsembleSpec::flat(50, 5, 4.0, 2)).unwrap();
        let path = dir.path().join("x.csv");
        model.coupling.write_csv(&path).unwrap();
        let window = BandWindow::whole(50, 1, 5);
        let report = analyze_matrix(&path, &window, dir.path(), true).unwrap();
        assert_eq!(report, analyze(&model.coupling, &window).unwrap());
        assert!(dir.path().join("histogram.svg").exists());
    }
}
