//! Level sets, squared-coupling matrices, driving band weights and the
//! diagnostics used to decide whether a perturbation matrix is "sparse".
//!
//! A coupling matrix `X` holds `|V_nm|^2` for an unperturbed spectrum `E_n`.
//! Everything downstream (rates, averages, conductances) reads it through
//! the integer level distance `r = n - m`, so the band weight `F(r)` lives
//! here as well.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a stored density agrees with
/// the level span.
const DENSITY_SLACK: f64 = 0.2;

/// Ordered unperturbed energies together with their mean density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    energies: Vec<f64>,
    density: f64,
}

impl LevelSet {
    /// Builds a level set and derives the density from the span of the levels.
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        check_ordered(&energies)?;
        let span = energies[energies.len() - 1] - energies[0];
        if !(span > 0.0) {
            return Err(Error::Argument(
                "level set spans zero energy; density is undefined".into(),
            ));
        }
        let density = (energies.len() - 1) as f64 / span;
        Ok(Self { energies, density })
    }

    /// Builds a level set with an externally supplied density, which must
    /// agree with the span of the levels to within 20%.
    pub fn with_density(energies: Vec<f64>, density: f64) -> Result<Self> {
        let derived = Self::new(energies)?;
        if !(density > 0.0) || ((density - derived.density) / derived.density).abs() > DENSITY_SLACK
        {
            return Err(Error::Argument(format!(
                "density {density} disagrees with level span (expected ~{})",
                derived.density
            )));
        }
        Ok(Self {
            energies: derived.energies,
            density,
        })
    }

    /// `n` levels `E_k = k * spacing`.
    pub fn uniform(n: usize, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Argument("level spacing must be positive".into()));
        }
        Self::new((0..n).map(|k| k as f64 * spacing).collect())
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.energies[n]
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn bandwidth(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }

    /// Levels `range`, with the density recomputed from the sub-span.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() {
            return Err(Error::Dimension(format!(
                "level range {range:?} exceeds {} levels",
                self.len()
            )));
        }
        Self::new(self.energies[range].to_vec())
    }

    /// Index of the level closest to `energy`.
    pub fn nearest_index(&self, energy: f64) -> usize {
        let pos = self.energies.partition_point(|&e| e < energy);
        if pos == 0 {
            0
        } else if pos == self.len() {
            pos - 1
        } else if (self.energies[pos] - energy).abs() < (energy - self.energies[pos - 1]).abs() {
            pos
        } else {
            pos - 1
        }
    }
}

fn check_ordered(energies: &[f64]) -> Result<()> {
    if energies.len() < 2 {
        return Err(Error::Argument("a level set needs at least two levels".into()));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Argument("non-finite energy".into()));
    }
    if let Some(k) = energies.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Argument(format!(
            "energies decrease between levels {k} and {}",
            k + 1
        )));
    }
    Ok(())
}

/// Symmetric, nonnegative matrix of squared couplings `|V_nm|^2` with a zero
/// diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    elements: DMatrix<f64>,
}

/// First line of the dense CSV serialization.
pub const CSV_MAGIC: &str = "slrt-coupling v1";

impl CouplingMatrix {
    /// Validates symmetry, a zero diagonal and nonnegative finite entries.
    pub fn from_matrix(elements: DMatrix<f64>) -> Result<Self> {
        let n = elements.nrows();
        if n == 0 || elements.ncols() != n {
            return Err(Error::Dimension(format!(
                "coupling matrix must be square and nonempty, got {}x{}",
                n,
                elements.ncols()
            )));
        }
        for i in 0..n {
            if elements[(i, i)] != 0.0 {
                return Err(Error::Argument(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let v = elements[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Argument(format!("element ({i},{j}) = {v} is not >= 0")));
                }
                if v != elements[(j, i)] {
                    return Err(Error::Argument(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { elements })
    }

    /// Builds from the upper triangle: `f(n, m)` is called once for each
    /// `n < m` and mirrored.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut elements = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                elements[(i, j)] = v;
                elements[(j, i)] = v;
            }
        }
        Self::from_matrix(elements)
    }

    /// Averages `m` with its transpose and clears the diagonal before
    /// validating. Used for matrices assembled from floating-point products.
    pub fn symmetrized(mut m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Dimension("matrix is not square".into()));
        }
        for i in 0..n {
            m[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self::from_matrix(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            elements: DMatrix::zeros(n, n),
        }
    }

    pub fn size(&self) -> usize {
        self.elements.nrows()
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.elements[(n, m)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.elements
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::Argument(format!("scale factor {factor} must be >= 0")));
        }
        Ok(Self {
            elements: &self.elements * factor,
        })
    }

    /// Principal sub-matrix on `range`.
    pub fn submatrix(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.size() || range.start >= range.end {
            return Err(Error::Dimension(format!(
                "sub-matrix {range:?} outside size {}",
                self.size()
            )));
        }
        let len = range.end - range.start;
        Ok(Self {
            elements: self.elements.view((range.start, range.start), (len, len)).into_owned(),
        })
    }

    pub fn to_csv_string(&self) -> String {
        let n = self.size();
        let mut out = format!("{CSV_MAGIC}, N={n}\n");
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{}", self.elements[(i, j)]).expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    /// Parses the dense CSV format. Errors carry the 1-based line number.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty input".into(),
                })
            }
        };
        let n = parse_header(&header)?;
        let mut elements = DMatrix::zeros(n, n);
        let mut row = 0;
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            if row == n {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("more than {n} data rows"),
                });
            }
            let mut count = 0;
            for (col, field) in line.split(',').enumerate() {
                if col >= n {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("more than {n} columns"),
                    });
                }
                elements[(row, col)] = field.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("column {}: {e}", col + 1),
                })?;
                count += 1;
            }
            if count != n {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {n} columns, found {count}"),
                });
            }
            row += 1;
        }
        if row != n {
            return Err(Error::Parse {
                line: row + 2,
                message: format!("expected {n} data rows, found {row}"),
            });
        }
        Self::from_matrix(elements).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }
}

fn parse_header(header: &str) -> Result<usize> {
    let bad = |message: String| Error::Parse { line: 1, message };
    let rest = header
        .trim()
        .strip_prefix(CSV_MAGIC)
        .ok_or_else(|| bad(format!("expected header starting with '{CSV_MAGIC}'")))?;
    let size = rest
        .trim_start_matches(',')
        .trim()
        .strip_prefix("N=")
        .ok_or_else(|| bad("header lacks 'N=<n>'".into()))?;
    let n: usize = size
        .trim()
        .parse()
        .map_err(|e| bad(format!("bad matrix size: {e}")))?;
    if n == 0 {
        return Err(bad("matrix size must be positive".into()));
    }
    Ok(n)
}

/// Line shape of the broadened delta function describing the spectral
/// content of the driving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    /// Flat for `|r| <= b_c`.
    #[default]
    Rectangular,
    /// Half width `b_c`, truncated at `|r| = 100 b_c`.
    Lorentzian,
    /// Standard deviation `b_c`, truncated at `|r| = 6 b_c`.
    Gaussian,
}

/// Truncation of the Lorentzian tail, in units of its half width.
pub const LORENTZIAN_TRUNCATION: f64 = 100.0;
/// Truncation of the Gaussian tail, in units of its width.
pub const GAUSSIAN_TRUNCATION: f64 = 6.0;

const EDGE_EPS: f64 = 1e-9;

impl LineShape {
    fn support(self, scale: f64) -> usize {
        match self {
            LineShape::Rectangular => (scale + EDGE_EPS).floor() as usize,
            LineShape::Lorentzian => (LORENTZIAN_TRUNCATION * scale).ceil() as usize,
            LineShape::Gaussian => (GAUSSIAN_TRUNCATION * scale).ceil() as usize,
        }
    }

    fn profile(self, x: f64, scale: f64, support: usize) -> f64 {
        let ax = x.abs();
        if ax > support as f64 + EDGE_EPS {
            return 0.0;
        }
        match self {
            LineShape::Rectangular => 1.0,
            LineShape::Lorentzian => 1.0 / (1.0 + (x / scale).powi(2)),
            LineShape::Gaussian => (-0.5 * (x / scale).powi(2)).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Component {
    shape: LineShape,
    scale: f64,
    support: usize,
    /// Share of the total mean-square drive carried by this component, times
    /// the normalization of its profile on the integers `r != 0`.
    amplitude: f64,
}

/// Driving intensity and normalized band weight `F(r)`.
///
/// The power spectrum is `S(w) = 2 pi rms^2 delta_c(w)` with
/// `delta_c(w) = rho * f(rho w)`, where `f` is the continuous line shape
/// whose values on nonzero integers are `F(r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralWeight {
    rms_drive: f64,
    density: f64,
    components: Vec<Component>,
    /// `F(r)` for `r = 1, 2, ...`; `F(-r) = F(r)`.
    table: Vec<f64>,
}

impl SpectralWeight {
    /// Single line shape with dimensionless width `band = rho * omega_c`.
    pub fn single(rms_drive: f64, shape: LineShape, band: f64, density: f64) -> Result<Self> {
        if !(rms_drive > 0.0) || !rms_drive.is_finite() {
            return Err(Error::Argument(format!("rms drive {rms_drive} must be positive")));
        }
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::Argument(format!("density {density} must be positive")));
        }
        if !(band + EDGE_EPS >= 1.0) || !band.is_finite() {
            return Err(Error::Argument(format!(
                "band b_c = {band} is narrower than one level spacing"
            )));
        }
        let support = shape.support(band);
        let raw: Vec<f64> = (1..=support)
            .map(|r| shape.profile(r as f64, band, support))
            .collect();
        let total = 2.0 * raw.iter().sum::<f64>();
        let amplitude = 1.0 / total;
        Ok(Self {
            rms_drive,
            density,
            components: vec![Component {
                shape,
                scale: band,
                support,
                amplitude,
            }],
            table: raw.into_iter().map(|v| v * amplitude).collect(),
        })
    }

    pub fn rms_drive(&self) -> f64 {
        self.rms_drive
    }

    /// Mean-square drive, the prefactor of the power spectrum.
    pub fn mean_square_drive(&self) -> f64 {
        self.rms_drive * self.rms_drive
    }

    /// Density used to convert energies to level distances.
    pub fn density(&self) -> f64 {
        self.density
    }

    /// Nominal dimensionless band width `b_c` (largest over components).
    pub fn cutoff_band(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.scale)
            .fold(0.0, f64::max)
    }

    /// Largest `|r|` with nonzero weight.
    pub fn max_range(&self) -> usize {
        self.table.len()
    }

    /// `F(r)`; zero for `r = 0` and outside the support.
    pub fn weight(&self, r: i64) -> f64 {
        let k = r.unsigned_abs() as usize;
        if k == 0 || k > self.table.len() {
            0.0
        } else {
            self.table[k - 1]
        }
    }

    /// `F(r)` for `r = 1..=max_range()`.
    pub fn weights(&self) -> &[f64] {
        &self.table
    }

    /// Broadened delta function `delta_c(omega)`, normalized over energy.
    pub fn delta_c(&self, omega: f64) -> f64 {
        let x = self.density * omega;
        self.density
            * self
                .components
                .iter()
                .map(|c| c.amplitude * c.shape.profile(x, c.scale, c.support))
                .sum::<f64>()
    }

    /// Power spectrum `S(omega) = 2 pi rms^2 delta_c(omega)`.
    pub fn power(&self, omega: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.mean_square_drive() * self.delta_c(omega)
    }

    /// Same line shape with the power spectrum multiplied by `factor`.
    pub fn with_power_scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Argument(format!("power factor {factor} must be positive")));
        }
        let mut out = self.clone();
        out.rms_drive = self.rms_drive * factor.sqrt();
        Ok(out)
    }

    /// Power spectrum of two independent sources, `S_a + S_b`.
    pub fn combined(&self, other: &Self) -> Result<Self> {
        if ((self.density - other.density) / self.density).abs() > 1e-12 {
            return Err(Error::Argument(
                "cannot combine spectral weights built for different densities".into(),
            ));
        }
        let pa = self.mean_square_drive();
        let pb = other.mean_square_drive();
        let total = pa + pb;
        let (fa, fb) = (pa / total, pb / total);
        let mut components: Vec<Component> = self
            .components
            .iter()
            .map(|c| Component {
                amplitude: c.amplitude * fa,
                ..c.clone()
            })
            .collect();
        components.extend(other.components.iter().map(|c| Component {
            amplitude: c.amplitude * fb,
            ..c.clone()
        }));
        let len = self.table.len().max(other.table.len());
        let table = (1..=len as i64)
            .map(|r| fa * self.weight(r) + fb * other.weight(r))
            .collect();
        Ok(Self {
            rms_drive: total.sqrt(),
            density: self.density,
            components,
            table,
        })
    }
}

/// Square block of levels `[center - half, center + half)`, clipped to the
/// matrix, restricted to level distances `min_r <= |n - m| <= max_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandWindow {
    pub center_index: usize,
    pub half_size: usize,
    pub min_r: usize,
    pub max_r: usize,
}

impl BandWindow {
    pub fn new(center_index: usize, half_size: usize, min_r: usize, max_r: usize) -> Self {
        Self {
            center_index,
            half_size,
            min_r,
            max_r,
        }
    }

    /// Window covering all `n` levels.
    pub fn whole(n: usize, min_r: usize, max_r: usize) -> Self {
        Self::new(n / 2, n.div_ceil(2), min_r, max_r)
    }

    /// Window of `size` consecutive levels centered as close to `center` as
    /// the matrix allows, with all level distances admitted.
    pub fn centered(n: usize, center: usize, size: usize) -> Self {
        let size = size.min(n).max(2);
        let half = size / 2;
        let start = center.saturating_sub(half).min(n - size);
        Self::new(start + half, half + size % 2, 1, usize::MAX)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.half_size == 0 {
            return Err(Error::Argument("window half size must be >= 1".into()));
        }
        if self.min_r < 1 || self.min_r > self.max_r {
            return Err(Error::Argument(format!(
                "window requires 1 <= min_r <= max_r, got {}..{}",
                self.min_r, self.max_r
            )));
        }
        if self.center_index >= n {
            return Err(Error::Dimension(format!(
                "window center {} outside {n} levels",
                self.center_index
            )));
        }
        if self.range(n).len() < 2 {
            return Err(Error::Argument("window holds fewer than two levels".into()));
        }
        Ok(())
    }

    /// Level indices covered by the window in a matrix of size `n`.
    pub fn range(&self, n: usize) -> std::ops::Range<usize> {
        let start = self.center_index.saturating_sub(self.half_size);
        let end = (self.center_index + self.half_size).min(n);
        start..end
    }

    fn admits(&self, r: usize) -> bool {
        r >= self.min_r && r <= self.max_r
    }

    /// In-band elements `X_nm`, `n < m`, in row-major order.
    pub fn elements(&self, x: &CouplingMatrix) -> Vec<f64> {
        let range = self.range(x.size());
        let mut out = Vec::new();
        for i in range.clone() {
            for j in (i + 1)..range.end {
                if self.admits(j - i) {
                    out.push(x.get(i, j));
                }
            }
        }
        out
    }
}

/// Logarithmically binned counts of in-band elements. Zeros fall outside any
/// logarithmic bin and are counted separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHistogram {
    /// Bin edges, `counts.len() + 1` values.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub zero_count: usize,
}

impl LogHistogram {
    pub fn build(values: &[f64], bins: usize) -> Self {
        let positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
        let zero_count = values.len() - positive.len();
        if positive.is_empty() {
            return Self {
                edges: Vec::new(),
                counts: Vec::new(),
                zero_count,
            };
        }
        let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = positive.iter().copied().fold(0.0, f64::max);
        if hi <= lo * (1.0 + 1e-12) {
            return Self {
                edges: vec![lo, hi],
                counts: vec![positive.len()],
                zero_count,
            };
        }
        let bins = bins.max(1);
        let (llo, lhi) = (lo.log10(), hi.log10());
        let step = (lhi - llo) / bins as f64;
        let edges = (0..=bins)
            .map(|k| 10f64.powf(llo + step * k as f64))
            .collect();
        let mut counts = vec![0; bins];
        for v in positive {
            let k = (((v.log10() - llo) / step) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self {
            edges,
            counts,
            zero_count,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.zero_count
    }

    /// Geometric center of the most populated bin.
    pub fn peak(&self) -> Option<f64> {
        let (k, _) = self
            .counts
            .iter()
            .enumerate()
            .max_by_key(|&(k, &c)| (c, std::cmp::Reverse(k)))?;
        Some((self.edges[k] * self.edges[k + 1]).sqrt())
    }
}

/// Sparsity descriptors of the in-band elements of a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub count: usize,
    pub mean: f64,
    /// Lower median.
    pub median: f64,
    /// `median / mean`; zero when every element vanishes.
    pub q_ratio: f64,
    /// `(sum x)^2 / (count * sum x^2)`; `None` when every element vanishes.
    pub participation: Option<f64>,
    pub all_zero: bool,
    pub histogram: LogHistogram,
}

/// Default number of logarithmic histogram bins.
pub const DEFAULT_HISTOGRAM_BINS: usize = 24;

pub fn sparsity_measures(x: &CouplingMatrix, window: &BandWindow) -> Result<SparsityReport> {
    sparsity_measures_with_bins(x, window, DEFAULT_HISTOGRAM_BINS)
}

pub fn sparsity_measures_with_bins(
    x: &CouplingMatrix,
    window: &BandWindow,
    bins: usize,
) -> Result<SparsityReport> {
    window.validate(x.size())?;
    let values = window.elements(x);
    if values.is_empty() {
        return Err(Error::Argument("window contains no in-band elements".into()));
    }
    let count = values.len();
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    let mean = sum / count as f64;
    let median = lower_median(&values);
    let all_zero = sum == 0.0;
    Ok(SparsityReport {
        count,
        mean,
        median,
        q_ratio: if all_zero { 0.0 } else { median / mean },
        participation: (!all_zero).then(|| sum * sum / (count as f64 * sum_sq)),
        all_zero,
        histogram: LogHistogram::build(&values, bins),
    })
}

/// Lower median: element of rank `(k - 1) / 2` in ascending order.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[(sorted.len() - 1) / 2]
}

/// Mean and median of the in-window elements at one distance `r = |n - m|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeStatistics {
    pub r: usize,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
}

/// [`RangeStatistics`] for every admitted `r` of `window` that has elements.
pub fn range_statistics(x: &CouplingMatrix, window: &BandWindow) -> Result<Vec<RangeStatistics>> {
    window.validate(x.size())?;
    let range = window.range(x.size());
    let max_r = window.max_r.min(range.len().saturating_sub(1));
    Ok((window.min_r.max(1)..=max_r)
        .filter_map(|r| {
            let values: Vec<f64> = (range.start..range.end - r)
                .map(|i| x.get(i, i + r))
                .collect();
            if values.is_empty() {
                return None;
            }
            Some(RangeStatistics {
                r,
                count: values.len(),
                mean: values.iter().sum::<f64>() / values.len() as f64,
                median: lower_median(&values),
            })
        })
        .collect())
}

/// One bin of the occupation-weighted band profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub omega: f64,
    pub value: f64,
}

/// Occupation-weighted spectral function
/// `C(w) = sum_n p_n sum_m X_nm 2 pi delta(w - (E_m - E_n))`, histogrammed
/// into bins of width `bin_width` centered on integer multiples of it
/// (default: one mean level spacing). Bin values are densities, so
/// `sum(value) * bin_width = 2 pi sum_nm p_n X_nm`.
pub fn band_profile(
    x: &CouplingMatrix,
    levels: &LevelSet,
    occupation: &[f64],
    bin_width: Option<f64>,
) -> Result<Vec<ProfileBin>> {
    let n = x.size();
    if levels.len() != n || occupation.len() != n {
        return Err(Error::Dimension(format!(
            "matrix {n}, levels {}, occupation {}",
            levels.len(),
            occupation.len()
        )));
    }
    let total: f64 = occupation.iter().sum();
    if (total - 1.0).abs() > 1e-12 || occupation.iter().any(|&p| p < 0.0) {
        return Err(Error::Argument("occupation must be a normalized distribution".into()));
    }
    let width = bin_width.unwrap_or(1.0 / levels.density());
    if !(width > 0.0) {
        return Err(Error::Argument("bin width must be positive".into()));
    }

    let e = levels.energies();
    let bin_of = |i: usize, j: usize| ((e[j] - e[i]) / width).round() as i64;
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for i in 0..n {
        if occupation[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if j != i {
                let k = bin_of(i, j);
                lo = lo.min(k);
                hi = hi.max(k);
            }
        }
    }
    if lo > hi {
        return Ok(Vec::new());
    }
    let mut acc = vec![0.0; (hi - lo + 1) as usize];
    let two_pi = 2.0 * std::f64::consts::PI;
    for i in 0..n {
        let p = occupation[i];
        if p == 0.0 {
            continue;
        }
        for j in 0..n {
            if j != i {
                acc[(bin_of(i, j) - lo) as usize] += p * x.get(i, j);
            }
        }
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(k, s)| ProfileBin {
            omega: (lo + k as i64) as f64 * width,
            value: two_pi * s / width,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> CouplingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CouplingMatrix::from_upper(n, |_, _| rng.random::<f64>()).unwrap()
    }

    #[test]
    fn level_set_density_from_span() {
        let levels = LevelSet::uniform(11, 0.5).unwrap();
        assert_relative_eq!(levels.density(), 2.0);
        assert!(LevelSet::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(LevelSet::with_density(levels.energies().to_vec(), 3.0).is_err());
        assert!(LevelSet::with_density(levels.energies().to_vec(), 2.2).is_ok());
        assert_eq!(levels.nearest_index(2.6), 5);
    }

    #[test]
    fn coupling_matrix_rejects_bad_input() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        assert!(CouplingMatrix::from_matrix(m.clone()).is_err());
        m[(1, 0)] = 1.0;
        assert!(CouplingMatrix::from_matrix(m.clone()).is_ok());
        m[(2, 2)] = 0.5;
        assert!(CouplingMatrix::from_matrix(m.clone()).is_err());
        m[(2, 2)] = 0.0;
        m[(0, 2)] = -1.0;
        m[(2, 0)] = -1.0;
        assert!(CouplingMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let x = random_matrix(7, 3);
        let text = x.to_csv_string();
        assert!(text.starts_with("slrt-coupling v1, N=7\n"));
        let back = CouplingMatrix::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn csv_errors_report_line_numbers() {
        let text = "slrt-coupling v1, N=2\n0,1\n1,zz\n";
        match CouplingMatrix::from_csv_reader(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "slrt-coupling v1, N=2\n0,1\n";
        assert!(matches!(
            CouplingMatrix::from_csv_reader(text.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let text = "matrix, N=2\n0,1\n1,0\n";
        assert!(matches!(
            CouplingMatrix::from_csv_reader(text.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rectangular_weight_is_uniform() {
        let f = SpectralWeight::single(1.0, LineShape::Rectangular, 3.0, 1.0).unwrap();
        for r in [-3, -2, -1, 1, 2, 3] {
            assert_relative_eq!(f.weight(r), 1.0 / 6.0, max_relative = 1e-15);
        }
        assert_eq!(f.weight(0), 0.0);
        assert_eq!(f.weight(4), 0.0);
    }

    #[test]
    fn combined_weights_stay_normalized() {
        let a = SpectralWeight::single(1.0, LineShape::Rectangular, 3.0, 1.0).unwrap();
        let b = SpectralWeight::single(2.0, LineShape::Gaussian, 5.0, 1.0).unwrap();
        let c = a.combined(&b).unwrap();
        assert_relative_eq!(c.mean_square_drive(), 5.0, max_relative = 1e-15);
        let sum: f64 = 2.0 * c.weights().iter().sum::<f64>();
        assert_relative_eq!(sum, 1.0, max_relative = 1e-12);
        // The continuous line shape agrees with the table on integers.
        for r in 1..20 {
            assert_relative_eq!(c.delta_c(r as f64), c.weight(r), max_relative = 1e-12);
        }
    }

    #[test]
    fn sparsity_of_constant_elements() {
        let x = CouplingMatrix::from_upper(20, |_, _| 0.3).unwrap();
        let rep = sparsity_measures(&x, &BandWindow::whole(20, 1, 4)).unwrap();
        assert_relative_eq!(rep.mean, 0.3, max_relative = 1e-14);
        assert_eq!(rep.median, 0.3);
        assert_relative_eq!(rep.q_ratio, 1.0, max_relative = 1e-14);
        assert_relative_eq!(rep.participation.unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(rep.histogram.counts, vec![rep.count]);
    }

    #[test]
    fn sparsity_of_half_zero_elements() {
        // Nearest-neighbour band only, alternating 0 and 2x.
        let x = CouplingMatrix::from_upper(9, |i, j| {
            if j - i == 1 {
                if i % 2 == 0 {
                    0.0
                } else {
                    2.0
                }
            } else {
                0.0
            }
        })
        .unwrap();
        let rep = sparsity_measures(&x, &BandWindow::whole(9, 1, 1)).unwrap();
        assert_eq!(rep.count, 8);
        assert_eq!(rep.mean, 1.0);
        assert_eq!(rep.median, 0.0);
        assert_eq!(rep.participation, Some(0.5));
        assert_eq!(rep.histogram.zero_count, 4);
        assert_eq!(rep.histogram.total(), 8);
    }

    #[test]
    fn sparsity_of_zero_matrix_is_flagged() {
        let x = CouplingMatrix::zeros(6);
        let rep = sparsity_measures(&x, &BandWindow::whole(6, 1, 2)).unwrap();
        assert!(rep.all_zero);
        assert_eq!(rep.participation, None);
        assert_eq!((rep.mean, rep.median), (0.0, 0.0));
    }

    #[test]
    fn window_validation() {
        assert!(BandWindow::new(5, 3, 0, 2).validate(10).is_err());
        assert!(BandWindow::new(5, 3, 3, 2).validate(10).is_err());
        assert!(BandWindow::new(12, 3, 1, 2).validate(10).is_err());
        assert_eq!(BandWindow::whole(7, 1, 1).range(7), 0..7);
        assert_eq!(BandWindow::centered(200, 195, 100).range(200), 100..200);
        assert_eq!(BandWindow::centered(200, 3, 100).range(200), 0..100);
        assert_eq!(BandWindow::centered(200, 100, 100).range(200), 50..150);
    }

    #[test]
    fn band_profile_of_zero_matrix_vanishes() {
        let levels = LevelSet::uniform(10, 1.0).unwrap();
        let p = vec![0.1; 10];
        let bins = band_profile(&CouplingMatrix::zeros(10), &levels, &p, None).unwrap();
        assert!(!bins.is_empty());
        assert!(bins.iter().all(|b| b.value == 0.0));
    }

    #[test]
    fn band_profile_of_constant_matrix_is_flat() {
        let n = 41;
        let levels = LevelSet::uniform(n, 0.25).unwrap();
        let x = CouplingMatrix::from_upper(n, |_, _| 1.5).unwrap();
        let mut p = vec![0.0; n];
        p[20] = 1.0;
        let bins = band_profile(&x, &levels, &p, None).unwrap();
        assert_eq!(bins.len(), 41);
        let populated: Vec<f64> = bins.iter().filter(|b| b.omega != 0.0).map(|b| b.value).collect();
        let reference = populated[0];
        for v in populated {
            assert!(((v - reference) / reference).abs() < 1e-10);
        }
        let expected = 2.0 * std::f64::consts::PI * 1.5 / 0.25;
        assert_relative_eq!(reference, expected, max_relative = 1e-12);
    }

    /// Brute-force double sum over `(n, m)` pairs for one bin.
    fn brute_force_bin(x: &CouplingMatrix, e: &[f64], p: &[f64], lo: f64, hi: f64) -> f64 {
        let mut s = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            for (j, &ej) in e.iter().enumerate() {
                let w = ej - e[i];
                if i != j && w >= lo && w < hi {
                    s += pi * x.get(i, j);
                }
            }
        }
        2.0 * std::f64::consts::PI * s
    }

    #[test]
    fn band_profile_matches_brute_force() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut e: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
        e.sort_by(f64::total_cmp);
        let levels = LevelSet::new(e.clone()).unwrap();
        let x = random_matrix(n, 5);
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let z: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / z).collect();
        let width = 0.7;
        let bins = band_profile(&x, &levels, &p, Some(width)).unwrap();
        let mut total = 0.0;
        for b in &bins {
            let oracle = brute_force_bin(&x, &e, &p, b.omega - width / 2.0, b.omega + width / 2.0);
            let got = b.value * width;
            assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1e-300), "{got} vs {oracle}");
            total += got;
        }
        let all = brute_force_bin(&x, &e, &p, f64::NEG_INFINITY, f64::INFINITY);
        assert_relative_eq!(total, all, max_relative = 1e-12);
    }

    #[test]
    fn band_profile_checks_dimensions() {
        let levels = LevelSet::uniform(5, 1.0).unwrap();
        let x = CouplingMatrix::zeros(4);
        assert!(matches!(
            band_profile(&x, &levels, &[0.25; 4], None),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn range_statistics_per_distance() {
        let x = CouplingMatrix::from_upper(10, |i, j| (j - i) as f64 * if i % 2 == 0 { 1.0 } else { 3.0 }).unwrap();
        let stats = range_statistics(&x, &BandWindow::whole(10, 1, 3)).unwrap();
        assert_eq!(stats.len(), 3);
        assert_eq!(stats[0].r, 1);
        assert_eq!(stats[0].count, 9);
        assert_relative_eq!(stats[0].mean, (5.0 + 4.0 * 3.0) / 9.0, max_relative = 1e-14);
        assert_eq!(stats[0].median, 1.0);
        assert_eq!(stats[2].count, 7);
    }
}
