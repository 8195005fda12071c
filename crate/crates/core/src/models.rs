//! Model generators: a disordered tight-binding ring driven through its
//! flux, and artificial sparse banded ensembles. Also the kinetic reference
//! formulas (wall formula, Drude) the response is compared against.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{CouplingMatrix, LevelSet};

/// Disordered `L x M` tight-binding ring: periodic along the ring, hard
/// walls across it, on-site energies uniform in `[-W/2, W/2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub length: usize,
    pub width: usize,
    pub hopping: f64,
    pub disorder: f64,
    /// Static flux through the ring (a flux quantum is `2 pi`).
    #[serde(default)]
    pub flux: f64,
    #[serde(default)]
    pub seed: u64,
}

impl RingSpec {
    pub fn new(length: usize, width: usize, hopping: f64, disorder: f64, seed: u64) -> Self {
        Self {
            length,
            width,
            hopping,
            disorder,
            flux: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 3 {
            return Err(Error::Argument(format!("ring length {} < 3", self.length)));
        }
        if self.width < 1 {
            return Err(Error::Argument("ring width must be >= 1".into()));
        }
        if !(self.hopping > 0.0) || !self.hopping.is_finite() {
            return Err(Error::Argument(format!("hopping {} must be positive", self.hopping)));
        }
        if !(self.disorder >= 0.0) || !self.disorder.is_finite() {
            return Err(Error::Argument(format!("disorder {} must be >= 0", self.disorder)));
        }
        if !self.flux.is_finite() {
            return Err(Error::Argument("flux must be finite".into()));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.length * self.width
    }

    fn site(&self, x: usize, y: usize) -> usize {
        x * self.width + y
    }

    /// Seeded on-site energies, site order `x * M + y`.
    pub fn onsite_energies(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.sites())
            .map(|_| self.disorder * (rng.random::<f64>() - 0.5))
            .collect()
    }
}

/// Banded random matrix with a prescribed band profile and log-box spread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub size: usize,
    pub band: usize,
    /// Envelope `B(r)` for `r = 1..=band`; empty means flat `B = 1`.
    #[serde(default)]
    pub profile: Vec<f64>,
    /// Decades spanned by the log-box factor `10^(-sigma u)`.
    pub spread_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleSpec {
    /// Flat envelope `B(r) = 1`.
    pub fn flat(size: usize, band: usize, spread_sigma: f64, seed: u64) -> Self {
        Self {
            size,
            band,
            profile: Vec::new(),
            spread_sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.band < 1 || self.size <= 2 * self.band {
            return Err(Error::Argument(format!(
                "ensemble needs N > 2b >= 2, got N = {}, b = {}",
                self.size, self.band
            )));
        }
        if !self.profile.is_empty() && self.profile.len() != self.band {
            return Err(Error::Argument(format!(
                "profile has {} entries for band {}",
                self.profile.len(),
                self.band
            )));
        }
        if self.profile.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return Err(Error::Argument("profile entries must be >= 0".into()));
        }
        if !(self.spread_sigma >= 0.0) || !self.spread_sigma.is_finite() {
            return Err(Error::Argument("spread sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// `B(r)`, zero outside the band.
    pub fn envelope(&self, r: usize) -> f64 {
        if r == 0 || r > self.band {
            0.0
        } else if self.profile.is_empty() {
            1.0
        } else {
            self.profile[r - 1]
        }
    }
}

/// Mean of `10^(-sigma u)` for `u` uniform on `[0, 1]`.
pub fn log_box_mean(sigma: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        (1.0 - 10f64.powf(-sigma)) / (sigma * std::f64::consts::LN_10)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Ring(RingSpec),
    Ensemble(EnsembleSpec),
}

impl ModelSpec {
    pub fn seed(&self) -> u64 {
        match self {
            ModelSpec::Ring(r) => r.seed,
            ModelSpec::Ensemble(e) => e.seed,
        }
    }
}

/// Spec echo and solver diagnostics written next to a model's matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub spec: ModelSpec,
    pub seed: u64,
    /// `max_n ||H psi_n - E_n psi_n||`.
    pub eigen_residual: Option<f64>,
    /// `|tr H - sum E_n|`.
    pub trace_error: Option<f64>,
    pub energies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutput {
    pub levels: LevelSet,
    pub coupling: CouplingMatrix,
    pub metadata: ModelMetadata,
}

impl ModelOutput {
    /// Squared velocity elements `|v_nm|^2 = L^2 X_nm` for ring models.
    pub fn velocity_squared(&self) -> Option<CouplingMatrix> {
        match &self.metadata.spec {
            ModelSpec::Ring(r) => {
                let l = r.length as f64;
                Some(self.coupling.scaled(l * l).expect("positive factor"))
            }
            ModelSpec::Ensemble(_) => None,
        }
    }

    /// Writes `<stem>.csv` (coupling matrix) and `<stem>.json` (metadata).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.coupling.write_csv(&dir.join(format!("{stem}.csv")))?;
        let json_path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
    }

    /// Reads back what [`ModelOutput::write`] produced.
    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let coupling = CouplingMatrix::read_csv(&dir.join(format!("{stem}.csv")))?;
        let json_path = dir.join(format!("{stem}.json"));
        let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let metadata: ModelMetadata = serde_json::from_str(&text)?;
        let levels = LevelSet::new(metadata.energies.clone())?;
        if levels.len() != coupling.size() {
            return Err(Error::Dimension("sidecar energies do not match matrix".into()));
        }
        Ok(Self {
            levels,
            coupling,
            metadata,
        })
    }
}

/// Eigenpairs sorted by energy.
struct Eigensystem<T: nalgebra::ComplexField> {
    energies: Vec<f64>,
    vectors: DMatrix<T>,
}

fn sorted_eigensystem<T>(h: DMatrix<T>) -> Eigensystem<T>
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])].clone());
    Eigensystem { energies, vectors }
}

fn residual<T>(h: &DMatrix<T>, sys: &Eigensystem<T>) -> f64
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    let hv = h * &sys.vectors;
    (0..sys.energies.len())
        .map(|k| {
            let e = T::from_real(sys.energies[k]);
            (hv.column(k) - sys.vectors.column(k) * e).norm()
        })
        .fold(0.0, f64::max)
}

/// Diagonalizes the ring and returns `E_n` with `X_nm = |v_nm|^2 / L^2`
/// (`e = hbar = lattice constant = 1`), where
/// `v = i c sum (e^{i phi/L} |x+1,y><x,y| - h.c.)`.
pub fn build_ring(spec: &RingSpec) -> Result<ModelOutput> {
    spec.validate()?;
    let n = spec.sites();
    let c = spec.hopping;
    let eps = spec.onsite_energies();
    let l = spec.length as f64;

    let (energies, v_abs2, eigen_residual) = if spec.flux == 0.0 {
        // Real Hamiltonian; v = i A with A = c (T - T^t) real antisymmetric.
        let mut h = DMatrix::<f64>::zeros(n, n);
        let mut a = DMatrix::<f64>::zeros(n, n);
        for x in 0..spec.length {
            for y in 0..spec.width {
                let i = spec.site(x, y);
                let j = spec.site((x + 1) % spec.length, y);
                h[(i, i)] = eps[i];
                h[(i, j)] -= c;
                h[(j, i)] -= c;
                a[(j, i)] += c;
                a[(i, j)] -= c;
                if y + 1 < spec.width {
                    let k = spec.site(x, y + 1);
                    h[(i, k)] -= c;
                    h[(k, i)] -= c;
                }
            }
        }
        let sys = sorted_eigensystem(h.clone());
        let res = residual(&h, &sys);
        let av = sys.vectors.transpose() * (&a * &sys.vectors);
        (sys.energies, av.map(|v| v * v), res)
    } else {
        let phase = Complex::from_polar(1.0, spec.flux / l);
        let zero = Complex::new(0.0, 0.0);
        let mut h = DMatrix::<Complex<f64>>::from_element(n, n, zero);
        let mut v = DMatrix::<Complex<f64>>::from_element(n, n, zero);
        let ic = Complex::new(0.0, c);
        for x in 0..spec.length {
            for y in 0..spec.width {
                let i = spec.site(x, y);
                let j = spec.site((x + 1) % spec.length, y);
                h[(i, i)] = Complex::new(eps[i], 0.0);
                // |x+1><x| carries e^{i phi / L}.
                h[(j, i)] -= phase * c;
                h[(i, j)] -= phase.conj() * c;
                v[(j, i)] += ic * phase;
                v[(i, j)] -= ic * phase.conj();
                if y + 1 < spec.width {
                    let k = spec.site(x, y + 1);
                    h[(i, k)] -= Complex::new(c, 0.0);
                    h[(k, i)] -= Complex::new(c, 0.0);
                }
            }
        }
        let sys = sorted_eigensystem(h.clone());
        let res = residual(&h, &sys);
        let vv = sys.vectors.adjoint() * (&v * &sys.vectors);
        (sys.energies, vv.map(|z| z.norm_sqr()), res)
    };

    let trace_error = (eps.iter().sum::<f64>() - energies.iter().sum::<f64>()).abs();
    let coupling = CouplingMatrix::symmetrized(v_abs2 / (l * l))?;
    let levels = LevelSet::new(energies.clone())?;
    Ok(ModelOutput {
        levels,
        coupling,
        metadata: ModelMetadata {
            spec: ModelSpec::Ring(spec.clone()),
            seed: spec.seed,
            eigen_residual: Some(eigen_residual),
            trace_error: Some(trace_error),
            energies,
        },
    })
}

/// Levels `E_n = n` and
/// `X_nm = B(|n-m|) 10^(-sigma u_nm) chi_nm^2 / <10^(-sigma u)>` inside the
/// band, with `u` uniform and `chi` standard normal. Dividing by the mean of
/// the log-box factor keeps the band profile equal to `B(r)` for any spread.
pub fn build_sparse_ensemble(spec: &EnsembleSpec) -> Result<ModelOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let norm = log_box_mean(spec.spread_sigma);
    let coupling = CouplingMatrix::from_upper(spec.size, |i, j| {
        let r = j - i;
        if r > spec.band {
            return 0.0;
        }
        let u: f64 = rng.random();
        let chi: f64 = rng.sample(StandardNormal);
        spec.envelope(r) * 10f64.powf(-spec.spread_sigma * u) * chi * chi / norm
    })?;
    let levels = LevelSet::uniform(spec.size, 1.0)?;
    Ok(ModelOutput {
        metadata: ModelMetadata {
            spec: ModelSpec::Ensemble(spec.clone()),
            seed: spec.seed,
            eigen_residual: None,
            trace_error: None,
            energies: levels.energies().to_vec(),
        },
        levels,
        coupling,
    })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} = {v} must be positive")))
    }
}

/// Wall formula for a two-dimensional billiard,
/// `D_0 = (4 / 3 pi) m^2 v_E^3 / L_x * rms^2` with `v_E = (2E/m)^(1/2)`.
pub fn wall_reference(mass: f64, energy: f64, length_x: f64, rms_drive: f64) -> Result<f64> {
    positive("mass", mass)?;
    positive("energy", energy)?;
    positive("length", length_x)?;
    positive("rms drive", rms_drive)?;
    let v = (2.0 * energy / mass).sqrt();
    Ok(4.0 / (3.0 * PI) * mass * mass * v.powi(3) / length_x * rms_drive * rms_drive)
}

/// Drude conductance in Landauer units, `G_0 = M l / (2 pi L)`.
pub fn drude_reference(modes: usize, mean_free_path: f64, length: f64) -> Result<f64> {
    if modes == 0 {
        return Err(Error::Argument("number of modes must be positive".into()));
    }
    positive("mean free path", mean_free_path)?;
    positive("length", length)?;
    Ok(modes as f64 * mean_free_path / (2.0 * PI * length))
}

/// Born-approximation mean free path `l = kappa (c / W)^2`; infinite for a
/// clean sample.
pub fn born_mean_free_path(hopping: f64, disorder: f64, kappa: f64) -> Result<f64> {
    positive("hopping", hopping)?;
    positive("kappa", kappa)?;
    if !(disorder >= 0.0) {
        return Err(Error::Argument(format!("disorder {disorder} must be >= 0")));
    }
    if disorder == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(kappa * (hopping / disorder).powi(2))
}
