//! Driving spectra, Fermi-golden-rule rate networks, and the diffusion
//! coefficients, conductances and absorption rates built from them.
//!
//! Two theories share one formula, `D = pi rho <<X>> rms^2`:
//! linear response (Kubo) uses the algebraic average of the couplings,
//! semi-linear response uses the resistor-network average of the rates.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::averages::{algebraic_average_weighted, resistor_network_average_with};
use crate::error::{Error, Result};
use crate::network::{inverse_resistivity_with, ConductanceNetwork, ProbePlacement};
use crate::spectral::{BandWindow, CouplingMatrix, LevelSet, LineShape, SpectralWeight};

/// Level pairs closer than this fraction of the bandwidth are degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Default size of the sub-matrix used for semi-linear response.
pub const DEFAULT_WINDOW_SIZE: usize = 100;

/// Quasi-equilibrium occupation of the unperturbed levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OccupationSpec {
    /// All probability on one level.
    Microcanonical { index: usize },
    /// `p_n ~ exp(-E_n / T)`.
    Boltzmann { temperature: f64 },
    /// Thermal smearing of a Fermi surface, `p_n ~ -f'(E_n - E_F)`.
    FermiWindow { fermi_energy: f64, temperature: f64 },
}

impl OccupationSpec {
    /// Normalized weights `p_n` on `levels`.
    pub fn weights(&self, levels: &LevelSet) -> Result<Vec<f64>> {
        let e = levels.energies();
        let raw: Vec<f64> = match *self {
            OccupationSpec::Microcanonical { index } => {
                if index >= e.len() {
                    return Err(Error::Argument(format!(
                        "microcanonical level {index} outside {} levels",
                        e.len()
                    )));
                }
                let mut p = vec![0.0; e.len()];
                p[index] = 1.0;
                return Ok(p);
            }
            OccupationSpec::Boltzmann { temperature } => {
                check_temperature(temperature)?;
                let e0 = e[0];
                e.iter().map(|&en| (-(en - e0) / temperature).exp()).collect()
            }
            OccupationSpec::FermiWindow {
                fermi_energy,
                temperature,
            } => {
                check_temperature(temperature)?;
                e.iter()
                    .map(|&en| {
                        let c = ((en - fermi_energy) / (2.0 * temperature)).cosh();
                        1.0 / (c * c)
                    })
                    .collect()
            }
        };
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numerical(
                "occupation weights underflow on this level set".into(),
            ));
        }
        Ok(raw.into_iter().map(|p| p / total).collect())
    }

    /// Level carrying the largest weight.
    pub fn peak_index(&self, levels: &LevelSet) -> Result<usize> {
        Ok(match *self {
            OccupationSpec::Microcanonical { index } => index,
            OccupationSpec::Boltzmann { .. } => 0,
            OccupationSpec::FermiWindow { fermi_energy, .. } => levels.nearest_index(fermi_energy),
        })
        .and_then(|k| {
            if k < levels.len() {
                Ok(k)
            } else {
                Err(Error::Argument(format!("level {k} outside level set")))
            }
        })
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("temperature {t} must be positive")))
    }
}

/// Spectral weight for a drive of RMS `rms_drive` whose line shape has
/// energy width `cutoff`, on levels of density `density`. The dimensionless
/// band is `b_c = density * cutoff`, which must be at least one level.
pub fn make_spectral_weight(
    rms_drive: f64,
    shape: LineShape,
    cutoff: f64,
    density: f64,
) -> Result<SpectralWeight> {
    if !(cutoff > 0.0) {
        return Err(Error::Argument(format!("cutoff frequency {cutoff} must be positive")));
    }
    SpectralWeight::single(rms_drive, shape, density * cutoff, density)
}

/// Symmetric Fermi-golden-rule rates `w_nm`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateNetwork {
    rates: DMatrix<f64>,
    /// Degenerate pairs `(n, m)`, `n < m`, with nonzero coupling that were
    /// left out.
    excluded: Vec<(usize, usize)>,
}

impl RateNetwork {
    /// Wraps an explicit symmetric nonnegative rate matrix.
    pub fn from_matrix(rates: DMatrix<f64>) -> Result<Self> {
        ConductanceNetwork::from_matrix(rates.clone())?;
        Ok(Self {
            rates,
            excluded: Vec::new(),
        })
    }

    pub fn from_upper(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let net = ConductanceNetwork::from_upper(n, f)?;
        Ok(Self {
            rates: net.as_matrix().clone(),
            excluded: Vec::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rate(&self, n: usize, m: usize) -> f64 {
        self.rates[(n, m)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn excluded_pairs(&self) -> &[(usize, usize)] {
        &self.excluded
    }

    /// Fails if any degenerate pair with nonzero coupling was dropped.
    pub fn require_nondegenerate(&self) -> Result<()> {
        match self.excluded.first() {
            None => Ok(()),
            Some(&first) => Err(Error::DegenerateLevels {
                count: self.excluded.len(),
                first,
            }),
        }
    }

    /// Total escape rate of every level.
    pub fn row_sums(&self) -> Vec<f64> {
        self.rates.row_iter().map(|row| row.sum()).collect()
    }

    pub fn to_network(&self) -> ConductanceNetwork {
        ConductanceNetwork::from_matrix(self.rates.clone()).expect("rates are validated")
    }
}

/// `w_nm = X_nm / (E_n - E_m)^2 * S(E_n - E_m)`. Pairs closer than
/// [`DEGENERACY_TOLERANCE`] times the bandwidth get no rate and are listed in
/// [`RateNetwork::excluded_pairs`] when their coupling is nonzero.
pub fn fgr_rates(x: &CouplingMatrix, levels: &LevelSet, s: &SpectralWeight) -> Result<RateNetwork> {
    let n = x.size();
    if levels.len() != n {
        return Err(Error::Dimension(format!(
            "{} levels for a {n}x{n} coupling matrix",
            levels.len()
        )));
    }
    let e = levels.energies();
    let tol = DEGENERACY_TOLERANCE * levels.bandwidth();
    let mut rates = DMatrix::zeros(n, n);
    let mut excluded = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let xij = x.get(i, j);
            if xij == 0.0 {
                continue;
            }
            let omega = e[j] - e[i];
            if omega.abs() < tol {
                excluded.push((i, j));
                continue;
            }
            let w = xij / (omega * omega) * s.power(omega);
            rates[(i, j)] = w;
            rates[(j, i)] = w;
        }
    }
    Ok(RateNetwork { rates, excluded })
}

/// Linear-response diffusion coefficient
/// `D = pi rms^2 sum_n p_n sum_m X_nm delta_c(E_m - E_n)`,
/// which is `sum_n p_n (1/2) sum_m (E_m - E_n)^2 w_mn` written without the
/// singular `1/(E_n - E_m)^2`, so degenerate pairs contribute regularly.
pub fn kubo_diffusion(
    x: &CouplingMatrix,
    levels: &LevelSet,
    s: &SpectralWeight,
    occupation: &OccupationSpec,
) -> Result<f64> {
    let n = x.size();
    if levels.len() != n {
        return Err(Error::Dimension(format!(
            "{} levels for a {n}x{n} coupling matrix",
            levels.len()
        )));
    }
    let p = occupation.weights(levels)?;
    let e = levels.energies();
    let mut total = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        let row: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| x.get(i, j) * s.delta_c(e[j] - e[i]))
            .sum();
        total += pi * row;
    }
    Ok(PI * s.mean_square_drive() * total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlrtDiffusion {
    pub value: f64,
    /// `false` when the rate network does not percolate; `value` is then 0.
    pub connected: bool,
    /// Density of the window levels.
    pub density: f64,
}

fn window_inputs(
    x: &CouplingMatrix,
    levels: &LevelSet,
    window: &BandWindow,
) -> Result<(CouplingMatrix, LevelSet)> {
    let n = x.size();
    if levels.len() != n {
        return Err(Error::Dimension(format!(
            "{} levels for a {n}x{n} coupling matrix",
            levels.len()
        )));
    }
    window.validate(n)?;
    let range = window.range(n);
    let start = range.start;
    let sub = CouplingMatrix::from_upper(range.len(), |i, j| {
        let r = j - i;
        if r >= window.min_r && r <= window.max_r {
            x.get(start + i, start + j)
        } else {
            0.0
        }
    })?;
    Ok((sub, levels.slice(range)?))
}

/// Semi-linear diffusion coefficient `D = rho^-2 [[w]]` of the rate network
/// restricted to `window`.
pub fn slrt_diffusion(
    x: &CouplingMatrix,
    levels: &LevelSet,
    s: &SpectralWeight,
    window: &BandWindow,
) -> Result<SlrtDiffusion> {
    slrt_diffusion_with(x, levels, s, window, ProbePlacement::Endpoints)
}

pub fn slrt_diffusion_with(
    x: &CouplingMatrix,
    levels: &LevelSet,
    s: &SpectralWeight,
    window: &BandWindow,
    placement: ProbePlacement,
) -> Result<SlrtDiffusion> {
    let (sub_x, sub_levels) = window_inputs(x, levels, window)?;
    let rates = fgr_rates(&sub_x, &sub_levels, s)?;
    let res = inverse_resistivity_with(&rates.to_network(), placement)?;
    let rho = sub_levels.density();
    Ok(SlrtDiffusion {
        value: res.inverse_resistivity / (rho * rho),
        connected: res.connected,
        density: rho,
    })
}

/// The same coefficient through the averages module,
/// `D = pi rho <<X>>_s rms^2`, with `rho` taken from the spectral weight.
/// Agrees with [`slrt_diffusion`] when the window levels are evenly spaced
/// at that density.
pub fn slrt_diffusion_from_average(
    x: &CouplingMatrix,
    levels: &LevelSet,
    s: &SpectralWeight,
    window: &BandWindow,
) -> Result<SlrtDiffusion> {
    let (sub_x, _) = window_inputs(x, levels, window)?;
    let avg = resistor_network_average_with(&sub_x, s, ProbePlacement::Endpoints)?;
    let rho = s.density();
    Ok(SlrtDiffusion {
        value: PI * rho * avg.value * s.mean_square_drive(),
        connected: avg.connected,
        density: rho,
    })
}

/// Linear and semi-linear mesoscopic conductance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conductance {
    pub lrt: f64,
    pub slrt: f64,
    pub connected: bool,
    /// Local level density used in `G = pi rho^2 (e/L)^2 <<|v|^2>>`.
    pub density: f64,
    /// Level indices of the semi-linear window.
    pub window: (usize, usize),
}

/// Conductance knobs beyond the inputs of [`conductance`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceOptions {
    pub window_size: usize,
    pub placement: ProbePlacement,
}

impl Default for ConductanceOptions {
    fn default() -> Self {
        Self {
            window_size: DEFAULT_WINDOW_SIZE,
            placement: ProbePlacement::Endpoints,
        }
    }
}

/// `G = pi rho^2 (e/L)^2 <<|v_nm|^2>>` (units `e = hbar = 1`) from squared
/// velocity matrix elements `v2`.
///
/// The linear result weights rows by the occupation; the semi-linear result
/// is the resistor-network average over a window of `window_size` levels
/// centered on the occupation peak. `rho` is the level density inside that
/// window. Only the band weight `F(r)` of `s` enters.
pub fn conductance(
    v2: &CouplingMatrix,
    levels: &LevelSet,
    s: &SpectralWeight,
    occupation: &OccupationSpec,
    length: f64,
) -> Result<Conductance> {
    conductance_with(v2, levels, s, occupation, length, &ConductanceOptions::default())
}

pub fn conductance_with(
    v2: &CouplingMatrix,
    levels: &LevelSet,
    s: &SpectralWeight,
    occupation: &OccupationSpec,
    length: f64,
    options: &ConductanceOptions,
) -> Result<Conductance> {
    if !(length > 0.0) {
        return Err(Error::Argument(format!("ring length {length} must be positive")));
    }
    let n = v2.size();
    if levels.len() != n {
        return Err(Error::Dimension(format!(
            "{} levels for a {n}x{n} velocity matrix",
            levels.len()
        )));
    }
    let p = occupation.weights(levels)?;
    let center = occupation.peak_index(levels)?;
    let window = BandWindow::centered(n, center, options.window_size);
    let range = window.range(n);
    let rho = levels.slice(range.clone())?.density();
    let prefactor = PI * rho * rho / (length * length);

    let lrt = prefactor * algebraic_average_weighted(v2, s, &p)?;
    let sub = v2.submatrix(range.clone())?;
    let avg = resistor_network_average_with(&sub, s, options.placement)?;
    Ok(Conductance {
        lrt,
        slrt: prefactor * avg.value,
        connected: avg.connected,
        density: rho,
        window: (range.start, range.end),
    })
}

/// Energy absorption rate `EAR = density * D`, where the density is
/// `N / T` for a Boltzmann occupation and the level density `rho` for a
/// Fermi window. A single microcanonical level has no such density.
pub fn absorption(
    diffusion: f64,
    occupation: &OccupationSpec,
    particle_count: f64,
    level_density: f64,
) -> Result<f64> {
    if !(diffusion >= 0.0) {
        return Err(Error::Argument(format!("diffusion {diffusion} must be >= 0")));
    }
    match *occupation {
        OccupationSpec::Boltzmann { temperature } => {
            check_temperature(temperature)?;
            Ok(particle_count / temperature * diffusion)
        }
        OccupationSpec::FermiWindow { temperature, .. } => {
            check_temperature(temperature)?;
            if !(level_density > 0.0) {
                return Err(Error::Argument("level density must be positive".into()));
            }
            Ok(level_density * diffusion)
        }
        OccupationSpec::Microcanonical { .. } => Err(Error::Undefined(
            "absorption rate needs a Boltzmann or Fermi occupation".into(),
        )),
    }
}

/// Joule law `EAR = G * rms_emf^2`.
pub fn joule_absorption(conductance: f64, rms_emf: f64) -> f64 {
    conductance * rms_emf * rms_emf
}

/// Everything computed for one model realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseResult {
    pub d_lrt: f64,
    pub d_slrt: f64,
    pub g_lrt: f64,
    pub g_slrt: f64,
    /// `d_lrt / reference`.
    pub g_c: f64,
    /// `d_slrt / d_lrt`.
    pub g_s: f64,
    pub ear_lrt: f64,
    pub ear_slrt: f64,
    /// Kinetic reference (`D_0`, or `G_0` for ring conductance).
    pub reference: f64,
    pub connected: bool,
}

/// Column names of [`ResponseResult::csv_row`].
pub const CSV_COLUMNS: [&str; 10] = [
    "spec_hash", "param", "seed", "D_LRT", "D_SLRT", "G_LRT", "G_SLRT", "g_c", "g_s", "ref",
];

impl ResponseResult {
    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self, spec_hash: &str, param: f64, seed: u64) -> String {
        format!(
            "{spec_hash},{param},{seed},{},{},{},{},{},{},{}",
            self.d_lrt,
            self.d_slrt,
            self.g_lrt,
            self.g_slrt,
            self.g_c,
            self.g_s,
            self.reference
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spectral_weight_shapes() {
        let f = make_spectral_weight(1.0, LineShape::Rectangular, 3.0, 1.0).unwrap();
        for r in 1..=3 {
            assert_relative_eq!(f.weight(r), 1.0 / 6.0, max_relative = 1e-15);
            assert_relative_eq!(f.weight(-r), 1.0 / 6.0, max_relative = 1e-15);
        }
        for shape in [LineShape::Rectangular, LineShape::Lorentzian, LineShape::Gaussian] {
            let f = make_spectral_weight(2.0, shape, 1.7, 4.0).unwrap();
            let sum = 2.0 * f.weights().iter().sum::<f64>();
            assert!((sum - 1.0).abs() < 1e-12);
            assert_eq!(f.weight(0), 0.0);
        }
        assert!(make_spectral_weight(1.0, LineShape::Rectangular, 0.5, 1.0).is_err());
        assert!(make_spectral_weight(1.0, LineShape::Rectangular, 0.0, 1.0).is_err());
    }

    #[test]
    fn lorentzian_truncation_mass_is_small() {
        let b = 10.0;
        let f = make_spectral_weight(1.0, LineShape::Lorentzian, b, 1.0).unwrap();
        let support = f.max_range();
        // Tail beyond the support, summed directly far out and bounded by the
        // integral of 1/(1+(x/b)^2) beyond that.
        let kernel = |r: f64| 1.0 / (1.0 + (r / b).powi(2));
        let kept: f64 = (1..=support).map(|r| kernel(r as f64)).sum();
        let far: f64 = ((support + 1)..=200 * support).map(|r| kernel(r as f64)).sum();
        let beyond = b * (std::f64::consts::FRAC_PI_2 - ((200 * support) as f64 / b).atan());
        let tail = (far + beyond) / (kept + far + beyond);
        assert!(tail < 0.01, "tail mass {tail}");
    }

    #[test]
    fn occupation_weights_are_normalized() {
        let levels = LevelSet::uniform(50, 0.2).unwrap();
        for occ in [
            OccupationSpec::Microcanonical { index: 7 },
            OccupationSpec::Boltzmann { temperature: 1.0 },
            OccupationSpec::FermiWindow {
                fermi_energy: 5.0,
                temperature: 0.3,
            },
        ] {
            let p = occ.weights(&levels).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
        assert_eq!(
            OccupationSpec::FermiWindow {
                fermi_energy: 5.0,
                temperature: 0.3
            }
            .peak_index(&levels)
            .unwrap(),
            25
        );
        assert!(OccupationSpec::Boltzmann { temperature: 0.0 }
            .weights(&levels)
            .is_err());
        assert!(OccupationSpec::Microcanonical { index: 50 }
            .weights(&levels)
            .is_err());
    }

    #[test]
    fn fgr_rates_for_constant_matrix() {
        let spacing = 0.5;
        let levels = LevelSet::uniform(30, spacing).unwrap();
        let x = CouplingMatrix::from_upper(30, |_, _| 0.2).unwrap();
        let s = make_spectral_weight(1.3, LineShape::Rectangular, 4.0 * spacing, 1.0 / spacing).unwrap();
        let w = fgr_rates(&x, &levels, &s).unwrap();
        // Rectangular S has height 2 pi rms^2 rho / (2 b_c) inside the band.
        let height = 2.0 * PI * 1.3 * 1.3 * (1.0 / spacing) / 8.0;
        for r in 1..=4usize {
            let expected = 0.2 * height / ((r as f64) * spacing).powi(2);
            assert_relative_eq!(w.rate(10, 10 + r), expected, max_relative = 1e-12);
        }
        assert_eq!(w.rate(10, 15), 0.0);
        assert_eq!(w.as_matrix(), &w.as_matrix().transpose());
    }

    #[test]
    fn fgr_rates_of_zero_matrix_vanish() {
        let levels = LevelSet::uniform(8, 1.0).unwrap();
        let s = make_spectral_weight(1.0, LineShape::Gaussian, 2.0, 1.0).unwrap();
        let w = fgr_rates(&CouplingMatrix::zeros(8), &levels, &s).unwrap();
        assert!(w.as_matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_pairs_are_excluded_and_reported() {
        let levels = LevelSet::new(vec![0.0, 1.0, 1.0, 2.0, 3.0]).unwrap();
        let x = CouplingMatrix::from_upper(5, |_, _| 1.0).unwrap();
        let s = make_spectral_weight(1.0, LineShape::Rectangular, 3.0, 1.0).unwrap();
        let w = fgr_rates(&x, &levels, &s).unwrap();
        assert_eq!(w.excluded_pairs(), &[(1, 2)]);
        assert_eq!(w.rate(1, 2), 0.0);
        assert!(matches!(
            w.require_nondegenerate(),
            Err(Error::DegenerateLevels { count: 1, first: (1, 2) })
        ));
        assert!(fgr_rates(&x, &LevelSet::uniform(4, 1.0).unwrap(), &s).is_err());
    }

    #[test]
    fn kubo_of_constant_matrix_is_closed_form() {
        let n = 201;
        let spacing = 0.25;
        let rho = 1.0 / spacing;
        let levels = LevelSet::uniform(n, spacing).unwrap();
        let x = CouplingMatrix::from_upper(n, |_, _| 0.4).unwrap();
        let s = make_spectral_weight(0.9, LineShape::Rectangular, 6.0 / rho, rho).unwrap();
        let occ = OccupationSpec::Microcanonical { index: 100 };
        let d = kubo_diffusion(&x, &levels, &s, &occ).unwrap();
        assert_relative_eq!(d, PI * rho * 0.4 * 0.81, max_relative = 1e-12);
        let d2 = kubo_diffusion(&x, &levels, &s.with_power_scaled(3.0).unwrap(), &occ).unwrap();
        assert_relative_eq!(d2, 3.0 * d, max_relative = 1e-14);
    }

    #[test]
    fn slrt_routes_agree_on_uniform_levels() {
        let n = 80;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = CouplingMatrix::from_upper(n, |_, _| 10f64.powf(-2.0 * rng.random::<f64>())).unwrap();
        let levels = LevelSet::uniform(n, 0.5).unwrap();
        let s = make_spectral_weight(1.1, LineShape::Rectangular, 3.0, 2.0).unwrap();
        let window = BandWindow::centered(n, 40, 60);
        let a = slrt_diffusion(&x, &levels, &s, &window).unwrap();
        let b = slrt_diffusion_from_average(&x, &levels, &s, &window).unwrap();
        assert!(((a.value - b.value) / b.value).abs() < 1e-10, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn absorption_by_occupation() {
        let fermi = OccupationSpec::FermiWindow {
            fermi_energy: 0.0,
            temperature: 0.1,
        };
        assert_eq!(absorption(2.0, &fermi, 0.0, 1.0).unwrap(), 2.0);
        let boltz = OccupationSpec::Boltzmann { temperature: 5.0 };
        assert_eq!(absorption(1.0, &boltz, 10.0, 0.0).unwrap(), 2.0);
        assert!(absorption(1.0, &OccupationSpec::Boltzmann { temperature: -1.0 }, 1.0, 1.0).is_err());
        assert!(absorption(1.0, &OccupationSpec::Microcanonical { index: 0 }, 1.0, 1.0).is_err());
    }

    #[test]
    fn conductance_of_constant_velocity_matrix() {
        let n = 300;
        let levels = LevelSet::uniform(n, 1.0).unwrap();
        let v2 = CouplingMatrix::from_upper(n, |_, _| 2.0).unwrap();
        let s = make_spectral_weight(1.0, LineShape::Rectangular, 5.0, 1.0).unwrap();
        let occ = OccupationSpec::FermiWindow {
            fermi_energy: 150.0,
            temperature: 3.0,
        };
        let g = conductance_with(
            &v2,
            &levels,
            &s,
            &occ,
            10.0,
            &ConductanceOptions {
                window_size: 100,
                placement: ProbePlacement::Interior,
            },
        )
        .unwrap();
        let expected = PI * 2.0 / 100.0;
        assert_relative_eq!(g.lrt, expected, max_relative = 1e-12);
        assert!(((g.slrt - expected) / expected).abs() < 1e-6);
        assert_eq!(g.window, (100, 200));
    }

    #[test]
    fn csv_row_has_fixed_columns() {
        let r = ResponseResult {
            d_lrt: 1.0,
            d_slrt: 0.5,
            g_lrt: 2.0,
            g_slrt: 1.0,
            g_c: 1.0,
            g_s: 0.5,
            ear_lrt: 1.0,
            ear_slrt: 0.5,
            reference: 1.0,
            connected: true,
        };
        assert_eq!(
            ResponseResult::csv_header(),
            "spec_hash,param,seed,D_LRT,D_SLRT,G_LRT,G_SLRT,g_c,g_s,ref"
        );
        assert_eq!(r.csv_row("ab", 0.5, 3).split(',').count(), 10);
    }
}
