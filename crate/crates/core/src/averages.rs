//! Weighted averages of a coupling matrix over the driving band.
//!
//! The algebraic average is linear in `X`. The resistor-network average
//! treats `2 F(n-m) X_nm / (n-m)^2` as bonds of a chain and returns its
//! inverse resistivity; it is only semi-linear and never exceeds the
//! algebraic one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{inverse_resistivity_with, ConductanceNetwork, ProbePlacement};
use crate::spectral::{CouplingMatrix, SpectralWeight};

/// Slack allowed when checking `resistor_network <= algebraic`.
pub const ORDERING_SLACK: f64 = 1e-9;

/// Pairs `(n, m, F(n-m))` with `n < m` and nonzero weight.
fn weighted_pairs(size: usize, f: &SpectralWeight) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let reach = f.max_range();
    (0..size).flat_map(move |i| {
        ((i + 1)..size.min(i + reach + 1)).filter_map(move |j| {
            let w = f.weight((j - i) as i64);
            (w > 0.0).then_some((i, j, w))
        })
    })
}

/// `sum_nm F(n-m) X_nm / sum_nm F(n-m)` over the pairs present in the
/// matrix. For large matrices the denominator tends to `N`, the usual
/// `(1/N) sum` normalization; dividing by the actual weight keeps a constant
/// matrix's average equal to its elements at any size.
pub fn algebraic_average(x: &CouplingMatrix, f: &SpectralWeight) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, j, w) in weighted_pairs(x.size(), f) {
        num += w * x.get(i, j);
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Occupation-weighted algebraic average
/// `sum_n p_n sum_m F(n-m) X_nm / sum_n p_n sum_m F(n-m)`.
pub fn algebraic_average_weighted(
    x: &CouplingMatrix,
    f: &SpectralWeight,
    occupation: &[f64],
) -> Result<f64> {
    let n = x.size();
    if occupation.len() != n {
        return Err(Error::Dimension(format!(
            "occupation has {} entries for a {n}x{n} matrix",
            occupation.len()
        )));
    }
    let reach = f.max_range();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &p) in occupation.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(reach);
        let hi = (i + reach + 1).min(n);
        for j in lo..hi {
            if j == i {
                continue;
            }
            let w = f.weight(j as i64 - i as i64);
            num += p * w * x.get(i, j);
            den += p * w;
        }
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Bonds `2 F(n-m) X_nm / (n-m)^2`: the rates of a chain whose inverse
/// resistivity equals the algebraic average when `X` is constant.
pub fn rate_network(x: &CouplingMatrix, f: &SpectralWeight) -> Result<ConductanceNetwork> {
    let n = x.size();
    if n < 2 {
        return Err(Error::Dimension("need at least two levels".into()));
    }
    ConductanceNetwork::from_upper(n, |i, j| {
        let r = (j - i) as f64;
        2.0 * f.weight((j - i) as i64) * x.get(i, j) / (r * r)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkAverage {
    pub value: f64,
    /// `false` when the probes lie in different components; `value` is then 0.
    pub connected: bool,
}

/// Resistor-network average with end-to-end probes.
pub fn resistor_network_average(x: &CouplingMatrix, f: &SpectralWeight) -> Result<NetworkAverage> {
    resistor_network_average_with(x, f, ProbePlacement::Endpoints)
}

pub fn resistor_network_average_with(
    x: &CouplingMatrix,
    f: &SpectralWeight,
    placement: ProbePlacement,
) -> Result<NetworkAverage> {
    let net = rate_network(x, f)?;
    let res = inverse_resistivity_with(&net, placement)?;
    Ok(NetworkAverage {
        value: res.inverse_resistivity,
        connected: res.connected,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAverages {
    pub harmonic: f64,
    pub geometric: f64,
    pub median: f64,
}

/// `F`-weighted harmonic and geometric means and lower weighted median of
/// the in-band elements. A zero element sends the harmonic and geometric
/// means to zero.
pub fn reference_averages(x: &CouplingMatrix, f: &SpectralWeight) -> ReferenceAverages {
    let mut items: Vec<(f64, f64)> = weighted_pairs(x.size(), f)
        .map(|(i, j, w)| (x.get(i, j), w))
        .collect();
    if items.is_empty() {
        return ReferenceAverages {
            harmonic: 0.0,
            geometric: 0.0,
            median: 0.0,
        };
    }
    let total: f64 = items.iter().map(|&(_, w)| w).sum();
    let has_zero = items.iter().any(|&(v, _)| v == 0.0);
    let (harmonic, geometric) = if has_zero {
        (0.0, 0.0)
    } else {
        let inv: f64 = items.iter().map(|&(v, w)| w / v).sum();
        let logs: f64 = items.iter().map(|&(v, w)| w * v.ln()).sum();
        (total / inv, (logs / total).exp())
    };
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * total;
    let mut acc = 0.0;
    let mut median = items[items.len() - 1].0;
    for &(v, w) in &items {
        acc += w;
        // Relative slack keeps exact halves on the lower side.
        if acc >= half * (1.0 - 1e-12) {
            median = v;
            break;
        }
    }
    ReferenceAverages {
        harmonic,
        geometric,
        median,
    }
}

/// `g_s = <<X>>_s / <<X>>_a`.
pub fn suppression_factor(x: &CouplingMatrix, f: &SpectralWeight) -> Result<f64> {
    let algebraic = algebraic_average(x, f);
    if !(algebraic > 0.0) {
        return Err(Error::Undefined(
            "suppression factor with vanishing algebraic average".into(),
        ));
    }
    Ok(resistor_network_average(x, f)?.value / algebraic)
}

/// Every average of one matrix, side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageReport {
    pub algebraic: f64,
    pub resistor_network: f64,
    pub harmonic: f64,
    pub geometric: f64,
    pub median: f64,
    /// `resistor_network / algebraic`; zero when the algebraic average is zero.
    pub g_s: f64,
    pub connected: bool,
}

impl AverageReport {
    /// Human-readable descriptions of any broken ordering
    /// (`harmonic <= geometric <= algebraic`, `resistor_network <= algebraic`).
    pub fn ordering_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let slack = ORDERING_SLACK * self.algebraic.max(1.0);
        let mut check = |name: &str, lo: f64, hi: f64| {
            if lo > hi + slack {
                out.push(format!("{name}: {lo:e} > {hi:e}"));
            }
        };
        check("harmonic <= geometric", self.harmonic, self.geometric);
        check("geometric <= algebraic", self.geometric, self.algebraic);
        check("resistor_network <= algebraic", self.resistor_network, self.algebraic);
        out
    }
}

pub fn average_report(x: &CouplingMatrix, f: &SpectralWeight) -> Result<AverageReport> {
    let algebraic = algebraic_average(x, f);
    let network = resistor_network_average(x, f)?;
    let refs = reference_averages(x, f);
    Ok(AverageReport {
        algebraic,
        resistor_network: network.value,
        harmonic: refs.harmonic,
        geometric: refs.geometric,
        median: refs.median,
        g_s: if algebraic > 0.0 {
            network.value / algebraic
        } else {
            0.0
        },
        connected: network.connected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::LineShape;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect(b: f64) -> SpectralWeight {
        SpectralWeight::single(1.0, LineShape::Rectangular, b, 1.0).unwrap()
    }

    #[test]
    fn constant_matrix_averages_to_its_value() {
        let x = CouplingMatrix::from_upper(50, |_, _| 0.8).unwrap();
        let f = rect(4.0);
        assert_relative_eq!(algebraic_average(&x, &f), 0.8, max_relative = 1e-14);
        let refs = reference_averages(&x, &f);
        assert_relative_eq!(refs.harmonic, 0.8, max_relative = 1e-14);
        assert_relative_eq!(refs.geometric, 0.8, max_relative = 1e-14);
        assert_eq!(refs.median, 0.8);
    }

    #[test]
    fn checkerboard_nearest_neighbour() {
        // F on |r| = 1 only; bonds alternate 0 and 2x.
        let x = CouplingMatrix::from_upper(21, |i, j| {
            if j == i + 1 && i % 2 == 1 {
                2.0 * 0.3
            } else if j == i + 1 {
                0.0
            } else {
                5.0
            }
        })
        .unwrap();
        assert_relative_eq!(algebraic_average(&x, &rect(1.0)), 0.3, max_relative = 1e-14);
        let s = resistor_network_average(&x, &rect(1.0)).unwrap();
        assert!(!s.connected);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn zero_elements_send_harmonic_and_geometric_to_zero() {
        let x = CouplingMatrix::from_upper(3, |i, j| if (i, j) == (0, 2) { 0.0 } else { 1.5 }).unwrap();
        // Equal weights on r = 1 and r = 2.
        let f = rect(2.0);
        let refs = reference_averages(&x, &f);
        assert_eq!(refs.harmonic, 0.0);
        assert_eq!(refs.geometric, 0.0);
        assert_eq!(refs.median, 1.5);
    }

    #[test]
    fn geometric_mean_matches_log_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = rand_distr::Normal::<f64>::new(0.0, 2.0).unwrap();
        let x = CouplingMatrix::from_upper(40, |_, _| rng.sample(normal).exp()).unwrap();
        let f = rect(3.0);
        let logs: Vec<f64> = (0..40)
            .flat_map(|i| ((i + 1)..40.min(i + 4)).map(move |j| (i, j)))
            .map(|(i, j)| x.get(i, j).ln())
            .collect();
        let oracle = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
        assert_relative_eq!(reference_averages(&x, &f).geometric, oracle, max_relative = 1e-12);
    }

    #[test]
    fn algebraic_matches_brute_force_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = CouplingMatrix::from_upper(35, |_, _| rng.random::<f64>()).unwrap();
        let f = SpectralWeight::single(1.0, LineShape::Gaussian, 2.5, 1.0).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for n in 0..35i64 {
            for m in 0..35i64 {
                num += f.weight(n - m) * x.get(n as usize, m as usize);
                den += f.weight(n - m);
            }
        }
        assert_relative_eq!(algebraic_average(&x, &f), num / den, max_relative = 1e-12);
    }

    #[test]
    fn weighted_algebraic_with_uniform_occupation_is_plain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = CouplingMatrix::from_upper(30, |_, _| rng.random::<f64>()).unwrap();
        let f = rect(5.0);
        let p = vec![1.0 / 30.0; 30];
        assert_relative_eq!(
            algebraic_average_weighted(&x, &f, &p).unwrap(),
            algebraic_average(&x, &f),
            max_relative = 1e-13
        );
    }

    #[test]
    fn suppression_factor_needs_positive_algebraic() {
        let x = CouplingMatrix::zeros(10);
        assert!(matches!(suppression_factor(&x, &rect(2.0)), Err(Error::Undefined(_))));
    }

    #[test]
    fn report_orderings_hold_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = CouplingMatrix::from_upper(60, |_, _| 10f64.powf(-3.0 * rng.random::<f64>())).unwrap();
        let rep = average_report(&x, &rect(6.0)).unwrap();
        assert!(rep.ordering_violations().is_empty(), "{:?}", rep.ordering_violations());
        assert!(rep.g_s > 0.0 && rep.g_s <= 1.0 + 1e-9);
    }
}
