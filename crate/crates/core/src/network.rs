//! Inverse resistivity of quasi one-dimensional conductance networks.
//!
//! Nodes `0..=N` sit on a line; bonds `G_nm` may connect any pair. The
//! inverse resistivity `[[G]]` is the two-probe conductance between the
//! chain ends multiplied by the chain length, so that a uniform
//! nearest-neighbour chain of bond `g` has `[[G]] = g` for every length.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bonds weaker than this are treated as absent.
pub const BOND_THRESHOLD: f64 = 1e-30;

/// Relative Kirchhoff residual accepted for well-conditioned networks.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// Accepted residual given `max_i d_i |V_i|`, the scale of the largest
/// current balance: [`RESIDUAL_LIMIT`] or, if larger, a thousand ulps of it.
pub fn residual_limit(balance_scale: f64) -> f64 {
    RESIDUAL_LIMIT.max(1e3 * f64::EPSILON * balance_scale)
}

/// Symmetric nonnegative bond matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct ConductanceNetwork {
    bonds: DMatrix<f64>,
}

impl ConductanceNetwork {
    pub fn from_matrix(bonds: DMatrix<f64>) -> Result<Self> {
        let n = bonds.nrows();
        if n < 2 || bonds.ncols() != n {
            return Err(Error::Dimension(format!(
                "network needs a square matrix with >= 2 nodes, got {}x{}",
                n,
                bonds.ncols()
            )));
        }
        for i in 0..n {
            if bonds[(i, i)] != 0.0 {
                return Err(Error::Argument(format!("self bond at node {i}")));
            }
            for j in (i + 1)..n {
                let g = bonds[(i, j)];
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::Argument(format!("bond ({i},{j}) = {g} is not >= 0")));
                }
                if g != bonds[(j, i)] {
                    return Err(Error::Argument(format!("asymmetric bond ({i},{j})")));
                }
            }
        }
        Ok(Self { bonds })
    }

    /// Builds from the upper triangle, `f(n, m)` for `n < m`.
    pub fn from_upper(nodes: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut bonds = DMatrix::zeros(nodes, nodes);
        for i in 0..nodes {
            for j in (i + 1)..nodes {
                let g = f(i, j);
                bonds[(i, j)] = g;
                bonds[(j, i)] = g;
            }
        }
        Self::from_matrix(bonds)
    }

    /// Nearest-neighbour chain with bonds `g[k]` between nodes `k` and `k+1`.
    pub fn chain(g: &[f64]) -> Result<Self> {
        Self::from_upper(g.len() + 1, |i, j| if j == i + 1 { g[i] } else { 0.0 })
    }

    /// Translation-invariant network, `G_nm = g_{|n-m|}`.
    pub fn banded(nodes: usize, g_by_range: &BTreeMap<usize, f64>) -> Result<Self> {
        Self::from_upper(nodes, |i, j| g_by_range.get(&(j - i)).copied().unwrap_or(0.0))
    }

    pub fn node_count(&self) -> usize {
        self.bonds.nrows()
    }

    /// Chain length `N` (node count minus one).
    pub fn length(&self) -> usize {
        self.node_count() - 1
    }

    pub fn bond(&self, n: usize, m: usize) -> f64 {
        self.bonds[(n, m)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.bonds
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::Argument(format!("scale factor {factor} must be >= 0")));
        }
        Ok(Self {
            bonds: &self.bonds * factor,
        })
    }

    /// Parallel combination of two networks on the same nodes.
    pub fn combined(&self, other: &Self) -> Result<Self> {
        if self.node_count() != other.node_count() {
            return Err(Error::Dimension("networks differ in size".into()));
        }
        Ok(Self {
            bonds: &self.bonds + &other.bonds,
        })
    }

    /// Returns a copy with bond `(n, m)` set to `g`.
    pub fn with_bond(&self, n: usize, m: usize, g: f64) -> Result<Self> {
        let mut bonds = self.bonds.clone();
        bonds[(n, m)] = g;
        bonds[(m, n)] = g;
        Self::from_matrix(bonds)
    }

    fn is_bond(&self, n: usize, m: usize) -> bool {
        self.bonds[(n, m)] >= BOND_THRESHOLD
    }

    /// Discrete Laplacian `L_nm = (sum_k G_kn) delta_nm - G_nm`, counting
    /// only bonds above [`BOND_THRESHOLD`].
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.node_count();
        let mut lap = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j && self.is_bond(i, j) {
                    lap[(i, j)] = -self.bonds[(i, j)];
                    diag += self.bonds[(i, j)];
                }
            }
            lap[(i, i)] = diag;
        }
        lap
    }

    /// Connected component label of every node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for root in 0..n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = next;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if label[v] == usize::MAX && self.is_bond(u, v) {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Outcome of a two-probe (or four-probe) measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoProbeResult {
    /// Distance-normalized conductance `[(V_a - V_b) / |b - a|]^-1`.
    pub inverse_resistivity: f64,
    /// Raw resistance `V_a - V_b` at unit current; infinite when disconnected.
    pub resistance: f64,
    pub connected: bool,
    pub voltages: Option<Vec<f64>>,
    /// `||L V - I|| / ||I||` of the voltage solution.
    pub residual: f64,
}

impl TwoProbeResult {
    fn disconnected() -> Self {
        Self {
            inverse_resistivity: 0.0,
            resistance: f64::INFINITY,
            connected: false,
            voltages: None,
            residual: 0.0,
        }
    }
}

/// Where current enters and leaves and where the voltage is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePlacement {
    /// Current and voltage at nodes `0` and `N`.
    #[default]
    Endpoints,
    /// Current at nodes `0` and `N`, voltage read at `N/4` and `3N/4`.
    /// Removes the contact resistance of the chain ends.
    Interior,
}

/// Solves the grounded Kirchhoff problem with unit current entering at
/// `source` and leaving at `sink`. Returns `None` when the two nodes are not
/// connected, otherwise node voltages (zero outside the source component,
/// `V_sink = 0`) and the relative residual.
///
/// Nodes other than the probes are eliminated one at a time (Gaussian
/// elimination of the grounded Laplacian). Each elimination adds the series
/// bonds `g_ik g_kj / d_k` and takes `d_k` as the sum of the remaining
/// bonds of `k` instead of updating the diagonal by subtraction, so every
/// quantity is a sum of positive terms and stays accurate however widely
/// the conductances are spread.
fn kirchhoff_voltages(
    net: &ConductanceNetwork,
    source: usize,
    sink: usize,
) -> Result<Option<(Vec<f64>, f64)>> {
    let n = net.node_count();
    if source >= n || sink >= n {
        return Err(Error::Dimension(format!("probe outside {n} nodes")));
    }
    if source == sink {
        return Err(Error::Argument("probe nodes must differ".into()));
    }
    let labels = net.components();
    if labels[source] != labels[sink] {
        return Ok(None);
    }
    let nodes: Vec<usize> = (0..n).filter(|&k| labels[k] == labels[source]).collect();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for &i in &nodes {
        for &j in &nodes {
            if i != j && net.is_bond(i, j) {
                g[(i, j)] = net.bonds[(i, j)];
            }
        }
    }
    let mut alive = vec![false; n];
    for &k in &nodes {
        alive[k] = true;
    }

    // (node, d_k, [(neighbor, g_kj)]) in elimination order.
    let mut eliminated: Vec<(usize, f64, Vec<(usize, f64)>)> = Vec::with_capacity(nodes.len());
    for &k in nodes.iter().filter(|&&k| k != source && k != sink) {
        alive[k] = false;
        let neighbors: Vec<(usize, f64)> = nodes
            .iter()
            .filter(|&&j| alive[j] && g[(k, j)] > 0.0)
            .map(|&j| (j, g[(k, j)]))
            .collect();
        let d: f64 = neighbors.iter().map(|&(_, w)| w).sum();
        if !(d > 0.0) {
            return Err(Error::Numerical(format!("node {k} lost all bonds during elimination")));
        }
        for (a, &(i, gi)) in neighbors.iter().enumerate() {
            for &(j, gj) in &neighbors[a + 1..] {
                let add = gi * gj / d;
                g[(i, j)] += add;
                g[(j, i)] += add;
            }
        }
        eliminated.push((k, d, neighbors));
    }

    let conductance = g[(source, sink)];
    if !(conductance > 0.0) || !conductance.is_finite() {
        return Err(Error::Numerical(format!(
            "effective conductance {conductance:e} between connected probes"
        )));
    }
    let mut voltages = vec![0.0; n];
    voltages[source] = 1.0 / conductance;
    for (k, d, neighbors) in eliminated.iter().rev() {
        voltages[*k] = neighbors.iter().map(|&(j, w)| w * voltages[j]).sum::<f64>() / d;
    }

    // Residual from branch currents g (V_i - V_j). Voltages held in double
    // precision carry an error of about eps d_i |V_i| in the current balance
    // of node i, which bounds the attainable residual from below.
    let mut sq = 0.0;
    let mut floor: f64 = 0.0;
    for &i in &nodes {
        let mut out = 0.0;
        let mut degree = 0.0;
        for &j in &nodes {
            if j != i && net.is_bond(i, j) {
                out += net.bonds[(i, j)] * (voltages[i] - voltages[j]);
                degree += net.bonds[(i, j)];
            }
        }
        floor = floor.max(degree * voltages[i].abs());
        let injected = if i == source {
            1.0
        } else if i == sink {
            -1.0
        } else {
            0.0
        };
        sq += (injected - out).powi(2);
    }
    let residual = sq.sqrt() / std::f64::consts::SQRT_2;
    let limit = residual_limit(floor);
    if !(residual <= limit) {
        return Err(Error::Numerical(format!(
            "Kirchhoff residual {residual:e} exceeds {limit:e} on {} nodes",
            nodes.len()
        )));
    }
    Ok(Some((voltages, residual)))
}

/// Two-probe conductance between `n_in` and `n_out`, normalized by their
/// distance `|n_out - n_in|`.
pub fn two_probe_conductance(
    net: &ConductanceNetwork,
    n_in: usize,
    n_out: usize,
) -> Result<TwoProbeResult> {
    four_probe_conductance(net, (n_in, n_out), (n_in, n_out))
}

/// Drives unit current from `current.0` to `current.1` and reads the voltage
/// drop between `sense.0` and `sense.1`, normalized by their distance.
pub fn four_probe_conductance(
    net: &ConductanceNetwork,
    current: (usize, usize),
    sense: (usize, usize),
) -> Result<TwoProbeResult> {
    if sense.0 == sense.1 {
        return Err(Error::Argument("voltage probes must differ".into()));
    }
    let Some((voltages, residual)) = kirchhoff_voltages(net, current.0, current.1)? else {
        return Ok(TwoProbeResult::disconnected());
    };
    let labels = net.components();
    if labels[sense.0] != labels[current.0] || labels[sense.1] != labels[current.0] {
        return Ok(TwoProbeResult::disconnected());
    }
    let distance = sense.0.abs_diff(sense.1) as f64;
    let resistance = voltages[sense.0] - voltages[sense.1];
    if !(resistance > 0.0) {
        return Err(Error::Numerical(format!(
            "non-positive voltage drop {resistance:e} between connected probes"
        )));
    }
    Ok(TwoProbeResult {
        inverse_resistivity: distance / resistance,
        resistance,
        connected: true,
        voltages: Some(voltages),
        residual,
    })
}

/// `[[G]]` with the default end-to-end probes.
pub fn inverse_resistivity(net: &ConductanceNetwork) -> Result<f64> {
    Ok(inverse_resistivity_with(net, ProbePlacement::Endpoints)?.inverse_resistivity)
}

pub fn inverse_resistivity_with(
    net: &ConductanceNetwork,
    placement: ProbePlacement,
) -> Result<TwoProbeResult> {
    let last = net.length();
    match placement {
        ProbePlacement::Endpoints => two_probe_conductance(net, 0, last),
        ProbePlacement::Interior => {
            let (a, b) = (last / 4, 3 * last / 4);
            if a == b {
                return Err(Error::Argument(format!(
                    "chain of length {last} too short for interior probes"
                )));
            }
            four_probe_conductance(net, (0, last), (a, b))
        }
    }
}

/// Chain of nearest-neighbour bonds added in series:
/// `[(1/N) sum 1/g_n]^-1`, zero if any bond vanishes.
pub fn series_conductance(g: &[f64]) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::Argument("series chain needs at least one bond".into()));
    }
    if let Some(bad) = g.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Argument(format!("bond {bad} is not >= 0")));
    }
    if g.iter().any(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mean_resistance = g.iter().map(|v| 1.0 / v).sum::<f64>() / g.len() as f64;
    Ok(1.0 / mean_resistance)
}

/// Translation-invariant network `G_nm = g_{|n-m|}` in the long-chain
/// limit: `sum_r r^2 g_r`.
pub fn banded_uniform_conductance(g_by_range: &BTreeMap<usize, f64>) -> Result<f64> {
    let mut total = 0.0;
    for (&r, &g) in g_by_range {
        if r == 0 {
            return Err(Error::Argument("range 0 is not a bond".into()));
        }
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::Argument(format!("g_{r} = {g} is not >= 0")));
        }
        total += (r * r) as f64 * g;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn series_closed_form() {
        assert_relative_eq!(series_conductance(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(series_conductance(&[1.0, 2.0]).unwrap(), 4.0 / 3.0);
        assert_eq!(series_conductance(&[1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(series_conductance(&[]).is_err());
        assert!(series_conductance(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn parallel_closed_form() {
        let one = BTreeMap::from([(1, 5.0)]);
        assert_eq!(banded_uniform_conductance(&one).unwrap(), 5.0);
        let two = BTreeMap::from([(1, 1.0), (2, 1.0)]);
        assert_eq!(banded_uniform_conductance(&two).unwrap(), 5.0);
        assert!(banded_uniform_conductance(&BTreeMap::from([(1, -1.0)])).is_err());
        assert!(banded_uniform_conductance(&BTreeMap::from([(0, 1.0)])).is_err());
    }

    #[test]
    fn single_bond() {
        let net = ConductanceNetwork::chain(&[2.5]).unwrap();
        let res = two_probe_conductance(&net, 0, 1).unwrap();
        assert_relative_eq!(res.inverse_resistivity, 2.5, max_relative = 1e-14);
        assert!(res.connected);
    }

    #[test]
    fn uniform_chain_any_length() {
        for len in [1, 2, 7, 40] {
            let net = ConductanceNetwork::chain(&vec![0.7; len]).unwrap();
            assert_relative_eq!(inverse_resistivity(&net).unwrap(), 0.7, max_relative = 1e-12);
        }
    }

    #[test]
    fn triangle() {
        let net = ConductanceNetwork::from_upper(3, |_, _| 1.0).unwrap();
        let res = two_probe_conductance(&net, 0, 2).unwrap();
        assert_relative_eq!(res.resistance, 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(res.inverse_resistivity, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn empty_cut_gives_zero() {
        // No bond crosses between nodes 4 and 5.
        let net = ConductanceNetwork::from_upper(10, |i, j| {
            if j - i <= 2 && (j <= 4 || i >= 5) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let res = inverse_resistivity_with(&net, ProbePlacement::Endpoints).unwrap();
        assert!(!res.connected);
        assert_eq!(res.inverse_resistivity, 0.0);
        assert_eq!(inverse_resistivity(&net).unwrap(), 0.0);
    }

    #[test]
    fn denormal_bonds_are_ignored() {
        let net = ConductanceNetwork::chain(&[1.0, 1e-31, 1.0]).unwrap();
        assert!(!inverse_resistivity_with(&net, ProbePlacement::Endpoints)
            .unwrap()
            .connected);
    }

    #[test]
    fn isolated_spectator_node_does_not_break_solve() {
        // Node 3 has no bonds; probes 0 and 2 are connected.
        let net = ConductanceNetwork::from_upper(4, |i, j| if j < 3 && j == i + 1 { 1.0 } else { 0.0 })
            .unwrap();
        let res = two_probe_conductance(&net, 0, 2).unwrap();
        assert_relative_eq!(res.inverse_resistivity, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn probes_must_differ() {
        let net = ConductanceNetwork::chain(&[1.0, 1.0]).unwrap();
        assert!(two_probe_conductance(&net, 1, 1).is_err());
        assert!(two_probe_conductance(&net, 0, 5).is_err());
    }

    #[test]
    fn random_chain_matches_series_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g: Vec<f64> = (0..60).map(|_| 10f64.powf(-3.0 * rng.random::<f64>())).collect();
        let net = ConductanceNetwork::chain(&g).unwrap();
        let kirchhoff = inverse_resistivity(&net).unwrap();
        let series = series_conductance(&g).unwrap();
        assert!(((kirchhoff - series) / series).abs() < 1e-10);
    }

    #[test]
    fn interior_probes_remove_contact_resistance() {
        let g: BTreeMap<usize, f64> = (1..=5).map(|r| (r, 1.0 / (r * r) as f64)).collect();
        let net = ConductanceNetwork::banded(201, &g).unwrap();
        let exact = banded_uniform_conductance(&g).unwrap();
        let ends = inverse_resistivity(&net).unwrap();
        let inner = inverse_resistivity_with(&net, ProbePlacement::Interior)
            .unwrap()
            .inverse_resistivity;
        assert!(ends < exact);
        assert!(((inner - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = ConductanceNetwork::from_upper(12, |_, _| rng.random::<f64>()).unwrap();
        let lap = net.laplacian();
        for i in 0..12 {
            assert!(lap.row(i).sum().abs() < 1e-14);
        }
    }
}
