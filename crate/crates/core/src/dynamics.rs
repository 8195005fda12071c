//! Direct integration of the rate equation
//! `dp_n/dt = -sum_m w_nm (p_n - p_m)` and spreading-based estimates of the
//! diffusion coefficient.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BOND_THRESHOLD;
use crate::response::RateNetwork;

/// Step size cap in units of the inverse largest escape rate.
pub const STEP_CAP: f64 = 0.1;
/// Number of samples recorded by [`spreading_diffusion`].
pub const SPREADING_SAMPLES: usize = 200;

const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-14;
const NEGATIVE_CLIP: f64 = 1e-12;

/// Rate network in adjacency-list form.
struct SparseRates {
    neighbors: Vec<Vec<(usize, f64)>>,
    escape: Vec<f64>,
}

impl SparseRates {
    fn new(w: &RateNetwork) -> Self {
        let n = w.size();
        let m = w.as_matrix();
        let mut neighbors = vec![Vec::new(); n];
        let mut escape = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let r = m[(i, j)];
                if i != j && r > 0.0 {
                    neighbors[i].push((j, r));
                    escape[i] += r;
                }
            }
        }
        Self { neighbors, escape }
    }

    fn max_escape(&self) -> f64 {
        self.escape.iter().copied().fold(0.0, f64::max)
    }

    fn apply(&self, p: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let gain: f64 = self.neighbors[i].iter().map(|&(j, r)| r * p[j]).sum();
            *o = gain - self.escape[i] * p[i];
        }
    }
}

// Dormand-Prince 5(4) tableau; the last stage is evaluated at the step end.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper<'a> {
    rates: &'a SparseRates,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(rates: &'a SparseRates, n: usize) -> Self {
        Self {
            rates,
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            next: vec![0.0; n],
        }
    }

    /// Attempts one step; returns the scaled error norm and leaves the
    /// candidate state in `self.next`.
    fn attempt(&mut self, p: &[f64], dt: f64) -> f64 {
        let n = p.len();
        self.rates.apply(p, &mut self.k[0]);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = p[i];
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += dt * a * self.k[j][i];
                }
                self.stage[i] = acc;
            }
            let (_, rest) = self.k.split_at_mut(s);
            self.rates.apply(&self.stage, &mut rest[0]);
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut hi = p[i];
            let mut lo = p[i];
            for s in 0..7 {
                hi += dt * B5[s] * self.k[s][i];
                lo += dt * B4[s] * self.k[s][i];
            }
            self.next[i] = hi;
            let scale = ATOL + RTOL * p[i].abs().max(hi.abs());
            err = err.max((hi - lo).abs() / scale);
        }
        err
    }
}

fn clip_and_check(p: &mut [f64], time: f64) -> Result<()> {
    for v in p.iter_mut() {
        if *v < 0.0 {
            if *v < -NEGATIVE_CLIP {
                return Err(Error::Numerical(format!(
                    "probability {v:e} below -{NEGATIVE_CLIP:e} at t = {time}"
                )));
            }
            *v = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!("probability not conserved at t = {time}: {total}")));
    }
    Ok(())
}

/// Integrates the rate equation from `p0` and returns the distribution at
/// every time of `t_grid` (which starts at or after 0 and increases).
pub fn evolve_master(w: &RateNetwork, p0: &[f64], t_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = w.size();
    if p0.len() != n {
        return Err(Error::Dimension(format!("p0 has {} entries for {n} levels", p0.len())));
    }
    if p0.iter().any(|&p| !(p >= 0.0)) || (p0.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(Error::Argument("p0 must be a normalized probability vector".into()));
    }
    if t_grid.first().is_some_and(|&t| !(t >= 0.0))
        || t_grid.windows(2).any(|p| !(p[1] > p[0]))
        || t_grid.iter().any(|t| !t.is_finite())
    {
        return Err(Error::Argument("time grid must be finite, >= 0 and increasing".into()));
    }

    let rates = SparseRates::new(w);
    let max_escape = rates.max_escape();
    let cap = if max_escape > 0.0 { STEP_CAP / max_escape } else { f64::INFINITY };
    let mut stepper = Stepper::new(&rates, n);
    let mut p = p0.to_vec();
    let mut t = 0.0;
    let mut dt = cap.min(t_grid.last().copied().unwrap_or(0.0).max(1e-3));
    let mut out = Vec::with_capacity(t_grid.len());

    for &target in t_grid {
        while t < target {
            let remaining = target - t;
            let h = dt.min(cap).min(remaining);
            if h <= f64::EPSILON * t.max(1.0) {
                if remaining <= 4.0 * f64::EPSILON * t.max(1.0) {
                    t = target;
                    break;
                }
                return Err(Error::Stiff { time: t, step: h });
            }
            let err = stepper.attempt(&p, h);
            if err <= 1.0 {
                t = if h == remaining { target } else { t + h };
                std::mem::swap(&mut p, &mut stepper.next);
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // Do not let a short step onto an output time shrink the
                // step used afterwards.
                dt = (h.max(dt) * grow).min(cap);
            } else {
                dt = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        clip_and_check(&mut p, t)?;
        out.push(p.clone());
    }
    Ok(out)
}

/// Variance of the level index under `p`.
pub fn index_variance(p: &[f64]) -> f64 {
    let mean: f64 = p.iter().enumerate().map(|(i, &q)| i as f64 * q).sum();
    p.iter()
        .enumerate()
        .map(|(i, &q)| (i as f64 - mean).powi(2) * q)
        .sum()
}

/// Shannon entropy `-sum p ln p`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum()
}

/// `dVar/dt` at `t = 0` for a start on level `n0`: `sum_m w_{m,n0} (m - n0)^2`.
pub fn initial_spreading_rate(w: &RateNetwork, n0: usize) -> f64 {
    (0..w.size())
        .map(|m| w.rate(m, n0) * (m as f64 - n0 as f64).powi(2))
        .sum()
}

/// Largest `|n - m|` carrying a rate.
pub fn rate_band(w: &RateNetwork) -> usize {
    let m = w.as_matrix();
    let n = w.size();
    let mut band = 0;
    for i in 0..n {
        for j in i + 1..n {
            if m[(i, j)] > BOND_THRESHOLD {
                band = band.max(j - i);
            }
        }
    }
    band
}

/// Horizon at which the level-averaged initial spreading rate carries the
/// variance to `(N/6)^2`, leaving the reflecting ends outside the fit.
pub fn suggested_horizon(w: &RateNetwork) -> f64 {
    let n = w.size();
    let target = (n as f64 / 6.0).powi(2);
    let rate = (0..n).map(|k| initial_spreading_rate(w, k)).sum::<f64>() / n as f64;
    if rate > 0.0 {
        target / rate
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadingResult {
    pub times: Vec<f64>,
    pub variances: Vec<f64>,
    /// `D~` with `Var(n) = 2 D~ t` over the fit window (index units).
    pub fitted_diffusion: f64,
    pub fit_window: (f64, f64),
    pub saturated: bool,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    fitted_diffusion: f64,
    fit_window: (f64, f64),
    saturated: bool,
    samples: usize,
    final_variance: Option<&'a f64>,
}

impl SpreadingResult {
    fn disconnected() -> Self {
        Self {
            times: Vec::new(),
            variances: Vec::new(),
            fitted_diffusion: 0.0,
            fit_window: (0.0, 0.0),
            saturated: true,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("t,var\n");
        for (t, v) in self.times.iter().zip(&self.variances) {
            s.push_str(&format!("{t:e},{v:e}\n"));
        }
        s
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FitSummary {
            fitted_diffusion: self.fitted_diffusion,
            fit_window: self.fit_window,
            saturated: self.saturated,
            samples: self.times.len(),
            final_variance: self.variances.last(),
        })?)
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, self.to_csv_string()).map_err(|e| Error::io(&csv, e))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.summary_json()?).map_err(|e| Error::io(&json, e))
    }
}

/// Least-squares slope of `y` against `x`.
fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Spreads from `p = delta_{n, n0}` up to `horizon` and fits
/// `Var(n) = 2 D~ t + const` where `(3b)^2 <= Var <= (N/4)^2`.
pub fn spreading_diffusion(w: &RateNetwork, n0: usize, horizon: f64) -> Result<SpreadingResult> {
    let n = w.size();
    if n0 < n / 4 || n0 + n / 4 >= n {
        return Err(Error::Argument(format!("start level {n0} closer than N/4 to an edge")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Argument(format!("horizon {horizon} must be positive")));
    }
    let components = w.to_network().components();
    if components[0] != components[n0] || components[n - 1] != components[n0] {
        return Ok(SpreadingResult::disconnected());
    }

    let times: Vec<f64> = (0..=SPREADING_SAMPLES)
        .map(|k| horizon * k as f64 / SPREADING_SAMPLES as f64)
        .collect();
    let mut p0 = vec![0.0; n];
    p0[n0] = 1.0;
    let states = evolve_master(w, &p0, &times)?;
    let variances: Vec<f64> = states.iter().map(|p| index_variance(p)).collect();

    let rates: Vec<f64> = times
        .windows(2)
        .zip(variances.windows(2))
        .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
        .collect();
    let peak = rates.iter().copied().fold(0.0, f64::max);
    let saturation_index = rates.iter().position(|&r| r < 0.1 * peak);
    let saturated = saturation_index.is_some();
    let usable = saturation_index.map_or(times.len(), |k| k + 1);

    let band = rate_band(w) as f64;
    let lower = (3.0 * band).powi(2);
    let upper = (n as f64 / 4.0).powi(2);
    let mut window: Vec<usize> = (0..usable)
        .filter(|&k| variances[k] >= lower && variances[k] <= upper)
        .collect();
    if window.len() < 3 {
        // Fall back to the latter half of the usable record.
        window = (usable / 2..usable).collect();
    }
    let (ts, vs): (Vec<f64>, Vec<f64>) = window.iter().map(|&k| (times[k], variances[k])).unzip();
    let slope = if ts.len() >= 2 { fitted_slope(&ts, &vs) } else { 0.0 };
    Ok(SpreadingResult {
        fit_window: (ts[0], *ts.last().expect("nonempty window")),
        fitted_diffusion: (slope / 2.0).max(0.0),
        times,
        variances,
        saturated,
    })
}

/// Event-driven random walkers started on `n0`; returns the sample variance
/// of their positions at each time of `t_grid`.
pub fn sample_spreading(
    w: &RateNetwork,
    n0: usize,
    t_grid: &[f64],
    walkers: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = w.size();
    if n0 >= n {
        return Err(Error::Argument(format!("start level {n0} out of range")));
    }
    if walkers < 2 {
        return Err(Error::Argument("need at least two walkers".into()));
    }
    if t_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Argument("time grid must increase".into()));
    }
    let rates = SparseRates::new(w);
    let choosers: Vec<Option<WeightedIndex<f64>>> = rates
        .neighbors
        .iter()
        .map(|nb| WeightedIndex::new(nb.iter().map(|&(_, r)| r)).ok())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = vec![vec![0usize; t_grid.len()]; walkers];
    for track in positions.iter_mut() {
        let mut site = n0;
        let mut t = 0.0;
        let next_jump = |site: usize, rng: &mut ChaCha8Rng| -> f64 {
            let escape = rates.escape[site];
            if escape > 0.0 {
                -(1.0 - rng.random::<f64>()).ln() / escape
            } else {
                f64::INFINITY
            }
        };
        let mut jump_at = next_jump(site, &mut rng);
        for (k, &target) in t_grid.iter().enumerate() {
            while t + jump_at <= target {
                t += jump_at;
                let chooser = choosers[site].as_ref().expect("positive escape rate");
                site = rates.neighbors[site][chooser.sample(&mut rng)].0;
                jump_at = next_jump(site, &mut rng);
            }
            jump_at -= target - t;
            t = target;
            track[k] = site;
        }
    }
    Ok((0..t_grid.len())
        .map(|k| {
            let xs: Vec<f64> = positions.iter().map(|p| p[k] as f64).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
        })
        .collect())
}
