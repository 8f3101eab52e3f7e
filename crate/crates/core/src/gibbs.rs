//! Equilibrium states of locally constant potentials as Markov measures, and
//! the quantities read off them: entropy, Lyapunov exponents, Gibbs and
//! u-Gibbs certificates, the Pesin residual.
//!
//! A potential of depth `k` gives a chain on states of length
//! `max(k − 1, 1)`. Appending a symbol `j` to state `s` moves to the last
//! `state_len` symbols of `s·j`. In the symbolic product setting the
//! conditional measure on an unstable leaf is this forward chain started from
//! the state of the past; it is defined at every point, not only almost
//! everywhere.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{HorseshoeModel, UnstableCocycle};
use crate::potentials::{psi, LocallyConstantPotential};
use crate::pressure::{birkhoff_sup, TransferMatrix};
use crate::spectral::{self, SparseMatrix};
use crate::symbolic::{SubshiftOfFiniteType, Word};
use crate::Limits;

/// Stationary Markov measure on an irreducible subshift.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    subshift: SubshiftOfFiniteType,
    state_len: usize,
    states: Vec<Word>,
    index: HashMap<Word, usize>,
    q: Vec<Vec<(usize, f64)>>,
    p: Vec<f64>,
    pressure: Option<f64>,
}

/// Equilibrium measure of `pot`: `Q_{ss'} = M_{ss'} h_{s'} / (ρ h_s)` and
/// `p_s = l_s h_s`.
pub fn equilibrium_measure(s: &SubshiftOfFiniteType, pot: &LocallyConstantPotential) -> Result<MarkovMeasure> {
    let tm = TransferMatrix::new(s, pot)?;
    let perron = tm.perron();
    let (rho, h, l) = (perron.root, &perron.right, &perron.left);
    let m = tm.scaled_matrix();
    let q: Vec<Vec<(usize, f64)>> = (0..m.dim())
        .map(|i| m.row(i).map(|(j, v)| (j, v * h[j] / (rho * h[i]))).collect())
        .collect();
    let p: Vec<f64> = l.iter().zip(h).map(|(a, b)| a * b).collect();
    MarkovMeasure::from_parts(s.clone(), tm.states().to_vec(), q, p, Some(tm.pressure()))
}

impl MarkovMeasure {
    fn from_parts(
        subshift: SubshiftOfFiniteType,
        states: Vec<Word>,
        mut q: Vec<Vec<(usize, f64)>>,
        mut p: Vec<f64>,
        pressure: Option<f64>,
    ) -> Result<Self> {
        // Remove the residual rounding so the invariants hold to 1e-15.
        for row in q.iter_mut() {
            let t: f64 = row.iter().map(|e| e.1).sum();
            for e in row.iter_mut() {
                e.1 /= t;
            }
        }
        let t: f64 = p.iter().sum();
        for v in p.iter_mut() {
            *v /= t;
        }
        let state_len = states.first().map_or(1, |w| w.len());
        let index = states.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mu = MarkovMeasure {
            subshift,
            state_len,
            states,
            index,
            q,
            p,
            pressure,
        };
        mu.check_invariants()?;
        Ok(mu)
    }

    fn check_invariants(&self) -> Result<()> {
        for (i, row) in self.q.iter().enumerate() {
            let t: f64 = row.iter().map(|e| e.1).sum();
            if (t - 1.0).abs() > 1e-12 {
                return Err(Error::invariant("Markov measure", format!("row {i} sums to {t}")));
            }
        }
        let mut pq = vec![0.0; self.p.len()];
        for (i, row) in self.q.iter().enumerate() {
            for &(j, v) in row {
                pq[j] += self.p[i] * v;
            }
        }
        for (a, b) in pq.iter().zip(&self.p) {
            if (a - b).abs() > 1e-12 || !(*b > 0.0) {
                return Err(Error::invariant("Markov measure", "stationary vector check failed"));
            }
        }
        Ok(())
    }

    pub fn subshift(&self) -> &SubshiftOfFiniteType {
        &self.subshift
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn state_len(&self) -> usize {
        self.state_len
    }

    /// Stationary vector.
    pub fn stationary(&self) -> &[f64] {
        &self.p
    }

    /// Transition probability between states (0 if not a transition).
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.q[from].iter().find(|e| e.0 == to).map_or(0.0, |e| e.1)
    }

    /// Pressure of the potential this measure is the equilibrium of.
    pub fn pressure(&self) -> Option<f64> {
        self.pressure
    }

    pub fn state_index(&self, w: &[usize]) -> Option<usize> {
        self.index.get(&Word::from(w)).copied()
    }

    fn step(&self, state: usize, symbol: usize) -> Option<(usize, f64)> {
        let cur = &self.states[state];
        let mut next: Vec<usize> = cur[1..].to_vec();
        next.push(symbol);
        let j = self.state_index(&next)?;
        let v = self.transition(state, j);
        (v > 0.0).then_some((j, v))
    }

    /// Probability of continuing from `state` along `w`.
    pub(crate) fn follow(&self, state: usize, w: &[usize]) -> f64 {
        let mut st = state;
        let mut mass = 1.0;
        for &a in w {
            match self.step(st, a) {
                Some((j, v)) => {
                    st = j;
                    mass *= v;
                }
                None => return 0.0,
            }
        }
        mass
    }

    /// `μ([w])`; zero for inadmissible words.
    pub fn cylinder_mass(&self, w: &[usize]) -> f64 {
        if w.iter().any(|&a| a >= self.subshift.alphabet_size()) || !self.subshift.is_admissible(w) {
            return 0.0;
        }
        if w.len() < self.state_len {
            return self
                .states
                .iter()
                .zip(&self.p)
                .filter(|(st, _)| st.starts_with(w))
                .map(|(_, p)| p)
                .sum();
        }
        match self.state_index(&w[..self.state_len]) {
            Some(i) => self.p[i] * self.follow(i, &w[self.state_len..]),
            None => 0.0,
        }
    }

    /// Conditional mass of the forward cylinder `[w]` on the unstable leaf of
    /// a point whose past ends with `past` (at least `state_len` symbols).
    pub fn conditional_unstable_mass(&self, past: &[usize], w: &[usize]) -> Result<f64> {
        if past.len() < self.state_len {
            return Err(Error::invalid("past is shorter than the chain memory"));
        }
        let tail = &past[past.len() - self.state_len..];
        let i = self
            .state_index(tail)
            .ok_or_else(|| Error::invalid("past is not admissible"))?;
        Ok(self.follow(i, w))
    }

    /// `−Σ p_s Q_{ss'} log Q_{ss'}`.
    pub fn entropy(&self) -> f64 {
        let h: f64 = self
            .q
            .iter()
            .zip(&self.p)
            .map(|(row, p)| p * row.iter().filter(|e| e.1 > 0.0).map(|e| -e.1 * e.1.ln()).sum::<f64>())
            .sum();
        h.max(0.0)
    }

    /// `∫ pot dμ`.
    pub fn integrate(&self, pot: &LocallyConstantPotential) -> f64 {
        pot.words()
            .iter()
            .zip(pot.values())
            .map(|(w, v)| self.cylinder_mass(w) * v)
            .sum()
    }

    /// `h_μ + ∫ pot dμ`.
    pub fn free_energy(&self, pot: &LocallyConstantPotential) -> f64 {
        self.entropy() + self.integrate(pot)
    }

    /// A Markov measure with the same support whose transition probabilities
    /// are multiplied by independent factors in `[1 − strength, 1 + strength]`
    /// and renormalized.
    pub fn perturbed(&self, seed: u64, strength: f64) -> Result<MarkovMeasure> {
        if !(0.0..1.0).contains(&strength) {
            return Err(Error::invalid("perturbation strength must lie in [0, 1)"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<Vec<(usize, f64)>> = self
            .q
            .iter()
            .map(|row| {
                let raw: Vec<(usize, f64)> = row
                    .iter()
                    .map(|&(j, v)| (j, v * (1.0 + strength * rng.random_range(-1.0..=1.0))))
                    .collect();
                let t: f64 = raw.iter().map(|e| e.1).sum();
                raw.into_iter().map(|(j, v)| (j, v / t)).collect()
            })
            .collect();
        let qm = SparseMatrix::from_rows(q.clone());
        let perron = spectral::perron(&qm)?;
        let p: Vec<f64> = perron.left.iter().zip(&perron.right).map(|(a, b)| a * b).collect();
        MarkovMeasure::from_parts(self.subshift.clone(), self.states.clone(), q, p, None)
    }

    /// State sequences of a fixed number of steps from `a` to `b`, one per
    /// reachable pair, as words of length `state_len + steps`.
    fn witness_words(&self, steps: usize) -> Vec<Vec<usize>> {
        let ns = self.states.len();
        let mut out = Vec::new();
        for b in 0..ns {
            // reach[t][s]: s reaches b in exactly t steps.
            let mut reach = vec![vec![false; ns]; steps + 1];
            reach[0][b] = true;
            for t in 1..=steps {
                for s in 0..ns {
                    reach[t][s] = self.q[s].iter().any(|&(j, v)| v > 0.0 && reach[t - 1][j]);
                }
            }
            for a in 0..ns {
                if !reach[steps][a] {
                    continue;
                }
                let mut w = self.states[a].0.clone();
                let mut cur = a;
                for t in (0..steps).rev() {
                    let &(j, _) = self.q[cur]
                        .iter()
                        .find(|&&(j, v)| v > 0.0 && reach[t][j])
                        .expect("reachability is consistent");
                    w.push(*self.states[j].last().expect("nonempty state"));
                    cur = j;
                }
                out.push(w);
            }
        }
        out
    }
}

/// How a certificate scanned the words of each length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanRoute {
    /// Every admissible word.
    Enumeration,
    /// One word per reachable (first state, last state) pair; the ratio only
    /// depends on the pair for locally constant potentials.
    Witnesses,
}

/// Extremes of a ratio at one word length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthExtremes {
    pub length: usize,
    pub min: f64,
    pub max: f64,
    pub route: ScanRoute,
}

/// Measured constants `C_min ≤ μ[w]/exp(−nP + S_n pot) ≤ C_max` over all
/// words of length `1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsCertificate {
    pub per_length: Vec<LengthExtremes>,
    pub c_min: f64,
    pub c_max: f64,
    /// `C_max / C_min` over all lengths.
    pub ratio: f64,
    /// Relative growth of the cumulative ratio from the reference length to
    /// `n_max`.
    pub ratio_drift: f64,
    pub reference_length: usize,
    /// Per-step slope of `log` of the per-length extremes between the
    /// reference length and `n_max`; zero when `P` is the pressure.
    pub log_slope: f64,
    /// Set when `|log_slope|` exceeds [`SLOPE_FLAG`].
    pub wrong_pressure: bool,
}

/// Threshold on the per-step slope above which the supplied pressure is
/// flagged as wrong.
pub const SLOPE_FLAG: f64 = 1e-6;

/// Relative drift tolerated between the reference length and `n_max`.
pub const DRIFT_TOL: f64 = 0.01;

impl GibbsCertificate {
    /// Finite constants with ratio drift under 1% and no slope flag.
    pub fn passes(&self) -> bool {
        self.c_min > 0.0 && self.c_max.is_finite() && self.ratio_drift.abs() < DRIFT_TOL && !self.wrong_pressure
    }
}

fn reference_length(n_max: usize) -> usize {
    ((2 * n_max) / 3).max(1)
}

fn summarize(per_length: Vec<LengthExtremes>) -> GibbsCertificate {
    let n_max = per_length.last().map_or(0, |e| e.length);
    let n_ref = reference_length(n_max);
    let cumulative = |upto: usize| {
        let sel = per_length.iter().filter(|e| e.length <= upto);
        let lo = sel.clone().map(|e| e.min).fold(f64::INFINITY, f64::min);
        let hi = sel.map(|e| e.max).fold(0.0, f64::max);
        (lo, hi)
    };
    let (c_min, c_max) = cumulative(n_max);
    let (r_lo, r_hi) = cumulative(n_ref);
    let ratio = c_max / c_min;
    let ratio_drift = ratio / (r_hi / r_lo) - 1.0;
    let at = |n: usize| per_length.iter().find(|e| e.length == n).copied();
    let log_slope = match (at(n_ref), at(n_max)) {
        (Some(a), Some(b)) if n_max > n_ref => {
            let d = (n_max - n_ref) as f64;
            let s_lo = (b.min.ln() - a.min.ln()) / d;
            let s_hi = (b.max.ln() - a.max.ln()) / d;
            if s_lo.abs() > s_hi.abs() {
                s_lo
            } else {
                s_hi
            }
        }
        _ => 0.0,
    };
    GibbsCertificate {
        per_length,
        c_min,
        c_max,
        ratio,
        ratio_drift,
        reference_length: n_ref,
        log_slope,
        wrong_pressure: log_slope.abs() > SLOPE_FLAG,
    }
}

fn extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Gibbs certificate of `mu` for `pot` with supplied pressure `pressure`.
pub fn gibbs_certificate(
    mu: &MarkovMeasure,
    pot: &LocallyConstantPotential,
    pressure: f64,
    n_max: usize,
    limits: &Limits,
) -> Result<GibbsCertificate> {
    certificate(mu, pot, pressure, n_max, limits, false, false)
}

/// u-Gibbs certificate: conditional unstable masses over every past state and
/// forward word, against `exp(−nP + S_n pot)`.
pub fn u_gibbs_certificate(
    mu: &MarkovMeasure,
    pot: &LocallyConstantPotential,
    pressure: f64,
    n_max: usize,
    limits: &Limits,
) -> Result<GibbsCertificate> {
    certificate(mu, pot, pressure, n_max, limits, true, false)
}

/// As the certificates above, with the witness route forced at every length
/// where it applies. Used to cross-check the two routes.
pub fn certificate_by_witnesses(
    mu: &MarkovMeasure,
    pot: &LocallyConstantPotential,
    pressure: f64,
    n_max: usize,
    limits: &Limits,
    unstable: bool,
) -> Result<GibbsCertificate> {
    certificate(mu, pot, pressure, n_max, limits, unstable, true)
}

fn certificate(
    mu: &MarkovMeasure,
    pot: &LocallyConstantPotential,
    pressure: f64,
    n_max: usize,
    limits: &Limits,
    unstable: bool,
    force_witness: bool,
) -> Result<GibbsCertificate> {
    if n_max == 0 {
        return Err(Error::invalid("certificate length must be at least 1"));
    }
    let s = mu.subshift();
    let ratio_of = |past: Option<usize>, w: &[usize]| -> Result<f64> {
        let mass = match past {
            Some(i) => mu.follow(i, w),
            None => mu.cylinder_mass(w),
        };
        let sn = birkhoff_sup(s, pot, w)?;
        Ok(mass / (sn - w.len() as f64 * pressure).exp())
    };
    let per_length: Vec<LengthExtremes> = (1..=n_max)
        .into_par_iter()
        .map(|n| -> Result<LengthExtremes> {
            let sl = mu.state_len;
            let fits = s.check_word_cap(n, limits.word_cap).is_ok();
            let use_witness = (force_witness || !fits) && n >= sl;
            if !fits && !use_witness {
                s.check_word_cap(n, limits.word_cap)?;
            }
            let words: Vec<Vec<usize>> = if use_witness {
                mu.witness_words(n - sl)
            } else {
                s.admissible_words(n, limits)?.into_iter().map(|w| w.0).collect()
            };
            let mut ratios = Vec::new();
            for w in &words {
                if unstable {
                    for (i, st) in mu.states.iter().enumerate() {
                        let mut joined = st.0.clone();
                        joined.extend_from_slice(w);
                        if s.is_admissible(&joined) {
                            ratios.push(ratio_of(Some(i), w)?);
                        }
                    }
                } else {
                    ratios.push(ratio_of(None, w)?);
                }
            }
            let (min, max) = extremes(ratios.into_iter());
            Ok(LengthExtremes {
                length: n,
                min,
                max,
                route: if use_witness {
                    ScanRoute::Witnesses
                } else {
                    ScanRoute::Enumeration
                },
            })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(per_length))
}

/// Lyapunov exponents of a Markov measure on a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovExponents {
    /// Best value per band: exact on diagonal models, the last term of the
    /// upper sequence on cocycle models.
    pub bands: Vec<f64>,
    /// Per band, `(n, (1/n) E_μ log ‖B_w|E_j‖)` along `n = 1, 2, 4, …`.
    pub upper_sequences: Vec<Vec<(usize, f64)>>,
    /// Per band, `(1/n) E_μ log ‖B_w v‖` at the last `n`, `v` the normalized
    /// all-ones vector.
    pub lower_estimates: Vec<f64>,
    /// Every upper sequence is nonincreasing (slack 1e−12).
    pub kingman_monotone: bool,
    pub exact: bool,
    /// `Σ μ[i] log c_i`.
    pub stable: f64,
}

/// Lyapunov exponents of `mu` (a measure on the model's subshift).
/// `n_max` bounds the word length used on cocycle models.
pub fn lyapunov_exponents(
    mu: &MarkovMeasure,
    model: &HorseshoeModel,
    n_max: usize,
    limits: &Limits,
) -> Result<LyapunovExponents> {
    let l = model.alphabet_size();
    if mu.subshift().matrix() != model.subshift().matrix() {
        return Err(Error::invalid("measure and model live on different subshifts"));
    }
    let marginal: Vec<f64> = (0..l).map(|i| mu.cylinder_mass(&[i])).collect();
    let stable: f64 = marginal.iter().zip(model.stable_rates()).map(|(m, c)| m * c.ln()).sum();
    let ell = model.bands().count();
    match model.cocycle_data() {
        UnstableCocycle::Diagonal { rates } => {
            let bands: Vec<f64> = (0..ell)
                .map(|j| (0..l).map(|i| marginal[i] * rates[i][j].ln()).sum())
                .collect();
            Ok(LyapunovExponents {
                upper_sequences: bands.iter().map(|&b| vec![(1, b)]).collect(),
                lower_estimates: bands.clone(),
                bands,
                kingman_monotone: true,
                exact: true,
                stable,
            })
        }
        UnstableCocycle::Matrices { .. } => {
            let mut lengths = vec![1usize];
            while lengths.last().copied().unwrap_or(1) * 2 <= n_max.max(1) {
                lengths.push(lengths.last().copied().unwrap_or(1) * 2);
            }
            let mut upper = vec![Vec::new(); ell];
            let mut lower = vec![0.0; ell];
            for &n in &lengths {
                let words = model.subshift().admissible_words(n, limits)?;
                let masses: Vec<f64> = words.iter().map(|w| mu.cylinder_mass(w)).collect();
                for j in 0..ell {
                    // Collected first so the sum runs in a fixed order.
                    let terms: Vec<f64> = words
                        .par_iter()
                        .zip(&masses)
                        .map(|(w, m)| m * model.log_band_norm(w, j))
                        .collect();
                    let e: f64 = terms.iter().sum();
                    upper[j].push((n, e / n as f64));
                    if n == *lengths.last().expect("nonempty") {
                        let terms: Vec<f64> = words
                            .par_iter()
                            .zip(&masses)
                            .map(|(w, m)| m * model.log_band_growth_of_ones(w, j))
                            .collect();
                        let g: f64 = terms.iter().sum();
                        lower[j] = g / n as f64;
                    }
                }
            }
            let kingman_monotone = upper.iter().all(|seq| seq.windows(2).all(|p| p[1].1 <= p[0].1 + 1e-12));
            Ok(LyapunovExponents {
                bands: upper.iter().map(|seq| seq.last().expect("nonempty").1).collect(),
                upper_sequences: upper,
                lower_estimates: lower,
                kingman_monotone,
                exact: false,
                stable,
            })
        }
    }
}

/// Result of the Pesin check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PesinReport {
    pub entropy: f64,
    /// `Σ m_j λ_j` at the equilibrium of `−ψ^u`.
    pub exponent_sum: f64,
    /// `|entropy − exponent_sum|`.
    pub residual: f64,
    /// `P(−ψ^u)`; the residual equals its absolute value, so it vanishes
    /// exactly when the equilibrium of `−ψ^u` is an SRB-analogue.
    pub pressure: f64,
}

/// `|h_μ − Σ m_j λ_j(μ)|` at the equilibrium `μ` of `−ψ^u` on a diagonal
/// model.
pub fn pesin_check(model: &HorseshoeModel, limits: &Limits) -> Result<PesinReport> {
    model.require_diagonal("the Pesin check")?;
    let u = model.unstable_dim() as f64;
    let s = model.subshift();
    let pot = LocallyConstantPotential::from_fn(s, 1, limits, |w| Ok(-psi(model, w, u)?))?;
    let mu = equilibrium_measure(s, &pot)?;
    let lyap = lyapunov_exponents(&mu, model, 1, limits)?;
    let exponent_sum: f64 = lyap
        .bands
        .iter()
        .enumerate()
        .map(|(j, e)| model.bands().multiplicity(j) as f64 * e)
        .sum();
    let entropy = mu.entropy();
    Ok(PesinReport {
        entropy,
        exponent_sum,
        residual: (entropy - exponent_sum).abs(),
        pressure: mu.pressure().expect("equilibrium carries its pressure"),
    })
}
