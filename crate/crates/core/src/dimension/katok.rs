use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bowen::{bisect, Bisection};
use crate::error::{Error, Result};
use crate::gibbs::{lyapunov_exponents, MarkovMeasure};
use crate::models::{BandStructure, HorseshoeModel, UnstableCocycle};
use crate::potentials::{reversed_bands, FamilyKind, WordSpectrum};
use crate::pressure::{block_system_equilibrium, block_system_pressure, log_sum_exp};
use crate::symbolic::SubshiftOfFiniteType;
use crate::Limits;

/// Which typicality tests a block must pass to be retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KatokFilter {
    /// Entropy-typical and exponent-typical in every band.
    EntropyAndExponents,
    /// Entropy-typical only. Kept to show that it is not enough.
    EntropyOnly,
}

/// How the blocks are held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KatokRoute {
    /// Type classes when they apply, explicit blocks otherwise.
    Auto,
    /// One entry per admissible block.
    Explicit,
    /// One entry per symbol-count class. Needs a full shift, a Bernoulli
    /// target and a diagonal model, where mass and spectrum of a block only
    /// depend on how often each symbol occurs.
    TypeClasses,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KatokOptions {
    pub filter: KatokFilter,
    pub route: KatokRoute,
    /// Random Markov measures on the family used by the exponent certificate.
    pub samples: usize,
    pub seed: u64,
}

impl Default for KatokOptions {
    fn default() -> Self {
        KatokOptions {
            filter: KatokFilter::EntropyAndExponents,
            route: KatokRoute::Auto,
            samples: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Blocks {
    Explicit {
        subshift: SubshiftOfFiniteType,
        first: Vec<usize>,
        last: Vec<usize>,
        spectra: Vec<WordSpectrum>,
    },
    /// Full shift: every retained block may follow every other one.
    Types {
        log_mult: Vec<f64>,
        spectra: Vec<WordSpectrum>,
    },
}

/// The retained `n`-blocks of a target measure, used as the alphabet of a
/// horseshoe for `f^n`: block `w'` may follow `w` when the last symbol of `w`
/// may be followed by the first symbol of `w'`.
#[derive(Debug, Clone)]
pub struct KatokFamily {
    block_length: usize,
    epsilon: f64,
    filter: KatokFilter,
    route: KatokRoute,
    target_entropy: f64,
    target_exponents: Vec<f64>,
    log_total: f64,
    log_retained: f64,
    bands: BandStructure,
    reversed: BandStructure,
    unstable_dim: f64,
    blocks: Blocks,
    samples: usize,
    seed: u64,
}

/// `h_top` of the family against the target entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyCertificate {
    pub entropy: f64,
    pub target: f64,
    /// `max(0, h_μ − h_top)`, the shortfall that vanishes as `n` grows.
    pub shortfall: f64,
    /// `h_top ≤ h_μ + ε`, which entropy typicality forces on full shifts.
    pub below_ceiling: bool,
}

/// Exponents of measures carried by the family against the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCertificate {
    /// Per band, the largest `|(1/n) log ‖·|E_j‖ − λ_j(μ)|` over blocks.
    pub block_deviation: Vec<f64>,
    /// Per sampled measure, the largest band deviation of its exponents.
    pub sampled_deviation: Vec<f64>,
    /// Sampled measures whose Perron data did not exist (reducible family);
    /// they are covered by the block bound alone.
    pub skipped_samples: usize,
    pub bound: f64,
    pub holds: bool,
}

impl KatokFamily {
    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn filter(&self) -> KatokFilter {
        self.filter
    }

    /// Route actually taken.
    pub fn route(&self) -> KatokRoute {
        self.route
    }

    pub fn target_entropy(&self) -> f64 {
        self.target_entropy
    }

    pub fn target_exponents(&self) -> &[f64] {
        &self.target_exponents
    }

    /// Number of retained blocks (as a float: it may exceed `u64`).
    pub fn retained(&self) -> f64 {
        self.log_retained.exp()
    }

    pub fn retained_fraction(&self) -> f64 {
        (self.log_retained - self.log_total).exp()
    }

    fn spectra(&self) -> &[WordSpectrum] {
        match &self.blocks {
            Blocks::Explicit { spectra, .. } | Blocks::Types { spectra, .. } => spectra,
        }
    }

    fn signed_values(&self, kind: FamilyKind, param: f64) -> Vec<f64> {
        let sign = kind.bowen_sign();
        self.spectra()
            .iter()
            .map(|sp| sign * sp.value(&self.bands, &self.reversed, kind, param))
            .collect()
    }

    /// Pressure per base step of `sign·family` on the family, the sign being
    /// the one used in Bowen's equation.
    pub fn pressure(&self, kind: FamilyKind, param: f64) -> Result<f64> {
        let values = self.signed_values(kind, param);
        let n = self.block_length as f64;
        match &self.blocks {
            Blocks::Explicit {
                subshift, first, last, ..
            } => {
                let items: Vec<(usize, usize, f64)> =
                    (0..values.len()).map(|i| (first[i], last[i], values[i])).collect();
                block_system_pressure(subshift, self.block_length, &items)
            }
            Blocks::Types { log_mult, .. } => {
                let terms: Vec<f64> = log_mult.iter().zip(&values).map(|(m, v)| m + v).collect();
                Ok(log_sum_exp(&terms) / n)
            }
        }
    }

    /// Topological entropy per base step.
    pub fn entropy(&self) -> Result<f64> {
        self.pressure(FamilyKind::Psi, 0.0)
    }

    /// Bowen root of the family on its parameter range.
    pub fn root(&self, kind: FamilyKind, tol: f64) -> Result<Bisection> {
        let hi = match kind {
            FamilyKind::Phi => 1.0,
            _ => self.unstable_dim,
        };
        bisect(|x| self.pressure(kind, x), 0.0, hi, tol)
    }

    pub fn entropy_certificate(&self) -> Result<EntropyCertificate> {
        let h = self.entropy()?;
        Ok(EntropyCertificate {
            entropy: h,
            target: self.target_entropy,
            shortfall: (self.target_entropy - h).max(0.0),
            below_ceiling: h <= self.target_entropy + self.epsilon + 1e-12,
        })
    }

    fn band_deviation(&self, exponents: impl Fn(usize) -> f64) -> f64 {
        (0..self.target_exponents.len())
            .map(|j| (exponents(j) - self.target_exponents[j]).abs())
            .fold(0.0, f64::max)
    }

    /// Block deviations, and the exponents of randomly weighted Bernoulli
    /// measures on the blocks, all against `2ε`.
    pub fn exponent_certificate(&self) -> Result<ExponentCertificate> {
        let n = self.block_length as f64;
        let spectra = self.spectra();
        let ell = self.target_exponents.len();
        let block_deviation: Vec<f64> = (0..ell)
            .map(|j| {
                spectra
                    .iter()
                    .map(|sp| (sp.norm_logs[j] / n - self.target_exponents[j]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut sampled_deviation = Vec::new();
        let mut skipped_samples = 0;
        for _ in 0..self.samples {
            let weights: Vec<f64> = (0..spectra.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let masses = match &self.blocks {
                Blocks::Explicit {
                    subshift, first, last, ..
                } => {
                    let items: Vec<(usize, usize, f64)> =
                        (0..weights.len()).map(|i| (first[i], last[i], weights[i])).collect();
                    match block_system_equilibrium(subshift, self.block_length, &items) {
                        Ok((_, m)) => m,
                        Err(_) => {
                            skipped_samples += 1;
                            continue;
                        }
                    }
                }
                Blocks::Types { log_mult, .. } => {
                    let terms: Vec<f64> = log_mult.iter().zip(&weights).map(|(m, w)| m + w).collect();
                    let z = log_sum_exp(&terms);
                    terms.iter().map(|t| (t - z).exp()).collect()
                }
            };
            sampled_deviation.push(self.band_deviation(|j| {
                masses
                    .iter()
                    .zip(spectra)
                    .map(|(m, sp)| m * sp.norm_logs[j])
                    .sum::<f64>()
                    / n
            }));
        }
        let bound = 2.0 * self.epsilon;
        let holds = block_deviation.iter().all(|&d| d <= bound) && sampled_deviation.iter().all(|&d| d <= bound);
        Ok(ExponentCertificate {
            block_deviation,
            sampled_deviation,
            skipped_samples,
            bound,
            holds,
        })
    }
}

/// A retained block candidate: `−(1/n) log μ[w]` and its spectrum.
struct Candidate {
    info: f64,
    spectrum: WordSpectrum,
}

fn typical(c: &Candidate, n: f64, h: f64, lyap: &[f64], eps: f64, filter: KatokFilter) -> bool {
    if (c.info - h).abs() > eps {
        return false;
    }
    filter == KatokFilter::EntropyOnly
        || lyap
            .iter()
            .enumerate()
            .all(|(j, l)| (c.spectrum.norm_logs[j] / n - l).abs() <= eps)
}

fn empty_family(n: usize, eps: f64, deviations: &[(f64, f64)]) -> Error {
    let finite: Vec<&(f64, f64)> = deviations.iter().filter(|d| d.0.is_finite()).collect();
    let max = finite.iter().map(|d| d.0).fold(0.0, f64::max);
    let mut histogram = vec![0u64; 10];
    for (d, weight) in finite {
        let bin = if max > 0.0 {
            ((d / max) * 10.0).floor() as usize
        } else {
            0
        };
        histogram[bin.min(9)] += weight.round() as u64;
    }
    Error::EmptyFamily {
        block_length: n,
        epsilon: eps,
        histogram,
    }
}

fn is_bernoulli(mu: &MarkovMeasure) -> bool {
    let p = mu.stationary();
    mu.state_len() == 1 && (0..p.len()).all(|i| (0..p.len()).all(|j| (mu.transition(i, j) - p[j]).abs() <= 1e-12))
}

/// Symbols that no block statistic can tell apart: same weight, same rates.
fn symbol_classes(model: &HorseshoeModel, p: &[f64]) -> Vec<Vec<usize>> {
    let rates = match model.cocycle_data() {
        UnstableCocycle::Diagonal { rates } => rates,
        UnstableCocycle::Matrices { .. } => unreachable!("type classes need a diagonal model"),
    };
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..p.len() {
        let same =
            |k: usize| p[k] == p[i] && rates[k] == rates[i] && model.stable_rates()[k] == model.stable_rates()[i];
        match classes.iter_mut().find(|c| same(c[0])) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

/// Every way to write `n` as an ordered sum of `parts` nonnegative counts.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|k| {
            compositions(n - k, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, k);
                rest
            })
        })
        .collect()
}

fn binomial_count(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Builds the Katok family of `mu` with block length `n` and slack `epsilon`.
pub fn katok_family(
    model: &HorseshoeModel,
    mu: &MarkovMeasure,
    n: usize,
    epsilon: f64,
    options: &KatokOptions,
    limits: &Limits,
) -> Result<KatokFamily> {
    if n == 0 {
        return Err(Error::invalid("block length must be at least 1"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let s = model.subshift();
    if mu.subshift().matrix() != s.matrix() {
        return Err(Error::invalid("measure and model live on different subshifts"));
    }
    let h = mu.entropy();
    let lyap = lyapunov_exponents(mu, model, n, limits)?.bands;
    let types_apply = s.is_full() && model.is_diagonal() && is_bernoulli(mu);
    let route = match options.route {
        KatokRoute::Auto if types_apply => KatokRoute::TypeClasses,
        KatokRoute::Auto => KatokRoute::Explicit,
        KatokRoute::TypeClasses if !types_apply => {
            return Err(Error::Unsupported(
                "type classes need a full shift, a Bernoulli target and a diagonal model".to_string(),
            ))
        }
        r => r,
    };
    let nf = n as f64;
    let l = s.alphabet_size();
    let (blocks, log_total, log_retained) = match route {
        KatokRoute::TypeClasses => {
            let p = mu.stationary();
            let classes = symbol_classes(model, p);
            if binomial_count(n + classes.len() - 1, classes.len() - 1) > limits.word_cap as f64 {
                return Err(Error::Resource {
                    what: "symbol-count classes",
                    needed: binomial_count(n + classes.len() - 1, classes.len() - 1) as u128,
                    limit: limits.word_cap as u128,
                });
            }
            let log_fact: Vec<f64> = (0..=n)
                .scan(0.0, |acc, k| {
                    if k > 0 {
                        *acc += (k as f64).ln();
                    }
                    Some(*acc)
                })
                .collect();
            let mut log_mult = Vec::new();
            let mut spectra = Vec::new();
            let mut deviations = Vec::new();
            for counts in compositions(n, classes.len()) {
                let mut word = Vec::with_capacity(n);
                let mut lm = log_fact[n];
                let mut info = 0.0;
                for (c, &k) in classes.iter().zip(&counts) {
                    word.extend(std::iter::repeat_n(c[0], k));
                    lm += k as f64 * (c.len() as f64).ln() - log_fact[k];
                    info -= k as f64 * p[c[0]].ln();
                }
                let cand = Candidate {
                    info: info / nf,
                    spectrum: WordSpectrum::of(model, &word),
                };
                deviations.push(((cand.info - h).abs(), lm.exp()));
                if typical(&cand, nf, h, &lyap, epsilon, options.filter) {
                    log_mult.push(lm);
                    spectra.push(cand.spectrum);
                }
            }
            if spectra.is_empty() {
                return Err(empty_family(n, epsilon, &deviations));
            }
            let retained = log_sum_exp(&log_mult);
            (Blocks::Types { log_mult, spectra }, nf * (l as f64).ln(), retained)
        }
        _ => {
            let words = s.admissible_words(n, limits)?;
            let cands: Vec<Candidate> = words
                .par_iter()
                .map(|w| Candidate {
                    info: -mu.cylinder_mass(w).ln() / nf,
                    spectrum: WordSpectrum::of(model, w),
                })
                .collect();
            let deviations: Vec<(f64, f64)> = cands.iter().map(|c| ((c.info - h).abs(), 1.0)).collect();
            let mut first = Vec::new();
            let mut last = Vec::new();
            let mut spectra = Vec::new();
            for (w, c) in words.iter().zip(cands) {
                if typical(&c, nf, h, &lyap, epsilon, options.filter) {
                    first.push(w[0]);
                    last.push(w[n - 1]);
                    spectra.push(c.spectrum);
                }
            }
            if spectra.is_empty() {
                return Err(empty_family(n, epsilon, &deviations));
            }
            let retained = (spectra.len() as f64).ln();
            (
                Blocks::Explicit {
                    subshift: s.clone(),
                    first,
                    last,
                    spectra,
                },
                (words.len() as f64).ln(),
                retained,
            )
        }
    };
    Ok(KatokFamily {
        block_length: n,
        epsilon,
        filter: options.filter,
        route,
        target_entropy: h,
        target_exponents: lyap,
        log_total,
        log_retained,
        bands: model.bands().clone(),
        reversed: reversed_bands(model.bands()),
        unstable_dim: model.unstable_dim() as f64,
        blocks,
        samples: options.samples,
        seed: options.seed,
    })
}
