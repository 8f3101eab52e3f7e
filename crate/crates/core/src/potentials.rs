//! Potentials on words: locally constant tables and the singular-value
//! families `ψ^s` (band norms), `ψ̂^t` (band conorms, bands consumed from the
//! slowest) and `φ^{t'}` (stable band). All values are in nats.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BandStructure, HorseshoeModel};
use crate::symbolic::{SubshiftOfFiniteType, Word};
use crate::Limits;

/// Which singular-value family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `ψ^s`: unstable band norms, `s ∈ [0, u]`.
    Psi,
    /// `ψ̂^t`: unstable band conorms, `t ∈ [0, u]`.
    PsiHat,
    /// `φ^{t'}`: stable band, `t' ∈ [0, 1]`.
    Phi,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Psi => "psi",
            FamilyKind::PsiHat => "psihat",
            FamilyKind::Phi => "phi",
        }
    }

    /// Closed parameter range.
    pub fn range(self, model: &HorseshoeModel) -> (f64, f64) {
        match self {
            FamilyKind::Psi | FamilyKind::PsiHat => (0.0, model.unstable_dim() as f64),
            FamilyKind::Phi => (0.0, 1.0),
        }
    }

    /// Sign under which the family enters Bowen's equation: `−ψ`, `−ψ̂`, `+φ`.
    pub fn bowen_sign(self) -> f64 {
        match self {
            FamilyKind::Psi | FamilyKind::PsiHat => -1.0,
            FamilyKind::Phi => 1.0,
        }
    }
}

/// A member of a singular-value family at a fixed time horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularValueFamily {
    pub kind: FamilyKind,
    pub param: f64,
    pub horizon: usize,
}

impl SingularValueFamily {
    pub fn new(model: &HorseshoeModel, kind: FamilyKind, param: f64, horizon: usize) -> Result<Self> {
        check_range(model, kind, param)?;
        if horizon == 0 {
            return Err(Error::invalid("time horizon must be at least 1"));
        }
        Ok(SingularValueFamily { kind, param, horizon })
    }

    /// Family value on a word (any length; the horizon only matters for
    /// tabulation).
    pub fn evaluate(&self, model: &HorseshoeModel, w: &[usize]) -> Result<f64> {
        match self.kind {
            FamilyKind::Psi => psi(model, w, self.param),
            FamilyKind::PsiHat => psi_hat(model, w, self.param),
            FamilyKind::Phi => phi(model, w, self.param),
        }
    }
}

fn check_range(model: &HorseshoeModel, kind: FamilyKind, value: f64) -> Result<()> {
    let (lo, hi) = kind.range(model);
    if !(value >= lo && value <= hi) {
        return Err(Error::OutOfRange {
            name: match kind {
                FamilyKind::Psi => "s",
                FamilyKind::PsiHat => "t",
                FamilyKind::Phi => "t'",
            },
            value,
            lo,
            hi,
        });
    }
    Ok(())
}

fn check_word(model: &HorseshoeModel, w: &[usize]) -> Result<()> {
    if model.subshift().is_admissible(w) {
        Ok(())
    } else {
        Err(Error::invalid(format!("word {} is not admissible", Word::from(w))))
    }
}

/// Interpolated band sum `Σ_{j<d} m_j L_j + (s − r_d) L_d` on branch `d`.
fn band_branch(bands: &BandStructure, logs: &[f64], s: f64, d: usize) -> f64 {
    let full: f64 = (0..d).map(|j| bands.multiplicity(j) as f64 * logs[j]).sum();
    if d == bands.count() {
        full
    } else {
        full + (s - bands.partial_sum(d) as f64) * logs[d]
    }
}

/// Branch `d` with `r_d ≤ s < r_{d+1}`; `ℓ` at `s = u`.
fn branch(bands: &BandStructure, s: f64) -> usize {
    let ell = bands.count();
    (0..ell)
        .rev()
        .find(|&d| bands.partial_sum(d) as f64 <= s && s < bands.partial_sum(d + 1) as f64)
        .unwrap_or(ell)
}

/// Per-word data from which every family member can be evaluated without
/// recomputing singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSpectrum {
    /// `log ‖·|E_j‖` in band order.
    pub norm_logs: Vec<f64>,
    /// `log m(·|E_j)` in reversed band order (slowest band first).
    pub conorm_logs_reversed: Vec<f64>,
    pub stable_log: f64,
}

impl WordSpectrum {
    pub fn of(model: &HorseshoeModel, w: &[usize]) -> Self {
        let ell = model.bands().count();
        let extremes: Vec<(f64, f64)> = (0..ell).map(|j| model.log_singular_extremes(w, j)).collect();
        WordSpectrum {
            norm_logs: extremes.iter().map(|e| e.0).collect(),
            conorm_logs_reversed: extremes.iter().rev().map(|e| e.1).collect(),
            stable_log: model.stable_log(w),
        }
    }

    /// Family value; `reversed` is the band structure with its order reversed.
    pub(crate) fn value(&self, bands: &BandStructure, reversed: &BandStructure, kind: FamilyKind, param: f64) -> f64 {
        match kind {
            FamilyKind::Psi => band_branch(bands, &self.norm_logs, param, branch(bands, param)),
            FamilyKind::PsiHat => band_branch(reversed, &self.conorm_logs_reversed, param, branch(reversed, param)),
            FamilyKind::Phi => param * self.stable_log,
        }
    }
}

pub(crate) fn reversed_bands(bands: &BandStructure) -> BandStructure {
    BandStructure::new(bands.multiplicities().iter().rev().copied().collect())
        .expect("reversal keeps a valid band structure")
}

fn evaluate(model: &HorseshoeModel, w: &[usize], kind: FamilyKind, param: f64) -> Result<f64> {
    check_range(model, kind, param)?;
    check_word(model, w)?;
    let bands = model.bands();
    Ok(WordSpectrum::of(model, w).value(bands, &reversed_bands(bands), kind, param))
}

/// `ψ^s(w)`: `Σ_{j≤d} m_j log‖·|E_j‖ + (s − r_d) log‖·|E_{d+1}‖`.
pub fn psi(model: &HorseshoeModel, w: &[usize], s: f64) -> Result<f64> {
    evaluate(model, w, FamilyKind::Psi, s)
}

/// `ψ̂^t(w)`: conorms, with the bands consumed from the slowest one.
pub fn psi_hat(model: &HorseshoeModel, w: &[usize], t: f64) -> Result<f64> {
    evaluate(model, w, FamilyKind::PsiHat, t)
}

/// `φ^{t'}(w) = t' · Σ log c_{w_t}`.
pub fn phi(model: &HorseshoeModel, w: &[usize], t_prime: f64) -> Result<f64> {
    evaluate(model, w, FamilyKind::Phi, t_prime)
}

/// A potential depending on the first `depth` symbols, tabulated over the
/// admissible `depth`-words in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantPotential {
    depth: usize,
    words: Vec<Word>,
    values: Vec<f64>,
    index: HashMap<Word, usize>,
}

impl LocallyConstantPotential {
    /// Tabulates `f` over all admissible `depth`-words.
    pub fn from_fn(
        subshift: &SubshiftOfFiniteType,
        depth: usize,
        limits: &Limits,
        mut f: impl FnMut(&[usize]) -> Result<f64>,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("potential depth must be at least 1"));
        }
        let words = subshift.admissible_words(depth, limits)?;
        let values = words.iter().map(|w| f(w)).collect::<Result<Vec<_>>>()?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("potential value on {} is not finite", words[k])));
        }
        let index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Ok(LocallyConstantPotential {
            depth,
            words,
            values,
            index,
        })
    }

    /// From an explicit table, which must cover exactly the admissible
    /// `depth`-words.
    pub fn from_table(
        subshift: &SubshiftOfFiniteType,
        depth: usize,
        table: &HashMap<Word, f64>,
        limits: &Limits,
    ) -> Result<Self> {
        for w in table.keys() {
            if w.len() != depth || !subshift.is_admissible(w) {
                return Err(Error::invalid(format!(
                    "table entry {w} is not an admissible word of length {depth}"
                )));
            }
        }
        Self::from_fn(subshift, depth, limits, |w| {
            table
                .get(&Word::from(w))
                .copied()
                .ok_or_else(|| Error::invalid(format!("table misses word {}", Word::from(w))))
        })
    }

    pub fn zero(subshift: &SubshiftOfFiniteType) -> Self {
        Self::constant(subshift, 0.0)
    }

    pub fn constant(subshift: &SubshiftOfFiniteType, c: f64) -> Self {
        Self::from_fn(subshift, 1, &Limits::default(), |_| Ok(c)).expect("depth-1 table")
    }

    /// Depth-1 potential from per-symbol values.
    pub fn per_symbol(subshift: &SubshiftOfFiniteType, values: &[f64]) -> Result<Self> {
        if values.len() != subshift.alphabet_size() {
            return Err(Error::invalid("one value per symbol is required"));
        }
        Self::from_fn(subshift, 1, &Limits::default(), |w| Ok(values[w[0]]))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the `depth`-word `w`, if admissible.
    pub fn value(&self, w: &[usize]) -> Option<f64> {
        self.index.get(&Word::from(w)).map(|&i| self.values[i])
    }

    /// Pointwise `self + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v += c;
        }
        out
    }

    /// Pointwise `f(value)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = f(*v);
        }
        out
    }
}

/// Tabulates a family at its horizon `N` as a depth-`N` locally constant
/// potential.
pub fn as_locally_constant(
    model: &HorseshoeModel,
    family: &SingularValueFamily,
    limits: &Limits,
) -> Result<LocallyConstantPotential> {
    LocallyConstantPotential::from_fn(model.subshift(), family.horizon, limits, |w| family.evaluate(model, w))
}
