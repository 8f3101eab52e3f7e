//! Topological pressure.
//!
//! Locally constant potentials are handled exactly through weighted transfer
//! matrices. Singular-value families are evaluated on the `N`-block system;
//! the `N`-block transfer matrix `M = U V` (with `U` selecting the last symbol
//! of a block and `V[a][w] = A[a][first w]·e^{F(w)}`) shares its nonzero
//! spectrum with the `l × l` matrix `V U`, which is what gets built.
//! Pressure is always reported per step of the base system.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{BandStructure, HorseshoeModel};
use crate::potentials::{reversed_bands, FamilyKind, LocallyConstantPotential, WordSpectrum};
use crate::spectral::{self, PerronData, SparseMatrix};
use crate::symbolic::{SubshiftOfFiniteType, Word};
use crate::Limits;

/// Weighted transfer matrix of a locally constant potential of depth `k`.
///
/// States are the admissible `(k−1)`-words (symbols when `k = 1`). The entry
/// for `a_1…a_{k−1} → a_2…a_k` is `exp(pot(a_1…a_k))`; for `k = 1` the entry
/// `i → j` is `exp(pot(j))`. Entries are stored divided by `exp(log_shift)`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    depth: usize,
    states: Vec<Word>,
    index: HashMap<Word, usize>,
    log_shift: f64,
    matrix: SparseMatrix,
    perron: PerronData,
}

fn check_potential(s: &SubshiftOfFiniteType, pot: &LocallyConstantPotential) -> Result<()> {
    let expected = s.count_words(pot.depth())?;
    if pot.words().len() as u64 != expected || pot.words().iter().any(|w| !s.is_admissible(w)) {
        return Err(Error::invalid("potential is not tabulated over this subshift"));
    }
    Ok(())
}

impl TransferMatrix {
    pub fn new(s: &SubshiftOfFiniteType, pot: &LocallyConstantPotential) -> Result<Self> {
        s.require_irreducible()?;
        check_potential(s, pot)?;
        let k = pot.depth();
        let states: Vec<Word> = if k == 1 {
            (0..s.alphabet_size()).map(|i| Word(vec![i])).collect()
        } else {
            let mut st: Vec<Word> = pot.words().iter().map(|w| Word(w[..k - 1].to_vec())).collect();
            st.dedup();
            st
        };
        let index: HashMap<Word, usize> = states.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let log_shift = pot.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut rows = vec![Vec::new(); states.len()];
        if k == 1 {
            for (i, row) in rows.iter_mut().enumerate() {
                for j in s.successors(i) {
                    row.push((j, (pot.values()[j] - log_shift).exp()));
                }
            }
        } else {
            for (w, v) in pot.words().iter().zip(pot.values()) {
                let from = index[&Word(w[..k - 1].to_vec())];
                let to = index[&Word(w[1..].to_vec())];
                rows[from].push((to, (v - log_shift).exp()));
            }
        }
        let matrix = SparseMatrix::from_rows(rows);
        let perron = spectral::perron(&matrix)?;
        Ok(TransferMatrix {
            depth: k,
            states,
            index,
            log_shift,
            matrix,
            perron,
        })
    }

    /// `log ρ`.
    pub fn pressure(&self) -> f64 {
        self.perron.root.ln() + self.log_shift
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn state_index(&self, w: &[usize]) -> Option<usize> {
        self.index.get(&Word::from(w)).copied()
    }

    /// Entries divided by `exp(log_shift)`.
    pub fn scaled_matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn log_shift(&self) -> f64 {
        self.log_shift
    }

    /// Perron data of the scaled matrix.
    pub fn perron(&self) -> &PerronData {
        &self.perron
    }
}

/// Exact pressure `log ρ` of a locally constant potential.
pub fn pressure_exact(s: &SubshiftOfFiniteType, pot: &LocallyConstantPotential) -> Result<f64> {
    Ok(TransferMatrix::new(s, pot)?.pressure())
}

/// Sup over the cylinder `[w]` of the Birkhoff sum of length `|w|`.
///
/// Windows that run past the end of `w` are maximized over admissible
/// extensions of length `depth − 1`.
pub fn birkhoff_sup(s: &SubshiftOfFiniteType, pot: &LocallyConstantPotential, w: &[usize]) -> Result<f64> {
    let k = pot.depth();
    let n = w.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut inside = 0.0;
    for i in 0..(n + 1).saturating_sub(k) {
        inside += pot
            .value(&w[i..i + k])
            .ok_or_else(|| Error::invalid(format!("word {} is not admissible", Word::from(w))))?;
    }
    let tail_start = (n + 1).saturating_sub(k);
    Ok(inside + tail_sup(s, pot, &w[tail_start..])?)
}

/// Max over extensions `e` of length `depth − 1` of the windows of `t·e`
/// that start inside `t` (`|t| < depth`).
fn tail_sup(s: &SubshiftOfFiniteType, pot: &LocallyConstantPotential, t: &[usize]) -> Result<f64> {
    if t.is_empty() {
        return Ok(0.0);
    }
    let k = pot.depth();
    let mut buf = t.to_vec();
    let mut best = f64::NEG_INFINITY;
    fn rec(
        s: &SubshiftOfFiniteType,
        pot: &LocallyConstantPotential,
        buf: &mut Vec<usize>,
        windows: usize,
        k: usize,
        best: &mut f64,
    ) {
        if buf.len() == windows + k - 1 {
            let v: f64 = (0..windows).filter_map(|i| pot.value(&buf[i..i + k])).sum();
            *best = best.max(v);
            return;
        }
        let last = *buf.last().expect("nonempty");
        for j in s.successors(last).collect::<Vec<_>>() {
            buf.push(j);
            rec(s, pot, buf, windows, k, best);
            buf.pop();
        }
    }
    rec(s, pot, &mut buf, t.len(), k, &mut best);
    if best == f64::NEG_INFINITY {
        return Err(Error::invalid("word has no admissible extension"));
    }
    Ok(best)
}

/// `(1/n) log Σ_{|w| = n} exp(sup_{[w]} S_n pot)`.
pub fn pressure_cylinder_sum(
    s: &SubshiftOfFiniteType,
    pot: &LocallyConstantPotential,
    n: usize,
    limits: &Limits,
) -> Result<f64> {
    if n < pot.depth() {
        return Err(Error::invalid("cylinder length must be at least the potential depth"));
    }
    check_potential(s, pot)?;
    let mut tails: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut sums = Vec::new();
    let mut err = None;
    let k = pot.depth();
    s.for_each_word(n, limits.word_cap, |w| {
        let inside: f64 = (0..=n - k).map(|i| pot.value(&w[i..i + k]).unwrap_or(f64::NAN)).sum();
        let t = &w[n + 1 - k..];
        let tail = match tails.get(t) {
            Some(&v) => v,
            None => match tail_sup(s, pot, t) {
                Ok(v) => {
                    tails.insert(t.to_vec(), v);
                    v
                }
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
        };
        sums.push(inside + tail);
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(log_sum_exp(&sums) / n as f64)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Pressure per base step of a depth-1 potential on a family of `n`-blocks
/// used as a concatenation system: block `w` may follow block `v` iff
/// `A[last v][first w] = 1`. Each item is `(first, last, value)`.
pub fn block_system_pressure(s: &SubshiftOfFiniteType, n: usize, blocks: &[(usize, usize, f64)]) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::invalid("empty block family"));
    }
    let l = s.alphabet_size();
    let m = blocks.iter().map(|b| b.2).fold(f64::NEG_INFINITY, f64::max);
    // h[c][b]: blocks running from c to b.
    let mut h = vec![0.0; l * l];
    for &(first, last, v) in blocks {
        h[first * l + last] += (v - m).exp();
    }
    let rows = (0..l)
        .map(|a| {
            (0..l)
                .map(|b| (b, s.successors(a).map(|c| h[c * l + b]).sum::<f64>()))
                .collect()
        })
        .collect();
    let rho = spectral::spectral_radius_nonnegative(&SparseMatrix::from_rows(rows))?;
    if !(rho > 0.0) {
        return Err(Error::invalid("block system has no infinite orbit"));
    }
    Ok((rho.ln() + m) / n as f64)
}

/// Pressure per base step of a block system (as in
/// [`block_system_pressure`]) together with the equilibrium probability of
/// each block, i.e. the mass of the one-block cylinders of the block system.
/// The left and right Perron vectors of the `n`-block matrix are read off the
/// reduced `l × l` matrix, whose Perron data must exist.
pub fn block_system_equilibrium(
    s: &SubshiftOfFiniteType,
    n: usize,
    blocks: &[(usize, usize, f64)],
) -> Result<(f64, Vec<f64>)> {
    if blocks.is_empty() {
        return Err(Error::invalid("empty block family"));
    }
    let l = s.alphabet_size();
    let m = blocks.iter().map(|b| b.2).fold(f64::NEG_INFINITY, f64::max);
    let mut h = vec![0.0; l * l];
    for &(first, last, v) in blocks {
        h[first * l + last] += (v - m).exp();
    }
    let rows = (0..l)
        .map(|a| {
            (0..l)
                .map(|b| (b, s.successors(a).map(|c| h[c * l + b]).sum::<f64>()))
                .collect()
        })
        .collect();
    let perron = spectral::perron(&SparseMatrix::from_rows(rows))?;
    // Right vector of the block matrix: x[last w]; left: Σ_a y_a A[a][first w] e^{F(w)}.
    let y_into: Vec<f64> = (0..l)
        .map(|c| (0..l).filter(|&a| s.allows(a, c)).map(|a| perron.left[a]).sum())
        .collect();
    let raw: Vec<f64> = blocks
        .iter()
        .map(|&(first, last, v)| y_into[first] * (v - m).exp() * perron.right[last])
        .collect();
    let total: f64 = raw.iter().sum();
    Ok((
        (perron.root.ln() + m) / n as f64,
        raw.into_iter().map(|x| x / total).collect(),
    ))
}

/// Spectral data of every admissible `n`-word, computed once so that any
/// family member can be evaluated on the `n`-block system cheaply.
#[derive(Debug, Clone)]
pub struct BlockSpectra {
    subshift: SubshiftOfFiniteType,
    level: usize,
    bands: BandStructure,
    reversed: BandStructure,
    first: Vec<usize>,
    last: Vec<usize>,
    spectra: Vec<WordSpectrum>,
}

impl BlockSpectra {
    pub fn new(model: &HorseshoeModel, n: usize, limits: &Limits) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("block length must be at least 1"));
        }
        let s = model.subshift();
        s.require_irreducible()?;
        let words = s.admissible_words(n, limits)?;
        let spectra = words.par_iter().map(|w| WordSpectrum::of(model, w)).collect();
        Ok(BlockSpectra {
            subshift: s.clone(),
            level: n,
            bands: model.bands().clone(),
            reversed: reversed_bands(model.bands()),
            first: words.iter().map(|w| w[0]).collect(),
            last: words.iter().map(|w| w[n - 1]).collect(),
            spectra,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    /// Family value on the `i`-th block (lexicographic order).
    pub fn value(&self, i: usize, kind: FamilyKind, param: f64) -> f64 {
        self.spectra[i].value(&self.bands, &self.reversed, kind, param)
    }

    pub fn first(&self, i: usize) -> usize {
        self.first[i]
    }

    pub fn last(&self, i: usize) -> usize {
        self.last[i]
    }

    pub fn spectrum(&self, i: usize) -> &WordSpectrum {
        &self.spectra[i]
    }

    pub fn subshift(&self) -> &SubshiftOfFiniteType {
        &self.subshift
    }

    /// `(first, last, sign·value)` for every block.
    pub fn signed_blocks(&self, kind: FamilyKind, param: f64) -> Vec<(usize, usize, f64)> {
        let sign = kind.bowen_sign();
        (0..self.len())
            .map(|i| (self.first[i], self.last[i], sign * self.value(i, kind, param)))
            .collect()
    }

    /// `(1/n) P(f^n, sign·family)` where the sign is the one used in Bowen's
    /// equation (`−ψ^s`, `−ψ̂^t`, `+φ^{t'}`).
    pub fn pressure(&self, kind: FamilyKind, param: f64) -> Result<f64> {
        block_system_pressure(&self.subshift, self.level, &self.signed_blocks(kind, param))
    }
}

fn check_param(model: &HorseshoeModel, kind: FamilyKind, param: f64) -> Result<()> {
    let (lo, hi) = kind.range(model);
    if !(param >= lo && param <= hi) {
        return Err(Error::OutOfRange {
            name: "parameter",
            value: param,
            lo,
            hi,
        });
    }
    Ok(())
}

/// `(1/N) P(f^N, sign·family_N)` through the reduced block matrix.
pub fn pressure_power(model: &HorseshoeModel, kind: FamilyKind, param: f64, n: usize, limits: &Limits) -> Result<f64> {
    check_param(model, kind, param)?;
    BlockSpectra::new(model, n, limits)?.pressure(kind, param)
}

/// Same quantity as [`pressure_power`], computed on the explicit `N`-block
/// subshift with a per-symbol potential.
pub fn pressure_power_explicit(
    model: &HorseshoeModel,
    kind: FamilyKind,
    param: f64,
    n: usize,
    limits: &Limits,
) -> Result<f64> {
    check_param(model, kind, param)?;
    let (power, blocks) = model.subshift().power_subshift(n, limits)?;
    let bands = model.bands();
    let reversed = reversed_bands(bands);
    let values: Vec<f64> = blocks
        .iter()
        .map(|w| kind.bowen_sign() * WordSpectrum::of(model, w).value(bands, &reversed, kind, param))
        .collect();
    let pot = LocallyConstantPotential::per_symbol(&power, &values)?;
    Ok(pressure_exact(&power, &pot)? / n as f64)
}

/// One entry of a super-additive pressure trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPressure {
    pub level: usize,
    pub horizon: usize,
    pub pressure: f64,
}

/// The sequence `p_k = (1/2^k) P(f^{2^k}, ·)` and its last value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperadditiveTrace {
    pub levels: Vec<LevelPressure>,
    /// `p_{k+1} ≥ p_k − 1e−12` for every `k`.
    pub nondecreasing: bool,
    pub estimate: f64,
}

/// Slack allowed in the monotonicity certificate.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Super-additive pressure estimated along `N = 2^k`, `k = 0..=max_level`.
pub fn superadditive_pressure(
    model: &HorseshoeModel,
    kind: FamilyKind,
    param: f64,
    max_level: usize,
    limits: &Limits,
) -> Result<SuperadditiveTrace> {
    check_param(model, kind, param)?;
    let mut levels = Vec::with_capacity(max_level + 1);
    for k in 0..=max_level {
        let horizon = 1usize
            .checked_shl(k as u32)
            .ok_or(Error::Overflow("computing the block length"))?;
        let pressure = pressure_power(model, kind, param, horizon, limits)?;
        levels.push(LevelPressure {
            level: k,
            horizon,
            pressure,
        });
    }
    Ok(trace_from_levels(levels))
}

pub(crate) fn trace_from_levels(levels: Vec<LevelPressure>) -> SuperadditiveTrace {
    let nondecreasing = levels
        .windows(2)
        .all(|p| p[1].pressure >= p[0].pressure - MONOTONE_SLACK * (1.0 + p[0].pressure.abs()));
    let estimate = levels.last().map_or(f64::NAN, |p| p.pressure);
    SuperadditiveTrace {
        levels,
        nondecreasing,
        estimate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::rotation_scaling;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn exact_examples() {
        let full2 = SubshiftOfFiniteType::full(2);
        let zero = LocallyConstantPotential::zero(&full2);
        assert!((pressure_exact(&full2, &zero).unwrap() - 2f64.ln()).abs() < 1e-12);
        let full5 = SubshiftOfFiniteType::full(5);
        let c = LocallyConstantPotential::constant(&full5, -0.7);
        assert!((pressure_exact(&full5, &c).unwrap() - (5f64.ln() - 0.7)).abs() < 1e-12);
        let p = 0.3f64;
        let bern = LocallyConstantPotential::per_symbol(&full2, &[p.ln(), (1.0 - p).ln()]).unwrap();
        assert!(pressure_exact(&full2, &bern).unwrap().abs() < 1e-13);
        let gm = SubshiftOfFiniteType::golden_mean();
        let z = LocallyConstantPotential::zero(&gm);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((pressure_exact(&gm, &z).unwrap() - phi.ln()).abs() < 1e-10);
    }

    #[test]
    fn reducible_subshift_rejected() {
        let s = SubshiftOfFiniteType::new(&[vec![1, 1], vec![0, 1]]).unwrap();
        let z = LocallyConstantPotential::zero(&s);
        assert_eq!(pressure_exact(&s, &z), Err(Error::NotIrreducible));
    }

    fn depth2_oracle(s: &SubshiftOfFiniteType, pot: &LocallyConstantPotential) -> f64 {
        // Dense (l×l) matrix over symbols, entry exp(pot(ij)).
        let l = s.alphabet_size();
        let m = DMatrix::from_fn(l, l, |i, j| pot.value(&[i, j]).map_or(0.0, f64::exp));
        m.complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .ln()
    }

    #[test]
    fn depth_two_matches_dense_oracle() {
        let s = SubshiftOfFiniteType::new(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]]).unwrap();
        let pot = LocallyConstantPotential::from_fn(&s, 2, &lim(), |w| {
            Ok(0.3 * w[0] as f64 - 0.2 * w[1] as f64 + 0.1 * (w[0] * w[1]) as f64)
        })
        .unwrap();
        let p = pressure_exact(&s, &pot).unwrap();
        assert!((p - depth2_oracle(&s, &pot)).abs() < 1e-12);
    }

    #[test]
    fn cylinder_sum_examples() {
        let full2 = SubshiftOfFiniteType::full(2);
        let zero = LocallyConstantPotential::zero(&full2);
        for n in [1, 3, 9] {
            let v = pressure_cylinder_sum(&full2, &zero, n, &lim()).unwrap();
            assert!((v - 2f64.ln()).abs() < 1e-14);
        }
        let gm = SubshiftOfFiniteType::golden_mean();
        let z = LocallyConstantPotential::zero(&gm);
        let v = pressure_cylinder_sum(&gm, &z, 10, &lim()).unwrap();
        assert!((v - 144f64.ln() / 10.0).abs() < 1e-14);
        assert!(v > pressure_exact(&gm, &z).unwrap());
    }

    #[test]
    fn cylinder_sum_envelope() {
        let gm = SubshiftOfFiniteType::golden_mean();
        let pot = LocallyConstantPotential::from_fn(&gm, 3, &lim(), |w| {
            Ok(0.4 * w[0] as f64 - 0.3 * w[1] as f64 + 0.2 * w[2] as f64 - 0.1)
        })
        .unwrap();
        let exact = pressure_exact(&gm, &pot).unwrap();
        for n in [3, 6, 12, 18] {
            let v = pressure_cylinder_sum(&gm, &pot, n, &lim()).unwrap();
            assert!((v - exact).abs() <= 2f64.ln() / n as f64, "n={n}: {v} vs {exact}");
        }
    }

    #[test]
    fn birkhoff_sup_of_depth_two() {
        let full2 = SubshiftOfFiniteType::full(2);
        let pot = LocallyConstantPotential::from_fn(&full2, 2, &lim(), |w| Ok((w[0] * 2 + w[1]) as f64)).unwrap();
        // Windows 01, 11 inside; tail 1·e maximized by e = 1 → value 3.
        assert_eq!(birkhoff_sup(&full2, &pot, &[0, 1, 1]).unwrap(), 1.0 + 3.0 + 3.0);
    }

    fn diag_model() -> HorseshoeModel {
        HorseshoeModel::diagonal(
            SubshiftOfFiniteType::new(&[vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1]]).unwrap(),
            BandStructure::new(vec![1, 2]).unwrap(),
            vec![vec![6.0, 2.0], vec![5.0, 3.0], vec![9.0, 1.5]],
            vec![0.2, 0.3, 0.1],
        )
        .unwrap()
    }

    fn rot_model() -> HorseshoeModel {
        HorseshoeModel::cocycle(
            SubshiftOfFiniteType::full(2),
            BandStructure::new(vec![2]).unwrap(),
            vec![
                vec![rotation_scaling(0.3, 4.5, 2.5)],
                vec![rotation_scaling(1.4, 4.0, 2.8)],
            ],
            vec![1.0 / 3.0, 0.25],
        )
        .unwrap()
    }

    #[test]
    fn diagonal_and_phi_are_level_independent() {
        let m = diag_model();
        for (kind, param) in [
            (FamilyKind::Psi, 0.6),
            (FamilyKind::Psi, 2.4),
            (FamilyKind::PsiHat, 1.7),
            (FamilyKind::Phi, 0.8),
        ] {
            let base = pressure_power(&m, kind, param, 1, &lim()).unwrap();
            for n in [2, 3, 5] {
                let v = pressure_power(&m, kind, param, n, &lim()).unwrap();
                assert!((v - base).abs() < 1e-9, "{kind:?} {param} N={n}");
            }
        }
        let r = rot_model();
        let base = pressure_power(&r, FamilyKind::Phi, 0.6, 1, &lim()).unwrap();
        let v = pressure_power(&r, FamilyKind::Phi, 0.6, 8, &lim()).unwrap();
        assert!((v - base).abs() < 1e-9);
    }

    #[test]
    fn reduction_matches_explicit_power() {
        for (m, kind, param) in [
            (diag_model(), FamilyKind::Psi, 1.3),
            (rot_model(), FamilyKind::Psi, 1.6),
            (rot_model(), FamilyKind::PsiHat, 0.9),
        ] {
            for n in [1, 2, 4] {
                let a = pressure_power(&m, kind, param, n, &lim()).unwrap();
                let b = pressure_power_explicit(&m, kind, param, n, &lim()).unwrap();
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn level_one_matches_cylinder_oracle() {
        // At N = 1 the family is a depth-1 potential.
        let m = diag_model();
        let pot =
            LocallyConstantPotential::from_fn(m.subshift(), 1, &lim(), |w| Ok(-crate::potentials::psi(&m, w, 1.3)?))
                .unwrap();
        let exact = pressure_exact(m.subshift(), &pot).unwrap();
        let p = pressure_power(&m, FamilyKind::Psi, 1.3, 1, &lim()).unwrap();
        assert!((exact - p).abs() < 1e-12);
    }

    #[test]
    fn cocycle_sequence_is_nondecreasing() {
        let r = rot_model();
        let trace = superadditive_pressure(&r, FamilyKind::Psi, 1.5, 4, &lim()).unwrap();
        assert_eq!(trace.levels.len(), 5);
        assert!(trace.nondecreasing, "{trace:?}");
        assert!(trace.estimate - trace.levels[0].pressure >= 0.0);
        assert_eq!(trace.levels[4].horizon, 16);
    }

    #[test]
    fn diagonal_trace_is_constant() {
        let m = diag_model();
        let t = superadditive_pressure(&m, FamilyKind::Psi, 2.0, 3, &lim()).unwrap();
        for p in &t.levels {
            assert!((p.pressure - t.estimate).abs() < 1e-9);
        }
        let z = superadditive_pressure(&m, FamilyKind::Psi, 0.0, 2, &lim()).unwrap();
        let h = m.subshift().topological_entropy().unwrap();
        for p in &z.levels {
            assert!((p.pressure - h).abs() < 1e-9);
        }
    }

    #[test]
    fn block_equilibrium_matches_explicit_power_measure() {
        let r = rot_model();
        let n = 3;
        let spectra = BlockSpectra::new(&r, n, &lim()).unwrap();
        let blocks = spectra.signed_blocks(FamilyKind::Psi, 1.2);
        let (p, masses) = block_system_equilibrium(r.subshift(), n, &blocks).unwrap();
        let (power, _) = r.subshift().power_subshift(n, &lim()).unwrap();
        let values: Vec<f64> = blocks.iter().map(|b| b.2).collect();
        let pot = LocallyConstantPotential::per_symbol(&power, &values).unwrap();
        let mu = crate::gibbs::equilibrium_measure(&power, &pot).unwrap();
        assert!((p - mu.pressure().unwrap() / n as f64).abs() < 1e-12);
        for (i, m) in masses.iter().enumerate() {
            assert!((m - mu.cylinder_mass(&[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_out_of_range() {
        let m = diag_model();
        assert!(matches!(
            pressure_power(&m, FamilyKind::Psi, 3.5, 1, &lim()),
            Err(Error::OutOfRange { .. })
        ));
    }

    fn arb_depth2() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 4)
    }

    proptest! {
        #[test]
        fn constant_shift(vals in arb_depth2(), c in -5.0f64..5.0) {
            let s = SubshiftOfFiniteType::full(2);
            let pot = LocallyConstantPotential::from_fn(&s, 2, &lim(), |w| Ok(vals[w[0] * 2 + w[1]])).unwrap();
            let a = pressure_exact(&s, &pot).unwrap();
            let b = pressure_exact(&s, &pot.shifted(c)).unwrap();
            prop_assert!((b - a - c).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_potential(vals in arb_depth2(), bumps in prop::collection::vec(0.0f64..1.0, 4)) {
            let s = SubshiftOfFiniteType::full(2);
            let lo = LocallyConstantPotential::from_fn(&s, 2, &lim(), |w| Ok(vals[w[0] * 2 + w[1]])).unwrap();
            let hi = LocallyConstantPotential::from_fn(&s, 2, &lim(), |w| {
                let i = w[0] * 2 + w[1];
                Ok(vals[i] + bumps[i])
            }).unwrap();
            prop_assert!(pressure_exact(&s, &lo).unwrap() <= pressure_exact(&s, &hi).unwrap() + 1e-13);
        }
    }
}
