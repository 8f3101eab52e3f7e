//! Linear horseshoe models with a dominated splitting.
//!
//! A model is a subshift of finite type together with, for every symbol `i`,
//! the linear action on each unstable band `E_j` (a scalar rate `λ_{i,j}` for
//! diagonal models, an invertible `m_j × m_j` matrix for cocycle models) and a
//! contraction rate `c_i` on the one-dimensional stable band.
//!
//! Bands are indexed from 0 in the API: band `j` here is `E_{j+1}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symbolic::{SubshiftOfFiniteType, Word};
use crate::Limits;

/// Largest band multiplicity accepted for cocycle models.
pub const MAX_COCYCLE_BAND_DIM: usize = 3;

/// Comparison constants between Euclidean balls and the product of leaf
/// balls: `B^u(γ₂r) × B^s(γ₂r) ⊆ B(r) ⊆ B^u(γ₁r) × B^s(γ₁r)`.
pub const GAMMA_1: f64 = std::f64::consts::SQRT_2;
pub const GAMMA_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Band multiplicities with their partial sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandStructure {
    multiplicities: Vec<usize>,
    partial: Vec<usize>,
    reversed: Vec<usize>,
}

impl BandStructure {
    pub fn new(multiplicities: Vec<usize>) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::invalid("at least one unstable band is required"));
        }
        if let Some(j) = multiplicities.iter().position(|&m| m == 0) {
            return Err(Error::invariant(
                format!("bands[{j}]"),
                "multiplicity must be at least 1",
            ));
        }
        let mut partial = vec![0];
        for &m in &multiplicities {
            partial.push(partial.last().unwrap() + m);
        }
        let mut reversed = vec![0];
        for &m in multiplicities.iter().rev() {
            reversed.push(reversed.last().unwrap() + m);
        }
        Ok(BandStructure {
            multiplicities,
            partial,
            reversed,
        })
    }

    /// Number of unstable bands `ℓ`.
    pub fn count(&self) -> usize {
        self.multiplicities.len()
    }

    /// Multiplicity of band `j` (0-based).
    pub fn multiplicity(&self, j: usize) -> usize {
        self.multiplicities[j]
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// `r_d = m_1 + ⋯ + m_d`, `d ∈ 0..=ℓ`.
    pub fn partial_sum(&self, d: usize) -> usize {
        self.partial[d]
    }

    /// `r'_d = m_ℓ + ⋯ + m_{ℓ−d+1}`, `d ∈ 0..=ℓ`.
    pub fn reversed_partial_sum(&self, d: usize) -> usize {
        self.reversed[d]
    }

    /// Unstable dimension `u`.
    pub fn unstable_dim(&self) -> usize {
        *self.partial.last().unwrap()
    }

    /// Band owning unstable coordinate `k ∈ 0..u`.
    pub fn band_of_coordinate(&self, k: usize) -> usize {
        (0..self.count())
            .find(|&j| k < self.partial[j + 1])
            .expect("coordinate below u")
    }
}

/// Affine map `x ↦ offset + scale ⊙ x` of the unit cube, axis aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCell {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl AffineCell {
    pub fn identity(dim: usize) -> Self {
        AffineCell {
            offset: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineCell) -> AffineCell {
        AffineCell {
            offset: self
                .offset
                .iter()
                .zip(&self.scale)
                .zip(&inner.offset)
                .map(|((o, s), io)| o + s * io)
                .collect(),
            scale: self.scale.iter().zip(&inner.scale).map(|(a, b)| a * b).collect(),
        }
    }

    /// Image of the unit cube.
    pub fn image(&self) -> AxisBox {
        AxisBox {
            lower: self.offset.clone(),
            sides: self.scale.clone(),
        }
    }
}

/// Axis-aligned box `Π [lower_k, lower_k + sides_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub sides: Vec<f64>,
}

impl AxisBox {
    pub fn upper(&self, k: usize) -> f64 {
        self.lower[k] + self.sides[k]
    }

    pub fn max_side(&self) -> f64 {
        self.sides.iter().cloned().fold(0.0, f64::max)
    }

    pub fn contains_box(&self, other: &AxisBox, tol: f64) -> bool {
        (0..self.lower.len()).all(|k| other.lower[k] >= self.lower[k] - tol && other.upper(k) <= self.upper(k) + tol)
    }

    /// Interiors intersect.
    pub fn overlaps_interior(&self, other: &AxisBox, tol: f64) -> bool {
        (0..self.lower.len()).all(|k| self.lower[k] < other.upper(k) - tol && other.lower[k] < self.upper(k) - tol)
    }

    /// Closed boxes intersect.
    pub fn meets(&self, other: &AxisBox) -> bool {
        (0..self.lower.len()).all(|k| self.lower[k] <= other.upper(k) && other.lower[k] <= self.upper(k))
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.sides).map(|(l, s)| l + 0.5 * s).collect()
    }
}

/// Per-symbol placement of the rectangles in the unit cubes of the unstable
/// and stable leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub unstable_offsets: Vec<Vec<f64>>,
    pub stable_offsets: Vec<f64>,
}

/// Unstable linear data per symbol and band.
#[derive(Debug, Clone, PartialEq)]
pub enum UnstableCocycle {
    /// `rates[i][j] = λ_{i,j} > 1`.
    Diagonal { rates: Vec<Vec<f64>> },
    /// `matrices[i][j] = B_{i,j}`, an invertible `m_j × m_j` matrix.
    Matrices { matrices: Vec<Vec<DMatrix<f64>>> },
}

/// A linear horseshoe: subshift, dominated unstable bands and a
/// one-dimensional stable band.
#[derive(Debug, Clone, PartialEq)]
pub struct HorseshoeModel {
    subshift: SubshiftOfFiniteType,
    bands: BandStructure,
    cocycle: UnstableCocycle,
    stable_rates: Vec<f64>,
    placement: Placement,
}

impl HorseshoeModel {
    /// Diagonal model with automatic grid placement.
    pub fn diagonal(
        subshift: SubshiftOfFiniteType,
        bands: BandStructure,
        rates: Vec<Vec<f64>>,
        stable_rates: Vec<f64>,
    ) -> Result<Self> {
        Self::build(subshift, bands, UnstableCocycle::Diagonal { rates }, stable_rates, None)
    }

    /// Matrix-cocycle model with automatic grid placement.
    pub fn cocycle(
        subshift: SubshiftOfFiniteType,
        bands: BandStructure,
        matrices: Vec<Vec<DMatrix<f64>>>,
        stable_rates: Vec<f64>,
    ) -> Result<Self> {
        Self::build(
            subshift,
            bands,
            UnstableCocycle::Matrices { matrices },
            stable_rates,
            None,
        )
    }

    /// Full constructor; `placement = None` lays the symbols on a grid.
    pub fn build(
        subshift: SubshiftOfFiniteType,
        bands: BandStructure,
        cocycle: UnstableCocycle,
        stable_rates: Vec<f64>,
        placement: Option<Placement>,
    ) -> Result<Self> {
        let l = subshift.alphabet_size();
        if stable_rates.len() != l {
            return Err(Error::invariant(
                "stable_rates",
                format!("expected {l} rates, found {}", stable_rates.len()),
            ));
        }
        for (i, &c) in stable_rates.iter().enumerate() {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::invariant(
                    format!("stable_rates[{i}]"),
                    format!("contraction rate {c} is not in (0,1)"),
                ));
            }
        }
        match &cocycle {
            UnstableCocycle::Diagonal { rates } => validate_diagonal(l, &bands, rates)?,
            UnstableCocycle::Matrices { matrices } => validate_matrices(l, &bands, matrices)?,
        }
        let mut model = HorseshoeModel {
            subshift,
            bands,
            cocycle,
            stable_rates,
            placement: Placement {
                unstable_offsets: Vec::new(),
                stable_offsets: Vec::new(),
            },
        };
        model.placement = match placement {
            Some(p) => p,
            None => model.grid_placement()?,
        };
        model.validate_placement()?;
        Ok(model)
    }

    pub fn subshift(&self) -> &SubshiftOfFiniteType {
        &self.subshift
    }

    pub fn bands(&self) -> &BandStructure {
        &self.bands
    }

    pub fn cocycle_data(&self) -> &UnstableCocycle {
        &self.cocycle
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn unstable_dim(&self) -> usize {
        self.bands.unstable_dim()
    }

    pub fn alphabet_size(&self) -> usize {
        self.subshift.alphabet_size()
    }

    pub fn stable_rates(&self) -> &[f64] {
        &self.stable_rates
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.cocycle, UnstableCocycle::Diagonal { .. })
    }

    pub(crate) fn require_diagonal(&self, what: &str) -> Result<&Vec<Vec<f64>>> {
        match &self.cocycle {
            UnstableCocycle::Diagonal { rates } => Ok(rates),
            UnstableCocycle::Matrices { .. } => Err(Error::Unsupported(format!("{what} needs a diagonal model"))),
        }
    }

    /// `(log ‖B_w|E_j‖, log m(B_w|E_j))` for the ordered product
    /// `B_{w_{n−1},j} ⋯ B_{w_0,j}`.
    pub fn log_singular_extremes(&self, w: &[usize], j: usize) -> (f64, f64) {
        match &self.cocycle {
            UnstableCocycle::Diagonal { rates } => {
                let s: f64 = w.iter().map(|&i| rates[i][j].ln()).sum();
                (s, s)
            }
            UnstableCocycle::Matrices { matrices } => {
                let (p, log_scale) = scaled_product(w.iter().map(|&i| &matrices[i][j]));
                let sv = p.singular_values();
                let mx = sv.iter().cloned().fold(0.0, f64::max);
                let mn = sv.iter().cloned().fold(f64::INFINITY, f64::min);
                (mx.ln() + log_scale, mn.ln() + log_scale)
            }
        }
    }

    /// `log ‖D f^n|E_j‖` along the word.
    pub fn log_band_norm(&self, w: &[usize], j: usize) -> f64 {
        self.log_singular_extremes(w, j).0
    }

    /// `log m(D f^n|E_j)` along the word.
    pub fn log_band_conorm(&self, w: &[usize], j: usize) -> f64 {
        self.log_singular_extremes(w, j).1
    }

    pub fn band_norm(&self, w: &[usize], j: usize) -> f64 {
        self.log_band_norm(w, j).exp()
    }

    pub fn band_conorm(&self, w: &[usize], j: usize) -> f64 {
        self.log_band_conorm(w, j).exp()
    }

    /// `log ‖B_w v‖` with `v` the normalized all-ones vector of band `j`.
    pub fn log_band_growth_of_ones(&self, w: &[usize], j: usize) -> f64 {
        match &self.cocycle {
            UnstableCocycle::Diagonal { .. } => self.log_band_norm(w, j),
            UnstableCocycle::Matrices { matrices } => {
                let m = self.bands.multiplicity(j);
                let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
                let mut log_scale = 0.0;
                for &i in w {
                    v = &matrices[i][j] * v;
                    let n = v.norm();
                    v /= n;
                    log_scale += n.ln();
                }
                log_scale
            }
        }
    }

    /// `Σ_t log c_{w_t}` (always negative).
    pub fn stable_log(&self, w: &[usize]) -> f64 {
        w.iter().map(|&i| self.stable_rates[i].ln()).sum()
    }

    /// Per-coordinate cell scales of symbol `i` on the unstable leaf.
    /// Diagonal: `1/λ_{i,j}`; cocycle: `1/m(B_{i,j})` (outer bound).
    fn unstable_scales(&self, i: usize) -> Vec<f64> {
        (0..self.unstable_dim())
            .map(|k| {
                let j = self.bands.band_of_coordinate(k);
                match &self.cocycle {
                    UnstableCocycle::Diagonal { rates } => 1.0 / rates[i][j],
                    UnstableCocycle::Matrices { .. } => (-self.log_band_conorm(&[i], j)).exp(),
                }
            })
            .collect()
    }

    /// Unstable-leaf cell of symbol `i`.
    pub fn unstable_cell(&self, i: usize) -> AffineCell {
        AffineCell {
            offset: self.placement.unstable_offsets[i].clone(),
            scale: self.unstable_scales(i),
        }
    }

    /// Stable-leaf cell of symbol `i`.
    pub fn stable_cell(&self, i: usize) -> AffineCell {
        AffineCell {
            offset: vec![self.placement.stable_offsets[i]],
            scale: vec![self.stable_rates[i]],
        }
    }

    fn grid_placement(&self) -> Result<Placement> {
        let l = self.alphabet_size();
        let u = self.unstable_dim();
        let sides: Vec<f64> = (0..u)
            .map(|k| (0..l).map(|i| self.unstable_scales(i)[k]).fold(0.0, f64::max))
            .collect();
        // Mixed-radix grid: fill coordinate 0 first, then the next ones.
        let mut counts = Vec::with_capacity(u);
        let mut remaining = l;
        for &s in &sides {
            let capacity = ((1.0 / s) + 1e-9).floor().max(1.0) as usize;
            let k = capacity.min(remaining).max(1);
            counts.push(k);
            remaining = remaining.div_ceil(k);
        }
        if remaining > 1 {
            return Err(Error::invariant(
                "placement",
                format!("{l} symbols do not fit disjointly in the unstable unit cube"),
            ));
        }
        let spread = |idx: usize, count: usize, side: f64| {
            if count == 1 {
                0.5 * (1.0 - side)
            } else {
                idx as f64 * (1.0 - side) / (count - 1) as f64
            }
        };
        let unstable_offsets = (0..l)
            .map(|i| {
                let mut rest = i;
                (0..u)
                    .map(|k| {
                        let idx = rest % counts[k];
                        rest /= counts[k];
                        spread(idx, counts[k], sides[k])
                    })
                    .collect()
            })
            .collect();
        let c_max = self.stable_rates.iter().cloned().fold(0.0, f64::max);
        let stable_offsets = (0..l).map(|i| spread(i, l, c_max)).collect();
        Ok(Placement {
            unstable_offsets,
            stable_offsets,
        })
    }

    fn validate_placement(&self) -> Result<()> {
        let l = self.alphabet_size();
        let u = self.unstable_dim();
        let p = &self.placement;
        if p.unstable_offsets.len() != l || p.stable_offsets.len() != l {
            return Err(Error::invariant(
                "placement",
                format!("expected offsets for {l} symbols"),
            ));
        }
        const TOL: f64 = 1e-12;
        let unit_u = AffineCell::identity(u).image();
        let unit_s = AffineCell::identity(1).image();
        let mut unstable = Vec::with_capacity(l);
        let mut stable = Vec::with_capacity(l);
        for i in 0..l {
            if p.unstable_offsets[i].len() != u {
                return Err(Error::invariant(
                    format!("placement.unstable_offsets[{i}]"),
                    format!("expected {u} coordinates"),
                ));
            }
            let bu = self.unstable_cell(i).image();
            let bs = self.stable_cell(i).image();
            if !unit_u.contains_box(&bu, TOL) {
                return Err(Error::invariant(
                    format!("placement.unstable_offsets[{i}]"),
                    "rectangle leaves the unstable unit cube",
                ));
            }
            if !unit_s.contains_box(&bs, TOL) {
                return Err(Error::invariant(
                    format!("placement.stable_offsets[{i}]"),
                    "interval leaves the stable unit interval",
                ));
            }
            unstable.push(bu);
            stable.push(bs);
        }
        for a in 0..l {
            for b in a + 1..l {
                if unstable[a].overlaps_interior(&unstable[b], TOL) {
                    return Err(Error::invariant(
                        format!("placement.unstable_offsets[{b}]"),
                        format!("rectangles of symbols {a} and {b} overlap"),
                    ));
                }
                if stable[a].overlaps_interior(&stable[b], TOL) {
                    return Err(Error::invariant(
                        format!("placement.stable_offsets[{b}]"),
                        format!("stable intervals of symbols {a} and {b} overlap"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Diagonal model of `f^N`: alphabet = admissible `N`-words, rates and
    /// placement composed along each word.
    pub fn power(&self, n: usize, limits: &Limits) -> Result<(HorseshoeModel, Vec<Word>)> {
        let rates = self.require_diagonal("power model")?;
        let (subshift, blocks) = self.subshift.power_subshift(n, limits)?;
        let ell = self.bands.count();
        let new_rates = blocks
            .iter()
            .map(|w| (0..ell).map(|j| w.iter().map(|&i| rates[i][j]).product()).collect())
            .collect();
        let stable = blocks.iter().map(|w| (self.stable_log(w)).exp()).collect();
        let unstable_offsets = blocks.iter().map(|w| self.compose_unstable(w).offset).collect();
        let stable_offsets = blocks.iter().map(|w| self.compose_stable(w).offset[0]).collect();
        let model = HorseshoeModel {
            subshift,
            bands: self.bands.clone(),
            cocycle: UnstableCocycle::Diagonal { rates: new_rates },
            stable_rates: stable,
            placement: Placement {
                unstable_offsets,
                stable_offsets,
            },
        };
        Ok((model, blocks))
    }

    /// `g_{w_0} ∘ ⋯ ∘ g_{w_{n−1}}` on the unstable leaf.
    pub fn compose_unstable(&self, w: &[usize]) -> AffineCell {
        w.iter().fold(AffineCell::identity(self.unstable_dim()), |acc, &i| {
            acc.compose(&self.unstable_cell(i))
        })
    }

    /// `h_{w_0} ∘ ⋯ ∘ h_{w_{n−1}}` on the stable leaf (the word read as a
    /// past itinerary `i_{−1} i_{−2} ⋯`).
    pub fn compose_stable(&self, w: &[usize]) -> AffineCell {
        w.iter()
            .fold(AffineCell::identity(1), |acc, &i| acc.compose(&self.stable_cell(i)))
    }

    /// Geometric realization of the cylinder of `w`.
    pub fn realize_cylinder(&self, w: &[usize]) -> Result<CylinderBox> {
        if !self.subshift.is_admissible(w) {
            return Err(Error::invalid(format!("word {} is not admissible", Word::from(w))));
        }
        let cell = self.compose_unstable(w).image();
        let u = self.unstable_dim();
        let inner_sides = (0..u)
            .map(|k| (-self.log_band_norm(w, self.bands.band_of_coordinate(k))).exp())
            .collect();
        let outer_sides = (0..u)
            .map(|k| (-self.log_band_conorm(w, self.bands.band_of_coordinate(k))).exp())
            .collect();
        Ok(CylinderBox {
            inner: AxisBox {
                lower: cell.lower.clone(),
                sides: inner_sides,
            },
            outer: AxisBox {
                lower: cell.lower.clone(),
                sides: outer_sides,
            },
            cell,
            stable: self.compose_stable(w).image(),
        })
    }
}

/// Realized cylinder. For diagonal models `inner`, `outer` and `cell`
/// coincide; for cocycle models `inner ⊆ outer ⊆ cell`, where `cell` is the
/// composition of the per-symbol outer cells (nested under extension).
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderBox {
    pub inner: AxisBox,
    pub outer: AxisBox,
    pub cell: AxisBox,
    pub stable: AxisBox,
}

fn scaled_product<'a>(mats: impl Iterator<Item = &'a DMatrix<f64>>) -> (DMatrix<f64>, f64) {
    let mut p: Option<DMatrix<f64>> = None;
    let mut log_scale = 0.0;
    for b in mats {
        let mut next = match p {
            None => b.clone(),
            Some(ref q) => b * q,
        };
        let n = next.norm();
        next /= n;
        log_scale += n.ln();
        p = Some(next);
    }
    (p.expect("nonempty word"), log_scale)
}

fn validate_diagonal(l: usize, bands: &BandStructure, rates: &[Vec<f64>]) -> Result<()> {
    let ell = bands.count();
    if rates.len() != l {
        return Err(Error::invariant(
            "rates",
            format!("expected {l} rows, found {}", rates.len()),
        ));
    }
    for (i, row) in rates.iter().enumerate() {
        if row.len() != ell {
            return Err(Error::invariant(
                format!("rates[{i}]"),
                format!("expected {ell} band rates, found {}", row.len()),
            ));
        }
        for (j, &r) in row.iter().enumerate() {
            if !(r > 1.0) || !r.is_finite() {
                return Err(Error::invariant(
                    format!("rates[{i}][{j}]"),
                    format!("expansion rate {r} must exceed 1"),
                ));
            }
        }
    }
    for j in 0..ell.saturating_sub(1) {
        let slow_max = rates.iter().map(|r| r[j + 1]).fold(0.0, f64::max);
        let fast_min = rates.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
        if !(slow_max < fast_min) {
            return Err(Error::invariant(
                format!("rates[*][{}]", j + 1),
                format!(
                    "domination fails: max rate of band {} is {slow_max}, min rate of band {j} is {fast_min}",
                    j + 1
                ),
            ));
        }
    }
    Ok(())
}

fn validate_matrices(l: usize, bands: &BandStructure, mats: &[Vec<DMatrix<f64>>]) -> Result<()> {
    let ell = bands.count();
    if mats.len() != l {
        return Err(Error::invariant(
            "matrices",
            format!("expected {l} rows, found {}", mats.len()),
        ));
    }
    let mut smin = vec![f64::INFINITY; ell];
    let mut smax = vec![0.0f64; ell];
    for (i, row) in mats.iter().enumerate() {
        if row.len() != ell {
            return Err(Error::invariant(
                format!("matrices[{i}]"),
                format!("expected {ell} band matrices, found {}", row.len()),
            ));
        }
        for (j, b) in row.iter().enumerate() {
            let m = bands.multiplicity(j);
            if m > MAX_COCYCLE_BAND_DIM {
                return Err(Error::invariant(
                    format!("bands[{j}]"),
                    format!("cocycle bands are limited to dimension {MAX_COCYCLE_BAND_DIM}"),
                ));
            }
            if b.nrows() != m || b.ncols() != m {
                return Err(Error::invariant(
                    format!("matrices[{i}][{j}]"),
                    format!("expected a {m}x{m} matrix"),
                ));
            }
            let sv = b.singular_values();
            let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = sv.iter().cloned().fold(0.0, f64::max);
            if !(lo > 0.0) || !hi.is_finite() {
                return Err(Error::invariant(format!("matrices[{i}][{j}]"), "matrix is singular"));
            }
            smin[j] = smin[j].min(lo);
            smax[j] = smax[j].max(hi);
        }
    }
    for j in 0..ell.saturating_sub(1) {
        if !(smax[j + 1] < smin[j]) {
            return Err(Error::invariant(
                format!("matrices[*][{}]", j + 1),
                format!(
                    "domination fails: largest singular value {} of band {} is not below smallest {} of band {j}",
                    smax[j + 1],
                    j + 1,
                    smin[j]
                ),
            ));
        }
    }
    if !(smin[ell - 1] > 1.0) {
        return Err(Error::invariant(
            format!("matrices[*][{}]", ell - 1),
            format!(
                "expansion fails: smallest singular value {} is not above 1",
                smin[ell - 1]
            ),
        ));
    }
    Ok(())
}

/// Rotation by `theta` times `diag(a, b)`.
pub fn rotation_scaling(theta: f64, a: f64, b: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c * a, -s * b, s * a, c * b])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conformal() -> HorseshoeModel {
        HorseshoeModel::diagonal(
            SubshiftOfFiniteType::full(2),
            BandStructure::new(vec![1]).unwrap(),
            vec![vec![3.0], vec![3.0]],
            vec![1.0 / 3.0; 2],
        )
        .unwrap()
    }

    fn two_band() -> HorseshoeModel {
        HorseshoeModel::diagonal(
            SubshiftOfFiniteType::full(2),
            BandStructure::new(vec![1, 1]).unwrap(),
            vec![vec![4.0, 2.0], vec![4.0, 2.0]],
            vec![0.25, 0.25],
        )
        .unwrap()
    }

    fn rotation_model() -> HorseshoeModel {
        HorseshoeModel::cocycle(
            SubshiftOfFiniteType::full(2),
            BandStructure::new(vec![2]).unwrap(),
            vec![
                vec![rotation_scaling(0.4, 4.0, 2.5)],
                vec![rotation_scaling(1.3, 4.0, 2.5)],
            ],
            vec![0.3, 0.3],
        )
        .unwrap()
    }

    /// Closed-form singular values of a 2×2 matrix.
    fn svd2(m: &DMatrix<f64>) -> (f64, f64) {
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let s1 = a * a + b * b + c * c + d * d;
        let det = (a * d - b * c).abs();
        let disc = (s1 * s1 - 4.0 * det * det).max(0.0).sqrt();
        (((s1 + disc) / 2.0).sqrt(), ((s1 - disc) / 2.0).sqrt())
    }

    #[test]
    fn band_partial_sums() {
        let b = BandStructure::new(vec![2, 1, 3]).unwrap();
        assert_eq!(b.unstable_dim(), 6);
        assert_eq!((0..=3).map(|d| b.partial_sum(d)).collect::<Vec<_>>(), [0, 2, 3, 6]);
        assert_eq!(
            (0..=3).map(|d| b.reversed_partial_sum(d)).collect::<Vec<_>>(),
            [0, 3, 4, 6]
        );
        assert_eq!(b.band_of_coordinate(2), 1);
        assert!(BandStructure::new(vec![1, 0]).is_err());
    }

    #[test]
    fn diagonal_norms() {
        let m = conformal();
        assert!((m.band_norm(&[0, 1, 1, 0], 0) - 81.0).abs() < 1e-9);
        assert_eq!(m.band_norm(&[0, 1], 0), m.band_conorm(&[0, 1], 0));
    }

    #[test]
    fn cocycle_single_symbol() {
        let m = rotation_model();
        assert!((m.band_norm(&[0], 0) - 4.0).abs() < 1e-12);
        assert!((m.band_conorm(&[0], 0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn cocycle_products_match_closed_form_svd() {
        let m = rotation_model();
        let b0 = rotation_scaling(0.4, 4.0, 2.5);
        let b1 = rotation_scaling(1.3, 4.0, 2.5);
        // w = 0 1: product B_1 B_0.
        let (hi, lo) = svd2(&(&b1 * &b0));
        assert!((m.band_norm(&[0, 1], 0) - hi).abs() < 1e-9 * hi);
        assert!((m.band_conorm(&[0, 1], 0) - lo).abs() < 1e-9 * lo);
        // w = 1 0 1: product B_1 B_0 B_1.
        let (hi, lo) = svd2(&(&b1 * &b0 * &b1));
        assert!((m.band_norm(&[1, 0, 1], 0) - hi).abs() < 1e-9 * hi);
        assert!((m.band_conorm(&[1, 0, 1], 0) - lo).abs() < 1e-9 * lo);
    }

    #[test]
    fn stable_logs() {
        let m = conformal();
        assert!((m.stable_log(&[0, 1]) + 2.0 * 3f64.ln()).abs() < 1e-14);
        let m = HorseshoeModel::diagonal(
            SubshiftOfFiniteType::full(2),
            BandStructure::new(vec![1]).unwrap(),
            vec![vec![3.0], vec![3.0]],
            vec![0.5, 0.25],
        )
        .unwrap();
        assert!((m.stable_log(&[0, 1]) + 3.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn middle_thirds_placement() {
        let m = conformal();
        let offs = &m.placement().unstable_offsets;
        assert_eq!(offs[0], vec![0.0]);
        assert!((offs[1][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.placement().stable_offsets[1] - 2.0 / 3.0).abs() < 1e-15);
        let b = m.realize_cylinder(&[0, 1, 1]).unwrap();
        assert!((b.cell.sides[0] - 1.0 / 27.0).abs() < 1e-15);
        assert!((b.stable.sides[0] - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn cylinder_nesting() {
        for m in [conformal(), two_band(), rotation_model()] {
            let w = [0, 1, 0];
            let parent = m.realize_cylinder(&w).unwrap();
            for a in 0..2 {
                let child = m.realize_cylinder(&[0, 1, 0, a]).unwrap();
                assert!(parent.cell.contains_box(&child.cell, 1e-14));
                assert!(child.outer.contains_box(&child.inner, 1e-14));
                assert!(child.cell.contains_box(&child.outer, 1e-14));
            }
        }
    }

    #[test]
    fn inner_outer_ratio_bounded_by_condition_numbers() {
        let m = rotation_model();
        let w = [0, 1, 1, 0];
        let b = m.realize_cylinder(&w).unwrap();
        let cond: f64 = w
            .iter()
            .map(|&i| m.band_norm(&[i], 0) / m.band_conorm(&[i], 0))
            .product();
        for k in 0..2 {
            assert!(b.outer.sides[k] / b.inner.sides[k] <= cond * (1.0 + 1e-12));
        }
    }

    #[test]
    fn invariants_rejected() {
        let s = SubshiftOfFiniteType::full(2);
        let two = BandStructure::new(vec![1, 1]).unwrap();
        // Domination: λ₂ ≥ λ₁.
        let err = HorseshoeModel::diagonal(s.clone(), two.clone(), vec![vec![2.0, 3.0]; 2], vec![0.2; 2]).unwrap_err();
        assert!(matches!(err, Error::Invariant { .. }), "{err}");
        // Contraction rate 1.
        let one = BandStructure::new(vec![1]).unwrap();
        let err = HorseshoeModel::diagonal(s.clone(), one.clone(), vec![vec![3.0]; 2], vec![1.0, 0.2]).unwrap_err();
        assert!(err.to_string().contains("stable_rates[0]"), "{err}");
        // Expansion.
        assert!(HorseshoeModel::diagonal(s.clone(), one.clone(), vec![vec![0.9]; 2], vec![0.2; 2]).is_err());
        // Cocycle expansion.
        let err = HorseshoeModel::cocycle(
            s.clone(),
            BandStructure::new(vec![2]).unwrap(),
            vec![vec![rotation_scaling(0.3, 4.0, 0.8)]; 2],
            vec![0.2; 2],
        )
        .unwrap_err();
        assert!(err.to_string().contains("expansion"), "{err}");
        // Overlapping explicit placement.
        let err = HorseshoeModel::build(
            s,
            one,
            UnstableCocycle::Diagonal {
                rates: vec![vec![3.0]; 2],
            },
            vec![0.3; 2],
            Some(Placement {
                unstable_offsets: vec![vec![0.0], vec![0.2]],
                stable_offsets: vec![0.0, 0.5],
            }),
        )
        .unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn tiling_placement_is_accepted() {
        let m = HorseshoeModel::diagonal(
            SubshiftOfFiniteType::full(16),
            BandStructure::new(vec![1, 1]).unwrap(),
            vec![vec![8.0, 2.0]; 16],
            vec![1.0 / 16.0; 16],
        )
        .unwrap();
        let offs = &m.placement().unstable_offsets;
        assert_eq!(offs[9], vec![1.0 / 8.0, 0.5]);
    }

    #[test]
    fn power_model_composes() {
        let m = two_band();
        let (p, blocks) = m.power(2, &Limits::default()).unwrap();
        assert_eq!(p.alphabet_size(), 4);
        for (k, w) in blocks.iter().enumerate() {
            assert!((p.log_band_norm(&[k], 0) - m.log_band_norm(w, 0)).abs() < 1e-14);
            assert_eq!(p.unstable_cell(k), m.compose_unstable(w));
            assert!((p.stable_cell(k).scale[0] - m.compose_stable(w).scale[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn submultiplicativity() {
        let m = rotation_model();
        let words: [&[usize]; 3] = [&[0, 1], &[1, 1, 0], &[0]];
        for a in words {
            for b in words {
                let ab: Vec<usize> = a.iter().chain(b).copied().collect();
                assert!(m.log_band_norm(&ab, 0) <= m.log_band_norm(a, 0) + m.log_band_norm(b, 0) + 1e-12);
                assert!(m.log_band_conorm(&ab, 0) >= m.log_band_conorm(a, 0) + m.log_band_conorm(b, 0) - 1e-12);
            }
        }
        let d = two_band();
        let (a, b): (&[usize], &[usize]) = (&[0, 1], &[1, 0, 0]);
        let ab: Vec<usize> = a.iter().chain(b).copied().collect();
        assert!((d.log_band_norm(&ab, 1) - d.log_band_norm(a, 1) - d.log_band_norm(b, 1)).abs() < 1e-12);
    }
}
