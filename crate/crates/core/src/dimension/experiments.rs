use rayon::prelude::*;
use serde::Serialize;

use super::balls::{local_slopes, sample_points, LocalSlopes, RadiusGrid};
use super::boxcount::{box_counting, BoxCount, BoxSet, DyadicGrid};
use super::katok::{katok_family, KatokOptions};
use crate::bowen::{bowen_root_stable, bowen_root_unstable};
use crate::error::{Error, Result};
use crate::gibbs::{equilibrium_measure, lyapunov_exponents, MarkovMeasure};
use crate::models::HorseshoeModel;
use crate::potentials::{as_locally_constant, FamilyKind, LocallyConstantPotential, SingularValueFamily};
use crate::Limits;

/// Depth of the itineraries drawn for ball-mass regressions.
const SAMPLE_DEPTH: usize = 48;
const SAMPLE_SEED: u64 = 0x5eed;

/// `t + t' − 2ε ≤ dim Λ ≤ u + t' + 2ε` at one level, with the ball-mass
/// slopes of the product of the two equilibrium states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductBracket {
    pub level: usize,
    pub epsilon: f64,
    pub unstable_root: f64,
    pub stable_root: f64,
    pub lower: f64,
    pub upper: f64,
    /// Present when slopes were requested on a diagonal model.
    pub slopes: Option<LocalSlopes>,
    /// Every slope lies in `[lower, upper]` (true when no slopes were taken).
    pub slopes_inside: bool,
}

impl ProductBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Equilibrium of `−ψ^t` at horizon 1 and of `+φ^{t'}`.
fn factor_measures(
    model: &HorseshoeModel,
    t: f64,
    t_stable: f64,
    limits: &Limits,
) -> Result<(MarkovMeasure, MarkovMeasure)> {
    let s = model.subshift();
    let psi = SingularValueFamily::new(model, FamilyKind::Psi, t, 1)?;
    let unstable = as_locally_constant(model, &psi, limits)?.map(|v| -v);
    let stable = LocallyConstantPotential::per_symbol(
        s,
        &model
            .stable_rates()
            .iter()
            .map(|c| t_stable * c.ln())
            .collect::<Vec<_>>(),
    )?;
    Ok((equilibrium_measure(s, &unstable)?, equilibrium_measure(s, &stable)?))
}

/// Bracket from the roots at `level`; with `samples > 0` also the local
/// slopes of the product measure at that many sampled points.
pub fn product_bracket(
    model: &HorseshoeModel,
    level: usize,
    epsilon: f64,
    tol: f64,
    samples: usize,
    grid: &RadiusGrid,
    limits: &Limits,
) -> Result<ProductBracket> {
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon must be nonnegative"));
    }
    let t = bowen_root_unstable(model, FamilyKind::Psi, level, tol, limits)?.root;
    let t_stable = bowen_root_stable(model, level, tol, limits)?.root;
    let u = model.unstable_dim() as f64;
    let lower = t + t_stable - 2.0 * epsilon;
    let upper = u + t_stable + 2.0 * epsilon;
    let slopes = if samples > 0 && model.is_diagonal() {
        let (mu_u, mu_s) = factor_measures(model, t, t_stable, limits)?;
        let points = sample_points(&mu_u, samples, SAMPLE_DEPTH, SAMPLE_SEED)?;
        Some(local_slopes(model, Some(&mu_u), Some(&mu_s), &points, grid, limits)?)
    } else {
        None
    };
    let slopes_inside = slopes.as_ref().is_none_or(|s| s.lower >= lower && s.upper <= upper);
    Ok(ProductBracket {
        level,
        epsilon,
        unstable_root: t,
        stable_root: t_stable,
        lower,
        upper,
        slopes,
        slopes_inside,
    })
}

fn require_conformal_pair(model: &HorseshoeModel) -> Result<()> {
    model.require_diagonal("this check")?;
    if model.unstable_dim() != 1 {
        return Err(Error::Unsupported(
            "needs one unstable and one stable direction".to_string(),
        ));
    }
    Ok(())
}

/// Young's formula `dim μ = h/λ_u + h/(−λ_s)` against the product ball
/// slopes of `mu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YoungReport {
    pub entropy: f64,
    pub unstable_exponent: f64,
    /// `Σ μ[i] log c_i`, negative.
    pub stable_exponent: f64,
    pub target: f64,
    pub slopes: LocalSlopes,
    /// `|mean slope − target|`.
    pub residual: f64,
}

pub fn young_formula_check(
    model: &HorseshoeModel,
    mu: &MarkovMeasure,
    samples: usize,
    grid: &RadiusGrid,
    limits: &Limits,
) -> Result<YoungReport> {
    require_conformal_pair(model)?;
    let h = mu.entropy();
    let lyap = lyapunov_exponents(mu, model, 1, limits)?;
    let target = h / lyap.bands[0] + h / (-lyap.stable);
    let points = sample_points(mu, samples, SAMPLE_DEPTH, SAMPLE_SEED)?;
    let slopes = local_slopes(model, Some(mu), Some(mu), &points, grid, limits)?;
    Ok(YoungReport {
        entropy: h,
        unstable_exponent: lyap.bands[0],
        stable_exponent: lyap.stable,
        target,
        residual: (slopes.mean - target).abs(),
        slopes,
    })
}

/// Bowen roots of the two slices against their box-counting dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRootsReport {
    pub unstable_root: f64,
    pub stable_root: f64,
    pub unstable_box: BoxCount,
    pub stable_box: BoxCount,
    pub unstable_residual: f64,
    pub stable_residual: f64,
}

pub fn slice_roots_check(
    model: &HorseshoeModel,
    tol: f64,
    grid: &DyadicGrid,
    limits: &Limits,
) -> Result<SliceRootsReport> {
    require_conformal_pair(model)?;
    let t_u = bowen_root_unstable(model, FamilyKind::Psi, 0, tol, limits)?.root;
    let t_s = bowen_root_stable(model, 0, tol, limits)?.root;
    let bu = box_counting(model, BoxSet::UnstableSlice, grid, limits)?;
    let bs = box_counting(model, BoxSet::StableSlice, grid, limits)?;
    Ok(SliceRootsReport {
        unstable_root: t_u,
        stable_root: t_s,
        unstable_residual: (bu.slope() - t_u).abs(),
        stable_residual: (bs.slope() - t_s).abs(),
        unstable_box: bu,
        stable_box: bs,
    })
}

/// Pesin residual below which a measure counts as an SRB-analogue.
const SRB_RESIDUAL: f64 = 1e-9;

/// `dim μ = dim^u μ + dim^s μ` for a measure on a diagonal model with one
/// stable direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionTarget {
    pub entropy: f64,
    /// `Σ m_j λ_j`.
    pub exponent_sum: f64,
    pub stable_exponent: f64,
    /// Entropy equals the exponent sum: the unstable part is full.
    pub srb: bool,
    /// `u` for an SRB-analogue, `h/λ` on a one-dimensional unstable leaf.
    pub unstable: f64,
    /// `h/(−λ_s)`.
    pub stable: f64,
    pub total: f64,
}

pub fn dimension_target(model: &HorseshoeModel, mu: &MarkovMeasure, limits: &Limits) -> Result<DimensionTarget> {
    model.require_diagonal("the dimension target")?;
    let h = mu.entropy();
    let lyap = lyapunov_exponents(mu, model, 1, limits)?;
    let bands = model.bands();
    let exponent_sum: f64 = (0..bands.count())
        .map(|j| bands.multiplicity(j) as f64 * lyap.bands[j])
        .sum();
    let srb = (h - exponent_sum).abs() <= SRB_RESIDUAL;
    let unstable = if srb {
        model.unstable_dim() as f64
    } else if model.unstable_dim() == 1 {
        h / lyap.bands[0]
    } else {
        return Err(Error::Unsupported(
            "the unstable dimension of a non-SRB measure is only known on a one-dimensional leaf".to_string(),
        ));
    };
    let stable = if h == 0.0 { 0.0 } else { h / (-lyap.stable) };
    Ok(DimensionTarget {
        entropy: h,
        exponent_sum,
        stable_exponent: lyap.stable,
        srb,
        unstable,
        stable,
        total: unstable + stable,
    })
}

/// One `(n, ε)` cell of the dimension bracket experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketRow {
    pub block_length: usize,
    pub epsilon: f64,
    pub retained_fraction: f64,
    pub entropy: f64,
    pub unstable_root: f64,
    pub stable_root: f64,
    pub lower: f64,
    pub upper: f64,
    pub contains_target: bool,
    pub exponents_certified: bool,
}

impl BracketRow {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Distance from the target to the bracket; 0 when it is contained.
    pub fn gap(&self, target: f64) -> f64 {
        (self.lower - target).max(target - self.upper).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub target: DimensionTarget,
    /// Rows ordered by block length, then by decreasing ε.
    pub rows: Vec<BracketRow>,
    /// `max(lower)` and `min(upper)` over all rows.
    pub lower: f64,
    pub upper: f64,
    /// Gap of the row with the largest `n` and smallest `ε`.
    pub final_gap: f64,
    pub final_width: f64,
    pub box_count: Option<BoxCount>,
}

/// Katok families over the `(n, ε)` grid, their unstable and stable roots
/// and the resulting brackets, against `u + h/(−λ_s)`.
#[allow(clippy::too_many_arguments)]
pub fn dimension_bracket_experiment(
    model: &HorseshoeModel,
    mu: &MarkovMeasure,
    block_lengths: &[usize],
    epsilons: &[f64],
    tol: f64,
    options: &KatokOptions,
    box_grid: Option<&DyadicGrid>,
    limits: &Limits,
) -> Result<DimensionReport> {
    model.require_diagonal("the dimension bracket experiment")?;
    if block_lengths.is_empty() || epsilons.is_empty() {
        return Err(Error::invalid("empty (n, epsilon) grid"));
    }
    let target = dimension_target(model, mu, limits)?;
    let u = model.unstable_dim() as f64;
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut ns = block_lengths.to_vec();
    ns.sort_unstable();
    let cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| eps.iter().map(move |&e| (n, e))).collect();
    let rows: Vec<BracketRow> = cells
        .par_iter()
        .map(|&(n, e)| -> Result<BracketRow> {
            let fam = katok_family(model, mu, n, e, options, limits)?;
            let t = fam.root(FamilyKind::Psi, tol)?.root;
            let t_stable = fam.root(FamilyKind::Phi, tol)?.root;
            let lower = t + t_stable - 2.0 * e;
            let upper = u + t_stable + 2.0 * e;
            Ok(BracketRow {
                block_length: n,
                epsilon: e,
                retained_fraction: fam.retained_fraction(),
                entropy: fam.entropy()?,
                unstable_root: t,
                stable_root: t_stable,
                lower,
                upper,
                contains_target: lower <= target.total && target.total <= upper,
                exponents_certified: fam.exponent_certificate()?.holds,
            })
        })
        .collect::<Result<_>>()?;
    let last = rows.last().expect("nonempty grid");
    let box_count = box_grid
        .map(|g| box_counting(model, BoxSet::Lambda, g, limits))
        .transpose()?;
    Ok(DimensionReport {
        lower: rows.iter().map(|r| r.lower).fold(f64::NEG_INFINITY, f64::max),
        upper: rows.iter().map(|r| r.upper).fold(f64::INFINITY, f64::min),
        final_gap: last.gap(target.total),
        final_width: last.width(),
        target,
        box_count,
        rows,
    })
}
