//! Roots of Bowen's equation for the singular-value families.
//!
//! Pressure is piecewise linear in the parameter with breakpoints at the
//! partial multiplicity sums, so roots are found by bisection.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{equilibrium_measure, lyapunov_exponents};
use crate::models::HorseshoeModel;
use crate::potentials::{phi, FamilyKind, LocallyConstantPotential};
use crate::pressure::{block_system_equilibrium, superadditive_pressure, BlockSpectra};
use crate::Limits;

/// Default bracket width at which bisection stops.
pub const ROOT_TOL: f64 = 1e-10;

/// Iteration cap for bisection.
pub const MAX_BISECTIONS: usize = 200;

/// Pressures this close to zero at an endpoint count as an exact root there.
pub const ENDPOINT_ZERO: f64 = 1e-12;

/// Where the root was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    Interior,
    /// Pressure vanishes at the lower end of the range.
    ExactAtLower,
    /// Pressure vanishes at the upper end of the range.
    ExactAtUpper,
    /// Pressure is still positive at the upper end; the upper end is returned.
    ClampedPositive,
}

/// Outcome of a bisection for a decreasing function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bisection {
    pub root: f64,
    pub bracket: (f64, f64),
    /// Function value at `root`.
    pub residual: f64,
    pub iterations: usize,
    pub status: RootStatus,
    /// Every evaluation as `(parameter, value)`, in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

/// Values strictly decrease when the evaluations are sorted by parameter.
fn trace_decreasing(trace: &[(f64, f64)]) -> bool {
    let mut t = trace.to_vec();
    t.sort_by(|a, b| a.0.total_cmp(&b.0));
    t.dedup_by(|a, b| a.0 == b.0);
    t.windows(2).all(|p| p[1].1 < p[0].1)
}

impl Bisection {
    pub fn trace_is_decreasing(&self) -> bool {
        trace_decreasing(&self.trace)
    }
}

/// Bisection for the zero of a decreasing `f` on `[lo, hi]`.
pub fn bisect(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<Bisection> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::invalid("bisection needs lo < hi and tol > 0"));
    }
    let mut trace = Vec::new();
    let f_lo = f(lo)?;
    trace.push((lo, f_lo));
    if f_lo < -ENDPOINT_ZERO {
        return Err(Error::invalid(format!(
            "pressure at the lower end {lo} is negative ({f_lo}); no root in range"
        )));
    }
    if f_lo.abs() <= ENDPOINT_ZERO {
        return Ok(Bisection {
            root: lo,
            bracket: (lo, lo),
            residual: f_lo,
            iterations: 0,
            status: RootStatus::ExactAtLower,
            trace,
        });
    }
    let f_hi = f(hi)?;
    trace.push((hi, f_hi));
    if f_hi.abs() <= ENDPOINT_ZERO || f_hi > 0.0 {
        return Ok(Bisection {
            root: hi,
            bracket: (hi, hi),
            residual: f_hi,
            iterations: 0,
            status: if f_hi > ENDPOINT_ZERO {
                RootStatus::ClampedPositive
            } else {
                RootStatus::ExactAtUpper
            },
            trace,
        });
    }
    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    while b - a > tol && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        let v = f(mid)?;
        trace.push((mid, v));
        if v > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    if b - a > tol {
        return Err(Error::NotConverged("bisection"));
    }
    let root = 0.5 * (a + b);
    let residual = f(root)?;
    trace.push((root, residual));
    Ok(Bisection {
        root,
        bracket: (a, b),
        residual,
        iterations,
        status: RootStatus::Interior,
        trace,
    })
}

/// A root of Bowen's equation for one family at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootResult {
    pub family: FamilyKind,
    /// Level `k`; the block length is `2^k`.
    pub level: usize,
    pub horizon: usize,
    pub root: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub iterations: usize,
    pub status: RootStatus,
    pub trace: Vec<(f64, f64)>,
}

impl RootResult {
    fn from_bisection(family: FamilyKind, level: usize, horizon: usize, b: Bisection) -> Self {
        RootResult {
            family,
            level,
            horizon,
            root: b.root,
            bracket: b.bracket,
            residual: b.residual,
            iterations: b.iterations,
            status: b.status,
            trace: b.trace,
        }
    }

    pub fn trace_is_decreasing(&self) -> bool {
        trace_decreasing(&self.trace)
    }
}

fn horizon_of(level: usize) -> Result<usize> {
    1usize
        .checked_shl(level as u32)
        .filter(|&n| n > 0)
        .ok_or(Error::Overflow("computing the block length"))
}

/// Root of `(1/N) P(f^N, sign·family)` at `N = 2^level` for any family.
pub fn bowen_root(
    model: &HorseshoeModel,
    kind: FamilyKind,
    level: usize,
    tol: f64,
    limits: &Limits,
) -> Result<RootResult> {
    let horizon = horizon_of(level)?;
    let spectra = BlockSpectra::new(model, horizon, limits)?;
    let (lo, hi) = kind.range(model);
    // φ enters with a plus sign but is itself decreasing in t'.
    let b = bisect(|x| spectra.pressure(kind, x), lo, hi, tol)?;
    Ok(RootResult::from_bisection(kind, level, horizon, b))
}

/// Root of `(1/N) P(f^N, −ψ^s)` (or `−ψ̂^t`) on `[0, u]`.
pub fn bowen_root_unstable(
    model: &HorseshoeModel,
    kind: FamilyKind,
    level: usize,
    tol: f64,
    limits: &Limits,
) -> Result<RootResult> {
    if kind == FamilyKind::Phi {
        return Err(Error::invalid("unstable roots use the psi or psihat family"));
    }
    bowen_root(model, kind, level, tol, limits)
}

/// Root of `(1/N) P(f^N, φ^{t'})` on `[0, 1]`.
pub fn bowen_root_stable(model: &HorseshoeModel, level: usize, tol: f64, limits: &Limits) -> Result<RootResult> {
    bowen_root(model, FamilyKind::Phi, level, tol, limits)
}

/// Roots at levels `0..=max_level` and the monotonicity certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSequence {
    pub roots: Vec<RootResult>,
    /// Consecutive differences are at least `−1e−10`.
    pub nondecreasing: bool,
    /// Last root, the estimate of the limit.
    pub estimate: f64,
    /// Super-additive pressure at the estimate, at the same top level.
    pub pressure_at_estimate: f64,
}

/// Slack for the nondecreasing check on root sequences.
pub const SEQUENCE_SLACK: f64 = 1e-10;

pub fn root_sequence(
    model: &HorseshoeModel,
    kind: FamilyKind,
    max_level: usize,
    tol: f64,
    limits: &Limits,
) -> Result<RootSequence> {
    let roots: Vec<RootResult> = (0..=max_level)
        .into_par_iter()
        .map(|k| bowen_root(model, kind, k, tol, limits))
        .collect::<Result<_>>()?;
    let nondecreasing = roots.windows(2).all(|p| p[1].root - p[0].root >= -SEQUENCE_SLACK);
    let estimate = roots.last().expect("at least level 0").root;
    let pressure_at_estimate = superadditive_pressure(model, kind, estimate, max_level, limits)?.estimate;
    Ok(RootSequence {
        roots,
        nondecreasing,
        estimate,
        pressure_at_estimate,
    })
}

/// `|t' − h_ν/(−λ^s(ν))|` with `ν` the equilibrium of `φ^{t'}` at the stable
/// root `t'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StableIdentity {
    pub root: f64,
    pub entropy: f64,
    pub stable_exponent: f64,
    pub ratio: f64,
    pub residual: f64,
}

pub fn stable_root_identity_check(
    model: &HorseshoeModel,
    level: usize,
    tol: f64,
    limits: &Limits,
) -> Result<StableIdentity> {
    let root = bowen_root_stable(model, level, tol, limits)?.root;
    let s = model.subshift();
    let pot = LocallyConstantPotential::from_fn(s, 1, limits, |w| phi(model, w, root))?;
    let nu = equilibrium_measure(s, &pot)?;
    let entropy = nu.entropy();
    let stable_exponent = lyapunov_exponents(&nu, model, 1, limits)?.stable;
    let ratio = entropy / -stable_exponent;
    Ok(StableIdentity {
        root,
        entropy,
        stable_exponent,
        ratio,
        residual: (root - ratio).abs(),
    })
}

/// The lower bound `r_{ℓ−1} + (h − Σ_{j<ℓ} m_j λ_j)/λ_ℓ` evaluated with the
/// equilibrium data of `−ψ^{s*}` on the `N`-block system, against `s*`.
///
/// The expression is the zero of the extended last linear piece of the convex
/// function `s ↦ h − ∫ψ^s`, so it never exceeds `s*` and equals it when the
/// root lies in `[r_{ℓ−1}, u]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootLowerBound {
    pub root: f64,
    pub bound: f64,
    /// `root − bound`.
    pub margin: f64,
    pub entropy: f64,
    /// Per-band top exponents per base step at the block level.
    pub exponents: Vec<f64>,
    /// `margin ≥ −1e−6`.
    pub holds: bool,
}

pub fn root_lower_bound_check(
    model: &HorseshoeModel,
    level: usize,
    tol: f64,
    limits: &Limits,
) -> Result<RootLowerBound> {
    let root_res = bowen_root_unstable(model, FamilyKind::Psi, level, tol, limits)?;
    let root = root_res.root;
    let n = root_res.horizon;
    let spectra = BlockSpectra::new(model, n, limits)?;
    let blocks = spectra.signed_blocks(FamilyKind::Psi, root);
    let (pressure, masses) = block_system_equilibrium(model.subshift(), n, &blocks)?;
    let integral: f64 = masses.iter().zip(&blocks).map(|(m, b)| m * b.2).sum::<f64>() / n as f64;
    let entropy = pressure - integral;
    let bands = model.bands();
    let ell = bands.count();
    let exponents: Vec<f64> = (0..ell)
        .map(|j| {
            masses
                .iter()
                .enumerate()
                .map(|(i, m)| m * spectra.spectrum(i).norm_logs[j])
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let lower: f64 = (0..ell - 1).map(|j| bands.multiplicity(j) as f64 * exponents[j]).sum();
    let bound = bands.partial_sum(ell - 1) as f64 + (entropy - lower) / exponents[ell - 1];
    let margin = root - bound;
    Ok(RootLowerBound {
        root,
        bound,
        margin,
        entropy,
        exponents,
        holds: margin >= -1e-6,
    })
}
