//! Dimension side: ball masses and local dimension slopes, box counting on
//! the geometric realization, the product bracket, the Katok family and the
//! dimension bracket experiment.
//!
//! Geometry is available for diagonal models only; the leaves carry the
//! sup-norm, so a ball is the product of its unstable and stable balls.

mod balls;
mod boxcount;
mod experiments;
mod katok;

pub use balls::{
    pointwise_dimension_bracket, sample_points, stable_ball_mass, unstable_ball_mass, LocalSlopes, RadiusGrid,
    SamplePoint,
};
pub use boxcount::{box_counting, BoxCount, BoxSet, DyadicGrid};
pub use experiments::{
    dimension_bracket_experiment, dimension_target, product_bracket, slice_roots_check, young_formula_check,
    BracketRow, DimensionReport, DimensionTarget, ProductBracket, SliceRootsReport, YoungReport,
};
pub use katok::{
    katok_family, EntropyCertificate, ExponentCertificate, KatokFamily, KatokFilter, KatokOptions, KatokRoute,
};

use serde::Serialize;

/// Comparison constants between Euclidean balls and products of leaf balls:
/// `B^u(γ₂r) × B^s(γ₂r) ⊂ B(r) ⊂ B^u(γ₁r) × B^s(γ₁r)` for orthogonal leaves.
pub const GAMMA_1: f64 = crate::models::GAMMA_1;
pub const GAMMA_2: f64 = crate::models::GAMMA_2;

/// Least-squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for a perfect or degenerate fit.
    pub r_squared: f64,
}

pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}
