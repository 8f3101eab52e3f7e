use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{least_squares, LinearFit};
use crate::error::{Error, Result};
use crate::gibbs::MarkovMeasure;
use crate::models::{AffineCell, AxisBox, HorseshoeModel};
use crate::Limits;

/// Radii `r_k = r0 · ratio^{−k}` for `k = k_min..=k_max`; the ratio is 2
/// unless a self-similar scale is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusGrid {
    pub r0: f64,
    pub ratio: f64,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for RadiusGrid {
    fn default() -> Self {
        RadiusGrid {
            r0: 1.0,
            ratio: 2.0,
            k_min: 4,
            k_max: 12,
        }
    }
}

impl RadiusGrid {
    pub fn radii(&self) -> Vec<f64> {
        (self.k_min..=self.k_max)
            .map(|k| self.r0 * self.ratio.powi(-(k as i32)))
            .collect()
    }
}

/// A point of the realized set, coded by its itinerary around time 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePoint {
    /// `x_0 x_1 …`
    pub future: Vec<usize>,
    /// `x_{−1} x_{−2} …`
    pub past: Vec<usize>,
}

impl SamplePoint {
    /// Position on the unstable leaf (center of the deepest cylinder).
    pub fn unstable_position(&self, model: &HorseshoeModel) -> Vec<f64> {
        model.compose_unstable(&self.future).image().center()
    }

    /// Position on the stable leaf.
    pub fn stable_position(&self, model: &HorseshoeModel) -> f64 {
        model.compose_stable(&self.past).image().center()[0]
    }
}

fn require_one_step(mu: &MarkovMeasure) -> Result<()> {
    if mu.state_len() != 1 {
        return Err(Error::Unsupported(
            "ball masses need a one-step Markov measure".to_string(),
        ));
    }
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let w: Vec<f64> = weights.collect();
    let total: f64 = w.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, v) in w.iter().enumerate() {
        if x < *v {
            return i;
        }
        x -= v;
    }
    w.iter().rposition(|&v| v > 0.0).unwrap_or(0)
}

/// Probability that the symbol before `y` is `a` under the stationary chain.
fn backward(mu: &MarkovMeasure, a: usize, y: usize) -> f64 {
    let p = mu.stationary();
    p[a] * mu.transition(a, y) / p[y]
}

/// `count` points drawn from `mu` (fixed seed), with `depth` symbols on each
/// side of time 0.
pub fn sample_points(mu: &MarkovMeasure, count: usize, depth: usize, seed: u64) -> Result<Vec<SamplePoint>> {
    require_one_step(mu)?;
    let l = mu.states().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x0 = draw(&mut rng, mu.stationary().iter().copied());
        let mut future = vec![x0];
        while future.len() < depth {
            let cur = *future.last().expect("nonempty");
            future.push(draw(&mut rng, (0..l).map(|j| mu.transition(cur, j))));
        }
        let mut past = Vec::with_capacity(depth);
        let mut cur = x0;
        while past.len() < depth {
            let a = draw(&mut rng, (0..l).map(|a| backward(mu, a, cur)));
            past.push(a);
            cur = a;
        }
        out.push(SamplePoint { future, past });
    }
    Ok(out)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::OutOfRange {
            name: "radius",
            value: r,
            lo: 0.0,
            hi: 0.5,
        });
    }
    Ok(())
}

fn ball(center: &[f64], r: f64) -> AxisBox {
    AxisBox {
        lower: center.iter().map(|c| c - r).collect(),
        sides: vec![2.0 * r; center.len()],
    }
}

struct Cover<'a> {
    ball: AxisBox,
    r: f64,
    cells: &'a [AffineCell],
    visits: usize,
    budget: usize,
    mass: f64,
}

impl Cover<'_> {
    /// Adds the cylinder of `cell` (already known to meet the ball) or
    /// reports that it must be split.
    fn settle(&mut self, cell: &AffineCell, m: f64) -> Result<bool> {
        let b = cell.image();
        if !self.ball.meets(&b) {
            return Ok(true);
        }
        if self.ball.contains_box(&b, 0.0) || b.max_side() <= self.r {
            self.mass += m;
            return Ok(true);
        }
        self.visits += 1;
        if self.visits > self.budget {
            return Err(Error::Resource {
                what: "ball cover cells",
                needed: self.visits as u128,
                limit: self.budget as u128,
            });
        }
        Ok(false)
    }
}

/// Mass of the stopping-time cover of the sup-norm ball `B^u(center, r)` by
/// forward cylinders, under the conditional measure on the unstable leaf of a
/// point whose past ends with `past_symbol`.
///
/// A cylinder is taken whole once it lies inside the ball or its largest
/// side is at most `r`.
pub fn unstable_ball_mass(
    model: &HorseshoeModel,
    mu: &MarkovMeasure,
    past_symbol: usize,
    center: &[f64],
    r: f64,
    limits: &Limits,
) -> Result<f64> {
    model.require_diagonal("ball masses")?;
    require_one_step(mu)?;
    check_radius(r)?;
    if center.len() != model.unstable_dim() {
        return Err(Error::invalid("center has the wrong dimension"));
    }
    let cells: Vec<AffineCell> = (0..model.alphabet_size()).map(|i| model.unstable_cell(i)).collect();
    let mut cover = Cover {
        ball: ball(center, r),
        r,
        cells: &cells,
        visits: 0,
        budget: limits.word_cap,
        mass: 0.0,
    };
    fn rec(cover: &mut Cover, mu: &MarkovMeasure, state: usize, cell: &AffineCell, mass: f64) -> Result<()> {
        for j in 0..cover.cells.len() {
            let q = mu.transition(state, j);
            if q == 0.0 {
                continue;
            }
            let child = cell.compose(&cover.cells[j]);
            if !cover.settle(&child, mass * q)? {
                rec(cover, mu, j, &child, mass * q)?;
            }
        }
        Ok(())
    }
    rec(
        &mut cover,
        mu,
        past_symbol,
        &AffineCell::identity(model.unstable_dim()),
        1.0,
    )?;
    Ok(cover.mass)
}

/// Stable-leaf counterpart of [`unstable_ball_mass`]: pasts are drawn
/// backwards from `future_symbol = x_0` with `P(x_{−1} = a | x_0 = y) =
/// p_a Q_{ay} / p_y`.
pub fn stable_ball_mass(
    model: &HorseshoeModel,
    mu: &MarkovMeasure,
    future_symbol: usize,
    center: f64,
    r: f64,
    limits: &Limits,
) -> Result<f64> {
    model.require_diagonal("ball masses")?;
    require_one_step(mu)?;
    check_radius(r)?;
    let cells: Vec<AffineCell> = (0..model.alphabet_size()).map(|i| model.stable_cell(i)).collect();
    let mut cover = Cover {
        ball: ball(&[center], r),
        r,
        cells: &cells,
        visits: 0,
        budget: limits.word_cap,
        mass: 0.0,
    };
    fn rec(cover: &mut Cover, mu: &MarkovMeasure, y: usize, cell: &AffineCell, mass: f64) -> Result<()> {
        for a in 0..cover.cells.len() {
            let q = backward(mu, a, y);
            if q == 0.0 {
                continue;
            }
            let child = cell.compose(&cover.cells[a]);
            if !cover.settle(&child, mass * q)? {
                rec(cover, mu, a, &child, mass * q)?;
            }
        }
        Ok(())
    }
    rec(&mut cover, mu, future_symbol, &AffineCell::identity(1), 1.0)?;
    Ok(cover.mass)
}

/// Regression slopes of `log mass` against `log r` at sample points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSlopes {
    pub radii: Vec<f64>,
    pub fits: Vec<LinearFit>,
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
}

/// Ball masses of the unstable factor, the stable factor, or their product
/// at every sample point and radius; slopes per point.
pub(crate) fn local_slopes(
    model: &HorseshoeModel,
    unstable: Option<&MarkovMeasure>,
    stable: Option<&MarkovMeasure>,
    points: &[SamplePoint],
    grid: &RadiusGrid,
    limits: &Limits,
) -> Result<LocalSlopes> {
    if points.is_empty() {
        return Err(Error::invalid("no sample points"));
    }
    let radii = grid.radii();
    if radii.len() < 2 {
        return Err(Error::invalid("radius grid needs at least two radii"));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let fits: Vec<LinearFit> = points
        .par_iter()
        .map(|pt| -> Result<LinearFit> {
            let cu = pt.unstable_position(model);
            let cs = pt.stable_position(model);
            let ys = radii
                .iter()
                .map(|&r| -> Result<f64> {
                    let mut m = 1.0;
                    if let Some(mu) = unstable {
                        let past = pt.past.first().copied().unwrap_or(0);
                        m *= unstable_ball_mass(model, mu, past, &cu, r, limits)?;
                    }
                    if let Some(mu) = stable {
                        m *= stable_ball_mass(model, mu, pt.future[0], cs, r, limits)?;
                    }
                    if !(m > 0.0) {
                        return Err(Error::invalid("sample point carries no mass"));
                    }
                    Ok(m.ln())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(least_squares(&xs, &ys))
        })
        .collect::<Result<_>>()?;
    let slopes: Vec<f64> = fits.iter().map(|f| f.slope).collect();
    Ok(LocalSlopes {
        radii,
        lower: slopes.iter().cloned().fold(f64::INFINITY, f64::min),
        upper: slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean: slopes.iter().sum::<f64>() / slopes.len() as f64,
        fits,
    })
}

/// Min and max local-dimension slopes of the unstable conditional measures
/// of `mu` over the sample points.
pub fn pointwise_dimension_bracket(
    model: &HorseshoeModel,
    mu: &MarkovMeasure,
    points: &[SamplePoint],
    grid: &RadiusGrid,
    limits: &Limits,
) -> Result<LocalSlopes> {
    local_slopes(model, Some(mu), None, points, grid, limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::equilibrium_measure;
    use crate::models::{BandStructure, Placement, UnstableCocycle};
    use crate::potentials::LocallyConstantPotential;
    use crate::symbolic::SubshiftOfFiniteType;

    fn ternary() -> HorseshoeModel {
        HorseshoeModel::diagonal(
            SubshiftOfFiniteType::full(2),
            BandStructure::new(vec![1]).unwrap(),
            vec![vec![3.0]; 2],
            vec![1.0 / 3.0; 2],
        )
        .unwrap()
    }

    fn max_entropy(m: &HorseshoeModel) -> MarkovMeasure {
        equilibrium_measure(m.subshift(), &LocallyConstantPotential::zero(m.subshift())).unwrap()
    }

    #[test]
    fn cylinder_sized_ball() {
        let m = ternary();
        let mu = max_entropy(&m);
        let pts = sample_points(&mu, 3, 40, 7).unwrap();
        for pt in &pts {
            let c = pt.unstable_position(&m);
            for n in 2..8 {
                let r = 3f64.powi(-n);
                let mass = unstable_ball_mass(&m, &mu, pt.past[0], &c, r, &Limits::default()).unwrap();
                let ratio = mass / 2f64.powi(-n);
                assert!((0.25..=4.0).contains(&ratio), "n = {n}, ratio = {ratio}");
            }
        }
    }

    #[test]
    fn smaller_radius_smaller_mass() {
        let m = ternary();
        let mu = max_entropy(&m);
        let pt = &sample_points(&mu, 1, 40, 1).unwrap()[0];
        let c = pt.unstable_position(&m);
        let mut last = f64::INFINITY;
        for k in 2..12 {
            let r = 0.5f64.powi(k);
            let mass = unstable_ball_mass(&m, &mu, pt.past[0], &c, r, &Limits::default()).unwrap();
            assert!(mass <= last);
            last = mass;
        }
        assert!(unstable_ball_mass(&m, &mu, 0, &c, 0.7, &Limits::default()).is_err());
    }

    #[test]
    fn conformal_slopes() {
        let m = ternary();
        let mu = max_entropy(&m);
        let pts = sample_points(&mu, 6, 48, 3).unwrap();
        let target = 2f64.ln() / 3f64.ln();
        let grid = RadiusGrid {
            r0: 1.0,
            ratio: 3.0,
            k_min: 4,
            k_max: 10,
        };
        let s = pointwise_dimension_bracket(&m, &mu, &pts, &grid, &Limits::default()).unwrap();
        assert!(s.lower > target - 0.02 && s.upper < target + 0.02, "{s:?}");
        let st = local_slopes(&m, None, Some(&mu), &pts, &grid, &Limits::default()).unwrap();
        assert!(st.lower > target - 0.02 && st.upper < target + 0.02, "{st:?}");
    }

    #[test]
    fn single_band_with_equal_rates() {
        // u = 2, one band of multiplicity 2, rate 3, four symbols: slope
        // log 4 / log 3.
        // Corner placement: the slice is the product of two Cantor sets.
        let corners = vec![
            vec![0.0, 0.0],
            vec![2.0 / 3.0, 0.0],
            vec![0.0, 2.0 / 3.0],
            vec![2.0 / 3.0; 2],
        ];
        let m = HorseshoeModel::build(
            SubshiftOfFiniteType::full(4),
            BandStructure::new(vec![2]).unwrap(),
            UnstableCocycle::Diagonal {
                rates: vec![vec![3.0]; 4],
            },
            vec![0.2; 4],
            Some(Placement {
                unstable_offsets: corners,
                stable_offsets: vec![0.0, 0.25, 0.5, 0.75],
            }),
        )
        .unwrap();
        let mu = max_entropy(&m);
        let pts = sample_points(&mu, 4, 40, 11).unwrap();
        let grid = RadiusGrid {
            r0: 1.0,
            ratio: 3.0,
            k_min: 3,
            k_max: 9,
        };
        let s = pointwise_dimension_bracket(&m, &mu, &pts, &grid, &Limits::default()).unwrap();
        let target = 4f64.ln() / 3f64.ln();
        assert!(s.lower > target - 0.02 && s.upper < target + 0.02, "{s:?}");
    }
}
