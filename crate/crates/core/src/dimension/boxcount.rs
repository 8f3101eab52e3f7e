use std::collections::HashSet;

use serde::Serialize;

use super::{least_squares, LinearFit};
use crate::error::{Error, Result};
use crate::models::{AffineCell, AxisBox, HorseshoeModel};
use crate::symbolic::SubshiftOfFiniteType;
use crate::Limits;

/// Which realized set to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoxSet {
    /// Forward itineraries on the unstable leaf.
    UnstableSlice,
    /// Backward itineraries on the stable leaf.
    StableSlice,
    /// The product of the two slices. Exact for full shifts; for other
    /// subshifts the product count is an upper bound.
    Lambda,
}

/// Boxes of side `2^{−k}`, `k = k_min..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DyadicGrid {
    pub k_min: u32,
    pub k_max: u32,
}

impl Default for DyadicGrid {
    fn default() -> Self {
        DyadicGrid { k_min: 4, k_max: 14 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCount {
    pub set: BoxSet,
    pub levels: Vec<u32>,
    pub counts: Vec<u64>,
    /// Slope of `log N(2^{−k})` against `k log 2`.
    pub fit: LinearFit,
}

impl BoxCount {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

const EDGE_SLACK: f64 = 1e-9;
/// Cells are refined to this fraction of the box side and mark the box
/// holding their center. Marking every box a coarser cell touches inflates
/// the counts by a scale-dependent boundary factor and biases the slope.
const REFINE: f64 = 0.125;
/// Prune a cell only when it spans at most this many grid boxes.
const PRUNE_SPAN: u64 = 64;

struct Marker<'a> {
    cells: &'a [AffineCell],
    next: &'a dyn Fn(Option<usize>) -> Vec<usize>,
    side: f64,
    marked: HashSet<Vec<i64>>,
    visits: usize,
    budget: usize,
}

impl Marker<'_> {
    fn ranges(&self, b: &AxisBox) -> Vec<(i64, i64)> {
        (0..b.lower.len())
            .map(|k| {
                let lo = (b.lower[k] / self.side + EDGE_SLACK).floor() as i64;
                let hi = ((b.upper(k) / self.side - EDGE_SLACK).ceil() as i64 - 1).max(lo);
                (lo, hi)
            })
            .collect()
    }

    fn for_boxes(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64]) -> bool) {
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            if !f(&idx) {
                return;
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return;
                }
                if idx[k] < ranges[k].1 {
                    idx[k] += 1;
                    break;
                }
                idx[k] = ranges[k].0;
                k += 1;
            }
        }
    }

    fn all_marked(&self, ranges: &[(i64, i64)]) -> bool {
        let span: u64 = ranges.iter().map(|(a, b)| (b - a + 1) as u64).product();
        if span > PRUNE_SPAN {
            return false;
        }
        let mut all = true;
        Self::for_boxes(ranges, |i| {
            all = self.marked.contains(i);
            all
        });
        all
    }

    fn visit(&mut self, state: Option<usize>, cell: &AffineCell) -> Result<()> {
        for j in (self.next)(state) {
            let child = cell.compose(&self.cells[j]);
            let b = child.image();
            let ranges = self.ranges(&b);
            if b.max_side() <= self.side * REFINE {
                let key: Vec<i64> = b.center().iter().map(|c| (c / self.side).floor() as i64).collect();
                self.marked.insert(key);
                continue;
            }
            if self.all_marked(&ranges) {
                continue;
            }
            self.visits += 1;
            if self.visits > self.budget {
                return Err(Error::Resource {
                    what: "box-counting cells",
                    needed: self.visits as u128,
                    limit: self.budget as u128,
                });
            }
            self.visit(Some(j), &child)?;
        }
        Ok(())
    }
}

fn slice_counts(
    cells: &[AffineCell],
    next: &dyn Fn(Option<usize>) -> Vec<usize>,
    levels: &[u32],
    limits: &Limits,
) -> Result<Vec<u64>> {
    let dim = cells[0].offset.len();
    levels
        .iter()
        .map(|&k| {
            let mut m = Marker {
                cells,
                next,
                side: 0.5f64.powi(k as i32),
                marked: HashSet::new(),
                visits: 0,
                budget: limits.word_cap,
            };
            m.visit(None, &AffineCell::identity(dim))?;
            Ok(m.marked.len() as u64)
        })
        .collect()
}

fn forward(s: &SubshiftOfFiniteType) -> impl Fn(Option<usize>) -> Vec<usize> + '_ {
    move |state| match state {
        None => (0..s.alphabet_size()).collect(),
        Some(i) => s.successors(i).collect(),
    }
}

/// Predecessors: the symbol before `x_{−m}` in time is `x_{−m−1}`, so the
/// admissibility matrix is read transposed.
fn backward(s: &SubshiftOfFiniteType) -> impl Fn(Option<usize>) -> Vec<usize> + '_ {
    move |state| match state {
        None => (0..s.alphabet_size()).collect(),
        Some(i) => (0..s.alphabet_size()).filter(|&a| s.allows(a, i)).collect(),
    }
}

/// Box-counting slope of a realized set on a dyadic grid.
pub fn box_counting(model: &HorseshoeModel, set: BoxSet, grid: &DyadicGrid, limits: &Limits) -> Result<BoxCount> {
    model.require_diagonal("box counting")?;
    if grid.k_max <= grid.k_min || grid.k_max > 30 {
        return Err(Error::invalid("dyadic grid needs k_min < k_max <= 30"));
    }
    let levels: Vec<u32> = (grid.k_min..=grid.k_max).collect();
    let s = model.subshift();
    let l = model.alphabet_size();
    let unstable: Vec<AffineCell> = (0..l).map(|i| model.unstable_cell(i)).collect();
    let stable: Vec<AffineCell> = (0..l).map(|i| model.stable_cell(i)).collect();
    let counts = match set {
        BoxSet::UnstableSlice => slice_counts(&unstable, &forward(s), &levels, limits)?,
        BoxSet::StableSlice => slice_counts(&stable, &backward(s), &levels, limits)?,
        BoxSet::Lambda => {
            let u = slice_counts(&unstable, &forward(s), &levels, limits)?;
            let st = slice_counts(&stable, &backward(s), &levels, limits)?;
            u.iter().zip(&st).map(|(a, b)| a * b).collect()
        }
    };
    let xs: Vec<f64> = levels.iter().map(|&k| k as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    Ok(BoxCount {
        set,
        fit: least_squares(&xs, &ys),
        levels,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BandStructure;

    fn model(l: usize, u: usize, rate: f64, stable: f64) -> HorseshoeModel {
        HorseshoeModel::diagonal(
            SubshiftOfFiniteType::full(l),
            BandStructure::new(vec![u]).unwrap(),
            vec![vec![rate]; l],
            vec![stable; l],
        )
        .unwrap()
    }

    #[test]
    fn middle_thirds() {
        let m = model(2, 1, 3.0, 1.0 / 3.0);
        let grid = DyadicGrid { k_min: 4, k_max: 16 };
        let target = 2f64.ln() / 3f64.ln();
        for set in [BoxSet::UnstableSlice, BoxSet::StableSlice] {
            let c = box_counting(&m, set, &grid, &Limits::default()).unwrap();
            assert!((c.slope() - target).abs() < 0.02, "{c:?}");
        }
        let lam = box_counting(&m, BoxSet::Lambda, &grid, &Limits::default()).unwrap();
        assert!((lam.slope() - 2.0 * target).abs() < 0.04, "{lam:?}");
    }

    #[test]
    fn carpet() {
        // Eight of the nine thirds of the square.
        let m = model(8, 2, 3.0, 0.1);
        let c = box_counting(
            &m,
            BoxSet::UnstableSlice,
            &DyadicGrid { k_min: 3, k_max: 10 },
            &Limits::default(),
        )
        .unwrap();
        let target = 8f64.ln() / 3f64.ln();
        assert!((c.slope() - target).abs() < 0.05, "{c:?}");
    }

    #[test]
    fn golden_mean_slices() {
        // Stable and unstable slices of a golden-mean horseshoe have the same
        // dimension: the transposed matrix has the same Perron root.
        let m = HorseshoeModel::diagonal(
            SubshiftOfFiniteType::golden_mean(),
            BandStructure::new(vec![1]).unwrap(),
            vec![vec![3.0]; 2],
            vec![1.0 / 3.0; 2],
        )
        .unwrap();
        let grid = DyadicGrid { k_min: 4, k_max: 16 };
        let u = box_counting(&m, BoxSet::UnstableSlice, &grid, &Limits::default()).unwrap();
        let s = box_counting(&m, BoxSet::StableSlice, &grid, &Limits::default()).unwrap();
        let target = ((1.0 + 5f64.sqrt()) / 2.0).ln() / 3f64.ln();
        assert!((u.slope() - target).abs() < 0.03, "{u:?}");
        assert!((s.slope() - target).abs() < 0.03, "{s:?}");
    }

    #[test]
    fn rejects_bad_grid() {
        let m = model(2, 1, 3.0, 1.0 / 3.0);
        assert!(box_counting(
            &m,
            BoxSet::Lambda,
            &DyadicGrid { k_min: 5, k_max: 5 },
            &Limits::default()
        )
        .is_err());
    }
}
