//! Tensor-product discretization of the continuous state space and
//! multilinear interpolation of per-period value tables.
//!
//! Continuous dimensions follow one canonical order everywhere:
//! `[A (persistent only), K, M_AT, M_UP, M_LO, T_AT, T_LO]`. The discrete
//! regime is not part of the tensor product; value tables store one
//! contiguous slab per regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Regime, StateVector};

/// Maximum number of continuous dimensions (with productivity included).
pub const MAX_DIMS: usize = 7;

/// One equally spaced axis. The final node is pinned to `end` so the axis
/// covers exactly the requested closed interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Axis {
    start: f64,
    end: f64,
    step: f64,
    n: usize,
}

/// Position of a point within an axis: enclosing cell plus fractional offset.
#[derive(Debug, Clone, Copy)]
pub struct CellPos {
    /// Left node index of the enclosing cell, in `0..n-1`.
    pub cell: usize,
    /// Offset within the cell, in `[0, 1]`.
    pub frac: f64,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Axis> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Grid(format!("axis bounds must be finite, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::Grid(format!("axis needs at least 2 nodes, got {n}")));
        }
        if !(hi > lo) {
            return Err(Error::Grid(format!("axis range is degenerate: [{lo}, {hi}]")));
        }
        Ok(Axis {
            start: lo,
            end: hi,
            step: (hi - lo) / (n - 1) as f64,
            n,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lo(&self) -> f64 {
        self.start
    }

    pub fn hi(&self) -> f64 {
        self.end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Node coordinate; the last node is exactly the upper bound.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        if i == self.n - 1 {
            self.end
        } else {
            self.start + self.step * i as f64
        }
    }

    /// Locate `x` on the axis, clamping to the covered interval. The offset
    /// is snapped to exactly 0 or 1 when `x` coincides bitwise with a node,
    /// which makes interpolation exact at nodes.
    pub fn locate(&self, x: f64) -> CellPos {
        let x = x.clamp(self.start, self.end);
        let cell = (((x - self.start) / self.step) as usize).min(self.n - 2);
        let left = self.node(cell);
        let right = self.node(cell + 1);
        let frac = if x == left {
            0.0
        } else if x == right {
            1.0
        } else {
            ((x - left) / self.step).clamp(0.0, 1.0)
        };
        CellPos { cell, frac }
    }

    /// Like [`Axis::locate`], but points below the axis map to the first cell
    /// with a negative offset, so interpolation continues the first cell's
    /// linear piece downward instead of clamping. Clamping a value table at a
    /// lower capital edge that grows period over period would otherwise hand
    /// "free" capital to dis-saving policies — a spurious maximum an
    /// optimizer reliably finds. Points above the axis still clamp (the
    /// value functions here are concave, so upward chord extension would
    /// overestimate instead).
    pub fn locate_extend_low(&self, x: f64) -> CellPos {
        if x < self.start {
            CellPos {
                cell: 0,
                frac: (x - self.start) / self.step,
            }
        } else {
            self.locate(x)
        }
    }
}

/// Grid for one period: one axis per continuous dimension plus the strides of
/// the row-major (last dimension fastest) flat layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodGrid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    slab_len: usize,
    /// Dimension whose lower edge extends linearly instead of clamping
    /// (the capital axis in the grids built here).
    #[serde(default)]
    extend_low: Option<usize>,
}

impl PeriodGrid {
    pub fn new(axes: Vec<Axis>) -> Result<PeriodGrid> {
        if axes.is_empty() || axes.len() > MAX_DIMS {
            return Err(Error::Grid(format!(
                "expected between 1 and {MAX_DIMS} axes, got {}",
                axes.len()
            )));
        }
        let mut strides = vec![0usize; axes.len()];
        let mut acc = 1usize;
        for (d, axis) in axes.iter().enumerate().rev() {
            strides[d] = acc;
            acc = acc.checked_mul(axis.len()).ok_or_else(|| {
                Error::Grid("grid size overflows the address space".to_string())
            })?;
        }
        Ok(PeriodGrid {
            axes,
            strides,
            slab_len: acc,
            extend_low: None,
        })
    }

    /// Mark one dimension's lower edge as linearly extended in
    /// interpolation; see [`Axis::locate_extend_low`].
    pub fn with_extend_low(mut self, dim: usize) -> Result<PeriodGrid> {
        if dim >= self.axes.len() {
            return Err(Error::Grid(format!(
                "extension dimension {dim} out of range for {} axes",
                self.axes.len()
            )));
        }
        self.extend_low = Some(dim);
        Ok(self)
    }

    /// The dimension with a linearly extended lower edge, if any.
    pub fn extend_low(&self) -> Option<usize> {
        self.extend_low
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    /// Row-major strides of the flat slab layout, one per dimension.
    pub(crate) fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Number of nodes in one regime slab.
    pub fn slab_len(&self) -> usize {
        self.slab_len
    }

    /// Flat slab index of a multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims());
        idx.iter()
            .zip(&self.strides)
            .map(|(i, s)| i * s)
            .sum()
    }

    /// Multi-index of a flat slab index.
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.slab_len);
        self.strides
            .iter()
            .zip(&self.axes)
            .map(|(s, axis)| flat / s % axis.len())
            .collect()
    }

    /// Coordinates of a flat slab index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(i, axis)| axis.node(*i))
            .collect()
    }

    /// Multilinear interpolation of one regime slab at `x` (canonical
    /// dimension order). Out-of-box points are clamped to the boundary —
    /// except below the `extend_low` dimension's first node, where the first
    /// cell's linear piece continues downward. Node points reproduce stored
    /// values bitwise, and any affine function of the coordinates is
    /// reproduced exactly (up to rounding).
    pub fn interpolate(&self, slab: &[f64], x: &[f64]) -> Result<f64> {
        let d = self.dims();
        if x.len() != d {
            return Err(Error::Grid(format!(
                "point has {} coordinates, grid has {d}",
                x.len()
            )));
        }
        if slab.len() != self.slab_len {
            return Err(Error::Grid(format!(
                "slab has {} entries, grid has {}",
                slab.len(),
                self.slab_len
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite interpolation point {x:?}")));
        }

        let mut base = 0usize;
        let mut fracs = [0.0f64; MAX_DIMS];
        for dim in 0..d {
            let pos = if self.extend_low == Some(dim) {
                self.axes[dim].locate_extend_low(x[dim])
            } else {
                self.axes[dim].locate(x[dim])
            };
            base += pos.cell * self.strides[dim];
            fracs[dim] = pos.frac;
        }

        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut offset = 0usize;
            for dim in 0..d {
                if corner >> dim & 1 == 1 {
                    weight *= fracs[dim];
                    offset += self.strides[dim];
                } else {
                    weight *= 1.0 - fracs[dim];
                }
            }
            acc += weight * slab[base + offset];
        }
        Ok(acc)
    }
}

/// Per-period bounds for every continuous dimension. The productivity range
/// is always carried; grids only turn it into an axis for persistent shocks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeriodRanges {
    pub a: (f64, f64),
    pub k: (f64, f64),
    pub m: [(f64, f64); 3],
    pub temp: [(f64, f64); 2],
}

/// Node counts per dimension kind.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridCounts {
    /// Nodes for the productivity axis (persistent-shock grids only).
    pub a: usize,
    /// Nodes for the capital axis.
    pub k: usize,
    /// Nodes for each carbon and temperature axis.
    pub other: usize,
}

impl GridCounts {
    /// Full-resolution counts.
    pub fn full() -> GridCounts {
        GridCounts { a: 9, k: 9, other: 5 }
    }

    /// Reduced counts for desk-scale runs.
    pub fn fast() -> GridCounts {
        GridCounts { a: 3, k: 5, other: 3 }
    }
}

impl Default for GridCounts {
    fn default() -> Self {
        GridCounts::full()
    }
}

/// Full discretization: one `PeriodGrid` per period t = 0..=N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    periods: Vec<PeriodGrid>,
    persistent: bool,
}

impl Grid {
    /// Build per-period grids from reference-calibrated ranges.
    pub fn build(ranges: &[PeriodRanges], counts: &GridCounts, persistent: bool) -> Result<Grid> {
        if ranges.is_empty() {
            return Err(Error::Grid("no period ranges supplied".to_string()));
        }
        let k_dim = persistent as usize;
        let mut periods = Vec::with_capacity(ranges.len());
        for r in ranges {
            let mut axes = Vec::with_capacity(MAX_DIMS);
            if persistent {
                axes.push(Axis::new(r.a.0, r.a.1, counts.a)?);
            }
            axes.push(Axis::new(r.k.0, r.k.1, counts.k)?);
            for (lo, hi) in r.m {
                axes.push(Axis::new(lo, hi, counts.other)?);
            }
            for (lo, hi) in r.temp {
                axes.push(Axis::new(lo, hi, counts.other)?);
            }
            periods.push(PeriodGrid::new(axes)?.with_extend_low(k_dim)?);
        }
        Ok(Grid {
            periods,
            persistent,
        })
    }

    /// Whether productivity is a grid dimension.
    pub fn persistent(&self) -> bool {
        self.persistent
    }

    /// Number of periods with a grid (N + 1).
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn period(&self, t: usize) -> &PeriodGrid {
        &self.periods[t]
    }

    /// Total nodes per period including the two regime slabs.
    pub fn nodes_per_period(&self, t: usize) -> usize {
        2 * self.periods[t].slab_len()
    }

    /// Reconstruct the state at a slab node. `a_base_t` supplies productivity
    /// when it is not a grid dimension.
    pub fn state_at(&self, t: usize, flat: usize, regime: Regime, a_base_t: f64) -> StateVector {
        let grid = &self.periods[t];
        let idx = grid.multi_index(flat);
        let mut next_dim = 0usize;
        let mut coord = |_: &str| {
            let v = grid.axis(next_dim).node(idx[next_dim]);
            next_dim += 1;
            v
        };
        let a = if self.persistent { coord("a") } else { a_base_t };
        StateVector {
            a,
            k: coord("k"),
            m: [coord("m_at"), coord("m_up"), coord("m_lo")],
            temp: [coord("t_at"), coord("t_lo")],
            regime,
        }
    }
}
