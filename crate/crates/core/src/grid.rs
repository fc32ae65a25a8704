//! Uniform grid geometry shared by measures, maximal fields and cell sets.
//!
//! A grid covers a rectangular window with `resolution` half-open cells per
//! axis (the same count on every axis; cell widths may differ per axis when
//! the window is not a cube). A cell belongs to a region iff its center does,
//! which makes boundary mass unambiguous.

use crate::error::{Error, Result};
use crate::geometry::RectBox;
use serde::{Deserialize, Serialize};

/// Window + resolution: everything needed to map between cell indices and
/// real coordinates. Cell `i` on axis `a` spans
/// `[lo + i·h_a, lo + (i+1)·h_a)` with `h_a = (hi_a − lo_a)/resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGeom {
    pub window: RectBox,
    pub resolution: usize,
}

impl GridGeom {
    pub fn new(window: RectBox, resolution: usize) -> Result<Self> {
        if resolution == 0 || !resolution.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "resolution must be a positive power of two, got {resolution}"
            )));
        }
        let cap = match window.dim() {
            1 => 4096,
            2 => 512,
            _ => 64,
        };
        if resolution > cap {
            return Err(Error::Resolution(format!(
                "resolution {resolution} exceeds the cap {cap} in dimension {}",
                window.dim()
            )));
        }
        Ok(GridGeom { window, resolution })
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width on axis `a`.
    pub fn cell_width(&self, a: usize) -> f64 {
        (self.window.hi[a] - self.window.lo[a]) / self.resolution as f64
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_width(a)).product()
    }

    /// Flat index of a multi-index (row-major, axis 0 slowest).
    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for &i in idx {
            debug_assert!(i < self.resolution);
            f = f * self.resolution + i;
        }
        f
    }

    /// Multi-index of a flat index.
    pub fn unflat(&self, mut f: usize) -> Vec<usize> {
        let n = self.dim();
        let mut idx = vec![0usize; n];
        for a in (0..n).rev() {
            idx[a] = f % self.resolution;
            f /= self.resolution;
        }
        idx
    }

    /// Center of the cell with multi-index `idx`.
    pub fn center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(a, &i)| self.window.lo[a] + (i as f64 + 0.5) * self.cell_width(a))
            .collect()
    }

    /// Per-axis half-open index range `[lo, hi)` of cells whose centers lie
    /// in `[b.lo, b.hi)`, clamped to the grid. The second return is true if
    /// clamping actually discarded part of the requested range (truncation).
    pub fn index_range(&self, b: &RectBox) -> (Vec<usize>, Vec<usize>, bool) {
        let n = self.dim();
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        let mut truncated = false;
        for a in 0..n {
            let h = self.cell_width(a);
            // center = lo + (i + 0.5) h ∈ [b.lo, b.hi)
            let qlo = (b.lo[a] - self.window.lo[a]) / h - 0.5;
            let qhi = (b.hi[a] - self.window.lo[a]) / h - 0.5;
            let ilo = (qlo - 1e-9).ceil().max(0.0);
            let ihi = (qhi - 1e-9).ceil().min(self.resolution as f64);
            if (qlo - 1e-9).ceil() < 0.0 || (qhi - 1e-9).ceil() > self.resolution as f64 {
                truncated = true;
            }
            if ihi <= ilo {
                return (vec![0; n], vec![0; n], truncated);
            }
            lo[a] = ilo as usize;
            hi[a] = ihi as usize;
        }
        (lo, hi, truncated)
    }

    /// Whether the axis-aligned box is grid-aligned (its faces lie on cell
    /// boundaries within a 1e-9 relative tolerance).
    pub fn is_aligned(&self, b: &RectBox) -> bool {
        (0..self.dim()).all(|a| {
            let h = self.cell_width(a);
            let f = |x: f64| {
                let q = (x - self.window.lo[a]) / h;
                (q - q.round()).abs() < 1e-9
            };
            f(b.lo[a]) && f(b.hi[a])
        })
    }

    /// Iterate all multi-indices in `[lo, hi)` (row-major), calling `f` with
    /// the multi-index and its flat index.
    pub fn for_each_in(&self, lo: &[usize], hi: &[usize], mut f: impl FnMut(&[usize], usize)) {
        let n = self.dim();
        if (0..n).any(|a| lo[a] >= hi[a]) {
            return;
        }
        let mut idx = lo.to_vec();
        loop {
            f(&idx, self.flat(&idx));
            let mut a = n;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < hi[a] {
                    break;
                }
                idx[a] = lo[a];
            }
        }
    }
}

/// Summed-area table over per-cell values, supporting O(2^n) range sums.
/// The table has `(resolution+1)^n` entries; `sum(lo, hi)` returns the sum of
/// values over the half-open index box `[lo, hi)`.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    dim: usize,
    res1: usize,
    data: Vec<f64>,
}

impl PrefixTable {
    pub fn build(geom: &GridGeom, values: &[f64]) -> PrefixTable {
        let n = geom.dim();
        let r = geom.resolution;
        let res1 = r + 1;
        let total = res1.pow(n as u32);
        let mut data = vec![0.0; total];
        // Scatter values at shifted indices, then run prefix sums axis by axis.
        let mut strides = vec![0usize; n];
        {
            let mut s = 1;
            for a in (0..n).rev() {
                strides[a] = s;
                s *= res1;
            }
        }
        let mut idx = vec![0usize; n];
        for (flat, &v) in values.iter().enumerate() {
            let mut f = flat;
            for a in (0..n).rev() {
                idx[a] = f % r;
                f /= r;
            }
            let pos: usize = (0..n).map(|a| (idx[a] + 1) * strides[a]).sum();
            data[pos] = v;
        }
        for a in 0..n {
            let stride = strides[a];
            // Run a prefix pass along axis `a` for every line.
            let block = stride * res1;
            let mut base = 0;
            while base < total {
                for off in 0..stride {
                    let line = base + off;
                    for i in 1..res1 {
                        data[line + i * stride] += data[line + (i - 1) * stride];
                    }
                }
                base += block;
            }
        }
        PrefixTable { dim: n, res1, data }
    }

    fn at(&self, idx: &[usize]) -> f64 {
        let mut f = 0;
        for &i in idx {
            f = f * self.res1 + i;
        }
        self.data[f]
    }

    /// Sum of values over cells in the half-open index box `[lo, hi)`.
    pub fn sum(&self, lo: &[usize], hi: &[usize]) -> f64 {
        debug_assert_eq!(lo.len(), self.dim);
        let n = self.dim;
        let mut acc = 0.0;
        let mut corner = vec![0usize; n];
        for mask in 0..(1usize << n) {
            let mut sign = 1.0;
            for a in 0..n {
                if mask & (1 << a) != 0 {
                    corner[a] = lo[a];
                    sign = -sign;
                } else {
                    corner[a] = hi[a];
                }
            }
            acc += sign * self.at(&corner);
        }
        acc
    }
}

/// A measurable set discretized as a bitmask over grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    pub geom: GridGeom,
    pub bits: Vec<bool>,
}

impl CellSet {
    pub fn empty(geom: &GridGeom) -> CellSet {
        CellSet {
            geom: geom.clone(),
            bits: vec![false; geom.len()],
        }
    }

    pub fn full(geom: &GridGeom) -> CellSet {
        CellSet {
            geom: geom.clone(),
            bits: vec![true; geom.len()],
        }
    }

    /// Cells whose centers lie in the half-open box.
    pub fn from_box(geom: &GridGeom, b: &RectBox) -> CellSet {
        let mut s = CellSet::empty(geom);
        let (lo, hi, _) = geom.index_range(b);
        geom.for_each_in(&lo, &hi, |_, flat| s.bits[flat] = true);
        s
    }

    pub fn from_pred(geom: &GridGeom, mut pred: impl FnMut(&[f64]) -> bool) -> CellSet {
        let mut s = CellSet::empty(geom);
        let lo = vec![0; geom.dim()];
        let hi = vec![geom.resolution; geom.dim()];
        geom.for_each_in(&lo, &hi, |idx, flat| {
            if pred(&geom.center(idx)) {
                s.bits[flat] = true;
            }
        });
        s
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &CellSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        debug_assert_eq!(self.geom, other.geom);
        CellSet {
            geom: self.geom.clone(),
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a || b)
                .collect(),
        }
    }

    pub fn intersect(&self, other: &CellSet) -> CellSet {
        debug_assert_eq!(self.geom, other.geom);
        CellSet {
            geom: self.geom.clone(),
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    /// True if any set cell touches the window boundary (its index is 0 or
    /// resolution−1 on some axis). Used to flag truncated halo iterates.
    pub fn touches_boundary(&self) -> bool {
        let r = self.geom.resolution;
        let n = self.geom.dim();
        for (flat, &b) in self.bits.iter().enumerate() {
            if !b {
                continue;
            }
            let idx = self.geom.unflat(flat);
            if (0..n).any(|a| idx[a] == 0 || idx[a] == r - 1) {
                return true;
            }
        }
        false
    }

    /// Run-length encoding of the flat bitmask: (start, len) runs of set
    /// cells, for compact export.
    pub fn to_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &b) in self.bits.iter().enumerate() {
            match (b, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - s));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.bits.len() - s));
        }
        runs
    }
}
