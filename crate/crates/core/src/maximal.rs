//! Maximal-operator kernels: exact grid suprema over axis-parallel
//! rectangles/cubes, sampled suprema over homothets of a convex generator,
//! superlevel sets, halo iteration, the dyadic maximal operator, and the
//! convex-vs-rectangle comparability check.
//!
//! The rectangle kernel is exact: for every admissible side-length tuple it
//! computes all placement averages with summed-area tables and then maps
//! placements to covered cells with per-axis monotone-deque sliding-window
//! maxima, so the result is the true supremum over all grid-aligned
//! rectangles inside the window. Convex-shape suprema are lower bounds over
//! a declared scale/translation lattice.

use crate::error::{Error, Result};
use crate::geometry::{BasisFamily, BasisKind, ConvexBody, DyadicMesh, MeshElement, SideMode};
use crate::grid::{CellSet, GridGeom, PrefixTable};
use crate::measure::GridMeasure;
use rayon::prelude::*;
use std::collections::VecDeque;

/// A computed maximal function: one value per cell (the supremum of averages
/// over basis elements containing the cell center, restricted to elements
/// inside the window).
#[derive(Debug, Clone)]
pub struct MaximalField {
    pub geom: GridGeom,
    pub values: Vec<f64>,
    /// Human-readable basis descriptor.
    pub basis: String,
    /// Largest side-length ratio reached by the enumeration (1 for cubes and
    /// homothets); the grid caps eccentricity, and reports carry the cap.
    pub max_eccentricity: f64,
}

impl MaximalField {
    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.geom.flat(idx)]
    }
}

/// Options for the averaging kernels.
#[derive(Debug, Clone, Copy)]
pub struct KernelOpts {
    /// Restrict to basis elements of Euclidean diameter at most this.
    pub max_diameter: Option<f64>,
    /// Compute the infimum of averages instead of the supremum (used by the
    /// differentiation check). Cells covered by no admissible element keep
    /// `+∞`.
    pub minimize: bool,
}

impl Default for KernelOpts {
    fn default() -> Self {
        KernelOpts {
            max_diameter: None,
            minimize: false,
        }
    }
}

/// Weighted maximal function of an indicator set:
/// `sup { μ(B ∩ E)/μ(B) : B ∋ x, μ(B) > 0 }` over the basis family.
pub fn maximal_indicator(
    mu: &GridMeasure,
    family: &BasisFamily,
    e: &CellSet,
) -> Result<MaximalField> {
    if e.geom != mu.geom {
        return Err(Error::InvalidInput(
            "set and measure live on different grids".into(),
        ));
    }
    let num: Vec<f64> = mu
        .masses()
        .iter()
        .zip(&e.bits)
        .map(|(&m, &b)| if b { m } else { 0.0 })
        .collect();
    average_field(mu, &num, family, KernelOpts::default())
}

/// Weighted maximal function of a nonnegative grid function `f`:
/// `sup { ∫_B f dμ / μ(B) : B ∋ x, μ(B) > 0 }`.
pub fn maximal_function(mu: &GridMeasure, family: &BasisFamily, f: &[f64]) -> Result<MaximalField> {
    maximal_function_opts(mu, family, f, KernelOpts::default())
}

/// As [`maximal_function`], with diameter restriction / minimization options.
pub fn maximal_function_opts(
    mu: &GridMeasure,
    family: &BasisFamily,
    f: &[f64],
    opts: KernelOpts,
) -> Result<MaximalField> {
    if f.len() != mu.geom.len() {
        return Err(Error::InvalidInput("function has wrong length".into()));
    }
    if f.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "maximal operator is defined on |f|: pass a nonnegative finite function".into(),
        ));
    }
    let num: Vec<f64> = f.iter().zip(mu.masses()).map(|(&v, &m)| v * m).collect();
    average_field(mu, &num, family, opts)
}

/// Core kernel: extremal averages `num(B)/μ(B)` over the basis family, where
/// `num` is a per-cell numerator (already multiplied by the cell mass).
pub fn average_field(
    mu: &GridMeasure,
    num: &[f64],
    family: &BasisFamily,
    opts: KernelOpts,
) -> Result<MaximalField> {
    match &family.kind {
        BasisKind::AxisRectangles => rect_field(mu, num, family.side_mode, false, opts),
        BasisKind::AxisCubes => rect_field(mu, num, family.side_mode, true, opts),
        BasisKind::ConvexShape(body) => convex_field(mu, num, body, family, opts),
    }
}

// ---------------------------------------------------------------------------
// Rectangle kernel
// ---------------------------------------------------------------------------

fn side_lengths(res: usize, mode: SideMode) -> Vec<usize> {
    match mode {
        SideMode::All => (1..=res).collect(),
        SideMode::Dyadic => (0..)
            .map(|k| 1usize << k)
            .take_while(|&w| w <= res)
            .collect(),
    }
}

fn rect_field(
    mu: &GridMeasure,
    num: &[f64],
    mode: SideMode,
    cubes: bool,
    opts: KernelOpts,
) -> Result<MaximalField> {
    let geom = &mu.geom;
    let n = geom.dim();
    let res = geom.resolution;
    if mode == SideMode::All && (n == 2 && res > 128 || n == 3) {
        return Err(Error::Resolution(format!(
            "full side enumeration is limited to 128 cells in 2D and is \
             unavailable in 3D (resolution {res}, dimension {n}); \
             use dyadic side lengths"
        )));
    }
    let sides = side_lengths(res, mode);
    // All admissible side tuples.
    let tuples: Vec<Vec<usize>> = if cubes {
        sides.iter().map(|&w| vec![w; n]).collect()
    } else {
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|t| {
                    sides.iter().map(move |&w| {
                        let mut t2 = t.clone();
                        t2.push(w);
                        t2
                    })
                })
                .collect();
        }
        out
    };
    let tuples: Vec<Vec<usize>> = tuples
        .into_iter()
        .filter(|t| match opts.max_diameter {
            None => true,
            Some(d) => {
                let diam: f64 = t
                    .iter()
                    .enumerate()
                    .map(|(a, &w)| {
                        let s = w as f64 * geom.cell_width(a);
                        s * s
                    })
                    .sum::<f64>()
                    .sqrt();
                diam <= d * (1.0 + 1e-12)
            }
        })
        .collect();
    if tuples.is_empty() {
        return Err(Error::Resolution(
            "no basis element fits the diameter restriction at this resolution".into(),
        ));
    }
    let minimize = opts.minimize;
    let sentinel = if minimize {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let num_prefix = PrefixTable::build(geom, num);

    let merged = tuples
        .par_iter()
        .fold(
            || vec![sentinel; geom.len()],
            |mut acc, t| {
                let field = tuple_field(geom, mu.prefix(), &num_prefix, t, minimize);
                for (a, v) in acc.iter_mut().zip(field) {
                    *a = if minimize { a.min(v) } else { a.max(v) };
                }
                acc
            },
        )
        .reduce(
            || vec![sentinel; geom.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = if minimize { x.min(y) } else { x.max(y) };
                }
                a
            },
        );
    let values = if minimize {
        merged
    } else {
        merged.into_iter().map(|v| v.max(0.0)).collect()
    };
    let ecc = tuples
        .iter()
        .map(|t| {
            let (mn, mx) = t
                .iter()
                .fold((usize::MAX, 0), |(a, b), &w| (a.min(w), b.max(w)));
            mx as f64 / mn as f64
        })
        .fold(1.0f64, f64::max);
    Ok(MaximalField {
        geom: geom.clone(),
        values,
        basis: if cubes {
            "axis_cubes".into()
        } else {
            "axis_rectangles".into()
        },
        max_eccentricity: ecc,
    })
}

/// Extremal averages for one side tuple: build the placement-average tensor,
/// then pool each axis (placement index → covered cell index) with a
/// monotone deque.
fn tuple_field(
    geom: &GridGeom,
    den_prefix: &PrefixTable,
    num_prefix: &PrefixTable,
    sides: &[usize],
    minimize: bool,
) -> Vec<f64> {
    let n = geom.dim();
    let res = geom.resolution;
    let sentinel = if minimize {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let pdims: Vec<usize> = sides.iter().map(|&w| res - w + 1).collect();
    let pcount: usize = pdims.iter().product();
    let mut data = vec![sentinel; pcount];
    // Placement averages.
    let mut pos = vec![0usize; n];
    for slot in data.iter_mut() {
        let hi: Vec<usize> = pos.iter().zip(sides).map(|(p, w)| p + w).collect();
        let den = den_prefix.sum(&pos, &hi);
        if den > 0.0 {
            *slot = num_prefix.sum(&pos, &hi) / den;
        }
        // Advance.
        let mut a = n;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            pos[a] += 1;
            if pos[a] < pdims[a] {
                break;
            }
            pos[a] = 0;
        }
    }
    // Pool axes one by one: after processing axis a, that axis is indexed by
    // cells (length res) instead of placements.
    let mut dims = pdims;
    for axis in 0..n {
        data = pool_axis(&data, &dims, axis, sides[axis], res, minimize);
        dims[axis] = res;
    }
    data
}

/// Replace axis `axis` (placement-indexed, length `dims[axis]`) with a
/// cell-indexed axis of length `out_len`: output at cell `i` is the extremum
/// of input over placements `p ∈ [i−w+1, i] ∩ [0, P)` — exactly the
/// placements whose rectangle covers cell `i`.
fn pool_axis(
    data: &[f64],
    dims: &[usize],
    axis: usize,
    w: usize,
    out_len: usize,
    minimize: bool,
) -> Vec<f64> {
    let p_len = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![0.0; outer * out_len * inner];
    let better = |a: f64, b: f64| if minimize { a <= b } else { a >= b };
    let mut deque: VecDeque<usize> = VecDeque::new();
    for o in 0..outer {
        for i in 0..inner {
            let base_in = o * p_len * inner + i;
            let base_out = o * out_len * inner + i;
            deque.clear();
            for cell in 0..out_len {
                if cell < p_len {
                    let v = data[base_in + cell * inner];
                    while let Some(&back) = deque.back() {
                        if better(v, data[base_in + back * inner]) {
                            deque.pop_back();
                        } else {
                            break;
                        }
                    }
                    deque.push_back(cell);
                }
                let lo = cell as isize - w as isize + 1;
                while let Some(&front) = deque.front() {
                    if (front as isize) < lo {
                        deque.pop_front();
                    } else {
                        break;
                    }
                }
                out[base_out + cell * inner] = data[base_in + deque.front().unwrap() * inner];
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Convex-shape kernel
// ---------------------------------------------------------------------------

fn convex_field(
    mu: &GridMeasure,
    num: &[f64],
    generator: &ConvexBody,
    family: &BasisFamily,
    opts: KernelOpts,
) -> Result<MaximalField> {
    if opts.minimize {
        return Err(Error::InvalidInput(
            "infimum kernel is implemented for rectangle/cube bases only".into(),
        ));
    }
    if generator.dim() != mu.dim() {
        return Err(Error::InvalidInput("generator dimension mismatch".into()));
    }
    let geom = &mu.geom;
    let n = geom.dim();
    let res = geom.resolution;
    let gc = generator.john_center()?;
    let step = family.translation_step_cells.max(1);
    let scales: Vec<f64> = family
        .scale_grid
        .iter()
        .copied()
        .filter(|&s| match opts.max_diameter {
            None => true,
            Some(d) => s * generator.diameter() <= d * (1.0 + 1e-12),
        })
        .collect();
    if scales.is_empty() {
        return Err(Error::InvalidInput(
            "no scale in the grid satisfies the diameter restriction".into(),
        ));
    }

    let merged = scales
        .par_iter()
        .fold(
            || vec![f64::NEG_INFINITY; geom.len()],
            |mut acc, &s| {
                scale_pass(mu, num, generator, &gc, s, step, &mut acc);
                acc
            },
        )
        .reduce(
            || vec![f64::NEG_INFINITY; geom.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(y);
                }
                a
            },
        );
    let _ = (n, res);
    Ok(MaximalField {
        geom: geom.clone(),
        values: merged.into_iter().map(|v| v.max(0.0)).collect(),
        basis: format!("homothets({})", family.describe()),
        max_eccentricity: 1.0,
    })
}

/// One scale of the convex kernel: rasterize the copy centered at the origin
/// as cell-center offsets, then slide it over the translation lattice.
fn scale_pass(
    mu: &GridMeasure,
    num: &[f64],
    generator: &ConvexBody,
    gc: &[f64],
    s: f64,
    step: usize,
    acc: &mut [f64],
) {
    let geom = &mu.geom;
    let n = geom.dim();
    let res = geom.resolution;
    // Copy with its John center at the origin.
    let shift0: Vec<f64> = gc.iter().map(|c| -s * c).collect();
    let centered = generator.homothety(s, &shift0);
    let bbox = centered.bounding_box();
    // Integer offset ranges per axis (cell-center displacements d·h).
    let mut dmin = vec![0isize; n];
    let mut dmax = vec![0isize; n];
    for a in 0..n {
        let h = geom.cell_width(a);
        dmin[a] = (bbox.lo[a] / h - 0.5).ceil() as isize;
        dmax[a] = (bbox.hi[a] / h + 0.5).floor() as isize;
    }
    // Rasterize.
    let mut offsets: Vec<Vec<isize>> = Vec::new();
    let mut d = dmin.clone();
    'raster: loop {
        let p: Vec<f64> = (0..n).map(|a| d[a] as f64 * geom.cell_width(a)).collect();
        if centered.contains(&p, 1e-12) {
            offsets.push(d.clone());
        }
        let mut a = n;
        loop {
            if a == 0 {
                break 'raster;
            }
            a -= 1;
            d[a] += 1;
            if d[a] <= dmax[a] {
                break;
            }
            d[a] = dmin[a];
        }
    }
    if offsets.is_empty() {
        return;
    }
    let omin: Vec<isize> = (0..n)
        .map(|a| offsets.iter().map(|o| o[a]).min().unwrap())
        .collect();
    let omax: Vec<isize> = (0..n)
        .map(|a| offsets.iter().map(|o| o[a]).max().unwrap())
        .collect();
    // Placement lattice: John center on cell centers q, with the copy allowed
    // to overhang the window (the measure vanishes outside it, so such
    // copies average the clipped mass — the honest operator for a compactly
    // supported measure). Only placements whose raster meets the grid count.
    let qlo: Vec<isize> = omax.iter().map(|&m| -m).collect();
    let qhi: Vec<isize> = omin.iter().map(|&m| res as isize - m).collect();
    if qlo.iter().zip(&qhi).any(|(a, b)| a >= b) {
        return;
    }
    let mass = mu.masses();
    let in_flat = |q: &[isize], o: &[isize]| -> Option<usize> {
        let mut flat = 0usize;
        for a in 0..n {
            let c = q[a] + o[a];
            if c < 0 || c >= res as isize {
                return None;
            }
            flat = flat * res + c as usize;
        }
        Some(flat)
    };
    let mut q = qlo.clone();
    'placements: loop {
        let mut den = 0.0;
        let mut numer = 0.0;
        for o in &offsets {
            if let Some(c) = in_flat(&q, o) {
                den += mass[c];
                numer += num[c];
            }
        }
        if den > 0.0 {
            let avg = numer / den;
            for o in &offsets {
                if let Some(c) = in_flat(&q, o) {
                    if avg > acc[c] {
                        acc[c] = avg;
                    }
                }
            }
        }
        let mut a = n;
        loop {
            if a == 0 {
                break 'placements;
            }
            a -= 1;
            q[a] += step as isize;
            if q[a] < qhi[a] {
                break;
            }
            q[a] = qlo[a];
        }
    }
}

// ---------------------------------------------------------------------------
// Superlevel sets and halos
// ---------------------------------------------------------------------------

/// Cells where the field exceeds the level: `> level` when strict (the
/// Tauberian convention) or `≥ level` (the halo convention).
pub fn superlevel(field: &MaximalField, level: f64, strict: bool) -> CellSet {
    let mut s = CellSet::empty(&field.geom);
    for (bit, &v) in s.bits.iter_mut().zip(&field.values) {
        *bit = if strict { v > level } else { v >= level };
    }
    s
}

/// Result of a halo iteration.
#[derive(Debug, Clone)]
pub struct HaloResult {
    pub set: CellSet,
    /// True when some iterate touched the window boundary: further iterates
    /// are under-approximations of the untruncated halo.
    pub truncated: bool,
}

/// `k`-fold halo: `H^0 = E`, `H^j = { M(1_{H^{j-1}}) ≥ beta }`.
pub fn halo_iterate(
    mu: &GridMeasure,
    family: &BasisFamily,
    e: &CellSet,
    beta: f64,
    k: u32,
) -> Result<HaloResult> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidInput("halo level must lie in (0,1)".into()));
    }
    let mut set = e.clone();
    let mut truncated = false;
    for _ in 0..k {
        let field = maximal_indicator(mu, family, &set)?;
        set = superlevel(&field, beta, false);
        if set.touches_boundary() {
            truncated = true;
        }
    }
    Ok(HaloResult { set, truncated })
}

// ---------------------------------------------------------------------------
// Dyadic maximal operator
// ---------------------------------------------------------------------------

/// Maximal operator over the dyadic mesh of `mesh.root`: the supremum of
/// μ-averages of `f` over mesh elements containing the cell (elements with
/// μ(S) = 0 skipped). Cells outside the root get 0.
pub fn dyadic_maximal(mu: &GridMeasure, mesh: &DyadicMesh, f: &[f64]) -> Result<MaximalField> {
    if f.len() != mu.geom.len() {
        return Err(Error::InvalidInput("function has wrong length".into()));
    }
    if f.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "dyadic maximal operator expects a nonnegative finite function".into(),
        ));
    }
    let geom = &mu.geom;
    let num: Vec<f64> = f.iter().zip(mu.masses()).map(|(&v, &m)| v * m).collect();
    let num_prefix = PrefixTable::build(geom, &num);
    let mut values = vec![0.0; geom.len()];
    let n = geom.dim();
    for depth in 0..=mesh.max_depth {
        let side = 1usize << depth;
        let mut idx = vec![0usize; n];
        loop {
            let elem = MeshElement {
                depth,
                idx: idx.clone(),
            };
            let rect = elem.rect(mesh);
            if !geom.is_aligned(&rect) {
                return Err(Error::Resolution(format!(
                    "mesh depth {depth} is finer than the grid"
                )));
            }
            let (lo, hi, _) = geom.index_range(&rect);
            let den = mu.prefix().sum(&lo, &hi);
            if den > 0.0 {
                let avg = num_prefix.sum(&lo, &hi) / den;
                geom.for_each_in(&lo, &hi, |_, flat| {
                    if avg > values[flat] {
                        values[flat] = avg;
                    }
                });
            }
            // Advance.
            let mut a = n;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < side {
                    break;
                }
                idx[a] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(MaximalField {
        geom: geom.clone(),
        values,
        basis: format!("dyadic_mesh(depth {})", mesh.max_depth),
        max_eccentricity: 1.0,
    })
}

// ---------------------------------------------------------------------------
// Convex vs associated-rectangle comparability
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ComparabilityReport {
    /// The comparability constant `Δ^{⌈(3/2)·log₂ n⌉}`.
    pub c_n: f64,
    pub checked: usize,
    pub violations: usize,
    /// Max of `M_conv / (c_n · M_rect)` over checked cells (should be ≤ 1).
    pub max_upper: f64,
    /// Max of `M_rect / (c_n · M_conv)` over checked cells (should be ≤ 1).
    pub max_lower: f64,
    pub pass: bool,
}

/// Comparability constant `Δ^{⌈(3/2)·log₂ n⌉}` between a convex basis and its
/// associated-rectangle basis.
pub fn comparability_constant(n: usize, delta: f64) -> f64 {
    let e = (1.5 * (n as f64).log2()).ceil();
    delta.powf(e)
}

/// Verify the two-sided pointwise equivalence
/// `c_n^{-1} M_rect f ≤ M_conv f ≤ c_n M_rect f` cellwise, where the
/// rectangle family is the associated rectangles of the convex family and
/// `c_n = Δ^{⌈(3/2)·log₂ n⌉}`. `tol` absorbs the convex kernel's sampling
/// slack (it computes a lower bound).
pub fn comparability_check(
    mu: &GridMeasure,
    convex_family: &BasisFamily,
    rect_family: &BasisFamily,
    f: &[f64],
    delta: f64,
    tol: f64,
) -> Result<ComparabilityReport> {
    let conv = maximal_function(mu, convex_family, f)?;
    let rect = maximal_function(mu, rect_family, f)?;
    let c = comparability_constant(mu.dim(), delta);
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut max_upper = 0.0f64;
    let mut max_lower = 0.0f64;
    for (&a, &b) in conv.values.iter().zip(&rect.values) {
        if !(a > 0.0) || !(b > 0.0) {
            continue;
        }
        checked += 1;
        let upper = a / (c * b);
        let lower = b / (c * a);
        max_upper = max_upper.max(upper);
        max_lower = max_lower.max(lower);
        if upper > 1.0 + tol || lower > 1.0 + tol {
            violations += 1;
        }
    }
    Ok(ComparabilityReport {
        c_n: c,
        checked,
        violations,
        max_upper,
        max_lower,
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RectBox;
    use crate::measure::WeightSpec;
    use approx::assert_relative_eq;

    fn leb_1d(lo: f64, hi: f64, res: usize) -> GridMeasure {
        WeightSpec::Lebesgue
            .realize(&RectBox::new(vec![lo], vec![hi]).unwrap(), res)
            .unwrap()
    }

    #[test]
    fn full_window_indicator_gives_one() {
        let mu = leb_1d(0.0, 1.0, 64);
        let e = CellSet::full(&mu.geom);
        let field = maximal_indicator(&mu, &BasisFamily::rectangles(), &e).unwrap();
        assert!(field.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn indicator_value_matches_closed_form_1d() {
        // E = [0,1] inside [-4,4]; at x = 2 the best interval is [s,2] with
        // s ≤ 1, value (1-s)/(2-s) maximized at s = 0: 1/2.
        let mu = leb_1d(-4.0, 4.0, 2048);
        let e = CellSet::from_box(&mu.geom, &RectBox::new(vec![0.0], vec![1.0]).unwrap());
        let field = maximal_indicator(&mu, &BasisFamily::rectangles(), &e).unwrap();
        let (idx, _, _) = mu
            .geom
            .index_range(&RectBox::new(vec![2.0], vec![2.1]).unwrap());
        let v = field.values[mu.geom.flat(&idx)];
        assert!((v - 0.5).abs() < 2e-3, "value {v}");
    }

    #[test]
    fn indicator_value_matches_closed_form_2d() {
        // E = [0,1/2]² in [0,1]²; at (3/4,3/4) the optimum rectangle is
        // [0,3/4]² with value (1/4)/(9/16) = 4/9.
        let w = RectBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mu = WeightSpec::Lebesgue.realize(&w, 64).unwrap();
        let e = CellSet::from_box(
            &mu.geom,
            &RectBox::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap(),
        );
        let field = maximal_indicator(&mu, &BasisFamily::rectangles(), &e).unwrap();
        // Cell containing (3/4, 3/4).
        let v = field.value_at(&[48, 48]);
        assert!((v - 4.0 / 9.0).abs() < 0.02, "value {v}");
    }

    #[test]
    fn constant_function_gives_constant_field() {
        let mu = leb_1d(0.0, 1.0, 64);
        let f = vec![3.0; 64];
        let field = maximal_function(&mu, &BasisFamily::rectangles(), &f).unwrap();
        assert!(field.values.iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn homogeneity_of_indicator_numerator() {
        let mu = leb_1d(0.0, 1.0, 128);
        let e = CellSet::from_box(&mu.geom, &RectBox::new(vec![0.25], vec![0.5]).unwrap());
        let ind = maximal_indicator(&mu, &BasisFamily::rectangles(), &e).unwrap();
        let f: Vec<f64> = e.bits.iter().map(|&b| if b { 2.0 } else { 0.0 }).collect();
        let doubled = maximal_function(&mu, &BasisFamily::rectangles(), &f).unwrap();
        for (&a, &b) in ind.values.iter().zip(&doubled.values) {
            assert_relative_eq!(2.0 * a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_function_at_origin() {
        // f(x) = x on [0,1]: at x = 0, sup over [0,b] of b/2 = 1/2.
        let mu = leb_1d(0.0, 1.0, 1024);
        let f: Vec<f64> = (0..1024).map(|i| (i as f64 + 0.5) / 1024.0).collect();
        let field = maximal_function(&mu, &BasisFamily::rectangles(), &f).unwrap();
        assert!((field.values[0] - 0.5).abs() < 2e-3, "{}", field.values[0]);
    }

    #[test]
    fn superlevel_conventions() {
        let mu = leb_1d(0.0, 1.0, 8);
        let field = MaximalField {
            geom: mu.geom.clone(),
            values: vec![0.0, 0.25, 0.5, 0.5, 0.75, 1.0, 0.5, 0.1],
            basis: "test".into(),
            max_eccentricity: 1.0,
        };
        let strict = superlevel(&field, 0.5, true);
        let weak = superlevel(&field, 0.5, false);
        assert_eq!(strict.count(), 2);
        assert_eq!(weak.count(), 5);
        assert!(strict.is_subset_of(&weak));
    }

    #[test]
    fn halo_length_growth_1d() {
        // E = [0,1], β = 1/2: the halo closed form gives length 2/β − 1 = 3
        // per iterate.
        let mu = leb_1d(-20.0, 21.0, 4096);
        let e = CellSet::from_box(&mu.geom, &RectBox::new(vec![0.0], vec![1.0]).unwrap());
        let cell = (41.0) / 4096.0;
        let h1 = halo_iterate(&mu, &BasisFamily::rectangles(), &e, 0.5, 1).unwrap();
        let len1 = h1.set.count() as f64 * cell;
        assert!((len1 - 3.0).abs() < 0.05, "len1 {len1}");
        assert!(!h1.truncated);
    }

    #[test]
    fn dyadic_weak_one_one() {
        // f = 1_{[0,1/4]} on [0,1]: superlevel mass at λ = 1/2 is 1/4 ≤ 1/2.
        let mu = leb_1d(0.0, 1.0, 256);
        let mesh = DyadicMesh::new(mu.geom.window.clone(), 8);
        let f: Vec<f64> = (0..256).map(|i| if i < 64 { 1.0 } else { 0.0 }).collect();
        let field = dyadic_maximal(&mu, &mesh, &f).unwrap();
        let lvl = superlevel(&field, 0.5, true);
        let mass = mu.integrate_cells(&lvl);
        assert!(mass <= 0.5 + 1e-12);
        assert_relative_eq!(mass, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn cube_and_rect_agree_when_forced_square() {
        let w = RectBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mu = WeightSpec::Lebesgue.realize(&w, 32).unwrap();
        let e = CellSet::from_box(
            &mu.geom,
            &RectBox::new(vec![0.0, 0.0], vec![0.25, 0.25]).unwrap(),
        );
        let rect = maximal_indicator(&mu, &BasisFamily::rectangles(), &e).unwrap();
        let cube = maximal_indicator(&mu, &BasisFamily::cubes(), &e).unwrap();
        for (&r, &c) in rect.values.iter().zip(&cube.values) {
            assert!(c <= r + 1e-12);
        }
    }
}
