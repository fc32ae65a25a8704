//! The proof machinery as executable procedures: Calderón–Zygmund selection
//! with respect to a measure, expanding corner dilates with fixed mass
//! ratio, Whitney cubes, annulus estimates, homothetic-copy packing, and the
//! explicit constant formulas tying the Tauberian and weak-type worlds
//! together.

use crate::error::{Error, Result};
use crate::geometry::{corner_dilate, locate, ConvexBody, DyadicMesh, MeshElement, RectBox};
use crate::grid::CellSet;
use crate::measure::GridMeasure;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Calderón–Zygmund selection
// ---------------------------------------------------------------------------

/// A Calderón–Zygmund selection at level β: the maximal dyadic elements whose
/// μ-average of `1_E` exceeds β.
#[derive(Debug, Clone)]
pub struct CZSelection {
    pub root: RectBox,
    pub beta: f64,
    /// Maximal elements with average > β, pairwise disjoint; every strict
    /// ancestor has average ≤ β.
    pub selected: Vec<MeshElement>,
    /// Cells of the selected union.
    pub union: CellSet,
    /// μ-mass of `E ∩ root` not covered by the union (zero up to cells the
    /// mesh depth cannot split further).
    pub residual_mass: f64,
}

/// Stopping-time selection: descend the mesh, keeping the maximal elements
/// with `μ(S∩E)/μ(S) > beta`. The root must satisfy the average-< β
/// precondition.
pub fn cz_decompose(
    mu: &GridMeasure,
    mesh: &DyadicMesh,
    e: &CellSet,
    beta: f64,
) -> Result<CZSelection> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidInput("CZ level must lie in (0,1)".into()));
    }
    let geom = &mu.geom;
    if e.geom != *geom {
        return Err(Error::InvalidInput("set lives on a different grid".into()));
    }
    let masked = mu.masked_prefix(e);
    let avg_of = |elem: &MeshElement| -> Result<Option<f64>> {
        let rect = elem.rect(mesh);
        if !geom.is_aligned(&rect) {
            return Err(Error::Resolution(format!(
                "mesh depth {} is finer than the grid",
                elem.depth
            )));
        }
        let (lo, hi, _) = geom.index_range(&rect);
        let den = mu.prefix().sum(&lo, &hi);
        if den > 0.0 {
            Ok(Some(masked.sum(&lo, &hi) / den))
        } else {
            Ok(None)
        }
    };
    let root = MeshElement::root(mesh.dim());
    match avg_of(&root)? {
        Some(a) if a >= beta => {
            return Err(Error::InvalidInput(format!(
                "root violates CZ precondition: average {a} >= {beta}"
            )));
        }
        None => {
            return Err(Error::InvalidInput(
                "measure vanishes on the mesh root".into(),
            ));
        }
        _ => {}
    }
    let mut selected = Vec::new();
    let mut stack = vec![root];
    while let Some(elem) = stack.pop() {
        if elem.depth >= mesh.max_depth {
            continue;
        }
        for child in elem.children() {
            match avg_of(&child)? {
                Some(a) if a > beta => selected.push(child),
                Some(_) => stack.push(child),
                None => {}
            }
        }
    }
    // Deterministic order.
    selected.sort_by(|a, b| (a.depth, &a.idx).cmp(&(b.depth, &b.idx)));
    let mut union = CellSet::empty(geom);
    for s in &selected {
        let (lo, hi, _) = geom.index_range(&s.rect(mesh));
        geom.for_each_in(&lo, &hi, |_, flat| union.bits[flat] = true);
    }
    let root_set = CellSet::from_box(geom, &mesh.root);
    let e_in_root = e.intersect(&root_set);
    let covered = e_in_root.intersect(&union);
    let residual_mass = mu.integrate_cells(&e_in_root) - mu.integrate_cells(&covered);
    Ok(CZSelection {
        root: mesh.root.clone(),
        beta,
        selected,
        union,
        residual_mass,
    })
}

// ---------------------------------------------------------------------------
// Expanding corner dilates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilateStep {
    pub rect: RectBox,
    pub scale: f64,
    /// Mass ratio to the previous step; always ≥ 1/β, with the grid overshoot
    /// reported rather than hidden.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilateChain {
    pub steps: Vec<DilateStep>,
    /// True when the window was exhausted before `count` steps.
    pub truncated: bool,
}

/// Grid substitute for the exact-mass-ratio expansion: starting from a mesh
/// element `S`, repeatedly pick the smallest corner dilate `c∗S` whose mass
/// is ≥ 1/β times the previous step's mass. The exact ratio 1/β is
/// generically unattainable on a grid; the achieved ratios are reported.
pub fn expanding_dilates(
    mu: &GridMeasure,
    mesh: &DyadicMesh,
    s: &RectBox,
    beta: f64,
    count: usize,
) -> Result<DilateChain> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidInput("beta must lie in (0,1)".into()));
    }
    let elem = locate(mesh, s)?;
    if elem.depth == 0 {
        return Err(Error::InvalidInput(
            "the mesh root has no corner dilates".into(),
        ));
    }
    let geom = &mu.geom;
    // Largest scale keeping the dilate inside the window.
    let mut c_max = f64::INFINITY;
    for a in 0..s.dim() {
        let side = s.side(a);
        let room = if elem.idx[a] % 2 == 0 {
            geom.window.hi[a] - s.lo[a]
        } else {
            s.hi[a] - geom.window.lo[a]
        };
        c_max = c_max.min(room / side);
    }
    let mass_at = |c: f64| -> Result<f64> {
        let rect = corner_dilate(mesh, &elem, c)?;
        Ok(mu.integrate_box(&rect).0)
    };
    let mut prev_mass = mass_at(1.0)?;
    if !(prev_mass > 0.0) {
        return Err(Error::InvalidInput("starting element has zero mass".into()));
    }
    let mut c_prev = 1.0;
    let mut steps = Vec::new();
    let mut truncated = false;
    for _ in 0..count {
        let target = prev_mass / beta;
        if mass_at(c_max)? < target {
            truncated = true;
            break;
        }
        // Bisect for the smallest c with mass ≥ target (mass is a
        // nondecreasing step function of c).
        let mut lo = c_prev;
        let mut hi = c_max;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mass_at(mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let c = hi;
        let mass = mass_at(c)?;
        steps.push(DilateStep {
            rect: corner_dilate(mesh, &elem, c)?,
            scale: c,
            ratio: mass / prev_mass,
        });
        prev_mass = mass;
        c_prev = c;
    }
    Ok(DilateChain { steps, truncated })
}

// ---------------------------------------------------------------------------
// Constant formulas
// ---------------------------------------------------------------------------

/// Nudge a positive real that should be integral within float fuzz.
fn ceil_snapped(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// Smallest non-negative integer `N` with `β^{-(N+1)} ≥ Δ`; closed form
/// `⌈log⁺(βΔ)/log(1/β)⌉` with the minimality re-checked directly.
pub fn doubling_depth(beta: f64, delta: f64) -> Result<u32> {
    if !(0.0 < beta && beta < 1.0) || !(delta >= 1.0) {
        return Err(Error::InvalidInput(
            "doubling depth needs beta in (0,1) and delta >= 1".into(),
        ));
    }
    let log_plus = (beta * delta).ln().max(0.0);
    let mut n = ceil_snapped(log_plus / (1.0 / beta).ln()).max(0) as u32;
    let holds = |n: u32| beta.powi(-(n as i32 + 1)) >= delta * (1.0 - 1e-12);
    while !holds(n) {
        n += 1;
    }
    while n > 0 && holds(n - 1) {
        n -= 1;
    }
    Ok(n)
}

/// Smallest positive integer `j` with `β^{-j}·α ≥ β`; closed form
/// `⌈log(β/α)/log(1/β)⌉`.
pub fn catchup_steps(alpha: f64, beta: f64) -> Result<u32> {
    if !(0.0 < alpha && alpha < beta && beta < 1.0) {
        return Err(Error::InvalidInput(
            "catch-up steps need 0 < alpha < beta < 1".into(),
        ));
    }
    let mut j = ceil_snapped((beta / alpha).ln() / (1.0 / beta).ln()).max(1) as u32;
    let holds = |j: u32| beta.powi(-(j as i32)) * alpha >= beta * (1.0 - 1e-12);
    while !holds(j) {
        j += 1;
    }
    while j > 1 && holds(j - 1) {
        j -= 1;
    }
    Ok(j)
}

/// Number of halo iterations needed to pull a set of relative mass α up to
/// full coverage at level β: `j_o·(N+2) + 1`.
pub fn halo_cover_steps(alpha: f64, beta: f64, delta: f64) -> Result<u32> {
    if !(alpha < beta) {
        return Err(Error::InvalidInput(
            "halo cover steps require alpha < beta".into(),
        ));
    }
    let j_o = catchup_steps(alpha, beta)?;
    let n = doubling_depth(beta, delta)?;
    Ok(j_o * (n + 2) + 1)
}

/// Parameters of the copy construction: given ρ, α, η and a table of
/// measured ξ values per depth, pick the least depth `m` whose ξ exceeds
/// `1 − ρ(α−η)/(2−α−η)` and the iteration count
/// `N = ⌈log((2−α−η)/(α−η)) / log(1/Ψ)⌉` with `Ψ = ξ_m − ρ`. The returned
/// pair guarantees `ρ(1−Ψ^{N+1})/(1−Ψ) ≥ (1−α)/(1−η)`.
pub fn copy_parameters(
    rho: f64,
    alpha: f64,
    eta: f64,
    xi_table: &[(u32, f64)],
) -> Result<(u32, u32)> {
    if !(0.0 < eta && eta < alpha && alpha < 1.0) {
        return Err(Error::InvalidInput(
            "copy parameters need 0 < eta < alpha < 1".into(),
        ));
    }
    if !(0.0 < rho && rho <= 1.0) {
        return Err(Error::InvalidInput("rho must lie in (0,1]".into()));
    }
    let threshold = 1.0 - rho * (alpha - eta) / (2.0 - alpha - eta);
    let entry = xi_table
        .iter()
        .find(|&&(_, xi)| xi > threshold)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "measure's xi insufficient at this resolution: \
                 no table entry exceeds the threshold {threshold:.6}"
            ))
        })?;
    let (m, xi) = *entry;
    let psi = xi - rho;
    if !(0.0 < psi && psi < 1.0) {
        return Err(Error::InvalidInput(format!(
            "Psi = xi - rho = {psi} must lie in (0,1)"
        )));
    }
    let big_n =
        ceil_snapped(((2.0 - alpha - eta) / (alpha - eta)).ln() / (1.0 / psi).ln()).max(1) as u32;
    // Sanity: the guaranteed mass fraction dominates (1−α)/(1−η).
    let bound = rho * (1.0 - psi.powi(big_n as i32 + 1)) / (1.0 - psi);
    if bound < (1.0 - alpha) / (1.0 - eta) * (1.0 - 1e-9) {
        return Err(Error::InvalidInput(format!(
            "internal: copy bound {bound} misses the target"
        )));
    }
    Ok((m, big_n))
}

/// Exponent of the Tauberian constant under transfer from a convex basis at
/// level γ to its associated-rectangle basis at level α > γ:
/// `k = 1 + ⌈log₂Δ / log₂(1/β)⌉ · ⌈N·m + 1 + (3/2)·log₂ n⌉` with
/// `β = (γ+α)/2`. All logarithms base 2.
pub fn transfer_exponent(
    gamma: f64,
    alpha: f64,
    delta: f64,
    m: u32,
    big_n: u32,
    n: usize,
) -> Result<u32> {
    if !(0.0 < gamma && gamma < alpha && alpha < 1.0) {
        return Err(Error::InvalidInput(
            "transfer needs 0 < gamma < alpha < 1".into(),
        ));
    }
    if !(delta >= 1.0) {
        return Err(Error::InvalidInput("delta must be >= 1".into()));
    }
    let beta = 0.5 * (gamma + alpha);
    let f1 = ceil_snapped(delta.log2() / (1.0 / beta).log2()).max(1);
    let f2 = ceil_snapped(big_n as f64 * m as f64 + 1.0 + 1.5 * (n as f64).log2()).max(1);
    Ok(1 + (f1 * f2) as u32)
}

/// All derived constants for one (α, β, γ, Δ) configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantBundle {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub doubling_depth: u32,
    pub catchup_steps: u32,
    pub halo_cover_steps: u32,
}

pub fn constant_bundle(alpha: f64, beta: f64, delta: f64) -> Result<ConstantBundle> {
    Ok(ConstantBundle {
        alpha,
        beta,
        delta,
        doubling_depth: doubling_depth(beta, delta)?,
        catchup_steps: catchup_steps(alpha, beta)?,
        halo_cover_steps: halo_cover_steps(alpha, beta, delta)?,
    })
}

// ---------------------------------------------------------------------------
// Whitney cubes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitneyCube {
    pub rect: RectBox,
    pub depth: u32,
    /// True for max-depth cubes adjacent to the body, where the lower
    /// distance bound cannot hold; the two-sided bound
    /// `diam ≤ dist ≤ 4·diam` is asserted for non-collar cubes only.
    pub collar: bool,
}

/// Dyadic Whitney decomposition of `box ∖ K`: interior-disjoint dyadic cubes
/// with `diam S ≤ dist(S, K) ≤ 4·diam S`, except for a single collar layer at
/// the maximal depth.
pub fn whitney_cubes(k: &ConvexBody, outer: &RectBox, mesh_depth: u32) -> Result<Vec<WhitneyCube>> {
    if k.dim() != outer.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let kb = k.bounding_box();
    if !outer.contains_box(&kb, 0.0) {
        return Err(Error::InvalidInput("body must lie inside the box".into()));
    }
    let margin = (0..outer.dim())
        .map(|a| (kb.lo[a] - outer.lo[a]).min(outer.hi[a] - kb.hi[a]))
        .fold(f64::INFINITY, f64::min);
    let finest = (0..outer.dim())
        .map(|a| outer.side(a) / (mesh_depth as f64).exp2())
        .fold(f64::INFINITY, f64::min);
    if margin < finest {
        return Err(Error::Resolution(
            "margin between body and box is smaller than the finest cube".into(),
        ));
    }
    let mesh = DyadicMesh::new(outer.clone(), mesh_depth);
    let mut out = Vec::new();
    let mut stack = vec![MeshElement::root(outer.dim())];
    while let Some(elem) = stack.pop() {
        let rect = elem.rect(&mesh);
        let dist = k.distance_to_box(&rect);
        if dist <= 0.0 {
            // Touches or overlaps the body: subdivide; at the bottom, cubes
            // overlapping the open body are dropped, touching ones kept as
            // collar.
            if elem.depth < mesh_depth {
                stack.extend(elem.children());
            } else if !k.overlaps_box_open(&rect) {
                out.push(WhitneyCube {
                    rect,
                    depth: elem.depth,
                    collar: true,
                });
            }
            continue;
        }
        if rect.diameter() <= dist {
            out.push(WhitneyCube {
                rect,
                depth: elem.depth,
                collar: false,
            });
        } else if elem.depth < mesh_depth {
            stack.extend(elem.children());
        } else {
            out.push(WhitneyCube {
                rect,
                depth: elem.depth,
                collar: true,
            });
        }
    }
    out.sort_by(|a, b| {
        (
            a.depth,
            a.rect.lo.iter().map(|&x| x.to_bits()).collect::<Vec<_>>(),
        )
            .cmp(&(b.depth, b.rect.lo.iter().map(|&x| x.to_bits()).collect()))
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Annulus mass
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub eps: f64,
    /// μ-mass of `{x ∈ Q ∖ K : dist(x, K) < eps}`.
    pub mass: f64,
    /// `9·δ^{4+⌈log₂(34√n)⌉} / log₂(1/eps) · μ(Q)`.
    pub bound: f64,
    /// True when `eps < 2^{-8}`, the regime where the bound applies.
    pub within_regime: bool,
    /// `mass ≤ bound` (up to rounding).
    pub ok: bool,
}

/// Mass of the inner ε-annulus around a convex body inside its frame `Q`,
/// with the doubling-measure decay bound in `1/log(1/ε)`.
pub fn annulus_mass(
    mu: &GridMeasure,
    k: &ConvexBody,
    q: &RectBox,
    eps: f64,
    delta: f64,
) -> Result<AnnulusReport> {
    let geom = &mu.geom;
    let max_cell = (0..geom.dim())
        .map(|a| geom.cell_width(a))
        .fold(0.0f64, f64::max);
    if eps < max_cell {
        return Err(Error::Resolution(format!(
            "annulus width {eps} is below one grid cell ({max_cell})"
        )));
    }
    if !q.contains_box(&k.bounding_box(), 1e-12) {
        return Err(Error::InvalidInput("body must lie inside the frame".into()));
    }
    let n = geom.dim();
    let (lo, hi, _) = geom.index_range(q);
    let mut mass = 0.0;
    geom.for_each_in(&lo, &hi, |idx, flat| {
        let c = geom.center(idx);
        if !k.contains(&c, 0.0) && k.distance_to_point(&c) < eps {
            mass += mu.masses()[flat];
        }
    });
    let (q_mass, _) = mu.integrate_box(q);
    let exponent = 4.0 + (34.0 * (n as f64).sqrt()).log2().ceil();
    let bound = 9.0 * delta.powf(exponent) / (1.0 / eps).log2() * q_mass;
    let within_regime = eps < 2f64.powi(-8);
    Ok(AnnulusReport {
        eps,
        mass,
        bound,
        within_regime,
        ok: mass <= bound * (1.0 + 1e-12),
    })
}

// ---------------------------------------------------------------------------
// ξ constant and homothetic copies
// ---------------------------------------------------------------------------

/// Depth-`m` dyadic subrectangles of `Q` whose closures are disjoint from the
/// body (conservatively: open overlap excluded).
fn free_subcubes(q: &RectBox, k: Option<&ConvexBody>, m: u32) -> Vec<RectBox> {
    let mesh = DyadicMesh::new(q.clone(), m);
    let side = 1usize << m;
    let n = q.dim();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let rect = MeshElement {
            depth: m,
            idx: idx.clone(),
        }
        .rect(&mesh);
        let free = match k {
            None => true,
            Some(body) => !body.overlaps_box_open(&rect),
        };
        if free {
            out.push(rect);
        }
        let mut a = n;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < side {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Empirical ξ_m: the fraction of μ(Q) captured by the body together with the
/// depth-m dyadic subcubes of Q disjoint from it.
pub fn xi_empirical(mu: &GridMeasure, k: Option<&ConvexBody>, q: &RectBox, m: u32) -> Result<f64> {
    let geom = &mu.geom;
    // The subcubes must be grid-resolvable.
    let probe = DyadicMesh::new(q.clone(), m);
    let elem = MeshElement {
        depth: m,
        idx: vec![0; geom.dim()],
    };
    if !geom.is_aligned(&elem.rect(&probe)) {
        return Err(Error::Resolution(format!(
            "depth-{m} subcubes of the frame are not grid-aligned"
        )));
    }
    let (q_mass, _) = mu.integrate_box(q);
    if !(q_mass > 0.0) {
        return Err(Error::InvalidInput("frame has zero mass".into()));
    }
    let mut covered = 0.0;
    for rect in free_subcubes(q, k, m) {
        covered += mu.integrate_box(&rect).0;
    }
    if let Some(body) = k {
        covered += mu.integrate_body(body);
    }
    Ok(covered / q_mass)
}

/// Diagonal affine map `x ↦ scale ⊙ x + shift`.
#[derive(Debug, Clone)]
struct DiagMap {
    scale: Vec<f64>,
    shift: Vec<f64>,
}

impl DiagMap {
    fn identity(n: usize) -> DiagMap {
        DiagMap {
            scale: vec![1.0; n],
            shift: vec![0.0; n],
        }
    }

    /// self ∘ other.
    fn compose(&self, other: &DiagMap) -> DiagMap {
        DiagMap {
            scale: self
                .scale
                .iter()
                .zip(&other.scale)
                .map(|(a, b)| a * b)
                .collect(),
            shift: self
                .shift
                .iter()
                .zip(self.scale.iter().zip(&other.shift))
                .map(|(t, (s, u))| s * u + t)
                .collect(),
        }
    }

    fn inverse_apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.scale.iter().zip(&self.shift))
            .map(|(v, (s, t))| (v - t) / s)
            .collect()
    }

    fn apply_box(&self, b: &RectBox) -> RectBox {
        RectBox {
            lo: b
                .lo
                .iter()
                .zip(self.scale.iter().zip(&self.shift))
                .map(|(v, (s, t))| s * v + t)
                .collect(),
            hi: b
                .hi
                .iter()
                .zip(self.scale.iter().zip(&self.shift))
                .map(|(v, (s, t))| s * v + t)
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CopiesReport {
    /// Cells covered by the union of copies.
    pub union: CellSet,
    pub copy_count: usize,
    pub mass: f64,
    /// The guaranteed fraction `ρ(1−Ψ^{N+1})/(1−Ψ)` of μ(Q).
    pub lower_bound: f64,
    pub xi_m: f64,
    pub psi: f64,
    /// Cells claimed by more than one copy (0 when the construction is
    /// honest: copies are pairwise disjoint open sets).
    pub overlap_cells: usize,
    pub ok: bool,
}

/// Recursive translate-and-shrink packing: level-0 copy is `K` itself; each
/// next level maps the previous family into every depth-m subcube of `Q`
/// disjoint from `K`. The union's mass dominates `ρ(1−Ψ^{N+1})/(1−Ψ)·μ(Q)`
/// with `Ψ = ξ_m − ρ`.
pub fn homothetic_copies(
    mu: &GridMeasure,
    k: &ConvexBody,
    q: &RectBox,
    m: u32,
    big_n: u32,
    rho: f64,
) -> Result<CopiesReport> {
    let geom = &mu.geom;
    let n = geom.dim();
    // Depth m·N subcubes must be grid-resolvable.
    let probe = DyadicMesh::new(q.clone(), m * big_n.max(1));
    let elem = MeshElement {
        depth: m * big_n.max(1),
        idx: vec![0; n],
    };
    if !geom.is_aligned(&elem.rect(&probe)) {
        return Err(Error::Resolution(format!(
            "grid too coarse for copy depth {}",
            m * big_n
        )));
    }
    let xi = xi_empirical(mu, Some(k), q, m)?;
    let psi = xi - rho;
    if !(xi > rho) {
        return Err(Error::InvalidInput(format!(
            "xi_m = {xi} must exceed rho = {rho}"
        )));
    }
    let scale = (-(m as f64)).exp2();
    let generators: Vec<DiagMap> = free_subcubes(q, Some(k), m)
        .into_iter()
        .map(|sub| DiagMap {
            scale: vec![scale; n],
            shift: (0..n).map(|a| sub.lo[a] - scale * q.lo[a]).collect(),
        })
        .collect();
    // Levels 0..=N of composed maps.
    let mut level = vec![DiagMap::identity(n)];
    let mut maps = level.clone();
    for _ in 0..big_n {
        let mut next = Vec::with_capacity(level.len() * generators.len());
        for g in &generators {
            for p in &level {
                next.push(g.compose(p));
            }
        }
        maps.extend(next.iter().cloned());
        level = next;
    }
    // Rasterize: ownership per cell to verify disjointness structurally.
    let mut owner: Vec<i32> = vec![-1; geom.len()];
    let mut overlap_cells = 0usize;
    let kb = k.bounding_box();
    for (ci, map) in maps.iter().enumerate() {
        let bb = map.apply_box(&kb);
        let (lo, hi, _) = geom.index_range(&bb);
        geom.for_each_in(&lo, &hi, |idx, flat| {
            let c = geom.center(idx);
            let pre = map.inverse_apply(&c);
            if k.contains(&pre, 0.0) {
                if owner[flat] >= 0 && owner[flat] != ci as i32 {
                    overlap_cells += 1;
                } else {
                    owner[flat] = ci as i32;
                }
            }
        });
    }
    let mut union = CellSet::empty(geom);
    for (bit, &o) in union.bits.iter_mut().zip(&owner) {
        *bit = o >= 0;
    }
    let mass = mu.integrate_cells(&union);
    let (q_mass, _) = mu.integrate_box(q);
    let lower_bound = rho * (1.0 - psi.powi(big_n as i32 + 1)) / (1.0 - psi) * q_mass;
    Ok(CopiesReport {
        union,
        copy_count: maps.len(),
        mass,
        lower_bound,
        xi_m: xi,
        psi,
        overlap_cells,
        ok: overlap_cells == 0 && mass >= lower_bound * (1.0 - 1e-12),
    })
}
