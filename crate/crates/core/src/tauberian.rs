//! Tauberian constants, the weak-type exponent they produce, transfer of
//! constants from convex bases to rectangle bases, and density-basis
//! (differentiation) checks.

use crate::decomposition::{doubling_depth, transfer_exponent};
use crate::error::{Error, Result};
use crate::geometry::{BasisFamily, DyadicMesh, MeshElement, RectBox};
use crate::grid::CellSet;
use crate::maximal::{average_field, maximal_indicator, superlevel, KernelOpts};
use crate::measure::GridMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Test-set generators
// ---------------------------------------------------------------------------

/// Families of test sets for the level-set estimates. Positions are drawn in
/// the central half of the window so superlevel sets have room to grow before
/// hitting the boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetGenerator {
    /// One axis box per trial, sides a random fraction of the window.
    SingleBoxes,
    /// A union of boxes with mixed eccentricities.
    ScatteredBoxes { count: usize },
    /// A random union of dyadic blocks at a fixed depth.
    DyadicRandomSets { depth: u32 },
}

impl SetGenerator {
    pub fn label(&self) -> String {
        match self {
            SetGenerator::SingleBoxes => "single_boxes".into(),
            SetGenerator::ScatteredBoxes { count } => format!("scattered_boxes({count})"),
            SetGenerator::DyadicRandomSets { depth } => format!("dyadic_random_sets({depth})"),
        }
    }

    /// Deterministic per (seed, trial).
    pub fn generate(&self, window: &RectBox, resolution: usize, seed: u64, trial: u64) -> CellSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial.wrapping_mul(0x9e3779b97f4a7c15));
        let geom = crate::grid::GridGeom::new(window.clone(), resolution)
            .expect("generator called with a validated grid");
        let n = window.dim();
        let random_box = |rng: &mut ChaCha8Rng, min_frac: f64, max_frac: f64| -> RectBox {
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for a in 0..n {
                let side = window.side(a);
                // Log-uniform side fraction gives mixed eccentricities.
                let frac = min_frac * (max_frac / min_frac).powf(rng.gen::<f64>());
                let len = frac * side;
                // Center inside the central half of the window.
                let c_lo = window.lo[a] + 0.25 * side;
                let c_hi = window.hi[a] - 0.25 * side;
                let c = c_lo + rng.gen::<f64>() * (c_hi - c_lo);
                lo.push((c - 0.5 * len).max(window.lo[a]));
                hi.push((c + 0.5 * len).min(window.hi[a]));
            }
            RectBox::new(lo, hi).expect("sides are positive by construction")
        };
        match self {
            SetGenerator::SingleBoxes => {
                let b = random_box(&mut rng, 0.02, 0.25);
                CellSet::from_box(&geom, &b)
            }
            SetGenerator::ScatteredBoxes { count } => {
                let mut set = CellSet::empty(&geom);
                for _ in 0..(*count).max(1) {
                    let b = random_box(&mut rng, 0.01, 0.15);
                    set = set.union(&CellSet::from_box(&geom, &b));
                }
                set
            }
            SetGenerator::DyadicRandomSets { depth } => {
                let mesh = DyadicMesh::new(window.clone(), *depth);
                let side = 1usize << depth;
                let mut set = CellSet::empty(&geom);
                let mut idx = vec![0usize; n];
                loop {
                    let keep = rng.gen::<f64>() < 0.3;
                    // Central half only.
                    let central = idx
                        .iter()
                        .all(|&i| 4 * i >= side && 4 * (i + 1) <= 3 * side);
                    if keep && central {
                        let rect = MeshElement {
                            depth: *depth,
                            idx: idx.clone(),
                        }
                        .rect(&mesh);
                        set = set.union(&CellSet::from_box(&geom, &rect));
                    }
                    let mut a = n;
                    loop {
                        if a == 0 {
                            return set;
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
        }
    }
}

// ---------------------------------------------------------------------------
// Tauberian constant
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TauberianReport {
    pub gamma: f64,
    /// Max over tested sets of ν(strict superlevel γ of M 1_E) / ν(E) —
    /// a lower bound for the constant over all measurable sets.
    pub constant_lower: f64,
    pub witness_trial: u64,
    pub witness_set: CellSet,
    pub generator: String,
    pub seed: u64,
    pub trials: u64,
    pub skipped: u64,
    /// Per-trial ratios (NaN-free; skipped trials omitted as 0-mass).
    pub ratios: Vec<f64>,
}

/// Lower-bound estimate of the Tauberian constant at level γ:
/// the worst ratio ν({M_{𝔅,μ}1_E > γ})/ν(E) over generated test sets.
pub fn tauberian_constant(
    mu: &GridMeasure,
    nu: &GridMeasure,
    family: &BasisFamily,
    gamma: f64,
    generator: &SetGenerator,
    trials: u64,
    seed: u64,
) -> Result<TauberianReport> {
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::InvalidInput("gamma must lie in (0,1)".into()));
    }
    if mu.geom != nu.geom {
        return Err(Error::InvalidInput("mu and nu must share one grid".into()));
    }
    let geom = &mu.geom;
    let per_trial: Vec<Result<Option<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let e = generator.generate(&geom.window, geom.resolution, seed, t);
            let e_mass = nu.integrate_cells(&e);
            if !(e_mass > 0.0) {
                return Ok(None);
            }
            let field = maximal_indicator(mu, family, &e)?;
            let sup = superlevel(&field, gamma, true);
            Ok(Some(nu.integrate_cells(&sup) / e_mass))
        })
        .collect();
    let mut best: Option<(u64, f64)> = None;
    let mut skipped = 0;
    let mut ratios = Vec::with_capacity(trials as usize);
    for (t, r) in per_trial.into_iter().enumerate() {
        match r? {
            None => {
                skipped += 1;
                ratios.push(0.0);
            }
            Some(ratio) => {
                ratios.push(ratio);
                // Strict > keeps the earliest trial on ties: deterministic.
                if best.map_or(true, |(_, b)| ratio > b) {
                    best = Some((t as u64, ratio));
                }
            }
        }
    }
    let (witness_trial, constant_lower) =
        best.ok_or_else(|| Error::InvalidInput("every generated test set had zero mass".into()))?;
    let witness_set = generator.generate(&geom.window, geom.resolution, seed, witness_trial);
    Ok(TauberianReport {
        gamma,
        constant_lower,
        witness_trial,
        witness_set,
        generator: generator.label(),
        seed,
        trials,
        skipped,
        ratios,
    })
}

// ---------------------------------------------------------------------------
// Exponent p₀
// ---------------------------------------------------------------------------

/// The weak-type exponent produced by a Tauberian constant `c` at level γ for
/// a measure with doubling constant Δ: with β = (γ+1)/2, N the doubling
/// depth of (β, Δ), and η = 2(N+2),
/// `p₀ = η · log(max(c,2)) / log(1/β)` (logs base 2).
pub fn p_o_from_tauberian(c: f64, gamma: f64, delta: f64) -> Result<f64> {
    if !(c >= 1.0) {
        return Err(Error::InvalidInput("constant must be >= 1".into()));
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::InvalidInput("gamma must lie in (0,1)".into()));
    }
    let beta = 0.5 * (gamma + 1.0);
    let n = doubling_depth(beta, delta)?;
    let eta = 2.0 * (n as f64 + 2.0);
    Ok(eta * c.max(2.0).log2() / (1.0 / beta).log2())
}

// ---------------------------------------------------------------------------
// Restricted weak type
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakTypeViolation {
    pub trial: u64,
    pub lambda: f64,
    pub superlevel_mass: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakTypeReport {
    pub p_o: f64,
    pub c: f64,
    /// For each λ, the worst measured ν(superlevel)/ν(E).
    pub lambda_table: Vec<(f64, f64)>,
    pub violations: Vec<WeakTypeViolation>,
    pub trials: u64,
    pub skipped: u64,
}

impl WeakTypeReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the restricted weak-type envelope
/// `ν({M_{𝔅,μ}1_E > λ}) ≤ C·λ^{-p₀}·ν(E)` over generated sets and a λ grid.
/// The maximal field is computed once per set and reused for every λ.
pub fn restricted_weak_type_check(
    mu: &GridMeasure,
    nu: &GridMeasure,
    family: &BasisFamily,
    p_o: f64,
    c: f64,
    lambda_grid: &[f64],
    generator: &SetGenerator,
    trials: u64,
    seed: u64,
) -> Result<WeakTypeReport> {
    if lambda_grid.iter().any(|&l| !(0.0 < l && l < 1.0)) {
        return Err(Error::InvalidInput("lambda grid must lie in (0,1)".into()));
    }
    if mu.geom != nu.geom {
        return Err(Error::InvalidInput("mu and nu must share one grid".into()));
    }
    let geom = &mu.geom;
    type TrialOut = Vec<(f64, f64, f64)>; // (lambda, ratio, allowed-ratio)
    let per_trial: Vec<Result<Option<TrialOut>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let e = generator.generate(&geom.window, geom.resolution, seed, t);
            let e_mass = nu.integrate_cells(&e);
            if !(e_mass > 0.0) {
                return Ok(None);
            }
            let field = maximal_indicator(mu, family, &e)?;
            let rows = lambda_grid
                .iter()
                .map(|&l| {
                    let mass = nu.integrate_cells(&superlevel(&field, l, true));
                    (l, mass / e_mass, c * l.powf(-p_o))
                })
                .collect();
            Ok(Some(rows))
        })
        .collect();
    let mut table: Vec<(f64, f64)> = lambda_grid.iter().map(|&l| (l, 0.0)).collect();
    let mut violations = Vec::new();
    let mut skipped = 0;
    for (t, rows) in per_trial.into_iter().enumerate() {
        match rows? {
            None => skipped += 1,
            Some(rows) => {
                for (i, (l, ratio, allowed)) in rows.into_iter().enumerate() {
                    if ratio > table[i].1 {
                        table[i].1 = ratio;
                    }
                    if ratio > allowed * (1.0 + 1e-9) {
                        violations.push(WeakTypeViolation {
                            trial: t as u64,
                            lambda: l,
                            superlevel_mass: ratio,
                            allowed,
                        });
                    }
                }
            }
        }
    }
    if skipped == trials {
        return Err(Error::InvalidInput(
            "every generated test set had zero mass".into(),
        ));
    }
    Ok(WeakTypeReport {
        p_o,
        c,
        lambda_table: table,
        violations,
        trials,
        skipped,
    })
}

// ---------------------------------------------------------------------------
// Convex-to-rectangle transfer
// ---------------------------------------------------------------------------

/// Bound for the Tauberian constant of the associated-rectangle basis at
/// level α in terms of the convex-basis constant at level γ < α: `c^k` with
/// the exponent from [`transfer_exponent`] at β = (γ+α)/2.
#[allow(clippy::too_many_arguments)]
pub fn convex_to_rect_transfer(
    c_convex: f64,
    gamma: f64,
    alpha: f64,
    delta: f64,
    rho: f64,
    m: u32,
    big_n: u32,
    n: usize,
) -> Result<f64> {
    if !(c_convex >= 1.0) {
        return Err(Error::InvalidInput("constant must be >= 1".into()));
    }
    if !(0.0 < rho && rho <= 1.0) {
        return Err(Error::InvalidInput("rho must lie in (0,1]".into()));
    }
    let k = transfer_exponent(gamma, alpha, delta, m, big_n, n)?;
    Ok(c_convex.powi(k as i32))
}

// ---------------------------------------------------------------------------
// Differentiation check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DifferentiationReport {
    pub depths: Vec<u32>,
    /// ν-mass of the cells where the small-diameter averages deviate from f
    /// by more than the tolerance, one entry per completed depth.
    pub exceptional_mass: Vec<f64>,
    pub tolerance: f64,
    /// True when the schedule reached diameters no basis element can attain
    /// on this grid and was cut short.
    pub truncated: bool,
    pub pass: bool,
}

/// Density-basis check: for each depth `d` in the schedule, averages over
/// basis elements of diameter ≤ 2^{-d} should converge to `f`. Reports the
/// ν-mass of cells where either the sup- or inf-average deviates from f(x)
/// by more than `0.05·osc(f)`; passes when that mass is nonincreasing and
/// ends below 1% of ν(window).
pub fn differentiation_check(
    mu: &GridMeasure,
    nu: &GridMeasure,
    family: &BasisFamily,
    f: &[f64],
    depth_schedule: &[u32],
) -> Result<DifferentiationReport> {
    let geom = &mu.geom;
    if f.len() != geom.len() {
        return Err(Error::InvalidInput("function has wrong length".into()));
    }
    if f.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::InvalidInput(
            "differentiation check takes bounded nonnegative grid functions".into(),
        ));
    }
    if mu.geom != nu.geom {
        return Err(Error::InvalidInput("mu and nu must share one grid".into()));
    }
    let f_max = f.iter().cloned().fold(0.0f64, f64::max);
    let osc = f_max - f.iter().cloned().fold(f64::MAX, f64::min);
    // Absolute float-noise floor so constant functions are exactly clean.
    let tol = 0.05 * osc + 1e-9 * f_max.max(1.0);
    let num: Vec<f64> = f.iter().zip(mu.masses()).map(|(&v, &m)| v * m).collect();
    // The smallest attainable element diameter: one cell.
    let cell_diam = (0..geom.dim())
        .map(|a| geom.cell_width(a).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut depths = Vec::new();
    let mut exceptional = Vec::new();
    let mut truncated = false;
    for &d in depth_schedule {
        let diam = (-(d as f64)).exp2();
        if diam < cell_diam {
            truncated = true;
            break;
        }
        let opts_max = KernelOpts {
            max_diameter: Some(diam),
            minimize: false,
        };
        let opts_min = KernelOpts {
            max_diameter: Some(diam),
            minimize: true,
        };
        let upper = average_field(mu, &num, family, opts_max)?;
        let lower = average_field(mu, &num, family, opts_min)?;
        let mut bad = CellSet::empty(geom);
        for flat in 0..geom.len() {
            let u = upper.values[flat];
            let l = lower.values[flat];
            // Cells no admissible element covers keep their sentinels and
            // count as exceptional only if osc > 0.
            let dev = if u.is_finite() && l.is_finite() {
                (u - f[flat]).max(f[flat] - l).max(0.0)
            } else {
                f64::INFINITY
            };
            bad.bits[flat] = dev > tol;
        }
        depths.push(d);
        exceptional.push(nu.integrate_cells(&bad));
    }
    if depths.is_empty() {
        return Err(Error::Resolution(
            "depth schedule is entirely finer than the grid".into(),
        ));
    }
    let monotone = exceptional
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    let final_ok = *exceptional.last().unwrap() <= 0.01 * nu.total();
    Ok(DifferentiationReport {
        depths,
        exceptional_mass: exceptional,
        tolerance: tol,
        truncated,
        pass: monotone && final_ok,
    })
}
