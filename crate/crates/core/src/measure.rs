//! Grid-discretized measures, analytic weight families, integration, and
//! estimation of doubling and Muckenhoupt A_p constants.
//!
//! A [`GridMeasure`] stores one nonnegative mass per cell, the exact integral
//! of its density over the cell for the analytic families (closed forms per
//! axis). Cells are half-open; a cell belongs to a region iff its center
//! does. Estimators report lower bounds with reproducible witnesses — no
//! claim is made of attaining the true supremum over an uncountable family.

use crate::error::{Error, Result};
use crate::geometry::{BasisFamily, BasisKind, ConvexBody, DyadicMesh, MeshElement, RectBox};
use crate::grid::{CellSet, GridGeom, PrefixTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use std::io::{Read, Write};

/// One-dimensional density factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AxisDensity {
    Uniform,
    /// `|x|^exponent`, locally integrable iff exponent > −1.
    Power {
        exponent: f64,
    },
    /// Standard Gaussian density `e^{-x^2/2}` (unnormalized).
    Gaussian,
}

/// Analytic weight families realizable on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightSpec {
    Lebesgue,
    /// Product of per-axis powers `|x_a|^{exponents[a]}`.
    Power {
        exponents: Vec<f64>,
    },
    /// Product of arbitrary per-axis factors.
    Product {
        factors: Vec<AxisDensity>,
    },
    /// Product of standard Gaussians on every axis — the designated
    /// non-doubling specimen.
    Gaussian,
    /// Random measure built by recursive mass splitting: at each dyadic
    /// subdivision each axis splits its mass by a factor drawn uniformly from
    /// `(lo, hi) ⊂ (0,1)` (the sibling gets the complement).
    DyadicRandom {
        seed: u64,
        lo: f64,
        hi: f64,
    },
}

impl WeightSpec {
    /// Realize the weight as a grid measure. Cell masses are exact integrals
    /// for the analytic families.
    pub fn realize(&self, window: &RectBox, resolution: usize) -> Result<GridMeasure> {
        let geom = GridGeom::new(window.clone(), resolution)?;
        let n = geom.dim();
        let mass = match self {
            WeightSpec::Lebesgue => product_masses(&geom, &vec![AxisDensity::Uniform; n])?,
            WeightSpec::Power { exponents } => {
                if exponents.len() != n {
                    return Err(Error::InvalidInput(
                        "one power exponent per axis required".into(),
                    ));
                }
                let factors: Vec<AxisDensity> = exponents
                    .iter()
                    .map(|&a| AxisDensity::Power { exponent: a })
                    .collect();
                product_masses(&geom, &factors)?
            }
            WeightSpec::Product { factors } => {
                if factors.len() != n {
                    return Err(Error::InvalidInput(
                        "one density factor per axis required".into(),
                    ));
                }
                product_masses(&geom, factors)?
            }
            WeightSpec::Gaussian => product_masses(&geom, &vec![AxisDensity::Gaussian; n])?,
            WeightSpec::DyadicRandom { seed, lo, hi } => {
                if !(0.0 < *lo && lo < hi && *hi < 1.0) {
                    return Err(Error::InvalidInput(
                        "dyadic multipliers need 0 < lo < hi < 1".into(),
                    ));
                }
                dyadic_random_masses(&geom, *seed, *lo, *hi)
            }
        };
        GridMeasure::from_masses(geom, mass)
    }
}

fn axis_masses(factor: &AxisDensity, lo: f64, hi: f64, res: usize) -> Result<Vec<f64>> {
    let h = (hi - lo) / res as f64;
    // Antiderivative of the factor density.
    let anti: Box<dyn Fn(f64) -> f64> = match factor {
        AxisDensity::Uniform => Box::new(|x| x),
        AxisDensity::Power { exponent } => {
            let a = *exponent;
            if a <= -1.0 {
                return Err(Error::InvalidInput(format!(
                    "power exponent {a} is not locally integrable"
                )));
            }
            Box::new(move |x: f64| x.signum() * x.abs().powf(a + 1.0) / (a + 1.0))
        }
        AxisDensity::Gaussian => Box::new(|x: f64| {
            (std::f64::consts::PI / 2.0).sqrt() * erf(x / std::f64::consts::SQRT_2)
        }),
    };
    Ok((0..res)
        .map(|i| {
            let a = lo + i as f64 * h;
            let b = lo + (i + 1) as f64 * h;
            (anti(b) - anti(a)).max(0.0)
        })
        .collect())
}

fn product_masses(geom: &GridGeom, factors: &[AxisDensity]) -> Result<Vec<f64>> {
    let n = geom.dim();
    let mut per_axis = Vec::with_capacity(n);
    for a in 0..n {
        per_axis.push(axis_masses(
            &factors[a],
            geom.window.lo[a],
            geom.window.hi[a],
            geom.resolution,
        )?);
    }
    let mut mass = vec![0.0; geom.len()];
    let lo = vec![0usize; n];
    let hi = vec![geom.resolution; n];
    geom.for_each_in(&lo, &hi, |idx, flat| {
        mass[flat] = idx
            .iter()
            .enumerate()
            .map(|(a, &i)| per_axis[a][i])
            .product();
    });
    Ok(mass)
}

fn dyadic_random_masses(geom: &GridGeom, seed: u64, lo_m: f64, hi_m: f64) -> Vec<f64> {
    let n = geom.dim();
    let mut mass = vec![0.0; geom.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Recursive split of the index block [lo, lo+size)^n; each level halves
    // every axis and distributes the block mass by per-axis factors.
    fn split(
        geom: &GridGeom,
        mass: &mut [f64],
        lo: &[usize],
        size: usize,
        m: f64,
        rng: &mut ChaCha8Rng,
        range: (f64, f64),
    ) {
        let n = geom.dim();
        if size == 1 {
            mass[geom.flat(lo)] = m;
            return;
        }
        let ts: Vec<f64> = (0..n).map(|_| rng.gen_range(range.0..range.1)).collect();
        for mask in 0..(1usize << n) {
            let mut child_lo = lo.to_vec();
            let mut f = m;
            for a in 0..n {
                if mask & (1 << a) != 0 {
                    child_lo[a] += size / 2;
                    f *= 1.0 - ts[a];
                } else {
                    f *= ts[a];
                }
            }
            split(geom, mass, &child_lo, size / 2, f, rng, range);
        }
    }
    split(
        geom,
        &mut mass,
        &vec![0; n],
        geom.resolution,
        geom.window.volume(),
        &mut rng,
        (lo_m, hi_m),
    );
    mass
}

/// A nonnegative measure discretized on a grid, with a summed-area table for
/// O(1) rectangle queries.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    pub geom: GridGeom,
    mass: Vec<f64>,
    prefix: PrefixTable,
}

impl GridMeasure {
    pub fn from_masses(geom: GridGeom, mass: Vec<f64>) -> Result<GridMeasure> {
        if mass.len() != geom.len() {
            return Err(Error::InvalidInput("mass vector has wrong length".into()));
        }
        if mass.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidInput(
                "cell masses must be finite and nonnegative".into(),
            ));
        }
        let prefix = PrefixTable::build(&geom, &mass);
        Ok(GridMeasure { geom, mass, prefix })
    }

    pub fn dim(&self) -> usize {
        self.geom.dim()
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn prefix(&self) -> &PrefixTable {
        &self.prefix
    }

    /// Build a summed-area table of arbitrary per-cell values (e.g. `f·dμ`).
    pub fn prefix_of(&self, values: &[f64]) -> PrefixTable {
        PrefixTable::build(&self.geom, values)
    }

    /// Summed-area table of the masses restricted to a cell set.
    pub fn masked_prefix(&self, set: &CellSet) -> PrefixTable {
        let vals: Vec<f64> = self
            .mass
            .iter()
            .zip(&set.bits)
            .map(|(&m, &b)| if b { m } else { 0.0 })
            .collect();
        PrefixTable::build(&self.geom, &vals)
    }

    pub fn total(&self) -> f64 {
        let lo = vec![0; self.dim()];
        let hi = vec![self.geom.resolution; self.dim()];
        self.prefix.sum(&lo, &hi)
    }

    /// Mass of the cells whose centers lie in the half-open box; the flag is
    /// true when the box extends beyond the window (truncation).
    pub fn integrate_box(&self, b: &RectBox) -> (f64, bool) {
        let (lo, hi, truncated) = self.geom.index_range(b);
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return (0.0, truncated);
        }
        (self.prefix.sum(&lo, &hi), truncated)
    }

    /// Mass of the cells whose centers lie in the convex body.
    pub fn integrate_body(&self, body: &ConvexBody) -> f64 {
        let (lo, hi, _) = self.geom.index_range(&body.bounding_box());
        let mut acc = 0.0;
        self.geom.for_each_in(&lo, &hi, |idx, flat| {
            if body.contains(&self.geom.center(idx), 0.0) {
                acc += self.mass[flat];
            }
        });
        acc
    }

    pub fn integrate_cells(&self, set: &CellSet) -> f64 {
        self.mass
            .iter()
            .zip(&set.bits)
            .filter(|(_, &b)| b)
            .map(|(&m, _)| m)
            .sum()
    }

    /// Pushforward under the diagonal affine map `x_a ↦ scale_a x_a +
    /// shift_a`: cell masses are carried over bijectively, so the total mass
    /// is preserved exactly.
    pub fn pushforward_diag(&self, scale: &[f64], shift: &[f64]) -> Result<GridMeasure> {
        if scale.len() != self.dim() || shift.len() != self.dim() {
            return Err(Error::InvalidInput("map dimension mismatch".into()));
        }
        if scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidInput(
                "only orientation-preserving diagonal maps are supported".into(),
            ));
        }
        let window = RectBox::new(
            self.geom
                .window
                .lo
                .iter()
                .enumerate()
                .map(|(a, &x)| scale[a] * x + shift[a])
                .collect(),
            self.geom
                .window
                .hi
                .iter()
                .enumerate()
                .map(|(a, &x)| scale[a] * x + shift[a])
                .collect(),
        )?;
        let geom = GridGeom::new(window, self.geom.resolution)?;
        GridMeasure::from_masses(geom, self.mass.clone())
    }

    /// Serialize as a small header plus the flat mass array (little endian).
    pub fn dump(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(b"GMX1")?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.geom.resolution as u64).to_le_bytes())?;
        for a in 0..self.dim() {
            w.write_all(&self.geom.window.lo[a].to_le_bytes())?;
            w.write_all(&self.geom.window.hi[a].to_le_bytes())?;
        }
        for &m in &self.mass {
            w.write_all(&m.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<GridMeasure> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"GMX1" {
            return Err(Error::InvalidInput("bad measure file magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let res = u64::from_le_bytes(b8) as usize;
        let mut lo = vec![0.0; dim];
        let mut hi = vec![0.0; dim];
        for a in 0..dim {
            r.read_exact(&mut b8)?;
            lo[a] = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            hi[a] = f64::from_le_bytes(b8);
        }
        let geom = GridGeom::new(RectBox::new(lo, hi)?, res)?;
        let mut mass = vec![0.0; geom.len()];
        for m in &mut mass {
            r.read_exact(&mut b8)?;
            *m = f64::from_le_bytes(b8);
        }
        GridMeasure::from_masses(geom, mass)
    }
}

// ---------------------------------------------------------------------------
// Doubling constant estimation
// ---------------------------------------------------------------------------

/// Witness of the best doubling ratio found: the base set `B` (box or convex
/// copy bounding box), and the translation `σ` with `B ⊂ τ_σ dil_2 B`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingWitness {
    pub base: RectBox,
    pub shift: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingReport {
    /// Max ratio `μ(τ_σ dil_2 B) / μ(B)` over the sampled pairs: a lower
    /// bound on the doubling constant.
    pub estimate: f64,
    pub witness: Option<DoublingWitness>,
    pub sample_count: usize,
    pub skipped: usize,
}

/// Estimate the doubling constant of `mu` with respect to the basis family:
/// the supremum of `μ(τ_σ dil_2 B)/μ(B)` over `B` in the family and shifts
/// `σ` with `B ⊂ τ_σ dil_2 B`. Deterministic given the seed; combines a
/// systematic dyadic sweep with `samples` random draws. Dilates leaving the
/// window are skipped (reported lower bound stays honest).
pub fn estimate_doubling(
    mu: &GridMeasure,
    family: &BasisFamily,
    samples: usize,
    seed: u64,
) -> Result<DoublingReport> {
    match &family.kind {
        BasisKind::AxisRectangles | BasisKind::AxisCubes => estimate_doubling_rects(
            mu,
            matches!(family.kind, BasisKind::AxisCubes),
            samples,
            seed,
        ),
        BasisKind::ConvexShape(body) => estimate_doubling_convex(mu, body, family, samples, seed),
    }
}

fn estimate_doubling_rects(
    mu: &GridMeasure,
    cubes: bool,
    samples: usize,
    seed: u64,
) -> Result<DoublingReport> {
    let geom = &mu.geom;
    let n = geom.dim();
    let res = geom.resolution;
    let mut best: Option<DoublingWitness> = None;
    let mut count = 0usize;
    let mut skipped = 0usize;

    let mut consider = |sizes: &[usize], pos: &[usize], dpos: &[usize], mu: &GridMeasure| {
        // Base cells [pos, pos+size); dilate cells [dpos, dpos+2·size).
        let hi: Vec<usize> = pos.iter().zip(sizes).map(|(p, s)| p + s).collect();
        let dhi: Vec<usize> = dpos.iter().zip(sizes).map(|(p, s)| p + 2 * s).collect();
        let mb = mu.prefix().sum(pos, &hi);
        if !(mb > 0.0) {
            skipped += 1;
            return;
        }
        let md = mu.prefix().sum(dpos, &dhi);
        count += 1;
        let ratio = md / mb;
        if best.as_ref().map_or(true, |w| ratio > w.ratio) {
            let lo: Vec<f64> = pos
                .iter()
                .enumerate()
                .map(|(a, &p)| geom.window.lo[a] + p as f64 * geom.cell_width(a))
                .collect();
            let hi_r: Vec<f64> = hi
                .iter()
                .enumerate()
                .map(|(a, &p)| geom.window.lo[a] + p as f64 * geom.cell_width(a))
                .collect();
            let shift: Vec<f64> = dpos
                .iter()
                .enumerate()
                .map(|(a, &d)| geom.window.lo[a] + d as f64 * geom.cell_width(a) - 2.0 * lo[a])
                .collect();
            best = Some(DoublingWitness {
                base: RectBox { lo, hi: hi_r },
                shift,
                ratio,
            });
        }
    };

    // Systematic sweep: dyadic sizes, half-size position stride, canonical
    // shifts (shared-low-corner, shared-high-corner, centered).
    let dyadic_sizes: Vec<usize> = (0..)
        .map(|k| 1usize << k)
        .take_while(|&w| 2 * w <= res)
        .collect();
    let size_combos: Vec<Vec<usize>> = if cubes {
        dyadic_sizes.iter().map(|&w| vec![w; n]).collect()
    } else {
        let mut combos = vec![Vec::new()];
        for _ in 0..n {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    dyadic_sizes.iter().map(move |&w| {
                        let mut c2 = c.clone();
                        c2.push(w);
                        c2
                    })
                })
                .collect();
        }
        combos
    };
    for sizes in &size_combos {
        // Position lattice with stride size/2 (at least 1), capped so the
        // sweep stays tractable in 2D/3D.
        let strides: Vec<usize> = sizes
            .iter()
            .map(|&w| (w / 2).max(1).max(res / 128))
            .collect();
        let mut pos = vec![0usize; n];
        'positions: loop {
            // Canonical dilate anchors per axis: 3^n combinations.
            for mask in 0..(3usize.pow(n as u32)) {
                let mut m = mask;
                let mut dpos = vec![0usize; n];
                let mut ok = true;
                for a in 0..n {
                    let w = sizes[a];
                    let i = pos[a];
                    let choice = m % 3;
                    m /= 3;
                    let d = match choice {
                        0 => i as isize,                    // share low corner
                        1 => i as isize - w as isize,       // share high corner
                        _ => i as isize - (w as isize) / 2, // centered
                    };
                    if d < 0 || d as usize + 2 * w > res {
                        ok = false;
                        break;
                    }
                    dpos[a] = d as usize;
                }
                if ok {
                    consider(sizes, &pos, &dpos, mu);
                }
            }
            // Advance position.
            let mut a = n;
            loop {
                if a == 0 {
                    break 'positions;
                }
                a -= 1;
                pos[a] += strides[a];
                if pos[a] + sizes[a] <= res {
                    break;
                }
                pos[a] = 0;
            }
        }
    }

    // Window-corner-anchored sweep with a dense (quarter-octave) size grid:
    // measures whose doubling degenerates toward the window boundary attain
    // their worst ratios on boundary-anchored bases, and the dyadic size
    // lattice above is too coarse to land near the optimum there.
    {
        let mut size_grid: Vec<usize> = Vec::new();
        let mut s = (res / 2) as f64;
        while s >= 1.0 {
            let v = s.round() as usize;
            if size_grid.last() != Some(&v) {
                size_grid.push(v);
            }
            s /= 2f64.powf(0.25);
        }
        let mut combo = vec![0usize; n];
        'combos: loop {
            if cubes && combo.iter().any(|&c| c != combo[0]) {
                // Advance below; cube bases need equal sizes on every axis.
            } else {
                for corner in 0..(1usize << n) {
                    let mut pos = vec![0usize; n];
                    let mut dpos = vec![0usize; n];
                    let mut sizes = vec![0usize; n];
                    for a in 0..n {
                        let w = size_grid[combo[a]];
                        sizes[a] = w;
                        if corner >> a & 1 == 1 {
                            pos[a] = res - w;
                            dpos[a] = res - 2 * w;
                        }
                    }
                    consider(&sizes, &pos, &dpos, mu);
                }
            }
            let mut a = n;
            loop {
                if a == 0 {
                    break 'combos;
                }
                a -= 1;
                combo[a] += 1;
                if combo[a] < size_grid.len() {
                    break;
                }
                combo[a] = 0;
            }
        }
    }

    // Random samples.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut skipped_rand = 0usize;
    for _ in 0..samples {
        let mut sizes = vec![0usize; n];
        let w0 = rng.gen_range(1..=res / 2);
        for a in 0..n {
            sizes[a] = if cubes {
                w0
            } else {
                rng.gen_range(1..=res / 2)
            };
        }
        let mut pos = vec![0usize; n];
        let mut dpos = vec![0usize; n];
        let mut ok = true;
        for a in 0..n {
            pos[a] = rng.gen_range(0..=res - sizes[a]);
            let lo_d = pos[a] as isize - sizes[a] as isize;
            let hi_d = pos[a] as isize;
            let d = rng.gen_range(lo_d..=hi_d);
            if d < 0 || d as usize + 2 * sizes[a] > res {
                ok = false;
                break;
            }
            dpos[a] = d as usize;
        }
        if ok {
            consider(&sizes, &pos, &dpos, mu);
        } else {
            skipped_rand += 1;
        }
    }
    drop(consider);
    skipped += skipped_rand;

    match best {
        Some(w) => Ok(DoublingReport {
            estimate: w.ratio,
            witness: Some(w),
            sample_count: count,
            skipped,
        }),
        None => Err(Error::InvalidInput(
            "measure vanishes on basis: every sampled set had zero mass".into(),
        )),
    }
}

fn estimate_doubling_convex(
    mu: &GridMeasure,
    generator: &ConvexBody,
    family: &BasisFamily,
    samples: usize,
    seed: u64,
) -> Result<DoublingReport> {
    if family.scale_grid.is_empty() {
        return Err(Error::InvalidInput("empty scale grid".into()));
    }
    let geom = &mu.geom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gc = generator
        .john_center()
        .map_err(|e| Error::InvalidInput(format!("generator: {e}")))?;
    let mut best: Option<DoublingWitness> = None;
    let mut count = 0usize;
    let mut skipped = 0usize;
    let n = geom.dim();
    for _ in 0..samples.max(1) {
        let s = family.scale_grid[rng.gen_range(0..family.scale_grid.len())];
        // Place the copy with its John center on a random cell center.
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..geom.resolution)).collect();
        let p = geom.center(&idx);
        let shift: Vec<f64> = p.iter().zip(&gc).map(|(x, c)| x - s * c).collect();
        let copy = generator.homothety(s, &shift);
        let c = copy.john_center().unwrap();
        // Concentric doubling plus random valid shifts around it.
        let mut shifts: Vec<Vec<f64>> = vec![c.iter().map(|x| -x).collect()];
        for _ in 0..3 {
            let pert: Vec<f64> = c
                .iter()
                .map(|x| -x + rng.gen_range(-0.5..0.5) * s * generator.diameter())
                .collect();
            shifts.push(pert);
        }
        let mb = mu.integrate_body(&copy);
        if !(mb > 0.0) {
            skipped += 1;
            continue;
        }
        for sigma in shifts {
            let dilate = copy.homothety(2.0, &sigma);
            // Validity: B ⊂ τ_σ dil_2 B, checked on vertices.
            if !copy.vertices().iter().all(|v| dilate.contains(v, 1e-12)) {
                continue;
            }
            if !geom.window.contains_box(&dilate.bounding_box(), 1e-12) {
                skipped += 1;
                continue;
            }
            let md = mu.integrate_body(&dilate);
            count += 1;
            let ratio = md / mb;
            if best.as_ref().map_or(true, |w| ratio > w.ratio) {
                best = Some(DoublingWitness {
                    base: copy.bounding_box(),
                    shift: sigma.clone(),
                    ratio,
                });
            }
        }
    }
    match best {
        Some(w) => Ok(DoublingReport {
            estimate: w.ratio,
            witness: Some(w),
            sample_count: count,
            skipped,
        }),
        None => Err(Error::InvalidInput(
            "measure vanishes on basis: every sampled copy had zero mass".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Muckenhoupt A_p constant estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApReport {
    /// Lower bound on the A_p constant; `+∞` when the dual weight is not
    /// locally integrable.
    pub estimate: f64,
    pub witness: Option<RectBox>,
    pub p: f64,
}

/// Dual weight `w^{1-p'}` of a weight spec, or `None` when it fails local
/// integrability (the A_p constant is then `+∞`).
fn dual_spec(spec: &WeightSpec, p: f64) -> Result<Option<WeightSpec>> {
    let pp = p / (p - 1.0);
    let e = 1.0 - pp;
    let dual_axis = |f: &AxisDensity| -> Option<AxisDensity> {
        match f {
            AxisDensity::Uniform => Some(AxisDensity::Uniform),
            AxisDensity::Power { exponent } => {
                let a = exponent * e;
                if a <= -1.0 {
                    None
                } else {
                    Some(AxisDensity::Power { exponent: a })
                }
            }
            // exp(-x²/2)^{1-p'} = exp(x²(p'-1)/2): integrable on the bounded
            // window, handled numerically by the caller.
            AxisDensity::Gaussian => None,
        }
    };
    match spec {
        WeightSpec::Lebesgue => Ok(Some(WeightSpec::Lebesgue)),
        WeightSpec::Power { exponents } => {
            let mut out = Vec::new();
            for &a in exponents {
                match dual_axis(&AxisDensity::Power { exponent: a }) {
                    Some(AxisDensity::Power { exponent }) => out.push(exponent),
                    _ => return Ok(None),
                }
            }
            Ok(Some(WeightSpec::Power { exponents: out }))
        }
        WeightSpec::Product { factors } => {
            let mut out = Vec::new();
            for f in factors {
                match dual_axis(f) {
                    Some(d) => out.push(d),
                    None => return Ok(None),
                }
            }
            Ok(Some(WeightSpec::Product { factors: out }))
        }
        WeightSpec::Gaussian | WeightSpec::DyadicRandom { .. } => Err(Error::InvalidInput(
            "A_p estimation supports Lebesgue/Power/Product weights and \
             piecewise-constant duals computed cellwise"
                .into(),
        )),
    }
}

/// Estimate the Muckenhoupt A_p constant of the weight over axis rectangles:
/// `sup_B (avg_B w)(avg_B w^{1-p'})^{p-1}` with Lebesgue averages. Uses the
/// closed-form dual weight when it exists; for `DyadicRandom` (a
/// piecewise-constant density) the dual is computed exactly cellwise.
pub fn estimate_ap(
    spec: &WeightSpec,
    p: f64,
    window: &RectBox,
    resolution: usize,
    samples: usize,
    seed: u64,
) -> Result<ApReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidInput("A_p needs p > 1".into()));
    }
    let w = spec.realize(window, resolution)?;
    let dual = match spec {
        WeightSpec::DyadicRandom { .. } => {
            let pp = p / (p - 1.0);
            let e = 1.0 - pp;
            let vol = w.geom.cell_volume();
            let dual_mass: Vec<f64> = w
                .masses()
                .iter()
                .map(|&m| (m / vol).powf(e) * vol)
                .collect();
            if dual_mass.iter().any(|v| !v.is_finite()) {
                return Ok(ApReport {
                    estimate: f64::INFINITY,
                    witness: None,
                    p,
                });
            }
            GridMeasure::from_masses(w.geom.clone(), dual_mass)?
        }
        _ => match dual_spec(spec, p)? {
            Some(d) => d.realize(window, resolution)?,
            None => {
                return Ok(ApReport {
                    estimate: f64::INFINITY,
                    witness: None,
                    p,
                })
            }
        },
    };

    let geom = &w.geom;
    let n = geom.dim();
    let res = geom.resolution;
    let cellvol = geom.cell_volume();
    let mut best = 0.0f64;
    let mut witness = None;
    let mut consider = |pos: &[usize], sizes: &[usize]| {
        let hi: Vec<usize> = pos.iter().zip(sizes).map(|(p, s)| p + s).collect();
        let vol = sizes.iter().product::<usize>() as f64 * cellvol;
        let aw = w.prefix().sum(pos, &hi) / vol;
        let ad = dual.prefix().sum(pos, &hi) / vol;
        let val = aw * ad.powf(p - 1.0);
        if val > best {
            best = val;
            witness = Some(RectBox {
                lo: pos
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| geom.window.lo[a] + i as f64 * geom.cell_width(a))
                    .collect(),
                hi: hi
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| geom.window.lo[a] + i as f64 * geom.cell_width(a))
                    .collect(),
            });
        }
    };

    // Dyadic sweep.
    let dyadic_sizes: Vec<usize> = (0..)
        .map(|k| 1usize << k)
        .take_while(|&s| s <= res)
        .collect();
    let mut size_combos = vec![Vec::new()];
    for _ in 0..n {
        size_combos = size_combos
            .into_iter()
            .flat_map(|c| {
                dyadic_sizes.iter().map(move |&s| {
                    let mut c2 = c.clone();
                    c2.push(s);
                    c2
                })
            })
            .collect();
    }
    for sizes in &size_combos {
        let strides: Vec<usize> = sizes
            .iter()
            .map(|&s| (s / 2).max(1).max(res / 128))
            .collect();
        let mut pos = vec![0usize; n];
        'sweep: loop {
            consider(&pos, sizes);
            let mut a = n;
            loop {
                if a == 0 {
                    break 'sweep;
                }
                a -= 1;
                pos[a] += strides[a];
                if pos[a] + sizes[a] <= res {
                    break;
                }
                pos[a] = 0;
            }
        }
    }
    // Random samples.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=res)).collect();
        let pos: Vec<usize> = (0..n).map(|a| rng.gen_range(0..=res - sizes[a])).collect();
        consider(&pos, &sizes);
    }

    Ok(ApReport {
        estimate: best,
        witness,
        p,
    })
}

// ---------------------------------------------------------------------------
// Dyadic growth factor
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthViolation {
    pub element: MeshElement,
    pub generations: u32,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub gamma: f64,
    pub checked: usize,
    pub violations: Vec<GrowthViolation>,
}

/// Growth factor `γ = 1 + (2^n − 1)/δ` of a measure that is `δ`-doubling with
/// respect to the mesh's homothety class, and exhaustive verification of
/// `μ(R) ≤ γ^{-m} μ(R^{(m)})` for every element and every ancestor depth.
/// Violations signal that `δ` was underestimated.
pub fn growth_check(mu: &GridMeasure, mesh: &DyadicMesh, delta: f64) -> Result<GrowthReport> {
    let n = mesh.dim() as u32;
    let gamma = 1.0 + ((1u32 << n) as f64 - 1.0) / delta;
    // Element masses per depth.
    let mut by_depth: Vec<Vec<f64>> = Vec::new();
    for depth in 0..=mesh.max_depth {
        let side = 1usize << depth;
        let mut masses = vec![0.0; side.pow(n)];
        let mut idx = vec![0usize; n as usize];
        loop {
            let elem = MeshElement {
                depth,
                idx: idx.clone(),
            };
            let rect = elem.rect(mesh);
            if !mu.geom.is_aligned(&rect) {
                return Err(Error::Resolution(
                    "mesh elements are not grid-aligned at this depth".into(),
                ));
            }
            let (m, _) = mu.integrate_box(&rect);
            let flat = idx.iter().fold(0usize, |acc, &i| acc * side + i);
            masses[flat] = m;
            let mut a = n as usize;
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
        by_depth.push(masses);
    }
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for depth in 1..=mesh.max_depth {
        let side = 1usize << depth;
        let count = side.pow(n);
        for flat in 0..count {
            // Reconstruct the index vector.
            let mut idx = vec![0usize; n as usize];
            let mut f = flat;
            for a in (0..n as usize).rev() {
                idx[a] = f % side;
                f /= side;
            }
            let m_self = by_depth[depth as usize][flat];
            for gen in 1..=depth {
                let aside = 1usize << (depth - gen);
                let aflat = idx.iter().fold(0usize, |acc, &i| acc * aside + (i >> gen));
                let m_anc = by_depth[(depth - gen) as usize][aflat];
                checked += 1;
                if m_self * gamma.powi(gen as i32) > m_anc * (1.0 + 1e-9) {
                    violations.push(GrowthViolation {
                        element: MeshElement {
                            depth,
                            idx: idx.clone(),
                        },
                        generations: gen,
                        ratio: m_self * gamma.powi(gen as i32) / m_anc,
                    });
                }
            }
        }
    }
    Ok(GrowthReport {
        gamma,
        checked,
        violations,
    })
}
