//! Slow, obviously-correct reference implementations used to cross-check the
//! production kernels on small grids. Everything here favors directness over
//! speed: plain nested loops, no prefix tables shared with the fast paths.

use crate::error::{Error, Result};
use crate::geometry::{DyadicMesh, MeshElement};
use crate::grid::{CellSet, GridGeom};
use crate::measure::GridMeasure;

/// Maximal averages `num(B)/μ(B)` over ALL axis-aligned index boxes, by
/// enumerating every box and painting its cells. Exponential in resolution;
/// intended for grids up to ~48 cells per side.
pub fn brute_rect_maximal(mu: &GridMeasure, num: &[f64]) -> Result<Vec<f64>> {
    let geom = &mu.geom;
    if num.len() != geom.len() {
        return Err(Error::InvalidInput("numerator has wrong length".into()));
    }
    if geom.resolution > 48 {
        return Err(Error::Resolution(
            "reference kernel is limited to resolution 48".into(),
        ));
    }
    let n = geom.dim();
    let res = geom.resolution;
    let mut out = vec![f64::NEG_INFINITY; geom.len()];
    // Enumerate (lo, hi) per axis with lo <= hi (inclusive index bounds).
    let mut lo = vec![0usize; n];
    let mut hi = vec![0usize; n];
    loop {
        // Sum num and mass over the box by direct iteration.
        let mut mass = 0.0;
        let mut val = 0.0;
        let mut idx = lo.clone();
        'cells: loop {
            let flat = geom.flat(&idx);
            mass += mu.masses()[flat];
            val += num[flat];
            let mut a = n;
            loop {
                if a == 0 {
                    break 'cells;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] <= hi[a] {
                    break;
                }
                idx[a] = lo[a];
            }
        }
        if mass > 0.0 {
            let avg = val / mass;
            let mut idx = lo.clone();
            'paint: loop {
                let flat = geom.flat(&idx);
                if avg > out[flat] {
                    out[flat] = avg;
                }
                let mut a = n;
                loop {
                    if a == 0 {
                        break 'paint;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] <= hi[a] {
                        break;
                    }
                    idx[a] = lo[a];
                }
            }
        }
        // Advance (lo, hi) lexicographically: hi first, then lo.
        let mut a = n;
        let done = loop {
            if a == 0 {
                break true;
            }
            a -= 1;
            if hi[a] + 1 < res {
                hi[a] += 1;
                break false;
            }
            if lo[a] + 1 < res {
                lo[a] += 1;
                hi[a] = lo[a];
                break false;
            }
            lo[a] = 0;
            hi[a] = 0;
        };
        if done {
            break;
        }
    }
    for v in &mut out {
        if *v == f64::NEG_INFINITY {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Dyadic maximal averages by scanning every mesh element at every depth.
pub fn brute_dyadic_maximal(mu: &GridMeasure, mesh: &DyadicMesh, f: &[f64]) -> Result<Vec<f64>> {
    let geom = &mu.geom;
    if f.len() != geom.len() {
        return Err(Error::InvalidInput("function has wrong length".into()));
    }
    let n = geom.dim();
    let mut out = vec![0.0f64; geom.len()];
    for depth in 0..=mesh.max_depth {
        let side = 1usize << depth;
        let mut idx = vec![0usize; n];
        loop {
            let rect = MeshElement {
                depth,
                idx: idx.clone(),
            }
            .rect(mesh);
            if !geom.is_aligned(&rect) {
                return Err(Error::Resolution(format!(
                    "depth {depth} is finer than the grid"
                )));
            }
            let (lo, hi, _) = geom.index_range(&rect);
            let mut mass = 0.0;
            let mut val = 0.0;
            geom.for_each_in(&lo, &hi, |_, flat| {
                mass += mu.masses()[flat];
                val += f[flat] * mu.masses()[flat];
            });
            if mass > 0.0 {
                let avg = val / mass;
                geom.for_each_in(&lo, &hi, |_, flat| {
                    if avg > out[flat] {
                        out[flat] = avg;
                    }
                });
            }
            let mut a = n;
            let done = loop {
                if a == 0 {
                    break true;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < side {
                    break false;
                }
                idx[a] = 0;
            };
            if done {
                break;
            }
        }
    }
    Ok(out)
}

/// Calderón–Zygmund selection by exhaustive enumeration: every element at
/// every depth whose average exceeds β and ALL of whose strict ancestors have
/// average ≤ β.
pub fn brute_cz(
    mu: &GridMeasure,
    mesh: &DyadicMesh,
    e: &CellSet,
    beta: f64,
) -> Result<Vec<MeshElement>> {
    let geom = &mu.geom;
    let avg = |elem: &MeshElement| -> Option<f64> {
        let rect = elem.rect(mesh);
        let (lo, hi, _) = geom.index_range(&rect);
        let mut mass = 0.0;
        let mut hit = 0.0;
        geom.for_each_in(&lo, &hi, |_, flat| {
            mass += mu.masses()[flat];
            if e.bits[flat] {
                hit += mu.masses()[flat];
            }
        });
        if mass > 0.0 {
            Some(hit / mass)
        } else {
            None
        }
    };
    let n = geom.dim();
    let mut out = Vec::new();
    for depth in 1..=mesh.max_depth {
        let side = 1usize << depth;
        let mut idx = vec![0usize; n];
        loop {
            let elem = MeshElement {
                depth,
                idx: idx.clone(),
            };
            if matches!(avg(&elem), Some(a) if a > beta) {
                let mut ancestors_ok = true;
                let mut cur = elem.clone();
                while let Some(p) = cur.parent() {
                    if matches!(avg(&p), Some(a) if a > beta) {
                        ancestors_ok = false;
                        break;
                    }
                    cur = p;
                }
                if ancestors_ok {
                    out.push(elem);
                }
            }
            let mut a = n;
            let done = loop {
                if a == 0 {
                    break true;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < side {
                    break false;
                }
                idx[a] = 0;
            };
            if done {
                break;
            }
        }
    }
    out.sort_by(|a, b| (a.depth, &a.idx).cmp(&(b.depth, &b.idx)));
    Ok(out)
}

/// Pixel-counted area of the part of the window where `pred` holds at cell
/// centers — crude ground truth for set masses.
pub fn pixel_mass<F: Fn(&[f64]) -> bool>(mu: &GridMeasure, pred: F) -> f64 {
    let geom = &mu.geom;
    let mut total = 0.0;
    let mut idx = vec![0usize; geom.dim()];
    loop {
        let flat = geom.flat(&idx);
        if pred(&geom.center(&idx)) {
            total += mu.masses()[flat];
        }
        let mut a = geom.dim();
        let done = loop {
            if a == 0 {
                break true;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < geom.resolution {
                break false;
            }
            idx[a] = 0;
        };
        if done {
            return total;
        }
    }
}

/// Convenience: a grid for tests.
pub fn grid(window: crate::geometry::RectBox, resolution: usize) -> Result<GridGeom> {
    GridGeom::new(window, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BasisFamily, RectBox, SideMode};
    use crate::maximal::{dyadic_maximal, maximal_function};
    use crate::measure::WeightSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fast_rect_kernel_matches_oracle_1d() {
        let w = RectBox::new(vec![-1.0], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..10 {
            let mu = WeightSpec::DyadicRandom {
                seed: trial,
                lo: 0.2,
                hi: 0.8,
            }
            .realize(&w, 32)
            .unwrap();
            let f: Vec<f64> = (0..32).map(|_| rng.gen::<f64>()).collect();
            let fam = BasisFamily::rectangles().with_side_mode(SideMode::All);
            let fast = maximal_function(&mu, &fam, &f).unwrap();
            let num: Vec<f64> = f.iter().zip(mu.masses()).map(|(&v, &m)| v * m).collect();
            let slow = brute_rect_maximal(&mu, &num).unwrap();
            for (a, b) in fast.values.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn fast_rect_kernel_matches_oracle_2d() {
        let w = RectBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..3 {
            let mu = WeightSpec::DyadicRandom {
                seed: 100 + trial,
                lo: 0.3,
                hi: 0.7,
            }
            .realize(&w, 16)
            .unwrap();
            let f: Vec<f64> = (0..16 * 16).map(|_| rng.gen::<f64>()).collect();
            let fam = BasisFamily::rectangles().with_side_mode(SideMode::All);
            let fast = maximal_function(&mu, &fam, &f).unwrap();
            let num: Vec<f64> = f.iter().zip(mu.masses()).map(|(&v, &m)| v * m).collect();
            let slow = brute_rect_maximal(&mu, &num).unwrap();
            for (a, b) in fast.values.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn fast_dyadic_matches_oracle() {
        let w = RectBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mesh = DyadicMesh::new(w.clone(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..5 {
            let mu = WeightSpec::DyadicRandom {
                seed: 50 + trial,
                lo: 0.1,
                hi: 0.9,
            }
            .realize(&w, 16)
            .unwrap();
            let f: Vec<f64> = (0..16 * 16).map(|_| rng.gen::<f64>()).collect();
            let fast = dyadic_maximal(&mu, &mesh, &f).unwrap();
            let slow = brute_dyadic_maximal(&mu, &mesh, &f).unwrap();
            for (a, b) in fast.values.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn cz_oracle_matches_worked_example() {
        let w = RectBox::new(vec![0.0], vec![1.0]).unwrap();
        let mu = WeightSpec::Lebesgue.realize(&w, 64).unwrap();
        let mesh = DyadicMesh::new(w.clone(), 6);
        let e = CellSet::from_box(&mu.geom, &RectBox::new(vec![0.0], vec![0.25]).unwrap());
        let sel = brute_cz(&mu, &mesh, &e, 0.5).unwrap();
        assert_eq!(sel.len(), 1);
        assert_eq!(
            sel[0].rect(&mesh),
            RectBox::new(vec![0.0], vec![0.25]).unwrap()
        );
    }

    #[test]
    fn pixel_mass_of_half_window() {
        let w = RectBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let mu = WeightSpec::Lebesgue.realize(&w, 64).unwrap();
        let m = pixel_mass(&mu, |x| x[0] > 0.0);
        assert!((m - 2.0).abs() < 1e-9, "mass {m}");
    }
}
