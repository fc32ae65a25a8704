//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use geomax::config::disk_body;
use geomax::decomposition::{
    annulus_mass, copy_parameters, cz_decompose, doubling_depth, halo_cover_steps,
    homothetic_copies,
};
use geomax::geometry::{
    associated_rectangle, BasisFamily, ConvexBody, DyadicMesh, RectBox, SideMode,
};
use geomax::grid::CellSet;
use geomax::maximal::{comparability_check, dyadic_maximal, halo_iterate, superlevel};
use geomax::measure::{estimate_ap, estimate_doubling, GridMeasure, WeightSpec};
use geomax::reference::brute_cz;
use geomax::tauberian::{
    differentiation_check, p_o_from_tauberian, restricted_weak_type_check, tauberian_constant,
    SetGenerator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interval(lo: f64, hi: f64) -> RectBox {
    RectBox::new(vec![lo], vec![hi]).unwrap()
}

fn square(lo: f64, hi: f64) -> RectBox {
    RectBox::new(vec![lo, lo], vec![hi, hi]).unwrap()
}

fn pass(n: u32, what: &str) {
    println!("criterion {n:02}: PASS — {what}");
}

#[test]
fn criterion_01_constant_formulas_exact() {
    assert_eq!(halo_cover_steps(0.25, 0.5, 2.0).unwrap(), 3);
    assert_eq!(halo_cover_steps(0.125, 0.5, 4.0).unwrap(), 7);
    assert_eq!(doubling_depth(0.5, 8.0).unwrap(), 2);
    assert_eq!(geomax::decomposition::catchup_steps(0.1, 0.5).unwrap(), 3);
    let table = vec![(3, 0.5), (4, 0.7), (5, 0.9), (6, 0.95)];
    assert_eq!(copy_parameters(0.5, 0.75, 0.5, &table).unwrap(), (5, 2));
    pass(1, "constant formulas integer-exact");
}

#[test]
fn criterion_02_halo_lengths_1d() {
    // Lengths of the halo iterates of [0,1] at level 1/2 grow by the factor
    // 2/beta - 1 = 3 per step, measured against the discretized seed length
    // within +-2 cells.
    let w = interval(-20.0, 21.0);
    let mu = WeightSpec::Lebesgue.realize(&w, 4096).unwrap();
    let cell = mu.geom.cell_width(0);
    let family = BasisFamily::rectangles();
    let e = CellSet::from_box(&mu.geom, &interval(0.0, 1.0));
    let len0 = e.count() as f64 * cell;
    for k in 1..=3u32 {
        let h = halo_iterate(&mu, &family, &e, 0.5, k).unwrap();
        assert!(!h.truncated);
        let len = h.set.count() as f64 * cell;
        let expected = 3f64.powi(k as i32) * len0;
        assert!(
            (len - expected).abs() <= 2.0 * cell + 1e-12,
            "k={k}: length {len} vs {expected} (cell {cell})"
        );
    }
    pass(2, "1D halo lengths triple per iterate (±2 cells)");
}

#[test]
fn criterion_03_tauberian_constant_1d() {
    let w = interval(-8.0, 8.0);
    let mu = WeightSpec::Lebesgue.realize(&w, 4096).unwrap();
    let fam = BasisFamily::rectangles();
    let single =
        tauberian_constant(&mu, &mu, &fam, 0.5, &SetGenerator::SingleBoxes, 60, 101).unwrap();
    assert!(
        (single.constant_lower - 3.0).abs() <= 0.02,
        "single-interval constant {}",
        single.constant_lower
    );
    let mixed = tauberian_constant(
        &mu,
        &mu,
        &fam,
        0.5,
        &SetGenerator::ScatteredBoxes { count: 4 },
        40,
        102,
    )
    .unwrap();
    assert!(
        mixed.constant_lower <= 4.0 + 1e-9,
        "mixed constant {}",
        mixed.constant_lower
    );
    pass(3, "1D Tauberian constant 3.00±0.02 (single), ≤4.0 (mixed)");
}

#[test]
fn criterion_04_intermediate_halo_inequality() {
    // For a rectangle R with 0 < mu(E∩R)/mu(R) < beta, the (N+2)-fold halo
    // at level beta satisfies mu(R ∩ H^{N+2}(E)) >= mu(E∩R)/beta, with N the
    // doubling depth of (beta, doubling constant).
    let beta = 0.5;
    let w = square(0.0, 1.0);
    let fam = BasisFamily::rectangles().with_side_mode(SideMode::All);
    let weights = [
        WeightSpec::Lebesgue,
        WeightSpec::Power {
            exponents: vec![0.5, 0.5],
        },
        WeightSpec::Power {
            exponents: vec![1.0, 1.0],
        },
    ];
    let mut done = 0u32;
    for (wi, spec) in weights.iter().enumerate() {
        let mu = spec.realize(&w, 64).unwrap();
        // Safety factor on the measured doubling lower bound.
        let delta = estimate_doubling(&mu, &fam, 1000, 5).unwrap().estimate * 1.1;
        let n_depth = doubling_depth(beta, delta.max(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(400 + wi as u64);
        let mut trials = 0;
        while trials < 34 {
            // Random grid box R in the central region and E a random box
            // overlapping it.
            let r_lo: Vec<f64> = (0..2).map(|_| 0.2 + 0.3 * rng.gen::<f64>()).collect();
            let r_side = 0.15 + 0.25 * rng.gen::<f64>();
            let r = RectBox::new(
                r_lo.clone(),
                r_lo.iter().map(|&l| (l + r_side).min(0.95)).collect(),
            )
            .unwrap();
            let e_lo: Vec<f64> = (0..2)
                .map(|a| r_lo[a] + 0.6 * r_side * rng.gen::<f64>())
                .collect();
            let e_side = 0.2 * r_side + 0.3 * r_side * rng.gen::<f64>();
            let e_box = RectBox::new(
                e_lo.clone(),
                e_lo.iter().map(|&l| (l + e_side).min(0.95)).collect(),
            )
            .unwrap();
            let e = CellSet::from_box(&mu.geom, &e_box);
            let r_set = CellSet::from_box(&mu.geom, &r);
            let e_in_r = mu.integrate_cells(&e.intersect(&r_set));
            let r_mass = mu.integrate_cells(&r_set);
            if !(e_in_r > 0.0) || e_in_r / r_mass >= beta * 0.95 {
                continue;
            }
            trials += 1;
            let h = halo_iterate(&mu, &fam, &e, beta, n_depth + 2).unwrap();
            let lhs = mu.integrate_cells(&h.set.intersect(&r_set));
            let rhs = e_in_r / beta;
            assert!(
                lhs >= rhs * (1.0 - 1e-9),
                "weight {wi}, trial {trials}: {lhs} < {rhs}"
            );
            done += 1;
        }
    }
    assert!(done >= 100, "only {done} instances");
    pass(4, "halo mass gain inequality on 100 weighted 2D instances");
}

#[test]
fn criterion_05_rectangle_swallowed_by_halo() {
    // If mu(E∩R)/mu(R) = alpha in (0, beta), then R is contained in the
    // k-fold halo of E with k = halo_cover_steps(alpha, beta, delta).
    let beta = 0.5;
    let mut done = 0u32;
    // 1D instances.
    {
        let w = interval(-8.0, 8.0);
        let fam = BasisFamily::rectangles().with_side_mode(SideMode::All);
        for (i, spec) in [
            WeightSpec::Lebesgue,
            WeightSpec::Power {
                exponents: vec![0.5],
            },
            WeightSpec::Power {
                exponents: vec![1.0],
            },
        ]
        .iter()
        .enumerate()
        {
            let mu = spec.realize(&w, 2048).unwrap();
            let delta = estimate_doubling(&mu, &fam, 2000, 9).unwrap().estimate * 1.1;
            let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
            for _ in 0..5 {
                let r_lo = -1.5 + 2.0 * rng.gen::<f64>();
                let r_len = 0.5 + 1.0 * rng.gen::<f64>();
                let r = interval(r_lo, r_lo + r_len);
                check_swallow(&mu, &fam, &r, beta, delta);
                done += 1;
            }
        }
    }
    // 2D instances.
    {
        let w = square(-3.0, 5.0);
        let fam = BasisFamily::rectangles().with_side_mode(SideMode::All);
        let mu = WeightSpec::Lebesgue.realize(&w, 64).unwrap();
        let delta = estimate_doubling(&mu, &fam, 2000, 11).unwrap().estimate * 1.1;
        let mut rng = ChaCha8Rng::seed_from_u64(600);
        for _ in 0..10 {
            let r_lo: Vec<f64> = (0..2).map(|_| 0.2 + 0.6 * rng.gen::<f64>()).collect();
            let r_side = 0.4 + 0.5 * rng.gen::<f64>();
            let r = RectBox::new(r_lo.clone(), r_lo.iter().map(|&l| l + r_side).collect()).unwrap();
            check_swallow(&mu, &fam, &r, beta, delta);
            done += 1;
        }
    }
    assert!(done >= 25, "only {done} instances");
    pass(5, "rectangles swallowed by the prescribed halo iterate");
}

// E = a left slice of R along axis 0, with the slice width bisected so the
// mu-density alpha = mu(E∩R)/mu(R) lands strictly below beta for any weight.
fn check_swallow(mu: &GridMeasure, fam: &BasisFamily, r: &RectBox, beta: f64, delta: f64) {
    let r_set = CellSet::from_box(&mu.geom, r);
    let r_mass = mu.integrate_cells(&r_set);
    let slice = |frac: f64| {
        let mut hi = r.hi.clone();
        hi[0] = r.lo[0] + frac * (r.hi[0] - r.lo[0]);
        CellSet::from_box(&mu.geom, &RectBox::new(r.lo.clone(), hi).unwrap())
    };
    let mut lo_f = 0.0;
    let mut hi_f = 1.0;
    let mut e = slice(0.3);
    let mut alpha = mu.integrate_cells(&e.intersect(&r_set)) / r_mass;
    let mut frac = 0.3;
    for _ in 0..40 {
        if alpha > 0.0 && alpha <= 0.45 {
            break;
        }
        if alpha > 0.45 {
            hi_f = frac;
        } else {
            lo_f = frac;
        }
        frac = 0.5 * (lo_f + hi_f);
        e = slice(frac);
        alpha = mu.integrate_cells(&e.intersect(&r_set)) / r_mass;
    }
    assert!(alpha > 0.0 && alpha < beta, "alpha {alpha}");
    let k = halo_cover_steps(alpha, beta, delta.max(1.0)).unwrap();
    let h = halo_iterate(mu, fam, &e, beta, k).unwrap();
    assert!(
        r_set.is_subset_of(&h.set),
        "R not inside halo (alpha {alpha}, k {k})"
    );
}

#[test]
fn criterion_06_cz_oracle_equivalence() {
    let beta = 0.5;
    let mut done = 0u32;
    let mut seed = 0u64;
    while done < 100 {
        seed += 1;
        let (dim, res) = if done % 5 < 3 { (1, 64) } else { (2, 32) };
        let w = RectBox::new(vec![0.0; dim], vec![1.0; dim]).unwrap();
        let mu = WeightSpec::DyadicRandom {
            seed,
            lo: 0.25,
            hi: 0.75,
        }
        .realize(&w, res)
        .unwrap();
        let mesh = DyadicMesh::new(w.clone(), res.trailing_zeros());
        let e = SetGenerator::SingleBoxes.generate(&w, res, seed, 0);
        if !(mu.integrate_cells(&e) > 0.0) {
            continue;
        }
        let fast = match cz_decompose(&mu, &mesh, &e, beta) {
            Ok(s) => s,
            Err(_) => continue, // root too heavy for this draw
        };
        let slow = brute_cz(&mu, &mesh, &e, beta).unwrap();
        assert_eq!(fast.selected, slow, "seed {seed}");
        done += 1;
    }
    pass(
        6,
        "stopping-time selection equals the exhaustive oracle (100 instances)",
    );
}

#[test]
fn criterion_07_dyadic_weak_1_1() {
    let mut done = 0u32;
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    for seed in 0..100u64 {
        let dim = if seed % 2 == 0 { 1 } else { 2 };
        let res = if dim == 1 { 256 } else { 64 };
        let w = RectBox::new(vec![0.0; dim], vec![1.0; dim]).unwrap();
        // Extreme multipliers: strongly non-doubling draws included.
        let mu = WeightSpec::DyadicRandom {
            seed: 7000 + seed,
            lo: 0.02,
            hi: 0.98,
        }
        .realize(&w, res)
        .unwrap();
        let mesh = DyadicMesh::new(w.clone(), res.trailing_zeros());
        let f: Vec<f64> = (0..mu.geom.len()).map(|_| rng.gen::<f64>() * 3.0).collect();
        let field = dyadic_maximal(&mu, &mesh, &f).unwrap();
        let integral: f64 = f.iter().zip(mu.masses()).map(|(&v, &m)| v * m).sum();
        for &lambda in &[0.25, 0.5, 1.0, 2.0] {
            let mass = mu.integrate_cells(&superlevel(&field, lambda, true));
            assert!(
                mass <= integral / lambda * (1.0 + 1e-9),
                "seed {seed}, lambda {lambda}: {mass} > {}",
                integral / lambda
            );
        }
        done += 1;
    }
    assert_eq!(done, 100);
    pass(
        7,
        "dyadic weak (1,1) bound on 100 instances incl. extreme multipliers",
    );
}

// Near-round random polygons: the axis-aligned associated rectangle is only
// guaranteed to sit inside n^{3/2}·body when the inscribed ellipse is close
// to a ball (for eccentric tilted ellipses the bounding-box corners can land
// far outside any fixed dilate, so the chain is checked in that regime).
fn random_polygon(rng: &mut ChaCha8Rng) -> ConvexBody {
    let k = 8 + rng.gen_range(0..5);
    let cx = -1.0 + 2.0 * rng.gen::<f64>();
    let cy = -1.0 + 2.0 * rng.gen::<f64>();
    let scale = 0.5 + 1.5 * rng.gen::<f64>();
    let verts: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.3 * rng.gen::<f64>()) / k as f64;
            let r = scale * (0.96 + 0.08 * rng.gen::<f64>());
            vec![cx + r * t.cos(), cy + r * t.sin()]
        })
        .collect();
    ConvexBody::new(verts).unwrap()
}

#[test]
fn criterion_08_john_and_associated_rectangle_chains() {
    // Inscribed ellipse chain E ⊂ B ⊂ nE and rectangle chain B ⊂ R_B ⊂ n^{3/2}B.
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    for i in 0..200 {
        let body = random_polygon(&mut rng);
        let tol = 1e-6 * body.diameter();
        let ell = body.john_ellipsoid().unwrap().clone();
        // E ⊂ B: boundary samples of the ellipse lie in the body.
        for p in ell.boundary_samples(64) {
            assert!(body.contains(&p, tol), "instance {i}: ellipse leaves body");
        }
        // B ⊂ nE: every vertex lies in the dilated ellipse.
        let big = ell.dilate(2.0);
        for v in body.vertices() {
            assert!(big.contains(v, 1e-6), "instance {i}: vertex outside 2E");
        }
        // B ⊂ R_B: vertices inside the associated rectangle.
        let r = associated_rectangle(&body).unwrap();
        for v in body.vertices() {
            assert!(
                r.contains_closed(v, tol),
                "instance {i}: vertex outside R_B"
            );
        }
        // R_B ⊂ n^{3/2}B: rectangle corners inside the dilated body up to one
        // cell of a 64-cell raster over its frame (the chain is tight: for a
        // disk the corners land exactly on the boundary of the dilate).
        let dil = body.dilate_about_john(2f64.powf(1.5)).unwrap();
        let frame = dil.bounding_box();
        let cell = (0..2).map(|a| frame.side(a)).fold(0.0, f64::max) / 64.0;
        for c in r.corners() {
            assert!(
                dil.contains(&c, cell),
                "instance {i}: R_B corner outside n^(3/2)B"
            );
        }
    }
    // Unit square exact to 1e-6: R_B = [-0.5, 1.5]^2.
    let sq = ConvexBody::from_box(&square(0.0, 1.0));
    let r = associated_rectangle(&sq).unwrap();
    for a in 0..2 {
        assert!((r.lo[a] + 0.5).abs() < 1e-6 && (r.hi[a] - 1.5).abs() < 1e-6);
    }
    pass(
        8,
        "John/associated-rectangle chains on 200 polygons + unit square",
    );
}

#[test]
fn criterion_09_doubling_estimates() {
    // Lebesgue over 2D rectangles: exactly 2^n = 4.
    let mu2 = WeightSpec::Lebesgue
        .realize(&square(-1.0, 1.0), 256)
        .unwrap();
    let fam = BasisFamily::rectangles();
    let d = estimate_doubling(&mu2, &fam, 3000, 90).unwrap();
    assert!(
        (d.estimate - 4.0).abs() <= 0.04,
        "Lebesgue 2D {}",
        d.estimate
    );

    // |x| weight over intervals: supremum 3 + sqrt(5) (attained by intervals
    // anchored at one endpoint straddling the origin), witness near 0.
    let mu = WeightSpec::Power {
        exponents: vec![1.0],
    }
    .realize(&interval(-4.0, 4.0), 4096)
    .unwrap();
    let d = estimate_doubling(&mu, &fam, 20000, 91).unwrap();
    let expected = 3.0 + 5f64.sqrt();
    assert!(
        (d.estimate - expected).abs() <= 0.02 * expected,
        "|x| doubling {}",
        d.estimate
    );
    let w = d.witness.unwrap();
    let cell = mu.geom.cell_width(0);
    assert!(
        w.base.lo[0] <= cell && w.base.hi[0] >= -cell,
        "witness {:?} not adjacent to the origin",
        w.base
    );

    // Gaussian: estimate grows without bound with the window (non-doubling).
    let small = estimate_doubling(
        &WeightSpec::Gaussian
            .realize(&interval(-1.0, 1.0), 4096)
            .unwrap(),
        &fam,
        30000,
        92,
    )
    .unwrap();
    let large = estimate_doubling(
        &WeightSpec::Gaussian
            .realize(&interval(-4.0, 4.0), 4096)
            .unwrap(),
        &fam,
        30000,
        92,
    )
    .unwrap();
    assert!(
        large.estimate > 10.0 * small.estimate,
        "Gaussian: L=8 {} vs L=2 {}",
        large.estimate,
        small.estimate
    );
    pass(
        9,
        "doubling estimates: 4.00 (Lebesgue 2D), 3+√5 (|x|), Gaussian blow-up",
    );
}

#[test]
fn criterion_10_ap_estimates() {
    let w = interval(-2.0, 2.0);
    let one = estimate_ap(&WeightSpec::Lebesgue, 2.0, &w, 1024, 500, 4).unwrap();
    assert!(
        (one.estimate - 1.0).abs() < 1e-12,
        "[1]_A2 = {}",
        one.estimate
    );
    // A_2 constant of |x|^{1/2} over intervals: exactly 3/2, attained on
    // asymmetric straddling intervals.
    let rep = estimate_ap(
        &WeightSpec::Power {
            exponents: vec![0.5],
        },
        2.0,
        &interval(-4.0, 4.0),
        4096,
        5000,
        41,
    )
    .unwrap();
    assert!(
        (rep.estimate - 1.5).abs() <= 0.03,
        "[|x|^1/2]_A2 = {}",
        rep.estimate
    );
    pass(10, "A_p estimates: [1]=1 exact, [|x|^½]_{A_2} = 3/2 ± 2%");
}

#[test]
fn criterion_11_annulus_mass() {
    // Geometry check: K = [1/4,3/4]^2, eps = 1/16 → perimeter·eps + pi·eps^2.
    let w2 = square(0.0, 1.0);
    let mu2 = WeightSpec::Lebesgue.realize(&w2, 512).unwrap();
    let k2 = ConvexBody::from_box(&RectBox::new(vec![0.25, 0.25], vec![0.75, 0.75]).unwrap());
    let rep = annulus_mass(&mu2, &k2, &w2, 1.0 / 16.0, 4.0).unwrap();
    let expected = 0.1373;
    assert!(
        (rep.mass - expected).abs() <= 0.1 * expected,
        "annulus mass {}",
        rep.mass
    );
    // Decay bound in the small-eps regime for doubling 1D specimens.
    let w1 = interval(0.0, 1.0);
    let k1 = ConvexBody::from_box(&interval(0.25, 0.75));
    for spec in [
        WeightSpec::Lebesgue,
        WeightSpec::Power {
            exponents: vec![0.5],
        },
        WeightSpec::Power {
            exponents: vec![1.0],
        },
    ] {
        let mu = spec.realize(&w1, 4096).unwrap();
        let fam = BasisFamily::rectangles();
        let delta = estimate_doubling(&mu, &fam, 2000, 3).unwrap().estimate;
        for e in 8..=10u32 {
            let rep = annulus_mass(&mu, &k1, &w1, (-(e as f64)).exp2(), delta.max(2.0)).unwrap();
            // The decay-regime flag is strict (eps < 2^-8), so it only
            // applies past the first exponent; the bound must hold on all.
            assert_eq!(rep.within_regime, e > 8);
            assert!(rep.ok, "{spec:?} eps 2^-{e}: {} > {}", rep.mass, rep.bound);
        }
    }
    pass(
        11,
        "annulus mass 0.1373±10% and decay bound for ε ∈ {2^-8..2^-10}",
    );
}

#[test]
fn criterion_12_homothetic_copies() {
    let w = square(0.0, 1.0);
    let rho = 1.0 / 16.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1200);
    for i in 0..20u64 {
        let spec = if i < 12 {
            WeightSpec::Lebesgue
        } else {
            WeightSpec::DyadicRandom {
                seed: i,
                lo: 0.45,
                hi: 0.55,
            }
        };
        let mu = spec.realize(&w, 512).unwrap();
        let lo: Vec<f64> = (0..2).map(|_| 0.15 + 0.15 * rng.gen::<f64>()).collect();
        let side = 0.45 + 0.15 * rng.gen::<f64>();
        let k = ConvexBody::from_box(
            &RectBox::new(lo.clone(), lo.iter().map(|&l| l + side).collect()).unwrap(),
        );
        let rep = homothetic_copies(&mu, &k, &w, 4, 2, rho).unwrap();
        assert_eq!(rep.overlap_cells, 0, "instance {i}");
        assert!(
            rep.mass >= rep.lower_bound,
            "instance {i}: {} < {}",
            rep.mass,
            rep.lower_bound
        );
    }
    pass(
        12,
        "homothetic copies disjoint with the mass lower bound (20 instances)",
    );
}

#[test]
fn criterion_13_constant_to_weak_type_round_trip() {
    // For each measure/basis pair: measure the level-set constant, derive
    // p0, and verify the restricted weak-type envelope on 200 sets × 6 λ.
    let gamma = 0.5;
    let lambdas: Vec<f64> = (1..=6).map(|k| (-(k as f64)).exp2()).collect();
    let gen = SetGenerator::ScatteredBoxes { count: 3 };

    struct Pair {
        name: &'static str,
        mu: GridMeasure,
        fam: BasisFamily,
    }
    let mut pairs = Vec::new();
    let w1 = interval(-4.0, 4.0);
    for (name, spec) in [
        ("lebesgue/intervals", WeightSpec::Lebesgue),
        (
            "power/intervals",
            WeightSpec::Power {
                exponents: vec![0.5],
            },
        ),
        (
            "dyadic-random/intervals",
            WeightSpec::DyadicRandom {
                seed: 13,
                lo: 0.3,
                hi: 0.7,
            },
        ),
    ] {
        pairs.push(Pair {
            name,
            mu: spec.realize(&w1, 1024).unwrap(),
            fam: BasisFamily::rectangles(),
        });
    }
    // 2D rectangle pairs run with dyadic side lengths: the full side
    // enumeration at this resolution is ~700x slower per field and adds
    // nothing to the level-set statistics being measured.
    let w2 = square(-2.0, 2.0);
    pairs.push(Pair {
        name: "lebesgue/rectangles",
        mu: WeightSpec::Lebesgue.realize(&w2, 128).unwrap(),
        fam: BasisFamily::rectangles().with_side_mode(SideMode::Dyadic),
    });
    pairs.push(Pair {
        name: "power/rectangles",
        mu: WeightSpec::Power {
            exponents: vec![0.5, 0.5],
        }
        .realize(&w2, 128)
        .unwrap(),
        fam: BasisFamily::rectangles().with_side_mode(SideMode::Dyadic),
    });
    let disk = disk_body(32);
    pairs.push(Pair {
        name: "lebesgue/disks",
        mu: WeightSpec::Lebesgue.realize(&w2, 64).unwrap(),
        fam: BasisFamily::convex(disk.clone(), vec![0.5, 0.25, 0.125], 1).unwrap(),
    });

    for p in pairs {
        let c = tauberian_constant(&p.mu, &p.mu, &p.fam, gamma, &gen, 200, 1300)
            .unwrap()
            .constant_lower
            .max(1.0);
        let delta = estimate_doubling(&p.mu, &p.fam, 500, 1301)
            .unwrap()
            .estimate
            .max(1.0);
        let p_o = p_o_from_tauberian(c, gamma, delta).unwrap();
        let rep =
            restricted_weak_type_check(&p.mu, &p.mu, &p.fam, p_o, c, &lambdas, &gen, 200, 1300)
                .unwrap();
        assert!(
            rep.pass(),
            "{}: {} violations (c={c}, p0={p_o})",
            p.name,
            rep.violations.len()
        );
    }
    pass(
        13,
        "measured constant ⇒ p₀ ⇒ weak-type envelope on all suite pairs",
    );
}

#[test]
fn criterion_14_comparability_disks_squares() {
    let w = square(-1.0, 1.0);
    let mu = WeightSpec::Lebesgue.realize(&w, 64).unwrap();
    // Rich disk sampling so the sampled supremum is near the true one. The
    // grid reaches radius 2 because dominating a square of side s anywhere
    // in the window takes a (possibly overhanging) disk of radius ~0.71·s.
    let mut scales = Vec::new();
    let mut s = 2.0f64;
    while s >= 2.5 * mu.geom.cell_width(0) {
        scales.push(s);
        s /= 2f64.sqrt();
    }
    let disks = BasisFamily::convex(disk_body(64), scales, 1).unwrap();
    let cubes = BasisFamily::cubes().with_side_mode(SideMode::All);
    // Test input: indicator of a box comparable to the smallest disk.
    let e = CellSet::from_box(
        &mu.geom,
        &RectBox::new(vec![-0.4, -0.2], vec![0.3, 0.35]).unwrap(),
    );
    let f: Vec<f64> = e.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let rep = comparability_check(&mu, &disks, &cubes, &f, 4.0, 0.05).unwrap();
    assert_eq!(rep.c_n, 16.0);
    assert!(
        rep.pass,
        "max_upper {} max_lower {}",
        rep.max_upper, rep.max_lower
    );
    pass(
        14,
        "disk/square maximal functions comparable within c₂ = 16",
    );
}

#[test]
fn criterion_15_differentiation_checkerboard() {
    // 1D at high resolution: exceptional mass falls below 1%.
    let w = interval(0.0, 1.0);
    let mu = WeightSpec::Power {
        exponents: vec![0.5],
    }
    .realize(&w, 4096)
    .unwrap();
    let f = geomax::experiments::checkerboard(&mu.geom, 3);
    let fam = BasisFamily::rectangles();
    let rep = differentiation_check(&mu, &mu, &fam, &f, &[2, 4, 6, 8, 10, 11]).unwrap();
    assert!(rep.pass, "1D masses {:?}", rep.exceptional_mass);
    assert!(!rep.truncated);
    // 2D: the exceptional mass is nonincreasing down to the grid limit.
    let w2 = square(0.0, 1.0);
    let mu2 = WeightSpec::Power {
        exponents: vec![0.5, 0.5],
    }
    .realize(&w2, 256)
    .unwrap();
    let f2 = geomax::experiments::checkerboard(&mu2.geom, 3);
    let fam2 = BasisFamily::rectangles().with_side_mode(SideMode::Dyadic);
    let rep2 = differentiation_check(&mu2, &mu2, &fam2, &f2, &[2, 3, 4, 5, 6, 7]).unwrap();
    for pair in rep2.exceptional_mass.windows(2) {
        assert!(
            pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-12,
            "{:?}",
            rep2.exceptional_mass
        );
    }
    pass(
        15,
        "checkerboard differentiation: exceptional mass shrinks below 1%",
    );
}
