//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines).

use std::time::Instant;

use num_complex::Complex64;

use critrel::fixtures::{chebyshev2, cubic_pm, fig1_spec, misiurewicz_i};
use critrel::lattes::{degeneracy_demo, flexible_lattes};
use critrel::moebius::Moebius;
use critrel::num::Pt;
use critrel::poly::Poly;
use critrel::qdiff::{relation_qdiff, relation_qdiff_reduced};
use critrel::ratmap::{
    certify_critical_data_rank, critical_set, critical_set_polynomial,
    ensure_finite_critical_orbits, family_const_chart, monic_poly_chart, rat_affine_chart,
    Direction, RatMap,
};
use critrel::relations::{build_proper, is_minimally_full, CriticalRelation, OrbitModel, TriState};
use critrel::transversality::{
    certify, deficit_identity_check, fd_relation_defect_derivative,
    rank_full_collection_independence, rank_sigma_independence, relation_defect_derivative,
    repelling_variant, RepellingAssignment,
};
use critrel::util::SplitMix64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(i: usize, j: usize, m: usize, n: usize) -> CriticalRelation {
    CriticalRelation::new(i, j, m, n).unwrap()
}

#[test]
fn a01_critical_data_jacobian_has_rank_two_d_minus_two() {
    let fixtures: Vec<(&str, RatMap)> = vec![
        (
            "z + 1/z",
            RatMap::from_reduced(
                Poly::from_reals(&[1.0, 0.0, 1.0]),
                Poly::from_reals(&[0.0, 1.0]),
            )
            .unwrap(),
        ),
        ("z^2 - 2", chebyshev2()),
        ("z^3 - 3z", cubic_pm()),
        (
            "lattes a=2",
            flexible_lattes(c(2.0, 0.0), 1e-8).unwrap().map,
        ),
    ];
    for (name, map) in fixtures {
        let start = Instant::now();
        // the jet data needs finite critical points and values
        let form = ensure_finite_critical_orbits(&map, 1e-12, 1, 3).unwrap();
        let work = form.map;
        let cs = critical_set(&work, 1e-6).unwrap();
        let chart = rat_affine_chart(&work);
        let rank = certify_critical_data_rank(&work, &cs, &chart).unwrap();
        let expected = 2 * work.degree() - 2;
        let elapsed = start.elapsed();
        assert_eq!(rank.decision.rank, expected, "{name}");
        assert!(
            rank.decision.gap >= 1e4,
            "{name}: gap {}",
            rank.decision.gap
        );
        assert!(elapsed.as_secs_f64() < 1.0, "{name}: took {elapsed:?}");
        println!(
            "[a01] PASS {name}: critical-data rank {} = 2d-2, gap {:.3e}, {:?}",
            rank.decision.rank, rank.decision.gap, elapsed
        );
    }
}

#[test]
fn a02_nine_ray_diagram_combinatorics_exact() {
    let mut model = OrbitModel::symbolic(&fig1_spec()).unwrap();
    let built = build_proper(&mut model).unwrap();
    assert_eq!(built.zeta, 3);
    let expect = vec![
        rel(2, 1, 1, 2),
        rel(3, 1, 4, 1),
        rel(4, 6, 3, 0),
        rel(5, 4, 4, 3),
        rel(8, 7, 4, 1),
        rel(9, 8, 1, 1),
    ];
    assert_eq!(built.relations, expect);

    let second = vec![
        rel(2, 1, 1, 2),
        rel(3, 1, 4, 1),
        rel(4, 6, 3, 0),
        rel(5, 6, 4, 0),
        rel(9, 7, 4, 1),
        rel(9, 8, 1, 1),
    ];
    let third = vec![
        rel(2, 1, 2, 3),
        rel(3, 1, 5, 2),
        rel(4, 6, 3, 0),
        rel(5, 6, 4, 0),
        rel(9, 7, 4, 1),
        rel(9, 8, 2, 2),
    ];
    for (label, coll) in [("second", second), ("third", third)] {
        let mut m = OrbitModel::symbolic(&fig1_spec()).unwrap();
        assert_eq!(
            is_minimally_full(&coll, &mut m).unwrap(),
            TriState::True,
            "{label} collection"
        );
    }
    println!(
        "[a02] PASS nine-ray diagram: zeta = 3, constructed collection matches exactly, \
         both alternative collections are minimally full"
    );
}

#[test]
fn a03_certified_rank_one_with_exact_entries() {
    let start = Instant::now();

    let f = chebyshev2();
    let cs = critical_set_polynomial(&f, 1e-6).unwrap();
    let out = certify(
        &f,
        &cs,
        &[rel(1, 1, 3, 2)],
        critrel::ratmap::ChartKind::FamilyConst,
    )
    .unwrap();
    assert!(out.certified);
    assert_eq!(out.report.certified_rank, 1);
    let entry = out.report.matrix.get(0, 0);
    assert!((entry - c(-8.0, 0.0)).norm() <= 1e-6, "entry {entry}");

    let g = misiurewicz_i();
    let gcs = critical_set_polynomial(&g, 1e-6).unwrap();
    let gout = certify(
        &g,
        &gcs,
        &[rel(1, 1, 4, 2)],
        critrel::ratmap::ChartKind::FamilyConst,
    )
    .unwrap();
    assert!(gout.certified);
    assert_eq!(gout.report.certified_rank, 1);
    let gentry = gout.report.matrix.get(0, 0);
    assert!((gentry - c(-4.0, 8.0)).norm() <= 1e-6, "entry {gentry}");

    let chart = family_const_chart(&f).unwrap();
    let assignments = [RepellingAssignment {
        i: 1,
        m: 2,
        periodic_seed: c(2.0, 0.0),
        period: 1,
    }];
    let rep = repelling_variant(&f, &cs, &assignments, &chart.directions, "family").unwrap();
    let rentry = rep.matrix.get(0, 0);
    assert!(
        (rentry - c(-8.0 / 3.0, 0.0)).norm() <= 1e-6,
        "entry {rentry}"
    );
    assert_eq!(rep.certified_rank, 1);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    println!("[a03] PASS entries -8, -4+8i, -8/3 certified at rank 1 within 1e-6 ({elapsed:?})");
}

#[test]
fn a04_relation_choice_matters_at_the_center() {
    // z^2 + t at t = 0: the (2,1) defect has zero derivative, the (1,0)
    // defect has derivative one
    let f = RatMap::polynomial(Poly::from_reals(&[0.0, 0.0, 1.0])).unwrap();
    let cs = critical_set_polynomial(&f, 1e-6).unwrap();
    let chart = family_const_chart(&f).unwrap();
    let dir = &chart.directions[0];
    let d21 = relation_defect_derivative(&f, &cs, &rel(1, 1, 2, 1), dir).unwrap();
    let d10 = relation_defect_derivative(&f, &cs, &rel(1, 1, 1, 0), dir).unwrap();
    assert!(d21.norm() <= 1e-10, "degenerate choice {d21}");
    assert!(
        (d10 - c(1.0, 0.0)).norm() <= 1e-10,
        "transversal choice {d10}"
    );
    println!(
        "[a04] PASS at the center of the quadratic family: d(f^2-f^1) = {:.2e}, d(f^1-0) = 1",
        d21.norm()
    );
}

#[test]
fn a05_full_collections_share_the_certified_rank() {
    for (name, f, r1, r2) in [
        ("z^2 - 2", chebyshev2(), rel(1, 1, 3, 2), rel(1, 1, 4, 3)),
        ("z^2 + i", misiurewicz_i(), rel(1, 1, 4, 2), rel(1, 1, 5, 3)),
    ] {
        let cs = critical_set_polynomial(&f, 1e-6).unwrap();
        let chart = monic_poly_chart(&f).unwrap();
        let equal =
            rank_full_collection_independence(&f, &cs, &[r1], &[r2], &chart.directions).unwrap();
        assert!(equal, "{name}");
        println!("[a05] PASS {name}: equal certified ranks for two full collections");
    }
}

#[test]
fn a06_rank_is_moebius_independent() {
    for (name, f, relations) in [
        ("z^2 - 2", chebyshev2(), vec![rel(1, 1, 3, 2)]),
        ("z^2 + i", misiurewicz_i(), vec![rel(1, 1, 4, 2)]),
        (
            "z^3 - 3z",
            cubic_pm(),
            vec![rel(1, 1, 2, 1), rel(2, 2, 2, 1)],
        ),
    ] {
        let cs = critical_set_polynomial(&f, 1e-6).unwrap();
        let chart = monic_poly_chart(&f).unwrap();
        // marked values of the relations
        let marked: Vec<Complex64> = relations
            .iter()
            .map(|r| {
                let mut v = cs.points[r.i - 1].0.as_finite().unwrap();
                for _ in 0..r.m {
                    v = f.eval(v).unwrap();
                }
                v
            })
            .collect();
        let mut rng = SplitMix64::new(2);
        let mut sigmas = Vec::new();
        while sigmas.len() < 5 {
            let s = Moebius::random(&mut rng);
            // admissible: the pole stays away from every marked value
            match s.pole() {
                Pt::Finite(p) if marked.iter().any(|v| (p - v).norm() < 0.2) => continue,
                _ => sigmas.push(s),
            }
        }
        let same =
            rank_sigma_independence(&f, &cs, &relations, &chart.directions, &sigmas).unwrap();
        assert!(same, "{name}");
        println!("[a06] PASS {name}: rank stable across 5 admissible transformations");
    }
}

#[test]
fn a07_flexible_family_degeneracy_and_invariant_differential() {
    for a in [c(2.0, 0.0), c(2.0, 0.5), c(-1.0, 1.0)] {
        let start = Instant::now();
        // structural validation at 1e-8
        flexible_lattes(a, 1e-8).unwrap();
        let demo = degeneracy_demo(a, 1e-8, 41).unwrap();
        let elapsed = start.elapsed();
        assert!(
            demo.outcome.report.certified_rank < demo.expected_rank,
            "a = {a}: rank {} not deficient",
            demo.outcome.report.certified_rank
        );
        assert!(
            demo.invariance_residual <= 1e-5,
            "a = {a}: residual {:.3e}",
            demo.invariance_residual
        );
        let (m0, m1, m2) = demo.moments;
        let max_moment = m0.norm().max(m1.norm()).max(m2.norm());
        assert!(max_moment <= 1e-6, "a = {a}: moment {max_moment:.3e}");
        assert!(elapsed.as_secs_f64() < 10.0, "a = {a}: took {elapsed:?}");
        println!(
            "[a07] PASS a = {a}: rank {}/{} deficient, invariance residual {:.2e}, \
             moments <= {:.2e} ({elapsed:?})",
            demo.outcome.report.certified_rank,
            demo.expected_rank,
            demo.invariance_residual,
            max_moment
        );
    }
}

#[test]
fn a08_reduced_and_full_differentials_agree_pointwise() {
    let mut cases: Vec<(String, RatMap, Vec<CriticalRelation>)> = vec![
        ("z^2 - 2".into(), chebyshev2(), vec![rel(1, 1, 3, 2)]),
        ("z^2 + i".into(), misiurewicz_i(), vec![rel(1, 1, 4, 2)]),
        (
            "z^3 - 3z".into(),
            cubic_pm(),
            vec![rel(1, 1, 2, 1), rel(2, 2, 2, 1)],
        ),
    ];
    // conjugated flexible family member: all its realized relations with
    // both offsets positive
    let demo = degeneracy_demo(c(2.0, 0.0), 1e-8, 41).unwrap();
    let lattes_rels: Vec<CriticalRelation> = demo
        .relations
        .iter()
        .copied()
        .filter(|r| r.m >= 1 && r.n >= 1)
        .collect();
    cases.push((
        "lattes a=2 (conjugated)".into(),
        demo.map.clone(),
        lattes_rels,
    ));

    for (name, f, rels) in cases {
        let cs = if f.is_polynomial() {
            critical_set_polynomial(&f, 1e-6).unwrap()
        } else {
            critical_set(&f, 1e-6).unwrap()
        };
        let crit: Vec<Pt> = cs.points.iter().map(|&(p, _)| p).collect();
        let mut rng = SplitMix64::new(11);
        for r in &rels {
            let full = relation_qdiff(&f, &crit, r).unwrap();
            let reduced = relation_qdiff_reduced(&f, &crit, r, 1e-6).unwrap();
            for _ in 0..10 {
                let z = c(rng.range(8.0, 14.0), rng.range(-6.0, 6.0));
                let a = full.eval(z).unwrap();
                let b = reduced.eval(z).unwrap();
                assert!(
                    (a - b).norm() <= 1e-8 * a.norm().max(1e-12),
                    "{name} {r}: {a} vs {b}"
                );
            }
        }
        println!("[a08] PASS {name}: reduced form matches pointwise to 1e-8 relative");
    }
}

#[test]
fn a09_pushforward_deficit_identity() {
    for (name, f, relation) in [
        ("z^2 - 2", chebyshev2(), rel(1, 1, 3, 2)),
        ("z^2 + i", misiurewicz_i(), rel(1, 1, 4, 2)),
    ] {
        let mut rng = SplitMix64::new(5);
        let samples: Vec<Complex64> = (0..10)
            .map(|_| c(rng.range(3.5, 6.5), rng.range(-3.0, 3.0)))
            .collect();
        let worst = deficit_identity_check(&f, &relation, &samples).unwrap();
        assert!(worst <= 1e-5, "{name}: mismatch {worst:.3e}");
        println!("[a09] PASS {name}: deficit identity mismatch {worst:.2e} <= 1e-5");
    }
}

#[test]
fn a10_closed_form_derivative_matches_finite_differences() {
    let fixtures: Vec<(RatMap, CriticalRelation)> = vec![
        (chebyshev2(), rel(1, 1, 3, 2)),
        (misiurewicz_i(), rel(1, 1, 4, 2)),
        (cubic_pm(), rel(1, 1, 2, 1)),
        (cubic_pm(), rel(2, 2, 2, 1)),
    ];
    let mut rng = SplitMix64::new(99);
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    while checked < 50 {
        let (f, relation) = &fixtures[(rng.next_u64() % fixtures.len() as u64) as usize];
        let cs = critical_set_polynomial(f, 1e-6).unwrap();
        let chart = monic_poly_chart(f).unwrap();
        let weights: Vec<Complex64> = chart
            .directions
            .iter()
            .map(|_| c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)))
            .collect();
        let dir = Direction::combine(&chart.directions, &weights);
        let exact = relation_defect_derivative(f, &cs, relation, &dir).unwrap();
        let fd = fd_relation_defect_derivative(f, &cs, relation, &dir, 1e-5).unwrap();
        let err = (exact - fd).norm() / exact.norm().max(1.0);
        worst = worst.max(err);
        assert!(err <= 1e-7, "pair {checked}: relative error {err:.3e}");
        checked += 1;
    }
    println!(
        "[a10] PASS 50 random (fixture, direction) pairs: closed form vs finite \
         differences, worst relative error {worst:.2e} <= 1e-7"
    );
}
