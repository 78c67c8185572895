//! The flexible degree-4 family: the duplication map of the Legendre curve
//! y^2 = x(x-1)(x-a). Each critical point falls onto {0, 1, a} in one step
//! and onto the repelling fixed point at infinity in two, every critical
//! relation survives perturbation of a, and the relation Jacobian is rank
//! deficient with an invariant quadratic differential spanning the defect.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moebius::moebius_conjugate;
use crate::num::Pt;
use crate::poly::Poly;
use crate::qdiff::{invariance_residual, sample_points, QuadDiff};
use crate::ratmap::{
    critical_set, ensure_finite_critical_orbits, fixed_point_multiplier, Direction, RatMap,
};
use crate::relations::{build_proper, CriticalRelation, OrbitModel};
use crate::transversality::{
    certify, kernel_qdiff, left_kernel_residual, relation_defect_derivative, CertifyOutcome,
};
use crate::util::ROOT_CLUSTER_TOL;

/// A validated member of the family.
#[derive(Clone, Debug)]
pub struct LattesMap {
    pub a: Complex64,
    pub map: RatMap,
}

fn family_pair(a: Complex64) -> (Poly, Poly) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    // (z^2 - a)^2 = z^4 - 2a z^2 + a^2
    let num = Poly::new(vec![a * a, zero, -2.0 * a, zero, one]);
    // 4 z (z - 1)(z - a) = 4 z^3 - 4 (1 + a) z^2 + 4 a z
    let den = Poly::new(vec![
        zero,
        4.0 * a,
        -4.0 * (one + a),
        Complex64::new(4.0, 0.0),
    ]);
    (num, den)
}

/// Builds the duplication map f_a(z) = (z^2 - a)^2 / (4 z (z - 1)(z - a))
/// and validates its structure at runtime: degree 4 with six simple
/// critical points, critical values inside {0, 1, a}, those points mapped
/// onto the fixed point at infinity, and that fixed point repelling.
pub fn flexible_lattes(a: Complex64, tol: f64) -> Result<LattesMap> {
    let one = Complex64::new(1.0, 0.0);
    if a.norm() < 0.05 || (a - one).norm() < 0.05 {
        return Err(Error::InvalidInput(
            "the family parameter must stay away from 0 and 1".into(),
        ));
    }
    let (num, den) = family_pair(a);
    let map = RatMap::new(num, den, 1e-12)?;
    if map.degree() != 4 {
        return Err(Error::ValidationFailure(format!(
            "expected degree 4, got {}",
            map.degree()
        )));
    }

    let cs = critical_set(&map, ROOT_CLUSTER_TOL)?;
    let total: usize = cs.points.iter().map(|&(_, m)| m).sum();
    if total != 6 {
        return Err(Error::ValidationFailure(format!(
            "critical multiplicities sum to {total}, expected 6"
        )));
    }
    if cs.points.iter().any(|(p, _)| p.is_infinite()) {
        return Err(Error::ValidationFailure(
            "infinity must not be critical".into(),
        ));
    }

    // critical values fall in {0, 1, a}; the next step lands on infinity
    let marked = [Pt::finite(0.0, 0.0), Pt::Finite(one), Pt::Finite(a)];
    for (c, _) in &cs.points {
        let v = map.eval_pt(*c);
        let near = marked.iter().any(|m| m.coincide_dist(&v) <= tol);
        if !near {
            return Err(Error::ValidationFailure(format!(
                "critical value {v} escapes the marked set"
            )));
        }
        let second = map.eval_pt(v);
        if !second.is_infinite() {
            return Err(Error::ValidationFailure(format!(
                "second iterate {second} misses infinity"
            )));
        }
    }
    if !map.eval_pt(Pt::Infinity).is_infinite() {
        return Err(Error::ValidationFailure("infinity must be fixed".into()));
    }
    let multiplier = fixed_point_multiplier(&map, Pt::Infinity, 1e-12)?;
    if multiplier.norm() <= 1.0 + 1e-9 {
        return Err(Error::ValidationFailure(format!(
            "fixed point at infinity is not repelling (multiplier {multiplier})"
        )));
    }

    Ok(LattesMap { a, map })
}

/// Everything the degeneracy demonstration produces.
#[derive(Clone, Debug)]
pub struct DegeneracyReport {
    pub a: Complex64,
    /// Map conjugated so all critical orbits are finite.
    pub map: RatMap,
    pub relations: Vec<CriticalRelation>,
    pub expected_rank: usize,
    pub outcome: CertifyOutcome,
    pub kernel_vector: Vec<Complex64>,
    pub kernel_residual: f64,
    pub qdiff: QuadDiff,
    pub invariance_residual: f64,
    pub moments: (Complex64, Complex64, Complex64),
    /// Whether the coefficient velocity of the family parameter lies in the
    /// kernel of the relation Jacobian.
    pub family_direction_in_kernel: bool,
}

/// Runs the full degeneracy demonstration for the parameter `a`: builds the
/// map, moves the critical orbits off infinity, organizes the proper
/// collection, certifies the Jacobian (expecting a rank defect), extracts a
/// kernel vector and its invariant differential, and measures the
/// push-forward residual and the integrability moments.
pub fn degeneracy_demo(a: Complex64, tol: f64, seed: u64) -> Result<DegeneracyReport> {
    let lattes = flexible_lattes(a, tol)?;
    let form = ensure_finite_critical_orbits(&lattes.map, 1e-12, 12, seed)?;
    let g = form.map.clone();
    let cs = critical_set(&g, ROOT_CLUSTER_TOL)?;

    let mut model = OrbitModel::numeric_default(&g)?;
    let built = build_proper(&mut model)?;
    let n = built.relations.len();
    if built.zeta != 0 || n != cs.nu() {
        return Err(Error::ValidationFailure(format!(
            "expected all critical orbits related, found zeta = {}",
            built.zeta
        )));
    }

    let outcome = certify(
        &g,
        &cs,
        &built.relations,
        crate::ratmap::ChartKind::RatAffine,
    )?;
    if outcome.certified {
        return Err(Error::ValidationFailure(
            "expected a rank deficiency for the flexible family".into(),
        ));
    }
    let kernel_vector = outcome
        .kernel_vectors
        .first()
        .cloned()
        .ok_or_else(|| Error::ValidationFailure("no kernel vector extracted".into()))?;
    let kernel_residual = left_kernel_residual(&outcome.report, &kernel_vector);

    // the combination must use at least one row with offsets beyond (1,1)
    let meaningful = built
        .relations
        .iter()
        .zip(&kernel_vector)
        .any(|(r, a_k)| !(r.m == 1 && r.n == 1) && a_k.norm() > 1e-6);
    if !meaningful {
        return Err(Error::ValidationFailure(
            "kernel vector is supported on trivial rows only".into(),
        ));
    }

    let crit: Vec<Pt> = cs.points.iter().map(|&(p, _)| p).collect();
    let qdiff = kernel_qdiff(&g, &crit, &built.relations, &kernel_vector)?;
    let samples = sample_points(&g, &qdiff, 24, seed);
    let residual = invariance_residual(&g, &qdiff, &samples)?;
    let moments = qdiff.infinity_moments();

    // velocity of the conjugated family in coefficient space, by central
    // differences with a scale fixed holomorphically on one coefficient slot
    let family_dir = conjugated_family_direction(a, &form.transform, &g)?;
    let scale = outcome.report.frobenius().max(1e-300);
    let mut norm2 = 0.0f64;
    for rel in &built.relations {
        let v = relation_defect_derivative(&g, &cs, rel, &family_dir)?;
        norm2 += v.norm_sqr();
    }
    let family_direction_in_kernel = norm2.sqrt() <= 1e-6 * scale;

    Ok(DegeneracyReport {
        a,
        map: g,
        relations: built.relations,
        expected_rank: n,
        outcome,
        kernel_vector,
        kernel_residual,
        qdiff,
        invariance_residual: residual,
        moments,
        family_direction_in_kernel,
    })
}

/// d/da of the conjugated family at the base parameter, as a coefficient
/// direction on the conjugated map. The conjugated pairs are rescaled so a
/// fixed coefficient slot matches the base map, which keeps the scaling
/// holomorphic in the parameter.
fn conjugated_family_direction(
    a: Complex64,
    transform: &crate::moebius::Moebius,
    base: &RatMap,
) -> Result<Direction> {
    let d = base.degree();
    // the anchor slot: largest coefficient of the base pair
    let slot_value = |num: &Poly, den: &Poly, slot: usize| -> Complex64 {
        if slot <= d {
            num.coeff(slot)
        } else {
            den.coeff(slot - d - 1)
        }
    };
    let mut anchor = 0usize;
    let mut best = 0.0;
    for s in 0..2 * (d + 1) {
        let v = slot_value(base.num(), base.den(), s).norm();
        if v > best {
            best = v;
            anchor = s;
        }
    }
    let target = slot_value(base.num(), base.den(), anchor);

    let conjugated_coeffs = |param: Complex64| -> Result<(Poly, Poly)> {
        let (num, den) = family_pair(param);
        let pair = moebius_conjugate(&num, &den, transform, 1e-12)?;
        let here = slot_value(&pair.num, &pair.den, anchor);
        if here.norm() == 0.0 {
            return Err(Error::ValidationFailure("anchor slot vanished".into()));
        }
        let lambda = target / here;
        Ok((pair.num.scale(lambda), pair.den.scale(lambda)))
    };

    let h = 1e-6;
    let (np, dp) = conjugated_coeffs(a + Complex64::new(h, 0.0))?;
    let (nm, dm) = conjugated_coeffs(a - Complex64::new(h, 0.0))?;
    let inv2h = Complex64::new(1.0 / (2.0 * h), 0.0);
    Ok(Direction {
        dnum: np.sub(&nm).scale(inv2h),
        dden: dp.sub(&dm).scale(inv2h),
    })
}

/// Convenience wrapper asserting the full expected degeneracy pattern; used
/// by the demo command and the acceptance suite.
pub fn degeneracy_summary(report: &DegeneracyReport) -> (usize, usize, f64, f64) {
    let max_moment = {
        let (m0, m1, m2) = report.moments;
        m0.norm().max(m1.norm()).max(m2.norm())
    };
    (
        report.expected_rank,
        report.outcome.report.certified_rank,
        report.invariance_residual,
        max_moment,
    )
}
