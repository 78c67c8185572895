//! Assembly and rank certification of the critical-relation Jacobian, its
//! invariance checks, and the dual quadratic differential extracted from a
//! rank deficiency.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{certify_rank_default, null_space, svd, Mat};
use crate::moebius::Moebius;
use crate::num::Pt;
use crate::poly::{factorial, rat_jet, Poly};
use crate::qdiff::{pushforward_eval, relation_qdiff, QuadDiff};
use crate::ratmap::{
    continue_critical_point, critical_set_polynomial, direction_velocity, direction_velocity_jet,
    family_const_chart, moebius_generator_directions, monic_poly_chart, rat_affine_chart,
    tangent_basis, Chart, ChartKind, CriticalSet, Direction, RatMap,
};
use crate::relations::CriticalRelation;
use crate::util::SV_RELATIVE_FLOOR;

/// The certified derivative data of a relation map at a map.
#[derive(Clone, Debug)]
pub struct JacobianReport {
    pub matrix: Mat,
    pub singular_values: Vec<f64>,
    pub certified_rank: usize,
    /// Ratio across the rank cut; infinite when no singular value falls
    /// below the floor.
    pub gap: f64,
    /// Absolute singular-value cutoff used for the decision.
    pub tolerance: f64,
    pub chart: String,
}

impl JacobianReport {
    fn from_matrix(matrix: Mat, chart: String) -> Result<Self> {
        let dec = svd(&matrix);
        let decision = certify_rank_default(&dec.singular_values)?;
        Ok(Self {
            matrix,
            singular_values: dec.singular_values,
            certified_rank: decision.rank,
            gap: decision.gap,
            tolerance: decision.cutoff,
            chart,
        })
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.frobenius()
    }

    /// Left kernel: vectors a with sum_k a_k row_k = 0.
    pub fn left_kernel(&self) -> Vec<Vec<Complex64>> {
        null_space(&self.matrix.transpose(), self.certified_rank)
    }
}

// ---------------------------------------------------------------------------
// Relation defect derivatives
// ---------------------------------------------------------------------------

fn orbit_points_finite(f: &RatMap, c: Pt, len: usize) -> Result<Vec<Complex64>> {
    let orbit = f.orbit(c, len);
    orbit
        .iter()
        .enumerate()
        .map(|(step, p)| p.as_finite().ok_or(Error::OrbitHitsInfinity { step }))
        .collect()
}

/// Derivative of t -> f_t^m(c_i(f_t)) at t = 0 along a coefficient
/// direction: the chain-rule sum over the orbit for m >= 1 (the moving
/// critical point drops out because the orbit derivative vanishes there),
/// and the implicit-function derivative of the critical point for m = 0.
fn iterate_component_derivative(
    f: &RatMap,
    cs: &CriticalSet,
    dir: &Direction,
    i: usize,
    m: usize,
) -> Result<Complex64> {
    let (c_pt, mu) = cs.points[i - 1];
    let c = c_pt
        .as_finite()
        .ok_or(Error::OrbitHitsInfinity { step: 0 })?;
    if m == 0 {
        // zeta' = -v^(mu)(c) / f^(mu+1)(c), v the direction velocity
        let v_jet = direction_velocity_jet(f, dir, c, mu)?;
        let v_mu = v_jet[mu] * factorial(mu);
        let f_mu1 = f.derivative_k(c, mu + 1)?;
        return Ok(-v_mu / f_mu1);
    }
    let orbit = orbit_points_finite(f, c_pt, m)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 1..=m {
        let tail = f.iterate_derivative(orbit[r], m - r)?;
        let vel = direction_velocity(f, dir, orbit[r - 1])?;
        acc += tail * vel;
    }
    Ok(acc)
}

/// Derivative of the relation defect g^m(c_i(g)) - g^n(c_j(g)) along a
/// coefficient direction, at g = f.
pub fn relation_defect_derivative(
    f: &RatMap,
    cs: &CriticalSet,
    rel: &CriticalRelation,
    dir: &Direction,
) -> Result<Complex64> {
    let lhs = iterate_component_derivative(f, cs, dir, rel.i, rel.m)?;
    let rhs = iterate_component_derivative(f, cs, dir, rel.j, rel.n)?;
    Ok(lhs - rhs)
}

fn pair_eval(num: &Poly, den: &Poly, z: Complex64) -> Result<Complex64> {
    let n = num.eval(z);
    let d = den.eval(z);
    if d.norm() * 1e12 <= n.norm() || d.norm() == 0.0 {
        return Err(Error::OrbitHitsInfinity { step: 0 });
    }
    Ok(n / d)
}

/// Same derivative by central finite differences with one Richardson step,
/// following the continued critical points of the perturbed maps. Used as
/// the independent cross-check of the closed form.
pub fn fd_relation_defect_derivative(
    f: &RatMap,
    cs: &CriticalSet,
    rel: &CriticalRelation,
    dir: &Direction,
    h: f64,
) -> Result<Complex64> {
    let component = |i: usize, m: usize, step: f64| -> Result<Complex64> {
        let num = f.num().add(&dir.dnum.scale(Complex64::new(step, 0.0)));
        let den = f.den().add(&dir.dden.scale(Complex64::new(step, 0.0)));
        let (c_pt, mu) = cs.points[i - 1];
        let c = c_pt
            .as_finite()
            .ok_or(Error::OrbitHitsInfinity { step: 0 })?;
        let mut z = continue_critical_point(&num, &den, c, mu)?;
        for _ in 0..m {
            z = pair_eval(&num, &den, z)?;
        }
        Ok(z)
    };
    let defect = |step: f64| -> Result<Complex64> {
        Ok(component(rel.i, rel.m, step)? - component(rel.j, rel.n, step)?)
    };
    let phi = |hh: f64| -> Result<Complex64> { Ok((defect(hh)? - defect(-hh)?) / (2.0 * hh)) };
    let coarse = phi(h)?;
    let fine = phi(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

// ---------------------------------------------------------------------------
// Jacobian assembly and certification
// ---------------------------------------------------------------------------

/// Marked value of a relation: the common point f^m(c_i) = f^n(c_j).
fn marked_value(f: &RatMap, cs: &CriticalSet, rel: &CriticalRelation) -> Result<Complex64> {
    let orbit = orbit_points_finite(f, cs.points[rel.i - 1].0, rel.m)?;
    Ok(orbit[rel.m])
}

/// Jacobian of the relation map over the tangent directions, with rows
/// optionally rescaled by the derivative of a Moebius transformation at the
/// marked values (post-composition leaves the rank unchanged as long as no
/// marked value is sent to infinity).
pub fn relation_jacobian(
    f: &RatMap,
    cs: &CriticalSet,
    relations: &[CriticalRelation],
    directions: &[Direction],
    sigma: Option<&Moebius>,
    chart_label: &str,
) -> Result<JacobianReport> {
    let mut rows = Vec::with_capacity(relations.len());
    for rel in relations {
        let scale = match sigma {
            None => Complex64::new(1.0, 0.0),
            Some(s) => {
                let v = marked_value(f, cs, rel)?;
                if let Pt::Finite(pole) = s.pole() {
                    if (v - pole).norm() <= 1e-8 * 1f64.max(v.norm()) {
                        return Err(Error::InvalidInput(format!(
                            "sigma sends the marked value of {rel} to infinity"
                        )));
                    }
                }
                s.derivative_at(v)
            }
        };
        let mut row = Vec::with_capacity(directions.len());
        for dir in directions {
            row.push(relation_defect_derivative(f, cs, rel, dir)? * scale);
        }
        rows.push(row);
    }
    JacobianReport::from_matrix(Mat::from_rows(rows), chart_label.to_string())
}

/// Everything a certification run decides.
#[derive(Clone, Debug)]
pub struct CertifyOutcome {
    pub report: JacobianReport,
    /// The expected rank: the number of relations.
    pub expected_rank: usize,
    pub certified: bool,
    /// Dimension of the kernel of the Jacobian on the tangent basis.
    pub kernel_dim: usize,
    /// Whether the conjugation directions are annihilated (full rational
    /// chart) or the translation direction is (monic polynomial chart);
    /// None for one-parameter family slices.
    pub conjugacy_in_kernel: Option<bool>,
    /// Left-kernel vectors when the rank is deficient.
    pub kernel_vectors: Vec<Vec<Complex64>>,
}

/// Builds the chart of the requested kind around f.
pub fn build_chart(f: &RatMap, kind: ChartKind) -> Result<Chart> {
    match kind {
        ChartKind::RatAffine => Ok(rat_affine_chart(f)),
        ChartKind::MonicPoly => monic_poly_chart(f),
        ChartKind::FamilyConst => family_const_chart(f),
    }
}

/// Certifies that the relation Jacobian over the tangent space of the
/// chart has rank equal to the number of relations, checks the kernel
/// dimension, and checks that the conjugacy directions available in the
/// chart are annihilated. A rank deficiency is not an error: the outcome
/// records it and carries the left-kernel vectors.
pub fn certify(
    f: &RatMap,
    cs: &CriticalSet,
    relations: &[CriticalRelation],
    chart_kind: ChartKind,
) -> Result<CertifyOutcome> {
    let chart = build_chart(f, chart_kind)?;
    let basis = tangent_basis(f, cs, &chart)?;
    let report = relation_jacobian(f, cs, relations, &basis, None, &chart.label)?;

    let n = relations.len();
    let certified = report.certified_rank == n;
    let kernel_dim = basis.len() - report.certified_rank;
    let scale = report.frobenius().max(1e-300);

    let conjugacy_in_kernel = match chart_kind {
        ChartKind::RatAffine => {
            let mut ok = true;
            for dir in moebius_generator_directions(f) {
                let mut norm2 = 0.0f64;
                for rel in relations {
                    let v = relation_defect_derivative(f, cs, rel, &dir)?;
                    norm2 += v.norm_sqr();
                }
                if norm2.sqrt() > 1e-6 * scale {
                    ok = false;
                }
            }
            Some(ok)
        }
        ChartKind::MonicPoly => {
            // translation flow: f_t = f(z - t) + t stays monic
            let dir = Direction {
                dnum: Poly::one().sub(&f.num().derivative()),
                dden: Poly::zero(),
            };
            let mut norm2 = 0.0f64;
            for rel in relations {
                let v = relation_defect_derivative(f, cs, rel, &dir)?;
                norm2 += v.norm_sqr();
            }
            Some(norm2.sqrt() <= 1e-6 * scale)
        }
        ChartKind::FamilyConst => None,
    };

    let kernel_vectors = if certified {
        Vec::new()
    } else {
        report.left_kernel()
    };

    Ok(CertifyOutcome {
        report,
        expected_rank: n,
        certified,
        kernel_dim,
        conjugacy_in_kernel,
        kernel_vectors,
    })
}

/// Certified ranks across a family of Moebius post-compositions must agree.
pub fn rank_sigma_independence(
    f: &RatMap,
    cs: &CriticalSet,
    relations: &[CriticalRelation],
    directions: &[Direction],
    sigmas: &[Moebius],
) -> Result<bool> {
    let base = relation_jacobian(f, cs, relations, directions, None, "base")?;
    for s in sigmas {
        let scaled = relation_jacobian(f, cs, relations, directions, Some(s), "sigma")?;
        if scaled.certified_rank != base.certified_rank {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Two full collections for the same map must produce the same certified
/// rank over the same tangent directions.
pub fn rank_full_collection_independence(
    f: &RatMap,
    cs: &CriticalSet,
    first: &[CriticalRelation],
    second: &[CriticalRelation],
    directions: &[Direction],
) -> Result<bool> {
    let a = relation_jacobian(f, cs, first, directions, None, "first")?;
    let b = relation_jacobian(f, cs, second, directions, None, "second")?;
    Ok(a.certified_rank == b.certified_rank)
}

// ---------------------------------------------------------------------------
// Repelling periodic targets
// ---------------------------------------------------------------------------

/// One row of the repelling-target variant: critical point i reaches the
/// periodic point after m steps; the periodic point has the given period.
#[derive(Clone, Copy, Debug)]
pub struct RepellingAssignment {
    pub i: usize,
    pub m: usize,
    pub periodic_seed: Complex64,
    pub period: usize,
}

/// Jacobian of g -> (g^{m_i}(c_i(g)) - p_i(g))_i where p_i are continued
/// repelling periodic points. Requires every multiplier to exceed one in
/// modulus and the intermediate orbit points to avoid the critical set.
pub fn repelling_variant(
    f: &RatMap,
    cs: &CriticalSet,
    assignments: &[RepellingAssignment],
    directions: &[Direction],
    chart_label: &str,
) -> Result<JacobianReport> {
    let mut rows = Vec::with_capacity(assignments.len());
    for a in assignments {
        // refine the periodic point by Newton on f^s(p) - p
        let mut p = a.periodic_seed;
        for _ in 0..60 {
            let mut w = p;
            for _ in 0..a.period {
                w = f.eval(w)?;
            }
            let dfs = f.iterate_derivative(p, a.period)?;
            let denom = dfs - Complex64::new(1.0, 0.0);
            if denom.norm() <= 1e-8 {
                // the cycle is (numerically) parabolic
                return Err(Error::NonRepelling {
                    multiplier_modulus: dfs.norm(),
                });
            }
            let step = (w - p) / denom;
            p -= step;
            if step.norm() <= 1e-14 * 1f64.max(p.norm()) {
                break;
            }
        }
        let multiplier = f.iterate_derivative(p, a.period)?;
        if !multiplier.is_finite() || multiplier.norm() <= 1.0 + 1e-9 {
            return Err(Error::NonRepelling {
                multiplier_modulus: multiplier.norm(),
            });
        }
        // intermediate orbit points must avoid the critical set
        let orbit = orbit_points_finite(f, cs.points[a.i - 1].0, a.m)?;
        for z in orbit.iter().take(a.m + 1).skip(1) {
            if cs.find(&Pt::Finite(*z), 1e-9).is_some() {
                return Err(Error::ValidationFailure(
                    "orbit passes through a critical point".into(),
                ));
            }
        }
        let p_orbit = orbit_points_finite(f, Pt::Finite(p), a.period)?;

        let mut row = Vec::with_capacity(directions.len());
        for dir in directions {
            // d/dt f_t^m(c_i(f_t))
            let orbit_term = iterate_component_derivative(f, cs, dir, a.i, a.m)?;
            // d/dt p_i(f_t) by implicit differentiation of f_t^s(p) = p
            let mut l_s = Complex64::new(0.0, 0.0);
            for r in 1..=a.period {
                let tail = f.iterate_derivative(p_orbit[r], a.period - r)?;
                let vel = direction_velocity(f, dir, p_orbit[r - 1])?;
                l_s += tail * vel;
            }
            let p_dot = l_s / (Complex64::new(1.0, 0.0) - multiplier);
            row.push(orbit_term - p_dot);
        }
        rows.push(row);
    }
    JacobianReport::from_matrix(Mat::from_rows(rows), chart_label.to_string())
}

// ---------------------------------------------------------------------------
// Kernel differentials
// ---------------------------------------------------------------------------

/// The quadratic differential attached to a left-kernel vector: the
/// combination of the relation differentials over the rows whose offsets
/// are not (1, 1).
pub fn kernel_qdiff(
    f: &RatMap,
    crit: &[Pt],
    relations: &[CriticalRelation],
    a: &[Complex64],
) -> Result<QuadDiff> {
    if a.len() != relations.len() {
        return Err(Error::InvalidInput("kernel vector length mismatch".into()));
    }
    let mut acc = QuadDiff::zero();
    for (rel, &ak) in relations.iter().zip(a) {
        if rel.m == 1 && rel.n == 1 {
            continue;
        }
        let q = relation_qdiff(f, crit, rel)?;
        acc = acc.add(&q.scaled(ak));
    }
    acc.relations = relations.to_vec();
    Ok(acc)
}

/// Residual of the left-kernel membership: ||a^T J|| / ||J||.
pub fn left_kernel_residual(report: &JacobianReport, a: &[Complex64]) -> f64 {
    let m = &report.matrix;
    let mut out = vec![Complex64::new(0.0, 0.0); m.cols];
    for (k, &ak) in a.iter().enumerate() {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot += ak * m.get(k, j);
        }
    }
    let num = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / report.frobenius().max(1e-300)
}

// ---------------------------------------------------------------------------
// The critical-value chart and the push-forward deficit identity
// ---------------------------------------------------------------------------

/// Solves for the monic polynomial (with the z^(d-1) coefficient frozen)
/// whose critical values equal the targets, by damped Newton from `f`.
/// The unknowns are the d - 1 lower coefficients; the equations are the
/// critical values at the continued critical points plus the multiplicity
/// constraints.
pub fn solve_critical_value_chart(
    f: &RatMap,
    cs: &CriticalSet,
    targets: &[Complex64],
) -> Result<RatMap> {
    if !f.is_polynomial() {
        return Err(Error::ChartSolveFailure("map must be a polynomial".into()));
    }
    let d = f.degree();
    let nu = cs.nu();
    if targets.len() != nu {
        return Err(Error::ChartSolveFailure(
            "one target per critical point".into(),
        ));
    }
    let unknowns = d - 1;
    let lead = f.num().coeff(d);
    let frozen = f.num().coeff(d - 1);

    let assemble = |x: &[Complex64]| -> Poly {
        let mut coeffs = x.to_vec();
        coeffs.push(frozen);
        coeffs.push(lead);
        Poly::new(coeffs)
    };
    let crit: Vec<(Complex64, usize)> = cs
        .points
        .iter()
        .map(|&(p, mu)| (p.as_finite().unwrap(), mu))
        .collect();

    let residual = |x: &[Complex64]| -> Result<Vec<Complex64>> {
        let p = assemble(x);
        let den = Poly::one();
        let mut out = Vec::with_capacity(unknowns);
        for (k, &(c, mu)) in crit.iter().enumerate() {
            let zeta = continue_critical_point(&p, &den, c, mu)?;
            let jet = rat_jet(&p, &den, zeta, mu.max(1) - 1)?;
            out.push(jet[0] - targets[k]);
            for (j, item) in jet.iter().enumerate().take(mu).skip(1) {
                out.push(item * factorial(j));
            }
        }
        Ok(out)
    };

    let mut x: Vec<Complex64> = (0..unknowns).map(|k| f.num().coeff(k)).collect();
    let mut r = residual(&x)?;
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for _iter in 0..60 {
        if norm(&r) <= 1e-12 * (1.0 + norm(targets)) {
            return RatMap::polynomial(assemble(&x));
        }
        // finite-difference Jacobian of the residual
        let fd = 1e-7;
        let mut jac = Mat::zeros(unknowns, unknowns);
        for col in 0..unknowns {
            let mut xp = x.clone();
            xp[col] += Complex64::new(fd, 0.0);
            let rp = residual(&xp)?;
            for row in 0..unknowns {
                jac.set(row, col, (rp[row] - r[row]) / fd);
            }
        }
        // solve jac * step = r through the SVD
        let dec = svd(&jac);
        let mut step = vec![Complex64::new(0.0, 0.0); unknowns];
        for k in 0..unknowns {
            let s = dec.singular_values[k];
            if s <= SV_RELATIVE_FLOOR * dec.singular_values[0].max(1e-300) {
                continue;
            }
            let mut u_dot_r = Complex64::new(0.0, 0.0);
            for (row, r_val) in r.iter().enumerate() {
                u_dot_r += dec.u.get(row, k).conj() * r_val;
            }
            for (row, slot) in step.iter_mut().enumerate() {
                *slot += dec.v.get(row, k) * (u_dot_r / s);
            }
        }
        // damped update
        let mut lambda = 1.0f64;
        loop {
            let trial: Vec<Complex64> = x
                .iter()
                .zip(&step)
                .map(|(xi, si)| xi - si * lambda)
                .collect();
            match residual(&trial) {
                Ok(rt) if norm(&rt) < norm(&r) || lambda < 1e-3 => {
                    x = trial;
                    r = rt;
                    break;
                }
                _ => {
                    lambda *= 0.5;
                    if lambda < 1e-6 {
                        return Err(Error::ChartSolveFailure("damping exhausted".into()));
                    }
                }
            }
        }
    }
    Err(Error::ChartSolveFailure(format!(
        "no convergence, residual {:.3e}",
        norm(&r)
    )))
}

/// Both sides of the push-forward deficit identity for a realized relation
/// of a polynomial map: the deficit q - f_* q of the relation differential
/// equals the sum over critical values of the partial derivative of the
/// relation defect in the critical-value chart, divided by (x - v_k).
/// Returns the largest mismatch over the samples.
pub fn deficit_identity_check(
    f: &RatMap,
    rel: &CriticalRelation,
    samples: &[Complex64],
) -> Result<f64> {
    if !f.is_polynomial() {
        return Err(Error::ChartSolveFailure(
            "the critical-value chart requires a polynomial map".into(),
        ));
    }
    let cs = critical_set_polynomial(f, crate::util::ROOT_CLUSTER_TOL)?;
    let crit: Vec<Pt> = cs.points.iter().map(|&(p, _)| p).collect();
    let q = relation_qdiff(f, &crit, rel)?;

    // trivial defect: identical orbit components
    if rel.i == rel.j && rel.m == rel.n {
        return Ok(0.0);
    }

    // critical values
    let values: Vec<Complex64> = cs
        .points
        .iter()
        .map(|&(p, _)| {
            f.eval_pt(p)
                .as_finite()
                .ok_or(Error::OrbitHitsInfinity { step: 1 })
        })
        .collect::<Result<_>>()?;

    // partial derivatives of the relation defect in the critical-value chart
    let h = 1e-5;
    let defect = |g: &RatMap| -> Result<Complex64> {
        let gcs = critical_set_polynomial(g, crate::util::ROOT_CLUSTER_TOL)?;
        // match the critical points of g to those of f by proximity
        let component = |i: usize, m: usize| -> Result<Complex64> {
            let base = cs.points[i - 1].0.as_finite().unwrap();
            let (zeta, _) = gcs
                .points
                .iter()
                .filter_map(|&(p, mu)| p.as_finite().map(|z| (z, mu)))
                .min_by(|a, b| {
                    (a.0 - base)
                        .norm()
                        .partial_cmp(&(b.0 - base).norm())
                        .unwrap()
                })
                .ok_or_else(|| Error::ChartSolveFailure("lost critical point".into()))?;
            let mut z = zeta;
            for _ in 0..m {
                z = g.eval(z)?;
            }
            Ok(z)
        };
        Ok(component(rel.i, rel.m)? - component(rel.j, rel.n)?)
    };
    let mut partials = Vec::with_capacity(values.len());
    for k in 0..values.len() {
        let mut plus = values.clone();
        plus[k] += Complex64::new(h, 0.0);
        let mut minus = values.clone();
        minus[k] -= Complex64::new(h, 0.0);
        let g_plus = solve_critical_value_chart(f, &cs, &plus)?;
        let g_minus = solve_critical_value_chart(f, &cs, &minus)?;
        partials.push((defect(&g_plus)? - defect(&g_minus)?) / (2.0 * h));
    }

    let mut worst = 0.0f64;
    for &x in samples {
        let lhs = q.eval(x)? - pushforward_eval(f, &q, x)?;
        let mut rhs = Complex64::new(0.0, 0.0);
        for (k, &v) in values.iter().enumerate() {
            rhs += partials[k] / (x - v);
        }
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Certification over the monic polynomial chart: the rank must equal the
/// number of relations, with the translation direction in the kernel.
pub fn polynomial_chart_certify(
    f: &RatMap,
    relations: &[CriticalRelation],
) -> Result<CertifyOutcome> {
    let cs = critical_set_polynomial(f, crate::util::ROOT_CLUSTER_TOL)?;
    certify(f, &cs, relations, ChartKind::MonicPoly)
}
