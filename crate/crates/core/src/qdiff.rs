//! Meromorphic quadratic differentials with simple poles, the relation
//! differentials attached to critical relations, the push-forward operator,
//! invariance residuals and integrability moment sums.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::Pt;
use crate::ratmap::RatMap;
use crate::relations::CriticalRelation;
use crate::roots::all_roots;
use crate::util::SplitMix64;

/// q(z) dz^2 with q(z) = sum residue / (z - pole). Poles are pairwise
/// distinct; coincident poles are merged by summing residues at
/// construction.
#[derive(Clone, Debug, Default)]
pub struct QuadDiff {
    terms: Vec<(Complex64, Complex64)>,
    pub relations: Vec<CriticalRelation>,
}

const POLE_MERGE_TOL: f64 = 1e-9;

impl QuadDiff {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(raw: Vec<(Complex64, Complex64)>) -> Self {
        let mut terms: Vec<(Complex64, Complex64)> = Vec::new();
        for (pole, residue) in raw {
            match terms.iter_mut().find(|(p, _)| {
                (p - pole).norm() <= POLE_MERGE_TOL * 1f64.max(p.norm()).max(pole.norm())
            }) {
                Some((_, r)) => *r += residue,
                None => terms.push((pole, residue)),
            }
        }
        // drop fully cancelled poles
        let scale = terms.iter().map(|(_, r)| r.norm()).fold(0.0, f64::max);
        terms.retain(|(_, r)| r.norm() > 1e-13 * scale.max(1e-300));
        terms.sort_by(|a, b| {
            a.0.re
                .partial_cmp(&b.0.re)
                .unwrap()
                .then(a.0.im.partial_cmp(&b.0.im).unwrap())
        });
        Self {
            terms,
            relations: Vec::new(),
        }
    }

    pub fn terms(&self) -> &[(Complex64, Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, a: Complex64) -> QuadDiff {
        let mut q = QuadDiff::from_terms(self.terms.iter().map(|&(p, r)| (p, r * a)).collect());
        q.relations = self.relations.clone();
        q
    }

    pub fn add(&self, other: &QuadDiff) -> QuadDiff {
        let mut raw = self.terms.clone();
        raw.extend_from_slice(&other.terms);
        let mut q = QuadDiff::from_terms(raw);
        q.relations = self
            .relations
            .iter()
            .chain(&other.relations)
            .copied()
            .collect();
        q
    }

    /// Pointwise value; fails within tolerance of a pole.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(pole, residue) in &self.terms {
            let d = z - pole;
            if d.norm() <= 1e-9 * 1f64.max(z.norm()).max(pole.norm()) {
                return Err(Error::NearPole { dist: d.norm() });
            }
            acc += residue / d;
        }
        Ok(acc)
    }

    /// The first three power sums of residues against pole powers. The
    /// differential decays like 1/z^4 at infinity (so is integrable there)
    /// exactly when all three vanish.
    pub fn infinity_moments(&self) -> (Complex64, Complex64, Complex64) {
        let mut m = [Complex64::new(0.0, 0.0); 3];
        for &(pole, residue) in &self.terms {
            m[0] += residue;
            m[1] += residue * pole;
            m[2] += residue * pole * pole;
        }
        (m[0], m[1], m[2])
    }
}

/// The relation differential of (i, j; m, n): simple poles along the two
/// orbit segments with chain-rule residues,
/// sum_{r=1..m} Df^(m-r)(f^r(c_i)) / (z - f^r(c_i)) minus the same sum for
/// (j, n). Empty sums for m = 0 or n = 0.
pub fn relation_qdiff(f: &RatMap, crit: &[Pt], rel: &CriticalRelation) -> Result<QuadDiff> {
    let mut raw = Vec::new();
    side_terms(f, crit, rel.i, rel.m, 1.0, &mut raw)?;
    side_terms(f, crit, rel.j, rel.n, -1.0, &mut raw)?;
    let mut q = QuadDiff::from_terms(raw);
    q.relations = vec![*rel];
    Ok(q)
}

/// The reduced form: both sums truncated one step early. Requires the
/// relation to be realized, in which case the dropped terms cancel and the
/// reduced form equals the full one pointwise.
pub fn relation_qdiff_reduced(
    f: &RatMap,
    crit: &[Pt],
    rel: &CriticalRelation,
    tol: f64,
) -> Result<QuadDiff> {
    if rel.m == 0 || rel.n == 0 {
        return Err(Error::InvalidInput(
            "reduced form needs m >= 1 and n >= 1".into(),
        ));
    }
    let pi = orbit_point(f, crit, rel.i, rel.m)?;
    let pj = orbit_point(f, crit, rel.j, rel.n)?;
    if pi.coincide_dist(&pj) > tol {
        return Err(Error::RelationNotRealized(rel.i, rel.j, rel.m, rel.n));
    }
    let mut raw = Vec::new();
    side_terms_truncated(f, crit, rel.i, rel.m, rel.m - 1, 1.0, &mut raw)?;
    side_terms_truncated(f, crit, rel.j, rel.n, rel.n - 1, -1.0, &mut raw)?;
    let mut q = QuadDiff::from_terms(raw);
    q.relations = vec![*rel];
    Ok(q)
}

fn orbit_point(f: &RatMap, crit: &[Pt], i: usize, m: usize) -> Result<Pt> {
    let mut z = crit[i - 1];
    for _ in 0..m {
        z = f.eval_pt(z);
    }
    Ok(z)
}

fn side_terms(
    f: &RatMap,
    crit: &[Pt],
    i: usize,
    m: usize,
    sign: f64,
    out: &mut Vec<(Complex64, Complex64)>,
) -> Result<()> {
    side_terms_truncated(f, crit, i, m, m, sign, out)
}

/// Terms for poles f^r(c_i), r = 1..=upto, with residues Df^(m-r) there.
/// The reduced form passes upto = m - 1; the full sum passes upto = m.
fn side_terms_truncated(
    f: &RatMap,
    crit: &[Pt],
    i: usize,
    m: usize,
    upto: usize,
    sign: f64,
    out: &mut Vec<(Complex64, Complex64)>,
) -> Result<()> {
    if m == 0 || upto == 0 {
        return Ok(());
    }
    let c = crit[i - 1]
        .as_finite()
        .ok_or(Error::OrbitHitsInfinity { step: 0 })?;
    let orbit = f.orbit(Pt::Finite(c), upto);
    for (r, p) in orbit.iter().enumerate().take(upto + 1).skip(1) {
        let z = p.as_finite().ok_or(Error::OrbitHitsInfinity { step: r })?;
        let residue = f.iterate_derivative(z, m - r)?;
        out.push((z, residue * sign));
    }
    Ok(())
}

/// Push-forward value at z of an arbitrary pointwise-evaluable differential
/// coefficient: sum over the d preimages w of q(w)/f'(w)^2. The sample z
/// must be a regular value with all preimages finite.
pub fn pushforward_eval_with<Q>(f: &RatMap, q: Q, z: Complex64) -> Result<Complex64>
where
    Q: Fn(Complex64) -> Result<Complex64>,
{
    let d = f.degree();
    // preimages solve num(w) - z den(w) = 0
    let shifted = f.num().sub(&f.den().scale(z));
    if shifted.degree() != Some(d) {
        return Err(Error::PreimageAtInfinity);
    }
    let lead_scale = shifted.coeff_scale();
    if shifted.leading().norm() <= 1e-10 * lead_scale {
        return Err(Error::PreimageAtInfinity);
    }
    let mut pre = all_roots(&shifted)?;
    // one Newton polish pass against the exact pair
    for w in pre.iter_mut() {
        for _ in 0..2 {
            let val = shifted.eval(*w);
            let der = shifted.derivative().eval(*w);
            if der.norm() > 1e-300 {
                *w -= val / der;
            }
        }
    }
    // regular value check: simple preimages with nondegenerate derivative
    for (a, w) in pre.iter().enumerate() {
        for v in pre.iter().skip(a + 1) {
            if (w - v).norm() <= 1e-7 * 1f64.max(w.norm()) {
                return Err(Error::CriticalValue {
                    deriv_modulus: (w - v).norm(),
                });
            }
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &w in &pre {
        let df = f.derivative_value(w)?;
        if df.norm() <= 1e-8 {
            return Err(Error::CriticalValue {
                deriv_modulus: df.norm(),
            });
        }
        let qw = q(w).map_err(|e| match e {
            Error::NearPole { .. } => Error::PreimageAtPoleOfQ,
            other => other,
        })?;
        acc += qw / (df * df);
    }
    Ok(acc)
}

/// Push-forward of a simple-pole differential, evaluated pointwise.
pub fn pushforward_eval(f: &RatMap, q: &QuadDiff, z: Complex64) -> Result<Complex64> {
    pushforward_eval_with(f, |w| q.eval(w), z)
}

/// Sup over the samples of |f_* q - q|, normalized by the sup of |q| there
/// (absolute when the differential is numerically zero on the samples).
pub fn invariance_residual(f: &RatMap, q: &QuadDiff, samples: &[Complex64]) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &z in samples {
        let direct = q.eval(z)?;
        let pushed = pushforward_eval(f, q, z)?;
        worst = worst.max((pushed - direct).norm());
        scale = scale.max(direct.norm());
    }
    Ok(if scale > 1e-12 { worst / scale } else { worst })
}

/// Deterministic sample points: two circles of radius 3 and 7 around the
/// barycenter of the finite postcritical points, jittered from the seed,
/// nudged off poles of q, critical values of f, and the value of f at
/// infinity.
pub fn sample_points(f: &RatMap, q: &QuadDiff, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = SplitMix64::new(seed);

    // barycenter of the finite postcritical points within a short horizon
    let mut post = Vec::new();
    if let Ok(cs) = crate::ratmap::critical_set(f, crate::util::ROOT_CLUSTER_TOL) {
        for (c, _) in &cs.points {
            let orbit = f.orbit(*c, 12);
            for p in orbit.iter().skip(1) {
                if let Some(z) = p.as_finite() {
                    if z.norm() < 1e6 {
                        post.push(z);
                    }
                }
            }
        }
    }
    let center = if post.is_empty() {
        Complex64::new(0.0, 0.0)
    } else {
        post.iter().sum::<Complex64>() / post.len() as f64
    };

    // points to avoid: poles of q, critical values, f(infinity)
    let mut avoid: Vec<Complex64> = q.terms().iter().map(|&(p, _)| p).collect();
    avoid.extend(post.iter().copied());
    if let Pt::Finite(v) = f.eval_pt(Pt::Infinity) {
        avoid.push(v);
    }

    let per_circle = count.div_ceil(2);
    let mut out = Vec::with_capacity(count);
    for (circle, radius) in [(0usize, 3.0f64), (1, 7.0)] {
        let jitter = rng.range(0.0, std::f64::consts::TAU);
        let n_here = if circle == 0 {
            per_circle
        } else {
            count - per_circle
        };
        for k in 0..n_here {
            let mut theta = std::f64::consts::TAU * k as f64 / n_here as f64 + jitter;
            let golden = 2.399963229728653; // golden angle, for nudging
            let mut z = center + Complex64::new(radius * theta.cos(), radius * theta.sin());
            let mut tries = 0;
            while avoid.iter().any(|a| (z - a).norm() < 0.35) && tries < 200 {
                theta += golden;
                z = center + Complex64::new(radius * theta.cos(), radius * theta.sin());
                tries += 1;
            }
            out.push(z);
        }
    }
    out
}

/// Linearity witness used by tests: a * q1 + b * q2 as term lists.
pub fn linear_combination(parts: &[(Complex64, &QuadDiff)]) -> QuadDiff {
    let mut acc = QuadDiff::zero();
    for &(a, q) in parts {
        acc = acc.add(&q.scaled(a));
    }
    acc
}
