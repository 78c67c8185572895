//! Rational maps as dynamical systems: critical points with multiplicities,
//! orbits on the extended plane, chain-rule derivatives, coefficient charts,
//! and the Jacobian of the critical value/jet data map.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{certify_rank_default, null_space, svd, Mat, RankDecision};
use crate::moebius::{moebius_conjugate, Moebius};
use crate::num::Pt;
use crate::poly::{factorial, rat_jet, Poly};
use crate::roots::poly_roots;
use crate::util::{SplitMix64, FD_STEP, INFINITY_RATIO, ROOT_CLUSTER_TOL};

/// A rational map of degree >= 2, stored as a coprime, jointly normalized
/// coefficient pair.
#[derive(Clone, Debug)]
pub struct RatMap {
    num: Poly,
    den: Poly,
    wronskian: Poly,
    degree: usize,
}

impl RatMap {
    pub fn new(num: Poly, den: Poly, tol: f64) -> Result<Self> {
        let reduced = crate::moebius::ratfn_reduce(&num, &den, tol)?;
        Self::from_reduced(reduced.num, reduced.den)
    }

    /// Wraps an already coprime pair without re-reducing.
    pub fn from_reduced(num: Poly, den: Poly) -> Result<Self> {
        let degree = num.degree().unwrap_or(0).max(den.degree().unwrap_or(0));
        if degree < 2 {
            return Err(Error::DegreeTooLow { degree });
        }
        let wronskian = num
            .derivative()
            .mul(&den)
            .sub(&num.mul(&den.derivative()))
            .trim(1e-12);
        Ok(Self {
            num,
            den,
            wronskian,
            degree,
        })
    }

    /// A polynomial map p(z)/1.
    pub fn polynomial(p: Poly) -> Result<Self> {
        Self::from_reduced(p, Poly::one())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn wronskian(&self) -> &Poly {
        &self.wronskian
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == Some(0)
    }

    /// Evaluation on the extended plane in projective coordinates; never
    /// overflows and reports exact pole hits as infinity.
    pub fn eval_pt(&self, z: Pt) -> Pt {
        let (x, y) = match z {
            Pt::Finite(z) => {
                let s = 1f64.max(z.norm());
                (z / s, Complex64::new(1.0 / s, 0.0))
            }
            Pt::Infinity => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        };
        let n = self.num.eval_homogeneous(x, y, self.degree);
        let m = self.den.eval_homogeneous(x, y, self.degree);
        if m.norm() * INFINITY_RATIO <= n.norm() {
            Pt::Infinity
        } else if n.norm() == 0.0 && m.norm() == 0.0 {
            // cannot happen for a coprime pair except through rounding
            Pt::Infinity
        } else {
            Pt::Finite(n / m)
        }
    }

    /// Plain evaluation at a finite point believed to be away from poles.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self.eval_pt(Pt::Finite(z)) {
            Pt::Finite(w) => Ok(w),
            Pt::Infinity => Err(Error::OrbitHitsInfinity { step: 1 }),
        }
    }

    /// Derivative value f'(z) at a finite non-pole point.
    pub fn derivative_value(&self, z: Complex64) -> Result<Complex64> {
        let d = self.den.eval(z);
        let scale = self.den.coeff_scale()
            * 1f64
                .max(z.norm())
                .powi(self.den.degree().unwrap_or(0) as i32);
        if d.norm() <= 1e-13 * scale {
            return Err(Error::NearPole {
                dist: d.norm() / scale,
            });
        }
        Ok(self.wronskian.eval(z) / (d * d))
    }

    /// Taylor coefficients of the map at a finite non-pole point.
    pub fn jet(&self, z: Complex64, order: usize) -> Result<Vec<Complex64>> {
        rat_jet(&self.num, &self.den, z, order)
    }

    /// Value of the k-th derivative at z.
    pub fn derivative_k(&self, z: Complex64, k: usize) -> Result<Complex64> {
        let jet = self.jet(z, k)?;
        Ok(jet[k] * factorial(k))
    }

    /// Conjugate s . f . s^-1.
    pub fn conjugate(&self, s: &Moebius, tol: f64) -> Result<RatMap> {
        let pair = moebius_conjugate(&self.num, &self.den, s, tol)?;
        RatMap::from_reduced(pair.num, pair.den)
    }

    /// Forward orbit [z0, f(z0), ..., f^H(z0)].
    pub fn orbit(&self, z0: Pt, horizon: usize) -> Vec<Pt> {
        let mut out = Vec::with_capacity(horizon + 1);
        let mut z = z0;
        out.push(z);
        for _ in 0..horizon {
            z = self.eval_pt(z);
            out.push(z);
        }
        out
    }

    /// Chain-rule derivative of the k-th iterate at z:
    /// product of f'(f^r(z)) for r = 0..k-1. Requires the orbit segment to
    /// stay finite and away from poles.
    pub fn iterate_derivative(&self, z: Complex64, k: usize) -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut w = Pt::Finite(z);
        for step in 0..k {
            let zf = match w {
                Pt::Finite(zf) => zf,
                Pt::Infinity => return Err(Error::OrbitHitsInfinity { step }),
            };
            let d = self
                .derivative_value(zf)
                .map_err(|_| Error::OrbitHitsInfinity { step })?;
            acc *= d;
            w = self.eval_pt(w);
        }
        Ok(acc)
    }
}

/// Critical points of a map with multiplicities summing to 2d - 2.
/// Finite points come first, ordered by (re, im); infinity, when critical,
/// is last.
#[derive(Clone, Debug)]
pub struct CriticalSet {
    pub points: Vec<(Pt, usize)>,
}

impl CriticalSet {
    pub fn nu(&self) -> usize {
        self.points.len()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.points.iter().map(|&(_, m)| m).collect()
    }

    pub fn point(&self, index1: usize) -> Pt {
        self.points[index1 - 1].0
    }

    /// Index (1-based) of the critical point within `tol` of `p`, if any.
    pub fn find(&self, p: &Pt, tol: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|(c, _)| c.coincide_dist(p) <= tol || c.chordal_dist(p) <= tol)
            .map(|k| k + 1)
    }
}

/// Critical points of `f` via root clustering of the Wronskian; the point
/// at infinity is attributed the degree deficit and cross-checked through a
/// generic conjugation. Multiplicities must reconcile to exactly 2d - 2.
pub fn critical_set(f: &RatMap, tol: f64) -> Result<CriticalSet> {
    let expected = 2 * f.degree() - 2;
    let mut points = finite_critical_points(f, tol)?;
    let finite_total: usize = points.iter().map(|&(_, m)| m).sum();
    if finite_total > expected {
        return Err(Error::MultiplicityMismatch {
            found: finite_total,
            expected,
        });
    }
    let inf_mult = expected - finite_total;
    if inf_mult > 0 {
        points.push((Pt::Infinity, inf_mult));
    }

    // Cross-check through a generic conjugation: the conjugated map must
    // show the same multiset of multiplicities at the transported points.
    let mut rng = SplitMix64::new(0x5eed_c417);
    let s = Moebius::random(&mut rng);
    let g = f.conjugate(&s, tol.min(1e-8))?;
    let mut g_points = finite_critical_points(&g, tol)?;
    let g_total: usize = g_points.iter().map(|&(_, m)| m).sum();
    if g_total < expected {
        g_points.push((Pt::Infinity, expected - g_total));
    }
    if g_points.len() != points.len() {
        return Err(Error::MultiplicityMismatch {
            found: finite_total,
            expected,
        });
    }
    for (c, m) in &points {
        let image = s.apply(*c);
        let matched = g_points
            .iter()
            .any(|(gc, gm)| gm == m && gc.chordal_dist(&image) <= 1e-5);
        if !matched {
            return Err(Error::MultiplicityMismatch {
                found: finite_total,
                expected,
            });
        }
    }

    Ok(CriticalSet { points })
}

fn finite_critical_points(f: &RatMap, tol: f64) -> Result<Vec<(Pt, usize)>> {
    let w = f.wronskian();
    if w.is_zero() {
        return Err(Error::ValidationFailure("identically critical map".into()));
    }
    if w.degree() == Some(0) {
        return Ok(Vec::new());
    }
    let clusters = poly_roots(w, tol)?;
    Ok(clusters
        .into_iter()
        .map(|c| (Pt::Finite(c.center), c.multiplicity))
        .collect())
}

/// Critical points of a polynomial map in the polynomial (affine) picture:
/// only the finite ones, with multiplicities summing to d - 1.
pub fn critical_set_polynomial(f: &RatMap, tol: f64) -> Result<CriticalSet> {
    if !f.is_polynomial() {
        return Err(Error::InvalidInput("map is not a polynomial".into()));
    }
    let points = finite_critical_points(f, tol)?;
    let total: usize = points.iter().map(|&(_, m)| m).sum();
    let expected = f.degree() - 1;
    if total != expected {
        return Err(Error::MultiplicityMismatch {
            found: total,
            expected,
        });
    }
    Ok(CriticalSet { points })
}

// ---------------------------------------------------------------------------
// Coefficient charts and tangent data
// ---------------------------------------------------------------------------

/// A coefficient perturbation of the map: the family
/// (num + h dnum) / (den + h dden).
#[derive(Clone, Debug)]
pub struct Direction {
    pub dnum: Poly,
    pub dden: Poly,
}

impl Direction {
    pub fn combine(dirs: &[Direction], weights: &[Complex64]) -> Direction {
        let mut dnum = Poly::zero();
        let mut dden = Poly::zero();
        for (d, &w) in dirs.iter().zip(weights) {
            dnum = dnum.add(&d.dnum.scale(w));
            dden = dden.add(&d.dden.scale(w));
        }
        Direction { dnum, dden }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    /// Affine chart of the full coefficient space: every coefficient slot of
    /// numerator and denominator (padded to degree d), with the largest one
    /// pinned to kill projective scaling. Dimension 2d + 1.
    RatAffine,
    /// Monic polynomials of degree d: the d lower numerator coefficients.
    MonicPoly,
    /// One-parameter family perturbing the constant coefficient.
    FamilyConst,
}

/// A chart around a base map: a labelled list of coefficient directions.
#[derive(Clone, Debug)]
pub struct Chart {
    pub kind: ChartKind,
    pub label: String,
    pub directions: Vec<Direction>,
}

/// The affine coefficient chart of the ambient space of degree-d maps.
pub fn rat_affine_chart(f: &RatMap) -> Chart {
    let d = f.degree();
    let slots = 2 * (d + 1);
    let coeff = |slot: usize| {
        if slot <= d {
            f.num().coeff(slot)
        } else {
            f.den().coeff(slot - d - 1)
        }
    };
    let pinned = (0..slots)
        .max_by(|&a, &b| coeff(a).norm().partial_cmp(&coeff(b).norm()).unwrap())
        .unwrap();
    let one = Complex64::new(1.0, 0.0);
    let directions = (0..slots)
        .filter(|&s| s != pinned)
        .map(|s| {
            if s <= d {
                Direction {
                    dnum: Poly::monomial(one, s),
                    dden: Poly::zero(),
                }
            } else {
                Direction {
                    dnum: Poly::zero(),
                    dden: Poly::monomial(one, s - d - 1),
                }
            }
        })
        .collect();
    Chart {
        kind: ChartKind::RatAffine,
        label: "rat".into(),
        directions,
    }
}

/// The monic polynomial chart: perturbations of the d lower coefficients.
pub fn monic_poly_chart(f: &RatMap) -> Result<Chart> {
    if !f.is_polynomial() {
        return Err(Error::InvalidInput(
            "poly chart requires a polynomial map".into(),
        ));
    }
    let d = f.degree();
    let one = Complex64::new(1.0, 0.0);
    let directions = (0..d)
        .map(|s| Direction {
            dnum: Poly::monomial(one, s),
            dden: Poly::zero(),
        })
        .collect();
    Ok(Chart {
        kind: ChartKind::MonicPoly,
        label: "poly".into(),
        directions,
    })
}

/// The one-parameter family that perturbs the constant coefficient of the
/// numerator (for z^2 + c this is the family z^2 + (c + t)).
pub fn family_const_chart(f: &RatMap) -> Result<Chart> {
    if !f.is_polynomial() {
        return Err(Error::InvalidInput(
            "family chart requires a polynomial map".into(),
        ));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok(Chart {
        kind: ChartKind::FamilyConst,
        label: "family:const".into(),
        directions: vec![Direction {
            dnum: Poly::constant(one),
            dden: Poly::zero(),
        }],
    })
}

/// First-order velocity of the map along a coefficient direction, as the
/// rational function (dnum den - num dden)/den^2, returned as a Taylor jet
/// at z0.
pub fn direction_velocity_jet(
    f: &RatMap,
    dir: &Direction,
    z0: Complex64,
    order: usize,
) -> Result<Vec<Complex64>> {
    let num = dir.dnum.mul(f.den()).sub(&f.num().mul(&dir.dden));
    let den = f.den().mul(f.den());
    rat_jet(&num, &den, z0, order)
}

/// Velocity value at a single point.
pub fn direction_velocity(f: &RatMap, dir: &Direction, z: Complex64) -> Result<Complex64> {
    Ok(direction_velocity_jet(f, dir, z, 0)?[0])
}

/// The three conjugation directions: velocities of the flows generated by
/// the vector fields 1, z, z^2 pushed to coefficient space.
pub fn moebius_generator_directions(f: &RatMap) -> [Direction; 3] {
    let p = f.num().clone();
    let q = f.den().clone();
    let dp = p.derivative();
    let dq = q.derivative();
    let z = Poly::monomial(Complex64::new(1.0, 0.0), 1);
    let z2 = Poly::monomial(Complex64::new(1.0, 0.0), 2);
    let d = f.degree() as f64;
    // flow of d/dz:      f_t = f(z - t) + t
    let g1 = Direction {
        dnum: q.sub(&dp),
        dden: dq.scale(Complex64::new(-1.0, 0.0)),
    };
    // flow of z d/dz:    f_t = e^t f(e^-t z)
    let gz = Direction {
        dnum: p.sub(&z.mul(&dp)),
        dden: z.mul(&dq).scale(Complex64::new(-1.0, 0.0)),
    };
    // flow of z^2 d/dz:  f_t = sigma_t . f . sigma_t^-1, sigma_t = z/(1 - tz)
    let gz2 = Direction {
        dnum: z.mul(&p).scale(Complex64::new(d, 0.0)).sub(&z2.mul(&dp)),
        dden: z
            .mul(&q)
            .scale(Complex64::new(d, 0.0))
            .sub(&z2.mul(&dq))
            .sub(&p),
    };
    [g1, gz, gz2]
}

// ---------------------------------------------------------------------------
// Newton continuation of critical points and the critical data Jacobian
// ---------------------------------------------------------------------------

/// Continues the critical point of multiplicity `mu` from `seed` for the
/// perturbed coefficient pair, by Newton on the mu-th derivative.
pub fn continue_critical_point(
    num: &Poly,
    den: &Poly,
    seed: Complex64,
    mu: usize,
) -> Result<Complex64> {
    let mut z = seed;
    let mut last_step = f64::INFINITY;
    for _ in 0..60 {
        let jet = rat_jet(num, den, z, mu + 1)?;
        let g_mu = jet[mu] * factorial(mu);
        let g_mu1 = jet[mu + 1] * factorial(mu + 1);
        if g_mu1.norm() == 0.0 {
            return Err(Error::NewtonDivergence { last_step });
        }
        let step = g_mu / g_mu1;
        z -= step;
        last_step = step.norm();
        if last_step <= 1e-14 * 1f64.max(z.norm()) {
            return Ok(z);
        }
    }
    if last_step <= 1e-10 {
        return Ok(z);
    }
    Err(Error::NewtonDivergence { last_step })
}

/// Rows of the critical data map: for each critical point c_i of
/// multiplicity mu_i the values g(z_i), g'(z_i), ..., g^(mu_i - 1)(z_i)
/// at the continued critical point z_i of the perturbed map.
fn critical_data_values(
    num: &Poly,
    den: &Poly,
    crit: &[(Complex64, usize)],
) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for &(c, mu) in crit {
        let zeta = continue_critical_point(num, den, c, mu)?;
        let jet = rat_jet(num, den, zeta, mu.max(1) - 1)?;
        for (j, item) in jet.iter().enumerate().take(mu) {
            out.push(item * factorial(j));
        }
    }
    Ok(out)
}

/// Central finite difference with one Richardson extrapolation step of the
/// critical data values along a coefficient direction.
fn critical_data_derivative(
    f: &RatMap,
    dir: &Direction,
    crit: &[(Complex64, usize)],
    h: f64,
) -> Result<Vec<Complex64>> {
    let eval = |step: f64| -> Result<Vec<Complex64>> {
        let num = f.num().add(&dir.dnum.scale(Complex64::new(step, 0.0)));
        let den = f.den().add(&dir.dden.scale(Complex64::new(step, 0.0)));
        critical_data_values(&num, &den, crit)
    };
    let phi = |hh: f64| -> Result<Vec<Complex64>> {
        let plus = eval(hh)?;
        let minus = eval(-hh)?;
        Ok(plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| (p - m) / (2.0 * hh))
            .collect())
    };
    let coarse = phi(h)?;
    let fine = phi(h / 2.0)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f4, f1)| (4.0 * f4 - f1) / 3.0)
        .collect())
}

/// Finite critical points with multiplicities, required by the jet
/// machinery. Fails when a critical point or value sits at infinity; the
/// caller should conjugate the map first.
pub fn finite_marked_critical_points(
    f: &RatMap,
    cs: &CriticalSet,
) -> Result<Vec<(Complex64, usize)>> {
    let mut out = Vec::with_capacity(cs.points.len());
    for (step, &(p, mu)) in cs.points.iter().enumerate() {
        let c = p.as_finite().ok_or(Error::OrbitHitsInfinity { step })?;
        if f.eval_pt(p).is_infinite() {
            return Err(Error::OrbitHitsInfinity { step });
        }
        out.push((c, mu));
    }
    Ok(out)
}

/// Jacobian of the critical value/jet data map over the chart directions:
/// one row per (critical point, derivative order below the multiplicity),
/// 2d - 2 rows in total, one column per direction.
pub fn critical_data_jacobian(f: &RatMap, cs: &CriticalSet, chart: &Chart) -> Result<Mat> {
    let crit = finite_marked_critical_points(f, cs)?;
    let rows_n: usize = crit.iter().map(|&(_, mu)| mu).sum();
    let mut cols = Vec::with_capacity(chart.directions.len());
    for dir in &chart.directions {
        cols.push(critical_data_derivative(f, dir, &crit, FD_STEP)?);
    }
    let mut m = Mat::zeros(rows_n, chart.directions.len());
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m)
}

/// Closed-form oracle for the same Jacobian: the row for (i, j) along a
/// direction is the j-th derivative of the direction velocity at c_i,
/// because the lower jets of the map vanish there to the right order.
pub fn critical_data_jacobian_closed_form(
    f: &RatMap,
    cs: &CriticalSet,
    chart: &Chart,
) -> Result<Mat> {
    let crit = finite_marked_critical_points(f, cs)?;
    let rows_n: usize = crit.iter().map(|&(_, mu)| mu).sum();
    let mut m = Mat::zeros(rows_n, chart.directions.len());
    for (col, dir) in chart.directions.iter().enumerate() {
        let mut row = 0usize;
        for &(c, mu) in &crit {
            let jet = direction_velocity_jet(f, dir, c, mu.max(1) - 1)?;
            for (j, item) in jet.iter().enumerate().take(mu) {
                m.set(row, col, item * factorial(j));
                row += 1;
            }
        }
    }
    Ok(m)
}

/// Rank certification of the critical data Jacobian. The expected rank for
/// a degree-d map is 2d - 2.
pub struct CriticalDataRank {
    pub matrix: Mat,
    pub singular_values: Vec<f64>,
    pub decision: RankDecision,
}

pub fn certify_critical_data_rank(
    f: &RatMap,
    cs: &CriticalSet,
    chart: &Chart,
) -> Result<CriticalDataRank> {
    let matrix = critical_data_jacobian(f, cs, chart)?;
    let dec = svd(&matrix);
    let decision = certify_rank_default(&dec.singular_values)?;
    Ok(CriticalDataRank {
        matrix,
        singular_values: dec.singular_values,
        decision,
    })
}

/// Basis of the tangent space to the fixed-multiplicity locus inside the
/// chart: the numerical kernel of the constraint rows (derivative orders
/// 1..mu_i-1 of each degenerate critical point). The dimension must come
/// out as chart dimension minus the number of constraints.
pub fn tangent_basis(f: &RatMap, cs: &CriticalSet, chart: &Chart) -> Result<Vec<Direction>> {
    let crit = finite_marked_critical_points(f, cs)?;
    let constraints: usize = crit.iter().map(|&(_, mu)| mu - 1).sum();
    let dims = chart.directions.len();
    if constraints == 0 {
        return Ok(chart.directions.clone());
    }

    // constraint rows = the jet rows with derivative order >= 1
    let full = critical_data_jacobian(f, cs, chart)?;
    let mut rows = Vec::with_capacity(constraints);
    let mut row_idx = 0usize;
    for &(_, mu) in &crit {
        for j in 0..mu {
            if j >= 1 {
                rows.push((0..dims).map(|c| full.get(row_idx, c)).collect::<Vec<_>>());
            }
            row_idx += 1;
        }
    }
    let cmat = Mat::from_rows(rows);
    let dec = svd(&cmat);
    let decision = certify_rank_default(&dec.singular_values)?;
    if decision.rank != constraints {
        return Err(Error::DimensionMismatch {
            found: dims - decision.rank,
            expected: dims - constraints,
        });
    }
    let kernel = null_space(&cmat, decision.rank);
    if kernel.len() != dims - constraints {
        return Err(Error::DimensionMismatch {
            found: kernel.len(),
            expected: dims - constraints,
        });
    }
    Ok(kernel
        .into_iter()
        .map(|w| Direction::combine(&chart.directions, &w))
        .collect())
}

/// Expected tangent dimension of the fixed-multiplicity locus in the full
/// rational chart: nu + 3.
pub fn expected_rat_tangent_dim(cs: &CriticalSet) -> usize {
    cs.nu() + 3
}

// ---------------------------------------------------------------------------
// Conjugation helpers
// ---------------------------------------------------------------------------

/// Multiplier of a fixed point (finite or infinite).
pub fn fixed_point_multiplier(f: &RatMap, p: Pt, tol: f64) -> Result<Complex64> {
    match p {
        Pt::Finite(z) => f.derivative_value(z),
        Pt::Infinity => {
            // conjugate by 1/z and read the derivative at 0
            let inv = Moebius::new(
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            )?;
            let g = f.conjugate(&inv, tol)?;
            g.derivative_value(Complex64::new(0.0, 0.0))
        }
    }
}

/// Result of moving a map so that the critical orbits stay finite.
pub struct FiniteOrbitForm {
    pub map: RatMap,
    pub transform: Moebius,
    pub conjugated: bool,
}

/// Checks the critical orbits of `f` up to `horizon`; when any orbit point
/// reaches infinity (or grows beyond the safe magnitude), conjugates by a
/// pivot transformation z0 z/(z0 - z) with z0 drawn from the seeded stream
/// until the orbits stay finite.
pub fn ensure_finite_critical_orbits(
    f: &RatMap,
    tol: f64,
    horizon: usize,
    seed: u64,
) -> Result<FiniteOrbitForm> {
    let safe = |map: &RatMap| -> Result<bool> {
        let cs = critical_set(map, ROOT_CLUSTER_TOL)?;
        for (c, _) in &cs.points {
            for p in map.orbit(*c, horizon) {
                match p {
                    Pt::Infinity => return Ok(false),
                    Pt::Finite(z) if z.norm() > 1e8 => return Ok(false),
                    _ => {}
                }
            }
        }
        Ok(true)
    };

    if safe(f)? {
        return Ok(FiniteOrbitForm {
            map: f.clone(),
            transform: Moebius::identity(),
            conjugated: false,
        });
    }

    let cs = critical_set(f, ROOT_CLUSTER_TOL)?;
    let scale = cs
        .points
        .iter()
        .filter_map(|(p, _)| p.as_finite())
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    let mut rng = SplitMix64::new(seed);
    for _attempt in 0..16 {
        let theta = rng.range(0.0, 2.0 * std::f64::consts::PI);
        let radius = scale * rng.range(8.0, 24.0);
        let z0 = Complex64::new(radius * theta.cos(), radius * theta.sin());
        let s = Moebius::pivot(z0);
        let g = match f.conjugate(&s, tol) {
            Ok(g) => g,
            Err(_) => continue,
        };
        if safe(&g)? {
            return Ok(FiniteOrbitForm {
                map: g,
                transform: s,
                conjugated: true,
            });
        }
    }
    Err(Error::ValidationFailure(
        "could not move the critical orbits away from infinity".into(),
    ))
}

/// Matches the critical points of a conjugated map against the transported
/// critical points of the original: perm[i] is the 1-based index in `to`
/// of the image of the i-th point of `from` under `s`.
pub fn match_critical_indices(
    from: &CriticalSet,
    s: &Moebius,
    to: &CriticalSet,
) -> Result<Vec<usize>> {
    let mut perm = Vec::with_capacity(from.points.len());
    for (c, mu) in &from.points {
        let image = s.apply(*c);
        let mut found = None;
        for (k, (gc, gm)) in to.points.iter().enumerate() {
            if gm == mu && gc.chordal_dist(&image) <= 1e-5 {
                found = Some(k + 1);
                break;
            }
        }
        match found {
            Some(k) if !perm.contains(&k) => perm.push(k),
            _ => {
                return Err(Error::ValidationFailure(
                    "critical points do not match across conjugation".into(),
                ))
            }
        }
    }
    Ok(perm)
}
