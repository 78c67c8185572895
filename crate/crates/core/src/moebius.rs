//! Moebius transformations and conjugation of rational function pairs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::Pt;
use crate::poly::Poly;
use crate::util::SplitMix64;

/// A Moebius transformation z -> (az + b)/(cz + d) with ad - bc != 0.
#[derive(Clone, Copy, Debug)]
pub struct Moebius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

const DET_TOL: f64 = 1e-12;

impl Moebius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let m = Self { a, b, c, d };
        let scale = [a, b, c, d].iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m.det().norm() <= DET_TOL * scale * scale {
            return Err(Error::DegenerateMoebius {
                det_modulus: m.det().norm(),
            });
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// z -> z + t.
    pub fn translation(t: Complex64) -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: t,
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// z -> z0 z / (z0 - z): fixes 0, sends z0 to infinity and infinity
    /// to -z0. Used to move marked points away from infinity.
    pub fn pivot(z0: Complex64) -> Self {
        Self {
            a: z0,
            b: Complex64::new(0.0, 0.0),
            c: -Complex64::new(1.0, 0.0),
            d: z0,
        }
    }

    /// A generic transformation drawn deterministically from the seed, with
    /// entries of moderate size.
    pub fn random(rng: &mut SplitMix64) -> Self {
        loop {
            let mut pick = || Complex64::new(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0));
            let m = Self {
                a: pick(),
                b: pick(),
                c: pick(),
                d: pick(),
            };
            if m.det().norm() > 0.3 {
                return m;
            }
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn compose(&self, other: &Moebius) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn apply(&self, z: Pt) -> Pt {
        match z {
            Pt::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                let scale = 1f64
                    .max(self.a.norm())
                    .max(self.b.norm())
                    .max(self.c.norm())
                    .max(self.d.norm())
                    * 1f64.max(z.norm());
                if den.norm() <= 1e-14 * scale {
                    Pt::Infinity
                } else {
                    Pt::Finite(num / den)
                }
            }
            Pt::Infinity => {
                if self.c.norm() == 0.0 {
                    Pt::Infinity
                } else {
                    Pt::Finite(self.a / self.c)
                }
            }
        }
    }

    /// The point sent to infinity.
    pub fn pole(&self) -> Pt {
        if self.c.norm() == 0.0 {
            Pt::Infinity
        } else {
            Pt::Finite(-self.d / self.c)
        }
    }

    /// Derivative at a finite point: det / (cz + d)^2.
    pub fn derivative_at(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        self.det() / (den * den)
    }
}

/// Coefficients of `sum p_k (alpha z + beta)^k (gamma z + delta)^(pad - k)`,
/// the degree-`pad` homogeneous substitution of a linear fractional argument
/// into `p`.
pub fn compose_linear_frac(
    p: &Poly,
    alpha: Complex64,
    beta: Complex64,
    gamma: Complex64,
    delta: Complex64,
    pad: usize,
) -> Poly {
    let up = Poly::new(vec![beta, alpha]);
    let down = Poly::new(vec![delta, gamma]);
    // powers of (alpha z + beta) and (gamma z + delta)
    let mut up_pows = vec![Poly::one()];
    let mut down_pows = vec![Poly::one()];
    for k in 1..=pad {
        up_pows.push(up_pows[k - 1].mul(&up));
        down_pows.push(down_pows[k - 1].mul(&down));
    }
    let mut acc = Poly::zero();
    for k in 0..=pad {
        let ck = p.coeff(k);
        if ck.norm() == 0.0 {
            continue;
        }
        acc = acc.add(&up_pows[k].mul(&down_pows[pad - k]).scale(ck));
    }
    acc
}

/// A rational function as a coefficient pair, prior to any reduction.
#[derive(Clone, Debug)]
pub struct RatPair {
    pub num: Poly,
    pub den: Poly,
}

/// Conjugates `f = num/den` by `s`, returning coefficients of `s . f . s^-1`
/// reduced to coprime, normalized form. The degree is preserved.
pub fn moebius_conjugate(num: &Poly, den: &Poly, s: &Moebius, tol: f64) -> Result<RatPair> {
    let scale = [s.a, s.b, s.c, s.d]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if s.det().norm() <= DET_TOL * scale * scale {
        return Err(Error::DegenerateMoebius {
            det_modulus: s.det().norm(),
        });
    }
    let d = num.degree().unwrap_or(0).max(den.degree().unwrap_or(0));
    let inv = s.inverse();
    // f(s^-1 z) as a homogeneous pair of degree d
    let p_star = compose_linear_frac(num, inv.a, inv.b, inv.c, inv.d, d);
    let q_star = compose_linear_frac(den, inv.a, inv.b, inv.c, inv.d, d);
    // post-compose with s
    let new_num = p_star.scale(s.a).add(&q_star.scale(s.b));
    let new_den = p_star.scale(s.c).add(&q_star.scale(s.d));
    let reduced = ratfn_reduce(&new_num.trim(1e-12), &new_den.trim(1e-12), tol)?;
    let new_deg = reduced
        .num
        .degree()
        .unwrap_or(0)
        .max(reduced.den.degree().unwrap_or(0));
    if new_deg != d {
        return Err(Error::ValidationFailure(format!(
            "conjugation changed degree from {d} to {new_deg}"
        )));
    }
    Ok(reduced)
}

/// Divides out near-common roots of `num` and `den` (paired within `tol`,
/// relative) and renormalizes so the largest coefficient modulus over the
/// pair is 1.
pub fn ratfn_reduce(num: &Poly, den: &Poly, tol: f64) -> Result<RatPair> {
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    if num.is_zero() {
        return Ok(RatPair {
            num: Poly::zero(),
            den: Poly::one(),
        });
    }

    let num_deg = num.degree().unwrap();
    let den_deg = den.degree().unwrap();
    let (num, den) = if num_deg >= 1 && den_deg >= 1 {
        let num_roots = crate::roots::all_roots(num)?;
        let mut den_roots = crate::roots::all_roots(den)?;
        let mut kept_num = Vec::new();
        let mut cancelled = 0usize;
        for r in num_roots {
            let mut matched = None;
            for (k, s) in den_roots.iter().enumerate() {
                let d = (r - s).norm() / 1f64.max(r.norm()).max(s.norm());
                if d <= tol {
                    matched = Some(k);
                    break;
                }
            }
            match matched {
                Some(k) => {
                    den_roots.remove(k);
                    cancelled += 1;
                }
                None => kept_num.push(r),
            }
        }
        if cancelled == 0 {
            (num.clone(), den.clone())
        } else {
            let new_num = Poly::from_roots(&kept_num).scale(num.leading());
            let new_den = Poly::from_roots(&den_roots).scale(den.leading());
            (new_num, new_den)
        }
    } else {
        (num.clone(), den.clone())
    };

    let scale = num.coeff_scale().max(den.coeff_scale());
    let inv = Complex64::new(1.0 / scale, 0.0);
    Ok(RatPair {
        num: num.scale(inv),
        den: den.scale(inv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn proportional(p: &Poly, q: &Poly, tol: f64) -> bool {
        if p.degree() != q.degree() {
            return false;
        }
        let lam = q.leading() / p.leading();
        p.coeffs()
            .iter()
            .zip(q.coeffs())
            .all(|(a, b)| (a * lam - b).norm() <= tol * q.coeff_scale())
    }

    #[test]
    fn reduce_cancels_common_factor() {
        // (z^2 - 1)/(z - 1) -> z + 1
        let num = Poly::from_reals(&[-1.0, 0.0, 1.0]);
        let den = Poly::from_reals(&[-1.0, 1.0]);
        let r = ratfn_reduce(&num, &den, 1e-9).unwrap();
        assert_eq!(r.num.degree(), Some(1));
        assert_eq!(r.den.degree(), Some(0));
        assert!(proportional(&r.num, &Poly::from_reals(&[1.0, 1.0]), 1e-12));
    }

    #[test]
    fn reduce_keeps_coprime_pair() {
        let num = Poly::from_reals(&[0.0, 0.0, 1.0]); // z^2
        let den = Poly::from_reals(&[1.0]);
        let r = ratfn_reduce(&num, &den, 1e-9).unwrap();
        assert_eq!(r.num.degree(), Some(2));
        assert_eq!(r.den.degree(), Some(0));
    }

    #[test]
    fn reduce_two_factor_case() {
        // (z-2)(z-3) / (z-2)(z+1) -> (z-3)/(z+1)
        let num = Poly::from_roots(&[c(2.0, 0.0), c(3.0, 0.0)]);
        let den = Poly::from_roots(&[c(2.0, 0.0), c(-1.0, 0.0)]);
        let r = ratfn_reduce(&num, &den, 1e-9).unwrap();
        assert!(proportional(
            &r.num,
            &Poly::from_roots(&[c(3.0, 0.0)]),
            1e-10
        ));
        assert!(proportional(
            &r.den,
            &Poly::from_roots(&[c(-1.0, 0.0)]),
            1e-10
        ));
    }

    #[test]
    fn reduce_rejects_zero_denominator() {
        assert!(matches!(
            ratfn_reduce(&Poly::one(), &Poly::zero(), 1e-9),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn conjugation_by_identity() {
        let num = Poly::from_reals(&[0.0, 0.0, 1.0]); // z^2
        let den = Poly::one();
        let r = moebius_conjugate(&num, &den, &Moebius::identity(), 1e-9).unwrap();
        assert!(proportional(&r.num, &num, 1e-12));
        assert_eq!(r.den.degree(), Some(0));
    }

    #[test]
    fn conjugation_of_square_by_inversion() {
        // s = 1/z conjugates z^2 to itself (as a reduced pair).
        let num = Poly::from_reals(&[0.0, 0.0, 1.0]);
        let den = Poly::one();
        let s = Moebius::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let r = moebius_conjugate(&num, &den, &s, 1e-9).unwrap();
        // pointwise oracle on sample points: s(f(s^-1(z))) == (num/den)(z)
        for k in 0..20 {
            let theta = 0.3 + k as f64;
            let z = c(1.7 * theta.cos(), 1.7 * theta.sin());
            let inv = s.inverse();
            let w = match inv.apply(Pt::Finite(z)) {
                Pt::Finite(w) => w,
                Pt::Infinity => continue,
            };
            let fw = w * w;
            let lhs = match s.apply(Pt::Finite(fw)) {
                Pt::Finite(v) => v,
                Pt::Infinity => continue,
            };
            let rhs = r.num.eval(z) / r.den.eval(z);
            assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn conjugation_preserves_degree_and_inverts() {
        let mut rng = SplitMix64::new(5);
        // f = (z^2 + 1)/z, a generic degree-2 map
        let num = Poly::from_reals(&[1.0, 0.0, 1.0]);
        let den = Poly::from_reals(&[0.0, 1.0]);
        for _ in 0..10 {
            let s = Moebius::random(&mut rng);
            let g = moebius_conjugate(&num, &den, &s, 1e-9).unwrap();
            assert_eq!(
                g.num.degree().unwrap_or(0).max(g.den.degree().unwrap_or(0)),
                2
            );
            let back = moebius_conjugate(&g.num, &g.den, &s.inverse(), 1e-9).unwrap();
            // compare after normalization up to a common scalar
            let r0 = ratfn_reduce(&num, &den, 1e-9).unwrap();
            let lam = back.num.leading() / r0.num.leading();
            for (a, b) in r0.num.coeffs().iter().zip(back.num.coeffs()) {
                assert!((a * lam - b).norm() <= 1e-9);
            }
            for (a, b) in r0.den.coeffs().iter().zip(back.den.coeffs()) {
                assert!((a * lam - b).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_moebius_rejected() {
        assert!(Moebius::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)).is_err());
    }
}
