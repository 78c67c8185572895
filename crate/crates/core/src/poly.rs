//! Dense complex polynomials in ascending coefficient order.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::Pt;

/// A polynomial with complex coefficients, stored in ascending degree order.
/// The zero polynomial is the empty coefficient list; otherwise the leading
/// coefficient is nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, stripping exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// Monomial c * z^k.
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn from_reals(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::one();
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, Complex64::new(1.0, 0.0)]));
        }
        p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    /// Coefficient of z^k (zero beyond the stored length).
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Largest coefficient modulus.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Strips leading coefficients smaller than `tol` times the coefficient
    /// scale. Used after arithmetic with provable cancellation.
    pub fn trim(&self, tol: f64) -> Poly {
        let scale = self.coeff_scale();
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.norm() <= tol * scale) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// Horner evaluation at a finite point.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Homogeneous evaluation: value of `sum a_k x^k y^(n-k)` where `n` is
    /// the padding degree (at least the polynomial degree). Overflow-free
    /// when |x|, |y| <= 1.
    pub fn eval_homogeneous(&self, x: Complex64, y: Complex64, n: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..=n {
            acc = acc * y + self.coeff(k) * x.powu(k as u32);
        }
        acc
    }

    /// Evaluation on the extended plane. At infinity: the leading
    /// coefficient direction (infinity for degree >= 1, the constant for
    /// degree 0, zero for the zero polynomial).
    pub fn eval_pt(&self, z: Pt) -> Pt {
        match z {
            Pt::Finite(z) => Pt::Finite(self.eval(z)),
            Pt::Infinity => match self.degree() {
                None => Pt::finite(0.0, 0.0),
                Some(0) => Pt::Finite(self.coeffs[0]),
                Some(_) => Pt::Infinity,
            },
        }
    }

    /// Coefficient-wise derivative.
    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Poly::new(coeffs)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Poly::new(coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        Poly::new(coeffs)
    }

    pub fn scale(&self, c: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }

    /// Taylor coefficients of `p(z0 + w)` as a polynomial in `w`, computed
    /// by repeated synthetic division. Exact up to rounding.
    pub fn shift(&self, z0: Complex64) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let n = self.coeffs.len();
        let mut work = self.coeffs.clone();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for slot in out.iter_mut() {
            // one synthetic division of `work` by (z - z0)
            let mut rem = Complex64::new(0.0, 0.0);
            for k in (0..work.len()).rev() {
                let new = work[k] + rem * z0;
                rem = new;
                work[k] = new;
            }
            *slot = work.remove(0);
            if work.is_empty() {
                break;
            }
        }
        Poly { coeffs: out }
    }

    /// First `k + 1` Taylor coefficients of `p` at `z0`.
    pub fn jet(&self, z0: Complex64, k: usize) -> Vec<Complex64> {
        let shifted = self.shift(z0);
        (0..=k).map(|j| shifted.coeff(j)).collect()
    }

    /// Value of the k-th derivative at z0.
    pub fn derivative_at(&self, z0: Complex64, k: usize) -> Complex64 {
        let jet = self.jet(z0, k);
        let mut fact = 1.0;
        for j in 1..=k {
            fact *= j as f64;
        }
        jet[k] * fact
    }
}

/// Taylor coefficients of the quotient `num/den` at `z0` up to order `k`.
/// Fails when `z0` is within relative tolerance of a pole.
pub fn rat_jet(num: &Poly, den: &Poly, z0: Complex64, k: usize) -> Result<Vec<Complex64>> {
    let a = num.jet(z0, k);
    let b = den.jet(z0, k);
    let scale = den.coeff_scale().max(1e-300);
    let b0 = b[0];
    if b0.norm() <= 1e-13 * scale * 1f64.max(z0.norm()).powi(den.degree().unwrap_or(0) as i32) {
        return Err(Error::NearPole {
            dist: b0.norm() / scale,
        });
    }
    let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
    for j in 0..=k {
        let mut s = a[j];
        for i in 1..=j {
            s -= b[i] * c[j - i];
        }
        c[j] = s / b0;
    }
    Ok(c)
}

/// Factorial as f64; fine for the small orders used here.
pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product::<f64>().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_root_by_construction() {
        // z^2 + 1 at i
        let p = Poly::from_reals(&[1.0, 0.0, 1.0]);
        assert!(p.eval(c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_zero_poly() {
        let p = Poly::zero();
        assert_eq!(p.eval(c(5.0, 0.0)), c(0.0, 0.0));
        assert_eq!(p.eval_pt(Pt::finite(5.0, 0.0)), Pt::finite(0.0, 0.0));
    }

    #[test]
    fn eval_at_infinity() {
        // 3z^3 - 2
        let p = Poly::from_reals(&[-2.0, 0.0, 0.0, 3.0]);
        assert_eq!(p.eval_pt(Pt::Infinity), Pt::Infinity);
        let q = Poly::from_reals(&[7.0]);
        assert_eq!(q.eval_pt(Pt::Infinity), Pt::finite(7.0, 0.0));
    }

    #[test]
    fn derivative_cases() {
        let p = Poly::from_reals(&[1.0, 0.0, 1.0]); // z^2+1
        assert_eq!(p.derivative(), Poly::from_reals(&[0.0, 2.0]));
        let q = Poly::from_reals(&[7.0]);
        assert!(q.derivative().is_zero());
        let r = Poly::from_reals(&[0.0, -2.0, 0.0, 0.0, 1.0]); // z^4 - 2z
        assert_eq!(r.derivative(), Poly::from_reals(&[-2.0, 0.0, 0.0, 4.0]));
    }

    #[test]
    fn homogeneous_evaluation_matches_affine() {
        let p = Poly::new(vec![c(1.0, -2.0), c(0.5, 0.0), c(0.0, 3.0)]);
        for &z in &[c(0.3, -0.7), c(-2.0, 1.0), c(4.0, 4.0)] {
            let s = 1f64.max(z.norm());
            let x = z / s;
            let y = c(1.0 / s, 0.0);
            for pad in 2..=4 {
                let hom = p.eval_homogeneous(x, y, pad);
                let affine = p.eval(z) * y.powu(pad as u32);
                assert!((hom - affine).norm() < 1e-13 * affine.norm().max(1.0));
            }
        }
    }

    #[test]
    fn shift_matches_direct_evaluation() {
        let p = Poly::new(vec![c(1.0, -2.0), c(0.5, 0.0), c(0.0, 3.0), c(2.0, 1.0)]);
        let z0 = c(0.7, -0.3);
        let s = p.shift(z0);
        for &w in &[c(0.1, 0.2), c(-1.0, 0.5), c(2.0, -2.0)] {
            let direct = p.eval(z0 + w);
            let shifted = s.eval(w);
            assert!((direct - shifted).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn jet_gives_derivatives() {
        // p = z^4: p''(2) = 12 * 4 = 48
        let p = Poly::from_reals(&[0.0, 0.0, 0.0, 0.0, 1.0]);
        let d2 = p.derivative_at(c(2.0, 0.0), 2);
        assert!((d2 - c(48.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn rational_jet_matches_derivatives() {
        // f = (z^2+1)/z at z0 = 2: f = z + 1/z, f' = 1 - 1/z^2, f'' = 2/z^3
        let num = Poly::from_reals(&[1.0, 0.0, 1.0]);
        let den = Poly::from_reals(&[0.0, 1.0]);
        let jet = rat_jet(&num, &den, c(2.0, 0.0), 2).unwrap();
        assert!((jet[0] - c(2.5, 0.0)).norm() < 1e-14);
        assert!((jet[1] - c(0.75, 0.0)).norm() < 1e-14);
        assert!((jet[2] - c(0.125, 0.0)).norm() < 1e-14); // f''/2 = 1/8
    }

    #[test]
    fn rational_jet_rejects_pole() {
        let num = Poly::from_reals(&[1.0]);
        let den = Poly::from_reals(&[0.0, 1.0]);
        assert!(rat_jet(&num, &den, c(0.0, 0.0), 1).is_err());
    }
}
