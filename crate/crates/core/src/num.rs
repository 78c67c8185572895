//! Points on the extended complex plane and the distances used for orbit
//! coincidence tests.

use num_complex::Complex64;

/// A point on the Riemann sphere: either a finite complex number or the
/// point at infinity. Infinity is a first-class value so orbits through
/// poles stay well-defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pt {
    Finite(Complex64),
    Infinity,
}

impl Pt {
    pub fn finite(re: f64, im: f64) -> Self {
        Pt::Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Pt::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            Pt::Finite(z) => Some(*z),
            Pt::Infinity => None,
        }
    }

    /// Scale-aware distance used for orbit coincidence: `|z - w|` divided by
    /// `max(1, |z|, |w|)` for finite points. Two exact infinities coincide;
    /// a finite point never coincides with infinity (poles are detected
    /// exactly during evaluation, so infinity is a tagged value, not a
    /// large number).
    pub fn coincide_dist(&self, other: &Pt) -> f64 {
        match (self, other) {
            (Pt::Finite(z), Pt::Finite(w)) => (z - w).norm() / 1f64.max(z.norm()).max(w.norm()),
            (Pt::Infinity, Pt::Infinity) => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// Chordal distance on the sphere (range [0, 2]).
    pub fn chordal_dist(&self, other: &Pt) -> f64 {
        match (self, other) {
            (Pt::Finite(z), Pt::Finite(w)) => {
                2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()).sqrt() * (1.0 + w.norm_sqr()).sqrt())
            }
            (Pt::Infinity, Pt::Infinity) => 0.0,
            (Pt::Finite(z), Pt::Infinity) | (Pt::Infinity, Pt::Finite(z)) => {
                2.0 / (1.0 + z.norm_sqr()).sqrt()
            }
        }
    }
}

impl From<Complex64> for Pt {
    fn from(z: Complex64) -> Self {
        Pt::Finite(z)
    }
}

impl std::fmt::Display for Pt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pt::Finite(z) => write!(f, "{:.12e}{:+.12e}i", z.re, z.im),
            Pt::Infinity => write!(f, "inf"),
        }
    }
}

/// Relative distance between finite complex numbers, `|z - w| / max(1, |z|, |w|)`.
pub fn rel_dist(z: Complex64, w: Complex64) -> f64 {
    (z - w).norm() / 1f64.max(z.norm()).max(w.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincidence_rules() {
        let a = Pt::finite(1.0, 0.0);
        let b = Pt::finite(1.0 + 1e-12, 0.0);
        assert!(a.coincide_dist(&b) < 1e-9);
        assert_eq!(Pt::Infinity.coincide_dist(&Pt::Infinity), 0.0);
        assert_eq!(a.coincide_dist(&Pt::Infinity), f64::INFINITY);
        // large magnitudes are compared relatively
        let u = Pt::finite(1e15, 0.0);
        let v = Pt::finite(2e15, 0.0);
        assert!(u.coincide_dist(&v) > 0.3);
    }

    #[test]
    fn chordal_symmetry() {
        let a = Pt::finite(3.0, -1.0);
        let b = Pt::finite(-0.5, 2.0);
        assert!((a.chordal_dist(&b) - b.chordal_dist(&a)).abs() < 1e-15);
        assert!(a.chordal_dist(&Pt::Infinity) > 0.0);
    }
}
