//! Small shared utilities: deterministic pseudo-random streams and default
//! tolerances used across the library.

/// SplitMix64 stream. Deterministic across platforms, good enough for
/// jittering sample points and picking generic Moebius transformations.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Default clustering tolerance for roots and critical points (relative).
pub const ROOT_CLUSTER_TOL: f64 = 1e-6;
/// Default orbit coincidence tolerance (relative to orbit scale).
pub const ORBIT_COINCIDE_TOL: f64 = 1e-9;
/// Default search horizon for numeric orbit models.
pub const NUMERIC_HORIZON: usize = 200;
/// Default search horizon for symbolic orbit models.
pub const SYMBOLIC_HORIZON: usize = 64;
/// Singular-value ratio that certifies a rank decision.
pub const RANK_GAP_THRESHOLD: f64 = 1e4;
/// Relative floor below which singular values count as zero.
pub const SV_RELATIVE_FLOOR: f64 = 1e-8;
/// Modulus ratio beyond which an evaluation is reported as infinity.
pub const INFINITY_RATIO: f64 = 1e12;
/// Base step for central finite differences on coefficients.
pub const FD_STEP: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn splitmix_f64_in_unit_interval() {
        let mut g = SplitMix64::new(7);
        for _ in 0..1000 {
            let x = g.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }
}
