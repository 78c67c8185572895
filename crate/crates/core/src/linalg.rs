//! Dense complex linear algebra: one-sided Jacobi SVD, numerical rank with
//! spectral-gap certification, and null spaces.
//!
//! The matrices here are tiny (tens of rows), so a Jacobi sweep is both
//! simple and highly accurate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::util::{RANK_GAP_THRESHOLD, SV_RELATIVE_FLOOR};

/// Row-major complex matrix.
#[derive(Clone, Debug)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Thin singular value decomposition A = U diag(S) V^H with S descending.
/// V is always square (cols x cols); U has one column per singular value.
#[derive(Clone, Debug)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: Mat,
    pub v: Mat,
}

/// One-sided Jacobi SVD. Works on any shape; wide matrices are padded with
/// zero rows internally so the full right basis (including the null space)
/// is returned.
pub fn svd(a: &Mat) -> Svd {
    let n = a.cols;
    let m = a.rows.max(n);
    // working copy, padded to at least square
    let mut w = Mat::zeros(m, n);
    for i in 0..a.rows {
        for j in 0..n {
            w.set(i, j, a.get(i, j));
        }
    }
    let mut v = Mat::zeros(n, n);
    for j in 0..n {
        v.set(j, j, Complex64::new(1.0, 0.0));
    }

    let scale = w.frobenius().max(1e-300);
    let tol = 1e-30 * scale * scale;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                // Hermitian 2x2 Gram block of columns p, q
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let cp = w.get(i, p);
                    let cq = w.get(i, q);
                    app += cp.norm_sqr();
                    aqq += cq.norm_sqr();
                    apq += cp.conj() * cq;
                }
                if apq.norm_sqr() <= tol * 1e-2
                    || apq.norm() <= 1e-28 * (app * aqq).sqrt().max(1e-300)
                {
                    continue;
                }
                rotated = true;
                // complex Jacobi rotation diagonalizing [[app, apq],[conj(apq), aqq]]
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum_or_one() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = cos * t;
                for i in 0..m {
                    let cp = w.get(i, p);
                    let cq = w.get(i, q);
                    w.set(i, p, cp * cos - cq * phase.conj() * sin);
                    w.set(i, q, cp * phase * sin + cq * cos);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, vp * cos - vq * phase.conj() * sin);
                    v.set(i, q, vp * phase * sin + vq * cos);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // column norms are the singular values
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut singular_values = Vec::with_capacity(n);
    let mut u = Mat::zeros(m, n);
    let mut v_sorted = Mat::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        let s = norms[old_j];
        singular_values.push(s);
        for i in 0..m {
            let val = if s > 1e-300 {
                w.get(i, old_j) / s
            } else {
                Complex64::new(0.0, 0.0)
            };
            u.set(i, new_j, val);
        }
        for i in 0..n {
            v_sorted.set(i, new_j, v.get(i, old_j));
        }
    }
    Svd {
        singular_values,
        u,
        v: v_sorted,
    }
}

trait SignumOrOne {
    fn signum_or_one(&self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(&self) -> f64 {
        if *self >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Outcome of a rank decision by singular value gap.
#[derive(Clone, Debug)]
pub struct RankDecision {
    pub rank: usize,
    /// Ratio s_rank / s_(rank+1); infinite when every singular value is
    /// above the floor.
    pub gap: f64,
    /// Absolute cutoff used (relative floor times the largest value).
    pub cutoff: f64,
}

/// Certifies the numerical rank: values below `floor * s_max` count as
/// zero, and the decision is accepted only when the spectrum shows a ratio
/// of at least `gap_threshold` across the cut (or no value falls below the
/// floor at all).
pub fn certify_rank(
    singular_values: &[f64],
    gap_threshold: f64,
    floor: f64,
) -> Result<RankDecision> {
    let s_max = singular_values.first().copied().unwrap_or(0.0);
    if s_max == 0.0 {
        return Ok(RankDecision {
            rank: 0,
            gap: f64::INFINITY,
            cutoff: 0.0,
        });
    }
    let cutoff = floor * s_max;
    let rank = singular_values.iter().take_while(|&&s| s > cutoff).count();
    if rank == singular_values.len() {
        return Ok(RankDecision {
            rank,
            gap: f64::INFINITY,
            cutoff,
        });
    }
    let below = singular_values[rank];
    let gap = if below > 0.0 {
        singular_values[rank - 1] / below
    } else {
        f64::INFINITY
    };
    if gap >= gap_threshold {
        Ok(RankDecision { rank, gap, cutoff })
    } else {
        Err(Error::UncertifiableRank {
            gap,
            threshold: gap_threshold,
        })
    }
}

/// Rank decision with the library defaults.
pub fn certify_rank_default(singular_values: &[f64]) -> Result<RankDecision> {
    certify_rank(singular_values, RANK_GAP_THRESHOLD, SV_RELATIVE_FLOOR)
}

/// Orthonormal basis of the right null space of `a` (vectors x with
/// a x = 0), read off the trailing right singular vectors.
pub fn null_space(a: &Mat, rank: usize) -> Vec<Vec<Complex64>> {
    let dec = svd(a);
    (rank..a.cols)
        .map(|j| (0..a.cols).map(|i| dec.v.get(i, j)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reconstruct(dec: &Svd, rows: usize, cols: usize) -> Mat {
        let mut a = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..dec.singular_values.len() {
                    s += dec.u.get(i, k) * dec.singular_values[k] * dec.v.get(j, k).conj();
                }
                a.set(i, j, s);
            }
        }
        a
    }

    #[test]
    fn svd_of_diagonal() {
        let a = Mat::from_rows(vec![
            vec![c(3.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, -2.0)],
        ]);
        let dec = svd(&a);
        assert!((dec.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((dec.singular_values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = SplitMix64::new(17);
        for (rows, cols) in [(4, 4), (6, 3), (3, 7), (5, 5)] {
            let a = Mat::from_rows(
                (0..rows)
                    .map(|_| {
                        (0..cols)
                            .map(|_| c(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)))
                            .collect()
                    })
                    .collect(),
            );
            let dec = svd(&a);
            let b = reconstruct(&dec, rows, cols);
            let mut err = 0.0f64;
            for i in 0..rows {
                for j in 0..cols {
                    err = err.max((a.get(i, j) - b.get(i, j)).norm());
                }
            }
            assert!(
                err < 1e-12,
                "reconstruction error {err:.3e} for {rows}x{cols}"
            );
            // V is unitary
            for p in 0..cols {
                for q in 0..cols {
                    let dot: Complex64 = (0..cols)
                        .map(|i| dec.v.get(i, p).conj() * dec.v.get(i, q))
                        .sum();
                    let expect = if p == q { 1.0 } else { 0.0 };
                    assert!((dot.norm() - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rank_one_matrix() {
        // outer product of [1, i] and [2, -1, 3]
        let u = [c(1.0, 0.0), c(0.0, 1.0)];
        let v = [c(2.0, 0.0), c(-1.0, 0.0), c(3.0, 0.0)];
        let a = Mat::from_rows(
            u.iter()
                .map(|&ui| v.iter().map(|&vj| ui * vj).collect())
                .collect(),
        );
        let dec = svd(&a);
        let d = certify_rank_default(&dec.singular_values).unwrap();
        assert_eq!(d.rank, 1);
        let null = null_space(&a, 1);
        assert_eq!(null.len(), 2);
        for x in &null {
            let ax = a.mul_vec(x);
            assert!(ax.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
        }
    }

    #[test]
    fn uncertifiable_spectrum_is_reported() {
        // singular values with no decisive gap around the floor
        let s = vec![1.0, 1e-7, 5e-8, 1e-9];
        assert!(matches!(
            certify_rank(&s, 1e4, 1e-8),
            Err(Error::UncertifiableRank { .. })
        ));
    }

    #[test]
    fn left_kernel_through_transpose() {
        // rows: r2 = 2 * r1 => left kernel contains (2, -1) up to scale
        let a = Mat::from_rows(vec![
            vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)],
            vec![c(2.0, 0.0), c(0.0, 2.0), c(4.0, -2.0)],
        ]);
        let at = a.transpose();
        let dec = svd(&at);
        let d = certify_rank_default(&dec.singular_values).unwrap();
        assert_eq!(d.rank, 1);
        let kernel = null_space(&at, d.rank);
        assert_eq!(kernel.len(), 1);
        let k = &kernel[0];
        // a^T k = 0 means sum_k k_i * row_i = 0
        let combo: Vec<Complex64> = (0..3)
            .map(|j| k[0] * a.get(0, j) + k[1] * a.get(1, j))
            .collect();
        assert!(combo.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }
}
