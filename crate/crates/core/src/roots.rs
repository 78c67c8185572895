//! Simultaneous polynomial root finding (Aberth-Ehrlich) with greedy
//! multiplicity clustering.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Poly;

/// A cluster of nearby roots treated as one root with multiplicity.
#[derive(Clone, Debug)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
    pub radius: f64,
}

const MAX_ITERS: usize = 300;

/// All roots of `p`, repeated by numerical multiplicity, unordered beyond a
/// deterministic sort. Exact zero roots at the origin are deflated first so
/// monomial factors keep exact multiplicity.
pub fn all_roots(p: &Poly) -> Result<Vec<Complex64>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let deg = p.degree().unwrap();
    if deg == 0 {
        return Ok(Vec::new());
    }
    let scale = p.coeff_scale();

    // Deflate exact (relative to scale) zero roots at the origin.
    let mut low = 0usize;
    while low < deg && p.coeff(low).norm() <= 1e-14 * scale {
        low += 1;
    }
    let mut roots = vec![Complex64::new(0.0, 0.0); low];
    let reduced = Poly::new(p.coeffs()[low..].to_vec());
    if reduced.degree() == Some(0) {
        sort_roots(&mut roots);
        return Ok(roots);
    }
    roots.extend(aberth(&reduced)?);
    sort_roots(&mut roots);
    Ok(roots)
}

fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
}

/// Aberth-Ehrlich iteration for a polynomial with nonzero constant term.
fn aberth(p: &Poly) -> Result<Vec<Complex64>> {
    let deg = p.degree().unwrap();
    let dp = p.derivative();
    let lead = p.leading();

    // Initial guesses on a perturbed circle. The radius interpolates between
    // the geometric mean of the root moduli and the Cauchy bound.
    let cauchy = 1.0
        + (0..deg)
            .map(|k| (p.coeff(k) / lead).norm())
            .fold(0.0, f64::max);
    let geo = (p.coeff(0) / lead).norm().powf(1.0 / deg as f64);
    let radius = (geo * cauchy).sqrt().clamp(1e-6, cauchy);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.35) / deg as f64 + 0.42;
            radius * Complex64::new(theta.cos(), theta.sin())
        })
        .collect();

    let scale = p.coeff_scale();
    for _iter in 0..MAX_ITERS {
        let mut max_step = 0.0f64;
        for k in 0..deg {
            let pv = p.eval(z[k]);
            let dv = dp.eval(z[k]);
            if pv.norm() <= 1e-15 * scale * 1f64.max(z[k].norm()).powi(deg as i32) {
                continue;
            }
            let newton = if dv.norm() > 0.0 { pv / dv } else { pv };
            let mut repulse = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 1e-300 {
                        repulse += Complex64::new(1.0, 0.0) / diff;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulse;
            let step = if denom.norm() > 1e-300 {
                newton / denom
            } else {
                newton
            };
            z[k] -= step;
            max_step = max_step.max(step.norm() / 1f64.max(z[k].norm()));
        }
        if max_step < 1e-14 {
            return Ok(z);
        }
    }

    // Accept slow convergence when residuals are already at rounding level;
    // multiple roots only converge like the multiplicity-th root of eps.
    let max_residual = z
        .iter()
        .map(|&zk| p.eval(zk).norm() / (scale * 1f64.max(zk.norm()).powi(deg as i32)))
        .fold(0.0, f64::max);
    if max_residual < 1e-10 {
        return Ok(z);
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERS,
        max_residual,
    })
}

/// Roots grouped into clusters at relative distance `tol`, with the center
/// refined as the cluster mean. The multiplicities always sum to the degree.
pub fn poly_roots(p: &Poly, tol: f64) -> Result<Vec<RootCluster>> {
    let roots = all_roots(p)?;
    Ok(cluster_roots(&roots, tol))
}

/// Greedy transitive clustering at relative distance `tol`.
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<RootCluster> {
    let n = roots.len();
    let mut assigned = vec![usize::MAX; n];
    let mut next_cluster = 0usize;
    for i in 0..n {
        if assigned[i] != usize::MAX {
            continue;
        }
        // breadth-first sweep so clustering is transitive
        assigned[i] = next_cluster;
        let mut frontier = vec![i];
        while let Some(k) = frontier.pop() {
            for j in 0..n {
                if assigned[j] == usize::MAX {
                    let d = (roots[k] - roots[j]).norm()
                        / 1f64.max(roots[k].norm()).max(roots[j].norm());
                    if d <= tol {
                        assigned[j] = next_cluster;
                        frontier.push(j);
                    }
                }
            }
        }
        next_cluster += 1;
    }

    let mut clusters = Vec::with_capacity(next_cluster);
    for c in 0..next_cluster {
        let members: Vec<Complex64> = (0..n)
            .filter(|&k| assigned[k] == c)
            .map(|k| roots[k])
            .collect();
        let center = members.iter().sum::<Complex64>() / members.len() as f64;
        let radius = members
            .iter()
            .map(|z| (z - center).norm())
            .fold(0.0, f64::max);
        clusters.push(RootCluster {
            center,
            multiplicity: members.len(),
            radius,
        });
    }
    clusters.sort_by(|a, b| {
        a.center
            .re
            .partial_cmp(&b.center.re)
            .unwrap()
            .then(a.center.im.partial_cmp(&b.center.im).unwrap())
    });
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_roots() {
        let p = Poly::from_reals(&[1.0, 0.0, 1.0]); // z^2 + 1
        let clusters = poly_roots(&p, 1e-6).unwrap();
        assert_eq!(clusters.len(), 2);
        assert!(clusters
            .iter()
            .any(|r| (r.center - c(0.0, 1.0)).norm() < 1e-10));
        assert!(clusters
            .iter()
            .any(|r| (r.center - c(0.0, -1.0)).norm() < 1e-10));
        assert!(clusters.iter().all(|r| r.multiplicity == 1));
    }

    #[test]
    fn cubic_with_zero_root() {
        let p = Poly::from_reals(&[0.0, -1.0, 0.0, 1.0]); // z^3 - z
        let clusters = poly_roots(&p, 1e-6).unwrap();
        assert_eq!(clusters.len(), 3);
        for target in [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)] {
            assert!(clusters.iter().any(|r| (r.center - target).norm() < 1e-10));
        }
    }

    #[test]
    fn triple_root_clusters() {
        // (z-2)^3 = z^3 - 6 z^2 + 12 z - 8; root accuracy is only eps^(1/3),
        // so cluster with a tolerance above that.
        let p = Poly::from_reals(&[-8.0, 12.0, -6.0, 1.0]);
        let clusters = poly_roots(&p, 1e-4).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].multiplicity, 3);
        assert!((clusters[0].center - c(2.0, 0.0)).norm() < 1e-5);
    }

    // Independent oracle for the triple cluster: eigenvalues of the
    // companion matrix via unshifted QR iteration.
    fn companion_eigenvalues(p: &Poly, iters: usize) -> Vec<Complex64> {
        let n = p.degree().unwrap();
        let lead = p.leading();
        // companion matrix (column convention)
        let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 1..n {
            a[i][i - 1] = Complex64::new(1.0, 0.0);
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[n - 1] = -p.coeff(i) / lead;
        }
        for _ in 0..iters {
            // Gram-Schmidt QR: A = QR, then A <- RQ
            let mut q = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            let mut r = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            for j in 0..n {
                let mut v: Vec<Complex64> = (0..n).map(|i| a[i][j]).collect();
                for k in 0..j {
                    let proj: Complex64 = (0..n).map(|i| q[i][k].conj() * a[i][j]).sum();
                    r[k][j] = proj;
                    for i in 0..n {
                        v[i] -= proj * q[i][k];
                    }
                }
                let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                r[j][j] = Complex64::new(norm, 0.0);
                for i in 0..n {
                    q[i][j] = if norm > 0.0 {
                        v[i] / norm
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
            }
            let mut next = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = (0..n).map(|k| r[i][k] * q[k][j]).sum();
                }
            }
            a = next;
        }
        (0..n).map(|i| a[i][i]).collect()
    }

    #[test]
    fn triple_root_agrees_with_companion_oracle() {
        // The defective eigenvalue makes the unshifted QR diagonal converge
        // like O(1/k), so the oracle clusters coarsely; its cluster mean is
        // still accurate by symmetry.
        let p = Poly::from_reals(&[-8.0, 12.0, -6.0, 1.0]);
        let eigs = companion_eigenvalues(&p, 800);
        let oracle = cluster_roots(&eigs, 2e-2);
        assert_eq!(oracle.len(), 1);
        assert_eq!(oracle[0].multiplicity, 3);
        assert!((oracle[0].center - c(2.0, 0.0)).norm() < 1e-6);
        let ours = poly_roots(&p, 1e-4).unwrap();
        assert_eq!(ours[0].multiplicity, oracle[0].multiplicity);
        assert!((ours[0].center - oracle[0].center).norm() < 1e-5);
    }

    #[test]
    fn random_well_separated_roots_recovered() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..20 {
            let deg = 2 + (rng.next_u64() % 11) as usize; // up to 12
            let mut roots: Vec<Complex64> = Vec::new();
            'outer: while roots.len() < deg {
                let cand = c(rng.range(-3.0, 3.0), rng.range(-3.0, 3.0));
                for &r in &roots {
                    if (cand - r).norm() < 0.35 {
                        continue 'outer;
                    }
                }
                roots.push(cand);
            }
            let p = Poly::from_roots(&roots);
            let found = all_roots(&p).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            for &r in &roots {
                let best = found
                    .iter()
                    .map(|z| (z - r).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    best < 1e-8 * 1f64.max(r.norm()),
                    "trial {trial}: root {r} missed by {best:.3e}"
                );
            }
            // residual at simple roots
            let scale = p.coeff_scale();
            for cl in poly_roots(&p, 1e-6).unwrap() {
                if cl.multiplicity == 1 {
                    assert!(
                        p.eval(cl.center).norm()
                            <= 1e-7 * scale * 1f64.max(cl.center.norm()).powi(deg as i32)
                    );
                }
            }
        }
    }

    #[test]
    fn multiplicities_always_sum_to_degree() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..30 {
            let deg = 1 + (rng.next_u64() % 9) as usize;
            let coeffs: Vec<Complex64> = (0..=deg)
                .map(|_| c(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)))
                .collect();
            let p = Poly::new(coeffs);
            if p.degree().unwrap_or(0) == 0 {
                continue;
            }
            let clusters = poly_roots(&p, 1e-6).unwrap();
            let total: usize = clusters.iter().map(|r| r.multiplicity).sum();
            assert_eq!(total, p.degree().unwrap());
        }
    }

    #[test]
    fn zero_polynomial_is_an_error() {
        assert!(matches!(
            all_roots(&Poly::zero()),
            Err(Error::ZeroPolynomial)
        ));
    }
}
