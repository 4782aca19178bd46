//! Small dense linear algebra on slices and row-major buffers.
//!
//! Problem sizes here are tiny (a few hundred unknowns at most), so plain
//! loops are adequate and keep the routines generic over [`Scalar`].

use crate::scalar::Scalar;

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

pub fn sub<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<F: Scalar>(a: &[F], s: F) -> Vec<F> {
    a.iter().map(|&x| x * s).collect()
}

/// `a + s * b`
pub fn axpy<F: Scalar>(a: &[F], s: F, b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn distance_sq<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

pub fn distance<F: Scalar>(a: &[F], b: &[F]) -> F {
    distance_sq(a, b).sqrt()
}

/// Point on the segment `a + t (b - a)`.
pub fn lerp<F: Scalar>(a: &[F], b: &[F], t: F) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
}

/// Cosine of the angle between two vectors; `None` if either is zero.
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> Option<F> {
    let na = norm(a);
    let nb = norm(b);
    if na == F::zero() || nb == F::zero() {
        return None;
    }
    Some(dot(a, b) / (na * nb))
}

/// Solves `A x = b` for a symmetric positive definite `A` stored row-major
/// (n x n). Returns `None` when the Cholesky factorization breaks down,
/// including pivots lost to cancellation.
pub fn solve_spd<F: Scalar>(a: &[F], b: &[F]) -> Option<Vec<F>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let cancel = F::epsilon() * F::from_usize_lossy(4 * n.max(1));
    let mut l = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > cancel * a[i * n + i]) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![F::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Solves an SPD system, adding a growing diagonal ridge until the
/// factorization succeeds. Returns the solution and the ridge used
/// (zero when none was needed).
pub fn solve_spd_jittered<F: Scalar>(a: &[F], b: &[F]) -> Option<(Vec<F>, F)> {
    if let Some(x) = solve_spd(a, b) {
        return Some((x, F::zero()));
    }
    let n = b.len();
    let trace: F = (0..n).map(|i| a[i * n + i].abs()).sum();
    let base = (trace / F::from_usize_lossy(n.max(1))).max(F::one());
    let mut ridge = base * F::lit(1e-10);
    for _ in 0..12 {
        let mut shifted = a.to_vec();
        for i in 0..n {
            shifted[i * n + i] = shifted[i * n + i] + ridge;
        }
        if let Some(x) = solve_spd(&shifted, b) {
            return Some((x, ridge));
        }
        ridge = ridge * F::lit(10.0);
    }
    None
}

/// Eigen-decomposition of a symmetric matrix (row-major, n x n) by cyclic
/// Jacobi rotations. Eigenvalues are returned in descending order; column
/// `k` of the returned row-major matrix is the eigenvector for value `k`.
pub fn symmetric_eigen<F: Scalar>(a: &[F], n: usize) -> (Vec<F>, Vec<F>) {
    let mut m = a.to_vec();
    let mut v = vec![F::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = F::one();
    }
    let eps = F::epsilon();
    for _sweep in 0..100 {
        let off: F = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: F = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= eps * eps * diag.max(F::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == F::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (F::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![F::zero(); n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = solve_spd(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0f64).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn singular_system_needs_jitter() {
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(solve_spd::<f64>(&a, &[1.0, 1.0]).is_none());
        let (_, ridge) = solve_spd_jittered::<f64>(&a, &[1.0, 1.0]).unwrap();
        assert!(ridge > 0.0);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let (vals, vecs) = symmetric_eigen::<f64>(&a, 3);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| vecs[i * 3 + k] * vals[k] * vecs[j * 3 + k]).sum();
                assert!((r - a[i * 3 + j]).abs() < 1e-10);
            }
        }
    }
}
