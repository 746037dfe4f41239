//! Small dense complex matrices: Hermitian eigendecomposition by cyclic
//! Jacobi rotations and linear solves by Gaussian elimination.
//!
//! Array sizes here are tiny (8×8), so both are plain O(n³) loops.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix rows must form a square".into()));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// `v·v^H`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &CMatrix, scale: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * scale;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|A_ij − conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues in descending order and the matching orthonormal
/// eigenvectors as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.column(i)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Input must be Hermitian within `1e-6·max(1, ‖A‖_F)`.
pub fn hermitian_eigendecomposition(matrix: &CMatrix) -> Result<Eigen> {
    let n = matrix.dim();
    let scale = matrix.frobenius_norm();
    if matrix.hermitian_defect() > 1e-6 * scale.max(1.0) {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (defect {:.3e})",
            matrix.hermitian_defect()
        )));
    }

    let mut a = matrix.clone();
    // symmetrize exactly so rotations act on a true Hermitian matrix
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let tol = 1e-15 * scale.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= tol * 1e-3 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // phase-rotate to a real symmetric 2×2, then a classic rotation
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s], [-s·conj(phase), c·conj(phase)]] on (p, q)
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;

                // A ← A·G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                // A ← G^H·A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                // V ← V·G
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(Eigen { values, vectors })
}

/// Solves `A·x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-14·max|A|`.
pub fn solve(matrix: &CMatrix, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = matrix.dim();
    assert_eq!(rhs.len(), n, "right-hand side length");
    let mut a = matrix.clone();
    let mut b = rhs.to_vec();
    let max_abs = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = 1e-14 * max_abs.max(f64::MIN_POSITIVE);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        if a[(pivot, col)].norm() <= tiny {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(pivot, k)];
                a[(pivot, k)] = tmp;
            }
            b.swap(col, pivot);
        }
        let inv = 1.0 / a[(col, col)];
        for row in col + 1..n {
            let factor = a[(row, col)] * inv;
            if factor == ZERO {
                continue;
            }
            for k in col..n {
                let sub = factor * a[(col, k)];
                a[(row, k)] -= sub;
            }
            let sub = factor * b[col];
            b[row] -= sub;
        }
    }
    let mut x = vec![ZERO; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[(row, k)] * x[k];
        }
        x[row] = acc / a[(row, row)];
    }
    Some(x)
}

/// Matrix inverse via `n` solves against the identity columns.
pub fn invert(matrix: &CMatrix) -> Option<CMatrix> {
    let n = matrix.dim();
    let mut inv = CMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![ZERO; n];
        e[j] = Complex64::new(1.0, 0.0);
        let col = solve(matrix, &e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Some(inv)
}

/// `x^H·y`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(seed: u64, n: usize) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.random_range(-2.0..2.0), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn check_decomposition(a: &CMatrix, eig: &Eigen) {
        let n = a.dim();
        let norm = a.frobenius_norm();
        for i in 0..n {
            let v = eig.vector(i);
            let av = a.mul_vec(&v);
            let resid: f64 = av
                .iter()
                .zip(&v)
                .map(|(x, y)| (x - y * eig.values[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid < 1e-6 * norm.max(1.0), "residual {resid}");
            for j in 0..n {
                let d = inner(&v, &eig.vector(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - Complex64::new(want, 0.0)).norm() < 1e-8);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = hermitian_eigendecomposition(&CMatrix::identity(8)).unwrap();
        assert!(eig.values.iter().all(|&l| (l - 1.0).abs() < 1e-12));
        check_decomposition(&CMatrix::identity(8), &eig);
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let a = CMatrix::from_real_diagonal(&[1.0, 3.0, 2.0, 0.5]);
        let eig = hermitian_eigendecomposition(&a).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0, 0.5]);
        assert!((eig.vector(0)[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for seed in 0..20 {
            let a = random_hermitian(seed, 8);
            let eig = hermitian_eigendecomposition(&a).unwrap();
            check_decomposition(&a, &eig);
            let lambda = CMatrix::from_real_diagonal(&eig.values);
            let recon = eig.vectors.matmul(&lambda).matmul(&eig.vectors.adjoint());
            let mut diff = recon.clone();
            diff.add_scaled(&a, -1.0);
            assert!(diff.frobenius_norm() < 1e-6 * a.frobenius_norm());
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = CMatrix::identity(3);
        a[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            hermitian_eigendecomposition(&a),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn solve_and_invert() {
        let mut a = random_hermitian(42, 8);
        for i in 0..8 {
            a[(i, i)] += Complex64::new(10.0, 0.0);
        }
        let inv = invert(&a).unwrap();
        let prod = a.matmul(&inv);
        let mut diff = prod;
        diff.add_scaled(&CMatrix::identity(8), -1.0);
        assert!(diff.frobenius_norm() < 1e-12);
        assert!(solve(&CMatrix::zeros(3), &[ZERO; 3]).is_none());
    }
}
