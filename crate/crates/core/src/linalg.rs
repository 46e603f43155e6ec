//! Small dense vector/matrix helpers used by the field types and the grid
//! verifiers. Dimensions here are the state dimension `n` (a handful), so a
//! plain row-major buffer and a Jacobi eigensolver are all that is needed.

use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

/// `out += s * a`
#[inline]
pub fn axpy<T: Scalar>(s: T, a: &[T], out: &mut [T]) {
    for (o, &x) in out.iter_mut().zip(a) {
        *o += s * x;
    }
}

pub fn scale<T: Scalar>(s: T, a: &mut [T]) {
    for x in a.iter_mut() {
        *x *= s;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn all_finite<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn fill(&mut self, v: T) {
        self.data.fill(v);
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Reshape in place; reuses the buffer when the element count matches.
    pub fn resize(&mut self, rows: usize, cols: usize) {
        self.data.resize(rows * cols, T::zero());
        self.rows = rows;
        self.cols = cols;
    }

    /// `out = self * v`
    pub fn matvec_into(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            out[i] = dot(self.row(i), v);
        }
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.matvec_into(v, &mut out);
        out
    }

    /// Frobenius norm squared, i.e. `tr(A A^T)`.
    pub fn frobenius_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x)
    }

    /// Symmetric part `(A + A^T)/2` of a square matrix.
    pub fn symmetric_part(&self) -> Mat<T> {
        assert_eq!(self.rows, self.cols);
        let half = T::one() / (T::one() + T::one());
        let mut s = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = (self[(i, j)] + self[(j, i)]) * half;
            }
        }
        s
    }

    /// `A^T A`
    pub fn gram(&self) -> Mat<T> {
        let mut g = Self::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in 0..self.cols {
                let mut s = T::zero();
                for k in 0..self.rows {
                    s += self[(k, i)] * self[(k, j)];
                }
                g[(i, j)] = s;
            }
        }
        g
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(m: &Mat<T>) -> Vec<T> {
    assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    let mut a = m.clone();
    let tol = T::epsilon().sqrt() * T::from_usize(n * n).unwrap();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let scale = a.frobenius_sq() + T::one();
        if off <= tol * tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let two = T::one() + T::one();
                let theta = (aqq - app) / (two * apq);
                let t = {
                    let s = theta.abs() + (theta * theta + T::one()).sqrt();
                    let t = T::one() / s;
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue<T: Scalar>(m: &Mat<T>) -> T {
    symmetric_eigenvalues(m)[0]
}

/// Operator (spectral) norm of a general rectangular matrix.
pub fn operator_norm<T: Scalar>(m: &Mat<T>) -> T {
    let eig = symmetric_eigenvalues(&m.gram());
    eig.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matvec_identity() {
        let m = Mat::<f64>::identity(3);
        let v = vec![1.0, -2.0, 0.5];
        assert_eq!(m.matvec(&v), v);
    }

    #[test]
    fn jacobi_diagonalizes_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 0)] = 2.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(1, 1)] = 2.0;
        let e = symmetric_eigenvalues(&m);
        assert_relative_eq!(e[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn operator_norm_of_scaled_rotation() {
        // 3 * rotation has operator norm 3.
        let th: f64 = 0.7;
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 0)] = 3.0 * th.cos();
        m[(0, 1)] = -3.0 * th.sin();
        m[(1, 0)] = 3.0 * th.sin();
        m[(1, 1)] = 3.0 * th.cos();
        assert_relative_eq!(operator_norm(&m), 3.0, max_relative = 1e-10);
    }

    #[test]
    fn frobenius_is_trace_of_gram() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![0.0, -1.0]]);
        let g = m.gram();
        assert_relative_eq!(m.frobenius_sq(), g[(0, 0)] + g[(1, 1)], max_relative = 1e-14);
    }
}
