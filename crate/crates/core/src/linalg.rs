//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, SVD, UPLO};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `max_ij |(U†U − 1)_ij|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &CMatrix::identity(n, n))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Least-squares solution of the real system `A x = b` and its residual
/// norm; `None` when `A` is numerically rank deficient.
pub fn lstsq(a: &DMatrix<f64>, b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let (m, n) = a.shape();
    if m < n || b.len() != m || n == 0 {
        return None;
    }
    let (sigma, u, v) = svd(&a.map(Complex64::from));
    if sigma[n - 1] <= RANK_TOL * sigma[0] {
        return None;
    }
    // complex singular vectors may carry per-column phases even for real A
    let x: Vec<f64> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let ub: Complex64 = (0..m).map(|i| u[(i, k)].conj() * b[i]).sum();
                    v[(j, k)] * ub / sigma[k]
                })
                .sum::<Complex64>()
                .re
        })
        .collect();
    let residual = (0..m)
        .map(|i| ((0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>() - b[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    Some((x, residual))
}

/// Relative singular-value floor for [`lstsq`].
pub const RANK_TOL: f64 = 1e-10;

fn to_ndarray(m: &CMatrix) -> Array2<Complex64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()).f(), |(i, j)| m[(i, j)])
}

fn from_ndarray(a: &Array2<Complex64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()).scale(0.5);
    let (values, vectors) = to_ndarray(&sym).eigh(UPLO::Lower).expect("LAPACK Hermitian eigensolver failed");
    (values.to_vec(), from_ndarray(&vectors))
}

/// Full singular-value decomposition `M = U diag(σ) V†` with σ descending.
pub fn svd(m: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let (u, sigma, vt) = to_ndarray(m).svd(true, true).expect("LAPACK SVD failed");
    let u = from_ndarray(&u.expect("requested U"));
    let v = from_ndarray(&vt.expect("requested V^H")).adjoint();
    (sigma.to_vec(), u, v)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Small negative eigenvalues from round-off are clipped.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let root = CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::from(v.max(0.0).sqrt())),
    ));
    &vectors * root * vectors.adjoint()
}

pub fn outer(a: &[Complex64], b: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Standard basis vector `e_index` of length `dim`.
pub fn basis_vector(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}

/// `⟨a|b⟩` for plain coefficient vectors.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase fix
/// on R's diagonal.
pub fn haar_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random normalized complex vector (uniform on the sphere).
pub fn random_state<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im)
        })
        .collect();
    let n = norm_sq(&v).sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Random full-rank density matrix `G G† / Tr(G G†)`.
pub fn random_density<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    let rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    rho.unscale(tr)
}

/// Serializes a matrix as a list of rows of `[re, im]` pairs.
pub mod serde_rows {
    use super::CMatrix;
    use num_complex::Complex64;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(d)?;
        from_rows(&rows).ok_or_else(|| D::Error::custom("ragged matrix rows"))
    }

    pub fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Option<CMatrix> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return None;
        }
        Some(CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in 1..6 {
            let u = haar_unitary(d, &mut rng);
            assert!(unitarity_residual(&u) < 1e-12);
        }
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(4, &mut rng);
        let s = psd_sqrt(&rho);
        assert!(max_abs_diff(&(&s * &s), &rho) < 1e-12);
    }

    #[test]
    fn svd_recomposes_degenerate_spectrum() {
        // rank-3 matrix with a doubly degenerate singular value
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = haar_unitary(6, &mut rng);
        let b = haar_unitary(6, &mut rng);
        let s = [0.7, 0.5, 0.5, 0.0, 0.0, 0.0];
        let d = CMatrix::from_diagonal(&CVector::from_iterator(6, s.iter().map(|&x| c(x, 0.0))));
        let m = &a * d * b.adjoint();
        let (sigma, u, v) = svd(&m);
        for (x, y) in sigma.iter().zip(s) {
            assert!((x - y).abs() < 1e-12);
        }
        let d = CMatrix::from_diagonal(&CVector::from_iterator(6, sigma.iter().map(|&x| c(x, 0.0))));
        assert!(max_abs_diff(&(&u * d * v.adjoint()), &m) < 1e-12);
        assert!(unitarity_residual(&u) < 1e-12 && unitarity_residual(&v) < 1e-12);
    }

    #[test]
    fn kron_of_identities() {
        let a = CMatrix::identity(2, 2);
        let b = CMatrix::identity(3, 3);
        assert_eq!(kron(&a, &b), CMatrix::identity(6, 6));
    }
}
