//! Single-photon TM register states, density matrices and photon-pair
//! (bipartite) states in a truncated mode space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::linalg::{hermitian_eigen, hermiticity_residual, norm_sq, outer, psd_sqrt, serde_rows, trace, CMatrix, ZERO};

pub const NORM_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const EIGEN_FLOOR: f64 = -1e-9;

/// Amplitudes over `|A_0⟩..|A_{d-1}⟩`, optionally followed by the green
/// (up-converted) level `|C⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterState {
    dim: usize,
    coeffs: Vec<Complex64>,
    has_green: bool,
}

impl RegisterState {
    /// Requires `Σ|c|² = 1` within [`NORM_TOL`].
    pub fn new(coeffs: Vec<Complex64>, has_green: bool) -> Result<Self> {
        let dim = coeffs.len().checked_sub(has_green as usize).filter(|&d| d > 0).ok_or_else(|| {
            TmError::Empty("register needs at least one red mode".into())
        })?;
        let n = norm_sq(&coeffs);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(TmError::NotNormalized { norm_sq: n, context: "register state".into() });
        }
        Ok(Self { dim, coeffs, has_green })
    }

    /// Rescales to unit norm.
    pub fn normalized(mut coeffs: Vec<Complex64>, has_green: bool) -> Result<Self> {
        let n = norm_sq(&coeffs).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(TmError::InvalidParameter("zero register state".into()));
        }
        coeffs.iter_mut().for_each(|z| *z /= n);
        Self::new(coeffs, has_green)
    }

    /// `|A_index⟩` in a `dim`-mode register.
    pub fn basis(dim: usize, index: usize, has_green: bool) -> Result<Self> {
        if index >= dim {
            return Err(TmError::IndexOutOfRange { index, dim });
        }
        let mut coeffs = vec![ZERO; dim + has_green as usize];
        coeffs[index] = Complex64::from(1.0);
        Self::new(coeffs, has_green)
    }

    /// All amplitude in `|C⟩`.
    pub fn green(dim: usize) -> Result<Self> {
        let mut coeffs = vec![ZERO; dim + 1];
        coeffs[dim] = Complex64::from(1.0);
        Self::new(coeffs, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_green(&self) -> bool {
        self.has_green
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn red(&self) -> &[Complex64] {
        &self.coeffs[..self.dim]
    }

    pub fn green_amplitude(&self) -> Complex64 {
        if self.has_green {
            self.coeffs[self.dim]
        } else {
            ZERO
        }
    }

    /// Same state with an (empty) green level appended.
    pub fn with_green(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        if !self.has_green {
            coeffs.push(ZERO);
        }
        Self { dim: self.dim, coeffs, has_green: true }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { matrix: outer(&self.coeffs, &self.coeffs) }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix; row `⟨A_i|`,
/// column `|A_k⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    #[serde(with = "serde_rows")]
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(TmError::InvalidDensityMatrix(format!("shape {:?} is not square", matrix.shape())));
        }
        let herm = hermiticity_residual(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(TmError::InvalidDensityMatrix(format!("hermiticity residual {herm:.3e}")));
        }
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(TmError::InvalidDensityMatrix(format!("trace {tr:.12}")));
        }
        let (values, _) = hermitian_eigen(&matrix);
        if values[0] < EIGEN_FLOOR {
            return Err(TmError::InvalidDensityMatrix(format!("negative eigenvalue {:.3e}", values[0])));
        }
        Ok(Self { matrix })
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        Self::new(outer(psi, psi))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(TmError::Empty("zero-dimensional state".into()));
        }
        Self::new(CMatrix::identity(dim, dim).unscale(dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
    rho.matrix.norm_squared()
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(TmError::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    let s = psd_sqrt(&rho.matrix);
    let inner = &s * &sigma.matrix * &s;
    let (values, _) = hermitian_eigen(&inner);
    let root: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root * root).min(1.0))
}

/// Biphoton density tensor `C_ijkl` of `ρ = Σ C_ijkl |A_i B_j⟩⟨A_k B_l|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTensor {
    d_a: usize,
    d_b: usize,
    /// Flattened in `i, j, k, l` order.
    data: Vec<Complex64>,
}

impl DensityTensor {
    pub fn from_matrix(d_a: usize, d_b: usize, rho: &CMatrix) -> Result<Self> {
        let n = d_a * d_b;
        if rho.shape() != (n, n) {
            return Err(TmError::DimensionMismatch { expected: n, got: rho.nrows() });
        }
        let mut data = Vec::with_capacity(n * n);
        for i in 0..d_a {
            for j in 0..d_b {
                for k in 0..d_a {
                    for l in 0..d_b {
                        data.push(rho[(i * d_b + j, k * d_b + l)]);
                    }
                }
            }
        }
        let t = Self { d_a, d_b, data };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let m = self.to_matrix();
        let herm = hermiticity_residual(&m);
        if herm > HERMITIAN_TOL {
            return Err(TmError::InvalidDensityMatrix(format!("tensor not Hermitian under (ij)<->(kl): {herm:.3e}")));
        }
        let tr = trace(&m).re;
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(TmError::InvalidDensityMatrix(format!("trace {tr:.12}")));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let (a, b) = (self.d_a, self.d_b);
        self.data[((i * b + j) * a + k) * b + l]
    }

    /// Matrix on the product space, row `(i, j)` = `i·d_B + j`.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.d_a * self.d_b;
        CMatrix::from_fn(n, n, |r, c| {
            self.get(r / self.d_b, r % self.d_b, c / self.d_b, c % self.d_b)
        })
    }
}

/// Post-selected photon-pair state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BipartiteState {
    /// `Σ c_ij |A_i, B_j⟩`; rows index A.
    Pure {
        #[serde(with = "serde_rows")]
        coeffs: CMatrix,
    },
    Mixed(DensityTensor),
}

impl BipartiteState {
    pub fn pure(coeffs: CMatrix) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(TmError::Empty("bipartite amplitude".into()));
        }
        let n = coeffs.norm_squared();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(TmError::NotNormalized { norm_sq: n, context: "bipartite state".into() });
        }
        Ok(Self::Pure { coeffs })
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Pure { coeffs } => coeffs.shape(),
            Self::Mixed(t) => t.dims(),
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match self {
            Self::Pure { coeffs } => {
                let (_, d_b) = coeffs.shape();
                let flat: Vec<Complex64> = (0..coeffs.len()).map(|r| coeffs[(r / d_b, r % d_b)]).collect();
                outer(&flat, &flat)
            }
            Self::Mixed(t) => t.to_matrix(),
        }
    }

    pub fn to_tensor(&self) -> DensityTensor {
        match self {
            Self::Pure { .. } => {
                let (a, b) = self.dims();
                DensityTensor::from_matrix(a, b, &self.density_matrix()).expect("pure state is a valid density")
            }
            Self::Mixed(t) => t.clone(),
        }
    }

    /// `ρ_B[j, l] = Σ_i C_ijil`.
    pub fn reduced_b(&self) -> CMatrix {
        let (d_a, d_b) = self.dims();
        match self {
            Self::Pure { coeffs } => coeffs.transpose() * coeffs.map(|z| z.conj()),
            Self::Mixed(t) => CMatrix::from_fn(d_b, d_b, |j, l| (0..d_a).map(|i| t.get(i, j, i, l)).sum()),
        }
    }
}

/// Diagonal pair state `Σ_k w_k |A_k, B_k⟩` truncated or padded to `d`
/// pairs. Truncating away weight requires `renormalize`.
pub fn pdc_state(weights: &[f64], d: usize, renormalize: bool) -> Result<BipartiteState> {
    if weights.is_empty() || d == 0 {
        return Err(TmError::Empty("Schmidt weights".into()));
    }
    let total: f64 = weights.iter().map(|w| w * w).sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(TmError::NotNormalized { norm_sq: total, context: "Schmidt weights".into() });
    }
    let kept: Vec<f64> = weights.iter().copied().chain(std::iter::repeat(0.0)).take(d).collect();
    let kept_norm: f64 = kept.iter().map(|w| w * w).sum();
    if (kept_norm - 1.0).abs() > NORM_TOL {
        if !renormalize {
            return Err(TmError::InconsistentNormalization(format!(
                "truncation to {d} pairs keeps Σλ = {kept_norm:.12}"
            )));
        }
        if kept_norm == 0.0 {
            return Err(TmError::Empty("truncation keeps no weight".into()));
        }
    }
    let scale = kept_norm.sqrt();
    let diag = nalgebra::DVector::from_iterator(d, kept.iter().map(|w| Complex64::from(w / scale)));
    BipartiteState::pure(CMatrix::from_diagonal(&diag))
}

/// Heralded idler state when the signal is detected without mode filtering.
pub fn herald_unfiltered(state: &BipartiteState) -> Result<DensityMatrix> {
    let rho = state.reduced_b();
    // undo round-off so the validated constructor accepts it
    let tr = trace(&rho).re;
    DensityMatrix::new((&rho + rho.adjoint()).scale(0.5).unscale(tr))
}

/// Heralding on a QPG that converts signal mode `i` with efficiency `eta`:
/// the conditional idler state and the heralding rate (per pair).
pub fn herald_qpg(state: &BipartiteState, i: usize, eta: f64) -> Result<(DensityMatrix, f64)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(TmError::InvalidParameter(format!("efficiency {eta} outside [0, 1]")));
    }
    let (d_a, d_b) = state.dims();
    if i >= d_a {
        return Err(TmError::IndexOutOfRange { index: i, dim: d_a });
    }
    let cond = match state {
        BipartiteState::Pure { coeffs } => {
            let row: Vec<Complex64> = coeffs.row(i).iter().copied().collect();
            outer(&row, &row)
        }
        BipartiteState::Mixed(t) => CMatrix::from_fn(d_b, d_b, |j, l| t.get(i, j, i, l)),
    };
    let p = trace(&cond).re;
    if p <= 0.0 {
        return Err(TmError::Empty(format!("signal mode {i} carries no weight")));
    }
    let rho = (&cond + cond.adjoint()).scale(0.5).unscale(p);
    Ok((DensityMatrix::new(rho)?, eta * p))
}
