//! Quantum pulse gates as unitaries on `span{|A_0⟩..|A_{d-1}⟩, |C⟩}`.
//!
//! An ideal gate rotates the pump-selected mode `|A_t⟩` into the green mode
//! `|C⟩` by an angle θ (efficiency `η = sin²θ`) and leaves everything
//! orthogonal to `span{|A_t⟩, |C⟩}` alone:
//!
//! `U = 1 − P − |C⟩⟨C| + cosθ (P + |C⟩⟨C|) + sinθ (|C⟩⟨A_t| − |A_t⟩⟨C|)`.
//!
//! Imperfect gates also rotate the remaining modes, each into its own
//! auxiliary green level so that the operator stays unitary. The register
//! layout is `[A_0 .. A_{d-1}, C, G_1 .. G_{d-1}]`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::linalg::{basis_vector, dot, norm_sq, serde_rows, unitarity_residual, CMatrix, ZERO};
use crate::states::{RegisterState, NORM_TOL};

/// Amplitudes below this count as an empty channel.
pub const EMPTY_TOL: f64 = 1e-12;
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpgSpec {
    target: Vec<Complex64>,
    theta: f64,
    residual_thetas: Option<Vec<f64>>,
}

impl QpgSpec {
    pub fn new(target: Vec<Complex64>, theta: f64) -> Result<Self> {
        if target.is_empty() {
            return Err(TmError::Empty("QPG target".into()));
        }
        let n = norm_sq(&target);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(TmError::NotNormalized { norm_sq: n, context: "QPG target".into() });
        }
        check_angle(theta)?;
        Ok(Self { target, theta, residual_thetas: None })
    }

    /// Gate on basis mode `index` of a `d`-mode register.
    pub fn mode(d: usize, index: usize, theta: f64) -> Result<Self> {
        if index >= d {
            return Err(TmError::IndexOutOfRange { index, dim: d });
        }
        Self::new(basis_vector(d, index), theta)
    }

    /// `θ = asin √η`.
    pub fn from_efficiency(target: Vec<Complex64>, eta: f64) -> Result<Self> {
        Self::new(target, efficiency_to_theta(eta)?)
    }

    /// Rotation angles for the `d-1` modes completing the target, in the
    /// order given by [`complement_basis`].
    pub fn with_residuals(mut self, thetas: Vec<f64>) -> Result<Self> {
        if thetas.len() + 1 != self.target.len() {
            return Err(TmError::DimensionMismatch { expected: self.target.len() - 1, got: thetas.len() });
        }
        thetas.iter().try_for_each(|&t| check_angle(t))?;
        self.residual_thetas = Some(thetas);
        Ok(self)
    }

    pub fn target(&self) -> &[Complex64] {
        &self.target
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn efficiency(&self) -> f64 {
        self.theta.sin().powi(2)
    }

    pub fn residual_thetas(&self) -> Option<&[f64]> {
        self.residual_thetas.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// Selectivity of this gate for its own target.
    pub fn selectivity(&self) -> Result<f64> {
        let mut thetas = vec![self.theta];
        thetas.extend(self.residual_thetas().unwrap_or(&[]));
        selectivity(&thetas, 0)
    }
}

/// Config form: `target` as `[re, im]` pairs, one of `theta_deg` or
/// `efficiency`, and optional residual angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpgConfig {
    pub target: Vec<[f64; 2]>,
    #[serde(default)]
    pub theta_deg: Option<f64>,
    #[serde(default)]
    pub efficiency: Option<f64>,
    #[serde(default)]
    pub residuals: Option<Vec<f64>>,
}

impl QpgConfig {
    pub fn to_spec(&self) -> Result<QpgSpec> {
        let target = self.target.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let theta = match (self.theta_deg, self.efficiency) {
            (Some(deg), None) => deg.to_radians(),
            (None, Some(eta)) => efficiency_to_theta(eta)?,
            _ => {
                return Err(TmError::InvalidParameter("give exactly one of theta_deg or efficiency".into()))
            }
        };
        let spec = QpgSpec::new(target, theta)?;
        match &self.residuals {
            Some(r) => spec.with_residuals(r.iter().map(|d| d.to_radians()).collect()),
            None => Ok(spec),
        }
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(TmError::InvalidParameter(format!("rotation angle {theta} outside [0, π/2]")));
    }
    Ok(())
}

pub fn efficiency_to_theta(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(TmError::InvalidParameter(format!("efficiency {eta} outside [0, 1]")));
    }
    Ok(eta.sqrt().asin())
}

/// Unitary on the register `[A_0 .. A_{d-1}, C, G_1 ..]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterUnitary {
    dim_red: usize,
    n_green: usize,
    #[serde(with = "serde_rows")]
    matrix: CMatrix,
}

impl RegisterUnitary {
    pub fn new(dim_red: usize, n_green: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim_red + n_green;
        if matrix.shape() != (n, n) {
            return Err(TmError::DimensionMismatch { expected: n, got: matrix.nrows() });
        }
        let residual = unitarity_residual(&matrix);
        if residual > UNITARITY_TOL {
            return Err(TmError::NotUnitary { residual, tolerance: UNITARITY_TOL });
        }
        Ok(Self { dim_red, n_green, matrix })
    }

    pub fn identity(dim_red: usize) -> Self {
        Self { dim_red, n_green: 1, matrix: CMatrix::identity(dim_red + 1, dim_red + 1) }
    }

    pub fn dim_red(&self) -> usize {
        self.dim_red
    }

    pub fn n_green(&self) -> usize {
        self.n_green
    }

    pub fn dim(&self) -> usize {
        self.dim_red + self.n_green
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `self · first`: apply `first`, then `self`.
    pub fn after(&self, first: &RegisterUnitary) -> Result<Self> {
        if self.dim_red != first.dim_red || self.n_green != first.n_green {
            return Err(TmError::DimensionMismatch { expected: self.dim(), got: first.dim() });
        }
        Ok(Self { dim_red: self.dim_red, n_green: self.n_green, matrix: &self.matrix * &first.matrix })
    }

    /// Applies to a raw amplitude vector, zero-padding missing green levels.
    pub fn apply_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() < self.dim_red || v.len() > self.dim() {
            return Err(TmError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let mut full = v.to_vec();
        full.resize(self.dim(), ZERO);
        Ok((0..self.dim()).map(|r| (0..self.dim()).map(|k| self.matrix[(r, k)] * full[k]).sum()).collect())
    }

    /// Applies a single-green unitary to a register state; the result always
    /// carries the green level.
    pub fn apply(&self, state: &RegisterState) -> Result<RegisterState> {
        if self.n_green != 1 {
            return Err(TmError::Unsupported("register states carry one green level".into()));
        }
        if state.dim() != self.dim_red {
            return Err(TmError::DimensionMismatch { expected: self.dim_red, got: state.dim() });
        }
        RegisterState::new(self.apply_vec(state.coeffs())?, true)
    }

    /// Block acting on the red modes only.
    pub fn red_block(&self) -> CMatrix {
        self.matrix.view((0, 0), (self.dim_red, self.dim_red)).into_owned()
    }
}

/// Orthonormal completion of `target` by Gram–Schmidt over the standard
/// basis; for a basis-vector target this is the other basis vectors in
/// increasing order.
pub fn complement_basis(target: &[Complex64]) -> Vec<Vec<Complex64>> {
    let d = target.len();
    let mut basis: Vec<Vec<Complex64>> = vec![target.to_vec()];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = basis_vector(d, k);
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let p = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm_sq(&v).sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis.split_off(1)
}

/// Adds the two-level rotation `|a⟩ → cos θ|a⟩ + sin θ|b⟩`,
/// `|b⟩ → cos θ|b⟩ − sin θ|a⟩` between red vector `a` and level `b`.
fn add_rotation(u: &mut CMatrix, a: &[Complex64], b: usize, theta: f64) {
    let (s, cth) = theta.sin_cos();
    for r in 0..a.len() {
        for k in 0..a.len() {
            u[(r, k)] += (cth - 1.0) * a[r] * a[k].conj();
        }
        u[(b, r)] += s * a[r].conj();
        u[(r, b)] -= s * a[r];
    }
    u[(b, b)] += Complex64::from(cth - 1.0);
}

/// The gate unitary for a `d`-mode register.
pub fn qpg_operator(spec: &QpgSpec, d: usize) -> Result<RegisterUnitary> {
    if spec.dim() != d {
        return Err(TmError::DimensionMismatch { expected: d, got: spec.dim() });
    }
    let n_green = if spec.residual_thetas.is_some() { d } else { 1 };
    let mut u = CMatrix::identity(d + n_green, d + n_green);
    add_rotation(&mut u, &spec.target, d, spec.theta);
    if let Some(res) = &spec.residual_thetas {
        for (j, (mode, &theta)) in complement_basis(&spec.target).iter().zip(res).enumerate() {
            add_rotation(&mut u, mode, d + 1 + j, theta);
        }
    }
    RegisterUnitary::new(d, n_green, u)
}

/// `S = sin⁴θ_t / Σ_j sin²θ_j`.
pub fn selectivity(thetas: &[f64], target: usize) -> Result<f64> {
    if target >= thetas.len() {
        return Err(TmError::IndexOutOfRange { index: target, dim: thetas.len() });
    }
    let total: f64 = thetas.iter().map(|t| t.sin().powi(2)).sum();
    if total == 0.0 {
        return Err(TmError::UndefinedSelectivity);
    }
    Ok(thetas[target].sin().powi(4) / total)
}

/// Phase `e^{iφ}` on `|C⟩` only.
pub fn green_phase(d: usize, phi: f64) -> RegisterUnitary {
    let mut m = CMatrix::identity(d + 1, d + 1);
    m[(d, d)] = Complex64::from_polar(1.0, phi);
    RegisterUnitary { dim_red: d, n_green: 1, matrix: m }
}

/// Two half-efficiency gates with a green phase in between.
pub fn two_stage(target: &[Complex64], phi: f64, d: usize) -> Result<RegisterUnitary> {
    let half = qpg_operator(&QpgSpec::new(target.to_vec(), FRAC_PI_4)?, d)?;
    half.after(&green_phase(d, phi))?.after(&half)
}

/// Two full-conversion gates through `|C⟩`: `|A_a⟩ → −|A_b⟩`.
pub fn reshape(state: &RegisterState, from: usize, to: usize) -> Result<RegisterState> {
    let d = state.dim();
    if state.green_amplitude().norm() > EMPTY_TOL {
        return Err(TmError::GreenOccupied("reshaping needs an empty green channel".into()));
    }
    let qa = qpg_operator(&QpgSpec::mode(d, from, FRAC_PI_2)?, d)?;
    let qb = qpg_operator(&QpgSpec::mode(d, to, FRAC_PI_2)?, d)?;
    qb.after(&qa)?.apply(&state.with_green())
}

/// Green-level amplitudes collected by one cascade stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropSlot {
    pub slot: usize,
    /// Amplitude in `|C⟩`.
    pub amplitude: Complex64,
    /// Amplitudes in the auxiliary green levels of an imperfect gate.
    pub leakage: Vec<Complex64>,
}

impl DropSlot {
    pub fn power(&self) -> f64 {
        self.amplitude.norm_sqr() + norm_sq(&self.leakage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub slots: Vec<DropSlot>,
    /// Red amplitudes left after the last stage.
    pub residual: Vec<Complex64>,
}

impl DropResult {
    pub fn total_power(&self) -> f64 {
        self.slots.iter().map(DropSlot::power).sum::<f64>() + norm_sq(&self.residual)
    }
}

/// De-multiplexes with ideal full-conversion gates on the modes in `order`.
pub fn drop_cascade(multiplex: &RegisterState, order: &[usize]) -> Result<DropResult> {
    let d = multiplex.dim();
    let mut seen = vec![false; d];
    for &k in order {
        if k >= d {
            return Err(TmError::IndexOutOfRange { index: k, dim: d });
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(TmError::RepeatedIndex(k));
        }
    }
    let specs = order.iter().map(|&k| QpgSpec::mode(d, k, FRAC_PI_2)).collect::<Result<Vec<_>>>()?;
    drop_cascade_with(multiplex, &specs)
}

/// De-multiplexes with an arbitrary sequence of gates; each stage's green
/// levels are read out into a fresh slot.
pub fn drop_cascade_with(multiplex: &RegisterState, stages: &[QpgSpec]) -> Result<DropResult> {
    let d = multiplex.dim();
    if multiplex.green_amplitude().norm() > EMPTY_TOL {
        return Err(TmError::GreenOccupied("multiplex input has green amplitude".into()));
    }
    let mut red = multiplex.red().to_vec();
    let mut slots = Vec::with_capacity(stages.len());
    for (slot, spec) in stages.iter().enumerate() {
        let u = qpg_operator(spec, d)?;
        let out = u.apply_vec(&red)?;
        red.copy_from_slice(&out[..d]);
        slots.push(DropSlot { slot, amplitude: out[d], leakage: out[d + 1..].to_vec() });
    }
    Ok(DropResult { slots, residual: red })
}

/// Converts a green photon of amplitude `green` into the unoccupied mode
/// `target` with a full-conversion gate (`|C⟩ → −|A_t⟩`).
pub fn add_channel(red: &[Complex64], green: Complex64, target: usize) -> Result<RegisterState> {
    let d = red.len();
    if target >= d {
        return Err(TmError::IndexOutOfRange { index: target, dim: d });
    }
    if red[target].norm() > EMPTY_TOL {
        return Err(TmError::OccupiedTarget(target));
    }
    let mut coeffs = red.to_vec();
    coeffs.push(green);
    let input = RegisterState::new(coeffs, true)?;
    qpg_operator(&QpgSpec::mode(d, target, FRAC_PI_2)?, d)?.apply(&input)
}

/// Conversion probability `|⟨C|U|ψ⟩|²` of a state with empty green level.
pub fn conversion_probability(u: &RegisterUnitary, state: &RegisterState) -> Result<f64> {
    let out = u.apply_vec(state.red())?;
    Ok(out[u.dim_red()..].iter().map(|z| z.norm_sqr()).sum())
}
