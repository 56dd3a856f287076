//! Single-qubit and single-qudit gates built from pulse-gate primitives.
//!
//! Every sequence uses the green mode only internally: a full-conversion
//! gate lifts a red mode into `|C⟩`, phases act there, and a second
//! full-conversion gate brings the amplitude back.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::linalg::{basis_vector, c, unitarity_residual, CMatrix, I, ONE, ZERO};
use crate::qpg::{green_phase, qpg_operator, QpgSpec, RegisterUnitary};

pub const COMPILE_UNITARITY_TOL: f64 = 1e-10;

/// Entries below this are treated as already eliminated.
const ELIMINATION_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Full-conversion gate (θ = π/2) on a red-mode vector.
    Q100 { target: Vec<Complex64> },
    /// Half-conversion gate (θ = π/4).
    Q50 { target: Vec<Complex64> },
    /// `e^{iφ}` on `|C⟩`.
    GreenPhase { phase: f64 },
}

impl Primitive {
    pub fn q100(target: Vec<Complex64>) -> Self {
        Self::Q100 { target }
    }

    pub fn q50(target: Vec<Complex64>) -> Self {
        Self::Q50 { target }
    }

    /// Phase reduced to `[0, 2π)`.
    pub fn green(phase: f64) -> Self {
        Self::GreenPhase { phase: phase.rem_euclid(TAU) }
    }

    pub fn unitary(&self, d: usize) -> Result<RegisterUnitary> {
        match self {
            Self::Q100 { target } => qpg_operator(&QpgSpec::new(target.clone(), FRAC_PI_2)?, d),
            Self::Q50 { target } => qpg_operator(&QpgSpec::new(target.clone(), FRAC_PI_4)?, d),
            Self::GreenPhase { phase } => Ok(green_phase(d, *phase)),
        }
    }
}

/// Primitives in application order on a `dim`-mode register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub dim: usize,
    pub ops: Vec<Primitive>,
}

impl GateSequence {
    pub fn new(dim: usize) -> Self {
        Self { dim, ops: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: Primitive) {
        self.ops.push(op);
    }

    /// Appends `[q100(v), green(β − π), q100(v)]`, which multiplies `v` by
    /// `e^{iβ}` and fixes the rest of the register.
    pub fn push_phase_reflection(&mut self, v: Vec<Complex64>, beta: f64) {
        self.ops.push(Primitive::q100(v.clone()));
        self.ops.push(Primitive::green(beta - PI));
        self.ops.push(Primitive::q100(v));
    }
}

/// Product of the primitives' unitaries in application order.
pub fn evaluate(seq: &GateSequence) -> Result<RegisterUnitary> {
    let mut total = RegisterUnitary::identity(seq.dim);
    for op in &seq.ops {
        total = op.unitary(seq.dim)?.after(&total)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateName {
    H,
    X1,
    X2,
    Y1,
    Y2,
    Z,
    Phase(f64),
}

impl FromStr for GateName {
    type Err = TmError;

    /// `H`, `X1`, `X2`, `Y1`, `Y2`, `Z` or `phase(φ)` with φ in radians.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let name = match t.to_ascii_uppercase().as_str() {
            "H" => Self::H,
            "X" | "X1" => Self::X1,
            "X2" => Self::X2,
            "Y" | "Y1" => Self::Y1,
            "Y2" => Self::Y2,
            "Z" => Self::Z,
            _ => {
                let inner = t
                    .strip_prefix("phase(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| TmError::UnknownGate(s.to_string()))?;
                let phi = inner.trim().parse::<f64>().map_err(|_| TmError::UnknownGate(s.to_string()))?;
                Self::Phase(phi)
            }
        };
        Ok(name)
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Phase(phi) => write!(f, "phase({phi})"),
            other => write!(f, "{other:?}"),
        }
    }
}

/// Textbook matrix of a named gate on `{|A_0⟩, |A_1⟩}`.
pub fn target_matrix(name: GateName) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = |a: [Complex64; 4]| CMatrix::from_row_slice(2, 2, &a);
    match name {
        GateName::H => m([c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        GateName::X1 | GateName::X2 => m([ZERO, ONE, ONE, ZERO]),
        GateName::Y1 | GateName::Y2 => m([ZERO, I, -I, ZERO]),
        GateName::Z => m([ONE, ZERO, ZERO, -ONE]),
        GateName::Phase(phi) => m([ONE, ZERO, ZERO, Complex64::from_polar(1.0, phi)]),
    }
}

/// Pulse-gate recipe for a named qubit gate.
pub fn compile_gate(name: GateName) -> GateSequence {
    let a0 = || basis_vector(2, 0);
    let a1 = || basis_vector(2, 1);
    let ops = match name {
        GateName::X1 => vec![Primitive::q100(a0()), Primitive::q100(a1()), Primitive::q100(a0())],
        GateName::X2 => vec![Primitive::q100(a1()), Primitive::q100(a0()), Primitive::q100(a1())],
        GateName::Z => vec![Primitive::q100(a1()), Primitive::q100(a1())],
        GateName::Y1 | GateName::Y2 => {
            let x = if name == GateName::Y1 { GateName::X1 } else { GateName::X2 };
            let mut ops = compile_gate(GateName::Z).ops;
            ops.extend(compile_gate(x).ops);
            ops
        }
        GateName::Phase(phi) => {
            vec![Primitive::q100(a1()), Primitive::green(phi + PI), Primitive::q100(a1())]
        }
        GateName::H => {
            let w = vec![c(FRAC_PI_8.cos(), 0.0), c(FRAC_PI_8.sin(), 0.0)];
            vec![Primitive::q100(w.clone()), Primitive::q100(w)]
        }
    };
    GateSequence { dim: 2, ops }
}

/// Reck-style factorization of a `d × d` unitary into two-level rotations,
/// each realized as at most two phase reflections, plus a final diagonal.
pub fn compile_qudit_unitary(u: &CMatrix) -> Result<GateSequence> {
    if !u.is_square() || u.nrows() == 0 {
        return Err(TmError::DimensionMismatch { expected: u.nrows(), got: u.ncols() });
    }
    let residual = unitarity_residual(u);
    if residual > COMPILE_UNITARITY_TOL {
        return Err(TmError::NotUnitary { residual, tolerance: COMPILE_UNITARITY_TOL });
    }
    let d = u.nrows();
    let mut m = u.clone();
    // T_k ... T_1 U = D  ⇒  U = T_1† ... T_k† D
    let mut factors: Vec<(usize, usize, [Complex64; 4])> = Vec::new();
    for col in 0..d.saturating_sub(1) {
        for row in col + 1..d {
            let b = m[(row, col)];
            if b.norm() < ELIMINATION_FLOOR {
                continue;
            }
            let a = m[(col, col)];
            let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let t = [a.conj() / n, b.conj() / n, -b / n, a / n];
            for k in 0..d {
                let (x, y) = (m[(col, k)], m[(row, k)]);
                m[(col, k)] = t[0] * x + t[1] * y;
                m[(row, k)] = t[2] * x + t[3] * y;
            }
            // store T† on (col, row)
            factors.push((col, row, [t[0].conj(), t[2].conj(), t[1].conj(), t[3].conj()]));
        }
    }

    let mut seq = GateSequence::new(d);
    for j in 0..d {
        let beta = m[(j, j)].arg();
        if beta.abs() > ELIMINATION_FLOOR {
            seq.push_phase_reflection(basis_vector(d, j), beta);
        }
    }
    for &(p, q, w) in factors.iter().rev() {
        for (v, beta) in two_level_eigen(w) {
            if beta.abs() > ELIMINATION_FLOOR {
                let mut full = vec![ZERO; d];
                full[p] = v[0];
                full[q] = v[1];
                seq.push_phase_reflection(full, beta);
            }
        }
    }
    Ok(seq)
}

/// Eigenvectors and eigenphases of a 2×2 unitary `[w00, w01, w10, w11]`.
///
/// Uses the Hermitian or anti-Hermitian part, whichever separates the
/// eigenvalues better; both share the eigenvectors of `W`.
fn two_level_eigen(w: [Complex64; 4]) -> Vec<([Complex64; 2], f64)> {
    let wm = CMatrix::from_row_slice(2, 2, &w);
    let herm = (&wm + wm.adjoint()).scale(0.5);
    let anti = (&wm - wm.adjoint()) * c(0.0, -0.5);
    let gap = |m: &CMatrix| {
        let (v, _) = crate::linalg::hermitian_eigen(m);
        v[1] - v[0]
    };
    let pick = if gap(&herm) >= gap(&anti) { herm } else { anti };
    let (_, vecs) = crate::linalg::hermitian_eigen(&pick);
    (0..2)
        .map(|k| {
            let v = [vecs[(0, k)], vecs[(1, k)]];
            let wv = [w[0] * v[0] + w[1] * v[1], w[2] * v[0] + w[3] * v[1]];
            let lambda = v[0].conj() * wv[0] + v[1].conj() * wv[1];
            (v, lambda.arg())
        })
        .collect()
}

/// Whether `max |U − e^{iγ} V| ≤ tol`, with γ read off the largest entry of `V`.
pub fn equal_up_to_phase(u: &CMatrix, v: &CMatrix, tol: f64) -> bool {
    if u.shape() != v.shape() {
        return false;
    }
    let (idx, vmax) = v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    if vmax == 0.0 {
        return u.iter().all(|z| z.norm() <= tol);
    }
    let ratio = u.as_slice()[idx] / v.as_slice()[idx];
    let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { ONE };
    u.iter().zip(v.iter()).all(|(a, b)| (a - phase * b).norm() <= tol)
}

/// `max |U − e^{iγ} V|` with `e^{iγ}` the phase of `tr(V†U)`.
pub fn phase_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    if u.shape() != v.shape() {
        return f64::INFINITY;
    }
    let overlap: Complex64 = v.iter().zip(u.iter()).map(|(b, a)| b.conj() * a).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    u.iter().zip(v.iter()).map(|(a, b)| (a - phase * b).norm()).fold(0.0, f64::max)
}

/// Largest green-level amplitude reached from any red input.
pub fn green_leakage(u: &RegisterUnitary) -> f64 {
    let d = u.dim_red();
    (0..d)
        .flat_map(|col| (d..u.dim()).map(move |row| (row, col)))
        .map(|(r, k)| u.matrix()[(r, k)].norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, max_abs_diff};
    use rand::SeedableRng;

    const ALL: [GateName; 7] = [
        GateName::H,
        GateName::X1,
        GateName::X2,
        GateName::Y1,
        GateName::Y2,
        GateName::Z,
        GateName::Phase(0.9),
    ];

    #[test]
    fn empty_sequence_is_identity() {
        let u = evaluate(&GateSequence::new(3)).unwrap();
        assert_eq!(u.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn double_full_conversion() {
        let seq = GateSequence { dim: 3, ops: vec![Primitive::q100(basis_vector(3, 0)); 2] };
        let u = evaluate(&seq).unwrap();
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-ONE, ONE, ONE, -ONE]));
        assert!(max_abs_diff(u.matrix(), &diag) < 1e-15);
    }

    #[test]
    fn named_gates_match_targets_without_leakage() {
        for name in ALL {
            let u = evaluate(&compile_gate(name)).unwrap();
            assert!(green_leakage(&u) < 1e-12, "{name}");
            assert!(equal_up_to_phase(&u.red_block(), &target_matrix(name), 1e-12), "{name}");
        }
    }

    #[test]
    fn recipe_signs() {
        let x = evaluate(&compile_gate(GateName::X1)).unwrap().red_block();
        assert!(max_abs_diff(&x, &(-target_matrix(GateName::X1))) < 1e-15);
        let h = evaluate(&compile_gate(GateName::H)).unwrap().red_block();
        assert!(max_abs_diff(&h, &(-target_matrix(GateName::H))) < 1e-15);
        let x2 = evaluate(&compile_gate(GateName::X2)).unwrap().red_block();
        assert!(equal_up_to_phase(&x, &x2, 1e-15));
        let p0 = evaluate(&compile_gate(GateName::Phase(0.0))).unwrap().red_block();
        assert!(equal_up_to_phase(&p0, &CMatrix::identity(2, 2), 1e-15));
    }

    #[test]
    fn parse_names() {
        assert_eq!("h".parse::<GateName>().unwrap(), GateName::H);
        assert_eq!("phase(0.5)".parse::<GateName>().unwrap(), GateName::Phase(0.5));
        assert!(matches!("T".parse::<GateName>(), Err(TmError::UnknownGate(_))));
        assert_eq!(Primitive::green(-FRAC_PI_2), Primitive::GreenPhase { phase: 1.5 * PI });
    }

    #[test]
    fn phase_equality() {
        let x = target_matrix(GateName::X1);
        let z = target_matrix(GateName::Z);
        assert!(equal_up_to_phase(&x, &x, 0.0));
        assert!(equal_up_to_phase(&x, &(-&x), 1e-15));
        assert!(!equal_up_to_phase(&x, &z, 1e-6));
        assert!(phase_distance(&(&x * I), &x) < 1e-15);
        assert!(phase_distance(&x, &z) > 0.5);
    }

    #[test]
    fn identity_compiles_to_nothing() {
        assert!(compile_qudit_unitary(&CMatrix::identity(4, 4)).unwrap().is_empty());
    }

    #[test]
    fn embedded_hadamard_touches_only_its_modes() {
        let mut u = CMatrix::identity(4, 4);
        let h = target_matrix(GateName::H);
        for (a, p) in [1, 3].iter().enumerate() {
            for (b, q) in [1, 3].iter().enumerate() {
                u[(*p, *q)] = h[(a, b)];
            }
        }
        let seq = compile_qudit_unitary(&u).unwrap();
        for op in &seq.ops {
            if let Primitive::Q100 { target } | Primitive::Q50 { target } = op {
                assert!(target[0].norm() < 1e-15 && target[2].norm() < 1e-15);
            }
        }
        let got = evaluate(&seq).unwrap().red_block();
        assert!(equal_up_to_phase(&got, &u, 1e-12));
        for k in [0, 2] {
            assert!((got[(k, k)] - got[(0, 0)] / got[(0, 0)].norm()).norm() < 1e-12);
        }
    }

    #[test]
    fn haar_unitaries_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for d in 2..=4 {
            let u = haar_unitary(d, &mut rng);
            let seq = compile_qudit_unitary(&u).unwrap();
            assert!(seq.len() <= 3 * (d + d * (d - 1)));
            let got = evaluate(&seq).unwrap();
            assert!(green_leakage(&got) < 1e-12);
            assert!(equal_up_to_phase(&got.red_block(), &u, 1e-10));
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_element(2, 2, ONE);
        assert!(matches!(compile_qudit_unitary(&m), Err(TmError::NotUnitary { .. })));
    }

    #[test]
    fn program_json_round_trip() {
        let seq = compile_gate(GateName::Phase(1.0));
        let json = serde_json::to_string(&seq).unwrap();
        assert!(json.contains("\"kind\":\"green_phase\""));
        let back: GateSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, seq);
    }
}
