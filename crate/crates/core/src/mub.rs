//! Mutually unbiased bases for register dimensions 2 through 5.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{superpose, ModeBasis, TemporalMode};
use crate::error::{Result, TmError};
use crate::linalg::{c, kron, unitarity_residual, CMatrix, I, ONE, ZERO};

pub const MUB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubSet {
    pub dim: usize,
    /// Each basis as a `d × d` matrix whose columns are the basis states.
    #[serde(with = "serde_basis_list")]
    pub bases: Vec<CMatrix>,
}

mod serde_basis_list {
    use super::CMatrix;
    use crate::linalg::serde_rows::{from_rows, rows};
    use num_complex::Complex64;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(bases: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        bases.iter().map(rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let raw = Vec::<Vec<Vec<Complex64>>>::deserialize(d)?;
        raw.iter().map(|r| from_rows(r).ok_or_else(|| D::Error::custom("ragged basis"))).collect()
    }
}

impl MubSet {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Column `state` of basis `basis`.
    pub fn state(&self, basis: usize, state: usize) -> Vec<Complex64> {
        self.bases[basis].column(state).iter().copied().collect()
    }

    /// Largest deviation from unitarity and from `|⟨e_i|f_j⟩|² = 1/d`.
    pub fn defect(&self) -> f64 {
        let d = self.dim as f64;
        let mut worst = self.bases.iter().map(unitarity_residual).fold(0.0, f64::max);
        for (a, x) in self.bases.iter().enumerate() {
            for y in &self.bases[a + 1..] {
                let overlaps = x.adjoint() * y;
                for z in overlaps.iter() {
                    worst = worst.max((z.norm_sqr() - 1.0 / d).abs());
                }
            }
        }
        worst
    }

    /// Every basis state as a spectral mode over `modes`.
    pub fn to_temporal_modes(&self, modes: &ModeBasis) -> Result<Vec<Vec<TemporalMode>>> {
        if modes.len() != self.dim {
            return Err(TmError::DimensionMismatch { expected: self.dim, got: modes.len() });
        }
        self.bases
            .iter()
            .enumerate()
            .map(|(b, m)| {
                (0..self.dim)
                    .map(|s| {
                        let coeffs: Vec<Complex64> = m.column(s).iter().copied().collect();
                        Ok(superpose(&coeffs, modes)?.with_label(format!("mub{b}_state{s}")))
                    })
                    .collect()
            })
            .collect()
    }
}

/// The first `count` mutually unbiased bases in dimension `d`; the first
/// basis is always the computational one.
pub fn mub_bases(d: usize, count: usize) -> Result<MubSet> {
    if count == 0 || count > d + 1 {
        return Err(TmError::InvalidParameter(format!("{count} bases requested, dimension {d} has {}", d + 1)));
    }
    let all = match d {
        2 => qubit_bases(),
        3 | 5 => prime_bases(d),
        4 => two_qubit_bases(),
        _ => return Err(TmError::UnsupportedDimension(d)),
    };
    let set = MubSet { dim: d, bases: all.into_iter().take(count).collect() };
    let defect = set.defect();
    assert!(defect <= MUB_TOL, "MUB construction for d={d} off by {defect:e}");
    Ok(set)
}

fn qubit_bases() -> Vec<CMatrix> {
    let s = FRAC_1_SQRT_2;
    vec![
        CMatrix::identity(2, 2),
        CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s)]),
    ]
}

/// Computational basis plus `v_b(j) = ω^{a j² + b j} / √d` for each `a`.
fn prime_bases(d: usize) -> Vec<CMatrix> {
    let norm = (d as f64).sqrt();
    let mut out = vec![CMatrix::identity(d, d)];
    for a in 0..d {
        out.push(CMatrix::from_fn(d, d, |j, b| {
            let exponent = (a * j * j + b * j) % d;
            Complex64::from_polar(1.0 / norm, TAU * exponent as f64 / d as f64)
        }));
    }
    out
}

/// Common eigenbases of the five commuting classes of two-qubit Paulis.
fn two_qubit_bases() -> Vec<CMatrix> {
    let id = CMatrix::identity(2, 2);
    let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let y = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    let classes = [
        (kron(&z, &id), kron(&id, &z)),
        (kron(&x, &id), kron(&id, &x)),
        (kron(&y, &id), kron(&id, &y)),
        (kron(&x, &z), kron(&z, &y)),
        (kron(&x, &y), kron(&z, &x)),
    ];
    let i4 = CMatrix::identity(4, 4);
    classes
        .iter()
        .map(|(p, q)| {
            let mut basis = CMatrix::zeros(4, 4);
            for (col, (s1, s2)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
                let proj = (&i4 + p.scale(s1)) * (&i4 + q.scale(s2)) * c(0.25, 0.0);
                let best = (0..4)
                    .max_by(|&a, &b| proj.column(a).norm().total_cmp(&proj.column(b).norm()))
                    .expect("four columns");
                let v = proj.column(best);
                let pivot = v.iter().copied().fold(ZERO, |acc, e| if e.norm() > acc.norm() + 1e-12 { e } else { acc });
                let phase = pivot.conj() / pivot.norm();
                let n = v.norm();
                for r in 0..4 {
                    basis[(r, col)] = v[r] * phase / n;
                }
            }
            basis
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{hermite_gaussian_basis, FrequencyGrid};

    #[test]
    fn supported_dimensions_are_unbiased() {
        for d in 2..=5 {
            let set = mub_bases(d, d + 1).unwrap();
            assert_eq!(set.len(), d + 1);
            assert!(set.defect() <= MUB_TOL);
        }
    }

    #[test]
    fn four_dimensions_give_twenty_states() {
        let set = mub_bases(4, 5).unwrap();
        assert_eq!(set.bases.iter().map(|b| b.ncols()).sum::<usize>(), 20);
        assert_eq!(set.bases[0], CMatrix::identity(4, 4));
    }

    #[test]
    fn rejects_bad_requests() {
        assert_eq!(mub_bases(6, 2).unwrap_err(), TmError::UnsupportedDimension(6));
        assert!(mub_bases(2, 4).is_err());
        assert!(mub_bases(3, 0).is_err());
    }

    #[test]
    fn qubit_triple_is_z_x_y() {
        let set = mub_bases(2, 3).unwrap();
        let plus = set.state(1, 0);
        assert!((plus[0] - plus[1]).norm() < 1e-15);
        let right = set.state(2, 0);
        assert!((right[1] - right[0] * I).norm() < 1e-15);
    }

    #[test]
    fn states_export_as_modes() {
        let g = FrequencyGrid::new(0.0, 30.0, 256).unwrap();
        let modes = hermite_gaussian_basis(2, 0.0, 1.0, &g).unwrap();
        let set = mub_bases(2, 3).unwrap();
        let tms = set.to_temporal_modes(&modes).unwrap();
        assert_eq!(tms.len(), 3);
        assert!((tms[1][0].norm_sq() - 1.0).abs() < 1e-9);
        let json = serde_json::to_string(&set).unwrap();
        let back: MubSet = serde_json::from_str(&json).unwrap();
        assert!(back.defect() < 1e-12);
    }
}
