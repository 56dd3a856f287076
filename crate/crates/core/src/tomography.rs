//! Pulse-gate tomography of single photons and photon pairs.
//!
//! A gate programmed with the analyzer mode `ζ f_k + √(1−ζ²) e^{iφ} f_l`
//! converts the projection onto that spectral shape. With the
//! spectral-overlap convention used throughout, the projected ket is
//! `|m⟩ = ζ|A_k⟩ + √(1−ζ²) e^{−iφ}|A_l⟩`, which gives
//!
//! `R_C / (R_C + R_T) = ζ² C_kk + (1−ζ²) C_ll + 2 Re[ζ √(1−ζ²) e^{iφ} C_lk]`.
//!
//! Pair measurements use `Tr[ρ (Π_A ⊗ Π_B)]` and its complements.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::linalg::{hermitian_eigen, kron, lstsq, outer, trace, CMatrix, CVector, ZERO};
use crate::rng::substream;
use crate::states::{DensityMatrix, DensityTensor};

/// Analyzer mode on the pair `(k, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analyzer {
    pub k: usize,
    pub l: usize,
    pub zeta: f64,
    pub phi: f64,
}

impl Analyzer {
    pub fn new(k: usize, l: usize, zeta: f64, phi: f64) -> Result<Self> {
        let a = Self { k, l, zeta, phi };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(TmError::InvalidParameter(format!("zeta {} outside [0, 1]", self.zeta)));
        }
        if self.k == self.l {
            return Err(TmError::InvalidParameter(format!("analyzer needs two distinct modes, got ({0}, {0})", self.k)));
        }
        Ok(())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        self.validate()?;
        for idx in [self.k, self.l] {
            if idx >= dim {
                return Err(TmError::IndexOutOfRange { index: idx, dim });
            }
        }
        Ok(())
    }

    fn sin_part(&self) -> f64 {
        (1.0 - self.zeta * self.zeta).max(0.0).sqrt()
    }

    /// `|m⟩` in a `dim`-mode register.
    pub fn ket(&self, dim: usize) -> Result<Vec<Complex64>> {
        self.check_dim(dim)?;
        let mut v = vec![ZERO; dim];
        v[self.k] = Complex64::from(self.zeta);
        v[self.l] = Complex64::from_polar(self.sin_part(), -self.phi);
        Ok(v)
    }

    pub fn projector(&self, dim: usize) -> Result<CMatrix> {
        let v = self.ket(dim)?;
        Ok(outer(&v, &v))
    }

    /// Projector restricted to `span{|A_lo⟩, |A_hi⟩}` of its own pair.
    fn block_projector(&self) -> CMatrix {
        let mut v = [Complex64::from(self.zeta), Complex64::from_polar(self.sin_part(), -self.phi)];
        if self.k > self.l {
            v.swap(0, 1);
        }
        outer(&v, &v)
    }

    fn pair(&self) -> (usize, usize) {
        (self.k.min(self.l), self.k.max(self.l))
    }
}

/// `(1,·), (0,·), (1/√2, 0), (1/√2, π/2)` on `(k, l)`.
pub fn standard_cycle(k: usize, l: usize) -> Result<Vec<Analyzer>> {
    [(1.0, 0.0), (0.0, 0.0), (FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, FRAC_PI_2)]
        .iter()
        .map(|&(z, p)| Analyzer::new(k, l, z, p))
        .collect()
}

/// The 16 analyzer pairs for the index tuple `(m, n, p, q)`.
pub fn biphoton_cycle(m: usize, n: usize, p: usize, q: usize) -> Result<Vec<(Analyzer, Analyzer)>> {
    let a = standard_cycle(m, n)?;
    let b = standard_cycle(p, q)?;
    Ok(a.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRecord {
    pub setting: Analyzer,
    pub r_converted: f64,
    pub r_transmitted: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

impl SingleRecord {
    pub fn ratio(&self) -> Result<f64> {
        let total = self.r_converted + self.r_transmitted;
        if self.r_converted < 0.0 || self.r_transmitted < 0.0 || !(total > 0.0) {
            return Err(TmError::InconsistentNormalization(format!(
                "rates ({}, {}) for setting {:?}",
                self.r_converted, self.r_transmitted, self.setting
            )));
        }
        Ok(self.r_converted / total)
    }
}

/// Coincidence rates between converted (C) and transmitted (T) detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRates {
    pub ca_cb: f64,
    pub ca_tb: f64,
    pub ta_cb: f64,
    pub ta_tb: f64,
}

impl CoincidenceRates {
    pub fn total(&self) -> f64 {
        self.ca_cb + self.ca_tb + self.ta_cb + self.ta_tb
    }

    fn as_array(&self) -> [f64; 4] {
        [self.ca_cb, self.ca_tb, self.ta_cb, self.ta_tb]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiphotonRecord {
    pub a: Analyzer,
    pub b: Analyzer,
    pub rates: CoincidenceRates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

impl BiphotonRecord {
    pub fn ratio(&self) -> Result<f64> {
        let total = self.rates.total();
        if self.rates.as_array().iter().any(|&r| r < 0.0) || !(total > 0.0) {
            return Err(TmError::InconsistentNormalization(format!("coincidence rates {:?}", self.rates)));
        }
        Ok(self.rates.ca_cb / total)
    }
}

/// `⟨m|ρ|m⟩`.
pub fn single_probability(rho: &DensityMatrix, setting: &Analyzer) -> Result<f64> {
    let v = setting.ket(rho.dim())?;
    let rv = rho.matrix() * CVector::from_column_slice(&v);
    let p: Complex64 = v.iter().zip(rv.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(p.re.clamp(0.0, 1.0))
}

/// The closed-form rate ratio in terms of `C_kk`, `C_ll`, `C_lk`.
pub fn single_ratio_formula(rho: &DensityMatrix, setting: &Analyzer) -> Result<f64> {
    setting.check_dim(rho.dim())?;
    let m = rho.matrix();
    let (k, l, z) = (setting.k, setting.l, setting.zeta);
    let s = setting.sin_part();
    let cross = Complex64::from_polar(z * s, setting.phi) * m[(l, k)];
    Ok(z * z * m[(k, k)].re + s * s * m[(l, l)].re + 2.0 * cross.re)
}

/// Noiseless record, rates normalized to 1.
pub fn simulate_single(rho: &DensityMatrix, setting: &Analyzer) -> Result<SingleRecord> {
    let p = single_probability(rho, setting)?;
    Ok(SingleRecord { setting: *setting, r_converted: p, r_transmitted: 1.0 - p, shots: None })
}

/// Binomially sampled counts from `shots` trials.
pub fn simulate_single_sampled<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    setting: &Analyzer,
    shots: u64,
    rng: &mut R,
) -> Result<SingleRecord> {
    let p = single_probability(rho, setting)?;
    let c = Binomial::new(shots, p).map_err(|e| TmError::InvalidParameter(e.to_string()))?.sample(rng);
    Ok(SingleRecord { setting: *setting, r_converted: c as f64, r_transmitted: (shots - c) as f64, shots: Some(shots) })
}

fn pair_probabilities(tensor: &DensityTensor, a: &Analyzer, b: &Analyzer) -> Result<[f64; 4]> {
    let (da, db) = tensor.dims();
    let pa = a.projector(da)?;
    let pb = b.projector(db)?;
    let rho = tensor.to_matrix();
    let ia = CMatrix::identity(da, da);
    let ib = CMatrix::identity(db, db);
    let ev = |op: CMatrix| trace(&(&rho * op)).re.max(0.0);
    let probs = [
        ev(kron(&pa, &pb)),
        ev(kron(&pa, &(&ib - &pb))),
        ev(kron(&(&ia - &pa), &pb)),
        ev(kron(&(&ia - &pa), &(&ib - &pb))),
    ];
    let total: f64 = probs.iter().sum();
    Ok(probs.map(|p| p / total))
}

/// Noiseless coincidence record, rates normalized to 1.
pub fn simulate_biphoton(tensor: &DensityTensor, a: &Analyzer, b: &Analyzer) -> Result<BiphotonRecord> {
    let [ca_cb, ca_tb, ta_cb, ta_tb] = pair_probabilities(tensor, a, b)?;
    Ok(BiphotonRecord { a: *a, b: *b, rates: CoincidenceRates { ca_cb, ca_tb, ta_cb, ta_tb }, shots: None })
}

/// Multinomially sampled coincidence counts from `shots` pairs.
pub fn simulate_biphoton_sampled<R: Rng + ?Sized>(
    tensor: &DensityTensor,
    a: &Analyzer,
    b: &Analyzer,
    shots: u64,
    rng: &mut R,
) -> Result<BiphotonRecord> {
    let probs = pair_probabilities(tensor, a, b)?;
    let counts = multinomial(shots, &probs, rng)?;
    let [ca_cb, ca_tb, ta_cb, ta_tb] = counts.map(|c| c as f64);
    Ok(BiphotonRecord { a: *a, b: *b, rates: CoincidenceRates { ca_cb, ca_tb, ta_cb, ta_tb }, shots: Some(shots) })
}

/// Sequential-binomial multinomial draw.
pub fn multinomial<R: Rng + ?Sized, const N: usize>(n: u64, probs: &[f64; N], rng: &mut R) -> Result<[u64; N]> {
    let mut out = [0u64; N];
    let mut left = n;
    let mut mass = 1.0;
    for i in 0..N {
        if i == N - 1 {
            out[i] = left;
            break;
        }
        let p = if mass > 0.0 { (probs[i] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, p).map_err(|e| TmError::InvalidParameter(e.to_string()))?.sample(rng);
        out[i] = c;
        left -= c;
        mass -= probs[i];
    }
    Ok(out)
}

/// Records for every setting; with `shots`, each setting draws from its own
/// random stream under `seed`.
pub fn run_single_plan(
    rho: &DensityMatrix,
    settings: &[Analyzer],
    shots: Option<u64>,
    seed: u64,
) -> Result<Vec<SingleRecord>> {
    settings
        .par_iter()
        .enumerate()
        .map(|(i, s)| match shots {
            None => simulate_single(rho, s),
            Some(n) => simulate_single_sampled(rho, s, n, &mut substream(seed, "tomo-single", i as u64)),
        })
        .collect()
}

pub fn run_biphoton_plan(
    tensor: &DensityTensor,
    settings: &[(Analyzer, Analyzer)],
    shots: Option<u64>,
    seed: u64,
) -> Result<Vec<BiphotonRecord>> {
    settings
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| match shots {
            None => simulate_biphoton(tensor, a, b),
            Some(n) => simulate_biphoton_sampled(tensor, a, b, n, &mut substream(seed, "tomo-biphoton", i as u64)),
        })
        .collect()
}

/// Real coordinates of an `n × n` Hermitian matrix: diagonal entries, then
/// `Re`/`Im` of each upper-triangle entry.
fn hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = CMatrix::zeros(n, n);
        e[(i, i)] = Complex64::from(1.0);
        basis.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut re = CMatrix::zeros(n, n);
            re[(i, j)] = Complex64::from(1.0);
            re[(j, i)] = Complex64::from(1.0);
            let mut im = CMatrix::zeros(n, n);
            im[(i, j)] = Complex64::new(0.0, 1.0);
            im[(j, i)] = Complex64::new(0.0, -1.0);
            basis.push(re);
            basis.push(im);
        }
    }
    basis
}

/// Fits a Hermitian block `H` to `Tr[H P_r] = y_r`.
fn solve_block(rows: &[(CMatrix, f64)], n: usize) -> Option<(CMatrix, f64)> {
    let basis = hermitian_basis(n);
    let a = DMatrix::from_fn(rows.len(), basis.len(), |r, c| trace(&(&basis[c] * &rows[r].0)).re);
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (x, residual) = lstsq(&a, &y)?;
    let h = basis.iter().zip(&x).fold(CMatrix::zeros(n, n), |acc, (e, w)| acc + e.scale(*w));
    Some((h, residual))
}

/// Requested density-matrix elements, keyed by their index tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialEstimate<K> {
    pub elements: BTreeMap<K, Complex64>,
    /// Largest least-squares residual over the solved blocks.
    pub residual: f64,
}

impl<K: Ord + Copy> PartialEstimate<K> {
    fn from_samples(samples: Vec<(K, Complex64)>, residual: f64) -> Self {
        let mut acc: BTreeMap<K, (Complex64, usize)> = BTreeMap::new();
        for (k, v) in samples {
            let e = acc.entry(k).or_insert((ZERO, 0));
            e.0 += v;
            e.1 += 1;
        }
        Self { elements: acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(), residual }
    }

    pub fn get(&self, key: K) -> Option<Complex64> {
        self.elements.get(&key).copied()
    }
}

impl PartialEstimate<(usize, usize)> {
    pub fn to_json(&self) -> serde_json::Value {
        let els: Vec<_> = self
            .elements
            .iter()
            .map(|(&(i, j), v)| serde_json::json!({"i": i, "j": j, "value": v}))
            .collect();
        serde_json::json!({"index_order": "C_ij = <A_i|rho|A_j>", "elements": els, "residual": self.residual})
    }
}

impl PartialEstimate<(usize, usize, usize, usize)> {
    pub fn to_json(&self) -> serde_json::Value {
        let els: Vec<_> = self
            .elements
            .iter()
            .map(|(&(i, j, k, l), v)| serde_json::json!({"i": i, "j": j, "k": k, "l": l, "value": v}))
            .collect();
        serde_json::json!({
            "index_order": "C_ijkl = <A_i B_j|rho|A_k B_l>",
            "elements": els,
            "residual": self.residual,
        })
    }
}

/// Recovers `C_kk, C_ll, C_kl, C_lk` for every mode pair covered by the
/// records. Each pair needs settings spanning its four real unknowns.
pub fn reconstruct_single(records: &[SingleRecord]) -> Result<PartialEstimate<(usize, usize)>> {
    if records.is_empty() {
        return Err(TmError::MissingSettings("no records".into()));
    }
    let mut groups: BTreeMap<(usize, usize), Vec<(CMatrix, f64)>> = BTreeMap::new();
    for r in records {
        r.setting.validate()?;
        groups.entry(r.setting.pair()).or_default().push((r.setting.block_projector(), r.ratio()?));
    }
    let mut samples = Vec::new();
    let mut worst: f64 = 0.0;
    for (&(lo, hi), rows) in &groups {
        let (h, res) = solve_block(rows, 2).ok_or_else(|| {
            TmError::MissingSettings(format!("settings on modes ({lo}, {hi}) do not determine the block"))
        })?;
        worst = worst.max(res);
        let idx = [lo, hi];
        for a in 0..2 {
            for b in 0..2 {
                samples.push(((idx[a], idx[b]), h[(a, b)]));
            }
        }
    }
    Ok(PartialEstimate::from_samples(samples, worst))
}

/// Recovers the `C_ijkl` block on `span{A_m, A_n} ⊗ span{B_p, B_q}` for
/// every index tuple covered by the records.
pub fn reconstruct_biphoton(
    records: &[BiphotonRecord],
) -> Result<PartialEstimate<(usize, usize, usize, usize)>> {
    if records.is_empty() {
        return Err(TmError::MissingSettings("no records".into()));
    }
    type Key = ((usize, usize), (usize, usize));
    let mut groups: BTreeMap<Key, Vec<(CMatrix, f64)>> = BTreeMap::new();
    for r in records {
        r.a.validate()?;
        r.b.validate()?;
        let p = kron(&r.a.block_projector(), &r.b.block_projector());
        groups.entry((r.a.pair(), r.b.pair())).or_default().push((p, r.ratio()?));
    }
    let mut samples = Vec::new();
    let mut worst: f64 = 0.0;
    for (&((m, n), (p, q)), rows) in &groups {
        let (h, res) = solve_block(rows, 4).ok_or(TmError::SingularSystem(vec![m, n, p, q]))?;
        worst = worst.max(res);
        let ia = [m, n];
        let ib = [p, q];
        for r in 0..4 {
            for c in 0..4 {
                samples.push(((ia[r / 2], ib[r % 2], ia[c / 2], ib[c % 2]), h[(r, c)]));
            }
        }
    }
    Ok(PartialEstimate::from_samples(samples, worst))
}

/// Expanded closed-form coincidence ratio, evaluated term by term.
///
/// Its symbols `C_wxyz` are read as `⟨A_w B_x| ρ |A_z B_y⟩`, which makes the
/// four population terms correct. The expression agrees with the operator
/// form whenever both ζ are 0 or 1 and deviates for balanced analyzers: the
/// interference terms carry `√(1−ζ)` instead of `√(1−ζ²)`, one term repeats
/// a population symbol, and some coherence indices do not match any
/// consistent ordering.
pub fn expanded_biphoton_ratio(tensor: &DensityTensor, a: &Analyzer, b: &Analyzer) -> f64 {
    let c = |w: usize, x: usize, y: usize, z: usize| tensor.get(w, x, z, y);
    let (m, n, p, q) = (a.k, a.l, b.k, b.l);
    let (za, zb) = (a.zeta, b.zeta);
    let (za2, zb2) = (za * za, zb * zb);
    let pop = za2 * zb2 * c(m, p, p, m).re
        + (1.0 - za2) * (1.0 - zb2) * c(n, q, q, n).re
        + za2 * (1.0 - zb2) * c(m, q, q, m).re
        + (1.0 - za2) * zb2 * c(n, p, p, n).re;
    let ea = Complex64::from_polar(1.0, a.phi);
    let eb = Complex64::from_polar(1.0, b.phi);
    let sa = (1.0 - za).max(0.0).sqrt();
    let sb = (1.0 - zb).max(0.0).sqrt();
    let inner = ea * za * sa * (zb2 * c(m, p, p, n) + (1.0 - zb2) * c(m, q, q, n))
        + eb * zb * sb * (za2 * c(m, p, q, m) + (1.0 - za2) * c(n, q, q, n))
        + za * zb * sa * sb * (ea * eb * c(m, p, q, n) + ea / eb * c(m, q, p, n));
    pop + 2.0 * inner.re
}

/// What to do when clipping leaves no positive weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroTracePolicy {
    #[default]
    Error,
    MaximallyMixed,
}

/// Nearest valid density matrix by symmetrizing, clipping negative
/// eigenvalues and renormalizing; also returns the Frobenius distance moved.
pub fn sanitize(raw: &CMatrix, policy: ZeroTracePolicy) -> Result<(DensityMatrix, f64)> {
    if !raw.is_square() || raw.nrows() == 0 {
        return Err(TmError::InvalidDensityMatrix(format!("shape {:?}", raw.shape())));
    }
    let n = raw.nrows();
    let herm = (raw + raw.adjoint()).scale(0.5);
    let (values, vectors) = hermitian_eigen(&herm);
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let rho = if total <= f64::EPSILON * n as f64 {
        match policy {
            ZeroTracePolicy::Error => return Err(TmError::ZeroTrace),
            ZeroTracePolicy::MaximallyMixed => CMatrix::identity(n, n).unscale(n as f64),
        }
    } else {
        let d = CMatrix::from_diagonal(&CVector::from_iterator(n, clipped.iter().map(|v| Complex64::from(v / total))));
        let m = &vectors * d * vectors.adjoint();
        (&m + m.adjoint()).scale(0.5)
    };
    let distance = (&rho - raw).norm();
    Ok((DensityMatrix::new(rho)?, distance))
}
