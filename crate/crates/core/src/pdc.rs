//! Joint spectral amplitudes of shaped-pump parametric down-conversion and
//! their Schmidt (singular-value) structure.
//!
//! Signal and idler frequencies are measured as offsets `x = ω_s - ω_s0`,
//! `y = ω_i - ω_i0` from their grid centers. The pump envelope depends on
//! the mismatch `Δω = ω_p - ω_s - ω_i`; the phasematching function of an
//! engineered (group-velocity matched) source depends only on `x - y`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{
    hermite_functions, support_half_width, to_time_domain, BasisFamily, FrequencyGrid, ModeBasis,
    TemporalMode,
};
use crate::error::{Result, TmError};
use crate::linalg::{hermitian_eigen, svd, CMatrix, ZERO};

/// Shaped pump: Hermite-Gaussian of `order` and spectral width `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub order: usize,
    pub sigma: f64,
    pub pump_center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasematchModel {
    Gaussian,
    Sinc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Depends only on `x - y`.
    EngineeredAntidiagonal,
    /// Depends on `√2 (x cos θ - y sin θ)`; `θ = π/4` is the engineered case.
    CustomAngle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasematchSpec {
    pub model: PhasematchModel,
    pub width: f64,
    pub orientation: Orientation,
}

impl PhasematchSpec {
    /// Group-velocity matched Gaussian phasematching of the given width.
    pub fn engineered(width: f64) -> Self {
        Self { model: PhasematchModel::Gaussian, width, orientation: Orientation::EngineeredAntidiagonal }
    }
}

/// Complex two-frequency amplitude `f(ω_s, ω_i)`, rows = signal samples.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    amplitude: CMatrix,
}

impl JointSpectralAmplitude {
    /// Wraps a matrix and renormalizes it to unit quadrature Frobenius norm.
    pub fn new(grid_s: FrequencyGrid, grid_i: FrequencyGrid, amplitude: CMatrix) -> Result<Self> {
        if amplitude.nrows() != grid_s.len() {
            return Err(TmError::DimensionMismatch { expected: grid_s.len(), got: amplitude.nrows() });
        }
        if amplitude.ncols() != grid_i.len() {
            return Err(TmError::DimensionMismatch { expected: grid_i.len(), got: amplitude.ncols() });
        }
        let weight = grid_s.step() * grid_i.step();
        let norm = (amplitude.norm_squared() * weight).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(TmError::InvalidParameter("joint amplitude has zero norm".into()));
        }
        Ok(Self { grid_s, grid_i, amplitude: amplitude.unscale(norm) })
    }

    pub fn from_fn(
        grid_s: FrequencyGrid,
        grid_i: FrequencyGrid,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let m = CMatrix::from_fn(grid_s.len(), grid_i.len(), |a, b| f(grid_s.offset(a), grid_i.offset(b)));
        Self::new(grid_s, grid_i, m)
    }

    pub fn grid_s(&self) -> &FrequencyGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &FrequencyGrid {
        &self.grid_i
    }

    pub fn amplitude(&self) -> &CMatrix {
        &self.amplitude
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitude.norm_squared() * self.grid_s.step() * self.grid_i.step()
    }

    /// Exchanges the roles of signal and idler.
    pub fn transposed(&self) -> Self {
        Self { grid_s: self.grid_i, grid_i: self.grid_s, amplitude: self.amplitude.transpose() }
    }

    /// Multiplies by a complex constant; the result is renormalized.
    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(self.grid_s, self.grid_i, self.amplitude.scale(1.0) * factor)
    }

    /// Quadrature distance `sqrt(Σ |f - g|² dω_s dω_i)`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_grids(other)?;
        let diff = &self.amplitude - &other.amplitude;
        Ok((diff.norm_squared() * self.grid_s.step() * self.grid_i.step()).sqrt())
    }

    fn check_grids(&self, other: &Self) -> Result<()> {
        if !self.grid_s.matches(&other.grid_s) || !self.grid_i.matches(&other.grid_i) {
            return Err(TmError::GridMismatch("joint amplitudes use different grids".into()));
        }
        Ok(())
    }

    /// Dense text grid, one `omega_s omega_i re im` line per sample.
    pub fn to_grid_text(&self) -> String {
        let mut out = String::from("# omega_s omega_i re im\n");
        for a in 0..self.grid_s.len() {
            for b in 0..self.grid_i.len() {
                let z = self.amplitude[(a, b)];
                let _ = writeln!(
                    out,
                    "{:.17e} {:.17e} {:.17e} {:.17e}",
                    self.grid_s.point(a),
                    self.grid_i.point(b),
                    z.re,
                    z.im
                );
            }
        }
        out
    }

    /// JSON metadata plus the matrix as rows of `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<Complex64>> = (0..self.amplitude.nrows())
            .map(|a| self.amplitude.row(a).iter().copied().collect())
            .collect();
        serde_json::json!({
            "grid_s": self.grid_s,
            "grid_i": self.grid_i,
            "layout": "rows index signal samples, columns index idler samples",
            "amplitude": rows,
        })
    }
}

/// Hermite-Gaussian pump envelope `α(Δω)` on the signal × idler grids.
///
/// The mismatch `Δω` ranges over `span_s/2 + span_i/2` on either side of its
/// central value along the rotated (sum-frequency) axis, and that range
/// must hold the pump mode under the Hermite-Gaussian support rule.
pub fn pump_envelope(
    pump: &PumpSpec,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<JointSpectralAmplitude> {
    if !(pump.sigma.is_finite() && pump.sigma > 0.0) {
        return Err(TmError::InvalidParameter(format!("pump sigma must be positive, got {}", pump.sigma)));
    }
    let detuning = pump.pump_center - grid_s.center() - grid_i.center();
    let reach = 0.5 * (grid_s.span() + grid_i.span());
    let half = support_half_width(pump.order, pump.sigma);
    if detuning.abs() + half > reach * (1.0 + 1e-12) {
        return Err(TmError::SupportViolation {
            what: format!("HG_{} pump along the sum-frequency axis", pump.order),
            required: 2.0 * (half + detuning.abs()),
            available: 2.0 * reach,
        });
    }
    let n = pump.order;
    JointSpectralAmplitude::from_fn(*grid_s, *grid_i, |x, y| {
        let delta = detuning - x - y;
        Complex64::from(hermite_functions(n, delta / pump.sigma)[n])
    })
}

/// Phasematching function on the signal × idler grids.
pub fn phasematching(
    spec: &PhasematchSpec,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<JointSpectralAmplitude> {
    if !(spec.width.is_finite() && spec.width > 0.0) {
        return Err(TmError::InvalidParameter(format!("phasematching width must be positive, got {}", spec.width)));
    }
    let arg = |x: f64, y: f64| match spec.orientation {
        Orientation::EngineeredAntidiagonal => x - y,
        Orientation::CustomAngle(theta) => std::f64::consts::SQRT_2 * (x * theta.cos() - y * theta.sin()),
    };
    JointSpectralAmplitude::from_fn(*grid_s, *grid_i, |x, y| {
        let u = arg(x, y) / spec.width;
        Complex64::from(match spec.model {
            PhasematchModel::Gaussian => (-0.5 * u * u).exp(),
            PhasematchModel::Sinc => sinc(u),
        })
    })
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `f = α · φ`, renormalized.
pub fn jsa(pump: &JointSpectralAmplitude, pm: &JointSpectralAmplitude) -> Result<JointSpectralAmplitude> {
    pump.check_grids(pm)?;
    JointSpectralAmplitude::new(pump.grid_s, pump.grid_i, pump.amplitude.component_mul(&pm.amplitude))
}

/// Degenerate-cluster tolerance on Schmidt weights.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Cumulative `Σλ` captured by the default truncation.
pub const DEFAULT_CAPTURE: f64 = 0.9999;

/// Schmidt modes and weights of a joint amplitude.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// `√λ_k` of the retained pairs, descending.
    pub weights: Vec<f64>,
    /// Every singular value of the discretized amplitude, descending.
    pub spectrum: Vec<f64>,
    pub signal_modes: ModeBasis,
    pub idler_modes: ModeBasis,
    pub truncation: usize,
}

impl SchmidtDecomposition {
    pub fn lambdas(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w * w).collect()
    }

    /// `Σλ` of the discarded pairs.
    pub fn discarded_weight(&self) -> f64 {
        self.spectrum[self.truncation..].iter().map(|w| w * w).sum()
    }

    /// `Σ_k √λ_k f_k^s(ω_s) f_k^i(ω_i)` over the retained pairs (not renormalized).
    pub fn reconstruct(&self) -> CMatrix {
        let gs = self.signal_modes.grid();
        let gi = self.idler_modes.grid();
        let mut m = CMatrix::zeros(gs.len(), gi.len());
        for (k, w) in self.weights.iter().enumerate() {
            let s = self.signal_modes.modes()[k].amplitude();
            let i = self.idler_modes.modes()[k].amplitude();
            for a in 0..gs.len() {
                let sa = s[a] * *w;
                for b in 0..gi.len() {
                    m[(a, b)] += sa * i[b];
                }
            }
        }
        m
    }

    pub fn to_json(&self) -> serde_json::Value {
        let modes = |b: &ModeBasis| -> Vec<Vec<Complex64>> {
            b.modes().iter().map(|m| m.amplitude().to_vec()).collect()
        };
        serde_json::json!({
            "weights": self.weights,
            "lambdas": self.lambdas(),
            "purity": purity(&self.weights),
            "schmidt_number": schmidt_number(&self.weights),
            "truncation": self.truncation,
            "discarded_weight": self.discarded_weight(),
            "grid_s": self.signal_modes.grid(),
            "grid_i": self.idler_modes.grid(),
            "signal_modes": modes(&self.signal_modes),
            "idler_modes": modes(&self.idler_modes),
        })
    }
}

/// Singular-value decomposition of the quadrature-weighted amplitude.
///
/// Modes are phase-fixed so each signal mode's first largest-magnitude
/// sample is real positive, with the compensating phase in the idler mode.
/// Pairs with degenerate weights are rotated within their subspace to
/// diagonalize the harmonic-oscillator number operator fitted to that
/// subspace, which lines them up with Hermite-Gaussian orders and sorts them
/// by order.
pub fn schmidt_decompose(
    jsa: &JointSpectralAmplitude,
    truncation: Option<usize>,
) -> Result<SchmidtDecomposition> {
    let (ns, ni) = (jsa.grid_s.len(), jsa.grid_i.len());
    let max_rank = ns.min(ni);
    if let Some(t) = truncation {
        if t == 0 || t > max_rank {
            return Err(TmError::InvalidParameter(format!(
                "truncation {t} outside 1..={max_rank}"
            )));
        }
    }
    let (ds, di) = (jsa.grid_s.step(), jsa.grid_i.step());
    let weighted = jsa.amplitude.scale((ds * di).sqrt());
    let (spectrum, u, v) = svd(&weighted);

    let keep = truncation.unwrap_or_else(|| {
        let mut acc = 0.0;
        spectrum
            .iter()
            .position(|w| {
                acc += w * w;
                acc >= DEFAULT_CAPTURE
            })
            .map_or(max_rank, |k| k + 1)
    });

    // columns: left singular vectors (signal) and right singular vectors (idler, V not V†)
    let mut us: Vec<Vec<Complex64>> = (0..keep).map(|k| u.column(k).iter().copied().collect()).collect();
    let mut vs: Vec<Vec<Complex64>> = (0..keep).map(|k| v.column(k).iter().copied().collect()).collect();

    let mut start = 0;
    while start < keep {
        let mut end = start + 1;
        while end < keep && (spectrum[start] - spectrum[end]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            align_cluster(&jsa.grid_s, &mut us[start..end], &mut vs[start..end])?;
        }
        start = end;
    }

    for (uk, vk) in us.iter_mut().zip(vs.iter_mut()) {
        let phase = reference_phase(uk);
        uk.iter_mut().for_each(|z| *z *= phase.conj());
        vk.iter_mut().for_each(|z| *z *= phase.conj());
    }

    let sqrt_ds = ds.sqrt();
    let sqrt_di = di.sqrt();
    let signal = us
        .iter()
        .enumerate()
        .map(|(k, uk)| {
            TemporalMode::from_amplitude(jsa.grid_s, uk.iter().map(|z| z / sqrt_ds).collect(), Some(format!("signal_{k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let idler = vs
        .iter()
        .enumerate()
        .map(|(k, vk)| {
            TemporalMode::from_amplitude(jsa.grid_i, vk.iter().map(|z| z.conj() / sqrt_di).collect(), Some(format!("idler_{k}")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SchmidtDecomposition {
        weights: spectrum[..keep].to_vec(),
        spectrum,
        signal_modes: ModeBasis::new(signal, BasisFamily::Custom)?,
        idler_modes: ModeBasis::new(idler, BasisFamily::Custom)?,
        truncation: keep,
    })
}

/// Phase of the first sample whose magnitude is within round-off of the
/// maximum; stable against mirror-symmetric modes with twin peaks.
fn reference_phase(v: &[Complex64]) -> Complex64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let z = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied().unwrap_or(ZERO);
    if z.norm() == 0.0 {
        Complex64::from(1.0)
    } else {
        z / z.norm()
    }
}

/// Rotates a degenerate cluster of singular-vector pairs into the
/// eigenbasis of `N = (x²/s² + s²t²)/2` restricted to the cluster, where `x`
/// is the centered signal frequency, `t` its conjugate time and `s` the
/// width for which the cluster's `x` and `t` spreads balance. For
/// Hermite-Gaussian content this recovers the individual orders.
fn align_cluster(grid: &FrequencyGrid, us: &mut [Vec<Complex64>], vs: &mut [Vec<Complex64>]) -> Result<()> {
    let c = us.len();
    let step = grid.step();
    let modes = us
        .iter()
        .map(|uk| TemporalMode::from_amplitude(*grid, uk.iter().map(|z| z / step.sqrt()).collect(), None))
        .collect::<Result<Vec<_>>>()?;
    let times = modes.iter().map(to_time_domain).collect::<Result<Vec<_>>>()?;
    let tgrid = *times[0].grid();

    let (x_mean, x_var) = cluster_moments(&modes);
    let (t_mean, t_var) = cluster_moments(&times);
    let s2 = (x_var / t_var).sqrt();

    let mut number = CMatrix::zeros(c, c);
    for a in 0..c {
        for b in 0..c {
            let fx: Complex64 = (0..grid.len())
                .map(|i| modes[a].amplitude()[i].conj() * modes[b].amplitude()[i] * (grid.offset(i) - x_mean).powi(2))
                .sum::<Complex64>()
                * step;
            let ft: Complex64 = (0..tgrid.len())
                .map(|i| times[a].amplitude()[i].conj() * times[b].amplitude()[i] * (tgrid.offset(i) - t_mean).powi(2))
                .sum::<Complex64>()
                * tgrid.step();
            number[(a, b)] = 0.5 * (fx / s2 + ft * s2);
        }
    }
    let (_, w) = hermitian_eigen(&number);
    let rotate = |vecs: &mut [Vec<Complex64>]| {
        let old = vecs.to_vec();
        for (j, target) in vecs.iter_mut().enumerate() {
            for (i, slot) in target.iter_mut().enumerate() {
                *slot = (0..c).map(|k| old[k][i] * w[(k, j)]).sum();
            }
        }
    };
    rotate(us);
    rotate(vs);
    Ok(())
}

/// Mean and variance of the offset coordinate, averaged over modes.
fn cluster_moments(modes: &[TemporalMode]) -> (f64, f64) {
    let g = modes[0].grid();
    let c = modes.len() as f64;
    let weighted = |f: &dyn Fn(f64) -> f64| -> f64 {
        modes
            .iter()
            .map(|m| m.amplitude().iter().enumerate().map(|(i, z)| z.norm_sqr() * f(g.offset(i))).sum::<f64>())
            .sum::<f64>()
            * g.step()
            / c
    };
    let mean = weighted(&|x| x);
    (mean, weighted(&|x| (x - mean).powi(2)))
}

/// Binomial Schmidt weights `√(C(n,k)/2ⁿ)`, `k = 0..=n`, of a matched
/// Gaussian source pumped by `HG_n`.
pub fn analytic_weights(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    let total = 2f64.powi(n as i32);
    row.iter().map(|c| (c / total).sqrt()).collect()
}

/// `P = Σ λ_k²` for weights `√λ_k`.
pub fn purity(weights: &[f64]) -> f64 {
    weights.iter().map(|w| w.powi(4)).sum()
}

/// `K = 1/P`.
pub fn schmidt_number(weights: &[f64]) -> f64 {
    1.0 / purity(weights)
}

/// Grids and specs for a degenerate, group-velocity matched source whose
/// phasematching width equals the pump width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineeredSource {
    pub order: usize,
    pub sigma: f64,
    pub center: f64,
    pub n_points: usize,
}

impl EngineeredSource {
    pub fn new(order: usize, sigma: f64, center: f64, n_points: usize) -> Self {
        Self { order, sigma, center, n_points }
    }

    /// Symmetric grid wide enough for the pump along the sum axis and for
    /// the signal/idler modes (width σ/√2) up to `order`; at least ±8σ.
    pub fn grid(&self) -> Result<FrequencyGrid> {
        let modes = 2.0 * support_half_width(self.order, self.sigma / std::f64::consts::SQRT_2);
        let span = (16.0 * self.sigma).max(modes);
        FrequencyGrid::new(self.center, span, self.n_points)
    }

    pub fn pump(&self) -> PumpSpec {
        PumpSpec { order: self.order, sigma: self.sigma, pump_center: 2.0 * self.center }
    }

    pub fn phasematch(&self) -> PhasematchSpec {
        PhasematchSpec::engineered(self.sigma)
    }

    pub fn jsa(&self) -> Result<JointSpectralAmplitude> {
        let g = self.grid()?;
        jsa(&pump_envelope(&self.pump(), &g, &g)?, &phasematching(&self.phasematch(), &g, &g)?)
    }
}
