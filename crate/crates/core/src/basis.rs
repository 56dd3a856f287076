//! Discretized frequency grids and temporal-mode function families.
//!
//! Modes are complex spectral amplitudes sampled on a uniform grid. Inner
//! products are plain Riemann sums `Σ conj(f_i) g_i · step`; the `1/2π` of
//! the continuum frequency integral is absorbed into the amplitude
//! convention, so a mode is normalized when `Σ |a_i|² · step = 1`. With that
//! convention the time-domain transform is the symmetric
//! `ã(t) = (2π)^{-1/2} ∫ dω a(ω) e^{-i(ω-ω₀)t}`, which is unitary.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::linalg::{norm_sq, CMatrix, ZERO};

/// Smallest number of samples a grid may have.
pub const MIN_POINTS: usize = 2;

/// Uniform discretization of an angular-frequency (or time) interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    center: f64,
    span: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, span: f64, n_points: usize) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(TmError::InvalidGrid(format!("span must be positive, got {span}")));
        }
        if !center.is_finite() {
            return Err(TmError::InvalidGrid(format!("center must be finite, got {center}")));
        }
        if n_points < MIN_POINTS {
            return Err(TmError::InvalidGrid(format!(
                "too few points: {n_points} (need at least {MIN_POINTS})"
            )));
        }
        Ok(Self { center, span, n_points })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.span / (self.n_points - 1) as f64
    }

    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.span
    }

    pub fn end(&self) -> f64 {
        self.center + 0.5 * self.span
    }

    /// Sample `i`, computed symmetrically about the center so that the
    /// grid is exactly reproducible from `(center, span, n_points)`.
    pub fn point(&self, i: usize) -> f64 {
        self.center + self.offset(i)
    }

    /// Distance of sample `i` from the grid center.
    pub fn offset(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.n_points - 1) as f64) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Same sample count and sample positions up to round-off.
    pub fn matches(&self, other: &FrequencyGrid) -> bool {
        let tol = 1e-9 * self.step();
        self.n_points == other.n_points
            && (self.center - other.center).abs() <= tol
            && (self.span - other.span).abs() <= tol
    }

    /// Checks that `[lo, hi]` lies inside the grid.
    pub fn contains_interval(&self, lo: f64, hi: f64) -> bool {
        let slack = 1e-9 * self.span;
        lo >= self.start() - slack && hi <= self.end() + slack
    }
}

/// Builds a grid; see [`FrequencyGrid::new`].
pub fn make_grid(center: f64, span: f64, n_points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(center, span, n_points)
}

/// Which variable a mode's grid samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Frequency,
    /// Time-domain envelope; `carrier` is the center of the frequency grid
    /// the mode was transformed from.
    Time { carrier: f64 },
}

/// A normalized complex amplitude on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalMode {
    grid: FrequencyGrid,
    label: Option<String>,
    #[serde(default = "frequency_domain")]
    domain: Domain,
    amplitude: Vec<Complex64>,
}

fn frequency_domain() -> Domain {
    Domain::Frequency
}

impl TemporalMode {
    /// Wraps an amplitude vector, renormalizing it to unit quadrature norm.
    pub fn from_amplitude(
        grid: FrequencyGrid,
        amplitude: Vec<Complex64>,
        label: Option<String>,
    ) -> Result<Self> {
        Self::with_domain(grid, amplitude, label, Domain::Frequency)
    }

    fn with_domain(
        grid: FrequencyGrid,
        mut amplitude: Vec<Complex64>,
        label: Option<String>,
        domain: Domain,
    ) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(TmError::DimensionMismatch { expected: grid.len(), got: amplitude.len() });
        }
        let norm = (norm_sq(&amplitude) * grid.step()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(TmError::InvalidParameter("mode amplitude has zero norm".into()));
        }
        amplitude.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { grid, label, domain, amplitude })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Quadrature norm `Σ |a_i|² · step`.
    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.amplitude) * self.grid.step()
    }

    /// Multiplies by a complex scalar, then renormalizes.
    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        let amp = self.amplitude.iter().map(|a| a * factor).collect();
        Self::with_domain(self.grid, amp, self.label.clone(), self.domain)
    }

    /// Columnar text: one `x re im` line per sample after a `#` header.
    pub fn to_columns(&self) -> String {
        let mut out = String::new();
        let axis = match self.domain {
            Domain::Frequency => "omega",
            Domain::Time { .. } => "t",
        };
        let _ = writeln!(out, "# {axis} re im");
        for (i, a) in self.amplitude.iter().enumerate() {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", self.grid.point(i), a.re, a.im);
        }
        out
    }

    /// Parses the columnar format, rebuilding the grid from the first and
    /// last abscissa. Rejects non-uniform spacing.
    pub fn from_columns(text: &str, label: Option<String>) -> Result<Self> {
        let mut xs = Vec::new();
        let mut amp = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| TmError::InvalidParameter(format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 3 {
                return Err(TmError::InvalidParameter(format!(
                    "line {}: expected 3 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            xs.push(cols[0]);
            amp.push(Complex64::new(cols[1], cols[2]));
        }
        if xs.len() < MIN_POINTS {
            return Err(TmError::InvalidGrid(format!("too few points: {}", xs.len())));
        }
        let (first, last) = (xs[0], xs[xs.len() - 1]);
        let grid = FrequencyGrid::new(0.5 * (first + last), last - first, xs.len())?;
        let tol = 1e-6 * grid.step();
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.point(i)).abs() > tol {
                return Err(TmError::InvalidGrid(format!("non-uniform sample {i}: {x}")));
            }
        }
        Self::from_amplitude(grid, amp, label)
    }
}

/// Family tag for a [`ModeBasis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    HermiteGaussian,
    Custom,
}

/// Ordered orthonormal set of modes on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    family: BasisFamily,
    modes: Vec<TemporalMode>,
}

/// Allowed deviation of the Gram matrix from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-6;

impl ModeBasis {
    pub fn new(modes: Vec<TemporalMode>, family: BasisFamily) -> Result<Self> {
        if modes.is_empty() {
            return Err(TmError::Empty("mode basis needs at least one mode".into()));
        }
        let basis = Self { family, modes };
        let gram = basis.gram_matrix()?;
        let n = gram.nrows();
        let dev = crate::linalg::max_abs_diff(&gram, &CMatrix::identity(n, n));
        if dev > ORTHONORMALITY_TOL {
            return Err(TmError::InvalidParameter(format!(
                "modes are not orthonormal: Gram deviation {dev:.3e}"
            )));
        }
        Ok(basis)
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn modes(&self) -> &[TemporalMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.modes[0].grid()
    }

    pub fn gram_matrix(&self) -> Result<CMatrix> {
        let n = self.modes.len();
        let mut gram = CMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                gram[(j, k)] = inner_product(&self.modes[j], &self.modes[k])?;
            }
        }
        Ok(gram)
    }

    /// Coefficients `⟨f_j, mode⟩`.
    pub fn project(&self, mode: &TemporalMode) -> Result<Vec<Complex64>> {
        self.modes.iter().map(|f| inner_product(f, mode)).collect()
    }
}

/// Normalized Hermite functions `ψ_0..ψ_n` at `x`, by the stable three-term
/// recurrence. `ψ_k(x) = H_k(x) e^{-x²/2} / sqrt(2^k k! √π)`.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if n >= 1 {
        out.push(2f64.sqrt() * x * psi0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite_polynomial(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Half-width of the interval a Hermite-Gaussian of `order` and `width`
/// needs: the classical turning point plus 4σ of tail on each side.
pub fn support_half_width(order: usize, width: f64) -> f64 {
    width * (4.0 + (2.0 * order as f64 + 1.0).sqrt())
}

/// Hermite-Gaussian mode `∝ H_n((ω-ω₀)/σ) exp(-(ω-ω₀)²/(2σ²))`.
pub fn hermite_gaussian(
    order: usize,
    center: f64,
    width: f64,
    grid: &FrequencyGrid,
) -> Result<TemporalMode> {
    if !(width.is_finite() && width > 0.0) {
        return Err(TmError::InvalidParameter(format!("width must be positive, got {width}")));
    }
    let half = support_half_width(order, width);
    if 2.0 * half > grid.span() * (1.0 + 1e-12) || !grid.contains_interval(center - half, center + half) {
        return Err(TmError::SupportViolation {
            what: format!("HG_{order} (width {width:.3e}, center {center:.6e})"),
            required: 2.0 * half,
            available: grid.span(),
        });
    }
    let amp = (0..grid.len())
        .map(|i| {
            let x = (grid.point(i) - center) / width;
            Complex64::from(hermite_functions(order, x)[order] / width.sqrt())
        })
        .collect();
    TemporalMode::from_amplitude(*grid, amp, Some(format!("HG{order}")))
}

/// `HG_0 .. HG_{count-1}` sharing center and width.
pub fn hermite_gaussian_basis(
    count: usize,
    center: f64,
    width: f64,
    grid: &FrequencyGrid,
) -> Result<ModeBasis> {
    if count == 0 {
        return Err(TmError::Empty("basis size must be positive".into()));
    }
    let modes = (0..count)
        .map(|n| hermite_gaussian(n, center, width, grid))
        .collect::<Result<Vec<_>>>()?;
    ModeBasis::new(modes, BasisFamily::HermiteGaussian)
}

/// Quadrature inner product `⟨f, g⟩ = Σ conj(f_i) g_i · step`.
pub fn inner_product(f: &TemporalMode, g: &TemporalMode) -> Result<Complex64> {
    if !f.grid.matches(&g.grid) {
        return Err(TmError::GridMismatch(format!("{:?} vs {:?}", f.grid, g.grid)));
    }
    if f.domain != g.domain {
        return Err(TmError::GridMismatch("modes live in different domains".into()));
    }
    let sum: Complex64 = f.amplitude.iter().zip(&g.amplitude).map(|(a, b)| a.conj() * b).sum();
    Ok(sum * f.grid.step())
}

/// Coherent superposition `Σ c_j f_j` of basis modes.
pub fn superpose(coeffs: &[Complex64], basis: &ModeBasis) -> Result<TemporalMode> {
    if coeffs.len() != basis.len() {
        return Err(TmError::DimensionMismatch { expected: basis.len(), got: coeffs.len() });
    }
    let n2 = norm_sq(coeffs);
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(TmError::NotNormalized { norm_sq: n2, context: "superposition coefficients".into() });
    }
    let grid = *basis.grid();
    let mut amp = vec![ZERO; grid.len()];
    for (c, mode) in coeffs.iter().zip(basis.modes()) {
        for (acc, a) in amp.iter_mut().zip(mode.amplitude()) {
            *acc += c * a;
        }
    }
    TemporalMode::from_amplitude(grid, amp, None)
}

fn centered_phase(n: usize, idx: usize, sign: f64) -> Complex64 {
    let c = 0.5 * (n as f64 - 1.0);
    Complex64::from_polar(1.0, sign * 2.0 * PI * c * idx as f64 / n as f64)
}

/// Time grid conjugate to a frequency grid: same sample count, step
/// `2π/(N·Δω)`, centered on zero.
pub fn conjugate_time_grid(grid: &FrequencyGrid) -> FrequencyGrid {
    let n = grid.len();
    let dt = 2.0 * PI / (n as f64 * grid.step());
    FrequencyGrid { center: 0.0, span: dt * (n - 1) as f64, n_points: n }
}

/// Transforms a spectral amplitude to its temporal envelope.
pub fn to_time_domain(mode: &TemporalMode) -> Result<TemporalMode> {
    if mode.domain != Domain::Frequency {
        return Err(TmError::InvalidParameter("mode is already in the time domain".into()));
    }
    let grid = mode.grid;
    let n = grid.len();
    let tgrid = conjugate_time_grid(&grid);
    let c = 0.5 * (n as f64 - 1.0);
    let global = Complex64::from_polar(1.0, -2.0 * PI * c * c / n as f64);
    let scale = (grid.step() / (n as f64 * tgrid.step())).sqrt();
    let mut buf: Vec<Complex64> = mode
        .amplitude
        .iter()
        .enumerate()
        .map(|(j, a)| a * centered_phase(n, j, 1.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let amp = buf
        .iter()
        .enumerate()
        .map(|(k, x)| x * centered_phase(n, k, 1.0) * global * scale)
        .collect();
    TemporalMode::with_domain(tgrid, amp, mode.label.clone(), Domain::Time { carrier: grid.center() })
}

/// Inverse of [`to_time_domain`].
pub fn to_frequency_domain(mode: &TemporalMode) -> Result<TemporalMode> {
    let Domain::Time { carrier } = mode.domain else {
        return Err(TmError::InvalidParameter("mode is already in the frequency domain".into()));
    };
    let tgrid = mode.grid;
    let n = tgrid.len();
    let dw = 2.0 * PI / (n as f64 * tgrid.step());
    let grid = FrequencyGrid::new(carrier, dw * (n - 1) as f64, n)?;
    let c = 0.5 * (n as f64 - 1.0);
    let global = Complex64::from_polar(1.0, 2.0 * PI * c * c / n as f64);
    let scale = (tgrid.step() / (n as f64 * grid.step())).sqrt();
    let mut buf: Vec<Complex64> = mode
        .amplitude
        .iter()
        .enumerate()
        .map(|(k, a)| a * centered_phase(n, k, -1.0))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let amp = buf
        .iter()
        .enumerate()
        .map(|(j, x)| x * centered_phase(n, j, -1.0) * global * scale)
        .collect();
    TemporalMode::with_domain(grid, amp, mode.label.clone(), Domain::Frequency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff, I};

    fn grid16(sigma: f64) -> FrequencyGrid {
        FrequencyGrid::new(0.0, 16.0 * sigma, 512).unwrap()
    }

    #[test]
    fn eleven_point_grid_has_unit_step() {
        let g = make_grid(0.0, 10.0, 11).unwrap();
        assert_eq!(g.step(), 1.0);
        let expected: Vec<f64> = (-5..=5).map(f64::from).collect();
        assert_eq!(g.points(), expected);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(matches!(make_grid(0.0, 10.0, 1), Err(TmError::InvalidGrid(_))));
        assert!(matches!(make_grid(0.0, 0.0, 64), Err(TmError::InvalidGrid(_))));
        assert!(matches!(make_grid(0.0, -1.0, 64), Err(TmError::InvalidGrid(_))));
    }

    #[test]
    fn optical_grid_endpoints() {
        let w0 = 1.216e15;
        let g = make_grid(w0, 4e13, 512).unwrap();
        assert_eq!(g.len(), 512);
        assert!((g.point(0) - (w0 - 2e13)).abs() < 1e-3);
        assert!((g.point(511) - (w0 + 2e13)).abs() < 1e-3);
        assert!((0.5 * (g.point(0) + g.point(511)) - w0).abs() < 1e-3);
    }

    #[test]
    fn hermite_polynomial_matches_closed_forms() {
        for &x in &[-1.7, 0.0, 0.3, 2.2] {
            assert!((hermite_polynomial(2, x) - (4.0 * x * x - 2.0)).abs() < 1e-12);
            assert!((hermite_polynomial(3, x) - (8.0 * x * x * x - 12.0 * x)).abs() < 1e-12);
        }
        // ψ_n = H_n e^{-x²/2} / sqrt(2^n n! √π)
        let x = 0.7;
        let psi = hermite_functions(4, x);
        let direct = hermite_polynomial(4, x) * (-0.5 * x * x).exp() / (16.0 * 24.0 * PI.sqrt()).sqrt();
        assert!((psi[4] - direct).abs() < 1e-14);
    }

    #[test]
    fn gaussian_is_normalized_and_orthogonal_to_hg1() {
        let g = grid16(1.0);
        let f0 = hermite_gaussian(0, 0.0, 1.0, &g).unwrap();
        let f1 = hermite_gaussian(1, 0.0, 1.0, &g).unwrap();
        assert!((inner_product(&f0, &f0).unwrap() - 1.0).norm() < 1e-9);
        assert!(inner_product(&f0, &f1).unwrap().norm() < 1e-9);
    }

    #[test]
    fn hg_gram_matrix_is_identity() {
        let g = grid16(2.5);
        let basis = hermite_gaussian_basis(6, 0.0, 2.5, &g).unwrap();
        let gram = basis.gram_matrix().unwrap();
        assert!(max_abs_diff(&gram, &CMatrix::identity(6, 6)) < 1e-6);
        let f0 = &basis.modes()[0];
        let f2 = &basis.modes()[2];
        assert!(inner_product(f0, f2).unwrap().norm() < 1e-6);
    }

    #[test]
    fn hg1_is_odd() {
        let g = grid16(1.0);
        let f1 = hermite_gaussian(1, 0.0, 1.0, &g).unwrap();
        let a = f1.amplitude();
        for i in 0..a.len() {
            assert!((a[i] + a[a.len() - 1 - i]).norm() < 1e-12);
        }
    }

    #[test]
    fn support_rule_rejects_narrow_grid() {
        let g = FrequencyGrid::new(0.0, 10.0, 256).unwrap();
        // HG_3 at σ=1 needs 8 + 2√7 ≈ 13.3
        let err = hermite_gaussian(3, 0.0, 1.0, &g).unwrap_err();
        assert!(matches!(err, TmError::SupportViolation { .. }));
        // an off-center mode can violate containment even when the span is enough
        let g = FrequencyGrid::new(0.0, 16.0, 256).unwrap();
        assert!(hermite_gaussian(0, 5.0, 1.0, &g).is_err());
    }

    #[test]
    fn inner_product_linearity_and_mismatch() {
        let g = grid16(1.0);
        let f = hermite_gaussian(2, 0.0, 1.0, &g).unwrap();
        let fi = TemporalMode::from_amplitude(g, f.amplitude().iter().map(|a| a * I).collect(), None).unwrap();
        assert!((inner_product(&f, &fi).unwrap() - I).norm() < 1e-12);
        let other = FrequencyGrid::new(0.0, 17.0, 512).unwrap();
        let h = hermite_gaussian(0, 0.0, 1.0, &other).unwrap();
        assert!(matches!(inner_product(&f, &h), Err(TmError::GridMismatch(_))));
    }

    #[test]
    fn superpose_recovers_coefficients() {
        let g = grid16(1.0);
        let basis = hermite_gaussian_basis(2, 0.0, 1.0, &g).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for coeffs in [vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(0.0, s)]] {
            let m = superpose(&coeffs, &basis).unwrap();
            let proj = basis.project(&m).unwrap();
            for (p, c) in proj.iter().zip(&coeffs) {
                assert!((p - c).norm() < 1e-6, "{p} vs {c}");
            }
        }
        assert!(matches!(
            superpose(&[c(1.0, 0.0), c(1.0, 0.0)], &basis),
            Err(TmError::NotNormalized { .. })
        ));
    }

    #[test]
    fn time_domain_is_unitary_and_invertible() {
        let g = grid16(1.0);
        let f = hermite_gaussian(1, 0.0, 1.0, &g).unwrap();
        let h = hermite_gaussian(2, 0.0, 1.0, &g).unwrap();
        let mix = TemporalMode::from_amplitude(
            g,
            f.amplitude().iter().zip(h.amplitude()).map(|(a, b)| a + c(0.3, -0.2) * b).collect(),
            None,
        )
        .unwrap();
        let ft = to_time_domain(&f).unwrap();
        let mt = to_time_domain(&mix).unwrap();
        assert!((ft.norm_sq() - 1.0).abs() < 1e-9);
        let before = inner_product(&f, &mix).unwrap();
        let after = inner_product(&ft, &mt).unwrap();
        assert!((before - after).norm() < 1e-9);
        let back = to_frequency_domain(&mt).unwrap();
        let diff: f64 = back.amplitude().iter().zip(mix.amplitude()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn gaussian_spectrum_gives_gaussian_pulse() {
        let sigma = 1.0;
        let g = grid16(sigma);
        let f = hermite_gaussian(0, 0.0, sigma, &g).unwrap();
        let ft = to_time_domain(&f).unwrap();
        let tg = *ft.grid();
        for (i, a) in ft.amplitude().iter().enumerate() {
            let t = tg.point(i);
            let expected = hermite_functions(0, t / (1.0 / sigma))[0] * sigma.sqrt();
            assert!((a - Complex64::from(expected)).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn columns_roundtrip() {
        let g = FrequencyGrid::new(1.2e15, 4e13, 64).unwrap();
        let f = hermite_gaussian(1, 1.2e15, 2e12, &g).unwrap();
        let back = TemporalMode::from_columns(&f.to_columns(), Some("HG1".into())).unwrap();
        assert_eq!(back.grid().len(), 64);
        assert!((inner_product(&f, &back).unwrap() - 1.0).norm() < 1e-9);
    }
}
