//! Uniform grids on the real line, grid functions, quadrature, spectral
//! differentiation, band-limited shifts and Hermitian eigenvalue bounds.
//!
//! Every vector of the Hilbert space `L²(ℝ, ds)` is sampled on a [`GridSpec`].
//! The FFT-based operators assume the sampled function is negligible at both
//! grid ends (periodic extension with period `n·h`).

mod io;
mod linalg;
mod spectral;

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linalg::{hermitian_part, min_hermitian_eigenvalue, operator_norm_estimate, HermitianSpectrum};
pub(crate) use spectral::spectral_derivative_unchecked;
pub use spectral::{
    derivative, fd4_derivative, momentum_distribution, shift, spectral_derivative, spectral_second_derivative,
    wavenumbers, DerivativeScheme,
};

/// Edge magnitude (relative to the peak) above which a function is treated as
/// not decayed.
pub const DEFAULT_EDGE_TOL: f64 = 1e-10;

/// Relative magnitude that delimits the numerical support of a grid function
/// when computing residual scales.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { s_min: -12.0, s_max: 12.0, n_points: 512 }
    }
}

impl GridSpec {
    pub fn new(s_min: f64, s_max: f64, n_points: usize) -> Result<Self> {
        let grid = GridSpec { s_min, s_max, n_points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_min.is_finite() && self.s_max.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if self.s_min >= self.s_max {
            return Err(Error::InvalidGrid(format!("s_min = {} must be below s_max = {}", self.s_min, self.s_max)));
        }
        if self.n_points < 4 {
            return Err(Error::InvalidGrid(format!("n_points = {} < 4", self.n_points)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n_points - 1) as f64
    }

    /// Period of the FFT extension, `n·h`.
    pub fn period(&self) -> f64 {
        self.n_points as f64 * self.spacing()
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.s_min + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Trapezoidal weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = 0.5 * h;
        w[self.n_points - 1] = 0.5 * h;
        w
    }

    /// Same interval, twice the number of nodes.
    pub fn refined(&self) -> GridSpec {
        GridSpec { n_points: 2 * self.n_points, ..*self }
    }

    /// Same spacing, `factor` times the number of nodes, centred on the same midpoint.
    pub fn extended(&self, factor: usize) -> GridSpec {
        let h = self.spacing();
        let n = factor * (self.n_points - 1) + 1;
        let mid = 0.5 * (self.s_min + self.s_max);
        let half = 0.5 * h * (n - 1) as f64;
        GridSpec { s_min: mid - half, s_max: mid + half, n_points: n }
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.s_min && s <= self.s_max
    }
}

/// Complex samples of a function of one real variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_points {
            return Err(Error::GridMismatch(format!("{} samples for a {}-point grid", values.len(), grid.n_points)));
        }
        Ok(GridFunction { grid, values })
    }

    /// Builds a function meant to lie in the domain of the Dirac operator and
    /// warns when it does not decay at the grid ends.
    pub fn in_domain(grid: GridSpec, values: Vec<Complex64>, edge_tol: f64) -> Result<Self> {
        let f = Self::new(grid, values)?;
        f.check_edge_decay(edge_tol);
        Ok(f)
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_points).map(|j| f(grid.node(j))).collect();
        GridFunction { grid, values }
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |s| Complex64::new(f(s), 0.0))
    }

    pub fn zeros(grid: GridSpec) -> Self {
        GridFunction { grid, values: vec![Complex64::new(0.0, 0.0); grid.n_points] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> GridFunction {
        let values = self.values.iter().enumerate().map(|(j, &v)| f(self.grid.node(j), v)).collect();
        GridFunction { grid: self.grid, values }
    }

    /// Pointwise multiplication by `m(s)`.
    pub fn multiply_by(&self, m: impl Fn(f64) -> Complex64) -> GridFunction {
        self.map(|s, v| m(s) * v)
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        self.map(|_, v| c * v)
    }

    pub fn conj(&self) -> GridFunction {
        self.map(|_, v| v.conj())
    }

    /// `⟨self, other⟩ = ∫ conj(self)·other ds`.
    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        debug_assert_eq!(self.grid, other.grid);
        let w = self.grid.weights();
        self.values.iter().zip(&other.values).zip(&w).map(|((a, b), wj)| a.conj() * b * wj).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        let w = self.grid.weights();
        self.values.iter().zip(&w).map(|(v, wj)| v.norm_sqr() * wj).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus among the two end samples on each side.
    pub fn edge_magnitude(&self) -> f64 {
        let n = self.values.len();
        [0, 1, n - 2, n - 1].iter().map(|&j| self.values[j].norm()).fold(0.0, f64::max)
    }

    /// Returns whether the function decays below `tol` (relative to its peak)
    /// at both ends; logs a warning otherwise.
    pub fn check_edge_decay(&self, tol: f64) -> bool {
        let peak = self.max_abs();
        if peak == 0.0 {
            return true;
        }
        let rel = self.edge_magnitude() / peak;
        if rel > tol {
            log::warn!("grid function not decayed at the grid ends: edge/peak = {rel:.3e} > {tol:.3e}");
            false
        } else {
            true
        }
    }

    pub fn is_edge_decayed(&self, tol: f64) -> bool {
        let peak = self.max_abs();
        peak == 0.0 || self.edge_magnitude() / peak <= tol
    }

    /// Interval outside of which `|f| < threshold·max|f|`.
    pub fn support(&self, threshold: f64) -> Option<(f64, f64)> {
        let cut = threshold * self.max_abs();
        let first = self.values.iter().position(|v| v.norm() > cut)?;
        let last = self.values.iter().rposition(|v| v.norm() > cut)?;
        Some((self.grid.node(first), self.grid.node(last)))
    }

    /// `max(1, ‖f‖, max e^{s/κ} over the numerical support)`, the yardstick for
    /// residuals of operators carrying `e^{s}` factors.
    pub fn residual_scale(&self, kappa: f64) -> f64 {
        let exp_max = self.support(SUPPORT_THRESHOLD).map(|(_, hi)| (hi / kappa).exp()).unwrap_or(1.0);
        1.0_f64.max(self.norm()).max(exp_max)
    }

    pub fn l2_distance(&self, other: &GridFunction) -> f64 {
        (self - other).norm()
    }

    pub fn max_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `min_θ ‖e^{iθ}·self − other‖ / ‖other‖`: relative distance modulo a global phase.
    pub fn phase_aligned_relative_l2(&self, other: &GridFunction) -> f64 {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        let aligned = self.scale(phase);
        let denom = other.norm();
        if denom == 0.0 {
            aligned.norm()
        } else {
            aligned.l2_distance(other) / denom
        }
    }

    pub fn normalized(&self) -> Result<(GridFunction, f64)> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize a function of norm {n}")));
        }
        Ok((self.scale(Complex64::new(1.0 / n, 0.0)), n))
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        debug_assert_eq!(self.grid, rhs.grid);
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect();
        GridFunction { grid: self.grid, values }
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        debug_assert_eq!(self.grid, rhs.grid);
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        GridFunction { grid: self.grid, values }
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: Complex64) -> GridFunction {
        self.scale(rhs)
    }
}

/// Trapezoidal approximation of `∫ f(s) ds` over the grid interval.
pub fn quadrature(f: &GridFunction) -> Complex64 {
    let w = f.grid.weights();
    f.values.iter().zip(&w).map(|(v, wj)| v * wj).sum()
}

/// Two-component vector of `L²(ℝ) ⊗ ℂ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spinor {
    pub upper: GridFunction,
    pub lower: GridFunction,
}

impl Spinor {
    pub fn new(upper: GridFunction, lower: GridFunction) -> Result<Self> {
        upper.same_grid(&lower)?;
        Ok(Spinor { upper, lower })
    }

    pub fn grid(&self) -> &GridSpec {
        self.upper.grid()
    }

    /// `⟨Φ, Ψ⟩ = ∫ Φ†(s)Ψ(s) ds`.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.upper.inner(&other.upper) + self.lower.inner(&other.lower)
    }

    pub fn norm(&self) -> f64 {
        (self.upper.norm_sq() + self.lower.norm_sq()).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Spinor {
        Spinor { upper: self.upper.scale(c), lower: self.lower.scale(c) }
    }

    pub fn map_components(&self, f: impl Fn(&GridFunction) -> GridFunction) -> Spinor {
        Spinor { upper: f(&self.upper), lower: f(&self.lower) }
    }

    pub fn l2_distance(&self, other: &Spinor) -> f64 {
        (self.upper.l2_distance(&other.upper).powi(2) + self.lower.l2_distance(&other.lower).powi(2)).sqrt()
    }
}

impl Sub for &Spinor {
    type Output = Spinor;
    fn sub(self, rhs: &Spinor) -> Spinor {
        Spinor { upper: &self.upper - &rhs.upper, lower: &self.lower - &rhs.lower }
    }
}

impl Add for &Spinor {
    type Output = Spinor;
    fn add(self, rhs: &Spinor) -> Spinor {
        Spinor { upper: &self.upper + &rhs.upper, lower: &self.lower + &rhs.lower }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_nodes_are_reproducible() {
        let g = GridSpec::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(GridSpec::new(1.0, 1.0, 8).is_err());
        assert!(GridSpec::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn quadrature_of_constant_is_exact() {
        let g = GridSpec::new(0.0, 1.0, 101).unwrap();
        let f = GridFunction::from_real_fn(g, |_| 1.0);
        assert!((quadrature(&f) - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn quadrature_of_gaussian() {
        let g = GridSpec::new(-10.0, 10.0, 512).unwrap();
        let f = GridFunction::from_real_fn(g, |s| (-s * s).exp());
        assert!((quadrature(&f).re - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn quadrature_of_odd_function_vanishes() {
        let g = GridSpec::new(-10.0, 10.0, 512).unwrap();
        let f = GridFunction::from_real_fn(g, |s| s * (-s * s).exp());
        assert!(quadrature(&f).norm() < 1e-12);
    }

    #[test]
    fn quadrature_is_exact_for_affine() {
        let g = GridSpec::new(-0.3, 2.1, 37).unwrap();
        let f = GridFunction::from_real_fn(g, |s| 3.0 * s - 1.5);
        let exact = 1.5 * (2.1f64.powi(2) - 0.09) - 1.5 * 2.4;
        assert!((quadrature(&f).re - exact).abs() < 1e-12);
    }

    #[test]
    fn support_and_scale() {
        let g = GridSpec::default();
        let f = GridFunction::from_real_fn(g, |s| (-(s - 1.0).powi(2)).exp());
        let (lo, hi) = f.support(1e-8).unwrap();
        assert!(lo < -2.5 && lo > -4.0 && hi > 4.5 && hi < 6.0);
        assert!(f.residual_scale(1.0) > 90.0);
        assert!(f.check_edge_decay(DEFAULT_EDGE_TOL));
        let flat = GridFunction::from_real_fn(g, |_| 1.0);
        assert!(!flat.is_edge_decayed(DEFAULT_EDGE_TOL));
    }

    #[test]
    fn phase_alignment_removes_global_phase() {
        let g = GridSpec::default();
        let f = GridFunction::from_real_fn(g, |s| (-s * s).exp());
        let rotated = f.scale(Complex64::from_polar(1.0, 0.7));
        assert!(rotated.phase_aligned_relative_l2(&f) < 1e-14);
        assert!(rotated.l2_distance(&f) > 0.1);
    }

    #[test]
    fn extended_grid_keeps_spacing() {
        let g = GridSpec::default();
        let e = g.extended(2);
        assert!((e.spacing() - g.spacing()).abs() < 1e-15);
        assert_eq!(e.n_points, 1023);
        assert!((e.s_min + 24.0).abs() < 1e-12);
    }
}
