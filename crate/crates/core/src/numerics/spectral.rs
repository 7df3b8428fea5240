use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{GridFunction, GridSpec, DEFAULT_EDGE_TOL};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Angular wavenumbers of the DFT bins in FFT order, for the periodic
/// extension of period `n·h`. For even `n` the Nyquist bin carries `−π/h`.
pub fn wavenumbers(grid: &GridSpec) -> Vec<f64> {
    let n = grid.n_points;
    let base = 2.0 * PI / grid.period();
    (0..n)
        .map(|j| {
            let m = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            base * m
        })
        .collect()
}

/// Discrete momentum distribution: `(k_j, |F_j|²/Σ|F|²)` over the DFT bins
/// in FFT order. All weights are zero for the zero function.
pub fn momentum_distribution(f: &GridFunction) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let (fwd, _) = plans(n);
    let mut buf = f.values().to_vec();
    fwd.process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    let weights = if total > 0.0 { power.iter().map(|p| p / total).collect() } else { power };
    (wavenumbers(f.grid()), weights)
}

/// Applies the Fourier multiplier `mult(k)` to `f`.
fn fourier_multiply(f: &GridFunction, mult: impl Fn(usize, f64) -> Complex64) -> GridFunction {
    let grid = *f.grid();
    let n = grid.n_points;
    let (fwd, inv) = plans(n);
    let mut buf = f.values().to_vec();
    fwd.process(&mut buf);
    let k = wavenumbers(&grid);
    let scale = 1.0 / n as f64;
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= mult(j, k[j]) * scale;
    }
    inv.process(&mut buf);
    GridFunction::new(grid, buf).expect("length preserved")
}

fn nyquist_bin(n: usize) -> Option<usize> {
    n.is_multiple_of(2).then_some(n / 2)
}

/// `df/ds` by forward FFT, multiplication by `i·k`, inverse FFT. The Nyquist
/// bin of an even-length grid is dropped.
pub fn spectral_derivative(f: &GridFunction) -> GridFunction {
    f.check_edge_decay(DEFAULT_EDGE_TOL);
    spectral_derivative_unchecked(f)
}

/// [`spectral_derivative`] without the edge-decay check, for assembling
/// operator matrices from unit vectors.
pub(crate) fn spectral_derivative_unchecked(f: &GridFunction) -> GridFunction {
    let nyq = nyquist_bin(f.len());
    fourier_multiply(f, |j, k| if Some(j) == nyq { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) })
}

/// `d²f/ds²` with multiplier `−k²` (Nyquist bin kept).
pub fn spectral_second_derivative(f: &GridFunction) -> GridFunction {
    f.check_edge_decay(DEFAULT_EDGE_TOL);
    fourier_multiply(f, |_, k| Complex64::new(-k * k, 0.0))
}

/// Fourth-order central differences with zero extension past the grid ends.
pub fn fd4_derivative(f: &GridFunction) -> GridFunction {
    let h = f.grid().spacing();
    let v = f.values();
    let n = v.len();
    let at = |j: isize| -> Complex64 {
        if j < 0 || j >= n as isize {
            Complex64::new(0.0, 0.0)
        } else {
            v[j as usize]
        }
    };
    let values =
        (0..n as isize).map(|j| (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * h)).collect();
    GridFunction::new(*f.grid(), values).expect("length preserved")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    #[default]
    Spectral,
    CentralFd4,
}

pub fn derivative(f: &GridFunction, scheme: DerivativeScheme) -> GridFunction {
    match scheme {
        DerivativeScheme::Spectral => spectral_derivative(f),
        DerivativeScheme::CentralFd4 => fd4_derivative(f),
    }
}

/// Band-limited translation `s ↦ f(s + delta)` via an FFT phase ramp; exact
/// (a cyclic sample shift) when `delta` is a multiple of the spacing.
pub fn shift(f: &GridFunction, delta: f64) -> GridFunction {
    if delta == 0.0 {
        return f.clone();
    }
    let out = fourier_multiply(f, |_, k| Complex64::from_polar(1.0, k * delta));
    let peak = f.max_abs();
    if peak > 0.0 && out.edge_magnitude() / peak > DEFAULT_EDGE_TOL {
        log::warn!(
            "shift by {delta} wraps mass around the periodic grid (edge/peak = {:.3e})",
            out.edge_magnitude() / peak
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: GridSpec, center: f64) -> GridFunction {
        GridFunction::from_real_fn(grid, |s| (-(s - center).powi(2)).exp())
    }

    #[test]
    fn fourier_mode_is_an_eigenfunction() {
        let g = GridSpec::new(-10.0, 10.0, 512).unwrap();
        let k = 2.0 * PI * 7.0 / g.period();
        let f = GridFunction::from_fn(g, |s| Complex64::from_polar(1.0, k * (s - g.s_min)));
        let df = fourier_multiply(&f, |j, kk| {
            if Some(j) == nyquist_bin(512) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kk)
            }
        });
        let expected = f.scale(Complex64::new(0.0, k));
        assert!(df.max_distance(&expected) < 1e-10);
    }

    #[test]
    fn gaussian_derivative() {
        let g = GridSpec::new(-10.0, 10.0, 512).unwrap();
        let f = gaussian(g, 0.0);
        let df = spectral_derivative(&f);
        let exact = GridFunction::from_real_fn(g, |s| -2.0 * s * (-s * s).exp());
        assert!(df.max_distance(&exact) < 1e-8);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = GridSpec::new(-10.0, 10.0, 256).unwrap();
        let f = GridFunction::from_real_fn(g, |_| 3.0);
        assert!(spectral_derivative(&f).max_abs() < 1e-12);
    }

    #[test]
    fn first_derivative_squared_matches_second() {
        let g = GridSpec::default();
        let f = GridFunction::from_fn(g, |s| Complex64::from_polar((-(s - 0.5).powi(2) / 1.5).exp(), 1.3 * s));
        let dd = spectral_derivative(&spectral_derivative(&f));
        let d2 = spectral_second_derivative(&f);
        assert!(dd.max_distance(&d2) < 1e-8);
    }

    #[test]
    fn fd4_is_fourth_order() {
        let err = |n| {
            let g = GridSpec::new(-8.0, 8.0, n).unwrap();
            let f = gaussian(g, 0.3);
            let exact = GridFunction::from_real_fn(g, |s| -2.0 * (s - 0.3) * (-(s - 0.3).powi(2)).exp());
            fd4_derivative(&f).max_distance(&exact)
        };
        let ratio = err(201) / err(401);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn zero_shift_is_identity() {
        let g = GridSpec::default();
        let f = gaussian(g, 0.0);
        assert!(shift(&f, 0.0).max_distance(&f) < 1e-14);
    }

    #[test]
    fn gaussian_translate() {
        let g = GridSpec::default();
        let f = gaussian(g, 0.0);
        let shifted = shift(&f, 1.0);
        let exact = gaussian(g, -1.0);
        assert!(shifted.l2_distance(&exact) < 1e-8);
    }

    #[test]
    fn grid_step_shift_is_cyclic() {
        let g = GridSpec::default();
        let f = GridFunction::from_fn(g, |s| Complex64::from_polar((-(s * s)).exp(), 0.4 * s));
        let shifted = shift(&f, g.spacing());
        let n = g.n_points;
        let cyclic: Vec<_> = (0..n).map(|j| f.values()[(j + 1) % n]).collect();
        let cyclic = GridFunction::new(g, cyclic).unwrap();
        assert!(shifted.max_distance(&cyclic) < 1e-12);
    }

    #[test]
    fn shift_round_trip() {
        let g = GridSpec::default();
        let f = GridFunction::from_fn(g, |s| Complex64::from_polar((-(s - 1.0).powi(2)).exp(), -0.8 * s));
        let back = shift(&shift(&f, 0.37), -0.37);
        assert!(back.max_distance(&f) < 1e-10);
    }

    #[test]
    fn wavenumbers_are_fft_ordered() {
        let g = GridSpec::new(0.0, 7.0, 8).unwrap();
        let k = wavenumbers(&g);
        let base = 2.0 * PI / 8.0;
        assert!((k[1] - base).abs() < 1e-15);
        assert!((k[4] + 4.0 * base).abs() < 1e-15);
        assert!((k[7] + base).abs() < 1e-15);
    }
}
