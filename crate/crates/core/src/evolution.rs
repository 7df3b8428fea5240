//! Continuous evolution of wave functions and residual checks for the
//! sufficient condition of causal evolution.
//!
//! At zeroth order in `1/κ` with `ψ = Φ` the condition reduces to the
//! transport equation `∂_tΦ = (is + α/2)Φ + α∂_sΦ`, solved by
//! `Φ(t; s) = Φ₀(s + αt)·e^{t(is + α/2)}·e^{iαt²/2}`. The last factor is a
//! global phase and is left out unless asked for.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::KappaParams;
use crate::error::{Error, Result};
use crate::numerics::{shift, spectral_derivative_unchecked, GridFunction, DEFAULT_EDGE_TOL, SUPPORT_THRESHOLD};
use crate::representation::RepSign;
use crate::states::{necessary_causal, ConstraintReport, PureState};

/// Largest `dt·max|λ|` allowed for RK4 on the imaginary axis.
pub const RK4_STABILITY: f64 = 2.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub alpha: f64,
    pub times: Vec<f64>,
    pub frames: Vec<GridFunction>,
    pub witness: Option<Vec<GridFunction>>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha == 1.0 || alpha == -1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "alpha", reason: format!("{alpha} is not +1 or -1") })
    }
}

impl Trajectory {
    pub fn new(
        alpha: f64,
        times: Vec<f64>,
        frames: Vec<GridFunction>,
        witness: Option<Vec<GridFunction>>,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if times.len() != frames.len() || times.is_empty() {
            return Err(Error::Trajectory(format!("{} times for {} frames", times.len(), frames.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Trajectory("times must be strictly increasing".into()));
        }
        for f in &frames[1..] {
            frames[0].same_grid(f)?;
        }
        if let Some(w) = &witness {
            if w.len() != frames.len() {
                return Err(Error::Trajectory(format!("{} witness frames for {} frames", w.len(), frames.len())));
            }
            for f in w {
                frames[0].same_grid(f)?;
            }
        }
        Ok(Trajectory { alpha, times, frames, witness })
    }

    /// `Φ(t) = Φ₀` at every time, with `ψ = 0`.
    pub fn stationary(phi: &GridFunction, alpha: f64, times: Vec<f64>) -> Result<Self> {
        let frames = vec![phi.clone(); times.len()];
        let witness = Some(vec![GridFunction::zeros(*phi.grid()); times.len()]);
        Trajectory::new(alpha, times, frames, witness)
    }

    /// Closed-form transport frames at `times`, with `ψ = Φ`.
    pub fn closed_form(phi0: &GridFunction, alpha: f64, times: Vec<f64>) -> Result<Self> {
        let frames = times.par_iter().map(|&t| transport_closed_form(phi0, alpha, t)).collect::<Result<Vec<_>>>()?;
        let witness = Some(frames.clone());
        Trajectory::new(alpha, times, frames, witness)
    }

    pub fn with_witness(mut self, witness: Vec<GridFunction>) -> Result<Self> {
        self.witness = Some(witness);
        Trajectory::new(self.alpha, self.times, self.frames, self.witness)
    }

    /// Frames in reverse order on the times `t₀ + t_end − t`.
    pub fn reversed(&self) -> Trajectory {
        let (first, last) = (self.times[0], *self.times.last().expect("non-empty"));
        let times = self.times.iter().rev().map(|t| first + last - t).collect();
        let frames = self.frames.iter().rev().cloned().collect();
        let witness = self.witness.as_ref().map(|w| w.iter().rev().cloned().collect());
        Trajectory { alpha: self.alpha, times, frames, witness }
    }

    /// The partner trajectory with `−α`: `Φ′(t; s) = e^{−αt}·conj Φ(t; −s)`.
    /// Needs a grid symmetric about 0.
    pub fn reflected(&self) -> Result<Trajectory> {
        let grid = *self.frames[0].grid();
        if (grid.s_min + grid.s_max).abs() > 1e-12 * grid.s_max.abs().max(1.0) {
            return Err(Error::InvalidGrid("reflection needs a grid symmetric about 0".into()));
        }
        let map = |f: &GridFunction, t: f64| {
            let n = f.len();
            let c = (-self.alpha * t).exp();
            let v = (0..n).map(|j| f.values()[n - 1 - j].conj() * c).collect();
            GridFunction::new(grid, v).expect("same grid")
        };
        let frames = self.frames.iter().zip(&self.times).map(|(f, &t)| map(f, t)).collect();
        let witness = self.witness.as_ref().map(|w| w.iter().zip(&self.times).map(|(f, &t)| map(f, t)).collect());
        Trajectory::new(-self.alpha, self.times.clone(), frames, witness)
    }
}

fn check_support_room(phi0: &GridFunction, shift_by: f64) -> Result<()> {
    let grid = phi0.grid();
    if let Some((lo, hi)) = phi0.support(SUPPORT_THRESHOLD) {
        let (a, b) = (lo - shift_by, hi - shift_by);
        if a < grid.s_min || b > grid.s_max {
            return Err(Error::SupportEscape(format!(
                "support [{lo:.3}, {hi:.3}] moves to [{a:.3}, {b:.3}] outside [{}, {}]",
                grid.s_min, grid.s_max
            )));
        }
    }
    Ok(())
}

/// `Φ₀(s + αt)·e^{t(is + α/2)}`.
pub fn transport_closed_form(phi0: &GridFunction, alpha: f64, t: f64) -> Result<GridFunction> {
    transport_closed_form_with_phase(phi0, alpha, t, false)
}

/// As [`transport_closed_form`], optionally times `e^{iαt²/2}`.
pub fn transport_closed_form_with_phase(phi0: &GridFunction, alpha: f64, t: f64, phase: bool) -> Result<GridFunction> {
    check_alpha(alpha)?;
    if t == 0.0 {
        return Ok(phi0.clone());
    }
    check_support_room(phi0, alpha * t)?;
    let shifted = shift(phi0, alpha * t);
    let global = if phase { Complex64::from_polar(1.0, alpha * t * t / 2.0) } else { Complex64::new(1.0, 0.0) };
    Ok(shifted.multiply_by(|s| global * Complex64::new(alpha * t / 2.0, t * s).exp()))
}

fn transport_rhs(f: &GridFunction, alpha: f64) -> GridFunction {
    let d = spectral_derivative_unchecked(f);
    let mut out = f.multiply_by(|s| Complex64::new(alpha / 2.0, s));
    for (o, dv) in out.values_mut().iter_mut().zip(d.values()) {
        *o += dv * alpha;
    }
    out
}

fn axpy(y: &GridFunction, a: f64, x: &GridFunction) -> GridFunction {
    let v = y.values().iter().zip(x.values()).map(|(p, q)| p + q * a).collect();
    GridFunction::new(*y.grid(), v).expect("same grid")
}

/// Largest step allowed for `α`, the grid spacing and the spectral radius
/// `max|s| + π/h` of the semi-discrete operator.
pub fn cfl_bound(grid: &crate::numerics::GridSpec, alpha: f64) -> f64 {
    let h = grid.spacing();
    let radius = grid.s_min.abs().max(grid.s_max.abs()) + std::f64::consts::PI / h;
    (h / (2.0 * alpha.abs())).min(RK4_STABILITY / radius)
}

/// Method of lines: spectral `∂_s`, classical RK4 in time with the largest
/// step `≤ dt` that divides `t_end`. Frames are recorded every
/// `record_every` steps and at `t_end`; `ψ = Φ`.
pub fn transport_integrate_recording(
    phi0: &GridFunction,
    alpha: f64,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    check_alpha(alpha)?;
    if !(t_end > 0.0) || !(dt > 0.0) || record_every == 0 {
        return Err(Error::InvalidParameter { name: "t_end/dt", reason: format!("t_end = {t_end}, dt = {dt}") });
    }
    let bound = cfl_bound(phi0.grid(), alpha);
    if dt > bound {
        return Err(Error::Cfl { dt, bound });
    }
    check_support_room(phi0, alpha * t_end)?;
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;
    let mut times = vec![0.0];
    let mut frames = vec![phi0.clone()];
    let mut phi = phi0.clone();
    for step in 1..=steps {
        let k1 = transport_rhs(&phi, alpha);
        let k2 = transport_rhs(&axpy(&phi, h / 2.0, &k1), alpha);
        let k3 = transport_rhs(&axpy(&phi, h / 2.0, &k2), alpha);
        let k4 = transport_rhs(&axpy(&phi, h, &k3), alpha);
        let v = phi
            .values()
            .iter()
            .enumerate()
            .map(|(j, p)| {
                p + (k1.values()[j] + k2.values()[j] * 2.0 + k3.values()[j] * 2.0 + k4.values()[j]) * (h / 6.0)
            })
            .collect();
        phi = GridFunction::new(*phi0.grid(), v)?;
        if step % record_every == 0 || step == steps {
            if !phi.is_edge_decayed(DEFAULT_EDGE_TOL.sqrt()) {
                return Err(Error::SupportEscape(format!("solution reached the grid ends at t = {}", step as f64 * h)));
            }
            times.push(step as f64 * h);
            frames.push(phi.clone());
        }
    }
    let witness = Some(frames.clone());
    Trajectory::new(alpha, times, frames, witness)
}

pub fn transport_integrate(phi0: &GridFunction, alpha: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
    transport_integrate_recording(phi0, alpha, t_end, dt, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub per_time: Vec<f64>,
    pub scale: f64,
}

impl ResidualReport {
    pub fn relative(&self) -> f64 {
        self.max_residual / self.scale
    }
}

/// Which `(s, u)` nodes the outer-product residuals use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Every `stride`-th node.
    Subgrid {
        stride: usize,
    },
    Full,
}

impl Default for ResidualMode {
    fn default() -> Self {
        ResidualMode::Subgrid { stride: 4 }
    }
}

impl ResidualMode {
    fn indices(&self, n: usize) -> Vec<usize> {
        match *self {
            ResidualMode::Full => (0..n).collect(),
            ResidualMode::Subgrid { stride } => (0..n).step_by(stride.max(1)).collect(),
        }
    }
}

/// Weights `(c_prev, c_self, c_next)` of the second-order derivative at index
/// `i` on a non-uniform time grid, with one-sided stencils at the ends.
fn time_stencil(t: &[f64], i: usize) -> [(usize, f64); 3] {
    let n = t.len();
    let (a, b, c) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let x = t[i];
    // Derivatives of the Lagrange basis at x.
    let l = |j: usize, p: usize, q: usize| ((x - t[p]) + (x - t[q])) / ((t[j] - t[p]) * (t[j] - t[q]));
    [(a, l(a, b, c)), (b, l(b, a, c)), (c, l(c, a, b))]
}

struct Sampled {
    phi: Vec<Complex64>,
}

fn sample(f: &GridFunction, idx: &[usize]) -> Sampled {
    Sampled { phi: idx.iter().map(|&j| f.values()[j]).collect() }
}

/// Per-time max-norm residual of `∂_t(Φ̄(s)Φ(u)) − RHS(s, u)`.
fn outer_residual(
    traj: &Trajectory,
    mode: ResidualMode,
    witness: &[GridFunction],
    coeffs: impl Fn(f64, f64) -> (Complex64, Complex64, Complex64) + Sync,
) -> Result<ResidualReport> {
    let m = traj.times.len();
    if m < 3 {
        return Err(Error::Trajectory(format!("{m} time samples; need at least 3")));
    }
    let grid = *traj.frames[0].grid();
    let idx = mode.indices(grid.n_points);
    let nodes: Vec<f64> = idx.iter().map(|&j| grid.node(j)).collect();
    let frames: Vec<Sampled> = traj.frames.iter().map(|f| sample(f, &idx)).collect();
    let per_time: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let st = time_stencil(&traj.times, i);
            let psi = sample(&witness[i], &idx).phi;
            let dpsi = sample(&spectral_derivative_unchecked(&witness[i]), &idx).phi;
            let mut worst: f64 = 0.0;
            for (a, &s) in nodes.iter().enumerate() {
                for (b, &u) in nodes.iter().enumerate() {
                    let drho: Complex64 = st.iter().map(|&(j, w)| frames[j].phi[a].conj() * frames[j].phi[b] * w).sum();
                    // RHS = c0·ψ̄(s)ψ(u) + c1·ψ̄′(s)ψ(u) + c2·ψ̄(s)ψ′(u).
                    let (c0, c1, c2) = coeffs(s, u);
                    let rhs = c0 * psi[a].conj() * psi[b] + c1 * dpsi[a].conj() * psi[b] + c2 * psi[a].conj() * dpsi[b];
                    worst = worst.max((drho - rhs).norm());
                }
            }
            worst
        })
        .collect();
    let scale = traj.frames.iter().map(|f| f.max_abs().powi(2)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let max_residual = per_time.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport { max_residual, per_time, scale })
}

/// Residual of the sufficient condition
/// `∂_t(Φ̄Φ) = (iκ(1 − e^{(s−u)/κ}) + αe^{s/κ})ψ̄ψ + αe^{s/κ}(ψ̄′ψ + ψ̄ψ′)`.
pub fn condsuff_residual(traj: &Trajectory, k: &KappaParams, mode: ResidualMode) -> Result<ResidualReport> {
    let witness =
        traj.witness.as_ref().ok_or_else(|| Error::Trajectory("the sufficient condition needs a witness ψ".into()))?;
    let (kappa, alpha) = (k.kappa, traj.alpha);
    outer_residual(traj, mode, witness, move |s, u| {
        let e = (s / kappa).exp();
        let c0 = Complex64::new(alpha * e, -kappa * ((s - u) / kappa).exp_m1());
        let c = Complex64::new(alpha * e, 0.0);
        (c0, c, c)
    })
}

/// The sufficient condition with `e^{(s−u)/κ}` and `e^{s/κ}` replaced by their
/// first-order expansions `1 + (s−u)/κ` and `1 + s/κ`.
pub fn condsuff_linearized_residual(traj: &Trajectory, k: &KappaParams, mode: ResidualMode) -> Result<ResidualReport> {
    let witness =
        traj.witness.as_ref().ok_or_else(|| Error::Trajectory("the sufficient condition needs a witness ψ".into()))?;
    let (kappa, alpha) = (k.kappa, traj.alpha);
    outer_residual(traj, mode, witness, move |s, u| {
        let e = 1.0 + s / kappa;
        let c0 = Complex64::new(alpha * e, u - s);
        let c = Complex64::new(alpha * e, 0.0);
        (c0, c, c)
    })
}

/// Residual of `∂_t(Φ̄Φ) = (i(u − s) + α)Φ̄Φ + α(Φ̄′Φ + Φ̄Φ′)` with `ψ = Φ`.
pub fn zecomparaison_residual(traj: &Trajectory, mode: ResidualMode) -> Result<ResidualReport> {
    let alpha = traj.alpha;
    outer_residual(traj, mode, &traj.frames, move |s, u| {
        (Complex64::new(alpha, u - s), Complex64::new(alpha, 0.0), Complex64::new(alpha, 0.0))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityScan {
    /// `‖Φ(t)‖` before normalization.
    pub norms: Vec<f64>,
    pub steps: Vec<ConstraintReport>,
    pub cumulative: ConstraintReport,
    /// Whether every consecutive step satisfied the constraint.
    pub all_steps_satisfied: bool,
    /// Whether the step slacks are non-decreasing in time.
    pub slack_monotone: bool,
}

/// Normalizes each frame to a state and checks `δ⟨P⟩ ≥ |δ⟨X⟩|` between
/// consecutive frames and from the first to the last.
pub fn evolution_causality_scan(traj: &Trajectory, nu: RepSign, tol: f64) -> Result<CausalityScan> {
    let mut states = Vec::with_capacity(traj.frames.len());
    let mut norms = Vec::with_capacity(traj.frames.len());
    for f in &traj.frames {
        let (st, n) = PureState::normalizing(nu, f)?;
        log::debug!("frame norm {n}");
        states.push(st);
        norms.push(n);
    }
    let steps = states.par_windows(2).map(|w| necessary_causal(&w[0], &w[1], tol)).collect::<Result<Vec<_>>>()?;
    let cumulative = necessary_causal(&states[0], states.last().expect("non-empty"), tol)?;
    let all_steps_satisfied = steps.iter().all(|r| r.satisfied);
    let slack_monotone = steps.windows(2).all(|w| w[1].slack >= w[0].slack);
    Ok(CausalityScan { norms, steps, cumulative, all_steps_satisfied, slack_monotone })
}
