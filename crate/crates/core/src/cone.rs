//! Membership tests for the causal cone.
//!
//! A hermitian `a` is in the cone when `π_ν(iX_±(a))` is a positive operator
//! for `ν ∈ {−1, 0, 1}` and both signs, where the `X₁` part enters through the
//! twisted commutator and therefore carries a factor `ν²`. Structured
//! candidates are decided in closed form, generic symbols by assembling the
//! quadratic form
//!
//! `K(s, u) = iκ(1 − e^{(s−u)/κ})ã(u − s, β(s)) ± ν²∂_βã(u − s, β(s))`
//!
//! on the grid and testing `W^{1/2}KW^{1/2}` for Hermiticity and positivity.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{derive_x0, derive_x1, AlgebraElement, KappaParams, MixedSymbol, PlaneWaveSum, SymbolSpec};
use crate::error::{Error, Result};
use crate::numerics::{min_hermitian_eigenvalue, GridSpec};
use crate::representation::{beta, represent_with, RepSign, ShiftMode};

/// Sample points of the quasiperiodicity check.
pub const QUASI_SAMPLES: usize = 64;
pub const QUASI_RANGE: (f64, f64) = (-3.0, 3.0);
pub const QUASI_TOL: f64 = 1e-10;
pub const DEFAULT_CONE_TOL: f64 = 1e-8;

/// `h(x₀)` of a split candidate `h(x₀) + g(x₁)`, evaluable at complex `x₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HFunction {
    Identity,
    Linear {
        slope: f64,
    },
    /// `x₀ + C·e^{2πκk x₀}`.
    Quasiperiodic {
        c: f64,
        k: i64,
    },
}

impl HFunction {
    /// `h(x + iy)`.
    pub fn eval(&self, x: f64, y: f64, kp: &KappaParams) -> Complex64 {
        let z = Complex64::new(x, y);
        match *self {
            HFunction::Identity => z,
            HFunction::Linear { slope } => z * slope,
            HFunction::Quasiperiodic { c, k } => {
                let rate = kp.kappa * k as f64;
                // Reduce the phase in turns before scaling by 2π.
                let turns = (rate * y).rem_euclid(1.0);
                z + Complex64::from_polar(c * (2.0 * PI * rate * x).exp(), 2.0 * PI * turns)
            }
        }
    }

    /// `h(v)` for real `v`.
    pub fn eval_real(&self, v: f64, kp: &KappaParams) -> f64 {
        self.eval(v, 0.0, kp).re
    }

    /// `Σ_j h(v_j)·w_j` for nonnegative weights, accumulating exponential
    /// parts as `exp(r·v + ln w)` so that huge `h` and tiny `w` do not
    /// overflow.
    pub fn weighted_sum(&self, v: &[f64], w: &[f64], kp: &KappaParams) -> f64 {
        let mut total = 0.0;
        for (&vj, &wj) in v.iter().zip(w) {
            if wj <= 0.0 {
                continue;
            }
            total += match *self {
                HFunction::Identity => vj * wj,
                HFunction::Linear { slope } => slope * vj * wj,
                HFunction::Quasiperiodic { c, k } => {
                    let rate = 2.0 * PI * kp.kappa * k as f64;
                    vj * wj + c * (rate * vj + wj.ln()).exp()
                }
            };
        }
        total
    }

    /// `max |iX₀(h)(x₀) − 1|` over the sample points, using
    /// `iX₀(h)(x₀) = iκ(h(x₀) − h(x₀ + i/κ))`.
    pub fn quasiperiodicity_residual(&self, kp: &KappaParams) -> f64 {
        let (lo, hi) = QUASI_RANGE;
        let kappa = kp.kappa;
        (0..QUASI_SAMPLES)
            .map(|j| {
                let x = lo + (hi - lo) * j as f64 / (QUASI_SAMPLES - 1) as f64;
                let ix0 = Complex64::new(0.0, kappa) * (self.eval(x, 0.0, kp) - self.eval(x, 1.0 / kappa, kp));
                (ix0 - 1.0).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `g(x₁)` of a split candidate, given with its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GFunction {
    Zero,
    Linear {
        slope: f64,
    },
    /// `g′(β) = A·sin(ωβ)`, `g(0) = 0`.
    Sin {
        amplitude: f64,
        frequency: f64,
    },
    /// `g′(β) = A/(1 + e^{−β/w})`, `g(β) = A·w·ln(1 + e^{β/w})`.
    Sigmoid {
        amplitude: f64,
        width: f64,
    },
}

impl GFunction {
    pub fn eval(&self, b: f64) -> f64 {
        match *self {
            GFunction::Zero => 0.0,
            GFunction::Linear { slope } => slope * b,
            GFunction::Sin { amplitude, frequency } => amplitude * (1.0 - (frequency * b).cos()) / frequency,
            GFunction::Sigmoid { amplitude, width } => {
                let x = b / width;
                // softplus
                amplitude * width * (x.max(0.0) + (-x.abs()).exp().ln_1p())
            }
        }
    }

    pub fn derivative(&self, b: f64) -> f64 {
        match *self {
            GFunction::Zero => 0.0,
            GFunction::Linear { slope } => slope,
            GFunction::Sin { amplitude, frequency } => amplitude * (frequency * b).sin(),
            GFunction::Sigmoid { amplitude, width } => amplitude / (1.0 + (-b / width).exp()),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GFunction::Sin { frequency, .. } if frequency == 0.0 || !frequency.is_finite() => {
                Err(Error::InvalidParameter { name: "frequency", reason: format!("{frequency} must be nonzero") })
            }
            GFunction::Sigmoid { width, .. } if width <= 0.0 || !width.is_finite() => {
                Err(Error::InvalidParameter { name: "width", reason: format!("{width} must be positive") })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hermiticity {
    /// Verify `a‡ = a` before assembling.
    Check,
    /// Skip the check; logged.
    Waive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeCandidate {
    /// `x₀`.
    TimeFunction,
    Constant {
        c: f64,
    },
    /// `x₀ + λx₁`.
    LightCone {
        lambda: f64,
    },
    /// `x₀ + C·e^{2πκk x₀}`.
    QuasiperiodicH {
        c: f64,
        k: i64,
    },
    /// `h(x₀) + g(x₁)`.
    Split {
        h: HFunction,
        g: GFunction,
    },
    Symbol {
        symbol: SymbolSpec,
        #[serde(default)]
        hermiticity: Option<Hermiticity>,
    },
    PlaneWaveHermitian {
        sum: PlaneWaveSum,
    },
    Scaled {
        factor: f64,
        candidate: Box<ConeCandidate>,
    },
}

impl ConeCandidate {
    pub fn label(&self) -> String {
        match self {
            ConeCandidate::TimeFunction => "x0".into(),
            ConeCandidate::Constant { c } => format!("constant({c})"),
            ConeCandidate::LightCone { lambda } => format!("light_cone({lambda})"),
            ConeCandidate::QuasiperiodicH { c, k } => format!("quasiperiodic_h({c},{k})"),
            ConeCandidate::Split { h, g } => format!("split({h:?},{g:?})"),
            ConeCandidate::Symbol { symbol, .. } => format!("symbol({symbol:?})"),
            ConeCandidate::PlaneWaveHermitian { sum } => format!("plane_waves({} terms)", sum.terms().len()),
            ConeCandidate::Scaled { factor, candidate } => format!("{factor}*{}", candidate.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Eigenvalue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// The test decides membership.
    Exact,
    /// A pass proves membership; a failure does not prove non-membership.
    SufficientCondition,
}

/// Verdict for one `(ν, ±)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseDetail {
    pub nu: RepSign,
    pub sign: i8,
    /// Lower bound of the quadratic form, divided by `scale`; for the
    /// eigenvalue method also capped by `−‖M − M†‖/scale`.
    pub margin: f64,
    pub min_eigenvalue: f64,
    pub anti_hermitian_norm: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub n_points: usize,
    pub in_cone: bool,
    pub margin: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeVerdict {
    pub candidate: String,
    pub in_cone: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub method: Method,
    pub criterion: Criterion,
    /// `|margin| ≤ tolerance`.
    pub boundary: bool,
    pub details: Vec<CaseDetail>,
    pub refinement: Option<RefinementCheck>,
    pub notes: Vec<String>,
}

impl ConeVerdict {
    /// A verdict from the eigenvalue method is final once it survived one grid
    /// refinement.
    pub fn is_final(&self) -> bool {
        self.refinement.map(|r| r.stable).unwrap_or(true)
    }

    fn from_cases(
        candidate: String,
        details: Vec<CaseDetail>,
        tol: f64,
        method: Method,
        criterion: Criterion,
        notes: Vec<String>,
    ) -> Self {
        let margin = details.iter().map(|d| d.margin).fold(f64::INFINITY, f64::min);
        ConeVerdict {
            candidate,
            in_cone: margin >= -tol,
            margin,
            tolerance: tol,
            method,
            criterion,
            boundary: margin.abs() <= tol,
            details,
            refinement: None,
            notes,
        }
    }
}

/// The six `(ν, ±)` pairs.
pub fn cases() -> impl Iterator<Item = (RepSign, i8)> {
    RepSign::ALL.into_iter().flat_map(|nu| [(nu, 1i8), (nu, -1i8)])
}

/// `π_ν(iX_±(a))` is multiplication by `f(ν, ±)·𝟙`.
fn constant_cases(f: impl Fn(f64, f64) -> f64) -> Vec<CaseDetail> {
    cases()
        .map(|(nu, sign)| {
            let m = f(nu.nu() * nu.nu(), sign as f64);
            CaseDetail { nu, sign, margin: m, min_eigenvalue: m, anti_hermitian_norm: 0.0, scale: 1.0 }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSettings {
    pub tol: f64,
    /// Repeat eigenvalue verdicts on the refined grid.
    pub refine: bool,
}

impl Default for ConeSettings {
    fn default() -> Self {
        ConeSettings { tol: DEFAULT_CONE_TOL, refine: true }
    }
}

pub fn cone_check(c: &ConeCandidate, grid: &GridSpec, k: &KappaParams, tol: f64) -> Result<ConeVerdict> {
    cone_check_with(c, grid, k, &ConeSettings { tol, ..ConeSettings::default() })
}

pub fn cone_check_with(
    c: &ConeCandidate,
    grid: &GridSpec,
    k: &KappaParams,
    settings: &ConeSettings,
) -> Result<ConeVerdict> {
    let tol = settings.tol;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter { name: "tol", reason: format!("{tol} must be positive") });
    }
    grid.validate()?;
    let label = c.label();
    match c {
        ConeCandidate::TimeFunction => Ok(ConeVerdict::from_cases(
            label,
            constant_cases(|_, _| 1.0),
            tol,
            Method::ClosedForm,
            Criterion::Exact,
            vec![],
        )),
        ConeCandidate::Constant { c } => {
            if !c.is_finite() {
                return Err(Error::InvalidParameter { name: "c", reason: "not finite".into() });
            }
            Ok(ConeVerdict::from_cases(
                label,
                constant_cases(|_, _| 0.0),
                tol,
                Method::ClosedForm,
                Criterion::Exact,
                vec![],
            ))
        }
        ConeCandidate::LightCone { lambda } => {
            let lambda = *lambda;
            Ok(ConeVerdict::from_cases(
                label,
                constant_cases(|nu2, sign| 1.0 + sign * nu2 * lambda),
                tol,
                Method::ClosedForm,
                Criterion::Exact,
                vec![],
            ))
        }
        ConeCandidate::QuasiperiodicH { c, k: kk } => {
            split_verdict(label, &HFunction::Quasiperiodic { c: *c, k: *kk }, &GFunction::Zero, grid, k, tol)
        }
        ConeCandidate::Split { h, g } => split_verdict(label, h, g, grid, k, tol),
        ConeCandidate::Symbol { symbol, hermiticity } => {
            let a = symbol.build(k)?;
            match hermiticity {
                None => {
                    return Err(Error::NotHermitian(format!("{label}: no hermiticity check or waiver given")));
                }
                Some(Hermiticity::Waive) => log::warn!("hermiticity check waived for {label}"),
                Some(Hermiticity::Check) => check_symbol_hermitian(&a, grid, k, &label)?,
            }
            eigen_verdict(label, grid, k, settings, |g| symbol_cases(&a, g, k, tol))
        }
        ConeCandidate::PlaneWaveHermitian { sum } => {
            if !sum.is_hermitian(k, 1e-12) {
                return Err(Error::NotHermitian(label));
            }
            eigen_verdict(label, grid, k, settings, |g| plane_wave_cases(sum, g, k, tol))
        }
        ConeCandidate::Scaled { factor, candidate } => scaled_verdict(*factor, candidate, grid, k, settings),
    }
}

fn scaled_verdict(
    factor: f64,
    inner: &ConeCandidate,
    grid: &GridSpec,
    k: &KappaParams,
    settings: &ConeSettings,
) -> Result<ConeVerdict> {
    if !factor.is_finite() {
        return Err(Error::InvalidParameter { name: "factor", reason: "not finite".into() });
    }
    let label = format!("{factor}*{}", inner.label());
    let tol = settings.tol;
    if let ConeCandidate::Symbol { symbol, hermiticity } = inner {
        // Rebuild so that the scaled symbol goes through the same checks.
        let a = symbol.build(k)?.scale(Complex64::new(factor, 0.0));
        match hermiticity {
            None => return Err(Error::NotHermitian(format!("{label}: no hermiticity check or waiver given"))),
            Some(Hermiticity::Waive) => log::warn!("hermiticity check waived for {label}"),
            Some(Hermiticity::Check) => check_symbol_hermitian(&a, grid, k, &label)?,
        }
        return eigen_verdict(label, grid, k, settings, |g| symbol_cases(&a, g, k, tol));
    }
    if let ConeCandidate::PlaneWaveHermitian { sum } = inner {
        let scaled = ConeCandidate::PlaneWaveHermitian { sum: sum.scale(Complex64::new(factor, 0.0)) };
        let mut v = cone_check_with(&scaled, grid, k, settings)?;
        v.candidate = label;
        return Ok(v);
    }
    let base = cone_check_with(inner, grid, k, settings)?;
    if base.criterion == Criterion::SufficientCondition && factor < 0.0 {
        return Err(Error::InvalidParameter {
            name: "factor",
            reason: "negative multiples of split candidates are not supported".into(),
        });
    }
    let details = base
        .details
        .iter()
        .map(|d| CaseDetail { margin: d.margin * factor, min_eigenvalue: d.min_eigenvalue * factor, ..*d })
        .collect();
    Ok(ConeVerdict::from_cases(label, details, tol, base.method, base.criterion, base.notes))
}

fn split_verdict(
    label: String,
    h: &HFunction,
    g: &GFunction,
    grid: &GridSpec,
    k: &KappaParams,
    tol: f64,
) -> Result<ConeVerdict> {
    g.validate()?;
    let quasi = h.quasiperiodicity_residual(k);
    let mut notes = vec![format!("quasiperiodicity residual {quasi:.3e} (threshold {QUASI_TOL:.0e})")];
    let nodes = grid.nodes();
    let details: Vec<CaseDetail> = cases()
        .map(|(nu, sign)| {
            let nu2 = nu.nu() * nu.nu();
            // 1 ± ν²g′(β(s)) on the grid, minus the defect of iX₀(h) = 1.
            let m = nodes
                .iter()
                .map(|&s| 1.0 + sign as f64 * nu2 * g.derivative(beta(nu, s, k)))
                .fold(f64::INFINITY, f64::min);
            let m = if quasi <= QUASI_TOL { m } else { m.min(-quasi) };
            CaseDetail { nu, sign, margin: m, min_eigenvalue: m, anti_hermitian_norm: 0.0, scale: 1.0 }
        })
        .collect();
    let sup_g = nodes
        .iter()
        .flat_map(|&s| [RepSign::Plus, RepSign::Minus].map(|nu| g.derivative(beta(nu, s, k)).abs()))
        .fold(0.0, f64::max);
    let passed = quasi <= QUASI_TOL && sup_g <= 1.0 + tol;
    notes.push(format!(
        "sufficient condition {}: sup|g'| = {sup_g:.6} on the grid",
        if passed { "passed" } else { "failed" }
    ));
    Ok(ConeVerdict::from_cases(label, details, tol, Method::ClosedForm, Criterion::SufficientCondition, notes))
}

fn check_symbol_hermitian(a: &MixedSymbol, grid: &GridSpec, k: &KappaParams, label: &str) -> Result<()> {
    let beta_bound = (-grid.s_min / k.kappa).exp().min(20.0);
    let defect = a.hermiticity_defect(k, beta_bound, 41)?;
    let size = (0..41)
        .map(|j| {
            let q = a.q_support().map(|(lo, hi)| lo + (hi - lo) * j as f64 / 40.0).unwrap_or(0.0);
            a.eval(q, 0.0).norm()
        })
        .fold(1.0, f64::max);
    if defect > 1e-10 * size {
        return Err(Error::NotHermitian(format!("{label}: a‡ − a reaches {defect:.3e}")));
    }
    Ok(())
}

fn eigen_verdict(
    label: String,
    grid: &GridSpec,
    k: &KappaParams,
    settings: &ConeSettings,
    run: impl Fn(&GridSpec) -> Result<Vec<CaseDetail>>,
) -> Result<ConeVerdict> {
    let _ = k;
    let mut v = ConeVerdict::from_cases(label, run(grid)?, settings.tol, Method::Eigenvalue, Criterion::Exact, vec![]);
    v.notes.push("positivity decided on the discretized quadratic form".into());
    if settings.refine {
        let fine = grid.refined();
        let r = ConeVerdict::from_cases(
            String::new(),
            run(&fine)?,
            settings.tol,
            Method::Eigenvalue,
            Criterion::Exact,
            vec![],
        );
        v.refinement = Some(RefinementCheck {
            n_points: fine.n_points,
            in_cone: r.in_cone,
            margin: r.margin,
            stable: r.in_cone == v.in_cone,
        });
        if r.in_cone != v.in_cone {
            v.notes.push(format!("verdict changed at {} points; not final", fine.n_points));
        }
    }
    Ok(v)
}

/// Case detail of `M = W^{1/2}KW^{1/2}`.
fn matrix_case(nu: RepSign, sign: i8, m: &DMatrix<Complex64>, scale: f64) -> Result<CaseDetail> {
    let spec = min_hermitian_eigenvalue(m)?;
    let margin = (spec.min_eigenvalue / scale).min(-spec.anti_hermitian_norm / scale);
    Ok(CaseDetail {
        nu,
        sign,
        margin,
        min_eigenvalue: spec.min_eigenvalue,
        anti_hermitian_norm: spec.anti_hermitian_norm,
        scale,
    })
}

/// The kernel `K_ij` of `π_ν(iX_±(a))` for a decaying symbol.
pub fn cone_kernel(
    a: &MixedSymbol,
    nu: RepSign,
    sign: i8,
    grid: &GridSpec,
    k: &KappaParams,
) -> Result<DMatrix<Complex64>> {
    if a.is_unit_delta() {
        return Err(Error::Distributional(a.name().to_string()));
    }
    a.q_support()?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let kappa = k.kappa;
    let nu2 = nu.nu() * nu.nu();
    let rows: Vec<Vec<Complex64>> = nodes
        .par_iter()
        .map(|&s| {
            let b = beta(nu, s, k);
            nodes
                .iter()
                .map(|&u| {
                    let x0 = Complex64::new(0.0, -kappa * ((s - u) / kappa).exp_m1());
                    let mut v = x0 * a.eval(u - s, b);
                    if nu2 != 0.0 {
                        v += a.d_beta(u - s, b)? * (sign as f64 * nu2);
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn weighted(kmat: &DMatrix<Complex64>, grid: &GridSpec) -> DMatrix<Complex64> {
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    DMatrix::from_fn(kmat.nrows(), kmat.ncols(), |i, j| kmat[(i, j)] * (sw[i] * sw[j]))
}

fn symbol_cases(a: &MixedSymbol, grid: &GridSpec, k: &KappaParams, _tol: f64) -> Result<Vec<CaseDetail>> {
    let list: Vec<(RepSign, i8)> = cases().collect();
    list.par_iter()
        .map(|&(nu, sign)| {
            let kmat = cone_kernel(a, nu, sign, grid, k)?;
            let scale = kmat.iter().map(|v| v.norm()).fold(1.0, f64::max);
            matrix_case(nu, sign, &weighted(&kmat, grid), scale)
        })
        .collect()
}

/// Direct assembly for plane waves: each term contributes
/// `c·(iκ(1 − e^{−k₀/κ}) ± iν²k₁)·e^{ik₁β(s_i)}` at `u_j = s_i + k₀`, with the
/// delta in `u` resolved as `1/w_j` on the periodic grid.
fn plane_wave_kernel(
    sum: &PlaneWaveSum,
    nu: RepSign,
    sign: i8,
    grid: &GridSpec,
    k: &KappaParams,
) -> Result<DMatrix<Complex64>> {
    let n = grid.n_points;
    let h = grid.spacing();
    let w = grid.weights();
    let nu2 = nu.nu() * nu.nu();
    let mut kmat = DMatrix::zeros(n, n);
    for t in sum.terms() {
        let steps = t.k0 / h;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::NotRepresentable(
                format!("plane wave with k0 = {}", t.k0),
                format!("shift is not a multiple of the spacing {h}"),
            ));
        }
        let m = steps.round() as i64;
        let factor = Complex64::new(0.0, k.x0_factor(t.k0) + sign as f64 * nu2 * t.k1) * t.coeff;
        for i in 0..n {
            let j = (i as i64 + m).rem_euclid(n as i64) as usize;
            let phase = Complex64::from_polar(1.0, t.k1 * beta(nu, grid.node(i), k));
            kmat[(i, j)] += factor * phase / w[j];
        }
    }
    Ok(kmat)
}

fn plane_wave_cases(sum: &PlaneWaveSum, grid: &GridSpec, k: &KappaParams, _tol: f64) -> Result<Vec<CaseDetail>> {
    let list: Vec<(RepSign, i8)> = cases().collect();
    list.par_iter()
        .map(|&(nu, sign)| {
            let kmat = plane_wave_kernel(sum, nu, sign, grid, k)?;
            let m = weighted(&kmat, grid);
            let scale = m.iter().map(|v| v.norm()).fold(1.0, f64::max);
            matrix_case(nu, sign, &m, scale)
        })
        .collect()
}

/// The plane-wave verdict along the other route: `b = iX₀a ± iν²X₁a` from the
/// algebra rules, represented with exact shifts, tested as the quadratic form
/// `⟨ψ, π_ν(b)ψ⟩`.
pub fn plane_wave_closed_form_verdict(
    sum: &PlaneWaveSum,
    grid: &GridSpec,
    k: &KappaParams,
    tol: f64,
) -> Result<ConeVerdict> {
    if !sum.is_hermitian(k, 1e-12) {
        return Err(Error::NotHermitian(format!("plane_waves({} terms)", sum.terms().len())));
    }
    let a: AlgebraElement = sum.clone().into();
    let i = Complex64::new(0.0, 1.0);
    let x0 = derive_x0(&a, k);
    let x1 = derive_x1(&a)?;
    let w = grid.weights();
    let list: Vec<(RepSign, i8)> = cases().collect();
    let details = list
        .par_iter()
        .map(|&(nu, sign)| {
            let nu2 = nu.nu() * nu.nu();
            let b = x0.linear_combination(i, &x1, i * (sign as f64 * nu2))?;
            let op = represent_with(&b, nu, grid, k, ShiftMode::CommensurateOnly)?.sample_matrix();
            let q = DMatrix::from_fn(op.nrows(), op.ncols(), |r, c| op[(r, c)] * w[r]);
            let scale = q.iter().map(|v| v.norm()).fold(1.0, f64::max);
            matrix_case(nu, sign, &q, scale)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConeVerdict::from_cases(
        format!("plane_waves({} terms)", sum.terms().len()),
        details,
        tol,
        Method::ClosedForm,
        Criterion::Exact,
        vec![],
    ))
}

/// A deterministic list of `n` cone members: `x₀` first, then light-cone
/// coordinates (starting with the boundary values `λ = ±1`), quasiperiodic
/// `h` and split candidates with bounded `g′`.
pub fn cone_sample_family(n: usize, seed: u64) -> Result<Vec<ConeCandidate>> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "need at least one candidate".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![ConeCandidate::TimeFunction];
    let mut light = 0usize;
    let mut i = 1;
    while out.len() < n {
        let c = match i % 4 {
            1 => {
                let lambda = match light {
                    0 => 1.0,
                    1 => -1.0,
                    _ => rng.random_range(-1.0..1.0),
                };
                light += 1;
                ConeCandidate::LightCone { lambda }
            }
            2 => ConeCandidate::QuasiperiodicH { c: rng.random_range(-0.5..0.5), k: 1 },
            3 => ConeCandidate::Split {
                h: HFunction::Identity,
                g: GFunction::Sin { amplitude: rng.random_range(0.1..1.0), frequency: rng.random_range(0.5..3.0) },
            },
            _ => ConeCandidate::Split {
                h: HFunction::Quasiperiodic { c: rng.random_range(-0.3..0.3), k: 1 },
                g: GFunction::Sigmoid { amplitude: rng.random_range(0.1..1.0), width: rng.random_range(0.5..2.0) },
            },
        };
        out.push(c);
        i += 1;
    }
    Ok(out)
}
