//! Pure vector states `ω^Φ_±(a) = ⟨Φ, π_±(a)Φ⟩` and the constraints that
//! causal ordering imposes on them.
//!
//! With `P = −i d/ds` and `X = e^{−s}` a causal step `Φ₁ → Φ₂` requires
//! `δ⟨P⟩ ≥ |δ⟨X⟩|`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, KappaParams};
use crate::cone::{cone_check, ConeCandidate, GFunction, HFunction, Hermiticity, DEFAULT_CONE_TOL};
use crate::error::{Error, Result};
use crate::numerics::{momentum_distribution, spectral_derivative, GridFunction, GridSpec, DEFAULT_EDGE_TOL};
use crate::representation::{beta, represent, RepSign};

/// Allowed deviation of `‖Φ‖` from 1.
pub const NORM_TOL: f64 = 1e-10;
/// Allowed imaginary part of a hermitian expectation, relative to its scale.
pub const IMAG_TOL: f64 = 1e-9;
pub const DEFAULT_STATE_TOL: f64 = 1e-8;
/// Momentum bins with weight below this fraction of the peak are dropped
/// before applying exponentially growing `h`.
pub const MOMENTUM_NOISE_FLOOR: f64 = 1e-28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureStateRepr")]
pub struct PureState {
    nu: RepSign,
    phi: GridFunction,
}

#[derive(Deserialize)]
struct PureStateRepr {
    nu: RepSign,
    phi: GridFunction,
}

impl TryFrom<PureStateRepr> for PureState {
    type Error = Error;
    fn try_from(r: PureStateRepr) -> Result<Self> {
        PureState::new(r.nu, r.phi)
    }
}

impl PureState {
    pub fn new(nu: RepSign, phi: GridFunction) -> Result<Self> {
        if nu == RepSign::Zero {
            return Err(Error::InvalidState("states are defined for nu = +1 or -1".into()));
        }
        let norm = phi.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1 by more than {NORM_TOL:.0e}")));
        }
        if !phi.is_edge_decayed(DEFAULT_EDGE_TOL) {
            return Err(Error::InvalidState("wave function does not decay at the grid ends".into()));
        }
        Ok(PureState { nu, phi })
    }

    /// Normalizes `phi` first; returns the state and the original norm.
    pub fn normalizing(nu: RepSign, phi: &GridFunction) -> Result<(Self, f64)> {
        let (unit, norm) = phi.normalized()?;
        Ok((PureState::new(nu, unit)?, norm))
    }

    pub fn nu(&self) -> RepSign {
        self.nu
    }

    pub fn phi(&self) -> &GridFunction {
        &self.phi
    }

    pub fn grid(&self) -> &GridSpec {
        self.phi.grid()
    }

    pub fn with_phase(&self, theta: f64) -> PureState {
        PureState { nu: self.nu, phi: self.phi.scale(Complex64::from_polar(1.0, theta)) }
    }
}

/// `(πσ²)^{−1/4}·e^{−(s−s₀)²/(2σ²)}·e^{ip₀s}`.
pub fn make_gaussian_state(nu: RepSign, s0: f64, p0: f64, sigma: f64, grid: &GridSpec) -> Result<PureState> {
    grid.validate()?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter { name: "sigma", reason: format!("{sigma} must be positive") });
    }
    if s0 - 6.0 * sigma < grid.s_min || s0 + 6.0 * sigma > grid.s_max {
        return Err(Error::SupportEscape(format!(
            "s0 = {s0} with sigma = {sigma} needs [{}, {}] inside [{}, {}]",
            s0 - 6.0 * sigma,
            s0 + 6.0 * sigma,
            grid.s_min,
            grid.s_max
        )));
    }
    let c = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let phi =
        GridFunction::from_fn(*grid, |s| Complex64::from_polar(c * (-0.5 * ((s - s0) / sigma).powi(2)).exp(), p0 * s));
    PureState::new(nu, phi)
}

/// State description used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Gaussian { nu: RepSign, s0: f64, p0: f64, sigma: f64 },
    Samples { nu: RepSign, phi: GridFunction },
}

impl StateSpec {
    pub fn build(&self, grid: &GridSpec) -> Result<PureState> {
        match self {
            StateSpec::Gaussian { nu, s0, p0, sigma } => make_gaussian_state(*nu, *s0, *p0, *sigma, grid),
            StateSpec::Samples { nu, phi } => PureState::new(*nu, phi.clone()),
        }
    }
}

/// `Re⟨Φ, −iΦ′⟩` with a spectral derivative.
pub fn expectation_p(st: &PureState) -> Result<f64> {
    let d = spectral_derivative(&st.phi);
    let v = st.phi.inner(&d) * Complex64::new(0.0, -1.0);
    let scale = 1.0f64.max(v.re.abs());
    if v.im.abs() > IMAG_TOL * scale {
        return Err(Error::ImaginaryExpectation { imag: v.im, tol: IMAG_TOL * scale });
    }
    Ok(v.re)
}

/// `Σ_j v_j·|F_j|²/Σ|F|²` over the DFT bins.
pub fn expectation_p_fourier(st: &PureState) -> f64 {
    let (v, w) = momentum_distribution(&st.phi);
    v.iter().zip(&w).map(|(a, b)| a * b).sum()
}

/// `⟨h(P)⟩` by functional calculus on the DFT bins.
pub fn expectation_h_p(st: &PureState, h: &HFunction, k: &KappaParams) -> Result<f64> {
    match h {
        HFunction::Identity => expectation_p(st),
        HFunction::Linear { slope } => Ok(slope * expectation_p(st)?),
        HFunction::Quasiperiodic { .. } => {
            let (v, mut w) = momentum_distribution(&st.phi);
            let peak = w.iter().copied().fold(0.0, f64::max);
            for x in w.iter_mut() {
                if *x < MOMENTUM_NOISE_FLOOR * peak {
                    *x = 0.0;
                }
            }
            let val = h.weighted_sum(&v, &w, k);
            if !val.is_finite() {
                return Err(Error::Overflow(val));
            }
            let edge: Vec<f64> =
                w.iter().map(|&x| if x < 1e2 * MOMENTUM_NOISE_FLOOR * peak { x } else { 0.0 }).collect();
            let tail = h.weighted_sum(&v, &edge, k) - v.iter().zip(&edge).map(|(a, b)| a * b).sum::<f64>();
            if tail.abs() > 1e-10 * val.abs().max(1.0) {
                return Err(Error::InvalidState(format!(
                    "<h(P)> depends on momenta near the FFT noise floor (tail {tail:.3e} of {val:.3e})"
                )));
            }
            Ok(val)
        }
    }
}

/// `∫ e^{−s}|Φ(s)|² ds`.
pub fn expectation_x(st: &PureState) -> f64 {
    expectation_x_kappa(st, &KappaParams::default())
}

/// `∫ e^{−s/κ}|Φ(s)|² ds`, so that `⟨x₁⟩ = ν·expectation_x_kappa`.
pub fn expectation_x_kappa(st: &PureState, k: &KappaParams) -> f64 {
    weighted_density(st, |s| (-s / k.kappa).exp())
}

/// `⟨g(x₁)⟩ = ∫ g(νe^{−s/κ})|Φ(s)|² ds`.
pub fn expectation_g_x(st: &PureState, g: &GFunction, k: &KappaParams) -> f64 {
    let nu = st.nu;
    weighted_density(st, |s| g.eval(beta(nu, s, k)))
}

fn weighted_density(st: &PureState, m: impl Fn(f64) -> f64) -> f64 {
    let grid = st.grid();
    let w = grid.weights();
    st.phi.values().iter().enumerate().map(|(j, v)| m(grid.node(j)) * v.norm_sqr() * w[j]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub delta_p: f64,
    pub delta_x: f64,
    /// `δ⟨P⟩ − |δ⟨X⟩|`.
    pub slack: f64,
    pub satisfied: bool,
    /// Absolute tolerance applied to the slack.
    pub tolerance: f64,
}

impl ConstraintReport {
    /// `tol` is relative to `max(1, |δP|, |δX|)`.
    fn new(delta_p: f64, delta_x: f64, tol: f64) -> Self {
        let slack = delta_p - delta_x.abs();
        let tolerance = tol * 1f64.max(delta_p.abs()).max(delta_x.abs());
        ConstraintReport { delta_p, delta_x, slack, satisfied: slack >= -tolerance, tolerance }
    }
}

fn same_family(st1: &PureState, st2: &PureState) -> Result<()> {
    if st1.nu != st2.nu {
        return Err(Error::SignMismatch(st1.nu.as_i8(), st2.nu.as_i8()));
    }
    st1.phi.same_grid(&st2.phi)
}

/// `δ⟨P⟩ ≥ |δ⟨X⟩|` from `st1` to `st2`.
pub fn necessary_causal(st1: &PureState, st2: &PureState, tol: f64) -> Result<ConstraintReport> {
    same_family(st1, st2)?;
    let dp = expectation_p(st2)? - expectation_p(st1)?;
    let dx = expectation_x(st2) - expectation_x(st1);
    Ok(ConstraintReport::new(dp, dx, tol))
}

/// `δ⟨h(P)⟩ ≥ |δ⟨g(x₁)⟩|` for a split pair `(h, g)` that passes the cone check.
pub fn generic_constraint(
    st1: &PureState,
    st2: &PureState,
    h: &HFunction,
    g: &GFunction,
    k: &KappaParams,
    tol: f64,
) -> Result<ConstraintReport> {
    same_family(st1, st2)?;
    let candidate = ConeCandidate::Split { h: *h, g: *g };
    let v = cone_check(&candidate, st1.grid(), k, DEFAULT_CONE_TOL)?;
    if !v.in_cone {
        return Err(Error::NotInCone(v.candidate, v.margin));
    }
    let dh = expectation_h_p(st2, h, k)? - expectation_h_p(st1, h, k)?;
    let dg = expectation_g_x(st2, g, k) - expectation_g_x(st1, g, k);
    Ok(ConstraintReport::new(dh, dg, tol))
}

/// `⟨Φ, π_ν(a)Φ⟩` for an algebra element; checks hermiticity unless waived.
pub fn pairing_element(a: &AlgebraElement, st: &PureState, k: &KappaParams, hermiticity: Hermiticity) -> Result<f64> {
    if hermiticity == Hermiticity::Check {
        let ok = match a {
            AlgebraElement::Unit => true,
            AlgebraElement::PlaneWaves(s) => s.is_hermitian(k, 1e-12),
            AlgebraElement::Mixed(m) => {
                let size = m.eval(0.0, 0.0).norm().max(1.0);
                m.hermiticity_defect(k, 20.0, 41)? <= 1e-10 * size
            }
        };
        if !ok {
            return Err(Error::NotHermitian(format!("{a:?}")));
        }
    } else {
        log::warn!("hermiticity check waived for a pairing");
    }
    let v = st.phi.inner(&represent(a, st.nu, st.grid(), k)?.apply(&st.phi)?);
    let scale = 1f64.max(v.re.abs());
    if hermiticity == Hermiticity::Check && v.im.abs() > IMAG_TOL * scale {
        return Err(Error::ImaginaryExpectation { imag: v.im, tol: IMAG_TOL * scale });
    }
    Ok(v.re)
}

/// `ω^Φ(a)` for a cone candidate.
pub fn pairing(c: &ConeCandidate, st: &PureState, k: &KappaParams) -> Result<f64> {
    let nu = st.nu.nu();
    match c {
        ConeCandidate::TimeFunction => expectation_p(st),
        ConeCandidate::Constant { c } => Ok(c * st.phi.norm_sq()),
        ConeCandidate::LightCone { lambda } => Ok(expectation_p(st)? + lambda * nu * expectation_x_kappa(st, k)),
        ConeCandidate::QuasiperiodicH { c, k: kk } => {
            expectation_h_p(st, &HFunction::Quasiperiodic { c: *c, k: *kk }, k)
        }
        ConeCandidate::Split { h, g } => Ok(expectation_h_p(st, h, k)? + expectation_g_x(st, g, k)),
        ConeCandidate::Symbol { symbol, hermiticity } => {
            let flag = hermiticity.ok_or_else(|| Error::NotHermitian(format!("{}: no hermiticity flag", c.label())))?;
            pairing_element(&symbol.build(k)?.into(), st, k, flag)
        }
        ConeCandidate::PlaneWaveHermitian { sum } => pairing_element(&sum.clone().into(), st, k, Hermiticity::Check),
        ConeCandidate::Scaled { factor, candidate } => Ok(factor * pairing(candidate, st, k)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEntry {
    pub candidate: String,
    pub omega1: f64,
    pub omega2: f64,
    /// `ω₂(a) − ω₁(a)`.
    pub slack: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub consistent: bool,
    /// Always `"necessary_conditions_only"`: a finite family cannot certify the order.
    pub scope: String,
    pub witness: Option<String>,
    pub entries: Vec<OrderEntry>,
}

/// `ω₁(a) ≤ ω₂(a) + tol` for every `a` in `family`; each member must pass the
/// cone check on the states' grid. `tol` is relative to `max(1, |ω₁|, |ω₂|)`.
pub fn order_test(
    st1: &PureState,
    st2: &PureState,
    family: &[ConeCandidate],
    k: &KappaParams,
    tol: f64,
) -> Result<OrderVerdict> {
    same_family(st1, st2)?;
    let mut entries = Vec::with_capacity(family.len());
    let mut witness = None;
    for c in family {
        let v = cone_check(c, st1.grid(), k, DEFAULT_CONE_TOL)?;
        if !v.in_cone {
            return Err(Error::NotInCone(v.candidate, v.margin));
        }
        let omega1 = pairing(c, st1, k)?;
        let omega2 = pairing(c, st2, k)?;
        let tolerance = tol * 1f64.max(omega1.abs()).max(omega2.abs());
        let slack = omega2 - omega1;
        if slack < -tolerance && witness.is_none() {
            witness = Some(c.label());
        }
        entries.push(OrderEntry { candidate: c.label(), omega1, omega2, slack, tolerance });
    }
    Ok(OrderVerdict { consistent: witness.is_none(), scope: "necessary_conditions_only".into(), witness, entries })
}

/// `{x₀, x₀ + x₁, x₀ − x₁}`.
pub fn light_cone_family() -> Vec<ConeCandidate> {
    vec![
        ConeCandidate::TimeFunction,
        ConeCandidate::LightCone { lambda: 1.0 },
        ConeCandidate::LightCone { lambda: -1.0 },
    ]
}

/// One row of a causality sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s0: f64,
    pub p0: f64,
    pub sigma: f64,
    #[serde(rename = "delta_P")]
    pub delta_p: f64,
    #[serde(rename = "delta_X")]
    pub delta_x: f64,
    pub slack: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub nu: RepSign,
    pub base_s0: f64,
    pub base_p0: f64,
    pub sigma: f64,
    pub ds_range: (f64, f64),
    pub dp_range: (f64, f64),
    pub n_s: usize,
    pub n_p: usize,
    pub tol: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            nu: RepSign::Plus,
            base_s0: 0.0,
            base_p0: 0.0,
            sigma: 1.0,
            ds_range: (-2.0, 2.0),
            dp_range: (-2.0, 2.0),
            n_s: 21,
            n_p: 21,
            tol: DEFAULT_STATE_TOL,
        }
    }
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Checks `δ⟨P⟩ ≥ |δ⟨X⟩|` from the base Gaussian to each displaced Gaussian
/// `(s₀ + Δs₀, p₀ + Δp₀, σ)`, rows ordered by `Δs₀` then `Δp₀`. Rows report
/// the absolute `s0`, `p0` of the second state.
pub fn sweep(grid: &GridSpec, settings: &SweepSettings) -> Result<Vec<SweepRow>> {
    if settings.n_s == 0 || settings.n_p == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "sweep needs at least one point per axis".into() });
    }
    let base = make_gaussian_state(settings.nu, settings.base_s0, settings.base_p0, settings.sigma, grid)?;
    let pairs: Vec<(f64, f64)> = linspace(settings.ds_range, settings.n_s)
        .into_iter()
        .flat_map(|ds| linspace(settings.dp_range, settings.n_p).into_iter().map(move |dp| (ds, dp)))
        .collect();
    pairs
        .par_iter()
        .map(|&(ds, dp)| {
            let s0 = settings.base_s0 + ds;
            let p0 = settings.base_p0 + dp;
            let st = make_gaussian_state(settings.nu, s0, p0, settings.sigma, grid)?;
            let r = necessary_causal(&base, &st, settings.tol)?;
            Ok(SweepRow {
                s0,
                p0,
                sigma: settings.sigma,
                delta_p: r.delta_p,
                delta_x: r.delta_x,
                slack: r.slack,
                satisfied: r.satisfied,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of searching state triples for a failure of transitivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityReport {
    pub triples_checked: usize,
    /// Triples with both `1 → 2` and `2 → 3` satisfied.
    pub premises_held: usize,
    /// `(i, j, k)` with `i → j`, `j → k` satisfied and `i → k` violated.
    pub counterexamples: Vec<(usize, usize, usize)>,
}

/// Tests `δ⟨P⟩ ≥ |δ⟨X⟩|` for transitivity over all ordered triples of `states`.
/// The result is data; nothing is asserted.
pub fn transitivity_scan(states: &[PureState], tol: f64) -> Result<TransitivityReport> {
    let n = states.len();
    let mut ok = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            ok[i][j] = necessary_causal(&states[i], &states[j], tol)?.satisfied;
        }
    }
    let mut report = TransitivityReport { triples_checked: 0, premises_held: 0, counterexamples: vec![] };
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                report.triples_checked += 1;
                if ok[i][j] && ok[j][l] {
                    report.premises_held += 1;
                    if !ok[i][l] {
                        report.counterexamples.push((i, j, l));
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{MixedSymbol, PlaneWave, PlaneWaveSum, SymbolSpec};
    use proptest::prelude::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn g(s0: f64, p0: f64, sigma: f64) -> PureState {
        make_gaussian_state(RepSign::Plus, s0, p0, sigma, &grid()).unwrap()
    }

    #[test]
    fn gaussian_state_moments() {
        let st = g(0.0, 2.0, 1.0);
        assert!((st.phi().norm() - 1.0).abs() < 1e-10);
        assert!((expectation_p(&st).unwrap() - 2.0).abs() < 1e-8);
        assert!((expectation_p_fourier(&st) - 2.0).abs() < 1e-8);
        assert!((expectation_x(&st) - 0.25f64.exp()).abs() < 1e-6);
        assert!((expectation_x(&g(1.0, 0.0, 1.0)) - (-0.75f64).exp()).abs() < 1e-6);
        assert!(expectation_p(&g(0.5, 0.0, 0.8)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn x_expectation_matches_fine_quadrature() {
        // Simpson's rule on a much finer grid as oracle.
        for (s0, sigma) in [(0.0, 1.0), (1.0, 1.0), (-0.7, 0.6)] {
            let st = g(s0, 0.3, sigma);
            let n = 20_001;
            let (a, b) = (s0 - 12.0 * sigma, s0 + 12.0 * sigma);
            let h = (b - a) / (n - 1) as f64;
            let dens =
                |s: f64| (-s).exp() * (-((s - s0) / sigma).powi(2)).exp() / (std::f64::consts::PI.sqrt() * sigma);
            let simpson: f64 = (0..n)
                .map(|i| {
                    let w = if i == 0 || i == n - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    w * dens(a + i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0;
            assert!((expectation_x(&st) - simpson).abs() < 1e-8);
        }
    }

    #[test]
    fn boost_shifts_momentum() {
        let st = g(0.4, 0.7, 0.9);
        let boosted =
            PureState::new(RepSign::Plus, st.phi().multiply_by(|s| Complex64::from_polar(1.0, 1.3 * s))).unwrap();
        assert!((expectation_p(&boosted).unwrap() - expectation_p(&st).unwrap() - 1.3).abs() < 1e-8);
    }

    #[test]
    fn state_validation() {
        assert!(matches!(make_gaussian_state(RepSign::Plus, 9.0, 0.0, 1.0, &grid()), Err(Error::SupportEscape(_))));
        assert!(make_gaussian_state(RepSign::Zero, 0.0, 0.0, 1.0, &grid()).is_err());
        let st = g(0.0, 0.0, 1.0);
        assert!(PureState::new(RepSign::Plus, st.phi().scale(Complex64::new(2.0, 0.0))).is_err());
        let json = serde_json::to_string(&st).unwrap();
        let back: PureState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, st);
        let bad = json.replace("\"nu\":1", "\"nu\":0");
        assert!(serde_json::from_str::<PureState>(&bad).is_err());
    }

    #[test]
    fn necessary_condition_examples() {
        let r = necessary_causal(&g(0.0, 0.0, 1.0), &g(0.0, 2.0, 1.0), 1e-8).unwrap();
        assert!((r.delta_p - 2.0).abs() < 1e-8 && r.delta_x.abs() < 1e-10 && r.satisfied);
        let r = necessary_causal(&g(0.0, 0.0, 1.0), &g(-1.0, 0.0, 1.0), 1e-8).unwrap();
        assert!(r.delta_p.abs() < 1e-10);
        assert!((r.delta_x - (1.25f64.exp() - 0.25f64.exp())).abs() < 1e-6);
        assert!(!r.satisfied);
        let st = g(0.3, -0.4, 1.1);
        let r = necessary_causal(&st, &st, 1e-8).unwrap();
        assert_eq!(r.slack, 0.0);
        assert!(r.satisfied);
        let minus = make_gaussian_state(RepSign::Minus, 0.0, 0.0, 1.0, &grid()).unwrap();
        assert!(matches!(necessary_causal(&st, &minus, 1e-8), Err(Error::SignMismatch(1, -1))));
    }

    #[test]
    fn pairings() {
        let k = KappaParams::default();
        let st = g(0.2, 2.0, 1.0);
        assert!((pairing(&ConeCandidate::Constant { c: 3.5 }, &st, &k).unwrap() - 3.5).abs() < 1e-10);
        assert!((pairing(&ConeCandidate::TimeFunction, &st, &k).unwrap() - 2.0).abs() < 1e-8);
        let lc = pairing(&ConeCandidate::LightCone { lambda: -1.0 }, &st, &k).unwrap();
        assert!((lc - (2.0 - expectation_x(&st))).abs() < 1e-10);
    }

    #[test]
    fn symbol_pairing_matches_double_quadrature() {
        let k = KappaParams::default();
        let spec = SymbolSpec::HermitianGaussian { q_center: 0.2, q_width: 0.5, beta_center: 0.8, beta_width: 1.0 };
        let a = spec.build(&k).unwrap();
        let st = g(0.3, 0.5, 0.9);
        let value =
            pairing(&ConeCandidate::Symbol { symbol: spec, hermiticity: Some(Hermiticity::Check) }, &st, &k).unwrap();
        // ∫∫ ã(u − s, e^{−s}) Φ̄(s)Φ(u) on a 2× finer grid with closed-form Φ.
        let fine = GridSpec { n_points: 2 * grid().n_points, ..grid() };
        let phi = |s: f64| {
            Complex64::from_polar(
                (std::f64::consts::PI * 0.81).powf(-0.25) * (-0.5 * ((s - 0.3) / 0.9f64).powi(2)).exp(),
                0.5 * s,
            )
        };
        let w = fine.weights();
        let nodes: Vec<f64> = fine.nodes().into_iter().filter(|s| (s - 0.3).abs() < 8.0).collect();
        let h = fine.spacing();
        let mut acc = Complex64::new(0.0, 0.0);
        for &s in &nodes {
            let b = (-s).exp();
            for &u in &nodes {
                acc += a.eval(u - s, b) * phi(s).conj() * phi(u) * h * h;
            }
        }
        let _ = w;
        assert!(acc.im.abs() < 1e-9);
        assert!((value - acc.re).abs() < 1e-7, "{value} vs {}", acc.re);
    }

    #[test]
    fn non_hermitian_elements_are_rejected() {
        let k = KappaParams::default();
        let st = g(0.0, 0.0, 1.0);
        let a: AlgebraElement = PlaneWave::new(Complex64::new(1.0, 0.0), 0.0, 1.0).into();
        assert!(matches!(pairing_element(&a, &st, &k, Hermiticity::Check), Err(Error::NotHermitian(_))));
        assert!(pairing_element(&a, &st, &k, Hermiticity::Waive).is_ok());
        let m: AlgebraElement = MixedSymbol::gaussian(0.5, 0.5, 0.0, 1.0).into();
        assert!(matches!(pairing_element(&m, &st, &k, Hermiticity::Check), Err(Error::NotHermitian(_))));
        let sum = PlaneWaveSum::new([
            PlaneWave::new(Complex64::new(1.0, 0.0), 0.0, 1.0),
            PlaneWave::new(Complex64::new(1.0, 0.0), 0.0, -1.0),
        ]);
        let v = pairing_element(&sum.into(), &st, &k, Hermiticity::Check).unwrap();
        let expected = weighted_density(&st, |s| 2.0 * (-s).exp().cos());
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn order_test_examples() {
        let k = KappaParams::default();
        let fam = light_cone_family();
        let st = g(0.0, 0.0, 1.0);
        let v = order_test(&st, &st, &fam, &k, 1e-8).unwrap();
        assert!(v.consistent && v.entries.iter().all(|e| e.slack == 0.0));
        assert_eq!(v.scope, "necessary_conditions_only");
        assert!(order_test(&st, &g(0.0, 2.0, 1.0), &fam, &k, 1e-8).unwrap().consistent);
        let v = order_test(&st, &g(-1.0, 0.0, 1.0), &fam, &k, 1e-8).unwrap();
        assert!(!v.consistent);
        assert!(v.witness.unwrap().starts_with("light_cone"));
        let bad = vec![ConeCandidate::LightCone { lambda: 1.5 }];
        assert!(matches!(order_test(&st, &st, &bad, &k, 1e-8), Err(Error::NotInCone(..))));
    }

    #[test]
    fn generic_constraint_reductions() {
        let k = KappaParams::default();
        let (a, b) = (g(0.0, 0.0, 1.0), g(0.7, 1.2, 1.0));
        let base = necessary_causal(&a, &b, 1e-8).unwrap();
        let same =
            generic_constraint(&a, &b, &HFunction::Identity, &GFunction::Linear { slope: 1.0 }, &k, 1e-8).unwrap();
        assert!((same.slack - base.slack).abs() < 1e-12);
        assert_eq!(same.satisfied, base.satisfied);
        let t = generic_constraint(&a, &b, &HFunction::Identity, &GFunction::Zero, &k, 1e-8).unwrap();
        assert_eq!(t.delta_x, 0.0);
        assert!((t.slack - base.delta_p).abs() < 1e-12);
        assert!(matches!(
            generic_constraint(&a, &b, &HFunction::Identity, &GFunction::Linear { slope: 2.0 }, &k, 1e-8),
            Err(Error::NotInCone(..))
        ));
    }

    #[test]
    fn quasiperiodic_h_expectation() {
        let k = KappaParams::default();
        let (c, kk, s0, p0, sigma) = (0.1, 1, 0.0, 0.3, 1.5);
        let st = g(s0, p0, sigma);
        let h = HFunction::Quasiperiodic { c, k: kk };
        let value = expectation_h_p(&st, &h, &k).unwrap();
        // Brute-force continuous Fourier transform on a fine v grid.
        let nodes = grid().nodes();
        let w = grid().weights();
        let (vlo, vhi, nv) = (p0 - 8.0 / sigma, p0 + 8.0 / sigma, 2001);
        let dv = (vhi - vlo) / (nv - 1) as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..nv {
            let v = vlo + i as f64 * dv;
            let f: Complex64 = nodes
                .iter()
                .zip(&w)
                .zip(st.phi().values())
                .map(|((s, wj), p)| p * Complex64::from_polar(*wj, -v * s))
                .sum();
            let tw = if i == 0 || i == nv - 1 { 0.5 } else { 1.0 };
            num += tw * f.norm_sqr() * (v + c * (2.0 * std::f64::consts::PI * v).exp());
            den += tw * f.norm_sqr();
        }
        let oracle = num / den;
        assert!((value - oracle).abs() <= 1e-6 * oracle.abs(), "{value} vs {oracle}");
        let steep = HFunction::Quasiperiodic { c: 0.1, k: 2 };
        assert!(matches!(expectation_h_p(&g(0.0, 0.0, 1.0), &steep, &k), Err(Error::InvalidState(_))));
        let closed = p0 + c * (2.0 * std::f64::consts::PI * p0 + std::f64::consts::PI.powi(2) / (sigma * sigma)).exp();
        assert!((value - closed).abs() <= 1e-6 * closed.abs());
    }

    #[test]
    fn sweep_rows() {
        let rows = sweep(&grid(), &SweepSettings { n_s: 5, n_p: 3, ..SweepSettings::default() }).unwrap();
        assert_eq!(rows.len(), 15);
        assert_eq!((rows[0].s0, rows[0].p0), (-2.0, -2.0));
        assert_eq!((rows[1].s0, rows[1].p0), (-2.0, 0.0));
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s0,p0,sigma,delta_P,delta_X,slack,satisfied\n"));
    }

    #[test]
    fn transitivity_report_runs() {
        let states: Vec<PureState> =
            [(0.0, 0.0), (0.0, 1.0), (-0.3, 2.0), (0.5, 1.5)].iter().map(|&(s0, p0)| g(s0, p0, 1.0)).collect();
        let r = transitivity_scan(&states, 1e-8).unwrap();
        assert_eq!(r.triples_checked, 64);
        assert!(r.premises_held >= 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn phase_invariance(s0 in -2.0f64..2.0, p0 in -2.0f64..2.0, sigma in 0.6f64..1.5, theta in 0.0f64..std::f64::consts::TAU) {
            let k = KappaParams::default();
            let st = g(s0, p0, sigma);
            let rot = st.with_phase(theta);
            prop_assert!((expectation_p(&st).unwrap() - expectation_p(&rot).unwrap()).abs() < 1e-12);
            prop_assert!((expectation_x(&st) - expectation_x(&rot)).abs() < 1e-12);
            let c = ConeCandidate::LightCone { lambda: 0.4 };
            prop_assert!((pairing(&c, &st, &k).unwrap() - pairing(&c, &rot, &k).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn slack_antisymmetry_of_p_part(a in -2.0f64..2.0, b in -2.0f64..2.0, pa in -2.0f64..2.0, pb in -2.0f64..2.0) {
            let (x, y) = (g(a, pa, 1.0), g(b, pb, 1.0));
            let f = necessary_causal(&x, &y, 1e-8).unwrap();
            let r = necessary_causal(&y, &x, 1e-8).unwrap();
            prop_assert!((f.delta_p + r.delta_p).abs() < 1e-12);
            prop_assert!((f.delta_x + r.delta_x).abs() < 1e-12);
        }

        #[test]
        fn monotone_chains_are_transitive(s in -1.5f64..0.0, d1 in 0.0f64..1.0, d2 in 0.0f64..1.0, e1 in 0.0f64..3.0, e2 in 0.0f64..3.0) {
            // Aligned displacements: s₀ increases along the chain, so δ⟨X⟩ keeps one sign.
            let p1 = 0.0;
            let st1 = g(s, p1, 1.0);
            let x1 = expectation_x(&st1);
            let st2_probe = g(s + d1, 0.0, 1.0);
            let p2 = p1 + (x1 - expectation_x(&st2_probe)).abs() + e1;
            let st2 = g(s + d1, p2, 1.0);
            let st3_probe = g(s + d1 + d2, 0.0, 1.0);
            let p3 = p2 + (expectation_x(&st2) - expectation_x(&st3_probe)).abs() + e2;
            let st3 = g(s + d1 + d2, p3, 1.0);
            let r12 = necessary_causal(&st1, &st2, 1e-8).unwrap();
            let r23 = necessary_causal(&st2, &st3, 1e-8).unwrap();
            prop_assume!(r12.satisfied && r23.satisfied);
            prop_assert!(necessary_causal(&st1, &st3, 1e-8).unwrap().satisfied);
        }

        #[test]
        fn order_test_agrees_with_necessary_condition(s1 in -2.0f64..2.0, s2 in -2.0f64..2.0, p1 in -2.0f64..2.0, p2 in -2.0f64..2.0) {
            let k = KappaParams::default();
            let (x, y) = (g(s1, p1, 1.0), g(s2, p2, 1.0));
            let n = necessary_causal(&x, &y, 1e-8).unwrap();
            let o = order_test(&x, &y, &light_cone_family(), &k, 1e-8).unwrap();
            if n.slack.abs() > 1e-6 {
                prop_assert_eq!(n.satisfied, o.consistent);
            }
        }
    }
}
