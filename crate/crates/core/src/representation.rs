//! Operators of the spectral triple on `L²(ℝ, ds)`.
//!
//! For each sign `ν ∈ {−1, 0, 1}` the representation acts by
//! `(π_ν(a)φ)(s) = ∫ du ã(u − s, νe^{−s/κ}) φ(u)`; a plane wave
//! `e^{i(k₀x₀ + k₁x₁)}` becomes `φ ↦ e^{ik₁νe^{−s/κ}}φ(s + k₀)`. The derivations
//! act as
//!
//! - `∂₀ = s`,
//! - `X₀ = κ(1 − e^{s/κ})`,
//! - `X₁ = iνκe^{s/κ}∂_s`,
//!
//! and the twist `ℰ` as multiplication by `e^{s/κ}`. They satisfy
//! `[X₀, π(a)]_ℰ = π(X₀a)` and `[X₁, π(a)]_ℰ = ν²π(X₁a)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    derive_partial0, derive_x0, derive_x1, twist_e, AlgebraElement, KappaParams, MixedSymbol, PlaneWaveSum,
};
use crate::error::{Error, Result};
use crate::numerics::{
    operator_norm_estimate, shift, spectral_derivative, spectral_derivative_unchecked, GridFunction, GridSpec, Spinor,
    DEFAULT_EDGE_TOL,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest `|s/κ|` for which `e^{s/κ}` is evaluated.
pub const EXP_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum RepSign {
    Minus,
    Zero,
    Plus,
}

impl RepSign {
    pub const ALL: [RepSign; 3] = [RepSign::Minus, RepSign::Zero, RepSign::Plus];

    pub fn nu(self) -> f64 {
        match self {
            RepSign::Minus => -1.0,
            RepSign::Zero => 0.0,
            RepSign::Plus => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        self.nu() as i8
    }
}

impl TryFrom<i8> for RepSign {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(RepSign::Minus),
            0 => Ok(RepSign::Zero),
            1 => Ok(RepSign::Plus),
            _ => Err(Error::InvalidParameter { name: "nu", reason: format!("{v} is not one of -1, 0, 1") }),
        }
    }
}

impl From<RepSign> for i8 {
    fn from(s: RepSign) -> i8 {
        s.as_i8()
    }
}

impl fmt::Display for RepSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.as_i8())
    }
}

/// `β(s) = νe^{−s/κ}`, the value of `x₁` seen at `s`.
pub fn beta(nu: RepSign, s: f64, k: &KappaParams) -> f64 {
    nu.nu() * (-s / k.kappa).exp()
}

fn guard_grid(grid: &GridSpec, k: &KappaParams) -> Result<()> {
    let worst = grid.s_min.abs().max(grid.s_max.abs()) / k.kappa;
    if worst > EXP_GUARD {
        return Err(Error::Overflow(worst));
    }
    Ok(())
}

/// Whether plane-wave shifts that are not multiples of the grid spacing are
/// interpolated (band-limited) or rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    #[default]
    Interpolate,
    CommensurateOnly,
}

/// `φ ↦ coeff·phase(s)·φ(s + shift_amount)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMultiplyOperator {
    pub phase: GridFunction,
    pub shift_amount: f64,
    pub coeff: Complex64,
}

impl ShiftMultiplyOperator {
    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        self.phase.same_grid(phi)?;
        let shifted = shift(phi, self.shift_amount);
        let values = shifted.values().iter().zip(self.phase.values()).map(|(v, p)| self.coeff * p * v).collect();
        GridFunction::new(*phi.grid(), values)
    }
}

/// `(Kφ)_i = Σ_j w_j K_ij φ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    pub grid: GridSpec,
    pub matrix: DMatrix<Complex64>,
    pub weights: Vec<f64>,
}

impl KernelOperator {
    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", phi.grid(), self.grid)));
        }
        let v = DVector::from_iterator(phi.len(), phi.values().iter().zip(&self.weights).map(|(x, w)| x * w));
        let out = &self.matrix * v;
        GridFunction::new(self.grid, out.iter().copied().collect())
    }

    /// Matrix acting on sample vectors, `K·diag(w)`.
    pub fn sample_matrix(&self) -> DMatrix<Complex64> {
        let mut m = self.matrix.clone();
        for (j, w) in self.weights.iter().enumerate() {
            m.column_mut(j).scale_mut(*w);
        }
        m
    }
}

/// Image of an algebra element under `π_ν`.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Kernel(KernelOperator),
    ShiftSum { grid: GridSpec, terms: Vec<ShiftMultiplyOperator> },
    Multiplication(GridFunction),
}

impl Operator {
    pub fn grid(&self) -> &GridSpec {
        match self {
            Operator::Kernel(k) => &k.grid,
            Operator::ShiftSum { grid, .. } => grid,
            Operator::Multiplication(m) => m.grid(),
        }
    }

    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        match self {
            Operator::Kernel(k) => k.apply(phi),
            Operator::ShiftSum { grid, terms } => {
                if phi.grid() != grid {
                    return Err(Error::GridMismatch(format!("{:?} vs {:?}", phi.grid(), grid)));
                }
                let mut acc = GridFunction::zeros(*grid);
                for t in terms {
                    acc = &acc + &t.apply(phi)?;
                }
                Ok(acc)
            }
            Operator::Multiplication(m) => {
                m.same_grid(phi)?;
                let values = m.values().iter().zip(phi.values()).map(|(a, b)| a * b).collect();
                GridFunction::new(*phi.grid(), values)
            }
        }
    }

    /// Dense matrix acting on sample vectors.
    pub fn sample_matrix(&self) -> DMatrix<Complex64> {
        match self {
            Operator::Kernel(k) => k.sample_matrix(),
            Operator::Multiplication(m) => DMatrix::from_diagonal(&DVector::from_column_slice(m.values())),
            Operator::ShiftSum { grid, .. } => {
                let n = grid.n_points;
                let cols: Vec<Vec<Complex64>> = (0..n)
                    .into_par_iter()
                    .map(|j| {
                        let mut e = GridFunction::zeros(*grid);
                        e.values_mut()[j] = ONE;
                        self.apply(&e).expect("same grid").into_values()
                    })
                    .collect();
                DMatrix::from_fn(n, n, |i, j| cols[j][i])
            }
        }
    }
}

/// `π_ν(a)` on `grid`, interpolating non-commensurate plane-wave shifts.
pub fn represent(a: &AlgebraElement, nu: RepSign, grid: &GridSpec, k: &KappaParams) -> Result<Operator> {
    represent_with(a, nu, grid, k, ShiftMode::Interpolate)
}

pub fn represent_with(
    a: &AlgebraElement,
    nu: RepSign,
    grid: &GridSpec,
    k: &KappaParams,
    mode: ShiftMode,
) -> Result<Operator> {
    grid.validate()?;
    guard_grid(grid, k)?;
    match a {
        AlgebraElement::Unit => Ok(Operator::Multiplication(GridFunction::from_fn(*grid, |_| ONE))),
        AlgebraElement::PlaneWaves(sum) => represent_plane_waves(sum, nu, grid, k, mode),
        AlgebraElement::Mixed(m) if m.is_unit_delta() => {
            Ok(Operator::Multiplication(GridFunction::from_fn(*grid, |s| m.eval(0.0, beta(nu, s, k)))))
        }
        AlgebraElement::Mixed(m) => Ok(Operator::Kernel(kernel_operator(m, nu, grid, k)?)),
    }
}

fn represent_plane_waves(
    sum: &PlaneWaveSum,
    nu: RepSign,
    grid: &GridSpec,
    k: &KappaParams,
    mode: ShiftMode,
) -> Result<Operator> {
    let h = grid.spacing();
    let mut terms = Vec::with_capacity(sum.terms().len());
    for t in sum.terms() {
        if mode == ShiftMode::CommensurateOnly {
            let steps = t.k0 / h;
            if (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::NotRepresentable(
                    format!("plane wave with k0 = {}", t.k0),
                    format!("shift is not a multiple of the spacing {h}"),
                ));
            }
        }
        let k1 = t.k1;
        let phase = GridFunction::from_fn(*grid, |s| Complex64::from_polar(1.0, k1 * beta(nu, s, k)));
        terms.push(ShiftMultiplyOperator { phase, shift_amount: t.k0, coeff: t.coeff });
    }
    Ok(Operator::ShiftSum { grid: *grid, terms })
}

/// Kernel matrix `K_ij = ã(u_j − s_i, νe^{−s_i/κ})`.
pub fn kernel_operator(a: &MixedSymbol, nu: RepSign, grid: &GridSpec, k: &KappaParams) -> Result<KernelOperator> {
    if a.is_unit_delta() {
        return Err(Error::Distributional(a.name().to_string()));
    }
    a.q_support()?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let cols: Vec<Vec<Complex64>> =
        nodes.par_iter().map(|&u| nodes.iter().map(|&s| a.eval(u - s, beta(nu, s, k))).collect()).collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    Ok(KernelOperator { grid: *grid, matrix, weights: grid.weights() })
}

/// `(∂₀φ)(s) = s·φ(s)`.
pub fn act_partial0(phi: &GridFunction) -> GridFunction {
    phi.multiply_by(|s| Complex64::new(s, 0.0))
}

/// `(X₀φ)(s) = κ(1 − e^{s/κ})φ(s)`.
pub fn act_x0(phi: &GridFunction, k: &KappaParams) -> Result<GridFunction> {
    guard_grid(phi.grid(), k)?;
    let kappa = k.kappa;
    Ok(phi.multiply_by(|s| Complex64::new(-kappa * (s / kappa).exp_m1(), 0.0)))
}

/// `(X₁φ)(s) = iνκe^{s/κ}φ′(s)` with a spectral derivative.
pub fn act_x1(phi: &GridFunction, nu: RepSign, k: &KappaParams) -> Result<GridFunction> {
    guard_grid(phi.grid(), k)?;
    if nu == RepSign::Zero {
        return Ok(GridFunction::zeros(*phi.grid()));
    }
    if !phi.is_edge_decayed(DEFAULT_EDGE_TOL) {
        log::warn!(
            "X1 applied to a function that is not edge-decayed (residual scale {:.3e})",
            phi.residual_scale(k.kappa)
        );
    }
    let d = spectral_derivative(phi);
    Ok(x1_prefactor(&d, nu, k))
}

fn x1_prefactor(d: &GridFunction, nu: RepSign, k: &KappaParams) -> GridFunction {
    let (kappa, nu) = (k.kappa, nu.nu());
    d.multiply_by(|s| I * (nu * kappa * (s / kappa).exp()))
}

/// `ℰ` on the Hilbert space: multiplication by `e^{s/κ}`.
pub fn twist_operator(phi: &GridFunction, k: &KappaParams) -> Result<GridFunction> {
    guard_grid(phi.grid(), k)?;
    let kappa = k.kappa;
    Ok(phi.multiply_by(|s| Complex64::new((s / kappa).exp(), 0.0)))
}

/// `ℰ^{−1}`: multiplication by `e^{−s/κ}`.
pub fn twist_operator_inverse(phi: &GridFunction, k: &KappaParams) -> Result<GridFunction> {
    guard_grid(phi.grid(), k)?;
    let kappa = k.kappa;
    Ok(phi.multiply_by(|s| Complex64::new((-s / kappa).exp(), 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    Partial0,
    X0,
    X1,
    /// `X₊ = X₀ + X₁`.
    XPlus,
    /// `X₋ = X₀ − X₁`.
    XMinus,
}

impl Derivation {
    pub fn apply(self, phi: &GridFunction, nu: RepSign, k: &KappaParams) -> Result<GridFunction> {
        match self {
            Derivation::Partial0 => Ok(act_partial0(phi)),
            Derivation::X0 => act_x0(phi, k),
            Derivation::X1 => act_x1(phi, nu, k),
            Derivation::XPlus => Ok(&act_x0(phi, k)? + &act_x1(phi, nu, k)?),
            Derivation::XMinus => Ok(&act_x0(phi, k)? - &act_x1(phi, nu, k)?),
        }
    }

    /// `∂₀` commutes with `π` without a twist.
    pub fn is_twisted(self) -> bool {
        self != Derivation::Partial0
    }

    /// The element `b` with `[X, π_ν(a)]_ℰ = π_ν(b)`: `i∂₀a`, `X₀a`, `ν²X₁a`,
    /// `X₀a ± ν²X₁a`.
    pub fn image(self, a: &AlgebraElement, nu: RepSign, k: &KappaParams) -> Result<AlgebraElement> {
        let nu2 = Complex64::new(nu.nu() * nu.nu(), 0.0);
        match self {
            Derivation::Partial0 => Ok(derive_partial0(a).scale(I)),
            Derivation::X0 => Ok(derive_x0(a, k)),
            Derivation::X1 => Ok(derive_x1(a)?.scale(nu2)),
            Derivation::XPlus => derive_x0(a, k).linear_combination(ONE, &derive_x1(a)?, nu2),
            Derivation::XMinus => derive_x0(a, k).linear_combination(ONE, &derive_x1(a)?, -nu2),
        }
    }
}

/// `[X, π_ν(a)]_ℰ = X∘π_ν(a) − π_ν(ℰ▷a)∘X` (untwisted for `∂₀`).
#[derive(Debug, Clone)]
pub struct TwistedCommutator {
    pub derivation: Derivation,
    pub nu: RepSign,
    pub kappa: KappaParams,
    pi_a: Operator,
    pi_twisted: Operator,
}

impl TwistedCommutator {
    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        let left = self.derivation.apply(&self.pi_a.apply(phi)?, self.nu, &self.kappa)?;
        let right = self.pi_twisted.apply(&self.derivation.apply(phi, self.nu, &self.kappa)?)?;
        Ok(&left - &right)
    }

    /// The ordinary commutator `X∘π(a) − π(a)∘X`.
    pub fn apply_untwisted(&self, phi: &GridFunction) -> Result<GridFunction> {
        let left = self.derivation.apply(&self.pi_a.apply(phi)?, self.nu, &self.kappa)?;
        let right = self.pi_a.apply(&self.derivation.apply(phi, self.nu, &self.kappa)?)?;
        Ok(&left - &right)
    }
}

pub fn twisted_commutator(
    x: Derivation,
    a: &AlgebraElement,
    nu: RepSign,
    grid: &GridSpec,
    k: &KappaParams,
) -> Result<TwistedCommutator> {
    let pi_a = represent(a, nu, grid, k)?;
    let pi_twisted = if x.is_twisted() { represent(&twist_e(a, k), nu, grid, k)? } else { pi_a.clone() };
    Ok(TwistedCommutator { derivation: x, nu, kappa: *k, pi_a, pi_twisted })
}

/// `D = [[0, X₋], [X₊, 0]]` on one block `ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracOperator {
    pub kappa: KappaParams,
    pub grid: GridSpec,
    pub nu: RepSign,
}

impl DiracOperator {
    pub fn new(kappa: KappaParams, grid: GridSpec, nu: RepSign) -> Result<Self> {
        grid.validate()?;
        guard_grid(&grid, &kappa)?;
        Ok(DiracOperator { kappa, grid, nu })
    }

    pub fn apply(&self, psi: &Spinor) -> Result<Spinor> {
        let upper = Derivation::XMinus.apply(&psi.lower, self.nu, &self.kappa)?;
        let lower = Derivation::XPlus.apply(&psi.upper, self.nu, &self.kappa)?;
        Spinor::new(upper, lower)
    }

    /// `𝒟 = iD`, the normalisation under which `i[𝒟, 𝒯]_ℰ = −𝒥` and
    /// `𝒟‡ = −𝒥ρ^{−1}𝒟ρ𝒥`.
    pub fn apply_normalized(&self, psi: &Spinor) -> Result<Spinor> {
        Ok(self.apply(psi)?.scale(I))
    }
}

/// `𝒥 = iγ⁰ = [[0, −1], [−1, 0]]` with `γ⁰ = [[0, i], [i, 0]]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FundamentalSymmetry;

impl FundamentalSymmetry {
    pub const MATRIX: [[f64; 2]; 2] = [[0.0, -1.0], [-1.0, 0.0]];

    pub fn apply(&self, psi: &Spinor) -> Spinor {
        let m = Complex64::new(-1.0, 0.0);
        Spinor { upper: psi.lower.scale(m), lower: psi.upper.scale(m) }
    }
}

/// `(Φ, Ψ)_𝒥 = ⟨Φ, 𝒥Ψ⟩`.
pub fn krein_product(phi: &Spinor, psi: &Spinor) -> Result<Complex64> {
    phi.upper.same_grid(&psi.upper)?;
    Ok(phi.inner(&FundamentalSymmetry.apply(psi)))
}

/// `τ = ℰ ⊗ 𝟙₂`.
pub fn twist_spinor(psi: &Spinor, k: &KappaParams) -> Result<Spinor> {
    Spinor::new(twist_operator(&psi.upper, k)?, twist_operator(&psi.lower, k)?)
}

pub fn twist_spinor_inverse(psi: &Spinor, k: &KappaParams) -> Result<Spinor> {
    Spinor::new(twist_operator_inverse(&psi.upper, k)?, twist_operator_inverse(&psi.lower, k)?)
}

/// `π(x₀) = −i d/ds`.
pub fn time_operator(phi: &GridFunction) -> GridFunction {
    spectral_derivative(phi).scale(-I)
}

/// `[D, π_ν(a) ⊗ 𝟙₂]_ℰ` acting blockwise through `[X∓, π(a)]_ℰ`.
#[derive(Debug, Clone)]
pub struct DiracCommutator {
    minus: TwistedCommutator,
    plus: TwistedCommutator,
}

impl DiracCommutator {
    pub fn new(a: &AlgebraElement, nu: RepSign, grid: &GridSpec, k: &KappaParams) -> Result<Self> {
        let minus = twisted_commutator(Derivation::XMinus, a, nu, grid, k)?;
        let mut plus = minus.clone();
        plus.derivation = Derivation::XPlus;
        Ok(DiracCommutator { minus, plus })
    }

    pub fn apply(&self, psi: &Spinor) -> Result<Spinor> {
        Spinor::new(self.minus.apply(&psi.lower)?, self.plus.apply(&psi.upper)?)
    }
}

/// One line of the axiom report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub axiom_id: String,
    pub nu: RepSign,
    pub residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AxiomResult {
    fn residual_check(axiom_id: &str, nu: RepSign, residual: f64, scale: f64, tolerance: f64) -> Self {
        AxiomResult {
            axiom_id: axiom_id.into(),
            nu,
            residual,
            scale,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance * scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub results: Vec<AxiomResult>,
    pub boundedness: Vec<BoundednessProbe>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&AxiomResult> {
        self.results.iter().filter(|r| !r.pass).collect()
    }
}

/// Settings of [`verify_twisted_axioms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomSettings {
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Symbol used by the boundedness probe.
    pub probe_symbol: (f64, f64, f64, f64),
    /// Window size (nodes) of the smaller boundedness probe.
    pub probe_window: usize,
    pub power_iterations: usize,
}

impl Default for AxiomSettings {
    fn default() -> Self {
        AxiomSettings {
            trials: 32,
            seed: 0,
            tolerance: 1e-6,
            probe_symbol: (0.0, 0.5, 0.0, 1.0),
            probe_window: 170,
            power_iterations: 64,
        }
    }
}

/// Random test data: `c·exp(−(s−s₀)²/(2σ²) + ip s)` with `s₀ ∈ [−1.5, 1.5]`,
/// `σ ∈ [0.6, 1.2]`, `p ∈ [−2, 2]`.
pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, grid: &GridSpec) -> GridFunction {
    let s0 = rng.random_range(-1.5..1.5);
    let sigma = rng.random_range(0.6..1.2);
    let p = rng.random_range(-2.0..2.0);
    let c = Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5));
    GridFunction::from_fn(*grid, move |s| c * Complex64::from_polar((-0.5 * ((s - s0) / sigma).powi(2)).exp(), p * s))
}

fn random_symbol<R: Rng + ?Sized>(rng: &mut R) -> MixedSymbol {
    MixedSymbol::gaussian(
        rng.random_range(-0.5..0.5),
        rng.random_range(0.4..0.7),
        rng.random_range(-1.5..1.5),
        rng.random_range(0.5..1.0),
    )
}

fn spinor_scale(psi: &Spinor, k: &KappaParams) -> f64 {
    psi.upper.residual_scale(k.kappa).max(psi.lower.residual_scale(k.kappa))
}

/// Residuals `(axiom, residual, scale)` of every pointwise identity for one
/// trial.
fn trial_residuals(grid: &GridSpec, k: &KappaParams, nu: RepSign, seed: u64) -> Result<Vec<(&'static str, f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = Spinor::new(random_gaussian(&mut rng, grid), random_gaussian(&mut rng, grid))?;
    let psi = Spinor::new(random_gaussian(&mut rng, grid), random_gaussian(&mut rng, grid))?;
    let a: AlgebraElement = random_symbol(&mut rng).into();
    let j = FundamentalSymmetry;
    let d = DiracOperator::new(*k, *grid, nu)?;
    let sc = spinor_scale(&phi, k).max(spinor_scale(&psi, k));
    let mut out = Vec::new();

    out.push(("J_squared", j.apply(&j.apply(&psi)).l2_distance(&psi), psi.norm().max(1.0)));
    let jh = (phi.inner(&j.apply(&psi)) - j.apply(&phi).inner(&psi)).norm();
    out.push(("J_hermitian", jh, (phi.norm() * psi.norm()).max(1.0)));
    let pi_a = represent(&a, nu, grid, k)?;
    let pi_psi = Spinor::new(pi_a.apply(&psi.upper)?, pi_a.apply(&psi.lower)?)?;
    let jpi = j.apply(&pi_psi);
    let j_psi = j.apply(&psi);
    let pij = Spinor::new(pi_a.apply(&j_psi.upper)?, pi_a.apply(&j_psi.lower)?)?;
    out.push(("J_commutes_pi", jpi.l2_distance(&pij), pi_psi.norm().max(1.0)));

    let f = &psi.upper;
    let lhs = twist_operator_inverse(&act_x0(&twist_operator(f, k)?, k)?, k)?;
    let kappa = k.kappa;
    let rhs = f.multiply_by(|s| Complex64::new(-kappa * (s / kappa).exp_m1(), 0.0));
    out.push(("form111_x0", lhs.l2_distance(&rhs), f.residual_scale(kappa)));
    let lhs = twist_operator_inverse(&act_x1(&twist_operator(f, k)?, nu, k)?, k)?;
    let nuv = nu.nu();
    let rhs = &act_x1(f, nu, k)? + &f.multiply_by(|s| I * (nuv * (s / kappa).exp()));
    out.push(("form111_x1", lhs.l2_distance(&rhs), f.residual_scale(kappa)));

    let inner = twist_spinor_inverse(&d.apply_normalized(&twist_spinor(&psi, k)?)?, k)?;
    let left = krein_product(&phi, &inner)?;
    let right = krein_product(&d.apply_normalized(&phi)?, &psi)?;
    out.push(("krein_twisted_hermiticity", (left + right).norm(), sc * sc));

    for (id, x) in [("commut1", Derivation::Partial0), ("commut2", Derivation::X0), ("commut3", Derivation::X1)] {
        let c = twisted_commutator(x, &a, nu, grid, k)?;
        let image = represent(&x.image(&a, nu, k)?, nu, grid, k)?;
        out.push((id, c.apply(f)?.l2_distance(&image.apply(f)?), f.residual_scale(kappa)));
    }

    let dc = DiracCommutator::new(&a, nu, grid, k)?;
    let minus = represent(&Derivation::XMinus.image(&a, nu, k)?, nu, grid, k)?;
    let plus = represent(&Derivation::XPlus.image(&a, nu, k)?, nu, grid, k)?;
    let expected = Spinor::new(minus.apply(&psi.lower)?, plus.apply(&psi.upper)?)?;
    out.push(("commut_dirac", dc.apply(&psi)?.l2_distance(&expected), spinor_scale(&psi, k)));

    // i[D, T]_ℰ = −𝒥 with T = π(x₀) ⊗ 𝟙₂ and π(ℰ▷x₀) = T + i/κ.
    let t = |g: &GridFunction| time_operator(g);
    let t_twisted = |g: &GridFunction| &time_operator(g) + &g.scale(Complex64::new(0.0, 1.0 / kappa));
    let t_psi = Spinor::new(t(&psi.upper), t(&psi.lower))?;
    let d_psi = d.apply(&psi)?;
    let comm = &d.apply(&t_psi)? - &Spinor::new(t_twisted(&d_psi.upper), t_twisted(&d_psi.lower))?;
    let lhs = comm.scale(I);
    let rhs = j.apply(&psi).scale(Complex64::new(-1.0, 0.0));
    out.push(("time_function", lhs.l2_distance(&rhs), spinor_scale(&psi, k)));
    Ok(out)
}

/// Operator-norm estimates of `[D, π_ν(a)]_ℰ` and of the untwisted
/// commutator, restricted to a centred window of `window` nodes and to the
/// doubled window at the same spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessProbe {
    pub nu: RepSign,
    pub window: (f64, f64),
    pub doubled_window: (f64, f64),
    pub twisted: (f64, f64),
    pub untwisted: (f64, f64),
}

impl BoundednessProbe {
    pub fn twisted_ratio(&self) -> f64 {
        self.twisted.1 / self.twisted.0
    }

    pub fn untwisted_ratio(&self) -> f64 {
        self.untwisted.1 / self.untwisted.0
    }
}

/// Columns `j ∈ cols` of `[X, π(a)]_ℰ` and `[X, π(a)]`, as sample matrices.
fn commutator_columns(
    x_sign: f64,
    a: &DMatrix<Complex64>,
    a_twisted: &DMatrix<Complex64>,
    grid: &GridSpec,
    nu: RepSign,
    k: &KappaParams,
    cols: &[usize],
) -> (Vec<DVector<Complex64>>, Vec<DVector<Complex64>>) {
    let n = grid.n_points;
    let apply_x = |v: &DVector<Complex64>| -> DVector<Complex64> {
        let f = GridFunction::new(*grid, v.iter().copied().collect()).expect("grid length");
        let x0 = act_x0(&f, k).expect("guarded");
        let x1 = x1_prefactor(&spectral_derivative_unchecked(&f), nu, k);
        let out = &x0 + &x1.scale(Complex64::new(x_sign, 0.0));
        DVector::from_vec(out.into_values())
    };
    cols.par_iter()
        .map(|&j| {
            let mut e = DVector::zeros(n);
            e[j] = ONE;
            let xa = apply_x(&a.column(j).into_owned());
            let xe = apply_x(&e);
            (&xa - a_twisted * &xe, &xa - a * &xe)
        })
        .unzip()
}

pub fn boundedness_probe(
    grid: &GridSpec,
    k: &KappaParams,
    nu: RepSign,
    symbol: &MixedSymbol,
    window: usize,
    iterations: usize,
    seed: u64,
) -> Result<BoundednessProbe> {
    let n = grid.n_points;
    if window < 4 || 2 * window > n {
        return Err(Error::InvalidParameter { name: "window", reason: format!("{window} nodes on a {n}-point grid") });
    }
    let a_el: AlgebraElement = symbol.clone().into();
    let a = represent(&a_el, nu, grid, k)?.sample_matrix();
    let a_twisted = represent(&twist_e(&a_el, k), nu, grid, k)?.sample_matrix();
    let centre = n / 2;
    let range = |m: usize| -> Vec<usize> { (centre - m / 2..centre - m / 2 + m).collect() };
    let mut norms = [[0.0f64; 2]; 2];
    let mut windows = [(0.0, 0.0); 2];
    for (w, m) in [window, 2 * window].into_iter().enumerate() {
        let idx = range(m);
        windows[w] = (grid.node(idx[0]), grid.node(idx[m - 1]));
        for sign in [1.0, -1.0] {
            let (tw, un) = commutator_columns(sign, &a, &a_twisted, grid, nu, k, &idx);
            for (slot, cols) in [(0, tw), (1, un)] {
                let sub = DMatrix::from_fn(m, m, |i, j| cols[j][idx[i]]);
                norms[slot][w] = norms[slot][w].max(operator_norm_estimate(&sub, iterations, seed));
            }
        }
    }
    Ok(BoundednessProbe {
        nu,
        window: windows[0],
        doubled_window: windows[1],
        twisted: (norms[0][0], norms[0][1]),
        untwisted: (norms[1][0], norms[1][1]),
    })
}

/// Checks, for `ν ∈ {−1, 0, 1}` over `settings.trials` random Gaussian spinors
/// and symbols: `𝒥² = 1`, `𝒥 = 𝒥†`, `[𝒥, π(a)] = 0`, the conjugation rules
/// `ℰ^{−1}X_μℰ`, the twisted Krein relation of `𝒟 = iD`, the three commutator
/// identities and their Dirac-level version, and `i[D, 𝒯]_ℰ = −𝒥`. Each
/// residual is compared with `tolerance × scale`, taking the worst trial.
/// The boundedness probe adds two lines per `ν`: the twisted norm ratio
/// (pass within 10%) and the untwisted growth (pass at 2× or more).
pub fn verify_twisted_axioms(grid: &GridSpec, k: &KappaParams, settings: &AxiomSettings) -> Result<AxiomReport> {
    if settings.trials == 0 {
        return Err(Error::InvalidParameter { name: "trials", reason: "need at least one trial".into() });
    }
    grid.validate()?;
    guard_grid(grid, k)?;
    let mut results = Vec::new();
    let mut boundedness = Vec::new();
    for nu in RepSign::ALL {
        let per_trial: Vec<Vec<(&str, f64, f64)>> = (0..settings.trials as u64)
            .into_par_iter()
            .map(|t| trial_residuals(grid, k, nu, settings.seed.wrapping_mul(1_000_003).wrapping_add(t)))
            .collect::<Result<_>>()?;
        for (idx, (id, _, _)) in per_trial[0].iter().enumerate() {
            let (r, s) = per_trial
                .iter()
                .map(|v| (v[idx].1, v[idx].2))
                .max_by(|x, y| (x.0 / x.1).total_cmp(&(y.0 / y.1)))
                .expect("at least one trial");
            results.push(AxiomResult::residual_check(id, nu, r, s, settings.tolerance));
        }
        let (qc, qw, bc, bw) = settings.probe_symbol;
        let probe = boundedness_probe(
            grid,
            k,
            nu,
            &MixedSymbol::gaussian(qc, qw, bc, bw),
            settings.probe_window,
            settings.power_iterations,
            settings.seed,
        )?;
        let tr = probe.twisted_ratio();
        results.push(AxiomResult {
            axiom_id: "boundedness_twisted".into(),
            nu,
            residual: (tr - 1.0).abs(),
            scale: 1.0,
            tolerance: 0.1,
            pass: (tr - 1.0).abs() <= 0.1,
        });
        let ur = probe.untwisted_ratio();
        results.push(AxiomResult {
            axiom_id: "untwisted_norm_growth".into(),
            nu,
            residual: ur,
            scale: 1.0,
            tolerance: 2.0,
            pass: ur >= 2.0,
        });
        boundedness.push(probe);
    }
    Ok(AxiomReport { results, boundedness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PlaneWave;
    use crate::numerics::spectral_derivative;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn gauss(center: f64, sigma: f64, p: f64) -> GridFunction {
        GridFunction::from_fn(grid(), |s| Complex64::from_polar((-0.5 * ((s - center) / sigma).powi(2)).exp(), p * s))
    }

    #[test]
    fn rep_sign_serde() {
        assert_eq!(serde_json::to_string(&RepSign::Minus).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<RepSign>("1").unwrap(), RepSign::Plus);
        assert!(serde_json::from_str::<RepSign>("2").is_err());
    }

    #[test]
    fn unit_is_identity() {
        let f = gauss(0.3, 1.0, 0.5);
        let op = represent(&AlgebraElement::Unit, RepSign::Plus, &grid(), &KappaParams::default()).unwrap();
        assert_eq!(op.apply(&f).unwrap(), f);
    }

    #[test]
    fn space_plane_wave_is_a_phase() {
        let f = gauss(1.0, 1.0, 0.0);
        let w: AlgebraElement = PlaneWave::new(ONE, 0.0, 1.0).into();
        let op = represent(&w, RepSign::Plus, &grid(), &KappaParams::default()).unwrap();
        let expected = f.multiply_by(|s| Complex64::from_polar(1.0, (-s).exp()));
        assert!(op.apply(&f).unwrap().max_distance(&expected) < 1e-15);
    }

    #[test]
    fn commensurate_mode_rejects_fractional_shift() {
        let w: AlgebraElement = PlaneWave::new(ONE, 0.3, 0.0).into();
        let r = represent_with(&w, RepSign::Plus, &grid(), &KappaParams::default(), ShiftMode::CommensurateOnly);
        assert!(matches!(r, Err(Error::NotRepresentable(..))));
        let h = grid().spacing();
        let w: AlgebraElement = PlaneWave::new(ONE, 3.0 * h, 0.0).into();
        assert!(
            represent_with(&w, RepSign::Plus, &grid(), &KappaParams::default(), ShiftMode::CommensurateOnly).is_ok()
        );
    }

    #[test]
    fn gaussian_symbol_matches_fine_quadrature() {
        let k = KappaParams::default();
        let a = MixedSymbol::gaussian(0.2, 0.5, 1.0, 1.0);
        let phi = gauss(0.5, 0.8, 0.7);
        for nu in RepSign::ALL {
            let op = represent(&a.clone().into(), nu, &grid(), &k).unwrap();
            let out = op.apply(&phi).unwrap();
            // Direct quadrature of ∫ du ã(u − s, β(s)) φ(u) with 8× finer u nodes.
            let fine = GridSpec { n_points: 8 * 511 + 1, ..grid() };
            let fw = fine.weights();
            let oracle = GridFunction::from_fn(grid(), |s| {
                let b = beta(nu, s, &k);
                (0..fine.n_points)
                    .map(|j| {
                        let u = fine.node(j);
                        a.eval(u - s, b)
                            * Complex64::from_polar((-0.5 * ((u - 0.5) / 0.8f64).powi(2)).exp(), 0.7 * u)
                            * fw[j]
                    })
                    .sum()
            });
            assert!(out.l2_distance(&oracle) < 1e-7, "nu {nu}: {}", out.l2_distance(&oracle));
        }
    }

    #[test]
    fn partial0_is_real_multiplier() {
        let f = gauss(0.0, 1.0, 1.3);
        let d = act_partial0(&f);
        for (j, v) in d.values().iter().enumerate() {
            assert_eq!(*v, f.values()[j] * grid().node(j));
        }
        assert!(f.inner(&d).im.abs() < 1e-12);
    }

    #[test]
    fn x0_large_kappa_limit() {
        let k = KappaParams::new(1000.0).unwrap();
        let f = gauss(0.0, 0.5, 0.0);
        let x0 = act_x0(&f, &k).unwrap();
        for (j, v) in x0.values().iter().enumerate() {
            let s = grid().node(j);
            if s.abs() <= 2.0 && s != 0.0 {
                let target = -s * f.values()[j];
                assert!((v - target).norm() <= 1e-3 * target.norm());
            }
        }
    }

    #[test]
    fn x0_vanishes_at_origin() {
        let g = GridSpec::new(-4.0, 4.0, 81).unwrap();
        let f = GridFunction::from_real_fn(g, |s| (-s * s * 50.0).exp());
        let x0 = act_x0(&f, &KappaParams::default()).unwrap();
        assert_eq!(x0.values()[40], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn overflow_guard() {
        let g = GridSpec::new(-800.0, 10.0, 64).unwrap();
        let f = GridFunction::zeros(g);
        assert!(matches!(act_x0(&f, &KappaParams::default()), Err(Error::Overflow(_))));
        assert!(act_x0(&f, &KappaParams::new(10.0).unwrap()).is_ok());
    }

    #[test]
    fn x1_vanishes_for_zero_sign() {
        let f = gauss(0.0, 1.0, 1.0);
        assert_eq!(act_x1(&f, RepSign::Zero, &KappaParams::default()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn twisted_commutators_match_derivations() {
        let k = KappaParams::default();
        let a: AlgebraElement = MixedSymbol::gaussian(0.1, 0.5, 0.8, 0.9).into();
        let f = gauss(0.4, 0.9, -0.6);
        let scale = f.residual_scale(1.0);
        for nu in [RepSign::Plus, RepSign::Minus] {
            for x in [Derivation::Partial0, Derivation::X0, Derivation::X1] {
                let c = twisted_commutator(x, &a, nu, &grid(), &k).unwrap();
                let image = represent(&x.image(&a, nu, &k).unwrap(), nu, &grid(), &k).unwrap();
                let r = c.apply(&f).unwrap().l2_distance(&image.apply(&f).unwrap());
                assert!(r <= 1e-7 * scale, "{x:?} nu {nu}: {r}");
            }
            // Without the twist the X₁ identity fails visibly.
            let c = twisted_commutator(Derivation::X1, &a, nu, &grid(), &k).unwrap();
            let image = represent(&Derivation::X1.image(&a, nu, &k).unwrap(), nu, &grid(), &k).unwrap();
            let expected = image.apply(&f).unwrap();
            let r = c.apply_untwisted(&f).unwrap().l2_distance(&expected);
            assert!(r >= 0.1 * expected.norm(), "untwisted residual {r} vs {}", expected.norm());
        }
    }

    #[test]
    fn unit_commutator_vanishes() {
        let k = KappaParams::default();
        let f = gauss(0.0, 1.0, 0.4);
        for x in [Derivation::X0, Derivation::X1] {
            let c = twisted_commutator(x, &AlgebraElement::Unit, RepSign::Plus, &grid(), &k).unwrap();
            assert!(c.apply(&f).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn krein_product_conventions() {
        let g = gauss(0.0, 1.0, 0.0);
        let (g, _) = g.normalized().unwrap();
        let z = GridFunction::zeros(grid());
        let up = Spinor::new(g.clone(), z.clone()).unwrap();
        let down = Spinor::new(z, g).unwrap();
        assert!(krein_product(&up, &up).unwrap().norm() < 1e-15);
        // 2×2 oracle: (e₁, 𝒥e₂) = 𝒥₁₂ = −1.
        assert!(
            (krein_product(&up, &down).unwrap() - Complex64::new(FundamentalSymmetry::MATRIX[0][1], 0.0)).norm()
                < 1e-12
        );
        let a = Spinor::new(gauss(0.3, 1.0, 1.0), gauss(-0.5, 0.7, -2.0)).unwrap();
        let b = Spinor::new(gauss(1.0, 0.8, 0.1), gauss(0.0, 1.1, 0.9)).unwrap();
        let ab = krein_product(&a, &b).unwrap();
        let ba = krein_product(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
        let c = Complex64::new(0.3, -1.7);
        assert!((krein_product(&a, &b.scale(c)).unwrap() - c * ab).norm() < 1e-12);
        assert!((krein_product(&a.scale(c), &b).unwrap() - c.conj() * ab).norm() < 1e-12);
        let sum = &a + &b;
        assert!((krein_product(&sum, &b).unwrap() - ab - krein_product(&b, &b).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn literal_dirac_operator_has_opposite_signs() {
        // With D itself rather than iD the Krein relation holds with a plus
        // sign and [D, 𝒯]_ℰ equals −i·antidiag(1, 1).
        let k = KappaParams::default();
        let d = DiracOperator::new(k, grid(), RepSign::Plus).unwrap();
        let phi = Spinor::new(gauss(0.3, 1.0, 1.0), gauss(-0.5, 0.7, -2.0)).unwrap();
        let psi = Spinor::new(gauss(1.0, 0.8, 0.1), gauss(0.0, 1.1, 0.9)).unwrap();
        let left = krein_product(
            &phi,
            &twist_spinor_inverse(&d.apply(&twist_spinor(&psi, &k).unwrap()).unwrap(), &k).unwrap(),
        )
        .unwrap();
        let right = krein_product(&d.apply(&phi).unwrap(), &psi).unwrap();
        assert!((left - right).norm() < 1e-8 * left.norm());
        assert!((left + right).norm() > 0.1 * left.norm());

        let tp = Spinor::new(time_operator(&psi.upper), time_operator(&psi.lower)).unwrap();
        let dp = d.apply(&psi).unwrap();
        let tt = |g: &GridFunction| &time_operator(g) + &g.scale(I);
        let comm = &d.apply(&tp).unwrap() - &Spinor::new(tt(&dp.upper), tt(&dp.lower)).unwrap();
        let expected = Spinor::new(psi.lower.scale(-I), psi.upper.scale(-I)).unwrap();
        assert!(comm.l2_distance(&expected) < 1e-6 * psi.norm());
    }

    #[test]
    fn schrodinger_pair() {
        let f = gauss(0.2, 1.0, 0.8);
        let p = |g: &GridFunction| spectral_derivative(g).scale(-I);
        let q = |g: &GridFunction| act_partial0(g);
        let comm = &p(&q(&f)) - &q(&p(&f));
        assert!(comm.max_distance(&f.scale(-I)) < 1e-8);
    }

    #[test]
    fn x1_coordinate_sign_per_block() {
        let k = KappaParams::default();
        let x1: AlgebraElement = MixedSymbol::unit_delta("x1", |b| Complex64::new(b, 0.0)).into();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let f = random_gaussian(&mut rng, &grid());
            let plus = represent(&x1, RepSign::Plus, &grid(), &k).unwrap().apply(&f).unwrap();
            let minus = represent(&x1, RepSign::Minus, &grid(), &k).unwrap().apply(&f).unwrap();
            assert!(f.inner(&plus).re > 0.0);
            assert!(f.inner(&minus).re < 0.0);
        }
    }

    #[test]
    fn shift_operators_compose_by_the_group_law() {
        let k = KappaParams::default();
        let f = gauss(3.0, 0.6, 0.0);
        let a = PlaneWave::new(ONE, 0.5, 1.2);
        let b = PlaneWave::new(ONE, -0.8, -0.7);
        let ab: AlgebraElement = crate::algebra::star_planewave(&a, &b, &k).into();
        let pa = represent(&a.into(), RepSign::Plus, &grid(), &k).unwrap();
        let pb = represent(&b.into(), RepSign::Plus, &grid(), &k).unwrap();
        let pab = represent(&ab, RepSign::Plus, &grid(), &k).unwrap();
        let lhs = pab.apply(&f).unwrap();
        let rhs = pa.apply(&pb.apply(&f).unwrap()).unwrap();
        assert!(lhs.l2_distance(&rhs) < 1e-8);
    }
}
