//! The κ-Minkowski star algebra.
//!
//! Two layers are provided. The exact layer works with finite sums of plane
//! waves `c·e^{i(k₀x₀ + k₁x₁)}`, on which the star product reduces to the
//! affine group law `(k₀, k₁)·(l₀, l₁) = (k₀ + l₀, k₁ + e^{−k₀/κ}l₁)`. The
//! numeric layer works with mixed-variable symbols `ã(q₀, β)`, Fourier
//! transformed in the time coordinate only.

use std::fmt;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance under which two momenta are treated as equal when
/// merging plane-wave terms.
pub const MOMENTUM_MERGE_TOL: f64 = 1e-12;

/// Step of the central difference used for `∂_β` when a symbol has no
/// derivative evaluator.
pub const BETA_DIFF_STEP: f64 = 1e-5;

/// Default number of quadrature nodes for the `q₀` integral of the mixed
/// star product.
pub const STAR_QUADRATURE_NODES: usize = 1601;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaParams {
    pub kappa: f64,
}

impl Default for KappaParams {
    fn default() -> Self {
        KappaParams { kappa: 1.0 }
    }
}

impl KappaParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter { name: "kappa", reason: format!("{kappa} is not a positive number") });
        }
        Ok(KappaParams { kappa })
    }

    /// Eigenvalue `e^{−k₀/κ}` of the twist on a plane wave.
    pub fn twist_factor(&self, k0: f64) -> f64 {
        (-k0 / self.kappa).exp()
    }

    /// Eigenvalue `κ(1 − e^{−k₀/κ})` of `X₀` on a plane wave.
    pub fn x0_factor(&self, k0: f64) -> f64 {
        -self.kappa * (-k0 / self.kappa).exp_m1()
    }
}

/// `coeff·e^{i(k0·x₀ + k1·x₁)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub coeff: Complex64,
    pub k0: f64,
    pub k1: f64,
}

#[derive(Serialize, Deserialize)]
struct PlaneWaveRepr {
    re: f64,
    im: f64,
    k0: f64,
    k1: f64,
}

impl Serialize for PlaneWave {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlaneWaveRepr { re: self.coeff.re, im: self.coeff.im, k0: self.k0, k1: self.k1 }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlaneWave {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PlaneWaveRepr::deserialize(d)?;
        Ok(PlaneWave::new(Complex64::new(r.re, r.im), r.k0, r.k1))
    }
}

impl PlaneWave {
    pub fn new(coeff: Complex64, k0: f64, k1: f64) -> Self {
        PlaneWave { coeff, k0, k1 }
    }

    pub fn unit() -> Self {
        PlaneWave::new(Complex64::new(1.0, 0.0), 0.0, 0.0)
    }

    /// Value at complex coordinates.
    pub fn eval(&self, x0: Complex64, x1: Complex64) -> Complex64 {
        self.coeff * (I * (x0 * self.k0 + x1 * self.k1)).exp()
    }

    fn same_momentum(&self, other: &PlaneWave) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= MOMENTUM_MERGE_TOL * a.abs().max(b.abs()).max(1.0);
        close(self.k0, other.k0) && close(self.k1, other.k1)
    }

    fn with_coeff(&self, coeff: Complex64) -> PlaneWave {
        PlaneWave { coeff, ..*self }
    }
}

pub fn star_planewave(f: &PlaneWave, g: &PlaneWave, k: &KappaParams) -> PlaneWave {
    PlaneWave { coeff: f.coeff * g.coeff, k0: f.k0 + g.k0, k1: f.k1 + k.twist_factor(f.k0) * g.k1 }
}

/// `c ↦ c̄`, `(k₀, k₁) ↦ (−k₀, −k₁e^{k₀/κ})`.
pub fn involution_planewave(f: &PlaneWave, k: &KappaParams) -> PlaneWave {
    PlaneWave { coeff: f.coeff.conj(), k0: -f.k0, k1: -f.k1 / k.twist_factor(f.k0) }
}

/// Finite sum of plane waves with distinct momenta and non-zero coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlaneWaveSum {
    terms: Vec<PlaneWave>,
}

impl Serialize for PlaneWaveSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlaneWaveSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(PlaneWaveSum::new(Vec::<PlaneWave>::deserialize(d)?))
    }
}

impl From<PlaneWave> for PlaneWaveSum {
    fn from(w: PlaneWave) -> Self {
        PlaneWaveSum::new(vec![w])
    }
}

impl PlaneWaveSum {
    /// Merges terms of equal momentum, drops zero coefficients and sorts by
    /// `(k0, k1)`.
    pub fn new(terms: impl IntoIterator<Item = PlaneWave>) -> Self {
        let mut merged: Vec<PlaneWave> = Vec::new();
        for t in terms {
            match merged.iter_mut().find(|m| m.same_momentum(&t)) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        merged.sort_by(|a, b| a.k0.total_cmp(&b.k0).then(a.k1.total_cmp(&b.k1)));
        PlaneWaveSum { terms: merged }
    }

    pub fn zero() -> Self {
        PlaneWaveSum::default()
    }

    pub fn unit() -> Self {
        PlaneWave::unit().into()
    }

    pub fn constant(c: Complex64) -> Self {
        PlaneWave::new(c, 0.0, 0.0).into()
    }

    pub fn terms(&self) -> &[PlaneWave] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        PlaneWaveSum::new(self.terms.iter().map(|t| t.with_coeff(t.coeff * c)))
    }

    /// Multiplies each coefficient by `f(k0, k1)`: the action of a Fourier
    /// multiplier.
    pub fn map_coeffs(&self, f: impl Fn(f64, f64) -> Complex64) -> Self {
        PlaneWaveSum::new(self.terms.iter().map(|t| t.with_coeff(t.coeff * f(t.k0, t.k1))))
    }

    pub fn eval(&self, x0: Complex64, x1: Complex64) -> Complex64 {
        self.terms.iter().map(|t| t.eval(x0, x1)).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient of `self − other` after merging.
    pub fn distance(&self, other: &PlaneWaveSum) -> f64 {
        (self - other).max_abs_coeff()
    }

    pub fn star(&self, other: &PlaneWaveSum, k: &KappaParams) -> PlaneWaveSum {
        star_sum(self, other, k)
    }

    pub fn involution(&self, k: &KappaParams) -> PlaneWaveSum {
        involution_p(self, k)
    }

    pub fn is_hermitian(&self, k: &KappaParams, tol: f64) -> bool {
        self.distance(&self.involution(k)) <= tol * self.max_abs_coeff().max(1.0)
    }

    /// Random sum of `n_terms` plane waves with coefficients in the unit square
    /// and momenta in `[−momentum_bound, momentum_bound]²`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_terms: usize, momentum_bound: f64) -> Self {
        let terms = (0..n_terms).map(|_| {
            let coeff = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let k0 = rng.random_range(-momentum_bound..momentum_bound);
            let k1 = rng.random_range(-momentum_bound..momentum_bound);
            PlaneWave::new(coeff, k0, k1)
        });
        PlaneWaveSum::new(terms)
    }
}

impl Add for &PlaneWaveSum {
    type Output = PlaneWaveSum;
    fn add(self, rhs: &PlaneWaveSum) -> PlaneWaveSum {
        PlaneWaveSum::new(self.terms.iter().chain(&rhs.terms).copied())
    }
}

impl Sub for &PlaneWaveSum {
    type Output = PlaneWaveSum;
    fn sub(self, rhs: &PlaneWaveSum) -> PlaneWaveSum {
        let neg = rhs.terms.iter().map(|t| t.with_coeff(-t.coeff));
        PlaneWaveSum::new(self.terms.iter().copied().chain(neg))
    }
}

pub fn star_sum(f: &PlaneWaveSum, g: &PlaneWaveSum, k: &KappaParams) -> PlaneWaveSum {
    PlaneWaveSum::new(f.terms.iter().flat_map(|a| g.terms.iter().map(move |b| star_planewave(a, b, k))))
}

pub fn involution_p(f: &PlaneWaveSum, k: &KappaParams) -> PlaneWaveSum {
    PlaneWaveSum::new(f.terms.iter().map(|t| involution_planewave(t, k)))
}

pub type SymbolFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DecayClass {
    /// Vanishes outside `[q_lo, q_hi]`.
    CompactInQ0 { q_lo: f64, q_hi: f64 },
    /// Rapid decay in `q₀`; numeric use needs a truncation window.
    Schwartz { truncation: Option<(f64, f64)> },
    /// `δ(q₀)·g(β)`: a function of `x₁` alone. The evaluator returns `g(β)`.
    UnitDelta,
}

impl DecayClass {
    fn window(&self) -> Option<(f64, f64)> {
        match *self {
            DecayClass::CompactInQ0 { q_lo, q_hi } => Some((q_lo, q_hi)),
            DecayClass::Schwartz { truncation } => truncation,
            DecayClass::UnitDelta => Some((0.0, 0.0)),
        }
    }
}

/// Mixed-variable symbol `ã(q₀, β)`, with `q₀` the momentum dual to `x₀` and
/// `β` the value of `x₁`.
#[derive(Clone)]
pub struct MixedSymbol {
    name: String,
    decay: DecayClass,
    eval: SymbolFn,
    d_beta: Option<SymbolFn>,
    smooth: bool,
}

impl fmt::Debug for MixedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixedSymbol")
            .field("name", &self.name)
            .field("decay", &self.decay)
            .field("exact_d_beta", &self.d_beta.is_some())
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl MixedSymbol {
    pub fn new(
        name: impl Into<String>,
        decay: DecayClass,
        eval: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MixedSymbol { name: name.into(), decay, eval: Arc::new(eval), d_beta: None, smooth: true }
    }

    pub fn with_d_beta(mut self, d: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        self.d_beta = Some(Arc::new(d));
        self
    }

    /// Marks the symbol as not differentiable in `β`; `∂_β` then requires an
    /// explicit evaluator.
    pub fn non_smooth(mut self) -> Self {
        self.smooth = false;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decay(&self) -> DecayClass {
        self.decay
    }

    pub fn is_unit_delta(&self) -> bool {
        self.decay == DecayClass::UnitDelta
    }

    pub fn has_exact_d_beta(&self) -> bool {
        self.d_beta.is_some()
    }

    /// The `q₀` window used for numerics; errors for Schwartz symbols without
    /// a declared truncation.
    pub fn q_support(&self) -> Result<(f64, f64)> {
        self.decay.window().ok_or_else(|| Error::UnboundedSupport(self.name.clone()))
    }

    fn inside(&self, q: f64) -> bool {
        match self.decay.window() {
            Some((lo, hi)) if !self.is_unit_delta() => q >= lo && q <= hi,
            _ => true,
        }
    }

    /// `ã(q₀, β)`, zero outside the declared window. For the unit-delta class
    /// this is the coefficient `g(β)` of `δ(q₀)`.
    pub fn eval(&self, q: f64, beta: f64) -> Complex64 {
        if self.inside(q) {
            (self.eval)(q, beta)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// `∂_β ã(q₀, β)`: exact when an evaluator is attached, otherwise a
    /// central difference with step [`BETA_DIFF_STEP`].
    pub fn d_beta(&self, q: f64, beta: f64) -> Result<Complex64> {
        if !self.inside(q) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match (&self.d_beta, self.smooth) {
            (Some(d), _) => Ok(d(q, beta)),
            (None, true) => Ok(((self.eval)(q, beta + BETA_DIFF_STEP) - (self.eval)(q, beta - BETA_DIFF_STEP))
                / (2.0 * BETA_DIFF_STEP)),
            (None, false) => Err(Error::MissingDerivative(self.name.clone())),
        }
    }

    /// Multiplies by a function of `q₀` alone.
    pub fn multiply_q(&self, name: impl Into<String>, m: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        let m = Arc::new(m);
        let e = self.eval.clone();
        let m1 = m.clone();
        let d_beta = self.d_beta.clone().map(|d| -> SymbolFn {
            let m2 = m.clone();
            Arc::new(move |q, b| m2(q) * d(q, b))
        });
        MixedSymbol {
            name: name.into(),
            decay: self.decay,
            eval: Arc::new(move |q, b| m1(q) * e(q, b)),
            d_beta,
            smooth: self.smooth,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.multiply_q(self.name.clone(), move |_| c)
    }

    /// `ã‡(q₀, β) = conj ã(−q₀, e^{−q₀/κ}β)`.
    pub fn involution(&self, k: &KappaParams) -> Self {
        let kappa = k.kappa;
        let src = self.clone();
        let src_d = self.clone();
        let decay = match self.decay {
            DecayClass::CompactInQ0 { q_lo, q_hi } => DecayClass::CompactInQ0 { q_lo: -q_hi, q_hi: -q_lo },
            DecayClass::Schwartz { truncation } => {
                DecayClass::Schwartz { truncation: truncation.map(|(lo, hi)| (-hi, -lo)) }
            }
            DecayClass::UnitDelta => DecayClass::UnitDelta,
        };
        let has_d = self.d_beta.is_some();
        let mut out = MixedSymbol {
            name: format!("{}^dagger", self.name),
            decay,
            eval: Arc::new(move |q, b| src.eval(-q, (-q / kappa).exp() * b).conj()),
            d_beta: None,
            smooth: self.smooth,
        };
        if has_d {
            out.d_beta = Some(Arc::new(move |q, b| {
                let t = (-q / kappa).exp();
                src_d.d_beta(-q, t * b).expect("exact derivative attached").conj() * t
            }));
        }
        out
    }

    /// `(ã + ã‡)/2`.
    pub fn hermitian_part(&self, k: &KappaParams) -> Self {
        let dag = self.involution(k);
        let half = Complex64::new(0.5, 0.0);
        combine(format!("herm({})", self.name), self, half, &dag, half).expect("same decay class")
    }

    /// Largest `|ã‡ − ã|` over an `n × n` sample of `[q_lo, q_hi] × [−b, b]`.
    pub fn hermiticity_defect(&self, k: &KappaParams, beta_bound: f64, n: usize) -> Result<f64> {
        let (lo, hi) = self.q_support()?;
        let (lo, hi) = (lo.min(-hi), hi.max(-lo));
        let dag = self.involution(k);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let q = if self.is_unit_delta() { 0.0 } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            for j in 0..n {
                let b = -beta_bound + 2.0 * beta_bound * j as f64 / (n - 1) as f64;
                worst = worst.max((dag.eval(q, b) - self.eval(q, b)).norm());
            }
        }
        Ok(worst)
    }

    /// Gaussian bump `exp(−(q−q_c)²/(2w_q²))·exp(−(β−b_c)²/(2w_b²))`, truncated
    /// at ten widths in `q₀`, with exact `∂_β`.
    pub fn gaussian(q_center: f64, q_width: f64, beta_center: f64, beta_width: f64) -> Self {
        let g = move |q: f64, b: f64| {
            let x = (q - q_center) / q_width;
            let y = (b - beta_center) / beta_width;
            (-0.5 * (x * x + y * y)).exp()
        };
        MixedSymbol::new(
            format!("gaussian({q_center},{q_width},{beta_center},{beta_width})"),
            DecayClass::Schwartz { truncation: Some((q_center - 10.0 * q_width, q_center + 10.0 * q_width)) },
            move |q, b| Complex64::new(g(q, b), 0.0),
        )
        .with_d_beta(move |q, b| Complex64::new(-(b - beta_center) / (beta_width * beta_width) * g(q, b), 0.0))
    }

    /// `exp(−q²/(2w²))·t(β)` with `t(β) = −amp·tanh(β/β_w)`, a decreasing
    /// profile in `β`.
    pub fn gaussian_tanh(q_width: f64, amplitude: f64, beta_width: f64) -> Self {
        let gq = move |q: f64| (-0.5 * (q / q_width).powi(2)).exp();
        MixedSymbol::new(
            format!("gaussian_tanh({q_width},{amplitude},{beta_width})"),
            DecayClass::Schwartz { truncation: Some((-10.0 * q_width, 10.0 * q_width)) },
            move |q, b| Complex64::new(-amplitude * gq(q) * (b / beta_width).tanh(), 0.0),
        )
        .with_d_beta(move |q, b| {
            let sech2 = 1.0 / (b / beta_width).cosh().powi(2);
            Complex64::new(-amplitude * gq(q) * sech2 / beta_width, 0.0)
        })
    }

    /// `δ(q₀)·g(β)`.
    pub fn unit_delta(name: impl Into<String>, g: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        MixedSymbol::new(name, DecayClass::UnitDelta, move |_, b| g(b))
    }

    /// The unit `𝟙(q₀, β) = δ(q₀)`.
    pub fn unit() -> Self {
        MixedSymbol::unit_delta("unit", |_| Complex64::new(1.0, 0.0)).with_d_beta(|_, _| Complex64::new(0.0, 0.0))
    }
}

/// `ca·a + cb·b` with the union window.
fn combine(name: String, a: &MixedSymbol, ca: Complex64, b: &MixedSymbol, cb: Complex64) -> Result<MixedSymbol> {
    let decay = match (a.decay, b.decay) {
        (DecayClass::UnitDelta, DecayClass::UnitDelta) => DecayClass::UnitDelta,
        (DecayClass::UnitDelta, _) | (_, DecayClass::UnitDelta) => {
            return Err(Error::Distributional(format!("{} + {}", a.name, b.name)));
        }
        (x, y) => match (x.window(), y.window()) {
            (Some((l1, h1)), Some((l2, h2))) => {
                let w = (l1.min(l2), h1.max(h2));
                if matches!(x, DecayClass::CompactInQ0 { .. }) && matches!(y, DecayClass::CompactInQ0 { .. }) {
                    DecayClass::CompactInQ0 { q_lo: w.0, q_hi: w.1 }
                } else {
                    DecayClass::Schwartz { truncation: Some(w) }
                }
            }
            _ => DecayClass::Schwartz { truncation: None },
        },
    };
    let (ea, eb) = (a.clone(), b.clone());
    let both_d = a.d_beta.is_some() && b.d_beta.is_some();
    let (da, db) = (a.clone(), b.clone());
    let mut out = MixedSymbol {
        name,
        decay,
        eval: Arc::new(move |q, beta| ca * ea.eval(q, beta) + cb * eb.eval(q, beta)),
        d_beta: None,
        smooth: a.smooth && b.smooth,
    };
    if both_d {
        out.d_beta = Some(Arc::new(move |q, beta| {
            ca * da.d_beta(q, beta).expect("exact") + cb * db.d_beta(q, beta).expect("exact")
        }));
    }
    Ok(out)
}

/// `(f ⋆ g)(p, β) = ∫ dq f(q, β)·g(p − q, e^{−q/κ}β)`, evaluated lazily with
/// a `nodes`-point trapezoid rule on the overlap of the two windows.
pub fn star_mixed_with(f: &MixedSymbol, g: &MixedSymbol, k: &KappaParams, nodes: usize) -> Result<MixedSymbol> {
    let kappa = k.kappa;
    let name = format!("({})*({})", f.name, g.name);
    match (f.is_unit_delta(), g.is_unit_delta()) {
        (true, true) => {
            let (f, g) = (f.clone(), g.clone());
            return Ok(MixedSymbol::unit_delta(name, move |b| f.eval(0.0, b) * g.eval(0.0, b)));
        }
        (false, true) => {
            let (f, g) = (f.clone(), g.clone());
            let decay = f.decay;
            return Ok(MixedSymbol::new(name, decay, move |p, b| f.eval(p, b) * g.eval(0.0, (-p / kappa).exp() * b)));
        }
        (true, false) => {
            let (f, g) = (f.clone(), g.clone());
            let decay = g.decay;
            return Ok(MixedSymbol::new(name, decay, move |p, b| f.eval(0.0, b) * g.eval(p, b)));
        }
        (false, false) => {}
    }
    let (lf, hf) = f.q_support()?;
    let (lg, hg) = g.q_support()?;
    if nodes < 2 {
        return Err(Error::InvalidParameter { name: "nodes", reason: "need at least 2 quadrature nodes".into() });
    }
    let compact =
        matches!(f.decay, DecayClass::CompactInQ0 { .. }) && matches!(g.decay, DecayClass::CompactInQ0 { .. });
    let decay = if compact {
        DecayClass::CompactInQ0 { q_lo: lf + lg, q_hi: hf + hg }
    } else {
        DecayClass::Schwartz { truncation: Some((lf + lg, hf + hg)) }
    };
    let integrate = move |p: f64, integrand: &dyn Fn(f64) -> Complex64| -> Complex64 {
        let lo = lf.max(p - hg);
        let hi = hf.min(p - lg);
        if hi <= lo {
            return Complex64::new(0.0, 0.0);
        }
        let h = (hi - lo) / (nodes - 1) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..nodes {
            let w = if j == 0 || j == nodes - 1 { 0.5 * h } else { h };
            acc += integrand(lo + j as f64 * h) * w;
        }
        acc
    };
    let (fe, ge) = (f.clone(), g.clone());
    let mut out = MixedSymbol::new(name, decay, move |p, b| {
        integrate(p, &|q| fe.eval(q, b) * ge.eval(p - q, (-q / kappa).exp() * b))
    });
    out.smooth = f.smooth && g.smooth;
    if f.d_beta.is_some() && g.d_beta.is_some() {
        let (fd, gd) = (f.clone(), g.clone());
        out.d_beta = Some(Arc::new(move |p, b| {
            integrate(p, &|q| {
                let t = (-q / kappa).exp();
                fd.d_beta(q, b).expect("exact") * gd.eval(p - q, t * b)
                    + fd.eval(q, b) * gd.d_beta(p - q, t * b).expect("exact") * t
            })
        }));
    }
    Ok(out)
}

pub fn star_mixed(f: &MixedSymbol, g: &MixedSymbol, k: &KappaParams) -> Result<MixedSymbol> {
    star_mixed_with(f, g, k, STAR_QUADRATURE_NODES)
}

/// Element of the unitalised algebra.
#[derive(Debug, Clone)]
pub enum AlgebraElement {
    PlaneWaves(PlaneWaveSum),
    Mixed(MixedSymbol),
    Unit,
}

impl From<PlaneWaveSum> for AlgebraElement {
    fn from(s: PlaneWaveSum) -> Self {
        AlgebraElement::PlaneWaves(s)
    }
}

impl From<PlaneWave> for AlgebraElement {
    fn from(w: PlaneWave) -> Self {
        AlgebraElement::PlaneWaves(w.into())
    }
}

impl From<MixedSymbol> for AlgebraElement {
    fn from(s: MixedSymbol) -> Self {
        AlgebraElement::Mixed(s)
    }
}

impl AlgebraElement {
    /// Applies the Fourier multiplier `m(k₀)` (plane waves) or `m(q₀)`
    /// (mixed symbols); the unit is treated as momentum zero.
    fn multiply_k0(&self, tag: &str, m: impl Fn(f64) -> Complex64 + Send + Sync + Clone + 'static) -> AlgebraElement {
        match self {
            AlgebraElement::PlaneWaves(s) => s.map_coeffs(|k0, _| m(k0)).into(),
            AlgebraElement::Mixed(a) => a.multiply_q(format!("{tag}({})", a.name), m).into(),
            AlgebraElement::Unit => PlaneWaveSum::unit().map_coeffs(|k0, _| m(k0)).into(),
        }
    }

    pub fn scale(&self, c: Complex64) -> AlgebraElement {
        match self {
            AlgebraElement::PlaneWaves(s) => s.scale(c).into(),
            AlgebraElement::Mixed(m) => m.scale(c).into(),
            AlgebraElement::Unit => PlaneWaveSum::constant(c).into(),
        }
    }

    /// `ca·self + cb·other`. Mixed symbols cannot be combined with plane waves
    /// or with the unit.
    pub fn linear_combination(&self, ca: Complex64, other: &AlgebraElement, cb: Complex64) -> Result<AlgebraElement> {
        match (self, other) {
            (AlgebraElement::Mixed(a), AlgebraElement::Mixed(b)) => {
                Ok(combine(format!("{ca}*{}+{cb}*{}", a.name, b.name), a, ca, b, cb)?.into())
            }
            (AlgebraElement::Mixed(_), _) | (_, AlgebraElement::Mixed(_)) => Err(Error::InvalidParameter {
                name: "linear_combination",
                reason: "mixed symbols combine only with mixed symbols".into(),
            }),
            _ => {
                let a = self.as_plane_waves().expect("plane waves").scale(ca);
                let b = other.as_plane_waves().expect("plane waves").scale(cb);
                Ok((&a + &b).into())
            }
        }
    }

    pub fn as_plane_waves(&self) -> Option<PlaneWaveSum> {
        match self {
            AlgebraElement::PlaneWaves(s) => Some(s.clone()),
            AlgebraElement::Unit => Some(PlaneWaveSum::unit()),
            AlgebraElement::Mixed(_) => None,
        }
    }

    pub fn star(&self, other: &AlgebraElement, k: &KappaParams) -> Result<AlgebraElement> {
        match (self, other) {
            (AlgebraElement::Unit, x) | (x, AlgebraElement::Unit) => Ok(x.clone()),
            (AlgebraElement::PlaneWaves(f), AlgebraElement::PlaneWaves(g)) => Ok(star_sum(f, g, k).into()),
            (AlgebraElement::Mixed(f), AlgebraElement::Mixed(g)) => Ok(star_mixed(f, g, k)?.into()),
            _ => Err(Error::InvalidParameter {
                name: "star",
                reason: "plane-wave sums and mixed symbols cannot be multiplied directly".into(),
            }),
        }
    }
}

/// `X₀ = κ(1 − ℰ)`: multiplier `κ(1 − e^{−k₀/κ})`.
pub fn derive_x0(a: &AlgebraElement, k: &KappaParams) -> AlgebraElement {
    let k = *k;
    a.multiply_k0("X0", move |k0| Complex64::new(k.x0_factor(k0), 0.0))
}

/// `X₁ = −i∂₁`: multiplier `k₁` on plane waves, `−i∂_β` on mixed symbols.
pub fn derive_x1(a: &AlgebraElement) -> Result<AlgebraElement> {
    match a {
        AlgebraElement::PlaneWaves(s) => Ok(s.map_coeffs(|_, k1| Complex64::new(k1, 0.0)).into()),
        AlgebraElement::Unit => Ok(PlaneWaveSum::zero().into()),
        AlgebraElement::Mixed(m) => {
            m.d_beta(0.0, 0.0)?;
            let src = m.clone();
            let out = MixedSymbol::new(format!("X1({})", m.name), m.decay, move |q, b| {
                -I * src.d_beta(q, b).expect("checked above")
            });
            Ok(out.into())
        }
    }
}

/// `∂₀`: multiplier `i·k₀` (plane waves) or `i·q₀` (mixed symbols).
pub fn derive_partial0(a: &AlgebraElement) -> AlgebraElement {
    a.multiply_k0("d0", |k0| I * k0)
}

/// `ℰ = e^{−P₀/κ}`: multiplier `e^{−k₀/κ}`.
pub fn twist_e(a: &AlgebraElement, k: &KappaParams) -> AlgebraElement {
    if matches!(a, AlgebraElement::Unit) {
        return AlgebraElement::Unit;
    }
    let k = *k;
    a.multiply_k0("E", move |k0| Complex64::new(k.twist_factor(k0), 0.0))
}

/// `ℰ^{−1}`: multiplier `e^{k₀/κ}`.
pub fn twist_e_inverse(a: &AlgebraElement, k: &KappaParams) -> AlgebraElement {
    if matches!(a, AlgebraElement::Unit) {
        return AlgebraElement::Unit;
    }
    let k = *k;
    a.multiply_k0("Einv", move |k0| Complex64::new(1.0 / k.twist_factor(k0), 0.0))
}

pub fn involution(a: &AlgebraElement, k: &KappaParams) -> AlgebraElement {
    match a {
        AlgebraElement::PlaneWaves(s) => involution_p(s, k).into(),
        AlgebraElement::Mixed(m) => m.involution(k).into(),
        AlgebraElement::Unit => AlgebraElement::Unit,
    }
}

/// Named symbols that can be referenced from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum SymbolSpec {
    Gaussian {
        q_center: f64,
        q_width: f64,
        beta_center: f64,
        beta_width: f64,
    },
    /// Hermitian part of [`SymbolSpec::Gaussian`].
    HermitianGaussian {
        q_center: f64,
        q_width: f64,
        beta_center: f64,
        beta_width: f64,
    },
    /// Hermitian part of `exp(−q²/(2w²))·(−amp·tanh(β/β_w))`.
    HermitianGaussianTanh {
        q_width: f64,
        amplitude: f64,
        beta_width: f64,
    },
}

impl SymbolSpec {
    pub fn build(&self, k: &KappaParams) -> Result<MixedSymbol> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("{v} must be positive") })
            }
        };
        Ok(match *self {
            SymbolSpec::Gaussian { q_center, q_width, beta_center, beta_width } => {
                positive("q_width", q_width)?;
                positive("beta_width", beta_width)?;
                MixedSymbol::gaussian(q_center, q_width, beta_center, beta_width)
            }
            SymbolSpec::HermitianGaussian { q_center, q_width, beta_center, beta_width } => {
                positive("q_width", q_width)?;
                positive("beta_width", beta_width)?;
                MixedSymbol::gaussian(q_center, q_width, beta_center, beta_width).hermitian_part(k)
            }
            SymbolSpec::HermitianGaussianTanh { q_width, amplitude, beta_width } => {
                positive("q_width", q_width)?;
                positive("beta_width", beta_width)?;
                MixedSymbol::gaussian_tanh(q_width, amplitude, beta_width).hermitian_part(k)
            }
        })
    }
}

/// One line of the algebra self-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub trials: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks associativity, anti-multiplicativity and involutivity of `‡`, the
/// twisted Leibniz rule and the non-reality identity on `trials` random
/// plane-wave sums. The last line records that naive reality fails.
pub fn algebra_selftest<R: Rng + ?Sized>(rng: &mut R, trials: usize, k: &KappaParams, tol: f64) -> Vec<IdentityCheck> {
    let mut worst = [0.0f64; 7];
    let mut naive_gap = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(1..=3);
        let f = PlaneWaveSum::random(rng, n, 2.0);
        let g = PlaneWaveSum::random(rng, n, 2.0);
        let h = PlaneWaveSum::random(rng, n, 2.0);
        let (fa, ga) = (AlgebraElement::from(f.clone()), AlgebraElement::from(g.clone()));
        let pw = |e: AlgebraElement| e.as_plane_waves().expect("plane waves");

        worst[0] = worst[0].max(f.star(&g, k).star(&h, k).distance(&f.star(&g.star(&h, k), k)));
        worst[1] = worst[1].max(f.star(&g, k).involution(k).distance(&g.involution(k).star(&f.involution(k), k)));
        worst[2] = worst[2].max(f.involution(k).involution(k).distance(&f));

        let fg = AlgebraElement::from(f.star(&g, k));
        let ef = pw(twist_e(&fa, k));
        let lhs0 = pw(derive_x0(&fg, k));
        let rhs0 = &pw(derive_x0(&fa, k)).star(&g, k) + &ef.star(&pw(derive_x0(&ga, k)), k);
        worst[3] = worst[3].max(lhs0.distance(&rhs0));
        let lhs1 = pw(derive_x1(&fg).expect("plane waves"));
        let rhs1 = &pw(derive_x1(&fa).expect("plane waves")).star(&g, k)
            + &ef.star(&pw(derive_x1(&ga).expect("plane waves")), k);
        worst[4] = worst[4].max(lhs1.distance(&rhs1));

        let fdag = AlgebraElement::from(f.involution(k));
        for (slot, x) in [(5usize, 0usize), (6, 1)] {
            let xf = if x == 0 { derive_x0(&fa, k) } else { derive_x1(&fa).expect("plane waves") };
            let xfdag = if x == 0 { derive_x0(&fdag, k) } else { derive_x1(&fdag).expect("plane waves") };
            let lhs = pw(xf).involution(k);
            let rhs = pw(twist_e_inverse(&xfdag, k)).scale(Complex64::new(-1.0, 0.0));
            worst[slot] = worst[slot].max(lhs.distance(&rhs));
            if x == 0 && f.terms().iter().any(|t| t.k0.abs() > 0.1) {
                naive_gap = naive_gap.min(lhs.distance(&pw(xfdag)));
            }
        }
    }
    let names = [
        "associativity",
        "involution_anti_multiplicative",
        "involution_involutive",
        "twisted_leibniz_x0",
        "twisted_leibniz_x1",
        "non_reality_x0",
        "non_reality_x1",
    ];
    let mut out: Vec<IdentityCheck> = names
        .iter()
        .zip(worst)
        .map(|(name, r)| IdentityCheck {
            identity: name.to_string(),
            trials,
            max_residual: r,
            tolerance: tol,
            pass: r <= tol,
        })
        .collect();
    // Smallest violation of naive reality among sums with a term of |k0| > 0.1.
    let naive_gap = if naive_gap.is_finite() { naive_gap } else { 0.0 };
    out.push(IdentityCheck {
        identity: "naive_reality_violated".into(),
        trials,
        max_residual: naive_gap,
        tolerance: 1e-3,
        pass: naive_gap >= 1e-3,
    });
    out
}
