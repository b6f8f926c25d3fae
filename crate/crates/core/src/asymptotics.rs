//! Closed-form asymptotic results: equilibrium dispersions, critical
//! parameters, the oscillation law of `E(t)`, phase classification and the
//! per-spectral-density coefficient limits.
//!
//! Signed squeezing convention: `r = ½ ln[m− ω− δx−/δp−]` and
//! `r_crit = ½ ln[m− ω− Δx+/Δp+]`, so a position-localized equilibrium has
//! `r_crit < 0`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::bath::{thermal_factor, SpectralDensity};
use crate::error::{Error, Result};
use crate::exact::hamiltonian::CouplingModel;
use crate::gaussian::{basis_change, log_negativity, CovarianceMatrix, ModeOrdering};
use crate::special::harmonic_number;

/// `T/Ω` at and above which the high-temperature limits are used.
pub const HIGH_T_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "SD")]
    SuddenDeath,
    #[serde(rename = "SDR")]
    SuddenDeathRevival,
    #[serde(rename = "NSD")]
    NoSuddenDeath,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::SuddenDeath => "SD",
            Phase::SuddenDeathRevival => "SDR",
            Phase::NoSuddenDeath => "NSD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    ZeroT,
    HighT,
}

impl Regime {
    /// `ZeroT` at `T = 0`, `HighT` for `T ≥ 2Ω`; intermediate temperatures are refused.
    pub fn auto(temperature: f64, omega: f64) -> Result<Self> {
        if temperature == 0.0 {
            Ok(Regime::ZeroT)
        } else if temperature >= HIGH_T_THRESHOLD * omega {
            Ok(Regime::HighT)
        } else {
            Err(Error::UnsupportedRegime(format!(
                "T = {temperature} lies between the zero- and high-temperature limits (T >= {}); \
                 use the exact dispersion source",
                HIGH_T_THRESHOLD * omega
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum AsymptoticCoefficients {
    Position { gamma: f64, d: f64, f: f64 },
    Symmetric { gamma: f64, d: f64 },
}

impl AsymptoticCoefficients {
    pub fn gamma(&self) -> f64 {
        match *self {
            AsymptoticCoefficients::Position { gamma, .. } | AsymptoticCoefficients::Symmetric { gamma, .. } => gamma,
        }
    }

    /// Equilibrium `(Δx+, Δp+)` (standard deviations) of the plus mode.
    pub fn dispersions(&self, mass: f64, omega: f64) -> Result<(f64, f64)> {
        match *self {
            AsymptoticCoefficients::Position { gamma, d, f } => {
                equilibrium_dispersions_position(gamma, d, f, mass, omega)
            }
            AsymptoticCoefficients::Symmetric { gamma, d } => equilibrium_dispersions_symmetric(gamma, d, mass, omega),
        }
    }
}

/// `Δp+ = √(D/2γ)`, `ΩΔx+ = √(D/(2m²γ) − f/m)`.
pub fn equilibrium_dispersions_position(gamma: f64, d: f64, f: f64, mass: f64, omega: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && d > 0.0) {
        return Err(Error::NoEquilibrium(format!("requires γ > 0 and D > 0 (γ = {gamma}, D = {d})")));
    }
    let x2 = (d / (2.0 * mass * mass * gamma) - f / mass) / (omega * omega);
    if !(x2 > 0.0) {
        return Err(Error::NoEquilibrium(format!(
            "D/(2m²γ) − f/m = {:.6e} is not positive; Δx+ would be imaginary",
            x2 * omega * omega
        )));
    }
    Ok((x2.sqrt(), (d / (2.0 * gamma)).sqrt()))
}

/// `Δp+ = MΩΔx+ = √(D̃/2γ̃)`.
pub fn equilibrium_dispersions_symmetric(gamma: f64, d: f64, mass: f64, omega: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && d > 0.0) {
        return Err(Error::NoEquilibrium(format!("requires γ̃ > 0 and D̃ > 0 (γ̃ = {gamma}, D̃ = {d})")));
    }
    let dp = (d / (2.0 * gamma)).sqrt();
    Ok((dp / (mass * omega), dp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalParams {
    pub r_crit: f64,
    pub s_crit: f64,
    pub e_c: f64,
}

/// `r_crit = ½ ln[m−ω−Δx+/Δp+]`, `S_crit = ½ ln[4Δx+Δp+δx−δp−]`, `E_c = |r_crit| − S_crit`.
pub fn critical_params(
    dx_plus: f64,
    dp_plus: f64,
    dx_minus: f64,
    dp_minus: f64,
    m_minus: f64,
    w_minus: f64,
) -> Result<CriticalParams> {
    for (name, v) in [
        ("dx_plus", dx_plus),
        ("dp_plus", dp_plus),
        ("dx_minus", dx_minus),
        ("dp_minus", dp_minus),
        ("m_minus", m_minus),
        ("w_minus", w_minus),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    let r_crit = 0.5 * (m_minus * w_minus * dx_plus / dp_plus).ln();
    let s_crit = 0.5 * (4.0 * dx_plus * dp_plus * dx_minus * dp_minus).ln();
    Ok(CriticalParams {
        r_crit,
        s_crit,
        e_c: r_crit.abs() - s_crit,
    })
}

/// `(Ẽ, ΔE) = (max{|r|,|r_crit|} − S_crit, min{|r|,|r_crit|})`.
pub fn mean_and_amplitude(r: f64, r_crit: f64, s_crit: f64) -> (f64, f64) {
    let (a, b) = (r.abs(), r_crit.abs());
    (a.max(b) - s_crit, a.min(b))
}

/// `(A, B)` of the oscillation law; `A² − B = 1`.
pub fn oscillation_terms(r: f64, r_crit: f64, w_minus: f64, t: f64) -> (f64, f64) {
    let (s, c) = (w_minus * t).sin_cos();
    let (c2, s2) = (c * c, s * s);
    let a = (2.0 * (r - r_crit)).cosh() * c2 + (2.0 * (r + r_crit)).cosh() * s2;
    let b = 2.0 * ((2.0 * r).sinh().powi(2) + (2.0 * r_crit).sinh().powi(2)) * s2 * c2
        + (2.0 * (r_crit - r)).sinh().powi(2) * c2 * c2
        + (2.0 * (r_crit + r)).sinh().powi(2) * s2 * s2;
    (a, b)
}

/// Unclipped `E(t) = −S_crit + ½ ln[A + √B]`; the log-negativity is `max{0, E(t)}`.
pub fn oscillation_law(r: f64, r_crit: f64, s_crit: f64, w_minus: f64, t: f64) -> f64 {
    let (a, b) = oscillation_terms(r, r_crit, w_minus, t);
    -s_crit + 0.5 * (a + b.max(0.0).sqrt()).ln()
}

/// `G(t)` with `E(t) = Ẽ + ΔE·G(t)`; zero when `ΔE = 0`. Period `π/ω−`.
pub fn g_of_t(r: f64, r_crit: f64, w_minus: f64, t: f64) -> f64 {
    let (a, b) = (r.abs(), r_crit.abs());
    let amp = a.min(b);
    if amp == 0.0 {
        return 0.0;
    }
    let (ta, tb) = oscillation_terms(r, r_crit, w_minus, t);
    (0.5 * (ta + tb.max(0.0).sqrt()).ln() - a.max(b)) / amp
}

/// NSD if `Ẽ − ΔE > 0`, SD if `Ẽ + ΔE < 0`, SDR otherwise (ties included).
pub fn classify(r: f64, r_crit: f64, s_crit: f64) -> Phase {
    let (mean, amp) = mean_and_amplitude(r, r_crit, s_crit);
    if mean - amp > 0.0 {
        Phase::NoSuddenDeath
    } else if mean + amp < 0.0 {
        Phase::SuddenDeath
    } else {
        Phase::SuddenDeathRevival
    }
}

/// Free evolution of a single-mode 2x2 covariance block over time `t`.
pub fn free_rotation(block: &Matrix2<f64>, mass: f64, omega: f64, t: f64) -> Matrix2<f64> {
    let (s, c) = (omega * t).sin_cos();
    let mw = mass * omega;
    let r = Matrix2::new(c, s / mw, -mw * s, c);
    let out = r * block * r.transpose();
    (out + out.transpose()) * 0.5
}

/// Asymptotic two-mode state: plus mode at equilibrium, minus mode rotating
/// freely, no cross correlations. Returned in Physical ordering.
pub fn asymptotic_covariance(
    t: f64,
    dx_plus: f64,
    dp_plus: f64,
    minus0: &Matrix2<f64>,
    m_minus: f64,
    w_minus: f64,
) -> Result<CovarianceMatrix> {
    let plus = Matrix2::new(dx_plus * dx_plus, 0.0, 0.0, dp_plus * dp_plus);
    let minus = free_rotation(minus0, m_minus, w_minus, t);
    let n = CovarianceMatrix::from_normal_blocks(plus, minus)?;
    basis_change(&n, ModeOrdering::Normal, ModeOrdering::Physical)
}

/// Log-negativity of [`asymptotic_covariance`].
pub fn asymptotic_negativity(
    t: f64,
    dx_plus: f64,
    dp_plus: f64,
    minus0: &Matrix2<f64>,
    m_minus: f64,
    w_minus: f64,
) -> Result<f64> {
    log_negativity(&asymptotic_covariance(t, dx_plus, dp_plus, minus0, m_minus, w_minus)?)
}

/// Diagonal minus-mode block with squeezing `r` and dispersion product `δx−δp−`.
pub fn minus_block(r: f64, dispersion_product: f64, m_minus: f64, w_minus: f64) -> Matrix2<f64> {
    let e = (2.0 * r).exp();
    let mw = m_minus * w_minus;
    Matrix2::new(dispersion_product * e / mw, 0.0, 0.0, dispersion_product * mw / e)
}

/// Exact ohmic position-coupling `T = 0` dispersions `(Δx+², Δp+²)` with `γ = 2γ0 < Ω`.
pub fn ohmic_zero_t_dispersions(gamma0: f64, cutoff: f64, mass: f64, omega: f64) -> Result<(f64, f64)> {
    let g = 2.0 * gamma0 / omega;
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::param("spectral.gamma0", format!("closed forms need 0 < 2γ0/Ω < 1, got {g}")));
    }
    if !(cutoff > omega) {
        return Err(Error::param("spectral.cutoff", "must exceed the oscillator frequency"));
    }
    let a = g.acos();
    let s = (1.0 - g * g).sqrt();
    let l = (cutoff / omega).ln();
    let mw = mass * omega;
    let x2 = a / (PI * s) / mw;
    let p2 = mw / PI * ((1.0 - 2.0 * g * g) * a / s + 2.0 * g * l);
    Ok((x2, p2))
}

/// `r1 = ½ ln[1/(2mΩΔx+²(0))]`, `r2 = ½ ln[2Δp+²(0)/(mΩ)]`.
pub fn r1_r2(dx2_zero: f64, dp2_zero: f64, mass: f64, omega: f64) -> (f64, f64) {
    let mw = mass * omega;
    (0.5 * (1.0 / (2.0 * mw * dx2_zero)).ln(), 0.5 * (2.0 * dp2_zero / mw).ln())
}

/// Weak-coupling ohmic `T = 0` forms (magnitudes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmicWeakCoupling {
    pub r1: f64,
    pub r2: f64,
    pub r_crit: f64,
    pub s_crit: f64,
}

pub fn ohmic_weak_coupling(gamma: f64, cutoff: f64, omega: f64) -> OhmicWeakCoupling {
    let l = (cutoff / omega).ln();
    let x = gamma / omega;
    OhmicWeakCoupling {
        r1: 0.5 * (1.0 + 2.0 * x / PI).ln(),
        r2: 0.5 * (1.0 + (l - 0.5) * 4.0 * x / PI).ln(),
        r_crit: 0.25 * (1.0 + 4.0 / PI * l * x).ln(),
        s_crit: 0.25 * (1.0 + (l - 1.0) * 4.0 * x / PI).ln(),
    }
}

/// High-temperature ohmic `(|r_crit|, S_crit)` with `γ = 2γ0`.
pub fn ohmic_high_t(gamma: f64, cutoff: f64, omega: f64, temperature: f64) -> (f64, f64) {
    let q = 0.25 * (1.0 + 2.0 * gamma / (PI * omega) * ((cutoff + omega) / (cutoff - omega)).ln()).ln();
    (q, 0.5 * (2.0 * temperature / omega).ln() + q)
}

/// `r_crit = ¼ ln[1 − 2mγf/D]` (signed).
pub fn r_crit_from_coefficients(mass: f64, gamma: f64, d: f64, f: f64) -> Result<f64> {
    let arg = 1.0 - 2.0 * mass * gamma * f / d;
    if !(arg > 0.0) {
        return Err(Error::NoEquilibrium(format!("1 − 2mγf/D = {arg} is not positive")));
    }
    Ok(0.25 * arg.ln())
}

/// Ohmic position variance `Δ²x(T)` from the harmonic-number expression, `γ = 2γ0 < Ω`.
pub fn ohmic_position_variance(temperature: f64, gamma0: f64, mass: f64, omega: f64) -> Result<f64> {
    let gamma = 2.0 * gamma0;
    if !(gamma < omega) {
        return Err(Error::param("spectral.gamma0", "harmonic-number form needs 2γ0 < Ω"));
    }
    let w = (omega * omega - gamma * gamma).sqrt();
    if temperature <= 0.0 {
        return Ok((w / gamma).atan() / (PI * mass * w));
    }
    let z = Complex64::new(gamma, w) / (2.0 * PI * temperature);
    Ok(temperature / (omega * omega * mass) + harmonic_number(z).im / (PI * mass * w))
}

/// Bisection for `mΩΔ²x(T) = ½` on `[0, upper]`, tolerance `1e-8 Ω`.
pub fn find_t0(variance: impl Fn(f64) -> Result<f64>, mass: f64, omega: f64, upper: f64) -> Result<f64> {
    let h = |t: f64| -> Result<f64> { Ok(mass * omega * variance(t)? - 0.5) };
    let (mut lo, mut hi) = (0.0, upper);
    let (mut flo, fhi) = (h(lo)?, h(hi)?);
    if flo == 0.0 {
        return Ok(0.0);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoT0 { upper });
    }
    while hi - lo > 1e-8 * omega {
        let mid = 0.5 * (lo + hi);
        let fm = h(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslandBounds {
    pub r1: f64,
    pub r2: f64,
    pub t0: Option<f64>,
}

/// `r1`, `r2` from the exact ohmic `T = 0` dispersions and `T0` from the harmonic-number variance.
pub fn ohmic_island(gamma0: f64, cutoff: f64, mass: f64, omega: f64) -> Result<IslandBounds> {
    let (x2, p2) = ohmic_zero_t_dispersions(gamma0, cutoff, mass, omega)?;
    let (r1, r2) = r1_r2(x2, p2, mass, omega);
    let t0 = match find_t0(|t| ohmic_position_variance(t, gamma0, mass, omega), mass, omega, 10.0 * omega) {
        Ok(t) => Some(t),
        Err(Error::NoT0 { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(IslandBounds { r1, r2, t0 })
}

/// Perturbative asymptotic coefficients in the zero- or high-temperature limit.
/// Position coupling is tabulated for `n ∈ {1/2, 1, 3}`; symmetric coupling for any `n`.
pub fn coefficient_limits(
    sd: &SpectralDensity,
    model: CouplingModel,
    omega: f64,
    temperature: f64,
    regime: Regime,
) -> Result<AsymptoticCoefficients> {
    if !(omega > 0.0 && omega < sd.cutoff) {
        return Err(Error::param("system.omega", "must lie in (0, cutoff)"));
    }
    if !(temperature >= 0.0) {
        return Err(Error::param("bath.temperature", "must be >= 0"));
    }
    let (m, g0, l) = (sd.mass, sd.gamma0, sd.cutoff);
    if model == CouplingModel::Symmetric {
        return Ok(AsymptoticCoefficients::Symmetric {
            gamma: 4.0 * g0 * (omega / l).powf(sd.exponent - 1.0),
            d: 2.0 * PI * sd.j(omega) * thermal_factor(omega, temperature),
        });
    }
    let t = temperature;
    let log_ratio = ((l + omega) / (l - omega)).ln();
    let gamma = sd.asymptotic_gamma(omega)?;
    let (d, f) = match (sd.exponent, regime) {
        (n, Regime::ZeroT) if n == 1.0 => {
            let ll = (l / omega).ln();
            (
                m * gamma * omega + 2.0 * m * gamma * gamma / PI * (2.0 * ll - 1.0),
                2.0 * gamma / PI * ll,
            )
        }
        (n, Regime::HighT) if n == 1.0 => (2.0 * m * gamma * t, -2.0 * gamma / (PI * omega) * log_ratio * t),
        (n, Regime::ZeroT) if n == 0.5 => (
            m * gamma * omega,
            gamma * (1.0 - 2.0 / PI * (l / omega).sqrt() * log_ratio),
        ),
        (n, Regime::HighT) if n == 0.5 => (2.0 * m * gamma * t, -2.0 * gamma * t / omega),
        (n, Regime::ZeroT) if n == 3.0 => (
            m * omega * gamma,
            2.0 * g0 / PI + gamma * ((l * l - omega * omega) / (omega * omega)).ln() / PI,
        ),
        (n, Regime::HighT) if n == 3.0 => (2.0 * m * t * gamma, 2.0 * g0 * t / (PI * l)),
        (n, r) => {
            return Err(Error::UnsupportedRegime(format!(
                "no tabulated position-coupling limit for n = {n} in regime {r:?}"
            )))
        }
    };
    if regime == Regime::HighT && t <= 0.0 {
        return Err(Error::UnsupportedRegime("HighT limit requested at T = 0".into()));
    }
    Ok(AsymptoticCoefficients::Position { gamma, d, f })
}

/// One classified `(r, T)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: f64,
    pub temperature: f64,
    pub phase: Phase,
    pub e_mean: f64,
    pub e_amp: f64,
    pub period: f64,
    pub r_crit: f64,
    pub s_crit: f64,
    pub e_c: f64,
}

impl PhasePoint {
    pub fn new(r: f64, temperature: f64, crit: &CriticalParams, w_minus: f64) -> Self {
        let (e_mean, e_amp) = mean_and_amplitude(r, crit.r_crit, crit.s_crit);
        Self {
            r,
            temperature,
            phase: classify(r, crit.r_crit, crit.s_crit),
            e_mean,
            e_amp,
            period: PI / w_minus,
            r_crit: crit.r_crit,
            s_crit: crit.s_crit,
            e_c: crit.e_c,
        }
    }
}
