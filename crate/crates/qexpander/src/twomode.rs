//! Closed-form two-mode model of the quantum-expanded interferometer.
//!
//! Treats the arm and SE cavities as two coupled harmonic oscillators with
//! coupling frequency omega_s, SE decay rate gamma and internal parametric
//! gain chi. Valid for omega_s well below the arm free spectral range and
//! with radiation pressure neglected (infinitely heavy mirrors).

use crate::detector::{ConfigError, DetectorConfig, C_LIGHT, HBAR};
use num_complex::Complex64;
use serde::Serialize;

/// Rates derived from a detector configuration at a given parametric gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    /// Carrier frequency (rad/s).
    pub omega0: f64,
    /// Sloshing / cavity-coupling frequency (rad/s).
    pub omega_s: f64,
    /// SE coupling rate (rad/s).
    pub gamma: f64,
    /// Signal coupling strength G (per strain).
    pub signal_coupling: f64,
    /// Effective parametric gain (rad/s).
    pub chi: f64,
    /// Detection bandwidth without internal gain: omega_s^2 / gamma (rad/s).
    pub gamma_baseline: f64,
    /// Expanded bandwidth omega_s^2 / (gamma - chi); infinite at threshold.
    pub gamma_q: f64,
    /// Set when chi >= gamma (at or above the parametric threshold).
    pub at_threshold: bool,
}

/// Derive all two-mode rates. `chi` is the parametric gain in rad/s.
pub fn derive_rates(cfg: &DetectorConfig, chi: f64) -> Result<DerivedRates, ConfigError> {
    cfg.validate()?;
    if !(chi >= 0.0) {
        return Err(ConfigError::new("chi", format!("must be >= 0, got {chi}")));
    }
    let omega_s = cfg.omega_s();
    let gamma = cfg.gamma_se();
    let at_threshold = chi >= gamma;
    let gamma_q = if chi < gamma {
        omega_s * omega_s / (gamma - chi)
    } else {
        f64::INFINITY
    };
    Ok(DerivedRates {
        omega0: cfg.omega0(),
        omega_s,
        gamma,
        signal_coupling: cfg.signal_coupling(),
        chi,
        gamma_baseline: omega_s * omega_s / gamma,
        gamma_q,
        at_threshold,
    })
}

/// Input-output coefficients of the two-mode system at sideband `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCoeffs {
    /// Reflection of the readout-quadrature input noise onto the output.
    pub noise: Complex64,
    /// Strain-to-output signal transfer.
    pub signal: Complex64,
    /// Input noise appearing in the SE cavity mode.
    pub se_noise: Complex64,
    /// Input noise appearing in the arm cavity mode.
    pub arm: Complex64,
}

/// Two-mode input-output relations.
///
/// `noise` has unit magnitude for chi = 0 (passive lossless reflection) and
/// becomes (gamma - chi)/(gamma + chi) at omega = omega_s.
pub fn io_twomode(cfg: &DetectorConfig, chi: f64, omega: f64) -> Result<TwoModeCoeffs, ConfigError> {
    let r = derive_rates(cfg, chi)?;
    if omega < 0.0 {
        return Err(ConfigError::new("omega", "must be >= 0"));
    }
    let ws2 = r.omega_s * r.omega_s;
    let detune = omega * omega - ws2;
    let den = Complex64::new((r.gamma + chi) * omega, -detune);
    let noise = Complex64::new((r.gamma - chi) * omega, detune) / den;
    let signal = Complex64::new(0.0, 2.0 * r.signal_coupling * r.gamma.sqrt() * r.omega_s) / den;
    let se_noise = Complex64::new((2.0 * r.gamma).sqrt() * omega, 0.0) / den;
    let den_arm = Complex64::new((r.gamma - chi) * omega, -detune);
    let arm = Complex64::new(0.0, (2.0 * r.gamma).sqrt() * r.omega_s) / den_arm;
    Ok(TwoModeCoeffs {
        noise,
        signal,
        se_noise,
        arm,
    })
}

fn psd_prefactor(cfg: &DetectorConfig) -> f64 {
    HBAR * C_LIGHT / (8.0 * cfg.omega0() * cfg.l_arm * cfg.power_circ)
}

/// Quantum-noise-limited strain PSD (1/Hz) of the two-mode model.
///
/// S_h = hbar c / (8 omega_0 L P_c) * ((Omega^2 - omega_s^2)^2
///       + (gamma - chi)^2 Omega^2) / (gamma omega_s^2)
pub fn strain_psd_twomode(cfg: &DetectorConfig, chi: f64, omega: f64) -> Result<f64, ConfigError> {
    let r = derive_rates(cfg, chi)?;
    if omega < 0.0 {
        return Err(ConfigError::new("omega", "must be >= 0"));
    }
    let ws2 = r.omega_s * r.omega_s;
    let detune = omega * omega - ws2;
    let num = detune * detune + (r.gamma - chi).powi(2) * omega * omega;
    Ok(psd_prefactor(cfg) * num / (r.gamma * ws2))
}

/// Single-pole (Lorentzian) reduction of the two-mode PSD, valid for
/// gamma >> omega_s >> Omega: S_h ~ (gamma_q^2 + Omega^2) (gamma - chi)^2.
///
/// This is the form whose half-power point defines the detection bandwidth
/// gamma_q; the unreduced PSD curves back up near omega_s.
pub fn strain_psd_lorentzian(cfg: &DetectorConfig, chi: f64, omega: f64) -> Result<f64, ConfigError> {
    let r = derive_rates(cfg, chi)?;
    let ws2 = r.omega_s * r.omega_s;
    if r.at_threshold {
        // limit form: (gamma - chi)^2 gamma_q^2 -> omega_s^4
        return Ok(psd_prefactor(cfg) * ws2 / r.gamma);
    }
    let gq = r.gamma_q;
    let num = (gq * gq + omega * omega) * (r.gamma - chi).powi(2);
    Ok(psd_prefactor(cfg) * num / (r.gamma * ws2))
}

/// Quantum Cramer-Rao bound on the strain PSD, from the intracavity field
/// spectrum S_aa = 2 gamma omega_s^2 / ((gamma-chi)^2 Omega^2 + (Omega^2-omega_s^2)^2).
///
/// Coincides with [`strain_psd_twomode`] for all inputs: the two-mode system
/// operates exactly at the bound.
pub fn qcrb_psd(cfg: &DetectorConfig, chi: f64, omega: f64) -> Result<f64, ConfigError> {
    let r = derive_rates(cfg, chi)?;
    if omega < 0.0 {
        return Err(ConfigError::new("omega", "must be >= 0"));
    }
    let ws2 = r.omega_s * r.omega_s;
    let detune = omega * omega - ws2;
    let s_aa = 2.0 * r.gamma * ws2 / ((r.gamma - chi).powi(2) * omega * omega + detune * detune);
    Ok(HBAR * C_LIGHT / (4.0 * cfg.omega0() * cfg.l_arm * cfg.power_circ) / s_aa)
}

/// Numerically locate the half-power point of a low-pass PSD: the frequency
/// where `psd` doubles relative to its zero-frequency limit.
///
/// Expands the bracket geometrically from `guess`, then bisects to a relative
/// width of 1e-12.
pub fn half_power_bandwidth(psd: impl Fn(f64) -> f64, guess: f64) -> f64 {
    let floor = psd(guess * 1e-9);
    let target = 2.0 * floor;
    let mut lo = guess * 1e-9;
    let mut hi = guess;
    let mut tries = 0;
    while psd(hi) < target {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return f64::NAN;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psd(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}
