//! Exact single-quadrature input-output solution of the two-cavity chain.
//!
//! Valid at any sideband frequency, including free-spectral-range effects:
//! nothing is expanded in Omega tau. Phase quadrature only, no radiation
//! pressure, lossless mirrors. The crystal deamplifies this quadrature by
//! e^{-q} per pass; its conjugate (not tracked here) is amplified, which is
//! where the parametric threshold lives.

use crate::detector::{ConfigError, DetectorConfig, C_LIGHT, HBAR};
use num_complex::Complex64;

/// Parameters of the mirror chain in amplitude (not power) convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    /// ITM amplitude reflectivity / transmissivity (r^2 + t^2 = 1).
    pub r_itm: f64,
    pub t_itm: f64,
    /// SE mirror amplitude reflectivity / transmissivity.
    pub r_se: f64,
    pub t_se: f64,
    /// Single-pass crystal gain (nepers).
    pub gain: f64,
    /// SE cavity tuning per pass (rad).
    pub se_tuning: f64,
    /// Single-trip times (s).
    pub tau_arm: f64,
    pub tau_se: f64,
    /// Carrier wave vector (1/m).
    pub k_p: f64,
    /// Classical intracavity amplitude; only |T/R|^2 ratios are physical,
    /// the default normalization matches the two-mode signal coupling.
    pub amp: f64,
}

impl ChainParams {
    /// Build from power-convention detector parameters at crystal gain `q`.
    pub fn from_detector(cfg: &DetectorConfig, q: f64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let p = Self {
            r_itm: (1.0 - cfg.t_itm).sqrt(),
            t_itm: cfg.t_itm.sqrt(),
            r_se: (1.0 - cfg.t_se).sqrt(),
            t_se: cfg.t_se.sqrt(),
            gain: q,
            se_tuning: std::f64::consts::FRAC_PI_2,
            tau_arm: cfg.tau_arm(),
            tau_se: cfg.tau_se(),
            k_p: cfg.wave_vector(),
            amp: (2.0 * cfg.power_circ / (HBAR * cfg.omega0())).sqrt(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, r, t) in [("itm", self.r_itm, self.t_itm), ("se", self.r_se, self.t_se)] {
            if (r * r + t * t - 1.0).abs() > 1e-12 {
                return Err(ConfigError::new(
                    key,
                    format!("lossless mirror requires r^2 + t^2 = 1, got {}", r * r + t * t),
                ));
            }
        }
        if !(self.tau_arm > 0.0) || !(self.tau_se > 0.0) {
            return Err(ConfigError::new("tau", "trip times must be > 0"));
        }
        Ok(())
    }

    /// Arm cavity length (m).
    pub fn l_arm(&self) -> f64 {
        self.tau_arm * C_LIGHT
    }

    /// True when the amplified (untracked) quadrature oscillates: its
    /// round-trip gain e^{2q} r_se reaches unity.
    pub fn above_threshold(&self) -> bool {
        (2.0 * self.gain).exp() * self.r_se >= 1.0
    }
}

/// Noise and signal transfer functions of the chain at sideband `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactTransfer {
    /// Phase-quadrature noise reflection; unit magnitude for q = 0.
    pub reflection: Complex64,
    /// Displacement-to-output signal transfer (per meter).
    pub signal: Complex64,
    /// Parametric instability flag (global threshold or a near-singular
    /// resolvent at this frequency). Values are still returned.
    pub unstable: bool,
}

/// Exact closed-form transfer functions.
///
/// With A = e^{2 i Omega tau_arm}, P = e^{-q} e^{i phi} e^{i Omega tau_se}
/// and the arm reflection rho = (A - r_i)/(1 - A r_i):
///
///   R_a = (P^2 rho - r_s) / (1 - P^2 r_s rho)
///   T   = 2 i k_p E t_s t_i P e^{i Omega tau_arm} / ((1 - A r_i)(1 - P^2 r_s rho))
///
/// Periodic in Omega with period pi/tau_arm up to the SE propagation phase.
pub fn exact_transfer(p: &ChainParams, omega: f64) -> ExactTransfer {
    let a = Complex64::from_polar(1.0, 2.0 * omega * p.tau_arm);
    let pass = Complex64::from_polar(1.0, p.se_tuning + omega * p.tau_se) * (-p.gain).exp();
    let p2 = pass * pass;
    let one = Complex64::new(1.0, 0.0);
    let denom_arm = one - a * p.r_itm;
    let rho = (a - p.r_itm) / denom_arm;
    let denom_se = one - p2 * p.r_se * rho;
    let reflection = (p2 * rho - p.r_se) / denom_se;
    let drive = Complex64::new(0.0, 2.0 * p.k_p * p.amp);
    let signal = p.t_se * p.t_itm * pass * drive * Complex64::from_polar(1.0, omega * p.tau_arm)
        / (denom_arm * denom_se);
    let unstable = p.above_threshold() || denom_se.norm() < 1e-12;
    ExactTransfer {
        reflection,
        signal,
        unstable,
    }
}

/// Strain-referred quantum noise PSD of the chain (1/Hz), |R_a|^2 / |T_h|^2
/// with the strain convention h = x / L_arm. No long-wavelength (sinc)
/// correction is applied here.
pub fn strain_psd_exact(p: &ChainParams, omega: f64) -> f64 {
    let t = exact_transfer(p, omega);
    let l = p.l_arm();
    t.reflection.norm_sqr() / (t.signal.norm_sqr() * l * l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twomode;
    use approx::assert_relative_eq;

    fn chain(q: f64) -> ChainParams {
        ChainParams::from_detector(&DetectorConfig::baseline_gwo(), q).unwrap()
    }

    #[test]
    fn passive_chain_is_unitary() {
        let p = chain(0.0);
        let mut worst: f64 = 0.0;
        for i in 0..10_000 {
            let om = 1.0 + i as f64 * 30.0;
            let t = exact_transfer(&p, om);
            worst = worst.max((t.reflection.norm() - 1.0).abs());
        }
        assert!(worst < 1e-12, "max |R_a| deviation {worst}");
    }

    #[test]
    fn matches_two_mode_model_in_validity_regime() {
        // Short arm with t_itm << l_se/l_arm and small t_se.
        let mut cfg = DetectorConfig::adv_ligo();
        cfg.t_itm = 2e-4;
        cfg.t_se = 0.02;
        let gamma = cfg.gamma_se();
        let ws = cfg.omega_s();
        for frac in [0.0, 0.5, 0.9] {
            let q = frac * -0.5 * (1.0 - cfg.t_se).sqrt().ln();
            let p = ChainParams::from_detector(&cfg, q).unwrap();
            let chi = frac * gamma;
            let mut worst: f64 = 0.0;
            for i in 1..=60 {
                let om = 0.3 * ws * i as f64 / 60.0;
                let exact = exact_transfer(&p, om).reflection.norm();
                let two = twomode::io_twomode(&cfg, chi, om).unwrap().noise.norm();
                worst = worst.max((exact - two).abs() / two.max(1e-30));
            }
            assert!(worst < 0.02, "frac {frac}: noise coefficient deviation {worst}");
        }
    }

    #[test]
    fn fsr_shift_with_adjusted_se_tuning_is_exact() {
        let mut p = chain(0.08);
        let om = 1.7e4;
        let t0 = exact_transfer(&p, om);
        let fsr = std::f64::consts::PI / p.tau_arm;
        // shift Omega by one arm period and absorb the SE propagation phase
        // into the tuning
        p.se_tuning -= fsr * p.tau_se;
        let t1 = exact_transfer(&p, om + fsr);
        assert!((t0.reflection - t1.reflection).norm() < 1e-12);
        assert!((t0.signal.norm() - t1.signal.norm()).abs() / t0.signal.norm() < 1e-12);
    }

    fn signal_peak(cfg: &DetectorConfig) -> f64 {
        let p = ChainParams::from_detector(cfg, 0.0).unwrap();
        let ws = cfg.omega_s();
        let mut best = (0.0f64, 0.0f64);
        for i in 1..8000 {
            let om = i as f64 * ws * 2.0 / 8000.0;
            let mag = exact_transfer(&p, om).signal.norm();
            if mag > best.1 {
                best = (om, mag);
            }
        }
        best.0
    }

    #[test]
    fn signal_transfer_peaks_near_sloshing_frequency() {
        // A resolved normal mode needs gamma below ~sqrt(2) omega_s; the
        // benchmark couplings are overdamped, so use an underdamped chain.
        let mut valid = DetectorConfig::adv_ligo();
        valid.l_se = 500.0;
        valid.t_se = 0.02;
        valid.t_itm = 3.2e-3;
        let ws = valid.omega_s();
        assert!(valid.gamma_se() < ws, "config not underdamped");
        let peak = signal_peak(&valid);
        assert!((peak - ws).abs() < 0.1 * ws, "peak {peak} vs omega_s {ws}");
    }

    #[test]
    fn strain_psd_matches_two_mode_at_dc() {
        // absolute normalization: S_h(0) agrees with the two-mode closed form
        // up to O(t_se) corrections
        let cfg = DetectorConfig::baseline_gwo();
        let p = chain(0.0);
        let exact = strain_psd_exact(&p, 1.0);
        let two = twomode::strain_psd_twomode(&cfg, 0.0, 1.0).unwrap();
        let correction = (1.0 - cfg.t_se / 4.0).powi(2);
        assert_relative_eq!(exact / two, correction, max_relative = 0.02);
    }

    #[test]
    fn threshold_flag() {
        let mut p = chain(0.0);
        assert!(!p.above_threshold());
        p.gain = -0.5 * p.r_se.ln() + 1e-6;
        assert!(p.above_threshold());
        assert!(exact_transfer(&p, 1e3).unstable);
    }

    #[test]
    fn mirror_consistency_enforced() {
        let mut p = chain(0.0);
        p.r_itm += 1e-6;
        assert!(p.validate().is_err());
    }
}
