//! Noise decomposition by vacuum source, loss/gain sweeps and optimal-gain
//! search.

use crate::detector::{db_to_nepers, ConfigError, DetectorConfig};
use crate::fullmodel::{self, ModelError, ReadoutConfig};
use rayon::prelude::*;
use serde::Serialize;

/// Independent vacuum ports entering the readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePort {
    InputVacuum,
    SeInternalLoss1,
    SeInternalLoss2,
    ArmLoss,
    ReadoutLoss,
}

impl NoisePort {
    pub const ALL: [NoisePort; 5] = [
        NoisePort::InputVacuum,
        NoisePort::SeInternalLoss1,
        NoisePort::SeInternalLoss2,
        NoisePort::ArmLoss,
        NoisePort::ReadoutLoss,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NoisePort::InputVacuum => "input_vacuum",
            NoisePort::SeInternalLoss1 => "se_internal_loss_1",
            NoisePort::SeInternalLoss2 => "se_internal_loss_2",
            NoisePort::ArmLoss => "arm_loss",
            NoisePort::ReadoutLoss => "readout_loss",
        }
    }

    /// Index into the per-port array produced by the homodyne assembly,
    /// which orders ports as (input, arm, se1, se2, readout).
    fn homodyne_index(&self) -> usize {
        match self {
            NoisePort::InputVacuum => 0,
            NoisePort::ArmLoss => 1,
            NoisePort::SeInternalLoss1 => 2,
            NoisePort::SeInternalLoss2 => 3,
            NoisePort::ReadoutLoss => 4,
        }
    }
}

/// Strain PSD decomposed over independent vacuum sources.
///
/// Each vacuum enters the readout through its own transfer path (shot and
/// radiation-pressure routes added coherently), so the per-source terms are
/// non-negative and sum to the total exactly.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseBudget {
    pub freq_hz: Vec<f64>,
    pub total: Vec<f64>,
    /// Contributions in [`NoisePort::ALL`] order.
    pub contributions: [Vec<f64>; 5],
}

/// Decompose the strain PSD of the full model over its vacuum sources.
pub fn decompose(
    cfg: &DetectorConfig,
    readout: &ReadoutConfig,
    q: f64,
    freq_hz: &[f64],
) -> Result<NoiseBudget, ModelError> {
    let rows: Result<Vec<[f64; 6]>, ModelError> = freq_hz
        .par_iter()
        .map(|f| {
            let omega = 2.0 * std::f64::consts::PI * f;
            let h = fullmodel::homodyne_psd(cfg, readout, q, omega)?;
            let strain = fullmodel::strain_psd_full(cfg, readout, q, omega)?;
            // the strain normalization is a common positive factor
            let factor = strain / h.s_x;
            let mut row = [0.0; 6];
            row[5] = strain;
            for (i, port) in NoisePort::ALL.iter().enumerate() {
                row[i] = h.per_port[port.homodyne_index()] * factor;
            }
            Ok(row)
        })
        .collect();
    let rows = rows?;
    let mut budget = NoiseBudget {
        freq_hz: freq_hz.to_vec(),
        total: rows.iter().map(|r| r[5]).collect(),
        contributions: std::array::from_fn(|_| Vec::with_capacity(rows.len())),
    };
    for r in &rows {
        for i in 0..5 {
            budget.contributions[i].push(r[i]);
        }
    }
    Ok(budget)
}

/// SNR of a signal embedded in squeezed vacuum (squeeze factor `r`),
/// phase-insensitively pre-amplified by `q` before a detector of efficiency
/// `eta`: SNR = eta e^{2q} / (1 - eta (1 - e^{-2r} e^{2q})).
///
/// Large amplification makes the SNR loss-independent: SNR -> e^{2r}.
pub fn caves_snr(eta: f64, r: f64, q: f64) -> f64 {
    // divide through by e^{2q} so large amplification cannot overflow
    eta / ((1.0 - eta) * (-2.0 * q).exp() + eta * (-2.0 * r).exp())
}

/// Band figure of merit: integral of 1/S_h over `band` (Hz) on `n` linear
/// grid points, trapezoidal rule.
pub fn band_figure(
    cfg: &DetectorConfig,
    readout: &ReadoutConfig,
    fraction: f64,
    band: (f64, f64),
    n: usize,
) -> Result<f64, ModelError> {
    let q = fullmodel::gain_from_fraction(cfg, fraction);
    let grid = crate::spectrum::linear_grid(band.0, band.1, n);
    let inv: Result<Vec<f64>, ModelError> = grid
        .par_iter()
        .map(|f| Ok(1.0 / fullmodel::strain_psd_full(cfg, readout, q, 2.0 * std::f64::consts::PI * f)?))
        .collect();
    let inv = inv?;
    let mut acc = 0.0;
    for i in 1..n {
        acc += 0.5 * (inv[i] + inv[i - 1]) * (grid[i] - grid[i - 1]);
    }
    Ok(acc)
}

/// Result of the optimal-gain search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalGain {
    /// Gain as a fraction of the parametric threshold.
    pub fraction: f64,
    /// Band improvement over zero gain (dB).
    pub improvement_db: f64,
    /// Objective was flat: no meaningful optimum, fraction reported as 0.
    pub flat: bool,
}

const GAIN_MAX: f64 = 0.9999;
/// Optima shallower than this are reported as flat (no meaningful benefit).
const FLAT_IMPROVEMENT_DB: f64 = 0.1;

/// Find the gain fraction maximizing the band-averaged inverse PSD.
///
/// Deterministic: a 33-point coarse grid brackets the optimum, then a
/// golden-section refinement narrows it to 1e-4 of the threshold fraction.
pub fn optimize_gain(
    cfg: &DetectorConfig,
    readout: &ReadoutConfig,
    band: (f64, f64),
) -> Result<OptimalGain, ModelError> {
    if !(band.0 > 0.0 && band.1 > band.0) {
        return Err(ModelError::Config(ConfigError::new(
            "band",
            "must satisfy 0 < f_lo < f_hi",
        )));
    }
    let n_grid = 33;
    let n_freq = 48;
    let figure = |frac: f64| band_figure(cfg, readout, frac, band, n_freq);
    let coarse: Result<Vec<f64>, ModelError> = (0..n_grid)
        .map(|i| figure(GAIN_MAX * i as f64 / (n_grid - 1) as f64))
        .collect();
    let coarse = coarse?;
    let base = coarse[0];
    let (i_best, best) = coarse
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, v)| (i, *v))
        .unwrap();
    let spread = (best - coarse.iter().cloned().fold(f64::INFINITY, f64::min)) / best;
    if spread < 1e-9 {
        return Ok(OptimalGain {
            fraction: 0.0,
            improvement_db: 0.0,
            flat: true,
        });
    }
    // golden-section refinement around the bracketing neighbours
    let step = GAIN_MAX / (n_grid - 1) as f64;
    let mut lo = (i_best as f64 - 1.0).max(0.0) * step;
    let mut hi = ((i_best + 1) as f64 * step).min(GAIN_MAX);
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = figure(x1)?;
    let mut f2 = figure(x2)?;
    while hi - lo > 1e-4 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = figure(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = figure(x1)?;
        }
    }
    let fraction = 0.5 * (lo + hi);
    let value = figure(fraction)?.max(best);
    let improvement_db = 10.0 * (value / base).log10();
    if improvement_db < FLAT_IMPROVEMENT_DB {
        return Ok(OptimalGain {
            fraction: 0.0,
            improvement_db,
            flat: true,
        });
    }
    Ok(OptimalGain {
        fraction,
        improvement_db,
        flat: false,
    })
}

/// Improvement map of the quantum expander over a loss x gain grid.
#[derive(Debug, Clone, Serialize)]
pub struct BenefitMap {
    /// Total loss values: split evenly between SE-internal and readout loss.
    pub loss: Vec<f64>,
    pub gain_fraction: Vec<f64>,
    /// improvement_db[i][j]: loss i, gain j, relative to zero gain at the
    /// same loss and external squeezing.
    pub improvement_db: Vec<Vec<f64>>,
    /// Per-loss optimal gain fraction.
    pub optimal_gain: Vec<f64>,
}

/// Apply a "total loss" to a configuration: half goes to single-pass SE
/// internal loss, half to the readout.
pub fn apply_total_loss(cfg: &DetectorConfig, total_loss: f64) -> DetectorConfig {
    let mut out = cfg.clone();
    out.loss_se = total_loss / 2.0;
    out.eta = 1.0 - total_loss / 2.0;
    out
}

/// Broadband improvement of the expander versus gain and total loss, at a
/// fixed external squeezing level (dB).
pub fn benefit_map(
    cfg_base: &DetectorConfig,
    losses: &[f64],
    sqz_ext_db: f64,
    gain_fractions: &[f64],
    band: (f64, f64),
) -> Result<BenefitMap, ModelError> {
    if losses.is_empty() || gain_fractions.is_empty() {
        return Err(ModelError::Config(ConfigError::new("grid", "grids must be non-empty")));
    }
    let mut improvement = Vec::with_capacity(losses.len());
    let mut optimal = Vec::with_capacity(losses.len());
    for &loss in losses {
        let cfg = apply_total_loss(cfg_base, loss);
        let mut ro = ReadoutConfig::from_detector(&cfg);
        ro.sqz_ext = db_to_nepers(sqz_ext_db);
        ro.sqz_ext_angle = 0.0;
        let base = band_figure(&cfg, &ro, 0.0, band, 48)?;
        let mut row = Vec::with_capacity(gain_fractions.len());
        for &g in gain_fractions {
            let v = band_figure(&cfg, &ro, g, band, 48)?;
            row.push(10.0 * (v / base).log10());
        }
        improvement.push(row);
        optimal.push(optimize_gain(&cfg, &ro, band)?.fraction);
    }
    Ok(BenefitMap {
        loss: losses.to_vec(),
        gain_fraction: gain_fractions.to_vec(),
        improvement_db: improvement,
        optimal_gain: optimal,
    })
}
