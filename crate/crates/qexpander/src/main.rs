//! Command-line front end: config ingestion, subcommand dispatch, CSV/JSON
//! emission. All computation lives in the library.

use clap::{Parser, Subcommand};
use qexpander::astro;
use qexpander::budget;
use qexpander::cliconfig::{emit_csv, emit_json, ColumnSet, ModelKind, OutputFormat, RunConfig};
use qexpander::exactcavity::{self, ChainParams};
use qexpander::fullmodel::{self, ModelError};
use qexpander::spectrum::Spectrum;
use qexpander::twomode;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "qexpander", version, about = "Quantum-noise spectra and merger detectability for a quantum-expanded interferometer")]
struct Cli {
    /// Configuration file (flat `key = value`, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Named preset applied before the config file and overrides.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Extra `key=value` overrides, applied in order after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format override.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Random seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: the rayon default).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit amplitude spectral density sqrt(S_h) instead of S_h.
    #[arg(long, global = true)]
    asd: bool,

    /// Internal gain as a fraction of threshold.
    #[arg(long, global = true, value_name = "FRACTION")]
    chi_over_gamma: Option<f64>,

    /// Model selector override (twomode | exact | full).
    #[arg(long, global = true)]
    model: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strain noise PSD over the frequency grid.
    Spectrum,
    /// Quantum Cramer-Rao bound of the two-mode model.
    Qcrb,
    /// Per-vacuum-source noise decomposition (full model).
    Budget,
    /// Detection bandwidth: closed forms and numeric half-power points.
    Bandwidth,
    /// Improvement map over total loss and gain (dB).
    Sweep,
    /// Monte-Carlo post-merger detectability study.
    Montecarlo {
        /// Noise curve CSV (frequency_hz,strain_psd_1perHz); generated from
        /// the configured model when omitted.
        #[arg(long)]
        noise_csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }
    fn numeric(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: msg.into(),
        }
    }
    fn io(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: msg.into(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(c) => CliError::config(c.to_string()),
            other => CliError::numeric(other.to_string()),
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut any = false;
    if let Some(p) = &cli.preset {
        cfg.apply("preset", p).map_err(|e| CliError::config(e.to_string()))?;
        any = true;
    }
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        for raw in text.lines() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("expected `key = value`, got `{line}`")))?;
            cfg.apply(k.trim(), v.trim())
                .map_err(|e| CliError::config(e.to_string()))?;
            any = true;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.apply(k.trim(), v.trim())
            .map_err(|e| CliError::config(e.to_string()))?;
        any = true;
    }
    if let Some(m) = &cli.model {
        cfg.apply("model", m).map_err(|e| CliError::config(e.to_string()))?;
    }
    if let Some(f) = &cli.format {
        cfg.apply("format", f).map_err(|e| CliError::config(e.to_string()))?;
    }
    if let Some(x) = cli.chi_over_gamma {
        cfg.apply("chi_over_gamma", &x.to_string())
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    if let Some(s) = cli.seed {
        cfg.apply("seed", &s.to_string())
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    if cli.asd {
        cfg.apply("asd", "true").map_err(|e| CliError::config(e.to_string()))?;
    }
    if !any {
        return Err(CliError::config(
            "no configuration given; pass --preset, --config or --set",
        ));
    }
    cfg.finalize().map_err(|e| CliError::config(e.to_string()))?;
    Ok(cfg)
}

fn check_finite(columns: &ColumnSet, freq: &[f64]) -> Result<(), CliError> {
    for (name, col) in columns.names.iter().zip(&columns.columns) {
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            let at = freq.get(i).copied().unwrap_or(f64::NAN);
            return Err(CliError::numeric(format!(
                "non-finite value in column `{name}` at frequency {at} Hz"
            )));
        }
    }
    Ok(())
}

fn write_output(
    cfg: &RunConfig,
    out: &Option<PathBuf>,
    meta: BTreeMap<String, String>,
    data: ColumnSet,
) -> Result<(), CliError> {
    let emit = |w: &mut dyn Write| -> io::Result<()> {
        match cfg.format {
            OutputFormat::Csv => emit_csv(w, &meta, &data),
            OutputFormat::Json => emit_json(w, &meta, &data),
        }
    };
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
            emit(&mut f).map_err(|e| CliError::io(e.to_string()))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            emit(&mut lock).map_err(|e| CliError::io(e.to_string()))
        }
    }
}

fn base_meta(cfg: &RunConfig, subcommand: &str) -> BTreeMap<String, String> {
    let mut meta = cfg.resolved_entries();
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("subcommand".into(), subcommand.into());
    if let Some(s) = cfg.seed {
        meta.insert("seed".into(), s.to_string());
    }
    meta
}

fn strain_column(cfg: &RunConfig, freq: &[f64]) -> Result<Vec<f64>, CliError> {
    let d = &cfg.detector;
    match cfg.model {
        ModelKind::TwoMode => {
            let chi = d.chi();
            freq.iter()
                .map(|f| {
                    twomode::strain_psd_twomode(d, chi, 2.0 * PI * f)
                        .map_err(|e| CliError::config(e.to_string()))
                })
                .collect()
        }
        ModelKind::Exact => {
            let q = fullmodel::gain_from_fraction(d, d.chi_over_gamma);
            let chain = ChainParams::from_detector(d, q)
                .map_err(|e| CliError::config(e.to_string()))?;
            Ok(freq
                .iter()
                .map(|f| exactcavity::strain_psd_exact(&chain, 2.0 * PI * f))
                .collect())
        }
        ModelKind::Full => {
            let q = fullmodel::gain_from_fraction(d, d.chi_over_gamma);
            let ro = cfg.readout();
            let spec = fullmodel::strain_spectrum_full(d, &ro, q, freq)?;
            Ok(spec.psd)
        }
    }
}

fn noise_spectrum(cfg: &RunConfig) -> Result<Spectrum, CliError> {
    let freq = cfg.grid.frequencies();
    let psd = strain_column(cfg, &freq)?;
    Spectrum::new(freq, psd).map_err(|e| CliError::numeric(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli)?;
    match &cli.command {
        Command::Spectrum => {
            let freq = cfg.grid.frequencies();
            let mut psd = strain_column(&cfg, &freq)?;
            let name = if cfg.asd {
                for v in &mut psd {
                    *v = v.sqrt();
                }
                "strain_asd_1persqrthz"
            } else {
                "strain_psd_1perHz"
            };
            let mut data = ColumnSet::new();
            data.push("frequency_hz", freq.clone());
            data.push(name, psd);
            check_finite(&data, &freq)?;
            write_output(&cfg, &cli.out, base_meta(&cfg, "spectrum"), data)
        }
        Command::Qcrb => {
            let freq = cfg.grid.frequencies();
            let chi = cfg.detector.chi();
            let psd: Result<Vec<f64>, CliError> = freq
                .iter()
                .map(|f| {
                    twomode::qcrb_psd(&cfg.detector, chi, 2.0 * PI * f)
                        .map_err(|e| CliError::config(e.to_string()))
                })
                .collect();
            let mut psd = psd?;
            let name = if cfg.asd {
                for v in &mut psd {
                    *v = v.sqrt();
                }
                "qcrb_asd_1persqrthz"
            } else {
                "qcrb_psd_1perHz"
            };
            let mut data = ColumnSet::new();
            data.push("frequency_hz", freq.clone());
            data.push(name, psd);
            check_finite(&data, &freq)?;
            write_output(&cfg, &cli.out, base_meta(&cfg, "qcrb"), data)
        }
        Command::Budget => {
            let freq = cfg.grid.frequencies();
            let q = fullmodel::gain_from_fraction(&cfg.detector, cfg.detector.chi_over_gamma);
            let b = budget::decompose(&cfg.detector, &cfg.readout(), q, &freq)?;
            let mut data = ColumnSet::new();
            data.push("frequency_hz", b.freq_hz.clone());
            data.push("total_psd_1perHz", b.total.clone());
            for (port, col) in budget::NoisePort::ALL.iter().zip(&b.contributions) {
                data.push(port.as_str(), col.clone());
            }
            check_finite(&data, &freq)?;
            write_output(&cfg, &cli.out, base_meta(&cfg, "budget"), data)
        }
        Command::Bandwidth => {
            let d = &cfg.detector;
            let chi = d.chi();
            let rates =
                twomode::derive_rates(d, chi).map_err(|e| CliError::config(e.to_string()))?;
            let lorentzian_hp = twomode::half_power_bandwidth(
                |om| twomode::strain_psd_lorentzian(d, chi, om).unwrap_or(f64::NAN),
                rates.gamma_baseline,
            );
            let exact_hp = twomode::half_power_bandwidth(
                |om| twomode::strain_psd_twomode(d, chi, om).unwrap_or(f64::NAN),
                rates.gamma_baseline,
            );
            let two_pi = 2.0 * PI;
            let mut data = ColumnSet::new();
            data.push("gamma_baseline_hz", vec![rates.gamma_baseline / two_pi]);
            data.push("gamma_q_hz", vec![rates.gamma_q / two_pi]);
            data.push("half_power_lorentzian_hz", vec![lorentzian_hp / two_pi]);
            data.push("half_power_exact_hz", vec![exact_hp / two_pi]);
            data.push("omega_s_hz", vec![rates.omega_s / two_pi]);
            data.push("gamma_hz", vec![rates.gamma / two_pi]);
            data.push(
                "at_threshold",
                vec![if rates.at_threshold { 1.0 } else { 0.0 }],
            );
            write_output(&cfg, &cli.out, base_meta(&cfg, "bandwidth"), data)
        }
        Command::Sweep => {
            let sqz_db = cfg.detector.sqz_ext * 20.0 / f64::ln(10.0);
            let map = budget::benefit_map(
                &cfg.detector,
                &cfg.sweep_losses,
                sqz_db,
                &cfg.sweep_gains,
                cfg.snr_band,
            )?;
            let mut loss_col = Vec::new();
            let mut gain_col = Vec::new();
            let mut db_col = Vec::new();
            let mut opt_col = Vec::new();
            for (i, &loss) in map.loss.iter().enumerate() {
                for (j, &g) in map.gain_fraction.iter().enumerate() {
                    loss_col.push(loss);
                    gain_col.push(g);
                    db_col.push(map.improvement_db[i][j]);
                    opt_col.push(map.optimal_gain[i]);
                }
            }
            let mut data = ColumnSet::new();
            data.push("total_loss", loss_col);
            data.push("gain_fraction", gain_col);
            data.push("improvement_db", db_col);
            data.push("optimal_gain_fraction", opt_col);
            write_output(&cfg, &cli.out, base_meta(&cfg, "sweep"), data)
        }
        Command::Montecarlo { noise_csv } => {
            let noise = match noise_csv {
                Some(path) => {
                    let f = fs::File::open(path).map_err(|e| {
                        CliError::io(format!("cannot open {}: {e}", path.display()))
                    })?;
                    Spectrum::from_csv(BufReader::new(f))
                        .map_err(|e| CliError::config(e.to_string()))?
                }
                None => noise_spectrum(&cfg)?,
            };
            // absence of --seed selects a recorded entropy seed
            let seed = cfg.seed.unwrap_or_else(|| {
                use std::time::{SystemTime, UNIX_EPOCH};
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_nanos() as u64)
                    .unwrap_or(0)
            });
            let result = astro::run_study(&cfg.population, &cfg.eos, &noise, cfg.snr_band, seed)
                .map_err(|e| CliError::config(e.to_string()))?;
            let n = result.loudest.len();
            let mut data = ColumnSet::new();
            data.push("realization", (0..n).map(|i| i as f64).collect());
            data.push("loudest_snr", result.loudest.clone());
            data.push(
                "detected",
                result
                    .loudest
                    .iter()
                    .map(|&v| if v >= result.threshold_snr { 1.0 } else { 0.0 })
                    .collect(),
            );
            let mut meta = base_meta(&cfg, "montecarlo");
            meta.insert("seed".into(), seed.to_string());
            meta.insert(
                "detection_fraction".into(),
                format!("{:.17e}", result.detection_fraction),
            );
            meta.insert("excluded_total".into(), result.excluded_total.to_string());
            write_output(&cfg, &cli.out, meta, data)
        }
    }
}
