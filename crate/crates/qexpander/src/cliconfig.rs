//! Flat `key = value` run configuration, presets, and output emission.
//!
//! The format is UTF-8 text, one `key = value` per line, SI units, `#`
//! comments. Unknown keys are errors. A `preset` key loads a named parameter
//! set; later keys override it. Frequencies, bandwidths and detunings are
//! given in Hz and converted to angular rates internally.

use crate::astro::{EosFit, PopulationModel, ResponseModel, SnrMode};
use crate::detector::{db_to_nepers, ConfigError, DetectorConfig};
use crate::fullmodel::{FilterCavity, FilterPlacement, ReadoutConfig};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TwoMode,
    Exact,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridSpec {
    pub f_min: f64,
    pub f_max: f64,
    pub n: usize,
    pub kind: GridKind,
}

impl GridSpec {
    pub fn frequencies(&self) -> Vec<f64> {
        match self.kind {
            GridKind::Log => crate::spectrum::log_grid(self.f_min, self.f_max, self.n),
            GridKind::Linear => crate::spectrum::linear_grid(self.f_min, self.f_max, self.n),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub detector: DetectorConfig,
    pub filters: Vec<FilterCavity>,
    pub model: ModelKind,
    pub grid: GridSpec,
    pub format: OutputFormat,
    pub seed: Option<u64>,
    pub asd: bool,
    pub population: PopulationModel,
    pub eos: EosFit,
    pub snr_band: (f64, f64),
    pub sweep_losses: Vec<f64>,
    pub sweep_gains: Vec<f64>,
    preset: Option<String>,
    chi_rad_s: Option<f64>,
    saw_key: bool,
    required: BTreeMap<&'static str, bool>,
}

const REQUIRED_DETECTOR_KEYS: [&str; 7] =
    ["lambda", "p_circ", "l_arm", "l_se", "mass", "t_itm", "t_se"];

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            detector: DetectorConfig::baseline_gwo(),
            filters: Vec::new(),
            model: ModelKind::Full,
            grid: GridSpec {
                f_min: 1.0,
                f_max: 1e4,
                n: 1000,
                kind: GridKind::Log,
            },
            format: OutputFormat::Csv,
            seed: None,
            asd: false,
            population: PopulationModel::default(),
            eos: EosFit::default(),
            snr_band: (1000.0, 4000.0),
            sweep_losses: vec![0.0, 0.005, 0.01, 0.02, 0.03, 0.05],
            sweep_gains: vec![0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99],
            preset: None,
            chi_rad_s: None,
            saw_key: false,
            required: REQUIRED_DETECTOR_KEYS.iter().map(|k| (*k, false)).collect(),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}` as a number")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64, ConfigError> {
    value
        .parse::<u64>()
        .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}` as an integer")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}` as a count")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::new(key, format!("cannot parse `{value}` as a bool"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|t| parse_f64(key, t.trim()))
        .collect()
}

impl RunConfig {
    /// Parse a complete configuration text. Unknown keys, unparsable or
    /// out-of-range values are errors naming the key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for raw in text.lines() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(line.to_string(), "expected `key = value`")
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        cfg.finalize()?;
        Ok(cfg)
    }

    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.saw_key = true;
        if let Some(flag) = self.required.get_mut(key) {
            *flag = true;
        }
        let d = &mut self.detector;
        match key {
            "preset" => {
                *d = match value {
                    "baseline_gwo" => DetectorConfig::baseline_gwo(),
                    "adv_ligo" => DetectorConfig::adv_ligo(),
                    _ => {
                        return Err(ConfigError::new(
                            "preset",
                            format!("unknown preset `{value}` (baseline_gwo, adv_ligo)"),
                        ))
                    }
                };
                self.preset = Some(value.to_string());
                for v in self.required.values_mut() {
                    *v = true;
                }
            }
            "lambda" => d.wavelength = parse_f64(key, value)?,
            "p_circ" => d.power_circ = parse_f64(key, value)?,
            "p_arm" => {
                d.power_circ = 2.0 * parse_f64(key, value)?;
                *self.required.get_mut("p_circ").unwrap() = true;
            }
            "l_arm" => d.l_arm = parse_f64(key, value)?,
            "l_se" => d.l_se = parse_f64(key, value)?,
            "mass" => d.mirror_mass = parse_f64(key, value)?,
            "t_itm" => d.t_itm = parse_f64(key, value)?,
            "t_se" => d.t_se = parse_f64(key, value)?,
            "t_end" => d.t_end = parse_f64(key, value)?,
            "loss_se" => d.loss_se = parse_f64(key, value)?,
            "eta" => d.eta = parse_f64(key, value)?,
            "sqz_ext_db" => d.sqz_ext = db_to_nepers(parse_f64(key, value)?),
            "phi_ext" => d.sqz_ext_angle = parse_f64(key, value)?,
            "theta" => d.sqz_int_angle = parse_f64(key, value)?,
            "se_phase_mirror" => d.se_phase_mirror = parse_f64(key, value)?,
            "se_phase_itm" => d.se_phase_itm = parse_f64(key, value)?,
            "delta_arm" => d.delta_arm = 2.0 * PI * parse_f64(key, value)?,
            "zeta" => d.homodyne_angle = parse_f64(key, value)?,
            "chi_over_gamma" => d.chi_over_gamma = parse_f64(key, value)?,
            "chi" => self.chi_rad_s = Some(parse_f64(key, value)?),
            "filters" => {
                self.filters.clear();
                for item in value.split(',') {
                    let parts: Vec<&str> = item.trim().split(':').collect();
                    if parts.len() != 3 {
                        return Err(ConfigError::new(
                            "filters",
                            "expected `placement:gamma_hz:delta_hz`",
                        ));
                    }
                    let placement = match parts[0] {
                        "input" => FilterPlacement::Input,
                        "output" => FilterPlacement::Output,
                        p => {
                            return Err(ConfigError::new(
                                "filters",
                                format!("placement must be input or output, got `{p}`"),
                            ))
                        }
                    };
                    self.filters.push(FilterCavity {
                        bandwidth: 2.0 * PI * parse_f64("filters", parts[1])?,
                        detuning: 2.0 * PI * parse_f64("filters", parts[2])?,
                        placement,
                    });
                }
            }
            "model" => {
                self.model = match value {
                    "twomode" => ModelKind::TwoMode,
                    "exact" => ModelKind::Exact,
                    "full" => ModelKind::Full,
                    _ => {
                        return Err(ConfigError::new(
                            "model",
                            format!("unknown model `{value}` (twomode, exact, full)"),
                        ))
                    }
                }
            }
            "f_min" => self.grid.f_min = parse_f64(key, value)?,
            "f_max" => self.grid.f_max = parse_f64(key, value)?,
            "n_points" => self.grid.n = parse_usize(key, value)?,
            "grid" => {
                self.grid.kind = match value {
                    "log" => GridKind::Log,
                    "linear" => GridKind::Linear,
                    _ => return Err(ConfigError::new("grid", "must be log or linear")),
                }
            }
            "format" => {
                self.format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(ConfigError::new("format", "must be csv or json")),
                }
            }
            "seed" => self.seed = Some(parse_u64(key, value)?),
            "asd" => self.asd = parse_bool(key, value)?,
            "mc_mean_mass" => self.population.mean_mass = parse_f64(key, value)?,
            "mc_mass_sigma" => self.population.mass_sigma = parse_f64(key, value)?,
            "mc_mass_variance" => {
                self.population.mass_sigma = parse_f64(key, value)?.sqrt();
            }
            "mc_max_distance_mpc" => self.population.max_distance_mpc = parse_f64(key, value)?,
            "mc_event_rate" => self.population.event_rate = parse_f64(key, value)?,
            "mc_samples" => self.population.samples_per_realization = parse_usize(key, value)?,
            "mc_realizations" => self.population.realizations = parse_usize(key, value)?,
            "mc_cutoff_mass" => self.population.cutoff_mass = parse_f64(key, value)?,
            "mc_threshold_snr" => self.population.threshold_snr = parse_f64(key, value)?,
            "response" => {
                self.population.response = match value {
                    "quadrupole" => ResponseModel::Quadrupole,
                    "unity" => ResponseModel::Unity,
                    _ => return Err(ConfigError::new("response", "must be quadrupole or unity")),
                }
            }
            "snr_mode" => {
                self.population.snr_mode = match value {
                    "literal" => SnrMode::Literal,
                    "matched_filter" => SnrMode::MatchedFilter,
                    _ => {
                        return Err(ConfigError::new(
                            "snr_mode",
                            "must be literal or matched_filter",
                        ))
                    }
                }
            }
            "snr_f_min" => self.snr_band.0 = parse_f64(key, value)?,
            "snr_f_max" => self.snr_band.1 = parse_f64(key, value)?,
            "eos_q" => self.eos.q_factor = parse_f64(key, value)?,
            "eos_hp" => self.eos.peak_amp = parse_f64(key, value)?,
            "eos_radius_km" => self.eos.radius_km = parse_f64(key, value)?,
            "eos_a2" => self.eos.a2 = parse_f64(key, value)?,
            "eos_a1" => self.eos.a1 = parse_f64(key, value)?,
            "eos_a0" => self.eos.a0 = parse_f64(key, value)?,
            "fp_scale_hz" => self.eos.scale_hz = parse_f64(key, value)?,
            "sweep_losses" => self.sweep_losses = parse_list(key, value)?,
            "sweep_gains" => self.sweep_gains = parse_list(key, value)?,
            _ => {
                return Err(ConfigError::new(
                    key.to_string(),
                    "unknown configuration key",
                ))
            }
        }
        Ok(())
    }

    /// Resolve deferred keys and validate everything.
    pub fn finalize(&mut self) -> Result<(), ConfigError> {
        if !self.saw_key {
            return Err(ConfigError::new(
                "config",
                format!(
                    "empty configuration; set `preset` or all of: {}",
                    REQUIRED_DETECTOR_KEYS.join(", ")
                ),
            ));
        }
        let missing: Vec<&str> = self
            .required
            .iter()
            .filter(|(_, seen)| !**seen)
            .map(|(k, _)| *k)
            .collect();
        if !missing.is_empty() {
            return Err(ConfigError::new(
                "config",
                format!("missing required keys: {}", missing.join(", ")),
            ));
        }
        if let Some(chi) = self.chi_rad_s.take() {
            self.detector.chi_over_gamma = chi / self.detector.gamma_se();
        }
        self.detector.validate()?;
        if !(self.grid.f_min > 0.0 && self.grid.f_max > self.grid.f_min) {
            return Err(ConfigError::new("f_min", "grid must satisfy 0 < f_min < f_max"));
        }
        if self.grid.n < 2 {
            return Err(ConfigError::new("n_points", "need at least 2 grid points"));
        }
        if !(self.snr_band.0 > 0.0 && self.snr_band.1 > self.snr_band.0) {
            return Err(ConfigError::new("snr_f_min", "band must satisfy 0 < f_min < f_max"));
        }
        self.population.validate()?;
        self.eos.validate()?;
        self.readout().validate()?;
        Ok(())
    }

    pub fn readout(&self) -> ReadoutConfig {
        let mut ro = ReadoutConfig::from_detector(&self.detector);
        ro.filters = self.filters.clone();
        ro
    }

    /// Every resolved key-value pair, for self-describing output metadata.
    pub fn resolved_entries(&self) -> BTreeMap<String, String> {
        let d = &self.detector;
        let mut m = BTreeMap::new();
        let mut f = |k: &str, v: f64| {
            m.insert(k.to_string(), format!("{v:.17e}"));
        };
        f("lambda", d.wavelength);
        f("p_circ", d.power_circ);
        f("p_arm", d.power_circ / 2.0);
        f("l_arm", d.l_arm);
        f("l_se", d.l_se);
        f("mass", d.mirror_mass);
        f("t_itm", d.t_itm);
        f("t_se", d.t_se);
        f("t_end", d.t_end);
        f("loss_se", d.loss_se);
        f("eta", d.eta);
        f("sqz_ext_db", d.sqz_ext * 20.0 / f64::ln(10.0));
        f("phi_ext", d.sqz_ext_angle);
        f("theta", d.sqz_int_angle);
        f("se_phase_mirror", d.se_phase_mirror);
        f("se_phase_itm", d.se_phase_itm);
        f("delta_arm", d.delta_arm / (2.0 * PI));
        f("zeta", d.homodyne_angle);
        f("chi_over_gamma", d.chi_over_gamma);
        f("f_min", self.grid.f_min);
        f("f_max", self.grid.f_max);
        f("snr_f_min", self.snr_band.0);
        f("snr_f_max", self.snr_band.1);
        f("mc_mean_mass", self.population.mean_mass);
        f("mc_mass_sigma", self.population.mass_sigma);
        f("mc_max_distance_mpc", self.population.max_distance_mpc);
        f("mc_event_rate", self.population.event_rate);
        f("mc_cutoff_mass", self.population.cutoff_mass);
        f("mc_threshold_snr", self.population.threshold_snr);
        f("eos_q", self.eos.q_factor);
        f("eos_hp", self.eos.peak_amp);
        f("eos_radius_km", self.eos.radius_km);
        f("eos_a2", self.eos.a2);
        f("eos_a1", self.eos.a1);
        f("eos_a0", self.eos.a0);
        f("fp_scale_hz", self.eos.scale_hz);
        m.insert("n_points".into(), self.grid.n.to_string());
        m.insert(
            "grid".into(),
            match self.grid.kind {
                GridKind::Log => "log".into(),
                GridKind::Linear => "linear".into(),
            },
        );
        m.insert(
            "model".into(),
            match self.model {
                ModelKind::TwoMode => "twomode".into(),
                ModelKind::Exact => "exact".into(),
                ModelKind::Full => "full".into(),
            },
        );
        m.insert(
            "format".into(),
            match self.format {
                OutputFormat::Csv => "csv".into(),
                OutputFormat::Json => "json".into(),
            },
        );
        m.insert("asd".into(), self.asd.to_string());
        m.insert(
            "mc_samples".into(),
            self.population.samples_per_realization.to_string(),
        );
        m.insert(
            "mc_realizations".into(),
            self.population.realizations.to_string(),
        );
        m.insert(
            "response".into(),
            match self.population.response {
                ResponseModel::Quadrupole => "quadrupole".into(),
                ResponseModel::Unity => "unity".into(),
            },
        );
        m.insert(
            "snr_mode".into(),
            match self.population.snr_mode {
                SnrMode::Literal => "literal".into(),
                SnrMode::MatchedFilter => "matched_filter".into(),
            },
        );
        if !self.filters.is_empty() {
            let items: Vec<String> = self
                .filters
                .iter()
                .map(|fc| {
                    format!(
                        "{}:{:.17e}:{:.17e}",
                        match fc.placement {
                            FilterPlacement::Input => "input",
                            FilterPlacement::Output => "output",
                        },
                        fc.bandwidth / (2.0 * PI),
                        fc.detuning / (2.0 * PI)
                    )
                })
                .collect();
            m.insert("filters".into(), items.join(","));
        }
        if let Some(p) = &self.preset {
            m.insert("preset".into(), p.clone());
        }
        m.insert(
            "sweep_losses".into(),
            self.sweep_losses
                .iter()
                .map(|v| format!("{v:.17e}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert(
            "sweep_gains".into(),
            self.sweep_gains
                .iter()
                .map(|v| format!("{v:.17e}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        m
    }
}

/// Named columns of a result table.
pub struct ColumnSet {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl ColumnSet {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.names.push(name.into());
        self.columns.push(values);
    }
}

impl Default for ColumnSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Emit a column table as CSV: `# key = value` metadata lines, a header
/// row, then one row per grid point with 17-significant-digit floats.
pub fn emit_csv<W: Write>(
    mut w: W,
    meta: &BTreeMap<String, String>,
    data: &ColumnSet,
) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{}", data.names.join(","))?;
    let rows = data.columns.first().map_or(0, Vec::len);
    for i in 0..rows {
        let row: Vec<String> = data.columns.iter().map(|c| format!("{:.17e}", c[i])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Emit the same table as JSON: `{ "meta": {...}, "data": {name: [...]} }`.
pub fn emit_json<W: Write>(
    mut w: W,
    meta: &BTreeMap<String, String>,
    data: &ColumnSet,
) -> io::Result<()> {
    let mut data_map = serde_json::Map::new();
    for (name, col) in data.names.iter().zip(&data.columns) {
        data_map.insert(
            name.clone(),
            serde_json::Value::Array(
                col.iter()
                    .map(|v| {
                        serde_json::Number::from_f64(*v)
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null)
                    })
                    .collect(),
            ),
        );
    }
    let mut meta_map = serde_json::Map::new();
    for (k, v) in meta {
        meta_map.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    let out = serde_json::json!({ "meta": meta_map, "data": data_map });
    writeln!(w, "{}", serde_json::to_string_pretty(&out)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_loads_table_values() {
        let cfg = RunConfig::parse("preset = baseline_gwo\n").unwrap();
        let d = &cfg.detector;
        assert_eq!(d.wavelength, 1550e-9);
        assert_eq!(d.power_circ, 4e6);
        assert_eq!(d.l_arm, 20e3);
        assert_eq!(d.mirror_mass, 200.0);
        assert_eq!(d.t_itm, 0.07);
        assert_eq!(d.t_se, 0.35);
        assert_eq!(d.t_end, 5e-6);
        assert_eq!(d.loss_se, 1500e-6);
        assert_eq!(d.eta, 0.99);
        assert!(((-2.0 * d.sqz_ext).exp() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn empty_config_lists_required_keys() {
        let err = RunConfig::parse("# only a comment\n").unwrap_err();
        assert!(err.reason.contains("preset"));
        assert!(err.reason.contains("l_arm"));
    }

    #[test]
    fn out_of_range_value_names_key() {
        let err = RunConfig::parse("preset = baseline_gwo\neta = 1.2\n").unwrap_err();
        assert_eq!(err.key, "eta");
    }

    #[test]
    fn unknown_key_is_error() {
        let err = RunConfig::parse("preset = baseline_gwo\nbogus = 1\n").unwrap_err();
        assert_eq!(err.key, "bogus");
    }

    #[test]
    fn overrides_apply_after_preset() {
        let cfg = RunConfig::parse("preset = baseline_gwo\nchi_over_gamma = 0.9\nt_end = 1e-4\n")
            .unwrap();
        assert_eq!(cfg.detector.chi_over_gamma, 0.9);
        assert_eq!(cfg.detector.t_end, 1e-4);
    }

    #[test]
    fn chi_in_rads_converts_to_fraction() {
        let text = "preset = baseline_gwo\nchi = 234212.8578125\n"; // gamma / 2
        let cfg = RunConfig::parse(text).unwrap();
        assert!((cfg.detector.chi_over_gamma - 0.5).abs() < 1e-12);
    }

    #[test]
    fn explicit_parameters_without_preset() {
        let text = "lambda = 1064e-9\np_arm = 420e3\nl_arm = 4e3\nl_se = 56\nmass = 40\nt_itm = 0.014\nt_se = 0.35\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.detector.power_circ, 840e3);
        // missing one required key
        let partial = "lambda = 1064e-9\nl_arm = 4e3\n";
        let err = RunConfig::parse(partial).unwrap_err();
        assert!(err.reason.contains("t_itm"));
    }

    #[test]
    fn filters_parse_and_echo() {
        let cfg = RunConfig::parse("preset = baseline_gwo\nfilters = output:15:15,input:100:50\n")
            .unwrap();
        assert_eq!(cfg.filters.len(), 2);
        assert_eq!(cfg.filters[0].placement, FilterPlacement::Output);
        assert!((cfg.filters[0].bandwidth - 2.0 * PI * 15.0).abs() < 1e-12);
        let entries = cfg.resolved_entries();
        assert!(entries["filters"].starts_with("output:"));
    }

    #[test]
    fn trailing_comments_are_stripped() {
        let cfg = RunConfig::parse("preset = baseline_gwo\nzeta = 1.0 # radians\n").unwrap();
        assert_eq!(cfg.detector.homodyne_angle, 1.0);
    }
}
