//! Frequency grids and noise-curve containers with CSV interchange.

use crate::detector::ConfigError;
use std::io::{self, BufRead, Write};

/// A real, positive spectral density sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Frequencies (Hz), strictly increasing.
    pub freq_hz: Vec<f64>,
    /// PSD values (1/Hz for strain spectra).
    pub psd: Vec<f64>,
}

/// Logarithmic grid from `f_min` to `f_max` (Hz), inclusive.
pub fn log_grid(f_min: f64, f_max: f64, n: usize) -> Vec<f64> {
    assert!(f_min > 0.0 && f_max > f_min && n >= 2);
    let (lo, hi) = (f_min.ln(), f_max.ln());
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Linear grid from `f_min` to `f_max` (Hz), inclusive.
pub fn linear_grid(f_min: f64, f_max: f64, n: usize) -> Vec<f64> {
    assert!(f_max > f_min && n >= 2);
    (0..n)
        .map(|i| f_min + (f_max - f_min) * i as f64 / (n - 1) as f64)
        .collect()
}

impl Spectrum {
    pub fn new(freq_hz: Vec<f64>, psd: Vec<f64>) -> Result<Self, ConfigError> {
        if freq_hz.len() != psd.len() || freq_hz.len() < 2 {
            return Err(ConfigError::new(
                "spectrum",
                "frequency and PSD columns must have equal length >= 2",
            ));
        }
        if !freq_hz.windows(2).all(|w| w[1] > w[0]) {
            return Err(ConfigError::new("spectrum", "frequencies must be strictly increasing"));
        }
        if !psd.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(ConfigError::new("spectrum", "PSD values must be finite and >= 0"));
        }
        Ok(Self { freq_hz, psd })
    }

    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }

    pub fn covers(&self, f_lo: f64, f_hi: f64) -> bool {
        self.freq_hz.first().is_some_and(|&a| a <= f_lo)
            && self.freq_hz.last().is_some_and(|&b| b >= f_hi)
    }

    /// Linear interpolation of the PSD at `f` (Hz). Panics outside the grid.
    pub fn value_at(&self, f: f64) -> f64 {
        let i = match self
            .freq_hz
            .binary_search_by(|probe| probe.partial_cmp(&f).unwrap())
        {
            Ok(i) => return self.psd[i],
            Err(i) => i,
        };
        assert!(i > 0 && i < self.len(), "frequency {f} outside grid");
        let (f0, f1) = (self.freq_hz[i - 1], self.freq_hz[i]);
        let w = (f - f0) / (f1 - f0);
        self.psd[i - 1] * (1.0 - w) + self.psd[i] * w
    }

    /// Read a two-column `frequency_hz,strain_psd_1perHz` CSV. `#` comment
    /// lines and one optional header row are skipped.
    pub fn from_csv<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut freq = Vec::new();
        let mut psd = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut cols = t.split(',');
            let (a, b) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(f), Ok(v)) => {
                    freq.push(f);
                    psd.push(v);
                }
                _ if freq.is_empty() => continue, // header row
                _ => {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("line {}: cannot parse `{t}`", lineno + 1),
                    ))
                }
            }
        }
        Spectrum::new(freq, psd)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
    }

    pub fn to_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "frequency_hz,strain_psd_1perHz")?;
        for (f, v) in self.freq_hz.iter().zip(&self.psd) {
            writeln!(w, "{f:.17e},{v:.17e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1.0, 1e4, 1000);
        assert_eq!(g.len(), 1000);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[999] - 1e4).abs() / 1e4 < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_roundtrip_preserves_values() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0], vec![1.5e-47, 2.5e-47, 3.5e-47]).unwrap();
        let mut buf = Vec::new();
        s.to_csv(&mut buf).unwrap();
        let back = Spectrum::from_csv(buf.as_slice()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn interpolation_and_cover() {
        let s = Spectrum::new(vec![1.0, 2.0, 4.0], vec![1.0, 3.0, 5.0]).unwrap();
        assert!((s.value_at(1.5) - 2.0).abs() < 1e-14);
        assert_eq!(s.value_at(2.0), 3.0);
        assert!(s.covers(1.0, 4.0));
        assert!(!s.covers(0.5, 4.0));
    }

    #[test]
    fn malformed_rows_rejected() {
        let text = "frequency_hz,strain_psd_1perHz\n1.0,2.0\nbroken,row\n";
        assert!(Spectrum::from_csv(text.as_bytes()).is_err());
    }
}
