use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-photon spectrum of one spatial mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum")]
pub struct Spectrum {
    abscissa: Vec<f64>,
    counts: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    abscissa: Vec<f64>,
    counts: Vec<f64>,
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;

    fn try_from(raw: RawSpectrum) -> Result<Self> {
        Spectrum::new(raw.abscissa, raw.counts)
    }
}

fn strictly_monotone(x: &[f64]) -> bool {
    let up = x.windows(2).all(|w| w[1] > w[0]);
    let down = x.windows(2).all(|w| w[1] < w[0]);
    up || down
}

impl Spectrum {
    /// Abscissa (wavelength or frequency) must be finite and strictly
    /// monotone, counts finite and non-negative.
    pub fn new(abscissa: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if abscissa.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: abscissa.len(),
                found: counts.len(),
            });
        }
        if abscissa.is_empty() {
            return Err(Error::InvalidInput("spectrum has no bins".into()));
        }
        if abscissa.iter().any(|x| !x.is_finite()) || !strictly_monotone(&abscissa) {
            return Err(Error::InvalidInput(
                "spectrum abscissa must be finite and strictly monotone".into(),
            ));
        }
        if counts.iter().any(|&n| !(n >= 0.0) || !n.is_finite()) {
            return Err(Error::InvalidInput(
                "spectrum counts must be non-negative".into(),
            ));
        }
        Ok(Self { abscissa, counts })
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Counts with abscissa inside the closed window; `None` if no bin falls
    /// inside.
    pub fn integrate(&self, window: &BinWindow) -> Option<f64> {
        let mut hit = false;
        let mut sum = 0.0;
        for (x, n) in self.abscissa.iter().zip(&self.counts) {
            if window.contains(*x) {
                hit = true;
                sum += n;
            }
        }
        hit.then_some(sum)
    }

    /// Two-column `abscissa,counts` CSV with header; errors carry 1-based line
    /// numbers.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = read_columns(reader, &["abscissa", "counts"])?;
        let (x, n) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
        Self::new(x, n)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn read_columns<R: Read>(reader: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let h = r.headers().map_err(|e| Error::Parse {
        row: 1,
        message: e.to_string(),
    })?;
    if h.len() == 1 && h[0].is_empty() || h.is_empty() {
        return Err(Error::Parse {
            row: 1,
            message: "empty file".into(),
        });
    }
    if h.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header {}", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    row,
                    message: format!("'{f}': {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: 2,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

/// Spectra of spatial modes `a` and `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumHistogram {
    pub mode_a: Spectrum,
    pub mode_b: Spectrum,
}

pub const SPECTRA_HEADER: [&str; 3] = ["abscissa", "counts_a", "counts_b"];

impl SpectrumHistogram {
    /// Both modes sampled on a shared abscissa, columns
    /// `abscissa,counts_a,counts_b`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = read_columns(reader, &SPECTRA_HEADER)?;
        let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        Ok(Self {
            mode_a: Spectrum::new(x.clone(), rows.iter().map(|r| r[1]).collect())?,
            mode_b: Spectrum::new(x, rows.iter().map(|r| r[2]).collect())?,
        })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes the shared-abscissa format; fails if the modes use different
    /// abscissas.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        if self.mode_a.abscissa != self.mode_b.abscissa {
            return Err(Error::InvalidInput(
                "modes must share an abscissa for the combined format".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(SPECTRA_HEADER)?;
        for k in 0..self.mode_a.abscissa.len() {
            w.write_record([
                format!("{:?}", self.mode_a.abscissa[k]),
                format!("{:?}", self.mode_a.counts[k]),
                format!("{:?}", self.mode_b.counts[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Closed abscissa interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinWindow {
    pub lo: f64,
    pub hi: f64,
}

impl BinWindow {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }
}

/// Pair balance `p = I_a(w1) I_b(w2) / (I_a(w1) I_b(w2) + I_a(w2) I_b(w1))`
/// from window-integrated counts.
pub fn balance_from_spectra(spec: &SpectrumHistogram, windows: [BinWindow; 2]) -> Result<f64> {
    let integrate = |s: &Spectrum, w: &BinWindow, name: &str| {
        s.integrate(w).ok_or_else(|| {
            Error::DegenerateInput(format!(
                "window [{}, {}] is empty in mode {name}",
                w.lo, w.hi
            ))
        })
    };
    let [w1, w2] = windows;
    let a1 = integrate(&spec.mode_a, &w1, "a")?;
    let a2 = integrate(&spec.mode_a, &w2, "a")?;
    let b1 = integrate(&spec.mode_b, &w1, "b")?;
    let b2 = integrate(&spec.mode_b, &w2, "b")?;
    let forward = a1 * b2;
    let backward = a2 * b1;
    if forward + backward <= 0.0 {
        return Err(Error::DegenerateInput(
            "no counts pair up across the two windows".into(),
        ));
    }
    Ok(forward / (forward + backward))
}

/// Windows of +/- 2 sigma around the two strongest peaks of the summed
/// spectrum, ordered by abscissa. Peaks are the contiguous regions above 10 %
/// of the maximum; centre and sigma are their count-weighted moments.
pub fn default_windows(spec: &SpectrumHistogram) -> Result<[BinWindow; 2]> {
    let x = spec.mode_a.abscissa();
    let total: Vec<f64> = if spec.mode_b.abscissa() == x {
        x.iter()
            .enumerate()
            .map(|(k, _)| spec.mode_a.counts[k] + spec.mode_b.counts[k])
            .collect()
    } else {
        return Err(Error::InvalidInput(
            "peak search needs both modes on one abscissa".into(),
        ));
    };
    let max = total.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::DegenerateInput("spectra hold no counts".into()));
    }
    let threshold = 0.1 * max;
    let mut regions: Vec<(f64, f64, f64)> = Vec::new();
    let mut k = 0;
    while k < total.len() {
        if total[k] <= threshold {
            k += 1;
            continue;
        }
        let start = k;
        while k < total.len() && total[k] > threshold {
            k += 1;
        }
        let w: f64 = total[start..k].iter().sum();
        let mean = (start..k).map(|j| total[j] * x[j]).sum::<f64>() / w;
        let var = (start..k)
            .map(|j| total[j] * (x[j] - mean).powi(2))
            .sum::<f64>()
            / w;
        let half_step = 0.5
            * if start + 1 < x.len() {
                (x[start + 1] - x[start]).abs()
            } else {
                (x[start] - x[start - 1]).abs()
            };
        regions.push((w, mean, var.sqrt().max(half_step)));
    }
    if regions.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "found {} spectral peak(s), need two",
            regions.len()
        )));
    }
    regions.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut peaks = [regions[0], regions[1]];
    peaks.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(peaks.map(|(_, mean, sigma)| BinWindow::new(mean - 2.0 * sigma, mean + 2.0 * sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_peaks(weights: [f64; 4]) -> SpectrumHistogram {
        let x: Vec<f64> = (0..200).map(|k| 1540.0 + 0.1 * k as f64).collect();
        let g = |x: f64, c: f64| (-(x - c).powi(2) / (2.0 * 0.5f64.powi(2))).exp();
        let mode = |w1: f64, w2: f64| {
            let n = x
                .iter()
                .map(|&v| 1000.0 * (w1 * g(v, 1545.0) + w2 * g(v, 1555.0)))
                .collect();
            Spectrum::new(x.clone(), n).unwrap()
        };
        SpectrumHistogram {
            mode_a: mode(weights[0], weights[1]),
            mode_b: mode(weights[2], weights[3]),
        }
    }

    #[test]
    fn balanced_spectra() {
        let s = two_peaks([1.0, 1.0, 1.0, 1.0]);
        let w = default_windows(&s).unwrap();
        assert!((w[0].lo + w[0].hi - 2.0 * 1545.0).abs() < 1e-6);
        // 4 sigma of the peak, less the part below the 10 % threshold
        let width = w[1].hi - w[1].lo;
        assert!(width > 1.6 && width <= 2.0, "{width}");
        assert!((balance_from_spectra(&s, w).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_balance() {
        let s = two_peaks([1.2, 0.8, 0.9, 1.1]);
        let w = default_windows(&s).unwrap();
        let p = balance_from_spectra(&s, w).unwrap();
        let expected = 1.2 * 1.1 / (1.2 * 1.1 + 0.8 * 0.9);
        assert!((p - expected).abs() < 1e-3, "{p} vs {expected}");
    }

    #[test]
    fn one_sided() {
        let s = two_peaks([1.0, 0.0, 1.0, 1.0]);
        let w = [
            BinWindow::new(1544.0, 1546.0),
            BinWindow::new(1554.0, 1556.0),
        ];
        assert_eq!(balance_from_spectra(&s, w).unwrap(), 1.0);
    }

    #[test]
    fn empty_window() {
        let s = two_peaks([1.0, 1.0, 1.0, 1.0]);
        let w = [
            BinWindow::new(1544.0, 1546.0),
            BinWindow::new(1600.0, 1601.0),
        ];
        assert!(matches!(
            balance_from_spectra(&s, w),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn csv_formats() {
        let s = two_peaks([1.0, 0.5, 0.5, 1.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = SpectrumHistogram::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        let single = "abscissa,counts\n1.0,3\n2.0,4\n";
        let sp = Spectrum::read_csv(single.as_bytes()).unwrap();
        assert_eq!(sp.counts(), &[3.0, 4.0]);
        let bad = "abscissa,counts\n1.0,3\n2.0,-4\n";
        assert!(Spectrum::read_csv(bad.as_bytes()).is_err());
        let unparsable = "abscissa,counts\n1.0,3\n2.0,x\n";
        assert!(matches!(
            Spectrum::read_csv(unparsable.as_bytes()),
            Err(Error::Parse { row: 3, .. })
        ));
    }

    #[test]
    fn monotone_abscissa_required() {
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Spectrum::new(vec![2.0, 1.0], vec![0.0, 0.0]).is_ok());
    }
}
