use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One delay setting of a fringe scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPoint {
    /// Delay (ps).
    #[serde(rename = "tau_ps")]
    pub tau: f64,
    pub coincidences: u64,
    pub total: u64,
}

impl ScanPoint {
    pub fn new(tau: f64, coincidences: u64, total: u64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidInput(format!("delay {tau} is not finite")));
        }
        Ok(Self {
            tau,
            coincidences,
            total,
        })
    }

    /// `N_c / N_total`
    pub fn ratio(&self) -> f64 {
        self.coincidences as f64 / self.total as f64
    }
}

/// Ordered HOM measurement record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawScan")]
pub struct FringeScan {
    points: Vec<ScanPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    points: Vec<ScanPoint>,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<RawScan> for FringeScan {
    type Error = Error;

    fn try_from(raw: RawScan) -> Result<Self> {
        FringeScan::new(raw.points, raw.seed)
    }
}

#[derive(Deserialize)]
struct CsvRow {
    tau_ps: f64,
    coincidences: u64,
    total: u64,
}

pub const CSV_HEADER: [&str; 3] = ["tau_ps", "coincidences", "total"];

fn check_point(p: &ScanPoint) -> std::result::Result<(), String> {
    if !p.tau.is_finite() {
        return Err(format!("delay {} is not finite", p.tau));
    }
    if p.total == 0 {
        return Err("total must be positive".into());
    }
    if p.coincidences > p.total {
        return Err(format!(
            "coincidences {} exceed total {}",
            p.coincidences, p.total
        ));
    }
    Ok(())
}

impl FringeScan {
    /// Validates `N_c <= N_total`, `N_total > 0` and strictly increasing delays.
    pub fn new(points: Vec<ScanPoint>, seed: Option<u64>) -> Result<Self> {
        for (k, p) in points.iter().enumerate() {
            check_point(p).map_err(|m| Error::InvalidInput(format!("point {k}: {m}")))?;
            if k > 0 && p.tau <= points[k - 1].tau {
                return Err(Error::InvalidInput(format!(
                    "point {k}: delays must be strictly increasing"
                )));
            }
        }
        Ok(Self { points, seed })
    }

    pub fn points(&self) -> &[ScanPoint] {
        &self.points
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn delays(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }

    /// Writes `tau_ps,coincidences,total` rows; delays use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record([
                format!("{:?}", p.tau),
                p.coincidences.to_string(),
                p.total.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the CSV format of [`write_csv`](Self::write_csv). Errors carry
    /// 1-based line numbers, the header being line 1.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = r.headers().map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?;
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(Error::Parse {
                row: 1,
                message: "empty file".into(),
            });
        }
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Parse {
                row: 1,
                message: format!("expected header {}", CSV_HEADER.join(",")),
            });
        }
        let mut points: Vec<ScanPoint> = Vec::new();
        for (k, rec) in r.deserialize::<CsvRow>().enumerate() {
            let row = k + 2;
            let rec = rec.map_err(|e| Error::Parse {
                row,
                message: csv_message(&e),
            })?;
            let p = ScanPoint::new(rec.tau_ps, rec.coincidences, rec.total).map_err(|e| {
                Error::Parse {
                    row,
                    message: e.to_string(),
                }
            })?;
            check_point(&p).map_err(|message| Error::Parse { row, message })?;
            if let Some(prev) = points.last() {
                if p.tau <= prev.tau {
                    return Err(Error::Parse {
                        row,
                        message: "delays must be strictly increasing".into(),
                    });
                }
            }
            points.push(p);
        }
        if points.is_empty() {
            return Err(Error::Parse {
                row: 2,
                message: "no data rows".into(),
            });
        }
        Self::new(points, None)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn csv_message(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan() -> FringeScan {
        let pts = (0..5)
            .map(|k| ScanPoint::new(-1.0 + 0.1 * k as f64, 10 * k, 100).unwrap())
            .collect();
        FringeScan::new(pts, Some(42)).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let s = scan();
        let text = s.to_csv_string().unwrap();
        assert!(text.starts_with("tau_ps,coincidences,total\n"));
        let back = FringeScan::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.points(), s.points());
    }

    #[test]
    fn json_round_trip() {
        let s = scan();
        let back = FringeScan::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_excess_coincidences() {
        assert!(FringeScan::new(vec![ScanPoint::new(0.0, 5, 4).unwrap()], None).is_err());
        let text = "tau_ps,coincidences,total\n0.0,1,2\n0.1,5,4\n";
        match FringeScan::read_csv(text.as_bytes()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unsorted_delays() {
        let text = "tau_ps,coincidences,total\n0.1,1,2\n0.1,1,2\n";
        assert!(matches!(
            FringeScan::read_csv(text.as_bytes()),
            Err(Error::Parse { row: 3, .. })
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "tau_ps,coincidences,total\n0.0,1,2\n0.1,x,2\n";
        match FringeScan::read_csv(text.as_bytes()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_input_is_a_parse_error() {
        assert!(matches!(
            FringeScan::read_csv("".as_bytes()),
            Err(Error::Parse { row: 1, .. })
        ));
        assert!(matches!(
            FringeScan::read_csv("tau_ps,coincidences,total\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn json_validation_applies() {
        let bad = r#"{"points":[{"tau_ps":0.0,"coincidences":3,"total":2}]}"#;
        assert!(FringeScan::from_json(bad).is_err());
    }
}
