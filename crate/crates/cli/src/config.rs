//! Pipeline configuration: a TOML file, optionally overridden by
//! `HYPERENT_<SECTION>__<KEY>` environment variables.

use std::path::{Path, PathBuf};

use hyperent::certification::{ConstraintKind, DEFAULT_TOLERANCE};
use hyperent::hom::{CountModel, FringeModelParams, JsaSpec};
use hyperent::source::SourceParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::round_sig;

pub const ENV_PREFIX: &str = "HYPERENT_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub source: SourceParams,
    /// Analytic damped-cosine fringe.
    pub fringe: Option<FringeModelParams>,
    /// Two-bin spectral amplitude evaluated by quadrature.
    pub jsa: Option<JsaSpec>,
    pub scan: ScanConfig,
    #[serde(default)]
    pub spectra: SpectraConfig,
    #[serde(default)]
    pub polarization: PolarizationConfig,
    #[serde(default)]
    pub frequency: FrequencyConfig,
    #[serde(default)]
    pub certification: CertificationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// First delay (ps).
    pub start: f64,
    /// Last delay (ps), included when on the step grid.
    pub stop: f64,
    /// Delay step (ps).
    pub step: f64,
    pub pairs_per_point: u64,
    pub seed: u64,
    #[serde(default)]
    pub count_model: CountModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraConfig {
    /// Population of `|w1 w2>` used to synthesize the mode spectra.
    pub p_omega: f64,
    pub counts_per_mode: u64,
    pub points: usize,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            p_omega: 0.5,
            counts_per_mode: 200_000,
            points: 600,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarizationConfig {
    /// Derive the visibilities from the simulated source state.
    pub simulate: bool,
    pub v_hv: Option<f64>,
    pub v_ad: Option<f64>,
}

impl Default for PolarizationConfig {
    fn default() -> Self {
        Self {
            simulate: true,
            v_hv: None,
            v_ad: None,
        }
    }
}

/// Which number enters the certificate as `F_w`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyBound {
    /// Fidelity of the restricted state built from the fit.
    #[default]
    Fitted,
    /// `F_w >= V_raw` from the raw scan visibility.
    RawVisibility,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    #[serde(default)]
    pub bound: FrequencyBound,
    /// Measured raw visibility replacing the one computed from the scan.
    pub raw_visibility: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificationConfig {
    pub tolerance: f64,
    pub mode: ConstraintKind,
}

impl Default for CertificationConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            mode: ConstraintKind::Equal,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

fn in_unit(name: &str, v: f64) -> CliResult<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(CliError::Usage(format!(
            "config: {name} = {v} outside [0, 1]"
        )));
    }
    Ok(())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}", path.display()), e))?;
        let overrides = env_overrides();
        Self::parse(&text, &overrides)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Parses `text` and applies `(dotted key path, raw value)` overrides.
    pub fn parse(text: &str, overrides: &[(Vec<String>, String)]) -> Result<Self, String> {
        let cfg: Self = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| e.to_string())?
        } else {
            let mut table: toml::Table =
                text.parse().map_err(|e: toml::de::Error| e.to_string())?;
            for (keys, raw) in overrides {
                set_path(&mut table, keys, parse_value(raw))?;
            }
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| e.to_string())?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        match (&self.fringe, &self.jsa) {
            (Some(_), Some(_)) => {
                return Err("give exactly one of [fringe] and [jsa], not both".into())
            }
            (None, None) => {
                return Err("missing fringe description: add a [fringe] or [jsa] table".into())
            }
            (Some(f), None) => f.validate().map_err(|e| format!("fringe: {e}"))?,
            (None, Some(_)) => {}
        }
        self.source.validate().map_err(|e| format!("source: {e}"))?;
        let s = &self.scan;
        if !(s.step > 0.0) || !s.step.is_finite() {
            return Err(format!("scan.step = {} must be positive", s.step));
        }
        if !(s.start < s.stop) || !s.start.is_finite() || !s.stop.is_finite() {
            return Err(format!(
                "scan.start = {} must be below scan.stop = {}",
                s.start, s.stop
            ));
        }
        if s.step < 1e-6 * s.start.abs().max(s.stop.abs()) {
            return Err("scan.step is too small to resolve at 9 significant digits".into());
        }
        if s.pairs_per_point == 0 {
            return Err("scan.pairs_per_point must be positive".into());
        }
        let n = self.delays().len();
        if !(2..=1_000_000).contains(&n) {
            return Err(format!("scan holds {n} delays, expected 2 to 1000000"));
        }
        in_unit("spectra.p_omega", self.spectra.p_omega).map_err(|e| e.to_string())?;
        if self.spectra.points < 16 || self.spectra.counts_per_mode == 0 {
            return Err("spectra needs at least 16 points and a positive count budget".into());
        }
        let pol = &self.polarization;
        match (pol.simulate, pol.v_hv, pol.v_ad) {
            (true, None, None) => {}
            (true, _, _) => {
                return Err("polarization: set simulate = false to give v_hv and v_ad".into());
            }
            (false, Some(hv), Some(ad)) => {
                in_unit("polarization.v_hv", hv).map_err(|e| e.to_string())?;
                in_unit("polarization.v_ad", ad).map_err(|e| e.to_string())?;
            }
            (false, _, _) => {
                return Err("polarization: simulate = false needs v_hv and v_ad".into())
            }
        }
        if let Some(v) = self.frequency.raw_visibility {
            in_unit("frequency.raw_visibility", v).map_err(|e| e.to_string())?;
        }
        let tol = self.certification.tolerance;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(format!(
                "certification.tolerance = {tol} must lie in (0, 1)"
            ));
        }
        Ok(())
    }

    /// Scan delays `start + k step` up to `stop`, rounded to 9 significant
    /// digits.
    pub fn delays(&self) -> Vec<f64> {
        let s = &self.scan;
        let n = ((s.stop - s.start) / s.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|k| round_sig(s.start + k as f64 * s.step))
            .collect()
    }
}

/// `HYPERENT_SCAN__SEED=7` becomes `(["scan", "seed"], "7")`.
pub fn env_overrides() -> Vec<(Vec<String>, String)> {
    let mut out: Vec<(Vec<String>, String)> = std::env::vars()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            let keys = rest.split("__").map(str::to_ascii_lowercase).collect();
            Some((keys, v))
        })
        .collect();
    out.sort();
    out
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, keys: &[String], value: toml::Value) -> Result<(), String> {
    let (last, parents) = keys.split_last().ok_or("empty override key")?;
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| format!("override {}: `{k}` is not a table", keys.join(".")))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[fringe]
visibility = 0.943
detuning = 10.995574287564276
phase = 3.1346507
coherence_time = 3.8

[scan]
start = -3.0
stop = 3.0
step = 0.015
pairs_per_point = 10000
seed = 42
"#;

    #[test]
    fn minimal_config() {
        let cfg = PipelineConfig::parse(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.delays().len(), 401);
        assert_eq!(cfg.delays()[200], 0.0);
        assert_eq!(cfg.delays()[400], 3.0);
        assert!(cfg.polarization.simulate);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("seed = 42", "seed = 42\npairs = 3");
        let err = PipelineConfig::parse(&text, &[]).unwrap_err();
        assert!(err.contains("pairs"), "{err}");
    }

    #[test]
    fn missing_scan_named() {
        let text = MINIMAL.split("[scan]").next().unwrap();
        let err = PipelineConfig::parse(text, &[]).unwrap_err();
        assert!(err.contains("scan"), "{err}");
    }

    #[test]
    fn overrides_apply_typed_values() {
        let o = vec![
            (
                vec!["scan".to_string(), "seed".to_string()],
                "7".to_string(),
            ),
            (
                vec!["output".to_string(), "directory".to_string()],
                "elsewhere".to_string(),
            ),
        ];
        let cfg = PipelineConfig::parse(MINIMAL, &o).unwrap();
        assert_eq!(cfg.scan.seed, 7);
        assert_eq!(cfg.output.directory, PathBuf::from("elsewhere"));
        let bad = vec![(vec!["scan".to_string(), "sed".to_string()], "7".to_string())];
        assert!(PipelineConfig::parse(MINIMAL, &bad).is_err());
    }

    #[test]
    fn inconsistent_blocks() {
        let text = MINIMAL.replace("[scan]", "[jsa]\ndetuning = 11.0\nbin_bandwidth = 1.4\nshape = \"sinc\"\nsymmetry = \"antisymmetric\"\ncorrelation = { kind = \"product\" }\n\n[scan]");
        assert!(PipelineConfig::parse(&text, &[])
            .unwrap_err()
            .contains("exactly one"));
        let text = MINIMAL.replace("step = 0.015", "step = -0.015");
        assert!(PipelineConfig::parse(&text, &[]).is_err());
        let text = format!("{MINIMAL}\n[polarization]\nsimulate = false\nv_hv = 0.993\n");
        assert!(PipelineConfig::parse(&text, &[]).is_err());
    }
}
