//! Pipeline configuration: one flat key-value file (TOML syntax).
//!
//! Unknown keys are a hard error. Values from `--set key=value` overrides are
//! applied on top of the file before validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::GateParams;
use crate::labeling::Thresholds;
use crate::signal::{ConditioningParams, HampelParams};
use crate::sync::XcorrParams;
use crate::{Error, Result};

/// Environment variable naming a config file, used when no path is given explicitly.
pub const CONFIG_ENV: &str = "GLOVEFORCE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    // force conditioning
    pub hampel_half_width: usize,
    pub hampel_k: f64,
    pub mad_floor: f64,
    pub hampel_max_passes: usize,
    pub gaussian_sigma: f64,
    pub baseline_window_s: f64,
    pub baseline_percentile: f64,
    pub rms_window_s: f64,
    /// Fraction of adc_max.
    pub rms_max: f64,
    /// Fraction of adc_max per sample.
    pub baseline_jump_max: f64,
    pub normalize_percentile: f64,
    /// Fraction of adc_max.
    pub scale_floor: f64,
    pub dead_variance: f64,
    pub gm_eps: f64,
    pub dropout_factor: f64,
    pub nominal_rate_hz: f64,

    // contact labeling
    pub c_threshold: f64,
    pub nc_threshold: f64,
    pub min_segment_s: f64,
    pub demote_short_runs: bool,

    // synchronization
    pub sync_residual_max_s: f64,
    pub xcorr_search_s: f64,
    pub xcorr_corr_min: f64,
    pub xcorr_min_overlap_s: f64,

    // pseudolabels
    pub t_min_m: f64,
    pub stride: usize,
    pub min_mask_pixels: usize,
    pub gate_dist_max_m: f64,
    pub gate_n_min: usize,
    pub static_score_eps: f64,
}

impl Default for Config {
    fn default() -> Self {
        let c = ConditioningParams::default();
        let x = XcorrParams::default();
        let g = GateParams::default();
        Self {
            hampel_half_width: c.hampel.half_width,
            hampel_k: c.hampel.k,
            mad_floor: c.hampel.mad_floor,
            hampel_max_passes: c.hampel.max_passes,
            gaussian_sigma: c.gaussian_sigma,
            baseline_window_s: c.baseline_window_s,
            baseline_percentile: c.baseline_percentile,
            rms_window_s: c.rms_window_s,
            rms_max: c.rms_max_frac,
            baseline_jump_max: c.baseline_jump_max_frac,
            normalize_percentile: c.normalize_percentile,
            scale_floor: c.scale_floor_frac,
            dead_variance: c.dead_variance,
            gm_eps: c.gm_eps,
            dropout_factor: c.dropout_factor,
            nominal_rate_hz: 100.0,
            c_threshold: 0.35,
            nc_threshold: 0.15,
            min_segment_s: 0.1,
            demote_short_runs: true,
            sync_residual_max_s: 0.02,
            xcorr_search_s: x.search_s,
            xcorr_corr_min: x.corr_min,
            xcorr_min_overlap_s: x.min_overlap_s,
            t_min_m: 1e-3,
            stride: 2,
            min_mask_pixels: 20,
            gate_dist_max_m: g.dist_max,
            gate_n_min: g.n_min,
            static_score_eps: g.static_eps,
        }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{origin}: {e}")))
}

fn override_value(raw: &str) -> toml::Value {
    // bare words such as `true` or `0.3` parse as TOML; anything else is a string
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text, "config")?)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Config = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path` (or defaults when `None`) and applies `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_table(&text, &p.display().to_string())?
            }
            None => toml::Table::new(),
        };
        for ov in overrides {
            let (k, v) = ov
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{ov}' is not of the form key=value")))?;
            table.insert(k.trim().to_string(), override_value(v.trim()));
        }
        Self::from_table(table)
    }

    /// Resolves the config path: explicit path, then `$GLOVEFORCE_CONFIG`.
    pub fn resolve_path(explicit: Option<&Path>) -> Option<std::path::PathBuf> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(Into::into))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex digest of the canonical serialization; changes iff a parameter changes.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.hampel_half_width < 1 {
            return bad("hampel_half_width must be >= 1");
        }
        if self.hampel_max_passes < 1 {
            return bad("hampel_max_passes must be >= 1");
        }
        if !(self.hampel_k > 0.0) {
            return bad("hampel_k must be > 0");
        }
        if !(self.gaussian_sigma > 0.0) {
            return bad("gaussian_sigma must be > 0");
        }
        if !(self.baseline_percentile > 0.0 && self.baseline_percentile < 1.0) {
            return bad("baseline_percentile must lie in (0, 1)");
        }
        if !(self.normalize_percentile > 0.0 && self.normalize_percentile < 1.0) {
            return bad("normalize_percentile must lie in (0, 1)");
        }
        if !(self.baseline_window_s > 0.0 && self.rms_window_s > 0.0) {
            return bad("window lengths must be positive");
        }
        if !(self.gm_eps > 0.0) {
            return bad("gm_eps must be > 0");
        }
        if !(self.nominal_rate_hz > 0.0) {
            return bad("nominal_rate_hz must be > 0");
        }
        if self.stride < 1 {
            return bad("stride must be >= 1");
        }
        self.thresholds().validate()
    }

    pub fn conditioning(&self) -> ConditioningParams {
        ConditioningParams {
            hampel: HampelParams {
                half_width: self.hampel_half_width,
                k: self.hampel_k,
                mad_floor: self.mad_floor,
                max_passes: self.hampel_max_passes,
            },
            gaussian_sigma: self.gaussian_sigma,
            baseline_window_s: self.baseline_window_s,
            baseline_percentile: self.baseline_percentile,
            rms_window_s: self.rms_window_s,
            rms_max_frac: self.rms_max,
            baseline_jump_max_frac: self.baseline_jump_max,
            normalize_percentile: self.normalize_percentile,
            scale_floor_frac: self.scale_floor,
            dead_variance: self.dead_variance,
            gm_eps: self.gm_eps,
            dropout_factor: self.dropout_factor,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            c_threshold: self.c_threshold,
            nc_threshold: self.nc_threshold,
            min_segment: if self.demote_short_runs { self.min_segment_s } else { 0.0 },
        }
    }

    pub fn xcorr(&self) -> XcorrParams {
        XcorrParams {
            search_s: self.xcorr_search_s,
            corr_min: self.xcorr_corr_min,
            min_overlap_s: self.xcorr_min_overlap_s,
        }
    }

    pub fn gate(&self) -> GateParams {
        GateParams { dist_max: self.gate_dist_max_m, n_min: self.gate_n_min, static_eps: self.static_score_eps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_an_error() {
        let err = Config::from_toml_str("c_treshold = 0.4\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains("c_treshold"));
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml_str("# tuned\nc_threshold = 0.5\nstride = 1\n").unwrap();
        assert_eq!(c.c_threshold, 0.5);
        assert_eq!(c.stride, 1);
        assert_eq!(c.nc_threshold, Config::default().nc_threshold);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let c = Config::load(None, &["nc_threshold=0.2".into(), "demote_short_runs=false".into()]).unwrap();
        assert_eq!(c.nc_threshold, 0.2);
        assert_eq!(c.thresholds().min_segment, 0.0);
        assert!(Config::load(None, &["nc_threshold=0.9".into()]).is_err());
        assert!(Config::load(None, &["bogus=1".into()]).is_err());
        assert!(Config::load(None, &["stride".into()]).is_err());
    }

    #[test]
    fn fingerprint_tracks_every_parameter() {
        let base = Config::default();
        let fp = base.fingerprint();
        assert_eq!(fp, Config::default().fingerprint());
        assert_eq!(fp.len(), 16);
        let mut changed = base.clone();
        changed.gm_eps = 2e-6;
        assert_ne!(changed.fingerprint(), fp);
        let mut changed = base.clone();
        changed.demote_short_runs = false;
        assert_ne!(changed.fingerprint(), fp);
    }

    #[test]
    fn serialization_round_trips() {
        let c = Config::default();
        assert_eq!(Config::from_toml_str(&c.to_toml()).unwrap(), c);
    }
}
