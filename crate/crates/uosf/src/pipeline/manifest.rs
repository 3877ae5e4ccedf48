//! Typed run specifications and the JSON run manifest.
//!
//! Every CLI run resolves to one of the spec structs below (defaults,
//! overlaid by an optional key-value config file, overlaid by CLI flags) and
//! writes a manifest capturing the full resolved configuration, the seed,
//! the software version, and a digest of any input file. Re-running from
//! the manifest reproduces the output files byte for byte.

use crate::error::{Error, Result};
use crate::pipeline::kvconfig::KvFile;
use crate::pipeline::{Estimator, PipelineConfig};
use crate::simulate::{MixtureConfig, RhoSchedule};
use crate::spectral::{SpectralConfig, WindowKind};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Parameters of a `spectrogram` run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrogramSpec {
    pub segment_length: usize,
    pub segment_hop: usize,
    pub window: WindowKind,
    pub energy_compensation: bool,
    /// `None` means the full half-spectrum grid k/L.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_bins: Option<Vec<f64>>,
    pub psd_window: usize,
    pub psd_hop: usize,
    pub c: f64,
    pub tau: usize,
    pub estimators: Vec<Estimator>,
    pub shared_blend: bool,
    pub db: bool,
    pub json: bool,
}

impl Default for SpectrogramSpec {
    fn default() -> Self {
        let preset = PipelineConfig::real_data_preset();
        Self {
            segment_length: preset.spectral.segment_length,
            segment_hop: preset.spectral.segment_hop,
            window: preset.spectral.window,
            energy_compensation: false,
            frequency_bins: None,
            psd_window: preset.psd_window,
            psd_hop: preset.psd_hop,
            c: preset.c,
            tau: preset.tau,
            estimators: preset.estimators,
            shared_blend: false,
            db: false,
            json: false,
        }
    }
}

impl SpectrogramSpec {
    pub fn apply_kv(&mut self, kv: &mut KvFile) -> Result<()> {
        if let Some(v) = kv.take_parsed("spectral", "segment_length")? {
            self.segment_length = v;
        }
        if let Some(v) = kv.take_parsed("spectral", "segment_hop")? {
            self.segment_hop = v;
        }
        if let Some(v) = kv.take_str("spectral", "window") {
            self.window = v.parse()?;
        }
        if let Some(v) = kv.take_bool("spectral", "energy_compensation")? {
            self.energy_compensation = v;
        }
        if let Some(v) = kv.take_list("spectral", "frequency_bins")? {
            self.frequency_bins = Some(v);
        }
        if let Some(v) = kv.take_parsed("psd", "r")? {
            self.psd_window = v;
        }
        if let Some(v) = kv.take_parsed("psd", "q")? {
            self.psd_hop = v;
        }
        if let Some(v) = kv.take_parsed("universal", "c")? {
            self.c = v;
        }
        if let Some(v) = kv.take_parsed("universal", "tau")? {
            self.tau = v;
        }
        if let Some(v) = kv.take_str("run", "estimators") {
            self.estimators = crate::pipeline::parse_estimators(&v)?;
        }
        if let Some(v) = kv.take_bool("run", "shared_blend")? {
            self.shared_blend = v;
        }
        if let Some(v) = kv.take_bool("run", "db")? {
            self.db = v;
        }
        if let Some(v) = kv.take_bool("run", "json")? {
            self.json = v;
        }
        Ok(())
    }

    pub fn to_pipeline_config(&self) -> PipelineConfig {
        let frequency_bins = self
            .frequency_bins
            .clone()
            .unwrap_or_else(|| SpectralConfig::full_grid(self.segment_length));
        PipelineConfig {
            spectral: SpectralConfig {
                segment_length: self.segment_length,
                segment_hop: self.segment_hop,
                window: self.window,
                frequency_bins,
                energy_compensation: self.energy_compensation,
            },
            psd_window: self.psd_window,
            psd_hop: self.psd_hop,
            c: self.c,
            tau: self.tau,
            estimators: self.estimators.clone(),
            shared_blend: self.shared_blend,
        }
    }
}

/// Parameters of a `simulate` run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub lambda: f64,
    pub outlier_gain: f64,
    pub r: usize,
    pub iterations: usize,
    pub trials: usize,
    pub rho_start: f64,
    pub rho_step: f64,
    pub rho_period: usize,
    pub c: f64,
    pub tau: usize,
    pub checkpoints: Vec<usize>,
    pub db: bool,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            outlier_gain: 200.0,
            r: 20,
            iterations: 3000,
            trials: 3000,
            rho_start: 0.0,
            rho_step: 0.02,
            rho_period: 500,
            c: 1.0,
            tau: 250,
            checkpoints: crate::simulate::REFERENCE_CHECKPOINTS.to_vec(),
            db: false,
        }
    }
}

impl SimulateSpec {
    pub fn apply_kv(&mut self, kv: &mut KvFile) -> Result<()> {
        macro_rules! grab {
            ($field:ident, $key:literal) => {
                if let Some(v) = kv.take_parsed("simulate", $key)? {
                    self.$field = v;
                }
            };
        }
        grab!(lambda, "lambda");
        grab!(outlier_gain, "outlier_gain");
        grab!(r, "r");
        grab!(iterations, "iterations");
        grab!(trials, "trials");
        grab!(rho_start, "rho_start");
        grab!(rho_step, "rho_step");
        grab!(rho_period, "rho_period");
        grab!(c, "c");
        grab!(tau, "tau");
        if let Some(v) = kv.take_list("simulate", "checkpoints")? {
            self.checkpoints = v;
        }
        if let Some(v) = kv.take_bool("run", "db")? {
            self.db = v;
        }
        Ok(())
    }

    pub fn to_mixture(&self, seed: u64) -> MixtureConfig {
        MixtureConfig {
            lambda: self.lambda,
            outlier_gain: self.outlier_gain,
            rho: RhoSchedule::Staircase {
                start: self.rho_start,
                step: self.rho_step,
                period: self.rho_period,
            },
            r: self.r,
            total_iterations: self.iterations,
            seed,
        }
    }
}

/// Parameters of a `variance-curve` run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceCurveSpec {
    pub r: usize,
    pub db: bool,
}

impl Default for VarianceCurveSpec {
    fn default() -> Self {
        Self { r: 100, db: false }
    }
}

impl VarianceCurveSpec {
    pub fn apply_kv(&mut self, kv: &mut KvFile) -> Result<()> {
        if let Some(v) = kv.take_parsed("curve", "r")? {
            self.r = v;
        }
        if let Some(v) = kv.take_bool("run", "db")? {
            self.db = v;
        }
        Ok(())
    }
}

/// Parameters of an `inject-clicks` run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectClicksSpec {
    /// Explicit onsets; empty means place `count` clicks at random.
    pub onsets_s: Vec<f64>,
    pub count: usize,
    pub duration_samples: usize,
    pub level_db: f64,
    pub min_gap_s: f64,
}

impl Default for InjectClicksSpec {
    fn default() -> Self {
        Self {
            onsets_s: Vec::new(),
            count: 20,
            duration_samples: 1024,
            level_db: 30.0,
            min_gap_s: 1.0,
        }
    }
}

impl InjectClicksSpec {
    pub fn apply_kv(&mut self, kv: &mut KvFile) -> Result<()> {
        if let Some(v) = kv.take_list("clicks", "onsets_s")? {
            self.onsets_s = v;
        }
        if let Some(v) = kv.take_parsed("clicks", "count")? {
            self.count = v;
        }
        if let Some(v) = kv.take_parsed("clicks", "duration_samples")? {
            self.duration_samples = v;
        }
        if let Some(v) = kv.take_parsed("clicks", "level_db")? {
            self.level_db = v;
        }
        if let Some(v) = kv.take_parsed("clicks", "min_gap_s")? {
            self.min_gap_s = v;
        }
        Ok(())
    }
}

/// One resolved run, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum RunSpec {
    Simulate(SimulateSpec),
    Spectrogram(SpectrogramSpec),
    VarianceCurve(VarianceCurveSpec),
    InjectClicks(InjectClicksSpec),
}

impl RunSpec {
    pub fn command(&self) -> &'static str {
        match self {
            RunSpec::Simulate(_) => "simulate",
            RunSpec::Spectrogram(_) => "spectrogram",
            RunSpec::VarianceCurve(_) => "variance-curve",
            RunSpec::InjectClicks(_) => "inject-clicks",
        }
    }
}

/// The JSON run manifest.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub software_version: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(flatten)]
    pub run: RunSpec,
}

impl Manifest {
    pub fn new(run: RunSpec, seed: u64) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            input_path: None,
            input_digest: None,
            run,
        }
    }

    pub fn with_input(mut self, path: &Path, bytes: &[u8]) -> Self {
        self.input_path = Some(path.to_string_lossy().into_owned());
        self.input_digest = Some(sha256_hex(bytes));
        self
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(bytes)
            .map_err(|e| Error::Config(format!("bad manifest: {e}")))?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "manifest schema version {} unsupported (expected {})",
                manifest.schema_version, MANIFEST_SCHEMA_VERSION
            )));
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&bytes)
    }

    /// Verifies that `bytes` matches the recorded input digest.
    pub fn check_input_digest(&self, bytes: &[u8]) -> Result<()> {
        match &self.input_digest {
            None => Ok(()),
            Some(recorded) => {
                let actual = sha256_hex(bytes);
                if &actual == recorded {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "input file changed since the manifest was written \
                         (digest {actual}, manifest says {recorded})"
                    )))
                }
            }
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let manifest = Manifest::new(RunSpec::Simulate(SimulateSpec::default()), 42)
            .with_input(Path::new("in.wav"), b"bytes");
        let json = manifest.to_json();
        let back = Manifest::parse(json.as_bytes()).unwrap();
        assert_eq!(manifest, back);
        assert_eq!(back.run.command(), "simulate");
    }

    #[test]
    fn manifest_rejects_unknown_fields_and_versions() {
        let mut value: serde_json::Value = serde_json::from_str(
            &Manifest::new(RunSpec::VarianceCurve(VarianceCurveSpec::default()), 1).to_json(),
        )
        .unwrap();
        value["surprise"] = serde_json::json!(1);
        assert!(Manifest::parse(value.to_string().as_bytes()).is_err());

        let mut value: serde_json::Value = serde_json::from_str(
            &Manifest::new(RunSpec::VarianceCurve(VarianceCurveSpec::default()), 1).to_json(),
        )
        .unwrap();
        value["schema_version"] = serde_json::json!(99);
        assert!(Manifest::parse(value.to_string().as_bytes()).is_err());
    }

    #[test]
    fn digest_check() {
        let manifest = Manifest::new(RunSpec::VarianceCurve(VarianceCurveSpec::default()), 1)
            .with_input(Path::new("x"), b"abc");
        manifest.check_input_digest(b"abc").unwrap();
        assert!(manifest.check_input_digest(b"abd").is_err());
    }

    #[test]
    fn spectrogram_spec_from_kv() {
        let text = "[spectral]\nsegment_length = 256\nwindow = rectangular\n\n\
                    [psd]\nr = 50\nq = 2\n\n[universal]\nc = 2.5\ntau = 100\n\n\
                    [run]\nestimators = wosa,utlosf\ndb = true\n";
        let mut kv = KvFile::parse(text).unwrap();
        let mut spec = SpectrogramSpec::default();
        spec.apply_kv(&mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(spec.segment_length, 256);
        assert_eq!(spec.window, WindowKind::Rectangular);
        assert_eq!(spec.psd_window, 50);
        assert_eq!(spec.psd_hop, 2);
        assert_eq!(spec.c, 2.5);
        assert_eq!(spec.tau, 100);
        assert_eq!(spec.estimators, vec![Estimator::Wosa, Estimator::Utlosf]);
        assert!(spec.db);
        let config = spec.to_pipeline_config();
        assert_eq!(config.spectral.frequency_bins.len(), 129);
        config.validate().unwrap();
    }

    #[test]
    fn simulate_spec_kv_unknown_key_fails() {
        let mut kv = KvFile::parse("[simulate]\nlambda = 2.0\nwhoops = 3\n").unwrap();
        let mut spec = SimulateSpec::default();
        spec.apply_kv(&mut kv).unwrap();
        assert_eq!(spec.lambda, 2.0);
        assert!(kv.finish().is_err());
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
