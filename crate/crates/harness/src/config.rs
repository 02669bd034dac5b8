//! Config-file handling and code resolution.
//!
//! The config file is TOML with one section per concern; command-line
//! flags override file values.

use std::path::Path;

use serde::Deserialize;

use tascl_core::channel::QuantSpec;
use tascl_core::codec::{CodeFile, ConstructionMethod, PolarCode};
use tascl_core::decoders::DecoderQuant;
use tascl_core::latency::Preset;
use tascl_core::{Error, Result};

/// Design SNR used when building a code from a preset's (N, K, r).
pub const PRESET_DESIGN_SNR_DB: f64 = 2.0;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub code: Option<CodeSection>,
    pub quant: Option<QuantSection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Where the code comes from: a preset name, a code file, or explicit
/// construction parameters.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub preset: Option<String>,
    pub path: Option<String>,
    pub n: Option<u32>,
    pub k: Option<usize>,
    pub r: Option<u32>,
    pub design_snr_db: Option<f64>,
    pub method: Option<String>,
}

impl CodeSection {
    pub fn build(&self) -> Result<PolarCode> {
        if let Some(name) = &self.preset {
            return build_preset_code(&Preset::by_name(name)?);
        }
        if let Some(path) = &self.path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
            return CodeFile::from_toml(&text)?.build();
        }
        let (Some(n), Some(k)) = (self.n, self.k) else {
            return Err(Error::InvalidParameter(
                "code needs a preset, a path, or explicit n and k".into(),
            ));
        };
        let method: ConstructionMethod = self
            .method
            .as_deref()
            .unwrap_or("bhattacharyya")
            .parse()?;
        PolarCode::construct(
            n,
            k,
            self.r.unwrap_or(0),
            self.design_snr_db.unwrap_or(PRESET_DESIGN_SNR_DB),
            method,
            None,
        )
    }
}

/// Builds the self-constructed code for a preset's (N, K, r).
pub fn build_preset_code(preset: &Preset) -> Result<PolarCode> {
    PolarCode::construct(
        preset.n_exponent,
        preset.k,
        preset.r,
        PRESET_DESIGN_SNR_DB,
        ConstructionMethod::Bhattacharyya,
        None,
    )
}

/// Fixed-point configuration keys.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantSection {
    #[serde(default = "default_true")]
    pub enabled: bool,
    pub llr_bits: u32,
    pub pm_bits: u32,
    #[serde(default)]
    pub frac_bits: u32,
}

fn default_true() -> bool {
    true
}

impl QuantSection {
    pub fn to_decoder_quant(&self) -> Result<Option<DecoderQuant>> {
        if !self.enabled {
            return Ok(None);
        }
        Ok(Some(DecoderQuant {
            llr: QuantSpec::new(self.llr_bits, self.frac_bits, true)?,
            pm: QuantSpec::new(self.pm_bits, self.frac_bits, true)?,
        }))
    }
}
