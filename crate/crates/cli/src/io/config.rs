//! Line-oriented `key = value` configuration. Unknown keys are errors.

use std::path::Path;

use amdreg::evaluation::ModelKind;
use amdreg::registration::{LevelOverride, Measure, RegistrationConfig};
use amdreg::stack::Interpolation;
use amdreg::{Error, Result};

use super::{key_values, parse_list, parse_one, read_text};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileConfig {
    pub registration: RegistrationConfig,
    pub model: Option<ModelKind>,
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::parse(line, format!("{key}: expected true or false, got `{v}`"))),
    }
}

fn optional(v: &str) -> Option<&str> {
    (!matches!(v, "none" | "auto")).then_some(v)
}

fn set_overrides(
    cfg: &mut RegistrationConfig,
    n: usize,
    mut set: impl FnMut(&mut LevelOverride, usize),
) {
    if cfg.level_overrides.len() < n {
        cfg.level_overrides.resize(n, LevelOverride::default());
    }
    for (k, o) in cfg.level_overrides.iter_mut().take(n).enumerate() {
        set(o, k);
    }
}

/// Applies `text` on top of the defaults.
pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut out = FileConfig::default();
    let cfg = &mut out.registration;
    for kv in key_values(text) {
        let (line, k, v) = kv?;
        match k {
            "alpha_levels" => cfg.alpha_levels = parse_one(line, k, v)?,
            "d_max" => cfg.d_max = optional(v).map(|v| parse_one(line, k, v)).transpose()?,
            "normalization" => cfg.normalization = optional(v).map(|v| parse_one(line, k, v)).transpose()?,
            "factors" => cfg.factors = parse_list(line, k, v)?,
            "sigmas" => cfg.sigmas = parse_list(line, k, v)?,
            "step_length" => cfg.optimizer.step_length = parse_one(line, k, v)?,
            "relaxation" => cfg.optimizer.relaxation = parse_one(line, k, v)?,
            "max_iterations" => cfg.optimizer.max_iterations = parse_one(line, k, v)?,
            "gradient_tolerance" => cfg.optimizer.gradient_tolerance = parse_one(line, k, v)?,
            "min_step_length" => cfg.optimizer.min_step_length = parse_one(line, k, v)?,
            "level_step_lengths" => {
                let s: Vec<f64> = parse_list(line, k, v)?;
                set_overrides(cfg, s.len(), |o, i| o.step_length = Some(s[i]));
            }
            "level_max_iterations" => {
                let s: Vec<usize> = parse_list(line, k, v)?;
                set_overrides(cfg, s.len(), |o, i| o.max_iterations = Some(s[i]));
            }
            "sampling_fraction" => cfg.sampling_fraction = parse_one(line, k, v)?,
            "interpolation" => {
                cfg.interpolation = match v {
                    "linear" => Interpolation::Linear,
                    "nearest" => Interpolation::Nearest,
                    _ => return Err(Error::parse(line, format!("unknown interpolation `{v}`"))),
                }
            }
            "bidirectional" => cfg.bidirectional = parse_bool(line, k, v)?,
            "measure" => {
                cfg.measure = Measure::parse(v).ok_or_else(|| Error::parse(line, format!("unknown measure `{v}`")))?
            }
            "mi_bins" => cfg.mi_bins = parse_one(line, k, v)?,
            "seed" => cfg.seed = parse_one(line, k, v)?,
            "model" => {
                out.model =
                    Some(ModelKind::parse(v).ok_or_else(|| Error::parse(line, format!("unknown model `{v}`")))?)
            }
            _ => return Err(Error::parse(line, format!("unknown key `{k}`"))),
        }
    }
    out.registration.validate()?;
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<FileConfig> {
    parse_config(&read_text(path)?)
}
