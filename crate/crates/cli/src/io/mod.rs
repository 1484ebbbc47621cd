//! File formats: volumes, transforms, configuration, landmarks and traces.

mod config;
mod landmarks;
mod trace;
mod transform_file;
mod volume;

pub use config::{parse_config, read_config, FileConfig};
pub use landmarks::{parse_landmarks, read_landmarks};
pub use trace::trace_csv;
pub use transform_file::{format_transform, parse_transform, read_transform, write_transform};
pub use volume::{read_header, read_volume, write_volume, ElementType, Volume, VolumeData, VolumeHeader};

use amdreg::{Error, Result};

/// Splits `key = value` lines, skipping blanks and `#` comments.
/// Yields 1-based line numbers.
pub fn key_values(text: &str) -> impl Iterator<Item = Result<(usize, &str, &str)>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        Some(match line.split_once('=') {
            Some((k, v)) => Ok((i + 1, k.trim(), v.trim())),
            None => Err(Error::parse(i + 1, format!("expected `key = value`, got `{line}`"))),
        })
    })
}

pub(crate) fn parse_list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::parse(line, format!("{key}: cannot parse `{s}`"))))
        .collect()
}

pub(crate) fn parse_one<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::parse(line, format!("{key}: cannot parse `{v}`")))
}

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
