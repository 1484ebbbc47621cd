//! One landmark per line: comma-separated physical coordinates, optionally
//! followed by an `odd`/`even` parity column.

use std::path::Path;

use amdreg::evaluation::{LandmarkSet, Parity};
use amdreg::{Error, Result};

use super::read_text;

pub fn parse_landmarks<const D: usize>(text: &str) -> Result<LandmarkSet<D>> {
    let mut points = Vec::new();
    let mut parity = Vec::new();
    let mut labelled: Option<bool> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let label = match fields.last().map(|s| s.to_ascii_lowercase()) {
            Some(s) if s == "odd" => Some(Parity::Odd),
            Some(s) if s == "even" => Some(Parity::Even),
            _ => None,
        };
        if label.is_some() {
            fields.pop();
        }
        if *labelled.get_or_insert(label.is_some()) != label.is_some() {
            return Err(Error::parse(i + 1, "parity column present on some lines only"));
        }
        if fields.len() != D {
            return Err(Error::parse(i + 1, format!("expected {D} coordinates, got {}", fields.len())));
        }
        let mut p = [0.0; D];
        for (k, f) in fields.iter().enumerate() {
            p[k] = f.parse().map_err(|_| Error::parse(i + 1, format!("cannot parse coordinate `{f}`")))?;
        }
        points.push(p);
        parity.extend(label);
    }
    if labelled == Some(true) {
        LandmarkSet::with_parity(points, parity)
    } else {
        Ok(LandmarkSet::new(points))
    }
}

pub fn read_landmarks<const D: usize>(path: &Path) -> Result<LandmarkSet<D>> {
    parse_landmarks(&read_text(path)?)
}
