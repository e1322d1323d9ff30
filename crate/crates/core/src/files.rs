//! Line-oriented text files: intensity patterns and mask strings.
//!
//! Pattern files start with `# pattern normalization=<raw|peak-one>` followed
//! by one `r<TAB>P(r)` line per grid point, both in shortest round-trip
//! scientific notation. Mask files hold one `0`/`1` string per line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DetectorGrid, IntensityPattern, Normalization};
use crate::mask::Mask;

pub fn pattern_to_text(pattern: &IntensityPattern) -> String {
    let norm = match pattern.normalization {
        Normalization::Raw => "raw",
        Normalization::PeakOne => "peak-one",
    };
    let mut out = format!("# pattern normalization={norm}\n");
    for (i, v) in pattern.values.iter().enumerate() {
        out.push_str(&format!("{:e}\t{:e}\n", pattern.grid.position(i), v));
    }
    out
}

pub fn pattern_from_text(text: &str) -> Result<IntensityPattern> {
    let mut normalization = None;
    let mut rs = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("pattern normalization=") {
                normalization = Some(match n.trim() {
                    "raw" => Normalization::Raw,
                    "peak-one" => Normalization::PeakOne,
                    other => return Err(Error::Parse(format!("unknown normalization `{other}`"))),
                });
            }
            continue;
        }
        let mut cols = line.split_whitespace();
        let mut next = |what: &str| -> Result<f64> {
            cols.next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", i + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: bad {what}: {e}", i + 1)))
        };
        rs.push(next("position")?);
        values.push(next("intensity")?);
    }
    let normalization =
        normalization.ok_or_else(|| Error::Parse("missing `# pattern` header line".into()))?;
    let half_extent = *rs
        .last()
        .ok_or_else(|| Error::Parse("pattern file has no samples".into()))?;
    let grid = DetectorGrid::new(half_extent, rs.len())
        .map_err(|e| Error::Parse(format!("pattern positions: {e}")))?;
    if let Some(i) = (0..rs.len()).find(|&i| {
        let want = grid.position(i);
        (rs[i] - want).abs() > 1e-9 * grid.spacing()
    }) {
        return Err(Error::Parse(format!(
            "pattern position {i} is {:e}, not on a uniform symmetric grid",
            rs[i]
        )));
    }
    IntensityPattern::new(grid, values, normalization)
        .map_err(|e| Error::Parse(format!("pattern values: {e}")))
}

pub fn write_pattern(path: impl AsRef<Path>, pattern: &IntensityPattern) -> Result<()> {
    fs::write(path, pattern_to_text(pattern))?;
    Ok(())
}

pub fn read_pattern(path: impl AsRef<Path>) -> Result<IntensityPattern> {
    pattern_from_text(&fs::read_to_string(path)?)
}

/// Reads every non-empty, non-comment line as a mask string.
pub fn read_masks(path: impl AsRef<Path>) -> Result<Vec<Mask>> {
    fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

pub fn masks_to_text<'a>(masks: impl IntoIterator<Item = &'a Mask>) -> String {
    masks.into_iter().map(|m| format!("{m}\n")).collect()
}
