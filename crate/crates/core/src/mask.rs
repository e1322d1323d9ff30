//! Binary section masks and their decomposition into slit openings.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;

/// A binary mask: one entry per section, `true` for open.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    sections: Vec<bool>,
}

impl Mask {
    pub fn new(sections: Vec<bool>) -> Self {
        Mask { sections }
    }

    pub fn closed(n: usize) -> Self {
        Mask {
            sections: vec![false; n],
        }
    }

    pub fn open(n: usize) -> Self {
        Mask {
            sections: vec![true; n],
        }
    }

    /// Builds a mask from 0/1 bytes; any other value is rejected.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .enumerate()
            .map(|(i, &b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Parse(format!(
                    "mask entry {i} is {other}, expected 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Mask::new)
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn sections(&self) -> &[bool] {
        &self.sections
    }

    pub fn sections_mut(&mut self) -> &mut [bool] {
        &mut self.sections
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        self.sections.iter().map(|&s| s as u8)
    }

    pub fn count_open(&self) -> usize {
        self.sections.iter().filter(|&&s| s).count()
    }

    pub fn is_all_closed(&self) -> bool {
        !self.sections.iter().any(|&s| s)
    }

    pub fn reversed(&self) -> Mask {
        Mask::new(self.sections.iter().rev().copied().collect())
    }

    pub fn hamming(&self, other: &Mask) -> usize {
        self.sections
            .iter()
            .zip(&other.sections)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub(crate) fn check_against(&self, geometry: &GeometryConfig) -> Result<()> {
        if self.len() != geometry.n_sections {
            return Err(Error::config(format!(
                "mask has {} sections, geometry expects {}",
                self.len(),
                geometry.n_sections
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.sections {
            f.write_str(if s { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Mask {
    type Err = Error;

    /// Parses a string of `0`/`1` characters; surrounding whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "mask character {i} is {other:?}, expected '0' or '1'"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Mask::new)
    }
}

/// A merged opening of consecutive open sections.
///
/// Positions are kept on the half-section lattice so that centres and widths
/// are computed identically on every code path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitOpening {
    /// Centre relative to the mask centre, m.
    pub center: f64,
    /// Opening width, m.
    pub width: f64,
    /// Number of sections in the opening.
    pub units: usize,
    /// Centre in units of half a section width.
    pub half_steps: i64,
}

impl SlitOpening {
    pub(crate) fn from_run(
        start: usize,
        end_inclusive: usize,
        n: usize,
        section_width: f64,
    ) -> Self {
        let units = end_inclusive + 1 - start;
        let half_steps = (start + end_inclusive + 1) as i64 - n as i64;
        SlitOpening {
            center: half_steps as f64 * section_width * 0.5,
            width: units as f64 * section_width,
            units,
            half_steps,
        }
    }
}

/// Merges maximal runs of open sections into openings, sorted left to right.
///
/// Section `i` spans `[-W/2 + i·w, -W/2 + (i+1)·w]` with `W = n·w`.
pub fn mask_to_openings(mask: &Mask, geometry: &GeometryConfig) -> Result<Vec<SlitOpening>> {
    mask.check_against(geometry)?;
    let n = mask.len();
    let mut openings = Vec::new();
    let mut start = None;
    for (i, &open) in mask.sections().iter().enumerate() {
        match (open, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                openings.push(SlitOpening::from_run(s, i - 1, n, geometry.section_width));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        openings.push(SlitOpening::from_run(s, n - 1, n, geometry.section_width));
    }
    Ok(openings)
}
