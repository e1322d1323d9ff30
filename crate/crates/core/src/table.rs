//! Precomputed single-slit amplitudes and the `MWST` file format.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field                                              |
//! |--------|------|----------------------------------------------------|
//! | 0      | 4    | magic `MWST`                                       |
//! | 4      | 4    | version (u32, currently 1)                         |
//! | 8      | 4    | mode (u32: 0 matter, 1 em)                         |
//! | 12     | 72   | wavelength, source_distance, screen_distance,      |
//! |        |      | membrane_thickness, c3_coefficient, particle_mass, |
//! |        |      | width_reduction, section_width, amplitude (f64)    |
//! | 84     | 4    | n_sections (u32)                                   |
//! | 88     | 8    | grid half extent (f64)                             |
//! | 96     | 4    | grid point count (u32)                             |
//! | 100    | 4    | n_widths (u32)                                     |
//! | 104    | 32   | SHA-256 of bytes 8..104                            |
//! | 136    | ...  | rows: n_widths × count × (re f64, im f64)          |
//!
//! Row `w` (0-based) holds the amplitude of a centred slit `w + 1` sections wide.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{GeometryConfig, Mode};
use crate::grid::DetectorGrid;
use crate::physics::single_slit_rows;

pub const TABLE_MAGIC: [u8; 4] = *b"MWST";
pub const TABLE_VERSION: u32 = 1;
const FINGERPRINTED: std::ops::Range<usize> = 8..104;
pub(crate) const TABLE_HEADER_LEN: usize = 136;

pub type Fingerprint = [u8; 32];

/// Canonical bytes of (mode, geometry, grid, n_widths) as laid out in the header.
pub(crate) fn canonical_header(
    geometry: &GeometryConfig,
    grid: DetectorGrid,
    mode: Mode,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(96);
    out.extend_from_slice(&mode.code().to_le_bytes());
    geometry.write_canonical(&mut out);
    out.extend_from_slice(&grid.half_extent().to_le_bytes());
    out.extend_from_slice(&(grid.len() as u32).to_le_bytes());
    out.extend_from_slice(&(geometry.n_sections as u32).to_le_bytes());
    out
}

/// SHA-256 of the canonical header bytes.
pub fn fingerprint(geometry: &GeometryConfig, grid: DetectorGrid, mode: Mode) -> Fingerprint {
    Sha256::digest(canonical_header(geometry, grid, mode)).into()
}

/// Single-slit amplitudes for every admissible opening width on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitTable {
    mode: Mode,
    geometry: GeometryConfig,
    grid: DetectorGrid,
    rows: Vec<Vec<Complex64>>,
    fingerprint: Fingerprint,
}

impl SlitTable {
    /// Computes rows for widths of 1 to `n_sections` sections, in parallel.
    pub fn build(geometry: &GeometryConfig, grid: DetectorGrid, mode: Mode) -> Result<Self> {
        geometry.validate()?;
        let rows = single_slit_rows(geometry.n_sections, grid, geometry, mode)?
            .into_iter()
            .map(|f| f.amplitudes)
            .collect();
        Ok(SlitTable {
            mode,
            geometry: *geometry,
            grid,
            rows,
            fingerprint: fingerprint(geometry, grid, mode),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geometry
    }

    pub fn grid(&self) -> DetectorGrid {
        self.grid
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn n_widths(&self) -> usize {
        self.rows.len()
    }

    /// Amplitudes of a slit `units` sections wide (`1..=n_widths`).
    pub fn row(&self, units: usize) -> &[Complex64] {
        &self.rows[units - 1]
    }

    pub fn matches(&self, geometry: &GeometryConfig, grid: DetectorGrid, mode: Mode) -> bool {
        self.fingerprint == fingerprint(geometry, grid, mode)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TABLE_HEADER_LEN + self.rows.len() * self.grid.len() * 16);
        out.extend_from_slice(&TABLE_MAGIC);
        out.extend_from_slice(&TABLE_VERSION.to_le_bytes());
        out.extend_from_slice(&canonical_header(&self.geometry, self.grid, self.mode));
        out.extend_from_slice(&self.fingerprint);
        for row in &self.rows {
            for c in row {
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = bytes.get(..TABLE_HEADER_LEN).ok_or(Error::Truncated {
            expected: TABLE_HEADER_LEN as u64,
            found: bytes.len() as u64,
        })?;
        let mut r = Reader::new(header);
        let magic = r.array::<4>();
        if magic != TABLE_MAGIC {
            return Err(Error::BadMagic {
                expected: TABLE_MAGIC,
                found: magic,
            });
        }
        let version = r.u32();
        if version != TABLE_VERSION {
            return Err(Error::BadVersion {
                expected: TABLE_VERSION,
                found: version,
            });
        }
        let stored: Fingerprint = header[104..136].try_into().expect("32-byte slice");
        let computed: Fingerprint = Sha256::digest(&header[FINGERPRINTED]).into();
        if stored != computed {
            return Err(Error::CorruptHeader);
        }
        let mode_code = r.u32();
        let mode = Mode::from_code(mode_code)
            .ok_or_else(|| Error::Parse(format!("unknown mode code {mode_code}")))?;
        let geometry = GeometryConfig {
            wavelength: r.f64(),
            source_distance: r.f64(),
            screen_distance: r.f64(),
            membrane_thickness: r.f64(),
            c3_coefficient: r.f64(),
            particle_mass: r.f64(),
            width_reduction: r.f64(),
            section_width: r.f64(),
            amplitude: r.f64(),
            n_sections: r.u32() as usize,
        };
        let n_sections = geometry.n_sections;
        let half_extent = r.f64();
        let count = r.u32() as usize;
        let n_widths = r.u32() as usize;
        if n_widths != n_sections {
            return Err(Error::Parse(format!(
                "table has {n_widths} rows for {n_sections} sections"
            )));
        }
        let grid = DetectorGrid::new(half_extent, count)
            .map_err(|e| Error::Parse(format!("invalid grid in header: {e}")))?;

        let expected = (TABLE_HEADER_LEN + n_widths * count * 16) as u64;
        if bytes.len() as u64 != expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len() as u64,
            });
        }
        let mut body = Reader::new(&bytes[TABLE_HEADER_LEN..]);
        let rows = (0..n_widths)
            .map(|_| {
                (0..count)
                    .map(|_| Complex64::new(body.f64(), body.f64()))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        if rows
            .iter()
            .flatten()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::Parse("table contains non-finite amplitudes".into()));
        }
        Ok(SlitTable {
            mode,
            geometry,
            grid,
            rows,
            fingerprint: stored,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        file.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Loads a table and requires it to have been built for exactly this setup.
    pub fn load_expecting(
        path: impl AsRef<Path>,
        geometry: &GeometryConfig,
        grid: DetectorGrid,
        mode: Mode,
    ) -> Result<Self> {
        let table = Self::load(path)?;
        if !table.matches(geometry, grid, mode) {
            return Err(Error::FingerprintMismatch);
        }
        Ok(table)
    }
}

/// Little-endian cursor over a slice whose length has already been checked.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn array<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.bytes[self.pos..self.pos + N]
            .try_into()
            .expect("length checked by caller");
        self.pos += N;
        out
    }

    pub(crate) fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.array())
    }

    pub(crate) fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.array())
    }

    pub(crate) fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.array())
    }
}
