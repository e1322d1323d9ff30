//! Physical setup of the mask, source and screen.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact in SI).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Which wave the forward model propagates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Matter wave: truncated opening plus the dispersion-force phase.
    Matter,
    /// Scalar electromagnetic wave: plain indicator aperture.
    Em,
}

impl Mode {
    pub(crate) fn code(self) -> u32 {
        match self {
            Mode::Matter => 0,
            Mode::Em => 1,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Mode::Matter),
            1 => Some(Mode::Em),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Matter => "matter",
            Mode::Em => "em",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "matter" => Ok(Mode::Matter),
            "em" => Ok(Mode::Em),
            other => Err(Error::config(format!(
                "mode: expected `matter` or `em`, got `{other}`"
            ))),
        }
    }
}

/// Geometry and material parameters of a 1-D mask experiment. All values SI.
///
/// The wavenumber is always derived from `wavelength`; it is never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    /// de Broglie wavelength, m.
    pub wavelength: f64,
    /// Source to mask distance, m.
    pub source_distance: f64,
    /// Mask to screen distance, m.
    pub screen_distance: f64,
    /// Membrane thickness along the beam, m.
    pub membrane_thickness: f64,
    /// Atom-surface dispersion coefficient, J·m³.
    pub c3_coefficient: f64,
    /// Particle mass, kg.
    pub particle_mass: f64,
    /// Edge reduction of every opening on each side, m.
    pub width_reduction: f64,
    /// Width of one mask section, m.
    pub section_width: f64,
    pub n_sections: usize,
    /// Source amplitude; carried for completeness, patterns are peak-normalized.
    pub amplitude: f64,
}

impl GeometryConfig {
    /// Metastable helium through a 5 nm SiN membrane: λ = 0.1 nm, L₁ = 1 m,
    /// L₂ = 300 µm, 50 sections of 4 nm, ΔR = 1 nm.
    ///
    /// The dispersion coefficient and particle mass have no built-in value and
    /// must be supplied.
    pub fn helium_sin_membrane(c3_coefficient: f64, particle_mass: f64) -> Self {
        GeometryConfig {
            wavelength: 0.1e-9,
            source_distance: 1.0,
            screen_distance: 300e-6,
            membrane_thickness: 5e-9,
            c3_coefficient,
            particle_mass,
            width_reduction: 1e-9,
            section_width: 4e-9,
            n_sections: 50,
            amplitude: 1.0,
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Total extent of the mask, `n_sections · section_width`.
    pub fn mask_extent(&self) -> f64 {
        self.n_sections as f64 * self.section_width
    }

    /// Fresnel number `a² / (λ L₂)` with `a` the half-extent of the mask.
    pub fn fresnel_number(&self) -> f64 {
        let half = 0.5 * self.mask_extent();
        half * half / (self.wavelength * self.screen_distance)
    }

    /// Spatial frequency `k₀ r / L₂` of the Fourier kernel at screen position `r`.
    pub fn kernel_frequency(&self, r: f64) -> f64 {
        self.wavenumber() * r / self.screen_distance
    }

    /// Strength `K` of the dispersion phase, `φ(x) = -K / 16 · (1/A³ + 1/B³)`
    /// with `A, B` the distances to the two walls.
    pub(crate) fn phase_strength(&self) -> f64 {
        12.0 * self.c3_coefficient * self.particle_mass * self.wavelength * self.membrane_thickness
            / (HBAR * HBAR * PI)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("source_distance", self.source_distance),
            ("screen_distance", self.screen_distance),
            ("membrane_thickness", self.membrane_thickness),
            ("particle_mass", self.particle_mass),
            ("section_width", self.section_width),
            ("amplitude", self.amplitude),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("c3_coefficient", self.c3_coefficient),
            ("width_reduction", self.width_reduction),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if self.n_sections == 0 {
            return Err(Error::config("n_sections must be at least 1"));
        }
        let nf = self.fresnel_number();
        if nf >= 1.0 {
            return Err(Error::config(format!(
                "Fresnel number {nf:.4} >= 1 for a {:.1} nm mask: far-field model not valid",
                self.mask_extent() * 1e9
            )));
        }
        Ok(())
    }

    /// Canonical little-endian serialization of all fields, used for fingerprints
    /// and file headers.
    pub(crate) fn write_canonical(&self, out: &mut Vec<u8>) {
        for v in [
            self.wavelength,
            self.source_distance,
            self.screen_distance,
            self.membrane_thickness,
            self.c3_coefficient,
            self.particle_mass,
            self.width_reduction,
            self.section_width,
            self.amplitude,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.n_sections as u32).to_le_bytes());
    }
}
