//! Closed-form Fourier spectrum of the EM multi-slit pattern.
//!
//! For the raw EM intensity `P(r) = |Σₙ exp(-i q xₙ) · 2 sin(q dₙ/2)/q|²` with
//! `q = k₀ r / L₂ = β r`, the transform `P(κ) = ∫ P(r) exp(-2πiκr) dr` is a sum of
//! shifted `|κ|` kinks,
//!
//! `P(κ) = -(2π²/β²) Σₙₘ [ |κ - c₁/2π| + |κ - c₂/2π| - |κ - c₃/2π| - |κ - c₄/2π| ]`,
//!
//! with the shifts of [`SpectrumShifts`]. It is piecewise linear and vanishes
//! outside `[min c/2π, max c/2π]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;
use crate::mask::SlitOpening;

/// Angular frequency shifts (m⁻¹) contributed by the slit pair `(n, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumShifts {
    /// `β/2 · (2xₘ - 2xₙ - dₙ + dₘ)`
    pub c1: f64,
    /// `β/2 · (2xₘ - 2xₙ + dₙ - dₘ)`
    pub c2: f64,
    /// `β/2 · (2xₘ - 2xₙ + dₙ + dₘ)`
    pub c3: f64,
    /// `β/2 · (2xₘ - 2xₙ - dₙ - dₘ)`
    pub c4: f64,
}

impl SpectrumShifts {
    pub fn between(n: &SlitOpening, m: &SlitOpening, geometry: &GeometryConfig) -> Self {
        let half_beta = 0.5 * geometry.wavenumber() / geometry.screen_distance;
        let sep = 2.0 * (m.center - n.center);
        SpectrumShifts {
            c1: half_beta * (sep - n.width + m.width),
            c2: half_beta * (sep + n.width - m.width),
            c3: half_beta * (sep + n.width + m.width),
            c4: half_beta * (sep - n.width - m.width),
        }
    }

    /// Shifts with the sign of their `|κ - c/2π|` term.
    fn signed(&self) -> [(f64, f64); 4] {
        [
            (self.c1, 1.0),
            (self.c2, 1.0),
            (self.c3, -1.0),
            (self.c4, -1.0),
        ]
    }
}

fn prefactor(geometry: &GeometryConfig) -> f64 {
    let beta = geometry.wavenumber() / geometry.screen_distance;
    -2.0 * PI * PI / (beta * beta)
}

/// Closed-form `P(κ)` of the unnormalized EM intensity, κ in cycles per metre.
pub fn em_pattern_spectrum(
    openings: &[SlitOpening],
    kappa: f64,
    geometry: &GeometryConfig,
) -> Result<f64> {
    if openings.is_empty() {
        return Err(Error::config("spectrum needs at least one opening"));
    }
    let mut sum = 0.0;
    for n in openings {
        for m in openings {
            for (c, sign) in SpectrumShifts::between(n, m, geometry).signed() {
                sum += sign * (kappa - c / (2.0 * PI)).abs();
            }
        }
    }
    Ok(prefactor(geometry) * sum)
}

/// A slope discontinuity of `P(κ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kink {
    /// Location, cycles per metre.
    pub kappa: f64,
    /// Jump in `dP/dκ` across the kink.
    pub slope_jump: f64,
}

/// All kinks of `P(κ)`, sorted, with coincident shifts merged and cancelled
/// ones dropped.
pub fn spectrum_kinks(openings: &[SlitOpening], geometry: &GeometryConfig) -> Vec<Kink> {
    let pre = prefactor(geometry);
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for n in openings {
        for m in openings {
            for (c, sign) in SpectrumShifts::between(n, m, geometry).signed() {
                raw.push((c / (2.0 * PI), 2.0 * sign * pre));
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = raw
        .iter()
        .fold(0.0f64, |m, (k, _)| m.max(k.abs()))
        .max(f64::MIN_POSITIVE);
    let weight_scale = raw.iter().fold(0.0f64, |m, (_, w)| m.max(w.abs()));
    let mut merged: Vec<Kink> = Vec::new();
    for (kappa, jump) in raw {
        match merged.last_mut() {
            Some(last) if (kappa - last.kappa).abs() <= 1e-9 * scale => last.slope_jump += jump,
            _ => merged.push(Kink {
                kappa,
                slope_jump: jump,
            }),
        }
    }
    merged.retain(|k| k.slope_jump.abs() > 1e-9 * weight_scale);
    merged
}

/// Largest `|κ|` at which `P(κ)` is nonzero.
pub fn spectral_support(openings: &[SlitOpening], geometry: &GeometryConfig) -> f64 {
    spectrum_kinks(openings, geometry)
        .iter()
        .fold(0.0, |m, k| m.max(k.kappa.abs()))
}
