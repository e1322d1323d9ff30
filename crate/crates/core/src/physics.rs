//! Single-slit transmission and far-field amplitudes for matter and EM waves.
//!
//! All fields omit the common prefactor `a₀k₀/(2πi L₁L₂)` and the global phase
//! `exp(ik₀[L₁ + L₂ + r²/(2L₂)])`: a single slit of width `d` centred at the
//! origin has the amplitude `∫ t(x) exp(i q x) dx` with `q = k₀ r / L₂`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GeometryConfig, Mode};
use crate::grid::{DetectorGrid, WaveField};
use crate::quadrature::{graded_panels, GaussLegendre};

/// Relative tolerance of the single-slit quadrature, measured against the
/// effective (transmitting) width of the slit.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

const GL_ORDER: usize = 16;
const INITIAL_PHASE_BUDGET: f64 = 2.0;
const MAX_REFINEMENTS: usize = 4;
const MAX_PANELS: usize = 2_000_000;

/// Half-width of the transmitting part of a slit, `d/2 - ΔR` (may be ≤ 0).
pub fn effective_half_width(width: f64, geometry: &GeometryConfig) -> f64 {
    0.5 * width - geometry.width_reduction
}

/// Dispersion-force phase at position `x` inside a slit of width `width`:
///
/// `φ(x) = -12 C₃ m λ t d (d² + 12x²) / (ħ² π (d + 2x)³ (d - 2x)³)`.
pub fn dispersion_phase(x: f64, width: f64, geometry: &GeometryConfig) -> Result<f64> {
    let limit = effective_half_width(width, geometry);
    if !(x.abs() < limit) {
        return Err(Error::Domain {
            x,
            limit: limit.max(0.0),
        });
    }
    Ok(phase_unchecked(x, width, geometry.phase_strength()))
}

#[inline]
fn phase_unchecked(x: f64, d: f64, strength: f64) -> f64 {
    if strength == 0.0 {
        return 0.0;
    }
    let x = x.abs();
    let plus = d + 2.0 * x;
    let minus = d - 2.0 * x;
    -strength * d * (d * d + 12.0 * x * x) / (plus * plus * plus * minus * minus * minus)
}

/// `|dφ/dx|`, via `φ = -K/16 · (A⁻³ + B⁻³)` with `A = d/2 - x`, `B = d/2 + x`.
fn phase_slope(x: f64, d: f64, strength: f64) -> f64 {
    if strength == 0.0 {
        return 0.0;
    }
    let a = 0.5 * d - x;
    let b = 0.5 * d + x;
    (strength / 16.0 * 3.0 * (a.powi(-4) - b.powi(-4))).abs()
}

/// Matter-wave transmission of a centred slit: `exp(iφ(x))` inside
/// `|x| < d/2 - ΔR`, zero elsewhere. Slits no wider than `2ΔR` transmit nothing.
pub fn matter_transmission(x: f64, width: f64, geometry: &GeometryConfig) -> Complex64 {
    let limit = effective_half_width(width, geometry);
    if limit <= 0.0 || !(x.abs() < limit) {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(1.0, phase_unchecked(x, width, geometry.phase_strength()))
}

/// `sin(y)/y`, with the removable singularity handled by its series.
pub(crate) fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        let y2 = y * y;
        1.0 - y2 / 6.0 + y2 * y2 / 120.0
    } else {
        y.sin() / y
    }
}

/// Closed-form EM single-slit amplitude, `d · sinc(q d / 2)`.
pub fn em_slit_amplitude(q: f64, width: f64) -> f64 {
    width * sinc(0.5 * q * width)
}

pub fn single_slit_field_em(
    width: f64,
    grid: DetectorGrid,
    geometry: &GeometryConfig,
) -> WaveField {
    let amplitudes = (0..grid.len())
        .map(|i| {
            let q = geometry.kernel_frequency(grid.position(i));
            Complex64::new(em_slit_amplitude(q, width), 0.0)
        })
        .collect();
    WaveField { grid, amplitudes }
}

/// Quadrature nodes for one half of a symmetric slit, with `weight · t(x)` folded in.
struct HalfSlitRule {
    nodes: Vec<f64>,
    weighted: Vec<Complex64>,
}

impl HalfSlitRule {
    fn build(
        width: f64,
        geometry: &GeometryConfig,
        q_max: f64,
        budget: f64,
        gl: &GaussLegendre,
    ) -> Option<Self> {
        let end = effective_half_width(width, geometry);
        let strength = geometry.phase_strength();
        let edge_gap = if strength == 0.0 {
            f64::INFINITY
        } else {
            geometry.width_reduction
        };
        let panels = graded_panels(
            end,
            edge_gap,
            budget,
            |x| phase_slope(x, width, strength) + q_max,
            MAX_PANELS,
        )?;
        let mut nodes = Vec::with_capacity(panels.len() * gl.len());
        let mut weighted = Vec::with_capacity(panels.len() * gl.len());
        for (a, b) in panels {
            for (x, w) in gl.mapped(a, b) {
                nodes.push(x);
                weighted.push(Complex64::from_polar(
                    w,
                    phase_unchecked(x, width, strength),
                ));
            }
        }
        Some(HalfSlitRule { nodes, weighted })
    }

    /// `∫_{-a}^{a} t(x) e^{iqx} dx = 2 ∫_0^a t(x) cos(qx) dx` for even `t`.
    fn amplitude(&self, q: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &c) in self.nodes.iter().zip(&self.weighted) {
            acc += c * (q * x).cos();
        }
        acc * 2.0
    }

    fn evaluate(&self, qs: &[f64]) -> Vec<Complex64> {
        qs.iter().map(|&q| self.amplitude(q)).collect()
    }
}

/// Matter-wave single-slit amplitude by composite Gauss–Legendre quadrature.
///
/// Panels are graded toward the slit edges where the dispersion phase
/// steepens. The rule is refined until two successive levels agree to
/// [`QUADRATURE_TOLERANCE`] times the effective width at every grid point.
pub fn single_slit_field_mw(
    width: f64,
    grid: DetectorGrid,
    geometry: &GeometryConfig,
) -> Result<WaveField> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::config(format!(
            "slit width must be positive, got {width}"
        )));
    }
    let half = effective_half_width(width, geometry);
    if half <= 0.0 {
        return Ok(WaveField::zeros(grid));
    }

    // The amplitude is even in r and the grid is symmetric: integrate one half.
    let n = grid.len();
    let upper: Vec<usize> = (n / 2..n).collect();
    let qs: Vec<f64> = upper
        .iter()
        .map(|&i| geometry.kernel_frequency(grid.position(i)))
        .collect();
    let q_max = qs.iter().fold(0.0f64, |m, q| m.max(q.abs()));

    let gl = GaussLegendre::new(GL_ORDER);
    let scale = 2.0 * half;
    let tolerance = QUADRATURE_TOLERANCE * scale;
    let not_converged = |r: f64, estimate: f64| Error::Quadrature {
        width,
        r,
        estimate,
        tolerance: QUADRATURE_TOLERANCE,
    };

    let mut budget = INITIAL_PHASE_BUDGET;
    let mut coarse = HalfSlitRule::build(width, geometry, q_max, budget, &gl)
        .ok_or_else(|| not_converged(grid.position(n - 1), f64::INFINITY))?
        .evaluate(&qs);
    let mut worst = (0usize, f64::INFINITY);
    for _ in 0..MAX_REFINEMENTS {
        budget *= 0.5;
        let fine = HalfSlitRule::build(width, geometry, q_max, budget, &gl)
            .ok_or_else(|| not_converged(grid.position(n - 1), f64::INFINITY))?
            .evaluate(&qs);
        worst = coarse
            .iter()
            .zip(&fine)
            .map(|(c, f)| (c - f).norm())
            .enumerate()
            .fold((0, 0.0), |acc, (k, e)| if e > acc.1 { (k, e) } else { acc });
        if worst.1 <= tolerance {
            return Ok(mirror(grid, &fine));
        }
        coarse = fine;
    }
    Err(not_converged(
        grid.position(upper[worst.0]),
        worst.1 / scale,
    ))
}

/// Expands values computed on the upper half of a symmetric grid to the full grid.
fn mirror(grid: DetectorGrid, upper: &[Complex64]) -> WaveField {
    let n = grid.len();
    let start = n / 2;
    let amplitudes = (0..n)
        .map(|i| {
            if i >= start {
                upper[i - start]
            } else {
                upper[n - 1 - i - start]
            }
        })
        .collect();
    WaveField { grid, amplitudes }
}

/// Single-slit amplitude for either wave type.
pub fn single_slit_field(
    width: f64,
    grid: DetectorGrid,
    geometry: &GeometryConfig,
    mode: Mode,
) -> Result<WaveField> {
    match mode {
        Mode::Matter => single_slit_field_mw(width, grid, geometry),
        Mode::Em => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::config(format!(
                    "slit width must be positive, got {width}"
                )));
            }
            Ok(single_slit_field_em(width, grid, geometry))
        }
    }
}

/// Single-slit amplitudes for widths of `1..=count` sections, in parallel.
pub(crate) fn single_slit_rows(
    count: usize,
    grid: DetectorGrid,
    geometry: &GeometryConfig,
    mode: Mode,
) -> Result<Vec<WaveField>> {
    (1..=count)
        .into_par_iter()
        .map(|units| {
            single_slit_field(units as f64 * geometry.section_width, grid, geometry, mode).map_err(
                |e| Error::TableRow {
                    index: units,
                    source: Box::new(e),
                },
            )
        })
        .collect()
}

/// `∫ |t(x)|² dx` of a centred matter-wave slit, by the same quadrature rule.
///
/// The phase is unimodular, so this is the effective width `d - 2ΔR`.
pub fn transmitted_power(width: f64, geometry: &GeometryConfig) -> f64 {
    let half = effective_half_width(width, geometry);
    if half <= 0.0 {
        return 0.0;
    }
    let gl = GaussLegendre::new(GL_ORDER);
    2.0 * gl.integrate(0.0, half, |x| {
        matter_transmission(x, width, geometry).norm_sqr()
    })
}
