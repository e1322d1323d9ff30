//! Multi-slit superposition, the error functional and the GA fitness.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{GeometryConfig, Mode};
use crate::grid::{DetectorGrid, IntensityPattern, WaveField};
use crate::mask::{mask_to_openings, Mask, SlitOpening};
use crate::physics::single_slit_field;
use crate::table::SlitTable;

/// Default additive constant of the fitness denominator.
pub const DEFAULT_FITNESS_ALPHA: f64 = 1e-9;

/// Phase factor `exp(-i q x)` that moves a centred slit to `x`.
#[inline]
pub(crate) fn shift_phase(q: f64, center: f64) -> Complex64 {
    Complex64::from_polar(1.0, -q * center)
}

fn superpose<'a, F>(
    openings: &[SlitOpening],
    grid: DetectorGrid,
    geometry: &GeometryConfig,
    mut row: F,
) -> WaveField
where
    F: FnMut(usize) -> &'a [Complex64],
{
    let qs: Vec<f64> = (0..grid.len())
        .map(|i| geometry.kernel_frequency(grid.position(i)))
        .collect();
    let mut field = WaveField::zeros(grid);
    for opening in openings {
        let single = row(opening.units);
        for ((acc, &q), &s) in field.amplitudes.iter_mut().zip(&qs).zip(single) {
            *acc += shift_phase(q, opening.center) * s;
        }
    }
    field
}

/// Complex far field `ψ(r) = Σₙ exp(-i q xₙ) · singleSlit(dₙ, r)` of a mask.
///
/// With a table the single-slit amplitudes are looked up; otherwise they are
/// computed for each distinct opening width.
pub fn field(
    mask: &Mask,
    grid: DetectorGrid,
    geometry: &GeometryConfig,
    mode: Mode,
    table: Option<&SlitTable>,
) -> Result<WaveField> {
    geometry.validate()?;
    let openings = mask_to_openings(mask, geometry)?;
    match table {
        Some(table) => {
            if !table.matches(geometry, grid, mode) {
                return Err(Error::config(
                    "slit table was built for a different geometry, grid or mode",
                ));
            }
            Ok(superpose(&openings, grid, geometry, |units| {
                table.row(units)
            }))
        }
        None => {
            let mut rows = BTreeMap::new();
            for o in &openings {
                if let std::collections::btree_map::Entry::Vacant(slot) = rows.entry(o.units) {
                    slot.insert(single_slit_field(o.width, grid, geometry, mode)?.amplitudes);
                }
            }
            Ok(superpose(&openings, grid, geometry, |units| {
                rows[&units].as_slice()
            }))
        }
    }
}

/// Peak-one normalized far-field intensity `|ψ|²` of a mask.
pub fn forward(
    mask: &Mask,
    grid: DetectorGrid,
    geometry: &GeometryConfig,
    mode: Mode,
    table: Option<&SlitTable>,
) -> Result<IntensityPattern> {
    Ok(field(mask, grid, geometry, mode, table)?
        .intensity()
        .normalized())
}

/// Riemann sum of `∫ (P̃ - P)² dr` over the grid.
pub fn error_mse(target: &IntensityPattern, candidate: &IntensityPattern) -> Result<f64> {
    target.check_comparable(candidate)?;
    let sum: f64 = target
        .values
        .iter()
        .zip(&candidate.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum * target.grid.spacing())
}

/// `Σᵢ |P̃(rᵢ) - P(rᵢ)|`.
pub fn abs_deviation(target: &IntensityPattern, candidate: &IntensityPattern) -> Result<f64> {
    target.check_comparable(candidate)?;
    Ok(sum_abs_diff(&target.values, &candidate.values))
}

#[inline]
pub(crate) fn sum_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `F = 1 / (α + Σᵢ |P̃(rᵢ) - P(rᵢ)|)`; maximal (`1/α`) iff the patterns coincide.
pub fn fitness(target: &IntensityPattern, candidate: &IntensityPattern, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(fitness_from_deviation(
        abs_deviation(target, candidate)?,
        alpha,
    ))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!(
            "fitness alpha must be positive, got {alpha}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn fitness_from_deviation(deviation: f64, alpha: f64) -> f64 {
    1.0 / (alpha + deviation)
}

/// Fast repeated forward evaluation against a fixed geometry, grid and mode.
///
/// Holds every single-slit row and the shift phases of every lattice
/// position, so a pattern costs one complex multiply-add per opening and
/// grid point. Results are bit-identical to [`forward`] with the same table.
#[derive(Debug, Clone)]
pub struct Propagator {
    table: SlitTable,
    /// `shifts[j + n - 1][i] = exp(-i qᵢ · j·w/2)`.
    shifts: Vec<Vec<Complex64>>,
}

impl Propagator {
    pub fn new(geometry: &GeometryConfig, grid: DetectorGrid, mode: Mode) -> Result<Self> {
        Ok(Self::from_table(SlitTable::build(geometry, grid, mode)?))
    }

    pub fn from_table(table: SlitTable) -> Self {
        let geometry = *table.geometry();
        let grid = table.grid();
        let n = geometry.n_sections as i64;
        let qs: Vec<f64> = (0..grid.len())
            .map(|i| geometry.kernel_frequency(grid.position(i)))
            .collect();
        let shifts = (-(n - 1)..=(n - 1))
            .map(|j| {
                // Same expression as `SlitOpening::center`.
                let center = j as f64 * geometry.section_width * 0.5;
                qs.iter().map(|&q| shift_phase(q, center)).collect()
            })
            .collect();
        Propagator { table, shifts }
    }

    pub fn table(&self) -> &SlitTable {
        &self.table
    }

    pub fn geometry(&self) -> &GeometryConfig {
        self.table.geometry()
    }

    pub fn grid(&self) -> DetectorGrid {
        self.table.grid()
    }

    pub fn mode(&self) -> Mode {
        self.table.mode()
    }

    pub fn field(&self, mask: &Mask) -> Result<WaveField> {
        let openings = mask_to_openings(mask, self.geometry())?;
        let n = self.geometry().n_sections as i64;
        let mut field = WaveField::zeros(self.grid());
        for o in &openings {
            let shift = &self.shifts[(o.half_steps + n - 1) as usize];
            let row = self.table.row(o.units);
            for ((acc, p), s) in field.amplitudes.iter_mut().zip(shift).zip(row) {
                *acc += p * s;
            }
        }
        Ok(field)
    }

    pub fn pattern(&self, mask: &Mask) -> Result<IntensityPattern> {
        Ok(self.field(mask)?.intensity().normalized())
    }

    /// Summed absolute deviation of the mask's pattern from `target`.
    pub fn deviation(&self, mask: &Mask, target: &IntensityPattern) -> Result<f64> {
        abs_deviation(target, &self.pattern(mask)?)
    }
}
