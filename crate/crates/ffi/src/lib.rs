//! C ABI for mwlith.
//!
//! Every entry point returns an [`MwlStatus`]; on failure a description is
//! available from [`mwl_last_error_message`] on the same thread. Panics are
//! caught at the boundary and reported as [`MwlStatus::Panic`]. Masks cross
//! the boundary as one byte per section, `0` closed and `1` open.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mwlith::ga::{evolve, random_population, seed_population, Crossover, GaConfig};
use mwlith::{
    fitness, DetectorGrid, Error, ErrorKind, GeometryConfig, IntensityPattern, Mask, Mode,
    Normalization, Propagator, SlitTable,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of every fallible call. Values 2..=4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwlStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numerical = 3,
    Io = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwlMode {
    Matter = 0,
    Em = 1,
}

/// Physical setup, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwlGeometry {
    pub wavelength: f64,
    pub source_distance: f64,
    pub screen_distance: f64,
    pub membrane_thickness: f64,
    pub c3_coefficient: f64,
    pub particle_mass: f64,
    pub width_reduction: f64,
    pub section_width: f64,
    pub n_sections: u32,
    pub amplitude: f64,
}

impl From<&MwlGeometry> for GeometryConfig {
    fn from(g: &MwlGeometry) -> Self {
        GeometryConfig {
            wavelength: g.wavelength,
            source_distance: g.source_distance,
            screen_distance: g.screen_distance,
            membrane_thickness: g.membrane_thickness,
            c3_coefficient: g.c3_coefficient,
            particle_mass: g.particle_mass,
            width_reduction: g.width_reduction,
            section_width: g.section_width,
            n_sections: g.n_sections as usize,
            amplitude: g.amplitude,
        }
    }
}

impl From<&GeometryConfig> for MwlGeometry {
    fn from(g: &GeometryConfig) -> Self {
        MwlGeometry {
            wavelength: g.wavelength,
            source_distance: g.source_distance,
            screen_distance: g.screen_distance,
            membrane_thickness: g.membrane_thickness,
            c3_coefficient: g.c3_coefficient,
            particle_mass: g.particle_mass,
            width_reduction: g.width_reduction,
            section_width: g.section_width,
            n_sections: g.n_sections as u32,
            amplitude: g.amplitude,
        }
    }
}

/// Genetic-solver settings. A `fitness_threshold` of zero or less means none.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwlGaConfig {
    pub population_size: u32,
    pub n_parents: u32,
    pub elitism: bool,
    pub seed_mutations: u32,
    pub offspring_mutations: u32,
    pub unique_offspring: bool,
    pub generations: u32,
    pub fitness_alpha: f64,
    pub fitness_threshold: f64,
    pub rng_seed: u64,
}

impl From<&MwlGaConfig> for GaConfig {
    fn from(c: &MwlGaConfig) -> Self {
        GaConfig {
            population_size: c.population_size as usize,
            n_parents: c.n_parents as usize,
            crossover: Crossover::Uniform,
            elitism: c.elitism,
            seed_mutations: c.seed_mutations as usize,
            offspring_mutations: c.offspring_mutations as usize,
            unique_offspring: c.unique_offspring,
            generations: c.generations as usize,
            fitness_alpha: c.fitness_alpha,
            fitness_threshold: (c.fitness_threshold > 0.0).then_some(c.fitness_threshold),
            rng_seed: c.rng_seed,
        }
    }
}

/// Opaque handle: a single-slit table plus the geometry, grid and mode it was built for.
pub struct MwlPropagator(Propagator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MwlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Config => MwlStatus::Config,
            ErrorKind::Numerical => MwlStatus::Numerical,
            ErrorKind::Io => MwlStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MwlStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MwlStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MwlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MwlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            MwlStatus::Panic
        }
    }
}

unsafe fn handle<'a>(p: *const MwlPropagator) -> Result<&'a Propagator, Failure> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("propagator"))
}

unsafe fn read_mask(bits: *const u8, len: usize, expected: usize) -> Result<Mask, Failure> {
    if bits.is_null() {
        return Err(null("mask"));
    }
    if len != expected {
        return Err(invalid(format!(
            "mask has {len} sections, propagator expects {expected}"
        )));
    }
    Mask::from_bits(slice::from_raw_parts(bits, len)).map_err(|e| invalid(e.to_string()))
}

unsafe fn read_target(
    values: *const f64,
    len: usize,
    grid: DetectorGrid,
) -> Result<IntensityPattern, Failure> {
    if values.is_null() {
        return Err(null("target"));
    }
    if len != grid.len() {
        return Err(invalid(format!(
            "target has {len} samples, grid has {}",
            grid.len()
        )));
    }
    IntensityPattern::new(
        grid,
        slice::from_raw_parts(values, len).to_vec(),
        Normalization::PeakOne,
    )
    .map_err(Failure::from)
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

fn mode_arg(mode: u32) -> Result<Mode, Failure> {
    match mode {
        0 => Ok(Mode::Matter),
        1 => Ok(Mode::Em),
        m => Err(invalid(format!("unknown mode {m}"))),
    }
}

/// Message for the last failed call on this thread, or NULL after a success.
///
/// The string is owned by the library and stays valid until the next call on
/// the same thread.
#[no_mangle]
pub extern "C" fn mwl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// The metastable-helium / 5 nm SiN layout with the given dispersion inputs.
#[no_mangle]
pub extern "C" fn mwl_geometry_helium_sin(c3_coefficient: f64, particle_mass: f64) -> MwlGeometry {
    MwlGeometry::from(&GeometryConfig::helium_sin_membrane(
        c3_coefficient,
        particle_mass,
    ))
}

#[no_mangle]
pub extern "C" fn mwl_ga_config_default() -> MwlGaConfig {
    let d = GaConfig::default();
    MwlGaConfig {
        population_size: d.population_size as u32,
        n_parents: d.n_parents as u32,
        elitism: d.elitism,
        seed_mutations: d.seed_mutations as u32,
        offspring_mutations: d.offspring_mutations as u32,
        unique_offspring: d.unique_offspring,
        generations: d.generations as u32,
        fitness_alpha: d.fitness_alpha,
        fitness_threshold: d.fitness_threshold.unwrap_or(0.0),
        rng_seed: d.rng_seed,
    }
}

/// Builds the single-slit table for `geometry` on `count` points over
/// `[-half_extent, half_extent]`. `mode` is an [`MwlMode`] value.
///
/// # Safety
/// `geometry` must point to a valid [`MwlGeometry`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_new(
    geometry: *const MwlGeometry,
    half_extent: f64,
    count: usize,
    mode: u32,
    out: *mut *mut MwlPropagator,
) -> MwlStatus {
    guard(|| {
        let g = geometry.as_ref().ok_or_else(|| null("geometry"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = DetectorGrid::new(half_extent, count)?;
        let p = Propagator::new(&GeometryConfig::from(g), grid, mode_arg(mode)?)?;
        *out = Box::into_raw(Box::new(MwlPropagator(p)));
        Ok(())
    })
}

/// Loads a table file written by [`mwl_propagator_save`] or the `table` command.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_load(
    path: *const c_char,
    out: *mut *mut MwlPropagator,
) -> MwlStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let table = SlitTable::load(&path)?;
        *out = Box::into_raw(Box::new(MwlPropagator(Propagator::from_table(table))));
        Ok(())
    })
}

/// # Safety
/// `propagator` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_save(
    propagator: *const MwlPropagator,
    path: *const c_char,
) -> MwlStatus {
    guard(|| {
        let p = handle(propagator)?;
        p.table().save(path_arg(path)?)?;
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `propagator` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_free(propagator: *mut MwlPropagator) {
    if !propagator.is_null() {
        drop(Box::from_raw(propagator));
    }
}

/// Number of detector points, or 0 for NULL.
///
/// # Safety
/// `propagator` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_grid_len(propagator: *const MwlPropagator) -> usize {
    propagator.as_ref().map_or(0, |h| h.0.grid().len())
}

/// Number of mask sections, or 0 for NULL.
///
/// # Safety
/// `propagator` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_n_sections(propagator: *const MwlPropagator) -> usize {
    propagator.as_ref().map_or(0, |h| h.0.geometry().n_sections)
}

/// Copies the geometry the handle was built for.
///
/// # Safety
/// `propagator` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_geometry(
    propagator: *const MwlPropagator,
    out: *mut MwlGeometry,
) -> MwlStatus {
    guard(|| {
        let p = handle(propagator)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = MwlGeometry::from(p.geometry());
        Ok(())
    })
}

/// Writes the detector positions (m) into `out[0..len]`; `len` must equal the grid length.
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mwl_propagator_positions(
    propagator: *const MwlPropagator,
    out: *mut f64,
    len: usize,
) -> MwlStatus {
    guard(|| {
        let p = handle(propagator)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = p.grid();
        if len != grid.len() {
            return Err(invalid(format!(
                "buffer holds {len} values, grid has {}",
                grid.len()
            )));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(&grid.positions());
        Ok(())
    })
}

/// Peak-one normalized pattern of a mask.
///
/// # Safety
/// `mask` must hold `mask_len` bytes; `out` must hold `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mwl_forward(
    propagator: *const MwlPropagator,
    mask: *const u8,
    mask_len: usize,
    out: *mut f64,
    out_len: usize,
) -> MwlStatus {
    guard(|| {
        let p = handle(propagator)?;
        let mask = read_mask(mask, mask_len, p.geometry().n_sections)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len != p.grid().len() {
            return Err(invalid(format!(
                "buffer holds {out_len} values, grid has {}",
                p.grid().len()
            )));
        }
        let pattern = p.pattern(&mask)?;
        slice::from_raw_parts_mut(out, out_len).copy_from_slice(&pattern.values);
        Ok(())
    })
}

/// Fitness `1 / (α + Σ|target - pattern(mask)|)` against a peak-one target.
///
/// # Safety
/// `mask` must hold `mask_len` bytes, `target` `target_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwl_fitness(
    propagator: *const MwlPropagator,
    mask: *const u8,
    mask_len: usize,
    target: *const f64,
    target_len: usize,
    alpha: f64,
    out: *mut f64,
) -> MwlStatus {
    guard(|| {
        let p = handle(propagator)?;
        let mask = read_mask(mask, mask_len, p.geometry().n_sections)?;
        let target = read_target(target, target_len, p.grid())?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = fitness(&target, &p.pattern(&mask)?, alpha)?;
        Ok(())
    })
}

/// Runs the genetic solver against `target`.
///
/// With `seed_mask` non-NULL the initial population is seeded from it,
/// otherwise it is random. The best mask is written to `best_mask[0..mask_len]`.
/// `best_fitness` and `generations_run` may be NULL.
///
/// # Safety
/// All non-NULL pointers must reference buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mwl_solve(
    propagator: *const MwlPropagator,
    target: *const f64,
    target_len: usize,
    config: *const MwlGaConfig,
    seed_mask: *const u8,
    best_mask: *mut u8,
    mask_len: usize,
    best_fitness: *mut f64,
    generations_run: *mut usize,
) -> MwlStatus {
    guard(|| {
        let p = handle(propagator)?;
        let target = read_target(target, target_len, p.grid())?;
        let config = GaConfig::from(config.as_ref().ok_or_else(|| null("config"))?);
        let n = p.geometry().n_sections;
        if best_mask.is_null() {
            return Err(null("best_mask"));
        }
        if mask_len != n {
            return Err(invalid(format!(
                "mask buffer holds {mask_len} sections, propagator expects {n}"
            )));
        }
        config.validate(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let initial = if seed_mask.is_null() {
            random_population(n, &config, &mut rng)
        } else {
            seed_population(&read_mask(seed_mask, mask_len, n)?, &config, &mut rng)?
        };
        let run = evolve(&target, initial, &config, p)?;
        let out = slice::from_raw_parts_mut(best_mask, mask_len);
        for (o, b) in out.iter_mut().zip(run.best_mask().bits()) {
            *o = b;
        }
        if let Some(f) = best_fitness.as_mut() {
            *f = run.best_fitness();
        }
        if let Some(g) = generations_run.as_mut() {
            *g = run.generations_run();
        }
        Ok(())
    })
}
