//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! at most once; unknown keys are errors. `c3_coefficient` and
//! `particle_mass` are required, everything else has a default (the
//! metastable-helium / SiN layout, 512 grid points on ±15 µm, default GA).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ga::GaConfig;
use crate::geometry::{GeometryConfig, Mode};
use crate::grid::DetectorGrid;

/// Every recognised key, in documentation order.
pub const KEYS: &[&str] = &[
    "wavelength",
    "source_distance",
    "screen_distance",
    "membrane_thickness",
    "c3_coefficient",
    "particle_mass",
    "width_reduction",
    "section_width",
    "n_sections",
    "amplitude",
    "grid_half_extent",
    "grid_points",
    "mode",
    "population_size",
    "n_parents",
    "elitism",
    "seed_mutations",
    "offspring_mutations",
    "unique_offspring",
    "generations",
    "fitness_alpha",
    "fitness_threshold",
    "seed",
    "out_dir",
    "dataset_count",
    "dataset_features",
    "bench_targets",
    "bench_repeats",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub grid: DetectorGrid,
    pub mode: Mode,
    pub ga: GaConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub dataset_count: usize,
    pub dataset_features: bool,
    pub bench_targets: usize,
    pub bench_repeats: usize,
}

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::config(format!(
                    "line {line}: invalid value `{raw}` for key `{key}`"
                ))
            }),
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| Error::config(format!("missing required key `{key}`")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "line {line_no}: expected `key = value`, got `{line}`"
                ))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::config(format!(
                    "line {line_no}: unknown key `{key}`"
                )));
            }
            let value = value.split('#').next().unwrap_or("").trim().to_string();
            if entries.insert(key.to_string(), (line_no, value)).is_some() {
                return Err(Error::config(format!(
                    "line {line_no}: duplicate key `{key}`"
                )));
            }
        }
        let mut e = Entries(entries);

        let base = GeometryConfig::helium_sin_membrane(0.0, 0.0);
        let geometry = GeometryConfig {
            wavelength: e.or("wavelength", base.wavelength)?,
            source_distance: e.or("source_distance", base.source_distance)?,
            screen_distance: e.or("screen_distance", base.screen_distance)?,
            membrane_thickness: e.or("membrane_thickness", base.membrane_thickness)?,
            c3_coefficient: e.required("c3_coefficient")?,
            particle_mass: e.required("particle_mass")?,
            width_reduction: e.or("width_reduction", base.width_reduction)?,
            section_width: e.or("section_width", base.section_width)?,
            n_sections: e.or("n_sections", base.n_sections)?,
            amplitude: e.or("amplitude", base.amplitude)?,
        };
        let grid = DetectorGrid::new(
            e.or("grid_half_extent", DetectorGrid::DEFAULT_HALF_EXTENT)?,
            e.or("grid_points", DetectorGrid::DEFAULT_COUNT)?,
        )?;
        let mode = match e.0.remove("mode") {
            Some((line, raw)) => raw
                .parse::<Mode>()
                .map_err(|err| Error::config(format!("line {line}: key `mode`: {err}")))?,
            None => Mode::Matter,
        };
        let defaults = GaConfig::default();
        let seed = e.or("seed", 0u64)?;
        let ga = GaConfig {
            population_size: e.or("population_size", defaults.population_size)?,
            n_parents: e.or("n_parents", defaults.n_parents)?,
            crossover: defaults.crossover,
            elitism: e.or("elitism", defaults.elitism)?,
            seed_mutations: e.or("seed_mutations", defaults.seed_mutations)?,
            offspring_mutations: e.or("offspring_mutations", defaults.offspring_mutations)?,
            unique_offspring: e.or("unique_offspring", defaults.unique_offspring)?,
            generations: e.or("generations", defaults.generations)?,
            fitness_alpha: e.or("fitness_alpha", defaults.fitness_alpha)?,
            fitness_threshold: e.take("fitness_threshold")?,
            rng_seed: seed,
        };
        let config = RunConfig {
            geometry,
            grid,
            mode,
            ga,
            seed,
            out_dir: e.or("out_dir", PathBuf::from("out"))?,
            dataset_count: e.or("dataset_count", 10_000)?,
            dataset_features: e.or("dataset_features", true)?,
            bench_targets: e.or("bench_targets", 20)?,
            bench_repeats: e.or("bench_repeats", 10)?,
        };
        debug_assert!(e.0.is_empty(), "unconsumed keys: {:?}", e.0.keys());
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.ga.validate(self.geometry.n_sections)?;
        if let Some(t) = self.ga.fitness_threshold {
            if !(t > 0.0) {
                return Err(Error::config(format!(
                    "fitness_threshold must be positive, got {t}"
                )));
            }
        }
        if self.bench_targets == 0 || self.bench_repeats == 0 {
            return Err(Error::config(
                "bench_targets and bench_repeats must be at least 1",
            ));
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.ga.rng_seed = seed;
    }
}
