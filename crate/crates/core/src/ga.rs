//! Genetic search over binary masks.
//!
//! Each generation the whole population is scored with
//! `F = 1 / (α + Σ|P̃ - P|)`, the `n_parents` fittest members are selected
//! (ties broken by member index), carried over unchanged when elitism is on,
//! and the rest of the next generation is bred by uniform crossover of random
//! distinct parent pairs followed by resampling `offspring_mutations` genes.
//! With `unique_offspring` a child that already exists in the current or the
//! next generation is redrawn (up to [`MAX_REDRAWS`] times), which keeps a
//! converged population from filling up with copies of its parents.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{
    check_alpha, fitness_from_deviation, sum_abs_diff, Propagator, DEFAULT_FITNESS_ALPHA,
};
use crate::grid::{IntensityPattern, Normalization};
use crate::mask::Mask;

pub type Population = Vec<Mask>;

pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossover {
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub n_parents: usize,
    pub crossover: Crossover,
    pub elitism: bool,
    /// Genes resampled in each non-seed member of a seeded initial population.
    pub seed_mutations: usize,
    /// Genes resampled in each offspring.
    pub offspring_mutations: usize,
    /// Redraw offspring that duplicate a member of the current or next generation.
    pub unique_offspring: bool,
    pub generations: usize,
    pub fitness_alpha: f64,
    /// Stop as soon as the best fitness reaches this value.
    pub fitness_threshold: Option<f64>,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            n_parents: 7,
            crossover: Crossover::Uniform,
            elitism: true,
            seed_mutations: 15,
            offspring_mutations: 4,
            unique_offspring: true,
            generations: 2000,
            fitness_alpha: DEFAULT_FITNESS_ALPHA,
            fitness_threshold: None,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self, n_sections: usize) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::config("population_size must be at least 1"));
        }
        if self.n_parents == 0 || self.n_parents > self.population_size {
            return Err(Error::config(format!(
                "n_parents must lie in 1..={}, got {}",
                self.population_size, self.n_parents
            )));
        }
        if self.seed_mutations > n_sections {
            return Err(Error::config(format!(
                "seed_mutations ({}) exceeds the number of sections ({n_sections})",
                self.seed_mutations
            )));
        }
        if self.offspring_mutations > n_sections {
            return Err(Error::config(format!(
                "offspring_mutations ({}) exceeds the number of sections ({n_sections})",
                self.offspring_mutations
            )));
        }
        check_alpha(self.fitness_alpha)
    }
}

/// Resamples `count` distinct genes uniformly from {0, 1}; a gene may keep its value.
pub fn resample_genes<R: Rng + ?Sized>(mask: &mut Mask, count: usize, rng: &mut R) {
    let n = mask.len();
    for i in sample(rng, n, count.min(n)).into_iter() {
        mask.sections_mut()[i] = rng.gen::<bool>();
    }
}

/// Member 0 is `seed` itself; every other member is `seed` with
/// `seed_mutations` resampled genes.
pub fn seed_population<R: Rng + ?Sized>(
    seed: &Mask,
    config: &GaConfig,
    rng: &mut R,
) -> Result<Population> {
    config.validate(seed.len())?;
    let mut population = Vec::with_capacity(config.population_size);
    population.push(seed.clone());
    for _ in 1..config.population_size {
        let mut m = seed.clone();
        resample_genes(&mut m, config.seed_mutations, rng);
        population.push(m);
    }
    Ok(population)
}

pub fn random_population<R: Rng + ?Sized>(
    n_sections: usize,
    config: &GaConfig,
    rng: &mut R,
) -> Population {
    (0..config.population_size)
        .map(|_| crate::dataset::random_mask(rng, n_sections))
        .collect()
}

/// Each gene copied from either parent with probability ½.
pub fn uniform_crossover<R: Rng + ?Sized>(a: &Mask, b: &Mask, rng: &mut R) -> Result<Mask> {
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "parents differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(Mask::new(
        a.sections()
            .iter()
            .zip(b.sections())
            .map(|(&x, &y)| if rng.gen::<bool>() { x } else { y })
            .collect(),
    ))
}

/// History of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    /// Fittest member of each evaluated generation, starting with the initial one.
    pub best_mask_per_generation: Vec<Mask>,
    pub best_fitness_trace: Vec<f64>,
    pub mean_fitness_trace: Vec<f64>,
    pub final_population: Population,
    pub final_fitness: Vec<f64>,
}

impl GaRun {
    pub fn best_mask(&self) -> &Mask {
        self.best_mask_per_generation
            .last()
            .expect("at least one generation")
    }

    pub fn best_fitness(&self) -> f64 {
        *self
            .best_fitness_trace
            .last()
            .expect("at least one generation")
    }

    /// Generations evolved after the initial population.
    pub fn generations_run(&self) -> usize {
        self.best_fitness_trace.len() - 1
    }

    /// Line-oriented trace: `generation<TAB>best_fitness<TAB>mean_fitness`.
    pub fn trace_text(&self) -> String {
        let mut out = String::from("# generation\tbest_fitness\tmean_fitness\n");
        for (g, (b, m)) in self
            .best_fitness_trace
            .iter()
            .zip(&self.mean_fitness_trace)
            .enumerate()
        {
            out.push_str(&format!("{g}\t{b:e}\t{m:e}\n"));
        }
        out
    }
}

fn evaluate(
    population: &[Mask],
    target: &IntensityPattern,
    propagator: &Propagator,
    alpha: f64,
) -> Result<Vec<f64>> {
    population
        .par_iter()
        .map(|m| {
            let p = propagator.pattern(m)?;
            Ok(fitness_from_deviation(
                sum_abs_diff(&target.values, &p.values),
                alpha,
            ))
        })
        .collect()
}

/// Ranks members by descending fitness; equal fitness keeps index order.
fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
    order
}

/// Evolves `initial` toward `target`.
///
/// Stops after `config.generations` generations, when the best fitness reaches
/// `config.fitness_threshold`, or when a member reproduces the target exactly
/// (fitness `1/α`, which cannot be improved).
pub fn evolve(
    target: &IntensityPattern,
    initial: Population,
    config: &GaConfig,
    propagator: &Propagator,
) -> Result<GaRun> {
    let n = propagator.geometry().n_sections;
    config.validate(n)?;
    if target.grid != propagator.grid() || target.len() != propagator.grid().len() {
        return Err(Error::config(
            "target pattern is sampled on a different grid",
        ));
    }
    if target.normalization != Normalization::PeakOne {
        return Err(Error::config("target pattern must be peak-one normalized"));
    }
    if initial.len() != config.population_size {
        return Err(Error::config(format!(
            "initial population has {} members, expected {}",
            initial.len(),
            config.population_size
        )));
    }
    if let Some(m) = initial.iter().find(|m| m.len() != n) {
        return Err(Error::config(format!(
            "population member has {} sections, expected {n}",
            m.len()
        )));
    }

    let alpha = config.fitness_alpha;
    let perfect = 1.0 / alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(1);

    let mut population = initial;
    let mut fitness = evaluate(&population, target, propagator, alpha)?;
    let mut run = GaRun {
        best_mask_per_generation: Vec::with_capacity(config.generations + 1),
        best_fitness_trace: Vec::with_capacity(config.generations + 1),
        mean_fitness_trace: Vec::with_capacity(config.generations + 1),
        final_population: Vec::new(),
        final_fitness: Vec::new(),
    };
    let done = |best: f64| best >= perfect || config.fitness_threshold.is_some_and(|t| best >= t);

    let mut order = ranking(&fitness);
    for generation in 0..=config.generations {
        let best = fitness[order[0]];
        run.best_mask_per_generation
            .push(population[order[0]].clone());
        run.best_fitness_trace.push(best);
        run.mean_fitness_trace
            .push(fitness.iter().sum::<f64>() / fitness.len() as f64);
        if generation == config.generations || done(best) {
            break;
        }

        let parents: Vec<&Mask> = order[..config.n_parents]
            .iter()
            .map(|&i| &population[i])
            .collect();
        let mut next = Vec::with_capacity(config.population_size);
        let mut next_fitness = Vec::with_capacity(config.population_size);
        if config.elitism {
            for &i in &order[..config.n_parents] {
                next.push(population[i].clone());
                next_fitness.push(fitness[i]);
            }
        }
        let mut offspring = Vec::with_capacity(config.population_size - next.len());
        let mut redraws = 0;
        while next.len() + offspring.len() < config.population_size {
            let k = parents.len();
            let i = rng.gen_range(0..k);
            let j = if k > 1 {
                let j = rng.gen_range(0..k - 1);
                if j >= i {
                    j + 1
                } else {
                    j
                }
            } else {
                i
            };
            let mut child = match config.crossover {
                Crossover::Uniform => uniform_crossover(parents[i], parents[j], &mut rng)?,
            };
            resample_genes(&mut child, config.offspring_mutations, &mut rng);
            if config.unique_offspring
                && redraws < MAX_REDRAWS
                && (population.contains(&child)
                    || next.contains(&child)
                    || offspring.contains(&child))
            {
                redraws += 1;
                continue;
            }
            redraws = 0;
            offspring.push(child);
        }
        next_fitness.extend(evaluate(&offspring, target, propagator, alpha)?);
        next.extend(offspring);
        population = next;
        fitness = next_fitness;
        order = ranking(&fitness);
    }
    run.final_population = population;
    run.final_fitness = fitness;
    Ok(run)
}

/// How an arm of a seeding comparison builds its initial populations.
#[derive(Debug, Clone, PartialEq)]
pub enum Seeding {
    Random,
    /// One seed mask per target, expanded with [`seed_population`].
    Masks(Vec<Mask>),
}

/// Per-generation comparison of two seeding arms.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub seeded_mean: f64,
    pub seeded_std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    /// Mean over targets of `100 · (seeded - baseline) / baseline`.
    pub mean_percent: f64,
    /// Four standard errors of `mean_percent`.
    pub band_4sigma: f64,
}

pub const BENCH_HEADER: &str =
    "# generation\tmean_percent\tband_4sigma\tseeded_mean\tseeded_std\tbaseline_mean\tbaseline_std";

pub fn bench_table_text(stats: &[GenerationStats]) -> String {
    let mut out = format!("{BENCH_HEADER}\n");
    for s in stats {
        out.push_str(&format!(
            "{}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\n",
            s.generation,
            s.mean_percent,
            s.band_4sigma,
            s.seeded_mean,
            s.seeded_std,
            s.baseline_mean,
            s.baseline_std
        ));
    }
    out
}

fn initial_population<R: Rng + ?Sized>(
    seeding: &Seeding,
    target_index: usize,
    n_sections: usize,
    config: &GaConfig,
    rng: &mut R,
) -> Result<Population> {
    match seeding {
        Seeding::Random => Ok(random_population(n_sections, config, rng)),
        Seeding::Masks(masks) => seed_population(&masks[target_index], config, rng),
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every target `repeats` times under both seeding arms and compares
/// the best-fitness traces generation by generation.
///
/// Run `(t, j)` uses the same random stream in both arms, so identical arms
/// give identical traces. Runs that stop early are extended with their final
/// best fitness.
pub fn compare_seeding(
    targets: &[IntensityPattern],
    seeded: &Seeding,
    baseline: &Seeding,
    config: &GaConfig,
    repeats: usize,
    propagator: &Propagator,
) -> Result<Vec<GenerationStats>> {
    if targets.is_empty() {
        return Err(Error::config(
            "seeding comparison needs at least one target",
        ));
    }
    if repeats == 0 {
        return Err(Error::config("repeats must be at least 1"));
    }
    for arm in [seeded, baseline] {
        if let Seeding::Masks(m) = arm {
            if m.len() != targets.len() {
                return Err(Error::config(format!(
                    "{} seed masks for {} targets",
                    m.len(),
                    targets.len()
                )));
            }
        }
    }
    let n = propagator.geometry().n_sections;
    let len = config.generations + 1;
    let jobs: Vec<(usize, usize, usize)> = (0..2)
        .flat_map(|arm| {
            (0..targets.len()).flat_map(move |t| (0..repeats).map(move |j| (arm, t, j)))
        })
        .collect();
    let traces = jobs
        .par_iter()
        .map(|&(arm, t, j)| {
            let stream = (t * repeats + j) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(stream);
            let run_config = GaConfig {
                rng_seed: rng.gen(),
                ..config.clone()
            };
            let seeding = if arm == 0 { seeded } else { baseline };
            let initial = initial_population(seeding, t, n, config, &mut rng)?;
            let mut trace =
                evolve(&targets[t], initial, &run_config, propagator)?.best_fitness_trace;
            let last = *trace.last().expect("non-empty trace");
            trace.resize(len, last);
            Ok(trace)
        })
        .collect::<Result<Vec<_>>>()?;
    let per_arm = targets.len() * repeats;
    let (seeded_traces, baseline_traces) = traces.split_at(per_arm);

    Ok((0..len)
        .map(|g| {
            let (seeded_mean, seeded_std) = mean_std(seeded_traces.iter().map(|tr| tr[g]));
            let (baseline_mean, baseline_std) = mean_std(baseline_traces.iter().map(|tr| tr[g]));
            let percents: Vec<f64> = (0..targets.len())
                .map(|t| {
                    let runs = t * repeats..(t + 1) * repeats;
                    let s = seeded_traces[runs.clone()]
                        .iter()
                        .map(|tr| tr[g])
                        .sum::<f64>();
                    let b = baseline_traces[runs].iter().map(|tr| tr[g]).sum::<f64>();
                    100.0 * (s - b) / b
                })
                .collect();
            let (mean_percent, sd) = mean_std(percents.iter().copied());
            GenerationStats {
                generation: g,
                seeded_mean,
                seeded_std,
                baseline_mean,
                baseline_std,
                mean_percent,
                band_4sigma: 4.0 * sd / (percents.len() as f64).sqrt(),
            }
        })
        .collect())
}
