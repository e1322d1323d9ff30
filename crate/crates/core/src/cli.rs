//! Command-line front end: `table`, `dataset`, `forward`, `solve`, `double-slit`, `bench`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::dataset::{generate_dataset, record_mask, split_indices, JsonLinesWriter, MwldWriter};
use crate::error::{Error, ErrorKind, Result};
use crate::files::{masks_to_text, read_masks, read_pattern, write_pattern};
use crate::forward::{error_mse, Propagator};
use crate::ga::{
    bench_table_text, compare_seeding, evolve, random_population, resample_genes, seed_population,
    Seeding,
};
use crate::geometry::Mode;
use crate::grid::IntensityPattern;
use crate::mask::Mask;
use crate::plot::{line_chart, Series};
use crate::table::SlitTable;

#[derive(Debug, Parser)]
#[command(
    name = "mwlith",
    version,
    about = "Matter-wave lithography mask design"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (flat `key = value`)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master random seed (overrides `seed`)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Wave type (overrides `mode`)
    #[arg(long, global = true, value_parser = ["matter", "em"])]
    pub mode: Option<String>,
    /// Generation budget (overrides `generations`)
    #[arg(long, global = true)]
    pub generations: Option<usize>,
    /// Stop once the best fitness reaches this value (overrides `fitness_threshold`)
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Output directory (overrides `out_dir`)
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build single-slit tables (both modes unless --mode is given)
    Table,
    /// Generate a random mask/pattern corpus
    Dataset,
    /// Simulate the pattern of one mask
    Forward {
        /// Mask string of 0/1 characters
        mask: String,
    },
    /// Search for a mask reproducing a target pattern file
    Solve {
        /// Target pattern file
        target: PathBuf,
        /// Seed-mask file; the first mask seeds the initial population
        #[arg(long)]
        seed_masks: Option<PathBuf>,
    },
    /// Centred double slit in both modes, optionally inverted with `solve`
    DoubleSlit {
        /// Opening width in nm
        #[arg(long, default_value_t = 8.0)]
        width: f64,
        /// Wall between the openings in nm
        #[arg(long, default_value_t = 8.0)]
        gap: f64,
        /// Also search for a mask reproducing the configured-mode pattern
        #[arg(long)]
        solve: bool,
    },
    /// Compare seeded against random initial populations
    Bench {
        /// Seed-mask file, one mask per benchmark target
        #[arg(long)]
        seed_masks: Option<PathBuf>,
    },
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config <FILE> is required"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = common.seed {
        config.set_seed(seed);
    }
    if let Some(mode) = &common.mode {
        config.mode = mode.parse()?;
    }
    if let Some(g) = common.generations {
        config.ga.generations = g;
    }
    if let Some(t) = common.threshold {
        config.ga.fitness_threshold = Some(t);
    }
    if let Some(dir) = &common.out_dir {
        config.out_dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = load_config(&cli.common)?;
    fs::create_dir_all(&config.out_dir)?;
    match &cli.command {
        Command::Table => {
            let modes = match &cli.common.mode {
                Some(_) => vec![config.mode],
                None => vec![Mode::Matter, Mode::Em],
            };
            cmd_table(&config, &modes).map(|_| ())
        }
        Command::Dataset => cmd_dataset(&config),
        Command::Forward { mask } => cmd_forward(&config, mask).map(|_| ()),
        Command::Solve { target, seed_masks } => cmd_solve(&config, target, seed_masks.as_deref()),
        Command::DoubleSlit { width, gap, solve } => cmd_double_slit(&config, *width, *gap, *solve),
        Command::Bench { seed_masks } => cmd_bench(&config, seed_masks.as_deref()),
    }
}

fn table_path(config: &RunConfig, mode: Mode) -> PathBuf {
    config.out_dir.join(format!("table_{mode}.mwst"))
}

pub fn cmd_table(config: &RunConfig, modes: &[Mode]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for &mode in modes {
        let table = SlitTable::build(&config.geometry, config.grid, mode)?;
        let path = table_path(config, mode);
        table.save(&path)?;
        println!(
            "{mode} table: {} widths x {} points -> {}",
            table.n_widths(),
            config.grid.len(),
            path.display()
        );
        paths.push(path);
    }
    Ok(paths)
}

/// Loads the cached table for the configured mode if it matches, else builds one.
fn propagator(config: &RunConfig) -> Result<Propagator> {
    let path = table_path(config, config.mode);
    let table = match SlitTable::load_expecting(&path, &config.geometry, config.grid, config.mode) {
        Ok(t) => t,
        Err(_) => SlitTable::build(&config.geometry, config.grid, config.mode)?,
    };
    Ok(Propagator::from_table(table))
}

pub fn cmd_dataset(config: &RunConfig) -> Result<()> {
    let prop = propagator(config)?;
    let dir = &config.out_dir;
    let binary = BufWriter::new(fs::File::create(dir.join("dataset.mwld"))?);
    let text = BufWriter::new(fs::File::create(dir.join("dataset.jsonl"))?);
    let mut sink = (MwldWriter::new(binary), JsonLinesWriter::new(text));
    let summary = generate_dataset(
        config.dataset_count,
        &prop,
        config.seed,
        config.dataset_features,
        &mut sink,
    )?;
    let split = split_indices(config.dataset_count, config.seed);
    for (name, idx) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        let body: String = idx.iter().map(|i| format!("{i}\n")).collect();
        fs::write(dir.join(format!("split_{name}.txt")), body)?;
    }
    let report = format!(
        "records\t{}\nresampled_all_closed\t{}\nopen_fraction\t{:.6}\nsha256\t{}\n",
        summary.count,
        summary.resampled,
        summary.open_sections as f64 / (summary.count.max(1) * config.geometry.n_sections) as f64,
        summary.checksum_hex()
    );
    fs::write(dir.join("dataset_summary.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn pattern_plot(title: &str, series: &[(&str, &IntensityPattern, &str)]) -> String {
    let xs: Vec<Vec<f64>> = series
        .iter()
        .map(|(_, p, _)| p.grid.positions().iter().map(|r| r * 1e6).collect())
        .collect();
    let s: Vec<Series<'_>> = series
        .iter()
        .zip(&xs)
        .map(|((label, p, color), x)| Series {
            label,
            x,
            y: &p.values,
            color,
        })
        .collect();
    line_chart(title, "r (µm)", "P(r) / max", &s)
}

pub fn cmd_forward(config: &RunConfig, mask: &str) -> Result<PathBuf> {
    let mask: Mask = mask
        .parse()
        .map_err(|e| Error::config(format!("mask: {e}")))?;
    if mask.len() != config.geometry.n_sections {
        return Err(Error::config(format!(
            "mask has {} sections, configuration expects {}",
            mask.len(),
            config.geometry.n_sections
        )));
    }
    if mask.is_all_closed() {
        return Err(Error::config(
            "mask has no open section; its pattern is undefined",
        ));
    }
    let pattern = crate::forward::forward(&mask, config.grid, &config.geometry, config.mode, None)?;
    let path = config.out_dir.join(format!("pattern_{}.txt", config.mode));
    write_pattern(&path, &pattern)?;
    fs::write(
        config.out_dir.join(format!("pattern_{}.svg", config.mode)),
        pattern_plot(
            &format!("{} pattern of {mask}", config.mode),
            &[("P(r)", &pattern, "#1f77b4")],
        ),
    )?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn read_target(path: &Path) -> Result<IntensityPattern> {
    read_pattern(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("target {}: {io}", path.display()),
        )),
        other => other,
    })
}

pub fn cmd_solve(config: &RunConfig, target: &Path, seed_masks: Option<&Path>) -> Result<()> {
    let target = read_target(target)?;
    if target.grid != config.grid {
        return Err(Error::config(
            "target pattern grid differs from the configured grid",
        ));
    }
    let prop = propagator(config)?;
    let n = config.geometry.n_sections;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = match seed_masks {
        Some(path) => {
            let seeds = read_masks(path)?;
            let seed = seeds
                .first()
                .ok_or_else(|| Error::Parse(format!("{} contains no masks", path.display())))?;
            if seed.len() != n {
                return Err(Error::config(format!(
                    "seed mask has {} sections, configuration expects {n}",
                    seed.len()
                )));
            }
            seed_population(seed, &config.ga, &mut rng)?
        }
        None => random_population(n, &config.ga, &mut rng),
    };
    let run = evolve(&target, initial, &config.ga, &prop)?;
    let best = run.best_mask();
    let best_pattern = prop.pattern(best)?;
    let mse = error_mse(&target, &best_pattern)?;

    let dir = &config.out_dir;
    fs::write(dir.join("best_mask.txt"), format!("{best}\n"))?;
    fs::write(dir.join("trace.tsv"), run.trace_text())?;
    write_pattern(dir.join("best_pattern.txt"), &best_pattern)?;
    let gens: Vec<f64> = (0..run.best_fitness_trace.len())
        .map(|g| g as f64)
        .collect();
    let log_best: Vec<f64> = run.best_fitness_trace.iter().map(|f| f.log10()).collect();
    let log_mean: Vec<f64> = run.mean_fitness_trace.iter().map(|f| f.log10()).collect();
    fs::write(
        dir.join("trace.svg"),
        line_chart(
            "fitness per generation",
            "generation",
            "log10 F",
            &[
                Series {
                    label: "best",
                    x: &gens,
                    y: &log_best,
                    color: "#d62728",
                },
                Series {
                    label: "mean",
                    x: &gens,
                    y: &log_mean,
                    color: "#7f7f7f",
                },
            ],
        ),
    )?;
    fs::write(
        dir.join("solve_pattern.svg"),
        pattern_plot(
            "target vs best mask",
            &[
                ("target", &target, "#2ca02c"),
                ("best", &best_pattern, "#d62728"),
            ],
        ),
    )?;
    println!(
        "best mask {best}\nfitness {:e} after {} generations, pattern error {mse:e}",
        run.best_fitness(),
        run.generations_run()
    );
    Ok(())
}

fn sections_of(nm: f64, what: &str, config: &RunConfig) -> Result<usize> {
    let units = nm * 1e-9 / config.geometry.section_width;
    let n = units.round();
    if n < 0.0 || (units - n).abs() > 1e-6 {
        return Err(Error::config(format!(
            "{what} {nm} nm is not a whole number of {} nm sections",
            config.geometry.section_width * 1e9
        )));
    }
    Ok(n as usize)
}

/// Two equal openings centred on the mask.
pub fn double_slit_mask(config: &RunConfig, width_nm: f64, gap_nm: f64) -> Result<Mask> {
    let n = config.geometry.n_sections;
    let w = sections_of(width_nm, "width", config)?;
    let g = sections_of(gap_nm, "gap", config)?;
    if w == 0 || 2 * w + g > n {
        return Err(Error::config(format!(
            "a {width_nm}/{gap_nm}/{width_nm} nm double slit does not fit the mask"
        )));
    }
    let start = (n - 2 * w - g) / 2;
    let mut mask = Mask::closed(n);
    for i in (start..start + w).chain(start + w + g..start + 2 * w + g) {
        mask.sections_mut()[i] = true;
    }
    Ok(mask)
}

/// Highest value within 1.5..2.5 fringe periods over the highest within half a period.
fn second_order_ratio(pattern: &IntensityPattern, period: f64) -> f64 {
    let mut central = 0.0f64;
    let mut second = 0.0f64;
    for (r, v) in pattern.grid.positions().into_iter().zip(&pattern.values) {
        let u = r.abs() / period;
        if u < 0.5 {
            central = central.max(*v);
        } else if (1.5..=2.5).contains(&u) {
            second = second.max(*v);
        }
    }
    second / central
}

pub fn cmd_double_slit(config: &RunConfig, width_nm: f64, gap_nm: f64, solve: bool) -> Result<()> {
    let mask = double_slit_mask(config, width_nm, gap_nm)?;
    let g = &config.geometry;
    let period = g.wavelength * g.screen_distance / ((width_nm + gap_nm) * 1e-9);
    let dir = &config.out_dir;
    let mut patterns = Vec::new();
    for mode in [Mode::Matter, Mode::Em] {
        let p = crate::forward::forward(&mask, config.grid, g, mode, None)?;
        write_pattern(dir.join(format!("double_slit_{mode}.txt")), &p)?;
        println!(
            "{mode}: second order / central peak {:.4e}",
            second_order_ratio(&p, period)
        );
        patterns.push(p);
    }
    fs::write(
        dir.join("double_slit.svg"),
        pattern_plot(
            &format!("{width_nm}/{gap_nm}/{width_nm} nm double slit {mask}"),
            &[
                ("matter", &patterns[0], "#1f77b4"),
                ("em", &patterns[1], "#ff7f0e"),
            ],
        ),
    )?;
    println!("mask {mask}");
    if solve {
        cmd_solve(
            config,
            &dir.join(format!("double_slit_{}.txt", config.mode)),
            None,
        )?;
    }
    Ok(())
}

/// Ground-truth masks of the benchmark, a deterministic function of the seed.
pub fn bench_truths(config: &RunConfig) -> Vec<Mask> {
    (0..config.bench_targets)
        .map(|i| {
            record_mask(
                config.seed ^ 0xB3C4_0000,
                i as u64,
                config.geometry.n_sections,
            )
            .0
        })
        .collect()
}

pub fn cmd_bench(config: &RunConfig, seed_masks: Option<&Path>) -> Result<()> {
    let prop = propagator(config)?;
    let n = config.geometry.n_sections;
    let truths = bench_truths(config);
    let targets = truths
        .iter()
        .map(|m| prop.pattern(m))
        .collect::<Result<Vec<_>>>()?;

    let dir = &config.out_dir;
    {
        use crate::dataset::{DatasetRecord, RecordSink};
        let mut w = JsonLinesWriter::new(BufWriter::new(fs::File::create(
            dir.join("bench_targets.jsonl"),
        )?));
        for (mask, pattern) in truths.iter().zip(&targets) {
            w.record(&DatasetRecord {
                mask: mask.clone(),
                pattern: pattern.clone(),
                features: None,
            })?;
        }
        w.finish()?;
    }

    let seeds = match seed_masks {
        Some(path) => {
            let mut masks = read_masks(path)?;
            if masks.len() < truths.len() {
                return Err(Error::config(format!(
                    "{} holds {} masks, the benchmark has {} targets",
                    path.display(),
                    masks.len(),
                    truths.len()
                )));
            }
            masks.truncate(truths.len());
            if let Some(m) = masks.iter().find(|m| m.len() != n) {
                return Err(Error::config(format!(
                    "seed mask {m} does not have {n} sections"
                )));
            }
            masks
        }
        None => {
            // Without external predictions, stand in with perturbed ground truth.
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(7);
            truths
                .iter()
                .map(|t| {
                    let mut m = t.clone();
                    resample_genes(&mut m, config.ga.seed_mutations, &mut rng);
                    m
                })
                .collect()
        }
    };
    fs::write(dir.join("bench_seeds.txt"), masks_to_text(&seeds))?;

    let mut ga = config.ga.clone();
    ga.fitness_threshold = None;
    let stats = compare_seeding(
        &targets,
        &Seeding::Masks(seeds),
        &Seeding::Random,
        &ga,
        config.bench_repeats,
        &prop,
    )?;
    fs::write(dir.join("bench.tsv"), bench_table_text(&stats))?;
    let gens: Vec<f64> = stats.iter().map(|s| s.generation as f64).collect();
    let mean: Vec<f64> = stats.iter().map(|s| s.mean_percent).collect();
    let upper: Vec<f64> = stats
        .iter()
        .map(|s| s.mean_percent + s.band_4sigma)
        .collect();
    let lower: Vec<f64> = stats
        .iter()
        .map(|s| s.mean_percent - s.band_4sigma)
        .collect();
    fs::write(
        dir.join("bench.svg"),
        line_chart(
            "seeded vs random initial population",
            "generation",
            "mean difference (%)",
            &[
                Series {
                    label: "mean",
                    x: &gens,
                    y: &mean,
                    color: "#1f77b4",
                },
                Series {
                    label: "+4σ",
                    x: &gens,
                    y: &upper,
                    color: "#aec7e8",
                },
                Series {
                    label: "-4σ",
                    x: &gens,
                    y: &lower,
                    color: "#aec7e8",
                },
            ],
        ),
    )?;
    if let Some(last) = stats.last() {
        println!(
            "generation {}: seeded {:e}, random {:e}, difference {:.3}% ± {:.3}% (4σ)",
            last.generation,
            last.seeded_mean,
            last.baseline_mean,
            last.mean_percent,
            last.band_4sigma
        );
    }
    Ok(())
}
