#![allow(dead_code)]

use std::f64::consts::PI;

use mwlith::ga::{evolve, random_population, GaConfig, GaRun};
use mwlith::mask::mask_to_openings;
use mwlith::spectrum::{em_pattern_spectrum, spectrum_kinks};
use mwlith::{field, DetectorGrid, GeometryConfig, IntensityPattern, Mask, Mode, Propagator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

pub const C3: f64 = 1e-48;
pub const HE_MASS: f64 = 6.646_477e-27;

pub fn helium() -> GeometryConfig {
    GeometryConfig::helium_sin_membrane(C3, HE_MASS)
}

pub fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Mask {
    loop {
        let m = Mask::new((0..n).map(|_| rng.gen::<bool>()).collect());
        if !m.is_all_closed() {
            return m;
        }
    }
}

pub fn mask_from_sections(n: usize, open: &[usize]) -> Mask {
    let mut m = Mask::closed(n);
    for &i in open {
        m.sections_mut()[i] = true;
    }
    m
}

/// Two 8 nm openings separated by an 8 nm wall, centred on a 50-section mask.
pub fn double_slit_8_8_8() -> Mask {
    mask_from_sections(50, &[22, 23, 26, 27])
}

/// EM pattern written out directly: ψ(q) = Σ e^{-iq xₙ} dₙ sinc(q dₙ / 2), q = k₀ r / L₂.
pub fn em_oracle_pattern(mask: &Mask, grid: DetectorGrid, g: &GeometryConfig) -> Vec<f64> {
    let n = mask.len();
    let w = g.section_width;
    let mut slits = Vec::new();
    let mut i = 0;
    while i < n {
        if mask.sections()[i] {
            let start = i;
            while i < n && mask.sections()[i] {
                i += 1;
            }
            let left = -(n as f64) * w / 2.0 + start as f64 * w;
            let right = -(n as f64) * w / 2.0 + i as f64 * w;
            slits.push((0.5 * (left + right), right - left));
        } else {
            i += 1;
        }
    }
    let k0 = 2.0 * PI / g.wavelength;
    let raw: Vec<f64> = grid
        .positions()
        .into_iter()
        .map(|r| {
            let q = k0 * r / g.screen_distance;
            let psi: Complex64 = slits
                .iter()
                .map(|&(x, d)| {
                    let y = q * d / 2.0;
                    let s = if y == 0.0 { 1.0 } else { y.sin() / y };
                    Complex64::from_polar(d * s, -q * x)
                })
                .sum();
            psi.norm_sqr()
        })
        .collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    raw.into_iter().map(|v| v / peak).collect()
}

/// `max |a - b| / max |b|`.
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

pub struct SpectrumCheck {
    pub bin_width: f64,
    /// Expected kink bins (fractional) with κ ≥ 0 below Nyquist.
    pub expected: Vec<f64>,
    /// Bins where the sampled spectrum's second difference peaks.
    pub detected: Vec<usize>,
    /// Largest distance, in bins, from an expected kink to the nearest detection
    /// and from a detection to the nearest expected kink.
    pub worst_offset: f64,
    /// Pearson correlation of closed-form and sampled spectra over the one-sided bins.
    pub correlation: f64,
}

/// FFT of the raw EM intensity of `mask` sampled on `n` points over a span
/// of `span` metres, compared with the closed-form spectrum.
pub fn spectrum_check(mask: &Mask, g: &GeometryConfig, span: f64, n: usize) -> SpectrumCheck {
    let grid = DetectorGrid::new(span / 2.0, n + 1).unwrap();
    let dr = grid.spacing();
    let raw = field(mask, grid, g, Mode::Em, None).unwrap().intensity();
    let mut buf: Vec<Complex64> = raw.values[..n]
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // grid starts at -span/2, so the shift theorem contributes (-1)^k
    let half = n / 2;
    let sampled: Vec<f64> = (0..=half)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * buf[k].re * dr
        })
        .collect();
    let bin_width = 1.0 / span;
    let openings = mask_to_openings(mask, g).unwrap();
    let closed: Vec<f64> = (0..=half)
        .map(|k| em_pattern_spectrum(&openings, k as f64 * bin_width, g).unwrap())
        .collect();

    let at = |k: isize| sampled[k.unsigned_abs()];
    let second: Vec<f64> = (0..half as isize)
        .map(|k| (at(k - 1) - 2.0 * at(k) + at(k + 1)).abs())
        .collect();
    let top = second.iter().cloned().fold(0.0, f64::max);
    let detected: Vec<usize> = (0..second.len())
        .filter(|&k| {
            let left = if k == 0 { second[1] } else { second[k - 1] };
            let right = second.get(k + 1).copied().unwrap_or(0.0);
            second[k] > 0.05 * top && second[k] >= left && second[k] >= right
        })
        .collect();
    let expected: Vec<f64> = spectrum_kinks(&openings, g)
        .into_iter()
        .map(|k| k.kappa / bin_width)
        .filter(|&b| b >= -1e-9 && b < half as f64 - 1.0)
        .collect();
    let nearest = |x: f64, set: &mut dyn Iterator<Item = f64>| {
        set.map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min)
    };
    let mut worst = 0.0f64;
    for &e in &expected {
        worst = worst.max(nearest(e, &mut detected.iter().map(|&d| d as f64)));
    }
    for &d in &detected {
        worst = worst.max(nearest(d as f64, &mut expected.iter().copied()));
    }
    SpectrumCheck {
        bin_width,
        expected,
        detected,
        worst_offset: worst,
        correlation: pearson(&closed, &sampled),
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Smallest summed absolute deviation from `target` over all 2ⁿ masks.
pub fn exhaustive_minimum(target: &IntensityPattern, prop: &Propagator) -> (f64, Vec<Mask>) {
    use rayon::prelude::*;
    let n = prop.geometry().n_sections;
    let devs: Vec<f64> = (0u64..1 << n)
        .into_par_iter()
        .map(|bits| {
            let m = Mask::new((0..n).map(|i| bits >> i & 1 == 1).collect());
            prop.deviation(&m, target).unwrap()
        })
        .collect();
    let best = devs.iter().cloned().fold(f64::INFINITY, f64::min);
    let winners = devs
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == best)
        .map(|(bits, _)| Mask::new((0..n).map(|i| bits >> i & 1 == 1).collect()))
        .collect();
    (best, winners)
}

pub fn random_init_run(target: &IntensityPattern, prop: &Propagator, config: &GaConfig) -> GaRun {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0x5EED);
    let initial = random_population(prop.geometry().n_sections, config, &mut rng);
    evolve(target, initial, config, prop).unwrap()
}

pub fn non_decreasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0])
}
