use std::f64::consts::PI;

use mwlith::geometry::HBAR;
use mwlith::physics::{
    dispersion_phase, single_slit_field, single_slit_field_mw, transmitted_power,
};
use mwlith::{
    abs_deviation, field, fitness, forward, DetectorGrid, GeometryConfig, Mask, Mode, Propagator,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C3: f64 = 1e-48;
const HE_MASS: f64 = 6.646_477e-27;

fn helium() -> GeometryConfig {
    GeometryConfig::helium_sin_membrane(C3, HE_MASS)
}

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Mask {
    loop {
        let m = Mask::new((0..n).map(|_| rng.gen::<bool>()).collect());
        if !m.is_all_closed() {
            return m;
        }
    }
}

fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// ∫ d³s |s - r|⁻⁶ over a half-space whose surface lies a distance `a` from r,
/// done numerically: plane integral in polar form, then the normal direction.
fn half_space_integral(a: f64) -> f64 {
    let plane = |u: f64| {
        // ρ = u·w/(1-w)
        2.0 * PI
            * simpson(800, 0.0, 1.0 - 1e-9, |w| {
                let rho = u * w / (1.0 - w);
                let drho = u / ((1.0 - w) * (1.0 - w));
                rho * drho / (u * u + rho * rho).powi(3)
            })
    };
    // u = a / v
    simpson(800, 1e-6, 1.0, |v| {
        let u = a / v;
        plane(u) * a / (v * v)
    })
}

#[test]
fn phase_magnitude_matches_volume_integral_of_the_pair_potential() {
    let g = helium();
    let d = 12e-9;
    for x in [0.0, 1.5e-9, 3.0e-9, 4.5e-9] {
        let a = d / 2.0 - x;
        let b = d / 2.0 + x;
        // two walls of a slab of thickness t; the line integral along z of the
        // slab potential is t times the half-space potential
        let line_integral = -9.0 * C3 / PI
            * g.membrane_thickness
            * (half_space_integral(a) + half_space_integral(b));
        let oracle = -HE_MASS * g.wavelength / (2.0 * PI * HBAR * HBAR) * line_integral;
        let got = dispersion_phase(x, d, &g).unwrap();
        let rel = (got.abs() - oracle.abs()).abs() / oracle.abs();
        assert!(
            rel < 1e-2,
            "x = {x:e}: |φ| {} vs oracle {} (rel {rel:e})",
            got.abs(),
            oracle.abs()
        );
    }
}

fn oracle_phase(x: f64, d: f64, g: &GeometryConfig) -> f64 {
    -12.0
        * g.c3_coefficient
        * g.particle_mass
        * g.wavelength
        * g.membrane_thickness
        * d
        * (d * d + 12.0 * x * x)
        / (HBAR * HBAR * PI * (d + 2.0 * x).powi(3) * (d - 2.0 * x).powi(3))
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn oracle_slit(q: f64, d: f64, g: &GeometryConfig, tol: f64) -> Complex64 {
    let edge = d / 2.0 - g.width_reduction;
    let f = |x: f64| Complex64::from_polar(1.0, oracle_phase(x, d, g) + q * x);
    let (fa, fm, fb) = (f(-edge), f(0.0), f(edge));
    let whole = 2.0 * edge / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&f, -edge, edge, fa, fm, fb, whole, tol, 60)
}

#[test]
fn matter_single_slit_matches_adaptive_oracle() {
    let g = helium();
    let grid = DetectorGrid::new(15e-6, 41).unwrap();
    let beta = g.wavenumber() / g.screen_distance;
    for units in [1, 2, 3, 5, 8, 13, 25, 50] {
        let d = units as f64 * g.section_width;
        let got = single_slit_field_mw(d, grid, &g).unwrap();
        let scale = d - 2.0 * g.width_reduction;
        for (i, r) in grid.positions().into_iter().enumerate() {
            let want = oracle_slit(beta * r, d, &g, 1e-12 * scale);
            let err = (got.amplitudes[i] - want).norm();
            assert!(
                err <= 1e-8 * scale,
                "width {units} units, r = {r:e}: {} vs {want} (err {err:e})",
                got.amplitudes[i]
            );
        }
    }
}

#[test]
fn em_limit_matter_equals_em() {
    let mut g = helium();
    g.c3_coefficient = 0.0;
    g.width_reduction = 0.0;
    let grid = DetectorGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let mask = random_mask(&mut rng, g.n_sections);
        let mw = forward(&mask, grid, &g, Mode::Matter, None).unwrap();
        let em = forward(&mask, grid, &g, Mode::Em, None).unwrap();
        for (a, b) in mw.values.iter().zip(&em.values) {
            assert!(
                (a - b).abs() <= 1e-9 * b.abs().max(1e-300) || (a - b).abs() < 1e-15,
                "{a} vs {b}"
            );
        }
    }
}

#[test]
fn superposition_of_separated_openings_is_linear() {
    let g = helium();
    let grid = DetectorGrid::new(15e-6, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mode in [Mode::Matter, Mode::Em] {
        for _ in 0..5 {
            // alternate runs between A and B, keeping a closed section between any two runs
            let mut a = Mask::closed(g.n_sections);
            let mut b = Mask::closed(g.n_sections);
            let mut i = 0;
            let mut to_a = true;
            while i < g.n_sections {
                let len = rng.gen_range(1..=5).min(g.n_sections - i);
                let target = if to_a { &mut a } else { &mut b };
                for s in i..i + len {
                    target.sections_mut()[s] = true;
                }
                to_a = !to_a;
                i += len + rng.gen_range(1..=3);
            }
            let mut union = a.clone();
            for (u, &s) in union.sections_mut().iter_mut().zip(b.sections()) {
                *u |= s;
            }
            let fu = field(&union, grid, &g, mode, None).unwrap();
            let fa = field(&a, grid, &g, mode, None).unwrap();
            let fb = field(&b, grid, &g, mode, None).unwrap();
            let scale = fu.amplitudes.iter().fold(0.0f64, |m, c| m.max(c.norm()));
            for k in 0..grid.len() {
                let diff = (fu.amplitudes[k] - fa.amplitudes[k] - fb.amplitudes[k]).norm();
                assert!(diff <= 1e-13 * scale, "{mode}: point {k} off by {diff:e}");
            }
        }
    }
}

#[test]
fn mirror_symmetric_masks_give_even_patterns() {
    let g = helium();
    let grid = DetectorGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mode in [Mode::Matter, Mode::Em] {
        for _ in 0..5 {
            let half = random_mask(&mut rng, g.n_sections / 2);
            let mut sections = half.sections().to_vec();
            sections.extend(half.reversed().sections());
            let mask = Mask::new(sections);
            let p = forward(&mask, grid, &g, mode, None).unwrap();
            let n = p.len();
            for i in 0..n {
                let (a, b) = (p.values[i], p.values[n - 1 - i]);
                assert!(
                    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300),
                    "{mode}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn dispersion_phase_keeps_transmitted_power() {
    let mut g = helium();
    for units in 1..=50 {
        let d = units as f64 * g.section_width;
        g.width_reduction = 0.0;
        let full = transmitted_power(d, &g);
        assert!((full - d).abs() <= 1e-15 * d);
        g.c3_coefficient = 0.0;
        // |exp(iφ)|² is 1 only to rounding
        assert!((transmitted_power(d, &g) - full).abs() <= 1e-15 * d);
        g.c3_coefficient = C3;
    }
}

#[test]
fn table_and_direct_forward_agree() {
    let g = helium();
    let grid = DetectorGrid::new(15e-6, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for mode in [Mode::Matter, Mode::Em] {
        let prop = Propagator::new(&g, grid, mode).unwrap();
        for _ in 0..10 {
            let mask = random_mask(&mut rng, g.n_sections);
            let direct = forward(&mask, grid, &g, mode, None).unwrap();
            let tabled = prop.pattern(&mask).unwrap();
            assert_eq!(direct, tabled);
            let via = forward(&mask, grid, &g, mode, Some(prop.table())).unwrap();
            assert_eq!(via, tabled);
        }
    }
}

#[test]
fn single_slit_rows_are_even_in_r() {
    let g = helium();
    let grid = DetectorGrid::new(15e-6, 65).unwrap();
    for units in [3, 10, 31] {
        let f = single_slit_field(units as f64 * g.section_width, grid, &g, Mode::Matter).unwrap();
        let n = grid.len();
        for i in 0..n {
            assert_eq!(f.amplitudes[i], f.amplitudes[n - 1 - i]);
        }
    }
}

#[test]
fn fitness_argmax_is_deviation_argmin() {
    let g = helium();
    let grid = DetectorGrid::new(15e-6, 64).unwrap();
    let prop = Propagator::new(&g, grid, Mode::Matter).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let truth = random_mask(&mut rng, g.n_sections);
    let target = prop.pattern(&truth).unwrap();
    let mut candidates: Vec<Mask> = (0..40)
        .map(|_| random_mask(&mut rng, g.n_sections))
        .collect();
    for i in [0, 7, 19] {
        let mut m = truth.clone();
        m.sections_mut()[i] ^= true;
        if !m.is_all_closed() {
            candidates.push(m);
        }
    }
    let patterns: Vec<_> = candidates
        .iter()
        .map(|m| prop.pattern(m).unwrap())
        .collect();
    let by_fit = (0..patterns.len())
        .max_by(|&a, &b| {
            let fa = fitness(&target, &patterns[a], 1e-9).unwrap();
            let fb = fitness(&target, &patterns[b], 1e-9).unwrap();
            fa.total_cmp(&fb).then(b.cmp(&a))
        })
        .unwrap();
    let by_dev = (0..patterns.len())
        .min_by(|&a, &b| {
            let da = abs_deviation(&target, &patterns[a]).unwrap();
            let db = abs_deviation(&target, &patterns[b]).unwrap();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .unwrap();
    assert_eq!(by_fit, by_dev);
    let f_truth = fitness(&target, &target, 1e-9).unwrap();
    for p in &patterns {
        assert!(fitness(&target, p, 1e-9).unwrap() < f_truth);
    }
}
