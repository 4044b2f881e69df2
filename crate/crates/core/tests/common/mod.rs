//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use diffract_core::autocorrelation::{Displacement, Normalization};
use diffract_core::generators::{
    bernoulli_lattice_gas, bernoulli_thin, complement_in_lattice, fibonacci_model_set, lattice_comb, motif_comb,
    random_sign_comb, rudin_shapiro_comb, substitution_sequence, visible_points, CutProjectScheme, MotifAtom,
    SubstitutionRule,
};
use diffract_core::numeric::CompensatedSum;
use diffract_core::{AveragingRegion, Complex64, Lattice, Support, WeightedPointSet};

/// Textbook double loop over all ordered pairs of `S ∩ A`: outer index `i`,
/// inner index `j`, keyed by the exact difference `x_i − x_j`.
pub fn naive_autocorrelation(
    set: &WeightedPointSet,
    region: &AveragingRegion,
    z_max: f64,
    normalization: Normalization,
) -> BTreeMap<Displacement, Complex64> {
    let inside: Vec<usize> = (0..set.len()).filter(|&i| region.contains(&set.real_position(i))).collect();
    let w = set.weights();
    let mut acc: BTreeMap<Displacement, (CompensatedSum, Vec<f64>)> = BTreeMap::new();
    for &i in &inside {
        for &j in &inside {
            let (z, real) = match set.support() {
                Support::Lattice { lattice, coords } => {
                    let n = lattice.dim();
                    let d: Vec<i64> = (0..n).map(|a| coords[i * n + a] - coords[j * n + a]).collect();
                    let real = lattice.point(&d);
                    (Displacement::Lattice(d), real)
                }
                Support::Golden(p) => {
                    let d = p[i] - p[j];
                    (Displacement::Golden(d), vec![d.value()])
                }
                Support::Float { .. } => panic!("oracle needs exact positions"),
            };
            if real.iter().map(|v| v * v).sum::<f64>().sqrt() > z_max {
                continue;
            }
            let e = acc.entry(z).or_insert_with(|| (CompensatedSum::default(), real));
            e.0.add(w[i] * w[j].conj());
        }
    }
    acc.into_iter()
        .map(|(z, (s, real))| {
            let denom = match normalization {
                Normalization::Eq1Literal => region.volume(),
                Normalization::BoundaryCorrected => region.overlap_volume(&real).unwrap(),
            };
            (z, s.value() / denom)
        })
        .collect()
}

/// Brute-force periodogram `|Σ w e^{−2πi k·x}|² / vol` with plain
/// floating-point phases.
pub fn naive_periodogram(set: &WeightedPointSet, region: &AveragingRegion, k: &[f64]) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..set.len() {
        let x = set.real_position(i);
        if !region.contains(&x) {
            continue;
        }
        let theta: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
        s += set.weights()[i] * Complex64::from_polar(1.0, -std::f64::consts::TAU * theta);
    }
    s.norm_sqr() / region.volume()
}

/// One small instance of every generator, each with roughly `n` points,
/// paired with a cutoff suited to its dimension.
pub fn generator_zoo(n: usize) -> Vec<(&'static str, WeightedPointSet, f64)> {
    let z1 = Lattice::integer(1);
    let z2 = Lattice::integer(2);
    let side = (n as f64).sqrt() / 2.0;
    let box2 = AveragingRegion::centered_box(side.floor(), 2).unwrap();
    let line = AveragingRegion::interval(0.0, n as f64).unwrap();
    let gas = bernoulli_lattice_gas(&z2, 0.5, &box2, 17).unwrap();
    let fib_rule = SubstitutionRule::fibonacci();
    let tm = SubstitutionRule::thue_morse();
    let it_fib = fib_rule.iterations_for(n + 1).unwrap() - 1;
    let it_tm = tm.iterations_for(n + 1).unwrap() - 1;
    let motif = [MotifAtom::new(vec![0.0, 0.0], 1.0), MotifAtom::new(vec![1.0, 0.5], -1.0)];
    let model = fibonacci_model_set(&CutProjectScheme::default(), 0.0, 0.99 * n as f64 / 0.7236).unwrap();
    vec![
        ("lattice_comb", lattice_comb(&z2, &box2).unwrap(), 8.0),
        (
            "motif_comb",
            motif_comb(
                &Lattice::new(vec![vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap(),
                &motif,
                &AveragingRegion::centered_box(side.floor(), 2).unwrap(),
            )
            .unwrap(),
            6.0,
        ),
        ("substitution_fibonacci", substitution_sequence(&fib_rule, it_fib).unwrap(), 24.0),
        ("substitution_thue_morse", substitution_sequence(&tm, it_tm).unwrap(), 32.0),
        ("rudin_shapiro", rudin_shapiro_comb(n).unwrap(), 32.0),
        ("coin", random_sign_comb(n, 4).unwrap(), 32.0),
        ("fibonacci_model_set", model.clone(), 24.0),
        ("visible", visible_points((0.99 * n as f64 / 1.9).sqrt()).unwrap(), 8.0),
        ("bernoulli_gas", gas.clone(), 8.0),
        ("bernoulli_thin", bernoulli_thin(&model, 0.7, 9).unwrap(), 24.0),
        ("complement", complement_in_lattice(&gas, &z2, &box2).unwrap(), 8.0),
        ("integer_comb", lattice_comb(&z1, &line).unwrap(), 32.0),
    ]
}
