//! Acceptance suite: one PASS/FAIL line per criterion, each with its pinned
//! tolerance and runtime limit. Exits nonzero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use diffract_core::analysis::{
    block_entropy, homometry_report, run_thinning_protocol, scaling_exponent, sign_symbols, ThinningProtocol,
    ThinningTolerances,
};
use diffract_core::autocorrelation::{autocorrelation, compare_autocorrelations, Normalization};
use diffract_core::diffraction::{
    bragg_amplitude, crystallographic_prediction, fold_diffraction, intensity_scan, wiener_khinchin, Estimator, KGrid,
    WkMode,
};
use diffract_core::generators::{
    bernoulli_lattice_gas, complement_in_lattice, fibonacci_model_set, motif_comb, random_sign_comb,
    rudin_shapiro_comb, substitution_chain, substitution_prefix, visible_points, CutProjectScheme, GeneratorSpec,
    MotifAtom, SubstitutionRule,
};
use diffract_core::golden::SQRT5;
use diffract_core::{AveragingRegion, Lattice, RegionKind, Support, WeightedPointSet, ZTau};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 1.618_033_988_749_895;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new(ok: bool, detail: impl Into<String>) -> Check {
        Check { ok, detail: detail.into() }
    }
}

/// All sub-checks of one criterion.
#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, ok: bool, detail: impl Into<String>) {
        self.0.push(Check::new(ok, detail));
    }
}

fn run(id: u32, title: &str, limit: Duration, body: impl FnOnce(&mut Checks)) -> bool {
    let start = Instant::now();
    let mut checks = Checks::default();
    body(&mut checks);
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let ok = in_time && checks.0.iter().all(|c| c.ok);
    println!(
        "{} criterion {id}: {title} [{:.2} s, limit {} s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    for c in &checks.0 {
        println!("    {} {}", if c.ok { "ok  " } else { "FAIL" }, c.detail);
    }
    if !in_time {
        println!("    FAIL runtime {:.2} s exceeds {} s", elapsed.as_secs_f64(), limit.as_secs());
    }
    ok
}

fn crystallographic(c: &mut Checks) {
    let n_target = 1e4;
    let z1 = Lattice::integer(1);
    let motif = [MotifAtom::new(vec![0.0], 1.0), MotifAtom::new(vec![0.5], 1.0)];
    let region = AveragingRegion::centered_box(2500.0, 1).unwrap();
    let set = motif_comb(&z1, &motif, &region).unwrap();
    let tol = 5.0 / set.len() as f64;
    let i1 = bragg_amplitude(&set, &region, &[1.0]).unwrap().norm_sqr();
    let i2 = bragg_amplitude(&set, &region, &[2.0]).unwrap().norm_sqr();
    c.push(set.len() as f64 == n_target, format!("Z with motif {{0, 1/2}}: N = {}", set.len()));
    c.push(i1 <= 1e-10, format!("|A(1)|² = {i1:.3e} ≤ 1e-10"));
    c.push((i2 - 4.0).abs() <= tol, format!("|A(2)|² = {i2:.15} vs 4 ± {tol:.1e}"));

    let lattice = Lattice::new(vec![vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let region = AveragingRegion::centered_box(70.0, 2).unwrap();
    let single = [MotifAtom::new(vec![0.0, 0.0], 1.0)];
    let set = motif_comb(&lattice, &single, &region).unwrap();
    let tol = 5.0 / set.len() as f64;
    let dual = lattice.dual();
    let mut worst: f64 = 0.0;
    for i in 0..20i64 {
        let k = dual.point(&[i % 5 - 2, i / 5 - 1]);
        let got = bragg_amplitude(&set, &region, &k).unwrap().norm_sqr();
        let want = crystallographic_prediction(&lattice, &single, &k).unwrap();
        worst = worst.max((got - 0.25).abs()).max((want - 0.25).abs());
    }
    c.push(
        worst <= tol,
        format!("basis [[2,0],[1,1]], N = {}: max |I − 0.25| over 20 dual points = {worst:.2e} ≤ {tol:.1e}", set.len()),
    );
}

fn periodicity(c: &mut Checks) {
    let z1 = Lattice::integer(1);
    let cases: Vec<(&str, WeightedPointSet, u64)> = vec![
        (
            "Bernoulli gas on Z",
            bernoulli_lattice_gas(&z1, 0.5, &AveragingRegion::interval(0.0, 8192.0).unwrap(), 21).unwrap(),
            256,
        ),
        ("visible points r = 200", visible_points(200.0).unwrap(), 64),
        ("Thue-Morse comb", substitution_prefix(&SubstitutionRule::thue_morse(), 8192).unwrap(), 256),
    ];
    for (name, set, steps) in cases {
        let lattice = set.lattice().unwrap().clone();
        let grid = KGrid::dual_span(&lattice, 2, steps).unwrap();
        let scan = intensity_scan(&set, set.region(), &grid, Estimator::Periodogram).unwrap();
        let bins = vec![steps as usize; set.dim()];
        let folded = fold_diffraction(&scan, &lattice.dual(), &bins).unwrap();
        let spread = folded.max_spread();
        c.push(
            spread <= 1e-9,
            format!("{name}: {} k over 2 domains, max per-bin spread {spread:.2e} ≤ 1e-9", scan.len()),
        );
    }
}

fn homometry_rs_coin(c: &mut Checks) {
    let n = 1 << 16;
    let rs = rudin_shapiro_comb(n).unwrap();
    let coin = random_sign_comb(n, 2024).unwrap();
    let report = homometry_report(&rs, &coin, rs.region(), 32.0, 0.03).unwrap();
    c.push(
        report.max_deviation <= 0.03,
        format!("RS vs coin, N = 2^16, z_max = 32: max |Δη| = {:.4} ≤ 0.03 ({})", report.max_deviation, report.verdict),
    );
    let h_rs = block_entropy(&sign_symbols(rs.weights()), 8).unwrap();
    let h_coin = block_entropy(&sign_symbols(coin.weights()), 8).unwrap();
    c.push(h_rs <= 0.05, format!("RS block entropy (length 8) = {h_rs:.4} bits/symbol ≤ 0.05"));
    c.push(h_coin >= 0.95, format!("coin block entropy (length 8) = {h_coin:.4} bits/symbol ≥ 0.95"));
}

fn homometry_complement(c: &mut Checks) {
    let z1 = Lattice::integer(1);
    let region = AveragingRegion::interval(0.0, 1e5).unwrap();
    let subset = bernoulli_lattice_gas(&z1, 0.5, &region, 99).unwrap();
    let comp = complement_in_lattice(&subset, &z1, &region).unwrap();
    let report = homometry_report(&subset, &comp, &region, 32.0, 0.01).unwrap();
    c.push(
        report.max_deviation <= 0.01,
        format!(
            "subset ({}) vs complement ({}), N = 1e5, z_max = 32: max |Δη| = {:.4} ≤ 0.01",
            report.n_a, report.n_b, report.max_deviation
        ),
    );
}

fn thinning(c: &mut Checks) {
    let set = fibonacci_model_set(&CutProjectScheme::default(), 0.0, 1e4).unwrap();
    let seeds: Vec<u64> = (1..=10).collect();
    let (r, _) =
        run_thinning_protocol(&set, 0.7, &seeds, &ThinningProtocol::default(), ThinningTolerances::default()).unwrap();
    for (j, pk) in r.peaks.iter().enumerate() {
        let dev = (r.ratio_mean[j] - 0.49).abs();
        c.push(dev <= 0.05, format!("peak k = {:.6}: mean ratio {:.4} vs 0.49 ± 0.05", pk.k[0], r.ratio_mean[j]));
    }
    c.push(r.peaks.len() == 3, format!("{} nonzero peaks tracked", r.peaks.len()));
    c.push(
        r.relative_max_change <= 0.10,
        format!("relative peak intensities change by at most {:.4} ≤ 0.10", r.relative_max_change),
    );
    let want = 0.7 * 0.3 * TAU / SQRT5;
    let rel = (r.background_diffuse_mean - want).abs() / want;
    c.push(
        rel <= 0.20,
        format!("diffuse background {:.4} vs {want:.4} ± 20% (off by {:.1}%)", r.background_diffuse_mean, 100.0 * rel),
    );
}

fn scaling(c: &mut Checks) {
    let sizes: Vec<usize> = (10..=18).map(|e| 1usize << e).collect();
    let comb = scaling_exponent(&GeneratorSpec::LatticeComb { lattice: Lattice::integer(1) }, &[1.0], &sizes).unwrap();
    c.push((comb.beta - 1.0).abs() <= 0.02, format!("Z comb, k = 1: β = {:.4} vs 1.00 ± 0.02", comb.beta));
    let generic = std::f64::consts::SQRT_2 - 1.0;
    let rs = scaling_exponent(&GeneratorSpec::RudinShapiro, &[generic], &sizes).unwrap();
    c.push(rs.beta.abs() <= 0.15, format!("Rudin-Shapiro, k = √2 − 1: β = {:.4}, |β| ≤ 0.15", rs.beta));
    let tm = GeneratorSpec::Substitution { rule: SubstitutionRule::thue_morse() };
    let tm = scaling_exponent(&tm, &[1.0 / 3.0], &sizes).unwrap();
    c.push((0.45..=0.75).contains(&tm.beta), format!("Thue-Morse, k = 1/3: β = {:.4} ∈ [0.45, 0.75]", tm.beta));
}

fn enclosing_ball(set: &WeightedPointSet) -> AveragingRegion {
    let reach = set.region().bounds().iter().map(|(l, h)| l.abs().max(h.abs()).powi(2)).sum::<f64>().sqrt();
    AveragingRegion::new(RegionKind::Ball, reach + 1.0, set.dim()).unwrap()
}

fn oracle_equivalence(c: &mut Checks) {
    let mut bad = Vec::new();
    let zoo = common::generator_zoo(2000);
    for (name, set, z_max) in &zoo {
        for norm in [Normalization::Eq1Literal, Normalization::BoundaryCorrected] {
            let fast = autocorrelation(set, set.region(), *z_max, norm).unwrap();
            let slow = common::naive_autocorrelation(set, set.region(), *z_max, norm);
            let same = fast.coefficients.len() == slow.len()
                && fast.coefficients.iter().zip(&slow).all(|(a, b)| a.0 == b.0 && a.1 == b.1);
            if !same {
                bad.push(format!("{name}/{}", norm.name()));
            }
        }
    }
    c.push(
        bad.is_empty(),
        format!("{} sets (all generators), N ≤ 2000: coefficients bit-identical to the double loop {bad:?}", zoo.len()),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut worst: f64 = 0.0;
    let zoo = common::generator_zoo(4096);
    for (_, set, _) in &zoo {
        assert!(set.len() <= 4096);
        let region = enclosing_ball(set);
        let est = autocorrelation(set, &region, 2.0 * region.radius, Normalization::Eq1Literal).unwrap();
        let ks: Vec<Vec<f64>> =
            (0..64).map(|_| (0..set.dim()).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let grid = KGrid::from_points(ks).unwrap();
        let wk = wiener_khinchin(&est, &grid, WkMode::Exact).unwrap();
        let pg = intensity_scan(set, &region, &grid, Estimator::Periodogram).unwrap();
        for (a, b) in wk.intensities.iter().zip(&pg.intensities) {
            worst = worst.max((a - b).abs());
        }
    }
    c.push(
        worst <= 1e-9,
        format!("exact Wiener-Khinchin vs periodogram, {} sets, 64 random k: max |Δ| = {worst:.2e} ≤ 1e-9", zoo.len()),
    );
}

fn model_sets(c: &mut Checks) {
    let set = fibonacci_model_set(&CutProjectScheme::default(), 0.0, 1e4).unwrap();
    let Support::Golden(pts) = set.support() else { unreachable!("model sets are golden") };
    let gaps_ok = pts.windows(2).all(|w| {
        let g = w[1] - w[0];
        g == ZTau::ONE || g == ZTau::TAU
    });
    c.push(gaps_ok, format!("{} gaps of the model set on [0, 1e4) all exactly 1 or τ in Z[τ]", pts.len() - 1));
    let dens = set.density();
    let want = TAU / SQRT5;
    c.push((dens - want).abs() <= 0.002, format!("density {dens:.5} vs τ/√5 = {want:.5} ± 0.002"));

    let chain = substitution_chain(&SubstitutionRule::fibonacci(), 1e4).unwrap();
    let region = AveragingRegion::interval(0.0, 1e4).unwrap();
    let a = autocorrelation(&set, &region, 10.0, Normalization::BoundaryCorrected).unwrap();
    let b = autocorrelation(&chain, &region, 10.0, Normalization::BoundaryCorrected).unwrap();
    let dev = compare_autocorrelations(&a, &b).unwrap();
    c.push(
        dev <= 0.01,
        format!("substitution vs cut-and-project autocorrelation, |z| ≤ 10: max |Δη| = {dev:.2e} ≤ 0.01"),
    );

    let vis = visible_points(500.0).unwrap();
    c.push(
        (vis.density() - 0.6079).abs() <= 0.005,
        format!("visible points r = 500: density {:.5} vs 0.6079 ± 0.005", vis.density()),
    );
}

const BIN: &str = env!("CARGO_BIN_EXE_diffract");

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn determinism(c: &mut Checks) {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let steps: &[(&str, &[&str], &[&str])] = &[
        ("gas", &["generate", "gas", "--p", "0.3", "--r", "2000", "--seed", "42"], &["points.csv"]),
        ("coin", &["generate", "coin", "--n", "20000", "--seed", "7"], &["points.csv"]),
        ("fib", &["generate", "fibonacci", "--x-max", "5000"], &["points.csv"]),
        ("thinned", &["generate", "thin", "--input", "fib/points.csv", "--p", "0.7", "--seed", "3"], &["points.csv"]),
        ("ac", &["autocorr", "--points", "thinned/points.csv", "--z-max", "40"], &["autocorr.csv"]),
        ("scan", &["diffract", "--points", "gas/points.csv", "--dual-domains", "2"], &["scan.csv"]),
        ("fold", &["fold", "--scan", "scan/scan.csv"], &["folded.csv"]),
        ("peaks", &["peaks", "--points", "thinned/points.csv", "--k-hi", "2", "--steps", "4000"], &["peaks.csv"]),
        ("thin", &["thin", "--points", "fib/points.csv", "--p", "0.7", "--seeds", "1-4"], &["thinning.csv"]),
        ("scaling", &["scaling", "coin", "--k", "0.3", "--seed", "5", "--max-exp", "14"], &["scaling.csv"]),
        ("homometry", &["homometry", "--a", "coin/points.csv", "--b", "coin/points.csv"], &["homometry.csv"]),
    ];
    for (name, args, files) in steps {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", name]);
        if let Err(e) = cli(d, &full) {
            c.push(false, e);
            continue;
        }
        let manifest = format!("{name}/manifest.json");
        let mut identical = true;
        for (tag, extra) in [("rerun", &[][..]), ("rerun8", &["--threads", "8"][..])] {
            let out = format!("{name}-{tag}");
            let mut args = vec!["rerun", manifest.as_str(), "--out", out.as_str()];
            args.extend(extra);
            if let Err(e) = cli(d, &args) {
                c.push(false, e);
                identical = false;
                continue;
            }
            for f in *files {
                let a = std::fs::read(d.join(name).join(f)).unwrap();
                let b = std::fs::read(d.join(&out).join(f)).unwrap();
                identical &= a == b;
            }
        }
        c.push(identical, format!("{name}: rerun from manifest and with --threads 8 byte-identical"));
    }
}

fn main() {
    let results = [
        run(1, "crystallographic Bragg law", Duration::from_secs(10), crystallographic),
        run(2, "dual-lattice periodicity of the periodogram", Duration::from_secs(60), periodicity),
        run(3, "homometry: Rudin-Shapiro vs fair coin", Duration::from_secs(30), homometry_rs_coin),
        run(4, "homometry: lattice subset vs complement", Duration::from_secs(30), homometry_complement),
        run(5, "Bernoulli thinning of the Fibonacci model set", Duration::from_secs(180), thinning),
        run(6, "spectral scaling trichotomy", Duration::from_secs(120), scaling),
        run(7, "oracle equivalence", Duration::from_secs(300), oracle_equivalence),
        run(8, "model-set structure", Duration::from_secs(60), model_sets),
        run(9, "determinism under rerun and --threads 8", Duration::from_secs(300), determinism),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
