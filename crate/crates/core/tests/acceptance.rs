//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset,
//! e.g. `cargo test --test acceptance -- 1 8`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng as _;
use rand_distr::StandardNormal;

use mmicp::active::{run_active, ActiveConfig};
use mmicp::coverage::{run_coverage, CoverageConfig};
use mmicp::epu::Strategy;
use mmicp::imprecise::{mmi_regression, mmi_regression_grid, PlausibilityMeasure};
use mmicp::models::{gaussian_blobs, BlobSpec, LearnerKind};
use mmicp::oracle::{
    choquet_integral, generalised_hartley, ihdr_bruteforce, mmi_bruteforce_pi, mmi_bruteforce_tv, mobius_inverse,
    random_continuous_profile, random_dyadic_distribution, random_lattice_profile, Capacity,
};
use mmicp::rng;
use mmicp::scores::{RegressionPrediction, ScoreKind, ScoreSpec};
use mmicp::selective::{run_selective, synthetic_probabilities, SelectiveConfig, SyntheticSpec};
use mmicp::stats::{wilcoxon_exact, wilcoxon_normal, wilcoxon_signed_rank};
use mmicp::transducer::{CalibrationSet, RegressionTransducer};

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Consonant profile on a known lattice, for level grids.
fn lattice_profile(draws: &mut rng::Rng, labels: usize) -> (PlausibilityMeasure, usize) {
    let n_cal: usize = draws.random_range(1..=40);
    let m = (n_cal + 1) as f64;
    let mut pv: Vec<f64> = (0..labels).map(|_| draws.random_range(1..=n_cal + 1) as f64 / m).collect();
    pv[draws.random_range(0..labels)] = 1.0;
    (PlausibilityMeasure::from_pvalues(pv).unwrap(), n_cal)
}

fn random_profile(draws: &mut rng::Rng, case: usize) -> PlausibilityMeasure {
    let k = draws.random_range(2..=10);
    if case % 2 == 0 {
        random_lattice_profile(draws, k)
    } else {
        random_continuous_profile(draws, k)
    }
}

fn second_largest(pv: &[f64]) -> f64 {
    let mut v = pv.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v[1]
}

fn criterion_1() -> Check {
    let mut draws = rng::stream(1, "acceptance", 1);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let m = random_profile(&mut draws, case);
        let brute = mmi_bruteforce_tv(&m).map_err(|e| e.to_string())?;
        let closed = m.mmi_tv().map_err(|e| e.to_string())?;
        let err = (brute - closed).abs().max((brute - second_largest(m.pvalues())).abs());
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("profile {:?}: brute {brute} closed {closed}", m.pvalues()))?;
    }
    Ok(format!("1000 profiles, max error {worst:e}"))
}

fn criterion_2() -> Check {
    let mut draws = rng::stream(1, "acceptance", 2);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let m = random_profile(&mut draws, case);
        let closed = m.mmi_pi();
        let integral = m.mmi_pi_integral();
        let choquet = mmi_bruteforce_pi(&m).map_err(|e| e.to_string())?;
        let err = (integral - closed).abs().max((choquet - closed).abs()).max((choquet - integral).abs());
        worst = worst.max(err);
        ensure(err <= 1e-12, || {
            format!("profile {:?}: closed {closed} integral {integral} choquet {choquet}", m.pvalues())
        })?;
    }
    Ok(format!("1000 profiles, max error {worst:e}"))
}

fn criterion_3() -> Check {
    let mut draws = rng::stream(1, "acceptance", 3);
    let mut levels = 0;
    for _ in 0..500 {
        let k = draws.random_range(2..=10);
        let (m, n_cal) = lattice_profile(&mut draws, k);
        for j in 0..=n_cal {
            let alpha = j as f64 / (n_cal + 1) as f64;
            let greedy = m.ihdr(alpha).map_err(|e| e.to_string())?;
            let region = m.profile().prediction_set(alpha).map_err(|e| e.to_string())?.labels;
            let brute = ihdr_bruteforce(&m, alpha).map_err(|e| e.to_string())?;
            ensure(greedy == region, || format!("{:?} at {alpha}: ihdr {greedy:?} set {region:?}", m.pvalues()))?;
            ensure(greedy.len() == brute.len(), || {
                format!("{:?} at {alpha}: ihdr {greedy:?} minimal {brute:?}", m.pvalues())
            })?;
            ensure(m.lower_prob(&greedy) >= 1.0 - alpha - 1e-12, || {
                format!("{:?} at {alpha}: lower probability below 1 - alpha", m.pvalues())
            })?;
            levels += 1;
        }
    }
    Ok(format!("500 profiles, {levels} lattice levels"))
}

fn criterion_4() -> Check {
    let mut draws = rng::stream(1, "acceptance", 4);
    let mut worst_grid = 0.0f64;
    for n_cal in [1usize, 3, 10, 25] {
        let expected = (n_cal + 2) as f64 / (2 * (n_cal + 1)) as f64;
        let closed = mmi_regression(n_cal).map_err(|e| e.to_string())?;
        ensure((closed - expected).abs() <= 1e-12, || format!("n_cal={n_cal}: closed {closed} vs {expected}"))?;
        for kind in [ScoreKind::AbsResidual, ScoreKind::WeightedResidual, ScoreKind::Cqr] {
            for _ in 0..100 {
                let point: f64 = draws.random_range(-10.0..10.0);
                let weight: f64 = draws.random_range(0.2..3.0);
                let half: f64 = draws.random_range(0.0..2.0);
                let pred = RegressionPrediction::new(point, weight, point - half, point + half).map_err(|e| e.to_string())?;
                let raw: Vec<f64> = (0..n_cal)
                    .map(|_| match kind {
                        // keep calibration scores attainable by the test point
                        ScoreKind::Cqr => draws.random_range(-half..2.0),
                        _ => draws.random_range(0.0..3.0),
                    })
                    .collect();
                let cal = CalibrationSet::calibrate(&raw, 1e-9, draws.random()).map_err(|e| e.to_string())?;
                let t = RegressionTransducer::new(&cal, pred, ScoreSpec::new(kind)).map_err(|e| e.to_string())?;
                let grid = mmi_regression_grid(&t, 1001);
                worst_grid = worst_grid.max((grid - expected).abs());
                ensure((grid - expected).abs() <= 1e-3, || format!("{kind} n_cal={n_cal}: grid {grid} vs {expected}"))?;
            }
        }
    }
    let at1 = mmi_regression(1).map_err(|e| e.to_string())?;
    let at3 = mmi_regression(3).map_err(|e| e.to_string())?;
    ensure(at1 == 0.75 && at3 == 0.625, || format!("n=1: {at1}, n=3: {at3}"))?;
    let large = mmi_regression(10_000).map_err(|e| e.to_string())?;
    ensure((large - 0.5).abs() <= 1e-4, || format!("n=10^4: {large}"))?;
    Ok(format!("100 instances x 3 scores x 4 calibration sizes, max grid error {worst_grid:e}"))
}

fn criterion_5() -> Check {
    let config = CoverageConfig {
        n_cals: vec![20, 100],
        trials: 10_000,
        alphas: (1..=10).map(|i| i as f64 * 0.05).collect(),
        ..CoverageConfig::default()
    };
    let report = run_coverage(&config, 5).map_err(|e| e.to_string())?;
    ensure(report.consonance_violations == 0, || {
        format!("{} consonance violations", report.consonance_violations)
    })?;
    for r in &report.rows {
        ensure(r.coverage_ok && r.validity_ok, || format!("{r:?}"))?;
    }
    let min_margin = report
        .rows
        .iter()
        .map(|r| r.raw_coverage.min(r.consonant_coverage) - (1.0 - r.alpha - 3.0 * r.sigma))
        .fold(f64::INFINITY, f64::min);
    Ok(format!(
        "{} lattice comparisons ({} empty raw sets), min coverage slack {min_margin:.4}",
        report.lattice_checks, report.empty_raw_sets
    ))
}

fn criterion_6() -> Check {
    let mut draws = rng::stream(1, "acceptance", 6);
    for case in 0..500 {
        let m = random_profile(&mut draws, case);
        let k = m.labels();
        let lower = Capacity::lower_of(&m).map_err(|e| e.to_string())?;
        let masses = mobius_inverse(&lower).map_err(|e| e.to_string())?;
        ensure((masses.total() - 1.0).abs() <= 1e-12, || format!("{:?}: masses sum to {}", m.pvalues(), masses.total()))?;
        for focal in masses.focal_sets(1e-12) {
            // focal sets must be upper level sets {y : pi(y) >= t}
            let members: Vec<usize> = (0..k).filter(|y| focal >> y & 1 == 1).collect();
            let t = members.iter().map(|&y| m.pvalues()[y]).fold(f64::INFINITY, f64::min);
            let level: Vec<usize> = (0..k).filter(|&y| m.pvalues()[y] >= t).collect();
            ensure(members == level, || format!("{:?}: focal set {members:?} off the chain", m.pvalues()))?;
        }
        let rebuilt = masses.reconstruct();
        for mask in 0..(1u32 << k) {
            ensure((rebuilt[mask as usize] - lower.value(mask)).abs() <= 1e-12, || {
                format!("{:?}: reconstruction differs at {mask:b}", m.pvalues())
            })?;
        }
    }
    for k in 2..=10 {
        let gh = generalised_hartley(&Capacity::vacuous(k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(gh == (k as f64).log2(), || format!("GH(vacuous, K={k}) = {gh}"))?;
        for _ in 0..20 {
            let probs = random_dyadic_distribution(&mut draws, k);
            let additive = Capacity::additive(&probs).map_err(|e| e.to_string())?;
            let gh = generalised_hartley(&additive).map_err(|e| e.to_string())?;
            ensure(gh == 0.0, || format!("GH(precise {probs:?}) = {gh}"))?;
            let f: Vec<f64> = (0..k).map(|_| draws.random::<f64>()).collect();
            let choquet = choquet_integral(&additive, &f).map_err(|e| e.to_string())?;
            let dot: f64 = probs.iter().zip(&f).map(|(p, x)| p * x).sum();
            ensure((choquet - dot).abs() <= 1e-12, || format!("Choquet {choquet} vs expectation {dot}"))?;
        }
    }
    Ok("500 consonant profiles, K = 2..10 for Hartley and additive Choquet".into())
}

fn blob_spec() -> BlobSpec {
    BlobSpec {
        classes: 10,
        dim: 10,
        center_scale: 1.0,
        noise: 1.0,
    }
}

fn seeds() -> Vec<u64> {
    (0..10).map(|i| rng::derive_seed(0, "seed", i)).collect()
}

fn criterion_7a() -> Check {
    let config = ActiveConfig::default();
    let n = config.initial_train + config.pool_size + config.test_size;
    let mut means = Vec::new();
    let mut times = Vec::new();
    for strategy in [Strategy::MmiPi, Strategy::SetSize(0.01)] {
        let start = Instant::now();
        let mut finals = Vec::new();
        for seed in seeds() {
            let data = gaussian_blobs(blob_spec(), n, rng::derive_seed(seed, "data", 0)).map_err(|e| e.to_string())?;
            let run = run_active(&data, strategy, LearnerKind::softmax(), &config, seed).map_err(|e| e.to_string())?;
            finals.push(run.final_accuracy());
        }
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(300), || format!("{strategy} arm took {elapsed:?}"))?;
        means.push(finals.iter().sum::<f64>() / finals.len() as f64);
        times.push(elapsed);
    }
    ensure(means[0] >= means[1], || {
        format!("mean final accuracy mmi_pi {:.4} < set_size:0.01 {:.4}", means[0], means[1])
    })?;
    Ok(format!(
        "mean final accuracy mmi_pi {:.4} >= set_size:0.01 {:.4} (arms {:.0?}, {:.0?})",
        means[0], means[1], times[0], times[1]
    ))
}

fn criterion_7b() -> Check {
    let start = Instant::now();
    let strategies = [Strategy::MmiPi, Strategy::SetSize(0.3)];
    let mut sums = [0.0; 2];
    for seed in seeds() {
        let (probs, labels) = synthetic_probabilities(&SyntheticSpec::default(), seed).map_err(|e| e.to_string())?;
        let curves =
            run_selective(&probs, &labels, &strategies, &SelectiveConfig::default(), seed).map_err(|e| e.to_string())?;
        for (s, c) in sums.iter_mut().zip(&curves) {
            *s += c.auarc / 10.0;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    ensure(sums[0] >= sums[1], || format!("mean auarc mmi_pi {:.4} < set_size:0.3 {:.4}", sums[0], sums[1]))?;
    Ok(format!("mean auarc mmi_pi {:.4} >= set_size:0.3 {:.4} ({elapsed:.1?})", sums[0], sums[1]))
}

fn criterion_8() -> Check {
    let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[0.0; 6]).map_err(|e| e.to_string())?;
    ensure(r.p_value == 1.0 / 64.0, || format!("p = {} for six positive differences", r.p_value))?;
    let mut draws = rng::stream(1, "acceptance", 8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let shift: f64 = draws.random_range(-0.8..0.8);
        let a: Vec<f64> = (0..20).map(|_| draws.sample::<f64, _>(StandardNormal) + shift).collect();
        let b: Vec<f64> = (0..20).map(|_| draws.sample::<f64, _>(StandardNormal)).collect();
        let exact = wilcoxon_exact(&a, &b).map_err(|e| e.to_string())?;
        let normal = wilcoxon_normal(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((exact.p_value - normal.p_value).abs());
    }
    ensure(worst <= 0.01, || format!("exact vs normal differ by {worst}"))?;
    Ok(format!("p = 1/64 exactly; n=20 max |exact - normal| = {worst:.5}"))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_mmicp")
}

/// Every file under `path` (or the file itself), sorted by name.
fn snapshot(path: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    if path.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(path).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        entries.into_iter().flat_map(|p| snapshot(&p)).collect()
    } else {
        vec![(path.to_path_buf(), std::fs::read(path).unwrap())]
    }
}

fn run_cli(dir: &Path, args: &[String]) -> std::result::Result<(), String> {
    let out = Command::new(binary())
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    std::fs::write(d.join("cal.csv"), "0.7,0.2,0.1\n0.1,0.8,0.1\n0.3,0.3,0.4\n0.6,0.3,0.1\n0.2,0.2,0.6\n0.5,0.4,0.1\n0.4,0.4,0.2\n0.1,0.1,0.8\n").unwrap();
    std::fs::write(d.join("cal_labels.csv"), "0\n1\n2\n1\n2\n0\n0\n2\n").unwrap();
    std::fs::write(d.join("test.csv"), "0.5,0.3,0.2\n0.34,0.33,0.33\n0.05,0.9,0.05\n").unwrap();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<String>>();
    let small_selective = ["--seeds", "5", "--set", "n_train=150", "--set", "n_eval=400", "--set", "classes=4", "--set", "dim=3"];
    let commands: Vec<(Vec<String>, &str)> = vec![
        (s(&["calibrate", "--proba", "cal.csv", "--labels", "cal_labels.csv", "--set", "aps_randomized=true", "--out", "cal.json"]), "cal.json"),
        (s(&["mmi", "--proba", "test.csv", "--calibration", "cal.json", "--set", "aps_randomized=true", "--out", "mmi.csv"]), "mmi.csv"),
        (s(&["mmi", "--proba", "test.csv", "--set", "cal_proba=cal.csv", "--set", "cal_labels=cal_labels.csv", "--set", "format=json", "--out", "mmi.json"]), "mmi.json"),
        (s(&["predict-set", "--proba", "test.csv", "--calibration", "cal.json", "--set", "aps_randomized=true", "--out", "sets.csv"]), "sets.csv"),
        (s(&["coverage", "--trials", "300", "--set", "classes=4", "--out", "coverage.csv"]), "coverage.csv"),
        (s(&["oracle-check", "--set", "profiles=100", "--out", "oracle.txt"]), "oracle.txt"),
        (
            [s(&["active", "--seeds", "5", "--set", "rounds=5", "--set", "pool_size=40", "--set", "test_size=60", "--set", "initial_train=20", "--set", "classes=3", "--set", "dim=2", "--out", "active"])].concat(),
            "active",
        ),
        ([s(&["arc"]), s(&small_selective), s(&["--set", "n_cal=150", "--set", "n_test=200", "--out", "arc"])].concat(), "arc"),
        ([s(&["ablate-scores"]), s(&small_selective), s(&["--set", "n_cal=150", "--set", "n_test=200", "--out", "scores"])].concat(), "scores"),
        ([s(&["ablate-ncal"]), s(&small_selective), s(&["--set", "n_cals=50,100", "--set", "n_test=200", "--out", "ncal"])].concat(), "ncal"),
    ];
    for (args, output) in &commands {
        run_cli(d, args)?;
        let first = snapshot(&d.join(output));
        // the calibration file feeds later commands, so restore it in place
        if *output != "cal.json" {
            let target = d.join(output);
            if target.is_dir() {
                std::fs::remove_dir_all(&target).unwrap();
            } else {
                std::fs::remove_file(&target).unwrap();
            }
        }
        run_cli(d, args)?;
        let second = snapshot(&d.join(output));
        ensure(!first.is_empty() && first == second, || format!("`{}` output differs between runs", args[0]))?;
    }
    Ok(format!("{} invocations byte-identical on repeat", commands.len()))
}

fn main() {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, &str, fn() -> Check, Option<u64>); 10] = [
        ("1", "MMI-TV equals enumerated total-variation imprecision", criterion_1, Some(10)),
        ("2", "MMI-pi integral = closed form = Choquet oracle", criterion_2, Some(10)),
        ("3", "IHDR equals the prediction region and is minimal", criterion_3, Some(30)),
        ("4", "regression MMI-pi is (n+2)/(2(n+1)) for every instance", criterion_4, Some(5)),
        ("5", "consonance and Monte-Carlo coverage / uniform validity", criterion_5, Some(120)),
        ("6", "Mobius chain, Hartley extremes, additive Choquet", criterion_6, None),
        ("7a", "active learning: MMI-pi >= SET_SIZE(0.01)", criterion_7a, Some(600)),
        ("7b", "selective classification: MMI-pi >= SET_SIZE(0.3)", criterion_7b, Some(300)),
        ("8", "Wilcoxon exact small-n and normal agreement", criterion_8, None),
        ("9", "CLI outputs are byte-identical on repeat", criterion_9, None),
    ];
    let mut failed = 0;
    for (id, name, check, limit) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| id.starts_with(w.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(secs)) if elapsed > Duration::from_secs(secs) => {
                Err(format!("runtime {elapsed:.1?} over the {secs} s budget"))
            }
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {id:<3} PASS  {name} [{elapsed:.2?}] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:<3} FAIL  {name} [{elapsed:.2?}] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
