//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use consilience::conventional::{
    residual_regression_test, signed_rank_distribution, wilcoxon_signed_rank, SignedRanks,
};
use consilience::critical::{critical_c, critical_c_mn, CURVE_TABLE};
use consilience::dataio::{parse_dataset_str, CaseMatchTable};
use consilience::decomposition::{decompose, pairs_from};
use consilience::matrix::SymmetricMatrix;
use consilience::nullmodels::{enumerate_randmix, null_distribution, replicate_rng};
use consilience::special::normal_quantile;
use consilience::weighting::{covariance_weights, effn_values};
use consilience::{numeric, Dataset, NullKind, NullSpec, ScalarKind};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || {
        format!("took {elapsed:?}, budget {budget:?}")
    })
}

fn normal_series(n: usize, seed: u64, mean: f64, sd: f64) -> Vec<f64> {
    let mut rng = replicate_rng(seed, 0);
    (0..n)
        .map(|_| mean + sd * normal_quantile(rng.random_range(1e-6..1.0 - 1e-6)))
        .collect()
}

fn patchy25() -> Dataset {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/patchy25.csv");
    parse_dataset_str(&std::fs::read_to_string(path).expect("fixture")).expect("parses")
}

fn landmarks() -> Check {
    let start = Instant::now();
    let mut rng = replicate_rng(1, 0);
    let tol = 1e-10;
    for k in 0..100 {
        let n = rng.random_range(3..=50usize);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..150.0)).collect();
        let nf = n as f64;
        let mean = numeric::mean(&y);
        let c = |m: &[f64]| {
            decompose(&pairs_from(&y, m), ScalarKind::SampleStdDev).map_err(|e| e.to_string())
        };
        let perfect = c(&y)?;
        ensure((perfect.c - 1.0).abs() <= tol, || {
            format!("series {k}: perfect C {}", perfect.c)
        })?;
        let flat = c(&vec![mean; n])?;
        ensure((flat.c - (nf + 1.0) / (2.0 * nf)).abs() <= tol, || {
            format!("series {k}: mean-fit C {}", flat.c)
        })?;
        let inverse: Vec<f64> = y.iter().map(|v| 2.0 * mean - v).collect();
        let inv = c(&inverse)?;
        ensure((inv.c + (nf - 2.0) / nf).abs() <= tol, || {
            format!("series {k}: inverse C {}", inv.c)
        })?;
        ensure((inv.mse_tot - 4.0 * (nf - 1.0) / nf).abs() <= tol, || {
            format!("series {k}: inverse MSEtot {}", inv.mse_tot)
        })?;
    }
    let y: Vec<f64> = (1..=10).map(|v| (v as f64).sqrt() * 3.0).collect();
    let mean = numeric::mean(&y);
    let flat = decompose(&pairs_from(&y, &[mean; 10]), ScalarKind::SampleStdDev).unwrap();
    let inverse: Vec<f64> = y.iter().map(|v| 2.0 * mean - v).collect();
    let inv = decompose(&pairs_from(&y, &inverse), ScalarKind::SampleStdDev).unwrap();
    ensure(
        (flat.c - 0.55).abs() <= tol && (flat.mse_tot - 0.9).abs() <= tol,
        || format!("N=10 mean fit: C {} MSEtot {}", flat.c, flat.mse_tot),
    )?;
    ensure(
        (inv.c + 0.8).abs() <= tol && (inv.mse_tot - 3.6).abs() <= tol,
        || format!("N=10 inverse: C {} MSEtot {}", inv.c, inv.mse_tot),
    )?;
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(1))?;
    Ok(format!("100 series plus N=10 anchors in {elapsed:.2?}"))
}

fn cross_product() -> Check {
    let mut rng = replicate_rng(2, 0);
    let kinds = [
        ScalarKind::SampleStdDev,
        ScalarKind::InterquartileRange,
        ScalarKind::Mean,
        ScalarKind::Median,
    ];
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let n = rng.random_range(3..=60usize);
        let obs: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..100.0)).collect();
        let modeled: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..120.0)).collect();
        let kind = kinds[k % kinds.len()];
        let p =
            decompose(&pairs_from(&obs, &modeled), kind).map_err(|e| format!("series {k}: {e}"))?;
        let products: Vec<f64> = p
            .sys_err
            .iter()
            .zip(&p.ran_err)
            .map(|(s, r)| s * r)
            .collect();
        worst = worst.max(numeric::mean(&products).abs());
    }
    ensure(worst <= 1e-10, || {
        format!("max |mean cross product| = {worst:e}")
    })?;
    Ok(format!("1000 series, all scalar kinds, max {worst:.1e}"))
}

fn exhaustive_randmix() -> Check {
    let start = Instant::now();
    let tol = 1e-10;
    for n in 3..=6usize {
        let obs = normal_series(n, 30 + n as u64, 10.0, 3.0);
        let e = enumerate_randmix(&obs, ScalarKind::SampleStdDev).map_err(|e| e.to_string())?;
        let nf = n as f64;
        let expected = [1.0, (nf - 2.0) / nf, 2.0 * (nf - 1.0) / nf, 1.0 / nf];
        let got = [e.mse_sys, e.mse_ran, e.mse_tot, e.c];
        for (g, x) in got.iter().zip(expected) {
            ensure((g - x).abs() <= tol, || {
                format!("N={n}: got {got:?}, expected {expected:?}")
            })?;
        }
        if n == 4 || n == 5 {
            ensure((e.rsq - 1.0 / (nf - 1.0)).abs() <= tol, || {
                format!("N={n}: mean R² {}", e.rsq)
            })?;
        }
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(5))?;
    Ok(format!("N=3..6 means and N=4,5 mean R² in {elapsed:.2?}"))
}

fn randnorm_monte_carlo() -> Check {
    let start = Instant::now();
    let reps = 10_000;
    let mut lines = Vec::new();
    for n in [5usize, 10, 25, 100] {
        let obs = normal_series(n, 40 + n as u64, 50.0, 8.0);
        let ds = Dataset::single("y", &pairs_from(&obs, &obs)).map_err(|e| e.to_string())?;
        let spec = NullSpec::new(NullKind::RandNorm, reps, 4000 + n as u64);
        let d =
            null_distribution(&ds, &spec, ScalarKind::SampleStdDev).map_err(|e| e.to_string())?;
        let c = &d.components[0];
        let nf = n as f64;
        let root = (reps as f64).sqrt();
        let checks = [
            ("C", c.mean_c, c.sd_c, 1.0 / (2.0 * nf)),
            ("MSEsys", c.mean_mse_sys, c.sd_mse_sys, (nf + 1.0) / nf),
            ("MSEran", c.mean_mse_ran, c.sd_mse_ran, (nf - 2.0) / nf),
        ];
        let mut zs = Vec::new();
        for (label, mean, sd, expected) in checks {
            let z = (mean - expected) / (sd / root);
            ensure(z.abs() <= 4.0, || {
                format!("N={n} {label}: mean {mean} vs {expected}, {z:.2} SE")
            })?;
            zs.push(format!("{label} {z:+.2}"));
        }
        lines.push(format!("N={n} [{}]", zs.join(", ")));
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(30))?;
    Ok(format!("{} SE in {elapsed:.2?}", lines.join("; ")))
}

fn critical_curve() -> Check {
    let anchor = critical_c_mn(0.05, 30.0).map_err(|e| e.to_string())?;
    ensure((0.34..=0.38).contains(&anchor), || {
        format!("C'(0.05) at 30 = {anchor}")
    })?;
    for row in CURVE_TABLE {
        let v = critical_c_mn(row.alpha, row.half_point).map_err(|e| e.to_string())?;
        ensure((v - 0.5).abs() < 1e-12, || {
            format!("alpha {}: {v} at half-point", row.alpha)
        })?;
    }
    let obs = normal_series(30, 50, 20.0, 5.0);
    let ds = Dataset::single("y", &pairs_from(&obs, &obs)).map_err(|e| e.to_string())?;
    let spec = NullSpec::new(NullKind::RandNorm, 10_000, 5);
    let d = null_distribution(&ds, &spec, ScalarKind::SampleStdDev).map_err(|e| e.to_string())?;
    let q95 = d.quantile(0.95);
    let target = critical_c(0.05, 1, 30.0).map_err(|e| e.to_string())?;
    ensure((q95 - target).abs() <= 0.05, || {
        format!("empirical 95th percentile {q95} vs {target}")
    })?;
    Ok(format!(
        "C'(0.05, 30) = {anchor:.4}; empirical q95 = {q95:.4}"
    ))
}

fn weighting() -> Check {
    let case = |r12: f64, r13: f64, r23: f64| {
        let mut r = SymmetricMatrix::new(3, 1.0);
        r.set(0, 1, r12);
        r.set(0, 2, r13);
        r.set(1, 2, r23);
        covariance_weights(&r)
    };
    let a = case(1.0, 0.0, 0.0);
    ensure(
        a.iter()
            .zip([0.25, 0.25, 0.5])
            .all(|(g, x)| (g - x).abs() < 1e-15),
        || format!("one dependent pair: {a:?}"),
    )?;
    let b = case(0.0, 0.0, 0.0);
    ensure(b.iter().all(|g| (g - 1.0 / 3.0).abs() < 1e-15), || {
        format!("independent: {b:?}")
    })?;
    let mut rng = replicate_rng(6, 0);
    let mut worst = 0.0f64;
    for m in 3..=5usize {
        for _ in 0..10_000 {
            let mut r = SymmetricMatrix::new(m, 1.0);
            for i in 0..m {
                for j in (i + 1)..m {
                    r.set(i, j, rng.random_range(0.0..=1.0));
                }
            }
            let w = covariance_weights(&r);
            worst = worst.max((w.iter().sum::<f64>() - 1.0).abs());
        }
    }
    ensure(worst < 1e-12, || {
        format!("weight sum deviates by {worst:e}")
    })?;
    Ok(format!(
        "reference cases exact; 30000 fuzzed matrices, max |sum-1| {worst:.1e}"
    ))
}

fn effn_arithmetic() -> Check {
    let ds = patchy25();
    let matched = effn_values(&ds).system;
    let unmatched = effn_values(
        &ds.clone()
            .with_case_match(CaseMatchTable::uniform(5, false))
            .unwrap(),
    )
    .system;
    let sub = |idx: &[usize]| effn_values(&ds.select(idx).unwrap()).system;
    let got = [
        matched,
        unmatched,
        sub(&[0, 1, 2, 3]),
        sub(&[0, 1, 2]),
        sub(&[0, 1]),
    ];
    let expected = [8.1, 10.2, 9.0, 20.0 / 3.0, 10.0];
    for (g, x) in got.iter().zip(expected) {
        ensure((g - x).abs() < 1e-12, || {
            format!("effN {got:?}, expected {expected:?}")
        })?;
    }
    Ok("8.1, 10.2, 9, 6.6667, 10".into())
}

fn conventional_tests() -> Check {
    for n in 1..=12usize {
        let ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
        let total: f64 = signed_rank_distribution(&ranks).iter().sum();
        ensure((total - 1.0).abs() < 1e-14, || {
            format!("n={n}: distribution sums to {total}")
        })?;
    }
    let tied = SignedRanks::from_differences(&[1.0, -1.0, 2.0, 2.0, -3.0, 4.0, 4.0, 4.0]);
    let total: f64 = signed_rank_distribution(&tied.ranks).iter().sum();
    ensure((total - 1.0).abs() < 1e-14, || {
        format!("tied ranks: distribution sums to {total}")
    })?;

    let d = [1.0, -2.0, 3.0, -4.0, 5.0];
    let w = wilcoxon_signed_rank(&pairs_from(&[0.0; 5], &d)).map_err(|e| e.to_string())?;
    ensure(w.statistic == 6.0, || format!("W = {}", w.statistic))?;

    let obs: Vec<f64> = (0..20).map(|i| 10.0 + 1.5 * i as f64).collect();
    let e = normal_series(20, 11, 0.0, 1.0);
    let biased: Vec<f64> = obs
        .iter()
        .zip(&e)
        .map(|(y, z)| 1.05 * y + 0.05 * z)
        .collect();
    let noisy: Vec<f64> = obs.iter().zip(&e).map(|(y, z)| y + 1.5 * z).collect();
    let (m1, m2) = (pairs_from(&obs, &biased), pairs_from(&obs, &noisy));
    let c1 = decompose(&m1, ScalarKind::SampleStdDev).unwrap().c;
    let c2 = decompose(&m2, ScalarKind::SampleStdDev).unwrap().c;
    let f = |p| {
        residual_regression_test(p)
            .map(|t| t.p_value)
            .map_err(|e| e.to_string())
    };
    let wx = |p| {
        wilcoxon_signed_rank(p)
            .map(|t| t.p_value)
            .map_err(|e| e.to_string())
    };
    let (f1, f2, w1, w2) = (f(&m1)?, f(&m2)?, wx(&m1)?, wx(&m2)?);
    ensure(c1 > c2 && f1 < f2 && w1 < w2, || {
        format!("C {c1} vs {c2}, F p {f1} vs {f2}, Wilcoxon p {w1} vs {w2}")
    })?;
    Ok(format!(
        "sums to 1 for n<=12; W=6; inversion C {c1:.3}>{c2:.3}, p(F) {f1:.1e}<{f2:.3}, p(W) {w1:.1e}<{w2:.3}"
    ))
}

fn bin_output(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_consilience"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("CONSILIENCE_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || {
        String::from_utf8_lossy(&o.stderr).into_owned()
    })?;
    Ok(o.stdout)
}

fn determinism() -> Check {
    let fixture: PathBuf =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/patchy25.csv");
    let f = fixture.to_str().unwrap();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (cmd, extra) in [
        ("analyze", vec![]),
        (
            "null",
            vec!["--kind", "randnorm", "--reps", "2000", "--seed", "9"],
        ),
        (
            "null",
            vec!["--kind", "randmix", "--reps", "2000", "--seed", "9"],
        ),
    ] {
        let mut outputs = Vec::new();
        for (run, threads) in ["1", "4", "4"].iter().enumerate() {
            let out = dir
                .path()
                .join(format!("{cmd}-{}-{run}", extra.get(1).unwrap_or(&"")));
            let mut args = vec![
                cmd,
                f,
                "--format",
                "json",
                "--out-dir",
                out.to_str().unwrap(),
            ];
            args.extend(extra.iter().copied());
            let stdout = bin_output(&args, threads)?;
            let mut files = Vec::new();
            let mut names: Vec<_> = std::fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            names.sort();
            for p in names {
                files.push(std::fs::read(p).unwrap());
            }
            outputs.push((stdout, files));
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("{cmd} {extra:?} output differs")
        })?;
        compared += 1;
    }

    let ds = patchy25();
    let spec = NullSpec::new(NullKind::RandNorm, 3000, 77);
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| null_distribution(&ds, &spec, ScalarKind::SampleStdDev))
            .map(|d| serde_json::to_vec(&d).unwrap())
            .map_err(|e| e.to_string())
    };
    ensure(in_pool(1)? == in_pool(4)?, || {
        "library null differs between 1 and 4 threads".into()
    })?;
    Ok(format!(
        "{compared} CLI commands x 3 runs (1/4/4 threads) and library pools byte-identical"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "landmark suite", landmarks),
        (2, "cross-product vanishing", cross_product),
        (3, "exhaustive RandMix oracle", exhaustive_randmix),
        (4, "RandNorm Monte Carlo", randnorm_monte_carlo),
        (5, "critical curve", critical_curve),
        (6, "weighting", weighting),
        (7, "effN arithmetic", effn_arithmetic),
        (8, "conventional tests", conventional_tests),
        (9, "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        match check() {
            Ok(detail) => println!("criterion {id} ({name}): PASS - {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL - {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
