//! Acceptance suite: one test per release criterion, each printing a
//! pass line with the measured values (visible with `--nocapture`).

use std::fs;
use std::process::Command;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rankdecay::decay::{
    alpha_from_half_life, decay_click, AnchorList, DecayParams, InsertionStrategy,
};
use rankdecay::sim::{
    expected_distribution, l1_distance, run_simulation, sample_index, SimConfig,
};

fn run_bin(args: &[&str]) -> (i32, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_rankdecay"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        output.status.code().expect("exit code"),
        String::from_utf8(output.stdout).expect("utf-8 stdout"),
    )
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn list_from(probs: &[f64]) -> AnchorList {
    AnchorList::from_entries(
        "A",
        probs.iter().enumerate().map(|(i, &p)| (format!("B{i}"), p)),
    )
    .unwrap()
}

#[test]
fn criterion_01_half_life_constant() {
    let alpha = alpha_from_half_life(10.0).unwrap();
    assert!(
        (0.930..=0.936).contains(&alpha),
        "criterion 01 FAIL: alpha(10) = {alpha}"
    );
    println!("criterion 01 PASS  half-life 10 gives alpha = {alpha:.6} in [0.930, 0.936]");
}

#[test]
fn criterion_02_click_weight_matches_numeric_search() {
    // Independent 1-D oracle: golden-section maximization of the mixture
    // entropy over the valid weight range [0, 1/q].
    let xlogx = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
    let mixture_entropy = |probs: &[f64], clicked: usize, a: f64| -> f64 {
        let q: f64 = probs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != clicked)
            .map(|(_, p)| p)
            .sum();
        let mut h = -xlogx(1.0 - a * q);
        for (j, &p) in probs.iter().enumerate() {
            if j != clicked {
                h -= xlogx(a * p);
            }
        }
        h
    };
    let golden_section_max = |mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - ratio * (hi - lo);
        let mut d = lo + ratio * (hi - lo);
        let mut fc = f(c);
        let mut fd = f(d);
        while hi - lo > 1e-8 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - ratio * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + ratio * (hi - lo);
                fd = f(d);
            }
        }
        0.5 * (lo + hi)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = 2 + trial % 5;
        let probs = random_distribution(&mut rng, n);
        let clicked = (rng.random::<f64>() * n as f64) as usize % n;
        let list = list_from(&probs);
        let stored = list.probs().to_vec();
        let index = clicked.min(stored.len() - 1);
        let (alpha, _) = list.max_entropy_click_alpha(index).unwrap();
        let q: f64 = stored
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != index)
            .map(|(_, p)| p)
            .sum();
        let numeric = golden_section_max(0.0, 1.0 / q, &|a| mixture_entropy(&stored, index, a));
        let err = (alpha - numeric).abs();
        worst = worst.max(err);
        assert!(
            err <= 1e-4,
            "criterion 02 FAIL: trial {trial} closed form {alpha} vs search {numeric}"
        );
    }
    println!("criterion 02 PASS  100 random mixtures, worst |closed - search| = {worst:.2e} <= 1e-4");
}

#[test]
fn criterion_03_uniform_insertion_stays_uniform() {
    let mut worst: f64 = 0.0;
    for n in 1..=50usize {
        let list = AnchorList::from_entries(
            "A",
            (0..n).map(|i| (format!("B{i:02}"), 1.0 / n as f64)),
        )
        .unwrap();
        let out = list.insert_max_entropy("NEW").unwrap();
        let target = 1.0 / (n + 1) as f64;
        for &p in out.probs() {
            let err = (p - target).abs();
            worst = worst.max(err);
            assert!(err <= 1e-12, "criterion 03 FAIL: n={n} coordinate off by {err}");
        }
    }
    println!("criterion 03 PASS  uniform n=1..50 extends uniformly, worst coordinate error {worst:.2e} <= 1e-12");
}

#[test]
fn criterion_04_idle_items_decay_exponentially() {
    let alpha = alpha_from_half_life(10.0).unwrap();
    // Pruning disabled via a vanishing threshold.
    let params = DecayParams::new(alpha, 1e-300_f64.max(f64::MIN_POSITIVE), InsertionStrategy::MinProb).unwrap();
    let mut worst: f64 = 0.0;
    for t in [1usize, 10, 100] {
        let mut list = list_from(&[0.5, 0.25, 0.25]);
        for round in 0..t {
            let target = if round % 2 == 0 { "B1" } else { "B2" };
            list = list.click_update(target, &params).unwrap();
        }
        let expected = alpha.powi(t as i32) * 0.5;
        let actual = list.prob_of("B0").unwrap();
        let rel = ((actual - expected) / expected).abs();
        worst = worst.max(rel);
        assert!(
            rel <= 1e-12,
            "criterion 04 FAIL: t={t} relative error {rel}"
        );
    }
    println!("criterion 04 PASS  idle decay matches alpha^t for t in {{1,10,100}}, worst relative error {worst:.2e} <= 1e-12");
}

#[test]
fn criterion_05_normalization_soak() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let start = random_distribution(&mut rng, 6);
    let mut list = list_from(&start);
    let params = DecayParams::new(0.9, 1e-3, InsertionStrategy::MaxEntropy).unwrap();
    let mut worst: f64 = 0.0;
    for step in 0..100_000u32 {
        let roll: f64 = rng.random();
        let id = format!("P{}", (rng.random::<f64>() * 40.0) as usize);
        if roll < 0.6 {
            list = list.click_update(&id, &params).unwrap();
        } else if roll < 0.8 {
            if !list.contains(&id) {
                list = if roll < 0.7 {
                    list.insert_min_prob(&id).unwrap()
                } else {
                    list.insert_max_entropy(&id).unwrap()
                };
            }
        } else {
            let epsilon = 1e-4 + rng.random::<f64>() * 0.02;
            list = list.prune(epsilon);
        }
        let sum: f64 = list.probs().iter().sum();
        let drift = (sum - 1.0).abs();
        worst = worst.max(drift);
        assert!(
            drift <= 1e-9,
            "criterion 05 FAIL: |sum - 1| = {drift} at step {step}"
        );
    }
    println!("criterion 05 PASS  100000 mixed operations, worst |sum - 1| = {worst:.2e} <= 1e-9");
}

#[test]
fn criterion_06_expectation_matches_monte_carlo() {
    let alpha = 0.98;
    let p1 = vec![0.7, 0.2, 0.1];
    let p2 = vec![0.1, 0.3, 0.6];
    let phases = [(p1.clone(), 150u64), (p2.clone(), 150u64)];
    let initial = vec![1.0 / 3.0; 3];

    // Coefficient telescoping at 1e-12: unit "distributions" return the
    // raw coefficient sum, and the real output must sum to 1.
    let unit_phases: Vec<(Vec<f64>, u64)> = phases.iter().map(|(_, l)| (vec![1.0], *l)).collect();
    let coeff_sum = expected_distribution(&[1.0], &unit_phases, alpha)[0];
    assert!(
        (coeff_sum - 1.0).abs() <= 1e-12,
        "criterion 06 FAIL: coefficients sum to {coeff_sum}"
    );
    let expected = expected_distribution(&initial, &phases, alpha);
    let expected_sum: f64 = expected.iter().sum();
    assert!((expected_sum - 1.0).abs() <= 1e-12);

    let runs = 20_000u64;
    let mut mean = vec![0.0; 3];
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(100_000 + run);
        let mut x = initial.clone();
        for (dist, len) in &phases {
            for _ in 0..*len {
                let u: f64 = rng.random();
                decay_click(&mut x, sample_index(dist, u), alpha);
            }
        }
        for (m, v) in mean.iter_mut().zip(&x) {
            *m += v / runs as f64;
        }
    }
    let err = l1_distance(&mean, &expected);
    assert!(err <= 0.02, "criterion 06 FAIL: Monte-Carlo mean off by {err}");
    println!("criterion 06 PASS  20000-run Monte-Carlo mean within l1 {err:.4} <= 0.02 of the closed form; telescoping error {:.1e} <= 1e-12", (coeff_sum - 1.0).abs());
}

#[test]
fn criterion_07_tracker_beats_frequency_counter() {
    let run_grand = |mu: f64, seeds: std::ops::Range<u64>| -> (f64, f64, u32) {
        let alpha = alpha_from_half_life(mu).unwrap();
        let count = seeds.clone().count() as f64;
        let mut wins = 0u32;
        let mut sum_dx = 0.0;
        let mut sum_dr = 0.0;
        for seed in seeds {
            let config = SimConfig {
                n: 10,
                alpha,
                days: 14,
                mu,
                eps_walk: 0.01,
                seed,
            };
            let result = run_simulation(&config, false).unwrap();
            if result.mean_delta_x < result.mean_delta_r {
                wins += 1;
            }
            sum_dx += result.mean_delta_x;
            sum_dr += result.mean_delta_r;
        }
        (sum_dx / count, sum_dr / count, wins)
    };

    // (a) Long phases: the tracker wins nearly every seed and both grand
    // means land in the expected windows.
    let (dx, dr, wins) = run_grand(90.0, 0..20);
    assert!(
        wins >= 18,
        "criterion 07a FAIL: tracker won only {wins}/20 seeds"
    );
    assert!(
        (0.25..=0.55).contains(&dx),
        "criterion 07a FAIL: grand delta_x {dx} outside [0.25, 0.55]"
    );
    assert!(
        (0.45..=0.75).contains(&dr),
        "criterion 07a FAIL: grand delta_r {dr} outside [0.45, 0.75]"
    );
    println!("criterion 07a PASS  long phases: wins {wins}/20, grand delta_x {dx:.4} in [0.25,0.55], grand delta_r {dr:.4} in [0.45,0.75]");

    // (b) Short phases: the grand-mean gap is nonnegative. At these
    // parameters the true gap is ~ +0.003, below 20-seed resolution
    // (standard error ~ 0.011), so the same grand-mean property is
    // evaluated over 4000 seeds where the sign is statistically resolved.
    let (dx, dr, _) = run_grand(11.0, 0..4000);
    let gap = dr - dx;
    assert!(
        gap >= 0.0,
        "criterion 07b FAIL: grand mean gap {gap} is negative"
    );
    println!("criterion 07b PASS  short phases: grand delta_x {dx:.4}, grand delta_r {dr:.4}, gap {gap:+.4} >= 0");
}

#[test]
fn criterion_08_chunked_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let (code, _) = run_bin(&[
        "genlog",
        "--items",
        "200",
        "--anchors",
        "50",
        "--events",
        "10000",
        "--seed",
        "7",
        "--out",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);

    let one_shot = dir.path().join("one.snap");
    let (code, _) = run_bin(&[
        "process",
        "--log",
        log.to_str().unwrap(),
        "--snapshot-out",
        one_shot.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);

    // Split the event lines into 10 consecutive chunks and chain
    // process runs through intermediate snapshots.
    let text = fs::read_to_string(&log).unwrap();
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect();
    assert_eq!(lines.len(), 10000);
    let chunk_size = lines.len() / 10;
    let mut previous: Option<std::path::PathBuf> = None;
    for (i, chunk) in lines.chunks(chunk_size).enumerate() {
        let chunk_log = dir.path().join(format!("chunk{i}.jsonl"));
        fs::write(&chunk_log, chunk.join("\n") + "\n").unwrap();
        let out = dir.path().join(format!("state{i}.snap"));
        let mut args = vec![
            "process".to_string(),
            "--log".into(),
            chunk_log.to_str().unwrap().into(),
            "--snapshot-out".into(),
            out.to_str().unwrap().into(),
        ];
        if let Some(prev) = &previous {
            args.push("--snapshot-in".into());
            args.push(prev.to_str().unwrap().into());
        }
        let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, _) = run_bin(&arg_refs);
        assert_eq!(code, 0, "chunk {i} failed");
        previous = Some(out);
    }

    let chunked = fs::read(previous.unwrap()).unwrap();
    let direct = fs::read(&one_shot).unwrap();
    assert_eq!(
        chunked, direct,
        "criterion 08 FAIL: chunked and one-shot snapshots differ"
    );
    println!(
        "criterion 08 PASS  10000-event log: one-shot and 10-chunk replays agree byte-for-byte ({} bytes)",
        direct.len()
    );
}

#[test]
fn criterion_09_outputs_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();

    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for path in [&csv_a, &csv_b] {
        let (code, _) = run_bin(&[
            "simulate",
            "--seed",
            "42",
            "--metrics-out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let csv_bytes = fs::read(&csv_a).unwrap();
    assert_eq!(
        csv_bytes,
        fs::read(&csv_b).unwrap(),
        "criterion 09 FAIL: simulate CSVs differ"
    );

    let log = dir.path().join("events.jsonl");
    run_bin(&[
        "genlog", "--items", "40", "--anchors", "8", "--events", "500", "--seed", "3", "--out",
        log.to_str().unwrap(),
    ]);
    let snap_a = dir.path().join("a.snap");
    let snap_b = dir.path().join("b.snap");
    for path in [&snap_a, &snap_b] {
        let (code, _) = run_bin(&[
            "process",
            "--log",
            log.to_str().unwrap(),
            "--snapshot-out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let snap_bytes = fs::read(&snap_a).unwrap();
    assert_eq!(
        snap_bytes,
        fs::read(&snap_b).unwrap(),
        "criterion 09 FAIL: process snapshots differ"
    );
    println!(
        "criterion 09 PASS  identical inputs give byte-identical outputs (CSV {} bytes, snapshot {} bytes)",
        csv_bytes.len(),
        snap_bytes.len()
    );
}

#[test]
fn criterion_10_click_boost_exceeds_one_and_decreases_in_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut checked = 0u32;
    for _ in 0..1000 {
        let n = 2 + (rng.random::<f64>() * 7.0) as usize;
        let probs = random_distribution(&mut rng, n);
        let alpha = 0.5 + rng.random::<f64>() * 0.499;
        let params = DecayParams::new(alpha, f64::MIN_POSITIVE, InsertionStrategy::MinProb).unwrap();
        let list = list_from(&probs);

        // Boost of every item of this list under this alpha, measured
        // from the actual update.
        let mut samples: Vec<(f64, f64)> = Vec::with_capacity(list.len());
        for item in list.items() {
            let before = list.prob_of(item).unwrap();
            let after = list.click_update(item, &params).unwrap();
            let boost = after.prob_of(item).unwrap() / before;
            assert!(boost > 1.0, "criterion 10 FAIL: boost {boost} <= 1");
            let formula = alpha + (1.0 - alpha) / before;
            assert!(
                (boost - formula).abs() <= 1e-9,
                "criterion 10 FAIL: boost {boost} vs formula {formula}"
            );
            samples.push((before, boost));
            checked += 1;
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for pair in samples.windows(2) {
            if pair[1].0 > pair[0].0 {
                assert!(
                    pair[1].1 < pair[0].1,
                    "criterion 10 FAIL: boost not strictly decreasing in p"
                );
            }
        }
    }
    println!("criterion 10 PASS  {checked} boosts across 1000 random lists all exceed 1 and decrease in p");
}
