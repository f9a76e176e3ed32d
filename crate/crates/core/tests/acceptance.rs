//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stbclab::analysis::{
    angle_design_set, block_factors, determinant_from_blocks, difference_matrix, min_coding_gain, ostbc_max_rate,
};
use stbclab::channel::{sample_channel, transmit};
use stbclab::codes::{encode_jagannath_p3, encode_jagannath_p4, jagannath_pair_terms};
use stbclab::constellation::ACIOD_ROTATION_DEG;
use stbclab::decoders::{conditional_ml_decode, decode, evcm_equalize_p3, evcm_equalize_p4, sufficient_stats, DecoderKind};
use stbclab::montecarlo::{snr_at_ser, snr_grid, sweep, SerRecord, SimConfig};
use stbclab::{build_qam, CMatrix, Constellation, PairAngles, Scheme, SchemeDescriptor, C64};

use common::{distinct_blocks, joint_pair_oracle, noisy_instance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{}; {:.2} s", o.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            o.pass = false;
            o.detail.push_str(&format!(" exceeds {:.0} s", limit.as_secs_f64()));
        }
    }
    o
}

fn random_block(c: &Constellation, rng: &mut ChaCha8Rng) -> [C64; 8] {
    std::array::from_fn(|_| c.points()[c.sample_index(rng)])
}

/// Largest off-diagonal magnitude relative to `‖C‖²_F` and largest
/// diagonal deviation from `expected`.
fn gram_errors(code: &CMatrix, expected: &[f64]) -> (f64, f64) {
    let g = code.gram();
    let norm = code.frobenius_sq();
    let diag = expected
        .iter()
        .enumerate()
        .map(|(i, e)| (g[(i, i)] - C64::new(*e, 0.0)).norm())
        .fold(0.0, f64::max);
    (g.max_off_diagonal() / norm, diag)
}

fn pair_energies(x: &[C64; 8], angles: PairAngles) -> (f64, f64) {
    let j = jagannath_pair_terms(x, angles);
    (j[0].norm_sqr() + j[1].norm_sqr(), j[2].norm_sqr() + j[3].norm_sqr())
}

fn criterion_orthogonality(four_by_four: bool) -> Outcome {
    let c = build_qam(4).unwrap();
    let angles = PairAngles::shipped();
    let mut rng = ChaCha8Rng::seed_from_u64(if four_by_four { 2 } else { 1 });
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let x = random_block(&c, &mut rng);
        let (cc, dd) = pair_energies(&x, angles);
        let (o, d) = if four_by_four {
            gram_errors(encode_jagannath_p4(&x, angles).matrix(), &[cc, cc, dd, dd])
        } else {
            gram_errors(encode_jagannath_p3(&x, angles).matrix(), &[dd, cc + dd, cc])
        };
        off = off.max(o);
        diag = diag.max(d);
    }
    outcome(
        off < 1e-10 && diag < 1e-10,
        format!("max off-diagonal/|C|^2 = {off:.2e}, max diagonal error = {diag:.2e}"),
    )
}

fn criterion_rate_bound() -> Outcome {
    let got: Vec<Ratio<u32>> = [2, 3, 4].into_iter().map(ostbc_max_rate).collect();
    let want = vec![Ratio::from_integer(1), Ratio::new(3, 4), Ratio::new(3, 4)];
    outcome(got == want, format!("N = 2, 3, 4 -> {}", got.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")))
}

fn criterion_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for scheme in Scheme::ALL {
        let d = SchemeDescriptor::new(scheme);
        for c in [build_qam(4).unwrap(), build_qam(16).unwrap().rotate_deg(ACIOD_ROTATION_DEG)] {
            let mut errors = 0;
            for _ in 0..1000 {
                let idx: Vec<usize> = (0..d.symbols()).map(|_| c.sample_index(&mut rng)).collect();
                let x: Vec<C64> = idx.iter().map(|&i| c.points()[i]).collect();
                let h = sample_channel(d.tx_antennas(), d.tx_antennas(), &mut rng).unwrap();
                let rx = transmit(&d.encode(&x).unwrap(), &h, 10.0, 0.0, &mut rng).unwrap();
                let out = decode(DecoderKind::Conditional, &rx, &h, &d, &c).unwrap();
                errors += idx.iter().zip(&out.indices).filter(|(a, b)| a != b).count();
            }
            if errors > 0 {
                failures.push(format!("{scheme}/{}: {errors} errors", c.name()));
            }
        }
    }
    let detail = if failures.is_empty() {
        "7 schemes x {qam4, rotated qam16} x 1000 blocks, 0 symbol errors".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn criterion_oracle() -> Outcome {
    let c = build_qam(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut total, mut agree) = (0usize, 0usize);
    for scheme in [Scheme::Jag4x3, Scheme::Jag4x4] {
        let d = SchemeDescriptor::new(scheme);
        for snr in [0.0, 10.0, 20.0] {
            for _ in 0..1000 {
                let (_, h, rx) = noisy_instance(&d, &c, snr, &mut rng);
                let q = if scheme == Scheme::Jag4x3 {
                    evcm_equalize_p3(&rx, &h)
                } else {
                    evcm_equalize_p4(&rx, &h)
                }
                .unwrap();
                let stats = sufficient_stats(&q, d.angles().unwrap());
                let fast = conditional_ml_decode(&stats, &c).unwrap();
                let oracle = joint_pair_oracle(&stats, &c);
                for p in 0..4 {
                    total += 1;
                    agree += (fast.indices[2 * p..2 * p + 2] == oracle[2 * p..2 * p + 2]) as usize;
                }
            }
        }
    }
    outcome(agree == total, format!("{agree}/{total} pair decisions agree"))
}

fn criterion_full_diversity() -> Outcome {
    let angles = PairAngles::shipped();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_min_det = f64::INFINITY;
    let mut worst_rel = 0.0f64;
    let mut below_floor = 0usize;
    for c in angle_design_set() {
        for scheme in [Scheme::Jag4x3, Scheme::Jag4x4] {
            let r = min_coding_gain(scheme, &c, angles).unwrap();
            worst_min_det = worst_min_det.min(r.min_det);
            let witness = difference_matrix(scheme, &r.witness, angles).unwrap().gram().determinant().re;
            worst_rel = worst_rel.max((witness - r.min_det).abs() / r.min_det);
            let d = SchemeDescriptor::new(scheme);
            for _ in 0..1000 {
                let (x, u) = distinct_blocks(&c, &mut rng);
                let delta = d.encode(&x).unwrap().matrix().sub(d.encode(&u).unwrap().matrix());
                let explicit = delta.gram().determinant().re;
                let diff: [C64; 8] = std::array::from_fn(|k| x[k] - u[k]);
                let (cb, db) = block_factors(&diff, angles);
                let factored = determinant_from_blocks(scheme, cb, db);
                worst_rel = worst_rel.max((explicit - factored).abs() / factored);
                below_floor += (explicit < r.min_det * (1.0 - 1e-9)) as usize;
            }
        }
    }
    outcome(
        worst_min_det > 1e-12 && worst_rel < 1e-9 && below_floor == 0,
        format!(
            "smallest min_det over bpsk/qam4/qam16 (rotated and unrotated) = {worst_min_det:.3e}; \
             brute-force max relative error = {worst_rel:.1e}; tuples below min_det = {below_floor}"
        ),
    )
}

fn run_sweep(scheme: Scheme, c: Constellation, grid: &[f64], seed: u64) -> Vec<SerRecord> {
    let mut cfg = SimConfig::new(SchemeDescriptor::new(scheme), c, grid.to_vec());
    cfg.trials = 10_000;
    cfg.seed = seed;
    sweep(&cfg).unwrap()
}

fn criterion_fig1() -> Outcome {
    let grid = snr_grid(0.0, 24.0, 2.0);
    let qam4 = build_qam(4).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for scheme in [Scheme::Jag4x3, Scheme::Jag4x4] {
        let recs = run_sweep(scheme, qam4.clone(), &grid, 7);
        let worst = recs
            .iter()
            .filter(|r| r.snr_db >= 10.0)
            .min_by(|a, b| a.eta.total_cmp(&b.eta))
            .unwrap();
        pass &= worst.eta >= 3.9;
        parts.push(format!("{scheme} min eta(>=10 dB) = {:.4} at {} dB", worst.eta, worst.snr_db));
    }
    for (scheme, c) in [
        (Scheme::Aciod4x3, qam4.rotate_deg(ACIOD_ROTATION_DEG)),
        (Scheme::Jafarkhani, qam4.clone()),
    ] {
        let recs = run_sweep(scheme, c, &grid, 7);
        let worst = recs
            .iter()
            .filter(|r| r.snr_db >= 10.0)
            .map(|r| (r.eta - 2.0).abs())
            .fold(0.0, f64::max);
        pass &= worst <= 0.05;
        parts.push(format!("{scheme} max |eta - 2|(>=10 dB) = {worst:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn lowest_common_target(curves: &[&[SerRecord]], target: f64) -> f64 {
    let floor = curves
        .iter()
        .map(|c| c.iter().map(|r| r.ser).filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    target.max(floor)
}

fn criterion_fig2() -> Outcome {
    let grid = snr_grid(0.0, 30.0, 1.0);
    let qam4 = build_qam(4).unwrap();
    let qam16 = build_qam(16).unwrap();
    let jag44 = run_sweep(Scheme::Jag4x4, qam4.clone(), &grid, 8);
    let jaf = run_sweep(Scheme::Jafarkhani, qam16.clone(), &grid, 8);
    let jag43 = run_sweep(Scheme::Jag4x3, qam4, &grid, 8);
    let aciod = run_sweep(Scheme::Aciod4x3, qam16.rotate_deg(ACIOD_ROTATION_DEG), &grid, 8);

    let gap = |ours: &[SerRecord], theirs: &[SerRecord]| {
        let t = lowest_common_target(&[ours, theirs], 1e-2);
        let a = snr_at_ser(ours, t);
        let b = snr_at_ser(theirs, t);
        (t, a, b, a.zip(b).map(|(a, b)| b - a))
    };
    let (t1, a1, b1, g1) = gap(&jag44, &jaf);
    let (t2, a2, b2, g2) = gap(&jag43, &aciod);
    let ok1 = g1.is_some_and(|g| (g - 6.0).abs() <= 2.0);
    let ok2 = g2.is_some_and(|g| (g - 12.0).abs() <= 3.0);
    let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.2}"));
    outcome(
        ok1 && ok2,
        format!(
            "SER {t1:.0e}: jag4x4/qam4 {} dB vs jafarkhani/qam16 {} dB, gain {} dB (want 6 +/- 2); \
             SER {t2:.0e}: jag4x3/qam4 {} dB vs rotated aciod4x3/qam16 {} dB, gain {} dB (want 12 +/- 3)",
            fmt(a1),
            fmt(b1),
            fmt(g1),
            fmt(a2),
            fmt(b2),
            fmt(g2)
        ),
    )
}

fn criterion_rotation() -> Outcome {
    let grid = snr_grid(0.0, 24.0, 2.0);
    let q16 = build_qam(16).unwrap();
    let plain = run_sweep(Scheme::Aciod4x3, q16.clone(), &grid, 9);
    let rotated = run_sweep(Scheme::Aciod4x3, q16.rotate_deg(ACIOD_ROTATION_DEG), &grid, 9);
    let k = Scheme::Aciod4x3.symbols();
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, r) in plain.iter().zip(&rotated).rev().take(2) {
        let se = p.std_error(k).max(r.std_error(k));
        pass &= r.ser <= p.ser + se;
        parts.push(format!("{} dB: rotated {:.2e} vs unrotated {:.2e} (se {se:.1e})", p.snr_db, r.ser, p.ser));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_stbclab"))
            .args([
                "simulate", "--scheme", "jag4x3", "--mod", "qam4", "--snr-db-start", "0", "--snr-db-stop", "12",
                "--snr-db-step", "4", "--trials", "5000", "--seed", "10", "--out",
            ])
            .arg(&path)
            .env("STBCLAB_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("1", "one.csv");
    let b = run("4", "four.csv");
    outcome(a == b && !a.is_empty(), format!("STBCLAB_THREADS=1 vs 4: {} bytes, identical = {}", a.len(), a == b))
}

type Check = Box<dyn FnOnce() -> Outcome>;

fn main() {
    let criteria: Vec<(&str, Check)> = vec![
        ("jag4x3 Gram is diag(D, C+D, C)", Box::new(|| timed(Some(Duration::from_secs(1)), || criterion_orthogonality(false)))),
        ("jag4x4 Gram is blockdiag(C I2, D I2)", Box::new(|| timed(Some(Duration::from_secs(1)), || criterion_orthogonality(true)))),
        ("orthogonal design rate bound", Box::new(|| timed(None, criterion_rate_bound))),
        ("noiseless round-trip, all schemes", Box::new(|| timed(None, criterion_round_trip))),
        ("conditional ML equals joint-pair argmin", Box::new(|| timed(Some(Duration::from_secs(30)), criterion_oracle))),
        ("full diversity of shipped angles", Box::new(|| timed(None, criterion_full_diversity))),
        ("spectral efficiency plateaus", Box::new(|| timed(None, criterion_fig1))),
        ("SNR gains at fixed 4 bits/s/Hz", Box::new(|| timed(None, criterion_fig2))),
        ("constellation rotation helps ACIOD", Box::new(|| timed(None, criterion_rotation))),
        ("CSV independent of worker count", Box::new(|| timed(None, criterion_determinism))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let o = check();
        failed += !o.pass as usize;
        println!("criterion {:>2}: {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
