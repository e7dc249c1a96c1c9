//! Acceptance criteria, run in sequence with one PASS/FAIL line each.
//! Each check panics on the first violation; the runner reports the panic
//! message and the elapsed time against the budget.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use amo_core::frequency::{scale_below, GUARD};
use amo_core::oracles::{
    best_approximation_holds, brute_force_lagrange, convergent_table, dense_shifted, exact_det, exact_transfer,
    rational_ln_abs,
};
use amo_core::resonance::{max_log_lagrange, scale_window};
use amo_core::*;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> String;

const CRITERIA: [(&str, &str, u64, Check); 10] = [
    ("C1", "continued-fraction exactness", 10, c1_continued_fractions),
    ("C2", "determinant oracle equivalence", 30, c2_determinants),
    ("C3", "determinant growth bound", 120, c3_growth_bound),
    ("C4", "Green oracle and block expansion", 60, c4_green),
    ("C5", "uniformity on a Liouville frequency", 120, c5_uniformity),
    ("C6", "sine-sum constant", 60, c6_sine_sums),
    ("C7", "decay rate at zero beta", 120, c7_decay_beta_zero),
    ("C8", "decay floor for a Liouville frequency", 300, c8_liouville_floor),
    ("C9", "regularity classifier", 120, c9_regularity),
    ("C10", "CLI determinism", 60, c10_cli_determinism),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, budget, check) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (verdict, detail) = match outcome {
            Ok(d) if !over => ("PASS", d),
            Ok(d) => ("FAIL", format!("over the {budget} s budget; {d}")),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                ("FAIL", msg)
            }
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "{verdict} {id} {name} ({:.1} s of {budget} s): {detail}",
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn liouville_gapped(beta: f64, seed: u64, depth: usize) -> FrequencySpec {
    construct_liouville_with(LiouvilleRule::new(beta).with_gap(16).with_seed(seed), depth).unwrap()
}

fn c1_continued_fractions() -> String {
    let specs = [
        ("golden", FrequencySpec::golden(), 40),
        ("silver", FrequencySpec::silver(), 40),
        ("liouville 0.4", liouville_gapped(0.4, 1, 20), 20 - GUARD),
        ("liouville 1.0", liouville_gapped(1.0, 1, 20), 20 - GUARD),
    ];
    let mut best_checks = 0;
    for (name, spec, depth) in &specs {
        let depth = *depth;
        assert!(depth >= 15, "{name}: only {depth} convergents");
        let cs = convergents(spec, depth).unwrap();
        let table = convergent_table(spec.coefficients());
        for c in &cs {
            let n = c.n;
            assert_eq!((&c.p, &c.q), (&table[n].0, &table[n].1), "{name} n={n}");
            assert!(c.p.gcd(&c.q).is_one(), "{name}: gcd at n={n}");
            let q_next = &table[n + 1].1;
            let lo = BigRational::new(BigInt::one(), BigInt::from(q_next * 2u32));
            let hi = BigRational::new(BigInt::one(), BigInt::from(q_next.clone()));
            assert!(c.delta_lo <= c.delta && c.delta <= c.delta_hi, "{name}: enclosure at n={n}");
            assert!(lo <= c.delta_lo && c.delta_hi <= hi, "{name}: sandwich at n={n}");
        }
        let deep = spec.generated_depth();
        let (p_deep, q_deep) = &table[deep];
        for n in 1..deep - 1 {
            let Some(q_next) = table[n + 1].1.to_u64().filter(|&q| q <= 10_000) else {
                break;
            };
            assert!(
                best_approximation_holds(&table[n].0, &table[n].1, q_next, p_deep, q_deep),
                "{name}: best approximation at n={n}"
            );
            best_checks += 1;
        }
    }
    format!("4 frequencies, >= 18 convergents each, {best_checks} brute-force best-approximation scans")
}

fn random_params(rng: &mut ChaCha8Rng, alphas: &[Arc<FrequencySpec>]) -> ModelParams {
    let lambda = rng.gen_range(0.2..5.0);
    let edge = 2.0 + 2.0 * lambda;
    ModelParams::new(
        lambda,
        alphas[rng.gen_range(0..alphas.len())].clone(),
        rng.gen_range(0.0..1.0),
        rng.gen_range(-edge..edge),
    )
    .unwrap()
}

fn frequencies() -> Vec<Arc<FrequencySpec>> {
    vec![
        Arc::new(FrequencySpec::golden()),
        Arc::new(FrequencySpec::silver()),
        Arc::new(liouville_gapped(0.4, 1, 20)),
    ]
}

fn c2_determinants() -> String {
    let alphas = frequencies();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng, &alphas);
        let k = rng.gen_range(1..=30);
        let v: Vec<f64> = (0..k as i64).map(|n| p.potential(n)).collect();
        let exact = exact_det(&dense_shifted(&v, p.energy));
        let d = det_p(&p, 0.0, k);
        if exact.is_zero() {
            assert_eq!(d.sign, 0);
            continue;
        }
        assert_eq!(d.sign, if exact.is_positive() { 1 } else { -1 }, "sign at k={k}");
        let rel = (d.log_magnitude - rational_ln_abs(&exact)).exp_m1().abs();
        assert!(rel <= 1e-10, "k={k}: relative error {rel:e}");
        worst = worst.max(rel);
    }
    for _ in 0..20 {
        let p = random_params(&mut rng, &alphas);
        for k in 1..=20 {
            let shifted: Vec<f64> = (0..k as i64).map(|n| p.potential(n) - p.energy).collect();
            let m = exact_transfer(&shifted, 0.0);
            let det = exact_det(&dense_shifted(&shifted, 0.0));
            let expect = if k % 2 == 0 { det } else { -det };
            assert_eq!(m[0][0], expect, "transfer corner at k={k}");
        }
    }
    format!("worst relative error {worst:.1e}; transfer identity exact for k <= 20")
}

fn c3_growth_bound() -> String {
    let mut out = Vec::new();
    for lambda in [2.0, 3.0, 5.0] {
        let p = ModelParams::new(lambda, FrequencySpec::golden(), 0.31, 0.0).unwrap();
        let pairs = eigensolve(&p, Interval::sized(0, 1000), 3, &Selector::Indices(vec![250, 500, 750])).unwrap();
        for pair in &pairs {
            let g = growth_rate(&p.with_energy(pair.energy), 500, 200).unwrap();
            assert!(g <= f64::ln(lambda) + 0.05, "lambda={lambda} E={}: {g}", pair.energy);
            out.push(format!("{g:.3}"));
        }
    }
    format!("sup rates {} vs ln 2, ln 3, ln 5", out.join(" "))
}

fn c4_green() -> String {
    let alphas = frequencies();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    while compared < 200 {
        let p = random_params(&mut rng, &alphas);
        let len = rng.gen_range(1..=12);
        let b = Interval::sized(rng.gen_range(-50..50), len);
        let Ok(direct) = green_direct(&p, b) else {
            continue;
        };
        let y = rng.gen_range(b.x1..=b.x2);
        let g = green_cramer(&p, b, y).unwrap();
        let col = (y - b.x1) as usize;
        for (a, d) in [(g.left.value(), direct.get(0, col)), (g.right.value(), direct.get(col, len - 1))] {
            let rel = (a - d).abs() / d.abs().max(f64::MIN_POSITIVE);
            assert!(rel <= 1e-8, "box {b:?} y={y}: {a} vs {d}");
            worst = worst.max(rel);
        }
        compared += 1;
    }
    let p = ModelParams::new(3.0, FrequencySpec::golden(), 0.31, 0.0).unwrap();
    let superbox = Interval::sized(0, 200);
    let indices: Vec<usize> = (0..200).step_by(10).collect();
    let pairs = eigensolve(&p, superbox, indices.len(), &Selector::Indices(indices)).unwrap();
    assert_eq!(pairs.len(), 20);
    let mut residual: f64 = 0.0;
    for pair in &pairs {
        let refined = refine_eigenpair(&p, pair, 512).unwrap();
        for s in 0..10 {
            let b = Interval::sized(20 + 13 * s, 50);
            for x in b.sites() {
                let r = block_expand_refined(&refined, x, b).unwrap();
                assert!(r <= 1e-8, "eigenpair {} box {b:?} x={x}: {r:e}", pair.index);
                residual = residual.max(r);
            }
        }
    }
    format!("Cramer vs inverse worst {worst:.1e}; block residual worst {residual:.1e} of the max norm")
}

fn c5_uniformity() -> String {
    // The maximizer itself against a dense scan.
    let nodes: Vec<f64> = (0..8).map(|j| (0.7 * j as f64).cos()).collect();
    let fast = max_log_lagrange(&nodes, 512).unwrap();
    assert!((fast.log_max - brute_force_lagrange(&nodes, 100_000)).abs() < 1e-6);

    let alpha = Arc::new(liouville_gapped(0.4, 40, 18));
    let p = ModelParams::new(std::f64::consts::E, alpha.clone(), 0.31, 0.0).unwrap();
    let qs = alpha.denominators(18);
    let n = (1..=18)
        .find(|&i| qs[i - 1].to_u64().is_some_and(|q| (30..=300).contains(&q)))
        .expect("a scale with 30 <= q_n <= 300");
    let q = qs[n - 1].to_usize().unwrap();
    let coarse = uniformity_product(&p, n, 2, 0.2, 16 * q).unwrap();
    let fine = uniformity_product(&p, n, 2, 0.2, 32 * q).unwrap();
    let bound = coarse.beta_proxy / 2.0 + 0.2;
    assert!((coarse.beta_proxy - 0.4).abs() <= 0.05, "beta proxy {}", coarse.beta_proxy);
    assert!(coarse.epsilon_achieved <= bound, "{} > {bound}", coarse.epsilon_achieved);
    let drift = (coarse.epsilon_achieved - fine.epsilon_achieved).abs();
    assert!(drift <= 1e-3, "grid refinement moved epsilon by {drift:e}");
    format!(
        "q_n={q}, epsilon {:.4} <= {bound:.4}, refinement drift {drift:.1e}",
        coarse.epsilon_achieved
    )
}

fn c6_sine_sums() -> String {
    let golden = FrequencySpec::golden();
    let liou = liouville_gapped(0.4, 1, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let xs: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut c: f64 = 0.0;
    let mut checked = 0;
    for alpha in [&golden, &liou] {
        for n in 2..=scale_below(alpha, 500.0) {
            for &x in &xs {
                let r = sine_sum_check(alpha, x, n, n + 6, &[]).unwrap();
                c = c.max(r.c_estimate);
                checked += 1;
            }
        }
    }
    assert!(c <= 20.0, "fitted C = {c}");
    format!("C = {c:.2} over {checked} (alpha, n, x) triples")
}

fn c7_decay_beta_zero() -> String {
    let p = ModelParams::new(3.0, FrequencySpec::golden(), 0.31, 0.0).unwrap();
    let ln3 = 3f64.ln();
    let pairs = eigensolve(&p, Interval::sized(0, 2000), 5, &Selector::central()).unwrap();
    assert_eq!(pairs.len(), 5);
    let mut rates = Vec::new();
    let mut spread: f64 = 0.0;
    for pair in &pairs {
        let fit = fit_decay(pair, &DecayConfig::new(3.0, 0.0)).unwrap();
        let rate = fit.fitted_rate;
        assert!((0.9 * ln3..=1.1 * ln3).contains(&rate), "E={} rate {rate}", pair.energy);
        let pe = p.with_energy(pair.energy);
        let lyap = lyapunov(&pe, 20_000, 4).unwrap();
        let c = pair.center();
        let b = if c < 1000 { Interval::sized(c + 150, 300) } else { Interval::sized(c - 450, 300) };
        let green = green_decay_rate(&pe, b).unwrap();
        for (a, b) in [(rate, lyap), (rate, green), (lyap, green)] {
            let rel = (a - b).abs() / a.max(b);
            assert!(rel <= 0.1, "estimators {a} vs {b}");
            spread = spread.max(rel);
        }
        rates.push(format!("{rate:.3}"));
    }
    format!("rates {} (ln 3 = {ln3:.3}); estimator spread {:.1}%", rates.join(" "), 100.0 * spread)
}

fn c8_liouville_floor() -> String {
    let mut alpha = FrequencySpec::liouville(LiouvilleRule::new(0.4)).unwrap();
    let depth = alpha.achievable_depth(40);
    alpha.materialize(depth).unwrap();
    let beta = estimate_beta(&alpha, depth - 1).unwrap().proxy();
    assert!((beta - 0.4).abs() <= 0.01, "beta proxy {beta}");
    let lambda = std::f64::consts::E;
    assert!(lambda.ln() > 1.5 * beta);
    let floor = lambda.ln() - 1.5 * beta - 0.2;
    let ceiling = lambda.ln() + 0.1;
    let p = ModelParams::new(lambda, alpha, 0.31, 0.0).unwrap();
    let pairs = eigensolve(&p, Interval::sized(0, 4000), 10, &Selector::central()).unwrap();
    assert_eq!(pairs.len(), 10);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for pair in &pairs {
        let r = fit_decay(pair, &DecayConfig::new(lambda, beta)).unwrap();
        assert!(r.fitted_rate >= floor, "rate {} below floor {floor}", r.fitted_rate);
        assert!(r.fitted_rate <= ceiling, "rate {} above ceiling {ceiling}", r.fitted_rate);
        lo = lo.min(r.fitted_rate);
        hi = hi.max(r.fitted_rate);
    }
    format!("beta proxy {beta:.4}; rates in [{lo:.3}, {hi:.3}] within [{floor:.3}, {ceiling:.3}]")
}

fn c9_regularity() -> String {
    let alpha = Arc::new(FrequencySpec::golden());
    let p = ModelParams::new(3.0, alpha.clone(), 0.31, 0.0).unwrap();
    let pair = &eigensolve(&p, Interval::sized(0, 2000), 1, &Selector::central()).unwrap()[0];
    let pe = p.with_energy(pair.energy);
    let c = pair.center();
    let t = 3f64.ln() - 0.2;
    let rates: Vec<f64> = (0..8).map(|i| -0.2 + 0.2 * i as f64).collect();
    let mut windows = Vec::new();
    let mut verdicts = 0;
    for d in 300u64.. {
        if windows.len() == 10 {
            break;
        }
        if classify_site(&alpha, d as i64).unwrap().resonant {
            continue;
        }
        let k = scale_window(&alpha, d).expect("window for a non-resonant site");
        let y = if c < 1000 { c + d as i64 } else { c - d as i64 };
        let v = classify_regular(&pe, y, t, k).unwrap();
        assert!(v.regular, "d={d} k={k} margins {:?}", v.margins);
        windows.push(k);
        // Regularity at some t must hold at every smaller t, with a witness
        // no further right.
        let scan: Vec<RegularityVerdict> = rates.iter().map(|&s| classify_regular(&pe, y, s, k).unwrap()).collect();
        verdicts += scan.len() + 1;
        for pair in scan.windows(2) {
            if pair[1].regular {
                assert!(pair[0].regular, "d={d}: regular at t={} but not at {}", pair[1].t, pair[0].t);
                assert!(pair[0].witness_box.unwrap().x1 <= pair[1].witness_box.unwrap().x1);
            }
        }
    }
    format!("10 non-resonant sites regular with windows {windows:?}; monotone over {verdicts} verdicts")
}

fn c10_cli_determinism() -> String {
    let dir = std::env::temp_dir().join(format!("amo-lab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |workers: &str, name: &str| {
        let path = dir.join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_amo-lab"))
            .args(["sweep", "--grid", "lambda=1.5:5.0:8", "--alpha", "golden", "--box", "2000"])
            .args(["--seed", "7", "--jitter", "0.02", "--count", "2", "--workers", workers, "--output"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&path).unwrap()
    };
    let base = run("1", "w1.csv");
    let four = run("4", "w4.csv");
    let again = run("1", "w1b.csv");
    let _ = std::fs::remove_dir_all(&dir);
    assert_eq!(base, four, "1 vs 4 workers differ");
    assert_eq!(base, again, "repeated run differs");
    let text = String::from_utf8(base).unwrap();
    let rows = text.lines().skip(2).filter(|l| l.ends_with(',')).count();
    assert_eq!(rows, 8, "every grid point should succeed");
    format!("{} bytes identical across 1/4 workers and a repeat", text.len())
}
