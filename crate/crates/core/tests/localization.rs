use amo_core::localization::free_spectrum;
use amo_core::*;
use std::sync::Arc;

fn planted(rate: f64, n: usize, center: usize) -> Eigenpair {
    let log_abs: Vec<f64> = (0..n).map(|i| -rate * i.abs_diff(center) as f64).collect();
    let norm = log_abs.iter().map(|l| (2.0 * l).exp()).sum::<f64>().sqrt();
    let vector = log_abs.iter().map(|l| l.exp() / norm).collect();
    Eigenpair {
        energy: 0.0,
        vector,
        log_abs: log_abs.iter().map(|l| l - norm.ln()).collect(),
        interval: Interval::sized(0, n),
        residual: 0.0,
        index: 0,
    }
}

#[test]
fn planted_rates_are_recovered() {
    for i in 0..20 {
        let rate = 0.1 + 1.9 * i as f64 / 19.0;
        let pair = planted(rate, 400, 170 + 3 * i);
        let r = fit_decay(&pair, &DecayConfig::new(1.0, 0.0)).unwrap();
        assert!((r.fitted_rate - rate).abs() <= 1e-3, "planted {rate} got {}", r.fitted_rate);
        assert!(r.r_squared > 0.999);
        assert_eq!(r.center, 170 + 3 * i as i64);
        assert!(r.fit_window.x1 >= 40 && r.fit_window.x2 <= 359);
    }
}

#[test]
fn delocalized_vector_is_rejected() {
    let p = ModelParams::new(0.5, FrequencySpec::golden(), 0.31, 0.0).unwrap();
    let pair = &eigensolve(&p, Interval::sized(0, 400), 1, &Selector::Indices(vec![200])).unwrap()[0];
    assert!(matches!(
        fit_decay(pair, &DecayConfig::new(0.5, 0.0)),
        Err(Error::NotLocalized { .. })
    ));
}

#[test]
fn free_box_spectrum() {
    let p = ModelParams::new(0.0, FrequencySpec::golden(), 0.0, 0.0).unwrap();
    let n = 64;
    let pairs = eigensolve(&p, Interval::sized(0, n), n, &Selector::Indices((0..n).collect())).unwrap();
    let mut expect = free_spectrum(n);
    expect.sort_by(f64::total_cmp);
    for (pair, e) in pairs.iter().zip(&expect) {
        assert!((pair.energy - e).abs() < 1e-12);
    }
}

#[test]
fn eigenpairs_have_small_residual_and_unit_norm() {
    let p = ModelParams::new(3.0, FrequencySpec::golden(), 0.31, 0.0).unwrap();
    let pairs = eigensolve(&p, Interval::sized(-500, 1500), 12, &Selector::central()).unwrap();
    assert_eq!(pairs.len(), 12);
    for pair in &pairs {
        assert!(pair.residual <= 1e-8);
        let norm: f64 = pair.vector.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn spectrum_barely_depends_on_phase() {
    // Dirichlet truncation adds edge states inside spectral gaps, and those
    // move with the phase. Every eigenvalue without a partner in the other
    // spectrum must belong to a vector peaked near an end of the box.
    let alpha = FrequencySpec::golden();
    let rot = Rotation::new(&alpha).unwrap();
    let p = ModelParams::new(3.0, alpha, 0.31, 0.0).unwrap();
    let n = 2000;
    let b = Interval::sized(0, n);
    let all = Selector::Indices((0..n).collect());
    let a = eigensolve(&p, b, n, &all).unwrap();
    let c = eigensolve(&p.with_theta(0.31 + rot.frac(1)), b, n, &all).unwrap();
    let gap = |e: f64, other: &[Eigenpair]| {
        other.iter().map(|w| (e - w.energy).abs()).fold(f64::INFINITY, f64::min)
    };
    let mut unmatched = 0;
    for (x, y) in [(&a, &c), (&c, &a)] {
        for pair in x.iter() {
            if gap(pair.energy, y) >= 1e-2 {
                let centre = pair.center();
                assert!(centre < 20 || centre >= n as i64 - 20, "bulk state at {centre} unmatched");
                unmatched += 1;
            }
        }
    }
    assert!(unmatched <= 20, "{unmatched} edge states");
}

#[test]
fn lyapunov_reference_values() {
    let free = ModelParams::new(0.0, FrequencySpec::golden(), 0.0, 0.7).unwrap();
    assert!(lyapunov(&free, 20_000, 4).unwrap() < 1e-3);

    let alpha = Arc::new(FrequencySpec::golden());
    let mut last = 0.0;
    for lambda in [3.0, 5.0] {
        let p = ModelParams::new(lambda, alpha.clone(), 0.31, 0.0).unwrap();
        let pair = &eigensolve(&p, Interval::sized(0, 1000), 1, &Selector::central()).unwrap()[0];
        let l = lyapunov(&p.with_energy(pair.energy), 20_000, 8).unwrap();
        assert!((l - f64::ln(lambda)).abs() <= 0.03, "lambda={lambda} L={l}");
        assert!(l > last);
        last = l;
    }
}

#[test]
fn three_estimators_agree_for_golden_frequency() {
    let p = ModelParams::new(3.0, FrequencySpec::golden(), 0.31, 0.0).unwrap();
    let superbox = Interval::sized(0, 1000);
    let pairs = eigensolve(&p, superbox, 3, &Selector::central()).unwrap();
    for pair in &pairs {
        let fit = fit_decay(pair, &DecayConfig::new(3.0, 0.0)).unwrap();
        let pe = p.with_energy(pair.energy);
        let lyap = lyapunov(&pe, 20_000, 4).unwrap();
        let c = pair.center();
        let b = if c < 500 { Interval::sized(c + 150, 300) } else { Interval::sized(c - 450, 300) };
        let green = green_decay_rate(&pe, b).unwrap();
        for (a, b) in [(fit.fitted_rate, lyap), (fit.fitted_rate, green), (lyap, green)] {
            assert!((a - b).abs() <= 0.1 * a.max(b), "{a} vs {b}");
        }
        assert!(fit.fitted_rate <= 3f64.ln() + 0.1);
        assert!(fit.fitted_rate >= fit.predicted_rate_floor - 0.2);
    }
}

#[test]
fn liouville_frequency_respects_floor() {
    let alpha = construct_liouville_with(LiouvilleRule::new(0.4), 6).unwrap();
    let beta = estimate_beta(&alpha, 5).unwrap().proxy();
    let lambda = std::f64::consts::E;
    assert!(lambda.ln() > 1.5 * beta);
    let p = ModelParams::new(lambda, alpha, 0.31, 0.0).unwrap();
    let pairs = eigensolve(&p, Interval::sized(0, 1500), 4, &Selector::central()).unwrap();
    for pair in &pairs {
        let r = fit_decay(pair, &DecayConfig::new(lambda, beta)).unwrap();
        assert!(r.fitted_rate >= lambda.ln() - 1.5 * beta - 0.2);
        assert!(r.fitted_rate <= lambda.ln() + 0.1);
    }
}
