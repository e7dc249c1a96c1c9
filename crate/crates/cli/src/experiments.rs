//! Per-command grids and the computation behind each row.

use std::sync::Arc;

use amo_core::operator::MAX_BOX;
use amo_core::*;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig};
use crate::output::{Cell, ResultRow, Schema};

fn provenance(op: &str) -> String {
    format!("{op} v{}", env!("CARGO_PKG_VERSION"))
}

/// ln of a big integer without overflowing f64.
fn ln_big(q: &BigUint) -> f64 {
    let bits = q.bits();
    if bits <= 1000 {
        return num_traits::ToPrimitive::to_f64(q).map_or(f64::INFINITY, f64::ln);
    }
    let shift = bits - 64;
    let top: BigUint = q >> shift;
    num_traits::ToPrimitive::to_f64(&top).unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact decimal for integers up to 128 bits, otherwise `<mantissa>e<exp>`.
fn big_cell(q: &BigUint) -> Cell {
    if q.bits() <= 128 {
        return Cell::Text(q.to_string());
    }
    let log10 = ln_big(q) / std::f64::consts::LN_10;
    let exp = log10.floor();
    Cell::Text(format!("{:.6}e{}", 10f64.powf(log10 - exp), exp as i64))
}

/// Cartesian product of the axes; the first axis varies slowest.
fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Beta proxy of the materialized prefix; the target for very short Liouville prefixes.
fn beta_proxy(alpha: &FrequencySpec) -> f64 {
    let depth = alpha.generated_depth().saturating_sub(1);
    match estimate_beta(alpha, depth) {
        Ok(b) => b.proxy(),
        Err(_) => alpha.target_beta.unwrap_or(0.0),
    }
}

/// Runs the configured command. `Err` means the whole run failed;
/// per-point failures come back as error rows.
pub fn compute(config: &ExperimentConfig) -> Result<(Schema, Vec<ResultRow>)> {
    let c = config.common();
    let alpha = Arc::new(c.alpha.build(config.command.required_depth())?);
    let base = ModelParams::new(c.lambda, alpha.clone(), c.theta, c.energy)?;
    let name = config.command.name();
    let schema = |inputs: Vec<&'static str>, outputs: Vec<&'static str>| Schema {
        command: name,
        inputs,
        outputs,
    };

    match &config.command {
        Command::Cf(a) => {
            let prov = provenance("frequency::convergents");
            let cs = convergents(&alpha, a.depth)?;
            let qs = alpha.denominators(a.depth + 1);
            let rows = cs
                .iter()
                .enumerate()
                .map(|(i, cv)| {
                    let q = num_traits::ToPrimitive::to_f64(&cv.q).unwrap_or(f64::INFINITY);
                    let ln_ratio = ln_big(&qs[i + 1]) / q;
                    ResultRow::ok(
                        i,
                        vec![cv.n.into()],
                        vec![
                            big_cell(&cv.p),
                            big_cell(&cv.q),
                            cv.delta_lo_f64().into(),
                            cv.delta_hi_f64().into(),
                            ln_ratio.into(),
                        ],
                        &prov,
                    )
                })
                .collect();
            Ok((
                schema(vec!["n"], vec!["p", "q", "delta_lo", "delta_hi", "ln_ratio"]),
                rows,
            ))
        }
        Command::Det(a) => {
            let prov = provenance("operator::det_p");
            let grid = product(&[config.axis("k", &[100.0]), config.axis("theta", &[c.theta])]);
            let rows = par_rows(&grid, |id, point| {
                let inputs = vec![(point[0] as usize).into(), point[1].into()];
                let (k, p) = (point[0] as usize, base.with_theta(point[1]));
                if k == 0 || k > MAX_BOX {
                    return ResultRow::failed(id, inputs, &prov, format!("k = {k} out of range"));
                }
                let d = det_p(&p, 0.0, k);
                let growth = if a.samples > 0 {
                    match growth_rate(&p, k, a.samples) {
                        Ok(g) => Cell::Float(g),
                        Err(e) => return ResultRow::failed(id, inputs, &prov, e),
                    }
                } else {
                    Cell::Null
                };
                ResultRow::ok(
                    id,
                    inputs,
                    vec![(d.sign as i64).into(), d.log_magnitude.into(), growth],
                    &prov,
                )
            });
            Ok((schema(vec!["k", "theta"], vec!["sign", "log_abs", "growth_rate"]), rows))
        }
        Command::Green(a) => {
            let prov = provenance("green::green_cramer");
            let b = Interval::sized(a.x1, a.len);
            let all: Vec<f64> = b.sites().map(|y| y as f64).collect();
            let grid = product(&[config.axis("y", &all)]);
            let rows = par_rows(&grid, |id, point| {
                let y = point[0] as i64;
                let inputs = vec![y.into()];
                let g = match green_cramer(&base, b, y) {
                    Ok(g) => g,
                    Err(e) => return ResultRow::failed(id, inputs, &prov, e),
                };
                let mut outputs = vec![
                    (g.left.sign as i64).into(),
                    g.left.log_abs.into(),
                    (g.right.sign as i64).into(),
                    g.right.log_abs.into(),
                    g.log_den.into(),
                    g.log_rel_error.into(),
                ];
                if let Some(t) = a.t {
                    match classify_regular(&base, y, t, a.window.unwrap_or(a.len)) {
                        Ok(v) => outputs.extend([
                            v.regular.into(),
                            v.witness_box.map(|w| w.x1).into(),
                            v.margins[0].into(),
                            v.margins[1].into(),
                        ]),
                        Err(e) => return ResultRow::failed(id, inputs, &prov, e),
                    }
                }
                ResultRow::ok(id, inputs, outputs, &prov)
            });
            let outputs = vec![
                "left_sign",
                "left_log_abs",
                "right_sign",
                "right_log_abs",
                "log_det",
                "log_rel_error",
                "regular",
                "witness_x1",
                "margin_left",
                "margin_right",
            ];
            Ok((schema(vec!["y"], outputs), rows))
        }
        Command::Resonance(_) => {
            let prov = provenance("resonance::classify_site");
            let grid = product(&[config.axis("y", &(1..=1000).map(f64::from).collect::<Vec<_>>())]);
            let rows = par_rows(&grid, |id, point| {
                let y = point[0] as i64;
                match classify_site(&alpha, y) {
                    Ok(r) => ResultRow::ok(
                        id,
                        vec![y.into()],
                        vec![
                            r.n.into(),
                            r.q_n.into(),
                            r.b_n.into(),
                            r.resonant.into(),
                            r.ell.into(),
                            r.distance.into(),
                        ],
                        &prov,
                    ),
                    Err(e) => ResultRow::failed(id, vec![y.into()], &prov, e),
                }
            });
            Ok((
                schema(vec!["y"], vec!["n", "q_n", "b_n", "resonant", "ell", "distance"]),
                rows,
            ))
        }
        Command::Uniformity(a) => {
            let prov = provenance("resonance::uniformity_product");
            let grid = product(&[config.axis("ell", &[1.0]), config.axis("theta", &[c.theta])]);
            let rows = par_rows(&grid, |id, point| {
                let ell = point[0] as u64;
                let inputs = vec![a.n.into(), ell.into(), point[1].into()];
                let q = alpha.denominators(a.n).last().and_then(num_traits::ToPrimitive::to_usize);
                let Some(q) = q.filter(|q| *q <= 1 << 20) else {
                    return ResultRow::failed(id, inputs, &prov, "q_n too large for a Lagrange scan");
                };
                let grid_size = a.grid_size.unwrap_or(16 * q);
                match uniformity_product(&base.with_theta(point[1]), a.n, ell, a.epsilon, grid_size) {
                    Ok(r) => ResultRow::ok(
                        id,
                        inputs,
                        vec![
                            r.q_n.into(),
                            r.log_max.into(),
                            r.epsilon_achieved.into(),
                            r.beta_proxy.into(),
                            r.bound.into(),
                            r.uniform.into(),
                            r.grid_size.into(),
                            r.argmax_x.into(),
                            r.argmax_j.into(),
                        ],
                        &prov,
                    ),
                    Err(e) => ResultRow::failed(id, inputs, &prov, e),
                }
            });
            let outputs = vec![
                "q_n",
                "log_max",
                "epsilon_achieved",
                "beta_proxy",
                "bound",
                "uniform",
                "grid_size",
                "argmax_x",
                "argmax_j",
            ];
            Ok((schema(vec!["n", "ell", "theta"], outputs), rows))
        }
        Command::Decay(a) => {
            let prov = provenance("localization::fit_decay");
            let beta = beta_proxy(&alpha);
            let pairs = eigensolve(&base, Interval::sized(0, a.len), a.count, &Selector::central())?;
            let cfg = DecayConfig::new(c.lambda, beta);
            let rows = pairs
                .par_iter()
                .enumerate()
                .map(|(id, pair)| {
                    let inputs = vec![c.lambda.into(), c.theta.into(), a.len.into(), pair.index.into()];
                    match fit_decay(pair, &cfg) {
                        Ok(r) => ResultRow::ok(id, inputs, decay_cells(&r, pair), &prov),
                        Err(e) => ResultRow::failed(id, inputs, &prov, e),
                    }
                })
                .collect();
            Ok((schema(vec!["lambda", "theta", "box", "index"], DECAY_COLUMNS.to_vec()), rows))
        }
        Command::Lyapunov(a) => {
            let prov = provenance("localization::lyapunov");
            let grid = product(&[config.axis("lambda", &[c.lambda]), config.axis("energy", &[c.energy])]);
            let rows = par_rows(&grid, |id, point| {
                let inputs = vec![point[0].into(), point[1].into()];
                let p = match base.with_lambda(point[0]) {
                    Ok(p) => p.with_energy(point[1]),
                    Err(e) => return ResultRow::failed(id, inputs, &prov, e),
                };
                match lyapunov(&p, a.steps, a.samples) {
                    Ok(l) => ResultRow::ok(id, inputs, vec![l.into(), point[0].ln().max(0.0).into()], &prov),
                    Err(e) => ResultRow::failed(id, inputs, &prov, e),
                }
            });
            Ok((schema(vec!["lambda", "energy"], vec!["lyapunov", "ln_lambda_plus"]), rows))
        }
        Command::Sweep(a) => {
            let prov = provenance("localization::fit_decay+lyapunov");
            let beta = beta_proxy(&alpha);
            let grid = product(&[
                config.axis("lambda", &[c.lambda]),
                config.axis("theta", &[c.theta]),
                config.axis("energy", &[c.energy]),
            ]);
            let rows = par_rows(&grid, |id, point| {
                // One stream per grid point, so a draw never depends on scheduling.
                let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
                rng.set_stream(id as u64);
                let theta = if a.jitter > 0.0 {
                    point[1] + rng.gen_range(-a.jitter..=a.jitter)
                } else {
                    point[1]
                };
                let inputs = vec![point[0].into(), point[1].into(), point[2].into(), theta.into()];
                match sweep_point(&base, point[0], theta, point[2], beta, a.len, a.count, a.steps) {
                    Ok(outputs) => ResultRow::ok(id, inputs, outputs, &prov),
                    Err(e) => ResultRow::failed(id, inputs, &prov, e),
                }
            });
            let outputs = vec![
                "eigen_energy",
                "center",
                "fitted_rate",
                "min_rate",
                "max_rate",
                "r_squared",
                "lyapunov",
                "ln_lambda",
                "beta_proxy",
                "rate_floor",
            ];
            Ok((schema(vec!["lambda", "theta", "energy", "theta_used"], outputs), rows))
        }
    }
}

const DECAY_COLUMNS: [&str; 11] = [
    "energy",
    "center",
    "fitted_rate",
    "r_squared",
    "max_window_rate",
    "min_window_rate",
    "beta_proxy",
    "rate_floor",
    "ln_lambda",
    "participation",
    "points",
];

fn decay_cells(r: &DecayReport, pair: &Eigenpair) -> Vec<Cell> {
    vec![
        r.energy.into(),
        r.center.into(),
        r.fitted_rate.into(),
        r.r_squared.into(),
        r.max_window_rate.into(),
        r.min_window_rate.into(),
        r.beta_proxy.into(),
        r.predicted_rate_floor.into(),
        r.predicted_rate_exact_beta0.into(),
        pair.participation_ratio().into(),
        r.points.into(),
    ]
}

#[allow(clippy::too_many_arguments)]
fn sweep_point(
    base: &ModelParams,
    lambda: f64,
    theta: f64,
    energy: f64,
    beta: f64,
    len: usize,
    count: usize,
    steps: usize,
) -> Result<Vec<Cell>> {
    let p = base.with_lambda(lambda)?.with_theta(theta);
    let selector = Selector::Central {
        target: Some(energy),
        margin: 0.25,
        max_participation: None,
    };
    let pairs = eigensolve(&p, Interval::sized(0, len), count, &selector)?;
    let first = pairs.first().ok_or_else(|| Error::InvalidInput("no central eigenpair".into()))?;
    let cfg = DecayConfig::new(lambda, beta);
    let fits = pairs.iter().map(|pair| fit_decay(pair, &cfg)).collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = fits.iter().map(|f| f.fitted_rate).collect();
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let r2 = fits.iter().map(|f| f.r_squared).fold(f64::INFINITY, f64::min);
    let lyap = lyapunov(&p.with_energy(first.energy), steps, 4)?;
    Ok(vec![
        first.energy.into(),
        first.center().into(),
        mean.into(),
        lo.into(),
        hi.into(),
        r2.into(),
        lyap.into(),
        lambda.ln().into(),
        beta.into(),
        fits[0].predicted_rate_floor.into(),
    ])
}

/// Maps every grid point in parallel; rows come back in grid order.
fn par_rows<F>(grid: &[Vec<f64>], f: F) -> Vec<ResultRow>
where
    F: Fn(usize, &[f64]) -> ResultRow + Sync,
{
    grid.par_iter().enumerate().map(|(i, p)| f(i, p)).collect()
}
