use std::path::PathBuf;

use ilrd_core::density::{build_ulam_matrix, stationary_density, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ilrd_core::experiments::{
    almost_sure_trend_with, beta_profile, covariance_decay, default_lags, ks_two_sample, maximal_inequality_audit_with,
    monte_carlo_all, reversal_check, trend_summary, write_batch_csv, write_reference_csv, ExperimentSummary,
    ReversalParams,
};
use ilrd_core::orbit::generate_orbit;
use ilrd_core::stable::reference_sample;
use ilrd_core::{estimate_density, fmt17, ObservableG, StatKind};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::svg::{chart, Axes, Series};

const REFERENCE_SIZE: usize = 100_000;

/// Files produced by a run, written only after all computation succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    pub summary: Option<ExperimentSummary>,
}

impl Outputs {
    fn add(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn text(&mut self, name: String, text: String) {
        self.add(name, text.into_bytes());
    }

    pub fn write(&self, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&cfg.out)?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = cfg.out.join(name);
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let mut out = Outputs::default();
    let stem = cfg.stem();
    out.text(format!("{stem}_config.json"), cfg.to_canonical_json());
    let summary = match cfg.command {
        Command::Simulate => simulate(cfg, &stem, &mut out)?,
        Command::Density => density(cfg, &stem, &mut out)?,
        Command::Limit => limit(cfg, &mut out)?,
        Command::Covdecay => covdecay(cfg, &stem, &mut out)?,
        Command::Beta => beta(cfg, &stem, &mut out)?,
        Command::Maxineq => maxineq(cfg, &stem, &mut out)?,
        Command::Trend => trend(cfg, &stem, &mut out)?,
        Command::Reversal => reversal(cfg, &stem, &mut out)?,
        Command::Report => unreachable!("report is handled separately"),
    };
    out.summary = Some(summary);
    Ok(out)
}

fn finish(out: &mut Outputs, name: String, summary: &ExperimentSummary) -> Result<(), CliError> {
    out.text(name, summary.to_json()? + "\n");
    Ok(())
}

fn simulate(cfg: &RunConfig, stem: &str, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let orbit = generate_orbit(cfg.gamma(), cfg.n, cfg.burn_in, cfg.seed)?;
    let mut bin = Vec::new();
    orbit.write_binary(&mut bin)?;
    let mut csv = Vec::new();
    orbit.write_csv(&mut csv)?;
    out.add(format!("{stem}.bin"), bin);
    out.add(format!("{stem}.csv"), csv);
    let v = &orbit.values;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let mut s = ExperimentSummary::new(
        "simulate",
        serde_json::json!({ "gamma": cfg.gamma, "n": cfg.n, "burn_in": cfg.burn_in }),
        cfg.seed,
    );
    s.metric("mean", mean)
        .metric("min", v.iter().copied().fold(f64::INFINITY, f64::min))
        .metric("max", v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .metric("longest_run_below_0.1", orbit.longest_run_below(0.1));
    if cfg.plot {
        let pts = v.iter().enumerate().map(|(i, &x)| ((i + 1) as f64, x)).collect();
        let title = format!("γ = {}: {} iterations", cfg.gamma, cfg.n);
        out.text(
            format!("{stem}.svg"),
            chart(&title, "iteration", "x", &[Series::line("orbit", pts)], Axes::default()),
        );
    }
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}

fn density(cfg: &RunConfig, stem: &str, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let gamma = cfg.gamma();
    let p = build_ulam_matrix(gamma, cfg.bins)?;
    let row_err = p.max_row_error();
    let d = stationary_density(&p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let shape = d.shape_report();
    let mut s = ExperimentSummary::new(
        "density",
        serde_json::json!({ "gamma": cfg.gamma, "bins": cfg.bins, "n": cfg.n }),
        cfg.seed,
    );
    s.metric("h_half", d.h_half)
        .metric("mean_x", d.mean_x)
        .metric("row_error", row_err)
        .metric("shape", &shape)
        .flag("row_stochastic", row_err <= 1e-12)
        .flag("non_increasing", shape.non_increasing)
        .flag("positive_at_one", shape.last_positive)
        .flag("power_ratio", shape.power_ratio_ok);
    if cfg.gamma <= 0.01 {
        let dev = d.h_values[1..].iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max);
        s.metric("max_deviation_from_one", dev).flag("near_uniform", dev <= 0.05);
    } else {
        let mut orbit = generate_orbit(gamma, cfg.n, cfg.burn_in, cfg.seed)?.values;
        orbit.sort_unstable_by(f64::total_cmp);
        let n = orbit.len() as f64;
        let sup = orbit
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = d.cdf_unchecked(x);
                (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        s.metric("ecdf_sup", sup).flag("ecdf_agreement", sup <= 0.01);
    }
    out.text(format!("{stem}_density.json"), d.to_json()?);
    let mut csv = Vec::new();
    d.write_csv(&mut csv)?;
    out.add(format!("{stem}_density.csv"), csv);
    if cfg.plot {
        let pts = d
            .bin_edges
            .windows(2)
            .zip(&d.h_values)
            .map(|(e, &h)| (0.5 * (e[0] + e[1]), h))
            .collect();
        out.text(
            format!("{stem}_density.svg"),
            chart(
                &format!("invariant density, γ = {}", cfg.gamma),
                "x",
                "h(x)",
                &[Series::line("Ulam", pts)],
                Axes { log_x: true, log_y: true },
            ),
        );
    }
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}

fn limit(cfg: &RunConfig, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let gamma = cfg.gamma();
    let stem = match cfg.stat {
        Some(st) => format!("{}_{st}", cfg.stem()),
        None => cfg.stem(),
    };
    let stats: Vec<StatKind> = match cfg.stat {
        Some(st) => vec![st],
        None => StatKind::ALL.to_vec(),
    };
    // the gaussian regime converges too slowly for l2 to be gated by default
    let gated = |st: StatKind| cfg.stat.is_some() || !(gamma.is_boundary() && st == StatKind::L2);
    let gate = if gamma.is_boundary() { 0.15 } else { 0.08 };
    let d = estimate_density(gamma, cfg.bins)?;
    let batch = monte_carlo_all(&d, cfg.n, cfg.replicates, cfg.seed, cfg.burn_in)?;
    let small_n = cfg.n / 100;
    let small = if small_n >= 10 {
        Some(monte_carlo_all(&d, small_n, cfg.replicates, cfg.seed, cfg.burn_in)?)
    } else {
        None
    };
    let mut s = ExperimentSummary::new(
        "limit",
        serde_json::json!({
            "gamma": cfg.gamma,
            "n": cfg.n,
            "replicates": cfg.replicates,
            "stat": cfg.stat,
            "bins": cfg.bins,
            "reference_size": REFERENCE_SIZE,
            "comparison_n": small.as_ref().map(|_| small_n),
        }),
        cfg.seed,
    );
    let mut ks_all = serde_json::Map::new();
    let mut plots = Vec::new();
    let mut ref_csv = Vec::new();
    for &st in &stats {
        let k = StatKind::ALL.iter().position(|&x| x == st).expect("stat in ALL");
        let reference = reference_sample(gamma, &d, st, cfg.seed, REFERENCE_SIZE)?;
        let ks = ks_two_sample(&batch[k].values, &reference)?;
        ks_all.insert(st.name().into(), ks.into());
        if gated(st) {
            s.flag(&format!("{st}_ks_below_gate"), ks <= gate);
        }
        if let Some(sm) = &small {
            let ks_small = ks_two_sample(&sm[k].values, &reference)?;
            s.metric(&format!("{st}_ks_at_comparison_n"), ks_small);
            if gated(st) {
                s.flag(&format!("{st}_ks_improves"), ks < ks_small);
            }
        }
        s.metric(&format!("{st}_median"), batch[k].median());
        let mut buf = Vec::new();
        write_reference_csv(&mut buf, gamma, st, cfg.seed, &reference)?;
        if ref_csv.is_empty() {
            ref_csv = buf;
        } else {
            // drop the repeated header
            let body = buf.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1);
            ref_csv.extend_from_slice(&buf[body..]);
        }
        if cfg.plot {
            plots.push((st, Series::ecdf("simulated", &batch[k].values), Series::ecdf("limit law", &reference)));
        }
    }
    if stats.len() == 1 {
        s.metric("ks_to_reference", ks_all.values().next().cloned());
    } else {
        s.metric("ks_to_reference", serde_json::Value::Object(ks_all));
    }
    let w1_above = batch[0].raw.iter().zip(&batch[1].raw).filter(|(l2, w1)| **w1 > **l2 + 1e-12).count();
    s.metric("ks_gate", gate).flag("w1_le_l2", w1_above == 0);
    let chosen: Vec<_> = stats
        .iter()
        .map(|&st| &batch[StatKind::ALL.iter().position(|&x| x == st).expect("stat in ALL")])
        .collect();
    let mut csv = Vec::new();
    write_batch_csv(&mut csv, &chosen)?;
    out.add(format!("{stem}_batch.csv"), csv);
    out.add(format!("{stem}_reference.csv"), ref_csv);
    for (st, a, b) in plots {
        out.text(
            format!("{stem}_{st}_ecdf.svg"),
            chart(
                &format!("{st}: normalized statistic vs limit law, n = {}", cfg.n),
                "value",
                "ECDF",
                &[a, b],
                Axes::default(),
            ),
        );
    }
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}

fn covdecay(cfg: &RunConfig, stem: &str, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let fit = covariance_decay(cfg.gamma(), &ObservableG::identity(), &default_lags(), cfg.n, cfg.seed)?;
    let tol = if cfg.gamma >= 0.7 { 0.15 } else { 0.2 };
    let s = fit.summary(cfg.seed, tol);
    let mut csv = String::from("lag,covariance,stderr,used\n");
    for l in &fit.lags {
        csv.push_str(&format!("{},{},{},{}\n", l.lag, fmt17(l.covariance), fmt17(l.stderr), l.used));
    }
    out.text(format!("{stem}_lags.csv"), csv);
    if cfg.plot {
        let pts = fit.lags.iter().map(|l| (l.lag as f64, l.covariance.abs())).collect();
        let line = fit
            .lags
            .iter()
            .map(|l| (l.lag as f64, (fit.intercept + fit.slope * (l.lag as f64).ln()).exp()))
            .collect();
        out.text(
            format!("{stem}.svg"),
            chart(
                &format!("covariance decay, γ = {}", cfg.gamma),
                "lag",
                "|cov|",
                &[Series::line("estimate", pts), Series::line("fit", line)],
                Axes { log_x: true, log_y: true },
            ),
        );
    }
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}

fn beta(cfg: &RunConfig, stem: &str, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let prof = beta_profile(cfg.gamma(), cfg.bins, cfg.k_max)?;
    let s = prof.summary(cfg.seed, 8, cfg.k_max.min(256), 0.2)?;
    let mut csv = String::from("k,beta\n");
    for (k, b) in prof.lags.iter().zip(&prof.beta_values) {
        csv.push_str(&format!("{k},{}\n", fmt17(*b)));
    }
    out.text(format!("{stem}_k{}.csv", cfg.k_max), csv);
    if cfg.plot {
        let pts = prof.lags.iter().zip(&prof.beta_values).map(|(&k, &b)| ((k + 1) as f64, b)).collect();
        out.text(
            format!("{stem}_k{}.svg", cfg.k_max),
            chart(
                &format!("β(k), γ = {}", cfg.gamma),
                "k + 1",
                "β",
                &[Series::line("β", pts)],
                Axes { log_x: true, log_y: true },
            ),
        );
    }
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}

fn maxineq(cfg: &RunConfig, stem: &str, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let gamma = cfg.gamma();
    let d = estimate_density(gamma, ilrd_core::density::DEFAULT_BINS)?;
    let beta = beta_profile(gamma, cfg.bins, cfg.k_max)?.beta_values;
    let audit = maximal_inequality_audit_with(&d, &beta, cfg.n, cfg.k_max, &cfg.x, cfg.replicates, cfg.seed)?;
    let s = audit.summary(cfg.seed);
    let mut csv = String::from("x,lhs,rhs,ok\n");
    for r in &audit.rows {
        csv.push_str(&format!("{},{},{},{}\n", fmt17(r.x), fmt17(r.lhs), fmt17(r.rhs), r.ok));
    }
    out.text(format!("{stem}_rows.csv"), csv);
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}

fn trend(cfg: &RunConfig, stem: &str, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let d = estimate_density(cfg.gamma(), cfg.bins)?;
    let seeds: Vec<u64> = (0..cfg.replicates as u64).map(|i| cfg.seed + i).collect();
    let runs = seeds
        .iter()
        .map(|&sd| almost_sure_trend_with(&d, cfg.delta, &cfg.checkpoints, sd))
        .collect::<Result<Vec<_>, _>>()?;
    let s = trend_summary(cfg.gamma(), cfg.delta, &seeds, &runs);
    let mut csv = String::from("seed,n,value\n");
    for (sd, run) in seeds.iter().zip(&runs) {
        for p in run {
            csv.push_str(&format!("{sd},{},{}\n", p.n, fmt17(p.value)));
        }
    }
    out.text(format!("{stem}_points.csv"), csv);
    if cfg.plot {
        let series: Vec<Series> = runs
            .iter()
            .zip(&seeds)
            .take(4)
            .map(|(r, sd)| Series::line(&format!("seed {sd}"), r.iter().map(|p| (p.n as f64, p.value)).collect()))
            .collect();
        out.text(
            format!("{stem}.svg"),
            chart(
                &format!("rate(n)‖G_n‖/log(n+1)^{}, γ = {}", cfg.delta, cfg.gamma),
                "n",
                "value",
                &series,
                Axes { log_x: true, log_y: true },
            ),
        );
    }
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}

fn reversal(cfg: &RunConfig, stem: &str, out: &mut Outputs) -> Result<ExperimentSummary, CliError> {
    let d = estimate_density(cfg.gamma(), cfg.bins)?;
    let r = reversal_check(
        &d,
        ReversalParams {
            n: cfg.n,
            replicates: cfg.replicates,
            path_len: 10_000,
            seed: cfg.seed,
        },
    )?;
    let s = r.summary();
    let mut csv = String::from("rank,forward_max,backward_max\n");
    for (i, (f, b)) in r.forward_maxima.iter().zip(&r.backward_maxima).enumerate() {
        csv.push_str(&format!("{i},{},{}\n", fmt17(*f), fmt17(*b)));
    }
    out.text(format!("{stem}_maxima.csv"), csv);
    if cfg.plot {
        let doubled: Vec<f64> = r.backward_maxima.iter().map(|b| 2.0 * b).collect();
        out.text(
            format!("{stem}.svg"),
            chart(
                "max partial-sum norms",
                "value",
                "ECDF",
                &[
                    Series::ecdf("forward max‖Σ_k‖", &r.forward_maxima),
                    Series::ecdf("2 × backward max‖S_k‖", &doubled),
                ],
                Axes::default(),
            ),
        );
    }
    finish(out, format!("{stem}.json"), &s)?;
    Ok(s)
}
