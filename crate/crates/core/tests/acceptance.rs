//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion with
//! the measured values. Exits non-zero on failure only when
//! `ILRD_ACCEPTANCE_STRICT=1`.

use std::time::Instant;

use ilrd_core::density::{build_ulam_matrix, build_ulam_matrix_on, stationary_density, BinGrid, DEFAULT_BINS};
use ilrd_core::experiments::{
    almost_sure_trend_with, beta_profile, consistency_check, covariance_decay, default_lags, fourier_check, maximal_inequality_audit,
    reversal_check, stats, LimitComparison, ReversalParams,
};
use ilrd_core::orbit::{generate_orbit, DEFAULT_BURN_IN};
use ilrd_core::{estimate_density, GammaParam, ObservableG, Result};

const SEED: u64 = 7;

fn g(v: f64) -> GammaParam {
    GammaParam::new(v).expect("valid gamma")
}

type Outcome = Result<(bool, String)>;

fn density_shape() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma in [0.5, 0.6, 0.75, 0.9] {
        let p = build_ulam_matrix(g(gamma), DEFAULT_BINS)?;
        let row_err = p.max_row_error();
        let d = stationary_density(&p, 1e-12, 100_000)?;
        let shape = d.shape_report();
        let mut orbit = generate_orbit(g(gamma), 10_000_000, DEFAULT_BURN_IN, SEED)?.values;
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
        let this = row_err <= 1e-12 && shape.ok && sup <= 0.01;
        ok &= this;
        parts.push(format!(
            "γ={gamma}: row_err={row_err:.1e} max_increase={:.4} h(1)>0={} power_ratio={:.2} ecdf_sup={sup:.4}{}",
            shape.max_increase,
            shape.last_positive,
            shape.power_ratio,
            if this { "" } else { " [fail]" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn doubling_limit() -> Outcome {
    let p = build_ulam_matrix_on(g(0.01), 4096, BinGrid::Graded)?;
    let d = stationary_density(&p, 1e-12, 100_000)?;
    let dev = d.h_values[1..].iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max);
    Ok((dev <= 0.05, format!("bins=4096 max|h-1| outside first bin = {dev:.4}")))
}

fn covariance() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (gamma, tol) in [(0.75, 0.15), (0.6, 0.2)] {
        let fit = covariance_decay(g(gamma), &ObservableG::identity(), &default_lags(), 100_000_000, 1)?;
        let this = (fit.slope - fit.expected_slope()).abs() <= tol;
        ok &= this;
        parts.push(format!(
            "γ={gamma}: slope={:.4}±{:.4} target={:.4}±{tol}",
            fit.slope,
            fit.slope_stderr,
            fit.expected_slope()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn beta_rate() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma in [0.6, 0.75] {
        let prof = beta_profile(g(gamma), 4096, 256)?;
        let fit = prof.slope(8, 256)?;
        let b0 = prof.beta_values[0];
        let this = (fit.slope - prof.expected_slope()).abs() <= 0.2 && (0.70..=0.80).contains(&b0);
        ok &= this;
        parts.push(format!(
            "γ={gamma}: β(0)={b0:.4} slope={:.4} target={:.4} non_increasing={}",
            fit.slope,
            prof.expected_slope(),
            prof.is_non_increasing(0.01)
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn limit_laws(gamma: f64, lengths: &[usize], replicates: usize, gate: f64, stats_checked: &[&str]) -> Outcome {
    let d = estimate_density(g(gamma), DEFAULT_BINS)?;
    let (cmp, _) = LimitComparison::run(&d, lengths, replicates, 100_000, SEED)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for c in &cmp {
        let checked = stats_checked.contains(&c.stat.name());
        let this = c.final_ks() <= gate && c.improved();
        if checked {
            ok &= this;
        }
        parts.push(format!(
            "{}: ks={:?}{}",
            c.stat,
            c.ks.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            if checked { "" } else { " (informational)" }
        ));
        ok &= c.w1_above_l2 == 0;
    }
    Ok((ok, parts.join("; ")))
}

fn summary_outcome(s: ilrd_core::experiments::ExperimentSummary) -> (bool, String) {
    let metrics: Vec<String> = s.metrics.iter().map(|(k, v)| format!("{k}={v}")).collect();
    (s.passed(), format!("{} failing={:?}", metrics.join(" "), s.failing()))
}

fn fourier() -> Outcome {
    Ok(summary_outcome(fourier_check(10_000, 10_000)?))
}

fn maximal() -> Outcome {
    let audit = maximal_inequality_audit(g(0.75), 10_000, 32, &[32.0, 64.0, 128.0, 256.0], 500, SEED)?;
    let rows: Vec<String> = audit
        .rows
        .iter()
        .map(|r| format!("x={} lhs={:.3} rhs={:.3}", r.x, r.lhs, r.rhs))
        .collect();
    Ok((audit.passed(), rows.join("; ")))
}

fn reversal() -> Outcome {
    let d = estimate_density(g(0.75), DEFAULT_BINS)?;
    let r = reversal_check(
        &d,
        ReversalParams {
            seed: SEED,
            ..ReversalParams::default()
        },
    )?;
    let s = r.summary();
    let q: Vec<String> = r
        .quantiles
        .iter()
        .map(|q| format!("q{}: fwd={:.1} 2·bwd={:.1} +3se={:.1}", q.p, q.forward, 2.0 * q.backward, 3.0 * q.stderr))
        .collect();
    Ok((
        s.passed(),
        format!(
            "γ=0.75 marginal_ks={:.4} corr fwd/bwd={:.4}/{:.4} E[T(x)x²] fwd/bwd={:.4}/{:.4} {} self_ks={:.4} failing={:?}",
            r.marginal_ks,
            r.corr_forward,
            r.corr_backward,
            r.moment_forward,
            r.moment_backward,
            q.join(" "),
            r.self_ks,
            s.failing()
        ),
    ))
}

fn trend() -> Outcome {
    let d = estimate_density(g(0.75), DEFAULT_BINS)?;
    let checkpoints = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];
    let mut ratios = Vec::new();
    for seed in 1..=20 {
        let pts = almost_sure_trend_with(&d, 1.0, &checkpoints, seed)?;
        if pts.iter().any(|p| !(p.value.is_finite() && p.value > 0.0)) {
            return Ok((false, format!("seed {seed}: non-positive value")));
        }
        ratios.push(pts[4].value / pts[0].value);
    }
    let decreasing = ratios.iter().filter(|&&r| r < 1.0).count();
    let median = stats::median(&ratios);
    Ok((
        decreasing >= 16 && median < 0.5,
        format!("decreasing on {decreasing}/20 seeds, median ratio {median:.4}"),
    ))
}

fn consistency() -> Outcome {
    Ok(summary_outcome(consistency_check(SEED)?))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 11] = [
        ("density shape", density_shape),
        ("doubling-map limit", doubling_limit),
        ("covariance decay", covariance),
        ("beta rate", beta_rate),
        ("stable-regime limit laws", || {
            limit_laws(0.75, &[1_000, 100_000], 1000, 0.08, &["l2", "w1", "cvm"])
        }),
        ("gaussian-regime limit laws", || {
            limit_laws(0.5, &[10_000, 1_000_000], 500, 0.15, &["w1", "cvm"])
        }),
        ("fourier tail bound", fourier),
        ("maximal inequality", maximal),
        ("time reversal", reversal),
        ("almost-sure trend", trend),
        ("internal consistency", consistency),
    ];
    let only: Option<usize> = std::env::var("ILRD_ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} failing", failures);
    if failures > 0 && std::env::var("ILRD_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
