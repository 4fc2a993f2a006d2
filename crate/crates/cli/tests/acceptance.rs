//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p randflight-cli --test acceptance -- --nocapture`.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use randflight::density::{radial_profile, stationary_density, Evaluator};
use randflight::limits::{
    gof_against_analytic, kac_limit_trace, r3_asymptotic_check, sdc_invariance_check,
};
use randflight::simulate::{run, SimConfig};
use randflight::{FlightParams, Law, StationaryParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normalization() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut pass = true;
    for m in [1, 2, 4, 6] {
        for (lambda, c, t) in [(1.0, 1.0, 1.0), (1.0, 1.0, 3.0), (0.5, 2.0, 4.0)] {
            let fp = FlightParams::new(m, c, lambda, t).unwrap();
            let mass = Evaluator::new(&Law::Transition(fp)).unwrap().ac_mass().unwrap().value;
            let gap = (mass + fp.singular_mass() - 1.0).abs();
            let tol = if m <= 2 { 1e-6 } else { 1e-8 };
            pass &= gap <= tol;
            if gap > worst.0 {
                worst = (gap, format!("m={m} (λ,c,t)=({lambda},{c},{t})"));
            }
        }
    }
    outcome(pass, format!("max |mass - 1| = {:.2e} at {}", worst.0, worst.1))
}

fn sdc_identity() -> Outcome {
    let mut worst = 0.0f64;
    for m in [1, 2, 4, 6] {
        for a in [0.5, 4.0, 7.0] {
            for rho in [1.0, 5.0] {
                let sp = StationaryParams::new(m, a, rho).unwrap();
                worst = worst.max(sdc_invariance_check(&sp, &[1.0, 10.0, 1000.0]).unwrap());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max relative discrepancy {worst:.2e} (tol 1e-10)"))
}

fn singular_mass() -> Outcome {
    let fp = FlightParams::new(2, 1.0, 1.0, 3.0).unwrap();
    let s = run(&SimConfig::new(fp, 1_000_000, 42).unwrap()).unwrap();
    let p = (-3f64).exp();
    let sd = (p * (1.0 - p) / 1e6).sqrt();
    let z = (s.zero_switch_fraction() - p) / sd;
    outcome(
        z.abs() <= 4.0,
        format!("zero-switch fraction {:.6} vs e^-3 = {p:.6}, z = {z:.3}", s.zero_switch_fraction()),
    )
}

fn distributional_gof() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [1, 2, 4, 6] {
        let fp = FlightParams::new(m, 1.0, 1.0, 3.0).unwrap();
        let s = run(&SimConfig::new(fp, 1_000_000, 42).unwrap()).unwrap();
        let g = gof_against_analytic(&s, &fp).unwrap();
        pass &= g.ks_pass;
        parts.push(format!("m={m} D={:.2e}/{:.2e}", g.ks_statistic, g.ks_threshold));
    }
    outcome(pass, parts.join(", "))
}

fn kac_limit() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [1, 2, 4] {
        let tr = kac_limit_trace(1.0, 1.0, &[10.0, 100.0, 1000.0], m).unwrap();
        pass &= tr.strictly_decreasing();
        if m == 1 {
            pass &= tr.distances[2] <= 0.02;
        }
        let ds: Vec<String> = tr.distances.iter().map(|d| format!("{d:.2e}")).collect();
        parts.push(format!("m={m} [{}]", ds.join(" > ")));
    }
    outcome(pass, parts.join(", "))
}

fn six_dim_series() -> Outcome {
    let mut worst = 0.0f64;
    for a in [1.0, 4.0, 8.0] {
        let sp = StationaryParams::new(6, a, 1.0).unwrap();
        for i in 0..20 {
            let r = (i as f64 + 0.5) / 20.0;
            let got = stationary_density(&sp, r).unwrap().ac_density;
            let want = (-a).exp() * common::six_dim_bracket(a, r * r, 60)
                / std::f64::consts::PI.powi(3);
            worst = worst.max((got - want).abs() / want);
        }
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.2e} vs double-double double sum"))
}

fn r3_asymptotics() -> Outcome {
    let rep = r3_asymptotic_check(0.01, 5.0, 10_000_000, 42).unwrap();
    outcome(
        rep.passed(),
        format!(
            "mass gap {:.2e}, max |z| over {} bins {:.2}, minimal at origin {}, increasing {}",
            rep.mass_gap,
            rep.bins.len(),
            rep.max_abs_z,
            rep.minimal_at_origin,
            rep.increasing
        ),
    )
}

fn figure_csv(name: &str) -> (String, Vec<(f64, f64)>) {
    let o = Command::new(env!("CARGO_BIN_EXE_randflight"))
        .args(["figure", name])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let header = text.lines().next().unwrap().to_string();
    let data = text
        .lines()
        .skip(2)
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    (header, data)
}

fn figure_shapes() -> Outcome {
    let mut notes = Vec::new();
    let decreasing = |d: &[(f64, f64)]| d.windows(2).all(|w| w[1].1 < w[0].1);

    let (h2, d2) = figure_csv("fig2");
    let head: Vec<_> = d2.iter().copied().filter(|p| p.0 < 4.9).collect();
    let min = d2.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let fig2 = h2.contains("boundary_divergent=true")
        && decreasing(&head)
        && d2.last().unwrap().1 > min;
    notes.push(format!("fig2 {}", if fig2 { "ok" } else { "bad" }));

    let mut fig34 = true;
    for name in ["fig3", "fig4"] {
        let (h, d) = figure_csv(name);
        fig34 &= h.contains("boundary_divergent=false")
            && decreasing(&d)
            && d.last().unwrap().1.is_finite()
            && d.last().unwrap().1 > 0.0;
    }
    notes.push(format!("fig3/fig4 {}", if fig34 { "ok" } else { "bad" }));

    let (_, d1) = figure_csv("fig1");
    let n = d1.len();
    let symmetric = (0..n / 2).all(|i| {
        (d1[i].0 + d1[n - 1 - i].0).abs() < 1e-12
            && (d1[i].1 - d1[n - 1 - i].1).abs() <= 1e-12 * d1[i].1
    });
    let peak = d1.iter().enumerate().fold(0, |b, (i, p)| if p.1 > d1[b].1 { i } else { b });
    let fig1 = symmetric
        && d1[peak].0.abs() < 10.0 / n as f64
        && d1[..=peak].windows(2).all(|w| w[1].1 >= w[0].1)
        && d1[peak..].windows(2).all(|w| w[1].1 <= w[0].1);
    notes.push(format!("fig1 {}", if fig1 { "ok" } else { "bad" }));

    // the library profile agrees with the CLI output
    let law = Law::Stationary(StationaryParams::new(4, 4.0, 5.0).unwrap());
    let (_, d3) = figure_csv("fig3");
    let lib = radial_profile(&law, 1000).unwrap();
    let same = d3.iter().zip(&lib.values).all(|(p, v)| p.1 == *v);
    notes.push(format!("csv matches library {same}"));
    outcome(fig2 && fig34 && fig1 && same, notes.join(", "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let go = |threads: &str| {
        let dump = dir.path().join(format!("dump{threads}.csv"));
        let summary = Command::new(env!("CARGO_BIN_EXE_randflight"))
            .args([
                "--threads", threads, "simulate", "--m", "2", "--lambda", "1", "--c", "1", "--t",
                "3", "--paths", "1000000", "--seed", "42",
            ])
            .output()
            .unwrap();
        let dumped = Command::new(env!("CARGO_BIN_EXE_randflight"))
            .args([
                "--threads", threads, "simulate", "--m", "3", "--lambda", "2", "--c", "1", "--t",
                "1", "--paths", "100000", "--seed", "42", "--dump", dump.to_str().unwrap(),
                "--positions",
            ])
            .output()
            .unwrap();
        assert!(summary.status.success() && dumped.status.success());
        (summary.stdout, dumped.stdout, std::fs::read(dump).unwrap())
    };
    let one = go("1");
    let eight = go("8");
    outcome(
        one == eight,
        format!(
            "summary {} bytes, dump {} bytes, identical across 1 and 8 threads: {}",
            one.0.len(),
            one.2.len(),
            one == eight
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 9] = [
        (1, "normalization", Duration::from_secs(10), normalization),
        (2, "SDC exact-ray identity", Duration::from_secs(5), sdc_identity),
        (3, "singular mass", Duration::from_secs(30), singular_mass),
        (4, "distributional GOF", Duration::from_secs(120), distributional_gof),
        (5, "Kac limit", Duration::from_secs(20), kac_limit),
        (6, "R^6 series", Duration::from_secs(5), six_dim_series),
        (7, "R^3 asymptotics", Duration::from_secs(300), r3_asymptotics),
        (8, "figure shapes", Duration::from_secs(5), figure_shapes),
        (9, "determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= budget;
        println!(
            "criterion {id} {:<4} {name}: {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
