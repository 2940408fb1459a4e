//! Acceptance suite. Runs every criterion at its fixed tolerance, prints one
//! PASS/FAIL line per criterion (with indented detail lines), and exits
//! non-zero if any criterion fails.

use std::fs::File;
use std::io::BufReader;
use std::process::Command;
use std::time::Instant;

use dynwalk::diagnostics::lag1_regression;
use dynwalk::estimate::{estimate, Method, SummaryStats, DEFAULT_TOL};
use dynwalk::moments::{
    kappa, lag1_cov, ls_slope, move_prob, occupancy_pair_probs, scenario_probs, second_moment, stay_prob, EdgeProb,
    ModelDims,
};
use dynwalk::oracle::{build_pair_chain, exact_lag1_cov, exact_scenarios};
use dynwalk::sim::ObservationSeries;
use dynwalk::study::{curve_grid, curves_from_table, qq_data, run_replications, StudyConfig};

const BIN: &str = env!("CARGO_BIN_EXE_dynwalk");

type Criterion = (&'static str, fn() -> Vec<Check>);

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

fn ep(p: f64) -> EdgeProb {
    EdgeProb::new(p).unwrap()
}

fn tenths() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

/// Largest `|f(x)|` over `xs` together with the argument attaining it.
fn worst<T: Copy>(xs: impl IntoIterator<Item = T>, f: impl Fn(T) -> f64) -> (f64, T) {
    xs.into_iter().map(|x| (f(x).abs(), x)).reduce(|a, b| if b.0 > a.0 { b } else { a }).expect("non-empty grid")
}

fn below(name: &str, err: f64, tol: f64, at: impl std::fmt::Debug) -> Check {
    check(name, err <= tol, format!("max error {err:.3e} (tol {tol:.0e}) at {at:?}"))
}

fn criterion_identities() -> Vec<Check> {
    const TOL: f64 = 1e-12;
    let ns: Vec<usize> = (2..=8).collect();
    let ms = [1usize, 2, 14, 50];
    let np: Vec<(usize, f64)> = ns.iter().flat_map(|&n| tenths().into_iter().map(move |p| (n, p))).collect();
    let nmp: Vec<(usize, usize, f64)> = np.iter().flat_map(|&(n, p)| ms.iter().map(move |&m| (n, m, p))).collect();

    let (e1, a1) = worst(np.iter().copied(), |(n, p)| {
        stay_prob(n, ep(p)).unwrap() + (n - 1) as f64 * move_prob(n, ep(p)).unwrap() - 1.0
    });
    let (e2, a2) = worst(np.iter().copied(), |(n, p)| {
        let o = occupancy_pair_probs(n, ep(p)).unwrap();
        let nf = n as f64;
        nf * o.same + nf * (nf - 1.0) * o.distinct - 1.0
    });
    let (e3, a3) = worst(np.iter().copied(), |(n, p)| {
        let s = scenario_probs(n, ep(p)).unwrap();
        s.pi4 - p * s.pi2
    });
    let (e4, a4) = worst(tenths(), |p| kappa(2, ep(p)).unwrap() - 1.0);
    let (e5, a5) = worst(ns.iter().copied(), |n| kappa(n, ep(1.0)).unwrap() - 1.0);
    let (e6, a6) = worst(nmp.iter().copied().filter(|t| t.2 == 1.0), |(n, m, _)| {
        lag1_cov(ModelDims::new(n, m).unwrap(), ep(1.0)).unwrap()
    });
    vec![
        below("F + (n-1)G = 1", e1, TOL, a1),
        below("n*Pi_eq + n(n-1)*Pi_neq = 1", e2, TOL, a2),
        below("pi4 = p*pi2", e3, TOL, a3),
        below("kappa(2, p) = 1", e4, TOL, a4),
        below("kappa(n, 1) = 1", e5, TOL, a5),
        below("c(n, M, 1) = 0", e6, TOL, a6),
    ]
}

fn criterion_oracle() -> Vec<Check> {
    const TOL: f64 = 1e-10;
    let ps = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
    let np: Vec<(usize, f64)> = (2..=4).flat_map(|n| ps.iter().map(move |&p| (n, p))).collect();
    let (e1, a1) = worst(np.iter().copied(), |(n, p)| {
        let (a, b) = (exact_scenarios(n, ep(p)).unwrap(), scenario_probs(n, ep(p)).unwrap());
        [a.pi1 - b.pi1, a.pi2 - b.pi2, a.pi3 - b.pi3, a.pi4 - b.pi4].into_iter().fold(0.0f64, |acc, d| acc.max(d.abs()))
    });
    let (e2, a2) = worst(np.iter().copied(), |(n, p)| {
        build_pair_chain(n, ep(p)).unwrap().same_vertex(0) - occupancy_pair_probs(n, ep(p)).unwrap().same
    });
    let nmp: Vec<(usize, usize, f64)> =
        np.iter().flat_map(|&(n, p)| [1usize, 2, 5].into_iter().map(move |m| (n, m, p))).collect();
    let (e3, a3) = worst(nmp, |(n, m, p)| {
        exact_lag1_cov(n, m, ep(p)).unwrap() - lag1_cov(ModelDims::new(n, m).unwrap(), ep(p)).unwrap()
    });
    vec![
        below("enumerated scenarios = closed form", e1, TOL, a1),
        below("pair-chain Pi_eq = kappa formula", e2, TOL, a2),
        below("exact lag-1 covariance = closed form", e3, TOL, a3),
    ]
}

fn exact_stats(dims: ModelDims, p: f64) -> SummaryStats {
    let (n, m) = (dims.n(), dims.m() as f64);
    let mean = m / n as f64;
    let c = lag1_cov(dims, ep(p)).unwrap();
    SummaryStats {
        dims,
        t: 4000,
        mean_counts: vec![mean; n],
        lag1_products: vec![c + mean * mean; n],
        squares: vec![second_moment(dims, ep(p)).unwrap(); n],
        c_hat: c,
        c_hat_known_mean: c,
        burn_in: None,
    }
}

fn criterion_round_trip() -> Vec<Check> {
    const TOL: f64 = 1e-8;
    let ps = [0.1, 0.25, 0.5, 0.75, 0.9];
    let cases: Vec<(usize, usize, f64)> =
        [(2, 2), (7, 14)].into_iter().flat_map(|(n, m)| ps.iter().map(move |&p| (n, m, p))).collect();
    [Method::Mom, Method::Ls]
        .into_iter()
        .map(|method| {
            let (e, at) = worst(cases.iter().copied(), |(n, m, p)| {
                let stats = exact_stats(ModelDims::new(n, m).unwrap(), p);
                estimate(&stats, method, DEFAULT_TOL).unwrap().p_hat - p
            });
            below(&format!("{method} recovers p from its exact statistic"), e, TOL, at)
        })
        .collect()
}

fn desk_config(p_grid: Vec<f64>, t: usize, reps: usize) -> StudyConfig {
    StudyConfig { p_grid, t, reps, methods: vec![Method::Mom, Method::Ls], ..StudyConfig::reference_study() }
}

fn criterion_consistency() -> Vec<Check> {
    let grid = vec![0.25, 0.5, 0.75];
    let long = run_replications(&desk_config(grid.clone(), 4000, 200)).unwrap();
    let short = run_replications(&desk_config(grid.clone(), 1000, 200)).unwrap();
    let mut out = Vec::new();
    for &p in &grid {
        for method in [Method::Mom, Method::Ls] {
            let s = long.summary(p, method);
            let z = (s.mean - p).abs() / s.se;
            out.push(check(
                format!("{method} mean at p={p} within 3 SE"),
                z <= 3.0,
                format!("mean {:.5}, SE {:.2e}, |z| = {z:.2}, clamped {}", s.mean, s.se, s.n_clamped),
            ));
            let ratio = short.summary(p, method).rmse / s.rmse;
            out.push(check(
                format!("{method} RMSE(T=1000)/RMSE(T=4000) at p={p} in [1.6, 2.5]"),
                (1.6..=2.5).contains(&ratio),
                format!("ratio {ratio:.3}"),
            ));
        }
    }
    out
}

fn criterion_normality() -> Vec<Check> {
    let table = run_replications(&desk_config(vec![0.5], 4000, 500)).unwrap();
    [Method::Mom, Method::Ls]
        .into_iter()
        .map(|method| {
            let qq = qq_data(&table.estimates(0.5, method, true)).unwrap();
            check(
                format!("{method} QQ correlation >= 0.995"),
                qq.correlation >= 0.995,
                format!("correlation {:.5} ({} clamped dropped)", qq.correlation, table.clamped_count(0.5, method)),
            )
        })
        .collect()
}

fn criterion_curves() -> Vec<Check> {
    let cfg = desk_config(curve_grid(), 4000, 500);
    let points = curves_from_table(&run_replications(&cfg).unwrap(), &cfg).unwrap();
    let list = |f: &dyn Fn(&dynwalk::study::SensitivityPoint) -> f64| {
        points.iter().map(|pt| format!("{:.3}", f(pt))).collect::<Vec<_>>().join(" ")
    };
    let small: Vec<_> = points.iter().filter(|pt| pt.p <= 0.3 + 1e-12).collect();
    vec![
        check("lambda > 1 on the grid", points.iter().all(|pt| pt.lambda > 1.0), list(&|pt| pt.lambda)),
        check("mu < 1 on the grid", points.iter().all(|pt| pt.mu < 1.0), list(&|pt| pt.mu)),
        check("nu < 1 for p <= 0.3", small.len() == 3 && small.iter().all(|pt| pt.nu < 1.0), list(&|pt| pt.nu)),
    ]
}

fn criterion_determinism() -> Vec<Check> {
    let run = || {
        let out = Command::new(BIN)
            .args(["replicate", "--preset", "paper-s6", "--r", "20", "--seed", "42"])
            .output()
            .expect("spawn dynwalk");
        assert!(out.status.success(), "replicate failed: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let (a, b) = (run(), run());
    vec![check(
        "replicate --preset paper-s6 --r 20 --seed 42 is byte-identical across runs",
        !a.is_empty() && a == b,
        format!("{} and {} bytes", a.len(), b.len()),
    )]
}

fn criterion_physics() -> Vec<Check> {
    let (n, m, p, t) = (3usize, 6usize, 0.5, 100_000usize);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let status = Command::new(BIN)
        .args(["simulate", "--n", &n.to_string(), "--m", &m.to_string(), "--p", &p.to_string()])
        .args(["--t", &t.to_string(), "--seed", "8", "--out"])
        .arg(&path)
        .status()
        .expect("spawn dynwalk");
    assert!(status.success());
    let series = ObservationSeries::read_csv(BufReader::new(File::open(&path).unwrap())).unwrap();
    let bad_rows = series.rows().filter(|r| r.iter().map(|&v| v as usize).sum::<usize>() != m).count();
    let fit = lag1_regression(&series, 50).unwrap();
    let slope = ls_slope(n, ep(p)).unwrap();
    let z = fit.slope.z(slope);
    vec![
        check(
            "every emitted row sums to M",
            series.len() == t && bad_rows == 0,
            format!("{} rows, {bad_rows} violations", series.len()),
        ),
        check(
            "one-step regression slope within 3 SE of F - G",
            z <= 3.0,
            format!("slope {:.5} vs {slope:.5}, SE {:.2e}, |z| = {z:.2}", fit.slope.value, fit.slope.se),
        ),
    ]
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("identity suite", criterion_identities),
        ("oracle equivalence", criterion_oracle),
        ("round-trip inversion", criterion_round_trip),
        ("consistency at desk scale", criterion_consistency),
        ("normality at desk scale", criterion_normality),
        ("sensitivity curves", criterion_curves),
        ("determinism", criterion_determinism),
        ("simulation physics", criterion_physics),
    ];
    let mut failed = Vec::new();
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let pass = checks.iter().all(|c| c.pass);
        println!(
            "criterion {} {title}: {} ({:.1}s)",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            println!("    [{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        if !pass {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 8 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
