use dynwalk::diagnostics::{coincidence_rate, lag1_regression, row_mean};
use dynwalk::estimate::{estimate, summarize, Method, DEFAULT_TOL};
use dynwalk::moments::{lag1_cov, ls_intercept, ls_slope, occupancy_pair_probs, stay_prob, EdgeProb, ModelDims};
use dynwalk::oracle::oracle_summary;
use dynwalk::sim::{replication_seed, rng_from_seed, sample_graph, simulate, step, Init, SimConfig, WalkerPositions};
use proptest::prelude::*;

fn prob(p: f64) -> EdgeProb {
    EdgeProb::new(p).unwrap()
}

fn run(n: usize, m: usize, p: f64, t: usize, seed: u64) -> dynwalk::ObservationSeries {
    let cfg = SimConfig::new(ModelDims::new(n, m).unwrap(), prob(p), t, seed).unwrap();
    simulate(&cfg).unwrap()
}

#[test]
fn frozen_walkers_never_leave_the_first_vertex() {
    let cfg = SimConfig::new(ModelDims::new(3, 5).unwrap(), prob(0.0), 50, 9).unwrap().with_init(Init::AllAtFirst);
    let series = simulate(&cfg).unwrap();
    assert!(series.rows().all(|r| r == [5, 0, 0]));
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let bytes = |seed| {
        let mut buf = Vec::new();
        run(5, 7, 0.4, 300, seed).write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(bytes(11), bytes(11));
    assert_ne!(bytes(11), bytes(12));
}

#[test]
fn single_walker_on_two_vertices_stays_half_the_time() {
    let t = 100_000;
    let series = run(2, 1, 1.0, t, 5);
    let stays = (1..t).filter(|&k| series.row(k) == series.row(k - 1)).count() as f64;
    let f = stay_prob(2, prob(1.0)).unwrap();
    assert!((f - 0.5).abs() < 1e-15);
    let k = (t - 1) as f64;
    let se = (f * (1.0 - f) / k).sqrt();
    assert!((stays / k - f).abs() <= 3.0 * se, "stay frequency {}", stays / k);
}

#[test]
fn per_walker_stay_frequency_matches_closed_form() {
    // Given the current positions, the number of stays in a step depends only on
    // the fresh graph, so per-step stay fractions are i.i.d. across steps.
    let (n, m, p, steps) = (7, 14, 0.3, 20_000);
    let mut rng = rng_from_seed(3);
    let mut pos = WalkerPositions::new((0..m).map(|k| k % n).collect(), n).unwrap();
    let mut fractions = Vec::with_capacity(steps);
    for _ in 0..steps {
        let g = sample_graph(n, prob(p), &mut rng);
        let next = step(&pos, &g, &mut rng);
        let stayed = pos.as_slice().iter().zip(next.as_slice()).filter(|(a, b)| a == b).count();
        fractions.push(stayed as f64 / m as f64);
        pos = next;
    }
    let k = steps as f64;
    let mean = fractions.iter().sum::<f64>() / k;
    let sd = (fractions.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let f = stay_prob(n, prob(p)).unwrap();
    assert!((mean - f).abs() <= 3.0 * sd / k.sqrt(), "mean {mean} vs {f}");
}

#[test]
fn marginal_means_are_uniform() {
    let series = run(3, 6, 0.5, 100_000, 21);
    for i in 0..3 {
        let est = row_mean(&series, 50, |r| r[i] as f64).unwrap();
        assert!(est.z(2.0) <= 3.0, "vertex {i}: {est:?}");
    }
}

#[test]
fn one_step_regression_matches_slope_and_intercept() {
    let (n, m, p) = (3, 6, 0.5);
    let series = run(n, m, p, 100_000, 8);
    let fit = lag1_regression(&series, 50).unwrap();
    let slope = ls_slope(n, prob(p)).unwrap();
    let intercept = ls_intercept(n, prob(p)).unwrap() * m as f64;
    assert!(fit.slope.z(slope) <= 3.0, "{fit:?} vs slope {slope}");
    assert!(fit.intercept.z(intercept) <= 3.0, "{fit:?} vs intercept {intercept}");
}

#[test]
fn pair_coincidence_matches_exact_chain() {
    let (n, p) = (3, 0.5);
    let series = run(n, 2, p, 100_000, 17);
    let est = coincidence_rate(&series, 50).unwrap();
    let exact = n as f64 * oracle_summary(n, 2, prob(p)).unwrap().pi_eq;
    assert!(est.z(exact) <= 4.0, "{est:?} vs {exact}");
}

#[test]
fn pair_coincidence_matches_kappa_at_seven_vertices() {
    let (n, p) = (7, 0.5);
    let series = run(n, 14, p, 100_000, 29);
    let est = coincidence_rate(&series, 50).unwrap();
    let exact = n as f64 * occupancy_pair_probs(n, prob(p)).unwrap().same;
    assert!(est.z(exact) <= 3.0, "{est:?} vs {exact}");
}

#[test]
fn empirical_covariance_is_centered_on_closed_form() {
    let dims = ModelDims::new(7, 14).unwrap();
    let c = lag1_cov(dims, prob(0.5)).unwrap();
    let reps = 40;
    let c_hats: Vec<f64> =
        (1..=reps).map(|r| summarize(&run(7, 14, 0.5, 4000, replication_seed(77, r))).unwrap().c_hat).collect();
    let k = reps as f64;
    let mean = c_hats.iter().sum::<f64>() / k;
    let sd = (c_hats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    assert!((c_hats[0] - c).abs() <= 4.0 * sd, "single series {} vs {c}", c_hats[0]);
    assert!((mean - c).abs() <= 4.0 * sd / k.sqrt(), "mean {mean} vs {c}");
}

#[test]
fn estimators_agree_on_a_long_run() {
    let stats = summarize(&run(7, 14, 0.5, 100_000, 4)).unwrap();
    let mom = estimate(&stats, Method::Mom, DEFAULT_TOL).unwrap().p_hat;
    let ls = estimate(&stats, Method::Ls, DEFAULT_TOL).unwrap().p_hat;
    assert!((mom - ls).abs() <= 0.02, "mom {mom} ls {ls}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_row_conserves_walkers(n in 2usize..7, m in 1usize..20, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let cfg = SimConfig::new(ModelDims::new(n, m).unwrap(), prob(p), 50, seed).unwrap().with_burn_in(20);
        let series = simulate(&cfg).unwrap();
        prop_assert_eq!(series.len(), 50);
        for row in series.rows() {
            prop_assert_eq!(row.iter().map(|&v| v as usize).sum::<usize>(), m);
        }
    }
}
