//! Acceptance gate: one test per shipping criterion. Each test prints a
//! single summary line with the numbers it judged, so a transcript of
//! `cargo test --test acceptance -- --nocapture` doubles as the sign-off
//! sheet.

use std::process::Command;
use std::time::{Duration, Instant};

use cheshire::model::ModelParams;
use cheshire::report::ReportDocument;
use cheshire::rng::StreamRng;
use cheshire::stats::Estimate;
use cheshire::{
    analytic_report_approx, analytic_report_exact, analytic_report_quadrature, fit, run,
    CalibrationTarget, Method, Policy, SimConfig,
};

/// Randomized but reproducible parameter sets in the regime where the
/// quadrature windows and the closed forms are both comfortably resolved.
fn random_params(index: u64) -> ModelParams {
    let mut rng = StreamRng::for_chunk(0xACCE_97A7E, index);
    let mut unit = || rng.next_uniform();
    let big_delta = 5.0 + 45.0 * unit();
    let delta = 0.5 + 4.5 * unit();
    let eps_c = 0.05 + 0.95 * unit();
    let eps_t = 0.05 + 0.95 * unit();
    let u = (4.0 * unit() - 2.0) * big_delta;
    let v = (4.0 * unit() - 2.0) * big_delta;
    let p = 0.05 + 0.9 * unit();
    let params = ModelParams {
        big_delta,
        delta,
        eps_c,
        eps_t,
        u,
        v,
        p,
        q: 1.0 - p,
    };
    params.validate().expect("generated set must be valid");
    params
}

fn z_score(est: &Estimate, truth: f64) -> f64 {
    (est.value - truth).abs() / est.std_error
}

#[test]
fn criterion_1_reproduce_paper_matches_published_numbers_within_a_second() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let output = Command::new(env!("CARGO_BIN_EXE_cheshire"))
        .arg("reproduce-paper")
        .arg("--out")
        .arg(&out_path)
        .output()
        .expect("binary should spawn");
    let elapsed = start.elapsed();

    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let doc: ReportDocument =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let approx = doc
        .analytic
        .iter()
        .find(|r| r.method == Method::PaperApprox)
        .expect("leading-order route present");

    assert!(
        (approx.prob_b - 0.251).abs() <= 0.002,
        "prob_b = {}",
        approx.prob_b
    );
    assert!(
        (approx.mean_x_b - 1.0).abs() <= 0.01,
        "mean_x_b = {}",
        approx.mean_x_b
    );
    assert!(
        (approx.mean_y_b - 1.0).abs() <= 0.01,
        "mean_y_b = {}",
        approx.mean_y_b
    );
    assert!(
        elapsed < Duration::from_secs(1),
        "took {elapsed:?}, budget 1 s"
    );
    println!(
        "criterion 1 PASS: prob_b = {:.6} (0.251 +- 0.002), mean_x_b = {:.6}, mean_y_b = {:.6} \
         (1.00 +- 0.01) in {elapsed:?}",
        approx.prob_b, approx.mean_x_b, approx.mean_y_b
    );
}

#[test]
fn criterion_2_exact_and_quadrature_agree_to_1e8_across_21_sets() {
    let start = Instant::now();
    let mut sets = vec![ModelParams::paper()];
    sets.extend((0..20).map(random_params));

    let mut worst: f64 = 0.0;
    for (i, params) in sets.iter().enumerate() {
        let exact = analytic_report_exact(params).unwrap();
        let quad = analytic_report_quadrature(params, 1e-8).unwrap();
        for (name, a, b) in [
            ("prob_b", exact.prob_b, quad.prob_b),
            ("mean_x_b", exact.mean_x_b, quad.mean_x_b),
            ("mean_y_b", exact.mean_y_b, quad.mean_y_b),
            ("crossmoment_b", exact.crossmoment_b, quad.crossmoment_b),
        ] {
            let diff = (a - b).abs();
            worst = worst.max(diff);
            assert!(
                diff <= 1e-8,
                "set {i}: {name} differs by {diff:e} ({a} exact vs {b} quadrature)"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(10),
        "took {elapsed:?}, budget 10 s"
    );
    println!(
        "criterion 2 PASS: 21 parameter sets, worst |exact - quadrature| = {worst:.3e} \
         (<= 1e-8) in {elapsed:?}"
    );
}

#[test]
fn criterion_3_leading_order_sits_within_one_percent_of_exact() {
    let params = ModelParams::paper();
    let approx = analytic_report_approx(&params).unwrap();
    let exact = analytic_report_exact(&params).unwrap();
    let rel_x = ((approx.mean_x_b - exact.mean_x_b) / exact.mean_x_b).abs();
    let rel_y = ((approx.mean_y_b - exact.mean_y_b) / exact.mean_y_b).abs();
    assert!(rel_x <= 0.01, "mean_x_b relative error {rel_x}");
    assert!(rel_y <= 0.01, "mean_y_b relative error {rel_y}");
    println!(
        "criterion 3 PASS: leading-order vs exact relative error {rel_x:.5} on mean_x_b, \
         {rel_y:.5} on mean_y_b (<= 0.01)"
    );
}

#[test]
fn criterion_4_cross_moments_vanish_on_every_tested_set() {
    let mut sets = vec![ModelParams::paper(), ModelParams::desk()];
    sets.extend((0..20).map(random_params));

    let mut worst: f64 = 0.0;
    for (i, params) in sets.iter().enumerate() {
        let quad = analytic_report_quadrature(params, 1e-8).unwrap();
        worst = worst.max(quad.crossmoment_b.abs());
        worst = worst.max(quad.signed_crossmoment.abs());
        assert!(
            quad.crossmoment_b.abs() <= 1e-8,
            "set {i}: |crossmoment_b| = {:e}",
            quad.crossmoment_b.abs()
        );
        assert!(
            quad.signed_crossmoment.abs() <= 1e-8,
            "set {i}: |signed_crossmoment| = {:e}",
            quad.signed_crossmoment.abs()
        );
    }
    println!(
        "criterion 4 PASS: 22 parameter sets, worst quadrature cross-moment magnitude \
         {worst:.3e} (<= 1e-8)"
    );
}

#[test]
fn criterion_5_hundred_million_events_match_quadrature_within_4_sigma() {
    let start = Instant::now();
    let params = ModelParams::desk();
    let config = SimConfig {
        n_events: 100_000_000,
        seed: 20260816,
        n_chunks: 256,
    };
    let est = run(&params, &config).unwrap();
    let truth = analytic_report_quadrature(&params, 1e-10).unwrap();
    let elapsed = start.elapsed();

    let checks = [
        ("prob_b_hat", est.prob_b_hat, truth.prob_b),
        ("mean_x_b", est.mean_x_b.unwrap(), truth.mean_x_b),
        ("mean_y_b", est.mean_y_b.unwrap(), truth.mean_y_b),
        (
            "crossmoment_b",
            est.crossmoment_b.unwrap(),
            truth.crossmoment_b,
        ),
    ];
    let mut zs = Vec::new();
    for (name, estimate, target) in checks {
        let z = z_score(&estimate, target);
        zs.push(format!("{name} z = {z:.2}"));
        assert!(
            z <= 4.0,
            "{name}: estimate {} +- {} vs quadrature {target} (z = {z:.2})",
            estimate.value,
            estimate.std_error
        );
    }
    assert!(
        elapsed < Duration::from_secs(60),
        "took {elapsed:?}, budget 60 s"
    );
    println!(
        "criterion 5 PASS: n = 1e8 benchtop events, {} (all <= 4) in {elapsed:?}",
        zs.join(", ")
    );
}

#[test]
fn criterion_6_detector_free_regime_recovers_the_baseline() {
    let params = ModelParams::desk().without_noise();
    let exact = analytic_report_exact(&params).unwrap();
    assert!((exact.prob_b - params.p).abs() <= 1e-12, "{}", exact.prob_b);
    assert!((exact.mean_x_b - 0.5).abs() <= 1e-12, "{}", exact.mean_x_b);
    assert!(exact.mean_y_b.abs() <= 1e-12, "{}", exact.mean_y_b);

    let config = SimConfig {
        n_events: 10_000_000,
        seed: 816,
        n_chunks: 64,
    };
    let est = run(&params, &config).unwrap();
    let z_p = z_score(&est.prob_b_hat, params.p);
    let z_x = z_score(&est.mean_x_b.unwrap(), 0.5);
    let z_y = z_score(&est.mean_y_b.unwrap(), 0.0);
    assert!(z_p <= 4.0, "prob z = {z_p}");
    assert!(z_x <= 4.0, "mean_x z = {z_x}");
    assert!(z_y <= 4.0, "mean_y z = {z_y}");
    println!(
        "criterion 6 PASS: detector-free analytics exact to 1e-12 \
         (prob_b = {:.15}, mean_x_b = {:.15}, mean_y_b = {:.2e}); \
         n = 1e7 run gives z = {z_p:.2}/{z_x:.2}/{z_y:.2} (all <= 4)",
        exact.prob_b, exact.mean_x_b, exact.mean_y_b
    );
}

#[test]
fn criterion_7_calibration_lands_both_unit_means() {
    let target = CalibrationTarget {
        target_mean_x_b: 1.0,
        target_mean_y_b: 1.0,
        base: ModelParams::paper(),
        policy: Policy::FixEpsSolveCenters,
        target_prob_excess: None,
    };
    let result = fit(target, 1e-12).unwrap();
    assert!(result.converged);
    assert!(
        (395.0..=410.0).contains(&result.params.u),
        "u = {}",
        result.params.u
    );
    assert!(
        (395.0..=410.0).contains(&result.params.v),
        "v = {}",
        result.params.v
    );
    assert!(
        result.residual_x.abs() <= 1e-10,
        "residual_x = {:e}",
        result.residual_x
    );
    assert!(
        result.residual_y.abs() <= 1e-10,
        "residual_y = {:e}",
        result.residual_y
    );

    let confirm = analytic_report_quadrature(&result.params, 1e-9).unwrap();
    assert!(
        (confirm.mean_x_b - 1.0).abs() <= 1e-8,
        "quadrature mean_x_b = {}",
        confirm.mean_x_b
    );
    assert!(
        (confirm.mean_y_b - 1.0).abs() <= 1e-8,
        "quadrature mean_y_b = {}",
        confirm.mean_y_b
    );
    println!(
        "criterion 7 PASS: solved u = {:.12}, v = {:.12}; exact residuals ({:.2e}, {:.2e}); \
         quadrature confirms means {:.12}/{:.12} (within 1e-8 of 1)",
        result.params.u,
        result.params.v,
        result.residual_x,
        result.residual_y,
        confirm.mean_x_b,
        confirm.mean_y_b
    );
}

#[test]
fn criterion_8_identical_runs_are_bit_identical() {
    let params = ModelParams::desk();
    let config = SimConfig {
        n_events: 2_000_000,
        seed: 42,
        n_chunks: 32,
    };
    let first = run(&params, &config).unwrap();
    let second = run(&params, &config).unwrap();
    assert_eq!(first, second, "same inputs must give the same estimates");

    let mut doc_a = ReportDocument::new(params);
    doc_a.sim_config = Some(config);
    doc_a.simulation = Some(first);
    let mut doc_b = ReportDocument::new(params);
    doc_b.sim_config = Some(config);
    doc_b.simulation = Some(second);
    let json_a = cheshire::report::to_json_string(&doc_a);
    let json_b = cheshire::report::to_json_string(&doc_b);
    assert_eq!(
        json_a, json_b,
        "serialized reports must match byte for byte"
    );
    println!(
        "criterion 8 PASS: two runs of (desk, seed 42, 32 chunks, 2e6 events) agree bit for bit \
         ({} byte report)",
        json_a.len()
    );
}
