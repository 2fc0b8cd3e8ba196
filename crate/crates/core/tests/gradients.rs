use ldseq::model::gradient_suite;

#[test]
fn suite_passes_across_seeds() {
    for seed in 0..5 {
        let r = gradient_suite(seed, 1e-5, 1e-4).unwrap();
        assert!(r.passed(), "seed {seed}\n{}", r.to_text());
        assert!(r.cases.iter().all(|c| c.report.coords_checked > 0));
    }
}

#[test]
fn every_case_holds_over_a_hundred_random_inputs() {
    let mut worst = 0.0f64;
    for seed in 100..200 {
        let r = gradient_suite(seed, 1e-5, 1e-4).unwrap();
        assert!(r.passed(), "seed {seed}\n{}", r.to_text());
        worst = r.cases.iter().map(|c| c.report.max_rel_error).fold(worst, f64::max);
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn suite_covers_primitives_and_losses() {
    let r = gradient_suite(1, 1e-5, 1e-4).unwrap();
    let names: Vec<&str> = r.cases.iter().map(|c| c.name.as_str()).collect();
    for want in [
        "matmul",
        "softmax",
        "embedding",
        "sparse_matmul",
        "sequence_loss_soft",
        "sequence_loss_hard",
        "ld-seq2seq_loss",
        "rnn-mllr_loss",
    ] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
}

#[test]
fn tolerance_below_the_floating_point_floor_fails() {
    let r = gradient_suite(1, 1e-5, 1e-12).unwrap();
    assert!(!r.passed());
    assert!(!r.failures().is_empty());
}

