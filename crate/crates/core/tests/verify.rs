use posg_core::fixtures;
use posg_core::verify::{
    all_passed, check_lipschitz, check_one_sided, check_slave_structure, check_sufficiency_master,
    check_sufficiency_private, default_others, lipschitz_constant, run_suite, Fault, VerifyConfig,
};
use posg_core::{Criterion, Error, Model};

fn config(samples: usize, seed: u64) -> VerifyConfig {
    VerifyConfig { samples, seed, ..Default::default() }
}

#[test]
fn tiger_passes_every_suite() {
    let m: Model = fixtures::tiger();
    let reports = run_suite(&m, "tiger", "all", &config(30, 7)).unwrap();
    assert!(!reports.is_empty());
    assert!(all_passed(&reports), "{reports:#?}");
}

#[test]
fn selection_parsing() {
    let m: Model = fixtures::tiger();
    assert!(run_suite(&m, "tiger", "", &config(5, 0)).unwrap().is_empty());
    assert!(matches!(run_suite(&m, "tiger", "bogus", &config(5, 0)), Err(Error::UnknownSuite(_))));
    let reports = run_suite(&m, "tiger", "sufficiency", &config(5, 0)).unwrap();
    assert_eq!(reports.len(), 3);
    assert!(matches!(run_suite(&m, "tiger", "lipschitz", &config(5, 0)), Err(Error::CriterionMismatch { .. })));
}

#[test]
fn reports_are_reproducible() {
    let m: Model = fixtures::tiger_zs();
    let a = run_suite(&m, "tiger-zs", "sufficiency,master", &config(10, 3)).unwrap();
    let b = run_suite(&m, "tiger-zs", "sufficiency,master", &config(10, 3)).unwrap();
    let lines = |r: &[posg_core::verify::PropertyReport]| r.iter().map(|x| x.to_json_line()).collect::<Vec<_>>();
    assert_eq!(lines(&a), lines(&b));
}

#[test]
fn single_state_model_has_no_discrepancy() {
    let m: Model = fixtures::minimal();
    let r = check_sufficiency_master(&m, "minimal", &config(20, 1)).unwrap();
    assert_eq!(r.max_violation, 0.0);
    let r = check_sufficiency_private(&m, "minimal", 0, &config(20, 1)).unwrap();
    assert_eq!(r.max_violation, 0.0);
}

#[test]
fn one_sided_private_occupancy_is_a_state_belief() {
    let m: Model = fixtures::one_sided_tiger().unwrap();
    let r = check_one_sided(&m, "one-sided-tiger", 1, &config(30, 2)).unwrap();
    assert!(r.passed, "{}", r.to_json_line());
}

#[test]
fn one_stage_tiger_zero_sum_structure_holds_and_shows_a_concavity_gap() {
    let m: Model = fixtures::one_stage_tiger::<f64>().with_criterion(Criterion::ZeroSum).unwrap();
    let reports = run_suite(&m, "tiger-figure7", "master,lipschitz", &config(30, 0)).unwrap();
    assert!(all_passed(&reports), "{reports:#?}");
    let gap = reports.iter().find(|r| r.property == "zs-standard-basis-gap").unwrap();
    assert!(gap.diagnostic);
    // Concave on b > 0.5: the midpoint of b = 0.5 and b = 1 sits above the chord by 0.5 - 1/3.
    assert!(gap.max_violation >= 0.5 - 1.0 / 3.0 - 1e-6);
}

#[test]
fn corrupted_computations_fail() {
    let m: Model = fixtures::tiger();
    let faulty = |fault| VerifyConfig { fault, ..config(20, 0) };
    assert!(!check_sufficiency_master(&m, "tiger", &faulty(Fault::UniformJointRule { t: 0 })).unwrap().passed);
    assert!(!check_sufficiency_private(&m, "tiger", 0, &faulty(Fault::UniformOthersRule)).unwrap().passed);
    let perturbed = faulty(Fault::PerturbValues { amplitude: 0.1 });
    let slave = check_slave_structure(&m, "tiger", &default_others(&m, 0), 0, &perturbed).unwrap();
    assert!(slave.iter().all(|r| !r.passed));
    let zs: Model = fixtures::tiger_zs();
    assert!(!check_lipschitz(&zs, "tiger-zs", &faulty(Fault::PerturbValues { amplitude: 5.0 })).unwrap().passed);
}

#[test]
fn lipschitz_constant_falls_back_to_the_undiscounted_sum() {
    assert!((lipschitz_constant(0.9, 2.0, 3, 0) - 5.42).abs() < 1e-12);
    assert_eq!(lipschitz_constant(1.0, 2.0, 3, 1), 4.0);
    assert_eq!(lipschitz_constant(0.5, 1.0, 3, 3), 0.0);
}
