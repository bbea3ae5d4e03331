use posg_core::fixtures::{self, MINIMAL, TIGER};
use posg_core::{horizon_for_epsilon, parse_posg, Criterion, Error, Model, ParseErrorKind};

fn parse(text: &str) -> posg_core::Result<Model> {
    parse_posg(text)
}

#[test]
fn tiger_tables_match_the_hearing_accuracy() {
    let m: Model = fixtures::tiger();
    assert_eq!(m.n_agents(), 2);
    assert_eq!(m.n_states(), 2);
    assert_eq!(m.n_joint_actions(), 9);
    assert_eq!(m.n_joint_obs(), 4);
    assert_eq!(m.horizon(), 2);
    let ll = m.joint_action(&[0, 0]);
    let left = m.state_index("tiger-left").unwrap();
    let hl = m.agent_obs_index(0, "hear-left").unwrap();
    let hr = m.agent_obs_index(0, "hear-right").unwrap();
    // Each agent hears correctly with probability 0.85, independently.
    let oracle = |a: bool, b: bool| (if a { 0.85 } else { 0.15 }) * (if b { 0.85 } else { 0.15 });
    for (z1, c1) in [(hl, true), (hr, false)] {
        for (z2, c2) in [(hl, true), (hr, false)] {
            let p = m.observation(ll, left, m.joint_obs(0, &[z1, z2]));
            assert!((p - oracle(c1, c2)).abs() < 1e-12);
        }
    }
    assert_eq!(m.transition(ll, left, left), 1.0);
    let open = m.joint_action(&[1, 0]);
    assert_eq!(m.transition(open, left, 1 - left), 0.5);
    assert_eq!(m.reward(0, left, ll), -2.0);
    assert_eq!(m.reward(1, left, m.joint_action(&[2, 2])), 20.0);
    assert_eq!(m.classify().unwrap(), Criterion::Common);
}

#[test]
fn minimal_model_is_the_identity_chain() {
    let m = parse(MINIMAL).unwrap();
    assert_eq!((m.n_agents(), m.n_states(), m.n_joint_actions(), m.n_joint_obs()), (1, 1, 1, 1));
    assert_eq!(m.transition(0, 0, 0), 1.0);
    assert_eq!(m.observation(0, 0, 0), 1.0);
    assert_eq!(m.start(), &[1.0]);
}

#[test]
fn zero_sum_fixture_negates_rewards() {
    let m: Model = fixtures::tiger_zs();
    for x in 0..m.n_states() {
        for u in 0..m.n_joint_actions() {
            assert_eq!(m.reward(0, x, u), -m.reward(1, x, u));
        }
    }
    assert_eq!(m.classify().unwrap(), Criterion::ZeroSum);
}

#[test]
fn unknown_label_reports_line_and_column() {
    let text = TIGER.replacen("R1: listen listen : * : -2", "R1: listen shout : * : -2", 1);
    let line = text.lines().position(|l| l.contains("shout")).unwrap() + 1;
    match parse(&text) {
        Err(Error::Parse { line: l, col, kind: ParseErrorKind::UnknownLabel(_) }) => {
            assert_eq!(l, line);
            assert_eq!(col, 12);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn rows_that_do_not_sum_to_one_are_rejected() {
    let text = TIGER.replacen(
        "T: listen listen : tiger-left : tiger-right : 0.0",
        "T: listen listen : tiger-left : tiger-right : 0.5",
        1,
    );
    assert!(matches!(parse(&text), Err(Error::RowSum { table: "transition", .. })));
}

#[test]
fn declared_criterion_must_match_rewards() {
    let text = TIGER.replacen("criterion: common", "criterion: zerosum", 1);
    assert!(matches!(parse(&text), Err(Error::CriterionMismatch { .. })));
}

#[test]
fn truncated_input_is_a_parse_error() {
    let err = parse("agents: 2\nstates: a b\nactions:\nx y\n").unwrap_err();
    assert!(matches!(err, Error::Parse { .. }), "{err}");
}

#[test]
fn criterion_rewrite_produces_a_consistent_model() {
    let m: Model = fixtures::one_stage_tiger();
    let zs = m.with_criterion(Criterion::ZeroSum).unwrap();
    assert_eq!(zs.classify().unwrap(), Criterion::ZeroSum);
    assert_eq!(zs.reward(1, 0, zs.joint_action(&[1, 1])), -2.0);
}

#[test]
fn horizon_for_epsilon_matches_the_geometric_tail() {
    // Smallest h with γ^h·c/(1−γ) ≤ ε.
    let oracle = |gamma: f64, c: f64, eps: f64| (1..).find(|&h| gamma.powi(h) * c / (1.0 - gamma) <= eps).unwrap();
    for (g, c, e) in [(0.9, 2.0, 0.1), (0.95, 1.0, 0.01), (0.5, 1.0, 0.001)] {
        assert_eq!(horizon_for_epsilon(g, c, e).unwrap(), oracle(g, c, e) as usize);
    }
    assert!(matches!(horizon_for_epsilon(1.0, 1.0, 0.1), Err(Error::UndiscountedHorizon)));
}

#[test]
fn scalar_cast_preserves_tables() {
    let m: Model = fixtures::tiger();
    let f: posg_core::model::PosgModel<f32> = m.cast();
    assert!((f.observation(0, 0, 0) - 0.7225).abs() < 1e-6);
}
