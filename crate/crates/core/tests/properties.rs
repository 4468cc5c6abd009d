//! Randomised invariants, checked against brute-force oracles.

mod props;

const CASES: u32 = 300;

#[test]
fn dep_set_chain() {
    props::dep_set_chain(CASES).unwrap();
}

#[test]
fn focused_set_is_intersection_of_minimal_dependency_sets() {
    props::focused_set_is_intersection_of_minimal_dependency_sets(CASES).unwrap();
}

#[test]
fn prob_any_broken_is_monotone() {
    props::prob_any_broken_is_monotone(CASES).unwrap();
}

#[test]
fn intermittent_cancellation_implies_non_intermittent() {
    props::intermittent_cancellation_implies_non_intermittent(CASES).unwrap();
}

#[test]
fn rule3_matches_rule1_on_static_evidence() {
    props::rule3_matches_rule1_on_static_evidence(CASES).unwrap();
}

#[test]
fn probes_split_strictly() {
    props::probes_split_strictly(CASES).unwrap();
}

#[test]
fn entropy_reaches_the_halving_optimum_on_chains() {
    props::entropy_reaches_the_halving_optimum_on_chains(CASES).unwrap();
}

#[test]
fn loop_fixed_points_are_stable() {
    props::loop_fixed_points_are_stable(CASES).unwrap();
}

#[test]
fn transcripts_are_deterministic() {
    props::transcripts_are_deterministic(CASES).unwrap();
}
