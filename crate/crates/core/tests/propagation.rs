mod common;

use std::collections::BTreeMap;

use common::{assumption_label, bit, ids, strs, tc, timed};
use mbd_core::circuits;
use mbd_core::propagation::{
    enumerate_dep_sets, forward_predict, loop_predict_assumption, loop_predict_stateful, temporal_predict,
};
use mbd_core::{ComponentId, Observation, Origin, PropagationError, SystemModel, Value};

fn row(model: &SystemModel, p: &mbd_core::Prediction) -> (String, Value, Vec<String>) {
    let mut focused = ids(model, &p.deps.focused);
    focused.extend(p.deps.assumptions.iter().map(|a| assumption_label(model, a)));
    focused.sort();
    (model.id(p.owner.comp).to_string(), p.value.clone(), focused)
}

#[test]
fn full_adder_focused_table() {
    let m = circuits::full_adder();
    let s = forward_predict(&m, &circuits::full_adder_observations()).unwrap();
    let expect = [
        ("and1", false, &["and1"][..]),
        ("xor1", true, &["xor1"]),
        ("and2", true, &["and2", "xor1"]),
        ("xor2", false, &["xor1", "xor2"]),
        ("or1", true, &["and2", "or1", "xor1"]),
    ];
    for (id, value, focused) in expect {
        let p = s.unique(tc(&m, id, 0)).unwrap();
        assert_eq!(p.value, bit(value), "{id}");
        assert_eq!(ids(&m, &p.deps.focused), strs(focused), "{id}");
        assert!(p.deps.mask_free.is_subset(&p.deps.focused));
        assert!(p.deps.focused.is_subset(&p.deps.dep));
    }
}

#[test]
fn absorbing_input_narrows_focused_set() {
    // and1 = and(a=1, b=0): b alone forces the output, and b is measured
    let m = circuits::full_adder();
    let s = forward_predict(&m, &circuits::full_adder_observations()).unwrap();
    let p = s.unique(tc(&m, "and1", 0)).unwrap();
    assert_eq!(ids(&m, &p.deps.dep), strs(&["and1"]));
}

#[test]
fn generators_masking_indicator() {
    let m = circuits::generators();
    let obs = [Observation::new("sa", 0, bit(true)), Observation::new("sb", 0, bit(true))];
    let s = forward_predict(&m, &obs).unwrap();
    let d = s.unique(tc(&m, "d", 0)).unwrap();
    assert_eq!(ids(&m, &d.deps.focused), strs(&["b", "d"]));
    assert_eq!(ids(&m, &d.deps.mask_free), strs(&["d"]));
    let e = s.unique(tc(&m, "e", 0)).unwrap();
    assert_eq!(ids(&m, &e.deps.focused), strs(&["b", "d", "e"]));
    assert_eq!(ids(&m, &e.deps.mask_free), strs(&["b", "d", "e"]));
}

fn flipflop_rows() -> Vec<(String, Value, Vec<String>)> {
    let m = circuits::flipflop();
    let s = forward_predict(&m, &circuits::flipflop_observations()).unwrap();
    let mut rows: Vec<_> = s
        .all()
        .filter(|p| !m.component(p.owner.comp).is_source())
        .map(|p| row(&m, p))
        .collect();
    rows.sort();
    rows
}

#[test]
fn flipflop_assumption_table() {
    let a0 = "output(nand5)=0";
    let a1 = "output(nand5)=1";
    let mut expect: Vec<(String, Value, Vec<String>)> = [
        ("inv1", true, vec!["inv1"]),
        ("nand2", true, vec!["nand2"]),
        ("nand3", true, vec!["nand3"]),
        ("nand4", true, vec![a0, "nand4"]),
        ("nand4", false, vec![a1, "nand2", "nand4"]),
        ("nand5", false, vec![a0]),
        ("nand5", true, vec![a1]),
        ("and6", true, vec![a0, "and6", "nand4"]),
        ("and6", false, vec![a1, "and6", "nand2", "nand4"]),
        ("and7", false, vec![a0, "and7"]),
        ("and7", true, vec![a1, "and7"]),
    ]
    .into_iter()
    .map(|(id, v, f)| (id.to_string(), bit(v), strs(&f)))
    .collect();
    expect.sort();
    assert_eq!(flipflop_rows(), expect);
}

#[test]
fn flipflop_loop_checks_confirm_both_states() {
    let m = circuits::flipflop();
    let scc: Vec<ComponentId> = ["nand4", "nand5"].into_iter().map(ComponentId::from).collect();
    let (preds, checks) = loop_predict_assumption(&m, &circuits::flipflop_observations(), &scc).unwrap();
    assert_eq!(preds.iter().filter(|p| p.origin == Origin::Assumed).count(), 2);
    let mut rows: Vec<_> = checks.iter().map(|p| row(&m, p)).collect();
    rows.sort();
    assert_eq!(
        rows,
        [
            ("nand5".into(), bit(false), strs(&["output(nand5)=0", "nand3", "nand4", "nand5"])),
            ("nand5".into(), bit(true), strs(&["output(nand5)=1", "nand2", "nand4", "nand5"])),
        ]
    );
}

#[test]
fn measured_loop_wire_resolves_the_loop() {
    let m = circuits::flipflop();
    let mut obs = circuits::flipflop_observations();
    obs.push(Observation::new("nand5", 0, bit(true)));
    let s = forward_predict(&m, &obs).unwrap();
    assert!(s.loop_checks.is_empty());
    let and7 = s.unique(tc(&m, "and7", 0)).unwrap();
    assert_eq!(and7.value, bit(true));
    assert_eq!(ids(&m, &and7.deps.focused), strs(&["and7"]));
    // nand5 = nand(nand3, nand4) is predicted from the measured nand5 fed round
    let nand5 = s.unique(tc(&m, "nand5", 0)).unwrap();
    assert_eq!(nand5.value, bit(true));
    assert!(nand5.deps.assumptions.is_empty());
}

#[test]
fn nand_latch_fixed_point_from_previous_state() {
    let m = circuits::nand_latch();
    let obs = [Observation::new("s_n", 0, bit(true)), Observation::new("r_n", 0, bit(true))];
    let scc: Vec<ComponentId> = ["q", "qn"].into_iter().map(ComponentId::from).collect();
    for q in [false, true] {
        let prev = BTreeMap::from([(ComponentId::from("q"), bit(q)), (ComponentId::from("qn"), bit(!q))]);
        let preds = loop_predict_stateful(&m, &obs, &scc, &prev, None).unwrap();
        let values: BTreeMap<String, Value> = preds.iter().map(|p| (m.id(p.owner.comp).to_string(), p.value.clone())).collect();
        assert_eq!(values["q"], bit(q));
        assert_eq!(values["qn"], bit(!q));
    }
}

#[test]
fn nand_latch_set_input_forces_state() {
    let m = circuits::nand_latch();
    let obs = [Observation::new("s_n", 0, bit(false)), Observation::new("r_n", 0, bit(true))];
    let scc: Vec<ComponentId> = ["q", "qn"].into_iter().map(ComponentId::from).collect();
    let prev = BTreeMap::from([(ComponentId::from("q"), bit(false)), (ComponentId::from("qn"), bit(true))]);
    let preds = loop_predict_stateful(&m, &obs, &scc, &prev, None).unwrap();
    let q = preds.iter().find(|p| m.id(p.owner.comp).as_str() == "q").unwrap();
    assert_eq!(q.value, bit(true));
    assert_eq!(ids(&m, &q.deps.focused), strs(&["q"]));
}

#[test]
fn oscillating_loop_has_no_fixed_point() {
    use mbd_core::{gates, Component, ModelBuilder};
    let m = ModelBuilder::default()
        .component(Component::function("x", ["in1"], gates::not()))
        .connect("x", "x", "in1")
        .build()
        .unwrap();
    let prev = BTreeMap::from([(ComponentId::from("x"), bit(false))]);
    let err = loop_predict_stateful(&m, &[], &[ComponentId::from("x")], &prev, Some(10)).unwrap_err();
    assert!(matches!(err, PropagationError::NoFixedPoint { iterations: 10, .. }));
}

#[test]
fn delay_reaches_back_in_time() {
    let m = circuits::delay(3);
    let s = forward_predict(&m, &circuits::delay_inputs(3)).unwrap();
    let c0 = s.unique(tc(&m, "c", 0)).unwrap();
    assert_eq!(c0.value, bit(false));
    assert_eq!(timed(&m, &c0.deps.focused), [("c".to_string(), 0)]);
    let c2 = s.unique(tc(&m, "c", 2)).unwrap();
    assert_eq!(c2.value, bit(true));
    assert_eq!(timed(&m, &c2.deps.focused), [("a".to_string(), 1), ("c".to_string(), 2)]);
    let d1 = s.unique(tc(&m, "d", 1)).unwrap();
    assert_eq!(timed(&m, &d1.deps.focused), [("a".to_string(), 1), ("b".to_string(), 1), ("d".to_string(), 1)]);
}

#[test]
fn temporal_predict_keeps_sample_times() {
    let m = circuits::delay(4);
    let s = temporal_predict(&m, &circuits::delay_inputs(4), &[3]).unwrap();
    assert!(s.predictions.keys().all(|k| k.time == 3));
    let c3 = s.unique(tc(&m, "c", 3)).unwrap();
    assert_eq!(timed(&m, &c3.deps.focused), [("a".to_string(), 2), ("c".to_string(), 3)]);
}

#[test]
fn two_stage_delay_chain() {
    use mbd_core::{gates, Component, ModelBuilder};
    let m = ModelBuilder::default()
        .component(Component::source("s"))
        .component(Component::function("x", ["in1"], gates::buf()))
        .component(Component::function("y", ["in1"], gates::not()).with_stateful(1, Some(bit(false))))
        .component(Component::function("z", ["in1"], gates::buf()).with_stateful(1, None))
        .connect("s", "x", "in1")
        .connect("x", "y", "in1")
        .connect("y", "z", "in1")
        .observe_all()
        .time_horizon(3)
        .build()
        .unwrap();
    let obs: Vec<_> = (0..3).map(|t| Observation::new("s", t, bit(t != 1))).collect();
    let s = forward_predict(&m, &obs).unwrap();
    assert!(s.get(tc(&m, "z", 0)).is_empty());
    let z1 = s.unique(tc(&m, "z", 1)).unwrap();
    assert_eq!((z1.value.clone(), timed(&m, &z1.deps.focused)), (bit(false), vec![("y".into(), 0), ("z".into(), 1)]));
    let z2 = s.unique(tc(&m, "z", 2)).unwrap();
    // y(1) = not x(0) = not s(0) = 0
    assert_eq!(z2.value, bit(false));
    assert_eq!(timed(&m, &z2.deps.focused), [("x".into(), 0), ("y".into(), 1), ("z".into(), 2)]);
}

#[test]
fn forward_focused_matches_enumeration_on_reference_circuits() {
    let cases = [
        (circuits::full_adder(), circuits::full_adder_observations()),
        (circuits::generators(), circuits::generators_observations(true, true, true)),
        (circuits::delay(3), circuits::delay_inputs(3)),
    ];
    for (m, obs) in cases {
        let s = forward_predict(&m, &obs).unwrap();
        for p in s.all() {
            let e = enumerate_dep_sets(&m, &obs, p.owner, 10_000).unwrap();
            assert!(!e.truncated);
            assert_eq!(e.intersection(), p.deps.focused, "{}", m.id(p.owner.comp));
        }
    }
}

#[test]
fn observation_errors() {
    let m = circuits::full_adder();
    let err = |obs: Vec<Observation>| forward_predict(&m, &obs).unwrap_err();
    assert!(matches!(err(vec![Observation::new("zz", 0, bit(true))]), PropagationError::UnknownComponent(_)));
    assert!(matches!(err(vec![Observation::new("a", 1, bit(true))]), PropagationError::TimeOutOfRange { .. }));
    assert!(matches!(err(vec![Observation::new("a", 0, Value::Int(3))]), PropagationError::ValueOutOfDomain { .. }));
    let dup = vec![Observation::new("a", 0, bit(true)), Observation::new("a", 0, bit(false))];
    assert!(matches!(err(dup), PropagationError::DuplicateObservation { .. }));
    assert!(matches!(err(vec![]), PropagationError::MissingSource { .. }));
    let f = circuits::flipflop();
    let e = forward_predict(&f, &[Observation::new("nand4", 0, bit(true))]).unwrap_err();
    assert!(matches!(e, PropagationError::NotObservable(_)));
}
