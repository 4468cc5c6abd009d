use mbd::document::{fault_doc, parse_faults, parse_model, parse_observations, ModelDocument, ObservationDoc};
use mbd_core::simulator::{generate, pick_faults, random_boolean, Family, GeneratorConfig};
use mbd_core::{Observation, Value};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Chain), (1usize..4).prop_map(|k| Family::Tree { k }), (1usize..4).prop_map(|k| Family::Dag { k })]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_models_round_trip(family in family(), n in 1usize..30, seed in any::<u64>()) {
        let g = generate(GeneratorConfig { family, n, seed });
        let text = serde_json::to_string(&ModelDocument::from_model(&g.model)).unwrap();
        prop_assert_eq!(parse_model(&text).unwrap(), g.model.clone());
        let faults = pick_faults(&g, 2, seed);
        let docs: Vec<_> = faults.iter().map(fault_doc).collect();
        prop_assert_eq!(parse_faults(&serde_json::to_string(&docs).unwrap()).unwrap(), faults);
    }

    #[test]
    fn boolean_models_round_trip(gates in 1usize..25, fanin in 1usize..4, seed in any::<u64>()) {
        let g = random_boolean(gates, fanin, seed);
        let doc = ModelDocument::from_model(&g.model);
        let text = serde_json::to_string_pretty(&doc).unwrap();
        prop_assert_eq!(parse_model(&text).unwrap(), g.model);
        prop_assert_eq!(ModelDocument::parse(&text).unwrap(), doc);
    }

    #[test]
    fn observations_round_trip(
        values in prop::collection::vec(
            prop_oneof![
                any::<bool>().prop_map(Value::Bool),
                any::<i64>().prop_map(Value::Int),
                (-1e6f64..1e6).prop_map(Value::Real),
                "[a-z]{1,6}".prop_map(Value::Sym),
            ],
            0..10,
        ),
        time in 0u32..5,
    ) {
        let obs: Vec<Observation> =
            values.into_iter().enumerate().map(|(i, v)| Observation::new(format!("c{i}"), time, v)).collect();
        let docs: Vec<ObservationDoc> = obs.iter().map(ObservationDoc::from).collect();
        let back = parse_observations(&serde_json::to_string(&docs).unwrap()).unwrap();
        prop_assert_eq!(back, obs);
    }
}

#[test]
fn time_defaults_to_zero() {
    let obs = parse_observations(r#"[{"component": "a", "value": 1}]"#).unwrap();
    assert_eq!(obs, [Observation::new("a", 0, Value::Int(1))]);
}
