//! Seeded random systems for sweeps and property tests.
//!
//! The benchmark families are integer adders: every gate adds its inputs and
//! a constant offset, so no input is ever masked and any wrong input value
//! shows at the output. Sources are named `s0000...`, gates `c00000...`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fault::FaultSpec;
use crate::gates;
use crate::model::{Component, ModelBuilder, Observation, SystemModel};
use crate::propagation::{forward_predict, TimedComponent};
use crate::value::{Value, ValueDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Each gate reads the previous one.
    Chain,
    /// A `k`-ary in-tree rooted at the first gate; leaves read sources.
    Tree { k: usize },
    /// Each gate reads 1 to `k` distinct earlier gates or sources.
    Dag { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeneratorConfig {
    pub family: Family,
    /// Number of gates.
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub model: SystemModel,
    /// A value for every source at time 0.
    pub inputs: Vec<Observation>,
}

fn source_name(i: usize) -> String {
    format!("s{i:04}")
}

fn gate_name(i: usize) -> String {
    format!("c{i:05}")
}

/// Wires gates `0..n` from the given input lists, where `Ok(j)` is gate `j`
/// and `Err(j)` is source `j`.
fn adders(inputs: &[Vec<Result<usize, usize>>], sources: usize, rng: &mut ChaCha8Rng) -> Generated {
    let mut b = ModelBuilder::default();
    let mut values = Vec::with_capacity(sources);
    for s in 0..sources {
        b = b.component(Component::source(source_name(s)).with_domain(ValueDomain::Integer));
        values.push(Observation::new(source_name(s), 0, Value::Int(rng.random_range(0..10))));
    }
    for (g, ins) in inputs.iter().enumerate() {
        let offset = rng.random_range(-3..=3);
        let spec = gates::sum(ins.len(), offset);
        b = b.component(
            Component::function(gate_name(g), gates::ports(ins.len()), spec).with_domain(ValueDomain::Integer),
        );
        for (p, i) in ins.iter().enumerate() {
            let from = match i {
                Ok(j) => gate_name(*j),
                Err(j) => source_name(*j),
            };
            b = b.connect(&from, &gate_name(g), &gates::port(p));
        }
    }
    Generated { model: b.observe_all().build().expect("generated model"), inputs: values }
}

pub fn generate(config: GeneratorConfig) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n;
    match config.family {
        Family::Chain => {
            let inputs: Vec<_> = (0..n).map(|g| alloc::vec![if g == 0 { Err(0) } else { Ok(g - 1) }]).collect();
            adders(&inputs, 1, &mut rng)
        }
        Family::Tree { k } => {
            let k = k.max(1);
            let mut inputs: Vec<Vec<Result<usize, usize>>> = alloc::vec![Vec::new(); n];
            for child in 1..n {
                inputs[(child - 1) / k].push(Ok(child));
            }
            let mut sources = 0;
            for ins in inputs.iter_mut().filter(|i| i.is_empty()) {
                ins.push(Err(sources));
                sources += 1;
            }
            adders(&inputs, sources.max(1), &mut rng)
        }
        Family::Dag { k } => {
            let k = k.max(1);
            let sources = (n / 8).max(2);
            let mut inputs = Vec::with_capacity(n);
            for g in 0..n {
                let pool = sources + g;
                let fanin = rng.random_range(1..=k.min(pool));
                let mut picked: Vec<usize> = Vec::with_capacity(fanin);
                while picked.len() < fanin {
                    let x = rng.random_range(0..pool);
                    if !picked.contains(&x) {
                        picked.push(x);
                    }
                }
                picked.sort_unstable();
                inputs.push(picked.into_iter().map(|x| if x < sources { Err(x) } else { Ok(x - sources) }).collect());
            }
            adders(&inputs, sources, &mut rng)
        }
    }
}

/// A small acyclic Boolean circuit of `gates` random gates (fan-in up to
/// `max_fanin`) over two or three sources, all outputs observable. Some
/// gates are absorbing (and, or, nand, nor) and some single-input gates
/// declare a masking input.
pub fn random_boolean(gates: usize, max_fanin: usize, seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = rng.random_range(2..=3usize);
    let mut b = ModelBuilder::default();
    let mut values = Vec::new();
    for s in 0..sources {
        b = b.component(Component::source(source_name(s)));
        values.push(Observation::new(source_name(s), 0, Value::Bool(rng.random_bool(0.5))));
    }
    for g in 0..gates {
        let pool = sources + g;
        let fanin = rng.random_range(1..=max_fanin.clamp(1, 3).min(pool));
        let spec = match (fanin, rng.random_range(0..4u8)) {
            (1, 0) => gates::not(),
            (1, 1) => gates::buf().with_masking(["in1"]),
            (1, _) => gates::buf(),
            (2, 0) => gates::xor(),
            (n, 1) => gates::or(n),
            (n, 2) => gates::nand(n),
            (n, 3) if n > 2 => gates::nor(n),
            (n, _) => gates::and(n),
        };
        b = b.component(Component::function(gate_name(g), gates::ports(fanin), spec));
        let mut picked: Vec<usize> = Vec::new();
        while picked.len() < fanin {
            let x = rng.random_range(0..pool);
            if !picked.contains(&x) {
                picked.push(x);
            }
        }
        for (p, x) in picked.into_iter().enumerate() {
            let from = if x < sources { source_name(x) } else { gate_name(x - sources) };
            b = b.connect(&from, &gate_name(g), &gates::port(p));
        }
    }
    Generated { model: b.observe_all().build().expect("random boolean model"), inputs: values }
}

/// `count` stuck-at faults on distinct random gates, each stuck at a value
/// other than its fault-free prediction (Booleans flipped, integers
/// shifted by 1 to 3).
pub fn pick_faults(generated: &Generated, count: usize, seed: u64) -> Vec<FaultSpec> {
    let model = &generated.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = forward_predict(model, &generated.inputs).expect("generated inputs predict");
    let gates: Vec<_> = model.ixs().filter(|&c| !model.component(c).is_source()).collect();
    let mut picked = Vec::new();
    while picked.len() < count.min(gates.len()) {
        let c = gates[rng.random_range(0..gates.len())];
        if !picked.contains(&c) {
            picked.push(c);
        }
    }
    picked
        .into_iter()
        .map(|c| {
            let predicted = state.unique(TimedComponent::new(c, 0)).map(|p| p.value.clone());
            let stuck = match predicted {
                Some(Value::Int(v)) => Value::Int(v + rng.random_range(1..=3)),
                Some(Value::Bool(v)) => Value::Bool(!v),
                Some(other) => model
                    .component(c)
                    .domain
                    .finite_values()
                    .and_then(|vs| vs.into_iter().find(|v| *v != other))
                    .unwrap_or(other),
                None => Value::Bool(true),
            };
            FaultSpec::stuck_at(model.id(c).clone(), stuck)
        })
        .collect()
}
