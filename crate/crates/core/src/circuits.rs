//! Small reference systems used by tests, examples and the CLI.

use alloc::vec::Vec;

use crate::expr::Expr;
use crate::gates::{self, ports};
use crate::model::{Branch, Component, FunctionSpec, ModelBuilder, Observation, SystemModel};
use crate::value::Value;

fn bit(b: bool) -> Value {
    Value::Bool(b)
}

/// One-bit full adder: sources `a`, `b`, `cin`; gates `xor1`, `and1`,
/// `xor2`, `and2`, `or1`. Every gate output is observable.
pub fn full_adder() -> SystemModel {
    ModelBuilder::default()
        .component(Component::source("a"))
        .component(Component::source("b"))
        .component(Component::source("cin"))
        .component(Component::function("xor1", ports(2), gates::xor()))
        .component(Component::function("and1", ports(2), gates::and(2)))
        .component(Component::function("xor2", ports(2), gates::xor()))
        .component(Component::function("and2", ports(2), gates::and(2)))
        .component(Component::function("or1", ports(2), gates::or(2)))
        .connect("a", "xor1", "in1")
        .connect("b", "xor1", "in2")
        .connect("a", "and1", "in1")
        .connect("b", "and1", "in2")
        .connect("xor1", "xor2", "in1")
        .connect("cin", "xor2", "in2")
        .connect("xor1", "and2", "in1")
        .connect("cin", "and2", "in2")
        .connect("and1", "or1", "in1")
        .connect("and2", "or1", "in2")
        .observable("xor1")
        .observable("and1")
        .observable("xor2")
        .observable("and2")
        .observable("or1")
        .build()
        .expect("full adder")
}

/// Inputs a=1, b=0, cin=1 with the sum correct (xor2=0) and the carry
/// wrong (or1=0).
pub fn full_adder_observations() -> Vec<Observation> {
    alloc::vec![
        Observation::new("a", 0, bit(true)),
        Observation::new("b", 0, bit(false)),
        Observation::new("cin", 0, bit(true)),
        Observation::new("xor2", 0, bit(false)),
        Observation::new("or1", 0, bit(false)),
    ]
}

/// Two generators `a`, `b` (driven by sources `sa`, `sb`), a diode bridge
/// `c` passing power from either, an indicator `d` showing whether `b`
/// delivers (it cannot tell a low voltage, so its input masks) and an
/// engine `e` fed by `b` and enabled by `d`. The engine has no switch
/// branches, so it always depends on both inputs.
pub fn generators() -> SystemModel {
    ModelBuilder::default()
        .component(Component::source("sa"))
        .component(Component::source("sb"))
        .component(Component::function("a", ["in1"], gates::buf()))
        .component(Component::function("b", ["in1"], gates::buf()))
        .component(Component::function("c", ports(2), gates::or(2)))
        .component(Component::function("d", ["in1"], gates::buf().with_masking(["in1"])))
        .component(Component::function("e", ports(2), engine()))
        .connect("sa", "a", "in1")
        .connect("sb", "b", "in1")
        .connect("a", "c", "in1")
        .connect("b", "c", "in2")
        .connect("b", "d", "in1")
        .connect("b", "e", "in1")
        .connect("d", "e", "in2")
        .observable("a")
        .observable("b")
        .observable("c")
        .observable("d")
        .observable("e")
        .build()
        .expect("generators")
}

fn engine() -> FunctionSpec {
    FunctionSpec::new(alloc::vec![Branch::always(Expr::parse("in1 and in2").expect("engine"))])
}

/// Both generators running; `c`, `d`, `e` measured, each either as
/// predicted (`true`) or contradicting the prediction.
pub fn generators_observations(c_ok: bool, d_ok: bool, e_ok: bool) -> Vec<Observation> {
    // every prediction is 1 except e, which follows the measured d
    let e_predicted = d_ok;
    alloc::vec![
        Observation::new("sa", 0, bit(true)),
        Observation::new("sb", 0, bit(true)),
        Observation::new("c", 0, bit(c_ok)),
        Observation::new("d", 0, bit(d_ok)),
        Observation::new("e", 0, bit(e_predicted == e_ok)),
    ]
}

/// Gated latch: `inv1 = not D`, `nand2 = nand(D, E)`, `nand3 = nand(inv1,
/// S)`, cross-coupled `nand4 = nand(nand2, nand5)` and `nand5 =
/// nand(nand3, nand4)`, outputs `and6 = nand4 and E` (Q) and `and7 =
/// nand5 and E` (not Q). The loop is cut at `nand5`.
pub fn flipflop() -> SystemModel {
    ModelBuilder::default()
        .component(Component::source("D"))
        .component(Component::source("S"))
        .component(Component::source("E"))
        .component(Component::function("inv1", ["in1"], gates::not()))
        .component(Component::function("nand2", ports(2), gates::nand(2)))
        .component(Component::function("nand3", ports(2), gates::nand(2)))
        .component(Component::function("nand4", ports(2), gates::nand(2)))
        .component(Component::function("nand5", ports(2), gates::nand(2)).with_loop_cut())
        .component(Component::function("and6", ports(2), gates::and(2)))
        .component(Component::function("and7", ports(2), gates::and(2)))
        .connect("D", "inv1", "in1")
        .connect("D", "nand2", "in1")
        .connect("E", "nand2", "in2")
        .connect("inv1", "nand3", "in1")
        .connect("S", "nand3", "in2")
        .connect("nand2", "nand4", "in1")
        .connect("nand5", "nand4", "in2")
        .connect("nand3", "nand5", "in1")
        .connect("nand4", "nand5", "in2")
        .connect("nand4", "and6", "in1")
        .connect("E", "and6", "in2")
        .connect("nand5", "and7", "in1")
        .connect("E", "and7", "in2")
        .observable("nand5")
        .observable("and6")
        .observable("and7")
        .build()
        .expect("flipflop")
}

/// D=0, S=0, E=1 with both outputs measured 0.
pub fn flipflop_observations() -> Vec<Observation> {
    alloc::vec![
        Observation::new("D", 0, bit(false)),
        Observation::new("S", 0, bit(false)),
        Observation::new("E", 0, bit(true)),
        Observation::new("and6", 0, bit(false)),
        Observation::new("and7", 0, bit(false)),
    ]
}

/// `a`, `b` buffer sources `sa`, `sb`; `c` repeats `a` one step later
/// (initially 0); `d = a and b`. Runs for `horizon` steps.
pub fn delay(horizon: u32) -> SystemModel {
    ModelBuilder::default()
        .component(Component::source("sa"))
        .component(Component::source("sb"))
        .component(Component::function("a", ["in1"], gates::buf()))
        .component(Component::function("b", ["in1"], gates::buf()))
        .component(Component::function("c", ["in1"], gates::buf()).with_stateful(1, Some(bit(false))))
        .component(Component::function("d", ports(2), gates::and(2)))
        .connect("sa", "a", "in1")
        .connect("sb", "b", "in1")
        .connect("a", "c", "in1")
        .connect("a", "d", "in1")
        .connect("b", "d", "in2")
        .observable("c")
        .observable("d")
        .time_horizon(horizon)
        .build()
        .expect("delay")
}

/// Both sources held at 1 for every step.
pub fn delay_inputs(horizon: u32) -> Vec<Observation> {
    (0..horizon)
        .flat_map(|t| [Observation::new("sa", t, bit(true)), Observation::new("sb", t, bit(true))])
        .collect()
}

/// Source `on` drives a power supply `psu` feeding three bulbs.
pub fn bulbs() -> SystemModel {
    let mut b = ModelBuilder::default()
        .component(Component::source("on"))
        .component(Component::function("psu", ["in1"], gates::buf()))
        .connect("on", "psu", "in1")
        .observable("psu");
    for name in ["bulb1", "bulb2", "bulb3"] {
        b = b
            .component(Component::function(name, ["in1"], gates::buf()))
            .connect("psu", name, "in1")
            .observable(name);
    }
    b.build().expect("bulbs")
}

/// Set-reset latch of two NAND gates `q = nand(s_n, qn)`, `qn = nand(r_n,
/// q)` with active-low sources `s_n`, `r_n`.
pub fn nand_latch() -> SystemModel {
    ModelBuilder::default()
        .component(Component::source("s_n"))
        .component(Component::source("r_n"))
        .component(Component::function("q", ports(2), gates::nand(2)))
        .component(Component::function("qn", ports(2), gates::nand(2)))
        .connect("s_n", "q", "in1")
        .connect("qn", "q", "in2")
        .connect("r_n", "qn", "in1")
        .connect("q", "qn", "in2")
        .observe_all()
        .build()
        .expect("nand latch")
}
