use serde_json::json;

use super::*;

fn parse(v: Value) -> Result<ScenarioSpec, SpecError> {
    ScenarioSpec::parse(&v.to_string(), None)
}

fn run(v: Value) -> RunReport {
    run_scenario(&parse(v).unwrap(), &Overrides::default()).unwrap()
}

fn field(v: Value) -> String {
    parse(v).unwrap_err().field
}

fn gc2k_common() -> Value {
    json!({
        "protocol": "gc2k",
        "params": {"k": 1, "ell": 2},
        "n": 4,
        "inputs": ["10", "10", "10", "10"],
        "adversary": {"mode": "random"},
        "seeds": 50,
        "max_rounds": 6
    })
}

fn path_tree() -> Value {
    let edges: Vec<[u32; 2]> = (0..8).map(|i| [i, i + 1]).collect();
    json!({"vertices": 9, "edges": edges})
}

#[test]
fn common_gc2k_input_meets_its_round_bound() {
    let r = run(gc2k_common());
    assert_eq!(r.aggregate.violations, 0);
    assert_eq!(r.aggregate.runs, 50);
    let max = parse_vtime(r.aggregate.max_rounds.as_deref().unwrap()).unwrap();
    assert!(max <= VTime::from_integer(6));
    assert_eq!(r.properties, ["safety", "liveness", "rounds"]);
    for run in &r.runs {
        for (y, h) in run.outputs.iter().zip(&run.honest) {
            if *h {
                assert_eq!(*y, json!({"value": "10", "grade": 2}));
            }
        }
    }
}

#[test]
fn path_tree_with_mixed_inputs() {
    let r = run(json!({
        "protocol": "tc",
        "params": {"tree": path_tree()},
        "n": 4,
        "inputs": [0, 3, 8, 5],
        "adversary": {"mode": "random"},
        "seeds": 500,
        "max_rounds": 18
    }));
    assert_eq!(r.aggregate.violations, 0, "{:?}", r.runs.iter().find(|x| !x.passed()));
    let max = parse_vtime(r.aggregate.max_rounds.as_deref().unwrap()).unwrap();
    assert!(max <= VTime::from_integer(18));
}

#[test]
fn tree_inputs_may_come_from_the_tree_file() {
    let mut tree = path_tree();
    tree["inputs"] = json!({"0": 2, "1": 2, "2": 3, "3": 2});
    let r = run(json!({"protocol": "tc_star", "params": {"tree": tree}, "n": 4, "adversary": {"mode": "silent"},
        "properties": ["safety", "termination"]}));
    assert_eq!(r.aggregate.violations, 0);
}

#[test]
fn short_trees_are_padded() {
    // diameter 5 pads to 8
    let edges: Vec<[u32; 2]> = (0..5).map(|i| [i, i + 1]).collect();
    let r = run(json!({"protocol": "tc", "params": {"tree": {"vertices": 6, "edges": edges}}, "n": 4,
        "inputs": [0, 5, 5, 1], "adversary": {"mode": "random"}, "seeds": 20}));
    assert_eq!(r.aggregate.violations, 0);
}

#[test]
fn reports_are_deterministic() {
    let a = run(gc2k_common()).to_json();
    let b = run(gc2k_common()).to_json();
    assert_eq!(a, b);
}

#[test]
fn seeds_enumerate_from_the_base() {
    let mut s = gc2k_common();
    s["base_seed"] = json!(100);
    s["seeds"] = json!(3);
    let r = run(s);
    let seeds: Vec<Option<u64>> = r.runs.iter().map(|x| x.seed).collect();
    assert_eq!(seeds, [Some(100), Some(101), Some(102)]);
    let spec = parse(gc2k_common()).unwrap();
    let r = run_scenario(&spec, &Overrides { seeds: Some(2), trace: true }).unwrap();
    assert_eq!(r.runs.len(), 2);
    assert!(r.runs[0].trace.as_ref().is_some_and(|t| !t.is_empty()));
}

#[test]
fn malformed_scenarios_name_the_field() {
    let mut s = gc2k_common();
    s.as_object_mut().unwrap().remove("n");
    assert_eq!(field(s), "n");
    let mut s = gc2k_common();
    s["colour"] = json!(1);
    assert_eq!(field(s), "colour");
    let mut s = gc2k_common();
    s["adversary"]["mode"] = json!("chaos");
    assert_eq!(field(s), "adversary.mode");
    let mut s = gc2k_common();
    s["adversary"]["delay_set"] = json!([0]);
    assert_eq!(field(s), "adversary.delay_set");
    let mut s = gc2k_common();
    s["n"] = json!("four");
    assert_eq!(field(s), "n");
    let mut s = gc2k_common();
    s["t"] = json!(2);
    assert_eq!(field(s), "t");
    let mut s = gc2k_common();
    s["protocol"] = json!("paxos");
    assert_eq!(field(s), "protocol");
    let mut s = gc2k_common();
    s["properties"] = json!(["safety", "speed"]);
    assert_eq!(field(s), "properties[1]");
    let mut s = gc2k_common();
    s["inputs"] = json!(["10"]);
    assert_eq!(field(s), "inputs");
}

#[test]
fn bad_inputs_are_rejected_at_run_time_by_field() {
    let mut s = gc2k_common();
    s["inputs"] = json!(["10", "1", "10", "10"]);
    let e = run_scenario(&parse(s).unwrap(), &Overrides::default()).unwrap_err();
    assert_eq!(e.field, "inputs[1]");
    let s = json!({"protocol": "exp0", "n": 4, "inputs": [1, -2, 3, 4], "adversary": {"mode": "random"}});
    assert_eq!(run_scenario(&parse(s).unwrap(), &Overrides::default()).unwrap_err().field, "inputs[1]");
    let s = json!({"protocol": "gc1", "n": 4, "inputs": ["0", "0", "0", "0"], "adversary": {"mode": "random"},
        "properties": ["termination"]});
    assert_eq!(run_scenario(&parse(s).unwrap(), &Overrides::default()).unwrap_err().field, "properties");
}

#[test]
fn epsilon_outputs_are_exact_and_decimal() {
    let r = run(json!({"protocol": "epsilon", "params": {"eps": "1/4", "digits": 3}, "n": 4,
        "inputs": ["1.5", "2", "7/3", "-1"], "adversary": {"mode": "random"}, "seeds": 10}));
    assert_eq!(r.aggregate.violations, 0);
    let y = r.runs[0].outputs.iter().find(|y| !y.is_null()).unwrap();
    let decimal = y["decimal"].as_str().unwrap();
    assert_eq!(decimal.split('.').nth(1).unwrap().len(), 3);
    crate::real::parse_rational(y["exact"].as_str().unwrap()).unwrap();
}

#[test]
fn integer_protocols_run_with_and_without_term() {
    for protocol in ["exp0", "two_step", "agr_z"] {
        for terminate in [false, true] {
            let r = run(json!({"protocol": protocol, "params": {"terminate": terminate}, "n": 4,
                "inputs": [0, 9, 30, 2], "adversary": {"mode": "random"}, "seeds": 10}));
            assert_eq!(r.aggregate.violations, 0, "{protocol} {terminate}");
        }
    }
}

#[test]
fn exhaustive_gc1_covers_the_menu() {
    let r = run(json!({"protocol": "gc1", "n": 4, "inputs": ["0", "0", "1", null],
        "adversary": {"mode": "exhaustive", "menu": [{"kind": "echo", "value": "1"}, {"kind": "echo_bot"}]}}));
    assert_eq!(r.mode, "exhaustive");
    assert_eq!(r.aggregate.violations, 0);
    assert!(r.aggregate.runs > 1);
    assert!(r.aggregate.states.unwrap() > 0);
    let s = json!({"protocol": "gc1", "n": 4, "inputs": ["0", "0", "1", null],
        "adversary": {"mode": "exhaustive", "menu": [{"kind": "vote", "value": "1"}]}});
    assert_eq!(run_scenario(&parse(s).unwrap(), &Overrides::default()).unwrap_err().field, "adversary.menu[0]");
}

#[test]
fn exhaustive_term_checks_termination() {
    let r = run(json!({"protocol": "term", "n": 4, "inputs": [3, 3, 4, null],
        "adversary": {"mode": "exhaustive", "menu": [{"kind": "echo", "value": 4}, {"kind": "ready"}]},
        "properties": ["safety", "liveness", "termination"]}));
    assert_eq!(r.aggregate.violations, 0);
}

#[test]
fn csv_has_one_row_per_run() {
    let r = run(gc2k_common());
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,seed,rounds,messages_total,bits_total,passed,safety,liveness,rounds");
    assert_eq!(lines.len(), 51);
    assert!(lines[1].starts_with("0,0,"));
}

#[test]
fn violation_count_matches_failed_vectors() {
    // a round bound of 1 cannot hold for a three-round protocol
    let r = run(json!({"protocol": "gc1", "n": 4, "inputs": ["0", "1", "0", "1"], "adversary": {"mode": "random"},
        "seeds": 20, "max_rounds": 1}));
    let failed = r.runs.iter().filter(|x| !x.passed()).count() as u64;
    assert_eq!(r.aggregate.violations, failed);
    assert!(failed > 0);
    assert!(r.runs.iter().all(|x| x.passed() == x.violation.is_none()));
}
