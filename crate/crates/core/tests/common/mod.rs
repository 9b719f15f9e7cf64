//! Graphs, hand-built ideals and fuzzing loops shared by the test targets.
#![allow(dead_code)]

use causal_implicits::cli::auto;
use causal_implicits::kernel::{ConstraintSet, ConstraintSetJson, Method};
use causal_implicits::model::{Assignment, CausalGraph};
use causal_implicits::parameterize::{all_requests, joint_space_params, DistributionRequest, ParamId};
use causal_implicits::reduce::{lemma2_relation, lemma3_applies, lemma3_generators, poly_relations};
use causal_implicits::ring::{Budget, Ideal, MonomialOrder, Polynomial, Rational};
use causal_implicits::verify::{check, evaluate, exact_distribution, random_model, DistributionTable, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const POINTS: u64 = 100;

pub fn graph(s: &str) -> CausalGraph {
    s.parse().unwrap()
}

/// V3 -> V1, V3 -> V2.
pub fn common_cause() -> CausalGraph {
    graph("obs V1 2\nobs V2 2\nobs V3 2\nedge V3 V1\nedge V3 V2\n")
}

/// V4 -> V3 -> V2 -> V1 with U1 confounding V1 and V3.
pub fn confounded_chain() -> CausalGraph {
    graph("obs V1 2\nobs V2 2\nobs V3 2\nobs V4 2\nhidden U1 2\nedge V4 V3\nedge V3 V2\nedge V2 V1\nedge U1 V1\nedge U1 V3\n")
}

pub fn a(s: &str) -> Assignment {
    s.parse().unwrap()
}

pub fn req(s: &str) -> DistributionRequest {
    s.parse().unwrap()
}

pub fn poly(s: &str) -> Polynomial<ParamId> {
    s.parse().unwrap()
}

pub fn p(t: &str, v: &str) -> String {
    format!("p[{t}|{v}]")
}

pub fn obs(v1: u32, v2: u32, v3: u32) -> String {
    p("", &format!("V1={v1},V2={v2},V3={v3}"))
}

/// The two 2x2 minors of V1, V2 given V3, and normalization.
pub fn common_cause_observational() -> Vec<Polynomial<ParamId>> {
    let mut gens = vec![
        poly(&format!("{}*{} - {}*{}", obs(1, 1, 1), obs(2, 2, 1), obs(1, 2, 1), obs(2, 1, 1))),
        poly(&format!("{}*{} - {}*{}", obs(1, 1, 2), obs(2, 2, 2), obs(1, 2, 2), obs(2, 1, 2))),
    ];
    let all: Vec<String> = (0..8).map(|k| obs(k / 4 + 1, (k / 2) % 2 + 1, k % 2 + 1)).collect();
    gens.push(poly(&format!("{} - 1", all.join(" + "))));
    gens
}

/// Observational kernel plus `p^{V1=1}_{v2 v3} = p_{1 v2 v3} + p_{2 v2 v3}`.
pub fn marginal_assembly() -> Ideal<ParamId> {
    let mut gens = common_cause_observational();
    for v2 in 1..=2 {
        for v3 in 1..=2 {
            let t = p("V1=1", &format!("V2={v2},V3={v3}"));
            gens.push(poly(&format!("{t} - {} - {}", obs(1, v2, v3), obs(2, v2, v3))));
        }
    }
    Ideal::new(gens)
}

/// Both single-distribution kernels plus
/// `p^{V3=1}_{v1 v2} · Σ_{w1 w2} p_{w1 w2 1} = p_{v1 v2 1}`.
pub fn bridge_assembly() -> Ideal<ParamId> {
    let mut gens = common_cause_observational();
    let t = |v1: u32, v2: u32| p("V3=1", &format!("V1={v1},V2={v2}"));
    gens.push(poly(&format!("{}*{} - {}*{}", t(1, 1), t(2, 2), t(1, 2), t(2, 1))));
    gens.push(poly(&format!("{} + {} + {} + {} - 1", t(1, 1), t(1, 2), t(2, 1), t(2, 2))));
    let slice = poly(&format!("{} + {} + {} + {}", obs(1, 1, 1), obs(1, 2, 1), obs(2, 1, 1), obs(2, 2, 1)));
    for v1 in 1..=2 {
        for v2 in 1..=2 {
            gens.push(&poly(&t(v1, v2)) * &slice - poly(&obs(v1, v2, 1)));
        }
    }
    Ideal::new(gens)
}

pub fn same(a: &Ideal<ParamId>, b: &Ideal<ParamId>) -> bool {
    let budget = Budget::default();
    a.equals(b, &MonomialOrder::GrevLex, &budget).unwrap()
}

/// Random DAG on 3 or 4 observed variables, binary or ternary, with at
/// most one hidden variable.
pub fn random_graph(seed: u64) -> CausalGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=4);
    let mut text = String::new();
    for i in 1..=n {
        text.push_str(&format!("obs X{i} {}\n", rng.gen_range(2..=3)));
    }
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.gen_bool(0.4) {
                text.push_str(&format!("edge X{i} X{j}\n"));
            }
        }
    }
    if rng.gen_bool(0.6) {
        text.push_str("hidden H 2\n");
        let a = rng.gen_range(1..=n);
        let b = (a % n) + 1;
        text.push_str(&format!("edge H X{a}\nedge H X{b}\n"));
    }
    graph(&text)
}

pub fn all_tables(g: &CausalGraph, seed: u64) -> Vec<DistributionTable> {
    let m = random_model(g, seed);
    all_requests(g).iter().map(|r| exact_distribution(g, &m, &r.t).unwrap()).collect()
}

/// Checks every set on exact tables from [`POINTS`] random models.
pub fn assert_sound(name: &str, g: &CausalGraph, sets: &[ConstraintSet]) {
    assert!(!sets.is_empty());
    for seed in 0..POINTS {
        let tables = all_tables(g, seed);
        for set in sets {
            let report = check(set, &tables, 0.0).unwrap();
            assert!(report.exact);
            assert!(report.all_pass(), "{name}: {} constraint fails at seed {seed}", set.method);
        }
    }
}

/// Sets derivable on a random graph within a small budget: `auto` on
/// three request lists, plus the bare relations. Returns how many.
pub fn fuzz_random_graph(seed: u64) -> usize {
    // small enough that an intractable elimination gives up quickly
    let b = Budget { max_pairs: 400, max_degree: 10 };
    let g = random_graph(seed);
    let first = format!("{}=1", g.observed_names()[0]);
    let mut sets = Vec::new();
    for rs in [vec![req("")], vec![req(""), req(&first)], all_requests(&g)] {
        if joint_space_params(&g, &rs).unwrap().len() > 400 {
            continue;
        }
        match auto(&g, &rs, &b) {
            Ok(set) => sets.push(set),
            Err(e) if e.is_budget() => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    let ledger = poly_relations(&g, &all_requests(&g)).unwrap();
    sets.push(ConstraintSet::from_json(ConstraintSetJson {
        method: Method::Reduced,
        graph_digest: g.digest(),
        requests: all_requests(&g),
        notes: Vec::new(),
        generators: ledger.relations.iter().map(|f| f.to_json_terms(&MonomialOrder::GrevLex)).collect(),
    }));
    assert_sound(&format!("random graph {seed}:\n{g}"), &g, &sets);
    sets.len()
}

/// Every product relation and every applicable marginal relation of `g`,
/// evaluated on exact tables. Returns the two counts.
pub fn check_identities(g: &CausalGraph) -> (usize, usize) {
    let requests = all_requests(g);
    let mut products = Vec::new();
    let mut sums = Vec::new();
    for r in &requests {
        if let Some(gens) = lemma2_relation(g, &r.t).unwrap() {
            products.extend(gens);
        }
        for c in &requests {
            if lemma3_applies(g, &r.t, &c.t).unwrap() {
                sums.extend(lemma3_generators(g, &r.t, &c.t).unwrap());
            }
        }
    }
    for seed in 0..POINTS {
        let tables = all_tables(g, 1000 + seed);
        for f in products.iter().chain(&sums) {
            assert_eq!(evaluate(f, &tables).unwrap(), Value::Exact(Rational::zero()), "seed {seed}: {f}");
        }
    }
    (products.len(), sums.len())
}
