//! One line per acceptance criterion. Criterion 10 checks the counts behind
//! what cannot be reproduced.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use causal_implicits::cli::load_constraints;
use causal_implicits::kernel::{kernel_direct, kernel_eq19, kernel_lemma1, kernel_prop2, kernel_two_step};
use causal_implicits::parameterize::{all_requests, request_params, DistributionRequest, ParamId};
use causal_implicits::reduce::{decompose_by_c_components, poly_relations, reduced_kernel};
use causal_implicits::ring::{
    groebner_basis, independence_ideal, is_reduced_groebner_basis, Budget, Ideal, Monomial, MonomialOrder,
    Polynomial, Rational, Symbol,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    if start.elapsed() > limit {
        return Err(format!("took {:.1?}, limit {limit:?}", start.elapsed()));
    }
    Ok(())
}

fn ensure(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, common_cause().to_text()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_causal-implicits"))
        .args(["derive", "--graph", path.to_str().unwrap()])
        .env_remove("CAUSAL_IMPLICITS_BUDGET")
        .output()
        .unwrap();
    ensure(out.status.success(), "derive failed")?;
    let set = load_constraints(&String::from_utf8(out.stdout).unwrap())?;
    ensure(same(&set.ideal, &Ideal::new(common_cause_observational())), "ideal differs from the two minors plus normalization")?;
    within(Duration::from_secs(10), start)?;
    Ok(format!("`derive` gives the two minors plus normalization ({} generators)", set.generators().len()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let g = common_cause();
    let b = Budget::default();
    let t = causal_implicits::model::Assignment::empty();
    let mut local = Ideal::zero();
    for stmt in g.local_markov().map_err(|e| e.to_string())? {
        local = local.sum(&independence_ideal(&stmt, &g, &t).map_err(|e| e.to_string())?);
    }
    let factors: Vec<Polynomial<ParamId>> =
        request_params(&g, &DistributionRequest::observational()).into_iter().map(Polynomial::var).collect();
    let sat = local.saturate_by_product(&factors, &b).map_err(|e| e.to_string())?;
    ensure(sat.equals(&local, &MonomialOrder::GrevLex, &b).unwrap(), "saturation enlarged the ideal")?;
    within(Duration::from_secs(30), start)?;
    Ok("local Markov ideal is saturated with respect to every parameter".into())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let g = common_cause();
    let b = Budget::default();
    let anc = kernel_prop2(&g, &a("V1=1"), &b).map_err(|e| e.to_string())?;
    ensure(same(&anc.ideal, &marginal_assembly()), "ancestral closed form differs from its assembly")?;
    let anti = kernel_lemma1(&g, &a("V3=1"), &b).map_err(|e| e.to_string())?;
    ensure(same(&anti.ideal, &bridge_assembly()), "antichain closed form differs from its assembly")?;
    let direct = kernel_direct(&g, &[req(""), req("V3=1")], &b).map_err(|e| e.to_string())?;
    ensure(anti.same_ideal(&direct, &b).unwrap(), "antichain closed form differs from direct elimination")?;
    within(Duration::from_secs(120), start)?;
    Ok("prop2 {P, P_V1=1} and lemma1 {P, P_V3=1} match their assemblies; lemma1 matches direct".into())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let b = Budget::default();
    let graphs = [
        "obs V1 2\nobs V2 2\nedge V2 V1\n",
        "obs V1 2\nobs V2 2\n",
        "obs V1 2\nobs V2 2\nobs V3 2\nedge V3 V1\nedge V3 V2\n",
        "obs V1 2\nobs V2 2\nobs V3 2\nedge V3 V2\nedge V2 V1\n",
        "obs V1 2\nobs V2 2\nobs V3 2\nedge V1 V3\nedge V2 V3\n",
    ];
    for text in graphs {
        let g = graph(text);
        let closed = kernel_eq19(&g).map_err(|e| e.to_string())?;
        let direct = kernel_direct(&g, &all_requests(&g), &b).map_err(|e| e.to_string())?;
        ensure(closed.same_ideal(&direct, &b).unwrap(), &format!("mismatch on\n{text}"))?;
    }
    within(Duration::from_secs(300), start)?;
    Ok(format!("eq19 equals direct elimination on {} graphs with 2 and 3 variables", graphs.len()))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let g = confounded_chain();
    let ledger = poly_relations(&g, &all_requests(&g)).map_err(|e| e.to_string())?;
    let families = |rs: &[DistributionRequest]| -> BTreeSet<Vec<String>> {
        rs.iter().map(|r| r.targets().iter().map(|n| n.to_string()).collect()).collect()
    };
    let fams = |list: &[&[&str]]| -> BTreeSet<Vec<String>> {
        list.iter().map(|f| f.iter().map(|s| s.to_string()).collect()).collect()
    };
    ensure(ledger.parameter_count == 240, &format!("{} parameters", ledger.parameter_count))?;
    let five = fams(&[&["V2", "V4"], &["V1", "V3", "V4"], &["V1", "V2", "V3"], &["V2", "V3", "V4"], &["V1", "V2", "V4"]]);
    ensure(families(&ledger.after_products) == five, "wrong families after the product step")?;
    let three = fams(&[&["V2", "V4"], &["V1", "V3", "V4"], &["V1", "V2", "V3"]]);
    ensure(families(&ledger.residual) == three, "wrong families after the sum step")?;
    let subs = decompose_by_c_components(&g).map_err(|e| e.to_string())?;
    ensure(subs.len() == 3, "expected three subproblems")?;
    let k = reduced_kernel(&g, &all_requests(&g), &Budget::default()).map_err(|e| e.to_string())?;
    within(Duration::from_secs(30), start)?;
    Ok(format!(
        "240 parameters; 5 families after products; 3 after sums; 3 subproblems; reduced kernel has {} generators",
        k.generators().len()
    ))
}

fn criterion_6() -> Outcome {
    let b = Budget::default();
    let g = common_cause();
    let sets = vec![
        kernel_direct(&g, &[req("")], &b).unwrap(),
        kernel_prop2(&g, &a("V1=1"), &b).unwrap(),
        kernel_lemma1(&g, &a("V3=1"), &b).unwrap(),
        kernel_eq19(&g).unwrap(),
        reduced_kernel(&g, &all_requests(&g), &b).unwrap(),
    ];
    assert_sound("common cause", &g, &sets);
    let h = confounded_chain();
    assert_sound("confounded chain", &h, &[reduced_kernel(&h, &all_requests(&h), &b).unwrap()]);
    let mut random = 0;
    for seed in 0..10 {
        random += fuzz_random_graph(seed);
    }
    Ok(format!(
        "{} constraint sets on 12 graphs vanish exactly at {POINTS} random points each",
        sets.len() + 1 + random
    ))
}

fn criterion_7() -> Outcome {
    let mut products = 0;
    let mut sums = 0;
    let mut graphs = vec![common_cause(), confounded_chain()];
    graphs.extend((0..10).map(random_graph));
    for g in &graphs {
        let (p, s) = check_identities(g);
        products += p;
        sums += s;
    }
    ensure(products > 0 && sums > 0, "no identities exercised")?;
    Ok(format!("{products} product and {sums} marginal identities hold exactly at {POINTS} points each"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let b = Budget::default();
    for text in [
        "obs A 2\nobs B 2\nhidden U 2\nedge U A\nedge U B\n",
        "obs A 2\nobs B 2\nhidden U 2\nedge U A\nedge U B\nedge A B\n",
    ] {
        let g = graph(text);
        for rs in [vec![req("")], vec![req(""), req("A=1")]] {
            let direct = kernel_direct(&g, &rs, &b).map_err(|e| e.to_string())?;
            let two = kernel_two_step(&g, &rs, &b).map_err(|e| e.to_string())?;
            ensure(direct.same_ideal(&two, &b).unwrap(), &format!("mismatch on\n{text}"))?;
        }
    }
    within(Duration::from_secs(120), start)?;
    Ok("two-step equals direct on two graphs, two request sets each".into())
}

fn random_poly(rng: &mut ChaCha8Rng) -> Polynomial<Symbol> {
    let names = ["w", "x", "y", "z"];
    let terms = (0..rng.gen_range(1..=3)).map(|_| {
        let m = Monomial::from_factors(names.iter().map(|n| (Symbol::new(*n), rng.gen_range(0..=2))));
        (Rational::new(rng.gen_range(-4..=4), rng.gen_range(1..=3)), m)
    });
    Polynomial::from_terms(terms.collect::<Vec<_>>())
}

fn criterion_9() -> Outcome {
    let budget = Budget { max_pairs: 3_000, max_degree: 14 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bases = 0;
    let mut eliminations = 0;
    let orders = [MonomialOrder::Lex, MonomialOrder::GrevLex, MonomialOrder::elimination([Symbol::new("x")])];
    for _ in 0..60 {
        let n = rng.gen_range(1..=3);
        let gens: Vec<_> = (0..n).map(|_| random_poly(&mut rng)).collect();
        for o in &orders {
            let pool = |k: usize| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
            let Ok(one) = pool(1).install(|| groebner_basis(&gens, o, &budget)) else { continue };
            let four = pool(4).install(|| groebner_basis(&gens, o, &budget)).map_err(|e| e.to_string())?;
            ensure(one == four, "basis depends on the thread count")?;
            ensure(one == groebner_basis(&gens, o, &budget).unwrap(), "basis differs between runs")?;
            ensure(is_reduced_groebner_basis(&one, o), "S-polynomial certificate failed")?;
            bases += 1;
        }
        let ideal = Ideal::new(gens);
        let drop: BTreeSet<Symbol> = [Symbol::new("x")].into();
        if let Ok(elim) = ideal.eliminate(&drop, &budget) {
            for g in elim.generators() {
                ensure(!g.mentions(&Symbol::new("x")), "eliminated variable survives")?;
                ensure(ideal.contains(g, &MonomialOrder::GrevLex, &budget).unwrap(), "elimination left the ideal")?;
            }
            eliminations += 1;
        }
    }
    ensure(bases > 100 && eliminations > 30, "too few cases within budget")?;
    Ok(format!("{bases} bases deterministic across 1 and 4 threads and certified; {eliminations} eliminations sound"))
}

fn criterion_10() -> Outcome {
    let g = confounded_chain();
    let family: usize = all_requests(&g)
        .iter()
        .filter(|r| r.targets().iter().map(|n| n.to_string()).collect::<Vec<_>>() == ["V2", "V4"])
        .map(|r| request_params(&g, r).len())
        .sum();
    ensure(family == 16, &format!("the V2,V4 family has {family} parameters"))?;
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/unresolved_relation.poly"))
        .map_err(|e| e.to_string())?;
    let line = text.lines().find(|l| !l.starts_with('#') && !l.trim().is_empty()).ok_or("empty data file")?;
    let f: Polynomial<ParamId> = line.parse().map_err(|e: causal_implicits::ring::ParsePolynomialError| e.to_string())?;
    ensure(f.len() == 17, "the shipped cubic relation should have 17 terms")?;
    Ok(format!(
        "documented as not reproducible: the graph behind the 16 extra saturation generators and the graph behind the shipped \
         {}-term cubic relation are not given; the V2,V4 subproblem has {family} parameters, not 12",
        f.len()
    ))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = Vec::new();
    for (n, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match (n, outcome) {
            (_, Ok(msg)) => println!("criterion {n}: pass ({secs:.1}s) {msg}"),
            (_, Err(msg)) => {
                println!("criterion {n}: FAIL ({secs:.1}s) {msg}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
