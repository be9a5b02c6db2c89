//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p wsp-core --test acceptance`. The process exits
//! non-zero on any unexpected failure.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};
use wsp_core::genbench::{
    bench_run, canonical_formulas, gen_3coloring_or, gen_hitting_set_counting, gen_hitting_set_eq, gen_nae3sat,
    gen_random, hitting_set_classes, hitting_set_exists, nae_satisfiable, oracle_solve, random_formula,
    three_colorable, BenchSpec, Graph, HittingSetInstance, Mix, RandomSpec,
};
use wsp_core::hierarchy::{canonicalize, Hierarchy, TreeMethod};
use wsp_core::kernel::{kernelize, lift_plan, merge_equality_steps, remove_easy_steps, MatchingState, Stage, Verdict};
use wsp_core::model::{check_plan, Constraint, Plan, Relation, UserId, WorkflowInstance};
use wsp_core::solver::{
    min_fully_authorized_users, solve, solve_hierarchy, solve_quotient, solve_with, RouteChoice, SolveOptions,
    SolveStatus,
};
use wsp_core::StepSet;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Fails as stated, for a reason recorded in the README.
    KnownFail(String),
}

struct Report {
    unexpected: usize,
}

impl Report {
    fn run(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                self.unexpected += 1;
                ("FAIL", d)
            }
            Outcome::KnownFail(d) => ("FAIL (known)", d),
        };
        println!("[{tag}] {name}: {detail} ({secs:.1}s)");
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn oracle_sat(w: &WorkflowInstance) -> bool {
    oracle_solve(w).expect("oracle within budget").is_sat()
}

fn plan_ok(w: &WorkflowInstance, p: &Plan) -> bool {
    check_plan(w, p).map(|v| v.is_valid()).unwrap_or(false)
}

fn oracle_equivalence() -> Outcome {
    const PER_CLASS: u64 = 1000;
    let classes = [Mix::Counting, Mix::Neq, Mix::Eq, Mix::SingleRelation, Mix::MultiLevel];
    let mut counts = Vec::new();
    let mut bad = Vec::new();
    for mix in classes {
        let mut sat = 0;
        for seed in 0..PER_CLASS {
            let k = 1 + (seed % 5) as usize;
            let n = 1 + (seed / 5 % 6) as usize;
            let c = 1 + (seed / 30 % 5) as usize;
            let density = [0.4, 0.6, 0.8, 1.0][(seed / 150 % 4) as usize];
            let w = gen_random(&RandomSpec::new(k, n, c, density, mix, 0xACCE_0000 + seed)).unwrap();
            let want = oracle_sat(&w);
            match solve(&w) {
                Ok(r) if r.is_sat() == want && r.plan.as_ref().is_none_or(|p| plan_ok(&w, p)) => sat += want as usize,
                Ok(_) => bad.push(format!("{} seed {seed}", mix.name())),
                Err(e) => bad.push(format!("{} seed {seed}: {e}", mix.name())),
            }
        }
        counts.push(format!("{}={PER_CLASS} ({sat} sat)", mix.name()));
    }
    verdict(bad.is_empty(), format!("{}; mismatches {} {:?}", counts.join(", "), bad.len(), &bad[..bad.len().min(5)]))
}

fn nae_reduction() -> Outcome {
    let mut formulas: Vec<_> = (1..=4).flat_map(|v| canonical_formulas(v, 4)).collect();
    let canonical = formulas.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4E4E);
    for _ in 0..200 {
        let vars = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=4);
        formulas.push(random_formula(&mut rng, vars, m));
    }
    let mut mismatches = 0;
    let mut shape = true;
    for f in &formulas {
        let w = gen_nae3sat(f).unwrap();
        shape &= w.n() == 2 && w.k() == 2 * f.vars;
        let r = solve(&w).unwrap();
        if r.is_sat() != nae_satisfiable(f) || r.plan.as_ref().is_some_and(|p| !plan_ok(&w, p)) {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0 && shape,
        format!("{canonical} canonical + 200 random formulas, {mismatches} mismatches, shape ok: {shape}"),
    )
}

/// Satisfiability of the counting encoding, derived by hand: a user who
/// performs exactly one fresh step must perform every `v_i`, and any other
/// user performing some `v_i` needs at least two fresh steps.
fn counting_encoding_sat(h: &HittingSetInstance) -> bool {
    let masks: Vec<u32> = h.sets.iter().map(|s| s.iter().fold(0, |m, &e| m | 1 << e)).collect();
    let hits = |c: u32| masks.iter().all(|&m| m & c != 0);
    masks.is_empty()
        || (0..h.elements).any(|e| hits(1 << e))
        || (1u32..1 << h.elements).any(|c| 2 * c.count_ones() as usize <= h.budget && hits(c))
}

fn hitting_set_reductions() -> (Outcome, Outcome) {
    let (mut total, mut eq_bad, mut cnt_bad, mut pair_bad, mut unexplained) = (0, 0, 0, 0, 0);
    for elements in 1..=6 {
        for sets in 0..=5 {
            for family in hitting_set_classes(elements, sets) {
                for budget in 1..=3 {
                    let h = HittingSetInstance::new(elements, family.clone(), budget).unwrap();
                    let truth = hitting_set_exists(&h);
                    let we = gen_hitting_set_eq(&h).unwrap();
                    let wc = gen_hitting_set_counting(&h).unwrap();
                    let re = solve(&we).unwrap();
                    let rc = solve(&wc).unwrap();
                    total += 1;
                    eq_bad += (re.is_sat() != truth || re.plan.as_ref().is_some_and(|p| !plan_ok(&we, p))) as usize;
                    cnt_bad += (rc.is_sat() != truth) as usize;
                    pair_bad += (rc.is_sat() != re.is_sat()) as usize;
                    if rc.is_sat() != counting_encoding_sat(&h) || rc.plan.as_ref().is_some_and(|p| !plan_ok(&wc, p)) {
                        unexplained += 1;
                    }
                }
            }
        }
    }
    let eq = verdict(eq_bad == 0, format!("{total} instances (up to isomorphism), {eq_bad} mismatches vs brute force"));
    let detail = format!(
        "{total} instances, {cnt_bad} mismatches vs brute force, {pair_bad} vs the = encoding; \
         solver disagrees with the derived characterization on {unexplained}"
    );
    let cnt = if cnt_bad == 0 && pair_bad == 0 {
        Outcome::Pass(detail)
    } else if unexplained == 0 {
        Outcome::KnownFail(detail)
    } else {
        Outcome::Fail(detail)
    };
    (eq, cnt)
}

fn or_composition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3C01);
    let mut pools: BTreeMap<usize, Vec<(String, Graph)>> = BTreeMap::new();
    for (name, g) in [("K3", Graph::complete(3)), ("K4", Graph::complete(4)), ("P4", Graph::path(4)), ("C5", Graph::cycle(5))] {
        pools.entry(g.vertices).or_default().push((name.to_string(), g));
    }
    for v in 3..=5 {
        for i in 0..2 {
            pools.entry(v).or_default().push((format!("R{v}.{i}"), Graph::random(&mut rng, v, 0.6)));
        }
    }
    let mut cases = 0;
    let mut bad = Vec::new();
    for pool in pools.values() {
        let p = pool.len();
        let mut picks: Vec<Vec<usize>> = Vec::new();
        for a in 0..p {
            picks.push(vec![a]);
            for b in a..p {
                picks.push(vec![a, b]);
                for c in b..p {
                    picks.push(vec![a, b, c]);
                }
            }
        }
        for pick in picks {
            let graphs: Vec<Graph> = pick.iter().map(|&i| pool[i].1.clone()).collect();
            let w = gen_3coloring_or(&graphs).unwrap();
            let want = graphs.iter().any(three_colorable);
            cases += 1;
            let label = pick.iter().map(|&i| pool[i].0.as_str()).collect::<Vec<_>>().join("+");
            match solve(&w) {
                Ok(r) if r.is_sat() == want && r.plan.as_ref().is_none_or(|p| plan_ok(&w, p)) => {}
                Ok(_) => bad.push(label),
                Err(e) => bad.push(format!("{label}: {e}")),
            }
        }
    }
    let k4 = solve(&gen_3coloring_or(&[Graph::complete(4)]).unwrap()).map(|r| r.status);
    let k3 = solve(&gen_3coloring_or(&[Graph::complete(3)]).unwrap()).map(|r| r.status);
    let anchors = k4 == Ok(SolveStatus::Unsat) && k3 == Ok(SolveStatus::Sat);
    verdict(
        bad.is_empty() && anchors,
        format!("{cases} graph multisets, mismatches {bad:?}; K4 alone {k4:?}, K3 alone {k3:?}"),
    )
}

fn kernel_guarantees() -> Outcome {
    let mut problems = Vec::new();
    let mut max_matching_users = 0;
    let mut matching_runs = 0;
    let mut kernels = 0;
    for seed in 0..300u64 {
        let k = 2 + (seed % 5) as usize;
        let n = 5 + (seed * 7 % 36) as usize;
        let c = 1 + (seed % 7) as usize;
        let density = ([0.5, 1.0, 2.0, 8.0][(seed / 5 % 4) as usize] / n as f64).min(1.0);
        let w = gen_random(&RandomSpec::new(k, n, c, density, Mix::Wsp1EqNeq, 0x6E_0000 + seed)).unwrap();
        let kr = kernelize(&w);
        let merged = merge_equality_steps(&w).unwrap();
        if merged.verdict_shortcut.is_none() {
            let st = MatchingState::new(&merged.reduced);
            matching_runs += 1;
            if let Err(e) = st.check_properties() {
                problems.push(format!("P1-P3 seed {seed}: {e}"));
            }
        }
        if kr.trace.iter().any(|s| matches!(s, Stage::MatchingKernel { .. })) {
            max_matching_users = max_matching_users.max(kr.reduced.n());
            kernels += (kr.verdict_shortcut.is_none()) as usize;
            if kr.reduced.n() > k {
                problems.push(format!("wsp1 seed {seed}: {} users > k={k}", kr.reduced.n()));
            }
        }
        let got = kernel_verdict(&kr);
        if got != Some(oracle_sat(&w)) {
            problems.push(format!("wsp1 seed {seed}: verdict {got:?}"));
        }
    }
    let mut max_easy_users = 0;
    let mut easy_applied = 0;
    for seed in 0..300u64 {
        let k = 2 + (seed % 5) as usize;
        let n = 5 + (seed * 7 % 36) as usize;
        let c = 1 + (seed % 6) as usize;
        let density = [0.1, 0.2, 0.4, 0.8][(seed / 5 % 4) as usize];
        let w = gen_random(&RandomSpec::new(k, n, c, density, Mix::NeqCounting1, 0xEA_0000 + seed)).unwrap();
        let kr = match remove_easy_steps(&w) {
            Ok(kr) => kr,
            Err(e) => {
                problems.push(format!("easy seed {seed}: {e}"));
                continue;
            }
        };
        easy_applied += 1;
        max_easy_users = max_easy_users.max(kr.reduced.n());
        if kr.reduced.n() > k * (k - 1) {
            problems.push(format!("easy seed {seed}: {} users > k(k-1)", kr.reduced.n()));
        }
        if kernel_verdict(&kr) != Some(oracle_sat(&w)) {
            problems.push(format!("easy seed {seed}: verdict changed"));
        }
    }
    verdict(
        problems.is_empty(),
        format!(
            "WSP1(=,≠): 300 instances, {kernels} nonempty matching kernels, max kernel users {max_matching_users}, \
             {matching_runs} matching runs with P1-P3 checked; \
             ≠+counting(1,t): {easy_applied} easy-step runs, max users {max_easy_users}; problems {:?}",
            &problems[..problems.len().min(5)]
        ),
    )
}

/// Verdict through the kernel, with the lifted plan checked on the original.
fn kernel_verdict(kr: &wsp_core::kernel::KernelResult) -> Option<bool> {
    let w = kr.original();
    let reduced_plan = match kr.verdict_shortcut {
        Some(Verdict::Unsat) => return Some(false),
        Some(Verdict::Sat) => Plan::new(Vec::new()),
        None => match solve(&kr.reduced).ok()?.plan {
            Some(p) => p,
            None => return Some(false),
        },
    };
    let lifted = lift_plan(kr, &reduced_plan).ok()?;
    plan_ok(w, &lifted).then_some(true)
}

fn scaling() -> Outcome {
    const PER_K: usize = 7;
    const REPEATS: usize = 3;
    let spec = BenchSpec {
        ks: (12..=18).collect(),
        users_per_step: 2,
        constraints_per_step: 1.0,
        density: 1.0,
        mix: Mix::Neq,
        routes: vec![RouteChoice::Flat],
        instances_per_k: PER_K,
        seed: 0x5CA1E,
        serial: true,
    };
    let start = Instant::now();
    // Same seeds each pass, so record i is the same instance every time.
    let runs: Vec<_> = (0..REPEATS).map(|_| bench_run(&spec).unwrap()).collect();
    let total = start.elapsed();
    let recs = &runs[0];
    let best = |i: usize| runs.iter().map(|r| r[i].ms).fold(f64::INFINITY, f64::min);
    let median_of = |xs: &mut Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        xs[xs.len() / 2]
    };
    let ks: Vec<usize> = (12..=18).collect();
    let medians: Vec<f64> = ks
        .iter()
        .map(|&k| median_of(&mut (0..recs.len()).filter(|&i| recs[i].k == k).map(best).collect()))
        .collect();
    let work: Vec<f64> = ks
        .iter()
        .map(|&k| median_of(&mut recs.iter().filter(|r| r.k == k).map(|r| r.subsets as f64).collect()))
        .collect();
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    let work_ratios: Vec<f64> = work.windows(2).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let unsupported = recs.iter().filter(|r| r.verdict != "sat" && r.verdict != "unsat").count();
    let round2 = |v: &[f64]| v.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>();
    verdict(
        worst <= 3.0 && unsupported == 0 && total < Duration::from_secs(600),
        format!(
            "{PER_K} instances per k, best of {REPEATS} timings; median ms per k {:?}; ratios {:?}; worst {worst:.2}; \
             subsets-visited ratios {:?}; bench total {:.1}s",
            round2(&medians),
            round2(&ratios),
            round2(&work_ratios),
            total.as_secs_f64()
        ),
    )
}

fn random_constraints(rng: &mut ChaCha8Rng, k: usize, levels: usize, count: usize) -> Vec<Constraint> {
    let pick = |rng: &mut ChaCha8Rng| StepSet::from_bits(rng.gen_range(1..1u32 << k));
    (0..count)
        .map(|_| {
            let a = StepSet::singleton(rng.gen_range(0..k));
            let b = if rng.gen_bool(0.6) { StepSet::singleton(rng.gen_range(0..k)) } else { pick(rng) };
            let level = rng.gen_range(1..=levels);
            let rel = match rng.gen_range(0..4) {
                0 => Relation::Sim(level),
                1 => Relation::Nsim(level),
                2 => Relation::Neq,
                _ => Relation::Eq,
            };
            Constraint::entailment(rel, a, b)
        })
        .collect()
}

/// A chain of coarsenings, possibly with repeated levels and without a
/// singleton bottom or a single-block top.
fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> Hierarchy {
    let mut ids: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut levels = vec![ids.clone()];
    for _ in 0..rng.gen_range(0..4) {
        if rng.gen_bool(0.7) {
            let merge: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n.max(1))).collect();
            ids = ids.iter().map(|&b| merge[b]).collect();
        }
        levels.push(ids.clone());
    }
    Hierarchy::from_block_ids(n, levels).unwrap()
}

fn hierarchy_checks() -> Outcome {
    let mut problems = Vec::new();

    let mut agree = 0;
    for seed in 0..200u64 {
        let k = 1 + (seed % 5) as usize;
        let n = 3 + (seed / 5 % 4) as usize;
        let c = 1 + (seed % 4) as usize;
        let w = gen_random(&RandomSpec::new(k, n, c, 0.7, Mix::SingleRelation, 0x9A_0000 + seed)).unwrap();
        assert!(w.hierarchy().is_some_and(|h| h.is_canonical() && h.level_count() == 3));
        let q = solve_quotient(&w, 2).map(|r| r.status);
        let h = solve_hierarchy(&w).map(|r| r.status);
        if q.is_ok() && q == h {
            agree += 1;
        } else {
            problems.push(format!("quotient/hierarchy seed {seed}: {q:?} vs {h:?}"));
        }
    }

    let mut flat_agree = 0;
    let flat = SolveOptions { route: RouteChoice::Flat, ..SolveOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0x2_1E7E1);
    for seed in 0..200u64 {
        let k = 1 + (seed % 5) as usize;
        let n = 2 + (seed / 5 % 5) as usize;
        let base = gen_random(&RandomSpec::new(k, n, 1 + (seed % 4) as usize, 0.7, Mix::Regular, 0x2F_0000 + seed)).unwrap();
        let mut parts = base.to_parts();
        parts.constraints = base
            .constraints()
            .iter()
            .map(|c| match c {
                Constraint::Entailment { relation: Relation::Eq, first, second } if rng.gen_bool(0.5) => {
                    Constraint::entailment(Relation::Sim(1), *first, *second)
                }
                Constraint::Entailment { relation: Relation::Neq, first, second } if rng.gen_bool(0.5) => {
                    Constraint::entailment(Relation::Nsim(1), *first, *second)
                }
                other => other.clone(),
            })
            .collect();
        parts.hierarchy = Some(Hierarchy::flat(n));
        let two = base.rebuild(parts).unwrap();
        let h = solve_hierarchy(&two).map(|r| r.status);
        let f = solve_with(&base, &flat).map(|r| r.status);
        if h.is_ok() && h == f {
            flat_agree += 1;
        } else {
            problems.push(format!("2-level seed {seed}: {h:?} vs flat {f:?}"));
        }
    }

    let mut canon = 0;
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xCA_0000 + seed);
        let k = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=5);
        let h = random_chain(&mut rng, n);
        let count = rng.gen_range(1..=4);
        let cs = random_constraints(&mut rng, k, h.level_count(), count);
        let auth: Vec<StepSet> =
            (0..n).map(|_| StepSet::from_bits(rng.gen_range(0..1u32 << k)) | StepSet::singleton(0)).collect();
        let mut auth = auth;
        for s in 0..k {
            if auth.iter().all(|r| !r.contains(s)) {
                auth[0] = auth[0].with(s);
            }
        }
        let w = instance(k, auth.clone(), cs.clone(), Some(h.clone()));
        let (h2, cs2) = canonicalize(&h, &cs);
        let w2 = instance(k, auth, cs2, Some(h2.clone()));
        if !h2.is_canonical() || h2.level_count() > h.level_count() + 2 {
            problems.push(format!("canonicalize seed {seed}: {} -> {} levels", h.level_count(), h2.level_count()));
        } else if oracle_sat(&w) != oracle_sat(&w2) {
            problems.push(format!("canonicalize seed {seed}: verdict changed"));
        } else {
            canon += 1;
        }
    }

    let fig = fig_hierarchy(TreeMethod::FoldSubtrees);
    let seq: Vec<String> = (1..=fig.level_count()).map(|l| render(&fig, l)).collect();
    let want = [
        "a|b|c|d|e|f|g|h|i|j",
        "abc|d|e|fg|h|i|j",
        "abcd|e|fgh|i|j",
        "abcd|efgh|i|j",
        "abcd|efghi|j",
        "abcdefghi|j",
        "abcdefghij",
    ];
    if seq != want {
        problems.push(format!("tree partitions {seq:?}"));
    }

    let e = 4;
    let i = 8;
    let example = vec![sim(5, one(0), one(1)), nsim(4, one(0), one(1))];
    let full = instance(2, vec![StepSet::full(2); 10], example.clone(), Some(fig.clone()));
    let mut auth = vec![StepSet::full(2); 10];
    auth[i] = StepSet::EMPTY;
    let without_i = instance(2, auth, example, Some(fig.clone()));
    let r = solve(&full);
    let sat_full = r.as_ref().map(|r| r.is_sat()).unwrap_or(false);
    let uses_i = r.ok().and_then(|r| r.plan).is_some_and(|p| p.assignment.contains(&UserId(i)));
    let witness = plan_ok(&full, &Plan::new(vec![UserId(e), UserId(i)]));
    let unsat_without = solve(&without_i).map(|r| r.status) == Ok(SolveStatus::Unsat);
    if !(sat_full && uses_i && witness && unsat_without) {
        problems.push(format!(
            "(∼5,≁4) example: sat {sat_full}, plan uses i {uses_i}, e/i witness {witness}, unsat without i {unsat_without}"
        ));
    }

    verdict(
        problems.is_empty(),
        format!(
            "quotient=hierarchy {agree}/200, 2-level=flat {flat_agree}/200, canonicalize {canon}/300, \
             tree sequence {} levels, (∼5,≁4) example ok; problems {:?}",
            seq.len(),
            &problems[..problems.len().min(5)]
        ),
    )
}

fn min_users() -> Outcome {
    let mut problems = Vec::new();
    let mut cases = 0;
    let mut max_calls = 0;
    for mix in [Mix::Counting, Mix::Neq, Mix::Eq, Mix::Wsp1EqNeq, Mix::NeqCounting1, Mix::Regular] {
        for seed in 0..300u64 {
            let k = 1 + (seed % 5) as usize;
            let c = (seed / 5 % 5) as usize;
            let w = gen_random(&RandomSpec::new(k, 1, c, 1.0, mix, 0x11_0000 + seed)).unwrap();
            let steps = w.steps().to_vec();
            let cs = w.constraints().to_vec();
            let truth = (1..=k).find(|&m| oracle_sat(&instance(k, vec![StepSet::full(k); m], cs.clone(), None)));
            let got = min_fully_authorized_users(&steps, &cs).unwrap();
            let bound = (k as f64).log2().ceil() as usize;
            max_calls = max_calls.max(got.solve_calls);
            cases += 1;
            if got.users != truth || got.solve_calls > bound {
                problems.push(format!("{} seed {seed}: {:?} vs {truth:?}, {} calls", mix.name(), got.users, got.solve_calls));
            }
        }
    }
    verdict(
        problems.is_empty(),
        format!("{cases} constraint sets, max solve calls {max_calls}; problems {:?}", &problems[..problems.len().min(5)]),
    )
}

fn main() {
    let mut report = Report { unexpected: 0 };
    report.run("oracle equivalence", oracle_equivalence);
    report.run("NAE-3-SAT reduction", nae_reduction);
    let mut counting = None;
    report.run("hitting set, = encoding", || {
        let (eq, cnt) = hitting_set_reductions();
        counting = Some(cnt);
        eq
    });
    report.run("hitting set, counting encoding (same run)", || counting.take().unwrap());
    report.run("OR-composition of 3-coloring", or_composition);
    report.run("kernel guarantees", kernel_guarantees);
    report.run("scaling of solve_flat", scaling);
    report.run("hierarchy cross-checks", hierarchy_checks);
    report.run("min fully authorized users", min_users);
    if report.unexpected > 0 {
        println!("{} criteria failed", report.unexpected);
        std::process::exit(1);
    }
}
