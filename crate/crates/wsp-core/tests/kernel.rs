mod common;

use common::*;
use proptest::prelude::*;
use wsp_core::genbench::{gen_random, oracle_solve, Mix, RandomSpec};
use wsp_core::kernel::{kernelize, lift_plan, matching_kernel, merge_equality_steps, remove_easy_steps, MatchingState, Stage, Verdict};
use wsp_core::model::{check_plan, Constraint, WorkflowInstance};
use wsp_core::solver::{solve, SolveStatus};
use wsp_core::StepSet;

fn verdict_via_kernel(w: &WorkflowInstance) -> SolveStatus {
    let kr = kernelize(w);
    match kr.verdict_shortcut {
        Some(Verdict::Unsat) => SolveStatus::Unsat,
        Some(Verdict::Sat) | None => {
            let inner = if kr.verdict_shortcut.is_some() && kr.reduced.k() == 0 {
                wsp_core::model::Plan::new(Vec::new())
            } else {
                match solve(&kr.reduced).unwrap().plan {
                    Some(p) => p,
                    None => return SolveStatus::Unsat,
                }
            };
            let plan = lift_plan(&kr, &inner).unwrap();
            assert!(check_plan(w, &plan).unwrap().is_valid(), "lifted plan must be valid");
            SolveStatus::Sat
        }
    }
}

#[test]
fn purchase_order_merges_first_and_third_step() {
    let w = fig1(2);
    let kr = merge_equality_steps(&w).unwrap();
    let Stage::MergeEqualitySteps { components } = &kr.trace[0] else { panic!() };
    assert!(components.contains(&vec![0, 2]));
    assert_eq!(kr.reduced.k(), 5);
    assert!(kr.reduced.steps().contains(&"s1+s3".to_string()));
    assert_eq!(verdict_via_kernel(&w), SolveStatus::Sat);
    assert_eq!(verdict_via_kernel(&fig1(1)), SolveStatus::Unsat);
}

#[test]
fn conflicting_equalities_shortcut_to_unsat() {
    let w = instance(2, vec![StepSet::full(2); 3], vec![Constraint::eq(one(0), one(1)), Constraint::neq(one(0), one(1))], None);
    assert_eq!(kernelize(&w).verdict_shortcut, Some(Verdict::Unsat));
}

#[test]
fn stages_refuse_unsupported_constraints() {
    let full = vec![StepSet::full(3); 3];
    let type2 = instance(3, full.clone(), vec![Constraint::eq(one(0), set(&[1, 2]))], None);
    assert!(merge_equality_steps(&type2).is_err());
    assert!(remove_easy_steps(&type2).is_err());
    assert!(matching_kernel(&type2).is_err());
    assert!(kernelize(&type2).trace.is_empty());
    let counting = instance(3, full.clone(), vec![Constraint::counting(2, 3, StepSet::full(3))], None);
    assert!(remove_easy_steps(&counting).is_err());
    assert!(matching_kernel(&counting).is_err());
    let sims = instance(2, vec![StepSet::full(2); 3], vec![sim(1, one(0), one(1))], Some(wsp_core::hierarchy::Hierarchy::flat(3)));
    assert!(kernelize(&sims).trace.is_empty());
}

#[test]
fn all_easy_steps_decide_sat() {
    let w = instance(3, vec![StepSet::full(3); 3], vec![Constraint::neq(one(0), one(1)), Constraint::counting(1, 2, StepSet::full(3))], None);
    let kr = remove_easy_steps(&w).unwrap();
    assert_eq!(kr.verdict_shortcut, Some(Verdict::Sat));
    let p = lift_plan(&kr, &wsp_core::model::Plan::new(Vec::new())).unwrap();
    assert_eq!(p.distinct_users(), 3);
    assert!(check_plan(&w, &p).unwrap().is_valid());
}

#[test]
fn matching_kernel_examples() {
    let w = instance(3, vec![StepSet::full(3); 4], vec![Constraint::neq(one(0), one(1))], None);
    let kr = matching_kernel(&w).unwrap();
    assert_eq!(kr.verdict_shortcut, Some(Verdict::Sat));
    let lone = instance(2, vec![StepSet::full(2)], vec![Constraint::neq(one(0), one(1))], None);
    let kr = matching_kernel(&lone).unwrap();
    assert_eq!(kr.verdict_shortcut, None);
    assert!(kr.reduced.n() <= kr.reduced.k());
    assert!(!solve(&kr.reduced).unwrap().is_sat());
}

#[test]
fn trace_json_names_every_stage() {
    let w = fig1(3);
    let v = kernelize(&w).trace_json();
    let stages = v["stages"].as_array().unwrap();
    assert!(!stages.is_empty());
    assert_eq!(stages[0]["stage"], "merge-equality-steps");
    assert_eq!(stages[0]["supersteps"][0], serde_json::json!(["s1", "s3"]));
    assert!(v["reduced"]["steps"].is_array());
    assert!(v.get("verdict_shortcut").is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernelization_preserves_verdicts(seed in 0u64..1_000_000, m in 0usize..4, k in 1usize..7, n in 1usize..12, d in 0.1f64..1.0) {
        let mix = [Mix::Wsp1Neq, Mix::Wsp1EqNeq, Mix::NeqCounting1, Mix::Neq][m];
        let w = gen_random(&RandomSpec::new(k, n, 4, d, mix, seed)).unwrap();
        prop_assert_eq!(verdict_via_kernel(&w), oracle_solve(&w).unwrap().status);
    }

    #[test]
    fn matching_state_properties(seed in 0u64..1_000_000, k in 1usize..8, n in 1usize..12, d in 0.05f64..0.6) {
        let w = gen_random(&RandomSpec::new(k, n, 2, d, Mix::Wsp1Neq, seed)).unwrap();
        let st = MatchingState::new(&w);
        prop_assert!(st.check_properties().is_ok());
        if let Ok(kr) = matching_kernel(&w) {
            prop_assert!(kr.reduced.n() <= k);
        }
    }

    #[test]
    fn easy_step_kernel_is_bounded(seed in 0u64..1_000_000, k in 1usize..7, n in 1usize..40, d in 0.1f64..1.0) {
        let w = gen_random(&RandomSpec::new(k, n, 3, d, Mix::NeqCounting1, seed)).unwrap();
        let kr = remove_easy_steps(&w).unwrap();
        prop_assert!(kr.reduced.n() <= k * k.saturating_sub(1) || kr.verdict_shortcut.is_some());
    }
}
