use proptest::prelude::*;
use wsp_core::genbench::{
    bench_run, gen_3coloring_or, gen_hitting_set_counting, gen_hitting_set_eq, gen_nae3sat, gen_random, hitting_set_exists,
    nae_satisfiable, oracle_solve, oracle_solve_unpruned, oracle_solve_with_budget, three_colorable, write_csv, BenchSpec,
    CnfFormula, Graph, HittingSetInstance, Literal, Mix, OracleError, RandomSpec,
};
use wsp_core::model::{check_plan, Constraint, Relation};
use wsp_core::solver::{solve, SolveStatus};
use wsp_core::StepSet;

fn one(i: usize) -> StepSet {
    StepSet::singleton(i)
}

#[test]
fn nae_single_clause() {
    let f = CnfFormula::new(3, vec![[Literal::pos(1), Literal::neg(2), Literal::pos(3)]]).unwrap();
    let w = gen_nae3sat(&f).unwrap();
    assert_eq!((w.k(), w.n()), (6, 2));
    let want = vec![
        Constraint::neq(one(0), one(3)),
        Constraint::neq(one(1), one(4)),
        Constraint::neq(one(2), one(5)),
        Constraint::neq(one(0), one(4) | one(2)),
    ];
    assert_eq!(w.constraints(), want.as_slice());
    assert!(nae_satisfiable(&f));
    assert!(solve(&w).unwrap().is_sat());
}

#[test]
fn nae_repeated_literal_clause() {
    // (x1 ∨ x1 ∨ x1) can never be not-all-equal.
    let f = CnfFormula::new(1, vec![[Literal::pos(1); 3]]).unwrap();
    assert!(!nae_satisfiable(&f));
    assert_eq!(solve(&gen_nae3sat(&f).unwrap()).unwrap().status, SolveStatus::Unsat);
    let f = CnfFormula::parse_dimacs("p cnf 2 1\n1 1 -2 0\n").unwrap();
    assert!(nae_satisfiable(&f));
    assert!(solve(&gen_nae3sat(&f).unwrap()).unwrap().is_sat());
}

#[test]
fn dimacs_rejects_garbage() {
    assert!(CnfFormula::parse_dimacs("p cnf 2 1\n1 3 2 0\n").is_err());
    assert!(CnfFormula::parse_dimacs("hello").is_err());
}

#[test]
fn hitting_set_examples() {
    let h = HittingSetInstance::new(3, vec![vec![0, 1], vec![1, 2]], 1).unwrap();
    assert!(hitting_set_exists(&h));
    let w = gen_hitting_set_eq(&h).unwrap();
    assert_eq!((w.k(), w.n(), w.c()), (3, 3, 2));
    assert!(solve(&w).unwrap().is_sat());
    let h = HittingSetInstance::new(3, vec![vec![0], vec![2]], 1).unwrap();
    assert!(!hitting_set_exists(&h));
    assert!(!solve(&gen_hitting_set_eq(&h).unwrap()).unwrap().is_sat());
    assert!(HittingSetInstance::new(2, vec![vec![5]], 1).is_err());
}

#[test]
fn hitting_set_counting_shape() {
    let h = HittingSetInstance::new(2, vec![vec![0], vec![1]], 1).unwrap();
    let w = gen_hitting_set_counting(&h).unwrap();
    assert_eq!(w.k(), 3);
    let fresh = one(2);
    assert_eq!(w.constraints()[0], Constraint::counting(2, 2, fresh | one(0)));
    assert_eq!(w.constraints()[1], Constraint::counting(2, 2, fresh | one(1)));
}

#[test]
fn three_coloring_or() {
    let (k4, c5) = (Graph::complete(4), Graph::cycle(5));
    assert!(!three_colorable(&k4));
    assert!(three_colorable(&c5));
    assert!(gen_3coloring_or(&[k4.clone(), c5]).is_err(), "vertex counts differ");
    let w = gen_3coloring_or(&[k4.clone(), Graph::cycle(4)]).unwrap();
    assert_eq!((w.k(), w.n()), (4 + 16, 8));
    assert!(solve(&w).unwrap().is_sat());
    let w = gen_3coloring_or(&[k4.clone(), k4]).unwrap();
    assert!(!solve(&w).unwrap().is_sat());
    assert!(w.constraints().iter().any(|c| c.relation() == Some(&Relation::Sim(2))));
    let w = gen_3coloring_or(&[Graph::complete(3)]).unwrap();
    let p = solve(&w).unwrap().plan.unwrap();
    assert!(check_plan(&w, &p).unwrap().is_valid());
    assert!(gen_3coloring_or(&[]).is_err());
}

#[test]
fn generator_rejects_bad_parameters() {
    assert!(gen_random(&RandomSpec::new(3, 2, 1, 1.5, Mix::Neq, 0)).is_err());
    assert!(gen_random(&RandomSpec::new(3, 0, 1, 1.0, Mix::Neq, 0)).is_err());
    assert!(gen_random(&RandomSpec::new(31, 2, 1, 1.0, Mix::Neq, 0)).is_err());
}

#[test]
fn every_mix_is_deterministic() {
    for mix in Mix::ALL {
        let spec = RandomSpec::new(6, 5, 6, 0.5, mix, 99);
        let (a, b) = (gen_random(&spec).unwrap(), gen_random(&spec).unwrap());
        assert_eq!(a.to_raw(), b.to_raw(), "{}", mix.name());
        assert_eq!(Mix::parse(mix.name()), Some(mix));
    }
}

#[test]
fn oracle_limits() {
    let w = gen_random(&RandomSpec::new(9, 2, 0, 1.0, Mix::Neq, 0)).unwrap();
    assert_eq!(oracle_solve(&w).unwrap_err(), OracleError::TooManySteps(9));
    let w = gen_random(&RandomSpec::new(8, 8, 8, 1.0, Mix::Counting, 3)).unwrap();
    assert!(matches!(oracle_solve_unpruned(&w, 1000), Err(OracleError::BudgetExceeded(1000))));
    let w = gen_random(&RandomSpec::new(6, 6, 1, 1.0, Mix::Neq, 3)).unwrap();
    assert_eq!(oracle_solve_with_budget(&w, 1).unwrap_err(), OracleError::BudgetExceeded(1));
}

#[test]
fn bench_csv_has_one_row_per_instance() {
    let spec = BenchSpec { ks: vec![4, 5, 6], instances_per_k: 2, serial: false, ..BenchSpec::default() };
    let recs = bench_run(&spec).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs.iter().all(|r| r.route == "flat" && (r.verdict == "sat" || r.verdict == "unsat")));
    let mut out = Vec::new();
    write_csv(&recs, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,n,c,route,verdict,ms"));
    assert_eq!(lines.count(), 6);
}

proptest! {
    #[test]
    fn pruning_does_not_change_oracle_verdicts(seed in 0u64..1_000_000, m in 0usize..10, k in 0usize..5, n in 1usize..5) {
        let w = gen_random(&RandomSpec::new(k, n, if k == 0 { 0 } else { 3 }, 0.7, Mix::ALL[m], seed)).unwrap();
        let a = oracle_solve(&w).unwrap();
        let b = oracle_solve_unpruned(&w, 1 << 20).unwrap();
        prop_assert_eq!(a.status, b.status);
        if let Some(p) = a.plan {
            prop_assert!(check_plan(&w, &p).unwrap().is_valid());
        }
    }

    #[test]
    fn random_formulas_round_trip(seed in 0u64..1_000_000, vars in 1usize..6, clauses in 0usize..6) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f = wsp_core::genbench::random_formula(&mut rng, vars, clauses);
        let g = CnfFormula::parse_dimacs(&f.to_dimacs()).unwrap();
        prop_assert_eq!(&f, &g);
        prop_assert_eq!(nae_satisfiable(&f), solve(&gen_nae3sat(&f).unwrap()).unwrap().is_sat());
    }
}
