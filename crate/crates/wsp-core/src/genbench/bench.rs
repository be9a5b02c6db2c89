//! Timing harness over random instance grids.

use super::random::{gen_random, Mix, RandomSpec};
use super::GenError;
use crate::solver::{solve_with, RouteChoice, SolveOptions, SolveStatus};
use std::io::Write;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub ks: Vec<usize>,
    /// Users per step: `n = users_per_step * k`.
    pub users_per_step: usize,
    /// Constraints per step, rounded.
    pub constraints_per_step: f64,
    pub density: f64,
    pub mix: Mix,
    pub routes: Vec<RouteChoice>,
    pub instances_per_k: usize,
    pub seed: u64,
    /// Time each instance alone rather than on worker threads.
    pub serial: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            ks: (10..=18).collect(),
            users_per_step: 2,
            constraints_per_step: 1.0,
            density: 1.0,
            mix: Mix::Wsp1Neq,
            routes: vec![RouteChoice::Flat],
            instances_per_k: 1,
            seed: 0,
            serial: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub k: usize,
    pub n: usize,
    pub c: usize,
    pub route: String,
    pub verdict: String,
    pub ms: f64,
    /// Subsets (or search nodes) visited by the solver.
    pub subsets: u64,
}

pub fn route_name(r: RouteChoice) -> &'static str {
    match r {
        RouteChoice::Auto => "auto",
        RouteChoice::Flat => "flat",
        RouteChoice::Quotient => "quotient",
        RouteChoice::Hierarchy => "hierarchy",
        RouteChoice::Search => "search",
        RouteChoice::Oracle => "oracle",
    }
}

/// One record per (instance, route), ordered by `k`, then instance, then route.
pub fn bench_run(spec: &BenchSpec) -> Result<Vec<BenchRecord>, GenError> {
    let mut jobs = Vec::new();
    for &k in &spec.ks {
        for i in 0..spec.instances_per_k {
            let n = spec.users_per_step * k;
            let c = (spec.constraints_per_step * k as f64).round() as usize;
            let seed = spec.seed.wrapping_mul(1_000_003).wrapping_add((k * 1000 + i) as u64);
            let w = gen_random(&RandomSpec::new(k, n, c, spec.density, spec.mix, seed))?;
            for &route in &spec.routes {
                jobs.push((w.clone(), route));
            }
        }
    }
    let run = |(w, route): &(crate::model::WorkflowInstance, RouteChoice)| {
        let opts = SolveOptions { route: *route, ..SolveOptions::default() };
        let start = Instant::now();
        let res = solve_with(w, &opts);
        let ms = start.elapsed().as_secs_f64() * 1000.0;
        let (verdict, subsets) = match res {
            Ok(r) => (if r.status == SolveStatus::Sat { "sat" } else { "unsat" }.to_string(), r.stats.subsets_visited),
            Err(e) if e.is_capability() => ("unsupported".to_string(), 0),
            Err(_) => ("error".to_string(), 0),
        };
        BenchRecord { k: w.k(), n: w.n(), c: w.c(), route: route_name(*route).to_string(), verdict, ms, subsets }
    };
    if spec.serial {
        return Ok(jobs.iter().map(run).collect());
    }
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(jobs.len().max(1));
    let mut slots: Vec<Option<BenchRecord>> = vec![None; jobs.len()];
    std::thread::scope(|scope| {
        let size = jobs.len().div_ceil(workers).max(1);
        for (out, part) in slots.chunks_mut(size).zip(jobs.chunks(size)) {
            scope.spawn(move || {
                for (o, j) in out.iter_mut().zip(part) {
                    *o = Some(run(j));
                }
            });
        }
    });
    Ok(slots.into_iter().map(|r| r.expect("every job ran")).collect())
}

/// CSV with header `k,n,c,route,verdict,ms`.
pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<(), GenError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["k", "n", "c", "route", "verdict", "ms"]).map_err(|e| GenError::Io(e.to_string()))?;
    for r in records {
        wtr.write_record([
            r.k.to_string(),
            r.n.to_string(),
            r.c.to_string(),
            r.route.clone(),
            r.verdict.clone(),
            format!("{:.3}", r.ms),
        ])
        .map_err(|e| GenError::Io(e.to_string()))?;
    }
    wtr.flush().map_err(|e| GenError::Io(e.to_string()))
}
