mod common;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use common::*;
use gnesplit_core::model::{mean_dual, GameInstance};
use gnesplit_core::solvers::Solution;
use gnesplit_core::{CommGraph, Error, Iterate, Problem, SolveOptions, SolveStatus, SolverKind, StepConfig, StopRule};

fn solve(p: &Problem<'_>, kind: SolverKind, stop: StopRule) -> Solution {
    let steps = p.select_steps(kind).unwrap();
    p.solve(kind, &steps, &SolveOptions::new(stop), Iterate::default_start(p.game))
        .unwrap()
}

#[test]
fn trivial_instance_all_solvers_find_the_minimiser() {
    let (game, graph, xs) = trivial_game();
    let p = Problem::new(&game, &graph).unwrap();
    for kind in SolverKind::ALL {
        let sol = solve(&p, kind, StopRule::new(None, Some(1e-8), Some(100_000)).unwrap());
        assert_eq!(sol.status, SolveStatus::ConvergedKkt, "{kind}");
        assert!(sol.trace.last().unwrap().kkt.max() <= 1e-8);
        assert!(max_abs_diff(&sol.u.x, &xs) < 1e-7, "{kind}: {:?}", sol.u.x);
    }
}

#[test]
fn fb_solves_the_unit_quadratic_quickly() {
    let (game, graph) = unit_quadratic();
    let p = Problem::new(&game, &graph).unwrap();
    let sol = solve(&p, SolverKind::Fb, StopRule::new(Some(1e-10), None, Some(200)).unwrap());
    assert_eq!(sol.status, SolveStatus::ConvergedFp);
    assert!((sol.u.x[0] - 1.0).abs() < 1e-9);
}

#[test]
fn skew_game_fbf_converges_and_forced_fb_expands() {
    let (game, graph) = skew_game();
    let p = Problem::new(&game, &graph).unwrap();
    let mut u0 = Iterate::zeros(&game);
    u0.x = vec![1.0, -0.5];

    let steps = p.select_steps(SolverKind::Fbf).unwrap();
    let stop = StopRule::new(Some(1e-6), None, Some(100_000)).unwrap();
    let sol = p.solve(SolverKind::Fbf, &steps, &SolveOptions::new(stop), u0.clone()).unwrap();
    assert_eq!(sol.status, SolveStatus::ConvergedFp);
    assert!(norm(&sol.u.x) < 1e-3);

    assert!(matches!(p.select_steps(SolverKind::Fb), Err(Error::Prerequisite { .. })));
    let forced = StepConfig::uniform(2, 0.5).unwrap();
    let stop = StopRule::new(None, None, Some(1)).unwrap();
    assert!(matches!(
        p.solve(SolverKind::Fb, &forced, &SolveOptions::new(stop), u0.clone()),
        Err(Error::Prerequisite { .. })
    ));
    let mut opts = SolveOptions::new(StopRule::new(None, None, Some(1000)).unwrap());
    opts.enforce_assumptions = false;
    let mut dists = Vec::new();
    p.solve_observed(SolverKind::Fb, &forced, &opts, u0, &mut |_, u| dists.push(u.norm()))
        .unwrap();
    assert_eq!(dists.len(), 1001);
    assert!(dists.windows(2).all(|w| w[1] >= w[0]));
    // ‖(I − ρS)v‖² = (1 + ρ²)‖v‖²
    assert!((dists[1] / dists[0] - 1.25f64.sqrt()).abs() < 1e-12);
}

#[test]
fn fejer_monotone_on_every_test_instance() {
    let instances: Vec<(GameInstance, CommGraph)> = vec![
        skew_game(),
        { let (g, gr, _) = trivial_game(); (g, gr) },
        coupled_quadratic(),
        small_cournot(1),
        small_cournot(2),
    ];
    for (game, graph) in &instances {
        let p = Problem::new(game, graph).unwrap();
        let kinds: &[SolverKind] = if p.constants.theta.is_some() {
            &[SolverKind::Fbf, SolverKind::Fbhf]
        } else {
            &[SolverKind::Fbf]
        };
        for &kind in kinds {
            let worst = fejer_worst_increase(&p, kind, 3000);
            assert!(worst <= 1e-10, "{kind} on {} agents: increase {worst:e}", game.num_agents());
        }
    }
}

#[test]
fn gradient_evaluations_are_counted_honestly() {
    let (base, graph) = small_cournot(3);
    let counter = Arc::new(AtomicU64::new(0));
    let game = counting(&base, &counter);
    let p = Problem::new(&game, &graph).unwrap();
    let n = game.num_agents() as u64;
    for kind in SolverKind::ALL {
        let steps = p.select_steps(kind).unwrap();
        let mut u = Iterate::default_start(&game);
        counter.store(0, Ordering::Relaxed);
        for _ in 0..7 {
            u = p.apply_map(kind, &steps, &u).unwrap();
        }
        // one pseudo-gradient evaluation = one call per agent
        assert_eq!(counter.load(Ordering::Relaxed), 7 * n * kind.grad_evals_per_iter());

        let sol = solve(&p, kind, StopRule::new(None, None, Some(25)).unwrap());
        for r in &sol.trace.records {
            assert_eq!(r.grad_evals, r.iter as u64 * kind.grad_evals_per_iter());
            assert_eq!(r.comm_rounds, 2 * r.iter as u64);
        }
    }
    assert_eq!(SolverKind::Fbf.grad_evals_per_iter(), 2);
    assert_eq!(SolverKind::Fb.grad_evals_per_iter(), 1);
    assert_eq!(SolverKind::Fbhf.grad_evals_per_iter(), 1);
}

#[test]
fn solvers_agree_and_converged_points_are_zeros() {
    let (game, graph) = small_cournot(5);
    let p = Problem::new(&game, &graph).unwrap();
    let fp_tol = 1e-9;
    let kkt_tol = 1e-7;
    let fbf_steps = p.select_steps(SolverKind::Fbf).unwrap();
    let fbhf_steps = p.select_steps(SolverKind::Fbhf).unwrap();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    for kind in SolverKind::ALL {
        let sol = solve(&p, kind, StopRule::new(Some(fp_tol), Some(kkt_tol), Some(500_000)).unwrap());
        assert_eq!(sol.status, SolveStatus::ConvergedKkt, "{kind}");
        let u = &sol.u;
        let scale = u.norm().max(1.0);
        let r_fbf = p.fixed_point_residual(SolverKind::Fbf, &fbf_steps, u).unwrap() / scale;
        let r_fbhf = p.fixed_point_residual(SolverKind::Fbhf, &fbhf_steps, u).unwrap() / scale;
        let kkt = p.kkt(u).unwrap();
        assert!(r_fbf <= 10.0 * fp_tol, "{kind}: T_FBF residual {r_fbf:e}");
        assert!(r_fbhf <= 10.0 * fp_tol, "{kind}: T_FBHF residual {r_fbhf:e}");
        assert!(kkt.max() <= 10.0 * kkt_tol);
        assert!(kkt.dual_consensus <= 10.0 * kkt_tol);
        let mean = mean_dual(&u.lam, game.num_constraints());
        for i in 0..game.num_agents() {
            let m = game.num_constraints();
            assert!(max_abs_diff(&u.lam[i * m..(i + 1) * m], &mean) <= 1e-5);
        }
        xs.push(u.x.clone());
    }
    for x in &xs[1..] {
        let rel = common::norm(&x.iter().zip(&xs[0]).map(|(a, b)| a - b).collect::<Vec<_>>()) / common::norm(&xs[0]);
        assert!(rel <= 1e-4);
    }
}

#[test]
fn identical_runs_give_identical_traces() {
    let (game, graph) = small_cournot(8);
    let p = Problem::new(&game, &graph).unwrap();
    for kind in SolverKind::ALL {
        let a = solve(&p, kind, StopRule::new(None, None, Some(300)).unwrap());
        let b = solve(&p, kind, StopRule::new(None, None, Some(300)).unwrap());
        assert_eq!(a.u, b.u);
        assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn reference_distance_is_traced() {
    let (game, graph, xs) = trivial_game();
    let p = Problem::new(&game, &graph).unwrap();
    let steps = p.select_steps(SolverKind::Fbf).unwrap();
    let mut opts = SolveOptions::new(StopRule::new(None, None, Some(50)).unwrap());
    opts.reference = Some(&xs);
    let sol = p.solve(SolverKind::Fbf, &steps, &opts, Iterate::default_start(&game)).unwrap();
    let recs = &sol.trace.records;
    assert!(recs.iter().all(|r| r.rel_dist.is_some()));
    assert!(recs.last().unwrap().rel_dist.unwrap() < recs[0].rel_dist.unwrap());
    let no_ref = solve(&p, SolverKind::Fbf, StopRule::new(None, None, Some(5)).unwrap());
    assert!(no_ref.trace.records.iter().all(|r| r.rel_dist.is_none()));
}
