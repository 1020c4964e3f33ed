//! Fixed-point engines: preconditioned forward-backward (FB),
//! forward-backward-forward (FBF) and forward-backward-half-forward (FBHF),
//! with their step-size rules, stopping rules and per-iteration traces.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::graph::CommGraph;
use crate::linalg;
use crate::model::{kkt_residual, GameInstance, KktResidual};
use crate::splitting::{
    build_phi_fb, compute_constants, put_agent_blocks, rows, AgentBlocks,
    ConstantOptions, ConstantsBundle, Iterate, Neighborhood, StackedView, StepConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Fb,
    Fbf,
    Fbhf,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Fb, SolverKind::Fbf, SolverKind::Fbhf];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Fb => "fb",
            SolverKind::Fbf => "fbf",
            SolverKind::Fbhf => "fbhf",
        }
    }

    /// FB and FBHF need a strongly monotone pseudo-gradient.
    pub fn needs_strong_monotonicity(self) -> bool {
        !matches!(self, SolverKind::Fbf)
    }

    /// Pseudo-gradient evaluations per iteration.
    pub fn grad_evals_per_iter(self) -> u64 {
        match self {
            SolverKind::Fbf => 2,
            SolverKind::Fb | SolverKind::Fbhf => 1,
        }
    }

    /// Communication phases per iteration.
    pub fn rounds_per_iter(self) -> u64 {
        2
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fb" => Ok(SolverKind::Fb),
            "fbf" => Ok(SolverKind::Fbf),
            "fbhf" => Ok(SolverKind::Fbhf),
            other => Err(Error::Config(alloc::format!("unknown solver '{other}'"))),
        }
    }
}

/// Stopping rule. Every active tolerance has to be met before the run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    /// Threshold on `‖u^{k+1} − u^k‖ / max(1, ‖u^k‖)`.
    pub fp_tol: Option<f64>,
    /// Threshold on the largest KKT residual field.
    pub kkt_tol: Option<f64>,
    pub max_iters: Option<usize>,
}

impl StopRule {
    pub fn new(fp_tol: Option<f64>, kkt_tol: Option<f64>, max_iters: Option<usize>) -> Result<Self> {
        if fp_tol.is_none() && kkt_tol.is_none() && max_iters.is_none() {
            return Err(Error::Config("stop rule needs at least one criterion".into()));
        }
        if fp_tol.is_some_and(|t| !(t > 0.0)) || kkt_tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(StopRule {
            fp_tol,
            kkt_tol,
            max_iters,
        })
    }

    fn has_tolerance(&self) -> bool {
        self.fp_tol.is_some() || self.kkt_tol.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub fp_res: f64,
    pub kkt: KktResidual,
    pub rel_dist: Option<f64>,
    pub cpu_s: f64,
    pub comm_rounds: u64,
    pub grad_evals: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    ConvergedFp,
    ConvergedKkt,
    MaxIters,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::ConvergedFp => "converged_fp",
            SolveStatus::ConvergedKkt => "converged_kkt",
            SolveStatus::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: Iterate,
    pub trace: RunTrace,
    pub status: SolveStatus,
}

/// Source of cumulative processor time in seconds.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Reports zero; for builds without a time source.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

pub struct SolveOptions<'a> {
    pub stop: StopRule,
    /// `x*` for the relative-distance column.
    pub reference: Option<&'a [f64]>,
    /// Refuse to run outside the convergence hypotheses of the chosen method.
    pub enforce_assumptions: bool,
    pub clock: &'a dyn Clock,
}

impl<'a> SolveOptions<'a> {
    pub fn new(stop: StopRule) -> Self {
        SolveOptions {
            stop,
            reference: None,
            enforce_assumptions: true,
            clock: &NoClock,
        }
    }
}

/// Options of the FB step rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbStepOptions {
    /// Strict diagonal-dominance margin of `Φ_FB`.
    pub margin: f64,
    /// Target for `αθ` with `α = λ_min(Φ_FB)`; convergence needs `> 1/2`.
    pub cocoercivity_target: f64,
}

impl Default for FbStepOptions {
    fn default() -> Self {
        FbStepOptions {
            margin: 1e-2,
            cocoercivity_target: 0.6,
        }
    }
}

/// Gershgorin steps: each row of `Φ_FB` dominates its off-diagonal mass by
/// `margin`, which makes `Φ_FB` positive definite.
pub fn gershgorin_steps(game: &GameInstance, graph: &CommGraph, margin: f64) -> Result<StepConfig> {
    if !(margin > 0.0) {
        return Err(Error::Config("margin must be positive".into()));
    }
    check_dim("graph nodes", game.num_agents(), graph.num_nodes())?;
    let mut rho = Vec::new();
    let mut sigma = Vec::new();
    let mut tau = Vec::new();
    for (i, a) in game.agents().iter().enumerate() {
        let blk = &a.coupling_block;
        let col_sum = (0..blk.cols())
            .map(|c| (0..blk.rows()).map(|r| blk[(r, c)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let row_sum = (0..blk.rows())
            .map(|r| blk.row(r).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let deg = graph.degrees()[i];
        rho.push(1.0 / (col_sum + margin));
        sigma.push(1.0 / (2.0 * deg + margin));
        tau.push(1.0 / (row_sum + 2.0 * deg + margin));
    }
    StepConfig::new(rho, sigma, tau)
}

/// FB steps: Gershgorin steps, then every inverse step is raised by a common
/// shift `s` so that `λ_min(Φ_FB + sI)·θ` reaches the cocoercivity target.
pub fn select_steps_fb(
    game: &GameInstance,
    graph: &CommGraph,
    constants: &ConstantsBundle,
    opts: &FbStepOptions,
) -> Result<StepConfig> {
    let theta = constants.theta.ok_or(Error::Prerequisite {
        solver: "fb",
        requirement: "a strongly monotone pseudo-gradient (eta > 0)",
    })?;
    if !(opts.cocoercivity_target > 0.5) {
        return Err(Error::Config("cocoercivity target must exceed 1/2".into()));
    }
    let base = gershgorin_steps(game, graph, opts.margin)?;
    let alpha = build_phi_fb(game, graph, &base)?.min_eigenvalue;
    let shift = (opts.cocoercivity_target / theta - alpha).max(0.0);
    let bump = |s: &Vec<f64>| -> Vec<f64> { s.iter().map(|v| 1.0 / (1.0 / v + shift)).collect() };
    StepConfig::new(bump(&base.rho), bump(&base.sigma), bump(&base.tau))
}

/// FBF steps: uniform `safety / L_𝓓`.
pub fn select_steps_fbf(n_agents: usize, constants: &ConstantsBundle, safety: f64) -> Result<StepConfig> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::Config("safety factor must lie in (0, 1)".into()));
    }
    if !(constants.l_d > 0.0) {
        return Err(Error::Config("L_D must be positive".into()));
    }
    StepConfig::uniform(n_agents, safety / constants.l_d)
}

/// Upper bound on `|Ψ⁻¹|` for FBHF: `min{2θ, 1/L_𝓑}`.
pub fn fbhf_step_bound(constants: &ConstantsBundle) -> Option<f64> {
    let theta = constants.theta?;
    let inv_lb = if constants.l_b > 0.0 {
        1.0 / constants.l_b
    } else {
        f64::INFINITY
    };
    Some((2.0 * theta).min(inv_lb))
}

/// FBHF steps: uniform `safety · min{2θ, 1/L_𝓑}`.
pub fn select_steps_fbhf(n_agents: usize, constants: &ConstantsBundle, safety: f64) -> Result<StepConfig> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::Config("safety factor must lie in (0, 1)".into()));
    }
    let bound = fbhf_step_bound(constants).ok_or(Error::Prerequisite {
        solver: "fbhf",
        requirement: "a strongly monotone pseudo-gradient (eta > 0)",
    })?;
    StepConfig::uniform(n_agents, safety * bound)
}

/// Agent-level halves of each method. The centralised maps below and the
/// message-passing simulation both run exactly these functions.
pub mod agent_step {
    use super::*;

    fn steps_of(steps: &StepConfig, i: usize) -> (f64, f64, f64) {
        (steps.rho[i], steps.sigma[i], steps.tau[i])
    }

    /// Agent `i`'s own blocks as seen through `nb`.
    pub fn own_blocks(game: &GameInstance, i: usize, nb: &impl Neighborhood) -> AgentBlocks {
        AgentBlocks {
            x: game.block(nb.x_full(), i).to_vec(),
            z: nb.z(i).to_vec(),
            lam: nb.lam(i).to_vec(),
        }
    }

    /// FBF first half: `ũ_i = J(v_i − s·𝓓v)_i`; returns `(ũ_i, (𝓓v)_i)`.
    pub fn fbf_first(
        game: &GameInstance,
        graph: &CommGraph,
        steps: &StepConfig,
        i: usize,
        v: &impl Neighborhood,
    ) -> (AgentBlocks, AgentBlocks) {
        let (a, b) = rows::a_and_b(game, graph, i, v);
        let d = a.plus(&b);
        let fwd = rows::forward(&own_blocks(game, i, v), steps_of(steps, i), &d);
        (rows::resolvent(game, i, steps.rho[i], &fwd), d)
    }

    /// FBF second half: `v⁺_i = ũ_i + s·((𝓓v)_i − (𝓓ũ)_i)`.
    pub fn fbf_second(
        game: &GameInstance,
        graph: &CommGraph,
        steps: &StepConfig,
        i: usize,
        u_tilde: &impl Neighborhood,
        dv: &AgentBlocks,
    ) -> AgentBlocks {
        let (a, b) = rows::a_and_b(game, graph, i, u_tilde);
        let du = a.plus(&b);
        rows::correct(&own_blocks(game, i, u_tilde), steps_of(steps, i), dv, &du)
    }

    /// FBHF first half: same as FBF but keeps `(𝓑v)_i` for the correction.
    pub fn fbhf_first(
        game: &GameInstance,
        graph: &CommGraph,
        steps: &StepConfig,
        i: usize,
        v: &impl Neighborhood,
    ) -> (AgentBlocks, AgentBlocks) {
        let (a, b) = rows::a_and_b(game, graph, i, v);
        let d = a.plus(&b);
        let fwd = rows::forward(&own_blocks(game, i, v), steps_of(steps, i), &d);
        (rows::resolvent(game, i, steps.rho[i], &fwd), b)
    }

    /// FBHF second half: `v⁺_i = ũ_i + s·((𝓑v)_i − (𝓑ũ)_i)`; no gradient.
    pub fn fbhf_second(
        game: &GameInstance,
        graph: &CommGraph,
        steps: &StepConfig,
        i: usize,
        u_tilde: &impl Neighborhood,
        bv: &AgentBlocks,
    ) -> AgentBlocks {
        let bu = rows::b_only(game, graph, i, u_tilde);
        rows::correct(&own_blocks(game, i, u_tilde), steps_of(steps, i), bv, &bu)
    }

    /// FB primal half: `x⁺_i = prox(x_i − ρ_i(F_i + A_iᵀλ_i))`,
    /// `z⁺_i = z_i − σ_i(L̄λ)_i`. Returns `(x⁺_i, z⁺_i, (L̄λ)_i + b_i)`.
    pub fn fb_first(
        game: &GameInstance,
        graph: &CommGraph,
        steps: &StepConfig,
        i: usize,
        v: &impl Neighborhood,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let dim = game.agent(i).dim;
        let m = game.num_constraints();
        let mut a = AgentBlocks::zeros(dim, m);
        let mut b = AgentBlocks::zeros(dim, m);
        rows::a_x(game, i, v, &mut a.x);
        rows::b_x(game, i, v, &mut b.x);
        rows::lap_lam(graph, i, v, &mut b.z);
        rows::a_lam(game, i, &b.z, &mut a.lam);
        // the λ-row of the forward step is not used here, so neighbour z is never read
        let d = a.plus(&b);
        let fwd = rows::forward(&own_blocks(game, i, v), steps_of(steps, i), &d);
        let r = rows::resolvent(game, i, steps.rho[i], &fwd);
        (r.x, r.z, a.lam)
    }

    /// `2p⁺ − p`, the reflection the FB dual update consumes.
    pub fn reflect(next: &[f64], prev: &[f64]) -> Vec<f64> {
        next.iter().zip(prev).map(|(n, p)| 2.0 * n - p).collect()
    }

    /// FB dual half: `λ⁺_i = max(0, λ_i − τ_i((L̄λ)_i + b_i − A_i r_x − (L̄r_z)_i))`
    /// where `reflected` exposes `r = 2u⁺ − u` on the x and z blocks.
    pub fn fb_second(
        game: &GameInstance,
        graph: &CommGraph,
        steps: &StepConfig,
        i: usize,
        reflected: &impl Neighborhood,
        lam: &[f64],
        a_lam: &[f64],
    ) -> Vec<f64> {
        let mut b_lam = vec![0.0; game.num_constraints()];
        rows::b_lam(game, graph, i, reflected, &mut b_lam);
        lam.iter()
            .zip(a_lam.iter().zip(&b_lam))
            .map(|(l, (a, b))| (l - steps.tau[i] * (a + b)).max(0.0))
            .collect()
    }
}

/// A game bound to its communication graph and constants.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub game: &'a GameInstance,
    pub graph: &'a CommGraph,
    pub constants: ConstantsBundle,
}

impl<'a> Problem<'a> {
    pub fn new(game: &'a GameInstance, graph: &'a CommGraph) -> Result<Self> {
        Self::with_options(game, graph, &ConstantOptions::default())
    }

    pub fn with_options(game: &'a GameInstance, graph: &'a CommGraph, opts: &ConstantOptions) -> Result<Self> {
        let constants = compute_constants(game, graph, opts)?;
        Ok(Problem {
            game,
            graph,
            constants,
        })
    }

    pub fn with_constants(game: &'a GameInstance, graph: &'a CommGraph, constants: ConstantsBundle) -> Result<Self> {
        check_dim("graph nodes", game.num_agents(), graph.num_nodes())?;
        Ok(Problem {
            game,
            graph,
            constants,
        })
    }

    fn m(&self) -> usize {
        self.game.num_constraints()
    }

    /// Default step rule for `kind`.
    pub fn select_steps(&self, kind: SolverKind) -> Result<StepConfig> {
        let n = self.game.num_agents();
        match kind {
            SolverKind::Fb => select_steps_fb(self.game, self.graph, &self.constants, &FbStepOptions::default()),
            SolverKind::Fbf => select_steps_fbf(n, &self.constants, 0.99),
            SolverKind::Fbhf => select_steps_fbhf(n, &self.constants, 0.99),
        }
    }

    /// Checks the convergence hypotheses of `kind` for `steps`.
    pub fn check_assumptions(&self, kind: SolverKind, steps: &StepConfig) -> Result<()> {
        let c = &self.constants;
        match kind {
            SolverKind::Fbf => {
                if !(steps.psi_inv_norm() * c.l_d < 1.0) {
                    return Err(Error::Prerequisite {
                        solver: "fbf",
                        requirement: "|Psi^-1| * L_D < 1",
                    });
                }
            }
            SolverKind::Fbhf => {
                let bound = fbhf_step_bound(c).ok_or(Error::Prerequisite {
                    solver: "fbhf",
                    requirement: "a strongly monotone pseudo-gradient (eta > 0)",
                })?;
                if !(steps.psi_inv_norm() <= bound) {
                    return Err(Error::Prerequisite {
                        solver: "fbhf",
                        requirement: "|Psi^-1| <= min{2 theta, 1/L_B}",
                    });
                }
            }
            SolverKind::Fb => {
                let theta = c.theta.ok_or(Error::Prerequisite {
                    solver: "fb",
                    requirement: "a strongly monotone pseudo-gradient (eta > 0)",
                })?;
                let alpha = build_phi_fb(self.game, self.graph, steps)?.min_eigenvalue;
                if !(alpha * theta > 0.5) {
                    return Err(Error::Prerequisite {
                        solver: "fb",
                        requirement: "cocoercivity of Phi^-1 A with alpha * theta > 1/2",
                    });
                }
            }
        }
        Ok(())
    }

    /// One FB iteration `u⁺ = J_{Φ⁻¹(𝓒+𝓑)}(u − Φ⁻¹𝓐u)`.
    pub fn step_fb(&self, steps: &StepConfig, u: &Iterate) -> Result<Iterate> {
        u.check_dims(self.game)?;
        let (game, graph, m) = (self.game, self.graph, self.m());
        let view = StackedView { u, m };
        let mut next = u.clone();
        let mut a_lam = Vec::with_capacity(game.num_agents());
        for i in 0..game.num_agents() {
            let (x, z, al) = agent_step::fb_first(game, graph, steps, i, &view);
            next.x[game.block_range(i)].copy_from_slice(&x);
            next.z[i * m..(i + 1) * m].copy_from_slice(&z);
            a_lam.push(al);
        }
        let reflected = Iterate {
            x: agent_step::reflect(&next.x, &u.x),
            z: agent_step::reflect(&next.z, &u.z),
            lam: u.lam.clone(),
        };
        let rview = StackedView { u: &reflected, m };
        for (i, al) in a_lam.iter().enumerate() {
            let lam = agent_step::fb_second(game, graph, steps, i, &rview, &u.lam[i * m..(i + 1) * m], al);
            next.lam[i * m..(i + 1) * m].copy_from_slice(&lam);
        }
        Ok(next)
    }

    /// One FBF iteration; returns `(v⁺, ũ)`.
    pub fn step_fbf(&self, steps: &StepConfig, v: &Iterate) -> Result<(Iterate, Iterate)> {
        self.two_phase(
            steps,
            v,
            |g, gr, s, i, nb| agent_step::fbf_first(g, gr, s, i, nb),
            |g, gr, s, i, nb, k| agent_step::fbf_second(g, gr, s, i, nb, k),
        )
    }

    /// One FBHF iteration; returns `(v⁺, ũ)`.
    pub fn step_fbhf(&self, steps: &StepConfig, v: &Iterate) -> Result<(Iterate, Iterate)> {
        self.two_phase(
            steps,
            v,
            |g, gr, s, i, nb| agent_step::fbhf_first(g, gr, s, i, nb),
            |g, gr, s, i, nb, k| agent_step::fbhf_second(g, gr, s, i, nb, k),
        )
    }

    fn two_phase<F1, F2>(&self, steps: &StepConfig, v: &Iterate, first: F1, second: F2) -> Result<(Iterate, Iterate)>
    where
        F1: Fn(&GameInstance, &CommGraph, &StepConfig, usize, &StackedView<'_>) -> (AgentBlocks, AgentBlocks),
        F2: Fn(&GameInstance, &CommGraph, &StepConfig, usize, &StackedView<'_>, &AgentBlocks) -> AgentBlocks,
    {
        v.check_dims(self.game)?;
        check_dim("step config", self.game.num_agents(), steps.num_agents())?;
        let (game, graph, m) = (self.game, self.graph, self.m());
        let view = StackedView { u: v, m };
        let mut tilde = Iterate::zeros(game);
        let mut kept = Vec::with_capacity(game.num_agents());
        for i in 0..game.num_agents() {
            let (t, k) = first(game, graph, steps, i, &view);
            put_agent_blocks(game, &mut tilde, i, &t);
            kept.push(k);
        }
        let tview = StackedView { u: &tilde, m };
        let mut next = Iterate::zeros(game);
        for (i, k) in kept.iter().enumerate() {
            put_agent_blocks(game, &mut next, i, &second(game, graph, steps, i, &tview, k));
        }
        Ok((next, tilde))
    }

    /// `T(u)` for the chosen method.
    pub fn apply_map(&self, kind: SolverKind, steps: &StepConfig, u: &Iterate) -> Result<Iterate> {
        match kind {
            SolverKind::Fb => self.step_fb(steps, u),
            SolverKind::Fbf => Ok(self.step_fbf(steps, u)?.0),
            SolverKind::Fbhf => Ok(self.step_fbhf(steps, u)?.0),
        }
    }

    /// `‖T(u) − u‖`.
    pub fn fixed_point_residual(&self, kind: SolverKind, steps: &StepConfig, u: &Iterate) -> Result<f64> {
        Ok(self.apply_map(kind, steps, u)?.dist(u))
    }

    pub fn kkt(&self, u: &Iterate) -> Result<KktResidual> {
        kkt_residual(self.game, &u.x, &u.lam, self.graph)
    }

    /// Runs `kind` from `u0` until the stop rule fires.
    pub fn solve(&self, kind: SolverKind, steps: &StepConfig, opts: &SolveOptions<'_>, u0: Iterate) -> Result<Solution> {
        self.solve_observed(kind, steps, opts, u0, &mut |_, _| {})
    }

    /// As [`Problem::solve`], calling `observer(k, &u^k)` for `k = 0, 1, …`.
    pub fn solve_observed(
        &self,
        kind: SolverKind,
        steps: &StepConfig,
        opts: &SolveOptions<'_>,
        u0: Iterate,
        observer: &mut dyn FnMut(usize, &Iterate),
    ) -> Result<Solution> {
        u0.check_dims(self.game)?;
        check_dim("step config", self.game.num_agents(), steps.num_agents())?;
        if opts.enforce_assumptions {
            self.check_assumptions(kind, steps)?;
        }
        let mut monitor = Monitor::new(self, kind, opts)?;
        let mut u = u0;
        observer(0, &u);
        let mut k = 0usize;
        loop {
            if opts.stop.max_iters.is_some_and(|cap| k >= cap) {
                return Ok(monitor.finish(u, SolveStatus::MaxIters));
            }
            let t0 = opts.clock.seconds();
            let next = self.apply_map(kind, steps, &u)?;
            let elapsed = opts.clock.seconds() - t0;
            k += 1;
            if !next.is_finite() {
                return Err(Error::Divergence {
                    iteration: k,
                    last_finite: Box::new(u),
                });
            }
            let done = monitor.record(k, &u, &next, elapsed, kind.grad_evals_per_iter())?;
            observer(k, &next);
            u = next;
            if let Some(status) = done {
                return Ok(monitor.finish(u, status));
            }
        }
    }
}

/// Per-iteration bookkeeping shared by the centralised and simulated runs.
pub(crate) struct Monitor<'p, 'a> {
    problem: &'p Problem<'a>,
    stop: StopRule,
    reference: Option<(&'p [f64], f64)>,
    trace: RunTrace,
    cpu: f64,
    rounds: u64,
    grads: u64,
    rounds_per_iter: u64,
}

impl<'p, 'a> Monitor<'p, 'a> {
    pub(crate) fn new(problem: &'p Problem<'a>, kind: SolverKind, opts: &SolveOptions<'p>) -> Result<Self> {
        let reference = match opts.reference {
            Some(r) => {
                check_dim("reference", problem.game.primal_dim(), r.len())?;
                Some((r, linalg::norm(r)))
            }
            None => None,
        };
        Ok(Monitor {
            problem,
            stop: opts.stop,
            reference,
            trace: RunTrace::default(),
            cpu: 0.0,
            rounds: 0,
            grads: 0,
            rounds_per_iter: kind.rounds_per_iter(),
        })
    }

    /// Records iteration `k` and reports whether the stop rule fired.
    pub(crate) fn record(
        &mut self,
        k: usize,
        prev: &Iterate,
        next: &Iterate,
        cpu: f64,
        grad_evals: u64,
    ) -> Result<Option<SolveStatus>> {
        let fp_res = next.dist(prev) / prev.norm().max(1.0);
        let kkt = self.problem.kkt(next)?;
        let rel_dist = self.reference.map(|(r, rn)| {
            let d = linalg::dist(&next.x, r);
            if rn > 0.0 {
                d / rn
            } else {
                d
            }
        });
        self.cpu += cpu;
        self.rounds += self.rounds_per_iter;
        self.grads += grad_evals;
        self.trace.records.push(TraceRecord {
            iter: k,
            fp_res,
            kkt,
            rel_dist,
            cpu_s: self.cpu,
            comm_rounds: self.rounds,
            grad_evals: self.grads,
        });
        if !self.stop.has_tolerance() {
            return Ok(None);
        }
        let fp_ok = self.stop.fp_tol.is_none_or(|t| fp_res <= t);
        let kkt_ok = self.stop.kkt_tol.is_none_or(|t| kkt.max() <= t);
        Ok((fp_ok && kkt_ok).then(|| {
            if self.stop.kkt_tol.is_some() {
                SolveStatus::ConvergedKkt
            } else {
                SolveStatus::ConvergedFp
            }
        }))
    }

    pub(crate) fn finish(self, u: Iterate, status: SolveStatus) -> Solution {
        Solution {
            u,
            trace: self.trace,
            status,
        }
    }
}
