//! Round-based message-passing replay of the three methods.
//!
//! Each agent keeps only its own blocks. Before every phase all agents
//! publish the payloads the schedule names; afterwards each agent updates
//! from its own state and its inbox alone. Reads of anything that was not
//! delivered are caught and reported as [`Error::Locality`].
//!
//! Interference payloads (`x_j` for `j ∈ 𝒩_i^J`) travel on their own logical
//! channel, straight from owner to reader, independent of the dual graph.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};

use crate::error::{check_dim, Error, Result};
use crate::graph::CommGraph;
use crate::model::GameInstance;
use crate::solvers::{agent_step, Monitor, Problem, RunTrace, SolveOptions, SolveStatus, SolverKind};
use crate::splitting::{agent_blocks, AgentBlocks, Iterate, Neighborhood, StepConfig};

/// Named per-agent quantity carried by a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    X,
    Z,
    Lam,
    XTilde,
    ZTilde,
    LamTilde,
    /// `2x⁺ − x`
    XReflect,
    /// `2z⁺ − z`
    ZReflect,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::X => "x",
            Field::Z => "z",
            Field::Lam => "lambda",
            Field::XTilde => "x_tilde",
            Field::ZTilde => "z_tilde",
            Field::LamTilde => "lambda_tilde",
            Field::XReflect => "x_reflect",
            Field::ZReflect => "z_reflect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// To every agent whose cost depends on the sender's decision.
    Interference,
    /// To the sender's neighbours in the dual graph.
    Consensus,
}

/// Which field supplies each block of the neighbourhood an update reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewSpec {
    pub x: Field,
    pub z: Option<Field>,
    pub lam: Option<Field>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSpec {
    pub sends: Vec<(Field, Channel)>,
    pub view: ViewSpec,
}

/// Ordered communication phases of one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundSchedule {
    pub phases: Vec<PhaseSpec>,
}

impl RoundSchedule {
    pub fn for_kind(kind: SolverKind) -> Self {
        use Channel::*;
        use Field::*;
        let plain = ViewSpec {
            x: X,
            z: Some(Z),
            lam: Some(Lam),
        };
        let tilde = ViewSpec {
            x: XTilde,
            z: Some(ZTilde),
            lam: Some(LamTilde),
        };
        let phases = match kind {
            SolverKind::Fbf => vec![
                PhaseSpec {
                    sends: vec![(X, Interference), (Z, Consensus), (Lam, Consensus)],
                    view: plain,
                },
                PhaseSpec {
                    sends: vec![(XTilde, Interference), (ZTilde, Consensus), (LamTilde, Consensus)],
                    view: tilde,
                },
            ],
            SolverKind::Fbhf => vec![
                PhaseSpec {
                    sends: vec![(X, Interference), (Z, Consensus), (Lam, Consensus)],
                    view: plain,
                },
                PhaseSpec {
                    sends: vec![(ZTilde, Consensus), (LamTilde, Consensus)],
                    view: tilde,
                },
            ],
            SolverKind::Fb => vec![
                PhaseSpec {
                    sends: vec![(X, Interference), (Lam, Consensus)],
                    view: plain,
                },
                PhaseSpec {
                    sends: vec![(ZReflect, Consensus)],
                    view: ViewSpec {
                        x: XReflect,
                        z: Some(ZReflect),
                        lam: None,
                    },
                },
            ],
        };
        RoundSchedule { phases }
    }
}

/// Everything agent `id` holds between phases.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub lam: Vec<f64>,
    /// Half-iterate (FBF, FBHF) or tentative `(x⁺, z⁺)` (FB).
    pub tilde: AgentBlocks,
    /// Operator values kept from phase 1 for the phase-2 correction.
    pub kept: AgentBlocks,
}

impl AgentState {
    fn new(game: &GameInstance, u: &Iterate, id: usize) -> Self {
        let own = agent_blocks(game, u, id);
        let zeros = AgentBlocks::zeros(own.x.len(), own.z.len());
        AgentState {
            id,
            x: own.x,
            z: own.z,
            lam: own.lam,
            tilde: zeros.clone(),
            kept: zeros,
        }
    }

    /// The value this agent would send for `field`.
    pub fn payload(&self, field: Field) -> Vec<f64> {
        match field {
            Field::X => self.x.clone(),
            Field::Z => self.z.clone(),
            Field::Lam => self.lam.clone(),
            Field::XTilde => self.tilde.x.clone(),
            Field::ZTilde => self.tilde.z.clone(),
            Field::LamTilde => self.tilde.lam.clone(),
            Field::XReflect => agent_step::reflect(&self.tilde.x, &self.x),
            Field::ZReflect => agent_step::reflect(&self.tilde.z, &self.z),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.z).chain(&self.lam).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Message {
    iter: usize,
    phase: usize,
    values: Vec<f64>,
}

type Inbox = BTreeMap<(Field, usize), Message>;

/// One logged read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Access {
    pub field: Field,
    pub owner: usize,
}

/// An agent's window on the network during one phase. Implements
/// [`Neighborhood`] over its own blocks and the delivered payloads only.
pub struct AgentContext<'a> {
    pub game: &'a GameInstance,
    pub graph: &'a CommGraph,
    pub steps: &'a StepConfig,
    agent: usize,
    iter: usize,
    phase: usize,
    view: ViewSpec,
    inbox: &'a Inbox,
    own_z: Vec<f64>,
    own_lam: Vec<f64>,
    x_full: Vec<f64>,
    poison: Vec<f64>,
    log: RefCell<Vec<Access>>,
    violation: Cell<Option<(usize, Field)>>,
}

impl<'a> AgentContext<'a> {
    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    fn delivered(&self, field: Field, owner: usize) -> Option<&'a [f64]> {
        match self.inbox.get(&(field, owner)) {
            Some(msg) if msg.iter == self.iter && msg.phase == self.phase => Some(&msg.values),
            _ => None,
        }
    }

    fn lookup<'s>(&'s self, field: Option<Field>, j: usize, own: &'s [f64], fallback: Field) -> &'s [f64] {
        let tag = field.unwrap_or(fallback);
        self.log.borrow_mut().push(Access { field: tag, owner: j });
        if j == self.agent && field.is_some() {
            return own;
        }
        match field.and_then(|f| self.delivered(f, j)) {
            Some(v) => v,
            None => {
                if self.violation.get().is_none() {
                    self.violation.set(Some((j, tag)));
                }
                &self.poison
            }
        }
    }

    /// Every read made through this context so far.
    pub fn accesses(&self) -> Vec<Access> {
        self.log.borrow().clone()
    }
}

impl Neighborhood for AgentContext<'_> {
    fn x_full(&self) -> &[f64] {
        &self.x_full
    }

    fn z(&self, j: usize) -> &[f64] {
        self.lookup(self.view.z, j, &self.own_z, Field::Z)
    }

    fn lam(&self, j: usize) -> &[f64] {
        self.lookup(self.view.lam, j, &self.own_lam, Field::Lam)
    }
}

/// Per-agent behaviour of a method: its schedule and the update run after
/// each phase's delivery.
pub trait UpdateRule {
    fn schedule(&self) -> RoundSchedule;
    fn update(&self, phase: usize, ctx: &AgentContext<'_>, state: &mut AgentState);
    fn grad_evals_per_iter(&self) -> u64;
}

/// The per-agent halves of FB, FBF or FBHF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardRule(pub SolverKind);

impl UpdateRule for StandardRule {
    fn schedule(&self) -> RoundSchedule {
        RoundSchedule::for_kind(self.0)
    }

    fn grad_evals_per_iter(&self) -> u64 {
        self.0.grad_evals_per_iter()
    }

    fn update(&self, phase: usize, ctx: &AgentContext<'_>, state: &mut AgentState) {
        let (game, graph, steps, i) = (ctx.game, ctx.graph, ctx.steps, state.id);
        match (self.0, phase) {
            (SolverKind::Fbf, 0) => {
                let (t, d) = agent_step::fbf_first(game, graph, steps, i, ctx);
                state.tilde = t;
                state.kept = d;
            }
            (SolverKind::Fbf, _) => {
                let v = agent_step::fbf_second(game, graph, steps, i, ctx, &state.kept);
                (state.x, state.z, state.lam) = (v.x, v.z, v.lam);
            }
            (SolverKind::Fbhf, 0) => {
                let (t, b) = agent_step::fbhf_first(game, graph, steps, i, ctx);
                state.tilde = t;
                state.kept = b;
            }
            (SolverKind::Fbhf, _) => {
                let v = agent_step::fbhf_second(game, graph, steps, i, ctx, &state.kept);
                (state.x, state.z, state.lam) = (v.x, v.z, v.lam);
            }
            (SolverKind::Fb, 0) => {
                let (x, z, a_lam) = agent_step::fb_first(game, graph, steps, i, ctx);
                state.tilde.x = x;
                state.tilde.z = z;
                state.kept.lam = a_lam;
            }
            (SolverKind::Fb, _) => {
                let lam = agent_step::fb_second(game, graph, steps, i, ctx, &state.lam, &state.kept.lam);
                state.x = core::mem::take(&mut state.tilde.x);
                state.z = core::mem::take(&mut state.tilde.z);
                state.lam = lam;
            }
        }
    }
}

/// Traffic of one phase of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageStats {
    pub iter: usize,
    /// 1-based phase number.
    pub phase: usize,
    pub messages: u64,
    pub scalars_sent: u64,
}

#[derive(Debug, Clone)]
pub struct DistributedRun {
    pub u: Iterate,
    pub trace: RunTrace,
    pub status: SolveStatus,
    pub messages: Vec<MessageStats>,
}

/// Reads agent `agent` performed in one phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEntry {
    pub agent: usize,
    pub phase: usize,
    pub field: &'static str,
    pub owners: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

/// The barrier-synchronous network: agent states plus delivery wiring.
struct Network<'p> {
    game: &'p GameInstance,
    graph: &'p CommGraph,
    states: Vec<AgentState>,
    inboxes: Vec<Inbox>,
    /// `x_recipients[s]`: agents whose gradient reads `x_s`.
    x_recipients: Vec<Vec<usize>>,
}

impl<'p> Network<'p> {
    fn new(game: &'p GameInstance, graph: &'p CommGraph, u: &Iterate) -> Self {
        let n = game.num_agents();
        let mut x_recipients = vec![Vec::new(); n];
        for (i, a) in game.agents().iter().enumerate() {
            for &s in &a.interference {
                x_recipients[s].push(i);
            }
        }
        Network {
            game,
            graph,
            states: (0..n).map(|i| AgentState::new(game, u, i)).collect(),
            inboxes: vec![Inbox::new(); n],
            x_recipients,
        }
    }

    fn deliver(&mut self, iter: usize, phase: usize, spec: &PhaseSpec) -> MessageStats {
        let mut stats = MessageStats {
            iter,
            phase: phase + 1,
            messages: 0,
            scalars_sent: 0,
        };
        for inbox in &mut self.inboxes {
            inbox.clear();
        }
        for s in 0..self.states.len() {
            for &(field, channel) in &spec.sends {
                let values = self.states[s].payload(field);
                let recipients: Vec<usize> = match channel {
                    Channel::Interference => self.x_recipients[s].clone(),
                    Channel::Consensus => self.graph.neighbors(s).iter().map(|&(j, _)| j).collect(),
                };
                for r in recipients {
                    stats.messages += 1;
                    stats.scalars_sent += values.len() as u64;
                    self.inboxes[r].insert(
                        (field, s),
                        Message {
                            iter,
                            phase,
                            values: values.clone(),
                        },
                    );
                }
            }
        }
        stats
    }

    fn context<'a>(&'a self, steps: &'a StepConfig, i: usize, iter: usize, phase: usize, view: ViewSpec) -> AgentContext<'a> {
        let game = self.game;
        let m = game.num_constraints();
        let state = &self.states[i];
        let mut x_full = vec![f64::NAN; game.primal_dim()];
        x_full[game.block_range(i)].copy_from_slice(&state.payload(view.x));
        for &j in &game.agent(i).interference {
            if let Some(msg) = self.inboxes[i].get(&(view.x, j)) {
                if msg.iter == iter && msg.phase == phase {
                    x_full[game.block_range(j)].copy_from_slice(&msg.values);
                }
            }
        }
        AgentContext {
            game,
            graph: self.graph,
            steps,
            agent: i,
            iter,
            phase,
            view,
            inbox: &self.inboxes[i],
            own_z: view.z.map(|f| state.payload(f)).unwrap_or_default(),
            own_lam: view.lam.map(|f| state.payload(f)).unwrap_or_default(),
            x_full,
            poison: vec![f64::NAN; m],
            log: RefCell::new(Vec::new()),
            violation: Cell::new(None),
        }
    }

    /// One full iteration; `order` fixes the agent execution order.
    fn iterate(
        &mut self,
        rule: &dyn UpdateRule,
        schedule: &RoundSchedule,
        steps: &StepConfig,
        iter: usize,
        order: &[usize],
        mut audit: Option<&mut AuditReport>,
    ) -> Result<Vec<MessageStats>> {
        let mut stats = Vec::with_capacity(schedule.phases.len());
        for (phase, spec) in schedule.phases.iter().enumerate() {
            stats.push(self.deliver(iter, phase, spec));
            let mut updated: Vec<Option<AgentState>> = vec![None; self.states.len()];
            for &i in order {
                let ctx = self.context(steps, i, iter, phase, spec.view);
                let mut next = self.states[i].clone();
                rule.update(phase, &ctx, &mut next);
                if let Some((owner, field)) = ctx.violation.get() {
                    return Err(Error::Locality {
                        agent: i,
                        owner,
                        field: field.name(),
                    });
                }
                if let Some(report) = audit.as_deref_mut() {
                    record_accesses(report, self.game, i, phase, spec.view, &ctx.accesses());
                }
                updated[i] = Some(next);
            }
            for (slot, next) in self.states.iter_mut().zip(updated) {
                *slot = next.expect("every agent runs once per phase");
            }
        }
        Ok(stats)
    }

    fn assemble(&self) -> Iterate {
        let game = self.game;
        let m = game.num_constraints();
        let mut u = Iterate::zeros(game);
        for (i, s) in self.states.iter().enumerate() {
            u.x[game.block_range(i)].copy_from_slice(&s.x);
            u.z[i * m..(i + 1) * m].copy_from_slice(&s.z);
            u.lam[i * m..(i + 1) * m].copy_from_slice(&s.lam);
        }
        u
    }
}

fn record_accesses(report: &mut AuditReport, game: &GameInstance, agent: usize, phase: usize, view: ViewSpec, log: &[Access]) {
    let mut x_owners = vec![agent];
    x_owners.extend(&game.agent(agent).interference);
    x_owners.sort_unstable();
    report.entries.push(AuditEntry {
        agent,
        phase: phase + 1,
        field: view.x.name(),
        owners: x_owners,
    });
    let mut by_field: BTreeMap<Field, Vec<usize>> = BTreeMap::new();
    for a in log {
        by_field.entry(a.field).or_default().push(a.owner);
    }
    for (field, mut owners) in by_field {
        owners.sort_unstable();
        owners.dedup();
        report.entries.push(AuditEntry {
            agent,
            phase: phase + 1,
            field: field.name(),
            owners,
        });
    }
}

/// Runs `kind` as message passing under the same checks and stop rule as
/// [`Problem::solve`].
pub fn run_distributed(
    problem: &Problem<'_>,
    kind: SolverKind,
    steps: &StepConfig,
    opts: &SolveOptions<'_>,
    u0: Iterate,
) -> Result<DistributedRun> {
    if opts.enforce_assumptions {
        problem.check_assumptions(kind, steps)?;
    }
    let order: Vec<usize> = (0..problem.game.num_agents()).collect();
    run_with_rule(problem, kind, &StandardRule(kind), steps, opts, u0, &order)
}

/// Runs an arbitrary rule with an explicit agent execution order.
/// `kind` only labels the trace bookkeeping.
pub fn run_with_rule(
    problem: &Problem<'_>,
    kind: SolverKind,
    rule: &dyn UpdateRule,
    steps: &StepConfig,
    opts: &SolveOptions<'_>,
    u0: Iterate,
    order: &[usize],
) -> Result<DistributedRun> {
    let game = problem.game;
    u0.check_dims(game)?;
    check_dim("step config", game.num_agents(), steps.num_agents())?;
    check_order(order, game.num_agents())?;
    let schedule = rule.schedule();
    let mut net = Network::new(game, problem.graph, &u0);
    let mut monitor = Monitor::new(problem, kind, opts)?;
    let mut messages = Vec::new();
    let mut u = u0;
    let mut k = 0usize;
    loop {
        if opts.stop.max_iters.is_some_and(|cap| k >= cap) {
            let sol = monitor.finish(u, SolveStatus::MaxIters);
            return Ok(DistributedRun {
                u: sol.u,
                trace: sol.trace,
                status: sol.status,
                messages,
            });
        }
        k += 1;
        let t0 = opts.clock.seconds();
        messages.extend(net.iterate(rule, &schedule, steps, k, order, None)?);
        let elapsed = opts.clock.seconds() - t0;
        let next = net.assemble();
        if !next.is_finite() {
            return Err(Error::Divergence {
                iteration: k,
                last_finite: Box::new(u),
            });
        }
        let done = monitor.record(k, &u, &next, elapsed, rule.grad_evals_per_iter())?;
        u = next;
        if let Some(status) = done {
            let sol = monitor.finish(u, status);
            return Ok(DistributedRun {
                u: sol.u,
                trace: sol.trace,
                status: sol.status,
                messages,
            });
        }
    }
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(Error::Config("execution order must be a permutation of the agents".into()));
        }
        seen[i] = true;
    }
    if order.len() != n {
        return Err(Error::Config("execution order must be a permutation of the agents".into()));
    }
    Ok(())
}

/// Locality audit for a built-in method.
pub fn locality_audit(problem: &Problem<'_>, kind: SolverKind) -> Result<AuditReport> {
    let steps = StepConfig::uniform(problem.game.num_agents(), 1e-3)?;
    audit_rule(problem, &StandardRule(kind), &steps)
}

/// Checks that `rule` reads only local state and delivered payloads.
///
/// Dual-graph reads are checked on every access during two iterations from
/// the default start. Decision reads are checked by poisoning, one at a time,
/// every primal block an agent is not entitled to and confirming its
/// gradient stays finite.
pub fn audit_rule(problem: &Problem<'_>, rule: &dyn UpdateRule, steps: &StepConfig) -> Result<AuditReport> {
    let game = problem.game;
    let n = game.num_agents();
    let base = game.default_primal_start();
    for i in 0..n {
        let a = game.agent(i);
        let mut out = vec![0.0; a.dim];
        for j in (0..n).filter(|&j| j != i && a.interference.binary_search(&j).is_err()) {
            let mut x = base.clone();
            x[game.block_range(j)].iter_mut().for_each(|v| *v = f64::NAN);
            (a.grad)(&x, &mut out);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::Locality {
                    agent: i,
                    owner: j,
                    field: "x",
                });
            }
        }
    }

    let schedule = rule.schedule();
    let order: Vec<usize> = (0..n).collect();
    let mut net = Network::new(game, problem.graph, &Iterate::default_start(game));
    let mut report = AuditReport::default();
    for k in 1..=2 {
        let mut pass = AuditReport::default();
        net.iterate(rule, &schedule, steps, k, &order, Some(&mut pass))?;
        if k == 1 {
            report = pass;
        }
    }
    Ok(report)
}
