//! The `generate`, `solve`, `compare` and `check` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use gnesplit_core::cournot::{CournotInstance, CournotParams};
use gnesplit_core::distsim::run_distributed;
use gnesplit_core::model::{sampling, slater_probe};
use gnesplit_core::solvers::{fbhf_step_bound, RunTrace};
use gnesplit_core::splitting::build_phi_fb;
use gnesplit_core::{Error, Iterate, KktResidual, Problem, SolveOptions, SolveStatus, SolverKind, StepConfig, StopRule};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ReferencePolicy};
use crate::document::{InstanceDocument, LoadedInstance};
use crate::output::{messages_csv, trace_csv, write_atomic, ProcessCpuClock};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_PREREQUISITE: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;

/// Reference solves run FBF to this relative fixed-point tolerance.
pub const REFERENCE_FP_TOL: f64 = 1e-10;
const REFERENCE_MAX_ITERS: usize = 1_000_000;

/// Exit code for an error: solver prerequisites 2, divergence 3, anything
/// else 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<Error>());
    match core {
        Some(Error::Prerequisite { .. } | Error::StepRejected { .. } | Error::NoConvergence { .. }) => EXIT_PREREQUISITE,
        Some(Error::Divergence { .. }) => EXIT_DIVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

/// Writes a generated Cournot instance. A path without a `.json` extension
/// is treated as a directory.
pub fn generate(params: &CournotParams, out: &Path) -> anyhow::Result<PathBuf> {
    let inst = CournotInstance::generate(params)?;
    let doc = InstanceDocument::cournot(&inst, Some(params));
    let path = if out.extension().is_some_and(|e| e == "json") {
        out.to_path_buf()
    } else {
        out.join(format!("instance_seed{}.json", params.seed))
    };
    write_atomic(&path, doc.to_json().as_bytes())?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepsSummary {
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
}

impl From<&StepConfig> for StepsSummary {
    fn from(s: &StepConfig) -> Self {
        StepsSummary {
            rho: s.rho.clone(),
            sigma: s.sigma.clone(),
            tau: s.tau.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktSummary {
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub complementarity: f64,
    pub dual_consensus: f64,
}

impl From<&KktResidual> for KktSummary {
    fn from(k: &KktResidual) -> Self {
        KktSummary {
            stationarity: k.stationarity,
            primal_feasibility: k.primal_feasibility,
            complementarity: k.complementarity,
            dual_consensus: k.dual_consensus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: String,
    pub seed: Option<u64>,
    pub instance_hash: String,
    pub status: Option<String>,
    pub error: Option<String>,
    pub exit_code: u8,
    pub iterations: usize,
    pub final_fp_res: Option<f64>,
    pub final_kkt: Option<KktSummary>,
    pub final_rel_dist: Option<f64>,
    pub cpu_s: f64,
    pub wall_s: f64,
    pub steps: Option<StepsSummary>,
    pub trace_file: Option<String>,
    pub messages_file: Option<String>,
    pub messages_total: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub seed: Option<u64>,
    pub instance_hash: String,
    pub file: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub references: Vec<ReferenceSummary>,
    pub runs: Vec<RunSummary>,
}

impl ExperimentSummary {
    /// Worst exit code over all runs.
    pub fn exit_code(&self) -> u8 {
        self.runs.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_OK)
    }
}

/// Cached reference solution `x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub instance_hash: String,
    pub solver: String,
    pub fp_tol: f64,
    pub iterations: usize,
    pub status: String,
    pub x: Vec<f64>,
}

pub fn reference_path(out_dir: &Path, hash: &str) -> PathBuf {
    out_dir.join(format!("reference_{hash}.json"))
}

/// Computes (or reuses the cached) FBF reference solution.
pub fn compute_reference(loaded: &LoadedInstance, out_dir: &Path) -> anyhow::Result<(Vec<f64>, PathBuf)> {
    let path = reference_path(out_dir, &loaded.hash);
    if let Ok(r) = load_reference(&path, &loaded.hash) {
        return Ok((r.x, path));
    }
    let graph = loaded.graph.as_ref().map_err(Clone::clone)?;
    let p = Problem::new(&loaded.game, graph)?;
    let steps = p.select_steps(SolverKind::Fbf)?;
    let stop = StopRule::new(Some(REFERENCE_FP_TOL), None, Some(REFERENCE_MAX_ITERS))?;
    let sol = p.solve(SolverKind::Fbf, &steps, &SolveOptions::new(stop), Iterate::default_start(&loaded.game))?;
    let file = ReferenceFile {
        instance_hash: loaded.hash.clone(),
        solver: "fbf".into(),
        fp_tol: REFERENCE_FP_TOL,
        iterations: sol.trace.len(),
        status: sol.status.name().into(),
        x: sol.u.x,
    };
    write_atomic(&path, serde_json::to_string_pretty(&file)?.as_bytes())?;
    Ok((file.x, path))
}

pub fn load_reference(path: &Path, hash: &str) -> anyhow::Result<ReferenceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("no cached reference at {}", path.display()))?;
    let r: ReferenceFile = serde_json::from_str(&text).with_context(|| format!("in {}", path.display()))?;
    if r.instance_hash != hash {
        bail!("reference {} belongs to instance {}, not {hash}", path.display(), r.instance_hash);
    }
    Ok(r)
}

/// The instances an experiment runs on, as `(seed, loaded)`.
fn instances(cfg: &ExperimentConfig) -> anyhow::Result<Vec<(Option<u64>, LoadedInstance)>> {
    match &cfg.instance_file {
        Some(path) => Ok(vec![(None, InstanceDocument::load(path)?.build()?)]),
        None => cfg
            .seeds
            .iter()
            .map(|&seed| {
                let params = cfg.cournot.params(seed);
                let inst = CournotInstance::generate(&params)?;
                Ok((Some(seed), InstanceDocument::cournot(&inst, Some(&params)).build()?))
            })
            .collect(),
    }
}

fn label(seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("seed{s}"),
        None => "instance".into(),
    }
}

struct RunResult {
    steps: StepConfig,
    u: Iterate,
    trace: RunTrace,
    status: SolveStatus,
    messages: Option<Vec<gnesplit_core::distsim::MessageStats>>,
}

fn run_one(
    loaded: &LoadedInstance,
    kind: SolverKind,
    stop: StopRule,
    reference: Option<&[f64]>,
    distributed: bool,
) -> anyhow::Result<RunResult> {
    let graph = loaded.graph.as_ref().map_err(Clone::clone)?;
    let p = Problem::new(&loaded.game, graph)?;
    let steps = p.select_steps(kind)?;
    let clock = ProcessCpuClock;
    let mut opts = SolveOptions::new(stop);
    opts.reference = reference;
    opts.clock = &clock;
    let u0 = Iterate::default_start(&loaded.game);
    if distributed {
        let run = run_distributed(&p, kind, &steps, &opts, u0)?;
        Ok(RunResult {
            steps,
            u: run.u,
            trace: run.trace,
            status: run.status,
            messages: Some(run.messages),
        })
    } else {
        let sol = p.solve(kind, &steps, &opts, u0)?;
        Ok(RunResult {
            steps,
            u: sol.u,
            trace: sol.trace,
            status: sol.status,
            messages: None,
        })
    }
}

/// Runs every (instance, solver) pair, writes the trace CSVs and
/// `summary.json` into `cfg.out_dir`, and returns the summary. Failures of
/// single runs are recorded, not raised.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentSummary> {
    cfg.validate()?;
    let kinds = cfg.solver_kinds()?;
    let stop = cfg.stop.rule()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut summary = ExperimentSummary {
        config: cfg.clone(),
        references: Vec::new(),
        runs: Vec::new(),
    };
    for (seed, loaded) in instances(cfg)? {
        let reference = match cfg.reference {
            ReferencePolicy::None => Ok(None),
            ReferencePolicy::Compute => compute_reference(&loaded, out).map(Some),
            ReferencePolicy::Load => {
                let path = reference_path(out, &loaded.hash);
                load_reference(&path, &loaded.hash).map(|r| Some((r.x, path)))
            }
        };
        let reference = match reference {
            Ok(r) => {
                summary.references.push(ReferenceSummary {
                    seed,
                    instance_hash: loaded.hash.clone(),
                    file: r.as_ref().map(|(_, p)| p.display().to_string()),
                    error: None,
                });
                r.map(|(x, _)| x)
            }
            Err(e) => {
                summary.references.push(ReferenceSummary {
                    seed,
                    instance_hash: loaded.hash.clone(),
                    file: None,
                    error: Some(format!("{e:#}")),
                });
                if cfg.reference == ReferencePolicy::Load {
                    return Err(e);
                }
                None
            }
        };
        for &kind in &kinds {
            let wall = Instant::now();
            let result = run_one(&loaded, kind, stop, reference.as_deref(), cfg.distributed);
            let wall_s = wall.elapsed().as_secs_f64();
            let mut run = RunSummary {
                solver: kind.name().into(),
                seed,
                instance_hash: loaded.hash.clone(),
                status: None,
                error: None,
                exit_code: EXIT_OK,
                iterations: 0,
                final_fp_res: None,
                final_kkt: None,
                final_rel_dist: None,
                cpu_s: 0.0,
                wall_s,
                steps: None,
                trace_file: None,
                messages_file: None,
                messages_total: None,
            };
            match result {
                Ok(r) => {
                    let trace_path = out.join(format!("trace_{}_{}.csv", kind.name(), label(seed)));
                    write_atomic(&trace_path, &trace_csv(&r.trace)?)?;
                    if let Some(msgs) = &r.messages {
                        let p = out.join(format!("messages_{}_{}.csv", kind.name(), label(seed)));
                        write_atomic(&p, &messages_csv(msgs)?)?;
                        run.messages_file = Some(p.display().to_string());
                        run.messages_total = Some(msgs.iter().map(|m| m.messages).sum());
                    }
                    let last = r.trace.last();
                    run.status = Some(r.status.name().into());
                    run.iterations = r.trace.len();
                    run.final_fp_res = last.map(|l| l.fp_res);
                    run.final_kkt = last.map(|l| (&l.kkt).into());
                    run.final_rel_dist = last.and_then(|l| l.rel_dist);
                    run.cpu_s = last.map_or(0.0, |l| l.cpu_s);
                    run.steps = Some((&r.steps).into());
                    run.trace_file = Some(trace_path.display().to_string());
                    debug_assert!(r.u.is_finite());
                }
                Err(e) => {
                    run.exit_code = exit_code(&e);
                    run.error = Some(format!("{e:#}"));
                }
            }
            summary.runs.push(run);
        }
    }
    write_atomic(&out.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

/// Fixed-width table of final metrics plus per-solver averages.
pub fn comparison_table(summary: &ExperimentSummary) -> String {
    let mut s = String::new();
    let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
    writeln!(
        s,
        "{:<6} {:>8} {:<14} {:>8} {:>10} {:>10} {:>10} {:>12}",
        "solver", "seed", "status", "iters", "rel_dist", "kkt_max", "cpu_s", "cpu/iter_us"
    )
    .unwrap();
    for r in &summary.runs {
        let kkt = r.final_kkt.as_ref().map(|k| {
            k.stationarity
                .max(k.primal_feasibility)
                .max(k.complementarity)
                .max(k.dual_consensus)
        });
        let per_iter = (r.iterations > 0).then(|| 1e6 * r.cpu_s / r.iterations as f64);
        writeln!(
            s,
            "{:<6} {:>8} {:<14} {:>8} {:>10} {:>10} {:>10.3} {:>12}",
            r.solver,
            r.seed.map_or("-".into(), |v| v.to_string()),
            r.status.as_deref().unwrap_or("error"),
            r.iterations,
            fmt_opt(r.final_rel_dist),
            fmt_opt(kkt),
            r.cpu_s,
            per_iter.map_or("-".into(), |v| format!("{v:.2}")),
        )
        .unwrap();
    }
    writeln!(s).unwrap();
    let mut per_iter_cost = Vec::new();
    for kind in SolverKind::ALL {
        let ok: Vec<&RunSummary> = summary
            .runs
            .iter()
            .filter(|r| r.solver == kind.name() && r.error.is_none() && r.iterations > 0)
            .collect();
        if ok.is_empty() {
            continue;
        }
        let iters: f64 = ok.iter().map(|r| r.iterations as f64).sum::<f64>() / ok.len() as f64;
        let cpu: f64 = ok.iter().map(|r| r.cpu_s).sum::<f64>() / ok.len() as f64;
        let per: f64 = ok.iter().map(|r| r.cpu_s / r.iterations as f64).sum::<f64>() / ok.len() as f64;
        per_iter_cost.push((kind, per));
        writeln!(s, "mean {:<5} iterations {:>10.1}  cpu_s {:>8.3}  cpu/iter_us {:>8.2}", kind.name(), iters, cpu, 1e6 * per).unwrap();
    }
    let find = |k: SolverKind| per_iter_cost.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v);
    if let (Some(fbf), Some(fbhf)) = (find(SolverKind::Fbf), find(SolverKind::Fbhf)) {
        if fbhf > 0.0 {
            writeln!(s, "per-iteration cpu ratio fbf/fbhf: {:.3}", fbf / fbhf).unwrap();
        }
    }
    s
}

pub fn comparison_csv(summary: &ExperimentSummary) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["solver", "seed", "status", "iterations", "final_rel_dist", "final_fp_res", "cpu_s", "error"])?;
    for r in &summary.runs {
        w.write_record([
            r.solver.clone(),
            r.seed.map_or(String::new(), |v| v.to_string()),
            r.status.clone().unwrap_or_default(),
            r.iterations.to_string(),
            r.final_rel_dist.map_or(String::new(), |v| v.to_string()),
            r.final_fp_res.map_or(String::new(), |v| v.to_string()),
            r.cpu_s.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphFinding {
    pub connected: bool,
    pub components: Option<Vec<Vec<usize>>>,
    pub max_degree: Option<f64>,
    pub kappa: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingFinding {
    pub pairs: usize,
    pub monotone: bool,
    pub min_monotone_ratio: f64,
    pub strongly_monotone: bool,
    pub declared_eta: Option<f64>,
    pub max_lipschitz_ratio: f64,
    pub declared_lipschitz: Option<f64>,
    pub lipschitz_consistent: bool,
    pub gradient_fd_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsFinding {
    pub f_lipschitz: f64,
    pub eta: f64,
    pub kappa: f64,
    pub max_degree: f64,
    pub a_norm: f64,
    pub l_a: f64,
    pub l_b: f64,
    pub l_d: f64,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverFinding {
    pub solver: String,
    pub admissible: bool,
    pub step_bound: Option<f64>,
    pub steps: Option<StepsSummary>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub instance_hash: String,
    pub agents: usize,
    pub primal_dim: usize,
    pub constraints: usize,
    pub graph: GraphFinding,
    pub slater: Option<bool>,
    pub sampling: SamplingFinding,
    pub constants: Option<ConstantsFinding>,
    pub solvers: Vec<SolverFinding>,
}

const CHECK_PAIRS: usize = 1000;
const CHECK_SEED: u64 = 0x0c4e_c4;

pub fn check(loaded: &LoadedInstance) -> anyhow::Result<CheckReport> {
    let game = &loaded.game;
    let graph = match &loaded.graph {
        Ok(g) => GraphFinding {
            connected: true,
            components: None,
            max_degree: Some(g.max_degree()),
            kappa: Some(g.op_norm()),
            error: None,
        },
        Err(Error::Disconnected { components }) => GraphFinding {
            connected: false,
            components: Some(components.clone()),
            max_degree: None,
            kappa: None,
            error: Some("communication graph is not connected".into()),
        },
        Err(e) => GraphFinding {
            connected: false,
            components: None,
            max_degree: None,
            kappa: None,
            error: Some(e.to_string()),
        },
    };
    let stats = sampling::pair_stats(game, CHECK_PAIRS, CHECK_SEED)?;
    let declared_eta = game.constants.eta;
    let declared_lipschitz = game.constants.lipschitz;
    let sampling = SamplingFinding {
        pairs: CHECK_PAIRS,
        monotone: stats.min_monotone_ratio >= -1e-9,
        min_monotone_ratio: stats.min_monotone_ratio,
        strongly_monotone: declared_eta.is_some_and(|e| e > 0.0 && stats.min_monotone_ratio >= e * (1.0 - 1e-9)),
        declared_eta,
        max_lipschitz_ratio: stats.max_lipschitz_ratio,
        declared_lipschitz,
        lipschitz_consistent: declared_lipschitz.is_none_or(|l| stats.max_lipschitz_ratio <= l * (1.0 + 1e-9)),
        gradient_fd_error: sampling::gradient_fd_error(game, 100, CHECK_SEED)?,
    };

    let mut constants = None;
    let mut solvers = Vec::new();
    match &loaded.graph {
        Ok(g) => {
            let p = Problem::new(game, g)?;
            let c = p.constants;
            constants = Some(ConstantsFinding {
                f_lipschitz: c.f_lipschitz,
                eta: c.eta,
                kappa: c.kappa,
                max_degree: c.delta_deg,
                a_norm: c.a_norm,
                l_a: c.l_a,
                l_b: c.l_b,
                l_d: c.l_d,
                theta: c.theta,
            });
            for kind in SolverKind::ALL {
                let bound = match kind {
                    SolverKind::Fbf => (c.l_d > 0.0).then(|| 1.0 / c.l_d),
                    SolverKind::Fbhf => fbhf_step_bound(&c),
                    SolverKind::Fb => None,
                };
                let verdict = p.select_steps(kind).and_then(|s| {
                    p.check_assumptions(kind, &s)?;
                    if kind == SolverKind::Fb {
                        build_phi_fb(game, g, &s)?;
                    }
                    Ok(s)
                });
                solvers.push(match verdict {
                    Ok(s) => SolverFinding {
                        solver: kind.name().into(),
                        admissible: true,
                        step_bound: bound,
                        steps: Some((&s).into()),
                        reason: None,
                    },
                    Err(e) => SolverFinding {
                        solver: kind.name().into(),
                        admissible: false,
                        step_bound: bound,
                        steps: None,
                        reason: Some(e.to_string()),
                    },
                });
            }
        }
        Err(e) => {
            for kind in SolverKind::ALL {
                solvers.push(SolverFinding {
                    solver: kind.name().into(),
                    admissible: false,
                    step_bound: None,
                    steps: None,
                    reason: Some(e.to_string()),
                });
            }
        }
    }
    Ok(CheckReport {
        instance_hash: loaded.hash.clone(),
        agents: game.num_agents(),
        primal_dim: game.primal_dim(),
        constraints: game.num_constraints(),
        graph,
        slater: slater_probe(game),
        sampling,
        constants,
        solvers,
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn render_check(r: &CheckReport) -> String {
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "instance {}: {} agents, {} decision variables, {} shared constraints", r.instance_hash, r.agents, r.primal_dim, r.constraints).unwrap();
    if r.graph.connected {
        writeln!(w, "[pass] communication graph connected (max degree {}, |L| = {:.6})", r.graph.max_degree.unwrap_or(0.0), r.graph.kappa.unwrap_or(0.0)).unwrap();
    } else {
        writeln!(w, "[FAIL] {}; components {:?}", r.graph.error.as_deref().unwrap_or("graph invalid"), r.graph.components.as_deref().unwrap_or(&[])).unwrap();
    }
    match r.slater {
        Some(true) => writeln!(w, "[pass] strictly feasible point found").unwrap(),
        Some(false) => writeln!(w, "[warn] no strictly feasible point found by the probe").unwrap(),
        None => writeln!(w, "[info] strict feasibility not probed (unbounded local sets)").unwrap(),
    }
    let sm = &r.sampling;
    writeln!(w, "[{}] monotone on {} sampled pairs (min ratio {:.6e})", if sm.monotone { "pass" } else { "FAIL" }, sm.pairs, sm.min_monotone_ratio).unwrap();
    writeln!(w, "[{}] strongly monotone: {} (eta = {})", if sm.strongly_monotone { "pass" } else { "info" }, yes_no(sm.strongly_monotone), sm.declared_eta.map_or("unknown".into(), |e| format!("{e:.6e}"))).unwrap();
    writeln!(w, "[{}] Lipschitz: sampled ratio {:.6e} vs constant {}", if sm.lipschitz_consistent { "pass" } else { "FAIL" }, sm.max_lipschitz_ratio, sm.declared_lipschitz.map_or("unknown".into(), |l| format!("{l:.6e}"))).unwrap();
    writeln!(w, "[{}] gradient vs finite differences: relative error {:.3e}", if sm.gradient_fd_error <= 1e-6 { "pass" } else { "FAIL" }, sm.gradient_fd_error).unwrap();
    if let Some(c) = &r.constants {
        writeln!(w, "constants: 1/beta {:.6e}  eta {:.6e}  kappa {:.6e}  Delta {}  |A| {:.6e}", c.f_lipschitz, c.eta, c.kappa, c.max_degree, c.a_norm).unwrap();
        writeln!(w, "           L_A {:.6e}  L_B {:.6e}  L_D {:.6e}  theta {}", c.l_a, c.l_b, c.l_d, c.theta.map_or("undefined".into(), |t| format!("{t:.6e}"))).unwrap();
    }
    for sf in &r.solvers {
        match (&sf.steps, &sf.reason) {
            (Some(st), _) => {
                let max = st.rho.iter().chain(&st.sigma).chain(&st.tau).fold(0.0f64, |m, v| m.max(*v));
                writeln!(w, "[pass] {} admissible; largest step {:.6e}{}", sf.solver, max, sf.step_bound.map_or(String::new(), |b| format!(" (bound {b:.6e})"))).unwrap();
            }
            (None, reason) => {
                writeln!(w, "[info] {} inadmissible: {}", sf.solver, reason.as_deref().unwrap_or("unknown")).unwrap();
            }
        }
    }
    s
}
