//! The N-agent game: smooth cost gradients, local (non-smooth) costs, affine
//! coupling constraints, and the oracles every solver consumes.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Error, Result};
use crate::graph::CommGraph;
use crate::linalg::{self, Matrix};
use crate::rng::SeededStream;

/// `(x, out)`: writes `∇_{x_i} f_i(x)` into `out` given the full strategy `x`.
pub type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// `x ↦ f_i(x)`, used only for finite-difference checks.
pub type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `(v, ρ, out)`: writes `prox^ρ_g(v)` into `out`.
pub type ProxFn = Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;

/// The non-smooth part `g_i` of an agent's cost, represented by its prox.
#[derive(Clone)]
pub enum LocalCost {
    /// `g ≡ 0`; the prox is the identity.
    Zero,
    /// Indicator of the box `[lower, upper]`; the prox is a clamp.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Any other proper closed convex function, given by its prox.
    Custom(ProxFn),
}

impl fmt::Debug for LocalCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalCost::Zero => f.write_str("Zero"),
            LocalCost::Box { lower, upper } => f
                .debug_struct("Box")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            LocalCost::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl LocalCost {
    pub fn interval(dim: usize, lower: f64, upper: f64) -> Self {
        LocalCost::Box {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        }
    }

    pub fn prox_into(&self, v: &[f64], rho: f64, out: &mut [f64]) {
        match self {
            LocalCost::Zero => out.copy_from_slice(v),
            LocalCost::Box { lower, upper } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = v[k].max(lower[k]).min(upper[k]);
                }
            }
            LocalCost::Custom(prox) => prox(v, rho, out),
        }
    }

    /// Box midpoint, or `None` when the domain is not a known box.
    pub fn midpoint(&self) -> Option<Vec<f64>> {
        match self {
            LocalCost::Box { lower, upper } => {
                Some(lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect())
            }
            _ => None,
        }
    }

    fn check(&self, dim: usize, agent: usize) -> Result<()> {
        if let LocalCost::Box { lower, upper } = self {
            if lower.len() != dim || upper.len() != dim {
                return Err(Error::Validation(format!(
                    "agent {agent}: box bounds must have dimension {dim}"
                )));
            }
            if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                return Err(Error::Validation(format!(
                    "agent {agent}: box lower bound exceeds upper bound"
                )));
            }
        }
        Ok(())
    }
}

/// One player: decision dimension, oracles and private coupling data.
#[derive(Clone)]
pub struct AgentSpec {
    pub dim: usize,
    pub grad: GradFn,
    pub cost: Option<CostFn>,
    pub local_cost: LocalCost,
    /// `A_i`, shape `m × dim`.
    pub coupling_block: Matrix,
    /// `b_i`, length `m`.
    pub coupling_offset: Vec<f64>,
    /// Agents `j ≠ i` whose decision enters `∇_{x_i} f_i`; sorted.
    pub interference: Vec<usize>,
}

impl fmt::Debug for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AgentSpec")
            .field("dim", &self.dim)
            .field("local_cost", &self.local_cost)
            .field("coupling_block", &self.coupling_block)
            .field("coupling_offset", &self.coupling_offset)
            .field("interference", &self.interference)
            .finish_non_exhaustive()
    }
}

/// Where a monotonicity/Lipschitz constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantSource {
    /// Closed form from the instance structure.
    Analytic,
    /// Supplied by the caller.
    Declared,
    /// Estimated by sampling; a certificate only for the sampled region.
    Empirical,
}

/// Monotonicity data of the pseudo-gradient, when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownConstants {
    /// `1/β`: Lipschitz constant of `F`.
    pub lipschitz: Option<f64>,
    /// `η`: strong-monotonicity modulus (0 = merely monotone).
    pub eta: Option<f64>,
    pub source: ConstantSource,
}

impl Default for KnownConstants {
    fn default() -> Self {
        KnownConstants {
            lipschitz: None,
            eta: None,
            source: ConstantSource::Declared,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameInstance {
    agents: Vec<AgentSpec>,
    m: usize,
    offsets: Vec<usize>,
    pub constants: KnownConstants,
}

impl GameInstance {
    pub fn new(agents: Vec<AgentSpec>, m: usize, constants: KnownConstants) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Validation("a game needs at least one agent".into()));
        }
        if m == 0 {
            return Err(Error::Validation("number of coupling rows must be positive".into()));
        }
        let n_agents = agents.len();
        let mut offsets = Vec::with_capacity(n_agents + 1);
        offsets.push(0);
        for (i, a) in agents.iter().enumerate() {
            if a.dim == 0 {
                return Err(Error::Validation(format!("agent {i} has zero dimension")));
            }
            if a.coupling_block.rows() != m || a.coupling_block.cols() != a.dim {
                return Err(Error::Validation(format!(
                    "agent {i}: coupling block is {}x{}, expected {m}x{}",
                    a.coupling_block.rows(),
                    a.coupling_block.cols(),
                    a.dim
                )));
            }
            check_dim("coupling offset", m, a.coupling_offset.len())?;
            if a.interference.iter().any(|&j| j >= n_agents || j == i)
                || a.interference.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::Validation(format!(
                    "agent {i}: interference list must be sorted, unique, exclude self"
                )));
            }
            a.local_cost.check(a.dim, i)?;
            offsets.push(offsets[i] + a.dim);
        }
        Ok(GameInstance {
            agents,
            m,
            offsets,
            constants,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// Number of coupling constraints `m`.
    pub fn num_constraints(&self) -> usize {
        self.m
    }

    /// Total primal dimension `n = Σ n_i`.
    pub fn primal_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn agent(&self, i: usize) -> &AgentSpec {
        &self.agents[i]
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn block_range(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.block_range(i)]
    }

    /// Stacked `𝐀 = diag(A_1, …, A_N)`, shape `mN × n`.
    pub fn stacked_coupling(&self) -> Matrix {
        let mut a = Matrix::zeros(self.m * self.num_agents(), self.primal_dim());
        for (i, agent) in self.agents.iter().enumerate() {
            a.set_block(i * self.m, self.offsets[i], &agent.coupling_block);
        }
        a
    }

    /// `b = Σ b_i`.
    pub fn total_offset(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        for a in &self.agents {
            for (bk, v) in b.iter_mut().zip(&a.coupling_offset) {
                *bk += v;
            }
        }
        b
    }

    /// `A x − b` with `A = [A_1, …, A_N]`.
    pub fn coupling_slack(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.total_offset().iter().map(|b| -b).collect();
        let mut tmp = vec![0.0; self.m];
        for (i, a) in self.agents.iter().enumerate() {
            a.coupling_block.mul_vec_into(self.block(x, i), &mut tmp);
            for (rk, t) in r.iter_mut().zip(&tmp) {
                *rk += t;
            }
        }
        r
    }

    /// Default starting point: box midpoints where known, zero elsewhere.
    pub fn default_primal_start(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.primal_dim()];
        for (i, a) in self.agents.iter().enumerate() {
            if let Some(mid) = a.local_cost.midpoint() {
                x[self.block_range(i)].copy_from_slice(&mid);
            }
        }
        x
    }

    pub fn all_boxed(&self) -> bool {
        self.agents
            .iter()
            .all(|a| matches!(a.local_cost, LocalCost::Box { .. }))
    }
}

/// `F(x) = col(∇_{x_1} f_1(x), …, ∇_{x_N} f_N(x))`.
pub fn pseudo_gradient(game: &GameInstance, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("pseudo_gradient", game.primal_dim(), x.len())?;
    let mut out = vec![0.0; x.len()];
    pseudo_gradient_into(game, x, &mut out);
    Ok(out)
}

pub(crate) fn pseudo_gradient_into(game: &GameInstance, x: &[f64], out: &mut [f64]) {
    for (i, a) in game.agents.iter().enumerate() {
        (a.grad)(x, &mut out[game.block_range(i)]);
    }
}

/// Block-wise `prox^{ρ_i}_{g_i}(v_i)`.
pub fn apply_prox_block(game: &GameInstance, v: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
    check_dim("apply_prox_block", game.primal_dim(), v.len())?;
    check_dim("apply_prox_block steps", game.num_agents(), rho.len())?;
    if let Some(r) = rho.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Config(format!("prox step must be positive, got {r}")));
    }
    let mut out = vec![0.0; v.len()];
    for (i, a) in game.agents.iter().enumerate() {
        let range = game.block_range(i);
        a.local_cost
            .prox_into(&v[range.clone()], rho[i], &mut out[range]);
    }
    Ok(out)
}

/// Residuals of the variational KKT system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResidual {
    /// `‖x − prox(x − F(x) − 𝐀ᵀλ̄)‖` with unit steps.
    pub stationarity: f64,
    /// `‖max(Ax − b, 0)‖`.
    pub primal_feasibility: f64,
    /// `|λ̄ᵀ(Ax − b)|`.
    pub complementarity: f64,
    /// `‖L̄λ‖`.
    pub dual_consensus: f64,
    /// Negative dual entries were clipped to zero before evaluation.
    pub clipped_dual: bool,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.complementarity)
            .max(self.dual_consensus)
    }
}

/// Mean of the `N` local dual copies.
pub fn mean_dual(lam_stacked: &[f64], m: usize) -> Vec<f64> {
    let n_agents = lam_stacked.len() / m;
    let mut mean = vec![0.0; m];
    for block in lam_stacked.chunks(m) {
        for (s, v) in mean.iter_mut().zip(block) {
            *s += v;
        }
    }
    mean.iter_mut().for_each(|s| *s /= n_agents as f64);
    mean
}

pub fn kkt_residual(
    game: &GameInstance,
    x: &[f64],
    lam_stacked: &[f64],
    graph: &CommGraph,
) -> Result<KktResidual> {
    let m = game.num_constraints();
    check_dim("kkt_residual primal", game.primal_dim(), x.len())?;
    check_dim("kkt_residual dual", m * game.num_agents(), lam_stacked.len())?;
    check_dim("kkt_residual graph", game.num_agents(), graph.num_nodes())?;

    let clipped_dual = lam_stacked.iter().any(|v| *v < 0.0);
    let lam: Vec<f64> = lam_stacked.iter().map(|v| v.max(0.0)).collect();
    let lam_bar = mean_dual(&lam, m);

    let f = pseudo_gradient(game, x)?;
    let mut probe = vec![0.0; x.len()];
    let mut at = Vec::new();
    for (i, a) in game.agents.iter().enumerate() {
        let range = game.block_range(i);
        at.resize(a.dim, 0.0);
        a.coupling_block.mul_t_vec_into(&lam_bar, &mut at);
        for (k, idx) in range.enumerate() {
            probe[idx] = x[idx] - f[idx] - at[k];
        }
    }
    let prox = apply_prox_block(game, &probe, &vec![1.0; game.num_agents()])?;
    let stationarity = linalg::dist(x, &prox);

    let slack = game.coupling_slack(x);
    let primal_feasibility = libm::sqrt(slack.iter().map(|s| { let p = s.max(0.0); p * p }).sum());
    let complementarity = linalg::dot(&lam_bar, &slack).abs();
    let dual_consensus = linalg::norm(&graph.laplacian_apply(&lam, m)?);

    Ok(KktResidual {
        stationarity,
        primal_feasibility,
        complementarity,
        dual_consensus,
        clipped_dual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `max(Ax − b, 0)` per coupling row.
    pub coupling_violation: Vec<f64>,
    /// `‖prox(x_i) − x_i‖` per agent.
    pub local_violation: Vec<f64>,
}

pub fn check_feasible(game: &GameInstance, x: &[f64], tol: f64) -> Result<Feasibility> {
    check_dim("check_feasible", game.primal_dim(), x.len())?;
    let coupling_violation: Vec<f64> = game
        .coupling_slack(x)
        .into_iter()
        .map(|s| s.max(0.0))
        .collect();
    let mut local_violation = Vec::with_capacity(game.num_agents());
    for (i, a) in game.agents.iter().enumerate() {
        let xi = game.block(x, i);
        let mut p = vec![0.0; a.dim];
        a.local_cost.prox_into(xi, 1.0, &mut p);
        local_violation.push(linalg::dist(xi, &p));
    }
    let feasible = coupling_violation.iter().all(|v| *v <= tol)
        && local_violation.iter().all(|v| *v <= tol);
    Ok(Feasibility {
        feasible,
        coupling_violation,
        local_violation,
    })
}

/// Heuristic strict-feasibility probe for box-plus-affine games: looks for a
/// point inside every box with `Ax < b` among a few interior candidates.
/// Returns `None` when some local cost is not a box.
pub fn slater_probe(game: &GameInstance) -> Option<bool> {
    if !game.all_boxed() {
        return None;
    }
    let candidates = [1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0 - 1e-3];
    for t in candidates {
        let mut x = vec![0.0; game.primal_dim()];
        let mut interior = true;
        for (i, a) in game.agents.iter().enumerate() {
            if let LocalCost::Box { lower, upper } = &a.local_cost {
                let range = game.block_range(i);
                for (k, idx) in range.enumerate() {
                    interior &= lower[k] < upper[k];
                    x[idx] = lower[k] + t * (upper[k] - lower[k]);
                }
            }
        }
        if interior && game.coupling_slack(&x).iter().all(|s| *s < 0.0) {
            return Some(true);
        }
    }
    Some(false)
}

/// Affine pseudo-gradient game `F(x) = Mx + q` with box or zero local costs.
///
/// This is the serialisable instance family; the interference structure is
/// read off the nonzero blocks of `M`, and `η`, `1/β` are computed from `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGame {
    pub dims: Vec<usize>,
    pub m: usize,
    pub matrix: Matrix,
    pub linear: Vec<f64>,
    /// Per-agent `(lower, upper)` box, `None` for `g ≡ 0`.
    pub boxes: Vec<Option<(Vec<f64>, Vec<f64>)>>,
    pub coupling_blocks: Vec<Matrix>,
    pub coupling_offsets: Vec<Vec<f64>>,
}

impl QuadraticGame {
    pub fn build(&self) -> Result<GameInstance> {
        let n_agents = self.dims.len();
        let n: usize = self.dims.iter().sum();
        if self.matrix.rows() != n || self.matrix.cols() != n {
            return Err(Error::Validation(format!(
                "pseudo-gradient matrix must be {n}x{n}"
            )));
        }
        check_dim("linear term", n, self.linear.len())?;
        for (what, len) in [
            ("boxes", self.boxes.len()),
            ("coupling blocks", self.coupling_blocks.len()),
            ("coupling offsets", self.coupling_offsets.len()),
        ] {
            if len != n_agents {
                return Err(Error::Validation(format!(
                    "{what}: expected {n_agents} entries, got {len}"
                )));
            }
        }
        let mut offsets = vec![0usize];
        for d in &self.dims {
            offsets.push(offsets.last().unwrap() + d);
        }

        let shared = Arc::new((self.matrix.clone(), self.linear.clone(), offsets.clone()));
        let mut agents = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let rows = offsets[i]..offsets[i + 1];
            let mut reads = BTreeSet::new();
            for j in 0..n_agents {
                let nonzero = rows.clone().any(|r| {
                    (offsets[j]..offsets[j + 1]).any(|c| self.matrix[(r, c)] != 0.0)
                });
                if nonzero || j == i {
                    reads.insert(j);
                }
            }
            let interference: Vec<usize> = reads.iter().copied().filter(|&j| j != i).collect();
            let reads: Vec<usize> = reads.into_iter().collect();
            let data = Arc::clone(&shared);
            let grad: GradFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
                let (mat, q, off) = &*data;
                for (k, o) in out.iter_mut().enumerate() {
                    let r = off[i] + k;
                    let row = mat.row(r);
                    let mut s = q[r];
                    for &j in &reads {
                        for c in off[j]..off[j + 1] {
                            s += row[c] * x[c];
                        }
                    }
                    *o = s;
                }
            });
            // a cost whose gradient is the given row block exists only when the
            // diagonal block is symmetric
            let own = offsets[i]..offsets[i + 1];
            let symmetric_diag = own.clone().all(|r| {
                own.clone()
                    .all(|c| self.matrix[(r, c)] == self.matrix[(c, r)])
            });
            let data = Arc::clone(&shared);
            let cost: CostFn = Arc::new(move |x: &[f64]| {
                // f_i(x) = ½ x_iᵀ M_ii x_i + Σ_{j≠i} x_iᵀ M_ij x_j + q_iᵀ x_i
                let (mat, q, off) = &*data;
                let mut total = 0.0;
                for r in off[i]..off[i + 1] {
                    let row = mat.row(r);
                    let mut s = q[r];
                    for (c, mc) in row.iter().enumerate() {
                        let own = (off[i]..off[i + 1]).contains(&c);
                        s += if own { 0.5 * mc * x[c] } else { mc * x[c] };
                    }
                    total += s * x[r];
                }
                total
            });
            let local_cost = match &self.boxes[i] {
                Some((lo, hi)) => LocalCost::Box {
                    lower: lo.clone(),
                    upper: hi.clone(),
                },
                None => LocalCost::Zero,
            };
            agents.push(AgentSpec {
                dim: self.dims[i],
                grad,
                cost: symmetric_diag.then_some(cost),
                local_cost,
                coupling_block: self.coupling_blocks[i].clone(),
                coupling_offset: self.coupling_offsets[i].clone(),
                interference,
            });
        }
        let (eta, lipschitz) = affine_constants(&self.matrix)?;
        GameInstance::new(
            agents,
            self.m,
            KnownConstants {
                lipschitz: Some(lipschitz),
                eta: Some(eta),
                source: ConstantSource::Analytic,
            },
        )
    }
}

/// `(η, 1/β)` of `F(x) = Mx + q`: smallest eigenvalue of the symmetric part
/// (clamped at zero) and the spectral norm of `M`.
pub fn affine_constants(matrix: &Matrix) -> Result<(f64, f64)> {
    let eig = linalg::symmetric_eigenvalues(&matrix.symmetric_part());
    let eta = eig.first().copied().unwrap_or(0.0).max(0.0);
    // round-off on a singular symmetric part should not fake strong monotonicity
    let eta = if eta <= 1e-12 * linalg::max_abs(matrix.as_slice()) {
        0.0
    } else {
        eta
    };
    let lipschitz = linalg::spectral_norm(matrix)?;
    Ok((eta, lipschitz))
}

/// Sampled checks of the pseudo-gradient on the local domain.
pub mod sampling {
    use super::*;

    /// Random point inside each agent's box; `[-1, 1]` for unbounded blocks.
    pub fn sample_point(game: &GameInstance, stream: &mut SeededStream) -> Vec<f64> {
        let mut x = vec![0.0; game.primal_dim()];
        for (i, a) in game.agents().iter().enumerate() {
            let range = game.block_range(i);
            for (k, idx) in range.enumerate() {
                x[idx] = match &a.local_cost {
                    LocalCost::Box { lower, upper } => stream.uniform(lower[k], upper[k]),
                    _ => stream.uniform(-1.0, 1.0),
                };
            }
        }
        x
    }

    /// Extremes of the pairwise quotients over `pairs` random pairs.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct PairStats {
        /// `min ⟨F(x)−F(y), x−y⟩`
        pub min_inner: f64,
        /// `min ⟨F(x)−F(y), x−y⟩ / ‖x−y‖²`
        pub min_monotone_ratio: f64,
        /// `max ‖F(x)−F(y)‖ / ‖x−y‖`
        pub max_lipschitz_ratio: f64,
    }

    pub fn pair_stats(game: &GameInstance, pairs: usize, seed: u64) -> Result<PairStats> {
        let mut stream = SeededStream::new(seed);
        let mut stats = PairStats {
            min_inner: f64::INFINITY,
            min_monotone_ratio: f64::INFINITY,
            max_lipschitz_ratio: 0.0,
        };
        for _ in 0..pairs {
            let x = sample_point(game, &mut stream);
            let y = sample_point(game, &mut stream);
            let dx = linalg::sub(&x, &y);
            let d2 = linalg::norm_sq(&dx);
            if d2 == 0.0 {
                continue;
            }
            let df = linalg::sub(&pseudo_gradient(game, &x)?, &pseudo_gradient(game, &y)?);
            let inner = linalg::dot(&df, &dx);
            stats.min_inner = stats.min_inner.min(inner);
            stats.min_monotone_ratio = stats.min_monotone_ratio.min(inner / d2);
            stats.max_lipschitz_ratio = stats
                .max_lipschitz_ratio
                .max(linalg::norm(&df) / libm::sqrt(d2));
        }
        Ok(stats)
    }

    /// Largest relative error `‖g − g_fd‖ / max(‖g‖, 1)` between each agent's
    /// gradient oracle and central differences of its cost oracle. Agents
    /// without a cost oracle are skipped.
    pub fn gradient_fd_error(game: &GameInstance, points: usize, seed: u64) -> Result<f64> {
        let mut stream = SeededStream::new(seed);
        let mut worst = 0.0f64;
        for _ in 0..points {
            let x = sample_point(game, &mut stream);
            let f = pseudo_gradient(game, &x)?;
            for (i, a) in game.agents().iter().enumerate() {
                let Some(cost) = &a.cost else { continue };
                let range = game.block_range(i);
                let mut fd = vec![0.0; a.dim];
                let mut xp = x.clone();
                for (k, idx) in range.clone().enumerate() {
                    let h = 1e-5 * x[idx].abs().max(1.0);
                    xp[idx] = x[idx] + h;
                    let up = cost(&xp);
                    xp[idx] = x[idx] - h;
                    let down = cost(&xp);
                    xp[idx] = x[idx];
                    fd[k] = (up - down) / (2.0 * h);
                }
                let g = &f[range];
                let err = linalg::dist(g, &fd) / linalg::norm(g).max(1.0);
                worst = worst.max(err);
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CommGraph;

    fn scalar_game(m_entries: &[Vec<f64>], q: &[f64], boxes: Vec<Option<(Vec<f64>, Vec<f64>)>>, a: f64, b: f64) -> GameInstance {
        let n = q.len();
        QuadraticGame {
            dims: vec![1; n],
            m: 1,
            matrix: Matrix::from_rows(m_entries).unwrap(),
            linear: q.to_vec(),
            boxes,
            coupling_blocks: (0..n).map(|_| Matrix::from_rows(&[vec![a]]).unwrap()).collect(),
            coupling_offsets: (0..n).map(|_| vec![b / n as f64]).collect(),
        }
        .build()
        .unwrap()
    }

    #[test]
    fn pseudo_gradient_of_single_quadratic() {
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![None], 0.0, 0.0);
        assert_eq!(pseudo_gradient(&g, &[3.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn pseudo_gradient_of_skew_bilinear_game() {
        // f1 = x1 x2, f2 = -x1 x2
        let g = scalar_game(
            &[vec![0.0, 1.0], vec![-1.0, 0.0]],
            &[0.0, 0.0],
            vec![None, None],
            0.0,
            0.0,
        );
        assert_eq!(pseudo_gradient(&g, &[1.0, 2.0]).unwrap(), vec![2.0, -1.0]);
        assert_eq!(g.agent(0).interference, vec![1]);
        assert_eq!(g.constants.eta, Some(0.0));
        assert!((g.constants.lipschitz.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_gradient_rejects_wrong_dimension() {
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![None], 0.0, 0.0);
        assert!(matches!(
            pseudo_gradient(&g, &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn prox_examples() {
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![Some((vec![0.0], vec![1.0]))], 0.0, 0.0);
        assert_eq!(apply_prox_block(&g, &[1.5], &[1.0]).unwrap(), vec![1.0]);
        let z = scalar_game(&[vec![1.0]], &[0.0], vec![None], 0.0, 0.0);
        assert_eq!(apply_prox_block(&z, &[-7.25], &[0.3]).unwrap(), vec![-7.25]);
        assert!(matches!(
            apply_prox_block(&g, &[0.5], &[0.0]),
            Err(Error::Config(_))
        ));

        let boxed = LocalCost::interval(2, 0.0, 1.2);
        let mut out = [0.0; 2];
        boxed.prox_into(&[-0.3, 0.7], 1.0, &mut out);
        assert_eq!(out, [0.0, 0.7]);
    }

    #[test]
    fn kkt_residual_zero_at_unconstrained_minimiser() {
        // f = ½(x−1)²  →  F(x) = x − 1
        let g = scalar_game(&[vec![1.0]], &[-1.0], vec![None], 0.0, 0.0);
        let graph = CommGraph::single();
        let r = kkt_residual(&g, &[1.0], &[0.0], &graph).unwrap();
        assert_eq!(r.max(), 0.0);
        assert!(!r.clipped_dual);
    }

    #[test]
    fn kkt_primal_feasibility_is_positive_part_norm() {
        // A = 1, b = 1, x = 1.2 violates by 0.2
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![None], 1.0, 1.0);
        let r = kkt_residual(&g, &[1.2], &[0.0], &CommGraph::single()).unwrap();
        assert!((r.primal_feasibility - 0.2).abs() < 1e-15);
        assert_eq!(r.complementarity, 0.0);
    }

    #[test]
    fn kkt_clips_negative_duals() {
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![None], 1.0, 1.0);
        let r = kkt_residual(&g, &[0.0], &[-1.0], &CommGraph::single()).unwrap();
        assert!(r.clipped_dual);
        assert_eq!(r.complementarity, 0.0);
    }

    #[test]
    fn feasibility_examples() {
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![Some((vec![-1.0], vec![1.0]))], 1.0, 1.0);
        assert!(check_feasible(&g, &[0.0], 1e-12).unwrap().feasible);
        let free = scalar_game(&[vec![1.0]], &[0.0], vec![None], 1.0, 1.0);
        let f = check_feasible(&free, &[2.0], 1e-12).unwrap();
        assert!(!f.feasible);
        assert_eq!(f.coupling_violation, vec![1.0]);
        // outside the box
        let f = check_feasible(&g, &[1.5], 1e-12).unwrap();
        assert!(!f.feasible);
        assert!((f.local_violation[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_cost_matches_gradient() {
        let g = scalar_game(
            &[vec![2.0, 0.5], vec![-0.25, 1.0]],
            &[0.1, -0.3],
            vec![Some((vec![0.0], vec![1.0])), Some((vec![0.0], vec![1.0]))],
            0.0,
            0.0,
        );
        let err = sampling::gradient_fd_error(&g, 50, 3).unwrap();
        assert!(err < 1e-8, "fd error {err}");
    }

    #[test]
    fn rejects_malformed_agents() {
        let mut q = QuadraticGame {
            dims: vec![1],
            m: 1,
            matrix: Matrix::identity(1),
            linear: vec![0.0],
            boxes: vec![Some((vec![1.0], vec![0.0]))],
            coupling_blocks: vec![Matrix::zeros(1, 1)],
            coupling_offsets: vec![vec![0.0]],
        };
        assert!(matches!(q.build(), Err(Error::Validation(_))));
        q.boxes = vec![None];
        q.coupling_blocks = vec![Matrix::zeros(2, 1)];
        assert!(matches!(q.build(), Err(Error::Validation(_))));
    }

    #[test]
    fn slater_probe_on_boxes() {
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![Some((vec![0.0], vec![1.0]))], 1.0, 0.5);
        assert_eq!(slater_probe(&g), Some(true));
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![Some((vec![0.0], vec![1.0]))], 1.0, -0.5);
        assert_eq!(slater_probe(&g), Some(false));
        let g = scalar_game(&[vec![1.0]], &[0.0], vec![None], 1.0, 0.5);
        assert_eq!(slater_probe(&g), None);
    }
}
