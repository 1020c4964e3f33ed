//! Operator splitting of the v-GNE inclusion `0 ∈ 𝓐u + 𝓑u + 𝓒u` over the
//! stacked variable `u = (x, z, λ)`.
//!
//! ```text
//! 𝓐(u) = (F(x),     0,    L̄λ + b̄)
//! 𝓑(u) = (𝐀ᵀλ,      L̄λ,   −𝐀x − L̄z)
//! 𝓒(u) = (∂g(x),    {0},  N_{≥0}(λ))
//! ```
//!
//! Everything is evaluated agent by agent through the `*_row` kernels below;
//! the centralised operators and the message-passing simulation both call
//! them, so the two paths agree bit for bit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::graph::CommGraph;
use crate::linalg::{self, LinearOperator, Matrix};
use crate::model::{sampling, ConstantSource, GameInstance};

/// Stacked primal, auxiliary and dual variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub lam: Vec<f64>,
}

impl Iterate {
    pub fn zeros(game: &GameInstance) -> Self {
        let md = game.num_constraints() * game.num_agents();
        Iterate {
            x: vec![0.0; game.primal_dim()],
            z: vec![0.0; md],
            lam: vec![0.0; md],
        }
    }

    /// Box midpoints for `x` (zero where unknown), `z = 0`, `λ = 0`.
    pub fn default_start(game: &GameInstance) -> Self {
        let mut u = Self::zeros(game);
        u.x = game.default_primal_start();
        u
    }

    pub fn check_dims(&self, game: &GameInstance) -> Result<()> {
        let md = game.num_constraints() * game.num_agents();
        check_dim("iterate x", game.primal_dim(), self.x.len())?;
        check_dim("iterate z", md, self.z.len())?;
        check_dim("iterate lambda", md, self.lam.len())
    }

    pub fn len(&self) -> usize {
        self.x.len() + self.z.len() + self.lam.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.x.iter().chain(&self.z).chain(&self.lam)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn from_flat(flat: &[f64], n: usize, md: usize) -> Self {
        Iterate {
            x: flat[..n].to_vec(),
            z: flat[n..n + md].to_vec(),
            lam: flat[n + md..n + 2 * md].to_vec(),
        }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.iter().map(|v| v * v).sum())
    }

    pub fn dist(&self, other: &Iterate) -> f64 {
        libm::sqrt(
            self.iter()
                .zip(other.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }

    pub fn max_abs_diff(&self, other: &Iterate) -> f64 {
        self.iter()
            .zip(other.iter())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// `self + other` elementwise.
    pub fn add(&self, other: &Iterate) -> Iterate {
        Iterate {
            x: linalg::add(&self.x, &other.x),
            z: linalg::add(&self.z, &other.z),
            lam: linalg::add(&self.lam, &other.lam),
        }
    }

    /// `self − other` elementwise.
    pub fn sub(&self, other: &Iterate) -> Iterate {
        Iterate {
            x: linalg::sub(&self.x, &other.x),
            z: linalg::sub(&self.z, &other.z),
            lam: linalg::sub(&self.lam, &other.lam),
        }
    }
}

/// Per-agent step sizes; `Ψ = diag(ρ⁻¹, σ⁻¹, τ⁻¹)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
}

impl StepConfig {
    pub fn new(rho: Vec<f64>, sigma: Vec<f64>, tau: Vec<f64>) -> Result<Self> {
        if rho.len() != sigma.len() || rho.len() != tau.len() || rho.is_empty() {
            return Err(Error::Config("step vectors must share a positive length".into()));
        }
        if let Some(s) = rho.iter().chain(&sigma).chain(&tau).find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::Config(format!("step sizes must be positive and finite, got {s}")));
        }
        Ok(StepConfig { rho, sigma, tau })
    }

    pub fn uniform(n_agents: usize, step: f64) -> Result<Self> {
        Self::new(vec![step; n_agents], vec![step; n_agents], vec![step; n_agents])
    }

    pub fn num_agents(&self) -> usize {
        self.rho.len()
    }

    /// `|Ψ⁻¹|`: the largest step.
    pub fn psi_inv_norm(&self) -> f64 {
        self.rho
            .iter()
            .chain(&self.sigma)
            .chain(&self.tau)
            .copied()
            .fold(0.0, f64::max)
    }

    /// Diagonal of `Ψ⁻¹` laid out like an [`Iterate`].
    pub fn psi_inv_diag(&self, game: &GameInstance) -> Iterate {
        let m = game.num_constraints();
        let mut d = Iterate::zeros(game);
        for i in 0..game.num_agents() {
            d.x[game.block_range(i)].iter_mut().for_each(|v| *v = self.rho[i]);
            d.z[i * m..(i + 1) * m].iter_mut().for_each(|v| *v = self.sigma[i]);
            d.lam[i * m..(i + 1) * m].iter_mut().for_each(|v| *v = self.tau[i]);
        }
        d
    }

    /// `‖v‖_Ψ = sqrt(Σ v_k² / step_k)`.
    pub fn psi_norm(&self, game: &GameInstance, v: &Iterate) -> f64 {
        let d = self.psi_inv_diag(game);
        libm::sqrt(d.iter().zip(v.iter()).map(|(s, x)| x * x / s).sum())
    }
}

/// Lipschitz, cocoercivity and graph constants of the splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsBundle {
    /// `1/β`.
    pub f_lipschitz: f64,
    pub eta: f64,
    /// `κ = ‖L‖`.
    pub kappa: f64,
    /// `Δ`, maximum weighted degree.
    pub delta_deg: f64,
    /// `|𝐀|`.
    pub a_norm: f64,
    /// `L_𝓐 = 1/β + κ`.
    pub l_a: f64,
    /// `L_𝓑 = 2|𝐀| + 2κ`.
    pub l_b: f64,
    /// `L_𝓓 = L_𝓐 + L_𝓑`.
    pub l_d: f64,
    /// Cocoercivity modulus of `𝓐`, `min{1/(2Δ), ηβ²}`; only when `η > 0`.
    pub theta: Option<f64>,
    pub source: ConstantSource,
}

impl ConstantsBundle {
    /// `β`; infinite when `F` is constant.
    pub fn beta(&self) -> f64 {
        1.0 / self.f_lipschitz
    }

    /// Assembles the bundle from its primitive inputs.
    pub fn from_parts(
        f_lipschitz: f64,
        eta: f64,
        kappa: f64,
        delta_deg: f64,
        a_norm: f64,
        source: ConstantSource,
    ) -> Self {
        let l_a = f_lipschitz + kappa;
        let l_b = 2.0 * a_norm + 2.0 * kappa;
        let theta = (eta > 0.0).then(|| {
            let graph_part = if delta_deg > 0.0 {
                1.0 / (2.0 * delta_deg)
            } else {
                f64::INFINITY
            };
            graph_part.min(eta / (f_lipschitz * f_lipschitz))
        });
        ConstantsBundle {
            f_lipschitz,
            eta,
            kappa,
            delta_deg,
            a_norm,
            l_a,
            l_b,
            l_d: l_a + l_b,
            theta,
            source,
        }
    }
}

/// How to obtain `β` and `η` when the instance does not carry them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantOptions {
    pub allow_sampling: bool,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ConstantOptions {
    fn default() -> Self {
        ConstantOptions {
            allow_sampling: false,
            samples: 1000,
            seed: 0x00c0_ffee,
        }
    }
}

/// `𝐀 = diag(A_1, …, A_N)` as a matrix-free operator.
pub struct StackedCoupling<'a>(pub &'a GameInstance);

impl LinearOperator for StackedCoupling<'_> {
    fn dim_in(&self) -> usize {
        self.0.primal_dim()
    }
    fn dim_out(&self) -> usize {
        self.0.num_constraints() * self.0.num_agents()
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let m = self.0.num_constraints();
        for (i, a) in self.0.agents().iter().enumerate() {
            a.coupling_block
                .mul_vec_into(self.0.block(v, i), &mut out[i * m..(i + 1) * m]);
        }
    }
    fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        let m = self.0.num_constraints();
        for (i, a) in self.0.agents().iter().enumerate() {
            a.coupling_block
                .mul_t_vec_into(&v[i * m..(i + 1) * m], &mut out[self.0.block_range(i)]);
        }
    }
}

pub fn compute_constants(
    game: &GameInstance,
    graph: &CommGraph,
    opts: &ConstantOptions,
) -> Result<ConstantsBundle> {
    check_dim("graph nodes", game.num_agents(), graph.num_nodes())?;
    let known = game.constants;
    let mut source = known.source;
    let stats = if (known.lipschitz.is_none() || known.eta.is_none()) && opts.allow_sampling {
        source = ConstantSource::Empirical;
        Some(sampling::pair_stats(game, opts.samples, opts.seed)?)
    } else {
        None
    };
    let f_lipschitz = match (known.lipschitz, stats) {
        (Some(l), _) => l,
        (None, Some(s)) => s.max_lipschitz_ratio,
        (None, None) => {
            return Err(Error::Config(
                "Lipschitz constant of the pseudo-gradient unknown and sampling disabled".into(),
            ))
        }
    };
    let eta = match (known.eta, stats) {
        (Some(e), _) => e,
        (None, Some(s)) => s.min_monotone_ratio.max(0.0),
        (None, None) => 0.0,
    };
    let a_norm = linalg::spectral_norm(&StackedCoupling(game))?;
    Ok(ConstantsBundle::from_parts(
        f_lipschitz,
        eta,
        graph.op_norm(),
        graph.max_degree(),
        a_norm,
        source,
    ))
}

/// Read access to the values an agent may combine in one update.
///
/// `x_full` has the full primal dimension; an agent only ever reads its own
/// block and the blocks of its interference neighbours.
pub trait Neighborhood {
    fn x_full(&self) -> &[f64];
    fn z(&self, j: usize) -> &[f64];
    fn lam(&self, j: usize) -> &[f64];
}

/// [`Neighborhood`] backed by a full stacked iterate.
pub struct StackedView<'a> {
    pub u: &'a Iterate,
    pub m: usize,
}

impl Neighborhood for StackedView<'_> {
    fn x_full(&self) -> &[f64] {
        &self.u.x
    }
    fn z(&self, j: usize) -> &[f64] {
        &self.u.z[j * self.m..(j + 1) * self.m]
    }
    fn lam(&self, j: usize) -> &[f64] {
        &self.u.lam[j * self.m..(j + 1) * self.m]
    }
}

/// One agent's share of an operator value.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBlocks {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub lam: Vec<f64>,
}

impl AgentBlocks {
    pub fn zeros(dim: usize, m: usize) -> Self {
        AgentBlocks {
            x: vec![0.0; dim],
            z: vec![0.0; m],
            lam: vec![0.0; m],
        }
    }

    /// `self + other`, elementwise.
    pub fn plus(&self, other: &AgentBlocks) -> AgentBlocks {
        AgentBlocks {
            x: linalg::add(&self.x, &other.x),
            z: linalg::add(&self.z, &other.z),
            lam: linalg::add(&self.lam, &other.lam),
        }
    }
}

/// Per-agent rows of `𝓐` and `𝓑`.
pub mod rows {
    use super::*;

    /// `(L̄λ)_i`
    pub fn lap_lam(graph: &CommGraph, i: usize, nb: &impl Neighborhood, out: &mut [f64]) {
        graph.laplacian_row(i, nb.lam(i), |j| nb.lam(j), out);
    }

    /// `(L̄z)_i`
    pub fn lap_z(graph: &CommGraph, i: usize, nb: &impl Neighborhood, out: &mut [f64]) {
        graph.laplacian_row(i, nb.z(i), |j| nb.z(j), out);
    }

    /// `𝓐` x-row: `∇_{x_i} f_i(x)`.
    pub fn a_x(game: &GameInstance, i: usize, nb: &impl Neighborhood, out: &mut [f64]) {
        (game.agent(i).grad)(nb.x_full(), out);
    }

    /// `𝓐` λ-row: `(L̄λ)_i + b_i`, given `(L̄λ)_i`.
    pub fn a_lam(game: &GameInstance, i: usize, lap_lam: &[f64], out: &mut [f64]) {
        for ((o, l), b) in out.iter_mut().zip(lap_lam).zip(&game.agent(i).coupling_offset) {
            *o = l + b;
        }
    }

    /// `𝓑` x-row: `A_iᵀλ_i`.
    pub fn b_x(game: &GameInstance, i: usize, nb: &impl Neighborhood, out: &mut [f64]) {
        game.agent(i).coupling_block.mul_t_vec_into(nb.lam(i), out);
    }

    /// `𝓑` λ-row: `−A_i x_i − (L̄z)_i`.
    pub fn b_lam(game: &GameInstance, graph: &CommGraph, i: usize, nb: &impl Neighborhood, out: &mut [f64]) {
        let m = game.num_constraints();
        let mut ax = vec![0.0; m];
        game.agent(i)
            .coupling_block
            .mul_vec_into(game.block(nb.x_full(), i), &mut ax);
        let mut lz = vec![0.0; m];
        lap_z(graph, i, nb, &mut lz);
        for ((o, a), l) in out.iter_mut().zip(&ax).zip(&lz) {
            *o = -a - l;
        }
    }

    /// Both `𝓐` and `𝓑` rows of agent `i` with a single gradient call.
    pub fn a_and_b(
        game: &GameInstance,
        graph: &CommGraph,
        i: usize,
        nb: &impl Neighborhood,
    ) -> (AgentBlocks, AgentBlocks) {
        let dim = game.agent(i).dim;
        let m = game.num_constraints();
        let mut a = AgentBlocks::zeros(dim, m);
        let mut b = AgentBlocks::zeros(dim, m);
        a_x(game, i, nb, &mut a.x);
        lap_lam(graph, i, nb, &mut b.z);
        a_lam(game, i, &b.z, &mut a.lam);
        b_x(game, i, nb, &mut b.x);
        b_lam(game, graph, i, nb, &mut b.lam);
        (a, b)
    }

    /// `𝓑` rows of agent `i` (no gradient call).
    pub fn b_only(game: &GameInstance, graph: &CommGraph, i: usize, nb: &impl Neighborhood) -> AgentBlocks {
        let mut b = AgentBlocks::zeros(game.agent(i).dim, game.num_constraints());
        lap_lam(graph, i, nb, &mut b.z);
        b_x(game, i, nb, &mut b.x);
        b_lam(game, graph, i, nb, &mut b.lam);
        b
    }

    /// `J_{Ψ⁻¹𝓒}` on agent `i`'s blocks: prox on x, identity on z,
    /// projection onto `ℝ≥0` on λ.
    pub fn resolvent(game: &GameInstance, i: usize, rho: f64, v: &AgentBlocks) -> AgentBlocks {
        let mut x = vec![0.0; v.x.len()];
        game.agent(i).local_cost.prox_into(&v.x, rho, &mut x);
        AgentBlocks {
            x,
            z: v.z.clone(),
            lam: v.lam.iter().map(|l| l.max(0.0)).collect(),
        }
    }

    /// `v − s·d` per block with the agent's `(ρ_i, σ_i, τ_i)`.
    pub fn forward(v: &AgentBlocks, steps: (f64, f64, f64), d: &AgentBlocks) -> AgentBlocks {
        let f = |v: &[f64], s: f64, d: &[f64]| -> Vec<f64> {
            v.iter().zip(d).map(|(v, d)| v - s * d).collect()
        };
        AgentBlocks {
            x: f(&v.x, steps.0, &d.x),
            z: f(&v.z, steps.1, &d.z),
            lam: f(&v.lam, steps.2, &d.lam),
        }
    }

    /// `u + s·(dv − du)` per block.
    pub fn correct(
        u: &AgentBlocks,
        steps: (f64, f64, f64),
        dv: &AgentBlocks,
        du: &AgentBlocks,
    ) -> AgentBlocks {
        let f = |u: &[f64], s: f64, dv: &[f64], du: &[f64]| -> Vec<f64> {
            u.iter()
                .zip(dv.iter().zip(du))
                .map(|(u, (a, b))| u + s * (a - b))
                .collect()
        };
        AgentBlocks {
            x: f(&u.x, steps.0, &dv.x, &du.x),
            z: f(&u.z, steps.1, &dv.z, &du.z),
            lam: f(&u.lam, steps.2, &dv.lam, &du.lam),
        }
    }
}

/// Agent `i`'s blocks of a stacked iterate.
pub fn agent_blocks(game: &GameInstance, u: &Iterate, i: usize) -> AgentBlocks {
    let m = game.num_constraints();
    AgentBlocks {
        x: game.block(&u.x, i).to_vec(),
        z: u.z[i * m..(i + 1) * m].to_vec(),
        lam: u.lam[i * m..(i + 1) * m].to_vec(),
    }
}

/// Writes agent `i`'s blocks into a stacked iterate.
pub fn put_agent_blocks(game: &GameInstance, u: &mut Iterate, i: usize, b: &AgentBlocks) {
    let m = game.num_constraints();
    u.x[game.block_range(i)].copy_from_slice(&b.x);
    u.z[i * m..(i + 1) * m].copy_from_slice(&b.z);
    u.lam[i * m..(i + 1) * m].copy_from_slice(&b.lam);
}

fn check_inputs(game: &GameInstance, graph: &CommGraph, u: &Iterate) -> Result<()> {
    check_dim("graph nodes", game.num_agents(), graph.num_nodes())?;
    u.check_dims(game)
}

/// `𝓐(u) = (F(x), 0, L̄λ + b̄)`.
pub fn op_a(game: &GameInstance, graph: &CommGraph, u: &Iterate) -> Result<Iterate> {
    Ok(op_parts(game, graph, u)?.0)
}

/// `𝓑(u) = (𝐀ᵀλ, L̄λ, −𝐀x − L̄z)`.
pub fn op_b(game: &GameInstance, graph: &CommGraph, u: &Iterate) -> Result<Iterate> {
    check_inputs(game, graph, u)?;
    let view = StackedView {
        u,
        m: game.num_constraints(),
    };
    let mut out = Iterate::zeros(game);
    for i in 0..game.num_agents() {
        put_agent_blocks(game, &mut out, i, &rows::b_only(game, graph, i, &view));
    }
    Ok(out)
}

/// `𝓓 = 𝓐 + 𝓑`, one gradient evaluation.
pub fn op_d(game: &GameInstance, graph: &CommGraph, u: &Iterate) -> Result<Iterate> {
    let (a, b) = op_parts(game, graph, u)?;
    Ok(a.add(&b))
}

/// `(𝓐u, 𝓑u)` in one pass.
pub fn op_parts(game: &GameInstance, graph: &CommGraph, u: &Iterate) -> Result<(Iterate, Iterate)> {
    check_inputs(game, graph, u)?;
    let view = StackedView {
        u,
        m: game.num_constraints(),
    };
    let mut a = Iterate::zeros(game);
    let mut b = Iterate::zeros(game);
    for i in 0..game.num_agents() {
        let (ai, bi) = rows::a_and_b(game, graph, i, &view);
        put_agent_blocks(game, &mut a, i, &ai);
        put_agent_blocks(game, &mut b, i, &bi);
    }
    Ok((a, b))
}

/// `J_{Ψ⁻¹𝓒}(v)`.
pub fn resolvent_c(game: &GameInstance, v: &Iterate, steps: &StepConfig) -> Result<Iterate> {
    v.check_dims(game)?;
    check_dim("step config", game.num_agents(), steps.num_agents())?;
    let mut out = Iterate::zeros(game);
    for i in 0..game.num_agents() {
        let r = rows::resolvent(game, i, steps.rho[i], &agent_blocks(game, v, i));
        put_agent_blocks(game, &mut out, i, &r);
    }
    Ok(out)
}

/// Dense assemblies used as brute-force oracles and for certificates.
pub mod dense {
    use super::*;

    /// Dense `𝐀` (`mN × n`).
    pub fn coupling(game: &GameInstance) -> Matrix {
        game.stacked_coupling()
    }

    /// Dense matrix of the linear operator `𝓑` on `(x, z, λ)`.
    pub fn op_b_matrix(game: &GameInstance, graph: &CommGraph) -> Matrix {
        let n = game.primal_dim();
        let md = game.num_constraints() * game.num_agents();
        let a = game.stacked_coupling();
        let l = graph.kron_laplacian(game.num_constraints());
        let mut neg_a = a.clone();
        let mut neg_l = l.clone();
        for i in 0..md {
            for j in 0..n {
                neg_a[(i, j)] = -a[(i, j)];
            }
            for j in 0..md {
                neg_l[(i, j)] = -l[(i, j)];
            }
        }
        let mut b = Matrix::zeros(n + 2 * md, n + 2 * md);
        b.set_block(0, n + md, &a.transpose());
        b.set_block(n, n + md, &l);
        b.set_block(n + md, 0, &neg_a);
        b.set_block(n + md, n, &neg_l);
        b
    }

    /// `Φ_FB = [[ρ⁻¹, 0, −𝐀ᵀ], [0, σ⁻¹, −L̄], [−𝐀, −L̄, τ⁻¹]]`.
    pub fn phi_fb(game: &GameInstance, graph: &CommGraph, steps: &StepConfig) -> Matrix {
        let n = game.primal_dim();
        let md = game.num_constraints() * game.num_agents();
        let a = game.stacked_coupling();
        let l = graph.kron_laplacian(game.num_constraints());
        let psi = steps.psi_inv_diag(game);
        let mut phi = Matrix::zeros(n + 2 * md, n + 2 * md);
        for (k, s) in psi.iter().enumerate() {
            phi[(k, k)] = 1.0 / s;
        }
        for i in 0..md {
            for j in 0..n {
                phi[(n + md + i, j)] = -a[(i, j)];
                phi[(j, n + md + i)] = -a[(i, j)];
            }
            for j in 0..md {
                phi[(n + md + i, n + j)] = -l[(i, j)];
                phi[(n + j, n + md + i)] = -l[(j, i)];
            }
        }
        phi
    }
}

/// Certified positive-definite `Φ_FB`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiCertificate {
    pub matrix: Matrix,
    /// `λ_min(Φ_FB) = 1/|Φ_FB⁻¹|`.
    pub min_eigenvalue: f64,
}

pub fn build_phi_fb(game: &GameInstance, graph: &CommGraph, steps: &StepConfig) -> Result<PhiCertificate> {
    check_dim("step config", game.num_agents(), steps.num_agents())?;
    check_dim("graph nodes", game.num_agents(), graph.num_nodes())?;
    let matrix = dense::phi_fb(game, graph, steps);
    let min_eigenvalue = linalg::symmetric_eigenvalues(&matrix)[0];
    if !(min_eigenvalue > 0.0) {
        return Err(Error::StepRejected { min_eigenvalue });
    }
    Ok(PhiCertificate {
        matrix,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuadraticGame;

    fn single_quadratic(b: f64) -> GameInstance {
        QuadraticGame {
            dims: vec![1],
            m: 1,
            matrix: Matrix::identity(1),
            linear: vec![0.0],
            boxes: vec![None],
            coupling_blocks: vec![Matrix::zeros(1, 1)],
            coupling_offsets: vec![vec![b]],
        }
        .build()
        .unwrap()
    }

    #[test]
    fn op_a_single_agent() {
        let g = single_quadratic(2.0);
        let graph = CommGraph::single();
        let u = Iterate {
            x: vec![3.0],
            z: vec![-4.0],
            lam: vec![7.0],
        };
        let a = op_a(&g, &graph, &u).unwrap();
        assert_eq!(a.x, vec![3.0]);
        assert_eq!(a.z, vec![0.0]);
        assert_eq!(a.lam, vec![2.0]);
    }

    #[test]
    fn op_b_with_zero_duals() {
        let game = QuadraticGame {
            dims: vec![2, 1],
            m: 2,
            matrix: Matrix::identity(3),
            linear: vec![0.0; 3],
            boxes: vec![None, None],
            coupling_blocks: vec![
                Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap(),
                Matrix::from_rows(&[vec![3.0], vec![0.5]]).unwrap(),
            ],
            coupling_offsets: vec![vec![0.0; 2], vec![0.0; 2]],
        }
        .build()
        .unwrap();
        let graph = CommGraph::cycle(2).unwrap();
        let u = Iterate {
            x: vec![1.0, -1.0, 2.0],
            z: vec![0.0; 4],
            lam: vec![0.0; 4],
        };
        let b = op_b(&game, &graph, &u).unwrap();
        assert!(b.x.iter().chain(&b.z).all(|v| *v == 0.0));
        assert_eq!(b.lam, vec![1.0, -1.0, -6.0, -1.0]);
    }

    #[test]
    fn resolvent_examples() {
        let g = QuadraticGame {
            dims: vec![2],
            m: 2,
            matrix: Matrix::identity(2),
            linear: vec![0.0; 2],
            boxes: vec![Some((vec![0.0; 2], vec![1.2; 2]))],
            coupling_blocks: vec![Matrix::zeros(2, 2)],
            coupling_offsets: vec![vec![0.0; 2]],
        }
        .build()
        .unwrap();
        let v = Iterate {
            x: vec![-0.3, 1.7],
            z: vec![-9.0, 4.0],
            lam: vec![-0.3, 0.5],
        };
        let steps = StepConfig::uniform(1, 0.7).unwrap();
        let r = resolvent_c(&g, &v, &steps).unwrap();
        assert_eq!(r.x, vec![0.0, 1.2]);
        assert_eq!(r.z, v.z);
        assert_eq!(r.lam, vec![0.0, 0.5]);
    }

    #[test]
    fn constants_formulas() {
        let c = ConstantsBundle::from_parts(1.0, 0.0, 0.0, 0.0, 0.0, ConstantSource::Declared);
        assert_eq!((c.l_a, c.l_b, c.l_d), (1.0, 0.0, 1.0));
        assert_eq!(c.theta, None);
        let c = ConstantsBundle::from_parts(1.0, 0.5, 3.0, 2.0, 1.0, ConstantSource::Declared);
        assert_eq!(c.theta, Some(0.25));
        assert_eq!(c.l_d, c.l_a + c.l_b);
    }

    #[test]
    fn missing_lipschitz_without_sampling_is_a_config_error() {
        let mut g = single_quadratic(0.0);
        g.constants.lipschitz = None;
        let err = compute_constants(&g, &CommGraph::single(), &ConstantOptions::default());
        assert!(matches!(err, Err(Error::Config(_))));
        let sampled = compute_constants(
            &g,
            &CommGraph::single(),
            &ConstantOptions {
                allow_sampling: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(sampled.source, ConstantSource::Empirical);
        assert!((sampled.f_lipschitz - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_is_diagonal_without_coupling_or_graph() {
        let g = single_quadratic(0.0);
        let steps = StepConfig::new(vec![0.5], vec![0.25], vec![2.0]).unwrap();
        let cert = build_phi_fb(&g, &CommGraph::single(), &steps).unwrap();
        assert_eq!(cert.matrix, Matrix::diag(&[2.0, 4.0, 0.5]));
        assert_eq!(cert.min_eigenvalue, 0.5);
    }

    #[test]
    fn step_config_validation() {
        assert!(StepConfig::new(vec![1.0], vec![0.0], vec![1.0]).is_err());
        assert!(StepConfig::new(vec![1.0], vec![1.0], vec![]).is_err());
        let s = StepConfig::new(vec![0.1, 0.3], vec![0.2, 0.2], vec![0.05, 0.1]).unwrap();
        assert_eq!(s.psi_inv_norm(), 0.3);
    }
}
