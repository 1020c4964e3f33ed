//! Networked Cournot benchmark: firms sell in markets with capacity limits
//! and linear inverse demand.
//!
//! Firm `i` sells `x_i ∈ [0, δ_i]` (one component per market it serves).
//! Its cost is `c_i(x_i) = π_i‖x_i‖² + r_iᵀx_i` and it earns `Pᵀ A_i x_i`
//! with price `P = P̄ − D A x`; market capacities require `A x ≤ b`, split
//! evenly as `b_i = b / N`.
//!
//! Draw order from one [`SeededStream`]: participation, `δ` (firm by firm,
//! market by market), `b`, `π`, `r` (firm by firm), `P̄`, `d`.
//!
//! Participation: firm `i` draws `k = 1 + index(min(3, M))` and takes the
//! first `k` slots of a partial Fisher–Yates shuffle of `0..M`. Then every
//! market with fewer than `min(2, N)` firms, in market order, receives firms
//! drawn by `index(N)` until it has enough.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::linalg::{self, Matrix};
use crate::model::{AgentSpec, ConstantSource, GameInstance, KnownConstants, LocalCost};
use crate::rng::SeededStream;

/// Extra dual-graph edges for the default 20-firm ring (0-indexed).
pub const DEFAULT_CHORDS: [(usize, usize); 2] = [(1, 14), (5, 12)];

#[derive(Debug, Clone, PartialEq)]
pub struct CournotParams {
    pub n_firms: usize,
    pub n_markets: usize,
    pub delta_range: (f64, f64),
    pub capacity_range: (f64, f64),
    pub pi_range: (f64, f64),
    pub r_range: (f64, f64),
    pub pbar_range: (f64, f64),
    pub d_range: (f64, f64),
    /// Markets served by each firm; drawn from the seed when `None`.
    pub participation: Option<Vec<Vec<usize>>>,
    /// Dual-graph chords on top of the ring; `None` uses [`DEFAULT_CHORDS`]
    /// when both endpoints exist and no chords otherwise.
    pub chords: Option<Vec<(usize, usize)>>,
    pub seed: u64,
    /// Put every numeric parameter at the midpoint of its range.
    pub midpoint: bool,
}

impl Default for CournotParams {
    fn default() -> Self {
        CournotParams {
            n_firms: 20,
            n_markets: 7,
            delta_range: (1.0, 1.5),
            capacity_range: (0.5, 1.0),
            pi_range: (1.0, 8.0),
            r_range: (0.1, 0.6),
            pbar_range: (2.0, 4.0),
            d_range: (0.5, 1.0),
            participation: None,
            chords: None,
            seed: 1,
            midpoint: false,
        }
    }
}

impl CournotParams {
    pub fn with_seed(seed: u64) -> Self {
        CournotParams {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_firms == 0 || self.n_markets == 0 {
            return Err(Error::Validation("need at least one firm and one market".into()));
        }
        let ranges = [
            ("delta", self.delta_range),
            ("capacity", self.capacity_range),
            ("pi", self.pi_range),
            ("r", self.r_range),
            ("pbar", self.pbar_range),
            ("d", self.d_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite()) || !(lo > 0.0) || lo > hi {
                return Err(Error::Validation(format!(
                    "{name} range [{lo}, {hi}] must be a nonempty interval with positive lower end"
                )));
            }
        }
        if let Some(p) = &self.participation {
            check_participation(p, self.n_firms, self.n_markets)?;
        }
        Ok(())
    }

    fn resolved_chords(&self) -> Vec<(usize, usize)> {
        match &self.chords {
            Some(c) => c.clone(),
            None if self.n_firms > 14 => DEFAULT_CHORDS.to_vec(),
            None => Vec::new(),
        }
    }
}

fn check_participation(p: &[Vec<usize>], n_firms: usize, n_markets: usize) -> Result<()> {
    if p.len() != n_firms {
        return Err(Error::Validation(format!(
            "participation lists {} firms, expected {n_firms}",
            p.len()
        )));
    }
    for (i, markets) in p.iter().enumerate() {
        if markets.is_empty() {
            return Err(Error::Validation(format!("firm {i} serves no market")));
        }
        if markets.iter().any(|&j| j >= n_markets) || markets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "firm {i}: market list must be ascending, unique and below {n_markets}"
            )));
        }
    }
    Ok(())
}

/// Every drawn quantity of a Cournot instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CournotInstance {
    pub n_markets: usize,
    /// Ascending market indices served by each firm.
    pub participation: Vec<Vec<usize>>,
    /// Per firm, one upper bound per served market.
    pub delta: Vec<Vec<f64>>,
    /// `b_j` per market.
    pub capacity: Vec<f64>,
    pub pi: Vec<f64>,
    /// Per firm, one linear cost per served market.
    pub r: Vec<Vec<f64>>,
    pub pbar: Vec<f64>,
    pub d: Vec<f64>,
    pub chords: Vec<(usize, usize)>,
}

/// Per-firm gradient data. `terms[k]` lists the global indices of every
/// quantity sold in firm `i`'s `k`-th market, ordered by firm.
#[derive(Debug)]
struct FirmKernel {
    offset: usize,
    pi: f64,
    r: Vec<f64>,
    pbar: Vec<f64>,
    d: Vec<f64>,
    terms: Vec<Vec<usize>>,
}

impl FirmKernel {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let own = x[self.offset + k];
            let supply: f64 = self.terms[k].iter().map(|&g| x[g]).sum();
            *o = 2.0 * self.pi * own + self.r[k] - self.pbar[k] + self.d[k] * supply + self.d[k] * own;
        }
    }
}

impl CournotInstance {
    pub fn generate(params: &CournotParams) -> Result<Self> {
        params.validate()?;
        let (n, m) = (params.n_firms, params.n_markets);
        let mut s = SeededStream::new(params.seed);
        let participation = match &params.participation {
            Some(p) => p.clone(),
            None => draw_participation(&mut s, n, m),
        };
        let mid = params.midpoint;
        let mut draw = |(lo, hi): (f64, f64)| if mid { 0.5 * (lo + hi) } else { s.uniform(lo, hi) };
        let delta: Vec<Vec<f64>> = participation
            .iter()
            .map(|mk| mk.iter().map(|_| draw(params.delta_range)).collect())
            .collect();
        let capacity: Vec<f64> = (0..m).map(|_| draw(params.capacity_range)).collect();
        let pi: Vec<f64> = (0..n).map(|_| draw(params.pi_range)).collect();
        let r: Vec<Vec<f64>> = participation
            .iter()
            .map(|mk| mk.iter().map(|_| draw(params.r_range)).collect())
            .collect();
        let pbar: Vec<f64> = (0..m).map(|_| draw(params.pbar_range)).collect();
        let d: Vec<f64> = (0..m).map(|_| draw(params.d_range)).collect();
        let inst = CournotInstance {
            n_markets: m,
            participation,
            delta,
            capacity,
            pi,
            r,
            pbar,
            d,
            chords: params.resolved_chords(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n_firms(&self) -> usize {
        self.participation.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_firms(), self.n_markets);
        if n == 0 || m == 0 {
            return Err(Error::Validation("need at least one firm and one market".into()));
        }
        check_participation(&self.participation, n, m)?;
        let per_firm_ok = |v: &[Vec<f64>]| v.len() == n && v.iter().zip(&self.participation).all(|(a, p)| a.len() == p.len());
        if !per_firm_ok(&self.delta) || !per_firm_ok(&self.r) || self.pi.len() != n {
            return Err(Error::Validation("per-firm parameter sizes do not match participation".into()));
        }
        if self.capacity.len() != m || self.pbar.len() != m || self.d.len() != m {
            return Err(Error::Validation("per-market parameter sizes do not match market count".into()));
        }
        let all = self
            .delta
            .iter()
            .flatten()
            .chain(self.r.iter().flatten())
            .chain(&self.pi)
            .chain(&self.capacity)
            .chain(&self.pbar)
            .chain(&self.d);
        for v in all {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Validation(format!("parameters must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Block offsets of each firm in the stacked decision vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.n_firms());
        let mut acc = 0;
        for p in &self.participation {
            off.push(acc);
            acc += p.len();
        }
        off
    }

    pub fn primal_dim(&self) -> usize {
        self.participation.iter().map(Vec::len).sum()
    }

    /// `A_i`: `M × n_i`, column `k` selects the `k`-th served market.
    pub fn selection(&self, i: usize) -> Matrix {
        let p = &self.participation[i];
        let mut a = Matrix::zeros(self.n_markets, p.len());
        for (k, &j) in p.iter().enumerate() {
            a[(j, k)] = 1.0;
        }
        a
    }

    /// Firms other than `i` serving at least one of `i`'s markets.
    pub fn rivals(&self, i: usize) -> Vec<usize> {
        (0..self.n_firms())
            .filter(|&j| j != i && self.participation[j].iter().any(|mk| self.participation[i].contains(mk)))
            .collect()
    }

    fn kernel(&self, i: usize) -> FirmKernel {
        let offsets = self.offsets();
        let markets = &self.participation[i];
        let terms = markets
            .iter()
            .map(|&mk| {
                (0..self.n_firms())
                    .filter_map(|j| self.participation[j].iter().position(|&q| q == mk).map(|p| offsets[j] + p))
                    .collect()
            })
            .collect();
        FirmKernel {
            offset: offsets[i],
            pi: self.pi[i],
            r: self.r[i].clone(),
            pbar: markets.iter().map(|&mk| self.pbar[mk]).collect(),
            d: markets.iter().map(|&mk| self.d[mk]).collect(),
            terms,
        }
    }

    /// Closed-form `∇_{x_i} f_i` for every firm:
    /// `2π_i x_i + r_i − A_iᵀ(P̄ − D A x) + A_iᵀ D A_i x_i`.
    pub fn analytic_pseudo_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim("cournot gradient", self.primal_dim(), x.len())?;
        let mut out = vec![0.0; x.len()];
        let offsets = self.offsets();
        for i in 0..self.n_firms() {
            let len = self.participation[i].len();
            self.kernel(i).eval(x, &mut out[offsets[i]..offsets[i] + len]);
        }
        Ok(out)
    }

    /// `f_i(x) = π_i‖x_i‖² + r_iᵀx_i − (P̄ − D A x)ᵀ A_i x_i`.
    pub fn firm_cost(&self, i: usize, x: &[f64]) -> f64 {
        let offsets = self.offsets();
        let mut supply = vec![0.0; self.n_markets];
        for (j, p) in self.participation.iter().enumerate() {
            for (k, &mk) in p.iter().enumerate() {
                supply[mk] += x[offsets[j] + k];
            }
        }
        let xi = &x[offsets[i]..offsets[i] + self.participation[i].len()];
        let mut f = self.pi[i] * linalg::norm_sq(xi) + linalg::dot(&self.r[i], xi);
        for (k, &mk) in self.participation[i].iter().enumerate() {
            f -= (self.pbar[mk] - self.d[mk] * supply[mk]) * xi[k];
        }
        f
    }

    /// `F(x) = M x + q` with `M_ii = 2π_i I + 2A_iᵀDA_i`, `M_ij = A_iᵀDA_j`
    /// and `q_i = r_i − A_iᵀP̄`.
    pub fn affine_form(&self) -> (Matrix, Vec<f64>) {
        let dim = self.primal_dim();
        let offsets = self.offsets();
        let mut mat = Matrix::zeros(dim, dim);
        let mut q = vec![0.0; dim];
        for (i, pi) in self.participation.iter().enumerate() {
            for (k, &mk) in pi.iter().enumerate() {
                let row = offsets[i] + k;
                q[row] = self.r[i][k] - self.pbar[mk];
                mat[(row, row)] += 2.0 * self.pi[i] + self.d[mk];
                for (j, pj) in self.participation.iter().enumerate() {
                    if let Some(p) = pj.iter().position(|&q| q == mk) {
                        mat[(row, offsets[j] + p)] += self.d[mk];
                    }
                }
            }
        }
        (mat, q)
    }

    /// `(η, 1/β)` = (`λ_min(M)`, `‖M‖`).
    pub fn analytic_constants(&self) -> Result<(f64, f64)> {
        let (mat, _) = self.affine_form();
        crate::model::affine_constants(&mat)
    }

    /// Dual graph: unit ring over the firms plus the chords.
    pub fn graph(&self) -> Result<CommGraph> {
        CommGraph::cycle_with_chords(self.n_firms(), &self.chords)
    }

    pub fn game(&self) -> Result<GameInstance> {
        self.validate()?;
        let n = self.n_firms() as f64;
        let (eta, lipschitz) = self.analytic_constants()?;
        let shared = Arc::new(self.clone());
        let agents = (0..self.n_firms())
            .map(|i| {
                let kernel = self.kernel(i);
                let inst = Arc::clone(&shared);
                AgentSpec {
                    dim: self.participation[i].len(),
                    grad: Arc::new(move |x: &[f64], out: &mut [f64]| kernel.eval(x, out)),
                    cost: Some(Arc::new(move |x: &[f64]| inst.firm_cost(i, x))),
                    local_cost: LocalCost::Box {
                        lower: vec![0.0; self.participation[i].len()],
                        upper: self.delta[i].clone(),
                    },
                    coupling_block: self.selection(i),
                    coupling_offset: self.capacity.iter().map(|b| b / n).collect(),
                    interference: self.rivals(i),
                }
            })
            .collect();
        GameInstance::new(
            agents,
            self.n_markets,
            KnownConstants {
                lipschitz: Some(lipschitz),
                eta: Some(eta),
                source: ConstantSource::Analytic,
            },
        )
    }
}

fn draw_participation(s: &mut SeededStream, n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let k = 1 + s.index(m.min(3));
            let mut pool: Vec<usize> = (0..m).collect();
            for slot in 0..k {
                let pick = slot + s.index(m - slot);
                pool.swap(slot, pick);
            }
            let mut chosen = pool[..k].to_vec();
            chosen.sort_unstable();
            chosen
        })
        .collect();
    let need = n.min(2);
    for mk in 0..m {
        let mut count = out.iter().filter(|p| p.contains(&mk)).count();
        while count < need {
            let f = s.index(n);
            if !out[f].contains(&mk) {
                out[f].push(mk);
                out[f].sort_unstable();
                count += 1;
            }
        }
    }
    out
}

/// Generates the game, its dual graph and the drawn data.
pub fn generate(params: &CournotParams) -> Result<(GameInstance, CommGraph, CournotInstance)> {
    let inst = CournotInstance::generate(params)?;
    Ok((inst.game()?, inst.graph()?, inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pseudo_gradient, sampling};

    fn single() -> CournotInstance {
        CournotInstance {
            n_markets: 1,
            participation: vec![vec![0]],
            delta: vec![vec![1.0]],
            capacity: vec![1.0],
            pi: vec![1.0],
            r: vec![vec![0.1]],
            pbar: vec![2.0],
            d: vec![1.0],
            chords: vec![],
        }
    }

    #[test]
    fn single_firm_gradient_and_constants() {
        let c = single();
        let g = c.analytic_pseudo_gradient(&[0.5]).unwrap();
        assert!((g[0] - 0.1).abs() < 1e-15);
        // finite difference on f(x) = x² + 0.1x − (2 − x)x
        let f = |x: f64| x * x + 0.1 * x - (2.0 - x) * x;
        let fd = (f(0.5 + 1e-6) - f(0.5 - 1e-6)) / 2e-6;
        assert!((fd - 0.1).abs() < 1e-8);
        let (eta, lip) = c.analytic_constants().unwrap();
        assert!((eta - 4.0).abs() < 1e-12 && (lip - 4.0).abs() < 1e-12);
        assert!((c.firm_cost(0, &[0.5]) - f(0.5)).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_zero_is_the_linear_part() {
        let c = CournotInstance::generate(&CournotParams::with_seed(4)).unwrap();
        let g = c.analytic_pseudo_gradient(&vec![0.0; c.primal_dim()]).unwrap();
        let offsets = c.offsets();
        for (i, p) in c.participation.iter().enumerate() {
            for (k, &mk) in p.iter().enumerate() {
                assert_eq!(g[offsets[i] + k], c.r[i][k] - c.pbar[mk]);
            }
        }
    }

    #[test]
    fn no_price_coupling_gives_two_min_pi() {
        let mut c = CournotInstance::generate(&CournotParams::with_seed(2)).unwrap();
        c.d.iter_mut().for_each(|d| *d = 0.0);
        let (eta, _) = c.analytic_constants().unwrap();
        let min_pi = c.pi.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((eta - 2.0 * min_pi).abs() < 1e-10);
    }

    #[test]
    fn same_seed_same_instance() {
        let a = CournotInstance::generate(&CournotParams::with_seed(9)).unwrap();
        let b = CournotInstance::generate(&CournotParams::with_seed(9)).unwrap();
        assert_eq!(a, b);
        let c = CournotInstance::generate(&CournotParams::with_seed(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_pattern_covers_every_market_twice() {
        for seed in 0..20 {
            let c = CournotInstance::generate(&CournotParams::with_seed(seed)).unwrap();
            assert_eq!(c.n_firms(), 20);
            for mk in 0..7 {
                assert!(c.participation.iter().filter(|p| p.contains(&mk)).count() >= 2);
            }
            assert!(c.participation.iter().all(|p| !p.is_empty()));
        }
    }

    #[test]
    fn midpoint_mode() {
        let params = CournotParams {
            midpoint: true,
            ..CournotParams::default()
        };
        let (game, graph, c) = generate(&params).unwrap();
        assert!(c.capacity.iter().all(|&b| b == 0.75));
        assert!(c.pi.iter().all(|&p| p == 4.5));
        for a in game.agents() {
            assert!(a.coupling_block.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
            assert!(a.coupling_offset.iter().all(|&b| b == 0.75 / 20.0));
        }
        assert_eq!(graph.max_degree(), 3.0);
    }

    #[test]
    fn wiring_matches_closed_form_and_affine_form() {
        let (game, _, c) = generate(&CournotParams::with_seed(3)).unwrap();
        let (mat, q) = c.affine_form();
        assert_eq!(mat.max_asymmetry(), 0.0);
        let mut s = SeededStream::new(77);
        for _ in 0..20 {
            let x = sampling::sample_point(&game, &mut s);
            let a = pseudo_gradient(&game, &x).unwrap();
            assert_eq!(a, c.analytic_pseudo_gradient(&x).unwrap());
            let lin = linalg::add(&mat.mul_vec(&x), &q);
            assert!(linalg::dist(&a, &lin) < 1e-12);
        }
    }

    #[test]
    fn gradient_reads_only_rivals() {
        let (game, _, _) = generate(&CournotParams::with_seed(5)).unwrap();
        let base = game.default_primal_start();
        for i in 0..game.num_agents() {
            let a = game.agent(i);
            let mut out = vec![0.0; a.dim];
            for j in (0..game.num_agents()).filter(|&j| j != i && !a.interference.contains(&j)) {
                let mut x = base.clone();
                x[game.block_range(j)].iter_mut().for_each(|v| *v = f64::NAN);
                (a.grad)(&x, &mut out);
                assert!(out.iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let p = CournotParams {
            pi_range: (3.0, 2.0),
            ..CournotParams::default()
        };
        assert!(matches!(CournotInstance::generate(&p), Err(Error::Validation(_))));
        let p = CournotParams {
            n_firms: 2,
            n_markets: 1,
            participation: Some(vec![vec![0], vec![]]),
            ..CournotParams::default()
        };
        assert!(matches!(CournotInstance::generate(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn minimal_instance() {
        let p = CournotParams {
            n_firms: 2,
            n_markets: 1,
            ..CournotParams::default()
        };
        let (game, graph, c) = generate(&p).unwrap();
        assert_eq!(c.participation, vec![vec![0], vec![0]]);
        assert_eq!(game.num_agents(), 2);
        assert_eq!(graph.num_nodes(), 2);
    }
}
