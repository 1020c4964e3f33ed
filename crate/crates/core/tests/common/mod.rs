#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use gnesplit_core::cournot::{generate, CournotParams};
use gnesplit_core::linalg::Matrix;
use gnesplit_core::model::{pseudo_gradient, LocalCost, QuadraticGame};
use gnesplit_core::{CommGraph, GameInstance, Iterate, Problem, SolverKind, StepConfig};

/// `F(x) = (x₂, −x₁)`, no coupling, two agents on one edge.
pub fn skew_game() -> (GameInstance, CommGraph) {
    let game = QuadraticGame {
        dims: vec![1, 1],
        m: 1,
        matrix: Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap(),
        linear: vec![0.0, 0.0],
        boxes: vec![None, None],
        coupling_blocks: vec![Matrix::zeros(1, 1), Matrix::zeros(1, 1)],
        coupling_offsets: vec![vec![0.0], vec![0.0]],
    }
    .build()
    .unwrap();
    (game, CommGraph::cycle(2).unwrap())
}

/// One agent, strongly convex quadratic, slack coupling constraint.
/// Minimiser `x* = −M⁻¹q = (5/7, −6/7)`.
pub fn trivial_game() -> (GameInstance, CommGraph, Vec<f64>) {
    let game = QuadraticGame {
        dims: vec![2],
        m: 1,
        matrix: Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
        linear: vec![-1.0, 0.5],
        boxes: vec![None],
        coupling_blocks: vec![Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap()],
        coupling_offsets: vec![vec![10.0]],
    }
    .build()
    .unwrap();
    (game, CommGraph::single(), vec![5.0 / 7.0, -6.0 / 7.0])
}

/// `f(x) = ½(x − 1)²`, nothing else.
pub fn unit_quadratic() -> (GameInstance, CommGraph) {
    let game = QuadraticGame {
        dims: vec![1],
        m: 1,
        matrix: Matrix::identity(1),
        linear: vec![-1.0],
        boxes: vec![None],
        coupling_blocks: vec![Matrix::zeros(1, 1)],
        coupling_offsets: vec![vec![0.0]],
    }
    .build()
    .unwrap();
    (game, CommGraph::single())
}

/// Three agents with boxes and one binding shared constraint.
pub fn coupled_quadratic() -> (GameInstance, CommGraph) {
    let game = QuadraticGame {
        dims: vec![1, 2, 1],
        m: 2,
        matrix: Matrix::from_rows(&[
            vec![3.0, 0.5, 0.0, 0.2],
            vec![0.5, 2.0, 0.3, 0.0],
            vec![0.0, 0.3, 2.5, 0.0],
            vec![0.2, 0.0, 0.0, 1.5],
        ])
        .unwrap(),
        linear: vec![-4.0, -3.0, -2.0, -5.0],
        boxes: vec![
            Some((vec![0.0], vec![2.0])),
            Some((vec![0.0, 0.0], vec![1.0, 1.5])),
            Some((vec![-1.0], vec![3.0])),
        ],
        coupling_blocks: vec![
            Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap(),
            Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        ],
        coupling_offsets: vec![vec![0.5, 0.4], vec![0.5, 0.4], vec![0.5, 0.4]],
    }
    .build()
    .unwrap();
    (game, CommGraph::cycle(3).unwrap())
}

pub fn cournot(seed: u64) -> (GameInstance, CommGraph) {
    let (g, graph, _) = generate(&CournotParams::with_seed(seed)).unwrap();
    (g, graph)
}

pub fn small_cournot(seed: u64) -> (GameInstance, CommGraph) {
    let params = CournotParams {
        n_firms: 6,
        n_markets: 3,
        seed,
        ..CournotParams::default()
    };
    let (g, graph, _) = generate(&params).unwrap();
    (g, graph)
}

/// Dense reference model of an affine game, assembled from scratch:
/// `F` is probed column by column, `𝐀`, `L̄`, `b̄` and the boxes are copied
/// entry by entry. Vectors are flat `[x; z; λ]`.
pub struct Dense {
    pub n: usize,
    pub md: usize,
    pub m: usize,
    pub fmat: Vec<Vec<f64>>,
    pub fconst: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub lbar: Vec<Vec<f64>>,
    pub bbar: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub blocks: Vec<usize>,
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn matvec_t(m: &[Vec<f64>], v: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (r, row) in m.iter().enumerate() {
        for (c, a) in row.iter().enumerate() {
            out[c] += a * v[r];
        }
    }
    out
}

impl Dense {
    pub fn new(game: &GameInstance, graph: &CommGraph) -> Self {
        let n = game.primal_dim();
        let nag = game.num_agents();
        let m = game.num_constraints();
        let md = nag * m;
        let f0 = pseudo_gradient(game, &vec![0.0; n]).unwrap();
        let mut fmat = vec![vec![0.0; n]; n];
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            let fc = pseudo_gradient(game, &e).unwrap();
            for r in 0..n {
                fmat[r][c] = fc[r] - f0[r];
            }
        }
        let mut a = vec![vec![0.0; n]; md];
        let mut bbar = vec![0.0; md];
        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper = vec![f64::INFINITY; n];
        let mut blocks = Vec::new();
        let mut off = 0;
        for (i, ag) in game.agents().iter().enumerate() {
            for r in 0..m {
                for k in 0..ag.dim {
                    a[i * m + r][off + k] = ag.coupling_block[(r, k)];
                }
                bbar[i * m + r] = ag.coupling_offset[r];
            }
            if let LocalCost::Box { lower: lo, upper: hi } = &ag.local_cost {
                for k in 0..ag.dim {
                    lower[off + k] = lo[k];
                    upper[off + k] = hi[k];
                }
            }
            for _ in 0..ag.dim {
                blocks.push(i);
            }
            off += ag.dim;
        }
        let w = graph.weights();
        let mut lbar = vec![vec![0.0; md]; md];
        for i in 0..nag {
            for j in 0..nag {
                if i != j && w[(i, j)] > 0.0 {
                    for r in 0..m {
                        lbar[i * m + r][j * m + r] -= w[(i, j)];
                        lbar[i * m + r][i * m + r] += w[(i, j)];
                    }
                }
            }
        }
        Dense {
            n,
            md,
            m,
            fmat,
            fconst: f0,
            a,
            lbar,
            bbar,
            lower,
            upper,
            blocks,
        }
    }

    pub fn flat(&self, u: &Iterate) -> Vec<f64> {
        u.x.iter().chain(&u.z).chain(&u.lam).copied().collect()
    }

    pub fn unflat(&self, v: &[f64]) -> Iterate {
        Iterate {
            x: v[..self.n].to_vec(),
            z: v[self.n..self.n + self.md].to_vec(),
            lam: v[self.n + self.md..].to_vec(),
        }
    }

    fn split<'a>(&self, v: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        (&v[..self.n], &v[self.n..self.n + self.md], &v[self.n + self.md..])
    }

    pub fn op_a(&self, v: &[f64]) -> Vec<f64> {
        let (x, _, lam) = self.split(v);
        let fx: Vec<f64> = matvec(&self.fmat, x).iter().zip(&self.fconst).map(|(a, b)| a + b).collect();
        let ll = matvec(&self.lbar, lam);
        let lam_row: Vec<f64> = ll.iter().zip(&self.bbar).map(|(a, b)| a + b).collect();
        fx.into_iter().chain(vec![0.0; self.md]).chain(lam_row).collect()
    }

    pub fn op_b(&self, v: &[f64]) -> Vec<f64> {
        let (x, z, lam) = self.split(v);
        let xr = matvec_t(&self.a, lam, self.n);
        let zr = matvec(&self.lbar, lam);
        let ax = matvec(&self.a, x);
        let lz = matvec(&self.lbar, z);
        let lr: Vec<f64> = ax.iter().zip(&lz).map(|(a, l)| -a - l).collect();
        xr.into_iter().chain(zr).chain(lr).collect()
    }

    pub fn op_d(&self, v: &[f64]) -> Vec<f64> {
        self.op_a(v).iter().zip(self.op_b(v)).map(|(a, b)| a + b).collect()
    }

    pub fn resolvent(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for k in 0..self.n {
            out[k] = v[k].max(self.lower[k]).min(self.upper[k]);
        }
        for k in self.n + self.md..out.len() {
            out[k] = v[k].max(0.0);
        }
        out
    }

    /// Step size of every flat coordinate.
    pub fn step_vec(&self, steps: &StepConfig) -> Vec<f64> {
        let mut s: Vec<f64> = self.blocks.iter().map(|&i| steps.rho[i]).collect();
        for i in 0..self.md {
            s.push(steps.sigma[i / self.m]);
        }
        for i in 0..self.md {
            s.push(steps.tau[i / self.m]);
        }
        s
    }

    fn forward(&self, v: &[f64], s: &[f64], d: &[f64]) -> Vec<f64> {
        v.iter().zip(s).zip(d).map(|((v, s), d)| v - s * d).collect()
    }

    pub fn fbf(&self, v: &[f64], steps: &StepConfig) -> (Vec<f64>, Vec<f64>) {
        let s = self.step_vec(steps);
        let dv = self.op_d(v);
        let u = self.resolvent(&self.forward(v, &s, &dv));
        let du = self.op_d(&u);
        let next = (0..v.len()).map(|k| u[k] + s[k] * (dv[k] - du[k])).collect();
        (next, u)
    }

    pub fn fbhf(&self, v: &[f64], steps: &StepConfig) -> (Vec<f64>, Vec<f64>) {
        let s = self.step_vec(steps);
        let dv = self.op_d(v);
        let u = self.resolvent(&self.forward(v, &s, &dv));
        let bv = self.op_b(v);
        let bu = self.op_b(&u);
        let next = (0..v.len()).map(|k| u[k] + s[k] * (bv[k] - bu[k])).collect();
        (next, u)
    }

    /// `Φ_FB` assembled from its block definition.
    pub fn phi(&self, steps: &StepConfig) -> Vec<Vec<f64>> {
        let s = self.step_vec(steps);
        let dim = s.len();
        let mut phi = vec![vec![0.0; dim]; dim];
        for k in 0..dim {
            phi[k][k] = 1.0 / s[k];
        }
        let (zo, lo) = (self.n, self.n + self.md);
        for r in 0..self.md {
            for c in 0..self.n {
                phi[c][lo + r] -= self.a[r][c];
                phi[lo + r][c] -= self.a[r][c];
            }
            for c in 0..self.md {
                phi[zo + c][lo + r] -= self.lbar[r][c];
                phi[lo + r][zo + c] -= self.lbar[r][c];
            }
        }
        phi
    }

    /// Largest violation of `0 ∈ Φ(u⁺ − u) + 𝓐u + 𝓑u⁺ + 𝓒u⁺`, scaled by the
    /// magnitude of the terms.
    pub fn fb_inclusion_violation(&self, u: &[f64], next: &[f64], steps: &StepConfig) -> f64 {
        let phi = self.phi(steps);
        let diff: Vec<f64> = next.iter().zip(u).map(|(a, b)| a - b).collect();
        let pd = matvec(&phi, &diff);
        let au = self.op_a(u);
        let bn = self.op_b(next);
        let r: Vec<f64> = (0..u.len()).map(|k| -(pd[k] + au[k] + bn[k])).collect();
        let scale = 1.0 + pd.iter().chain(&au).chain(&bn).fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for k in 0..u.len() {
            let v = next[k];
            let viol = if k < self.n {
                let (lo, hi) = (self.lower[k], self.upper[k]);
                if v < lo || v > hi {
                    f64::INFINITY
                } else if v == lo && v == hi {
                    0.0
                } else if v == lo {
                    r[k].max(0.0)
                } else if v == hi {
                    (-r[k]).max(0.0)
                } else {
                    r[k].abs()
                }
            } else if k < self.n + self.md {
                r[k].abs()
            } else if v < 0.0 {
                f64::INFINITY
            } else if v == 0.0 {
                r[k].max(0.0)
            } else {
                r[k].abs()
            };
            worst = worst.max(viol / scale);
        }
        worst
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Random iterate with `x` in the boxes (or `[-2, 2]`) and arbitrary `z, λ`.
pub fn random_iterate(game: &GameInstance, seed: u64) -> Iterate {
    let mut s = gnesplit_core::rng::SeededStream::new(seed);
    let mut u = Iterate::zeros(game);
    let mut off = 0;
    for ag in game.agents() {
        for k in 0..ag.dim {
            u.x[off + k] = match &ag.local_cost {
                LocalCost::Box { lower, upper } => s.uniform(lower[k], upper[k]),
                _ => s.uniform(-2.0, 2.0),
            };
        }
        off += ag.dim;
    }
    for v in u.z.iter_mut() {
        *v = s.uniform(-1.0, 1.0);
    }
    for v in u.lam.iter_mut() {
        *v = s.uniform(0.0, 1.0);
    }
    u
}

/// The limit of the `kind` iteration from `u0`, iterated until the update
/// stops shrinking.
pub fn limit(p: &Problem<'_>, kind: SolverKind, steps: &StepConfig, u0: &Iterate) -> Iterate {
    let mut u = u0.clone();
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..2_000_000 {
        let next = p.apply_map(kind, steps, &u).unwrap();
        let d = next.dist(&u);
        u = next;
        if d == 0.0 {
            break;
        }
        if d < best {
            best = d;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 2000 {
                break;
            }
        }
    }
    u
}

/// Largest increase of `‖v^k − u*‖_Ψ` over `iters` iterations.
pub fn fejer_worst_increase(p: &Problem<'_>, kind: SolverKind, iters: usize) -> f64 {
    let steps = p.select_steps(kind).unwrap();
    let u0 = Iterate::default_start(p.game);
    let star = limit(p, kind, &steps, &u0);
    let mut v = u0;
    let mut prev = steps.psi_norm(p.game, &v.sub(&star));
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..iters {
        v = p.apply_map(kind, &steps, &v).unwrap();
        let d = steps.psi_norm(p.game, &v.sub(&star));
        worst = worst.max(d - prev);
        prev = d;
    }
    worst
}

/// `game` with every agent gradient call counted in `counter`.
pub fn counting(game: &GameInstance, counter: &Arc<AtomicU64>) -> GameInstance {
    let agents = game
        .agents()
        .iter()
        .map(|a| {
            let mut a = a.clone();
            let inner = a.grad.clone();
            let c = Arc::clone(counter);
            a.grad = Arc::new(move |x: &[f64], out: &mut [f64]| {
                c.fetch_add(1, Ordering::Relaxed);
                inner(x, out)
            });
            a
        })
        .collect();
    GameInstance::new(agents, game.num_constraints(), game.constants).unwrap()
}
