//! Discretized past history.
//!
//! Both backends expose the same three quantities: the memory force
//! `int mu(s) Lap u(t-s) ds`, the memory norm `int mu ||grad w||^2 ds` and the
//! memory dissipation `-1/2 int mu' ||grad w||^2 ds`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::grid::SpatialGrid;
use crate::model::{HistoryProfile, RelaxationKernel};
use crate::numerics::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryBackend {
    /// Per-mode auxiliary fields; exponential-sum kernels only.
    #[default]
    Prony,
    /// Product-trapezoid quadrature over a stored history ring.
    Quadrature,
}

/// Weights of the exact integral of the linear interpolant over one step:
/// `int_0^dt e^{-lambda s} phi(s) ds` for the hat functions at the new and
/// old time levels.
fn step_weights(lambda: f64, dt: f64) -> (f64, f64) {
    let x = lambda * dt;
    // 1 - e^{-x}(1 + x)
    let num = if x < 1e-4 {
        x * x * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    };
    let beta = num / (lambda * x);
    let alpha = -(-x).exp_m1() / lambda - beta;
    (alpha, beta)
}

/// One exponential mode `c e^{-lambda s}` with
/// `psi = int c e^{-lambda s} Lap u(t-s) ds` and
/// `chi = int c e^{-lambda s} ||grad u(t-s)||^2 ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct PronyMode {
    pub c: f64,
    pub lambda: f64,
    decay: f64,
    alpha: f64,
    beta: f64,
    pub psi: Vec<f64>,
    pub chi: f64,
}

impl PronyMode {
    fn new(c: f64, lambda: f64, dt: f64) -> Self {
        let (alpha, beta) = step_weights(lambda, dt);
        Self { c, lambda, decay: (-lambda * dt).exp(), alpha, beta, psi: Vec::new(), chi: 0.0 }
    }

    /// `int c e^{-lambda s} ||grad u(t) - grad u(t-s)||^2 ds`, assembled from
    /// `psi` by summation by parts: `<grad u, grad z> = -<u, Lap z>`.
    fn norm(&self, grid: &SpatialGrid, u: &[f64], grad_sq: f64) -> f64 {
        let cross = grid.inner(u, &self.psi);
        (self.c / self.lambda * grad_sq + 2.0 * cross + self.chi).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMemory {
    pub nodes: Vec<f64>,
    weights: Vec<f64>,
    dweights: Vec<f64>,
    /// `snapshots[k] = u(t - k dt)`
    pub snapshots: VecDeque<Vec<f64>>,
    dt: f64,
    /// Steps taken; the ring's current time is `level * dt`.
    pub level: u64,
    history: HistoryProfile,
}

impl QuadratureMemory {
    fn new(kernel: &RelaxationKernel, history: &HistoryProfile, dt: f64, count: usize) -> Self {
        let nodes = quadrature_nodes(kernel.horizon(), dt, count);
        let (weights, dweights) = hat_weights(kernel, &nodes);
        let mut snapshots = VecDeque::new();
        snapshots.push_front(history.displacement().to_vec());
        Self { nodes, weights, dweights, snapshots, dt, level: 0, history: history.clone() }
    }

    /// Resolves `u(t - s_j)` from the ring, or from the initial history once
    /// `t - s_j` precedes the first snapshot.
    fn past(&self, j: usize) -> Past<'_> {
        let s = self.nodes[j];
        let k = (s / self.dt).floor() as usize;
        if k + 1 < self.snapshots.len() {
            let frac = s / self.dt - k as f64;
            Past::Ring(&self.snapshots[k], &self.snapshots[k + 1], frac)
        } else {
            Past::History(self.history.factor(self.level as f64 * self.dt - s))
        }
    }

    /// `sum_j W_j u(t - s_j)`
    fn weighted_sum(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.snapshots[0].len()];
        let mut hist = 0.0;
        for (j, &w) in self.weights.iter().enumerate() {
            match self.past(j) {
                Past::Ring(a, b, f) => {
                    let (wa, wb) = (w * (1.0 - f), w * f);
                    acc.iter_mut().zip(a.iter().zip(b)).for_each(|(x, (p, q))| *x += wa * p + wb * q);
                }
                Past::History(g) => hist += w * g,
            }
        }
        if hist != 0.0 {
            acc.iter_mut().zip(self.history.displacement()).for_each(|(x, u0)| *x += hist * u0);
        }
        acc
    }

    fn norms(&self, grid: &SpatialGrid, u: &[f64]) -> (f64, f64) {
        let mut diff = vec![0.0; u.len()];
        let (mut norm, mut diss) = (0.0, 0.0);
        for j in 1..self.nodes.len() {
            match self.past(j) {
                Past::Ring(a, b, f) => {
                    for i in 0..u.len() {
                        diff[i] = u[i] - ((1.0 - f) * a[i] + f * b[i]);
                    }
                }
                Past::History(g) => {
                    for (i, u0) in self.history.displacement().iter().enumerate() {
                        diff[i] = u[i] - g * u0;
                    }
                }
            }
            let n2 = grid.grad_norm_sq(&diff);
            norm += self.weights[j] * n2;
            diss -= 0.5 * self.dweights[j] * n2;
        }
        (norm, diss)
    }

    fn advance(&mut self, u_new: &[f64]) {
        self.snapshots.push_front(u_new.to_vec());
        self.level += 1;
        let keep = (self.nodes.last().copied().unwrap_or(0.0) / self.dt).floor() as usize + 2;
        self.snapshots.truncate(keep);
    }
}

enum Past<'a> {
    Ring(&'a [f64], &'a [f64], f64),
    History(f64),
}

/// `0` followed by `count - 1` log-spaced nodes from `dt/4` to `horizon`.
fn quadrature_nodes(horizon: f64, dt: f64, count: usize) -> Vec<f64> {
    let count = count.max(3);
    let first = 0.25 * dt;
    let ratio = (horizon / first).ln() / (count - 2) as f64;
    let mut nodes = vec![0.0];
    nodes.extend((0..count - 1).map(|k| first * (ratio * k as f64).exp()));
    nodes
}

/// Exact-in-`mu` weights of the piecewise-linear interpolant:
/// `W_j = int mu(s) phi_j(s) ds`, `W'_j = int mu'(s) phi_j(s) ds`.
fn hat_weights(kernel: &RelaxationKernel, nodes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(8);
    let mut w = vec![0.0; nodes.len()];
    let mut dw = vec![0.0; nodes.len()];
    for k in 0..nodes.len() - 1 {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let left = |s: f64| (b - s) / (b - a);
        let right = |s: f64| (s - a) / (b - a);
        w[k] += gl.integrate(a, b, |s| kernel.mu(s) * left(s));
        w[k + 1] += gl.integrate(a, b, |s| kernel.mu(s) * right(s));
        dw[k] += gl.integrate(a, b, |s| kernel.mu_prime(s) * left(s));
        dw[k + 1] += gl.integrate(a, b, |s| kernel.mu_prime(s) * right(s));
    }
    (w, dw)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemoryState {
    /// No memory term.
    Inactive,
    Prony(Vec<PronyMode>),
    Quadrature(QuadratureMemory),
}

impl MemoryState {
    pub fn new(
        grid: &SpatialGrid,
        kernel: Option<&RelaxationKernel>,
        history: &HistoryProfile,
        backend: MemoryBackend,
        dt: f64,
        quadrature_nodes: usize,
    ) -> Result<Self, String> {
        let Some(kernel) = kernel else {
            return Ok(MemoryState::Inactive);
        };
        match backend {
            MemoryBackend::Prony => {
                let terms = kernel.prony_terms().ok_or("the Prony backend needs an exponential-sum kernel")?;
                let lap0 = grid.laplacian(history.displacement());
                let grad0 = grid.grad_norm_sq(history.displacement());
                Ok(MemoryState::Prony(
                    terms
                        .iter()
                        .map(|t| {
                            let mut mode = PronyMode::new(t.c, t.lambda, dt);
                            let w = history.mode_weight(t.c, t.lambda);
                            mode.psi = lap0.iter().map(|x| w * x).collect();
                            mode.chi = history.mode_weight_sq(t.c, t.lambda) * grad0;
                            mode
                        })
                        .collect(),
                ))
            }
            MemoryBackend::Quadrature => Ok(MemoryState::Quadrature(QuadratureMemory::new(kernel, history, dt, quadrature_nodes))),
        }
    }

    pub fn backend(&self) -> Option<MemoryBackend> {
        match self {
            MemoryState::Inactive => None,
            MemoryState::Prony(_) => Some(MemoryBackend::Prony),
            MemoryState::Quadrature(_) => Some(MemoryBackend::Quadrature),
        }
    }

    /// Adds the memory contribution to the right-hand side of
    /// `u_tt = k(0) Lap u + (memory) + ...`.
    ///
    /// The equation carries `-int k'(s) Lap u(t-s) ds = +int mu(s) Lap u(t-s) ds`
    /// on its left side, so the right side receives `-int mu Lap u(t-s) ds`.
    /// This is the only place the sign is applied.
    pub fn add_force(&self, grid: &SpatialGrid, rhs: &mut [f64]) {
        match self {
            MemoryState::Inactive => {}
            MemoryState::Prony(modes) => {
                for m in modes {
                    rhs.iter_mut().zip(&m.psi).for_each(|(r, p)| *r -= p);
                }
            }
            MemoryState::Quadrature(q) => {
                let lap = grid.laplacian(&q.weighted_sum());
                rhs.iter_mut().zip(&lap).for_each(|(r, l)| *r -= l);
            }
        }
    }

    /// `(int mu ||grad w||^2 ds, -1/2 int mu' ||grad w||^2 ds)` at the current
    /// time level, whose displacement is `u`.
    pub fn norms(&self, grid: &SpatialGrid, u: &[f64]) -> (f64, f64) {
        match self {
            MemoryState::Inactive => (0.0, 0.0),
            MemoryState::Prony(modes) => {
                let g = grid.grad_norm_sq(u);
                modes.iter().fold((0.0, 0.0), |(n, d), m| {
                    let e = m.norm(grid, u, g);
                    // mu' = -sum c lambda e^{-lambda s}
                    (n + e, d + 0.5 * m.lambda * e)
                })
            }
            MemoryState::Quadrature(q) => q.norms(grid, u),
        }
    }

    /// Moves the history forward by one step once `u_new = u^{n+1}` is known;
    /// `u_old` is `u^n` and `lap_old` its Laplacian.
    pub fn advance(&mut self, grid: &SpatialGrid, u_old: &[f64], lap_old: &[f64], u_new: &[f64]) {
        match self {
            MemoryState::Inactive => {}
            MemoryState::Prony(modes) => {
                let lap_new = grid.laplacian(u_new);
                let g_new = grid.grad_norm_sq(u_new);
                let g_old = grid.grad_norm_sq(u_old);
                for m in modes.iter_mut() {
                    let (a, b) = (m.c * m.alpha, m.c * m.beta);
                    for ((p, ln), lo) in m.psi.iter_mut().zip(&lap_new).zip(lap_old) {
                        *p = m.decay * *p + a * ln + b * lo;
                    }
                    m.chi = m.decay * m.chi + a * g_new + b * g_old;
                }
            }
            MemoryState::Quadrature(q) => q.advance(u_new),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HistoryKind, TimeProfile};
    use approx::assert_relative_eq;

    #[test]
    fn step_weights_integrate_the_interpolant() {
        for (lambda, dt) in [(1.0, 1e-3), (3.0, 0.1), (0.01, 1e-6), (50.0, 0.02)] {
            let (a, b) = step_weights(lambda, dt);
            let gl = GaussLegendre::new(16);
            let ea = gl.integrate(0.0, dt, |s: f64| (-lambda * s).exp() * (1.0 - s / dt));
            let eb = gl.integrate(0.0, dt, |s: f64| (-lambda * s).exp() * s / dt);
            assert_relative_eq!(a, ea, max_relative = 1e-10);
            assert_relative_eq!(b, eb, max_relative = 1e-8);
            assert_relative_eq!(a + b, -(-lambda * dt).exp_m1() / lambda, max_relative = 1e-12);
        }
    }

    fn setup(kind: HistoryKind) -> (SpatialGrid, RelaxationKernel, HistoryProfile) {
        let g = SpatialGrid::new_1d(std::f64::consts::PI, 40).unwrap();
        let k = RelaxationKernel::exponential(1.0, 1.0).unwrap();
        let h = HistoryProfile::new(kind, g.sine_mode(&[1]), g.zeros(), &g).unwrap();
        (g, k, h)
    }

    #[test]
    fn prony_initialization() {
        let (g, k, h) = setup(HistoryKind::Constant);
        let MemoryState::Prony(m) = MemoryState::new(&g, Some(&k), &h, MemoryBackend::Prony, 1e-3, 0).unwrap() else { panic!() };
        assert_eq!(m[0].psi, g.laplacian(h.displacement()));
        let (g, k, h) = setup(HistoryKind::Separable { g: TimeProfile::Exponential { rate: 1.0 } });
        let mem = MemoryState::new(&g, Some(&k), &h, MemoryBackend::Prony, 1e-3, 0).unwrap();
        let MemoryState::Prony(m) = &mem else { panic!() };
        let lap = g.laplacian(h.displacement());
        for (p, l) in m[0].psi.iter().zip(&lap) {
            assert_relative_eq!(*p, 0.5 * l, max_relative = 1e-14);
        }
        // memory norm = ||grad u0||^2 / 3
        let (norm, _) = mem.norms(&g, h.displacement());
        assert_relative_eq!(norm, g.grad_norm_sq(h.displacement()) / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form_history_norm() {
        let (g, k, h) = setup(HistoryKind::Separable { g: TimeProfile::Exponential { rate: 1.0 } });
        let mem = MemoryState::new(&g, Some(&k), &h, MemoryBackend::Quadrature, 1e-3, 1024).unwrap();
        let (norm, diss) = mem.norms(&g, h.displacement());
        let gn = g.grad_norm_sq(h.displacement());
        assert_relative_eq!(norm, gn / 3.0, max_relative = 1e-4);
        // -1/2 int mu' (1 - e^{-s})^2 = 1/2 * 1/3 for mu = e^{-s}
        assert_relative_eq!(diss, gn / 6.0, max_relative = 1e-4);
    }

    #[test]
    fn frozen_field_drives_psi_to_its_fixed_point() {
        let (g, k, _) = setup(HistoryKind::Constant);
        let zero = HistoryProfile::zero(&g);
        let mut mem = MemoryState::new(&g, Some(&k), &zero, MemoryBackend::Prony, 0.01, 0).unwrap();
        let u = g.sine_mode(&[2]);
        let lap = g.laplacian(&u);
        let mut prev_gap = f64::INFINITY;
        for n in 0..2000 {
            mem.advance(&g, &u, &lap, &u);
            let MemoryState::Prony(m) = &mem else { panic!() };
            let gap: f64 = m[0].psi.iter().zip(&lap).map(|(p, l)| (p - l).abs()).fold(0.0, f64::max);
            if n > 0 && gap > 1e-12 {
                assert_relative_eq!(gap / prev_gap, (-0.01f64).exp(), max_relative = 1e-6);
            }
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-6);
    }
}
