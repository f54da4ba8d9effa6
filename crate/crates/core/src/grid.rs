//! Uniform finite-difference grids on intervals and rectangles with
//! homogeneous Dirichlet boundaries.
//!
//! Fields hold interior values only (row-major in 2D, `x` fastest); the
//! boundary is identically zero and never stored. All discrete norms are
//! cell-volume weighted sums, and the gradient norm sums squared one-sided
//! differences over every edge, including the edges touching the boundary.
//! With that pairing `<grad u, grad v> = -<lap u, v>` holds exactly.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialGrid {
    lengths: Vec<f64>,
    nodes: Vec<usize>,
}

impl SpatialGrid {
    pub fn new_1d(length: f64, n: usize) -> Result<Self, ModelError> {
        Self::new(vec![length], vec![n])
    }

    pub fn new_2d(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self, ModelError> {
        Self::new(vec![lx, ly], vec![nx, ny])
    }

    pub fn new(lengths: Vec<f64>, nodes: Vec<usize>) -> Result<Self, ModelError> {
        if lengths.is_empty() || lengths.len() > 2 || lengths.len() != nodes.len() {
            return Err(ModelError::InvalidGrid(format!(
                "dimension must be 1 or 2 with one length and node count per axis (got {} lengths, {} node counts)",
                lengths.len(),
                nodes.len()
            )));
        }
        for (&l, &n) in lengths.iter().zip(&nodes) {
            if !(l.is_finite() && l > 0.0) {
                return Err(ModelError::InvalidGrid(format!("extent must be positive, got {l}")));
            }
            if n < 3 {
                return Err(ModelError::InvalidGrid(format!("need at least 3 interior nodes, got {n}")));
            }
        }
        Ok(Self { lengths, nodes })
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Number of interior unknowns.
    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// h = L / (n + 1) along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.nodes[axis] + 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dimension()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dimension()).map(|a| self.spacing(a)).product()
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    pub fn check_len(&self, field: &[f64]) -> Result<(), ModelError> {
        if field.len() != self.len() {
            return Err(ModelError::ShapeMismatch { expected: self.len(), found: field.len() });
        }
        Ok(())
    }

    /// Node coordinates of interior point `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let nx = self.nodes[0];
        let i = idx % nx;
        let j = idx / nx;
        let x = (i + 1) as f64 * self.spacing(0);
        let y = if self.dimension() == 2 { (j + 1) as f64 * self.spacing(1) } else { 0.0 };
        [x, y]
    }

    /// Product of sines `sin(k pi x / L)` with the given mode numbers (one per axis).
    pub fn sine_mode(&self, modes: &[usize]) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let c = self.coords(idx);
                (0..self.dimension())
                    .map(|a| {
                        let k = modes.get(a).copied().unwrap_or(1) as f64;
                        (k * PI * c[a] / self.lengths[a]).sin()
                    })
                    .product::<f64>()
            })
            .collect()
    }

    /// Eigenvalue of `-lap_h` for the given sine mode.
    pub fn sine_eigenvalue(&self, modes: &[usize]) -> f64 {
        (0..self.dimension())
            .map(|a| {
                let h = self.spacing(a);
                let k = modes.get(a).copied().unwrap_or(1) as f64;
                let s = (k * PI * h / (2.0 * self.lengths[a])).sin();
                4.0 * s * s / (h * h)
            })
            .sum()
    }

    /// Discrete Laplacian (zero Dirichlet data) written into `out`.
    pub fn laplacian_into(&self, u: &[f64], out: &mut [f64]) {
        let nx = self.nodes[0];
        let hx2 = self.spacing(0).powi(2);
        if self.dimension() == 1 {
            for i in 0..nx {
                let l = if i > 0 { u[i - 1] } else { 0.0 };
                let r = if i + 1 < nx { u[i + 1] } else { 0.0 };
                out[i] = (l - 2.0 * u[i] + r) / hx2;
            }
            return;
        }
        let ny = self.nodes[1];
        let hy2 = self.spacing(1).powi(2);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let l = if i > 0 { u[k - 1] } else { 0.0 };
                let r = if i + 1 < nx { u[k + 1] } else { 0.0 };
                let d = if j > 0 { u[k - nx] } else { 0.0 };
                let t = if j + 1 < ny { u[k + nx] } else { 0.0 };
                out[k] = (l - 2.0 * u[k] + r) / hx2 + (d - 2.0 * u[k] + t) / hy2;
            }
        }
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.zeros();
        self.laplacian_into(u, &mut out);
        out
    }

    /// `<grad u, grad v>` summed over all edges including boundary edges.
    pub fn grad_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let nx = self.nodes[0];
        let vol = self.cell_volume();
        let hx2 = self.spacing(0).powi(2);
        let ny = if self.dimension() == 2 { self.nodes[1] } else { 1 };
        let mut acc = 0.0;
        for j in 0..ny {
            let row = j * nx;
            // x-edges: nx + 1 per row
            let mut pu = 0.0;
            let mut pv = 0.0;
            for i in 0..nx {
                acc += (u[row + i] - pu) * (v[row + i] - pv) / hx2;
                pu = u[row + i];
                pv = v[row + i];
            }
            acc += pu * pv / hx2;
        }
        if self.dimension() == 2 {
            let hy2 = self.spacing(1).powi(2);
            for i in 0..nx {
                let mut pu = 0.0;
                let mut pv = 0.0;
                for j in 0..ny {
                    let k = j * nx + i;
                    acc += (u[k] - pu) * (v[k] - pv) / hy2;
                    pu = u[k];
                    pv = v[k];
                }
                acc += pu * pv / hy2;
            }
        }
        vol * acc
    }

    pub fn grad_norm_sq(&self, u: &[f64]) -> f64 {
        self.grad_inner(u, u)
    }

    /// `||u||_q^q = vol * sum |u_i|^q`.
    pub fn lp_pow(&self, u: &[f64], q: f64) -> f64 {
        self.cell_volume() * u.iter().map(|x| x.abs().powf(q)).sum::<f64>()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.cell_volume() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm_sq(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }

    /// Field padded with its zero boundary values.
    pub fn with_boundary(&self, u: &[f64]) -> Vec<f64> {
        let nx = self.nodes[0];
        if self.dimension() == 1 {
            let mut out = Vec::with_capacity(nx + 2);
            out.push(0.0);
            out.extend_from_slice(u);
            out.push(0.0);
            return out;
        }
        let ny = self.nodes[1];
        let mut out = vec![0.0; (nx + 2) * (ny + 2)];
        for j in 0..ny {
            for i in 0..nx {
                out[(j + 1) * (nx + 2) + i + 1] = u[j * nx + i];
            }
        }
        out
    }

    /// Solves `-lap_h x = rhs`. Thomas algorithm in 1D, conjugate gradients in 2D.
    pub fn poisson_solve(&self, rhs: &[f64]) -> Vec<f64> {
        if self.dimension() == 1 {
            return self.poisson_1d(rhs);
        }
        self.poisson_cg(rhs)
    }

    fn poisson_1d(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.nodes[0];
        let h2 = self.spacing(0).powi(2);
        // tridiagonal (-1, 2, -1)/h^2
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let b = 2.0 / h2;
        let off = -1.0 / h2;
        c[0] = off / b;
        d[0] = rhs[0] / b;
        for i in 1..n {
            let m = b - off * c[i - 1];
            c[i] = off / m;
            d[i] = (rhs[i] - off * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    fn poisson_cg(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut rr = dot(&r, &r);
        let tol = 1e-26 * rr.max(f64::MIN_POSITIVE);
        for _ in 0..(10 * n) {
            if rr <= tol {
                break;
            }
            self.laplacian_into(&p, &mut ap);
            ap.iter_mut().for_each(|v| *v = -*v);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        x
    }
}
