//! Scalar numerical helpers: Gauss-Legendre quadrature, half-line integration
//! bracketed root finding for monotone functions and least-squares lines.

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Integrates `f` over [0, horizon] on geometrically growing panels
/// (first panel [0, first], then doubling) with 16-point Gauss-Legendre per panel.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, first: f64, horizon: f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let mut a = 0.0;
    let mut b = first.min(horizon);
    let mut acc = 0.0;
    while a < horizon {
        acc += gl.integrate(a, b, &mut f);
        a = b;
        b = (2.0 * b).min(horizon);
    }
    acc
}

/// Root of a continuous function with `f(lo) <= 0 <= f(hi)` (or the reverse) by
/// bisection, stopping when the bracket is below `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Positive root of `f(y) = target` for `f` increasing on [0, inf) with
/// `f(0) <= target`; the upper bracket doubles until it exceeds the target.
pub fn solve_increasing<F: FnMut(f64) -> f64>(mut f: F, target: f64, rel_tol: f64) -> f64 {
    let mut hi = 1.0;
    let mut guard = 0;
    while f(hi) <= target {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return f64::INFINITY;
        }
    }
    let lo = 0.0;
    // refine with a tolerance relative to the final magnitude
    let mut a = lo;
    let mut b = hi;
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if b - a <= rel_tol * (1.0 + mid) || mid == a || mid == b {
            return mid;
        }
        if f(mid) > target {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}


/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for exactly collinear or constant data.
    pub r_squared: f64,
    /// Sum of squared residuals.
    pub ssr: f64,
}

/// Least-squares line through `(x, y)`. Needs two distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let (mx, my) = (x[..n].iter().sum::<f64>() / n as f64, y[..n].iter().sum::<f64>() / n as f64);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y).take(n) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).take(n).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ssr / syy };
    Some(LineFit { slope, intercept, r_squared, ssr })
}
