//! One-dimensional quadrature rules.
//!
//! Three families are provided:
//!
//! * double-exponential rules ([`tanh_sinh`], [`exp_sinh`]) for integrands with
//!   algebraic endpoint singularities or slowly decaying tails;
//! * Gauss-Legendre panels for smooth densities on bounded intervals;
//! * [`LogTrapezoid`], the trapezoid rule in `u = ln t` used for all scale
//!   integrals `∫ g(t) dt` over `[t0, t1]`.

use std::f64::consts::FRAC_PI_2;

const DE_MAX_LEVEL: usize = 12;
const DE_T_MAX: f64 = 4.0;

/// Tanh-sinh quadrature of `f` over a finite interval `[a, b]`.
///
/// Handles integrable algebraic singularities at either endpoint. Nodes that
/// round onto an endpoint are skipped, so `f` is never evaluated at `a` or `b`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -tanh_sinh(f, b, a, rel_tol);
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    // Contribution of node t >= 0 (and its mirror -t).
    let pair = |t: f64| -> f64 {
        let v = FRAC_PI_2 * t.sinh();
        let ch = v.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
        if t == 0.0 {
            return w * f(mid);
        }
        // distance of the node from the nearer endpoint, computed without cancellation
        let d = (b - a) / (1.0 + (2.0 * v).exp());
        let mut s = 0.0;
        let xl = a + d;
        if xl > a && xl < b {
            s += f(xl);
        }
        let xr = b - d;
        if xr < b && xr > a {
            s += f(xr);
        }
        w * s
    };

    let mut h = 1.0;
    let mut sum = pair(0.0);
    let mut k = 1;
    while (k as f64) * h <= DE_T_MAX {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..DE_MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= DE_T_MAX {
            sum += pair(k as f64 * h);
            k += 2;
        }
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= rel_tol * estimate.abs() || diff < 1e-300 {
            break;
        }
    }
    estimate
}

/// Exp-sinh quadrature of `f` over `[a, ∞)`.
///
/// Suitable for integrands decaying at least like `x^{-1-δ}`, with a possible
/// integrable singularity at `a`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> f64 {
    const T_LO: f64 = -4.5;
    const T_HI: f64 = 5.0;
    let node = |t: f64| -> f64 {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let x = a + e;
        if x == a || !x.is_finite() {
            return 0.0;
        }
        let w = FRAC_PI_2 * t.cosh() * e;
        let v = w * f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = 0.0;
    let n = ((T_HI - T_LO) / h).round() as i64;
    for k in 0..=n {
        sum += node(T_LO + k as f64 * h);
    }
    let mut estimate = sum * h;
    for _ in 0..DE_MAX_LEVEL {
        h *= 0.5;
        let n = ((T_HI - T_LO) / h).round() as i64;
        let mut k = 1;
        while k <= n {
            sum += node(T_LO + k as f64 * h);
            k += 2;
        }
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= rel_tol * estimate.abs() || diff < 1e-300 {
            break;
        }
    }
    estimate
}

/// Integral of `f` over `[a, ∞)` split at the given interior breakpoints.
///
/// Every finite piece uses [`tanh_sinh`], the last one [`exp_sinh`]. Breakpoints
/// outside `(a, ∞)` are ignored.
pub fn piecewise_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, breakpoints: &[f64], rel_tol: f64) -> f64 {
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut lo = a;
    let mut total = 0.0;
    for &p in &pts {
        total += tanh_sinh(&f, lo, p, rel_tol);
        lo = p;
    }
    total + exp_sinh(&f, lo, rel_tol)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre nodes on `[a, b]`, `panels` equal panels of
/// `per_panel` nodes each.
pub fn gauss_legendre_panels(a: f64, b: f64, panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(per_panel);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * width * (xi + 1.0));
            weights.push(0.5 * width * wi);
        }
    }
    (nodes, weights)
}

/// Trapezoid rule in the logarithmic variable `u = ln t` on `[t0, t1]`.
///
/// `∫_{t0}^{t1} g(t) dt = ∫ G(u) du` with `G(u) = t·g(t)`. The node weights
/// already include the Jacobian `t`, so `Σ w_k g(t_k)` is the plain rule.
/// [`LogTrapezoid::end_correction`] supplies the Euler-Maclaurin `h²` term
/// from `G'` at both ends.
#[derive(Debug, Clone)]
pub struct LogTrapezoid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    step: f64,
}

impl LogTrapezoid {
    /// `nodes_per_decade` sets the spacing; the node count is rounded up so the
    /// endpoints are hit exactly.
    pub fn new(t0: f64, t1: f64, nodes_per_decade: usize) -> Self {
        assert!(t0 > 0.0 && t1 > t0, "need 0 < t0 < t1");
        let u0 = t0.ln();
        let u1 = t1.ln();
        let decades = (u1 - u0) / std::f64::consts::LN_10;
        let intervals = ((decades * nodes_per_decade as f64).ceil() as usize).max(2);
        let step = (u1 - u0) / intervals as f64;
        let mut nodes = Vec::with_capacity(intervals + 1);
        let mut weights = Vec::with_capacity(intervals + 1);
        for k in 0..=intervals {
            let t = if k == 0 {
                t0
            } else if k == intervals {
                t1
            } else {
                (u0 + k as f64 * step).exp()
            };
            let end = k == 0 || k == intervals;
            nodes.push(t);
            weights.push(if end { 0.5 * step * t } else { step * t });
        }
        Self { nodes, weights, step }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t0(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t1(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Correction to add to the plain rule given `G'(u)` at the lower and upper
    /// end, where `G(u) = t·g(t)` and `G'(u) = t·(g + t·g')`.
    pub fn end_correction<T>(&self, dg_lower: T, dg_upper: T) -> T
    where
        T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        (dg_upper - dg_lower) * (-self.step * self.step / 12.0)
    }

    /// Plain rule plus end correction for a scalar integrand `g` whose
    /// logarithmic derivative term `t·g'(t)` is supplied by `tdg`.
    pub fn integrate<G, D>(&self, g: G, tdg: D) -> f64
    where
        G: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let sum: f64 = self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * g(t)).sum();
        let big_g_prime = |t: f64| t * (g(t) + tdg(t));
        sum + self.end_correction(big_g_prime(self.t0()), big_g_prime(self.t1()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 1e-14);
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
        // ∫_0^1 sqrt(1-x) dx = 2/3
        let v = tanh_sinh(|x| (1.0 - x).sqrt(), 0.0, 1.0, 1e-14);
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-12);
        // ∫_0^π sin = 2
        let v = tanh_sinh(f64::sin, 0.0, PI, 1e-14);
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn exp_sinh_infinite_ranges() {
        let v = exp_sinh(|x| (-x).exp(), 0.0, 1e-14);
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        // ∫_1^∞ x^{-3/2} = 2
        let v = exp_sinh(|x| x.powf(-1.5), 1.0, 1e-14);
        assert_relative_eq!(v, 2.0, max_relative = 1e-10);
        // ∫_0^∞ x^{-1/2} e^{-x} = √π
        let v = exp_sinh(|x| x.powf(-0.5) * (-x).exp(), 0.0, 1e-14);
        assert_relative_eq!(v, PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert_relative_eq!(s, 2.0, max_relative = 1e-14);
        // degree 14 monomial: ∫ x^14 = 2/15
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(v, 2.0 / 15.0, max_relative = 1e-13);
        let (x, w) = gauss_legendre_panels(0.0, 3.0, 3, 16);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert_relative_eq!(v, 3f64.exp() - 1.0, max_relative = 1e-14);
    }

    #[test]
    fn log_trapezoid_with_end_correction() {
        // ∫_{1e-3}^{50} e^{-t} dt
        let rule = LogTrapezoid::new(1e-3, 50.0, 32);
        let v = rule.integrate(|t| (-t).exp(), |t| -t * (-t).exp());
        let exact = (-1e-3f64).exp() - (-50f64).exp();
        assert_relative_eq!(v, exact, max_relative = 1e-9);
    }
}
