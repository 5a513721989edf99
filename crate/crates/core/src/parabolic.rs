//! Parabolic potentials and parabolic wavelet transforms on space × time.
//!
//! The last grid axis is time. On the plane wave `e^{i(x·ξ + tτ)}` the heat
//! kernel at time `s` composed with the time shift by `s` acts as
//! `e^{-s(|ξ|² + iτ)}`, so every operator here is a function of the complex
//! rate `R = |ξ|² + iτ` (plus one for the weighted variants). `Re R ≥ 0`,
//! hence principal-branch powers of `R` never cross the cut.

use crate::calderon::{
    apply_responses, assemble, scale_limit, segment_rules, sweep, InversionJob, Reconstruction, ScaleIntegrand,
};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, MAX_DIM};
use crate::measure::{inversion_failure, ConstantOrder, WaveletMeasure};
use crate::potential::ensure_zero_mean;
use crate::quadrature::gauss_legendre;
use crate::special::gamma;
use crate::spectral::{apply_table, SpectralMultiplier};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

const GL_ORDER: usize = 16;
const HEAT_DECAY_SPAN: f64 = 40.0;
const ZERO_CONSTANT: f64 = 1e-12;

/// A grid on `ℝⁿ × ℝ` whose last axis is time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicGrid {
    spec: GridSpec,
}

impl ParabolicGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if spec.dim() < 2 {
            return Err(Error::InvalidGrid(
                "a parabolic grid needs at least one space axis and a time axis".into(),
            ));
        }
        Ok(Self { spec })
    }

    /// `n` space axes of `n_space` points on `[-l_space, l_space)` and a time
    /// axis of `n_time` points on `[-l_time, l_time)`.
    pub fn cube(space_dim: usize, n_space: usize, l_space: f64, n_time: usize, l_time: f64) -> Result<Self> {
        let mut sizes = vec![n_space; space_dim];
        sizes.push(n_time);
        let mut widths = vec![l_space; space_dim];
        widths.push(l_time);
        Self::new(GridSpec::new(sizes, widths)?)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn space_dim(&self) -> usize {
        self.spec.dim() - 1
    }

    pub fn time_axis(&self) -> usize {
        self.spec.dim() - 1
    }
}

/// `|ξ|² + iτ` from a space-time frequency vector.
pub fn parabolic_rate(freq: &[f64], weighted: bool) -> Complex64 {
    let (tau, xi) = freq.split_last().expect("nonempty frequency vector");
    let s: f64 = xi.iter().map(|v| v * v).sum();
    Complex64::new(if weighted { 1.0 + s } else { s }, *tau)
}

/// Which potential and which wavelet transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicSpec {
    /// `H^α` and `P_μ` when true, `𝓗^α` and `𝒫_μ` otherwise.
    pub homogeneous: bool,
    pub alpha: f64,
    /// Scaling parameters `a` at which transforms are sampled.
    pub scales: Vec<f64>,
}

impl ParabolicSpec {
    pub fn new(homogeneous: bool, alpha: f64) -> Self {
        Self {
            homogeneous,
            alpha,
            scales: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.scales.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Domain("scales must be positive".into()));
        }
        Ok(())
    }

    fn weighted(&self) -> bool {
        !self.homogeneous
    }

    /// `R^{-α/2}`.
    pub fn symbol(&self, freq: &[f64]) -> Complex64 {
        parabolic_rate(freq, self.weighted()).powf(-self.alpha / 2.0)
    }

    pub fn multiplier(&self) -> SpectralMultiplier<'_> {
        if self.homogeneous {
            SpectralMultiplier::singular(move |freq| self.symbol(freq)).with_zero_value(Complex64::new(0.0, 0.0))
        } else {
            SpectralMultiplier::new(move |freq| self.symbol(freq))
        }
    }
}

fn check_grid(f: &GridFunction) -> Result<()> {
    ParabolicGrid::new(f.spec().clone()).map(|_| ())
}

/// `H^α f` or `𝓗^α f` by the space-time multiplier.
pub fn parabolic_potential(spec: &ParabolicSpec, f: &GridFunction) -> Result<GridFunction> {
    spec.validate()?;
    check_grid(f)?;
    if spec.homogeneous {
        ensure_zero_mean(f)?;
    }
    let p = -spec.alpha / 2.0;
    let table: Vec<Complex64> = grid_rates(f.spec(), spec.weighted())
        .into_iter()
        .map(|r| if r.norm() == 0.0 { r } else { r.powf(p) })
        .collect();
    apply_table(f, &table)
}

/// Nodes and weights for `(1/Γ(p)) ∫_0^T s^{p-1} g(s) ds` in the variable
/// `s = u^q`, which removes the endpoint singularity, with uniform panels
/// fine enough for `g = e^{-sR}` at `|Im R| ≤ omega`, the first panel graded
/// geometrically toward zero.
fn heat_rule(p: f64, t_max: f64, omega: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let q = (1.0 / p).ceil().max(1.0);
    let u_max = t_max.powf(1.0 / q);
    let panels = ((q * t_max * omega / PI).ceil() as usize + 1).max(256);
    let width = u_max / panels as f64;
    let mut edges: Vec<(f64, f64)> = (1..panels)
        .map(|k| (k as f64 * width, (k + 1) as f64 * width))
        .collect();
    let mut hi = width;
    for _ in 0..48 {
        edges.push((hi / 2.0, hi));
        hi /= 2.0;
    }
    let (x, w) = gauss_legendre(GL_ORDER);
    let norm = q / gamma(p)?;
    let mut nodes = Vec::with_capacity(edges.len() * GL_ORDER);
    let mut weights = Vec::with_capacity(edges.len() * GL_ORDER);
    for (a, b) in edges {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            let u = mid + half * xi;
            nodes.push(u.powf(q));
            weights.push(norm * half * wi * u.powf(q * p - 1.0));
        }
    }
    Ok((nodes, weights))
}

/// Rate at every grid frequency. The time Nyquist frequency has no mirror
/// partner, so the odd part `iτ` is dropped there to keep real data real.
fn grid_rates(spec: &GridSpec, weighted: bool) -> Vec<Complex64> {
    let d = spec.dim();
    let nyquist = spec.sizes()[d - 1] / 2;
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let mut idx = [0usize; MAX_DIM];
            spec.unravel(i, &mut idx[..d]);
            let mut freq = [0.0; MAX_DIM];
            for a in 0..d {
                freq[a] = spec.frequency(a, idx[a]);
            }
            if idx[d - 1] == nyquist {
                freq[d - 1] = 0.0;
            }
            parabolic_rate(&freq[..d], weighted)
        })
        .collect()
}

/// Distinct complex rates on the grid and the class of every frequency.
fn rate_classes(spec: &GridSpec, weighted: bool) -> (Vec<Complex64>, Vec<u32>) {
    let rates = grid_rates(spec, weighted);
    let mut unique = Vec::new();
    let mut slot: HashMap<(u64, u64), u32> = HashMap::new();
    let index = rates
        .iter()
        .map(|r| {
            *slot.entry((r.re.to_bits(), r.im.to_bits())).or_insert_with(|| {
                unique.push(*r);
                (unique.len() - 1) as u32
            })
        })
        .collect();
    (unique, index)
}

/// `𝓗^α f` from `(1/Γ(α/2)) ∫_0^∞ s^{α/2-1} e^{-s} (w(·, s) ∗ f)(x, t - s) ds`,
/// accumulated frequency by frequency. Only the weighted potential has an
/// absolutely convergent integral on the periodic box.
pub fn parabolic_potential_heat(spec: &ParabolicSpec, f: &GridFunction) -> Result<GridFunction> {
    spec.validate()?;
    check_grid(f)?;
    if spec.homogeneous {
        return Err(Error::InvalidInput(
            "the heat integral of the homogeneous potential does not converge absolutely".into(),
        ));
    }
    let grid = f.spec();
    let (rates, index) = rate_classes(grid, true);
    let omega = grid.max_frequency();
    let (nodes, weights) = heat_rule(spec.alpha / 2.0, HEAT_DECAY_SPAN, omega)?;
    let values: Vec<Complex64> = rates
        .par_iter()
        .map(|&r| nodes.iter().zip(&weights).map(|(&s, &w)| w * (-s * r).exp()).sum())
        .collect();
    let out = apply_responses(f, &index, 1, 1.0, |_, u| values[u])?;
    Ok(out.into_iter().next().expect("one output"))
}

/// Heat kernel `w(y, s) = (4πs)^{-n/2} e^{-|y|²/4s}`.
pub fn heat_kernel(y: &[f64], s: f64) -> f64 {
    let n = y.len() as f64;
    let r2: f64 = y.iter().map(|v| v * v).sum();
    (4.0 * PI * s).powf(-n / 2.0) * (-r2 / (4.0 * s)).exp()
}

fn reject_atom_at_zero(mu: &WaveletMeasure) -> Result<()> {
    if mu.atom_at_zero() != 0.0 {
        return Err(Error::AtomAtZero);
    }
    Ok(())
}

/// `P_μ f(·; a)` (homogeneous) or `𝒫_μ f(·; a)`: multiplier `Σ c_j e^{-aη_j R}`.
pub fn parabolic_wavelet(spec: &ParabolicSpec, mu: &WaveletMeasure, f: &GridFunction, a: f64) -> Result<GridFunction> {
    spec.validate()?;
    check_grid(f)?;
    reject_atom_at_zero(mu)?;
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    let table: Vec<Complex64> = grid_rates(f.spec(), spec.weighted())
        .into_par_iter()
        .map(|r| mu.discrete().map(|(eta, c)| c * (-eta * a * r).exp()).sum())
        .collect();
    apply_table(f, &table)
}

/// `∫_ε^{εe^{-iφ}} μ̃(aR) a^{-1-s} da` along the arc `|a| = ε`, `φ = arg R`.
fn arc_term(integrand: &ScaleIntegrand, epsilon: f64, r: Complex64, gl: &(Vec<f64>, Vec<f64>)) -> Complex64 {
    let phi = r.arg();
    if phi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let s = integrand.exponent;
    let mag = r.norm();
    let eta_max = integrand.decaying.iter().map(|p| p.0).fold(0.0, f64::max);
    let panels = ((epsilon * eta_max * mag * phi.abs() / 2.0).ceil() as usize).clamp(1, 4096);
    let width = phi / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * width;
        for (x, w) in gl.0.iter().zip(&gl.1) {
            let theta = mid + 0.5 * width * x;
            // aR = ε|R| e^{i(φ-θ)}
            let ar = Complex64::from_polar(epsilon * mag, phi - theta);
            let m: Complex64 = integrand.at_zero
                + integrand
                    .decaying
                    .iter()
                    .map(|&(eta, c)| c * (-eta * ar).exp())
                    .sum::<Complex64>();
            acc += m * Complex64::from_polar(0.5 * width * w, theta * s);
        }
    }
    Complex64::new(0.0, -epsilon.powf(-s)) * acc
}

/// Inversion of `φ = H^α f` (or `𝓗^α f`) with default quadrature settings.
pub fn invert_parabolic(
    spec: &ParabolicSpec,
    mu: &WaveletMeasure,
    phi: &GridFunction,
    epsilons: &[f64],
    reference: Option<&GridFunction>,
) -> Result<Reconstruction> {
    let job = InversionJob::new(spec.alpha / 2.0, epsilons.to_vec());
    invert_parabolic_with(spec, mu, phi, &job, reference)
}

/// `(1/c_{α/2,μ}) ∫_ε^T P_μ φ(·; a) da/a^{1+α/2}`.
///
/// An atom at the origin contributes its weight times `φ` at every scale,
/// the limit of the heat kernel at time zero.
///
/// Each frequency is integrated along the ray on which `aR` is real and
/// positive, joined to `[ε, ∞)` by an arc of radius `ε`; the integrand is
/// analytic and decays in between, so the two paths agree.
pub fn invert_parabolic_with(
    spec: &ParabolicSpec,
    mu: &WaveletMeasure,
    phi: &GridFunction,
    job: &InversionJob,
    reference: Option<&GridFunction>,
) -> Result<Reconstruction> {
    spec.validate()?;
    check_grid(phi)?;
    job.validate()?;
    let s = spec.alpha / 2.0;
    if (job.order_exponent - s).abs() > 1e-15 {
        return Err(Error::InvalidInput(format!(
            "job exponent {} differs from alpha/2 = {s}",
            job.order_exponent
        )));
    }
    let report = mu.check_inversion(s, s + 1.0)?;
    if !report.passes {
        return Err(Error::NotAdmissible(inversion_failure(&report)));
    }
    let c = mu.c_constant(ConstantOrder::Alpha(s))?;
    if c.abs() < ZERO_CONSTANT {
        return Err(Error::ZeroConstant(c));
    }

    let integrand = ScaleIntegrand::new(mu, s);
    let (rates, index) = rate_classes(phi.spec(), spec.weighted());
    let slowest = rates
        .iter()
        .map(|r| r.norm())
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min);
    let t_max = scale_limit(&integrand, slowest, job)?;
    let rules = segment_rules(job, t_max);
    let gl = gauss_legendre(GL_ORDER);
    let responses: Vec<Vec<Complex64>> = rates
        .par_iter()
        .map(|&r| {
            if r.norm() == 0.0 {
                return vec![Complex64::new(0.0, 0.0); job.epsilons.len()];
            }
            let ray = Complex64::from_polar(1.0, r.arg() * s);
            sweep(&integrand, &rules, t_max, r.norm())
                .into_iter()
                .zip(&job.epsilons)
                .map(|(v, &eps)| ray * v + arc_term(&integrand, eps, r, &gl))
                .collect()
        })
        .collect();
    let estimates = apply_responses(phi, &index, job.epsilons.len(), c, |k, u| responses[u][k])?;
    assemble(estimates, job, reference, c, t_max)
}

/// Exponent `q = (n + 2) p / (n + 2 - αp)` of the parabolic Sobolev theorem.
pub fn sobolev_exponent(n: usize, p: f64, alpha: f64) -> Result<f64> {
    let d = n as f64 + 2.0;
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must be at least 1, got {p}")));
    }
    if !(alpha > 0.0 && alpha < d / p) {
        return Err(Error::Domain(format!("need 0 < alpha < (n+2)/p, got alpha = {alpha}")));
    }
    Ok(d * p / (d - alpha * p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::make_fd_measure;
    use crate::quadrature::gauss_legendre_panels;

    fn bump(spec: &GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |p| {
            let r2 = p[0] * p[0] / 9.0 + p[1] * p[1] / 16.0;
            if r2 < 1.0 {
                (1.0 - 1.0 / (1.0 - r2)).exp() * (1.0 + 0.2 * p[1])
            } else {
                0.0
            }
        })
    }

    fn grid() -> GridSpec {
        ParabolicGrid::cube(1, 64, 8.0, 64, 10.0).unwrap().spec().clone()
    }

    #[test]
    fn constant_and_single_mode() {
        let spec = grid();
        let one = GridFunction::constant(&spec, 1.0);
        let h = parabolic_potential(&ParabolicSpec::new(false, 1.3), &one).unwrap();
        assert!((h.max_abs() - 1.0).abs() < 1e-14 && h.is_real());
        let m = ParabolicSpec::new(true, 2.0).symbol(&[1.0, 1.0]);
        assert!((m.norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((m.arg() + PI / 4.0).abs() < 1e-15);
        assert!(matches!(
            parabolic_potential(&ParabolicSpec::new(true, 1.0), &one),
            Err(Error::NonZeroMean(_))
        ));
    }

    #[test]
    fn heat_route_matches_multiplier() {
        let spec = grid();
        let f = bump(&spec);
        for alpha in [1.0, 1.5, 3.0] {
            let p = ParabolicSpec::new(false, alpha);
            let a = parabolic_potential(&p, &f).unwrap();
            let b = parabolic_potential_heat(&p, &f).unwrap();
            assert!(a.is_real() && b.is_real());
            let e = b.relative_error(&a, 2.0).unwrap();
            assert!(e < 1e-9, "alpha {alpha}: {e:e}");
        }
    }

    #[test]
    fn potentials_compose() {
        let spec = grid();
        let f = bump(&spec);
        let a = parabolic_potential(&ParabolicSpec::new(false, 0.7), &f).unwrap();
        let ab = parabolic_potential(&ParabolicSpec::new(false, 0.6), &a).unwrap();
        let direct = parabolic_potential(&ParabolicSpec::new(false, 1.3), &f).unwrap();
        assert!(ab.relative_error(&direct, 2.0).unwrap() < 1e-10);
    }

    #[test]
    fn wavelet_basics() {
        let spec = grid();
        let f = bump(&spec);
        let p = ParabolicSpec::new(true, 1.0);
        let delta = WaveletMeasure::new(vec![(1.0, 1.0)], None).unwrap();
        let g = parabolic_wavelet(&p, &delta, &f, 1e-4).unwrap();
        assert!(g.sub(&f).unwrap().max_abs() <= 1e-3 * f.max_abs());
        let d1m2 = WaveletMeasure::new(vec![(1.0, 1.0), (2.0, -1.0)], None).unwrap();
        let c = parabolic_wavelet(&p, &d1m2, &GridFunction::constant(&spec, 3.0), 0.5).unwrap();
        assert!(c.max_abs() < 1e-14);
        let fd1 = make_fd_measure(1).unwrap();
        assert!(matches!(parabolic_wavelet(&p, &fd1, &f, 1.0), Err(Error::AtomAtZero)));
    }

    #[test]
    fn wavelet_mode_action_and_parabolic_scaling() {
        let spec = grid();
        let (k, j) = (3usize, 5usize);
        let (xi, tau) = (spec.frequency(0, k), spec.frequency(1, j));
        let mode = GridFunction::from_complex_fn(&spec, |p| Complex64::from_polar(1.0, p[0] * xi + p[1] * tau));
        let mu = WaveletMeasure::new(vec![(0.5, 2.0), (1.5, -1.0), (3.0, -1.0)], None).unwrap();
        let a = 0.3;
        let out = parabolic_wavelet(&ParabolicSpec::new(false, 1.0), &mu, &mode, a).unwrap();
        let expect: Complex64 = [(0.5, 2.0), (1.5, -1.0), (3.0, -1.0)]
            .iter()
            .map(|&(eta, c)| c * (-a * eta * Complex64::new(1.0 + xi * xi, tau)).exp())
            .sum();
        let want = mode.map(|v| v * expect);
        assert!(out.sub(&want).unwrap().max_abs() < 1e-8);
        // a → λa is the same as (ξ, τ) → (√λ ξ, λ τ)
        let lambda = 2.7;
        let m = |a: f64, x: f64, t: f64| -> Complex64 {
            mu.discrete()
                .map(|(eta, c)| c * (-a * eta * Complex64::new(x * x, t)).exp())
                .sum()
        };
        let lhs = m(lambda * a, xi, tau);
        let rhs = m(a, lambda.sqrt() * xi, lambda * tau);
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn heat_kernel_unit_mass() {
        let (x, w) = gauss_legendre_panels(-40.0, 40.0, 80, 16);
        for s in [0.1, 1.0, 7.0] {
            let mass: f64 = x.iter().zip(&w).map(|(&y, &wy)| wy * heat_kernel(&[y], s)).sum();
            assert!((mass - 1.0).abs() < 1e-8, "{mass}");
        }
    }

    #[test]
    fn arc_and_ray_match_real_axis() {
        // direct ∫_ε^T μ̃(aR) a^{-1-s} da on a fine linear-in-log grid
        let mu = WaveletMeasure::new(vec![(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)], None).unwrap();
        let s = 0.5;
        let integrand = ScaleIntegrand::new(&mu, s);
        let eps = 1e-2;
        let r = Complex64::new(0.7, 2.3);
        let gl = gauss_legendre(GL_ORDER);
        let job = InversionJob::new(s, vec![eps]);
        let t_max = 1e4;
        let rules = segment_rules(&job, t_max);
        let contour = Complex64::from_polar(1.0, r.arg() * s) * sweep(&integrand, &rules, t_max, r.norm())[0]
            + arc_term(&integrand, eps, r, &gl);
        let (u, w) = gauss_legendre_panels(eps.ln(), t_max.ln(), 20000, 16);
        let direct: Complex64 = u
            .iter()
            .zip(&w)
            .map(|(&u, &w)| {
                let a = u.exp();
                let m: Complex64 = mu.discrete().map(|(eta, c)| c * (-a * eta * r).exp()).sum();
                m * (w * a.powf(-s))
            })
            .sum();
        // the real-axis tail beyond T is O(T^{-1-s}) and oscillates
        assert!(
            (contour - direct).norm() < 1e-6 * direct.norm(),
            "{contour} vs {direct}"
        );
    }

    #[test]
    fn inversion_weighted_and_homogeneous() {
        let spec = grid();
        let f = bump(&spec);
        let mu = make_fd_measure(1).unwrap();
        let p = ParabolicSpec::new(false, 1.0);
        let phi = parabolic_potential(&p, &f).unwrap();
        let rec = invert_parabolic(&p, &mu, &phi, &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5], Some(&f)).unwrap();
        assert!(rec.record.is_non_increasing(), "{:?}", rec.record);
        // the dropped head is about 2√(ε|R|)/c_{1/2,μ}
        assert!(rec.record.at(1e-3).unwrap().rel_l2 < 3e-2, "{:?}", rec.record);
        assert!(rec.record.last().unwrap().rel_l2 < 1e-2, "{:?}", rec.record);

        let g = f.without_mean();
        let h = ParabolicSpec::new(true, 1.0);
        let phi = parabolic_potential(&h, &g).unwrap();
        let rec = invert_parabolic(&h, &mu, &phi, &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5], Some(&g)).unwrap();
        assert!(rec.record.last().unwrap().rel_l2 < 2e-2, "{:?}", rec.record);

        let zero = GridFunction::zeros(&spec);
        let rec = invert_parabolic(&p, &mu, &zero, &[1e-1, 1e-2], None).unwrap();
        assert_eq!(rec.estimate.max_abs(), 0.0);
    }

    #[test]
    fn sobolev_exponents() {
        assert_eq!(sobolev_exponent(1, 2.0, 1.0).unwrap(), 6.0);
        assert_eq!(sobolev_exponent(2, 1.0, 2.0).unwrap(), 2.0);
        assert!((sobolev_exponent(3, 1.5, 1e-9).unwrap() - 1.5).abs() < 1e-8);
        assert!(sobolev_exponent(1, 2.0, 1.5).is_err());
        assert!(sobolev_exponent(1, 0.5, 0.1).is_err());
    }
}
