//! Poisson, Gauss-Weierstrass, metaharmonic and Beta semigroups.
//!
//! Each family is a convolution semigroup `S_t` with Fourier multiplier
//! `e^{-t σ(ξ)}`. On grids the multiplier form is used; the spatial kernels are
//! available for point evaluation and cross-validation.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::special::{gamma, mcdonald_k};
use crate::spectral::{apply_multiplier, apply_table, discrete_delta, norm, SpectralMultiplier};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const NOISE_FLOOR: f64 = 1e-14;
const MAX_TABLE_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SemigroupFamily {
    Poisson,
    GaussWeierstrass,
    Metaharmonic,
    Beta { beta: f64 },
}

impl SemigroupFamily {
    pub fn beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self::Beta { beta })
    }

    /// Exponent `σ` of the multiplier `e^{-tσ}` at `|ξ| = s`.
    pub fn sigma(&self, s: f64) -> f64 {
        match *self {
            Self::Poisson => s,
            Self::GaussWeierstrass => s * s,
            Self::Metaharmonic => (1.0 + s * s).sqrt(),
            Self::Beta { beta } => s.powf(beta),
        }
    }

    pub fn multiplier(&self, t: f64) -> SpectralMultiplier<'static> {
        let family = *self;
        SpectralMultiplier::real(move |xi| (-t * family.sigma(norm(xi))).exp())
    }

    /// Spatial kernel `q(y, t)`; Beta kernels are computed numerically.
    pub fn kernel_eval(&self, y: &[f64], t: f64) -> Result<f64> {
        check_time(t)?;
        let n = y.len();
        if n == 0 {
            return Err(Error::Domain("empty point".into()));
        }
        let nf = n as f64;
        let r2: f64 = y.iter().map(|v| v * v).sum();
        match *self {
            Self::Poisson => {
                let c = gamma((nf + 1.0) / 2.0)? * PI.powf(-(nf + 1.0) / 2.0);
                Ok(c * t * (t * t + r2).powf(-(nf + 1.0) / 2.0))
            }
            Self::GaussWeierstrass => Ok((4.0 * PI * t).powf(-nf / 2.0) * (-r2 / (4.0 * t)).exp()),
            Self::Metaharmonic => {
                let nu = (nf + 1.0) / 2.0;
                let r = (r2 + t * t).sqrt();
                Ok(2.0 * t * (2.0 * PI).powf(-nu) * mcdonald_k(nu, r)? / r.powf(nu))
            }
            Self::Beta { beta } => {
                let s = t.powf(-1.0 / beta);
                let r = r2.sqrt() * s;
                let table = beta_kernel(beta, n, &BetaResolution::for_radius(r.max(1.0)))?;
                Ok(s.powf(nf) * table.eval(r)?)
            }
        }
    }

    /// Radial profile `q(r, t)` at many radii, building any table only once.
    pub fn radial_profile(&self, dim: usize, t: f64, radii: &[f64]) -> Result<Vec<f64>> {
        check_time(t)?;
        match *self {
            Self::Beta { beta } => {
                let s = t.powf(-1.0 / beta);
                let r_max = radii.iter().fold(1.0f64, |m, &r| m.max(r.abs() * s));
                let table = beta_kernel(beta, dim, &BetaResolution::for_radius(r_max))?;
                radii
                    .iter()
                    .map(|&r| Ok(s.powf(dim as f64) * table.eval(r.abs() * s)?))
                    .collect()
            }
            _ => {
                let mut y = vec![0.0; dim];
                radii
                    .iter()
                    .map(|&r| {
                        y[0] = r;
                        self.kernel_eval(&y, t)
                    })
                    .collect()
            }
        }
    }

    /// `∫ q(y, t) dy`, i.e. the multiplier at `ξ = 0`.
    pub fn total_mass(&self, t: f64) -> f64 {
        (-t * self.sigma(0.0)).exp()
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// `S_t f` through the multiplier `e^{-tσ(ξ)}`.
pub fn apply_semigroup(family: &SemigroupFamily, f: &GridFunction, t: f64) -> Result<GridFunction> {
    check_time(t)?;
    apply_multiplier(f, &family.multiplier(t))
}

/// Tail constant `c_β = -2^β π^{-n/2} Γ((n+β)/2) / Γ(-β/2)`, zero for even `β`.
pub fn beta_tail_constant(beta: f64, dim: usize) -> Result<f64> {
    if is_even_integer(beta) {
        return Ok(0.0);
    }
    let n = dim as f64;
    Ok(-(2f64.powf(beta)) * PI.powf(-n / 2.0) * gamma((n + beta) / 2.0)? / gamma(-beta / 2.0)?)
}

fn is_even_integer(x: f64) -> bool {
    x == x.round() && (x.round() as i64) % 2 == 0
}

/// How far out a Beta kernel table must reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaResolution {
    /// Largest radius at which the kernel will be read.
    pub r_max: f64,
    /// Lower bound on the box half width.
    pub min_half_width: f64,
    /// Upper bound on the radial sample spacing.
    pub max_spacing: f64,
}

impl BetaResolution {
    pub fn for_radius(r_max: f64) -> Self {
        Self {
            r_max,
            min_half_width: 1024.0,
            max_spacing: 1.0 / 16.0,
        }
    }
}

impl Default for BetaResolution {
    fn default() -> Self {
        Self::for_radius(40.0)
    }
}

/// Samples of the Beta kernel `w^{(β)}(y) = F⁻¹[e^{-|ξ|^β}](y)` at `t = 1`.
#[derive(Debug, Clone)]
pub struct BetaKernelTable {
    beta: f64,
    dim: usize,
    spacing: f64,
    /// Uniform samples at `r_j = j·spacing`.
    dense: Vec<f64>,
    radii: Vec<f64>,
    values: Vec<f64>,
    tail_constant: f64,
}

/// Build the Beta kernel by an oversampled inverse DFT.
///
/// In one dimension the kernel is read off a long periodic line; for `n ≥ 2`
/// samples are taken along the first axis of an `n`-dimensional grid.
pub fn beta_kernel(beta: f64, dim: usize, res: &BetaResolution) -> Result<BetaKernelTable> {
    SemigroupFamily::beta(beta)?;
    if dim == 0 || dim > 3 {
        return Err(Error::Domain(format!("Beta kernels are built for n <= 3, got {dim}")));
    }
    if !(res.r_max > 0.0) {
        return Err(Error::Domain("r_max must be positive".into()));
    }
    // Frequencies beyond xi_max carry e^{-40} of the mass.
    let xi_max = 40f64.powf(1.0 / beta);
    let (half_width, n_axis) = if dim == 1 {
        let l = (4.0 * res.r_max).max(res.min_half_width);
        let by_freq = 2.0 * l * xi_max / PI;
        let by_space = 2.0 * l / res.max_spacing;
        (l, by_freq.max(by_space).ceil() as usize)
    } else {
        let l = (4.0 * res.r_max).max(64.0);
        (l, (2.0 * l * xi_max / PI).ceil() as usize)
    };
    let n_axis = n_axis.max(8).next_power_of_two();
    if n_axis.saturating_pow(dim as u32) > MAX_TABLE_POINTS {
        return Err(Error::Resolution(format!(
            "a {dim}-dimensional Beta kernel with beta = {beta} out to r = {} needs {n_axis} points per axis",
            res.r_max
        )));
    }
    let spec = GridSpec::cube(dim, n_axis, half_width)?;
    let table: Vec<Complex64> = {
        let m = SemigroupFamily::Beta { beta }.multiplier(1.0);
        m.table(&spec)?
    };
    let k = apply_table(&discrete_delta(&spec), &table)?;
    let stride: usize = spec.sizes()[1..].iter().product();
    let origin = spec.origin_index();
    let spacing = spec.spacing(0);
    let dense: Vec<f64> = (0..=n_axis / 2 - 1)
        .map(|j| k.values()[origin + j * stride].re)
        .collect();
    let r_top = spacing * (dense.len() - 6) as f64;
    let r_lo = spacing;
    let per_decade = 64.0;
    let count = ((r_top / r_lo).log10() * per_decade).floor() as usize + 1;
    let radii: Vec<f64> = (0..count).map(|i| r_lo * 10f64.powf(i as f64 / per_decade)).collect();
    let mut tbl = BetaKernelTable {
        beta,
        dim,
        spacing,
        dense,
        radii,
        values: Vec::new(),
        tail_constant: beta_tail_constant(beta, dim)?,
    };
    tbl.values = tbl.radii.iter().map(|&r| tbl.interpolate(r)).collect();
    Ok(tbl)
}

impl BetaKernelTable {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// Log-spaced radii and the kernel values there.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Uniform samples `(j·h, w(j·h))`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.dense
            .iter()
            .enumerate()
            .map(move |(j, &v)| (j as f64 * self.spacing, v))
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Largest radius at which [`Self::eval`] is defined.
    pub fn max_radius(&self) -> f64 {
        self.spacing * (self.dense.len() - 6) as f64
    }

    /// Kernel at radius `r` (t = 1), by ten-point interpolation.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let r = r.abs();
        if r > self.max_radius() {
            return Err(Error::Resolution(format!(
                "radius {r} beyond the table range {}",
                self.max_radius()
            )));
        }
        Ok(self.interpolate(r))
    }

    /// `w^{(β)}(y, t) = t^{-n/β} w^{(β)}(t^{-1/β} y)`.
    pub fn eval_scaled(&self, r: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        let s = t.powf(-1.0 / self.beta);
        Ok(s.powf(self.dim as f64) * self.eval(r * s)?)
    }

    fn sample(&self, j: i64) -> f64 {
        self.dense[j.unsigned_abs() as usize]
    }

    fn interpolate(&self, r: f64) -> f64 {
        let u = r / self.spacing;
        let j = u.floor() as i64;
        let s = u - j as f64;
        if s == 0.0 {
            return self.sample(j);
        }
        // Lagrange interpolation through the ten samples j-4..=j+5.
        let mut acc = 0.0;
        for a in -4i64..=5 {
            let mut w = 1.0;
            for b in -4i64..=5 {
                if b != a {
                    w *= (s - b as f64) / (a - b) as f64;
                }
            }
            acc += w * self.sample(j + a);
        }
        acc
    }

    /// Smallest sample value, used as a positivity check.
    pub fn min_value(&self) -> f64 {
        self.dense.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Result of a log-log fit of the kernel tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Least-squares slope of `ln|w|` against `ln r`.
    pub slope: f64,
    /// Least-squares constant `c` of `c·r^{-(n+β)}` with the exponent held fixed.
    pub prefactor: f64,
    /// `e^{intercept}` of the free-slope fit.
    pub free_prefactor: f64,
    pub expected_slope: f64,
    pub expected_prefactor: f64,
}

/// Fit the kernel tail on `[r_min, r_max]` with 64 log-spaced samples.
pub fn verify_beta_tail(table: &BetaKernelTable, r_min: f64, r_max: f64) -> Result<TailFit> {
    if is_even_integer(table.beta) {
        return Err(Error::EvenBeta(table.beta));
    }
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::Domain(format!("bad fit range [{r_min}, {r_max}]")));
    }
    let samples = 64;
    let exponent = table.dim as f64 + table.beta;
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = r_min * (r_max / r_min).powf(i as f64 / (samples - 1) as f64);
        let w = table.eval(r)?;
        if w.abs() < NOISE_FLOOR {
            return Err(Error::InsufficientDecay { radius: r, value: w });
        }
        xs.push(r.ln());
        ys.push(w.abs().ln());
    }
    let (slope, intercept) = least_squares_line(&xs, &ys)?;
    let fixed = xs.iter().zip(&ys).map(|(x, y)| y + exponent * x).sum::<f64>() / samples as f64;
    Ok(TailFit {
        slope,
        prefactor: fixed.exp(),
        free_prefactor: intercept.exp(),
        expected_slope: -exponent,
        expected_prefactor: table.tail_constant,
    })
}

/// Ordinary least squares `y ≈ a x + b`, returning `(a, b)`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::DegenerateFit);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    Ok((a, my - a * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::exp_sinh;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_kernels_at_origin() {
        let p = SemigroupFamily::Poisson.kernel_eval(&[0.0], 1.0).unwrap();
        assert_relative_eq!(p, 1.0 / PI, max_relative = 1e-14);
        let w = SemigroupFamily::GaussWeierstrass.kernel_eval(&[0.0], 1.0).unwrap();
        assert_relative_eq!(w, (4.0 * PI).powf(-0.5), max_relative = 1e-14);
        let m = SemigroupFamily::Metaharmonic.kernel_eval(&[0.0], 1.0).unwrap();
        assert_relative_eq!(m, mcdonald_k(1.0, 1.0).unwrap() / PI, max_relative = 1e-14);
        assert!((m - 0.1915).abs() < 1e-4);
        assert!(SemigroupFamily::Poisson.kernel_eval(&[0.0], 0.0).is_err());
    }

    #[test]
    fn kernels_have_expected_mass() {
        for family in [
            SemigroupFamily::Poisson,
            SemigroupFamily::GaussWeierstrass,
            SemigroupFamily::Metaharmonic,
        ] {
            for n in 1..=3usize {
                // ∫ q dy = |S^{n-1}| ∫_0^∞ q(r) r^{n-1} dr
                let sphere = 2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0).unwrap();
                let radial = exp_sinh(
                    |r| {
                        let mut y = vec![0.0; n];
                        y[0] = r;
                        family.kernel_eval(&y, 1.0).unwrap() * r.powi(n as i32 - 1)
                    },
                    0.0,
                    1e-13,
                );
                assert_relative_eq!(sphere * radial, family.total_mass(1.0), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn beta_two_is_gaussian() {
        let t = beta_kernel(2.0, 1, &BetaResolution::default()).unwrap();
        for (r, v) in t.samples().take(1000) {
            let exact = (4.0 * PI).powf(-0.5) * (-r * r / 4.0).exp();
            assert!((v - exact).abs() < 1e-10, "r = {r}");
        }
        assert_eq!(t.tail_constant(), 0.0);
    }

    #[test]
    fn beta_one_is_poisson_with_tail_constant() {
        let t = beta_kernel(1.0, 1, &BetaResolution::default()).unwrap();
        for (r, v) in t.samples().take_while(|(r, _)| *r <= 40.0) {
            assert!((v - 1.0 / (PI * (1.0 + r * r))).abs() < 1e-6, "r = {r}");
        }
        assert_relative_eq!(t.tail_constant(), 1.0 / PI, max_relative = 1e-14);
        let fit = verify_beta_tail(&t, 10.0, 40.0).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.05);
        assert!((fit.prefactor * PI - 1.0).abs() < 0.05);
    }

    #[test]
    fn beta_kernels_are_nonnegative() {
        for beta in [0.5, 1.0, 1.5, 2.0] {
            let t = beta_kernel(beta, 1, &BetaResolution::default()).unwrap();
            assert!(t.min_value() >= -1e-8, "beta = {beta}: {}", t.min_value());
        }
    }

    #[test]
    fn even_beta_tail_rejected() {
        let t = beta_kernel(2.0, 1, &BetaResolution::default()).unwrap();
        assert!(matches!(verify_beta_tail(&t, 10.0, 40.0), Err(Error::EvenBeta(_))));
    }

    #[test]
    fn beta_scaling_against_grid_semigroup() {
        let beta = 1.5;
        let table = beta_kernel(beta, 1, &BetaResolution::for_radius(64.0)).unwrap();
        let spec = GridSpec::cube(1, 1 << 14, 2048.0).unwrap();
        let family = SemigroupFamily::Beta { beta };
        for t in [0.5, 2.0, 3.0] {
            let k = apply_semigroup(&family, &discrete_delta(&spec), t).unwrap();
            let origin = spec.origin_index();
            for j in [0usize, 3, 17, 40, 100] {
                let r = j as f64 * spec.spacing(0);
                let v = k.values()[origin + j].re;
                assert!((table.eval_scaled(r, t).unwrap() - v).abs() < 1e-8, "t = {t}, r = {r}");
            }
        }
    }

    #[test]
    fn semigroup_law_for_all_families() {
        let spec = GridSpec::cube(1, 512, 20.0).unwrap();
        let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0]).exp() * (3.0 * x[0]).cos());
        for family in [
            SemigroupFamily::Poisson,
            SemigroupFamily::GaussWeierstrass,
            SemigroupFamily::Metaharmonic,
            SemigroupFamily::Beta { beta: 0.5 },
            SemigroupFamily::Beta { beta: 1.5 },
        ] {
            let two = apply_semigroup(&family, &apply_semigroup(&family, &f, 0.3).unwrap(), 0.7).unwrap();
            let one = apply_semigroup(&family, &f, 1.0).unwrap();
            assert!(two.relative_error(&one, 2.0).unwrap() < 1e-10);
        }
    }

    #[test]
    fn semigroup_preserves_constants() {
        let spec = GridSpec::cube(2, 16, 3.0).unwrap();
        let one = GridFunction::constant(&spec, 1.0);
        let g = apply_semigroup(&SemigroupFamily::GaussWeierstrass, &one, 2.5).unwrap();
        assert!(g.relative_error(&one, f64::INFINITY).unwrap() < 1e-14);
        let m = apply_semigroup(&SemigroupFamily::Metaharmonic, &one, 2.5).unwrap();
        assert!(m.relative_error(&one.scale((-2.5f64).exp()), f64::INFINITY).unwrap() < 1e-14);
    }

    #[test]
    fn small_time_is_near_identity() {
        let spec = GridSpec::cube(1, 256, 10.0).unwrap();
        let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0]).exp());
        for family in [
            SemigroupFamily::Poisson,
            SemigroupFamily::GaussWeierstrass,
            SemigroupFamily::Metaharmonic,
            SemigroupFamily::Beta { beta: 1.5 },
        ] {
            let g = apply_semigroup(&family, &f, 1e-6).unwrap();
            assert!(g.sub(&f).unwrap().max_abs() <= 1e-4 * f.max_abs());
        }
    }

    #[test]
    fn two_dimensional_beta_kernel_matches_poisson() {
        let t = beta_kernel(1.0, 2, &BetaResolution::for_radius(4.0)).unwrap();
        for r in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let exact = SemigroupFamily::Poisson.kernel_eval(&[r, 0.0], 1.0).unwrap();
            let v = t.eval(r).unwrap();
            assert!((v - exact).abs() < 1e-3 * exact.max(1e-2), "r = {r}: {v} vs {exact}");
        }
    }
}
