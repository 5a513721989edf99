//! Riesz, Bessel, Flett and Beta potentials, by spectral multiplier and by
//! semigroup time integral.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, MAX_DIM};
use crate::quadrature::{tanh_sinh, LogTrapezoid};
use crate::semigroup::SemigroupFamily;
use crate::special::gamma;
use crate::spectral::{apply_multiplier, apply_table, norm, SpectralMultiplier};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative mean tolerated on inputs that must have zero mean.
pub const MEAN_TOLERANCE: f64 = 1e-10;
/// Time span over which `e^{-tR}` must decay before the integral is truncated.
const DECAY_SPAN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Riesz,
    Bessel,
    Flett,
    BesselBeta,
}

/// Semigroup used for the Bessel potential's time integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselRoute {
    #[default]
    GaussWeierstrass,
    Metaharmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub alpha: f64,
    /// Required for `BesselBeta`; for `Riesz` it selects the Beta semigroup.
    pub beta: Option<f64>,
    #[serde(default)]
    pub bessel_route: BesselRoute,
}

/// `(1/Γ(p)) ∫_0^∞ t^{p-1} e^{-t·damping} S_t dt` with `S_t = e^{-tσ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TimeIntegral {
    power: f64,
    damping: f64,
    family: SemigroupFamily,
}

impl PotentialSpec {
    pub fn riesz(alpha: f64) -> Self {
        Self::new(PotentialKind::Riesz, alpha, None)
    }

    pub fn bessel(alpha: f64) -> Self {
        Self::new(PotentialKind::Bessel, alpha, None)
    }

    pub fn flett(alpha: f64) -> Self {
        Self::new(PotentialKind::Flett, alpha, None)
    }

    pub fn bessel_beta(alpha: f64, beta: f64) -> Self {
        Self::new(PotentialKind::BesselBeta, alpha, Some(beta))
    }

    pub fn new(kind: PotentialKind, alpha: f64, beta: Option<f64>) -> Self {
        Self {
            kind,
            alpha,
            beta,
            bessel_route: BesselRoute::default(),
        }
    }

    pub fn with_bessel_route(mut self, route: BesselRoute) -> Self {
        self.bessel_route = route;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Domain(format!("beta must be positive, got {b}")));
            }
        }
        match self.kind {
            PotentialKind::Riesz if self.alpha >= dim as f64 => Err(Error::Domain(format!(
                "Riesz potentials need 0 < alpha < n = {dim}, got {}",
                self.alpha
            ))),
            PotentialKind::BesselBeta if self.beta.is_none() => {
                Err(Error::InvalidInput("Beta potentials need beta".into()))
            }
            _ => Ok(()),
        }
    }

    /// Symbol at `|ξ| = s`.
    pub fn symbol(&self, s: f64) -> f64 {
        let a = self.alpha;
        match self.kind {
            PotentialKind::Riesz => s.powf(-a),
            PotentialKind::Bessel => (1.0 + s * s).powf(-a / 2.0),
            PotentialKind::Flett => (1.0 + s).powf(-a),
            PotentialKind::BesselBeta => {
                let b = self.beta.unwrap_or(2.0);
                (1.0 + s.powf(b)).powf(-a / b)
            }
        }
    }

    pub fn multiplier(&self) -> SpectralMultiplier<'static> {
        let spec = *self;
        let eval = move |xi: &[f64]| Complex64::new(spec.symbol(norm(xi)), 0.0);
        if self.kind == PotentialKind::Riesz {
            SpectralMultiplier::singular(eval).with_zero_value(Complex64::new(0.0, 0.0))
        } else {
            SpectralMultiplier::new(eval)
        }
    }

    fn time_integral(&self) -> TimeIntegral {
        let a = self.alpha;
        match (self.kind, self.beta) {
            (PotentialKind::Riesz, None) => TimeIntegral {
                power: a,
                damping: 0.0,
                family: SemigroupFamily::Poisson,
            },
            (PotentialKind::Riesz, Some(b)) => TimeIntegral {
                power: a / b,
                damping: 0.0,
                family: SemigroupFamily::Beta { beta: b },
            },
            (PotentialKind::Bessel, _) => match self.bessel_route {
                BesselRoute::GaussWeierstrass => TimeIntegral {
                    power: a / 2.0,
                    damping: 1.0,
                    family: SemigroupFamily::GaussWeierstrass,
                },
                BesselRoute::Metaharmonic => TimeIntegral {
                    power: a,
                    damping: 0.0,
                    family: SemigroupFamily::Metaharmonic,
                },
            },
            (PotentialKind::Flett, _) => TimeIntegral {
                power: a,
                damping: 1.0,
                family: SemigroupFamily::Poisson,
            },
            (PotentialKind::BesselBeta, b) => {
                let b = b.unwrap_or(2.0);
                TimeIntegral {
                    power: a / b,
                    damping: 1.0,
                    family: SemigroupFamily::Beta { beta: b },
                }
            }
        }
    }
}

/// Geometric trapezoid rule for time integrals over `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeQuadrature {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes_per_decade: usize,
}

impl Default for TimeQuadrature {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 60.0,
            nodes_per_decade: 32,
        }
    }
}

impl TimeQuadrature {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min) {
            return Err(Error::InvalidInput(format!(
                "need 0 < t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.nodes_per_decade < 16 {
            return Err(Error::InvalidInput(format!(
                "need at least 16 nodes per decade, got {}",
                self.nodes_per_decade
            )));
        }
        if self.t_min > 1e-4 || self.t_max < 40.0 {
            return Err(Error::InvalidInput(format!(
                "time range [{}, {}] does not cover [1e-4, 40]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }
}

pub(crate) fn ensure_zero_mean(f: &GridFunction) -> Result<()> {
    let mean = f.mean().norm();
    let scale = f.max_abs();
    if mean > MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonZeroMean(mean));
    }
    Ok(())
}

/// Potential by its Fourier multiplier.
pub fn potential_multiplier(spec: &PotentialSpec, f: &GridFunction) -> Result<GridFunction> {
    spec.validate(f.spec().dim())?;
    if spec.kind == PotentialKind::Riesz {
        ensure_zero_mean(f)?;
    }
    apply_multiplier(f, &spec.multiplier())
}

/// Potential by its semigroup time integral.
///
/// The integral `(1/Γ(p)) ∫ t^{p-1} e^{-ct} S_t f dt` is discretized by the
/// geometric trapezoid rule with Euler-Maclaurin end corrections, plus the
/// two-term Taylor head on `(0, t_min)`. Since every `S_t` is diagonal in the
/// DFT basis the weighted sum over nodes is accumulated frequency by frequency.
/// When the slowest nonzero rate has not decayed by `t_max`, the upper limit is
/// extended. The result is recomputed with twice the node density and
/// [`Error::QuadratureUnderresolved`] is returned if the two differ by more
/// than `1e-6` relative.
pub fn potential_semigroup(spec: &PotentialSpec, f: &GridFunction, tq: &TimeQuadrature) -> Result<GridFunction> {
    spec.validate(f.spec().dim())?;
    tq.validate()?;
    let riesz = spec.kind == PotentialKind::Riesz;
    if riesz {
        ensure_zero_mean(f)?;
    }
    let ti = spec.time_integral();
    let rates = rate_table(f.spec(), &ti);
    let slowest = rates.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
    let t_max = tq.t_max.max(DECAY_SPAN / slowest);
    if t_max > tq.t_max {
        log::debug!("time integral extended to t = {t_max:.3e} for the slowest rate {slowest:.3e}");
    }
    let coarse = time_integral_table(&rates, ti.power, tq.t_min, t_max, tq.nodes_per_decade)?;
    let fine = time_integral_table(&rates, ti.power, tq.t_min, t_max, 2 * tq.nodes_per_decade)?;
    let (num, den) = coarse
        .iter()
        .zip(&fine)
        .fold((0.0, 0.0), |(n, d), (c, f)| (n + (c - f) * (c - f), d + f * f));
    let shift = (num / den.max(f64::MIN_POSITIVE)).sqrt();
    if shift > 1e-6 {
        return Err(Error::QuadratureUnderresolved(shift));
    }
    let mut table: Vec<Complex64> = fine.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    if riesz {
        table[0] = Complex64::new(0.0, 0.0);
    }
    apply_table(f, &table)
}

fn rate_table(spec: &GridSpec, ti: &TimeIntegral) -> Vec<f64> {
    let d = spec.dim();
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let mut xi = [0.0; MAX_DIM];
            spec.frequency_vector(i, &mut xi[..d]);
            ti.damping + ti.family.sigma(norm(&xi[..d]))
        })
        .collect()
}

/// `(1/Γ(p)) ∫_0^{t_max} t^{p-1} e^{-tR} dt` for every rate `R` in `rates`.
fn time_integral_table(rates: &[f64], p: f64, t_min: f64, t_max: f64, npd: usize) -> Result<Vec<f64>> {
    let rule = LogTrapezoid::new(t_min, t_max, npd);
    let inv_gamma = 1.0 / gamma(p)?;
    Ok(rates
        .par_iter()
        .map(|&r| inv_gamma * truncated_gamma_integral(&rule, p, r))
        .collect())
}

/// `∫_0^{t1} t^{p-1} e^{-tR} dt` on the rule's nodes with head and end corrections.
pub(crate) fn truncated_gamma_integral(rule: &LogTrapezoid, p: f64, r: f64) -> f64 {
    let t0 = rule.t0();
    let head = t0.powf(p) / p - r * t0.powf(p + 1.0) / (p + 1.0);
    let body: f64 = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&t, &w)| w * t.powf(p - 1.0) * (-t * r).exp())
        .sum();
    // G(u) = t^p e^{-tR}, G'(u) = t^p e^{-tR} (p - tR)
    let dg = |t: f64| t.powf(p) * (-t * r).exp() * (p - t * r);
    head + body + rule.end_correction(dg(t0), dg(rule.t1()))
}

/// Right side of the Poisson-Riesz intertwining identity on a single mode,
/// `(1/Γ(α)) ∫_t^∞ (s-t)^{α-1} e^{-s|ξ|} ds`, truncated where the integrand
/// falls below `1e-16` of its peak.
pub fn intertwining_rhs(alpha: f64, xi_norm: f64, t: f64) -> Result<f64> {
    if !(xi_norm > 0.0) {
        return Err(Error::Domain("intertwining needs a nonzero frequency".into()));
    }
    // integrand u^{α-1} e^{-(t+u)|ξ|}; its peak is at u = (α-1)/|ξ| when α > 1
    let peak_u = ((alpha - 1.0) / xi_norm).max(0.0);
    let log_g = |u: f64| (alpha - 1.0) * u.ln() - u * xi_norm;
    let mut top = peak_u.max(1.0 / xi_norm);
    let floor = if peak_u > 0.0 { log_g(peak_u) } else { log_g(top) } - 16.0 * std::f64::consts::LN_10;
    while log_g(top) > floor {
        top *= 1.5;
    }
    let mut pts = vec![0.0];
    if peak_u > 0.0 {
        pts.push(peak_u);
    }
    pts.push(top);
    let mut acc = 0.0;
    for w in pts.windows(2) {
        acc += tanh_sinh(|u| u.powf(alpha - 1.0) * (-u * xi_norm).exp(), w[0], w[1], 1e-14);
    }
    Ok(acc * (-t * xi_norm).exp() / gamma(alpha)?)
}
