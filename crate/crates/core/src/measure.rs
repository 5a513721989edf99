//! Wavelet measures: finite signed measures on `[0, ∞)` made of atoms and an
//! optional smooth density, with their admissibility data and constants.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_panels, tanh_sinh};
use crate::special::{binomial, gamma};
use serde::{Deserialize, Serialize};
use std::path::Path;

const DENSITY_SUPPORT: f64 = 12.0;
const NODES_PER_UNIT: usize = 64;
const ZERO_MASS_TOL: f64 = 1e-12;
const VANISHING_MOMENT_TOL: f64 = 1e-10;

/// Closed-form densities supported by the measure format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Density {
    /// `h^{(m)}(η)` with `h(η) = exp(-η² - η⁻²)`, `1 ≤ m ≤ 4`.
    SmoothH { m: u32 },
}

impl Density {
    pub fn eval(&self, eta: f64) -> f64 {
        match *self {
            Density::SmoothH { m } => smooth_h_derivative(m, eta),
        }
    }

    /// `∫_0^s` of the density.
    pub fn cumulative(&self, s: f64) -> f64 {
        match *self {
            Density::SmoothH { m } => smooth_h_derivative(m - 1, s),
        }
    }
}

/// `d^k/dη^k exp(-η² - η⁻²)` for `0 ≤ k ≤ 4`, zero for `η ≤ 0`.
pub fn smooth_h_derivative(k: u32, eta: f64) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    let h = (-eta * eta - 1.0 / (eta * eta)).exp();
    if h == 0.0 {
        return 0.0;
    }
    let e2 = eta * eta;
    let u1 = -2.0 * eta + 2.0 / (e2 * eta);
    let u2 = -2.0 - 6.0 / (e2 * e2);
    let u3 = 24.0 / (e2 * e2 * eta);
    let u4 = -120.0 / (e2 * e2 * e2);
    match k {
        0 => h,
        1 => h * u1,
        2 => h * (u2 + u1 * u1),
        3 => h * (u3 + 3.0 * u1 * u2 + u1 * u1 * u1),
        4 => h * (u4 + 4.0 * u1 * u3 + 3.0 * u2 * u2 + 6.0 * u1 * u1 * u2 + u1.powi(4)),
        _ => panic!("derivatives of h are tabulated up to order 4"),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureFile {
    atoms: Vec<[f64; 2]>,
    density: Option<Density>,
}

/// Atoms `c_j δ_{η_j}` plus an optional density discretized by Gauss-Legendre
/// panels on `(0, 12]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<Density>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Order of the normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantOrder {
    /// `c_μ = ∫ log(1/η) dμ` for the reproducing formula.
    Calderon,
    /// `c_{α,μ}` for potential inversion.
    Alpha(f64),
}

/// Moment data relevant to admissibility.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub total_mass: f64,
    pub total_variation: f64,
    /// `∫ |log η| d|μ|`, infinite with an atom at the origin.
    pub log_moment: f64,
    /// `∫ η^j dμ` for `j = 0, 1, …`.
    pub moments: Vec<f64>,
    /// How many leading moments must vanish.
    pub required_vanishing: usize,
    /// `∫_1^∞ η^γ d|μ|` when requested.
    pub gamma_moment: Option<f64>,
    pub passes: bool,
}

impl WaveletMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        for &(loc, w) in &atoms {
            if !(loc >= 0.0) || !loc.is_finite() || !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom ({loc}, {w}) is not a finite weight on [0, ∞)"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for pair in atoms.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidInput(format!("duplicate atom location {}", pair[0].0)));
            }
        }
        atoms.retain(|&(_, w)| w != 0.0);
        let (nodes, weights) = match density {
            None => (Vec::new(), Vec::new()),
            Some(Density::SmoothH { m }) => {
                if !(1..=4).contains(&m) {
                    return Err(Error::InvalidInput(format!(
                        "smooth_h density is tabulated for 1 <= m <= 4, got {m}"
                    )));
                }
                let panels = DENSITY_SUPPORT as usize;
                let (x, w) = gauss_legendre_panels(0.0, DENSITY_SUPPORT, panels, NODES_PER_UNIT);
                let d = Density::SmoothH { m };
                let weights = x.iter().zip(&w).map(|(&x, &w)| w * d.eval(x)).collect();
                (x, weights)
            }
        };
        Ok(Self {
            atoms,
            density,
            nodes,
            weights,
        })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<Density> {
        self.density
    }

    /// Atoms followed by the density quadrature nodes with their weights, so
    /// that `∫ g dμ ≈ Σ w g(η)`.
    pub fn discrete(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms
            .iter()
            .copied()
            .chain(self.nodes.iter().copied().zip(self.weights.iter().copied()))
    }

    /// `∫ g dμ`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.discrete().map(|(eta, w)| w * g(eta)).sum()
    }

    /// `∫ g d|μ|`.
    pub fn integrate_abs<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.discrete().map(|(eta, w)| w.abs() * g(eta)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn total_variation(&self) -> f64 {
        self.integrate_abs(|_| 1.0)
    }

    /// Weight of an atom at the origin.
    pub fn atom_at_zero(&self) -> f64 {
        self.atoms.iter().find(|a| a.0 == 0.0).map(|a| a.1).unwrap_or(0.0)
    }

    /// `∫ η^j dμ`.
    pub fn moment(&self, j: u32) -> f64 {
        self.integrate(|eta| if j == 0 { 1.0 } else { eta.powi(j as i32) })
    }

    fn log_moment(&self) -> f64 {
        if self.atom_at_zero() != 0.0 {
            return f64::INFINITY;
        }
        self.integrate_abs(|eta| eta.ln().abs())
    }

    /// Hypotheses of the reproducing formula: zero total mass and a finite
    /// logarithmic moment.
    pub fn check_calderon(&self) -> AdmissibilityReport {
        let total_mass = self.total_mass();
        let total_variation = self.total_variation();
        let log_moment = self.log_moment();
        let passes = total_mass.abs() <= ZERO_MASS_TOL && log_moment.is_finite();
        AdmissibilityReport {
            total_mass,
            total_variation,
            log_moment,
            moments: vec![total_mass],
            required_vanishing: 1,
            gamma_moment: None,
            passes,
        }
    }

    /// Hypotheses of potential inversion of order `α`: moments `0..=⌊α⌋`
    /// vanish and `∫_1^∞ η^γ d|μ| < ∞` for the given `γ > α`.
    pub fn check_inversion(&self, alpha: f64, gamma_exp: f64) -> Result<AdmissibilityReport> {
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("order must be nonnegative, got {alpha}")));
        }
        if !(gamma_exp > alpha) {
            return Err(Error::Domain(format!(
                "gamma = {gamma_exp} must exceed alpha = {alpha}"
            )));
        }
        let k = alpha.floor() as u32;
        let moments: Vec<f64> = (0..=k + 1).map(|j| self.moment(j)).collect();
        let total_variation = self.total_variation();
        let gamma_moment = self.integrate_abs(|eta| if eta >= 1.0 { eta.powf(gamma_exp) } else { 0.0 });
        let vanish = moments[..=k as usize]
            .iter()
            .all(|m| m.abs() <= VANISHING_MOMENT_TOL * total_variation);
        Ok(AdmissibilityReport {
            total_mass: moments[0],
            total_variation,
            log_moment: self.log_moment(),
            moments,
            required_vanishing: k as usize + 1,
            gamma_moment: Some(gamma_moment),
            passes: vanish && gamma_moment.is_finite(),
        })
    }

    /// `λ_α(s) = (s Γ(α+1))⁻¹ ∫_{[0,s)} (s-η)^α dμ(η)`.
    pub fn lambda_alpha(&self, alpha: f64, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("s must be positive, got {s}")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("order must be nonnegative, got {alpha}")));
        }
        let mut acc: f64 = self
            .atoms
            .iter()
            .filter(|a| a.0 < s)
            .map(|&(eta, c)| c * (s - eta).powf(alpha))
            .sum();
        if let Some(d) = self.density {
            let top = s.min(DENSITY_SUPPORT);
            acc += tanh_sinh(|eta| (s - eta).powf(alpha) * d.eval(eta), 0.0, top, 1e-13);
        }
        Ok(acc / (s * gamma(alpha + 1.0)?))
    }

    /// `k(s) = s⁻¹ μ([0, s))`, defined for measures passing
    /// [`Self::check_calderon`].
    pub fn calderon_k(&self, s: f64) -> Result<f64> {
        let report = self.check_calderon();
        if !report.passes {
            return Err(Error::NotAdmissible(calderon_failure(&report)));
        }
        if !(s > 0.0) {
            return Err(Error::Domain(format!("s must be positive, got {s}")));
        }
        let mut mass: f64 = self.atoms.iter().filter(|a| a.0 < s).map(|a| a.1).sum();
        if let Some(d) = self.density {
            mass += d.cumulative(s.min(DENSITY_SUPPORT));
        }
        Ok(mass / s)
    }

    /// Normalizing constant `c_μ` or `c_{α,μ}` in closed form.
    pub fn c_constant(&self, order: ConstantOrder) -> Result<f64> {
        let a0 = self.atom_at_zero();
        match order {
            ConstantOrder::Calderon => {
                if a0 != 0.0 {
                    return Err(Error::DivergentConstant(
                        "log(1/η) is not integrable against an atom at the origin".into(),
                    ));
                }
                Ok(self.integrate(|eta| -eta.ln()))
            }
            ConstantOrder::Alpha(alpha) => {
                if !(alpha >= 0.0) {
                    return Err(Error::Domain(format!("order must be nonnegative, got {alpha}")));
                }
                if alpha != alpha.round() {
                    let m = self.integrate(|eta| if eta == 0.0 { 0.0 } else { eta.powf(alpha) });
                    return Ok(gamma(-alpha)? * m);
                }
                let k = alpha.round() as i32;
                if k == 0 && a0 != 0.0 {
                    return Err(Error::DivergentConstant(
                        "log η is not integrable against an atom at the origin".into(),
                    ));
                }
                let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
                let fact = gamma(k as f64 + 1.0)?;
                let m = self.integrate(|eta| if eta == 0.0 { 0.0 } else { eta.powi(k) * eta.ln() });
                Ok(sign / fact * m)
            }
        }
    }

    /// `μ̃(t) = ∫ e^{-tη} dμ(η)`.
    pub fn laplace_transform(&self, t: f64) -> f64 {
        self.integrate(|eta| (-t * eta).exp())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)?;
        Self::new(file.atoms.iter().map(|a| (a[0], a[1])).collect(), file.density)
    }

    pub fn to_json(&self) -> String {
        let file = MeasureFile {
            atoms: self.atoms.iter().map(|a| [a.0, a.1]).collect(),
            density: self.density,
        };
        serde_json::to_string(&file).expect("measure serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn calderon_failure(report: &AdmissibilityReport) -> String {
    if report.log_moment.is_infinite() {
        "log moment is infinite (atom at the origin)".into()
    } else {
        format!("total mass {:e} is not zero", report.total_mass)
    }
}

pub(crate) fn inversion_failure(report: &AdmissibilityReport) -> String {
    let bad: Vec<String> = report.moments[..report.required_vanishing]
        .iter()
        .enumerate()
        .filter(|(_, m)| m.abs() > VANISHING_MOMENT_TOL * report.total_variation)
        .map(|(j, m)| format!("moment {j} = {m:e}"))
        .collect();
    if bad.is_empty() {
        "gamma moment diverges".into()
    } else {
        format!("non-vanishing {}", bad.join(", "))
    }
}

/// `dμ = h^{(m)}(η) dη`; requires `m > α` and `m ≤ 4`.
pub fn make_smooth_measure(m: u32, alpha: f64) -> Result<WaveletMeasure> {
    if !(m as f64 > alpha) {
        return Err(Error::InvalidInput(format!(
            "need m > alpha, got m = {m}, alpha = {alpha}"
        )));
    }
    WaveletMeasure::new(Vec::new(), Some(Density::SmoothH { m }))
}

/// Finite difference measure `Σ_{j=0}^m (-1)^j C(m, j) δ_j`.
pub fn make_fd_measure(m: u32) -> Result<WaveletMeasure> {
    if m == 0 {
        return Err(Error::InvalidInput("finite difference order must be at least 1".into()));
    }
    let atoms = (0..=m)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            (j as f64, sign * binomial(m, j))
        })
        .collect();
    WaveletMeasure::new(atoms, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{exp_sinh, piecewise_to_infinity};
    use approx::assert_relative_eq;
    use std::f64::consts::{LN_2, PI};

    fn d1m2() -> WaveletMeasure {
        WaveletMeasure::new(vec![(1.0, 1.0), (2.0, -1.0)], None).unwrap()
    }

    #[test]
    fn derivatives_of_h_match_finite_differences() {
        for k in 1..=4u32 {
            for &x in &[0.4, 0.9, 1.3, 2.2] {
                let e = 1e-5;
                let fd = (smooth_h_derivative(k - 1, x + e) - smooth_h_derivative(k - 1, x - e)) / (2.0 * e);
                assert!((fd - smooth_h_derivative(k, x)).abs() < 1e-6, "k = {k}, x = {x}");
            }
        }
    }

    #[test]
    fn calderon_checks() {
        let r = d1m2().check_calderon();
        assert!(r.passes);
        assert_eq!(r.total_mass, 0.0);
        assert_relative_eq!(r.log_moment, LN_2, max_relative = 1e-15);
        let r = make_fd_measure(1).unwrap().check_calderon();
        assert!(r.log_moment.is_infinite());
        assert!(!r.passes);
    }

    #[test]
    fn exponential_density_has_zero_mass() {
        // e^{-η}(1 - η) integrates to zero on (0, ∞)
        let m = exp_sinh(|x| (-x).exp() * (1.0 - x), 0.0, 1e-14);
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn inversion_checks() {
        let mu2 = make_fd_measure(2).unwrap();
        let r = mu2.check_inversion(1.5, 2.0).unwrap();
        assert!(r.passes);
        assert_eq!(&r.moments[..2], &[0.0, 0.0]);
        assert_eq!(mu2.moment(2), 2.0);
        let delta = WaveletMeasure::new(vec![(1.0, 1.0)], None).unwrap();
        assert!(!delta.check_inversion(0.5, 1.0).unwrap().passes);
        assert!(mu2.check_inversion(1.5, 1.0).is_err());
    }

    #[test]
    fn lambda_alpha_values() {
        let mu1 = make_fd_measure(1).unwrap();
        assert_relative_eq!(
            mu1.lambda_alpha(0.5, 1.0).unwrap(),
            2.0 / PI.sqrt(),
            max_relative = 1e-14
        );
        let exact = (2.0 - 3f64.sqrt()) / (4.0 * gamma(1.5).unwrap());
        assert_relative_eq!(mu1.lambda_alpha(0.5, 4.0).unwrap(), exact, max_relative = 1e-14);
        assert!((exact - 0.0756).abs() < 1e-4);
        assert_eq!(d1m2().lambda_alpha(0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn calderon_k_values() {
        let mu = d1m2();
        assert_relative_eq!(mu.calderon_k(1.5).unwrap(), 1.0 / 1.5);
        assert_eq!(mu.calderon_k(3.0).unwrap(), 0.0);
        let integral = piecewise_to_infinity(|s| mu.calderon_k(s).unwrap(), 0.0, &[1.0, 2.0, 3.0], 1e-13);
        assert_relative_eq!(integral, LN_2, max_relative = 1e-10);
        assert!(matches!(
            make_fd_measure(1).unwrap().calderon_k(1.0),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn constants() {
        let mu1 = make_fd_measure(1).unwrap();
        let c = mu1.c_constant(ConstantOrder::Alpha(0.5)).unwrap();
        assert_relative_eq!(c, 2.0 * PI.sqrt(), max_relative = 1e-13);
        // Laplace route: ∫ t^{-3/2} (1 - e^{-t}) dt
        let lap = exp_sinh(|t| t.powf(-1.5) * mu1.laplace_transform(t), 0.0, 1e-13);
        assert_relative_eq!(lap, c, max_relative = 1e-6);
        assert_relative_eq!(
            d1m2().c_constant(ConstantOrder::Calderon).unwrap(),
            LN_2,
            max_relative = 1e-15
        );
        let mu2 = make_fd_measure(2).unwrap();
        let c = mu2.c_constant(ConstantOrder::Alpha(1.5)).unwrap();
        assert_relative_eq!(c, 4.0 * PI.sqrt() / 3.0 * (2f64.powf(1.5) - 2.0), max_relative = 1e-13);
        assert!((c - 1.9578).abs() < 1e-3);
        let c = mu2.c_constant(ConstantOrder::Alpha(1.0)).unwrap();
        assert_relative_eq!(c, 2.0 * LN_2, max_relative = 1e-14);
        assert!(matches!(
            mu1.c_constant(ConstantOrder::Alpha(0.0)),
            Err(Error::DivergentConstant(_))
        ));
        assert!(matches!(
            mu1.c_constant(ConstantOrder::Calderon),
            Err(Error::DivergentConstant(_))
        ));
    }

    #[test]
    fn laplace_transforms() {
        let mu1 = make_fd_measure(1).unwrap();
        assert_relative_eq!(mu1.laplace_transform(1.0), 1.0 - (-1f64).exp(), max_relative = 1e-15);
        let mu2 = make_fd_measure(2).unwrap();
        assert_relative_eq!(
            mu2.laplace_transform(1.0),
            (1.0 - (-1f64).exp()).powi(2),
            max_relative = 1e-14
        );
        assert!(d1m2().laplace_transform(1e-12).abs() < 1e-11);
    }

    #[test]
    fn smooth_measures() {
        let mu = make_smooth_measure(1, 0.5).unwrap();
        assert!(mu.moment(0).abs() < 1e-8);
        let mu = make_smooth_measure(2, 0.5).unwrap();
        assert!(mu.moment(0).abs() < 1e-8);
        assert!(mu.moment(1).abs() < 1e-8);
        let c = mu.c_constant(ConstantOrder::Alpha(0.5)).unwrap();
        assert!(c.abs() > 1e-3, "c = {c}");
        assert!(make_smooth_measure(1, 1.5).is_err());
        assert!(make_smooth_measure(5, 0.5).is_err());
    }

    #[test]
    fn fd_atoms() {
        assert_eq!(make_fd_measure(1).unwrap().atoms(), &[(0.0, 1.0), (1.0, -1.0)]);
        assert_eq!(
            make_fd_measure(2).unwrap().atoms(),
            &[(0.0, 1.0), (1.0, -2.0), (2.0, 1.0)]
        );
    }

    #[test]
    fn json_round_trip() {
        let mu = WaveletMeasure::from_json(r#"{"atoms": [[2, -1], [1, 1]], "density": null}"#).unwrap();
        assert_eq!(mu, d1m2());
        let smooth = make_smooth_measure(3, 1.0).unwrap();
        assert_eq!(WaveletMeasure::from_json(&smooth.to_json()).unwrap(), smooth);
        let parsed = WaveletMeasure::from_json(r#"{"atoms": [], "density": {"name": "smooth_h", "m": 2}}"#).unwrap();
        assert_eq!(parsed.density(), Some(Density::SmoothH { m: 2 }));
    }
}
