//! Self-checks of the library against closed-form values and known limits.
//!
//! Each numbered check runs one complete scenario and reports a list of
//! measured quantities with the bound each must satisfy.

use crate::calderon::{invert_potential, reproduce, CompositeTransform, InversionJob};
use crate::cone::{verify_unit_mass, ConeScale};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::measure::{make_fd_measure, ConstantOrder, WaveletMeasure};
use crate::parabolic::{invert_parabolic, parabolic_potential, parabolic_potential_heat, ParabolicGrid, ParabolicSpec};
use crate::potential::{potential_multiplier, PotentialSpec};
use crate::quadrature::{exp_sinh, piecewise_to_infinity};
use crate::radon::{fuglede_check, radon_forward, radon_invert};
use crate::semigroup::{
    apply_semigroup, beta_kernel, least_squares_line, verify_beta_tail, BetaResolution, SemigroupFamily,
};
use crate::special::siegel_gamma;
use crate::spectral::convolve;
use crate::testfn::{gaussian_difference, mean_zero_bump, odd_bump, space_time_bump};
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::time::Instant;

pub const CRITERIA: std::ops::RangeInclusive<u32> = 1..=12;

/// One measured quantity and its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within {
        target: f64,
        tol: f64,
    },
    /// Relative distance to the target at most `tol`.
    Relative {
        target: f64,
        tol: f64,
    },
    /// A yes/no property encoded as 1 or 0.
    Holds,
}

impl Bound {
    fn accepts(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Within { target, tol } => (v - target).abs() <= tol,
            Bound::Relative { target, tol } => (v - target).abs() <= tol * target.abs(),
            Bound::Holds => v == 1.0,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:e}"),
            Bound::Within { target, tol } => write!(f, "{target} ± {tol:e}"),
            Bound::Relative { target, tol } => write!(f, "{target} ± {tol:e} rel"),
            Bound::Holds => write!(f, "holds"),
        }
    }
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        Self {
            name: name.into(),
            pass: bound.accepts(value),
            value,
            bound,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Bound::Holds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `criterion,check,value,bound,pass` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("criterion,check,value,bound,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{:.16e},{},{}\n",
                self.id,
                c.name,
                c.value,
                c.bound,
                if c.pass { "pass" } else { "fail" }
            ));
        }
        out
    }
}

/// Runs one numbered self-check.
pub fn run_criterion(id: u32) -> Result<CriterionReport> {
    let start = Instant::now();
    let (title, mut checks): (&'static str, Vec<Check>) = match id {
        1 => ("semigroup law", semigroup_law()?),
        2 => ("kernel and multiplier agree", kernel_duality()?),
        3 => ("Beta kernels", beta_kernels()?),
        4 => ("normalizing constants", constants()?),
        5 => ("Calderon reproducing formula", calderon()?),
        6 => ("Flett potential inversion", flett()?),
        7 => ("Beta potential inversion", beta_potential()?),
        8 => ("Riesz potential inversion", riesz()?),
        9 => ("parabolic potential inversion", parabolic()?),
        10 => ("Radon transform and Fuglede identity", radon()?),
        11 => ("decay of lambda_alpha", lambda_decay()?),
        12 => ("cone utilities", cone()?),
        other => return Err(Error::InvalidInput(format!("no check numbered {other}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let budget = match id {
        1 => Some(1.0),
        5 => Some(10.0),
        10 => Some(60.0),
        _ => None,
    };
    if let Some(b) = budget {
        checks.push(Check::new("seconds", seconds, Bound::AtMost(b)));
    }
    Ok(CriterionReport {
        id,
        title,
        checks,
        seconds,
    })
}

fn semigroup_law() -> Result<Vec<Check>> {
    let spec = GridSpec::cube(1, 512, 20.0)?;
    let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + 0.4 * x[0]));
    let (s, t) = (0.3, 0.7);
    let families = [
        ("poisson", SemigroupFamily::Poisson),
        ("gauss_weierstrass", SemigroupFamily::GaussWeierstrass),
        ("metaharmonic", SemigroupFamily::Metaharmonic),
        ("beta_0.5", SemigroupFamily::beta(0.5)?),
        ("beta_1.5", SemigroupFamily::beta(1.5)?),
    ];
    families
        .iter()
        .map(|(name, fam)| {
            let two = apply_semigroup(fam, &apply_semigroup(fam, &f, t)?, s)?;
            let one = apply_semigroup(fam, &f, s + t)?;
            let e = two.sub(&one)?.norm(2.0)? / f.norm(2.0)?;
            Ok(Check::new(format!("{name}_rel_l2"), e, Bound::AtMost(1e-10)))
        })
        .collect()
}

/// Periodic Poisson kernel, the sum of `t/(π(t² + (y + 2kL)²))` over `k`.
fn periodic_poisson(y: f64, t: f64, l: f64) -> f64 {
    let a = PI / l;
    (a * t).sinh() / (2.0 * l * ((a * t).cosh() - (a * y).cos()))
}

fn kernel_duality() -> Result<Vec<Check>> {
    let l = 20.0;
    let spec = GridSpec::cube(1, 512, l)?;
    let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + 0.4 * x[0]));
    let t = 0.5;
    let mut out = Vec::new();

    let kernel = GridFunction::from_fn(&spec, |y| periodic_poisson(y[0], t, l));
    let conv = convolve(&f, &kernel)?;
    let mult = apply_semigroup(&SemigroupFamily::Poisson, &f, t)?;
    out.push(Check::new(
        "poisson_rel_l2",
        conv.relative_error(&mult, 2.0)?,
        Bound::AtMost(1e-6),
    ));

    let gw = SemigroupFamily::GaussWeierstrass;
    let kernel = GridFunction::from_fn(&spec, |y| gw.kernel_eval(y, t).unwrap_or(f64::NAN));
    let conv = convolve(&f, &kernel)?;
    let mult = apply_semigroup(&gw, &f, t)?;
    out.push(Check::new(
        "gauss_weierstrass_rel_l2",
        conv.relative_error(&mult, 2.0)?,
        Bound::AtMost(1e-6),
    ));
    Ok(out)
}

fn beta_kernels() -> Result<Vec<Check>> {
    let res = BetaResolution::default();
    let radii: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
    let mut out = Vec::new();

    let gauss = beta_kernel(2.0, 1, &res)?;
    let mut worst: f64 = 0.0;
    for &r in &radii {
        let exact = (-r * r / 4.0).exp() / (4.0 * PI).sqrt();
        worst = worst.max((gauss.eval(r)? - exact).abs());
    }
    out.push(Check::new("beta_2_vs_gaussian", worst, Bound::AtMost(1e-10)));

    let poisson = beta_kernel(1.0, 1, &res)?;
    let mut worst: f64 = 0.0;
    for &r in &radii {
        worst = worst.max((poisson.eval(r)? - 1.0 / (PI * (1.0 + r * r))).abs());
    }
    out.push(Check::new("beta_1_vs_poisson", worst, Bound::AtMost(1e-6)));

    let table = beta_kernel(1.5, 1, &res)?;
    let fit = verify_beta_tail(&table, 10.0, 40.0)?;
    out.push(Check::new(
        "beta_1.5_tail_slope",
        fit.slope,
        Bound::Within {
            target: -2.5,
            tol: 0.05,
        },
    ));
    out.push(Check::new(
        "beta_1.5_tail_prefactor",
        fit.prefactor,
        Bound::Relative {
            target: fit.expected_prefactor,
            tol: 0.05,
        },
    ));

    for (beta, t) in [
        (0.5, None),
        (1.0, Some(&poisson)),
        (1.5, Some(&table)),
        (2.0, Some(&gauss)),
    ] {
        let min = match t {
            Some(t) => t.min_value(),
            None => beta_kernel(beta, 1, &res)?.min_value(),
        };
        out.push(Check::new(format!("beta_{beta}_min_value"), min, Bound::AtLeast(-1e-8)));
    }
    Ok(out)
}

fn constants() -> Result<Vec<Check>> {
    let mu = make_fd_measure(1)?;
    let alpha = 0.5;
    let closed = mu.c_constant(ConstantOrder::Alpha(alpha))?;
    let lambda = piecewise_to_infinity(|s| mu.lambda_alpha(alpha, s).unwrap_or(f64::NAN), 0.0, &[1.0], 1e-13);
    let laplace = exp_sinh(|t| mu.laplace_transform(t) * t.powf(-alpha - 1.0), 0.0, 1e-13);
    let target = 2.0 * PI.sqrt();
    let rel = Bound::Relative { target, tol: 1e-6 };
    let d1m2 = WaveletMeasure::new(vec![(1.0, 1.0), (2.0, -1.0)], None)?;
    let k = piecewise_to_infinity(|s| d1m2.calderon_k(s).unwrap_or(f64::NAN), 0.0, &[1.0, 2.0], 1e-13);
    Ok(vec![
        Check::new("gamma_formula", closed, rel),
        Check::new("lambda_integral", lambda, rel),
        Check::new("laplace_integral", laplace, rel),
        Check::new(
            "k_integral",
            k,
            Bound::Within {
                target: LN_2,
                tol: 1e-6,
            },
        ),
    ])
}

fn calderon() -> Result<Vec<Check>> {
    let spec = GridSpec::cube(1, 1024, 32.0)?;
    let f = odd_bump(&spec, 8.0);
    let mu = WaveletMeasure::new(vec![(1.0, 1.0), (2.0, -1.0)], None)?;
    let job = InversionJob::new(0.0, vec![1e-1, 1e-2, 1e-3]);
    let mut out = Vec::new();
    for a in [0.0, 1.0] {
        let ct = CompositeTransform::new(SemigroupFamily::GaussWeierstrass, mu.clone(), a)?;
        let rec = reproduce(&ct, &f, &job)?;
        let e = rec.record.at(1e-3).map_or(f64::NAN, |r| r.rel_l2);
        out.push(Check::new(format!("a{a}_rel_l2_at_1e-3"), e, Bound::AtMost(1e-3)));
        out.push(Check::holds(
            format!("a{a}_non_increasing"),
            rec.record.is_non_increasing(),
        ));
    }
    Ok(out)
}

fn flett() -> Result<Vec<Check>> {
    let spec = GridSpec::cube(1, 512, 20.0)?;
    let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + 0.3 * x[0]));
    let phi = potential_multiplier(&PotentialSpec::flett(0.5), &f)?;
    let ct = CompositeTransform::new(SemigroupFamily::Poisson, make_fd_measure(1)?, 1.0)?;
    let job = InversionJob::new(0.5, vec![1e-1, 1e-2, 1e-3]);
    let rec = invert_potential(&ct, &phi, &job, Some(&f))?;
    let e = rec.record.at(1e-3).map_or(f64::NAN, |r| r.rel_l2);
    Ok(vec![
        Check::new("rel_l2_at_1e-3", e, Bound::AtMost(1e-3)),
        Check::holds("non_increasing", rec.record.is_non_increasing()),
    ])
}

fn beta_potential() -> Result<Vec<Check>> {
    let (alpha, beta) = (0.75, 1.5);
    let spec = GridSpec::cube(1, 512, 20.0)?;
    let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + 0.3 * x[0]));
    let phi = potential_multiplier(&PotentialSpec::bessel_beta(alpha, beta), &f)?;
    let ct = CompositeTransform::new(SemigroupFamily::beta(beta)?, make_fd_measure(1)?, 1.0)?;
    let job = InversionJob::new(alpha / beta, vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5]);
    let rec = invert_potential(&ct, &phi, &job, Some(&f))?;
    Ok(vec![
        Check::new(
            "rel_l2_at_1e-5",
            rec.record.at(1e-5).map_or(f64::NAN, |r| r.rel_l2),
            Bound::AtMost(1e-2),
        ),
        Check::holds("non_increasing", rec.record.is_non_increasing()),
    ])
}

fn riesz() -> Result<Vec<Check>> {
    let spec = GridSpec::cube(2, 256, 16.0)?;
    let f = mean_zero_bump(&spec, 6.0);
    let phi = potential_multiplier(&PotentialSpec::riesz(1.0), &f)?;
    let ct = CompositeTransform::new(SemigroupFamily::Poisson, make_fd_measure(2)?, 0.0)?;
    let job = InversionJob::new(1.0, vec![1e-1, 1e-2, 1e-3, 1e-4]);
    let rec = invert_potential(&ct, &phi, &job, Some(&f))?;
    Ok(vec![
        Check::new(
            "constant",
            rec.constant,
            Bound::Relative {
                target: 2.0 * LN_2,
                tol: 1e-12,
            },
        ),
        Check::new(
            "rel_l2_at_1e-4",
            rec.record.at(1e-4).map_or(f64::NAN, |r| r.rel_l2),
            Bound::AtMost(1e-2),
        ),
    ])
}

fn parabolic() -> Result<Vec<Check>> {
    let grid = ParabolicGrid::cube(1, 64, 8.0, 64, 10.0)?;
    let f = space_time_bump(grid.spec(), 3.0, 4.0);
    let p = ParabolicSpec::new(false, 1.0);
    let phi = parabolic_potential(&p, &f)?;
    let heat = parabolic_potential_heat(&p, &f)?;
    let rec = invert_parabolic(
        &p,
        &make_fd_measure(1)?,
        &phi,
        &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
        Some(&f),
    )?;
    Ok(vec![
        Check::new(
            "rel_l2_at_1e-5",
            rec.record.at(1e-5).map_or(f64::NAN, |r| r.rel_l2),
            Bound::AtMost(1e-2),
        ),
        Check::new("two_route_rel_l2", heat.relative_error(&phi, 2.0)?, Bound::AtMost(1e-5)),
    ])
}

fn radon() -> Result<Vec<Check>> {
    let spec = GridSpec::cube(2, 512, 16.0)?;
    let f = gaussian_difference(&spec);
    let angles = 720;
    let fit = fuglede_check(&f, angles)?;
    let sino = radon_forward(&f, angles, 512)?;
    let rec = radon_invert(&sino, &spec, &make_fd_measure(2)?, &[1e-1, 1e-2, 1e-3], Some(&f))?;
    Ok(vec![
        Check::new(
            "fuglede_constant",
            fit.constant,
            Bound::Relative { target: 2.0, tol: 0.02 },
        ),
        Check::new(
            "interior_rel_l2",
            rec.record.rows.iter().map(|r| r.rel_l2).fold(f64::INFINITY, f64::min),
            Bound::AtMost(0.05),
        ),
    ])
}

fn lambda_decay() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (m, alpha) in [(1u32, 0.5), (2, 1.5)] {
        let mu = make_fd_measure(m)?;
        let n = 64;
        let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let s = 1e-3 * (0.5f64 / 1e-3).powf(i as f64 / (n - 1) as f64);
            xs.push(s.ln());
            ys.push(mu.lambda_alpha(alpha, s)?.abs().ln());
        }
        let (slope, _) = least_squares_line(&xs, &ys)?;
        out.push(Check::new(
            format!("m{m}_alpha{alpha}_slope"),
            slope,
            Bound::Within {
                target: alpha - 1.0,
                tol: 0.1,
            },
        ));
        let mf = m as f64;
        let mut largest: f64 = 0.0;
        for i in 1..=400 {
            let s = mf + i as f64 * 0.05 * mf;
            largest = largest.max(mu.lambda_alpha(alpha, s)?.abs());
        }
        out.push(Check::new(
            format!("m{m}_alpha{alpha}_beyond_m"),
            largest,
            Bound::AtMost(1e-10),
        ));
    }
    Ok(out)
}

fn cone() -> Result<Vec<Check>> {
    let g = siegel_gamma(2, 2.0)?;
    let scale = ConeScale::new(nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]))?;
    let mc = verify_unit_mass(2, &scale, 1_000_000, 20260101)?;
    Ok(vec![
        Check::new(
            "siegel_gamma_2_2",
            g,
            Bound::Within {
                target: PI / 2.0,
                tol: 1e-12,
            },
        ),
        Check::new(
            "unit_mass_deviation_in_stderr",
            (mc.estimate - 1.0).abs() / mc.stderr,
            Bound::AtMost(3.0),
        ),
        Check::new("unit_mass_stderr", mc.stderr, Bound::AtMost(1e-2)),
    ])
}
