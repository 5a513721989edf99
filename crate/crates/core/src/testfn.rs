//! Smooth test functions and phantoms with known properties.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use std::str::FromStr;

/// `exp(1 - 1/(1 - r²))` for `r < 1`, zero outside; peak value 1.
pub fn bump(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Radial bump of the given support radius.
pub fn radial_bump(spec: &GridSpec, support: f64) -> GridFunction {
    GridFunction::from_fn(spec, |x| bump(radius(x) / support))
}

/// `(x₀/R) · bump(|x|/R)`: odd in the first coordinate, hence mean zero.
pub fn odd_bump(spec: &GridSpec, support: f64) -> GridFunction {
    GridFunction::from_fn(spec, |x| x[0] / support * bump(radius(x) / support))
}

/// `bump(|x|/R) − c bump(2|x|/R)` with `c ≈ 2ⁿ` chosen so that the grid
/// mean vanishes exactly.
pub fn mean_zero_bump(spec: &GridSpec, support: f64) -> GridFunction {
    let outer = radial_bump(spec, support);
    let inner = radial_bump(spec, support / 2.0);
    let c = outer.mean().re / inner.mean().re;
    outer.sub(&inner.scale(c)).expect("same grid")
}

/// `e^{-|x|²/2} − 2^{-n} e^{-|x|²/8}`, a mean-zero difference of Gaussians.
pub fn gaussian_difference(spec: &GridSpec) -> GridFunction {
    let n = spec.dim() as i32;
    GridFunction::from_fn(spec, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / 2.0).exp() - 0.5f64.powi(n) * (-r2 / 8.0).exp()
    })
}

/// Indicator of the ball of the given radius.
pub fn disk(spec: &GridSpec, r: f64) -> GridFunction {
    GridFunction::from_fn(spec, |x| if radius(x) <= r { 1.0 } else { 0.0 })
}

/// Anisotropic bump on space × time with support semi-axes `space` and
/// `time`, tilted in time so that it is not even.
pub fn space_time_bump(spec: &GridSpec, space: f64, time: f64) -> GridFunction {
    let d = spec.dim();
    GridFunction::from_fn(spec, |p| {
        let (t, x) = p.split_last().expect("nonempty point");
        let r2 = x.iter().map(|v| v * v).sum::<f64>() / (space * space) + t * t / (time * time);
        bump(r2.sqrt()) * (1.0 + 0.2 * p[d - 1] / time)
    })
}

/// Named phantoms for the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phantom {
    GaussianDifference,
    MeanZeroBump,
    OddBump,
    Bump,
    Disk,
}

impl FromStr for Phantom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dog" | "gaussian-difference" => Phantom::GaussianDifference,
            "mean-zero-bump" => Phantom::MeanZeroBump,
            "odd-bump" => Phantom::OddBump,
            "bump" => Phantom::Bump,
            "disk" => Phantom::Disk,
            other => return Err(Error::InvalidInput(format!("unknown phantom {other:?}"))),
        })
    }
}

impl Phantom {
    /// Samples the phantom; `scale` is the support radius of the bumps and
    /// the radius of the disk.
    pub fn sample(self, spec: &GridSpec, scale: f64) -> GridFunction {
        match self {
            Phantom::GaussianDifference => gaussian_difference(spec),
            Phantom::MeanZeroBump => mean_zero_bump(spec, scale),
            Phantom::OddBump => odd_bump(spec, scale),
            Phantom::Bump => radial_bump(spec, scale),
            Phantom::Disk => disk(spec, scale),
        }
    }
}
