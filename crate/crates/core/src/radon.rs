//! The line transform on the plane, its dual, the Fuglede identity and
//! inversion through the Poisson composite wavelet transform.
//!
//! A line is `{x : x·ν_θ = u}` with normal `ν_θ = (cos θ, sin θ)`,
//! `θ ∈ [0, π)`. The dual transform is the average over angles, so that
//! `(Rf)^∨ = 2 I¹ f` on the plane.

use crate::calderon::{invert_potential, CompositeTransform, ErrorRegion, InversionJob, Reconstruction};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::measure::WaveletMeasure;
use crate::potential::{potential_multiplier, PotentialSpec};
use crate::semigroup::SemigroupFamily;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// `d_{1,2} = 2π σ₀/σ₁`.
pub const FUGLEDE_CONSTANT: f64 = 2.0;
const SUPPORT_TOLERANCE: f64 = 1e-8;
/// Cells at the edge of the box in which the input must be negligible.
const EDGE_CELLS: usize = 2;
/// Region on which the Fuglede fit and the reconstruction error are measured.
pub const INTERIOR_FRACTION: f64 = 0.5;

/// Line integrals sampled on a uniform angle × offset grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: Vec<f64>,
    offsets: Vec<f64>,
    /// Row `i` holds the offsets at angle `i`.
    values: Vec<f64>,
}

impl Sinogram {
    /// `n_angles` angles `iπ/n_angles` and `n_offsets` offsets spanning
    /// `[-l, l]` inclusive, all values zero.
    pub fn zeros(n_angles: usize, n_offsets: usize, l: f64) -> Result<Self> {
        if n_angles == 0 || n_offsets < 2 || !(l > 0.0) {
            return Err(Error::InvalidInput(
                "sinogram needs angles, two offsets and a positive width".into(),
            ));
        }
        let angles = (0..n_angles).map(|i| PI * i as f64 / n_angles as f64).collect();
        let du = 2.0 * l / (n_offsets - 1) as f64;
        let offsets = (0..n_offsets).map(|j| -l + j as f64 * du).collect();
        Ok(Self {
            angles,
            offsets,
            values: vec![0.0; n_angles * n_offsets],
        })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(n_angles: usize, n_offsets: usize, l: f64, g: F) -> Result<Self> {
        let mut s = Self::zeros(n_angles, n_offsets, l)?;
        let n = n_offsets;
        for i in 0..n_angles {
            for j in 0..n {
                s.values[i * n + j] = g(s.angles[i], s.offsets[j]);
            }
        }
        Ok(s)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, angle: usize) -> &[f64] {
        let n = self.offsets.len();
        &self.values[angle * n..(angle + 1) * n]
    }

    pub fn offset_step(&self) -> f64 {
        self.offsets[1] - self.offsets[0]
    }

    fn half_width(&self) -> f64 {
        -self.offsets[0]
    }

    /// Linear interpolation in the offset, zero outside the sampled range.
    pub fn interpolate(&self, angle: usize, u: f64) -> f64 {
        let row = self.row(angle);
        let p = (u + self.half_width()) / self.offset_step();
        if !(p >= 0.0) {
            return 0.0;
        }
        let j = p.floor() as usize;
        if j + 1 >= row.len() {
            return if j + 1 == row.len() && p == j as f64 {
                row[j]
            } else {
                0.0
            };
        }
        let w = p - j as f64;
        (1.0 - w) * row[j] + w * row[j + 1]
    }

    /// `(1/π) ∫_0^π ∫ g h du dθ`, the pairing under which the dual transform
    /// is the adjoint.
    pub fn inner(&self, other: &Sinogram) -> Result<f64> {
        if self.angles.len() != other.angles.len() || self.offsets.len() != other.offsets.len() {
            return Err(Error::SpecMismatch);
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.offset_step() / self.angles.len() as f64)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Sinogram) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::SpecMismatch);
        }
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    /// Header then one `angle,offset,value` row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle,offset,value\n");
        for (i, a) in self.angles.iter().enumerate() {
            for (j, u) in self.offsets.iter().enumerate() {
                let v = self.values[i * self.offsets.len() + j];
                writeln!(out, "{a:.16e},{u:.16e},{v:.16e}").expect("writing to a string");
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn require_plane(spec: &GridSpec) -> Result<()> {
    if spec.dim() != 2 {
        return Err(Error::InvalidGrid(format!(
            "the line transform needs a 2-D grid, got {}-D",
            spec.dim()
        )));
    }
    Ok(())
}

/// Bilinear interpolation of grid samples, zero outside the sampled square.
struct Bilinear<'a> {
    values: Vec<f64>,
    spec: &'a GridSpec,
}

impl Bilinear<'_> {
    /// Fractional grid indices of a point.
    fn index(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x + self.spec.half_widths()[0]) / self.spec.spacing(0),
            (y + self.spec.half_widths()[1]) / self.spec.spacing(1),
        )
    }

    /// Sum of the interpolant at `start + m·step`, `m ∈ [lo, hi]`, in index
    /// coordinates; samples outside the square contribute nothing.
    fn line_sum(&self, start: (f64, f64), step: (f64, f64), lo: i64, hi: i64) -> f64 {
        let (n0, n1) = (self.spec.sizes()[0], self.spec.sizes()[1]);
        // restrict m to 0 ≤ p < n0 - 1 and 0 ≤ q < n1 - 1
        let mut lo = lo as f64;
        let mut hi = hi as f64;
        for (s0, d, n) in [(start.0, step.0, n0), (start.1, step.1, n1)] {
            let top = (n - 1) as f64;
            if d == 0.0 {
                if !(s0 >= 0.0 && s0 < top) {
                    return 0.0;
                }
            } else {
                let (a, b) = ((0.0 - s0) / d, (top - s0) / d);
                lo = lo.max(a.min(b).ceil());
                hi = hi.min(a.max(b).floor());
            }
        }
        if lo > hi {
            return 0.0;
        }
        let v = &self.values;
        let mut acc = 0.0;
        for m in lo as i64..=hi as i64 {
            let p = start.0 + m as f64 * step.0;
            let q = start.1 + m as f64 * step.1;
            let (i, j) = (p as usize, q as usize);
            if i + 1 >= n0 || j + 1 >= n1 {
                continue;
            }
            let (a, b) = (p - i as f64, q - j as f64);
            let k = i * n1 + j;
            acc += (1.0 - a) * ((1.0 - b) * v[k] + b * v[k + 1]) + a * ((1.0 - b) * v[k + n1] + b * v[k + n1 + 1]);
        }
        acc
    }
}

/// Radius of the smallest centered disk outside which `f` vanishes, after
/// checking that `f` is negligible at the edge of the box.
fn support_radius(f: &GridFunction) -> Result<f64> {
    let spec = f.spec();
    let peak = f.max_abs();
    let n1 = spec.sizes()[1];
    let mut edge = 0.0f64;
    let mut radius = 0.0f64;
    for (k, v) in f.values().iter().enumerate() {
        let (i, j) = (k / n1, k % n1);
        let a = v.norm();
        if a == 0.0 {
            continue;
        }
        let near = |m: usize, n: usize| m < EDGE_CELLS || m + EDGE_CELLS >= n;
        if near(i, spec.sizes()[0]) || near(j, n1) {
            edge = edge.max(a);
        }
        let (x, y) = (spec.coordinate(0, i), spec.coordinate(1, j));
        radius = radius.max(x.hypot(y));
    }
    if edge > SUPPORT_TOLERANCE * peak {
        return Err(Error::SupportOverflow(edge / peak));
    }
    // one more cell for the interpolation stencil
    Ok(radius + spec.spacing(0).hypot(spec.spacing(1)))
}

/// Line integrals `∫ f(uν_θ + sθ^⊥) ds` by bilinear sampling at half the
/// grid spacing; offsets span the box half width.
pub fn radon_forward(f: &GridFunction, n_angles: usize, n_offsets: usize) -> Result<Sinogram> {
    let spec = f.spec();
    require_plane(spec)?;
    let reach = support_radius(f)?;
    let l = spec.half_widths()[0].max(spec.half_widths()[1]);
    let mut sino = Sinogram::zeros(n_angles, n_offsets, l)?;
    let image = Bilinear {
        values: f.real_parts(),
        spec,
    };
    let ds = 0.5 * spec.spacing(0).min(spec.spacing(1));
    let offsets = sino.offsets.clone();
    let angles = sino.angles.clone();
    sino.values
        .par_chunks_mut(n_offsets)
        .zip(angles.par_iter())
        .for_each(|(row, &theta)| {
            let (c, s) = (theta.cos(), theta.sin());
            for (out, &u) in row.iter_mut().zip(&offsets) {
                if u.abs() >= reach {
                    continue;
                }
                let half = (reach * reach - u * u).sqrt();
                let k = (half / ds).ceil() as i64;
                let start = image.index(u * c, u * s);
                let step = (-s * ds / spec.spacing(0), c * ds / spec.spacing(1));
                *out = image.line_sum(start, step, -k, k) * ds;
            }
        });
    Ok(sino)
}

/// `(1/n_θ) Σ_θ g(θ, x·ν_θ)` at every grid point.
pub fn radon_dual(g: &Sinogram, target: &GridSpec) -> Result<GridFunction> {
    require_plane(target)?;
    let trig: Vec<(f64, f64)> = g.angles.iter().map(|a| (a.cos(), a.sin())).collect();
    let n1 = target.sizes()[1];
    let values: Vec<f64> = (0..target.len())
        .into_par_iter()
        .map(|k| {
            let x = target.coordinate(0, k / n1);
            let y = target.coordinate(1, k % n1);
            let s: f64 = trig
                .iter()
                .enumerate()
                .map(|(i, &(c, s))| g.interpolate(i, x * c + y * s))
                .sum();
            s / trig.len() as f64
        })
        .collect();
    GridFunction::from_real(target, values)
}

fn interior(spec: &GridSpec) -> impl Fn(&[f64]) -> bool + '_ {
    move |x: &[f64]| {
        x.iter()
            .zip(spec.half_widths())
            .all(|(v, l)| v.abs() <= INTERIOR_FRACTION * l)
    }
}

/// Result of comparing `(Rf)^∨` with `I¹ f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FugledeFit {
    /// Least-squares `c` in `(Rf)^∨ ≈ c I¹ f`.
    pub constant: f64,
    /// `‖(Rf)^∨ − c I¹f‖₂ / ‖(Rf)^∨‖₂` on the interior.
    pub residual: f64,
}

/// Fits `radon_dual(radon_forward(f)) ≈ c · I¹ f` on the central box; the
/// Riesz side uses `f` with its box average removed.
pub fn fuglede_check(f: &GridFunction, n_angles: usize) -> Result<FugledeFit> {
    let spec = f.spec();
    require_plane(spec)?;
    let n_offsets = spec.sizes()[0].max(spec.sizes()[1]);
    let r = radon_dual(&radon_forward(f, n_angles, n_offsets)?, spec)?;
    let s = potential_multiplier(&PotentialSpec::riesz(1.0), &f.without_mean())?;
    let keep = interior(spec);
    let mut x = [0.0; 2];
    let (mut rs, mut ss, mut rr) = (0.0, 0.0, 0.0);
    let mut pairs = Vec::new();
    for i in 0..spec.len() {
        spec.point(i, &mut x);
        if keep(&x) {
            let (a, b) = (r.values()[i].re, s.values()[i].re);
            rs += a * b;
            ss += b * b;
            rr += a * a;
            pairs.push((a, b));
        }
    }
    if ss.sqrt() < 1e-12 {
        return Err(Error::DegenerateFit);
    }
    let c = rs / ss;
    let res: f64 = pairs.iter().map(|(a, b)| (a - c * b).powi(2)).sum();
    Ok(FugledeFit {
        constant: c,
        residual: (res / rr).sqrt(),
    })
}

/// Backprojects `g` onto `target` and inverts `(Rf)^∨ = 2 I¹ f` with the
/// Poisson composite transform (`a = 0`, exponent 1). Errors are measured on
/// the central box.
pub fn radon_invert(
    g: &Sinogram,
    target: &GridSpec,
    mu: &WaveletMeasure,
    epsilons: &[f64],
    reference: Option<&GridFunction>,
) -> Result<Reconstruction> {
    let dual = radon_dual(g, target)?.scale(1.0 / FUGLEDE_CONSTANT);
    let ct = CompositeTransform::new(SemigroupFamily::Poisson, mu.clone(), 0.0)?;
    let job = InversionJob::new(1.0, epsilons.to_vec()).with_region(ErrorRegion::Interior(INTERIOR_FRACTION));
    invert_potential(&ct, &dual, &job, reference)
}
