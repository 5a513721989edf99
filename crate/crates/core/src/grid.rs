//! Uniform periodic grids and sampled functions on them.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

pub const MAX_DIM: usize = 4;
const MAGIC: &[u8; 4] = b"CWT1";

/// Geometry of a periodic box `[-L_1, L_1) × … × [-L_d, L_d)`.
///
/// Axis `a` carries `sizes[a]` samples `x_j = -L_a + j·h_a`, `h_a = 2L_a/N_a`,
/// and frequencies `ξ_k = π k / L_a` with `k` folded into `[-N_a/2, N_a/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    sizes: Vec<usize>,
    half_widths: Vec<f64>,
}

impl GridSpec {
    pub fn new(sizes: Vec<usize>, half_widths: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension must be between 1 and {MAX_DIM}, got {}",
                sizes.len()
            )));
        }
        if sizes.len() != half_widths.len() {
            return Err(Error::InvalidGrid(
                "sizes and half widths have different lengths".into(),
            ));
        }
        for &n in &sizes {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("axis size {n} is not a power of two >= 8")));
            }
        }
        for &l in &half_widths {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidGrid(format!("half width {l} is not positive")));
            }
        }
        Ok(Self { sizes, half_widths })
    }

    /// Cube with `n` samples and half width `half_width` on each of `dim` axes.
    pub fn cube(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![n; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_widths[axis] / self.sizes[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Volume of one cell of the frequency lattice, `∏ π/L_a`.
    pub fn frequency_cell_volume(&self) -> f64 {
        self.half_widths.iter().map(|l| std::f64::consts::PI / l).product()
    }

    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        -self.half_widths[axis] + j as f64 * self.spacing(axis)
    }

    /// Signed frequency index of FFT bin `k` on `axis`.
    pub fn folded_index(&self, axis: usize, k: usize) -> i64 {
        let n = self.sizes[axis];
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    pub fn frequency(&self, axis: usize, k: usize) -> f64 {
        std::f64::consts::PI * self.folded_index(axis, k) as f64 / self.half_widths[axis]
    }

    /// Row-major multi-index of a flat index, written into `out`.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = flat % self.sizes[a];
            flat /= self.sizes[a];
        }
    }

    /// Spatial point of a flat index, written into `out`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIM];
        self.unravel(flat, &mut idx[..self.dim()]);
        for a in 0..self.dim() {
            out[a] = self.coordinate(a, idx[a]);
        }
    }

    /// Frequency vector of a flat FFT-ordered index, written into `out`.
    pub fn frequency_vector(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIM];
        self.unravel(flat, &mut idx[..self.dim()]);
        for a in 0..self.dim() {
            out[a] = self.frequency(a, idx[a]);
        }
    }

    /// Flat index of the grid point nearest the origin (`j = N/2` on every axis).
    pub fn origin_index(&self) -> usize {
        let mut flat = 0;
        for &n in &self.sizes {
            flat = flat * n + n / 2;
        }
        flat
    }

    /// Largest per-axis half width of the frequency box.
    pub fn max_frequency(&self) -> f64 {
        (0..self.dim())
            .map(|a| std::f64::consts::PI * (self.sizes[a] / 2) as f64 / self.half_widths[a])
            .fold(0.0, f64::max)
    }
}

/// Whether values are samples in space or DFT coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Spatial,
    Frequency,
}

/// Complex samples of a function on a [`GridSpec`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<Complex64>,
    domain: Domain,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex64>, domain: Domain) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(Self { spec, values, domain })
    }

    pub fn zeros(spec: &GridSpec) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); spec.len()],
            spec: spec.clone(),
            domain: Domain::Spatial,
        }
    }

    pub fn constant(spec: &GridSpec, c: f64) -> Self {
        Self {
            values: vec![Complex64::new(c, 0.0); spec.len()],
            spec: spec.clone(),
            domain: Domain::Spatial,
        }
    }

    pub fn from_real(spec: &GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(
            spec.clone(),
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            Domain::Spatial,
        )
    }

    /// Sample a real function of the spatial point.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(spec: &GridSpec, f: F) -> Self {
        Self::from_complex_fn(spec, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_complex_fn<F: Fn(&[f64]) -> Complex64>(spec: &GridSpec, f: F) -> Self {
        let mut x = [0.0; MAX_DIM];
        let d = spec.dim();
        let values = (0..spec.len())
            .map(|i| {
                spec.point(i, &mut x[..d]);
                f(&x[..d])
            })
            .collect();
        Self {
            spec: spec.clone(),
            values,
            domain: Domain::Spatial,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Drop imaginary parts.
    pub fn to_real(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            values: self.values.iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
            domain: self.domain,
        }
    }

    /// Average value over the box.
    pub fn mean(&self) -> Complex64 {
        let s: Complex64 = self.values.iter().sum();
        s / self.values.len() as f64
    }

    /// Copy with the box average subtracted.
    pub fn without_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            spec: self.spec.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            domain: self.domain,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec || self.domain != other.domain {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            spec: self.spec.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            domain: self.domain,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            spec: self.spec.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            domain: self.domain,
        })
    }

    /// Riemann-sum `L_p` norm for `p ∈ {1, 2, ∞}` (`p = f64::INFINITY`).
    pub fn norm(&self, p: f64) -> Result<f64> {
        let dv = self.spec.cell_volume();
        if p == 1.0 {
            Ok(dv * self.values.iter().map(|v| v.norm()).sum::<f64>())
        } else if p == 2.0 {
            Ok((dv * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt())
        } else if p.is_infinite() && p > 0.0 {
            Ok(self.max_abs())
        } else {
            Err(Error::InvalidInput(format!("unsupported norm exponent {p}")))
        }
    }

    /// `‖self − reference‖_p / ‖reference‖_p`.
    pub fn relative_error(&self, reference: &Self, p: f64) -> Result<f64> {
        let diff = self.sub(reference)?;
        let denom = reference.norm(p)?;
        if denom == 0.0 {
            return diff.norm(p);
        }
        Ok(diff.norm(p)? / denom)
    }

    /// Same as [`Self::relative_error`], restricted to points where `keep` holds.
    pub fn relative_error_where<F: Fn(&[f64]) -> bool>(&self, reference: &Self, p: f64, keep: F) -> Result<f64> {
        self.check_same(reference)?;
        let d = self.spec.dim();
        let mut x = [0.0; MAX_DIM];
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..self.values.len() {
            self.spec.point(i, &mut x[..d]);
            if !keep(&x[..d]) {
                continue;
            }
            let e = (self.values[i] - reference.values[i]).norm();
            let r = reference.values[i].norm();
            if p.is_infinite() {
                num = num.max(e);
                den = den.max(r);
            } else {
                num += e.powf(p);
                den += r.powf(p);
            }
        }
        if den == 0.0 {
            return Ok(num);
        }
        if p.is_infinite() {
            Ok(num / den)
        } else {
            Ok((num / den).powf(1.0 / p))
        }
    }

    /// Write the binary grid format (spatial samples).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.spec.dim() as u32).to_le_bytes())?;
        for &n in self.spec.sizes() {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        for &l in self.spec.half_widths() {
            w.write_all(&l.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(16 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let dim = read_u32(&mut r)? as usize;
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Format(format!("unsupported dimension {dim}")));
        }
        let mut sizes = Vec::with_capacity(dim);
        for _ in 0..dim {
            sizes.push(read_u32(&mut r)? as usize);
        }
        let mut half_widths = Vec::with_capacity(dim);
        for _ in 0..dim {
            half_widths.push(read_f64(&mut r)?);
        }
        let spec = GridSpec::new(sizes, half_widths)?;
        let mut bytes = vec![0u8; 16 * spec.len()];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Self::new(spec, values, Domain::Spatial)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(vec![6], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![12], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![8], vec![0.0]).is_err());
        assert!(GridSpec::new(vec![8, 8], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![8; 5], vec![1.0; 5]).is_err());
    }

    #[test]
    fn coordinates_and_frequencies() {
        let g = GridSpec::cube(1, 8, 4.0).unwrap();
        assert_eq!(g.spacing(0), 1.0);
        assert_eq!(g.coordinate(0, 0), -4.0);
        assert_eq!(g.coordinate(0, 4), 0.0);
        let pi = std::f64::consts::PI;
        assert_eq!(g.frequency(0, 1), pi / 4.0);
        assert_eq!(g.frequency(0, 4), -pi);
        assert_eq!(g.frequency(0, 7), -pi / 4.0);
        let g = GridSpec::new(vec![8, 16], vec![1.0, 2.0]).unwrap();
        assert_eq!(g.origin_index(), 4 * 16 + 8);
        let mut x = [0.0; 2];
        g.point(g.origin_index(), &mut x);
        assert_eq!(x, [0.0, 0.0]);
    }

    #[test]
    fn norms_of_simple_functions() {
        let g = GridSpec::cube(2, 16, 1.5).unwrap();
        let zero = GridFunction::zeros(&g);
        assert_eq!(zero.norm(1.0).unwrap(), 0.0);
        let one = GridFunction::constant(&g, 1.0);
        assert!((one.norm(1.0).unwrap() - 9.0).abs() < 1e-12);
        assert!((one.norm(2.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(one.norm(f64::INFINITY).unwrap(), 1.0);
        assert!(one.norm(3.0).is_err());
    }
}
