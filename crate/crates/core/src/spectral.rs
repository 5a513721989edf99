//! DFT engine: N-dimensional FFTs, spectral multipliers and convolution.
//!
//! A multiplier `m` acts on a grid function through `IFFT(m(ξ_k) · FFT f)`, so
//! `m(ξ)` is the eigenvalue of the plane wave `e^{i x·ξ}`. For even symbols this
//! is the same as `F⁻¹ m F` with the transform `F f(ξ) = ∫ f(x) e^{i x·ξ} dx`.

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, GridSpec, MAX_DIM};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::LazyLock;
use std::sync::{Arc, Mutex};

static PLANNER: LazyLock<Mutex<FftPlanner<f64>>> = LazyLock::new(|| Mutex::new(FftPlanner::new()));

/// Relative size of imaginary residue tolerated on real input.
pub const REALITY_TOLERANCE: f64 = 1e-10;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER.lock().unwrap_or_else(|e| e.into_inner());
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// In-place unnormalized N-dimensional FFT of row-major data.
pub fn fft_nd(spec: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let sizes = spec.sizes();
    let total = data.len();
    for axis in 0..sizes.len() {
        let n = sizes[axis];
        let fft = plan(n, inverse);
        let inner: usize = sizes[axis + 1..].iter().product();
        if inner == 1 {
            data.par_chunks_mut(n).for_each_init(
                || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                |scratch, line| fft.process_with_scratch(line, scratch),
            );
            continue;
        }
        // Gather strided lines into contiguous buffers, transform, scatter back.
        let lines = total / n;
        let block = n * inner;
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        buf.par_chunks_mut(n).enumerate().for_each(|(l, line)| {
            let base = (l / inner) * block + l % inner;
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[base + k * inner];
            }
        });
        buf.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
        debug_assert_eq!(lines * n, total);
        data.par_chunks_mut(block).enumerate().for_each(|(outer, chunk)| {
            for r in 0..inner {
                let line = &buf[(outer * inner + r) * n..(outer * inner + r + 1) * n];
                for (k, v) in line.iter().enumerate() {
                    chunk[k * inner + r] = *v;
                }
            }
        });
    }
}

/// DFT coefficients `Σ_j f_j e^{-2πi j·k/N}` of a spatial grid function.
pub fn dft(f: &GridFunction) -> GridFunction {
    let mut v = f.values().to_vec();
    fft_nd(f.spec(), &mut v, false);
    GridFunction::new(f.spec().clone(), v, Domain::Frequency).expect("length preserved")
}

/// Inverse of [`dft`], normalized so that `idft(dft(f)) = f`.
pub fn idft(fhat: &GridFunction) -> GridFunction {
    let mut v = fhat.values().to_vec();
    fft_nd(fhat.spec(), &mut v, true);
    let scale = 1.0 / v.len() as f64;
    v.par_iter_mut().for_each(|x| *x *= scale);
    GridFunction::new(fhat.spec().clone(), v, Domain::Spatial).expect("length preserved")
}

/// Samples of `F f(ξ_k) = ∫ f(x) e^{i x·ξ_k} dx` by the Riemann sum, FFT ordered.
pub fn fourier_transform(f: &GridFunction) -> Result<GridFunction> {
    if f.domain() != Domain::Spatial {
        return Err(Error::InvalidInput("expected a spatial grid function".into()));
    }
    let spec = f.spec();
    let mut v = f.values().to_vec();
    fft_nd(spec, &mut v, true);
    let dv = spec.cell_volume();
    let d = spec.dim();
    v.par_iter_mut().enumerate().for_each(|(i, x)| {
        let mut xi = [0.0; MAX_DIM];
        spec.frequency_vector(i, &mut xi[..d]);
        // x_j = -L + j h contributes the phase e^{-i L·ξ}
        let phase: f64 = (0..d).map(|a| -spec.half_widths()[a] * xi[a]).sum();
        *x *= Complex64::from_polar(dv, phase);
    });
    GridFunction::new(spec.clone(), v, Domain::Frequency)
}

/// Inverse of [`fourier_transform`].
pub fn inverse_fourier_transform(fhat: &GridFunction) -> Result<GridFunction> {
    if fhat.domain() != Domain::Frequency {
        return Err(Error::InvalidInput("expected a frequency-domain grid function".into()));
    }
    let spec = fhat.spec();
    let d = spec.dim();
    let dv = spec.cell_volume();
    let mut v = fhat.values().to_vec();
    v.par_iter_mut().enumerate().for_each(|(i, x)| {
        let mut xi = [0.0; MAX_DIM];
        spec.frequency_vector(i, &mut xi[..d]);
        let phase: f64 = (0..d).map(|a| spec.half_widths()[a] * xi[a]).sum();
        *x *= Complex64::from_polar(1.0 / dv, phase);
    });
    fft_nd(spec, &mut v, false);
    let scale = 1.0 / v.len() as f64;
    v.par_iter_mut().for_each(|x| *x *= scale);
    GridFunction::new(spec.clone(), v, Domain::Spatial)
}

type Symbol<'a> = Box<dyn Fn(&[f64]) -> Complex64 + Send + Sync + 'a>;

/// A function of the frequency vector applied pointwise in the DFT domain.
pub struct SpectralMultiplier<'a> {
    eval: Symbol<'a>,
    singular_at_zero: bool,
    zero_value: Option<Complex64>,
}

impl<'a> SpectralMultiplier<'a> {
    /// A multiplier that is finite everywhere, including `ξ = 0`.
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'a,
    {
        Self {
            eval: Box::new(eval),
            singular_at_zero: false,
            zero_value: None,
        }
    }

    /// A real-valued multiplier finite everywhere.
    pub fn real<F>(eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'a,
    {
        Self::new(move |xi| Complex64::new(eval(xi), 0.0))
    }

    /// A multiplier undefined at `ξ = 0`; a value must be supplied with
    /// [`Self::with_zero_value`] before it can be applied.
    pub fn singular<F>(eval: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'a,
    {
        Self {
            eval: Box::new(eval),
            singular_at_zero: true,
            zero_value: None,
        }
    }

    pub fn with_zero_value(mut self, value: Complex64) -> Self {
        self.zero_value = Some(value);
        self
    }

    pub fn is_singular_at_zero(&self) -> bool {
        self.singular_at_zero
    }

    pub fn zero_value(&self) -> Option<Complex64> {
        self.zero_value
    }

    /// Value at `ξ`, with the zero-frequency policy applied at the origin.
    pub fn eval(&self, xi: &[f64]) -> Result<Complex64> {
        if xi.iter().all(|&x| x == 0.0) {
            if let Some(v) = self.zero_value {
                return Ok(v);
            }
            if self.singular_at_zero {
                return Err(Error::SingularZeroFrequency);
            }
        }
        Ok((self.eval)(xi))
    }

    /// Pointwise product; the zero value of the product is the product of the
    /// zero values.
    pub fn compose(self, other: SpectralMultiplier<'a>) -> SpectralMultiplier<'a> {
        let zero = match (self.zero_value, other.zero_value) {
            (Some(a), Some(b)) => Some(a * b),
            (Some(a), None) if !other.singular_at_zero => Some(a * (other.eval)(&[0.0; MAX_DIM])),
            (None, Some(b)) if !self.singular_at_zero => Some((self.eval)(&[0.0; MAX_DIM]) * b),
            _ => None,
        };
        let singular = self.singular_at_zero || other.singular_at_zero;
        let (a, b) = (self.eval, other.eval);
        SpectralMultiplier {
            eval: Box::new(move |xi| a(xi) * b(xi)),
            singular_at_zero: singular,
            zero_value: zero,
        }
    }

    /// Values at every FFT-ordered frequency of `spec`.
    pub fn table(&self, spec: &GridSpec) -> Result<Vec<Complex64>> {
        if self.singular_at_zero && self.zero_value.is_none() {
            return Err(Error::SingularZeroFrequency);
        }
        let d = spec.dim();
        let origin = 0usize;
        let zero = self.zero_value;
        let table: Vec<Complex64> = (0..spec.len())
            .into_par_iter()
            .map(|i| {
                let mut xi = [0.0; MAX_DIM];
                spec.frequency_vector(i, &mut xi[..d]);
                match zero {
                    Some(z) if i == origin => z,
                    _ => (self.eval)(&xi[..d]),
                }
            })
            .collect();
        if let Some((i, _)) = table.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let mut xi = [0.0; MAX_DIM];
            spec.frequency_vector(i, &mut xi[..d]);
            return Err(Error::InvalidInput(format!(
                "multiplier is not finite at frequency {:?}",
                &xi[..d]
            )));
        }
        Ok(table)
    }
}

/// `IFFT(m(ξ_k) · FFT f)`.
///
/// A real input whose result carries only roundoff-level imaginary parts is
/// returned exactly real; a larger residue is logged as a non-Hermitian
/// multiplier and kept.
pub fn apply_multiplier(f: &GridFunction, m: &SpectralMultiplier) -> Result<GridFunction> {
    if f.domain() != Domain::Spatial {
        return Err(Error::InvalidInput("expected a spatial grid function".into()));
    }
    let table = m.table(f.spec())?;
    apply_table(f, &table)
}

/// [`apply_multiplier`] with precomputed FFT-ordered multiplier values.
pub fn apply_table(f: &GridFunction, table: &[Complex64]) -> Result<GridFunction> {
    if f.domain() != Domain::Spatial {
        return Err(Error::InvalidInput("expected a spatial grid function".into()));
    }
    if table.len() != f.spec().len() {
        return Err(Error::SpecMismatch);
    }
    let spec = f.spec();
    let mut v = f.values().to_vec();
    fft_nd(spec, &mut v, false);
    let scale = 1.0 / v.len() as f64;
    v.par_iter_mut()
        .zip(table.par_iter())
        .for_each(|(x, m)| *x *= m * scale);
    fft_nd(spec, &mut v, true);
    let out = GridFunction::new(spec.clone(), v, Domain::Spatial)?;
    Ok(settle_reality(f, out))
}

pub(crate) fn settle_reality(input: &GridFunction, out: GridFunction) -> GridFunction {
    if !input.is_real() {
        return out;
    }
    let scale = input.max_abs();
    let imag = out.max_imag();
    if imag <= REALITY_TOLERANCE * scale {
        out.to_real()
    } else {
        log::warn!("non-Hermitian multiplier: imaginary residue {imag:e} on real input with sup norm {scale:e}");
        out
    }
}

/// Circular convolution scaled by the cell volume, so the result approximates
/// `∫ f(x − y) g(y) dy` on the periodic box.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if f.spec() != g.spec() {
        return Err(Error::SpecMismatch);
    }
    if f.domain() != Domain::Spatial || g.domain() != Domain::Spatial {
        return Err(Error::InvalidInput("convolution needs spatial grid functions".into()));
    }
    let spec = f.spec();
    let d = spec.dim();
    let mut a = f.values().to_vec();
    let mut b = g.values().to_vec();
    fft_nd(spec, &mut a, false);
    fft_nd(spec, &mut b, false);
    let scale = spec.cell_volume() / a.len() as f64;
    // The grid starts at -L, so the circular result is shifted by N/2 per axis,
    // which is a factor (-1)^k on every axis in the DFT domain.
    a.par_iter_mut().zip(b.par_iter()).enumerate().for_each(|(i, (x, y))| {
        let mut idx = [0usize; MAX_DIM];
        spec.unravel(i, &mut idx[..d]);
        let odd = idx[..d].iter().map(|k| k & 1).sum::<usize>() & 1;
        let sign = if odd == 1 { -scale } else { scale };
        *x *= y * sign;
    });
    fft_nd(spec, &mut a, true);
    let out = GridFunction::new(spec.clone(), a, Domain::Spatial)?;
    if f.is_real() && g.is_real() {
        Ok(out.to_real())
    } else {
        Ok(out)
    }
}

/// Discrete delta: `1/cell volume` at the origin sample, zero elsewhere.
pub fn discrete_delta(spec: &GridSpec) -> GridFunction {
    let mut d = GridFunction::zeros(spec);
    d.values_mut()[spec.origin_index()] = Complex64::new(1.0 / spec.cell_volume(), 0.0);
    d
}

/// Euclidean norm of a frequency (or space) vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
