//! Utilities on `n × m` real matrices and the cone `𝒫_m` of positive
//! definite `m × m` matrices: the norm `|x|_m`, the matrix heat kernel and
//! Monte-Carlo checks of its integral identities.

use crate::error::{Error, Result};
use crate::special::{ln_gamma, siegel_beta, siegel_gamma};
use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

const MAX_CONDITION: f64 = 1e12;
const BATCH: usize = 1 << 16;
/// Proposal covariance relative to the target, so importance weights have
/// finite variance.
const INFLATION: f64 = 1.5;

/// A point of `𝔐_{n,m}`, `n ≥ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPoint {
    entries: DMatrix<f64>,
}

impl MatrixPoint {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() < entries.ncols() || entries.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "need an n × m matrix with n ≥ m ≥ 1, got {} × {}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_row_slice(n: usize, m: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * m {
            return Err(Error::InvalidInput("entry count does not match the shape".into()));
        }
        Self::new(DMatrix::from_row_slice(n, m, data))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn m(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.entries.transpose() * &self.entries
    }
}

/// `|x|_m = det(x′x)^{1/2}`.
pub fn matrix_norm(x: &MatrixPoint) -> f64 {
    x.gram().determinant().max(0.0).sqrt()
}

/// A symmetric positive definite scale `t ∈ 𝒫_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeScale {
    t: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl ConeScale {
    pub fn new(t: DMatrix<f64>) -> Result<Self> {
        if !t.is_square() || t.nrows() == 0 {
            return Err(Error::InvalidInput("scale must be a nonempty square matrix".into()));
        }
        let asym = (&t - t.transpose()).abs().max();
        if asym > 1e-12 * t.abs().max() {
            return Err(Error::InvalidInput("scale must be symmetric".into()));
        }
        let eigenvalues: Vec<f64> = SymmetricEigen::new(t.clone()).eigenvalues.iter().copied().collect();
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain(format!(
                "scale is not positive definite: eigenvalues {eigenvalues:?}"
            )));
        }
        Ok(Self { t, eigenvalues })
    }

    pub fn identity(m: usize) -> Self {
        Self::new(DMatrix::identity(m, m)).expect("identity is positive definite")
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn m(&self) -> usize {
        self.t.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn condition_number(&self) -> f64 {
        let max = self.eigenvalues.iter().copied().fold(0.0, f64::max);
        let min = self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        let cond = self.condition_number();
        if cond > MAX_CONDITION {
            return Err(Error::SingularScale(cond));
        }
        Cholesky::new(self.t.clone()).ok_or(Error::SingularScale(cond))
    }
}

/// `h_t(x) = (4π)^{-nm/2} |t|^{-n/2} exp(-tr(t⁻¹x′x)/4)`.
pub fn heat_kernel_matrix(x: &MatrixPoint, t: &ConeScale) -> Result<f64> {
    if x.m() != t.m() {
        return Err(Error::InvalidInput(format!(
            "x has {} columns but t is {} × {}",
            x.m(),
            t.m(),
            t.m()
        )));
    }
    let chol = t.cholesky()?;
    let (n, m) = (x.n() as f64, x.m() as f64);
    let det = chol.l().diagonal().iter().map(|d| d * d).product::<f64>();
    let trace = chol.solve(&x.gram()).trace();
    Ok((4.0 * PI).powf(-n * m / 2.0) * det.powf(-n / 2.0) * (-trace / 4.0).exp())
}

/// Weight `|r|^{-(m+1)/2}` of the invariant measure on `𝒫_m`.
pub fn invariant_measure_weight(r: &ConeScale) -> f64 {
    let det: f64 = r.eigenvalues.iter().product();
    det.powf(-(r.m() as f64 + 1.0) / 2.0)
}

/// `Γ_m(α)`.
pub fn cone_gamma(m: usize, alpha: f64) -> Result<f64> {
    siegel_gamma(m, alpha)
}

/// `B_m(α, β)`.
pub fn cone_beta(m: usize, alpha: f64, beta: f64) -> Result<f64> {
    siegel_beta(m, alpha, beta)
}

/// Mean of a Monte-Carlo sample and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl MonteCarloEstimate {
    /// Whether `value` lies within `k` standard errors.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.stderr
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let d = v - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.count == 0.0 {
            return o;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
        }
    }
}

/// Runs `samples` draws of `draw` in fixed-size batches, each with its own
/// ChaCha stream, and merges the batch moments in order.
fn monte_carlo<F>(samples: usize, seed: u64, draw: F) -> Result<MonteCarloEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = BATCH.min(samples - b * BATCH);
            let mut mom = Moments::default();
            for _ in 0..n {
                mom.push(draw(&mut rng));
            }
            mom
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let var = total.m2 / (total.count - 1.0);
    Ok(MonteCarloEstimate {
        estimate: total.mean,
        stderr: (var / total.count).sqrt(),
        samples,
    })
}

/// Gaussian proposal for `x ∈ 𝔐_{n,m}` whose rows are `N(0, 2κt)`.
struct RowGaussian {
    n: usize,
    m: usize,
    factor: DMatrix<f64>,
    log_norm: f64,
    precision: DMatrix<f64>,
}

impl RowGaussian {
    fn new(n: usize, t: &ConeScale) -> Result<Self> {
        let m = t.m();
        let cov = t.matrix() * (2.0 * INFLATION);
        let chol = Cholesky::new(cov.clone()).ok_or(Error::SingularScale(t.condition_number()))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let precision = chol.inverse();
        Ok(Self {
            n,
            m,
            factor: chol.l(),
            log_norm: -(n as f64) * (m as f64 / 2.0 * (2.0 * PI).ln() + log_det / 2.0),
            precision,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let z: DMatrix<f64> = DMatrix::from_fn(self.n, self.m, |_, _| rng.sample(StandardNormal));
        z * self.factor.transpose()
    }

    fn density(&self, x: &DMatrix<f64>) -> f64 {
        let q = (x * &self.precision * x.transpose()).trace();
        (self.log_norm - q / 2.0).exp()
    }
}

/// Importance-sampling estimate of `∫ h_t(x) dx` over `𝔐_{n,m} ≅ ℝ^{nm}`.
pub fn verify_unit_mass(n: usize, t: &ConeScale, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    fourier_estimate(n, t, None, samples, seed)
}

/// Estimate of `∫ e^{i tr(x y′)} h_t(x) dx`, which equals `exp(-tr(t y′y))`.
pub fn verify_fourier(t: &ConeScale, y: &MatrixPoint, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    fourier_estimate(y.n(), t, Some(y), samples, seed)
}

fn fourier_estimate(
    n: usize,
    t: &ConeScale,
    y: Option<&MatrixPoint>,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let m = t.m();
    if n < m {
        return Err(Error::InvalidInput(format!("need n ≥ m, got n = {n}, m = {m}")));
    }
    if let Some(y) = y {
        if y.m() != m {
            return Err(Error::InvalidInput("frequency shape does not match the scale".into()));
        }
    }
    t.cholesky()?;
    let proposal = RowGaussian::new(n, t)?;
    monte_carlo(samples, seed, |rng| {
        let x = proposal.sample(rng);
        let point = MatrixPoint { entries: x };
        let h = heat_kernel_matrix(&point, t).expect("validated scale");
        let phase = y.map_or(1.0, |y| point.entries.dot(y.entries()).cos());
        h / proposal.density(&point.entries) * phase
    })
}

/// Monte-Carlo `Γ_m(α) = ∫_{𝒫_m} e^{-tr r} |r|^{α-(m+1)/2} dr` over
/// Cholesky factors `r = LL′`, for which `dr = 2^m ∏ l_ii^{m-i+1} dL`.
///
/// The proposal draws `l_ii² ~ Gamma(α - (i-1)/2, κ)` and `l_ij ~ N(0, κ/2)`
/// with `κ = 1.5`, so the importance weights are not constant.
pub fn siegel_gamma_monte_carlo(m: usize, alpha: f64, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if m == 0 || alpha <= (m as f64 - 1.0) / 2.0 {
        return Err(Error::Domain(format!(
            "need alpha > (m-1)/2, got m = {m}, alpha = {alpha}"
        )));
    }
    let kappa = INFLATION;
    let shapes: Vec<f64> = (0..m).map(|i| alpha - i as f64 / 2.0).collect();
    let gammas: Vec<Gamma<f64>> = shapes
        .iter()
        .map(|&s| Gamma::new(s, kappa).map_err(|e| Error::Domain(e.to_string())))
        .collect::<Result<_>>()?;
    let ln_gamma_shapes: Vec<f64> = shapes.iter().map(|&s| ln_gamma(s)).collect::<Result<_>>()?;
    let sigma2 = kappa / 2.0;
    let d = (m as f64 + 1.0) / 2.0;
    let mf = m as f64;
    monte_carlo(samples, seed, |rng| {
        let mut log_w = 0.0;
        for i in 0..m {
            let v: f64 = gammas[i].sample(rng);
            let l = v.sqrt();
            // target in l: e^{-l²} l^{2(α-d)} · 2 l^{m-i}   (1-based exponent m-i+1)
            let log_f = -v + 2.0 * (alpha - d) * l.ln() + 2f64.ln() + (mf - i as f64) * l.ln();
            // proposal in l: p_v(l²) · 2l
            let s = shapes[i];
            let log_q = (s - 1.0) * v.ln() - v / kappa - ln_gamma_shapes[i] - s * kappa.ln() + 2f64.ln() + l.ln();
            log_w += log_f - log_q;
        }
        for _ in 0..m * (m - 1) / 2 {
            let z: f64 = rng.sample(StandardNormal);
            let l = z * sigma2.sqrt();
            let log_f = -l * l;
            let log_q = -l * l / (2.0 * sigma2) - 0.5 * (2.0 * PI * sigma2).ln();
            log_w += log_f - log_q;
        }
        log_w.exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn random_matrix(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn norm_examples() {
        let col = MatrixPoint::from_row_slice(3, 1, &[3.0, 4.0, 12.0]).unwrap();
        assert!((matrix_norm(&col) - 13.0).abs() < 1e-14);
        let mut e = DMatrix::zeros(4, 2);
        e[(0, 0)] = 1.0;
        e[(1, 1)] = 1.0;
        assert!((matrix_norm(&MatrixPoint::new(e).unwrap()) - 1.0).abs() < 1e-15);
        // product of singular values
        let x = random_matrix(5, 3, 7);
        let svd: f64 = x.clone().svd(false, false).singular_values.iter().product();
        assert!((matrix_norm(&MatrixPoint::new(x).unwrap()) - svd).abs() < 1e-12 * svd);
        assert!(MatrixPoint::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn heat_kernel_values() {
        let zero = MatrixPoint::new(DMatrix::zeros(2, 2)).unwrap();
        let v = heat_kernel_matrix(&zero, &ConeScale::identity(2)).unwrap();
        assert!((v - (4.0 * PI).powi(-2)).abs() < 1e-16);
        assert!((v - 0.0063326).abs() < 1e-7);
        // m = 1 is the Gauss–Weierstrass kernel
        let x = MatrixPoint::from_row_slice(3, 1, &[0.3, -1.0, 0.7]).unwrap();
        let tau = 0.8;
        let t = ConeScale::diagonal(&[tau]).unwrap();
        let r2 = 0.09 + 1.0 + 0.49;
        let w = (4.0 * PI * tau).powf(-1.5) * (-r2 / (4.0 * tau)).exp();
        assert!((heat_kernel_matrix(&x, &t).unwrap() - w).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_invariance() {
        let t = ConeScale::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5])).unwrap();
        for seed in 0..5 {
            let x = random_matrix(3, 2, seed);
            let q = random_matrix(3, 3, 100 + seed).qr().q();
            let a = heat_kernel_matrix(&MatrixPoint::new(x.clone()).unwrap(), &t).unwrap();
            let b = heat_kernel_matrix(&MatrixPoint::new(&q * x).unwrap(), &t).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn scale_validation() {
        assert!(ConeScale::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(ConeScale::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
        let bad = ConeScale::diagonal(&[1.0, 1e-14]).unwrap();
        let x = MatrixPoint::new(DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(heat_kernel_matrix(&x, &bad), Err(Error::SingularScale(_))));
        let r = ConeScale::diagonal(&[2.0, 8.0]).unwrap();
        assert!((invariant_measure_weight(&r) - 16f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn unit_mass() {
        let one = ConeScale::identity(1);
        let e = verify_unit_mass(1, &one, 200_000, 3).unwrap();
        assert!((e.estimate - 1.0).abs() < 1e-2 && e.covers(1.0, 4.0), "{e:?}");
        let t = ConeScale::diagonal(&[1.0, 4.0]).unwrap();
        let e = verify_unit_mass(2, &t, 200_000, 4).unwrap();
        assert!(e.covers(1.0, 4.0) && e.stderr < 1e-2, "{e:?}");
    }

    #[test]
    fn fourier_at_a_point() {
        let t = ConeScale::diagonal(&[1.0, 4.0]).unwrap();
        let y = MatrixPoint::from_row_slice(2, 2, &[0.2, 0.1, -0.1, 0.15]).unwrap();
        let exact = (-(t.matrix() * y.gram()).trace()).exp();
        let e = verify_fourier(&t, &y, 200_000, 5).unwrap();
        assert!((e.estimate - exact).abs() < 1e-2, "{e:?} vs {exact}");
    }

    #[test]
    fn siegel_gamma_by_sampling() {
        // m = 1 reduces to Γ(α)
        let e = siegel_gamma_monte_carlo(1, 2.5, 100_000, 9).unwrap();
        assert!(e.covers(gamma(2.5).unwrap(), 4.0), "{e:?}");
        let e = siegel_gamma_monte_carlo(2, 2.0, 200_000, 11).unwrap();
        assert!(e.covers(PI / 2.0, 4.0) && e.stderr < 1e-2, "{e:?}");
        assert!((cone_gamma(2, 2.0).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!((cone_beta(2, 2.0, 2.0).unwrap() - 0.0698131700798).abs() < 1e-12);
    }

    #[test]
    fn deterministic_batches() {
        let t = ConeScale::diagonal(&[1.0, 4.0]).unwrap();
        let a = verify_unit_mass(2, &t, 150_000, 42).unwrap();
        let b = verify_unit_mass(2, &t, 150_000, 42).unwrap();
        assert_eq!(a, b);
    }
}
