//! Composite wavelet transforms, Calderón's reproducing formula and the
//! inversion of potentials by truncated scale integrals.
//!
//! For a semigroup with symbol `e^{-tσ(ξ)}` and a measure `μ`, the transform
//! `W_a f(·, t) = ∫ Q_{tη} f e^{-atη} dμ(η)` acts on the frequency `ξ` by
//! `μ̃(tR)`, the Laplace transform of `μ` at `tR`, with rate `R = a + σ(ξ)`.
//! The truncated integrals `∫_ε^T W_a f(·, t) dt/t^{1+α}` are therefore
//! computed rate by rate and applied as a single multiplier per `ε`.

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, GridSpec, MAX_DIM};
use crate::measure::{calderon_failure, inversion_failure, ConstantOrder, WaveletMeasure};
use crate::quadrature::{piecewise_to_infinity, LogTrapezoid};
use crate::record::{ConvergenceRecord, RecordKind};
use crate::semigroup::SemigroupFamily;
use crate::spectral::{apply_multiplier, fft_nd, norm, settle_reality, SpectralMultiplier};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;

const ZERO_CONSTANT: f64 = 1e-12;
const TAIL_LIMIT: f64 = 1e-6;
/// `e^{-40}` is far below double precision relative to the retained integral.
const DECAY_SPAN: f64 = 40.0;
const MAX_T: f64 = 1e14;

/// `W_a f(x, t)` for a semigroup family and wavelet measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeTransform {
    pub family: SemigroupFamily,
    pub mu: WaveletMeasure,
    pub a: f64,
}

impl CompositeTransform {
    pub fn new(family: SemigroupFamily, mu: WaveletMeasure, a: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("a must be nonnegative, got {a}")));
        }
        Ok(Self { family, mu, a })
    }

    /// Rate `R = a + σ(|ξ|)` at which `μ̃` is sampled.
    pub fn rate(&self, xi_norm: f64) -> f64 {
        self.a + self.family.sigma(xi_norm)
    }

    /// Multiplier of `W_a f(·, t)`: `Σ c_j e^{-t η_j R(ξ)}`.
    pub fn multiplier(&self, t: f64) -> SpectralMultiplier<'_> {
        SpectralMultiplier::real(move |xi| {
            let r = self.rate(norm(xi));
            self.mu.laplace_transform(t * r)
        })
    }
}

/// `W_a f(·, t)`.
pub fn composite_transform(ct: &CompositeTransform, f: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    apply_multiplier(f, &ct.multiplier(t))
}

/// Where reconstruction errors are measured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ErrorRegion {
    #[default]
    Full,
    /// Points with `|x_a| ≤ fraction · L_a` on every axis.
    Interior(f64),
}

impl ErrorRegion {
    pub(crate) fn relative_error(&self, est: &GridFunction, reference: &GridFunction, p: f64) -> Result<f64> {
        match *self {
            ErrorRegion::Full => est.relative_error(reference, p),
            ErrorRegion::Interior(frac) => {
                let l = reference.spec().half_widths().to_vec();
                est.relative_error_where(reference, p, |x| x.iter().zip(&l).all(|(v, l)| v.abs() <= frac * l))
            }
        }
    }
}

/// Parameters of a truncated scale integral `∫_ε^T … dt/t^{1+exponent}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionJob {
    pub order_exponent: f64,
    /// Strictly decreasing truncation parameters.
    pub epsilons: Vec<f64>,
    pub t_max: f64,
    /// Raise `t_max` until the slowest nonzero rate has decayed.
    pub auto_extend: bool,
    pub nodes_per_decade: usize,
    pub region: ErrorRegion,
}

impl InversionJob {
    pub fn new(order_exponent: f64, epsilons: Vec<f64>) -> Self {
        Self {
            order_exponent,
            epsilons,
            t_max: 60.0,
            auto_extend: true,
            nodes_per_decade: 32,
            region: ErrorRegion::Full,
        }
    }

    pub fn with_region(mut self, region: ErrorRegion) -> Self {
        self.region = region;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.order_exponent >= 0.0) {
            return Err(Error::Domain(format!(
                "order exponent must be nonnegative, got {}",
                self.order_exponent
            )));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidInput("no truncation parameters".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidInput("truncation parameters must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput(
                "truncation parameters must be strictly decreasing".into(),
            ));
        }
        if !(self.t_max > self.epsilons[0]) {
            return Err(Error::InvalidInput(format!(
                "t_max = {} must exceed the largest epsilon {}",
                self.t_max, self.epsilons[0]
            )));
        }
        if self.nodes_per_decade < 8 {
            return Err(Error::InvalidInput("need at least 8 nodes per decade".into()));
        }
        Ok(())
    }
}

/// Reconstruction at the best truncation parameter and the whole sweep.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub estimate: GridFunction,
    pub epsilon: f64,
    pub record: ConvergenceRecord,
    /// Normalizing constant the integral was divided by.
    pub constant: f64,
    /// Upper limit actually used.
    pub t_max: f64,
    /// Every reconstruction, in the order of the truncation parameters.
    pub estimates: Vec<GridFunction>,
}

/// The scale integrand `μ̃(tR) t^{-1-α}` split into the atom at the origin
/// and the decaying part.
pub(crate) struct ScaleIntegrand {
    pub(crate) at_zero: f64,
    pub(crate) decaying: Vec<(f64, f64)>,
    pub(crate) exponent: f64,
}

impl ScaleIntegrand {
    pub(crate) fn new(mu: &WaveletMeasure, exponent: f64) -> Self {
        Self {
            at_zero: mu.atom_at_zero(),
            decaying: mu.discrete().filter(|p| p.0 > 0.0).collect(),
            exponent,
        }
    }

    pub(crate) fn smallest_location(&self) -> f64 {
        self.decaying.iter().map(|p| p.0).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn total_variation(&self) -> f64 {
        self.at_zero.abs() + self.decaying.iter().map(|p| p.1.abs()).sum::<f64>()
    }

    /// `(M(t), t M'(t))` with `M(t) = μ̃(tR)`.
    fn m_and_tdm(&self, t: f64, r: f64) -> (f64, f64) {
        let mut m = self.at_zero;
        let mut tdm = 0.0;
        for &(eta, c) in &self.decaying {
            let x = t * eta * r;
            let e = c * (-x).exp();
            m += e;
            tdm -= x * e;
        }
        (m, tdm)
    }

    fn segment(&self, rule: &LogTrapezoid, r: f64) -> f64 {
        let a = self.exponent;
        let body: f64 = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(&t, &w)| w * self.m_and_tdm(t, r).0 * t.powf(-1.0 - a))
            .sum();
        // G(u) = M t^{-α}, G'(u) = t^{-α} (t M' - α M)
        let dg = |t: f64| {
            let (m, tdm) = self.m_and_tdm(t, r);
            t.powf(-a) * (tdm - a * m)
        };
        body + rule.end_correction(dg(rule.t0()), dg(rule.t1()))
    }

    /// `∫_T^∞ c_0 t^{-1-α} dt`.
    fn atom_tail(&self, t_max: f64) -> f64 {
        if self.at_zero == 0.0 {
            0.0
        } else {
            self.at_zero * t_max.powf(-self.exponent) / self.exponent
        }
    }
}

/// Truncated integrals for every epsilon at one rate, cumulative from the top.
pub(crate) fn sweep(integrand: &ScaleIntegrand, rules: &[LogTrapezoid], t_max: f64, r: f64) -> Vec<f64> {
    if r == 0.0 {
        // μ̃(0) is the total mass, zero for every admissible measure.
        return vec![0.0; rules.len()];
    }
    let mut acc = integrand.atom_tail(t_max);
    rules
        .iter()
        .map(|rule| {
            acc += integrand.segment(rule, r);
            acc
        })
        .collect()
}

/// `∫_ε^T μ̃(tR) t^{-1-α} dt` plus the analytic tail of an atom at the origin.
pub fn truncated_response(
    mu: &WaveletMeasure,
    exponent: f64,
    rate: f64,
    epsilon: f64,
    t_max: f64,
    nodes_per_decade: usize,
) -> f64 {
    let integrand = ScaleIntegrand::new(mu, exponent);
    let rule = LogTrapezoid::new(epsilon, t_max, nodes_per_decade);
    sweep(&integrand, std::slice::from_ref(&rule), t_max, rate)[0]
}

fn rates_by_frequency(ct: &CompositeTransform, spec: &GridSpec) -> (Vec<f64>, Vec<u32>) {
    let d = spec.dim();
    let rates: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let mut xi = [0.0; MAX_DIM];
            spec.frequency_vector(i, &mut xi[..d]);
            ct.rate(norm(&xi[..d]))
        })
        .collect();
    let mut unique: Vec<f64> = Vec::new();
    let mut slot: HashMap<u64, u32> = HashMap::new();
    let index = rates
        .iter()
        .map(|r| {
            *slot.entry(r.to_bits()).or_insert_with(|| {
                unique.push(*r);
                (unique.len() - 1) as u32
            })
        })
        .collect();
    (unique, index)
}

/// Upper scale limit for a job: `job.t_max`, raised when allowed until the
/// slowest nonzero rate has decayed, then checked against the tail bound.
pub(crate) fn scale_limit(integrand: &ScaleIntegrand, slowest_rate: f64, job: &InversionJob) -> Result<f64> {
    let decay = integrand.smallest_location() * slowest_rate;
    let mut t_max = job.t_max;
    if !(decay.is_finite() && decay > 0.0) {
        return Ok(t_max);
    }
    if job.auto_extend {
        t_max = t_max.max(DECAY_SPAN / decay).min(MAX_T);
    }
    let bt = decay * t_max;
    let tail = integrand.total_variation() * (-bt).exp() / bt * t_max.powf(-integrand.exponent);
    if tail > TAIL_LIMIT {
        return Err(Error::DivergentTail(tail));
    }
    Ok(t_max)
}

/// One log-trapezoid rule per segment `[ε_1, T], [ε_2, ε_1], …`.
pub(crate) fn segment_rules(job: &InversionJob, t_max: f64) -> Vec<LogTrapezoid> {
    let mut bounds = vec![t_max];
    bounds.extend_from_slice(&job.epsilons);
    bounds
        .windows(2)
        .map(|w| LogTrapezoid::new(w[1], w[0], job.nodes_per_decade))
        .collect()
}

/// Applies `response(k, u) / constant` at every frequency whose rate class is
/// `u`, once for each truncation index `k`.
pub(crate) fn apply_responses<F>(
    input: &GridFunction,
    index: &[u32],
    count: usize,
    constant: f64,
    response: F,
) -> Result<Vec<GridFunction>>
where
    F: Fn(usize, usize) -> Complex64 + Sync,
{
    let spec = input.spec();
    let mut spectrum = input.values().to_vec();
    fft_nd(spec, &mut spectrum, false);
    let scale = 1.0 / (constant * spectrum.len() as f64);
    (0..count)
        .map(|k| {
            let mut v: Vec<Complex64> = spectrum
                .par_iter()
                .zip(index.par_iter())
                .map(|(x, &u)| x * response(k, u as usize) * scale)
                .collect();
            fft_nd(spec, &mut v, true);
            let g = GridFunction::new(spec.clone(), v, Domain::Spatial)?;
            Ok(settle_reality(input, g))
        })
        .collect()
}

/// Runs the sweep and returns one normalized reconstruction per epsilon.
fn run_sweep(
    ct: &CompositeTransform,
    input: &GridFunction,
    job: &InversionJob,
    constant: f64,
) -> Result<(Vec<GridFunction>, f64)> {
    let integrand = ScaleIntegrand::new(&ct.mu, job.order_exponent);
    if integrand.at_zero != 0.0 && job.order_exponent == 0.0 {
        return Err(Error::DivergentConstant(
            "an atom at the origin makes the dt/t integral diverge".into(),
        ));
    }
    let (rates, index) = rates_by_frequency(ct, input.spec());
    let slowest = rates.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
    let t_max = scale_limit(&integrand, slowest, job)?;
    log::debug!(
        "scale integral over [{:e}, {t_max:e}] at {} distinct rates",
        job.epsilons.last().unwrap(),
        rates.len()
    );
    let rules = segment_rules(job, t_max);
    let responses: Vec<Vec<f64>> = rates.par_iter().map(|&r| sweep(&integrand, &rules, t_max, r)).collect();
    let out = apply_responses(input, &index, job.epsilons.len(), constant, |k, u| {
        Complex64::new(responses[u][k], 0.0)
    })?;
    Ok((out, t_max))
}

pub(crate) fn assemble(
    estimates: Vec<GridFunction>,
    job: &InversionJob,
    reference: Option<&GridFunction>,
    constant: f64,
    t_max: f64,
) -> Result<Reconstruction> {
    let (record, best) = match reference {
        Some(r) => {
            let mut rec = ConvergenceRecord::new(RecordKind::Error);
            let mut best = 0;
            for (k, est) in estimates.iter().enumerate() {
                let l2 = job.region.relative_error(est, r, 2.0)?;
                let linf = job.region.relative_error(est, r, f64::INFINITY)?;
                rec.push(job.epsilons[k], l2, linf);
                if l2 < rec.rows[best].rel_l2 {
                    best = k;
                }
            }
            (rec, best)
        }
        None => {
            let mut rec = ConvergenceRecord::new(RecordKind::Cauchy);
            for k in 1..estimates.len() {
                let l2 = job.region.relative_error(&estimates[k - 1], &estimates[k], 2.0)?;
                let linf = job
                    .region
                    .relative_error(&estimates[k - 1], &estimates[k], f64::INFINITY)?;
                rec.push(job.epsilons[k], l2, linf);
            }
            (rec, estimates.len() - 1)
        }
    };
    Ok(Reconstruction {
        estimate: estimates[best].clone(),
        epsilon: job.epsilons[best],
        record,
        constant,
        t_max,
        estimates,
    })
}

/// Calderón's reproducing formula: `(1/c_μ) ∫_ε^T W_a f(·, t) dt/t → f`.
pub fn reproduce(ct: &CompositeTransform, f: &GridFunction, job: &InversionJob) -> Result<Reconstruction> {
    job.validate()?;
    if job.order_exponent != 0.0 {
        return Err(Error::InvalidInput("the reproducing formula uses exponent 0".into()));
    }
    let report = ct.mu.check_calderon();
    if !report.passes {
        return Err(Error::NotAdmissible(calderon_failure(&report)));
    }
    let c = ct.mu.c_constant(ConstantOrder::Calderon)?;
    if c.abs() < ZERO_CONSTANT {
        return Err(Error::ZeroConstant(c));
    }
    let (estimates, t_max) = run_sweep(ct, f, job, c)?;
    assemble(estimates, job, Some(f), c, t_max)
}

/// Inversion of a potential: `(1/c_{α,μ}) ∫_ε^T W_a φ(·, t) dt/t^{1+α} → f`.
///
/// `reference`, when given, is the function the potential was built from.
pub fn invert_potential(
    ct: &CompositeTransform,
    phi: &GridFunction,
    job: &InversionJob,
    reference: Option<&GridFunction>,
) -> Result<Reconstruction> {
    job.validate()?;
    let alpha = job.order_exponent;
    let report = ct.mu.check_inversion(alpha, alpha + 1.0)?;
    if !report.passes {
        return Err(Error::NotAdmissible(inversion_failure(&report)));
    }
    let c = ct.mu.c_constant(ConstantOrder::Alpha(alpha))?;
    if c.abs() < ZERO_CONSTANT {
        return Err(Error::ZeroConstant(c));
    }
    let (estimates, t_max) = run_sweep(ct, phi, job, c)?;
    assemble(estimates, job, reference, c, t_max)
}

/// The truncated integral rewritten as `∫_0^∞ e^{-εRs} w(s) ds` with weight
/// `w = λ_α` (inversion) or `w = k` (reproducing formula).
#[derive(Debug, Clone, Copy)]
pub struct KukuProfile<'a> {
    mu: &'a WaveletMeasure,
    exponent: Option<f64>,
    epsilon: f64,
}

/// Weight profile of the truncated integral; `exponent = None` selects the
/// reproducing formula.
pub fn kuku_reduction(mu: &WaveletMeasure, exponent: Option<f64>, epsilon: f64) -> Result<KukuProfile<'_>> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    match exponent {
        None => {
            let report = mu.check_calderon();
            if !report.passes {
                return Err(Error::NotAdmissible(calderon_failure(&report)));
            }
        }
        Some(a) => {
            let report = mu.check_inversion(a, a + 1.0)?;
            if !report.passes {
                return Err(Error::NotAdmissible(inversion_failure(&report)));
            }
        }
    }
    Ok(KukuProfile { mu, exponent, epsilon })
}

impl KukuProfile<'_> {
    pub fn weight(&self, s: f64) -> Result<f64> {
        match self.exponent {
            None => self.mu.calderon_k(s),
            Some(a) => self.mu.lambda_alpha(a, s),
        }
    }

    /// `∫_0^∞ e^{-εRs} w(s) ds`.
    pub fn mode_factor(&self, rate: f64) -> f64 {
        let breaks: Vec<f64> = self.mu.atoms().iter().map(|a| a.0).collect();
        let k = self.epsilon * rate;
        piecewise_to_infinity(|s| (-k * s).exp() * self.weight(s).unwrap_or(0.0), 0.0, &breaks, 1e-13)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::make_fd_measure;
    use crate::semigroup::apply_semigroup;
    use std::f64::consts::{LN_2, PI};

    fn d1m2() -> WaveletMeasure {
        WaveletMeasure::new(vec![(1.0, 1.0), (2.0, -1.0)], None).unwrap()
    }

    fn odd_bump(spec: &GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x| {
            let u = x[0] / 8.0;
            if u.abs() < 1.0 {
                u * (1.0 - 1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn transform_is_bounded_by_total_variation() {
        use rand::{Rng, SeedableRng};
        let spec = GridSpec::cube(1, 256, 16.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mu = make_fd_measure(2).unwrap();
        for trial in 0..8 {
            let v: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = GridFunction::from_real(&spec, v).unwrap();
            let a = if trial % 2 == 0 { 0.0 } else { 0.5 };
            let ct = CompositeTransform::new(SemigroupFamily::GaussWeierstrass, mu.clone(), a).unwrap();
            for t in [0.1, 1.0, 5.0] {
                let w = composite_transform(&ct, &f, t).unwrap();
                for p in [1.0, 2.0] {
                    let bound = mu.total_variation() * f.norm(p).unwrap();
                    assert!(w.norm(p).unwrap() <= bound * (1.0 + 1e-12), "t = {t}, p = {p}");
                }
            }
        }
    }

    #[test]
    fn single_atom_is_the_semigroup() {
        let spec = GridSpec::cube(1, 128, 10.0).unwrap();
        let f = odd_bump(&spec);
        let delta = WaveletMeasure::new(vec![(1.0, 1.0)], None).unwrap();
        let ct = CompositeTransform::new(SemigroupFamily::Poisson, delta, 0.0).unwrap();
        let w = composite_transform(&ct, &f, 0.7).unwrap();
        let s = apply_semigroup(&SemigroupFamily::Poisson, &f, 0.7).unwrap();
        assert!(w.relative_error(&s, 2.0).unwrap() < 1e-14);
        // scale covariance: δ_η gives S_{tη}
        let delta = WaveletMeasure::new(vec![(2.5, 1.0)], None).unwrap();
        let ct = CompositeTransform::new(SemigroupFamily::GaussWeierstrass, delta, 0.0).unwrap();
        let w = composite_transform(&ct, &f, 0.4).unwrap();
        let s = apply_semigroup(&SemigroupFamily::GaussWeierstrass, &f, 1.0).unwrap();
        assert!(w.relative_error(&s, 2.0).unwrap() < 1e-13);
    }

    #[test]
    fn first_difference_cancels_at_small_scale() {
        let spec = GridSpec::cube(1, 256, 10.0).unwrap();
        let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0]).exp());
        let ct = CompositeTransform::new(SemigroupFamily::GaussWeierstrass, d1m2(), 0.0).unwrap();
        let w = composite_transform(&ct, &f, 1e-4).unwrap();
        assert!(w.max_abs() <= 1e-3 * f.max_abs());
    }

    #[test]
    fn reproduce_gw_and_poisson_agree() {
        let spec = GridSpec::cube(1, 1024, 32.0).unwrap();
        let f = odd_bump(&spec);
        let job = InversionJob::new(0.0, vec![1e-1, 1e-2, 1e-3]);
        let mut limits = Vec::new();
        for family in [SemigroupFamily::GaussWeierstrass, SemigroupFamily::Poisson] {
            let ct = CompositeTransform::new(family, d1m2(), 0.0).unwrap();
            let rec = reproduce(&ct, &f, &job).unwrap();
            assert!((rec.constant - LN_2).abs() < 1e-15);
            assert!(rec.record.is_non_increasing(), "{:?}", rec.record);
            limits.push(rec.estimates.last().unwrap().clone());
        }
        let gap = limits[0].relative_error(&limits[1], 2.0).unwrap();
        assert!(gap < 2e-3, "gap {gap:e}");
    }

    #[test]
    fn reproduce_zero_and_rejects_inadmissible() {
        let spec = GridSpec::cube(1, 64, 8.0).unwrap();
        let zero = GridFunction::zeros(&spec);
        let job = InversionJob::new(0.0, vec![1e-1, 1e-2]);
        let ct = CompositeTransform::new(SemigroupFamily::GaussWeierstrass, d1m2(), 0.0).unwrap();
        let rec = reproduce(&ct, &zero, &job).unwrap();
        assert!(rec.estimates.iter().all(|e| e.max_abs() == 0.0));
        let ct = CompositeTransform::new(SemigroupFamily::GaussWeierstrass, make_fd_measure(1).unwrap(), 0.0).unwrap();
        assert!(matches!(reproduce(&ct, &zero, &job), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn kuku_profile_matches_truncated_integral() {
        let mu1 = make_fd_measure(1).unwrap();
        let alpha = 0.5;
        let eps = 1e-2;
        let rate: f64 = 2.0; // Flett on |ξ0| = 1
        let direct = rate.powf(-alpha) * truncated_response(&mu1, alpha, rate, eps, 1e4, 64);
        let profile = kuku_reduction(&mu1, Some(alpha), eps).unwrap();
        let reduced = profile.mode_factor(rate);
        assert!((direct - reduced).abs() < 1e-6 * reduced.abs(), "{direct} vs {reduced}");
        assert_eq!(profile.weight(0.7).unwrap(), mu1.lambda_alpha(alpha, 0.7).unwrap());

        let mu = d1m2();
        let direct = truncated_response(&mu, 0.0, 1.0, eps, 1e4, 64);
        let profile = kuku_reduction(&mu, None, eps).unwrap();
        let reduced = profile.mode_factor(1.0);
        assert!((direct - reduced).abs() < 1e-6 * reduced.abs(), "{direct} vs {reduced}");
    }

    #[test]
    fn flett_inversion_converges() {
        let spec = GridSpec::cube(1, 512, 20.0).unwrap();
        let f = GridFunction::from_fn(&spec, |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + 0.3 * x[0]));
        let phi = crate::potential::potential_multiplier(&crate::potential::PotentialSpec::flett(0.5), &f).unwrap();
        let ct = CompositeTransform::new(SemigroupFamily::Poisson, make_fd_measure(1).unwrap(), 1.0).unwrap();
        let job = InversionJob::new(0.5, vec![1e-1, 1e-2, 1e-3, 1e-4]);
        let rec = invert_potential(&ct, &phi, &job, Some(&f)).unwrap();
        assert!((rec.constant - 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!(rec.record.is_non_increasing(), "{:?}", rec.record);
        // the missing head is about sqrt(eps s / π)
        let last = rec.record.last().unwrap().rel_l2;
        assert!(last < 2e-2, "{last}");
    }

    #[test]
    fn invert_linearity() {
        let spec = GridSpec::cube(1, 128, 10.0).unwrap();
        let f = odd_bump(&spec);
        let g = GridFunction::from_fn(&spec, |x| (x[0] * 0.9).sin() * (-x[0] * x[0] / 4.0).exp());
        let ct = CompositeTransform::new(SemigroupFamily::Poisson, make_fd_measure(2).unwrap(), 0.0).unwrap();
        let job = InversionJob::new(0.5, vec![1e-1, 1e-2]);
        let inv = |h: &GridFunction| invert_potential(&ct, h, &job, None).unwrap().estimate;
        let lhs = inv(&f.scale(2.0).add(&g).unwrap());
        let rhs = inv(&f).scale(2.0).add(&inv(&g)).unwrap();
        assert!(lhs.relative_error(&rhs, 2.0).unwrap() < 1e-10);
    }

    #[test]
    fn job_validation() {
        assert!(InversionJob::new(0.0, vec![1e-2, 1e-1]).validate().is_err());
        assert!(InversionJob::new(0.0, vec![]).validate().is_err());
        assert!(InversionJob::new(-1.0, vec![1e-1]).validate().is_err());
        assert!(InversionJob::new(0.5, vec![1e-1, 1e-3]).validate().is_ok());
    }

    #[test]
    fn divergent_tail_without_extension() {
        let spec = GridSpec::cube(1, 64, 20.0).unwrap();
        let f = odd_bump(&spec);
        let ct = CompositeTransform::new(SemigroupFamily::GaussWeierstrass, d1m2(), 0.0).unwrap();
        let mut job = InversionJob::new(0.0, vec![1e-1]);
        job.auto_extend = false;
        assert!(matches!(reproduce(&ct, &f, &job), Err(Error::DivergentTail(_))));
    }
}
