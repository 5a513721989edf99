//! Scalar special functions: real Gamma, the McDonald function `K_ν`, and the
//! Siegel gamma and beta functions of the cone of positive definite matrices.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Lanczos series for `Γ(x)`, `x ≥ 1/2`.
fn gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * a
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Gamma function of a real argument.
///
/// Negative non-integer arguments go through the reflection formula.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite {x}")));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx)
        let s = (PI * x).sin();
        return Ok(PI / (s * gamma_lanczos(1.0 - x)));
    }
    if x > 171.0 {
        return Ok(f64::INFINITY);
    }
    // Small positive integers are exact.
    if x == x.floor() && x <= 21.0 {
        let mut f = 1.0;
        for k in 2..(x as u64) {
            f *= k as f64;
        }
        return Ok(f);
    }
    Ok(gamma_lanczos(x))
}

/// `ln|Γ(x)|` for real `x` away from the poles.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        let s = (PI * x).sin().abs();
        return Ok(PI.ln() - s.ln() - ln_gamma_lanczos(1.0 - x));
    }
    Ok(ln_gamma_lanczos(x))
}

/// McDonald function (modified Bessel function of the second kind) `K_ν(x)`.
///
/// Evaluated from `K_ν(x) = ∫_0^∞ e^{−x cosh t} cosh(νt) dt` by the trapezoid
/// rule, which converges geometrically for this entire, doubly decaying
/// integrand. The step is halved until two levels agree to near roundoff.
pub fn mcdonald_k(nu: f64, x: f64) -> Result<f64> {
    Ok(mcdonald_k_scaled(nu, x)? * (-x).exp())
}

/// `e^{x} K_ν(x)`, free of underflow for large `x`.
pub fn mcdonald_k_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K_nu needs x > 0, got {x}")));
    }
    let nu = nu.abs();
    // log of the scaled integrand e^{−x(cosh t − 1)} cosh(νt)
    let log_integrand = |t: f64| -> f64 {
        let c = if t < 1e-4 {
            // cosh t − 1 without cancellation
            let t2 = t * t;
            t2 * (0.5 + t2 / 24.0)
        } else {
            t.cosh() - 1.0
        };
        -x * c + log_cosh(nu * t)
    };
    // The integrand peaks where x sinh t = ν tanh(νt); locate it crudely.
    let mut peak_t = 0.0;
    let mut peak = log_integrand(0.0);
    let mut t = 0.0;
    loop {
        t += 0.05;
        let v = log_integrand(t);
        if v > peak {
            peak = v;
            peak_t = t;
        } else if t > peak_t + 1.0 {
            break;
        }
    }
    // Truncate where the integrand is below 1e−18 of the peak.
    let cutoff = peak - 18.0 * std::f64::consts::LN_10;
    // For large x the integrand is a narrow Gaussian of width ~ 1/√x.
    let mut t_max = peak_t + (2.0 * 45.0 / x).sqrt().min(1.0);
    while log_integrand(t_max) > cutoff {
        t_max *= 1.25;
    }
    let f = |t: f64| log_integrand(t).exp();

    let mut n = 32usize;
    let mut h = t_max / n as f64;
    let mut sum = 0.5 * (f(0.0) + f(t_max));
    for k in 1..n {
        sum += f(k as f64 * h);
    }
    let mut estimate = sum * h;
    // Halving the step squares the error of the trapezoid rule here, so a
    // 1e-10 change between levels leaves the finer level at roundoff.
    for _ in 0..16 {
        for k in 0..n {
            sum += f((2 * k + 1) as f64 * 0.5 * h);
        }
        n *= 2;
        h *= 0.5;
        let next = sum * h;
        let done = (next - estimate).abs() <= 1e-10 * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    Ok(estimate)
}

fn log_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Siegel gamma function `Γ_m(α) = π^{m(m−1)/4} ∏_{j=0}^{m−1} Γ(α − j/2)`.
pub fn siegel_gamma(m: usize, alpha: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("cone rank must be positive".into()));
    }
    if alpha <= (m as f64 - 1.0) / 2.0 {
        return Err(Error::Domain(format!(
            "Siegel gamma of rank {m} needs alpha > {}, got {alpha}",
            (m as f64 - 1.0) / 2.0
        )));
    }
    let mf = m as f64;
    let mut p = PI.powf(mf * (mf - 1.0) / 4.0);
    for j in 0..m {
        p *= gamma(alpha - j as f64 / 2.0)?;
    }
    Ok(p)
}

/// Siegel beta function `B_m(α, β) = Γ_m(α)Γ_m(β)/Γ_m(α+β)`.
pub fn siegel_beta(m: usize, alpha: f64, beta: f64) -> Result<f64> {
    Ok(siegel_gamma(m, alpha)? * siegel_gamma(m, beta)? / siegel_gamma(m, alpha + beta)?)
}

/// Binomial coefficient as a float.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert_eq!(gamma(5.0).unwrap(), 24.0);
        assert_relative_eq!(gamma(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(-0.5).unwrap(), -2.0 * PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(-1.5).unwrap(), 4.0 * PI.sqrt() / 3.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(30.5).unwrap(), 4.822_696_933_490_909e31, max_relative = 1e-12);
        assert!(matches!(gamma(0.0), Err(Error::Pole(_))));
        assert!(matches!(gamma(-3.0), Err(Error::Pole(_))));
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.3, 1.7, 7.25, 40.0, -2.5] {
            assert_relative_eq!(
                ln_gamma(x).unwrap(),
                gamma(x).unwrap().abs().ln(),
                max_relative = 1e-12,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn k_half_closed_form() {
        for &x in &[0.1, 1.0, 2.0, 10.0, 50.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert_relative_eq!(mcdonald_k(0.5, x).unwrap(), exact, max_relative = 1e-12);
            // K_{3/2}(x) = √(π/2x) e^{−x}(1 + 1/x)
            let exact = exact * (1.0 + 1.0 / x);
            assert_relative_eq!(mcdonald_k(1.5, x).unwrap(), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn k0_series_oracle() {
        // K_0(x) = −(ln(x/2) + γ) I_0(x) + Σ_{k≥1} (x²/4)^k/(k!)² H_k
        let x: f64 = 1.0;
        let euler = 0.577_215_664_901_532_9;
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut i0 = 1.0;
        let mut harmonic = 0.0;
        let mut tail = 0.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= q / (kf * kf);
            harmonic += 1.0 / kf;
            i0 += term;
            tail += term * harmonic;
        }
        let k0 = -((x / 2.0).ln() + euler) * i0 + tail;
        assert_relative_eq!(mcdonald_k(0.0, x).unwrap(), k0, max_relative = 1e-12);
    }

    #[test]
    fn k_domain_error() {
        assert!(matches!(mcdonald_k(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(mcdonald_k(1.0, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn siegel_values() {
        assert_eq!(siegel_gamma(1, 2.0).unwrap(), 1.0);
        assert_relative_eq!(siegel_gamma(2, 2.0).unwrap(), PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(siegel_gamma(2, 1.5).unwrap(), PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(siegel_beta(1, 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(siegel_beta(1, 0.5, 0.5).unwrap(), PI, max_relative = 1e-14);
        assert!(siegel_gamma(2, 0.5).is_err());
    }

    #[test]
    fn binomial_row() {
        let row: Vec<f64> = (0..=4).map(|k| binomial(4, k)).collect();
        assert_eq!(row, vec![1.0, 4.0, 6.0, 4.0, 1.0]);
    }
}
