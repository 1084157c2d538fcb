//! Scalar special functions.
//!
//! Everything here is a pure function of its arguments: log-gamma on the
//! real line and in the complex plane, the confluent hypergeometric limit
//! function `0F1`, Tricomi's confluent hypergeometric function `Ψ`, the
//! regularized incomplete gamma function for integer shapes, and the
//! polynomial-logarithmic rate function `G_K` together with its
//! derivatives in the rate.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::quad::{exp_sinh_half_line, tanh_sinh_unit, GaussLaguerre};

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
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A finite point of the complex plane, used as the Mellin contour variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPoint(Complex64);

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(domain("ComplexPoint::new", format!("non-finite ({re}, {im})")));
        }
        Ok(Self(Complex64::new(re, im)))
    }

    pub fn real(re: f64) -> Result<Self> {
        Self::new(re, 0.0)
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

impl From<ComplexPoint> for Complex64 {
    fn from(p: ComplexPoint) -> Self {
        p.0
    }
}

/// `ln |Γ(x)|` for real `x`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1 - x) = π / sin(πx)
        let s = (PI * x).sin().abs();
        return PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Γ(z)` for complex `z` (some branch; only `exp` of it is meaningful).
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_complex(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

// ln sin(πz) without overflowing for large |Im z|
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im.abs() < 20.0 {
        return (z * PI).sin().ln();
    }
    if z.im > 0.0 {
        // sin(πz) = (i/2) e^{-iπz} (1 - e^{2iπz})
        -i * PI * z + (i * 0.5).ln() + (1.0 - (2.0 * i * PI * z).exp()).ln()
    } else {
        // sin(πz) = (-i/2) e^{iπz} (1 - e^{-2iπz})
        i * PI * z + (-i * 0.5).ln() + (1.0 - (-2.0 * i * PI * z).exp()).ln()
    }
}

/// Confluent hypergeometric limit function `0F1(; b; z)` for `b > 0`, `z ≥ 0`.
pub fn hyp0f1(b: f64, z: f64) -> Result<f64> {
    Ok(ln_hyp0f1(b, z)?.exp())
}

/// Natural logarithm of `0F1(; b; z)`; stays finite where the value overflows.
pub fn ln_hyp0f1(b: f64, z: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(domain("hyp0f1", format!("b = {b} must be positive")));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain("hyp0f1", format!("z = {z} must be finite and nonnegative")));
    }
    let nu = b - 1.0;
    let x = 2.0 * z.sqrt();
    if z > 400.0 && 4.0 * nu * nu < x {
        // 0F1(;b;z) = Γ(b) z^{(1-b)/2} I_{b-1}(2√z), Hankel expansion of I_ν
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            let next = -term * (mu - odd * odd) / (kf * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        let ln_i = x - 0.5 * (2.0 * PI * x).ln() + sum.ln();
        return Ok(ln_gamma(b) + 0.5 * (1.0 - b) * z.ln() + ln_i);
    }
    // direct series, rescaled so partial sums never overflow
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut ln_scale = 0.0_f64;
    let mut n = 0.0_f64;
    loop {
        term *= z / ((b + n) * (n + 1.0));
        n += 1.0;
        sum += term;
        if sum > 1e200 {
            sum *= 1e-200;
            term *= 1e-200;
            ln_scale += 200.0 * std::f64::consts::LN_10;
        }
        // terms are positive; once they shrink the tail is bounded geometrically
        if n > z.sqrt() && term <= 1e-16 * sum {
            break;
        }
        if n > 1e6 {
            return Err(Error::Convergence {
                what: "0F1 series",
                residual: term / sum,
            });
        }
    }
    Ok(sum.ln() + ln_scale)
}

/// Kummer's function `1F1(a; b; z)` by its power series, complex parameters,
/// real argument. Returns `None` if `b` hits a nonpositive integer or the
/// series fails to settle.
pub(crate) fn hyp1f1_series(a: Complex64, b: Complex64, z: f64) -> Option<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_term = 1.0_f64;
    for n in 0..5000 {
        let nf = n as f64;
        let denom = (b + nf) * (nf + 1.0);
        if denom.norm() < 1e-300 {
            return None;
        }
        term = term * (a + nf) * z / denom;
        sum += term;
        max_term = max_term.max(term.norm());
        let ratio = (a + nf + 1.0).norm() * z / ((b + nf + 1.0).norm() * (nf + 2.0));
        if ratio < 0.5 && term.norm() <= 1e-17 * sum.norm().max(1e-300) {
            // reject results drowned by cancellation
            if max_term > 1e12 * sum.norm() {
                return None;
            }
            return Some(sum);
        }
    }
    None
}

/// Tricomi's `Ψ(a, b; z)` for real `a > 0`, complex `b`, real `z > 0`.
///
/// Evaluated from the integral representation
/// `Ψ(a,b;z) = Γ(a)^{-1} ∫_0^∞ e^{-zt} t^{a-1} (1+t)^{b-a-1} dt`,
/// split at `t = 1`: tanh-sinh on `(0, 1]`, Gauss–Laguerre on `(1, ∞)`.
pub fn tricomi_psi(a: f64, b: ComplexPoint, z: f64) -> Result<ComplexPoint> {
    let v = psi_quadrature(a, b.value(), z)?;
    ComplexPoint::new(v.re, v.im)
}

pub(crate) fn psi_quadrature(a: f64, b: Complex64, z: f64) -> Result<Complex64> {
    check_psi_args(a, z)?;
    let expo = b - a - 1.0;
    let rel_tol = 1e-13;

    // (0, 1]: the factor t^{a-1} is evaluated from t directly
    let head = tanh_sinh_unit(
        |t, _| {
            let ln_t = t.ln();
            let ln = Complex64::new(-z * t + (a - 1.0) * ln_t, 0.0) + expo * t.ln_1p();
            ln.exp()
        },
        rel_tol,
    )?;

    // (1, ∞): t = 1 + v / z, ∫ = e^{-z}/z ∫_0^∞ e^{-v} g(1 + v/z) dv
    let tail_at = |level: usize| -> Complex64 {
        let rule = GaussLaguerre::cached(level);
        let s = rule.integrate(|v| {
            let t = 1.0 + v / z;
            (Complex64::new((a - 1.0) * t.ln(), 0.0) + expo * t.ln_1p()).exp()
        });
        s * ((-z).exp() / z)
    };
    let mut tail = tail_at(0);
    let mut residual = f64::INFINITY;
    for level in 1..3 {
        let next = tail_at(level);
        residual = (next - tail).norm();
        tail = next;
        if residual <= rel_tol * (head + tail).norm() {
            break;
        }
    }
    if residual > rel_tol * (head + tail).norm() {
        // slowly varying or oscillatory tails defeat Gauss-Laguerre
        tail = exp_sinh_half_line(
            |v| {
                let t = 1.0 + v;
                (Complex64::new(-z * t + (a - 1.0) * t.ln(), 0.0) + expo * t.ln_1p()).exp()
            },
            1e-11,
        )?;
    }
    let total = head + tail;
    Ok(total * (-ln_gamma(a)).exp())
}

/// `Ψ(a, b; z)` from the connection formula with Kummer's function
///
/// `Ψ(a,b;z) = Γ(1-b)/Γ(a-b+1) M(a,b,z) + Γ(b-1)/Γ(a) z^{1-b} M(a-b+1, 2-b, z)`.
///
/// Cheap for large `|Im b|`, where the quadrature becomes oscillatory.
/// Falls back to quadrature when `b` is within `1e-6` of an integer or the
/// series loses too much precision to cancellation.
pub fn tricomi_psi_connection(a: f64, b: ComplexPoint, z: f64) -> Result<ComplexPoint> {
    let v = psi_connection(a, b.value(), z)?;
    ComplexPoint::new(v.re, v.im)
}

pub(crate) fn psi_connection(a: f64, b: Complex64, z: f64) -> Result<Complex64> {
    check_psi_args(a, z)?;
    let near_integer = b.im.abs() < 1e-6 && (b.re - b.re.round()).abs() < 1e-6;
    if near_integer || z > 30.0 {
        return psi_quadrature(a, b, z);
    }
    let ac = Complex64::new(a, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let m1 = hyp1f1_series(ac, b, z);
    let m2 = hyp1f1_series(ac - b + 1.0, 2.0 - b, z);
    let (Some(m1), Some(m2)) = (m1, m2) else {
        return psi_quadrature(a, b, z);
    };
    let c1 = (ln_gamma_complex(one - b) - ln_gamma_complex(ac - b + 1.0)).exp();
    let c2 = (ln_gamma_complex(b - 1.0) - ln_gamma(a) + (one - b) * z.ln()).exp();
    let t1 = c1 * m1;
    let t2 = c2 * m2;
    let v = t1 + t2;
    // heavy cancellation between the two branches: use the integral instead
    if v.norm() < 1e-3 * t1.norm().max(t2.norm()) {
        return psi_quadrature(a, b, z);
    }
    Ok(v)
}

fn check_psi_args(a: f64, z: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain("tricomi_psi", format!("a = {a} must be positive")));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(domain("tricomi_psi", format!("z = {z} must be positive")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(m, t)` for integer shape `m ≥ 1`:
/// the CDF at `t` of a unit-scale Gamma(m) variable.
pub fn gamma_cdf_int(m: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    if t < mf + 1.0 {
        // e^{-t} t^m / m! Σ_n t^n / ((m+1)...(m+n)), no cancellation for small t
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 1.0;
        while term > 1e-17 * sum {
            term *= t / (mf + n);
            sum += term;
            n += 1.0;
        }
        (mf * t.ln() - t - ln_gamma(mf + 1.0)).exp() * sum
    } else {
        1.0 - gamma_sf_int(m, t)
    }
}

/// Upper tail `Q(m, t) = 1 - P(m, t) = e^{-t} Σ_{j<m} t^j / j!`.
pub fn gamma_sf_int(m: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..m {
        term *= t / j as f64;
        sum += term;
    }
    (-t).exp() * sum
}

/// The rate function `G_K(x) = (-1)^K + x Σ_{k=0}^{K-1} (-1)^k (ln x)^{K-k-1} / (K-k-1)!`,
/// defined for `x ≥ 1`.
///
/// It is the leading coefficient of `P(Π_k (1 + E_k) < x)` for unit-scale
/// exponentials `E_k` as their scale grows. Near `x = 1` the finite sum cancels
/// to `O((ln x)^K)`, so there the equivalent series
/// `x Σ_{j≥K} (-1)^{j-K} (ln x)^j / j!` is summed instead.
pub fn g_k(k: u32, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(domain("g_k", "K must be at least 1"));
    }
    if !(x >= 1.0) || !x.is_finite() {
        return Err(domain("g_k", format!("x = {x} must be finite and >= 1")));
    }
    let u = x.ln();
    if u < 1.0 {
        let mut term = (k as f64 * u.ln() - ln_gamma(k as f64 + 1.0)).exp();
        if u == 0.0 {
            return Ok(0.0);
        }
        let mut sum = term;
        let mut j = k as f64;
        loop {
            j += 1.0;
            term *= -u / j;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(x * sum);
    }
    let kk = k as i32;
    let mut sum = 0.0;
    for i in 0..kk {
        let p = kk - i - 1;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * u.powi(p) / factorial(p as u32);
    }
    let lead = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(lead + x * sum)
}

/// Derivative order of [`g_k_deriv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

/// First or second derivative of `R ↦ G_K(2^R)`.
pub fn g_k_deriv(k: u32, rate: f64, order: DerivOrder) -> Result<f64> {
    if k == 0 {
        return Err(domain("g_k_deriv", "K must be at least 1"));
    }
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(domain("g_k_deriv", format!("rate {rate} must be nonnegative")));
    }
    let r_ln2 = rate * LN_2;
    let two_r = rate.exp2();
    let kf = factorial(k - 1);
    let pow = |p: i32| if p == 0 { 1.0 } else { r_ln2.powi(p) };
    let kk = k as i32;
    Ok(match order {
        DerivOrder::First => LN_2 * pow(kk - 1) * two_r / kf,
        DerivOrder::Second => {
            let second = if k >= 2 {
                (k - 1) as f64 * two_r * pow(kk - 2)
            } else {
                0.0
            };
            LN_2 * LN_2 / kf * (two_r * pow(kk - 1) + second)
        }
    })
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}
