//! Quadrature rules shared by the special functions and the test oracles.
//!
//! Three rules live here: a tanh-sinh (double exponential) rule for finite
//! intervals with endpoint singularities, Gauss–Laguerre nodes for
//! exponentially weighted half-line integrals, and an adaptive
//! Gauss–Kronrod (7, 15) rule for smooth real integrands.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tanh-sinh quadrature of a complex-valued integrand over `(0, 1)`.
///
/// The integrand receives the abscissa `x` and its complement `1 - x`, both
/// computed without cancellation, so singular factors like `x^(a-1)` keep
/// full relative precision near the endpoint.
///
/// The step is halved until two successive estimates agree to `rel_tol`.
pub fn tanh_sinh_unit<F>(f: F, rel_tol: f64) -> Result<Complex64>
where
    F: Fn(f64, f64) -> Complex64,
{
    const U_MAX: f64 = 4.0;
    const MAX_LEVEL: u32 = 10;

    let node = |u: f64| -> Option<Complex64> {
        let w = std::f64::consts::FRAC_PI_2 * u.sinh();
        // x = 1 / (1 + e^{-2w}), 1 - x = 1 / (1 + e^{2w})
        let x = 1.0 / (1.0 + (-2.0 * w).exp());
        let xc = 1.0 / (1.0 + (2.0 * w).exp());
        if x <= 0.0 || xc <= 0.0 {
            return None;
        }
        let jac = std::f64::consts::PI * u.cosh() * x * xc;
        let v = f(x, xc) * jac;
        if v.re.is_finite() && v.im.is_finite() {
            Some(v)
        } else {
            None
        }
    };

    let mut h = 0.5;
    let mut sum = Complex64::default();
    let mut l1 = 0.0;
    let add = |v: Complex64, sum: &mut Complex64, l1: &mut f64| {
        *sum += v;
        *l1 += v.norm();
    };
    add(node(0.0).unwrap_or_default(), &mut sum, &mut l1);
    let mut k = 1;
    while (k as f64) * h <= U_MAX {
        let u = k as f64 * h;
        add(node(u).unwrap_or_default(), &mut sum, &mut l1);
        add(node(-u).unwrap_or_default(), &mut sum, &mut l1);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut diff = f64::INFINITY;

    for _ in 0..MAX_LEVEL {
        h *= 0.5;
        // only the odd multiples of the new step are new nodes
        let mut k = 1;
        while (k as f64) * h <= U_MAX {
            let u = k as f64 * h;
            add(node(u).unwrap_or_default(), &mut sum, &mut l1);
            add(node(-u).unwrap_or_default(), &mut sum, &mut l1);
            k += 2;
        }
        let next = sum * h;
        diff = (next - estimate).norm();
        estimate = next;
        if converged(diff, estimate, l1 * h, rel_tol) {
            return Ok(estimate);
        }
    }
    Err(Error::Convergence {
        what: "tanh-sinh quadrature",
        residual: diff,
    })
}

// Cancellation limits attainable accuracy to a few ulps of the absolute
// integral, so that floor is accepted as converged too.
fn converged(diff: f64, estimate: Complex64, l1: f64, rel_tol: f64) -> bool {
    diff <= rel_tol * estimate.norm() || diff <= 8.0 * f64::EPSILON * l1 || diff < 1e-300
}

/// Exp-sinh quadrature of a complex-valued integrand over `(0, ∞)`, for
/// integrands that decay at least exponentially.
pub fn exp_sinh_half_line<F>(f: F, rel_tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    const U_MIN: f64 = -4.5;
    const U_MAX: f64 = 4.5;
    const MAX_LEVEL: u32 = 10;

    let node = |u: f64| -> Complex64 {
        let x = (std::f64::consts::FRAC_PI_2 * u.sinh()).exp();
        if x == 0.0 || !x.is_finite() {
            return Complex64::default();
        }
        let v = f(x) * (std::f64::consts::FRAC_PI_2 * u.cosh() * x);
        if v.re.is_finite() && v.im.is_finite() {
            v
        } else {
            Complex64::default()
        }
    };
    let span = |h: f64, start: i64, stride: usize| -> (Complex64, f64) {
        let k_lo = (U_MIN / h).ceil() as i64;
        let k_hi = (U_MAX / h).floor() as i64;
        let first = k_lo + (start - k_lo).rem_euclid(stride as i64);
        (first..=k_hi).step_by(stride).fold((Complex64::default(), 0.0), |(s, a), k| {
            let v = node(k as f64 * h);
            (s + v, a + v.norm())
        })
    };

    let mut h = 0.5;
    let (mut sum, mut l1) = span(h, 0, 1);
    let mut estimate = sum * h;
    let mut diff = f64::INFINITY;
    for _ in 0..MAX_LEVEL {
        h *= 0.5;
        let (s, a) = span(h, 1, 2);
        sum += s;
        l1 += a;
        let next = sum * h;
        diff = (next - estimate).norm();
        estimate = next;
        if converged(diff, estimate, l1 * h, rel_tol) {
            return Ok(estimate);
        }
    }
    Err(Error::Convergence {
        what: "exp-sinh quadrature",
        residual: diff,
    })
}

/// Nodes and weights of the `n`-point Gauss–Laguerre rule for
/// `∫_0^∞ e^{-x} f(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Builds the rule by Newton iteration on the Laguerre polynomial roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Laguerre needs at least two nodes");
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0_f64;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
                }
            };
            let mut p2 = 0.0;
            let mut pp = 1.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (p1 - p2) / z;
                let z_old = z;
                z = z_old - p1 / pp;
                if (z - z_old).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = -1.0 / (pp * nf * p2);
        }
        Self { nodes, weights }
    }

    /// Cached rules of size 32, 64 and 128.
    pub fn cached(level: usize) -> &'static GaussLaguerre {
        static RULES: OnceLock<[GaussLaguerre; 3]> = OnceLock::new();
        let rules = RULES.get_or_init(|| {
            [
                GaussLaguerre::new(32),
                GaussLaguerre::new(64),
                GaussLaguerre::new(128),
            ]
        });
        &rules[level.min(2)]
    }

    pub fn integrate<F>(&self, f: F) -> Complex64
    where
        F: Fn(f64) -> Complex64,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

// Gauss-Kronrod (7, 15) abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of a smooth real function on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, gk15(&f, a, b))];
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    while let Some((lo, hi, (val, e))) = stack.pop() {
        evals += 1;
        let local_tol = tol * (hi - lo) / (b - a);
        if e <= local_tol.max(1e-15 * val.abs()) || hi - lo < 1e-12 * (b - a) {
            total += val;
            err += e;
            continue;
        }
        if evals > 200_000 {
            return Err(Error::Convergence {
                what: "adaptive Gauss-Kronrod",
                residual: err + e,
            });
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, gk15(&f, lo, mid)));
        stack.push((mid, hi, gk15(&f, mid, hi)));
    }
    Ok(total)
}

/// Adaptive integration over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let om = 1.0 - t;
            let v = f(a + t / om) / (om * om);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}
