//! CDF of `A = Π_k (1 + R_k)` for independent `R_k ~ Gamma(m_k, Ω_k)`.
//!
//! Each mixture term of the exact outage probability is such a CDF. Three
//! evaluators are provided:
//!
//! * [`cdf_product_fft`] works with `ln A = Σ_k ln(1 + R_k)`. Because every
//!   summand is nonnegative, `P(ln A ≤ z)` only involves the factor densities
//!   on `[0, z]`, so the grid spans exactly that interval. Densities are
//!   convolved with the trapezoid rule through FFTs, the last factor enters
//!   through its exact CDF, and two grid sizes are combined by Richardson
//!   extrapolation. This is the default route.
//! * [`cdf_product_mellin`] inverts the Laplace transform of `ln A`,
//!   `E[A^{-s}] = Π_k Ω_k^{-m_k} Ψ(m_k, m_k + 1 - s; 1/Ω_k)`, along a
//!   vertical line with the CDF kernel `e^{sz}/s`.
//! * [`cdf_product_asymptotic`] is the leading high-SNR term
//!   `Π_k Ω_k^{-m_k} · M(x; m)`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{domain, Error, Result};
use crate::special_fn::{gamma_cdf_int, ln_gamma, psi_connection};

/// Integer shapes and scales of the Gamma factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistSpec {
    shapes: Vec<u32>,
    scales: Vec<f64>,
}

impl ProductDistSpec {
    pub fn new(shapes: Vec<u32>, scales: Vec<f64>) -> Result<Self> {
        if shapes.is_empty() || shapes.len() != scales.len() {
            return Err(Error::InvalidSpec(format!(
                "need matching nonempty shapes/scales, got {} and {}",
                shapes.len(),
                scales.len()
            )));
        }
        if shapes.contains(&0) {
            return Err(Error::InvalidSpec("shapes must be >= 1".into()));
        }
        if let Some(bad) = scales.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidSpec(format!("scales must be positive, got {bad}")));
        }
        Ok(Self { shapes, scales })
    }

    /// Mixture component for the count vector `l`: shapes `1 + l_k`.
    pub fn from_counts(counts: &[u32], scales: Vec<f64>) -> Result<Self> {
        Self::new(counts.iter().map(|l| l + 1).collect(), scales)
    }

    pub fn shapes(&self) -> &[u32] {
        &self.shapes
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn factors(&self) -> usize {
        self.shapes.len()
    }

    /// `Σ_k m_k`, the decay order of the CDF in the SNR.
    pub fn total_shape(&self) -> u32 {
        self.shapes.iter().sum()
    }
}

/// Uniform grid `y_i = i · step`, `i = 0..=n`, on `[0, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrid {
    pub y_max: f64,
    pub n: usize,
    pub step: f64,
}

impl LogGrid {
    pub fn new(y_max: f64, n: usize) -> Result<Self> {
        if !(y_max > 0.0) || !y_max.is_finite() {
            return Err(Error::GridTooSmall(format!("y_max = {y_max} must be positive")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::GridTooSmall(format!("n = {n} must be a power of two >= 16")));
        }
        Ok(Self {
            y_max,
            n,
            step: y_max / n as f64,
        })
    }

    /// The grid whose last node is `ln x`.
    pub fn spanning(x: f64, n: usize) -> Result<Self> {
        Self::new(x.ln(), n)
    }
}

/// Density of `Y = ln(1 + R)` with `R ~ Gamma(m, Ω)`:
/// `f(y) = (e^y - 1)^{m-1} e^{-(e^y-1)/Ω} e^y / (Γ(m) Ω^m)`.
pub fn log_factor_pdf(m: u32, omega: f64, y: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let em1 = y.exp_m1();
    let mf = m as f64;
    let mut ln = y - em1 / omega - ln_gamma(mf) - mf * omega.ln();
    if m > 1 {
        if em1 == 0.0 {
            return 0.0;
        }
        ln += (mf - 1.0) * em1.ln();
    }
    ln.exp()
}

/// CDF of `Y = ln(1 + R)` with `R ~ Gamma(m, Ω)`.
pub fn log_factor_cdf(m: u32, omega: f64, y: f64) -> f64 {
    gamma_cdf_int(m, y.exp_m1() / omega)
}

/// A CDF value with its estimated numerical error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfEstimate {
    pub value: f64,
    pub error: f64,
    /// Grid size (FFT route) or number of contour nodes (Mellin route).
    pub nodes: usize,
}

/// Controls for [`cdf_product_fft`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftOptions {
    pub initial_n: usize,
    pub max_n: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for FftOptions {
    fn default() -> Self {
        Self {
            initial_n: 1 << 12,
            max_n: 1 << 20,
            rel_tol: 1e-8,
            abs_tol: 1e-15,
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() {
        return Err(domain("product CDF", "x is NaN"));
    }
    Ok(())
}

/// `P(A ≤ x)` by log-domain grid convolution.
///
/// Grids of `n`, `2n` and `4n` intervals on `[0, ln x]` give two Richardson
/// extrapolants; `n` doubles until they agree to `rel_tol` (or `abs_tol`).
/// The reported error is the difference between the last two extrapolants.
pub fn cdf_product_fft(spec: &ProductDistSpec, x: f64, opts: &FftOptions) -> Result<CdfEstimate> {
    check_x(x)?;
    if x <= 1.0 {
        return Ok(CdfEstimate {
            value: 0.0,
            error: 0.0,
            nodes: 0,
        });
    }
    if spec.factors() == 1 {
        let value = gamma_cdf_int(spec.shapes[0], (x - 1.0) / spec.scales[0]);
        return Ok(CdfEstimate {
            value,
            error: 0.0,
            nodes: 0,
        });
    }
    if x.is_infinite() {
        return Ok(CdfEstimate {
            value: 1.0,
            error: 0.0,
            nodes: 0,
        });
    }
    let mut planner = FftPlanner::new();
    let mut n = opts.initial_n;
    let mut coarse = cdf_on_grid_with(spec, &LogGrid::spanning(x, n)?, &mut planner)?;
    let mut fine = cdf_on_grid_with(spec, &LogGrid::spanning(x, 2 * n)?, &mut planner)?;
    let mut previous = (4.0 * fine - coarse) / 3.0;
    loop {
        if 4 * n > opts.max_n {
            return Err(Error::Convergence {
                what: "log-grid CDF",
                residual: (fine - coarse).abs(),
            });
        }
        n *= 2;
        coarse = fine;
        fine = cdf_on_grid_with(spec, &LogGrid::spanning(x, 2 * n)?, &mut planner)?;
        let current = (4.0 * fine - coarse) / 3.0;
        let diff = (current - previous).abs();
        if diff <= opts.rel_tol * current.abs() || diff <= opts.abs_tol {
            return Ok(CdfEstimate {
                value: current.clamp(0.0, 1.0),
                error: diff,
                nodes: 2 * n,
            });
        }
        previous = current;
    }
}

/// Plain trapezoid value of `P(ln A ≤ grid.y_max)` on one grid, without
/// extrapolation. `grid.y_max` is the evaluation point `ln x`.
pub fn cdf_on_grid(spec: &ProductDistSpec, grid: &LogGrid) -> Result<f64> {
    cdf_on_grid_with(spec, grid, &mut FftPlanner::new())
}

fn cdf_on_grid_with(
    spec: &ProductDistSpec,
    grid: &LogGrid,
    planner: &mut FftPlanner<f64>,
) -> Result<f64> {
    let curve = cdf_curve(spec, grid, planner)?;
    Ok(*curve.last().expect("grid has nodes"))
}

// P(ln A ≤ y_i) at every grid node
fn cdf_curve(
    spec: &ProductDistSpec,
    grid: &LogGrid,
    planner: &mut FftPlanner<f64>,
) -> Result<Vec<f64>> {
    let h = grid.step;
    let nodes = grid.n + 1;
    // the sharpest factor enters through its exact CDF
    let last = (0..spec.factors())
        .min_by(|&a, &b| spec.scales[a].total_cmp(&spec.scales[b]))
        .expect("nonempty spec");
    let sample = |k: usize| -> Vec<f64> {
        (0..nodes)
            .map(|i| log_factor_pdf(spec.shapes[k], spec.scales[k], i as f64 * h))
            .collect()
    };
    let mut density: Option<Vec<f64>> = None;
    for k in (0..spec.factors()).filter(|&k| k != last) {
        let f = sample(k);
        density = Some(match density {
            None => f,
            Some(g) => trapezoid_convolution(&g, &f, h, planner),
        });
    }
    let density = density.expect("at least two factors");
    let cdf_last: Vec<f64> = (0..nodes)
        .map(|i| log_factor_cdf(spec.shapes[last], spec.scales[last], i as f64 * h))
        .collect();
    Ok(trapezoid_convolution(&density, &cdf_last, h, planner))
}

/// `g(y_i) ≈ ∫_0^{y_i} a(y) b(y_i - y) dy` by the trapezoid rule at every node.
fn trapezoid_convolution(a: &[f64], b: &[f64], h: f64, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = a.len();
    let full = fft_convolve(a, b, planner);
    (0..n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                h * (full[i] - 0.5 * (a[0] * b[i] + a[i] * b[0]))
            }
        })
        .collect()
}

fn fft_convolve(a: &[f64], b: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let len = (a.len() + b.len() - 1).next_power_of_two();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut fa: Vec<Complex64> = a.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fa.resize(len, Complex64::default());
    let mut fb: Vec<Complex64> = b.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fb.resize(len, Complex64::default());
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / len as f64;
    fa.iter().take(a.len()).map(|v| v.re * scale).collect()
}

/// Controls for the vertical-line contour integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    /// Abscissa `c` of the line `Re s = c`.
    pub c: f64,
    /// Initial trapezoid step along the line.
    pub step: f64,
    /// Target accuracy (absolute for values near one, relative for small ones).
    pub tol: f64,
    /// Largest `|Im s|` visited before giving up.
    pub max_height: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            c: 0.5,
            step: 0.05,
            tol: 1e-10,
            max_height: 1e5,
        }
    }
}

/// `(2πi)^{-1} ∫_{c-i∞}^{c+i∞} e^{sz} Φ(s) / s ds` for a transform with large-`s`
/// behaviour `Φ(s) = lead · s^{-order} (1 + next / s) + O(s^{-order-2})`.
///
/// The two leading terms are inverted in closed form, leaving an integrand
/// that decays like `|s|^{-order-3}`; the trapezoid rule on the line then
/// carries only an exponentially small aliasing error.
fn bromwich_cdf<F>(
    z: f64,
    order: u32,
    lead: f64,
    next: f64,
    transform: F,
    opts: &ContourOptions,
) -> Result<CdfEstimate>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d = order as i32;
    let poly = lead * z.powi(d) / factorial(order)
        + lead * next * z.powi(d + 1) / factorial(order + 1);
    let tol = opts.tol * poly.abs().min(1.0).max(1e-300);

    let integrand = |tau: f64| -> Result<Complex64> {
        let s = Complex64::new(opts.c, tau);
        let inv_s = 1.0 / s;
        let lead_part = lead * inv_s.powi(d) * (1.0 + next * inv_s);
        Ok((s * z).exp() * (transform(s)? - lead_part) * inv_s)
    };

    // walk up the line until the tail beyond is negligible
    let mut h = opts.step;
    let g0 = integrand(0.0)?;
    let mut sum = 0.5 * g0.re;
    let mut l1 = 0.5 * g0.norm();
    let mut j = 0usize;
    let height = loop {
        j += 1;
        let tau = j as f64 * h;
        let g = integrand(tau)?;
        sum += g.re;
        l1 += g.norm();
        let tail = g.norm() * tau / (order as f64 + 2.0);
        if tau > 10.0 && tail < tol * 1e-2 {
            break tau;
        }
        if tau > opts.max_height {
            return Err(Error::Convergence {
                what: "Mellin-Barnes contour truncation",
                residual: tail,
            });
        }
    };
    let mut estimate = sum * h;
    let mut nodes = j + 1;
    let mut diff = f64::INFINITY;
    for _ in 0..4 {
        h *= 0.5;
        let steps = (height / h).round() as usize;
        let mut odd = 0.0;
        for i in (1..steps).step_by(2) {
            odd += integrand(i as f64 * h)?.re;
        }
        nodes += steps / 2;
        sum += odd;
        let next_estimate = sum * h;
        diff = (next_estimate - estimate).abs();
        estimate = next_estimate;
        // rounding in the integrand sets a floor of a few ulps of ∫|g|
        let floor = 64.0 * f64::EPSILON * l1 * 2.0 * h + 64.0 * f64::EPSILON * poly.abs();
        if diff / std::f64::consts::PI <= tol.max(floor) {
            return Ok(CdfEstimate {
                value: poly + estimate / std::f64::consts::PI,
                error: diff / std::f64::consts::PI,
                nodes,
            });
        }
    }
    Err(Error::Convergence {
        what: "Mellin-Barnes contour step refinement",
        residual: diff / std::f64::consts::PI,
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `P(A ≤ x)` by numerical inversion of `E[A^{-s}]` on the line `Re s = c`.
pub fn cdf_product_mellin(
    spec: &ProductDistSpec,
    x: f64,
    opts: &ContourOptions,
) -> Result<CdfEstimate> {
    check_x(x)?;
    if !(opts.c > 0.0) {
        return Err(domain("cdf_product_mellin", format!("contour abscissa {} must be > 0", opts.c)));
    }
    if x <= 1.0 {
        return Ok(CdfEstimate {
            value: 0.0,
            error: 0.0,
            nodes: 0,
        });
    }
    let order = spec.total_shape();
    let mut lead = 1.0;
    let mut next = 0.0;
    for (&m, &omega) in spec.shapes.iter().zip(&spec.scales) {
        let mf = m as f64;
        lead *= omega.powf(-mf);
        next += mf * ((mf + 1.0) / 2.0 - 1.0 / omega);
    }
    let transform = |s: Complex64| -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        for (&m, &omega) in spec.shapes.iter().zip(&spec.scales) {
            let mf = m as f64;
            let b = mf + 1.0 - s;
            acc *= psi_connection(mf, b, 1.0 / omega)? * omega.powf(-mf);
        }
        Ok(acc)
    };
    let mut est = bromwich_cdf(x.ln(), order, lead, next, transform, opts)?;
    est.value = est.value.clamp(0.0, 1.0);
    Ok(est)
}

/// The constant `M(x; m) = (2πi)^{-1} ∫ x^s / s · Π_k Γ(s - m_k)/Γ(s) ds`
/// (line to the right of `max m_k`): the limit of `Π_k Ω_k^{m_k} · P(A ≤ x)`
/// as every scale grows without bound.
///
/// Summed as the positive series `Σ_n c_n (ln x)^{d+n} / (d+n)!` with
/// `d = Σ m_k` and `Σ_n c_n t^n = Π_k Π_{j=1}^{m_k} (1 - j t)^{-1}`, which is
/// the residue sum reorganized so no cancellation occurs near `x = 1`.
pub fn mellin_barnes_constant(shapes: &[u32], x: f64) -> Result<f64> {
    if shapes.is_empty() || shapes.contains(&0) {
        return Err(domain("mellin_barnes_constant", "shapes must be nonempty and >= 1"));
    }
    if !(x >= 1.0) || !x.is_finite() {
        return Err(domain("mellin_barnes_constant", format!("x = {x} must be finite and >= 1")));
    }
    let z = x.ln();
    if z == 0.0 {
        return Ok(0.0);
    }
    let d: u32 = shapes.iter().sum();
    // generating coefficients, grown on demand
    let mut coeffs: Vec<f64> = vec![1.0];
    let poles: Vec<f64> = shapes
        .iter()
        .flat_map(|&m| (1..=m).map(|j| j as f64))
        .collect();
    let extend = |coeffs: &mut Vec<f64>, len: usize| {
        // c ← c · Π (1 - j t)^{-1}, recomputed up to length len
        let mut c = vec![0.0; len];
        c[0] = 1.0;
        for &p in &poles {
            for n in 1..len {
                c[n] += p * c[n - 1];
            }
        }
        *coeffs = c;
    };
    let mut len = 64;
    extend(&mut coeffs, len);
    let ln_z = z.ln();
    let mut sum = 0.0;
    let mut n = 0usize;
    loop {
        if n == len {
            len *= 2;
            extend(&mut coeffs, len);
        }
        let k = (d as usize + n) as f64;
        let term = (coeffs[n].ln() + k * ln_z - ln_gamma(k + 1.0)).exp();
        sum += term;
        // terms eventually fall faster than geometrically
        if n > 4 && term <= 1e-17 * sum && k > z * poles.iter().cloned().fold(0.0, f64::max) {
            return Ok(sum);
        }
        n += 1;
        if n > 100_000 {
            return Err(Error::Convergence {
                what: "Mellin-Barnes constant series",
                residual: term / sum,
            });
        }
    }
}

/// The same constant by numerical contour integration, as an independent check
/// on [`mellin_barnes_constant`]. The line must lie right of `max m_k`.
pub fn mellin_barnes_constant_contour(
    shapes: &[u32],
    x: f64,
    opts: &ContourOptions,
) -> Result<f64> {
    let max_m = *shapes.iter().max().ok_or_else(|| domain("mellin_barnes_constant", "empty shapes"))?;
    if !(opts.c > max_m as f64) {
        return Err(domain(
            "mellin_barnes_constant_contour",
            format!("contour abscissa {} must exceed {max_m}", opts.c),
        ));
    }
    if !(x >= 1.0) {
        return Err(domain("mellin_barnes_constant_contour", format!("x = {x} must be >= 1")));
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    let order: u32 = shapes.iter().sum();
    let next: f64 = shapes.iter().map(|&m| (m * (m + 1)) as f64 / 2.0).sum();
    let transform = |s: Complex64| -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        for &m in shapes {
            for j in 1..=m {
                acc /= s - j as f64;
            }
        }
        Ok(acc)
    };
    Ok(bromwich_cdf(x.ln(), order, 1.0, next, transform, opts)?.value)
}

/// Leading high-SNR term of `P(A ≤ x)` when the scales are `Ω_k = γ ζ_k`:
/// `Π_k (γ ζ_k)^{-m_k} · M(x; m)`.
pub fn cdf_product_asymptotic(spec: &ProductDistSpec, x: f64, gamma: f64, zeta: &[f64]) -> Result<f64> {
    if zeta.len() != spec.factors() {
        return Err(Error::InvalidSpec(format!(
            "zeta has {} entries, spec has {} factors",
            zeta.len(),
            spec.factors()
        )));
    }
    if !(gamma > 0.0) || zeta.iter().any(|z| !(*z > 0.0)) {
        return Err(domain("cdf_product_asymptotic", "gamma and zeta must be positive"));
    }
    if x <= 1.0 {
        return Ok(0.0);
    }
    let ln_prefactor: f64 = spec
        .shapes
        .iter()
        .zip(zeta)
        .map(|(&m, &zk)| -(m as f64) * (gamma * zk).ln())
        .sum();
    Ok(ln_prefactor.exp() * mellin_barnes_constant(&spec.shapes, x)?)
}
