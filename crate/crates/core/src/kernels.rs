//! Heat kernels: `ρ_τ^d` on `S^d` (continued to complex angle) and `ν_d(s, R)` on `H^d`.
//!
//! `ρ` is normalized to unit mass under the surface measure of the unit sphere. Each kernel
//! has a theta-function form and a spectral form so one can certify the other.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{
    composite_gauss_legendre, sinc, sinhc, sphere_eigenvalue, unit_sphere_volume, x_over_sinh,
    zonal_at_one, zonal_weight,
};

/// Spectral sums are refused below this time.
pub const SPECTRAL_TAU_MIN: f64 = 0.05;
/// Automatic method selection switches to the spectral form at this time.
pub const AUTO_SPECTRAL_FROM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    ThetaSum,
    Spectral,
    Auto,
}

impl KernelMethod {
    pub fn name(self) -> &'static str {
        match self {
            KernelMethod::ThetaSum => "theta_sum",
            KernelMethod::Spectral => "spectral",
            KernelMethod::Auto => "auto",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    /// Theta-sum window `n ∈ [−N, N]`.
    pub max_image_index: usize,
    /// Spectral cutoff `L`.
    pub max_degree: usize,
    /// Largest trapezoid node count for the `d = 2` contour integral.
    pub contour_nodes: usize,
    pub target_abs_error: f64,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { max_image_index: 64, max_degree: 4096, contour_nodes: 1 << 14, target_abs_error: 1e-13 }
    }
}

impl TruncationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_image_index == 0 || self.max_degree == 0 || self.contour_nodes == 0 {
            return Err(Error::InvalidParameter("truncation limits must be positive".into()));
        }
        if !(self.target_abs_error > 0.0 && self.target_abs_error <= 1e-4) {
            return Err(Error::InvalidParameter(format!(
                "target_abs_error must lie in (0, 1e-4], got {}",
                self.target_abs_error
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEvalRequest {
    pub dim: usize,
    pub time: f64,
    /// Angle `θ` for `ρ`; the real part is the radius `R` for `ν`.
    pub argument: Complex64,
    pub method: KernelMethod,
    pub truncation: TruncationSpec,
}

impl KernelEvalRequest {
    pub fn new(dim: usize, time: f64, argument: Complex64) -> Self {
        Self { dim, time, argument, method: KernelMethod::Auto, truncation: TruncationSpec::default() }
    }

    pub fn with_method(mut self, method: KernelMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_truncation(mut self, truncation: TruncationSpec) -> Self {
        self.truncation = truncation;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if !(self.time.is_finite() && self.time > 0.0) {
            return Err(Error::InvalidParameter(format!("time must be positive, got {}", self.time)));
        }
        if !(self.argument.re.is_finite() && self.argument.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite kernel argument".into()));
        }
        self.truncation.validate()
    }
}

/// A kernel value with the method actually used and its truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelEvaluation {
    pub value: Complex64,
    pub method: KernelMethod,
    /// Image count, spectral degree or contour node count, depending on the method.
    pub terms: usize,
    pub error_bound: f64,
}

pub fn rho_sphere(req: &KernelEvalRequest) -> Result<Complex64> {
    evaluate_rho(req).map(|e| e.value)
}

pub fn rho_sphere_spectral(req: &KernelEvalRequest) -> Result<Complex64> {
    evaluate_rho(&req.with_method(KernelMethod::Spectral)).map(|e| e.value)
}

/// `ρ_τ^d(θ)` with default truncation and automatic method choice.
pub fn rho(dim: usize, tau: f64, theta: Complex64) -> Result<Complex64> {
    rho_sphere(&KernelEvalRequest::new(dim, tau, theta))
}

pub fn evaluate_rho(req: &KernelEvalRequest) -> Result<KernelEvaluation> {
    req.validate()?;
    let method = match req.method {
        KernelMethod::Auto if req.time < AUTO_SPECTRAL_FROM => KernelMethod::ThetaSum,
        KernelMethod::Auto => KernelMethod::Spectral,
        m => m,
    };
    let theta = reduce_angle(req.argument);
    let t = &req.truncation;
    match method {
        KernelMethod::Spectral => spectral(req.dim, req.time, theta, t),
        _ => match req.dim {
            1 => rho1_theta(req.time, theta, t),
            2 => rho2_theta(req.time, theta, t),
            _ => rho3_theta(req.time, theta, t),
        },
    }
}

/// Maps `θ` to the representative with `Re θ ∈ [0, π]` using evenness and `2π`-periodicity.
pub fn reduce_angle(theta: Complex64) -> Complex64 {
    let mut re = theta.re.rem_euclid(2.0 * PI);
    if re > PI {
        re -= 2.0 * PI;
    }
    let z = Complex64::new(re, theta.im);
    if re < 0.0 {
        -z
    } else {
        z
    }
}

/// Log of the cutoff below which a Gaussian image is dropped, relative to `max(1, leading)`.
fn log_cut(target: f64, leading_exponent: f64) -> f64 {
    (target * 1e-3).ln() + leading_exponent.max(0.0)
}

/// Re of `−(z − c)² / 2τ`.
fn gauss_exponent_re(z: Complex64, c: f64, tau: f64) -> f64 {
    let dx = z.re - c;
    (z.im * z.im - dx * dx) / (2.0 * tau)
}

/// Indices `n` whose image `e^{−(z−2πn)²/2τ}` survives the cutoff.
fn image_window(z: Complex64, tau: f64, target: f64, max_index: usize) -> Result<(i64, i64)> {
    let n0 = (z.re / (2.0 * PI)).round() as i64;
    let lead = gauss_exponent_re(z, 2.0 * PI * n0 as f64, tau);
    let cut = log_cut(target, lead);
    let keep = |n: i64| gauss_exponent_re(z, 2.0 * PI * n as f64, tau) >= cut;
    let (mut lo, mut hi) = (n0, n0);
    while keep(lo - 1) {
        lo -= 1;
    }
    while keep(hi + 1) {
        hi += 1;
    }
    if lo.unsigned_abs().max(hi.unsigned_abs()) as usize > max_index {
        return Err(Error::NonConvergence {
            method: "theta_sum",
            detail: format!("image window [{lo}, {hi}] exceeds max_image_index {max_index}"),
        });
    }
    Ok((lo, hi))
}

fn rho1_theta(tau: f64, theta: Complex64, t: &TruncationSpec) -> Result<KernelEvaluation> {
    let (lo, hi) = image_window(theta, tau, t.target_abs_error, t.max_image_index)?;
    let norm = (2.0 * PI * tau).powf(-0.5);
    let sum: Complex64 = (lo..=hi)
        .map(|n| {
            let u = theta - 2.0 * PI * n as f64;
            (-u * u / (2.0 * tau)).exp()
        })
        .sum();
    Ok(KernelEvaluation {
        value: norm * sum,
        method: KernelMethod::ThetaSum,
        terms: (hi - lo + 1) as usize,
        error_bound: t.target_abs_error * 1e-3,
    })
}

/// `dρ¹/dθ` by term-by-term differentiation of the image sum.
pub fn rho1_theta_derivative(tau: f64, theta: Complex64, t: &TruncationSpec) -> Result<Complex64> {
    let z = reduce_angle(theta);
    let flip = sign_of_reduction(theta);
    let (lo, hi) = image_window(z, tau, t.target_abs_error, t.max_image_index)?;
    let norm = (2.0 * PI * tau).powf(-0.5);
    let s: Complex64 = (lo..=hi)
        .map(|n| {
            let u = z - 2.0 * PI * n as f64;
            -u / tau * (-u * u / (2.0 * tau)).exp()
        })
        .sum();
    Ok(flip * norm * s)
}

/// `ρ'` is odd, so reduction through `θ ↦ −θ` flips its sign.
fn sign_of_reduction(theta: Complex64) -> f64 {
    let mut re = theta.re.rem_euclid(2.0 * PI);
    if re > PI {
        re -= 2.0 * PI;
    }
    if re < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `[f(x−c) + f(x+c)] / x` for `f(u) = u e^{−u²/2τ}`, stable as `x → 0`.
fn image_pair(x: Complex64, c: f64, tau: f64) -> Complex64 {
    let em = (-(x - c) * (x - c) / (2.0 * tau)).exp();
    let ep = (-(x + c) * (x + c) / (2.0 * tau)).exp();
    let k = c / tau;
    let kx = x * k;
    if kx.norm() < 0.5 {
        let mid = (-(x * x + c * c) / (2.0 * tau)).exp();
        em + ep - 2.0 * c * k * sinhc(kx) * mid
    } else {
        ((x - c) * em + (x + c) * ep) / x
    }
}

/// `Σ_{n≥1} s_n [f(x−c_n) + f(x+c_n)] / x` with `c_n = offset + 2π(n−1)`.
fn paired_images(
    x: Complex64,
    tau: f64,
    offset: f64,
    alternating: bool,
    center: bool,
    target: f64,
    max_index: usize,
) -> Result<(Complex64, usize)> {
    let mut sum = if center { (-x * x / (2.0 * tau)).exp() } else { Complex64::new(0.0, 0.0) };
    let mut lead = gauss_exponent_re(x, offset, tau).max(gauss_exponent_re(x, -offset, tau));
    if center {
        lead = lead.max(gauss_exponent_re(x, 0.0, tau));
    }
    let cut = log_cut(target, lead);
    let mut count = 0;
    for n in 1.. {
        let c = offset + 2.0 * PI * (n - 1) as f64;
        let e = gauss_exponent_re(x, c, tau).max(gauss_exponent_re(x, -c, tau));
        if e < cut && c > x.re.abs() {
            break;
        }
        if n > max_index {
            return Err(Error::NonConvergence {
                method: "theta_sum",
                detail: format!("paired image window exceeds max_image_index {max_index}"),
            });
        }
        let sign = if alternating && (n % 2 == 1) { -1.0 } else { 1.0 };
        sum += sign * image_pair(x, c, tau);
        count = n;
    }
    Ok((sum, count))
}

fn rho3_theta(tau: f64, theta: Complex64, t: &TruncationSpec) -> Result<KernelEvaluation> {
    let norm = (2.0 * PI * tau).powf(-1.5) * (tau / 2.0).exp();
    let (value, terms) = if theta.re <= PI / 2.0 {
        let (s, n) = paired_images(theta, tau, 2.0 * PI, false, true, t.target_abs_error, t.max_image_index)?;
        (s / sinc(theta), n)
    } else {
        let x = theta - PI;
        let (s, n) = paired_images(x, tau, PI, false, false, t.target_abs_error, t.max_image_index)?;
        (-s / sinc(x), n)
    };
    Ok(KernelEvaluation {
        value: norm * value,
        method: KernelMethod::ThetaSum,
        terms: 2 * terms + 1,
        error_bound: t.target_abs_error * 1e-3,
    })
}

/// `H(t) = g(φ) / (√2 sin(φ/2))` at `t = cos φ`, an entire function of `t`.
fn rho2_integrand(t_val: Complex64, tau: f64, t: &TruncationSpec) -> Result<Complex64> {
    let phi = t_val.acos();
    let (s, _) = paired_images(phi, tau, 2.0 * PI, true, true, t.target_abs_error, t.max_image_index)?;
    // φ / sin(φ/2) = 2 / sinc(φ/2)
    Ok(s * 2.0 / sinc(phi / 2.0) / SQRT_2)
}

fn rho2_theta(tau: f64, theta: Complex64, t: &TruncationSpec) -> Result<KernelEvaluation> {
    let pref = (2.0 * PI * tau).recip() * (tau / 8.0).exp() / (PI * tau).sqrt();
    let c = theta.cos();
    let node = |beta: f64| -> Result<Complex64> {
        let tv = (c - 1.0) / 2.0 + (c + 1.0) / 2.0 * beta.cos();
        rho2_integrand(tv, tau, t)
    };
    // trapezoid rule in β on [0, π]; the integrand is even and 2π-periodic in β
    let mut m = 16usize;
    let mut edge_sum = (node(0.0)? + node(PI)?) * 0.5;
    for j in 1..m {
        edge_sum += node(PI * j as f64 / m as f64)?;
    }
    let mut prev = edge_sum * (PI / m as f64);
    loop {
        let next_m = 2 * m;
        if next_m > t.contour_nodes.max(16) {
            return Err(Error::NonConvergence {
                method: "contour",
                detail: format!("d=2 contour integral did not converge with {m} nodes"),
            });
        }
        for j in (1..next_m).step_by(2) {
            edge_sum += node(PI * j as f64 / next_m as f64)?;
        }
        m = next_m;
        let cur = edge_sum * (PI / m as f64);
        let diff = pref * (cur - prev).norm();
        if diff <= 0.1 * t.target_abs_error * (pref * cur.norm()).max(1.0) && m >= 32 {
            return Ok(KernelEvaluation {
                value: pref * cur,
                method: KernelMethod::ThetaSum,
                terms: m + 1,
                error_bound: diff,
            });
        }
        prev = cur;
    }
}

fn spectral(dim: usize, tau: f64, theta: Complex64, t: &TruncationSpec) -> Result<KernelEvaluation> {
    if tau < SPECTRAL_TAU_MIN {
        return Err(Error::NonConvergence {
            method: "spectral",
            detail: format!("τ = {tau} is below the spectral threshold {SPECTRAL_TAU_MIN}"),
        });
    }
    let z = theta.cos();
    let growth = theta.im.abs();
    let lambda = (dim as f64 - 1.0) / 2.0;
    let bound = |l: usize| {
        zonal_weight(dim, l) * zonal_at_one(dim, l) * (l as f64 * growth - tau * sphere_eigenvalue(dim, l) / 2.0).exp()
    };
    let mut peak = 0.0f64;
    let mut sum = Complex64::new(zonal_weight(dim, 0), 0.0);
    let (mut g_prev, mut g_cur) = (Complex64::new(1.0, 0.0), if dim == 1 { z } else { 2.0 * lambda * z });
    let mut l = 1usize;
    loop {
        if l > t.max_degree {
            return Err(Error::NonConvergence {
                method: "spectral",
                detail: format!("spectral tail still above target at max_degree {}", t.max_degree),
            });
        }
        let w = zonal_weight(dim, l) * (-tau * sphere_eigenvalue(dim, l) / 2.0).exp();
        sum += w * g_cur;
        let b = bound(l);
        peak = peak.max(b);
        let next_b = bound(l + 1);
        if next_b < 1e-3 * t.target_abs_error * peak.max(1.0) && next_b < 0.5 * b {
            return Ok(KernelEvaluation {
                value: sum,
                method: KernelMethod::Spectral,
                terms: l + 1,
                error_bound: 2.0 * next_b,
            });
        }
        let lf = l as f64;
        let g_next = if dim == 1 {
            2.0 * z * g_cur - g_prev
        } else {
            (2.0 * (lf + lambda) * z * g_cur - (lf + 2.0 * lambda - 1.0) * g_prev) / (lf + 1.0)
        };
        g_prev = g_cur;
        g_cur = g_next;
        l += 1;
    }
}

/// `(−e^{τ/2}/(2π sin θ)) dρ¹/dθ` next to the directly evaluated `ρ³(θ)`.
pub fn rho_recursion_check(dim_from: usize, tau: f64, theta: Complex64) -> Result<(Complex64, Complex64)> {
    if dim_from != 1 {
        return Err(Error::UnsupportedDimension(dim_from + 2));
    }
    let t = TruncationSpec::default();
    let deriv = rho1_theta_derivative(tau, theta, &t)?;
    let rec = -(tau / 2.0).exp() / (2.0 * PI * theta.sin()) * deriv;
    let direct = rho_sphere(&KernelEvalRequest::new(3, tau, theta).with_method(KernelMethod::ThetaSum))?;
    Ok((rec, direct))
}

/// Hyperbolic heat kernel `ν_d(s, R)`, `R = Re(argument) ≥ 0`.
pub fn nu_hyperbolic(req: &KernelEvalRequest) -> Result<f64> {
    req.validate()?;
    let r = req.argument.re;
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("radius must be nonnegative, got {r}")));
    }
    nu_with(req.dim, req.time, r, req.truncation.target_abs_error)
}

/// `ν_d(s, R)` at default accuracy.
pub fn nu(dim: usize, s: f64, r: f64) -> Result<f64> {
    nu_hyperbolic(&KernelEvalRequest::new(dim, s, Complex64::new(r, 0.0)))
}

fn nu_with(dim: usize, s: f64, r: f64, target: f64) -> Result<f64> {
    let gauss = (-r * r / (2.0 * s)).exp();
    Ok(match dim {
        1 => (2.0 * PI * s).powf(-0.5) * gauss,
        2 => nu2(s, r, target)?,
        3 => (2.0 * PI * s).powf(-1.5) * (-s / 2.0).exp() * x_over_sinh(r) * gauss,
        _ => return Err(Error::UnsupportedDimension(dim)),
    })
}

/// `ν₂ = (2πs)^{-1} e^{-s/8} (πs)^{-1/2} ∫_R^∞ ρ e^{−ρ²/2s} / √(cosh ρ − cosh R) dρ`.
fn nu2(s: f64, r: f64, target: f64) -> Result<f64> {
    let pref = (2.0 * PI * s).recip() * (-s / 8.0).exp() / (PI * s).sqrt();
    // exponent measured relative to e^{−R²/2s}
    let rel = |rho: f64| (-(rho - r) * (rho + r) / (2.0 * s)).exp();

    // ρ ∈ [R, R+1] with cosh ρ = cosh R + w²: integrand 2 (ρ / sinh ρ) e^{−ρ²/2s} dw
    let sh = (r / 2.0).sinh();
    let w1 = (2.0 * (r + 0.5).sinh() * 0.5f64.sinh()).sqrt();
    let near: f64 = composite_gauss_legendre(24, 6, 0.0, w1)
        .into_iter()
        .map(|(w, wt)| {
            let rho = 2.0 * (sh * sh + w * w / 2.0).sqrt().asinh();
            wt * 2.0 * x_over_sinh(rho) * rel(rho)
        })
        .sum();

    // ρ ≥ R + 1: the denominator is bounded away from zero
    let k = -(target * 1e-3).ln();
    let delta = -r + (r * r + 2.0 * s * k).sqrt();
    let rho_max = r + 1.0 + delta.max(0.0);
    let width = (s.sqrt() / 2.0).clamp(0.05, 1.0);
    let panels = (((rho_max - r - 1.0) / width).ceil() as usize).max(1);
    let far: f64 = composite_gauss_legendre(24, panels, r + 1.0, rho_max)
        .into_iter()
        .map(|(rho, wt)| {
            let den = (2.0 * ((rho + r) / 2.0).sinh() * ((rho - r) / 2.0).sinh()).sqrt();
            wt * rho * rel(rho) / den
        })
        .sum();
    let value = pref * (-r * r / (2.0 * s)).exp() * (near + far);
    if !value.is_finite() {
        return Err(Error::Quadrature(format!("ν₂({s}, {r}) is not finite")));
    }
    Ok(value)
}

/// `ν₃` from `ν₁` through `ν_{d+2} = −e^{−ds/2} / (2π sinh R) ∂_R ν_d`, next to the closed form.
pub fn nu_recursion_check(s: f64, r: f64) -> Result<(f64, f64)> {
    let n1 = nu(1, s, r)?;
    // −∂_R ν₁ / sinh R = (R / sinh R) ν₁ / s
    let rec = (-s / 2.0).exp() / (2.0 * PI) * x_over_sinh(r) * n1 / s;
    Ok((rec, nu(3, s, r)?))
}

/// `c_d ∫_0^∞ ν_d(s, R) sinh^{d−1} R dR` with `c_d = vol(S^{d−1})`.
pub fn nu_normalization_check(dim: usize, s: f64) -> Result<f64> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("time must be positive, got {s}")));
    }
    let cd = unit_sphere_volume(dim - 1);
    let r_max = (dim as f64 - 1.0) * s + (2.0 * s * 45.0).sqrt() + 1.0;
    let width = (s.sqrt() / 2.0).clamp(0.05, 0.5);
    let panels = ((r_max / width).ceil() as usize).max(2);
    let nodes = composite_gauss_legendre(24, panels, 0.0, r_max);
    let mut total = 0.0;
    for (r, w) in nodes {
        total += w * nu(dim, s, r)? * r.sinh().powi(dim as i32 - 1);
    }
    Ok(cd * total)
}

/// `∫_{S^d} ρ_τ(x₀, x) dx` by Gauss–Legendre in the polar angle.
pub fn rho_mass(dim: usize, tau: f64) -> Result<f64> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let panels = ((PI / tau.sqrt()).ceil() as usize).clamp(4, 400);
    let mut total = 0.0;
    for (t, w) in composite_gauss_legendre(24, panels, 0.0, PI) {
        total += w * rho(dim, tau, Complex64::new(t, 0.0))?.re * t.sin().powi(dim as i32 - 1);
    }
    Ok(unit_sphere_volume(dim - 1) * total)
}

/// `∫ ρ_s(x, z) ρ_t(z, y) dz` next to `ρ_{s+t}(x, y)` with `x·y = cos θ`, `θ` real.
pub fn semigroup_check(dim: usize, s: f64, t: f64, theta: f64) -> Result<(f64, f64)> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter(format!("times must be positive, got {s} and {t}")));
    }
    // spectral content of ρ_min(s,t) below 1e-17 beyond this degree
    let degree = (40.0 / s.min(t)).sqrt().ceil() as usize + dim;
    let grid = crate::quadrature::sphere_grid(dim, 2 * degree);
    let n = dim + 1;
    let x: Vec<f64> = (0..n).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let y: Vec<f64> = (0..n).map(|k| match k { 0 => theta.cos(), 1 => theta.sin(), _ => 0.0 }).collect();
    let angle = |u: &[f64], v: &[f64]| Complex64::new(u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0).acos(), 0.0);
    let mut terms = Vec::with_capacity(grid.len());
    for (z, w) in &grid {
        terms.push(w * rho(dim, s, angle(&x, z))?.re * rho(dim, t, angle(z, &y))?.re);
    }
    let direct = rho(dim, s + t, Complex64::new(theta, 0.0))?.re;
    Ok((crate::special::pairwise_sum_real(&terms), direct))
}
