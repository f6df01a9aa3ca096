//! The Euclidean case `ℝ^d`: canonical complex coordinates, Gaussian coherent states and
//! their resolution of the identity. Every sphere pipeline has a twin here with closed-form
//! answers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::rho;
use crate::special::{composite_gauss_legendre, gauss_hermite};

/// Mass, frequency and `ħ` of a particle in `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct FlatParams {
    pub d: usize,
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl FlatParams {
    pub fn new(d: usize, m: f64, omega: f64, hbar: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedDimension(d));
        }
        for (name, v) in [("m", m), ("omega", omega), ("hbar", hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { d, m, omega, hbar })
    }

    /// `m = ω = 1`, `ħ = σ`.
    pub fn dimensionless(d: usize, sigma: f64) -> Result<Self> {
        Self::new(d, 1.0, 1.0, sigma)
    }

    /// `σ = ħ / (m ω)`.
    pub fn sigma(&self) -> f64 {
        self.hbar / (self.m * self.omega)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: n });
        }
        Ok(())
    }
}

/// `a_k = x_k + i p_k / (m ω)`.
pub fn flat_complexify(params: &FlatParams, x: &[f64], p: &[f64]) -> Result<Vec<Complex64>> {
    params.check_len(x.len())?;
    params.check_len(p.len())?;
    let mw = params.m * params.omega;
    Ok(x.iter().zip(p).map(|(&x, &p)| Complex64::new(x, p / mw)).collect())
}

/// `e^{i{·, p²/2mω}}(x_k^n)` summed over its first `n_terms` brackets. Each bracket with
/// `p²` acts as `2 p ∂_x`, so the series stops after `n + 1` terms.
pub fn flat_power_series(params: &FlatParams, x: f64, p: f64, n: u32, n_terms: usize) -> Complex64 {
    let c = Complex64::new(0.0, 1.0 / (2.0 * params.m * params.omega));
    let mut total = Complex64::new(0.0, 0.0);
    // (2p ∂_x)^j x^n = (2p)^j n!/(n−j)! x^{n−j}
    let mut falling = 1.0;
    let mut coeff = Complex64::new(1.0, 0.0);
    for j in 0..n_terms.min(n as usize + 1) {
        if j > 0 {
            falling *= (n as usize - j + 1) as f64;
            coeff *= c / j as f64;
        }
        total += coeff * (2.0 * p).powi(j as i32) * falling * x.powi((n as usize - j) as i32);
    }
    total
}

/// Componentwise [`flat_power_series`] with `n = 1`.
pub fn flat_complexify_series(params: &FlatParams, x: &[f64], p: &[f64], n_terms: usize) -> Result<Vec<Complex64>> {
    params.check_len(x.len())?;
    params.check_len(p.len())?;
    Ok(x.iter().zip(p).map(|(&x, &p)| flat_power_series(params, x, p, 1, n_terms)).collect())
}

/// `⟨δ_x|ψ_a⟩ = (2πσ)^{-d/2} exp[−(x − a)² / 2σ]`.
pub fn flat_coherent_wavefunction(params: &FlatParams, a: &[Complex64], x: &[f64]) -> Result<Complex64> {
    params.check_len(a.len())?;
    params.check_len(x.len())?;
    let s = params.sigma();
    let sq: Complex64 = a.iter().zip(x).map(|(a, &x)| (x - a) * (x - a)).sum();
    Ok((2.0 * PI * s).powf(-(params.d as f64) / 2.0) * (-sq / (2.0 * s)).exp())
}

/// Euclidean heat kernel in the imaginary directions, `(2πs)^{-d/2} exp[−y²/2s]`.
pub fn flat_nu(s: f64, y: &[f64]) -> f64 {
    let y2: f64 = y.iter().map(|v| v * v).sum();
    (2.0 * PI * s).powf(-(y.len() as f64) / 2.0) * (-y2 / (2.0 * s)).exp()
}

/// Resolution density `γ(a) = (πσ)^{-d/2} exp[−(Im a)² / σ]`.
pub fn flat_gamma(params: &FlatParams, a: &[Complex64]) -> Result<f64> {
    params.check_len(a.len())?;
    let s = params.sigma();
    let y2: f64 = a.iter().map(|z| z.im * z.im).sum();
    Ok((PI * s).powf(-(params.d as f64) / 2.0) * (-y2 / s).exp())
}

/// Normalised Hermite polynomial part `q_n(t)` with `h_n(x) = q_n(x/ℓ) e^{−x²/2ℓ²}`, `0..=n`.
fn hermite_polys(n: usize, t: Complex64, length: f64) -> Vec<Complex64> {
    let mut q = Vec::with_capacity(n + 1);
    q.push(Complex64::new(PI.powf(-0.25) / length.sqrt(), 0.0));
    if n >= 1 {
        q.push(2f64.sqrt() * t * q[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * q[k] - (kf / (kf + 1.0)).sqrt() * q[k - 1];
        q.push(next);
    }
    q
}

/// Hermite functions `h_0..=h_n` of length scale `ℓ` at a real point.
pub fn hermite_functions(n: usize, length: f64, x: f64) -> Vec<f64> {
    let t = x / length;
    hermite_polys(n, Complex64::new(t, 0.0), length).iter().map(|q| q.re * (-t * t / 2.0).exp()).collect()
}

/// `Ch_k(a) = ∫ (2πσ)^{-1/2} exp[−(a − x)²/2σ] h_k(x) dx` for `k = 0..=n`, one variable.
/// After completing the square the integrand is a Gaussian times a polynomial of degree `k`,
/// so a Gauss–Hermite rule with `n/2 + 1` nodes is exact.
pub fn hermite_transform(sigma: f64, length: f64, n: usize, a: Complex64) -> Vec<Complex64> {
    let l2 = length * length;
    let s = sigma * l2 / (sigma + l2);
    let center = a * l2 / (sigma + l2);
    let envelope = (-a * a / (2.0 * (sigma + l2))).exp() * (2.0 * s).sqrt() / (2.0 * PI * sigma).sqrt();
    let (t, w) = gauss_hermite(n / 2 + 1);
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (ti, wi) in t.iter().zip(&w) {
        let q = hermite_polys(n, (center + (2.0 * s).sqrt() * ti) / length, length);
        for (o, qk) in out.iter_mut().zip(&q) {
            *o += wi * qk;
        }
    }
    out.iter().map(|v| v * envelope).collect()
}

/// Gram matrix `∫ conj(Ch_i) Ch_j γ da` over the first `n` Hermite functions per axis,
/// `d ∈ {1, 2}`. Tensor Gauss–Hermite rules in `Re a` and `Im a` with `nodes` points each.
pub fn flat_resolution_check(params: &FlatParams, n: usize, length: f64, nodes: usize) -> Result<DMatrix<Complex64>> {
    if !(1..=2).contains(&params.d) {
        return Err(Error::UnsupportedDimension(params.d));
    }
    if n == 0 || !(length > 0.0) || nodes == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1 functions, ℓ > 0 and at least one node".into()));
    }
    let sigma = params.sigma();
    let l2 = length * length;
    // |envelope|² γ = exp[−u²/(σ+ℓ²)] exp[−y² ℓ²/(σ(σ+ℓ²))] up to constants
    let su = (sigma + l2).sqrt();
    let sy = (sigma * (sigma + l2) / l2).sqrt();
    let (t, w) = gauss_hermite(nodes);
    let one = FlatParams { d: 1, ..*params };
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (tu, wu) in t.iter().zip(&w) {
        for (ty, wy) in t.iter().zip(&w) {
            let (u, y) = (su * tu, sy * ty);
            let a = Complex64::new(u, y);
            let undo = (tu * tu + ty * ty).exp() * su * sy * wu * wy * flat_gamma(&one, &[a])?;
            let c = hermite_transform(sigma, length, n - 1, a);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += undo * c[i].conj() * c[j];
                }
            }
        }
    }
    Ok(if params.d == 1 { m.clone() } else { m.kronecker(&m) })
}

/// `f(x) = ∫ F(x + i y) ν(σ, y) dy`, by a tensor composite Gauss–Legendre rule on
/// `|y_k| ≤ 12√σ`.
pub fn flat_inverse<F>(params: &FlatParams, big_f: F, x: &[f64]) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Result<Complex64>,
{
    params.check_len(x.len())?;
    if params.d > 3 {
        return Err(Error::UnsupportedDimension(params.d));
    }
    let sigma = params.sigma();
    let ymax = 12.0 * sigma.sqrt();
    let rule = composite_gauss_legendre(16, 24, -ymax, ymax);
    let d = params.d;
    let mut idx = vec![0usize; d];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let y: Vec<f64> = idx.iter().map(|&i| rule[i].0).collect();
        let w: f64 = idx.iter().map(|&i| rule[i].1).product();
        let a: Vec<Complex64> = x.iter().zip(&y).map(|(&x, &y)| Complex64::new(x, y)).collect();
        total += w * flat_nu(sigma, &y) * big_f(&a)?;
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < rule.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatAnnihilationReport {
    /// Third bracket term of the operator series on the interior.
    pub third_term: f64,
    /// `A` from the series against `X + i P / mω`.
    pub series_vs_closed: f64,
    /// `A` against `√(2σ)` times the ladder lowering operator.
    pub lowering: f64,
}

/// Operator series `A = Σ (2mωħ)^{-n}/n! [⋯[X, P²]⋯, P²]` on `n_states` oscillator states
/// of length `√σ`, compared on the states `< n_states − 4`.
pub fn flat_annihilation_check(params: &FlatParams, n_states: usize) -> Result<FlatAnnihilationReport> {
    if n_states < 6 {
        return Err(Error::InvalidParameter("need at least 6 oscillator states".into()));
    }
    let (s, hbar, mw) = (params.sigma(), params.hbar, params.m * params.omega);
    let l = s.sqrt();
    let n = n_states;
    let mut lower = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..n {
        lower[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    let raise = lower.adjoint();
    let x = (&lower + &raise) * Complex64::new(l / 2f64.sqrt(), 0.0);
    let p = (&raise - &lower) * Complex64::new(0.0, hbar / (l * 2f64.sqrt()));
    let p2 = &p * &p;
    let comm = |a: &DMatrix<Complex64>| a * &p2 - &p2 * a;
    let c1 = comm(&x);
    let c2 = comm(&c1);
    let k = 1.0 / (2.0 * mw * hbar);
    let series = &x + &c1 * Complex64::new(k, 0.0) + &c2 * Complex64::new(k * k / 2.0, 0.0);
    let closed = &x + &p * Complex64::new(0.0, 1.0 / mw);
    let inner = n - 4;
    let norm = |m: DMatrix<Complex64>| m.view((0, 0), (inner, inner)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(FlatAnnihilationReport {
        third_term: norm(&c2 * Complex64::new(k * k / 2.0, 0.0)),
        series_vs_closed: norm(&series - &closed),
        lowering: norm(&series - &lower * Complex64::new((2.0 * s).sqrt(), 0.0)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallTauReport {
    pub dim: usize,
    pub tau: f64,
    /// `|ψ_x₀(x₀) / ψ_flat(0) − 1|` for the unnormalised wavefunctions.
    pub peak_discrepancy: f64,
    /// Sup over tangent radii `≤ 6√τ` of the difference of normalised position densities,
    /// relative to the flat peak.
    pub density_discrepancy: f64,
    /// `√(⟨|y|²⟩/d)` of the flat density, equal to `√(τ/2)`.
    pub flat_width: f64,
}

/// Sphere coherent state at a real point `x₀` against the flat Gaussian with `σ = τ`, in
/// exponential coordinates around `x₀`.
pub fn small_tau_limit_check(dim: usize, tau: f64) -> Result<SmallTauReport> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if !(tau > 0.0 && tau <= 0.05) {
        return Err(Error::InvalidParameter(format!("the small-τ comparison needs 0 < τ ≤ 0.05, got {tau}")));
    }
    let df = dim as f64;
    let sphere_peak = rho(dim, tau, Complex64::new(0.0, 0.0))?.re;
    let peak_discrepancy = (sphere_peak * (2.0 * PI * tau).powf(df / 2.0) - 1.0).abs();
    let sphere_norm = rho(dim, 2.0 * tau, Complex64::new(0.0, 0.0))?.re;
    let flat_peak = (PI * tau).powf(-df / 2.0);
    let mut sup = 0.0f64;
    for k in 0..=240 {
        let t = 6.0 * tau.sqrt() * k as f64 / 240.0;
        let jac = if t == 0.0 { 1.0 } else { (t.sin() / t).powf(df - 1.0) };
        let sphere = rho(dim, tau, Complex64::new(t, 0.0))?.norm_sqr() / sphere_norm * jac;
        let flat = flat_peak * (-t * t / tau).exp();
        sup = sup.max((sphere - flat).abs() / flat_peak);
    }
    Ok(SmallTauReport { dim, tau, peak_discrepancy, density_discrepancy: sup, flat_width: (tau / 2.0).sqrt() })
}
