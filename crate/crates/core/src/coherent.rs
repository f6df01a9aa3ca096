//! Coherent states `ψ_a = e^{−τΔ/2} δ_ā` labelled by points of the complex sphere.
//!
//! States are unnormalized: `‖ψ_a‖² = R_τ(a, a)`. Wavefunctions are densities with respect
//! to the surface measure of the unit sphere.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{BasisLabel, BasisSpec, SparseMatrix, position_operators};
use crate::error::{Error, Result};
use crate::kernels::{KernelEvalRequest, KernelMethod, rho, rho_sphere};
use crate::model::{ComplexSpherePoint, complex_angle};
use crate::special::{composite_gauss_legendre, sphere_eigenvalue, zonal_sequence, zonal_weight};

/// Relative tail above which coefficient vectors are flagged.
pub const TAIL_WARNING: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    label: ComplexSpherePoint,
    tau: f64,
    coefficients: Option<CoefficientVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientVector {
    pub spec: BasisSpec,
    pub values: Vec<Complex64>,
    /// Exact norm of the discarded degrees relative to `‖ψ_a‖`.
    pub relative_tail: f64,
    pub tail_warning: bool,
}

impl CoherentState {
    pub fn new(label: ComplexSpherePoint, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!("τ must be positive, got {tau}")));
        }
        if !(1..=3).contains(&label.dim()) {
            return Err(Error::UnsupportedDimension(label.dim()));
        }
        Ok(Self { label, tau, coefficients: None })
    }

    /// Attaches coefficients in `basis`.
    pub fn with_basis(mut self, basis: &BasisSpec) -> Result<Self> {
        self.coefficients = Some(coefficients_in_basis(&self, basis)?);
        Ok(self)
    }

    pub fn label(&self) -> &ComplexSpherePoint {
        &self.label
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.label.dim()
    }

    pub fn coefficients(&self) -> Option<&CoefficientVector> {
        self.coefficients.as_ref()
    }

    /// `‖ψ_a‖² = R_τ(a, a)`.
    pub fn norm_squared(&self) -> Result<f64> {
        Ok(reproducing_kernel(&self.label, &self.label, self.tau)?.re)
    }
}

fn check_real_point(state: &CoherentState, x: &ComplexSpherePoint) -> Result<()> {
    if x.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim() + 1, got: x.coords().len() });
    }
    if !x.is_real(1e-12) {
        return Err(Error::InvalidParameter("position must lie on the real sphere".into()));
    }
    Ok(())
}

/// `ψ_a(x) = ρ_τ(θ)` with `cos θ = a·x/r²`.
pub fn position_wavefunction(state: &CoherentState, x: &ComplexSpherePoint) -> Result<Complex64> {
    check_real_point(state, x)?;
    rho(state.dim(), state.tau, complex_angle(&state.label, x))
}

/// `ψ_a(x) / √R_τ(a, a)`.
pub fn normalized_wavefunction(state: &CoherentState, x: &ComplexSpherePoint) -> Result<Complex64> {
    Ok(position_wavefunction(state, x)? / state.norm_squared()?.sqrt())
}

/// Wavefunction at many points, evaluated in parallel.
pub fn position_wavefunction_batch(state: &CoherentState, xs: &[ComplexSpherePoint]) -> Result<Vec<Complex64>> {
    xs.par_iter().map(|x| position_wavefunction(state, x)).collect()
}

/// `Σ_{m} |c_{l,m}|² = e^{−τλ_l} w_l G_l(|a|²/r²)` for every degree up to `max_degree`.
pub fn degree_block_norms(dim: usize, tau: f64, alpha: f64, max_degree: usize) -> Vec<f64> {
    let g = zonal_sequence(dim, max_degree, Complex64::new(alpha, 0.0));
    (0..=max_degree)
        .map(|l| (-tau * sphere_eigenvalue(dim, l)).exp() * zonal_weight(dim, l) * g[l].re)
        .collect()
}

/// Relative tail `(Σ_{l > cutoff} block_l / Σ_l block_l)^{1/2}`.
pub fn relative_tail(dim: usize, tau: f64, alpha: f64, cutoff: usize) -> f64 {
    let mut extra = 64usize;
    loop {
        let blocks = degree_block_norms(dim, tau, alpha, cutoff + extra);
        let total: f64 = blocks.iter().sum();
        let tail: f64 = blocks[cutoff + 1..].iter().sum();
        let last = blocks[cutoff + extra];
        if last < 1e-30 * total || extra > 4096 {
            return (tail / total).sqrt();
        }
        extra *= 2;
    }
}

/// Smallest degree cutoff whose discarded relative tail is at most `tol`.
pub fn certified_cutoff(dim: usize, tau: f64, alpha: f64, tol: f64) -> usize {
    let mut l = 2;
    while relative_tail(dim, tau, alpha, l) > tol {
        l += 1;
    }
    l
}

/// `c_b = e^{−τλ_b/2} · conj(b)(a)` continued holomorphically, so `ψ_a = Σ_b c_b b`.
pub fn coefficients_in_basis(state: &CoherentState, basis: &BasisSpec) -> Result<CoefficientVector> {
    if basis.dim != state.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim, got: state.dim() });
    }
    let a = state.label.unit_coords();
    let conj_a: Vec<Complex64> = a.iter().map(|z| z.conj()).collect();
    // conj(b)(x) on real x is b(x̄)* continued; evaluating b at ā and conjugating gives it at a
    let vals = basis.eval_all(&conj_a);
    let values = vals
        .iter()
        .enumerate()
        .map(|(i, v)| (-state.tau * basis.eigenvalue(i) / 2.0).exp() * v.conj())
        .collect();
    let tail = relative_tail(basis.dim, state.tau, state.label.alpha() / state.label.radius().powi(2), basis.cutoff);
    Ok(CoefficientVector { spec: *basis, values, relative_tail: tail, tail_warning: tail > TAIL_WARNING })
}

/// `R_τ(a, b) = ⟨ψ_b, ψ_a⟩ = ρ_{2τ}` at the complex angle between `a` and `b̄`.
pub fn reproducing_kernel(a: &ComplexSpherePoint, b: &ComplexSpherePoint, tau: f64) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.coords().len(), got: b.coords().len() });
    }
    rho(a.dim(), 2.0 * tau, complex_angle(a, &b.conj()))
}

/// Same as [`reproducing_kernel`] with an explicit kernel method.
pub fn reproducing_kernel_with(
    a: &ComplexSpherePoint,
    b: &ComplexSpherePoint,
    tau: f64,
    method: KernelMethod,
) -> Result<Complex64> {
    rho_sphere(&KernelEvalRequest::new(a.dim(), 2.0 * tau, complex_angle(a, &b.conj())).with_method(method))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overlap {
    pub value: Complex64,
    pub tail_warning: bool,
}

/// Truncated inner product `⟨ψ₂, ψ₁⟩ = Σ conj(c₂) c₁`.
pub fn overlap(state1: &CoherentState, state2: &CoherentState, basis: &BasisSpec) -> Result<Overlap> {
    if (state1.tau - state2.tau).abs() > 1e-15 * state1.tau {
        return Err(Error::InvalidParameter("overlap requires equal τ".into()));
    }
    let c1 = coefficients_in_basis(state1, basis)?;
    let c2 = coefficients_in_basis(state2, basis)?;
    let terms: Vec<Complex64> = c1.values.iter().zip(&c2.values).map(|(u, v)| v.conj() * u).collect();
    Ok(Overlap {
        value: crate::special::pairwise_sum(&terms),
        tail_warning: c1.tail_warning || c2.tail_warning,
    })
}

/// Sparse `A_k` on the unit sphere: `X_k` entries scaled by `e^{τ(λ_c − λ_r)/2}`.
pub fn sparse_annihilation(spec: &BasisSpec, tau: f64) -> Vec<SparseMatrix> {
    position_operators(spec)
        .into_iter()
        .map(|x| SparseMatrix {
            n: x.n,
            entries: x
                .entries
                .into_iter()
                .map(|(r, c, v)| (r, c, v * (tau * (spec.eigenvalue(c) - spec.eigenvalue(r)) / 2.0).exp()))
                .collect(),
        })
        .collect()
}

/// `‖A_k ψ_a − a_k ψ_a‖ / ‖ψ_a‖` in units of `r`, for each `k`, with ψ truncated at `cutoff`.
///
/// Coefficients are computed one degree past `cutoff` so that rows of degree `≤ cutoff`
/// are exact, and the residual is measured on those rows.
pub fn eigen_residuals(state: &CoherentState, cutoff: usize) -> Result<Vec<f64>> {
    let dim = state.dim();
    if dim > 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let wide = BasisSpec::with_cutoff(dim, cutoff + 1)?;
    let c = coefficients_in_basis(state, &wide)?;
    let a = state.label.unit_coords();
    let rows: Vec<usize> = (0..wide.size()).filter(|&i| wide.degree(i) <= cutoff).collect();
    let norm: f64 = rows.iter().map(|&i| c.values[i].norm_sqr()).sum::<f64>().sqrt();
    Ok(sparse_annihilation(&wide, state.tau)
        .iter()
        .zip(&a)
        .map(|(ak, &ak_val)| {
            let applied = ak.apply(&c.values);
            let res: f64 = rows.iter().map(|&i| (applied[i] - ak_val * c.values[i]).norm_sqr()).sum();
            res.sqrt() / norm
        })
        .collect())
}

/// Largest `‖A_k ψ − a_k ψ‖ / (|a_k| ‖ψ‖)` over `k`; components with `|a_k| < 10⁻³ r` are
/// measured against `10⁻³ r`.
pub fn relative_eigen_residual(state: &CoherentState, cutoff: usize) -> Result<f64> {
    let res = eigen_residuals(state, cutoff)?;
    let a = state.label.unit_coords();
    Ok(res.iter().zip(&a).map(|(r, z)| r / z.norm().max(1e-3)).fold(0.0, f64::max))
}

/// Cauchy–Riemann residual of the basis coefficients along the complex rotation in the
/// `(k, l)` plane through the label: `|∂c/∂z̄| / max|∂c/∂z|`, by central differences.
pub fn holomorphy_residual(state: &CoherentState, basis: &BasisSpec, k: usize, l: usize, h: f64) -> Result<f64> {
    let n = state.dim() + 1;
    if k >= n || l >= n || k == l {
        return Err(Error::InvalidParameter(format!("invalid rotation plane ({k}, {l})")));
    }
    let coeffs_at = |z: Complex64| -> Result<Vec<Complex64>> {
        let (c, s) = (z.cos(), z.sin());
        let mut a = state.label.coords().to_vec();
        let (ak, al) = (a[k], a[l]);
        a[k] = c * ak - s * al;
        a[l] = s * ak + c * al;
        let moved = CoherentState::new(ComplexSpherePoint::new(state.label.radius(), a)?, state.tau)?;
        Ok(coefficients_in_basis(&moved, basis)?.values)
    };
    let i = Complex64::i();
    let hx = Complex64::new(h, 0.0);
    let hy = i * h;
    let (px, mx, py, my) = (coeffs_at(hx)?, coeffs_at(-hx)?, coeffs_at(hy)?, coeffs_at(-hy)?);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..px.len() {
        let dx = (px[j] - mx[j]) / (2.0 * h);
        let dy = (py[j] - my[j]) / (2.0 * h);
        // ∂/∂z̄ = (∂x + i∂y)/2
        worst = worst.max(((dx + i * dy) / 2.0).norm());
        scale = scale.max(dx.norm());
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// Label moved by a real rotation matrix (rows of length `d + 1`).
pub fn rotate_label(a: &ComplexSpherePoint, rotation: &[Vec<f64>]) -> Result<ComplexSpherePoint> {
    let n = a.coords().len();
    if rotation.len() != n || rotation.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: rotation.len() });
    }
    let mut gram_dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| rotation[i][k] * rotation[j][k]).sum();
            gram_dev = gram_dev.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    if gram_dev > 1e-12 {
        return Err(Error::InvalidParameter(format!("matrix is not orthogonal (deviation {gram_dev:.3e})")));
    }
    let rotated = (0..n)
        .map(|i| (0..n).map(|k| rotation[i][k] * a.coords()[k]).sum())
        .collect();
    ComplexSpherePoint::new(a.radius(), rotated)
}

/// Action of the rotation by `phi` in the `(1, 2)` plane on coefficients: `c_b ↦ e^{−i m φ} c_b`
/// with `m = n` for Fourier modes and `m` the azimuthal index for harmonics.
pub fn rotate_coefficients_planar(spec: &BasisSpec, values: &[Complex64], phi: f64) -> Vec<Complex64> {
    values
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let m = match spec.label(i) {
                BasisLabel::Fourier(n) => n,
                BasisLabel::Harmonic { m, .. } => m,
            };
            c * Complex64::from_polar(1.0, -(m as f64) * phi)
        })
        .collect()
}

/// Rotation by `phi` in the `(1, 2)` plane as a matrix.
pub fn planar_rotation(dim: usize, phi: f64) -> Vec<Vec<f64>> {
    let n = dim + 1;
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    m[0][0] = phi.cos();
    m[0][1] = -phi.sin();
    m[1][0] = phi.sin();
    m[1][1] = phi.cos();
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakProfile {
    /// `|ψ_a|²` at the label, divided by its largest value on the radial grid.
    pub peak_ratio: f64,
    /// RMS displacement per tangent direction, `(⟨sin²θ⟩/d)^{1/2}`, in units of `r`.
    pub width: f64,
}

/// Density profile of `ψ_a` for real `a`, as a function of the geodesic distance `θ`.
pub fn peak_profile(dim: usize, tau: f64) -> Result<PeakProfile> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let panels = ((std::f64::consts::PI / tau.sqrt()).ceil() as usize).clamp(4, 400);
    let nodes = composite_gauss_legendre(16, panels, 0.0, std::f64::consts::PI);
    let vals: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|&(t, w)| rho(dim, tau, Complex64::new(t, 0.0)).map(|v| (t, w, v.norm_sqr())))
        .collect::<Result<_>>()?;
    let peak = rho(dim, tau, Complex64::new(0.0, 0.0))?.norm_sqr();
    let (mut mass, mut second, mut max) = (0.0, 0.0, 0.0f64);
    for &(t, w, v) in &vals {
        let jac = t.sin().powi(dim as i32 - 1);
        mass += w * jac * v;
        second += w * jac * v * t.sin().powi(2);
        max = max.max(v);
    }
    Ok(PeakProfile { peak_ratio: peak / max.max(peak), width: (second / mass / dim as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelMethod, TruncationSpec};
    use crate::model::{ModelParams, PhasePoint, complexify};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn circle_label(theta0: f64, rho_: f64) -> ComplexSpherePoint {
        let z = Complex64::new(theta0, rho_);
        ComplexSpherePoint::new(1.0, vec![z.cos(), z.sin()]).unwrap()
    }

    fn label(d: usize, x: &[f64], p: &[f64]) -> ComplexSpherePoint {
        let params = ModelParams::dimensionless(d, 1.0).unwrap();
        complexify(&params, &PhasePoint::from_dimensionless(&params, x, p).unwrap())
    }

    fn real(x: &[f64]) -> ComplexSpherePoint {
        ComplexSpherePoint::from_real(1.0, x).unwrap()
    }

    #[test]
    fn peak_value_at_label() {
        let s = CoherentState::new(real(&[0.0, 0.6, 0.8]), 0.4).unwrap();
        let v = position_wavefunction(&s, &real(&[0.0, 0.6, 0.8])).unwrap();
        assert!((v - rho(2, 0.4, Complex64::new(0.0, 0.0)).unwrap()).norm() < 1e-15);
        let off = position_wavefunction(&s, &real(&[0.0, 0.8, 0.6])).unwrap();
        assert!(off.re < v.re && off.re > 0.0 && off.im.abs() < 1e-15);
    }

    #[test]
    fn circle_wavefunction_is_periodized_gaussian() {
        let (tau, t0, rh) = (0.7, 0.4, 0.3);
        let s = CoherentState::new(circle_label(t0, rh), tau).unwrap();
        for &th in &[0.0, 1.1, -2.5, 3.0] {
            let x = real(&[f64::cos(th), f64::sin(th)]);
            let v = position_wavefunction(&s, &x).unwrap();
            let u = Complex64::new(th - t0, -rh);
            let expect: Complex64 = (-40..=40)
                .map(|n| (-(u - 2.0 * PI * n as f64).powu(2) / (2.0 * tau)).exp())
                .sum::<Complex64>()
                / (2.0 * PI * tau).sqrt();
            assert!((v - expect).norm() < 1e-13 * expect.norm().max(1.0), "{v} vs {expect}");
        }
    }

    #[test]
    fn real_label_has_unit_mass() {
        let s = CoherentState::new(real(&[1.0, 0.0]), 0.3).unwrap();
        let n = 400;
        let mass: f64 = (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                position_wavefunction(&s, &real(&[th.cos(), th.sin()])).unwrap().re * 2.0 * PI / n as f64
            })
            .sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_coefficients_closed_form() {
        let (tau, rh) = (1.0, 0.5);
        let s = CoherentState::new(circle_label(0.0, rh), tau).unwrap();
        let spec = BasisSpec::with_cutoff(1, 12).unwrap();
        let c = coefficients_in_basis(&s, &spec).unwrap();
        let mut best = (0i64, 0.0f64);
        for i in 0..spec.size() {
            let BasisLabel::Fourier(n) = spec.label(i) else { unreachable!() };
            let nf = n as f64;
            let expect = (-nf * nf / 2.0).exp() * (nf * rh).exp() / (2.0 * PI).sqrt();
            assert!((c.values[i].norm() - expect).abs() < 1e-15, "n={n}");
            if expect > best.1 {
                best = (n, expect);
            }
        }
        assert_eq!(best.0, 0);
        // c_n = e^{−τn²/2} e^{−in(θ₀+iρ)} / √(2π)
        let s2 = CoherentState::new(circle_label(0.9, rh), tau).unwrap();
        let c2 = coefficients_in_basis(&s2, &spec).unwrap();
        let i3 = spec.index(BasisLabel::Fourier(3)).unwrap();
        let expect = (-4.5f64).exp() * (Complex64::new(0.0, -3.0) * Complex64::new(0.9, rh)).exp() / (2.0 * PI).sqrt();
        assert!((c2.values[i3] - expect).norm() < 1e-15);
    }

    #[test]
    fn coefficients_resum_to_wavefunction() {
        let a = label(2, &[0.6, 0.0, 0.8], &[0.4, 0.6, -0.3]);
        let s = CoherentState::new(a, 0.5).unwrap();
        let spec = BasisSpec::with_cutoff(2, 24).unwrap();
        let c = coefficients_in_basis(&s, &spec).unwrap();
        assert!(!c.tail_warning);
        let x = real(&[0.6, 0.0, -0.8]);
        let y = spec.eval_all(x.coords());
        let sum: Complex64 = c.values.iter().zip(&y).map(|(u, v)| u * v).sum();
        let direct = position_wavefunction(&s, &x).unwrap();
        assert!((sum - direct).norm() < 1e-11 * direct.norm().max(1.0), "{sum} vs {direct}");
    }

    #[test]
    fn tail_warning_flags_short_bases() {
        let s = CoherentState::new(label(2, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]), 0.2).unwrap();
        let c = coefficients_in_basis(&s, &BasisSpec::with_cutoff(2, 4).unwrap()).unwrap();
        assert!(c.tail_warning && c.relative_tail > 1e-10);
    }

    #[test]
    fn block_norms_sum_to_kernel() {
        for (d, tau) in [(1usize, 0.3), (2, 0.5), (3, 0.8)] {
            let a = match d {
                1 => label(1, &[1.0, 0.0], &[0.0, 0.7]),
                2 => label(2, &[1.0, 0.0, 0.0], &[0.0, 0.7, 0.0]),
                _ => label(3, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.7, 0.0]),
            };
            let total: f64 = degree_block_norms(d, tau, a.alpha(), 200).iter().sum();
            let r = reproducing_kernel(&a, &a, tau).unwrap();
            assert!((total - r.re).abs() < 1e-12 * r.re, "d={d}");
        }
    }

    #[test]
    fn overlap_matches_kernel() {
        let spec1 = BasisSpec::with_cutoff(1, 40).unwrap();
        let a = circle_label(0.3, 0.4);
        let b = circle_label(-1.2, -0.2);
        let (sa, sb) = (CoherentState::new(a.clone(), 0.6).unwrap(), CoherentState::new(b.clone(), 0.6).unwrap());
        let o = overlap(&sa, &sb, &spec1).unwrap();
        let r = reproducing_kernel(&a, &b, 0.6).unwrap();
        assert!((o.value - r).norm() < 1e-10 && !o.tail_warning);
        let self_o = overlap(&sa, &sa, &spec1).unwrap();
        assert!((self_o.value - sa.norm_squared().unwrap()).norm() < 1e-10);
        let back = overlap(&sb, &sa, &spec1).unwrap();
        assert!((back.value - o.value.conj()).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_real_labels_on_two_sphere() {
        let tau = 0.5;
        let (a, b) = (real(&[1.0, 0.0, 0.0]), real(&[0.0, 0.0, 1.0]));
        let spec = BasisSpec::with_cutoff(2, 30).unwrap();
        let o = overlap(&CoherentState::new(a.clone(), tau).unwrap(), &CoherentState::new(b.clone(), tau).unwrap(), &spec)
            .unwrap();
        let theta = reproducing_kernel_with(&a, &b, tau, KernelMethod::ThetaSum).unwrap();
        let spectral = reproducing_kernel_with(&a, &b, tau, KernelMethod::Spectral).unwrap();
        let direct = rho_sphere(
            &KernelEvalRequest::new(2, 2.0 * tau, Complex64::new(PI / 2.0, 0.0)).with_truncation(TruncationSpec::default()),
        )
        .unwrap();
        assert!((theta - spectral).norm() < 1e-12);
        assert!((o.value - direct).norm() < 1e-10 && (theta - direct).norm() < 1e-12);
    }

    #[test]
    fn eigenvector_property() {
        for (d, tau) in [(1usize, 0.2), (1, 1.0), (2, 0.2), (2, 0.5), (2, 1.0)] {
            let a = if d == 1 { label(1, &[0.6, 0.8], &[-1.2, 0.9]) } else { label(2, &[0.6, 0.0, 0.8], &[0.4, 1.0, -0.3]) };
            let s = CoherentState::new(a.clone(), tau).unwrap();
            let cutoff = certified_cutoff(d, tau, a.alpha(), 1e-14);
            let res = relative_eigen_residual(&s, cutoff).unwrap();
            assert!(res <= 1e-8, "d={d} τ={tau} L={cutoff}: {res}");
        }
    }

    #[test]
    fn holomorphic_in_label() {
        let a = label(2, &[0.6, 0.0, 0.8], &[0.4, 1.0, -0.3]);
        let s = CoherentState::new(a, 0.5).unwrap();
        let spec = BasisSpec::with_cutoff(2, 8).unwrap();
        for (k, l) in [(0, 1), (1, 2), (0, 2)] {
            let r = holomorphy_residual(&s, &spec, k, l, 1e-4).unwrap();
            assert!(r <= 1e-6, "({k},{l}): {r}");
        }
    }

    #[test]
    fn rotation_covariance() {
        let spec1 = BasisSpec::with_cutoff(1, 10).unwrap();
        let s = CoherentState::new(circle_label(0.2, 0.6), 0.4).unwrap();
        let phi = 0.75;
        let moved = CoherentState::new(rotate_label(s.label(), &planar_rotation(1, phi)).unwrap(), 0.4).unwrap();
        let c = coefficients_in_basis(&s, &spec1).unwrap().values;
        let cm = coefficients_in_basis(&moved, &spec1).unwrap().values;
        let rotated = rotate_coefficients_planar(&spec1, &c, phi);
        for (u, v) in cm.iter().zip(&rotated) {
            assert!((u - v).norm() <= 1e-15 * (1.0 + u.norm()) * 4.0);
        }

        let spec2 = BasisSpec::with_cutoff(2, 6).unwrap();
        let s2 = CoherentState::new(label(2, &[0.6, 0.0, 0.8], &[0.4, 1.0, -0.3]), 0.5).unwrap();
        let moved2 = CoherentState::new(rotate_label(s2.label(), &planar_rotation(2, phi)).unwrap(), 0.5).unwrap();
        let c2 = coefficients_in_basis(&s2, &spec2).unwrap().values;
        let cm2 = coefficients_in_basis(&moved2, &spec2).unwrap().values;
        for (u, v) in cm2.iter().zip(&rotate_coefficients_planar(&spec2, &c2, phi)) {
            assert!((u - v).norm() <= 1e-13 * (1.0 + u.norm()));
        }

        // a generic rotation: ψ_{Ra}(Rx) = ψ_a(x)
        let (c, sn) = (0.3f64.cos(), 0.3f64.sin());
        let rot = vec![vec![c, 0.0, sn], vec![sn * sn, c, -sn * c], vec![-c * sn, sn, c * c]];
        let moved3 = CoherentState::new(rotate_label(s2.label(), &rot).unwrap(), 0.5).unwrap();
        let x = real(&[0.2, -0.4, 0.7]);
        let rx = rotate_label(&x, &rot).unwrap();
        let lhs = position_wavefunction(&moved3, &rx).unwrap();
        let rhs = position_wavefunction(&s2, &x).unwrap();
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
    }

    #[test]
    fn peaks_at_label_with_heat_width() {
        for d in 1..=3 {
            let tau = 0.1;
            let p = peak_profile(d, tau).unwrap();
            assert!((p.peak_ratio - 1.0).abs() < 1e-15);
            let expect = (tau / 2.0).sqrt();
            assert!((p.width / expect - 1.0).abs() < 0.2, "d={d}: {} vs {expect}", p.width);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CoherentState::new(real(&[1.0, 0.0]), 0.0).is_err());
        let s = CoherentState::new(real(&[1.0, 0.0]), 0.5).unwrap();
        assert!(position_wavefunction(&s, &circle_label(0.0, 0.3)).is_err());
        assert!(position_wavefunction(&s, &real(&[1.0, 0.0, 0.0])).is_err());
        assert!(coefficients_in_basis(&s, &BasisSpec::with_cutoff(2, 4).unwrap()).is_err());
        assert!(rotate_label(s.label(), &[vec![1.0, 1.0], vec![0.0, 1.0]]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn kernel_is_hermitian(t1 in -3.0f64..3.0, r1 in -1.0f64..1.0, t2 in -3.0f64..3.0, r2 in -1.0f64..1.0,
                               tau in 0.1f64..1.5) {
            let (a, b) = (circle_label(t1, r1), circle_label(t2, r2));
            let ab = reproducing_kernel(&a, &b, tau).unwrap();
            let ba = reproducing_kernel(&b, &a, tau).unwrap();
            prop_assert!((ab - ba.conj()).norm() <= 1e-12 * ab.norm().max(1.0));
            let aa = reproducing_kernel(&a, &a, tau).unwrap();
            prop_assert!(aa.re > 0.0 && aa.im.abs() <= 1e-12 * aa.re);
        }
    }
}
