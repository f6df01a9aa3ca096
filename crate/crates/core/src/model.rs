//! Physical constants, phase-space points of `T*(S^d)` and the complexifier map onto
//! the complexified sphere `S^d_C = { a ∈ C^{d+1} : Σ a_k² = r² }`.
//!
//! Every routine rescales to the dimensionless frame `x̃ = x / r`, `p̃ = p / (m ω r)`,
//! in which only `d` and `τ = ħ / (m ω r²)` remain.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::sinhc;

/// Relative tolerance for accepted constraint residuals.
pub const TOL_CONSTRAINT: f64 = 1e-10;
/// Inputs with residual below this are projected back onto the constraint surface.
pub const TOL_ADMISSION: f64 = 1e-6;

/// Physical constants of the particle on the sphere of radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub r: f64,
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl ModelParams {
    pub fn new(d: usize, r: f64, m: f64, omega: f64, hbar: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedDimension(d));
        }
        for (name, v) in [("r", r), ("m", m), ("omega", omega), ("hbar", hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { d, r, m, omega, hbar })
    }

    /// Units with `r = m = ω = 1`, so that `ħ = τ`.
    pub fn dimensionless(d: usize, tau: f64) -> Result<Self> {
        Self::new(d, 1.0, 1.0, 1.0, tau)
    }

    /// `τ = ħ / (m ω r²)`.
    pub fn tau(&self) -> f64 {
        self.hbar / (self.m * self.omega * self.r * self.r)
    }

    pub fn m_omega(&self) -> f64 {
        self.m * self.omega
    }

    /// Momentum scale `m ω r` used to make momenta dimensionless.
    pub fn momentum_scale(&self) -> f64 {
        self.m * self.omega * self.r
    }

    pub fn ambient_dim(&self) -> usize {
        self.d + 1
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A point `(x, p)` of `T*(S^d)` in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    x: Vec<f64>,
    p: Vec<f64>,
}

impl PhasePoint {
    /// Validates `|x| = r` and `x · p = 0`. Residuals below [`TOL_ADMISSION`] are
    /// removed by normalizing `x` and projecting `p` onto the tangent plane.
    pub fn new(params: &ModelParams, x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let n = params.ambient_dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        if x.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite phase-space coordinate".into()));
        }
        let r = params.r;
        let xres = (norm(&x) / r - 1.0).abs();
        if xres > TOL_ADMISSION {
            return Err(Error::ConstraintViolation { what: "|x| = r", residual: xres, tolerance: TOL_ADMISSION });
        }
        let scale = r / norm(&x);
        let x: Vec<f64> = x.iter().map(|v| v * scale).collect();

        let pn = norm(&p);
        let eps = f64::EPSILON * params.momentum_scale();
        let xp = dot(&x, &p);
        let pres = xp.abs() / (r * pn + eps);
        if pres > TOL_ADMISSION {
            return Err(Error::ConstraintViolation { what: "x · p = 0", residual: pres, tolerance: TOL_ADMISSION });
        }
        let c = xp / (r * r);
        let p = p.iter().zip(&x).map(|(pk, xk)| pk - c * xk).collect();
        Ok(Self { x, p })
    }

    /// Point with coordinates given in the dimensionless frame.
    pub fn from_dimensionless(params: &ModelParams, x: &[f64], p: &[f64]) -> Result<Self> {
        let ms = params.momentum_scale();
        Self::new(
            params,
            x.iter().map(|v| v * params.r).collect(),
            p.iter().map(|v| v * ms).collect(),
        )
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn momentum_norm(&self) -> f64 {
        norm(&self.p)
    }

    pub fn negated_momentum(&self) -> Self {
        Self { x: self.x.clone(), p: self.p.iter().map(|v| -v).collect() }
    }

    pub fn angular_momentum(&self) -> AngularMomentumMatrix {
        AngularMomentumMatrix::from_phase_point(self)
    }
}

/// `j = p ⊗ x − x ⊗ p` together with `j² = Σ_{k<l} j_kl²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularMomentumMatrix {
    pub j: DMatrix<f64>,
    pub j2: f64,
}

impl AngularMomentumMatrix {
    pub fn from_phase_point(pt: &PhasePoint) -> Self {
        let n = pt.x.len();
        let j = DMatrix::from_fn(n, n, |k, l| pt.p[k] * pt.x[l] - pt.p[l] * pt.x[k]);
        let mut j2 = 0.0;
        for k in 0..n {
            for l in (k + 1)..n {
                j2 += j[(k, l)] * j[(k, l)];
            }
        }
        Self { j, j2 }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n).map(|k| (0..n).map(|l| self.j[(k, l)] * v[l]).sum()).collect()
    }
}

/// A point of the complexified sphere, `Σ a_k² = r²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpherePoint {
    a: Vec<Complex64>,
    r: f64,
}

impl ComplexSpherePoint {
    pub fn new(r: f64, a: Vec<Complex64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidParameter("complex sphere point needs at least two components".into()));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        let sq: Complex64 = a.iter().map(|z| z * z).sum();
        let alpha: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let res = (sq - r * r).norm() / (r * r).max(alpha);
        if res > TOL_CONSTRAINT {
            return Err(Error::ConstraintViolation { what: "Σ a_k² = r²", residual: res, tolerance: TOL_CONSTRAINT });
        }
        Ok(Self { a, r })
    }

    /// Real point of `S^d`; `x` is rescaled onto the sphere.
    pub fn from_real(r: f64, x: &[f64]) -> Result<Self> {
        let n = norm(x);
        if !(n > 0.0) {
            return Err(Error::InvalidParameter("zero vector is not on the sphere".into()));
        }
        Self::new(r, x.iter().map(|v| Complex64::new(v * r / n, 0.0)).collect())
    }

    pub(crate) fn new_unchecked(r: f64, a: Vec<Complex64>) -> Self {
        Self { a, r }
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.a
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.a.len() - 1
    }

    /// `α = Σ |a_k|²`, at least `r²` with equality on the real sphere.
    pub fn alpha(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn conj(&self) -> Self {
        Self { a: self.a.iter().map(|z| z.conj()).collect(), r: self.r }
    }

    /// Coordinates divided by `r`.
    pub fn unit_coords(&self) -> Vec<Complex64> {
        self.a.iter().map(|z| z / self.r).collect()
    }

    /// Bilinear (not Hermitian) product `a · b / r²`.
    pub fn bilinear(&self, other: &Self) -> Complex64 {
        self.a.iter().zip(&other.a).map(|(u, v)| u * v).sum::<Complex64>() / (self.r * other.r)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.a.iter().all(|z| z.im.abs() <= tol * self.r)
    }
}

/// Closed form `a = cosh(p̃) x + i r sinh(p̃)/p̃ · p/(m ω r)`, `p̃ = |p| / (m ω r)`.
pub fn complexify(params: &ModelParams, pt: &PhasePoint) -> ComplexSpherePoint {
    let ms = params.momentum_scale();
    let r = params.r;
    let pt_norm = pt.momentum_norm() / ms;
    let ch = pt_norm.cosh();
    let sh = sinhc(Complex64::new(pt_norm, 0.0)).re;
    let a = pt
        .x
        .iter()
        .zip(&pt.p)
        .map(|(x, p)| Complex64::new(ch * x, sh * r * p / ms))
        .collect();
    ComplexSpherePoint::new_unchecked(r, a)
}

/// Partial sum `Σ_{n < n_terms} (i j / m ω r²)^n x / n!` of the complexifier series.
pub fn complexify_series(params: &ModelParams, pt: &PhasePoint, n_terms: usize) -> Result<ComplexSpherePoint> {
    if n_terms == 0 {
        return Err(Error::InvalidParameter("n_terms must be at least 1".into()));
    }
    let jm = pt.angular_momentum();
    let scale = 1.0 / (params.m_omega() * params.r * params.r);
    let n = pt.x.len();
    let mut term: Vec<Complex64> = pt.x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut sum = term.clone();
    for k in 1..n_terms {
        let next: Vec<Complex64> = (0..n)
            .map(|row| {
                let s: Complex64 = (0..n).map(|col| jm.j[(row, col)] * term[col]).sum();
                s * Complex64::new(0.0, scale / k as f64)
            })
            .collect();
        term = next;
        for (acc, t) in sum.iter_mut().zip(&term) {
            *acc += t;
        }
    }
    Ok(ComplexSpherePoint::new_unchecked(params.r, sum))
}

/// Inverse of [`complexify`]. `|Im a| = r sinh(p̃)` fixes the momentum magnitude.
pub fn decomplexify(params: &ModelParams, a: &ComplexSpherePoint) -> Result<PhasePoint> {
    let r = params.r;
    if a.coords().len() != params.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: params.ambient_dim(), got: a.coords().len() });
    }
    let alpha = a.alpha() / (r * r);
    if alpha < 1.0 - TOL_CONSTRAINT {
        return Err(Error::ConstraintViolation { what: "|a|² ≥ r²", residual: 1.0 - alpha, tolerance: TOL_CONSTRAINT });
    }
    let unit = a.unit_coords();
    let im_norm = unit.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    let s = im_norm.asinh();
    let ch = s.cosh();
    let shc = sinhc(Complex64::new(s, 0.0)).re;
    let ms = params.momentum_scale();
    let x: Vec<f64> = unit.iter().map(|z| r * z.re / ch).collect();
    let p: Vec<f64> = unit.iter().map(|z| ms * z.im / shc).collect();
    PhasePoint::new(params, x, p)
}

/// Principal complex angle with `cos θ = a · x / r²`, `Re θ ∈ [0, π]`.
pub fn complex_angle(a: &ComplexSpherePoint, x: &ComplexSpherePoint) -> Complex64 {
    a.bilinear(x).acos()
}

/// `complexify(x, −p) = conj(complexify(x, p))` to `1e-14` relative.
pub fn conjugation_symmetry_check(params: &ModelParams, pt: &PhasePoint) -> bool {
    conjugation_residual(params, pt) <= 1e-14
}

pub fn conjugation_residual(params: &ModelParams, pt: &PhasePoint) -> f64 {
    let plus = complexify(params, pt);
    let minus = complexify(params, &pt.negated_momentum());
    plus.coords()
        .iter()
        .zip(minus.coords())
        .map(|(u, v)| (u.conj() - v).norm())
        .fold(0.0, f64::max)
        / plus.alpha().sqrt()
}

/// Poisson brackets on the Lie–Poisson space `e(d+1)*` with coordinates `(x_k, j_kl)`,
/// restricted to the leaf `T*(S^d)` (dimensionless units).
pub mod poisson {
    use num_complex::Complex64;

    /// Index list of the independent `j_kl`, `k < l`.
    pub fn pairs(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|k| ((k + 1)..n).map(move |l| (k, l))).collect()
    }

    /// Ambient coordinates `(x, j_{k<l})` of a dimensionless phase point.
    pub fn coordinates(x: &[f64], p: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut c = x.to_vec();
        for (k, l) in pairs(n) {
            c.push(p[k] * x[l] - p[l] * x[k]);
        }
        c
    }

    fn jval(c: &[f64], n: usize, pr: &[(usize, usize)], k: usize, l: usize) -> f64 {
        if k == l {
            return 0.0;
        }
        let (a, b, sign) = if k < l { (k, l, 1.0) } else { (l, k, -1.0) };
        let idx = pr.iter().position(|&q| q == (a, b)).expect("pair exists");
        sign * c[n + idx]
    }

    /// Complex coordinate `a_k` as a function on the ambient space,
    /// `a = cosh(s) x + i sinh(s)/s · j x` with `s² = Σ_{k<l} j_kl²`.
    pub fn a_component(c: &[f64], n: usize, k: usize) -> Complex64 {
        let pr = pairs(n);
        let s2: f64 = c[n..].iter().map(|v| v * v).sum();
        let s = s2.sqrt();
        let jx: f64 = (0..n).map(|m| jval(c, n, &pr, k, m) * c[m]).sum();
        let shc = crate::special::sinhc_real(s);
        Complex64::new(s.cosh() * c[k], shc * jx)
    }

    /// Momentum `p_k = (j x)_k` (unit radius).
    pub fn p_component(c: &[f64], n: usize, k: usize) -> Complex64 {
        let pr = pairs(n);
        Complex64::new((0..n).map(|m| jval(c, n, &pr, k, m) * c[m]).sum(), 0.0)
    }

    fn gradient<F: Fn(&[f64]) -> Complex64>(f: &F, c: &[f64], h: f64) -> Vec<Complex64> {
        (0..c.len())
            .map(|i| {
                let central = |step: f64| {
                    let mut up = c.to_vec();
                    let mut dn = c.to_vec();
                    up[i] += step;
                    dn[i] -= step;
                    (f(&up) - f(&dn)) / (2.0 * step)
                };
                // Richardson extrapolation of the central difference
                (4.0 * central(h / 2.0) - central(h)) / 3.0
            })
            .collect()
    }

    /// `{f, g}` at ambient point `c`, derivatives by extrapolated central differences.
    pub fn bracket<F, G>(f: F, g: G, c: &[f64], n: usize, h: f64) -> Complex64
    where
        F: Fn(&[f64]) -> Complex64,
        G: Fn(&[f64]) -> Complex64,
    {
        let pr = pairs(n);
        let df = gradient(&f, c, h);
        let dg = gradient(&g, c, h);
        let xv = &c[..n];
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut total = Complex64::new(0.0, 0.0);
        // {x_k, j_lm} = δ_kl x_m − δ_km x_l
        for k in 0..n {
            for (idx, &(l, m)) in pr.iter().enumerate() {
                let b = delta(k, l) * xv[m] - delta(k, m) * xv[l];
                if b != 0.0 {
                    total += (df[k] * dg[n + idx] - dg[k] * df[n + idx]) * b;
                }
            }
        }
        // {j_kl, j_mn} = δ_kn j_lm + δ_lm j_kn − δ_km j_ln − δ_ln j_km
        for (i1, &(k, l)) in pr.iter().enumerate() {
            for (i2, &(m, nn)) in pr.iter().enumerate() {
                let b = delta(k, nn) * jval(c, n, &pr, l, m) + delta(l, m) * jval(c, n, &pr, k, nn)
                    - delta(k, m) * jval(c, n, &pr, l, nn)
                    - delta(l, nn) * jval(c, n, &pr, k, m);
                if b != 0.0 {
                    total += df[n + i1] * dg[n + i2] * b;
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_dimensionless_point(rng: &mut ChaCha8Rng, d: usize, pmax: f64) -> (Vec<f64>, Vec<f64>) {
        let n = d + 1;
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = dot(&x, &p);
        p.iter_mut().zip(&x).for_each(|(pk, xk)| *pk -= c * xk);
        let np = norm(&p);
        let target = rng.random_range(0.0..pmax);
        p.iter_mut().for_each(|v| *v *= target / np);
        (x, p)
    }

    fn unit(d: usize) -> ModelParams {
        ModelParams::dimensionless(d, 0.5).unwrap()
    }

    #[test]
    fn tau_is_derived() {
        let p = ModelParams::new(2, 2.0, 3.0, 0.5, 0.7).unwrap();
        assert!((p.tau() - 0.7 / (3.0 * 0.5 * 4.0)).abs() < 1e-16);
        assert!(ModelParams::new(2, -1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_momentum_maps_to_base_point() {
        let params = unit(2);
        let pt = PhasePoint::new(&params, vec![0.0, 0.6, 0.8], vec![0.0; 3]).unwrap();
        let a = complexify(&params, &pt);
        for (z, x) in a.coords().iter().zip(pt.x()) {
            assert_eq!(*z, Complex64::new(*x, 0.0));
        }
    }

    #[test]
    fn circle_case_matches_complex_angle_form() {
        let params = unit(1);
        let (theta, rho) = (0.8f64, 0.45f64);
        let x = vec![theta.cos(), theta.sin()];
        // p along e_θ = (−sin θ, cos θ) with conjugate momentum ρ
        let p = vec![-rho * theta.sin(), rho * theta.cos()];
        let pt = PhasePoint::new(&params, x, p).unwrap();
        let a = complexify(&params, &pt);
        let w = Complex64::new(theta, rho);
        assert!((a.coords()[0] - w.cos()).norm() < 1e-15);
        assert!((a.coords()[1] - w.sin()).norm() < 1e-15);
        // ρ = −j₁₂ / (m ω r²)
        let j = pt.angular_momentum();
        assert!((j.j[(0, 1)] + rho).abs() < 1e-15);
    }

    #[test]
    fn sphere_example_values() {
        let params = unit(2);
        let pt = PhasePoint::new(&params, vec![1.0, 0.0, 0.0], vec![0.0, 0.7, 0.0]).unwrap();
        let a = complexify(&params, &pt);
        assert!((a.coords()[0] - Complex64::new(0.7f64.cosh(), 0.0)).norm() < 1e-15);
        assert!((a.coords()[1] - Complex64::new(0.0, 0.7f64.sinh())).norm() < 1e-15);
        let sq: Complex64 = a.coords().iter().map(|z| z * z).sum();
        assert!((sq - 1.0).norm() < 1e-14);

        let back = decomplexify(&params, &a).unwrap();
        assert!((back.x()[0] - 1.0).abs() < 1e-15 && back.x()[1].abs() < 1e-15);
        assert!((back.p()[1] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn series_first_terms() {
        let params = ModelParams::new(2, 1.5, 2.0, 0.8, 0.3).unwrap();
        let (x, p) = (vec![0.0, 0.0, 1.5], vec![0.4, -0.2, 0.0]);
        let pt = PhasePoint::new(&params, x.clone(), p.clone()).unwrap();
        let one = complexify_series(&params, &pt, 1).unwrap();
        assert!(one.coords().iter().zip(&x).all(|(z, v)| (z - v).norm() < 1e-15));
        let two = complexify_series(&params, &pt, 2).unwrap();
        for k in 0..3 {
            let expect = Complex64::new(x[k], p[k] / params.m_omega());
            assert!((two.coords()[k] - expect).norm() < 1e-14);
        }
        assert!(complexify_series(&params, &pt, 0).is_err());
    }

    #[test]
    fn series_converges_to_closed_form() {
        let params = unit(2);
        let pt = PhasePoint::new(&params, vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]).unwrap();
        let closed = complexify(&params, &pt);
        let series = complexify_series(&params, &pt, 40).unwrap();
        let err = closed.coords().iter().zip(series.coords()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-12 * closed.alpha().sqrt(), "{err}");
        // truncation bound j̃^N / N!
        for n in [5usize, 10, 20] {
            let s = complexify_series(&params, &pt, n).unwrap();
            let e = closed.coords().iter().zip(s.coords()).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            let bound = 1.0f64.powi(n as i32) / fact * 1.0f64.cosh();
            assert!(e <= bound + 1e-15, "n={n}: {e} > {bound}");
        }
    }

    #[test]
    fn admission_projects_small_residuals_and_rejects_large() {
        let params = unit(2);
        let pt = PhasePoint::new(&params, vec![1.0 + 1e-8, 0.0, 0.0], vec![1e-9, 0.5, 0.0]).unwrap();
        assert!((norm(pt.x()) - 1.0).abs() < 1e-15);
        assert!(dot(pt.x(), pt.p()).abs() < 1e-16);
        assert!(matches!(
            PhasePoint::new(&params, vec![1.1, 0.0, 0.0], vec![0.0; 3]),
            Err(Error::ConstraintViolation { .. })
        ));
        assert!(PhasePoint::new(&params, vec![1.0, 0.0, 0.0], vec![0.1, 0.5, 0.0]).is_err());
        assert!(PhasePoint::new(&params, vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn decomplexify_rejects_points_inside() {
        let params = unit(1);
        let bad = ComplexSpherePoint::new_unchecked(1.0, vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)]);
        assert!(decomplexify(&params, &bad).is_err());
        let real = ComplexSpherePoint::from_real(1.0, &[0.6, 0.8]).unwrap();
        let back = decomplexify(&params, &real).unwrap();
        assert_eq!(back.p(), &[0.0, 0.0]);
    }

    #[test]
    fn complex_angles() {
        let params = unit(2);
        let x = ComplexSpherePoint::from_real(1.0, &[0.0, 0.0, 1.0]).unwrap();
        assert!(complex_angle(&x, &x).norm() < 1e-7);
        let anti = ComplexSpherePoint::from_real(1.0, &[0.0, 0.0, -1.0]).unwrap();
        assert!((complex_angle(&x, &anti) - std::f64::consts::PI).norm() < 1e-7);
        let pt = PhasePoint::new(&params, vec![0.0, 0.0, 1.0], vec![0.9, 0.0, 0.0]).unwrap();
        let a = complexify(&params, &pt);
        let cos = a.bilinear(&x);
        assert!((cos - Complex64::new(0.9f64.cosh(), 0.0)).norm() < 1e-15);
        let th = complex_angle(&a, &x);
        assert!(th.re.abs() < 1e-12 && (th.im.abs() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn angular_momentum_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=3 {
            let params = ModelParams::new(d, 1.7, 1.0, 1.0, 0.2).unwrap();
            for _ in 0..20 {
                let (x, p) = random_dimensionless_point(&mut rng, d, 2.0);
                let pt = PhasePoint::from_dimensionless(&params, &x, &p).unwrap();
                let j = pt.angular_momentum();
                let r2 = params.r * params.r;
                let p2 = dot(pt.p(), pt.p());
                let jx = j.apply(pt.x());
                let jp = j.apply(pt.p());
                let scale = r2 * p2.sqrt() + 1e-300;
                for k in 0..=d {
                    assert!((jx[k] - r2 * pt.p()[k]).abs() <= 1e-13 * scale);
                    assert!((jp[k] + p2 * pt.x()[k]).abs() <= 1e-13 * (p2 * params.r + 1e-300));
                }
                assert!((j.j2 - r2 * p2).abs() <= 1e-13 * r2 * p2.max(1e-300));
            }
        }
    }

    #[test]
    fn position_momentum_bracket() {
        // {x_k, p_l} = δ_kl − x_k x_l on the unit sphere
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, p) = random_dimensionless_point(&mut rng, 2, 1.5);
        let c = poisson::coordinates(&x, &p);
        for k in 0..3 {
            for l in 0..3 {
                let b = poisson::bracket(
                    |c: &[f64]| Complex64::new(c[k], 0.0),
                    |c: &[f64]| poisson::p_component(c, 3, l),
                    &c,
                    3,
                    1e-3,
                );
                let expect = if k == l { 1.0 } else { 0.0 } - x[k] * x[l];
                assert!((b - expect).norm() < 1e-9, "{k}{l}: {b} vs {expect}");
            }
        }
    }

    #[test]
    fn complex_coordinates_poisson_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=3 {
            let n = d + 1;
            for _ in 0..5 {
                let (x, p) = random_dimensionless_point(&mut rng, d, 1.5);
                let c = poisson::coordinates(&x, &p);
                for k in 0..n {
                    for l in 0..n {
                        let b = poisson::bracket(
                            |c: &[f64]| poisson::a_component(c, n, k),
                            |c: &[f64]| poisson::a_component(c, n, l),
                            &c,
                            n,
                            1e-3,
                        );
                        assert!(b.norm() < 1e-6, "d={d} {{a_{k}, a_{l}}} = {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn ambient_formula_agrees_with_closed_form_on_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = unit(3);
        let (x, p) = random_dimensionless_point(&mut rng, 3, 2.0);
        let c = poisson::coordinates(&x, &p);
        let a = complexify(&params, &PhasePoint::new(&params, x, p).unwrap());
        for k in 0..4 {
            assert!((poisson::a_component(&c, 4, k) - a.coords()[k]).norm() < 1e-14);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(100))]
        #[test]
        fn round_trip_and_symmetry(seed in 0u64..u64::MAX, d in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = ModelParams::new(d, 1.3, 0.7, 1.1, 0.4).unwrap();
            let (x, p) = random_dimensionless_point(&mut rng, d, 3.0);
            let pt = PhasePoint::from_dimensionless(&params, &x, &p).unwrap();
            let a = complexify(&params, &pt);
            let sq: Complex64 = a.coords().iter().map(|z| z * z).sum();
            proptest::prop_assert!((sq - params.r * params.r).norm() <= 1e-12 * a.alpha());
            proptest::prop_assert!(a.alpha() >= params.r * params.r * (1.0 - 1e-15));
            let back = decomplexify(&params, &a).unwrap();
            for k in 0..=d {
                proptest::prop_assert!((back.x()[k] - pt.x()[k]).abs() <= 1e-12 * params.r);
                proptest::prop_assert!((back.p()[k] - pt.p()[k]).abs() <= 1e-12 * params.momentum_scale() * (1.0 + pt.momentum_norm()));
            }
            proptest::prop_assert!(conjugation_symmetry_check(&params, &pt));
            let again = complexify(&params, &back);
            for k in 0..=d {
                proptest::prop_assert!((again.coords()[k] - a.coords()[k]).norm() <= 1e-12 * a.alpha().sqrt());
            }
        }
    }
}
