//! Segal–Bargmann transform `Cf(a) = ∫ ρ_τ(a, x) f(x) dx`, its inverse along momentum fibers,
//! the resolution of the identity, the Husimi density and the invariance identities of the
//! phase-space measure.
//!
//! All points here are on the unit sphere and momenta are dimensionless.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisLabel, BasisSpec};
use crate::error::{Error, Result};
use crate::harmonics::{fourier_mode, ylm};
use crate::kernels::rho;
use crate::quadrature::{FiberWeight, PhaseDensity, PhaseSample, QuadratureSpec, phase_point};
use crate::special::{gegenbauer_eval, sphere_eigenvalue, zonal_at_one, zonal_weight};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A position wavefunction given in a form whose transform is known in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StateSource {
    /// A single Fourier mode (`d = 1`) or spherical harmonic (`d = 2`).
    Basis { dim: usize, label: BasisLabel },
    /// Finite expansion in a basis.
    Coefficients { spec: BasisSpec, values: Vec<Complex64> },
    /// Unit-norm zonal harmonic `N G_l(x · axis)`; any dimension.
    Zonal { degree: usize, axis: Vec<f64> },
    /// `δ_x`, whose transform is `ρ_τ(a, x)`.
    PointMass { x: Vec<f64> },
    Sum(Vec<(Complex64, StateSource)>),
}

fn bilinear(a: &[Complex64], x: &[f64]) -> Complex64 {
    a.iter().zip(x).map(|(u, v)| u * v).sum()
}

fn label_value(dim: usize, label: BasisLabel, a: &[Complex64]) -> Result<Complex64> {
    match (dim, label) {
        (1, BasisLabel::Fourier(n)) => Ok(fourier_mode(n, a)),
        (2, BasisLabel::Harmonic { l, m }) if m.unsigned_abs() as usize <= l => Ok(ylm(l, m, a)),
        _ => Err(Error::InvalidParameter(format!("basis label {label:?} is not valid for d = {dim}"))),
    }
}

fn label_eigenvalue(dim: usize, label: BasisLabel) -> f64 {
    match label {
        BasisLabel::Fourier(n) => (n * n) as f64,
        BasisLabel::Harmonic { l, .. } => sphere_eigenvalue(dim, l),
    }
}

fn unit_axis(axis: &[f64]) -> Result<Vec<f64>> {
    let n = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(Error::InvalidParameter("zonal axis must be nonzero".into()));
    }
    Ok(axis.iter().map(|v| v / n).collect())
}

impl StateSource {
    pub fn dim(&self) -> usize {
        match self {
            Self::Basis { dim, .. } => *dim,
            Self::Coefficients { spec, .. } => spec.dim,
            Self::Zonal { axis, .. } => axis.len().saturating_sub(1),
            Self::PointMass { x } => x.len().saturating_sub(1),
            Self::Sum(terms) => terms.first().map_or(0, |(_, s)| s.dim()),
        }
    }

    /// Largest harmonic degree present, `None` for point masses.
    pub fn max_degree(&self) -> Option<usize> {
        match self {
            Self::Basis { label: BasisLabel::Fourier(n), .. } => Some(n.unsigned_abs() as usize),
            Self::Basis { label: BasisLabel::Harmonic { l, .. }, .. } => Some(*l),
            Self::Coefficients { spec, .. } => Some(spec.cutoff),
            Self::Zonal { degree, .. } => Some(*degree),
            Self::PointMass { .. } => None,
            Self::Sum(terms) => terms.iter().map(|(_, s)| s.max_degree()).try_fold(0, |acc, d| d.map(|d| acc.max(d))),
        }
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.dim() + 1 {
            return Err(Error::DimensionMismatch { expected: self.dim() + 1, got: len });
        }
        Ok(())
    }

    /// `f(x)` at a unit vector.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        self.check_point(x.len())?;
        let a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        match self {
            Self::PointMass { .. } => Err(Error::InvalidParameter("a point mass has no pointwise values".into())),
            Self::Sum(terms) => terms.iter().map(|(c, s)| Ok(c * s.eval(x)?)).sum(),
            _ => self.transform_with(0.0, &a),
        }
    }

    /// `Cf(a)` at a unit complex-sphere point.
    pub fn transform_at(&self, tau: f64, a: &[Complex64]) -> Result<Complex64> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("τ must be positive, got {tau}")));
        }
        self.transform_with(tau, a)
    }

    fn transform_with(&self, tau: f64, a: &[Complex64]) -> Result<Complex64> {
        self.check_point(a.len())?;
        let dim = self.dim();
        match self {
            Self::Basis { label, .. } => {
                Ok((-tau * label_eigenvalue(dim, *label) / 2.0).exp() * label_value(dim, *label, a)?)
            }
            Self::Coefficients { spec, values } => {
                if values.len() != spec.size() {
                    return Err(Error::DimensionMismatch { expected: spec.size(), got: values.len() });
                }
                let b = spec.eval_all(a);
                Ok(values
                    .iter()
                    .zip(&b)
                    .enumerate()
                    .map(|(i, (c, v))| c * v * (-tau * spec.eigenvalue(i) / 2.0).exp())
                    .sum())
            }
            Self::Zonal { degree, axis } => {
                let axis = unit_axis(axis)?;
                let norm = (zonal_weight(dim, *degree) / zonal_at_one(dim, *degree)).sqrt();
                Ok((-tau * sphere_eigenvalue(dim, *degree) / 2.0).exp()
                    * norm
                    * gegenbauer_eval(dim, *degree, bilinear(a, &axis)))
            }
            Self::PointMass { x } => {
                let x = unit_axis(x)?;
                rho(dim, tau, bilinear(a, &x).acos())
            }
            Self::Sum(terms) => terms.iter().map(|(c, s)| Ok(c * s.transform_with(tau, a)?)).sum(),
        }
    }

    /// `‖f‖²`, exact for single terms and by sphere quadrature for sums.
    pub fn norm_squared(&self, quad: &QuadratureSpec) -> Result<f64> {
        match self {
            Self::Basis { .. } | Self::Zonal { .. } => Ok(1.0),
            Self::Coefficients { values, .. } => Ok(values.iter().map(|c| c.norm_sqr()).sum()),
            Self::PointMass { .. } => Err(Error::InvalidParameter("a point mass is not square integrable".into())),
            Self::Sum(_) => Ok(quad.integrate_sphere(|x| Ok(Complex64::new(self.eval(x)?.norm_sqr(), 0.0)))?.re),
        }
    }

    /// Random unit-norm combination of degrees `≤ max_degree`: basis coefficients for
    /// `d ≤ 2`, zonal harmonics about random axes for `d = 3`.
    pub fn random(dim: usize, max_degree: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match dim {
            1 | 2 => {
                let spec = BasisSpec::new(dim, max_degree.max(2), 0)?;
                let mut values: Vec<Complex64> = (0..spec.size())
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let n = values.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                values.iter_mut().for_each(|c| *c /= n);
                Ok(Self::Coefficients { spec, values })
            }
            3 => {
                let terms = (0..=max_degree)
                    .map(|l| {
                        let axis: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                        (c, Self::Zonal { degree: l, axis })
                    })
                    .collect::<Vec<_>>();
                // distinct degrees are orthogonal and each zonal term has unit norm
                let n = terms.iter().map(|(c, _)| c.norm_sqr()).sum::<f64>().sqrt();
                Ok(Self::Sum(terms.into_iter().map(|(c, s)| (c / n, s)).collect()))
            }
            _ => Err(Error::UnsupportedDimension(dim)),
        }
    }
}

/// `Cf` on a grid of unit complex-sphere points, in closed form.
pub fn sb_transform(f: &StateSource, tau: f64, grid: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
    grid.par_iter().map(|a| f.transform_at(tau, a)).collect()
}

/// `Cf(a) = ∫ ρ_τ(a, x) f(x) dx` by quadrature over the sphere nodes.
pub fn sb_transform_integral<F>(f: F, tau: f64, a: &[Complex64], quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    if a.len() != quad.dim + 1 {
        return Err(Error::DimensionMismatch { expected: quad.dim + 1, got: a.len() });
    }
    quad.integrate_sphere(|x| Ok(rho(quad.dim, tau, bilinear(a, x).acos())? * f(x)?))
}

/// `f(x) = ∫ F(a(x, p)) ν(τ, p) (sinh p / p)^{d−1} dp` over the fiber at `x`.
pub fn sb_inverse<F>(big_f: F, x: &[f64], quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Result<Complex64>,
{
    sb_inverse_with(big_f, x, quad, FiberWeight::Inversion)
}

/// [`sb_inverse`] with a chosen fiber density; the resolution density is the negative control.
pub fn sb_inverse_with<F>(big_f: F, x: &[f64], quad: &QuadratureSpec, weight: FiberWeight) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Result<Complex64>,
{
    if x.len() != quad.dim + 1 {
        return Err(Error::DimensionMismatch { expected: quad.dim + 1, got: x.len() });
    }
    let v = quad.integrate_fiber(0, x, weight, 1, &|s: &PhaseSample, w, acc: &mut [Complex64]| {
        acc[0] += w * big_f(s.a)?;
        Ok(())
    })?;
    Ok(v[0])
}

/// Relative L² error of `C⁻¹Cf` against `f` over the sphere nodes.
pub fn round_trip_error(f: &StateSource, quad: &QuadratureSpec, weight: FiberWeight) -> Result<f64> {
    if f.dim() != quad.dim {
        return Err(Error::DimensionMismatch { expected: quad.dim, got: f.dim() });
    }
    let tau = quad.tau;
    let parts: Vec<(f64, f64)> = quad
        .sphere_nodes
        .par_iter()
        .map(|(x, w)| {
            let back = sb_inverse_with(|a| f.transform_at(tau, a), x, quad, weight)?;
            let orig = f.eval(x)?;
            Ok((w * (back - orig).norm_sqr(), w * orig.norm_sqr()))
        })
        .collect::<Result<_>>()?;
    let err: f64 = crate::special::pairwise_sum_real(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let norm: f64 = crate::special::pairwise_sum_real(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok((err / norm).sqrt())
}

/// `M_ij = ∫∫ ⟨e_i|ψ_a⟩⟨ψ_a|e_j⟩ dμ(a)` over the grid, with the chosen fiber density.
pub fn resolve_identity_matrix(basis: &BasisSpec, quad: &QuadratureSpec, weight: FiberWeight) -> Result<DMatrix<Complex64>> {
    if basis.dim != quad.dim {
        return Err(Error::DimensionMismatch { expected: basis.dim, got: quad.dim });
    }
    if basis.cutoff > quad.options.max_degree {
        return Err(Error::CutoffInsufficient(format!(
            "basis degree {} exceeds the quadrature's certified degree {}",
            basis.cutoff, quad.options.max_degree
        )));
    }
    let n = basis.size();
    let tau = quad.tau;
    let damp: Vec<f64> = (0..n).map(|i| (-tau * basis.eigenvalue(i) / 2.0).exp()).collect();
    let flat = quad.integrate(weight, n * n, |s, w, acc| {
        let conj_a: Vec<Complex64> = s.a.iter().map(|z| z.conj()).collect();
        let c: Vec<Complex64> = basis.eval_all(&conj_a).iter().zip(&damp).map(|(v, d)| v.conj() * *d).collect();
        for i in 0..n {
            let ci = c[i] * w;
            for j in 0..n {
                acc[i * n + j] += ci * c[j].conj();
            }
        }
        Ok(())
    })?;
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

/// Largest entry of `M − I`.
pub fn identity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    (m - DMatrix::<Complex64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `∫_ℝ e^{2np} ν₁(2τ, 2p) 2 dp` by the radial rule of `quad`, next to `e^{τn²}`.
pub fn moment_identity_d1(n: i64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    if quad.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: quad.dim });
    }
    let nf = n as f64;
    let w = quad.fiber_weights(FiberWeight::Resolution);
    let terms: Vec<f64> =
        quad.momentum_radial_nodes.iter().zip(w).map(|(&(p, _), wp)| wp * 2.0 * (2.0 * nf * p).cosh()).collect();
    Ok((crate::special::pairwise_sum_real(&terms), (quad.tau * nf * nf).exp()))
}

/// Gram matrices `∫∫ conj(Cf_i) Cf_j dμ` and `∫ conj(f_i) f_j dx` of a family of states.
pub fn isometry_gram(
    fs: &[StateSource],
    quad: &QuadratureSpec,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = fs.len();
    if let Some(f) = fs.iter().find(|f| f.dim() != quad.dim) {
        return Err(Error::DimensionMismatch { expected: quad.dim, got: f.dim() });
    }
    let tau = quad.tau;
    let phase = quad.integrate(FiberWeight::Resolution, n * n, |s, w, acc| {
        let v: Vec<Complex64> = fs.iter().map(|f| f.transform_at(tau, s.a)).collect::<Result<_>>()?;
        for i in 0..n {
            for j in 0..n {
                acc[i * n + j] += w * v[i].conj() * v[j];
            }
        }
        Ok(())
    })?;
    let mut position = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            position[(i, j)] = quad.integrate_sphere(|x| Ok(fs[i].eval(x)?.conj() * fs[j].eval(x)?))?;
        }
    }
    Ok((DMatrix::from_row_slice(n, n, &phase), position))
}

/// `∫∫ R_τ(a, b) F(b) dμ(b)`, which reproduces `F(a)` for `F` in the transform's range.
pub fn reproducing_identity_check<F>(big_f: F, a: &[Complex64], quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync,
{
    if a.len() != quad.dim + 1 {
        return Err(Error::DimensionMismatch { expected: quad.dim + 1, got: a.len() });
    }
    let tau = quad.tau;
    let v = quad.integrate(FiberWeight::Resolution, 1, |s, w, acc| {
        let cos: Complex64 = a.iter().zip(s.a).map(|(u, v)| u * v.conj()).sum();
        acc[0] += w * rho(quad.dim, 2.0 * tau, cos.acos())? * big_f(s.a)?;
        Ok(())
    })?;
    Ok(v[0])
}

/// `f(x′) = ∫∫ conj(ρ_τ(b, x′)) F(b) dμ(b)`: the adjoint of `C`, which projects a general
/// phase-space function onto the range before inverting.
pub fn adjoint_inverse<F>(big_f: F, x_out: &[f64], quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(&PhaseSample) -> Result<Complex64> + Sync,
{
    if x_out.len() != quad.dim + 1 {
        return Err(Error::DimensionMismatch { expected: quad.dim + 1, got: x_out.len() });
    }
    let tau = quad.tau;
    let v = quad.integrate(FiberWeight::Resolution, 1, |s, w, acc| {
        let k = rho(quad.dim, tau, bilinear(s.a, x_out).acos())?;
        acc[0] += w * k.conj() * big_f(s)?;
        Ok(())
    })?;
    Ok(v[0])
}

/// Husimi density `|Cf(a(x, p))|² ν(2τ, 2p) β(p) / ‖f‖²` at phase points `(x, p)`, `p` tangent.
pub fn husimi_density(
    f: &StateSource,
    quad: &QuadratureSpec,
    points: &[(Vec<f64>, Vec<f64>)],
) -> Result<Vec<f64>> {
    let density = PhaseDensity::new(quad.dim, quad.tau)?;
    let norm = f.norm_squared(quad)?;
    points
        .par_iter()
        .map(|(x, p)| {
            let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = if pn > 0.0 { p.iter().map(|v| v / pn).collect() } else { vec![0.0; p.len()] };
            let a = phase_point(x, pn, &u);
            Ok(f.transform_at(quad.tau, &a)?.norm_sqr() * density.weight(pn)? / norm)
        })
        .collect()
}

/// `∫∫` of the Husimi density over the grid.
pub fn husimi_mass(f: &StateSource, quad: &QuadratureSpec) -> Result<f64> {
    let norm = f.norm_squared(quad)?;
    let tau = quad.tau;
    let v = quad.integrate(FiberWeight::Resolution, 1, |s, w, acc| {
        acc[0] += w * f.transform_at(tau, s.a)?.norm_sqr();
        Ok(())
    })?;
    Ok(v[0].re / norm)
}

/// One phase-space node with its Liouville weight `w_x w_u w_p p^{d−1}` and Husimi density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HusimiNode {
    pub x: Vec<f64>,
    pub p: f64,
    pub u: Vec<f64>,
    pub weight: f64,
    pub density: f64,
}

/// Husimi density on every node of the grid, in node order; `Σ weight · density` is the mass.
pub fn husimi_on_grid(f: &StateSource, quad: &QuadratureSpec) -> Result<Vec<HusimiNode>> {
    let density = PhaseDensity::new(quad.dim, quad.tau)?;
    let norm = f.norm_squared(quad)?;
    let dm1 = quad.dim as i32 - 1;
    let radial: Vec<(f64, f64, f64)> = quad
        .momentum_radial_nodes
        .iter()
        .map(|&(p, wp)| Ok((p, wp, density.weight(p)?)))
        .collect::<Result<_>>()?;
    let per_x: Vec<Vec<HusimiNode>> = quad
        .sphere_nodes
        .par_iter()
        .map(|(x, wx)| {
            let mut out = Vec::new();
            for (u, wu) in quad.directions_at(x) {
                for &(p, wp, dens) in &radial {
                    let a = phase_point(x, p, &u);
                    let h = f.transform_at(quad.tau, &a)?.norm_sqr() * dens / norm;
                    out.push(HusimiNode { x: x.clone(), p, u: u.clone(), weight: wx * wu * wp * p.powi(dm1), density: h });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_x.into_iter().flatten().collect())
}

/// Orthogonal matrix of size `n` with determinant one, from a seeded generator.
pub fn random_rotation(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for r in &rows {
            let dot: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= dot * b);
        }
        let nv = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if nv > 1e-3 {
            rows.push(v.iter().map(|t| t / nv).collect());
        }
    }
    let det = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant();
    if det < 0.0 {
        rows[0].iter_mut().for_each(|t| *t = -*t);
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialLaplacianRow {
    pub radius: f64,
    /// `Σ_{k<l} V_kl² G` at `|a|² = cosh R`.
    pub operator: f64,
    /// `−[φ″ + (d−1) coth(R) φ′]`.
    pub expected: f64,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// Largest relative change of `∫ g dμ` under the sampled rotations.
    pub rotation: f64,
    pub radial_laplacian: Vec<RadialLaplacianRow>,
    /// Largest `|Σ_{k<l}(a_k ā_l − a_l ā_k)² − (1 − |a|⁴)| / |a|⁴` over the samples.
    pub sum_rule: f64,
}

/// Relative change of `∫∫ |v·a|² |w·a|² dμ` when the grid is rotated.
pub fn rotation_invariance_residual(quad: &QuadratureSpec, rotations: &[Vec<Vec<f64>>]) -> Result<f64> {
    let n = quad.dim + 1;
    let v: Vec<f64> = (0..n).map(|k| 1.0 + 0.5 * k as f64).collect();
    let w: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -0.7 }).collect();
    let g = |a: &[Complex64]| bilinear(a, &v).norm_sqr() * bilinear(a, &w).norm_sqr();
    let integral = |rot: Option<&Vec<Vec<f64>>>| -> Result<f64> {
        let val = quad.integrate(FiberWeight::Resolution, 1, |s, wt, acc| {
            let moved: Vec<Complex64> = match rot {
                Some(r) => (0..n).map(|i| (0..n).map(|k| r[i][k] * s.a[k]).sum()).collect(),
                None => s.a.to_vec(),
            };
            acc[0] += wt * g(&moved);
            Ok(())
        })?;
        Ok(val[0].re)
    };
    let base = integral(None)?;
    let mut worst = 0.0f64;
    for r in rotations {
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        worst = worst.max((integral(Some(r))? - base).abs() / base.abs());
    }
    Ok(worst)
}

/// Complex rotation `R_kl(z)` applied to `a`.
fn rotate_plane(a: &[Complex64], k: usize, l: usize, z: Complex64) -> Vec<Complex64> {
    let (c, s) = (z.cos(), z.sin());
    let mut b = a.to_vec();
    b[k] = c * a[k] - s * a[l];
    b[l] = s * a[k] + c * a[l];
    b
}

/// `Σ_{k<l} V_kl² G` for `G = φ(arccosh |a|²)` with `φ(R) = e^{−R²/σ}`, compared with
/// `−[φ″ + (d−1) coth(R) φ′]`. `V_kl² G = ∂_z² G(R_kl(z) a)` at `z = 0`, with
/// `∂_z² = (∂_ss − 2i∂_st − ∂_tt)/4`, by central differences and one Richardson step.
pub fn radial_laplacian_check(dim: usize, radii: &[f64], sigma: f64) -> Result<Vec<RadialLaplacianRow>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let phi = |r: f64| (-r * r / sigma).exp();
    let n = dim + 1;
    radii
        .iter()
        .map(|&radius| {
            if !(radius > 0.0) {
                return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
            }
            let p = radius / 2.0;
            let x: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
            let u: Vec<f64> = (0..n).map(|i| if i == 1 { 1.0 } else { 0.0 }).collect();
            // move off the coordinate axes so that every plane contributes
            let rot = random_rotation(n, 7);
            let a0 = phase_point(&x, p, &u);
            let a: Vec<Complex64> = (0..n).map(|i| (0..n).map(|k| rot[i][k] * a0[k]).sum()).collect();
            let g = |b: &[Complex64]| phi(b.iter().map(|z| z.norm_sqr()).sum::<f64>().acosh());
            let d2 = |k: usize, l: usize, h: f64| -> Complex64 {
                let f = |s: f64, t: f64| g(&rotate_plane(&a, k, l, Complex64::new(s, t)));
                let f0 = f(0.0, 0.0);
                let fss = (f(h, 0.0) - 2.0 * f0 + f(-h, 0.0)) / (h * h);
                let ftt = (f(0.0, h) - 2.0 * f0 + f(0.0, -h)) / (h * h);
                let fst = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                Complex64::new(fss - ftt, -2.0 * fst) / 4.0
            };
            let h = 1e-2;
            let mut total = ZERO;
            for k in 0..n {
                for l in (k + 1)..n {
                    total += (4.0 * d2(k, l, h / 2.0) - d2(k, l, h)) / 3.0;
                }
            }
            let d1 = -2.0 * radius / sigma * phi(radius);
            let d2r = (4.0 * radius * radius / (sigma * sigma) - 2.0 / sigma) * phi(radius);
            let expected = -(d2r + (dim as f64 - 1.0) / radius.tanh() * d1);
            let residual = (total - expected).norm() / expected.abs().max(phi(radius));
            Ok(RadialLaplacianRow { radius, operator: total.re, expected, relative_residual: residual })
        })
        .collect()
}

/// `Σ_{k<l}(a_k ā_l − a_l ā_k)² = 1 − |a|⁴` on the unit complex sphere.
pub fn sum_rule_residual(a: &[Complex64]) -> f64 {
    let n = a.len();
    let mut lhs = ZERO;
    for k in 0..n {
        for l in (k + 1)..n {
            let t = a[k] * a[l].conj() - a[l] * a[k].conj();
            lhs += t * t;
        }
    }
    let alpha: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    (lhs - (1.0 - alpha * alpha)).norm() / (alpha * alpha)
}

/// Rotation invariance of the measure, the radial identity at five radii and the sum rule.
pub fn invariance_measure_check(quad: &QuadratureSpec, rotations: &[Vec<Vec<f64>>]) -> Result<InvarianceReport> {
    let rotation = rotation_invariance_residual(quad, rotations)?;
    let radial_laplacian = radial_laplacian_check(quad.dim, &[0.3, 0.7, 1.2, 1.8, 2.5], 1.5)?;
    let mut sum_rule = 0.0f64;
    for (i, (x, _)) in quad.sphere_nodes.iter().enumerate().take(20) {
        let u = &quad.directions_at(x)[0].0;
        let a = phase_point(x, 0.2 + 0.15 * i as f64, u);
        sum_rule = sum_rule.max(sum_rule_residual(&a));
    }
    Ok(InvarianceReport { rotation, radial_laplacian, sum_rule })
}
