//! Product quadrature on the cotangent bundle: sphere nodes × tangent directions × momentum
//! magnitudes, with the fiber weights of the resolution of the identity and of the inversion.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::nu;
use crate::special::{
    composite_gauss_legendre, gauss_chebyshev_second, gauss_legendre, pairwise_sum, unit_sphere_volume,
};
use std::f64::consts::PI;

/// Bound on the neglected radial integrand beyond `p_max`.
pub const RADIAL_TAIL: f64 = 1e-14;

/// Which fiber density multiplies the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiberWeight {
    /// `ν(2τ, 2p) β(p)`, the resolution-of-identity density.
    Resolution,
    /// `ν(τ, p) (sinh p / p)^{d−1}`, the inversion density.
    Inversion,
}

impl FiberWeight {
    pub fn swapped(self) -> Self {
        match self {
            Self::Resolution => Self::Inversion,
            Self::Inversion => Self::Resolution,
        }
    }
}

/// Radial densities in the dimensionless momentum `p = |p| / mωr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseDensity {
    pub dim: usize,
    pub tau: f64,
    /// `vol(S^{d−1})`.
    pub c_d: f64,
}

impl PhaseDensity {
    pub fn new(dim: usize, tau: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!("τ must be positive, got {tau}")));
        }
        Ok(Self { dim, tau, c_d: unit_sphere_volume(dim - 1) })
    }

    /// `β(p) = 2^d (sinh 2p / 2p)^{d−1}`.
    pub fn beta(&self, p: f64) -> f64 {
        2f64.powi(self.dim as i32) * crate::special::sinhc_real(2.0 * p).powi(self.dim as i32 - 1)
    }

    /// `ν(2τ, 2p) β(p)`.
    pub fn weight(&self, p: f64) -> Result<f64> {
        Ok(nu(self.dim, 2.0 * self.tau, 2.0 * p)? * self.beta(p))
    }

    /// `ν(τ, p) (sinh p / p)^{d−1}`.
    pub fn inversion_weight(&self, p: f64) -> Result<f64> {
        Ok(nu(self.dim, self.tau, p)? * crate::special::sinhc_real(p).powi(self.dim as i32 - 1))
    }

    pub fn density(&self, kind: FiberWeight, p: f64) -> Result<f64> {
        match kind {
            FiberWeight::Resolution => self.weight(p),
            FiberWeight::Inversion => self.inversion_weight(p),
        }
    }
}

/// Node counts of a [`QuadratureSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Largest harmonic degree of the test functions; sets `p_max`.
    pub max_degree: usize,
    /// Polynomial degree integrated exactly on the sphere and on the tangent directions.
    pub exactness: usize,
    /// Gauss–Legendre nodes per radial panel.
    pub radial_order: usize,
}

impl QuadratureOptions {
    pub fn for_degree(max_degree: usize) -> Self {
        Self { max_degree, exactness: 2 * max_degree + 2, radial_order: 16 }
    }
}

/// One sample of the phase-space grid.
#[derive(Debug, Clone)]
pub struct PhaseSample<'a> {
    pub x_index: usize,
    pub x: &'a [f64],
    /// Dimensionless momentum magnitude.
    pub p: f64,
    /// Unit tangent direction in ambient coordinates.
    pub u: &'a [f64],
    /// `a = cosh(p) x + i sinh(p) u` on the unit complex sphere.
    pub a: &'a [Complex64],
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureSpec {
    pub dim: usize,
    pub tau: f64,
    pub options: QuadratureOptions,
    /// Unit-sphere points with weights summing to `vol(S^d)`.
    pub sphere_nodes: Vec<(Vec<f64>, f64)>,
    /// `(p, w)` on `[0, p_max]`, bare Gauss–Legendre weights.
    pub momentum_radial_nodes: Vec<(f64, f64)>,
    /// Directions on the unit `S^{d−1}` in tangent-frame coordinates, weights summing to `c_d`.
    pub momentum_angular_nodes: Vec<(Vec<f64>, f64)>,
    pub p_max: f64,
    /// `w · ν(2τ, 2p) β(p) p^{d−1}` per radial node.
    resolution_weights: Vec<f64>,
    /// `w · ν(τ, p) sinh^{d−1} p` per radial node.
    inversion_weights: Vec<f64>,
}

/// Product rule on `S^dim` exact for polynomials of degree `≤ exact`.
pub(crate) fn sphere_grid(dim: usize, exact: usize) -> Vec<(Vec<f64>, f64)> {
    let n_uniform = exact + 1;
    let n_gl = exact / 2 + 1;
    match dim {
        0 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        1 => (0..n_uniform)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n_uniform as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / n_uniform as f64)
            })
            .collect(),
        2 => {
            let (ts, ws) = gauss_legendre(n_gl);
            let mut out = Vec::with_capacity(n_gl * n_uniform);
            for (t, w) in ts.iter().zip(&ws) {
                let s = (1.0 - t * t).sqrt();
                for k in 0..n_uniform {
                    let ph = 2.0 * PI * k as f64 / n_uniform as f64;
                    out.push((vec![s * ph.cos(), s * ph.sin(), *t], w * 2.0 * PI / n_uniform as f64));
                }
            }
            out
        }
        _ => {
            let (ts, ws) = gauss_chebyshev_second(n_gl);
            let inner = sphere_grid(2, exact);
            let mut out = Vec::with_capacity(ts.len() * inner.len());
            for (t, w) in ts.iter().zip(&ws) {
                let s = (1.0 - t * t).sqrt();
                for (om, wo) in &inner {
                    out.push((vec![*t, s * om[0], s * om[1], s * om[2]], w * wo));
                }
            }
            out
        }
    }
}

/// Orthonormal basis of the tangent space at the unit vector `x`.
pub fn tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()).then(i.cmp(&j)));
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for &k in &order {
        if frame.len() == n - 1 {
            break;
        }
        let mut v: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        for b in std::iter::once(x).chain(frame.iter().map(|f| f.as_slice())) {
            let dot: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
            v.iter_mut().zip(b).for_each(|(p, q)| *p -= dot * q);
        }
        let nv = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if nv > 1e-8 {
            frame.push(v.iter().map(|t| t / nv).collect());
        }
    }
    frame
}

/// Unit complex-sphere point `cosh(p) x + i sinh(p) u`.
pub fn phase_point(x: &[f64], p: f64, u: &[f64]) -> Vec<Complex64> {
    let (ch, sh) = (p.cosh(), p.sinh());
    x.iter().zip(u).map(|(xi, ui)| Complex64::new(ch * xi, sh * ui)).collect()
}

impl QuadratureSpec {
    pub fn new(dim: usize, tau: f64, options: QuadratureOptions) -> Result<Self> {
        let density = PhaseDensity::new(dim, tau)?;
        if options.radial_order < 2 {
            return Err(Error::InvalidParameter("radial_order must be at least 2".into()));
        }
        let p_max = certify_p_max(&density, options.max_degree)?;
        let width = tau.sqrt() / 2.0;
        let panels = ((p_max / width).ceil() as usize).max(2);
        let radial = composite_gauss_legendre(options.radial_order, panels, 0.0, p_max);
        let dm1 = dim as i32 - 1;
        let res_w: Vec<f64> = radial
            .par_iter()
            .map(|&(p, w)| Ok(w * nu(dim, 2.0 * tau, 2.0 * p)? * 2.0 * (2.0 * p).sinh().powi(dm1)))
            .collect::<Result<_>>()?;
        let inv_w: Vec<f64> = radial
            .par_iter()
            .map(|&(p, w)| Ok(w * nu(dim, tau, p)? * p.sinh().powi(dm1)))
            .collect::<Result<_>>()?;
        let angular = if dim == 1 {
            vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]
        } else {
            sphere_grid(dim - 1, options.exactness)
        };
        Ok(Self {
            dim,
            tau,
            options,
            sphere_nodes: sphere_grid(dim, options.exactness),
            momentum_radial_nodes: radial,
            momentum_angular_nodes: angular,
            p_max,
            resolution_weights: res_w,
            inversion_weights: inv_w,
        })
    }

    /// Default node counts for test functions of degree at most `max_degree`.
    pub fn for_degree(dim: usize, tau: f64, max_degree: usize) -> Result<Self> {
        Self::new(dim, tau, QuadratureOptions::for_degree(max_degree))
    }

    pub fn density(&self) -> PhaseDensity {
        PhaseDensity { dim: self.dim, tau: self.tau, c_d: unit_sphere_volume(self.dim - 1) }
    }

    pub fn node_count(&self) -> usize {
        self.sphere_nodes.len() * self.momentum_angular_nodes.len() * self.momentum_radial_nodes.len()
    }

    /// Radial weights including the fiber density and the Jacobian `p^{d−1}`.
    pub fn fiber_weights(&self, kind: FiberWeight) -> &[f64] {
        match kind {
            FiberWeight::Resolution => &self.resolution_weights,
            FiberWeight::Inversion => &self.inversion_weights,
        }
    }

    /// Tangent directions at `x` in ambient coordinates, with weights.
    pub fn directions_at(&self, x: &[f64]) -> Vec<(Vec<f64>, f64)> {
        let frame = tangent_frame(x);
        self.momentum_angular_nodes
            .iter()
            .map(|(c, w)| {
                let u = (0..x.len()).map(|i| c.iter().zip(&frame).map(|(ck, f)| ck * f[i]).sum()).collect();
                (u, *w)
            })
            .collect()
    }

    /// `Σ_fiber weight · f` over the fiber at `x`; `f` adds `weight × value` into `acc`.
    pub fn integrate_fiber<F>(&self, x_index: usize, x: &[f64], kind: FiberWeight, len: usize, f: &F) -> Result<Vec<Complex64>>
    where
        F: Fn(&PhaseSample, f64, &mut [Complex64]) -> Result<()>,
    {
        let weights = self.fiber_weights(kind);
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        for (u, wu) in self.directions_at(x) {
            for (&(p, _), &wp) in self.momentum_radial_nodes.iter().zip(weights) {
                let a = phase_point(x, p, &u);
                let sample = PhaseSample { x_index, x, p, u: &u, a: &a };
                f(&sample, wu * wp, &mut acc)?;
            }
        }
        Ok(acc)
    }

    /// `∫∫ f dμ` over the whole grid. Fibers are evaluated in parallel and combined by
    /// pairwise summation in node order, so the result does not depend on the thread count.
    pub fn integrate<F>(&self, kind: FiberWeight, len: usize, f: F) -> Result<Vec<Complex64>>
    where
        F: Fn(&PhaseSample, f64, &mut [Complex64]) -> Result<()> + Sync,
    {
        let partial: Vec<Vec<Complex64>> = self
            .sphere_nodes
            .par_iter()
            .enumerate()
            .map(|(i, (x, wx))| {
                let mut v = self.integrate_fiber(i, x, kind, len, &f)?;
                v.iter_mut().for_each(|z| *z *= wx);
                Ok(v)
            })
            .collect::<Result<_>>()?;
        Ok((0..len)
            .map(|k| pairwise_sum(&partial.iter().map(|v| v[k]).collect::<Vec<_>>()))
            .collect())
    }

    /// `∫ g dx` over the sphere nodes.
    pub fn integrate_sphere<F>(&self, g: F) -> Result<Complex64>
    where
        F: Fn(&[f64]) -> Result<Complex64> + Sync,
    {
        let vals: Vec<Complex64> =
            self.sphere_nodes.par_iter().map(|(x, w)| Ok(g(x)? * *w)).collect::<Result<_>>()?;
        Ok(pairwise_sum(&vals))
    }
}

/// Smallest `p` past both peaks with `ν(2τ, 2p) β(p) p^{d−1} e^{2Lp}` and
/// `ν(τ, p) sinh^{d−1}p e^{Lp}` (times `e^{p²/2τ}` headroom for kernel factors) below
/// [`RADIAL_TAIL`].
fn certify_p_max(density: &PhaseDensity, max_degree: usize) -> Result<f64> {
    let (dim, tau) = (density.dim, density.tau);
    let l = max_degree as f64 + 1.0;
    let log_tail = RADIAL_TAIL.ln();
    let env = |s: f64, r: f64| -> Result<f64> { Ok(nu(dim, s, r)?.max(f64::MIN_POSITIVE).ln()) };
    let step = (tau.sqrt() / 8.0).min(0.05);
    let mut p = 0.0f64;
    let mut prev = f64::INFINITY;
    loop {
        p += step;
        let dm1 = dim as f64 - 1.0;
        let res = env(2.0 * tau, 2.0 * p)? + (density.beta(p)).ln() + dm1 * p.max(1e-300).ln() + 2.0 * l * p;
        let inv = env(tau, p)? + dm1 * p.sinh().max(1e-300).ln() + l * p;
        // kernel factors such as conj ρ_τ(b, x′) grow like e^{p²/2τ}
        let ker = env(2.0 * tau, 2.0 * p)? + (density.beta(p)).ln() + dm1 * p.max(1e-300).ln() + l * p + p * p / (2.0 * tau);
        let worst = res.max(inv).max(ker);
        if worst < log_tail && worst < prev {
            return Ok(p);
        }
        prev = worst;
        if p > 200.0 {
            return Err(Error::CutoffInsufficient(format!(
                "no momentum cutoff below 200 certifies a tail of {RADIAL_TAIL:e}"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::unit_sphere_volume;

    #[test]
    fn sphere_weights_sum_to_volume() {
        for d in 1..=3 {
            let q = QuadratureSpec::for_degree(d, 0.5, 2).unwrap();
            let total: f64 = q.sphere_nodes.iter().map(|(_, w)| w).sum();
            assert!((total - unit_sphere_volume(d)).abs() < 1e-12, "d={d}");
            let ang: f64 = q.momentum_angular_nodes.iter().map(|(_, w)| w).sum();
            assert!((ang - unit_sphere_volume(d - 1)).abs() < 1e-12);
            for (x, w) in &q.sphere_nodes {
                assert!(*w > 0.0);
                assert!((x.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fiber_masses_are_one() {
        for d in 1..=3 {
            let q = QuadratureSpec::for_degree(d, 0.5, 3).unwrap();
            let x = &q.sphere_nodes[0].0.clone();
            for kind in [FiberWeight::Resolution, FiberWeight::Inversion] {
                let m = q.integrate_fiber(0, x, kind, 1, &|_, w, acc: &mut [Complex64]| {
                    acc[0] += w;
                    Ok(())
                })
                .unwrap();
                assert!((m[0].re - 1.0).abs() < 1e-10, "d={d} {kind:?}: {}", m[0].re);
            }
        }
    }

    #[test]
    fn density_values() {
        let d = PhaseDensity::new(2, 0.5).unwrap();
        assert_eq!(d.beta(0.0), 4.0);
        assert!(d.weight(0.3).unwrap() > 0.0);
        assert!((d.c_d - 2.0 * PI).abs() < 1e-15);
        assert!(PhaseDensity::new(4, 0.5).is_err());
    }

    #[test]
    fn frames_are_orthonormal() {
        for x in [vec![1.0, 0.0, 0.0], vec![0.6, 0.0, 0.8], vec![0.5, 0.5, 0.5, 0.5]] {
            let f = tangent_frame(&x);
            assert_eq!(f.len(), x.len() - 1);
            for (i, u) in f.iter().enumerate() {
                assert!(u.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-15);
                for (j, v) in f.iter().enumerate() {
                    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                    assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn p_max_certificate() {
        let q = QuadratureSpec::for_degree(1, 0.5, 8).unwrap();
        let d = q.density();
        let l = 8.0;
        let v = d.weight(q.p_max).unwrap() * (2.0 * l * q.p_max).exp();
        assert!(v < RADIAL_TAIL, "{v}");
    }
}
