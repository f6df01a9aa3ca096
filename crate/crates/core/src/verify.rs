//! Invariant suites: each check reports a residual against a tolerance.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bargmann::{
    StateSource, adjoint_inverse, husimi_density, husimi_mass, identity_deviation, invariance_measure_check,
    isometry_gram, moment_identity_d1, random_rotation, reproducing_identity_check, resolve_identity_matrix,
    round_trip_error,
};
use crate::basis::{
    ANNIHILATION_IDENTITIES, BasisLabel, BasisSpec, annihilation_check, build_basis, casimir_residual,
    constraint_residual, euclidean_algebra_check, lx_casimir_check_d2,
};
use crate::coherent::{CoherentState, certified_cutoff, relative_eigen_residual};
use crate::error::{Error, Result};
use crate::flat::{FlatParams, flat_inverse, flat_resolution_check, hermite_functions, hermite_transform, small_tau_limit_check};
use crate::kernels::{
    KernelEvalRequest, KernelMethod, evaluate_rho, nu_recursion_check, rho_mass, rho_recursion_check, semigroup_check,
};
use crate::model::{ModelParams, PhasePoint, complexify, complexify_series, conjugation_residual};
use crate::quadrature::{FiberWeight, QuadratureOptions, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Complexifier,
    Kernels,
    Operators,
    Coherent,
    Resolution,
    Transform,
    Flat,
    Husimi,
    Invariance,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Complexifier,
        Suite::Kernels,
        Suite::Operators,
        Suite::Coherent,
        Suite::Resolution,
        Suite::Transform,
        Suite::Flat,
        Suite::Husimi,
        Suite::Invariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Complexifier => "complexifier",
            Suite::Kernels => "kernels",
            Suite::Operators => "operators",
            Suite::Coherent => "coherent",
            Suite::Resolution => "resolution",
            Suite::Transform => "transform",
            Suite::Flat => "flat",
            Suite::Husimi => "husimi",
            Suite::Invariance => "invariance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Negative controls pass when the residual exceeds the tolerance.
    pub negative_control: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub dims: Vec<usize>,
    /// Replaces each suite's default times when set.
    pub tau: Option<f64>,
    pub negative_controls: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { dims: vec![1, 2, 3], tau: None, negative_controls: false, seed: 2024 }
    }
}

impl VerifyOptions {
    fn taus(&self, defaults: &[f64]) -> Vec<f64> {
        self.tau.map_or_else(|| defaults.to_vec(), |t| vec![t])
    }

    fn has(&self, d: usize) -> bool {
        self.dims.contains(&d)
    }
}

struct Collector {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Collector {
    fn le(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        let pass = residual.is_finite() && residual <= tolerance;
        self.checks.push(Check { suite: self.suite, name: name.into(), residual, tolerance, negative_control: false, pass });
    }

    fn gt(&mut self, name: impl Into<String>, residual: f64, threshold: f64) {
        let pass = residual.is_finite() && residual > threshold;
        self.checks.push(Check { suite: self.suite, name: name.into(), residual, tolerance: threshold, negative_control: true, pass });
    }
}

/// Uniform random unit vector in `ℝ^n`.
pub fn random_unit(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.iter().map(|t| t / norm).collect();
        }
    }
}

/// Random `(x, p)` with `|x| = 1`, `x · p = 0` and `|p| ≤ p_max`.
pub fn random_phase_point(rng: &mut impl Rng, dim: usize, p_max: f64) -> (Vec<f64>, Vec<f64>) {
    let x = random_unit(rng, dim + 1);
    let v = random_unit(rng, dim + 1);
    let c: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
    let mut u: Vec<f64> = v.iter().zip(&x).map(|(a, b)| a - c * b).collect();
    let un = u.iter().map(|t| t * t).sum::<f64>().sqrt();
    let len = rng.random_range(0.0..p_max);
    u.iter_mut().for_each(|t| *t *= len / un);
    (x, u)
}

fn dims_in(opts: &VerifyOptions, allowed: &[usize]) -> Vec<usize> {
    allowed.iter().copied().filter(|d| opts.has(*d)).collect()
}

fn complexifier(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for d in dims_in(opts, &[1, 2, 3]) {
        let params = ModelParams::new(d, 1.7, 0.8, 1.3, 0.4)?;
        let (mut constraint, mut series, mut conj) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..200 {
            let (x, p) = random_phase_point(&mut rng, d, 2.0);
            let pt = PhasePoint::from_dimensionless(&params, &x, &p)?;
            let a = complexify(&params, &pt);
            let r2 = params.r * params.r;
            let sum: Complex64 = a.coords().iter().map(|z| z * z).sum();
            constraint = constraint.max((sum - r2).norm() / r2);
            let s = complexify_series(&params, &pt, 40)?;
            let dev = a.coords().iter().zip(s.coords()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
            series = series.max(dev / a.alpha().sqrt());
            conj = conj.max(conjugation_residual(&params, &pt));
        }
        c.le(format!("sum a_k^2 = r^2, d={d}"), constraint, 1e-12);
        c.le(format!("series(40) vs closed form, d={d}"), series, 1e-12);
        c.le(format!("conjugation symmetry, d={d}"), conj, 1e-14);
    }
    Ok(())
}

fn kernels(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let taus = opts.taus(&[0.1, 0.5, 2.0]);
    for d in dims_in(opts, &[1, 2, 3]) {
        let mut worst = 0.0f64;
        for &tau in &taus {
            let mut angles: Vec<Complex64> = Vec::with_capacity(70);
            for k in 0..70 {
                let im = if k < 50 { 0.0 } else { rng.random_range(-1.0..1.0) };
                angles.push(Complex64::new(rng.random_range(0.0..std::f64::consts::PI), im));
            }
            for th in angles {
                let req = KernelEvalRequest::new(d, tau, th);
                let a = evaluate_rho(&req.with_method(KernelMethod::ThetaSum))?.value;
                let b = evaluate_rho(&req.with_method(KernelMethod::Spectral))?.value;
                worst = worst.max((a - b).norm());
            }
        }
        c.le(format!("theta sum vs spectral, d={d}"), worst, 2e-8);
        let mut mass = 0.0f64;
        for &tau in &taus {
            mass = mass.max((rho_mass(d, tau)? - 1.0).abs());
        }
        c.le(format!("kernel mass, d={d}"), mass, 1e-10);
        let (conv, direct) = semigroup_check(d, 0.2, 0.3, 0.9)?;
        c.le(format!("semigroup, d={d}"), (conv - direct).abs() / direct.abs().max(1.0), 1e-8);
    }
    if opts.has(3) {
        let mut rec = 0.0f64;
        let mut nu_rec = 0.0f64;
        for &tau in &taus {
            for th in [0.3, 1.1, 2.5] {
                let (a, b) = rho_recursion_check(1, tau, Complex64::new(th, 0.0))?;
                rec = rec.max((a - b).norm() / b.norm());
            }
            for r in [0.2, 1.0, 3.0] {
                let (a, b) = nu_recursion_check(tau, r)?;
                nu_rec = nu_rec.max((a - b).abs() / b.abs());
            }
        }
        c.le("rho_3 from rho_1", rec, 1e-12);
        c.le("nu_3 from nu_1", nu_rec, 1e-12);
    }
    Ok(())
}

fn operators(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let tau = opts.tau.unwrap_or(0.5);
    for (d, cutoff, tol) in [(1usize, 16usize, 1e-13), (2, 10, 1e-10)] {
        if !opts.has(d) {
            continue;
        }
        let ops = build_basis(&BasisSpec::with_cutoff(d, cutoff)?, &ModelParams::dimensionless(d, tau)?)?;
        for r in &euclidean_algebra_check(&ops).items {
            c.le(format!("{}, d={d}", r.name), r.value, tol);
        }
        c.le(format!("W_kl = 0, d={d}"), constraint_residual(&ops), tol);
        c.le(format!("C = 0, d={d}"), casimir_residual(&ops), tol);
        let rep = annihilation_check(&ops, tau)?;
        for name in ANNIHILATION_IDENTITIES {
            c.le(format!("{name}, d={d}"), rep.get(name).unwrap_or(f64::NAN), tol);
        }
        if d == 2 {
            let lx = lx_casimir_check_d2(&ops)?;
            c.le("C - X^2 (L.X)^2, d=2", lx.casimir_minus_lx, tol);
            c.le("L.X = 0, d=2", lx.l_dot_x, tol);
        }
    }
    Ok(())
}

fn coherent(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xc0de);
    for d in dims_in(opts, &[1, 2]) {
        for tau in opts.taus(&[0.2, 0.5, 1.0]) {
            let params = ModelParams::dimensionless(d, tau)?;
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let (x, p) = random_phase_point(&mut rng, d, 1.5);
                let a = complexify(&params, &PhasePoint::from_dimensionless(&params, &x, &p)?);
                let cutoff = certified_cutoff(d, tau, a.alpha(), 1e-14);
                worst = worst.max(relative_eigen_residual(&CoherentState::new(a, tau)?, cutoff)?);
            }
            c.le(format!("A_k psi = a_k psi, d={d}, tau={tau}"), worst, 1e-7);
        }
    }
    Ok(())
}

fn resolution(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let tau = opts.tau.unwrap_or(0.5);
    if opts.has(1) {
        let q = QuadratureSpec::for_degree(1, tau, 8)?;
        let mut moment = 0.0f64;
        for n in 0..=8 {
            let (num, closed) = moment_identity_d1(n, &q)?;
            moment = moment.max((num / closed - 1.0).abs());
        }
        c.le("fiber moments e^{tau n^2}, d=1", moment, 1e-10);
        let basis = BasisSpec::new(1, 8, 0)?;
        let m = resolve_identity_matrix(&basis, &q, FiberWeight::Resolution)?;
        c.le("resolution of identity, d=1", identity_deviation(&m), 1e-8);
        if opts.negative_controls {
            let bad = resolve_identity_matrix(&basis, &q, FiberWeight::Inversion)?;
            c.gt("swapped fiber weight, d=1", identity_deviation(&bad), 1e-7);
        }
    }
    if opts.has(2) {
        let q = QuadratureSpec::for_degree(2, tau, 4)?;
        let basis = BasisSpec::new(2, 4, 0)?;
        let m = resolve_identity_matrix(&basis, &q, FiberWeight::Resolution)?;
        c.le("resolution of identity, d=2", identity_deviation(&m), 1e-4);
        if opts.negative_controls {
            let bad = resolve_identity_matrix(&basis, &q, FiberWeight::Inversion)?;
            c.gt("swapped fiber weight, d=2", identity_deviation(&bad), 1e-3);
        }
    }
    Ok(())
}

fn presets(d: usize, seed: u64) -> Result<Vec<StateSource>> {
    Ok(match d {
        1 => vec![
            StateSource::Basis { dim: 1, label: BasisLabel::Fourier(3) },
            StateSource::Sum(vec![
                (Complex64::new(0.6, 0.0), StateSource::Basis { dim: 1, label: BasisLabel::Fourier(-2) }),
                (Complex64::new(0.0, 0.8), StateSource::Basis { dim: 1, label: BasisLabel::Fourier(4) }),
            ]),
            StateSource::random(1, 4, seed)?,
        ],
        2 => vec![
            StateSource::Basis { dim: 2, label: BasisLabel::Harmonic { l: 1, m: 0 } },
            StateSource::Basis { dim: 2, label: BasisLabel::Harmonic { l: 2, m: -1 } },
            StateSource::random(2, 2, seed)?,
        ],
        _ => vec![
            StateSource::Zonal { degree: 1, axis: vec![0.0, 0.0, 0.0, 1.0] },
            StateSource::random(3, 2, seed)?,
        ],
    })
}

fn transform(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let tau = opts.tau.unwrap_or(0.5);
    for d in dims_in(opts, &[1, 2, 3]) {
        let fs = presets(d, opts.seed)?;
        let degree = fs.iter().filter_map(|f| f.max_degree()).max().unwrap_or(0);
        let q = QuadratureSpec::for_degree(d, tau, degree)?;
        let tol = if d == 1 { 1e-6 } else { 1e-5 };
        let mut rt = 0.0f64;
        for f in &fs {
            rt = rt.max(round_trip_error(f, &q, FiberWeight::Inversion)?);
        }
        c.le(format!("inverse(transform(f)) = f, d={d}"), rt, tol);
        if opts.negative_controls {
            c.gt(format!("inversion with resolution weight, d={d}"), round_trip_error(&fs[0], &q, FiberWeight::Resolution)?, 10.0 * tol);
        }
        let (phase, pos) = isometry_gram(&fs, &q)?;
        let dev = (&phase - &pos).iter().map(|z| z.norm()).fold(0.0, f64::max);
        c.le(format!("isometry Gram, d={d}"), dev, if d == 1 { 1e-8 } else { 1e-4 });
    }
    for d in dims_in(opts, &[1, 2]) {
        let f = if d == 1 {
            StateSource::Basis { dim: 1, label: BasisLabel::Fourier(2) }
        } else {
            StateSource::Basis { dim: 2, label: BasisLabel::Harmonic { l: 1, m: 0 } }
        };
        let exact_deg = if d == 1 { 48 } else { 28 };
        let q = QuadratureSpec::new(d, tau, QuadratureOptions { max_degree: 2, exactness: exact_deg, radial_order: 12 })?;
        let x: Vec<f64> = if d == 1 { vec![0.6, 0.8] } else { vec![0.48, 0.6, 0.64] };
        let back = adjoint_inverse(|s| f.transform_at(tau, s.a), &x, &q)?;
        c.le(format!("adjoint inversion, d={d}"), (back - f.eval(&x)?).norm(), 1e-6);
        let eps = 0.3;
        let pert = adjoint_inverse(|s| Ok(f.transform_at(tau, s.a)? + eps * s.a[0].conj()), &x, &q)?;
        let expect = f.eval(&x)? + eps * (-tau * d as f64 / 2.0).exp() * x[0];
        c.le(format!("adjoint projection of conj(a_1), d={d}"), (pert - expect).norm(), 1e-6);
        let a = crate::quadrature::phase_point(&x, 0.5, &crate::quadrature::tangent_frame(&x)[0]);
        let rep = reproducing_identity_check(|b| f.transform_at(tau, b), &a, &q)?;
        c.le(format!("reproducing kernel, d={d}"), (rep - f.transform_at(tau, &a)?).norm(), 1e-6);
    }
    Ok(())
}

fn flat(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let (sigma, l) = (0.5, 0.8);
    let fp = FlatParams::dimensionless(1, sigma)?;
    let m = flat_resolution_check(&fp, 6, l, 24)?;
    c.le("flat ground state diagonal", (m[(0, 0)] - 1.0).norm(), 1e-10);
    c.le("flat resolution, 6 Hermite functions", identity_deviation(&m), 1e-8);
    let mut inv = 0.0f64;
    for x in [-1.1, 0.0, 0.7, 1.9] {
        let exact = hermite_functions(5, l, x);
        for (k, e) in exact.iter().enumerate() {
            let got = flat_inverse(&fp, |a| Ok(hermite_transform(sigma, l, 5, a[0])[k]), &[x])?;
            inv = inv.max((got - e).norm());
        }
    }
    c.le("flat inversion, 6 Hermite functions", inv, 1e-8);
    for d in dims_in(opts, &[2, 3]) {
        let coarse = small_tau_limit_check(d, 0.02)?;
        let fine = small_tau_limit_check(d, 0.01)?;
        c.le(format!("small-tau peak discrepancy, d={d}, tau=0.02"), coarse.peak_discrepancy, 0.05);
        c.le(
            format!("small-tau improvement 0.02 -> 0.01, d={d}"),
            fine.peak_discrepancy / coarse.peak_discrepancy,
            1.0 - f64::EPSILON,
        );
    }
    Ok(())
}

fn husimi(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let tau = opts.tau.unwrap_or(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x4851);
    for d in dims_in(opts, &[1, 2, 3]) {
        let q = QuadratureSpec::for_degree(d, tau, 2)?;
        let (mut mass, mut negative) = (0.0f64, 0.0f64);
        for k in 0..5 {
            let f = StateSource::random(d, 2, opts.seed + k)?;
            mass = mass.max((husimi_mass(&f, &q)? - 1.0).abs());
            let pts: Vec<(Vec<f64>, Vec<f64>)> = (0..50).map(|_| random_phase_point(&mut rng, d, 3.0)).collect();
            let vals = husimi_density(&f, &q, &pts)?;
            negative = negative.max(vals.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max));
        }
        c.le(format!("Husimi unit mass, d={d}"), mass, 1e-6);
        c.le(format!("Husimi nonnegative, d={d}"), negative, 0.0);
    }
    Ok(())
}

fn invariance(opts: &VerifyOptions, c: &mut Collector) -> Result<()> {
    let tau = opts.tau.unwrap_or(0.5);
    for d in dims_in(opts, &[1, 2, 3]) {
        let q = QuadratureSpec::for_degree(d, tau, 3)?;
        let rots: Vec<_> = (0..3).map(|s| random_rotation(d + 1, opts.seed + s)).collect();
        let r = invariance_measure_check(&q, &rots)?;
        c.le(format!("measure rotation invariance, d={d}"), r.rotation, 1e-10);
        c.le(format!("sum rule, d={d}"), r.sum_rule, 1e-13);
        let worst = r.radial_laplacian.iter().map(|row| row.relative_residual).fold(0.0, f64::max);
        c.le(format!("radial Laplacian identity, d={d}"), worst, 1e-5);
    }
    Ok(())
}

/// Runs one suite.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    if let Some(&d) = opts.dims.iter().find(|d| !(1..=3).contains(*d)) {
        return Err(Error::UnsupportedDimension(d));
    }
    if let Some(t) = opts.tau {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("τ must be positive, got {t}")));
        }
    }
    let mut c = Collector { suite: suite.name(), checks: Vec::new() };
    match suite {
        Suite::Complexifier => complexifier(opts, &mut c)?,
        Suite::Kernels => kernels(opts, &mut c)?,
        Suite::Operators => operators(opts, &mut c)?,
        Suite::Coherent => coherent(opts, &mut c)?,
        Suite::Resolution => resolution(opts, &mut c)?,
        Suite::Transform => transform(opts, &mut c)?,
        Suite::Flat => flat(opts, &mut c)?,
        Suite::Husimi => husimi(opts, &mut c)?,
        Suite::Invariance => invariance(opts, &mut c)?,
    }
    Ok(c.checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()), Some(s));
        }
        assert_eq!(Suite::parse("nope"), None);
    }

    #[test]
    fn random_phase_points_are_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=3 {
            let (x, p) = random_phase_point(&mut rng, d, 1.5);
            let xn: f64 = x.iter().map(|t| t * t).sum();
            let xp: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
            assert!((xn - 1.0).abs() < 1e-15 && xp.abs() < 1e-15);
            assert!(p.iter().map(|t| t * t).sum::<f64>().sqrt() <= 1.5);
        }
    }

    #[test]
    fn fast_suites_pass() {
        let opts = VerifyOptions { negative_controls: true, ..Default::default() };
        for s in [Suite::Complexifier, Suite::Operators, Suite::Flat, Suite::Resolution] {
            for ch in run_suite(s, &opts).unwrap() {
                assert!(ch.pass, "{ch:?}");
            }
        }
        let bad = VerifyOptions { dims: vec![4], ..Default::default() };
        assert!(run_suite(Suite::Kernels, &bad).is_err());
    }
}
