//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sphcoh::bargmann::{
    StateSource, adjoint_inverse, husimi_density, husimi_mass, identity_deviation, isometry_gram, moment_identity_d1,
    resolve_identity_matrix, round_trip_error, sb_transform_integral,
};
use sphcoh::basis::{
    ANNIHILATION_IDENTITIES, BasisLabel, BasisSpec, annihilation_check, build_annihilation, build_basis, casimir_residual,
    constraint_residual, euclidean_algebra_check, lx_casimir_check_d2,
};
use sphcoh::coherent::{CoherentState, certified_cutoff, relative_eigen_residual};
use sphcoh::flat::{FlatParams, flat_inverse, flat_resolution_check, hermite_functions, hermite_transform, small_tau_limit_check};
use sphcoh::kernels::{KernelEvalRequest, KernelMethod, evaluate_rho, nu, nu_recursion_check, rho, rho_mass, rho_recursion_check, semigroup_check};
use sphcoh::model::{ModelParams, PhasePoint, complexify, complexify_series, conjugation_residual};
use sphcoh::quadrature::{FiberWeight, QuadratureOptions, QuadratureSpec, phase_point};
use sphcoh::verify::random_phase_point;

type Res = sphcoh::Result<()>;

/// Collects the individual checks of one criterion.
#[derive(Default)]
struct Sheet {
    failures: Vec<String>,
    worst: Vec<(String, f64, f64)>,
}

impl Sheet {
    fn le(&mut self, name: &str, value: f64, tol: f64) {
        self.worst.push((name.to_string(), value, tol));
        if !(value.is_finite() && value <= tol) {
            self.failures.push(format!("{name}: {value:.3e} > {tol:.0e}"));
        }
    }

    fn gt(&mut self, name: &str, value: f64, threshold: f64) {
        self.worst.push((name.to_string(), value, threshold));
        if !(value.is_finite() && value > threshold) {
            self.failures.push(format!("{name}: {value:.3e} not above {threshold:.0e}"));
        }
    }

    fn ok(&mut self, name: &str, cond: bool) {
        self.worst.push((name.to_string(), if cond { 0.0 } else { 1.0 }, 0.0));
        if !cond {
            self.failures.push(name.to_string());
        }
    }
}

fn criterion(n: usize, title: &str, limit: Option<Duration>, f: impl FnOnce(&mut Sheet) -> Res) -> bool {
    let start = Instant::now();
    let mut sheet = Sheet::default();
    if let Err(e) = f(&mut sheet) {
        sheet.failures.push(format!("error: {e}"));
    }
    let elapsed = start.elapsed();
    if let Some(l) = limit {
        if elapsed > l {
            sheet.failures.push(format!("runtime {:.1} s over {:.0} s", elapsed.as_secs_f64(), l.as_secs_f64()));
        }
    }
    let pass = sheet.failures.is_empty();
    println!("criterion {n}: {} {title} ({:.2} s, {} checks)", if pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64(), sheet.worst.len());
    for f in &sheet.failures {
        println!("    {f}");
    }
    if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
        for (name, v, t) in &sheet.worst {
            println!("    {name}: {v:.3e} (bound {t:.0e})");
        }
    }
    pass
}

// Independent oracles.

/// Spectral sum of the sphere heat kernel, with Chebyshev/Legendre recurrences evaluated here.
fn rho_oracle(d: usize, tau: f64, th: C) -> C {
    let z = th.cos();
    match d {
        1 => {
            let mut s = C::new(0.0, 0.0);
            for n in -120i64..=120 {
                let nf = n as f64;
                s += (C::new(-tau * nf * nf / 2.0, 0.0) + C::i() * nf * th).exp();
            }
            s / (2.0 * PI)
        }
        2 => {
            let (mut p0, mut p1) = (C::new(1.0, 0.0), z);
            let mut s = p0 / (4.0 * PI);
            for l in 1..160usize {
                let lf = l as f64;
                s += (2.0 * lf + 1.0) / (4.0 * PI) * (-tau * lf * (lf + 1.0) / 2.0).exp() * p1;
                let p2 = ((2.0 * lf + 1.0) * z * p1 - lf * p0) / (lf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            s
        }
        _ => {
            let (mut u0, mut u1) = (C::new(1.0, 0.0), 2.0 * z);
            let mut s = u0 / (2.0 * PI * PI);
            for l in 1..160usize {
                let lf = l as f64;
                s += (lf + 1.0) / (2.0 * PI * PI) * (-tau * lf * (lf + 2.0) / 2.0).exp() * u1;
                let u2 = 2.0 * z * u1 - u0;
                u0 = u1;
                u1 = u2;
            }
            s
        }
    }
}

fn nu1_oracle(s: f64, r: f64) -> f64 {
    (2.0 * PI * s).powf(-0.5) * (-r * r / (2.0 * s)).exp()
}

fn nu3_oracle(s: f64, r: f64) -> f64 {
    let ratio = if r == 0.0 { 1.0 } else { r / r.sinh() };
    (2.0 * PI * s).powf(-1.5) * (-s / 2.0).exp() * ratio * (-r * r / (2.0 * s)).exp()
}

fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        _ => 2.0 * PI * PI,
    }
}

/// Normalised Hermite functions of width `l` by the three-term recurrence.
fn hermite_oracle(n: usize, l: f64, x: f64) -> Vec<f64> {
    let xi = x / l;
    let mut out = vec![PI.powf(-0.25) * l.powf(-0.5) * (-xi * xi / 2.0).exp()];
    if n > 1 {
        out.push(2f64.sqrt() * xi * out[0]);
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

fn fourier_transform_oracle(n: i64, tau: f64, a: &[C]) -> C {
    let nf = n as f64;
    let w = if n >= 0 { a[0] + C::i() * a[1] } else { a[0] - C::i() * a[1] };
    (-tau * nf * nf / 2.0).exp() * w.powu(n.unsigned_abs() as u32) / (2.0 * PI).sqrt()
}

// Criteria.

fn complexifier(s: &mut Sheet) -> Res {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 1..=3 {
        let params = ModelParams::new(d, 1.7, 0.8, 1.3, 0.4)?;
        let (mut constraint, mut series, mut conj, mut closed) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..200 {
            let (x, p) = random_phase_point(&mut rng, d, 2.0);
            let pt = PhasePoint::from_dimensionless(&params, &x, &p)?;
            let a = complexify(&params, &pt);
            let r = params.r;
            let sum: C = a.coords().iter().map(|z| z * z).sum();
            constraint = constraint.max((sum - r * r).norm() / (r * r));
            let ser = complexify_series(&params, &pt, 40)?;
            let scale = a.alpha().sqrt();
            series = series.max(a.coords().iter().zip(ser.coords()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max) / scale);
            conj = conj.max(conjugation_residual(&params, &pt));
            let pn = p.iter().map(|t| t * t).sum::<f64>().sqrt();
            for (k, z) in a.coords().iter().enumerate() {
                let dir = if pn > 0.0 { p[k] / pn } else { 0.0 };
                let want = r * C::new(pn.cosh() * x[k], pn.sinh() * dir);
                closed = closed.max((z - want).norm() / scale);
            }
            let back = complexify(&params, &pt.negated_momentum());
            let mirrored = a.coords().iter().zip(back.coords()).map(|(u, v)| (u.conj() - v).norm()).fold(0.0, f64::max);
            conj = conj.max(mirrored / scale);
        }
        s.le(&format!("sum a_k^2 = r^2, d={d}"), constraint, 1e-12);
        s.le(&format!("series(40) vs closed form, d={d}"), series, 1e-12);
        s.le(&format!("cosh/sinh oracle, d={d}"), closed, 1e-14);
        s.le(&format!("conjugation symmetry, d={d}"), conj, 1e-14);
    }
    Ok(())
}

fn kernels(s: &mut Sheet) -> Res {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let taus = [0.1, 0.5, 2.0];
    for d in 1..=3 {
        let (mut dual, mut oracle) = (0.0f64, 0.0f64);
        for &tau in &taus {
            for k in 0..70 {
                let im = if k < 50 { 0.0 } else { rng.random_range(-1.0..1.0) };
                let th = C::new(rng.random_range(0.0..PI), im);
                let req = KernelEvalRequest::new(d, tau, th);
                let a = evaluate_rho(&req.with_method(KernelMethod::ThetaSum))?.value;
                let b = evaluate_rho(&req.with_method(KernelMethod::Spectral))?.value;
                let o = rho_oracle(d, tau, th);
                dual = dual.max((a - b).norm());
                oracle = oracle.max((a - o).norm()).max((b - o).norm());
            }
        }
        s.le(&format!("theta sum vs spectral, d={d}"), dual, 2e-8);
        s.le(&format!("both methods vs recurrence oracle, d={d}"), oracle, 2e-8);
        let (mut mass, mut mass_oracle) = (0.0f64, 0.0f64);
        for &tau in &taus {
            mass = mass.max((rho_mass(d, tau)? - 1.0).abs());
            let m = sphere_area(d - 1) * simpson(8000, 0.0, PI, |t| rho_oracle(d, tau, C::new(t, 0.0)).re * t.sin().powi(d as i32 - 1));
            mass_oracle = mass_oracle.max((m - 1.0).abs());
        }
        s.le(&format!("kernel mass, d={d}"), mass, 1e-10);
        s.le(&format!("oracle kernel mass, d={d}"), mass_oracle, 1e-10);
        let (conv, direct) = semigroup_check(d, 0.2, 0.3, 0.9)?;
        s.le(&format!("semigroup, d={d}"), (conv - direct).abs() / direct.abs().max(1.0), 1e-8);
    }
    // Circle convolution by the trapezoid rule, exact for the band-limited integrand.
    let (sa, sb, th) = (0.15, 0.4, 1.3);
    let n = 512;
    let mut conv = C::new(0.0, 0.0);
    for k in 0..n {
        let phi = 2.0 * PI * k as f64 / n as f64;
        conv += rho(1, sa, C::new(th - phi, 0.0))? * rho(1, sb, C::new(phi, 0.0))?;
    }
    conv *= 2.0 * PI / n as f64;
    s.le("circle convolution oracle", (conv - rho(1, sa + sb, C::new(th, 0.0))?).norm(), 1e-8);
    let (mut rec, mut nu_rec, mut nu_closed) = (0.0f64, 0.0f64, 0.0f64);
    for &tau in &taus {
        for th in [0.3, 1.1, 2.5] {
            let (a, b) = rho_recursion_check(1, tau, C::new(th, 0.0))?;
            rec = rec.max((a - b).norm() / b.norm());
        }
        for r in [0.0, 0.2, 1.0, 3.0] {
            if r > 0.0 {
                let (a, b) = nu_recursion_check(tau, r)?;
                nu_rec = nu_rec.max((a - b).abs() / b.abs());
            }
            nu_closed = nu_closed.max((nu(1, tau, r)? / nu1_oracle(tau, r) - 1.0).abs());
            nu_closed = nu_closed.max((nu(3, tau, r)? / nu3_oracle(tau, r) - 1.0).abs());
        }
    }
    s.le("rho_3 from rho_1", rec, 1e-12);
    s.le("nu_3 from nu_1", nu_rec, 1e-12);
    s.le("nu_1, nu_3 closed forms", nu_closed, 1e-12);
    Ok(())
}

fn operators(s: &mut Sheet) -> Res {
    let tau = 0.5;
    for (d, cutoff, tol) in [(1usize, 16usize, 1e-13), (2, 10, 1e-10)] {
        let ops = build_basis(&BasisSpec::with_cutoff(d, cutoff)?, &ModelParams::dimensionless(d, tau)?)?;
        for r in &euclidean_algebra_check(&ops).items {
            s.le(&format!("{}, d={d}", r.name), r.value, tol);
        }
        s.le(&format!("W_kl = 0, d={d}"), constraint_residual(&ops), tol);
        s.le(&format!("C = 0, d={d}"), casimir_residual(&ops), tol);
        let rep = annihilation_check(&ops, tau)?;
        for name in ANNIHILATION_IDENTITIES {
            s.le(&format!("{name}, d={d}"), rep.get(name).unwrap_or(f64::NAN), tol);
        }
        if d == 2 {
            let lx = lx_casimir_check_d2(&ops)?;
            s.le("C - X^2 (L.X)^2, d=2", lx.casimir_minus_lx, tol);
            s.le("L.X = 0, d=2", lx.l_dot_x, tol);
        }
    }
    // A_1 + iA_2 raises e_n with the factor e^{−τ(2n+1)/2}.
    let spec = BasisSpec::with_cutoff(1, 16)?;
    let ops = build_annihilation(&build_basis(&spec, &ModelParams::dimensionless(1, tau)?)?, tau)?;
    let raise = &ops.a[0] + &ops.a[1] * C::i();
    let mut dev = 0.0f64;
    for col in 0..spec.size() {
        let BasisLabel::Fourier(n) = spec.label(col) else { unreachable!() };
        for row in 0..spec.size() {
            let want = match spec.label(row) {
                BasisLabel::Fourier(m) if m == n + 1 => (-tau * (2 * n + 1) as f64 / 2.0).exp(),
                _ => 0.0,
            };
            dev = dev.max((raise[(row, col)] - want).norm());
        }
    }
    s.le("raising operator oracle, d=1", dev, 1e-13);
    Ok(())
}

fn coherent(s: &mut Sheet) -> Res {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for d in [1usize, 2] {
        for tau in [0.2, 0.5, 1.0] {
            let params = ModelParams::dimensionless(d, tau)?;
            let (mut worst, mut oracle) = (0.0f64, 0.0f64);
            for _ in 0..20 {
                let (x, p) = random_phase_point(&mut rng, d, 1.5);
                let a = complexify(&params, &PhasePoint::from_dimensionless(&params, &x, &p)?);
                let cutoff = certified_cutoff(d, tau, a.alpha(), 1e-14);
                if d == 1 {
                    oracle = oracle.max(circle_eigen_residual(a.coords(), tau, cutoff as i64));
                }
                worst = worst.max(relative_eigen_residual(&CoherentState::new(a, tau)?, cutoff)?);
            }
            s.le(&format!("A_k psi = a_k psi, d={d}, tau={tau}"), worst, 1e-7);
            if d == 1 {
                s.le(&format!("raising-operator oracle, tau={tau}"), oracle, 1e-7);
            }
        }
    }
    Ok(())
}

/// `‖(A₊ − (a₁ + i a₂))c‖ / ‖c‖` for `c_n = e^{−τn²/2} (a₁ − i a₂)^n`, on `|n| ≤ N − 1`.
fn circle_eigen_residual(a: &[C], tau: f64, n_max: i64) -> f64 {
    let w = a[0] - C::i() * a[1];
    let ev = a[0] + C::i() * a[1];
    let coef = |n: i64| {
        let nf = n as f64;
        (-tau * nf * nf / 2.0).exp() * if n >= 0 { w.powi(n as i32) } else { (1.0 / w).powi((-n) as i32) }
    };
    let (mut num, mut den) = (0.0, 0.0);
    for n in -n_max..n_max {
        let applied = (-tau * (2 * n - 1) as f64 / 2.0).exp() * coef(n - 1);
        num += (applied - ev * coef(n)).norm_sqr();
        den += coef(n).norm_sqr();
    }
    (num / den).sqrt()
}

fn resolution(s: &mut Sheet) -> Res {
    let tau = 0.5;
    let q = QuadratureSpec::for_degree(1, tau, 8)?;
    let (mut lib, mut oracle) = (0.0f64, 0.0f64);
    for n in 0..=8i64 {
        let (num, closed) = moment_identity_d1(n, &q)?;
        lib = lib.max((num / closed - 1.0).abs());
        let nf = n as f64;
        let want = (tau * nf * nf).exp();
        let range = 2.0 * nf * tau + 12.0 * tau.sqrt() + 2.0;
        let got = simpson(20000, -range, range, |p| (2.0 * nf * p).exp() * nu1_oracle(2.0 * tau, 2.0 * p) * 2.0);
        oracle = oracle.max((got / want - 1.0).abs());
    }
    s.le("fiber moments, library quadrature", lib, 1e-10);
    s.le("fiber moments, independent integral", oracle, 1e-10);
    let basis = BasisSpec::new(1, 8, 0)?;
    let m = resolve_identity_matrix(&basis, &q, FiberWeight::Resolution)?;
    s.le("Gram deviation, d=1", identity_deviation(&m), 1e-8);
    let bad = resolve_identity_matrix(&basis, &q, FiberWeight::Inversion)?;
    s.gt("negative control, d=1", identity_deviation(&bad), 1e-7);
    let q2 = QuadratureSpec::for_degree(2, tau, 4)?;
    let basis2 = BasisSpec::new(2, 4, 0)?;
    let m2 = resolve_identity_matrix(&basis2, &q2, FiberWeight::Resolution)?;
    s.le("Gram deviation, d=2", identity_deviation(&m2), 1e-4);
    let bad2 = resolve_identity_matrix(&basis2, &q2, FiberWeight::Inversion)?;
    s.gt("negative control, d=2", identity_deviation(&bad2), 1e-3);
    Ok(())
}

fn presets(d: usize) -> sphcoh::Result<Vec<StateSource>> {
    let f = |n| StateSource::Basis { dim: 1, label: BasisLabel::Fourier(n) };
    let h = |l, m| StateSource::Basis { dim: 2, label: BasisLabel::Harmonic { l, m } };
    Ok(match d {
        1 => vec![f(3), StateSource::Sum(vec![(C::new(0.6, 0.0), f(-2)), (C::new(0.0, 0.8), f(4))]), StateSource::random(1, 4, 7)?],
        2 => vec![h(1, 0), h(2, -1), StateSource::random(2, 2, 7)?],
        _ => vec![StateSource::Zonal { degree: 1, axis: vec![0.0, 0.0, 0.0, 1.0] }, StateSource::random(3, 2, 7)?],
    })
}

fn transform(s: &mut Sheet) -> Res {
    let tau = 0.5;
    for d in 1..=3 {
        let fs = presets(d)?;
        let degree = fs.iter().filter_map(|f| f.max_degree()).max().unwrap_or(0);
        let q = QuadratureSpec::for_degree(d, tau, degree)?;
        let mut rt = 0.0f64;
        for f in &fs {
            rt = rt.max(round_trip_error(f, &q, FiberWeight::Inversion)?);
        }
        s.le(&format!("round trip, d={d}"), rt, if d == 1 { 1e-6 } else { 1e-5 });
        let (phase, pos) = isometry_gram(&fs, &q)?;
        let dev = (&phase - &pos).iter().map(|z| z.norm()).fold(0.0, f64::max);
        s.le(&format!("isometry Gram, d={d}"), dev, if d == 1 { 1e-8 } else { 1e-4 });
    }
    // Closed-form transform of Fourier modes against the library, both directly and as an integral.
    let q = QuadratureSpec::new(1, tau, QuadratureOptions { max_degree: 4, exactness: 96, radial_order: 4 })?;
    let mut closed = 0.0f64;
    for n in [-3i64, 0, 2] {
        let f = StateSource::Basis { dim: 1, label: BasisLabel::Fourier(n) };
        for (th, p) in [(0.4, 0.0), (1.7, 0.8), (-2.2, -1.1)] {
            let a = phase_point(&[f64::cos(th), f64::sin(th)], p, &[-f64::sin(th), f64::cos(th)]);
            let want = fourier_transform_oracle(n, tau, &a);
            closed = closed.max((f.transform_at(tau, &a)? - want).norm());
            closed = closed.max((sb_transform_integral(|x| f.eval(x), tau, &a, &q)? - want).norm());
        }
    }
    s.le("Fourier transform closed form", closed, 1e-10);
    for d in [1usize, 2] {
        let f = if d == 1 {
            StateSource::Basis { dim: 1, label: BasisLabel::Fourier(2) }
        } else {
            StateSource::Basis { dim: 2, label: BasisLabel::Harmonic { l: 1, m: 0 } }
        };
        let exact = if d == 1 { 48 } else { 28 };
        let q = QuadratureSpec::new(d, tau, QuadratureOptions { max_degree: 2, exactness: exact, radial_order: 12 })?;
        let x: Vec<f64> = if d == 1 { vec![0.6, 0.8] } else { vec![0.48, 0.6, 0.64] };
        let back = adjoint_inverse(|smp| f.transform_at(tau, smp.a), &x, &q)?;
        s.le(&format!("adjoint inversion, d={d}"), (back - f.eval(&x)?).norm(), 1e-6);
    }
    Ok(())
}

fn flat(s: &mut Sheet) -> Res {
    let (sigma, l) = (0.5, 0.8);
    let fp = FlatParams::dimensionless(1, sigma)?;
    let m = flat_resolution_check(&fp, 6, l, 24)?;
    s.le("flat resolution, 6 Hermite functions", identity_deviation(&m), 1e-8);
    let (mut inv, mut herm) = (0.0f64, 0.0f64);
    for x in [-1.1, 0.0, 0.7, 1.9] {
        let exact = hermite_oracle(6, l, x);
        for (a, b) in hermite_functions(6, l, x).iter().zip(&exact) {
            herm = herm.max((a - b).abs());
        }
        for (k, e) in exact.iter().enumerate() {
            let got = flat_inverse(&fp, |a| Ok(hermite_transform(sigma, l, 6, a[0])[k]), &[x])?;
            inv = inv.max((got - e).norm());
        }
    }
    s.le("Hermite functions vs recurrence", herm, 1e-13);
    s.le("flat inversion, 6 Hermite functions", inv, 1e-8);
    for d in [2usize, 3] {
        let coarse = small_tau_limit_check(d, 0.02)?;
        let fine = small_tau_limit_check(d, 0.01)?;
        s.le(&format!("peak discrepancy, d={d}, tau=0.02"), coarse.peak_discrepancy, 0.05);
        s.ok(&format!("monotone improvement, d={d}"), fine.peak_discrepancy < coarse.peak_discrepancy);
        for (rep, tau) in [(coarse, 0.02), (fine, 0.01)] {
            let oracle = (rho_oracle(d, tau, C::new(0.0, 0.0)).re * (2.0 * PI * tau).powf(d as f64 / 2.0) - 1.0).abs();
            s.le(&format!("peak discrepancy oracle, d={d}, tau={tau}"), (rep.peak_discrepancy - oracle).abs(), 1e-12);
        }
    }
    Ok(())
}

fn husimi(s: &mut Sheet) -> Res {
    let tau = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for d in 1..=3 {
        let q = QuadratureSpec::for_degree(d, tau, 2)?;
        let (mut mass, mut negative) = (0.0f64, 0.0f64);
        for k in 0..5 {
            let f = StateSource::random(d, 2, 100 + k)?;
            mass = mass.max((husimi_mass(&f, &q)? - 1.0).abs());
            let pts: Vec<_> = (0..50).map(|_| random_phase_point(&mut rng, d, 3.0)).collect();
            negative = negative.max(husimi_density(&f, &q, &pts)?.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max));
            if d == 1 {
                // Trapezoid in θ (exact for trigonometric polynomials), Simpson in p.
                let n = 64;
                let total = simpson(4000, -8.0, 8.0, |p| {
                    let mut acc = 0.0;
                    for j in 0..n {
                        let th = 2.0 * PI * j as f64 / n as f64;
                        let a = phase_point(&[th.cos(), th.sin()], p, &[-th.sin(), th.cos()]);
                        acc += f.transform_at(tau, &a).map(|z| z.norm_sqr()).unwrap_or(f64::NAN);
                    }
                    acc * 2.0 * PI / n as f64 * 2.0 * nu1_oracle(2.0 * tau, 2.0 * p)
                });
                s.le(&format!("independent Husimi mass, d=1, state {k}"), (total - 1.0).abs(), 1e-6);
            }
        }
        s.le(&format!("Husimi unit mass, d={d}"), mass, 1e-6);
        s.le(&format!("Husimi nonnegative, d={d}"), negative, 0.0);
    }
    Ok(())
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sphcoh"));
    c.env_remove("SPHCOH_THREADS");
    c
}

fn golden_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"))
}

const GOLDEN: [(&str, &[&str]); 3] = [
    ("kernel_sphere_d2.csv", &["kernel", "--space", "sphere", "--dim", "2", "--tau", "0.5", "--theta", "0:3.141592653589793:33", "--theta-im", "0.25"]),
    ("kernel_hyperbolic_d3.csv", &["kernel", "--space", "hyperbolic", "--dim", "3", "--time", "0.8", "--radius", "0:4:41"]),
    ("kernel_sphere_d1.csv", &["kernel", "--space", "sphere", "--dim", "1", "--tau", "0.1", "--theta", "0:3.141592653589793:17"]),
];

fn cli(s: &mut Sheet) -> Res {
    let out = bin().arg("verify").output().expect("run verify");
    s.ok("verify exits 0", out.status.code() == Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
    let checks = report["checks"].as_array().cloned().unwrap_or_default();
    s.ok("verify covers all suites", {
        let suites: std::collections::BTreeSet<_> = checks.iter().filter_map(|c| c["suite"].as_str()).collect();
        suites.len() == 9
    });
    s.ok("every verify check passes", !checks.is_empty() && checks.iter().all(|c| c["pass"] == true));

    let runs: [&[&str]; 4] = [
        &["kernel", "--dim", "3", "--tau", "0.3", "--theta", "0:3:41", "--theta-im", "0.5"],
        &["husimi", "--dim", "2", "--tau", "0.5", "--state", "random:9:2", "--format", "json"],
        &["invert", "--dim", "1", "--tau", "0.4", "--state", "random:4:3"],
        &["transform", "--dim", "3", "--tau", "0.5", "--state", "random:2:2"],
    ];
    for args in runs {
        let one = bin().args(args).args(["--threads", "1"]).output().expect("run");
        let many = bin().args(args).args(["--threads", "4"]).output().expect("run");
        let env = bin().args(args).env("SPHCOH_THREADS", "3").output().expect("run");
        s.ok(&format!("{} succeeds", args[0]), one.status.success());
        s.ok(&format!("{} identical across thread counts", args[0]), one.stdout == many.stdout && one.stdout == env.stdout);
    }

    for (file, args) in GOLDEN {
        let want = std::fs::read(golden_dir().join(file)).expect("golden file");
        let got = bin().args(args).output().expect("run kernel");
        s.ok(&format!("{file} reproduced byte for byte"), got.stdout == want);
        s.le(&format!("{file} against oracle"), golden_oracle_error(file, &want), 1e-13);
    }
    Ok(())
}

/// Largest deviation of a golden table from the test-side kernels, relative to the table's peak.
fn golden_oracle_error(file: &str, bytes: &[u8]) -> f64 {
    let text = String::from_utf8_lossy(bytes);
    let mut pairs = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: Vec<f64> = line.split(',').filter_map(|t| t.parse().ok()).collect();
        let (got, want) = match file {
            "kernel_hyperbolic_d3.csv" => (C::new(v[1], 0.0), C::new(nu3_oracle(0.8, v[0]), 0.0)),
            "kernel_sphere_d2.csv" => (C::new(v[2], v[3]), rho_oracle(2, 0.5, C::new(v[0], v[1]))),
            _ => (C::new(v[2], v[3]), rho_oracle(1, 0.1, C::new(v[0], v[1]))),
        };
        pairs.push((got, want));
    }
    let scale = pairs.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    if pairs.is_empty() {
        return f64::NAN;
    }
    pairs.iter().map(|(g, w)| (g - w).norm() / scale).fold(0.0, f64::max)
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "classical complexifier", Some(secs(1)), complexifier),
        criterion(2, "kernel dual-method agreement", Some(secs(30)), kernels),
        criterion(3, "operator identities", Some(secs(30)), operators),
        criterion(4, "coherent eigenvector property", Some(secs(60)), coherent),
        criterion(5, "resolution of the identity", Some(secs(300)), resolution),
        criterion(6, "transform unitarity and inversion", Some(secs(300)), transform),
        criterion(7, "flat-space oracle", Some(secs(60)), flat),
        criterion(8, "Husimi density", Some(secs(60)), husimi),
        criterion(9, "command-line interface", None, cli),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
