//! Scalar special functions and one-dimensional quadrature rules.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Below this modulus the removable singularities are evaluated by Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// `sinh(z) / z`, entire.
pub fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_THRESHOLD {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

/// `sin(z) / z`, entire.
pub fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_THRESHOLD {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

pub fn sinhc_real(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// `x / sinh(x)` for real `x`, equal to one at the origin.
pub fn x_over_sinh(x: f64) -> f64 {
    1.0 / sinhc_real(x)
}

/// Surface area of the unit sphere `S^n ⊂ R^{n+1}`.
pub fn unit_sphere_volume(n: usize) -> f64 {
    // vol(S^n) = 2 π^{(n+1)/2} / Γ((n+1)/2)
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        3 => 2.0 * PI * PI,
        _ => {
            let mut v = [2.0, 2.0 * PI];
            for k in 2..=n {
                let next = 2.0 * PI * v[0] / (k as f64 - 1.0);
                v = [v[1], next];
            }
            v[1]
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite nodes and weights for `∫ f(t) e^{-t²} dt`, by Golub–Welsch.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_hermite needs at least one node");
    let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Composite Gauss–Legendre rule with `panels` equal panels on `[a, b]`.
pub fn composite_gauss_legendre(n: usize, panels: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|k| gauss_legendre_interval(n, a + k as f64 * h, a + (k + 1) as f64 * h))
        .collect()
}

/// Gauss–Chebyshev rule of the second kind: `∫_{-1}^{1} f(t) √(1-t²) dt`.
pub fn gauss_chebyshev_second(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (n as f64 + 1.0);
    (1..=n)
        .map(|k| {
            let s = (k as f64 * h).sin();
            ((k as f64 * h).cos(), h * s * s)
        })
        .unzip()
}

/// Zonal polynomial of degree `degree` for `S^dim`, at complex argument.
///
/// `dim = 1` gives the Chebyshev polynomial `T_l`; `dim ≥ 2` gives the Gegenbauer
/// polynomial `C_l^{(dim-1)/2}` (Legendre for `dim = 2`, Chebyshev `U_l` for `dim = 3`).
pub fn gegenbauer_eval(dim: usize, degree: usize, z: Complex64) -> Complex64 {
    *zonal_sequence(dim, degree, z)
        .last()
        .expect("sequence has degree + 1 entries")
}

/// All zonal polynomials of degrees `0..=max_degree` by three-term recurrence.
pub fn zonal_sequence(dim: usize, max_degree: usize, z: Complex64) -> Vec<Complex64> {
    assert!(dim >= 1, "sphere dimension must be positive");
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(Complex64::new(1.0, 0.0));
    if max_degree == 0 {
        return out;
    }
    if dim == 1 {
        out.push(z);
        for l in 1..max_degree {
            let next = 2.0 * z * out[l] - out[l - 1];
            out.push(next);
        }
        return out;
    }
    let lambda = (dim as f64 - 1.0) / 2.0;
    out.push(2.0 * lambda * z);
    for l in 1..max_degree {
        let lf = l as f64;
        let next = (2.0 * (lf + lambda) * z * out[l] - (lf + 2.0 * lambda - 1.0) * out[l - 1])
            / (lf + 1.0);
        out.push(next);
    }
    out
}

/// Value of the zonal polynomial at `z = 1`.
pub fn zonal_at_one(dim: usize, degree: usize) -> f64 {
    if dim == 1 {
        return 1.0;
    }
    // C_l^λ(1) = (2λ)_l / l!
    let two_lambda = dim as f64 - 1.0;
    (0..degree).fold(1.0, |acc, k| {
        acc * (two_lambda + k as f64) / (k as f64 + 1.0)
    })
}

/// Laplace–Beltrami eigenvalue `l (l + d − 1)` of degree-`l` harmonics on `S^d`.
pub fn sphere_eigenvalue(dim: usize, degree: usize) -> f64 {
    let l = degree as f64;
    l * (l + dim as f64 - 1.0)
}

/// Dimension of the degree-`l` harmonic space on `S^d`.
pub fn harmonic_multiplicity(dim: usize, degree: usize) -> usize {
    if degree == 0 {
        return 1;
    }
    if dim == 1 {
        return 2;
    }
    fn binom(n: usize, k: usize) -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
    }
    (binom(degree + dim, dim) - binom(degree + dim - 2, dim)) as usize
}

/// Reproducing weight of the degree-`l` zonal term in the mass-one heat kernel.
pub fn zonal_weight(dim: usize, degree: usize) -> f64 {
    let vol = unit_sphere_volume(dim);
    if dim == 1 {
        if degree == 0 {
            1.0 / vol
        } else {
            2.0 / vol
        }
    } else {
        (2.0 * degree as f64 + dim as f64 - 1.0) / (dim as f64 - 1.0) / vol
    }
}

/// Pairwise summation of complex terms; the result does not depend on how callers chunk work.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_real(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_real(&values[..mid]) + pairwise_sum_real(&values[mid..])
}
