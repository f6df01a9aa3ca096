//! Fourier modes on `S¹` and complex spherical harmonics on `S²` (Condon–Shortley phase),
//! evaluated as polynomials so they continue holomorphically to `S^d_C`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `e_n = (a₁ ± i a₂)^{|n|} / √(2π)`, equal to `e^{inθ}/√(2π)` on the real circle.
pub fn fourier_mode(n: i64, a: &[Complex64]) -> Complex64 {
    let i = Complex64::i();
    let base = if n >= 0 { a[0] + i * a[1] } else { a[0] - i * a[1] };
    base.powu(n.unsigned_abs() as u32) / (2.0 * PI).sqrt()
}

/// Position of `Y_{l,m}` in degree-major order.
pub fn ylm_index(l: usize, m: i64) -> usize {
    (l * l) + (l as i64 + m) as usize
}

/// All `Y_{l,m}(a)`, `l ≤ lmax`, indexed by [`ylm_index`].
///
/// `Y_{l,m} = N_{l,m} (−1)^m (a₁ + i a₂)^m P_l^{(m)}(a₃)` for `m ≥ 0` and
/// `Y_{l,−m} = N_{l,m} (a₁ − i a₂)^m P_l^{(m)}(a₃)`, with `P_l^{(m)}` the `m`-th derivative
/// of the Legendre polynomial.
pub fn ylm_table(lmax: usize, a: &[Complex64]) -> Vec<Complex64> {
    let i = Complex64::i();
    let (plus, minus, z) = (a[0] + i * a[1], a[0] - i * a[1], a[2]);
    let mut out = vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)];
    let mut plus_pow = Complex64::new(1.0, 0.0);
    let mut minus_pow = Complex64::new(1.0, 0.0);
    // N_{m,m} (2m−1)!! = √((2m+1)/4π) √(Π_{k≤m} (2k−1)/(2k))
    let mut ratio = 1.0;
    for m in 0..=lmax {
        if m > 0 {
            ratio *= (2.0 * m as f64 - 1.0) / (2.0 * m as f64);
            plus_pow *= plus;
            minus_pow *= minus;
        }
        let mf = m as f64;
        // normalized P̄_l = N_{l,m} P_l^{(m)}(z), recurrence in l
        let norm = |l: usize| ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt();
        let mut prev = Complex64::new(0.0, 0.0);
        let mut cur = Complex64::new(norm(m) * ratio.sqrt(), 0.0);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for l in m..=lmax {
            out[ylm_index(l, m as i64)] = sign * plus_pow * cur;
            if m > 0 {
                out[ylm_index(l, -(m as i64))] = minus_pow * cur;
            }
            let lf = l as f64;
            // (l−m+1) Q_{l+1} = (2l+1) z Q_l − (l+m) Q_{l−1},  N_{l+1}/N_l = √((2l+3)(l+1−m) / ((2l+1)(l+1+m)))
            let r1 = ((2.0 * lf + 3.0) * (lf + 1.0 - mf) / ((2.0 * lf + 1.0) * (lf + 1.0 + mf))).sqrt();
            let next = if l == m {
                (2.0 * lf + 1.0) / (lf - mf + 1.0) * r1 * z * cur
            } else {
                let r0 = ((2.0 * lf + 1.0) * (lf - mf) / ((2.0 * lf - 1.0) * (lf + mf))).sqrt();
                ((2.0 * lf + 1.0) * z * cur - (lf + mf) * r0 * prev) * r1 / (lf - mf + 1.0)
            };
            prev = cur;
            cur = next;
        }
    }
    out
}

pub fn ylm(l: usize, m: i64, a: &[Complex64]) -> Complex64 {
    ylm_table(l, a)[ylm_index(l, m)]
}
