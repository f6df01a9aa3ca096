//! Truncated matrices of the Euclidean-algebra operators `X_k`, `J_kl` and of the
//! annihilation operators `A_k`: Fourier modes for `d = 1`, spherical harmonics for `d = 2`.
//!
//! Position operators change the degree by one, so identities are asserted only on the
//! interior block of degrees unaffected by the cutoff.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{fourier_mode, ylm_index, ylm_table};
use crate::model::ModelParams;
use crate::special::sinhc;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisLabel {
    /// `e_n = e^{inθ}/√(2π)`.
    Fourier(i64),
    /// Complex spherical harmonic `Y_{l,m}`.
    Harmonic { l: usize, m: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub dim: usize,
    /// `d = 1`: largest `|n|`; `d = 2`: largest degree `L`.
    pub cutoff: usize,
    pub interior_cutoff: usize,
}

impl BasisSpec {
    pub fn new(dim: usize, cutoff: usize, interior_cutoff: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if cutoff < 2 {
            return Err(Error::InvalidParameter(format!("cutoff must be at least 2, got {cutoff}")));
        }
        if interior_cutoff + 2 > cutoff {
            return Err(Error::InvalidParameter(format!(
                "interior_cutoff {interior_cutoff} must not exceed cutoff − 2 = {}",
                cutoff - 2
            )));
        }
        Ok(Self { dim, cutoff, interior_cutoff })
    }

    /// Basis with `interior_cutoff = cutoff − 2`.
    pub fn with_cutoff(dim: usize, cutoff: usize) -> Result<Self> {
        Self::new(dim, cutoff, cutoff.saturating_sub(2))
    }

    pub fn size(&self) -> usize {
        match self.dim {
            1 => 2 * self.cutoff + 1,
            _ => (self.cutoff + 1) * (self.cutoff + 1),
        }
    }

    pub fn label(&self, i: usize) -> BasisLabel {
        match self.dim {
            1 => BasisLabel::Fourier(i as i64 - self.cutoff as i64),
            _ => {
                let l = (i as f64).sqrt().floor() as usize;
                let l = if (l + 1) * (l + 1) <= i { l + 1 } else { l };
                BasisLabel::Harmonic { l, m: i as i64 - (l * l + l) as i64 }
            }
        }
    }

    pub fn labels(&self) -> Vec<BasisLabel> {
        (0..self.size()).map(|i| self.label(i)).collect()
    }

    pub fn index(&self, label: BasisLabel) -> Option<usize> {
        match (self.dim, label) {
            (1, BasisLabel::Fourier(n)) if n.unsigned_abs() as usize <= self.cutoff => {
                Some((n + self.cutoff as i64) as usize)
            }
            (2, BasisLabel::Harmonic { l, m }) if l <= self.cutoff && m.unsigned_abs() as usize <= l => {
                Some(ylm_index(l, m))
            }
            _ => None,
        }
    }

    /// `|n|` for Fourier modes, `l` for harmonics.
    pub fn degree(&self, i: usize) -> usize {
        match self.label(i) {
            BasisLabel::Fourier(n) => n.unsigned_abs() as usize,
            BasisLabel::Harmonic { l, .. } => l,
        }
    }

    /// Eigenvalue of `J̃² = J²/ħ²` on basis vector `i`.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        let l = self.degree(i) as f64;
        l * (l + self.dim as f64 - 1.0)
    }

    /// All basis functions evaluated (polynomially continued) at `a`.
    pub fn eval_all(&self, a: &[Complex64]) -> Vec<Complex64> {
        match self.dim {
            1 => (0..self.size())
                .map(|i| match self.label(i) {
                    BasisLabel::Fourier(n) => fourier_mode(n, a),
                    _ => unreachable!(),
                })
                .collect(),
            _ => ylm_table(self.cutoff, a),
        }
    }

    /// Interior degree for an identity whose products contain `x_factors` position operators.
    pub fn interior_for(&self, x_factors: usize) -> usize {
        self.interior_cutoff.min(self.cutoff.saturating_sub(x_factors.saturating_sub(1)))
    }
}

/// Sparse entries `(row, col, value)` of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseMatrix {
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.n];
        for &(r, c, x) in &self.entries {
            out[r] += x * v[c];
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for &(r, c, x) in &self.entries {
            m[(r, c)] += x;
        }
        m
    }

    fn combine(a: &SparseMatrix, ca: Complex64, b: &SparseMatrix, cb: Complex64) -> SparseMatrix {
        let mut entries: Vec<_> = a.entries.iter().map(|&(r, c, x)| (r, c, ca * x)).collect();
        entries.extend(b.entries.iter().map(|&(r, c, x)| (r, c, cb * x)));
        SparseMatrix { n: a.n, entries }
    }
}

/// Position operators `X_k` on the unit sphere as sparse matrices.
pub fn position_operators(spec: &BasisSpec) -> Vec<SparseMatrix> {
    let n = spec.size();
    let mut plus = SparseMatrix { n, entries: Vec::new() };
    let mut minus = SparseMatrix { n, entries: Vec::new() };
    if spec.dim == 1 {
        // (X₁ + iX₂) e_n = e_{n+1}
        let c = spec.cutoff as i64;
        for k in -c..c {
            let (from, to) = ((k + c) as usize, (k + 1 + c) as usize);
            plus.entries.push((to, from, ONE));
            minus.entries.push((from, to, ONE));
        }
        let half = Complex64::new(0.5, 0.0);
        let x1 = SparseMatrix::combine(&plus, half, &minus, half);
        let x2 = SparseMatrix::combine(&plus, -0.5 * I, &minus, 0.5 * I);
        return vec![x1, x2];
    }
    let lmax = spec.cutoff;
    let mut z = SparseMatrix { n, entries: Vec::new() };
    for l in 0..=lmax {
        let lf = l as f64;
        for m in -(l as i64)..=(l as i64) {
            let mf = m as f64;
            let col = ylm_index(l, m);
            let up = (2.0 * lf + 1.0) * (2.0 * lf + 3.0);
            let down = (2.0 * lf - 1.0) * (2.0 * lf + 1.0);
            if l < lmax {
                let a = ((lf + 1.0 - mf) * (lf + 1.0 + mf) / up).sqrt();
                z.entries.push((ylm_index(l + 1, m), col, Complex64::new(a, 0.0)));
                let p = -((lf + mf + 1.0) * (lf + mf + 2.0) / up).sqrt();
                plus.entries.push((ylm_index(l + 1, m + 1), col, Complex64::new(p, 0.0)));
                let q = ((lf - mf + 1.0) * (lf - mf + 2.0) / up).sqrt();
                minus.entries.push((ylm_index(l + 1, m - 1), col, Complex64::new(q, 0.0)));
            }
            if l > 0 {
                if (m.unsigned_abs() as usize) < l {
                    let a = ((lf - mf) * (lf + mf) / down).sqrt();
                    z.entries.push((ylm_index(l - 1, m), col, Complex64::new(a, 0.0)));
                }
                if m < l as i64 - 1 {
                    let p = ((lf - mf) * (lf - mf - 1.0) / down).sqrt();
                    plus.entries.push((ylm_index(l - 1, m + 1), col, Complex64::new(p, 0.0)));
                }
                if m > -(l as i64 - 1) {
                    let q = -((lf + mf) * (lf + mf - 1.0) / down).sqrt();
                    minus.entries.push((ylm_index(l - 1, m - 1), col, Complex64::new(q, 0.0)));
                }
            }
        }
    }
    let half = Complex64::new(0.5, 0.0);
    let x1 = SparseMatrix::combine(&plus, half, &minus, half);
    let x2 = SparseMatrix::combine(&plus, -0.5 * I, &minus, 0.5 * I);
    vec![x1, x2, z]
}

/// Truncated operator matrices in physical units.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub spec: BasisSpec,
    pub params: ModelParams,
    pub x: Vec<CMatrix>,
    /// `J[k][l]`, antisymmetric in `(k, l)`.
    pub j: Vec<Vec<CMatrix>>,
    pub j2: CMatrix,
    /// `√(J² + ħ²(d−1)²/4)`.
    pub jscalar: CMatrix,
    pub p: Vec<CMatrix>,
    /// Filled by [`build_annihilation`].
    pub a: Vec<CMatrix>,
}

impl OperatorSet {
    fn n(&self) -> usize {
        self.spec.dim + 1
    }

    fn diag(&self, f: impl Fn(usize) -> Complex64) -> CMatrix {
        let n = self.spec.size();
        CMatrix::from_fn(n, n, |r, c| if r == c { f(r) } else { ZERO })
    }

    fn identity(&self) -> CMatrix {
        CMatrix::identity(self.spec.size(), self.spec.size())
    }

    /// `X² = Σ_k X_k²`.
    pub fn x_squared(&self) -> CMatrix {
        self.x.iter().map(|x| x * x).fold(CMatrix::zeros(self.spec.size(), self.spec.size()), |acc, m| acc + m)
    }

    /// `W_kl = X² J_kl − J_km X_m X_l + J_lm X_m X_k`.
    pub fn w(&self, k: usize, l: usize) -> CMatrix {
        let mut out = self.x_squared() * &self.j[k][l];
        for m in 0..self.n() {
            out -= &self.j[k][m] * &self.x[m] * &self.x[l];
            out += &self.j[l][m] * &self.x[m] * &self.x[k];
        }
        out
    }

    /// `C = Σ_{k<l} W_kl²`.
    pub fn casimir(&self) -> CMatrix {
        let size = self.spec.size();
        let mut c = CMatrix::zeros(size, size);
        for k in 0..self.n() {
            for l in (k + 1)..self.n() {
                let w = self.w(k, l);
                c += &w * &w;
            }
        }
        c
    }
}

pub fn build_basis(spec: &BasisSpec, params: &ModelParams) -> Result<OperatorSet> {
    if params.d != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: params.d });
    }
    let size = spec.size();
    let (r, hbar) = (params.r, params.hbar);
    let x: Vec<CMatrix> = position_operators(spec).iter().map(|s| s.to_dense() * Complex64::new(r, 0.0)).collect();
    let n = spec.dim + 1;
    let mut j = vec![vec![CMatrix::zeros(size, size); n]; n];
    if spec.dim == 1 {
        // J₁₂ = iħ ∂_θ, so J₁₂ e_n = −ħ n e_n
        let j12 = CMatrix::from_fn(size, size, |a, b| {
            if a == b {
                match spec.label(a) {
                    BasisLabel::Fourier(m) => Complex64::new(-hbar * m as f64, 0.0),
                    _ => unreachable!(),
                }
            } else {
                ZERO
            }
        });
        j[1][0] = -&j12;
        j[0][1] = j12;
    } else {
        // J_kl = −ħ ε_klm L_m with the standard L = −i x × ∇
        let mut lz = CMatrix::zeros(size, size);
        let mut lplus = CMatrix::zeros(size, size);
        let mut lminus = CMatrix::zeros(size, size);
        for l in 0..=spec.cutoff {
            let lf = l as f64;
            for m in -(l as i64)..=(l as i64) {
                let mf = m as f64;
                let col = ylm_index(l, m);
                lz[(col, col)] = Complex64::new(mf, 0.0);
                if m < l as i64 {
                    lplus[(ylm_index(l, m + 1), col)] = Complex64::new((lf * (lf + 1.0) - mf * (mf + 1.0)).sqrt(), 0.0);
                }
                if m > -(l as i64) {
                    lminus[(ylm_index(l, m - 1), col)] = Complex64::new((lf * (lf + 1.0) - mf * (mf - 1.0)).sqrt(), 0.0);
                }
            }
        }
        let lx = (&lplus + &lminus) * Complex64::new(0.5, 0.0);
        let ly = (&lplus - &lminus) * (-0.5 * I);
        let lvec = [lx, ly, lz];
        let h = Complex64::new(hbar, 0.0);
        for (k, l, m) in [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
            j[k][l] = &lvec[m] * (-h);
            j[l][k] = &lvec[m] * h;
        }
    }
    let mut ops = OperatorSet {
        spec: *spec,
        params: *params,
        x,
        j,
        j2: CMatrix::zeros(size, size),
        jscalar: CMatrix::zeros(size, size),
        p: Vec::new(),
        a: Vec::new(),
    };
    let shift = hbar * hbar * (spec.dim as f64 - 1.0).powi(2) / 4.0;
    ops.j2 = ops.diag(|i| Complex64::new(hbar * hbar * spec.eigenvalue(i), 0.0));
    ops.jscalar = ops.diag(|i| Complex64::new((hbar * hbar * spec.eigenvalue(i) + shift).sqrt(), 0.0));
    ops.p = (0..n)
        .map(|k| {
            let mut acc = CMatrix::zeros(size, size);
            for l in 0..n {
                acc += &ops.j[k][l] * &ops.x[l];
            }
            acc / Complex64::new(r * r, 0.0)
        })
        .collect();
    Ok(ops)
}

fn exponent_guard(spec: &BasisSpec, tau: f64) -> Result<()> {
    // largest exponent difference between adjacent degrees
    let worst = tau.abs() * (2.0 * spec.cutoff as f64 + spec.dim as f64) / 2.0;
    if worst > 700.0 {
        return Err(Error::Overflow(format!(
            "τ·(2L + d)/2 = {worst:.1} overflows; reduce the cutoff or τ"
        )));
    }
    Ok(())
}

/// `A_k = e^{−τJ̃²/2} X_k e^{τJ̃²/2}`, applied entrywise to the banded `X_k`.
pub fn build_annihilation(ops: &OperatorSet, tau: f64) -> Result<OperatorSet> {
    exponent_guard(&ops.spec, tau)?;
    let spec = ops.spec;
    let a = ops
        .x
        .iter()
        .map(|x| {
            CMatrix::from_fn(x.nrows(), x.ncols(), |r, c| {
                let v = x[(r, c)];
                if v == ZERO {
                    ZERO
                } else {
                    v * (tau * (spec.eigenvalue(c) - spec.eigenvalue(r)) / 2.0).exp()
                }
            })
        })
        .collect();
    let mut out = ops.clone();
    out.a = a;
    Ok(out)
}

/// `A = e^{τ/2} [cosh(τJ̃) X + ((d−1)/2J̃) sinh(τJ̃) X + i (r²/J) sinh(τJ̃) P]` with the
/// functions of the scalar `J = ħJ̃` acting on the left.
pub fn build_annihilation_explicit(ops: &OperatorSet, tau: f64) -> Result<Vec<CMatrix>> {
    exponent_guard(&ops.spec, tau)?;
    let (r, hbar, d) = (ops.params.r, ops.params.hbar, ops.spec.dim as f64);
    let pre = (tau / 2.0).exp();
    let size = ops.spec.size();
    let coef_x = ops.diag(|i| {
        let js = ops.jscalar[(i, i)].re / hbar;
        let sh_over = tau * sinhc(Complex64::new(tau * js, 0.0)).re;
        Complex64::new(pre * ((tau * js).cosh() + (d - 1.0) / 2.0 * sh_over), 0.0)
    });
    let coef_p = ops.diag(|i| {
        let js = ops.jscalar[(i, i)].re / hbar;
        // (r²/J) sinh(τJ̃) = (r² τ / ħ) sinh(τJ̃)/(τJ̃)
        let v = r * r * tau / hbar * sinhc(Complex64::new(tau * js, 0.0)).re;
        I * pre * v
    });
    Ok((0..ops.n())
        .map(|k| {
            let mut m = &coef_x * &ops.x[k];
            m += &coef_p * &ops.p[k];
            debug_assert_eq!(m.nrows(), size);
            m
        })
        .collect())
}

/// `A = exp{τ(iJ + ħd/2)/ħ} X` with `J` the 2×2 matrix `[[0, −P²], [r², iħ(d−1)]]` on `(X, P)`.
pub fn build_annihilation_polar(ops: &OperatorSet, tau: f64) -> Result<Vec<CMatrix>> {
    exponent_guard(&ops.spec, tau)?;
    let (r, hbar, d) = (ops.params.r, ops.params.hbar, ops.spec.dim as f64);
    let size = ops.spec.size();
    let mut alpha = vec![ZERO; size];
    let mut beta = vec![ZERO; size];
    for i in 0..size {
        let p2 = hbar * hbar * ops.spec.eigenvalue(i) / (r * r);
        let jm = Matrix2::new(
            ZERO,
            Complex64::new(-p2, 0.0),
            Complex64::new(r * r, 0.0),
            I * hbar * (d - 1.0),
        );
        let k = (jm * I + Matrix2::identity() * Complex64::new(hbar * d / 2.0, 0.0)) * Complex64::new(tau / hbar, 0.0);
        let e = k.exp();
        alpha[i] = e[(0, 0)];
        beta[i] = e[(1, 0)];
    }
    let da = ops.diag(|i| alpha[i]);
    let db = ops.diag(|i| beta[i]);
    Ok((0..ops.n()).map(|k| &da * &ops.x[k] + &db * &ops.p[k]).collect())
}

/// Max absolute entry over rows and columns of degree at most `interior`.
pub fn interior_norm(spec: &BasisSpec, m: &CMatrix, interior: usize) -> f64 {
    let idx: Vec<usize> = (0..spec.size()).filter(|&i| spec.degree(i) <= interior).collect();
    let mut worst = 0.0f64;
    for &r in &idx {
        for &c in &idx {
            worst = worst.max(m[(r, c)].norm());
        }
    }
    worst
}

/// Like [`interior_norm`], with entry `(r, c)` divided by `max(1, e^{τ(λ_c − λ_r)/2})`,
/// the size of the corresponding conjugated entry.
pub fn weighted_interior_norm(spec: &BasisSpec, m: &CMatrix, interior: usize, tau: f64) -> f64 {
    let idx: Vec<usize> = (0..spec.size()).filter(|&i| spec.degree(i) <= interior).collect();
    let mut worst = 0.0f64;
    for &r in &idx {
        for &c in &idx {
            let w = (tau * (spec.eigenvalue(c) - spec.eigenvalue(r)) / 2.0).exp().max(1.0);
            worst = worst.max(m[(r, c)].norm() / w);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualReport {
    pub items: Vec<Residual>,
}

impl ResidualReport {
    fn push(&mut self, name: impl Into<String>, value: f64) {
        self.items.push(Residual { name: name.into(), value });
    }

    pub fn max(&self) -> f64 {
        self.items.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.items.iter().find(|r| r.name == name).map(|r| r.value)
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Interior residuals of the `e(d+1)` relations and the position–momentum identities.
/// Each residual is divided by `r^a ħ^b` for the powers of `X` and `J` it contains.
pub fn euclidean_algebra_check(ops: &OperatorSet) -> ResidualReport {
    let spec = &ops.spec;
    let n = ops.n();
    let (r, hbar) = (ops.params.r, ops.params.hbar);
    let ih = I * hbar;
    let sc = |m: &CMatrix, nx: usize, nj: i32| interior_norm(spec, m, spec.interior_for(nx)) / (r.powi(nx as i32) * hbar.powi(nj));
    let mut rep = ResidualReport::default();

    let (mut jj, mut xj, mut xx) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..n {
        for l in 0..n {
            for m in 0..n {
                for q in 0..n {
                    let lhs = commutator(&ops.j[k][l], &ops.j[m][q]) / ih;
                    let rhs = &ops.j[l][m] * Complex64::new(delta(k, q), 0.0)
                        + &ops.j[k][q] * Complex64::new(delta(l, m), 0.0)
                        - &ops.j[l][q] * Complex64::new(delta(k, m), 0.0)
                        - &ops.j[k][m] * Complex64::new(delta(l, q), 0.0);
                    jj = jj.max(sc(&(lhs - rhs), 0, 1));
                }
                let lhs = commutator(&ops.x[k], &ops.j[l][m]) / ih;
                let rhs = &ops.x[m] * Complex64::new(delta(k, l), 0.0) - &ops.x[l] * Complex64::new(delta(k, m), 0.0);
                xj = xj.max(sc(&(lhs - rhs), 1, 0));
            }
            xx = xx.max(sc(&commutator(&ops.x[k], &ops.x[l]), 2, 0));
        }
    }
    rep.push("[J,J]", jj);
    rep.push("[X,J]", xj);
    rep.push("[X,X]", xx);

    let id = ops.identity();
    rep.push("X^2 = r^2", sc(&(ops.x_squared() - &id * Complex64::new(r * r, 0.0)), 2, 0));

    let mut xp = 0.0f64;
    for k in 0..n {
        for l in 0..n {
            let lhs = commutator(&ops.x[k], &ops.p[l]) / ih;
            let rhs = &id * Complex64::new(delta(k, l), 0.0) - &ops.x[k] * &ops.x[l] / Complex64::new(r * r, 0.0);
            xp = xp.max(sc(&(lhs - rhs), 3, 0));
        }
    }
    rep.push("[X,P]", xp);

    let size = spec.size();
    let mut pdotx = CMatrix::zeros(size, size);
    let mut xdotp = CMatrix::zeros(size, size);
    for k in 0..n {
        pdotx += &ops.p[k] * &ops.x[k];
        xdotp += &ops.x[k] * &ops.p[k];
    }
    rep.push("P.X = 0", sc(&pdotx, 2, 1));
    rep.push("X.P = i hbar d", sc(&(xdotp - &id * (ih * spec.dim as f64)), 2, 1));

    let mut p2 = CMatrix::zeros(size, size);
    for l in 0..n {
        p2 += &ops.p[l] * &ops.p[l];
    }
    let (mut jx, mut jp) = (0.0f64, 0.0f64);
    for k in 0..n {
        let mut jxk = CMatrix::zeros(size, size);
        let mut jpk = CMatrix::zeros(size, size);
        for l in 0..n {
            jxk += &ops.j[k][l] * &ops.x[l];
            jpk += &ops.j[k][l] * &ops.p[l];
        }
        jx = jx.max(sc(&(jxk - &ops.p[k] * Complex64::new(r * r, 0.0)), 1, 1));
        let rhs = -(&p2 * &ops.x[k]) + &ops.p[k] * (ih * (spec.dim as f64 - 1.0));
        jp = jp.max(sc(&(jpk - rhs), 3, 2));
    }
    rep.push("JX = r^2 P", jx);
    rep.push("JP = -P^2 X + i hbar (d-1) P", jp);

    let w: Vec<Vec<CMatrix>> = (0..n).map(|k| (0..n).map(|l| ops.w(k, l)).collect()).collect();
    let (mut xw, mut jw) = (0.0f64, 0.0f64);
    for k in 0..n {
        for l in 0..n {
            for m in 0..n {
                xw = xw.max(sc(&(commutator(&ops.x[k], &w[l][m]) / ih), 3, 0));
                for q in 0..n {
                    let lhs = commutator(&ops.j[k][l], &w[m][q]) / ih;
                    let rhs = &w[l][m] * Complex64::new(delta(k, q), 0.0) + &w[k][q] * Complex64::new(delta(l, m), 0.0)
                        - &w[l][q] * Complex64::new(delta(k, m), 0.0)
                        - &w[k][m] * Complex64::new(delta(l, q), 0.0);
                    jw = jw.max(sc(&(lhs - rhs), 2, 1));
                }
            }
        }
    }
    rep.push("[X,W] = 0", xw);
    rep.push("[J,W]", jw);

    let mut herm = 0.0f64;
    for k in 0..n {
        herm = herm.max((&ops.x[k] - ops.x[k].adjoint()).camax() / r);
        for l in 0..n {
            herm = herm.max((&ops.j[k][l] - ops.j[k][l].adjoint()).camax() / hbar);
        }
    }
    rep.push("hermiticity", herm);
    rep
}

/// Max interior norm of `W_kl` over `k < l`, in units of `r² ħ`.
pub fn constraint_residual(ops: &OperatorSet) -> f64 {
    let spec = &ops.spec;
    let scale = ops.params.r.powi(2) * ops.params.hbar;
    let mut worst = 0.0f64;
    for k in 0..ops.n() {
        for l in (k + 1)..ops.n() {
            worst = worst.max(interior_norm(spec, &ops.w(k, l), spec.interior_for(2)) / scale);
        }
    }
    worst
}

/// Interior norm of the Casimir `C`, in units of `r⁴ ħ²`.
pub fn casimir_residual(ops: &OperatorSet) -> f64 {
    let spec = &ops.spec;
    interior_norm(spec, &ops.casimir(), spec.interior_for(4)) / (ops.params.r.powi(4) * ops.params.hbar.powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LxReport {
    /// `C − X²(L·X)²` in units of `r⁴ħ²`.
    pub casimir_minus_lx: f64,
    /// `L·X` in units of `rħ`.
    pub l_dot_x: f64,
    /// Largest `‖W_kl − W_kl†‖` over the interior block.
    pub w_hermiticity: f64,
}

/// `d = 2`: `C = X² (L·X)²` with `L = (J₃₂, J₁₃, J₂₁)`.
pub fn lx_casimir_check_d2(ops: &OperatorSet) -> Result<LxReport> {
    if ops.spec.dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ops.spec.dim });
    }
    let spec = &ops.spec;
    let (r, hbar) = (ops.params.r, ops.params.hbar);
    let l = [&ops.j[2][1], &ops.j[0][2], &ops.j[1][0]];
    let size = spec.size();
    let mut lx = CMatrix::zeros(size, size);
    for k in 0..3 {
        lx += l[k] * &ops.x[k];
    }
    let rhs = ops.x_squared() * &lx * &lx;
    let c = ops.casimir();
    let mut herm = 0.0f64;
    for k in 0..3 {
        for q in (k + 1)..3 {
            let w = ops.w(k, q);
            herm = herm.max(interior_norm(spec, &(&w - w.adjoint()), spec.interior_for(2)) / (r * r * hbar));
        }
    }
    Ok(LxReport {
        casimir_minus_lx: interior_norm(spec, &(c - rhs), spec.interior_for(4)) / (r.powi(4) * hbar * hbar),
        l_dot_x: interior_norm(spec, &lx, spec.interior_for(1)) / (r * hbar),
        w_hermiticity: herm,
    })
}

/// Residuals of `Σ A_k² = r²`, `[A_k, A_l] = 0`, agreement of the conjugation, explicit and
/// polar constructions, and the non-normality `‖[A_k, A_k†]‖` (reported, expected positive).
/// Entries are measured relative to the conjugation weight, see [`weighted_interior_norm`].
pub fn annihilation_check(ops: &OperatorSet, tau: f64) -> Result<ResidualReport> {
    let with_a = build_annihilation(ops, tau)?;
    let explicit = build_annihilation_explicit(ops, tau)?;
    let polar = build_annihilation_polar(ops, tau)?;
    let spec = &ops.spec;
    let r = ops.params.r;
    let size = spec.size();
    let wn = |m: &CMatrix, nx: usize| weighted_interior_norm(spec, m, spec.interior_for(nx), tau);
    let mut a2 = CMatrix::zeros(size, size);
    let (mut comm, mut exp_dev, mut pol_dev, mut non_normal) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..ops.n() {
        let a = &with_a.a[k];
        a2 += a * a;
        for l in 0..ops.n() {
            comm = comm.max(wn(&commutator(a, &with_a.a[l]), 2) / (r * r));
        }
        exp_dev = exp_dev.max(wn(&(&explicit[k] - a), 1) / r);
        pol_dev = pol_dev.max(wn(&(&polar[k] - a), 1) / r);
        non_normal = non_normal.max(interior_norm(spec, &commutator(a, &a.adjoint()), spec.interior_for(2)) / (r * r));
    }
    let id = CMatrix::identity(size, size) * Complex64::new(r * r, 0.0);
    let mut rep = ResidualReport::default();
    rep.push("A^2 = r^2", wn(&(a2 - id), 2) / (r * r));
    rep.push("[A,A] = 0", comm);
    rep.push("explicit vs conjugation", exp_dev);
    rep.push("polar vs conjugation", pol_dev);
    rep.push("non-normality", non_normal);
    Ok(rep)
}

/// Names in [`annihilation_check`] that must vanish.
pub const ANNIHILATION_IDENTITIES: [&str; 4] =
    ["A^2 = r^2", "[A,A] = 0", "explicit vs conjugation", "polar vs conjugation"];
