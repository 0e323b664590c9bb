//! Dense complex linear algebra helpers on top of `faer`.

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = Mat<c64>;

/// Imaginary unit.
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Real and complex zero/one shortcuts.
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// e^{iθ}.
#[inline]
pub fn cis(theta: f64) -> c64 {
    c64::new(theta.cos(), theta.sin())
}

/// Conjugate transpose as an owned matrix.
pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

/// Diagonal matrix from real entries.
pub fn real_diagonal(d: &[f64]) -> CMat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { c64::new(d[i], 0.0) } else { ZERO })
}

/// Diagonal matrix from complex entries.
pub fn complex_diagonal(d: &[c64]) -> CMat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { ZERO })
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// max |(A†A − 1)_{ab}|.
pub fn unitarity_error(u: MatRef<'_, c64>) -> f64 {
    let g = u.adjoint() * u;
    max_abs_diff(g.as_ref(), CMat::identity(u.nrows(), u.ncols()).as_ref())
}

/// max |A − A†|.
pub fn hermiticity_error(a: MatRef<'_, c64>) -> f64 {
    let ah = adjoint(a);
    max_abs_diff(a, ah.as_ref())
}

/// Largest singular value.
pub fn operator_norm(a: MatRef<'_, c64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let s = a.singular_values().map_err(|e| Error::LinAlg(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let h = Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinAlg(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().map(|x| x.re).collect();
    Ok((values, evd.U().to_owned()))
}

/// V f(D) V† for a Hermitian matrix with spectral decomposition V D V†.
pub fn hermitian_function(a: MatRef<'_, c64>, f: impl Fn(f64) -> c64) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(a)?;
    Ok(apply_spectral(&values, vectors.as_ref(), f))
}

/// V f(D) V† from a precomputed decomposition.
pub fn apply_spectral(values: &[f64], vectors: MatRef<'_, c64>, f: impl Fn(f64) -> c64) -> CMat {
    let fd: Vec<c64> = values.iter().map(|&x| f(x)).collect();
    let scaled = Mat::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * fd[j]);
    &scaled * vectors.adjoint()
}

/// e^{−iHt} for Hermitian H.
pub fn expm_hermitian(h: MatRef<'_, c64>, t: f64) -> Result<CMat> {
    hermitian_function(h, |x| cis(-x * t))
}

/// Matrix power by repeated squaring.
pub fn matrix_power(u: MatRef<'_, c64>, power: usize) -> CMat {
    let mut result = CMat::identity(u.nrows(), u.ncols());
    let mut base = u.to_owned();
    let mut p = power;
    while p > 0 {
        if p & 1 == 1 {
            result = &result * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Copies a faer matrix into nalgebra.
pub fn to_nalgebra(a: MatRef<'_, c64>) -> nalgebra::DMatrix<c64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Copies a nalgebra matrix into faer.
pub fn from_nalgebra(a: &nalgebra::DMatrix<c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Principal value of an angle in (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut x = theta.rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}

/// Distance between two angles on the circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Haar-random unitary via QR of a complex Ginibre matrix with phase fix.
pub fn haar_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = random_ginibre(dim, rng);
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    Mat::from_fn(dim, dim, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q[(i, j)] * phase
    })
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE normalisation up to scale).
pub fn random_hermitian<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = random_ginibre(dim, rng);
    Mat::from_fn(dim, dim, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

fn random_ginibre<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    use rand::distr::Distribution;
    let normal = StandardNormal;
    Mat::from_fn(dim, dim, |_, _| c64::new(normal.sample(rng), normal.sample(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

/// Box–Muller standard normal.
struct StandardNormal;

impl rand::distr::Distribution<f64> for StandardNormal {
    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(16, &mut rng);
        assert!(unitarity_error(u.as_ref()) < 1e-12);
    }

    #[test]
    fn expm_matches_two_level_formula() {
        let sx = Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        let u = expm_hermitian(sx.as_ref(), 0.3).unwrap();
        assert!((u[(0, 0)] - c64::new(0.3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - c64::new(0.0, -(0.3f64.sin()))).norm() < 1e-14);
    }

    #[test]
    fn power_by_squaring() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let u = haar_unitary(6, &mut rng);
        let mut direct = CMat::identity(6, 6);
        for _ in 0..7 {
            direct = &direct * &u;
        }
        assert!(max_abs_diff(direct.as_ref(), matrix_power(u.as_ref(), 7).as_ref()) < 1e-12);
    }

    #[test]
    fn wrap_angle_branch() {
        use std::f64::consts::PI;
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!(circle_distance(PI - 0.1, -PI + 0.1) < 0.2 + 1e-12);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let d = real_diagonal(&[1.0, -3.0, 2.0]);
        assert!((operator_norm(d.as_ref()).unwrap() - 3.0).abs() < 1e-12);
    }
}
