//! Thin dense helpers over `ndarray` + LAPACK.

use ndarray::{concatenate, s, Array1, Array2, Axis};
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    Array2::from_diag_elem(n, ONE)
}

pub fn diag(d: &[C64]) -> CMat {
    Array2::from_diag(&Array1::from(d.to_vec()))
}

/// Largest entry modulus; 0 for an empty array.
pub fn max_abs<'a, I: IntoIterator<Item = &'a C64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.norm()))
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (vals, _) = a.eig().map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(vals.to_vec())
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let (_, s, _) = a.svd(false, false).map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(s.to_vec())
}

/// Numerical rank: singular values below `rel_tol * sigma_max` count as zero.
pub fn rank(a: &CMat, rel_tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * smax).count())
}

/// Rank against an absolute threshold.
pub fn rank_abs(a: &CMat, abs_tol: f64) -> Result<usize> {
    Ok(singular_values(a)?.iter().filter(|&&v| v > abs_tol).count())
}

/// Orthonormal basis (as columns) of the numerical null space.
pub fn null_space(a: &CMat, rel_tol: f64) -> Result<CMat> {
    null_space_scaled(a, rel_tol, 0.0)
}

/// Null space with singular values cut at `rel_tol * max(σ_max, scale)`.
pub fn null_space_scaled(a: &CMat, rel_tol: f64, scale: f64) -> Result<CMat> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return Ok(eye(n));
    }
    let (_, s, vt) = a.svd(false, true).map_err(|e| Error::Linalg(e.to_string()))?;
    let vt = vt.ok_or_else(|| Error::Linalg("svd returned no right vectors".into()))?;
    let smax = s.first().copied().unwrap_or(0.0).max(scale);
    let r = if smax == 0.0 {
        0
    } else {
        s.iter().filter(|&&v| v > rel_tol * smax).count()
    };
    let rows = vt.slice(s![r.., ..]);
    Ok(rows.t().mapv(|v| v.conj()))
}

/// Basis of `null(A - z)`, thresholded against `‖A‖` as well as `‖A - z‖`
/// so that `A ≈ z I` yields the whole space.
pub fn eigenspace(a: &CMat, z: C64, rel_tol: f64) -> Result<CMat> {
    let scale = singular_values(a)?.first().copied().unwrap_or(0.0);
    null_space_scaled(&shift(a, z), rel_tol, scale)
}

/// Dimension of the intersection of two column spans.
pub fn intersection_dim(a: &CMat, b: &CMat, rel_tol: f64) -> Result<usize> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Ok(0);
    }
    let joined = concatenate(Axis(1), &[a.view(), b.view()])
        .map_err(|e| Error::Shape(e.to_string()))?;
    Ok(a.ncols() + b.ncols() - rank(&joined, rel_tol)?)
}

pub fn matrix_power(a: &CMat, k: usize) -> CMat {
    let mut out = eye(a.nrows());
    for _ in 0..k {
        out = out.dot(a);
    }
    out
}

pub fn shift(a: &CMat, z: C64) -> CMat {
    a - &(eye(a.nrows()) * z)
}

/// Groups values whose single-linkage distance is within `tol`, returning
/// `(mean, members)` sorted by (re, im) of the mean.
pub fn cluster(values: &[C64], tol: f64) -> Vec<(C64, Vec<C64>)> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<C64>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(values[i]);
    }
    let mut out: Vec<(C64, Vec<C64>)> = groups
        .into_values()
        .map(|m| {
            let mean = m.iter().sum::<C64>() / m.len() as f64;
            (mean, m)
        })
        .collect();
    out.sort_by(|a, b| cmp_c64(&a.0, &b.0));
    out
}

/// Lexicographic (re, im) order with a small snap so that conjugate pairs
/// and repeated real parts sort stably.
pub fn cmp_c64(a: &C64, b: &C64) -> std::cmp::Ordering {
    const SNAP: f64 = 1e-9;
    if (a.re - b.re).abs() > SNAP {
        a.re.total_cmp(&b.re)
    } else {
        a.im.total_cmp(&b.im)
    }
}

pub fn from_real(a: &Array2<f64>) -> CMat {
    a.mapv(|v| c(v, 0.0))
}
