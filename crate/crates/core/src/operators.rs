//! Dense operators on vertex and edge functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{c, max_abs, CMat, C64, ONE, ZERO};

/// Dense operators are refused above this many oriented edges.
pub const MAX_DENSE_EDGES: usize = 5000;

/// Distance from `±1` below which a parameter is flagged as near-singular.
pub const NEAR_UNIT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Basis {
    Vertex,
    Edge,
    /// Functions on `W_n`.
    District(usize),
}

/// A matrix together with the bases of its domain and codomain.
#[derive(Clone, Debug)]
pub struct LabeledOperator {
    pub matrix: CMat,
    pub domain: Basis,
    pub codomain: Basis,
}

impl LabeledOperator {
    pub fn new(matrix: CMat, domain: Basis, codomain: Basis) -> Self {
        Self { matrix, domain, codomain }
    }

    /// `self ∘ rhs`, checking that the bases line up.
    pub fn compose(&self, rhs: &LabeledOperator) -> Result<LabeledOperator> {
        if self.domain != rhs.codomain || self.matrix.ncols() != rhs.matrix.nrows() {
            return Err(Error::Shape(format!(
                "cannot compose {:?}->{:?} after {:?}->{:?}",
                self.domain, self.codomain, rhs.domain, rhs.codomain
            )));
        }
        Ok(LabeledOperator::new(self.matrix.dot(&rhs.matrix), rhs.domain, self.codomain))
    }

    pub fn sub(&self, rhs: &LabeledOperator) -> Result<LabeledOperator> {
        if self.domain != rhs.domain || self.codomain != rhs.codomain {
            return Err(Error::Shape("difference of operators on different bases".into()));
        }
        Ok(LabeledOperator::new(&self.matrix - &rhs.matrix, self.domain, self.codomain))
    }

    pub fn max_entry(&self) -> f64 {
        max_abs(self.matrix.iter())
    }
}

pub fn ensure_dense(g: &Graph) -> Result<()> {
    if g.num_edges() > MAX_DENSE_EDGES {
        return Err(Error::TooLarge { edges: g.num_edges(), limit: MAX_DENSE_EDGES });
    }
    Ok(())
}

fn check_z(z: C64) -> Result<()> {
    if z == ZERO || !z.is_finite() {
        return Err(Error::ZeroParameter);
    }
    Ok(())
}

pub fn near_unit(z: C64) -> bool {
    (z - ONE).norm() < NEAR_UNIT_TOL || (z + ONE).norm() < NEAR_UNIT_TOL
}

/// Adjacency matrix `Σ`.
pub fn neighbor_sum(g: &Graph) -> Result<LabeledOperator> {
    ensure_dense(g)?;
    let n = g.num_vertices();
    let mut m = CMat::zeros((n, n));
    for e in 0..g.num_edges() {
        let (x, y) = g.edge(e);
        m[[x, y]] = ONE;
    }
    Ok(LabeledOperator::new(m, Basis::Vertex, Basis::Vertex))
}

/// `Δ = (1 + q)^{-1} Σ`.
pub fn neighbor_avg(g: &Graph) -> Result<LabeledOperator> {
    let mut s = neighbor_sum(g)?;
    for (x, mut row) in s.matrix.rows_mut().into_iter().enumerate() {
        row /= c(g.degree(x) as f64, 0.0);
    }
    Ok(s)
}

fn vertex_diag(g: &Graph, f: impl Fn(usize) -> C64) -> CMat {
    let n = g.num_vertices();
    let mut m = CMat::zeros((n, n));
    for x in 0..n {
        m[[x, x]] = f(x);
    }
    m
}

/// `ρ_z = diag(z + q/z)`.
pub fn rescale(g: &Graph, z: C64) -> Result<LabeledOperator> {
    check_z(z)?;
    ensure_dense(g)?;
    let m = vertex_diag(g, |x| z + g.q(x) as f64 / z);
    Ok(LabeledOperator::new(m, Basis::Vertex, Basis::Vertex))
}

/// `M_z = diag((z + q/z) / (1 + q))`.
pub fn local_tweak(g: &Graph, z: C64) -> Result<LabeledOperator> {
    check_z(z)?;
    ensure_dense(g)?;
    let m = vertex_diag(g, |x| (z + g.q(x) as f64 / z) / g.degree(x) as f64);
    Ok(LabeledOperator::new(m, Basis::Vertex, Basis::Vertex))
}

/// Turn sum `S`: `(S h)(e) = Σ_{a ⌢ e} h(a)`.
pub fn turn_sum(g: &Graph) -> Result<LabeledOperator> {
    ensure_dense(g)?;
    let m = g.num_edges();
    let mut s = CMat::zeros((m, m));
    for e in 0..m {
        for &a in g.turns_into(e) {
            s[[e, a]] = ONE;
        }
    }
    Ok(LabeledOperator::new(s, Basis::Edge, Basis::Edge))
}

/// `(G_z f)(e) = f(init e) - z^{-1} f(term e)`.
pub fn twisted_gradient(g: &Graph, z: C64) -> Result<LabeledOperator> {
    check_z(z)?;
    ensure_dense(g)?;
    let mut m = CMat::zeros((g.num_edges(), g.num_vertices()));
    let zi = z.inv();
    for e in 0..g.num_edges() {
        let (x, y) = g.edge(e);
        m[[e, x]] += ONE;
        m[[e, y]] -= zi;
    }
    Ok(LabeledOperator::new(m, Basis::Vertex, Basis::Edge))
}

/// `(I h)(x) = Σ_{term e = x} h(e)`.
pub fn in_sum(g: &Graph) -> Result<LabeledOperator> {
    ensure_dense(g)?;
    let mut m = CMat::zeros((g.num_vertices(), g.num_edges()));
    for e in 0..g.num_edges() {
        m[[g.term(e), e]] = ONE;
    }
    Ok(LabeledOperator::new(m, Basis::Edge, Basis::Vertex))
}

/// `(ι f)(e) = f(init e)`.
pub fn inclusion(g: &Graph) -> Result<LabeledOperator> {
    ensure_dense(g)?;
    let mut m = CMat::zeros((g.num_edges(), g.num_vertices()));
    for e in 0..g.num_edges() {
        m[[e, g.init(e)]] = ONE;
    }
    Ok(LabeledOperator::new(m, Basis::Vertex, Basis::Edge))
}

/// Gram matrix of the bilinear form `B(f, g) = Σ_e f(e) g(op e)`.
pub fn edge_form(g: &Graph) -> Result<CMat> {
    ensure_dense(g)?;
    let m = g.num_edges();
    let mut b = CMat::zeros((m, m));
    for e in 0..m {
        b[[e, g.op(e)]] = ONE;
    }
    Ok(b)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub z: [f64; 2],
    /// Max entry of `(S - z) G_z - ι (Σ - ρ_z)`.
    pub residual: f64,
    /// Max entry of `I G_z - (Σ - z^{-1} D)` with `D` the degree matrix.
    pub in_sum_residual: f64,
    pub near_unit: bool,
}

pub fn verify_operator_identity(g: &Graph, z: C64) -> Result<IdentityReport> {
    let s = turn_sum(g)?;
    let gz = twisted_gradient(g, z)?;
    let sigma = neighbor_sum(g)?;
    let rho = rescale(g, z)?;
    let iota = inclusion(g)?;

    let mut s_minus_z = s.clone();
    for i in 0..g.num_edges() {
        s_minus_z.matrix[[i, i]] -= z;
    }
    let lhs = s_minus_z.compose(&gz)?;
    let rhs = iota.compose(&sigma.sub(&rho)?)?;
    let residual = lhs.sub(&rhs)?.max_entry();

    let deg = vertex_diag(g, |x| c(g.degree(x) as f64, 0.0) / z);
    let lhs2 = in_sum(g)?.compose(&gz)?;
    let in_sum_residual = max_abs((&lhs2.matrix - &(&sigma.matrix - &deg)).iter());

    Ok(IdentityReport { z: [z.re, z.im], residual, in_sum_residual, near_unit: near_unit(z) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::corpus;
    use crate::linalg::{eigenvalues, rank, CVec};
    use proptest::prelude::*;

    #[test]
    fn neighbor_sum_of_constant_is_degree() {
        let g = corpus::graph("k23").unwrap();
        let s = neighbor_sum(&g).unwrap();
        let one = CVec::from_elem(5, ONE);
        let d: Vec<f64> = s.matrix.dot(&one).iter().map(|v| v.re).collect();
        assert_eq!(d, vec![3.0, 3.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn neighbor_avg_fixes_constants() {
        let g = corpus::graph("petersen").unwrap();
        let a = neighbor_avg(&g).unwrap();
        let one = CVec::from_elem(10, ONE);
        assert!(max_abs((a.matrix.dot(&one) - &one).iter()) < 1e-15);
    }

    #[test]
    fn local_tweak_k4_at_two() {
        let g = corpus::graph("k4").unwrap();
        let m = local_tweak(&g, c(2.0, 0.0)).unwrap();
        for x in 0..4 {
            assert_eq!(m.matrix[[x, x]], c(1.0, 0.0));
        }
    }

    #[test]
    fn zero_parameter_rejected() {
        let g = corpus::graph("c3").unwrap();
        assert!(matches!(rescale(&g, ZERO), Err(Error::ZeroParameter)));
        assert!(matches!(twisted_gradient(&g, ZERO), Err(Error::ZeroParameter)));
        assert!(verify_operator_identity(&g, ZERO).is_err());
    }

    #[test]
    fn near_unit_flag() {
        let g = corpus::graph("c4").unwrap();
        let r = verify_operator_identity(&g, c(1.0 + 1e-8, 0.0)).unwrap();
        assert!(r.near_unit);
        assert!(!verify_operator_identity(&g, c(0.5, 0.5)).unwrap().near_unit);
    }

    #[test]
    fn turn_sum_on_c3_is_permutation_with_cube_roots() {
        let g = corpus::graph("c3").unwrap();
        let s = turn_sum(&g).unwrap().matrix;
        for r in s.rows() {
            assert_eq!(r.iter().filter(|v| **v == ONE).count(), 1);
        }
        let ev = eigenvalues(&s).unwrap();
        for v in ev {
            assert!((v.powi(3) - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn turn_sum_injective_and_b_selfadjoint() {
        for (_, g) in corpus::all() {
            let s = turn_sum(&g).unwrap().matrix;
            assert_eq!(rank(&s, 1e-10).unwrap(), g.num_edges());
            let b = edge_form(&g).unwrap();
            // B(Sf, h) = B(f, Sh) for all f, h  <=>  Sᵀ B = B S.
            assert_eq!(s.t().dot(&b), b.dot(&s));
        }
    }

    #[test]
    fn compose_checks_bases() {
        let g = corpus::graph("c3").unwrap();
        let s = turn_sum(&g).unwrap();
        let sig = neighbor_sum(&g).unwrap();
        assert!(s.compose(&sig).is_err());
        assert!(in_sum(&g).unwrap().compose(&inclusion(&g).unwrap()).is_ok());
    }

    proptest! {
        #[test]
        fn identity_holds_for_any_z(re in -4.0f64..4.0, im in -4.0f64..4.0, which in 0usize..5) {
            let z = c(re, im);
            prop_assume!(z.norm() > 0.05);
            let g = corpus::graph(corpus::NAMES[which]).unwrap();
            let r = verify_operator_identity(&g, z).unwrap();
            let scale = 1.0 + z.norm() + z.inv().norm();
            prop_assert!(r.residual <= 1e-12 * scale);
            prop_assert!(r.in_sum_residual <= 1e-12 * scale);
        }
    }
}
