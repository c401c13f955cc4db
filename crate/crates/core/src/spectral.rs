//! Eigenvalue clusters, Jordan structure, equalizer spaces and pile heights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{
    cluster, eigenspace, eigenvalues, matrix_power, max_abs, null_space, null_space_scaled, rank_abs, shift,
    singular_values, CMat, C64,
};
use crate::operators::{in_sum, neighbor_sum, rescale, turn_sum, twisted_gradient};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectrumOptions {
    /// Eigenvalues within this distance are one cluster.
    pub cluster_tol: f64,
    /// Relative singular-value threshold for ranks and null spaces.
    pub rank_tol: f64,
    /// Eigenvalues of smaller modulus are counted at zero.
    pub zero_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { cluster_tol: 1e-6, rank_tol: 1e-8, zero_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenCluster {
    #[serde(serialize_with = "crate::ser::complex")]
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
    pub max_jordan_block: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub dimension: usize,
    pub clusters: Vec<EigenCluster>,
    pub spectral_radius: f64,
}

impl SpectrumReport {
    /// Clusters with nonzero value.
    pub fn nonzero(&self) -> impl Iterator<Item = &EigenCluster> {
        self.clusters.iter().filter(|c| c.value.norm() > 0.0)
    }

    /// Eigenvalues listed with algebraic multiplicity.
    pub fn expanded(&self) -> Vec<&EigenCluster> {
        self.clusters.iter().flat_map(|c| std::iter::repeat_n(c, c.algebraic)).collect()
    }
}

pub fn spectrum(a: &CMat, opts: &SpectrumOptions) -> Result<SpectrumReport> {
    let ev = eigenvalues(a)?;
    let spectral_radius = ev.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let (zeros, rest): (Vec<C64>, Vec<C64>) =
        ev.iter().partition(|v| v.norm() <= opts.zero_tol);
    let mut groups: Vec<(C64, usize)> = Vec::new();
    if !zeros.is_empty() {
        groups.push((C64::new(0.0, 0.0), zeros.len()));
    }
    groups.extend(cluster(&rest, opts.cluster_tol).into_iter().map(|(m, v)| (m, v.len())));
    groups.sort_by(|x, y| crate::linalg::cmp_c64(&x.0, &y.0));

    let mut clusters = Vec::with_capacity(groups.len());
    for (value, algebraic) in groups {
        let ranks = rank_sequence(a, value, algebraic, opts.rank_tol)?;
        clusters.push(EigenCluster {
            value,
            algebraic,
            geometric: a.nrows() - ranks[1],
            max_jordan_block: max_block(&ranks),
        });
    }
    Ok(SpectrumReport { dimension: a.nrows(), clusters, spectral_radius })
}

/// `rank((A - z)^k)` for `k = 0..=kmax`, stopping once it stabilises.
///
/// Kernels are grown by `K_k = {x : (A - z) x ∈ K_{k-1}}` rather than by
/// forming powers, so every rank decision is made at the scale of `A`.
fn rank_sequence(a: &CMat, z: C64, kmax: usize, rank_tol: f64) -> Result<Vec<usize>> {
    let n = a.nrows();
    let b = shift(a, z);
    let scale = singular_values(a)?.first().copied().unwrap_or(0.0);
    let mut ranks = vec![n];
    let mut kernel = CMat::zeros((n, 0));
    for _ in 1..=kmax + 1 {
        let complement = null_space(&kernel.t().mapv(|v| v.conj()), 0.5)?;
        let m = complement.t().mapv(|v| v.conj()).dot(&b);
        kernel = null_space_scaled(&m, rank_tol, scale)?;
        let r = n - kernel.ncols();
        let stable = r == *ranks.last().unwrap();
        ranks.push(r);
        if stable || r == 0 {
            break;
        }
    }
    Ok(ranks)
}

fn max_block(ranks: &[usize]) -> usize {
    ranks.windows(2).position(|w| w[0] == w[1]).unwrap_or(ranks.len() - 1)
}

/// Largest Jordan block of `a` at `z`. `z` must be within the cluster
/// tolerance of a computed eigenvalue, or `a - z` must be numerically
/// singular (defective eigenvalues are computed only to about `ε^{1/k}`).
pub fn jordan_detect(a: &CMat, z: C64, opts: &SpectrumOptions) -> Result<usize> {
    let ranks = rank_sequence(a, z, a.nrows(), opts.rank_tol)?;
    if ranks[1] == a.nrows() {
        let ev = eigenvalues(a)?;
        let near = |v: &C64| {
            if z.norm() <= opts.zero_tol {
                v.norm() <= opts.zero_tol
            } else {
                (v - z).norm() <= opts.cluster_tol
            }
        };
        if !ev.iter().any(near) {
            return Err(Error::NotEigenvalue(crate::ser::fmt_c64(z)));
        }
    }
    Ok(max_block(&ranks))
}

/// Orthonormal basis of `{f : A f = B f}`.
pub fn equalizer_basis(a: &CMat, b: &CMat, rank_tol: f64) -> Result<CMat> {
    if a.dim() != b.dim() {
        return Err(Error::Shape("equalizer of operators with different shapes".into()));
    }
    null_space(&(a - b), rank_tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrespondenceRow {
    #[serde(serialize_with = "crate::ser::complex")]
    pub z: C64,
    /// False for `z` within the unit tolerance of `-1, 0, 1`.
    pub admissible: bool,
    /// `dim Eq(Σ, ρ_z)`.
    pub dim_vertex: usize,
    /// `dim null(S - z)`.
    pub dim_edge: usize,
    /// Rank of `G_z` restricted to the vertex equalizer.
    pub gradient_rank: usize,
    /// Max of `|(S - z) G_z V|` and `|G_z c I h - h|` over the bases.
    pub gradient_bijectivity_residual: f64,
    /// Max of `|c I G_z v - v|` with `c = (z - 1/z)^{-1}`.
    pub inverse_composition_residual: f64,
    pub matched: bool,
}

pub fn correspondence(g: &Graph, z: C64, opts: &SpectrumOptions, tol: f64) -> Result<CorrespondenceRow> {
    let excl = 1e-6;
    let admissible = (z - 1.0).norm() > excl && (z + 1.0).norm() > excl && z.norm() > excl;
    let s = turn_sum(g)?.matrix;
    let sigma = neighbor_sum(g)?.matrix;
    if !admissible {
        let dim_edge = eigenspace(&s, z, opts.rank_tol)?.ncols();
        let dim_vertex = if z.norm() > excl {
            equalizer_basis(&sigma, &rescale(g, z)?.matrix, opts.rank_tol)?.ncols()
        } else {
            0
        };
        return Ok(CorrespondenceRow {
            z,
            admissible,
            dim_vertex,
            dim_edge,
            gradient_rank: 0,
            gradient_bijectivity_residual: 0.0,
            inverse_composition_residual: 0.0,
            matched: true,
        });
    }
    let v = equalizer_basis(&sigma, &rescale(g, z)?.matrix, opts.rank_tol)?;
    let h = eigenspace(&s, z, opts.rank_tol)?;
    let gz = twisted_gradient(g, z)?.matrix;
    let inv = in_sum(g)?.matrix.mapv(|x| x / (z - z.inv()));

    let gv = gz.dot(&v);
    let gradient_rank = if gv.ncols() == 0 { 0 } else { rank_abs(&gv, 1e-8)? };
    let r1 = max_abs(shift(&s, z).dot(&gv).iter());
    let r2 = max_abs((gz.dot(&inv.dot(&h)) - &h).iter());
    let r3 = max_abs((inv.dot(&gv) - &v).iter());
    let gradient_bijectivity_residual = r1.max(r2);
    let matched = v.ncols() == h.ncols()
        && gradient_rank == v.ncols()
        && gradient_bijectivity_residual <= tol
        && r3 <= tol;
    Ok(CorrespondenceRow {
        z,
        admissible,
        dim_vertex: v.ncols(),
        dim_edge: h.ncols(),
        gradient_rank,
        gradient_bijectivity_residual,
        inverse_composition_residual: r3,
        matched,
    })
}

/// One row per eigenvalue cluster of `S`.
pub fn correspondence_report(g: &Graph, opts: &SpectrumOptions, tol: f64) -> Result<Vec<CorrespondenceRow>> {
    let spec = spectrum(&turn_sum(g)?.matrix, opts)?;
    spec.clusters.iter().map(|cl| correspondence(g, cl.value, opts, tol)).collect()
}

/// `P̄_n = max_e (S^n 1)(e)` for `n = 1..=n_max`, in exact integers.
pub fn pile_heights(g: &Graph, n_max: usize) -> Vec<u128> {
    let m = g.num_edges();
    let mut v = vec![1u128; m];
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        v = (0..m).map(|e| g.turns_into(e).iter().map(|&a| v[a]).sum()).collect();
        out.push(*v.iter().max().unwrap());
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub q_max: usize,
    pub spectral_radius: f64,
    pub regular: bool,
    /// `|R - q_max| <= 1e-10`.
    pub radius_is_q_max: bool,
    pub pile_heights: Vec<u128>,
    /// `P̄_n^{1/n}`.
    pub roots: Vec<f64>,
    /// Pairs `(m, n)` with `m + n <= submult_max` violating `P̄_{m+n} <= P̄_m P̄_n`.
    pub submultiplicativity_violations: Vec<(usize, usize)>,
    /// Every root is at least `R` (the max row sum of `S^n` dominates `R^n`).
    pub roots_bound_radius: bool,
    /// `min_{m<=n} P̄_m^{1/m} - R`.
    pub running_min_gaps: Vec<f64>,
    /// `|P̄_n^{1/n} - R|` strictly decreasing over the last four terms.
    pub last_four_strictly_decreasing: bool,
}

pub fn regularity_report(g: &Graph, n_max: usize, submult_max: usize) -> Result<RegularityReport> {
    let s = turn_sum(g)?.matrix;
    let r = eigenvalues(&s)?.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let ph = pile_heights(g, n_max.max(submult_max));
    let roots: Vec<f64> = ph[..n_max]
        .iter()
        .enumerate()
        .map(|(i, &p)| (p as f64).powf(1.0 / (i + 1) as f64))
        .collect();
    let mut violations = Vec::new();
    for m in 1..submult_max {
        for n in 1..=submult_max - m {
            if ph[m + n - 1] > ph[m - 1] * ph[n - 1] {
                violations.push((m, n));
            }
        }
    }
    let mut running = f64::INFINITY;
    let running_min_gaps = roots
        .iter()
        .map(|&x| {
            running = running.min(x);
            running - r
        })
        .collect();
    let gaps: Vec<f64> = roots.iter().map(|x| (x - r).abs()).collect();
    let tail = &gaps[gaps.len().saturating_sub(4)..];
    Ok(RegularityReport {
        q_max: g.q_max(),
        spectral_radius: r,
        regular: g.is_regular(),
        radius_is_q_max: (r - g.q_max() as f64).abs() <= 1e-10,
        pile_heights: ph[..n_max].to_vec(),
        roots_bound_radius: roots.iter().all(|&x| x >= r * (1.0 - 1e-12)),
        roots,
        submultiplicativity_violations: violations,
        running_min_gaps,
        last_four_strictly_decreasing: tail.windows(2).all(|w| w[1] < w[0]),
    })
}

/// `tr(A^k)`; for the turn sum this counts cyclically reduced closed paths of length `k`.
pub fn trace_power(a: &CMat, k: usize) -> C64 {
    matrix_power(a, k).diag().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::corpus;
    use crate::linalg::{c, from_real};
    use ndarray::array;

    fn s_of(name: &str) -> CMat {
        turn_sum(&corpus::graph(name).unwrap()).unwrap().matrix
    }

    fn expect(report: &SpectrumReport, want: &[(C64, usize)]) {
        assert_eq!(report.clusters.len(), want.len(), "{:?}", report.clusters);
        for (cl, &(z, m)) in report.clusters.iter().zip(want) {
            assert!((cl.value - z).norm() < 1e-8, "{} vs {}", cl.value, z);
            assert_eq!(cl.algebraic, m);
            assert_eq!(cl.geometric, m);
            assert_eq!(cl.max_jordan_block, 1);
        }
    }

    // Exact spectra from the factored characteristic polynomials.
    #[test]
    fn corpus_spectra() {
        let o = SpectrumOptions::default();
        let h = 3f64.sqrt() / 2.0;
        expect(&spectrum(&s_of("c3"), &o).unwrap(), &[(c(-0.5, -h), 2), (c(-0.5, h), 2), (c(1.0, 0.0), 2)]);
        expect(
            &spectrum(&s_of("c4"), &o).unwrap(),
            &[(c(-1.0, 0.0), 2), (c(0.0, -1.0), 2), (c(0.0, 1.0), 2), (c(1.0, 0.0), 2)],
        );
        let r7 = 7f64.sqrt() / 2.0;
        expect(
            &spectrum(&s_of("k4"), &o).unwrap(),
            &[(c(-1.0, 0.0), 2), (c(-0.5, -r7), 3), (c(-0.5, r7), 3), (c(1.0, 0.0), 3), (c(2.0, 0.0), 1)],
        );
        let s2 = 2f64.sqrt();
        expect(
            &spectrum(&s_of("k23"), &o).unwrap(),
            &[
                (c(-s2, 0.0), 1),
                (c(-1.0, 0.0), 2),
                (c(0.0, -s2), 1),
                (c(0.0, -1.0), 2),
                (c(0.0, 1.0), 2),
                (c(0.0, s2), 1),
                (c(1.0, 0.0), 2),
                (c(s2, 0.0), 1),
            ],
        );
        expect(
            &spectrum(&s_of("petersen"), &o).unwrap(),
            &[
                (c(-1.0, -1.0), 4),
                (c(-1.0, 0.0), 5),
                (c(-1.0, 1.0), 4),
                (c(0.5, -r7), 5),
                (c(0.5, r7), 5),
                (c(1.0, 0.0), 6),
                (c(2.0, 0.0), 1),
            ],
        );
    }

    #[test]
    fn planted_jordan_block() {
        let a = from_real(&array![
            [2.0, 1.0, 0.0, 0.0],
            [0.0, 2.0, 1.0, 0.0],
            [0.0, 0.0, 2.0, 0.0],
            [0.0, 0.0, 0.0, 5.0]
        ]);
        let o = SpectrumOptions::default();
        assert_eq!(jordan_detect(&a, c(2.0, 0.0), &o).unwrap(), 3);
        assert_eq!(jordan_detect(&a, c(5.0, 0.0), &o).unwrap(), 1);
        assert!(matches!(jordan_detect(&a, c(3.0, 0.0), &o), Err(Error::NotEigenvalue(_))));
        let r = spectrum(&a, &o).unwrap();
        assert_eq!(r.clusters[0].algebraic, 3);
        assert_eq!(r.clusters[0].geometric, 1);
    }

    #[test]
    fn equalizer_of_equal_operators_is_everything() {
        let a = s_of("c4");
        assert_eq!(equalizer_basis(&a, &a, 1e-8).unwrap().ncols(), 8);
    }

    #[test]
    fn correspondence_on_k4() {
        let g = corpus::graph("k4").unwrap();
        let rows = correspondence_report(&g, &SpectrumOptions::default(), 1e-8).unwrap();
        assert_eq!(rows.len(), 5);
        for r in &rows {
            assert!(r.matched, "{r:?}");
            if r.admissible {
                assert_eq!(r.dim_vertex, r.dim_edge);
            }
        }
        assert_eq!(rows.iter().filter(|r| r.admissible).count(), 3);
    }

    #[test]
    fn non_spectral_z_has_trivial_spaces() {
        let g = corpus::graph("petersen").unwrap();
        let r = correspondence(&g, c(0.3, 0.7), &SpectrumOptions::default(), 1e-8).unwrap();
        assert_eq!((r.dim_vertex, r.dim_edge), (0, 0));
        assert!(r.matched);
    }

    /// Brute force: count non-backtracking paths of `n + 1` edges ending at `e`.
    fn paths_ending_at(g: &Graph, e: usize, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        g.turns_into(e).iter().map(|&a| paths_ending_at(g, a, n - 1)).sum()
    }

    #[test]
    fn pile_heights_match_path_counts() {
        for (_, g) in corpus::all() {
            let ph = pile_heights(&g, 6);
            for n in 1..=6 {
                let brute = (0..g.num_edges()).map(|e| paths_ending_at(&g, e, n)).max().unwrap();
                assert_eq!(ph[n - 1], brute);
            }
        }
    }

    #[test]
    fn pile_heights_known_values() {
        let k23 = corpus::graph("k23").unwrap();
        assert_eq!(pile_heights(&k23, 12), vec![2, 2, 4, 4, 8, 8, 16, 16, 32, 32, 64, 64]);
        let k4 = corpus::graph("k4").unwrap();
        assert_eq!(pile_heights(&k4, 5), vec![2, 4, 8, 16, 32]);
        assert_eq!(pile_heights(&corpus::graph("c3").unwrap(), 4), vec![1; 4]);
    }

    #[test]
    fn regularity_on_corpus() {
        for (name, g) in corpus::all() {
            let r = regularity_report(&g, 12, 10).unwrap();
            assert!(r.submultiplicativity_violations.is_empty());
            assert!(r.roots_bound_radius, "{name}");
            assert_eq!(r.radius_is_q_max, g.is_regular(), "{name}");
            assert!(r.running_min_gaps.windows(2).all(|w| w[1] <= w[0]));
        }
        let r = regularity_report(&corpus::graph("k23").unwrap(), 12, 10).unwrap();
        assert!((r.spectral_radius - 2f64.sqrt()).abs() < 1e-10);
        assert!(r.spectral_radius <= r.q_max as f64 - 0.5);
        // Period-two pile heights: the raw gap sequence oscillates.
        assert!(!r.last_four_strictly_decreasing);
    }

    #[test]
    fn trace_counts_cycles_on_c3() {
        let s = s_of("c3");
        assert!((trace_power(&s, 3) - c(6.0, 0.0)).norm() < 1e-12);
        assert!(trace_power(&s, 2).norm() < 1e-12);
    }
}
