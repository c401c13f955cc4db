//! Finitely additive measures on path space and the dual transfer operator.
//!
//! A [`MeasureTable`] holds `μ(c)` for every code of length `1..=depth`.
//! Values follow the level order of a [`DistrictTree`] of at least that depth.

use ndarray_linalg::Inverse;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DistrictTree, Graph};
use crate::linalg::{c, eigenspace, eye, max_abs, rank_abs, CMat, CVec, C64, ZERO};
use crate::operators::{edge_form, turn_sum};
use crate::path_space::{lipschitz_seminorm, preferred_extension, DependsFunction, ThetaMetric};
use crate::spectral::{jordan_detect, SpectrumOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureTable {
    depth: usize,
    levels: Vec<Vec<C64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureEntry {
    pub code: Vec<usize>,
    pub value: [f64; 2],
}

/// Wire format of a measure table.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureTableJson {
    pub depth: usize,
    pub entries: Vec<MeasureEntry>,
}

impl MeasureTable {
    /// The additive table determined by its values on `W_depth`.
    pub fn from_leaves(tree: &DistrictTree, depth: usize, leaves: Vec<C64>) -> Result<Self> {
        if depth == 0 || depth > tree.depth() || leaves.len() != tree.size(depth) {
            return Err(Error::Shape(format!("{} leaf values do not fit depth {depth}", leaves.len())));
        }
        let mut levels = vec![leaves];
        for k in (1..depth).rev() {
            let below = levels.last().unwrap();
            let lvl = (0..tree.size(k)).map(|i| tree.children(k, i).map(|j| below[j]).sum()).collect();
            levels.push(lvl);
        }
        levels.reverse();
        Ok(Self { depth, levels })
    }

    /// Leaves uniform on the unit square; all coarser values by additivity.
    pub fn random_additive<R: Rng>(tree: &DistrictTree, depth: usize, rng: &mut R) -> Self {
        let leaves = (0..tree.size(depth)).map(|_| c(rng.random(), rng.random())).collect();
        Self::from_leaves(tree, depth, leaves).expect("sizes agree")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Values on `W_k`.
    pub fn level(&self, k: usize) -> &[C64] {
        &self.levels[k - 1]
    }

    pub fn value(&self, tree: &DistrictTree, code: &[usize]) -> Option<C64> {
        if code.is_empty() || code.len() > self.depth {
            return None;
        }
        tree.index_of(code).map(|i| self.levels[code.len() - 1][i])
    }

    /// Max of `|μ(c) - Σ_a μ(c ⌢ a)|` over codes of length `< depth`.
    pub fn additivity_residual(&self, tree: &DistrictTree) -> f64 {
        let mut r = 0.0f64;
        for k in 1..self.depth {
            for (i, &v) in self.levels[k - 1].iter().enumerate() {
                let s: C64 = tree.children(k, i).map(|j| self.levels[k][j]).sum();
                r = r.max((v - s).norm());
            }
        }
        r
    }

    pub fn max_abs_diff(&self, other: &MeasureTable) -> f64 {
        let d = self.depth.min(other.depth);
        (0..d)
            .map(|k| max_abs(self.levels[k].iter().zip(&other.levels[k]).map(|(a, b)| a - b).collect::<Vec<_>>().iter()))
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { depth: self.depth, levels: self.levels.iter().map(|l| l.iter().map(|v| v * s).collect()).collect() }
    }

    pub fn to_json(&self, tree: &DistrictTree) -> MeasureTableJson {
        let mut entries = Vec::new();
        for k in 1..=self.depth {
            for (code, v) in tree.level(k).iter().zip(&self.levels[k - 1]) {
                entries.push(MeasureEntry { code: code.clone(), value: [v.re, v.im] });
            }
        }
        MeasureTableJson { depth: self.depth, entries }
    }

    pub fn from_json(json: &MeasureTableJson, tree: &DistrictTree) -> Result<Self> {
        if json.depth == 0 || json.depth > tree.depth() {
            return Err(Error::Depth { depth: json.depth, msg: "measure table deeper than code tree".into() });
        }
        let mut levels: Vec<Vec<Option<C64>>> = (1..=json.depth).map(|k| vec![None; tree.size(k)]).collect();
        for e in &json.entries {
            let i = tree
                .index_of(&e.code)
                .filter(|_| e.code.len() <= json.depth)
                .ok_or_else(|| Error::Shape(format!("unknown code {:?}", e.code)))?;
            levels[e.code.len() - 1][i] = Some(c(e.value[0], e.value[1]));
        }
        let levels = levels
            .into_iter()
            .map(|l| l.into_iter().collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Shape("measure table is missing codes".into()))?;
        Ok(Self { depth: json.depth, levels })
    }
}

/// `μ(e_1 … e_n) = z^{1-n} f(op e_n)` for an eigenvector `S f = z f`.
pub fn measure_from_edge_function(
    g: &Graph,
    tree: &DistrictTree,
    f: &[C64],
    z: C64,
    depth: usize,
    tol: f64,
) -> Result<MeasureTable> {
    if z == ZERO {
        return Err(Error::ZeroParameter);
    }
    let s = turn_sum(g)?.matrix;
    let fv = CVec::from(f.to_vec());
    let residual = max_abs((s.dot(&fv) - &fv * z).iter());
    if residual > tol * max_abs(f.iter()).max(1.0) {
        return Err(Error::NotEigen { z: crate::ser::fmt_c64(z), residual });
    }
    if depth > tree.depth() {
        return Err(Error::Depth { depth, msg: "measure deeper than code tree".into() });
    }
    let zi = z.inv();
    let levels = (1..=depth)
        .map(|k| {
            let w = zi.powi(k as i32 - 1);
            tree.level(k).iter().map(|code| w * f[g.op(*code.last().unwrap())]).collect()
        })
        .collect();
    Ok(MeasureTable { depth, levels })
}

/// `f(e) = μ(op e)`.
pub fn canonical_transpose(g: &Graph, mu: &MeasureTable) -> Vec<C64> {
    (0..g.num_edges()).map(|e| mu.level(1)[g.op(e)]).collect()
}

/// `(L' μ)(e ⌢ c) = μ(c)`; length-one values follow by additivity.
pub fn dual_transfer_apply(g: &Graph, tree: &DistrictTree, mu: &MeasureTable) -> MeasureTable {
    let d = mu.depth;
    let mut levels = Vec::with_capacity(d);
    levels.push((0..g.num_edges()).map(|e| g.turns_from(e).iter().map(|&a| mu.level(1)[a]).sum()).collect());
    for k in 2..=d {
        let lvl = tree
            .level(k)
            .iter()
            .map(|code| mu.value(tree, &code[1..]).expect("tail has length < depth"))
            .collect();
        levels.push(lvl);
    }
    MeasureTable { depth: d, levels }
}

/// `⟨φ, μ⟩ = Σ_{c ∈ W_n} φ(c) μ(c)` for `φ ∈ D_n`, `n <= depth(μ)`.
pub fn pairing(phi: &DependsFunction, mu: &MeasureTable) -> Result<C64> {
    if phi.depth > mu.depth {
        return Err(Error::Depth { depth: phi.depth, msg: format!("pairing needs a measure of depth >= {}", phi.depth) });
    }
    Ok(phi.values.iter().zip(mu.level(phi.depth)).map(|(a, b)| a * b).sum())
}

/// `|⟨L φ, μ⟩ - ⟨φ, L' μ⟩|` for `φ ∈ D_{depth-1}`.
pub fn transfer_duality_residual(
    g: &Graph,
    tree: &DistrictTree,
    phi: &DependsFunction,
    mu: &MeasureTable,
) -> Result<f64> {
    let n = phi.depth;
    let l = crate::path_space::transfer_matrix(g, tree, n)?;
    let lphi = DependsFunction { depth: n, values: l.matrix.dot(&phi.as_vec()).to_vec() };
    let lhs = pairing(&lphi, mu)?;
    let rhs = pairing(phi, &dual_transfer_apply(g, tree, mu))?;
    Ok((lhs - rhs).norm())
}

/// `B(f, h) = Σ_e f(e) h(op e)`, bilinear.
pub fn edge_form_value(g: &Graph, f: &[C64], h: &[C64]) -> C64 {
    (0..g.num_edges()).map(|e| f[e] * h[g.op(e)]).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyRow {
    #[serde(serialize_with = "crate::ser::complex")]
    pub z: C64,
    pub eigenspace_dim: usize,
    pub gram_rank: usize,
    pub gram_degenerate: bool,
    pub max_jordan_block: usize,
    /// `gram_degenerate == (max_jordan_block > 1)`.
    pub consistent: bool,
}

/// Rank of `Nᵀ B N` on `null(S - z)` against the Jordan structure at `z`.
pub fn degeneracy_test(g: &Graph, z: C64, opts: &SpectrumOptions) -> Result<DegeneracyRow> {
    let s = turn_sum(g)?.matrix;
    let b = edge_form(g)?;
    let n = eigenspace(&s, z, opts.rank_tol)?;
    gram_verdict(&s, &n, &n, &b, z, opts)
}

fn gram_verdict(a: &CMat, left: &CMat, right: &CMat, m: &CMat, z: C64, opts: &SpectrumOptions) -> Result<DegeneracyRow> {
    let gram = left.t().dot(m).dot(right);
    let mnorm = crate::linalg::singular_values(m)?.first().copied().unwrap_or(1.0);
    let gram_rank = rank_abs(&gram, opts.rank_tol * mnorm)?;
    let gram_degenerate = gram_rank < left.ncols();
    let max_jordan_block = jordan_detect(a, z, opts)?;
    Ok(DegeneracyRow {
        z,
        eigenspace_dim: left.ncols(),
        gram_rank,
        gram_degenerate,
        max_jordan_block,
        consistent: gram_degenerate == (max_jordan_block > 1),
    })
}

/// An operator with planted Jordan structure and its adjoint under
/// `⟨v, w⟩ = vᵀ M w`.
#[derive(Clone, Debug)]
pub struct PlantedPair {
    pub a: CMat,
    pub a_dual: CMat,
    pub m: CMat,
    /// `(eigenvalue, block sizes)`.
    pub blocks: Vec<(C64, Vec<usize>)>,
}

impl PlantedPair {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        const POOL: [(f64, f64); 6] = [(2.0, 0.0), (-1.5, 0.0), (0.5, 1.0), (0.5, -1.0), (3.0, 0.0), (-0.5, 2.0)];
        let k = rng.random_range(1..=3);
        let mut idx: Vec<usize> = (0..POOL.len()).collect();
        for i in 0..k {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
        }
        let blocks: Vec<(C64, Vec<usize>)> = idx[..k]
            .iter()
            .map(|&i| {
                let nb = rng.random_range(1..=2);
                (c(POOL[i].0, POOL[i].1), (0..nb).map(|_| rng.random_range(1..=3)).collect())
            })
            .collect();
        let dim: usize = blocks.iter().flat_map(|(_, b)| b).sum();
        let mut j = CMat::zeros((dim, dim));
        let mut at = 0;
        for (lam, sizes) in &blocks {
            for &s in sizes {
                for t in 0..s {
                    j[[at + t, at + t]] = *lam;
                    if t + 1 < s {
                        j[[at + t, at + t + 1]] = c(1.0, 0.0);
                    }
                }
                at += s;
            }
        }
        let mut rnd = |scale: f64| -> CMat {
            let r = CMat::from_shape_fn((dim, dim), |_| c(rng.random_range(-1.0..1.0) * scale, 0.0));
            eye(dim) + r
        };
        let p = rnd(0.3);
        let m = rnd(0.4);
        let pinv = p.inv().expect("perturbed identity is invertible");
        let minv = m.inv().expect("perturbed identity is invertible");
        let a = p.dot(&j).dot(&pinv);
        let a_dual = minv.dot(&a.t()).dot(&m);
        Self { a, a_dual, m, blocks }
    }

    /// Max of `|⟨A v, w⟩ - ⟨v, A' w⟩|` over basis pairs.
    pub fn adjoint_residual(&self) -> f64 {
        let lhs = self.a.t().dot(&self.m);
        let rhs = self.m.dot(&self.a_dual);
        max_abs((lhs - rhs).iter())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SyntheticOutcome {
    pub dimension: usize,
    pub planted_degenerate: Vec<bool>,
    pub rows: Vec<DegeneracyRow>,
    pub dual_jordan_blocks: Vec<usize>,
    pub adjoint_residual: f64,
    pub all_match: bool,
}

pub fn synthetic_degeneracy_trial<R: Rng>(rng: &mut R, opts: &SpectrumOptions) -> Result<SyntheticOutcome> {
    let pair = PlantedPair::random(rng);
    let mut rows = Vec::new();
    let mut planted = Vec::new();
    let mut dual_blocks = Vec::new();
    let mut all_match = true;
    for (lam, sizes) in &pair.blocks {
        let max = *sizes.iter().max().unwrap();
        let left = eigenspace(&pair.a, *lam, opts.rank_tol)?;
        let right = eigenspace(&pair.a_dual, *lam, opts.rank_tol)?;
        let row = gram_verdict(&pair.a, &left, &right, &pair.m, *lam, opts)?;
        let jd = jordan_detect(&pair.a_dual, *lam, opts)?;
        all_match &= row.consistent
            && row.max_jordan_block == max
            && jd == max
            && left.ncols() == sizes.len()
            && right.ncols() == sizes.len();
        planted.push(max > 1);
        dual_blocks.push(jd);
        rows.push(row);
    }
    Ok(SyntheticOutcome {
        dimension: pair.a.nrows(),
        planted_degenerate: planted,
        rows,
        dual_jordan_blocks: dual_blocks,
        adjoint_residual: pair.adjoint_residual(),
        all_match,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionBound {
    /// `|⟨φ, μ⟩ - ⟨Π_1 φ, μ⟩|`.
    pub deviation: f64,
    /// `c_1(φ) (1 - θ q_max / |z|)^{-1} |X| q_max max_e |μ(e)|`.
    pub bound: f64,
}

/// Finite-depth form of the extension estimate; needs `|z| > θ q_max`.
pub fn extension_bound(
    g: &Graph,
    tree: &DistrictTree,
    phi: &DependsFunction,
    mu: &MeasureTable,
    z: C64,
    metric: ThetaMetric,
) -> Result<ExtensionBound> {
    let qmax = g.q_max() as f64;
    let r = metric.theta * qmax / z.norm();
    if r >= 1.0 {
        return Err(Error::Config(format!("|z| = {} must exceed θ q_max = {}", z.norm(), metric.theta * qmax)));
    }
    let n = phi.depth;
    let proj: Vec<C64> = tree
        .level(n)
        .iter()
        .map(|code| {
            let ext = preferred_extension(g, &code[..1], n);
            phi.values[tree.index_of(&ext).unwrap()]
        })
        .collect();
    let pphi = DependsFunction { depth: n, values: proj };
    let deviation = (pairing(phi, mu)? - pairing(&pphi, mu)?).norm();
    let c1 = lipschitz_seminorm(g, tree, phi, 1, metric);
    let bound = c1 / (1.0 - r) * g.num_vertices() as f64 * qmax * max_abs(mu.level(1).iter());
    Ok(ExtensionBound { deviation, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{corpus, enumerate_codes};
    use crate::linalg::ONE;
    use crate::spectral::spectrum;
    use proptest::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eigvec(g: &Graph, z: C64) -> Vec<C64> {
        let s = turn_sum(g).unwrap().matrix;
        eigenspace(&s, z, 1e-8).unwrap().column(0).to_vec()
    }

    #[test]
    fn k4_perron_measure() {
        let g = corpus::graph("k4").unwrap();
        let t = enumerate_codes(&g, 6).unwrap();
        let f = vec![ONE; 12];
        let z = c(2.0, 0.0);
        let mu = measure_from_edge_function(&g, &t, &f, z, 6, 1e-10).unwrap();
        for k in 1..=6 {
            for v in mu.level(k) {
                assert!((v - c(0.5f64.powi(k as i32 - 1), 0.0)).norm() < 1e-15);
            }
        }
        assert!(mu.additivity_residual(&t) < 1e-14);
        let lmu = dual_transfer_apply(&g, &t, &mu);
        assert!(lmu.max_abs_diff(&mu.scale(z)) < 1e-14);
    }

    #[test]
    fn not_eigen_rejected() {
        let g = corpus::graph("c4").unwrap();
        let t = enumerate_codes(&g, 2).unwrap();
        let f: Vec<C64> = (0..8).map(|i| c(i as f64, 0.0)).collect();
        assert!(matches!(measure_from_edge_function(&g, &t, &f, c(2.0, 0.0), 2, 1e-8), Err(Error::NotEigen { .. })));
    }

    #[test]
    fn round_trips() {
        let g = corpus::graph("petersen").unwrap();
        let t = enumerate_codes(&g, 5).unwrap();
        let z = c(-1.0, 1.0);
        let f = eigvec(&g, z);
        let mu = measure_from_edge_function(&g, &t, &f, z, 5, 1e-10).unwrap();
        let back = canonical_transpose(&g, &mu);
        assert!(max_abs(back.iter().zip(&f).map(|(a, b)| a - b).collect::<Vec<_>>().iter()) < 1e-12);
        let again = measure_from_edge_function(&g, &t, &back, z, 5, 1e-10).unwrap();
        assert!(again.max_abs_diff(&mu) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let g = corpus::graph("c3").unwrap();
        let t = enumerate_codes(&g, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mu = MeasureTable::random_additive(&t, 3, &mut rng);
        let text = serde_json::to_string(&mu.to_json(&t)).unwrap();
        let back: MeasureTableJson = serde_json::from_str(&text).unwrap();
        assert_eq!(MeasureTable::from_json(&back, &t).unwrap(), mu);
        let mut short = back.clone();
        short.entries.pop();
        assert!(MeasureTable::from_json(&short, &t).is_err());
    }

    #[test]
    fn dual_transfer_is_injective_on_random_measures() {
        let g = corpus::graph("k23").unwrap();
        let t = enumerate_codes(&g, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mu = MeasureTable::random_additive(&t, 4, &mut rng);
        let l = dual_transfer_apply(&g, &t, &mu);
        assert!(l.additivity_residual(&t) < 1e-12);
        // The tail values of L'μ recover μ below the top level.
        for k in 1..4 {
            for (i, code) in t.level(k).iter().enumerate() {
                let e0 = g.turns_into(code[0])[0];
                let mut ext = vec![e0];
                ext.extend_from_slice(code);
                assert_eq!(l.value(&t, &ext).unwrap(), mu.level(k)[i]);
            }
        }
    }

    #[test]
    fn pairing_independent_of_representation() {
        let g = corpus::graph("k4").unwrap();
        let t = enumerate_codes(&g, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mu = MeasureTable::random_additive(&t, 5, &mut rng);
        let phi = DependsFunction::random(&t, 2, &mut rng);
        let a = pairing(&phi, &mu).unwrap();
        for m in 3..=5 {
            let b = pairing(&phi.expand(&t, m), &mu).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn degeneracy_agrees_with_jordan_on_corpus() {
        let o = SpectrumOptions::default();
        for (name, g) in corpus::all() {
            let spec = spectrum(&turn_sum(&g).unwrap().matrix, &o).unwrap();
            for cl in spec.nonzero() {
                let row = degeneracy_test(&g, cl.value, &o).unwrap();
                assert!(row.consistent, "{name} {:?}", row);
                assert!(!row.gram_degenerate);
            }
        }
    }

    #[test]
    fn synthetic_pairs_match() {
        let o = SpectrumOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut saw = [false; 2];
        for _ in 0..20 {
            let out = synthetic_degeneracy_trial(&mut rng, &o).unwrap();
            assert!(out.all_match, "{out:?}");
            assert!(out.adjoint_residual < 1e-10);
            for d in out.planted_degenerate {
                saw[d as usize] = true;
            }
        }
        assert!(saw[0] && saw[1]);
    }

    #[test]
    fn edge_form_matches_pairing() {
        let g = corpus::graph("k4").unwrap();
        let t = enumerate_codes(&g, 2).unwrap();
        let z = c(-0.5, 7f64.sqrt() / 2.0);
        let h = eigvec(&g, z);
        let mu = measure_from_edge_function(&g, &t, &h, z, 2, 1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = DependsFunction::random(&t, 1, &mut rng);
        let lhs = pairing(&phi, &mu).unwrap();
        assert!((lhs - edge_form_value(&g, &phi.values, &h)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn duality_holds(seed in 0u64..10_000, which in 0usize..5) {
            let g = corpus::graph(corpus::NAMES[which]).unwrap();
            let t = enumerate_codes(&g, 4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu = MeasureTable::random_additive(&t, 4, &mut rng);
            let phi = DependsFunction::random(&t, 3, &mut rng);
            prop_assert!(transfer_duality_residual(&g, &t, &phi, &mu).unwrap() < 1e-10);
        }

        #[test]
        fn eigen_measures_are_additive(which in 0usize..5, pick in 0usize..64) {
            let g = corpus::graph(corpus::NAMES[which]).unwrap();
            let t = enumerate_codes(&g, 5).unwrap();
            let o = SpectrumOptions::default();
            let spec = spectrum(&turn_sum(&g).unwrap().matrix, &o).unwrap();
            let nz: Vec<_> = spec.nonzero().collect();
            let z = nz[pick % nz.len()].value;
            let mu = measure_from_edge_function(&g, &t, &eigvec(&g, z), z, 5, 1e-8).unwrap();
            prop_assert!(mu.additivity_residual(&t) < 1e-10);
            prop_assert!(dual_transfer_apply(&g, &t, &mu).max_abs_diff(&mu.scale(z)) < 1e-10);
        }
    }
}
