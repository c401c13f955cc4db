//! Locally constant functions on path space and the transfer operator.
//!
//! A function in `D_n` is stored as its values on `W_n`, in the order of
//! [`DistrictTree::level`]. The transfer operator acts by
//! `(L f)(c) = Σ_{e ⌢ c_1} f(e ⌢ c)`, which maps `D_n` into `D_{n-1}`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{enumerate_codes, DistrictTree, Graph};
use crate::linalg::{c, eigenspace, max_abs, CMat, CVec, C64, ONE};
use crate::operators::{turn_sum, Basis, LabeledOperator};
use crate::spectral::{pile_heights, spectrum, SpectrumOptions, SpectrumReport};

/// Deepest level for which dense transfer matrices are built.
pub const MAX_TRANSFER_DEPTH: usize = 6;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThetaMetric {
    pub theta: f64,
}

impl ThetaMetric {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(Self { theta })
    }
}

/// `θ^s` where `s` is the length of the common prefix.
pub fn code_distance(a: &[usize], b: &[usize], metric: ThetaMetric) -> f64 {
    if a == b {
        return 0.0;
    }
    let s = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    metric.theta.powi(s as i32)
}

/// A function constant on depth-`depth` districts.
#[derive(Clone, Debug)]
pub struct DependsFunction {
    pub depth: usize,
    pub values: Vec<C64>,
}

impl DependsFunction {
    pub fn new(tree: &DistrictTree, depth: usize, values: Vec<C64>) -> Result<Self> {
        if depth == 0 || depth > tree.depth() || values.len() != tree.size(depth) {
            return Err(Error::Shape(format!("{} values do not fit depth {depth}", values.len())));
        }
        Ok(Self { depth, values })
    }

    /// Entries uniform on the unit square `[0,1) + i[0,1)`.
    pub fn random<R: Rng>(tree: &DistrictTree, depth: usize, rng: &mut R) -> Self {
        let values = (0..tree.size(depth)).map(|_| c(rng.random(), rng.random())).collect();
        Self { depth, values }
    }

    /// The same function viewed in `D_m`, `m >= depth`.
    pub fn expand(&self, tree: &DistrictTree, m: usize) -> Self {
        let values = (0..tree.size(m)).map(|i| self.values[tree.ancestor(m, i, self.depth)]).collect();
        Self { depth: m, values }
    }

    pub fn sup_norm(&self) -> f64 {
        max_abs(self.values.iter())
    }

    pub fn as_vec(&self) -> CVec {
        CVec::from(self.values.clone())
    }
}

fn check_depth(tree: &DistrictTree, n: usize) -> Result<()> {
    if n == 0 || n > MAX_TRANSFER_DEPTH || n > tree.depth() {
        return Err(Error::Depth {
            depth: n,
            msg: format!("need 1 <= n <= min({MAX_TRANSFER_DEPTH}, tree depth {})", tree.depth()),
        });
    }
    Ok(())
}

/// `L` on `D_n` as a `W_n × W_n` matrix. At `n = 1` this is the turn sum.
pub fn transfer_matrix(g: &Graph, tree: &DistrictTree, n: usize) -> Result<LabeledOperator> {
    check_depth(tree, n)?;
    let w = tree.level(n);
    let mut m = CMat::zeros((w.len(), w.len()));
    for (row, code) in w.iter().enumerate() {
        for &e0 in g.turns_into(code[0]) {
            let mut d = Vec::with_capacity(n);
            d.push(e0);
            d.extend_from_slice(&code[..n - 1]);
            m[[row, tree.index_of(&d).expect("extended code exists")]] += ONE;
        }
    }
    Ok(LabeledOperator::new(m, Basis::District(n), Basis::District(n)))
}

/// `L : D_{n+1} -> D_n` as a `W_n × W_{n+1}` matrix.
pub fn transfer_down(g: &Graph, tree: &DistrictTree, n: usize) -> Result<LabeledOperator> {
    check_depth(tree, n + 1)?;
    let w = tree.level(n);
    let mut m = CMat::zeros((w.len(), tree.size(n + 1)));
    for (row, code) in w.iter().enumerate() {
        for &e0 in g.turns_into(code[0]) {
            let mut d = vec![e0];
            d.extend_from_slice(code);
            m[[row, tree.index_of(&d).expect("extended code exists")]] += ONE;
        }
    }
    Ok(LabeledOperator::new(m, Basis::District(n + 1), Basis::District(n)))
}

/// Extends a code to length `m` by repeatedly taking the preferred turn.
pub fn preferred_extension(g: &Graph, code: &[usize], m: usize) -> Vec<usize> {
    let mut out = code.to_vec();
    while out.len() < m {
        out.push(g.preferred_turn(*out.last().unwrap()));
    }
    out
}

/// `Π_n : D_m -> D_n`, `(Π_n f)(c) = f(c extended by preferred turns)`.
pub fn projection_pi(g: &Graph, tree: &DistrictTree, n: usize, m: usize) -> Result<LabeledOperator> {
    if n > m || m > tree.depth() || n == 0 {
        return Err(Error::Depth { depth: n, msg: format!("projection needs 1 <= n <= m = {m}") });
    }
    let mut p = CMat::zeros((tree.size(n), tree.size(m)));
    for (row, code) in tree.level(n).iter().enumerate() {
        let ext = preferred_extension(g, code, m);
        p[[row, tree.index_of(&ext).unwrap()]] = ONE;
    }
    Ok(LabeledOperator::new(p, Basis::District(m), Basis::District(n)))
}

/// The inclusion `D_n -> D_m` as a `W_m × W_n` matrix.
pub fn embed(tree: &DistrictTree, n: usize, m: usize) -> LabeledOperator {
    let mut e = CMat::zeros((tree.size(m), tree.size(n)));
    for i in 0..tree.size(m) {
        e[[i, tree.ancestor(m, i, n)]] = ONE;
    }
    LabeledOperator::new(e, Basis::District(n), Basis::District(m))
}

/// Max-entry residual of `Π_n L - L Π_{n+1}` as maps `D_{n+2} -> D_n`.
pub fn commutation_residual(g: &Graph, tree: &DistrictTree, n: usize) -> Result<f64> {
    let lhs = projection_pi(g, tree, n, n + 1)?.compose(&transfer_down(g, tree, n + 1)?)?;
    let rhs = transfer_down(g, tree, n)?.compose(&projection_pi(g, tree, n + 1, n + 2)?)?;
    Ok(lhs.sub(&rhs)?.max_entry())
}

/// Level-`j` Lipschitz seminorm: the largest `|f(c) - f(c')| / d_θ(c, c')`
/// over codes on the same island sharing at least `j` edges.
pub fn lipschitz_seminorm(g: &Graph, tree: &DistrictTree, f: &DependsFunction, j: usize, metric: ThetaMetric) -> f64 {
    let n = f.depth;
    let codes = tree.level(n);
    let mut best = 0.0f64;
    for s in j..n {
        let key = |i: usize| -> usize {
            if s == 0 {
                g.init(codes[i][0])
            } else {
                tree.ancestor(n, i, s)
            }
        };
        let scale = metric.theta.powi(s as i32);
        let mut start = 0;
        while start < codes.len() {
            let k = key(start);
            let mut end = start + 1;
            while end < codes.len() && key(end) == k {
                end += 1;
            }
            let vals = &f.values[start..end];
            for a in 0..vals.len() {
                for b in a + 1..vals.len() {
                    best = best.max((vals[a] - vals[b]).norm() / scale);
                }
            }
            start = end;
        }
    }
    best
}

fn apply(op: &LabeledOperator, f: &DependsFunction, depth: usize) -> DependsFunction {
    DependsFunction { depth, values: op.matrix.dot(&f.as_vec()).to_vec() }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundsReport {
    pub theta: f64,
    pub depth: usize,
    pub trials: usize,
    /// Largest `||L f||_∞ / (q_max ||f||_∞)`; must not exceed 1.
    pub sup_ratio: f64,
    /// Largest `c_1(L f) / (θ q_max c_1(f))`.
    pub lipschitz_ratio: f64,
    /// Largest `||L^k f||_θ / (P̄_k (θ^k c_1(f) + ||f||_∞))` over `1 <= k < depth`.
    pub iterated_ratio: f64,
    /// Largest `||f - Π_ℓ f||_∞ / (θ^ℓ c_1(f))` over `1 <= ℓ < depth`.
    pub projection_ratio: f64,
    /// Same with the level-0 seminorm in the denominator.
    pub projection_ratio_level0: f64,
    /// Largest `||L^k f - L^k Π_k f||_∞ / (P̄_k θ^k c_1(f))`.
    pub approximation_ratio: f64,
    /// Pairs violating `c_0 >= c_1 >= c_2`.
    pub seminorm_order_violations: usize,
    pub passed: bool,
}

pub fn verify_contraction_bounds<R: Rng>(
    g: &Graph,
    tree: &DistrictTree,
    n: usize,
    metric: ThetaMetric,
    trials: usize,
    rng: &mut R,
) -> Result<BoundsReport> {
    check_depth(tree, n)?;
    if n < 2 {
        return Err(Error::Depth { depth: n, msg: "bounds need depth >= 2".into() });
    }
    let theta = metric.theta;
    let qmax = g.q_max() as f64;
    let l = transfer_matrix(g, tree, n)?;
    let piles = pile_heights(g, n);
    let pis: Vec<(LabeledOperator, LabeledOperator)> = (1..n)
        .map(|k| Ok((projection_pi(g, tree, k, n)?, embed(tree, k, n))))
        .collect::<Result<_>>()?;
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };

    let mut r = BoundsReport { theta, depth: n, trials, ..Default::default() };
    for _ in 0..trials {
        let f = DependsFunction::random(tree, n, rng);
        let sup = f.sup_norm();
        let c0 = lipschitz_seminorm(g, tree, &f, 0, metric);
        let c1 = lipschitz_seminorm(g, tree, &f, 1, metric);
        let c2 = lipschitz_seminorm(g, tree, &f, 2, metric);
        if !(c0 >= c1 && c1 >= c2) {
            r.seminorm_order_violations += 1;
        }

        let lf = apply(&l, &f, n);
        r.sup_ratio = r.sup_ratio.max(ratio(lf.sup_norm(), qmax * sup));
        r.lipschitz_ratio = r.lipschitz_ratio.max(ratio(lipschitz_seminorm(g, tree, &lf, 1, metric), theta * qmax * c1));

        let mut lk = f.clone();
        for k in 1..n {
            lk = apply(&l, &lk, n);
            let p = piles[k - 1] as f64;
            let tk = theta.powi(k as i32);
            let inner = lipschitz_seminorm(g, tree, &lk, 1, metric) + lk.sup_norm();
            r.iterated_ratio = r.iterated_ratio.max(ratio(inner, p * (tk * c1 + sup)));

            let (pi, emb) = &pis[k - 1];
            let proj = emb.matrix.dot(&pi.matrix.dot(&f.as_vec()));
            let diff = max_abs((f.as_vec() - &proj).iter());
            r.projection_ratio = r.projection_ratio.max(ratio(diff, tk * c1));
            r.projection_ratio_level0 = r.projection_ratio_level0.max(ratio(diff, tk * c0));

            let mut lp = proj;
            for _ in 0..k {
                lp = l.matrix.dot(&lp);
            }
            let approx = max_abs((lk.as_vec() - &lp).iter());
            r.approximation_ratio = r.approximation_ratio.max(ratio(approx, p * tk * c1));
        }
    }
    let ok = |x: f64| x <= 1.0 + 1e-12;
    r.passed = ok(r.sup_ratio)
        && ok(r.lipschitz_ratio)
        && ok(r.iterated_ratio)
        && ok(r.projection_ratio)
        && ok(r.projection_ratio_level0)
        && ok(r.approximation_ratio)
        && r.seminorm_order_violations == 0;
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct LocConstLevel {
    pub depth: usize,
    pub dimension: usize,
    pub spectrum: SpectrumReport,
    /// Largest distance between matched nonzero eigenvalues of `S` and `L_n`.
    pub eigenvalue_deviation: f64,
    pub multiplicities_match: bool,
    /// Largest variance of an eigenvector over a depth-1 district.
    pub district_variance: f64,
    /// Max entry of `Π_n L - L Π_{n+1}`; exactly zero.
    pub commutation_residual: f64,
    pub passed: bool,
}

/// The nonzero spectrum of `L` on `D_n` against that of `S`, plus the
/// depth-1 constancy of its eigenvectors.
pub fn loc_const_spectrum_check(
    g: &Graph,
    n: usize,
    opts: &SpectrumOptions,
    tol: f64,
    variance_tol: f64,
) -> Result<LocConstLevel> {
    let tree = enumerate_codes(g, (n + 2).min(MAX_TRANSFER_DEPTH).max(n))?;
    let l = transfer_matrix(g, &tree, n)?.matrix;
    let base = spectrum(&turn_sum(g)?.matrix, opts)?;
    let spec = spectrum(&l, opts)?;

    let want: Vec<_> = base.nonzero().collect();
    let got: Vec<_> = spec.nonzero().collect();
    let mut used = vec![false; got.len()];
    let mut dev = 0.0f64;
    let mut mult_ok = want.len() == got.len();
    for w in &want {
        let best = got
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| (a.1.value - w.value).norm().total_cmp(&(b.1.value - w.value).norm()));
        match best {
            Some((i, gcl)) => {
                used[i] = true;
                dev = dev.max((gcl.value - w.value).norm());
                mult_ok &= gcl.algebraic == w.algebraic;
            }
            None => {
                mult_ok = false;
                dev = f64::INFINITY;
            }
        }
    }

    let mut var = 0.0f64;
    for cl in &got {
        let vecs = eigenspace(&l, cl.value, opts.rank_tol)?;
        for col in vecs.columns() {
            var = var.max(district_variance(&tree, n, &col.to_vec()));
        }
    }
    let comm = if n + 2 <= tree.depth() { commutation_residual(g, &tree, n)? } else { 0.0 };
    Ok(LocConstLevel {
        depth: n,
        dimension: l.nrows(),
        eigenvalue_deviation: dev,
        multiplicities_match: mult_ok,
        district_variance: var,
        commutation_residual: comm,
        passed: mult_ok && dev <= tol && var <= variance_tol && comm == 0.0,
        spectrum: spec,
    })
}

/// Largest mean squared deviation of `v` over the codes sharing a first edge.
pub fn district_variance(tree: &DistrictTree, n: usize, v: &[C64]) -> f64 {
    let mut groups: Vec<Vec<C64>> = vec![Vec::new(); tree.size(1)];
    for (i, &x) in v.iter().enumerate() {
        groups[tree.ancestor(n, i, 1)].push(x);
    }
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let mean = g.iter().sum::<C64>() / g.len() as f64;
            g.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / g.len() as f64
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::corpus;
    use proptest::{prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(name: &str, depth: usize) -> (Graph, DistrictTree) {
        let g = corpus::graph(name).unwrap();
        let t = enumerate_codes(&g, depth).unwrap();
        (g, t)
    }

    #[test]
    fn transfer_at_depth_one_is_turn_sum() {
        for name in corpus::NAMES {
            let (g, t) = setup(name, 1);
            assert_eq!(transfer_matrix(&g, &t, 1).unwrap().matrix, turn_sum(&g).unwrap().matrix);
        }
    }

    #[test]
    fn transfer_of_indicator() {
        // L 1_{e⌢c} = 1_c.
        let (g, t) = setup("k4", 3);
        let l = transfer_down(&g, &t, 1).unwrap();
        for (j, code) in t.level(2).iter().enumerate() {
            let mut ind = CVec::zeros(t.size(2));
            ind[j] = ONE;
            let out = l.matrix.dot(&ind);
            for (i, v) in out.iter().enumerate() {
                let want = if i == code[1] { ONE } else { C64::new(0.0, 0.0) };
                assert_eq!(*v, want);
            }
        }
    }

    #[test]
    fn transfer_square_matches_down_on_embedded() {
        let (g, t) = setup("petersen", 3);
        let sq = transfer_matrix(&g, &t, 3).unwrap();
        let down = transfer_down(&g, &t, 2).unwrap();
        let emb = embed(&t, 2, 3);
        assert_eq!(sq.matrix, emb.compose(&down).unwrap().matrix);
    }

    #[test]
    fn commutation_is_exact() {
        for name in corpus::NAMES {
            let (g, t) = setup(name, 5);
            for n in 1..=3 {
                assert_eq!(commutation_residual(&g, &t, n).unwrap(), 0.0, "{name} n={n}");
            }
        }
    }

    #[test]
    fn projection_fixes_low_depth_functions() {
        let (g, t) = setup("k23", 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = DependsFunction::random(&t, 2, &mut rng);
        let big = f.expand(&t, 4);
        let p = projection_pi(&g, &t, 2, 4).unwrap();
        assert_eq!(p.matrix.dot(&big.as_vec()).to_vec(), f.values);
    }

    #[test]
    fn distance_examples() {
        let m = ThetaMetric::new(0.5).unwrap();
        assert_eq!(code_distance(&[0, 4, 7], &[0, 4, 8], m), 0.25);
        assert_eq!(code_distance(&[0, 4], &[1, 4], m), 1.0);
        assert_eq!(code_distance(&[3, 3], &[3, 3], m), 0.0);
        assert!(ThetaMetric::new(1.0).is_err());
    }

    /// Brute-force seminorm over all pairs.
    fn seminorm_brute(g: &Graph, t: &DistrictTree, f: &DependsFunction, j: usize, m: ThetaMetric) -> f64 {
        let w = t.level(f.depth);
        let mut best = 0.0f64;
        for a in 0..w.len() {
            for b in 0..w.len() {
                let s = w[a].iter().zip(&w[b]).take_while(|(x, y)| x == y).count();
                if a == b || s < j || g.init(w[a][0]) != g.init(w[b][0]) {
                    continue;
                }
                best = best.max((f.values[a] - f.values[b]).norm() / code_distance(&w[a], &w[b], m));
            }
        }
        best
    }

    #[test]
    fn seminorm_matches_brute_force() {
        let (g, t) = setup("k23", 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = ThetaMetric::new(0.3).unwrap();
        for _ in 0..5 {
            let f = DependsFunction::random(&t, 4, &mut rng);
            for j in 0..4 {
                let a = lipschitz_seminorm(&g, &t, &f, j, m);
                let b = seminorm_brute(&g, &t, &f, j, m);
                assert!((a - b).abs() <= 1e-12 * b.max(1.0), "j={j}: {a} vs {b}");
            }
            assert_eq!(lipschitz_seminorm(&g, &t, &f, 4, m), 0.0);
        }
    }

    #[test]
    fn bounds_hold_on_k4() {
        let (g, t) = setup("k4", 4);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for theta in [0.2, 0.5, 0.8] {
            let r = verify_contraction_bounds(&g, &t, 4, ThetaMetric::new(theta).unwrap(), 20, &mut rng).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn loc_const_spectrum_on_k4() {
        let g = corpus::graph("k4").unwrap();
        for n in 2..=4 {
            let r = loc_const_spectrum_check(&g, n, &SpectrumOptions::default(), 1e-8, 1e-10).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn depth_guard() {
        let (g, t) = setup("c3", 6);
        assert!(transfer_matrix(&g, &t, 7).is_err());
        assert!(transfer_matrix(&g, &t, 0).is_err());
    }

    proptest! {
        #[test]
        fn ultrametric(seed in 0u64..500, theta in 0.05f64..0.95) {
            let (_, t) = setup("petersen", 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = ThetaMetric::new(theta).unwrap();
            let w = t.level(4);
            let pick = |r: &mut ChaCha8Rng| w[r.random_range(0..w.len())].clone();
            let (a, b, cc) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let (ab, bc, ac) = (code_distance(&a, &b, m), code_distance(&b, &cc, m), code_distance(&a, &cc, m));
            prop_assert!(ac <= ab.max(bc) + 1e-15);
            prop_assert_eq!(ab, code_distance(&b, &a, m));
        }

        #[test]
        fn sup_bound_for_random_functions(seed in 0u64..1000) {
            let (g, t) = setup("k23", 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = DependsFunction::random(&t, 3, &mut rng);
            let l = transfer_matrix(&g, &t, 3).unwrap();
            let lf = l.matrix.dot(&f.as_vec());
            prop_assert!(max_abs(lf.iter()) <= g.q_max() as f64 * f.sup_norm() + 1e-12);
        }
    }
}
