//! The universal cover truncated at a finite radius around a base vertex.
//!
//! Cover vertices are reduced edge paths starting at the base; the empty
//! path is the root `o`. An end `ω` is approximated by a cylinder, the set
//! of ends through a given vertex. Boundary measures are stored on the
//! cylinders of all cover vertices, with the root holding the total mass.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::ops::Range;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Code, Graph};
use crate::linalg::{c, eigenspace, max_abs, C64, ZERO};
use crate::measures::{canonical_transpose, measure_from_edge_function, MeasureTable};
use crate::operators::turn_sum;
use crate::spectral::{spectrum, SpectrumOptions};

pub const MAX_COVER_VERTICES: usize = 500_000;

#[derive(Clone, Debug)]
pub struct TruncatedCover {
    base: usize,
    depth: usize,
    codes: Vec<Code>,
    index: HashMap<Code, usize>,
    parent: Vec<usize>,
    children: Vec<Range<usize>>,
    projection: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeckGenerator {
    /// The non-tree edge `(u, v)`, `u < v`, that closes the loop.
    pub edge: (usize, usize),
    /// Reduced closed edge path at the base.
    pub path: Vec<usize>,
}

/// A reduced word in the deck generators: letter `+(i+1)` is generator
/// `i`, `-(i+1)` its inverse.
pub type DeckWord = Vec<i32>;

#[derive(Clone, Debug, Serialize)]
pub struct CoverJson {
    pub base: usize,
    pub depth: usize,
    pub vertices: Vec<Code>,
    pub projection: Vec<usize>,
    pub generators: Vec<DeckGenerator>,
}

impl TruncatedCover {
    pub fn base(&self) -> usize {
        self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn code(&self, v: usize) -> &[usize] {
        &self.codes[v]
    }

    pub fn index_of(&self, code: &[usize]) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != 0).then(|| self.parent[v])
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        self.children[v].clone()
    }

    pub fn level(&self, v: usize) -> usize {
        self.codes[v].len()
    }

    /// The graph vertex under cover vertex `v`.
    pub fn project(&self, v: usize) -> usize {
        self.projection[v]
    }

    pub fn to_json(&self, g: &Graph) -> CoverJson {
        CoverJson {
            base: self.base,
            depth: self.depth,
            vertices: self.codes.clone(),
            projection: self.projection.clone(),
            generators: deck_generators(g, self.base),
        }
    }
}

/// Number of reduced paths of length `<= depth` from `base`.
pub fn cover_size(g: &Graph, base: usize, depth: usize) -> u128 {
    let mut total = 1u128;
    let mut cur: Vec<u128> = vec![0; g.num_edges()];
    for &e in g.out_edges(base) {
        cur[e] = 1;
    }
    for k in 1..=depth {
        total += cur.iter().sum::<u128>();
        if k < depth {
            cur = (0..g.num_edges()).map(|e| g.turns_into(e).iter().map(|&a| cur[a]).sum()).collect();
        }
    }
    total
}

pub fn build_cover(g: &Graph, base: usize, depth: usize) -> Result<TruncatedCover> {
    if base >= g.num_vertices() {
        return Err(Error::Config(format!("base vertex {base} out of range")));
    }
    let size = cover_size(g, base, depth);
    if size > MAX_COVER_VERTICES as u128 {
        return Err(Error::Depth { depth, msg: format!("cover has {size} vertices, limit {MAX_COVER_VERTICES}") });
    }
    let mut codes: Vec<Code> = vec![Vec::new()];
    let mut parent = vec![usize::MAX];
    let mut children = Vec::new();
    let mut projection = vec![base];
    let mut v = 0;
    while v < codes.len() {
        let start = codes.len();
        if codes[v].len() < depth {
            let next: &[usize] = match codes[v].last() {
                None => g.out_edges(base),
                Some(&e) => g.turns_from(e),
            };
            for &a in next {
                let mut code = codes[v].clone();
                code.push(a);
                codes.push(code);
                parent.push(v);
                projection.push(g.term(a));
            }
        }
        children.push(start..codes.len());
        v += 1;
    }
    let index = codes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    Ok(TruncatedCover { base, depth, codes, index, parent, children, projection })
}

/// Cancels every `e` immediately followed by `op e`.
pub fn reduce(g: &Graph, path: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(path.len());
    for &e in path {
        if out.last() == Some(&g.op(e)) {
            out.pop();
        } else {
            out.push(e);
        }
    }
    out
}

/// The reversed path, `op e_n … op e_1`.
pub fn reverse_path(g: &Graph, path: &[usize]) -> Vec<usize> {
    path.iter().rev().map(|&e| g.op(e)).collect()
}

fn concat_reduce(g: &Graph, a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut p = a.to_vec();
    p.extend_from_slice(b);
    reduce(g, &p)
}

/// Free generators of the deck group: one loop per edge outside a BFS
/// spanning tree rooted at `base`.
pub fn deck_generators(g: &Graph, base: usize) -> Vec<DeckGenerator> {
    let n = g.num_vertices();
    let mut tree_path: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut tree_edges = BTreeSet::new();
    tree_path[base] = Some(Vec::new());
    let mut queue = VecDeque::from([base]);
    while let Some(x) = queue.pop_front() {
        for &e in g.out_edges(x) {
            let y = g.term(e);
            if tree_path[y].is_none() {
                let mut p = tree_path[x].clone().unwrap();
                p.push(e);
                tree_path[y] = Some(p);
                tree_edges.insert((x.min(y), x.max(y)));
                queue.push_back(y);
            }
        }
    }
    let mut gens = Vec::new();
    for e in 0..g.num_edges() {
        let (u, v) = g.edge(e);
        if u < v && !tree_edges.contains(&(u, v)) {
            let mut path = tree_path[u].clone().unwrap();
            path.push(e);
            path.extend(reverse_path(g, tree_path[v].as_ref().unwrap()));
            gens.push(DeckGenerator { edge: (u, v), path });
        }
    }
    gens
}

/// The closed edge path of a word, reduced.
pub fn word_path(g: &Graph, gens: &[DeckGenerator], word: &[i32]) -> Vec<usize> {
    let mut p = Vec::new();
    for &l in word {
        let gp = &gens[(l.unsigned_abs() - 1) as usize].path;
        if l > 0 {
            p.extend_from_slice(gp);
        } else {
            p.extend(reverse_path(g, gp));
        }
    }
    reduce(g, &p)
}

pub fn inverse_word(word: &[i32]) -> DeckWord {
    word.iter().rev().map(|l| -l).collect()
}

/// All reduced words of length `0..=max_len` over `rank` generators.
pub fn reduced_words(rank: usize, max_len: usize) -> Vec<DeckWord> {
    let letters: Vec<i32> = (1..=rank as i32).flat_map(|i| [i, -i]).collect();
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::<i32>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                if w.last() != Some(&-l) {
                    let mut x = w.clone();
                    x.push(l);
                    next.push(x);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `γ · x` for a cover vertex given as a code.
pub fn deck_action(g: &Graph, word_path: &[usize], code: &[usize]) -> Vec<usize> {
    concat_reduce(g, word_path, code)
}

/// Image of the cylinder through `cyl` under the deck element with path
/// `w`, if the image is again a single cylinder.
pub fn cylinder_image(g: &Graph, w: &[usize], cyl: &[usize]) -> Option<Vec<usize>> {
    let mut t = 0;
    while t < w.len() && t < cyl.len() && w[w.len() - 1 - t] == g.op(cyl[t]) {
        t += 1;
    }
    if t >= cyl.len() && !cyl.is_empty() {
        return None;
    }
    let mut out = w[..w.len() - t].to_vec();
    out.extend_from_slice(&cyl[t..]);
    Some(out)
}

/// `⟨x, ω⟩ = 2k - |x|` with `k` the length of the common prefix of `x`
/// and `ω`, for any `ω` in the cylinder `cyl`; `None` when that length is
/// not determined by `cyl`.
pub fn horocycle_bracket(x: &[usize], cyl: &[usize]) -> Option<i64> {
    let k = x.iter().zip(cyl).take_while(|(a, b)| a == b).count();
    if k == x.len() || k < cyl.len() {
        Some(2 * k as i64 - x.len() as i64)
    } else {
        None
    }
}

fn cylinder_children(g: &Graph, base: usize, cyl: &[usize]) -> Vec<Vec<usize>> {
    let next: &[usize] = match cyl.last() {
        None => g.out_edges(base),
        Some(&e) => g.turns_from(e),
    };
    next.iter()
        .map(|&a| {
            let mut v = cyl.to_vec();
            v.push(a);
            v
        })
        .collect()
}

/// Depth-first refinement of `start` cylinders: `eval` is retried on the
/// children of every cylinder where it returns `None`, down to `max_depth`.
/// Returns the number of cylinders left undetermined.
pub fn refine<F: FnMut(&[usize]) -> Option<()>>(
    g: &Graph,
    base: usize,
    start: Vec<Vec<usize>>,
    max_depth: usize,
    mut eval: F,
) -> usize {
    let mut stack = start;
    let mut undetermined = 0;
    while let Some(cyl) = stack.pop() {
        if eval(&cyl).is_some() {
            continue;
        }
        if cyl.len() >= max_depth {
            undetermined += 1;
        } else {
            stack.extend(cylinder_children(g, base, &cyl));
        }
    }
    undetermined
}

/// All reduced codes of length exactly `n` from `base`.
pub fn cylinders_at(g: &Graph, base: usize, n: usize) -> Vec<Vec<usize>> {
    let mut cur = vec![Vec::new()];
    for _ in 0..n {
        cur = cur.iter().flat_map(|c| cylinder_children(g, base, c)).collect();
    }
    cur
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CocycleReport {
    pub words: usize,
    pub pairs: usize,
    pub cells: usize,
    pub undetermined: usize,
    /// `⟨γx, γω⟩ ≠ ⟨x, ω⟩ + ⟨γo, γω⟩`.
    pub horocycle_violations: usize,
    /// `⟨γ₁γ₂o, ω⟩ ≠ ⟨γ₂o, γ₁⁻¹ω⟩ + ⟨γ₁o, ω⟩`.
    pub cocycle_violations: usize,
    /// The same with `γ₁ω` in place of `γ₁⁻¹ω`; not an identity in general.
    pub forward_variant_violations: usize,
    pub forward_variant_cells: usize,
}

/// Checks the horocycle identity for every word in `words` and vertex in
/// `xs`, and the cocycle identity for every pair in `pairs`, on all ends
/// through the depth-`start_depth` cylinders.
pub fn verify_cocycle_identities(
    g: &Graph,
    base: usize,
    gens: &[DeckGenerator],
    words: &[DeckWord],
    xs: &[Vec<usize>],
    pairs: &[(DeckWord, DeckWord)],
    start_depth: usize,
) -> CocycleReport {
    let mut r = CocycleReport { words: words.len(), pairs: pairs.len(), ..Default::default() };
    let start = cylinders_at(g, base, start_depth);
    for w in words {
        let wp = word_path(g, gens, w);
        for x in xs {
            let gx = deck_action(g, &wp, x);
            let max_depth = start_depth + x.len() + 2 * wp.len() + 2;
            r.undetermined += refine(g, base, start.clone(), max_depth, |cyl| {
                let b1 = horocycle_bracket(x, cyl)?;
                let gc = cylinder_image(g, &wp, cyl)?;
                let b2 = horocycle_bracket(&gx, &gc)?;
                let b3 = horocycle_bracket(&wp, &gc)?;
                r.cells += 1;
                if b2 != b1 + b3 {
                    r.horocycle_violations += 1;
                }
                Some(())
            });
        }
    }
    for (w1, w2) in pairs {
        let p1 = word_path(g, gens, w1);
        let p2 = word_path(g, gens, w2);
        let p1_inv = word_path(g, gens, &inverse_word(w1));
        let p12 = concat_reduce(g, &p1, &p2);
        let max_depth = start_depth + 2 * (p1.len() + p2.len()) + 2;
        r.undetermined += refine(g, base, start.clone(), max_depth, |cyl| {
            let lhs = horocycle_bracket(&p12, cyl)?;
            let a = horocycle_bracket(&p2, &cylinder_image(g, &p1_inv, cyl)?)?;
            let b = horocycle_bracket(&p1, cyl)?;
            r.cells += 1;
            if lhs != a + b {
                r.cocycle_violations += 1;
            }
            Some(())
        });
        refine(g, base, start.clone(), max_depth, |cyl| {
            let lhs = horocycle_bracket(&p12, cyl)?;
            let a = horocycle_bracket(&p2, &cylinder_image(g, &p1, cyl)?)?;
            let b = horocycle_bracket(&p1, cyl)?;
            r.forward_variant_cells += 1;
            if lhs != a + b {
                r.forward_variant_violations += 1;
            }
            Some(())
        });
    }
    r
}

/// A finitely additive measure on the boundary, stored on the cylinders
/// of all cover vertices (the root entry is the total mass).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMeasure {
    pub values: Vec<C64>,
}

impl BoundaryMeasure {
    /// Random leaves at the cover depth, coarser cylinders by additivity.
    pub fn random_additive<R: Rng>(cover: &TruncatedCover, rng: &mut R) -> Self {
        let mut values = vec![ZERO; cover.len()];
        for v in (0..cover.len()).rev() {
            let ch = cover.children(v);
            values[v] = if ch.is_empty() { c(rng.random(), rng.random()) } else { ch.map(|u| values[u]).sum() };
        }
        Self { values }
    }

    /// Max of `|ν(x) - Σ_children ν(y)|` over non-leaf vertices.
    pub fn additivity_residual(&self, cover: &TruncatedCover) -> f64 {
        (0..cover.len())
            .filter(|&v| !cover.children(v).is_empty())
            .map(|v| (self.values[v] - cover.children(v).map(|u| self.values[u]).sum::<C64>()).norm())
            .fold(0.0, f64::max)
    }
}

/// `P(ν)(x) = ∫ z^{⟨x,ω⟩} dν(ω)` at every cover vertex, integrating over
/// the coarsest partition on which `⟨x, ·⟩` is constant.
pub fn poisson_transform(cover: &TruncatedCover, nu: &BoundaryMeasure, z: C64) -> Result<Vec<C64>> {
    if z == ZERO {
        return Err(Error::ZeroParameter);
    }
    let mut out = vec![ZERO; cover.len()];
    let mut chain = Vec::new();
    for (x, slot) in out.iter_mut().enumerate() {
        let d = cover.level(x) as i32;
        chain.clear();
        let mut v = x;
        chain.push(v);
        while let Some(p) = cover.parent(v) {
            chain.push(p);
            v = p;
        }
        chain.reverse();
        let mut acc = z.powi(d) * nu.values[x];
        for k in 0..d as usize {
            let on_path = chain[k + 1];
            let side: C64 = cover.children(chain[k]).filter(|&u| u != on_path).map(|u| nu.values[u]).sum();
            acc += z.powi(2 * k as i32 - d) * side;
        }
        *slot = acc;
    }
    Ok(out)
}

/// Max of `|Σ_{y~x} F(y) - (z + q/z) F(x)|` over vertices of level `< depth`.
pub fn verify_tree_equalizer(g: &Graph, cover: &TruncatedCover, f: &[C64], z: C64) -> f64 {
    let mut r = 0.0f64;
    for x in 0..cover.len() {
        if cover.level(x) >= cover.depth() {
            continue;
        }
        let mut s: C64 = cover.children(x).map(|y| f[y]).sum();
        if let Some(p) = cover.parent(x) {
            s += f[p];
        }
        let q = g.q(cover.project(x)) as f64;
        r = r.max((s - (z + q / z) * f[x]).norm());
    }
    r
}

/// `ν(∂₊(p → c)) = (z F(c) - F(p)) / ((z² - 1) z^{|p|})`.
pub fn boundary_value(cover: &TruncatedCover, f: &[C64], z: C64) -> Result<BoundaryMeasure> {
    if z == ZERO || (z * z - 1.0).norm() == 0.0 {
        return Err(Error::Config("boundary values need z outside {-1, 0, 1}".into()));
    }
    let mut values = vec![ZERO; cover.len()];
    for v in 1..cover.len() {
        let p = cover.parent(v).unwrap();
        values[v] = (z * f[v] - f[p]) / ((z * z - 1.0) * z.powi(cover.level(p) as i32));
    }
    values[0] = cover.children(0).map(|u| values[u]).sum();
    Ok(BoundaryMeasure { values })
}

/// `ν(c) = μ(c)` on codes from the base.
pub fn restriction(cover: &TruncatedCover, tree: &crate::graph::DistrictTree, mu: &MeasureTable) -> Result<BoundaryMeasure> {
    if cover.depth() > mu.depth() {
        return Err(Error::Depth { depth: cover.depth(), msg: format!("measure depth {} is shallower than the cover", mu.depth()) });
    }
    let mut values = vec![ZERO; cover.len()];
    for (v, slot) in values.iter_mut().enumerate().skip(1) {
        *slot = mu.value(tree, cover.code(v)).expect("cover codes are graph codes");
    }
    values[0] = cover.children(0).map(|u| values[u]).sum();
    Ok(BoundaryMeasure { values })
}

/// Recovers `f(op e) = z^{|c|} ν(c ⌢ e)`, together with the largest
/// disagreement between different occurrences of the same last edge.
pub fn reconstruction(g: &Graph, cover: &TruncatedCover, nu: &BoundaryMeasure, z: C64) -> Result<(Vec<C64>, f64)> {
    let mut f: Vec<Option<C64>> = vec![None; g.num_edges()];
    let mut spread = 0.0f64;
    let mut scale = 0.0f64;
    for v in 1..cover.len() {
        let code = cover.code(v);
        let e = *code.last().unwrap();
        let val = z.powi(code.len() as i32 - 1) * nu.values[v];
        scale = scale.max(val.norm());
        match f[g.op(e)] {
            None => f[g.op(e)] = Some(val),
            Some(prev) => spread = spread.max((prev - val).norm()),
        }
    }
    let f = f
        .into_iter()
        .enumerate()
        .map(|(e, v)| v.ok_or_else(|| Error::Reconstruction(format!("edge {e} is not reached within depth {}", cover.depth()))))
        .collect::<Result<Vec<_>>>()?;
    Ok((f, spread / scale.max(1.0)))
}

/// Largest `|z^{|p|} ν(c) - z^{|γp|} ν(γc)|` over cover edges `p → c` whose
/// image under each generator (and inverse) also points away from the root
/// and stays within the cover.
pub fn twisted_invariance_residual(
    g: &Graph,
    cover: &TruncatedCover,
    gens: &[DeckGenerator],
    nu: &BoundaryMeasure,
    z: C64,
) -> (f64, usize) {
    let mut r = 0.0f64;
    let mut checked = 0;
    let words: Vec<DeckWord> = (1..=gens.len() as i32).flat_map(|i| [vec![i], vec![-i]]).collect();
    for w in &words {
        let wp = word_path(g, gens, w);
        for v in 1..cover.len() {
            let p = cover.parent(v).unwrap();
            let gp = deck_action(g, &wp, cover.code(p));
            let gc = deck_action(g, &wp, cover.code(v));
            if gc.len() != gp.len() + 1 {
                continue;
            }
            let Some(u) = cover.index_of(&gc) else { continue };
            let lhs = z.powi(cover.level(p) as i32) * nu.values[v];
            let rhs = z.powi(gp.len() as i32) * nu.values[u];
            r = r.max((lhs - rhs).norm());
            checked += 1;
        }
    }
    (r, checked)
}

#[derive(Clone, Debug, Serialize)]
pub struct IntertwiningReport {
    pub words: usize,
    pub vertices_checked: usize,
    pub vertices_skipped: usize,
    pub max_residual: f64,
}

/// Checks `P(c_z(γo, o) · γν) = γ P(ν)` on cover vertices `x` with
/// `|x| <= max_level`, where `(γν)(C) = ν(γ⁻¹C)` and
/// `c_z(y, o)(ω) = z^{-⟨y, ω⟩}`.
pub fn verify_intertwining(
    g: &Graph,
    cover: &TruncatedCover,
    gens: &[DeckGenerator],
    words: &[DeckWord],
    nu: &BoundaryMeasure,
    z: C64,
    max_level: usize,
) -> Result<IntertwiningReport> {
    let pnu = poisson_transform(cover, nu, z)?;
    let base = cover.base();
    let mut rep = IntertwiningReport { words: words.len(), vertices_checked: 0, vertices_skipped: 0, max_residual: 0.0 };
    for w in words {
        let wp = word_path(g, gens, w);
        let wp_inv = word_path(g, gens, &inverse_word(w));
        for x in 0..cover.len() {
            if cover.level(x) > max_level {
                continue;
            }
            let xc = cover.code(x);
            let Some(rhs_v) = cover.index_of(&deck_action(g, &wp_inv, xc)) else {
                rep.vertices_skipped += 1;
                continue;
            };
            let mut lhs = ZERO;
            let mut ok = true;
            let max_depth = cover.depth();
            let und = refine(g, base, cylinders_at(g, base, 1), max_depth, |cyl| {
                let bx = horocycle_bracket(xc, cyl)?;
                let bg = horocycle_bracket(&wp, cyl)?;
                let pre = cylinder_image(g, &wp_inv, cyl)?;
                match cover.index_of(&pre) {
                    Some(u) => lhs += z.powi((bx - bg) as i32) * nu.values[u],
                    None => ok = false,
                }
                Some(())
            });
            if !ok || und > 0 {
                rep.vertices_skipped += 1;
                continue;
            }
            let scale = pnu[rhs_v].norm().max(1.0);
            rep.max_residual = rep.max_residual.max((lhs - pnu[rhs_v]).norm() / scale);
            rep.vertices_checked += 1;
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagramRow {
    #[serde(serialize_with = "crate::ser::complex")]
    pub z: C64,
    pub eigenspace_dim: usize,
    /// Max relative `|P(restriction μ) - lift(I f)|` over cover vertices.
    pub deviation: f64,
    /// Relative tree-equalizer residual of `P(restriction μ)`.
    pub equalizer_residual: f64,
    /// Relative `|boundary_value(P ν) - ν|`.
    pub boundary_round_trip: f64,
    /// Relative `|μ(c ⌢ e) - z^{-|c|} z/(z²-1) (G_z I f)(op e)|`.
    pub normalization_residual: f64,
    /// Largest disagreement in reconstructing `f` from `ν`, and its error.
    pub reconstruction_spread: f64,
    pub reconstruction_error: f64,
    pub twisted_invariance_residual: f64,
    pub twisted_invariance_checked: usize,
    /// Values of `P(ν)` at the root, one per basis vector.
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub root_values: Vec<C64>,
}

/// Runs both routes around the square for every basis vector of
/// `null(S - z)`: restrict the eigen-measure to the boundary and apply the
/// Poisson transform, or transpose it to an edge function, sum into
/// vertices with `I` and lift.
pub fn diagram_check(
    g: &Graph,
    cover: &TruncatedCover,
    tree: &crate::graph::DistrictTree,
    z: C64,
    opts: &SpectrumOptions,
) -> Result<DiagramRow> {
    let s = turn_sum(g)?.matrix;
    let basis = eigenspace(&s, z, opts.rank_tol)?;
    let gens = deck_generators(g, cover.base());
    let gz = crate::operators::twisted_gradient(g, z)?.matrix;
    let insum = crate::operators::in_sum(g)?.matrix;
    let mut row = DiagramRow {
        z,
        eigenspace_dim: basis.ncols(),
        deviation: 0.0,
        equalizer_residual: 0.0,
        boundary_round_trip: 0.0,
        normalization_residual: 0.0,
        reconstruction_spread: 0.0,
        reconstruction_error: 0.0,
        twisted_invariance_residual: 0.0,
        twisted_invariance_checked: 0,
        root_values: Vec::new(),
    };
    for col in basis.columns() {
        let f = col.to_vec();
        let mu = measure_from_edge_function(g, tree, &f, z, cover.depth(), 1e-8)?;
        let nu = restriction(cover, tree, &mu)?;
        let path_a = poisson_transform(cover, &nu, z)?;

        let ft = canonical_transpose(g, &mu);
        let fv = insum.dot(&ndarray::Array1::from(ft.clone()));
        let path_b: Vec<C64> = (0..cover.len()).map(|x| fv[cover.project(x)]).collect();
        let scale = max_abs(path_b.iter()).max(1e-300);
        let dev = path_a.iter().zip(&path_b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        row.deviation = row.deviation.max(dev / scale);
        row.equalizer_residual = row.equalizer_residual.max(verify_tree_equalizer(g, cover, &path_a, z) / scale);

        let back = boundary_value(cover, &path_a, z)?;
        let nscale = max_abs(nu.values.iter()).max(1e-300);
        let bt = back.values.iter().zip(&nu.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        row.boundary_round_trip = row.boundary_round_trip.max(bt / nscale);

        let grad = gz.dot(&fv);
        let k = z / (z * z - 1.0);
        for v in 1..cover.len() {
            let code = cover.code(v);
            let e = *code.last().unwrap();
            let want = z.powi(1 - code.len() as i32) * k * grad[g.op(e)];
            row.normalization_residual = row.normalization_residual.max((nu.values[v] - want).norm() / nscale);
        }

        let (rec, spread) = reconstruction(g, cover, &nu, z)?;
        row.reconstruction_spread = row.reconstruction_spread.max(spread);
        let fscale = max_abs(f.iter()).max(1e-300);
        row.reconstruction_error = row
            .reconstruction_error
            .max(rec.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / fscale);

        let (ti, n) = twisted_invariance_residual(g, cover, &gens, &nu, z);
        row.twisted_invariance_residual = row.twisted_invariance_residual.max(ti / nscale);
        row.twisted_invariance_checked += n;
        row.root_values.push(path_a[0]);
    }
    Ok(row)
}

/// Nonzero eigenvalues of `S` outside the unit tolerance of `±1`.
pub fn admissible_eigenvalues(g: &Graph, opts: &SpectrumOptions) -> Result<Vec<C64>> {
    let spec = spectrum(&turn_sum(g)?.matrix, opts)?;
    Ok(spec
        .nonzero()
        .map(|cl| cl.value)
        .filter(|z| (z - 1.0).norm() > 1e-6 && (z + 1.0).norm() > 1e-6)
        .collect())
}
