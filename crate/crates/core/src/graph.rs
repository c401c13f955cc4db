//! Finite graphs, oriented edges, turns and non-backtracking codes.
//!
//! Oriented edges are indexed in lexicographic order of `(init, term)`.
//! Every other module refers to edges by that index.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::ops::Range;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// A non-backtracking path, stored as its oriented edge indices.
pub type Code = Vec<usize>;

/// Upper bound on the number of codes held at a single level.
pub const MAX_CODES_PER_LEVEL: usize = 20_000;

#[derive(Clone, Debug)]
pub struct Graph {
    labels: Vec<u64>,
    edges: Vec<(usize, usize)>,
    op: Vec<usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

/// Summary written by `validate`.
#[derive(Clone, Debug, Serialize)]
pub struct GraphSummary {
    pub vertices: usize,
    pub undirected_edges: usize,
    pub oriented_edges: usize,
    pub degrees: Vec<usize>,
    pub q_max: usize,
    pub regular: bool,
    /// Original vertex label for each internal index.
    pub labels: Vec<u64>,
    pub reindexed: bool,
}

impl GraphSummary {
    /// One-line description such as `4 vertices, 6 edges, regular q=2`.
    pub fn headline(&self) -> String {
        let head = format!("{} vertices, {} edges", self.vertices, self.undirected_edges);
        if self.regular {
            format!("{head}, regular q={}", self.q_max)
        } else {
            let lo = self.degrees.iter().min().unwrap_or(&0);
            let hi = self.degrees.iter().max().unwrap_or(&0);
            format!("{head}, degrees {lo}..{hi}, q_max={}", self.q_max)
        }
    }
}

impl Graph {
    /// Builds a graph from undirected edges with arbitrary `u64` labels.
    /// Labels are mapped to `0..n` in ascending order.
    pub fn from_edges(pairs: &[(u64, u64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut seen = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for &(u, v) in pairs {
            if u == v {
                return Err(Error::Loop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(u, v));
            }
            labels.insert(u);
            labels.insert(v);
        }
        let labels: Vec<u64> = labels.into_iter().collect();
        let idx: HashMap<u64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let n = labels.len();

        let mut edges = Vec::with_capacity(2 * pairs.len());
        for &(u, v) in pairs {
            let (a, b) = (idx[&u], idx[&v]);
            edges.push((a, b));
            edges.push((b, a));
        }
        edges.sort_unstable();

        let mut degree = vec![0usize; n];
        for &(a, _) in &edges {
            degree[a] += 1;
        }
        if let Some((x, &d)) = degree.iter().enumerate().find(|(_, &d)| d <= 1) {
            return Err(Error::TerminalVertex { vertex: labels[x], degree: d });
        }

        let g = Self::assemble(labels, edges);
        let components = g.components();
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    fn assemble(labels: Vec<u64>, edges: Vec<(usize, usize)>) -> Self {
        let n = labels.len();
        let m = edges.len();
        let pos: HashMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let op: Vec<usize> = edges.iter().map(|&(a, b)| pos[&(b, a)]).collect();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            out_edges[a].push(i);
            in_edges[b].push(i);
        }
        let mut succ = vec![Vec::new(); m];
        let mut pred = vec![Vec::new(); m];
        for e in 0..m {
            for &a in &out_edges[edges[e].1] {
                if a != op[e] {
                    succ[e].push(a);
                    pred[a].push(e);
                }
            }
        }
        for p in &mut pred {
            p.sort_unstable();
        }
        Self { labels, edges, op, out_edges, in_edges, succ, pred }
    }

    fn components(&self) -> usize {
        let n = self.num_vertices();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &e in &self.out_edges[x] {
                    let y = self.edges[e].1;
                    if comp[y] == usize::MAX {
                        comp[y] = count;
                        queue.push_back(y);
                    }
                }
            }
            count += 1;
        }
        count
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    /// Number of oriented edges, `2|E|`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn init(&self, e: usize) -> usize {
        self.edges[e].0
    }

    pub fn term(&self, e: usize) -> usize {
        self.edges[e].1
    }

    pub fn op(&self, e: usize) -> usize {
        self.op[e]
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u, v)).ok()
    }

    pub fn degree(&self, x: usize) -> usize {
        self.out_edges[x].len()
    }

    /// `q(x) = deg(x) - 1`.
    pub fn q(&self, x: usize) -> usize {
        self.degree(x) - 1
    }

    pub fn q_max(&self) -> usize {
        (0..self.num_vertices()).map(|x| self.q(x)).max().unwrap_or(0)
    }

    pub fn is_regular(&self) -> bool {
        let d = self.degree(0);
        (0..self.num_vertices()).all(|x| self.degree(x) == d)
    }

    /// Oriented edges leaving `x`, in index order.
    pub fn out_edges(&self, x: usize) -> &[usize] {
        &self.out_edges[x]
    }

    /// Oriented edges arriving at `x`, in index order.
    pub fn in_edges(&self, x: usize) -> &[usize] {
        &self.in_edges[x]
    }

    /// True when `a` then `e` is a turn: `term(a) = init(e)` and `a != op(e)`.
    pub fn is_turn(&self, a: usize, e: usize) -> bool {
        self.term(a) == self.init(e) && a != self.op(e)
    }

    /// Edges `a` with `a ⌢ e`, in index order.
    pub fn turns_into(&self, e: usize) -> &[usize] {
        &self.pred[e]
    }

    /// Edges `a` with `e ⌢ a`, in index order.
    pub fn turns_from(&self, e: usize) -> &[usize] {
        &self.succ[e]
    }

    /// The successor chosen by the preferred continuation: the smallest index.
    pub fn preferred_turn(&self, e: usize) -> usize {
        self.succ[e][0]
    }

    pub fn is_code(&self, code: &[usize]) -> bool {
        code.iter().all(|&e| e < self.num_edges())
            && code.windows(2).all(|w| self.is_turn(w[0], w[1]))
    }

    /// `|W_n|` without materialising the codes.
    pub fn count_codes(&self, n: usize) -> u128 {
        if n == 0 {
            return 0;
        }
        let mut v = vec![1u128; self.num_edges()];
        for _ in 1..n {
            v = (0..self.num_edges())
                .map(|e| self.pred[e].iter().map(|&a| v[a]).sum())
                .collect();
        }
        v.iter().sum()
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            vertices: self.num_vertices(),
            undirected_edges: self.num_edges() / 2,
            oriented_edges: self.num_edges(),
            degrees: (0..self.num_vertices()).map(|x| self.degree(x)).collect(),
            q_max: self.q_max(),
            regular: self.is_regular(),
            labels: self.labels.clone(),
            reindexed: self.labels.iter().enumerate().any(|(i, &l)| l != i as u64),
        }
    }
}

/// Parses the whitespace edge-list format: one `u v` pair per line,
/// `#` starts a comment, blank lines are ignored.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected two vertex ids, found {}", toks.len()),
            });
        }
        let parse = |t: &str| {
            t.parse::<u64>().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("`{t}` is not a non-negative integer"),
            })
        };
        pairs.push((parse(toks[0])?, parse(toks[1])?));
    }
    Graph::from_edges(&pairs)
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text)
}

/// All codes of lengths `1..=depth`, grouped by level.
///
/// Level `k` is sorted lexicographically and the children of a code at
/// level `k` form a contiguous range of level `k + 1`.
#[derive(Clone, Debug)]
pub struct DistrictTree {
    levels: Vec<Vec<Code>>,
    parents: Vec<Vec<usize>>,
    child_start: Vec<Vec<usize>>,
    index: Vec<HashMap<Code, usize>>,
}

impl DistrictTree {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `W_k` for `1 <= k <= depth`.
    pub fn level(&self, k: usize) -> &[Code] {
        &self.levels[k - 1]
    }

    pub fn size(&self, k: usize) -> usize {
        self.levels[k - 1].len()
    }

    pub fn index_of(&self, code: &[usize]) -> Option<usize> {
        self.index.get(code.len().checked_sub(1)?)?.get(code).copied()
    }

    /// Index at level `k - 1` of the parent of code `i` at level `k >= 2`.
    pub fn parent(&self, k: usize, i: usize) -> usize {
        self.parents[k - 1][i]
    }

    /// Range at level `k + 1` of the one-edge extensions of code `i` at level `k`.
    pub fn children(&self, k: usize, i: usize) -> Range<usize> {
        let st = &self.child_start[k - 1];
        st[i]..st[i + 1]
    }

    /// Index at level `k` of the length-`k` prefix of code `i` at level `n >= k`.
    pub fn ancestor(&self, n: usize, i: usize, k: usize) -> usize {
        let mut j = i;
        for lvl in (k + 1..=n).rev() {
            j = self.parent(lvl, j);
        }
        j
    }
}

pub fn enumerate_codes(g: &Graph, depth: usize) -> Result<DistrictTree> {
    if depth == 0 {
        return Err(Error::Depth { depth, msg: "code depth must be at least 1".into() });
    }
    let count = g.count_codes(depth);
    if count > MAX_CODES_PER_LEVEL as u128 {
        return Err(Error::Depth {
            depth,
            msg: format!("|W_{depth}| = {count} exceeds {MAX_CODES_PER_LEVEL}"),
        });
    }
    let mut levels: Vec<Vec<Code>> = vec![(0..g.num_edges()).map(|e| vec![e]).collect()];
    let mut parents = vec![vec![usize::MAX; g.num_edges()]];
    let mut child_start = Vec::new();
    for _ in 1..depth {
        let prev = levels.last().unwrap();
        let mut next = Vec::new();
        let mut par = Vec::new();
        let mut starts = Vec::with_capacity(prev.len() + 1);
        for (i, code) in prev.iter().enumerate() {
            starts.push(next.len());
            for &a in g.turns_from(*code.last().unwrap()) {
                let mut c = code.clone();
                c.push(a);
                next.push(c);
                par.push(i);
            }
        }
        starts.push(next.len());
        child_start.push(starts);
        levels.push(next);
        parents.push(par);
    }
    child_start.push(vec![0; levels.last().unwrap().len() + 1]);
    let index = levels
        .iter()
        .map(|lvl| lvl.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect())
        .collect();
    Ok(DistrictTree { levels, parents, child_start, index })
}

/// The bundled graph corpus.
pub mod corpus {
    use super::*;

    pub const C3: &str = include_str!("../data/c3.edges");
    pub const C4: &str = include_str!("../data/c4.edges");
    pub const K4: &str = include_str!("../data/k4.edges");
    pub const K23: &str = include_str!("../data/k23.edges");
    pub const PETERSEN: &str = include_str!("../data/petersen.edges");

    pub const NAMES: [&str; 5] = ["c3", "c4", "k4", "k23", "petersen"];

    pub fn source(name: &str) -> Option<&'static str> {
        Some(match name {
            "c3" => C3,
            "c4" => C4,
            "k4" => K4,
            "k23" => K23,
            "petersen" => PETERSEN,
            _ => return None,
        })
    }

    pub fn graph(name: &str) -> Option<Graph> {
        source(name).map(|s| parse_edge_list(s).expect("bundled graph is valid"))
    }

    pub fn all() -> BTreeMap<&'static str, Graph> {
        NAMES.iter().map(|&n| (n, graph(n).unwrap())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k4() -> Graph {
        corpus::graph("k4").unwrap()
    }

    #[test]
    fn edges_sorted_and_op_involutive() {
        let g = k4();
        assert_eq!(g.num_edges(), 12);
        assert_eq!(g.edge(0), (0, 1));
        assert_eq!(g.edge(11), (3, 2));
        for e in 0..g.num_edges() {
            assert_eq!(g.op(g.op(e)), e);
            assert_ne!(g.op(e), e);
            assert_eq!(g.init(g.op(e)), g.term(e));
        }
    }

    #[test]
    fn q_values() {
        let g = corpus::graph("k23").unwrap();
        assert_eq!((0..5).map(|x| g.q(x)).collect::<Vec<_>>(), vec![2, 2, 1, 1, 1]);
        assert_eq!(g.q_max(), 2);
        assert!(!g.is_regular());
        assert!(k4().is_regular());
    }

    #[test]
    fn turns_into_counts_on_k4() {
        let g = k4();
        let e = g.edge_index(0, 1).unwrap();
        let into: Vec<_> = g.turns_into(e).iter().map(|&a| g.edge(a)).collect();
        assert_eq!(into, vec![(2, 0), (3, 0)]);
        let from: Vec<_> = g.turns_from(e).iter().map(|&a| g.edge(a)).collect();
        assert_eq!(from, vec![(1, 2), (1, 3)]);
    }

    #[test]
    fn no_backtracking_turn() {
        let g = k4();
        let e = g.edge_index(0, 1).unwrap();
        assert!(!g.is_turn(e, g.op(e)));
    }

    #[test]
    fn code_counts() {
        assert_eq!(enumerate_codes(&k4(), 2).unwrap().size(2), 24);
        let k23 = corpus::graph("k23").unwrap();
        let t = enumerate_codes(&k23, 2).unwrap();
        assert_eq!(t.size(1), 12);
        assert_eq!(t.size(2), 18);
        let sum_q_init: usize = (0..k23.num_edges()).map(|e| k23.q(k23.init(e))).sum();
        assert_eq!(sum_q_init, 18);
    }

    #[test]
    fn count_codes_matches_enumeration() {
        for (_, g) in corpus::all() {
            let t = enumerate_codes(&g, 4).unwrap();
            for k in 1..=4 {
                assert_eq!(g.count_codes(k), t.size(k) as u128);
            }
        }
    }

    #[test]
    fn tree_structure() {
        let g = corpus::graph("petersen").unwrap();
        let t = enumerate_codes(&g, 3).unwrap();
        for k in 1..3 {
            for i in 0..t.size(k) {
                for j in t.children(k, i) {
                    assert_eq!(t.parent(k + 1, j), i);
                    assert_eq!(&t.level(k + 1)[j][..k], &t.level(k)[i][..]);
                }
            }
            assert!(t.level(k + 1).windows(2).all(|w| w[0] < w[1]));
        }
        for (i, c) in t.level(3).iter().enumerate() {
            assert!(g.is_code(c));
            assert_eq!(t.index_of(c), Some(i));
            assert_eq!(t.level(1)[t.ancestor(3, i, 1)], vec![c[0]]);
        }
    }

    #[test]
    fn loader_errors() {
        assert!(matches!(parse_edge_list("0 1\n1 2\n"), Err(Error::TerminalVertex { .. })));
        assert!(matches!(
            parse_edge_list("0 1\n1 2\n2 0\n3 4\n4 5\n5 3\n"),
            Err(Error::Disconnected { components: 2 })
        ));
        assert!(matches!(parse_edge_list("0 0\n"), Err(Error::Loop(0))));
        assert!(matches!(parse_edge_list("0 1\n1 0\n"), Err(Error::DuplicateEdge(1, 0))));
        assert!(matches!(parse_edge_list("0 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("# nothing\n\n"), Err(Error::EmptyGraph)));
    }

    #[test]
    fn reindexes_sparse_labels() {
        let g = parse_edge_list("10 20 # a\n\n20 30\n30 10\n").unwrap();
        assert_eq!(g.labels(), &[10, 20, 30]);
        assert!(g.summary().reindexed);
        assert_eq!(g.edge(0), (0, 1));
    }

    #[test]
    fn headlines() {
        assert_eq!(corpus::graph("k4").unwrap().summary().headline(), "4 vertices, 6 edges, regular q=2");
        assert_eq!(corpus::graph("k23").unwrap().summary().headline(), "5 vertices, 6 edges, degrees 2..3, q_max=2");
    }
}
