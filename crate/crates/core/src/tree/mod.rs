//! Trees, their centers and central subtrees, convex hulls, and the
//! recursive edge-agreement protocol built on 2-graded consensus.

mod tc;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use tc::{Domain, PathTc, Segment, Split, Tc, TcInput, TreeTc};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("not a tree: {0}")]
    Invalid(String),
    #[error("vertex {0} is not in the tree")]
    MissingVertex(u32),
    #[error("diameter {0} is not even and at least 2")]
    OddDiameter(u32),
    #[error("bad anchor: {0}")]
    BadAnchor(String),
}

/// A finite tree with integer vertex ids. Subtrees keep the ids of the tree
/// they were cut from, so ids need not be contiguous.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct Tree {
    /// Sorted vertex ids.
    ids: Vec<u32>,
    /// Neighbor positions, ascending.
    adj: Vec<Vec<usize>>,
}

/// Serialized form: vertex ids plus lexicographically sorted edges.
#[derive(Serialize, Deserialize)]
struct TreeRepr {
    vertices: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl TryFrom<TreeRepr> for Tree {
    type Error = TreeError;
    fn try_from(r: TreeRepr) -> Result<Self, TreeError> {
        Tree::new(r.vertices, &r.edges)
    }
}

impl From<Tree> for TreeRepr {
    fn from(t: Tree) -> Self {
        TreeRepr { vertices: t.ids.clone(), edges: t.edges() }
    }
}

/// Center, ordered center neighbors `w_1..w_d`, and the central subtree of each.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CentralDecomposition {
    pub sigma: u32,
    pub neighbors: Vec<u32>,
    pub subtrees: Vec<Tree>,
}

impl Tree {
    /// Builds a tree on `vertices` from an edge list.
    pub fn new(mut vertices: Vec<u32>, edges: &[(u32, u32)]) -> Result<Tree, TreeError> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.is_empty() {
            return Err(TreeError::Invalid("no vertices".into()));
        }
        if edges.len() + 1 != vertices.len() {
            return Err(TreeError::Invalid(format!("{} edges on {} vertices", edges.len(), vertices.len())));
        }
        let mut adj = vec![Vec::new(); vertices.len()];
        for &(u, v) in edges {
            let pu = vertices.binary_search(&u).map_err(|_| TreeError::MissingVertex(u))?;
            let pv = vertices.binary_search(&v).map_err(|_| TreeError::MissingVertex(v))?;
            if pu == pv {
                return Err(TreeError::Invalid(format!("self-loop at {u}")));
            }
            adj[pu].push(pv);
            adj[pv].push(pu);
        }
        for list in &mut adj {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(TreeError::Invalid("parallel edges".into()));
            }
        }
        let tree = Tree { ids: vertices, adj };
        // n − 1 edges and connected ⇒ acyclic
        if tree.bfs(0).iter().any(|d| d.is_none()) {
            return Err(TreeError::Invalid("disconnected".into()));
        }
        Ok(tree)
    }

    /// Vertices `0..vertex_count` from an edge list.
    pub fn from_edges(vertex_count: u32, edges: &[(u32, u32)]) -> Result<Tree, TreeError> {
        Tree::new((0..vertex_count).collect(), edges)
    }

    pub fn single(v: u32) -> Tree {
        Tree { ids: vec![v], adj: vec![Vec::new()] }
    }

    /// The path `0, 1, …, len`.
    pub fn path(len: u32) -> Tree {
        let edges: Vec<_> = (0..len).map(|i| (i, i + 1)).collect();
        Tree::from_edges(len + 1, &edges).expect("a path is a tree")
    }

    /// Vertex 0 with `limbs` paths of `len` vertices attached; limb `m` is
    /// `1 + m·len, …, (m + 1)·len` outward.
    pub fn spider(limbs: u32, len: u32) -> Tree {
        let mut edges = Vec::new();
        for m in 0..limbs {
            let base = 1 + m * len;
            for g in 0..len {
                let inner = if g == 0 { 0 } else { base + g - 1 };
                edges.push((inner, base + g));
            }
        }
        Tree::from_edges(1 + limbs * len, &edges).expect("a spider is a tree")
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn vertices(&self) -> &[u32] {
        &self.ids
    }

    pub fn contains(&self, v: u32) -> bool {
        self.pos(v).is_some()
    }

    fn pos(&self, v: u32) -> Option<usize> {
        self.ids.binary_search(&v).ok()
    }

    fn pos_of(&self, v: u32) -> Result<usize, TreeError> {
        self.pos(v).ok_or(TreeError::MissingVertex(v))
    }

    pub fn neighbors(&self, v: u32) -> Vec<u32> {
        self.pos(v).map(|p| self.adj[p].iter().map(|&q| self.ids[q]).collect()).unwrap_or_default()
    }

    pub fn degree(&self, v: u32) -> usize {
        self.pos(v).map_or(0, |p| self.adj[p].len())
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_leaf(&self, v: u32) -> bool {
        self.degree(v) == 1
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.ids.len().saturating_sub(1));
        for (p, list) in self.adj.iter().enumerate() {
            for &q in list {
                if p < q {
                    out.push((self.ids[p], self.ids[q]));
                }
            }
        }
        out
    }

    /// Distances from position `src`; `None` if unreachable.
    fn bfs(&self, src: usize) -> Vec<Option<u32>> {
        self.bfs_parents(src).0
    }

    fn bfs_parents(&self, src: usize) -> (Vec<Option<u32>>, Vec<usize>) {
        let mut dist = vec![None; self.ids.len()];
        let mut parent = vec![usize::MAX; self.ids.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(p) = queue.pop_front() {
            let d = dist[p].expect("queued vertices have distances");
            for &q in &self.adj[p] {
                if dist[q].is_none() {
                    dist[q] = Some(d + 1);
                    parent[q] = p;
                    queue.push_back(q);
                }
            }
        }
        (dist, parent)
    }

    /// Farthest position from `src`, smallest id on ties.
    fn farthest(&self, src: usize) -> (usize, u32) {
        let dist = self.bfs(src);
        let mut best = (src, 0);
        for (p, d) in dist.iter().enumerate() {
            let d = d.expect("connected");
            if d > best.1 {
                best = (p, d);
            }
        }
        best
    }

    pub fn distance(&self, u: u32, v: u32) -> Result<u32, TreeError> {
        let (pu, pv) = (self.pos_of(u)?, self.pos_of(v)?);
        Ok(self.bfs(pu)[pv].expect("connected"))
    }

    /// Vertices on the path from `u` to `v`, in order.
    pub fn path_between(&self, u: u32, v: u32) -> Result<Vec<u32>, TreeError> {
        let (pu, pv) = (self.pos_of(u)?, self.pos_of(v)?);
        let (_, parent) = self.bfs_parents(pv);
        let mut out = vec![u];
        let mut p = pu;
        while p != pv {
            p = parent[p];
            out.push(self.ids[p]);
        }
        Ok(out)
    }

    /// Endpoints of a diametral path, found by double BFS from the smallest id.
    pub fn diametral_endpoints(&self) -> (u32, u32) {
        let (p, _) = self.farthest(0);
        let (q, _) = self.farthest(p);
        (self.ids[p], self.ids[q])
    }

    pub fn diameter(&self) -> u32 {
        let (p, _) = self.farthest(0);
        self.farthest(p).1
    }

    /// The unique vertex of eccentricity `D/2`.
    pub fn center(&self) -> Result<u32, TreeError> {
        let d = self.diameter();
        if d < 2 || d % 2 == 1 {
            return Err(TreeError::OddDiameter(d));
        }
        let (x, y) = self.diametral_endpoints();
        Ok(self.path_between(x, y)?[(d / 2) as usize])
    }

    /// Neighbor of `sigma` on the path towards `v != sigma`.
    fn toward(&self, sigma: u32, v: u32) -> Result<u32, TreeError> {
        Ok(self.path_between(sigma, v)?[1])
    }

    /// Central subtrees ordered by the anchors: `w_1` towards `a`, `w_2`
    /// towards `b`, the remaining neighbors of the center ascending.
    pub fn central_decomposition(&self, a: Option<u32>, b: Option<u32>) -> Result<CentralDecomposition, TreeError> {
        let sigma = self.center()?;
        let half = self.diameter() / 2;
        let check = |name: &str, x: u32| -> Result<u32, TreeError> {
            if !self.contains(x) {
                return Err(TreeError::BadAnchor(format!("{name} = {x} is not a vertex")));
            }
            if !self.is_leaf(x) || self.distance(sigma, x)? != half {
                return Err(TreeError::BadAnchor(format!("{name} = {x} is not a leaf at distance {half} from the center")));
            }
            self.toward(sigma, x)
        };
        let mut neighbors = Vec::new();
        if let Some(a) = a {
            neighbors.push(check("a", a)?);
        }
        if let Some(b) = b {
            let wb = check("b", b)?;
            if neighbors.contains(&wb) {
                return Err(TreeError::BadAnchor("a and b leave the center by the same neighbor".into()));
            }
            neighbors.push(wb);
        }
        let mut rest: Vec<u32> = self.neighbors(sigma).into_iter().filter(|w| !neighbors.contains(w)).collect();
        rest.sort_unstable();
        neighbors.extend(rest);
        let ps = self.pos_of(sigma)?;
        let subtrees = neighbors
            .iter()
            .map(|&w| {
                // everything reachable from w without passing sigma, plus sigma
                let mut seen = BTreeSet::from([ps]);
                let mut stack = vec![self.pos(w).expect("neighbor")];
                while let Some(p) = stack.pop() {
                    if seen.insert(p) {
                        stack.extend(self.adj[p].iter().copied().filter(|q| !seen.contains(q)));
                    }
                }
                self.induced_positions(&seen)
            })
            .collect();
        Ok(CentralDecomposition { sigma, neighbors, subtrees })
    }

    fn induced_positions(&self, set: &BTreeSet<usize>) -> Tree {
        let ids: Vec<u32> = set.iter().map(|&p| self.ids[p]).collect();
        Tree::new(ids, &self.induced_edges(set)).expect("a connected vertex set induces a tree")
    }

    fn induced_edges(&self, set: &BTreeSet<usize>) -> Vec<(u32, u32)> {
        let mut edges = Vec::new();
        for &p in set {
            for &q in &self.adj[p] {
                if q > p && set.contains(&q) {
                    edges.push((self.ids[p], self.ids[q]));
                }
            }
        }
        edges
    }

    /// Subgraph induced by a connected vertex set.
    pub fn induced(&self, vertices: &BTreeSet<u32>) -> Result<Tree, TreeError> {
        let set = vertices.iter().map(|&v| self.pos_of(v)).collect::<Result<BTreeSet<_>, _>>()?;
        let ids: Vec<u32> = vertices.iter().copied().collect();
        Tree::new(ids, &self.induced_edges(&set))
    }

    /// Smallest convex set containing `z`: repeatedly strips leaves outside `z`.
    pub fn convex_hull(&self, z: &BTreeSet<u32>) -> Result<BTreeSet<u32>, TreeError> {
        for &v in z {
            self.pos_of(v)?;
        }
        if z.is_empty() {
            return Ok(BTreeSet::new());
        }
        let mut alive = vec![true; self.ids.len()];
        let mut deg: Vec<usize> = self.adj.iter().map(Vec::len).collect();
        let keep = |p: usize| z.contains(&self.ids[p]);
        let mut queue: VecDeque<usize> = (0..self.ids.len()).filter(|&p| deg[p] <= 1 && !keep(p)).collect();
        while let Some(p) = queue.pop_front() {
            if !alive[p] {
                continue;
            }
            alive[p] = false;
            for &q in &self.adj[p] {
                if alive[q] {
                    deg[q] -= 1;
                    if deg[q] <= 1 && !keep(q) {
                        queue.push_back(q);
                    }
                }
            }
        }
        Ok((0..self.ids.len()).filter(|&p| alive[p]).map(|p| self.ids[p]).collect())
    }

    /// Minimum index `k` (1-based) with `v ∈ H_k`.
    pub fn gc_input_index(&self, v: u32, dec: &CentralDecomposition) -> Result<u32, TreeError> {
        self.pos_of(v)?;
        if v == dec.sigma {
            return Ok(1);
        }
        let w = self.toward(dec.sigma, v)?;
        let k = dec.neighbors.iter().position(|&x| x == w).expect("every neighbor has a subtree");
        Ok(k as u32 + 1)
    }

    /// Pads the tree to diameter `2^⌈log₂ D⌉` by extending one diametral
    /// endpoint with a path of fresh ids. Returns the tree and the opposite
    /// endpoint, which lies at half the new diameter from the new center.
    pub fn grow_to_power_of_two(&self) -> Result<(Tree, u32), TreeError> {
        let d = self.diameter();
        if d < 2 {
            return Err(TreeError::OddDiameter(d));
        }
        let (far, anchor) = self.diametral_endpoints();
        let target = d.next_power_of_two();
        if target == d {
            return Ok((self.clone(), anchor));
        }
        let mut ids = self.ids.clone();
        let mut edges = self.edges();
        let mut prev = far;
        let first = self.ids.last().expect("non-empty") + 1;
        for next in first..first + (target - d) {
            ids.push(next);
            edges.push((prev, next));
            prev = next;
        }
        Ok((Tree::new(ids, &edges)?, anchor))
    }

    /// Whether the tree has diameter `2^j` and, for `j ≥ 1`, every central
    /// subtree recursively satisfies the same for `j − 1`. Edge agreement by
    /// repeated halving is guaranteed on exactly these trees.
    pub fn is_halving(&self, j: u32) -> bool {
        if self.diameter() != 1 << j {
            return false;
        }
        if j == 0 {
            return true;
        }
        match self.central_decomposition(None, None) {
            Ok(dec) => dec.subtrees.iter().all(|h| h.is_halving(j - 1)),
            Err(_) => false,
        }
    }
}

/// A random tree on which [`Tree::is_halving`] holds for `j`, with maximum
/// degree at most `max_degree.max(2)`. Returns the tree and two leaves at
/// distance `2^j`: vertices 0 and 1.
pub fn random_halving_tree(j: u32, max_degree: u32, rng: &mut impl rand::Rng) -> Tree {
    fn branch(j: u32, anchor: u32, far: u32, extra: u32, next: &mut u32, rng: &mut impl rand::Rng, edges: &mut Vec<(u32, u32)>) {
        if j == 0 {
            edges.push((anchor, far));
            return;
        }
        let center = *next;
        *next += 1;
        // the center is a leaf of each branch, so its degree is the branch count
        branch(j - 1, center, anchor, extra, next, rng, edges);
        branch(j - 1, center, far, extra, next, rng, edges);
        for _ in 0..rng.gen_range(0..=extra) {
            let leaf = *next;
            *next += 1;
            branch(j - 1, center, leaf, extra, next, rng, edges);
        }
    }
    let mut edges = Vec::new();
    let mut next = 2;
    branch(j, 0, 1, max_degree.saturating_sub(2), &mut next, rng, &mut edges);
    Tree::from_edges(next, &edges).expect("a tree by construction")
}

/// Spider with center 0 and one limb of `k` vertices per graded-consensus
/// value, plus the leaf standing for each value. Leaf-only edge agreement
/// on it is `k`-graded consensus: vertex `(m, g)` reads as value `m` with
/// grade `g`, the center as `(⊥, 0)`.
pub fn build_spider_fixture(value_count: u32, k: u32) -> (Tree, Vec<u32>) {
    let tree = Tree::spider(value_count, k);
    let leaves = (0..value_count).map(|m| (m + 1) * k).collect();
    (tree, leaves)
}

/// Reads a spider vertex back as `(value, grade)`; the center is `None`.
pub fn spider_grade(v: u32, k: u32) -> Option<(u32, u32)> {
    (v != 0).then(|| ((v - 1) / k, (v - 1) % k + 1))
}

#[cfg(test)]
mod tests;
