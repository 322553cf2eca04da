//! Spanning trees over the 4-connected pixel grid and the two-pass
//! geodesic aggregation on them.

use crate::image::ColorImage;

/// Grid edge between pixel `a` and its right (`a + 1`) or lower (`a + w`) neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Edge {
    pub a: u32,
    pub b: u32,
    pub weight: f32,
}

/// All grid edges in `(y, x, direction)` order (right before down), sorted
/// ascending by weight with ties kept in that order.
pub(crate) fn sorted_grid_edges(guide: &ColorImage) -> Vec<Edge> {
    let (w, h) = (guide.width(), guide.height());
    let diff = |p: usize, q: usize| {
        let (u, v) = (guide.pixel(p % w, p / w), guide.pixel(q % w, q / w));
        (u[0] - v[0]).abs().max((u[1] - v[1]).abs()).max((u[2] - v[2]).abs())
    };
    let mut edges = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                edges.push(Edge { a: p as u32, b: (p + 1) as u32, weight: diff(p, p + 1) });
            }
            if y + 1 < h {
                edges.push(Edge { a: p as u32, b: (p + w) as u32, weight: diff(p, p + w) });
            }
        }
    }
    edges.sort_by(|e, f| e.weight.total_cmp(&f.weight));
    edges
}

/// Union-find with per-set size and largest internal edge weight.
pub(crate) struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
    internal: Vec<f32>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    pub(crate) fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let grand = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = grand;
            v = grand;
        }
        v
    }

    /// Merges two roots; `weight` becomes the internal difference of the union.
    pub(crate) fn union(&mut self, ra: u32, rb: u32, weight: f32) {
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        let int = self.internal[big as usize].max(self.internal[small as usize]).max(weight);
        self.internal[big as usize] = int;
    }

    pub(crate) fn size(&self, root: u32) -> u32 {
        self.size[root as usize]
    }

    pub(crate) fn internal(&self, root: u32) -> f32 {
        self.internal[root as usize]
    }
}

/// Rooted spanning tree over `width * height` pixel nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    width: usize,
    height: usize,
    root: u32,
    /// `parent[root] == root`.
    parent: Vec<u32>,
    /// Weight of the edge to the parent, 0 for the root.
    parent_weight: Vec<f32>,
    child_start: Vec<u32>,
    child_list: Vec<u32>,
    /// Breadth-first order from the root; every parent precedes its children.
    order: Vec<u32>,
}

impl SpanningTree {
    /// Roots the tree given by `edges` (which must span all nodes) at node 0.
    pub(crate) fn from_edges(width: usize, height: usize, edges: &[Edge]) -> Self {
        let n = width * height;
        debug_assert_eq!(edges.len() + 1, n);
        let mut degree = vec![0u32; n + 1];
        for e in edges {
            degree[e.a as usize + 1] += 1;
            degree[e.b as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let adj_start = degree;
        let mut fill = adj_start.clone();
        let mut adj = vec![(0u32, 0f32); 2 * edges.len()];
        for e in edges {
            adj[fill[e.a as usize] as usize] = (e.b, e.weight);
            fill[e.a as usize] += 1;
            adj[fill[e.b as usize] as usize] = (e.a, e.weight);
            fill[e.b as usize] += 1;
        }

        let root = 0u32;
        let mut parent = vec![u32::MAX; n];
        let mut parent_weight = vec![0.0f32; n];
        let mut order = Vec::with_capacity(n);
        parent[root as usize] = root;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let v = order[head] as usize;
            head += 1;
            for &(u, wgt) in &adj[adj_start[v] as usize..adj_start[v + 1] as usize] {
                if parent[u as usize] == u32::MAX {
                    parent[u as usize] = v as u32;
                    parent_weight[u as usize] = wgt;
                    order.push(u);
                }
            }
        }
        assert_eq!(order.len(), n, "edge set does not span the grid");

        let mut child_start = vec![0u32; n + 1];
        for &v in &order[1..] {
            child_start[parent[v as usize] as usize + 1] += 1;
        }
        for i in 0..n {
            child_start[i + 1] += child_start[i];
        }
        let mut fill = child_start.clone();
        let mut child_list = vec![0u32; n - 1];
        for &v in &order[1..] {
            let p = parent[v as usize] as usize;
            child_list[fill[p] as usize] = v;
            fill[p] += 1;
        }

        Self { width, height, root, parent, parent_weight, child_start, child_list, order }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root as usize
    }

    /// Parent of `v`, `None` for the root.
    pub fn parent(&self, v: usize) -> Option<usize> {
        (v as u32 != self.root).then(|| self.parent[v] as usize)
    }

    /// Weight of the edge from `v` to its parent (0 for the root).
    pub fn parent_weight(&self, v: usize) -> f32 {
        self.parent_weight[v]
    }

    pub fn children(&self, v: usize) -> &[u32] {
        &self.child_list[self.child_start[v] as usize..self.child_start[v + 1] as usize]
    }

    /// Nodes in root-to-leaf order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.parent_weight.iter().map(|&w| w as f64).sum()
    }

    /// Undirected tree edges as `(min node, max node, weight)`.
    pub fn edges(&self) -> Vec<(usize, usize, f32)> {
        self.order[1..]
            .iter()
            .map(|&v| {
                let p = self.parent[v as usize];
                (v.min(p) as usize, v.max(p) as usize, self.parent_weight[v as usize])
            })
            .collect()
    }
}

/// Minimum spanning tree of the 4-connected grid, edge weight = largest
/// per-channel absolute difference. Ties resolve by `(y, x, direction)`.
pub fn build_mst(guide: &ColorImage) -> SpanningTree {
    let n = guide.width() * guide.height();
    let mut sets = DisjointSets::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for e in sorted_grid_edges(guide) {
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra != rb {
            sets.union(ra, rb, e.weight);
            chosen.push(e);
            if chosen.len() + 1 == n {
                break;
            }
        }
    }
    SpanningTree::from_edges(guide.width(), guide.height(), &chosen)
}

/// Segment tree: a first Kruskal pass only merges components `A`, `B` across
/// an edge of weight `w` when `w <= min(Int(A) + k/|A|, Int(B) + k/|B|)`; a
/// second pass links the resulting segments with the lightest remaining edges.
pub fn build_segment_tree(guide: &ColorImage, k: f64) -> SpanningTree {
    let n = guide.width() * guide.height();
    let edges = sorted_grid_edges(guide);
    let mut sets = DisjointSets::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    let mut used = vec![false; edges.len()];
    for (idx, e) in edges.iter().enumerate() {
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra == rb {
            continue;
        }
        let tol = |r: u32| sets.internal(r) as f64 + k / sets.size(r) as f64;
        if (e.weight as f64) <= tol(ra).min(tol(rb)) {
            sets.union(ra, rb, e.weight);
            chosen.push(*e);
            used[idx] = true;
        }
    }
    for (idx, e) in edges.iter().enumerate() {
        if chosen.len() + 1 >= n {
            break;
        }
        if used[idx] {
            continue;
        }
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra != rb {
            sets.union(ra, rb, e.weight);
            chosen.push(*e);
        }
    }
    SpanningTree::from_edges(guide.width(), guide.height(), &chosen)
}

/// Unnormalized geodesic sums `sum_j exp(-D(i,j)/sigma) x_j` for an
/// interleaved buffer with `channels` values per node.
pub(crate) fn tree_sums(tree: &SpanningTree, input: &[f32], channels: usize, sigma: f64) -> Vec<f64> {
    let similarity: Vec<f64> = tree
        .parent_weight
        .iter()
        .map(|&w| (-(w as f64) / sigma).exp())
        .collect();
    let mut buf: Vec<f64> = input.iter().map(|&v| v as f64).collect();

    // leaves to root: each node absorbs its children's upward sums
    for &v in tree.order[1..].iter().rev() {
        let v = v as usize;
        let p = tree.parent[v] as usize;
        let s = similarity[v];
        let (child, parent) = pair_mut(&mut buf, v, p, channels);
        for (pc, cc) in parent.iter_mut().zip(child.iter()) {
            *pc += s * cc;
        }
    }

    // root to leaves: buf[p] is final once v is visited
    for &v in &tree.order[1..] {
        let v = v as usize;
        let p = tree.parent[v] as usize;
        let s = similarity[v];
        let keep = 1.0 - s * s;
        let (child, parent) = pair_mut(&mut buf, v, p, channels);
        for (cc, pc) in child.iter_mut().zip(parent.iter()) {
            *cc = s * pc + keep * *cc;
        }
    }
    buf
}

/// Disjoint mutable views of node `a` and node `b` (`a != b`).
fn pair_mut(buf: &mut [f64], a: usize, b: usize, ch: usize) -> (&mut [f64], &mut [f64]) {
    if a < b {
        let (lo, hi) = buf.split_at_mut(b * ch);
        (&mut lo[a * ch..(a + 1) * ch], &mut hi[..ch])
    } else {
        let (lo, hi) = buf.split_at_mut(a * ch);
        (&mut hi[..ch], &mut lo[b * ch..(b + 1) * ch])
    }
}
