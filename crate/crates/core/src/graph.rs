//! Union-find and breadth-first helpers over mesh connectivity.

use std::collections::VecDeque;

use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    /// Set label per element, numbered by first appearance, and the set count.
    pub fn contiguous_labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut root_label = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut count = 0;
        for (x, label) in labels.iter_mut().enumerate() {
            let r = self.find(x);
            if root_label[r] == usize::MAX {
                root_label[r] = count;
                count += 1;
            }
            *label = root_label[r];
        }
        (labels, count)
    }
}

/// Hop distances from a set of sources over the mesh vertex graph, stopping
/// at `max_depth`. Unreached vertices get `usize::MAX`.
pub fn bfs_distances(mesh: &Mesh, sources: &[usize], max_depth: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; mesh.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if dist[v] >= max_depth {
            continue;
        }
        for w in mesh.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Number of connected components of the subgraph induced by `members`.
pub fn induced_components(mesh: &Mesh, members: &[bool]) -> usize {
    let mut seen = vec![false; mesh.vertex_count()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mesh.vertex_count() {
        if !members[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for w in mesh.neighbors(v) {
                if members[w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

/// Number of connected components formed by the given edges (only vertices
/// touched by at least one of them count).
pub fn edge_subgraph_components(mesh: &Mesh, edges: impl Iterator<Item = usize>) -> usize {
    let mut dsu = DisjointSet::new(mesh.vertex_count());
    let mut touched = vec![false; mesh.vertex_count()];
    for e in edges {
        let [a, b] = mesh.edges()[e];
        touched[a] = true;
        touched[b] = true;
        dsu.union(a, b);
    }
    let mut roots: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| touched[v])
        .map(|v| dsu.find(v))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}
