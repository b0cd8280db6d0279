//! Open-cluster counting by union-find, and open-path queries by
//! breadth-first search for questions union-find cannot answer (paths that
//! avoid a given bond, or that stay inside a window).

use alloc::vec;
use alloc::vec::Vec;

use crate::lattice::{BondConfig, Window};

const UNLABELLED: u32 = u32::MAX;

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    merges: usize,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        let mut uf = Self::default();
        uf.reset(len);
        uf
    }

    /// Back to `len` singletons, reusing the allocation.
    pub fn reset(&mut self, len: usize) {
        self.parent.clear();
        self.parent.extend(0..len as u32);
        self.size.clear();
        self.size.resize(len, 1);
        self.merges = 0;
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grandparent = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grandparent;
            x = grandparent;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns whether they were distinct.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        self.merges += 1;
        true
    }

    /// Number of unions that merged two distinct sets.
    pub fn merges(&self) -> usize {
        self.merges
    }

    pub fn set_count(&self) -> usize {
        self.len() - self.merges
    }

    pub fn size_of_root(&self, root: u32) -> u32 {
        self.size[root as usize]
    }
}

/// The open clusters of one configuration.
///
/// `component_id` holds a dense label per vertex, assigned in order of each
/// cluster's lowest vertex; `sizes[label]` is that cluster's vertex count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub component_id: Vec<u32>,
    pub count: usize,
    pub sizes: Vec<u32>,
}

impl ClusterLabeling {
    pub fn size_of_vertex(&self, v: usize) -> u32 {
        self.sizes[self.component_id[v] as usize]
    }

    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        self.component_id[u] == self.component_id[v]
    }
}

/// Reusable union-find scratch for counting clusters of many
/// configurations of the same box.
#[derive(Clone, Debug, Default)]
pub struct ClusterCounter {
    uf: UnionFind,
}

impl ClusterCounter {
    pub fn new() -> Self {
        Self::default()
    }

    fn unite_open_bonds(&mut self, config: &BondConfig) {
        let spec = config.spec();
        self.uf.reset(spec.vertex_count());
        let uf = &mut self.uf;
        spec.for_each_bond(|i, v1, v2, _| {
            if config.is_open(i) {
                uf.union(v1 as u32, v2 as u32);
            }
        });
    }

    /// `M_n` for `config`.
    pub fn count(&mut self, config: &BondConfig) -> usize {
        self.unite_open_bonds(config);
        self.uf.set_count()
    }

    pub fn labeling(&mut self, config: &BondConfig) -> ClusterLabeling {
        self.unite_open_bonds(config);
        let uf = &mut self.uf;
        let vertices = uf.len();
        let mut label_of_root = vec![UNLABELLED; vertices];
        let mut component_id = Vec::with_capacity(vertices);
        let mut sizes = Vec::new();
        for v in 0..vertices as u32 {
            let root = uf.find(v);
            let label = &mut label_of_root[root as usize];
            if *label == UNLABELLED {
                *label = sizes.len() as u32;
                sizes.push(uf.size_of_root(root));
            }
            component_id.push(*label);
        }
        let count = sizes.len();
        // Every merge removes exactly one cluster.
        assert_eq!(
            count,
            vertices - uf.merges(),
            "cluster count disagrees with the number of merges"
        );
        ClusterLabeling {
            component_id,
            count,
            sizes,
        }
    }
}

/// Labels the open clusters of `config`.
pub fn count_clusters(config: &BondConfig) -> ClusterLabeling {
    ClusterCounter::new().labeling(config)
}

/// Reusable breadth-first search over open bonds.
///
/// Visited marks are epoch-stamped so repeated searches on the same box do
/// not clear the whole mark array.
#[derive(Clone, Debug, Default)]
pub struct PathSearch {
    mark: Vec<u32>,
    epoch: u32,
    queue: Vec<usize>,
}

impl PathSearch {
    pub fn new() -> Self {
        Self::default()
    }

    fn begin(&mut self, vertices: usize) {
        if self.mark.len() < vertices {
            self.mark.resize(vertices, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.fill(0);
            self.epoch = 1;
        }
        self.queue.clear();
    }

    /// Whether an open path joins `from` and `to` without using any bond in
    /// `excluded` and, if given, without leaving `window`.
    pub fn connected(
        &mut self,
        config: &BondConfig,
        from: usize,
        to: usize,
        excluded: &[usize],
        window: Option<&Window>,
    ) -> bool {
        let spec = config.spec();
        if let Some(w) = window {
            if !w.contains(spec, from) || !w.contains(spec, to) {
                return false;
            }
        }
        if from == to {
            return true;
        }
        self.begin(spec.vertex_count());
        let epoch = self.epoch;
        let mark = &mut self.mark;
        let queue = &mut self.queue;
        mark[from] = epoch;
        queue.push(from);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            let mut found = false;
            spec.for_each_incident(u, |w, bond, axis, digit| {
                if found
                    || mark[w] == epoch
                    || !config.is_open(bond)
                    || excluded.contains(&bond)
                    || window.is_some_and(|win| !win.contains_digit(axis, digit))
                {
                    return;
                }
                if w == to {
                    found = true;
                    return;
                }
                mark[w] = epoch;
                queue.push(w);
            });
            if found {
                return true;
            }
        }
        false
    }
}

/// Whether `u` and `v` are joined by an open path avoiding every bond in
/// `excluded`.
pub fn connected_in_subgraph(config: &BondConfig, u: usize, v: usize, excluded: &[usize]) -> bool {
    PathSearch::new().connected(config, u, v, excluded, None)
}
