//! 3-D grid geometry, node placement instances, and their file format.
//!
//! Devices occupy grid vertices addressed as `[i, j, k]`. A radio link is
//! feasible between two vertices when their Euclidean separation is at
//! most the instance range (inclusive). Relay paths may take any hop the
//! range allows, axis-aligned or diagonal.
//!
//! Instances serialize as JSON documents with exactly the fields of
//! [`GridInstance`]; round-trips are lossless.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::NetworkGraph;
use crate::Real;

/// Grid dimensions and physical cell edge length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<F> {
    /// Vertex counts along each axis.
    pub dims: [usize; 3],
    /// Edge length of one grid cell, in meters.
    pub cell_edge: F,
}

impl<F: Real> GridSpec<F> {
    pub fn vertex_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn contains(&self, v: [usize; 3]) -> bool {
        v[0] < self.dims[0] && v[1] < self.dims[1] && v[2] < self.dims[2]
    }

    /// Linear index ordered so that ascending ids are ascending
    /// `[i, j, k]` lexicographic order.
    pub fn index(&self, v: [usize; 3]) -> Result<usize> {
        if !self.contains(v) {
            return Err(Error::VertexOutOfBounds(v[0], v[1], v[2]));
        }
        Ok((v[0] * self.dims[1] + v[1]) * self.dims[2] + v[2])
    }

    pub fn vertex(&self, index: usize) -> [usize; 3] {
        let k = index % self.dims[2];
        let rest = index / self.dims[2];
        let j = rest % self.dims[1];
        let i = rest / self.dims[1];
        [i, j, k]
    }

    /// Euclidean distance between two grid vertices, in meters.
    pub fn distance(&self, a: [usize; 3], b: [usize; 3]) -> Result<F> {
        for &v in [a, b].iter() {
            if !self.contains(v) {
                return Err(Error::VertexOutOfBounds(v[0], v[1], v[2]));
            }
        }
        let mut sq = 0.0f64;
        for axis in 0..3 {
            let d = a[axis] as f64 - b[axis] as f64;
            sq += d * d;
        }
        Ok(self.cell_edge * F::from_f64(sq.sqrt()).unwrap())
    }
}

/// What a deployed device does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    BaseStation,
    ClusterHead,
    FirstPhaseRelay,
    SecondPhaseRelay,
}

/// One device pinned to a grid vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePlacement {
    pub vertex: [usize; 3],
    pub role: NodeRole,
}

/// A deployment instance: grid, radio range, placed devices, and the
/// candidate vertices second-phase relays may occupy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInstance<F> {
    pub dims: [usize; 3],
    /// Cell edge length in meters.
    pub cell_edge: F,
    /// Radio range in meters; links are feasible at distance <= range_r.
    pub range_r: F,
    pub nodes: Vec<NodePlacement>,
    pub candidates: Vec<[usize; 3]>,
}

impl<F: Real + Serialize + for<'de> Deserialize<'de>> GridInstance<F> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: GridInstance<F> = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl<F: Real> GridInstance<F> {
    pub fn spec(&self) -> GridSpec<F> {
        GridSpec {
            dims: self.dims,
            cell_edge: self.cell_edge,
        }
    }

    /// Vertices occupied by placed devices, in node order.
    pub fn occupied(&self) -> Vec<[usize; 3]> {
        self.nodes.iter().map(|n| n.vertex).collect()
    }

    pub fn base_station(&self) -> Option<[usize; 3]> {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::BaseStation)
            .map(|n| n.vertex)
    }

    pub fn cluster_heads(&self) -> Vec<[usize; 3]> {
        self.nodes
            .iter()
            .filter(|n| n.role == NodeRole::ClusterHead)
            .map(|n| n.vertex)
            .collect()
    }

    /// Structural invariants: positive dims and ranges, in-bounds
    /// vertices, no shared vertices, exactly one base station, and
    /// candidates disjoint from occupied vertices.
    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidInstance("grid dims must be positive".into()));
        }
        if !(self.cell_edge > F::zero()) || !(self.range_r > F::zero()) {
            return Err(Error::InvalidInstance(
                "cell_edge and range_r must be positive".into(),
            ));
        }
        let spec = self.spec();
        let mut seen = std::collections::BTreeSet::new();
        for node in &self.nodes {
            if !spec.contains(node.vertex) {
                let [i, j, k] = node.vertex;
                return Err(Error::VertexOutOfBounds(i, j, k));
            }
            if !seen.insert(node.vertex) {
                return Err(Error::InvalidInstance(format!(
                    "vertex {:?} is occupied twice",
                    node.vertex
                )));
            }
        }
        let bs_count = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::BaseStation)
            .count();
        if bs_count != 1 {
            return Err(Error::InvalidInstance(format!(
                "expected exactly 1 base station, found {bs_count}"
            )));
        }
        let mut cand_seen = std::collections::BTreeSet::new();
        for &c in &self.candidates {
            if !spec.contains(c) {
                return Err(Error::VertexOutOfBounds(c[0], c[1], c[2]));
            }
            if seen.contains(&c) {
                return Err(Error::InvalidInstance(format!(
                    "candidate {c:?} collides with an occupied vertex"
                )));
            }
            if !cand_seen.insert(c) {
                return Err(Error::InvalidInstance(format!(
                    "candidate {c:?} listed twice"
                )));
            }
        }
        Ok(())
    }
}

/// All unordered in-range pairs among the given vertices.
pub fn links_among<F: Real>(
    spec: &GridSpec<F>,
    range_r: F,
    vertices: &[[usize; 3]],
) -> Result<Vec<([usize; 3], [usize; 3])>> {
    let mut links = Vec::new();
    for (a, &u) in vertices.iter().enumerate() {
        for &v in vertices.iter().skip(a + 1) {
            if spec.distance(u, v)? <= range_r {
                links.push((u, v));
            }
        }
    }
    Ok(links)
}

/// Geometric graph over `vertices` (indexed by position in the slice)
/// with an edge wherever the separation is within `range_r`.
pub fn unit_disk_graph<F: Real>(
    spec: &GridSpec<F>,
    range_r: F,
    vertices: &[[usize; 3]],
) -> Result<NetworkGraph> {
    let mut g = NetworkGraph::new(vertices.len());
    for (a, &u) in vertices.iter().enumerate() {
        for (b, &v) in vertices.iter().enumerate().skip(a + 1) {
            if spec.distance(u, v)? <= range_r {
                g.add_edge(a, b)?;
            }
        }
    }
    Ok(g)
}

/// In-range vertex pairs over the union of occupied and candidate
/// vertices of an instance.
pub fn feasible_links<F: Real>(inst: &GridInstance<F>) -> Result<Vec<([usize; 3], [usize; 3])>> {
    let mut vertices = inst.occupied();
    vertices.extend(inst.candidates.iter().copied());
    links_among(&inst.spec(), inst.range_r, &vertices)
}

/// Fewest intermediate grid vertices relaying `a` to `b` so that every
/// hop is within range. Ties resolve to the lexicographically smallest
/// vertex sequence. The endpoints are not included.
pub fn grid_path_relays<F: Real>(
    inst: &GridInstance<F>,
    a: [usize; 3],
    b: [usize; 3],
) -> Result<Vec<[usize; 3]>> {
    let spec = inst.spec();
    for &v in [a, b].iter() {
        if !spec.contains(v) {
            return Err(Error::VertexOutOfBounds(v[0], v[1], v[2]));
        }
    }
    if a == b {
        return Ok(Vec::new());
    }
    if spec.distance(a, b)? <= inst.range_r {
        return Ok(Vec::new());
    }

    // Hops reach any vertex within range; precompute the step offsets.
    let max_step = {
        let ratio = inst.range_r / inst.cell_edge;
        num_traits::cast::<F, f64>(ratio).unwrap().floor() as i64
    };
    if max_step < 1 {
        return Err(Error::NoRelayPath(a, b));
    }
    let range_cells_sq = {
        let ratio = num_traits::cast::<F, f64>(inst.range_r / inst.cell_edge).unwrap();
        // Nudge for exact-ratio grids so "distance == range" stays in.
        ratio * ratio + 1e-9
    };
    let mut steps = Vec::new();
    for di in -max_step..=max_step {
        for dj in -max_step..=max_step {
            for dk in -max_step..=max_step {
                if (di, dj, dk) == (0, 0, 0) {
                    continue;
                }
                let sq = (di * di + dj * dj + dk * dk) as f64;
                if sq <= range_cells_sq {
                    steps.push([di, dj, dk]);
                }
            }
        }
    }

    let neighbor_ids = |id: usize| -> Vec<usize> {
        let [i, j, k] = spec.vertex(id);
        let mut out = Vec::with_capacity(steps.len());
        for s in &steps {
            let ni = i as i64 + s[0];
            let nj = j as i64 + s[1];
            let nk = k as i64 + s[2];
            if ni >= 0
                && nj >= 0
                && nk >= 0
                && (ni as usize) < spec.dims[0]
                && (nj as usize) < spec.dims[1]
                && (nk as usize) < spec.dims[2]
            {
                out.push(spec.index([ni as usize, nj as usize, nk as usize]).unwrap());
            }
        }
        out.sort_unstable();
        out
    };

    // BFS from b gives hop counts; walking from a picking the smallest
    // next id among distance-decreasing neighbors yields the
    // lexicographically smallest shortest vertex sequence.
    let total = spec.vertex_count();
    let src = spec.index(a)?;
    let dst = spec.index(b)?;
    let mut dist = vec![usize::MAX; total];
    dist[dst] = 0;
    let mut queue = VecDeque::from([dst]);
    while let Some(u) = queue.pop_front() {
        if u == src {
            break;
        }
        for v in neighbor_ids(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[src] == usize::MAX {
        return Err(Error::NoRelayPath(a, b));
    }

    let mut relays = Vec::new();
    let mut current = src;
    while dist[current] > 1 {
        let next = neighbor_ids(current)
            .into_iter()
            .find(|&v| dist[v] == dist[current] - 1)
            .expect("a distance-decreasing neighbor exists on a shortest path");
        relays.push(spec.vertex(next));
        current = next;
    }
    Ok(relays)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn inst(dims: [usize; 3], cell: f64, range: f64) -> GridInstance<f64> {
        GridInstance {
            dims,
            cell_edge: cell,
            range_r: range,
            nodes: vec![
                NodePlacement {
                    vertex: [0, 0, 0],
                    role: NodeRole::BaseStation,
                },
            ],
            candidates: vec![],
        }
    }

    #[test]
    fn distances_on_the_unit_grid() {
        let spec = GridSpec {
            dims: [4, 4, 4],
            cell_edge: 100.0,
        };
        assert_relative_eq!(spec.distance([0, 0, 0], [1, 0, 0]).unwrap(), 100.0);
        assert_relative_eq!(
            spec.distance([0, 0, 0], [1, 1, 1]).unwrap(),
            100.0 * 3.0f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(spec.distance([3, 3, 3], [3, 3, 3]).unwrap(), 0.0);
        assert!(spec.distance([0, 0, 0], [4, 0, 0]).is_err());
    }

    #[test]
    fn distance_is_symmetric_and_triangular() {
        let spec = GridSpec {
            dims: [5, 5, 5],
            cell_edge: 50.0,
        };
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let p = |rng: &mut StdRng| {
                [
                    rng.gen_range(0..5usize),
                    rng.gen_range(0..5usize),
                    rng.gen_range(0..5usize),
                ]
            };
            let (a, b, c) = (p(&mut rng), p(&mut rng), p(&mut rng));
            let ab = spec.distance(a, b).unwrap();
            let ba = spec.distance(b, a).unwrap();
            let ac = spec.distance(a, c).unwrap();
            let cb = spec.distance(c, b).unwrap();
            assert_eq!(ab, ba);
            assert!(ab <= ac + cb + 1e-9);
        }
    }

    #[test]
    fn index_order_is_lexicographic() {
        let spec = GridSpec {
            dims: [3, 4, 5],
            cell_edge: 1.0,
        };
        let mut prev = None;
        for i in 0..3 {
            for j in 0..4 {
                for k in 0..5 {
                    let id = spec.index([i, j, k]).unwrap();
                    assert_eq!(spec.vertex(id), [i, j, k]);
                    if let Some(p) = prev {
                        assert_eq!(id, p + 1);
                    }
                    prev = Some(id);
                }
            }
        }
    }

    #[test]
    fn two_nodes_one_cell_apart_form_one_link() {
        let mut instance = inst([2, 1, 1], 100.0, 100.0);
        instance.nodes.push(NodePlacement {
            vertex: [1, 0, 0],
            role: NodeRole::ClusterHead,
        });
        let links = feasible_links(&instance).unwrap();
        assert_eq!(links, vec![([0, 0, 0], [1, 0, 0])]);
    }

    #[test]
    fn feasible_links_cover_candidates_too() {
        let mut instance = inst([3, 1, 1], 100.0, 100.0);
        instance.candidates.push([1, 0, 0]);
        let links = feasible_links(&instance).unwrap();
        // Node [0,0,0] to candidate [1,0,0]; [2,0,0] is vacant.
        assert_eq!(links, vec![([0, 0, 0], [1, 0, 0])]);
    }

    #[test]
    fn link_set_ignores_node_listing_order() {
        let mut a = inst([3, 3, 1], 100.0, 110.0);
        for v in [[1, 0, 0], [0, 1, 0], [2, 2, 0]] {
            a.nodes.push(NodePlacement {
                vertex: v,
                role: NodeRole::ClusterHead,
            });
        }
        let mut b = a.clone();
        b.nodes.reverse();
        let norm = |mut links: Vec<([usize; 3], [usize; 3])>| {
            for l in links.iter_mut() {
                if l.1 < l.0 {
                    *l = (l.1, l.0);
                }
            }
            links.sort();
            links
        };
        assert_eq!(
            norm(feasible_links(&a).unwrap()),
            norm(feasible_links(&b).unwrap())
        );
    }

    #[test]
    fn collinear_vertices_three_cells_apart_need_two_relays() {
        let instance = inst([4, 1, 1], 100.0, 100.0);
        let relays = grid_path_relays(&instance, [0, 0, 0], [3, 0, 0]).unwrap();
        assert_eq!(relays, vec![[1, 0, 0], [2, 0, 0]]);
    }

    #[test]
    fn in_range_vertices_need_no_relay() {
        let instance = inst([4, 1, 1], 100.0, 100.0);
        assert!(grid_path_relays(&instance, [0, 0, 0], [1, 0, 0])
            .unwrap()
            .is_empty());
        assert!(grid_path_relays(&instance, [2, 0, 0], [2, 0, 0])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn diagonal_hops_are_allowed_when_range_covers_them() {
        // Range 150 covers the 141.4 planar diagonal but not 2 cells.
        let instance = inst([3, 3, 1], 100.0, 150.0);
        let relays = grid_path_relays(&instance, [0, 0, 0], [2, 2, 0]).unwrap();
        assert_eq!(relays.len(), 1);
        assert_eq!(relays, vec![[1, 1, 0]]);
    }

    #[test]
    fn no_path_when_range_is_below_cell_edge() {
        let instance = inst([3, 1, 1], 100.0, 50.0);
        assert!(matches!(
            grid_path_relays(&instance, [0, 0, 0], [2, 0, 0]),
            Err(Error::NoRelayPath(_, _))
        ));
    }

    #[test]
    fn relay_ties_pick_the_lexicographically_smallest_sequence() {
        // From [0,0,1] to [2,0,1] via one relay: [1,0,0], [1,0,1] and
        // [1,0,2] all work; [1,0,0] is the smallest.
        let instance = inst([3, 1, 3], 100.0, 150.0);
        let relays = grid_path_relays(&instance, [0, 0, 1], [2, 0, 1]).unwrap();
        assert_eq!(relays, vec![[1, 0, 0]]);
    }

    /// Independent relay-count oracle: BFS over grid vertices with a
    /// freshly computed neighbor test.
    fn relay_count_oracle(inst: &GridInstance<f64>, a: [usize; 3], b: [usize; 3]) -> Option<usize> {
        let spec = inst.spec();
        let n = spec.vertex_count();
        let src = spec.index(a).unwrap();
        let dst = spec.index(b).unwrap();
        let mut dist = vec![usize::MAX; n];
        dist[src] = 0;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if dist[v] == usize::MAX
                    && spec.distance(spec.vertex(u), spec.vertex(v)).unwrap() <= inst.range_r
                {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if dist[dst] == usize::MAX {
            None
        } else {
            Some(dist[dst].saturating_sub(1))
        }
    }

    #[test]
    fn relay_counts_match_bfs_oracle_on_small_grids() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..60 {
            let dims = [
                rng.gen_range(2..=5usize),
                rng.gen_range(2..=5usize),
                rng.gen_range(1..=4usize),
            ];
            let range = [100.0, 150.0, 200.0][rng.gen_range(0..3)];
            let instance = inst(dims, 100.0, range);
            let rv = |rng: &mut StdRng| {
                [
                    rng.gen_range(0..dims[0]),
                    rng.gen_range(0..dims[1]),
                    rng.gen_range(0..dims[2]),
                ]
            };
            let a = rv(&mut rng);
            let b = rv(&mut rng);
            match grid_path_relays(&instance, a, b) {
                Ok(relays) => {
                    assert_eq!(Some(relays.len()), relay_count_oracle(&instance, a, b));
                    // Inserting the relays must connect a and b.
                    let mut verts = vec![a];
                    verts.extend(&relays);
                    verts.push(b);
                    verts.dedup();
                    let g = unit_disk_graph(&instance.spec(), instance.range_r, &verts).unwrap();
                    let d = g.bfs_distances(0);
                    assert!(d[verts.len() - 1].is_some());
                }
                Err(_) => assert_eq!(relay_count_oracle(&instance, a, b), None),
            }
        }
    }

    #[test]
    fn instance_json_round_trip_is_lossless() {
        let mut instance = inst([4, 3, 2], 50.0, 100.0);
        instance.nodes.push(NodePlacement {
            vertex: [3, 2, 1],
            role: NodeRole::ClusterHead,
        });
        instance.candidates = vec![[1, 1, 0], [2, 0, 1]];
        let text = instance.to_json().unwrap();
        let back = GridInstance::<f64>::from_json(&text).unwrap();
        assert_eq!(instance, back);
    }

    #[test]
    fn validate_rejects_broken_instances() {
        let good = inst([3, 3, 1], 100.0, 100.0);
        assert!(good.validate().is_ok());

        let mut dup = good.clone();
        dup.nodes.push(NodePlacement {
            vertex: [0, 0, 0],
            role: NodeRole::ClusterHead,
        });
        assert!(dup.validate().is_err());

        let mut two_bs = good.clone();
        two_bs.nodes.push(NodePlacement {
            vertex: [1, 0, 0],
            role: NodeRole::BaseStation,
        });
        assert!(two_bs.validate().is_err());

        let mut overlap = good.clone();
        overlap.candidates.push([0, 0, 0]);
        assert!(overlap.validate().is_err());

        let mut oob = good.clone();
        oob.candidates.push([9, 0, 0]);
        assert!(oob.validate().is_err());

        let mut no_bs = good;
        no_bs.nodes.clear();
        assert!(no_bs.validate().is_err());
    }
}
