//! Phase-1 backbone construction.
//!
//! Starting from the closest pair among the base station and cluster
//! heads, the builder repeatedly attaches the cheapest remaining terminal
//! to the connected component, inserting first-phase relay nodes along a
//! shortest relay path. Cost is relay count; ties fall back to Euclidean
//! path length, then vertex order.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::spectral::NetworkGraph;
use crate::topology::{grid_path_relays, unit_disk_graph, GridInstance, NodePlacement, NodeRole};
use crate::Real;

/// Connected phase-1 network: original devices plus first-phase relays.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    /// Devices in graph-index order: instance nodes first, then relays.
    pub members: Vec<NodePlacement>,
    /// Every in-range link among the members.
    pub graph: NetworkGraph,
    /// Vertices of the inserted first-phase relays, ascending.
    pub fprn_positions: Vec<[usize; 3]>,
}

impl Backbone {
    pub fn fprn_count(&self) -> usize {
        self.fprn_positions.len()
    }

    pub fn member_vertices(&self) -> Vec<[usize; 3]> {
        self.members.iter().map(|m| m.vertex).collect()
    }

    /// The instance extended with the relays as placed nodes; candidate
    /// vertices the relays consumed are dropped.
    pub fn to_instance<F: Real>(&self, inst: &GridInstance<F>) -> GridInstance<F> {
        let occupied: BTreeSet<[usize; 3]> = self.fprn_positions.iter().copied().collect();
        let mut out = inst.clone();
        out.nodes = self.members.clone();
        out.candidates.retain(|c| !occupied.contains(c));
        out
    }
}

/// Builds the phase-1 backbone for an instance with one base station and
/// at least one cluster head.
pub fn build_backbone<F: Real>(inst: &GridInstance<F>) -> Result<Backbone> {
    inst.validate()?;
    let spec = inst.spec();
    let bs = inst.base_station().expect("validate checked for one");
    let chs = inst.cluster_heads();
    if chs.is_empty() {
        return Err(Error::InvalidInstance(
            "backbone construction needs at least one cluster head".into(),
        ));
    }

    let mut terminals: Vec<[usize; 3]> = Vec::with_capacity(chs.len() + 1);
    terminals.push(bs);
    terminals.extend(chs);
    terminals.sort_unstable();

    // Seed the component with the closest terminal pair, smallest pair
    // on distance ties.
    let mut seed_pair = None;
    for (a, &u) in terminals.iter().enumerate() {
        for &v in terminals.iter().skip(a + 1) {
            let d = spec.distance(u, v)?;
            let better = match &seed_pair {
                None => true,
                Some((best_d, best_u, best_v)) => {
                    d < *best_d || (d == *best_d && (u, v) < (*best_u, *best_v))
                }
            };
            if better {
                seed_pair = Some((d, u, v));
            }
        }
    }
    let (_, seed_u, seed_v) = seed_pair.expect("at least two terminals");

    let mut component: BTreeSet<[usize; 3]> = BTreeSet::new();
    let mut relays: BTreeSet<[usize; 3]> = BTreeSet::new();
    let mut remaining: BTreeSet<[usize; 3]> = terminals.iter().copied().collect();

    let node_vertices: BTreeSet<[usize; 3]> = inst.occupied().iter().copied().collect();
    let absorb_path = |path: Vec<[usize; 3]>,
                           component: &mut BTreeSet<[usize; 3]>,
                           relays: &mut BTreeSet<[usize; 3]>,
                           remaining: &mut BTreeSet<[usize; 3]>| {
        for v in path {
            component.insert(v);
            if remaining.remove(&v) || node_vertices.contains(&v) {
                // A path vertex that is itself a terminal joins as-is.
                continue;
            }
            relays.insert(v);
        }
    };

    component.insert(seed_u);
    component.insert(seed_v);
    remaining.remove(&seed_u);
    remaining.remove(&seed_v);
    let seed_path = grid_path_relays(inst, seed_u, seed_v)?;
    absorb_path(seed_path, &mut component, &mut relays, &mut remaining);

    // (relay count, tie-break distance, terminal, attach point, relays).
    type Attachment<F> = (usize, F, [usize; 3], [usize; 3], Vec<[usize; 3]>);

    while !remaining.is_empty() {
        // Cheapest attachment over (terminal, component vertex) pairs.
        let mut best: Option<Attachment<F>> = None;
        for &t in &remaining {
            for &c in &component {
                let path = grid_path_relays(inst, t, c)?;
                let d = spec.distance(t, c)?;
                let key = (path.len(), d, t, c);
                let better = match &best {
                    None => true,
                    Some((bl, bd, bt, bc, _)) => key < (*bl, *bd, *bt, *bc),
                };
                if better {
                    best = Some((path.len(), d, t, c, path));
                }
            }
        }
        let (_, _, t, _, path) = best.expect("remaining and component are non-empty");
        component.insert(t);
        remaining.remove(&t);
        absorb_path(path, &mut component, &mut relays, &mut remaining);
    }

    let mut members = inst.nodes.clone();
    members.extend(relays.iter().map(|&vertex| NodePlacement {
        vertex,
        role: NodeRole::FirstPhaseRelay,
    }));
    let vertices: Vec<[usize; 3]> = members.iter().map(|m| m.vertex).collect();
    let graph = unit_disk_graph(&spec, inst.range_r, &vertices)?;

    Ok(Backbone {
        members,
        graph,
        fprn_positions: relays.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{fiedler_value, CONNECTIVITY_TOL};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn inst(
        dims: [usize; 3],
        range: f64,
        bs: [usize; 3],
        chs: &[[usize; 3]],
    ) -> GridInstance<f64> {
        let mut nodes = vec![NodePlacement {
            vertex: bs,
            role: NodeRole::BaseStation,
        }];
        nodes.extend(chs.iter().map(|&vertex| NodePlacement {
            vertex,
            role: NodeRole::ClusterHead,
        }));
        GridInstance {
            dims,
            cell_edge: 100.0,
            range_r: range,
            nodes,
            candidates: vec![],
        }
    }

    #[test]
    fn adjacent_pair_needs_no_relays() {
        let instance = inst([2, 1, 1], 100.0, [0, 0, 0], &[[1, 0, 0]]);
        let b = build_backbone(&instance).unwrap();
        assert_eq!(b.fprn_count(), 0);
        assert_eq!(b.graph.edge_count(), 1);
        assert!(fiedler_value::<f64>(&b.graph).unwrap() > CONNECTIVITY_TOL);
    }

    #[test]
    fn collinear_terminals_one_hop_apart_need_no_relays() {
        let instance = inst([3, 1, 1], 100.0, [0, 0, 0], &[[1, 0, 0], [2, 0, 0]]);
        let b = build_backbone(&instance).unwrap();
        assert_eq!(b.fprn_count(), 0);
        assert_eq!(b.members.len(), 3);
    }

    #[test]
    fn pair_three_cells_apart_gets_two_relays() {
        let instance = inst([4, 1, 1], 100.0, [0, 0, 0], &[[3, 0, 0]]);
        let b = build_backbone(&instance).unwrap();
        assert_eq!(b.fprn_positions, vec![[1, 0, 0], [2, 0, 0]]);
        let d = b.graph.bfs_distances(0);
        assert!(d.iter().all(|x| x.is_some()));
    }

    #[test]
    fn relay_landing_on_a_terminal_is_not_duplicated() {
        // The straight path from [0,0,0] to [2,0,0] passes through the
        // cluster head at [1,0,0]; no relay is needed.
        let instance = inst([3, 1, 1], 100.0, [0, 0, 0], &[[2, 0, 0], [1, 0, 0]]);
        let b = build_backbone(&instance).unwrap();
        assert_eq!(b.fprn_count(), 0);
        assert!(fiedler_value::<f64>(&b.graph).unwrap() > CONNECTIVITY_TOL);
    }

    #[test]
    fn backbone_is_always_connected_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..25 {
            let dims = [
                rng.gen_range(3..=6usize),
                rng.gen_range(3..=6usize),
                rng.gen_range(1..=3usize),
            ];
            let mut picks = BTreeSet::new();
            let want = rng.gen_range(2..=6usize);
            while picks.len() < want {
                picks.insert([
                    rng.gen_range(0..dims[0]),
                    rng.gen_range(0..dims[1]),
                    rng.gen_range(0..dims[2]),
                ]);
            }
            let verts: Vec<[usize; 3]> = picks.into_iter().collect();
            let instance = inst(dims, 100.0, verts[0], &verts[1..]);
            let b = build_backbone(&instance).unwrap();
            let l2: f64 = fiedler_value(&b.graph).unwrap();
            assert!(l2 > CONNECTIVITY_TOL, "disconnected backbone: {instance:?}");
        }
    }

    #[test]
    fn construction_ignores_node_listing_order() {
        let a = inst(
            [5, 5, 2],
            100.0,
            [0, 0, 0],
            &[[4, 0, 0], [0, 4, 0], [4, 4, 1], [2, 2, 1]],
        );
        let mut b = a.clone();
        b.nodes[1..].reverse();
        let ba = build_backbone(&a).unwrap();
        let bb = build_backbone(&b).unwrap();
        assert_eq!(ba.fprn_positions, bb.fprn_positions);
    }

    #[test]
    fn exported_instance_carries_relays_and_drops_used_candidates() {
        let mut instance = inst([4, 1, 1], 100.0, [0, 0, 0], &[[3, 0, 0]]);
        instance.candidates = vec![[1, 0, 0], [2, 0, 0]];
        let b = build_backbone(&instance).unwrap();
        let merged = b.to_instance(&instance);
        assert!(merged.validate().is_ok());
        assert_eq!(merged.nodes.len(), 4);
        assert!(merged.candidates.is_empty());
        assert_eq!(
            merged
                .nodes
                .iter()
                .filter(|n| n.role == NodeRole::FirstPhaseRelay)
                .count(),
            2
        );
    }

    /// Smallest relay set connecting the terminals, by exhaustive search
    /// over free-vertex subsets in increasing size.
    fn minimal_relay_count(instance: &GridInstance<f64>, cap: usize) -> Option<usize> {
        let spec = instance.spec();
        let terminals = instance.occupied();
        let free: Vec<[usize; 3]> = (0..spec.vertex_count())
            .map(|i| spec.vertex(i))
            .filter(|v| !terminals.contains(v))
            .collect();

        let connected = |extra: &[[usize; 3]]| -> bool {
            let mut verts = terminals.clone();
            verts.extend_from_slice(extra);
            let g = unit_disk_graph(&spec, instance.range_r, &verts).unwrap();
            g.bfs_distances(0).iter().all(|d| d.is_some())
        };

        fn combos(
            free: &[[usize; 3]],
            k: usize,
            start: usize,
            chosen: &mut Vec<[usize; 3]>,
            test: &impl Fn(&[[usize; 3]]) -> bool,
        ) -> bool {
            if chosen.len() == k {
                return test(chosen);
            }
            for i in start..free.len() {
                chosen.push(free[i]);
                if combos(free, k, i + 1, chosen, test) {
                    chosen.pop();
                    return true;
                }
                chosen.pop();
            }
            false
        }

        (0..=cap).find(|&k| combos(&free, k, 0, &mut Vec::new(), &connected))
    }

    #[test]
    fn greedy_relay_count_is_optimal_for_terminal_pairs() {
        let mut rng = StdRng::seed_from_u64(97);
        let mut checked = 0;
        while checked < 10 {
            let dims = [
                rng.gen_range(3..=4usize),
                rng.gen_range(3..=4usize),
                rng.gen_range(1..=2usize),
            ];
            let mut picks = BTreeSet::new();
            while picks.len() < 2 {
                picks.insert([
                    rng.gen_range(0..dims[0]),
                    rng.gen_range(0..dims[1]),
                    rng.gen_range(0..dims[2]),
                ]);
            }
            let verts: Vec<[usize; 3]> = picks.into_iter().collect();
            let instance = inst(dims, 100.0, verts[0], &verts[1..]);
            let b = build_backbone(&instance).unwrap();
            if b.fprn_count() > 3 {
                continue; // keep the exhaustive search tractable
            }
            let oracle = minimal_relay_count(&instance, b.fprn_count());
            assert_eq!(
                oracle,
                Some(b.fprn_count()),
                "greedy used {} relays between two terminals on {instance:?}",
                b.fprn_count()
            );
            checked += 1;
        }
    }

    #[test]
    fn exhaustive_minimum_never_exceeds_greedy_on_small_seeded_instances() {
        let mut rng = StdRng::seed_from_u64(131);
        let mut checked = 0;
        while checked < 10 {
            let dims = [
                rng.gen_range(3..=4usize),
                rng.gen_range(3..=4usize),
                rng.gen_range(1..=2usize),
            ];
            let mut picks = BTreeSet::new();
            let want = rng.gen_range(3..=4usize);
            while picks.len() < want {
                picks.insert([
                    rng.gen_range(0..dims[0]),
                    rng.gen_range(0..dims[1]),
                    rng.gen_range(0..dims[2]),
                ]);
            }
            let verts: Vec<[usize; 3]> = picks.into_iter().collect();
            let instance = inst(dims, 100.0, verts[0], &verts[1..]);
            let b = build_backbone(&instance).unwrap();
            if b.fprn_count() > 3 {
                continue; // keep the exhaustive search tractable
            }
            let oracle = minimal_relay_count(&instance, b.fprn_count()).unwrap();
            assert!(
                oracle <= b.fprn_count(),
                "exhaustive search found no relay set of size {} on {instance:?}",
                b.fprn_count()
            );
            checked += 1;
        }
    }
}
