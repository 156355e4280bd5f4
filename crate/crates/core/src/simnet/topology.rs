use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rwp::Address;

use super::scenario::{Scenario, TopologyKind};
use super::{SimError, STREAM_TOPOLOGY};

/// Undirected adjacency over dense addresses `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    neighbors: Vec<BTreeSet<Address>>,
}

impl Topology {
    pub fn build(scenario: &Scenario) -> Result<Self, SimError> {
        let n = scenario.motes;
        let mut topo = Topology {
            neighbors: vec![BTreeSet::new(); n],
        };
        match scenario.topology {
            TopologyKind::Ring => {
                for i in 0..n {
                    topo.connect(i, (i + 1) % n);
                }
            }
            TopologyKind::Grid => {
                let cols = (n as f64).sqrt().ceil() as usize;
                for i in 0..n {
                    if (i + 1) % cols != 0 && i + 1 < n {
                        topo.connect(i, i + 1);
                    }
                    if i + cols < n {
                        topo.connect(i, i + cols);
                    }
                }
            }
            TopologyKind::RandomGeometric { radius } => {
                let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
                rng.set_stream(STREAM_TOPOLOGY);
                let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
                for i in 0..n {
                    for j in i + 1..n {
                        let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                        if (dx * dx + dy * dy).sqrt() <= radius {
                            topo.connect(i, j);
                        }
                    }
                }
            }
        }
        Ok(topo)
    }

    fn connect(&mut self, a: usize, b: usize) {
        if a != b {
            self.neighbors[a].insert(Address(b as u32));
            self.neighbors[b].insert(Address(a as u32));
        }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, addr: Address) -> impl Iterator<Item = Address> + '_ {
        self.neighbors
            .get(addr.0 as usize)
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    pub fn has_edge(&self, a: Address, b: Address) -> bool {
        self.neighbors
            .get(a.0 as usize)
            .is_some_and(|s| s.contains(&b))
    }

    /// All edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(Address, Address)> {
        let mut out = Vec::new();
        for (i, set) in self.neighbors.iter().enumerate() {
            for &b in set.range(Address(i as u32 + 1)..) {
                out.push((Address(i as u32), b));
            }
        }
        out
    }

    /// Hop distances from `from` over motes for which `alive` holds.
    pub fn distances(&self, from: Address, alive: impl Fn(Address) -> bool) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        if !alive(from) {
            return dist;
        }
        dist[from.0 as usize] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u.0 as usize].expect("queued nodes have a distance");
            for v in self.neighbors(u) {
                if dist[v.0 as usize].is_none() && alive(v) {
                    dist[v.0 as usize] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path `from -> to` through live motes, lowest addresses first
    /// on ties. Includes both endpoints.
    pub fn path(&self, from: Address, to: Address, alive: impl Fn(Address) -> bool) -> Option<Vec<Address>> {
        let dist = self.distances(to, &alive);
        let mut d = dist[from.0 as usize]?;
        let mut path = vec![from];
        let mut cur = from;
        while d > 0 {
            cur = self
                .neighbors(cur)
                .find(|v| dist[v.0 as usize] == Some(d - 1))
                .expect("a predecessor exists on every shortest path");
            path.push(cur);
            d -= 1;
        }
        Some(path)
    }

    pub fn is_connected(&self) -> bool {
        self.distances(Address(0), |_| true).iter().all(Option::is_some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(motes: usize, topology: TopologyKind) -> Topology {
        Topology::build(&Scenario {
            motes,
            topology,
            ..Scenario::default()
        })
        .unwrap()
    }

    #[test]
    fn ring_shapes() {
        assert!(topo(1, TopologyKind::Ring).edges().is_empty());
        assert_eq!(topo(2, TopologyKind::Ring).edges(), vec![(Address(0), Address(1))]);
        let r = topo(5, TopologyKind::Ring);
        assert_eq!(r.edges().len(), 5);
        assert_eq!(r.neighbors(Address(0)).collect::<Vec<_>>(), vec![Address(1), Address(4)]);
    }

    #[test]
    fn grid_shape() {
        // 3 columns: 0 1 2 / 3 4 5 / 6
        let g = topo(7, TopologyKind::Grid);
        assert_eq!(
            g.neighbors(Address(4)).collect::<Vec<_>>(),
            vec![Address(1), Address(3), Address(5)]
        );
        assert!(!g.has_edge(Address(2), Address(3)));
        assert!(g.is_connected());
    }

    #[test]
    fn paths_avoid_dead_motes() {
        let r = topo(6, TopologyKind::Ring);
        assert_eq!(
            r.path(Address(0), Address(2), |_| true),
            Some(vec![Address(0), Address(1), Address(2)])
        );
        assert_eq!(
            r.path(Address(0), Address(2), |a| a != Address(1)),
            Some(vec![Address(0), Address(5), Address(4), Address(3), Address(2)])
        );
        assert_eq!(r.path(Address(0), Address(3), |a| a != Address(1) && a != Address(5)), None);
    }

    #[test]
    fn geometric_is_seeded() {
        let a = topo(30, TopologyKind::RandomGeometric { radius: 0.3 });
        let b = topo(30, TopologyKind::RandomGeometric { radius: 0.3 });
        assert_eq!(a, b);
    }
}
