use std::fmt;

use super::{Junction, JunctionId, Network, NetworkError, NodeId, RouteDir};

/// 4x4 transition matrix of a junction between routes r1 and r2.
/// Rows are the arriving direction, columns the departing one, both indexed
/// `(r1_up, r1_down, r2_up, r2_down)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectivityCode(pub [[bool; 4]; 4]);

impl ConnectivityCode {
    /// Everything allowed except U-turns on either route.
    pub fn default_policy() -> Self {
        let mut m = [[true; 4]; 4];
        m[0][1] = false;
        m[1][0] = false;
        m[2][3] = false;
        m[3][2] = false;
        ConnectivityCode(m)
    }

    pub fn none() -> Self {
        ConnectivityCode([[false; 4]; 4])
    }

    pub fn get(&self, from: usize, to: usize) -> bool {
        self.0[from][to]
    }

    pub fn set(&mut self, from: usize, to: usize, allow: bool) {
        self.0[from][to] = allow;
    }

    pub fn count_allowed(&self) -> usize {
        self.0.iter().flatten().filter(|&&b| b).count()
    }

    /// Row-major string of sixteen `0`/`1` characters.
    pub fn to_bits(&self) -> String {
        self.0
            .iter()
            .flatten()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    pub fn from_bits(bits: &str) -> Option<Self> {
        let bits = bits.trim();
        if bits.len() != 16 {
            return None;
        }
        let mut m = [[false; 4]; 4];
        for (i, c) in bits.chars().enumerate() {
            m[i / 4][i % 4] = match c {
                '0' => false,
                '1' => true,
                _ => return None,
            };
        }
        Some(ConnectivityCode(m))
    }
}

impl fmt::Display for ConnectivityCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bits())
    }
}

/// Overrides one transition at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurnRestriction {
    pub node: NodeId,
    pub from: RouteDir,
    pub to: RouteDir,
    pub allow: bool,
}

impl Network {
    /// Creates one junction per pair of routes meeting at a node, with the
    /// default policy, then applies `restrictions` and derives adjacency.
    pub fn build_junctions(&mut self, restrictions: &[TurnRestriction]) -> Result<(), NetworkError> {
        if !self.is_routed() {
            return Err(NetworkError::NotRouted);
        }
        self.junctions.clear();
        self.rebuild_indices();
        let mut jid: JunctionId = 1;
        let nodes: Vec<NodeId> = self.nodes.keys().copied().collect();
        for node in nodes {
            let inc = self.incidences(node).to_vec();
            for i in 0..inc.len() {
                for j in i + 1..inc.len() {
                    self.junctions.insert(
                        jid,
                        Junction {
                            jid,
                            node,
                            r1: inc[i].rid,
                            r2: inc[j].rid,
                            r1_meas: inc[i].measure,
                            r2_meas: inc[j].measure,
                            point: self.nodes[&node].point,
                            cc: ConnectivityCode::default_policy(),
                        },
                    );
                    jid += 1;
                }
            }
        }
        self.rebuild_indices();
        for r in restrictions {
            self.apply_restriction(r)?;
        }
        self.rebuild_adjacency();
        Ok(())
    }

    fn apply_restriction(&mut self, r: &TurnRestriction) -> Result<(), NetworkError> {
        if !self.nodes.contains_key(&r.node) {
            return Err(NetworkError::UnknownNode(r.node));
        }
        for rid in [r.from.rid, r.to.rid] {
            if self.incidence(r.node, rid).is_none() {
                return Err(NetworkError::UnknownRouteAtNode { node: r.node, rid });
            }
        }
        let targets: Vec<JunctionId> = self
            .junctions_at(r.node)
            .filter(|j| j.involves(r.from.rid) && j.involves(r.to.rid))
            .map(|j| j.jid)
            .collect();
        if targets.is_empty() {
            return Err(NetworkError::NoJunctionAtNode {
                node: r.node,
                rid: r.from.rid,
            });
        }
        for jid in targets {
            let j = self.junctions.get_mut(&jid).unwrap();
            let (from, to) = (j.index_of(r.from).unwrap(), j.index_of(r.to).unwrap());
            j.cc.set(from, to, r.allow);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{Arrival, Direction, Kind, RouteKey, Tolerances};
    use super::*;

    fn all_cells(node: NodeId, allowed: &[(RouteDir, RouteDir)]) -> Vec<TurnRestriction> {
        let dirs = [RouteDir::up(A), RouteDir::down(A), RouteDir::up(B), RouteDir::down(B)];
        let mut out = Vec::new();
        for from in dirs {
            for to in dirs {
                out.push(TurnRestriction {
                    node,
                    from,
                    to,
                    allow: allowed.contains(&(from, to)),
                });
            }
        }
        out
    }

    #[test]
    fn figure_two_transition_matrix() {
        // B_up->A_down, B_up->A_up, B_down->A_down, B_up->B_down
        let allowed = [
            (RouteDir::up(B), RouteDir::down(A)),
            (RouteDir::up(B), RouteDir::up(A)),
            (RouteDir::down(B), RouteDir::down(A)),
            (RouteDir::up(B), RouteDir::down(B)),
        ];
        let net = t1_with(&all_cells(2, &allowed));
        let j = net.junction(1).unwrap();
        assert_eq!(j.cc.count_allowed(), 4);
        assert!(j.cc.get(2, 1) && j.cc.get(2, 0) && j.cc.get(3, 1) && j.cc.get(2, 3));
        assert_eq!(j.cc.to_bits(), "0000000011010100");
    }

    #[test]
    fn default_policy_cells() {
        let net = t1();
        let j = net.junction(1).unwrap();
        assert_eq!(j.cc.count_allowed(), 12);
        assert!(!j.cc.get(0, 1) && !j.cc.get(1, 0) && !j.cc.get(2, 3) && !j.cc.get(3, 2));
        assert_eq!(ConnectivityCode::from_bits(&j.cc.to_bits()), Some(j.cc));
        assert_eq!(ConnectivityCode::from_bits("0101"), None);
    }

    #[test]
    fn restriction_errors() {
        let mut net = t1();
        let bad = TurnRestriction {
            node: 1,
            from: RouteDir::up(A),
            to: RouteDir::up(B),
            allow: false,
        };
        assert!(matches!(
            net.build_junctions(&[bad]),
            Err(NetworkError::UnknownRouteAtNode { node: 1, rid: B })
        ));
        let uturn_at_dead_end = TurnRestriction {
            node: 3,
            from: RouteDir::up(A),
            to: RouteDir::down(A),
            allow: true,
        };
        assert!(matches!(
            net.build_junctions(&[uturn_at_dead_end]),
            Err(NetworkError::NoJunctionAtNode { node: 3, rid: A })
        ));
        let unknown = TurnRestriction { node: 99, ..bad };
        assert!(matches!(net.build_junctions(&[unknown]), Err(NetworkError::UnknownNode(99))));
    }

    #[test]
    fn three_routes_make_three_junctions() {
        let edges = vec![
            edge(&[(0.0, 0.0), (100.0, 0.0)], "", Kind::TwoWay),
            edge(&[(100.0, 0.0), (200.0, 0.0)], "", Kind::TwoWay),
            edge(&[(100.0, 0.0), (100.0, 100.0)], "", Kind::TwoWay),
        ];
        let net = Network::build(1, &edges, RouteKey::ByName, &[], Tolerances::default()).unwrap();
        assert_eq!(net.junctions().count(), 3);
        let pairs: Vec<_> = net.junctions().map(|j| (j.r1, j.r2)).collect();
        assert_eq!(pairs, vec![(1, 2), (1, 3), (2, 3)]);
    }

    /// Exhaustively compares adjacency against the cc matrices and kinds.
    fn check_adjacency(net: &Network) {
        for node in net.nodes().map(|n| n.id) {
            let incs = net.incidences(node).to_vec();
            for a in &incs {
                for da in [Direction::Up, Direction::Down] {
                    let via = RouteDir::new(a.rid, da);
                    let arrivable = net.can_arrive(node, via);
                    let out = net.outgoing(node, Arrival::Via(via));
                    for b in &incs {
                        for db in [Direction::Up, Direction::Down] {
                            let to = RouteDir::new(b.rid, db);
                            let present = out.iter().any(|d| d.dir == to);
                            let route_a = net.route(a.rid).unwrap();
                            let route_b = net.route(b.rid).unwrap();
                            let geometric = arrivable
                                && route_b.kind.allows(db)
                                && match db {
                                    Direction::Up => b.stop + 1 < route_b.stops.len(),
                                    Direction::Down => b.stop > 0,
                                };
                            let cc_ok = if a.rid == b.rid {
                                let js: Vec<_> = net.junctions_at(node).filter(|j| j.involves(a.rid)).collect();
                                if js.is_empty() {
                                    da == db
                                } else {
                                    js.iter().all(|j| j.allows(via, to) == Some(true))
                                }
                            } else {
                                net.junctions_at(node)
                                    .find(|j| j.involves(a.rid) && j.involves(b.rid))
                                    .and_then(|j| j.allows(via, to))
                                    .unwrap_or(false)
                            };
                            assert_eq!(present, geometric && cc_ok, "node {node} {via} -> {to}");
                            let _ = route_a;
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn adjacency_matches_cc_and_kinds() {
        check_adjacency(&t1());
        // make A one-way
        let mut edges = t1_edges();
        edges[0].kind = Kind::OneWay;
        edges[1].kind = Kind::OneWay;
        let net = Network::build(1, &edges, RouteKey::ByName, &[], Tolerances::default()).unwrap();
        assert_eq!(net.dual(A).unwrap(), 1);
        check_adjacency(&net);
        // nothing arrives or departs on A_down anywhere
        for ((_, via), deps) in net.adjacency() {
            assert_ne!(*via, RouteDir::down(A));
            assert!(deps.iter().all(|d| d.dir != RouteDir::down(A)));
        }
        assert!(net.departures(2).iter().all(|d| d.dir != RouteDir::down(A)));
    }
}
