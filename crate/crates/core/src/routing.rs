//! Turn-restriction-aware shortest paths between arbitrary network
//! positions.
//!
//! The search runs over states `(node, arriving route-direction)`, so that
//! connectivity codes can forbid individual turns and U-turns. The origin
//! may sit mid-route (it then leaves towards either neighboring stop as the
//! route kind permits) or on a node (it may then leave along any route). The
//! target splits its route virtually: a move along the target's route that
//! passes over the target measure finishes there.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::motion::{GLine, GPoint, RouteInterval};
use crate::network::{Arrival, Direction, Network, NodeId, RouteDir, RouteId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("no turn-legal path between the two positions")]
    NoPath,
    #[error("unknown route {0}")]
    UnknownRoute(RouteId),
    #[error("measure {measure} is not on route {rid}")]
    OffRoute { rid: RouteId, measure: f64 },
    #[error("position belongs to network {0}")]
    WrongNetwork(u32),
}

/// A minimum-cost path and its length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub cost: f64,
    pub line: GLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum State {
    Start,
    At(NodeId, Arrival),
    Target,
}

impl State {
    /// Tie-break key: (node, route, direction), origin markers first.
    fn key(self) -> (u64, u32, u8) {
        match self {
            State::Start => (0, 0, 0),
            State::At(n, Arrival::Origin) => (u64::from(n), 0, 0),
            State::At(n, Arrival::Via(rd)) => (u64::from(n), rd.rid, 1 + rd.dir as u8),
            State::Target => (u64::MAX, u32::MAX, u8::MAX),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Label {
    cost: f64,
    pred: Option<(State, Option<Leg>)>,
    settled: bool,
}

/// A stretch travelled along one route direction.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    rd: RouteDir,
    from: f64,
    to: f64,
}

#[derive(Debug, PartialEq)]
struct Queued {
    cost: f64,
    state: State,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, key)
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.state.key().cmp(&self.state.key()))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_position(net: &Network, p: &GPoint) -> Result<f64, RoutingError> {
    if p.netid != net.net_id {
        return Err(RoutingError::WrongNetwork(p.netid));
    }
    let route = net.route(p.rid).map_err(|_| RoutingError::UnknownRoute(p.rid))?;
    let eps = net.tol.measure;
    if !(p.measure >= -eps && p.measure <= route.length + eps) {
        return Err(RoutingError::OffRoute {
            rid: p.rid,
            measure: p.measure,
        });
    }
    Ok(p.measure.clamp(0.0, route.length))
}

struct Search<'a> {
    net: &'a Network,
    labels: HashMap<State, Label>,
    heap: BinaryHeap<Queued>,
    target: GPoint,
    target_node: Option<NodeId>,
}

impl Search<'_> {
    fn relax(&mut self, state: State, cost: f64, from: State, leg: Option<Leg>) {
        match self.labels.entry(state) {
            Entry::Occupied(mut e) => {
                let l = e.get_mut();
                if l.settled {
                    return;
                }
                let better = cost < l.cost
                    || (cost == l.cost
                        && l.pred.is_some_and(|(p, _)| from.key() < p.key()));
                if !better {
                    return;
                }
                *l = Label {
                    cost,
                    pred: Some((from, leg)),
                    settled: false,
                };
            }
            Entry::Vacant(e) => {
                e.insert(Label {
                    cost,
                    pred: Some((from, leg)),
                    settled: false,
                });
            }
        }
        self.heap.push(Queued { cost, state });
    }

    /// Moves from measure `from` along `rd`, stopping at `to` (the next
    /// stop) unless the target lies on the way.
    fn step(&mut self, at: State, cost: f64, rd: RouteDir, from: f64, to: f64, next: Option<State>) {
        let t = self.target;
        let eps = self.net.tol.measure;
        if t.rid == rd.rid {
            let ahead = (t.measure - from) * rd.dir.sign();
            let span = (to - from).abs();
            if ahead >= -eps && ahead <= span + eps {
                let leg = Leg {
                    rd,
                    from,
                    to: t.measure,
                };
                self.relax(State::Target, cost + ahead.max(0.0), at, Some(leg));
            }
        }
        if let Some(next) = next {
            self.relax(next, cost + (to - from).abs(), at, Some(Leg { rd, from, to }));
        }
    }
}

/// Minimum-length turn-legal path from `from` to `to`.
pub fn route_between(net: &Network, from: &GPoint, to: &GPoint) -> Result<Path, RoutingError> {
    let m_from = check_position(net, from)?;
    let m_to = check_position(net, to)?;
    let eps = net.tol.measure;
    if from.rid == to.rid && (m_from - m_to).abs() <= eps {
        return Ok(Path {
            cost: 0.0,
            line: GLine::empty(net.net_id, 0),
        });
    }
    let target = GPoint { measure: m_to, ..*to };
    let to_route = net.route(to.rid).expect("checked");
    let target_node = to_route.stop_at(m_to, eps).map(|i| to_route.stops[i].1);

    let mut search = Search {
        net,
        labels: HashMap::new(),
        heap: BinaryHeap::new(),
        target,
        target_node,
    };
    search.labels.insert(
        State::Start,
        Label {
            cost: 0.0,
            pred: None,
            settled: true,
        },
    );

    let route = net.route(from.rid).expect("checked");
    if let Some(i) = route.stop_at(m_from, eps) {
        search.relax(State::At(route.stops[i].1, Arrival::Origin), 0.0, State::Start, None);
    } else {
        for dir in [Direction::Up, Direction::Down] {
            if !route.kind.allows(dir) {
                continue;
            }
            let Some(i) = route.next_stop(m_from, dir, eps) else {
                continue;
            };
            let (to_m, node) = route.stops[i];
            let rd = RouteDir::new(from.rid, dir);
            search.step(State::Start, 0.0, rd, m_from, to_m, Some(State::At(node, Arrival::Via(rd))));
        }
    }

    while let Some(Queued { cost, state }) = search.heap.pop() {
        let label = search.labels.get_mut(&state).expect("queued states are labelled");
        if label.settled || cost > label.cost {
            continue;
        }
        label.settled = true;
        let State::At(node, arrival) = state else {
            if state == State::Target {
                return Ok(Path {
                    cost,
                    line: unwind(net, &search.labels),
                });
            }
            continue;
        };
        if search.target_node == Some(node) {
            search.relax(State::Target, cost, state, None);
        }
        for d in net.outgoing(node, arrival) {
            let next = State::At(d.next_node, Arrival::Via(d.dir));
            search.step(state, cost, d.dir, d.from_measure, d.to_measure, Some(next));
        }
    }
    Err(RoutingError::NoPath)
}

fn unwind(net: &Network, labels: &HashMap<State, Label>) -> GLine {
    let mut legs = Vec::new();
    let mut cur = State::Target;
    while let Some((prev, leg)) = labels[&cur].pred {
        legs.extend(leg);
        cur = prev;
    }
    legs.reverse();
    let eps = net.tol.measure;
    let mut intervals: Vec<(RouteDir, f64, f64)> = Vec::new();
    for leg in legs {
        if (leg.to - leg.from).abs() <= eps {
            continue;
        }
        match intervals.last_mut() {
            Some(last) if last.0 == leg.rd && (last.2 - leg.from).abs() <= eps => last.2 = leg.to,
            _ => intervals.push((leg.rd, leg.from, leg.to)),
        }
    }
    GLine::new(
        net.net_id,
        0,
        intervals
            .into_iter()
            .map(|(rd, a, b)| RouteInterval::new(rd.rid, a, b, 0))
            .collect(),
    )
}

/// Shortest path as a GLine with glid 0, intervals in travel order.
pub fn shortest_path(net: &Network, from: &GPoint, to: &GPoint) -> Result<GLine, RoutingError> {
    route_between(net, from, to).map(|p| p.line)
}

pub fn network_distance(net: &Network, from: &GPoint, to: &GPoint) -> Result<f64, RoutingError> {
    route_between(net, from, to).map(|p| p.cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use crate::network::TurnRestriction;

    fn gp(rid: RouteId, m: f64) -> GPoint {
        GPoint::new(1, rid, m, 0)
    }

    fn ban(node: NodeId, from: RouteDir, to: RouteDir) -> TurnRestriction {
        TurnRestriction {
            node,
            from,
            to,
            allow: false,
        }
    }

    #[test]
    fn t1_path() {
        let net = t1();
        let p = route_between(&net, &gp(A, 100.0), &gp(B, 200.0)).unwrap();
        assert_eq!(p.cost, 700.0);
        assert_eq!(
            p.line.intervals,
            vec![RouteInterval::new(A, 100.0, 600.0, 0), RouteInterval::new(B, 0.0, 200.0, 0)]
        );
        assert_eq!(p.line.glid, 0);
        assert_eq!(network_distance(&net, &gp(A, 0.0), &gp(A, 1000.0)).unwrap(), 1000.0);
        // reverse direction on the same network
        assert_eq!(network_distance(&net, &gp(B, 200.0), &gp(A, 100.0)).unwrap(), 700.0);
    }

    #[test]
    fn t1_blocked_entry_to_b() {
        let net = t1_with(&[
            ban(2, RouteDir::up(A), RouteDir::up(B)),
            ban(2, RouteDir::down(A), RouteDir::up(B)),
        ]);
        assert_eq!(
            route_between(&net, &gp(A, 100.0), &gp(B, 200.0)),
            Err(RoutingError::NoPath)
        );
    }

    #[test]
    fn same_location() {
        let net = t1();
        let p = route_between(&net, &gp(A, 400.0), &gp(A, 400.0)).unwrap();
        assert_eq!(p.cost, 0.0);
        assert!(p.line.is_empty());
        // the junction point reached through another route
        let p = route_between(&net, &gp(A, 600.0), &gp(B, 0.0)).unwrap();
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn straight_on_same_route() {
        let net = t1();
        let p = route_between(&net, &gp(A, 100.0), &gp(A, 900.0)).unwrap();
        assert_eq!(p.line.intervals, vec![RouteInterval::new(A, 100.0, 900.0, 0)]);
        let p = route_between(&net, &gp(A, 900.0), &gp(A, 700.0)).unwrap();
        assert_eq!(p.line.intervals, vec![RouteInterval::new(A, 900.0, 700.0, 0)]);
    }

    #[test]
    fn origin_at_node_may_take_any_route() {
        let net = t1();
        let p = route_between(&net, &gp(A, 600.0), &gp(B, 300.0)).unwrap();
        assert_eq!(p.cost, 300.0);
        assert_eq!(p.line.intervals, vec![RouteInterval::new(B, 0.0, 300.0, 0)]);
    }

    #[test]
    fn forced_u_turn_detour() {
        use crate::network::{Kind, Network, RouteKey, Tolerances};
        // T1 plus a stub C at node 1 so that node has a junction
        let mut edges = t1_edges();
        edges.push(crate::network::fixtures::edge(&[(0.0, 0.0), (0.0, -100.0)], "C", Kind::TwoWay));
        let c = 3;
        let restrictions = [
            ban(2, RouteDir::down(A), RouteDir::up(B)),
            TurnRestriction {
                node: 1,
                from: RouteDir::down(A),
                to: RouteDir::up(A),
                allow: true,
            },
        ];
        let net = Network::build(1, &edges, RouteKey::ByName, &restrictions, Tolerances::default()).unwrap();
        assert_eq!(net.route(c).unwrap().name, "C");
        let p = route_between(&net, &gp(A, 700.0), &gp(B, 200.0)).unwrap();
        assert_eq!(p.cost, 1500.0);
        assert_eq!(
            p.line.intervals,
            vec![
                RouteInterval::new(A, 700.0, 0.0, 0),
                RouteInterval::new(A, 0.0, 600.0, 0),
                RouteInterval::new(B, 0.0, 200.0, 0),
            ]
        );
        assert!(!p.line.is_quasi_disjoint(1e-9));
        // without the U-turn permission there is no way onto B
        let net = Network::build(1, &edges, RouteKey::ByName, &restrictions[..1], Tolerances::default()).unwrap();
        assert_eq!(network_distance(&net, &gp(A, 700.0), &gp(B, 200.0)), Err(RoutingError::NoPath));
    }

    #[test]
    fn one_way_forces_direction() {
        let mut edges = t1_edges();
        edges[0].kind = crate::network::Kind::OneWay;
        edges[1].kind = crate::network::Kind::OneWay;
        let net = crate::network::Network::build(
            1,
            &edges,
            crate::network::RouteKey::ByName,
            &[],
            crate::network::Tolerances::default(),
        )
        .unwrap();
        assert_eq!(network_distance(&net, &gp(A, 100.0), &gp(A, 300.0)).unwrap(), 200.0);
        // no way back down a one-way route, and B is a dead end
        assert_eq!(network_distance(&net, &gp(A, 300.0), &gp(A, 100.0)), Err(RoutingError::NoPath));
    }

    #[test]
    fn invalid_positions() {
        let net = t1();
        assert_eq!(
            network_distance(&net, &gp(7, 1.0), &gp(A, 1.0)),
            Err(RoutingError::UnknownRoute(7))
        );
        assert!(matches!(
            network_distance(&net, &gp(A, 1001.0), &gp(A, 1.0)),
            Err(RoutingError::OffRoute { .. })
        ));
        assert_eq!(
            network_distance(&net, &GPoint::new(2, A, 1.0, 0), &gp(A, 1.0)),
            Err(RoutingError::WrongNetwork(2))
        );
    }
}
