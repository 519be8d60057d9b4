//! Linear-referenced transportation network: nodes and sections (the
//! imported graph), routes (chains of sections carrying the measure
//! system), and junctions between pairs of routes with their connectivity
//! codes. A turn-aware adjacency structure is derived from the junctions.

pub(crate) mod io;
mod junctions;
mod routes;
mod topology;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{GeometryError, MeasuredPolyline, PlanarPoint};
use crate::motion::{GLine, GPoint};

pub use io::{read_edges, read_restrictions, write_edges, JUNCTIONS_FILE, NODES_FILE, ROUTES_FILE, SECTIONS_FILE};
pub use junctions::{ConnectivityCode, TurnRestriction};
pub use routes::RouteKey;
pub use topology::EdgeInput;

pub type NetId = u32;
pub type NodeId = u32;
pub type SectionId = u32;
pub type RouteId = u32;
pub type JunctionId = u32;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("no edges to build a topology from")]
    EmptyInput,
    #[error("edge {index} is degenerate: {reason}")]
    DegenerateEdge { index: usize, reason: String },
    #[error("unknown route {0}")]
    UnknownRoute(RouteId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("route {rid} does not pass through node {node}")]
    UnknownRouteAtNode { node: NodeId, rid: RouteId },
    #[error("no junction involving route {rid} at node {node}")]
    NoJunctionAtNode { node: NodeId, rid: RouteId },
    #[error("network has no routes yet")]
    NotRouted,
    #[error("{file}:{line}: {msg}")]
    MalformedRow {
        file: String,
        line: u64,
        msg: String,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Comparison tolerances shared by the network and the values placed on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Measure equality, meters.
    pub measure: f64,
    /// Node merge distance, meters.
    pub snap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            measure: crate::geometry::EPS_MEASURE,
            snap: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Increasing measure.
    Up,
    /// Decreasing measure.
    Down,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            other => Err(format!("direction must be up or down, got {other:?}")),
        }
    }
}

/// A route travelled in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RouteDir {
    pub rid: RouteId,
    pub dir: Direction,
}

impl RouteDir {
    pub fn new(rid: RouteId, dir: Direction) -> Self {
        RouteDir { rid, dir }
    }

    pub fn up(rid: RouteId) -> Self {
        RouteDir::new(rid, Direction::Up)
    }

    pub fn down(rid: RouteId) -> Self {
        RouteDir::new(rid, Direction::Down)
    }
}

impl fmt::Display for RouteDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.rid, self.dir.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    OneWay = 1,
    TwoWay = 2,
}

impl Kind {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Kind> {
        match code {
            1 => Some(Kind::OneWay),
            2 => Some(Kind::TwoWay),
            _ => None,
        }
    }

    pub fn allows(self, dir: Direction) -> bool {
        self == Kind::TwoWay || dir == Direction::Up
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartFlag {
    Start,
    End,
}

impl StartFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            StartFlag::Start => "start",
            StartFlag::End => "end",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub point: PlanarPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub sid: SectionId,
    /// Owning route; 0 until routes are built.
    pub rid: RouteId,
    pub start_node: NodeId,
    pub end_node: NodeId,
    pub pos1: f64,
    pub pos2: f64,
    pub kind: Kind,
    pub length: f64,
    pub curve: MeasuredPolyline,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub rid: RouteId,
    pub kind: Kind,
    pub length: f64,
    pub curve: MeasuredPolyline,
    pub start_flag: StartFlag,
    pub name: String,
    /// Member sections ordered by measure.
    pub sections: Vec<SectionId>,
    /// Section boundary nodes ordered by measure.
    pub stops: Vec<(f64, NodeId)>,
}

impl Route {
    /// Index into `stops` of the first stop with measure strictly greater
    /// than `m` (travelling up) or strictly smaller (travelling down).
    pub fn next_stop(&self, m: f64, dir: Direction, eps: f64) -> Option<usize> {
        match dir {
            Direction::Up => {
                let i = self.stops.partition_point(|&(s, _)| s <= m + eps);
                (i < self.stops.len()).then_some(i)
            }
            Direction::Down => {
                let i = self.stops.partition_point(|&(s, _)| s < m - eps);
                i.checked_sub(1)
            }
        }
    }

    /// Stop coinciding with measure `m`, if any.
    pub fn stop_at(&self, m: f64, eps: f64) -> Option<usize> {
        let i = self.stops.partition_point(|&(s, _)| s < m - eps);
        (i < self.stops.len() && (self.stops[i].0 - m).abs() <= eps).then_some(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub jid: JunctionId,
    pub node: NodeId,
    pub r1: RouteId,
    pub r2: RouteId,
    pub r1_meas: f64,
    pub r2_meas: f64,
    pub point: PlanarPoint,
    pub cc: ConnectivityCode,
}

impl Junction {
    /// Matrix index of a route direction, or `None` if the route is not
    /// part of this junction.
    pub fn index_of(&self, rd: RouteDir) -> Option<usize> {
        let base = if rd.rid == self.r1 {
            0
        } else if rd.rid == self.r2 {
            2
        } else {
            return None;
        };
        Some(base + if rd.dir == Direction::Up { 0 } else { 1 })
    }

    pub fn allows(&self, from: RouteDir, to: RouteDir) -> Option<bool> {
        Some(self.cc.get(self.index_of(from)?, self.index_of(to)?))
    }

    pub fn involves(&self, rid: RouteId) -> bool {
        self.r1 == rid || self.r2 == rid
    }
}

/// How a search state arrived at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arrival {
    /// The trip starts at this node; any kind-legal departure is allowed.
    Origin,
    Via(RouteDir),
}

/// One permitted outgoing move from a node: travel along `dir` to the
/// next stop on that route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Departure {
    pub dir: RouteDir,
    pub from_measure: f64,
    pub to_measure: f64,
    pub next_node: NodeId,
    pub section: SectionId,
}

impl Departure {
    pub fn length(&self) -> f64 {
        (self.to_measure - self.from_measure).abs()
    }
}

/// Where a route passes through a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    pub rid: RouteId,
    pub measure: f64,
    pub stop: usize,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub net_id: NetId,
    pub tol: Tolerances,
    nodes: BTreeMap<NodeId, Node>,
    sections: BTreeMap<SectionId, Section>,
    routes: BTreeMap<RouteId, Route>,
    junctions: BTreeMap<JunctionId, Junction>,
    incidences: HashMap<NodeId, Vec<Incidence>>,
    node_junctions: HashMap<NodeId, Vec<JunctionId>>,
    adjacency: HashMap<(NodeId, RouteDir), Vec<Departure>>,
    grid: topology::SnapGrid,
}

impl Network {
    fn empty(net_id: NetId, tol: Tolerances) -> Self {
        Network {
            net_id,
            tol,
            nodes: BTreeMap::new(),
            sections: BTreeMap::new(),
            routes: BTreeMap::new(),
            junctions: BTreeMap::new(),
            incidences: HashMap::new(),
            node_junctions: HashMap::new(),
            adjacency: HashMap::new(),
            grid: topology::SnapGrid::new(tol.snap),
        }
    }

    /// Runs the whole build pipeline: topology, routes, junctions.
    pub fn build(
        net_id: NetId,
        edges: &[EdgeInput],
        key: RouteKey,
        restrictions: &[TurnRestriction],
        tol: Tolerances,
    ) -> Result<Network, NetworkError> {
        let mut net = Network::create_topology(net_id, edges, tol)?;
        net.build_routes(key);
        net.build_junctions(restrictions)?;
        Ok(net)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn sections(&self) -> impl Iterator<Item = &Section> {
        self.sections.values()
    }

    pub fn routes(&self) -> impl Iterator<Item = &Route> {
        self.routes.values()
    }

    pub fn junctions(&self) -> impl Iterator<Item = &Junction> {
        self.junctions.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn section(&self, sid: SectionId) -> Option<&Section> {
        self.sections.get(&sid)
    }

    pub fn route(&self, rid: RouteId) -> Result<&Route, NetworkError> {
        self.routes.get(&rid).ok_or(NetworkError::UnknownRoute(rid))
    }

    pub fn junction(&self, jid: JunctionId) -> Option<&Junction> {
        self.junctions.get(&jid)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn is_routed(&self) -> bool {
        !self.routes.is_empty()
    }

    /// Routes passing through `node`, ordered by route id.
    pub fn incidences(&self, node: NodeId) -> &[Incidence] {
        self.incidences.get(&node).map_or(&[], Vec::as_slice)
    }

    pub fn incidence(&self, node: NodeId, rid: RouteId) -> Option<Incidence> {
        self.incidences(node).iter().copied().find(|i| i.rid == rid)
    }

    pub fn junctions_at(&self, node: NodeId) -> impl Iterator<Item = &Junction> {
        self.node_junctions
            .get(&node)
            .into_iter()
            .flatten()
            .filter_map(|j| self.junctions.get(j))
    }

    pub fn length(&self, rid: RouteId) -> Result<f64, NetworkError> {
        Ok(self.route(rid)?.length)
    }

    pub fn curve(&self, rid: RouteId) -> Result<&MeasuredPolyline, NetworkError> {
        Ok(&self.route(rid)?.curve)
    }

    /// Route kind code: 1 one-way, 2 two-way.
    pub fn dual(&self, rid: RouteId) -> Result<u8, NetworkError> {
        Ok(self.route(rid)?.kind.code())
    }

    pub fn on_route(&self, p: &GPoint, rid: RouteId) -> bool {
        let eps = self.tol.measure;
        p.netid == self.net_id
            && p.rid == rid
            && self
                .routes
                .get(&rid)
                .is_some_and(|r| p.measure >= -eps && p.measure <= r.length + eps)
    }

    pub fn intersects(&self, g: &GLine, rid: RouteId) -> bool {
        g.netid == self.net_id
            && self.routes.contains_key(&rid)
            && g
                .intervals
                .iter()
                .any(|iv| iv.rid == rid && iv.span() > self.tol.measure)
    }

    /// Whether the intervals of `g` on `rid` cover the whole route.
    pub fn contains(&self, g: &GLine, rid: RouteId) -> bool {
        let Some(route) = self.routes.get(&rid) else {
            return false;
        };
        if g.netid != self.net_id {
            return false;
        }
        let eps = self.tol.measure;
        let mut spans: Vec<(f64, f64)> = g
            .intervals
            .iter()
            .filter(|iv| iv.rid == rid)
            .map(|iv| (iv.lo(), iv.hi()))
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = 0.0;
        for (lo, hi) in spans {
            if lo > reach + eps {
                return false;
            }
            reach = f64::max(reach, hi);
        }
        reach >= route.length - eps
    }

    pub fn is_contained(&self, rid: RouteId, g: &GLine) -> bool {
        self.contains(g, rid)
    }

    /// Whether a transition between two route directions is permitted at
    /// `node` by the connectivity codes, ignoring one-way kinds.
    pub fn turn_allowed(&self, node: NodeId, from: RouteDir, to: RouteDir) -> bool {
        if from.rid == to.rid {
            let mut any = false;
            for j in self.junctions_at(node).filter(|j| j.involves(from.rid)) {
                any = true;
                if j.allows(from, to) != Some(true) {
                    return false;
                }
            }
            // without a junction record: straight on yes, U-turn no
            any || from.dir == to.dir
        } else {
            self.junctions_at(node)
                .find(|j| j.involves(from.rid) && j.involves(to.rid))
                .and_then(|j| j.allows(from, to))
                .unwrap_or(false)
        }
    }

    /// Whether a vehicle can arrive at `node` travelling along `rd`.
    pub fn can_arrive(&self, node: NodeId, rd: RouteDir) -> bool {
        let Some(inc) = self.incidence(node, rd.rid) else {
            return false;
        };
        let route = &self.routes[&rd.rid];
        route.kind.allows(rd.dir)
            && match rd.dir {
                Direction::Up => inc.stop > 0,
                Direction::Down => inc.stop + 1 < route.stops.len(),
            }
    }

    /// The move from `node` along `rd` to the next stop, if the route
    /// continues that way and its kind allows the direction.
    pub fn departure(&self, node: NodeId, rd: RouteDir) -> Option<Departure> {
        let inc = self.incidence(node, rd.rid)?;
        let route = &self.routes[&rd.rid];
        if !route.kind.allows(rd.dir) {
            return None;
        }
        let next = match rd.dir {
            Direction::Up => inc.stop + 1,
            Direction::Down => inc.stop.checked_sub(1)?,
        };
        let &(to_measure, next_node) = route.stops.get(next)?;
        let section = route.sections[inc.stop.min(next)];
        Some(Departure {
            dir: rd,
            from_measure: inc.measure,
            to_measure,
            next_node,
            section,
        })
    }

    /// Every kind-legal departure from `node`, ignoring turn rules.
    pub fn departures(&self, node: NodeId) -> Vec<Departure> {
        let mut out = Vec::new();
        for inc in self.incidences(node) {
            for dir in [Direction::Up, Direction::Down] {
                if let Some(d) = self.departure(node, RouteDir::new(inc.rid, dir)) {
                    out.push(d);
                }
            }
        }
        out
    }

    /// Permitted departures after arriving at `node` along `via`.
    pub fn outgoing(&self, node: NodeId, arrival: Arrival) -> Vec<Departure> {
        match arrival {
            Arrival::Origin => self.departures(node),
            Arrival::Via(rd) => self.adjacency.get(&(node, rd)).cloned().unwrap_or_default(),
        }
    }

    /// Adjacency entries as `(node, arriving) -> departures`, for inspection.
    pub fn adjacency(&self) -> impl Iterator<Item = (&(NodeId, RouteDir), &Vec<Departure>)> {
        self.adjacency.iter()
    }

    fn rebuild_indices(&mut self) {
        self.incidences.clear();
        for route in self.routes.values() {
            for (stop, &(measure, node)) in route.stops.iter().enumerate() {
                self.incidences.entry(node).or_default().push(Incidence {
                    rid: route.rid,
                    measure,
                    stop,
                });
            }
        }
        for v in self.incidences.values_mut() {
            v.sort_by_key(|i| i.rid);
        }
        self.node_junctions.clear();
        for j in self.junctions.values() {
            self.node_junctions.entry(j.node).or_default().push(j.jid);
        }
        self.rebuild_adjacency();
    }

    fn rebuild_adjacency(&mut self) {
        let mut adjacency = HashMap::new();
        for &node in self.nodes.keys() {
            let departures = self.departures(node);
            for inc in self.incidences(node) {
                for dir in [Direction::Up, Direction::Down] {
                    let via = RouteDir::new(inc.rid, dir);
                    if !self.can_arrive(node, via) {
                        continue;
                    }
                    let allowed: Vec<Departure> = departures
                        .iter()
                        .filter(|d| self.turn_allowed(node, via, d.dir))
                        .copied()
                        .collect();
                    adjacency.insert((node, via), allowed);
                }
            }
        }
        self.adjacency = adjacency;
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn edge(pts: &[(f64, f64)], name: &str, kind: Kind) -> EdgeInput {
        EdgeInput {
            curve: MeasuredPolyline::new(pts.iter().map(|&(x, y)| PlanarPoint::new(x, y)).collect())
                .unwrap(),
            name: name.to_string(),
            kind,
        }
    }

    /// Route A (0,0)-(1000,0) and route B (600,0)-(600,500), both two-way,
    /// meeting at node 2.
    pub fn t1_edges() -> Vec<EdgeInput> {
        vec![
            edge(&[(0.0, 0.0), (600.0, 0.0)], "A", Kind::TwoWay),
            edge(&[(600.0, 0.0), (1000.0, 0.0)], "A", Kind::TwoWay),
            edge(&[(600.0, 0.0), (600.0, 500.0)], "B", Kind::TwoWay),
        ]
    }

    pub fn t1() -> Network {
        t1_with(&[])
    }

    pub fn t1_with(restrictions: &[TurnRestriction]) -> Network {
        Network::build(1, &t1_edges(), RouteKey::ByName, restrictions, Tolerances::default()).unwrap()
    }

    pub const A: RouteId = 1;
    pub const B: RouteId = 2;
}
