use std::collections::HashMap;

use crate::geometry::{MeasuredPolyline, PlanarPoint};

use super::{
    Junction, Kind, Network, NetworkError, Node, NodeId, Route, RouteId, Section, SectionId,
    StartFlag, Tolerances,
};

/// One imported edge: geometry plus attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeInput {
    pub curve: MeasuredPolyline,
    pub name: String,
    pub kind: Kind,
}

/// Spatial hash of node positions on a grid of the snap distance.
#[derive(Debug, Clone)]
pub(super) struct SnapGrid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<(NodeId, PlanarPoint)>>,
}

impl SnapGrid {
    pub(super) fn new(snap: f64) -> Self {
        SnapGrid {
            cell: if snap > 0.0 { snap } else { 1e-6 },
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &PlanarPoint) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub(super) fn insert(&mut self, id: NodeId, p: PlanarPoint) {
        let k = self.key(&p);
        self.cells.entry(k).or_default().push((id, p));
    }

    /// Nearest node within `snap`; ties go to the smaller id.
    pub(super) fn find(&self, p: &PlanarPoint, snap: f64) -> Option<NodeId> {
        let (kx, ky) = self.key(p);
        let mut best: Option<(f64, NodeId)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &(id, q) in self.cells.get(&(kx + dx, ky + dy)).into_iter().flatten() {
                    let d = q.distance(p);
                    if d <= snap && best.is_none_or(|b| (d, id) < b) {
                        best = Some((d, id));
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }
}

impl Network {
    /// Builds nodes and sections from raw edges, merging endpoints closer
    /// than the snap tolerance. Node ids follow first appearance, section
    /// ids follow input order, both starting at 1.
    pub fn create_topology(
        net_id: u32,
        edges: &[EdgeInput],
        tol: Tolerances,
    ) -> Result<Network, NetworkError> {
        if edges.is_empty() {
            return Err(NetworkError::EmptyInput);
        }
        let mut net = Network::empty(net_id, tol);
        for (index, edge) in edges.iter().enumerate() {
            net.insert_section(index, edge)?;
        }
        Ok(net)
    }

    fn snap_or_create(&mut self, p: PlanarPoint) -> NodeId {
        if let Some(id) = self.grid.find(&p, self.tol.snap) {
            return id;
        }
        let id = self.nodes.keys().next_back().map_or(1, |k| k + 1);
        self.nodes.insert(id, Node { id, point: p });
        self.grid.insert(id, p);
        id
    }

    fn insert_section(&mut self, index: usize, edge: &EdgeInput) -> Result<SectionId, NetworkError> {
        let degenerate = |reason: &str| NetworkError::DegenerateEdge {
            index,
            reason: reason.to_string(),
        };
        if edge.curve.length() <= self.tol.measure {
            return Err(degenerate("zero-length curve"));
        }
        // check before creating nodes so a rejected edge leaves no trace
        let first = edge.curve.first();
        let last = edge.curve.last();
        let start_hit = self.grid.find(&first, self.tol.snap);
        let end_hit = self.grid.find(&last, self.tol.snap);
        if first.distance(&last) <= self.tol.snap
            || (start_hit.is_some() && start_hit == end_hit)
        {
            return Err(degenerate("both endpoints snap to the same node"));
        }
        let start_node = self.snap_or_create(first);
        let end_node = self.snap_or_create(last);
        let mut vertices = edge.curve.vertices().to_vec();
        vertices[0] = self.nodes[&start_node].point;
        *vertices.last_mut().unwrap() = self.nodes[&end_node].point;
        let curve = MeasuredPolyline::new_dedup(vertices)
            .map_err(|e| degenerate(&e.to_string()))?;
        let sid = self.sections.keys().next_back().map_or(1, |k| k + 1);
        let length = curve.length();
        self.sections.insert(
            sid,
            Section {
                sid,
                rid: 0,
                start_node,
                end_node,
                pos1: 0.0,
                pos2: length,
                kind: edge.kind,
                length,
                curve,
                name: edge.name.clone(),
            },
        );
        Ok(sid)
    }

    /// Adds one edge. On a routed network the edge becomes a route of its
    /// own, with default-policy junctions at its end nodes.
    pub fn add_edge(
        &mut self,
        curve: MeasuredPolyline,
        name: &str,
        kind: Kind,
    ) -> Result<SectionId, NetworkError> {
        let edge = EdgeInput {
            curve,
            name: name.to_string(),
            kind,
        };
        let sid = self.insert_section(self.sections.len(), &edge)?;
        if !self.is_routed() {
            return Ok(sid);
        }
        let rid: RouteId = self.routes.keys().next_back().map_or(1, |k| k + 1);
        let section = self.sections.get_mut(&sid).unwrap();
        section.rid = rid;
        let route = Route {
            rid,
            kind,
            length: section.length,
            curve: section.curve.clone(),
            start_flag: StartFlag::Start,
            name: section.name.clone(),
            sections: vec![sid],
            stops: vec![(0.0, section.start_node), (section.length, section.end_node)],
        };
        let ends = [section.start_node, section.end_node];
        self.routes.insert(rid, route);
        self.rebuild_indices();
        for node in ends {
            let others: Vec<_> = self
                .incidences(node)
                .iter()
                .filter(|i| i.rid != rid)
                .copied()
                .collect();
            let mine = self.incidence(node, rid).unwrap();
            for other in others {
                let jid = self.junctions.keys().next_back().map_or(1, |k| k + 1);
                let (a, b) = if other.rid < rid { (other, mine) } else { (mine, other) };
                self.junctions.insert(
                    jid,
                    Junction {
                        jid,
                        node,
                        r1: a.rid,
                        r2: b.rid,
                        r1_meas: a.measure,
                        r2_meas: b.measure,
                        point: self.nodes[&node].point,
                        cc: super::ConnectivityCode::default_policy(),
                    },
                );
            }
        }
        self.rebuild_indices();
        Ok(sid)
    }

    /// Adds a node. Returns an existing node within snap distance; a point
    /// on a section interior splits that section.
    pub fn add_node(&mut self, point: PlanarPoint) -> NodeId {
        if let Some(id) = self.grid.find(&point, self.tol.snap) {
            return id;
        }
        let snap = self.tol.snap;
        let hit = self
            .sections
            .values()
            .map(|s| (s.sid, s.curve.project_point(&point)))
            .filter(|(_, p)| p.distance <= snap)
            .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance).then(a.0.cmp(&b.0)));
        let Some((sid, proj)) = hit else {
            return self.snap_or_create(point);
        };
        let section = self.sections[&sid].clone();
        if proj.measure <= snap || proj.measure >= section.length - snap {
            return self.snap_or_create(point);
        }
        let foot = section.curve.locate_point(proj.measure).expect("projection lies on curve");
        let node = self.nodes.keys().next_back().map_or(1, |k| k + 1);
        self.nodes.insert(node, Node { id: node, point: foot });
        self.grid.insert(node, foot);

        let mut head_pts = section.curve.sub_polyline(0.0, proj.measure).unwrap().vertices().to_vec();
        *head_pts.last_mut().unwrap() = foot;
        let mut tail_pts = section
            .curve
            .sub_polyline(proj.measure, section.length)
            .unwrap()
            .vertices()
            .to_vec();
        tail_pts[0] = foot;
        let head = MeasuredPolyline::new_dedup(head_pts).unwrap();
        let tail = MeasuredPolyline::new_dedup(tail_pts).unwrap();
        let new_sid = self.sections.keys().next_back().map_or(1, |k| k + 1);
        let split_measure = section.pos1 + head.length();

        let first = self.sections.get_mut(&sid).unwrap();
        first.end_node = node;
        first.length = head.length();
        first.curve = head;
        if first.rid != 0 {
            first.pos2 = split_measure;
        } else {
            first.pos2 = first.length;
        }
        let second = Section {
            sid: new_sid,
            rid: section.rid,
            start_node: node,
            end_node: section.end_node,
            pos1: if section.rid != 0 { split_measure } else { 0.0 },
            pos2: if section.rid != 0 { section.pos2 } else { tail.length() },
            kind: section.kind,
            length: tail.length(),
            curve: tail,
            name: section.name.clone(),
        };
        self.sections.insert(new_sid, second);

        if let Some(route) = self.routes.get_mut(&section.rid) {
            let at = route.sections.iter().position(|&s| s == sid).unwrap();
            route.sections.insert(at + 1, new_sid);
            route.stops.insert(at + 1, (split_measure, node));
            self.rebuild_indices();
        }
        node
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn shared_endpoint_reuses_node() {
        let edges = vec![
            edge(&[(0.0, 0.0), (600.0, 0.0)], "A", Kind::TwoWay),
            edge(&[(600.0, 0.0), (1000.0, 0.0)], "A", Kind::TwoWay),
        ];
        let net = Network::create_topology(1, &edges, Tolerances::default()).unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.section_count(), 2);
        let s: Vec<_> = net.sections().collect();
        assert_eq!((s[0].sid, s[0].start_node, s[0].end_node), (1, 1, 2));
        assert_eq!((s[1].sid, s[1].start_node, s[1].end_node), (2, 2, 3));
    }

    #[test]
    fn single_edge() {
        let edges = vec![edge(&[(0.0, 0.0), (10.0, 0.0)], "", Kind::OneWay)];
        let net = Network::create_topology(1, &edges, Tolerances::default()).unwrap();
        assert_eq!((net.node_count(), net.section_count()), (2, 1));
    }

    #[test]
    fn snaps_close_endpoints() {
        let edges = vec![
            edge(&[(0.0, 0.0), (600.0, 0.0)], "", Kind::TwoWay),
            edge(&[(600.005, 0.0), (600.0, 500.0)], "", Kind::TwoWay),
        ];
        let net = Network::create_topology(1, &edges, Tolerances::default()).unwrap();
        assert_eq!(net.node_count(), 3);
        let s2 = net.section(2).unwrap();
        assert_eq!(s2.start_node, 2);
        // the curve is moved onto the merged node
        assert_eq!(s2.curve.first(), PlanarPoint::new(600.0, 0.0));
        // 2 cm apart stays separate
        let edges = vec![
            edge(&[(0.0, 0.0), (600.0, 0.0)], "", Kind::TwoWay),
            edge(&[(600.02, 0.0), (600.0, 500.0)], "", Kind::TwoWay),
        ];
        let net = Network::create_topology(1, &edges, Tolerances::default()).unwrap();
        assert_eq!(net.node_count(), 4);
    }

    #[test]
    fn topology_errors() {
        assert!(matches!(
            Network::create_topology(1, &[], Tolerances::default()),
            Err(NetworkError::EmptyInput)
        ));
        let loop_edge = vec![edge(&[(0.0, 0.0), (10.0, 0.0), (0.0, 5.0), (0.0, 0.001)], "", Kind::TwoWay)];
        assert!(matches!(
            Network::create_topology(1, &loop_edge, Tolerances::default()),
            Err(NetworkError::DegenerateEdge { index: 0, .. })
        ));
    }

    #[test]
    fn deterministic_ids() {
        let a = Network::create_topology(1, &t1_edges(), Tolerances::default()).unwrap();
        let b = Network::create_topology(1, &t1_edges(), Tolerances::default()).unwrap();
        assert_eq!(a.nodes().collect::<Vec<_>>(), b.nodes().collect::<Vec<_>>());
        assert_eq!(a.sections().collect::<Vec<_>>(), b.sections().collect::<Vec<_>>());
    }

    #[test]
    fn add_edge_between_existing_nodes() {
        let mut net = t1();
        let before = net.node_count();
        let curve = MeasuredPolyline::new(vec![PlanarPoint::new(1000.0, 0.0), PlanarPoint::new(600.0, 500.0)]).unwrap();
        let sid = net.add_edge(curve.clone(), "C", Kind::TwoWay).unwrap();
        assert_eq!(sid, 4);
        assert_eq!(net.node_count(), before);
        let rid = net.section(sid).unwrap().rid;
        assert_eq!(rid, 3);
        // junctions with A at (1000,0) and with B at (600,500)
        let js: Vec<_> = net.junctions().filter(|j| j.involves(rid)).collect();
        assert_eq!(js.len(), 2);
        // parallel duplicate allowed
        let dup = net.add_edge(curve, "C", Kind::TwoWay).unwrap();
        assert_eq!(dup, 5);
        assert_eq!(net.node_count(), before);
        // brute-force recount of sections joining the two nodes
        let (n1, n2) = (3, 4);
        let parallel = net
            .sections()
            .filter(|s| (s.start_node, s.end_node) == (n1, n2) || (s.start_node, s.end_node) == (n2, n1))
            .count();
        assert_eq!(parallel, 2);
        // existing cc is untouched
        assert_eq!(net.junction(1).unwrap().cc.count_allowed(), 12);
    }

    #[test]
    fn add_edge_with_fresh_endpoint() {
        let mut net = t1();
        let before = net.node_count();
        let curve = MeasuredPolyline::new(vec![PlanarPoint::new(1000.0, 0.0), PlanarPoint::new(1500.0, 0.0)]).unwrap();
        net.add_edge(curve, "", Kind::OneWay).unwrap();
        assert_eq!(net.node_count(), before + 1);
    }

    #[test]
    fn add_node_cases() {
        let mut net = t1();
        let total: f64 = net.sections().map(|s| s.length).sum();
        assert_eq!(net.add_node(PlanarPoint::new(600.0, 0.0)), 2);
        assert_eq!(net.add_node(PlanarPoint::new(600.004, 0.0)), 2);
        let far = net.add_node(PlanarPoint::new(5000.0, 5000.0));
        assert_eq!(far, 5);
        assert!(net.incidences(far).is_empty());

        let sections_before = net.section_count();
        let mid = net.add_node(PlanarPoint::new(300.0, 0.005));
        assert_eq!(mid, 6);
        assert_eq!(net.section_count(), sections_before + 1);
        let halves: Vec<_> = net.sections().filter(|s| s.start_node == mid || s.end_node == mid).collect();
        assert_eq!(halves.len(), 2);
        assert!((halves[0].length + halves[1].length - 600.0).abs() < 1e-9);
        let after: f64 = net.sections().map(|s| s.length).sum();
        assert!((after - total).abs() < 1e-9);
        // route A now has a stop at 300
        let a = net.route(A).unwrap();
        assert_eq!(a.stops.iter().map(|s| s.1).collect::<Vec<_>>(), vec![1, mid, 2, 3]);
        assert!((a.stops[1].0 - 300.0).abs() < 1e-9);
        // tiling still exact
        for w in a.sections.windows(2) {
            assert_eq!(net.section(w[0]).unwrap().pos2, net.section(w[1]).unwrap().pos1);
        }
    }

    #[test]
    fn add_node_before_routes() {
        let mut net = Network::create_topology(1, &t1_edges(), Tolerances::default()).unwrap();
        let n = net.add_node(PlanarPoint::new(0.0, 100.0));
        assert_eq!(n, 5);
        let n = net.add_node(PlanarPoint::new(200.0, 0.0));
        assert_eq!(net.section_count(), 4);
        let s = net.sections().find(|s| s.start_node == n).unwrap();
        assert_eq!((s.pos1, s.pos2), (0.0, 400.0));
    }
}
