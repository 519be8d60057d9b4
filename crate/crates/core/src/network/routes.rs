use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use super::{Kind, Network, NodeId, Route, RouteId, SectionId, StartFlag};

/// How sections are grouped into routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RouteKey {
    /// Chain same-named sections into one route where they form a path.
    #[default]
    ByName,
    PerSection,
}

impl FromStr for RouteKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "by_name" => Ok(RouteKey::ByName),
            "per_section" => Ok(RouteKey::PerSection),
            other => Err(format!("route key must be by_name or per_section, got {other:?}")),
        }
    }
}

/// A section placed in a chain, possibly against its digitized direction.
#[derive(Debug, Clone, Copy)]
struct Link {
    sid: SectionId,
    forward: bool,
}

impl Network {
    /// Groups sections into routes and assigns section measures. Existing
    /// routes and junctions are discarded.
    pub fn build_routes(&mut self, key: RouteKey) {
        self.routes.clear();
        self.junctions.clear();
        let mut by_node: HashMap<NodeId, Vec<SectionId>> = HashMap::new();
        for s in self.sections.values() {
            by_node.entry(s.start_node).or_default().push(s.sid);
            by_node.entry(s.end_node).or_default().push(s.sid);
        }
        for v in by_node.values_mut() {
            v.sort_unstable();
        }

        let mut assigned: HashSet<SectionId> = HashSet::new();
        let sids: Vec<SectionId> = self.sections.keys().copied().collect();
        let mut next_rid: RouteId = 1;
        for sid in sids {
            if assigned.contains(&sid) {
                continue;
            }
            let chain = if key == RouteKey::ByName && !self.sections[&sid].name.is_empty() {
                self.chain_from(sid, &by_node, &assigned)
            } else {
                vec![Link { sid, forward: true }]
            };
            assigned.extend(chain.iter().map(|l| l.sid));
            self.install_route(next_rid, &chain);
            next_rid += 1;
        }
        self.rebuild_indices();
    }

    /// Grows a chain of same-name, same-kind sections from `seed`: first
    /// forward from its end node, then backward from its start node, always
    /// taking the smallest eligible section id and never revisiting a node.
    fn chain_from(
        &self,
        seed: SectionId,
        by_node: &HashMap<NodeId, Vec<SectionId>>,
        assigned: &HashSet<SectionId>,
    ) -> Vec<Link> {
        let s0 = &self.sections[&seed];
        let mut chain = std::collections::VecDeque::from([Link {
            sid: seed,
            forward: true,
        }]);
        let mut visited: HashSet<NodeId> = HashSet::from([s0.start_node, s0.end_node]);
        let mut used: HashSet<SectionId> = HashSet::from([seed]);
        let eligible = |sid: SectionId, used: &HashSet<SectionId>| {
            let s = &self.sections[&sid];
            !assigned.contains(&sid) && !used.contains(&sid) && s.name == s0.name && s.kind == s0.kind
        };

        // forward: the next section leaves `head`
        let mut head = s0.end_node;
        loop {
            let next = by_node[&head].iter().copied().find_map(|sid| {
                if !eligible(sid, &used) {
                    return None;
                }
                let s = &self.sections[&sid];
                let (forward, far) = if s.start_node == head {
                    (true, s.end_node)
                } else if s.kind == Kind::TwoWay {
                    (false, s.start_node)
                } else {
                    return None;
                };
                (!visited.contains(&far)).then_some((Link { sid, forward }, far))
            });
            let Some((link, far)) = next else { break };
            chain.push_back(link);
            used.insert(link.sid);
            visited.insert(far);
            head = far;
        }

        // backward: the previous section arrives at `tail`
        let mut tail = s0.start_node;
        loop {
            let next = by_node[&tail].iter().copied().find_map(|sid| {
                if !eligible(sid, &used) {
                    return None;
                }
                let s = &self.sections[&sid];
                let (forward, far) = if s.end_node == tail {
                    (true, s.start_node)
                } else if s.kind == Kind::TwoWay {
                    (false, s.end_node)
                } else {
                    return None;
                };
                (!visited.contains(&far)).then_some((Link { sid, forward }, far))
            });
            let Some((link, far)) = next else { break };
            chain.push_front(link);
            used.insert(link.sid);
            visited.insert(far);
            tail = far;
        }
        chain.into()
    }

    fn install_route(&mut self, rid: RouteId, chain: &[Link]) {
        // orient every member along the route
        for link in chain {
            let s = self.sections.get_mut(&link.sid).unwrap();
            if !link.forward {
                s.curve = s.curve.reversed();
                std::mem::swap(&mut s.start_node, &mut s.end_node);
            }
            s.rid = rid;
        }
        let first = &self.sections[&chain[0].sid];
        let mut curve = first.curve.clone();
        let mut boundary = vec![0usize];
        for link in &chain[1..] {
            boundary.push(curve.vertices().len() - 1);
            curve = curve.concat(&self.sections[&link.sid].curve);
        }
        let measures = curve.measures().to_vec();
        let length = curve.length();
        let mut stops = Vec::with_capacity(chain.len() + 1);
        for (k, link) in chain.iter().enumerate() {
            let pos1 = measures[boundary[k]];
            let pos2 = if k + 1 < chain.len() {
                measures[boundary[k + 1]]
            } else {
                length
            };
            let s = self.sections.get_mut(&link.sid).unwrap();
            s.pos1 = pos1;
            s.pos2 = pos2;
            stops.push((pos1, s.start_node));
            if k + 1 == chain.len() {
                stops.push((pos2, s.end_node));
            }
        }
        let head = &self.sections[&chain[0].sid];
        let route = Route {
            rid,
            kind: head.kind,
            length,
            curve,
            start_flag: StartFlag::Start,
            name: head.name.clone(),
            sections: chain.iter().map(|l| l.sid).collect(),
            stops,
        };
        self.routes.insert(rid, route);
    }
}
