//! CSV import of edges and turn restrictions, and the network dump.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::geometry::{MeasuredPolyline, PlanarPoint};

use super::{
    ConnectivityCode, Direction, EdgeInput, Junction, Kind, Network, NetworkError, Node, Route,
    RouteDir, Section, StartFlag, Tolerances, TurnRestriction,
};

pub const NODES_FILE: &str = "nodes.csv";
pub const SECTIONS_FILE: &str = "sections.csv";
pub const ROUTES_FILE: &str = "routes.csv";
pub const JUNCTIONS_FILE: &str = "junctions.csv";

pub(crate) struct Rows {
    file: String,
    reader: csv::Reader<Box<dyn Read>>,
}

pub(crate) struct Row {
    file: String,
    line: u64,
    record: csv::StringRecord,
}

impl Rows {
    pub(crate) fn open(
        reader: impl Read + 'static,
        file: &str,
        header: &[&str],
    ) -> Result<Rows, NetworkError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(Box::new(reader) as Box<dyn Read>);
        let found = reader.headers().map_err(|e| malformed(file, 1, e))?.clone();
        if found.iter().ne(header.iter().copied()) {
            return Err(malformed(
                file,
                1,
                format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        Ok(Rows {
            file: file.to_string(),
            reader,
        })
    }
}

impl Iterator for Rows {
    type Item = Result<Row, NetworkError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut record = csv::StringRecord::new();
        match self.reader.read_record(&mut record) {
            Ok(false) => None,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                Some(Ok(Row {
                    file: self.file.clone(),
                    line,
                    record,
                }))
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                Some(Err(malformed(&self.file, line, e)))
            }
        }
    }
}

impl Row {
    pub(crate) fn error(&self, msg: impl ToString) -> NetworkError {
        malformed(&self.file, self.line, msg)
    }

    pub(crate) fn text(&self, i: usize) -> &str {
        self.record.get(i).unwrap_or("")
    }

    pub(crate) fn parse<T: FromStr>(&self, i: usize, what: &str) -> Result<T, NetworkError> {
        self.text(i)
            .parse()
            .map_err(|_| self.error(format!("bad {what}: {:?}", self.text(i))))
    }

    pub(crate) fn float(&self, i: usize, what: &str) -> Result<f64, NetworkError> {
        let v: f64 = self.parse(i, what)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(format!("non-finite {what}")))
        }
    }
}

pub(crate) fn malformed(file: &str, line: u64, msg: impl ToString) -> NetworkError {
    NetworkError::MalformedRow {
        file: file.to_string(),
        line,
        msg: msg.to_string(),
    }
}

fn open_file(dir: &Path, name: &str) -> Result<fs::File, NetworkError> {
    Ok(fs::File::open(dir.join(name))?)
}

fn kind_of(row: &Row, i: usize) -> Result<Kind, NetworkError> {
    let code: u8 = row.parse(i, "kind")?;
    Kind::from_code(code).ok_or_else(|| row.error(format!("kind must be 1 or 2, got {code}")))
}

/// Reads an edge file with header `name,kind,wkt`.
pub fn read_edges(reader: impl Read + 'static, file: &str) -> Result<Vec<EdgeInput>, NetworkError> {
    let mut out = Vec::new();
    for row in Rows::open(reader, file, &["name", "kind", "wkt"])? {
        let row = row?;
        let curve = MeasuredPolyline::from_wkt(row.text(2)).map_err(|e| row.error(e))?;
        out.push(EdgeInput {
            name: row.text(0).to_string(),
            kind: kind_of(&row, 1)?,
            curve,
        });
    }
    Ok(out)
}

pub fn write_edges(w: impl Write, edges: &[EdgeInput]) -> Result<(), NetworkError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["name", "kind", "wkt"]).map_err(csv_io)?;
    for e in edges {
        w.write_record([e.name.as_str(), &e.kind.code().to_string(), &e.curve.to_wkt()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `node_id,from_route,from_dir,to_route,to_dir,allow`.
pub fn read_restrictions(
    reader: impl Read + 'static,
    file: &str,
) -> Result<Vec<TurnRestriction>, NetworkError> {
    let header = ["node_id", "from_route", "from_dir", "to_route", "to_dir", "allow"];
    let mut out = Vec::new();
    for row in Rows::open(reader, file, &header)? {
        let row = row?;
        let dir = |i: usize| -> Result<Direction, NetworkError> {
            row.text(i).parse().map_err(|e: String| row.error(e))
        };
        let allow = match row.text(5) {
            "0" => false,
            "1" => true,
            other => return Err(row.error(format!("allow must be 0 or 1, got {other:?}"))),
        };
        out.push(TurnRestriction {
            node: row.parse(0, "node_id")?,
            from: RouteDir::new(row.parse(1, "from_route")?, dir(2)?),
            to: RouteDir::new(row.parse(3, "to_route")?, dir(4)?),
            allow,
        });
    }
    Ok(out)
}

pub(crate) fn csv_io(e: csv::Error) -> NetworkError {
    NetworkError::Io(std::io::Error::other(e))
}

impl Network {
    /// Writes `nodes.csv`, `sections.csv`, `routes.csv` and `junctions.csv`.
    pub fn save_dump(&self, dir: &Path) -> Result<(), NetworkError> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(NODES_FILE)).map_err(csv_io)?;
        w.write_record(["node_id", "x", "y"]).map_err(csv_io)?;
        for n in self.nodes.values() {
            w.write_record([n.id.to_string(), n.point.x.to_string(), n.point.y.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join(SECTIONS_FILE)).map_err(csv_io)?;
        w.write_record([
            "sid", "rid", "start_node_id", "end_node_id", "pos1", "pos2", "kind", "length", "curve",
        ])
        .map_err(csv_io)?;
        for s in self.sections.values() {
            w.write_record([
                s.sid.to_string(),
                s.rid.to_string(),
                s.start_node.to_string(),
                s.end_node.to_string(),
                s.pos1.to_string(),
                s.pos2.to_string(),
                s.kind.code().to_string(),
                s.length.to_string(),
                s.curve.to_wkt(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join(ROUTES_FILE)).map_err(csv_io)?;
        w.write_record(["rid", "kind", "length", "start_flag", "name", "curve"])
            .map_err(csv_io)?;
        for r in self.routes.values() {
            w.write_record([
                r.rid.to_string(),
                r.kind.code().to_string(),
                r.length.to_string(),
                r.start_flag.as_str().to_string(),
                r.name.clone(),
                r.curve.to_wkt(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join(JUNCTIONS_FILE)).map_err(csv_io)?;
        w.write_record(["jid", "r1id", "r2id", "r1meas", "r2meas", "point", "cc"])
            .map_err(csv_io)?;
        for j in self.junctions.values() {
            w.write_record([
                j.jid.to_string(),
                j.r1.to_string(),
                j.r2.to_string(),
                j.r1_meas.to_string(),
                j.r2_meas.to_string(),
                j.point.to_wkt(),
                j.cc.to_bits(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dump written by [`Network::save_dump`].
    pub fn load_dump(dir: &Path, net_id: u32, tol: Tolerances) -> Result<Network, NetworkError> {
        let mut net = Network::empty(net_id, tol);
        for row in Rows::open(open_file(dir, NODES_FILE)?, NODES_FILE, &["node_id", "x", "y"])? {
            let row = row?;
            let id = row.parse(0, "node_id")?;
            let point = PlanarPoint::new(row.float(1, "x")?, row.float(2, "y")?);
            if net.nodes.insert(id, Node { id, point }).is_some() {
                return Err(row.error(format!("duplicate node {id}")));
            }
            net.grid.insert(id, point);
        }

        let header = [
            "sid", "rid", "start_node_id", "end_node_id", "pos1", "pos2", "kind", "length", "curve",
        ];
        for row in Rows::open(open_file(dir, SECTIONS_FILE)?, SECTIONS_FILE, &header)? {
            let row = row?;
            let s = Section {
                sid: row.parse(0, "sid")?,
                rid: row.parse(1, "rid")?,
                start_node: row.parse(2, "start_node_id")?,
                end_node: row.parse(3, "end_node_id")?,
                pos1: row.float(4, "pos1")?,
                pos2: row.float(5, "pos2")?,
                kind: kind_of(&row, 6)?,
                length: row.float(7, "length")?,
                curve: MeasuredPolyline::from_wkt(row.text(8)).map_err(|e| row.error(e))?,
                name: String::new(),
            };
            for n in [s.start_node, s.end_node] {
                if !net.nodes.contains_key(&n) {
                    return Err(row.error(format!("unknown node {n}")));
                }
            }
            if !(s.pos1 < s.pos2) {
                return Err(row.error("pos1 must be below pos2"));
            }
            net.sections.insert(s.sid, s);
        }

        let mut members: BTreeMap<u32, Vec<(f64, u32)>> = BTreeMap::new();
        for s in net.sections.values() {
            members.entry(s.rid).or_default().push((s.pos1, s.sid));
        }
        let header = ["rid", "kind", "length", "start_flag", "name", "curve"];
        for row in Rows::open(open_file(dir, ROUTES_FILE)?, ROUTES_FILE, &header)? {
            let row = row?;
            let rid: u32 = row.parse(0, "rid")?;
            let start_flag = match row.text(3) {
                "start" => StartFlag::Start,
                "end" => StartFlag::End,
                other => return Err(row.error(format!("bad start flag {other:?}"))),
            };
            let mut secs = members.remove(&rid).unwrap_or_default();
            if secs.is_empty() {
                return Err(row.error(format!("route {rid} has no sections")));
            }
            secs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let sections: Vec<u32> = secs.iter().map(|s| s.1).collect();
            let mut stops: Vec<(f64, u32)> = sections
                .iter()
                .map(|sid| (net.sections[sid].pos1, net.sections[sid].start_node))
                .collect();
            let last = &net.sections[sections.last().unwrap()];
            stops.push((last.pos2, last.end_node));
            let name = row.text(4).to_string();
            for sid in &sections {
                net.sections.get_mut(sid).unwrap().name = name.clone();
            }
            net.routes.insert(
                rid,
                Route {
                    rid,
                    kind: kind_of(&row, 1)?,
                    length: row.float(2, "length")?,
                    curve: MeasuredPolyline::from_wkt(row.text(5)).map_err(|e| row.error(e))?,
                    start_flag,
                    name,
                    sections,
                    stops,
                },
            );
        }
        if let Some((rid, _)) = members.into_iter().next() {
            return Err(malformed(SECTIONS_FILE, 0, format!("sections reference unknown route {rid}")));
        }
        net.rebuild_indices();

        let header = ["jid", "r1id", "r2id", "r1meas", "r2meas", "point", "cc"];
        for row in Rows::open(open_file(dir, JUNCTIONS_FILE)?, JUNCTIONS_FILE, &header)? {
            let row = row?;
            let r1 = row.parse(1, "r1id")?;
            let r1_meas = row.float(3, "r1meas")?;
            let route = net.route(r1).map_err(|e| row.error(e))?;
            let stop = route
                .stop_at(r1_meas, tol.measure)
                .ok_or_else(|| row.error(format!("no node on route {r1} at measure {r1_meas}")))?;
            let node = route.stops[stop].1;
            let j = Junction {
                jid: row.parse(0, "jid")?,
                node,
                r1,
                r2: row.parse(2, "r2id")?,
                r1_meas,
                r2_meas: row.float(4, "r2meas")?,
                point: PlanarPoint::from_wkt(row.text(5)).map_err(|e| row.error(e))?,
                cc: ConnectivityCode::from_bits(row.text(6))
                    .ok_or_else(|| row.error("cc must be sixteen 0/1 characters"))?,
            };
            if net.incidence(node, j.r2).is_none() {
                return Err(row.error(format!("route {} does not meet route {r1} at node {node}", j.r2)));
            }
            net.junctions.insert(j.jid, j);
        }
        net.rebuild_indices();
        Ok(net)
    }
}
