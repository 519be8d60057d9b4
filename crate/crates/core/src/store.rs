//! Record stores for named static positions, named static lines and moving
//! points, persisted as CSV files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::motion::{GLine, GPoint, MGPointUnit, MoId, MotionError, RouteInterval, Timestamp, UGPoint};
use crate::network::io::{csv_io, Rows};
use crate::network::{NetId, Network, NetworkError, RouteId};

pub const GPOINTS_FILE: &str = "gpoints.csv";
pub const GLINES_FILE: &str = "glines.csv";
pub const MGPOINTS_FILE: &str = "mgpoints.csv";

const GPOINTS_HEADER: [&str; 6] = ["id", "netid", "rid", "measure", "side", "name"];
const GLINES_HEADER: [&str; 8] = ["id", "glid", "netid", "rid", "pos1", "pos2", "side", "name"];
const MGPOINTS_HEADER: [&str; 10] = ["moid", "netid", "rid", "side", "t1", "t2", "pos1", "pos2", "v0", "a"];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("gline {id}: intervals {first} and {second} overlap ({a:?} vs {b:?})")]
    QuasiDisjointViolation {
        id: i64,
        first: usize,
        second: usize,
        a: RouteInterval,
        b: RouteInterval,
    },
    #[error("record {id}: {reason}")]
    InvalidGeometry { id: i64, reason: String },
    #[error("record id {0} already exists")]
    DuplicateId(i64),
    #[error("no record with id {0}")]
    UnknownRecord(i64),
    #[error("no record named {0:?}")]
    UnknownName(String),
    #[error("{file}:{line}: {msg}")]
    MalformedRow { file: String, line: u64, msg: String },
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<NetworkError> for StoreError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::MalformedRow { file, line, msg } => StoreError::MalformedRow { file, line, msg },
            NetworkError::Io(e) => StoreError::Io(e),
            other => StoreError::Io(std::io::Error::other(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GPointRecord {
    pub id: i64,
    pub geom: GPoint,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GLineRecord {
    pub id: i64,
    pub geom: GLine,
    pub name: String,
}

/// All stored records. Moving points are kept per object as time-ordered
/// unit lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Store {
    gpoints: BTreeMap<i64, GPointRecord>,
    glines: BTreeMap<i64, GLineRecord>,
    mgpoints: BTreeMap<MoId, Vec<MGPointUnit>>,
}

fn check_interval(net: &Network, id: i64, netid: NetId, iv: &RouteInterval) -> Result<(), StoreError> {
    let invalid = |reason: String| Err(StoreError::InvalidGeometry { id, reason });
    if netid != net.net_id {
        return invalid(format!("network {netid} is not {}", net.net_id));
    }
    let Ok(route) = net.route(iv.rid) else {
        return invalid(format!("unknown route {}", iv.rid));
    };
    let eps = net.tol.measure;
    if !(iv.lo() >= -eps && iv.hi() <= route.length + eps) {
        return invalid(format!("interval {}..{} outside route {} of length {}", iv.pos1, iv.pos2, iv.rid, route.length));
    }
    if !(-1..=1).contains(&iv.side) {
        return invalid(format!("side {}", iv.side));
    }
    Ok(())
}

fn validate_gline(net: &Network, rec: &GLineRecord) -> Result<(), StoreError> {
    if rec.geom.is_empty() {
        return Err(StoreError::InvalidGeometry {
            id: rec.id,
            reason: "gline has no intervals".into(),
        });
    }
    for iv in &rec.geom.intervals {
        check_interval(net, rec.id, rec.geom.netid, iv)?;
    }
    if let Some((i, j)) = rec.geom.quasi_disjoint_violation(net.tol.measure) {
        return Err(StoreError::QuasiDisjointViolation {
            id: rec.id,
            first: i,
            second: j,
            a: rec.geom.intervals[i],
            b: rec.geom.intervals[j],
        });
    }
    Ok(())
}

fn validate_gpoint(net: &Network, rec: &GPointRecord) -> Result<(), StoreError> {
    let g = &rec.geom;
    check_interval(net, rec.id, g.netid, &RouteInterval::new(g.rid, g.measure, g.measure, g.side))
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn gpoints(&self) -> impl Iterator<Item = &GPointRecord> {
        self.gpoints.values()
    }

    pub fn glines(&self) -> impl Iterator<Item = &GLineRecord> {
        self.glines.values()
    }

    pub fn gpoint(&self, id: i64) -> Option<&GPointRecord> {
        self.gpoints.get(&id)
    }

    pub fn gline(&self, id: i64) -> Option<&GLineRecord> {
        self.glines.get(&id)
    }

    /// First record with the given name, by id.
    pub fn gpoint_named(&self, name: &str) -> Result<&GPointRecord, StoreError> {
        self.gpoints
            .values()
            .find(|r| r.name == name)
            .ok_or_else(|| StoreError::UnknownName(name.to_string()))
    }

    pub fn gline_named(&self, name: &str) -> Result<&GLineRecord, StoreError> {
        self.glines
            .values()
            .find(|r| r.name == name)
            .ok_or_else(|| StoreError::UnknownName(name.to_string()))
    }

    pub fn moids(&self) -> impl Iterator<Item = MoId> + '_ {
        self.mgpoints.keys().copied()
    }

    pub fn object_count(&self) -> usize {
        self.mgpoints.len()
    }

    pub fn unit_count(&self) -> usize {
        self.mgpoints.values().map(Vec::len).sum()
    }

    pub fn units(&self, moid: MoId) -> &[MGPointUnit] {
        self.mgpoints.get(&moid).map_or(&[], Vec::as_slice)
    }

    pub fn ugpoint(&self, moid: MoId) -> Option<UGPoint> {
        self.mgpoints
            .get(&moid)
            .map(|units| UGPoint::new(moid, units.clone()).unwrap_or_else(|_| UGPoint::empty(moid)))
    }

    /// Stores a named position; an id of 0 picks the next free id.
    pub fn insert_gpoint(&mut self, net: &Network, mut rec: GPointRecord) -> Result<i64, StoreError> {
        rec.id = next_id(&self.gpoints, rec.id)?;
        validate_gpoint(net, &rec)?;
        let id = rec.id;
        self.gpoints.insert(id, rec);
        Ok(id)
    }

    /// Stores a named line after checking that its intervals are
    /// quasi-disjoint; an id of 0 picks the next free id.
    pub fn insert_gline(&mut self, net: &Network, mut rec: GLineRecord) -> Result<i64, StoreError> {
        rec.id = next_id(&self.glines, rec.id)?;
        validate_gline(net, &rec)?;
        let id = rec.id;
        self.glines.insert(id, rec);
        Ok(id)
    }

    pub fn update_gline(&mut self, net: &Network, id: i64, geom: GLine) -> Result<(), StoreError> {
        let old = self.glines.get(&id).ok_or(StoreError::UnknownRecord(id))?;
        let rec = GLineRecord {
            id,
            geom,
            name: old.name.clone(),
        };
        validate_gline(net, &rec)?;
        self.glines.insert(id, rec);
        Ok(())
    }

    /// Appends units after the existing ones of their objects. Either all
    /// units are accepted or none.
    pub fn append_units(&mut self, net: &Network, units: &[MGPointUnit]) -> Result<usize, StoreError> {
        let mut by_moid: BTreeMap<MoId, Vec<MGPointUnit>> = BTreeMap::new();
        for u in units {
            by_moid.entry(u.moid).or_default().push(*u);
        }
        for (moid, batch) in by_moid.iter_mut() {
            batch.sort_by_key(|u| u.t1);
            for u in batch.iter() {
                let route = net.route(u.rid).map_err(|_| MotionError::UnknownRoute(u.rid))?;
                u.check(route.length, net.tol.measure)?;
            }
            let mut prev = self.mgpoints.get(moid).and_then(|v| v.last());
            for u in batch.iter() {
                if let Some(p) = prev {
                    crate::motion::check_boundary(net, p, u)?;
                }
                prev = Some(u);
            }
        }
        for (moid, batch) in by_moid {
            self.mgpoints.entry(moid).or_default().extend(batch);
        }
        Ok(units.len())
    }

    pub fn clear_mgpoints(&mut self) {
        self.mgpoints.clear();
    }

    /// Re-checks every stored record; returns all problems found.
    pub fn audit(&self, net: &Network) -> Vec<StoreError> {
        let mut problems = Vec::new();
        for rec in self.gpoints.values() {
            if let Err(e) = validate_gpoint(net, rec) {
                problems.push(e);
            }
        }
        for rec in self.glines.values() {
            if let Err(e) = validate_gline(net, rec) {
                problems.push(e);
            }
        }
        for (&moid, units) in &self.mgpoints {
            match UGPoint::new(moid, units.clone()) {
                Ok(u) => {
                    if let Err(e) = u.validate(net) {
                        problems.push(e.into());
                    }
                }
                Err(e) => problems.push(e.into()),
            }
        }
        problems
    }

    /// Writes the three store files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(GPOINTS_FILE)).map_err(csv_io)?;
        w.write_record(GPOINTS_HEADER).map_err(csv_io)?;
        for r in self.gpoints.values() {
            let g = &r.geom;
            w.write_record([
                r.id.to_string(),
                g.netid.to_string(),
                g.rid.to_string(),
                g.measure.to_string(),
                g.side.to_string(),
                r.name.clone(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join(GLINES_FILE)).map_err(csv_io)?;
        w.write_record(GLINES_HEADER).map_err(csv_io)?;
        for r in self.glines.values() {
            for iv in &r.geom.intervals {
                w.write_record([
                    r.id.to_string(),
                    r.geom.glid.to_string(),
                    r.geom.netid.to_string(),
                    iv.rid.to_string(),
                    iv.pos1.to_string(),
                    iv.pos2.to_string(),
                    iv.side.to_string(),
                    r.name.clone(),
                ])
                .map_err(csv_io)?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join(MGPOINTS_FILE)).map_err(csv_io)?;
        w.write_record(MGPOINTS_HEADER).map_err(csv_io)?;
        for u in self.mgpoints.values().flatten() {
            w.write_record(unit_row(u)).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the store files from `dir`; missing files count as empty.
    /// Records are parsed but not validated against a network, see
    /// [`Store::audit`].
    pub fn load(dir: &Path) -> Result<Store, StoreError> {
        let mut store = Store::new();
        if let Some(rows) = open(dir, GPOINTS_FILE, &GPOINTS_HEADER)? {
            for row in rows {
                let row = row?;
                let id: i64 = row.parse(0, "id")?;
                let geom = GPoint::new(
                    row.parse(1, "netid")?,
                    row.parse(2, "rid")?,
                    row.float(3, "measure")?,
                    row.parse(4, "side")?,
                );
                let rec = GPointRecord {
                    id,
                    geom,
                    name: row.text(5).to_string(),
                };
                if store.gpoints.insert(id, rec).is_some() {
                    return Err(row.error(format!("duplicate id {id}")).into());
                }
            }
        }
        if let Some(rows) = open(dir, GLINES_FILE, &GLINES_HEADER)? {
            let mut last_id = None;
            for row in rows {
                let row = row?;
                let id: i64 = row.parse(0, "id")?;
                let glid: i64 = row.parse(1, "glid")?;
                let netid: NetId = row.parse(2, "netid")?;
                let iv = RouteInterval::new(
                    row.parse::<RouteId>(3, "rid")?,
                    row.float(4, "pos1")?,
                    row.float(5, "pos2")?,
                    row.parse(6, "side")?,
                );
                match store.glines.get_mut(&id) {
                    Some(rec) if last_id == Some(id) => rec.geom.intervals.push(iv),
                    Some(_) => return Err(row.error(format!("rows of gline {id} are not contiguous")).into()),
                    None => {
                        store.glines.insert(
                            id,
                            GLineRecord {
                                id,
                                geom: GLine::new(netid, glid, vec![iv]),
                                name: row.text(7).to_string(),
                            },
                        );
                    }
                }
                last_id = Some(id);
            }
        }
        if let Some(rows) = open(dir, MGPOINTS_FILE, &MGPOINTS_HEADER)? {
            for row in rows {
                let row = row?;
                let time = |i: usize, what: &str| {
                    Timestamp::parse_iso(row.text(i)).map_err(|_| row.error(format!("bad {what}: {:?}", row.text(i))))
                };
                let u = MGPointUnit {
                    moid: row.parse(0, "moid")?,
                    netid: row.parse(1, "netid")?,
                    rid: row.parse(2, "rid")?,
                    side: row.parse(3, "side")?,
                    t1: time(4, "t1")?,
                    t2: time(5, "t2")?,
                    pos1: row.float(6, "pos1")?,
                    pos2: row.float(7, "pos2")?,
                    v0: row.float(8, "v0")?,
                    a: row.float(9, "a")?,
                };
                if u.t1 >= u.t2 {
                    return Err(row.error(format!("t1 {} is not before t2 {}", u.t1, u.t2)).into());
                }
                store.mgpoints.entry(u.moid).or_default().push(u);
            }
            for units in store.mgpoints.values_mut() {
                units.sort_by_key(|u| u.t1);
            }
        }
        Ok(store)
    }
}

fn next_id<T>(map: &BTreeMap<i64, T>, requested: i64) -> Result<i64, StoreError> {
    if requested == 0 {
        return Ok(map.keys().next_back().map_or(1, |k| k + 1));
    }
    if map.contains_key(&requested) {
        return Err(StoreError::DuplicateId(requested));
    }
    Ok(requested)
}

fn open(dir: &Path, file: &str, header: &[&str]) -> Result<Option<Rows>, StoreError> {
    match fs::File::open(dir.join(file)) {
        Ok(f) => Ok(Some(Rows::open(f, file, header)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn unit_row(u: &MGPointUnit) -> [String; 10] {
    [
        u.moid.to_string(),
        u.netid.to_string(),
        u.rid.to_string(),
        u.side.to_string(),
        u.t1.to_iso(),
        u.t2.to_iso(),
        u.pos1.to_string(),
        u.pos2.to_string(),
        u.v0.to_string(),
        u.a.to_string(),
    ]
}

/// Writes units in the `mgpoints.csv` layout, in the given order.
pub fn write_units(w: impl std::io::Write, units: &[MGPointUnit]) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(MGPOINTS_HEADER).map_err(csv_io)?;
    for u in units {
        w.write_record(unit_row(u)).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
