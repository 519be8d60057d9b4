//! Synthetic network-constrained trips.
//!
//! Origin and destination nodes are drawn uniformly from a seeded stream,
//! connected by the turn-aware shortest path, and driven along it with a
//! piecewise constant acceleration profile: accelerate from rest, cruise,
//! slow down before junctions (or stop at a red light and wait), and stop
//! exactly at the destination. Every trip draws its red lights from its
//! own stream, so trips do not influence each other.
//!
//! Unit boundaries fall on whole milliseconds. Each constant-acceleration
//! phase of the ideal profile is therefore stretched to a whole number of
//! milliseconds and split in two halves whose accelerations are chosen so
//! that the phase still covers exactly its distance and ends at exactly its
//! end speed.

use std::io::Write;

use log::{debug, warn};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::motion::{GLine, GPoint, MGPointUnit, MoId, Timestamp};
use crate::network::io::csv_io;
use crate::network::{Network, NodeId, RouteId};
use crate::routing::{self, RoutingError};
use crate::store::{Store, StoreError};

pub const FIRST_MOID: MoId = 1000;
pub const MAX_DRAWS: usize = 100;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("network needs at least two nodes")]
    TooFewNodes,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("trip {moid}: {source}")]
    Routing { moid: MoId, source: RoutingError },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub periods: u32,
    /// Seconds between the start times of consecutive batches.
    pub interval: f64,
    pub per_period: u32,
    pub seed: u64,
    /// m/s
    pub cruise_speed: f64,
    /// m/s²
    pub accel: f64,
    /// m/s², a positive magnitude
    pub decel: f64,
    pub red_prob: f64,
    /// seconds
    pub red_wait: f64,
    /// seconds between samples
    pub sample_step: f64,
    pub start_time: Timestamp,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            periods: 1,
            interval: 25.0,
            per_period: 1,
            seed: 0,
            cruise_speed: 14.0,
            accel: 2.0,
            decel: 3.0,
            red_prob: 0.3,
            red_wait: 20.0,
            sample_step: 2.0,
            start_time: Timestamp::parse_iso("2011-01-21T00:00:00.000Z").expect("valid literal"),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidParams(m.to_string()));
        if self.periods < 1 || self.per_period < 1 {
            return bad("periods and per-period must be at least 1");
        }
        let positive = [
            ("interval", self.interval),
            ("cruise speed", self.cruise_speed),
            ("accel", self.accel),
            ("decel", self.decel),
            ("sample step", self.sample_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.red_prob) {
            return bad("red-prob must lie in [0, 1]");
        }
        if !(self.red_wait.is_finite() && self.red_wait >= 0.0) {
            return bad("red-wait must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub moid: MoId,
    pub start_node: NodeId,
    pub end_node: NodeId,
    pub start_time: Timestamp,
    pub path: GLine,
}

/// A position sampled from the motion profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub moid: MoId,
    pub t: Timestamp,
    pub rid: RouteId,
    pub measure: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSummary {
    pub objects: usize,
    pub units: usize,
    pub samples: Vec<Sample>,
}

fn node_position(net: &Network, node: NodeId) -> Option<GPoint> {
    let inc = net.incidences(node).iter().min_by_key(|i| i.rid)?;
    Some(GPoint::new(net.net_id, inc.rid, inc.measure, 0))
}

fn seconds_to_ms(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

/// Draws `periods × per_period` trips between uniformly chosen node pairs.
pub fn plan_trips(net: &Network, params: &GenParams) -> Result<Vec<Trip>, GenError> {
    params.validate()?;
    let nodes: Vec<NodeId> = net.nodes().map(|n| n.id).collect();
    if nodes.len() < 2 {
        return Err(GenError::TooFewNodes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trips = Vec::new();
    let mut moid = FIRST_MOID;
    for k in 0..params.periods {
        let start_time = params
            .start_time
            .plus_millis(seconds_to_ms(params.interval) * i64::from(k));
        for _ in 0..params.per_period {
            let mut planned = None;
            for _ in 0..MAX_DRAWS {
                let s = nodes[rng.random_range(0..nodes.len())];
                let e = nodes[rng.random_range(0..nodes.len())];
                if s == e {
                    continue;
                }
                let (Some(from), Some(to)) = (node_position(net, s), node_position(net, e)) else {
                    continue;
                };
                match routing::shortest_path(net, &from, &to) {
                    Ok(path) if !path.is_empty() => {
                        planned = Some((s, e, path));
                        break;
                    }
                    Ok(_) | Err(RoutingError::NoPath) => continue,
                    Err(source) => return Err(GenError::Routing { moid, source }),
                }
            }
            match planned {
                Some((start_node, end_node, path)) => {
                    trips.push(Trip {
                        moid,
                        start_node,
                        end_node,
                        start_time,
                        path: GLine { glid: moid, ..path },
                    });
                    moid += 1;
                }
                None => warn!("no routable node pair found in {MAX_DRAWS} draws; trip skipped"),
            }
        }
    }
    Ok(trips)
}

/// One traversal along a single route direction.
#[derive(Debug, Clone, Copy)]
struct Leg {
    rid: RouteId,
    from: f64,
    to: f64,
    sign: f64,
    /// Path arc length at the leg's start and end.
    s0: f64,
    s1: f64,
}

impl Leg {
    fn measure(&self, s: f64) -> f64 {
        if s == self.s1 {
            self.to
        } else if s == self.s0 {
            self.from
        } else {
            self.from + self.sign * (s - self.s0)
        }
    }
}

/// An arc-length motion piece: constant acceleration from `t0` to `t1`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    leg: usize,
    t0: i64,
    t1: i64,
    s0: f64,
    s1: f64,
    v0: f64,
    a: f64,
}

impl Piece {
    fn position(&self, t: i64) -> f64 {
        if t == self.t1 {
            return self.s1;
        }
        let tau = (t - self.t0) as f64 / 1000.0;
        self.s0 + self.v0 * tau + 0.5 * self.a * tau * tau
    }
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Move { v_s: f64, v_e: f64, d: f64 },
    Wait { ms: i64 },
}

/// Phases covering distance `d` from speed `v_a`, aiming to arrive at
/// `v_b`. Returns the phases and the speed actually reached.
fn plan_segment(d: f64, v_a: f64, v_b: f64, p: &GenParams) -> (Vec<(f64, f64, f64)>, f64) {
    let (acc, dec, c) = (p.accel, p.decel, p.cruise_speed);
    if d <= 0.0 {
        return (Vec::new(), v_a);
    }
    if v_b > v_a && d < (v_b * v_b - v_a * v_a) / (2.0 * acc) {
        let v = (v_a * v_a + 2.0 * acc * d).sqrt();
        return (vec![(v_a, v, d)], v);
    }
    if v_a > v_b && d <= (v_a * v_a - v_b * v_b) / (2.0 * dec) {
        return (vec![(v_a, v_b, d)], v_b);
    }
    let d_acc = (c * c - v_a * v_a) / (2.0 * acc);
    let d_dec = (c * c - v_b * v_b) / (2.0 * dec);
    let mut out = Vec::new();
    if d_acc + d_dec <= d {
        out.push((v_a, c, d_acc));
        out.push((c, c, d - d_acc - d_dec));
        out.push((c, v_b, d_dec));
    } else {
        let peak = ((2.0 * d + v_a * v_a / acc + v_b * v_b / dec) / (1.0 / acc + 1.0 / dec))
            .sqrt()
            .max(v_a.max(v_b));
        let d1 = ((peak * peak - v_a * v_a) / (2.0 * acc)).clamp(0.0, d);
        out.push((v_a, peak, d1));
        out.push((peak, v_b, d - d1));
    }
    // fold slivers into a neighbour so no phase is shorter than a few ms
    let mut merged: Vec<(f64, f64, f64)> = Vec::new();
    for ph in out.into_iter().filter(|ph| ph.2 > 1e-9) {
        let duration = 2.0 * ph.2 / (ph.0 + ph.1);
        match merged.last_mut() {
            Some(last) if duration < 0.004 => {
                last.1 = ph.1;
                last.2 += ph.2;
            }
            _ => merged.push(ph),
        }
    }
    if merged.len() > 1 {
        let first = merged[0];
        if 2.0 * first.2 / (first.0 + first.1) < 0.004 {
            merged.remove(0);
            merged[0].0 = first.0;
            merged[0].2 += first.2;
        }
    }
    (merged, v_b)
}

/// Turns a phase into one or two pieces with integer-millisecond bounds.
fn quantize(v_s: f64, v_e: f64, d: f64, leg: usize, t0: i64, s0: f64, s1: f64, out: &mut Vec<Piece>) -> i64 {
    let exact_ms = 2000.0 * d / (v_s + v_e);
    if exact_ms.fract() == 0.0 && exact_ms >= 1.0 {
        let ms = exact_ms as i64;
        let tau = ms as f64 / 1000.0;
        out.push(Piece {
            leg,
            t0,
            t1: t0 + ms,
            s0,
            s1,
            v0: v_s,
            a: (v_e - v_s) / tau,
        });
        return t0 + ms;
    }
    let total = (exact_ms.ceil() as i64).max(2);
    let (m1, m2) = (total / 2, total - total / 2);
    let (d1s, d2s, ts) = (m1 as f64 / 1000.0, m2 as f64 / 1000.0, total as f64 / 1000.0);
    let v1 = (2.0 * d - v_s * d1s - v_e * d2s) / ts;
    let (a1, a2) = ((v1 - v_s) / d1s, (v_e - v1) / d2s);
    if (a1 - a2).abs() < 1e-12 {
        out.push(Piece {
            leg,
            t0,
            t1: t0 + total,
            s0,
            s1,
            v0: v_s,
            a: a1,
        });
    } else {
        let s_mid = s0 + v_s * d1s + 0.5 * a1 * d1s * d1s;
        out.push(Piece {
            leg,
            t0,
            t1: t0 + m1,
            s0,
            s1: s_mid,
            v0: v_s,
            a: a1,
        });
        out.push(Piece {
            leg,
            t0: t0 + m1,
            t1: t0 + total,
            s0: s_mid,
            s1,
            v0: v1,
            a: a2,
        });
    }
    t0 + total
}

struct Simulation {
    legs: Vec<Leg>,
    pieces: Vec<Piece>,
}

fn legs_of(path: &GLine) -> Vec<Leg> {
    let mut legs = Vec::new();
    let mut s = 0.0;
    for iv in &path.intervals {
        let len = iv.span();
        legs.push(Leg {
            rid: iv.rid,
            from: iv.pos1,
            to: iv.pos2,
            sign: if iv.pos2 >= iv.pos1 { 1.0 } else { -1.0 },
            s0: s,
            s1: s + len,
        });
        s += len;
    }
    legs
}

/// Arc positions of junction events and whether each forces a stop.
fn events(net: &Network, legs: &[Leg]) -> Vec<(f64, bool)> {
    let eps = net.tol.measure;
    let mut out: Vec<(f64, bool)> = Vec::new();
    for (i, leg) in legs.iter().enumerate() {
        if let Ok(route) = net.route(leg.rid) {
            let (lo, hi) = (leg.from.min(leg.to), leg.from.max(leg.to));
            let mut inner: Vec<f64> = route
                .stops
                .iter()
                .filter(|&&(m, node)| m > lo + eps && m < hi - eps && net.junctions_at(node).next().is_some())
                .map(|&(m, _)| leg.s0 + (m - leg.from).abs())
                .collect();
            inner.sort_by(f64::total_cmp);
            out.extend(inner.into_iter().map(|s| (s, false)));
        }
        if let Some(next) = legs.get(i + 1) {
            let reversal = next.rid == leg.rid && next.sign != leg.sign;
            out.push((leg.s1, reversal));
        }
    }
    out
}

/// Drives one trip. `draw` supplies one uniform number per junction on
/// the way; a draw below `red_prob` means a red light.
fn simulate(net: &Network, trip: &Trip, params: &GenParams, mut draw: impl FnMut() -> f64) -> Simulation {
    let legs = legs_of(&trip.path);
    let total = legs.last().map_or(0.0, |l| l.s1);
    let leg_at = |s: f64| legs.iter().position(|l| s < l.s1).unwrap_or(legs.len() - 1);
    let mut phases: Vec<(usize, f64, f64, Phase)> = Vec::new();
    let wait_ms = seconds_to_ms(params.red_wait);
    let mut targets: Vec<(f64, f64, bool)> = events(net, &legs)
        .into_iter()
        .map(|(s, forced)| {
            let red = draw() < params.red_prob;
            let v = if red || forced { 0.0 } else { params.cruise_speed / 2.0 };
            (s, v, red)
        })
        .collect();
    targets.push((total, 0.0, false));
    let (mut s, mut v) = (0.0, 0.0);
    for (s_b, v_b, red) in targets {
        let leg = leg_at(0.5 * (s + s_b));
        let (segment, reached) = plan_segment(s_b - s, v, v_b, params);
        let mut at = s;
        let n = segment.len();
        for (k, (v_s, v_e, d)) in segment.into_iter().enumerate() {
            let end = if k + 1 == n { s_b } else { at + d };
            phases.push((leg, at, end, Phase::Move { v_s, v_e, d: end - at }));
            at = end;
        }
        if red && wait_ms > 0 {
            phases.push((leg, s_b, s_b, Phase::Wait { ms: wait_ms }));
        }
        s = s_b;
        v = reached;
    }
    let mut pieces = Vec::new();
    let mut t = trip.start_time.millis();
    for (leg, s0, s1, phase) in phases {
        t = match phase {
            Phase::Move { v_s, v_e, d } => {
                if v_s + v_e <= 0.0 || d <= 0.0 {
                    continue;
                }
                quantize(v_s, v_e, d, leg, t, s0, s1, &mut pieces)
            }
            Phase::Wait { ms } => {
                pieces.push(Piece {
                    leg,
                    t0: t,
                    t1: t + ms,
                    s0,
                    s1,
                    v0: 0.0,
                    a: 0.0,
                });
                t + ms
            }
        };
    }
    Simulation { legs, pieces }
}

impl Simulation {
    fn units(&self, net: &Network, moid: MoId) -> Vec<MGPointUnit> {
        self.pieces
            .iter()
            .map(|p| {
                let leg = &self.legs[p.leg];
                MGPointUnit {
                    moid,
                    netid: net.net_id,
                    rid: leg.rid,
                    side: 0,
                    t1: Timestamp(p.t0),
                    t2: Timestamp(p.t1),
                    pos1: leg.measure(p.s0),
                    pos2: leg.measure(p.s1),
                    v0: leg.sign * p.v0,
                    a: leg.sign * p.a,
                }
            })
            .collect()
    }

    fn samples(&self, net: &Network, moid: MoId, step_ms: i64) -> Vec<Sample> {
        let (Some(first), Some(last)) = (self.pieces.first(), self.pieces.last()) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut idx = 0;
        let mut t = first.t0;
        while t <= last.t1 {
            while idx + 1 < self.pieces.len() && t >= self.pieces[idx].t1 {
                idx += 1;
            }
            let p = &self.pieces[idx];
            let leg = &self.legs[p.leg];
            let measure = leg.measure(p.position(t));
            let point = net
                .route(leg.rid)
                .ok()
                .and_then(|r| r.curve.locate_point(measure).ok());
            out.push(Sample {
                moid,
                t: Timestamp(t),
                rid: leg.rid,
                measure,
                x: point.map_or(f64::NAN, |q| q.x),
                y: point.map_or(f64::NAN, |q| q.y),
            });
            t += step_ms;
        }
        out
    }
}

fn trip_rng(params: &GenParams, moid: MoId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(moid as u64);
    rng
}

/// Units of one trip, with red lights drawn from the trip's own stream.
pub fn simulate_trip(net: &Network, trip: &Trip, params: &GenParams) -> Vec<MGPointUnit> {
    let mut rng = trip_rng(params, trip.moid);
    simulate(net, trip, params, || rng.random::<f64>()).units(net, trip.moid)
}

/// Like [`simulate_trip`] but with every red-light decision supplied by
/// the caller, in path order.
pub fn simulate_trip_with(net: &Network, trip: &Trip, params: &GenParams, reds: &[bool]) -> Vec<MGPointUnit> {
    let mut it = reds.iter().copied();
    let p = params.red_prob;
    simulate(net, trip, params, move || if it.next().unwrap_or(false) && p > 0.0 { -1.0 } else { 2.0 })
        .units(net, trip.moid)
}

/// Plans and drives all trips, appends their units to `store`, and samples
/// each trip every `sample_step` seconds.
pub fn generate(net: &Network, params: &GenParams, store: &mut Store) -> Result<GenSummary, GenError> {
    let trips = plan_trips(net, params)?;
    let step = seconds_to_ms(params.sample_step).max(1);
    let mut summary = GenSummary {
        objects: 0,
        units: 0,
        samples: Vec::new(),
    };
    for trip in &trips {
        let mut rng = trip_rng(params, trip.moid);
        let sim = simulate(net, trip, params, || rng.random::<f64>());
        let units = sim.units(net, trip.moid);
        debug!("trip {} has {} units", trip.moid, units.len());
        summary.units += store.append_units(net, &units)?;
        summary.objects += 1;
        summary.samples.extend(sim.samples(net, trip.moid, step));
    }
    Ok(summary)
}

pub fn write_samples(w: impl Write, samples: &[Sample]) -> Result<(), GenError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["moid", "t", "rid", "measure", "x", "y"]).map_err(csv_io).map_err(StoreError::from)?;
    for s in samples {
        w.write_record([
            s.moid.to_string(),
            s.t.to_iso(),
            s.rid.to_string(),
            s.measure.to_string(),
            s.x.to_string(),
            s.y.to_string(),
        ])
        .map_err(csv_io)
        .map_err(StoreError::from)?;
    }
    w.flush()?;
    Ok(())
}
