//! The moving-point algebra: conversions between network and planar space,
//! temporal restriction, projection onto the network, and aggregates.

use crate::geometry::{azimuth, MeasuredPolyline, PlanarPoint};
use crate::network::{Network, RouteId};
use crate::routing;

use super::unit::{MGPointUnit, UGPoint};
use super::{GLine, GPoint, Intime, MotionError, Period, Periods, RouteInterval, Timestamp, EPS_ACCEL};

/// Search radius of [`in_network`] when none is given, in meters.
pub const DEFAULT_MAX_DIST: f64 = 100.0;

pub fn in_space(net: &Network, p: &GPoint) -> Result<PlanarPoint, MotionError> {
    let route = net.route(p.rid).map_err(|_| MotionError::UnknownRoute(p.rid))?;
    Ok(route.curve.locate_point(p.measure)?)
}

/// One sub-polyline per interval, oriented `pos1 -> pos2`.
pub fn in_space_line(net: &Network, g: &GLine) -> Result<Vec<MeasuredPolyline>, MotionError> {
    g.intervals
        .iter()
        .map(|iv| {
            let route = net.route(iv.rid).map_err(|_| MotionError::UnknownRoute(iv.rid))?;
            Ok(route.curve.sub_polyline(iv.pos1, iv.pos2)?)
        })
        .collect()
}

/// Nearest network position to a planar point; ties go to the smaller
/// route id.
pub fn in_network(net: &Network, q: &PlanarPoint, max_dist: f64) -> Result<GPoint, MotionError> {
    let mut best: Option<(f64, RouteId, f64, i8)> = None;
    for route in net.routes() {
        let pr = route.curve.project_point(q);
        if best.is_none_or(|(d, ..)| pr.distance < d) {
            best = Some((pr.distance, route.rid, pr.measure, pr.side));
        }
    }
    match best {
        Some((d, rid, m, side)) if d <= max_dist => Ok(GPoint::new(net.net_id, rid, m, side)),
        Some((d, ..)) => Err(MotionError::NoNearbyRoute {
            max_dist,
            nearest: d,
        }),
        None => Err(MotionError::NoNearbyRoute {
            max_dist,
            nearest: f64::INFINITY,
        }),
    }
}

pub fn deftime(u: &UGPoint) -> Periods {
    Periods::from_periods(
        u.units()
            .iter()
            .map(|x| Period {
                start: x.t1,
                end: x.t2,
            })
            .collect(),
    )
}

/// The traversed part of the network. Spans on the same route and side
/// whose closures touch are merged; a merged interval is oriented like the
/// earliest unit contributing to it.
pub fn trajectory(u: &UGPoint) -> GLine {
    let netid = u.units().first().map_or(0, |x| x.netid);
    // (rid, side, lo, hi, descending)
    let mut spans: Vec<(RouteId, i8, f64, f64, bool, usize)> = u
        .units()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let (lo, hi) = x.extent();
            let descending = x.pos2 < x.pos1 || (x.pos2 == x.pos1 && x.v0 < 0.0);
            (x.rid, x.side, lo, hi, descending, i)
        })
        .collect();
    spans.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
    let mut merged: Vec<(RouteId, i8, f64, f64, bool, usize)> = Vec::new();
    for s in spans {
        match merged.last_mut() {
            Some(m) if m.0 == s.0 && m.1 == s.1 && s.2 <= m.3 => {
                m.3 = m.3.max(s.3);
                if s.5 < m.5 {
                    m.4 = s.4;
                    m.5 = s.5;
                }
            }
            _ => merged.push(s),
        }
    }
    merged.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.total_cmp(&b.2)).then(a.1.cmp(&b.1)));
    GLine::new(
        netid,
        u.moid,
        merged
            .into_iter()
            .map(|(rid, side, lo, hi, desc, _)| {
                if desc {
                    RouteInterval::new(rid, hi, lo, side)
                } else {
                    RouteInterval::new(rid, lo, hi, side)
                }
            })
            .collect(),
    )
}

pub fn atinstant(u: &UGPoint, t: Timestamp) -> Result<Intime, MotionError> {
    let i = u.unit_index_at(t).ok_or(MotionError::UndefinedAtTime(t))?;
    let x = &u.units()[i];
    Ok(Intime {
        position: GPoint::new(x.netid, x.rid, x.measure_at(t), x.side),
        t,
    })
}

pub fn atperiods(u: &UGPoint, periods: &Periods) -> UGPoint {
    let mut out = Vec::new();
    for x in u.units() {
        for p in periods.as_slice() {
            if let Some((s, e)) = p.clip(x.t1, x.t2) {
                out.push(x.clip(s, e));
            }
        }
    }
    out.sort_by_key(|x| x.t1);
    UGPoint::from_sorted(u.moid, out)
}

/// Times at which `x(τ) = target` for `τ` in the open interval `(0, dur)`.
fn crossings(x: &MGPointUnit, target: f64, dur: f64, out: &mut Vec<f64>) {
    let (a, b, c) = (0.5 * x.a, x.v0, x.pos1 - target);
    let mut push = |tau: f64| {
        if tau.is_finite() && tau > 0.0 && tau < dur {
            out.push(tau);
        }
    };
    if x.a.abs() < EPS_ACCEL {
        if b != 0.0 {
            push(-c / b);
        }
        return;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    if q != 0.0 {
        push(q / a);
        push(c / q);
    } else {
        push(0.0_f64.max(-b / (2.0 * a)));
    }
}

/// Maximal sub-intervals `[τs, τe]` of the unit during which its measure
/// lies inside `[lo, hi]`.
fn inside_spans(x: &MGPointUnit, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let dur = x.seconds();
    let mut cuts = vec![0.0, dur];
    crossings(x, lo, dur, &mut cuts);
    crossings(x, hi, dur, &mut cuts);
    for c in cuts.iter_mut() {
        if *c < 1e-3 {
            *c = 0.0;
        } else if dur - *c < 1e-3 {
            *c = dur;
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let within = |tau: f64| {
        let m = x.measure_after(tau);
        m >= lo && m <= hi
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    if cuts.len() == 1 {
        if within(0.0) {
            out.push((0.0, dur));
        }
        return out;
    }
    for w in cuts.windows(2) {
        if within(0.5 * (w[0] + w[1])) {
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

/// Restricts `u` to the times when it lies inside `g`. Entry times round up
/// and exit times round down to whole milliseconds.
pub fn at(u: &UGPoint, g: &GLine) -> UGPoint {
    let mut out = Vec::new();
    for x in u.units() {
        let mut pieces: Vec<(i64, i64)> = Vec::new();
        for iv in g.intervals.iter().filter(|iv| iv.rid == x.rid && iv.side_matches(x.side)) {
            for (s, e) in inside_spans(x, iv.lo(), iv.hi()) {
                let s_ms = (s * 1000.0 - 1e-9).ceil() as i64;
                let e_ms = (e * 1000.0 + 1e-9).floor() as i64;
                let span = x.t2.millis() - x.t1.millis();
                let (s_ms, e_ms) = (s_ms.clamp(0, span), e_ms.clamp(0, span));
                if s_ms < e_ms {
                    pieces.push((s_ms, e_ms));
                }
            }
        }
        pieces.sort_unstable();
        let mut joined: Vec<(i64, i64)> = Vec::new();
        for p in pieces {
            match joined.last_mut() {
                Some(last) if p.0 <= last.1 => last.1 = last.1.max(p.1),
                _ => joined.push(p),
            }
        }
        for (s, e) in joined {
            out.push(x.clip(x.t1.plus_millis(s), x.t1.plus_millis(e)));
        }
    }
    UGPoint::from_sorted(u.moid, out)
}

pub fn inside(u: &UGPoint, g: &GLine, t: Timestamp, eps: f64) -> Result<bool, MotionError> {
    let p = atinstant(u, t)?.position;
    Ok(g.covers(p.rid, p.measure, p.side, eps))
}

/// Azimuth from the first object to the second at `t`, in degrees.
pub fn direction(net: &Network, u1: &UGPoint, u2: &UGPoint, t: Timestamp) -> Result<f64, MotionError> {
    let p1 = in_space(net, &atinstant(u1, t)?.position)?;
    let p2 = in_space(net, &atinstant(u2, t)?.position)?;
    azimuth(&p1, &p2).map_err(|_| MotionError::DegeneratePoints)
}

/// Shortest turn-legal path between the positions of two objects at `t`.
pub fn shortest_path_mo(net: &Network, u1: &UGPoint, u2: &UGPoint, t: Timestamp) -> Result<GLine, MotionError> {
    let p1 = atinstant(u1, t)?.position;
    let p2 = atinstant(u2, t)?.position;
    Ok(routing::shortest_path(net, &p1, &p2)?)
}

pub fn size(g: &GLine) -> f64 {
    g.size()
}

/// Seconds from the first unit's start to the last unit's end.
pub fn duration(u: &UGPoint) -> f64 {
    match (u.units().first(), u.units().last()) {
        (Some(f), Some(l)) => l.t2.seconds_since(f.t1),
        _ => 0.0,
    }
}

pub fn now(u: &UGPoint) -> Result<Timestamp, MotionError> {
    u.units().last().map(|x| x.t2).ok_or(MotionError::Empty)
}

pub fn current(u: &UGPoint) -> Result<GPoint, MotionError> {
    let last = u.units().last().ok_or(MotionError::Empty)?;
    Ok(GPoint::new(last.netid, last.rid, last.pos2, last.side))
}
