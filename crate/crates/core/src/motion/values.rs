//! Static network values: positions, route intervals and interval sets.

use std::fmt;

use crate::network::{NetId, RouteId};

use super::Timestamp;

/// A position on a route, optionally on one of its sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GPoint {
    pub netid: NetId,
    pub rid: RouteId,
    pub measure: f64,
    /// +1 right of the up direction, -1 left, 0 unspecified.
    pub side: i8,
}

impl GPoint {
    pub fn new(netid: NetId, rid: RouteId, measure: f64, side: i8) -> Self {
        GPoint {
            netid,
            rid,
            measure,
            side,
        }
    }
}

impl fmt::Display for GPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GPOINT({},{},{:.3},{})",
            self.netid, self.rid, self.measure, self.side
        )
    }
}

/// A direction-bearing stretch `pos1 -> pos2` of one route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteInterval {
    pub rid: RouteId,
    pub pos1: f64,
    pub pos2: f64,
    pub side: i8,
}

impl RouteInterval {
    pub fn new(rid: RouteId, pos1: f64, pos2: f64, side: i8) -> Self {
        RouteInterval {
            rid,
            pos1,
            pos2,
            side,
        }
    }

    pub fn lo(&self) -> f64 {
        self.pos1.min(self.pos2)
    }

    pub fn hi(&self) -> f64 {
        self.pos1.max(self.pos2)
    }

    pub fn span(&self) -> f64 {
        (self.pos2 - self.pos1).abs()
    }

    /// Closed containment of a measure, with tolerance.
    pub fn covers(&self, m: f64, eps: f64) -> bool {
        m >= self.lo() - eps && m <= self.hi() + eps
    }

    /// Side 0 on either operand matches anything.
    pub fn side_matches(&self, side: i8) -> bool {
        self.side == 0 || side == 0 || self.side == side
    }

    /// Whether the interiors of two intervals on the same route and side
    /// overlap by more than `eps`.
    pub fn interior_overlaps(&self, other: &RouteInterval, eps: f64) -> bool {
        self.rid == other.rid
            && self.side == other.side
            && self.hi().min(other.hi()) - self.lo().max(other.lo()) > eps
    }
}

/// A set of route intervals sharing a group id.
#[derive(Debug, Clone, PartialEq)]
pub struct GLine {
    pub netid: NetId,
    pub glid: i64,
    pub intervals: Vec<RouteInterval>,
}

impl GLine {
    pub fn new(netid: NetId, glid: i64, intervals: Vec<RouteInterval>) -> Self {
        GLine {
            netid,
            glid,
            intervals,
        }
    }

    pub fn empty(netid: NetId, glid: i64) -> Self {
        GLine::new(netid, glid, Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total length of all intervals.
    pub fn size(&self) -> f64 {
        self.intervals.iter().map(RouteInterval::span).sum()
    }

    /// First pair of intervals whose interiors overlap, if any.
    pub fn quasi_disjoint_violation(&self, eps: f64) -> Option<(usize, usize)> {
        for i in 0..self.intervals.len() {
            for j in i + 1..self.intervals.len() {
                if self.intervals[i].interior_overlaps(&self.intervals[j], eps) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_quasi_disjoint(&self, eps: f64) -> bool {
        self.quasi_disjoint_violation(eps).is_none()
    }

    /// Whether some interval with a matching side covers `(rid, m)`.
    pub fn covers(&self, rid: RouteId, m: f64, side: i8, eps: f64) -> bool {
        self.intervals
            .iter()
            .any(|iv| iv.rid == rid && iv.side_matches(side) && iv.covers(m, eps))
    }
}

impl fmt::Display for GLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("GLINE()");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "GLINE({},{},{:.3},{:.3},{},{})",
                self.netid, iv.rid, iv.pos1, iv.pos2, iv.side, self.glid
            )?;
        }
        Ok(())
    }
}

/// A position paired with the instant it was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intime {
    pub position: GPoint,
    pub t: Timestamp,
}

impl Intime {
    pub fn val(&self) -> GPoint {
        self.position
    }

    pub fn inst(&self) -> Timestamp {
        self.t
    }
}

impl fmt::Display for Intime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "INTIME({},{})", self.position, self.t)
    }
}
