use std::fmt;

use crate::network::{NetId, Network, RouteId};

use super::{MotionError, Timestamp};

pub type MoId = i64;

/// One temporal slice of a moving point with constant acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MGPointUnit {
    pub moid: MoId,
    pub netid: NetId,
    pub rid: RouteId,
    pub side: i8,
    pub t1: Timestamp,
    pub t2: Timestamp,
    /// Measure at `t1`.
    pub pos1: f64,
    /// Measure at `t2`.
    pub pos2: f64,
    /// Signed velocity at `t1`, m/s; positive means increasing measure.
    pub v0: f64,
    /// Signed acceleration, m/s².
    pub a: f64,
}

impl MGPointUnit {
    /// Duration in seconds.
    pub fn seconds(&self) -> f64 {
        self.t2.seconds_since(self.t1)
    }

    /// Measure `tau` seconds after `t1`.
    pub fn measure_after(&self, tau: f64) -> f64 {
        self.pos1 + self.v0 * tau + 0.5 * self.a * tau * tau
    }

    pub fn velocity_after(&self, tau: f64) -> f64 {
        self.v0 + self.a * tau
    }

    pub fn measure_at(&self, t: Timestamp) -> f64 {
        if t == self.t2 {
            return self.pos2;
        }
        self.measure_after(t.seconds_since(self.t1))
    }

    /// Lowest and highest measure reached during the unit.
    pub fn extent(&self) -> (f64, f64) {
        let mut lo = self.pos1.min(self.pos2);
        let mut hi = self.pos1.max(self.pos2);
        if self.a != 0.0 {
            let t_star = -self.v0 / self.a;
            if t_star > 0.0 && t_star < self.seconds() {
                let m = self.measure_after(t_star);
                lo = lo.min(m);
                hi = hi.max(m);
            }
        }
        (lo, hi)
    }

    /// The part of this unit inside `[s, e)`, re-based at `s`. Boundary
    /// values that coincide with the unit's own are kept verbatim.
    pub fn clip(&self, s: Timestamp, e: Timestamp) -> MGPointUnit {
        debug_assert!(self.t1 <= s && s < e && e <= self.t2);
        let tau_s = s.seconds_since(self.t1);
        let (pos1, v0) = if s == self.t1 {
            (self.pos1, self.v0)
        } else {
            (self.measure_after(tau_s), self.velocity_after(tau_s))
        };
        let pos2 = if e == self.t2 {
            self.pos2
        } else {
            self.measure_after(e.seconds_since(self.t1))
        };
        MGPointUnit {
            t1: s,
            t2: e,
            pos1,
            pos2,
            v0,
            ..*self
        }
    }

    /// Checks timing, the kinematic consistency of the end measure, and that
    /// the measure stays on a route of the given length.
    pub fn check(&self, route_length: f64, eps: f64) -> Result<(), MotionError> {
        let fail = |reason: String| {
            Err(MotionError::UnitInvariant {
                moid: self.moid,
                reason,
            })
        };
        if self.t1 >= self.t2 {
            return fail(format!("t1 {} is not before t2 {}", self.t1, self.t2));
        }
        if ![self.pos1, self.pos2, self.v0, self.a].iter().all(|v| v.is_finite()) {
            return fail("non-finite value".into());
        }
        if !(-1..=1).contains(&self.side) {
            return fail(format!("side {} not in -1..=1", self.side));
        }
        let predicted = self.measure_after(self.seconds());
        let tol = eps * route_length.max(1.0);
        if (predicted - self.pos2).abs() > tol {
            return fail(format!(
                "pos2 {} differs from the kinematic prediction {predicted}",
                self.pos2
            ));
        }
        let (lo, hi) = self.extent();
        if lo < -tol || hi > route_length + tol {
            return fail(format!("measure leaves [0, {route_length}] (range {lo}..{hi})"));
        }
        Ok(())
    }
}

impl fmt::Display for MGPointUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MGPOINT({},{},{},{},{},{},{:.3},{:.3},{:.4},{:.4})",
            self.moid, self.netid, self.rid, self.side, self.t1, self.t2, self.pos1, self.pos2, self.v0, self.a
        )
    }
}

/// All units of one moving object, ordered by time.
#[derive(Debug, Clone, PartialEq)]
pub struct UGPoint {
    pub moid: MoId,
    units: Vec<MGPointUnit>,
}

impl UGPoint {
    pub fn empty(moid: MoId) -> Self {
        UGPoint {
            moid,
            units: Vec::new(),
        }
    }

    /// Sorts the units and checks they belong to `moid` and do not overlap
    /// in time. Kinematic and network checks are in [`UGPoint::validate`].
    pub fn new(moid: MoId, mut units: Vec<MGPointUnit>) -> Result<Self, MotionError> {
        units.sort_by_key(|u| u.t1);
        for u in &units {
            if u.moid != moid {
                return Err(MotionError::UnitInvariant {
                    moid,
                    reason: format!("unit belongs to moid {}", u.moid),
                });
            }
            if u.t1 >= u.t2 {
                return Err(MotionError::UnitInvariant {
                    moid,
                    reason: format!("t1 {} is not before t2 {}", u.t1, u.t2),
                });
            }
        }
        for w in units.windows(2) {
            if w[1].t1 < w[0].t2 {
                return Err(MotionError::TemporalOverlap {
                    moid,
                    t1: w[1].t1,
                    prev_t2: w[0].t2,
                });
            }
        }
        Ok(UGPoint { moid, units })
    }

    pub(crate) fn from_sorted(moid: MoId, units: Vec<MGPointUnit>) -> Self {
        UGPoint { moid, units }
    }

    pub fn units(&self) -> &[MGPointUnit] {
        &self.units
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    /// Index of the unit defined at `t`: units are half-open except the
    /// last one, which also covers its end instant.
    pub fn unit_index_at(&self, t: Timestamp) -> Option<usize> {
        let i = self.units.partition_point(|u| u.t1 <= t);
        let i = i.checked_sub(1)?;
        let u = &self.units[i];
        (t < u.t2 || (t == u.t2 && i + 1 == self.units.len())).then_some(i)
    }

    /// Full check against the network: every unit's invariant, time order,
    /// and position continuity across touching units.
    pub fn validate(&self, net: &Network) -> Result<(), MotionError> {
        for u in &self.units {
            let route = net.route(u.rid).map_err(|_| MotionError::UnknownRoute(u.rid))?;
            u.check(route.length, net.tol.measure)?;
        }
        for w in self.units.windows(2) {
            check_boundary(net, &w[0], &w[1])?;
        }
        Ok(())
    }
}

/// Ordering and continuity between two consecutive units of one object.
pub(crate) fn check_boundary(
    net: &Network,
    prev: &MGPointUnit,
    next: &MGPointUnit,
) -> Result<(), MotionError> {
    if next.t1 < prev.t2 {
        return Err(MotionError::TemporalOverlap {
            moid: next.moid,
            t1: next.t1,
            prev_t2: prev.t2,
        });
    }
    if next.t1 > prev.t2 {
        return Ok(());
    }
    let jump = |reason: String| {
        Err(MotionError::ContinuityViolation {
            moid: next.moid,
            at: next.t1,
            reason,
        })
    };
    if prev.rid == next.rid {
        let route_len = net.route(prev.rid).map(|r| r.length).unwrap_or(1.0);
        if (prev.pos2 - next.pos1).abs() > net.tol.measure * route_len.max(1.0) {
            return jump(format!("measure {} then {}", prev.pos2, next.pos1));
        }
        return Ok(());
    }
    let locate = |u: &MGPointUnit, m: f64| {
        net.route(u.rid)
            .ok()
            .and_then(|r| r.curve.locate_point(m).ok())
    };
    match (locate(prev, prev.pos2), locate(next, next.pos1)) {
        (Some(p), Some(q)) if p.distance(&q) <= net.tol.snap => Ok(()),
        (Some(p), Some(q)) => jump(format!("route {} at {p} then route {} at {q}", prev.rid, next.rid)),
        _ => jump("boundary measure off route".into()),
    }
}

impl fmt::Display for UGPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.units.is_empty() {
            return f.write_str("UGPOINT()");
        }
        for (i, u) in self.units.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{u}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;

    pub(crate) fn unit(rid: RouteId, t1: i64, t2: i64, pos1: f64, v0: f64, a: f64) -> MGPointUnit {
        let tau = (t2 - t1) as f64 / 1000.0;
        MGPointUnit {
            moid: 7,
            netid: 1,
            rid,
            side: 0,
            t1: Timestamp(t1),
            t2: Timestamp(t2),
            pos1,
            pos2: pos1 + v0 * tau + 0.5 * a * tau * tau,
            v0,
            a,
        }
    }

    #[test]
    fn kinematics() {
        let u = unit(A, 0, 10_000, 0.0, 10.0, 0.0);
        assert_eq!(u.pos2, 100.0);
        assert_eq!(u.measure_at(Timestamp(4000)), 40.0);
        let u = unit(A, 0, 10_000, 0.0, 0.0, 2.0);
        assert_eq!(u.measure_at(Timestamp(4000)), 16.0);
        assert_eq!(u.velocity_after(4.0), 8.0);
    }

    #[test]
    fn unit_checks() {
        let good = unit(A, 0, 10_000, 0.0, 10.0, 0.0);
        assert!(good.check(1000.0, 1e-9).is_ok());
        let mut off = good;
        off.pos2 += 1.0;
        assert!(matches!(off.check(1000.0, 1e-9), Err(MotionError::UnitInvariant { .. })));
        // leaves the route through its turning point
        let turn = unit(A, 0, 10_000, 5.0, -4.0, 1.0);
        assert!(turn.check(1000.0, 1e-9).is_err());
        let short = unit(A, 0, 10_000, 0.0, 10.0, 0.0);
        assert!(short.check(50.0, 1e-9).is_err());
        let mut backwards = good;
        backwards.t2 = backwards.t1;
        assert!(backwards.check(1000.0, 1e-9).is_err());
    }

    #[test]
    fn unit_lookup_half_open() {
        let u = UGPoint::new(
            7,
            vec![unit(A, 10_000, 20_000, 100.0, 10.0, 0.0), unit(A, 0, 10_000, 0.0, 10.0, 0.0)],
        )
        .unwrap();
        assert_eq!(u.units()[0].t1, Timestamp(0));
        assert_eq!(u.unit_index_at(Timestamp(9_999)), Some(0));
        assert_eq!(u.unit_index_at(Timestamp(10_000)), Some(1));
        assert_eq!(u.unit_index_at(Timestamp(20_000)), Some(1));
        assert_eq!(u.unit_index_at(Timestamp(20_001)), None);
        assert_eq!(u.unit_index_at(Timestamp(-1)), None);
    }

    #[test]
    fn overlap_rejected() {
        let err = UGPoint::new(
            7,
            vec![unit(A, 0, 10_000, 0.0, 10.0, 0.0), unit(A, 5_000, 15_000, 100.0, 10.0, 0.0)],
        )
        .unwrap_err();
        assert!(matches!(err, MotionError::TemporalOverlap { .. }));
    }

    #[test]
    fn continuity() {
        let net = t1();
        let a = unit(A, 0, 60_000, 0.0, 10.0, 0.0);
        let b = unit(B, 60_000, 70_000, 0.0, 10.0, 0.0);
        let u = UGPoint::new(7, vec![a, b]).unwrap();
        assert!(u.validate(&net).is_ok());
        let jumpy = UGPoint::new(7, vec![a, unit(B, 60_000, 70_000, 5.0, 10.0, 0.0)]).unwrap();
        assert!(matches!(jumpy.validate(&net), Err(MotionError::ContinuityViolation { .. })));
        let same = UGPoint::new(7, vec![a, unit(A, 60_000, 70_000, 600.5, 1.0, 0.0)]).unwrap();
        assert!(same.validate(&net).is_err());
        // a gap in time needs no continuity
        let gap = UGPoint::new(7, vec![a, unit(B, 61_000, 70_000, 5.0, 10.0, 0.0)]).unwrap();
        assert!(gap.validate(&net).is_ok());
    }

    #[test]
    fn clip_recomputes_boundaries() {
        let u = unit(A, 0, 10_000, 0.0, 0.0, 2.0);
        let c = u.clip(Timestamp(4_000), Timestamp(10_000));
        assert_eq!((c.pos1, c.v0, c.a, c.pos2), (16.0, 8.0, 2.0, 100.0));
        let full = u.clip(u.t1, u.t2);
        assert_eq!(full, u);
    }
}
