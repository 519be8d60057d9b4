//! Moving points on the network and the operations over them.
//!
//! A moving point is stored in sliced form: a sequence of units, each with
//! a time interval, its start and end measures on one route, and constant
//! acceleration, so the position inside a unit follows
//! `x(τ) = x0 + v0·τ + a·τ²/2` and the velocity `v(τ) = v0 + a·τ`.

mod ops;
mod time;
mod unit;
mod values;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::network::RouteId;
use crate::routing::RoutingError;

pub use ops::{
    at, atinstant, atperiods, current, deftime, direction, duration, in_network, in_space,
    in_space_line, inside, now, shortest_path_mo, size, trajectory, DEFAULT_MAX_DIST,
};
pub use time::{Period, Periods, Timestamp};
pub(crate) use unit::check_boundary;
pub use unit::{MGPointUnit, MoId, UGPoint};
pub use values::{GLine, GPoint, Intime, RouteInterval};

/// Acceleration below which crossings are solved as linear.
pub const EPS_ACCEL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("object is not defined at {0}")]
    UndefinedAtTime(Timestamp),
    #[error("object has no units")]
    Empty,
    #[error("points coincide, direction undefined")]
    DegeneratePoints,
    #[error("unit invariant violated for moid {moid}: {reason}")]
    UnitInvariant { moid: MoId, reason: String },
    #[error("moid {moid}: unit starting {t1} overlaps the previous unit ending {prev_t2}")]
    TemporalOverlap {
        moid: MoId,
        t1: Timestamp,
        prev_t2: Timestamp,
    },
    #[error("moid {moid}: position jumps at {at}: {reason}")]
    ContinuityViolation {
        moid: MoId,
        at: Timestamp,
        reason: String,
    },
    #[error("no route within {max_dist} m (nearest {nearest} m)")]
    NoNearbyRoute { max_dist: f64, nearest: f64 },
    #[error("unknown route {0}")]
    UnknownRoute(RouteId),
    #[error("bad timestamp {0:?}, expected ISO-8601 like 2011-01-21T00:04:42.600Z")]
    BadTimestamp(String),
    #[error("empty period [{0}, {1})")]
    EmptyPeriod(Timestamp, Timestamp),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}
