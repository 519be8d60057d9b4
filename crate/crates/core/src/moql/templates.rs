//! Ready-made queries: the places one object visited, the objects that
//! passed through a line during a period, and per-route object counts.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::motion::{self, GLine, MoId, MotionError, Periods, RouteInterval, Timestamp};
use crate::network::RouteId;

use super::Context;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("no moving object with id {0}")]
    UnknownObject(MoId),
    #[error("no stored gline or route named {0:?}")]
    UnknownName(String),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Trajectory of one object, optionally restricted to `periods`.
pub fn visited(ctx: &Context, moid: MoId, periods: Option<&Periods>) -> Result<GLine, TemplateError> {
    let u = ctx.store.ugpoint(moid).ok_or(TemplateError::UnknownObject(moid))?;
    Ok(match periods {
        Some(p) => motion::trajectory(&motion::atperiods(&u, p)),
        None => motion::trajectory(&u),
    })
}

/// A stored gline with this name, or else the union of all routes with
/// this name.
pub fn resolve_gline(ctx: &Context, name: &str) -> Result<GLine, TemplateError> {
    if let Ok(rec) = ctx.store.gline_named(name) {
        return Ok(rec.geom.clone());
    }
    let intervals: Vec<RouteInterval> = ctx
        .net
        .routes()
        .filter(|r| r.name == name)
        .map(|r| RouteInterval::new(r.rid, 0.0, r.length, 0))
        .collect();
    if intervals.is_empty() {
        return Err(TemplateError::UnknownName(name.to_string()));
    }
    Ok(GLine::new(ctx.net.net_id, 0, intervals))
}

/// Ids of the objects that were inside `g` at some time in `periods`,
/// ascending.
pub fn passed_through(ctx: &Context, g: &GLine, periods: &Periods) -> Vec<MoId> {
    ctx.store
        .moids()
        .filter(|&moid| {
            ctx.store.ugpoint(moid).is_some_and(|u| {
                let during = motion::atperiods(&u, periods);
                !motion::at(&during, g).is_empty()
            })
        })
        .collect()
}

/// `1000, 1005, 1011`
pub fn format_moids(ids: &[MoId]) -> String {
    ids.iter().map(MoId::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteCount {
    pub rid: RouteId,
    pub name: String,
    pub count: usize,
}

/// Number of objects on each route at instant `at`, or at each object's
/// last known position when `at` is `None`. Only routes with more than
/// `min` objects are returned, by route id.
pub fn count_by_route(ctx: &Context, at: Option<Timestamp>, min: usize) -> Vec<RouteCount> {
    let mut counts: BTreeMap<RouteId, usize> = BTreeMap::new();
    for moid in ctx.store.moids() {
        let Some(u) = ctx.store.ugpoint(moid) else { continue };
        let pos = match at {
            None => motion::current(&u).ok(),
            Some(t) => motion::atinstant(&u, t).ok().map(|i| i.val()),
        };
        if let Some(p) = pos {
            *counts.entry(p.rid).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c > min)
        .map(|(rid, count)| RouteCount {
            rid,
            name: ctx.net.route(rid).map(|r| r.name.clone()).unwrap_or_default(),
            count,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{MGPointUnit, Period};
    use crate::network::fixtures::*;
    use crate::store::Store;

    fn parked(moid: MoId, rid: RouteId, m: f64, t2: i64) -> MGPointUnit {
        MGPointUnit {
            moid,
            netid: 1,
            rid,
            side: 0,
            t1: Timestamp(0),
            t2: Timestamp(t2),
            pos1: m,
            pos2: m,
            v0: 0.0,
            a: 0.0,
        }
    }

    #[test]
    fn templates_on_parked_objects() {
        let net = t1();
        let mut store = Store::new();
        store
            .append_units(
                &net,
                &[parked(1000, A, 10.0, 10_000), parked(1001, A, 700.0, 10_000), parked(1002, B, 50.0, 5_000)],
            )
            .unwrap();
        let ctx = Context { net: &net, store: &store };
        let counts = count_by_route(&ctx, None, 0);
        assert_eq!(
            counts,
            vec![
                RouteCount { rid: A, name: "A".into(), count: 2 },
                RouteCount { rid: B, name: "B".into(), count: 1 }
            ]
        );
        assert_eq!(count_by_route(&ctx, None, 1).len(), 1);
        assert_eq!(count_by_route(&ctx, Some(Timestamp(7_000)), 0).len(), 1);

        let g = resolve_gline(&ctx, "A").unwrap();
        let all = Periods::single(Period::new(Timestamp(0), Timestamp(20_000)).unwrap());
        assert_eq!(passed_through(&ctx, &g, &all), vec![1000, 1001]);
        assert_eq!(format_moids(&[1000, 1005, 1011]), "1000, 1005, 1011");
        assert!(matches!(resolve_gline(&ctx, "Chamran"), Err(TemplateError::UnknownName(_))));
        assert_eq!(visited(&ctx, 1002, None).unwrap().to_string(), "GLINE(1,2,50.000,50.000,0,1002)");
        assert!(visited(&ctx, 5, None).is_err());
    }
}
