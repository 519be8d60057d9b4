use std::fmt;

use crate::geometry::{MeasuredPolyline, PlanarPoint};
use crate::motion::{self, GLine, GPoint, Intime, Period, Periods, RouteInterval, Timestamp, UGPoint};
use crate::network::{Network, RouteId};
use crate::routing;
use crate::store::Store;

use super::ast::{Expr, ExprKind, Span};
use super::functions::{resolve, typecheck, Type};
use super::MoqlError;

/// What queries run against.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub net: &'a Network,
    pub store: &'a Store,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Time(Timestamp),
    Periods(Periods),
    GPoint(GPoint),
    GLine(GLine),
    UGPoint(UGPoint),
    Intime(Intime),
    Point(PlanarPoint),
    Lines(Vec<MeasuredPolyline>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
            Value::Time(t) => write!(f, "{t}"),
            Value::Periods(p) => write!(f, "{p}"),
            Value::GPoint(g) => write!(f, "{g}"),
            Value::GLine(g) => write!(f, "{g}"),
            Value::UGPoint(u) => write!(f, "{u}"),
            Value::Intime(i) => write!(f, "{i}"),
            Value::Point(p) => f.write_str(&p.to_wkt()),
            Value::Lines(ls) if ls.is_empty() => f.write_str("LINESTRING EMPTY"),
            Value::Lines(ls) => {
                for (i, l) in ls.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    f.write_str(&l.to_wkt())?;
                }
                Ok(())
            }
        }
    }
}

fn fail(span: Span, msg: impl ToString) -> MoqlError {
    MoqlError::Eval {
        line: span.line,
        col: span.col,
        msg: msg.to_string(),
    }
}

struct Args<'a> {
    vals: Vec<Value>,
    span: Span,
    ctx: &'a Context<'a>,
}

impl Args<'_> {
    fn int(&self, i: usize) -> i64 {
        match &self.vals[i] {
            Value::Int(v) => *v,
            other => unreachable!("type checker let {other:?} through as int"),
        }
    }

    fn rid(&self, i: usize) -> Result<RouteId, MoqlError> {
        RouteId::try_from(self.int(i)).map_err(|_| fail(self.span, format!("route id {} out of range", self.int(i))))
    }

    fn side(&self, i: usize) -> Result<i8, MoqlError> {
        match self.int(i) {
            s @ -1..=1 => Ok(s as i8),
            s => Err(fail(self.span, format!("side must be -1, 0 or 1, got {s}"))),
        }
    }

    fn float(&self, i: usize) -> f64 {
        match &self.vals[i] {
            Value::Float(v) => *v,
            Value::Int(v) => *v as f64,
            other => unreachable!("type checker let {other:?} through as float"),
        }
    }

    fn str(&self, i: usize) -> &str {
        match &self.vals[i] {
            Value::Str(s) => s,
            other => unreachable!("type checker let {other:?} through as string"),
        }
    }

    fn time(&self, i: usize) -> Timestamp {
        match &self.vals[i] {
            Value::Time(t) => *t,
            other => unreachable!("type checker let {other:?} through as timestamp"),
        }
    }

    fn periods(&self, i: usize) -> &Periods {
        match &self.vals[i] {
            Value::Periods(p) => p,
            other => unreachable!("type checker let {other:?} through as periods"),
        }
    }

    fn gpoint(&self, i: usize) -> &GPoint {
        match &self.vals[i] {
            Value::GPoint(g) => g,
            other => unreachable!("type checker let {other:?} through as gpoint"),
        }
    }

    fn gline(&self, i: usize) -> &GLine {
        match &self.vals[i] {
            Value::GLine(g) => g,
            other => unreachable!("type checker let {other:?} through as gline"),
        }
    }

    fn intime(&self, i: usize) -> &Intime {
        match &self.vals[i] {
            Value::Intime(v) => v,
            other => unreachable!("type checker let {other:?} through as intime"),
        }
    }

    fn point(&self, i: usize) -> &PlanarPoint {
        match &self.vals[i] {
            Value::Point(p) => p,
            other => unreachable!("type checker let {other:?} through as point"),
        }
    }

    /// A moving object given directly or by id.
    fn mo(&self, i: usize) -> Result<UGPoint, MoqlError> {
        match &self.vals[i] {
            Value::UGPoint(u) => Ok(u.clone()),
            Value::Int(id) => lookup_mo(self.ctx, *id, self.span),
            other => unreachable!("type checker let {other:?} through as ugpoint"),
        }
    }
}

fn lookup_mo(ctx: &Context, id: i64, span: Span) -> Result<UGPoint, MoqlError> {
    ctx.store
        .ugpoint(id)
        .ok_or_else(|| fail(span, format!("no moving object with id {id}")))
}

/// Evaluates a parsed query; the expression is type-checked first.
pub fn eval(e: &Expr, ctx: &Context) -> Result<Value, MoqlError> {
    typecheck(e)?;
    eval_checked(e, ctx)
}

fn eval_checked(e: &Expr, ctx: &Context) -> Result<Value, MoqlError> {
    match &e.kind {
        ExprKind::Int(v) => Ok(Value::Int(*v)),
        ExprKind::Float(v) => Ok(Value::Float(*v)),
        ExprKind::Str(s) => Ok(Value::Str(s.clone())),
        ExprKind::Time(t) => Ok(Value::Time(*t)),
        ExprKind::Period(a, b) => Period::new(*a, *b)
            .map(|p| Value::Periods(Periods::single(p)))
            .map_err(|err| fail(e.span, err)),
        ExprKind::Call(name, args) => {
            let vals = args.iter().map(|a| eval_checked(a, ctx)).collect::<Result<Vec<_>, _>>()?;
            let types: Vec<Type> = args.iter().map(typecheck).collect::<Result<_, _>>()?;
            let (overload, _) = resolve(name, &types).map_err(|m| fail(e.span, m))?;
            call(
                name,
                overload,
                Args {
                    vals,
                    span: e.span,
                    ctx,
                },
            )
        }
    }
}

fn call(name: &str, overload: usize, a: Args) -> Result<Value, MoqlError> {
    let net = a.ctx.net;
    let span = a.span;
    let err = |e: &dyn fmt::Display| fail(span, e);
    let v = match name {
        "in_space" if overload == 0 => Value::Point(motion::in_space(net, a.gpoint(0)).map_err(|e| err(&e))?),
        "in_space" => Value::Lines(motion::in_space_line(net, a.gline(0)).map_err(|e| err(&e))?),
        "in_network" => {
            let max = if overload == 1 { a.float(1) } else { motion::DEFAULT_MAX_DIST };
            Value::GPoint(motion::in_network(net, a.point(0), max).map_err(|e| err(&e))?)
        }
        "val" => Value::GPoint(a.intime(0).val()),
        "inst" => Value::Time(a.intime(0).inst()),
        "deftime" => Value::Periods(motion::deftime(&a.mo(0)?)),
        "trajectory" => Value::GLine(motion::trajectory(&a.mo(0)?)),
        "atinstant" => Value::Intime(motion::atinstant(&a.mo(0)?, a.time(1)).map_err(|e| err(&e))?),
        "atperiods" => Value::UGPoint(motion::atperiods(&a.mo(0)?, a.periods(1))),
        "direction" => Value::Float(motion::direction(net, &a.mo(0)?, &a.mo(1)?, a.time(2)).map_err(|e| err(&e))?),
        "shortest_path" if overload == 0 => {
            Value::GLine(motion::shortest_path_mo(net, &a.mo(0)?, &a.mo(1)?, a.time(2)).map_err(|e| err(&e))?)
        }
        "shortest_path" => Value::GLine(routing::shortest_path(net, a.gpoint(0), a.gpoint(1)).map_err(|e| err(&e))?),
        "at" => Value::UGPoint(motion::at(&a.mo(0)?, a.gline(1))),
        "inside" => Value::Bool(motion::inside(&a.mo(0)?, a.gline(1), a.time(2), net.tol.measure).map_err(|e| err(&e))?),
        "size" => Value::Float(motion::size(a.gline(0))),
        "duration" => Value::Float(motion::duration(&a.mo(0)?)),
        "now" => Value::Time(motion::now(&a.mo(0)?).map_err(|e| err(&e))?),
        "current" => Value::GPoint(motion::current(&a.mo(0)?).map_err(|e| err(&e))?),
        "length" => Value::Float(net.length(a.rid(0)?).map_err(|e| err(&e))?),
        "curve" => Value::Lines(vec![net.curve(a.rid(0)?).map_err(|e| err(&e))?.clone()]),
        "dual" => Value::Int(i64::from(net.dual(a.rid(0)?).map_err(|e| err(&e))?)),
        "on_route" => Value::Bool(net.on_route(a.gpoint(0), a.rid(1)?)),
        "intersects" => Value::Bool(net.intersects(a.gline(0), a.rid(1)?)),
        "contains" => Value::Bool(net.contains(a.gline(0), a.rid(1)?)),
        "is_contained" => Value::Bool(net.is_contained(a.rid(0)?, a.gline(1))),
        "network_distance" => {
            Value::Float(routing::network_distance(net, a.gpoint(0), a.gpoint(1)).map_err(|e| err(&e))?)
        }
        "locate_point" => {
            let curve = net.curve(a.rid(0)?).map_err(|e| err(&e))?;
            Value::Point(curve.locate_point(a.float(1)).map_err(|e| err(&e))?)
        }
        "mo" => Value::UGPoint(lookup_mo(a.ctx, a.int(0), span)?),
        "gline_named" => Value::GLine(a.ctx.store.gline_named(a.str(0)).map_err(|e| err(&e))?.geom.clone()),
        "gpoint_named" => Value::GPoint(a.ctx.store.gpoint_named(a.str(0)).map_err(|e| err(&e))?.geom),
        "gpoint" => {
            let side = if overload == 1 { a.side(2)? } else { 0 };
            let g = GPoint::new(net.net_id, a.rid(0)?, a.float(1), side);
            if !net.on_route(&g, g.rid) {
                return Err(fail(span, format!("measure {} is not on route {}", g.measure, g.rid)));
            }
            Value::GPoint(g)
        }
        "gline" => {
            let side = if overload == 1 { a.side(3)? } else { 0 };
            let iv = RouteInterval::new(a.rid(0)?, a.float(1), a.float(2), side);
            let len = net.length(iv.rid).map_err(|e| err(&e))?;
            if iv.lo() < -net.tol.measure || iv.hi() > len + net.tol.measure {
                return Err(fail(span, format!("interval {}..{} is not on route {}", iv.pos1, iv.pos2, iv.rid)));
            }
            Value::GLine(GLine::new(net.net_id, 0, vec![iv]))
        }
        "point" => Value::Point(PlanarPoint::new(a.float(0), a.float(1))),
        other => return Err(fail(span, format!("unknown function {other}"))),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::MGPointUnit;
    use crate::moql::run;
    use crate::network::fixtures::*;

    fn store(net: &Network) -> Store {
        let mut s = Store::new();
        let units = [
            MGPointUnit {
                moid: 1033,
                netid: 1,
                rid: A,
                side: 0,
                t1: Timestamp(0),
                t2: Timestamp(50_000),
                pos1: 100.0,
                pos2: 600.0,
                v0: 10.0,
                a: 0.0,
            },
            MGPointUnit {
                moid: 1033,
                netid: 1,
                rid: B,
                side: 0,
                t1: Timestamp(50_000),
                t2: Timestamp(70_000),
                pos1: 0.0,
                pos2: 200.0,
                v0: 10.0,
                a: 0.0,
            },
        ];
        s.append_units(net, &units).unwrap();
        s
    }

    fn q(text: &str) -> Result<String, MoqlError> {
        let net = t1();
        let s = store(&net);
        let ctx = Context { net: &net, store: &s };
        run(text, &ctx).map(|v| v.to_string())
    }

    #[test]
    fn evaluates_queries() {
        assert_eq!(q("size(trajectory(mo(1033)))").unwrap(), "700.0");
        assert_eq!(q("trajectory(1033)").unwrap(), "GLINE(1,1,100.000,600.000,0,1033)\nGLINE(1,2,0.000,200.000,0,1033)");
        assert_eq!(
            q(r#"trajectory(atperiods(mo(1033), periods("1970-01-01T00:00:10Z", "1970-01-01T00:00:20Z")))"#).unwrap(),
            "GLINE(1,1,200.000,300.000,0,1033)"
        );
        assert_eq!(
            q(r#"trajectory(atperiods(mo(1033), periods("1980-01-01T00:00:10Z", "1980-01-01T00:00:20Z")))"#).unwrap(),
            "GLINE()"
        );
        assert_eq!(q("current(1033)").unwrap(), "GPOINT(1,2,200.000,0)");
        assert_eq!(q("now(1033)").unwrap(), "1970-01-01T00:01:10.000Z");
        assert_eq!(q("duration(1033)").unwrap(), "70.0");
        assert_eq!(q("network_distance(gpoint(1, 100), gpoint(2, 200))").unwrap(), "700.0");
        assert_eq!(q("in_space(gpoint(1, 600))").unwrap(), "POINT(600 0)");
        assert_eq!(q("in_network(point(100, 5))").unwrap(), "GPOINT(1,1,100.000,-1)");
        assert_eq!(q(r#"inside(1033, gline(1, 150, 250), "1970-01-01T00:00:10Z")"#).unwrap(), "true");
        assert_eq!(q("dual(2)").unwrap(), "2");
        assert_eq!(q("is_contained(2, gline(2, 0, 500))").unwrap(), "true");
    }

    #[test]
    fn evaluation_errors_have_positions() {
        match q("size(trajectory(mo(5)))") {
            Err(MoqlError::Eval { line: 1, col: 17, msg }) => assert!(msg.contains("5")),
            other => panic!("{other:?}"),
        }
        match q(r#"atinstant(1033, "2020-01-01T00:00:00Z")"#) {
            Err(MoqlError::Eval { col: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(q("gpoint(1, 5000)"), Err(MoqlError::Eval { .. })));
    }
}
