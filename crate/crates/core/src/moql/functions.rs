use std::fmt;

use super::ast::{Expr, ExprKind};
use super::MoqlError;

/// Static type of a MOQL expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type {
    Int,
    Float,
    Bool,
    Str,
    Time,
    Periods,
    GPoint,
    GLine,
    UGPoint,
    Intime,
    Point,
    Lines,
}

impl Type {
    /// Whether an argument of type `arg` may be passed where `self` is
    /// expected. Integers widen to floats and stand for object ids.
    pub fn accepts(self, arg: Type) -> bool {
        self == arg || matches!((self, arg), (Type::Float, Type::Int) | (Type::UGPoint, Type::Int))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Type::Int => "int",
            Type::Float => "float",
            Type::Bool => "bool",
            Type::Str => "string",
            Type::Time => "timestamp",
            Type::Periods => "periods",
            Type::GPoint => "gpoint",
            Type::GLine => "gline",
            Type::UGPoint => "ugpoint",
            Type::Intime => "intime",
            Type::Point => "point",
            Type::Lines => "geometry",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub params: &'static [Type],
    pub ret: Type,
}

const fn sig(params: &'static [Type], ret: Type) -> Signature {
    Signature { params, ret }
}

use Type::*;

/// Every callable function with its overloads, in resolution order.
pub const FUNCTIONS: &[(&str, &[Signature])] = &[
    // moving-object algebra
    ("in_space", &[sig(&[GPoint], Point), sig(&[GLine], Lines)]),
    ("in_network", &[sig(&[Point], GPoint), sig(&[Point, Float], GPoint)]),
    ("val", &[sig(&[Intime], GPoint)]),
    ("inst", &[sig(&[Intime], Time)]),
    ("deftime", &[sig(&[UGPoint], Periods)]),
    ("trajectory", &[sig(&[UGPoint], GLine)]),
    ("atinstant", &[sig(&[UGPoint, Time], Intime)]),
    ("atperiods", &[sig(&[UGPoint, Periods], UGPoint)]),
    ("direction", &[sig(&[UGPoint, UGPoint, Time], Float)]),
    ("shortest_path", &[sig(&[UGPoint, UGPoint, Time], GLine), sig(&[GPoint, GPoint], GLine)]),
    ("at", &[sig(&[UGPoint, GLine], UGPoint)]),
    ("inside", &[sig(&[UGPoint, GLine, Time], Bool)]),
    ("size", &[sig(&[GLine], Float)]),
    ("duration", &[sig(&[UGPoint], Float)]),
    ("now", &[sig(&[UGPoint], Time)]),
    ("current", &[sig(&[UGPoint], GPoint)]),
    // network accessors and predicates
    ("length", &[sig(&[Int], Float)]),
    ("curve", &[sig(&[Int], Lines)]),
    ("dual", &[sig(&[Int], Int)]),
    ("on_route", &[sig(&[GPoint, Int], Bool)]),
    ("intersects", &[sig(&[GLine, Int], Bool)]),
    ("contains", &[sig(&[GLine, Int], Bool)]),
    ("is_contained", &[sig(&[Int, GLine], Bool)]),
    ("network_distance", &[sig(&[GPoint, GPoint], Float)]),
    ("locate_point", &[sig(&[Int, Float], Point)]),
    // constructors and lookups
    ("mo", &[sig(&[Int], UGPoint)]),
    ("gline_named", &[sig(&[Str], GLine)]),
    ("gpoint_named", &[sig(&[Str], GPoint)]),
    ("gpoint", &[sig(&[Int, Float], GPoint), sig(&[Int, Float, Int], GPoint)]),
    ("gline", &[sig(&[Int, Float, Float], GLine), sig(&[Int, Float, Float, Int], GLine)]),
    ("point", &[sig(&[Float, Float], Point)]),
];

/// Overloads of a function, looked up case-insensitively.
pub fn signatures(name: &str) -> Option<&'static [Signature]> {
    let name = name.to_ascii_lowercase();
    FUNCTIONS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Index of the overload matching the argument types.
pub(crate) fn resolve(name: &str, args: &[Type]) -> Result<(usize, Signature), String> {
    let sigs = signatures(name).ok_or_else(|| format!("unknown function {name}"))?;
    if let Some(i) = sigs.iter().position(|s| {
        s.params.len() == args.len() && s.params.iter().zip(args).all(|(p, a)| p.accepts(*a))
    }) {
        return Ok((i, sigs[i]));
    }
    let same_arity: Vec<&Signature> = sigs.iter().filter(|s| s.params.len() == args.len()).collect();
    let list = |s: &Signature| s.params.iter().map(Type::to_string).collect::<Vec<_>>().join(", ");
    if same_arity.is_empty() {
        let arities: Vec<String> = sigs.iter().map(|s| s.params.len().to_string()).collect();
        return Err(format!(
            "{name} takes {} argument(s), got {}",
            arities.join(" or "),
            args.len()
        ));
    }
    let found = args.iter().map(Type::to_string).collect::<Vec<_>>().join(", ");
    let wanted: Vec<String> = same_arity.iter().map(|s| format!("({})", list(s))).collect();
    Err(format!("{name} expects {}, got ({found})", wanted.join(" or ")))
}

/// Infers the type of an expression, checking every call against the
/// function table.
pub fn typecheck(e: &Expr) -> Result<Type, MoqlError> {
    match &e.kind {
        ExprKind::Int(_) => Ok(Int),
        ExprKind::Float(_) => Ok(Float),
        ExprKind::Str(_) => Ok(Str),
        ExprKind::Time(_) => Ok(Time),
        ExprKind::Period(a, b) => {
            if a < b {
                Ok(Periods)
            } else {
                Err(MoqlError::Type {
                    line: e.span.line,
                    col: e.span.col,
                    msg: format!("empty period from {a} to {b}"),
                })
            }
        }
        ExprKind::Call(name, args) => {
            let types = args.iter().map(typecheck).collect::<Result<Vec<_>, _>>()?;
            resolve(name, &types).map(|(_, s)| s.ret).map_err(|msg| MoqlError::Type {
                line: e.span.line,
                col: e.span.col,
                msg,
            })
        }
    }
}
