use crate::motion::Timestamp;

use super::ast::{Expr, ExprKind, Span};
use super::MoqlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::Float(v) => format!("number {v}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(span: Span, expected: &str, found: impl Into<String>) -> MoqlError {
    MoqlError::Syntax {
        line: span.line,
        col: span.col,
        expected: expected.to_string(),
        found: found.into(),
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn number(&mut self, span: Span) -> Result<Tok, MoqlError> {
        let mut text = String::new();
        if self.chars.peek() == Some(&'-') {
            text.push('-');
            self.bump();
        }
        let digits = |lx: &mut Self, text: &mut String| {
            let mut n = 0;
            while let Some(&c) = lx.chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                text.push(c);
                lx.bump();
                n += 1;
            }
            n
        };
        if digits(self, &mut text) == 0 {
            return Err(syntax(self.here(), "digit", format!("{:?}", text)));
        }
        let mut float = false;
        if self.chars.peek() == Some(&'.') {
            float = true;
            text.push('.');
            self.bump();
            if digits(self, &mut text) == 0 {
                return Err(syntax(self.here(), "digit after '.'", text));
            }
        }
        if matches!(self.chars.peek(), Some('e' | 'E')) {
            float = true;
            text.push('e');
            self.bump();
            if let Some(&c @ ('+' | '-')) = self.chars.peek() {
                text.push(c);
                self.bump();
            }
            if digits(self, &mut text) == 0 {
                return Err(syntax(self.here(), "exponent digits", text));
            }
        }
        if float {
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Tok::Float(v)),
                _ => Err(syntax(span, "finite number", text)),
            }
        } else {
            text.parse().map(Tok::Int).map_err(|_| syntax(span, "64-bit integer", text))
        }
    }

    fn string(&mut self) -> Result<Tok, MoqlError> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(syntax(self.here(), "closing '\"'", "end of input")),
                Some('"') => return Ok(Tok::Str(out)),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    other => return Err(syntax(self.here(), "escape \\\" \\\\ \\n or \\t", format!("{other:?}"))),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, Span), MoqlError> {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
        let span = self.here();
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::Eof, span));
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '"' => self.string()?,
            '-' | '0'..='9' => self.number(span)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if !(c.is_ascii_alphanumeric() || c == '_') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Tok::Ident(s)
            }
            other => return Err(syntax(span, "identifier, number, string, '(' , ')' or ','", format!("{other:?}"))),
        };
        Ok((tok, span))
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Span) {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, expected: &str) -> Result<Span, MoqlError> {
        let (tok, span) = self.advance();
        if tok == want {
            Ok(span)
        } else {
            Err(syntax(span, expected, tok.describe()))
        }
    }

    fn string(&mut self) -> Result<(String, Span), MoqlError> {
        match self.advance() {
            (Tok::Str(s), span) => Ok((s, span)),
            (tok, span) => Err(syntax(span, "string", tok.describe())),
        }
    }

    fn expr(&mut self) -> Result<Expr, MoqlError> {
        let (tok, span) = self.advance();
        let kind = match tok {
            Tok::Int(v) => ExprKind::Int(v),
            Tok::Float(v) => ExprKind::Float(v),
            Tok::Str(s) => match Timestamp::parse_iso(&s) {
                Ok(t) if looks_like_time(&s) => ExprKind::Time(t),
                _ => ExprKind::Str(s),
            },
            Tok::Ident(name) => {
                let name = name.to_ascii_lowercase();
                self.expect(Tok::LParen, "'('")?;
                if name == "periods" {
                    let (a, a_span) = self.string()?;
                    self.expect(Tok::Comma, "','")?;
                    let (b, b_span) = self.string()?;
                    self.expect(Tok::RParen, "')'")?;
                    let start = Timestamp::parse_iso(&a).map_err(|_| syntax(a_span, "ISO-8601 timestamp", format!("{a:?}")))?;
                    let end = Timestamp::parse_iso(&b).map_err(|_| syntax(b_span, "ISO-8601 timestamp", format!("{b:?}")))?;
                    ExprKind::Period(start, end)
                } else {
                    let mut args = Vec::new();
                    if self.peek().0 == Tok::RParen {
                        self.advance();
                    } else {
                        loop {
                            args.push(self.expr()?);
                            let (tok, span) = self.advance();
                            match tok {
                                Tok::Comma => continue,
                                Tok::RParen => break,
                                other => return Err(syntax(span, "',' or ')'", other.describe())),
                            }
                        }
                    }
                    ExprKind::Call(name, args)
                }
            }
            other => return Err(syntax(span, "function call, number or string", other.describe())),
        };
        Ok(Expr { kind, span })
    }
}

/// Only strings shaped like a date-time count as timestamps, not every
/// string chrono happens to accept.
fn looks_like_time(s: &str) -> bool {
    let b = s.trim().as_bytes();
    b.len() >= 19 && b[4] == b'-' && b[7] == b'-' && b[10] == b'T'
}

/// Parses one query.
pub fn parse(text: &str) -> Result<Expr, MoqlError> {
    let mut lx = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut toks = Vec::new();
    loop {
        let (tok, span) = lx.next()?;
        let done = tok == Tok::Eof;
        toks.push((tok, span));
        if done {
            break;
        }
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    let (tok, span) = p.advance();
    if tok != Tok::Eof {
        return Err(syntax(span, "end of input", tok.describe()));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_at(text: &str) -> (usize, usize) {
        match parse(text) {
            Err(e @ MoqlError::Syntax { .. }) => e.position(),
            other => panic!("{text}: {other:?}"),
        }
    }

    #[test]
    fn literals() {
        assert_eq!(parse("42").unwrap().kind, ExprKind::Int(42));
        assert_eq!(parse("-7").unwrap().kind, ExprKind::Int(-7));
        assert_eq!(parse("2.5").unwrap().kind, ExprKind::Float(2.5));
        assert_eq!(parse("1e3").unwrap().kind, ExprKind::Float(1000.0));
        assert_eq!(parse(r#""a\"b""#).unwrap().kind, ExprKind::Str("a\"b".into()));
        let t = Timestamp::parse_iso("2011-01-21T00:04:42.600Z").unwrap();
        assert_eq!(parse(r#""2011-01-21T00:04:42.600Z""#).unwrap().kind, ExprKind::Time(t));
        let p = parse(r#"PERIODS("2011-01-21T00:04:42.600Z", "2011-01-21T00:10:03.000Z")"#).unwrap();
        assert!(matches!(p.kind, ExprKind::Period(a, _) if a == t));
    }

    #[test]
    fn calls_and_positions() {
        let e = parse("Size(\n  trajectory(mo(1033)))").unwrap();
        let ExprKind::Call(name, args) = &e.kind else { panic!() };
        assert_eq!(name, "size");
        assert_eq!(args[0].span, Span { line: 2, col: 3 });
        assert_eq!(parse("now()").unwrap().kind, ExprKind::Call("now".into(), vec![]));
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(err_at(""), (1, 1));
        assert_eq!(err_at("size(1,"), (1, 8));
        assert_eq!(err_at("size(1 2)"), (1, 8));
        assert_eq!(err_at("size 1"), (1, 6));
        assert_eq!(err_at("size(1))"), (1, 8));
        assert_eq!(err_at("\"open"), (1, 6));
        assert_eq!(err_at("a(#)"), (1, 3));
        assert_eq!(err_at("periods(\"x\", \"2011-01-21T00:00:00Z\")"), (1, 9));
        assert_eq!(err_at("1."), (1, 3));
        assert_eq!(err_at("99999999999999999999"), (1, 1));
        match parse("f(,)") {
            Err(MoqlError::Syntax { expected, found, .. }) => {
                assert_eq!(expected, "function call, number or string");
                assert_eq!(found, "','");
            }
            other => panic!("{other:?}"),
        }
    }
}
