//! Reachability queries of the form `Pmax=? [ F latency<30 & vms_num=7 ]`.
//!
//! Predicates are conjunctions of comparisons over `vms_num`, `latency` and
//! `throughput`. The latter two refer to the behaviour-cluster center stored
//! with each state.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::MdpState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    VmsNum,
    Latency,
    Throughput,
}

impl Field {
    fn name(self) -> &'static str {
        match self {
            Field::VmsNum => "vms_num",
            Field::Latency => "latency",
            Field::Throughput => "throughput",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub field: Field,
    pub op: CmpOp,
    pub value: f64,
}

/// Conjunction of comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub clauses: Vec<Comparison>,
}

impl Predicate {
    /// True when every clause holds. Clauses over latency or throughput are
    /// false on states without a stored center.
    pub fn eval(&self, state: &MdpState) -> bool {
        self.clauses.iter().all(|c| {
            let lhs = match c.field {
                Field::VmsNum => Some(state.size.0 as f64),
                Field::Latency => state.center.map(|m| m.latency_ms),
                Field::Throughput => state.center.map(|m| m.throughput),
            };
            lhs.is_some_and(|v| c.op.holds(v, c.value))
        })
    }

    /// Whether the predicate reads cluster-center metrics.
    pub fn needs_center(&self) -> bool {
        self.clauses.iter().any(|c| c.field != Field::VmsNum)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{}{}{}", c.field.name(), c.op.symbol(), c.value)?;
        }
        Ok(())
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser::new(s);
        let pred = p.predicate()?;
        p.end()?;
        Ok(pred)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityQuery {
    pub mode: QueryMode,
    pub predicate: Predicate,
}

impl ReachabilityQuery {
    pub fn max(predicate: Predicate) -> Self {
        ReachabilityQuery { mode: QueryMode::Max, predicate }
    }

    pub fn min(predicate: Predicate) -> Self {
        ReachabilityQuery { mode: QueryMode::Min, predicate }
    }
}

impl fmt::Display for ReachabilityQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            QueryMode::Max => "max",
            QueryMode::Min => "min",
        };
        write!(f, "P{mode}=? [ F {} ]", self.predicate)
    }
}

impl FromStr for ReachabilityQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser::new(s);
        p.keyword("P")?;
        let mode = if p.try_keyword("max") {
            QueryMode::Max
        } else if p.try_keyword("min") {
            QueryMode::Min
        } else {
            return Err(p.error("expected `max` or `min` after `P`"));
        };
        p.symbol("=")?;
        p.symbol("?")?;
        p.symbol("[")?;
        p.keyword("F")?;
        let predicate = p.predicate()?;
        p.symbol("]")?;
        p.end()?;
        Ok(ReachabilityQuery { mode, predicate })
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn try_symbol(&mut self, sym: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(sym) {
            self.pos += sym.len();
            true
        } else {
            false
        }
    }

    fn symbol(&mut self, sym: &str) -> Result<()> {
        if self.try_symbol(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{sym}`")))
        }
    }

    fn try_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        let next_is_ident = rest[kw.len().min(rest.len())..]
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
        // `P` directly precedes `max`/`min`, so it is matched as a bare prefix.
        if rest.starts_with(kw) && (kw == "P" || !next_is_ident) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.try_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`")))
        }
    }

    fn ident(&mut self) -> Result<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected a field name"));
        }
        self.pos += len;
        Ok((start, &self.src[start..self.pos]))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(self.rest().len());
        let text = &self.rest()[..len];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(if text.is_empty() { "expected a number".to_string() } else { format!("bad number `{text}`") }))?;
        self.pos += len;
        Ok(value)
    }

    fn comparison(&mut self) -> Result<Comparison> {
        let (start, name) = self.ident()?;
        let field = match name {
            "vms_num" => Field::VmsNum,
            "latency" => Field::Latency,
            "throughput" => Field::Throughput,
            other => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unknown field `{other}` (expected vms_num, latency or throughput)"),
                })
            }
        };
        self.skip_ws();
        // longest operators first
        let op = [
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("!=", CmpOp::Ne),
            ("==", CmpOp::Eq),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
            ("=", CmpOp::Eq),
        ]
        .into_iter()
        .find(|(sym, _)| self.rest().starts_with(sym));
        let Some((sym, op)) = op else {
            return Err(self.error("expected a comparison operator"));
        };
        self.pos += sym.len();
        let value = self.number()?;
        Ok(Comparison { field, op, value })
    }

    fn predicate(&mut self) -> Result<Predicate> {
        let mut clauses = vec![self.comparison()?];
        while self.try_symbol("&") {
            self.try_symbol("&");
            clauses.push(self.comparison()?);
        }
        Ok(Predicate { clauses })
    }

    fn end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }
}
