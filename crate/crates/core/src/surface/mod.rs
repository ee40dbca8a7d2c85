//! The spatial surface language: a declaration file naming the grid, the
//! non-spatial (`nse`), spatial (`se`) and spatial movement (`sme`) events,
//! the grid cells and the monitors.
//!
//! ```text
//! model NAME ;
//! grid R , C ;
//! nse { L } PATTERN [ RATE ] OPENTERM ;
//! se < COORDS >? { LS } PATTERN [ RATE ] ( { LS' } )? OPENTERM ;
//! sme < COORDS >? [ DIRS ] { L1 } P1 { L2 } P2 [ RATE ] ( { L1' } )? O1 ( { L2' } | _ ) O2 ;
//! cell < COORDS > { LS } TERM ;
//! monitor NAME ( < COORDS > )? ( { LS } )? PATTERN ;
//! ```

mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use crate::matcher::{OpenTerm, Pattern};
use crate::term::{Coordinate, Label, Term};

pub use parser::{
    parse_coord_expr, parse_ground_term, parse_model, parse_open_term, parse_pattern, parse_term_text, TermMode,
    TermText,
};

/// A 1-based source position. Positions never take part in equality, so
/// models compare equal regardless of layout.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(pos: Pos, message: impl Into<String>) -> Self {
        Self { pos, severity: Severity::Error, message: message.into() }
    }

    pub fn warning(pos: Pos, message: impl Into<String>) -> Self {
        Self { pos, severity: Severity::Warning, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}:{}: {kind}: {}", self.pos.line, self.pos.col, self.message)
    }
}

/// A non-empty list of diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoordItem {
    Single(u32, u32),
    /// Corners `(r, c)` and `(r', c')`.
    Rect(u32, u32, u32, u32),
    Row(u32),
    Col(u32),
    WholeGrid,
}

/// A union of coordinate set constructors, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordSetExpr(pub Vec<CoordItem>);

impl CoordSetExpr {
    pub fn whole_grid() -> Self {
        Self(vec![CoordItem::WholeGrid])
    }
}

impl fmt::Display for CoordItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordItem::Single(r, c) => write!(f, "{r},{c}"),
            CoordItem::Rect(r, c, r2, c2) => write!(f, "rect[{r},{c} {r2},{c2}]"),
            CoordItem::Row(i) => write!(f, "row[{i}]"),
            CoordItem::Col(j) => write!(f, "col[{j}]"),
            CoordItem::WholeGrid => f.write_str("*"),
        }
    }
}

impl fmt::Display for CoordSetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

/// Grid directions, declared in expansion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    N,
    S,
    E,
    W,
    NW,
    NE,
    SW,
    SE,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::S,
        Direction::E,
        Direction::W,
        Direction::NW,
        Direction::NE,
        Direction::SW,
        Direction::SE,
    ];
    pub const ORTHOGONAL: [Direction; 4] = [Direction::N, Direction::S, Direction::E, Direction::W];
    pub const DIAGONAL: [Direction; 4] = [Direction::NW, Direction::NE, Direction::SW, Direction::SE];

    /// `(row, column)` offset.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Direction::N => (-1, 0),
            Direction::S => (1, 0),
            Direction::E => (0, 1),
            Direction::W => (0, -1),
            Direction::NW => (-1, -1),
            Direction::NE => (-1, 1),
            Direction::SW => (1, -1),
            Direction::SE => (1, 1),
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::S => "S",
            Direction::E => "E",
            Direction::W => "W",
            Direction::NW => "NW",
            Direction::NE => "NE",
            Direction::SW => "SW",
            Direction::SE => "SE",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectionSet(pub BTreeSet<Direction>);

impl DirectionSet {
    pub fn iter(&self) -> impl Iterator<Item = Direction> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<Direction> for DirectionSet {
    fn from_iter<I: IntoIterator<Item = Direction>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for DirectionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Direction::name).collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    pub rows: u32,
    pub cols: u32,
}

impl GridDims {
    pub fn contains(&self, c: Coordinate) -> bool {
        (1..=self.rows).contains(&c.row) && (1..=self.cols).contains(&c.col)
    }

    pub fn cells(&self) -> u64 {
        u64::from(self.rows) * u64::from(self.cols)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NseDecl {
    pub pos: Pos,
    pub label: Label,
    pub pattern: Pattern,
    pub rate: f64,
    pub result: OpenTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeDecl {
    pub pos: Pos,
    /// `None` means the whole grid.
    pub coords: Option<CoordSetExpr>,
    pub label: Label,
    pub pattern: Pattern,
    pub rate: f64,
    /// `None` keeps the label.
    pub result_label: Option<Label>,
    pub result: OpenTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmeDecl {
    pub pos: Pos,
    pub coords: Option<CoordSetExpr>,
    pub directions: DirectionSet,
    pub label1: Label,
    pub pattern1: Pattern,
    pub label2: Label,
    pub pattern2: Pattern,
    pub rate: f64,
    pub result_label1: Option<Label>,
    pub result1: OpenTerm,
    pub result_label2: Option<Label>,
    pub result2: OpenTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleDecl {
    Nse(NseDecl),
    Se(SeDecl),
    Sme(SmeDecl),
}

impl RuleDecl {
    pub fn pos(&self) -> Pos {
        match self {
            RuleDecl::Nse(d) => d.pos,
            RuleDecl::Se(d) => d.pos,
            RuleDecl::Sme(d) => d.pos,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            RuleDecl::Nse(_) => "nse",
            RuleDecl::Se(_) => "se",
            RuleDecl::Sme(_) => "sme",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellDecl {
    pub pos: Pos,
    pub coords: CoordSetExpr,
    pub label: Label,
    pub content: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorDecl {
    pub pos: Pos,
    pub name: String,
    pub coords: Option<CoordSetExpr>,
    pub label: Option<Label>,
    pub pattern: Pattern,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModel {
    pub name: String,
    pub dims: GridDims,
    pub rules: Vec<RuleDecl>,
    pub cells: Vec<CellDecl>,
    pub monitors: Vec<MonitorDecl>,
}

fn opt_coords(f: &mut fmt::Formatter<'_>, coords: &Option<CoordSetExpr>) -> fmt::Result {
    match coords {
        Some(c) => write!(f, " <{c}>"),
        None => Ok(()),
    }
}

fn opt_label(f: &mut fmt::Formatter<'_>, label: &Option<Label>) -> fmt::Result {
    match label {
        Some(l) => write!(f, " {{{l}}}"),
        None => Ok(()),
    }
}

impl fmt::Display for RuleDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleDecl::Nse(d) => write!(f, "nse {{{}}} {} [{}] {} ;", d.label, d.pattern, d.rate, d.result),
            RuleDecl::Se(d) => {
                f.write_str("se")?;
                opt_coords(f, &d.coords)?;
                write!(f, " {{{}}} {} [{}]", d.label, d.pattern, d.rate)?;
                opt_label(f, &d.result_label)?;
                write!(f, " {} ;", d.result)
            }
            RuleDecl::Sme(d) => {
                f.write_str("sme")?;
                opt_coords(f, &d.coords)?;
                write!(
                    f,
                    " [{}] {{{}}} {} {{{}}} {} [{}]",
                    d.directions, d.label1, d.pattern1, d.label2, d.pattern2, d.rate
                )?;
                opt_label(f, &d.result_label1)?;
                write!(f, " {}", d.result1)?;
                match &d.result_label2 {
                    Some(l) => write!(f, " {{{l}}}")?,
                    None => f.write_str(" _")?,
                }
                write!(f, " {} ;", d.result2)
            }
        }
    }
}

impl fmt::Display for SurfaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {} ;", self.name)?;
        writeln!(f, "grid {} , {} ;", self.dims.rows, self.dims.cols)?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        for c in &self.cells {
            writeln!(f, "cell <{}> {{{}}} {} ;", c.coords, c.label, c.content)?;
        }
        for m in &self.monitors {
            write!(f, "monitor {}", m.name)?;
            opt_coords(f, &m.coords)?;
            opt_label(f, &m.label)?;
            writeln!(f, " {} ;", m.pattern)?;
        }
        Ok(())
    }
}
