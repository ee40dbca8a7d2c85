use std::collections::BTreeSet;

use super::lexer::{lex, Tok};
use super::*;
use crate::matcher::{CompartmentOpen, CompartmentPattern, SimpleOpen, SimplePattern, Var, VarSort, WrapOpen};
use crate::multiset::Multiset;
use crate::term::{Atom, Compartment, SimpleTerm, Wrap, WrapAtom};

const KEYWORDS: [&str; 7] = ["model", "grid", "nse", "se", "sme", "cell", "monitor"];

type PResult<T> = Result<T, Diagnostic>;

// Untyped syntax tree shared by ground terms, patterns and open terms.
#[derive(Debug)]
enum RawSimple {
    Atom(Atom),
    Var(String),
    Comp(RawComp),
}

#[derive(Debug)]
struct RawComp {
    label: Label,
    wrap: Vec<(RawWrap, usize, Pos)>,
    content: Vec<(RawSimple, usize, Pos)>,
}

#[derive(Debug)]
enum RawWrap {
    Atom(WrapAtom),
    Var(String),
}

fn var_sort(name: &str) -> VarSort {
    let first = name.trim_start_matches('_').chars().next().unwrap_or('a');
    if first.is_ascii_uppercase() {
        VarSort::Content
    } else {
        VarSort::Wrap
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, Diagnostics> {
        lex(src).map(|toks| Self { toks, i: 0 }).map_err(Diagnostics)
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        Diagnostic::error(self.pos(), format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn uint(&mut self, what: &str) -> PResult<u32> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                u32::try_from(n).map_err(|_| Diagnostic::error(pos, format!("{what} {n} is too large")))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn label(&mut self) -> PResult<Label> {
        self.expect(Tok::LBrace)?;
        let pos = self.pos();
        let name = self.ident("a label")?;
        self.expect(Tok::RBrace)?;
        Label::new(&name).map_err(|e| Diagnostic::error(pos, e.to_string()))
    }

    fn rate(&mut self) -> PResult<f64> {
        self.expect(Tok::LBracket)?;
        let pos = self.pos();
        let rate = match self.peek().clone() {
            Tok::Int(n) => n as f64,
            Tok::Float(x) => x,
            Tok::Minus => return Err(Diagnostic::error(pos, "rate must be nonnegative")),
            _ => return Err(self.unexpected("a rate")),
        };
        self.advance();
        self.expect(Tok::RBracket)?;
        Ok(rate)
    }

    // -- terms --------------------------------------------------------------

    fn starts_item(&self) -> bool {
        matches!(self.peek(), Tok::Int(_) | Tok::Ident(_) | Tok::Var(_) | Tok::LParen)
    }

    /// `\e` or one or more items; with `allow_bare_empty`, zero items too.
    fn raw_term(&mut self, allow_bare_empty: bool) -> PResult<Vec<(RawSimple, usize, Pos)>> {
        if self.eat(&Tok::Empty) {
            return Ok(Vec::new());
        }
        let mut items = Vec::new();
        while self.starts_item() {
            items.push(self.raw_item()?);
        }
        if items.is_empty() && !allow_bare_empty {
            return Err(self.unexpected("a term (write `\\e` for the empty term)"));
        }
        Ok(items)
    }

    fn raw_item(&mut self) -> PResult<(RawSimple, usize, Pos)> {
        let pos = self.pos();
        let mut count = 1usize;
        if let Tok::Int(n) = *self.peek() {
            if n == 0 {
                return Err(Diagnostic::error(pos, "repetition count must be at least 1"));
            }
            count = usize::try_from(n).map_err(|_| Diagnostic::error(pos, "repetition count too large"))?;
            self.advance();
        }
        let simple = match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                RawSimple::Atom(Atom::new(&name).map_err(|e| Diagnostic::error(pos, e.to_string()))?)
            }
            Tok::Var(name) => {
                self.advance();
                RawSimple::Var(name)
            }
            Tok::LParen => RawSimple::Comp(self.raw_compartment()?),
            _ => return Err(self.unexpected("an atom, variable or compartment")),
        };
        Ok((simple, count, pos))
    }

    fn raw_compartment(&mut self) -> PResult<RawComp> {
        self.expect(Tok::LParen)?;
        let label = self.label()?;
        let mut wrap = Vec::new();
        loop {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Pipe => break,
                Tok::Empty => {
                    self.advance();
                }
                Tok::Int(_) if *self.peek_at(1) == Tok::Comma => {
                    let c = self.coordinate()?;
                    wrap.push((RawWrap::Atom(WrapAtom::Coord(c)), 1, pos));
                }
                Tok::Int(_) | Tok::Ident(_) | Tok::Var(_) => {
                    let (simple, count, pos) = self.raw_item()?;
                    let item = match simple {
                        RawSimple::Atom(a) => RawWrap::Atom(WrapAtom::Atom(a)),
                        RawSimple::Var(v) => RawWrap::Var(v),
                        RawSimple::Comp(_) => unreachable!("raw_item only sees ident/var here"),
                    };
                    wrap.push((item, count, pos));
                }
                _ => return Err(self.unexpected("a wrap atom, coordinate, variable or `|`")),
            }
        }
        self.expect(Tok::Pipe)?;
        let content = self.raw_term(true)?;
        self.expect(Tok::RParen)?;
        Ok(RawComp { label, wrap, content })
    }

    fn coordinate(&mut self) -> PResult<Coordinate> {
        let pos = self.pos();
        let (r, c) = self.pair()?;
        Coordinate::new(r, c).map_err(|e| Diagnostic::error(pos, e.to_string()))
    }

    /// `r , c` without range checks; coordinate sets are checked against
    /// the grid by the compiler.
    fn pair(&mut self) -> PResult<(u32, u32)> {
        let r = self.uint("a row")?;
        self.expect(Tok::Comma)?;
        let c = self.uint("a column")?;
        Ok((r, c))
    }

    // -- coordinates and directions -----------------------------------------

    fn coord_expr(&mut self) -> PResult<CoordSetExpr> {
        let mut items = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Star => {
                    self.advance();
                    items.push(CoordItem::WholeGrid);
                }
                Tok::LBracket if *self.peek_at(1) == Tok::Star => {
                    self.advance();
                    self.advance();
                    self.expect(Tok::RBracket)?;
                    items.push(CoordItem::WholeGrid);
                }
                Tok::Int(_) => {
                    let (r, c) = self.pair()?;
                    items.push(CoordItem::Single(r, c));
                }
                Tok::Ident(kw) if kw == "rect" => {
                    self.advance();
                    self.expect(Tok::LBracket)?;
                    let a = self.pair()?;
                    self.eat(&Tok::Comma);
                    let b = self.pair()?;
                    self.expect(Tok::RBracket)?;
                    items.push(CoordItem::Rect(a.0, a.1, b.0, b.1));
                }
                Tok::Ident(kw) if kw == "row" || kw == "col" => {
                    self.advance();
                    self.expect(Tok::LBracket)?;
                    let n = self.uint(if kw == "row" { "a row index" } else { "a column index" })?;
                    self.expect(Tok::RBracket)?;
                    items.push(if kw == "row" { CoordItem::Row(n) } else { CoordItem::Col(n) });
                }
                _ => break,
            }
        }
        if items.is_empty() {
            return Err(self.unexpected("a coordinate set"));
        }
        Ok(CoordSetExpr(items))
    }

    fn directions(&mut self) -> PResult<DirectionSet> {
        self.expect(Tok::LBracket)?;
        let mut dirs = BTreeSet::new();
        loop {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::RBracket => break,
                Tok::Comma => {
                    self.advance();
                }
                Tok::Plus => {
                    self.advance();
                    dirs.extend(Direction::ORTHOGONAL);
                }
                Tok::Star => {
                    self.advance();
                    dirs.extend(Direction::ALL);
                }
                Tok::Ident(name) => {
                    self.advance();
                    if name == "x" {
                        dirs.extend(Direction::DIAGONAL);
                    } else {
                        let d = Direction::from_name(&name)
                            .ok_or_else(|| Diagnostic::error(pos, format!("unknown direction `{name}`")))?;
                        dirs.insert(d);
                    }
                }
                _ => return Err(self.unexpected("a direction")),
            }
        }
        let pos = self.pos();
        self.expect(Tok::RBracket)?;
        if dirs.is_empty() {
            return Err(Diagnostic::error(pos, "direction set must not be empty"));
        }
        Ok(DirectionSet(dirs))
    }

    fn opt_coords(&mut self) -> PResult<Option<CoordSetExpr>> {
        if self.eat(&Tok::Lt) {
            let e = self.coord_expr()?;
            self.expect(Tok::Gt)?;
            Ok(Some(e))
        } else {
            Ok(None)
        }
    }

    fn opt_label(&mut self) -> PResult<Option<Label>> {
        if *self.peek() == Tok::LBrace {
            self.label().map(Some)
        } else {
            Ok(None)
        }
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        let items = self.raw_term(false)?;
        top_pattern(items)
    }

    fn open_term(&mut self) -> PResult<OpenTerm> {
        let items = self.raw_term(false)?;
        open_term(items)
    }

    fn ground(&mut self) -> PResult<Term> {
        let items = self.raw_term(false)?;
        ground(items)
    }

    // -- declarations -------------------------------------------------------

    fn end_decl(&mut self, start: Pos) -> PResult<()> {
        if self.eat(&Tok::Semi) {
            Ok(())
        } else {
            Err(Diagnostic::error(
                self.pos(),
                format!(
                    "missing `;` at the end of the declaration on line {} (found {})",
                    start.line,
                    self.peek().describe()
                ),
            ))
        }
    }

    /// Skips to just after the next `;`, or to the next keyword that starts
    /// a line.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi => {
                    self.advance();
                    return;
                }
                Tok::Ident(k) if KEYWORDS.contains(&k.as_str()) && self.starts_line() => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn starts_line(&self) -> bool {
        self.i > 0 && self.toks[self.i - 1].1.line < self.toks[self.i].1.line
    }
}

// -- raw tree conversion ------------------------------------------------------

fn ground(items: Vec<(RawSimple, usize, Pos)>) -> PResult<Term> {
    let mut out = Term::empty();
    for (s, n, pos) in items {
        let simple = match s {
            RawSimple::Atom(a) => SimpleTerm::Atom(a),
            RawSimple::Var(v) => {
                return Err(Diagnostic::error(pos, format!("variable `${v}` is not allowed in a ground term")))
            }
            RawSimple::Comp(c) => {
                let mut wrap = Wrap::new();
                for (w, k, wpos) in c.wrap {
                    match w {
                        RawWrap::Atom(a) => wrap.insert(a, k),
                        RawWrap::Var(v) => {
                            return Err(Diagnostic::error(
                                wpos,
                                format!("variable `${v}` is not allowed in a ground term"),
                            ))
                        }
                    }
                }
                SimpleTerm::Compartment(Box::new(Compartment { label: c.label, wrap, content: ground(c.content)? }))
            }
        };
        out.insert(simple, n);
    }
    Ok(out)
}

fn top_pattern(items: Vec<(RawSimple, usize, Pos)>) -> PResult<Pattern> {
    let pos = items.first().map(|i| i.2).unwrap_or_default();
    let (pattern, rest) = pattern_items(items)?;
    if let Some((v, vpos)) = rest {
        return Err(Diagnostic::error(
            vpos,
            format!("`${}`: the top-level remainder of a pattern is implicit and cannot be named", v.name),
        ));
    }
    pattern.check_linear().map_err(|e| Diagnostic::error(pos, e.to_string()))?;
    Ok(pattern)
}

/// Converts pattern items, returning the content variable if one occurs.
fn pattern_items(items: Vec<(RawSimple, usize, Pos)>) -> PResult<(Pattern, Option<(Var, Pos)>)> {
    let mut out: Vec<(SimplePattern, usize)> = Vec::new();
    let mut content_var: Option<(Var, Pos)> = None;
    for (s, n, pos) in items {
        match s {
            RawSimple::Atom(a) => out.push((SimplePattern::Atom(a), n)),
            RawSimple::Var(name) => {
                if var_sort(&name) != VarSort::Content {
                    return Err(Diagnostic::error(
                        pos,
                        format!("`${name}` is a wrap variable and cannot stand in a content position"),
                    ));
                }
                if n != 1 || content_var.is_some() {
                    return Err(Diagnostic::error(
                        pos,
                        "exactly one content variable may occur in a compartment content",
                    ));
                }
                content_var = Some((Var::content(&name), pos));
            }
            RawSimple::Comp(c) => {
                let mut wrap = Wrap::new();
                let mut wrap_var = None;
                for (w, k, wpos) in c.wrap {
                    match w {
                        RawWrap::Atom(a) => wrap.insert(a, k),
                        RawWrap::Var(name) => {
                            if var_sort(&name) != VarSort::Wrap {
                                return Err(Diagnostic::error(
                                    wpos,
                                    format!("`${name}` is a content variable and cannot stand in a wrap"),
                                ));
                            }
                            if k != 1 || wrap_var.is_some() {
                                return Err(Diagnostic::error(wpos, "exactly one wrap variable may occur in a wrap"));
                            }
                            wrap_var = Some(Var::wrap(&name));
                        }
                    }
                }
                let wrap_var =
                    wrap_var.ok_or_else(|| Diagnostic::error(pos, "a compartment pattern needs a wrap variable"))?;
                let (content, inner_var) = pattern_items(c.content)?;
                let (content_var, _) = inner_var
                    .ok_or_else(|| Diagnostic::error(pos, "a compartment pattern needs a content variable"))?;
                let cp = CompartmentPattern { label: c.label, wrap, wrap_var, content, content_var };
                out.push((SimplePattern::Compartment(Box::new(cp)), n));
            }
        }
    }
    Ok((Pattern(out.into_iter().collect()), content_var))
}

fn open_term(items: Vec<(RawSimple, usize, Pos)>) -> PResult<OpenTerm> {
    let mut out: Vec<(SimpleOpen, usize)> = Vec::new();
    for (s, n, pos) in items {
        let simple = match s {
            RawSimple::Atom(a) => SimpleOpen::Atom(a),
            RawSimple::Var(name) => {
                if var_sort(&name) != VarSort::Content {
                    return Err(Diagnostic::error(
                        pos,
                        format!("`${name}` is a wrap variable and cannot stand in a content position"),
                    ));
                }
                SimpleOpen::Var(Var::content(&name))
            }
            RawSimple::Comp(c) => {
                let mut wrap: Vec<(WrapOpen, usize)> = Vec::new();
                for (w, k, wpos) in c.wrap {
                    wrap.push(match w {
                        RawWrap::Atom(a) => (WrapOpen::Atom(a), k),
                        RawWrap::Var(name) => {
                            if var_sort(&name) != VarSort::Wrap {
                                return Err(Diagnostic::error(
                                    wpos,
                                    format!("`${name}` is a content variable and cannot stand in a wrap"),
                                ));
                            }
                            (WrapOpen::Var(Var::wrap(&name)), k)
                        }
                    });
                }
                SimpleOpen::Compartment(Box::new(CompartmentOpen {
                    label: c.label,
                    wrap: wrap.into_iter().collect::<Multiset<_>>(),
                    content: open_term(c.content)?,
                }))
            }
        };
        out.push((simple, n));
    }
    Ok(OpenTerm(out.into_iter().collect()))
}

// -- entry points -------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermMode {
    Ground,
    Pattern,
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermText {
    Ground(Term),
    Pattern(Pattern),
    Open(OpenTerm),
}

fn parse_whole<T>(text: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, Diagnostics> {
    let mut p = Parser::new(text)?;
    let value = f(&mut p).map_err(|d| Diagnostics(vec![d]))?;
    if *p.peek() != Tok::Eof {
        return Err(Diagnostics(vec![p.unexpected("end of input")]));
    }
    Ok(value)
}

/// Parses a term, a (top-level) pattern or an open term.
pub fn parse_term_text(text: &str, mode: TermMode) -> Result<TermText, Diagnostics> {
    match mode {
        TermMode::Ground => parse_ground_term(text).map(TermText::Ground),
        TermMode::Pattern => parse_pattern(text).map(TermText::Pattern),
        TermMode::Open => parse_open_term(text).map(TermText::Open),
    }
}

pub fn parse_ground_term(text: &str) -> Result<Term, Diagnostics> {
    parse_whole(text, Parser::ground)
}

pub fn parse_pattern(text: &str) -> Result<Pattern, Diagnostics> {
    parse_whole(text, Parser::pattern)
}

pub fn parse_open_term(text: &str) -> Result<OpenTerm, Diagnostics> {
    parse_whole(text, Parser::open_term)
}

pub fn parse_coord_expr(text: &str) -> Result<CoordSetExpr, Diagnostics> {
    parse_whole(text, Parser::coord_expr)
}

#[derive(Default)]
struct ModelBuilder {
    name: Option<String>,
    dims: Option<GridDims>,
    rules: Vec<RuleDecl>,
    cells: Vec<CellDecl>,
    monitors: Vec<MonitorDecl>,
    /// 0 header, 1 grid seen, 2 rules, 3 cells, 4 monitors.
    stage: u8,
}

fn declaration(p: &mut Parser, b: &mut ModelBuilder) -> PResult<()> {
    let start = p.pos();
    let kw = p.ident("a declaration keyword")?;
    let stage = match kw.as_str() {
        "model" => 0,
        "grid" => 1,
        "nse" | "se" | "sme" => 2,
        "cell" => 3,
        "monitor" => 4,
        other => {
            return Err(Diagnostic::error(
                start,
                format!("unknown declaration `{other}` (expected one of {})", KEYWORDS.join(", ")),
            ))
        }
    };
    match kw.as_str() {
        "model" if b.name.is_some() => return Err(Diagnostic::error(start, "duplicate `model` declaration")),
        "grid" if b.dims.is_some() => return Err(Diagnostic::error(start, "duplicate `grid` declaration")),
        "model" if b.stage > 0 => return Err(Diagnostic::error(start, "`model` must be the first declaration")),
        "grid" if b.name.is_none() || b.stage > 1 => {
            return Err(Diagnostic::error(start, "`grid` must directly follow `model`"))
        }
        _ if stage >= 2 && b.dims.is_none() => {
            return Err(Diagnostic::error(start, format!("`{kw}` before the `model` and `grid` declarations")))
        }
        _ if stage < b.stage => {
            return Err(Diagnostic::error(
                start,
                format!("`{kw}` is out of order: declarations go model, grid, rules, cells, monitors"),
            ))
        }
        _ => {}
    }
    b.stage = b.stage.max(stage);
    match kw.as_str() {
        "model" => {
            b.name = Some(p.ident("a model name")?);
            p.end_decl(start)?;
        }
        "grid" => {
            let rows = p.uint("the number of rows")?;
            p.expect(Tok::Comma)?;
            let cols = p.uint("the number of columns")?;
            if rows == 0 || cols == 0 {
                return Err(Diagnostic::error(start, "grid dimensions must be at least 1"));
            }
            b.dims = Some(GridDims { rows, cols });
            p.end_decl(start)?;
        }
        "nse" => {
            let label = p.label()?;
            let pattern = p.pattern()?;
            let rate = p.rate()?;
            let result = p.open_term()?;
            p.end_decl(start)?;
            b.rules.push(RuleDecl::Nse(NseDecl { pos: start, label, pattern, rate, result }));
        }
        "se" => {
            let coords = p.opt_coords()?;
            let label = p.label()?;
            let pattern = p.pattern()?;
            let rate = p.rate()?;
            let result_label = p.opt_label()?;
            let result = p.open_term()?;
            p.end_decl(start)?;
            b.rules.push(RuleDecl::Se(SeDecl { pos: start, coords, label, pattern, rate, result_label, result }));
        }
        "sme" => {
            let coords = p.opt_coords()?;
            let directions = p.directions()?;
            let label1 = p.label()?;
            let pattern1 = p.pattern()?;
            let label2 = p.label()?;
            let pattern2 = p.pattern()?;
            let rate = p.rate()?;
            let result_label1 = p.opt_label()?;
            let result1 = p.open_term()?;
            let result_label2 = if p.eat(&Tok::Underscore) { None } else { Some(p.label()?) };
            let result2 = p.open_term()?;
            p.end_decl(start)?;
            b.rules.push(RuleDecl::Sme(SmeDecl {
                pos: start,
                coords,
                directions,
                label1,
                pattern1,
                label2,
                pattern2,
                rate,
                result_label1,
                result1,
                result_label2,
                result2,
            }));
        }
        "cell" => {
            p.expect(Tok::Lt)?;
            let coords = p.coord_expr()?;
            p.expect(Tok::Gt)?;
            let label = p.label()?;
            let content = p.ground()?;
            p.end_decl(start)?;
            b.cells.push(CellDecl { pos: start, coords, label, content });
        }
        "monitor" => {
            let name = p.ident("a monitor name")?;
            let coords = p.opt_coords()?;
            let label = p.opt_label()?;
            let pattern = p.pattern()?;
            p.end_decl(start)?;
            b.monitors.push(MonitorDecl { pos: start, name, coords, label, pattern });
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Parses a whole model file. Either the full model or every diagnostic
/// found (the parser resynchronises at `;`).
pub fn parse_model(text: &str) -> Result<SurfaceModel, Diagnostics> {
    let mut p = Parser::new(text)?;
    let mut b = ModelBuilder::default();
    let mut errors = Vec::new();
    while *p.peek() != Tok::Eof {
        let before = p.i;
        if let Err(d) = declaration(&mut p, &mut b) {
            errors.push(d);
            if p.i == before {
                p.advance();
            }
            p.recover();
        }
    }
    let end = p.pos();
    if b.name.is_none() && !errors.iter().any(|d| d.message.contains("`model`")) {
        errors.push(Diagnostic::error(end, "missing `model` declaration"));
    }
    if b.dims.is_none() && !errors.iter().any(|d| d.message.contains("`grid`")) {
        errors.push(Diagnostic::error(end, "missing `grid` declaration"));
    }
    if !errors.is_empty() {
        return Err(Diagnostics(errors));
    }
    Ok(SurfaceModel {
        name: b.name.expect("checked above"),
        dims: b.dims.expect("checked above"),
        rules: b.rules,
        cells: b.cells,
        monitors: b.monitors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example_term() {
        let t = parse_ground_term("2 a b ({l} c d | e f)").unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.to_string(), "2 a b ({l} c d | e f)");
        assert!(parse_ground_term("\\e").unwrap().is_empty());
    }

    #[test]
    fn ground_mode_rejects_variables() {
        let err = parse_ground_term("a $X").unwrap_err();
        assert!(err.0[0].message.contains("not allowed"));
        assert_eq!(err.0[0].pos.col, 3);
    }

    #[test]
    fn parses_compartment_pattern() {
        let TermText::Pattern(p) = parse_term_text("({l1} a $x | $X)", TermMode::Pattern).unwrap() else { panic!() };
        let (SimplePattern::Compartment(c), 1) = p.0.get(0).unwrap() else { panic!() };
        assert_eq!(&*c.wrap_var.name, "x");
        assert_eq!(c.wrap_var.sort, VarSort::Wrap);
        assert_eq!(&*c.content_var.name, "X");
        assert_eq!(c.content_var.sort, VarSort::Content);
        assert_eq!(p.to_string(), "({l1} a $x | $X)");
    }

    #[test]
    fn pattern_mode_checks_linearity_and_shape() {
        assert!(parse_pattern("({l} $x | $X) ({m} $x | $Y)").is_err());
        assert!(parse_pattern("({l} a | $X)").is_err());
        assert!(parse_pattern("({l} $x | a)").is_err());
        assert!(parse_pattern("a $X").is_err());
        assert!(parse_pattern("({l} $X | $Y)").is_err());
        assert!(parse_pattern("({l} $x $y | $X)").is_err());
    }

    #[test]
    fn parses_coordinate_sets() {
        let e = parse_coord_expr("6,6 rect[1,1 3,2] col[5]").unwrap();
        assert_eq!(e.0, vec![CoordItem::Single(6, 6), CoordItem::Rect(1, 1, 3, 2), CoordItem::Col(5)]);
        assert_eq!(parse_coord_expr("*").unwrap().0, vec![CoordItem::WholeGrid]);
        assert_eq!(parse_coord_expr("[*]").unwrap().0, vec![CoordItem::WholeGrid]);
        assert_eq!(parse_coord_expr("row[2]").unwrap().0, vec![CoordItem::Row(2)]);
        assert!(parse_coord_expr("rect[1,1").is_err());
        assert!(parse_coord_expr("row[]").is_err());
        assert!(parse_coord_expr("").is_err());
    }

    #[test]
    fn parses_minimal_model() {
        let m = parse_model("model M ; grid 10 , 10 ;").unwrap();
        assert_eq!(m.name, "M");
        assert_eq!(m.dims, GridDims { rows: 10, cols: 10 });
        assert!(m.rules.is_empty() && m.cells.is_empty() && m.monitors.is_empty());
    }

    #[test]
    fn parses_every_rule_form() {
        let src = "model M ; grid 2 , 2 ;
            nse {PlantCell} nucleus [0.1] nucleus mRNA ;
            se <1,1 row[2]> {soil} Root [1e-2] {water} Root Hyp ;
            se {soil} Hyp [2] \\e ;
            sme [E, W] {soil} Tip {soil} \\e [3.5] Hyp _ Tip ;
            sme <*> [+ x] {a} n {b} \\e [1] {c} \\e {d} n ;
            cell <*> {soil} \\e ;
            monitor hyp <1,1> {soil} Hyp ;
            monitor avg Hyp ;";
        let m = parse_model(src).unwrap();
        assert_eq!(m.rules.len(), 5);
        let RuleDecl::Sme(sme) = &m.rules[3] else { panic!() };
        assert_eq!(sme.directions.len(), 2);
        assert!(sme.result_label1.is_none() && sme.result_label2.is_none());
        let RuleDecl::Sme(sme) = &m.rules[4] else { panic!() };
        assert_eq!(sme.directions.len(), 8);
        assert_eq!(sme.result_label2.as_ref().unwrap().name(), "d");
        let RuleDecl::Se(se) = &m.rules[1] else { panic!() };
        assert_eq!(se.rate, 0.01);
        assert_eq!(se.result_label.as_ref().unwrap().name(), "water");
        assert_eq!(m.monitors[1].coords, None);
        assert_eq!(m.monitors[1].label, None);

        let again = parse_model(&m.to_string()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn missing_semicolon_names_the_line() {
        let err = parse_model("model M ;\ngrid 2 , 2\nse {s} a [1] b ;").unwrap_err();
        assert_eq!(err.0.len(), 1, "{err}");
        assert!(err.0[0].message.contains("line 2"), "{err}");
        assert_eq!(err.0[0].pos.line, 3);
    }

    #[test]
    fn reports_order_and_duplicates() {
        let err = parse_model("model M ; grid 1 , 1 ; cell <*> {s} \\e ; se {s} a [1] b ;").unwrap_err();
        assert!(err.0[0].message.contains("out of order"));
        let err = parse_model("model M ; model N ; grid 1 , 1 ;").unwrap_err();
        assert!(err.0[0].message.contains("duplicate"));
        let err = parse_model("grid 1 , 1 ;").unwrap_err();
        assert!(!err.0.is_empty());
        let err = parse_model("model M ; grid 1 , 1 ; se {s} a [-1] b ;").unwrap_err();
        assert!(err.0[0].message.contains("nonnegative"));
    }

    #[test]
    fn collects_several_errors() {
        let err = parse_model("model M ; grid 1 , 1 ;\nse {s} a [x] b ;\nnse {l} ( [1] b ;\n").unwrap_err();
        assert_eq!(err.0.len(), 2, "{err}");
        assert_eq!(err.0[0].pos.line, 2);
        assert_eq!(err.0[1].pos.line, 3);
    }
}
