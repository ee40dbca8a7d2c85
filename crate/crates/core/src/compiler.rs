//! Lowering of a [`SurfaceModel`] to plain CWC rules over a grid of spatial
//! compartments.
//!
//! `se` and `sme` declarations become `top` rules, one per coordinate (and
//! per direction for `sme`), whose patterns pin the coordinate in the wrap of
//! the spatial compartments involved. The remainder variables introduced
//! here all start with `_`, which user variables may not.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::matcher::{
    CompartmentOpen, CompartmentPattern, OpenTerm, Pattern, RewriteRule, SimpleOpen, SimplePattern, Var, WrapOpen,
};
use crate::monitor::{Monitor, MonitorTarget};
use crate::multiset::Multiset;
use crate::surface::{
    CoordItem, CoordSetExpr, Diagnostic, Diagnostics, Direction, GridDims, MonitorDecl, Pos, RuleDecl, SurfaceModel,
};
use crate::term::{Compartment, Coordinate, Label, LabelKind, SimpleTerm, Term, Wrap, WrapAtom};

pub const GROUND_HEADER: &str = "cwc-ground v1";

const WRAP_VAR_1: &str = "_x";
const CONTENT_VAR_1: &str = "_X";
const WRAP_VAR_2: &str = "_y";
const CONTENT_VAR_2: &str = "_Y";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoordError {
    #[error("coordinate {0} lies outside the {1}x{2} grid")]
    OutOfBounds(String, u32, u32),
    #[error("`{0}` is empty: its first corner must not lie below or right of the second")]
    EmptyRect(String),
}

/// Expands a coordinate set expression against the grid, row-major.
pub fn eval_coords(e: &CoordSetExpr, dims: GridDims) -> Result<BTreeSet<Coordinate>, CoordError> {
    let oob = |r: u32, c: u32| CoordError::OutOfBounds(format!("{r},{c}"), dims.rows, dims.cols);
    let check = |r: u32, c: u32| {
        if r >= 1 && c >= 1 && r <= dims.rows && c <= dims.cols {
            Ok(())
        } else {
            Err(oob(r, c))
        }
    };
    let mut out = BTreeSet::new();
    let mut rect = |r1: u32, c1: u32, r2: u32, c2: u32| {
        for row in r1..=r2 {
            for col in c1..=c2 {
                out.insert(Coordinate { row, col });
            }
        }
    };
    for item in &e.0 {
        match *item {
            CoordItem::Single(r, c) => {
                check(r, c)?;
                rect(r, c, r, c);
            }
            CoordItem::Rect(r1, c1, r2, c2) => {
                check(r1, c1)?;
                check(r2, c2)?;
                if r1 > r2 || c1 > c2 {
                    return Err(CoordError::EmptyRect(CoordSetExpr(vec![item.clone()]).to_string()));
                }
                rect(r1, c1, r2, c2);
            }
            CoordItem::Row(i) => {
                check(i, 1)?;
                rect(i, 1, i, dims.cols);
            }
            CoordItem::Col(j) => {
                check(1, j)?;
                rect(1, j, dims.rows, j);
            }
            CoordItem::WholeGrid => rect(1, 1, dims.rows, dims.cols),
        }
    }
    Ok(out)
}

/// The neighbour of `c` in direction `d`, if it lies on the grid.
pub fn shift(c: Coordinate, d: Direction, dims: GridDims) -> Option<Coordinate> {
    let (dr, dc) = d.offset();
    let row = u32::try_from(i64::from(c.row) + dr).ok()?;
    let col = u32::try_from(i64::from(c.col) + dc).ok()?;
    let next = Coordinate { row, col };
    (row >= 1 && col >= 1 && dims.contains(next)).then_some(next)
}

#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub name: String,
    pub dims: GridDims,
    /// Content of the root compartment.
    pub initial: Term,
    pub rules: Vec<RewriteRule>,
    /// For each rule, the index of the declaration it came from.
    pub rule_origins: Vec<usize>,
    pub monitors: Vec<Monitor>,
    pub spatial_labels: BTreeSet<Label>,
}

impl CompiledModel {
    pub fn label_kind(&self, label: &Label) -> LabelKind {
        if label.is_top() {
            LabelKind::Top
        } else if self.spatial_labels.contains(label) {
            LabelKind::Spatial
        } else {
            LabelKind::Ordinary
        }
    }

    /// A model with no grid bookkeeping: just rules over a root content.
    pub fn from_rules(name: &str, initial: Term, rules: Vec<RewriteRule>, monitors: Vec<Monitor>) -> Self {
        let rule_origins = (0..rules.len()).collect();
        Self {
            name: name.to_owned(),
            dims: GridDims { rows: 1, cols: 1 },
            initial,
            rules,
            rule_origins,
            monitors,
            spatial_labels: BTreeSet::new(),
        }
    }
}

// -- structure walkers --------------------------------------------------------

#[derive(Default)]
struct Inventory {
    labels: Vec<Label>,
    coords: bool,
    vars: Vec<Var>,
}

fn inspect_wrap(w: &Wrap, inv: &mut Inventory) {
    inv.coords |= w.iter().any(|(a, _)| matches!(a, WrapAtom::Coord(_)));
}

fn inspect_term(t: &Term, inv: &mut Inventory) {
    for (s, _) in t.iter() {
        if let SimpleTerm::Compartment(c) = s {
            inv.labels.push(c.label.clone());
            inspect_wrap(&c.wrap, inv);
            inspect_term(&c.content, inv);
        }
    }
}

fn inspect_pattern(p: &Pattern, inv: &mut Inventory) {
    for (s, _) in p.0.iter() {
        if let SimplePattern::Compartment(c) = s {
            inv.labels.push(c.label.clone());
            inspect_wrap(&c.wrap, inv);
            inspect_pattern(&c.content, inv);
        }
    }
    inv.vars.extend(p.variables());
}

fn inspect_open(o: &OpenTerm, inv: &mut Inventory) {
    for (s, _) in o.0.iter() {
        if let SimpleOpen::Compartment(c) = s {
            inv.labels.push(c.label.clone());
            inv.coords |= c.wrap.iter().any(|(w, _)| matches!(w, WrapOpen::Atom(WrapAtom::Coord(_))));
            inspect_open(&c.content, inv);
        }
    }
    inv.vars.extend(o.variables());
}

// -- validation ---------------------------------------------------------------

/// Labels that name grid cells: those of cell declarations and of every
/// spatial and movement event.
pub fn spatial_labels(model: &SurfaceModel) -> BTreeSet<Label> {
    let mut out = BTreeSet::new();
    for cell in &model.cells {
        out.insert(cell.label.clone());
    }
    for rule in &model.rules {
        match rule {
            RuleDecl::Nse(_) => {}
            RuleDecl::Se(se) => {
                out.insert(se.label.clone());
                out.extend(se.result_label.clone());
            }
            RuleDecl::Sme(sme) => {
                out.insert(sme.label1.clone());
                out.insert(sme.label2.clone());
                out.extend(sme.result_label1.clone());
                out.extend(sme.result_label2.clone());
            }
        }
    }
    out
}

struct Checker<'a> {
    dims: GridDims,
    spatial: &'a BTreeSet<Label>,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn error(&mut self, pos: Pos, msg: impl Into<String>) {
        self.out.push(Diagnostic::error(pos, msg));
    }

    fn coords(&mut self, pos: Pos, what: &str, e: Option<&CoordSetExpr>) -> BTreeSet<Coordinate> {
        let whole = CoordSetExpr::whole_grid();
        match eval_coords(e.unwrap_or(&whole), self.dims) {
            Ok(set) => set,
            Err(err) => {
                self.error(pos, format!("{what}: {err}"));
                BTreeSet::new()
            }
        }
    }

    fn spatial_label(&mut self, pos: Pos, what: &str, label: &Label) {
        if label.is_top() {
            self.error(pos, format!("{what}: `top` is reserved for the root compartment"));
        }
    }

    /// Nested compartments must be ordinary and carry no coordinates.
    fn nested(&mut self, pos: Pos, what: &str, inv: &Inventory) {
        for l in &inv.labels {
            if l.is_top() {
                self.error(pos, format!("{what}: `top` is reserved for the root compartment"));
            } else if self.spatial.contains(l) {
                self.error(pos, format!("{what}: spatial label `{l}` used for a nested compartment"));
            }
        }
        if inv.coords {
            self.error(pos, format!("{what}: coordinates may only appear on grid cells"));
        }
        for v in &inv.vars {
            if v.name.starts_with('_') {
                self.error(pos, format!("{what}: variable names starting with `_` are reserved ({v})"));
            }
        }
    }

    fn rate(&mut self, pos: Pos, what: &str, k: f64) {
        if !(k.is_finite() && k >= 0.0) {
            self.error(pos, format!("{what}: rate {k} must be a finite nonnegative number"));
        }
    }

    fn pattern(&mut self, pos: Pos, what: &str, p: &Pattern) -> Inventory {
        let mut inv = Inventory::default();
        inspect_pattern(p, &mut inv);
        if let Err(e) = p.check_linear() {
            self.error(pos, format!("{what}: {e}"));
        }
        self.nested(pos, what, &inv);
        inv
    }

    fn open(&mut self, pos: Pos, what: &str, o: &OpenTerm, bound: &[Var]) {
        let mut inv = Inventory::default();
        inspect_open(o, &mut inv);
        self.nested(pos, what, &inv);
        for v in &inv.vars {
            if !bound.contains(v) {
                self.error(pos, format!("{what}: variable {v} of the result does not occur in the pattern"));
            }
        }
    }
}

/// Checks a model. It compiles iff no diagnostic is an error; warnings flag
/// suspicious but legal constructs.
pub fn validate(model: &SurfaceModel) -> Vec<Diagnostic> {
    let spatial = spatial_labels(model);
    let mut ck = Checker { dims: model.dims, spatial: &spatial, out: Vec::new() };

    for rule in &model.rules {
        let pos = rule.pos();
        let what = rule.keyword();
        match rule {
            RuleDecl::Nse(d) => {
                if spatial.contains(&d.label) {
                    ck.error(pos, format!("nse: `{}` is a spatial label; use `se` for events in grid cells", d.label));
                }
                ck.rate(pos, what, d.rate);
                let inv = ck.pattern(pos, what, &d.pattern);
                ck.open(pos, what, &d.result, &inv.vars);
            }
            RuleDecl::Se(d) => {
                ck.coords(pos, what, d.coords.as_ref());
                ck.spatial_label(pos, what, &d.label);
                if let Some(l) = &d.result_label {
                    ck.spatial_label(pos, what, l);
                }
                ck.rate(pos, what, d.rate);
                let inv = ck.pattern(pos, what, &d.pattern);
                ck.open(pos, what, &d.result, &inv.vars);
            }
            RuleDecl::Sme(d) => {
                ck.coords(pos, what, d.coords.as_ref());
                for l in [Some(&d.label1), Some(&d.label2), d.result_label1.as_ref(), d.result_label2.as_ref()]
                    .into_iter()
                    .flatten()
                {
                    ck.spatial_label(pos, what, l);
                }
                ck.rate(pos, what, d.rate);
                let inv1 = ck.pattern(pos, what, &d.pattern1);
                let inv2 = ck.pattern(pos, what, &d.pattern2);
                for v in &inv1.vars {
                    if inv2.vars.contains(v) {
                        ck.error(pos, format!("sme: variable {v} occurs in both patterns"));
                    }
                }
                let bound: Vec<Var> = inv1.vars.into_iter().chain(inv2.vars).collect();
                ck.open(pos, what, &d.result1, &bound);
                ck.open(pos, what, &d.result2, &bound);
            }
        }
    }

    let mut owner: BTreeMap<Coordinate, Pos> = BTreeMap::new();
    for cell in &model.cells {
        let coords = ck.coords(cell.pos, "cell", Some(&cell.coords));
        ck.spatial_label(cell.pos, "cell", &cell.label);
        let mut inv = Inventory::default();
        inspect_term(&cell.content, &mut inv);
        ck.nested(cell.pos, "cell", &inv);
        for c in coords {
            if let Some(prev) = owner.insert(c, cell.pos) {
                ck.error(
                    cell.pos,
                    format!("cell: coordinate {c} is already covered by the cell declaration on line {}", prev.line),
                );
            }
        }
    }
    let missing: Vec<Coordinate> = eval_coords(&CoordSetExpr::whole_grid(), model.dims)
        .expect("whole grid is in bounds")
        .into_iter()
        .filter(|c| !owner.contains_key(c))
        .collect();
    if !missing.is_empty() {
        let shown: Vec<String> = missing.iter().take(8).map(Coordinate::to_string).collect();
        let more = if missing.len() > 8 { format!(" and {} more", missing.len() - 8) } else { String::new() };
        let pos = model.cells.last().map(|c| c.pos).unwrap_or_default();
        ck.error(pos, format!("the cell declarations do not cover the grid: missing {}{more}", shown.join(" ")));
    }

    for m in &model.monitors {
        if m.coords.is_some() {
            ck.coords(m.pos, "monitor", m.coords.as_ref());
        }
        let inv = ck.pattern(m.pos, "monitor", &m.pattern);
        if let Some(l) = &m.label {
            ck.spatial_label(m.pos, "monitor", l);
            if !l.is_top() && !spatial.contains(l) {
                ck.out.push(Diagnostic::warning(
                    m.pos,
                    format!("monitor `{}`: `{l}` is not a spatial label of this model, so it always reads 0", m.name),
                ));
            }
        }
        if !inv.vars.is_empty() {
            ck.out.push(Diagnostic::warning(
                m.pos,
                format!("monitor `{}`: pattern contains variables; the monitor counts its matches", m.name),
            ));
        }
    }
    ck.out
}

// -- expansion ----------------------------------------------------------------

fn cell_pattern(label: &Label, c: Coordinate, content: &Pattern, wrap_var: &str, content_var: &str) -> SimplePattern {
    let mut wrap = Wrap::new();
    wrap.insert(WrapAtom::Coord(c), 1);
    SimplePattern::Compartment(Box::new(CompartmentPattern {
        label: label.clone(),
        wrap,
        wrap_var: Var::wrap(wrap_var),
        content: content.clone(),
        content_var: Var::content(content_var),
    }))
}

fn cell_open(label: &Label, c: Coordinate, content: &OpenTerm, wrap_var: &str, content_var: &str) -> SimpleOpen {
    let wrap: Multiset<WrapOpen> =
        [(WrapOpen::Atom(WrapAtom::Coord(c)), 1), (WrapOpen::Var(Var::wrap(wrap_var)), 1)].into_iter().collect();
    let mut content = content.0.clone();
    content.insert(SimpleOpen::Var(Var::content(content_var)), 1);
    SimpleOpen::Compartment(Box::new(CompartmentOpen { label: label.clone(), wrap, content: OpenTerm(content) }))
}

fn expand_monitor(m: &MonitorDecl, dims: GridDims, spatial: &BTreeSet<Label>) -> Result<Vec<Monitor>, Diagnostic> {
    let mk = |name: String, target, label: Option<Label>| {
        Monitor::new(name, target, label, m.pattern.clone())
            .map_err(|e| Diagnostic::error(m.pos, format!("monitor `{}`: {e}", m.name)))
    };
    let Some(coords) = &m.coords else {
        return Ok(vec![mk(m.name.clone(), MonitorTarget::GridAverage, m.label.clone())?]);
    };
    let coords = eval_coords(coords, dims).map_err(|e| Diagnostic::error(m.pos, format!("monitor: {e}")))?;
    let mut out = Vec::new();
    for c in coords {
        match &m.label {
            Some(l) => out.push(mk(format!("{}@{c}", m.name), MonitorTarget::Cell(c), Some(l.clone()))?),
            None => {
                for l in spatial {
                    out.push(mk(format!("{}@{c}:{l}", m.name), MonitorTarget::Cell(c), Some(l.clone()))?);
                }
            }
        }
    }
    Ok(out)
}

/// Compiles a model, or returns every error found by [`validate`].
pub fn compile(model: &SurfaceModel) -> Result<CompiledModel, Diagnostics> {
    let errors: Vec<Diagnostic> = validate(model).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(Diagnostics(errors));
    }
    let dims = model.dims;
    let spatial = spatial_labels(model);
    let coords_of =
        |e: Option<&CoordSetExpr>| eval_coords(e.unwrap_or(&CoordSetExpr::whole_grid()), dims).expect("validated");
    let fail = |pos: Pos, e: crate::matcher::MatchError| Diagnostics(vec![Diagnostic::error(pos, e.to_string())]);

    let mut rules = Vec::new();
    let mut rule_origins = Vec::new();
    for (index, decl) in model.rules.iter().enumerate() {
        let pos = decl.pos();
        match decl {
            RuleDecl::Nse(d) => {
                rules.push(
                    RewriteRule::new(d.label.clone(), d.pattern.clone(), d.result.clone(), d.rate)
                        .map_err(|e| fail(pos, e))?,
                );
                rule_origins.push(index);
            }
            RuleDecl::Se(d) => {
                let to = d.result_label.as_ref().unwrap_or(&d.label);
                for c in coords_of(d.coords.as_ref()) {
                    let pattern = Pattern(
                        [(cell_pattern(&d.label, c, &d.pattern, WRAP_VAR_1, CONTENT_VAR_1), 1)].into_iter().collect(),
                    );
                    let result =
                        OpenTerm([(cell_open(to, c, &d.result, WRAP_VAR_1, CONTENT_VAR_1), 1)].into_iter().collect());
                    rules.push(RewriteRule::new(Label::top(), pattern, result, d.rate).map_err(|e| fail(pos, e))?);
                    rule_origins.push(index);
                }
            }
            RuleDecl::Sme(d) => {
                let to1 = d.result_label1.as_ref().unwrap_or(&d.label1);
                let to2 = d.result_label2.as_ref().unwrap_or(&d.label2);
                for c in coords_of(d.coords.as_ref()) {
                    for dir in d.directions.iter() {
                        let Some(n) = shift(c, dir, dims) else { continue };
                        let pattern = Pattern(
                            [
                                (cell_pattern(&d.label1, c, &d.pattern1, WRAP_VAR_1, CONTENT_VAR_1), 1),
                                (cell_pattern(&d.label2, n, &d.pattern2, WRAP_VAR_2, CONTENT_VAR_2), 1),
                            ]
                            .into_iter()
                            .collect(),
                        );
                        let result = OpenTerm(
                            [
                                (cell_open(to1, c, &d.result1, WRAP_VAR_1, CONTENT_VAR_1), 1),
                                (cell_open(to2, n, &d.result2, WRAP_VAR_2, CONTENT_VAR_2), 1),
                            ]
                            .into_iter()
                            .collect(),
                        );
                        rules.push(RewriteRule::new(Label::top(), pattern, result, d.rate).map_err(|e| fail(pos, e))?);
                        rule_origins.push(index);
                    }
                }
            }
        }
    }

    let mut initial = Term::empty();
    for cell in &model.cells {
        for c in coords_of(Some(&cell.coords)) {
            let mut wrap = Wrap::new();
            wrap.insert(WrapAtom::Coord(c), 1);
            initial.insert(
                SimpleTerm::Compartment(Box::new(Compartment {
                    label: cell.label.clone(),
                    wrap,
                    content: cell.content.clone(),
                })),
                1,
            );
        }
    }

    let mut monitors = Vec::new();
    for m in &model.monitors {
        monitors.extend(expand_monitor(m, dims, &spatial).map_err(|d| Diagnostics(vec![d]))?);
    }

    Ok(CompiledModel {
        name: model.name.clone(),
        dims,
        initial,
        rules,
        rule_origins,
        monitors,
        spatial_labels: spatial,
    })
}

/// Deterministic text form of a compiled model.
pub fn emit_ground_model(m: &CompiledModel) -> String {
    let mut out = String::new();
    writeln!(out, "{GROUND_HEADER}").unwrap();
    writeln!(out, "model {}", m.name).unwrap();
    writeln!(out, "grid {},{}", m.dims.rows, m.dims.cols).unwrap();
    writeln!(out, "initial {}", m.initial).unwrap();
    for (rule, origin) in m.rules.iter().zip(&m.rule_origins) {
        writeln!(out, "rule {origin} {rule} ;").unwrap();
    }
    for mon in &m.monitors {
        writeln!(out, "monitor {mon}").unwrap();
    }
    out
}

impl fmt::Display for CompiledModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_ground_model(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_coord_expr, parse_model};

    fn dims(rows: u32, cols: u32) -> GridDims {
        GridDims { rows, cols }
    }

    fn coord(row: u32, col: u32) -> Coordinate {
        Coordinate { row, col }
    }

    #[test]
    fn evaluates_coordinate_shorthands() {
        let row = eval_coords(&parse_coord_expr("row[2]").unwrap(), dims(3, 4)).unwrap();
        assert_eq!(row.into_iter().collect::<Vec<_>>(), (1..=4).map(|c| coord(2, c)).collect::<Vec<_>>());
        assert_eq!(eval_coords(&parse_coord_expr("*").unwrap(), dims(2, 2)).unwrap().len(), 4);
        let col = eval_coords(&parse_coord_expr("col[3]").unwrap(), dims(2, 3)).unwrap();
        assert_eq!(col.into_iter().collect::<Vec<_>>(), vec![coord(1, 3), coord(2, 3)]);
        assert!(eval_coords(&parse_coord_expr("0,5").unwrap(), dims(6, 6)).is_err());
        assert!(eval_coords(&parse_coord_expr("row[4]").unwrap(), dims(3, 3)).is_err());
        assert!(matches!(
            eval_coords(&parse_coord_expr("rect[2,2 1,1]").unwrap(), dims(3, 3)),
            Err(CoordError::EmptyRect(_))
        ));
    }

    #[test]
    fn shifts_clip_at_the_border() {
        assert_eq!(shift(coord(1, 1), Direction::E, dims(3, 3)), Some(coord(1, 2)));
        assert_eq!(shift(coord(1, 3), Direction::N, dims(3, 3)), None);
        assert_eq!(shift(coord(2, 2), Direction::SE, dims(10, 10)), Some(coord(3, 3)));
        assert_eq!(shift(coord(3, 3), Direction::SE, dims(3, 3)), None);
    }

    #[test]
    fn se_expands_per_coordinate() {
        let m = parse_model(
            "model M ; grid 2 , 2 ;
             se <row[1]> {soil} a [2] {wet} b ;
             cell <*> {soil} a ;",
        )
        .unwrap();
        let c = compile(&m).unwrap();
        assert_eq!(c.rules.len(), 2);
        assert_eq!(c.rules[0].to_string(), "{top} ({soil} 1,1 $_x | a $_X) [2] ({wet} 1,1 $_x | b $_X)");
        assert_eq!(c.rules[1].to_string(), "{top} ({soil} 1,2 $_x | a $_X) [2] ({wet} 1,2 $_x | b $_X)");
        assert_eq!(c.label_kind(&Label::new("wet").unwrap()), LabelKind::Spatial);
        assert_eq!(c.initial.len(), 4);
    }

    #[test]
    fn sme_expands_per_coordinate_and_direction() {
        let m = parse_model(
            "model M ; grid 1 , 3 ;
             sme [E, W] {soil} Tip {soil} \\e [1] Hyp _ Tip ;
             cell <*> {soil} \\e ;",
        )
        .unwrap();
        let c = compile(&m).unwrap();
        assert_eq!(c.rules.len(), 4);
        assert_eq!(
            c.rules[0].to_string(),
            "{top} ({soil} 1,1 $_x | Tip $_X) ({soil} 1,2 $_y | $_Y) [1] ({soil} 1,1 $_x | Hyp $_X) ({soil} 1,2 $_y | Tip $_Y)"
        );
        assert_eq!(c.rule_origins, vec![0; 4]);
    }

    #[test]
    fn validation_reports_coverage_and_names() {
        let m = parse_model("model M ; grid 2 , 2 ; cell <1,1> {s} \\e ; cell <row[1]> {s} \\e ;").unwrap();
        let diags = validate(&m);
        assert!(diags.iter().any(|d| d.message.contains("already covered")));
        assert!(diags.iter().any(|d| d.message.contains("missing 2,1 2,2")));

        let m = parse_model("model M ; grid 1 , 1 ; cell <*> {top} \\e ;").unwrap();
        assert!(validate(&m).iter().any(|d| d.message.contains("reserved")));

        let m = parse_model("model M ; grid 1 , 1 ; se {s} ({l} $_z | $X) [1] \\e ; cell <*> {s} \\e ;").unwrap();
        assert!(validate(&m).iter().any(|d| d.message.contains("reserved")));

        let m = parse_model("model M ; grid 1 , 1 ; nse {s} a [1] b ; cell <*> {s} \\e ;").unwrap();
        assert!(validate(&m).iter().any(|d| d.message.contains("spatial label")));

        let m = parse_model("model M ; grid 1 , 1 ; se {s} a [1] $X ; cell <*> {s} \\e ;").unwrap();
        assert!(validate(&m).iter().any(|d| d.message.contains("does not occur")));
    }

    #[test]
    fn monitor_with_variables_is_only_a_warning() {
        let m = parse_model("model M ; grid 1 , 1 ; cell <*> {s} \\e ; monitor m ({l} $x | $X) ;").unwrap();
        let diags = validate(&m);
        assert_eq!(diags.len(), 1);
        assert!(!diags[0].is_error());
        assert!(compile(&m).is_ok());
    }

    #[test]
    fn monitors_expand_per_coordinate_and_label() {
        let m = parse_model(
            "model M ; grid 1 , 2 ;
             se <1,2> {a} x [1] {b} x ;
             cell <*> {a} \\e ;
             monitor m <*> {a} x ;
             monitor n <1,1> x ;
             monitor avg x ;",
        )
        .unwrap();
        let c = compile(&m).unwrap();
        let names: Vec<&str> = c.monitors.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, vec!["m@1,1", "m@1,2", "n@1,1:a", "n@1,1:b", "avg"]);
    }

    #[test]
    fn ground_text_is_stable() {
        let m = parse_model("model M ; grid 1 , 1 ; cell <*> {s} 2 a ; monitor m <*> {s} a ;").unwrap();
        let text = emit_ground_model(&compile(&m).unwrap());
        assert_eq!(text, "cwc-ground v1\nmodel M\ngrid 1,1\ninitial ({s} 1,1 | 2 a)\nmonitor m@1,1 cell 1,1 {s} a\n");
    }
}
