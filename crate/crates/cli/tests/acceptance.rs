//! Acceptance checks, one PASS/FAIL line each. Exits nonzero on any failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{brute_force_count, Gen};
use cwc_core::compiler::{compile, eval_coords, shift, CompiledModel};
use cwc_core::gillespie::{build_channels, run_ensemble, simulate_run};
use cwc_core::matcher::{count_matches, enumerate_matches, RewriteRule};
use cwc_core::monitor::{Monitor, MonitorTarget};
use cwc_core::surface::{parse_coord_expr, parse_model, parse_open_term, parse_pattern, Direction, GridDims};
use cwc_core::term::{Coordinate, Label, Term};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome, Duration);

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

/// A cell and its neighbours in the order N, S, E, W, NW, NE, SW, SE.
type ShiftRow = (Coordinate, [Option<(u32, u32)>; 8]);

fn coord(row: u32, col: u32) -> Coordinate {
    Coordinate { row, col }
}

fn rule(label: &str, p: &str, k: f64, o: &str) -> RewriteRule {
    let label = if label == "top" { Label::top() } else { Label::new(label).unwrap() };
    RewriteRule::new(label, parse_pattern(p).unwrap(), parse_open_term(o).unwrap(), k).unwrap()
}

fn compile_text(text: &str) -> CompiledModel {
    compile(&parse_model(text).unwrap()).unwrap()
}

fn mass_action() -> Outcome {
    let system = Term::parse("({l} | a a b b)").unwrap();
    for k in [1.0, 2.0, 0.5] {
        let ch = build_channels(&system, &[rule("l", "a b", k, "c")]);
        if ch.len() != 1 || ch[0].propensity != k * 4.0 {
            return Err(format!("k={k}: channels {ch:?}"));
        }
    }
    Ok("propensity k*4 for k in {1, 2, 0.5}".into())
}

fn match_count_oracle() -> Outcome {
    let mut nonzero = 0;
    for seed in 0..500u64 {
        let mut g = Gen::new(seed);
        let content = g.term(3, 10);
        let pattern = if seed % 2 == 0 { g.pattern(3) } else { g.pattern_in(&content, 3) };
        let count = count_matches(&pattern, &content).map_err(|e| e.to_string())?;
        let oracle = brute_force_count(&pattern, &content);
        let listed = enumerate_matches(&pattern, &content).map_err(|e| e.to_string())?.len() as u128;
        if u128::from(count) != oracle || listed != oracle {
            return Err(format!(
                "seed {seed}: {pattern} in {content}: count {count}, enumerated {listed}, oracle {oracle}"
            ));
        }
        nonzero += usize::from(count > 0);
    }
    Ok(format!("500 pairs agree ({nonzero} with matches)"))
}

fn coordinate_algebra() -> Outcome {
    let got = eval_coords(&parse_coord_expr("6,6 rect[1,1 3,2] col[5]").unwrap(), GridDims { rows: 6, cols: 6 })
        .map_err(|e| e.to_string())?;
    let mut want: BTreeSet<Coordinate> =
        [(6, 6), (1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2)].into_iter().map(|(r, c)| coord(r, c)).collect();
    want.extend((1..=6).map(|r| coord(r, 5)));
    if got == want && got.len() == 13 {
        Ok("13 coordinates".into())
    } else {
        Err(format!("got {got:?}"))
    }
}

fn shift_anchor() -> Outcome {
    let d = GridDims { rows: 3, cols: 3 };
    use Direction::*;
    let table: [ShiftRow; 3] = [
        (
            coord(2, 2),
            [
                Some((1, 2)),
                Some((3, 2)),
                Some((2, 3)),
                Some((2, 1)),
                Some((1, 1)),
                Some((1, 3)),
                Some((3, 1)),
                Some((3, 3)),
            ],
        ),
        (coord(1, 2), [None, Some((2, 2)), Some((1, 3)), Some((1, 1)), None, None, Some((2, 1)), Some((2, 3))]),
        (coord(1, 1), [None, Some((2, 1)), Some((1, 2)), None, None, None, None, Some((2, 2))]),
    ];
    for (c, row) in table {
        for (dir, want) in [N, S, E, W, NW, NE, SW, SE].into_iter().zip(row) {
            let got = shift(c, dir, d);
            if got != want.map(|(r, k)| coord(r, k)) {
                return Err(format!("{dir:?}({c}) = {got:?}, want {want:?}"));
            }
        }
    }
    for r in 1..=3 {
        for c in 1..=3 {
            for dir in Direction::ALL {
                let (dr, dc) = dir.offset();
                let (nr, nc) = (i64::from(r) + dr, i64::from(c) + dc);
                let want = ((1..=3).contains(&nr) && (1..=3).contains(&nc)).then(|| coord(nr as u32, nc as u32));
                if shift(coord(r, c), dir, d) != want {
                    return Err(format!("{dir:?}({r},{c})"));
                }
            }
        }
    }
    Ok(format!("E(1,1) = {}; 72 shifts checked", shift(coord(1, 1), E, d).unwrap()))
}

fn rule_counts() -> Outcome {
    let tips = compile_text(
        "model tips ; grid 1 , 13 ;
         sme <[*]> [E, W] {soil} Tip {soil} \\e [1] Hyp _ Tip ;
         cell <*> {soil} \\e ;",
    );
    let river = compile(&parse_model(&fs::read_to_string(models().join("river.cwc")).unwrap()).unwrap()).unwrap();
    let source = river.rule_origins.iter().filter(|&&o| o == 2).count();
    let mut soil = 0;
    let mut water = 0;
    for (s, n) in river.initial.iter() {
        match s.as_compartment().map(|c| c.label.name()) {
            Some("soil") => soil += n,
            Some("water") => water += n,
            _ => {}
        }
    }
    let got = (tips.rules.len(), source, river.initial.len(), soil, water);
    if got == (24, 4, 100, 60, 40) {
        Ok("sme 24, se 4, cells 100 (60 soil, 40 water)".into())
    } else {
        Err(format!("(sme, se, cells, soil, water) = {got:?}"))
    }
}

fn ssa_statistics() -> Outcome {
    let initial = Term::parse("({c} 1,1 | 1000 a)").unwrap();
    let monitor =
        Monitor::new("a".into(), MonitorTarget::Cell(coord(1, 1)), None, parse_pattern("a").unwrap()).unwrap();
    let m = CompiledModel::from_rules("decay", initial, vec![rule("c", "a", 0.1, "\\e")], vec![monitor]);
    let (series, _) = run_ensemble(&m, 100, 10.0, 1.0, 42, 0).map_err(|e| e.to_string())?;
    let mean = *series.means[0].last().unwrap();
    let se = series.stds[0].last().unwrap() / 10.0;
    let expected = 1000.0 * (-1.0f64).exp();
    let z = (mean - expected) / se;
    let detail = format!("mean {mean:.2} vs {expected:.2}, se {se:.3}, z {z:.2}");
    if z.abs() <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const TOY: &str = "model toy ;
grid 2 , 2 ;
se {s} a [1] b ;
sme [S, E] {s} b {s} \\e [0.5] \\e _ b ;
cell <1,1> {s} 5 a ;
cell <rect[1,2 2,2] 2,1> {s} a ;
monitor b <*> {s} b ;
";

fn hand_expanded() -> CompiledModel {
    let cell = |r, c, content: &str| format!("({{s}} {r},{c} | {content})");
    let initial =
        Term::parse(&[cell(1, 1, "5 a"), cell(1, 2, "a"), cell(2, 1, "a"), cell(2, 2, "a")].join(" ")).unwrap();
    let mut rules = Vec::new();
    for (r, c) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        rules.push(rule("top", &format!("({{s}} {r},{c} $_x | a $_X)"), 1.0, &format!("({{s}} {r},{c} $_x | b $_X)")));
    }
    for ((r, c), (r2, c2)) in [((1, 1), (2, 1)), ((1, 1), (1, 2)), ((1, 2), (2, 2)), ((2, 1), (2, 2))] {
        rules.push(rule(
            "top",
            &format!("({{s}} {r},{c} $_x | b $_X) ({{s}} {r2},{c2} $_y | $_Y)"),
            0.5,
            &format!("({{s}} {r},{c} $_x | $_X) ({{s}} {r2},{c2} $_y | b $_Y)"),
        ));
    }
    let s = Label::new("s").unwrap();
    let monitors = [(1, 1), (1, 2), (2, 1), (2, 2)]
        .into_iter()
        .map(|(r, c)| {
            Monitor::new(
                format!("b@{r},{c}"),
                MonitorTarget::Cell(coord(r, c)),
                Some(s.clone()),
                parse_pattern("b").unwrap(),
            )
            .unwrap()
        })
        .collect();
    CompiledModel::from_rules("toy", initial, rules, monitors)
}

fn compiled_equivalence() -> Outcome {
    let compiled = compile_text(TOY);
    let hand = hand_expanded();
    for seed in [1, 2, 3] {
        let a = simulate_run(&compiled, 8.0, 0.25, seed).map_err(|e| e.to_string())?;
        let b = simulate_run(&hand, 8.0, 0.25, seed).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("seed {seed}: trajectories differ"));
        }
    }
    Ok("identical trajectories for seeds 1, 2, 3".into())
}

fn am_front() -> Outcome {
    let m = compile(&parse_model(&fs::read_to_string(models().join("am_calospora.cwc")).unwrap()).unwrap()).unwrap();
    let (series, _) = run_ensemble(&m, 60, 20.0, 1.0, 42, 0).map_err(|e| e.to_string())?;
    let column = |c: u32| series.names.iter().position(|n| *n == format!("hyp@1,{c}")).expect("monitor");
    let cols: Vec<usize> = (1..=13).map(column).collect();
    let mut bad = Vec::new();
    for (i, t) in series.times.iter().enumerate() {
        for c in 1..cols.len() {
            let (near, far) = (series.means[cols[c - 1]][i], series.means[cols[c]][i]);
            if far > near {
                bad.push(format!("t={t} hyp@1,{} {far} > hyp@1,{} {near}", c + 1, c));
            }
        }
    }
    let last = series.times.len() - 1;
    let profile: Vec<String> = cols.iter().map(|&k| format!("{:.1}", series.means[k][last])).collect();
    if bad.is_empty() {
        Ok(format!("60 runs, {} samples; final profile {}", series.times.len(), profile.join(" ")))
    } else {
        Err(bad.join("; "))
    }
}

fn cli_run(dir: &Path, threads: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let model = models().join("river.cwc");
    let out = Command::new(env!("CARGO_BIN_EXE_cwc"))
        .args(["run", model.to_str().unwrap(), "--runs", "5", "--horizon", "5", "--interval", "0.25", "--seed", "17"])
        .arg("--out")
        .arg(dir)
        .env("CWC_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let mut files = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        files.push((e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).map_err(|e| e.to_string())?));
    }
    files.sort();
    Ok(files)
}

fn cli_determinism() -> Outcome {
    let mut outputs = Vec::new();
    for threads in ["1", "1", "4", "4"] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        outputs.push(cli_run(dir.path(), threads)?);
    }
    if outputs.iter().all(|o| *o == outputs[0]) {
        Ok(format!("{} CSV files byte-identical across CWC_THREADS=1,1,4,4", outputs[0].len()))
    } else {
        Err("CSV output differs between invocations".into())
    }
}

fn main() -> ExitCode {
    let checks: [Check; 9] = [
        ("mass-action anchor", mass_action, Duration::from_secs(1)),
        ("match-count oracle", match_count_oracle, Duration::from_secs(30)),
        ("coordinate algebra", coordinate_algebra, Duration::MAX),
        ("shift anchor", shift_anchor, Duration::MAX),
        ("rule-count laws", rule_counts, Duration::MAX),
        ("SSA statistical check", ssa_statistics, Duration::from_secs(60)),
        ("compiled vs hand-expanded", compiled_equivalence, Duration::MAX),
        ("AM front propagation", am_front, Duration::from_secs(300)),
        ("end-to-end determinism", cli_determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > budget => Err(format!("{d}; took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(d) => println!("PASS {name}: {d} ({elapsed:.1?})"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} ({elapsed:.1?})");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
