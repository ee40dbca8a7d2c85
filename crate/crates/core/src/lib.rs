//! Calculus of Wrapped Compartments with a spatial grid extension.
//!
//! Terms and patterns live in [`term`] and [`matcher`]; [`surface`] parses
//! the model language, [`compiler`] expands it into plain rewrite rules,
//! and [`gillespie`] simulates the result.

pub mod compiler;
pub mod gillespie;
pub mod matcher;
pub mod monitor;
pub mod multiset;
pub mod surface;
pub mod term;

pub use compiler::{compile, emit_ground_model, eval_coords, shift, validate, CompiledModel};
pub use gillespie::{run_ensemble, simulate_run, Trajectory};
pub use matcher::{count_matches, enumerate_matches, instantiate, Match, OpenTerm, Pattern, RewriteRule};
pub use monitor::{EnsembleSeries, Monitor};
pub use surface::{parse_model, Diagnostic, Diagnostics, SurfaceModel};
pub use term::{Atom, Coordinate, Label, Term};
