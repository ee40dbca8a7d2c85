//! Gillespie's direct method over a compiled model, and seeded parallel
//! ensembles.
//!
//! Propensities are mass action: rate times the number of matches. The
//! channel list is rebuilt after every event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compiler::CompiledModel;
use crate::matcher::{apply_rewrite, collect_sites, content_at, nth_match, MatchError, RewriteRule, SitePath};
use crate::monitor::{evaluate_monitors, EnsembleSeries};
use crate::term::Term;

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionChannel {
    pub rule: usize,
    pub site: SitePath,
    pub count: u64,
    pub propensity: f64,
}

/// Channels in rule order, then site order.
pub fn build_channels(system: &Term, rules: &[RewriteRule]) -> Vec<ReactionChannel> {
    collect_sites(rules, system)
        .into_iter()
        .map(|s| ReactionChannel {
            rule: s.rule,
            propensity: rules[s.rule].rate * s.count as f64,
            site: s.path,
            count: s.count,
        })
        .collect()
}

pub fn total_propensity(channels: &[ReactionChannel]) -> f64 {
    channels.iter().map(|c| c.propensity).sum()
}

/// Waiting time and channel for uniform draws `u1` in (0,1] and `u2` in
/// [0,1). `None` when no channel is enabled.
pub fn select_event(channels: &[ReactionChannel], u1: f64, u2: f64) -> Option<(f64, usize)> {
    let a0 = total_propensity(channels);
    if a0 <= 0.0 {
        return None;
    }
    let tau = (1.0 / u1).ln() / a0;
    let target = u2 * a0;
    let mut acc = 0.0;
    for (j, c) in channels.iter().enumerate() {
        acc += c.propensity;
        if acc > target {
            return Some((tau, j));
        }
    }
    // Rounding left the target at the very top of the sum.
    let last = channels.iter().rposition(|c| c.propensity > 0.0)?;
    Some((tau, last))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Quiescent,
    Event { tau: f64, channel: usize, match_index: u64 },
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    /// Content of the root compartment.
    pub term: Term,
    pub time: f64,
    pub rng: ChaCha8Rng,
}

impl SimulationState {
    pub fn new(term: Term, seed: u64) -> Self {
        Self { term, time: 0.0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// State for run `run_index` of an ensemble seeded with `base_seed`:
    /// every run reads its own ChaCha stream of the same key.
    pub fn for_run(term: Term, base_seed: u64, run_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(run_index);
        Self { term, time: 0.0, rng }
    }
}

/// Draws the next event; does not change the term or the clock.
pub fn step(state: &mut SimulationState, channels: &[ReactionChannel]) -> StepOutcome {
    if total_propensity(channels) <= 0.0 {
        return StepOutcome::Quiescent;
    }
    let u1 = 1.0 - state.rng.random::<f64>();
    let u2 = state.rng.random::<f64>();
    let (tau, channel) = select_event(channels, u1, u2).expect("positive total propensity");
    let match_index = state.rng.random_range(0..channels[channel].count);
    StepOutcome::Event { tau, channel, match_index }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("sample interval must be positive and finite, got {0}")]
    BadInterval(f64),
    #[error("an ensemble needs at least one run")]
    NoRuns,
    #[error("rule {rule} could not be applied: {source}")]
    Apply { rule: usize, source: MatchError },
    #[error("could not start worker threads: {0}")]
    Threads(String),
}

/// Applies the event chosen by [`step`].
pub fn fire(
    state: &mut SimulationState,
    rules: &[RewriteRule],
    channel: &ReactionChannel,
    match_index: u64,
) -> Result<(), SimError> {
    let rule = &rules[channel.rule];
    let err = |source| SimError::Apply { rule: channel.rule, source };
    let content = content_at(&state.term, &channel.site).ok_or(err(MatchError::BadSite))?;
    let m = nth_match(rule.plan(), content, match_index).ok_or(err(MatchError::StaleMatch))?;
    state.term = apply_rewrite(&state.term, rule, &channel.site, &m).map_err(err)?;
    Ok(())
}

/// Monitor values sampled at fixed times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `values[i]` holds every monitor at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

/// `0, dt, 2dt, ...` below the horizon, then the horizon itself.
pub fn sample_times(horizon: f64, interval: f64) -> Vec<f64> {
    let steps = (horizon / interval * (1.0 - 1e-12)).ceil() as u64;
    let mut times: Vec<f64> = (0..steps).map(|i| i as f64 * interval).collect();
    times.push(horizon);
    times
}

fn check_times(horizon: f64, interval: f64) -> Result<(), SimError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SimError::BadHorizon(horizon));
    }
    if !(interval.is_finite() && interval > 0.0) {
        return Err(SimError::BadInterval(interval));
    }
    Ok(())
}

/// Runs from `state` to the horizon. The value recorded at a sample time
/// reflects every event at or before it.
pub fn simulate(
    model: &CompiledModel,
    mut state: SimulationState,
    horizon: f64,
    interval: f64,
) -> Result<Trajectory, SimError> {
    check_times(horizon, interval)?;
    let times = sample_times(horizon, interval);
    let mut values = Vec::with_capacity(times.len());
    while values.len() < times.len() {
        let channels = build_channels(&state.term, &model.rules);
        let outcome = step(&mut state, &channels);
        let next = match outcome {
            StepOutcome::Quiescent => f64::INFINITY,
            StepOutcome::Event { tau, .. } => state.time + tau,
        };
        if values.len() < times.len() && times[values.len()] < next {
            let snapshot = evaluate_monitors(&model.monitors, &state.term);
            while values.len() < times.len() && times[values.len()] < next {
                values.push(snapshot.clone());
            }
        }
        if let StepOutcome::Event { channel, match_index, .. } = outcome {
            if values.len() < times.len() {
                fire(&mut state, &model.rules, &channels[channel], match_index)?;
                state.time = next;
            }
        }
    }
    Ok(Trajectory { names: model.monitors.iter().map(|m| m.name.clone()).collect(), times, values })
}

/// A single run seeded directly with `seed`.
pub fn simulate_run(model: &CompiledModel, horizon: f64, interval: f64, seed: u64) -> Result<Trajectory, SimError> {
    simulate(model, SimulationState::new(model.initial.clone(), seed), horizon, interval)
}

/// Runs `n_runs` independent simulations on up to `threads` workers (0
/// picks the default) and folds them in run order. The result does not
/// depend on the number of workers.
pub fn run_ensemble(
    model: &CompiledModel,
    n_runs: usize,
    horizon: f64,
    interval: f64,
    base_seed: u64,
    threads: usize,
) -> Result<(EnsembleSeries, Vec<Trajectory>), SimError> {
    if n_runs == 0 {
        return Err(SimError::NoRuns);
    }
    check_times(horizon, interval)?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| SimError::Threads(e.to_string()))?;
    let runs: Vec<Trajectory> = pool.install(|| {
        (0..n_runs)
            .into_par_iter()
            .map(|i| {
                simulate(model, SimulationState::for_run(model.initial.clone(), base_seed, i as u64), horizon, interval)
            })
            .collect::<Result<_, _>>()
    })?;
    Ok((EnsembleSeries::from_trajectories(&runs), runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_open_term, parse_pattern};
    use crate::term::Label;

    fn rule(label: &str, p: &str, k: f64, o: &str) -> RewriteRule {
        RewriteRule::new(Label::new(label).unwrap(), parse_pattern(p).unwrap(), parse_open_term(o).unwrap(), k).unwrap()
    }

    fn channel(p: f64) -> ReactionChannel {
        ReactionChannel { rule: 0, site: vec![], count: 1, propensity: p }
    }

    #[test]
    fn propensity_is_rate_times_count() {
        let sys = Term::parse("({l} | 2 a 2 b)").unwrap();
        let ch = build_channels(&sys, &[rule("l", "a b", 2.0, "c")]);
        assert_eq!(ch.len(), 1);
        assert_eq!((ch[0].count, ch[0].propensity), (4, 8.0));
        assert!(build_channels(&sys, &[rule("m", "a", 1.0, "c")]).is_empty());

        let twice = Term::parse("2 ({l} | a b)").unwrap();
        let ch = build_channels(&twice, &[rule("l", "a b", 1.5, "c")]);
        assert_eq!(ch.len(), 2);
        assert_eq!(total_propensity(&ch), 3.0);
    }

    #[test]
    fn selection_follows_the_closed_forms() {
        let (tau, j) = select_event(&[channel(8.0)], (-1.0f64).exp(), 0.3).unwrap();
        assert!((tau - 0.125).abs() < 1e-15);
        assert_eq!(j, 0);
        assert_eq!(select_event(&[channel(3.0), channel(1.0)], 0.5, 0.9).unwrap().1, 1);
        assert_eq!(select_event(&[channel(3.0), channel(1.0)], 0.5, 0.74).unwrap().1, 0);
        assert_eq!(select_event(&[], 0.5, 0.5), None);
        assert_eq!(select_event(&[channel(0.0)], 0.5, 0.5), None);
    }

    #[test]
    fn sampling_grid_ends_at_the_horizon() {
        let t = sample_times(10.0, 0.1);
        assert_eq!(t.len(), 101);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 10.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_times(1.0, 0.3), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert_eq!(sample_times(1.0, 5.0), vec![0.0, 1.0]);
    }

    #[test]
    fn quiescent_model_keeps_its_state() {
        let m = CompiledModel::from_rules("q", Term::parse("3 a").unwrap(), vec![rule("top", "b", 1.0, "c")], vec![]);
        let t = simulate_run(&m, 5.0, 1.0, 7).unwrap();
        assert_eq!(t.times.len(), 6);
        assert!(t.values.iter().all(|v| v.is_empty()));
    }
}
