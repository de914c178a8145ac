//! Full-match simulation and posterior score distributions.
//!
//! A simulated ball follows the estimated model in a fixed order: first the
//! wicket draw (a wicket scores nothing), then action selection. Behavioral
//! mode always samples the state's run distribution; optimal mode plays the
//! policy action except with the observed non-optimal probability, in which
//! case it falls back to sampling. Extras are not generated, so every
//! simulated delivery is legal.
//!
//! Each simulation draws from its own `(seed, index)`-derived stream, so
//! results are identical whether simulations run sequentially or in parallel.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::data::{Corpus, DeliveryRecord, MatchRecord, Provenance, Winner};
use crate::eval::{draw_interruption, percent_error};
use crate::par;
use crate::policy::{PolicyTable, TransitionModel};
use crate::seed;
use crate::state::{
    score_band, Action, FirstInningsState, GameState, SecondInningsState, StateStep, Trajectory,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("bad simulation config: {0}")]
    Config(String),
    #[error("optimal mode requires a policy table")]
    MissingPolicy,
    #[error("optimal mode requires non-optimal rates attached to the transition model")]
    MissingNonOptimalRates,
}

/// Behavioral replays the estimated transition probabilities; optimal mixes
/// the computed policy with the observed non-optimal rate (first innings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Behavioral,
    Optimal,
}

/// Where a simulated innings picks up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InningsStart<S: GameState> {
    pub state: S,
    pub score: u32,
    /// Exact chase target (second innings only).
    pub target: Option<u32>,
}

impl<S: GameState> InningsStart<S> {
    pub fn new(state: S, score: u32, target: Option<u32>) -> Result<Self, SimError> {
        if state.score_band() != score_band(score) {
            return Err(SimError::Config(format!(
                "score {score} lies in band {} but the state says {}",
                score_band(score),
                state.score_band()
            )));
        }
        Ok(InningsStart {
            state,
            score,
            target,
        })
    }
}

impl InningsStart<FirstInningsState> {
    pub fn fresh_first() -> Self {
        InningsStart {
            state: FirstInningsState::initial(),
            score: 0,
            target: None,
        }
    }
}

impl InningsStart<SecondInningsState> {
    pub fn fresh_second(target: u32) -> Self {
        InningsStart {
            state: SecondInningsState::initial(score_band(target)),
            score: 0,
            target: Some(target),
        }
    }
}

/// How many simulations to run and from which master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_sims: usize,
    pub seed: u64,
    pub mode: SimMode,
}

impl SimulationConfig {
    pub fn behavioral(n_sims: usize, seed: u64) -> Self {
        SimulationConfig {
            n_sims,
            seed,
            mode: SimMode::Behavioral,
        }
    }
}

fn sample_action(dist: &[f64; 6], rng: &mut ChaCha8Rng) -> Action {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for action in Action::ALL {
        cumulative += dist[action.slot()];
        if u < cumulative {
            return action;
        }
    }
    Action::ALL
        .into_iter()
        .rev()
        .find(|a| dist[a.slot()] > 0.0)
        .unwrap_or(Action::Dot)
}

enum ActionChoice<'a> {
    Sampled,
    Policy(&'a PolicyTable),
}

fn simulate_innings<S: GameState>(
    model: &TransitionModel<S>,
    choice: &ActionChoice<'_>,
    start: &InningsStart<S>,
    policy_lookup: impl Fn(&PolicyTable, &S) -> Action,
    rng: &mut ChaCha8Rng,
) -> Trajectory<S> {
    let mut steps = Vec::new();
    let mut state = start.state;
    let mut score = start.score;
    let mut wickets = state.wickets();
    loop {
        if state.is_terminal() {
            break;
        }
        if let Some(target) = start.target {
            if score > target {
                break;
            }
        }
        let wicket = rng.gen::<f64>() < model.wicket_prob(&state);
        let action = if wicket {
            Action::Dot
        } else {
            match choice {
                ActionChoice::Sampled => sample_action(&model.run_dist(&state), rng),
                ActionChoice::Policy(policy) => {
                    let nonoptimal = model
                        .nonoptimal_prob(&state)
                        .expect("optimal mode checked rates up front");
                    if rng.gen::<f64>() < 1.0 - nonoptimal {
                        policy_lookup(policy, &state)
                    } else {
                        sample_action(&model.run_dist(&state), rng)
                    }
                }
            }
        };
        let runs = if wicket { 0 } else { action.runs() };
        steps.push(StateStep {
            state,
            action,
            wicket,
            runs,
        });
        score += runs as u32;
        if wicket {
            wickets += 1;
        }
        state = state.next_legal(wickets, score_band(score));
    }
    Trajectory {
        steps,
        final_score: score,
    }
}

/// Simulate one innings using only the transition probabilities.
pub fn simulate_behavioral<S: GameState>(
    model: &TransitionModel<S>,
    start: &InningsStart<S>,
    rng: &mut ChaCha8Rng,
) -> Trajectory<S> {
    simulate_innings(
        model,
        &ActionChoice::Sampled,
        start,
        |_, _| Action::Dot,
        rng,
    )
}

/// Simulate a first innings playing the policy, degraded by the observed
/// non-optimal-action rate.
pub fn simulate_optimal(
    model: &TransitionModel<FirstInningsState>,
    policy: &PolicyTable,
    start: &InningsStart<FirstInningsState>,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory<FirstInningsState>, SimError> {
    if !model.has_nonoptimal() {
        return Err(SimError::MissingNonOptimalRates);
    }
    Ok(simulate_innings(
        model,
        &ActionChoice::Policy(policy),
        start,
        |p, s| p.action(s),
        rng,
    ))
}

/// Outcome of one simulated match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOutcome {
    Team1,
    Team2,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchSim {
    pub score_1: u32,
    pub score_2: u32,
    pub winner: MatchOutcome,
}

/// Simulate a full match: innings 1 (optionally under the optimal policy),
/// then a behavioral chase of its total.
pub fn simulate_match(
    model_1: &TransitionModel<FirstInningsState>,
    model_2: &TransitionModel<SecondInningsState>,
    policy: Option<&PolicyTable>,
    match_seed: u64,
) -> Result<MatchSim, SimError> {
    let mut rng_1 = seed::rng(match_seed, &[seed::SIM, 1]);
    let first = match policy {
        Some(policy) => {
            simulate_optimal(model_1, policy, &InningsStart::fresh_first(), &mut rng_1)?
        }
        None => simulate_behavioral(model_1, &InningsStart::fresh_first(), &mut rng_1),
    };
    let mut rng_2 = seed::rng(match_seed, &[seed::SIM, 2]);
    let second = simulate_behavioral(
        model_2,
        &InningsStart::fresh_second(first.final_score),
        &mut rng_2,
    );
    let winner = match first.final_score.cmp(&second.final_score) {
        std::cmp::Ordering::Greater => MatchOutcome::Team1,
        std::cmp::Ordering::Less => MatchOutcome::Team2,
        std::cmp::Ordering::Equal => MatchOutcome::Tie,
    };
    Ok(MatchSim {
        score_1: first.final_score,
        score_2: second.final_score,
        winner,
    })
}

/// Histogram of simulated final scores with its moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub histogram: BTreeMap<u32, u32>,
    pub mean: f64,
    /// Population standard deviation of the samples.
    pub std: f64,
    pub n: usize,
    pub mode_flag: SimMode,
}

impl ScoreDistribution {
    fn from_scores(scores: &[u32], mode: SimMode) -> ScoreDistribution {
        let mut histogram: BTreeMap<u32, u32> = BTreeMap::new();
        for &score in scores {
            *histogram.entry(score).or_insert(0) += 1;
        }
        let n = scores.len();
        let mean = scores.iter().map(|&s| s as f64).sum::<f64>() / n as f64;
        let variance = scores
            .iter()
            .map(|&s| {
                let d = s as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n as f64;
        ScoreDistribution {
            histogram,
            mean,
            std: variance.sqrt(),
            n,
            mode_flag: mode,
        }
    }

    /// CSV export: `final_score,count` rows in ascending score order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("final_score,count\n");
        for (score, count) in &self.histogram {
            out.push_str(&format!("{score},{count}\n"));
        }
        out
    }
}

fn posterior_scores<F>(n_sims: usize, simulate_one: F) -> Vec<u32>
where
    F: Fn(usize) -> u32 + Send + Sync,
{
    par::map_range(n_sims, simulate_one)
}

/// Posterior final-score distribution for a first-innings start.
pub fn posterior_first(
    model: &TransitionModel<FirstInningsState>,
    policy: Option<&PolicyTable>,
    start: &InningsStart<FirstInningsState>,
    config: &SimulationConfig,
) -> Result<ScoreDistribution, SimError> {
    if config.n_sims == 0 {
        return Err(SimError::Config("n_sims must be positive".into()));
    }
    match config.mode {
        SimMode::Behavioral => {
            let scores = posterior_scores(config.n_sims, |i| {
                let mut rng = seed::rng(config.seed, &[seed::SIM, i as u64]);
                simulate_behavioral(model, start, &mut rng).final_score
            });
            Ok(ScoreDistribution::from_scores(&scores, config.mode))
        }
        SimMode::Optimal => {
            let policy = policy.ok_or(SimError::MissingPolicy)?;
            if !model.has_nonoptimal() {
                return Err(SimError::MissingNonOptimalRates);
            }
            let scores = posterior_scores(config.n_sims, |i| {
                let mut rng = seed::rng(config.seed, &[seed::SIM, i as u64]);
                simulate_optimal(model, policy, start, &mut rng)
                    .expect("rates checked above")
                    .final_score
            });
            Ok(ScoreDistribution::from_scores(&scores, config.mode))
        }
    }
}

/// Posterior final-score distribution for a second-innings start; the chase
/// is always behavioral.
pub fn posterior_second(
    model: &TransitionModel<SecondInningsState>,
    start: &InningsStart<SecondInningsState>,
    config: &SimulationConfig,
) -> Result<ScoreDistribution, SimError> {
    if config.n_sims == 0 {
        return Err(SimError::Config("n_sims must be positive".into()));
    }
    if config.mode == SimMode::Optimal {
        return Err(SimError::Config(
            "optimal mode applies to the first innings only".into(),
        ));
    }
    let scores = posterior_scores(config.n_sims, |i| {
        let mut rng = seed::rng(config.seed, &[seed::SIM, i as u64]);
        simulate_behavioral(model, start, &mut rng).final_score
    });
    Ok(ScoreDistribution::from_scores(&scores, config.mode))
}

/// Sample full trajectories (for plotting) instead of just final scores.
pub fn sample_trajectories(
    model: &TransitionModel<FirstInningsState>,
    policy: Option<&PolicyTable>,
    start: &InningsStart<FirstInningsState>,
    config: &SimulationConfig,
) -> Result<Vec<Trajectory<FirstInningsState>>, SimError> {
    (0..config.n_sims)
        .map(|i| {
            let mut rng = seed::rng(config.seed, &[seed::SIM, i as u64]);
            match config.mode {
                SimMode::Behavioral => Ok(simulate_behavioral(model, start, &mut rng)),
                SimMode::Optimal => {
                    let policy = policy.ok_or(SimError::MissingPolicy)?;
                    simulate_optimal(model, policy, start, &mut rng)
                }
            }
        })
        .collect()
}

/// Second-innings counterpart of [`sample_trajectories`] (always behavioral).
pub fn sample_trajectories_second(
    model: &TransitionModel<SecondInningsState>,
    start: &InningsStart<SecondInningsState>,
    config: &SimulationConfig,
) -> Result<Vec<Trajectory<SecondInningsState>>, SimError> {
    if config.mode == SimMode::Optimal {
        return Err(SimError::Config(
            "optimal mode applies to the first innings only".into(),
        ));
    }
    Ok((0..config.n_sims)
        .map(|i| {
            let mut rng = seed::rng(config.seed, &[seed::SIM, i as u64]);
            simulate_behavioral(model, start, &mut rng)
        })
        .collect())
}

/// One line of the simulator accuracy report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReportEntry {
    pub innings_no: u8,
    pub mode: SimMode,
    pub mean_error_pct: f64,
    /// Sample standard deviation of the per-match errors.
    pub std_error_pct: f64,
    pub n: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorErrorReport {
    pub entries: Vec<ErrorReportEntry>,
    pub n_sims: usize,
    pub seed: u64,
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values
            .iter()
            .map(|v| {
                let d = v - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    (mean, std)
}

struct InterruptedSim<S: GameState> {
    start: InningsStart<S>,
    actual: u32,
    match_index: usize,
}

fn interrupted_starts<S: GameState>(
    corpus: &Corpus,
    master_seed: u64,
    target_of: impl Fn(&MatchRecord) -> Option<u32> + Sync + Send,
) -> (Vec<InterruptedSim<S>>, usize) {
    let drawn = par::map_range(corpus.matches.len(), |index| {
        let record = &corpus.matches[index];
        let trajectory = S::build_trajectory(record).ok()?;
        let mut rng = seed::rng(
            master_seed,
            &[seed::INTERRUPT, S::INNINGS_NO as u64, index as u64],
        );
        let interruption = draw_interruption(&trajectory, &record.match_id, &mut rng)?;
        let start = InningsStart {
            state: interruption.state,
            score: interruption.score_at_interruption,
            target: target_of(record),
        };
        Some(InterruptedSim {
            start,
            actual: interruption.actual_final_score,
            match_index: index,
        })
    });
    let mut starts = Vec::new();
    let mut skipped = 0usize;
    for d in drawn {
        match d {
            Some(s) => starts.push(s),
            None => skipped += 1,
        }
    }
    (starts, skipped)
}

/// Interrupt every eligible match, simulate to completion `n_sims` times,
/// and score the mean simulated final against the actual total.
pub fn simulator_error_report(
    corpus: &Corpus,
    model_1: &TransitionModel<FirstInningsState>,
    model_2: &TransitionModel<SecondInningsState>,
    policy: Option<&PolicyTable>,
    config: &SimulationConfig,
) -> Result<SimulatorErrorReport, SimError> {
    if config.n_sims == 0 {
        return Err(SimError::Config("n_sims must be positive".into()));
    }
    let mut entries = Vec::new();

    // First innings, behavioral and (when a policy is supplied) optimal.
    let (starts_1, skipped_1) =
        interrupted_starts::<FirstInningsState>(corpus, config.seed, |_| None);
    let behavioral: Vec<f64> = par::map_slice(&starts_1, |sim| {
        let mean_final = mean_simulated_final(model_1, None, sim, config, 0);
        percent_error(mean_final, sim.actual).expect("actual > 0 by eligibility")
    });
    if !behavioral.is_empty() {
        let (mean, std) = mean_and_sample_std(&behavioral);
        entries.push(ErrorReportEntry {
            innings_no: 1,
            mode: SimMode::Behavioral,
            mean_error_pct: mean,
            std_error_pct: std,
            n: behavioral.len(),
            skipped: skipped_1,
        });
    }
    if let Some(policy) = policy {
        if !model_1.has_nonoptimal() {
            return Err(SimError::MissingNonOptimalRates);
        }
        let optimal: Vec<f64> = par::map_slice(&starts_1, |sim| {
            let mean_final = mean_simulated_final(model_1, Some(policy), sim, config, 1);
            percent_error(mean_final, sim.actual).expect("actual > 0 by eligibility")
        });
        if !optimal.is_empty() {
            let (mean, std) = mean_and_sample_std(&optimal);
            entries.push(ErrorReportEntry {
                innings_no: 1,
                mode: SimMode::Optimal,
                mean_error_pct: mean,
                std_error_pct: std,
                n: optimal.len(),
                skipped: skipped_1,
            });
        }
    }

    // Second innings, behavioral only; the chase keeps its real target.
    let (starts_2, skipped_2) =
        interrupted_starts::<SecondInningsState>(corpus, config.seed, |record| {
            Some(record.final_score_1)
        });
    let behavioral_2: Vec<f64> = par::map_slice(&starts_2, |sim| {
        let mean_final = mean_simulated_final_second(model_2, sim, config);
        percent_error(mean_final, sim.actual).expect("actual > 0 by eligibility")
    });
    if !behavioral_2.is_empty() {
        let (mean, std) = mean_and_sample_std(&behavioral_2);
        entries.push(ErrorReportEntry {
            innings_no: 2,
            mode: SimMode::Behavioral,
            mean_error_pct: mean,
            std_error_pct: std,
            n: behavioral_2.len(),
            skipped: skipped_2,
        });
    }

    Ok(SimulatorErrorReport {
        entries,
        n_sims: config.n_sims,
        seed: config.seed,
    })
}

fn mean_simulated_final(
    model: &TransitionModel<FirstInningsState>,
    policy: Option<&PolicyTable>,
    sim: &InterruptedSim<FirstInningsState>,
    config: &SimulationConfig,
    mode_tag: u64,
) -> f64 {
    let total: f64 = (0..config.n_sims)
        .map(|i| {
            let mut rng = seed::rng(
                config.seed,
                &[seed::SIM, 1, mode_tag, sim.match_index as u64, i as u64],
            );
            let trajectory = match policy {
                Some(policy) => simulate_optimal(model, policy, &sim.start, &mut rng)
                    .expect("rates checked by the caller"),
                None => simulate_behavioral(model, &sim.start, &mut rng),
            };
            trajectory.final_score as f64
        })
        .sum();
    total / config.n_sims as f64
}

fn mean_simulated_final_second(
    model: &TransitionModel<SecondInningsState>,
    sim: &InterruptedSim<SecondInningsState>,
    config: &SimulationConfig,
) -> f64 {
    let total: f64 = (0..config.n_sims)
        .map(|i| {
            let mut rng = seed::rng(
                config.seed,
                &[seed::SIM, 2, 0, sim.match_index as u64, i as u64],
            );
            simulate_behavioral(model, &sim.start, &mut rng).final_score as f64
        })
        .sum();
    total / config.n_sims as f64
}

/// Generate a synthetic corpus by simulating both innings of `n_matches`
/// matches behaviorally from the given models.
pub fn generate_corpus(
    model_1: &TransitionModel<FirstInningsState>,
    model_2: &TransitionModel<SecondInningsState>,
    n_matches: usize,
    master_seed: u64,
) -> Corpus {
    let matches = par::map_range(n_matches, |i| {
        let mut rng_1 = seed::rng(master_seed, &[seed::GENERATE, i as u64, 1]);
        let first = simulate_behavioral(model_1, &InningsStart::fresh_first(), &mut rng_1);
        let mut rng_2 = seed::rng(master_seed, &[seed::GENERATE, i as u64, 2]);
        let second = simulate_behavioral(
            model_2,
            &InningsStart::fresh_second(first.final_score),
            &mut rng_2,
        );
        let winner = match first.final_score.cmp(&second.final_score) {
            std::cmp::Ordering::Greater => Winner::Team("Team A".into()),
            std::cmp::Ordering::Less => Winner::Team("Team B".into()),
            std::cmp::Ordering::Equal => Winner::Tie,
        };
        MatchRecord::from_innings(
            format!("synth-{i:05}"),
            "Team A".into(),
            "Team B".into(),
            winner,
            [
                trajectory_to_deliveries(&first, 1),
                trajectory_to_deliveries(&second, 2),
            ],
        )
        .expect("simulated innings satisfy the match invariants")
    });
    Corpus::new(
        matches,
        Provenance {
            source: format!("synthetic:behavioral:seed={master_seed}"),
            ingested_at: "generated".into(),
        },
    )
    .expect("synthetic ids are unique")
}

fn trajectory_to_deliveries<S: GameState>(
    trajectory: &Trajectory<S>,
    innings_no: u8,
) -> Vec<DeliveryRecord> {
    trajectory
        .steps
        .iter()
        .map(|step| DeliveryRecord {
            innings_no,
            over: step.state.over(),
            ball_in_over: step.state.ball(),
            runs_batted: step.runs,
            is_extra: false,
            is_wicket: step.wicket,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Counts;
    use std::collections::HashMap;

    /// Model that always scores `runs` and never loses a wicket.
    fn constant_model<S: GameState>(runs: u8) -> TransitionModel<S> {
        let mut global = Counts::default();
        global.visits = 100;
        global.runs[Action::from_runs(runs).unwrap().slot()] = 100;
        TransitionModel::from_counts(HashMap::new(), HashMap::new(), global, 1).unwrap()
    }

    fn all_wickets_model<S: GameState>() -> TransitionModel<S> {
        let global = Counts {
            visits: 100,
            wickets: 100,
            runs: [0; 6],
        };
        TransitionModel::from_counts(HashMap::new(), HashMap::new(), global, 1).unwrap()
    }

    #[test]
    fn degenerate_single_run_model_scores_exactly_300() {
        let model = constant_model::<FirstInningsState>(1);
        let mut rng = seed::rng(1, &[seed::SIM, 0]);
        let trajectory = simulate_behavioral(&model, &InningsStart::fresh_first(), &mut rng);
        assert_eq!(trajectory.final_score, 300);
        assert_eq!(trajectory.steps.len(), 300);
        assert!(trajectory.steps.iter().all(|s| !s.state.extra_flag()));
    }

    #[test]
    fn certain_wickets_end_the_innings_after_ten_balls() {
        let model = all_wickets_model::<FirstInningsState>();
        let mut rng = seed::rng(8, &[seed::SIM, 0]);
        let trajectory = simulate_behavioral(&model, &InningsStart::fresh_first(), &mut rng);
        assert_eq!(trajectory.steps.len(), 10);
        assert_eq!(trajectory.final_score, 0);
        assert!(trajectory.steps.iter().all(|s| s.wicket));
    }

    #[test]
    fn chase_started_at_the_target_stops_on_the_first_scoring_ball() {
        let model = constant_model::<SecondInningsState>(4);
        let start = InningsStart::new(
            SecondInningsState::new(10, 2, score_band(120), score_band(120), 0, 0).unwrap(),
            120,
            Some(120),
        )
        .unwrap();
        let mut rng = seed::rng(3, &[seed::SIM, 0]);
        let trajectory = simulate_behavioral(&model, &start, &mut rng);
        assert_eq!(trajectory.steps.len(), 1);
        assert_eq!(trajectory.final_score, 124);
    }

    #[test]
    fn match_simulation_is_seed_deterministic() {
        let m1 = constant_model::<FirstInningsState>(2);
        let m2 = constant_model::<SecondInningsState>(1);
        let a = simulate_match(&m1, &m2, None, 42).unwrap();
        let b = simulate_match(&m1, &m2, None, 42).unwrap();
        assert_eq!(a, b);
        // 600 vs 300-capped chase: team 1 wins.
        assert_eq!(a.score_1, 600);
        assert_eq!(a.winner, MatchOutcome::Team1);
    }

    #[test]
    fn posterior_histogram_counts_sum_to_n_sims() {
        let model = constant_model::<FirstInningsState>(1);
        let config = SimulationConfig::behavioral(37, 5);
        let dist = posterior_first(&model, None, &InningsStart::fresh_first(), &config).unwrap();
        assert_eq!(dist.histogram.values().sum::<u32>(), 37);
        assert_eq!(dist.histogram.len(), 1);
        assert_eq!(dist.mean, 300.0);
        assert_eq!(dist.std, 0.0);
    }

    #[test]
    fn posterior_with_one_simulation_has_zero_std() {
        let model = constant_model::<FirstInningsState>(6);
        let config = SimulationConfig::behavioral(1, 9);
        let dist = posterior_first(&model, None, &InningsStart::fresh_first(), &config).unwrap();
        assert_eq!(dist.n, 1);
        assert_eq!(dist.std, 0.0);
        assert_eq!(dist.histogram.len(), 1);
    }

    #[test]
    fn distribution_round_trips_through_json_and_csv_lists_counts() {
        let model = constant_model::<FirstInningsState>(2);
        let config = SimulationConfig::behavioral(10, 77);
        let dist = posterior_first(&model, None, &InningsStart::fresh_first(), &config).unwrap();
        let json = serde_json::to_string(&dist).unwrap();
        let parsed: ScoreDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, dist);
        let csv = dist.to_csv();
        assert!(csv.starts_with("final_score,count\n"));
        assert!(csv.contains("600,10"));
    }

    #[test]
    fn optimal_mode_without_policy_is_rejected() {
        let model = constant_model::<FirstInningsState>(1);
        let config = SimulationConfig {
            n_sims: 5,
            seed: 0,
            mode: SimMode::Optimal,
        };
        assert!(matches!(
            posterior_first(&model, None, &InningsStart::fresh_first(), &config),
            Err(SimError::MissingPolicy)
        ));
    }

    #[test]
    fn optimal_mode_error_dominates_behavioral_on_behavioral_data() {
        // Data generated behaviorally; an always-six policy (with zero
        // observed non-optimal rate) biases the resimulation upward, so its
        // error magnitude is at least the behavioral one.
        let mut model_1 = TransitionModel::<FirstInningsState>::from_counts(
            HashMap::new(),
            HashMap::new(),
            Counts {
                visits: 10_000,
                wickets: 150,
                runs: [3500, 4000, 900, 100, 1000, 350],
            },
            1,
        )
        .unwrap();
        let model_2 = constant_model::<SecondInningsState>(1);
        let corpus = generate_corpus(&model_1, &model_2, 30, 99);

        let policy = crate::policy::PolicyTable {
            actions: vec![Action::Six; crate::state::FIRST_INNINGS_STATES],
            v: vec![0.0; crate::state::FIRST_INNINGS_STATES],
        };
        model_1.set_nonoptimal(crate::policy::NonOptimalRates {
            states: HashMap::new(),
            agg: HashMap::new(),
            global: crate::policy::RateCounts {
                observed: 1,
                non_optimal: 0,
            },
        });

        let config = SimulationConfig::behavioral(100, 5);
        let report =
            simulator_error_report(&corpus, &model_1, &model_2, Some(&policy), &config).unwrap();
        let behavioral = report
            .entries
            .iter()
            .find(|e| e.innings_no == 1 && e.mode == SimMode::Behavioral)
            .unwrap();
        let optimal = report
            .entries
            .iter()
            .find(|e| e.innings_no == 1 && e.mode == SimMode::Optimal)
            .unwrap();
        assert!(behavioral.n > 0);
        assert!(
            optimal.mean_error_pct.abs() >= behavioral.mean_error_pct.abs(),
            "optimal {} vs behavioral {}",
            optimal.mean_error_pct,
            behavioral.mean_error_pct
        );
        // The deviant policy overshoots, so the direction is known too.
        assert!(optimal.mean_error_pct > 10.0);
    }

    #[test]
    fn simulated_innings_respect_the_structural_bounds() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(606);
        for _ in 0..20 {
            let weights: [u64; 6] = std::array::from_fn(|_| rng.gen_range(0..100));
            let wickets_per_mille = rng.gen_range(0..200);
            let global = Counts {
                visits: 1000,
                wickets: wickets_per_mille,
                runs: {
                    let mut w = weights;
                    if w.iter().all(|&x| x == 0) {
                        w[0] = 1;
                    }
                    w
                },
            };
            let model = TransitionModel::<FirstInningsState>::from_counts(
                HashMap::new(),
                HashMap::new(),
                global,
                1,
            )
            .unwrap();
            for sim in 0..5u64 {
                let mut stream = seed::rng(rng.gen(), &[seed::SIM, sim]);
                let innings =
                    simulate_behavioral(&model, &InningsStart::fresh_first(), &mut stream);
                assert!(innings.steps.len() <= 300);
                assert!(innings.steps.iter().filter(|s| s.wicket).count() <= 10);
                assert!(innings.steps.iter().all(|s| !s.state.extra_flag()));
                let sum: u32 = innings.steps.iter().map(|s| s.runs as u32).sum();
                assert_eq!(sum, innings.final_score);
            }
        }
    }

    #[test]
    fn error_report_is_seed_deterministic() {
        let model_1 = constant_model::<FirstInningsState>(2);
        let model_2 = constant_model::<SecondInningsState>(1);
        let corpus = generate_corpus(&model_1, &model_2, 10, 3);
        let config = SimulationConfig::behavioral(50, 17);
        let a = simulator_error_report(&corpus, &model_1, &model_2, None, &config).unwrap();
        let b = simulator_error_report(&corpus, &model_1, &model_2, None, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_corpus_is_valid_and_deterministic() {
        let m1 = constant_model::<FirstInningsState>(1);
        let m2 = constant_model::<SecondInningsState>(2);
        let corpus_a = generate_corpus(&m1, &m2, 5, 123);
        let corpus_b = generate_corpus(&m1, &m2, 5, 123);
        assert_eq!(corpus_a.matches, corpus_b.matches);
        assert!(crate::data::validate_corpus(&corpus_a).is_empty());
        // Innings 1 scores 300; the chase of 300 at 2 a ball passes it.
        assert_eq!(corpus_a.matches[0].final_score_1, 300);
        assert_eq!(corpus_a.matches[0].winner, Winner::Team("Team B".into()));
    }
}
