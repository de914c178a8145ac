//! Empirical transition statistics and the optimal batting policy.
//!
//! [`TransitionModel`] holds, per visited state, the wicket probability and
//! the run distribution conditional on no wicket, counted directly from the
//! corpus. Unvisited states fall back hierarchically: exact state, then the
//! (over, wickets) aggregate, then the innings-wide distribution, so a lookup
//! always yields a full distribution.
//!
//! [`compute_q`] runs finite-horizon backward induction over the first
//! innings space. Intended runs succeed whenever no wicket falls; the wicket
//! probability is action-independent and a wicket scores nothing. The
//! deterministic successor advances ball and over; a single ball's runs stay
//! below the 10-run band resolution, so the score band is carried unchanged
//! (bands are bottom-anchored). Extra-flag states re-enter the legal ball
//! sequence, and a closing value-iteration sweep over them confirms
//! convergence to 1e-9.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::marker::PhantomData;

use crate::data::Corpus;
use crate::irl::{reward, RewardCoefficients};
use crate::par;
use crate::state::{Action, FirstInningsState, GameState, FIRST_INNINGS_STATES};

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("no usable innings in the corpus")]
    NoData,
    #[error("non-finite value at state index {0} during backward induction")]
    NonFinite(usize),
    #[error("transition model file error: {0}")]
    ModelFile(String),
}

/// Raw counts for one state or aggregate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub visits: u64,
    pub wickets: u64,
    /// Non-wicket deliveries by action slot (runs 0, 1, 2, 3, 4, 6).
    pub runs: [u64; 6],
}

impl Counts {
    fn observe(&mut self, action: Action, wicket: bool) {
        self.visits += 1;
        if wicket {
            self.wickets += 1;
        } else {
            self.runs[action.slot()] += 1;
        }
    }

    fn merge(&mut self, other: &Counts) {
        self.visits += other.visits;
        self.wickets += other.wickets;
        for (a, b) in self.runs.iter_mut().zip(&other.runs) {
            *a += b;
        }
    }

    pub fn wicket_prob(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.wickets as f64 / self.visits as f64
        }
    }

    fn non_wicket(&self) -> u64 {
        self.visits - self.wickets
    }

    pub fn run_dist(&self) -> Option<[f64; 6]> {
        let n = self.non_wicket();
        if n == 0 {
            return None;
        }
        let mut dist = [0.0; 6];
        for (slot, &count) in self.runs.iter().enumerate() {
            dist[slot] = count as f64 / n as f64;
        }
        Some(dist)
    }
}

/// Non-optimal-action tallies for one state or aggregate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateCounts {
    /// Non-wicket deliveries observed.
    pub observed: u64,
    /// Of those, deliveries whose action differs from the policy.
    pub non_optimal: u64,
}

impl RateCounts {
    fn rate(&self) -> Option<f64> {
        if self.observed == 0 {
            None
        } else {
            Some(self.non_optimal as f64 / self.observed as f64)
        }
    }
}

/// Per-state empirical transition statistics with hierarchical fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel<S: GameState> {
    states: HashMap<usize, Counts>,
    agg: HashMap<(u8, u8), Counts>,
    global: Counts,
    nonoptimal_states: HashMap<usize, RateCounts>,
    nonoptimal_agg: HashMap<(u8, u8), RateCounts>,
    nonoptimal_global: RateCounts,
    has_nonoptimal: bool,
    matches_used: usize,
    _innings: PhantomData<S>,
}

impl<S: GameState> TransitionModel<S> {
    /// Wicket probability for a state: exact when visited, otherwise the
    /// (over, wickets) aggregate, otherwise the innings-wide rate.
    pub fn wicket_prob(&self, state: &S) -> f64 {
        if let Some(c) = self.states.get(&state.index()) {
            if c.visits > 0 {
                return c.wicket_prob();
            }
        }
        if let Some(c) = self.agg.get(&(state.over(), state.wickets())) {
            if c.visits > 0 {
                return c.wicket_prob();
            }
        }
        self.global.wicket_prob()
    }

    /// Run distribution conditional on no wicket, with the same fallback.
    ///
    /// A corpus whose every ball is a wicket has no scoring observations at
    /// all; the final fallback is then the all-dot distribution, which the
    /// simulator never samples because the wicket branch always fires first.
    pub fn run_dist(&self, state: &S) -> [f64; 6] {
        if let Some(dist) = self.states.get(&state.index()).and_then(Counts::run_dist) {
            return dist;
        }
        if let Some(dist) = self
            .agg
            .get(&(state.over(), state.wickets()))
            .and_then(Counts::run_dist)
        {
            return dist;
        }
        self.global
            .run_dist()
            .unwrap_or([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    /// Probability of playing a non-optimal action, when rates are attached.
    pub fn nonoptimal_prob(&self, state: &S) -> Option<f64> {
        if !self.has_nonoptimal {
            return None;
        }
        if let Some(rate) = self
            .nonoptimal_states
            .get(&state.index())
            .and_then(RateCounts::rate)
        {
            return Some(rate);
        }
        if let Some(rate) = self
            .nonoptimal_agg
            .get(&(state.over(), state.wickets()))
            .and_then(RateCounts::rate)
        {
            return Some(rate);
        }
        Some(self.nonoptimal_global.rate().unwrap_or(0.0))
    }

    pub fn has_nonoptimal(&self) -> bool {
        self.has_nonoptimal
    }

    pub fn matches_used(&self) -> usize {
        self.matches_used
    }

    pub fn visited_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_counts(&self, state: &S) -> Option<&Counts> {
        self.states.get(&state.index())
    }

    /// Build a model directly from per-state counts (synthetic models for
    /// simulation experiments go through this).
    pub fn from_counts(
        states: HashMap<usize, Counts>,
        agg: HashMap<(u8, u8), Counts>,
        global: Counts,
        matches_used: usize,
    ) -> Result<Self, PolicyError> {
        if global.visits == 0 {
            return Err(PolicyError::NoData);
        }
        Ok(TransitionModel {
            states,
            agg,
            global,
            nonoptimal_states: HashMap::new(),
            nonoptimal_agg: HashMap::new(),
            nonoptimal_global: RateCounts::default(),
            has_nonoptimal: false,
            matches_used,
            _innings: PhantomData,
        })
    }
}

/// Count transitions over every usable innings of the corpus.
pub fn estimate_transitions<S: GameState>(
    corpus: &Corpus,
) -> Result<TransitionModel<S>, PolicyError> {
    let partials = par::map_slice(&corpus.matches, |record| {
        let trajectory = match S::build_trajectory(record) {
            Ok(t) => t,
            Err(_) => return None,
        };
        let mut states: HashMap<usize, Counts> = HashMap::new();
        for step in &trajectory.steps {
            states
                .entry(step.state.index())
                .or_default()
                .observe(step.action, step.wicket);
        }
        Some((trajectory, states))
    });

    let mut states: HashMap<usize, Counts> = HashMap::new();
    let mut agg: HashMap<(u8, u8), Counts> = HashMap::new();
    let mut global = Counts::default();
    let mut matches_used = 0usize;
    for partial in partials.into_iter().flatten() {
        let (trajectory, partial_states) = partial;
        matches_used += 1;
        for (index, counts) in partial_states {
            states.entry(index).or_default().merge(&counts);
        }
        for step in &trajectory.steps {
            agg.entry((step.state.over(), step.state.wickets()))
                .or_default()
                .observe(step.action, step.wicket);
            global.observe(step.action, step.wicket);
        }
    }
    if matches_used == 0 || global.visits == 0 {
        return Err(PolicyError::NoData);
    }
    Ok(TransitionModel {
        states,
        agg,
        global,
        nonoptimal_states: HashMap::new(),
        nonoptimal_agg: HashMap::new(),
        nonoptimal_global: RateCounts::default(),
        has_nonoptimal: false,
        matches_used,
        _innings: PhantomData,
    })
}

/// State-action values over the first-innings space.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    /// `q[state_index][action_slot]`.
    pub q: Vec<[f64; 6]>,
    /// `v[state_index] = max_a q` for non-terminal states, 0 at terminals.
    pub v: Vec<f64>,
}

/// Finite-horizon backward induction under the inferred reward.
pub fn compute_q(
    coeffs: &RewardCoefficients,
    model: &TransitionModel<FirstInningsState>,
) -> Result<QTable, PolicyError> {
    let mut q = vec![[0.0f64; 6]; FIRST_INNINGS_STATES];
    let mut v = vec![0.0f64; FIRST_INNINGS_STATES];

    // Terminal states: no continuation, Q is the bare reward, V stays 0.
    for index in 0..FIRST_INNINGS_STATES {
        let state = FirstInningsState::from_index(index).expect("index in range");
        if state.is_terminal() {
            for action in Action::ALL {
                q[index][action.slot()] = reward(&state, action, coeffs);
            }
        }
    }

    let fill = |state: FirstInningsState,
                q: &mut Vec<[f64; 6]>,
                v: &mut Vec<f64>|
     -> Result<(), PolicyError> {
        let index = state.index();
        let p_w = model.wicket_prob(&state);
        let wicket_next = state.next_legal(state.wickets + 1, state.score_band);
        let succ = state.next_legal(state.wickets, state.score_band);
        let continuation = p_w * v[wicket_next.index()] + (1.0 - p_w) * v[succ.index()];
        let mut best = f64::NEG_INFINITY;
        for action in Action::ALL {
            let value = reward(&state, action, coeffs) + continuation;
            if !value.is_finite() {
                return Err(PolicyError::NonFinite(index));
            }
            q[index][action.slot()] = value;
            best = best.max(value);
        }
        v[index] = best;
        Ok(())
    };

    // Walk ball positions from the last legal delivery back to the first.
    for position in (0..300usize).rev() {
        let over = (position / 6) as u8;
        let ball = (position % 6) as u8;
        for wickets in 0..10u8 {
            for band in 0..50u8 {
                for extra in 0..2u8 {
                    let state = FirstInningsState {
                        over,
                        wickets,
                        score_band: band,
                        ball,
                        extra_flag: extra,
                    };
                    fill(state, &mut q, &mut v)?;
                }
            }
        }
    }

    // Extra-flag states advance into the legal sequence, so one sweep
    // suffices; iterate anyway until the values are stationary.
    for _ in 0..100 {
        let mut delta = 0.0f64;
        for position in (0..300usize).rev() {
            let over = (position / 6) as u8;
            let ball = (position % 6) as u8;
            for wickets in 0..10u8 {
                for band in 0..50u8 {
                    let state = FirstInningsState {
                        over,
                        wickets,
                        score_band: band,
                        ball,
                        extra_flag: 1,
                    };
                    let before = v[state.index()];
                    fill(state, &mut q, &mut v)?;
                    delta = delta.max((v[state.index()] - before).abs());
                }
            }
        }
        if delta < 1e-9 {
            break;
        }
    }

    Ok(QTable { q, v })
}

/// Best action per state, ties resolved toward the smallest action value.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub actions: Vec<Action>,
    pub v: Vec<f64>,
}

impl PolicyTable {
    pub fn action(&self, state: &FirstInningsState) -> Action {
        self.actions[state.index()]
    }
}

pub fn optimal_policy(q: &QTable) -> PolicyTable {
    let actions =
        q.q.iter()
            .map(|row| {
                let mut best = Action::Dot;
                let mut best_value = row[0];
                for action in Action::ALL.into_iter().skip(1) {
                    if row[action.slot()] > best_value {
                        best_value = row[action.slot()];
                        best = action;
                    }
                }
                best
            })
            .collect();
    PolicyTable {
        actions,
        v: q.v.clone(),
    }
}

/// Per-state frequency of playing something other than the policy action,
/// over non-wicket deliveries, with the usual fallback hierarchy.
pub fn nonoptimal_rate(
    corpus: &Corpus,
    policy: &PolicyTable,
) -> Result<NonOptimalRates, PolicyError> {
    let partials = par::map_slice(&corpus.matches, |record| {
        FirstInningsState::build_trajectory(record).ok()
    });
    let mut states: HashMap<usize, RateCounts> = HashMap::new();
    let mut agg: HashMap<(u8, u8), RateCounts> = HashMap::new();
    let mut global = RateCounts::default();
    let mut observed_any = false;
    for trajectory in partials.into_iter().flatten() {
        observed_any = true;
        for step in &trajectory.steps {
            if step.wicket {
                continue;
            }
            let non_optimal = step.action != policy.action(&step.state);
            for counts in [
                states.entry(step.state.index()).or_default(),
                agg.entry((step.state.over, step.state.wickets))
                    .or_default(),
                &mut global,
            ] {
                counts.observed += 1;
                if non_optimal {
                    counts.non_optimal += 1;
                }
            }
        }
    }
    if !observed_any {
        return Err(PolicyError::NoData);
    }
    Ok(NonOptimalRates {
        states,
        agg,
        global,
    })
}

/// Output of [`nonoptimal_rate`], attachable to a first-innings model.
#[derive(Debug, Clone, PartialEq)]
pub struct NonOptimalRates {
    pub states: HashMap<usize, RateCounts>,
    pub agg: HashMap<(u8, u8), RateCounts>,
    pub global: RateCounts,
}

impl NonOptimalRates {
    pub fn rate_for(&self, state: &FirstInningsState) -> f64 {
        self.states
            .get(&state.index())
            .and_then(RateCounts::rate)
            .or_else(|| {
                self.agg
                    .get(&(state.over, state.wickets))
                    .and_then(RateCounts::rate)
            })
            .unwrap_or_else(|| self.global.rate().unwrap_or(0.0))
    }
}

impl TransitionModel<FirstInningsState> {
    /// Attach non-optimal-action rates so optimal-mode simulation can mix
    /// the policy with observed behavior.
    pub fn set_nonoptimal(&mut self, rates: NonOptimalRates) {
        self.nonoptimal_states = rates.states;
        self.nonoptimal_agg = rates.agg;
        self.nonoptimal_global = rates.global;
        self.has_nonoptimal = true;
    }
}

// --- serialization -----------------------------------------------------------

/// Transition model file: sparse per-state stats keyed by state index, plus
/// the fallback tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModelPayload {
    pub innings_no: u8,
    pub matches_used: usize,
    pub states: BTreeMap<String, StateStatsPayload>,
    pub over_wickets: BTreeMap<String, StateStatsPayload>,
    pub global: StateStatsPayload,
    pub has_nonoptimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateStatsPayload {
    pub visits: u64,
    pub wicket_prob: f64,
    pub run_dist: Option<[f64; 6]>,
    pub counts: Counts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonoptimal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonoptimal_counts: Option<RateCounts>,
}

fn stats_payload(counts: &Counts, rates: Option<&RateCounts>) -> StateStatsPayload {
    StateStatsPayload {
        visits: counts.visits,
        wicket_prob: counts.wicket_prob(),
        run_dist: counts.run_dist(),
        counts: *counts,
        nonoptimal: rates.and_then(RateCounts::rate),
        nonoptimal_counts: rates.copied(),
    }
}

impl<S: GameState> TransitionModel<S> {
    pub fn to_payload(&self) -> TransitionModelPayload {
        let states = self
            .states
            .iter()
            .map(|(index, counts)| {
                let rates = self.nonoptimal_states.get(index);
                (index.to_string(), stats_payload(counts, rates))
            })
            .collect();
        let over_wickets = self
            .agg
            .iter()
            .map(|(&(over, wickets), counts)| {
                let rates = self.nonoptimal_agg.get(&(over, wickets));
                (format!("{over}:{wickets}"), stats_payload(counts, rates))
            })
            .collect();
        TransitionModelPayload {
            innings_no: S::INNINGS_NO,
            matches_used: self.matches_used,
            states,
            over_wickets,
            global: stats_payload(
                &self.global,
                if self.has_nonoptimal {
                    Some(&self.nonoptimal_global)
                } else {
                    None
                },
            ),
            has_nonoptimal: self.has_nonoptimal,
        }
    }

    pub fn from_payload(payload: TransitionModelPayload) -> Result<Self, PolicyError> {
        if payload.innings_no != S::INNINGS_NO {
            return Err(PolicyError::ModelFile(format!(
                "model is for innings {}, expected innings {}",
                payload.innings_no,
                S::INNINGS_NO
            )));
        }
        let mut states = HashMap::new();
        let mut nonoptimal_states = HashMap::new();
        for (key, stats) in &payload.states {
            let index: usize = key
                .parse()
                .map_err(|_| PolicyError::ModelFile(format!("bad state index `{key}`")))?;
            if index >= S::STATE_COUNT {
                return Err(PolicyError::ModelFile(format!(
                    "state index {index} outside the {}-state space",
                    S::STATE_COUNT
                )));
            }
            states.insert(index, stats.counts);
            if let Some(rc) = stats.nonoptimal_counts {
                nonoptimal_states.insert(index, rc);
            }
        }
        let mut agg = HashMap::new();
        let mut nonoptimal_agg = HashMap::new();
        for (key, stats) in &payload.over_wickets {
            let (o, w) = key
                .split_once(':')
                .ok_or_else(|| PolicyError::ModelFile(format!("bad aggregate key `{key}`")))?;
            let over: u8 = o
                .parse()
                .map_err(|_| PolicyError::ModelFile(format!("bad over in `{key}`")))?;
            let wickets: u8 = w
                .parse()
                .map_err(|_| PolicyError::ModelFile(format!("bad wickets in `{key}`")))?;
            agg.insert((over, wickets), stats.counts);
            if let Some(rc) = stats.nonoptimal_counts {
                nonoptimal_agg.insert((over, wickets), rc);
            }
        }
        Ok(TransitionModel {
            states,
            agg,
            global: payload.global.counts,
            nonoptimal_states,
            nonoptimal_agg,
            nonoptimal_global: payload.global.nonoptimal_counts.unwrap_or_default(),
            has_nonoptimal: payload.has_nonoptimal,
            matches_used: payload.matches_used,
            _innings: PhantomData,
        })
    }
}

/// Policy file: dense arrays indexed by state, Q included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPayload {
    pub innings_no: u8,
    /// Best action per state, as runs.
    pub actions: Vec<u8>,
    pub v: Vec<f64>,
    pub q: Vec<[f64; 6]>,
}

impl PolicyPayload {
    pub fn from_tables(policy: &PolicyTable, q: &QTable) -> PolicyPayload {
        PolicyPayload {
            innings_no: 1,
            actions: policy.actions.iter().map(|a| a.runs()).collect(),
            v: policy.v.clone(),
            q: q.q.clone(),
        }
    }

    pub fn into_tables(self) -> Result<(PolicyTable, QTable), PolicyError> {
        if self.actions.len() != FIRST_INNINGS_STATES
            || self.v.len() != FIRST_INNINGS_STATES
            || self.q.len() != FIRST_INNINGS_STATES
        {
            return Err(PolicyError::ModelFile(format!(
                "policy arrays must cover {FIRST_INNINGS_STATES} states"
            )));
        }
        let actions = self
            .actions
            .iter()
            .map(|&runs| Action::from_runs(runs))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PolicyError::ModelFile(e.to_string()))?;
        let policy = PolicyTable {
            actions,
            v: self.v.clone(),
        };
        let q = QTable {
            q: self.q,
            v: self.v,
        };
        Ok((policy, q))
    }
}
