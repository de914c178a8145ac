//! Discrete innings state spaces, trajectories, and Monte-Carlo targets.
//!
//! A first-innings state is the tuple (over, wickets, score band, ball,
//! extra flag) over dimensions `[51, 11, 50, 6, 2]`; the second innings adds a
//! target score band for dimensions `[51, 11, 50, 50, 6, 2]`. States encode
//! bijectively to row-major indices, so tables over the state space are plain
//! arrays.
//!
//! A match innings converts into a [`Trajectory`]: one [`StateStep`] per
//! delivery, holding the state the ball was bowled from. Legal deliveries
//! advance the ball (wrapping into the next over); an extra moves to the
//! matching `extra_flag = 1` state and further extras stay there. Wickets and
//! the score band update on every delivery, extras included.

use serde::{Deserialize, Serialize};

use crate::data::MatchRecord;

/// Dimensions of the first-innings state structure.
pub const FIRST_INNINGS_DIMS: [usize; 5] = [51, 11, 50, 6, 2];
/// Dimensions of the second-innings state structure.
pub const SECOND_INNINGS_DIMS: [usize; 6] = [51, 11, 50, 50, 6, 2];
/// Number of first-innings states (product of the dimensions).
pub const FIRST_INNINGS_STATES: usize = 336_600;
/// Number of second-innings states (product of the dimensions).
pub const SECOND_INNINGS_STATES: usize = 16_830_000;

/// Index into a row-major table over a state space.
pub type StateIndex = usize;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum StateError {
    #[error("state component `{component}` value {value} outside 0..={max}")]
    ComponentOutOfRange {
        component: &'static str,
        value: u32,
        max: u32,
    },
    #[error("state index {index} outside the {space}-state space")]
    IndexOutOfRange { index: usize, space: usize },
    #[error("innings {innings_no} has no deliveries")]
    EmptyInnings { innings_no: u8 },
    #[error("zero-score innings: Monte-Carlo targets are undefined")]
    ZeroScoreInnings,
    #[error("invalid action value {0}: modeled actions are 0,1,2,3,4,6")]
    InvalidAction(u8),
}

fn check(component: &'static str, value: u32, max: u32) -> Result<(), StateError> {
    if value > max {
        Err(StateError::ComponentOutOfRange {
            component,
            value,
            max,
        })
    } else {
        Ok(())
    }
}

/// Current score discretized into 10-run bands indexed 0..=49.
pub fn score_band(score: u32) -> u8 {
    (score / 10).min(49) as u8
}

/// Behavior shared by both innings state tuples.
pub trait GameState:
    Copy + Clone + Eq + std::hash::Hash + std::fmt::Debug + Send + Sync + Serialize + 'static
{
    /// Width of the normalized feature vector (5 or 6).
    const INPUT_WIDTH: usize;
    /// Total number of states in this innings' space.
    const STATE_COUNT: usize;
    /// Which innings this state structure models.
    const INNINGS_NO: u8;

    fn over(&self) -> u8;
    fn wickets(&self) -> u8;
    fn score_band(&self) -> u8;
    fn ball(&self) -> u8;
    fn extra_flag(&self) -> bool;
    fn target_band(&self) -> Option<u8>;

    /// Row-major index of the state; bijective over the valid ranges.
    fn index(&self) -> StateIndex;

    /// Inverse of [`GameState::index`].
    fn from_index(index: StateIndex) -> Result<Self, StateError>;

    /// Normalized features, each component in `[0, 1]`:
    /// `(over/50, wickets/10, band/49, ball/5, extra[, target/49])`.
    fn features(&self) -> Vec<f64>;

    /// No delivery can be bowled from a terminal state.
    fn is_terminal(&self) -> bool {
        self.over() >= 50 || self.wickets() >= 10
    }

    /// State after a legal delivery: the ball advances (wrapping into the
    /// next over) and the extra flag clears.
    fn next_legal(&self, wickets: u8, band: u8) -> Self;

    /// State after an extra: same over and ball, extra flag set.
    fn next_extra(&self, wickets: u8, band: u8) -> Self;

    /// Convert this innings of a match into a trajectory.
    fn build_trajectory(record: &MatchRecord) -> Result<Trajectory<Self>, StateError>;
}

/// First-innings state tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FirstInningsState {
    pub over: u8,
    pub wickets: u8,
    pub score_band: u8,
    pub ball: u8,
    pub extra_flag: u8,
}

impl FirstInningsState {
    pub fn new(
        over: u8,
        wickets: u8,
        score_band: u8,
        ball: u8,
        extra_flag: u8,
    ) -> Result<Self, StateError> {
        check("over", over as u32, 50)?;
        check("wickets", wickets as u32, 10)?;
        check("score_band", score_band as u32, 49)?;
        check("ball", ball as u32, 5)?;
        check("extra_flag", extra_flag as u32, 1)?;
        Ok(FirstInningsState {
            over,
            wickets,
            score_band,
            ball,
            extra_flag,
        })
    }

    pub fn initial() -> Self {
        FirstInningsState {
            over: 0,
            wickets: 0,
            score_band: 0,
            ball: 0,
            extra_flag: 0,
        }
    }
}

impl GameState for FirstInningsState {
    const INPUT_WIDTH: usize = 5;
    const STATE_COUNT: usize = FIRST_INNINGS_STATES;
    const INNINGS_NO: u8 = 1;

    fn over(&self) -> u8 {
        self.over
    }
    fn wickets(&self) -> u8 {
        self.wickets
    }
    fn score_band(&self) -> u8 {
        self.score_band
    }
    fn ball(&self) -> u8 {
        self.ball
    }
    fn extra_flag(&self) -> bool {
        self.extra_flag == 1
    }
    fn target_band(&self) -> Option<u8> {
        None
    }

    fn index(&self) -> StateIndex {
        ((((self.over as usize * 11 + self.wickets as usize) * 50 + self.score_band as usize) * 6
            + self.ball as usize)
            * 2)
            + self.extra_flag as usize
    }

    fn from_index(index: StateIndex) -> Result<Self, StateError> {
        if index >= FIRST_INNINGS_STATES {
            return Err(StateError::IndexOutOfRange {
                index,
                space: FIRST_INNINGS_STATES,
            });
        }
        let extra_flag = (index % 2) as u8;
        let rest = index / 2;
        let ball = (rest % 6) as u8;
        let rest = rest / 6;
        let score_band = (rest % 50) as u8;
        let rest = rest / 50;
        let wickets = (rest % 11) as u8;
        let over = (rest / 11) as u8;
        Ok(FirstInningsState {
            over,
            wickets,
            score_band,
            ball,
            extra_flag,
        })
    }

    fn features(&self) -> Vec<f64> {
        vec![
            self.over as f64 / 50.0,
            self.wickets as f64 / 10.0,
            self.score_band as f64 / 49.0,
            self.ball as f64 / 5.0,
            self.extra_flag as f64,
        ]
    }

    fn next_legal(&self, wickets: u8, band: u8) -> Self {
        let (over, ball) = if self.ball == 5 {
            (self.over + 1, 0)
        } else {
            (self.over, self.ball + 1)
        };
        FirstInningsState {
            over,
            wickets,
            score_band: band,
            ball,
            extra_flag: 0,
        }
    }

    fn next_extra(&self, wickets: u8, band: u8) -> Self {
        FirstInningsState {
            over: self.over,
            wickets,
            score_band: band,
            ball: self.ball,
            extra_flag: 1,
        }
    }

    fn build_trajectory(record: &MatchRecord) -> Result<Trajectory<Self>, StateError> {
        build_first_innings(record)
    }
}

/// Second-innings state tuple: the first-innings components plus the target
/// score band, fixed for the whole innings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecondInningsState {
    pub over: u8,
    pub wickets: u8,
    pub score_band: u8,
    pub target_band: u8,
    pub ball: u8,
    pub extra_flag: u8,
}

impl SecondInningsState {
    pub fn new(
        over: u8,
        wickets: u8,
        score_band: u8,
        target_band: u8,
        ball: u8,
        extra_flag: u8,
    ) -> Result<Self, StateError> {
        check("over", over as u32, 50)?;
        check("wickets", wickets as u32, 10)?;
        check("score_band", score_band as u32, 49)?;
        check("target_band", target_band as u32, 49)?;
        check("ball", ball as u32, 5)?;
        check("extra_flag", extra_flag as u32, 1)?;
        Ok(SecondInningsState {
            over,
            wickets,
            score_band,
            target_band,
            ball,
            extra_flag,
        })
    }

    pub fn initial(target_band: u8) -> Self {
        SecondInningsState {
            over: 0,
            wickets: 0,
            score_band: 0,
            target_band,
            ball: 0,
            extra_flag: 0,
        }
    }
}

impl GameState for SecondInningsState {
    const INPUT_WIDTH: usize = 6;
    const STATE_COUNT: usize = SECOND_INNINGS_STATES;
    const INNINGS_NO: u8 = 2;

    fn over(&self) -> u8 {
        self.over
    }
    fn wickets(&self) -> u8 {
        self.wickets
    }
    fn score_band(&self) -> u8 {
        self.score_band
    }
    fn ball(&self) -> u8 {
        self.ball
    }
    fn extra_flag(&self) -> bool {
        self.extra_flag == 1
    }
    fn target_band(&self) -> Option<u8> {
        Some(self.target_band)
    }

    fn index(&self) -> StateIndex {
        (((((self.over as usize * 11 + self.wickets as usize) * 50 + self.score_band as usize)
            * 50
            + self.target_band as usize)
            * 6
            + self.ball as usize)
            * 2)
            + self.extra_flag as usize
    }

    fn from_index(index: StateIndex) -> Result<Self, StateError> {
        if index >= SECOND_INNINGS_STATES {
            return Err(StateError::IndexOutOfRange {
                index,
                space: SECOND_INNINGS_STATES,
            });
        }
        let extra_flag = (index % 2) as u8;
        let rest = index / 2;
        let ball = (rest % 6) as u8;
        let rest = rest / 6;
        let target_band = (rest % 50) as u8;
        let rest = rest / 50;
        let score_band = (rest % 50) as u8;
        let rest = rest / 50;
        let wickets = (rest % 11) as u8;
        let over = (rest / 11) as u8;
        Ok(SecondInningsState {
            over,
            wickets,
            score_band,
            target_band,
            ball,
            extra_flag,
        })
    }

    fn features(&self) -> Vec<f64> {
        vec![
            self.over as f64 / 50.0,
            self.wickets as f64 / 10.0,
            self.score_band as f64 / 49.0,
            self.ball as f64 / 5.0,
            self.extra_flag as f64,
            self.target_band as f64 / 49.0,
        ]
    }

    fn next_legal(&self, wickets: u8, band: u8) -> Self {
        let (over, ball) = if self.ball == 5 {
            (self.over + 1, 0)
        } else {
            (self.over, self.ball + 1)
        };
        SecondInningsState {
            over,
            wickets,
            score_band: band,
            target_band: self.target_band,
            ball,
            extra_flag: 0,
        }
    }

    fn next_extra(&self, wickets: u8, band: u8) -> Self {
        SecondInningsState {
            over: self.over,
            wickets,
            score_band: band,
            target_band: self.target_band,
            ball: self.ball,
            extra_flag: 1,
        }
    }

    fn build_trajectory(record: &MatchRecord) -> Result<Trajectory<Self>, StateError> {
        build_second_innings(record)
    }
}

/// Modeled batting actions: runs attempted off a legal ball.
///
/// The rare 5-run delivery maps to [`Action::Four`], the nearest modeled
/// action; the reward model has no slot for fives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Dot,
    One,
    Two,
    Three,
    Four,
    Six,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Dot,
        Action::One,
        Action::Two,
        Action::Three,
        Action::Four,
        Action::Six,
    ];

    /// Runs scored when the action succeeds.
    pub fn runs(self) -> u8 {
        match self {
            Action::Dot => 0,
            Action::One => 1,
            Action::Two => 2,
            Action::Three => 3,
            Action::Four => 4,
            Action::Six => 6,
        }
    }

    /// Dense slot in `[0, 6)` for tables over actions.
    pub fn slot(self) -> usize {
        match self {
            Action::Dot => 0,
            Action::One => 1,
            Action::Two => 2,
            Action::Three => 3,
            Action::Four => 4,
            Action::Six => 5,
        }
    }

    pub fn from_slot(slot: usize) -> Option<Action> {
        Action::ALL.get(slot).copied()
    }

    /// Map observed runs to the modeled action (5 becomes 4).
    pub fn from_runs(runs: u8) -> Result<Action, StateError> {
        match runs {
            0 => Ok(Action::Dot),
            1 => Ok(Action::One),
            2 => Ok(Action::Two),
            3 => Ok(Action::Three),
            4 | 5 => Ok(Action::Four),
            6 => Ok(Action::Six),
            other => Err(StateError::InvalidAction(other)),
        }
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.runs())
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let runs = u8::deserialize(deserializer)?;
        Action::from_runs(runs).map_err(serde::de::Error::custom)
    }
}

/// One delivery of a trajectory: the state it was bowled from, the action
/// taken, and what happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateStep<S: GameState> {
    pub state: S,
    pub action: Action,
    pub wicket: bool,
    pub runs: u8,
}

/// A full innings as a state sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S: GameState> {
    pub steps: Vec<StateStep<S>>,
    pub final_score: u32,
}

impl<S: GameState> Trajectory<S> {
    /// Cumulative score before each step (same length as `steps`).
    pub fn prior_scores(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.steps.len());
        let mut c = 0u32;
        for step in &self.steps {
            out.push(c);
            c += step.runs as u32;
        }
        out
    }

    /// Debug dump: one JSON object per line with state, action, wicket, runs.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("step serializes"));
            out.push('\n');
        }
        out
    }
}

fn walk<S: GameState>(
    deliveries: &[crate::data::DeliveryRecord],
    start: S,
    final_score: u32,
    target: Option<u32>,
) -> Result<Trajectory<S>, StateError> {
    let mut steps = Vec::with_capacity(deliveries.len());
    let mut state = start;
    let mut score = 0u32;
    let mut wickets = 0u8;
    for d in deliveries {
        if state.is_terminal() {
            break;
        }
        if let Some(t) = target {
            if score > t {
                break;
            }
        }
        let action = Action::from_runs(d.runs_batted)?;
        steps.push(StateStep {
            state,
            action,
            wicket: d.is_wicket,
            runs: d.runs_batted,
        });
        score += d.runs_batted as u32;
        if d.is_wicket {
            wickets = (wickets + 1).min(10);
        }
        let band = score_band(score);
        state = if d.is_extra {
            state.next_extra(wickets, band)
        } else {
            state.next_legal(wickets, band)
        };
    }
    Ok(Trajectory { steps, final_score })
}

/// Convert a match's first innings into a trajectory.
///
/// Zero-score innings are rejected: their Monte-Carlo targets are undefined.
pub fn build_first_innings(
    record: &MatchRecord,
) -> Result<Trajectory<FirstInningsState>, StateError> {
    let deliveries: Vec<_> = record.deliveries_for(1).copied().collect();
    if deliveries.is_empty() {
        return Err(StateError::EmptyInnings { innings_no: 1 });
    }
    if record.final_score_1 == 0 {
        return Err(StateError::ZeroScoreInnings);
    }
    walk(
        &deliveries,
        FirstInningsState::initial(),
        record.final_score_1,
        None,
    )
}

/// Convert a match's second innings into a trajectory.
///
/// The target band is the first-innings final score band; the trajectory ends
/// at the winning run if the chase succeeds.
pub fn build_second_innings(
    record: &MatchRecord,
) -> Result<Trajectory<SecondInningsState>, StateError> {
    let deliveries: Vec<_> = record.deliveries_for(2).copied().collect();
    if deliveries.is_empty() {
        return Err(StateError::EmptyInnings { innings_no: 2 });
    }
    if record.final_score_2 == 0 {
        return Err(StateError::ZeroScoreInnings);
    }
    let target = record.final_score_1;
    walk(
        &deliveries,
        SecondInningsState::initial(score_band(target)),
        record.final_score_2,
        Some(target),
    )
}

/// A training sample for the value network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub features: Vec<f64>,
    pub target: f64,
}

/// Monte-Carlo regression targets: for a state reached with prior score `c`,
/// the target is `(final_score - c) / final_score`, the fraction of the
/// innings total still to come.
pub fn mc_targets<S: GameState>(
    trajectory: &Trajectory<S>,
    final_score: u32,
) -> Result<Vec<McSample>, StateError> {
    if final_score == 0 {
        return Err(StateError::ZeroScoreInnings);
    }
    let priors = trajectory.prior_scores();
    Ok(trajectory
        .steps
        .iter()
        .zip(priors)
        .map(|(step, c)| McSample {
            features: step.state.features(),
            target: (final_score - c.min(final_score)) as f64 / final_score as f64,
        })
        .collect())
}
