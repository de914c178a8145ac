//! Canonical ball-by-ball match data.
//!
//! One match file is UTF-8 JSON of the form
//! `{match_id, team_first, team_second, winner, innings: [{deliveries: [...]}]}`
//! with one delivery object per ball. A corpus directory holds one such file
//! per match plus a `manifest.json` listing the match ids.
//!
//! Third-party formats never reach the math core; see [`crate::cricsheet`]
//! for the Cricsheet adapter that produces these records.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::par;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus error: {0}")]
    Corpus(String),
}

impl DataError {
    fn validation(field: &str, message: impl Into<String>) -> Self {
        DataError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One ball of a match.
///
/// `runs_batted` is the total credited off the delivery, extras runs included.
/// `is_extra` marks deliveries that must be re-bowled (wides and no-balls);
/// byes and leg-byes count as legal deliveries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub innings_no: u8,
    pub over: u8,
    pub ball_in_over: u8,
    pub runs_batted: u8,
    pub is_extra: bool,
    pub is_wicket: bool,
}

/// Match result as declared in the source data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Winner {
    Team(String),
    Tie,
    NoResult,
}

impl Winner {
    pub fn as_str(&self) -> &str {
        match self {
            Winner::Team(name) => name,
            Winner::Tie => "tie",
            Winner::NoResult => "no result",
        }
    }

    fn from_string(s: String) -> Self {
        match s.as_str() {
            "tie" => Winner::Tie,
            "no result" => Winner::NoResult,
            _ => Winner::Team(s),
        }
    }
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Winner {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Winner {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Winner::from_string(String::deserialize(deserializer)?))
    }
}

/// A validated one-day match: two innings of ordered deliveries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchRecord {
    pub match_id: String,
    pub team_first: String,
    pub team_second: String,
    pub winner: Winner,
    pub deliveries: Vec<DeliveryRecord>,
    pub final_score_1: u32,
    pub final_score_2: u32,
    pub wickets_lost_1: u8,
    pub wickets_lost_2: u8,
}

impl MatchRecord {
    /// Build a record from per-innings deliveries, deriving scores and wickets.
    pub fn from_innings(
        match_id: String,
        team_first: String,
        team_second: String,
        winner: Winner,
        innings: [Vec<DeliveryRecord>; 2],
    ) -> Result<Self, DataError> {
        let [first, second] = innings;
        let score = |ds: &[DeliveryRecord]| ds.iter().map(|d| d.runs_batted as u32).sum::<u32>();
        let wickets = |ds: &[DeliveryRecord]| ds.iter().filter(|d| d.is_wicket).count() as u8;
        let record = MatchRecord {
            match_id,
            team_first,
            team_second,
            winner,
            final_score_1: score(&first),
            final_score_2: score(&second),
            wickets_lost_1: wickets(&first),
            wickets_lost_2: wickets(&second),
            deliveries: first.into_iter().chain(second).collect(),
        };
        record.check_invariants()?;
        Ok(record)
    }

    pub fn deliveries_for(&self, innings_no: u8) -> impl Iterator<Item = &DeliveryRecord> {
        self.deliveries
            .iter()
            .filter(move |d| d.innings_no == innings_no)
    }

    pub fn final_score(&self, innings_no: u8) -> u32 {
        if innings_no == 1 {
            self.final_score_1
        } else {
            self.final_score_2
        }
    }

    pub fn wickets_lost(&self, innings_no: u8) -> u8 {
        if innings_no == 1 {
            self.wickets_lost_1
        } else {
            self.wickets_lost_2
        }
    }

    /// The winning side, if the declared winner matches one of the teams.
    pub fn winner_team(&self) -> Option<&str> {
        match &self.winner {
            Winner::Team(name) if *name == self.team_first || *name == self.team_second => {
                Some(name.as_str())
            }
            _ => None,
        }
    }

    fn check_invariants(&self) -> Result<(), DataError> {
        for violation in validate_match(self) {
            return Err(DataError::validation(&violation.field, violation.message));
        }
        Ok(())
    }
}

/// Parse one canonical match file.
pub fn parse_match(bytes: &[u8]) -> Result<MatchRecord, DataError> {
    let doc: CanonicalMatch = serde_json::from_slice(bytes)?;
    if doc.innings.is_empty() || doc.innings[0].deliveries.is_empty() {
        return Err(DataError::validation("deliveries", "no deliveries"));
    }
    if doc.innings.len() > 2 {
        return Err(DataError::validation(
            "innings",
            format!("expected at most 2 innings, found {}", doc.innings.len()),
        ));
    }

    let mut innings: [Vec<DeliveryRecord>; 2] = [Vec::new(), Vec::new()];
    for (idx, inn) in doc.innings.iter().enumerate() {
        let innings_no = idx as u8 + 1;
        innings[idx] = inn
            .deliveries
            .iter()
            .map(|d| DeliveryRecord {
                innings_no,
                over: d.over,
                ball_in_over: d.ball_in_over,
                runs_batted: d.runs_batted,
                is_extra: d.is_extra,
                is_wicket: d.is_wicket,
            })
            .collect();
    }

    let record = MatchRecord::from_innings(
        doc.match_id,
        doc.team_first,
        doc.team_second,
        doc.winner,
        innings,
    )?;

    // Declared totals, when present, must agree with the delivery sums.
    for (idx, inn) in doc.innings.iter().enumerate() {
        let innings_no = idx as u8 + 1;
        if let Some(declared) = inn.final_score {
            if declared != record.final_score(innings_no) {
                return Err(DataError::validation(
                    "final_score",
                    format!(
                        "innings {innings_no} declares {declared} but deliveries sum to {}",
                        record.final_score(innings_no)
                    ),
                ));
            }
        }
        if let Some(declared) = inn.wickets_lost {
            if declared != record.wickets_lost(innings_no) {
                return Err(DataError::validation(
                    "wickets_lost",
                    format!(
                        "innings {innings_no} declares {declared} but deliveries contain {}",
                        record.wickets_lost(innings_no)
                    ),
                ));
            }
        }
    }
    Ok(record)
}

/// Serialize a match back to the canonical format.
pub fn to_canonical(record: &MatchRecord) -> String {
    let innings = (1..=2)
        .map(|innings_no| CanonicalInnings {
            deliveries: record
                .deliveries_for(innings_no)
                .map(|d| CanonicalDelivery {
                    over: d.over,
                    ball_in_over: d.ball_in_over,
                    runs_batted: d.runs_batted,
                    is_extra: d.is_extra,
                    is_wicket: d.is_wicket,
                })
                .collect(),
            final_score: Some(record.final_score(innings_no)),
            wickets_lost: Some(record.wickets_lost(innings_no)),
        })
        .collect();
    let doc = CanonicalMatch {
        match_id: record.match_id.clone(),
        team_first: record.team_first.clone(),
        team_second: record.team_second.clone(),
        winner: record.winner.clone(),
        innings,
    };
    serde_json::to_string_pretty(&doc).expect("canonical match serializes")
}

#[derive(Serialize, Deserialize)]
struct CanonicalMatch {
    match_id: String,
    team_first: String,
    team_second: String,
    winner: Winner,
    innings: Vec<CanonicalInnings>,
}

#[derive(Serialize, Deserialize)]
struct CanonicalInnings {
    deliveries: Vec<CanonicalDelivery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_score: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wickets_lost: Option<u8>,
}

#[derive(Serialize, Deserialize)]
struct CanonicalDelivery {
    over: u8,
    ball_in_over: u8,
    runs_batted: u8,
    is_extra: bool,
    is_wicket: bool,
}

/// Where a corpus came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub ingested_at: String,
}

/// An immutable collection of validated matches.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub matches: Vec<MatchRecord>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    match_ids: Vec<String>,
    source: String,
    ingested_at: String,
    count: usize,
}

impl Corpus {
    pub fn new(matches: Vec<MatchRecord>, provenance: Provenance) -> Result<Self, DataError> {
        let mut seen = BTreeSet::new();
        for m in &matches {
            if !seen.insert(m.match_id.as_str()) {
                return Err(DataError::Corpus(format!(
                    "duplicate match_id `{}`",
                    m.match_id
                )));
            }
        }
        Ok(Corpus {
            matches,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// Write the corpus as a directory of canonical match files plus manifest.
    pub fn save_dir(&self, dir: &Path) -> Result<(), DataError> {
        fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
        for m in &self.matches {
            let path = dir.join(format!("{}.json", sanitize_id(&m.match_id)));
            fs::write(&path, to_canonical(m)).map_err(|e| DataError::io(&path, e))?;
        }
        let manifest = Manifest {
            match_ids: self.matches.iter().map(|m| m.match_id.clone()).collect(),
            source: self.provenance.source.clone(),
            ingested_at: self.provenance.ingested_at.clone(),
            count: self.matches.len(),
        };
        let path = dir.join("manifest.json");
        let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, bytes).map_err(|e| DataError::io(&path, e))?;
        Ok(())
    }

    /// Load a corpus directory written by [`Corpus::save_dir`].
    pub fn load_dir(dir: &Path) -> Result<Self, DataError> {
        let manifest_path = dir.join("manifest.json");
        let bytes = fs::read(&manifest_path).map_err(|e| DataError::io(&manifest_path, e))?;
        let manifest: Manifest = serde_json::from_slice(&bytes)?;
        let results = par::map_slice(&manifest.match_ids, |id| {
            let path = dir.join(format!("{}.json", sanitize_id(id)));
            let bytes = fs::read(&path).map_err(|e| DataError::io(&path, e))?;
            parse_match(&bytes)
        });
        let mut matches = Vec::with_capacity(results.len());
        for r in results {
            matches.push(r?);
        }
        Corpus::new(
            matches,
            Provenance {
                source: manifest.source,
                ingested_at: manifest.ingested_at,
            },
        )
    }

    /// SHA-256 of the manifest file, used as artifact provenance.
    pub fn manifest_sha256(dir: &Path) -> Result<String, DataError> {
        let path = dir.join("manifest.json");
        let bytes = fs::read(&path).map_err(|e| DataError::io(&path, e))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        Ok(format!("{:x}", hasher.finalize()))
    }
}

fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// A named invariant violation found during corpus validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub match_id: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.match_id, self.message, self.field)
    }
}

fn validate_match(record: &MatchRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: &str, message: String| {
        out.push(Violation {
            match_id: record.match_id.clone(),
            field: field.to_string(),
            message,
        })
    };

    for d in &record.deliveries {
        if d.innings_no != 1 && d.innings_no != 2 {
            push(
                "innings_no",
                format!("innings_no {} not in {{1,2}}", d.innings_no),
            );
        }
        if d.over > 49 {
            push("over", format!("over {} outside 0..=49", d.over));
        }
        if d.ball_in_over > 5 {
            push(
                "ball_in_over",
                format!("ball_in_over {} outside 0..=5", d.ball_in_over),
            );
        }
        if d.runs_batted > 6 {
            push(
                "runs_batted",
                format!("runs_batted {} outside 0..=6", d.runs_batted),
            );
        }
    }

    for innings_no in 1..=2u8 {
        let deliveries: Vec<&DeliveryRecord> = record.deliveries_for(innings_no).collect();
        let sum: u32 = deliveries.iter().map(|d| d.runs_batted as u32).sum();
        if sum != record.final_score(innings_no) {
            push(
                "final_score",
                format!(
                    "innings {innings_no} final score {} differs from delivery sum {sum}",
                    record.final_score(innings_no)
                ),
            );
        }
        let wickets = deliveries.iter().filter(|d| d.is_wicket).count();
        if wickets != record.wickets_lost(innings_no) as usize {
            push(
                "wickets_lost",
                format!(
                    "innings {innings_no} wickets_lost {} differs from wicket deliveries {wickets}",
                    record.wickets_lost(innings_no)
                ),
            );
        }
        if wickets > 10 {
            push(
                "wickets_lost",
                format!("wickets_lost exceeds 10 in innings {innings_no}"),
            );
        }
        for pair in deliveries.windows(2) {
            if pair[1].over < pair[0].over {
                push(
                    "deliveries",
                    format!("deliveries out of order in innings {innings_no}"),
                );
                break;
            }
        }
        for pair in deliveries.windows(2) {
            if pair[0].is_extra
                && (pair[1].over != pair[0].over || pair[1].ball_in_over != pair[0].ball_in_over)
            {
                push(
                    "ball_in_over",
                    format!(
                        "extra at innings {innings_no} over {} ball {} advances the ball index",
                        pair[0].over, pair[0].ball_in_over
                    ),
                );
                break;
            }
        }
    }
    out
}

/// Check every match in the corpus against the type invariants.
///
/// Violations are data, not errors: the list is empty iff the corpus is clean.
pub fn validate_corpus(corpus: &Corpus) -> Vec<Violation> {
    let mut out: Vec<Violation> = par::map_slice(&corpus.matches, validate_match)
        .into_iter()
        .flatten()
        .collect();
    let mut seen = BTreeSet::new();
    for m in &corpus.matches {
        if !seen.insert(m.match_id.as_str()) {
            out.push(Violation {
                match_id: m.match_id.clone(),
                field: "match_id".to_string(),
                message: "duplicate match_id".to_string(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singles(innings_no: u8, n: usize) -> Vec<DeliveryRecord> {
        (0..n)
            .map(|i| DeliveryRecord {
                innings_no,
                over: (i / 6) as u8,
                ball_in_over: (i % 6) as u8,
                runs_batted: 1,
                is_extra: false,
                is_wicket: false,
            })
            .collect()
    }

    fn match_json(innings1: &[DeliveryRecord], declared_score: Option<u32>) -> String {
        let deliveries: Vec<serde_json::Value> = innings1
            .iter()
            .map(|d| {
                serde_json::json!({
                    "over": d.over, "ball_in_over": d.ball_in_over,
                    "runs_batted": d.runs_batted, "is_extra": d.is_extra, "is_wicket": d.is_wicket
                })
            })
            .collect();
        let mut innings = serde_json::json!({ "deliveries": deliveries });
        if let Some(score) = declared_score {
            innings["final_score"] = score.into();
        }
        serde_json::json!({
            "match_id": "m1", "team_first": "A", "team_second": "B",
            "winner": "A", "innings": [innings]
        })
        .to_string()
    }

    #[test]
    fn parse_full_innings_of_singles() {
        let json = match_json(&singles(1, 300), None);
        let record = parse_match(json.as_bytes()).unwrap();
        assert_eq!(record.final_score_1, 300);
        assert_eq!(record.wickets_lost_1, 0);
        assert_eq!(record.deliveries.len(), 300);
    }

    #[test]
    fn declared_score_mismatch_is_a_validation_error() {
        let json = match_json(&singles(1, 12), Some(13));
        let err = parse_match(json.as_bytes()).unwrap_err();
        match err {
            DataError::Validation { field, .. } => assert_eq!(field, "final_score"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn empty_deliveries_rejected() {
        let json = serde_json::json!({
            "match_id": "m1", "team_first": "A", "team_second": "B",
            "winner": "no result", "innings": [{ "deliveries": [] }]
        })
        .to_string();
        let err = parse_match(json.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("no deliveries"));
    }

    #[test]
    fn malformed_document_reports_parse_context() {
        let err = parse_match(b"{ not json").unwrap_err();
        assert!(matches!(err, DataError::Parse(_)));
        assert!(err.to_string().contains("line"));
    }

    #[test]
    fn canonical_round_trip_is_identity() {
        let record = MatchRecord::from_innings(
            "rt".into(),
            "A".into(),
            "B".into(),
            Winner::Team("B".into()),
            [singles(1, 30), singles(2, 13)],
        )
        .unwrap();
        let reparsed = parse_match(to_canonical(&record).as_bytes()).unwrap();
        assert_eq!(record, reparsed);
    }

    #[test]
    fn ingestion_is_deterministic() {
        let json = match_json(&singles(1, 24), None);
        let a = parse_match(json.as_bytes()).unwrap();
        let b = parse_match(json.as_bytes()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validate_flags_excess_wickets() {
        let mut deliveries = singles(1, 12);
        for d in deliveries.iter_mut().take(11) {
            d.is_wicket = true;
        }
        // Bypass the constructor to build a knowingly broken record.
        let record = MatchRecord {
            match_id: "bad".into(),
            team_first: "A".into(),
            team_second: "B".into(),
            winner: Winner::NoResult,
            final_score_1: 12,
            final_score_2: 0,
            wickets_lost_1: 11,
            wickets_lost_2: 0,
            deliveries,
        };
        let corpus = Corpus::new(vec![record], test_provenance()).unwrap();
        let violations = validate_corpus(&corpus);
        assert!(violations
            .iter()
            .any(|v| v.message.contains("wickets_lost exceeds 10")));
    }

    #[test]
    fn validate_flags_out_of_order_overs() {
        let mut deliveries = singles(1, 12);
        deliveries[3].over = 5;
        let score: u32 = deliveries.iter().map(|d| d.runs_batted as u32).sum();
        let record = MatchRecord {
            match_id: "ooo".into(),
            team_first: "A".into(),
            team_second: "B".into(),
            winner: Winner::NoResult,
            final_score_1: score,
            final_score_2: 0,
            wickets_lost_1: 0,
            wickets_lost_2: 0,
            deliveries,
        };
        let corpus = Corpus::new(vec![record], test_provenance()).unwrap();
        assert!(validate_corpus(&corpus)
            .iter()
            .any(|v| v.message.contains("out of order")));
    }

    #[test]
    fn valid_corpus_has_no_violations() {
        let record = MatchRecord::from_innings(
            "ok".into(),
            "A".into(),
            "B".into(),
            Winner::Team("A".into()),
            [singles(1, 60), singles(2, 60)],
        )
        .unwrap();
        let corpus = Corpus::new(vec![record], test_provenance()).unwrap();
        assert!(validate_corpus(&corpus).is_empty());
    }

    #[test]
    fn corpus_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let record = MatchRecord::from_innings(
            "m-42".into(),
            "A".into(),
            "B".into(),
            Winner::Tie,
            [singles(1, 18), singles(2, 18)],
        )
        .unwrap();
        let corpus = Corpus::new(vec![record], test_provenance()).unwrap();
        corpus.save_dir(dir.path()).unwrap();
        let loaded = Corpus::load_dir(dir.path()).unwrap();
        assert_eq!(corpus.matches, loaded.matches);
        assert_eq!(corpus.provenance, loaded.provenance);
        assert_eq!(loaded.matches[0].winner, Winner::Tie);
        let hash = Corpus::manifest_sha256(dir.path()).unwrap();
        assert_eq!(hash.len(), 64);
    }

    fn test_provenance() -> Provenance {
        Provenance {
            source: "test".into(),
            ingested_at: "2026-01-01T00:00:00Z".into(),
        }
    }
}
