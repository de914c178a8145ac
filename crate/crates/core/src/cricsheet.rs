//! Adapter for Cricsheet JSON ball-by-ball exports.
//!
//! Field mapping into the canonical form:
//! - wides and no-balls set `is_extra = true` (they are re-bowled); byes and
//!   leg-byes count as legal deliveries,
//! - `runs_batted` is the delivery's total runs (batter plus extras), clamped
//!   to 6,
//! - the legal-ball index within an over only advances on legal deliveries,
//! - any dismissal marks `is_wicket`.
//!
//! Only one-day exports (`match_type` ODI or ODM) with at most two innings
//! are accepted; super-over content is rejected.

use serde::Deserialize;
use std::collections::BTreeMap;

use crate::data::{DeliveryRecord, MatchRecord, Winner};

#[derive(Debug, thiserror::Error)]
pub enum CricsheetError {
    #[error("cricsheet parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("adaptation error: {0}")]
    Adapt(String),
    #[error("canonical validation failed after adaptation: {0}")]
    Invalid(#[from] crate::data::DataError),
}

#[derive(Deserialize)]
struct RawMatch {
    info: RawInfo,
    #[serde(default)]
    innings: Vec<RawInnings>,
}

#[derive(Deserialize)]
struct RawInfo {
    #[serde(default)]
    match_type: Option<String>,
    teams: Vec<String>,
    outcome: RawOutcome,
}

#[derive(Deserialize, Default)]
struct RawOutcome {
    #[serde(default)]
    winner: Option<String>,
    #[serde(default)]
    result: Option<String>,
    #[serde(default)]
    method: Option<String>,
}

#[derive(Deserialize)]
struct RawInnings {
    team: String,
    #[serde(default)]
    overs: Vec<RawOver>,
    #[serde(default)]
    super_over: bool,
}

#[derive(Deserialize)]
struct RawOver {
    over: u32,
    deliveries: Vec<RawDelivery>,
}

#[derive(Deserialize)]
struct RawDelivery {
    runs: RawRuns,
    #[serde(default)]
    extras: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(default)]
    wickets: Option<Vec<serde_json::Value>>,
}

#[derive(Deserialize)]
struct RawRuns {
    #[serde(default)]
    total: u32,
}

/// The adapted match plus flags callers may filter on.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedMatch {
    pub record: MatchRecord,
    /// The result was decided by the DLS method.
    pub dls_decided: bool,
}

/// Adapt one Cricsheet JSON document. The match id is external because
/// Cricsheet carries it in the file name, not the document.
pub fn adapt_cricsheet(bytes: &[u8], match_id: &str) -> Result<AdaptedMatch, CricsheetError> {
    let raw: RawMatch = serde_json::from_slice(bytes)?;

    match raw.info.match_type.as_deref() {
        Some("ODI") | Some("ODM") => {}
        Some(other) => {
            return Err(CricsheetError::Adapt(format!(
                "not a one-day export: match_type `{other}`"
            )))
        }
        None => return Err(CricsheetError::Adapt("missing match_type".into())),
    }
    if raw.innings.is_empty() {
        return Err(CricsheetError::Adapt("missing innings markers".into()));
    }
    if raw.innings.len() > 2 || raw.innings.iter().any(|i| i.super_over) {
        return Err(CricsheetError::Adapt(
            "more than two innings (super-over content)".into(),
        ));
    }
    if raw.info.teams.len() != 2 {
        return Err(CricsheetError::Adapt(format!(
            "expected 2 teams, found {}",
            raw.info.teams.len()
        )));
    }

    let team_first = raw.innings[0].team.clone();
    let team_second = raw
        .info
        .teams
        .iter()
        .find(|t| **t != team_first)
        .cloned()
        .ok_or_else(|| CricsheetError::Adapt("batting team not in the team list".into()))?;

    let winner = match (&raw.info.outcome.winner, raw.info.outcome.result.as_deref()) {
        (Some(team), _) => Winner::Team(team.clone()),
        (None, Some("tie")) => Winner::Tie,
        (None, _) => Winner::NoResult,
    };
    let dls_decided = raw
        .info
        .outcome
        .method
        .as_deref()
        .is_some_and(|m| m.contains("D/L") || m.contains("DLS"));

    let mut innings: [Vec<DeliveryRecord>; 2] = [Vec::new(), Vec::new()];
    for (idx, raw_innings) in raw.innings.iter().enumerate() {
        let innings_no = idx as u8 + 1;
        let out = &mut innings[idx];
        for raw_over in &raw_innings.overs {
            if raw_over.over > 49 {
                return Err(CricsheetError::Adapt(format!(
                    "over {} exceeds the one-day maximum",
                    raw_over.over
                )));
            }
            let mut legal_ball: u8 = 0;
            for delivery in &raw_over.deliveries {
                let is_extra = delivery
                    .extras
                    .as_ref()
                    .is_some_and(|e| e.contains_key("wides") || e.contains_key("noballs"));
                let is_wicket = delivery.wickets.as_ref().is_some_and(|w| !w.is_empty());
                out.push(DeliveryRecord {
                    innings_no,
                    over: raw_over.over as u8,
                    ball_in_over: legal_ball.min(5),
                    runs_batted: delivery.runs.total.min(6) as u8,
                    is_extra,
                    is_wicket,
                });
                if !is_extra {
                    legal_ball += 1;
                }
            }
        }
    }
    if innings[0].is_empty() {
        return Err(CricsheetError::Adapt(
            "first innings has no deliveries".into(),
        ));
    }

    let record = MatchRecord::from_innings(
        match_id.to_string(),
        team_first,
        team_second,
        winner,
        innings,
    )?;
    Ok(AdaptedMatch {
        record,
        dls_decided,
    })
}

/// Result of ingesting a directory of Cricsheet files.
#[derive(Debug)]
pub struct IngestSummary {
    pub matches: Vec<MatchRecord>,
    /// Files that failed to adapt, with their errors.
    pub skipped: Vec<(String, String)>,
    /// Matches dropped by the DLS-decided filter.
    pub dls_excluded: usize,
}

/// Adapt every `*.json` file in a directory, in file-name order. The stem is
/// the match id. Per-file failures are collected, not fatal.
pub fn ingest_dir(
    dir: &std::path::Path,
    exclude_dls_decided: bool,
) -> std::io::Result<IngestSummary> {
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            (path.extension().is_some_and(|e| e == "json")
                && path.file_name().is_some_and(|n| n != "manifest.json"))
            .then_some(path)
        })
        .collect();
    files.sort();

    let adapted = crate::par::map_slice(&files, |path| {
        let match_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let bytes =
            std::fs::read(path).map_err(|e| CricsheetError::Adapt(format!("read failed: {e}")))?;
        adapt_cricsheet(&bytes, &match_id)
            .map_err(|e| CricsheetError::Adapt(format!("{}: {e}", path.display())))
    });

    let mut summary = IngestSummary {
        matches: Vec::new(),
        skipped: Vec::new(),
        dls_excluded: 0,
    };
    for (path, result) in files.iter().zip(adapted) {
        match result {
            Ok(adapted) if exclude_dls_decided && adapted.dls_decided => {
                summary.dls_excluded += 1;
            }
            Ok(adapted) => summary.matches.push(adapted.record),
            Err(e) => summary
                .skipped
                .push((path.display().to_string(), e.to_string())),
        }
    }
    Ok(summary)
}
