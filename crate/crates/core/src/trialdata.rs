//! Score-file and key-file ingestion: parsing, validation, and the strict
//! join between scored trials and protocol keys.
//!
//! File formats (whitespace-separated columns, UTF-8, `#` starts a comment
//! line):
//!
//! ```text
//! # Track 1 scores          # Track 2 scores (triplet columns optional)
//! <trial_id> <score>        <enroll_id> <trial_id> <sasv> [<cm> <asv>]
//!
//! # Track 1 keys            # Track 2 keys
//! <trial_id> <label> <attack> <codec> <quality>
//!                            <enroll_id> <trial_id> <label> <attack> <codec> <quality>
//! ```
//!
//! Absent attack and quality are written `-`; absent codec is written
//! `none`. Labels are `bonafide`/`spoof` (Track 1) and
//! `target`/`nontarget`/`spoof` (Track 2).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ATTACK_NONE: &str = "-";
pub const CODEC_NONE: &str = "none";
pub const QUALITY_NONE: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    Track1,
    Track2,
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Track::Track1 => write!(f, "track1"),
            Track::Track2 => write!(f, "track2"),
        }
    }
}

/// Opaque trial identifier: non-empty, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrialId(String);

impl TrialId {
    pub fn new(s: &str) -> Result<Self, ParseError> {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(ParseError::InvalidTrialId { token: s.to_string() });
        }
        Ok(TrialId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TrialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmLabel {
    Bonafide,
    Spoof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SasvLabel {
    Target,
    Nontarget,
    Spoof,
}

/// Condition metadata shared by both track key types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    /// Attack identifier; `None` for bona fide trials.
    pub attack: Option<String>,
    /// Codec identifier; `None` when no encoding was applied.
    pub codec: Option<String>,
    /// Codec quality factor 1..=5; present iff a codec is present.
    pub quality: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track1Key {
    pub trial: TrialId,
    pub label: CmLabel,
    #[serde(flatten)]
    pub conditions: Conditions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track2Key {
    pub enroll: String,
    pub trial: TrialId,
    pub label: SasvLabel,
    #[serde(flatten)]
    pub conditions: Conditions,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KeySet {
    Track1(Vec<Track1Key>),
    Track2(Vec<Track2Key>),
}

impl KeySet {
    pub fn track(&self) -> Track {
        match self {
            KeySet::Track1(_) => Track::Track1,
            KeySet::Track2(_) => Track::Track2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            KeySet::Track1(v) => v.len(),
            KeySet::Track2(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One scored trial. Track 1 carries a single CM score in `primary`;
/// Track 2 carries the SASV score in `primary` plus optional CM/ASV
/// sub-system scores (both present or both absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub trial: TrialId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enroll: Option<String>,
    pub primary: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub track: Track,
    records: Vec<ScoreRecord>,
    /// True when Track 2 rows carry CM and ASV sub-system columns.
    pub has_triplets: bool,
}

impl ScoreSet {
    /// Build a score set from records, enforcing trial-id uniqueness and
    /// triplet-column consistency.
    pub fn from_records(
        track: Track,
        records: Vec<ScoreRecord>,
        has_triplets: bool,
    ) -> Result<Self, ParseError> {
        let mut seen = BTreeMap::new();
        for (row, r) in records.iter().enumerate() {
            if seen.insert(r.trial.clone(), ()).is_some() {
                return Err(ParseError::DuplicateTrial { trial: r.trial.to_string() });
            }
            if track == Track::Track2 && (r.cm.is_some() != has_triplets || r.asv.is_some() != has_triplets)
                || r.cm.is_some() != r.asv.is_some()
            {
                return Err(ParseError::MixedTripletPresence { row: row + 1 });
            }
        }
        Ok(ScoreSet { track, records, has_triplets })
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("row {row}: malformed line: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: non-finite score")]
    NonFiniteScore { row: usize },
    #[error("duplicate trial id {trial}")]
    DuplicateTrial { trial: String },
    #[error("row {row}: unknown label token {token:?}")]
    UnknownLabel { row: usize, token: String },
    #[error("row {row}: label and attack field disagree (bona fide rows must carry '{ATTACK_NONE}', spoof rows an attack id)")]
    LabelAttackMismatch { row: usize },
    #[error("row {row}: quality must be 1..=5 or '{QUALITY_NONE}', got {token:?}")]
    QualityOutOfRange { row: usize, token: String },
    #[error("row {row}: quality present iff codec present (codec={codec:?}, quality={quality:?})")]
    QualityCodecMismatch { row: usize, codec: String, quality: String },
    #[error("row {row}: triplet rows must all carry cm and asv columns or none of them")]
    MixedTripletPresence { row: usize },
    #[error("invalid trial id {token:?}: must be non-empty without whitespace")]
    InvalidTrialId { token: String },
}

#[derive(Debug, Error)]
pub enum JoinError {
    #[error("scored trial {trial} has no key entry")]
    UnmatchedScore { trial: String },
    #[error("key entry {trial} has no score (strict mode)")]
    MissingScore { trial: String },
    #[error("trial {trial}: enrollment id differs between score file ({score_enroll}) and key file ({key_enroll})")]
    EnrollMismatch { trial: String, score_enroll: String, key_enroll: String },
    #[error("score set is {score_track} but key set is {key_track}")]
    TrackMismatch { score_track: Track, key_track: Track },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JoinMode {
    /// Bijective match required between scores and keys.
    #[default]
    Strict,
    /// Keys without scores are dropped (reported as warnings); scores
    /// without keys remain an error in both modes.
    Permissive,
}

/// Per-class trial counts of a joined set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub bonafide: usize,
    pub target: usize,
    pub nontarget: usize,
    pub spoof: usize,
}

/// A joined (key, score) pair, canonically ordered by trial id.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedTrial {
    pub trial: TrialId,
    pub enroll: Option<String>,
    pub cm_label: Option<CmLabel>,
    pub sasv_label: Option<SasvLabel>,
    pub conditions: Conditions,
    pub score: ScoreRecord,
}

impl JoinedTrial {
    /// True for bona fide (Track 1) and target/nontarget (Track 2) trials.
    pub fn is_positive_side(&self) -> bool {
        matches!(self.cm_label, Some(CmLabel::Bonafide))
            || matches!(self.sasv_label, Some(SasvLabel::Target | SasvLabel::Nontarget))
    }

    pub fn is_spoof(&self) -> bool {
        matches!(self.cm_label, Some(CmLabel::Spoof))
            || matches!(self.sasv_label, Some(SasvLabel::Spoof))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinedTrialSet {
    pub track: Track,
    pub has_triplets: bool,
    entries: Vec<JoinedTrial>,
    pub counts: ClassCounts,
    /// Keys dropped in permissive mode for lack of a score.
    pub unscored: Vec<TrialId>,
}

impl JoinedTrialSet {
    pub fn entries(&self) -> &[JoinedTrial] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Primary scores of bona fide trials (Track 1).
    pub fn bona_scores(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.cm_label == Some(CmLabel::Bonafide))
            .map(|e| e.score.primary)
            .collect()
    }

    /// Primary scores of spoof trials.
    pub fn spoof_scores(&self) -> Vec<f64> {
        self.entries.iter().filter(|e| e.is_spoof()).map(|e| e.score.primary).collect()
    }

    /// SASV scores per Track 2 class.
    pub fn sasv_scores(&self, label: SasvLabel) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.sasv_label == Some(label))
            .map(|e| e.score.primary)
            .collect()
    }

    /// (asv, cm, label) triplets when sub-system scores were submitted.
    pub fn tandem_triplets(&self) -> Option<Vec<(f64, f64, SasvLabel)>> {
        if self.track != Track::Track2 || !self.has_triplets {
            return None;
        }
        Some(
            self.entries
                .iter()
                .map(|e| (e.score.asv.unwrap(), e.score.cm.unwrap(), e.sasv_label.unwrap()))
                .collect(),
        )
    }
}

/// Content rows with their 1-based line numbers; comments and blanks skipped.
fn split_rows(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.to_string()))
        .collect()
}

fn parse_score_token(tok: &str, row: usize) -> Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| ParseError::MalformedRow { row, reason: format!("bad score {tok:?}") })?;
    if !v.is_finite() {
        return Err(ParseError::NonFiniteScore { row });
    }
    Ok(v)
}

/// Parse a score file for the given track.
pub fn parse_scores(path: &Path, track: Track) -> Result<ScoreSet, ParseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ParseError::Io { path: path.to_path_buf(), source })?;
    parse_scores_str(&text, track)
}

pub fn parse_scores_str(text: &str, track: Track) -> Result<ScoreSet, ParseError> {
    let mut records = Vec::new();
    let mut seen = BTreeMap::new();
    let mut has_triplets = None;
    for (row, line) in split_rows(text) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let rec = match track {
            Track::Track1 => {
                if cols.len() != 2 {
                    return Err(ParseError::MalformedRow {
                        row,
                        reason: format!("expected 2 columns, got {}", cols.len()),
                    });
                }
                ScoreRecord {
                    trial: TrialId::new(cols[0])?,
                    enroll: None,
                    primary: parse_score_token(cols[1], row)?,
                    cm: None,
                    asv: None,
                }
            }
            Track::Track2 => {
                let triplet = match cols.len() {
                    3 => false,
                    5 => true,
                    n => {
                        return Err(ParseError::MalformedRow {
                            row,
                            reason: format!("expected 3 or 5 columns, got {n}"),
                        })
                    }
                };
                match has_triplets {
                    None => has_triplets = Some(triplet),
                    Some(t) if t != triplet => {
                        return Err(ParseError::MixedTripletPresence { row })
                    }
                    _ => {}
                }
                ScoreRecord {
                    enroll: Some(cols[0].to_string()),
                    trial: TrialId::new(cols[1])?,
                    primary: parse_score_token(cols[2], row)?,
                    cm: triplet.then(|| parse_score_token(cols[3], row)).transpose()?,
                    asv: triplet.then(|| parse_score_token(cols[4], row)).transpose()?,
                }
            }
        };
        if seen.insert(rec.trial.clone(), ()).is_some() {
            return Err(ParseError::DuplicateTrial { trial: rec.trial.to_string() });
        }
        records.push(rec);
    }
    Ok(ScoreSet { track, records, has_triplets: has_triplets.unwrap_or(false) })
}

fn parse_conditions(
    attack_tok: &str,
    codec_tok: &str,
    quality_tok: &str,
    row: usize,
) -> Result<Conditions, ParseError> {
    let attack = (attack_tok != ATTACK_NONE).then(|| attack_tok.to_string());
    let codec = (codec_tok != CODEC_NONE).then(|| codec_tok.to_string());
    let quality = if quality_tok == QUALITY_NONE {
        None
    } else {
        let q: u8 = quality_tok.parse().map_err(|_| ParseError::QualityOutOfRange {
            row,
            token: quality_tok.to_string(),
        })?;
        if !(1..=5).contains(&q) {
            return Err(ParseError::QualityOutOfRange { row, token: quality_tok.to_string() });
        }
        Some(q)
    };
    if codec.is_some() != quality.is_some() {
        return Err(ParseError::QualityCodecMismatch {
            row,
            codec: codec_tok.to_string(),
            quality: quality_tok.to_string(),
        });
    }
    Ok(Conditions { attack, codec, quality })
}

/// Parse a key file for the given track, validating all row invariants.
pub fn parse_keys(path: &Path, track: Track) -> Result<KeySet, ParseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ParseError::Io { path: path.to_path_buf(), source })?;
    parse_keys_str(&text, track)
}

pub fn parse_keys_str(text: &str, track: Track) -> Result<KeySet, ParseError> {
    let mut seen: BTreeMap<TrialId, ()> = BTreeMap::new();
    match track {
        Track::Track1 => {
            let mut keys = Vec::new();
            for (row, line) in split_rows(text) {
                let cols: Vec<&str> = line.split_whitespace().collect();
                if cols.len() != 5 {
                    return Err(ParseError::MalformedRow {
                        row,
                        reason: format!("expected 5 columns, got {}", cols.len()),
                    });
                }
                let label = match cols[1] {
                    "bonafide" => CmLabel::Bonafide,
                    "spoof" => CmLabel::Spoof,
                    other => {
                        return Err(ParseError::UnknownLabel { row, token: other.to_string() })
                    }
                };
                let conditions = parse_conditions(cols[2], cols[3], cols[4], row)?;
                let bona = label == CmLabel::Bonafide;
                if bona != conditions.attack.is_none() {
                    return Err(ParseError::LabelAttackMismatch { row });
                }
                let trial = TrialId::new(cols[0])?;
                if seen.insert(trial.clone(), ()).is_some() {
                    return Err(ParseError::DuplicateTrial { trial: trial.to_string() });
                }
                keys.push(Track1Key { trial, label, conditions });
            }
            Ok(KeySet::Track1(keys))
        }
        Track::Track2 => {
            let mut keys = Vec::new();
            for (row, line) in split_rows(text) {
                let cols: Vec<&str> = line.split_whitespace().collect();
                if cols.len() != 6 {
                    return Err(ParseError::MalformedRow {
                        row,
                        reason: format!("expected 6 columns, got {}", cols.len()),
                    });
                }
                let label = match cols[2] {
                    "target" => SasvLabel::Target,
                    "nontarget" => SasvLabel::Nontarget,
                    "spoof" => SasvLabel::Spoof,
                    other => {
                        return Err(ParseError::UnknownLabel { row, token: other.to_string() })
                    }
                };
                let conditions = parse_conditions(cols[3], cols[4], cols[5], row)?;
                let bona = label != SasvLabel::Spoof;
                if bona != conditions.attack.is_none() {
                    return Err(ParseError::LabelAttackMismatch { row });
                }
                let trial = TrialId::new(cols[1])?;
                if seen.insert(trial.clone(), ()).is_some() {
                    return Err(ParseError::DuplicateTrial { trial: trial.to_string() });
                }
                keys.push(Track2Key { enroll: cols[0].to_string(), trial, label, conditions });
            }
            Ok(KeySet::Track2(keys))
        }
    }
}

/// Join scores with keys. Strict mode demands a bijective match; permissive
/// mode drops unscored keys into the `unscored` warning list. Output is
/// canonically ordered by trial id regardless of input row order.
pub fn join(scores: &ScoreSet, keys: &KeySet, mode: JoinMode) -> Result<JoinedTrialSet, JoinError> {
    if scores.track != keys.track() {
        return Err(JoinError::TrackMismatch { score_track: scores.track, key_track: keys.track() });
    }
    let mut by_trial: BTreeMap<&TrialId, &ScoreRecord> =
        scores.records.iter().map(|r| (&r.trial, r)).collect();

    let mut entries = Vec::with_capacity(scores.len());
    let mut counts = ClassCounts::default();
    let mut unscored = Vec::new();

    match keys {
        KeySet::Track1(list) => {
            for key in list {
                let Some(score) = by_trial.remove(&key.trial) else {
                    if mode == JoinMode::Strict {
                        return Err(JoinError::MissingScore { trial: key.trial.to_string() });
                    }
                    unscored.push(key.trial.clone());
                    continue;
                };
                match key.label {
                    CmLabel::Bonafide => counts.bonafide += 1,
                    CmLabel::Spoof => counts.spoof += 1,
                }
                entries.push(JoinedTrial {
                    trial: key.trial.clone(),
                    enroll: None,
                    cm_label: Some(key.label),
                    sasv_label: None,
                    conditions: key.conditions.clone(),
                    score: score.clone(),
                });
            }
        }
        KeySet::Track2(list) => {
            for key in list {
                let Some(score) = by_trial.remove(&key.trial) else {
                    if mode == JoinMode::Strict {
                        return Err(JoinError::MissingScore { trial: key.trial.to_string() });
                    }
                    unscored.push(key.trial.clone());
                    continue;
                };
                if let Some(se) = &score.enroll {
                    if *se != key.enroll {
                        return Err(JoinError::EnrollMismatch {
                            trial: key.trial.to_string(),
                            score_enroll: se.clone(),
                            key_enroll: key.enroll.clone(),
                        });
                    }
                }
                match key.label {
                    SasvLabel::Target => counts.target += 1,
                    SasvLabel::Nontarget => counts.nontarget += 1,
                    SasvLabel::Spoof => counts.spoof += 1,
                }
                entries.push(JoinedTrial {
                    trial: key.trial.clone(),
                    enroll: Some(key.enroll.clone()),
                    cm_label: None,
                    sasv_label: Some(key.label),
                    conditions: key.conditions.clone(),
                    score: score.clone(),
                });
            }
        }
    }

    if let Some(orphan) = by_trial.keys().next() {
        return Err(JoinError::UnmatchedScore { trial: orphan.to_string() });
    }

    entries.sort_by(|a, b| a.trial.cmp(&b.trial));
    unscored.sort();
    Ok(JoinedTrialSet {
        track: scores.track,
        has_triplets: scores.has_triplets,
        entries,
        counts,
        unscored,
    })
}

fn fmt_quality(q: Option<u8>) -> String {
    q.map_or_else(|| QUALITY_NONE.to_string(), |v| v.to_string())
}

fn fmt_conditions(c: &Conditions) -> String {
    format!(
        "{} {} {}",
        c.attack.as_deref().unwrap_or(ATTACK_NONE),
        c.codec.as_deref().unwrap_or(CODEC_NONE),
        fmt_quality(c.quality),
    )
}

/// Canonical serialization: single-space columns, rows in input order,
/// scores in shortest round-trip decimal form, trailing newline.
pub fn write_scores(set: &ScoreSet) -> String {
    let mut out = String::new();
    for r in &set.records {
        match set.track {
            Track::Track1 => {
                out.push_str(&format!("{} {}\n", r.trial, r.primary));
            }
            Track::Track2 => {
                let enroll = r.enroll.as_deref().unwrap_or("-");
                match (r.cm, r.asv) {
                    (Some(cm), Some(asv)) => out.push_str(&format!(
                        "{} {} {} {} {}\n",
                        enroll, r.trial, r.primary, cm, asv
                    )),
                    _ => out.push_str(&format!("{} {} {}\n", enroll, r.trial, r.primary)),
                }
            }
        }
    }
    out
}

pub fn write_keys(keys: &KeySet) -> String {
    let mut out = String::new();
    match keys {
        KeySet::Track1(list) => {
            for k in list {
                let label = match k.label {
                    CmLabel::Bonafide => "bonafide",
                    CmLabel::Spoof => "spoof",
                };
                out.push_str(&format!("{} {} {}\n", k.trial, label, fmt_conditions(&k.conditions)));
            }
        }
        KeySet::Track2(list) => {
            for k in list {
                let label = match k.label {
                    SasvLabel::Target => "target",
                    SasvLabel::Nontarget => "nontarget",
                    SasvLabel::Spoof => "spoof",
                };
                out.push_str(&format!(
                    "{} {} {} {}\n",
                    k.enroll,
                    k.trial,
                    label,
                    fmt_conditions(&k.conditions)
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_track1_scores() {
        let set = parse_scores_str("utt0001 2.5\nutt0002 -1\n", Track::Track1).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.records()[0].trial.as_str(), "utt0001");
        assert_eq!(set.records()[0].primary, 2.5);
        assert!(!set.has_triplets);
    }

    #[test]
    fn parse_track2_triplet_scores() {
        let set = parse_scores_str("spk01 utt0002 1.0 0.4 2.1\n", Track::Track2).unwrap();
        let r = &set.records()[0];
        assert_eq!(r.enroll.as_deref(), Some("spk01"));
        assert_eq!((r.primary, r.cm, r.asv), (1.0, Some(0.4), Some(2.1)));
        assert!(set.has_triplets);
    }

    #[test]
    fn non_finite_score_rejected() {
        let err = parse_scores_str("utt0003 NaN\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::NonFiniteScore { row: 1 }));
        let err = parse_scores_str("utt0003 inf\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::NonFiniteScore { row: 1 }));
    }

    #[test]
    fn duplicate_trial_rejected() {
        let err = parse_scores_str("u1 1.0\nu1 2.0\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::DuplicateTrial { .. }));
    }

    #[test]
    fn mixed_triplet_presence_rejected() {
        let err =
            parse_scores_str("s1 u1 1.0 0.5 0.5\ns1 u2 1.0\n", Track::Track2).unwrap_err();
        assert!(matches!(err, ParseError::MixedTripletPresence { row: 2 }));
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let set =
            parse_scores_str("# header\n\nu1 1.0\n  # indented comment\nu2 2.0\n", Track::Track1)
                .unwrap();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn parse_track1_keys() {
        let keys = parse_keys_str(
            "utt0001 bonafide - none -\nutt0004 spoof A19 opus 3\n",
            Track::Track1,
        )
        .unwrap();
        let KeySet::Track1(list) = keys else { panic!() };
        assert_eq!(list[0].label, CmLabel::Bonafide);
        assert_eq!(list[0].conditions.attack, None);
        assert_eq!(list[0].conditions.codec, None);
        assert_eq!(list[1].conditions.attack.as_deref(), Some("A19"));
        assert_eq!(list[1].conditions.quality, Some(3));
    }

    #[test]
    fn bonafide_with_attack_rejected() {
        let err =
            parse_keys_str("utt0005 bonafide A17 none -\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::LabelAttackMismatch { row: 1 }));
    }

    #[test]
    fn spoof_without_attack_rejected() {
        let err = parse_keys_str("u1 spoof - none -\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::LabelAttackMismatch { row: 1 }));
    }

    #[test]
    fn quality_requires_codec_and_range() {
        let err = parse_keys_str("u1 spoof A01 none 3\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::QualityCodecMismatch { .. }));
        let err = parse_keys_str("u1 spoof A01 opus -\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::QualityCodecMismatch { .. }));
        let err = parse_keys_str("u1 spoof A01 opus 7\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::QualityOutOfRange { .. }));
    }

    #[test]
    fn unknown_label_rejected() {
        let err = parse_keys_str("u1 genuine - none -\n", Track::Track1).unwrap_err();
        assert!(matches!(err, ParseError::UnknownLabel { .. }));
    }

    #[test]
    fn track2_keys_roundtrip() {
        let text = "spk01 u1 target - none -\nspk01 u2 nontarget - opus 2\nspk02 u3 spoof A17 none -\n";
        let keys = parse_keys_str(text, Track::Track2).unwrap();
        assert_eq!(write_keys(&keys), text);
    }

    #[test]
    fn join_strict_counts() {
        let scores =
            parse_scores_str("u1 0.5\nu2 1.5\nu3 -0.5\n", Track::Track1).unwrap();
        let keys = parse_keys_str(
            "u1 bonafide - none -\nu2 bonafide - none -\nu3 spoof A01 none -\n",
            Track::Track1,
        )
        .unwrap();
        let joined = join(&scores, &keys, JoinMode::Strict).unwrap();
        assert_eq!(joined.counts.bonafide, 2);
        assert_eq!(joined.counts.spoof, 1);
        assert_eq!(joined.len(), 3);
    }

    #[test]
    fn join_unmatched_score_is_error() {
        let scores = parse_scores_str("u1 0.5\nu2 1.5\nu3 0.0\n", Track::Track1).unwrap();
        let keys = parse_keys_str(
            "u1 bonafide - none -\nu2 spoof A01 none -\n",
            Track::Track1,
        )
        .unwrap();
        let err = join(&scores, &keys, JoinMode::Strict).unwrap_err();
        assert!(matches!(err, JoinError::UnmatchedScore { .. }));
        // Unmatched scores stay an error in permissive mode too.
        let err = join(&scores, &keys, JoinMode::Permissive).unwrap_err();
        assert!(matches!(err, JoinError::UnmatchedScore { .. }));
    }

    #[test]
    fn join_permissive_drops_unscored_keys() {
        let scores = parse_scores_str("u1 0.5\nu3 0.0\n", Track::Track1).unwrap();
        let keys = parse_keys_str(
            "u1 bonafide - none -\nu2 bonafide - none -\nu3 spoof A01 none -\n",
            Track::Track1,
        )
        .unwrap();
        assert!(matches!(
            join(&scores, &keys, JoinMode::Strict),
            Err(JoinError::MissingScore { .. })
        ));
        let joined = join(&scores, &keys, JoinMode::Permissive).unwrap();
        assert_eq!(joined.len(), 2);
        assert_eq!(joined.unscored.len(), 1);
        assert_eq!(joined.unscored[0].as_str(), "u2");
    }

    #[test]
    fn join_enroll_mismatch_is_error() {
        let scores = parse_scores_str("spkA u1 0.5\n", Track::Track2).unwrap();
        let keys = parse_keys_str("spkB u1 target - none -\n", Track::Track2).unwrap();
        let err = join(&scores, &keys, JoinMode::Strict).unwrap_err();
        assert!(matches!(err, JoinError::EnrollMismatch { .. }));
    }

    #[test]
    fn join_is_order_independent() {
        let fwd = parse_scores_str("u1 0.5\nu2 1.5\n", Track::Track1).unwrap();
        let rev = parse_scores_str("u2 1.5\nu1 0.5\n", Track::Track1).unwrap();
        let keys = parse_keys_str(
            "u2 spoof A01 none -\nu1 bonafide - none -\n",
            Track::Track1,
        )
        .unwrap();
        let a = join(&fwd, &keys, JoinMode::Strict).unwrap();
        let b = join(&rev, &keys, JoinMode::Strict).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries()[0].trial.as_str(), "u1");
    }

    #[test]
    fn serialize_parse_roundtrip_is_stable() {
        let text = "u1 0.5\nu2 1.5\n";
        let set = parse_scores_str(text, Track::Track1).unwrap();
        let once = write_scores(&set);
        assert_eq!(once, text);
        let twice = write_scores(&parse_scores_str(&once, Track::Track1).unwrap());
        assert_eq!(once, twice);
    }
}
