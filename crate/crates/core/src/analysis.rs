//! Condition-sliced metrics, aggregation, and ranking: per-attack,
//! per-attack-group, per-codec, and per-bitrate breakdowns, top-half median
//! summaries, and leaderboard construction.
//!
//! Pooled metrics are NOT order statistics of per-slice metrics: the pooled
//! optimum is forced through a single threshold, so it can exceed every
//! per-slice value when slices are separable at incompatible thresholds.
//! Nothing here assumes otherwise (see the anti-property test).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detmetrics::{self, CmReport, CostConfig, MetricError};
use crate::tandem::{self, SasvCostConfig, TandemError};
use crate::trialdata::{JoinedTrial, JoinedTrialSet, SasvLabel, Track};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("slice {slice} is empty after pairing")]
    EmptySlice { slice: String },
    #[error("attack {attack} is not covered by the group map")]
    UnmappedAttack { attack: String },
    #[error("group {group} has no attacks after filtering")]
    EmptyGroup { group: String },
    #[error("submissions {a} and {b} were not evaluated on identical trial sets")]
    TrialSetMismatch { a: String, b: String },
    #[error("need at least 2 submissions, got {got}")]
    TooFewSubmissions { got: usize },
    #[error("submission {submission} is missing a value for this slice")]
    MissingSliceValue { submission: String },
    #[error("attack-group slices require a group map")]
    GroupMapRequired,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tandem(#[from] TandemError),
}

/// Attack groups used in breakdown reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttackGroup {
    #[serde(rename = "TTS")]
    Tts,
    #[serde(rename = "VC")]
    Vc,
    #[serde(rename = "adversarial")]
    Adversarial,
}

impl AttackGroup {
    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "TTS" => Some(AttackGroup::Tts),
            "VC" => Some(AttackGroup::Vc),
            "adversarial" => Some(AttackGroup::Adversarial),
            _ => None,
        }
    }
}

impl fmt::Display for AttackGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackGroup::Tts => write!(f, "TTS"),
            AttackGroup::Vc => write!(f, "VC"),
            AttackGroup::Adversarial => write!(f, "adversarial"),
        }
    }
}

/// Mapping from attack ids to groups, loaded from a config file with
/// `<attack_id> <group>` rows (`#` comments allowed).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttackGroupMap {
    map: BTreeMap<String, AttackGroup>,
}

impl AttackGroupMap {
    pub fn from_text(text: &str) -> Result<Self, AnalysisError> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(attack), Some(group), None) = (it.next(), it.next(), it.next()) else {
                return Err(AnalysisError::UnmappedAttack { attack: line.to_string() });
            };
            let group = AttackGroup::parse(group)
                .ok_or_else(|| AnalysisError::EmptyGroup { group: group.to_string() })?;
            map.insert(attack.to_string(), group);
        }
        Ok(AttackGroupMap { map })
    }

    pub fn group_of(&self, attack: &str) -> Option<AttackGroup> {
        self.map.get(attack).copied()
    }

    pub fn attacks(&self) -> impl Iterator<Item = (&str, AttackGroup)> {
        self.map.iter().map(|(a, g)| (a.as_str(), *g))
    }

    /// Every attack id occurring in the trials must be mapped.
    pub fn validate_total(&self, joined: &JoinedTrialSet) -> Result<(), AnalysisError> {
        for e in joined.entries() {
            if let Some(attack) = &e.conditions.attack {
                if !self.map.contains_key(attack) {
                    return Err(AnalysisError::UnmappedAttack { attack: attack.clone() });
                }
            }
        }
        Ok(())
    }
}

/// Condition selector for one analysis slice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SliceSelector {
    All,
    Attack { id: String },
    AttackGroup { group: AttackGroup },
    Codec { id: Option<String> },
    CodecQuality { id: String, quality: u8 },
}

impl fmt::Display for SliceSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceSelector::All => write!(f, "all"),
            SliceSelector::Attack { id } => write!(f, "attack:{id}"),
            SliceSelector::AttackGroup { group } => write!(f, "group:{group}"),
            SliceSelector::Codec { id: Some(id) } => write!(f, "codec:{id}"),
            SliceSelector::Codec { id: None } => write!(f, "codec:none"),
            SliceSelector::CodecQuality { id, quality } => write!(f, "codec:{id}:q{quality}"),
        }
    }
}

/// How bona fide (and nontarget) trials are paired with an attack slice's
/// spoof trials. Codec slices always restrict every class to the codec
/// condition and ignore this policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingPolicy {
    /// All bona fide trials are paired with the slice (attack ids are
    /// undefined for bona fide trials).
    #[default]
    PoolAllBonafide,
    /// Bona fide trials restricted to the codec cells occurring among the
    /// slice's spoof trials.
    MatchedCondition,
}

/// Metrics of one slice; the variant follows the track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SliceMetrics {
    Cm(CmReport),
    Sasv { min_a_dcf: f64, tau_sasv: f64 },
}

impl SliceMetrics {
    /// The track's primary metric (minDCF or min a-DCF).
    pub fn primary(&self) -> f64 {
        match self {
            SliceMetrics::Cm(r) => r.min_dcf,
            SliceMetrics::Sasv { min_a_dcf, .. } => *min_a_dcf,
        }
    }

    pub fn metric_name(&self) -> &'static str {
        match self {
            SliceMetrics::Cm(_) => "min_dcf",
            SliceMetrics::Sasv { .. } => "min_a_dcf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceOutcome {
    pub slice: SliceSelector,
    pub label: String,
    pub policy: PairingPolicy,
    /// Bona fide count (Track 1) or target+nontarget count (Track 2).
    pub n_bona: usize,
    pub n_spoof: usize,
    pub metrics: SliceMetrics,
}

fn codec_cell(e: &JoinedTrial) -> (Option<&str>, Option<u8>) {
    (e.conditions.codec.as_deref(), e.conditions.quality)
}

fn spoof_matches(
    e: &JoinedTrial,
    selector: &SliceSelector,
    groups: Option<&AttackGroupMap>,
) -> Result<bool, AnalysisError> {
    Ok(match selector {
        SliceSelector::All => true,
        SliceSelector::Attack { id } => e.conditions.attack.as_deref() == Some(id),
        SliceSelector::AttackGroup { group } => {
            let Some(attack) = e.conditions.attack.as_deref() else {
                return Ok(false);
            };
            let map = groups.ok_or(AnalysisError::GroupMapRequired)?;
            let g = map
                .group_of(attack)
                .ok_or_else(|| AnalysisError::UnmappedAttack { attack: attack.to_string() })?;
            g == *group
        }
        SliceSelector::Codec { id } => e.conditions.codec.as_deref() == id.as_deref(),
        SliceSelector::CodecQuality { id, quality } => {
            e.conditions.codec.as_deref() == Some(id) && e.conditions.quality == Some(*quality)
        }
    })
}

fn bona_matches(e: &JoinedTrial, selector: &SliceSelector) -> bool {
    match selector {
        SliceSelector::All | SliceSelector::Attack { .. } | SliceSelector::AttackGroup { .. } => {
            true
        }
        SliceSelector::Codec { id } => e.conditions.codec.as_deref() == id.as_deref(),
        SliceSelector::CodecQuality { id, quality } => {
            e.conditions.codec.as_deref() == Some(id) && e.conditions.quality == Some(*quality)
        }
    }
}

/// Compute the track's metrics on each requested slice.
///
/// Spoof trials are selected by the slice; bona fide (and nontarget)
/// trials follow the pairing policy for attack slices and the codec
/// restriction for codec slices.
pub fn slice_metrics(
    joined: &JoinedTrialSet,
    slices: &[SliceSelector],
    policy: PairingPolicy,
    cm_cfg: &CostConfig,
    sasv_cfg: &SasvCostConfig,
    groups: Option<&AttackGroupMap>,
) -> Result<Vec<SliceOutcome>, AnalysisError> {
    let mut out = Vec::with_capacity(slices.len());
    for selector in slices {
        let mut spoof_scores = Vec::new();
        let mut spoof_cells: Vec<(Option<&str>, Option<u8>)> = Vec::new();
        for e in joined.entries() {
            if e.is_spoof() && spoof_matches(e, selector, groups)? {
                spoof_scores.push(e.score.primary);
                spoof_cells.push(codec_cell(e));
            }
        }

        let is_attack_slice =
            matches!(selector, SliceSelector::Attack { .. } | SliceSelector::AttackGroup { .. });
        let bona_selected = |e: &JoinedTrial| -> bool {
            if !bona_matches(e, selector) {
                return false;
            }
            if is_attack_slice && policy == PairingPolicy::MatchedCondition {
                spoof_cells.contains(&codec_cell(e))
            } else {
                true
            }
        };

        let label = selector.to_string();
        let outcome = match joined.track {
            Track::Track1 => {
                let bona: Vec<f64> = joined
                    .entries()
                    .iter()
                    .filter(|e| !e.is_spoof() && bona_selected(e))
                    .map(|e| e.score.primary)
                    .collect();
                if bona.is_empty() || spoof_scores.is_empty() {
                    return Err(AnalysisError::EmptySlice { slice: label });
                }
                let report = detmetrics::cm_report(&bona, &spoof_scores, cm_cfg)?;
                SliceOutcome {
                    slice: selector.clone(),
                    label,
                    policy,
                    n_bona: bona.len(),
                    n_spoof: spoof_scores.len(),
                    metrics: SliceMetrics::Cm(report),
                }
            }
            Track::Track2 => {
                let mut targets = Vec::new();
                let mut nontargets = Vec::new();
                for e in joined.entries() {
                    if e.is_spoof() || !bona_selected(e) {
                        continue;
                    }
                    match e.sasv_label {
                        Some(SasvLabel::Target) => targets.push(e.score.primary),
                        Some(SasvLabel::Nontarget) => nontargets.push(e.score.primary),
                        _ => {}
                    }
                }
                if targets.is_empty() || nontargets.is_empty() || spoof_scores.is_empty() {
                    return Err(AnalysisError::EmptySlice { slice: label });
                }
                let curve = tandem::a_dcf_curve(&targets, &nontargets, &spoof_scores)?;
                let (min_a_dcf, tau_sasv) = tandem::min_a_dcf(&curve, sasv_cfg);
                SliceOutcome {
                    slice: selector.clone(),
                    label,
                    policy,
                    n_bona: targets.len() + nontargets.len(),
                    n_spoof: spoof_scores.len(),
                    metrics: SliceMetrics::Sasv { min_a_dcf, tau_sasv },
                }
            }
        };
        out.push(outcome);
    }
    Ok(out)
}

/// The distinct slice selectors present in a joined set, in stable order:
/// per-attack, then per-codec, then per-codec-quality.
pub fn discover_slices(joined: &JoinedTrialSet) -> Vec<SliceSelector> {
    let mut attacks = std::collections::BTreeSet::new();
    let mut codecs = std::collections::BTreeSet::new();
    let mut cells = std::collections::BTreeSet::new();
    for e in joined.entries() {
        if let Some(a) = &e.conditions.attack {
            attacks.insert(a.clone());
        }
        codecs.insert(e.conditions.codec.clone());
        if let (Some(c), Some(q)) = (&e.conditions.codec, e.conditions.quality) {
            cells.insert((c.clone(), q));
        }
    }
    let mut out: Vec<SliceSelector> =
        attacks.into_iter().map(|id| SliceSelector::Attack { id }).collect();
    out.extend(codecs.into_iter().map(|id| SliceSelector::Codec { id }));
    out.extend(
        cells.into_iter().map(|(id, quality)| SliceSelector::CodecQuality { id, quality }),
    );
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianConvention {
    /// Average of the middle pair for even counts.
    #[default]
    True,
    /// Lower of the middle pair for even counts.
    LowerMiddle,
}

fn median(sorted: &[f64], convention: MedianConvention) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        match convention {
            MedianConvention::True => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
            MedianConvention::LowerMiddle => sorted[n / 2 - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopHalfAggregate {
    /// Submission ids of the top half, best first.
    pub cohort: Vec<String>,
    pub value: f64,
}

/// Median slice value over the top half of submissions.
///
/// The cohort is the ceil(n/2) submissions with the best (smallest)
/// overall primary metric; the aggregate is the median of that cohort's
/// values for the slice at hand.
pub fn median_top_half(
    overall: &[(String, f64)],
    slice_values: &BTreeMap<String, f64>,
    convention: MedianConvention,
) -> Result<TopHalfAggregate, AnalysisError> {
    if overall.len() < 2 {
        return Err(AnalysisError::TooFewSubmissions { got: overall.len() });
    }
    let mut ranked: Vec<&(String, f64)> = overall.iter().collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let cohort_size = overall.len().div_ceil(2);
    let cohort: Vec<String> = ranked[..cohort_size].iter().map(|(id, _)| id.clone()).collect();
    let mut values = Vec::with_capacity(cohort_size);
    for id in &cohort {
        let v = slice_values
            .get(id)
            .ok_or_else(|| AnalysisError::MissingSliceValue { submission: id.clone() })?;
        values.push(*v);
    }
    values.sort_unstable_by(f64::total_cmp);
    Ok(TopHalfAggregate { cohort, value: median(&values, convention) })
}

/// Five-number summary (min, q1, median, q3, max) with linearly
/// interpolated quartiles, for boxplot emission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n: usize,
}

pub fn five_number_summary(values: &[f64]) -> Option<FiveNumberSummary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        v[lo] + frac * (v[hi] - v[lo])
    };
    Some(FiveNumberSummary {
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: *v.last().unwrap(),
        n: v.len(),
    })
}

/// One submission's evaluated metrics plus a checksum of the trial set it
/// was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionEval {
    pub id: String,
    pub primary: f64,
    pub secondary: BTreeMap<String, f64>,
    pub trialset_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub id: String,
    pub primary: f64,
    pub secondary: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub track: Track,
    pub primary_metric: String,
    pub rows: Vec<LeaderboardRow>,
}

/// Rank submissions ascending by primary metric, ties broken by id. All
/// submissions must have been evaluated on identical trial sets.
pub fn rank(subs: &[SubmissionEval], track: Track) -> Result<Leaderboard, AnalysisError> {
    if let Some(first) = subs.first() {
        for s in &subs[1..] {
            if s.trialset_checksum != first.trialset_checksum {
                return Err(AnalysisError::TrialSetMismatch {
                    a: first.id.clone(),
                    b: s.id.clone(),
                });
            }
        }
    }
    let mut ordered: Vec<&SubmissionEval> = subs.iter().collect();
    ordered.sort_by(|a, b| a.primary.total_cmp(&b.primary).then_with(|| a.id.cmp(&b.id)));
    Ok(Leaderboard {
        track,
        primary_metric: match track {
            Track::Track1 => "min_dcf".to_string(),
            Track::Track2 => "min_a_dcf".to_string(),
        },
        rows: ordered
            .into_iter()
            .enumerate()
            .map(|(i, s)| LeaderboardRow {
                rank: i + 1,
                id: s.id.clone(),
                primary: s.primary,
                secondary: s.secondary.clone(),
            })
            .collect(),
    })
}

/// FNV-1a hash over the sorted trial ids, as a trial-set equality token.
pub fn trialset_checksum(joined: &JoinedTrialSet) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for e in joined.entries() {
        for b in e.trial.as_str().as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0x1e;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Per-group distribution of per-attack aggregates, with the easiest and
/// hardest attack marked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRollup {
    pub group: AttackGroup,
    /// (attack id, value) pairs, ordered by attack id.
    pub attacks: Vec<(String, f64)>,
    pub min: (String, f64),
    pub max: (String, f64),
}

/// Roll per-attack values up into attack groups. `requested` limits and
/// validates the reported groups; empty means "all groups present".
pub fn group_rollup(
    per_attack: &BTreeMap<String, f64>,
    map: &AttackGroupMap,
    requested: &[AttackGroup],
) -> Result<Vec<GroupRollup>, AnalysisError> {
    let mut grouped: BTreeMap<AttackGroup, Vec<(String, f64)>> = BTreeMap::new();
    for (attack, value) in per_attack {
        let group = map
            .group_of(attack)
            .ok_or_else(|| AnalysisError::UnmappedAttack { attack: attack.clone() })?;
        grouped.entry(group).or_default().push((attack.clone(), *value));
    }
    let groups: Vec<AttackGroup> = if requested.is_empty() {
        grouped.keys().copied().collect()
    } else {
        requested.to_vec()
    };
    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        let Some(attacks) = grouped.get(&group) else {
            return Err(AnalysisError::EmptyGroup { group: group.to_string() });
        };
        let min = attacks
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
            .unwrap()
            .clone();
        let max = attacks
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .unwrap()
            .clone();
        out.push(GroupRollup { group, attacks: attacks.clone(), min, max });
    }
    Ok(out)
}

/// Bitrate label (kbps) for a codec at a quality factor, as condition
/// metadata for per-bitrate reports. `nb` variants are the 8 kHz
/// effective-bandwidth conditions.
pub fn bitrate_label(codec: &str, quality: u8) -> Option<&'static str> {
    if !(1..=5).contains(&quality) {
        return None;
    }
    let levels: [&'static str; 5] = match codec {
        "opus" => ["6.00", "12.00", "18.00", "24.00", "30.00"],
        "amr" => ["6.60", "8.85", "14.25", "18.25", "23.05"],
        "speex" => ["5.75", "9.80", "16.80", "23.80", "34.20"],
        "encodec" => ["1.50", "3.00", "6.00", "12.00", "24.00"],
        "mp3" => ["45-85", "80-120", "120-150", "170-210", "220-260"],
        "m4a" => ["16.00", "32.00", "64.00", "96.00", "128.00"],
        "opus-nb" => ["4.00", "8.00", "12.00", "16.00", "20.00"],
        "amr-nb" => ["4.75", "6.70", "8.85", "10.20", "12.20"],
        "speex-nb" => ["3.95", "5.95", "11.00", "18.20", "24.60"],
        _ => return None,
    };
    Some(levels[quality as usize - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trialdata::{self, JoinMode};

    fn joined_track1(scores: &str, keys: &str) -> JoinedTrialSet {
        let s = trialdata::parse_scores_str(scores, Track::Track1).unwrap();
        let k = trialdata::parse_keys_str(keys, Track::Track1).unwrap();
        trialdata::join(&s, &k, JoinMode::Strict).unwrap()
    }

    fn cfgs() -> (CostConfig, SasvCostConfig) {
        (CostConfig::default(), SasvCostConfig::default())
    }

    #[test]
    fn attack_slice_pools_all_bonafide() {
        let joined = joined_track1(
            "b1 2.0\nb2 1.5\ns1 -1.0\ns2 0.5\n",
            "b1 bonafide - none -\nb2 bonafide - none -\ns1 spoof A17 none -\ns2 spoof A19 none -\n",
        );
        let (cm, sasv) = cfgs();
        let out = slice_metrics(
            &joined,
            &[SliceSelector::Attack { id: "A17".into() }],
            PairingPolicy::PoolAllBonafide,
            &cm,
            &sasv,
            None,
        )
        .unwrap();
        assert_eq!(out[0].n_bona, 2);
        assert_eq!(out[0].n_spoof, 1);
        assert_eq!(out[0].metrics.primary(), 0.0);
    }

    #[test]
    fn codec_slice_restricts_both_classes() {
        let joined = joined_track1(
            "b1 2.0\nb2 1.5\ns1 -1.0\ns2 0.5\n",
            "b1 bonafide - opus 3\nb2 bonafide - none -\ns1 spoof A17 opus 3\ns2 spoof A19 none -\n",
        );
        let (cm, sasv) = cfgs();
        let out = slice_metrics(
            &joined,
            &[SliceSelector::CodecQuality { id: "opus".into(), quality: 3 }],
            PairingPolicy::PoolAllBonafide,
            &cm,
            &sasv,
            None,
        )
        .unwrap();
        assert_eq!((out[0].n_bona, out[0].n_spoof), (1, 1));
    }

    #[test]
    fn matched_policy_restricts_bonafide_cells() {
        let joined = joined_track1(
            "b1 2.0\nb2 1.5\ns1 -1.0\n",
            "b1 bonafide - opus 3\nb2 bonafide - none -\ns1 spoof A17 opus 3\n",
        );
        let (cm, sasv) = cfgs();
        let out = slice_metrics(
            &joined,
            &[SliceSelector::Attack { id: "A17".into() }],
            PairingPolicy::MatchedCondition,
            &cm,
            &sasv,
            None,
        )
        .unwrap();
        assert_eq!(out[0].n_bona, 1);
    }

    #[test]
    fn separable_attack_beats_overlapping_attack() {
        let joined = joined_track1(
            "b1 1.0\nb2 2.0\nx1 -1.0\nx2 -2.0\ny1 1.5\ny2 -0.5\n",
            "b1 bonafide - none -\nb2 bonafide - none -\nx1 spoof AX none -\nx2 spoof AX none -\ny1 spoof AY none -\ny2 spoof AY none -\n",
        );
        let (cm, sasv) = cfgs();
        let out = slice_metrics(
            &joined,
            &[
                SliceSelector::Attack { id: "AX".into() },
                SliceSelector::Attack { id: "AY".into() },
            ],
            PairingPolicy::PoolAllBonafide,
            &cm,
            &sasv,
            None,
        )
        .unwrap();
        assert_eq!(out[0].metrics.primary(), 0.0);
        assert!(out[1].metrics.primary() > 0.0);
    }

    #[test]
    fn all_slice_equals_direct_report_bit_for_bit() {
        let joined = joined_track1(
            "b1 0.3\nb2 1.1\nb3 -0.2\ns1 -1.0\ns2 0.4\n",
            "b1 bonafide - none -\nb2 bonafide - none -\nb3 bonafide - none -\ns1 spoof A17 none -\ns2 spoof A17 none -\n",
        );
        let (cm, sasv) = cfgs();
        let out = slice_metrics(
            &joined,
            &[SliceSelector::All],
            PairingPolicy::PoolAllBonafide,
            &cm,
            &sasv,
            None,
        )
        .unwrap();
        let direct =
            detmetrics::cm_report(&joined.bona_scores(), &joined.spoof_scores(), &cm).unwrap();
        assert_eq!(out[0].metrics, SliceMetrics::Cm(direct));
    }

    // Pooled minDCF is not bracketed by per-slice minDCFs: two codec
    // slices, each perfectly separable at incompatible thresholds, pool to
    // a strictly positive minimum.
    #[test]
    fn pooled_metric_can_exceed_every_slice() {
        let joined = joined_track1(
            "b1 1.0\ns1 0.0\nb2 3.0\ns2 2.0\n",
            "b1 bonafide - c1 1\ns1 spoof A17 c1 1\nb2 bonafide - c2 1\ns2 spoof A17 c2 1\n",
        );
        let (cm, sasv) = cfgs();
        let out = slice_metrics(
            &joined,
            &[
                SliceSelector::Codec { id: Some("c1".into()) },
                SliceSelector::Codec { id: Some("c2".into()) },
                SliceSelector::All,
            ],
            PairingPolicy::PoolAllBonafide,
            &cm,
            &sasv,
            None,
        )
        .unwrap();
        assert_eq!(out[0].metrics.primary(), 0.0);
        assert_eq!(out[1].metrics.primary(), 0.0);
        assert!(out[2].metrics.primary() > 0.0);
    }

    #[test]
    fn empty_slice_is_error() {
        let joined = joined_track1(
            "b1 1.0\ns1 0.0\n",
            "b1 bonafide - none -\ns1 spoof A17 none -\n",
        );
        let (cm, sasv) = cfgs();
        let err = slice_metrics(
            &joined,
            &[SliceSelector::Attack { id: "A99".into() }],
            PairingPolicy::PoolAllBonafide,
            &cm,
            &sasv,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::EmptySlice { .. }));
    }

    #[test]
    fn median_top_half_conventions() {
        let overall = vec![("s1".to_string(), 0.1), ("s2".to_string(), 0.2)];
        let values: BTreeMap<String, f64> =
            [("s1".to_string(), 0.1), ("s2".to_string(), 0.3)].into();
        // n=2: cohort is the single best submission.
        let agg = median_top_half(&overall, &values, MedianConvention::True).unwrap();
        assert_eq!(agg.cohort, vec!["s1"]);
        assert_eq!(agg.value, 0.1);

        // 4 submissions, cohort = 2 best, slice values {0.2, 0.4} -> 0.3.
        let overall: Vec<(String, f64)> =
            [("a", 0.1), ("b", 0.15), ("c", 0.5), ("d", 0.6)]
                .map(|(i, v)| (i.to_string(), v))
                .into();
        let values: BTreeMap<String, f64> =
            [("a", 0.2), ("b", 0.4), ("c", 9.0), ("d", 9.0)]
                .map(|(i, v)| (i.to_string(), v))
                .into();
        let agg = median_top_half(&overall, &values, MedianConvention::True).unwrap();
        assert_eq!(agg.cohort, vec!["a", "b"]);
        assert!((agg.value - 0.3).abs() < 1e-15);
        let agg = median_top_half(&overall, &values, MedianConvention::LowerMiddle).unwrap();
        assert_eq!(agg.value, 0.2);
    }

    #[test]
    fn median_top_half_requires_two_submissions() {
        let overall = vec![("s1".to_string(), 0.1)];
        let err = median_top_half(&overall, &BTreeMap::new(), MedianConvention::True).unwrap_err();
        assert!(matches!(err, AnalysisError::TooFewSubmissions { got: 1 }));
    }

    #[test]
    fn median_is_permutation_invariant() {
        let overall: Vec<(String, f64)> =
            [("a", 0.3), ("b", 0.1), ("c", 0.2)].map(|(i, v)| (i.to_string(), v)).into();
        let mut shuffled = overall.clone();
        shuffled.reverse();
        let values: BTreeMap<String, f64> =
            [("a", 1.0), ("b", 2.0), ("c", 3.0)].map(|(i, v)| (i.to_string(), v)).into();
        let a = median_top_half(&overall, &values, MedianConvention::True).unwrap();
        let b = median_top_half(&shuffled, &values, MedianConvention::True).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rank_orders_and_breaks_ties_by_id() {
        let sub = |id: &str, v: f64| SubmissionEval {
            id: id.to_string(),
            primary: v,
            secondary: BTreeMap::new(),
            trialset_checksum: "x".to_string(),
        };
        let lb = rank(&[sub("s1", 0.2), sub("s2", 0.1)], Track::Track1).unwrap();
        assert_eq!(lb.rows[0].id, "s2");
        assert_eq!(lb.rows[1].rank, 2);

        let lb = rank(&[sub("s2", 0.1), sub("s1", 0.1)], Track::Track1).unwrap();
        assert_eq!(lb.rows[0].id, "s1");

        // Every submission appears exactly once.
        let lb = rank(&[sub("a", 0.3), sub("b", 0.1), sub("c", 0.2)], Track::Track1).unwrap();
        let ids: std::collections::BTreeSet<_> = lb.rows.iter().map(|r| r.id.clone()).collect();
        assert_eq!(ids.len(), 3);
    }

    #[test]
    fn rank_rejects_mismatched_trial_sets() {
        let sub = |id: &str, ck: &str| SubmissionEval {
            id: id.to_string(),
            primary: 0.1,
            secondary: BTreeMap::new(),
            trialset_checksum: ck.to_string(),
        };
        let err = rank(&[sub("s1", "x"), sub("s2", "y")], Track::Track1).unwrap_err();
        assert!(matches!(err, AnalysisError::TrialSetMismatch { .. }));
    }

    #[test]
    fn group_rollup_markers() {
        let map = AttackGroupMap::from_text("A18 adversarial\nA27 adversarial\nA19 TTS\n").unwrap();
        let per_attack: BTreeMap<String, f64> =
            [("A18", 0.4), ("A27", 0.2), ("A19", 0.6)].map(|(a, v)| (a.to_string(), v)).into();
        let out = group_rollup(&per_attack, &map, &[]).unwrap();
        let adv = out.iter().find(|g| g.group == AttackGroup::Adversarial).unwrap();
        assert_eq!(adv.min.0, "A27");
        assert_eq!(adv.max.0, "A18");
        let tts = out.iter().find(|g| g.group == AttackGroup::Tts).unwrap();
        assert_eq!(tts.min, tts.max);
    }

    #[test]
    fn group_rollup_errors() {
        let map = AttackGroupMap::from_text("A19 TTS\n").unwrap();
        let per_attack: BTreeMap<String, f64> = [("A99".to_string(), 0.4)].into();
        assert!(matches!(
            group_rollup(&per_attack, &map, &[]),
            Err(AnalysisError::UnmappedAttack { .. })
        ));
        let per_attack: BTreeMap<String, f64> = [("A19".to_string(), 0.4)].into();
        assert!(matches!(
            group_rollup(&per_attack, &map, &[AttackGroup::Vc]),
            Err(AnalysisError::EmptyGroup { .. })
        ));
    }

    #[test]
    fn bitrate_table_lookups() {
        assert_eq!(bitrate_label("opus", 3), Some("18.00"));
        assert_eq!(bitrate_label("encodec", 1), Some("1.50"));
        assert_eq!(bitrate_label("mp3", 5), Some("220-260"));
        assert_eq!(bitrate_label("amr-nb", 2), Some("6.70"));
        assert_eq!(bitrate_label("opus", 6), None);
        assert_eq!(bitrate_label("unknown", 1), None);
    }

    #[test]
    fn checksum_is_order_insensitive_via_canonical_join() {
        let a = joined_track1(
            "b1 1.0\ns1 0.0\n",
            "b1 bonafide - none -\ns1 spoof A17 none -\n",
        );
        let b = joined_track1(
            "s1 0.0\nb1 1.0\n",
            "s1 spoof A17 none -\nb1 bonafide - none -\n",
        );
        assert_eq!(trialset_checksum(&a), trialset_checksum(&b));
    }
}
