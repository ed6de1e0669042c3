//! Deterministic synthetic score generation with analytic ground truth, and
//! the brute-force oracles used to cross-check the metric modules.
//!
//! The generator is fixed so fixtures are reproducible across
//! implementations: a ChaCha8 stream seeded with `seed_from_u64`, uniforms
//! built from the top 53 bits of each 64-bit word as `(u >> 11 + 0.5) *
//! 2^-53`, and standard normals via the Box-Muller transform
//! `z0 = sqrt(-2 ln u1) cos(2 pi u2)`, `z1 = sqrt(-2 ln u1) sin(2 pi u2)`
//! (pairs consumed in order, the trailing half of an odd draw discarded).
//!
//! The oracles deliberately share no code with the modules they check:
//! counting is done with plain loops over explicit thresholds.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::tandem::TandemScores;
use crate::trialdata::{
    CmLabel, Conditions, KeySet, SasvLabel, ScoreRecord, ScoreSet, Track, Track1Key, Track2Key,
    TrialId,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("oracle limited to {limit} trials, got {got}")]
    OracleTooLarge { limit: usize, got: usize },
}

/// Two equal-variance Gaussian score classes with separation
/// `d = mean_bona - mean_spoof`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mean_bona: f64,
    pub mean_spoof: f64,
    pub n_bona: usize,
    pub n_spoof: usize,
    pub seed: u64,
}

impl GaussianModel {
    pub fn from_separation(d: f64, n_bona: usize, n_spoof: usize, seed: u64) -> Result<Self, SimError> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(SimError::InvalidModel(format!("separation must be >= 0, got {d}")));
        }
        if n_bona == 0 || n_spoof == 0 {
            return Err(SimError::InvalidModel("counts must be >= 1".into()));
        }
        Ok(GaussianModel { mean_bona: d / 2.0, mean_spoof: -d / 2.0, n_bona, n_spoof, seed })
    }

    pub fn separation(&self) -> f64 {
        self.mean_bona - self.mean_spoof
    }
}

/// Deterministic stream of standard normals (see module docs for the exact
/// generator contract).
pub struct NormalStream {
    rng: ChaCha8Rng,
    pending: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream { rng: ChaCha8Rng::seed_from_u64(seed), pending: None }
    }

    fn uniform53(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.pending.take() {
            return z;
        }
        let u1 = self.uniform53();
        let u2 = self.uniform53();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.pending = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn take(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }
}

/// Draw (bona, spoof) score vectors; identical seeds give identical output.
pub fn sample(model: &GaussianModel) -> (Vec<f64>, Vec<f64>) {
    let mut stream = NormalStream::new(model.seed);
    let bona = stream.take(model.n_bona).into_iter().map(|z| model.mean_bona + z).collect();
    let spoof = stream.take(model.n_spoof).into_iter().map(|z| model.mean_spoof + z).collect();
    (bona, spoof)
}

/// Standard normal CDF via erf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Analytic EER of the two-Gaussian model: `Phi(-d/2)`.
pub fn analytic_eer(d: f64) -> Result<f64, SimError> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(SimError::InvalidModel(format!("separation must be >= 0, got {d}")));
    }
    Ok(normal_cdf(-d / 2.0))
}

const ORACLE_LIMIT: usize = 10_000;

/// Thresholds for the oracles: midpoints between adjacent distinct values
/// plus sentinels below and beyond the data, assembled with plain loops.
fn oracle_thresholds(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut taus = vec![f64::NEG_INFINITY];
    for i in 1..sorted.len() {
        if sorted[i - 1] < sorted[i] {
            let mid = sorted[i - 1] * 0.5 + sorted[i] * 0.5;
            if sorted[i - 1] < mid && mid < sorted[i] {
                taus.push(mid);
            }
        }
    }
    taus.push(f64::INFINITY);
    taus
}

/// Exhaustive-sweep minimum DCF: evaluates `beta*p_miss + p_fa` at every
/// candidate threshold by direct counting.
pub fn brute_min_dcf(bona: &[f64], spoof: &[f64], beta: f64) -> Result<f64, SimError> {
    let total = bona.len() + spoof.len();
    if total > ORACLE_LIMIT {
        return Err(SimError::OracleTooLarge { limit: ORACLE_LIMIT, got: total });
    }
    let mut pooled = bona.to_vec();
    pooled.extend_from_slice(spoof);
    let mut best = f64::INFINITY;
    for tau in oracle_thresholds(&pooled) {
        let mut miss = 0usize;
        for s in bona {
            if *s < tau {
                miss += 1;
            }
        }
        let mut fa = 0usize;
        for s in spoof {
            if *s >= tau {
                fa += 1;
            }
        }
        let v = beta * (miss as f64 / bona.len() as f64) + fa as f64 / spoof.len() as f64;
        if v < best {
            best = v;
        }
    }
    Ok(best)
}

/// Exhaustive-sweep minimum a-DCF over the three SASV error rates.
pub fn brute_min_a_dcf(
    targets: &[f64],
    nontargets: &[f64],
    spoofs: &[f64],
    alpha: f64,
    gamma: f64,
) -> Result<f64, SimError> {
    let total = targets.len() + nontargets.len() + spoofs.len();
    if total > ORACLE_LIMIT {
        return Err(SimError::OracleTooLarge { limit: ORACLE_LIMIT, got: total });
    }
    let mut pooled = targets.to_vec();
    pooled.extend_from_slice(nontargets);
    pooled.extend_from_slice(spoofs);
    let mut best = f64::INFINITY;
    for tau in oracle_thresholds(&pooled) {
        let miss = targets.iter().filter(|s| **s < tau).count() as f64 / targets.len() as f64;
        let fa_non =
            nontargets.iter().filter(|s| **s >= tau).count() as f64 / nontargets.len() as f64;
        let fa_spf = spoofs.iter().filter(|s| **s >= tau).count() as f64 / spoofs.len() as f64;
        let v = alpha * miss + (1.0 - gamma) * fa_non + gamma * fa_spf;
        if v < best {
            best = v;
        }
    }
    Ok(best)
}

const PAV_ORACLE_LIMIT: usize = 8;

/// Exhaustive isotonic fit: enumerates every contiguous pooling of the
/// distinct-score groups, keeps those with non-decreasing block means, and
/// returns the fitted label posterior per input trial (input order) for the
/// pooling minimizing the squared error.
pub fn brute_pav(scores: &[f64], labels: &[bool]) -> Result<Vec<f64>, SimError> {
    let n = scores.len();
    if n != labels.len() || n == 0 {
        return Err(SimError::InvalidModel("scores and labels must align and be non-empty".into()));
    }
    if n > PAV_ORACLE_LIMIT {
        return Err(SimError::OracleTooLarge { limit: PAV_ORACLE_LIMIT, got: n });
    }

    // Group by distinct score: trials with tied scores must share a value.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]));
    let mut groups: Vec<(f64, f64, f64)> = Vec::new(); // (score, sum_y, count)
    for &i in &order {
        let y = if labels[i] { 1.0 } else { 0.0 };
        match groups.last_mut() {
            Some(g) if g.0 == scores[i] => {
                g.1 += y;
                g.2 += 1.0;
            }
            _ => groups.push((scores[i], y, 1.0)),
        }
    }

    let g = groups.len();
    let mut best_sse = f64::INFINITY;
    let mut best_fit: Vec<f64> = Vec::new();
    // Bitmask over the g-1 gaps: bit set = cut between group i and i+1.
    for mask in 0..(1u32 << (g - 1)) {
        let mut fitted = Vec::with_capacity(g);
        let mut start = 0;
        let mut ok = true;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut sse = 0.0;
        for i in 0..g {
            let cut = i == g - 1 || (mask >> i) & 1 == 1;
            if !cut {
                continue;
            }
            let block = &groups[start..=i];
            let sum_y: f64 = block.iter().map(|b| b.1).sum();
            let cnt: f64 = block.iter().map(|b| b.2).sum();
            let mean = sum_y / cnt;
            if mean < prev_mean {
                ok = false;
                break;
            }
            prev_mean = mean;
            // Per-block SSE over 0/1 labels: sum_y*(1-m)^2 + (cnt-sum_y)*m^2.
            sse += sum_y * (1.0 - mean) * (1.0 - mean) + (cnt - sum_y) * mean * mean;
            for _ in start..=i {
                fitted.push(mean);
            }
            start = i + 1;
        }
        if ok && sse < best_sse {
            best_sse = sse;
            best_fit = fitted;
        }
    }

    // Scatter group-level fits back to input order.
    let mut by_group = std::collections::BTreeMap::new();
    for (gi, grp) in groups.iter().enumerate() {
        by_group.insert(grp.0.to_bits(), best_fit[gi]);
    }
    Ok(scores.iter().map(|s| by_group[&s.to_bits()]).collect())
}

/// Direct-counting tandem error rates at an explicit threshold pair, under
/// the accept-iff-both-subsystems-accept rule.
pub fn tandem_rates_at(trials: &TandemScores, tau_asv: f64, tau_cm: f64) -> (f64, f64, f64) {
    let accept = |(a, c): &(f64, f64)| *a >= tau_asv && *c >= tau_cm;
    let frac = |xs: &[(f64, f64)]| xs.iter().filter(|p| accept(p)).count() as f64 / xs.len() as f64;
    let p_miss = 1.0 - frac(trials.targets());
    let p_fa_non = frac(trials.nontargets());
    let p_fa_spf = frac(trials.spoofs());
    (p_miss, p_fa_non, p_fa_spf)
}

/// Tandem two-Gaussian model used by the SASV test fixtures. The ASV
/// subsystem separates targets from nontargets (means +/- d_asv/2); spoofs
/// mimic targets on the ASV axis. The CM subsystem separates bona fide
/// (targets and nontargets) from spoofs (means +/- d_cm/2). Axes are
/// sampled independently; draw order is targets, nontargets, spoofs, with
/// the ASV normal before the CM normal within each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TandemGaussianModel {
    pub d_asv: f64,
    pub d_cm: f64,
    pub n_target: usize,
    pub n_nontarget: usize,
    pub n_spoof: usize,
    pub seed: u64,
}

pub fn sample_tandem(model: &TandemGaussianModel) -> Result<TandemScores, SimError> {
    if model.d_asv < 0.0 || model.d_cm < 0.0 {
        return Err(SimError::InvalidModel("separations must be >= 0".into()));
    }
    if model.n_target == 0 || model.n_nontarget == 0 || model.n_spoof == 0 {
        return Err(SimError::InvalidModel("counts must be >= 1".into()));
    }
    let mut stream = NormalStream::new(model.seed);
    let ha = model.d_asv / 2.0;
    let hc = model.d_cm / 2.0;
    let mut draw = |n: usize, mean_asv: f64, mean_cm: f64| -> Vec<(f64, f64)> {
        (0..n)
            .map(|_| (mean_asv + stream.next_normal(), mean_cm + stream.next_normal()))
            .collect()
    };
    let targets = draw(model.n_target, ha, hc);
    let nontargets = draw(model.n_nontarget, -ha, hc);
    let spoofs = draw(model.n_spoof, ha, -hc);
    TandemScores::new(targets, nontargets, spoofs)
        .map_err(|e| SimError::InvalidModel(e.to_string()))
}

/// How scores are emitted by the challenge generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreDomain {
    /// Raw Gaussian samples.
    #[default]
    Raw,
    /// The true log-likelihood ratio of each sample under the generating
    /// mixture (calibrated scores).
    Llr,
    /// Posterior-like scores in (0,1): sigmoid of the true LLR.
    Posterior,
}

/// One simulated attack: spoof scores are drawn at the given CM separation
/// from the bona fide mean, further shrunk by the codec degradation factor
/// of each trial's codec cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSim {
    pub id: String,
    pub separation: f64,
    pub n: usize,
}

/// A codec condition cell generator: `id = "none"` means no encoding (one
/// cell, no quality factor); otherwise one cell per quality level.
/// `degradation` in [0,1) shrinks the effective separation of spoof trials
/// encoded with this codec, scaled by `quality_slope * (5 - quality)` so
/// lower quality levels degrade more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecSim {
    pub id: String,
    pub qualities: Vec<u8>,
    pub degradation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeConfig {
    pub track: Track,
    pub seed: u64,
    /// Bona fide count (Track 1) or target-trial count (Track 2).
    pub n_bona: usize,
    /// Nontarget-trial count (Track 2 only).
    pub n_nontarget: usize,
    /// ASV separation between targets and nontargets (Track 2 only).
    pub d_asv: f64,
    pub attacks: Vec<AttackSim>,
    pub codecs: Vec<CodecSim>,
    /// Emit CM/ASV sub-system columns in Track 2 score files.
    pub emit_triplets: bool,
    pub score_domain: ScoreDomain,
    /// Multiplies every separation; the trial layout (ids, labels,
    /// conditions) is skill-invariant, so submissions of different quality
    /// over the same protocol can be simulated.
    pub skill: f64,
    /// Number of distinct enrollment ids cycled over Track 2 trials.
    pub n_enroll: usize,
}

impl Default for ChallengeConfig {
    fn default() -> Self {
        ChallengeConfig {
            track: Track::Track1,
            seed: 1,
            n_bona: 200,
            n_nontarget: 200,
            d_asv: 2.0,
            attacks: vec![AttackSim { id: "A17".into(), separation: 2.0, n: 200 }],
            codecs: vec![CodecSim { id: "none".into(), qualities: vec![], degradation: 0.0 }],
            emit_triplets: true,
            score_domain: ScoreDomain::Raw,
            skill: 1.0,
            n_enroll: 4,
        }
    }
}

/// Generated challenge data plus the manifest describing the generating
/// model (for analytic cross-checks).
#[derive(Debug, Clone)]
pub struct SimulatedChallenge {
    pub scores: ScoreSet,
    pub keys: KeySet,
    pub manifest: ChallengeManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeManifest {
    pub config: ChallengeConfig,
    pub n_trials: usize,
    /// Effective CM separation and analytic EER per (attack, codec cell).
    pub cells: Vec<CellInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub attack: String,
    pub codec: Option<String>,
    pub quality: Option<u8>,
    pub effective_separation: f64,
    pub analytic_eer: f64,
}

/// Flattened (codec, quality, degradation multiplier) cells.
fn codec_cells(codecs: &[CodecSim]) -> Vec<(Option<String>, Option<u8>, f64)> {
    let mut cells = Vec::new();
    for c in codecs {
        if c.id == "none" || c.qualities.is_empty() {
            cells.push((None, None, 0.0));
        } else {
            for &q in &c.qualities {
                // Lower quality factors degrade more: full degradation at
                // q=1, fading linearly to 1/5th at q=5.
                let frac = c.degradation * (6 - q) as f64 / 5.0;
                cells.push((Some(c.id.clone()), Some(q), frac));
            }
        }
    }
    cells
}

struct MixtureComponent {
    mean: f64,
    weight: f64,
}

/// log( sum_i w_i N(x; m_i, 1) ) up to the shared normal constant.
fn log_mixture_density(x: f64, components: &[MixtureComponent]) -> f64 {
    let logs: Vec<f64> = components
        .iter()
        .map(|c| c.weight.ln() - 0.5 * (x - c.mean) * (x - c.mean))
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Generate a complete synthetic challenge: scores, keys, and manifest.
/// Identical (seed, config) pairs yield byte-identical emitted files.
pub fn generate_challenge(cfg: &ChallengeConfig) -> Result<SimulatedChallenge, SimError> {
    if cfg.n_bona == 0 || cfg.attacks.is_empty() {
        return Err(SimError::InvalidModel("need bona fide trials and at least one attack".into()));
    }
    if cfg.attacks.iter().any(|a| a.n == 0 || a.separation < 0.0) {
        return Err(SimError::InvalidModel("attack counts must be >= 1, separations >= 0".into()));
    }
    if !(cfg.skill.is_finite() && cfg.skill > 0.0) {
        return Err(SimError::InvalidModel(format!("skill must be > 0, got {}", cfg.skill)));
    }
    if cfg.track == Track::Track2 && (cfg.n_nontarget == 0 || cfg.n_enroll == 0) {
        return Err(SimError::InvalidModel("track 2 needs nontarget trials and enroll ids".into()));
    }

    let cells = codec_cells(&cfg.codecs);
    if cells.is_empty() {
        return Err(SimError::InvalidModel("at least one codec cell required".into()));
    }
    let bona_mean = 1.0;

    // CM mixture over all spoof cells, for the true-LLR transform.
    let total_spoof: usize = cfg.attacks.iter().map(|a| a.n).sum();
    let mut spoof_components = Vec::new();
    let mut cell_infos = Vec::new();
    for a in &cfg.attacks {
        for (ci, (codec, quality, deg)) in cells.iter().enumerate() {
            // Trials are dealt round-robin over cells; cell ci receives
            // ceil-or-floor share depending on alignment.
            let share = (a.n + cells.len() - 1 - ci) / cells.len();
            if share == 0 {
                continue;
            }
            let d_eff = a.separation * cfg.skill * (1.0 - deg);
            spoof_components.push(MixtureComponent {
                mean: bona_mean - d_eff,
                weight: share as f64 / total_spoof as f64,
            });
            cell_infos.push(CellInfo {
                attack: a.id.clone(),
                codec: codec.clone(),
                quality: *quality,
                effective_separation: d_eff,
                analytic_eer: normal_cdf(-d_eff / 2.0),
            });
        }
    }
    let bona_component = [MixtureComponent { mean: bona_mean, weight: 1.0 }];

    let to_domain = |x: f64| -> f64 {
        match cfg.score_domain {
            ScoreDomain::Raw => x,
            ScoreDomain::Llr | ScoreDomain::Posterior => {
                let llr =
                    log_mixture_density(x, &bona_component) - log_mixture_density(x, &spoof_components);
                if cfg.score_domain == ScoreDomain::Llr {
                    llr
                } else {
                    sigmoid(llr)
                }
            }
        }
    };

    let mut stream = NormalStream::new(cfg.seed);
    let width = 6;
    let mut records = Vec::new();
    let mut trial_no = 0usize;
    let next_id = |trial_no: &mut usize| -> TrialId {
        *trial_no += 1;
        TrialId::new(&format!("T{:0width$}", *trial_no)).unwrap()
    };

    match cfg.track {
        Track::Track1 => {
            let mut keys = Vec::new();
            for i in 0..cfg.n_bona {
                let (codec, quality, _) = &cells[i % cells.len()];
                let trial = next_id(&mut trial_no);
                let x = bona_mean + stream.next_normal();
                records.push(ScoreRecord {
                    trial: trial.clone(),
                    enroll: None,
                    primary: to_domain(x),
                    cm: None,
                    asv: None,
                });
                keys.push(Track1Key {
                    trial,
                    label: CmLabel::Bonafide,
                    conditions: Conditions {
                        attack: None,
                        codec: codec.clone(),
                        quality: *quality,
                    },
                });
            }
            for a in &cfg.attacks {
                for i in 0..a.n {
                    let (codec, quality, deg) = &cells[i % cells.len()];
                    let d_eff = a.separation * cfg.skill * (1.0 - deg);
                    let trial = next_id(&mut trial_no);
                    let x = bona_mean - d_eff + stream.next_normal();
                    records.push(ScoreRecord {
                        trial: trial.clone(),
                        enroll: None,
                        primary: to_domain(x),
                        cm: None,
                        asv: None,
                    });
                    keys.push(Track1Key {
                        trial,
                        label: CmLabel::Spoof,
                        conditions: Conditions {
                            attack: Some(a.id.clone()),
                            codec: codec.clone(),
                            quality: *quality,
                        },
                    });
                }
            }
            let scores = ScoreSet::from_records(Track::Track1, records, false)
                .map_err(|e| SimError::InvalidModel(e.to_string()))?;
            debug_assert_eq!(scores.len(), cfg.n_bona + total_spoof);
            Ok(SimulatedChallenge {
                scores,
                keys: KeySet::Track1(keys),
                manifest: ChallengeManifest {
                    config: cfg.clone(),
                    n_trials: cfg.n_bona + total_spoof,
                    cells: cell_infos,
                },
            })
        }
        Track::Track2 => {
            let mut keys = Vec::new();
            let ha = cfg.d_asv * cfg.skill / 2.0;
            let enroll_of = |i: usize| format!("E{:03}", i % cfg.n_enroll + 1);
            let emit = |label: SasvLabel,
                            asv_mean: f64,
                            cm_mean: f64,
                            attack: Option<&str>,
                            cell: &(Option<String>, Option<u8>, f64),
                            i: usize,
                            stream: &mut NormalStream,
                            records: &mut Vec<ScoreRecord>,
                            keys: &mut Vec<Track2Key>,
                            trial_no: &mut usize| {
                let trial = next_id(trial_no);
                let asv = asv_mean + stream.next_normal();
                let cm = cm_mean + stream.next_normal();
                // Synthetic fusion rule: the SASV score is the weaker of
                // the two sub-system scores.
                let sasv = asv.min(cm);
                records.push(ScoreRecord {
                    trial: trial.clone(),
                    enroll: Some(enroll_of(i)),
                    primary: sasv,
                    cm: cfg.emit_triplets.then_some(cm),
                    asv: cfg.emit_triplets.then_some(asv),
                });
                keys.push(Track2Key {
                    enroll: enroll_of(i),
                    trial,
                    label,
                    conditions: Conditions {
                        attack: attack.map(str::to_string),
                        codec: cell.0.clone(),
                        quality: cell.1,
                    },
                });
            };
            for i in 0..cfg.n_bona {
                let cell = cells[i % cells.len()].clone();
                emit(
                    SasvLabel::Target,
                    ha,
                    bona_mean,
                    None,
                    &cell,
                    i,
                    &mut stream,
                    &mut records,
                    &mut keys,
                    &mut trial_no,
                );
            }
            for i in 0..cfg.n_nontarget {
                let cell = cells[i % cells.len()].clone();
                emit(
                    SasvLabel::Nontarget,
                    -ha,
                    bona_mean,
                    None,
                    &cell,
                    i,
                    &mut stream,
                    &mut records,
                    &mut keys,
                    &mut trial_no,
                );
            }
            for a in &cfg.attacks {
                for i in 0..a.n {
                    let cell = cells[i % cells.len()].clone();
                    let d_eff = a.separation * cfg.skill * (1.0 - cell.2);
                    emit(
                        SasvLabel::Spoof,
                        ha,
                        bona_mean - d_eff,
                        Some(&a.id),
                        &cell,
                        i,
                        &mut stream,
                        &mut records,
                        &mut keys,
                        &mut trial_no,
                    );
                }
            }
            let n = cfg.n_bona + cfg.n_nontarget + total_spoof;
            let scores = ScoreSet::from_records(Track::Track2, records, cfg.emit_triplets)
                .map_err(|e| SimError::InvalidModel(e.to_string()))?;
            debug_assert_eq!(scores.len(), n);
            Ok(SimulatedChallenge {
                scores,
                keys: KeySet::Track2(keys),
                manifest: ChallengeManifest { config: cfg.clone(), n_trials: n, cells: cell_infos },
            })
        }
    }
}
