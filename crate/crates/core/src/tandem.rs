//! Three-class SASV metrics: the architecture-agnostic detection cost
//! (a-DCF), the ASV-constrained tandem detection cost (t-DCF), and the
//! concurrent tandem equal error rate (t-EER).
//!
//! A single SASV score drives the a-DCF
//! `alpha*p_miss + (1-gamma)*p_fa_non + gamma*p_fa_spf`. Systems submitting
//! separate ASV and CM sub-system scores are additionally evaluated under
//! the tandem accept rule: a trial is accepted iff both sub-system scores
//! reach their thresholds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detmetrics::{candidate_thresholds, frac_at_or_above, frac_below};

/// Tolerance on the interpolated tandem error rates at the t-EER solution.
pub const TEER_EPSILON: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum TandemError {
    #[error("missing {class} class: at least one trial required")]
    MissingClass { class: &'static str },
    #[error("non-finite score in {class} class")]
    NonFiniteScore { class: &'static str },
    #[error("invalid cost configuration: {0}")]
    InvalidConfig(String),
    #[error("derived (alpha, gamma) = ({derived_alpha:.8}, {derived_gamma:.8}) do not reproduce the stated ({stated_alpha}, {stated_gamma}) within 1e-6")]
    CostMismatch {
        derived_alpha: f64,
        derived_gamma: f64,
        stated_alpha: f64,
        stated_gamma: f64,
    },
    #[error("degenerate tandem scores: no threshold pair equalizes the three error rates within {TEER_EPSILON}")]
    DegenerateTandem,
}

/// Weights of the normalized a-DCF: `alpha` on target misses, `1-gamma` on
/// nontarget false alarms, `gamma` on spoof false alarms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SasvCostConfig {
    pub alpha: f64,
    pub gamma: f64,
}

impl SasvCostConfig {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self, TandemError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(TandemError::InvalidConfig(format!("alpha must be > 0, got {alpha}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(TandemError::InvalidConfig(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(SasvCostConfig { alpha, gamma })
    }

    /// Derive (alpha, gamma) from underlying detection costs and priors by
    /// normalizing with the total false-acceptance cost:
    /// `alpha = c_miss*pi_tar / D`, `gamma = c_fa_spf*pi_spf / D` with
    /// `D = c_fa_non*pi_non + c_fa_spf*pi_spf`.
    pub fn from_costs(
        c_miss: f64,
        c_fa_non: f64,
        c_fa_spf: f64,
        pi_tar: f64,
        pi_non: f64,
        pi_spf: f64,
    ) -> Result<Self, TandemError> {
        for (name, v) in
            [("c_miss", c_miss), ("c_fa_non", c_fa_non), ("c_fa_spf", c_fa_spf)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(TandemError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("pi_tar", pi_tar), ("pi_non", pi_non), ("pi_spf", pi_spf)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(TandemError::InvalidConfig(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if ((pi_tar + pi_non + pi_spf) - 1.0).abs() > 1e-9 {
            return Err(TandemError::InvalidConfig("priors must sum to 1".into()));
        }
        let denom = c_fa_non * pi_non + c_fa_spf * pi_spf;
        SasvCostConfig::new(c_miss * pi_tar / denom, c_fa_spf * pi_spf / denom)
    }

    /// As [`from_costs`](Self::from_costs), but require the derived values
    /// to reproduce stated (alpha, gamma) within 1e-6. Use plain
    /// `from_costs` to override the stated values explicitly.
    pub fn from_costs_matching(
        c_miss: f64,
        c_fa_non: f64,
        c_fa_spf: f64,
        pi_tar: f64,
        pi_non: f64,
        pi_spf: f64,
        stated_alpha: f64,
        stated_gamma: f64,
    ) -> Result<Self, TandemError> {
        let derived = Self::from_costs(c_miss, c_fa_non, c_fa_spf, pi_tar, pi_non, pi_spf)?;
        if (derived.alpha - stated_alpha).abs() > 1e-6 || (derived.gamma - stated_gamma).abs() > 1e-6
        {
            return Err(TandemError::CostMismatch {
                derived_alpha: derived.alpha,
                derived_gamma: derived.gamma,
                stated_alpha,
                stated_gamma,
            });
        }
        Ok(derived)
    }
}

impl Default for SasvCostConfig {
    /// The evaluation defaults: alpha = 1.58, gamma = 0.84.
    fn default() -> Self {
        SasvCostConfig { alpha: 1.58, gamma: 0.84 }
    }
}

/// Three error-rate sequences over ascending SASV thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct SasvCurve {
    pub thresholds: Vec<f64>,
    pub p_miss: Vec<f64>,
    pub p_fa_non: Vec<f64>,
    pub p_fa_spf: Vec<f64>,
}

impl SasvCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// Per-trial (asv, cm) score pairs grouped by class.
#[derive(Debug, Clone, PartialEq)]
pub struct TandemScores {
    targets: Vec<(f64, f64)>,
    nontargets: Vec<(f64, f64)>,
    spoofs: Vec<(f64, f64)>,
}

impl TandemScores {
    pub fn new(
        targets: Vec<(f64, f64)>,
        nontargets: Vec<(f64, f64)>,
        spoofs: Vec<(f64, f64)>,
    ) -> Result<Self, TandemError> {
        for (class, v) in
            [("target", &targets), ("nontarget", &nontargets), ("spoof", &spoofs)]
        {
            if v.is_empty() {
                return Err(TandemError::MissingClass { class });
            }
            if v.iter().any(|(a, c)| !a.is_finite() || !c.is_finite()) {
                return Err(TandemError::NonFiniteScore { class });
            }
        }
        Ok(TandemScores { targets, nontargets, spoofs })
    }

    pub fn targets(&self) -> &[(f64, f64)] {
        &self.targets
    }

    pub fn nontargets(&self) -> &[(f64, f64)] {
        &self.nontargets
    }

    pub fn spoofs(&self) -> &[(f64, f64)] {
        &self.spoofs
    }
}

/// Track 2 metric report. Tandem fields are present iff the submission
/// provided separate CM and ASV sub-system scores; `tau_asv`/`tau_cm` is
/// the t-EER threshold pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SasvReport {
    pub min_a_dcf: f64,
    pub tau_sasv: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_dcf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_eer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_asv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_cm: Option<f64>,
}

fn check_class(scores: &[f64], class: &'static str) -> Result<(), TandemError> {
    if scores.is_empty() {
        return Err(TandemError::MissingClass { class });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(TandemError::NonFiniteScore { class });
    }
    Ok(())
}

/// Sweep candidate SASV thresholds and tabulate the three error rates.
pub fn a_dcf_curve(
    targets: &[f64],
    nontargets: &[f64],
    spoofs: &[f64],
) -> Result<SasvCurve, TandemError> {
    check_class(targets, "target")?;
    check_class(nontargets, "nontarget")?;
    check_class(spoofs, "spoof")?;
    let mut st = targets.to_vec();
    st.sort_unstable_by(f64::total_cmp);
    let mut sn = nontargets.to_vec();
    sn.sort_unstable_by(f64::total_cmp);
    let mut ss = spoofs.to_vec();
    ss.sort_unstable_by(f64::total_cmp);
    let mut pooled = Vec::with_capacity(st.len() + sn.len() + ss.len());
    pooled.extend_from_slice(&st);
    pooled.extend_from_slice(&sn);
    pooled.extend_from_slice(&ss);
    pooled.sort_unstable_by(f64::total_cmp);

    let thresholds = candidate_thresholds(&pooled);
    let mut p_miss = Vec::with_capacity(thresholds.len());
    let mut p_fa_non = Vec::with_capacity(thresholds.len());
    let mut p_fa_spf = Vec::with_capacity(thresholds.len());
    for &tau in &thresholds {
        p_miss.push(frac_below(&st, tau));
        p_fa_non.push(frac_at_or_above(&sn, tau));
        p_fa_spf.push(frac_at_or_above(&ss, tau));
    }
    Ok(SasvCurve { thresholds, p_miss, p_fa_non, p_fa_spf })
}

/// Minimum a-DCF over the curve and the minimizing threshold (ties broken
/// toward the smallest threshold).
pub fn min_a_dcf(curve: &SasvCurve, cfg: &SasvCostConfig) -> (f64, f64) {
    let mut best = f64::INFINITY;
    let mut best_tau = f64::NEG_INFINITY;
    for i in 0..curve.len() {
        let v = cfg.alpha * curve.p_miss[i]
            + (1.0 - cfg.gamma) * curve.p_fa_non[i]
            + cfg.gamma * curve.p_fa_spf[i];
        if v < best {
            best = v;
            best_tau = curve.thresholds[i];
        }
    }
    (best, best_tau)
}

/// How the ASV operating point is fixed for the ASV-constrained t-DCF.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AsvThresholdPolicy {
    /// The ASV threshold nearest the target/nontarget equal-error crossing.
    #[default]
    EerPoint,
    Fixed(f64),
}

/// ASV threshold at the empirical target-vs-nontarget EER operating point:
/// the candidate threshold minimizing |p_miss_asv - p_fa_asv| (ties toward
/// the smallest threshold).
pub fn asv_eer_threshold(trials: &TandemScores) -> f64 {
    let mut tar: Vec<f64> = trials.targets.iter().map(|(a, _)| *a).collect();
    let mut non: Vec<f64> = trials.nontargets.iter().map(|(a, _)| *a).collect();
    tar.sort_unstable_by(f64::total_cmp);
    non.sort_unstable_by(f64::total_cmp);
    let mut pooled = Vec::with_capacity(tar.len() + non.len());
    pooled.extend_from_slice(&tar);
    pooled.extend_from_slice(&non);
    pooled.sort_unstable_by(f64::total_cmp);
    let mut best_tau = f64::NEG_INFINITY;
    let mut best_gap = f64::INFINITY;
    for tau in candidate_thresholds(&pooled) {
        let gap = (frac_below(&tar, tau) - frac_at_or_above(&non, tau)).abs();
        if gap < best_gap {
            best_gap = gap;
            best_tau = tau;
        }
    }
    best_tau
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdcfResult {
    /// Minimum tandem cost normalized by the better dummy, so 1.0 means "no
    /// better than accepting the ASV decision alone or rejecting всё".
    pub value: f64,
    pub tau_cm: f64,
    pub tau_asv: f64,
}

/// ASV-constrained minimum tandem detection cost.
///
/// The ASV threshold is fixed by `policy`; the CM threshold is swept. The
/// tandem cost uses the a-DCF weights
/// `alpha*P_miss + (1-gamma)*P_fa_non + gamma*P_fa_spf` evaluated under the
/// accept-iff-both rule, and is normalized by the cheaper of the two CM
/// dummies (accept-everything, i.e. the ASV alone, or reject-everything at
/// cost alpha).
pub fn t_dcf_constrained(
    trials: &TandemScores,
    policy: AsvThresholdPolicy,
    cfg: &SasvCostConfig,
) -> Result<TdcfResult, TandemError> {
    let tau_asv = match policy {
        AsvThresholdPolicy::EerPoint => asv_eer_threshold(trials),
        AsvThresholdPolicy::Fixed(t) => t,
    };

    // CM scores of the trials passing the ASV stage, per class, sorted.
    let passing = |xs: &[(f64, f64)]| -> Vec<f64> {
        let mut v: Vec<f64> =
            xs.iter().filter(|(a, _)| *a >= tau_asv).map(|(_, c)| *c).collect();
        v.sort_unstable_by(f64::total_cmp);
        v
    };
    let tar = passing(&trials.targets);
    let non = passing(&trials.nontargets);
    let spf = passing(&trials.spoofs);
    let n_tar = trials.targets.len() as f64;
    let n_non = trials.nontargets.len() as f64;
    let n_spf = trials.spoofs.len() as f64;

    let mut pooled: Vec<f64> = trials
        .targets
        .iter()
        .chain(&trials.nontargets)
        .chain(&trials.spoofs)
        .map(|(_, c)| *c)
        .collect();
    pooled.sort_unstable_by(f64::total_cmp);

    let cost_at = |tau_cm: f64| -> f64 {
        let acc = |v: &[f64]| (v.len() - v.partition_point(|s| *s < tau_cm)) as f64;
        let p_miss = 1.0 - acc(&tar) / n_tar;
        let p_fa_non = acc(&non) / n_non;
        let p_fa_spf = acc(&spf) / n_spf;
        cfg.alpha * p_miss + (1.0 - cfg.gamma) * p_fa_non + cfg.gamma * p_fa_spf
    };

    let mut best = f64::INFINITY;
    let mut best_tau = f64::NEG_INFINITY;
    for tau in candidate_thresholds(&pooled) {
        let v = cost_at(tau);
        if v < best {
            best = v;
            best_tau = tau;
        }
    }
    let dummy = cost_at(f64::NEG_INFINITY).min(cost_at(f64::INFINITY));
    // min cost <= dummy, so a zero dummy forces a zero minimum: the ASV
    // stage alone is already perfect.
    let value = if best == 0.0 { 0.0 } else { best / dummy };
    Ok(TdcfResult { value, tau_cm: best_tau, tau_asv })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeerResult {
    /// The common tandem error rate at the equalizing threshold pair.
    pub value: f64,
    pub tau_asv: f64,
    pub tau_cm: f64,
    /// Interpolated (p_miss, p_fa_non, p_fa_spf) at the solution.
    pub rates: [f64; 3],
}

/// Counts of passing trials at or above each compressed cm rank.
struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted items with rank < i.
    fn count_below(&self, i: usize) -> u32 {
        let mut s = 0;
        let mut j = i;
        while j > 0 {
            s += self.tree[j];
            j -= j & j.wrapping_neg();
        }
        s
    }

    fn total(&self) -> u32 {
        self.count_below(self.tree.len() - 1)
    }
}

/// Concurrent tandem equal error rate.
///
/// Nested deterministic search with piecewise-linear interpolation between
/// empirical operating points: for each candidate ASV threshold (ascending
/// distinct ASV values plus an all-reject sentinel), the CM threshold
/// equalizing the tandem miss and spoof false-alarm rates is found on the
/// interpolated cm-knot grid; the ASV threshold is then interpolated where
/// the nontarget false-alarm rate crosses the equalized rate. The three
/// interpolated rates at the returned pair agree within [`TEER_EPSILON`];
/// inputs admitting no such pair yield [`TandemError::DegenerateTandem`].
pub fn t_eer(trials: &TandemScores) -> Result<TeerResult, TandemError> {
    let n_tar = trials.targets.len() as f64;
    let n_non = trials.nontargets.len() as f64;
    let n_spf = trials.spoofs.len() as f64;

    // Compressed cm knots: distinct values ascending plus a virtual top
    // knot one unit past the maximum (nothing accepted there).
    let mut cm_knots: Vec<f64> = trials
        .targets
        .iter()
        .chain(&trials.nontargets)
        .chain(&trials.spoofs)
        .map(|(_, c)| *c)
        .collect();
    cm_knots.sort_unstable_by(f64::total_cmp);
    cm_knots.dedup();
    cm_knots.push(cm_knots.last().unwrap() + 1.0);
    let m = cm_knots.len();
    let cm_rank = |c: f64| cm_knots.partition_point(|k| *k < c);

    // Per-class trials sorted by descending asv so they can be inserted as
    // the ASV threshold walks down.
    let desc = |xs: &[(f64, f64)]| -> Vec<(f64, usize)> {
        let mut v: Vec<(f64, usize)> = xs.iter().map(|(a, c)| (*a, cm_rank(*c))).collect();
        v.sort_unstable_by(|x, y| y.0.total_cmp(&x.0));
        v
    };
    let tar = desc(&trials.targets);
    let non = desc(&trials.nontargets);
    let spf = desc(&trials.spoofs);

    let mut asv_knots: Vec<f64> = trials
        .targets
        .iter()
        .chain(&trials.nontargets)
        .chain(&trials.spoofs)
        .map(|(a, _)| *a)
        .collect();
    asv_knots.sort_unstable_by(f64::total_cmp);
    asv_knots.dedup();
    asv_knots.push(asv_knots.last().unwrap() + 1.0);

    let mut ft = Fenwick::new(m);
    let mut fn_ = Fenwick::new(m);
    let mut fs = Fenwick::new(m);

    // Inner solution at one ASV knot: (c*, rates) or None when the miss
    // rate exceeds the spoof false-alarm rate over the whole cm range.
    #[derive(Clone, Copy)]
    struct KnotSolution {
        tau_cm: f64,
        rates: [f64; 3],
    }

    let mut solutions: Vec<(f64, Option<KnotSolution>)> = Vec::with_capacity(asv_knots.len());

    let rates_at = |ft: &Fenwick, fn_: &Fenwick, fs: &Fenwick, j: usize| -> [f64; 3] {
        let acc_tar = (ft.total() - ft.count_below(j)) as f64;
        let acc_non = (fn_.total() - fn_.count_below(j)) as f64;
        let acc_spf = (fs.total() - fs.count_below(j)) as f64;
        [1.0 - acc_tar / n_tar, acc_non / n_non, acc_spf / n_spf]
    };

    let mut it_tar = tar.iter().peekable();
    let mut it_non = non.iter().peekable();
    let mut it_spf = spf.iter().peekable();
    for &a in asv_knots.iter().rev() {
        while let Some((av, r)) = it_tar.peek() {
            if *av >= a {
                ft.add(*r);
                it_tar.next();
            } else {
                break;
            }
        }
        while let Some((av, r)) = it_non.peek() {
            if *av >= a {
                fn_.add(*r);
                it_non.next();
            } else {
                break;
            }
        }
        while let Some((av, r)) = it_spf.peek() {
            if *av >= a {
                fs.add(*r);
                it_spf.next();
            } else {
                break;
            }
        }

        // d(j) = p_miss - p_fa_spf is non-decreasing along the knots; the
        // last knot has d = 1, so a root exists iff d(0) <= 0.
        let d_at = |j: usize| -> f64 {
            let r = rates_at(&ft, &fn_, &fs, j);
            r[0] - r[2]
        };
        let sol = if d_at(0) > 0.0 {
            None
        } else {
            let mut lo = 0usize;
            let mut hi = m; // d(m) = 1 - 0 > 0 always
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if d_at(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let r_lo = rates_at(&ft, &fn_, &fs, lo);
            let d_lo = r_lo[0] - r_lo[2];
            if d_lo == 0.0 {
                Some(KnotSolution { tau_cm: cm_knots[lo], rates: r_lo })
            } else {
                let r_hi = rates_at(&ft, &fn_, &fs, hi);
                let d_hi = r_hi[0] - r_hi[2];
                let t = -d_lo / (d_hi - d_lo);
                let blend = |x: f64, y: f64| x + t * (y - x);
                Some(KnotSolution {
                    tau_cm: blend(cm_knots[lo], cm_knots[hi]),
                    rates: [
                        blend(r_lo[0], r_hi[0]),
                        blend(r_lo[1], r_hi[1]),
                        blend(r_lo[2], r_hi[2]),
                    ],
                })
            }
        };
        solutions.push((a, sol));
    }
    solutions.reverse(); // ascending ASV knots

    let h_of = |s: &KnotSolution| s.rates[0] - s.rates[1];
    let finish = |value: f64, tau_asv: f64, tau_cm: f64, rates: [f64; 3]| {
        if (rates[0] - rates[1]).abs() > TEER_EPSILON || (rates[0] - rates[2]).abs() > TEER_EPSILON
        {
            return Err(TandemError::DegenerateTandem);
        }
        Ok(TeerResult { value, tau_asv, tau_cm, rates })
    };

    for k in 0..solutions.len() {
        let (a_k, Some(s_k)) = (&solutions[k].0, &solutions[k].1) else {
            continue;
        };
        let h_k = h_of(s_k);
        if h_k == 0.0 {
            return finish(s_k.rates[0], *a_k, s_k.tau_cm, s_k.rates);
        }
        if k + 1 < solutions.len() {
            if let (a_n, Some(s_n)) = (&solutions[k + 1].0, &solutions[k + 1].1) {
                let h_n = h_of(s_n);
                if h_k * h_n < 0.0 {
                    let t = h_k / (h_k - h_n);
                    let blend = |x: f64, y: f64| x + t * (y - x);
                    let rates = [
                        blend(s_k.rates[0], s_n.rates[0]),
                        blend(s_k.rates[1], s_n.rates[1]),
                        blend(s_k.rates[2], s_n.rates[2]),
                    ];
                    return finish(
                        rates[0],
                        blend(*a_k, *a_n),
                        blend(s_k.tau_cm, s_n.tau_cm),
                        rates,
                    );
                }
            }
        }
    }
    Err(TandemError::DegenerateTandem)
}

/// Full Track 2 report from a SASV score triple, with tandem metrics when
/// sub-system scores are available.
pub fn sasv_report(
    targets: &[f64],
    nontargets: &[f64],
    spoofs: &[f64],
    tandem: Option<&TandemScores>,
    cfg: &SasvCostConfig,
) -> Result<SasvReport, TandemError> {
    let curve = a_dcf_curve(targets, nontargets, spoofs)?;
    let (min_a, tau_sasv) = min_a_dcf(&curve, cfg);
    let mut report = SasvReport {
        min_a_dcf: min_a,
        tau_sasv,
        t_dcf: None,
        t_eer: None,
        tau_asv: None,
        tau_cm: None,
    };
    if let Some(tandem) = tandem {
        let tdcf = t_dcf_constrained(tandem, AsvThresholdPolicy::EerPoint, cfg)?;
        let teer = t_eer(tandem)?;
        report.t_dcf = Some(tdcf.value);
        report.t_eer = Some(teer.value);
        report.tau_asv = Some(teer.tau_asv);
        report.tau_cm = Some(teer.tau_cm);
    }
    Ok(report)
}
