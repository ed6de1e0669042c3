//! Two-class detection metrics for standalone countermeasures: error-rate
//! curves, EER, DCF / minDCF / actDCF, and the cost of log-likelihood ratios.
//!
//! The detection cost function is `DCF(tau) = beta * p_miss(tau) + p_fa(tau)`
//! where `p_miss` is the miss rate over bona fide trials and `p_fa` the false
//! alarm rate over spoofed trials, both under the accept-iff-score>=tau rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Natural log of 2, used to express Cllr in bits.
const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty {class} class: at least one trial required")]
    EmptyClass { class: &'static str },
    #[error("non-finite score encountered in {class} class")]
    NonFiniteScore { class: &'static str },
    #[error("invalid cost configuration: {0}")]
    InvalidConfig(String),
}

/// Decision costs and class priors for the two-class DCF.
///
/// Holds either a directly specified cost ratio `beta`, or the underlying
/// costs and spoof prior from which `beta = c_miss*(1-pi_spf)/(c_fa*pi_spf)`
/// is derived. The two forms are mutually exclusive by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CostConfig {
    DirectBeta { beta: f64 },
    CostsAndPrior { c_miss: f64, c_fa: f64, pi_spf: f64 },
}

impl CostConfig {
    /// Cost ratio given directly. Must be positive and finite.
    pub fn from_beta(beta: f64) -> Result<Self, MetricError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(MetricError::InvalidConfig(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(CostConfig::DirectBeta { beta })
    }

    /// Cost ratio derived from miss/false-alarm costs and the spoof prior.
    pub fn from_costs(c_miss: f64, c_fa: f64, pi_spf: f64) -> Result<Self, MetricError> {
        if !(c_miss.is_finite() && c_miss > 0.0) || !(c_fa.is_finite() && c_fa > 0.0) {
            return Err(MetricError::InvalidConfig(format!(
                "costs must be positive and finite, got c_miss={c_miss} c_fa={c_fa}"
            )));
        }
        if !(pi_spf > 0.0 && pi_spf < 1.0) {
            return Err(MetricError::InvalidConfig(format!(
                "pi_spf must lie in (0,1), got {pi_spf}"
            )));
        }
        Ok(CostConfig::CostsAndPrior { c_miss, c_fa, pi_spf })
    }

    pub fn beta(&self) -> f64 {
        match *self {
            CostConfig::DirectBeta { beta } => beta,
            CostConfig::CostsAndPrior { c_miss, c_fa, pi_spf } => {
                c_miss * (1.0 - pi_spf) / (c_fa * pi_spf)
            }
        }
    }

    /// Bayes decision threshold `-ln(beta)` for log-likelihood-ratio scores.
    pub fn bayes_threshold(&self) -> f64 {
        -self.beta().ln()
    }

    /// The (c_miss, c_fa) pair backing prior sweeps. A direct-beta config
    /// maps to unit costs, with the beta value absorbed into the prior.
    pub fn cost_basis(&self) -> (f64, f64) {
        match *self {
            CostConfig::DirectBeta { .. } => (1.0, 1.0),
            CostConfig::CostsAndPrior { c_miss, c_fa, .. } => (c_miss, c_fa),
        }
    }
}

impl Default for CostConfig {
    /// The evaluation default: beta = 1.9.
    fn default() -> Self {
        CostConfig::DirectBeta { beta: 1.9 }
    }
}

/// Miss and false-alarm rates indexed by ascending candidate thresholds.
///
/// Candidate thresholds are the midpoints between adjacent distinct pooled
/// score values plus `-inf`/`+inf` sentinels, so the curve enumerates every
/// operating point attainable by any real-valued threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub thresholds: Vec<f64>,
    pub p_miss: Vec<f64>,
    pub p_fa: Vec<f64>,
}

impl ErrorCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Operating points as (p_fa, p_miss) pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.p_fa.iter().copied().zip(self.p_miss.iter().copied())
    }
}

/// Per-system two-class metric report.
///
/// `eer` and all DCF values are rates/costs in [0, ...]; formatting as
/// percentages is left to report layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmReport {
    pub min_dcf: f64,
    pub act_dcf: f64,
    pub cllr: f64,
    pub eer: f64,
    pub tau_min: f64,
    pub tau_bayes: f64,
}

fn check_class(scores: &[f64], class: &'static str) -> Result<(), MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyClass { class });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore { class });
    }
    Ok(())
}

fn sorted(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Midpoints between adjacent distinct values of the pooled sorted scores,
/// bracketed by -inf/+inf sentinels.
pub(crate) fn candidate_thresholds(pooled_sorted: &[f64]) -> Vec<f64> {
    let mut taus = Vec::with_capacity(pooled_sorted.len() + 2);
    taus.push(f64::NEG_INFINITY);
    for w in pooled_sorted.windows(2) {
        if w[0] < w[1] {
            let mid = w[0] * 0.5 + w[1] * 0.5;
            // Adjacent representable values can round onto an endpoint; such
            // a midpoint separates nothing and is dropped.
            if w[0] < mid && mid < w[1] {
                taus.push(mid);
            }
        }
    }
    taus.push(f64::INFINITY);
    taus
}

/// Fraction of `sorted_scores` strictly below `tau`.
pub(crate) fn frac_below(sorted_scores: &[f64], tau: f64) -> f64 {
    let n = sorted_scores.partition_point(|s| *s < tau);
    n as f64 / sorted_scores.len() as f64
}

/// Fraction of `sorted_scores` greater than or equal to `tau`.
pub(crate) fn frac_at_or_above(sorted_scores: &[f64], tau: f64) -> f64 {
    let n = sorted_scores.len() - sorted_scores.partition_point(|s| *s < tau);
    n as f64 / sorted_scores.len() as f64
}

/// Sweep the pooled candidate thresholds and tabulate miss/false-alarm rates.
///
/// `p_miss(tau)` is the fraction of bona fide scores < tau; `p_fa(tau)` the
/// fraction of spoof scores >= tau.
pub fn error_curve(bona: &[f64], spoof: &[f64]) -> Result<ErrorCurve, MetricError> {
    check_class(bona, "bona fide")?;
    check_class(spoof, "spoof")?;
    let sb = sorted(bona);
    let ss = sorted(spoof);
    let mut pooled = Vec::with_capacity(sb.len() + ss.len());
    pooled.extend_from_slice(&sb);
    pooled.extend_from_slice(&ss);
    pooled.sort_unstable_by(f64::total_cmp);

    let thresholds = candidate_thresholds(&pooled);
    let mut p_miss = Vec::with_capacity(thresholds.len());
    let mut p_fa = Vec::with_capacity(thresholds.len());
    for &tau in &thresholds {
        p_miss.push(frac_below(&sb, tau));
        p_fa.push(frac_at_or_above(&ss, tau));
    }
    Ok(ErrorCurve { thresholds, p_miss, p_fa })
}

/// `beta * p_miss + p_fa`.
pub fn dcf(p_miss: f64, p_fa: f64, cfg: &CostConfig) -> f64 {
    cfg.beta() * p_miss + p_fa
}

/// Minimum DCF over the curve and the minimizing threshold (ties broken
/// toward the smallest threshold).
pub fn min_dcf(curve: &ErrorCurve, cfg: &CostConfig) -> (f64, f64) {
    let beta = cfg.beta();
    let mut best = f64::INFINITY;
    let mut best_tau = f64::NEG_INFINITY;
    for i in 0..curve.len() {
        let v = beta * curve.p_miss[i] + curve.p_fa[i];
        if v < best {
            best = v;
            best_tau = curve.thresholds[i];
        }
    }
    (best, best_tau)
}

/// `-ln(beta)`, the Bayes threshold for calibrated LLR scores.
pub fn bayes_threshold(cfg: &CostConfig) -> f64 {
    cfg.bayes_threshold()
}

/// DCF realised at the preset Bayes threshold.
pub fn act_dcf(bona: &[f64], spoof: &[f64], cfg: &CostConfig) -> Result<f64, MetricError> {
    check_class(bona, "bona fide")?;
    check_class(spoof, "spoof")?;
    let tau = cfg.bayes_threshold();
    let p_miss = bona.iter().filter(|s| **s < tau).count() as f64 / bona.len() as f64;
    let p_fa = spoof.iter().filter(|s| **s >= tau).count() as f64 / spoof.len() as f64;
    Ok(dcf(p_miss, p_fa, cfg))
}

/// Numerically stable `ln(1 + exp(x))`.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Cost of log-likelihood ratios, in bits. Scores are read as natural-log
/// LLRs; an uninformative system (all scores zero) costs exactly 1 bit.
pub fn cllr(bona: &[f64], spoof: &[f64]) -> Result<f64, MetricError> {
    check_class(bona, "bona fide")?;
    check_class(spoof, "spoof")?;
    let mean_b = bona.iter().map(|s| softplus(-s)).sum::<f64>() / bona.len() as f64;
    let mean_s = spoof.iter().map(|s| softplus(*s)).sum::<f64>() / spoof.len() as f64;
    Ok((mean_b + mean_s) / (2.0 * LN_2))
}

/// Vertices of the ROC convex hull in (p_fa, p_miss) coordinates, from the
/// all-accept corner to the all-reject corner.
fn rocch_vertices(curve: &ErrorCurve) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = curve.points().collect();
    pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // Monotone-chain lower hull: keeps the boundary closest to the origin.
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Convention used to read an equal-error rate off a finite curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EerMethod {
    /// ROC-convex-hull EER with linear interpolation (unique, standard).
    #[default]
    Rocch,
    /// Midpoint of (p_miss, p_fa) at the operating point minimizing
    /// |p_miss - p_fa|. Provided for cross-checks against conventions that
    /// skip the hull.
    NearestCrossing,
}

/// Threshold of the empirical operating point nearest the p_miss = p_fa
/// diagonal (ties toward the smallest threshold).
fn nearest_crossing(curve: &ErrorCurve) -> (usize, f64) {
    let mut best_i = 0;
    let mut best_gap = f64::INFINITY;
    for i in 0..curve.len() {
        let gap = (curve.p_miss[i] - curve.p_fa[i]).abs();
        if gap < best_gap {
            best_gap = gap;
            best_i = i;
        }
    }
    (best_i, curve.thresholds[best_i])
}

/// ROCCH equal error rate and an indicative threshold.
///
/// The value is the intersection of the ROC convex hull with the
/// p_miss = p_fa diagonal, linearly interpolated between hull vertices. The
/// threshold reported is the empirical operating point nearest the diagonal
/// (hull interpolation does not correspond to a single threshold).
pub fn eer(curve: &ErrorCurve) -> (f64, f64) {
    eer_with(curve, EerMethod::Rocch)
}

pub fn eer_with(curve: &ErrorCurve, method: EerMethod) -> (f64, f64) {
    let (idx, tau) = nearest_crossing(curve);
    match method {
        EerMethod::NearestCrossing => {
            ((curve.p_miss[idx] + curve.p_fa[idx]) / 2.0, tau)
        }
        EerMethod::Rocch => {
            let hull = rocch_vertices(curve);
            // diff = p_miss - p_fa runs from >= 0 at the left end of the
            // hull to -1 at the all-accept corner; find the sign change.
            let mut value = 0.5;
            for w in hull.windows(2) {
                let (x1, y1) = w[0];
                let (x2, y2) = w[1];
                let d1 = y1 - x1;
                let d2 = y2 - x2;
                if d1 <= 0.0 {
                    value = y1;
                    break;
                }
                if d2 <= 0.0 {
                    let t = d1 / (d1 - d2);
                    value = y1 + t * (y2 - y1);
                    break;
                }
            }
            (value, tau)
        }
    }
}

/// Full two-class report: minDCF, actDCF, Cllr, and EER.
pub fn cm_report(bona: &[f64], spoof: &[f64], cfg: &CostConfig) -> Result<CmReport, MetricError> {
    let curve = error_curve(bona, spoof)?;
    let (min_dcf_v, tau_min) = min_dcf(&curve, cfg);
    let act = act_dcf(bona, spoof, cfg)?;
    let c = cllr(bona, spoof)?;
    let (eer_v, _) = eer(&curve);
    Ok(CmReport {
        min_dcf: min_dcf_v,
        act_dcf: act,
        cllr: c,
        eer: eer_v,
        tau_min,
        tau_bayes: cfg.bayes_threshold(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta19() -> CostConfig {
        CostConfig::default()
    }

    #[test]
    fn default_constants() {
        let cfg = CostConfig::default();
        assert_eq!(cfg.beta(), 1.9);
        assert!((cfg.bayes_threshold() - (-(1.9f64).ln())).abs() < 1e-15);
        // frozen: -ln(1.9) evaluated at high precision
        assert!((cfg.bayes_threshold() - (-0.6418538861723947)).abs() < 1e-12);
    }

    #[test]
    fn beta_from_costs_matches_direct() {
        // c_miss=1, c_fa=1, pi = 1/(1+1.9) gives beta = 1.9 back.
        let pi = 1.0 / 2.9;
        let cfg = CostConfig::from_costs(1.0, 1.0, pi).unwrap();
        assert!((cfg.beta() - 1.9).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(CostConfig::from_beta(0.0).is_err());
        assert!(CostConfig::from_beta(f64::NAN).is_err());
        assert!(CostConfig::from_costs(1.0, 1.0, 0.0).is_err());
        assert!(CostConfig::from_costs(-1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn curve_perfect_separation_has_zero_zero_point() {
        let curve = error_curve(&[1.0], &[-1.0]).unwrap();
        assert!(curve.points().any(|(pf, pm)| pf == 0.0 && pm == 0.0));
    }

    #[test]
    fn curve_indistinguishable_scores_has_only_corners() {
        let curve = error_curve(&[0.0], &[0.0]).unwrap();
        let pts: Vec<_> = curve.points().collect();
        assert_eq!(pts, vec![(1.0, 0.0), (0.0, 1.0)]);
    }

    // Golden table for bona={2,1,-1}, spoof={-2,0}, fixed by sweeping the
    // definitions at every midpoint threshold by direct counting.
    #[test]
    fn curve_five_trial_golden() {
        let curve = error_curve(&[2.0, 1.0, -1.0], &[-2.0, 0.0]).unwrap();
        let inf = f64::INFINITY;
        assert_eq!(curve.thresholds, vec![-inf, -1.5, -0.5, 0.5, 1.5, inf]);
        let third = 1.0 / 3.0;
        assert_eq!(curve.p_miss, vec![0.0, 0.0, third, third, 2.0 * third, 1.0]);
        assert_eq!(curve.p_fa, vec![1.0, 0.5, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn curve_monotone_invariants() {
        let curve = error_curve(&[2.0, 1.0, -1.0, 0.3, 0.3], &[-2.0, 0.0, 0.1]).unwrap();
        assert_eq!(curve.p_miss[0], 0.0);
        assert_eq!(curve.p_fa[0], 1.0);
        assert_eq!(*curve.p_miss.last().unwrap(), 1.0);
        assert_eq!(*curve.p_fa.last().unwrap(), 0.0);
        for w in curve.p_miss.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for w in curve.p_fa.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn empty_class_is_error() {
        assert!(matches!(
            error_curve(&[], &[0.0]),
            Err(MetricError::EmptyClass { class: "bona fide" })
        ));
        assert!(matches!(
            error_curve(&[0.0], &[]),
            Err(MetricError::EmptyClass { class: "spoof" })
        ));
    }

    #[test]
    fn dcf_dummy_values() {
        let cfg = beta19();
        assert_eq!(dcf(0.0, 0.0, &cfg), 0.0);
        assert_eq!(dcf(1.0, 0.0, &cfg), 1.9);
        assert_eq!(dcf(0.0, 1.0, &cfg), 1.0);
    }

    #[test]
    fn min_dcf_perfect_and_constant() {
        let cfg = beta19();
        let perfect = error_curve(&[1.0], &[-1.0]).unwrap();
        assert_eq!(min_dcf(&perfect, &cfg).0, 0.0);

        let constant = error_curve(&[0.0], &[0.0]).unwrap();
        let (v, tau) = min_dcf(&constant, &cfg);
        assert_eq!(v, 1.0); // accept-all beats reject-all: 1.0 < 1.9
        assert_eq!(tau, f64::NEG_INFINITY);
    }

    #[test]
    fn min_dcf_five_trial_golden() {
        let cfg = beta19();
        let curve = error_curve(&[2.0, 1.0, -1.0], &[-2.0, 0.0]).unwrap();
        let (v, tau) = min_dcf(&curve, &cfg);
        assert_eq!(v, 0.5);
        assert_eq!(tau, -1.5);
    }

    #[test]
    fn bayes_threshold_analytic_points() {
        assert_eq!(bayes_threshold(&CostConfig::from_beta(1.0).unwrap()), 0.0);
        let e = std::f64::consts::E;
        assert!((bayes_threshold(&CostConfig::from_beta(e).unwrap()) + 1.0).abs() < 1e-15);
        assert!(
            (bayes_threshold(&beta19()) - (-0.6418538861723947)).abs() < 1e-15,
            "frozen high-precision -ln(1.9)"
        );
    }

    #[test]
    fn act_dcf_cases() {
        let cfg = beta19();
        // tau_bayes ~ -0.642; zeros are accepted
        assert_eq!(act_dcf(&[0.0], &[0.0], &cfg).unwrap(), 1.0);
        assert_eq!(act_dcf(&[10.0, 10.0], &[-10.0], &cfg).unwrap(), 0.0);
        assert_eq!(act_dcf(&[-10.0], &[10.0], &cfg).unwrap(), 2.9);
    }

    #[test]
    fn cllr_coin_toss_is_one_bit() {
        for n in [1usize, 2, 3, 4, 7, 8] {
            let b = vec![0.0; n];
            let s = vec![0.0; 2 * n];
            assert_eq!(cllr(&b, &s).unwrap(), 1.0, "n={n}");
        }
    }

    #[test]
    fn cllr_limit_case_near_zero() {
        let v = cllr(&[50.0], &[-50.0]).unwrap();
        assert!(v < 1e-20, "got {v}");
    }

    #[test]
    fn cllr_three_trial_golden() {
        // Frozen by term-by-term evaluation at extended precision:
        // (ln(1+e^-1) + ln(1+e^0.5))/2 + ln(1+e^-1), over 2 ln 2.
        let v = cllr(&[1.0, -0.5], &[-1.0]).unwrap();
        assert!((v - 0.6902798209424654).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn eer_perfect_and_constant() {
        let perfect = error_curve(&[1.0], &[-1.0]).unwrap();
        assert_eq!(eer(&perfect).0, 0.0);
        let constant = error_curve(&[0.0], &[0.0]).unwrap();
        assert_eq!(eer(&constant).0, 0.5);
    }

    #[test]
    fn eer_five_trial_rocch_golden() {
        // Hull vertices (p_fa,p_miss): (0,1/3)-(0.5,0)-(1,0); diagonal
        // crossing on the first segment at 0.2.
        let curve = error_curve(&[2.0, 1.0, -1.0], &[-2.0, 0.0]).unwrap();
        let (v, _) = eer(&curve);
        assert!((v - 0.2).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn eer_nearest_crossing_variant() {
        let curve = error_curve(&[0.0], &[0.0]).unwrap();
        let (v, _) = eer_with(&curve, EerMethod::NearestCrossing);
        assert_eq!(v, 0.5);
    }

    #[test]
    fn act_dominates_min() {
        let cfg = beta19();
        let bona = [0.2, 1.4, -0.3, 2.2, 0.9];
        let spoof = [-1.0, 0.1, -2.0, 0.4];
        let curve = error_curve(&bona, &spoof).unwrap();
        let (mv, _) = min_dcf(&curve, &cfg);
        let av = act_dcf(&bona, &spoof, &cfg).unwrap();
        assert!(av >= mv);
    }

    #[test]
    fn scaling_changes_act_and_cllr_but_not_min() {
        let cfg = beta19();
        let bona = [0.2, 1.4, -0.3];
        let spoof = [-1.0, 0.1];
        let scaled_b: Vec<f64> = bona.iter().map(|s| s * 3.0).collect();
        let scaled_s: Vec<f64> = spoof.iter().map(|s| s * 3.0).collect();
        let m1 = min_dcf(&error_curve(&bona, &spoof).unwrap(), &cfg).0;
        let m2 = min_dcf(&error_curve(&scaled_b, &scaled_s).unwrap(), &cfg).0;
        assert_eq!(m1, m2);
        let c1 = cllr(&bona, &spoof).unwrap();
        let c2 = cllr(&scaled_b, &scaled_s).unwrap();
        assert_ne!(c1, c2);
        let a1 = act_dcf(&bona, &spoof, &cfg).unwrap();
        let a2 = act_dcf(&scaled_b, &scaled_s, &cfg).unwrap();
        assert_ne!(a1, a2);
    }

    #[test]
    fn report_serializes_with_exact_field_names() {
        let r = CmReport {
            min_dcf: 0.1,
            act_dcf: 0.2,
            cllr: 0.3,
            eer: 0.05,
            tau_min: 1.5,
            tau_bayes: -0.6,
        };
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"min_dcf":0.1,"act_dcf":0.2,"cllr":0.3,"eer":0.05,"tau_min":1.5,"tau_bayes":-0.6}"#
        );
    }
}
