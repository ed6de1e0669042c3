//! Score calibration and calibration diagnostics: the logit transform for
//! probability-like scores, affine calibration trained by Cllr
//! minimization, oracle pool-adjacent-violators calibration, and
//! normalized-DCF threshold sweeps against dummy-system bounds.
//!
//! A sweep evaluates the normalized cost
//! `DCF(tau_Bayes(pi)) / (1 + beta(pi))` over a grid of asserted spoof
//! priors `pi`, where `beta(pi) = c_miss*(1-pi)/(c_fa*pi)` and
//! `tau_Bayes = -ln(beta)`. A well-calibrated system tracks its own minimum
//! curve; a miscalibrated one saturates at the bound
//! `min(beta,1)/(1+beta)` set by the better of the accept-all/reject-all
//! dummies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detmetrics::{self, softplus, CostConfig, ErrorCurve};

/// LLR magnitude assigned to probabilities of exactly 0 or 1, past the
/// saturation point of a double-precision sigmoid.
pub const DEFAULT_LLR_CLAMP: f64 = 35.0;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("probability-like score {value} outside [0,1]")]
    OutOfRange { value: f64 },
    #[error("empty {class} class: at least one trial required")]
    EmptyClass { class: &'static str },
    #[error("non-finite score in {class} class")]
    NonFiniteScore { class: &'static str },
    #[error("calibration did not converge: gradient norm {grad_norm:.3e} after {iterations} iterations")]
    NonConvergence { grad_norm: f64, iterations: usize },
    #[error("fitted scale {scale} is not positive; dev-set classes appear inverted")]
    NonPositiveScale { scale: f64 },
    #[error("invalid prior grid: {0}")]
    InvalidGrid(String),
}

fn check_class(scores: &[f64], class: &'static str) -> Result<(), CalibError> {
    if scores.is_empty() {
        return Err(CalibError::EmptyClass { class });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CalibError::NonFiniteScore { class });
    }
    Ok(())
}

/// `log(p/(1-p))`, clamping exact 0/1 inputs to -/+ `clamp`.
pub fn logit(p: f64, clamp: f64) -> Result<f64, CalibError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CalibError::OutOfRange { value: p });
    }
    if p == 0.0 {
        Ok(-clamp)
    } else if p == 1.0 {
        Ok(clamp)
    } else {
        Ok((p / (1.0 - p)).ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitResult {
    pub scores: Vec<f64>,
    /// Number of inputs clamped at the 0/1 boundaries.
    pub clamped: usize,
}

/// Elementwise logit with a clamp counter for boundary inputs.
pub fn logit_scores(scores: &[f64], clamp: f64) -> Result<LogitResult, CalibError> {
    let mut out = Vec::with_capacity(scores.len());
    let mut clamped = 0;
    for &p in scores {
        if p == 0.0 || p == 1.0 {
            clamped += 1;
        }
        out.push(logit(p, clamp)?);
    }
    Ok(LogitResult { scores: out, clamped })
}

/// Order-preserving affine score map `s -> scale*s + offset` fitted by
/// Cllr minimization, with its training summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCalibration {
    pub scale: f64,
    pub offset: f64,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

const LN_2: f64 = std::f64::consts::LN_2;
const GRAD_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 500;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Cllr of affine-mapped scores along with its gradient and Hessian in
/// (scale, offset).
fn cllr_objective(bona: &[f64], spoof: &[f64], a: f64, b: f64) -> (f64, [f64; 2], [f64; 3]) {
    let nb = bona.len() as f64;
    let ns = spoof.len() as f64;
    let mut f = 0.0;
    let mut g = [0.0, 0.0];
    let mut h = [0.0, 0.0, 0.0]; // h_aa, h_ab, h_bb
    for &s in bona {
        let z = a * s + b;
        f += softplus(-z) / nb;
        let sig = sigmoid(-z);
        g[0] -= sig * s / nb;
        g[1] -= sig / nb;
        let w = sig * sigmoid(z);
        h[0] += w * s * s / nb;
        h[1] += w * s / nb;
        h[2] += w / nb;
    }
    for &s in spoof {
        let z = a * s + b;
        f += softplus(z) / ns;
        let sig = sigmoid(z);
        g[0] += sig * s / ns;
        g[1] += sig / ns;
        let w = sig * sigmoid(-z);
        h[0] += w * s * s / ns;
        h[1] += w * s / ns;
        h[2] += w / ns;
    }
    let c = 2.0 * LN_2;
    (f / c, [g[0] / c, g[1] / c], [h[0] / c, h[1] / c, h[2] / c])
}

/// Fit `(scale, offset)` minimizing the dev-set Cllr by damped Newton
/// iterations with backtracking line search, starting from the identity.
/// The objective is convex in (scale, offset); convergence is declared at
/// gradient norm < 1e-8 or after 500 iterations, whichever comes first.
pub fn fit_affine(bona_dev: &[f64], spoof_dev: &[f64]) -> Result<AffineCalibration, CalibError> {
    check_class(bona_dev, "bona fide")?;
    check_class(spoof_dev, "spoof")?;

    let mut warnings = Vec::new();
    let constant = |v: &[f64]| v.iter().all(|s| *s == v[0]);
    if constant(bona_dev) {
        warnings.push("bona fide dev scores are constant".to_string());
    }
    if constant(spoof_dev) {
        warnings.push("spoof dev scores are constant".to_string());
    }

    let (mut a, mut b) = (1.0, 0.0);
    let (mut f, mut g, mut h) = cllr_objective(bona_dev, spoof_dev, a, b);
    let mut iterations = 0;
    let mut grad_norm = (g[0] * g[0] + g[1] * g[1]).sqrt();

    while grad_norm >= GRAD_TOL && iterations < MAX_ITERS {
        iterations += 1;
        let det = h[0] * h[2] - h[1] * h[1];
        let (mut da, mut db) = if det.is_finite() && det > 1e-300 {
            ((-g[0] * h[2] + g[1] * h[1]) / det, (-g[1] * h[0] + g[0] * h[1]) / det)
        } else {
            (-g[0], -g[1])
        };
        let mut slope = g[0] * da + g[1] * db;
        if !(slope < 0.0) {
            // Newton direction lost descent to rounding; fall back.
            da = -g[0];
            db = -g[1];
            slope = g[0] * da + g[1] * db;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (fn_, gn, hn) = cllr_objective(bona_dev, spoof_dev, a + t * da, b + t * db);
            if fn_ <= f + 1e-4 * t * slope {
                a += t * da;
                b += t * db;
                f = fn_;
                g = gn;
                h = hn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break; // objective flat to machine precision
        }
        grad_norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
    }

    if grad_norm >= GRAD_TOL && iterations >= MAX_ITERS {
        return Err(CalibError::NonConvergence { grad_norm, iterations });
    }
    if a <= 0.0 {
        return Err(CalibError::NonPositiveScale { scale: a });
    }
    Ok(AffineCalibration {
        scale: a,
        offset: b,
        iterations,
        final_objective: f,
        final_grad_norm: grad_norm,
        warnings,
    })
}

/// Elementwise `scale*s + offset`.
pub fn apply_affine(cal: &AffineCalibration, scores: &[f64]) -> Vec<f64> {
    scores.iter().map(|s| cal.scale * s + cal.offset).collect()
}

/// One constant segment of a PAV mapping: the score range it was fitted on
/// and the calibrated output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PavSegment {
    pub score_lo: f64,
    pub score_hi: f64,
    /// Fraction of bona fide trials pooled into this segment.
    pub posterior: f64,
    /// Calibrated LLR: clamped logit of the posterior minus the dev-set log
    /// prior odds.
    pub llr: f64,
}

/// Monotone non-decreasing step mapping from raw scores to calibrated LLRs.
///
/// This is an oracle calibration: it is fitted on evaluation labels.
/// Between fitted segments the step switches at the midpoint of the gap;
/// inputs beyond the outermost segments extend the end segments over the
/// whole real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PavMapping {
    pub segments: Vec<PavSegment>,
    pub log_prior_odds: f64,
    pub clamp: f64,
    /// Marks the mapping as label-informed in downstream reports.
    pub oracle: bool,
}

impl PavMapping {
    /// Calibrated LLR for an arbitrary score.
    pub fn map(&self, x: f64) -> f64 {
        self.segments[self.segment_index(x)].llr
    }

    /// Fitted posterior for an arbitrary score.
    pub fn posterior_at(&self, x: f64) -> f64 {
        self.segments[self.segment_index(x)].posterior
    }

    fn segment_index(&self, x: f64) -> usize {
        // Switch points are midpoints between adjacent segment ranges; a
        // score exactly at a switch point maps upward.
        let mut idx = 0;
        for i in 0..self.segments.len() - 1 {
            let switch = self.segments[i].score_hi * 0.5 + self.segments[i + 1].score_lo * 0.5;
            if x >= switch {
                idx = i + 1;
            } else {
                break;
            }
        }
        idx
    }

    pub fn apply(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|s| self.map(*s)).collect()
    }
}

/// Pool-adjacent-violators calibration: isotonic regression of the bona
/// fide indicator on the score, converted to LLRs.
pub fn pav_calibrate(
    bona_eval: &[f64],
    spoof_eval: &[f64],
    clamp: f64,
) -> Result<PavMapping, CalibError> {
    check_class(bona_eval, "bona fide")?;
    check_class(spoof_eval, "spoof")?;

    let mut pairs: Vec<(f64, f64)> = bona_eval
        .iter()
        .map(|s| (*s, 1.0))
        .chain(spoof_eval.iter().map(|s| (*s, 0.0)))
        .collect();
    pairs.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));

    #[derive(Clone, Copy)]
    struct Block {
        lo: f64,
        hi: f64,
        sum_pos: f64,
        n: f64,
    }
    let mut stack: Vec<Block> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        // Trials with tied scores are pooled up front: the mapping must be
        // a function of the score.
        let score = pairs[i].0;
        let mut sum_pos = 0.0;
        let mut n = 0.0;
        while i < pairs.len() && pairs[i].0 == score {
            sum_pos += pairs[i].1;
            n += 1.0;
            i += 1;
        }
        let mut block = Block { lo: score, hi: score, sum_pos, n };
        // Merging on >= pools equal-mean neighbours too, giving the
        // canonical minimal segment list (the fitted values are identical
        // either way).
        while let Some(prev) = stack.last() {
            if prev.sum_pos / prev.n >= block.sum_pos / block.n {
                block = Block {
                    lo: prev.lo,
                    hi: block.hi,
                    sum_pos: prev.sum_pos + block.sum_pos,
                    n: prev.n + block.n,
                };
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(block);
    }

    let log_prior_odds = (bona_eval.len() as f64 / spoof_eval.len() as f64).ln();
    let segments = stack
        .iter()
        .map(|b| {
            let posterior = b.sum_pos / b.n;
            let llr = logit(posterior, clamp).expect("posterior in [0,1]") - log_prior_odds;
            PavSegment { score_lo: b.lo, score_hi: b.hi, posterior, llr }
        })
        .collect();
    Ok(PavMapping { segments, log_prior_odds, clamp, oracle: true })
}

/// Grid of asserted spoof priors, uniform in log-odds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorGrid {
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for PriorGrid {
    fn default() -> Self {
        PriorGrid { points: 199, lo: 0.001, hi: 0.999 }
    }
}

impl PriorGrid {
    pub fn priors(&self) -> Result<Vec<f64>, CalibError> {
        if self.points < 2 {
            return Err(CalibError::InvalidGrid("need at least 2 grid points".into()));
        }
        if !(0.0 < self.lo && self.lo < self.hi && self.hi < 1.0) {
            return Err(CalibError::InvalidGrid(format!(
                "need 0 < lo < hi < 1, got lo={} hi={}",
                self.lo, self.hi
            )));
        }
        let llo = (self.lo / (1.0 - self.lo)).ln();
        let lhi = (self.hi / (1.0 - self.hi)).ln();
        let n = self.points;
        let mut pis: Vec<f64> = (0..n)
            .map(|i| {
                let l = llo + (lhi - llo) * i as f64 / (n - 1) as f64;
                sigmoid(l)
            })
            .collect();
        // Endpoints are part of the contract; pin them exactly.
        pis[0] = self.lo;
        pis[n - 1] = self.hi;
        Ok(pis)
    }
}

/// One grid point of the normalized-DCF sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApeRow {
    pub pi: f64,
    pub beta: f64,
    pub tau_bayes: f64,
    /// Normalized DCF realised at tau_bayes (unclipped).
    pub norm_act_dcf: f64,
    /// Minimum normalized DCF over all thresholds.
    pub norm_min_dcf: f64,
    /// Normalized cost of the better dummy: `min(beta,1)/(1+beta)`.
    pub dummy_bound: f64,
}

impl ApeRow {
    /// Actual cost clipped at the dummy bound (the plotted quantity).
    pub fn clipped_act(&self) -> f64 {
        self.norm_act_dcf.min(self.dummy_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApeCurve {
    pub rows: Vec<ApeRow>,
}

/// Sweep the asserted spoof prior over `grid`, evaluating the normalized
/// actual DCF at each Bayes threshold, its minimum over all thresholds,
/// and the dummy bound. The (c_miss, c_fa) pair comes from `cfg`
/// (`cost_basis`), so a direct-beta config sweeps with unit costs.
pub fn ape_sweep(
    bona: &[f64],
    spoof: &[f64],
    cfg: &CostConfig,
    grid: &PriorGrid,
) -> Result<ApeCurve, CalibError> {
    check_class(bona, "bona fide")?;
    check_class(spoof, "spoof")?;
    let (c_miss, c_fa) = cfg.cost_basis();
    let curve: ErrorCurve =
        detmetrics::error_curve(bona, spoof).expect("classes validated above");
    let mut sb = bona.to_vec();
    sb.sort_unstable_by(f64::total_cmp);
    let mut ss = spoof.to_vec();
    ss.sort_unstable_by(f64::total_cmp);

    let mut rows = Vec::new();
    for pi in grid.priors()? {
        let beta = c_miss * (1.0 - pi) / (c_fa * pi);
        let tau = -beta.ln();
        let p_miss = detmetrics::frac_below(&sb, tau);
        let p_fa = detmetrics::frac_at_or_above(&ss, tau);
        let norm = 1.0 / (1.0 + beta);
        let act = (beta * p_miss + p_fa) * norm;
        let mut min = f64::INFINITY;
        for i in 0..curve.len() {
            let v = beta * curve.p_miss[i] + curve.p_fa[i];
            if v < min {
                min = v;
            }
        }
        rows.push(ApeRow {
            pi,
            beta,
            tau_bayes: tau,
            norm_act_dcf: act,
            norm_min_dcf: min * norm,
            dummy_bound: beta.min(1.0) * norm,
        });
    }
    Ok(ApeCurve { rows })
}

impl ApeCurve {
    /// CSV serialization with the documented column set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pi,beta,tau_bayes,norm_act_dcf,norm_min_dcf,dummy_bound\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.pi, r.beta, r.tau_bayes, r.norm_act_dcf, r.norm_min_dcf, r.dummy_bound
            ));
        }
        out
    }

    /// Minimal SVG line chart: clipped actual cost, minimum cost, and the
    /// dummy bound against the Bayes threshold.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 480.0;
        const MARGIN: f64 = 40.0;
        if self.rows.is_empty() {
            return String::from("<svg xmlns=\"http://www.w3.org/2000/svg\"/>");
        }
        let x_lo = self.rows.iter().map(|r| r.tau_bayes).fold(f64::INFINITY, f64::min);
        let x_hi = self.rows.iter().map(|r| r.tau_bayes).fold(f64::NEG_INFINITY, f64::max);
        let y_hi = self
            .rows
            .iter()
            .map(|r| r.dummy_bound.max(r.clipped_act()))
            .fold(0.0f64, f64::max)
            .max(1e-12);
        let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - y / y_hi * (H - 2.0 * MARGIN);
        let path = |ys: &dyn Fn(&ApeRow) -> f64| -> String {
            self.rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    format!("{}{:.2},{:.2}", if i == 0 { "M" } else { "L" }, sx(r.tau_bayes), sy(ys(r)))
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            concat!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
                "viewBox=\"0 0 {w} {h}\">\n",
                "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
                "<path d=\"{bound}\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"6 3\"/>\n",
                "<path d=\"{min}\" fill=\"none\" stroke=\"#2a7\"/>\n",
                "<path d=\"{act}\" fill=\"none\" stroke=\"#000\"/>\n",
                "<text x=\"{tx}\" y=\"{ty}\" font-size=\"12\">normalized DCF vs Bayes threshold",
                " (black: actual clipped, green: minimum, dashed: dummy bound)</text>\n",
                "</svg>\n"
            ),
            w = W,
            h = H,
            bound = path(&|r: &ApeRow| r.dummy_bound),
            min = path(&|r: &ApeRow| r.norm_min_dcf),
            act = path(&|r: &ApeRow| r.clipped_act()),
            tx = MARGIN,
            ty = 16.0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detmetrics::{cllr, error_curve, min_dcf};

    #[test]
    fn logit_values() {
        assert_eq!(logit(0.5, 35.0).unwrap(), 0.0);
        assert!((logit(0.9, 35.0).unwrap() - 9.0f64.ln()).abs() < 1e-15);
        assert_eq!(logit(1.0, 35.0).unwrap(), 35.0);
        assert_eq!(logit(0.0, 35.0).unwrap(), -35.0);
        assert!(matches!(logit(1.5, 35.0), Err(CalibError::OutOfRange { .. })));
        assert!(matches!(logit(-0.1, 35.0), Err(CalibError::OutOfRange { .. })));
    }

    #[test]
    fn logit_scores_counts_clamps() {
        let r = logit_scores(&[0.0, 0.5, 1.0, 0.25], DEFAULT_LLR_CLAMP).unwrap();
        assert_eq!(r.clamped, 2);
        assert_eq!(r.scores[1], 0.0);
    }

    #[test]
    fn affine_identity_map() {
        let cal = AffineCalibration {
            scale: 1.0,
            offset: 0.0,
            iterations: 0,
            final_objective: 0.0,
            final_grad_norm: 0.0,
            warnings: vec![],
        };
        assert_eq!(apply_affine(&cal, &[0.3, -2.0]), vec![0.3, -2.0]);
        let cal2 = AffineCalibration { scale: 2.0, offset: 1.0, ..cal };
        assert_eq!(apply_affine(&cal2, &[0.5]), vec![2.0]);
    }

    #[test]
    fn fit_affine_single_pair_reduces_cllr() {
        let bona = [1.0];
        let spoof = [-1.0];
        let cal = fit_affine(&bona, &spoof).unwrap();
        let before = cllr(&bona, &spoof).unwrap();
        let after = cllr(&apply_affine(&cal, &bona), &apply_affine(&cal, &spoof)).unwrap();
        assert!(after <= before + 1e-9, "after {after} before {before}");
        assert!(cal.scale > 0.0);
    }

    #[test]
    fn fit_affine_never_increases_dev_cllr() {
        let bona = [0.7, 1.3, -0.2, 2.4, 0.1];
        let spoof = [-1.1, -0.4, 0.3, -2.0];
        let cal = fit_affine(&bona, &spoof).unwrap();
        let before = cllr(&bona, &spoof).unwrap();
        let after = cllr(&apply_affine(&cal, &bona), &apply_affine(&cal, &spoof)).unwrap();
        assert!(after <= before + 1e-9);
    }

    #[test]
    fn fit_affine_flags_constant_class() {
        let cal = fit_affine(&[1.0, 1.0], &[-1.0, -0.5]).unwrap();
        assert_eq!(cal.warnings.len(), 1);
    }

    #[test]
    fn fit_affine_inverted_labels_error() {
        let err = fit_affine(&[-2.0, -1.5, -1.8], &[2.0, 1.5, 1.8]).unwrap_err();
        assert!(matches!(err, CalibError::NonPositiveScale { .. }));
    }

    #[test]
    fn affine_does_not_change_min_dcf() {
        let cfg = CostConfig::default();
        let bona = [0.7, 1.3, -0.2];
        let spoof = [-1.1, -0.4];
        let cal = fit_affine(&bona, &spoof).unwrap();
        let before = min_dcf(&error_curve(&bona, &spoof).unwrap(), &cfg).0;
        let after = min_dcf(
            &error_curve(&apply_affine(&cal, &bona), &apply_affine(&cal, &spoof)).unwrap(),
            &cfg,
        )
        .0;
        assert_eq!(before, after);
    }

    #[test]
    fn pav_perfectly_separated_two_segments() {
        let m = pav_calibrate(&[1.0, 2.0], &[-1.0, -2.0], 35.0).unwrap();
        assert_eq!(m.segments.len(), 2);
        assert_eq!(m.segments[0].posterior, 0.0);
        assert_eq!(m.segments[1].posterior, 1.0);
        assert_eq!(m.segments[0].llr, -35.0); // log prior odds = ln(1) = 0
        assert_eq!(m.segments[1].llr, 35.0);
    }

    #[test]
    fn pav_constant_scores_single_segment() {
        let m = pav_calibrate(&[0.0, 0.0], &[0.0], 35.0).unwrap();
        assert_eq!(m.segments.len(), 1);
        assert!((m.segments[0].posterior - 2.0 / 3.0).abs() < 1e-15);
        // logit(2/3) = ln 2 equals the prior log odds, so the LLR is 0.
        assert!(m.segments[0].llr.abs() < 1e-12);
    }

    #[test]
    fn pav_mapping_is_monotone() {
        let bona = [0.1, 0.9, 0.3, 0.8, 0.35];
        let spoof = [0.2, 0.05, 0.4, 0.15];
        let m = pav_calibrate(&bona, &spoof, 35.0).unwrap();
        for w in m.segments.windows(2) {
            assert!(w[0].llr <= w[1].llr);
            assert!(w[0].posterior <= w[1].posterior);
            assert!(w[0].score_hi < w[1].score_lo);
        }
        // Whole-line extension: far-out queries hit the end segments.
        assert_eq!(m.map(-100.0), m.segments[0].llr);
        assert_eq!(m.map(100.0), m.segments.last().unwrap().llr);
    }

    #[test]
    fn prior_grid_endpoints_exact() {
        let grid = PriorGrid::default();
        let pis = grid.priors().unwrap();
        assert_eq!(pis.len(), 199);
        assert_eq!(pis[0], 0.001);
        assert_eq!(pis[198], 0.999);
        for w in pis.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn ape_sweep_all_zero_scores_at_half_prior() {
        // With c_miss = c_fa and pi = 0.5: beta = 1, bound = 0.5, and the
        // accept-all behaviour of zero scores at tau = 0 costs 0.5.
        let cfg = CostConfig::default();
        let grid = PriorGrid { points: 3, lo: 0.001, hi: 0.999 };
        let curve = ape_sweep(&[0.0, 0.0], &[0.0, 0.0], &cfg, &grid).unwrap();
        let mid = &curve.rows[1];
        assert!((mid.pi - 0.5).abs() < 1e-12);
        assert!((mid.beta - 1.0).abs() < 1e-12);
        assert!((mid.dummy_bound - 0.5).abs() < 1e-12);
        assert!((mid.norm_act_dcf - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ape_sweep_dummy_bound_formula() {
        // At beta = 1.9 the bound is 1/2.9.
        let cfg = CostConfig::default();
        let grid = PriorGrid { points: 5, lo: 1.0 / 2.9, hi: 0.999 };
        let curve = ape_sweep(&[1.0], &[-1.0], &cfg, &grid).unwrap();
        let first = &curve.rows[0];
        assert!((first.beta - 1.9).abs() < 1e-12);
        assert!((first.dummy_bound - 0.3448275862068966).abs() < 1e-12);
    }

    #[test]
    fn ape_sweep_well_separated_llrs_stay_low() {
        let bona: Vec<f64> = (0..50).map(|i| 20.0 + i as f64 * 0.1).collect();
        let spoof: Vec<f64> = (0..50).map(|i| -20.0 - i as f64 * 0.1).collect();
        let cfg = CostConfig::default();
        let curve = ape_sweep(&bona, &spoof, &cfg, &PriorGrid::default()).unwrap();
        for r in &curve.rows {
            assert!(r.norm_act_dcf < 1e-9, "pi={} act={}", r.pi, r.norm_act_dcf);
        }
    }

    #[test]
    fn csv_has_documented_header() {
        let cfg = CostConfig::default();
        let grid = PriorGrid { points: 2, lo: 0.2, hi: 0.8 };
        let curve = ape_sweep(&[1.0], &[-1.0], &cfg, &grid).unwrap();
        let csv = curve.to_csv();
        assert!(csv.starts_with("pi,beta,tau_bayes,norm_act_dcf,norm_min_dcf,dummy_bound\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
