//! Search for control-parameter values that give perfect transfer (`b = 0`).
//!
//! `b = |c_x|²` is non-negative, so its zeros are tangential: they are found
//! as minima of `b(λ)` rather than by sign-change root finding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{b_from_g1, initial_conditions, propagate_trajectory, FinalFrame, InvariantMode};
use crate::error::{Error, Result};
use crate::protocol::ProtocolSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    /// RK4 steps per `b` evaluation while scanning.
    pub scan_steps: usize,
    /// RK4 steps per `b` evaluation while refining a minimum.
    pub refine_steps: usize,
    pub window: (f64, f64),
    pub scan_step: f64,
    /// Local minima of the scan below this value become refinement candidates.
    pub candidate_threshold: f64,
    /// Golden-section stops once the bracket is narrower than this.
    pub bracket_tol: f64,
    /// `b` below this counts as perfect transfer.
    pub b_tol: f64,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            scan_steps: 10_000,
            refine_steps: 40_000,
            window: (0.0, 100.0),
            scan_step: 0.25,
            candidate_threshold: 0.05,
            bracket_tol: 1e-4,
            b_tol: 1e-6,
        }
    }
}

/// Physical parameters of a λ search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneTarget {
    pub w1: f64,
    pub w2: f64,
    pub tf: f64,
    pub gamma: f64,
}

impl TuneTarget {
    pub fn swap(w1: f64, w2: f64, tf: f64) -> Self {
        Self {
            w1,
            w2,
            tf,
            gamma: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn spec(&self, lambda: f64) -> Result<ProtocolSpec> {
        ProtocolSpec::new(self.w1, self.w2, self.tf, lambda, self.gamma)
    }
}

pub fn b_of_lambda(target: &TuneTarget, lambda: f64, steps: usize) -> Result<f64> {
    let eval = || -> Result<f64> {
        let spec = target.spec(lambda)?;
        let g1 = initial_conditions(InvariantMode::G1, spec.w1, spec.w2)?;
        let end = propagate_trajectory(&spec, g1, steps)?;
        Ok(b_from_g1(&end, &FinalFrame::of(&spec)))
    };
    eval().map_err(|e| e.at_lambda(lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGap {
    pub x: f64,
    pub reason: String,
}

/// A sampled curve: `b` versus λ, or `λ_min` versus `t_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub x_name: String,
    pub y_name: String,
    pub w1: f64,
    pub w2: f64,
    pub gamma: f64,
    /// The parameter held fixed (`t_f` for a λ sweep); `None` when not applicable.
    pub fixed_tf: Option<f64>,
    pub points: Vec<CurvePoint>,
    /// Parameter values where no point could be produced.
    pub gaps: Vec<CurveGap>,
    /// Brackets around near-zero local minima (λ sweeps only).
    pub candidates: Vec<(f64, f64)>,
}

impl SweepCurve {
    pub fn min_point(&self) -> Option<CurvePoint> {
        self.points.iter().copied().min_by(|a, b| a.y.total_cmp(&b.y))
    }
}

/// Samples `b(λ)` on a uniform λ grid and brackets near-zero local minima.
pub fn scan_b(target: &TuneTarget, range: (f64, f64), step: f64, cfg: &TunerConfig) -> Result<SweepCurve> {
    let (lo, hi) = range;
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "invalid scan range [{lo}, {hi}] with step {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let lambdas: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    let values: Vec<Result<f64>> = lambdas
        .par_iter()
        .map(|&l| b_of_lambda(target, l, cfg.scan_steps))
        .collect();

    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for (&l, v) in lambdas.iter().zip(values) {
        match v {
            Ok(b) => points.push(CurvePoint { x: l, y: b }),
            Err(e) => gaps.push(CurveGap {
                x: l,
                reason: e.root().to_string(),
            }),
        }
    }
    let candidates = near_zero_minima(&points, step, cfg.candidate_threshold);
    Ok(SweepCurve {
        x_name: "lambda".into(),
        y_name: "b".into(),
        w1: target.w1,
        w2: target.w2,
        gamma: target.gamma,
        fixed_tf: Some(target.tf),
        points,
        gaps,
        candidates,
    })
}

/// Local minima below `threshold`, bracketed by their grid neighbours. Only
/// neighbours that are contiguous on the grid count.
fn near_zero_minima(points: &[CurvePoint], step: f64, threshold: f64) -> Vec<(f64, f64)> {
    let adjacent = |a: &CurvePoint, b: &CurvePoint| (b.x - a.x) < 1.5 * step;
    let mut out = Vec::new();
    for i in 0..points.len() {
        let p = points[i];
        if p.y >= threshold {
            continue;
        }
        let left = (i > 0 && adjacent(&points[i - 1], &p)).then(|| points[i - 1]);
        let right = (i + 1 < points.len() && adjacent(&p, &points[i + 1])).then(|| points[i + 1]);
        let is_min = left.is_none_or(|l| p.y < l.y) && right.is_none_or(|r| p.y <= r.y);
        if is_min && (left.is_some() || right.is_some()) {
            out.push((left.map_or(p.x, |l| l.x), right.map_or(p.x, |r| r.x)));
        }
    }
    out
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f_min, final_bracket)`.
pub fn golden_section_minimize(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<(f64, f64, (f64, f64))> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut evals = 2;
    while (b - a) > tol && evals < max_evals {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
        evals += 1;
    }
    Ok(if f1 < f2 { (x1, f1, (a, b)) } else { (x2, f2, (a, b)) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfectLambda {
    pub lambda_star: f64,
    pub b_at_star: f64,
    pub bracket: (f64, f64),
}

/// Smallest `b` in `bracket`, whether or not it reaches zero.
pub fn minimize_b(target: &TuneTarget, bracket: (f64, f64), cfg: &TunerConfig) -> Result<PerfectLambda> {
    let (lo, hi) = bracket;
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!("empty bracket [{lo}, {hi}]")));
    }
    let (lambda_star, b_at_star, _) = golden_section_minimize(
        |l| b_of_lambda(target, l, cfg.refine_steps),
        lo,
        hi,
        cfg.bracket_tol,
        200,
    )?;
    Ok(PerfectLambda {
        lambda_star,
        b_at_star,
        bracket,
    })
}

/// A λ in `bracket` with `b < cfg.b_tol`.
pub fn find_perfect_lambda(target: &TuneTarget, bracket: (f64, f64), cfg: &TunerConfig) -> Result<PerfectLambda> {
    let best = minimize_b(target, bracket, cfg)?;
    if best.b_at_star < cfg.b_tol {
        Ok(best)
    } else {
        Err(Error::NoPerfectTransfer {
            lo: bracket.0,
            hi: bracket.1,
            lambda_at_min: best.lambda_star,
            b_min: best.b_at_star,
        })
    }
}

/// Scans `window` and refines candidates in increasing λ until one reaches
/// perfect transfer. Also returns the scan it was found from.
pub fn smallest_perfect_lambda(
    target: &TuneTarget,
    window: (f64, f64),
    cfg: &TunerConfig,
) -> Result<(PerfectLambda, SweepCurve)> {
    let curve = scan_b(target, window, cfg.scan_step, cfg)?;
    let p = perfect_lambda_from_scan(target, &curve, window, cfg)?;
    Ok((p, curve))
}

/// Refines the candidates of an existing scan in increasing λ. The error
/// carries the best minimum reached when none is perfect.
pub fn perfect_lambda_from_scan(
    target: &TuneTarget,
    curve: &SweepCurve,
    window: (f64, f64),
    cfg: &TunerConfig,
) -> Result<PerfectLambda> {
    let mut best_miss: Option<PerfectLambda> = None;
    for &bracket in &curve.candidates {
        match find_perfect_lambda(target, bracket, cfg) {
            Ok(p) => return Ok(p),
            Err(Error::NoPerfectTransfer {
                lambda_at_min, b_min, ..
            }) => {
                if best_miss.is_none_or(|m| b_min < m.b_at_star) {
                    best_miss = Some(PerfectLambda {
                        lambda_star: lambda_at_min,
                        b_at_star: b_min,
                        bracket,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    let fallback = curve.min_point();
    let (lambda_at_min, b_min) = match (best_miss, fallback) {
        (Some(m), _) => (m.lambda_star, m.b_at_star),
        (None, Some(p)) => (p.x, p.y),
        (None, None) => (f64::NAN, f64::NAN),
    };
    Err(Error::NoPerfectTransfer {
        lo: window.0,
        hi: window.1,
        lambda_at_min,
        b_min,
    })
}

/// `λ_min(t_f)`: the smallest perfect-transfer λ for each duration. Durations
/// without a zero in the window are reported as gaps.
pub fn lambda_min_vs_tf(w1: f64, w2: f64, gamma: f64, tf_values: &[f64], cfg: &TunerConfig) -> Result<SweepCurve> {
    if tf_values.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("durations must be positive".into()));
    }
    if tf_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("durations must be strictly increasing".into()));
    }
    let results: Vec<Result<PerfectLambda>> = tf_values
        .par_iter()
        .map(|&tf| {
            let target = TuneTarget { w1, w2, tf, gamma };
            smallest_perfect_lambda(&target, cfg.window, cfg).map(|(p, _)| p)
        })
        .collect();
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for (&tf, r) in tf_values.iter().zip(results) {
        match r {
            Ok(p) => points.push(CurvePoint { x: tf, y: p.lambda_star }),
            Err(e) => gaps.push(CurveGap {
                x: tf,
                reason: e.to_string(),
            }),
        }
    }
    Ok(SweepCurve {
        x_name: "tf".into(),
        y_name: "lambda_min".into(),
        w1,
        w2,
        gamma,
        fixed_tf: None,
        points,
        gaps,
        candidates: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx, (a, b)) =
            golden_section_minimize(|x| Ok((x - 1.3) * (x - 1.3)), 0.0, 4.0, 1e-8, 500).unwrap();
        assert!((x - 1.3).abs() < 1e-8);
        assert!(fx < 1e-15);
        assert!(b - a <= 1e-8);
    }

    #[test]
    fn near_zero_minima_brackets() {
        let pts: Vec<CurvePoint> = [0.5, 0.2, 0.01, 0.3, 0.04, 0.06]
            .iter()
            .enumerate()
            .map(|(i, &y)| CurvePoint { x: i as f64, y })
            .collect();
        let c = near_zero_minima(&pts, 1.0, 0.05);
        assert_eq!(c, vec![(1.0, 3.0), (3.0, 5.0)]);
        // nothing below threshold
        let flat: Vec<CurvePoint> = (0..5).map(|i| CurvePoint { x: i as f64, y: 1.0 }).collect();
        assert!(near_zero_minima(&flat, 1.0, 0.05).is_empty());
    }

    #[test]
    fn empty_tf_range_gives_empty_curve() {
        let c = lambda_min_vs_tf(1.0, 5.0, std::f64::consts::FRAC_PI_2, &[], &TunerConfig::default()).unwrap();
        assert!(c.points.is_empty() && c.gaps.is_empty());
    }

    #[test]
    fn scan_rejects_bad_step() {
        let t = TuneTarget::swap(1.0, 5.0, 5.0);
        assert!(scan_b(&t, (0.0, 1.0), 0.0, &TunerConfig::default()).is_err());
    }
}
