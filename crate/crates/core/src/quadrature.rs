//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by global bisection
/// of the interval with the largest error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("quadrature limits must be finite: [{a}, {b}]")));
    }
    if a > b {
        return integrate(f, b, a, tol).map(|r| QuadratureResult {
            value: -r.value,
            ..r
        });
    }
    let (v, e) = kronrod(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let total_err: f64 = intervals.iter().map(|iv| iv.3).sum();
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        if !total.is_finite() {
            return Err(Error::Numerical("quadrature integrand is not finite".into()));
        }
        if total_err <= tol {
            return Ok(QuadratureResult {
                value: total,
                abs_error: total_err,
                evaluations,
            });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature did not reach tolerance {tol:e} (estimate {total_err:e})"
            )));
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one interval");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval can no longer be split in floating point
            return Ok(QuadratureResult {
                value: total,
                abs_error: total_err,
                evaluations,
            });
        }
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Integrates over consecutive pieces `[p_0, p_1], [p_1, p_2], ...`, splitting the
/// tolerance evenly. Breakpoints must be sorted.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: f64,
) -> Result<QuadratureResult> {
    let pieces = points.len().saturating_sub(1).max(1);
    let mut acc = QuadratureResult {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
    };
    for w in points.windows(2) {
        let r = integrate(&f, w[0], w[1], tol / pieces as f64)?;
        acc.value += r.value;
        acc.abs_error += r.abs_error;
        acc.evaluations += r.evaluations;
    }
    Ok(acc)
}
