//! Exact volumes of the relaxation bodies in `(x, y, z)` space.
//!
//! All power-family formulas are evaluated as `u^{p+1}` times an expression in
//! `k = l / u`, which keeps the `k -> 1` regime free of large cancelling terms.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::function::{BoundPair, ConvexFunctionSpec, FunctionKind};
use crate::quadrature;

const Q_SLACK: f64 = 1e-12;
const THRESHOLD_TOL: f64 = 1e-13;
const THRESHOLD_MAX_ITER: usize = 200;

/// Lower bound on `y` that defines a relaxation body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationKind {
    /// `y >= z f(x / z)`, closed at the origin.
    Perspective,
    /// `y >= f(x)`.
    Naive,
    /// `y >= g(x)` with `g` the envelope through the origin.
    NaivePiecewise,
    /// `y z^q >= x^p` for the power family.
    PowerInterpolated { q: f64 },
}

/// Upper bound on `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cap {
    /// `y <= (f(l) - m l) z + m x` with `m` the secant slope.
    Secant,
    /// `y <= z f(u)`.
    SimpleBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSpec {
    pub kind: RelaxationKind,
    pub cap: Cap,
}

impl RelaxationSpec {
    pub const fn new(kind: RelaxationKind, cap: Cap) -> Self {
        RelaxationSpec { kind, cap }
    }

    pub const fn perspective(cap: Cap) -> Self {
        Self::new(RelaxationKind::Perspective, cap)
    }

    pub const fn naive(cap: Cap) -> Self {
        Self::new(RelaxationKind::Naive, cap)
    }

    pub const fn piecewise(cap: Cap) -> Self {
        Self::new(RelaxationKind::NaivePiecewise, cap)
    }

    pub const fn power(q: f64, cap: Cap) -> Self {
        Self::new(RelaxationKind::PowerInterpolated { q }, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl VolumeMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            VolumeMethod::ClosedForm => "closed_form",
            VolumeMethod::Quadrature => "quadrature",
            VolumeMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// A three-dimensional volume with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub value: f64,
    pub method: VolumeMethod,
    pub abs_error: f64,
}

impl VolumeReport {
    fn exact(value: f64) -> Self {
        VolumeReport {
            value: value.max(0.0),
            method: VolumeMethod::ClosedForm,
            abs_error: 0.0,
        }
    }

    fn shifted(self, delta: f64) -> Self {
        VolumeReport {
            value: (self.value + delta).max(0.0),
            ..self
        }
    }
}

/// Relative volume reduction when the `q1` body is replaced by the `q2` body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRatio {
    pub ratio: f64,
    pub lower_bound: f64,
}

fn check_nonnegative(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<()> {
    f.check_bounds(bounds)?;
    // every supported family is nondecreasing, so the endpoints decide the sign
    let fl = f.value(bounds.lo());
    if !(fl >= 0.0) {
        return domain(format!("f must be nonnegative on [l, u], f(l) = {fl}"));
    }
    Ok(())
}

fn check_through_origin(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<()> {
    f.check_bounds(bounds)?;
    let (lo, _) = f.domain();
    if lo > 0.0 {
        return domain("the naive relaxation needs f defined on all of [0, u]");
    }
    let f0 = f.value(0.0);
    let scale = f.value(bounds.hi()).abs().max(1.0);
    if f0.abs() > 1e-12 * scale {
        return domain(format!("the naive relaxation needs f(0) = 0, got {f0}"));
    }
    Ok(())
}

fn check_power(p: f64, q: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return domain(format!("power family requires p > 1, got {p}"));
    }
    let top = p - 1.0;
    if !(q >= 0.0 && q <= top + Q_SLACK * p) {
        return domain(format!("lifting exponent q = {q} outside [0, {top}]"));
    }
    Ok(q.min(top))
}

fn check_ratio(k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        return domain(format!("ratio k must lie in (0, 1), got {k}"));
    }
    Ok(())
}

/// `1 - k^e` without cancellation for `k` near one.
#[inline]
fn one_minus_pow(k: f64, e: f64) -> f64 {
    -(e * k.ln()).exp_m1()
}

/// Volume of the perspective (convex hull) relaxation with secant cap:
/// `(u - l)(f(u) + f(l)) / 6 - (1/3) ∫_l^u f`.
pub fn vol_perspective(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<VolumeReport> {
    check_nonnegative(f, bounds)?;
    let (l, u) = (bounds.lo(), bounds.hi());
    let integral = f.definite_integral(l, u)?;
    let value = (u - l) * (f.value(u) + f.value(l)) / 6.0 - integral / 3.0;
    Ok(VolumeReport::exact(value))
}

/// Volume of the simplex `Δ_f` cut off by the secant cap: `(f(u) - f(l))(u - l) / 6`.
pub fn vol_delta(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<VolumeReport> {
    check_nonnegative(f, bounds)?;
    let (l, u) = (bounds.lo(), bounds.hi());
    Ok(VolumeReport::exact((f.value(u) - f.value(l)) * (u - l) / 6.0))
}

/// Volume of the naive relaxation with the simple cap `y <= z f(u)`.
///
/// Closed form for powers and exponentials, quadrature over `y` otherwise.
pub fn vol_naive_simplebound(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<VolumeReport> {
    check_through_origin(f, bounds)?;
    if let Some(p) = f.power_exponent() {
        return vol_power_family(p, 0.0, bounds, Cap::SimpleBound);
    }
    match naive_simplebound_closed_form(f, bounds) {
        Some(v) => Ok(VolumeReport::exact(v)),
        None => naive_simplebound_quadrature(f, bounds),
    }
}

/// Volume of the naive relaxation with the secant cap.
pub fn vol_naive_capped(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<VolumeReport> {
    let simple = vol_naive_simplebound(f, bounds)?;
    let delta = vol_delta(f, bounds)?;
    Ok(simple.shifted(-delta.value))
}

// Slicing at fixed y with X = f^{-1}(y), the area of the (x, z) slice is
//   (u - l)/2 (X^2/u^2 - y^2/F^2) + X^2 (u - l)^2 / (2 l u^2)            for y <= f(l)
//   (u - l)/2 (X^2/u^2 - y^2/F^2) + X (1 - X/u) - l/2 (1 - X^2/u^2)       for y >= f(l)
// Integrals of X and X^2 over y become moments of f after substituting y = f(x).
fn naive_simplebound_closed_form(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Option<f64> {
    let (l, u) = (bounds.lo(), bounds.hi());
    let (fl, fu) = (f.value(l), f.value(u));
    let m1_low = f.first_moment(0.0, l)?;
    let m1_high = f.first_moment(l, u)?;
    let int_high = f.definite_integral(l, u).ok()?;

    // ∫ X^2 dy over [0, f(l)], [f(l), f(u)], and ∫ X dy over [f(l), f(u)]
    let sq_low = l * l * fl - 2.0 * m1_low;
    let sq_high = u * u * fu - l * l * fl - 2.0 * m1_high;
    let lin_high = u * fu - l * fl - int_high;

    let w = u - l;
    let wedge = w / (2.0 * u * u) * (sq_low + sq_high) - w * fu / 6.0;
    let below = w * w / (2.0 * l * u * u) * sq_low;
    let above = lin_high - (1.0 / u - l / (2.0 * u * u)) * sq_high - 0.5 * l * (fu - fl);
    Some(wedge + below + above)
}

/// Slice-area integral of the simple-capped naive body, evaluated by adaptive
/// quadrature in `y` with the inner `z` integrals in closed form.
pub fn naive_simplebound_quadrature(
    f: &ConvexFunctionSpec,
    bounds: &BoundPair,
) -> Result<VolumeReport> {
    check_through_origin(f, bounds)?;
    let (l, u) = (bounds.lo(), bounds.hi());
    let (fl, fu) = (f.value(l), f.value(u));
    if !(fu > 0.0) {
        return domain("f(u) must be positive");
    }
    let w = u - l;
    let area = |y: f64| -> f64 {
        let x = match f.inverse(y) {
            Ok(x) => x.min(u),
            Err(_) => return f64::NAN,
        };
        let wedge = 0.5 * w * ((x / u).powi(2) - (y / fu).powi(2));
        let rest = if y <= fl {
            x * x * w * w / (2.0 * l * u * u)
        } else {
            x * (1.0 - x / u) - 0.5 * l * (1.0 - (x / u).powi(2))
        };
        wedge + rest
    };
    let mut points = vec![0.0, fl, fu];
    if let FunctionKind::PiecewiseEnvelope {
        breakpoint, slope, ..
    } = f.kind()
    {
        let kink = slope * breakpoint;
        if kink > 0.0 && kink < fu && kink != fl {
            points.push(kink);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let tol = 1e-12 * (u * fu).max(1.0);
    let r = quadrature::integrate_pieces(area, &points, tol)?;
    Ok(VolumeReport {
        value: r.value.max(0.0),
        method: VolumeMethod::Quadrature,
        abs_error: r.abs_error,
    })
}

/// Volume of the `y z^q >= x^p` body with either cap.
pub fn vol_power_family(p: f64, q: f64, bounds: &BoundPair, cap: Cap) -> Result<VolumeReport> {
    let q = check_power(p, q)?;
    let k = bounds.ratio();
    let scale = bounds.hi().powf(p + 1.0);
    let d = p - q + 2.0;
    let simple = ((p * p - p * q + 3.0 * p - q - 1.0) + 3.0 * k.powf(p + 1.0)
        - (p + 1.0) * d * k)
        / (3.0 * (p + 1.0) * d);
    let unit = match cap {
        Cap::SimpleBound => simple,
        Cap::Secant => simple - one_minus_pow(k, p) * (1.0 - k) / 6.0,
    };
    Ok(VolumeReport::exact(scale * unit))
}

/// `vol(q1 body) - vol(q2 body)` for `q1 <= q2`; independent of the cap.
pub fn vol_diff(p: f64, q1: f64, q2: f64, bounds: &BoundPair) -> Result<f64> {
    let q1 = check_power(p, q1)?;
    let q2 = check_power(p, q2)?;
    if q1 > q2 {
        return domain(format!("vol_diff needs q1 <= q2, got q1 = {q1}, q2 = {q2}"));
    }
    let k = bounds.ratio();
    let scale = bounds.hi().powf(p + 1.0);
    Ok(scale * (q2 - q1) * one_minus_pow(k, p + 1.0)
        / ((p + 1.0) * (p - q1 + 2.0) * (p - q2 + 2.0)))
}

/// Fraction of the `q1` volume removed by moving to `q2`, and its `k`-free lower bound.
pub fn vol_ratio(p: f64, q1: f64, q2: f64, k: f64) -> Result<VolumeRatio> {
    let q1 = check_power(p, q1)?;
    let q2 = check_power(p, q2)?;
    check_ratio(k)?;
    if !(q1 < q2) {
        return domain(format!("vol_ratio needs q1 < q2, got q1 = {q1}, q2 = {q2}"));
    }
    let one_minus_k = 1.0 - k;
    let kp = k.powf(p);
    let denom_k = one_minus_k * (1.0 + kp);
    let lead = one_minus_pow(k, p + 1.0) / denom_k;
    let tail = (1.0 + k) * one_minus_pow(k, p) / denom_k;
    let d2 = p - q2 + 2.0;
    let base = p * p + 3.0 * p - q1 * (p + 1.0);
    let ratio = 6.0 * (q2 - q1) * lead / (d2 * (base - 1.0) - 3.0 * d2 * tail);
    let lower_bound = 6.0 * (q2 - q1) / (d2 * (base - 4.0));
    Ok(VolumeRatio { ratio, lower_bound })
}

/// Share of the naive-to-perspective gap closed by the piecewise envelope for `x^p`:
/// `(p + 1)(1 - k) / (k^{-(p+1)} - 1)`.
pub fn piecewise_gain_ratio(p: f64, k: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return domain(format!("power family requires p > 1, got {p}"));
    }
    check_ratio(k)?;
    Ok(gain_ratio(p, k))
}

#[inline]
fn gain_ratio(p: f64, k: f64) -> f64 {
    (p + 1.0) * (1.0 - k) * k.powf(p + 1.0) / one_minus_pow(k, p + 1.0)
}

/// The ratio `k(p, φ)` above which the envelope closes more than `φ` of the gap.
///
/// The gain ratio is strictly increasing in `k`, so bisection on its residual
/// brackets the unique root.
pub fn threshold_k(p: f64, phi: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return domain(format!("power family requires p > 1, got {p}"));
    }
    if !(phi > 0.0 && phi < 1.0) {
        return domain(format!("phi must lie in (0, 1), got {phi}"));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..THRESHOLD_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= THRESHOLD_TOL {
            return Ok(mid);
        }
        if gain_ratio(p, mid) < phi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "threshold search for p = {p}, phi = {phi} did not converge"
    )))
}

/// Volume of the naive relaxation applied to the envelope `g` of `f`, with secant cap.
///
/// The body keeps the secant of `f`, so the cap removes exactly `Δ_f` from the
/// simple-capped body of `g`.
pub fn vol_piecewise(f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<VolumeReport> {
    if let Some(p) = f.power_exponent() {
        f.check_bounds(bounds)?;
        let naive = vol_power_family(p, 0.0, bounds, Cap::Secant)?.value;
        let hull = vol_power_family(p, p - 1.0, bounds, Cap::Secant)?.value;
        let share = piecewise_gain_ratio(p, bounds.ratio())?;
        return Ok(VolumeReport::exact(naive - share * (naive - hull)));
    }
    let g = f.build_envelope(bounds)?;
    let simple = vol_naive_simplebound(&g, bounds)?;
    let delta = vol_delta(f, bounds)?;
    Ok(simple.shifted(-delta.value))
}

/// Limit statistic `u (vol Š⁰ - vol Š*) / vol Š⁰` for `f(x) = b^x - 1` with `l = k u`.
///
/// All terms are divided by `b^u` before evaluation, so large `u ln b` does not overflow.
pub fn exp_asymptotic_ratio(b: f64, k: f64, u: f64) -> Result<f64> {
    if !(b.is_finite() && b > 1.0) {
        return domain(format!("exponential family requires b > 1, got {b}"));
    }
    check_ratio(k)?;
    if !(u.is_finite() && u > 0.0) {
        return domain(format!("u must be positive and finite, got {u}"));
    }
    let ln_b = b.ln();
    let l = k * u;
    let s = (-ln_b * (u - l)).exp(); // b^{l-u}
    let t = (-ln_b * u).exp(); // b^{-u}
    let tail = ((1.0 - t) / u - (s - t) / l) / (ln_b * ln_b);
    let naive = (u - l) * (1.0 + s + t) / 6.0 - tail;
    let gap = (u - l) * t / 6.0 + (1.0 - s) / (3.0 * ln_b) - tail;
    let ratio = u * gap / naive;
    if !ratio.is_finite() {
        return Err(Error::Numerical(format!(
            "asymptotic ratio not finite for b = {b}, k = {k}, u = {u}"
        )));
    }
    Ok(ratio)
}

/// Volume of any supported body, dispatched on the relaxation kind and cap.
pub fn volume(
    relax: &RelaxationSpec,
    f: &ConvexFunctionSpec,
    bounds: &BoundPair,
) -> Result<VolumeReport> {
    match (relax.kind, relax.cap) {
        (RelaxationKind::Perspective, Cap::Secant) => vol_perspective(f, bounds),
        (RelaxationKind::Perspective, Cap::SimpleBound) => {
            let delta = vol_delta(f, bounds)?.value;
            Ok(vol_perspective(f, bounds)?.shifted(delta))
        }
        (RelaxationKind::Naive, Cap::Secant) => vol_naive_capped(f, bounds),
        (RelaxationKind::Naive, Cap::SimpleBound) => vol_naive_simplebound(f, bounds),
        (RelaxationKind::NaivePiecewise, Cap::Secant) => vol_piecewise(f, bounds),
        (RelaxationKind::NaivePiecewise, Cap::SimpleBound) => {
            let delta = vol_delta(f, bounds)?.value;
            Ok(vol_piecewise(f, bounds)?.shifted(delta))
        }
        (RelaxationKind::PowerInterpolated { q }, cap) => {
            let p = f.power_exponent().ok_or_else(|| {
                Error::Capability("the q-interpolated family needs f(x) = x^p".into())
            })?;
            f.check_bounds(bounds)?;
            vol_power_family(p, q, bounds, cap)
        }
    }
}
