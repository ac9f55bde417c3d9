//! Univariate convex cost families and the tightened envelope through the origin.
//!
//! Three families are supported: powers `x^p` (`p > 1`), shifted exponentials
//! `b^x + a` (`b > 1`) and the piecewise envelope `g` that is linear from the
//! origin up to a breakpoint and follows its base function afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const BREAKPOINT_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

/// Validated operating range `0 < lo < hi` together with its ratio `k = lo / hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds", into = "RawBounds")]
pub struct BoundPair {
    lo: f64,
    hi: f64,
    ratio: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBounds {
    l: f64,
    u: f64,
}

impl TryFrom<RawBounds> for BoundPair {
    type Error = Error;

    fn try_from(raw: RawBounds) -> Result<Self> {
        BoundPair::new(raw.l, raw.u)
    }
}

impl From<BoundPair> for RawBounds {
    fn from(b: BoundPair) -> Self {
        RawBounds { l: b.lo, u: b.hi }
    }
}

impl BoundPair {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return domain(format!("bounds must be finite, got ({lo}, {hi})"));
        }
        if !(lo > 0.0 && hi > lo) {
            return domain(format!("bounds must satisfy 0 < l < u, got ({lo}, {hi})"));
        }
        Ok(BoundPair {
            lo,
            hi,
            ratio: lo / hi,
        })
    }

    /// Bounds `(k u, u)` for a ratio `k ∈ (0, 1)`.
    pub fn from_ratio(ratio: f64, hi: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return domain(format!("ratio must lie in (0, 1), got {ratio}"));
        }
        BoundPair::new(ratio * hi, hi)
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// The shape of a convex cost term.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    /// `x^p` with `p > 1`.
    Power { p: f64 },
    /// `b^x + a` with `b > 1`.
    Exponential { b: f64, a: f64 },
    /// `slope * x` on `[0, breakpoint]`, `base(x)` above it.
    PiecewiseEnvelope {
        base: Box<ConvexFunctionSpec>,
        breakpoint: f64,
        slope: f64,
    },
}

/// What a function family can do in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub evaluate: bool,
    pub derivative: bool,
    pub inverse: bool,
    pub integral: bool,
}

/// A univariate convex function restricted to `[domain_lo, domain_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ConvexFunctionSpec {
    kind: FunctionKind,
    domain_lo: f64,
    domain_hi: f64,
}

/// Secant line through `(l, f(l))` and `(u, f(u))`, written as `slope * x + intercept`.
///
/// Homogenized by the indicator it becomes the cap `y <= intercept * z + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Secant {
    pub slope: f64,
    pub intercept: f64,
}

impl Secant {
    #[inline]
    pub fn cap(&self, x: f64, z: f64) -> f64 {
        self.intercept * z + self.slope * x
    }
}

impl ConvexFunctionSpec {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return domain(format!("power family requires p > 1, got {p}"));
        }
        Ok(ConvexFunctionSpec {
            kind: FunctionKind::Power { p },
            domain_lo: 0.0,
            domain_hi: f64::INFINITY,
        })
    }

    pub fn exponential(b: f64, a: f64) -> Result<Self> {
        if !(b.is_finite() && b > 1.0) {
            return domain(format!("exponential family requires b > 1, got {b}"));
        }
        if !a.is_finite() {
            return domain(format!("exponential shift must be finite, got {a}"));
        }
        Ok(ConvexFunctionSpec {
            kind: FunctionKind::Exponential { b, a },
            domain_lo: 0.0,
            domain_hi: f64::INFINITY,
        })
    }

    /// Envelope of `base` that is linear from the origin to `breakpoint`.
    ///
    /// The slope is `base(breakpoint) / breakpoint`, so the pieces meet continuously.
    pub fn envelope(base: ConvexFunctionSpec, breakpoint: f64) -> Result<Self> {
        if !(breakpoint.is_finite() && breakpoint > 0.0) {
            return domain(format!("envelope breakpoint must be positive, got {breakpoint}"));
        }
        let slope = base.evaluate(breakpoint)? / breakpoint;
        if !(slope > 0.0) {
            return domain(format!(
                "envelope slope must be positive, base({breakpoint}) = {}",
                slope * breakpoint
            ));
        }
        let domain_hi = base.domain_hi;
        Ok(ConvexFunctionSpec {
            kind: FunctionKind::PiecewiseEnvelope {
                base: Box::new(base),
                breakpoint,
                slope,
            },
            domain_lo: 0.0,
            domain_hi,
        })
    }

    /// Restricts the domain. The new interval must lie inside the natural domain of the family.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) || lo.is_nan() || hi.is_nan() {
            return domain(format!("invalid domain [{lo}, {hi}]"));
        }
        self.domain_lo = lo;
        self.domain_hi = hi;
        Ok(self)
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.domain_lo, self.domain_hi)
    }

    /// Exponent `p` when this is a plain power.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            FunctionKind::Power { p } => Some(p),
            _ => None,
        }
    }

    pub fn capabilities(&self) -> Capabilities {
        Capabilities {
            evaluate: true,
            derivative: true,
            inverse: true,
            integral: true,
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < self.domain_lo || x > self.domain_hi {
            return domain(format!(
                "x = {x} outside [{}, {}]",
                self.domain_lo, self.domain_hi
            ));
        }
        Ok(())
    }

    pub(crate) fn check_bounds(&self, bounds: &BoundPair) -> Result<()> {
        self.check_domain(bounds.lo())?;
        self.check_domain(bounds.hi())
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.value(x))
    }

    /// Evaluation without the domain check. Callers guarantee `x >= 0`.
    #[inline]
    pub(crate) fn value(&self, x: f64) -> f64 {
        match &self.kind {
            FunctionKind::Power { p } => x.powf(*p),
            FunctionKind::Exponential { b, a } => b.powf(x) + a,
            FunctionKind::PiecewiseEnvelope {
                base,
                breakpoint,
                slope,
            } => {
                if x <= *breakpoint {
                    slope * x
                } else {
                    base.value(x)
                }
            }
        }
    }

    /// Right derivative `∂₊f(x)`, exact for every family.
    pub fn right_derivative(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.derivative_unchecked(x))
    }

    fn derivative_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            FunctionKind::Power { p } => {
                if x == 0.0 {
                    0.0
                } else {
                    p * x.powf(p - 1.0)
                }
            }
            FunctionKind::Exponential { b, .. } => b.powf(x) * b.ln(),
            FunctionKind::PiecewiseEnvelope {
                base,
                breakpoint,
                slope,
            } => {
                if x < *breakpoint {
                    *slope
                } else {
                    base.derivative_unchecked(x)
                }
            }
        }
    }

    /// Solves `f(x) = y` on the domain. Every supported family is increasing there.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() {
            return domain("cannot invert NaN");
        }
        let lo_val = self.value(self.domain_lo);
        let hi_val = if self.domain_hi.is_finite() {
            self.value(self.domain_hi)
        } else {
            f64::INFINITY
        };
        if y < lo_val || y > hi_val {
            return domain(format!("y = {y} outside the range [{lo_val}, {hi_val}]"));
        }
        let x = match &self.kind {
            FunctionKind::Power { p } => y.powf(1.0 / p),
            FunctionKind::Exponential { b, a } => {
                let shifted = y - a;
                if shifted <= 0.0 {
                    return Err(Error::Capability(format!(
                        "b^x + a has no preimage for y = {y} <= a"
                    )));
                }
                shifted.ln() / b.ln()
            }
            FunctionKind::PiecewiseEnvelope {
                base,
                breakpoint,
                slope,
            } => {
                if y <= slope * breakpoint {
                    y / slope
                } else {
                    base.inverse(y)?
                }
            }
        };
        Ok(x.clamp(self.domain_lo, self.domain_hi))
    }

    /// `∫_lo^hi f(x) dx`.
    pub fn definite_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo > hi {
            return self.definite_integral(hi, lo).map(|v| -v);
        }
        self.check_domain(lo)?;
        self.check_domain(hi)?;
        Ok(self.integral_unchecked(lo, hi))
    }

    fn integral_unchecked(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            FunctionKind::Power { p } => {
                (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / (p + 1.0)
            }
            FunctionKind::Exponential { b, a } => {
                let ln_b = b.ln();
                // b^hi - b^lo = b^lo (e^{(hi-lo) ln b} - 1)
                b.powf(lo) * ((hi - lo) * ln_b).exp_m1() / ln_b + a * (hi - lo)
            }
            FunctionKind::PiecewiseEnvelope {
                base,
                breakpoint,
                slope,
            } => {
                let mid = breakpoint.clamp(lo, hi);
                let linear = 0.5 * slope * (mid * mid - lo * lo);
                linear + base.integral_unchecked(mid, hi)
            }
        }
    }

    /// `∫_lo^hi x f(x) dx` in closed form where the family admits one.
    pub(crate) fn first_moment(&self, lo: f64, hi: f64) -> Option<f64> {
        match &self.kind {
            FunctionKind::Power { p } => Some((hi.powf(p + 2.0) - lo.powf(p + 2.0)) / (p + 2.0)),
            FunctionKind::Exponential { b, a } => {
                let ln_b = b.ln();
                let anti = |x: f64| b.powf(x) * (x / ln_b - 1.0 / (ln_b * ln_b));
                Some(anti(hi) - anti(lo) + 0.5 * a * (hi * hi - lo * lo))
            }
            FunctionKind::PiecewiseEnvelope { .. } => None,
        }
    }

    pub fn secant(&self, bounds: &BoundPair) -> Result<Secant> {
        self.check_bounds(bounds)?;
        Ok(self.secant_unchecked(bounds))
    }

    pub(crate) fn secant_unchecked(&self, bounds: &BoundPair) -> Secant {
        let (l, u) = (bounds.lo(), bounds.hi());
        let (fl, fu) = (self.value(l), self.value(u));
        let slope = (fu - fl) / (u - l);
        Secant {
            slope,
            intercept: fl - slope * l,
        }
    }

    /// Builds the convex envelope on `[0, u]` of the function that is `0` at the
    /// origin and `f` on `[l, u]`.
    ///
    /// The breakpoint is the smallest `a ∈ [l, u]` with `f(a) <= a ∂₊f(a)`: the
    /// tangent point of the ray from the origin, clamped to the operating range.
    pub fn build_envelope(&self, bounds: &BoundPair) -> Result<ConvexFunctionSpec> {
        self.check_bounds(bounds)?;
        let (l, u) = (bounds.lo(), bounds.hi());
        if !(self.value(l) > 0.0 && self.value(u) > 0.0) {
            return domain("envelope construction requires f > 0 on [l, u]");
        }
        // h(x) = x f'(x) - f(x) is nondecreasing for convex f on x > 0.
        let h = |x: f64| x * self.derivative_unchecked(x) - self.value(x);
        let breakpoint = if h(l) >= 0.0 {
            l
        } else if h(u) <= 0.0 {
            u
        } else {
            let (mut lo, mut hi) = (l, u);
            for _ in 0..MAX_BISECTIONS {
                if hi - lo <= BREAKPOINT_TOL * hi.max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if h(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        ConvexFunctionSpec::envelope(self.clone(), breakpoint)
    }
}

/// Three-secant inequality for `a < x < b`, with a relative tolerance for rounding.
pub fn three_secant_holds(f: &ConvexFunctionSpec, a: f64, x: f64, b: f64) -> Result<bool> {
    if !(a < x && x < b) {
        return domain(format!("three-secant needs a < x < b, got ({a}, {x}, {b})"));
    }
    let (fa, fx, fb) = (f.evaluate(a)?, f.evaluate(x)?, f.evaluate(b)?);
    let left = (fx - fa) / (x - a);
    let mid = (fb - fa) / (b - a);
    let right = (fb - fx) / (b - x);
    let tol = 1e-9 * (left.abs() + mid.abs() + right.abs()).max(1.0);
    Ok(left <= mid + tol && mid <= right + tol)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawKind {
    Power {
        p: f64,
    },
    Exp {
        b: f64,
        #[serde(default)]
        a: f64,
    },
    Envelope {
        base: Box<RawSpec>,
        breakpoint: f64,
        slope: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(flatten)]
    kind: RawKind,
    #[serde(default, skip_serializing_if = "is_zero")]
    domain_lo: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain_hi: Option<f64>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl TryFrom<RawSpec> for ConvexFunctionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let spec = match raw.kind {
            RawKind::Power { p } => ConvexFunctionSpec::power(p)?,
            RawKind::Exp { b, a } => ConvexFunctionSpec::exponential(b, a)?,
            RawKind::Envelope {
                base,
                breakpoint,
                slope,
            } => {
                let base = ConvexFunctionSpec::try_from(*base)?;
                let env = ConvexFunctionSpec::envelope(base, breakpoint)?;
                if let FunctionKind::PiecewiseEnvelope { slope: s, .. } = env.kind {
                    if (s - slope).abs() > 1e-9 * s.abs().max(1.0) {
                        return Err(Error::Input(format!(
                            "envelope slope {slope} does not match base(a)/a = {s}"
                        )));
                    }
                }
                env
            }
        };
        spec.with_domain(raw.domain_lo, raw.domain_hi.unwrap_or(f64::INFINITY))
    }
}

impl From<ConvexFunctionSpec> for RawSpec {
    fn from(spec: ConvexFunctionSpec) -> Self {
        let kind = match spec.kind {
            FunctionKind::Power { p } => RawKind::Power { p },
            FunctionKind::Exponential { b, a } => RawKind::Exp { b, a },
            FunctionKind::PiecewiseEnvelope {
                base,
                breakpoint,
                slope,
            } => RawKind::Envelope {
                base: Box::new(RawSpec::from(*base)),
                breakpoint,
                slope,
            },
        };
        RawSpec {
            kind,
            domain_lo: spec.domain_lo,
            domain_hi: spec.domain_hi.is_finite().then_some(spec.domain_hi),
        }
    }
}
