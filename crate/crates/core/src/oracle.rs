//! Membership predicates, Monte Carlo volume estimates and constraint
//! qualification certificates for the relaxation bodies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::function::{BoundPair, ConvexFunctionSpec, Secant};
use crate::volume::{Cap, RelaxationKind, RelaxationSpec};

/// Samples per independent random stream.
const CHUNK: usize = 1 << 16;
const MIN_SAMPLES: usize = 10_000;
const NESTING_SEED: u64 = 0x6e65_7374;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn midpoint(&self, other: &Point3) -> Point3 {
        Point3::new(
            0.5 * (self.x + other.x),
            0.5 * (self.y + other.y),
            0.5 * (self.z + other.z),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub volume: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
enum Lower {
    Perspective(ConvexFunctionSpec),
    Naive(ConvexFunctionSpec),
    Power { p: f64, q: f64 },
}

/// A relaxation body with everything needed for fast membership tests.
#[derive(Debug, Clone)]
pub struct Body {
    lower: Lower,
    cap: Cap,
    secant: Secant,
    l: f64,
    u: f64,
    fu: f64,
}

impl Body {
    pub fn new(relax: &RelaxationSpec, f: &ConvexFunctionSpec, bounds: &BoundPair) -> Result<Body> {
        let secant = f.secant(bounds)?;
        let lower = match relax.kind {
            RelaxationKind::Perspective => Lower::Perspective(f.clone()),
            RelaxationKind::Naive => Lower::Naive(f.clone()),
            RelaxationKind::NaivePiecewise => Lower::Naive(f.build_envelope(bounds)?),
            RelaxationKind::PowerInterpolated { q } => {
                let p = f.power_exponent().ok_or_else(|| {
                    Error::Capability("the q-interpolated family needs f(x) = x^p".into())
                })?;
                if !(q >= 0.0 && q <= p - 1.0 + 1e-12) {
                    return domain(format!("lifting exponent q = {q} outside [0, {}]", p - 1.0));
                }
                Lower::Power { p, q }
            }
        };
        Ok(Body {
            lower,
            cap: relax.cap,
            secant,
            l: bounds.lo(),
            u: bounds.hi(),
            fu: f.value(bounds.hi()),
        })
    }

    /// Largest `y` attained on the body, used as the sampling box height.
    pub fn max_y(&self) -> f64 {
        self.fu
    }

    pub fn contains(&self, pt: &Point3) -> bool {
        let Point3 { x, y, z } = *pt;
        if !pt.is_finite() || !(0.0..=1.0).contains(&z) || y < 0.0 {
            return false;
        }
        if x < self.l * z || x > self.u * z {
            return false;
        }
        let cap = match self.cap {
            Cap::Secant => self.secant.cap(x, z),
            Cap::SimpleBound => z * self.fu,
        };
        if y > cap {
            return false;
        }
        match &self.lower {
            // at z = 0 the box constraints force x = 0 and the closure value is 0
            Lower::Perspective(f) => z == 0.0 || y >= z * f.value(x / z),
            Lower::Naive(f) => y >= f.value(x),
            // 0^0 = 1 for the q = 0 member
            Lower::Power { p, q } => {
                let zq = if *q == 0.0 { 1.0 } else { z.powf(*q) };
                y * zq >= x.powf(*p)
            }
        }
    }
}

/// Membership in a relaxation body. Incompatible combinations contain nothing.
pub fn contains(
    relax: &RelaxationSpec,
    f: &ConvexFunctionSpec,
    bounds: &BoundPair,
    pt: &Point3,
) -> bool {
    Body::new(relax, f, bounds).is_ok_and(|b| b.contains(pt))
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunk_sizes(samples: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(move |c| (c, CHUNK.min(samples - c * CHUNK)))
}

#[inline]
fn draw(rng: &mut ChaCha8Rng, u: f64, h: f64) -> Point3 {
    let x = rng.random::<f64>() * u;
    let y = rng.random::<f64>() * h;
    let z = rng.random::<f64>();
    Point3::new(x, y, z)
}

/// Rejection-sampling volume estimate over `[0, u] x [0, f(u)] x [0, 1]`.
///
/// Each chunk of samples has its own stream of the seeded generator, so the
/// estimate does not depend on how rayon schedules the chunks.
pub fn mc_volume(
    relax: &RelaxationSpec,
    f: &ConvexFunctionSpec,
    bounds: &BoundPair,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples < MIN_SAMPLES {
        return domain(format!("Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"));
    }
    let body = Body::new(relax, f, bounds)?;
    let (u, h) = (bounds.hi(), body.max_y());
    if !(h > 0.0 && h.is_finite()) {
        return domain(format!("f(u) must be positive and finite, got {h}"));
    }
    let hits: u64 = chunk_sizes(samples)
        .map(|(c, n)| {
            let mut rng = chunk_rng(seed, c);
            (0..n).filter(|_| body.contains(&draw(&mut rng, u, h))).count() as u64
        })
        .sum();
    let n = samples as f64;
    let frac = hits as f64 / n;
    let box_volume = u * h;
    Ok(McEstimate {
        volume: box_volume * frac,
        std_error: box_volume * (frac * (1.0 - frac) / n).sqrt(),
        samples: samples as u64,
        seed,
    })
}

/// Uniform points from a body, drawn by rejection from its bounding box.
/// Returns at most `count` points after `max_draws` box samples.
pub fn sample_body(
    body: &Body,
    bounds: &BoundPair,
    count: usize,
    max_draws: usize,
    seed: u64,
) -> Vec<Point3> {
    let (u, h) = (bounds.hi(), body.max_y());
    let mut rng = chunk_rng(seed, 0);
    let mut out = Vec::with_capacity(count);
    for _ in 0..max_draws {
        if out.len() == count {
            break;
        }
        let pt = draw(&mut rng, u, h);
        if body.contains(&pt) {
            out.push(pt);
        }
    }
    out
}

/// Number of box samples lying in `inner` but not in `outer`.
pub fn containment_violations(
    inner: &Body,
    outer: &Body,
    bounds: &BoundPair,
    samples: usize,
    seed: u64,
) -> u64 {
    let (u, h) = (bounds.hi(), inner.max_y().max(outer.max_y()));
    chunk_sizes(samples)
        .map(|(c, n)| {
            let mut rng = chunk_rng(seed, c);
            (0..n)
                .filter(|_| {
                    let pt = draw(&mut rng, u, h);
                    inner.contains(&pt) && !outer.contains(&pt)
                })
                .count() as u64
        })
        .sum()
}

/// Checks that the `y z^q >= x^p` bodies shrink as `q` grows, by sampling.
pub fn verify_nesting(p: f64, q_list: &[f64], bounds: &BoundPair, samples: usize) -> Result<bool> {
    if q_list.windows(2).any(|w| !(w[0] <= w[1])) {
        return domain("q_list must be sorted ascending");
    }
    let f = ConvexFunctionSpec::power(p)?;
    let bodies = q_list
        .iter()
        .map(|&q| Body::new(&RelaxationSpec::power(q, Cap::Secant), &f, bounds))
        .collect::<Result<Vec<_>>>()?;
    for (j, tight) in bodies.iter().enumerate().skip(1) {
        for (i, loose) in bodies[..j].iter().enumerate() {
            let seed = NESTING_SEED ^ ((j as u64) << 32 | i as u64);
            if containment_violations(tight, loose, bounds, samples, seed) > 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Exponent vector of the power-cone description
/// `y^{1/p} z^{q/p} w^{1-(q+1)/p} >= |x|`, which recovers `y z^q >= x^p` on `w = 1`.
pub fn power_cone_form(p: f64, q: f64, u: f64) -> Result<[f64; 3]> {
    if !(p.is_finite() && p > 1.0) {
        return domain(format!("power family requires p > 1, got {p}"));
    }
    if !(u.is_finite() && u > 0.0) {
        return domain(format!("u must be positive, got {u}"));
    }
    if q > p - 1.0 + 1e-12 {
        return domain(format!("lifting exponent q = {q} exceeds p - 1 = {}", p - 1.0));
    }
    if !(q >= 1.0) {
        return Err(Error::Capability(format!(
            "power-cone form needs q >= 1, got {q}"
        )));
    }
    let third = (1.0 - (q + 1.0) / p).max(0.0);
    Ok([1.0 / p, q / p, third])
}

/// Membership `prod w_j^{alpha_j} >= |x|` in the three-dimensional power cone.
pub fn power_cone_contains(alpha: &[f64; 3], w: &[f64; 3], x: f64) -> bool {
    if w.iter().any(|&v| v < 0.0) {
        return false;
    }
    let prod: f64 = alpha
        .iter()
        .zip(w)
        .map(|(&a, &v)| if a == 0.0 { 1.0 } else { v.powf(a) })
        .product();
    prod >= x.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfcqCertificate {
    pub direction: [f64; 3],
    pub strict: bool,
}

/// The explicit direction certifying MFCQ for the naive body at the origin.
pub fn mfcq_certificate(
    f: &ConvexFunctionSpec,
    bounds: &BoundPair,
    alpha: f64,
) -> Result<MfcqCertificate> {
    let (l, u) = (bounds.lo(), bounds.hi());
    let floor = 1.0 + l / u;
    if !(alpha > floor && alpha < 2.0) {
        return domain(format!("alpha must lie in ({floor}, 2), got {alpha}"));
    }
    f.check_bounds(bounds)?;
    let f0 = f.evaluate(0.0)?;
    if f0.abs() > 1e-12 {
        return domain(format!("MFCQ certificate needs f(0) = 0, got {f0}"));
    }
    let secant = f.secant(bounds)?;
    let m = secant.slope;
    let fl = f.value(l);
    let dy = m - (u + l) / (alpha * u) * (m - fl / l);
    let dz = (u + l) / (2.0 * u * l);
    let d = [1.0, dy, dz];
    let slope0 = f.right_derivative(0.0)?;
    let cap_dot = -m * d[0] + d[1] - secant.intercept * d[2];
    let strict = u * dz > 1.0 && 1.0 > l * dz && slope0 - dy < 0.0 && cap_dot < 0.0;
    Ok(MfcqCertificate {
        direction: d,
        strict,
    })
}

/// Gradient of `x^p - y z` at `pt`; it vanishes at the origin for `p > 1`,
/// so no MFCQ direction exists there for the perspective body.
pub fn perspective_gradient(p: f64, pt: &Point3) -> [f64; 3] {
    let dx = if pt.x == 0.0 { 0.0 } else { p * pt.x.powf(p - 1.0) };
    [dx, -pt.z, -pt.y]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(l: f64, u: f64) -> BoundPair {
        BoundPair::new(l, u).unwrap()
    }

    fn sq() -> ConvexFunctionSpec {
        ConvexFunctionSpec::power(2.0).unwrap()
    }

    #[test]
    fn membership_examples() {
        let bounds = b(1.0, 2.0);
        let origin = Point3::new(0.0, 0.0, 0.0);
        assert!(contains(&RelaxationSpec::perspective(Cap::Secant), &sq(), &bounds, &origin));
        let p = Point3::new(1.5, 2.0, 1.0);
        assert!(!contains(&RelaxationSpec::naive(Cap::Secant), &sq(), &bounds, &p));
        let p = Point3::new(1.0, 1.5, 0.75);
        assert!(contains(&RelaxationSpec::power(1.0, Cap::Secant), &sq(), &bounds, &p));
    }

    #[test]
    fn perspective_zero_slice_is_origin_only() {
        let relax = RelaxationSpec::perspective(Cap::SimpleBound);
        let bounds = b(1.0, 2.0);
        assert!(!contains(&relax, &sq(), &bounds, &Point3::new(0.0, 0.1, 0.0)));
        assert!(!contains(&relax, &sq(), &bounds, &Point3::new(0.1, 0.0, 0.0)));
    }

    #[test]
    fn nonfinite_points_are_outside() {
        let relax = RelaxationSpec::naive(Cap::SimpleBound);
        let pt = Point3::new(f64::NAN, 1.0, 0.5);
        assert!(!contains(&relax, &sq(), &b(1.0, 2.0), &pt));
    }

    #[test]
    fn incompatible_relaxation_is_capability_error() {
        let f = ConvexFunctionSpec::exponential(2.0, -1.0).unwrap();
        let r = Body::new(&RelaxationSpec::power(0.5, Cap::Secant), &f, &b(1.0, 2.0));
        assert!(matches!(r, Err(Error::Capability(_))));
    }

    #[test]
    fn mc_is_deterministic_and_validates() {
        let relax = RelaxationSpec::naive(Cap::Secant);
        let bounds = b(1.0, 2.0);
        let a = mc_volume(&relax, &sq(), &bounds, 10_000, 7).unwrap();
        let c = mc_volume(&relax, &sq(), &bounds, 10_000, 7).unwrap();
        assert_eq!(a, c);
        assert!(mc_volume(&relax, &sq(), &bounds, 9_999, 7).is_err());
    }

    #[test]
    fn mc_is_independent_of_thread_count() {
        let relax = RelaxationSpec::perspective(Cap::Secant);
        let bounds = b(1.0, 2.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_volume(&relax, &sq(), &bounds, 300_000, 11).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn mc_matches_small_cases() {
        let bounds = b(1.0, 2.0);
        for (relax, want) in [
            (RelaxationSpec::perspective(Cap::Secant), 1.0 / 18.0),
            (RelaxationSpec::naive(Cap::Secant), 0.25),
        ] {
            let est = mc_volume(&relax, &sq(), &bounds, 1_000_000, 3).unwrap();
            assert!((est.volume - want).abs() <= 3.0 * est.std_error, "{relax:?} {est:?}");
        }
    }

    #[test]
    fn nesting_examples() {
        let bounds = b(1.0, 2.0);
        assert!(verify_nesting(2.0, &[0.0, 0.5, 1.0], &bounds, 100_000).unwrap());
        assert!(verify_nesting(5.0, &[0.0, 1.0, 2.0, 3.0, 4.0], &bounds, 100_000).unwrap());
        assert!(verify_nesting(2.0, &[1.0, 0.0], &bounds, 100_000).is_err());
    }

    #[test]
    fn power_cone_examples() {
        assert_eq!(power_cone_form(2.0, 1.0, 1.0).unwrap(), [0.5, 0.5, 0.0]);
        let e = power_cone_form(5.0, 3.0, 1.0).unwrap();
        assert!((e[0] - 0.2).abs() < 1e-15 && (e[1] - 0.6).abs() < 1e-15 && (e[2] - 0.2).abs() < 1e-15);
        let e = power_cone_form(3.0, 2.0, 1.0).unwrap();
        assert_eq!(e[2], 0.0);
        assert!(matches!(power_cone_form(3.0, 0.5, 1.0), Err(Error::Capability(_))));
        assert!(matches!(power_cone_form(3.0, 2.5, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn power_cone_agrees_with_lifted_inequality() {
        let alpha = power_cone_form(4.0, 1.5, 1.0).unwrap();
        let mut rng = chunk_rng(5, 0);
        for _ in 0..10_000 {
            let (x, y, z) = (rng.random::<f64>() * 2.0, rng.random::<f64>() * 16.0, rng.random::<f64>());
            let lifted = y * z.powf(1.5) >= x.powi(4);
            assert_eq!(power_cone_contains(&alpha, &[y, z, 1.0], x), lifted);
        }
    }

    #[test]
    fn mfcq_examples() {
        let cert = mfcq_certificate(&sq(), &b(1.0, 2.0), 1.75).unwrap();
        let [dx, dy, dz] = cert.direction;
        assert_eq!(dx, 1.0);
        assert!((dy - 9.0 / 7.0).abs() < 1e-15);
        assert!((dz - 0.75).abs() < 1e-15);
        assert!(cert.strict);
        assert!(matches!(mfcq_certificate(&sq(), &b(1.0, 2.0), 1.5), Err(Error::Domain(_))));
        assert!(mfcq_certificate(&sq(), &b(1.0, 2.0), 2.0).is_err());
    }

    #[test]
    fn perspective_gradient_vanishes_at_origin() {
        for p in [1.5, 2.0, 3.0] {
            assert_eq!(perspective_gradient(p, &Point3::new(0.0, 0.0, 0.0)), [0.0, -0.0, -0.0]);
        }
    }
}
