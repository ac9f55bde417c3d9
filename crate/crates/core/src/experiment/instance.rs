//! Random test instances and their JSON form.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::function::BoundPair;

/// Smallest lower bound produced by the generators; `l > 0` is required downstream.
pub const LOWER_FLOOR: f64 = 1e-9;

/// Separable quadratic-cost covering knapsack:
/// `min sum c_i x_i^2 + f_i z_i` subject to `a'x >= b` and on/off bounds `l_i z_i <= x_i <= u_i z_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKnapsack", into = "RawKnapsack")]
pub struct KnapsackInstance {
    pub n: usize,
    pub a: Vec<f64>,
    pub f: Vec<f64>,
    pub c: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub delta: Vec<f64>,
    pub b: f64,
}

/// Mean-variance model: `min ||M'x||^2 + c'y` with `y_i >= x_i^2`, `a'x >= b` and `e'z <= kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeanVar", into = "RawMeanVar")]
pub struct MeanVarianceInstance {
    pub n: usize,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub delta: Vec<f64>,
    pub b: f64,
    pub kappa: usize,
    /// Lower triangle of `M`, row by row: `M[0][0], M[1][0], M[1][1], M[2][0], ...`.
    pub m: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawKnapsack {
    n: usize,
    a: Vec<f64>,
    f: Vec<f64>,
    c: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMeanVar {
    n: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
    b: f64,
    kappa: usize,
    #[serde(rename = "M")]
    m: Vec<f64>,
}

fn check_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Input(format!("{name} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input(format!("{name} contains non-finite entries")));
    }
    Ok(())
}

fn check_common(n: usize, a: &[f64], c: &[f64], l: &[f64], u: &[f64], b: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Input("instance must have at least one variable".into()));
    }
    for (name, v) in [("a", a), ("c", c), ("l", l), ("u", u)] {
        check_len(name, v, n)?;
    }
    if !b.is_finite() {
        return Err(Error::Input("b must be finite".into()));
    }
    if a.iter().any(|&x| x <= 0.0) {
        return Err(Error::Input("a must be positive".into()));
    }
    if c.iter().any(|&x| x < 0.0) {
        return Err(Error::Input("c must be nonnegative".into()));
    }
    for (i, (&lo, &hi)) in l.iter().zip(u).enumerate() {
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Input(format!("bounds at index {i} need 0 < l < u, got ({lo}, {hi})")));
        }
    }
    Ok(l.iter().zip(u).map(|(lo, hi)| hi - lo).collect())
}

impl TryFrom<RawKnapsack> for KnapsackInstance {
    type Error = Error;

    fn try_from(r: RawKnapsack) -> Result<Self> {
        let delta = check_common(r.n, &r.a, &r.c, &r.l, &r.u, r.b)?;
        check_len("f", &r.f, r.n)?;
        if r.f.iter().any(|&x| x < 0.0) {
            return Err(Error::Input("f must be nonnegative".into()));
        }
        Ok(KnapsackInstance {
            n: r.n,
            a: r.a,
            f: r.f,
            c: r.c,
            l: r.l,
            u: r.u,
            delta,
            b: r.b,
        })
    }
}

impl From<KnapsackInstance> for RawKnapsack {
    fn from(k: KnapsackInstance) -> Self {
        RawKnapsack {
            n: k.n,
            a: k.a,
            f: k.f,
            c: k.c,
            l: k.l,
            u: k.u,
            b: k.b,
        }
    }
}

impl TryFrom<RawMeanVar> for MeanVarianceInstance {
    type Error = Error;

    fn try_from(r: RawMeanVar) -> Result<Self> {
        let delta = check_common(r.n, &r.a, &r.c, &r.l, &r.u, r.b)?;
        check_len("M", &r.m, r.n * (r.n + 1) / 2)?;
        if r.m.iter().any(|&x| x < 0.0) {
            return Err(Error::Input("M must be nonnegative".into()));
        }
        if r.kappa > r.n {
            return Err(Error::Input(format!("kappa = {} exceeds n = {}", r.kappa, r.n)));
        }
        Ok(MeanVarianceInstance {
            n: r.n,
            a: r.a,
            c: r.c,
            l: r.l,
            u: r.u,
            delta,
            b: r.b,
            kappa: r.kappa,
            m: r.m,
        })
    }
}

impl From<MeanVarianceInstance> for RawMeanVar {
    fn from(k: MeanVarianceInstance) -> Self {
        RawMeanVar {
            n: k.n,
            a: k.a,
            c: k.c,
            l: k.l,
            u: k.u,
            b: k.b,
            kappa: k.kappa,
            m: k.m,
        }
    }
}

fn bound_pairs(l: &[f64], u: &[f64]) -> Vec<BoundPair> {
    l.iter()
        .zip(u)
        .map(|(&lo, &hi)| BoundPair::new(lo, hi).expect("instance bounds are validated"))
        .collect()
}

/// `a'(l + delta / 4)`, summed in index order.
fn covering_rhs(a: &[f64], l: &[f64], delta: &[f64]) -> f64 {
    a.iter()
        .zip(l.iter().zip(delta))
        .map(|(ai, (li, di))| ai * (li + 0.25 * di))
        .sum()
}

impl KnapsackInstance {
    pub fn bounds(&self) -> Vec<BoundPair> {
        bound_pairs(&self.l, &self.u)
    }
}

impl MeanVarianceInstance {
    pub fn bounds(&self) -> Vec<BoundPair> {
        bound_pairs(&self.l, &self.u)
    }

    /// `M` as a dense lower-triangular matrix.
    pub fn m_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in 0..=i {
                m[(i, j)] = self.m[k];
                k += 1;
            }
        }
        m
    }
}

/// Draws a covering knapsack instance; identical seeds give bit-identical instances.
pub fn generate_knapsack(n: usize, seed: u64) -> Result<KnapsackInstance> {
    if n == 0 {
        return domain("instance size must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = KnapsackInstance {
        n,
        a: Vec::with_capacity(n),
        f: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        l: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
        b: 0.0,
    };
    for _ in 0..n {
        let a = rng.random_range(1.0..1.2);
        let f = rng.random_range(10.0..10.2);
        let l = rng.random_range(0.0..20.0_f64).max(LOWER_FLOOR);
        let d = rng.random_range(10.0..11.0);
        let c = rng.random_range(0.0..1.0);
        inst.a.push(a);
        inst.f.push(f);
        // store the width as represented, so that JSON round trips preserve it
        let u = l + d;
        inst.l.push(l);
        inst.delta.push(u - l);
        inst.u.push(u);
        inst.c.push(c);
    }
    inst.b = covering_rhs(&inst.a, &inst.l, &inst.delta);
    Ok(inst)
}

/// Draws a mean-variance instance with `kappa = floor(0.8 n)` and `M` lower
/// triangular with entries in `[0, 0.0025)`.
pub fn generate_meanvar(n: usize, seed: u64) -> Result<MeanVarianceInstance> {
    if n == 0 {
        return domain("instance size must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut a, mut c, mut l, mut u, mut delta) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for _ in 0..n {
        let ai = rng.random_range(1.0..1.2);
        let li = rng.random_range(0.0..20.0_f64).max(LOWER_FLOOR);
        let di = rng.random_range(10.0..11.0);
        let ci = rng.random_range(0.0..1.0);
        let ui = li + di;
        a.push(ai);
        l.push(li);
        delta.push(ui - li);
        u.push(ui);
        c.push(ci);
    }
    let m = (0..n * (n + 1) / 2).map(|_| rng.random_range(0.0..0.0025)).collect();
    let b = covering_rhs(&a, &l, &delta);
    Ok(MeanVarianceInstance {
        n,
        a,
        c,
        l,
        u,
        delta,
        b,
        kappa: (4 * n) / 5,
        m,
    })
}
