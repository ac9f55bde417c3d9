//! Primal log-barrier interior-point solver for the continuous relaxations.
//!
//! Each index `i` owns the variables `(x_i, y_i, z_i)` and the barrier terms of
//!
//! ```text
//! x - l z >= 0,  u z - x >= 0,  u^2 z - y >= 0,  z >= 0,  1 - z >= 0,
//! y - x^2 >= 0                       (plain)
//! y z - x^2 >= 0,  y >= 0            (tightened)
//! ```
//!
//! so the barrier Hessian is block diagonal with 3x3 blocks. The covering row
//! `a'x >= b` and the optional cardinality row `e'z <= kappa` add rank-one
//! terms, which are absorbed with the Woodbury identity in O(n). The
//! mean-variance epigraph `v >= ||M'x||^2` couples all `x` and is solved densely.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::experiment::instance::{KnapsackInstance, MeanVarianceInstance};

const GROWTH: f64 = 10.0;
const MAX_NEWTON: usize = 4000;
const MAX_CENTERING: usize = 200;
const DECREMENT_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.25;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Objective value at the returned iterate.
    pub objective: f64,
    /// `(m + sqrt(m) λ) / (t max(1, |obj|))` with `m` barrier terms and `λ` the
    /// Newton decrement at the final iterate: a relative bound on the duality gap
    /// of the dual point `1 / (t g_j)`. Iterates are strictly feasible.
    pub kkt_residual: f64,
    /// Newton steps taken.
    pub iterations: usize,
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Epigraph variable of the variance term, when present.
    pub v: Option<f64>,
}

impl SolveResult {
    fn infeasible() -> Self {
        SolveResult {
            objective: f64::INFINITY,
            kkt_residual: f64::INFINITY,
            iterations: 0,
            status: SolveStatus::Infeasible,
            x: Vec::new(),
            y: Vec::new(),
            z: Vec::new(),
            v: None,
        }
    }
}

/// The relaxation in solver form: `min c'y + f'z (+ v)`.
#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub a: Vec<f64>,
    pub b: f64,
    pub c: Vec<f64>,
    pub f: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub tight: Vec<bool>,
    pub kappa: Option<f64>,
    /// `M M'` for the epigraph `v >= x' M M' x`.
    pub quad: Option<DMatrix<f64>>,
}

struct Derivatives {
    grad: Vec<f64>,
    blocks: Vec<Matrix3<f64>>,
    /// Rank-one Hessian terms `w w'` as dense vectors over the block variables.
    rank_one: Vec<Vec<f64>>,
}

impl Model {
    fn n(&self) -> usize {
        self.a.len()
    }

    fn dim(&self) -> usize {
        3 * self.n() + usize::from(self.quad.is_some())
    }

    fn constraint_count(&self) -> usize {
        let per: usize = self.tight.iter().map(|&t| if t { 7 } else { 6 }).sum();
        per + 1 + usize::from(self.kappa.is_some()) + usize::from(self.quad.is_some())
    }

    fn objective(&self, s: &[f64]) -> f64 {
        let n = self.n();
        let mut obj = 0.0;
        for i in 0..n {
            obj += self.c[i] * s[3 * i + 1] + self.f[i] * s[3 * i + 2];
        }
        if self.quad.is_some() {
            obj += s[3 * n];
        }
        obj
    }

    fn cost_gradient(&self) -> Vec<f64> {
        let n = self.n();
        let mut g = vec![0.0; self.dim()];
        for i in 0..n {
            g[3 * i + 1] = self.c[i];
            g[3 * i + 2] = self.f[i];
        }
        if self.quad.is_some() {
            g[3 * n] = 1.0;
        }
        g
    }

    fn covering_slack(&self, s: &[f64]) -> f64 {
        let ax: f64 = self.a.iter().enumerate().map(|(i, ai)| ai * s[3 * i]).sum();
        ax - self.b
    }

    fn cardinality_slack(&self, s: &[f64]) -> Option<f64> {
        self.kappa.map(|k| k - (0..self.n()).map(|i| s[3 * i + 2]).sum::<f64>())
    }

    /// `v - x' Q x` and `Q x`.
    fn epigraph(&self, s: &[f64]) -> Option<(f64, DVector<f64>)> {
        let q = self.quad.as_ref()?;
        let n = self.n();
        let x = DVector::from_iterator(n, (0..n).map(|i| s[3 * i]));
        let qx = q * &x;
        Some((s[3 * n] - x.dot(&qx), qx))
    }

    fn block_slacks(&self, i: usize, x: f64, y: f64, z: f64) -> [f64; 7] {
        let (l, u) = (self.l[i], self.u[i]);
        let curve = if self.tight[i] { y * z - x * x } else { y - x * x };
        let last = if self.tight[i] { y } else { 1.0 };
        [x - l * z, u * z - x, u * u * z - y, z, 1.0 - z, curve, last]
    }

    /// Barrier value `-sum log g`, or `None` outside the open feasible set.
    fn barrier(&self, s: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for i in 0..self.n() {
            for g in self.block_slacks(i, s[3 * i], s[3 * i + 1], s[3 * i + 2]) {
                if !(g > 0.0) {
                    return None;
                }
                total -= g.ln();
            }
        }
        let mut push = |g: f64| {
            if g > 0.0 {
                total -= g.ln();
                true
            } else {
                false
            }
        };
        if !push(self.covering_slack(s)) {
            return None;
        }
        if let Some(g) = self.cardinality_slack(s) {
            if !push(g) {
                return None;
            }
        }
        if let Some((g, _)) = self.epigraph(s) {
            if !push(g) {
                return None;
            }
        }
        Some(total)
    }

    fn derivatives(&self, s: &[f64]) -> Derivatives {
        let n = self.n();
        let dim = self.dim();
        let mut grad = vec![0.0; dim];
        let mut blocks = Vec::with_capacity(n);
        for i in 0..n {
            let (x, y, z) = (s[3 * i], s[3 * i + 1], s[3 * i + 2]);
            let (l, u) = (self.l[i], self.u[i]);
            let linear = [
                (x - l * z, Vector3::new(1.0, 0.0, -l)),
                (u * z - x, Vector3::new(-1.0, 0.0, u)),
                (u * u * z - y, Vector3::new(0.0, -1.0, u * u)),
                (z, Vector3::new(0.0, 0.0, 1.0)),
                (1.0 - z, Vector3::new(0.0, 0.0, -1.0)),
            ];
            let mut g = Vector3::zeros();
            let mut h = Matrix3::zeros();
            for (slack, dg) in linear {
                g -= dg / slack;
                h += dg * dg.transpose() / (slack * slack);
            }
            if self.tight[i] {
                let slack = y * z - x * x;
                let dg = Vector3::new(-2.0 * x, z, y);
                let d2 = Matrix3::new(-2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0);
                g -= dg / slack;
                h += dg * dg.transpose() / (slack * slack) - d2 / slack;
                g[1] -= 1.0 / y;
                h[(1, 1)] += 1.0 / (y * y);
            } else {
                let slack = y - x * x;
                let dg = Vector3::new(-2.0 * x, 1.0, 0.0);
                g -= dg / slack;
                h += dg * dg.transpose() / (slack * slack);
                h[(0, 0)] += 2.0 / slack;
            }
            grad[3 * i..3 * i + 3].copy_from_slice(g.as_slice());
            blocks.push(h);
        }
        let mut rank_one = Vec::with_capacity(2);
        let cover = self.covering_slack(s);
        let mut w = vec![0.0; dim];
        for i in 0..n {
            grad[3 * i] -= self.a[i] / cover;
            w[3 * i] = self.a[i] / cover;
        }
        rank_one.push(w);
        if let Some(card) = self.cardinality_slack(s) {
            let mut w = vec![0.0; dim];
            for i in 0..n {
                grad[3 * i + 2] += 1.0 / card;
                w[3 * i + 2] = 1.0 / card;
            }
            rank_one.push(w);
        }
        Derivatives {
            grad,
            blocks,
            rank_one,
        }
    }

    /// Newton direction for `t * cost + barrier`; returns the direction and the
    /// full gradient of the centering objective.
    fn newton(&self, s: &[f64], t: f64, cost: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.derivatives(s);
        let mut grad = d.grad;
        for (g, c) in grad.iter_mut().zip(cost) {
            *g += t * c;
        }
        let dir = match &self.quad {
            None => {
                let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
                solve_block_low_rank(&d.blocks, &d.rank_one, &rhs)?
            }
            Some(q) => {
                let (slack, qx) = self.epigraph(s).expect("epigraph present");
                let n = self.n();
                let dim = self.dim();
                let mut h = DMatrix::zeros(dim, dim);
                for (i, b) in d.blocks.iter().enumerate() {
                    h.view_mut((3 * i, 3 * i), (3, 3)).copy_from(b);
                }
                for w in &d.rank_one {
                    let nz: Vec<usize> = (0..dim).filter(|&j| w[j] != 0.0).collect();
                    for &r in &nz {
                        for &c in &nz {
                            h[(r, c)] += w[r] * w[c];
                        }
                    }
                }
                // epigraph g = v - x'Qx with gradient (-2Qx, 1)
                let mut dg = vec![0.0; dim];
                for i in 0..n {
                    dg[3 * i] = -2.0 * qx[i];
                }
                dg[3 * n] = 1.0;
                let nz: Vec<usize> = (0..dim).filter(|&j| dg[j] != 0.0).collect();
                let s2 = slack * slack;
                for &r in &nz {
                    grad[r] -= dg[r] / slack;
                    for &c in &nz {
                        h[(r, c)] += dg[r] * dg[c] / s2;
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        h[(3 * i, 3 * j)] += 2.0 * q[(i, j)] / slack;
                    }
                }
                let rhs = DVector::from_iterator(dim, grad.iter().map(|g| -g));
                solve_dense_spd(h, rhs)?.as_slice().to_vec()
            }
        };
        Ok((dir, grad))
    }

    /// Relative weights for the starting `z`: all ones without a cardinality
    /// row, otherwise a greedy fill of `kappa` units by reach `a_i u_i`, blended
    /// with the uniform share so every weight stays positive.
    fn start_weights(&self) -> Vec<f64> {
        let n = self.n();
        let Some(kappa) = self.kappa else {
            return vec![1.0; n];
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| (self.a[j] * self.u[j]).total_cmp(&(self.a[i] * self.u[i])).then(i.cmp(&j)));
        let mut w = vec![0.0; n];
        let mut left = kappa;
        for &i in &order {
            w[i] = left.min(1.0);
            left -= w[i];
        }
        let share = kappa / n as f64;
        w.iter().map(|wi| 0.99 * wi + 0.01 * share).collect()
    }

    /// A strictly feasible point: `z = zeta w`, `x` a fraction `theta` into its
    /// box, `y` midway between its bounds.
    fn interior_start(&self) -> Option<Vec<f64>> {
        let n = self.n();
        let w = self.start_weights();
        let al: f64 = (0..n).map(|i| w[i] * self.a[i] * self.l[i]).sum();
        let ad: f64 = (0..n).map(|i| w[i] * self.a[i] * (self.u[i] - self.l[i])).sum();
        let (theta, zeta) = (1..=40).find_map(|j| {
            let theta = 1.0 - 0.5_f64.powi(j);
            let need = self.b.max(0.0) / (al + theta * ad);
            (need < 1.0).then_some((theta, 0.5 * (need + 1.0)))
        })?;
        let mut s = vec![0.0; self.dim()];
        for i in 0..n {
            let z = zeta * w[i];
            let x = z * (self.l[i] + theta * (self.u[i] - self.l[i]));
            let lower = if self.tight[i] { x * x / z } else { x * x };
            let upper = self.u[i] * self.u[i] * z;
            s[3 * i] = x;
            s[3 * i + 1] = 0.5 * (lower + upper);
            s[3 * i + 2] = z;
        }
        if self.quad.is_some() {
            s[3 * n] = 0.0;
            let (g, _) = self.epigraph(&s).expect("epigraph present");
            let xqx = -g;
            s[3 * n] = xqx + xqx.max(1.0);
        }
        self.barrier(&s).map(|_| s)
    }

    /// Necessary condition for feasibility: the largest reachable `a'x`.
    fn coverable(&self) -> bool {
        let mut reach: Vec<f64> = self.a.iter().zip(&self.u).map(|(a, u)| a * u).collect();
        let total = match self.kappa {
            None => reach.iter().sum(),
            Some(k) => {
                reach.sort_by(|p, q| q.total_cmp(p));
                let whole = k.floor() as usize;
                let mut sum: f64 = reach.iter().take(whole).sum();
                if whole < reach.len() {
                    sum += (k - whole as f64) * reach[whole];
                }
                sum
            }
        };
        total > self.b
    }

    pub(crate) fn solve(&self, tol: f64) -> Result<SolveResult> {
        if !(tol > 0.0 && tol.is_finite()) {
            return domain(format!("tolerance must be positive, got {tol}"));
        }
        if !self.coverable() {
            return Ok(SolveResult::infeasible());
        }
        let mut s = self.interior_start().ok_or_else(|| {
            Error::Numerical("no strictly interior starting point found".into())
        })?;
        let cost = self.cost_gradient();
        let m = self.constraint_count() as f64;
        let mut t = m / self.objective(&s).abs().max(1.0);
        let mut iterations = 0;
        let mut kkt = f64::INFINITY;
        let mut status = SolveStatus::MaxIter;
        let merit = |s: &[f64], t: f64| self.barrier(s).map(|b| t * self.objective(s) + b);

        'outer: for _ in 0..MAX_CENTERING {
            let mut decrement;
            loop {
                let (dir, grad) = self.newton(&s, t, &cost)?;
                let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
                decrement = (-slope).max(0.0).sqrt();
                if !(slope < 0.0) || -slope * 0.5 <= DECREMENT_TOL {
                    break;
                }
                if iterations >= MAX_NEWTON {
                    break 'outer;
                }
                iterations += 1;
                let here = merit(&s, t).expect("iterate stays interior");
                let mut step = 1.0;
                let mut trial = vec![0.0; s.len()];
                let accepted = loop {
                    for ((tr, si), di) in trial.iter_mut().zip(&s).zip(&dir) {
                        *tr = si + step * di;
                    }
                    match merit(&trial, t) {
                        Some(v) if v <= here + ARMIJO * step * slope => break v < here,
                        _ => {}
                    }
                    step *= 0.5;
                    if step < MIN_STEP {
                        break false;
                    }
                };
                if !accepted {
                    // centered to working precision
                    break;
                }
                std::mem::swap(&mut s, &mut trial);
            }
            let obj = self.objective(&s);
            kkt = (m + m.sqrt() * decrement) / (t * obj.abs().max(1.0));
            if kkt <= tol {
                status = SolveStatus::Optimal;
                break;
            }
            t *= GROWTH;
        }

        let n = self.n();
        Ok(SolveResult {
            objective: self.objective(&s),
            kkt_residual: kkt,
            iterations,
            status,
            x: (0..n).map(|i| s[3 * i]).collect(),
            y: (0..n).map(|i| s[3 * i + 1]).collect(),
            z: (0..n).map(|i| s[3 * i + 2]).collect(),
            v: self.quad.as_ref().map(|_| s[3 * n]),
        })
    }
}

fn jacobi_scale(diag: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    diag.map(|d| {
        if d > 0.0 && d.is_finite() {
            Ok(1.0 / d.sqrt())
        } else {
            Err(Error::Numerical("barrier Hessian has a nonpositive diagonal".into()))
        }
    })
    .collect()
}

/// Cholesky factor of a symmetrically diagonal-scaled 3x3 block. Slacks near the
/// end of the path make block entries differ by many orders of magnitude; the
/// scaling keeps the factorization stable.
/// Blocks that are singular to working precision (all slacks of an index
/// vanishing together near the origin) fall back to an eigen-decomposition
/// with the spectrum floored relative to its largest value.
struct ScaledBlock {
    scale: Vector3<f64>,
    inverse: Matrix3<f64>,
}

const EIGEN_FLOOR: f64 = 1e-14;

impl ScaledBlock {
    fn new(h: &Matrix3<f64>) -> Result<Self> {
        let d = jacobi_scale((0..3).map(|j| h[(j, j)]))?;
        let scale = Vector3::new(d[0], d[1], d[2]);
        let scaled = Matrix3::from_fn(|r, c| h[(r, c)] * scale[r] * scale[c]);
        let inverse = match Cholesky::new(scaled) {
            Some(chol) => chol.inverse(),
            None => {
                let eig = SymmetricEigen::new(scaled);
                let top = eig.eigenvalues.amax();
                let inv = eig.eigenvalues.map(|v| 1.0 / v.max(EIGEN_FLOOR * top));
                eig.eigenvectors * Matrix3::from_diagonal(&inv) * eig.eigenvectors.transpose()
            }
        };
        if !inverse.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("barrier block is not finite".into()));
        }
        Ok(ScaledBlock { scale, inverse })
    }

    fn solve(&self, r: Vector3<f64>) -> Vector3<f64> {
        (self.inverse * r.component_mul(&self.scale)).component_mul(&self.scale)
    }
}

fn solve_dense_spd(mut h: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let n = h.nrows();
    let d = jacobi_scale((0..n).map(|j| h[(j, j)]))?;
    for r in 0..n {
        for c in 0..n {
            h[(r, c)] *= d[r] * d[c];
        }
    }
    let scaled_rhs = DVector::from_iterator(n, rhs.iter().zip(&d).map(|(v, s)| v * s));
    let mut shift = 0.0;
    let chol = loop {
        let mut trial = h.clone();
        for j in 0..n {
            trial[(j, j)] += shift;
        }
        if let Some(c) = Cholesky::new(trial) {
            break c;
        }
        shift = if shift == 0.0 { EIGEN_FLOOR } else { shift * 100.0 };
        if shift > 1e-4 {
            return Err(Error::Numerical("barrier Hessian lost positive definiteness".into()));
        }
    };
    let mut out = chol.solve(&scaled_rhs);
    for (o, s) in out.iter_mut().zip(&d) {
        *o *= s;
    }
    Ok(out)
}

/// Solves `(D + sum w_k w_k') d = r` with `D` block diagonal (3x3 blocks).
fn solve_block_low_rank(blocks: &[Matrix3<f64>], cols: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let factors = blocks.iter().map(ScaledBlock::new).collect::<Result<Vec<_>>>()?;
    let apply_inverse = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (i, f) in factors.iter().enumerate() {
            let r = f.solve(Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]));
            out[3 * i..3 * i + 3].copy_from_slice(r.as_slice());
        }
        out
    };
    let base = apply_inverse(rhs);
    if cols.is_empty() {
        return Ok(base);
    }
    let k = cols.len();
    let ys: Vec<Vec<f64>> = cols.iter().map(|w| apply_inverse(w)).collect();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
    let mut cap = DMatrix::identity(k, k);
    for (r, w) in cols.iter().enumerate() {
        for (c, y) in ys.iter().enumerate() {
            cap[(r, c)] += dot(w, y);
        }
    }
    let proj = DVector::from_iterator(k, cols.iter().map(|w| dot(w, &base)));
    let alpha = cap
        .lu()
        .solve(&proj)
        .ok_or_else(|| Error::Numerical("singular Woodbury capacitance matrix".into()))?;
    let mut out = base;
    for (y, a) in ys.iter().zip(alpha.iter()) {
        for (o, yi) in out.iter_mut().zip(y) {
            *o -= a * yi;
        }
    }
    Ok(out)
}

fn tight_mask(n: usize, tightened: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &i in tightened {
        if i >= n {
            return Err(Error::Input(format!("tightened index {i} out of range for n = {n}")));
        }
        mask[i] = true;
    }
    Ok(mask)
}

/// Continuous relaxation of the covering knapsack, with the perspective
/// constraint `y_i z_i >= x_i^2` for every index in `tightened` (0-based).
pub fn solve_relaxation(inst: &KnapsackInstance, tightened: &[usize], tol: f64) -> Result<SolveResult> {
    let model = Model {
        a: inst.a.clone(),
        b: inst.b,
        c: inst.c.clone(),
        f: inst.f.clone(),
        l: inst.l.clone(),
        u: inst.u.clone(),
        tight: tight_mask(inst.n, tightened)?,
        kappa: None,
        quad: None,
    };
    model.solve(tol)
}

/// Continuous relaxation of the mean-variance model `min v + c'y` with
/// `v >= ||M'x||^2` and `e'z <= kappa`.
pub fn solve_meanvar(inst: &MeanVarianceInstance, tightened: &[usize], tol: f64) -> Result<SolveResult> {
    let m = inst.m_dense();
    let model = Model {
        a: inst.a.clone(),
        b: inst.b,
        c: inst.c.clone(),
        f: vec![0.0; inst.n],
        l: inst.l.clone(),
        u: inst.u.clone(),
        tight: tight_mask(inst.n, tightened)?,
        kappa: Some(inst.kappa as f64),
        quad: Some(&m * m.transpose()),
    };
    model.solve(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::instance::{generate_knapsack, generate_meanvar};

    fn tiny() -> KnapsackInstance {
        KnapsackInstance {
            n: 2,
            a: vec![1.0, 1.0],
            f: vec![1.0, 2.0],
            c: vec![0.5, 0.25],
            l: vec![1.0, 2.0],
            u: vec![3.0, 4.0],
            delta: vec![2.0, 2.0],
            b: 4.0,
        }
    }

    #[test]
    fn optimal_and_feasible() {
        let inst = generate_knapsack(20, 3).unwrap();
        let r = solve_relaxation(&inst, &[0, 4, 7], 1e-8).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.kkt_residual <= 1e-8);
        let ax: f64 = inst.a.iter().zip(&r.x).map(|(a, x)| a * x).sum();
        assert!(ax >= inst.b);
        for i in 0..inst.n {
            assert!(r.z[i] > 0.0 && r.z[i] < 1.0);
            assert!(r.x[i] >= inst.l[i] * r.z[i] && r.x[i] <= inst.u[i] * r.z[i]);
            assert!(r.y[i] >= r.x[i] * r.x[i] - 1e-12);
        }
    }

    #[test]
    fn tightening_raises_the_bound() {
        let inst = generate_knapsack(30, 5).unwrap();
        let all: Vec<usize> = (0..inst.n).collect();
        let none = solve_relaxation(&inst, &[], 1e-9).unwrap().objective;
        let half = solve_relaxation(&inst, &all[..15], 1e-9).unwrap().objective;
        let full = solve_relaxation(&inst, &all, 1e-9).unwrap().objective;
        let slack = 2e-9 * full.abs();
        assert!(none <= half + slack && half <= full + slack, "{none} {half} {full}");
        assert!(full > none);
    }

    #[test]
    fn infeasible_when_cover_is_unreachable() {
        let mut inst = tiny();
        inst.b = 7.0;
        assert_eq!(solve_relaxation(&inst, &[], 1e-8).unwrap().status, SolveStatus::Infeasible);
        inst.b = 6.99;
        assert_eq!(solve_relaxation(&inst, &[], 1e-8).unwrap().status, SolveStatus::Optimal);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(solve_relaxation(&tiny(), &[2], 1e-8), Err(Error::Input(_))));
        assert!(matches!(solve_relaxation(&tiny(), &[], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn woodbury_matches_dense_solve() {
        let blocks: Vec<Matrix3<f64>> = (0..3)
            .map(|i| {
                let a = Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.5 + i as f64, 0.2, 0.1, 0.2, 1.0);
                a * a.transpose()
            })
            .collect();
        let cols = vec![
            (0..9).map(|j| (j as f64 * 0.37).sin()).collect::<Vec<_>>(),
            (0..9).map(|j| (j as f64 * 0.11).cos()).collect::<Vec<_>>(),
        ];
        let rhs: Vec<f64> = (0..9).map(|j| j as f64 - 4.0).collect();
        let got = solve_block_low_rank(&blocks, &cols, &rhs).unwrap();
        let mut h = DMatrix::zeros(9, 9);
        for (i, b) in blocks.iter().enumerate() {
            h.view_mut((3 * i, 3 * i), (3, 3)).copy_from(b);
        }
        for w in &cols {
            let w = DVector::from_column_slice(w);
            h += &w * w.transpose();
        }
        let want = h.lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
    }

    #[test]
    fn meanvar_with_zero_m_reduces_to_capped_knapsack() {
        let mut mv = generate_meanvar(4, 11).unwrap();
        mv.m.iter_mut().for_each(|v| *v = 0.0);
        mv.kappa = 2;
        let tight = [1usize, 3];
        let a = solve_meanvar(&mv, &tight, 1e-10).unwrap();
        let capped = Model {
            a: mv.a.clone(),
            b: mv.b,
            c: mv.c.clone(),
            f: vec![0.0; mv.n],
            l: mv.l.clone(),
            u: mv.u.clone(),
            tight: tight_mask(mv.n, &tight).unwrap(),
            kappa: Some(2.0),
            quad: None,
        };
        let b = capped.solve(1e-10).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(b.status, SolveStatus::Optimal);
        assert!((a.objective - b.objective).abs() <= 1e-7 * b.objective.abs().max(1.0));
        assert!(a.z.iter().sum::<f64>() <= 2.0);
    }

    #[test]
    fn meanvar_monotone_in_tightening() {
        let mv = generate_meanvar(12, 2).unwrap();
        let all: Vec<usize> = (0..mv.n).collect();
        let none = solve_meanvar(&mv, &[], 1e-9).unwrap();
        let some = solve_meanvar(&mv, &all[..6], 1e-9).unwrap();
        let full = solve_meanvar(&mv, &all, 1e-9).unwrap();
        for r in [&none, &some, &full] {
            assert_eq!(r.status, SolveStatus::Optimal);
            let v = r.v.unwrap();
            assert!(v >= 0.0);
        }
        let slack = 2e-9 * full.objective.abs();
        assert!(none.objective <= some.objective + slack);
        assert!(some.objective <= full.objective + slack);
    }
}
