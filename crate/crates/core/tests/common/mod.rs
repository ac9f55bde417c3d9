#![allow(dead_code)]

use relaxvol::KnapsackInstance;

const GRID_STEP: f64 = 1e-3;

/// Cheapest `(y, z)` completion for a fixed `x_i`.
fn inner_cost(inst: &KnapsackInstance, i: usize, x: f64, tight: bool) -> f64 {
    let (c, f, l, u) = (inst.c[i], inst.f[i], inst.l[i], inst.u[i]);
    if x <= 0.0 {
        return 0.0;
    }
    if !tight {
        // y = x^2 and the smallest admissible z = x / u
        return c * x * x + f * x / u;
    }
    let lo = x / u;
    let hi = (x / l).min(1.0);
    let z = if f > 0.0 { (x * (c / f).sqrt()).clamp(lo, hi) } else { hi };
    c * x * x / z + f * z
}

/// `min_x h_i(x) - lam a_i x` on `[0, u_i]`: a uniform grid locates the
/// minimizer, then golden-section search polishes it inside the neighbouring
/// cells (the term is convex in `x`).
fn grid_min(inst: &KnapsackInstance, i: usize, tight: bool, lam: f64) -> f64 {
    let u = inst.u[i];
    let term = |x: f64| inner_cost(inst, i, x, tight) - lam * inst.a[i] * x;
    let steps = (u / GRID_STEP).ceil() as usize;
    let (best_x, best) = (0..=steps)
        .map(|k| (k as f64 * GRID_STEP).min(u))
        .map(|x| (x, term(x)))
        .fold((0.0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    let lo = (best_x - GRID_STEP).max(0.0);
    let hi = (best_x + GRID_STEP).min(u);
    let polished = -golden_max(|x| -term(x), lo, hi, 1e-12);
    best.min(polished)
}

/// Optimal value of the continuous relaxation through its Lagrangian dual in the
/// covering multiplier, with each separable term minimized on a grid.
pub fn knapsack_grid_oracle(inst: &KnapsackInstance, tight: &[bool]) -> f64 {
    let dual = |lam: f64| -> f64 {
        lam * inst.b + (0..inst.n).map(|i| grid_min(inst, i, tight[i], lam)).sum::<f64>()
    };
    // beyond this multiplier every x_i sits at u_i and the dual only decreases
    let hi = (0..inst.n)
        .map(|i| {
            let u = inst.u[i];
            (2.0 * inst.c[i] * u + inst.f[i] / u) / inst.a[i]
        })
        .fold(0.0, f64::max)
        + 1.0;
    golden_max(dual, 0.0, hi, 1e-10)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Tightening masks for small-instance checks: none, all, and alternating.
pub fn masks(n: usize, salt: usize) -> Vec<bool> {
    (0..n).map(|i| (i + salt).is_multiple_of(2)).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
