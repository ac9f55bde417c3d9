//! Lower bound as a function of the tightening budget, per ranking strategy.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advisor::{profiles, rank, RankingStrategy};
use crate::error::{domain, Result};
use crate::experiment::instance::{KnapsackInstance, MeanVarianceInstance};
use crate::experiment::solver::{solve_meanvar, solve_relaxation, SolveResult, SolveStatus};
use crate::format::real17;
use crate::function::BoundPair;

/// Cost exponent of both experiment models.
pub const EXPERIMENT_P: f64 = 2.0;
pub const DEFAULT_STEPS: usize = 15;

/// A relaxation that can be solved for any set of tightened indices.
pub trait Experiment: Sync {
    fn bounds(&self) -> Vec<BoundPair>;
    fn solve(&self, tightened: &[usize], tol: f64) -> Result<SolveResult>;
}

impl Experiment for KnapsackInstance {
    fn bounds(&self) -> Vec<BoundPair> {
        KnapsackInstance::bounds(self)
    }

    fn solve(&self, tightened: &[usize], tol: f64) -> Result<SolveResult> {
        solve_relaxation(self, tightened, tol)
    }
}

impl Experiment for MeanVarianceInstance {
    fn bounds(&self) -> Vec<BoundPair> {
        MeanVarianceInstance::bounds(self)
    }

    fn solve(&self, tightened: &[usize], tol: f64) -> Result<SolveResult> {
        solve_meanvar(self, tightened, tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: RankingStrategy,
    pub fraction: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub status: SolveStatus,
    /// Wall-clock solve time; the only column that varies between runs.
    pub seconds: f64,
}

/// Solves every `(strategy, j / steps)` cell for `j = 0..=steps`.
///
/// Cells run in parallel; rows come back ordered by strategy, then fraction.
pub fn run_budget_sweep<E: Experiment>(
    inst: &E,
    strategies: &[RankingStrategy],
    steps: usize,
    tol: f64,
) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return domain(format!("a sweep needs at least 2 steps, got {steps}"));
    }
    let profs = profiles(&inst.bounds(), EXPERIMENT_P)?;
    let cells: Vec<(RankingStrategy, usize)> = strategies
        .iter()
        .flat_map(|&s| (0..=steps).map(move |j| (s, j)))
        .collect();
    cells
        .par_iter()
        .map(|&(strategy, j)| {
            let fraction = j as f64 / steps as f64;
            let chosen = rank(&profs, strategy, fraction)?;
            let start = Instant::now();
            let r = inst.solve(&chosen, tol)?;
            Ok(SweepRow {
                strategy,
                fraction,
                objective: r.objective,
                kkt_residual: r.kkt_residual,
                status: r.status,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "strategy,fraction,objective,kkt_residual,seconds";

/// Sweep table as CSV with [`CSV_HEADER`].
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.strategy.label(),
            real17(r.fraction),
            real17(r.objective),
            real17(r.kkt_residual),
            real17(r.seconds)
        );
    }
    out
}
