//! Degree sweeps: the truncated value series at `x₀` next to the simulated
//! closed-loop cost, one row per feedback degree.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::albrekht::{pqr_with, PqrOptions, PqrSolution};
use crate::error::Result;
use crate::models::BenchmarkInstance;
use crate::sim::{closed_loop_cost, IntegrationStatus, SimOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub degree: usize,
    /// `Σ_{i=2}^{d+1} v^{[i]}(x₀)`.
    pub value_series: f64,
    /// `∫₀ᵀ ℓ` along the closed loop; `None` unless the simulation completed.
    pub integrated_cost: Option<f64>,
    pub status: IntegrationStatus,
}

/// Rows for the degrees in `degrees`, using one PQR solve at the largest.
pub fn degree_table(
    instance: &BenchmarkInstance,
    degrees: &[usize],
    pqr_options: &PqrOptions,
    sim: &SimOptions,
) -> Result<(PqrSolution, Vec<TableRow>)> {
    let top = degrees.iter().copied().max().unwrap_or(1);
    let solution = pqr_with(&instance.system, &instance.cost, top, pqr_options)?;
    let rows = table_rows(instance, &solution, degrees, sim)?;
    Ok((solution, rows))
}

/// Simulations run in parallel; rows come back in the order of `degrees`.
pub fn table_rows(
    instance: &BenchmarkInstance,
    solution: &PqrSolution,
    degrees: &[usize],
    sim: &SimOptions,
) -> Result<Vec<TableRow>> {
    degrees
        .par_iter()
        .map(|&d| {
            let value_series = solution.value.eval(&instance.x0, Some(d + 1));
            let (traj, cost) = closed_loop_cost(instance, &solution.feedback, Some(d), instance.horizon, sim)?;
            let integrated_cost = traj.status.is_completed().then_some(cost);
            Ok(TableRow { degree: d, value_series, integrated_cost, status: traj.status })
        })
        .collect()
}

/// CSV with columns `degree,value_series,integrated_cost,status`.
pub fn write_table_csv<W: Write>(rows: &[TableRow], mut w: W) -> io::Result<()> {
    writeln!(w, "degree,value_series,integrated_cost,status")?;
    for row in rows {
        let cost = row.integrated_cost.map(|c| format!("{c:.16e}")).unwrap_or_default();
        writeln!(w, "{},{:.16e},{},{}", row.degree, row.value_series, cost, row.status.label())?;
    }
    Ok(())
}
