//! Convergence metrics of a trace.

use serde::{Deserialize, Serialize};

use crate::analysis::linear_fit;
use crate::sim::Trace;

/// Thresholds used when summarizing a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryOptions {
    /// Settled once `|e| < settle_rel_tol * |e(t0)|`.
    pub settle_rel_tol: f64,
    /// Trailing fraction of the run used for the steady-state band.
    pub steady_fraction: f64,
    /// Minimum number of samples for a rate fit.
    pub min_fit_samples: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            settle_rel_tol: 1e-3,
            steady_fraction: 0.2,
            min_fit_samples: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub initial_error_norm: f64,
    pub final_error_norm: f64,
    /// First time with `|e| < settle_rel_tol * |e(t0)|`.
    pub settle_time: Option<f64>,
    /// Negated least-squares slope of `ln |e|` over the decay window, which
    /// runs from the first record to the settle time (or the whole trace if
    /// it never settles).
    pub fitted_rate: Option<f64>,
    pub fit_r2: Option<f64>,
    /// Largest `|e|` over the trailing `steady_fraction` of the run.
    pub steady_state_band: f64,
    pub samples: usize,
}

pub fn summarize(trace: &Trace, opts: &SummaryOptions) -> Option<ConvergenceSummary> {
    let first = trace.records.first()?;
    let last = trace.records.last()?;
    let e0 = first.error_norm();
    let threshold = opts.settle_rel_tol * e0;
    let settle_idx = trace
        .records
        .iter()
        .position(|r| r.error_norm() < threshold);
    let window_end = settle_idx.map_or(trace.len(), |i| i + 1);
    let (ts, ls): (Vec<f64>, Vec<f64>) = trace.records[..window_end]
        .iter()
        .filter(|r| r.error_norm() > 0.0)
        .map(|r| (r.t, r.error_norm().ln()))
        .unzip();
    let fit = if ts.len() >= opts.min_fit_samples {
        linear_fit(&ts, &ls)
    } else {
        None
    };
    let t_start = last.t - opts.steady_fraction * (last.t - first.t);
    let steady_state_band = trace
        .records
        .iter()
        .filter(|r| r.t >= t_start)
        .map(|r| r.error_norm())
        .fold(0.0, f64::max);
    Some(ConvergenceSummary {
        initial_error_norm: e0,
        final_error_norm: last.error_norm(),
        settle_time: settle_idx.map(|i| trace.records[i].t),
        fitted_rate: fit.map(|f| -f.slope),
        fit_r2: fit.map(|f| f.r2),
        steady_state_band,
        samples: trace.len(),
    })
}

fn optional(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

impl std::fmt::Display for ConvergenceSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "initial_error_norm  {:.6e}", self.initial_error_norm)?;
        writeln!(f, "final_error_norm    {:.6e}", self.final_error_norm)?;
        writeln!(f, "settle_time         {}", optional(self.settle_time))?;
        writeln!(f, "fitted_rate         {}", optional(self.fitted_rate))?;
        writeln!(f, "fit_r2              {}", optional(self.fit_r2))?;
        writeln!(f, "steady_state_band   {:.6e}", self.steady_state_band)?;
        write!(f, "samples             {}", self.samples)
    }
}
