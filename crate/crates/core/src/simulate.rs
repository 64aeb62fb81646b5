//! Trajectory engines for the issue-free map `ξ ↦ (I - ΛLD)ξ` and the
//! multi-issue map `ξ ↦ ((I - ΛLD) ⊗ C)ξ`, with convergence detection and
//! disagreement diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{AppraisalMatrix, InteractingLaplacian, SusceptibilityMatrix, SystemSpec};
use crate::spectral::SpectralReport;

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState {
    /// Length `N`, or `N·n` agent-major for multi-issue runs.
    pub xi: DVector<f64>,
    /// Appraisals `z = Dξ` (issue-free runs only).
    pub z: Option<DVector<f64>>,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxSteps,
    Diverged,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxSteps => "max_steps",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<OpinionState>,
    pub stop_reason: StopReason,
    /// Per stored state: largest inter-agent spread over the issues.
    pub spread_series: Vec<f64>,
    pub disagreement: Option<DisagreementSeries>,
    /// Issues per agent (1 for issue-free runs).
    pub issues: usize,
}

impl Trajectory {
    pub fn last(&self) -> &OpinionState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_spread(&self) -> f64 {
        *self.spread_series.last().expect("non-empty")
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.last().k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub max_steps: usize,
    pub tol_conv: f64,
    pub window: usize,
    pub overflow_guard: f64,
    /// Store every `stride`-th state (the initial and final states are
    /// always kept).
    pub stride: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_steps: 10_000,
            tol_conv: 1e-10,
            window: 10,
            overflow_guard: 1e12,
            stride: 1,
        }
    }
}

impl RunOptions {
    fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        if self.window == 0 || self.stride == 0 {
            return Err(Error::invalid("run options", "window and stride must be at least 1"));
        }
        if !(self.tol_conv > 0.0) || !(self.overflow_guard > 0.0) {
            return Err(Error::invalid("run options", "tolerances must be positive"));
        }
        Ok(())
    }
}

/// Largest over issues of `max_i ξ_i - min_i ξ_i`.
pub fn spread(xi: &DVector<f64>, issues: usize) -> f64 {
    (0..issues)
        .map(|p| {
            let (lo, hi) = xi
                .iter()
                .skip(p)
                .step_by(issues)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// One step `ξ ↦ (I - ΛLD)ξ`, with `z = Dξ` for the new state.
pub fn step_issue_free(sys: &SystemSpec, state: &OpinionState) -> Result<OpinionState> {
    check_len(state.xi.len(), sys.agents())?;
    let xi = sys.iteration_matrix() * &state.xi;
    Ok(OpinionState {
        z: Some(sys.appraisal.matrix() * &xi),
        xi,
        k: state.k + 1,
    })
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("state has {got} entries, expected {want}")));
    }
    Ok(())
}

fn drive(
    xi0: &DVector<f64>,
    issues: usize,
    opts: &RunOptions,
    appraisal: Option<&DMatrix<f64>>,
    step: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<Trajectory> {
    opts.validate()?;
    let make = |xi: DVector<f64>, k: usize| OpinionState {
        z: appraisal.map(|d| d * &xi),
        xi,
        k,
    };
    let mut states = vec![make(xi0.clone(), 0)];
    let mut current = xi0.clone();
    let mut calm = 0;
    let mut stop_reason = StopReason::MaxSteps;
    for k in 1..=opts.max_steps {
        let next = step(&current);
        let delta = (&next - &current).amax();
        let diverged = next.iter().any(|x| !x.is_finite()) || next.amax() > opts.overflow_guard;
        calm = if delta < opts.tol_conv { calm + 1 } else { 0 };
        current = next;
        let done = diverged || calm >= opts.window || k == opts.max_steps;
        if done || k % opts.stride == 0 {
            states.push(make(current.clone(), k));
        }
        if diverged {
            stop_reason = StopReason::Diverged;
            break;
        }
        if calm >= opts.window {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    let spread_series = states.iter().map(|s| spread(&s.xi, issues)).collect();
    Ok(Trajectory {
        states,
        stop_reason,
        spread_series,
        disagreement: None,
        issues,
    })
}

/// Iterates the issue-free map from `xi0`.
pub fn run(sys: &SystemSpec, xi0: &DVector<f64>, opts: &RunOptions) -> Result<Trajectory> {
    check_len(xi0.len(), sys.agents())?;
    let m = sys.iteration_matrix();
    drive(xi0, 1, opts, Some(sys.appraisal.matrix()), |x| &m * x)
}

/// Iterates the multi-issue map from the agent-major `xi0` (length `N·n`),
/// as `X ↦ M X C'` on the `N × n` opinion matrix.
pub fn run_multi_issue(sys: &SystemSpec, xi0: &DVector<f64>, opts: &RunOptions) -> Result<Trajectory> {
    let c = sys
        .mids
        .as_ref()
        .ok_or_else(|| Error::Precondition("multi-issue run needs an issue-coupling matrix".into()))?;
    let (n_agents, n_issues) = (sys.agents(), c.issues());
    check_len(xi0.len(), n_agents * n_issues)?;
    let m = sys.iteration_matrix();
    let ct = c.matrix().transpose();
    drive(xi0, n_issues, opts, None, |x| {
        let xm = DMatrix::from_row_slice(n_agents, n_issues, x.as_slice());
        let next = &m * xm * &ct;
        DVector::from_column_slice(next.transpose().as_slice())
    })
}

/// System `Λ = ϱI`, `D = I - εL` whose iteration is `I - ϱL + εϱL²`.
pub fn coincident_system(l: &InteractingLaplacian, rho: f64, epsilon: f64) -> Result<SystemSpec> {
    let n = l.dim();
    SystemSpec::new(
        SusceptibilityMatrix::uniform(n, rho)?,
        l.clone(),
        AppraisalMatrix::new(DMatrix::identity(n, n) - l.matrix() * epsilon)?,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementSeries {
    /// `‖(I - ις')ξ(k)‖∞` per stored state.
    pub values: Vec<f64>,
    /// Set when the trajectory diverged; the values are then not meaningful.
    pub diverged: bool,
}

impl DisagreementSeries {
    /// Successive ratios `θ(k+1)/θ(k)` over entries above `floor`.
    pub fn ratios(&self, floor: f64) -> Vec<f64> {
        self.values
            .windows(2)
            .filter(|w| w[0] > floor && w[1] > floor)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Disagreement error `θ(k) = (I - ις')ξ(k)`, applied issue by issue for
/// multi-issue trajectories.
pub fn disagreement_series(traj: &Trajectory, report: &SpectralReport) -> Result<DisagreementSeries> {
    let (Some(left), Some(right)) = (&report.left_vec, &report.right_vec) else {
        return Err(Error::Precondition("spectral report carries no unit eigenvectors".into()));
    };
    let n_agents = left.len();
    let issues = traj.issues;
    let values = traj
        .states
        .iter()
        .map(|s| {
            check_len(s.xi.len(), n_agents * issues)?;
            let x = DMatrix::from_row_slice(n_agents, issues, s.xi.as_slice());
            let theta = &x - right * (left.transpose() * &x);
            Ok(theta.amax())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DisagreementSeries {
        values,
        diverged: traj.stop_reason == StopReason::Diverged,
    })
}
