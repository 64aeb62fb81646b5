//! Scenario-based estimation of the appraisal matrix `D` from observed
//! opinion pairs, the sample-growing loop, and scenario sample bounds.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::linalg::kron;
use crate::netcore::{InteractingLaplacian, SusceptibilityMatrix, SystemSpec};

/// Relative singular-value cutoff for the least-squares rank.
const RANK_TOL: f64 = 1e-10;

/// Column-major stacking of `m`.
pub fn vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`] for a `p × q` matrix.
pub fn unvec(v: &DVector<f64>, p: usize, q: usize) -> Result<DMatrix<f64>> {
    if v.len() != p * q {
        return Err(Error::Dimension(format!("cannot reshape {} entries to {p}x{q}", v.len())));
    }
    Ok(DMatrix::from_column_slice(p, q, v.as_slice()))
}

/// `ξ' ⊗ ΛL`, so that `regressor · vec(D) = ΛLDξ`.
pub fn regressor(xi_prev: &DVector<f64>, lambda: &SusceptibilityMatrix, l: &InteractingLaplacian) -> Result<DMatrix<f64>> {
    let n = l.dim();
    if xi_prev.len() != n || lambda.dim() != n {
        return Err(Error::Dimension(format!(
            "state {} / susceptibilities {} / Laplacian {n}",
            xi_prev.len(),
            lambda.dim()
        )));
    }
    let ll = lambda.matrix() * l.matrix();
    let row = DMatrix::from_row_slice(1, n, xi_prev.as_slice());
    Ok(kron(&row, &ll))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// `ξ(k-1)` is uniform on `[-box_size, box_size]^N`.
    pub box_size: f64,
    /// Uniform perturbation amplitude added to `ξ(k)`.
    pub noise: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            box_size: 1.0,
            noise: 0.0,
        }
    }
}

/// Observed pairs `(ξ(k-1), ξ(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub pairs: Vec<(DVector<f64>, DVector<f64>)>,
    pub seed: u64,
    pub config: ScenarioConfig,
}

impl ScenarioSet {
    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// Appends samples up to `m` in total; sample `t` depends only on
    /// `(seed, t)`, so a grown set equals one drawn at size `m` directly.
    pub fn extend_to(&mut self, truth: &SystemSpec, m: usize) {
        let step = truth.iteration_matrix();
        let start = self.pairs.len();
        let new: Vec<_> = (start..m)
            .into_par_iter()
            .map(|t| sample_pair(&step, self.seed, t as u64, &self.config))
            .collect();
        self.pairs.extend(new);
    }
}

fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_pair(step: &DMatrix<f64>, seed: u64, t: u64, cfg: &ScenarioConfig) -> (DVector<f64>, DVector<f64>) {
    let mut rng = sample_rng(seed, t);
    let n = step.nrows();
    let prev = DVector::from_fn(n, |_, _| rng.random_range(-cfg.box_size..=cfg.box_size));
    let mut next = step * &prev;
    if cfg.noise > 0.0 {
        for x in next.iter_mut() {
            *x += rng.random_range(-cfg.noise..=cfg.noise);
        }
    }
    (prev, next)
}

/// `m` i.i.d. pairs from the truth system.
pub fn draw_scenarios(truth: &SystemSpec, m: usize, seed: u64, config: ScenarioConfig) -> Result<ScenarioSet> {
    if m == 0 {
        return Err(Error::invalid("sample count", "m must be at least 1"));
    }
    if !(config.box_size > 0.0) || !(config.noise >= 0.0) {
        return Err(Error::invalid("scenario config", "box must be positive, noise non-negative"));
    }
    let mut set = ScenarioSet {
        pairs: Vec::with_capacity(m),
        seed,
        config,
    };
    set.extend_to(truth, m);
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub zeta_hat: DVector<f64>,
    pub d_hat: DMatrix<f64>,
    /// `(1/m) Σ_t ‖X_t‖²` at `zeta_hat`.
    pub gamma_star: f64,
    pub m_used: usize,
    /// Rank of the stacked regressor.
    pub rank: usize,
    /// Full column rank `N²`, so `zeta_hat` is the only minimiser.
    pub unique: bool,
    /// `N² - rank`; `zeta_hat` is the minimum-norm minimiser otherwise.
    pub null_dim: usize,
    /// `d_hat` with rows scaled into `Σ_j |δ_ij| ≤ 1`.
    pub d_projected: DMatrix<f64>,
}

fn stacked(scen: &ScenarioSet, lambda: &SusceptibilityMatrix, l: &InteractingLaplacian) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = l.dim();
    let m = scen.m();
    let mut a = DMatrix::zeros(m * n, n * n);
    let mut b = DVector::zeros(m * n);
    for (t, (prev, next)) in scen.pairs.iter().enumerate() {
        if next.len() != n {
            return Err(Error::Dimension(format!("pair {t} has {} entries, expected {n}", next.len())));
        }
        a.rows_mut(t * n, n).copy_from(&regressor(prev, lambda, l)?);
        b.rows_mut(t * n, n).copy_from(&(prev - next));
    }
    Ok((a, b))
}

/// Mean squared residual `(1/m) Σ_t ‖ξ_t(k) - ξ_t(k-1) + (ξ_t(k-1)' ⊗ ΛL)ζ‖²`.
pub fn residual(scen: &ScenarioSet, lambda: &SusceptibilityMatrix, l: &InteractingLaplacian, zeta: &DVector<f64>) -> Result<f64> {
    if scen.m() == 0 {
        return Err(Error::invalid("scenario set", "empty"));
    }
    let (a, b) = stacked(scen, lambda, l)?;
    if zeta.len() != a.ncols() {
        return Err(Error::Dimension(format!("zeta has {} entries, expected {}", zeta.len(), a.ncols())));
    }
    Ok((a * zeta - b).norm_squared() / scen.m() as f64)
}

/// Scales each row with `Σ_j |δ_ij| > 1` back onto `Σ_j |δ_ij| = 1`.
pub fn project_rows(d: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = d.clone();
    for mut row in out.row_iter_mut() {
        let s: f64 = row.iter().map(|x| x.abs()).sum();
        if s > 1.0 {
            row /= s;
        }
    }
    out
}

/// Least-squares fit of `ζ = vec(D)` with `Λ`, `L` known.
pub fn solve_estimation(scen: &ScenarioSet, lambda: &SusceptibilityMatrix, l: &InteractingLaplacian) -> Result<EstimationResult> {
    if scen.m() == 0 {
        return Err(Error::invalid("scenario set", "empty"));
    }
    let n = l.dim();
    let (a, b) = stacked(scen, lambda, l)?;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = RANK_TOL * smax.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let zeta_hat = svd
        .solve(&b, cutoff)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let gamma_star = (&a * &zeta_hat - &b).norm_squared() / scen.m() as f64;
    let d_hat = unvec(&zeta_hat, n, n)?;
    if rank < n * n {
        log::info!("regressor rank {rank} < {}; minimum-norm estimate reported", n * n);
    }
    Ok(EstimationResult {
        d_projected: project_rows(&d_hat),
        zeta_hat,
        d_hat,
        gamma_star,
        m_used: scen.m(),
        rank,
        unique: rank == n * n,
        null_dim: n * n - rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Config {
    pub gamma0: f64,
    pub m0: usize,
    pub m_cap: usize,
    pub seed: u64,
    pub scenario: ScenarioConfig,
}

impl Default for Algorithm1Config {
    fn default() -> Self {
        Self {
            gamma0: 1e-12,
            m0: 1,
            m_cap: 1000,
            seed: 0,
            scenario: ScenarioConfig::default(),
        }
    }
}

/// Grows the scenario set one sample at a time from `m0` until
/// `gamma_star ≤ gamma0`.
pub fn algorithm1(truth: &SystemSpec, cfg: &Algorithm1Config) -> Result<(usize, EstimationResult)> {
    if !(cfg.gamma0 > 0.0) {
        return Err(Error::invalid("gamma0", "must be positive"));
    }
    if cfg.m0 == 0 || cfg.m0 > cfg.m_cap {
        return Err(Error::invalid("sample counts", "need 1 ≤ m0 ≤ m_cap"));
    }
    let mut scen = draw_scenarios(truth, cfg.m0, cfg.seed, cfg.scenario)?;
    loop {
        let res = solve_estimation(&scen, &truth.lambda, &truth.laplacian)?;
        log::debug!("m = {}: gamma* = {:e}", scen.m(), res.gamma_star);
        if res.gamma_star <= cfg.gamma0 {
            return Ok((scen.m(), res));
        }
        if scen.m() >= cfg.m_cap {
            return Err(Error::SampleCapExhausted {
                m_cap: cfg.m_cap,
                gamma: res.gamma_star,
                gamma0: cfg.gamma0,
            });
        }
        scen.extend_to(truth, scen.m() + 1);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    /// `Σ_{ℓ<d} C(m,ℓ) ε^ℓ (1-ε)^{m-ℓ}`.
    CampiGaratti,
    /// `Σ_{ℓ≤m} C(d,ℓ) ε^ℓ (1-ε)^{m-ℓ}`.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBoundQuery {
    pub d: u64,
    pub epsilon: f64,
    pub beta: f64,
    pub formula: BoundFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBound {
    pub m: u64,
    /// Tail value at `m` (at most `beta`).
    pub tail: f64,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Binomial tail of the chosen formula at `m`.
pub fn bound_tail(d: u64, epsilon: f64, m: u64, formula: BoundFormula) -> f64 {
    let (le, l1e) = (epsilon.ln(), (-epsilon).ln_1p());
    let log_tail = match formula {
        BoundFormula::CampiGaratti => {
            log_sum_exp((0..d.min(m + 1)).map(|k| ln_binomial(m, k) + k as f64 * le + (m - k) as f64 * l1e))
        }
        BoundFormula::PaperLiteral => {
            log_sum_exp((0..=m.min(d)).map(|k| ln_binomial(d, k) + k as f64 * le + (m - k) as f64 * l1e))
        }
    };
    log_tail.exp().min(1.0)
}

/// Smallest `m` whose tail is at most `beta`.
pub fn sample_bound(q: &SampleBoundQuery) -> Result<SampleBound> {
    if !(q.epsilon > 0.0 && q.epsilon < 1.0) {
        return Err(Error::invalid("epsilon", format!("{} not in (0, 1)", q.epsilon)));
    }
    if !(q.beta > 0.0 && q.beta < 1.0) {
        return Err(Error::invalid("beta", format!("{} not in (0, 1)", q.beta)));
    }
    if q.d == 0 {
        return Err(Error::invalid("dimension", "d must be at least 1"));
    }
    // both tails are at least (1-ε)^m
    let guess = match q.formula {
        BoundFormula::CampiGaratti => (q.beta.ln() / (-q.epsilon).ln_1p()).floor().max(1.0) as u64,
        BoundFormula::PaperLiteral => 1,
    };
    let mut m = guess.max(1);
    loop {
        let tail = bound_tail(q.d, q.epsilon, m, q.formula);
        if tail <= q.beta {
            return Ok(SampleBound { m, tail });
        }
        m += 1;
    }
}

/// Fraction of `trials` fresh batches of `batch` samples whose mean
/// squared residual at `zeta` exceeds `gamma_star` (plus a rounding margin).
pub fn empirical_violation(
    zeta: &DVector<f64>,
    gamma_star: f64,
    truth: &SystemSpec,
    trials: usize,
    batch: usize,
    seed: u64,
    config: ScenarioConfig,
) -> Result<f64> {
    if trials == 0 || batch == 0 {
        return Err(Error::invalid("trials", "trials and batch size must be at least 1"));
    }
    let tol = 1e-12 + 1e-9 * gamma_star.abs();
    let exceed = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let batch_seed = sample_rng(seed, trial as u64).random::<u64>();
            let scen = draw_scenarios(truth, batch, batch_seed, config)?;
            Ok(residual(&scen, &truth.lambda, &truth.laplacian, zeta)? > gamma_star + tol)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    Ok(exceed as f64 / trials as f64)
}
