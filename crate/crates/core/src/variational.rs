//! Variational algorithms: QAOA over diagonal cost functions, a generic
//! hybrid quantum-classical optimization loop, and simulated adiabatic
//! annealing schedules.
//!
//! Conventions. A cost function is a diagonal operator C(z) = sum_k C_k(z)
//! assembled from 0/1 clause indicators over n-bit strings, with n capped at
//! 20 so the maximum is always available by brute force. A depth-p QAOA
//! circuit starts from the uniform superposition and alternates the diagonal
//! phase e^{-i gamma C} with the transverse mixer prod_j e^{-i beta X_j};
//! gamma lives in [0, 2pi) and beta in [0, pi), enforced by wrap-around.
//!
//! The classical outer loop is a bounded Nelder-Mead simplex with seeded
//! restarts (a finite-difference gradient descent is available as an
//! alternative method). Restarts of `qaoa_optimize` run on threads; every
//! restart and every shot-sampled evaluation draws from its own
//! deterministic rng stream, so results do not depend on scheduling.
//!
//! Annealing interpolates H(t) = (1 - beta(t)) H_S + beta(t) H_E along a
//! monotone ramp and integrates with a first-order split step evaluated at
//! the midpoint ramp value; the step count must keep the per-step splitting
//! error within `ANNEAL_STEP_ERROR_BUDGET`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::{apply_1q, apply_h, matrices};
use crate::linalg::{cis, eigh, hermiticity_defect, svd, CMat, CVec};
use crate::rng::{rng_stream, SimRng};
use crate::state::StateVector;

/// Largest problem size for which the cost maximum is found by brute force.
pub const COST_QUBIT_CAP: usize = 20;

/// Per-step operator-norm budget for the annealing split integrator.
pub const ANNEAL_STEP_ERROR_BUDGET: f64 = 1e-6;

// Disjoint rng stream tags so restart seeding, per-evaluation shot noise,
// and final readout sampling never collide.
const STREAM_INIT: u64 = 1 << 56;
const STREAM_EVAL: u64 = 2 << 56;
const STREAM_READOUT: u64 = 3 << 56;

/// Diagonal cost operator C(z) = sum_k C_k(z) over computational basis
/// strings, stored as its full diagonal.
#[derive(Clone, Debug)]
pub struct CostHamiltonian {
    values: Vec<f64>,
    n_qubits: usize,
    n_clauses: usize,
}

impl CostHamiltonian {
    /// Builds C from clause indicator functions; clause k contributes 1 to
    /// C(z) exactly when `clauses[k](z)` holds.
    pub fn from_indicators(n_qubits: usize, clauses: &[&dyn Fn(usize) -> bool]) -> Result<Self> {
        if n_qubits == 0 || n_qubits > COST_QUBIT_CAP {
            return Err(Error::InvalidArgument(format!(
                "cost needs between 1 and {COST_QUBIT_CAP} qubits, got {n_qubits}"
            )));
        }
        let dim = 1usize << n_qubits;
        let values = (0..dim)
            .map(|z| clauses.iter().filter(|c| c(z)).count() as f64)
            .collect();
        Ok(Self {
            values,
            n_qubits,
            n_clauses: clauses.len(),
        })
    }

    /// MaxCut cost: one clause per edge, satisfied when the endpoints get
    /// different bits. Vertex v is bit v of z.
    pub fn maxcut(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_vertices == 0 || n_vertices > COST_QUBIT_CAP {
            return Err(Error::InvalidArgument(format!(
                "maxcut needs between 1 and {COST_QUBIT_CAP} vertices, got {n_vertices}"
            )));
        }
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidArgument(format!(
                    "self-loop ({u}, {v}) can never be cut"
                )));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n_vertices}"
                )));
            }
        }
        let dim = 1usize << n_vertices;
        let values = (0..dim)
            .map(|z| {
                edges
                    .iter()
                    .filter(|&&(u, v)| ((z >> u) ^ (z >> v)) & 1 == 1)
                    .count() as f64
            })
            .collect();
        Ok(Self {
            values,
            n_qubits: n_vertices,
            n_clauses: edges.len(),
        })
    }

    /// Parses an edge-list text, one `u v` pair per line; blank lines and
    /// lines starting with `#` are skipped. The vertex count is one past the
    /// largest index seen.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n_vertices = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "edge list line {}: expected two vertex indices, got {:?}",
                    lineno + 1,
                    line
                )));
            }
            let mut pair = [0usize; 2];
            for (slot, field) in pair.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "edge list line {}: {:?} is not a vertex index",
                        lineno + 1,
                        field
                    ))
                })?;
            }
            n_vertices = n_vertices.max(pair[0] + 1).max(pair[1] + 1);
            edges.push((pair[0], pair[1]));
        }
        if edges.is_empty() {
            return Err(Error::InvalidArgument(
                "edge list contains no edges".into(),
            ));
        }
        Self::maxcut(n_vertices, &edges)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clauses(&self) -> usize {
        self.n_clauses
    }

    /// Full diagonal of C in basis order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, z: usize) -> Result<f64> {
        self.values
            .get(z)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                idx: z,
                dim: self.values.len(),
            })
    }

    /// Brute-force maximum and its first attaining bitstring.
    pub fn maximum(&self) -> (f64, usize) {
        let mut best = (self.values[0], 0usize);
        for (z, &v) in self.values.iter().enumerate().skip(1) {
            if v > best.0 {
                best = (v, z);
            }
        }
        best
    }

    /// Same clause structure with every value multiplied by `factor` > 0.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            n_qubits: self.n_qubits,
            n_clauses: self.n_clauses,
        })
    }

    /// Exact expectation <state|C|state> through the probability vector.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "cost acts on {} qubits, state has {}",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        Ok(state
            .probabilities()
            .iter()
            .zip(&self.values)
            .map(|(p, v)| p * v)
            .sum())
    }

    /// Unbiased shot estimate of <C>: measure `shots` basis strings and
    /// average their cost values.
    pub fn sampled_expectation(
        &self,
        state: &StateVector,
        shots: usize,
        rng: &mut SimRng,
    ) -> Result<f64> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "cost acts on {} qubits, state has {}",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        if shots == 0 {
            return Err(Error::InvalidArgument("shot count must be positive".into()));
        }
        let mut acc = 0.0;
        for _ in 0..shots {
            acc += self.values[state.sample_index(rng)];
        }
        Ok(acc / shots as f64)
    }
}

/// Layer angles for a depth-p QAOA circuit; construction wraps gamma into
/// [0, 2pi) and beta into [0, pi).
#[derive(Clone, Debug, PartialEq)]
pub struct QaoaParams {
    gamma: Vec<f64>,
    beta: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if gamma.len() != beta.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} gamma angles vs {} beta angles",
                gamma.len(),
                beta.len()
            )));
        }
        if gamma.iter().chain(&beta).any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(Self {
            gamma: gamma.into_iter().map(|g| g.rem_euclid(2.0 * PI)).collect(),
            beta: beta.into_iter().map(|b| b.rem_euclid(PI)).collect(),
        })
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

/// Multiplies each amplitude by e^{-i gamma C(z)}; the phase is applied per
/// amplitude, never through a dense matrix.
pub fn apply_cost_phase(
    cost: &CostHamiltonian,
    gamma: f64,
    state: &StateVector,
) -> Result<StateVector> {
    if state.n_qubits() != cost.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "cost acts on {} qubits, state has {}",
            cost.n_qubits,
            state.n_qubits()
        )));
    }
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument("gamma must be finite".into()));
    }
    let amps: Vec<Complex64> = state
        .amps()
        .iter()
        .zip(&cost.values)
        .map(|(a, &c)| a * cis(-gamma * c))
        .collect();
    StateVector::from_amplitudes(amps)
}

/// Applies the transverse mixer prod_j e^{-i beta X_j} in place.
pub fn apply_mixer(state: &mut StateVector, beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::InvalidArgument("beta must be finite".into()));
    }
    // rx(phi) = e^{-i phi X/2}, so e^{-i beta X} = rx(2 beta).
    let u = matrices::rx(2.0 * beta);
    for q in 0..state.n_qubits() {
        apply_1q(state, &u, q)?;
    }
    Ok(())
}

/// Prepares |gamma, beta> = U_B(beta_p) U_C(gamma_p) ... U_B(beta_1)
/// U_C(gamma_1) |s> from the uniform superposition |s>.
pub fn qaoa_state(cost: &CostHamiltonian, params: &QaoaParams) -> Result<StateVector> {
    let mut state = StateVector::basis_state(cost.n_qubits, 0)?;
    for q in 0..cost.n_qubits {
        apply_h(&mut state, q)?;
    }
    for layer in 0..params.p() {
        state = apply_cost_phase(cost, params.gamma[layer], &state)?;
        apply_mixer(&mut state, params.beta[layer])?;
    }
    Ok(state)
}

/// Exact <C> of the depth-p QAOA state.
pub fn qaoa_expectation(cost: &CostHamiltonian, params: &QaoaParams) -> Result<f64> {
    cost.expectation(&qaoa_state(cost, params)?)
}

/// Exact depth-1 landscape over a parameter grid; entry [i][j] is <C> at
/// (gammas[i], betas[j]).
pub fn qaoa_landscape(
    cost: &CostHamiltonian,
    gammas: &[f64],
    betas: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let mut row = Vec::with_capacity(betas.len());
        for &b in betas {
            row.push(qaoa_expectation(cost, &QaoaParams::new(vec![g], vec![b])?)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Grid cell of the strictly largest landscape entry, scanning rows first.
pub fn landscape_argmax(landscape: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0usize, 0usize);
    let mut best_val = f64::NEG_INFINITY;
    for (i, row) in landscape.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
    }
    best
}

/// Classical optimizer backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMethod {
    /// Bounded Nelder-Mead simplex; the default.
    Simplex,
    /// Steepest descent on central finite differences with backtracking.
    FiniteDifferenceDescent,
}

/// How objective values are obtained from a prepared state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Full expectation value from the statevector.
    Exact,
    /// Mean of this many seeded measurement samples per evaluation.
    Shots(usize),
}

/// Knobs shared by `qaoa_optimize` and `hybrid_loop`. The evaluation cap and
/// the stall rule (relative improvement below `tolerance` for `patience`
/// consecutive iterations) both apply per restart.
#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_evaluations: usize,
    pub tolerance: f64,
    pub patience: usize,
    pub method: OptMethod,
    pub mode: EvalMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_evaluations: 2000,
            tolerance: 1e-6,
            patience: 20,
            method: OptMethod::Simplex,
            mode: EvalMode::Exact,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("need at least one restart".into()));
        }
        if self.max_evaluations < 4 {
            return Err(Error::InvalidArgument(
                "evaluation budget below 4 cannot move a simplex".into(),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be positive".into()));
        }
        if let EvalMode::Shots(0) = self.mode {
            return Err(Error::InvalidArgument("shot count must be positive".into()));
        }
        Ok(())
    }
}

/// One optimizer trajectory: best point, per-iteration best values, and
/// whether the stall rule fired before the evaluation cap.
struct Trajectory {
    x: Vec<f64>,
    value: f64,
    history: Vec<f64>,
    evaluations: usize,
    converged: bool,
}

fn clamp_into(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidArgument(
            "optimizer needs at least one parameter".into(),
        ));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "bad parameter box [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

fn draw_initial(bounds: &[(f64, f64)], rng: &mut SimRng) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
        .collect()
}

fn minimize_trajectory(
    objective: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptimizerConfig,
) -> Result<Trajectory> {
    match cfg.method {
        OptMethod::Simplex => nelder_mead(objective, x0, bounds, cfg),
        OptMethod::FiniteDifferenceDescent => fd_descent(objective, x0, bounds, cfg),
    }
}

// Relative-improvement stall counter shared by both backends.
fn stalled(prev: f64, best: f64, tolerance: f64) -> bool {
    prev - best <= tolerance * prev.abs().max(1.0)
}

fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptimizerConfig,
) -> Result<Trajectory> {
    let dim = x0.len();
    let budget = cfg.max_evaluations;
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        f(x)
    };

    if dim == 0 {
        let value = eval(&[], &mut evals)?;
        return Ok(Trajectory {
            x: Vec::new(),
            value,
            history: vec![value],
            evaluations: evals,
            converged: true,
        });
    }

    // Initial simplex: x0 plus one vertex per axis, displaced a quarter of
    // the box span, flipped inward when that would leave the box.
    let mut start = x0.to_vec();
    clamp_into(&mut start, bounds);
    let mut pts = vec![start.clone()];
    for i in 0..dim {
        let step = 0.25 * (bounds[i].1 - bounds[i].0);
        let mut v = start.clone();
        v[i] = if v[i] + step <= bounds[i].1 {
            v[i] + step
        } else {
            v[i] - step
        };
        pts.push(v);
    }
    let mut vals = Vec::with_capacity(dim + 1);
    for p in &pts {
        vals.push(eval(p, &mut evals)?);
    }

    let mut history = Vec::new();
    let mut stall = 0usize;
    let mut prev_best = f64::INFINITY;
    let mut converged = false;

    'outer: loop {
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("objective was NaN"));
        pts = order.iter().map(|&k| pts[k].clone()).collect();
        vals = order.iter().map(|&k| vals[k]).collect();

        let best = vals[0];
        history.push(best);
        if stalled(prev_best, best, cfg.tolerance) {
            stall += 1;
            if stall >= cfg.patience {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
        prev_best = best;
        if evals >= budget {
            break;
        }

        let worst = vals[dim];
        let second_worst = vals[dim - 1];
        let mut centroid = vec![0.0; dim];
        for p in pts.iter().take(dim) {
            for (c, &pi) in centroid.iter_mut().zip(p) {
                *c += pi / dim as f64;
            }
        }

        let blend = |from: &[f64], toward: &[f64], t: f64| -> Vec<f64> {
            let mut v: Vec<f64> = from
                .iter()
                .zip(toward)
                .map(|(&a, &b)| a + t * (b - a))
                .collect();
            clamp_into(&mut v, bounds);
            v
        };

        // Reflection.
        let xr = blend(&centroid, &pts[dim], -alpha);
        let fr = eval(&xr, &mut evals)?;
        if fr < best {
            if evals >= budget {
                pts[dim] = xr;
                vals[dim] = fr;
                continue;
            }
            // Expansion.
            let xe = blend(&centroid, &xr, gamma);
            let fe = eval(&xe, &mut evals)?;
            if fe < fr {
                pts[dim] = xe;
                vals[dim] = fe;
            } else {
                pts[dim] = xr;
                vals[dim] = fr;
            }
            continue;
        }
        if fr < second_worst {
            pts[dim] = xr;
            vals[dim] = fr;
            continue;
        }
        if evals >= budget {
            break;
        }
        // Contraction, outside when the reflection beat the worst vertex.
        let xc = if fr < worst {
            blend(&centroid, &xr, rho)
        } else {
            blend(&centroid, &pts[dim], rho)
        };
        let fc = eval(&xc, &mut evals)?;
        if fc < worst.min(fr) {
            pts[dim] = xc;
            vals[dim] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for k in 1..=dim {
            if evals >= budget {
                break 'outer;
            }
            let shrunk = blend(&pts[0], &pts[k], sigma);
            pts[k] = shrunk;
            vals[k] = eval(&pts[k], &mut evals)?;
        }
    }

    let mut best_idx = 0;
    for k in 1..pts.len() {
        if vals[k] < vals[best_idx] {
            best_idx = k;
        }
    }
    Ok(Trajectory {
        x: pts[best_idx].clone(),
        value: vals[best_idx],
        history,
        evaluations: evals,
        converged,
    })
}

fn fd_descent(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    bounds: &[(f64, f64)],
    cfg: &OptimizerConfig,
) -> Result<Trajectory> {
    let dim = x0.len();
    let budget = cfg.max_evaluations;
    let h = 1e-5;

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        f(x)
    };

    let mut x = x0.to_vec();
    clamp_into(&mut x, bounds);
    let mut fx = eval(&x, &mut evals)?;
    let mut history = vec![fx];
    let mut lr = 0.5;
    let mut stall = 0usize;
    let mut converged = false;

    'outer: while evals < budget {
        // Central differences; probe points stay inside the box, so gradient
        // components can flatten at active bounds, which is the intended
        // projected-descent behavior.
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            if evals + 2 > budget {
                break 'outer;
            }
            let mut xp = x.clone();
            xp[i] = (xp[i] + h).min(bounds[i].1);
            let mut xm = x.clone();
            xm[i] = (xm[i] - h).max(bounds[i].0);
            let span = xp[i] - xm[i];
            if span <= 0.0 {
                continue;
            }
            grad[i] = (eval(&xp, &mut evals)? - eval(&xm, &mut evals)?) / span;
        }
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() < 1e-10 {
            converged = true;
            history.push(fx);
            break;
        }

        let mut accepted = false;
        let mut t = lr;
        for _ in 0..30 {
            if evals >= budget {
                break 'outer;
            }
            let mut xt: Vec<f64> = x.iter().zip(&grad).map(|(&xi, &g)| xi - t * g).collect();
            clamp_into(&mut xt, bounds);
            let ft = eval(&xt, &mut evals)?;
            if ft <= fx - 1e-4 * t * gnorm2 {
                x = xt;
                fx = ft;
                lr = (t * 1.5).min(2.0);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            lr = (lr * 0.5).max(1e-12);
        }

        let prev = *history.last().expect("history starts non-empty");
        history.push(fx);
        if stalled(prev, fx, cfg.tolerance) {
            stall += 1;
            if stall >= cfg.patience {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    Ok(Trajectory {
        x,
        value: fx,
        history,
        evaluations: evals,
        converged,
    })
}

/// Result of a multi-restart QAOA optimization.
#[derive(Clone, Debug)]
pub struct QaoaOutcome {
    pub n_qubits: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    /// Exact <C> at the returned angles, even when the search ran on shots.
    pub expectation: f64,
    /// Running best objective over all restart trajectories in restart
    /// order; non-decreasing by construction. Under `Shots` these are the
    /// sampled estimates seen by the optimizer.
    pub history: Vec<f64>,
    pub evaluations: usize,
    /// True when at least one restart met the stall rule before its cap.
    pub converged: bool,
    /// Highest-value string among 256 seeded measurements of the final state.
    pub best_bitstring: usize,
    pub best_bitstring_value: f64,
    /// Brute-force maximum of C for comparison.
    pub max_value: f64,
}

#[derive(Serialize)]
struct QaoaOutcomeJson<'a> {
    p: usize,
    gamma: &'a [f64],
    beta: &'a [f64],
    #[serde(rename = "expC")]
    exp_c: f64,
    best_bitstring: String,
    maxcut_bruteforce: f64,
}

impl QaoaOutcome {
    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    /// Bitstring rendered with vertex n-1 leftmost (plain binary).
    pub fn bitstring_text(&self) -> String {
        format!("{:0width$b}", self.best_bitstring, width = self.n_qubits)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&QaoaOutcomeJson {
            p: self.p(),
            gamma: &self.gamma,
            beta: &self.beta,
            exp_c: self.expectation,
            best_bitstring: self.bitstring_text(),
            maxcut_bruteforce: self.max_value,
        })
        .expect("outcome serialization cannot fail")
    }
}

const READOUT_SHOTS: usize = 256;

fn params_from_flat(x: &[f64], p: usize) -> Result<QaoaParams> {
    QaoaParams::new(x[..p].to_vec(), x[p..].to_vec())
}

/// Maximizes <C> over depth-p angles with seeded multi-restart search; the
/// restarts run on threads and are deterministic per (seed, restart index).
pub fn qaoa_optimize(
    cost: &CostHamiltonian,
    p: usize,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<QaoaOutcome> {
    config.validate()?;
    if p == 0 {
        return Err(Error::InvalidArgument(
            "qaoa_optimize needs at least one layer".into(),
        ));
    }
    let mut bounds = vec![(0.0, 2.0 * PI); p];
    bounds.extend(vec![(0.0, PI); p]);

    let run_one = |restart: usize| -> Result<Trajectory> {
        let mut rng = rng_stream(seed, STREAM_INIT | restart as u64);
        let x0 = draw_initial(&bounds, &mut rng);
        let mut counter: u64 = 0;
        let mut objective = |x: &[f64]| -> Result<f64> {
            let params = params_from_flat(x, p)?;
            let value = match config.mode {
                EvalMode::Exact => qaoa_expectation(cost, &params)?,
                EvalMode::Shots(k) => {
                    let state = qaoa_state(cost, &params)?;
                    let stream = STREAM_EVAL | ((restart as u64) << 32) | counter;
                    counter += 1;
                    cost.sampled_expectation(&state, k, &mut rng_stream(seed, stream))?
                }
            };
            Ok(-value)
        };
        minimize_trajectory(&mut objective, &x0, &bounds, config)
    };

    let results: Vec<Result<Trajectory>> = if config.restarts == 1 {
        vec![run_one(0)]
    } else {
        std::thread::scope(|scope| {
            let run_one = &run_one;
            let handles: Vec<_> = (0..config.restarts)
                .map(|r| scope.spawn(move || run_one(r)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("restart thread panicked"))
                .collect()
        })
    };

    let mut trajectories = Vec::with_capacity(results.len());
    for r in results {
        trajectories.push(r?);
    }

    let mut best = 0usize;
    for k in 1..trajectories.len() {
        if trajectories[k].value < trajectories[best].value {
            best = k;
        }
    }
    let mut history = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for t in &trajectories {
        for &v in &t.history {
            running = running.max(-v);
            history.push(running);
        }
    }
    let evaluations = trajectories.iter().map(|t| t.evaluations).sum();
    let converged = trajectories.iter().any(|t| t.converged);

    let params = params_from_flat(&trajectories[best].x, p)?;
    let state = qaoa_state(cost, &params)?;
    let expectation = cost.expectation(&state)?;
    let mut rng = rng_stream(seed, STREAM_READOUT);
    let mut best_bitstring = state.sample_index(&mut rng);
    for _ in 1..READOUT_SHOTS {
        let z = state.sample_index(&mut rng);
        if cost.values[z] > cost.values[best_bitstring] {
            best_bitstring = z;
        }
    }
    let (max_value, _) = cost.maximum();

    Ok(QaoaOutcome {
        n_qubits: cost.n_qubits,
        gamma: params.gamma,
        beta: params.beta,
        expectation,
        history,
        evaluations,
        converged,
        best_bitstring,
        best_bitstring_value: cost.values[best_bitstring],
        max_value,
    })
}

/// Unbiased shot estimate of <state|observable|state>: measure in the
/// observable eigenbasis and average the sampled eigenvalues.
pub fn sampled_expectation(
    state: &StateVector,
    observable: &CMat,
    shots: usize,
    rng: &mut SimRng,
) -> Result<f64> {
    let dim = state.amps().len();
    if observable.nrows() != dim || observable.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "observable is {}x{}, state dimension {dim}",
            observable.nrows(),
            observable.ncols()
        )));
    }
    if hermiticity_defect(observable) > 1e-9 {
        return Err(Error::InvalidArgument(
            "observable must be Hermitian".into(),
        ));
    }
    let (evals, evecs) = eigh(observable);
    sampled_eigen_estimate(state, &evals, &evecs, shots, rng)
}

fn sampled_eigen_estimate(
    state: &StateVector,
    evals: &[f64],
    evecs: &CMat,
    shots: usize,
    rng: &mut SimRng,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    let w = evecs.adjoint() * state.to_cvec();
    let probs: Vec<f64> = w.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    for _ in 0..shots {
        let mut u = rng.gen::<f64>() * total;
        let mut picked = evals.len() - 1;
        for (j, &p) in probs.iter().enumerate() {
            if u < p {
                picked = j;
                break;
            }
            u -= p;
        }
        acc += evals[picked];
    }
    Ok(acc / shots as f64)
}

/// Result of a hybrid minimization run.
#[derive(Clone, Debug)]
pub struct HybridOutcome {
    pub theta: Vec<f64>,
    /// Objective value at `theta` as seen by the optimizer (exact mode
    /// re-evaluates; shots mode reports the final sampled estimate's point).
    pub value: f64,
    /// Running best (lowest) objective across restarts; non-increasing.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes <psi(theta)|L|psi(theta)> over a box with seeded restarts.
/// Restart 0 starts from `initial`; later restarts draw uniform starts from
/// their own rng streams. The builder runs on the calling thread only, so it
/// may capture non-thread-safe resources.
pub fn hybrid_loop(
    builder: &dyn Fn(&[f64]) -> Result<StateVector>,
    observable: &CMat,
    initial: &[f64],
    bounds: &[(f64, f64)],
    config: &OptimizerConfig,
    seed: u64,
) -> Result<HybridOutcome> {
    config.validate()?;
    validate_bounds(bounds)?;
    if initial.len() != bounds.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} initial parameters vs {} boxes",
            initial.len(),
            bounds.len()
        )));
    }
    if observable.nrows() != observable.ncols() {
        return Err(Error::InvalidArgument(
            "observable must be square".into(),
        ));
    }
    if hermiticity_defect(observable) > 1e-9 {
        return Err(Error::InvalidArgument(
            "observable must be Hermitian".into(),
        ));
    }
    let eigen = match config.mode {
        EvalMode::Shots(_) => Some(eigh(observable)),
        EvalMode::Exact => None,
    };

    let mut trajectories = Vec::with_capacity(config.restarts);
    for restart in 0..config.restarts {
        let x0 = if restart == 0 {
            let mut v = initial.to_vec();
            clamp_into(&mut v, bounds);
            v
        } else {
            draw_initial(
                bounds,
                &mut rng_stream(seed, STREAM_INIT | restart as u64),
            )
        };
        let mut counter: u64 = 0;
        let mut objective = |x: &[f64]| -> Result<f64> {
            let state = builder(x)?;
            if state.amps().len() != observable.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "builder produced dimension {}, observable is {}x{}",
                    state.amps().len(),
                    observable.nrows(),
                    observable.ncols()
                )));
            }
            match (config.mode, &eigen) {
                (EvalMode::Exact, _) => state.expectation(observable),
                (EvalMode::Shots(k), Some((evals, evecs))) => {
                    let stream = STREAM_EVAL | ((restart as u64) << 32) | counter;
                    counter += 1;
                    sampled_eigen_estimate(&state, evals, evecs, k, &mut rng_stream(seed, stream))
                }
                (EvalMode::Shots(_), None) => unreachable!("eigen cached for shots mode"),
            }
        };
        trajectories.push(minimize_trajectory(&mut objective, &x0, bounds, config)?);
    }

    let mut best = 0usize;
    for k in 1..trajectories.len() {
        if trajectories[k].value < trajectories[best].value {
            best = k;
        }
    }
    let mut history = Vec::new();
    let mut running = f64::INFINITY;
    for t in &trajectories {
        for &v in &t.history {
            running = running.min(v);
            history.push(running);
        }
    }
    Ok(HybridOutcome {
        theta: trajectories[best].x.clone(),
        value: trajectories[best].value,
        history,
        evaluations: trajectories.iter().map(|t| t.evaluations).sum(),
        converged: trajectories.iter().any(|t| t.converged),
    })
}

/// Monotone interpolation ramp beta(s) with beta(0) = 0 and beta(1) = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ramp {
    Linear,
    /// Half-cosine ramp with zero slope at both endpoints.
    Smooth,
}

impl Ramp {
    pub fn value(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Ramp::Linear => s,
            Ramp::Smooth => 0.5 * (1.0 - (PI * s).cos()),
        }
    }
}

/// Interpolating Hamiltonian H(t) = (1 - beta(t)) H_S + beta(t) H_E on a
/// fixed time grid, with the step count validated against the per-step
/// splitting error budget dt^2 |[H_S, H_E]| / 8.
#[derive(Clone, Debug)]
pub struct AnnealSchedule {
    h_start: CMat,
    h_end: CMat,
    total_time: f64,
    steps: usize,
    ramp: Ramp,
}

fn check_hamiltonian_pair(h_start: &CMat, h_end: &CMat) -> Result<()> {
    let dim = h_start.nrows();
    if h_start.ncols() != dim || h_end.nrows() != dim || h_end.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "endpoint Hamiltonians must be square and equal-sized, got {}x{} and {}x{}",
            h_start.nrows(),
            h_start.ncols(),
            h_end.nrows(),
            h_end.ncols()
        )));
    }
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    for (name, h) in [("start", h_start), ("end", h_end)] {
        let defect = hermiticity_defect(h);
        if defect > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "{name} Hamiltonian is not Hermitian (defect {defect:.3e})"
            )));
        }
    }
    Ok(())
}

fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    let c = a * b - b * a;
    let (_, sigma, _) = svd(&c);
    sigma.first().copied().unwrap_or(0.0)
}

impl AnnealSchedule {
    pub fn new(
        h_start: CMat,
        h_end: CMat,
        total_time: f64,
        steps: usize,
        ramp: Ramp,
    ) -> Result<Self> {
        check_hamiltonian_pair(&h_start, &h_end)?;
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "total time must be positive and finite, got {total_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one step".into()));
        }
        let comm = commutator_norm(&h_start, &h_end);
        let dt = total_time / steps as f64;
        let per_step = dt * dt * comm / 8.0;
        if per_step > ANNEAL_STEP_ERROR_BUDGET * (1.0 + 1e-9) {
            let needed = Self::steps_for_budget(&h_start, &h_end, total_time)?;
            return Err(Error::InvalidArgument(format!(
                "per-step split error {per_step:.3e} exceeds the {ANNEAL_STEP_ERROR_BUDGET:.0e} budget; use at least {needed} steps"
            )));
        }
        Ok(Self {
            h_start,
            h_end,
            total_time,
            steps,
            ramp,
        })
    }

    /// Smallest step count meeting the per-step splitting error budget.
    pub fn steps_for_budget(h_start: &CMat, h_end: &CMat, total_time: f64) -> Result<usize> {
        check_hamiltonian_pair(h_start, h_end)?;
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "total time must be positive and finite, got {total_time}"
            )));
        }
        let comm = commutator_norm(h_start, h_end);
        if comm < 1e-14 {
            return Ok(1);
        }
        let dt_max = (8.0 * ANNEAL_STEP_ERROR_BUDGET / comm).sqrt();
        Ok(((total_time / dt_max).ceil() as usize).max(1))
    }

    pub fn dim(&self) -> usize {
        self.h_start.nrows()
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ramp(&self) -> Ramp {
        self.ramp
    }

    fn hamiltonian_at(&self, beta: f64) -> CMat {
        let a = Complex64::new(1.0 - beta, 0.0);
        let b = Complex64::new(beta, 0.0);
        &self.h_start * a + &self.h_end * b
    }
}

/// Final state of an annealing run plus its ground-state diagnostics.
#[derive(Clone, Debug)]
pub struct AnnealOutcome {
    pub state: StateVector,
    /// Weight of the final state in the ground space of the end Hamiltonian.
    pub fidelity: f64,
    /// (time, instantaneous ground-space weight) at roughly 101 grid points.
    pub trace: Vec<(f64, f64)>,
    /// Smallest spectral gap seen on the sampled grid.
    pub min_gap: f64,
    /// True when the sampled gap fell below 1e-6; reported, never fatal.
    pub gap_collapsed: bool,
}

// Ground cluster of an ascending spectrum: indices within a small tolerance
// of the least eigenvalue, plus the gap to the first level above it.
fn ground_cluster(evals: &[f64]) -> (usize, f64) {
    let scale = evals.iter().fold(1.0f64, |m, &e| m.max(e.abs()));
    let tol = 1e-9 * scale;
    let mut count = 1;
    while count < evals.len() && evals[count] - evals[0] <= tol {
        count += 1;
    }
    let gap = if count < evals.len() {
        evals[count] - evals[0]
    } else {
        0.0
    };
    (count, gap)
}

fn ground_weight(evecs: &CMat, cluster: usize, psi: &CVec) -> f64 {
    let mut w = 0.0;
    for k in 0..cluster {
        let mut overlap = Complex64::new(0.0, 0.0);
        for r in 0..psi.len() {
            overlap += evecs[(r, k)].conj() * psi[r];
        }
        w += overlap.norm_sqr();
    }
    w
}

fn phase_apply(evecs: &CMat, evecs_dag: &CMat, evals: &[f64], theta: f64, psi: &mut CVec) {
    let mut w = evecs_dag * &*psi;
    for (wj, &lam) in w.iter_mut().zip(evals) {
        *wj *= cis(-theta * lam);
    }
    *psi = evecs * w;
}

/// Integrates the interpolating Hamiltonian from the ground state of H_S
/// with a first-order split step at the midpoint ramp value, tracking the
/// instantaneous ground-space weight and spectral gap along the way.
pub fn adiabatic_evolve(schedule: &AnnealSchedule, s0: &StateVector) -> Result<AnnealOutcome> {
    let dim = schedule.dim();
    if s0.amps().len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "schedule dimension {dim}, state dimension {}",
            s0.amps().len()
        )));
    }
    let (es, vs) = eigh(&schedule.h_start);
    let (ee, ve) = eigh(&schedule.h_end);
    let vs_dag = vs.adjoint();
    let ve_dag = ve.adjoint();

    let mut psi = s0.to_cvec();
    let (start_cluster, _) = ground_cluster(&es);
    let start_weight = ground_weight(&vs, start_cluster, &psi);
    if start_weight < 1.0 - 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "initial state has ground-space weight {start_weight:.12}; it must be a ground state of the start Hamiltonian"
        )));
    }

    let steps = schedule.steps;
    let dt = schedule.total_time / steps as f64;
    let sample_every = (steps / 100).max(1);

    let mut trace = Vec::new();
    let mut min_gap = f64::INFINITY;
    let mut observe = |time: f64, beta: f64, psi: &CVec| {
        let (evals, evecs) = eigh(&schedule.hamiltonian_at(beta));
        let (cluster, gap) = ground_cluster(&evals);
        min_gap = min_gap.min(gap);
        trace.push((time, ground_weight(&evecs, cluster, psi)));
    };
    observe(0.0, schedule.ramp.value(0.0), &psi);

    for i in 0..steps {
        let beta_mid = schedule.ramp.value((i as f64 + 0.5) / steps as f64);
        phase_apply(&vs, &vs_dag, &es, dt * (1.0 - beta_mid), &mut psi);
        phase_apply(&ve, &ve_dag, &ee, dt * beta_mid, &mut psi);
        let done = i + 1;
        if done % sample_every == 0 || done == steps {
            let s = done as f64 / steps as f64;
            observe(s * schedule.total_time, schedule.ramp.value(s), &psi);
        }
    }

    let (end_cluster, _) = ground_cluster(&ee);
    let fidelity = ground_weight(&ve, end_cluster, &psi);
    let gap_collapsed = min_gap < 1e-6;
    Ok(AnnealOutcome {
        state: StateVector::from_cvec(&psi)?,
        fidelity,
        trace,
        min_gap,
        gap_collapsed,
    })
}
