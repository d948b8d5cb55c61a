//! Discrete-time quantum walks and walk-based sample preparation.
//!
//! Two quantizations of a classical Markov chain are provided. Coined walks
//! act on an edge-labelled regular graph with a coin register steering a
//! deterministic shift, `U = S (C x I)`. Szegedy walks act on a doubled
//! vertex register and quantize an arbitrary row-stochastic matrix `P` as a
//! product of two reflections, `W = R2 R1` with `R2 = S R1 S`.
//!
//! Register layout. A coined-walk basis index is `c * n_vertices + v` (coin
//! on the high qubits). A Szegedy basis index is `x * D + y` where `D` is
//! the padded per-register dimension and `x` is the high (row) register.
//! State counts that are not powers of two are padded with absorbing
//! self-loop states, which stay exactly inert under the walk.
//!
//! The quantum analogue of the stationary distribution of a reversible
//! chain is the lifted state `|pi~> = U_P sum_x sqrt(pi_x) |x>|0>`; it is
//! the unique eigenvalue-1 eigenvector of `W` outside the subspace that is
//! orthogonal to both reflection supports. `qmcmc_prepare` exploits this:
//! it anneals through a schedule of chains, projecting onto each chain's
//! stationary state by phase estimation on `W` postselected on readout 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fourier::qpe;
use crate::linalg::{
    dagger, eigh, mat_max_diff, unitarity_defect, unitary_with_first_column, CMat, CVec,
};
use crate::qlinalg::swap_matrix;
use crate::state::StateVector;

/// Edge-labelled cycle graph: label 0 steps back, label 1 steps forward.
pub fn cycle_adjacency(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|v| vec![(v + n - 1) % n, (v + 1) % n]).collect()
}

/// Validate an edge-labelled adjacency list; returns `(n_vertices, degree)`.
///
/// The walk needs a well-defined unitary shift, so every vertex must carry
/// the same number of edge labels and each label must permute the vertices.
fn check_adjacency(adjacency: &[Vec<usize>]) -> Result<(usize, usize)> {
    let n_v = adjacency.len();
    if n_v < 2 || !n_v.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "vertex count {n_v} does not fit a qubit register; pad with isolated self-loop vertices to a power of two"
        )));
    }
    let d = adjacency[0].len();
    for (v, row) in adjacency.iter().enumerate() {
        if row.len() != d {
            return Err(Error::InvalidArgument(format!(
                "graph is not regular: vertex {v} lists {} edges but vertex 0 lists {d}; pad edge labels with self-loops",
                row.len()
            )));
        }
        for &u in row {
            if u >= n_v {
                return Err(Error::IndexOutOfRange { idx: u, dim: n_v });
            }
        }
    }
    for c in 0..d {
        let mut seen = vec![false; n_v];
        for row in adjacency {
            let u = row[c];
            if seen[u] {
                return Err(Error::InvalidArgument(format!(
                    "edge label {c} sends two vertices to {u}; each label must permute the vertices"
                )));
            }
            seen[u] = true;
        }
    }
    Ok((n_v, d))
}

/// Dense one-step coined-walk unitary `U = S (C x I)`.
///
/// `adjacency[v][c]` names the vertex reached from `v` along edge label `c`
/// and `coin` is a unitary on the edge register.
pub fn coin_walk_unitary(adjacency: &[Vec<usize>], coin: &CMat) -> Result<CMat> {
    let (n_v, d) = check_adjacency(adjacency)?;
    if coin.nrows() != d || coin.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "coin is {}x{} but the graph degree is {d}",
            coin.nrows(),
            coin.ncols()
        )));
    }
    if !d.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "degree {d} does not fit a qubit register; pad edge labels with self-loops"
        )));
    }
    let defect = unitarity_defect(coin);
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "coin is not unitary, defect {defect:.3e}"
        )));
    }
    let dim = d * n_v;
    let mut u = CMat::zeros(dim, dim);
    // Column (c_in, v): coin mixes edge labels, then the shift moves v.
    for c_out in 0..d {
        for c_in in 0..d {
            let amp = coin[(c_out, c_in)];
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for v in 0..n_v {
                u[(c_out * n_v + adjacency[v][c_out], c_in * n_v + v)] = amp;
            }
        }
    }
    Ok(u)
}

fn apply_dense(m: &CMat, s: &StateVector) -> Result<StateVector> {
    StateVector::from_cvec(&(m * s.to_cvec()))
}

/// One step of the coined walk on `s`, which lives on coin (high) x vertex
/// (low) registers.
pub fn coin_walk_step(
    adjacency: &[Vec<usize>],
    coin: &CMat,
    s: &StateVector,
) -> Result<StateVector> {
    let u = coin_walk_unitary(adjacency, coin)?;
    if s.dim() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} but the walk acts on {}",
            s.dim(),
            u.nrows()
        )));
    }
    apply_dense(&u, s)
}

/// Probability of each vertex, summed over the coin register.
pub fn position_marginal(s: &StateVector, n_vertices: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_vertices];
    for (i, a) in s.amps().iter().enumerate() {
        p[i % n_vertices] += a.norm_sqr();
    }
    p
}

/// Cesaro-averaged position distribution `(1/T) sum_{s=1..T} P_s(v)`.
///
/// The raw step distributions `P_t` of a unitary walk keep oscillating; the
/// running average is what converges, and is the quantity exposed here.
pub fn coin_walk_cesaro(
    adjacency: &[Vec<usize>],
    coin: &CMat,
    s0: &StateVector,
    t: usize,
) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "need at least one step to average over".into(),
        ));
    }
    let u = coin_walk_unitary(adjacency, coin)?;
    if s0.dim() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} but the walk acts on {}",
            s0.dim(),
            u.nrows()
        )));
    }
    let n_v = adjacency.len();
    let mut psi = s0.to_cvec();
    let mut acc = vec![0.0; n_v];
    for _ in 0..t {
        psi = &u * psi;
        for (i, a) in psi.iter().enumerate() {
            acc[i % n_v] += a.norm_sqr();
        }
    }
    Ok(acc.iter().map(|x| x / t as f64).collect())
}

/// A classical Markov chain packaged with everything the quantizations
/// need: the transition matrix, its stationary distribution, and the gap
/// between the top two eigenvalues.
#[derive(Debug, Clone)]
pub struct MarkovChainSpec {
    /// Row-stochastic transition matrix, `p[(x, y)] = P(x -> y)`.
    pub p: DMatrix<f64>,
    /// Stationary distribution, supplied by the caller or solved from `p`.
    pub pi: Vec<f64>,
    /// `lambda_1 - lambda_2` of the chain (of its additive reversibilization
    /// when the chain is not reversible).
    pub gap: f64,
    /// Whether detailed balance was declared and verified.
    pub reversible: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainJson {
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    #[serde(default)]
    pi: Option<Vec<f64>>,
    #[serde(default)]
    reversible: bool,
}

impl MarkovChainSpec {
    /// Build and validate a chain from transition-matrix rows.
    ///
    /// Rows must sum to 1 within 1e-12. A supplied `pi` is checked for
    /// stationarity; `None` solves `pi^T P = pi^T` directly, which needs the
    /// stationary distribution to be unique. With `reversible` set, detailed
    /// balance `pi_x P_xy = pi_y P_yx` is enforced within 1e-10.
    pub fn new(rows: &[Vec<f64>], pi: Option<Vec<f64>>, reversible: bool) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidArgument(
                "a chain needs at least two states".into(),
            ));
        }
        let mut p = DMatrix::<f64>::zeros(n, n);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {x} has {} entries for {n} states",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (y, &v) in row.iter().enumerate() {
                if !(v >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "transition probability ({x},{y}) = {v} is not a probability"
                    )));
                }
                p[(x, y)] = v;
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "row {x} sums to {sum:.15}, not 1"
                )));
            }
        }
        let pi = match pi {
            Some(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "pi has {} entries for {n} states",
                        v.len()
                    )));
                }
                if v.iter().any(|&w| !(w > 0.0)) {
                    return Err(Error::InvalidArgument(
                        "stationary weights must be strictly positive".into(),
                    ));
                }
                let z: f64 = v.iter().sum();
                if (z - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "pi sums to {z:.12}, not 1"
                    )));
                }
                v
            }
            None => stationary_of(&p)?,
        };
        let mut residual = 0.0f64;
        for y in 0..n {
            let s: f64 = (0..n).map(|x| pi[x] * p[(x, y)]).sum();
            residual = residual.max((s - pi[y]).abs());
        }
        if residual > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "pi is not stationary for P, residual {residual:.3e}"
            )));
        }
        if reversible {
            for x in 0..n {
                for y in 0..n {
                    let d = (pi[x] * p[(x, y)] - pi[y] * p[(y, x)]).abs();
                    if d > 1e-10 {
                        return Err(Error::InvalidArgument(format!(
                            "detailed balance fails at ({x},{y}) by {d:.3e}"
                        )));
                    }
                }
            }
        }
        let gap = spectral_gap(&p, &pi, reversible);
        Ok(Self {
            p,
            pi,
            gap,
            reversible,
        })
    }

    pub fn n_states(&self) -> usize {
        self.p.nrows()
    }

    /// Parse `{"P": [[..]], "pi": [..], "reversible": bool}`; `pi` and
    /// `reversible` are optional, unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ChainJson = serde_json::from_str(text)?;
        Self::new(&raw.p, raw.pi, raw.reversible)
    }
}

/// Solve `pi^T P = pi^T`, `sum pi = 1` by Gaussian elimination on the
/// transposed generator with the last balance equation swapped for the
/// normalization constraint.
fn stationary_of(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let mut a = CMat::zeros(n, n);
    let mut b = CVec::zeros(n);
    for y in 0..n - 1 {
        for x in 0..n {
            let v = p[(x, y)] - if x == y { 1.0 } else { 0.0 };
            a[(y, x)] = Complex64::new(v, 0.0);
        }
    }
    for x in 0..n {
        a[(n - 1, x)] = Complex64::new(1.0, 0.0);
    }
    b[n - 1] = Complex64::new(1.0, 0.0);
    let sol = crate::linalg::solve(&a, &b).ok_or_else(|| {
        Error::InvalidArgument("stationary distribution is not unique; supply pi explicitly".into())
    })?;
    let pi: Vec<f64> = sol.iter().map(|c| c.re).collect();
    if pi.iter().any(|&w| w < 1e-12) {
        return Err(Error::InvalidArgument(
            "solved stationary distribution is not strictly positive; the chain looks reducible"
                .into(),
        ));
    }
    Ok(pi)
}

/// Gap `lambda_1 - lambda_2` via the similarity transform
/// `F = D^{1/2} P D^{-1/2}` with `D = diag(pi)`, which shares the spectrum
/// of `P` and is symmetric exactly when the chain is reversible. For a
/// non-reversible chain the symmetric part of `F` is used, i.e. the gap of
/// the additive reversibilization.
fn spectral_gap(p: &DMatrix<f64>, pi: &[f64], _reversible: bool) -> f64 {
    let n = p.nrows();
    let mut f = CMat::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            f[(x, y)] = Complex64::new(p[(x, y)] * (pi[x] / pi[y]).sqrt(), 0.0);
        }
    }
    let sym = (&f + &dagger(&f)) * Complex64::new(0.5, 0.0);
    let (evals, _) = eigh(&sym);
    evals[n - 1] - evals[n - 2]
}

/// Metropolis chain targeting `weights` (normalized internally): uniform
/// proposal over the other states, acceptance `min(1, pi_y / pi_x)`.
/// Detailed balance holds by construction.
pub fn metropolis_chain(weights: &[f64]) -> Result<MarkovChainSpec> {
    let n = weights.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a chain needs at least two states".into(),
        ));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidArgument(
            "target weights must be strictly positive".into(),
        ));
    }
    let z: f64 = weights.iter().sum();
    let pi: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let mut rows = vec![vec![0.0; n]; n];
    for x in 0..n {
        let mut stay = 1.0;
        for y in 0..n {
            if y == x {
                continue;
            }
            let a = (pi[y] / pi[x]).min(1.0) / (n as f64 - 1.0);
            rows[x][y] = a;
            stay -= a;
        }
        rows[x][x] = stay;
    }
    MarkovChainSpec::new(&rows, Some(pi), true)
}

/// Szegedy walk operator on the doubled register, plus its constituents.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    /// One walk step, `W = R2 R1`.
    pub w: CMat,
    /// Unitary completion of `|x>|0> -> sum_y sqrt(p_xy) |x>|y>`,
    /// block-diagonal in the row register.
    pub u_p: CMat,
    /// Reflection about the span of the `U_P |x>|0>` columns.
    pub r1: CMat,
    /// The swapped reflection `S R1 S`.
    pub r2: CMat,
    /// Register swap `S |x>|y> = |y>|x>`.
    pub s: CMat,
    /// Qubits per register.
    pub register_qubits: usize,
    /// The chain this walk quantizes.
    pub chain: MarkovChainSpec,
    /// True when the stationary eigenstate identity `W |pi~> = |pi~>` was
    /// verified at construction; skipped for non-reversible chains, whose
    /// stationary state need not be fixed.
    pub eigenstate_checked: bool,
}

impl WalkOperator {
    /// Lifted stationary state `U_P sum_x sqrt(pi_x) |x>|0>`.
    pub fn pi_tilde(&self) -> StateVector {
        let d = 1usize << self.register_qubits;
        let mut v = CVec::zeros(d * d);
        for (x, &w) in self.chain.pi.iter().enumerate() {
            v[x * d] = Complex64::new(w.sqrt(), 0.0);
        }
        StateVector::from_cvec(&(&self.u_p * v)).expect("U_P preserves the norm")
    }

    /// Smallest nonzero eigenphase of `W`, read off the eigenvalues of
    /// `(W + W^dag)/2` (the cosines of the phases). Returns pi when every
    /// eigenphase vanishes.
    pub fn phase_gap(&self) -> f64 {
        let hc = (&self.w + &dagger(&self.w)) * Complex64::new(0.5, 0.0);
        let (evals, _) = eigh(&hc);
        let mut gap = std::f64::consts::PI;
        for &c in evals.iter().rev() {
            if c < 1.0 - 1e-9 {
                gap = c.clamp(-1.0, 1.0).acos();
                break;
            }
        }
        gap
    }
}

/// Quantize a Markov chain as a Szegedy walk.
///
/// The state count is padded to a power of two with absorbing self-loops;
/// padded states contribute inert fixed directions only. For a reversible
/// chain the construction verifies `W |pi~> = |pi~>` within 1e-10.
pub fn build_szegedy(chain: &MarkovChainSpec) -> Result<WalkOperator> {
    let n = chain.n_states();
    let nq = usize::BITS as usize - (n - 1).leading_zeros() as usize;
    if 2 * nq > crate::max_qubits() {
        return Err(Error::TooManyQubits {
            requested: 2 * nq,
            cap: crate::max_qubits(),
        });
    }
    let d = 1usize << nq;
    let dim = d * d;
    let mut u_p = CMat::zeros(dim, dim);
    for x in 0..d {
        let mut chi = CVec::zeros(d);
        if x < n {
            for y in 0..n {
                chi[y] = Complex64::new(chain.p[(x, y)].sqrt(), 0.0);
            }
        } else {
            chi[x] = Complex64::new(1.0, 0.0);
        }
        let v_x = unitary_with_first_column(&chi);
        for i in 0..d {
            for j in 0..d {
                u_p[(x * d + i, x * d + j)] = v_x[(i, j)];
            }
        }
    }
    // R1 = 2 Pi_A - I where Pi_A projects onto span{U_P |x>|0>}.
    let mut r1 = CMat::identity(dim, dim) * Complex64::new(-1.0, 0.0);
    for x in 0..d {
        let phi = u_p.column(x * d);
        for i in 0..dim {
            if phi[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                r1[(i, j)] += 2.0 * phi[i] * phi[j].conj();
            }
        }
    }
    let s = swap_matrix(d);
    if mat_max_diff(&(&s * &s), &CMat::identity(dim, dim)) > 1e-12 {
        return Err(Error::Numerical("register swap is not an involution".into()));
    }
    let r2 = &s * &r1 * &s;
    let w = &r2 * &r1;
    let defect = unitarity_defect(&w);
    if defect > 1e-10 {
        return Err(Error::Numerical(format!(
            "walk operator unitarity defect {defect:.3e}"
        )));
    }
    let op = WalkOperator {
        w,
        u_p,
        r1,
        r2,
        s,
        register_qubits: nq,
        chain: chain.clone(),
        eigenstate_checked: chain.reversible,
    };
    if chain.reversible {
        let pt = op.pi_tilde();
        let moved = apply_dense(&op.w, &pt)?;
        let diff = moved.max_abs_diff(&pt)?;
        if diff > 1e-10 {
            return Err(Error::Numerical(format!(
                "lifted stationary state moved by {diff:.3e} under the walk"
            )));
        }
    }
    Ok(op)
}

/// Result of the annealed walk pipeline.
#[derive(Debug, Clone)]
pub struct QmcmcOutcome {
    /// Prepared sample state on a single register.
    pub state: StateVector,
    /// Walk applications consumed by the phase-discrimination rounds.
    pub walk_steps: u64,
    /// Fidelity to the exact stationary state after each projection stage.
    pub stage_fidelities: Vec<f64>,
    /// Phase-estimation rounds spent per stage.
    pub rounds_per_stage: Vec<usize>,
    /// Joint probability of every postselection that produced `state`.
    pub success_probability: f64,
}

fn pi_state(pi: &[f64], d: usize) -> Result<StateVector> {
    let mut amps = vec![Complex64::new(0.0, 0.0); d];
    for (x, &w) in pi.iter().enumerate() {
        amps[x] = Complex64::new(w.sqrt(), 0.0);
    }
    StateVector::from_amplitudes(amps)
}

/// Prepare the quantum sample `|pi_r> = sum_x sqrt(pi_r(x)) |x>` by
/// annealing through the schedule `chains[0] .. chains[r]`.
///
/// `chains[0]`'s stationary state is prepared directly (the easy-start
/// assumption; typically uniform). Each later stage lifts the current state
/// onto the doubled register with that chain's `U_P` and projects onto the
/// walk's fixed eigenstate by phase estimation on `W` with
/// `m = ceil(log2(1/sqrt(gap))) + 2` bits, keeping readout 0 only. Rounds
/// repeat until the leakage fits within the per-stage budget `eps / r`;
/// consecutive stationary distributions must overlap by at least
/// `overlap_floor`, or the offending stage index is reported.
pub fn qmcmc_prepare(
    chains: &[MarkovChainSpec],
    overlap_floor: f64,
    eps: f64,
) -> Result<QmcmcOutcome> {
    if chains.is_empty() {
        return Err(Error::InvalidArgument("need at least one chain".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    if !(overlap_floor > 0.0 && overlap_floor <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "overlap floor {overlap_floor} must lie in (0, 1]"
        )));
    }
    let n = chains[0].n_states();
    if chains.iter().any(|c| c.n_states() != n) {
        return Err(Error::DimensionMismatch(
            "every chain in the schedule must share one state space".into(),
        ));
    }
    let nq = usize::BITS as usize - (n - 1).leading_zeros() as usize;
    let d = 1usize << nq;
    let r = chains.len() - 1;
    let mut state = pi_state(&chains[0].pi, d)?;
    let mut walk_steps = 0u64;
    let mut stage_fidelities = Vec::new();
    let mut rounds_per_stage = Vec::new();
    let mut success = 1.0f64;
    for i in 1..=r {
        let overlap: f64 = (0..n)
            .map(|x| (chains[i - 1].pi[x] * chains[i].pi[x]).sqrt())
            .sum();
        if overlap < overlap_floor - 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "overlap floor violated at stage {i}: <pi_{}|pi_{i}> = {overlap:.6} < {overlap_floor}",
                i - 1
            )));
        }
        let delta = chains[i].gap;
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "chain {i} has no spectral gap"
            )));
        }
        let walk = build_szegedy(&chains[i])?;
        let m = ((1.0 / delta.sqrt()).log2().ceil() as i64 + 2).max(1) as usize;
        // One round keeps an eigenphase-theta component with amplitude
        // |sin(2^m theta/2) / (2^m sin(theta/2))| <= kappa below, so the
        // junk-to-signal ratio decays like kappa^(2 rounds); plan rounds
        // from the worst case allowed by the overlap floor, then top up if
        // the measured leakage still exceeds the stage budget.
        let kappa = (1.0 / ((1u64 << m) as f64 * (walk.phase_gap() / 2.0).sin())).min(0.9);
        let junk_ratio = (1.0 - overlap * overlap) / (overlap * overlap);
        let stage_budget = 0.5 * eps / r as f64;
        let planned = if junk_ratio <= stage_budget {
            1
        } else {
            ((junk_ratio / stage_budget).ln() / (2.0 * (1.0 / kappa).ln())).ceil() as usize + 1
        };
        let zero_y = StateVector::new_zero(nq)?;
        let mut doubled = apply_dense(&walk.u_p, &zero_y.tensor(&state)?)?;
        let pt = walk.pi_tilde();
        let mut rounds = 0usize;
        while rounds < planned || 1.0 - doubled.fidelity(&pt)? > stage_budget {
            if rounds >= 64 {
                return Err(Error::Numerical(format!(
                    "stage {i} failed to reach its fidelity target after {rounds} rounds"
                )));
            }
            let out = qpe(&walk.w, &doubled, m)?;
            let (sys, prob) = out.postselect_readout(0, m)?;
            doubled = sys;
            success *= prob;
            walk_steps += out.oracle_applications;
            rounds += 1;
        }
        let mut back = apply_dense(&dagger(&walk.u_p), &doubled)?;
        for _ in 0..nq {
            success *= back.postselect_qubit(0, 0)?;
            back.drop_qubit(0)?;
        }
        state = back;
        let fid = state.fidelity(&pi_state(&chains[i].pi, d)?)?;
        stage_fidelities.push(fid);
        rounds_per_stage.push(rounds);
        if fid < 1.0 - eps / r as f64 {
            return Err(Error::Numerical(format!(
                "stage {i} fidelity {fid:.8} misses the per-stage contract"
            )));
        }
    }
    Ok(QmcmcOutcome {
        state,
        walk_steps,
        stage_fidelities,
        rounds_per_stage,
        success_probability: success,
    })
}
