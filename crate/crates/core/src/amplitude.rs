//! Grover search and the amplitude toolbox built on it: amplification,
//! estimation, counting, bounded-mean estimation, minimum finding, order
//! statistics, and Monte Carlo expectation.
//!
//! Conventions. A preparation unitary `A` sends `|0>` to `sin(theta)|good> +
//! cos(theta)|bad>`; the amplification step is `Q = -A S_0 A^dag S_chi` with
//! `S_0 = I - 2|0><0|` and `S_chi = I - 2 P_good`, which rotates the good
//! amplitude to `sin((2t+1) theta)` after `t` steps and has eigenvalues
//! `e^{+-2i theta}`. Estimation runs phase estimation on `Q`, so an `m`-bit
//! readout `y` decodes as `a_hat = sin^2(pi y / 2^m)`.

use num_complex::Complex64;
use rand::Rng;

use crate::encoding::{qsample_encode, FunctionOracle};
use crate::error::{Error, Result};
use crate::fourier::qpe;
use crate::gates::{apply_h, controlled_rotation_f, matrix_from_apply};
use crate::linalg::{kron, linear_fit, CMat, CVec};
use crate::rng::SimRng;
use crate::state::StateVector;

/// `round((pi/4) sqrt(N/M))`, the standard iteration count.
pub fn grover_iterations(n_items: usize, n_marked: usize) -> usize {
    assert!(n_marked >= 1 && n_marked <= n_items);
    (std::f64::consts::FRAC_PI_4 * (n_items as f64 / n_marked as f64).sqrt()).round() as usize
}

#[derive(Clone, Debug)]
pub struct GroverOutcome {
    pub state: StateVector,
    /// Total probability mass on the marked set after the final iteration.
    pub success_probability: f64,
    pub iterations: usize,
    /// Oracle queries consumed (one phase query per iteration).
    pub oracle_calls: u64,
    /// A Born sample of the final state.
    pub outcome: usize,
}

/// Textbook Grover search with the Walsh-Hadamard preparer: phase oracle
/// then inversion about the mean, `iterations` times.
pub fn grover_search(
    oracle: &FunctionOracle,
    n_marked: usize,
    iterations: Option<usize>,
    rng: &mut SimRng,
) -> Result<GroverOutcome> {
    if oracle.n_out() != 1 {
        return Err(Error::InvalidArgument("search oracle must be boolean".into()));
    }
    if n_marked == 0 {
        return Err(Error::InvalidArgument("empty marked set".into()));
    }
    let n = oracle.n_in();
    let n_items = 1usize << n;
    let t = iterations.unwrap_or_else(|| grover_iterations(n_items, n_marked));
    let all: Vec<usize> = (0..n).collect();
    let mut state = StateVector::new_zero(n)?;
    for q in 0..n {
        apply_h(&mut state, q)?;
    }
    oracle.reset_calls();
    for _ in 0..t {
        oracle.phase_flip(&mut state, &all)?;
        invert_about_mean(&mut state)?;
    }
    let success_probability = (0..n_items)
        .filter(|&x| oracle.value(x) == 1)
        .map(|x| state.probability(x))
        .sum();
    let outcome = state.sample_index(rng);
    Ok(GroverOutcome {
        state,
        success_probability,
        iterations: t,
        oracle_calls: oracle.calls(),
        outcome,
    })
}

/// `2|u><u| - I` via `H^n (2|0><0| - I) H^n`.
fn invert_about_mean(state: &mut StateVector) -> Result<()> {
    let n = state.n_qubits();
    for q in 0..n {
        apply_h(state, q)?;
    }
    let amps = state.amps_mut();
    for a in amps.iter_mut().skip(1) {
        *a = -*a;
    }
    for q in 0..n {
        apply_h(state, q)?;
    }
    Ok(())
}

/// `H^{(x) n}` as a dense matrix, the default preparer.
pub fn walsh_hadamard_matrix(n_qubits: usize) -> CMat {
    let h = crate::gates::matrices::h();
    let mut m = CMat::identity(1, 1);
    for _ in 0..n_qubits {
        m = kron(&m, &h);
    }
    m
}

/// Amplitude of the good subspace in `A|0>`.
pub fn good_amplitude(a: &CMat, good: &dyn Fn(usize) -> bool) -> f64 {
    let dim = a.nrows();
    (0..dim)
        .filter(|&x| good(x))
        .map(|x| a[(x, 0)].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// One amplification step applied to a vector, without materializing Q.
fn q_apply(a: &CMat, good_mask: &[bool], v: &CVec) -> CVec {
    // S_chi: flip the good entries.
    let mut w = v.clone();
    for (i, flip) in good_mask.iter().enumerate() {
        if *flip {
            w[i] = -w[i];
        }
    }
    // -S_0 = 2|0><0| - I keeps index 0 and flips the rest, so
    // A (-S_0) A^dag S_chi = -A S_0 A^dag S_chi = Q.
    let mut w = a.adjoint() * w;
    for i in 1..w.len() {
        w[i] = -w[i];
    }
    a * w
}

/// Dense Grover/amplification operator `Q` for phase estimation and tests.
pub fn grover_operator(a: &CMat, good: &dyn Fn(usize) -> bool) -> CMat {
    let dim = a.nrows();
    let good_mask: Vec<bool> = (0..dim).map(|x| good(x)).collect();
    let mut q = CMat::zeros(dim, dim);
    for col in 0..dim {
        let mut e = CVec::zeros(dim);
        e[col] = Complex64::new(1.0, 0.0);
        let qe = q_apply(a, &good_mask, &e);
        for row in 0..dim {
            q[(row, col)] = qe[row];
        }
    }
    q
}

#[derive(Clone, Debug)]
pub struct QaaOutcome {
    pub state: StateVector,
    pub good_probability: f64,
    pub iterations: usize,
    /// Applications of `A` or `A^dag` (1 to prepare, 2 per step).
    pub a_applications: u64,
}

/// Amplitude amplification: prepare `A|0>`, then `t` steps of `Q`.
pub fn amplitude_amplify(
    a: &CMat,
    good: &dyn Fn(usize) -> bool,
    t: usize,
) -> Result<QaaOutcome> {
    let dim = a.nrows();
    if crate::linalg::unitarity_defect(a) > 1e-9 {
        return Err(Error::InvalidArgument("preparer A is not unitary".into()));
    }
    let p0 = good_amplitude(a, good).powi(2);
    if p0 <= 0.0 {
        return Err(Error::InvalidArgument(
            "good subspace has zero initial probability".into(),
        ));
    }
    let good_mask: Vec<bool> = (0..dim).map(|x| good(x)).collect();
    let mut v = a.column(0).clone_owned();
    for _ in 0..t {
        v = q_apply(a, &good_mask, &v);
    }
    let good_probability = (0..dim)
        .filter(|&x| good_mask[x])
        .map(|x| v[x].norm_sqr())
        .sum();
    Ok(QaaOutcome {
        state: StateVector::from_cvec(&v)?,
        good_probability,
        iterations: t,
        a_applications: 1 + 2 * t as u64,
    })
}

/// Closed-form good probability after `t` amplification steps.
pub fn qaa_predicted_probability(initial_amplitude: f64, t: usize) -> f64 {
    let theta = initial_amplitude.asin();
    ((2 * t + 1) as f64 * theta).sin().powi(2)
}

#[derive(Clone, Debug)]
pub struct QaeOutcome {
    /// Max-probability phase readout.
    pub y_hat: usize,
    /// `sin^2(pi y_hat / 2^m)`.
    pub a_hat: f64,
    /// The readout and its mirror `2^m - y_hat` decode identically.
    pub candidates: (usize, usize),
    /// Full readout distribution.
    pub probs: Vec<f64>,
    pub m_bits: usize,
    /// `Q` applications consumed by the controlled powers.
    pub q_applications: u64,
    /// `A`-type applications: 1 preparation + 2 per `Q`.
    pub a_applications: u64,
}

/// Quoted error bound for the estimate: `2 pi a(1-a)/t + pi^2/t^2`.
pub fn qae_quoted_error_bound(a: f64, t: f64) -> f64 {
    2.0 * std::f64::consts::PI * a * (1.0 - a) / t
        + std::f64::consts::PI.powi(2) / (t * t)
}

/// Error bound that the nearest-readout estimate provably meets:
/// `2 pi sqrt(a(1-a))/t + pi^2/t^2`.
pub fn qae_guaranteed_error_bound(a: f64, t: f64) -> f64 {
    2.0 * std::f64::consts::PI * (a * (1.0 - a)).sqrt() / t
        + std::f64::consts::PI.powi(2) / (t * t)
}

/// Amplitude estimation: phase estimation on `Q` with `m` bits, exact mode.
pub fn amplitude_estimate(
    a: &CMat,
    good: &dyn Fn(usize) -> bool,
    m: usize,
) -> Result<QaeOutcome> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one phase bit".into()));
    }
    let q = grover_operator(a, good);
    let psi = StateVector::from_cvec(&a.column(0).clone_owned())?;
    let out = qpe(&q, &psi, m)?;
    let grid = 1usize << m;
    let y_hat = out.y_max;
    let a_hat = (std::f64::consts::PI * y_hat as f64 / grid as f64).sin().powi(2);
    let q_applications = out.oracle_applications;
    Ok(QaeOutcome {
        y_hat,
        a_hat,
        candidates: (y_hat, (grid - y_hat) % grid),
        probs: out.probs,
        m_bits: m,
        q_applications,
        a_applications: 1 + 2 * q_applications,
    })
}

#[derive(Clone, Debug)]
pub struct CountOutcome {
    pub estimate: usize,
    pub a_hat: f64,
    pub y_hat: usize,
    pub n_items: usize,
}

/// Quantum counting: QAE of the marked fraction under the uniform preparer,
/// rounded to an integer count.
pub fn quantum_count(oracle: &FunctionOracle, m: usize) -> Result<CountOutcome> {
    if oracle.n_out() != 1 {
        return Err(Error::InvalidArgument("counting oracle must be boolean".into()));
    }
    let n = oracle.n_in();
    let n_items = 1usize << n;
    let a = walsh_hadamard_matrix(n);
    let est = amplitude_estimate(&a, &|x| oracle.value(x) == 1, m)?;
    Ok(CountOutcome {
        estimate: (n_items as f64 * est.a_hat).round() as usize,
        a_hat: est.a_hat,
        y_hat: est.y_hat,
        n_items,
    })
}

#[derive(Clone, Debug)]
pub struct BoundedMeanOutcome {
    pub estimate: f64,
    pub true_mean: f64,
    pub y_hat: usize,
    pub m_bits: usize,
    /// Preparation-oracle calls: each `Q` step makes two.
    pub a_oracle_calls: u64,
}

/// Mean of `f_vals` (each in [0,1], power-of-two length) by QAE: uniform
/// superposition, rotate an aux by `arcsin(sqrt(F(x)))`, estimate the aux-1
/// amplitude, whose square is exactly the mean.
pub fn estimate_bounded_mean(f_vals: &[f64], m: usize) -> Result<BoundedMeanOutcome> {
    let n_items = f_vals.len();
    if !n_items.is_power_of_two() || n_items < 2 {
        return Err(Error::InvalidArgument(
            "sample length must be a power of two >= 2".into(),
        ));
    }
    if f_vals.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidArgument("values must lie in [0,1]".into()));
    }
    let n = n_items.trailing_zeros() as usize;
    let reg: Vec<usize> = (0..n).collect();
    let vals = f_vals.to_vec();
    let a = matrix_from_apply(n + 1, move |s| {
        for q in 0..n {
            apply_h(s, q)?;
        }
        controlled_rotation_f(s, &reg, n, |x| vals[x].sqrt().asin())
    })?;
    let aux_mask = 1usize << n;
    let est = amplitude_estimate(&a, &|x| x & aux_mask != 0, m)?;
    let true_mean = f_vals.iter().sum::<f64>() / n_items as f64;
    Ok(BoundedMeanOutcome {
        estimate: est.a_hat,
        true_mean,
        y_hat: est.y_hat,
        m_bits: m,
        a_oracle_calls: est.a_applications,
    })
}

/// Expectation `E_p[f]` by QAE: qsample preparer instead of uniform.
pub fn qmc_expectation(p: &[f64], f_vals: &[f64], m: usize) -> Result<BoundedMeanOutcome> {
    if p.len() != f_vals.len() {
        return Err(Error::DimensionMismatch(
            "distribution and integrand lengths differ".into(),
        ));
    }
    if !p.len().is_power_of_two() || p.len() < 2 {
        return Err(Error::InvalidArgument(
            "length must be a power of two >= 2".into(),
        ));
    }
    if f_vals.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidArgument("integrand must lie in [0,1]".into()));
    }
    let n = p.len().trailing_zeros() as usize;
    let qs = qsample_encode(p)?;
    let prep = crate::linalg::unitary_with_first_column(&qs.to_cvec());
    let reg: Vec<usize> = (0..n).collect();
    let vals = f_vals.to_vec();
    let rot = matrix_from_apply(n + 1, move |s| {
        controlled_rotation_f(s, &reg, n, |x| vals[x].sqrt().asin())
    })?;
    let a = rot * kron(&CMat::identity(2, 2), &prep);
    let aux_mask = 1usize << n;
    let est = amplitude_estimate(&a, &|x| x & aux_mask != 0, m)?;
    let true_mean = p.iter().zip(f_vals.iter()).map(|(&pi, &fi)| pi * fi).sum();
    Ok(BoundedMeanOutcome {
        estimate: est.a_hat,
        true_mean,
        y_hat: est.y_hat,
        m_bits: m,
        a_oracle_calls: est.a_applications,
    })
}

#[derive(Clone, Debug)]
pub struct UnknownCountSearch {
    pub found: Option<usize>,
    pub oracle_calls: u64,
}

/// Search with unknown marked count: exponentially growing random iteration
/// counts (growth 6/5, capped at sqrt(N)). Gives up after the cap has been
/// hit several times in a row, which only happens when nothing is marked.
pub fn search_unknown_count(
    oracle: &FunctionOracle,
    rng: &mut SimRng,
) -> Result<UnknownCountSearch> {
    if oracle.n_out() != 1 {
        return Err(Error::InvalidArgument("search oracle must be boolean".into()));
    }
    let n = oracle.n_in();
    let n_items = 1usize << n;
    let all: Vec<usize> = (0..n).collect();
    let cap = (n_items as f64).sqrt();
    let mut bound = 1.0f64;
    let mut calls = 0u64;
    let mut capped_failures = 0u32;
    loop {
        let j = rng.gen_range(0..bound.ceil() as usize + 1);
        let mut state = StateVector::new_zero(n)?;
        for q in 0..n {
            apply_h(&mut state, q)?;
        }
        for _ in 0..j {
            oracle.phase_flip(&mut state, &all)?;
            invert_about_mean(&mut state)?;
        }
        calls += j as u64;
        let sample = state.sample_index(rng);
        calls += 1; // classical verification query
        if oracle.value(sample) == 1 {
            return Ok(UnknownCountSearch { found: Some(sample), oracle_calls: calls });
        }
        if bound >= cap {
            capped_failures += 1;
            if capped_failures >= 6 {
                return Ok(UnknownCountSearch { found: None, oracle_calls: calls });
            }
        }
        bound = (bound * 1.2).min(cap);
    }
}

#[derive(Clone, Debug)]
pub struct MinimumOutcome {
    pub index: usize,
    pub value: f64,
    pub oracle_calls: u64,
    pub budget: u64,
    pub threshold_updates: usize,
    /// True when the call budget ran out mid-search; false when the search
    /// concluded on its own (repeated failure to improve at the cap).
    pub budget_exhausted: bool,
}

/// Minimum finding by threshold descent: keep a threshold index, search for
/// anything smaller with the unknown-count schedule, move the threshold on
/// every hit. Budget follows `22.5 sqrt(N) + 1.4 log2(N)^2` oracle calls.
pub fn find_minimum(
    values: &[f64],
    budget_multiplier: f64,
    rng: &mut SimRng,
) -> Result<MinimumOutcome> {
    let n_vals = values.len();
    if n_vals < 2 {
        return Err(Error::InvalidArgument("need at least two values".into()));
    }
    let n = n_vals.next_power_of_two().trailing_zeros() as usize;
    let n_items = 1usize << n;
    let log2n = (n_items as f64).log2();
    let budget =
        (budget_multiplier * (22.5 * (n_items as f64).sqrt() + 1.4 * log2n * log2n)).ceil() as u64;
    let mut y = rng.gen_range(0..n_vals);
    let mut calls = 0u64;
    let mut threshold_updates = 0usize;
    let cap = (n_items as f64).sqrt();
    let mut budget_exhausted = false;
    'outer: loop {
        // Fresh growth schedule per threshold.
        let mut bound = 1.0f64;
        let mut capped_failures = 0u32;
        loop {
            if calls >= budget {
                budget_exhausted = true;
                break 'outer;
            }
            let j = rng.gen_range(0..bound.ceil() as usize + 1);
            let mut state = StateVector::new_zero(n)?;
            for q in 0..n {
                apply_h(&mut state, q)?;
            }
            let threshold = values[y];
            for _ in 0..j {
                phase_flip_predicate(&mut state, |x| x < n_vals && values[x] < threshold);
                invert_about_mean(&mut state)?;
            }
            calls += j as u64;
            let sample = state.sample_index(rng);
            calls += 1;
            if sample < n_vals && values[sample] < threshold {
                y = sample;
                threshold_updates += 1;
                continue 'outer;
            }
            if bound >= cap {
                capped_failures += 1;
                if capped_failures >= 6 {
                    break 'outer;
                }
            }
            bound = (bound * 1.2).min(cap);
        }
    }
    Ok(MinimumOutcome {
        index: y,
        value: values[y],
        oracle_calls: calls,
        budget,
        threshold_updates,
        budget_exhausted,
    })
}

fn phase_flip_predicate(state: &mut StateVector, pred: impl Fn(usize) -> bool) {
    for (idx, amp) in state.amps_mut().iter_mut().enumerate() {
        if pred(idx) {
            *amp = -*amp;
        }
    }
}

#[derive(Clone, Debug)]
pub struct KthOutcome {
    pub index: usize,
    pub value: f64,
    pub pivot_rounds: usize,
    pub oracle_calls: u64,
}

/// k-th smallest (1-based) by quantum quickselect: sample a pivot from the
/// open bracket with the unknown-count search, rank it with exact quantum
/// counting, and shrink the bracket. Expected rounds are logarithmic.
pub fn kth_smallest(values: &[f64], k: usize, rng: &mut SimRng) -> Result<KthOutcome> {
    let n_vals = values.len();
    if k == 0 || k > n_vals {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={n_vals}, got {k}"
        )));
    }
    let n = n_vals.next_power_of_two().max(2).trailing_zeros() as usize;
    // Counting bits chosen so N * (QAE error) < 1/2: count is exact.
    let m_count = n + 3;
    let mut lo: Option<f64> = None;
    let mut hi: Option<(usize, f64)> = None;
    let mut rounds = 0usize;
    let mut calls = 0u64;
    loop {
        rounds += 1;
        if rounds > 40 * (n + 2) {
            return Err(Error::Numerical("bracket failed to converge".into()));
        }
        let lo_v = lo;
        let hi_v = hi.map(|(_, v)| v);
        let in_bracket = move |x: usize| -> bool {
            if x >= n_vals {
                return false;
            }
            let v = values[x];
            lo_v.map_or(true, |l| v > l) && hi_v.map_or(true, |h| v < h)
        };
        let bracket_oracle =
            FunctionOracle::from_fn(n, 1, |x| usize::from(in_bracket(x)))?;
        let search = search_unknown_count(&bracket_oracle, rng)?;
        calls += search.oracle_calls;
        let pivot = match search.found {
            Some(idx) => idx,
            // Empty open bracket: the upper endpoint is the answer.
            None => {
                let (idx, value) = hi.ok_or_else(|| {
                    Error::Numerical("empty bracket with no upper endpoint".into())
                })?;
                return Ok(KthOutcome { index: idx, value, pivot_rounds: rounds, oracle_calls: calls });
            }
        };
        let pv = values[pivot];
        let le_oracle = FunctionOracle::from_fn(n, 1, |x| {
            usize::from(x < n_vals && values[x] <= pv)
        })?;
        let count_le = quantum_count(&le_oracle, m_count)?.estimate;
        calls += (1u64 << m_count) - 1;
        let lt_oracle = FunctionOracle::from_fn(n, 1, |x| {
            usize::from(x < n_vals && values[x] < pv)
        })?;
        let count_lt = quantum_count(&lt_oracle, m_count)?.estimate;
        calls += (1u64 << m_count) - 1;
        if count_le >= k && count_lt <= k - 1 {
            return Ok(KthOutcome { index: pivot, value: pv, pivot_rounds: rounds, oracle_calls: calls });
        }
        if count_le < k {
            lo = Some(pv);
        } else {
            hi = Some((pivot, pv));
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    /// (ln N, ln queries) per size.
    pub quantum_points: Vec<(f64, f64)>,
    pub classical_points: Vec<(f64, f64)>,
    /// Fitted exponents of query count vs N.
    pub quantum_exponent: f64,
    pub classical_exponent: f64,
}

/// Query scaling of single-marked search, quantum vs classical, over
/// `N = 16 .. 1024`.
pub fn grover_scaling_report() -> ScalingReport {
    let mut quantum_points = Vec::new();
    let mut classical_points = Vec::new();
    for e in 4..=10u32 {
        let n_items = 1usize << e;
        // Oracle calls per run at the optimal iteration count.
        let quantum = grover_iterations(n_items, 1) as f64;
        // Uniform guessing without replacement.
        let classical = (n_items as f64 + 1.0) / 2.0;
        quantum_points.push(((n_items as f64).ln(), quantum.ln()));
        classical_points.push(((n_items as f64).ln(), classical.ln()));
    }
    let (quantum_exponent, _) = linear_fit(
        &quantum_points.iter().map(|p| p.0).collect::<Vec<_>>(),
        &quantum_points.iter().map(|p| p.1).collect::<Vec<_>>(),
    );
    let (classical_exponent, _) = linear_fit(
        &classical_points.iter().map(|p| p.0).collect::<Vec<_>>(),
        &classical_points.iter().map(|p| p.1).collect::<Vec<_>>(),
    );
    ScalingReport { quantum_points, classical_points, quantum_exponent, classical_exponent }
}

#[derive(Clone, Debug)]
pub struct QmcScalingReport {
    /// (cost, rms error) pairs.
    pub quantum_points: Vec<(f64, f64)>,
    pub classical_points: Vec<(f64, f64)>,
    /// Fitted slope of ln(cost) against ln(error): near -1 quantum, -2
    /// classical.
    pub quantum_exponent: f64,
    pub classical_exponent: f64,
}

/// Cost-versus-error scaling of expectation estimation: QAE sweeps the
/// phase-register width, the classical baseline sweeps the sample count,
/// both over the same random instance set.
pub fn qmc_scaling_report(seed: u64) -> Result<QmcScalingReport> {
    let n = 4usize;
    let dim = 1usize << n;
    let n_instances = 20usize;
    let mut instances = Vec::with_capacity(n_instances);
    let mut rng = crate::rng::rng_stream(seed, 0);
    for _ in 0..n_instances {
        let raw: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let f: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
        instances.push((p, f));
    }
    let mut quantum_points = Vec::new();
    for m in 4..=9usize {
        let mut sq = 0.0;
        for (p, f) in &instances {
            let out = qmc_expectation(p, f, m)?;
            sq += (out.estimate - out.true_mean).powi(2);
        }
        let rms = (sq / n_instances as f64).sqrt();
        quantum_points.push(((1u64 << m) as f64, rms));
    }
    let mut classical_points = Vec::new();
    let reps = 8usize;
    let mut crng = crate::rng::rng_stream(seed, 1);
    for e in 4..=9u32 {
        let shots = 1usize << e;
        let mut sq = 0.0;
        for (p, f) in &instances {
            let truth: f64 = p.iter().zip(f.iter()).map(|(&pi, &fi)| pi * fi).sum();
            for _ in 0..reps {
                let mut acc = 0.0;
                for _ in 0..shots {
                    let u: f64 = crng.gen();
                    let mut cum = 0.0;
                    let mut idx = dim - 1;
                    for (i, &pi) in p.iter().enumerate() {
                        cum += pi;
                        if u < cum {
                            idx = i;
                            break;
                        }
                    }
                    acc += f[idx];
                }
                sq += (acc / shots as f64 - truth).powi(2);
            }
        }
        let rms = (sq / (n_instances * reps) as f64).sqrt();
        classical_points.push((shots as f64, rms));
    }
    let fit = |pts: &[(f64, f64)]| {
        let xs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        linear_fit(&xs, &ys).0
    };
    Ok(QmcScalingReport {
        quantum_exponent: fit(&quantum_points),
        classical_exponent: fit(&classical_points),
        quantum_points,
        classical_points,
    })
}
