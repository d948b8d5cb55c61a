//! Classical-to-quantum data encodings and counted oracle access.
//!
//! Three state encodings (amplitude, basis-uniform, qsample), reversible
//! function oracles with an atomic call counter as the cost model, phase
//! oracles, sparse Hamiltonian row access with a norm cache, a QROM view of
//! classical arrays, and the swap-test estimators built on top of them.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gates::{apply_cswap, apply_h};
use crate::linalg::{eigh, CMat};
use crate::rng::SimRng;
use crate::state::StateVector;

/// `x / ||x||` as amplitudes, zero-padded up to the next power of two.
pub fn amplitude_encode(x: &[Complex64]) -> Result<StateVector> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot encode empty vector".into()));
    }
    let dim = x.len().next_power_of_two().max(2);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[..x.len()].copy_from_slice(x);
    StateVector::from_unnormalized(amps)
}

pub fn amplitude_encode_real(x: &[f64]) -> Result<StateVector> {
    let cx: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    amplitude_encode(&cx)
}

/// Uniform superposition `1/sqrt(M) sum_{i<M} |i>` on `n_qubits`.
pub fn uniform_over(n_qubits: usize, m: usize) -> Result<StateVector> {
    let dim = 1usize << n_qubits;
    if m == 0 || m > dim {
        return Err(Error::InvalidArgument(format!(
            "uniform_over needs 1 <= M <= {dim}, got {m}"
        )));
    }
    let a = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for slot in amps.iter_mut().take(m) {
        *slot = a;
    }
    StateVector::from_amplitudes(amps)
}

/// Uniform superposition over an explicit index subset.
pub fn uniform_subset(n_qubits: usize, indices: &[usize]) -> Result<StateVector> {
    let dim = 1usize << n_qubits;
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty subset".into()));
    }
    let a = Complex64::new(1.0 / (indices.len() as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for &i in indices {
        if i >= dim {
            return Err(Error::IndexOutOfRange { idx: i, dim });
        }
        if amps[i].norm() > 0.0 {
            return Err(Error::InvalidArgument(format!("duplicate index {i}")));
        }
        amps[i] = a;
    }
    StateVector::from_amplitudes(amps)
}

/// Qsample `sum_i sqrt(p_i) |i>` of a probability vector. The weights must
/// be nonnegative and sum to 1 within 1e-12.
pub fn qsample_encode(p: &[f64]) -> Result<StateVector> {
    if p.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("negative probability".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, expected 1 within 1e-12"
        )));
    }
    let dim = p.len().next_power_of_two().max(2);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (i, &v) in p.iter().enumerate() {
        amps[i] = Complex64::new(v.sqrt(), 0.0);
    }
    StateVector::from_amplitudes(amps)
}

/// Bhattacharyya coefficient `sum_i sqrt(p_i q_i)`, the classical shadow of
/// the qsample inner product.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q.iter()).map(|(&a, &b)| (a * b).sqrt()).sum()
}

/// Reversible oracle for `f: {0,1}^n_in -> {0,1}^n_out`, applied as
/// `|x>|y> -> |x>|y XOR f(x)>`. Every application bumps an atomic counter;
/// query complexity claims in tests read that counter.
#[derive(Debug)]
pub struct FunctionOracle {
    n_in: usize,
    n_out: usize,
    table: Vec<usize>,
    calls: AtomicU64,
}

impl FunctionOracle {
    pub fn from_table(n_in: usize, n_out: usize, table: Vec<usize>) -> Result<Self> {
        if table.len() != 1 << n_in {
            return Err(Error::InvalidArgument(format!(
                "table length {} for {n_in} input bits",
                table.len()
            )));
        }
        let out_dim = 1usize << n_out;
        if let Some(&bad) = table.iter().find(|&&v| v >= out_dim) {
            return Err(Error::InvalidArgument(format!(
                "table value {bad} exceeds {n_out} output bits"
            )));
        }
        Ok(Self { n_in, n_out, table, calls: AtomicU64::new(0) })
    }

    pub fn from_fn(n_in: usize, n_out: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        let table = (0..1usize << n_in).map(f).collect();
        Self::from_table(n_in, n_out, table)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn value(&self, x: usize) -> usize {
        self.table[x]
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    fn count_call(&self) {
        self.calls.fetch_add(1, Ordering::Relaxed);
    }

    /// XOR-apply onto `y_reg` keyed by the value in `x_reg`.
    pub fn apply(&self, state: &mut StateVector, x_reg: &[usize], y_reg: &[usize]) -> Result<()> {
        if x_reg.len() != self.n_in || y_reg.len() != self.n_out {
            return Err(Error::DimensionMismatch(format!(
                "oracle is {}->{} bits, got registers {}/{}",
                self.n_in,
                self.n_out,
                x_reg.len(),
                y_reg.len()
            )));
        }
        let n = state.n_qubits();
        let mut seen = 0usize;
        for &q in x_reg.iter().chain(y_reg.iter()) {
            if q >= n {
                return Err(Error::QubitOutOfRange { q, n });
            }
            if seen & (1 << q) != 0 {
                return Err(Error::InvalidArgument(format!("register overlap on qubit {q}")));
            }
            seen |= 1 << q;
        }
        self.count_call();
        let dim = state.dim();
        let amps = state.amps_mut();
        let extract = |idx: usize, reg: &[usize]| -> usize {
            reg.iter()
                .enumerate()
                .fold(0usize, |acc, (i, &q)| acc | (((idx >> q) & 1) << i))
        };
        // |x>|y> <-> |x>|y^f(x)> is an involutive pairing: swap each pair once.
        for idx in 0..dim {
            let x = extract(idx, x_reg);
            let fx = self.table[x];
            if fx == 0 {
                continue;
            }
            let mut partner = idx;
            for (i, &q) in y_reg.iter().enumerate() {
                if (fx >> i) & 1 == 1 {
                    partner ^= 1 << q;
                }
            }
            if partner > idx {
                amps.swap(idx, partner);
            }
        }
        Ok(())
    }

    /// Phase-kickback form for boolean `f`: `|x> -> (-1)^{f(x)} |x>`.
    /// Equivalent to one XOR query against an aux prepared in `|->`.
    pub fn phase_flip(&self, state: &mut StateVector, x_reg: &[usize]) -> Result<()> {
        if self.n_out != 1 {
            return Err(Error::InvalidArgument(
                "phase_flip needs a single-bit oracle".into(),
            ));
        }
        if x_reg.len() != self.n_in {
            return Err(Error::DimensionMismatch(format!(
                "oracle takes {} bits, register has {}",
                self.n_in,
                x_reg.len()
            )));
        }
        let n = state.n_qubits();
        for &q in x_reg {
            if q >= n {
                return Err(Error::QubitOutOfRange { q, n });
            }
        }
        self.count_call();
        let dim = state.dim();
        let amps = state.amps_mut();
        for idx in 0..dim {
            let x = x_reg
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &q)| acc | (((idx >> q) & 1) << i));
            if self.table[x] == 1 {
                amps[idx] = -amps[idx];
            }
        }
        Ok(())
    }

    /// Whether `|x>|y> -> |x>|y^f(x)>` permutes the joint basis (it always
    /// should; this is the checkable unitarity witness for small oracles).
    pub fn is_permutation_map(&self) -> Result<bool> {
        let total_bits = self.n_in + self.n_out;
        if total_bits > 20 {
            return Err(Error::InvalidArgument(format!(
                "permutation check capped at 20 joint bits, got {total_bits}"
            )));
        }
        let joint = 1usize << total_bits;
        let mut seen = vec![false; joint];
        for idx in 0..joint {
            let x = idx & ((1 << self.n_in) - 1);
            let y = idx >> self.n_in;
            let mapped = x | ((y ^ self.table[x]) << self.n_in);
            if seen[mapped] {
                return Ok(false);
            }
            seen[mapped] = true;
        }
        Ok(true)
    }
}

/// Diagonal phase oracle `|y> -> e^{i g(y)} |y>`, with the same counted
/// access discipline as `FunctionOracle`.
#[derive(Debug)]
pub struct PhaseOracle {
    n: usize,
    phases: Vec<f64>,
    calls: AtomicU64,
}

impl PhaseOracle {
    pub fn from_fn(n: usize, g: impl Fn(usize) -> f64) -> Self {
        let phases = (0..1usize << n).map(g).collect();
        Self { n, phases, calls: AtomicU64::new(0) }
    }

    pub fn n_bits(&self) -> usize {
        self.n
    }

    pub fn phase(&self, y: usize) -> f64 {
        self.phases[y]
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn apply(&self, state: &mut StateVector, reg: &[usize]) -> Result<()> {
        if reg.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "phase oracle over {} bits, register has {}",
                self.n,
                reg.len()
            )));
        }
        let n = state.n_qubits();
        for &q in reg {
            if q >= n {
                return Err(Error::QubitOutOfRange { q, n });
            }
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let dim = state.dim();
        let amps = state.amps_mut();
        for idx in 0..dim {
            let y = reg
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &q)| acc | (((idx >> q) & 1) << i));
            let g = self.phases[y];
            if g != 0.0 {
                amps[idx] *= Complex64::new(g.cos(), g.sin());
            }
        }
        Ok(())
    }
}

/// Cached operator norms of a Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamNorms {
    /// Spectral norm (largest |eigenvalue|).
    pub spectral: f64,
    /// Induced 1-norm: max absolute row sum (equals the induced infinity
    /// norm for Hermitian matrices).
    pub one: f64,
    /// Largest entry magnitude.
    pub max: f64,
    pub frobenius: f64,
}

/// Row-sparse access to a Hermitian matrix plus its norm cache. This is the
/// access model Hamiltonian-consuming algorithms are written against.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
    norms: HamNorms,
}

impl SparseHamiltonian {
    /// Build from a dense Hermitian matrix (defect above 1e-10 rejected).
    pub fn from_dense(h: &CMat) -> Result<Self> {
        let dim = h.nrows();
        if dim != h.ncols() || dim == 0 {
            return Err(Error::DimensionMismatch("Hamiltonian must be square".into()));
        }
        let defect = crate::linalg::hermiticity_defect(h);
        if defect > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian, defect {defect:.3e}"
            )));
        }
        let mut rows = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut row = Vec::new();
            for j in 0..dim {
                let v = h[(i, j)];
                if v.norm() > 0.0 {
                    row.push((j, v));
                }
            }
            rows.push(row);
        }
        let (evals, _) = eigh(h);
        let spectral = evals.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        let one = (0..dim)
            .map(|i| rows[i].iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let max = h.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let frobenius = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        Ok(Self { dim, rows, norms: HamNorms { spectral, one, max, frobenius } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map(|(_, v)| *v)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Max nonzeros in any row.
    pub fn sparsity(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn norms(&self) -> HamNorms {
        self.norms
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// QROM over a classical table: `|i>|0> -> |i>|data_i>` as a counted
/// reversible oracle.
pub fn qrom(data: &[usize], n_out: usize) -> Result<FunctionOracle> {
    let n_in = data.len().next_power_of_two().max(2).trailing_zeros() as usize;
    let mut table = data.to_vec();
    table.resize(1 << n_in, 0);
    FunctionOracle::from_table(n_in, n_out, table)
}

/// Swap-test success probability `(1 + |<a|b>|^2) / 2`, computed by running
/// the actual aux + controlled-swap circuit and reading the aux marginal.
pub fn swap_test_probability(a: &StateVector, b: &StateVector) -> Result<f64> {
    let joint = swap_test_state(a, b)?;
    let aux = a.n_qubits() + b.n_qubits();
    Ok(1.0 - joint.prob_qubit_one(aux)?)
}

/// Sampled swap test: fraction of `shots` aux measurements that read 0.
pub fn swap_test_sampled(
    a: &StateVector,
    b: &StateVector,
    shots: usize,
    rng: &mut SimRng,
) -> Result<f64> {
    let joint = swap_test_state(a, b)?;
    let aux = a.n_qubits() + b.n_qubits();
    let p1 = joint.prob_qubit_one(aux)?;
    let mut zeros = 0usize;
    for _ in 0..shots {
        let u: f64 = rand::Rng::gen(rng);
        if u >= p1 {
            zeros += 1;
        }
    }
    Ok(zeros as f64 / shots as f64)
}

fn swap_test_state(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch(
            "swap test needs equal register widths".into(),
        ));
    }
    let n = a.n_qubits();
    let aux = 2 * n;
    let mut joint = a
        .tensor(b)?
        .tensor(&StateVector::new_zero(1)?)?;
    apply_h(&mut joint, aux)?;
    for i in 0..n {
        apply_cswap(&mut joint, aux, i, n + i)?;
    }
    apply_h(&mut joint, aux)?;
    Ok(joint)
}

/// Signed overlap of two real unit vectors from a swap test on augmented
/// copies `(v, 1)/sqrt(2)`: the augmented overlap is `(v.w + 1)/2 >= 0`, so
/// the sign survives the squaring and `v.w = 2 sqrt(2p - 1) - 1`.
pub fn signed_overlap_real(v: &[f64], w: &[f64], shots: Option<(usize, &mut SimRng)>) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch("vector lengths differ".into()));
    }
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (nv, nw) = (norm(v), norm(w));
    if nv < 1e-300 || nw < 1e-300 {
        return Err(Error::InvalidArgument("zero vector".into()));
    }
    let augment = |x: &[f64], n: f64| -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().map(|a| a / n).collect();
        out.push(1.0);
        out
    };
    let av = amplitude_encode_real(&augment(v, nv))?;
    let aw = amplitude_encode_real(&augment(w, nw))?;
    let p = match shots {
        None => swap_test_probability(&av, &aw)?,
        Some((k, rng)) => swap_test_sampled(&av, &aw, k, rng)?,
    };
    // Sampling noise can push p slightly below 1/2; clamp before the sqrt.
    let o = (2.0 * p - 1.0).max(0.0).sqrt();
    Ok(2.0 * o - 1.0)
}

/// Sample mean of `x` via the overlap of its amplitude encoding with the
/// uniform state: `<u|x/||x||> = sqrt(N) mean(x) / ||x||` on the padded
/// length `N`. Exact mode (no shots) reads the overlap off the simulator.
pub fn mean_via_uniform_overlap(
    x: &[f64],
    shots: Option<(usize, &mut SimRng)>,
) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let padded = x.len().next_power_of_two().max(2);
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return Ok(0.0);
    }
    let enc = amplitude_encode_real(x)?;
    let n_qubits = enc.n_qubits();
    let u = uniform_over(n_qubits, padded)?;
    let overlap = match shots {
        None => {
            // Exact signed overlap straight from the inner product.
            enc.inner_product(&u)?.re
        }
        Some((k, rng)) => {
            let mut padded_x = x.to_vec();
            padded_x.resize(padded, 0.0);
            let ones = vec![1.0; padded];
            signed_overlap_real(&padded_x, &ones, Some((k, rng)))?
        }
    };
    Ok(overlap * norm / (padded as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::state::random_state;
    use proptest::prelude::*;

    #[test]
    fn amplitude_encode_normalizes_and_pads() {
        let s = amplitude_encode_real(&[3.0, 4.0]).unwrap();
        assert!((s.amp(0).re - 0.6).abs() < 1e-15);
        assert!((s.amp(1).re - 0.8).abs() < 1e-15);
        let padded = amplitude_encode_real(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(padded.dim(), 4);
        assert!(padded.amp(3).norm() < 1e-15);
    }

    #[test]
    fn uniform_over_has_flat_prefix() {
        let s = uniform_over(3, 5).unwrap();
        for i in 0..5 {
            assert!((s.probability(i) - 0.2).abs() < 1e-14);
        }
        for i in 5..8 {
            assert!(s.probability(i) < 1e-15);
        }
    }

    #[test]
    fn qsample_square_roots_probabilities() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let s = qsample_encode(&p).unwrap();
        for (i, &pi) in p.iter().enumerate() {
            assert!((s.probability(i) - pi).abs() < 1e-14);
        }
        assert!(qsample_encode(&[0.5, 0.6]).is_err());
        assert!(qsample_encode(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn bhattacharyya_equals_qsample_overlap() {
        let p = [0.1, 0.4, 0.2, 0.3];
        let q = [0.25, 0.25, 0.25, 0.25];
        let sp = qsample_encode(&p).unwrap();
        let sq = qsample_encode(&q).unwrap();
        let ip = sp.inner_product(&sq).unwrap().re;
        assert!((ip - bhattacharyya(&p, &q)).abs() < 1e-12);
    }

    #[test]
    fn function_oracle_xor_semantics() {
        // f(x) = x+1 mod 4 on 2 bits, 2-bit output.
        let f = FunctionOracle::from_fn(2, 2, |x| (x + 1) % 4).unwrap();
        // |x=3>|y=1> -> |3>|1 ^ f(3)=0> = |3>|1>.
        let mut s = StateVector::basis_state(4, 0b01_11).unwrap();
        f.apply(&mut s, &[0, 1], &[2, 3]).unwrap();
        assert!((s.amp(0b01_11).re - 1.0).abs() < 1e-15);
        // |x=1>|y=0> -> |1>|2>.
        let mut s = StateVector::basis_state(4, 0b00_01).unwrap();
        f.apply(&mut s, &[0, 1], &[2, 3]).unwrap();
        assert!((s.amp(0b10_01).re - 1.0).abs() < 1e-15);
        assert_eq!(f.calls(), 2);
        f.reset_calls();
        assert_eq!(f.calls(), 0);
    }

    #[test]
    fn function_oracle_is_self_inverse_and_unitary() {
        let mut rng = rng_from_seed(4);
        let f = FunctionOracle::from_fn(3, 2, |x| (7 * x + 3) % 4).unwrap();
        assert!(f.is_permutation_map().unwrap());
        let start = random_state(5, &mut rng);
        let mut s = start.clone();
        f.apply(&mut s, &[0, 1, 2], &[3, 4]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        f.apply(&mut s, &[0, 1, 2], &[3, 4]).unwrap();
        assert!(s.max_abs_diff(&start).unwrap() < 1e-13);
    }

    #[test]
    fn phase_flip_matches_minus_aux_trick() {
        // Phase kickback: O_f with aux in |-> equals the direct phase flip.
        let mut rng = rng_from_seed(9);
        let f = FunctionOracle::from_fn(3, 1, |x| usize::from(x == 5)).unwrap();
        let sys = random_state(3, &mut rng);
        let mut direct = sys.clone();
        f.phase_flip(&mut direct, &[0, 1, 2]).unwrap();
        let mut minus = StateVector::new_zero(1).unwrap();
        apply_x(&mut minus, 0).unwrap();
        apply_h(&mut minus, 0).unwrap();
        let mut kicked = sys.tensor(&minus).unwrap();
        f.apply(&mut kicked, &[0, 1, 2], &[3]).unwrap();
        let direct_aux = direct.tensor(&minus).unwrap();
        assert!(kicked.max_abs_diff(&direct_aux).unwrap() < 1e-13);
    }

    use crate::gates::apply_x;

    #[test]
    fn phase_oracle_puts_phases_on_basis() {
        let g = PhaseOracle::from_fn(2, |y| 0.3 * y as f64);
        let mut s = uniform_over(2, 4).unwrap();
        g.apply(&mut s, &[0, 1]).unwrap();
        for y in 0..4usize {
            let expect = Complex64::from_polar(0.5, 0.3 * y as f64);
            assert!((s.amp(y) - expect).norm() < 1e-14, "y={y}");
        }
        assert_eq!(g.calls(), 1);
    }

    #[test]
    fn sparse_hamiltonian_norms_match_definitions() {
        // H = [[1, 2], [2, -1]]: eigenvalues +-sqrt(5).
        let mut h = CMat::zeros(2, 2);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        h[(0, 1)] = Complex64::new(2.0, 0.0);
        h[(1, 0)] = Complex64::new(2.0, 0.0);
        h[(1, 1)] = Complex64::new(-1.0, 0.0);
        let sh = SparseHamiltonian::from_dense(&h).unwrap();
        let norms = sh.norms();
        assert!((norms.spectral - 5f64.sqrt()).abs() < 1e-12);
        assert!((norms.one - 3.0).abs() < 1e-14);
        assert!((norms.max - 2.0).abs() < 1e-14);
        assert!((norms.frobenius - 10f64.sqrt()).abs() < 1e-14);
        assert_eq!(sh.sparsity(), 2);
        assert!(crate::linalg::mat_max_diff(&sh.to_dense(), &h) < 1e-15);
    }

    #[test]
    fn sparse_hamiltonian_rejects_non_hermitian() {
        let mut h = CMat::zeros(2, 2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(SparseHamiltonian::from_dense(&h).is_err());
    }

    #[test]
    fn qrom_loads_table_values() {
        let data = [5usize, 0, 3, 7];
        let rom = qrom(&data, 3).unwrap();
        for (i, &v) in data.iter().enumerate() {
            let mut s = StateVector::basis_state(5, i).unwrap();
            rom.apply(&mut s, &[0, 1], &[2, 3, 4]).unwrap();
            assert!((s.amp(i | (v << 2)).re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn swap_test_probability_formula() {
        let mut rng = rng_from_seed(12);
        for _ in 0..5 {
            let a = random_state(2, &mut rng);
            let b = random_state(2, &mut rng);
            let p = swap_test_probability(&a, &b).unwrap();
            let expect = 0.5 * (1.0 + a.inner_product(&b).unwrap().norm_sqr());
            assert!((p - expect).abs() < 1e-12);
        }
        // Identical states: p = 1. Orthogonal states: p = 1/2.
        let e0 = StateVector::basis_state(1, 0).unwrap();
        let e1 = StateVector::basis_state(1, 1).unwrap();
        assert!((swap_test_probability(&e0, &e0).unwrap() - 1.0).abs() < 1e-14);
        assert!((swap_test_probability(&e0, &e1).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn signed_overlap_recovers_negative_correlations() {
        let v = [1.0, 2.0, -1.0];
        let w = [-2.0, 1.0, 0.5];
        let dot: f64 = v.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        let expect = dot / (nv * nw);
        assert!(expect < 0.0);
        let got = signed_overlap_real(&v, &w, None).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn signed_overlap_sampled_converges() {
        let v = [0.4, 0.3, 0.8, 0.1];
        let w = [0.35, 0.28, 0.77, 0.15];
        let exact = signed_overlap_real(&v, &w, None).unwrap();
        let mut rng = rng_from_seed(55);
        let sampled = signed_overlap_real(&v, &w, Some((200_000, &mut rng))).unwrap();
        assert!((sampled - exact).abs() < 0.02, "sampled {sampled} exact {exact}");
    }

    #[test]
    fn mean_estimate_exact_and_sampled() {
        let x = [0.2, 0.9, 0.4, 0.7, 0.1];
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        // Padded length folds into the estimate of the padded mean; rescale.
        let padded_mean = x.iter().sum::<f64>() / 8.0;
        let exact = mean_via_uniform_overlap(&x, None).unwrap();
        assert!((exact - padded_mean).abs() < 1e-12);
        assert!((exact * 8.0 / 5.0 - mean).abs() < 1e-12);
        let mut rng = rng_from_seed(100);
        let sampled = mean_via_uniform_overlap(&x, Some((400_000, &mut rng))).unwrap();
        assert!((sampled - padded_mean).abs() < 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_boolean_oracles_are_permutations(seed in 0u64..500) {
            let mut rng = rng_from_seed(seed);
            let table: Vec<usize> = (0..16).map(|_| usize::from(rand::Rng::gen::<bool>(&mut rng))).collect();
            let f = FunctionOracle::from_table(4, 1, table).unwrap();
            prop_assert!(f.is_permutation_map().unwrap());
        }

        #[test]
        fn qsample_norm_is_one(seed in 0u64..200) {
            let mut rng = rng_from_seed(seed);
            let raw: Vec<f64> = (0..6).map(|_| rand::Rng::gen::<f64>(&mut rng) + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let s = qsample_encode(&p).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }
}
