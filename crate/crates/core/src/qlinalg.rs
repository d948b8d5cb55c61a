//! Phase-estimation linear algebra: applying a Hermitian operator to a
//! state, a linear-system solver with a non-Hermitian dilation path,
//! single-query digital gradient estimation, and density-matrix spectral
//! analysis driven by a swap-based evolution channel.
//!
//! Eigenvalues enter phase estimation through `U = exp(2 pi i H / s)`. The
//! default scale `s = 4 |H|_1` keeps every phase inside `(-1/4, 1/4]`, so a
//! two's-complement readout of the phase register recovers signed
//! eigenvalues with a guard band against wraparound; `s` is recorded and
//! undone at readout. Fixtures that need exact readouts pass an explicit
//! scale placing the spectrum on the phase grid.

use num_complex::Complex64;

use crate::encoding::{amplitude_encode, PhaseOracle};
use crate::error::{Error, Result};
use crate::fourier::{qpe, qpe_uncompute};
use crate::gates::{apply_h, controlled_rotation_f, embed_unitary};
use crate::linalg::{
    dagger, eigh, expm_hermitian, hermitian_func, hermiticity_defect, kron, svd, CMat, CVec,
};
use crate::state::StateVector;

/// Induced one-norm: max over columns of the absolute column sum. An upper
/// bound on the spectral radius that is cheap and exact to compute.
pub fn induced_one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum())
        .fold(0.0, f64::max)
}

/// Signed value encoded by an m-bit phase readout: the upper half of the
/// grid wraps to negative fractions.
fn decode_signed_phase(y: usize, m_bits: usize) -> f64 {
    let grid = 1i64 << m_bits;
    let signed = if (y as i64) >= grid / 2 { y as i64 - grid } else { y as i64 };
    signed as f64 / grid as f64
}

#[derive(Clone, Debug)]
pub struct HermitianApplyOutcome {
    /// Output state, proportional to `H |psi>` up to m-bit truncation.
    pub state: StateVector,
    /// Probability that the rotated auxiliary qubit reads 1.
    pub success_probability: f64,
    /// Mass left on the all-zero phase register after uncomputation.
    pub readout_zero_mass: f64,
    /// Squared overlap with the classically computed `H|psi>` direction.
    pub fidelity_vs_exact: f64,
    pub eigenvalue_scale: f64,
    pub rotation_scale: f64,
}

/// Apply a Hermitian operator to a state: phase estimation writes m-bit
/// eigenvalue readouts, an auxiliary qubit is rotated by
/// `arcsin(lambda / C)`, the 1 branch is postselected, and the phase
/// register is uncomputed.
pub fn apply_hermitian(
    h: &CMat,
    psi: &StateVector,
    m: usize,
    c: Option<f64>,
    scale: Option<f64>,
) -> Result<HermitianApplyOutcome> {
    let dim = psi.dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, state dimension {dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    if hermiticity_defect(h) > 1e-9 {
        return Err(Error::InvalidArgument("operator is not Hermitian".into()));
    }
    let s = scale.unwrap_or_else(|| 4.0 * induced_one_norm(h));
    if !(s > 0.0) {
        return Err(Error::InvalidArgument("eigenvalue scale must be positive".into()));
    }
    let (eigvals, _) = eigh(h);
    let lam_max = eigvals.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    if lam_max / s >= 0.5 {
        return Err(Error::InvalidArgument(
            "eigenvalue scale too small: phases would wrap".into(),
        ));
    }
    let c_val = c.unwrap_or_else(|| induced_one_norm(h));
    if c_val < lam_max - 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "rotation scale {c_val} below the largest eigenvalue magnitude {lam_max}"
        )));
    }
    // Classical reference direction; doubles as the H|psi> = 0 guard.
    let target = {
        let t = h * psi.to_cvec();
        let norm = t.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument(
                "operator annihilates the input state".into(),
            ));
        }
        t / Complex64::new(norm, 0.0)
    };
    let u = expm_hermitian(h, -2.0 * std::f64::consts::PI / s);
    let out = qpe(&u, psi, m)?;
    let n_sys = psi.n_qubits();
    let mut joint = out.joint.tensor(&StateVector::new_zero(1)?)?;
    let aux = n_sys + m;
    let phase_reg: Vec<usize> = (n_sys..n_sys + m).collect();
    controlled_rotation_f(&mut joint, &phase_reg, aux, |y| {
        let lam = decode_signed_phase(y, m) * s;
        (lam / c_val).clamp(-1.0, 1.0).asin()
    })?;
    let success_probability = joint.postselect_qubit(aux, 1)?;
    joint.drop_qubit(aux)?;
    qpe_uncompute(&u, &mut joint, m)?;
    let mut readout_zero_mass = 1.0;
    for q in (n_sys..n_sys + m).rev() {
        readout_zero_mass *= joint.postselect_qubit(q, 0)?;
        joint.drop_qubit(q)?;
    }
    let fidelity_vs_exact = joint.to_cvec().dotc(&target).norm_sqr();
    Ok(HermitianApplyOutcome {
        state: joint,
        success_probability,
        readout_zero_mass,
        fidelity_vs_exact,
        eigenvalue_scale: s,
        rotation_scale: c_val,
    })
}

/// A linear system `A x = b` with its conditioning summary.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub a: CMat,
    pub b: CVec,
}

impl LinearSystem {
    pub fn new(a: CMat, b: CVec) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, rhs has length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if b.norm() <= 0.0 {
            return Err(Error::InvalidArgument("right-hand side is zero".into()));
        }
        Ok(Self { a, b })
    }

    pub fn is_hermitian(&self) -> bool {
        self.a.nrows() == self.a.ncols() && hermiticity_defect(&self.a) <= 1e-10
    }

    /// Ratio of the largest to smallest nonzero singular value.
    pub fn kappa(&self) -> f64 {
        crate::linalg::condition_number(&self.a)
    }

    /// Number of nonzero entries in the densest row or column.
    pub fn sparsity(&self) -> usize {
        let nnz_row = (0..self.a.nrows())
            .map(|i| (0..self.a.ncols()).filter(|&j| self.a[(i, j)].norm() > 1e-14).count())
            .max()
            .unwrap_or(0);
        let nnz_col = (0..self.a.ncols())
            .map(|j| (0..self.a.nrows()).filter(|&i| self.a[(i, j)].norm() > 1e-14).count())
            .max()
            .unwrap_or(0);
        nnz_row.max(nnz_col)
    }
}

/// Hermitian embedding of a general square matrix: `[[0, A], [A^dag, 0]]`.
/// Eigenvectors pair the left and right singular vectors of `A` with
/// eigenvalues `+-sigma_k`.
pub fn dilation(a: &CMat) -> CMat {
    let n = a.nrows();
    let m = a.ncols();
    let mut d = CMat::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..m {
            d[(i, n + j)] = a[(i, j)];
            d[(n + j, i)] = a[(i, j)].conj();
        }
    }
    d
}

#[derive(Clone, Debug)]
pub struct HhlOutcome {
    pub state: StateVector,
    pub success_probability: f64,
    /// Readout mass on eigenvalue estimates below the regularization floor.
    pub discarded_mass: f64,
    /// Squared overlap with the classical regularized solve.
    pub fidelity_vs_exact: f64,
    pub kappa: f64,
    pub dilated: bool,
    pub eigenvalue_scale: f64,
}

/// Default effective condition-number cap for the regularization floor.
pub const DEFAULT_KAPPA_TARGET: f64 = 32.0;

/// Linear-system solve by eigenvalue inversion: phase estimation on
/// `exp(2 pi i A / s)`, rotation of an auxiliary qubit by
/// `arcsin(C / alpha)` per eigenvalue readout `alpha`, postselection, and
/// uncomputation. Readouts with `|alpha| / s` below `1/(2 kappa_target)`
/// are dropped; `C` equals that floor so the arcsine stays defined.
/// Non-Hermitian inputs, rectangular ones included, are solved through the
/// Hermitian dilation; the returned state is then the normalized lower
/// (column-space) block padded up to a register, and `success_probability`
/// includes the probability of landing in that block.
pub fn hhl_solve(
    sys: &LinearSystem,
    m: usize,
    kappa_target: Option<f64>,
    scale: Option<f64>,
) -> Result<HhlOutcome> {
    let kt = kappa_target.unwrap_or(DEFAULT_KAPPA_TARGET);
    if !(kt > 1.0) {
        return Err(Error::InvalidArgument("kappa target must exceed 1".into()));
    }
    if sys.is_hermitian() {
        hhl_hermitian(&sys.a, &sys.b, m, kt, scale, sys.kappa(), false)
    } else {
        let n = sys.a.nrows();
        let cols = sys.a.ncols();
        let d = dilation(&sys.a);
        let mut b_dil = CVec::zeros(n + cols);
        for i in 0..n {
            b_dil[i] = sys.b[i];
        }
        // A rectangular dilation is (n+cols)-dimensional; pad with zero
        // rows up to a qubit register. Padding only adds null directions,
        // which carry no amplitude from b and fall below the inversion
        // floor anyway.
        let (d_pad, b_pad) = pad_to_register(&d, &b_dil);
        let mut out = hhl_hermitian(&d_pad, &b_pad, m, kt, scale, sys.kappa(), true)?;
        // The solution is the lower dilation block, coordinates n..n+cols.
        let full = out.state.to_cvec();
        let block = full.rows(n, cols).clone_owned();
        let mass = block.norm_squared();
        if mass < 1e-12 {
            return Err(Error::Numerical(
                "no amplitude reached the solution block".into(),
            ));
        }
        // Landing in the block is one more postselection event.
        out.success_probability *= mass;
        let mut amps = vec![Complex64::new(0.0, 0.0); cols.next_power_of_two()];
        for (a, z) in amps.iter_mut().zip(block.iter()) {
            *a = *z;
        }
        out.state = StateVector::from_unnormalized(amps)?;
        let reference = regularized_solve(&d_pad, &b_pad, out.eigenvalue_scale, kt);
        let lower = reference.rows(n, cols).clone_owned();
        let lower_norm = lower.norm();
        if lower_norm < 1e-12 {
            return Err(Error::Numerical("reference solution vanished".into()));
        }
        let overlap = block.dotc(&lower).norm_sqr();
        out.fidelity_vs_exact = overlap / (mass * lower_norm * lower_norm);
        Ok(out)
    }
}

/// Zero-pad a Hermitian matrix and its right-hand side up to the next
/// power-of-two dimension so they fit a qubit register.
fn pad_to_register(a: &CMat, b: &CVec) -> (CMat, CVec) {
    let n = a.nrows();
    let p = n.next_power_of_two();
    if p == n {
        return (a.clone(), b.clone());
    }
    let mut ap = CMat::zeros(p, p);
    ap.view_mut((0, 0), (n, n)).copy_from(a);
    let mut bp = CVec::zeros(p);
    bp.rows_mut(0, n).copy_from(b);
    (ap, bp)
}

/// Classical reference: invert on the eigenbasis with the same floor the
/// quantum path uses, in the rescaled units `lambda / s`.
fn regularized_solve(a: &CMat, b: &CVec, s: f64, kappa_target: f64) -> CVec {
    let floor = 1.0 / (2.0 * kappa_target);
    let inv = hermitian_func(a, |lam| {
        if (lam / s).abs() < floor {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0 / lam, 0.0)
        }
    });
    inv * b
}

fn hhl_hermitian(
    a: &CMat,
    b: &CVec,
    m: usize,
    kappa_target: f64,
    scale: Option<f64>,
    kappa: f64,
    dilated: bool,
) -> Result<HhlOutcome> {
    let psi_b = amplitude_encode(b.as_slice())?;
    let s = scale.unwrap_or_else(|| 4.0 * induced_one_norm(a));
    let (eigvals, _) = eigh(a);
    let lam_max = eigvals.iter().fold(0.0f64, |x, &l| x.max(l.abs()));
    if lam_max / s >= 0.5 {
        return Err(Error::InvalidArgument(
            "eigenvalue scale too small: phases would wrap".into(),
        ));
    }
    let floor = 1.0 / (2.0 * kappa_target);
    let u = expm_hermitian(a, -2.0 * std::f64::consts::PI / s);
    let out = qpe(&u, &psi_b, m)?;
    let discarded_mass: f64 = out
        .probs
        .iter()
        .enumerate()
        .filter(|(y, _)| decode_signed_phase(*y, m).abs() < floor)
        .map(|(_, p)| p)
        .sum();
    if discarded_mass > 1.0 - 1e-12 {
        return Err(Error::InvalidArgument(
            "all eigenvalue mass lies below the regularization floor".into(),
        ));
    }
    let n_sys = psi_b.n_qubits();
    let mut joint = out.joint.tensor(&StateVector::new_zero(1)?)?;
    let aux = n_sys + m;
    let phase_reg: Vec<usize> = (n_sys..n_sys + m).collect();
    controlled_rotation_f(&mut joint, &phase_reg, aux, |y| {
        let phi = decode_signed_phase(y, m);
        if phi.abs() < floor {
            0.0
        } else {
            (floor / phi).asin()
        }
    })?;
    let success_probability = joint.postselect_qubit(aux, 1)?;
    joint.drop_qubit(aux)?;
    qpe_uncompute(&u, &mut joint, m)?;
    for q in (n_sys..n_sys + m).rev() {
        joint.postselect_qubit(q, 0)?;
        joint.drop_qubit(q)?;
    }
    let reference = regularized_solve(a, b, s, kappa_target);
    let ref_norm = reference.norm();
    if ref_norm < 1e-12 {
        return Err(Error::Numerical("reference solution vanished".into()));
    }
    let fidelity_vs_exact =
        joint.to_cvec().dotc(&(reference / Complex64::new(ref_norm, 0.0))).norm_sqr();
    Ok(HhlOutcome {
        state: joint,
        success_probability,
        discarded_mass,
        fidelity_vs_exact,
        kappa,
        dilated,
        eigenvalue_scale: s,
    })
}

/// Digital grid for gradient estimation: each of `dim` coordinates gets a
/// `bits`-qubit register with spacing `spacing`, and the oracle phase is
/// `2 pi scale f`.
#[derive(Clone, Copy, Debug)]
pub struct GradientGrid {
    pub dim: usize,
    pub bits: usize,
    pub spacing: f64,
    pub scale: f64,
}

impl GradientGrid {
    /// Smallest gradient increment one readout step represents.
    pub fn resolution(&self) -> f64 {
        1.0 / ((1usize << self.bits) as f64 * self.scale * self.spacing)
    }
}

#[derive(Clone, Debug)]
pub struct GradientOutcome {
    pub gradient: Vec<f64>,
    pub readouts: Vec<usize>,
    /// Coherent phase-oracle queries consumed (always one).
    pub oracle_calls: u64,
}

/// Gradient of a scalar field from a single phase-oracle query: a uniform
/// superposition over the displacement grid picks up phases
/// `2 pi scale f(x0 + delta)`, and a per-coordinate inverse Fourier
/// transform reads the gradient components in two's complement.
pub fn jordan_gradient(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    grid: &GradientGrid,
) -> Result<GradientOutcome> {
    let dim = grid.dim;
    if dim == 0 || x0.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, grid dimension {dim}",
            x0.len()
        )));
    }
    if grid.bits < 2 {
        return Err(Error::InvalidArgument("need at least two bits per coordinate".into()));
    }
    let n_total = dim * grid.bits;
    if n_total > crate::max_qubits() {
        return Err(Error::TooManyQubits { requested: n_total, cap: crate::max_qubits() });
    }
    let g = 1usize << grid.bits;
    let mask = g - 1;
    let displace = |idx: usize| -> Vec<f64> {
        (0..dim)
            .map(|i| {
                let gi = (idx >> (i * grid.bits)) & mask;
                x0[i] + (gi as f64 - (g / 2) as f64) * grid.spacing
            })
            .collect()
    };
    // Tabulate the field once, then check that no single grid step ever
    // advances the phase past half a turn; past that point readouts alias.
    let table: Vec<f64> = (0..1usize << n_total).map(|idx| f(&displace(idx))).collect();
    for (idx, &fv) in table.iter().enumerate() {
        for i in 0..dim {
            let gi = (idx >> (i * grid.bits)) & mask;
            if gi + 1 < g {
                let step = grid.scale * (table[idx + (1 << (i * grid.bits))] - fv);
                if step.abs() >= 0.5 {
                    return Err(Error::InvalidArgument(format!(
                        "scale violates the wrap-around bound: phase step {step:.3} \
                         per grid step on coordinate {i}"
                    )));
                }
            }
        }
    }
    let oracle = PhaseOracle::from_fn(n_total, |idx| {
        2.0 * std::f64::consts::PI * grid.scale * table[idx]
    });
    let mut state = StateVector::new_zero(n_total)?;
    for q in 0..n_total {
        apply_h(&mut state, q)?;
    }
    let all: Vec<usize> = (0..n_total).collect();
    oracle.apply(&mut state, &all)?;
    let mut gradient = Vec::with_capacity(dim);
    let mut readouts = Vec::with_capacity(dim);
    for i in 0..dim {
        let reg: Vec<usize> = (i * grid.bits..(i + 1) * grid.bits).collect();
        crate::fourier::apply_iqft(&mut state, &reg)?;
        let mut marg = vec![0.0f64; g];
        for idx in 0..state.dim() {
            marg[(idx >> (i * grid.bits)) & mask] += state.probability(idx);
        }
        let (y, _) = marg
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        readouts.push(y);
        gradient.push(decode_signed_phase(y, grid.bits) / (grid.scale * grid.spacing));
    }
    Ok(GradientOutcome { gradient, readouts, oracle_calls: oracle.calls() })
}

/// Central-difference gradient, the classical reference.
pub fn central_difference_gradient(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], h: f64) -> Vec<f64> {
    (0..x0.len())
        .map(|i| {
            let mut hi = x0.to_vec();
            let mut lo = x0.to_vec();
            hi[i] += h;
            lo[i] -= h;
            (f(&hi) - f(&lo)) / (2.0 * h)
        })
        .collect()
}

/// Swap operator on two registers of dimension `n` each.
pub fn swap_matrix(n: usize) -> CMat {
    let mut s = CMat::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            s[(a * n + b, b * n + a)] = Complex64::new(1.0, 0.0);
        }
    }
    s
}

/// Trace norm (sum of singular values).
pub fn trace_norm(m: &CMat) -> f64 {
    svd(m).1.iter().sum()
}

/// Trace out the low factor of a bipartite density matrix.
fn ptrace_low(big: &CMat, low_dim: usize) -> CMat {
    let hi = big.nrows() / low_dim;
    let mut out = CMat::zeros(hi, hi);
    for a in 0..hi {
        for b in 0..hi {
            for f in 0..low_dim {
                out[(a, b)] += big[(a * low_dim + f, b * low_dim + f)];
            }
        }
    }
    out
}

/// Trace out the high factor of a bipartite density matrix.
fn ptrace_high(big: &CMat, high_dim: usize) -> CMat {
    let lo = big.nrows() / high_dim;
    let mut out = CMat::zeros(lo, lo);
    for a in 0..lo {
        for b in 0..lo {
            for p in 0..high_dim {
                out[(a, b)] += big[(p * lo + a, p * lo + b)];
            }
        }
    }
    out
}

/// One step of the swap-based evolution channel:
/// `tr_P [ e^{-i S dt} (rho (x) sigma) e^{i S dt} ]`, which matches
/// `e^{-i rho dt} sigma e^{i rho dt}` to second order in `dt`.
pub fn swap_trick_step(rho: &CMat, sigma: &CMat, dt: f64) -> CMat {
    let n = rho.nrows();
    let s = swap_matrix(n);
    let w = CMat::identity(n * n, n * n) * Complex64::new(dt.cos(), 0.0)
        - s * Complex64::new(0.0, dt.sin());
    let big = &w * kron(rho, sigma) * dagger(&w);
    ptrace_high(&big, n)
}

fn validate_density(rho: &CMat) -> Result<Vec<f64>> {
    if hermiticity_defect(rho) > 1e-9 {
        return Err(Error::InvalidArgument("density matrix is not Hermitian".into()));
    }
    let trace: Complex64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
    if (trace.re - 1.0).abs() > 1e-9 || trace.im.abs() > 1e-9 {
        return Err(Error::InvalidArgument("density matrix trace is not 1".into()));
    }
    let (eigvals, _) = eigh(rho);
    if eigvals.iter().any(|&l| l < -1e-9) {
        return Err(Error::InvalidArgument("density matrix is not positive".into()));
    }
    Ok(eigvals)
}

#[derive(Clone, Debug)]
pub struct QpcaOutcome {
    /// `(eigenvalue estimate, readout weight)`, heaviest first.
    pub estimates: Vec<(f64, f64)>,
    /// Raw phase-register distribution.
    pub readout_probs: Vec<f64>,
    /// Elementary swap-channel steps consumed, one fresh copy each.
    pub copies_consumed: usize,
}

/// Spectral read of a density matrix: phase estimation over `e^{-i rho t}`,
/// where every controlled power is realized by repeated swap-channel steps
/// against fresh copies of `rho`, `n_copies` steps per unit power.
pub fn qpca(
    rho: &CMat,
    n_copies: usize,
    t: f64,
    m: usize,
    probe: &StateVector,
) -> Result<QpcaOutcome> {
    let dim = probe.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {}x{}, probe dimension {dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    validate_density(rho)?;
    if m == 0 || n_copies == 0 {
        return Err(Error::InvalidArgument("need phase bits and at least one copy".into()));
    }
    let dt = t / n_copies as f64;
    if dt.abs() > 0.1 {
        return Err(Error::InvalidArgument(format!(
            "time step {dt:.3} too coarse for the swap channel; raise n_copies"
        )));
    }
    let n_sys = probe.n_qubits();
    // Pure start: |probe> (x) |0...0> with the phase register on top, all
    // phase qubits put into superposition.
    let mut start = probe.tensor(&StateVector::new_zero(m)?)?;
    for j in 0..m {
        apply_h(&mut start, n_sys + j)?;
    }
    let mut dm = start.density_matrix();
    let n_big = 2 * n_sys + m;
    let qubits_swap: Vec<usize> = (0..2 * n_sys).collect();
    let mut copies_consumed = 0usize;
    for j in 0..m {
        // Controlled power 2^j of e^{-i rho t}: 2^j * n_copies channel steps.
        let s = swap_matrix(dim);
        let w_small = CMat::identity(dim * dim, dim * dim) * Complex64::new(dt.cos(), 0.0)
            - s * Complex64::new(0.0, dt.sin());
        let step_op = embed_unitary(n_big, &[2 * n_sys + j], &w_small, &qubits_swap);
        let step_dag = dagger(&step_op);
        for _ in 0..(1usize << j) * n_copies {
            let big = &step_op * kron(&dm, rho) * &step_dag;
            dm = ptrace_low(&big, dim);
            copies_consumed += 1;
        }
    }
    let iqft = dagger(&crate::fourier::dft_matrix(m));
    let phase_qubits: Vec<usize> = (n_sys..n_sys + m).collect();
    let f_op = embed_unitary(n_sys + m, &[], &iqft, &phase_qubits);
    dm = &f_op * dm * dagger(&f_op);
    let grid = 1usize << m;
    let mut readout_probs = vec![0.0f64; grid];
    for y in 0..grid {
        for sy in 0..dim {
            readout_probs[y] += dm[(y * dim + sy, y * dim + sy)].re;
        }
    }
    let mut estimates: Vec<(f64, f64)> = readout_probs
        .iter()
        .enumerate()
        .map(|(y, &p)| (y as f64 / grid as f64 * (-2.0 * std::f64::consts::PI / t), p))
        .collect();
    estimates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok(QpcaOutcome { estimates, readout_probs, copies_consumed })
}

/// Parse one scalar cell: a plain real, or a complex literal whose
/// imaginary part carries an `i`/`j` suffix (`1.5`, `2i`, `0.5-0.25j`,
/// `1e-3+2e-2i`).
fn parse_cell(cell: &str) -> Result<Complex64> {
    let s = cell.trim();
    if s.is_empty() {
        return Err(Error::InvalidArgument("empty numeric cell".into()));
    }
    if let Ok(re) = s.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    let lower = s.to_ascii_lowercase();
    let body = lower
        .strip_suffix('i')
        .or_else(|| lower.strip_suffix('j'))
        .ok_or_else(|| Error::InvalidArgument(format!("cannot parse {s:?} as a number")))?;
    // Split at the sign of the imaginary term: the last +/- that does not
    // open the string and does not belong to an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'e' {
            split = Some(k);
            break;
        }
    }
    let (re_str, im_str) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im_str {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => im_str.parse::<f64>(),
    };
    match (re_str.parse::<f64>(), im) {
        (Ok(re), Ok(im)) => Ok(Complex64::new(re, im)),
        _ => Err(Error::InvalidArgument(format!("cannot parse {s:?} as a number"))),
    }
}

/// Parse a dense matrix from CSV text: one row per line, comma-separated
/// cells, each a real or suffixed complex literal. Blank lines and lines
/// starting with `#` are skipped; rows must share one length.
pub fn matrix_from_csv(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<Complex64> = line
            .split(',')
            .map(|c| {
                parse_cell(c).map_err(|e| {
                    Error::InvalidArgument(format!("line {}: {e}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::DimensionMismatch(format!(
                    "line {}: row has {} cells, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no matrix rows found".into()));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(CMat::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Parse a vector from CSV text: cells separated by commas or newlines.
pub fn vector_from_csv(text: &str) -> Result<CVec> {
    let mut vals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for cell in line.split(',') {
            vals.push(parse_cell(cell).map_err(|e| {
                Error::InvalidArgument(format!("line {}: {e}", lineno + 1))
            })?);
        }
    }
    if vals.is_empty() {
        return Err(Error::InvalidArgument("no vector entries found".into()));
    }
    Ok(CVec::from_vec(vals))
}

/// Parse a sparse matrix in MatrixMarket coordinate format into a dense
/// complex matrix.
///
/// Supports the `real`, `integer`, and `complex` fields with `general`,
/// `symmetric`, or `hermitian` symmetry. Indices are 1-based; symmetric
/// and hermitian files list the lower triangle only, and the mirror image
/// is filled in here. Duplicate coordinates are rejected.
pub fn matrix_from_matrix_market(text: &str) -> Result<CMat> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty MatrixMarket input".into()))?;
    let head: Vec<String> =
        header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if head.len() != 5
        || head[0] != "%%matrixmarket"
        || head[1] != "matrix"
        || head[2] != "coordinate"
    {
        return Err(Error::InvalidArgument(
            "expected a '%%MatrixMarket matrix coordinate <field> <symmetry>' header".into(),
        ));
    }
    let field = head[3].as_str();
    if !matches!(field, "real" | "integer" | "complex") {
        return Err(Error::InvalidArgument(format!(
            "unsupported MatrixMarket field {field:?}"
        )));
    }
    let symmetry = head[4].as_str();
    if !matches!(symmetry, "general" | "symmetric" | "hermitian") {
        return Err(Error::InvalidArgument(format!(
            "unsupported MatrixMarket symmetry {symmetry:?}"
        )));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut m = CMat::zeros(0, 0);
    let mut seen: Vec<bool> = Vec::new();
    let mut entries = 0usize;
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| {
            Error::InvalidArgument(format!("line {}: {what}", lineno + 1))
        };
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(bad("size line must read 'rows cols nnz'"));
                }
                let nr: usize = toks[0].parse().map_err(|_| bad("bad row count"))?;
                let nc: usize = toks[1].parse().map_err(|_| bad("bad column count"))?;
                let nnz: usize = toks[2].parse().map_err(|_| bad("bad entry count"))?;
                if nr == 0 || nc == 0 {
                    return Err(bad("matrix dimensions must be positive"));
                }
                if symmetry != "general" && nr != nc {
                    return Err(bad("symmetric storage needs a square matrix"));
                }
                m = CMat::zeros(nr, nc);
                seen = vec![false; nr * nc];
                size = Some((nr, nc, nnz));
            }
            Some((nr, nc, nnz)) => {
                let want = if field == "complex" { 4 } else { 3 };
                if toks.len() != want {
                    return Err(bad("wrong number of fields in entry"));
                }
                let i: usize = toks[0].parse().map_err(|_| bad("bad row index"))?;
                let j: usize = toks[1].parse().map_err(|_| bad("bad column index"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(bad("coordinate out of range (indices are 1-based)"));
                }
                let re: f64 = toks[2].parse().map_err(|_| bad("bad value"))?;
                let im: f64 = if field == "complex" {
                    toks[3].parse().map_err(|_| bad("bad imaginary part"))?
                } else {
                    0.0
                };
                let (i, j) = (i - 1, j - 1);
                if seen[i * nc + j] {
                    return Err(bad("duplicate coordinate"));
                }
                seen[i * nc + j] = true;
                let z = Complex64::new(re, im);
                m[(i, j)] = z;
                if i != j {
                    match symmetry {
                        "symmetric" => {
                            seen[j * nc + i] = true;
                            m[(j, i)] = z;
                        }
                        "hermitian" => {
                            seen[j * nc + i] = true;
                            m[(j, i)] = z.conj();
                        }
                        _ => {}
                    }
                } else if symmetry == "hermitian" && im != 0.0 {
                    return Err(bad("hermitian diagonal entries must be real"));
                }
                entries += 1;
                if entries > nnz {
                    return Err(bad("more entries than the size line declared"));
                }
            }
        }
    }
    match size {
        None => Err(Error::InvalidArgument("missing MatrixMarket size line".into())),
        Some((_, _, nnz)) if entries != nnz => Err(Error::InvalidArgument(format!(
            "size line declared {nnz} entries but {entries} were given"
        ))),
        _ => Ok(m),
    }
}
