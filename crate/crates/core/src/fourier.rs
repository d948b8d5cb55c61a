//! Quantum Fourier transform and phase estimation.
//!
//! The QFT here is the genuine O(n^2) product-form circuit (Hadamards plus
//! controlled phases plus the final bit-reversal swaps), not a matrix
//! multiply; the dense DFT matrix lives alongside it purely as the oracle
//! the circuit is tested against. Convention: `QFT |m> = 2^{-n/2} sum_y
//! e^{+2 pi i m y / 2^n} |y>` on little-endian registers.
//!
//! Phase estimation reads an eigenphase of a unitary into an `m`-bit
//! register using controlled powers `U^{2^j}` formed by repeated squaring
//! (so the recorded oracle cost of the `j`-th rung is `2^j` base
//! applications). The inverse QFT includes the swap layer, so the register
//! reads out as a plain little-endian integer.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gates::{apply_h, apply_swap, controlled_unitary_on_qubits, matrices, Circuit, Op};
use crate::linalg::{cis, dagger, unitarity_defect, CMat};
use crate::state::StateVector;

/// Forward DFT matrix `F[y][m] = e^{+2 pi i y m / N} / sqrt(N)`: the oracle
/// the QFT circuit must reproduce.
pub fn dft_matrix(n_qubits: usize) -> CMat {
    let dim = 1usize << n_qubits;
    let mut f = CMat::zeros(dim, dim);
    let w = 2.0 * std::f64::consts::PI / dim as f64;
    for y in 0..dim {
        for m in 0..dim {
            f[(y, m)] = cis(w * (y * m % dim) as f64) / Complex64::new((dim as f64).sqrt(), 0.0);
        }
    }
    f
}

/// Apply the product-form QFT to the qubit list `reg` (bit i of the
/// register value lives on `reg[i]`).
pub fn apply_qft(state: &mut StateVector, reg: &[usize]) -> Result<()> {
    qft_ops(state, reg, false)
}

/// Inverse QFT on `reg`.
pub fn apply_iqft(state: &mut StateVector, reg: &[usize]) -> Result<()> {
    qft_ops(state, reg, true)
}

fn qft_ops(state: &mut StateVector, reg: &[usize], inverse: bool) -> Result<()> {
    let n = reg.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty QFT register".into()));
    }
    let sign = if inverse { -1.0 } else { 1.0 };
    let body = |state: &mut StateVector, i: usize, forward: bool| -> Result<()> {
        if forward {
            apply_h(state, reg[i])?;
            for j in (0..i).rev() {
                let theta = sign * std::f64::consts::PI / (1usize << (i - j)) as f64;
                controlled_unitary_on_qubits(state, &[reg[j]], &matrices::phase(theta), &[reg[i]])?;
            }
        } else {
            for j in 0..i {
                let theta = sign * std::f64::consts::PI / (1usize << (i - j)) as f64;
                controlled_unitary_on_qubits(state, &[reg[j]], &matrices::phase(theta), &[reg[i]])?;
            }
            apply_h(state, reg[i])?;
        }
        Ok(())
    };
    if !inverse {
        for i in (0..n).rev() {
            body(state, i, true)?;
        }
        for i in 0..n / 2 {
            apply_swap(state, reg[i], reg[n - 1 - i])?;
        }
    } else {
        for i in 0..n / 2 {
            apply_swap(state, reg[i], reg[n - 1 - i])?;
        }
        for i in 0..n {
            body(state, i, false)?;
        }
    }
    Ok(())
}

/// The same product form as a standalone JSON-able circuit on `0..n`.
pub fn qft_circuit(n_qubits: usize) -> Circuit {
    let mut c = Circuit::new(n_qubits);
    for i in (0..n_qubits).rev() {
        c.push(Op::simple("H", vec![i]));
        for j in (0..i).rev() {
            let theta = std::f64::consts::PI / (1usize << (i - j)) as f64;
            c.push(Op {
                kind: "CPHASE".into(),
                c: vec![j],
                t: vec![i],
                theta: Some(theta),
            });
        }
    }
    for i in 0..n_qubits / 2 {
        c.push(Op::simple("SWAP", vec![i, n_qubits - 1 - i]));
    }
    c
}

/// Everything phase estimation produces in exact mode.
#[derive(Clone, Debug)]
pub struct QpeOutcome {
    /// Born distribution over the `2^m` phase-register readouts.
    pub probs: Vec<f64>,
    /// Most likely readout.
    pub y_max: usize,
    /// Its probability.
    pub p_max: f64,
    /// Joint state after the inverse QFT (system low, phase register high),
    /// before any measurement.
    pub joint: StateVector,
    /// Base-unitary applications consumed by the controlled powers
    /// (`2^m - 1` when powers are charged at `2^j` per rung).
    pub oracle_applications: u64,
}

impl QpeOutcome {
    /// Collapse the phase register to a specific readout, returning the
    /// normalized system state and the readout probability.
    pub fn postselect_readout(&self, y: usize, m_bits: usize) -> Result<(StateVector, f64)> {
        let n_sys = self.joint.n_qubits() - m_bits;
        let mut s = self.joint.clone();
        let mut p_total = 1.0;
        for j in 0..m_bits {
            let bit = ((y >> j) & 1) as u8;
            p_total *= s.postselect_qubit(n_sys + j, bit)?;
        }
        // Drop the now-deterministic phase qubits.
        let mut amps = Vec::with_capacity(1 << n_sys);
        let fixed = y << n_sys;
        for i in 0..(1usize << n_sys) {
            amps.push(s.amp(fixed | i));
        }
        Ok((StateVector::from_amplitudes(amps)?, p_total))
    }
}

/// Phase estimation of `u` on `system` with an `m`-bit register.
///
/// For an eigenstate with `u|v> = e^{2 pi i theta}|v>`, the readout
/// distribution peaks at `y ~ theta 2^m`; a superposition of eigenstates
/// yields the probability-weighted mixture of the per-eigenstate
/// distributions.
pub fn qpe(u: &CMat, system: &StateVector, m: usize) -> Result<QpeOutcome> {
    let dim = system.dim();
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, system dimension {dim}",
            u.nrows(),
            u.ncols()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one phase bit".into()));
    }
    let defect = unitarity_defect(u);
    if defect > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "matrix is not unitary, defect {defect:.3e}"
        )));
    }
    let n_sys = system.n_qubits();
    let sys_qubits: Vec<usize> = (0..n_sys).collect();
    let mut joint = system.tensor(&StateVector::new_zero(m)?)?;
    for j in 0..m {
        apply_h(&mut joint, n_sys + j)?;
    }
    let mut power = u.clone();
    let mut oracle_applications = 0u64;
    for j in 0..m {
        if j > 0 {
            power = &power * &power;
        }
        controlled_unitary_on_qubits(&mut joint, &[n_sys + j], &power, &sys_qubits)?;
        oracle_applications += 1u64 << j;
    }
    let phase_reg: Vec<usize> = (n_sys..n_sys + m).collect();
    apply_iqft(&mut joint, &phase_reg)?;
    let mut probs = vec![0.0f64; 1 << m];
    for idx in 0..joint.dim() {
        probs[idx >> n_sys] += joint.probability(idx);
    }
    let (y_max, &p_max) = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    Ok(QpeOutcome { probs, y_max, p_max, joint, oracle_applications })
}

/// Invert the phase-estimation transform on a joint system-plus-phase
/// state: after `qpe`, this returns the register to `system (x) |0>`,
/// exactly so when every eigenphase is an exact m-bit fraction.
pub fn qpe_uncompute(u: &CMat, joint: &mut StateVector, m: usize) -> Result<()> {
    if m == 0 || m >= joint.n_qubits() {
        return Err(Error::InvalidArgument(
            "phase register must be smaller than the joint register".into(),
        ));
    }
    let n_sys = joint.n_qubits() - m;
    if u.nrows() != 1 << n_sys {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, system dimension {}",
            u.nrows(),
            u.ncols(),
            1 << n_sys
        )));
    }
    let sys_qubits: Vec<usize> = (0..n_sys).collect();
    let phase_reg: Vec<usize> = (n_sys..n_sys + m).collect();
    apply_qft(joint, &phase_reg)?;
    // Controlled powers of U^dag commute with each other, so ascending
    // order inverts the forward pass.
    let mut power = dagger(u);
    for j in 0..m {
        if j > 0 {
            power = &power * &power;
        }
        controlled_unitary_on_qubits(joint, &[n_sys + j], &power, &sys_qubits)?;
    }
    for j in 0..m {
        apply_h(joint, n_sys + j)?;
    }
    Ok(())
}

/// Diagonal unitary with the given phase fractions: `|k> -> e^{2 pi i
/// theta_k} |k>`. Handy for grid and linearity tests and for spectral
/// post-processing demos.
pub fn diagonal_unitary(thetas: &[f64]) -> CMat {
    let dim = thetas.len();
    let mut u = CMat::zeros(dim, dim);
    for (k, &t) in thetas.iter().enumerate() {
        u[(k, k)] = cis(2.0 * std::f64::consts::PI * t);
    }
    u
}
