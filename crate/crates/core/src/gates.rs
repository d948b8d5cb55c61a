//! Gate kernels and the circuit description layer.
//!
//! Single-qubit gates run as stride kernels over amplitude pairs; wider
//! unitaries go through a gather/scatter kernel that works for any target
//! list. Controlled application never builds a bigger matrix: it masks the
//! basis indices whose control bits are set and applies the base unitary to
//! the target slots of just those.
//!
//! The dense path (`circuit_matrix`, `embed_unitary`) exists for oracle
//! comparisons: it builds the full `2^n x 2^n` matrix by index bookkeeping
//! alone, sharing no code with the stride kernels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat};
use crate::rng::SimRng;
use crate::state::StateVector;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// 2x2 gate matrices, also used to assemble dense oracles.
pub mod matrices {
    use super::*;

    pub fn h() -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMat::from_row_slice(2, 2, &[
            Complex64::new(s, 0.0), Complex64::new(s, 0.0),
            Complex64::new(s, 0.0), Complex64::new(-s, 0.0),
        ])
    }

    pub fn x() -> CMat {
        CMat::from_row_slice(2, 2, &[C0, C1, C1, C0])
    }

    pub fn y() -> CMat {
        CMat::from_row_slice(2, 2, &[C0, -CI, CI, C0])
    }

    pub fn z() -> CMat {
        CMat::from_row_slice(2, 2, &[C1, C0, C0, -C1])
    }

    /// diag(1, e^{i phi}).
    pub fn phase(phi: f64) -> CMat {
        CMat::from_row_slice(2, 2, &[C1, C0, C0, cis(phi)])
    }

    pub fn s() -> CMat {
        phase(std::f64::consts::FRAC_PI_2)
    }

    pub fn t() -> CMat {
        phase(std::f64::consts::FRAC_PI_4)
    }

    /// R_x(phi) = exp(-i phi X / 2).
    pub fn rx(phi: f64) -> CMat {
        let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
        CMat::from_row_slice(2, 2, &[
            Complex64::new(c, 0.0), Complex64::new(0.0, -s),
            Complex64::new(0.0, -s), Complex64::new(c, 0.0),
        ])
    }

    /// R_y(phi) = [[cos phi/2, -sin phi/2], [sin phi/2, cos phi/2]].
    pub fn ry(phi: f64) -> CMat {
        let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
        CMat::from_row_slice(2, 2, &[
            Complex64::new(c, 0.0), Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0), Complex64::new(c, 0.0),
        ])
    }

    /// R_z(phi) = diag(e^{-i phi/2}, e^{+i phi/2}).
    pub fn rz(phi: f64) -> CMat {
        CMat::from_row_slice(2, 2, &[cis(-phi / 2.0), C0, C0, cis(phi / 2.0)])
    }
}

/// Apply a 2x2 unitary to qubit `q` with the stride kernel.
pub fn apply_1q(state: &mut StateVector, u: &CMat, q: usize) -> Result<()> {
    let n = state.n_qubits();
    if q >= n {
        return Err(Error::QubitOutOfRange { q, n });
    }
    debug_assert_eq!(u.shape(), (2, 2));
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    let step = 1usize << q;
    let amps = state.amps_mut();
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for off in base..base + step {
            let a0 = amps[off];
            let a1 = amps[off + step];
            amps[off] = u00 * a0 + u01 * a1;
            amps[off + step] = u10 * a0 + u11 * a1;
        }
        base += 2 * step;
    }
    Ok(())
}

pub fn apply_h(state: &mut StateVector, q: usize) -> Result<()> {
    apply_1q(state, &matrices::h(), q)
}

pub fn apply_x(state: &mut StateVector, q: usize) -> Result<()> {
    apply_1q(state, &matrices::x(), q)
}

pub fn apply_y(state: &mut StateVector, q: usize) -> Result<()> {
    apply_1q(state, &matrices::y(), q)
}

pub fn apply_z(state: &mut StateVector, q: usize) -> Result<()> {
    apply_1q(state, &matrices::z(), q)
}

pub fn apply_phase(state: &mut StateVector, phi: f64, q: usize) -> Result<()> {
    apply_1q(state, &matrices::phase(phi), q)
}

pub fn apply_rx(state: &mut StateVector, phi: f64, q: usize) -> Result<()> {
    apply_1q(state, &matrices::rx(phi), q)
}

pub fn apply_ry(state: &mut StateVector, phi: f64, q: usize) -> Result<()> {
    apply_1q(state, &matrices::ry(phi), q)
}

pub fn apply_rz(state: &mut StateVector, phi: f64, q: usize) -> Result<()> {
    apply_1q(state, &matrices::rz(phi), q)
}

/// Apply a dense `2^k x 2^k` unitary to the ordered qubit list `qubits`
/// (bit i of the sub-index lives on `qubits[i]`).
pub fn apply_unitary_on_qubits(state: &mut StateVector, u: &CMat, qubits: &[usize]) -> Result<()> {
    controlled_unitary_on_qubits(state, &[], u, qubits)
}

/// Apply `u` on `qubits` only in the subspace where every qubit in
/// `controls` is 1. Controls and targets must be disjoint.
pub fn controlled_unitary_on_qubits(
    state: &mut StateVector,
    controls: &[usize],
    u: &CMat,
    qubits: &[usize],
) -> Result<()> {
    let n = state.n_qubits();
    let k = qubits.len();
    let sub_dim = 1usize << k;
    if u.nrows() != sub_dim || u.ncols() != sub_dim {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix on {} target qubits",
            u.nrows(),
            u.ncols(),
            k
        )));
    }
    let mut tmask = 0usize;
    for &q in qubits {
        if q >= n {
            return Err(Error::QubitOutOfRange { q, n });
        }
        if tmask & (1 << q) != 0 {
            return Err(Error::InvalidArgument(format!("duplicate target qubit {q}")));
        }
        tmask |= 1 << q;
    }
    let mut cmask = 0usize;
    for &q in controls {
        if q >= n {
            return Err(Error::QubitOutOfRange { q, n });
        }
        if (tmask | cmask) & (1 << q) != 0 {
            return Err(Error::InvalidArgument(format!(
                "control qubit {q} collides with another operand"
            )));
        }
        cmask |= 1 << q;
    }
    // Scatter table: sub-index s -> its bits placed on the target qubits.
    let scatter: Vec<usize> = (0..sub_dim)
        .map(|s| {
            let mut m = 0usize;
            for (i, &q) in qubits.iter().enumerate() {
                m |= ((s >> i) & 1) << q;
            }
            m
        })
        .collect();
    let dim = state.dim();
    let amps = state.amps_mut();
    let mut old = vec![C0; sub_dim];
    for base in 0..dim {
        if base & tmask != 0 || base & cmask != cmask {
            continue;
        }
        for s in 0..sub_dim {
            old[s] = amps[base | scatter[s]];
        }
        for (snew, &sc) in scatter.iter().enumerate() {
            let mut acc = C0;
            for (sold, &o) in old.iter().enumerate() {
                acc += u[(snew, sold)] * o;
            }
            amps[base | sc] = acc;
        }
    }
    Ok(())
}

pub fn apply_cnot(state: &mut StateVector, c: usize, t: usize) -> Result<()> {
    controlled_unitary_on_qubits(state, &[c], &matrices::x(), &[t])
}

pub fn apply_cz(state: &mut StateVector, c: usize, t: usize) -> Result<()> {
    controlled_unitary_on_qubits(state, &[c], &matrices::z(), &[t])
}

pub fn apply_swap(state: &mut StateVector, a: usize, b: usize) -> Result<()> {
    let mut swap = CMat::zeros(4, 4);
    swap[(0, 0)] = C1;
    swap[(1, 2)] = C1;
    swap[(2, 1)] = C1;
    swap[(3, 3)] = C1;
    apply_unitary_on_qubits(state, &swap, &[a, b])
}

pub fn apply_toffoli(state: &mut StateVector, c0: usize, c1: usize, t: usize) -> Result<()> {
    controlled_unitary_on_qubits(state, &[c0, c1], &matrices::x(), &[t])
}

pub fn apply_cswap(state: &mut StateVector, c: usize, a: usize, b: usize) -> Result<()> {
    let mut swap = CMat::zeros(4, 4);
    swap[(0, 0)] = C1;
    swap[(1, 2)] = C1;
    swap[(2, 1)] = C1;
    swap[(3, 3)] = C1;
    controlled_unitary_on_qubits(state, &[c], &swap, &[a, b])
}

/// `|x>|0> -> |x>(cos f(x) |0> + sin f(x) |1>)`: rotate `aux` by
/// `R_y(2 f(x))` conditioned on the value `x` held in `reg`.
///
/// `reg` lists the register qubits little-endian (bit i of `x` on `reg[i]`);
/// `aux` must not be in `reg`. Arbitrary aux input states are handled, the
/// rotation is just controlled by the register value.
pub fn controlled_rotation_f(
    state: &mut StateVector,
    reg: &[usize],
    aux: usize,
    f: impl Fn(usize) -> f64,
) -> Result<()> {
    let n = state.n_qubits();
    let mut rmask = 0usize;
    for &q in reg {
        if q >= n {
            return Err(Error::QubitOutOfRange { q, n });
        }
        rmask |= 1 << q;
    }
    if aux >= n {
        return Err(Error::QubitOutOfRange { q: aux, n });
    }
    if rmask & (1 << aux) != 0 {
        return Err(Error::InvalidArgument("aux qubit inside register".into()));
    }
    let amask = 1usize << aux;
    let dim = state.dim();
    let amps = state.amps_mut();
    for base in 0..dim {
        if base & amask != 0 {
            continue;
        }
        let mut x = 0usize;
        for (i, &q) in reg.iter().enumerate() {
            x |= ((base >> q) & 1) << i;
        }
        let theta = f(x);
        let (c, s) = (theta.cos(), theta.sin());
        let a0 = amps[base];
        let a1 = amps[base | amask];
        amps[base] = Complex64::new(c, 0.0) * a0 - Complex64::new(s, 0.0) * a1;
        amps[base | amask] = Complex64::new(s, 0.0) * a0 + Complex64::new(c, 0.0) * a1;
    }
    Ok(())
}

/// Embed a `2^k x 2^k` unitary acting on `qubits` (with optional controls)
/// into the full `2^n x 2^n` matrix. Oracle path: pure index bookkeeping.
pub fn embed_unitary(n: usize, controls: &[usize], u: &CMat, qubits: &[usize]) -> CMat {
    let dim = 1usize << n;
    let k = qubits.len();
    let sub_dim = 1usize << k;
    assert_eq!(u.nrows(), sub_dim);
    let mut cmask = 0usize;
    for &q in controls {
        cmask |= 1 << q;
    }
    let mut tmask = 0usize;
    for &q in qubits {
        tmask |= 1 << q;
    }
    let sub_index = |full: usize| -> usize {
        let mut s = 0usize;
        for (i, &q) in qubits.iter().enumerate() {
            s |= ((full >> q) & 1) << i;
        }
        s
    };
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        if col & cmask != cmask {
            out[(col, col)] = C1;
            continue;
        }
        let rest = col & !tmask;
        let sc = sub_index(col);
        for sr in 0..sub_dim {
            let mut row = rest;
            for (i, &q) in qubits.iter().enumerate() {
                row |= ((sr >> i) & 1) << q;
            }
            out[(row, col)] = u[(sr, sc)];
        }
    }
    out
}

/// Dense matrix of any state transformer, columnwise: apply `f` to each
/// basis state. Lets gate-level constructions feed matrix-level algorithms.
pub fn matrix_from_apply(
    n_qubits: usize,
    mut f: impl FnMut(&mut StateVector) -> Result<()>,
) -> Result<CMat> {
    let dim = 1usize << n_qubits;
    let mut m = CMat::zeros(dim, dim);
    for col in 0..dim {
        let mut s = StateVector::basis_state(n_qubits, col)?;
        f(&mut s)?;
        for row in 0..dim {
            m[(row, col)] = s.amp(row);
        }
    }
    Ok(m)
}

/// One circuit operation. `kind` is the gate name; `c` holds control
/// qubits, `t` targets, `theta` the angle for rotation and phase kinds.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Op {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c: Vec<usize>,
    pub t: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl Op {
    pub fn simple(kind: &str, t: Vec<usize>) -> Self {
        Op { kind: kind.into(), c: vec![], t, theta: None }
    }

    pub fn controlled(kind: &str, c: Vec<usize>, t: Vec<usize>) -> Self {
        Op { kind: kind.into(), c, t, theta: None }
    }

    pub fn rotation(kind: &str, t: usize, theta: f64) -> Self {
        Op { kind: kind.into(), c: vec![], t: vec![t], theta: Some(theta) }
    }

    /// Arity check plus the base 2x2/4x4 matrix and implied controls.
    fn resolve(&self) -> Result<(Vec<usize>, CMat, Vec<usize>)> {
        let bad = |msg: &str| Error::InvalidArgument(format!("op {:?}: {msg}", self.kind));
        let need_theta = || {
            self.theta
                .ok_or_else(|| bad("missing theta"))
        };
        let no_theta = |m: CMat| -> Result<CMat> {
            if self.theta.is_some() {
                return Err(bad("theta not allowed"));
            }
            Ok(m)
        };
        let (nc, nt, base): (usize, usize, CMat) = match self.kind.as_str() {
            "H" => (0, 1, no_theta(matrices::h())?),
            "X" => (0, 1, no_theta(matrices::x())?),
            "Y" => (0, 1, no_theta(matrices::y())?),
            "Z" => (0, 1, no_theta(matrices::z())?),
            "S" => (0, 1, no_theta(matrices::s())?),
            "T" => (0, 1, no_theta(matrices::t())?),
            "RX" => (0, 1, matrices::rx(need_theta()?)),
            "RY" => (0, 1, matrices::ry(need_theta()?)),
            "RZ" => (0, 1, matrices::rz(need_theta()?)),
            "PHASE" => (0, 1, matrices::phase(need_theta()?)),
            "CPHASE" => (1, 1, matrices::phase(need_theta()?)),
            "CNOT" => (1, 1, no_theta(matrices::x())?),
            "CZ" => (1, 1, no_theta(matrices::z())?),
            "SWAP" => {
                let mut m = CMat::zeros(4, 4);
                m[(0, 0)] = C1;
                m[(1, 2)] = C1;
                m[(2, 1)] = C1;
                m[(3, 3)] = C1;
                (0, 2, no_theta(m)?)
            }
            "TOFFOLI" => (2, 1, no_theta(matrices::x())?),
            "CSWAP" => {
                let mut m = CMat::zeros(4, 4);
                m[(0, 0)] = C1;
                m[(1, 2)] = C1;
                m[(2, 1)] = C1;
                m[(3, 3)] = C1;
                (1, 2, no_theta(m)?)
            }
            other => return Err(Error::InvalidArgument(format!("unknown gate kind {other:?}"))),
        };
        if self.c.len() != nc {
            return Err(bad(&format!("expected {nc} controls, got {}", self.c.len())));
        }
        if self.t.len() != nt {
            return Err(bad(&format!("expected {nt} targets, got {}", self.t.len())));
        }
        Ok((self.c.clone(), base, self.t.clone()))
    }

    /// Inverse operation (dagger).
    pub fn inverse(&self) -> Op {
        let mut inv = self.clone();
        match self.kind.as_str() {
            "RX" | "RY" | "RZ" | "PHASE" | "CPHASE" => {
                inv.theta = self.theta.map(|t| -t);
            }
            "S" => {
                inv.kind = "PHASE".into();
                inv.theta = Some(-std::f64::consts::FRAC_PI_2);
            }
            "T" => {
                inv.kind = "PHASE".into();
                inv.theta = Some(-std::f64::consts::FRAC_PI_4);
            }
            // The rest are involutions.
            _ => {}
        }
        inv
    }
}

/// An ordered gate list over a fixed register width, the JSON exchange
/// format for circuits.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, ops: vec![] }
    }

    pub fn push(&mut self, op: Op) {
        self.ops.push(op);
    }

    /// Run the circuit on `state` with the stride/masked kernels.
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "circuit width {} vs state width {}",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        for op in &self.ops {
            let (controls, base, targets) = op.resolve()?;
            if controls.is_empty() && targets.len() == 1 {
                apply_1q(state, &base, targets[0])?;
            } else {
                controlled_unitary_on_qubits(state, &controls, &base, &targets)?;
            }
        }
        Ok(())
    }

    /// Reversed, daggered circuit.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(Op::inverse).collect(),
        }
    }

    /// Dense matrix of the whole circuit, built by the oracle path.
    pub fn to_matrix(&self) -> Result<CMat> {
        let dim = 1usize << self.n_qubits;
        let mut m = CMat::identity(dim, dim);
        for op in &self.ops {
            let (controls, base, targets) = op.resolve()?;
            let full = embed_unitary(self.n_qubits, &controls, &base, &targets);
            m = full * m;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Random circuit over the full gate set, for drift and equivalence tests.
pub fn random_circuit(n_qubits: usize, n_ops: usize, rng: &mut SimRng) -> Circuit {
    use rand::Rng;
    let mut c = Circuit::new(n_qubits);
    for _ in 0..n_ops {
        let pick = rng.gen_range(0..12);
        let q = rng.gen_range(0..n_qubits);
        let op = match pick {
            0 => Op::simple("H", vec![q]),
            1 => Op::simple("X", vec![q]),
            2 => Op::simple("Y", vec![q]),
            3 => Op::simple("Z", vec![q]),
            4 => Op::simple("S", vec![q]),
            5 => Op::rotation("RX", q, rng.gen_range(-3.2..3.2)),
            6 => Op::rotation("RY", q, rng.gen_range(-3.2..3.2)),
            7 => Op::rotation("RZ", q, rng.gen_range(-3.2..3.2)),
            8 => Op::rotation("PHASE", q, rng.gen_range(-3.2..3.2)),
            _ if n_qubits >= 2 => {
                let mut other = rng.gen_range(0..n_qubits);
                while other == q {
                    other = rng.gen_range(0..n_qubits);
                }
                match pick {
                    9 => Op::controlled("CNOT", vec![q], vec![other]),
                    10 => Op::controlled("CZ", vec![q], vec![other]),
                    _ => {
                        if n_qubits >= 3 {
                            let mut third = rng.gen_range(0..n_qubits);
                            while third == q || third == other {
                                third = rng.gen_range(0..n_qubits);
                            }
                            Op::controlled("TOFFOLI", vec![q, other], vec![third])
                        } else {
                            Op::simple("SWAP", vec![q, other])
                        }
                    }
                }
            }
            _ => Op::simple("H", vec![q]),
        };
        c.push(op);
    }
    c
}
