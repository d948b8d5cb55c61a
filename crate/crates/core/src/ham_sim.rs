//! Hamiltonian evolution: product formulas, truncated series of unitaries,
//! and a walk operator that encodes the spectrum in its eigenphases.
//!
//! A Hamiltonian is handed around as a weighted sum of local terms,
//! `H = sum_l alpha_l O_l`. The same [`HamiltonianSum`] feeds two engines
//! with different term requirements: the product formula needs Hermitian
//! terms, the series method needs unitary ones. Pauli strings satisfy both,
//! and [`pauli_decompose`] rewrites any small dense Hermitian matrix in that
//! form.
//!
//! `lcu_evolve` expands `exp(-iHt)` to Taylor order `K` and realizes the
//! truncated series as one prepare / select / unprepare sandwich over a flat
//! ancilla register, one branch per term of the expansion. Evolution time is
//! cut into segments short enough that the series weight `s = sum_k (A
//! t_seg)^k / k!` (with `A = sum_l alpha_l`) stays at most 2; an extra
//! rotated qubit then pulls the good-branch amplitude down to exactly 1/2,
//! where a single oblivious amplitude amplification round `-W R W' R` lands
//! the walk on the target block with probability 1 up to the series tail.
//!
//! `build_qubitization` quantizes the Hamiltonian itself rather than its
//! exponential. A sign qubit is adjoined first, giving the doubled operator
//! `X (x) H` whose diagonal vanishes, and square-root magnitudes of its
//! entries are split symmetrically across the two walk registers so that the
//! two-register overlap reproduces `(X (x) H) / |H|_1` exactly (this is
//! checked at build time). The walk `U = i S (2 T T' - I)` then has, for
//! every eigenvalue `lambda` of `H`, the eigenvalue pair `mu = i x +/-
//! sqrt(1 - x^2)` with `x = lambda / |H|_1`, i.e. eigenphases
//! `+/- arcsin(lambda / |H|_1)` up to the sign convention of the leading
//! factor `i`. `qw_lcu_evolve` turns the same walk back into dynamics
//! through the Bessel expansion `exp(-itH/|H|_1) = sum_m J_m(-t) U^m`
//! restricted to the walk's invariant blocks.

use num_complex::Complex64;
use serde::Deserialize;

use crate::encoding::{HamNorms, SparseHamiltonian};
use crate::error::{Error, Result};
use crate::gates::matrices;
use crate::linalg::{
    cis, dagger, eigh, expm_hermitian, hermiticity_defect, kron, mat_max_diff, unitarity_defect,
    unitary_with_first_column, CMat, CVec,
};
use crate::qlinalg::swap_matrix;
use crate::state::StateVector;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Dense matrix of a Pauli string such as `"XZI"`. The leftmost letter acts
/// on the highest-indexed qubit, matching the register print order.
pub fn pauli_matrix(label: &str) -> Result<CMat> {
    if label.is_empty() {
        return Err(Error::InvalidArgument("empty Pauli string".into()));
    }
    let mut m = CMat::identity(1, 1);
    for c in label.chars() {
        let p = match c {
            'I' => CMat::identity(2, 2),
            'X' => matrices::x(),
            'Y' => matrices::y(),
            'Z' => matrices::z(),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "Pauli string may only contain I, X, Y, Z; found {other:?}"
                )))
            }
        };
        m = kron(&m, &p);
    }
    Ok(m)
}

/// Expand a dense Hermitian matrix over Pauli strings: `H = sum c_P P` with
/// real coefficients `c_P = tr(P H) / 2^n`. Strings with `|c| <= 1e-12` are
/// dropped. Capped at 6 qubits, where the basis already has 4096 elements.
pub fn pauli_decompose(h: &CMat) -> Result<Vec<(f64, String)>> {
    let dim = h.nrows();
    if dim != h.ncols() || !dim.is_power_of_two() || dim < 2 {
        return Err(Error::DimensionMismatch(format!(
            "Pauli expansion needs a square power-of-two matrix, got {dim}x{}",
            h.ncols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > 6 {
        return Err(Error::InvalidArgument(format!(
            "Pauli expansion over {n} qubits would enumerate 4^{n} strings; capped at 6"
        )));
    }
    let defect = hermiticity_defect(h);
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian, defect {defect:.3e}"
        )));
    }
    let mut terms = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let label: String = (0..n)
            .rev()
            .map(|q| ['I', 'X', 'Y', 'Z'][(code >> (2 * q)) & 3])
            .collect();
        let p = pauli_matrix(&label)?;
        // tr(P H) is real for Hermitian H since every Pauli string is too.
        let tr: Complex64 = (0..dim).map(|i| (0..dim).map(|j| p[(i, j)] * h[(j, i)]).sum::<Complex64>()).sum();
        let c = tr.re / dim as f64;
        if c.abs() > 1e-12 {
            terms.push((c, label));
        }
    }
    Ok(terms)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    alpha: f64,
    pauli: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SumJson {
    terms: Vec<TermJson>,
    t: f64,
}

/// Weighted operator sum `H = sum_l alpha_l O_l` plus a default evolution
/// time. Negative input weights are folded into the operator so that every
/// stored `alpha_l` is positive; each stored term must be Hermitian (product
/// formula mode) or unitary (series mode), and the assembled total must be
/// Hermitian.
#[derive(Clone, Debug)]
pub struct HamiltonianSum {
    /// `(alpha_l, O_l)` pairs with `alpha_l > 0`.
    pub terms: Vec<(f64, CMat)>,
    pub n_qubits: usize,
    /// Evolution time carried with the operator (JSON field `t`).
    pub t: f64,
}

impl HamiltonianSum {
    pub fn new(terms: Vec<(f64, CMat)>, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("evolution time {t} is not finite")));
        }
        let mut kept: Vec<(f64, CMat)> = Vec::new();
        for (l, (alpha, op)) in terms.into_iter().enumerate() {
            if !alpha.is_finite() {
                return Err(Error::InvalidArgument(format!("term {l} has weight {alpha}")));
            }
            if alpha == 0.0 {
                continue;
            }
            let (alpha, op) = if alpha < 0.0 { (-alpha, -op) } else { (alpha, op) };
            let h_defect = hermiticity_defect(&op);
            let u_defect = unitarity_defect(&op);
            if h_defect > 1e-10 && u_defect > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "term {l} is neither Hermitian (defect {h_defect:.3e}) nor unitary (defect {u_defect:.3e})"
                )));
            }
            kept.push((alpha, op));
        }
        if kept.is_empty() {
            return Err(Error::InvalidArgument("Hamiltonian sum has no nonzero terms".into()));
        }
        let dim = kept[0].1.nrows();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "term dimension {dim} does not fit a qubit register"
            )));
        }
        for (l, (_, op)) in kept.iter().enumerate() {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "term {l} is {}x{} but term 0 is {dim}x{dim}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > crate::max_qubits() {
            return Err(Error::TooManyQubits { requested: n_qubits, cap: crate::max_qubits() });
        }
        let sum = Self { terms: kept, n_qubits, t };
        let total_defect = hermiticity_defect(&sum.total());
        if total_defect > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "assembled Hamiltonian is not Hermitian, defect {total_defect:.3e}"
            )));
        }
        Ok(sum)
    }

    /// Build from `(weight, Pauli string)` pairs, e.g. `(0.5, "XZ")`.
    pub fn from_pauli_terms(terms: &[(f64, &str)], t: f64) -> Result<Self> {
        let mats = terms
            .iter()
            .map(|(a, label)| Ok((*a, pauli_matrix(label)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mats, t)
    }

    /// Parse `{"terms":[{"alpha":0.5,"pauli":"XZI"}],"t":1.0}`. Unknown
    /// fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: SumJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("Hamiltonian JSON: {e}")))?;
        let terms: Vec<(f64, &str)> =
            parsed.terms.iter().map(|t| (t.alpha, t.pauli.as_str())).collect();
        Self::from_pauli_terms(&terms, parsed.t)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Dense `sum_l alpha_l O_l`.
    pub fn total(&self) -> CMat {
        let dim = self.dim();
        let mut m = CMat::zeros(dim, dim);
        for (alpha, op) in &self.terms {
            m += op * Complex64::new(*alpha, 0.0);
        }
        m
    }

    /// `A = sum_l alpha_l`, the series normalization scale.
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|(a, _)| a).sum()
    }

    /// Norm cache of the assembled total.
    pub fn norms(&self) -> Result<HamNorms> {
        Ok(SparseHamiltonian::from_dense(&self.total())?.norms())
    }

    fn check_hermitian_terms(&self) -> Result<()> {
        for (l, (_, op)) in self.terms.iter().enumerate() {
            let defect = hermiticity_defect(op);
            if defect > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "product formula needs Hermitian terms; term {l} has defect {defect:.3e}"
                )));
            }
        }
        Ok(())
    }

    fn check_unitary_terms(&self) -> Result<()> {
        for (l, (_, op)) in self.terms.iter().enumerate() {
            let defect = unitarity_defect(op);
            if defect > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "series mode needs unitary terms; term {l} has defect {defect:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// First-order product formula: applies `(prod_l exp(-i alpha_l O_l t/r))^r`
/// with the terms taken in listed order inside each step. Exact when all
/// terms commute; otherwise the error falls off as `1/r`. Involutory terms
/// (`O^2 = I`, e.g. Pauli strings) use the closed form
/// `cos(theta) I - i sin(theta) O` instead of an eigendecomposition.
pub fn trotter_evolve(h: &HamiltonianSum, t: f64, r: usize, s: &StateVector) -> Result<StateVector> {
    if r == 0 {
        return Err(Error::InvalidArgument("step count r must be at least 1".into()));
    }
    if s.n_qubits() != h.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits but the Hamiltonian acts on {}",
            s.n_qubits(),
            h.n_qubits
        )));
    }
    h.check_hermitian_terms()?;
    let dim = h.dim();
    let eye = CMat::identity(dim, dim);
    let mut step = eye.clone();
    for (alpha, op) in &h.terms {
        let theta = alpha * t / r as f64;
        let factor = if mat_max_diff(&(op * op), &eye) < 1e-12 {
            &eye * Complex64::new(theta.cos(), 0.0) - op * Complex64::new(0.0, theta.sin())
        } else {
            expm_hermitian(op, theta)
        };
        step = factor * step;
    }
    let mut v = s.to_cvec();
    for _ in 0..r {
        v = &step * v;
    }
    StateVector::from_cvec(&v)
}

/// Result of a truncated-series evolution.
#[derive(Clone, Debug)]
pub struct LcuOutcome {
    pub state: StateVector,
    /// Product over segments of the amplified good-branch mass; 1 up to the
    /// series tail.
    pub success_probability: f64,
    pub segments: usize,
    /// Series weight `sum_{k<=K} (A |t_seg|)^k / k!` of one segment.
    pub segment_normalization: f64,
    /// Taylor remainder bound `e^x x^{K+1} / (K+1)!` summed over segments.
    pub tail_bound: f64,
}

/// Flat prepare / select / unprepare circuit for one evolution segment,
/// applied to raw coefficient vectors of length `2 * anc_dim * dim`.
struct SeriesCircuit {
    prepare: CMat,
    branches: Vec<CMat>,
    anc_dim: usize,
    dim: usize,
    /// Good-branch amplitude of the completion qubit, `s / 2`.
    gamma: f64,
}

impl SeriesCircuit {
    fn total_dim(&self) -> usize {
        2 * self.anc_dim * self.dim
    }

    /// Rotation on the completion qubit (the highest register).
    fn apply_rotation(&self, v: &CVec, adjoint: bool) -> CVec {
        let half = self.anc_dim * self.dim;
        let (g, s) = (self.gamma, (1.0 - self.gamma * self.gamma).max(0.0).sqrt());
        let mut out = CVec::zeros(v.len());
        for i in 0..half {
            let (x0, x1) = (v[i], v[i + half]);
            if adjoint {
                out[i] = x0 * g + x1 * s;
                out[i + half] = -x0 * s + x1 * g;
            } else {
                out[i] = x0 * g - x1 * s;
                out[i + half] = x0 * s + x1 * g;
            }
        }
        out
    }

    /// `B (x) I` (or its adjoint) on the branch register.
    fn apply_prepare(&self, v: &CVec, adjoint: bool) -> CVec {
        let (a, n) = (self.anc_dim, self.dim);
        let mut out = CVec::zeros(v.len());
        for idle in 0..2 {
            let base = idle * a * n;
            for a_out in 0..a {
                for sys in 0..n {
                    let mut acc = C0;
                    for a_in in 0..a {
                        let b = if adjoint {
                            self.prepare[(a_in, a_out)].conj()
                        } else {
                            self.prepare[(a_out, a_in)]
                        };
                        acc += b * v[base + a_in * n + sys];
                    }
                    out[base + a_out * n + sys] = acc;
                }
            }
        }
        out
    }

    /// Branch-controlled unitaries; branches past the populated count are
    /// identity.
    fn apply_select(&self, v: &CVec, adjoint: bool) -> CVec {
        let (a, n) = (self.anc_dim, self.dim);
        let mut out = v.clone();
        for idle in 0..2 {
            for (branch, m) in self.branches.iter().enumerate() {
                let base = (idle * a + branch) * n;
                for r in 0..n {
                    let mut acc = C0;
                    for c in 0..n {
                        let e = if adjoint { m[(c, r)].conj() } else { m[(r, c)] };
                        acc += e * v[base + c];
                    }
                    out[base + r] = acc;
                }
            }
        }
        out
    }

    fn apply_w(&self, v: &CVec, adjoint: bool) -> CVec {
        if adjoint {
            let v = self.apply_prepare(v, false);
            let v = self.apply_select(&v, true);
            let v = self.apply_prepare(&v, true);
            self.apply_rotation(&v, true)
        } else {
            let v = self.apply_rotation(v, false);
            let v = self.apply_prepare(&v, false);
            let v = self.apply_select(&v, false);
            self.apply_prepare(&v, true)
        }
    }

    /// `2 P0 - I` about the all-ancilla-zero block.
    fn apply_reflection(&self, v: &CVec) -> CVec {
        let mut out = -v.clone();
        for sys in 0..self.dim {
            out[sys] = v[sys];
        }
        out
    }
}

/// Truncated-series evolution `exp(-iHt)` to Taylor order `k_order` per
/// segment, realized as a prepare / select / unprepare block encoding with
/// one oblivious amplitude amplification round per segment.
///
/// `segments: None` picks the smallest count keeping each segment's series
/// weight at most 2 (`A |t_seg| <= ln 2`); an explicit count is honored and
/// rejected if its weight exceeds 2. Every term must be unitary. The flat
/// expansion enumerates `sum_{k<=K} L^k` branches and is capped at 4096.
pub fn lcu_evolve(
    h: &HamiltonianSum,
    t: f64,
    k_order: usize,
    segments: Option<usize>,
    s: &StateVector,
) -> Result<LcuOutcome> {
    if s.n_qubits() != h.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits but the Hamiltonian acts on {}",
            s.n_qubits(),
            h.n_qubits
        )));
    }
    h.check_unitary_terms()?;
    let a_total = h.weight_sum();
    let n_seg = match segments {
        Some(0) => return Err(Error::InvalidArgument("segment count must be at least 1".into())),
        Some(n) => n,
        None => ((t.abs() * a_total / std::f64::consts::LN_2).ceil() as usize).max(1),
    };
    let tau = t / n_seg as f64;
    let x = tau.abs() * a_total;
    let mut segment_normalization = 0.0;
    let mut term = 1.0;
    for k in 0..=k_order {
        segment_normalization += term;
        term *= x / (k + 1) as f64;
    }
    if segment_normalization > 2.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "segment series weight {segment_normalization:.6} exceeds 2; split the evolution into more segments"
        )));
    }

    // Flat expansion of sum_{k<=K} (-i tau)^k / k! (sum_l alpha_l V_l)^k.
    let n_terms = h.terms.len();
    let mut count: usize = 0;
    let mut pow = 1usize;
    for _ in 0..=k_order {
        count = count.saturating_add(pow);
        pow = pow.saturating_mul(n_terms);
        if count > 4096 {
            return Err(Error::InvalidArgument(format!(
                "series expansion needs more than 4096 select branches for {n_terms} terms at order {k_order}"
            )));
        }
    }
    let dim = h.dim();
    let eye = CMat::identity(dim, dim);
    let phase_step = Complex64::new(0.0, -tau.signum());
    let mut betas: Vec<f64> = vec![1.0];
    let mut branches: Vec<CMat> = vec![eye.clone()];
    let mut layer: Vec<(f64, CMat)> = vec![(1.0, eye.clone())];
    for k in 1..=k_order {
        let mut next = Vec::with_capacity(layer.len() * n_terms);
        for (beta, prod) in &layer {
            for (alpha, v) in &h.terms {
                let beta_next = beta * tau.abs() * alpha / k as f64;
                let prod_next = v * prod;
                betas.push(beta_next);
                branches.push(&prod_next * phase_step.powu(k as u32));
                next.push((beta_next, prod_next));
            }
        }
        layer = next;
    }
    debug_assert_eq!(betas.len(), count);
    let anc_dim = count.next_power_of_two().max(2);
    let mut first_col = CVec::zeros(anc_dim);
    for (j, beta) in betas.iter().enumerate() {
        first_col[j] = Complex64::new((beta / segment_normalization).sqrt(), 0.0);
    }
    let circuit = SeriesCircuit {
        prepare: unitary_with_first_column(&first_col),
        branches,
        anc_dim,
        dim,
        gamma: segment_normalization / 2.0,
    };

    let mut psi = s.to_cvec();
    let mut success_probability = 1.0;
    for _ in 0..n_seg {
        let mut v = CVec::zeros(circuit.total_dim());
        for i in 0..dim {
            v[i] = psi[i];
        }
        let v = circuit.apply_w(&v, false);
        let v = circuit.apply_reflection(&v);
        let v = circuit.apply_w(&v, true);
        let v = circuit.apply_reflection(&v);
        let v = circuit.apply_w(&v, false);
        let mut good = CVec::zeros(dim);
        for i in 0..dim {
            good[i] = -v[i];
        }
        let mass = good.norm_squared();
        if mass < 1e-24 {
            return Err(Error::Numerical("series block lost all amplitude".into()));
        }
        success_probability *= mass;
        psi = good / Complex64::new(mass.sqrt(), 0.0);
    }
    let mut fact = 1.0;
    for k in 1..=(k_order + 1) {
        fact *= k as f64;
    }
    let tail_bound = n_seg as f64 * x.exp() * x.powi(k_order as i32 + 1) / fact;
    Ok(LcuOutcome {
        state: StateVector::from_cvec(&psi)?,
        success_probability,
        segments: n_seg,
        segment_normalization,
        tail_bound,
    })
}

/// Walk operator `U = i S (2 T T' - I)` built from a Hermitian matrix, with
/// eigenphases `+/- arcsin(lambda / |H|_1)`.
#[derive(Clone, Debug)]
pub struct QubitizationWalk {
    /// The walk unitary on the doubled register space.
    pub walk: CMat,
    /// Isometry from the sign-extended system into the walk space.
    pub isometry: CMat,
    /// Swap of the two walk registers.
    pub swap: CMat,
    /// Sign-extended Hamiltonian `X (x) H`; rows index `sigma * dim + j`.
    pub dilated: CMat,
    /// Induced one-norm of `H` (equal to that of the extension).
    pub h_norm1: f64,
    pub n_system: usize,
}

impl QubitizationWalk {
    /// Worst-case residual of the spectral law: for every eigenpair
    /// `(nu, w)` of the sign-extended Hamiltonian and both predicted walk
    /// eigenvalues `mu = i x +/- sqrt(1 - x^2)` (`x = nu / |H|_1`), the
    /// max-norm of `U u - mu u` on the predicted eigenvector
    /// `u = (T + i mu S T) w`, normalized.
    pub fn eigenphase_residual(&self) -> f64 {
        let scale = if self.h_norm1 > 0.0 { self.h_norm1 } else { 1.0 };
        let (evals, evecs) = eigh(&self.dilated);
        let mut worst = 0.0f64;
        for (i, nu) in evals.iter().enumerate() {
            let w = evecs.column(i).into_owned();
            let x = (nu / scale).clamp(-1.0, 1.0);
            let c = (1.0 - x * x).max(0.0).sqrt();
            let tw = &self.isometry * &w;
            let stw = &self.swap * &tw;
            for mu in [Complex64::new(c, x), Complex64::new(-c, x)] {
                let mut u = &tw + &stw * (CI * mu);
                let mut mu = mu;
                let norm = u.norm();
                // The pair collapses to the single eigenvector T w with
                // eigenvalue i x at x = +/- 1; below the threshold the
                // difference vector is dominated by eigensolver noise.
                if norm < 1e-6 {
                    u = tw.clone();
                    mu = Complex64::new(0.0, x);
                } else {
                    u /= Complex64::new(norm, 0.0);
                }
                let residual = (&self.walk * &u - &u * mu)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0f64, f64::max);
                worst = worst.max(residual);
            }
        }
        worst
    }
}

/// Quantize a Hermitian matrix as a doubled-register walk.
///
/// A sign qubit is adjoined (`X (x) H`), which zeroes the diagonal so that
/// entry magnitudes can be split as conjugate square roots across the two
/// registers: for each entry `z` above the diagonal, the row-side state
/// carries `sqrt(|z|) e^{-i arg z / 2}` and the column side
/// `sqrt(|z|) e^{+i arg z / 2}`, making the two-register overlap reproduce
/// `(X (x) H) / |H|_1` exactly. Leftover column mass sits on a flagged
/// self-branch. Build fails if the reproduced overlap, the isometry, or the
/// walk unitarity drift beyond 1e-10.
pub fn build_qubitization(h: &SparseHamiltonian) -> Result<QubitizationWalk> {
    let dim = h.dim();
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian dimension {dim} does not fit a qubit register"
        )));
    }
    let full = 16 * dim * dim;
    if full > 1024 {
        return Err(Error::InvalidArgument(format!(
            "walk space would be {full}-dimensional; dense construction is capped at 1024"
        )));
    }
    let hd = h.to_dense();
    let lam = h.norms().one;
    let scale = if lam > 0.0 { lam } else { 1.0 };
    let ext = kron(&matrices::x(), &hd);
    let n_ext = 2 * dim;
    let side = 2 * n_ext;

    let mut amps = CMat::zeros(n_ext, n_ext);
    for j in 0..n_ext {
        for k in (j + 1)..n_ext {
            let z = ext[(j, k)];
            if z.norm() > 0.0 {
                let m = (z.norm() / scale).sqrt();
                let half = z.arg() / 2.0;
                amps[(j, k)] = cis(-half) * m;
                amps[(k, j)] = cis(half) * m;
            }
        }
    }
    let mut isometry = CMat::zeros(side * side, n_ext);
    for a in 0..n_ext {
        let row_mass: f64 = (0..n_ext).map(|b| ext[(a, b)].norm()).sum();
        let leftover = (1.0 - row_mass / scale).max(0.0).sqrt();
        for b in 0..n_ext {
            isometry[(a * side + b, a)] = amps[(a, b)];
        }
        isometry[(a * side + n_ext + a, a)] = Complex64::new(leftover, 0.0);
    }

    let gram = isometry.adjoint() * &isometry;
    let gram_defect = mat_max_diff(&gram, &CMat::identity(n_ext, n_ext));
    if gram_defect > 1e-10 {
        return Err(Error::Numerical(format!(
            "register embedding is not an isometry, defect {gram_defect:.3e}"
        )));
    }
    let swap = swap_matrix(side);
    let overlap = isometry.adjoint() * &swap * &isometry;
    let target = &ext * Complex64::new(1.0 / scale, 0.0);
    let overlap_defect = mat_max_diff(&overlap, &target);
    if overlap_defect > 1e-10 {
        return Err(Error::Numerical(format!(
            "two-register overlap misses the scaled Hamiltonian by {overlap_defect:.3e}"
        )));
    }

    let reflect = &isometry * isometry.adjoint() * Complex64::new(2.0, 0.0)
        - CMat::identity(side * side, side * side);
    let walk = (&swap * reflect).map(|z| z * CI);
    let walk_defect = unitarity_defect(&walk);
    if walk_defect > 1e-10 {
        return Err(Error::Numerical(format!("walk is not unitary, defect {walk_defect:.3e}")));
    }
    Ok(QubitizationWalk {
        walk,
        isometry,
        swap,
        dilated: ext,
        h_norm1: lam,
        n_system: dim.trailing_zeros() as usize,
    })
}

/// Two-sided Bessel tail `sum_{|m| > k_max} |J_m(t)|`, the operator-norm
/// error of truncating the walk-power expansion of the evolution.
pub fn bessel_tail(t: f64, k_max: usize) -> f64 {
    let t = t.abs();
    let mut tail = 0.0;
    let mut m = k_max as i32 + 1;
    loop {
        let term = libm::jn(m, t).abs();
        tail += 2.0 * term;
        // Past the turning point m ~ t the terms decay superexponentially.
        if (m as f64 > t && term < 1e-22) || m > k_max as i32 + 1000 {
            break;
        }
        m += 1;
    }
    tail
}

/// Result of a walk-power series evolution.
#[derive(Clone, Debug)]
pub struct WalkSeriesOutcome {
    pub state: StateVector,
    /// Bessel tail left out by the truncation; fidelity loss is at most
    /// twice this.
    pub tail_bound: f64,
}

/// Evolve by `exp(-i t H / |H|_1)` through the truncated expansion
/// `sum_{|m| <= k_max} J_m(-t) U^m` of the walk operator. Time is measured
/// in units of the one-norm; pass `t * |H|_1`-scaled times for physical
/// evolution. Fails if the truncation tail exceeds 0.5.
pub fn qw_lcu_evolve(
    walk: &QubitizationWalk,
    t: f64,
    k_max: usize,
    s: &StateVector,
) -> Result<WalkSeriesOutcome> {
    if s.n_qubits() != walk.n_system {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits but the walk encodes {}",
            s.n_qubits(),
            walk.n_system
        )));
    }
    let tail_bound = bessel_tail(t, k_max);
    if !tail_bound.is_finite() || tail_bound > 0.5 {
        return Err(Error::InvalidArgument(format!(
            "truncation at {k_max} walk powers leaves a Bessel tail of {tail_bound:.3e} for t = {t}; increase k_max"
        )));
    }
    let dim = 1usize << walk.n_system;
    let psi = s.to_cvec();
    // Lift into the positive sector of the sign qubit, where X (x) H acts
    // as +H.
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = CVec::zeros(2 * dim);
    for j in 0..dim {
        w[j] = psi[j] * inv_sqrt2;
        w[dim + j] = psi[j] * inv_sqrt2;
    }
    let base = &walk.isometry * &w;
    let mut acc = &base * Complex64::new(libm::jn(0, -t), 0.0);
    let walk_dag = dagger(&walk.walk);
    let mut fwd = base.clone();
    let mut bwd = base.clone();
    for m in 1..=k_max {
        fwd = &walk.walk * fwd;
        bwd = &walk_dag * bwd;
        let jm = libm::jn(m as i32, -t);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        acc += &fwd * Complex64::new(jm, 0.0);
        acc += &bwd * Complex64::new(sign * jm, 0.0);
    }
    let back = walk.isometry.adjoint() * acc;
    let mut out = CVec::zeros(dim);
    for j in 0..dim {
        out[j] = (back[j] + back[dim + j]) * inv_sqrt2;
    }
    let norm = out.norm();
    if norm < 1e-12 {
        return Err(Error::Numerical("walk series lost all amplitude".into()));
    }
    out /= Complex64::new(norm, 0.0);
    Ok(WalkSeriesOutcome { state: StateVector::from_cvec(&out)?, tail_bound })
}
