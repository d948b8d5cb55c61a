//! Dense statevector over computational basis indices.
//!
//! A state on `n` qubits is a vector of `2^n` complex amplitudes indexed
//! little-endian: qubit 0 is the least significant bit of the basis index.
//! Constructors validate normalization rather than silently fixing it;
//! `renormalize` is the only place the norm is touched, so norm drift is an
//! observable bug, not something the library papers over.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::rng::SimRng;

/// Magic bytes of the binary statevector dump format.
pub const DUMP_MAGIC: &[u8; 4] = b"QSV1";

/// Norm tolerance accepted by validating constructors.
pub const NORM_TOL: f64 = 1e-8;

/// Postselection outcomes below this probability are treated as impossible.
pub const POSTSELECT_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits`.
    pub fn new_zero(n_qubits: usize) -> Result<Self> {
        Self::basis_state(n_qubits, 0)
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let cap = crate::max_qubits();
        if n_qubits > cap {
            return Err(Error::TooManyQubits {
                requested: n_qubits,
                cap,
            });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { idx: index, dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Build from explicit amplitudes; rejects non-power-of-two lengths and
    /// vectors whose norm differs from 1 by more than `NORM_TOL`.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let cap = crate::max_qubits();
        if n_qubits > cap {
            return Err(Error::TooManyQubits {
                requested: n_qubits,
                cap,
            });
        }
        let norm = l2_norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Build from an unnormalized vector, scaling it to unit norm. The one
    /// constructor that normalizes, and it says so in its name.
    pub fn from_unnormalized(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let norm = l2_norm(&amps);
        if norm < 1e-300 {
            return Err(Error::InvalidArgument("cannot normalize zero vector".into()));
        }
        let scaled = amps.into_iter().map(|a| a / norm).collect();
        Self::from_amplitudes(scaled)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amp(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn to_cvec(&self) -> CVec {
        CVec::from_vec(self.amps.clone())
    }

    /// Build from a dense column vector (validating, non-normalizing).
    pub fn from_cvec(v: &CVec) -> Result<Self> {
        Self::from_amplitudes(v.iter().cloned().collect())
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amps)
    }

    /// Rescale to unit norm. The explicit escape hatch for drift; nothing
    /// else in the crate rescales implicitly.
    pub fn renormalize(&mut self) {
        let norm = self.norm();
        assert!(norm > 1e-300, "renormalize on a zero state");
        for a in &mut self.amps {
            *a /= norm;
        }
    }

    /// `<self|other>`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_qubit_one(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Draw one basis index from the Born distribution.
    pub fn sample_index(&self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return i;
            }
        }
        self.amps.len() - 1
    }

    /// Histogram of `shots` Born draws, indexed by basis index.
    pub fn sample_counts(&self, rng: &mut SimRng, shots: usize) -> Vec<u64> {
        let mut counts = vec![0u64; self.dim()];
        for _ in 0..shots {
            counts[self.sample_index(rng)] += 1;
        }
        counts
    }

    /// Projectively measure qubit `q`: samples an outcome, collapses the
    /// state, renormalizes, and returns the bit.
    pub fn measure_qubit(&mut self, q: usize, rng: &mut SimRng) -> Result<u8> {
        let p1 = self.prob_qubit_one(q)?;
        let u: f64 = rng.gen();
        let outcome = u8::from(u < p1);
        let p = if outcome == 1 { p1 } else { 1.0 - p1 };
        self.collapse_qubit(q, outcome, p);
        Ok(outcome)
    }

    /// Force qubit `q` to `bit`, returning the outcome probability. Errors
    /// if that probability is below `POSTSELECT_CUTOFF`.
    pub fn postselect_qubit(&mut self, q: usize, bit: u8) -> Result<f64> {
        let p1 = self.prob_qubit_one(q)?;
        let p = if bit == 1 { p1 } else { 1.0 - p1 };
        if p < POSTSELECT_CUTOFF {
            return Err(Error::ImpossiblePostselection(p));
        }
        self.collapse_qubit(q, bit, p);
        Ok(p)
    }

    fn collapse_qubit(&mut self, q: usize, bit: u8, p: f64) {
        let mask = 1usize << q;
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            let hit = ((i & mask != 0) as u8) == bit;
            if hit {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Remove a qubit that is in a definite computational state, e.g. after
    /// postselection, and return the value it held.
    pub fn drop_qubit(&mut self, q: usize) -> Result<u8> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange { q, n: self.n_qubits });
        }
        let p1 = self.prob_qubit_one(q)?;
        let bit = u8::from(p1 > 0.5);
        let residual = if bit == 1 { 1.0 - p1 } else { p1 };
        if residual > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "qubit {q} is not in a definite state (residual {residual:.3e})"
            )));
        }
        let low = (1usize << q) - 1;
        let set = (bit as usize) << q;
        let half = self.amps.len() / 2;
        let amps = (0..half)
            .map(|k| self.amps[((k >> q) << (q + 1)) | set | (k & low)])
            .collect();
        self.amps = amps;
        self.n_qubits -= 1;
        Ok(bit)
    }

    /// `<psi| M |psi>` for a Hermitian observable given as a dense matrix.
    pub fn expectation(&self, m: &CMat) -> Result<f64> {
        let dim = self.dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "observable is {}x{}, state dimension {}",
                m.nrows(),
                m.ncols(),
                dim
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                row += m[(i, j)] * self.amps[j];
            }
            acc += self.amps[i].conj() * row;
        }
        debug_assert!(acc.im.abs() < 1e-8, "observable not Hermitian enough: im {}", acc.im);
        Ok(acc.re)
    }

    /// `|psi><psi|` as a dense matrix.
    pub fn density_matrix(&self) -> CMat {
        let dim = self.dim();
        let mut rho = CMat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        rho
    }

    /// Reduced density matrix over `keep` (strictly increasing qubit list).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<CMat> {
        for &q in keep {
            self.check_qubit(q)?;
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "keep list must be strictly increasing".into(),
            ));
        }
        let k = keep.len();
        let env: Vec<usize> = (0..self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let kd = 1usize << k;
        let ed = 1usize << env.len();
        let index_of = |kept_bits: usize, env_bits: usize| -> usize {
            let mut idx = 0usize;
            for (pos, &q) in keep.iter().enumerate() {
                idx |= ((kept_bits >> pos) & 1) << q;
            }
            for (pos, &q) in env.iter().enumerate() {
                idx |= ((env_bits >> pos) & 1) << q;
            }
            idx
        };
        let mut rho = CMat::zeros(kd, kd);
        for a in 0..kd {
            for b in 0..kd {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in 0..ed {
                    acc += self.amps[index_of(a, e)] * self.amps[index_of(b, e)].conj();
                }
                rho[(a, b)] = acc;
            }
        }
        Ok(rho)
    }

    /// Tensor product; `other`'s qubits are appended above `self`'s, so the
    /// joint index is `idx_other << self.n_qubits | idx_self`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        let cap = crate::max_qubits();
        if n > cap {
            return Err(Error::TooManyQubits { requested: n, cap });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (j, bo) in other.amps.iter().enumerate() {
            for (i, ao) in self.amps.iter().enumerate() {
                amps[(j << self.n_qubits) | i] = ao * bo;
            }
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Largest `|a_i - b_i|` between two states of equal width.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch("max_abs_diff widths differ".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest amplitude difference after aligning `other`'s global phase to
    /// `self` (phase taken from the largest-magnitude component of `self`).
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch("phase diff widths differ".into()));
        }
        let pivot = self
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if other.amps[pivot].norm() < 1e-300 {
            return self.max_abs_diff(other);
        }
        let phase = self.amps[pivot] / other.amps[pivot];
        let phase = phase / phase.norm();
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max))
    }

    /// Binary dump: magic, u32 qubit count, then little-endian f64 re/im
    /// pairs in index order. Bit-exact, so equal dumps mean equal states.
    pub fn dump_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::BadDump(format!(
                "magic {:?}, expected {:?}",
                magic, DUMP_MAGIC
            )));
        }
        let mut nb = [0u8; 4];
        r.read_exact(&mut nb)?;
        let n_qubits = u32::from_le_bytes(nb) as usize;
        let cap = crate::max_qubits();
        if n_qubits > cap {
            return Err(Error::TooManyQubits {
                requested: n_qubits,
                cap,
            });
        }
        let dim = 1usize << n_qubits;
        let mut amps = Vec::with_capacity(dim);
        let mut buf = [0u8; 16];
        for _ in 0..dim {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
            amps.push(Complex64::new(re, im));
        }
        let mut extra = [0u8; 1];
        match r.read(&mut extra)? {
            0 => Ok(Self { n_qubits, amps }),
            _ => Err(Error::BadDump("trailing bytes after amplitudes".into())),
        }
    }

    pub fn dump_file(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.dump_to(&mut f)
    }

    pub fn load_file(path: &std::path::Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::load_from(&mut f)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                q,
                n: self.n_qubits,
            });
        }
        Ok(())
    }
}

fn l2_norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Haar-like random state: i.i.d. complex Gaussian amplitudes, normalized.
pub fn random_state(n_qubits: usize, rng: &mut SimRng) -> StateVector {
    let dim = 1usize << n_qubits;
    let mut amps = Vec::with_capacity(dim);
    for _ in 0..dim {
        amps.push(Complex64::new(gaussian(rng), gaussian(rng)));
    }
    StateVector::from_unnormalized(amps).expect("gaussian vector is nonzero")
}

/// Standard normal draw via Box-Muller.
pub fn gaussian(rng: &mut SimRng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
