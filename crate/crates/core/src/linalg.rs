//! Dense complex linear algebra helpers shared by the oracle layer.
//!
//! These wrap `nalgebra` so the rest of the library speaks one matrix
//! dialect: `CMat` for dense complex matrices, `CVec` for dense complex
//! vectors. The oracles built on top (eigendecompositions, matrix
//! exponentials, SVD) are deliberately independent of the circuit engine so
//! that tests compare two unrelated computations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

/// `e^{i theta}` as a complex scalar.
pub fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Hermitian conjugate (conjugate transpose).
pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Max-norm distance between two matrices.
pub fn mat_max_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Frobenius inner-product check that `m` is unitary: `max |m m^† - I|`.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint();
    let id = CMat::identity(n, n);
    mat_max_diff(&prod, &id)
}

/// Max Hermitian defect `max |m - m^†|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    mat_max_diff(m, &m.adjoint())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with real eigenvalues ascending and
/// the k-th column of `eigenvectors` the unit eigenvector for the k-th
/// eigenvalue. Implemented as a cyclic complex Jacobi sweep, which is
/// independent of any circuit code and accurate to near machine precision
/// for the desk-scale matrices used here.
pub fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "eigh needs a square matrix");
    assert!(
        hermiticity_defect(h) < 1e-9,
        "eigh needs a Hermitian matrix, defect {}",
        hermiticity_defect(h)
    );
    let mut a = h.clone();
    // Force exact Hermiticity so rounding in the input cannot bias sweeps.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = m;
            a[(j, i)] = m.conj();
        }
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let mut v = CMat::identity(n, n);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].norm());
            }
        }
        if off < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                // Unitary 2x2 rotation zeroing a[(p,q)]:
                // first peel the phase of a_pq, then a real Jacobi rotation.
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / apq.norm();
                let g = apq.norm();
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns transform: [p q] -> [p q] * R with
                // R = [[c, s*phase],[-s*conj(phase), c]] chosen unitary.
                let rpp = Complex64::new(c, 0.0);
                let rpq = Complex64::new(s, 0.0) * phase;
                let rqp = -Complex64::new(s, 0.0) * phase.conj();
                let rqq = Complex64::new(c, 0.0);
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * rpp + akq * rqp;
                    a[(k, q)] = akp * rpq + akq * rqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = rpp.conj() * apk + rqp.conj() * aqk;
                    a[(q, k)] = rpq.conj() * apk + rqq.conj() * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * rpp + vkq * rqp;
                    v[(k, q)] = vkp * rpq + vkq * rqq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)].re, i)).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let evals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut evecs = CMat::zeros(n, n);
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for r in 0..n {
            evecs[(r, new_col)] = v[(r, old_col)];
        }
    }
    (evals, evecs)
}

/// `f(H)` for Hermitian `H` via eigendecomposition.
pub fn hermitian_func(h: &CMat, f: impl Fn(f64) -> Complex64) -> CMat {
    let n = h.nrows();
    let (evals, evecs) = eigh(h);
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = f(evals[i]);
    }
    &evecs * d * evecs.adjoint()
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    hermitian_func(h, |lam| cis(-lam * t))
}

/// `exp(M)` for a general square complex matrix, scaling-and-squaring with a
/// Taylor core. Used for oracles on non-Hermitian generators.
pub fn expm(m: &CMat) -> CMat {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let norm = m.iter().map(|x| x.norm()).fold(0.0, f64::max) * n as f64;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = m.map(|x| x / 2f64.powi(s as i32));
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..40 {
        term = &term * &a / Complex64::new(k as f64, 0.0);
        sum += &term;
        if term.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..s {
        out = &out * &out;
    }
    out
}

/// Singular value decomposition `A = W diag(sigma) V^†` for a complex matrix.
///
/// Returns `(W, sigma, V)` with singular values descending; `W` is
/// `m x r`, `V` is `n x r` with `r = min(m, n)`. Built from `eigh` of the
/// Gram matrices so it shares no code with the circuit layer.
pub fn svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (m, n) = a.shape();
    let r = m.min(n);
    // Eigendecompose the smaller Gram matrix, recover the other factor.
    if n <= m {
        let gram = a.adjoint() * a; // n x n
        let (evals, evecs) = eigh(&gram);
        // Descending singular values.
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap());
        let mut sigma = Vec::with_capacity(r);
        let mut v = CMat::zeros(n, r);
        let mut w = CMat::zeros(m, r);
        for (col, &k) in idx.iter().take(r).enumerate() {
            let s = evals[k].max(0.0).sqrt();
            sigma.push(s);
            for row in 0..n {
                v[(row, col)] = evecs[(row, k)];
            }
            let av = a * v.column(col).clone_owned();
            if s > 1e-12 {
                for row in 0..m {
                    w[(row, col)] = av[row] / s;
                }
            }
        }
        fill_null_columns(&mut w, &sigma);
        (w, sigma, v)
    } else {
        let (w, sigma, v) = svd(&a.adjoint());
        (v, sigma, w)
    }
}

/// Replace zero columns (null-space directions of degenerate SVDs) with an
/// orthonormal completion so the returned factor has orthonormal columns.
fn fill_null_columns(w: &mut CMat, sigma: &[f64]) {
    let (m, r) = w.shape();
    for col in 0..r {
        if sigma[col] > 1e-12 {
            continue;
        }
        // Gram-Schmidt a basis vector against existing columns.
        'candidates: for basis in 0..m {
            let mut cand = CVec::zeros(m);
            cand[basis] = C_ONE;
            for prev in 0..r {
                if prev == col {
                    continue;
                }
                let proj: Complex64 = (0..m).map(|i| w[(i, prev)].conj() * cand[i]).sum();
                for i in 0..m {
                    let wip = w[(i, prev)];
                    cand[i] -= proj * wip;
                }
            }
            let norm = cand.norm();
            if norm > 1e-6 {
                for i in 0..m {
                    w[(i, col)] = cand[i] / Complex64::new(norm, 0.0);
                }
                break 'candidates;
            }
        }
    }
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve(a: &CMat, b: &CVec) -> Option<CVec> {
    a.clone().lu().solve(b)
}

/// Kronecker product `a (x) b`: `a`'s indices become the high bits.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Haar-distributed random unitary via Gram-Schmidt of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut crate::rng::SimRng) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = Complex64::new(
                crate::state::gaussian(rng),
                crate::state::gaussian(rng),
            );
        }
    }
    orthonormalize_columns(&mut m);
    m
}

/// Any unitary whose first column is the given unit vector, built from a
/// Householder reflector: with `u = v + e^{i arg(v_0)} e_0`,
/// `-e^{i arg(v_0)} (I - 2 u u^dag / |u|^2)` sends `e_0` to `v` and
/// `|u|^2 = 2(1 + |v_0|)` never degenerates.
pub fn unitary_with_first_column(v: &CVec) -> CMat {
    let n = v.len();
    assert!((v.norm() - 1.0).abs() < 1e-9, "first column must be unit norm");
    let phase = if v[0].norm() > 1e-300 {
        v[0] / Complex64::new(v[0].norm(), 0.0)
    } else {
        C_ONE
    };
    let mut u = v.clone();
    u[0] += phase;
    let scale = Complex64::new(2.0 / u.norm_squared(), 0.0);
    let mut m = CMat::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] -= scale * u[i] * u[j].conj();
            m[(i, j)] *= -phase;
        }
    }
    m
}

fn orthonormalize_columns(m: &mut CMat) {
    let n = m.nrows();
    let cols = m.ncols();
    for col in 0..cols {
        // Two-pass modified Gram-Schmidt for numerical hygiene.
        for _pass in 0..2 {
            for prev in 0..col {
                let proj: Complex64 = (0..n).map(|i| m[(i, prev)].conj() * m[(i, col)]).sum();
                for i in 0..n {
                    let mp = m[(i, prev)];
                    m[(i, col)] -= proj * mp;
                }
            }
        }
        let norm: f64 = (0..n).map(|i| m[(i, col)].norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "rank-deficient column set");
        for i in 0..n {
            m[(i, col)] /= norm;
        }
    }
}

/// Least-squares slope and intercept of `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Moore-Penrose pseudoinverse applied to a vector: `A^+ b` via SVD.
pub fn pinv_apply(a: &CMat, b: &CVec) -> CVec {
    let (w, sigma, v) = svd(a);
    let r = sigma.len();
    let n = a.ncols();
    let mut x = CVec::zeros(n);
    for k in 0..r {
        if sigma[k] <= 1e-12 {
            continue;
        }
        let wk = w.column(k);
        let coef: Complex64 = (0..b.len()).map(|i| wk[i].conj() * b[i]).sum();
        let scale = coef / Complex64::new(sigma[k], 0.0);
        for i in 0..n {
            let vik = v[(i, k)];
            x[i] += scale * vik;
        }
    }
    x
}

/// Condition number from the SVD (largest over smallest nonzero singular value).
pub fn condition_number(a: &CMat) -> f64 {
    let (_, sigma, _) = svd(a);
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let smin = sigma
        .iter()
        .cloned()
        .filter(|&s| s > 1e-12)
        .fold(f64::INFINITY, f64::min);
    smax / smin
}
