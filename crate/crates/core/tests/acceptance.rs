//! End-to-end acceptance run: fifteen headline guarantees, one line of
//! output each, exercised at their stated tolerances and time budgets.
//!
//! Every check is deterministic (fixed seeds) and compares against an
//! independent classical reference computed in place. The process exits
//! nonzero if any mandatory check fails. Check 02 documents a known gap
//! in the quoted amplitude-estimation error bound instead of failing the
//! build; the README discusses the analysis, and the check still enforces
//! the invariants that do hold.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use qstat_core::amplitude::{
    amplitude_estimate, grover_iterations, grover_scaling_report, grover_search,
    qae_guaranteed_error_bound, qae_quoted_error_bound, qmc_scaling_report,
    walsh_hadamard_matrix,
};
use qstat_core::encoding::{
    swap_test_probability, swap_test_sampled, FunctionOracle, SparseHamiltonian,
};
use qstat_core::fourier::qpe;
use qstat_core::gates::matrices;
use qstat_core::ham_sim::{build_qubitization, lcu_evolve, trotter_evolve, HamiltonianSum};
use qstat_core::linalg::{
    cis, expm_hermitian, linear_fit, pinv_apply, random_unitary, solve,
    unitary_with_first_column, CMat, CVec,
};
use qstat_core::qlinalg::{hhl_solve, LinearSystem};
use qstat_core::qsp::{
    fixed_point_min_queries, fixed_point_search, qsp_evaluate, qsp_hamiltonian_sim, qsvt_invert,
};
use qstat_core::rng::{rng_stream, SimRng};
use qstat_core::state::{random_state, StateVector};
use qstat_core::variational::{qaoa_optimize, CostHamiltonian, OptimizerConfig};
use qstat_core::walks::{
    build_szegedy, coin_walk_cesaro, coin_walk_unitary, cycle_adjacency, metropolis_chain,
    position_marginal, MarkovChainSpec,
};

enum Verdict {
    Pass(String),
    Fail(String),
    /// A real miss that is analyzed and documented rather than hidden;
    /// printed as a failure but does not flip the exit code.
    Documented(String),
}

use Verdict::{Documented, Fail, Pass};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Random Hermitian matrix with eigenvalue magnitudes in
/// `[1/kappa_max, 1]` and random signs: condition number at most
/// `kappa_max`, largest magnitude pinned to 1.
fn hermitian_with_condition(dim: usize, kappa_max: f64, rng: &mut SimRng) -> CMat {
    let v = random_unitary(dim, rng);
    let lo = 1.0 / kappa_max;
    let mut d = CMat::zeros(dim, dim);
    for k in 0..dim {
        let mag = if k == 0 { 1.0 } else { lo + (1.0 - lo) * rng.gen::<f64>() };
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        d[(k, k)] = c(sign * mag);
    }
    &v * d * v.adjoint()
}

fn state_from_cvec(v: &CVec) -> StateVector {
    StateVector::from_unnormalized(v.iter().cloned().collect())
        .expect("reference vector is nonzero")
}

// --- 01: Grover hits its optimal iteration count and square-root scaling.

fn c01_grover() -> Verdict {
    let mut rng = rng_stream(1, 0);
    let mut worst = 1.0f64;
    for e in [4usize, 6, 8, 10] {
        let n_items = 1usize << e;
        let marked = rng.gen::<usize>() % n_items;
        let oracle = match FunctionOracle::from_fn(e, 1, |z| (z == marked) as usize) {
            Ok(o) => o,
            Err(err) => return Fail(format!("oracle build: {err}")),
        };
        let out = match grover_search(&oracle, 1, None, &mut rng) {
            Ok(o) => o,
            Err(err) => return Fail(format!("N={n_items}: {err}")),
        };
        if out.iterations != grover_iterations(n_items, 1) {
            return Fail(format!(
                "N={n_items} ran {} iterations, optimal is {}",
                out.iterations,
                grover_iterations(n_items, 1)
            ));
        }
        worst = worst.min(out.success_probability);
        if out.success_probability < 0.95 {
            return Fail(format!(
                "N={n_items} success {:.4} < 0.95 at t={}",
                out.success_probability, out.iterations
            ));
        }
    }
    let rep = grover_scaling_report();
    if !(0.45..=0.55).contains(&rep.quantum_exponent) {
        return Fail(format!("quantum exponent {:.3} outside [0.45, 0.55]", rep.quantum_exponent));
    }
    if !(0.95..=1.05).contains(&rep.classical_exponent) {
        return Fail(format!(
            "classical exponent {:.3} outside [0.95, 1.05]",
            rep.classical_exponent
        ));
    }
    Pass(format!(
        "success >= {worst:.4} at the rounded optimum; exponents {:.3} quantum / {:.3} classical",
        rep.quantum_exponent, rep.classical_exponent
    ))
}

// --- 02: amplitude-estimation error against the quoted bound.

fn c02_qae() -> Verdict {
    let mut rng = rng_stream(2, 0);
    let mut quoted_misses = [0usize; 5];
    let mut guaranteed_misses = 0usize;
    let mut cases = 0usize;
    for _ in 0..100 {
        let a_true: f64 = rng.gen();
        let col = CVec::from_vec(vec![c((1.0 - a_true).sqrt()), c(a_true.sqrt())]);
        let prep = unitary_with_first_column(&col);
        for (mi, m) in (4usize..=8).enumerate() {
            let t = (1usize << m) as f64;
            let out = match amplitude_estimate(&prep, &|z| z == 1, m) {
                Ok(o) => o,
                Err(err) => return Fail(format!("a={a_true:.4}, m={m}: {err}")),
            };
            let err = (out.a_hat - a_true).abs();
            if err > qae_quoted_error_bound(a_true, t) + 1e-12 {
                quoted_misses[mi] += 1;
            }
            if err > qae_guaranteed_error_bound(a_true, t) + 1e-12 {
                guaranteed_misses += 1;
            }
            cases += 1;
        }
    }
    let total_quoted: usize = quoted_misses.iter().sum();
    // Invariants that must hold regardless: the sqrt-corrected bound is
    // rigorous at every m, and the quoted form is provably safe at m = 4
    // (it only becomes loose once t exceeds 6 pi).
    if guaranteed_misses > 0 {
        return Fail(format!(
            "sqrt-corrected bound violated in {guaranteed_misses}/{cases} cases"
        ));
    }
    if quoted_misses[0] > 0 {
        return Fail(format!("quoted bound violated {} times at m=4", quoted_misses[0]));
    }
    if total_quoted == 0 {
        return Pass(format!("quoted bound held in {cases}/{cases} cases"));
    }
    Documented(format!(
        "quoted bound a(1-a)*2pi/t + pi^2/t^2 missed {total_quoted}/{cases} cases \
         (per m=4..8: {quoted_misses:?}); the sqrt-corrected form \
         2pi*sqrt(a(1-a))/t + pi^2/t^2 held in {cases}/{cases}"
    ))
}

// --- 03: swap-test overlap law, exact and sampled.

fn c03_swap() -> Verdict {
    let mut rng = rng_stream(3, 0);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = 1 + i % 3;
        let a = random_state(n, &mut rng);
        let b = random_state(n, &mut rng);
        let p = match swap_test_probability(&a, &b) {
            Ok(p) => p,
            Err(err) => return Fail(format!("pair {i}: {err}")),
        };
        let overlap = a.to_cvec().dotc(&b.to_cvec()).norm_sqr();
        let diff = (p - 0.5 * (1.0 + overlap)).abs();
        worst = worst.max(diff);
        if diff > 1e-12 {
            return Fail(format!("pair {i}: |p - (1+|<a|b>|^2)/2| = {diff:.2e} > 1e-12"));
        }
    }
    let shots = 100_000usize;
    for i in 0..5 {
        let a = random_state(2, &mut rng);
        let b = random_state(2, &mut rng);
        let p = swap_test_probability(&a, &b).expect("exact mode already ran");
        let est = match swap_test_sampled(&a, &b, shots, &mut rng) {
            Ok(e) => e,
            Err(err) => return Fail(format!("sampled pair {i}: {err}")),
        };
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        if (est - p).abs() > 4.0 * sigma {
            return Fail(format!(
                "sampled pair {i}: |{est:.5} - {p:.5}| > 4 sigma = {:.1e}",
                4.0 * sigma
            ));
        }
    }
    Pass(format!(
        "50 exact pairs within {worst:.1e}; 5 sampled runs within 4 sigma at 1e5 shots"
    ))
}

// --- 04: phase-estimation grid guarantee.

fn c04_qpe() -> Verdict {
    let mut rng = rng_stream(4, 0);
    for m in [4usize, 6, 8] {
        let grid = 1usize << m;
        for _ in 0..10 {
            let y = rng.gen::<usize>() % grid;
            let theta = y as f64 / grid as f64;
            let u = CMat::from_diagonal(&CVec::from_vec(vec![
                cis(2.0 * std::f64::consts::PI * theta),
                cis(1.1),
            ]));
            let sys = StateVector::basis_state(1, 0).expect("one qubit");
            let out = match qpe(&u, &sys, m) {
                Ok(o) => o,
                Err(err) => return Fail(format!("m={m}, y={y}: {err}")),
            };
            if out.y_max != y || out.p_max < 1.0 - 1e-10 {
                return Fail(format!(
                    "m={m}: grid phase {y}/{grid} read as {} with p={:.12}",
                    out.y_max, out.p_max
                ));
            }
        }
    }
    let m = 6usize;
    let grid = 1usize << m;
    let floor = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let mut worst = 1.0f64;
    for i in 0..50 {
        let theta: f64 = rng.gen();
        let u = CMat::from_diagonal(&CVec::from_vec(vec![
            cis(2.0 * std::f64::consts::PI * theta),
            cis(0.7),
        ]));
        let sys = StateVector::basis_state(1, 0).expect("one qubit");
        let out = match qpe(&u, &sys, m) {
            Ok(o) => o,
            Err(err) => return Fail(format!("off-grid {i}: {err}")),
        };
        let nearest = ((theta * grid as f64).round() as usize) % grid;
        let p = out.probs[nearest];
        worst = worst.min(p);
        if p < floor {
            return Fail(format!(
                "off-grid theta={theta:.6}: nearest readout carries {p:.4} < 4/pi^2"
            ));
        }
    }
    Pass(format!(
        "30 grid phases read exactly (p >= 1-1e-10); 50 off-grid nearest-readout p >= {worst:.4} >= 4/pi^2"
    ))
}

// --- 05: linear-solver fidelity, Hermitian and rectangular paths.

fn c05_hhl() -> Verdict {
    let mut rng = rng_stream(5, 0);
    let mut worst = 1.0f64;
    for (dim, reps) in [(4usize, 3usize), (8, 2)] {
        for rep in 0..reps {
            let a = hermitian_with_condition(dim, 8.0, &mut rng);
            let b = random_state(dim.trailing_zeros() as usize, &mut rng).to_cvec();
            let sys = match LinearSystem::new(a.clone(), b.clone()) {
                Ok(s) => s,
                Err(err) => return Fail(format!("{dim}x{dim} #{rep}: {err}")),
            };
            let lam_max = 1.0;
            let out = match hhl_solve(&sys, 7, Some(64.0), Some(2.5 * lam_max)) {
                Ok(o) => o,
                Err(err) => return Fail(format!("{dim}x{dim} #{rep}: {err}")),
            };
            let x = match solve(&a, &b) {
                Some(x) => x,
                None => return Fail(format!("{dim}x{dim} #{rep}: classical solve failed")),
            };
            let fid = out
                .state
                .fidelity(&state_from_cvec(&x))
                .expect("dimensions match");
            worst = worst.min(fid);
            if fid < 0.999 {
                return Fail(format!(
                    "{dim}x{dim} #{rep} (kappa {:.2}): fidelity {fid:.6} < 0.999",
                    sys.kappa()
                ));
            }
        }
    }
    // Rectangular 4x6 instance through the dilation, checked against the
    // least-squares (pseudoinverse) direction.
    let w = random_unitary(4, &mut rng);
    let v = random_unitary(6, &mut rng);
    let sigmas = [1.0, 0.75, 0.6, 0.45];
    let mut a = CMat::zeros(4, 6);
    for i in 0..4 {
        for j in 0..6 {
            for (k, s) in sigmas.iter().enumerate() {
                a[(i, j)] += w[(i, k)] * c(*s) * v[(j, k)].conj();
            }
        }
    }
    let b = random_state(2, &mut rng).to_cvec();
    let sys = match LinearSystem::new(a.clone(), b.clone()) {
        Ok(s) => s,
        Err(err) => return Fail(format!("4x6: {err}")),
    };
    let out = match hhl_solve(&sys, 7, Some(64.0), None) {
        Ok(o) => o,
        Err(err) => return Fail(format!("4x6: {err}")),
    };
    let x = pinv_apply(&a, &b);
    let mut padded = vec![Complex64::new(0.0, 0.0); 8];
    for i in 0..6 {
        padded[i] = x[i];
    }
    let want = StateVector::from_unnormalized(padded).expect("pseudoinverse is nonzero");
    let fid_rect = out.state.fidelity(&want).expect("dimensions match");
    if fid_rect < 0.99 {
        return Fail(format!("4x6 dilation fidelity {fid_rect:.6} < 0.99"));
    }
    Pass(format!(
        "Hermitian fidelity >= {worst:.5} at m=7 (kappa <= 8); 4x6 dilation fidelity {fid_rect:.5}"
    ))
}

// --- 06: first-order product-formula error scales as 1/r.

fn c06_trotter() -> Verdict {
    let mut rng = rng_stream(6, 0);
    let pairs: [(&str, &str); 5] = [("XI", "ZZ"), ("XX", "ZX"), ("XZ", "ZZ"), ("XY", "ZY"), ("X", "Z")];
    let t = 0.8f64;
    let mut slopes = Vec::new();
    for (pa, pb) in pairs {
        let wa = 0.6 + 0.8 * rng.gen::<f64>();
        let wb = 0.6 + 0.8 * rng.gen::<f64>();
        let h = match HamiltonianSum::from_pauli_terms(&[(wa, pa), (wb, pb)], t) {
            Ok(h) => h,
            Err(err) => return Fail(format!("{pa}+{pb}: {err}")),
        };
        let psi = random_state(h.n_qubits, &mut rng);
        let exact = expm_hermitian(&h.total(), t) * psi.to_cvec();
        let mut lns = Vec::new();
        let mut lne = Vec::new();
        for e in 2..=6u32 {
            let r = 1usize << e;
            let evolved = match trotter_evolve(&h, t, r, &psi) {
                Ok(s) => s,
                Err(err) => return Fail(format!("{pa}+{pb}, r={r}: {err}")),
            };
            let err = (evolved.to_cvec() - &exact).norm();
            lns.push((r as f64).ln());
            lne.push(err.ln());
        }
        let (slope, _) = linear_fit(&lns, &lne);
        if !(-1.2..=-0.8).contains(&slope) {
            return Fail(format!("{pa}+{pb}: log-log slope {slope:.3} outside [-1.2, -0.8]"));
        }
        slopes.push(slope);
    }
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Pass(format!("5 two-term instances, slopes in [{lo:.3}, {hi:.3}]"))
}

// --- 07: qubitization walk eigenphases obey the arcsine law.

fn c07_qubitization() -> Verdict {
    let mut rng = rng_stream(7, 0);
    let mut worst = 0.0f64;
    for dim in [4usize, 8] {
        let h = hermitian_with_condition(dim, 4.0, &mut rng);
        let sparse = match SparseHamiltonian::from_dense(&h) {
            Ok(s) => s,
            Err(err) => return Fail(format!("{dim}x{dim}: {err}")),
        };
        let walk = match build_qubitization(&sparse) {
            Ok(w) => w,
            Err(err) => return Fail(format!("{dim}x{dim}: {err}")),
        };
        // For every eigenvalue lambda of the sign-extended Hamiltonian the
        // walk must carry the pair mu = +-exp(+-i arcsin(lambda/|H|_1)),
        // checked as eigenvector residuals.
        let residual = walk.eigenphase_residual();
        worst = worst.max(residual);
        if residual > 1e-9 {
            return Fail(format!("{dim}x{dim}: eigenphase residual {residual:.2e} > 1e-9"));
        }
    }
    Pass(format!("4x4 and 8x8 walks, worst eigenpair residual {worst:.1e}"))
}

// --- 08: truncated-series and signal-processing evolution fidelity.

fn c08_evolution() -> Verdict {
    let mut rng = rng_stream(8, 0);
    // Pauli sum with weight one, evolved to |H t| = 2 exactly.
    let t = 2.0f64;
    let h = match HamiltonianSum::from_pauli_terms(&[(0.55, "XZ"), (0.45, "ZI")], t) {
        Ok(h) => h,
        Err(err) => return Fail(format!("sum build: {err}")),
    };
    let psi = random_state(2, &mut rng);
    let exact = state_from_cvec(&(expm_hermitian(&h.total(), t) * psi.to_cvec()));
    let lcu = match lcu_evolve(&h, t, 10, None, &psi) {
        Ok(o) => o,
        Err(err) => return Fail(format!("series path: {err}")),
    };
    let fid_lcu = lcu.state.fidelity(&exact).expect("dimensions match");
    if fid_lcu < 1.0 - 1e-8 {
        return Fail(format!("series fidelity {fid_lcu:.12} < 1 - 1e-8"));
    }
    // Dense random Hermitian through the polynomial-evolution path.
    let hm = hermitian_with_condition(8, 4.0, &mut rng);
    let psi8 = random_state(3, &mut rng);
    let exact8 = state_from_cvec(&(expm_hermitian(&hm, t) * psi8.to_cvec()));
    let qsp = match qsp_hamiltonian_sim(&hm, t, 1e-10, &psi8) {
        Ok(s) => s,
        Err(err) => return Fail(format!("polynomial path: {err}")),
    };
    let fid_qsp = qsp.fidelity(&exact8).expect("dimensions match");
    if fid_qsp < 1.0 - 1e-8 {
        return Fail(format!("polynomial-path fidelity {fid_qsp:.12} < 1 - 1e-8"));
    }
    Pass(format!(
        "series fidelity {:.2e} off unity (tail bound {:.1e}), polynomial path {:.2e} off",
        1.0 - fid_lcu,
        lcu.tail_bound,
        1.0 - fid_qsp
    ))
}

// --- 09: Szegedy stationarity plus Cesaro-vs-raw walk behavior.

fn c09_walks() -> Verdict {
    let mut rng = rng_stream(9, 0);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 2 + i % 7;
        let weights: Vec<f64> = (0..n).map(|_| 0.2 + rng.gen::<f64>()).collect();
        let chain = match metropolis_chain(&weights) {
            Ok(c) => c,
            Err(err) => return Fail(format!("chain {i}: {err}")),
        };
        let walk = match build_szegedy(&chain) {
            Ok(w) => w,
            Err(err) => return Fail(format!("chain {i}: {err}")),
        };
        let pi = walk.pi_tilde().to_cvec();
        let residual = (&walk.w * &pi - &pi)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        worst = worst.max(residual);
        if residual > 1e-10 {
            return Fail(format!("chain {i} (n={n}): |W pi~ - pi~| = {residual:.2e} > 1e-10"));
        }
    }
    // 4-cycle coin walk: the running average settles, the raw distribution
    // keeps oscillating.
    let adj = cycle_adjacency(4);
    let coin = matrices::h();
    let s0 = StateVector::basis_state(3, 0).expect("three qubits");
    // Horizons deliberately unaligned with the walk's finite period, so
    // agreement shows the generic 1/T settling rather than periodicity.
    let p389 = match coin_walk_cesaro(&adj, &coin, &s0, 389) {
        Ok(p) => p,
        Err(err) => return Fail(format!("average at T=389: {err}")),
    };
    let p2731 = coin_walk_cesaro(&adj, &coin, &s0, 2731).expect("same walk, longer horizon");
    let drift: f64 = p389.iter().zip(p2731.iter()).map(|(a, b)| (a - b).abs()).sum();
    if drift > 1e-2 {
        return Fail(format!("Cesaro average moved {drift:.3e} between T=389 and T=2731"));
    }
    let u = coin_walk_unitary(&adj, &coin).expect("cycle walk");
    let mut psi = s0.to_cvec();
    for _ in 0..512 {
        psi = &u * psi;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..64 {
        psi = &u * psi;
        let p0 = position_marginal(&state_from_cvec(&psi), 4)[0];
        lo = lo.min(p0);
        hi = hi.max(p0);
    }
    if hi - lo < 0.05 {
        return Fail(format!("raw occupation flattened out: range {:.3e} after 512 steps", hi - lo));
    }
    Pass(format!(
        "20 chains with |W pi~ - pi~| <= {worst:.1e}; average drift {drift:.1e} vs raw swing {:.2}",
        hi - lo
    ))
}

// --- 10: annealed walk pipeline reaches the tempered target.

fn c10_qmcmc() -> Verdict {
    let n = 8usize;
    let uniform = vec![vec![1.0 / n as f64; n]; n];
    let mut chains =
        vec![MarkovChainSpec::new(&uniform, None, true).expect("uniform chain is valid")];
    for temp in [8.0f64, 4.0, 2.0, 1.0] {
        let weights: Vec<f64> = (0..n).map(|x| (-(x as f64) / temp).exp()).collect();
        match metropolis_chain(&weights) {
            Ok(c) => chains.push(c),
            Err(err) => return Fail(format!("temperature {temp}: {err}")),
        }
    }
    let eps = 1e-2;
    let out = match qstat_core::walks::qmcmc_prepare(&chains, 0.9, eps) {
        Ok(o) => o,
        Err(err) => return Fail(format!("pipeline: {err}")),
    };
    let target_pi = &chains.last().expect("ladder is nonempty").pi;
    let amps: Vec<Complex64> = target_pi.iter().map(|w| c(w.sqrt())).collect();
    let target = StateVector::from_unnormalized(amps).expect("target is a distribution");
    let fid = out.state.fidelity(&target).expect("same register");
    if fid < 1.0 - eps {
        return Fail(format!("final fidelity {fid:.5} < {:.2}", 1.0 - eps));
    }
    Pass(format!(
        "fidelity {fid:.5} to the coldest qsample after {} stages ({} walk steps)",
        out.stage_fidelities.len(),
        out.walk_steps
    ))
}

// --- 11: signal-processing phase identities on a dense grid.

fn c11_qsp() -> Verdict {
    let grid: Vec<f64> = (0..=1000).map(|i| -1.0 + i as f64 / 500.0).collect();
    for (phases, name, f) in [
        (vec![0.0; 2], "x", Box::new(|x: f64| x) as Box<dyn Fn(f64) -> f64>),
        (vec![0.0; 3], "2x^2-1", Box::new(|x: f64| 2.0 * x * x - 1.0)),
    ] {
        for &x in &grid {
            let (_, p) = match qsp_evaluate(&phases, x) {
                Ok(r) => r,
                Err(err) => return Fail(format!("{name} at x={x}: {err}")),
            };
            if (p - c(f(x))).norm() > 1e-12 {
                return Fail(format!(
                    "{name} at x={x:.3}: P(x) = {p} differs by more than 1e-12"
                ));
            }
        }
    }
    // All-zero tuples of length d+1 reproduce the Chebyshev polynomials.
    for d in 1..=10usize {
        let phases = vec![0.0; d + 1];
        for &x in grid.iter().step_by(10) {
            let t_d = (d as f64 * x.clamp(-1.0, 1.0).acos()).cos();
            let (_, p) = qsp_evaluate(&phases, x).expect("grid point is in range");
            if (p - c(t_d)).norm() > 1e-11 {
                return Fail(format!("T_{d} at x={x:.3}: off by {:.2e}", (p - c(t_d)).norm()));
            }
        }
    }
    Pass("x and 2x^2-1 exact to 1e-12 on 1001 points; zero tuples give T_d for d <= 10".into())
}

// --- 12: polynomial inversion fidelity and degree growth.

fn c12_inversion() -> Verdict {
    let mut rng = rng_stream(12, 0);
    let eps = 1e-3f64;
    let mut degrees = Vec::new();
    let mut worst = 1.0f64;
    for kappa in [2.0f64, 4.0, 8.0] {
        let dim = 4usize;
        let left = random_unitary(dim, &mut rng);
        let right = random_unitary(dim, &mut rng);
        let mut sig = CMat::zeros(dim, dim);
        for k in 0..dim {
            let s = 1.0 / kappa + (1.0 - 1.0 / kappa) * (k as f64 / (dim - 1) as f64);
            sig[(k, k)] = c(s.max(1.0 / kappa));
        }
        let a = &left * sig * right.adjoint();
        let b = random_state(2, &mut rng);
        let out = match qsvt_invert(&a, kappa, eps, &b) {
            Ok(o) => o,
            Err(err) => return Fail(format!("kappa={kappa}: {err}")),
        };
        let x = pinv_apply(&a, &b.to_cvec());
        let fid = out.state.fidelity(&state_from_cvec(&x)).expect("same register");
        worst = worst.min(fid);
        if fid < 1.0 - eps {
            return Fail(format!("kappa={kappa}: fidelity {fid:.6} < {:.4}", 1.0 - eps));
        }
        if (out.degree as f64) > 4.0 * kappa * (kappa / eps).ln() {
            return Fail(format!(
                "kappa={kappa}: degree {} above 4*kappa*ln(kappa/eps)",
                out.degree
            ));
        }
        degrees.push(out.degree as f64);
    }
    // Near-linear growth in kappa (log factor included), far from the
    // quadratic blowup of the raw surrogate power.
    for w in degrees.windows(2) {
        let ratio = w[1] / w[0];
        if !(1.2..=3.0).contains(&ratio) {
            return Fail(format!("degree ratio {ratio:.2} outside [1.2, 3.0] per kappa doubling"));
        }
    }
    Pass(format!(
        "fidelity >= {worst:.5} for kappa in {{2,4,8}}; degrees {:?} grow ~kappa log(kappa/eps)",
        degrees.iter().map(|d| *d as usize).collect::<Vec<_>>()
    ))
}

// --- 13: fixed-point search holds its floor where Grover overshoots.

fn c13_fixed_point() -> Verdict {
    let n = 6usize;
    let n_items = 1usize << n;
    let marked = 37usize;
    let prep = walsh_hadamard_matrix(n);
    let delta = 0.25f64;
    let overlap = (1.0 / n_items as f64).sqrt();
    let l_min = match fixed_point_min_queries(overlap, delta) {
        Ok(l) => l,
        Err(err) => return Fail(format!("budget floor: {err}")),
    };
    let mut worst_err = 0.0f64;
    let mut q = l_min;
    for _ in 0..10 {
        let out = match fixed_point_search(&prep, &|z| z == marked, delta, q) {
            Ok(o) => o,
            Err(err) => return Fail(format!("budget {q}: {err}")),
        };
        let err = 1.0 - out.success_probability;
        worst_err = worst_err.max(err);
        if err > delta * delta {
            return Fail(format!(
                "budget {q}: error {err:.4} above delta^2 = {:.4}",
                delta * delta
            ));
        }
        q += 2;
    }
    // Plain amplitude amplification at double its optimum overshoots far
    // below the fixed-point floor.
    let oracle = FunctionOracle::from_fn(n, 1, |z| (z == marked) as usize)
        .expect("boolean oracle");
    let t_opt = grover_iterations(n_items, 1);
    let mut rng = rng_stream(13, 0);
    let over = match grover_search(&oracle, 1, Some(2 * t_opt), &mut rng) {
        Ok(o) => o,
        Err(err) => return Fail(format!("overshoot run: {err}")),
    };
    if over.success_probability > 1.0 - delta * delta {
        return Fail(format!(
            "doubled budget still succeeds with p = {:.4}; no overshoot to contrast",
            over.success_probability
        ));
    }
    Pass(format!(
        "error <= {worst_err:.4} <= delta^2 for 10 odd budgets >= {l_min}; doubled plain \
         amplification collapses to {:.1e}",
        over.success_probability
    ))
}

// --- 14: variational MaxCut on the triangle improves with depth.

fn c14_qaoa() -> Verdict {
    let cost = match CostHamiltonian::maxcut(3, &[(0, 1), (1, 2), (0, 2)]) {
        Ok(c) => c,
        Err(err) => return Fail(format!("cost build: {err}")),
    };
    let config = OptimizerConfig::default();
    let mut best = Vec::new();
    let mut last = None;
    for p in 1..=3usize {
        let out = match qaoa_optimize(&cost, p, &config, 14_000 + p as u64) {
            Ok(o) => o,
            Err(err) => return Fail(format!("p={p}: {err}")),
        };
        // Resolution slack: each run stops on a 1e-6 relative stall.
        if let Some(prev) = best.last() {
            if out.expectation < prev - 1e-6 {
                return Fail(format!(
                    "best <C> dropped from {prev:.8} to {:.8} at p={p}",
                    out.expectation
                ));
            }
        }
        best.push(out.expectation);
        last = Some(out);
    }
    let last = last.expect("three depths ran");
    if last.best_bitstring_value + 1e-12 < last.max_value {
        return Fail(format!(
            "best sampled bitstring cuts {} edges, brute force gives {}",
            last.best_bitstring_value, last.max_value
        ));
    }
    Pass(format!(
        "best <C> = [{:.4}, {:.4}, {:.4}] non-decreasing; sampled cut {} matches brute force",
        best[0], best[1], best[2], last.best_bitstring_value
    ))
}

// --- 15: quadratic call-count separation for mean estimation.

fn c15_qmc() -> Verdict {
    let rep = match qmc_scaling_report(424242) {
        Ok(r) => r,
        Err(err) => return Fail(format!("scaling report: {err}")),
    };
    if !(-1.25..=-0.8).contains(&rep.quantum_exponent) {
        return Fail(format!(
            "quantum exponent {:.3} not ~ -1 (outside [-1.25, -0.8])",
            rep.quantum_exponent
        ));
    }
    if !(-2.3..=-1.7).contains(&rep.classical_exponent) {
        return Fail(format!(
            "classical exponent {:.3} not ~ -2 (outside [-2.3, -1.7])",
            rep.classical_exponent
        ));
    }
    Pass(format!(
        "error-vs-calls exponents: quantum {:.3} (~ -1) vs classical {:.3} (~ -2)",
        rep.quantum_exponent, rep.classical_exponent
    ))
}

fn main() {
    let checks: Vec<(&str, f64, Box<dyn FnOnce() -> Verdict>)> = vec![
        ("grover optimality", 10.0, Box::new(c01_grover)),
        ("amplitude-estimation error bound", 20.0, Box::new(c02_qae)),
        ("swap-test overlap law", 10.0, Box::new(c03_swap)),
        ("phase-estimation grid guarantee", 10.0, Box::new(c04_qpe)),
        ("linear-solver fidelity", 30.0, Box::new(c05_hhl)),
        ("product-formula error order", 10.0, Box::new(c06_trotter)),
        ("qubitization eigenphases", 10.0, Box::new(c07_qubitization)),
        ("series/polynomial evolution fidelity", 20.0, Box::new(c08_evolution)),
        ("walk stationarity and averaging", 20.0, Box::new(c09_walks)),
        ("annealed sampling pipeline", 30.0, Box::new(c10_qmcmc)),
        ("signal-processing identities", 5.0, Box::new(c11_qsp)),
        ("polynomial inversion", 30.0, Box::new(c12_inversion)),
        ("fixed-point search floor", 10.0, Box::new(c13_fixed_point)),
        ("variational MaxCut depth sweep", 30.0, Box::new(c14_qaoa)),
        ("mean-estimation call scaling", 60.0, Box::new(c15_qmc)),
    ];
    let mut hard_failures = 0usize;
    let mut documented = 0usize;
    for (i, (name, budget, check)) in checks.into_iter().enumerate() {
        let t0 = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "opaque panic".into());
            Fail(format!("panicked: {msg}"))
        });
        let dt = t0.elapsed().as_secs_f64();
        let id = i + 1;
        match verdict {
            Pass(detail) if dt <= budget => {
                println!("criterion {id:02} {name}: PASS — {detail} ({dt:.1}s)");
            }
            Pass(detail) => {
                hard_failures += 1;
                println!(
                    "criterion {id:02} {name}: FAIL — runtime {dt:.1}s exceeded the {budget:.0}s \
                     budget; {detail}"
                );
            }
            Documented(detail) => {
                documented += 1;
                println!("criterion {id:02} {name}: FAIL (documented) — {detail} ({dt:.1}s)");
            }
            Fail(detail) => {
                hard_failures += 1;
                println!("criterion {id:02} {name}: FAIL — {detail} ({dt:.1}s)");
            }
        }
    }
    if hard_failures > 0 {
        eprintln!("acceptance: {hard_failures} criteria failed");
        std::process::exit(1);
    }
    if documented > 0 {
        println!(
            "acceptance: {} criteria pass; {documented} documented gap (see README)",
            15 - documented
        );
    } else {
        println!("acceptance: all 15 criteria pass");
    }
}
