//! Cross-validation of the quasi-free oracles against explicit Fock-space
//! computations, and of the exact evaluator against a Taylor-series
//! brute-force trace.

mod common;

use common::{brute_green, c, jw_annihilators, jw_hamiltonian, letters, random_hermitian};
use num_complex::Complex64 as C64;
use thermal_wick::oracle::{FermionOracle, Letter, TogfOracle};
use thermal_wick::system::{Observable, ThermalSystem};

/// Wick pairing evaluation equals the brute-force Fock trace for up to
/// three modes and words up to length six.
#[test]
fn wick_matches_fock_trace() {
    let cases: Vec<(Vec<f64>, f64)> = vec![
        (vec![0.9], 1.1),
        (vec![0.7, -0.4], 0.8),
        (vec![0.5, -0.9, 1.3], 1.0),
    ];
    for (energies, beta) in cases {
        let modes = energies.len();
        let oracle = FermionOracle::new(energies.clone(), beta).unwrap();
        let h = jw_hamiltonian(&energies);
        let ann = jw_annihilators(modes);
        let sys = ThermalSystem::new(h, vec![], vec![], beta).unwrap();
        let obs: Vec<Observable> = ann
            .iter()
            .enumerate()
            .map(|(k, op)| Observable::new(format!("psi_{k}"), op.clone()).unwrap())
            .chain(
                ann.iter().enumerate().map(|(k, op)| {
                    Observable::new(format!("psi*_{k}"), op.adjoint()).unwrap()
                }),
            )
            .collect();

        // Deterministic word list: creators and annihilators over all
        // modes, lengths 2, 4, 6, cyclically ordered times.
        let words: Vec<Vec<(usize, f64)>> = vec![
            vec![(modes, 0.1 * beta), (0, 0.6 * beta)],
            vec![
                (modes, 0.05 * beta),
                (modes.min(2 * modes - 1), 0.3 * beta),
                (0, 0.55 * beta),
                (modes - 1, 0.8 * beta),
            ],
            vec![
                (modes, 0.05 * beta),
                (2 * modes - 1, 0.2 * beta),
                (modes - 1, 0.35 * beta),
                (0, 0.5 * beta),
                (modes, 0.65 * beta),
                (0, 0.9 * beta),
            ],
        ];
        for word in words {
            let wick = oracle.eval(&letters(&word)).unwrap();
            let obs_word: Vec<(&Observable, f64)> =
                word.iter().map(|&(g, tau)| (&obs[g], tau)).collect();
            let fock = sys.togf(&obs_word).unwrap();
            assert!(
                (wick - fock).norm() < 1e-10,
                "modes={modes} word={word:?}: wick={wick} fock={fock}"
            );
        }
    }
}

/// Fermionic anti-periodicity survives on the multi-mode oracle and on
/// words mixing modes.
#[test]
fn multimode_antiperiodicity() {
    let oracle = FermionOracle::new(vec![0.7, -0.4], 0.8).unwrap();
    let beta = oracle.beta();
    for mode in 0..2 {
        let (cr, an) = (oracle.creator(mode), oracle.annihilator(mode));
        for &(t1, t2) in &[(0.1, 0.5), (0.25, 0.6)] {
            let base = oracle
                .eval(&[Letter::new(cr, t1 * beta), Letter::new(an, t2 * beta)])
                .unwrap();
            let shifted = oracle
                .eval(&[Letter::new(cr, t1 * beta + beta), Letter::new(an, t2 * beta)])
                .unwrap();
            assert!((shifted + base).norm() < 1e-12);
        }
    }
}

/// The exact evaluator agrees with a fully independent brute-force trace
/// in which every exponential is a Taylor series.
#[test]
fn green_function_matches_taylor_brute_force() {
    for dim in 2..=4usize {
        let h = random_hermitian(dim, 71 + dim as u64);
        let beta = 0.9;
        let sys = ThermalSystem::new(h.clone(), vec![], vec![], beta).unwrap();
        let a1 = random_hermitian(dim, 201) + random_hermitian(dim, 202) * C64::i();
        let a2 = random_hermitian(dim, 203) + random_hermitian(dim, 204) * C64::i();
        let oa1 = Observable::new("a1", a1.clone()).unwrap();
        let oa2 = Observable::new("a2", a2.clone()).unwrap();

        // Real times (20 samples).
        for k in 0..20 {
            let t = -1.5 + 0.16 * k as f64;
            let fast = sys.rtgf(&[(&oa1, 0.0), (&oa2, t)]);
            let brute = brute_green(&h, beta, &[(a1.clone(), c(0.0, 0.0)), (a2.clone(), c(t, 0.0))]);
            assert!((fast - brute).norm() < 1e-11, "dim={dim} t={t}");
        }
        // Complex times in the tube.
        let z1 = c(0.3, 0.1 * beta);
        let z2 = c(-0.7, 0.6 * beta);
        let fast = sys
            .green_function(&[(&oa1, z1), (&oa2, z2)])
            .unwrap();
        let brute = brute_green(&h, beta, &[(a1.clone(), z1), (a2.clone(), z2)]);
        assert!((fast - brute).norm() < 1e-11, "dim={dim} complex");
    }
}

/// TOGF evaluation through the stable transfer product equals the naive
/// product of complex-time evolutions.
#[test]
fn togf_matches_naive_evolution_product() {
    let dim = 3;
    let h = random_hermitian(dim, 303);
    let beta = 1.2;
    let sys = ThermalSystem::new(h.clone(), vec![], vec![], beta).unwrap();
    let gibbs = sys.gibbs_state();
    let a = Observable::new("a", random_hermitian(dim, 305)).unwrap();
    let b = Observable::new("b", random_hermitian(dim, 306) * C64::i() + random_hermitian(dim, 307))
        .unwrap();
    let taus = [0.2, 0.7, 1.0];
    let fast = sys
        .togf(&[(&a, taus[0]), (&b, taus[1]), (&a, taus[2])])
        .unwrap();
    let naive = (&gibbs.rho
        * &sys.evolve(&a, c(0.0, taus[0])).matrix
        * &sys.evolve(&b, c(0.0, taus[1])).matrix
        * &sys.evolve(&a, c(0.0, taus[2])).matrix)
        .trace();
    assert!((fast - naive).norm() < 1e-11);
}

/// Unit deletion (P*iii) and coincident-time multiplicativity (P*ii) for
/// the finite-system oracle; multilinearity in a letter.
#[test]
fn oracle_algebraic_properties() {
    let dim = 3;
    let sys = ThermalSystem::new(random_hermitian(dim, 401), vec![], vec![], 1.0).unwrap();
    let gens = thermal_wick::oracle::matrix_unit_generators_with_identity(dim);
    let oracle =
        thermal_wick::oracle::FiniteSystemOracle::new(sys.clone(), gens.clone()).unwrap();

    // (P*iii): inserting the identity generator anywhere changes nothing.
    let word = letters(&[(1, 0.2), (5, 0.6)]);
    let base = oracle.eval(&word).unwrap();
    for slot in 0..=2 {
        let mut with_unit = word.clone();
        let tau = match slot {
            0 => 0.1,
            1 => 0.4,
            _ => 0.9,
        };
        with_unit.insert(slot, Letter::new(0, tau));
        let v = oracle.eval(&with_unit).unwrap();
        assert!((v - base).norm() < 1e-12, "slot {slot}");
    }

    // (P*ii): coincident times multiply. Generators are matrix units with
    // the identity at index 0; e12 e21 = e11 (indices shifted by one).
    let tau = 0.3;
    let pair = oracle
        .eval(&letters(&[(2, tau), (4, tau), (9, 0.8)]))
        .unwrap();
    let merged_matrix = &gens[2].matrix * &gens[4].matrix;
    let merged_obs = Observable::new("m", merged_matrix).unwrap();
    let merged = sys
        .togf(&[(&merged_obs, tau), (&gens[9], 0.8)])
        .unwrap();
    assert!((pair - merged).norm() < 1e-12);

    // Multilinearity: evaluating with a linear-combination observable
    // equals the combination of evaluations.
    let za = c(0.7, -0.3);
    let zb = c(-0.2, 1.1);
    let combo =
        Observable::new("combo", &gens[1].matrix * za + &gens[6].matrix * zb).unwrap();
    let lhs = sys
        .togf(&[(&gens[3], 0.1), (&combo, 0.5)])
        .unwrap();
    let rhs = za * sys.togf(&[(&gens[3], 0.1), (&gens[1], 0.5)]).unwrap()
        + zb * sys.togf(&[(&gens[3], 0.1), (&gens[6], 0.5)]).unwrap();
    assert!((lhs - rhs).norm() < 1e-12);
}

/// The two-point TOGF of the single-mode fermion oracle matches the exact
/// two-dimensional Fock computation across the cyclic domain, including
/// the wrapped region probed by the periodicity check.
#[test]
fn single_mode_fermion_wrapped_kernel() {
    let eps = -0.35;
    let beta = 1.4;
    let oracle = FermionOracle::new(vec![eps], beta).unwrap();
    let sys = ThermalSystem::qubit(eps, beta);
    let mut lower = thermal_wick::linalg::CMat::zeros(2, 2);
    lower[(0, 1)] = c(1.0, 0.0);
    let psi = Observable::new("psi", lower.clone()).unwrap();
    let psidag = Observable::new("psi*", lower.adjoint()).unwrap();

    // In-domain agreement.
    for k in 1..8 {
        let tau = beta * k as f64 / 8.0;
        let wick = oracle
            .eval(&[Letter::new(1, 0.0), Letter::new(0, tau)])
            .unwrap();
        let fock = sys.togf(&[(&psidag, 0.0), (&psi, tau)]).unwrap();
        assert!((wick - fock).norm() < 1e-13);
    }
    // One wrap beyond beta: anti-periodic continuation.
    for k in 1..4 {
        let tau = beta * k as f64 / 8.0;
        let wrapped = oracle
            .eval(&[Letter::new(1, 0.0), Letter::new(0, tau + beta)])
            .unwrap();
        let base = oracle
            .eval(&[Letter::new(1, 0.0), Letter::new(0, tau)])
            .unwrap();
        assert!((wrapped + base).norm() < 1e-13);
    }
}
