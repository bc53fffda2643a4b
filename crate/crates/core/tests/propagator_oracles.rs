//! Independent references for the density-matrix propagator: a naive
//! full-matrix integrator, exact closed-system laws, scheme agreement,
//! positivity of the evolved state, and the boundary monitor.

use latdiff_core::{
    evolve, evolve_with_final, population_snapshot, Config, Error, Lattice, Scheme, State,
};
use ndarray::Array2;
use num_complex::Complex;

type C = Complex<f64>;

/// Master-equation right-hand side −iJ[S + Sᵀ, ρ] − Γ(ρ − diag ρ), built
/// entry by entry on the full matrix with no shared code.
fn naive_rhs(rho: &Array2<C>, j: f64, gamma: f64) -> Array2<C> {
    let n = rho.nrows();
    let mut out = Array2::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            let mut h_rho = C::new(0.0, 0.0);
            if r > 0 {
                h_rho += rho[(r - 1, c)];
            }
            if r + 1 < n {
                h_rho += rho[(r + 1, c)];
            }
            let mut rho_h = C::new(0.0, 0.0);
            if c > 0 {
                rho_h += rho[(r, c - 1)];
            }
            if c + 1 < n {
                rho_h += rho[(r, c + 1)];
            }
            let mut v = C::new(0.0, -j) * (h_rho - rho_h);
            if r != c {
                v -= gamma * rho[(r, c)];
            }
            out[(r, c)] = v;
        }
    }
    out
}

/// Classical RK4 on the naive right-hand side.
fn naive_final(state: &State, n_sites: usize, j: f64, gamma: f64, dt: f64, steps: usize) -> Array2<C> {
    let psi = state.amplitudes(n_sites).expect("state fits the chain");
    let mut rho = Array2::from_shape_fn((n_sites, n_sites), |(r, c)| psi[r] * psi[c].conj());
    let half = dt / 2.0;
    let sixth = dt / 6.0;
    for _ in 0..steps {
        let k1 = naive_rhs(&rho, j, gamma);
        let k2 = naive_rhs(&(&rho + &k1.mapv(|v| v * half)), j, gamma);
        let k3 = naive_rhs(&(&rho + &k2.mapv(|v| v * half)), j, gamma);
        let k4 = naive_rhs(&(&rho + &k3.mapv(|v| v * dt)), j, gamma);
        let sum = &k1 + &k2.mapv(|v| v * 2.0) + &k3.mapv(|v| v * 2.0) + &k4;
        rho = rho + sum.mapv(|v| v * sixth);
    }
    rho
}

#[test]
fn wedge_integrator_matches_the_full_matrix_reference() {
    let n_sites = 21;
    let (j, gamma, dt, t_end) = (0.8, 0.7, 1e-3, 1.0);
    let state = State::traveling(1.5, 0.7).unwrap();
    let model = Lattice::new(j).unwrap();
    // A narrow monitor band: the default 8-site band would reach into the
    // packet tail on a chain this small.
    let config = Config::new(Scheme::Rk4Dense, &state, &model, gamma, t_end)
        .unwrap()
        .with_n_sites(n_sites)
        .with_dt(dt)
        .with_boundary_margin(2);
    let (series, final_rho) = evolve_with_final(&state, &model, gamma, &config).unwrap();
    let reference = naive_final(&state, n_sites, j, gamma, dt, 1000);

    let mut worst = 0.0f64;
    for r in 0..n_sites {
        for c in 0..n_sites {
            worst = worst.max((final_rho.matrix()[(r, c)] - reference[(r, c)]).norm());
        }
    }
    // Same method, same grid; only the storage layout and the order of
    // floating-point operations differ.
    assert!(worst < 1e-12, "max entry deviation {worst:.3e}");

    // The recorded moments at t_end must match moments of the reference.
    let half = (n_sites - 1) as isize / 2;
    let site = |i: usize| (i as isize - half) as f64;
    let mean: f64 = (0..n_sites).map(|i| site(i) * reference[(i, i)].re).sum();
    let second: f64 = (0..n_sites).map(|i| site(i) * site(i) * reference[(i, i)].re).sum();
    let last = series.len() - 1;
    assert!((series.mean_n[last] - mean).abs() < 1e-12);
    assert!((series.variance[last] - (second - mean * mean)).abs() < 1e-12);
}

#[test]
fn bloch_delta_variance_is_ballistic() {
    let j = 1.3;
    let state = State::delta();
    let model = Lattice::new(j).unwrap();
    let config = Config::new(Scheme::BlochClosed, &state, &model, 0.0, 6.0)
        .unwrap()
        .with_dt(0.01)
        .with_record_stride(25);
    let series = evolve(&state, &model, 0.0, &config).unwrap();
    for (i, &t) in series.times.iter().enumerate() {
        let want = 2.0 * j * j * t * t;
        let err = (series.variance[i] - want).abs();
        assert!(err <= 1e-9 * want.max(1.0), "t = {t}: variance off by {err:.3e}");
    }
}

#[test]
fn schemes_agree_on_a_closed_run() {
    let state = State::traveling(2.0, 0.9).unwrap();
    let model = Lattice::new(-1.0).unwrap();
    let mut runs = Vec::new();
    for scheme in [Scheme::BlochClosed, Scheme::Rk4Dense] {
        let config = Config::new(scheme, &state, &model, 0.0, 3.0)
            .unwrap()
            .with_dt(0.005)
            .with_record_stride(60);
        runs.push(evolve(&state, &model, 0.0, &config).unwrap());
    }
    let (exact, stepped) = (&runs[0], &runs[1]);
    assert_eq!(exact.len(), stepped.len());
    for i in 0..exact.len() {
        assert!((exact.mean_n[i] - stepped.mean_n[i]).abs() < 1e-7);
        assert!((exact.variance[i] - stepped.variance[i]).abs() < 1e-7);
        assert!((exact.rho_l[0][i] - stepped.rho_l[0][i]).norm() < 1e-7);
    }
}

#[test]
fn undersized_chain_reports_a_boundary_leak() {
    let state = State::delta();
    let model = Lattice::new(1.0).unwrap();
    // 41 sites clear the hard light-cone bound for t_end = 8, but the
    // ballistic front carries visible mass into the monitor band well
    // before the horizon.
    let config = Config::new(Scheme::BlochClosed, &state, &model, 0.0, 8.0)
        .unwrap()
        .with_n_sites(41);
    let err = evolve(&state, &model, 0.0, &config).unwrap_err();
    assert!(
        matches!(err, Error::BoundaryLeak { .. }),
        "expected a boundary leak, got {err}"
    );
}

#[test]
fn closed_coherences_are_conserved_and_dephasing_decays_them() {
    let state = State::standing(3.0, 0.7).unwrap();
    let model = Lattice::new(1.0).unwrap();

    let config = Config::new(Scheme::BlochClosed, &state, &model, 0.0, 5.0)
        .unwrap()
        .with_dt(0.01)
        .with_record_stride(100);
    let series = evolve(&state, &model, 0.0, &config).unwrap();
    for l in 0..4 {
        let first = series.rho_l[l][0];
        for &value in &series.rho_l[l] {
            assert!((value - first).norm() < 1e-9, "l = {}: drift", l + 1);
        }
    }

    let gamma = 0.8;
    let config = Config::new(Scheme::Rk4Dense, &state, &model, gamma, 5.0)
        .unwrap()
        .with_dt(0.02)
        .with_record_stride(50);
    let series = evolve(&state, &model, gamma, &config).unwrap();
    for l in 0..4 {
        let first = series.rho_l[l][0];
        for (i, &value) in series.rho_l[l].iter().enumerate() {
            let want = first * (-gamma * series.times[i]).exp();
            assert!(
                (value - want).norm() < 1e-7,
                "l = {}, t = {}: coherence law violated",
                l + 1,
                series.times[i]
            );
        }
    }
}

#[test]
fn evolved_state_stays_positive_semidefinite() {
    let n_sites = 63;
    let state = State::traveling(2.0, 0.9).unwrap();
    let model = Lattice::new(1.0).unwrap();
    let config = Config::new(Scheme::Rk4Dense, &state, &model, 0.5, 2.0)
        .unwrap()
        .with_n_sites(n_sites)
        .with_dt(0.005);
    let (_, final_rho) = evolve_with_final(&state, &model, 0.5, &config).unwrap();

    // Cholesky of ρ + shift·1 certifies every eigenvalue above −shift,
    // which bounds integrator-induced negativity near machine precision.
    let shift = 1.0001e-8;
    let a = final_rho.matrix();
    let mut l = Array2::<C>::zeros((n_sites, n_sites));
    for row in 0..n_sites {
        for col in 0..=row {
            let mut acc = a[(row, col)];
            if row == col {
                acc += shift;
            }
            for k in 0..col {
                acc -= l[(row, k)] * l[(col, k)].conj();
            }
            if row == col {
                assert!(
                    acc.re > 0.0 && acc.im.abs() < 1e-12,
                    "pivot {row} lost positivity: {acc}"
                );
                l[(row, col)] = C::new(acc.re.sqrt(), 0.0);
            } else {
                l[(row, col)] = acc / l[(col, col)];
            }
        }
    }
}

#[test]
fn population_snapshots_capture_transport() {
    let model = Lattice::new(1.0).unwrap();

    // A point excitation develops ballistic lobes just inside the light
    // cone 2|J|t = 12: the front peak sits at 2t − 0.81·(2t)^{1/3} ≈ 10.
    let state = State::delta();
    let config = Config::new(Scheme::BlochClosed, &state, &model, 0.0, 6.0)
        .unwrap()
        .with_dt(0.01);
    let snap = population_snapshot(&state, &model, 0.0, &[6.0], &config).unwrap();
    let profile = &snap.populations[0];
    let best = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| snap.sites[i].abs())
        .unwrap();
    assert!((9.0..=12.0).contains(&best), "lobe at |n| = {best}, expected near 10");
    let half = profile.len() / 2;
    for i in 0..profile.len() {
        assert!((profile[i] - profile[profile.len() - 1 - i]).abs() < 1e-12);
    }
    assert!(profile[half] < profile.iter().cloned().fold(0.0, f64::max) / 2.0);

    // A wide unmodulated packet barely moves over two hopping times.
    let state = State::gaussian(10.0).unwrap();
    let config = Config::new(Scheme::BlochClosed, &state, &model, 0.0, 2.0)
        .unwrap()
        .with_dt(0.01);
    let snap = population_snapshot(&state, &model, 0.0, &[0.0, 2.0], &config).unwrap();
    let drift = snap.populations[0]
        .iter()
        .zip(&snap.populations[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(drift < 2e-4, "wide packet moved by {drift:.2e}");

    // Dephasing washes out the period-two fringes of a k = π/2 standing
    // packet: the alternating population sum decays from one to near zero.
    let state = State::standing(10.0, std::f64::consts::FRAC_PI_2).unwrap();
    let config = Config::new(Scheme::Rk4Dense, &state, &model, 1.0, 5.0)
        .unwrap()
        .with_dt(0.02);
    let snap = population_snapshot(&state, &model, 1.0, &[0.0, 5.0], &config).unwrap();
    let alternating = |profile: &[f64]| -> f64 {
        profile
            .iter()
            .enumerate()
            .map(|(i, &p)| if (snap.sites[i].rem_euclid(2.0)) < 0.5 { p } else { -p })
            .sum()
    };
    let before = alternating(&snap.populations[0]);
    let after = alternating(&snap.populations[1]);
    assert!(before > 0.99, "initial fringe contrast {before}");
    assert!(after.abs() < 0.1, "residual fringe contrast {after}");
}
