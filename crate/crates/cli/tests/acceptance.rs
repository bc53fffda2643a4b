//! End-to-end acceptance gate. Each test replays one headline claim of
//! the closed theory against the independent propagator (or against the
//! shipped binary), prints a single PASS/FAIL line, and pins its
//! tolerance in code.

use latdiff_core::analytic::{
    critical_width, d_delta, gaussian_rate, green_kubo_gaussian_rate,
    standing_traveling_relation_check, PacketKind,
};
use latdiff_core::validate::{
    refine_peak, scan_gaussian_critical_width, scan_standing_critical_momentum,
};
use latdiff_core::{
    all_passed, evolve, run_suite, Config, Lattice, Scheme, Series, State, Suite,
};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::process::Command;

const J: f64 = 1.0;

fn verdict(number: usize, label: &str, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("{word} criterion {number:02}: {label} | {detail}");
    assert!(pass, "criterion {number:02} ({label}): {detail}");
}

fn run(state: &State, gamma: f64, scheme: Scheme, t_end: f64, dt: f64, stride: usize) -> Series {
    let model = Lattice::new(J).unwrap();
    let config = Config::new(scheme, state, &model, gamma, t_end)
        .unwrap()
        .with_dt(dt)
        .with_record_stride(stride);
    evolve(state, &model, gamma, &config).unwrap()
}

/// Least-squares slope of y against x.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Pointwise D_Γ − D_0 on a shared recording grid.
fn dephasing_excess(state: &State, gamma: f64, t_end: f64, dt: f64, stride: usize) -> Vec<f64> {
    let noisy = run(state, gamma, Scheme::Rk4Dense, t_end, dt, stride);
    let closed = run(state, 0.0, Scheme::BlochClosed, t_end, dt, stride);
    assert_eq!(noisy.times, closed.times, "the runs share a recording grid");
    noisy
        .diffusivity_flux
        .iter()
        .zip(&closed.diffusivity_flux)
        .map(|(&a, &b)| a - b)
        .collect()
}

#[test]
fn criterion_01_point_packet_ballistic_law() {
    // The chain must stay symmetric around the start site, so the nearest
    // odd count at or above 128 sites is used.
    let state = State::delta();
    let model = Lattice::new(J).unwrap();
    let config = Config::new(Scheme::BlochClosed, &state, &model, 0.0, 8.0)
        .unwrap()
        .with_n_sites(129)
        .with_dt(0.01)
        .with_record_stride(5);
    let series = evolve(&state, &model, 0.0, &config).unwrap();
    let mut worst = 0.0f64;
    for (i, &t) in series.times.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let want = 2.0 * J * J * t;
        worst = worst.max((series.diffusivity_flux[i] - want).abs() / want);
    }
    verdict(
        1,
        "point packet spreads ballistically, D = 2J²t",
        worst < 1e-6,
        &format!("max rel err {worst:.2e} (tol 1e-6) over t ≤ 8, 129 sites"),
    );
}

#[test]
fn criterion_02_point_packet_under_dephasing() {
    let state = State::delta();
    let mut worst_curve = 0.0f64;
    let mut worst_plateau = 0.0f64;
    for &gamma in &[0.1, 1.0, 2.0] {
        let t_end = 10.0 / gamma;
        let dt = if gamma < 1.0 { 0.04 } else { 0.02 };
        let series = run(&state, gamma, Scheme::Rk4Dense, t_end, dt, 10);
        for (i, &t) in series.times.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let want = d_delta(t, J, gamma);
            worst_curve = worst_curve.max((series.diffusivity_flux[i] - want).abs() / want);
        }
        let plateau = 2.0 * J * J / gamma;
        let last = series.diffusivity_flux[series.len() - 1];
        worst_plateau = worst_plateau.max((last - plateau).abs() / plateau);
    }
    verdict(
        2,
        "dephased point packet follows 2J²(1−e^{−Γt})/Γ into the plateau",
        worst_curve < 1e-4 && worst_plateau < 1e-3,
        &format!(
            "max rel err {worst_curve:.2e} (tol 1e-4), plateau off by {worst_plateau:.2e} \
             (tol 1e-3) for Γ ∈ {{0.1, 1, 2}}"
        ),
    );
}

#[test]
fn criterion_03_gaussian_width_suppression() {
    let mut detail = String::new();
    let mut pass = true;
    for &(w, tol) in &[(1.0, 5e-3), (3.0, 1e-3), (10.0, 1e-3)] {
        let state = State::gaussian(w).unwrap();
        let series = run(&state, 0.0, Scheme::BlochClosed, 8.0, 0.01, 10);
        let rate = slope(&series.times, &series.diffusivity_flux);
        let want = gaussian_rate(J, w);
        let rel = (rate - want).abs() / want;
        pass &= rel < tol;
        detail.push_str(&format!("w={w}: rel {rel:.2e} (tol {tol:.0e}); "));
    }
    verdict(
        3,
        "closed-system diffusivity rate is 2J²(1−e^{−1/w²})",
        pass,
        detail.trim_end_matches("; "),
    );
}

#[test]
fn criterion_04_coherence_decay_law() {
    let gamma = 0.8;
    let states = [
        State::delta(),
        State::gaussian(10.0).unwrap(),
        State::standing(10.0, 0.7).unwrap(),
        State::traveling(10.0, 0.9).unwrap(),
    ];
    let mut worst = 0.0f64;
    for state in &states {
        let series = run(state, gamma, Scheme::Rk4Dense, 3.0, 0.02, 5);
        for l in 1..=4 {
            let initial = series.rho_l[l - 1][0];
            for (i, &t) in series.times.iter().enumerate() {
                let want = initial * (-gamma * t).exp();
                worst = worst.max((series.rho_l[l - 1][i] - want).norm());
            }
        }
    }
    verdict(
        4,
        "spatial coherences decay as ⟨ρ(0)⟩_l·e^{−Γt} in all four families",
        worst < 1e-6,
        &format!("max abs err {worst:.2e} (tol 1e-6) for l = 1…4"),
    );
}

#[test]
fn criterion_05_gaussian_critical_width_and_enhancement() {
    let located = scan_gaussian_critical_width().unwrap();
    let width_ok = (located - 1.20).abs() <= 0.01;

    let state = State::gaussian(10.0).unwrap();
    let excess = dephasing_excess(&state, 1.0, 2.0, 0.01, 2);
    let peak = excess.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let streak = longest_positive_run(&excess);
    let interval_ok = peak > 0.1 && streak >= 30;

    verdict(
        5,
        "dephasing gain sets in at w_c ≈ 1.20 and lifts the wide packet",
        width_ok && interval_ok,
        &format!(
            "scanned w_c = {located:.4} (want 1.20 ± 0.01); w=10 excess peaks at \
             {peak:.3} over {streak} consecutive samples"
        ),
    );
}

fn longest_positive_run(values: &[f64]) -> usize {
    let mut best = 0;
    let mut current = 0;
    for &v in values {
        if v > 0.0 {
            current += 1;
            best = best.max(current);
        } else {
            current = 0;
        }
    }
    best
}

#[test]
fn criterion_06_standing_critical_modulation() {
    let located = scan_standing_critical_momentum(10.0).unwrap();
    let quarter_ok = (located - FRAC_PI_4).abs() <= 0.01;

    // k = 0.4 sits below the π/6 boundary: a finite critical width exists
    // and a wide packet is transiently enhanced by dephasing.
    let open = critical_width(PacketKind::Standing, 0.4).unwrap();
    let closed_wc = 1.0 / (2.0 * (0.8f64).cos()).ln().sqrt();
    let boundary_ok = matches!(open, Some(w) if (w - closed_wc).abs() < 1e-12)
        && critical_width(PacketKind::Standing, 0.6).unwrap().is_none();

    let helped = dephasing_excess(&State::standing(10.0, 0.4).unwrap(), 0.5, 1.0, 0.01, 2);
    let peak = helped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // The first few samples sit at t ≈ 0 where the excess vanishes by
    // construction; past them it must stay strictly negative.
    let hurt = dephasing_excess(&State::standing(10.0, 0.6).unwrap(), 0.5, 1.0, 0.01, 2);
    let ceiling = hurt.iter().skip(5).cloned().fold(f64::NEG_INFINITY, f64::max);
    let sign_ok = peak > 1e-3 && ceiling < 0.0;

    verdict(
        6,
        "standing-wave response flips at k = π/4; gain needs |k| < π/6",
        quarter_ok && boundary_ok && sign_ok,
        &format!(
            "scanned k_c = {located:.4} (want π/4 ± 0.01); w_c(0.4) matches its closed \
             form, none at k = 0.6; excess peak {peak:.2e} at k = 0.4, ceiling \
             {ceiling:.2e} at k = 0.6"
        ),
    );
}

#[test]
fn criterion_07_transient_peak_times() {
    let gamma = 1.0;

    let standing = run(
        &State::standing(10.0, FRAC_PI_2).unwrap(),
        gamma,
        Scheme::Rk4Dense,
        5.0,
        0.02,
        1,
    );
    let (t_standing, _) =
        refine_peak(&standing.times, &standing.diffusivity_flux).expect("the curve peaks");
    let want_standing = (1.0 + (0.01f64).exp()) / gamma;
    let rel_standing = (t_standing - want_standing).abs() / want_standing;

    let traveling = run(
        &State::traveling(10.0, FRAC_PI_2).unwrap(),
        gamma,
        Scheme::Rk4Dense,
        8.0,
        0.02,
        1,
    );
    let (t_traveling, _) =
        refine_peak(&traveling.times, &traveling.diffusivity_flux).expect("the curve peaks");
    let want_traveling = 3.92 / gamma;
    let rel_traveling = (t_traveling - want_traveling).abs() / want_traveling;

    verdict(
        7,
        "transient diffusivity peaks at [1+e^{1/w²}]/Γ (standing) and ≈3.92/Γ (traveling)",
        rel_standing <= 0.02 && rel_traveling <= 0.02,
        &format!(
            "standing argmax {t_standing:.4} vs {want_standing:.4} (rel {rel_standing:.2e}), \
             traveling argmax {t_traveling:.4} vs {want_traveling:.2} (rel {rel_traveling:.2e}), \
             tol 2%"
        ),
    );
}

#[test]
fn criterion_08_drift_and_its_arrest() {
    let mut detail = String::new();
    let mut pass = true;
    for &p in &[FRAC_PI_8, FRAC_PI_4, FRAC_PI_2] {
        let state = State::traveling(10.0, p).unwrap();

        let closed = run(&state, 0.0, Scheme::BlochClosed, 4.0, 0.01, 10);
        let v_num = slope(&closed.times, &closed.mean_n);
        let v_want = -2.0 * J * (-1.0f64 / 400.0).exp() * p.sin();
        let rel_v = (v_num - v_want).abs() / v_want.abs();

        let gamma = 1.0;
        let noisy = run(&state, gamma, Scheme::Rk4Dense, 12.0, 0.02, 20);
        let halted = noisy.mean_n[noisy.len() - 1];
        let want_halt = v_want / gamma;
        let rel_halt = (halted - want_halt).abs() / want_halt.abs();

        pass &= rel_v < 1e-3 && rel_halt < 5e-3;
        detail.push_str(&format!("p={p:.3}: v rel {rel_v:.1e}, halt rel {rel_halt:.1e}; "));
    }
    verdict(
        8,
        "CM drifts at −2Je^{−1/4w²}sin p and halts at −(2J/Γ)e^{−1/4w²}sin p",
        pass,
        &format!("{}tol 0.1% / 0.5%", detail),
    );
}

#[test]
fn criterion_09_soliton_limit() {
    let state = State::traveling(10.0, FRAC_PI_2).unwrap();
    let series = run(&state, 0.0, Scheme::BlochClosed, 10.0, 0.01, 10);
    let var0 = series.variance[0];
    let bound = 1.1 * 2.0 * J * J * (1.0 - (-1.0f64 / 200.0).exp()).powi(2);
    let mut worst = 0.0f64;
    for (i, &t) in series.times.iter().enumerate() {
        if t < 1.0 {
            continue;
        }
        worst = worst.max((series.variance[i] - var0) / (t * t));
    }
    verdict(
        9,
        "zone-edge traveling packet is soliton-like: dispersion rate stays tiny",
        worst <= bound,
        &format!("max variance growth {worst:.3e} ≤ 1.1×2J²(1−e^{{−1/200}})² = {bound:.3e}"),
    );
}

#[test]
fn criterion_10_identity_suite() {
    let mut worst_split = 0.0f64;
    for &q in &[0.0, FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2] {
        for &gamma in &[0.0, 1.0] {
            for i in 0..=100 {
                let t = 0.1 * i as f64;
                let (lhs, rhs) = standing_traveling_relation_check(t, J, 10.0, q, gamma);
                worst_split = worst_split.max((lhs - rhs).abs());
            }
        }
    }

    let mut worst_gk = 0.0f64;
    for &w in &[1.0, 3.0, 10.0] {
        let quad = green_kubo_gaussian_rate(w, J).unwrap();
        let rate = gaussian_rate(J, w);
        worst_gk = worst_gk.max((quad - rate).abs() / rate);
    }

    verdict(
        10,
        "D_S = D_T + ⟨n⟩d⟨n⟩/dt and the velocity-autocorrelation rate match",
        worst_split < 1e-8 && worst_gk < 1e-6,
        &format!(
            "identity gap {worst_split:.2e} (tol 1e-8), quadrature rel {worst_gk:.2e} (tol 1e-6)"
        ),
    );
}

#[test]
fn criterion_11_lifetime_averaged_length() {
    let reports = run_suite(Suite::DiffusionLength, false);
    for report in reports.iter().filter(|r| !r.passed) {
        eprintln!("FAIL {report:#?}");
    }
    verdict(
        11,
        "lifetime-averaged L² matches its closed form, optimum and sign flip included",
        all_passed(&reports),
        &format!("{} checks, numeric runs within 0.5%", reports.len()),
    );
}

#[test]
fn criterion_12_figure_regeneration() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["first", "second"] {
        let out = Command::new(env!("CARGO_BIN_EXE_latdiff"))
            .current_dir(dir.path())
            .args(["figure", "all", "--out-dir", sub])
            .output()
            .expect("the latdiff binary runs");
        assert!(
            out.status.success(),
            "figure emission failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let mut stable = true;
    let mut total = 0usize;
    for id in latdiff_cli::figures::PanelId::ALL {
        let a = std::fs::read(dir.path().join("first").join(id.filename())).unwrap();
        let b = std::fs::read(dir.path().join("second").join(id.filename())).unwrap();
        stable &= !a.is_empty() && a == b;
        total += 1;
    }
    verdict(
        12,
        "all figure panels emit and are byte-stable across runs",
        stable && total == 14,
        &format!("{total} panels compared byte-for-byte"),
    );
}
