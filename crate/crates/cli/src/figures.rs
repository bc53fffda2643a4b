//! Figure data sets, one CSV table per panel id.
//!
//! Closed-form panels sample the analytic module on documented default
//! grids whose ranges cover the interesting structure: width sweeps catch
//! the critical width, time sweeps catch the transient peaks, and the
//! dephasing sweeps catch the diffusion-length maximum. The population
//! panels propagate width-10 packets. Every panel builds in well under a
//! minute, and the sample count of the sweep panels can be overridden.

use anyhow::{ensure, Result};
use latdiff_core::analytic::{self, PacketKind};
use latdiff_core::difflength::{delta_gamma_l2, delta_l2, l2_closed_gaussian};
use latdiff_core::{population_snapshot, Config, Lattice, Lifetime, Scheme, State};

use crate::csvout::Table;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

/// Wavenumbers of the standing-packet curves, straddling the π/4 sign flip.
const K_SET: [f64; 5] = [0.0, 0.4, FRAC_PI_4, 1.2, FRAC_PI_2];

/// Momenta of the traveling-packet curves, up to the soliton point π/2.
const P_SET: [f64; 5] = [0.0, FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2];

/// Wavenumbers of the population panels.
const POP_K_SET: [f64; 4] = [0.0, 0.4, FRAC_PI_4, FRAC_PI_2];

/// Momenta of the population panels.
const POP_P_SET: [f64; 3] = [FRAC_PI_8, FRAC_PI_4, FRAC_PI_2];

/// Packet width of every panel that fixes the width.
const PANEL_WIDTH: f64 = 10.0;

/// Mean lifetime τ|J| of the diffusion-length panels 5a and 5b.
const PANEL_TAU: f64 = 5.0;

/// One emittable figure panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PanelId {
    #[value(name = "fig1a")]
    Fig1a,
    #[value(name = "fig1b")]
    Fig1b,
    #[value(name = "fig1c")]
    Fig1c,
    #[value(name = "fig2a")]
    Fig2a,
    #[value(name = "fig2b")]
    Fig2b,
    #[value(name = "fig2c")]
    Fig2c,
    #[value(name = "fig3")]
    Fig3,
    #[value(name = "fig4a")]
    Fig4a,
    #[value(name = "fig4b")]
    Fig4b,
    #[value(name = "fig4c")]
    Fig4c,
    #[value(name = "fig4d")]
    Fig4d,
    #[value(name = "fig5a")]
    Fig5a,
    #[value(name = "fig5b")]
    Fig5b,
    #[value(name = "fig5c")]
    Fig5c,
}

impl PanelId {
    /// Every panel, in figure order.
    pub const ALL: [PanelId; 14] = [
        PanelId::Fig1a,
        PanelId::Fig1b,
        PanelId::Fig1c,
        PanelId::Fig2a,
        PanelId::Fig2b,
        PanelId::Fig2c,
        PanelId::Fig3,
        PanelId::Fig4a,
        PanelId::Fig4b,
        PanelId::Fig4c,
        PanelId::Fig4d,
        PanelId::Fig5a,
        PanelId::Fig5b,
        PanelId::Fig5c,
    ];

    /// Panel name as used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            PanelId::Fig1a => "fig1a",
            PanelId::Fig1b => "fig1b",
            PanelId::Fig1c => "fig1c",
            PanelId::Fig2a => "fig2a",
            PanelId::Fig2b => "fig2b",
            PanelId::Fig2c => "fig2c",
            PanelId::Fig3 => "fig3",
            PanelId::Fig4a => "fig4a",
            PanelId::Fig4b => "fig4b",
            PanelId::Fig4c => "fig4c",
            PanelId::Fig4d => "fig4d",
            PanelId::Fig5a => "fig5a",
            PanelId::Fig5b => "fig5b",
            PanelId::Fig5c => "fig5c",
        }
    }

    /// File name of the emitted CSV.
    pub fn filename(self) -> String {
        format!("{}.csv", self.name())
    }
}

/// Uniform grid of `n >= 2` samples from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a sweep needs at least two samples");
    let h = (b - a) / ((n - 1) as f64);
    (0..n).map(|i| a + h * (i as f64)).collect()
}

/// Builds the data table of one panel. `points` overrides the sample count
/// along the sweep axis of the closed-form panels; the population panels
/// are sampled site-by-site and ignore it.
pub fn panel(id: PanelId, points: Option<usize>) -> Result<Table> {
    if let Some(n) = points {
        ensure!(n >= 2, "--points must be at least 2, got {n}");
    }
    match id {
        PanelId::Fig1a => fig1a(points),
        PanelId::Fig1b => fig1b(points),
        PanelId::Fig1c => fig1c(points),
        PanelId::Fig2a => population_panel("k", &POP_K_SET, 1.0, 0.0, Scheme::BlochClosed),
        PanelId::Fig2b => population_panel("p", &POP_P_SET, -1.0, 0.0, Scheme::BlochClosed),
        PanelId::Fig2c => population_panel("k", &POP_K_SET, 1.0, 1.0, Scheme::Rk4Dense),
        PanelId::Fig3 => fig3(points),
        PanelId::Fig4a => fig4_diffusivity("k", &K_SET, points),
        PanelId::Fig4b => fig4_relative("k", &K_SET, points),
        PanelId::Fig4c => fig4_diffusivity("p", &P_SET, points),
        PanelId::Fig4d => fig4_relative("p", &P_SET, points),
        PanelId::Fig5a => fig5a(points),
        PanelId::Fig5b => fig5b(points),
        PanelId::Fig5c => fig5c(points),
    }
}

/// Width grid of the panels sweeping the packet width.
fn width_grid(points: Option<usize>) -> Vec<f64> {
    linspace(0.5, 10.0, points.unwrap_or(191))
}

/// Time grid of the diffusivity panels.
fn time_grid(points: Option<usize>) -> Vec<f64> {
    linspace(0.0, 8.0, points.unwrap_or(401))
}

/// Dephasing grid of the diffusion-length panels.
fn gamma_grid(points: Option<usize>) -> Vec<f64> {
    linspace(0.0, 2.0, points.unwrap_or(401))
}

fn q_col(prefix: &str, axis: &str, q: f64) -> String {
    format!("{prefix}_{axis}{q:.4}")
}

/// Standing packet: initial growth rate of the relative diffusivity
/// against width, one column per wavenumber.
fn fig1a(points: Option<usize>) -> Result<Table> {
    let ws = width_grid(points);
    let mut columns = vec!["w".to_owned()];
    columns.extend(K_SET.iter().map(|&k| q_col("rate", "k", k)));
    let mut table = Table::new(columns);
    table.comment("standing packet, growth rate of the relative diffusivity");
    table.comment("d(D_S - D_delta)/dt = -2 J^2 e^{-1/w^2} cos 2k at J = 1, Gamma = 0");
    for &w in &ws {
        let mut row = vec![w];
        for &k in &K_SET {
            row.push(analytic::relative_diffusivity(PacketKind::Standing, 1.0, 1.0, w, k, 0.0));
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Traveling packet: diffusivity growth rate against width, one column per
/// momentum.
fn fig1b(points: Option<usize>) -> Result<Table> {
    let ws = width_grid(points);
    let mut columns = vec!["w".to_owned()];
    columns.extend(P_SET.iter().map(|&p| q_col("rate", "p", p)));
    let mut table = Table::new(columns);
    table.comment("traveling packet, diffusivity growth rate");
    table.comment("dD_T/dt = 2 J^2 (1 - e^{-1/w^2} cos 2p - 2 e^{-1/(2w^2)} sin^2 p) at J = 1, Gamma = 0");
    for &w in &ws {
        let mut row = vec![w];
        for &p in &P_SET {
            row.push(analytic::d_traveling(1.0, 1.0, w, p, 0.0));
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Traveling packet: center-of-mass speed against width, one column per
/// momentum.
fn fig1c(points: Option<usize>) -> Result<Table> {
    let ws = width_grid(points);
    let mut columns = vec!["w".to_owned()];
    columns.extend(P_SET.iter().map(|&p| q_col("speed", "p", p)));
    let mut table = Table::new(columns);
    table.comment("traveling packet, center-of-mass speed");
    table.comment("|d<n>/dt| = 2 |J| e^{-1/(4w^2)} |sin p| at J = 1, Gamma = 0");
    for &w in &ws {
        let mut row = vec![w];
        for &p in &P_SET {
            row.push(analytic::com_velocity_traveling(0.0, 1.0, w, p, 0.0).abs());
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Propagated site populations of width-10 packets at t = 0, 5, 10, one
/// column per (modulation, time) pair.
fn population_panel(
    axis: &str,
    qs: &[f64],
    j: f64,
    gamma: f64,
    scheme: Scheme,
) -> Result<Table> {
    let times = [0.0, 5.0, 10.0];
    let model = Lattice::new(j)?;
    let mut columns = vec!["n".to_owned()];
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    let mut sites: Vec<f64> = Vec::new();
    for &q in qs {
        let state = match axis {
            "k" => State::standing(PANEL_WIDTH, q)?,
            _ => State::traveling(PANEL_WIDTH, q)?,
        };
        let config = Config::new(scheme, &state, &model, gamma, 10.0)?.with_dt(0.02);
        let snap = population_snapshot(&state, &model, gamma, &times, &config)?;
        for (i, &t) in snap.times.iter().enumerate() {
            columns.push(format!("pop_{axis}{q:.4}_t{t:.0}"));
            profiles.push(snap.populations[i].clone());
        }
        // Equal widths and horizons auto-size to one and the same chain.
        assert!(sites.is_empty() || sites == snap.sites, "panel states share a chain");
        sites = snap.sites;
    }
    let mut table = Table::new(columns);
    table.comment(format!(
        "site populations of width-{PANEL_WIDTH:.0} packets at t = 0, 5, 10, J = {j:.0}, Gamma = {gamma:.0}"
    ));
    for (i, &n) in sites.iter().enumerate() {
        let mut row = vec![n];
        row.extend(profiles.iter().map(|profile| profile[i]));
        table.push_row(row);
    }
    Ok(table)
}

/// Gaussian diffusivity transients with and without dephasing, for a sharp
/// and a wide packet.
fn fig3(points: Option<usize>) -> Result<Table> {
    let ts = time_grid(points);
    let ws = [1.0, 10.0];
    let gammas = [0.0, 0.1, 0.5, 1.0];
    let mut columns = vec!["t".to_owned()];
    for &w in &ws {
        for &g in &gammas {
            columns.push(format!("d_w{w:.0}_g{g:.1}"));
        }
    }
    let mut table = Table::new(columns);
    table.comment("Gaussian packet diffusivity D_G(t) = 2 J^2 (phi - e^{-1/w^2} t e^{-Gamma t}), J = 1");
    table.comment("the w = 10 dephased curves cross their Gamma = 0 transient from above");
    for &t in &ts {
        let mut row = vec![t];
        for &w in &ws {
            for &g in &gammas {
                row.push(analytic::d_gaussian(t, 1.0, w, g));
            }
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Modulated-packet diffusivity transients, dephased (Gamma = 1) next to
/// the isolated curves (columns prefixed d0).
fn fig4_diffusivity(axis: &str, qs: &[f64], points: Option<usize>) -> Result<Table> {
    let ts = time_grid(points);
    let mut columns = vec!["t".to_owned()];
    columns.extend(qs.iter().map(|&q| q_col("d", axis, q)));
    columns.extend(qs.iter().map(|&q| q_col("d0", axis, q)));
    let mut table = Table::new(columns);
    table.comment(match axis {
        "k" => "standing packet diffusivity D_S(t), w = 10, J = 1; d at Gamma = 1, d0 at Gamma = 0",
        _ => "traveling packet diffusivity D_T(t), w = 10, J = 1; d at Gamma = 1, d0 at Gamma = 0",
    });
    for &t in &ts {
        let mut row = vec![t];
        for &gamma in &[1.0, 0.0] {
            for &q in qs {
                row.push(match axis {
                    "k" => analytic::d_standing(t, 1.0, PANEL_WIDTH, q, gamma, true),
                    _ => analytic::d_traveling(t, 1.0, PANEL_WIDTH, q, gamma),
                });
            }
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Modulated-packet relative diffusivity under dephasing.
fn fig4_relative(axis: &str, qs: &[f64], points: Option<usize>) -> Result<Table> {
    let ts = time_grid(points);
    let mut columns = vec!["t".to_owned()];
    columns.extend(qs.iter().map(|&q| q_col("dd", axis, q)));
    let kind = match axis {
        "k" => PacketKind::Standing,
        _ => PacketKind::Traveling,
    };
    let mut table = Table::new(columns);
    table.comment(match axis {
        "k" => "standing packet relative diffusivity D_S - D_delta, w = 10, J = 1, Gamma = 1",
        _ => "traveling packet relative diffusivity D_T - D_delta, w = 10, J = 1, Gamma = 1",
    });
    for &t in &ts {
        let mut row = vec![t];
        for &q in qs {
            row.push(analytic::relative_diffusivity(kind, t, 1.0, PANEL_WIDTH, q, 1.0));
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Squared diffusion length against the dephasing rate, one column per
/// width including the critical one.
fn fig5a(points: Option<usize>) -> Result<Table> {
    let gs = gamma_grid(points);
    let lifetime = Lifetime::new(PANEL_TAU)?;
    let wc = analytic::critical_width::<f64>(PacketKind::Gaussian, 0.0)?
        .expect("the Gaussian critical width exists");
    let ws = [1.0, wc, 3.0, 10.0];
    let mut columns = vec!["gamma".to_owned()];
    columns.extend(ws.iter().map(|&w| format!("l2_w{w:.4}")));
    let mut table = Table::new(columns);
    table.comment("Gaussian squared diffusion length L^2(Gamma), J = 1, tau = 5");
    table.comment("columns above the critical width w_c = 1.2011 rise to a maximum before decaying");
    for &g in &gs {
        let mut row = vec![g];
        for &w in &ws {
            row.push(l2_closed_gaussian(1.0, w, g, &lifetime));
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Width-induced diffusion-length deficit against the dephasing rate.
fn fig5b(points: Option<usize>) -> Result<Table> {
    let gs = gamma_grid(points);
    let lifetime = Lifetime::new(PANEL_TAU)?;
    let ws = [1.0, 3.0, 10.0];
    let mut columns = vec!["gamma".to_owned()];
    columns.extend(ws.iter().map(|&w| format!("dl2_w{w:.4}")));
    let mut table = Table::new(columns);
    table.comment("width-induced deficit L^2 - L_delta^2 = -4 J^2 e^{-1/w^2} tau^2/(Gamma tau + 1)^2, J = 1, tau = 5");
    for &g in &gs {
        let mut row = vec![g];
        for &w in &ws {
            row.push(delta_l2(1.0, w, g, &lifetime));
        }
        table.push_row(row);
    }
    Ok(table)
}

/// Dephasing-induced diffusion-length change against width, one column per
/// lifetime.
fn fig5c(points: Option<usize>) -> Result<Table> {
    let ws = width_grid(points);
    let taus = [1.0, 2.0, 5.0, 10.0];
    let mut columns = vec!["w".to_owned()];
    columns.extend(taus.iter().map(|&tau| format!("dgl2_tau{tau:.0}")));
    let mut table = Table::new(columns);
    table.comment("dephasing-induced change L^2(Gamma) - L^2(0) at Gamma = 1, J = 1");
    table.comment("positive exactly while e^{-1/w^2} > (1 + Gamma tau)/(2 + Gamma tau)");
    for &w in &ws {
        let mut row = vec![w];
        for &tau in &taus {
            let lifetime = Lifetime::new(tau)?;
            row.push(delta_gamma_l2(1.0, w, 1.0, &lifetime));
        }
        table.push_row(row);
    }
    Ok(table)
}
