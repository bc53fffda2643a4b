//! Density-matrix propagation on the chain: an exact Bloch-space evolver
//! for the closed system and a dense fourth-order Runge-Kutta integrator
//! for pure dephasing.
//!
//! The dephasing master equation acts on ρ as
//!
//! ```text
//! dρ/dt = −i[H, ρ] − Γ·ρ_offdiag
//! ```
//!
//! with H the nearest-neighbor hopping J. Hermiticity is preserved by
//! construction: the integrator stores only the upper triangle of ρ and
//! mirrors it through the diagonal, so populations stay real and the
//! conjugate-symmetry defect is identically zero. Observables are
//! recorded on the step grid: population moments, the coherence sums
//! ⟨ρ⟩_l, the flux-identity diffusivity
//! D = 2J·Im⟨n⟩₁ + J·Im⟨ρ⟩₁ − 2J·⟨n⟩·Im⟨ρ⟩₁, and a finite-difference
//! diffusivity from the variance for cross-checking.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, DEFAULT_L_MAX};
use crate::error::{Error, Result};
use crate::lattice::LatticeModel;
use crate::scalar::Real;
use crate::state::InitialState;

/// Trace deviation from one that aborts a run.
pub const TRACE_DRIFT_ABORT: f64 = 1e-8;

/// Default tolerance on probability reaching the chain edges.
pub const BOUNDARY_MASS_TOL: f64 = 1e-8;

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Dense RK4 on the dephasing master equation.
    Rk4Dense,
    /// Exact Bloch-phase evolution of the closed system (Γ = 0 only).
    BlochClosed,
}

/// Grid and monitoring parameters for one propagation run.
#[derive(Debug, Clone)]
pub struct PropagationConfig<T> {
    pub scheme: Scheme,
    pub n_sites: usize,
    pub dt: T,
    pub t_end: T,
    pub record_stride: usize,
    pub boundary_margin: usize,
    pub boundary_mass_tol: T,
    pub l_max: usize,
}

impl<T: Real> PropagationConfig<T> {
    /// Configuration with an auto-sized chain and the default step
    /// 1e-3/max(|J|, Γ).
    pub fn new(
        scheme: Scheme,
        state: &InitialState<T>,
        model: &LatticeModel<T>,
        gamma: T,
        t_end: T,
    ) -> Result<Self> {
        let margin = 8;
        let config = Self {
            scheme,
            n_sites: Self::auto_sites(state, model.coupling(), t_end, margin)?,
            dt: T::lit(1e-3) / model.coupling().abs().max(gamma),
            t_end,
            record_stride: 1,
            boundary_margin: margin,
            boundary_mass_tol: T::lit(BOUNDARY_MASS_TOL),
            l_max: DEFAULT_L_MAX,
        };
        config.validate(model, gamma, state)?;
        Ok(config)
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_n_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_boundary_margin(mut self, margin: usize) -> Self {
        self.boundary_margin = margin;
        self
    }

    pub fn with_boundary_mass_tol(mut self, tol: T) -> Self {
        self.boundary_mass_tol = tol;
        self
    }

    pub fn with_l_max(mut self, l_max: usize) -> Self {
        self.l_max = l_max;
        self
    }

    /// Smallest admissible chain: light cone plus packet support plus
    /// margin, 2·⌈2|J|·t_end⌉ + ⌈6w⌉ + margin.
    pub fn minimum_sites(
        state: &InitialState<T>,
        coupling: T,
        t_end: T,
        margin: usize,
    ) -> Result<usize> {
        let cone = ceil_usize(T::lit(2.0) * coupling.abs() * t_end)?;
        let w = state.width().unwrap_or_else(T::zero);
        let support = ceil_usize(T::lit(6.0) * w)?;
        Ok(2 * cone + support + margin)
    }

    /// Auto-sized odd chain: each half holds the light cone, 5.5 packet
    /// widths of tail (at least 16 sites), and the margin. The tail floor
    /// keeps the algebraically suppressed front of sharp packets below the
    /// boundary monitor at its default 1e-8 tolerance.
    pub fn auto_sites(
        state: &InitialState<T>,
        coupling: T,
        t_end: T,
        margin: usize,
    ) -> Result<usize> {
        let cone = ceil_usize(T::lit(2.0) * coupling.abs() * t_end)?;
        let w = state.width().unwrap_or_else(T::zero);
        let tails = ceil_usize(T::lit(5.5) * w)?.max(16);
        Ok(2 * (cone + tails + margin) + 1)
    }

    /// Rejects grids that violate the step bound, the light-cone bound,
    /// or the chain shape.
    pub fn validate(
        &self,
        model: &LatticeModel<T>,
        gamma: T,
        state: &InitialState<T>,
    ) -> Result<()> {
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dephasing rate must be finite and >= 0, got {gamma}"
            )));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must be finite and > 0, got {}",
                self.t_end
            )));
        }
        let rate = model.coupling().abs().max(gamma);
        let dt_bound = T::lit(0.05) / rate;
        if !(self.dt > T::zero()) || self.dt > dt_bound * T::lit(1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "dt = {} outside (0, 0.05/max(|J|, Gamma) = {dt_bound}]",
                self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        if self.l_max == 0 || self.l_max + 1 >= self.n_sites {
            return Err(Error::Config(format!(
                "l_max = {} must be >= 1 and < n_sites - 1 = {}",
                self.l_max,
                self.n_sites.saturating_sub(1)
            )));
        }
        if self.n_sites % 2 == 0 || self.n_sites < 3 {
            return Err(Error::Config(format!(
                "chain length must be odd and >= 3, got {}",
                self.n_sites
            )));
        }
        if self.boundary_margin == 0 || 2 * self.boundary_margin >= self.n_sites {
            return Err(Error::Config(format!(
                "boundary margin {} must be >= 1 and below half the chain",
                self.boundary_margin
            )));
        }
        if !(self.boundary_mass_tol > T::zero()) {
            return Err(Error::Config("boundary mass tolerance must be > 0".into()));
        }
        let minimum =
            Self::minimum_sites(state, model.coupling(), self.t_end, self.boundary_margin)?;
        if self.n_sites < minimum {
            return Err(Error::Config(format!(
                "n_sites = {} below the light-cone bound {minimum}",
                self.n_sites
            )));
        }
        if self.scheme == Scheme::BlochClosed && gamma != T::zero() {
            return Err(Error::Config(
                "the closed-system propagator cannot apply dephasing; use the RK4 scheme".into(),
            ));
        }
        Ok(())
    }

    fn n_steps(&self) -> Result<usize> {
        let raw = (self.t_end / self.dt - T::lit(1e-9)).ceil();
        let steps = raw
            .to_usize()
            .ok_or_else(|| Error::Config(format!("step count {raw} is not representable")))?;
        if steps > 50_000_000 {
            return Err(Error::Config(format!("{steps} steps exceed the run budget")));
        }
        Ok(steps.max(1))
    }
}

/// Observables on the record grid.
#[derive(Debug, Clone)]
pub struct ObservableSeries<T> {
    pub times: Vec<T>,
    pub mean_n: Vec<T>,
    pub second_moment: Vec<T>,
    pub variance: Vec<T>,
    /// Flux-identity diffusivity 2J·Im⟨n⟩₁ + J·Im⟨ρ⟩₁ − 2J·⟨n⟩·Im⟨ρ⟩₁.
    pub diffusivity_flux: Vec<T>,
    /// Centered finite difference of the variance, D = ½·dVar/dt.
    pub diffusivity_fd: Vec<T>,
    /// Coherence sums ⟨ρ⟩_l indexed as rho_l[l-1], l = 1..=l_max.
    pub rho_l: Vec<Vec<Complex<T>>>,
    /// Site-weighted first coherence ⟨n⟩₁.
    pub weighted_1: Vec<Complex<T>>,
    /// Probability within the margin sites at the chain edges.
    pub boundary_mass: Vec<T>,
    /// Largest |tr ρ − 1| seen during the run.
    pub max_trace_drift: T,
    /// Largest conjugate-symmetry defect; zero for the mirrored storage.
    pub max_hermiticity_drift: T,
}

impl<T: Real> ObservableSeries<T> {
    fn with_capacity(records: usize, l_max: usize) -> Self {
        Self {
            times: Vec::with_capacity(records),
            mean_n: Vec::with_capacity(records),
            second_moment: Vec::with_capacity(records),
            variance: Vec::with_capacity(records),
            diffusivity_flux: Vec::with_capacity(records),
            diffusivity_fd: Vec::new(),
            rho_l: vec![Vec::with_capacity(records); l_max],
            weighted_1: Vec::with_capacity(records),
            boundary_mass: Vec::with_capacity(records),
            max_trace_drift: T::zero(),
            max_hermiticity_drift: T::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the record closest to `t`.
    pub fn nearest_index(&self, t: T) -> usize {
        let mut best = 0;
        let mut gap = T::infinity();
        for (i, &ti) in self.times.iter().enumerate() {
            let d = (ti - t).abs();
            if d < gap {
                gap = d;
                best = i;
            }
        }
        best
    }

    fn push(&mut self, t: T, sample: Sample<T>, coupling: T) {
        let variance = sample.second - sample.mean * sample.mean;
        let r1 = sample.rl[0];
        let two_j = coupling + coupling;
        let flux = two_j * sample.n1.im + coupling * r1.im - two_j * sample.mean * r1.im;
        self.times.push(t);
        self.mean_n.push(sample.mean);
        self.second_moment.push(sample.second);
        self.variance.push(variance);
        self.diffusivity_flux.push(flux);
        for (dst, &value) in self.rho_l.iter_mut().zip(sample.rl.iter()) {
            dst.push(value);
        }
        self.weighted_1.push(sample.n1);
        self.boundary_mass.push(sample.edge);
    }

    /// Fills the finite-difference diffusivity; centered in the interior,
    /// one-sided at the ends.
    fn finalize(&mut self) {
        let k = self.times.len();
        let half = T::lit(0.5);
        self.diffusivity_fd = vec![T::zero(); k];
        if k < 2 {
            return;
        }
        for i in 1..k - 1 {
            self.diffusivity_fd[i] = half * (self.variance[i + 1] - self.variance[i - 1])
                / (self.times[i + 1] - self.times[i - 1]);
        }
        self.diffusivity_fd[0] =
            half * (self.variance[1] - self.variance[0]) / (self.times[1] - self.times[0]);
        self.diffusivity_fd[k - 1] = half * (self.variance[k - 1] - self.variance[k - 2])
            / (self.times[k - 1] - self.times[k - 2]);
    }
}

/// Flux-identity diffusivity recomputed from the recorded coherences.
pub fn diffusivity_from_coherences<T: Real>(series: &ObservableSeries<T>, coupling: T) -> Vec<T> {
    let two_j = coupling + coupling;
    series
        .weighted_1
        .iter()
        .zip(series.rho_l[0].iter())
        .zip(series.mean_n.iter())
        .map(|((n1, r1), &mean)| two_j * n1.im + coupling * r1.im - two_j * mean * r1.im)
        .collect()
}

/// Population profiles ρ_nn at selected times.
#[derive(Debug, Clone)]
pub struct PopulationSnapshot<T> {
    pub sites: Vec<T>,
    pub times: Vec<T>,
    /// populations[i] is the profile at times[i].
    pub populations: Vec<Vec<T>>,
}

struct Sample<T> {
    mean: T,
    second: T,
    rl: Vec<Complex<T>>,
    n1: Complex<T>,
    edge: T,
    trace: T,
}

/// Evolves the state and records observables on the step grid.
pub fn evolve<T: Real>(
    state: &InitialState<T>,
    model: &LatticeModel<T>,
    gamma: T,
    config: &PropagationConfig<T>,
) -> Result<ObservableSeries<T>> {
    Ok(run(state, model, gamma, config, &[])?.0)
}

/// Evolves the state and also returns the final density matrix.
pub fn evolve_with_final<T: Real>(
    state: &InitialState<T>,
    model: &LatticeModel<T>,
    gamma: T,
    config: &PropagationConfig<T>,
) -> Result<(ObservableSeries<T>, DensityMatrix<T>)> {
    let (series, finals) = run(state, model, gamma, config, &[config.t_end])?;
    let matrix = finals
        .into_iter()
        .next_back()
        .expect("a final snapshot was requested");
    Ok((series, matrix))
}

/// Population profiles at the requested times, which must lie on the
/// step grid of `config` (the closed scheme evaluates them exactly).
pub fn population_snapshot<T: Real>(
    state: &InitialState<T>,
    model: &LatticeModel<T>,
    gamma: T,
    times: &[T],
    config: &PropagationConfig<T>,
) -> Result<PopulationSnapshot<T>> {
    if times.is_empty() {
        return Err(Error::Config("no snapshot times requested".into()));
    }
    for pair in times.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::Config(
                "snapshot times must be strictly increasing".into(),
            ));
        }
    }
    if times[0] < T::zero() || times[times.len() - 1] > config.t_end * T::lit(1.0 + 1e-9) {
        return Err(Error::Config("snapshot times outside [0, t_end]".into()));
    }
    let (_, snaps) = run(state, model, gamma, config, times)?;
    let half = (config.n_sites - 1) / 2;
    let sites = (0..config.n_sites).map(|m| site_value::<T>(m, half)).collect();
    Ok(PopulationSnapshot {
        sites,
        times: times.to_vec(),
        populations: snaps.iter().map(|rho| rho.populations()).collect(),
    })
}

fn run<T: Real>(
    state: &InitialState<T>,
    model: &LatticeModel<T>,
    gamma: T,
    config: &PropagationConfig<T>,
    snapshot_times: &[T],
) -> Result<(ObservableSeries<T>, Vec<DensityMatrix<T>>)> {
    config.validate(model, gamma, state)?;
    match config.scheme {
        Scheme::Rk4Dense => run_rk4(state, model, gamma, config, snapshot_times),
        Scheme::BlochClosed => run_bloch(state, model, config, snapshot_times),
    }
}

fn site_value<T: Real>(m: usize, half: usize) -> T {
    T::from_usize(m).unwrap() - T::from_usize(half).unwrap()
}

fn ceil_usize<T: Real>(x: T) -> Result<usize> {
    x.ceil()
        .to_usize()
        .ok_or_else(|| Error::Config(format!("grid extent {x} is not representable")))
}

fn snapshot_step_indices<T: Real>(times: &[T], dt: T, n_steps: usize) -> Result<Vec<usize>> {
    let mut indices = Vec::with_capacity(times.len());
    for &t in times {
        let raw = (t / dt).round();
        let idx = raw
            .to_usize()
            .filter(|&i| i <= n_steps)
            .ok_or_else(|| Error::Config(format!("snapshot time {t} beyond the step grid")))?;
        let grid_t = dt * T::from_usize(idx).unwrap();
        if (grid_t - t).abs() > T::lit(1e-9) * T::one().max(t.abs()) {
            return Err(Error::Config(format!(
                "snapshot time {t} does not lie on the step grid (nearest {grid_t})"
            )));
        }
        indices.push(idx);
    }
    Ok(indices)
}

// ---------------------------------------------------------------------------
// Dense RK4 on the mirrored upper triangle.
// ---------------------------------------------------------------------------

/// Upper triangle of a Hermitian matrix in row-major ragged storage:
/// row m holds columns m..n with offset off[m] = m·n − m(m−1)/2.
struct Wedge<T> {
    n: usize,
    half: usize,
    off: Vec<usize>,
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Real> Wedge<T> {
    fn from_amplitudes(psi: &[Complex<T>]) -> Self {
        let n = psi.len();
        let mut off = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for m in 0..n {
            off.push(total);
            total += n - m;
        }
        off.push(total);
        let mut re = vec![T::zero(); total];
        let mut im = vec![T::zero(); total];
        for m in 0..n {
            let base = off[m];
            for c in m..n {
                let v = psi[m] * psi[c].conj();
                re[base + c - m] = v.re;
                im[base + c - m] = v.im;
            }
        }
        Self { n, half: (n - 1) / 2, off, re, im }
    }

    fn trace(&self) -> T {
        (0..self.n).map(|m| self.re[self.off[m]]).sum()
    }

    fn sample(&self, l_max: usize, margin: usize) -> Sample<T> {
        let n = self.n;
        let mut mean = T::zero();
        let mut second = T::zero();
        let mut trace = T::zero();
        for m in 0..n {
            let p = self.re[self.off[m]];
            let s = site_value::<T>(m, self.half);
            trace += p;
            mean += s * p;
            second += s * s * p;
        }
        let mut rl = Vec::with_capacity(l_max);
        for l in 1..=l_max {
            let mut acc = Complex::new(T::zero(), T::zero());
            for m in 0..n - l {
                let idx = self.off[m] + l;
                acc.re += self.re[idx];
                acc.im += self.im[idx];
            }
            rl.push(acc);
        }
        let mut n1 = Complex::new(T::zero(), T::zero());
        for m in 0..n - 1 {
            let idx = self.off[m] + 1;
            let s = site_value::<T>(m, self.half);
            n1.re += s * self.re[idx];
            n1.im += s * self.im[idx];
        }
        let mut edge = T::zero();
        for m in 0..margin {
            edge += self.re[self.off[m]] + self.re[self.off[n - 1 - m]];
        }
        Sample { mean, second, rl, n1, edge, trace }
    }

    fn to_dense(&self) -> Result<DensityMatrix<T>> {
        let n = self.n;
        let mut data = ndarray::Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
        for m in 0..n {
            for c in m..n {
                let idx = self.off[m] + c - m;
                let v = Complex::new(self.re[idx], self.im[idx]);
                data[(m, c)] = v;
                data[(c, m)] = v.conj();
            }
        }
        DensityMatrix::from_matrix(data)
    }
}

/// One RK4 stage fused with the solution update: computes k = L(input)
/// row by row, accumulates next += wk·k (or initializes it from y), and
/// optionally writes the following stage input out = y + c·k.
#[allow(clippy::too_many_arguments)]
fn rk4_stage<T: Real>(
    n: usize,
    off: &[usize],
    j: T,
    gamma: T,
    in_re: &[T],
    in_im: &[T],
    y_re: &[T],
    y_im: &[T],
    nx_re: &mut [T],
    nx_im: &mut [T],
    init_nx: bool,
    wk: T,
    mut out: Option<(&mut [T], &mut [T], T)>,
    krow_re: &mut [T],
    krow_im: &mut [T],
) {
    let two_j = j + j;
    for m in 0..n {
        let row = off[m];
        let len = n - m;
        if len == 1 {
            // Closing corner: only the mirrored sub-diagonal feeds it.
            krow_re[0] = two_j * in_im[off[m - 1] + 1];
            krow_im[0] = T::zero();
        } else {
            // Diagonal: population fed by the adjacent coherences.
            let up_im = if m > 0 { in_im[off[m - 1] + 1] } else { T::zero() };
            krow_re[0] = two_j * (up_im - in_im[row + 1]);
            krow_im[0] = T::zero();
            let last = len - 1;
            if m > 0 {
                let up = off[m - 1] + 1;
                let dn = off[m + 1];
                for i in 1..last {
                    krow_re[i] = j
                        * (in_im[up + i] + in_im[dn + i - 1]
                            - in_im[row + i - 1]
                            - in_im[row + i + 1])
                        - gamma * in_re[row + i];
                    krow_im[i] = -j
                        * (in_re[up + i] + in_re[dn + i - 1]
                            - in_re[row + i - 1]
                            - in_re[row + i + 1])
                        - gamma * in_im[row + i];
                }
                krow_re[last] = j * (in_im[up + last] + in_im[dn + last - 1] - in_im[row + last - 1])
                    - gamma * in_re[row + last];
                krow_im[last] = -j
                    * (in_re[up + last] + in_re[dn + last - 1] - in_re[row + last - 1])
                    - gamma * in_im[row + last];
            } else {
                let dn = off[1];
                for i in 1..last {
                    krow_re[i] = j
                        * (in_im[dn + i - 1] - in_im[row + i - 1] - in_im[row + i + 1])
                        - gamma * in_re[row + i];
                    krow_im[i] = -j
                        * (in_re[dn + i - 1] - in_re[row + i - 1] - in_re[row + i + 1])
                        - gamma * in_im[row + i];
                }
                krow_re[last] = j * (in_im[dn + last - 1] - in_im[row + last - 1])
                    - gamma * in_re[row + last];
                krow_im[last] = -j * (in_re[dn + last - 1] - in_re[row + last - 1])
                    - gamma * in_im[row + last];
            }
        }

        if init_nx {
            for i in 0..len {
                nx_re[row + i] = y_re[row + i] + wk * krow_re[i];
                nx_im[row + i] = y_im[row + i] + wk * krow_im[i];
            }
        } else {
            for i in 0..len {
                nx_re[row + i] += wk * krow_re[i];
                nx_im[row + i] += wk * krow_im[i];
            }
        }
        if let Some((out_re, out_im, c)) = out.as_mut() {
            let c = *c;
            for i in 0..len {
                out_re[row + i] = y_re[row + i] + c * krow_re[i];
                out_im[row + i] = y_im[row + i] + c * krow_im[i];
            }
        }
    }
}

struct Rk4Buffers<T> {
    ta_re: Vec<T>,
    ta_im: Vec<T>,
    tb_re: Vec<T>,
    tb_im: Vec<T>,
    nx_re: Vec<T>,
    nx_im: Vec<T>,
    krow_re: Vec<T>,
    krow_im: Vec<T>,
}

impl<T: Real> Rk4Buffers<T> {
    fn new(entries: usize, n: usize) -> Self {
        Self {
            ta_re: vec![T::zero(); entries],
            ta_im: vec![T::zero(); entries],
            tb_re: vec![T::zero(); entries],
            tb_im: vec![T::zero(); entries],
            nx_re: vec![T::zero(); entries],
            nx_im: vec![T::zero(); entries],
            krow_re: vec![T::zero(); n],
            krow_im: vec![T::zero(); n],
        }
    }
}

fn rk4_step<T: Real>(wedge: &mut Wedge<T>, buf: &mut Rk4Buffers<T>, j: T, gamma: T, dt: T) {
    let n = wedge.n;
    let off = &wedge.off;
    let half_dt = dt * T::lit(0.5);
    let sixth = dt * T::lit(1.0 / 6.0);
    let third = dt * T::lit(1.0 / 3.0);
    rk4_stage(
        n, off, j, gamma,
        &wedge.re, &wedge.im,
        &wedge.re, &wedge.im,
        &mut buf.nx_re, &mut buf.nx_im, true, sixth,
        Some((&mut buf.ta_re, &mut buf.ta_im, half_dt)),
        &mut buf.krow_re, &mut buf.krow_im,
    );
    rk4_stage(
        n, off, j, gamma,
        &buf.ta_re, &buf.ta_im,
        &wedge.re, &wedge.im,
        &mut buf.nx_re, &mut buf.nx_im, false, third,
        Some((&mut buf.tb_re, &mut buf.tb_im, half_dt)),
        &mut buf.krow_re, &mut buf.krow_im,
    );
    rk4_stage(
        n, off, j, gamma,
        &buf.tb_re, &buf.tb_im,
        &wedge.re, &wedge.im,
        &mut buf.nx_re, &mut buf.nx_im, false, third,
        Some((&mut buf.ta_re, &mut buf.ta_im, dt)),
        &mut buf.krow_re, &mut buf.krow_im,
    );
    rk4_stage(
        n, off, j, gamma,
        &buf.ta_re, &buf.ta_im,
        &wedge.re, &wedge.im,
        &mut buf.nx_re, &mut buf.nx_im, false, sixth,
        None,
        &mut buf.krow_re, &mut buf.krow_im,
    );
    std::mem::swap(&mut wedge.re, &mut buf.nx_re);
    std::mem::swap(&mut wedge.im, &mut buf.nx_im);
}

fn run_rk4<T: Real>(
    state: &InitialState<T>,
    model: &LatticeModel<T>,
    gamma: T,
    config: &PropagationConfig<T>,
    snapshot_times: &[T],
) -> Result<(ObservableSeries<T>, Vec<DensityMatrix<T>>)> {
    let j = model.coupling();
    let n = config.n_sites;
    let n_steps = config.n_steps()?;
    let snap_at = snapshot_step_indices(snapshot_times, config.dt, n_steps)?;
    let psi = state.amplitudes(n)?;
    let mut wedge = Wedge::from_amplitudes(&psi);
    let entries = wedge.off[n];
    let mut buf = Rk4Buffers::new(entries, n);
    let mut series =
        ObservableSeries::with_capacity(n_steps / config.record_stride + 2, config.l_max);
    let mut snaps = Vec::with_capacity(snap_at.len());
    let abort = T::lit(TRACE_DRIFT_ABORT);

    let record = |wedge: &Wedge<T>, step: usize, series: &mut ObservableSeries<T>| -> Result<()> {
        let t = config.dt * T::from_usize(step).unwrap();
        let sample = wedge.sample(config.l_max, config.boundary_margin);
        if sample.edge > config.boundary_mass_tol {
            return Err(Error::BoundaryLeak {
                time: t.to_f64().unwrap_or(f64::NAN),
                mass: sample.edge.to_f64().unwrap_or(f64::NAN),
                tol: config.boundary_mass_tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        series.push(t, sample, j);
        Ok(())
    };

    record(&wedge, 0, &mut series)?;
    if snap_at.contains(&0) {
        snaps.push(wedge.to_dense()?);
    }
    for step in 1..=n_steps {
        rk4_step(&mut wedge, &mut buf, j, gamma, config.dt);
        let drift = (wedge.trace() - T::one()).abs();
        if drift > series.max_trace_drift {
            series.max_trace_drift = drift;
        }
        if drift > abort {
            return Err(Error::StepSize {
                time: (config.dt * T::from_usize(step).unwrap()).to_f64().unwrap_or(f64::NAN),
                drift: drift.to_f64().unwrap_or(f64::NAN),
            });
        }
        if step % config.record_stride == 0 || step == n_steps {
            record(&wedge, step, &mut series)?;
        }
        if snap_at.contains(&step) {
            snaps.push(wedge.to_dense()?);
        }
    }
    series.finalize();
    Ok((series, snaps))
}

// ---------------------------------------------------------------------------
// Exact Bloch-phase propagation of the closed system.
// ---------------------------------------------------------------------------

fn run_bloch<T: Real>(
    state: &InitialState<T>,
    model: &LatticeModel<T>,
    config: &PropagationConfig<T>,
    snapshot_times: &[T],
) -> Result<(ObservableSeries<T>, Vec<DensityMatrix<T>>)> {
    let j = model.coupling();
    let n = config.n_sites;
    let half = (n - 1) / 2;
    let n_steps = config.n_steps()?;
    let snap_at = snapshot_step_indices(snapshot_times, config.dt, n_steps)?;
    let psi0 = state.amplitudes(n)?;

    let mut planner = FftPlanner::<T>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum: Vec<Complex<T>> = psi0.clone();
    forward.process(&mut spectrum);
    let two_pi = T::PI() + T::PI();
    let energies: Vec<T> = (0..n)
        .map(|m| (j + j) * (two_pi * T::from_usize(m).unwrap() / T::from_usize(n).unwrap()).cos())
        .collect();

    let mut series =
        ObservableSeries::with_capacity(n_steps / config.record_stride + 2, config.l_max);
    let mut snaps = Vec::with_capacity(snap_at.len());
    let scale = T::one() / T::from_usize(n).unwrap();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    let abort = T::lit(TRACE_DRIFT_ABORT);

    for step in 0..=n_steps {
        let want_record = step % config.record_stride == 0 || step == n_steps;
        let want_snap = snap_at.contains(&step);
        if !want_record && !want_snap {
            continue;
        }
        let t = config.dt * T::from_usize(step).unwrap();
        for ((dst, &src), &e) in buf.iter_mut().zip(spectrum.iter()).zip(energies.iter()) {
            let angle = -e * t;
            dst.re = src.re * angle.cos() - src.im * angle.sin();
            dst.im = src.re * angle.sin() + src.im * angle.cos();
        }
        inverse.process(&mut buf);
        for v in buf.iter_mut() {
            *v = v.scale(scale);
        }
        let sample = sample_from_amplitudes(&buf, half, config.l_max, config.boundary_margin);
        let drift = (sample.trace - T::one()).abs();
        if drift > series.max_trace_drift {
            series.max_trace_drift = drift;
        }
        if drift > abort {
            return Err(Error::StepSize {
                time: t.to_f64().unwrap_or(f64::NAN),
                drift: drift.to_f64().unwrap_or(f64::NAN),
            });
        }
        if want_record {
            if sample.edge > config.boundary_mass_tol {
                return Err(Error::BoundaryLeak {
                    time: t.to_f64().unwrap_or(f64::NAN),
                    mass: sample.edge.to_f64().unwrap_or(f64::NAN),
                    tol: config.boundary_mass_tol.to_f64().unwrap_or(f64::NAN),
                });
            }
            series.push(t, sample, j);
        }
        if want_snap {
            snaps.push(DensityMatrix::from_pure(&buf)?);
        }
    }
    series.finalize();
    Ok((series, snaps))
}

fn sample_from_amplitudes<T: Real>(
    psi: &[Complex<T>],
    half: usize,
    l_max: usize,
    margin: usize,
) -> Sample<T> {
    let n = psi.len();
    let mut mean = T::zero();
    let mut second = T::zero();
    let mut trace = T::zero();
    for (m, v) in psi.iter().enumerate() {
        let p = v.norm_sqr();
        let s = site_value::<T>(m, half);
        trace += p;
        mean += s * p;
        second += s * s * p;
    }
    let mut rl = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let mut acc = Complex::new(T::zero(), T::zero());
        for m in 0..n - l {
            acc += psi[m] * psi[m + l].conj();
        }
        rl.push(acc);
    }
    let mut n1 = Complex::new(T::zero(), T::zero());
    for m in 0..n - 1 {
        let v = psi[m] * psi[m + 1].conj();
        n1 += v.scale(site_value::<T>(m, half));
    }
    let mut edge = T::zero();
    for m in 0..margin {
        edge += psi[m].norm_sqr() + psi[n - 1 - m].norm_sqr();
    }
    Sample { mean, second, rl, n1, edge, trace }
}
