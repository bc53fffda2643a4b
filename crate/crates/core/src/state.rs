//! Initial wave packets: a single occupied site, and real, standing, or
//! traveling Gaussians.
//!
//! Sites are labeled n = −(N−1)/2 … (N−1)/2 with the packet centered on
//! n = 0, which is why every chain length must be odd. Amplitude formulas
//! use the continuum normalization and are renormalized on the finite chain,
//! so ‖ψ‖ = 1 holds exactly while the quoted closed forms for the moments
//! stay accurate to the (tiny) discretization corrections.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tail mass above which a chain is rejected as too short for the packet.
pub const TAIL_MASS_ERROR: f64 = 1e-9;
/// Tail mass above which construction succeeds but logs a warning.
pub const TAIL_MASS_WARN: f64 = 1e-12;

/// Initial condition for the excitation.
///
/// Widths are in sites; `wavenumber`/`momentum` live on the reduced interval
/// [−π/2, π/2] and are wrapped into it on construction (the populations and
/// two-site coherence magnitudes are π-periodic in both).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState<T> {
    /// Single occupied site at n = 0.
    Delta,
    /// Real Gaussian, ψ_n ∝ exp(−n²/2w²).
    Gaussian { width: T },
    /// Cosine-modulated Gaussian, ψ_n ∝ cos(kn)·exp(−n²/2w²): two
    /// counter-propagating components with zero net velocity.
    StandingGaussian { width: T, wavenumber: T },
    /// Phase-modulated Gaussian, ψ_n ∝ exp(ipn − n²/2w²): moves with group
    /// velocity −2J sin p.
    TravelingGaussian { width: T, momentum: T },
}

impl<T: Real> InitialState<T> {
    /// Single occupied site.
    pub fn delta() -> Self {
        Self::Delta
    }

    /// Real Gaussian of width `w` (sites); `w > 0` required.
    pub fn gaussian(w: T) -> Result<Self> {
        check_width(w)?;
        Ok(Self::Gaussian { width: w })
    }

    /// Standing Gaussian of width `w` and wavenumber `k`.
    pub fn standing(w: T, k: T) -> Result<Self> {
        check_width(w)?;
        Ok(Self::StandingGaussian {
            width: w,
            wavenumber: wrap_reduced(k, "wavenumber k")?,
        })
    }

    /// Traveling Gaussian of width `w` and momentum `p`.
    pub fn traveling(w: T, p: T) -> Result<Self> {
        check_width(w)?;
        Ok(Self::TravelingGaussian {
            width: w,
            momentum: wrap_reduced(p, "momentum p")?,
        })
    }

    /// Packet width, if the state has one.
    pub fn width(&self) -> Option<T> {
        match *self {
            Self::Delta => None,
            Self::Gaussian { width }
            | Self::StandingGaussian { width, .. }
            | Self::TravelingGaussian { width, .. } => Some(width),
        }
    }

    /// Unit-norm amplitudes on an odd chain of `n_sites` sites.
    ///
    /// Fails with [`Error::TailTruncation`] when the chain would cut off
    /// more than [`TAIL_MASS_ERROR`] of the packet (bound: erfc(n_max/w) ≤
    /// exp(−x²)/(x√π)).
    pub fn amplitudes(&self, n_sites: usize) -> Result<Vec<Complex<T>>> {
        let half = check_chain(n_sites)?;
        self.check_tail(half)?;
        let mut psi = self.raw_amplitudes(half);
        let norm = psi
            .iter()
            .map(|c| c.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        let inv = T::one() / norm;
        for c in &mut psi {
            *c = Complex::new(c.re * inv, c.im * inv);
        }
        Ok(psi)
    }

    /// Continuum-normalized amplitudes before the exact renormalization.
    /// On a chain long enough for the tail bound, ‖ψ‖ deviates from one by
    /// less than 1e-10.
    fn raw_amplitudes(&self, half: usize) -> Vec<Complex<T>> {
        let n_sites = 2 * half + 1;
        let mut psi = vec![Complex::new(T::zero(), T::zero()); n_sites];
        match *self {
            Self::Delta => {
                psi[half] = Complex::new(T::one(), T::zero());
            }
            // The plain Gaussian goes through the standing formula with
            // k = 0 so the two variants produce bitwise-identical vectors.
            Self::Gaussian { width } => fill_standing(&mut psi, width, T::zero()),
            Self::StandingGaussian { width, wavenumber } => {
                fill_standing(&mut psi, width, wavenumber)
            }
            Self::TravelingGaussian { width, momentum } => {
                let pref = (width * T::PI().sqrt()).sqrt().recip();
                let inv2w2 = (T::lit(2.0) * width * width).recip();
                for (i, slot) in psi.iter_mut().enumerate() {
                    let n = T::from_isize(i as isize - half as isize).unwrap();
                    let env = pref * (-n * n * inv2w2).exp();
                    *slot = Complex::from_polar(env, momentum * n);
                }
            }
        }
        psi
    }

    /// Upper bound on the packet weight beyond the chain, per tail.
    fn tail_bound(&self, half: usize) -> f64 {
        let Some(w) = self.width() else { return 0.0 };
        // |ψ|² ∝ exp(−n²/w²); mass beyond ±n_max is erfc(n_max/w), bounded
        // by exp(−x²)/(x√π) for x > 0. The cosine modulation only reduces it.
        let x = (T::from_usize(half).unwrap() / w).to_f64().unwrap_or(0.0);
        if x <= 0.0 {
            return 1.0;
        }
        ((-x * x).exp() / (x * std::f64::consts::PI.sqrt())).min(1.0)
    }

    fn check_tail(&self, half: usize) -> Result<()> {
        let tail = self.tail_bound(half);
        if tail > TAIL_MASS_ERROR {
            return Err(Error::TailTruncation {
                tail,
                limit: TAIL_MASS_ERROR,
            });
        }
        if tail > TAIL_MASS_WARN {
            log::warn!(
                "initial-state tail mass bound {tail:.3e} exceeds {TAIL_MASS_WARN:.1e}; \
                 moments may lose accuracy"
            );
        }
        Ok(())
    }

    /// Shortest odd chain that keeps the packet tail below the warning
    /// threshold with `margin` spare sites per side.
    pub fn minimal_sites(&self, margin: usize) -> usize {
        let half = match self.width() {
            None => margin.max(1),
            // x = n_max/w ≥ 5.5 puts the tail bound near 4e-15.
            Some(w) => (w * T::lit(5.5)).ceil().to_usize().unwrap_or(0) + margin,
        };
        2 * half + 1
    }
}

fn fill_standing<T: Real>(psi: &mut [Complex<T>], w: T, k: T) {
    let half = psi.len() / 2;
    let x = (-k * k * w * w).exp();
    let pref = (T::lit(2.0) / (w * T::PI().sqrt() * (T::one() + x))).sqrt();
    let inv2w2 = (T::lit(2.0) * w * w).recip();
    for (i, slot) in psi.iter_mut().enumerate() {
        let n = T::from_isize(i as isize - half as isize).unwrap();
        let re = pref * (k * n).cos() * (-n * n * inv2w2).exp();
        *slot = Complex::new(re, T::zero());
    }
}

fn check_width<T: Real>(w: T) -> Result<()> {
    if !w.is_finite() || w <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "packet width must be finite and positive, got {w}"
        )));
    }
    Ok(())
}

/// Odd `n_sites ≥ 3` required; returns the half-width (N−1)/2.
pub(crate) fn check_chain(n_sites: usize) -> Result<usize> {
    if n_sites < 3 || n_sites % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "n_sites must be odd and at least 3, got {n_sites}"
        )));
    }
    Ok(n_sites / 2)
}

/// Wraps a modulation parameter into [−π/2, π/2] modulo π. Populations and
/// the closed-form diffusivities are π-periodic in k and p, so nothing
/// observable is lost; a warning records that the input was reduced.
pub(crate) fn wrap_reduced<T: Real>(q: T, name: &str) -> Result<T> {
    if !q.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {q}"
        )));
    }
    let half_pi = T::FRAC_PI_2();
    if q.abs() <= half_pi {
        return Ok(q);
    }
    let wrapped = q - T::PI() * (q / T::PI()).round();
    log::warn!("{name} = {q} outside [-pi/2, pi/2]; using {wrapped} (period pi)");
    Ok(wrapped)
}
