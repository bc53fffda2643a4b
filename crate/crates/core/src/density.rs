//! Density matrices on the chain and the coherence sums that drive
//! transport.
//!
//! The observables of interest are diagonal sums over ρ:
//!
//! ```text
//! ⟨ρ⟩_l = Σ_n ρ_{n,n+l}          (coherence moment)
//! ⟨n⟩_l = Σ_n n·ρ_{n,n+l}        (site-weighted coherence moment)
//! ```
//!
//! which obey exact flux identities: d⟨n⟩/dt = 2J·Im⟨ρ⟩₁ and
//! d⟨n²⟩/dt = 4J·Im⟨n⟩₁ + 2J·Im⟨ρ⟩₁. Everything the transport analysis
//! needs is in the first few `l`.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::{check_chain, InitialState};

/// Default number of off-diagonals tracked by observable recorders.
pub const DEFAULT_L_MAX: usize = 4;

/// Dense single-excitation density matrix with the center site at index
/// (N−1)/2, i.e. lattice site n = row − (N−1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    data: Array2<Complex<T>>,
    half: usize,
}

/// Mean, second moment, and variance of the site populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationMoments<T> {
    pub mean: T,
    pub second_moment: T,
    pub variance: T,
}

impl<T: Real> DensityMatrix<T> {
    /// Pure-state matrix ρ = |ψ⟩⟨ψ| (ρ_{mn} = ψ_m ψ_n*).
    pub fn from_pure(psi: &[Complex<T>]) -> Result<Self> {
        let half = check_chain(psi.len())?;
        let n = psi.len();
        let mut data = Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
        for (m, &am) in psi.iter().enumerate() {
            for (nn, &an) in psi.iter().enumerate() {
                data[(m, nn)] = am * an.conj();
            }
        }
        Ok(Self { data, half })
    }

    /// Wraps an existing matrix; must be square with odd dimension.
    pub fn from_matrix(data: Array2<Complex<T>>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidParameter(format!(
                "density matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let half = check_chain(data.nrows())?;
        Ok(Self { data, half })
    }

    /// Number of chain sites.
    pub fn n_sites(&self) -> usize {
        self.data.nrows()
    }

    /// Lattice site label of matrix row `row`.
    pub fn site(&self, row: usize) -> T {
        T::from_isize(row as isize - self.half as isize).unwrap()
    }

    /// Matrix contents.
    pub fn matrix(&self) -> &Array2<Complex<T>> {
        &self.data
    }

    /// Site populations ρ_nn, ordered from the most negative site.
    pub fn populations(&self) -> Vec<T> {
        (0..self.n_sites()).map(|i| self.data[(i, i)].re).collect()
    }

    /// ⟨ρ⟩_l = Σ_n ρ_{n,n+l} for l ≥ 0. (The l < 0 sums are the conjugates.)
    pub fn coherence_moment(&self, l: usize) -> Complex<T> {
        let n = self.n_sites();
        let mut acc = Complex::new(T::zero(), T::zero());
        for row in 0..n.saturating_sub(l) {
            acc += self.data[(row, row + l)];
        }
        acc
    }

    /// ⟨n⟩_l = Σ_n n·ρ_{n,n+l} for l ≥ 0.
    pub fn weighted_coherence_moment(&self, l: usize) -> Complex<T> {
        let n = self.n_sites();
        let mut acc = Complex::new(T::zero(), T::zero());
        for row in 0..n.saturating_sub(l) {
            let site = self.site(row);
            acc += self.data[(row, row + l)].scale(site);
        }
        acc
    }

    /// Population mean, second moment, and variance.
    pub fn population_moments(&self) -> PopulationMoments<T> {
        let mut mean = T::zero();
        let mut second = T::zero();
        for row in 0..self.n_sites() {
            let p = self.data[(row, row)].re;
            let site = self.site(row);
            mean += site * p;
            second += site * site * p;
        }
        PopulationMoments {
            mean,
            second_moment: second,
            variance: second - mean * mean,
        }
    }

    /// Checks Hermiticity and unit trace; tolerances are the `f64` values
    /// 1e-12 and 1e-10 widened for coarser scalars.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        let h_tol = T::tol(1e-12);
        for m in 0..n {
            for c in m..n {
                let d = self.data[(m, c)] - self.data[(c, m)].conj();
                if d.re.abs() > h_tol || d.im.abs() > h_tol {
                    return Err(Error::InvalidParameter(format!(
                        "density matrix not Hermitian at ({m},{c})"
                    )));
                }
            }
        }
        let trace = (0..n)
            .map(|i| self.data[(i, i)].re)
            .fold(T::zero(), |a, b| a + b);
        if (trace - T::one()).abs() > T::tol(1e-10) {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {trace} differs from one"
            )));
        }
        Ok(())
    }
}

/// Closed-form initial coherence moments ⟨ρ(0)⟩_l and ⟨n(0)⟩_l, l = 0…l_max.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMoments<T> {
    /// ⟨ρ(0)⟩_l, index l.
    pub rho: Vec<Complex<T>>,
    /// ⟨n(0)⟩_l, index l.
    pub weighted: Vec<Complex<T>>,
}

/// Continuum closed forms for the initial moments of every packet family.
///
/// With X = exp(−k²w²):
///
/// ```text
/// delta:      ⟨ρ⟩_l = δ_{l0}
/// gaussian:   ⟨ρ⟩_l = exp(−l²/4w²)
/// standing:   ⟨ρ⟩_l = exp(−l²/4w²)·(cos kl + X)/(1 + X)
/// traveling:  ⟨ρ⟩_l = exp(−l²/4w²)·exp(−ipl)
/// ```
///
/// and in all four families ⟨n(0)⟩_l = −(l/2)·⟨ρ(0)⟩_l, because each ⟨ρ⟩_l
/// integrand is a Gaussian centered at n = −l/2. The standing result at
/// l = 2 carries the exact interference factor (e^{k²w²}·cos 2k + 1)/
/// (e^{k²w²} + 1) written here in its overflow-safe form.
pub fn initial_moment_table<T: Real>(
    state: &InitialState<T>,
    l_max: usize,
) -> CoherenceMoments<T> {
    let mut rho = Vec::with_capacity(l_max + 1);
    let mut weighted = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        let lf = T::from_usize(l).unwrap();
        let r = match *state {
            InitialState::Delta => Complex::new(if l == 0 { T::one() } else { T::zero() }, T::zero()),
            InitialState::Gaussian { width } => Complex::new(gauss_factor(width, lf), T::zero()),
            InitialState::StandingGaussian { width, wavenumber } => {
                let x = (-wavenumber * wavenumber * width * width).exp();
                let modulation = ((wavenumber * lf).cos() + x) / (T::one() + x);
                Complex::new(gauss_factor(width, lf) * modulation, T::zero())
            }
            InitialState::TravelingGaussian { width, momentum } => {
                Complex::from_polar(gauss_factor(width, lf), -momentum * lf)
            }
        };
        rho.push(r);
        weighted.push(r.scale(-lf * T::lit(0.5)));
    }
    CoherenceMoments { rho, weighted }
}

/// exp(−l²/(4w²)).
fn gauss_factor<T: Real>(w: T, l: T) -> T {
    (-(l * l) / (T::lit(4.0) * w * w)).exp()
}
