//! Chain geometry and nearest-neighbor coupling.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform 1D chain with nearest-neighbor coupling `J`.
///
/// Units: ħ = 1 and the lattice constant a = 1, so times are measured in
/// 1/|J|, lengths in sites, and diffusivities in J·a². Site energies are
/// zero. The single-excitation Hamiltonian is
///
/// ```text
/// H = J Σ_n ( |n⟩⟨n+1| + |n+1⟩⟨n| )
/// ```
///
/// with band dispersion E(ν) = 2J cos ν and group velocity v(ν) = −2J sin ν,
/// so no amplitude spreads faster than 2|J| sites per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeModel<T> {
    coupling: T,
}

impl<T: Real> LatticeModel<T> {
    /// A chain with coupling `j`. The sign of `j` matters for directed
    /// motion; `j = 0` or a non-finite value is rejected.
    pub fn new(j: T) -> Result<Self> {
        if !j.is_finite() || j == T::zero() {
            return Err(Error::InvalidParameter(format!(
                "coupling J must be finite and nonzero, got {j}"
            )));
        }
        Ok(Self { coupling: j })
    }

    /// Nearest-neighbor coupling J.
    pub fn coupling(&self) -> T {
        self.coupling
    }

    /// Maximum group speed 2|J| (sites per unit time).
    pub fn light_cone_speed(&self) -> T {
        T::lit(2.0) * self.coupling.abs()
    }

    /// Lattice constant; fixed to one site.
    pub fn lattice_constant(&self) -> T {
        T::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_and_non_finite_coupling() {
        assert!(LatticeModel::<f64>::new(0.0).is_err());
        assert!(LatticeModel::<f64>::new(f64::NAN).is_err());
        assert!(LatticeModel::<f64>::new(f64::INFINITY).is_err());
    }

    #[test]
    fn light_cone_speed_uses_magnitude() {
        let m = LatticeModel::new(-1.5).unwrap();
        assert_eq!(m.light_cone_speed(), 3.0);
        assert_eq!(m.coupling(), -1.5);
    }
}
