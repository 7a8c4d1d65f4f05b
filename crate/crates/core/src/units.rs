//! Internal (AKMA-style) unit system: Å, amu, kcal/mol.
//!
//! The derived time unit is sqrt(amu·Å²·mol/kcal) ≈ 48.8882 fs. All file and
//! command-line times are picoseconds.

/// Boltzmann constant in kcal/(mol·K).
pub const BOLTZMANN: f64 = 1.9872e-3;

/// One internal time unit expressed in picoseconds.
pub const PS_PER_TIME_UNIT: f64 = 4.88882e-2;

/// Standard atomic weight of carbon (amu).
pub const CARBON_MASS: f64 = 12.011;

pub fn ps_to_internal(ps: f64) -> f64 {
    ps / PS_PER_TIME_UNIT
}

pub fn internal_to_ps(t: f64) -> f64 {
    t * PS_PER_TIME_UNIT
}

/// Angular frequency in inverse internal time units to ps⁻¹.
pub fn frequency_to_per_ps(omega: f64) -> f64 {
    omega / PS_PER_TIME_UNIT
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_unit_matches_si_derivation() {
        // sqrt(amu * 1e-20 m^2 / (kcal/mol in J))
        let amu: f64 = 1.660_539_066_60e-27;
        let kcal_per_mol = 4184.0 / 6.022_140_76e23;
        let seconds = (amu * 1e-20 / kcal_per_mol).sqrt();
        let ps = seconds * 1e12;
        assert!((ps - PS_PER_TIME_UNIT).abs() / PS_PER_TIME_UNIT < 1e-5, "{ps}");
    }

    #[test]
    fn round_trip() {
        let t = 400.0;
        assert!((internal_to_ps(ps_to_internal(t)) - t).abs() < 1e-12);
    }
}
