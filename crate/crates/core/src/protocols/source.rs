use std::fmt;

use crate::error::{Error, Result};

/// Measured heralded second-order coherence g2(0).
pub const REFERENCE_G2: f64 = 0.015;
/// Mean photon number per pulse.
pub const REFERENCE_MU: f64 = 3e-4;
/// Gain Q.
pub const REFERENCE_GAIN: f64 = 1e-5;
/// Reported multiphoton rate. The bound mu^2 g2 / (2 Q) from the three values
/// above gives 6.75e-5 instead.
pub const REFERENCE_DELTA: f64 = 4e-5;

/// g2(0) = N_ABC N_C / (N_AC N_BC) from three-detector coincidence counts.
pub fn g2_estimate(n_abc: u64, n_c: u64, n_ac: u64, n_bc: u64) -> Result<f64> {
    if n_ac == 0 || n_bc == 0 {
        return Err(Error::InvalidParameter("g2 needs N_AC > 0 and N_BC > 0".into()));
    }
    Ok((n_abc as f64 * n_c as f64) / (n_ac as f64 * n_bc as f64))
}

/// Delta = P_m / Q with the bound P_m <= mu^2 g2 / 2.
pub fn multiphoton_delta(mu: f64, g2: f64, gain: f64) -> Result<f64> {
    if !(gain > 0.0) {
        return Err(Error::InvalidParameter(format!("gain {gain} must be positive")));
    }
    if !(mu >= 0.0 && g2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu {mu} and g2 {g2} must be nonnegative")));
    }
    Ok(mu * mu * g2 / 2.0 / gain)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceStats {
    pub g2: f64,
    pub mu: f64,
    pub gain: f64,
    pub delta: f64,
}

impl SourceStats {
    pub fn new(g2: f64, mu: f64, gain: f64) -> Result<Self> {
        let delta = multiphoton_delta(mu, g2, gain)?;
        if delta > 1.0 {
            return Err(Error::InvalidParameter(format!("multiphoton rate {delta} exceeds 1")));
        }
        Ok(Self { g2, mu, gain, delta })
    }
}

impl fmt::Display for SourceStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "g2={}", self.g2)?;
        writeln!(f, "mu={}", self.mu)?;
        writeln!(f, "gain={}", self.gain)?;
        writeln!(f, "delta={}", self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g2_examples() {
        assert_eq!(g2_estimate(0, 1000, 100, 100).unwrap(), 0.0);
        assert!((g2_estimate(1, 1000, 100, 100).unwrap() - 0.1).abs() < 1e-15);
        let a = g2_estimate(7, 12345, 321, 456).unwrap();
        let b = g2_estimate(70, 123450, 3210, 4560).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(g2_estimate(1, 1, 0, 1).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(multiphoton_delta(3e-4, 0.0, 1e-5).unwrap(), 0.0);
        assert!((multiphoton_delta(3e-4, 0.015, 1e-5).unwrap() - 6.75e-5).abs() < 1e-18);
        let one = multiphoton_delta(1e-3, 0.02, 1e-4).unwrap();
        let two = multiphoton_delta(2e-3, 0.02, 1e-4).unwrap();
        assert!((two - 4.0 * one).abs() < 1e-18);
        assert!(multiphoton_delta(1e-3, 0.02, 0.0).is_err());
        assert!(SourceStats::new(1.0, 1.0, 1e-3).is_err());
        let s = SourceStats::new(REFERENCE_G2, REFERENCE_MU, REFERENCE_GAIN).unwrap();
        assert!(s.to_string().starts_with("g2=0.015\n"));
    }
}
