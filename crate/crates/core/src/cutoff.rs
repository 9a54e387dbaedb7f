//! Radial cutoffs in the squared-radius variable `s = |x|^2 / r^2`.
//!
//! All profiles are built from the quintic smoothstep
//! `q(u) = 6u^5 - 15u^4 + 10u^3`, the lowest degree polynomial with
//! `q(0) = 0`, `q(1) = 1` and vanishing first and second derivatives at both
//! ends, so every cutoff is C^2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (u * (6.0 * u - 15.0) + 10.0)
    }
}

pub fn smoothstep_prime(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (u - 1.0) * (u - 1.0)
    }
}

/// `chi_{1/2}`: 1 on `[0, 1/4]`, 0 on `[1, inf)`.
pub fn chi_half(s: f64) -> f64 {
    1.0 - smoothstep((s - 0.25) / 0.75)
}

pub fn chi_half_prime(s: f64) -> f64 {
    -smoothstep_prime((s - 0.25) / 0.75) / 0.75
}

/// `chi_1(s) = chi_{1/2}(s / 4)`.
pub fn chi_one(s: f64) -> f64 {
    chi_half(0.25 * s)
}

pub fn chi_one_prime(s: f64) -> f64 {
    0.25 * chi_half_prime(0.25 * s)
}

/// `phi = chi_1 - chi_{1/2}`; vanishes for `s <= 1/4` and `s >= 4`.
pub fn phi(s: f64) -> f64 {
    if s <= 0.25 || s >= 4.0 {
        return 0.0;
    }
    chi_one(s) - chi_half(s)
}

pub fn phi_prime(s: f64) -> f64 {
    if s <= 0.25 || s >= 4.0 {
        return 0.0;
    }
    chi_one_prime(s) - chi_half_prime(s)
}

/// Tail cutoff: 0 on `[0, 1/2]`, 1 on `[1, inf)`.
pub fn varphi(s: f64) -> f64 {
    smoothstep((s - 0.5) / 0.5)
}

pub fn varphi_prime(s: f64) -> f64 {
    smoothstep_prime((s - 0.5) / 0.5) / 0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// Indicator of the open unit ball.
    Sharp,
    /// Smooth annulus `phi`, supported on `1/2 < |x|/r < 2`.
    PhiAnnulus,
    /// Smooth tail `varphi`, supported on `|x|/r > 1/sqrt(2)`.
    VarphiTail,
}

impl CutoffKind {
    pub fn name(self) -> &'static str {
        match self {
            CutoffKind::Sharp => "sharp",
            CutoffKind::PhiAnnulus => "phi_annulus",
            CutoffKind::VarphiTail => "varphi_tail",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub kind: CutoffKind,
}

impl CutoffSpec {
    pub const SHARP: CutoffSpec = CutoffSpec { kind: CutoffKind::Sharp };
    pub const PHI: CutoffSpec = CutoffSpec { kind: CutoffKind::PhiAnnulus };
    pub const VARPHI: CutoffSpec = CutoffSpec { kind: CutoffKind::VarphiTail };

    pub fn eval(&self, s: f64) -> f64 {
        match self.kind {
            CutoffKind::Sharp => f64::from(u8::from(s < 1.0)),
            CutoffKind::PhiAnnulus => phi(s),
            CutoffKind::VarphiTail => varphi(s),
        }
    }

    /// Derivative in `s`; zero almost everywhere for the sharp cutoff.
    pub fn derivative(&self, s: f64) -> f64 {
        match self.kind {
            CutoffKind::Sharp => 0.0,
            CutoffKind::PhiAnnulus => phi_prime(s),
            CutoffKind::VarphiTail => varphi_prime(s),
        }
    }

    /// Largest `s` where the cutoff can be non-zero; `None` if unbounded.
    pub fn support_max(&self) -> Option<f64> {
        match self.kind {
            CutoffKind::Sharp => Some(1.0),
            CutoffKind::PhiAnnulus => Some(4.0),
            CutoffKind::VarphiTail => None,
        }
    }

    pub fn require(&self, expected: CutoffKind) -> Result<()> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(Error::InvalidCutoff {
                expected: expected.name(),
                found: self.kind.name(),
            })
        }
    }
}
