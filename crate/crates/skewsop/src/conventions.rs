//! Every sign and factor-of-two convention in one place.
//!
//! | quantity                         | β = 4                         | β = 1                               |
//! |----------------------------------|-------------------------------|-------------------------------------|
//! | skew pairing of monomials        | ½ (k−j) μ_{j+k−1}             | ∫∫ x^j y^k ε(y−x) w(x) w(y)         |
//! | weight in the pairing            | e^{−2V}                       | w = e^{−V} (each variable)          |
//! | ψ_n                              | φ_n′                          | ∫ ε(x−y) φ_n(y) dy                  |
//! | hat sign σ (Ψ̂ = −σ Ψ^t Z)        | +1                            | −1                                  |
//! | (Q − Q^D) P                      | +1                            | −1                                  |
//! | operator products                | R = P Q                       | R = Q P                             |
//! | R̄ for ladders / folding / α      | R − xP                        | R − xP                              |
//! | R̄ in the GCD formula             | R − xP, evaluated at y        | ½(R − xP), evaluated at x           |
//! | wave annihilated by R̄            | Φ                             | Ψ                                   |
//! | wave annihilated by R̄ − 1        | Ψ                             | Φ                                   |
//! | eigenvalue jpdf (κ calibration)  | Π|Δ|⁴ Π e^{−2V}, N levels ×2  | Π|Δ| Π e^{−V}, 2N levels            |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Beta {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "4")]
    Four,
}

impl Beta {
    pub fn from_int(b: u32) -> Result<Self> {
        match b {
            1 => Ok(Beta::One),
            4 => Ok(Beta::Four),
            _ => Err(Error::InvalidArgument(format!("beta must be 1 or 4, got {b}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Beta::One => 1,
            Beta::Four => 4,
        }
    }

    /// σ in Ψ̂ = −σ Ψ^t Z; also the value of (Q − Q^D)P.
    pub fn hat_sign(self) -> f64 {
        match self {
            Beta::Four => 1.0,
            Beta::One => -1.0,
        }
    }

    /// Factor taking the moment bilinear form to the normalized skew pairing.
    pub fn pairing_scale(self) -> f64 {
        match self {
            Beta::Four => 0.5,
            Beta::One => 1.0,
        }
    }

    /// Scale of R − xP inside the GCD commutator.
    pub fn gcd_rbar_scale(self) -> f64 {
        match self {
            Beta::Four => 1.0,
            Beta::One => 0.5,
        }
    }

    /// The wave annihilated by R̄ (the other one is annihilated by R̄ − 1).
    pub fn primary_wave(self) -> Wave {
        match self {
            Beta::Four => Wave::Phi,
            Beta::One => Wave::Psi,
        }
    }

    /// Which finite system a wave kind satisfies.
    pub fn system_for(self, wave: Wave) -> System {
        if wave == self.primary_wave() {
            System::Plain
        } else {
            System::Shifted
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Beta::Four => "beta4: pairing 1/2(k-j)mu, psi=phi', sigma=+1, R=PQ",
            Beta::One => "beta1: pairing eps(y-x) (g>0), psi=eps*phi, sigma=-1, R=QP",
        }
    }
}

/// The two wave vectors Φ and Ψ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wave {
    Phi,
    Psi,
}

/// R̄(x)·v = 0 (`Plain`) or (R̄(x) − 1)·v = 0 (`Shifted`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum System {
    Plain,
    Shifted,
}
