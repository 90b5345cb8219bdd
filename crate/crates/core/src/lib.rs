//! Numerical tools for dynamically forced circle diffeomorphisms.
//!
//! A forced map is a skew product `(x, y) ↦ (g(x), F_x(y))` where `g` is a
//! uniquely ergodic base map ([`base`]) and each `F_x` is a degree-one lift
//! of an orientation-preserving circle diffeomorphism ([`fiber`]). On top of
//! that the crate computes
//!
//! * rotation-number enclosures from finite-time displacement bounds
//!   ([`rotation`]),
//! * mode-locking and unlocking certificates ([`locking`]),
//! * bounds on the extremal fiberwise Lyapunov exponents ([`lyapunov`]),
//! * `(τ, α)` tongue scans and perturbation probes ([`scan`], [`probe`]).
//!
//! Margins are floating-point Lipschitz budgets. Results carry a
//! [`Rigor`] flag: they are `Rigorous` only over isometric (rotation) bases.

pub mod acceptance;
pub mod base;
mod error;
pub mod fiber;
pub mod locking;
pub mod lyapunov;
mod numeric;
pub mod probe;
pub mod rng;
pub mod rotation;
pub mod scan;
pub mod trig;

pub use base::{BaseMap, BasePoint, SchwartzmanGenerators};
pub use error::{Error, Result};
pub use fiber::{FiberFamily, ForcedMap};
pub use locking::{ClassifyBudget, LockClassification, Strip};
pub use lyapunov::ExponentEstimate;
pub use rotation::{DisplacementStats, RotationEnclosure};
pub use scan::{ScanConfig, TongueGrid};
pub use trig::TrigPoly;

use serde::{Deserialize, Serialize};

/// Whether a bound is backed by a valid Lipschitz budget or only indicative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rigor {
    Rigorous,
    Heuristic,
}

impl Rigor {
    pub fn as_str(self) -> &'static str {
        match self {
            Rigor::Rigorous => "rigorous",
            Rigor::Heuristic => "heuristic",
        }
    }

    /// The weaker of two rigor levels.
    pub fn meet(self, other: Rigor) -> Rigor {
        if self == Rigor::Rigorous && other == Rigor::Rigorous {
            Rigor::Rigorous
        } else {
            Rigor::Heuristic
        }
    }
}

impl std::fmt::Display for Rigor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
