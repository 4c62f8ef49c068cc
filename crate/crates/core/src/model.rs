//! Quasi-free fermionic models and the XY-chain parametrization.
//!
//! A model is an ordered list of momentum-pair modes. Each mode carries the
//! kinetic coefficient ε_k and pairing amplitude Δ_k of one (k, -k) pair,
//! plus the derived quasiparticle energy Λ_k = sqrt(ε_k² + Δ_k²) and
//! Bogoliubov angle θ_k with (cos θ, sin θ) ∝ (ε, Δ).
//!
//! For the periodic XY chain with anisotropy γ and transverse field λ the
//! modes are ε_j = cos φ_j - λ, Δ_j = γ sin φ_j on one of two phase grids
//! (see [`GridConvention`]). Only paired momenta enter: the chain length N
//! must be even and the mapping produces N/2 modes.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Placement of the N/2 momentum phases φ_j on (0, π].
///
/// `Integer` uses φ_j = 2πj/N for j = 1..N/2, which includes the φ = π
/// endpoint where the pairing amplitude vanishes. `HalfInteger` uses
/// φ_j = 2π(j - 1/2)/N (the antiperiodic sector), which avoids both
/// endpoints; the two conventions agree as N → ∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridConvention {
    Integer,
    HalfInteger,
}

impl GridConvention {
    pub fn label(&self) -> &'static str {
        match self {
            GridConvention::Integer => "integer",
            GridConvention::HalfInteger => "half-integer",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "integer" => Ok(GridConvention::Integer),
            "half-integer" => Ok(GridConvention::HalfInteger),
            other => Err(Error::Domain(format!(
                "unknown grid convention `{other}` (expected `integer` or `half-integer`)"
            ))),
        }
    }
}

/// One (k, -k) momentum pair: parameters (ε, Δ) and the cached derived pair
/// (Λ, θ). Immutable after construction so the cache cannot go stale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumMode {
    epsilon: f64,
    delta: f64,
    lambda: f64,
    theta: f64,
}

impl MomentumMode {
    /// Build a mode from (ε, Δ). Λ = sqrt(ε² + Δ²); θ comes from the
    /// two-argument arctangent of (Δ, ε) so ε < 0 lands in the correct
    /// branch, folded onto (-π, π]. A fully degenerate mode (ε = Δ = 0)
    /// gets θ = 0 by convention: all downstream formulas see θ only through
    /// trigonometry weighted by Λ, so the choice is unobservable.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !epsilon.is_finite() || !delta.is_finite() {
            return Err(Error::NonFinite("mode parameters (epsilon, delta)"));
        }
        let lambda = epsilon.hypot(delta);
        let theta = if lambda == 0.0 {
            0.0
        } else {
            let t = delta.atan2(epsilon);
            // atan2 can return -π (for Δ = -0.0, ε < 0); fold it onto +π.
            if t == -PI {
                PI
            } else {
                t
            }
        };
        Ok(Self {
            epsilon,
            delta,
            lambda,
            theta,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Quasiparticle energy Λ ≥ 0.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Bogoliubov angle θ ∈ (-π, π].
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// An ordered, non-empty sequence of momentum modes representing
/// H = Σ_k H_k. Two models are comparable iff they have equal mode counts;
/// mode i of one pairs with mode i of the other.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiFreeModel {
    modes: Vec<MomentumMode>,
}

impl QuasiFreeModel {
    pub fn new(modes: Vec<MomentumMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Domain(
                "a quasi-free model needs at least one mode".into(),
            ));
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[MomentumMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn comparable(&self, other: &Self) -> bool {
        self.len() == other.len()
    }

    /// The quasiparticle spectrum Λ_k per mode, order-preserving.
    pub fn lambda_spectrum(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda()).collect()
    }
}

/// XY-chain parameters: anisotropy γ, transverse field λ, even site count N,
/// and the momentum-grid convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XYParams {
    gamma: f64,
    lambda: f64,
    n_sites: usize,
    grid: GridConvention,
}

impl XYParams {
    pub fn new(gamma: f64, lambda: f64, n_sites: usize, grid: GridConvention) -> Result<Self> {
        if !gamma.is_finite() || !lambda.is_finite() {
            return Err(Error::NonFinite("XY parameters (gamma, lambda)"));
        }
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "n_sites must be even and >= 2 for (k, -k) pairing, got {n_sites}"
            )));
        }
        Ok(Self {
            gamma,
            lambda,
            n_sites,
            grid,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn grid(&self) -> GridConvention {
        self.grid
    }

    /// Map the spin chain onto its N/2 momentum modes:
    /// ε_j = cos φ_j - λ, Δ_j = γ sin φ_j.
    pub fn to_quasifree(&self) -> QuasiFreeModel {
        let n = self.n_sites as f64;
        let modes = (1..=self.n_sites / 2)
            .map(|j| {
                let phase = match self.grid {
                    GridConvention::Integer => 2.0 * PI * j as f64 / n,
                    GridConvention::HalfInteger => 2.0 * PI * (j as f64 - 0.5) / n,
                };
                MomentumMode::new(phase.cos() - self.lambda, self.gamma * phase.sin())
                    .expect("finite XY parameters produce finite mode coefficients")
            })
            .collect();
        QuasiFreeModel::new(modes).expect("n_sites >= 2 yields at least one mode")
    }
}

/// Inverse temperature: strictly positive and finite, or the ground-state
/// sentinel. `Infinite` dispatches the thermal operations to their
/// closed-form zero-temperature limits instead of a large-β evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn validate(&self) -> Result<()> {
        match self {
            Beta::Finite(b) if b.is_finite() && *b > 0.0 => Ok(()),
            Beta::Finite(b) => Err(Error::Domain(format!(
                "inverse temperature must be finite and > 0, got {b}"
            ))),
            Beta::Infinite => Ok(()),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Beta::Infinite)
    }

    pub fn finite_value(&self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(*b),
            Beta::Infinite => None,
        }
    }
}

/// A Gibbs state ρ = Z⁻¹ e^{-βH} specified by its model and inverse
/// temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalStateSpec {
    model: QuasiFreeModel,
    beta: Beta,
}

impl ThermalStateSpec {
    pub fn new(model: QuasiFreeModel, beta: Beta) -> Result<Self> {
        beta.validate()?;
        Ok(Self { model, beta })
    }

    pub fn model(&self) -> &QuasiFreeModel {
        &self.model
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }
}
