//! Finite sections of band operators on finitely generated discrete groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`]: ℤ^d, free groups and the Heisenberg group with word balls Ω_n.
//! * [`set`]: Ω-interiors and boundaries, section sequences, inflating
//!   sequences, geodesic paths and limit sets.
//! * [`band`]: band operators Σ b_i L_{t_i} with structured diagonals, their
//!   algebra and exact limit operators.
//! * [`sections`]: finite section matrices P_Y A P_Y, quasicommutators,
//!   boundary generators, strong limits and the block operator Op(·).
//! * [`stability`]: σ_min scans of finite sections, limit-operator
//!   inventories and the resulting stability prediction.
//! * [`descriptor`]: the JSON experiment and operator formats.

pub mod band;
pub mod descriptor;
pub mod error;
pub mod group;
pub mod sections;
pub mod set;
pub mod stability;

/// Complex scalars are double-precision pairs.
pub type C64 = nalgebra::Complex<f64>;

pub use band::{limit_operator, BandOperator, Diagonal, SequenceSpec, WindowVector};
pub use error::{BandError, DescriptorError, GeometryError, GroupError, SectionError};
pub use group::{Element, GroupContext, GroupKind, GrowthClass};
pub use sections::SectionMatrix;
pub use set::{FiniteSet, GeodesicPath, InflatingSequence, SectionSequence};
pub use stability::{StabilityReport, Verdict};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
