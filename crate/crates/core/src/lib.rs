//! Exact dense polynomial multiplication over word-sized prime fields.
//!
//! The crate provides prime-field arithmetic ([`modfield`]), dense
//! polynomials ([`polyring`]), modular and truncated Fourier transforms
//! ([`transform`]), convolution engines ([`convolution`]) and an empirical
//! plan search with a persistent plan store ([`planner`]).

pub mod convolution;
pub mod error;
pub mod modfield;
pub mod planner;
pub mod polyring;
pub mod transform;

mod exec;

pub use convolution::{poly_mul, ConvRequest, Engine};
pub use error::{Error, Result};
pub use modfield::{find_fourier_prime, Felt, FourierPrime};
pub use planner::{
    exec_signature, plan_mirror, MedianTimer, PlanChoice, PlanEntry, PlanKey, PlanKind, PlanStore,
    Planner, PlannerConfig, Timer,
};
pub use polyring::DensePoly;
pub use transform::{Decomposition, Direction, OpCounters, TransformOpts, TwiddleTable};
