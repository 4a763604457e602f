//! Numerical laboratory for the Abelian integrals of a codimension-four
//! quadratic reversible center and the zeros they can have.

pub mod error;
pub mod model;
pub mod ode;
pub mod oval;
pub mod quadrature;
pub mod reduction;
pub mod picard_fuchs;
pub mod exact;
pub mod melnikov;
pub mod analysis;
pub mod dynamics;

pub use error::{Error, Result};
pub use model::{Form, LevelPoint, ModelParams, Window};
pub use oval::{oval, Oval, Side};
pub use quadrature::{moment, Method, MomentIndex, MomentValue};
pub use reduction::{assemble_I, moment_reduce, Route};
pub use picard_fuchs::{propagate_j, PFVector};
pub use melnikov::{eval_G, eval_R, extract_R_coeffs, RCoefficients, RRoute};
pub use dynamics::{conservation_report, integrate_orbit, vector_field_rhs, Orbit};
