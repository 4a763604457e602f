//! Zero counting, Chebyshev probes, argument-principle winding numbers and
//! the chain of zero bounds for `I`, `G` and `R`.

pub mod bound;
pub mod chebyshev;
pub mod variation;
pub mod winding;
pub mod zeros;

pub use bound::{bound_pipeline, random_mu, sweep, BoundContext, BoundReport};
pub use chebyshev::{chebyshev_probe, ChebReport, ResidueSolution, Verdict};
pub use variation::{variation_sample_test, VariationSummary};
pub use winding::{vn_sample_test, winding_count, PolyPair, VnSummary, WindingReport};
pub use zeros::{count_zeros, Zero, ZeroReport};
