//! Instance sources: a TSPLIB subset, subtour facet instances, seeded random
//! instances, and an exact tour oracle.

mod brute_force;
mod facets;
mod random;
mod tsplib;

pub use brute_force::{brute_force_tsp, OptimalTour, BRUTE_FORCE_CAP};
pub use facets::{subtour_facet, subtour_facet_instances, FacetInstance, FACET_MAX_ORDER, FACET_MIN_ORDER};
pub use random::{instance_rng, random_integral_instance, seeded_suite, DEFAULT_MAX_WEIGHT};
pub use tsplib::{nint, parse_tsplib, read_tsplib, to_tsplib_full_matrix, ParseError, TsplibInstance, WeightFormat};
