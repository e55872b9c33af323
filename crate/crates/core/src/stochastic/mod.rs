//! Random paths, the Black–Scholes market and the two conditional-expectation
//! backends (exact recombining lattice, least-squares regression).

pub mod backend;
pub mod lattice;
pub mod market;
pub mod paths;
pub mod regression;

pub use backend::{condexp, Backend};
pub use lattice::Lattice;
pub use market::{simulate_market, MarketPaths, MarketSpec};
pub use paths::{simulate_brownian, PathEnsemble};
pub use regression::{BasisConfig, RegressionBackend, StateTransform, MAX_DEGREE};
