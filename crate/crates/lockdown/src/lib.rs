pub mod balancing;
pub mod constrained;
pub mod error;
pub mod ingest;
pub mod model;
pub mod presets;
pub mod simulate;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};

/// Library version, echoed into run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/flow.md")]
    pub mod flow {}
    #[doc = include_str!("../../../book/src/stability.md")]
    pub mod stability {}
    #[doc = include_str!("../../../book/src/balancing.md")]
    pub mod balancing {}
    #[doc = include_str!("../../../book/src/constrained.md")]
    pub mod constrained {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    pub mod synthetic {}
    #[doc = include_str!("../../../book/src/data.md")]
    pub mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
