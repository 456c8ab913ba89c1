//! Lewis weights of graph incidence matrices and total effective resistance.
//!
//! For a connected graph with normalized edge weights `g`, the Kirchhoff
//! index `K(g) = n Tr L_g⁺` sums the effective resistance over all vertex
//! pairs. Lewis weights are cheap to compute and come with certificates
//! bounding how far `K(g_lw)` can be from the minimum.
//!
//! ```
//! use lewisgraph::{generate, lewis, Family};
//!
//! let g = generate(&Family::Complete { n: 3 }, 0)?;
//! let lw = lewis::lewis_weights(&g, 0.01)?;
//! assert!(lw.w_inf.iter().all(|w| (w - 2.0 / 3.0).abs() < 1e-12));
//! # Ok::<(), lewisgraph::Error>(())
//! ```

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod laplacian;
pub mod lewis;
pub mod oracle;
pub mod resistance;
pub mod stt;
pub mod trees;

pub use error::{Error, Result};
pub use generators::{generate, Family};
pub use graph::{build_graph, parse_edge_list, read_edge_list, BuildOptions, Graph, WeightVector};
pub use laplacian::{Backend, LaplacianSystem, SolverOptions};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/resistance.md")]
    mod resistance {}
    #[doc = include_str!("../../../book/src/lewis.md")]
    mod lewis {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/thin-trees.md")]
    mod thin_trees {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
