//! Dynamic tree decompositions under edge insertions and deletions.
//!
//! The engine maintains, for a graph promised to keep treewidth at most `k`,
//! a rooted binary tree decomposition of width at most `9·tw(G)+8` together
//! with runs of bottom-up dynamic-programming automata (independent set,
//! coloring, dominating set). Internally it keeps a rooted decomposition of
//! the graph's support hypergraph in which every subtree's hyperedge set is
//! well-linked; edge updates are served by splay-like rotations whose
//! amortized size is logarithmic in the graph size at fixed `k`.
//!
//! Module map:
//! - [`hypergraph`]: hypergraphs, boundaries, contraction calculus.
//! - [`well_linked`]: well-linkedness testing, well-linked partitions,
//!   branch decompositions and their tree-decomposition conversions.
//! - [`superbranch`]: the rooted decomposition representation and the four
//!   basic rotations (split, contract, insert leaf, delete leaf).
//! - [`restructure`]: degree reduction that preserves downwards
//!   well-linkedness.
//! - [`balance`]: the potential function and the rebalancing loop.
//! - [`engine`]: the public dynamic structure (init / add_edge / delete_edge).
//! - [`tree_decomp`]: exporting annotated binary tree decompositions and
//!   prefix-rebuilding updates.
//! - [`automata`]: tree-decomposition automata and maintained runs.
//! - [`oracle`]: independent brute-force ground truth used by tests.
//! - [`session`]: engine + export + automata bundled for the CLI and FFI.
//! - [`stream`]: the text update-stream format.

pub mod automata;
pub mod balance;
pub mod engine;
pub mod hypergraph;
pub mod oracle;
pub mod restructure;
pub mod session;
pub mod stream;
pub mod superbranch;
pub mod tree_decomp;
pub mod well_linked;

/// Errors across the crate. Algorithmic preconditions map to
/// `InvalidArgument`; `PromiseViolated` marks states that can only arise
/// when the caller broke the treewidth promise given at initialization.
#[derive(Debug, thiserror::Error)]
pub enum DyntwError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("treewidth promise violated: {0}")]
    PromiseViolated(String),
}

impl DyntwError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        DyntwError::InvalidArgument(msg.into())
    }

    pub fn promise(msg: impl Into<String>) -> Self {
        DyntwError::PromiseViolated(msg.into())
    }
}
