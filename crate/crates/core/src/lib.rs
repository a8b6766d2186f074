//! Notable-characteristics search over knowledge graphs.
//!
//! Given a handful of query nodes, the pipeline first finds a context of
//! similar nodes and then flags the edge labels whose value or cardinality
//! distribution in the query deviates significantly from the context.
//!
//! * [`graph`] loads and indexes labeled triples.
//! * [`context`] selects the context (PageRank baseline or metapath walks).
//! * [`stats`] builds per-label distributions and runs the exact
//!   multinomial test.
//! * [`pipeline`] ties both together and produces reports.
//! * [`synth`] generates planted synthetic graphs and evaluates context
//!   quality.

pub mod context;
pub mod graph;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use context::{ContextResult, WalkConfig};
pub use graph::{KnowledgeGraph, LabelId, LoadOptions, NodeId, Query};
pub use pipeline::{find_notable, resolve_query, Algorithm, NotableReport, RunConfig};
pub use stats::{NotableVerdict, StatsConfig};
