//! Citation-aware question answering: prompting strategies that ask a
//! language model to cite retrieved passages, and the metrics that judge
//! the answers for correctness and citation quality.

pub mod dataset;
pub mod eval;
pub mod generation;
pub mod model;
pub mod normalize;
pub mod oracle;
pub mod parser;
pub mod post_edit;
pub mod retrieval;
pub mod transport;

pub use model::{
    CitationMarker, ClaimSet, DatasetKind, GoldAnnotation, ParsedResponse, Passage, QueryInstance,
    RunConfig, Statement, Strategy,
};
pub use normalize::normalize_text;
pub use oracle::EntailmentOracle;
