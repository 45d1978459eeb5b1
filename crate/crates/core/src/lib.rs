//! Construction, validation, querying and evaluation of technology-evolution
//! trees over scientific-paper corpora.

pub mod corpus;
pub mod eval;
pub mod graph;
pub mod importance;
pub mod ingest;
pub mod oracle;
pub mod ranli;
pub mod retrospect;
pub mod search;
pub mod text;
pub mod tvcv;
