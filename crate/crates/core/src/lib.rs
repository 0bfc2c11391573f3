//! Structure-aware entity and relation extraction for plant-health
//! bulletins.
//!
//! The pipeline runs in stages, each with a plain-file output:
//!
//! 1. [`doc`]: bulletins as ordered header/title/subtitle/paragraph blocks.
//! 2. [`lexicon`] and [`grammar`]: dictionary and local-grammar matching.
//! 3. [`extract`]: per-document itemsets of typed mentions.
//! 4. [`relation`]: crop-centred relations scoped by section structure.
//! 5. [`index`]: an immutable on-disk index answering faceted queries.

pub mod concept;
pub mod corpus;
pub mod doc;
pub mod extract;
pub mod grammar;
pub mod index;
pub mod lexicon;
pub mod mention;
pub mod par;
pub mod relation;

pub use concept::ConceptType;
pub use doc::{Block, BlockKind, DocMeta, Document, SectionSpan};
pub use extract::{DocItemset, EntityMention};
pub use lexicon::{fold, Lexicon};
pub use mention::Span;
pub use par::Parallelism;
