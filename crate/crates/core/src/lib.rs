//! Executable semantics and expressiveness analyses for three process
//! calculi: the pi-calculus with mixed choice, mixed sessions and separate
//! sessions.

pub mod election;
pub mod encoding;
pub mod enumeration;
pub mod equivalences;
pub mod error;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod patterns;
pub mod semantics;
pub mod syntax;

pub use error::{Error, Result};
pub use syntax::{
    canonicalize, decompose, eval_expr, free_names, parse, parse_document, recompose, substitute,
    Binder, Branch, Calculus, Decomposition, Document, Endpoint, Label, LabelTag, Name, Payload,
    Polarity, Prefix, Proc, Side, Substitution, Summand, Value,
};
pub use semantics::{
    barbs, enumerate_steps, Barb, BarbDirection, Footprint, Limits, Occurrence, ReductionGraph,
    ReductionStep, StepKind,
};
