//! Knowledge-base driven troubleshooting for trapped-ion apparatus.
//!
//! The crate is organised around an immutable [`KnowledgeBase`] of
//! diagnostic flowcharts and a failure-mode catalog:
//!
//! - [`model`]: knowledge-base types, validation and the bundled default KB.
//! - [`dsl`]: the `.itkb` text format (parser, serializer) and DOT export.
//! - [`lint`]: graph-level static checks over a knowledge base.
//! - [`session`]: the event-sourced guided-diagnosis state machine.
//! - [`fmea`]: severity algebra, branch ranking, fault records and RPN.
//! - [`potential`]: the quadrupole trapping potential and its checks.

pub mod dsl;
pub mod fmea;
pub mod lint;
pub mod model;
pub mod potential;
pub mod session;

pub use model::{
    default_knowledge_base, Area, ConstantValue, CostVector, Edge, FailureMode, JumpTarget, KbError,
    KbParts, KnowledgeBase, Node, NodeKind, SeverityLevel, TreeGraph,
};
