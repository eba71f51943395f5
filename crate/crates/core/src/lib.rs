//! A small dependent type theory kernel with an impredicative `Prop`,
//! proof-irrelevant equality, a primitive cast and a tracing reducer.

pub mod syntax;
pub mod parser;
pub mod kernel;
pub mod convert;
pub mod typecheck;
pub mod reduce;
pub mod trace;
pub mod corpus;
pub mod cli;
