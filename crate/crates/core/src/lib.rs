pub mod cli;
pub mod corpus;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod representation;
