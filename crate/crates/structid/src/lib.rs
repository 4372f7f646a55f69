pub mod analysis;
pub mod cli;
pub mod parser;
pub mod report;

pub use analysis::{run_parallel, Timings};
pub use parser::{parse_model, serialize_model, ParseError, SourceSpan};
