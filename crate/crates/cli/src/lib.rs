//! Command-line front end and file formats for `amdreg`.

mod commands;
pub mod io;

pub use commands::{run, Cli};
