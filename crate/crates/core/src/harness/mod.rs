//! Configuration, window budgeting, output and the acceptance suite behind
//! the command-line tool.

pub mod acceptance;
pub mod config;
pub mod output;
pub mod simulate;
pub mod window;
