//! Concrete syntax: lexing, parsing and pretty-printing of processes,
//! configurations, session types and type declaration files.

mod lexer;
mod parse;
mod print;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::syntax::{MemoryId, Process, Tag};
use crate::types::{SessionType, TypeEnv};

pub use print::{print_configuration, print_expr, print_memory, print_process, print_thread};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: Option<String>,
    /// Byte offsets into the source, `start <= end`.
    pub start: usize,
    pub end: usize,
    /// One-based position of `start`.
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.span.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// A parsed configuration with the source positions of its items.
#[derive(Clone, Debug)]
pub struct ParsedConfig {
    pub config: Configuration,
    pub thread_spans: BTreeMap<Tag, SourceSpan>,
    pub memory_spans: BTreeMap<MemoryId, SourceSpan>,
}

pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    parse::Parser::new(text, None)?.process_file()
}

pub fn parse_configuration(text: &str) -> Result<Configuration, ParseError> {
    parse_configuration_spanned(text, None).map(|p| p.config)
}

pub fn parse_configuration_spanned(text: &str, file: Option<&str>) -> Result<ParsedConfig, ParseError> {
    parse::Parser::new(text, file)?.config_file()
}

/// Parses either a configuration or a bare process; a process `P` becomes
/// the initial configuration `t1 : P`.
pub fn parse_program(text: &str, file: Option<&str>) -> Result<ParsedConfig, ParseError> {
    match parse::Parser::new(text, file)?.config_file() {
        Ok(c) => Ok(c),
        Err(config_err) => match parse::Parser::new(text, file)?.process_file() {
            Ok(p) => Ok(ParsedConfig {
                config: Configuration::from_process(p),
                thread_spans: BTreeMap::new(),
                memory_spans: BTreeMap::new(),
            }),
            Err(proc_err) => {
                if proc_err.span.start > config_err.span.start {
                    Err(proc_err)
                } else {
                    Err(config_err)
                }
            }
        },
    }
}

pub fn parse_session_type(text: &str) -> Result<SessionType, ParseError> {
    parse::Parser::new(text, None)?.session_type_file()
}

/// Parses a `.styp` declaration file.
pub fn parse_type_env(text: &str, file: Option<&str>) -> Result<TypeEnv, ParseError> {
    parse::Parser::new(text, file)?.type_env_file()
}
