use std::path::Path;

use crate::config::Configuration;
use crate::parser::{parse_configuration, print_configuration, ParseError};
use crate::reduction::{Engine, Step, StepError};

/// A run from an initial configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub steps: Vec<Step>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace is empty: expected an `INIT` line")]
    MissingInit,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("initial configuration: {0}")]
    Parse(#[from] ParseError),
    #[error("cannot read initial configuration from {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("step {index}: {source}")]
    Replay { index: usize, source: StepError },
}

impl Trace {
    pub fn new(initial: Configuration) -> Self {
        Trace { initial, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    /// Every configuration along the trace, initial and final included,
    /// obtained by replaying the recorded steps.
    pub fn configurations(&self) -> Result<Vec<Configuration>, TraceError> {
        let mut engine = Engine::new();
        engine.reserve(&self.initial);
        let mut out = vec![self.initial.clone()];
        for (index, step) in self.steps.iter().enumerate() {
            let (next, _) = engine.replay(out.last().unwrap(), step).map_err(|source| TraceError::Replay { index, source })?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn final_configuration(&self) -> Result<Configuration, TraceError> {
        Ok(self.configurations()?.pop().unwrap())
    }

    /// `INIT <configuration>` followed by one JSON step per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("INIT {}\n", print_configuration(&self.initial));
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("steps serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses [`Trace::to_text`] output. The `INIT` line holds either an
    /// inline configuration or a path, resolved against `base` when relative.
    pub fn from_text(text: &str, base: Option<&Path>) -> Result<Trace, TraceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(TraceError::MissingInit)?;
        let init = first.trim().strip_prefix("INIT").ok_or(TraceError::MissingInit)?.trim();
        let initial = match parse_configuration(init) {
            Ok(c) => c,
            Err(parse_err) => {
                let path = match base {
                    Some(b) if Path::new(init).is_relative() => b.join(init),
                    _ => Path::new(init).to_path_buf(),
                };
                if !path.is_file() {
                    return Err(parse_err.into());
                }
                let src = std::fs::read_to_string(&path)
                    .map_err(|source| TraceError::Io { path: path.display().to_string(), source })?;
                parse_configuration(&src)?
            }
        };
        let mut steps = Vec::new();
        for (i, line) in lines {
            let step = serde_json::from_str(line)
                .map_err(|e| TraceError::Malformed { line: i + 1, message: e.to_string() })?;
            steps.push(step);
        }
        Ok(Trace { initial, steps })
    }
}
