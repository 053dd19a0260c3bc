use robustse::Method;
use serde::Serialize;

/// Top-level JSON document shared by every subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct Envelope<C, R> {
    pub meta: Meta<C>,
    pub results: Vec<R>,
    pub warnings: Vec<Warning>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Meta<C> {
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: C,
}

impl<C> Meta<C> {
    pub fn new(seed: Option<u64>, config: C) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Warning {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// File line of the observation concerned.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
}

impl Warning {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            method: None,
            line: None,
        }
    }

    pub fn for_method(mut self, method: Method) -> Self {
        self.method = Some(method);
        self
    }

    pub fn at_line(mut self, line: u64) -> Self {
        self.line = Some(line);
        self
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
