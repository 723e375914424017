use std::fmt;

/// Command failure, mapped to an exit code and a one-line JSON record on
/// stderr.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config { key: Option<String>, message: String },
    /// Exit code 1.
    Numerical(String),
    /// Exit code 1.
    Io(String),
}

impl CliError {
    pub fn config(key: Option<&str>, message: String) -> Self {
        CliError::Config { key: key.map(str::to_string), message }
    }

    pub fn numerical(e: impl fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }

    pub fn record(&self) -> String {
        let (kind, key, message) = match self {
            CliError::Config { key, message } => ("config", key.as_deref(), message.as_str()),
            CliError::Numerical(m) => ("numerical", None, m.as_str()),
            CliError::Io(m) => ("io", None, m.as_str()),
        };
        let key = key.map_or("null".to_string(), json_string);
        format!("{{\"error\":\"{kind}\",\"key\":{key},\"message\":{}}}", json_string(message))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
