use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Exit codes shared by all subcommands.
pub mod code {
    pub const OK: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const REJECTED: i32 = 3;
    pub const INCONCLUSIVE: i32 = 4;
    pub const INTERNAL: i32 = 5;
}

/// Versioned wrapper written for `--format json`.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema: &'static str,
    pub command: &'a str,
    #[serde(flatten)]
    pub body: &'a T,
}

/// A finished command: its rendering in every format plus the exit code.
pub struct Report {
    pub json: String,
    pub csv: String,
    pub table: String,
    pub code: i32,
}

impl Report {
    pub fn new<T: Serialize>(
        command: &str,
        body: &T,
        csv: String,
        table: String,
        code: i32,
    ) -> Self {
        let env = Envelope {
            schema: udist::SCHEMA,
            command,
            body,
        };
        let mut json = serde_json::to_string_pretty(&env).expect("report serializes");
        json.push('\n');
        Self {
            json,
            csv,
            table,
            code,
        }
    }

    pub fn render(&self, format: Format) -> &str {
        match format {
            Format::Json => &self.json,
            Format::Csv => &self.csv,
            Format::Table => &self.table,
        }
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Rows joined with commas under a header; fields are already formatted.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

/// Left-aligned key/value lines.
pub fn table(pairs: &[(&str, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    s
}

/// Shortest representation that round-trips, in exponent form for very
/// small or large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
