//! Output assembly. JSON is built by hand so that key order is fixed and
//! every float carries 17 significant digits; identical runs then produce
//! identical bytes, which is the reproducibility contract of the tool.

use std::fs;
use std::path::Path;

use bellspace_core::qcore::{BlochVector, DensityReport, QubitOperator, Sign};
use bellspace_core::stats::{fmt_g17, ClickCounts, ProbTable};

use crate::CliError;

pub fn num(x: f64) -> String {
    fmt_g17(x)
}

pub fn qstr(s: &str) -> String {
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

pub fn arr<I: IntoIterator<Item = String>>(items: I) -> String {
    let joined: Vec<String> = items.into_iter().collect();
    format!("[{}]", joined.join(","))
}

/// JSON object with insertion-ordered keys.
pub struct Obj {
    parts: Vec<String>,
}

impl Obj {
    pub fn new() -> Obj {
        Obj { parts: Vec::new() }
    }

    pub fn field(mut self, key: &str, value: impl Into<String>) -> Obj {
        self.parts.push(format!("{}:{}", qstr(key), value.into()));
        self
    }

    pub fn num(self, key: &str, value: f64) -> Obj {
        self.field(key, num(value))
    }

    pub fn close(self) -> String {
        format!("{{{}}}", self.parts.join(","))
    }
}

/// Row-major complex 2x2 matrix as nested [re, im] pairs.
pub fn matrix(op: &QubitOperator) -> String {
    let entry = |i: usize, j: usize| {
        let z = op.entry(i, j);
        format!("[{},{}]", num(z.re), num(z.im))
    };
    format!(
        "[[{},{}],[{},{}]]",
        entry(0, 0),
        entry(0, 1),
        entry(1, 0),
        entry(1, 1)
    )
}

pub fn vector(v: &BlochVector) -> String {
    format!("[{},{},{}]", num(v.x), num(v.y), num(v.z))
}

pub fn density_report(r: &DensityReport) -> String {
    Obj::new()
        .num("hermiticity_residual", r.hermiticity_residual)
        .num("trace_residual", r.trace_residual)
        .num("min_eigenvalue", r.min_eigenvalue)
        .close()
}

fn outcome(values: &[Sign]) -> String {
    arr(values.iter().map(|s| s.value().to_string()))
}

pub fn table_json(table: &ProbTable) -> String {
    let mut entries = Vec::with_capacity(table.entries().len());
    for values in table.outcomes() {
        entries.push(
            Obj::new()
                .field("outcome", outcome(&values))
                .num("p", table.get(&values))
                .close(),
        );
    }
    Obj::new()
        .field("axes", arr(table.axes().iter().map(|a| qstr(a))))
        .field("quasi", if table.is_quasi() { "true" } else { "false" })
        .field("entries", arr(entries))
        .close()
}

pub fn counts_json(counts: &ClickCounts) -> String {
    let mut rows = Vec::with_capacity(counts.counts.len());
    let n_axes = counts.axes.len();
    for (index, count) in counts.counts.iter().enumerate() {
        let mut values = Vec::with_capacity(n_axes);
        for axis in 0..n_axes {
            let shift = n_axes - 1 - axis;
            let bit = (index >> shift) & 1;
            values.push(if bit == 0 { "1" } else { "-1" }.to_string());
        }
        rows.push(
            Obj::new()
                .field("outcome", arr(values))
                .field("count", count.to_string())
                .close(),
        );
    }
    Obj::new()
        .field("axes", arr(counts.axes.iter().map(|a| qstr(a))))
        .field("n", counts.n_total.to_string())
        .field("seed", counts.seed.to_string())
        .field("counts", arr(rows))
        .close()
}

/// Prints without panicking when the consumer closes the pipe early
/// (e.g. `bellspace scan ... | head`).
pub fn print_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    match std::io::stdout().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Runtime(format!("stdout: {e}"))),
    }
}

/// Writes to the path when given, stdout otherwise; output always ends with
/// exactly one newline.
pub fn write_output(mut text: String, out: Option<&Path>) -> Result<(), CliError> {
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => print_stdout(&text),
    }
}
