//! CSV tables with byte-stable formatting.
//!
//! Every numeric cell is printed as `{:.16e}`, 17 significant digits, which
//! round-trips an f64 exactly; together with fixed '\n' line ends and ','
//! separators, two runs of the same build emit byte-identical files.

use std::fs;
use std::io;
use std::path::Path;

/// Unit conventions stated at the top of every table.
pub const UNITS_COMMENT: &str =
    "units: time in 1/|J|, position in lattice constants a, diffusivity in J*a^2, squared length in a^2";

/// One f64 cell in the fixed CSV format.
pub fn fmt_cell(x: f64) -> String {
    format!("{x:.16e}")
}

/// An in-memory numeric table: '#' comment lines, a header row, f64 rows.
#[derive(Debug, Clone)]
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    /// Empty table over the given columns, with the units comment first.
    pub fn new(columns: Vec<String>) -> Self {
        assert!(!columns.is_empty(), "a table needs at least one column");
        Self {
            comments: vec![UNITS_COMMENT.to_owned()],
            columns,
            rows: Vec::new(),
        }
    }

    /// Appends one '#' comment line above the header.
    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    /// Appends a data row; its arity must match the header.
    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row arity must match the header");
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// The full file contents.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.comments {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for &cell in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&fmt_cell(cell));
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Writes the rendered table to `path`.
    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}
