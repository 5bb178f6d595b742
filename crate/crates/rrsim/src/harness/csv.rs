//! Minimal CSV assembly: fixed column order, UTF-8, deterministic output
//! for deterministic inputs. Fields containing separators or quotes are
//! quoted with doubled inner quotes.

use std::io::Write as _;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Table {
        Table { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    /// Append one row; panics if the width disagrees with the header (a
    /// programming error in the suite, not a data condition).
    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        assert_eq!(
            cells.len(),
            self.header.len(),
            "row width {} != header width {}",
            cells.len(),
            self.header.len()
        );
        self.rows.push(cells.iter().map(|s| s.as_ref().to_string()).collect());
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        push_line(&mut out, &self.header);
        for r in &self.rows {
            push_line(&mut out, r);
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }
}

fn push_line(out: &mut String, cells: &[String]) {
    for (i, c) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if c.contains(',') || c.contains('"') || c.contains('\n') {
            out.push('"');
            out.push_str(&c.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(c);
        }
    }
    out.push('\n');
}

/// Stable float formatting for CSV cells: six decimal places.
pub fn num(v: f64) -> String {
    format!("{v:.6}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_and_escaping() {
        let t = Table::new(&["a", "b"]);
        assert!(t.is_empty());
        assert_eq!(t.to_csv(), "a,b\n");
        let mut t = Table::new(&["x", "note"]);
        t.row(&["1", "plain"]);
        t.row(&["2", "has,comma"]);
        t.row(&["3", "has\"quote"]);
        assert_eq!(t.len(), 3);
        assert_eq!(t.to_csv(), "x,note\n1,plain\n2,\"has,comma\"\n3,\"has\"\"quote\"\n");
    }

    #[test]
    fn number_format_is_stable() {
        assert_eq!(num(1.0), "1.000000");
        assert_eq!(num(0.125), "0.125000");
        assert_eq!(num(-2.5e-7), "-0.000000");
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn width_mismatch_panics() {
        let mut t = Table::new(&["only"]);
        t.row(&["a", "b"]);
    }
}
