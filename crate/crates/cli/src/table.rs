//! Row-oriented output: CSV with a config header, or an aligned text table.

use std::io::Write;

use clap::ValueEnum;

use crate::config::HEADER_PREFIX;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Table,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Table => "txt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem when a command writes several tables into a directory.
    pub name: String,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Parsed values of a numeric column; blanks become NaN.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let i = self
            .column(name)
            .unwrap_or_else(|| panic!("no column {name}"));
        self.rows
            .iter()
            .map(|r| r[i].parse().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn write(&self, format: Format, header: &str, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(header, out),
            Format::Table => self.write_text(header, out),
        }
    }

    fn write_preamble(&self, header: &str, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "{HEADER_PREFIX}{header}")?;
        for note in &self.notes {
            writeln!(out, "# {note}")?;
        }
        Ok(())
    }

    fn write_csv(&self, header: &str, out: &mut dyn Write) -> Result<()> {
        self.write_preamble(header, out)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_text(&self, header: &str, out: &mut dyn Write) -> Result<()> {
        self.write_preamble(header, out)?;
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain([self.columns[i].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String], out: &mut dyn Write| -> std::io::Result<()> {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            writeln!(out, "{}", padded.join("  ").trim_end())
        };
        line(&self.columns, out)?;
        for row in &self.rows {
            line(row, out)?;
        }
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("t", &["a", "label"]).note("panel: demo");
        t.push(vec![num(0.1), "x,y".into()]);
        t.push(vec![opt(None), "z".into()]);
        t
    }

    #[test]
    fn csv_has_header_notes_and_quoting() {
        let mut buf = Vec::new();
        sample().write(Format::Csv, "{}", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# config: {}\n# panel: demo\na,label\n0.1,\"x,y\"\n,z\n"
        );
    }

    #[test]
    fn text_table_aligns() {
        let mut buf = Vec::new();
        sample().write(Format::Table, "{}", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("  a  label\n0.1    x,y\n"), "{text}");
    }

    #[test]
    fn floats_parse_blanks_as_nan() {
        let v = sample().floats("a");
        assert_eq!(v[0], 0.1);
        assert!(v[1].is_nan());
    }
}
