use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Serialize)]
struct Rows<'a, T: Serialize> {
    rows: &'a [T],
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    summary: &'a T,
}

/// JSON documents carry `schema` and `command` at top level; CSV output is
/// one header row plus records.
pub struct Sink {
    out: Box<dyn Write>,
    format: Format,
    csv_started: bool,
}

impl Sink {
    pub fn new(out: Box<dyn Write>, format: Format) -> Self {
        Sink {
            out,
            format,
            csv_started: false,
        }
    }

    fn json<T: Serialize>(&mut self, command: &str, body: &T, pretty: bool) -> io::Result<()> {
        let env = Envelope {
            schema: SCHEMA,
            command,
            body,
        };
        if pretty {
            serde_json::to_writer_pretty(&mut self.out, &env)?;
        } else {
            serde_json::to_writer(&mut self.out, &env)?;
        }
        writeln!(self.out)
    }

    fn csv<R: Serialize>(&mut self, rows: impl Iterator<Item = R>) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(!self.csv_started)
            .from_writer(&mut self.out);
        for r in rows {
            w.serialize(r).map_err(io::Error::other)?;
        }
        w.flush()?;
        self.csv_started = true;
        Ok(())
    }

    /// A single report (JSON) or its per-row view (CSV).
    pub fn document<T: Serialize, R: Serialize>(
        &mut self,
        command: &str,
        body: &T,
        rows: impl Iterator<Item = R>,
    ) -> io::Result<()> {
        match self.format {
            Format::Json => self.json(command, body, true),
            Format::Csv => self.csv(rows),
        }
    }

    /// A list of records: `{"rows": [...]}` in JSON.
    pub fn table<T: Serialize, R: Serialize>(
        &mut self,
        command: &str,
        rows_json: &[T],
        rows_csv: impl Iterator<Item = R>,
    ) -> io::Result<()> {
        match self.format {
            Format::Json => self.json(command, &Rows { rows: rows_json }, true),
            Format::Csv => self.csv(rows_csv),
        }
    }

    /// One JSON object per line, or CSV records.
    pub fn lines<T: Serialize>(&mut self, command: &str, items: &[T]) -> io::Result<()> {
        match self.format {
            Format::Json => items.iter().try_for_each(|it| self.json(command, it, false)),
            Format::Csv => self.csv(items.iter()),
        }
    }

    /// Closing JSON line; CSV output has no trailer.
    pub fn trailer<T: Serialize>(&mut self, command: &str, summary: &T) -> io::Result<()> {
        match self.format {
            Format::Json => self.json(command, &Summary { summary }, false),
            Format::Csv => Ok(()),
        }
    }

    pub fn finish(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}
