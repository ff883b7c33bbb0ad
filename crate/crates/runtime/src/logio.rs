//! JSONL episode log files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dpt_core::log::{EpisodeLog, LogError, LogRecord};
use thiserror::Error;

/// Appends one record per line.
pub struct LogWriter {
    out: BufWriter<Box<dyn Write + Send>>,
}

impl LogWriter {
    pub fn new(out: impl Write + Send + 'static) -> LogWriter {
        LogWriter { out: BufWriter::new(Box::new(out)) }
    }

    pub fn create(path: &Path) -> io::Result<LogWriter> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(LogWriter::new(File::create(path)?))
    }

    pub fn write(&mut self, record: &LogRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("cannot read log: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Log(#[from] LogError),
}

/// Parses JSONL records. A malformed final line is taken as a write cut short by a
/// crash and dropped; malformed lines elsewhere are errors.
pub fn parse_records(reader: impl BufRead) -> Result<Vec<LogRecord>, ReadError> {
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut records = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => records.push(r),
            Err(_) if Some(i) == last => tracing::warn!(line = i + 1, "dropping truncated final record"),
            Err(source) => return Err(ReadError::Parse { line: i + 1, source }),
        }
    }
    Ok(records)
}

pub fn read_log(path: &Path) -> Result<EpisodeLog, ReadError> {
    let records = parse_records(BufReader::new(File::open(path)?))?;
    Ok(EpisodeLog::from_records(records)?)
}

pub fn write_log(path: &Path, log: &EpisodeLog) -> io::Result<()> {
    let mut w = LogWriter::create(path)?;
    for r in log.records() {
        w.write(&r)?;
    }
    w.flush()
}
