//! Output headers and atomic file writes.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Identifies the run that produced an artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub config_hash: String,
    pub seed: u64,
    pub command: String,
    pub effective: serde_json::Value,
}

impl Header {
    pub fn new(command: &str, effective: serde_json::Value, seed: u64) -> Self {
        Header { config_hash: crate::config::config_hash(&effective), seed, command: command.to_string(), effective }
    }

    pub fn csv_preamble(&self) -> String {
        format!(
            "# wallsim {} config_hash={} seed={}\n# effective={}\n",
            self.command,
            self.config_hash,
            self.seed,
            serde_json::to_string(&self.effective).expect("json values serialize")
        )
    }
}

/// `{"header": …, "report": …}` pretty-printed.
pub fn json_document<T: Serialize>(header: &Header, report: &T) -> Vec<u8> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        header: &'a Header,
        report: &'a T,
    }
    let mut out = serde_json::to_vec_pretty(&Doc { header, report }).expect("reports serialize");
    out.push(b'\n');
    out
}

/// CSV with the header as leading comment lines.
pub fn csv_document<T: Serialize>(header: &Header, rows: &[T]) -> std::io::Result<Vec<u8>> {
    let mut out = header.csv_preamble().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r).map_err(std::io::Error::other)?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// Writes to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
