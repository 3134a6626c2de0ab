use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const EXPLAIN_SCHEMA: &str = "sst.explain/v1";
pub const ORACLE_SCHEMA: &str = "sst.oracle/v1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Binary PGM (`P5`, maxval 255): selected features are 255, the rest 0.
pub fn mask_pgm(selected: &[bool], height: usize, width: usize) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(selected.iter().map(|&s| if s { 255u8 } else { 0 }));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub schema: &'static str,
    pub predicted_class: usize,
    /// Ascending feature indices.
    pub subset: Vec<usize>,
    pub size_pct: f64,
    pub threshold: f64,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleInstance {
    pub index: usize,
    pub predicted_class: usize,
    pub greedy: Option<Vec<usize>>,
    pub greedy_passes: Option<bool>,
    /// `None` with `oracle_found == Some(false)` when no subset within the budget suffices.
    pub oracle: Option<Vec<usize>>,
    pub oracle_found: Option<bool>,
    pub oracle_passes: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub schema: &'static str,
    pub check: String,
    pub budget: Option<usize>,
    pub instances: Vec<OracleInstance>,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, |v| v.to_string())
}

impl OracleReport {
    pub fn summary_csv(&self) -> String {
        let mut out = format!(
            "# schema={ORACLE_SCHEMA} check={} budget={}\nindex,predicted_class,greedy_size,greedy_passes,oracle_size,oracle_passes\n",
            self.check,
            opt(&self.budget)
        );
        for i in &self.instances {
            let oracle_size = match (&i.oracle, i.oracle_found) {
                (Some(s), _) => s.len().to_string(),
                (None, Some(false)) => "none".to_string(),
                _ => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i.index,
                i.predicted_class,
                opt(&i.greedy.as_ref().map(Vec::len)),
                opt(&i.greedy_passes),
                oracle_size,
                opt(&i.oracle_passes)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let pgm = mask_pgm(&[true, false, false, true, true, false], 2, 3);
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[255, 0, 0, 255, 255, 0]);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
