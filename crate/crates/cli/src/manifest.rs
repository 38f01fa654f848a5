use std::path::Path;

use sha2::{Digest, Sha256};
use srmt_core::Table;

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.csv";

/// Writes `manifest.csv` in `dir`: one row per file with its SHA-256 and,
/// for CSV files, the number of data rows (0 otherwise). `files` are
/// relative to `dir` and listed in the given order.
pub fn write_manifest(dir: &Path, files: &[String]) -> CliResult<Table> {
    let mut table = Table::new(["file", "sha256", "rows"]);
    for name in files {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let rows = if name.ends_with(".csv") {
            Table::read(bytes.as_slice())?.len()
        } else {
            0
        };
        table.push(vec![
            name.as_str().into(),
            hex::encode(Sha256::digest(&bytes)).into(),
            rows.into(),
        ]);
    }
    table.write_path(dir.join(MANIFEST))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x,y\n1,2\n3,4\n").unwrap();
        std::fs::write(dir.path().join("b.svg"), "<svg/>").unwrap();
        let t = write_manifest(dir.path(), &["a.csv".into(), "b.svg".into()]).unwrap();
        assert_eq!(t.rows[0][2], "2");
        assert_eq!(t.rows[1][2], "0");
        assert_eq!(
            t.rows[1][1],
            hex::encode(Sha256::digest(b"<svg/>"))
        );
        let back = Table::read_path(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(back, t);
    }
}
