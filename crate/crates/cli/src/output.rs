//! Atomic file output and CSV formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use fuse_core::Result;

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// `# fuse <version> <command> key=value ...`
pub fn header_comment(command: &str, settings: &[(&str, String)]) -> String {
    let mut line = format!("# fuse {} {command}", env!("CARGO_PKG_VERSION"));
    for (k, v) in settings {
        line.push_str(&format!(" {k}={v}"));
    }
    line
}

/// Joins the header comment, column header and rows with LF endings.
pub fn csv_document(comment: &str, header: &str, rows: &[String]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 2));
    s.push_str(comment);
    s.push('\n');
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.csv");
        assert!(write_atomic(&path, "x").is_err());
        assert!(!path.exists());
    }
}
