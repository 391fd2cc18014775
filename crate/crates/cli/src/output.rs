use std::fs;
use std::path::{Path, PathBuf};

use pdp_client::ClientError;
use pdp_core::api::ApiError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] ApiError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Remote(#[from] ClientError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            _ => 2,
        }
    }

    /// `error[code]: message`, mirroring the API error shape.
    pub fn render(&self) -> String {
        let code = match self {
            Self::Usage(_) => "usage".to_string(),
            Self::Pipeline(e) => code_name(e),
            Self::Io { .. } => "io_error".to_string(),
            Self::Remote(ClientError::Api { error, .. }) => code_name(error),
            Self::Remote(_) => "transport".to_string(),
        };
        let message = match self {
            Self::Pipeline(e) | Self::Remote(ClientError::Api { error: e, .. }) => e.message.clone(),
            other => other.to_string(),
        };
        format!("error[{code}]: {message}")
    }
}

fn code_name(e: &ApiError) -> String {
    serde_json::to_value(e.code)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "internal".into())
}

pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize")
}

/// Writes every file or none: contents go to temporary siblings first and are
/// renamed into place only once all writes succeeded.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (path, bytes) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            if let Err(e) = fs::create_dir_all(dir) {
                cleanup(&staged);
                return Err(CliError::io(dir, e));
            }
        }
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
        if let Err(e) = fs::write(&tmp, bytes) {
            cleanup(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(&tmp, e));
        }
        staged.push((tmp, path.clone()));
    }
    for (i, (tmp, dest)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, dest) {
            cleanup(&staged[i..]);
            return Err(CliError::io(dest, e));
        }
    }
    Ok(())
}

/// Left-aligned plain-text table.
pub fn table(headers: &[String], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut out = String::new();
        for (i, cell) in cells.iter().enumerate().take(cols) {
            if i + 1 == cols {
                out.push_str(cell);
            } else {
                let pad = widths[i] - cell.chars().count();
                out.push_str(cell);
                out.push_str(&" ".repeat(pad + 2));
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(headers);
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// `1.0` rather than `1` for whole numbers, shortest form otherwise.
pub fn fmt_eps(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.1}")
    } else {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let t = table(
            &["a".into(), "long".into()],
            &[vec!["xyz".into(), "1".into()]],
        );
        assert_eq!(t, "a    long\nxyz  1\n");
    }

    #[test]
    fn atomic_write_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("out/a.txt");
        write_all_atomic(&[(ok.clone(), b"a".to_vec())]).unwrap();
        assert_eq!(fs::read(&ok).unwrap(), b"a");

        // second target sits under a file, so its directory cannot exist
        let blocked = ok.join("b.txt");
        let first = dir.path().join("out/c.txt");
        assert!(write_all_atomic(&[(first.clone(), b"c".to_vec()), (blocked, b"b".to_vec())]).is_err());
        assert!(!first.exists());
        let leftovers: Vec<_> = fs::read_dir(dir.path().join("out")).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn epsilon_formatting() {
        assert_eq!(fmt_eps(1.0), "1.0");
        assert_eq!(fmt_eps(0.1), "0.1");
        assert_eq!(fmt_eps(1.5), "1.5");
    }
}
