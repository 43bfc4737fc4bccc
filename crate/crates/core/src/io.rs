//! Line-delimited JSON records and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, path)
}

pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("records serialize"));
        s.push('\n');
    }
    s
}

fn stage(path: &Path, contents: &[u8]) -> Result<tempfile::NamedTempFile> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    Ok(tmp)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    stage(path, contents)?.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes a batch of files. Every file is staged before any is renamed into
/// place, so a write error leaves none of them behind.
pub fn write_all_atomic(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    let staged = files
        .iter()
        .map(|(name, body)| stage(&dir.join(name), body.as_bytes()))
        .collect::<Result<Vec<_>>>()?;
    for (tmp, (name, _)) in staged.into_iter().zip(files) {
        let path = dir.join(name);
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ImuSample;

    #[test]
    fn roundtrip_and_blank_lines() {
        let items = vec![ImuSample { frame_index: 3, ax: 0.1, ay: -1.0 / 3.0, az: 1e-300 }, ImuSample::zero(4)];
        let text = to_jsonl(&items) + "\n  \n";
        let back: Vec<ImuSample> = parse_jsonl(&text, Path::new("x")).unwrap();
        assert_eq!(back, items);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\"frame_index\":0,\"ax\":0,\"ay\":0,\"az\":0}\n\nnot json\n";
        let err = parse_jsonl::<ImuSample>(text, Path::new("imu.jsonl")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
