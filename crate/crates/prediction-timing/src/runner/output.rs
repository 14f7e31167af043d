//! Artifact formatting and atomic file output.
//!
//! Numbers destined for CSV are printed with 12 significant digits in
//! scientific notation, which is locale-free and reparses to the same
//! printed value on any platform. Files are written next to their final
//! path and renamed into place, so a failed run never leaves a partial
//! artifact under the advertised name. Nothing here embeds timestamps or
//! absolute paths: identical configs must produce byte-identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

/// 12 significant digits, scientific, locale-free.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write `bytes` to `path` via a same-directory temp file and rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Write every named artifact into `dir` atomically and return
/// `name -> sha256` in name order.
pub fn write_artifacts(
    dir: &Path,
    artifacts: &BTreeMap<String, Vec<u8>>,
) -> Result<BTreeMap<String, String>> {
    fs::create_dir_all(dir)?;
    let mut hashes = BTreeMap::new();
    for (name, bytes) in artifacts {
        atomic_write(&dir.join(name), bytes)?;
        hashes.insert(name.clone(), sha256_hex(bytes));
    }
    Ok(hashes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_format_is_stable_and_reparses() {
        assert_eq!(fmt_sig(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig(-0.5), "-5.00000000000e-1");
        let x = std::f64::consts::SQRT_2;
        let s = fmt_sig(x);
        assert_eq!(s, "1.41421356237e0");
        let back: f64 = s.parse().unwrap();
        assert!((back - x).abs() < 1e-11);
        // reprinting the reparsed value reproduces the same text
        assert_eq!(fmt_sig(back), s);
    }

    #[test]
    fn sha256_known_value() {
        // sha256 of the empty string
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        atomic_write(&path, b"x,y\n1,2\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"x,y\n1,2\n");
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 1);
    }
}
