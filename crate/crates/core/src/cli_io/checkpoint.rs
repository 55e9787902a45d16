//! Resumable snapshots on disk.

use std::fs;
use std::path::Path;

use crate::spectral::{Snapshot, SNAPSHOT_VERSION};

use super::CliError;

pub fn checkpoint_write(path: &Path, snap: &Snapshot) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, snap.to_json()).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Read a snapshot, checking its format version and that it describes a
/// valid real-valued spectrum.
pub fn checkpoint_read(path: &Path) -> Result<Snapshot, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::CorruptSnapshot(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| CliError::CorruptSnapshot("missing version".into()))?;
    if version != u64::from(SNAPSHOT_VERSION) {
        return Err(CliError::FormatVersionMismatch { found: version, expected: SNAPSHOT_VERSION });
    }
    let snap: Snapshot = serde_json::from_value(value).map_err(|e| CliError::CorruptSnapshot(e.to_string()))?;
    if snap.re.iter().chain(&snap.im).chain(snap.state.values()).any(|v| !v.is_finite()) {
        return Err(CliError::CorruptSnapshot("non-finite value".into()));
    }
    snap.to_interface().map_err(|e| CliError::CorruptSnapshot(e.to_string()))?;
    Ok(snap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Lattice, SpectralInterface};

    fn sample() -> Snapshot {
        let lat = Lattice::new(1, 16, 2.0 * std::f64::consts::PI).unwrap();
        let mut s = SpectralInterface::from_fn(lat, |x| 0.1 * x[0].sin() + 0.02 * (3.0 * x[0]).cos())
            .with_time(0.25)
            .to_snapshot();
        s.state.insert("nu".into(), 0.01);
        s
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        checkpoint_write(&p, &sample()).unwrap();
        assert_eq!(checkpoint_read(&p).unwrap(), sample());
    }

    #[test]
    fn version_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        let mut s = sample();
        s.version = 7;
        std::fs::write(&p, s.to_json()).unwrap();
        assert!(matches!(checkpoint_read(&p), Err(CliError::FormatVersionMismatch { found: 7, .. })));
        std::fs::write(&p, &sample().to_json()[..40]).unwrap();
        assert!(matches!(checkpoint_read(&p), Err(CliError::CorruptSnapshot(_))));
        let mut s = sample();
        s.re.pop();
        std::fs::write(&p, s.to_json()).unwrap();
        assert!(matches!(checkpoint_read(&p), Err(CliError::CorruptSnapshot(_))));
    }
}
