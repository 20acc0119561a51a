//! Output files. Every file is written beside a temporary name and renamed
//! into place, so an interrupted run never leaves a truncated CSV.

use std::path::{Path, PathBuf};

use menusize::duality::instance_constants;

use crate::{CliError, CliResult, OUT_DIR_ENV};

pub struct Output {
    dir: PathBuf,
}

/// Shortest round-trip decimal form; deterministic across runs.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn tmp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp"))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let tmp = tmp_path(path);
    std::fs::write(&tmp, bytes).map_err(|e| CliError::Input(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::Input(format!("renaming to {}: {e}", path.display())))
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        let dir = dir
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Input(format!("creating {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            if r.len() != header.len() {
                return Err(CliError::Invariant(format!("{name}: row has {} fields, header {}", r.len(), header.len())));
            }
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        let path = self.path(name);
        write_atomic(&path, &bytes)?;
        Ok(path)
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// `<stem>.manifest` beside the primary output. The `key=value` lines are
    /// the resolved flags, so `--config <manifest>` repeats the run; run
    /// facts and the instance constants go in comment lines.
    pub fn write_manifest(
        &self,
        primary: &str,
        command: &str,
        flags: &[(&str, String)],
        facts: &[(&str, String)],
    ) -> CliResult<PathBuf> {
        let k = instance_constants();
        let mut s = String::from("# menusize run manifest\n");
        s.push_str(&format!("# command={command}\n"));
        s.push_str(&format!("# version={}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!(
            "# constants x_prime={} c_diag={} r={} d={} delta_max={} audit_grid={}x{}\n",
            k.x_prime, k.c_diag, k.r, k.d, k.delta_max, k.audit_grid.0, k.audit_grid.1
        ));
        for (key, v) in facts {
            s.push_str(&format!("# {key}={v}\n"));
        }
        s.push_str(&format!("out-dir={}\n", self.dir.display()));
        for (key, v) in flags {
            s.push_str(&format!("{key}={v}\n"));
        }
        let stem = primary.rsplit_once('.').map_or(primary, |(a, _)| a);
        self.write_text(&format!("{stem}.manifest"), &s)
    }
}
