use std::fs;
use std::io::Write;
use std::path::Path;

use crate::metrics::EpochReport;
use crate::{Error, Result};

use super::train::RunResult;

/// Writes `epochs.csv`, `ledger.csv`, `retained.csv` and `config.echo`.
pub fn emit(run: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut epochs = String::new();
    epochs.push_str(EpochReport::CSV_HEADER);
    epochs.push('\n');
    for r in &run.reports {
        epochs.push_str(&r.csv_row());
        epochs.push('\n');
    }
    write(dir, "epochs.csv", epochs.as_bytes())?;

    let mut ledger = Vec::new();
    run.ledger
        .write_csv(&mut ledger)
        .map_err(|e| Error::io(dir.join("ledger.csv"), e))?;
    write(dir, "ledger.csv", &ledger)?;

    let mut retained = Vec::new();
    let _ = writeln!(retained, "instance");
    for i in &run.retained {
        let _ = writeln!(retained, "{i}");
    }
    write(dir, "retained.csv", &retained)?;

    write(dir, "config.echo", run.config_echo.as_bytes())
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}
