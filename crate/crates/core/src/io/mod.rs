//! Files: datasets, model persistence, configuration and reports.

mod config;
mod dataset;
mod model;
mod report;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use config::{OutputConfig, RunConfig, SolverConfig};
pub use dataset::{
    load_dataset, read_csv_table, read_phoneme, read_tecator, write_csv, CsvTable, DatasetDescriptor,
    DatasetFormat, GridDecl, LabelMapping, TECATOR_CHANNELS, TECATOR_RECORD,
};
pub use model::{decode_model, encode_model, is_model_file, load_model, save_model, FORMAT_VERSION, MAGIC};
pub use report::{evaluation_lines, selection_lines, write_report, ReportMeta};

use crate::error::Result;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
