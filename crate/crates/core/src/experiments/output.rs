//! CSV result tables and the JSON metadata sidecar used for replay.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentSpec};
use crate::error::{Error, Result};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A rectangular table of numbers with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        Self {
            name: name.into(),
            columns,
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// CSV text with a header row. Values use the shortest representation
    /// that round-trips, so equal text means bit-equal data.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }

    /// Parses CSV produced by [`ResultTable::to_csv`].
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| {
                rec?.iter()
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("`{v}`: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self::new(name, columns, rows))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetadata {
    pub engine_version: String,
    pub spec: ExperimentSpec,
    pub wall_clock_seconds: f64,
    /// Data files, relative to the sidecar's directory.
    #[serde(default)]
    pub files: Vec<String>,
}

impl ExperimentMetadata {
    pub fn new(spec: ExperimentSpec, wall_clock_seconds: f64) -> Self {
        Self {
            engine_version: ENGINE_VERSION.to_string(),
            spec,
            wall_clock_seconds,
            files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub metadata: ExperimentMetadata,
    /// The first table is the main data file.
    pub tables: Vec<ResultTable>,
}

/// `data.csv` → `data.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Path of table `index`: the main file itself, or `<stem>.<name>.csv`.
pub fn table_path(out: &Path, index: usize, table: &ResultTable) -> PathBuf {
    if index == 0 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    out.with_file_name(format!("{stem}.{}.csv", table.name))
}

/// Writes every table as CSV plus the JSON sidecar next to `out`. Returns
/// the sidecar path.
pub fn write_results(output: &ExperimentOutput, out: &Path) -> Result<PathBuf> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut metadata = output.metadata.clone();
    metadata.files.clear();
    for (i, table) in output.tables.iter().enumerate() {
        let path = table_path(out, i, table);
        fs::write(&path, table.to_csv()?)?;
        metadata.files.push(
            path.file_name()
                .expect("table path has a file name")
                .to_string_lossy()
                .into_owned(),
        );
    }
    let sidecar = sidecar_path(out);
    fs::write(&sidecar, serde_json::to_string_pretty(&metadata)? + "\n")?;
    Ok(sidecar)
}

pub fn read_metadata(sidecar: &Path) -> Result<ExperimentMetadata> {
    Ok(serde_json::from_str(&fs::read_to_string(sidecar)?)?)
}

/// Re-runs the experiment recorded in a sidecar.
pub fn replay(sidecar: &Path) -> Result<ExperimentOutput> {
    run_experiment(&read_metadata(sidecar)?.spec)
}

/// Re-runs the experiment recorded in a sidecar and checks that every
/// regenerated table is byte-identical to the stored CSV. Returns the
/// names of the files that differ.
pub fn verify_replay(sidecar: &Path) -> Result<Vec<String>> {
    let metadata = read_metadata(sidecar)?;
    let output = run_experiment(&metadata.spec)?;
    if output.tables.len() != metadata.files.len() {
        return Err(Error::Config(format!(
            "sidecar lists {} files but the experiment produces {} tables",
            metadata.files.len(),
            output.tables.len()
        )));
    }
    let dir = sidecar.parent().unwrap_or(Path::new(""));
    let mut mismatched = Vec::new();
    for (file, table) in metadata.files.iter().zip(&output.tables) {
        if fs::read_to_string(dir.join(file))? != table.to_csv()? {
            mismatched.push(file.clone());
        }
    }
    Ok(mismatched)
}

#[cfg(test)]
mod tests {
    use super::super::{ExperimentKind, RawConfig};
    use super::*;

    #[test]
    fn csv_round_trips_bit_exactly() {
        let t = ResultTable::new(
            "x",
            vec!["a".into(), "b".into()],
            vec![vec![0.1 + 0.2, f64::INFINITY], vec![1e-300, -0.0]],
        );
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("a,b\n"));
        let back = ResultTable::from_csv("x", &text).unwrap();
        assert_eq!(back.rows[0][0].to_bits(), t.rows[0][0].to_bits());
        assert_eq!(back.rows[0][1], f64::INFINITY);
        assert_eq!(back.rows[1][1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn sidecar_round_trips_spec_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("td.csv");
        let spec = RawConfig::from_toml_str(
            "q = [0.6, \"inf\"]\nsigma2 = [0, 10]\nsteps = 120\nensemble = 3",
        )
        .unwrap()
        .resolve(ExperimentKind::TraceDistance)
        .unwrap();
        let output = run_experiment(&spec).unwrap();
        let sidecar = write_results(&output, &out).unwrap();
        assert_eq!(sidecar, dir.path().join("td.json"));
        assert!(dir.path().join("td.fits.csv").exists());

        let meta = read_metadata(&sidecar).unwrap();
        assert_eq!(meta.spec, spec);
        assert_eq!(meta.files, vec!["td.csv", "td.fits.csv"]);
        assert!(verify_replay(&sidecar).unwrap().is_empty());
        assert_eq!(replay(&sidecar).unwrap().tables, output.tables);
    }

    #[test]
    fn tampered_data_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let spec = RawConfig::from_toml_str(
            "theta-grid = [45]\nomega-grid = [90]\nsteps = 30\nensemble = 2",
        )
        .unwrap()
        .resolve(ExperimentKind::Surface)
        .unwrap();
        let sidecar = write_results(&run_experiment(&spec).unwrap(), &out).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        fs::write(&out, text.replacen("45", "46", 1)).unwrap();
        assert_eq!(verify_replay(&sidecar).unwrap(), vec!["s.csv"]);
    }
}
