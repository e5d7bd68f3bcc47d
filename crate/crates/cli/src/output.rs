use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::svg::Plot;

/// Formats a value for CSV: `Display` gives the shortest round-trip decimal
/// for floats and never uses locale separators.
pub fn cell(v: impl Display) -> String {
    v.to_string()
}

#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::output::cell($v)),*] };
}

/// Output directory plus the list of files written into it.
pub struct Output {
    dir: PathBuf,
    svg: bool,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, svg: bool) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            svg,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let to_io = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(&path).map_err(to_io)?;
        w.write_record(header).map_err(to_io)?;
        for r in rows {
            w.write_record(&r).map_err(to_io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> CliResult<()> {
        if !self.svg {
            return Ok(());
        }
        self.write(name, &plot.render())
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct RunInfo {
    pub subcommand: String,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    run: &'a RunInfo,
    config: &'a C,
}

pub fn write_manifest<C: Serialize>(out: &mut Output, run: &RunInfo, config: &C) -> CliResult<()> {
    let text = toml::to_string(&Manifest { run, config })
        .map_err(|e| CliError::config(format!("cannot serialize manifest: {e}")))?;
    out.write("manifest.toml", &text)
}
