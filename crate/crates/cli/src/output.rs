//! Run directory and the `summary.txt` key/value block.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nems_squeeze_core::hilbert::{DensityMatrix, OperatorMatrix, C64};
use nems_squeeze_core::trajectory::fmt_sig12;

pub const SUMMARY_FILE: &str = "summary.txt";
pub const MIN_STATE_FILE: &str = "rho_min.csv";

pub struct RunDir {
    pub path: PathBuf,
    summary: File,
}

impl RunDir {
    /// Creates the directory and starts a fresh summary.
    pub fn create(path: &Path) -> io::Result<Self> {
        fs::create_dir_all(path)?;
        let summary = File::create(path.join(SUMMARY_FILE))?;
        Ok(Self {
            path: path.to_path_buf(),
            summary,
        })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn comment(&mut self, text: &str) -> io::Result<()> {
        writeln!(self.summary, "# {text}")?;
        self.summary.flush()
    }

    pub fn kv(&mut self, key: &str, value: impl Display) -> io::Result<()> {
        writeln!(self.summary, "{key} = {value}")?;
        self.summary.flush()
    }

    pub fn num(&mut self, key: &str, value: f64) -> io::Result<()> {
        self.kv(key, fmt_sig12(value))
    }

    pub fn check(&mut self, name: &str, passed: bool) -> io::Result<()> {
        self.kv(&format!("check.{name}"), if passed { "pass" } else { "FAIL" })
    }

    pub fn write_text(&self, name: &str, text: &str) -> io::Result<()> {
        fs::write(self.file(name), text)
    }
}

/// Stores a density matrix as `i,j,re,im` rows with round-trip precision.
pub fn write_density_matrix(path: &Path, rho: &DensityMatrix) -> io::Result<()> {
    let mut f = io::BufWriter::new(File::create(path)?);
    writeln!(f, "i,j,re,im")?;
    let op = rho.as_operator();
    for i in 0..op.dim() {
        for j in 0..op.dim() {
            let z = op.get(i, j);
            writeln!(f, "{i},{j},{:e},{:e}", z.re, z.im)?;
        }
    }
    f.flush()
}

pub fn read_density_matrix(path: &Path) -> Result<DensityMatrix, String> {
    let f = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut entries = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate().skip(1) {
        let line = line.map_err(|e| e.to_string())?;
        let parts: Vec<&str> = line.split(',').collect();
        let bad = || format!("{}:{}: malformed row `{line}`", path.display(), n + 1);
        if parts.len() != 4 {
            return Err(bad());
        }
        let re: f64 = parts[2].parse().map_err(|_| bad())?;
        let im: f64 = parts[3].parse().map_err(|_| bad())?;
        entries.push(C64::new(re, im));
    }
    let dim = (entries.len() as f64).sqrt().round() as usize;
    if dim * dim != entries.len() || dim == 0 {
        return Err(format!("{}: {} entries do not form a square matrix", path.display(), entries.len()));
    }
    DensityMatrix::new(OperatorMatrix::from_rows(dim, &entries))
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads `key = value` from an existing summary.
pub fn read_summary_value(dir: &Path, key: &str) -> Option<String> {
    let text = fs::read_to_string(dir.join(SUMMARY_FILE)).ok()?;
    text.lines().find_map(|l| {
        let (k, v) = l.split_once('=')?;
        (k.trim() == key).then(|| v.trim().to_owned())
    })
}
