//! Report tables (methods × settings per metric) and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluate::CvResult;
use super::prelim::RegressionSummary;
use super::HarnessError;
use crate::hashing::sha256_hex;

pub const CV_RESULT_FILE: &str = "cv_result.json";
pub const TABLES_FILE: &str = "error_tables.json";
pub const REGRESSIONS_FILE: &str = "regressions.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Rows are methods, columns are settings. `best[j]` is the row with the
/// lowest error in column `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub metric: String,
    pub settings: Vec<String>,
    pub methods: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub best: Vec<Option<usize>>,
}

impl ErrorTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("method,{}\n", self.settings.join(","));
        for (i, m) in self.methods.iter().enumerate() {
            out.push_str(m);
            for (j, v) in self.values[i].iter().enumerate() {
                match v {
                    Some(v) => {
                        out.push_str(&format!(",{v:.4}"));
                        if self.best[j] == Some(i) {
                            out.push('*');
                        }
                    }
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `metric` is `rmse` or `mae`.
pub fn error_table(result: &CvResult, metric: &str) -> Result<ErrorTable, HarnessError> {
    let pick = |c: &super::evaluate::CellResult| match metric {
        "rmse" => Ok(c.rmse),
        "mae" => Ok(c.mae),
        other => Err(HarnessError::Grid(format!("unknown metric `{other}`"))),
    };
    let mut values = Vec::with_capacity(result.methods.len());
    for &m in &result.methods {
        let mut row = Vec::with_capacity(result.settings.len());
        for &s in &result.settings {
            row.push(match result.cell(s, m) {
                Some(c) => pick(c)?,
                None => None,
            });
        }
        values.push(row);
    }
    let best = (0..result.settings.len())
        .map(|j| {
            let mut b: Option<(usize, f64)> = None;
            for (i, row) in values.iter().enumerate() {
                if let Some(v) = row[j] {
                    if b.is_none_or(|(_, bv)| v < bv) {
                        b = Some((i, v));
                    }
                }
            }
            b.map(|(i, _)| i)
        })
        .collect();
    Ok(ErrorTable {
        metric: metric.to_string(),
        settings: result
            .settings
            .iter()
            .map(|s| s.name().to_string())
            .collect(),
        methods: result.methods.iter().map(|m| m.tag().to_string()).collect(),
        values,
        best,
    })
}

fn io(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, HarnessError> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| io(&p, e))?;
    Ok(p)
}

/// Writes the full result, both error tables as JSON and one CSV per metric.
/// Returns the written paths.
pub fn write_report(result: &CvResult, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let tables = [error_table(result, "rmse")?, error_table(result, "mae")?];
    let mut out = vec![write(
        dir,
        CV_RESULT_FILE,
        &serde_json::to_string_pretty(result).expect("serializable"),
    )?];
    out.push(write(
        dir,
        TABLES_FILE,
        &serde_json::to_string_pretty(&tables).expect("serializable"),
    )?);
    for t in &tables {
        out.push(write(dir, &format!("table_{}.csv", t.metric), &t.to_csv())?);
    }
    Ok(out)
}

pub fn write_regressions(
    summaries: &[RegressionSummary],
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut csv = String::from("model,n_columns,r2,adj_r2\n");
    for s in summaries {
        csv.push_str(&format!(
            "{},{},{:.4},{:.4}\n",
            s.name, s.n_columns, s.r2, s.adj_r2
        ));
    }
    Ok(vec![
        write(
            dir,
            REGRESSIONS_FILE,
            &serde_json::to_string_pretty(summaries).expect("serializable"),
        )?,
        write(dir, "regressions.csv", &csv)?,
    ])
}

/// One command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub command: String,
    pub config_hash: String,
    pub rng_seed: u64,
    /// Path → SHA-256 of every input read.
    pub inputs: BTreeMap<String, String>,
    /// Path → SHA-256 of every artifact written.
    pub outputs: BTreeMap<String, String>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub entries: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<RunManifest, HarnessError> {
        let p = dir.join(MANIFEST_FILE);
        if !p.exists() {
            return Ok(RunManifest::default());
        }
        let text = fs::read_to_string(&p).map_err(|e| io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        write(
            dir,
            MANIFEST_FILE,
            &serde_json::to_string_pretty(self).expect("serializable"),
        )
    }

    /// Append an entry to the manifest stored in `dir`.
    pub fn record(dir: &Path, entry: ManifestEntry) -> Result<(), HarnessError> {
        let mut m = RunManifest::load(dir)?;
        m.entries.push(entry);
        m.save(dir).map(|_| ())
    }
}

/// SHA-256 of a file, or of every file below a directory in path order.
pub fn hash_path(path: &Path) -> Result<String, HarnessError> {
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, &mut files).map_err(|e| io(path, e))?;
        files.sort();
        let mut acc = String::new();
        for f in files {
            let rel = f.strip_prefix(path).unwrap_or(&f).display().to_string();
            acc.push_str(&format!("{rel}:{}\n", hash_path(&f)?));
        }
        Ok(sha256_hex(acc.as_bytes()))
    } else {
        let bytes = fs::read(path).map_err(|e| io(path, e))?;
        Ok(sha256_hex(&bytes))
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Setting;
    use crate::harness::evaluate::{CellResult, LeakageAudit};
    use crate::modelzoo::Method;

    fn result() -> CvResult {
        let cell = |s, m, r: Option<f64>| CellResult {
            setting: s,
            method: m,
            rmse: r,
            mae: r.map(|v| v / 2.0),
            fold_rmse: vec![r],
            fold_mae: vec![r.map(|v| v / 2.0)],
            chosen: vec![None],
            errors: vec![],
        };
        CvResult {
            k_outer: 1,
            k_inner: 5,
            rng_seed: 0,
            settings: vec![Setting::All, Setting::Common],
            methods: vec![Method::Lm, Method::Xgb],
            fold_sizes: vec![10],
            cells: vec![
                cell(Setting::All, Method::Lm, Some(0.6)),
                cell(Setting::Common, Method::Lm, Some(0.7)),
                cell(Setting::All, Method::Xgb, Some(0.5)),
                cell(Setting::Common, Method::Xgb, None),
            ],
            audit: LeakageAudit::default(),
        }
    }

    #[test]
    fn table_layout_and_stars() {
        let t = error_table(&result(), "rmse").unwrap();
        assert_eq!(t.best, vec![Some(1), Some(0)]);
        assert_eq!(
            t.to_csv(),
            "method,all,common\nlm,0.6000,0.7000*\nxgb,0.5000*,NA\n"
        );
        assert!(error_table(&result(), "r2").is_err());
    }

    #[test]
    fn reports_are_byte_stable() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let a = write_report(&result(), d1.path()).unwrap();
        let b = write_report(&result(), d2.path()).unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        assert_eq!(hash_path(d1.path()).unwrap(), hash_path(d2.path()).unwrap());
    }

    #[test]
    fn manifest_appends() {
        let d = tempfile::tempdir().unwrap();
        let e = ManifestEntry {
            command: "cv".into(),
            config_hash: "h".into(),
            rng_seed: 1,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            wall_time_secs: 0.5,
        };
        RunManifest::record(d.path(), e.clone()).unwrap();
        RunManifest::record(d.path(), e).unwrap();
        assert_eq!(RunManifest::load(d.path()).unwrap().entries.len(), 2);
    }
}
