use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{ClassLabel, Feature, TabularRecord, N_FEATURES};
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "record_id,path,label,gender,age,P_AXIS,P_DUR,P_ONSET,P_OFFSET,PR_INT,QRS_AXIS,QRS_DUR,QRS_ONSET,QRS_OFFSET,QT_INT,QTC_INT,RR_INTERVAL,T_AXIS,T_OFFSET,V_RATE";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub record_id: String,
    /// Waveform location; relative paths are resolved against the manifest directory.
    pub path: PathBuf,
    pub label: ClassLabel,
    pub tabular: TabularRecord,
}

/// Ordered, id-unique list of exams.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    rows: Vec<ManifestRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub af0: usize,
    pub af1: usize,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            if let Some(first) = seen.insert(&r.record_id, i) {
                return Err(Error::DuplicateRecord {
                    id: r.record_id.clone(),
                    first: first + 2,
                    second: i + 2,
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn counts(&self) -> ClassCounts {
        let af1 = self.rows.iter().filter(|r| r.label == ClassLabel::Af1).count();
        ClassCounts {
            af0: self.rows.len() - af1,
            af1,
        }
    }

    pub fn get(&self, record_id: &str) -> Option<&ManifestRow> {
        self.rows.iter().find(|r| r.record_id == record_id)
    }

    /// Parses manifest text. Line numbers in errors are 1-based and count the header.
    pub fn parse(text: &str, source: &Path, base_dir: &Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == MANIFEST_HEADER => {}
            Some(_) => return Err(perr(1, "header does not match the manifest schema".into())),
            None => return Err(perr(1, "empty manifest".into())),
        }
        let mut rows = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 + N_FEATURES {
                return Err(perr(
                    lineno,
                    format!("expected {} columns, found {}", 3 + N_FEATURES, cells.len()),
                ));
            }
            let record_id = cells[0].trim().to_string();
            if record_id.is_empty() {
                return Err(perr(lineno, "empty record_id".into()));
            }
            if let Some(&first) = seen.get(&record_id) {
                return Err(Error::DuplicateRecord {
                    id: record_id,
                    first,
                    second: lineno,
                });
            }
            let label: ClassLabel = cells[2].parse().map_err(|e| perr(lineno, format!("{e}")))?;
            let mut values = [0.0; N_FEATURES];
            for (j, f) in Feature::ALL.iter().enumerate() {
                let cell = cells[3 + j].trim();
                values[j] = if *f == Feature::Gender {
                    match cell {
                        "M" | "1" => 1.0,
                        "F" | "0" => 0.0,
                        other => return Err(perr(lineno, format!("gender {other:?} not in {{M,F}}"))),
                    }
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| perr(lineno, format!("non-numeric {} cell {cell:?}", f.column())))?
                };
            }
            let tabular = TabularRecord::new(values).map_err(|e| perr(lineno, e.to_string()))?;
            let raw = PathBuf::from(cells[1].trim());
            let path = if raw.is_absolute() {
                raw
            } else {
                base_dir.join(raw)
            };
            seen.insert(record_id.clone(), lineno);
            rows.push(ManifestRow {
                record_id,
                path,
                label,
                tabular,
            });
        }
        Ok(Self { rows })
    }

    /// Renders the manifest with paths relative to `base_dir`, so a directory tree can be
    /// moved as a whole.
    pub fn to_csv(&self, base_dir: &Path) -> String {
        let absolute = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
        let base = absolute(base_dir);
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(MANIFEST_HEADER);
        s.push('\n');
        for r in &self.rows {
            let full = absolute(&r.path);
            let path = pathdiff::diff_paths(&full, &base).unwrap_or(full);
            write!(s, "{},{},{}", r.record_id, path.display(), r.label).unwrap();
            for f in Feature::ALL {
                let v = r.tabular.get(f);
                if f == Feature::Gender {
                    s.push_str(if v == 1.0 { ",M" } else { ",F" });
                } else {
                    write!(s, ",{v}").unwrap();
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new("."));
        fs::write(path, self.to_csv(base)).map_err(|e| Error::io(path, e))
    }
}

/// Reads a manifest file and checks that every waveform path exists.
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let manifest = Manifest::parse(&text, path, base)?;
    for (i, r) in manifest.rows().iter().enumerate() {
        if !r.path.is_file() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("waveform {} not found", r.path.display()),
            });
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW_TAIL: &str = "M,75,59,119,283,401,169,18,98,453,551,393,415,831,57,845,72";

    fn text(rows: &[(&str, &str)]) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n");
        for (id, label) in rows {
            s.push_str(&format!("{id},{id}.ecg,{label},{ROW_TAIL}\n"));
        }
        s
    }

    fn parse(t: &str) -> Result<Manifest> {
        Manifest::parse(t, Path::new("m.csv"), Path::new("/data"))
    }

    #[test]
    fn three_rows_parse_in_order() {
        let m = parse(&text(&[("a", "0"), ("b", "1"), ("c", "0")])).unwrap();
        assert_eq!(m.counts(), ClassCounts { af0: 2, af1: 1 });
        let ids: Vec<_> = m.rows().iter().map(|r| r.record_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(m.rows()[1].path, PathBuf::from("/data/b.ecg"));
        assert_eq!(m.rows()[0].tabular.get(Feature::RrInterval), 831.0);
    }

    #[test]
    fn duplicate_id_names_both_lines() {
        let err = parse(&text(&[("a", "0"), ("b", "1"), ("a", "0")])).unwrap_err();
        match err {
            Error::DuplicateRecord { id, first, second } => {
                assert_eq!((id.as_str(), first, second), ("a", 2, 4));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let t = text(&[("a", "0"), ("b", "2")]);
        let err = parse(&t).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("label"), "{err}");

        let t = text(&[("a", "0")]).replace(",169,", ",abc,");
        let err = parse(&t).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("PR_INT"), "{err}");

        assert!(parse("record_id,path\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = parse(&text(&[("a", "0"), ("b", "1")])).unwrap();
        let back = parse(&m.to_csv(Path::new("/data"))).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sibling_directories_are_written_relative() {
        let m = Manifest::parse(&text(&[("a", "0")]), Path::new("m.csv"), Path::new("/w/data")).unwrap();
        let csv = m.to_csv(Path::new("/w/splits"));
        assert!(
            csv.lines().nth(1).unwrap().starts_with("a,../data/a.ecg,0,"),
            "{csv}"
        );
        let back = Manifest::parse(&csv, Path::new("m.csv"), Path::new("/w/splits")).unwrap();
        assert_eq!(back.rows()[0].path, Path::new("/w/splits/../data/a.ecg"));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            read_manifest(Path::new("/nonexistent/manifest.csv")),
            Err(Error::Io { .. })
        ));
    }
}
