use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use afnet_core::evalx::aggregate_runs;

use crate::commands::{create_out, read_text, write_text, EVAL_REPORT_FILE};
use crate::error::{CliError, CliResult};
use crate::ReportArgs;

pub const SUMMARY_FILE: &str = "summary.txt";

fn parse_eval(dir: &Path) -> CliResult<BTreeMap<String, String>> {
    let path = dir.join(EVAL_REPORT_FILE);
    let text = read_text(&path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Data(format!("{}: line {}: expected key=value", path.display(), i + 1))
        })?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn metric(map: &BTreeMap<String, String>, key: &str, dir: &Path) -> CliResult<f64> {
    map.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Data(format!("{}: missing or bad {key}", dir.display())))
}

/// Mean and standard deviation of ACC and AUC per model and test split, in percent.
pub fn run(a: ReportArgs) -> CliResult<()> {
    // (model, split) -> (acc values, auc values)
    let mut groups: BTreeMap<(String, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for dir in &a.evals {
        let map = parse_eval(dir)?;
        let model = map
            .get("model")
            .cloned()
            .ok_or_else(|| CliError::Data(format!("{}: no model line", dir.display())))?;
        for split in ["test_balanced", "test_unbalanced"] {
            if !map.contains_key(&format!("{split}.auc")) {
                continue;
            }
            let g = groups.entry((model.clone(), split.to_string())).or_default();
            g.0.push(metric(&map, &format!("{split}.acc"), dir)?);
            g.1.push(metric(&map, &format!("{split}.auc"), dir)?);
        }
    }
    let mut out = String::from("model  split            runs  ACC           AUC\n");
    for ((model, split), (acc, area)) in &groups {
        let cell = |v: &[f64]| -> String {
            match aggregate_runs(v) {
                Ok((m, s)) => format!("{:.1} ({:.2})", 100.0 * m, 100.0 * s),
                Err(_) => format!("{:.1}", 100.0 * v[0]),
            }
        };
        let _ = writeln!(
            out,
            "{model:<6} {split:<16} {:<5} {:<13} {}",
            area.len(),
            cell(acc),
            cell(area)
        );
    }
    create_out(&a.out)?;
    write_text(&a.out.join(SUMMARY_FILE), &out)?;
    print!("{out}");
    Ok(())
}
