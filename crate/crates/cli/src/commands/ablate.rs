use std::fmt::Write as _;

use afnet_core::data::read_manifest;
use afnet_core::evalx::{run_band_ablation, run_lead_ablation, AblationConfig};

use crate::commands::{
    apply_path, apply_train_flags, base_config, create_out, file_sha256, write_text, TRAIN_KEYS,
};
use crate::error::{CliError, CliResult};
use crate::AblateArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Leads,
    Bands,
}

impl Kind {
    fn stem(self) -> &'static str {
        match self {
            Kind::Leads => "lead_ablation",
            Kind::Bands => "band_ablation",
        }
    }
}

pub fn run(a: AblateArgs, kind: Kind) -> CliResult<()> {
    let mut cfg = base_config(&a.common)?;
    apply_path(&mut cfg, "manifest", &a.manifest);
    apply_train_flags(&mut cfg, &a.train);
    cfg.apply("seeds", a.seeds.as_deref());
    cfg.apply("jobs", a.jobs);
    cfg.apply("test_frac", a.test_frac);
    cfg.apply("unbal_ratio", a.unbal_ratio);
    let manifest_path = cfg.require_path("manifest")?;
    let seed = cfg.seed()?;
    let config = AblationConfig {
        split: cfg.split_config()?,
        train: cfg.train_config()?,
        seeds: cfg.seeds()?,
        filters: cfg.filters()?,
        jobs: cfg.jobs()?,
    };
    let keys: Vec<&str> = ["seed", "test_frac", "unbal_ratio", "filters", "seeds", "manifest"]
        .iter()
        .chain(TRAIN_KEYS)
        .copied()
        .collect();
    let resolved = cfg.resolved(&keys)?;

    let manifest = read_manifest(&manifest_path)?;
    let table = match kind {
        Kind::Leads => run_lead_ablation(&manifest, &config)?,
        Kind::Bands => run_band_ablation(&manifest, &config)?,
    };
    create_out(&a.out)?;
    let csv = table.to_csv();
    write_text(&a.out.join(format!("{}.csv", kind.stem())), &csv)?;
    let mut report = resolved.to_text();
    let _ = writeln!(report, "manifest_sha256={}", file_sha256(&manifest_path)?);
    let _ = writeln!(report, "split_seed={seed}");
    let _ = writeln!(
        report,
        "table_sha256={}",
        afnet_core::hashing::sha256_hex(csv.as_bytes())
    );
    report.push('\n');
    report.push_str(&table.to_string());
    write_text(&a.out.join(format!("{}.txt", kind.stem())), &report)?;
    print!("{table}");
    if !table.failures.is_empty() {
        // Every condition ran; report the partial table but signal the failures.
        let names: Vec<&str> = table.failures.iter().map(|f| f.condition.as_str()).collect();
        let msg = format!("conditions failed: {}", names.join(", "));
        let numerical = table.failures.iter().all(|f| f.message.contains("numerical"));
        return Err(if numerical {
            CliError::Numerical(msg)
        } else {
            CliError::Data(msg)
        });
    }
    Ok(())
}
