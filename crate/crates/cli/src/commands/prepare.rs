use afnet_core::data::read_manifest;
use afnet_core::pipeline::build_splits;

use crate::commands::{apply_path, base_config, create_out};
use crate::error::CliResult;
use crate::PrepareArgs;

pub fn run(a: PrepareArgs) -> CliResult<()> {
    let mut cfg = base_config(&a.common)?;
    apply_path(&mut cfg, "manifest", &a.manifest);
    cfg.apply("test_frac", a.test_frac);
    cfg.apply("unbal_ratio", a.unbal_ratio);
    let manifest_path = cfg.require_path("manifest")?;
    let out = match a.out {
        Some(o) => o,
        None => manifest_path
            .parent()
            .unwrap_or(std::path::Path::new("."))
            .join("splits"),
    };
    let manifest = read_manifest(&manifest_path)?;
    let splits = build_splits(&manifest, cfg.split_config()?)?;
    create_out(&out)?;
    splits.write(&out)?;
    print!("{}", splits.report());
    println!("wrote splits to {}", out.display());
    Ok(())
}
