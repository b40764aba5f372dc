use std::fmt::Write as _;

use afnet_core::data::read_manifest;
use afnet_core::models::{cam, ModelKind};
use afnet_core::nn::Tensor;
use afnet_core::pipeline::load_raw;

use crate::commands::eval::load_run;
use crate::commands::train::preparer;
use crate::commands::{create_out, write_text};
use crate::error::{CliError, CliResult};
use crate::CamArgs;

pub const CAM_FILE: &str = "cam.csv";

/// One row per record: id, label, logit, samples per CAM step, then the map itself.
pub fn run(a: CamArgs) -> CliResult<()> {
    if a.class > 1 {
        return Err(CliError::Usage(format!("--class {}: expected 0 or 1", a.class)));
    }
    let run = load_run(&a.run)?;
    let ck = &run.checkpoint;
    if ck.spec.kind != ModelKind::Ecg {
        return Err(CliError::Usage(format!(
            "cam needs an ecg model, the run holds {}",
            ck.spec.kind
        )));
    }
    let prep = preparer(&run.config, ModelKind::Ecg)?;
    let manifest = read_manifest(&a.manifest)?;
    let n = a.limit.unwrap_or(manifest.len()).min(manifest.len());
    let mut out = String::from("record_id,label,logit,samples_per_step,cam\n");
    for row in &manifest.rows()[..n] {
        let rec = prep.prepare_as(&load_raw(row)?, &row.record_id)?;
        let data: Vec<f32> = rec.waveform.columns().concat();
        let x = Tensor::new(vec![rec.n_leads(), rec.n_samples()], data)?;
        let m = cam::<f32>(&ck.spec, &ck.params, &x, a.class)?;
        let values: Vec<String> = m.values.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(
            out,
            "{},{},{:?},{},{}",
            row.record_id,
            row.label.index(),
            m.logit,
            m.samples_per_step,
            values.join(";")
        );
    }
    create_out(&a.out)?;
    write_text(&a.out.join(CAM_FILE), &out)?;
    println!(
        "wrote {n} class activation maps to {}",
        a.out.join(CAM_FILE).display()
    );
    Ok(())
}
