use std::fmt::Write as _;

use afnet_core::data::waveform::encode_ecg;
use afnet_core::data::{read_manifest, Manifest, ManifestRow};
use afnet_core::dsp::{design_butterworth_bandpass, filter_waveform, BandSpec, BANDPASS_ORDER};
use afnet_core::hashing::sha256_hex;
use afnet_core::pipeline::{load_raw, TARGET_FS};
use afnet_core::synthgen::{MANIFEST_FILE, WAVEFORM_DIR};

use crate::commands::{create_out, file_sha256, write_text};
use crate::error::{io_error, CliError, CliResult};
use crate::FilterArgs;

pub fn run(a: FilterArgs) -> CliResult<()> {
    let band: BandSpec = a.band.parse()?;
    let filter = design_butterworth_bandpass(band, TARGET_FS as f64, BANDPASS_ORDER)?;
    let manifest = read_manifest(&a.manifest)?;
    let wave_dir = a.out.join(WAVEFORM_DIR);
    create_out(&wave_dir)?;
    let mut rows = Vec::with_capacity(manifest.len());
    let mut digests = String::new();
    for row in manifest.rows() {
        if row.record_id.contains(['/', '\\']) {
            return Err(CliError::Data(format!(
                "record id {:?} is not a file name",
                row.record_id
            )));
        }
        let rec = load_raw(row)?;
        let filtered = filter_waveform(&filter, &rec.waveform)?;
        let path = wave_dir.join(format!("{}.ecg", row.record_id));
        let bytes = encode_ecg(&filtered);
        std::fs::write(&path, &bytes).map_err(|e| io_error(&path, e))?;
        digests.push_str(&sha256_hex(&bytes));
        rows.push(ManifestRow { path, ..row.clone() });
    }
    let out_manifest = a.out.join(MANIFEST_FILE);
    Manifest::new(rows)?.write(&out_manifest)?;
    let coeffs = a.out.join("filter_coefficients.csv");
    write_text(&coeffs, &filter.coefficients_csv())?;
    let mut report = String::new();
    let _ = writeln!(report, "band={}", band.label());
    let _ = writeln!(report, "order={BANDPASS_ORDER}");
    let _ = writeln!(report, "fs={TARGET_FS}");
    let _ = writeln!(report, "records={}", manifest.len());
    let _ = writeln!(report, "input_sha256={}", file_sha256(&a.manifest)?);
    let _ = writeln!(report, "manifest_sha256={}", file_sha256(&out_manifest)?);
    let _ = writeln!(report, "waveforms_sha256={}", sha256_hex(digests.as_bytes()));
    write_text(&a.out.join("filter_report.txt"), &report)?;
    println!(
        "filtered {} records with {band} to {}",
        manifest.len(),
        out_manifest.display()
    );
    Ok(())
}
