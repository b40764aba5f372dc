use afnet_core::data::Lead;
use afnet_core::synthgen::{synth_dataset, SynthParams, MANIFEST_FILE};

use crate::commands::{create_out, read_text};
use crate::error::{CliError, CliResult};
use crate::{RunConfig, SynthArgs};

/// `default`, `null`, `planted-lead:D1[:0.7]`, `planted-oscillation:8[:0.05]`, `p-factor:0.9`.
pub fn parse_scenario(s: &str) -> CliResult<SynthParams> {
    let bad = || CliError::Usage(format!("unknown scenario {s:?}"));
    let mut parts = s.split(':');
    let name = parts.next().unwrap_or("");
    let args: Vec<&str> = parts.collect();
    let num = |i: usize, default: f64| -> CliResult<f64> {
        args.get(i).map_or(Ok(default), |v| v.parse().map_err(|_| bad()))
    };
    let p = match (name, args.len()) {
        ("default", 0) => SynthParams::default(),
        ("null", 0) => SynthParams::null(),
        ("planted-lead", 1 | 2) => {
            let lead: Lead = args[0].parse()?;
            SynthParams::planted_lead(lead, num(1, 0.7)?)
        }
        ("planted-oscillation", 1 | 2) => SynthParams::planted_oscillation(num(0, 8.0)?, num(1, 0.05)?),
        ("p-factor", 1) => SynthParams::with_p_factor(num(0, 0.7)?),
        _ => return Err(bad()),
    };
    Ok(p)
}

pub fn run(a: SynthArgs) -> CliResult<()> {
    let mut params = match (&a.params, &a.scenario) {
        (Some(path), _) => SynthParams::from_kv(&read_text(path)?, path)?,
        (None, Some(s)) => parse_scenario(s)?,
        (None, None) => SynthParams::default(),
    };
    if let Some(d) = a.duration {
        params.duration_s = d;
    }
    let mut cfg = RunConfig::default();
    cfg.apply("seed", a.seed);
    let seed = cfg.seed()?;
    create_out(&a.out)?;
    let manifest = synth_dataset(a.n_af0, a.n_af1, seed, &a.out, &params)?;
    let path = a.out.join(MANIFEST_FILE);
    let c = manifest.counts();
    println!(
        "wrote {} records (AF0={}, AF1={}) to {}",
        manifest.len(),
        c.af0,
        c.af1,
        path.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_parse() {
        assert_eq!(parse_scenario("default").unwrap(), SynthParams::default());
        assert_eq!(
            parse_scenario("planted-lead:D1").unwrap(),
            SynthParams::planted_lead(Lead::D1, 0.7)
        );
        assert_eq!(
            parse_scenario("planted-oscillation:8:0.1").unwrap(),
            SynthParams::planted_oscillation(8.0, 0.1)
        );
        assert_eq!(
            parse_scenario("p-factor:0.9").unwrap(),
            SynthParams::with_p_factor(0.9)
        );
        for bad in [
            "",
            "noise",
            "planted-lead",
            "planted-lead:v9",
            "p-factor:x",
            "null:1",
        ] {
            assert!(parse_scenario(bad).is_err(), "{bad}");
        }
    }
}
