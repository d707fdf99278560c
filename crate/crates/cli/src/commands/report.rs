//! `fedmining report`: print the overhead comparison table, either from a
//! stored run directory (bit-identical across invocations) or computed live
//! for a parameter count.

use std::path::Path;

use fedmining_core::baselines::{ppfl_cost_model, timing::compare_encrypt_timings};
use fedmining_core::metrics::{comm_overhead_measured, comm_overhead_paper};
use fedmining_core::PairingSuite;

use crate::report::{render, ReportData, TimingData};
use crate::{runtime, validation, CliResult};

pub fn from_run_dir(dir: &Path) -> CliResult<()> {
    let path = dir.join("report.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| crate::CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let data: ReportData = serde_json::from_str(&text).map_err(validation)?;
    print!("{}", render(&data));
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct LiveOptions {
    pub param_count: u64,
    pub element_bytes: u64,
    pub chunk_dim: usize,
    pub timing_params: usize,
    pub paillier_bits: u64,
    pub measure_timing: bool,
}

pub fn live<P: PairingSuite>(opts: &LiveOptions) -> CliResult<()> {
    if opts.param_count == 0 || opts.element_bytes == 0 || opts.chunk_dim == 0 {
        return Err(crate::CliError::Validation(
            "param_count, element_bytes, and chunk_dim must all be >= 1".into(),
        ));
    }
    let timings = if opts.measure_timing {
        let t = compare_encrypt_timings::<P>(
            opts.chunk_dim,
            opts.timing_params,
            opts.paillier_bits,
            0xfed,
        )
        .map_err(runtime)?;
        Some(TimingData {
            suite: P::NAME.to_string(),
            dfe_per_param_ns: t.dfe_per_param.as_nanos() as u64,
            paillier_per_param_ns: t.paillier_per_param.as_nanos() as u64,
            ratio: t.ratio,
            param_count: t.param_count,
            paillier_bits: t.paillier_modulus_bits,
        })
    } else {
        None
    };
    let data = ReportData {
        suite: P::NAME.to_string(),
        param_count: opts.param_count,
        element_bytes: opts.element_bytes,
        chunk_dim: opts.chunk_dim,
        scheme_paper_bytes: comm_overhead_paper(opts.param_count, opts.element_bytes),
        scheme_measured_bytes: comm_overhead_measured::<P>(
            opts.param_count as usize,
            opts.chunk_dim,
            "msms-0".len(),
        ),
        ppfl_bytes: ppfl_cost_model(opts.param_count).bytes_per_round,
        ppfl_message_rounds: 3,
        byte_ratio: ReportData::byte_ratio(opts.element_bytes),
        timings,
    };
    print!("{}", render(&data));
    Ok(())
}
