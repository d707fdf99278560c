//! `fedmining run`: execute a training run and write the self-contained run
//! directory (config snapshot, key fingerprints, metrics CSV, confusion
//! sidecar, report data, summary).

use std::path::{Path, PathBuf};

use fedmining_core::baselines::timing::compare_encrypt_timings;
use fedmining_core::fl::{self, Pipeline, RunConfig, RunOutput};
use fedmining_core::metrics::{
    comm_overhead_measured, comm_overhead_paper, write_confusion_sidecar, write_metrics_csv,
};
use fedmining_core::PairingSuite;

use crate::report::{render, ReportData, TimingData};
use crate::{runtime, validation, CliResult};

pub fn run<P: PairingSuite>(
    cfg: &RunConfig,
    out_dir: Option<&Path>,
    toy_field: bool,
) -> CliResult<()> {
    cfg.validate::<P>().map_err(validation)?;

    let dir: PathBuf = match out_dir {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from(format!("runs/run-{}-{}", P::NAME, cfg.seed)),
    };
    if dir.exists() && std::fs::read_dir(&dir).map_err(runtime)?.next().is_some() {
        return Err(crate::CliError::Validation(format!(
            "run directory {} already exists and is not empty",
            dir.display()
        )));
    }

    let output = fl::run::<P>(cfg).map_err(runtime)?;

    std::fs::create_dir_all(&dir).map_err(runtime)?;
    let snapshot = toml::to_string_pretty(cfg).map_err(runtime)?;
    std::fs::write(dir.join("config.toml"), snapshot).map_err(runtime)?;
    write_metrics_csv(&dir.join("metrics.csv"), &output.rows).map_err(runtime)?;
    write_confusion_sidecar(&dir.join("confusion.json"), &output.confusions)
        .map_err(runtime)?;
    std::fs::write(
        dir.join("fingerprints.json"),
        serde_json::to_string_pretty(&output.key_fingerprints).map_err(runtime)?,
    )
    .map_err(runtime)?;

    let report = build_report::<P>(cfg)?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(runtime)?,
    )
    .map_err(runtime)?;

    let summary = summarize::<P>(cfg, &output, toy_field);
    std::fs::write(dir.join("summary.txt"), &summary).map_err(runtime)?;
    print!("{summary}");
    println!("{}", render(&report));
    println!("run directory: {}", dir.display());
    Ok(())
}

fn build_report<P: PairingSuite>(cfg: &RunConfig) -> CliResult<ReportData> {
    let d = cfg.scenario.model_dim() as u64;
    let timings = if cfg.baselines.measure_timing {
        let t = compare_encrypt_timings::<P>(
            cfg.chunk_dim,
            cfg.baselines.timing_params,
            cfg.baselines.paillier_bits,
            cfg.seed,
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
    Ok(ReportData {
        suite: P::NAME.to_string(),
        param_count: d,
        element_bytes: cfg.accounting_element_bytes,
        chunk_dim: cfg.chunk_dim,
        scheme_paper_bytes: comm_overhead_paper(d, cfg.accounting_element_bytes),
        scheme_measured_bytes: comm_overhead_measured::<P>(
            d as usize,
            cfg.chunk_dim,
            "msms-0".len(),
        ),
        ppfl_bytes: fedmining_core::baselines::ppfl_cost_model(d).bytes_per_round,
        ppfl_message_rounds: 3,
        byte_ratio: ReportData::byte_ratio(cfg.accounting_element_bytes),
        timings,
    })
}

fn summarize<P: PairingSuite>(cfg: &RunConfig, out: &RunOutput, toy_field: bool) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "fedmining run: suite {}{}, seed {}, {} rounds, {} clients, pipeline {:?}\n",
        P::NAME,
        if toy_field { " (toy field)" } else { "" },
        cfg.seed,
        cfg.rounds,
        cfg.scenario.clients,
        cfg.pipeline
    ));
    if let Some((model, eval)) = &out.final_encrypted {
        s.push_str(&format!(
            "final encrypted model:  round {}, macro accuracy {:.4}\n",
            model.round_index, eval.macro_accuracy
        ));
    }
    if let Some((model, eval)) = &out.final_plaintext {
        s.push_str(&format!(
            "final plaintext model:  round {}, macro accuracy {:.4}\n",
            model.round_index, eval.macro_accuracy
        ));
    }
    if let (Some((_, enc)), Some((_, plain))) = (&out.final_encrypted, &out.final_plaintext) {
        s.push_str(&format!(
            "accuracy gap (encrypted vs plaintext): {:.4} pp\n",
            (enc.macro_accuracy - plain.macro_accuracy).abs() * 100.0
        ));
    }
    if let Some(ok) = out.divergence_within_tolerance {
        s.push_str(&format!(
            "per-round divergence within K'*delta/2: {}\n",
            if ok { "yes" } else { "NO" }
        ));
    }
    if cfg.pipeline != Pipeline::Plaintext {
        let uploaded: u64 = out.rows.iter().map(|r| r.bytes_measured_total).sum();
        s.push_str(&format!("total encrypted upload: {uploaded} bytes\n"));
    }
    s
}
