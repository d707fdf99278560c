//! `fedmining keygen`: run the full key ceremony and persist the key files.

use std::collections::BTreeMap;
use std::path::Path;

use fedmining_core::dfe::{
    save_aggregation_key, save_client_key, save_master_secret, setup, Kdc,
};
use fedmining_core::fl::RunConfig;
use fedmining_core::{GroupParams, PairingSuite};

use crate::{runtime, validation, CliResult};

pub fn run<P: PairingSuite>(cfg: &RunConfig, out_dir: &Path) -> CliResult<()> {
    cfg.validate::<P>().map_err(validation)?;
    std::fs::create_dir_all(out_dir).map_err(runtime)?;

    let (params, ms) = setup::<P>(P::SECURITY_BITS, cfg.chunk_dim, cfg.seed).map_err(runtime)?;
    let mut kdc = Kdc::new(ms);
    let mut fingerprints = BTreeMap::new();

    let fp = save_master_secret(kdc.master_secret(), &out_dir.join("master.key"))
        .map_err(runtime)?;
    fingerprints.insert("master".to_string(), fp);

    for id in cfg.scenario.client_ids() {
        let key = kdc.keygen_client(id.clone()).map_err(runtime)?;
        let fp = save_client_key(&key, &out_dir.join(format!("{id}.key"))).map_err(runtime)?;
        fingerprints.insert(id.as_str().to_string(), fp);
    }

    let agg = kdc.keygen_aggregator();
    let fp = save_aggregation_key(&agg, &out_dir.join("aggregator.key")).map_err(runtime)?;
    fingerprints.insert("aggregator".to_string(), fp);

    write_params_json(&params, &fingerprints, &out_dir.join("params.json"))?;

    println!(
        "key ceremony complete: suite {}, n = {}, {} client keys",
        P::NAME,
        cfg.chunk_dim,
        cfg.scenario.clients
    );
    for (who, fp) in &fingerprints {
        println!("  {who}: {fp}");
    }
    Ok(())
}

fn write_params_json(
    params: &GroupParams,
    fingerprints: &BTreeMap<String, String>,
    path: &Path,
) -> CliResult<()> {
    let json = serde_json::json!({
        "suite": params.suite,
        "order_q": params.order_q,
        "element_size_bytes": params.element_size_bytes,
        "fingerprints": fingerprints,
    });
    std::fs::write(path, serde_json::to_string_pretty(&json).map_err(runtime)?)
        .map_err(runtime)?;
    Ok(())
}
