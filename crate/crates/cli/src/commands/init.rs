//! `fedmining init`: write the commented config template.

use std::path::Path;

use crate::{config, CliError, CliResult};

pub fn run(out: &Path, force: bool) -> CliResult<()> {
    if out.exists() && !force {
        return Err(CliError::Validation(format!(
            "{} already exists (use --force to overwrite)",
            out.display()
        )));
    }
    std::fs::write(out, config::TEMPLATE)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", out.display())))?;
    println!("wrote config template to {}", out.display());
    Ok(())
}
