//! `jodkit serve`: the annotation service.

use std::net::SocketAddr;
use std::path::PathBuf;

use jodkit::consistency::AnalysisConfig;
use jodkit_service::ServiceConfig;

use crate::error::{CliError, Result};

pub fn run(addr: SocketAddr, data_dir: Option<PathBuf>, analysis: AnalysisConfig) -> Result<()> {
    analysis.validate()?;
    let config = ServiceConfig {
        data_dir,
        analysis,
        ..ServiceConfig::default()
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime
        .block_on(jodkit_service::serve(addr, config))
        .map_err(|e| CliError::Internal(format!("server stopped: {e}")))
}
