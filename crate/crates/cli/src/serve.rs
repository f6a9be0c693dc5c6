use anyhow::anyhow;
use carbonsched_live::{LiveConfig, LiveError};
use tracing_subscriber::EnvFilter;

use crate::args::ServeArgs;
use crate::CliError;

fn live_error(e: LiveError) -> CliError {
    match e {
        LiveError::Config(_) => CliError::config(e),
        other => CliError::data(other),
    }
}

pub fn run(a: ServeArgs) -> Result<(), CliError> {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into())).init();
    let config = LiveConfig::load(a.config.as_deref()).map_err(live_error)?;
    if config.feed_url.is_empty() {
        return Err(CliError::config(anyhow!("feed_url is not set (config file or CARBONSCHED_FEED_URL)")));
    }
    let rt = tokio::runtime::Runtime::new().map_err(CliError::data)?;
    rt.block_on(carbonsched_live::serve(config)).map_err(live_error)
}
