pub mod attack;
pub mod evaluate;
pub mod export_overlay;
pub mod gen_data;
pub mod train;

use std::sync::Arc;

use anyhow::Result;

use crate::{UsageError, ValidationError};
use skelattack_core::motion::SkeletonTopology;

/// Parse a topology family name: `chain<N>` or `star<N>`.
pub fn parse_topology(name: &str) -> Result<Arc<SkeletonTopology>> {
    let build = |kind: &str, n: &str| -> Result<SkeletonTopology> {
        let joints: usize = n
            .parse()
            .map_err(|_| UsageError(format!("bad joint count in topology {name:?}")))?;
        if joints < 2 {
            return Err(ValidationError(format!("topology {name:?} needs at least 2 joints")).into());
        }
        Ok(match kind {
            "chain" => SkeletonTopology::chain(joints)?,
            _ => SkeletonTopology::star(joints)?,
        })
    };
    if let Some(n) = name.strip_prefix("chain") {
        return Ok(Arc::new(build("chain", n)?));
    }
    if let Some(n) = name.strip_prefix("star") {
        return Ok(Arc::new(build("star", n)?));
    }
    Err(UsageError(format!("unknown topology {name:?}; expected chain<N> or star<N>")).into())
}

/// Resolve `SKELATTACK_THREADS` into a batch execution strategy.
pub fn parallelism_from_env() -> Result<skelattack_core::attack::Parallelism> {
    use skelattack_core::attack::Parallelism;
    match std::env::var("SKELATTACK_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(Parallelism::DefaultThreads),
        Err(e) => Err(ValidationError(format!("SKELATTACK_THREADS: {e}")).into()),
        Ok(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .map_err(|_| ValidationError(format!("SKELATTACK_THREADS={raw:?} is not a number")))?;
            Ok(if n == 0 { Parallelism::Serial } else { Parallelism::Threads(n) })
        }
    }
}
