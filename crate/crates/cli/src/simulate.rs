use robustse_montecarlo::{run_study, SimConfig, SimulationReport};

use crate::error::Result;
use crate::output::{Envelope, Meta, Warning};

/// Runs each study in turn on a pool of `threads` workers (`None` for the
/// rayon default). The output does not depend on `threads`.
pub fn simulate_report(
    configs: Vec<SimConfig>,
    threads: Option<usize>,
) -> Result<Envelope<Vec<SimConfig>, SimulationReport>> {
    for c in &configs {
        c.validate()?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads.filter(|&t| t > 0) {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| crate::CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let reports = pool.install(|| {
        configs
            .iter()
            .map(run_study)
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;

    let mut warnings = Vec::new();
    for r in &reports {
        let design = r.config.design;
        if r.failed_replications > 0 {
            warnings.push(Warning::new(
                "failed-replications",
                format!("{design}: {} replications could not be fit", r.failed_replications),
            ));
        }
        for m in &r.methods {
            if m.nonexistent > 0 {
                warnings.push(
                    Warning::new(
                        "nonexistent",
                        format!(
                            "{design}: {} not computable in {} of {} replications",
                            m.method, m.nonexistent, r.replications
                        ),
                    )
                    .for_method(m.method),
                );
            }
            if m.indefinite > 0 {
                warnings.push(
                    Warning::new(
                        "indefinite",
                        format!(
                            "{design}: {} gave a nonpositive variance in {} of {} replications",
                            m.method, m.indefinite, r.replications
                        ),
                    )
                    .for_method(m.method),
                );
            }
        }
    }
    let seed = configs.first().map(|c| c.seed);
    Ok(Envelope {
        meta: Meta::new(seed, configs),
        results: reports,
        warnings,
    })
}
