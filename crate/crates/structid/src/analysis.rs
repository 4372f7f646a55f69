//! Analysis driver with a thread pool for the per-parameter checks.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use structid_core::analyzer::{prepare, AnalysisConfig, AnalysisError, IdentifiabilityReport, Method};
use structid_core::Model;

/// Wall-clock time per stage and per parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub prepare: Duration,
    pub step4: Duration,
    pub per_parameter: Vec<(String, Duration)>,
}

type Slot = (Result<bool, AnalysisError>, Duration);

/// Runs the analysis; the per-parameter checks of the saturation method use
/// up to `threads` workers. Results do not depend on `threads`.
pub fn run_parallel(
    model: &Model,
    config: &AnalysisConfig,
    threads: usize,
) -> Result<(IdentifiabilityReport, Timings), AnalysisError> {
    let t0 = Instant::now();
    let prepared = prepare(model, config)?;
    let mut timings = Timings {
        prepare: t0.elapsed(),
        ..Timings::default()
    };
    let t1 = Instant::now();
    let ell = prepared.theta_ell().to_vec();
    let names = prepared.theta_names().to_vec();
    let verdicts = match config.method {
        Method::Membership => {
            let v = if ell.is_empty() { Vec::new() } else { prepared.check_membership()? };
            timings.per_parameter = ell.iter().map(|&k| (names[k].clone(), t1.elapsed())).collect();
            v
        }
        Method::Saturation => {
            let workers = threads.clamp(1, ell.len().max(1));
            let next = AtomicUsize::new(0);
            let slots: Mutex<Vec<Option<Slot>>> = Mutex::new(vec![None; ell.len()]);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let j = next.fetch_add(1, Ordering::SeqCst);
                        if j >= ell.len() {
                            break;
                        }
                        let start = Instant::now();
                        let r = prepared.check_saturation(ell[j]);
                        slots.lock().expect("no poisoned workers")[j] = Some((r, start.elapsed()));
                    });
                }
            });
            let mut out = Vec::with_capacity(ell.len());
            for (j, slot) in slots.into_inner().expect("no poisoned workers").into_iter().enumerate() {
                let (r, d) = slot.expect("every task ran");
                timings.per_parameter.push((names[ell[j]].clone(), d));
                out.push(r?);
            }
            out
        }
    };
    timings.step4 = t1.elapsed();
    Ok((prepared.finish(&verdicts), timings))
}
