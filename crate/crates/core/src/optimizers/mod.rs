//! SD, TSD, Muon, MuonW, RSD-WD and RTSD-WD: single steps, schedules and the
//! run loop that records a [`Trace`].

mod engine;
mod schedule;
mod steps;
mod trace;

pub use engine::{
    run, run_with_observer, Algorithm, OptimizerSpec, Orthogonalizer, RunOptions, RunOutput,
    StepInfo, DIVERGENCE_LIMIT,
};
pub use schedule::{
    frank_wolfe_product, theory_decay, EpsSchedule, Schedule, EXPERIMENTAL_EPS_CONSTANT,
};
pub use steps::{frank_wolfe_form, muon_step, muonw_step, regularized_step, sd_step, tsd_step};
pub use trace::{Trace, TraceRecord, TRACE_HEADER};
