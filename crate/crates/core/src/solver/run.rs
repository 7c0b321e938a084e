use super::Stepper;
use crate::diagnostics::{energy_report, EnergyReport};
use crate::error::{Error, Result};

/// Observer called by [`run`] after the initial state and after every step.
pub trait RunSink {
    /// `last` is true for the final state of the run.
    fn observe(&mut self, stepper: &Stepper, last: bool) -> Result<()>;
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    BlowUp(String),
    Vacuum(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowUp(_) => "blow-up",
            RunStatus::Vacuum(_) => "vacuum",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub steps: u64,
    pub t_final: f64,
}

/// Integrate until `t_end`.
///
/// The sink sees the initial state only when the stepper has not yet
/// stepped, so a resumed run does not repeat its first row. Blow-up and
/// vacuum end the run with the matching status; other errors propagate.
pub fn run(stepper: &mut Stepper, t_end: f64, sink: &mut dyn RunSink) -> Result<RunOutcome> {
    let remaining = ((t_end - stepper.time()) / stepper.dt()).round().max(0.0) as u64;
    let total = stepper.steps() + remaining;
    if stepper.steps() == 0 {
        sink.observe(stepper, remaining == 0)?;
    }
    while stepper.steps() < total {
        match stepper.step() {
            Ok(()) => {}
            Err(e @ Error::BlowUp { .. }) => return Ok(outcome(stepper, RunStatus::BlowUp(e.to_string()))),
            Err(e @ Error::Vacuum { .. }) => return Ok(outcome(stepper, RunStatus::Vacuum(e.to_string()))),
            Err(e) => return Err(e),
        }
        sink.observe(stepper, stepper.steps() == total)?;
    }
    Ok(outcome(stepper, RunStatus::Completed))
}

fn outcome(stepper: &Stepper, status: RunStatus) -> RunOutcome {
    RunOutcome {
        status,
        steps: stepper.steps(),
        t_final: stepper.time(),
    }
}

/// Sink collecting diagnostic rows every `every` steps and at the end.
#[derive(Debug, Clone, Default)]
pub struct VecSink {
    pub every: u64,
    pub rows: Vec<EnergyReport>,
}

impl VecSink {
    pub fn new(every: u64) -> Self {
        VecSink {
            every: every.max(1),
            rows: Vec::new(),
        }
    }
}

impl RunSink for VecSink {
    fn observe(&mut self, stepper: &Stepper, last: bool) -> Result<()> {
        if stepper.steps().is_multiple_of(self.every) || last {
            self.rows.push(energy_report(stepper)?);
        }
        Ok(())
    }
}
