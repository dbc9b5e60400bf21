//! Decaying flow of a rheological fluid in the clamped unit box.
//!
//! Velocities are carried by a stream function on the interior nodes, so the
//! discrete fields are divergence-free and satisfy the no-slip condition
//! exactly. Each step is a Lie splitting: an energy-neutral midpoint
//! convective substep followed by an implicit viscous minimization.

mod diagnostics;
mod domain;
mod law;
mod snapshot;
mod stepper;
mod study;

pub use diagnostics::{
    apriori_bound, convective_integrability, energy_distance, test_stream_functions, time_refinement_study,
    weak_continuity_at_zero, AprioriBound, AprioriMonitor, ConvectiveIntegrability, TimeRefinement,
    WeakContinuityProbe,
};
pub use domain::{BoxOperators, InitialCondition, MacroDomain};
pub use law::{fine_node_law, EffectiveLawTable, TableLaw, SPOT_CHECK_PAIRS};
pub use snapshot::{read_snapshots, write_snapshots, SnapshotHeader};
pub use stepper::{
    solve_fine, solve_homogenized, solve_with_law, FlowMode, LedgerEntry, MacroTrajectory, StepOptions, VelocityState,
    ENERGY_SLACK,
};
pub use study::{convergence_runs, convergence_study, ConvergenceRow, ConvergenceRuns, ConvergenceStudy, SCHEME_NOISE};
