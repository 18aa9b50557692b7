//! Exact counting for the two Diophantine conditions on gaps `a(x) - a(y)`.

mod bounds;
mod condition_a;
mod condition_b;
mod decide;
mod keys;
mod params;
mod report;

pub use bounds::{bound_report, BoundReport};
pub use condition_a::{
    ceil_eps_log, condition_a_solutions, condition_a_structure, count_condition_a, Solution,
    SolutionStructure, ORACLE_A_BUDGET,
};
pub use condition_b::{
    count_condition_b, count_s_fast, count_s_oracle, count_s_windowed, ORACLE_B_BUDGET,
};
pub use decide::{GapField, Term};
pub use params::{CountParams, ParamSummary, Threshold};
pub use report::{reference_bound, Condition, CountMode, CountReport, CountSummary};
