//! Representing maps and monotone limit engines.

pub mod engines;
pub mod pipeline;
pub mod representing;
pub mod sequence;

pub use engines::{
    bounded_approximation, monotone_psd_limit, nondecreasing_operator_limit,
    nondecreasing_operator_limit_bounded, nonincreasing_operator_limit, strong_graph_limit_check,
    Diagnostics, Direction, GraphLimitCheck, LimitObject, LimitReport,
};
pub use pipeline::{
    nonincreasing_relation_check, relation_sequence_pipeline, NonincreasingReport, PipelineReport,
};
pub use representing::{connect_maps, range_space_map, representing_map, GramSpec};
pub use sequence::{Schedule, SequenceSpec, Trend};
