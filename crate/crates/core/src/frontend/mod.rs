//! Hybrid training design: quantized analog and digital factors, sampling pattern,
//! training schedule and the simulated sounding rounds.

mod design;
mod pattern;
mod plan;
mod shifter;
mod simulate;

pub use design::{
    default_receive_block, default_transmit_exponents, design_receive_step, design_transmit_stage,
    selection_matrix, ReceiveBlock, ReceiveStepDesign, TransmitStageDesign,
};
pub use pattern::{build_sampling_pattern, rows_per_column, SamplingPattern};
pub use plan::{assemble_training_plan, stage_target, PlanConfig, SampleSlot, TrainingPlan};
pub use shifter::{AnalogMatrix, PhaseShifterSet};
pub use simulate::{
    noise_variance, simulate_training, sound, HybridRealization, IdealSelection, ObservationMatrix,
    ObservationMode, Processor, TrainingBeams,
};
