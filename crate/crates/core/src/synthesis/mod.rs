//! Functions with prescribed variation: sawtooth staircases for a left-r.e.
//! total, signed martingales whose variation martingale is a given staged
//! martingale, and the Lipschitz and gated variation preimages built on them.

mod preimage;
mod signed;
mod zigzag;

pub use preimage::{
    band_enclosure_violations, gated_preimage, lipschitz_violations, preimage_from_staged,
    variation_preimage, Preimage,
};
pub use signed::{
    band_violations, measure_gate, stage_gates, synthesize_gated, synthesize_signed,
    with_zero_prefix, Rule, SignedSynthesis, StageSchedule, SynthesisOptions, TraceEntry,
    DEFAULT_LEVEL_CAP,
};
pub use zigzag::{variation_staircase, ZigzagSpec};
