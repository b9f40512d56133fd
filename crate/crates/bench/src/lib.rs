//! Shared inputs for the pipeline benchmarks.

use deepcvx::synth::{synthesize, BenchmarkInstance, Label, SynthesisTarget};

/// Depths exercised by every benchmark group.
pub const DEPTHS: [usize; 3] = [10, 50, 100];

/// One deterministic instance per depth for `label`.
pub fn instances(label: Label, seed: u64) -> Vec<BenchmarkInstance> {
    DEPTHS.iter().map(|&d| synthesize(&SynthesisTarget::new(label, d, seed)).expect("benchmark instance")).collect()
}
