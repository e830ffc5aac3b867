//! Shared fixtures for the benchmarks.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tuneout_core::imaging::{synthesize_reference, synthesize_shot, Frame, ReferenceBasis, ShotSpec, DEFAULT_MASK};
use tuneout_core::kd::populations_from_phase;
use tuneout_core::MomentumPopulations;

/// A reference basis over the default mask plus signal frames to compose against it.
pub struct ComposeFixture {
    pub basis: ReferenceBasis,
    pub signals: Vec<Frame>,
}

pub fn compose_fixture(reference_frames: usize, signals: usize, seed: u64) -> ComposeFixture {
    let spec = ShotSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Vec<Frame> = (0..reference_frames)
        .map(|k| synthesize_reference(&spec, &format!("r{k:04}"), &mut rng).expect("default geometry is valid"))
        .collect();
    let basis = ReferenceBasis::build(&frames, DEFAULT_MASK).expect("basis builds");
    let pops: BTreeMap<i32, MomentumPopulations> =
        [-1, 0, 1].into_iter().map(|m| (m, populations_from_phase(1.2, Some(3)))).collect();
    let signals = (0..signals)
        .map(|k| {
            synthesize_shot(&spec, &pops, &format!("s{k}"), &mut rng)
                .expect("default geometry is valid")
                .signal
        })
        .collect();
    ComposeFixture { basis, signals }
}
