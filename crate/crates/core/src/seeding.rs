//! Seed derivation. All streams are ChaCha8 generators seeded through
//! `SeedableRng::seed_from_u64`; the 64-bit seeds themselves are derived
//! with the functions below so runs can be reproduced from their metadata.

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of one trial: `splitmix64(base ^ fnv1a(cell) ^ splitmix64(trial))`.
pub fn trial_seed(base_seed: u64, cell_key: &str, trial: u64) -> u64 {
    splitmix64(base_seed ^ fnv1a(cell_key.as_bytes()) ^ splitmix64(trial))
}

/// Compressor stream of one agent: `run_seed ^ agent`.
pub fn agent_seed(run_seed: u64, agent: usize) -> u64 {
    run_seed ^ agent as u64
}

/// Stream for the initial iterates, kept apart from every agent stream.
pub fn init_seed(run_seed: u64) -> u64 {
    splitmix64(run_seed)
}
