use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream for draw `index` under `seed`.
///
/// Every draw gets its own ChaCha stream, so results do not depend on the
/// order in which draws are evaluated or on how they are split across threads.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
