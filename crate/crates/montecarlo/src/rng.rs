use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stamped into every report so a run can be reproduced.
pub const GENERATOR: &str = "chacha8, stream = replication index; normals via rand_distr ziggurat";

/// Independent stream for replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}
