use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Independent stream for `(master_seed, label)`.
///
/// The stream key is a hash of the pair, so any component can derive its
/// own stream without coordinating with others and the result does not
/// depend on how work is scheduled.
pub fn derive_seeds(master_seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"throwcatch/seed/v1");
    h.update(master_seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}
