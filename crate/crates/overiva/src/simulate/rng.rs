use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Name written into scene metadata.
pub const PRNG_NAME: &str = "xoshiro256++ (seed_from_u64 via splitmix64)";

/// Seeded generator for scene synthesis.
///
/// `uniform` takes the top 53 bits of one 64-bit output; `normal` draws two
/// uniforms `u1, u2` and returns `sqrt(-2 ln(1 - u1)) cos(2π u2)`.
#[derive(Debug, Clone)]
pub struct SceneRng(Xoshiro256PlusPlus);

impl SceneRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
