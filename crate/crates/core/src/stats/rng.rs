//! Seeded counter-based generator used for all sampling in this crate.
//!
//! The algorithm is SplitMix64: the state advances by the additive constant
//! `0x9E3779B97F4A7C15` (the 64-bit golden ratio) and each output mixes the
//! counter through two xor-multiply rounds with multipliers
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB` and shifts 30/27/31. Uniform
//! doubles take the top 53 bits over 2^53, so they lie in [0, 1). Identical
//! seeds give identical streams in any language that reproduces these
//! constants; the tests pin reference outputs.

/// SplitMix64 stream. `Clone` gives an independent replay of the same stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1), 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on two uniforms. The pair consumes
    /// exactly two outputs, keeping streams alignment-stable.
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        // u in (0, 1] so the log is finite
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        let r = (-2.0 * u.ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * v;
        (r * phi.cos(), r * phi.sin())
    }
}
