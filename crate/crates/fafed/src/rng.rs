//! Counter-based random streams.
//!
//! Every consumer gets its own stream keyed by (master seed, client id,
//! purpose). Outputs depend only on (key, counter), never on the order in
//! which other streams are consumed, so runs are bitwise reproducible no
//! matter how client work is scheduled across threads.

/// Stream purposes. Keeping these distinct guarantees that e.g. data
/// generation never shares draws with minibatch sampling.
pub const PURPOSE_DATA: u64 = 1;
pub const PURPOSE_BATCH: u64 = 2;
pub const PURPOSE_INIT_BATCH: u64 = 3;
pub const PURPOSE_SAMPLE_NOISE: u64 = 4;
pub const PURPOSE_PROBE: u64 = 5;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer.
fn fin(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold `v` into key material `h`.
pub fn mix(h: u64, v: u64) -> u64 {
    fin(h
        .rotate_left(27)
        .wrapping_mul(GOLDEN)
        .wrapping_add(fin(v ^ 0x52dc_e729)))
}

/// A stateless-keyed counter stream: output_i = fin(key + i * GOLDEN).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(master: u64, client: u64, purpose: u64) -> Self {
        RngStream {
            key: mix(mix(fin(master), purpose), client),
            counter: 0,
        }
    }

    /// Extra-keyed stream, e.g. per (client, sample id) noise.
    pub fn keyed(master: u64, client: u64, purpose: u64, extra: u64) -> Self {
        RngStream {
            key: mix(mix(mix(fin(master), purpose), client), extra),
            counter: 0,
        }
    }

    /// Current counter position; recorded as the draw tag of minibatches.
    pub fn pos(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        fin(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in (0, 1]; safe as a Box-Muller log argument.
    fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.uniform() * (hi - lo)
    }

    /// Unbiased-enough index draw via 128-bit widening multiply.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// One pair of independent standard normals (Box-Muller).
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = std::f64::consts::TAU * u2;
        (r * th.cos(), r * th.sin())
    }

    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    /// Fill `buf` with standard normals, consuming pairs.
    pub fn fill_normal(&mut self, buf: &mut [f64]) {
        let mut i = 0;
        while i + 1 < buf.len() {
            let (a, b) = self.normal_pair();
            buf[i] = a;
            buf[i + 1] = b;
            i += 2;
        }
        if i < buf.len() {
            buf[i] = self.normal();
        }
    }
}
