//! Seedable random streams. The generator is xoshiro256** seeded through
//! SplitMix64; normals come from the Marsaglia polar method.

use thiserror::Error;

use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RngError {
    #[error("empty interval: lo = {lo} must be below hi = {hi}")]
    EmptyInterval { lo: f64, hi: f64 },
}

/// What a derived stream is used for. Each purpose gets an independent
/// sequence for the same `(base_seed, run_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    Init,
    Sampling,
    Rotation,
    Diagnostics,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Init => 0x1,
            StreamPurpose::Sampling => 0x2,
            StreamPurpose::Rotation => 0x3,
            StreamPurpose::Diagnostics => 0x4,
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    state: [u64; 4],
    counter: u64,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        RngStream {
            seed,
            state,
            counter: 0,
            spare_normal: None,
        }
    }

    /// Stream keyed by `(base_seed, run_index, purpose)`.
    pub fn derive(base_seed: u64, run_index: u64, purpose: StreamPurpose) -> Self {
        let mut sm = base_seed;
        let a = splitmix64(&mut sm);
        let mut sm = a ^ run_index.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let b = splitmix64(&mut sm);
        let mut sm = b ^ purpose.tag().wrapping_mul(0x8CB9_2BA7_2F3D_8DD7);
        Self::new(splitmix64(&mut sm))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        self.counter += 1;
        result
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    pub fn standard_normal_vector(&mut self, n: usize) -> Vector {
        Vector::from((0..n).map(|_| self.standard_normal()).collect::<Vec<_>>())
    }

    /// Fills `out` with standard normals.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.standard_normal();
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64, RngError> {
        if !(lo < hi) {
            return Err(RngError::EmptyInterval { lo, hi });
        }
        loop {
            let x = lo + (hi - lo) * self.next_f64();
            // rounding can land exactly on hi for narrow intervals
            if x < hi {
                return Ok(x);
            }
        }
    }

    pub fn uniform_vector(&mut self, n: usize, lo: f64, hi: f64) -> Result<Vector, RngError> {
        (0..n)
            .map(|_| self.uniform(lo, hi))
            .collect::<Result<Vec<_>, _>>()
            .map(Vector::from)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
