use std::sync::OnceLock;

use num_bigint::BigUint;

use super::VdfError;

pub const TEST_256: &str = "test-256";
pub const DEFAULT_2048: &str = "default-2048";

/// Named parameter sets resolvable from packets.
pub const REGISTRY: [&str; 2] = [TEST_256, DEFAULT_2048];

// Semiprimes generated once from two random primes of equal size; the
// factors were not retained.
const MODULUS_256_HEX: &str = "c9247b0cf492517475fdfe7441773348bda03f87c2c5ff3633915c8dd080694b";
const MODULUS_2048_HEX: &str = concat!(
    "ca32539d8cab0c509a4d6dc208b6cdfe162ba7f67b31a532f8c475d16cb4a662",
    "b79a2270ca125378e758c8f1605b756955631c129a195ad6ea53ce4bac11bfb9",
    "0634852736b95333ebe322c7c21e2910453d365a9ad7fa05d759ccb6bad3fa0b",
    "5e4d78ffaa48f80a84cfd09a8c84c268728629557d10798ad2053c8ed69a3dc7",
    "9bbb7b22a068c1e3ed56ed29b9c55ef98754c280cfd7fb184186fc85c44e9e61",
    "da79781a447eba9dbb0f071a34bf30a47a1a4eeadc29d60c1a761e1fa4cd287a",
    "4ad48786b9e232a6c100f2298ead1c547ea4b7ff7ab7a709ed4fcd4cca608064",
    "39c3e976d00ea14949f4d16de9af85d7954aa2b4e7638e82715bbde858e193f3",
);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VdfParams {
    modulus: BigUint,
    time_t: u64,
}

impl VdfParams {
    pub fn new(modulus: BigUint, time_t: u64) -> Result<Self, VdfError> {
        if time_t < 4 || !time_t.is_power_of_two() {
            return Err(VdfError::BadTime(time_t));
        }
        if modulus <= BigUint::from(3u32) || !modulus.bit(0) {
            return Err(VdfError::BadModulus);
        }
        Ok(Self { modulus, time_t })
    }

    /// The 256-bit test modulus with a caller-chosen time parameter.
    pub fn test_256(time_t: u64) -> Result<Self, VdfError> {
        Self::new(modulus_256().clone(), time_t)
    }

    /// The 2048-bit modulus with a caller-chosen time parameter.
    pub fn rsa_2048(time_t: u64) -> Result<Self, VdfError> {
        Self::new(modulus_2048().clone(), time_t)
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn time_t(&self) -> u64 {
        self.time_t
    }

    /// Number of halving rounds, `log2(T)`.
    pub fn rounds(&self) -> u32 {
        self.time_t.trailing_zeros()
    }

    /// Fixed big-endian width of one group element.
    pub fn element_len(&self) -> usize {
        (self.modulus.bits() as usize).div_ceil(8)
    }
}

fn modulus_256() -> &'static BigUint {
    static M: OnceLock<BigUint> = OnceLock::new();
    M.get_or_init(|| BigUint::parse_bytes(MODULUS_256_HEX.as_bytes(), 16).expect("valid hex"))
}

fn modulus_2048() -> &'static BigUint {
    static M: OnceLock<BigUint> = OnceLock::new();
    M.get_or_init(|| BigUint::parse_bytes(MODULUS_2048_HEX.as_bytes(), 16).expect("valid hex"))
}

/// Resolves a registry identifier: `test-256` (T = 2^10) or `default-2048` (T = 2^20).
pub fn lookup_params(id: &str) -> Result<VdfParams, VdfError> {
    match id {
        TEST_256 => VdfParams::test_256(1 << 10),
        DEFAULT_2048 => VdfParams::rsa_2048(1 << 20),
        other => Err(VdfError::UnknownParams(other.to_string())),
    }
}
