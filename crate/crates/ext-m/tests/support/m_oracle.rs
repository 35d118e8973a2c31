//! Arbitrary-precision reference model of the M extension.
//!
//! Products are formed exactly and sliced; division uses truncating bigint
//! division with the divide-by-zero and signed-overflow rows written out.

use modsim_ext_m::MOp;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn two_pow(n: u32) -> BigInt {
    BigInt::one() << n
}

fn signed64(v: u64) -> BigInt {
    BigInt::from(v as i64)
}

fn unsigned64(v: u64) -> BigInt {
    BigInt::from(v)
}

fn signed32(v: u64) -> BigInt {
    BigInt::from(v as u32 as i32)
}

fn unsigned32(v: u64) -> BigInt {
    BigInt::from(v as u32)
}

/// x mod 2^64 as an unsigned value.
fn wrap64(x: &BigInt) -> u64 {
    x.mod_floor(&two_pow(64)).to_u64().unwrap()
}

/// Low 32 bits of x, sign-extended to 64.
fn wrap32_sext(x: &BigInt) -> u64 {
    let low = x.mod_floor(&two_pow(32)).to_u64().unwrap();
    if low >= 1 << 31 {
        low | 0xFFFF_FFFF_0000_0000
    } else {
        low
    }
}

fn high64(product: &BigInt) -> u64 {
    wrap64(&product.div_floor(&two_pow(64)))
}

/// Quotient and remainder with the ratified special cases.
fn divrem(dividend: BigInt, divisor: BigInt, signed_min: Option<BigInt>) -> (BigInt, BigInt) {
    if divisor.is_zero() {
        return (BigInt::from(-1), dividend);
    }
    if let Some(min) = signed_min {
        if dividend == min && divisor == BigInt::from(-1) {
            return (min, BigInt::zero());
        }
    }
    // BigInt `/` and `%` truncate toward zero.
    (&dividend / &divisor, &dividend % &divisor)
}

pub fn m_oracle(op: MOp, a: u64, b: u64) -> u64 {
    let min64 = -two_pow(63);
    let min32 = -two_pow(31);
    match op {
        MOp::Mul => wrap64(&(unsigned64(a) * unsigned64(b))),
        MOp::Mulh => high64(&(signed64(a) * signed64(b))),
        MOp::Mulhsu => high64(&(signed64(a) * unsigned64(b))),
        MOp::Mulhu => high64(&(unsigned64(a) * unsigned64(b))),
        MOp::Div => wrap64(&divrem(signed64(a), signed64(b), Some(min64)).0),
        MOp::Rem => wrap64(&divrem(signed64(a), signed64(b), Some(min64)).1),
        MOp::Divu => wrap64(&divrem(unsigned64(a), unsigned64(b), None).0),
        MOp::Remu => wrap64(&divrem(unsigned64(a), unsigned64(b), None).1),
        MOp::Mulw => wrap32_sext(&(unsigned32(a) * unsigned32(b))),
        MOp::Divw => wrap32_sext(&divrem(signed32(a), signed32(b), Some(min32)).0),
        MOp::Remw => wrap32_sext(&divrem(signed32(a), signed32(b), Some(min32)).1),
        MOp::Divuw => wrap32_sext(&divrem(unsigned32(a), unsigned32(b), None).0),
        MOp::Remuw => wrap32_sext(&divrem(unsigned32(a), unsigned32(b), None).1),
    }
}

const SPECIALS: [u64; 12] = [
    0,
    1,
    2,
    u64::MAX,
    u64::MAX - 1,
    0x8000_0000_0000_0000,
    0x7FFF_FFFF_FFFF_FFFF,
    0x8000_0000,
    0x7FFF_FFFF,
    0xFFFF_FFFF,
    0xFFFF_FFFF_8000_0000,
    0x1_0000_0000,
];

/// Operand pairs: uniform 64-bit values, with roughly one in eight drawn
/// from the boundary set above.
pub fn operand_pairs(seed: u64, count: usize) -> Vec<(u64, u64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let pick = |rng: &mut StdRng| -> u64 {
        match rng.gen_range(0..8) {
            0 => SPECIALS[rng.gen_range(0..SPECIALS.len())],
            1 => rng.gen::<u32>() as u64,
            _ => rng.gen(),
        }
    };
    (0..count).map(|_| (pick(&mut rng), pick(&mut rng))).collect()
}

/// Fixed edge-case table: (op, rs1, rs2, expected rd).
pub fn edge_table() -> Vec<(MOp, u64, u64, u64)> {
    let min = 0x8000_0000_0000_0000u64;
    let neg1 = u64::MAX;
    let min_w = 0xFFFF_FFFF_8000_0000u64;
    vec![
        (MOp::Div, 42, 0, u64::MAX),
        (MOp::Div, min, 0, u64::MAX),
        (MOp::Divu, 42, 0, u64::MAX),
        (MOp::Rem, 42, 0, 42),
        (MOp::Rem, neg1, 0, neg1),
        (MOp::Remu, 42, 0, 42),
        (MOp::Div, min, neg1, min),
        (MOp::Rem, min, neg1, 0),
        (MOp::Divw, 42, 0, u64::MAX),
        (MOp::Divuw, 42, 0, u64::MAX),
        (MOp::Remw, 0x1234_5678_FFFF_FFF0, 0, 0xFFFF_FFFF_FFFF_FFF0),
        (MOp::Remuw, 0x1234_5678_8000_0001, 0, 0xFFFF_FFFF_8000_0001),
        (MOp::Divw, 0x8000_0000, neg1, min_w),
        (MOp::Remw, 0x8000_0000, neg1, 0),
        (MOp::Mulh, neg1, neg1, 0),
        (MOp::Mulhu, neg1, neg1, u64::MAX - 1),
        (MOp::Mulhsu, neg1, neg1, u64::MAX),
    ]
}
