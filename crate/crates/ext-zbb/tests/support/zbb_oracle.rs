//! Bit-at-a-time reference model of the Zbb subset.

use modsim_ext_zbb::ZbbOp;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn bit(x: u64, i: u32) -> u64 {
    (x >> i) & 1
}

fn map_bits(f: impl Fn(u32) -> u64) -> u64 {
    (0..64).fold(0, |acc, i| acc | (f(i) & 1) << i)
}

/// Signed compare by scanning from the most significant bit.
fn less_than(a: u64, b: u64, signed: bool) -> bool {
    for i in (0..64).rev() {
        let (x, y) = (bit(a, i), bit(b, i));
        if x != y {
            // At the sign bit a set bit means smaller.
            return if signed && i == 63 { x == 1 } else { x == 0 };
        }
    }
    false
}

fn sign_extend_from(a: u64, top: u32) -> u64 {
    map_bits(|i| if i <= top { bit(a, i) } else { bit(a, top) })
}

fn rotate_left(a: u64, k: u32) -> u64 {
    map_bits(|i| bit(a, (i + 64 - k) % 64))
}

pub fn zbb_oracle(op: ZbbOp, a: u64, b: u64) -> u64 {
    match op {
        ZbbOp::Andn => map_bits(|i| bit(a, i) & (1 - bit(b, i))),
        ZbbOp::Orn => map_bits(|i| bit(a, i) | (1 - bit(b, i))),
        ZbbOp::Xnor => map_bits(|i| (bit(a, i) == bit(b, i)) as u64),
        ZbbOp::Clz => {
            let mut n = 0;
            for i in (0..64).rev() {
                if bit(a, i) == 1 {
                    break;
                }
                n += 1;
            }
            n
        }
        ZbbOp::Ctz => {
            let mut n = 0;
            for i in 0..64 {
                if bit(a, i) == 1 {
                    break;
                }
                n += 1;
            }
            n
        }
        ZbbOp::Cpop => (0..64).map(|i| bit(a, i)).sum(),
        ZbbOp::Min => {
            if less_than(a, b, true) {
                a
            } else {
                b
            }
        }
        ZbbOp::Max => {
            if less_than(a, b, true) {
                b
            } else {
                a
            }
        }
        ZbbOp::Minu => {
            if less_than(a, b, false) {
                a
            } else {
                b
            }
        }
        ZbbOp::Maxu => {
            if less_than(a, b, false) {
                b
            } else {
                a
            }
        }
        ZbbOp::SextB => sign_extend_from(a, 7),
        ZbbOp::SextH => sign_extend_from(a, 15),
        ZbbOp::ZextH => map_bits(|i| if i < 16 { bit(a, i) } else { 0 }),
        ZbbOp::Rol => rotate_left(a, (b % 64) as u32),
        ZbbOp::Ror | ZbbOp::Rori => rotate_left(a, ((64 - b % 64) % 64) as u32),
        ZbbOp::Rev8 => map_bits(|i| bit(a, (7 - i / 8) * 8 + i % 8)),
        ZbbOp::OrcB => map_bits(|i| {
            let byte = i / 8;
            (0..8).any(|j| bit(a, byte * 8 + j) == 1) as u64
        }),
    }
}

/// 16-bit pattern repeated four times.
pub fn replicate(pattern: u16) -> u64 {
    (pattern as u64) * 0x0001_0001_0001_0001
}

/// Every 16-bit pattern replicated across the word, paired with a second
/// replicated pattern (or a shift amount for RORI).
pub fn exhaustive_pairs(op: ZbbOp) -> impl Iterator<Item = (u64, u64)> {
    (0..=u16::MAX).map(move |p| {
        let a = replicate(p);
        let b = if op == ZbbOp::Rori { (p as u64) % 64 } else { replicate(p.rotate_left(5) ^ 0xA5C3) };
        (a, b)
    })
}

pub fn random_pairs(op: ZbbOp, seed: u64, count: usize) -> Vec<(u64, u64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a: u64 = rng.gen();
            let b: u64 = if op == ZbbOp::Rori { rng.gen_range(0..64) } else { rng.gen() };
            (a, b)
        })
        .collect()
}
