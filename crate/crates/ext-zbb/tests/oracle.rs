mod support;

use modsim_ext_zbb::{compute, ZbbOp};
use proptest::prelude::*;
use support::zbb_oracle::{exhaustive_pairs, random_pairs, zbb_oracle};

#[test]
fn exhaustive_replicated_patterns_match_oracle() {
    for op in ZbbOp::ALL {
        for (a, b) in exhaustive_pairs(op) {
            assert_eq!(compute(op, a, b), zbb_oracle(op, a, b), "{op:?}({a:#x}, {b:#x})");
        }
    }
}

#[test]
fn random_operands_match_oracle() {
    for (i, op) in ZbbOp::ALL.into_iter().enumerate() {
        for (a, b) in random_pairs(op, 0x2bb0 + i as u64, 100_000) {
            assert_eq!(compute(op, a, b), zbb_oracle(op, a, b), "{op:?}({a:#x}, {b:#x})");
        }
    }
}

#[test]
fn zero_operand_rows() {
    assert_eq!(zbb_oracle(ZbbOp::Clz, 0, 0), 64);
    assert_eq!(zbb_oracle(ZbbOp::Ctz, 0, 0), 64);
    assert_eq!(zbb_oracle(ZbbOp::Cpop, 0, 0), 0);
}

proptest! {
    #[test]
    fn rol_is_ror_by_complement(x: u64, k in 0u64..64) {
        prop_assert_eq!(compute(ZbbOp::Rol, x, k), compute(ZbbOp::Ror, x, (64 - k) % 64));
    }

    #[test]
    fn rev8_is_an_involution(x: u64) {
        prop_assert_eq!(compute(ZbbOp::Rev8, compute(ZbbOp::Rev8, x, 0), 0), x);
    }

    #[test]
    fn orc_b_is_idempotent(x: u64) {
        let once = compute(ZbbOp::OrcB, x, 0);
        prop_assert_eq!(compute(ZbbOp::OrcB, once, 0), once);
    }
}
