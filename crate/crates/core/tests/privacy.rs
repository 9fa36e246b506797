use dldp_core::mechanism::distribution_table;
use dldp_core::{Mode, SnpValue, StateSet};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rr_pair(t: &BigRational) -> (BigRational, BigRational) {
    let two = BigRational::from_integer(BigInt::from(2));
    let denom = BigRational::one() + two * t;
    (BigRational::one() / &denom, t / denom)
}

/// Every violation of `Pr(y | a) <= e^eps Pr(y | b)` over non-eliminated
/// inputs `a`, `b`, where `e^-eps = t` exactly.
fn violations(t: &BigRational) -> Vec<String> {
    let (p, q) = rr_pair(t);
    let mut bad = Vec::new();
    for mode in [Mode::Plain, Mode::Beacon] {
        for bits in 0u8..8 {
            let elim = StateSet::from_bits(bits);
            let candidates = if elim == StateSet::FULL { StateSet::FULL } else { elim.complement() };
            let tables: Vec<(SnpValue, [BigRational; 3])> =
                candidates.iter().map(|x| (x, distribution_table(x, elim, mode, p.clone(), q.clone()).0)).collect();
            for (a, ta) in &tables {
                let total = ta.iter().fold(BigRational::zero(), |acc, v| acc + v);
                if !total.is_one() {
                    bad.push(format!("{mode:?} {elim} x={a}: mass {total}"));
                }
                for (b, tb) in &tables {
                    for y in 0..3 {
                        if ta[y].is_zero() && tb[y].is_zero() {
                            continue;
                        }
                        if &ta[y] * t > tb[y] {
                            bad.push(format!("{mode:?} {elim} y={y}: Pr(.|{a}) = {} vs Pr(.|{b}) = {}", ta[y], tb[y]));
                        }
                    }
                }
            }
        }
    }
    bad
}

#[test]
fn every_branch_is_epsilon_private_in_exact_arithmetic() {
    for eps in [0.1f64, 0.5, 1.0, 2.0, 5.0] {
        let t = BigRational::from_float((-eps).exp()).unwrap();
        let bad = violations(&t);
        assert!(bad.is_empty(), "eps {eps}: {bad:?}");
    }
}

#[test]
fn beacon_row_for_eliminated_heterozygote() {
    let t = BigRational::new(BigInt::from(1), BigInt::from(3));
    let (p, q) = rr_pair(&t);
    let (row, _) =
        distribution_table(SnpValue::One, StateSet::from_values(&[SnpValue::One]), Mode::Beacon, p.clone(), q.clone());
    let p_prime = &p / (&p + &q);
    let q_prime = &q / (&p + &q);
    assert_eq!(row, [q_prime, BigRational::zero(), p_prime]);
}

proptest! {
    #[test]
    fn privacy_holds_for_any_rational_budget(num in 1u32..1000, extra in 0u32..1000) {
        let t = BigRational::new(BigInt::from(num), BigInt::from(num + extra));
        let bad = violations(&t);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }
}
