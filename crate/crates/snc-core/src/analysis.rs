//! Closed-form error, success, and delay expressions for the three schemes.
//!
//! Everything here is analytic; the Monte Carlo engine in [`crate::sim`]
//! exists to confirm these numbers and explore regimes they don't cover.

use crate::design::SncDesign;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An analytic failure-probability estimate: optionally an exact value,
/// always the leading-order term c·ε^exponent evaluated at the given ε,
/// and whether the estimate upper-bounds the true failure rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub exact: Option<f64>,
    pub leading: f64,
    pub exponent: u32,
    pub is_upper_bound: bool,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && (0.0..=1.0).contains(&epsilon)) {
        return Err(Error::parameter(format!(
            "erasure probability must lie in [0, 1], got {epsilon}"
        )));
    }
    Ok(())
}

fn check_field_order(q: u16) -> Result<()> {
    if !(2..=256).contains(&q) || !q.is_power_of_two() {
        return Err(Error::parameter(format!(
            "field order must be a power of two in [2, 256], got {q}"
        )));
    }
    Ok(())
}

/// Per-deadline failure probability of K-repetition: all K copies lost.
pub fn krep_error(epsilon: f64, k: u32) -> Result<f64> {
    check_epsilon(epsilon)?;
    if k < 1 {
        return Err(Error::parameter("repetition count must be at least 1"));
    }
    Ok(epsilon.powi(k as i32))
}

/// Per-deadline failure probability of the identity-matrix (K, K−1, 2)
/// sliding design under the two-route decoder: exactly
/// ε^K (1−(1−ε)²)^(K−1); full elimination can only do better, so the value
/// also upper-bounds that decoder. The leading term is 2^(K−1) ε^(2K−1).
pub fn snc_simple_error(epsilon: f64, k: u32) -> Result<ErrorEstimate> {
    check_epsilon(epsilon)?;
    if k < 2 {
        return Err(Error::parameter("the sliding design needs at least 2 slots"));
    }
    // 1 − (1−ε)² = ε(2−ε), so the product collapses to ε^(2K−1)(2−ε)^(K−1)
    let exponent = 2 * k - 1;
    let exact = epsilon.powi(exponent as i32) * (2.0 - epsilon).powi(k as i32 - 1);
    let leading = 2f64.powi(k as i32 - 1) * epsilon.powi(exponent as i32);
    Ok(ErrorEstimate {
        exact: Some(exact),
        leading,
        exponent,
        is_upper_bound: true,
    })
}

/// Leading-order failure bound 2^D ε^(μ+D) for a general sliding design.
/// Requires the diagonal condition; designs without it have no such bound
/// and get `NotApplicable`.
pub fn snc_design_bound(design: &SncDesign, epsilon: f64) -> Result<ErrorEstimate> {
    check_epsilon(epsilon)?;
    let exponent = design.leading_exponent()?;
    let leading = 2f64.powi(design.d() as i32) * epsilon.powi(exponent as i32);
    Ok(ErrorEstimate {
        exact: None,
        leading,
        exponent,
        is_upper_bound: true,
    })
}

/// Probability that S i.i.d. uniform rows of GF(q)^M (zero rows allowed)
/// have rank M: Π_{n=0}^{M−1} (1 − q^{n−S}); zero when S < M.
pub fn rlnc_rank_prob(s: u32, m: u32, q: u16) -> Result<f64> {
    check_field_order(q)?;
    if m < 1 {
        return Err(Error::parameter("need at least one data packet"));
    }
    if s < m {
        return Ok(0.0);
    }
    let mut p = 1.0;
    for n in 0..m {
        // exponents ≥ 1100 underflow to zero anyway; avoid i32 overflow
        let e = (s - n).min(1100) as i32;
        p *= 1.0 - (q as f64).powi(-e);
    }
    Ok(p)
}

/// Probability that S i.i.d. uniform *nonzero* rows of GF(q)^M have rank
/// M. Exact rational evaluated in big integers:
/// Σ_{n} (−1)^n C(S,n) U(S−n) / (q^M − 1)^S, where U(j) counts j-tuples of
/// arbitrary vectors spanning GF(q)^M (inclusion-exclusion over zero rows).
pub fn rlnc_rank_prob_nz(s: u32, m: u32, q: u16) -> Result<f64> {
    check_field_order(q)?;
    if m < 1 {
        return Err(Error::parameter("need at least one data packet"));
    }
    if s > 64 || m > 16 {
        return Err(Error::parameter(format!(
            "exact evaluation supports S <= 64 and M <= 16, got S={s}, M={m}"
        )));
    }
    if s < m {
        return Ok(0.0);
    }
    let qb = BigInt::from(q);
    // number of j-tuples over GF(q)^M spanning the space
    let spanning = |j: u32| -> BigInt {
        if j < m {
            return BigInt::zero();
        }
        let qj = qb.pow(j);
        (0..m).map(|i| &qj - qb.pow(i)).product()
    };
    let mut num = BigInt::zero();
    let mut binom = BigInt::one();
    for n in 0..=s {
        let term = &binom * spanning(s - n);
        if n % 2 == 0 {
            num += term;
        } else {
            num -= term;
        }
        if n < s {
            binom = binom * (s - n) / (n + 1);
        }
    }
    let den = (qb.pow(m) - BigInt::one()).pow(s);
    big_ratio_to_f64(&num, &den)
}

/// Convert a probability num/den (0 ≤ num ≤ den) to f64. Small operands
/// divide directly in f64 (exact when both fit 53 bits); larger ones are
/// scaled so the quotient carries ~64 significant bits before rounding.
fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> Result<f64> {
    if num.is_negative() || den.is_zero() || num > den {
        return Err(Error::numeric(format!(
            "ratio {num}/{den} is not a probability"
        )));
    }
    if num.is_zero() {
        return Ok(0.0);
    }
    if num == den {
        return Ok(1.0);
    }
    if let (Some(n), Some(d)) = (num.to_u64(), den.to_u64()) {
        if n < (1 << 53) && d < (1 << 53) {
            return Ok(n as f64 / d as f64);
        }
    }
    let shift = (den.bits() - num.bits() + 64) as i32;
    let scaled: BigInt = (num << shift as u64) / den;
    let q = scaled
        .to_u128()
        .ok_or_else(|| Error::numeric("scaled quotient exceeds 128 bits"))?;
    Ok(libm::ldexp(q as f64, -shift))
}

/// Probability that a batch of M data packets is fully recovered from N
/// random linear combinations (zero coefficient vectors allowed) sent over
/// an erasure channel with probability ε: the survivor count S is
/// Binomial(N, 1−ε) and the batch succeeds with `rlnc_rank_prob(S, M, q)`.
pub fn rlnc_all_success(n: u32, m: u32, epsilon: f64, q: u16) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_field_order(q)?;
    if m < 1 || n < 1 {
        return Err(Error::parameter("need at least one packet each way"));
    }
    if epsilon == 0.0 {
        return rlnc_rank_prob(n, m, q);
    }
    if epsilon == 1.0 {
        return Ok(0.0);
    }
    let ln_keep = (1.0 - epsilon).ln();
    let ln_lose = epsilon.ln();
    let lg_n = libm::lgamma(n as f64 + 1.0);
    let mut total = 0.0;
    for s in m..=n {
        let ln_binom =
            lg_n - libm::lgamma(s as f64 + 1.0) - libm::lgamma((n - s) as f64 + 1.0);
        let weight = (ln_binom + s as f64 * ln_keep + (n - s) as f64 * ln_lose).exp();
        total += weight * rlnc_rank_prob(s, m, q)?;
    }
    Ok(total)
}

/// Probability that all M packets of a K-repetition stream survive: each
/// fails independently with ε^K, so (1 − ε^K)^M. N must equal M·K.
pub fn krep_all_success(n: u32, m: u32, epsilon: f64, k: u32) -> Result<f64> {
    check_epsilon(epsilon)?;
    if m < 1 || k < 1 {
        return Err(Error::parameter("need at least one packet and one copy"));
    }
    if n != m * k {
        return Err(Error::parameter(format!(
            "slot budget must equal M*K = {}, got {n}",
            m * k
        )));
    }
    Ok((1.0 - epsilon.powi(k as i32)).powi(m as i32))
}

/// Which scheme's deadline geometry to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelayScheme {
    Krep,
    Snc,
    BlockNc,
}

/// Worst-case decode delay in slots from a packet's generation to its
/// deadline: K for repetition, K(D+1) for a sliding design, and 2MK for a
/// block batch (the whole batch is sent, then the whole batch is decoded
/// at the end of a same-length reception window). Parameters a scheme does
/// not use are ignored.
pub fn decode_delay_slots(scheme: DelayScheme, k: u32, d: u32, m: u64) -> u64 {
    match scheme {
        DelayScheme::Krep => k as u64,
        DelayScheme::Snc => k as u64 * (d as u64 + 1),
        DelayScheme::BlockNc => 2 * m * k as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::SncDesign;

    fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs()
    }

    #[test]
    fn repetition_error_is_the_plain_power() {
        assert!(rel_err(krep_error(0.1, 3).unwrap(), 1e-3) <= 1e-15);
        assert_eq!(krep_error(0.5, 1).unwrap(), 0.5);
        assert_eq!(krep_error(0.0, 4).unwrap(), 0.0);
        assert_eq!(krep_error(1.0, 4).unwrap(), 1.0);
        assert!(krep_error(0.1, 0).is_err());
        assert!(krep_error(-0.1, 2).is_err());
        assert!(krep_error(1.5, 2).is_err());
    }

    #[test]
    fn simple_design_error_fixtures() {
        let e = snc_simple_error(0.1, 3).unwrap();
        assert!(rel_err(e.exact.unwrap(), 3.61e-5) <= 1e-13);
        assert!(rel_err(e.leading, 4e-5) <= 1e-13);
        assert_eq!(e.exponent, 5);
        assert!(e.is_upper_bound);

        let e = snc_simple_error(0.01, 2).unwrap();
        assert!(rel_err(e.leading, 2e-6) <= 1e-13);
        assert_eq!(e.exponent, 3);

        let e = snc_simple_error(0.2, 4).unwrap();
        assert!(rel_err(e.leading, 1.024e-4) <= 1e-13);
        assert_eq!(e.exponent, 7);

        assert!(snc_simple_error(0.1, 1).is_err());
        assert!(snc_simple_error(2.0, 3).is_err());
    }

    #[test]
    fn simple_design_exact_never_exceeds_leading() {
        for k in 2..=8 {
            for i in 0..=100 {
                let eps = i as f64 / 100.0;
                let e = snc_simple_error(eps, k).unwrap();
                assert!(e.exact.unwrap() <= e.leading + 1e-18);
            }
        }
    }

    #[test]
    fn design_bound_fixture() {
        let d = SncDesign::builtin("table3").unwrap();
        let e = snc_design_bound(&d, 0.2).unwrap();
        assert!(rel_err(e.leading, 2.56e-4) <= 1e-13);
        assert_eq!(e.exponent, 6);
        assert_eq!(e.exact, None);
        assert!(e.is_upper_bound);
    }

    #[test]
    fn design_bound_coincides_with_simple_family() {
        for k in 2..=8 {
            let d = SncDesign::builtin(&format!("simple:{k}")).unwrap();
            let general = snc_design_bound(&d, 0.1).unwrap();
            let simple = snc_simple_error(0.1, k).unwrap();
            assert_eq!(general.exponent, simple.exponent);
            assert!(rel_err(general.leading, simple.leading) <= 1e-15);
        }
    }

    #[test]
    fn design_bound_requires_the_diagonal() {
        let d = SncDesign::builtin("table2").unwrap();
        assert!(matches!(
            snc_design_bound(&d, 0.1),
            Err(Error::NotApplicable(_))
        ));
        let d = SncDesign::builtin("table3").unwrap();
        assert!(snc_design_bound(&d, f64::NAN).is_err());
    }

    #[test]
    fn rank_prob_exact_fixtures() {
        // binary-field values are exact dyadic products
        assert_eq!(rlnc_rank_prob(2, 2, 2).unwrap(), 0.375);
        assert_eq!(rlnc_rank_prob(3, 2, 2).unwrap(), 21.0 / 32.0);
        assert_eq!(rlnc_rank_prob(4, 2, 2).unwrap(), 105.0 / 128.0);
        assert_eq!(rlnc_rank_prob(5, 2, 2).unwrap(), 465.0 / 512.0);
        assert_eq!(rlnc_rank_prob(3, 3, 2).unwrap(), 21.0 / 64.0);
        assert_eq!(rlnc_rank_prob(4, 3, 2).unwrap(), 315.0 / 512.0);
        assert_eq!(rlnc_rank_prob(5, 3, 2).unwrap(), 3255.0 / 4096.0);
        assert_eq!(rlnc_rank_prob(1, 1, 2).unwrap(), 0.5);
        // quaternary: (1 − 4^{-3})(1 − 4^{-2}) = (63/64)(15/16)
        assert_eq!(rlnc_rank_prob(3, 2, 4).unwrap(), 945.0 / 1024.0);
    }

    #[test]
    fn rank_prob_edges_and_validation() {
        assert_eq!(rlnc_rank_prob(1, 2, 2).unwrap(), 0.0);
        assert_eq!(rlnc_rank_prob(0, 1, 2).unwrap(), 0.0);
        assert_eq!(rlnc_rank_prob(10_000, 3, 2).unwrap(), 1.0);
        assert!(rlnc_rank_prob(2, 0, 2).is_err());
        assert!(rlnc_rank_prob(2, 2, 3).is_err());
        assert!(rlnc_rank_prob(2, 2, 512).is_err());
    }

    #[test]
    fn rank_prob_nz_exact_fixtures() {
        assert_eq!(rlnc_rank_prob_nz(2, 2, 2).unwrap(), 2.0 / 3.0);
        assert_eq!(rlnc_rank_prob_nz(3, 2, 2).unwrap(), 8.0 / 9.0);
        assert_eq!(rlnc_rank_prob_nz(4, 2, 2).unwrap(), 26.0 / 27.0);
        assert_eq!(rlnc_rank_prob_nz(5, 2, 2).unwrap(), 80.0 / 81.0);
        assert_eq!(rlnc_rank_prob_nz(3, 3, 2).unwrap(), 24.0 / 49.0);
        assert_eq!(rlnc_rank_prob_nz(4, 3, 2).unwrap(), 264.0 / 343.0);
        assert_eq!(rlnc_rank_prob_nz(5, 3, 2).unwrap(), 2160.0 / 2401.0);
        assert_eq!(rlnc_rank_prob_nz(1, 1, 2).unwrap(), 1.0);
        assert_eq!(rlnc_rank_prob_nz(7, 1, 2).unwrap(), 1.0);
    }

    #[test]
    fn rank_prob_nz_bounds_and_validation() {
        assert_eq!(rlnc_rank_prob_nz(2, 3, 2).unwrap(), 0.0);
        assert!(rlnc_rank_prob_nz(65, 2, 2).is_err());
        assert!(rlnc_rank_prob_nz(5, 17, 2).is_err());
        assert!(rlnc_rank_prob_nz(2, 2, 3).is_err());
        // the largest permitted case stays finite and sane
        let p = rlnc_rank_prob_nz(64, 16, 256).unwrap();
        assert!(p > 0.999_999 && p <= 1.0);
    }

    #[test]
    fn excluding_zero_rows_never_hurts() {
        for q in [2u16, 4] {
            for m in 1..=3u32 {
                for s in m..=8 {
                    let plain = rlnc_rank_prob(s, m, q).unwrap();
                    let nz = rlnc_rank_prob_nz(s, m, q).unwrap();
                    assert!((0.0..=1.0).contains(&plain));
                    assert!((0.0..=1.0).contains(&nz));
                    assert!(
                        nz >= plain - 1e-15,
                        "S={s} M={m} q={q}: {nz} < {plain}"
                    );
                }
            }
        }
    }

    #[test]
    fn batch_success_fixtures() {
        let table = [
            (6u32, 2u32, 0.1, 2u16, 0.91931491845703125),
            (15, 5, 0.1, 4, 0.9999837615437100),
            (4, 2, 0.3, 2, 0.56629453125),
        ];
        for (n, m, eps, q, want) in table {
            let got = rlnc_all_success(n, m, eps, q).unwrap();
            assert!(
                rel_err(got, want) <= 1e-10,
                "all_success({n},{m},{eps},{q}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn batch_success_extremes() {
        assert_eq!(
            rlnc_all_success(6, 2, 0.0, 2).unwrap(),
            rlnc_rank_prob(6, 2, 2).unwrap()
        );
        assert_eq!(rlnc_all_success(6, 2, 1.0, 2).unwrap(), 0.0);
        assert_eq!(rlnc_all_success(1, 2, 0.1, 2).unwrap(), 0.0); // n < m
        assert!(rlnc_all_success(0, 2, 0.1, 2).is_err());
        assert!(rlnc_all_success(6, 0, 0.1, 2).is_err());
        assert!(rlnc_all_success(6, 2, 0.1, 3).is_err());
    }

    #[test]
    fn batch_vs_repetition_ordering_flips_with_epsilon() {
        // same slot budget N = MK both ways; at tiny ε repetition wins,
        // at moderate ε the batch code wins
        let f_nc_lo = 1.0 - rlnc_all_success(15, 5, 1e-3, 4).unwrap();
        let f_k_lo = 1.0 - krep_all_success(15, 5, 1e-3, 3).unwrap();
        assert!(rel_err(f_nc_lo, 3.32176169e-7) <= 1e-6, "got {f_nc_lo}");
        assert!(rel_err(f_k_lo, 5.0e-9) <= 1e-6, "got {f_k_lo}");
        assert!(f_nc_lo > f_k_lo);

        let f_nc_hi = 1.0 - rlnc_all_success(30, 10, 0.1, 4).unwrap();
        let f_k_hi = 1.0 - krep_all_success(30, 10, 0.1, 3).unwrap();
        assert!(rel_err(f_nc_hi, 7.94275934e-10) <= 1e-3, "got {f_nc_hi}");
        assert!(
            rel_err(f_k_hi, 0.0099551197902517901200) <= 1e-12,
            "got {f_k_hi}"
        );
        assert!(f_nc_hi < f_k_hi);
    }

    #[test]
    fn repetition_stream_success_fixture() {
        let failure = 1.0 - krep_all_success(300, 100, 0.1, 3).unwrap();
        assert!(rel_err(failure, 0.095207852886290957968) <= 1e-12);
        assert!(krep_all_success(299, 100, 0.1, 3).is_err());
        assert!(krep_all_success(300, 0, 0.1, 3).is_err());
        assert_eq!(krep_all_success(300, 100, 0.0, 3).unwrap(), 1.0);
        assert_eq!(krep_all_success(300, 100, 1.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn repetition_crossover_counts() {
        // smallest K driving the per-deadline failure to 1e-6 at ε = 0.1;
        // the repetition boundary case is exact in reals (0.1^6 = 1e-6),
        // so allow f64 representation slack
        let target = 1e-6;
        let slack = target * (1.0 + 1e-9);
        let min_krep = (1..20)
            .find(|&k| krep_error(0.1, k).unwrap() <= slack)
            .unwrap();
        assert_eq!(min_krep, 6);
        let min_snc = (2..20)
            .find(|&k| snc_simple_error(0.1, k).unwrap().exact.unwrap() <= slack)
            .unwrap();
        assert_eq!(min_snc, 4);
    }

    #[test]
    fn delay_slot_fixtures() {
        assert_eq!(decode_delay_slots(DelayScheme::Snc, 3, 2, 0), 9);
        assert_eq!(decode_delay_slots(DelayScheme::Snc, 4, 2, 0), 12);
        assert_eq!(decode_delay_slots(DelayScheme::BlockNc, 3, 0, 6), 36);
        assert_eq!(decode_delay_slots(DelayScheme::BlockNc, 4, 0, 6), 48);
        assert_eq!(decode_delay_slots(DelayScheme::Krep, 6, 0, 0), 6);
    }

    #[test]
    fn delay_grows_with_each_parameter() {
        for k in 1..6u32 {
            assert!(
                decode_delay_slots(DelayScheme::Krep, k, 0, 0)
                    < decode_delay_slots(DelayScheme::Krep, k + 1, 0, 0)
            );
            for d in 1..6 {
                assert!(
                    decode_delay_slots(DelayScheme::Snc, k, d, 0)
                        < decode_delay_slots(DelayScheme::Snc, k, d + 1, 0)
                );
            }
            for m in 1..6 {
                assert!(
                    decode_delay_slots(DelayScheme::BlockNc, k, 0, m)
                        < decode_delay_slots(DelayScheme::BlockNc, k, 0, m + 1)
                );
            }
        }
    }
}
