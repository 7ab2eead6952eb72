//! Exponential towers and the fractional-exponential functions `f_k`.
//!
//! `f_k` uses base `B = exp_{k-2}(2)` and top `T = exp_{k-1}(2)`: inputs up
//! to `B` map to `B + 1`, and larger inputs map to the smallest element
//! above them of the rows `exp_j(B+1), …, exp_j(T)` for `j = 0, 1, …`. So
//! `f_2` walks 3, 4, 8, 16, 256, 65536, …

use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the size of any intermediate value.
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("value would need {needed} bits, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("f_k is defined for k >= 2, got {0}")]
    BadIndex(u32),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GrowthFn {
    ExpTower(u32),
    FracExp(u32),
}

impl GrowthFn {
    pub fn eval(&self, n: &BigUint, budget: u64) -> Result<BigUint, GrowthError> {
        match *self {
            GrowthFn::ExpTower(k) => exp_tower(k, n, budget),
            GrowthFn::FracExp(k) => f_k(k, n, budget),
        }
    }
}

/// `2^e`, refusing results wider than `budget` bits.
fn pow2(e: &BigUint, budget: u64) -> Result<BigUint, GrowthError> {
    match e.to_u64() {
        Some(e) if e < budget => Ok(BigUint::one() << e),
        _ => Err(GrowthError::BudgetExceeded { needed: (e + 1u32).to_string(), budget }),
    }
}

pub fn exp_tower(k: u32, n: &BigUint, budget: u64) -> Result<BigUint, GrowthError> {
    let mut v = n.clone();
    for _ in 0..k {
        v = pow2(&v, budget)?;
    }
    Ok(v)
}

pub fn f_k(k: u32, n: &BigUint, budget: u64) -> Result<BigUint, GrowthError> {
    f_k_counted(k, n, budget).map(|(v, _)| v)
}

/// `f_k(n)` and the number of sequence elements examined to find it.
pub fn f_k_counted(k: u32, n: &BigUint, budget: u64) -> Result<(BigUint, u64), GrowthError> {
    if k < 2 {
        return Err(GrowthError::BadIndex(k));
    }
    let two = BigUint::from(2u32);
    let base = exp_tower(k - 2, &two, budget)?;
    let top = exp_tower(k - 1, &two, budget)?;
    if *n <= base {
        return Ok((base + 1u32, 0));
    }
    let width = (&top - &base).to_u64().expect("row width fits in u64 within the budget");
    let mut row: Vec<BigUint> = (1..=width).map(|i| &base + i).collect();
    let mut examined = 0u64;
    loop {
        for x in &row {
            examined += 1;
            if x > n {
                return Ok((x.clone(), examined));
            }
        }
        row = row.iter().map(|x| pow2(x, budget)).collect::<Result<_, _>>()?;
    }
}

pub fn iterate(f: GrowthFn, times: u32, n: &BigUint, budget: u64) -> Result<BigUint, GrowthError> {
    let mut v = n.clone();
    for _ in 0..times {
        v = f.eval(&v, budget)?;
    }
    Ok(v)
}

/// Iteration count `exp_{k-1}(2) - exp_{k-2}(2) - 1` for which `f_k`
/// iterated stays below `2^n`.
pub fn default_ell(k: u32) -> Result<u32, GrowthError> {
    if k < 2 {
        return Err(GrowthError::BadIndex(k));
    }
    let two = BigUint::from(2u32);
    let top = exp_tower(k - 1, &two, 64)?;
    let base = exp_tower(k - 2, &two, 64)?;
    (top - base - 1u32)
        .to_u32()
        .ok_or_else(|| GrowthError::BudgetExceeded { needed: "32".into(), budget: 32 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthRow {
    pub n: u64,
    pub f: String,
    pub iter_ell: String,
    pub two_n: String,
    pub pass_ell: bool,
    pub iter_m: String,
    pub pass_m: bool,
    /// `iter_ell / 2^n`, for watching the trend.
    pub ratio_ell: f64,
}

/// Checks `f_k^ℓ(n) < 2^n` and `f_k^m(n) ≥ 2^n` for each `n` in range.
pub fn growth_report(
    k: u32,
    range: std::ops::RangeInclusive<u64>,
    ell: u32,
    m: u32,
    budget: u64,
) -> Result<Vec<GrowthRow>, GrowthError> {
    let f = GrowthFn::FracExp(k);
    range
        .map(|n| {
            let nb = BigUint::from(n);
            let two_n = pow2(&nb, budget)?;
            let fx = f.eval(&nb, budget)?;
            let il = iterate(f, ell, &nb, budget)?;
            let im = iterate(f, m, &nb, budget)?;
            let ratio_ell = ratio_f64(&il, n);
            Ok(GrowthRow {
                n,
                f: fx.to_string(),
                pass_ell: il < two_n,
                iter_ell: il.to_string(),
                pass_m: im >= two_n,
                iter_m: im.to_string(),
                two_n: two_n.to_string(),
                ratio_ell,
            })
        })
        .collect()
}

fn ratio_f64(x: &BigUint, n: u64) -> f64 {
    // x / 2^n via the exponent of x, robust for huge values
    let bits = x.bits();
    let shift = bits.saturating_sub(53);
    let mantissa = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    let e = shift as f64 - n as f64;
    mantissa * e.exp2()
}

pub fn write_growth_csv<W: Write>(rows: &[GrowthRow], out: W) -> Result<(), GrowthError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "f", "iter_ℓ", "2^n", "pass_ℓ", "iter_m", "pass_m"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.f.clone(),
            r.iter_ell.clone(),
            r.two_n.clone(),
            r.pass_ell.to_string(),
            r.iter_m.clone(),
            r.pass_m.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: u64) -> BigUint {
        BigUint::from(n)
    }

    const BUD: u64 = DEFAULT_BIT_BUDGET;

    #[test]
    fn towers() {
        assert_eq!(exp_tower(0, &b(5), BUD).unwrap(), b(5));
        assert_eq!(exp_tower(1, &b(3), BUD).unwrap(), b(8));
        assert_eq!(exp_tower(2, &b(2), BUD).unwrap(), b(16));
        assert!(matches!(exp_tower(3, &b(5), BUD), Err(GrowthError::BudgetExceeded { .. })));
    }

    #[test]
    fn f2_values() {
        assert_eq!(f_k(2, &b(1), BUD).unwrap(), b(3));
        assert_eq!(f_k(2, &b(2), BUD).unwrap(), b(3));
        assert_eq!(f_k(2, &b(3), BUD).unwrap(), b(4));
        assert_eq!(f_k(2, &b(5), BUD).unwrap(), b(8));
        assert_eq!(f_k(2, &b(8), BUD).unwrap(), b(16));
        assert_eq!(f_k(2, &b(16), BUD).unwrap(), b(256));
        assert_eq!(f_k(2, &b(256), BUD).unwrap(), b(65536));
        assert!(matches!(f_k(1, &b(1), BUD), Err(GrowthError::BadIndex(1))));
    }

    #[test]
    fn f3_sequence() {
        // base 4, top 16: 5..16, then 2^5..2^16, ...
        assert_eq!(f_k(3, &b(0), BUD).unwrap(), b(5));
        assert_eq!(f_k(3, &b(4), BUD).unwrap(), b(5));
        assert_eq!(f_k(3, &b(9), BUD).unwrap(), b(10));
        assert_eq!(f_k(3, &b(16), BUD).unwrap(), b(32));
        assert_eq!(f_k(3, &b(33), BUD).unwrap(), b(64));
        let (v, examined) = f_k_counted(3, &b(16), BUD).unwrap();
        assert_eq!((v, examined), (b(32), 13));
    }

    #[test]
    fn iteration() {
        assert_eq!(iterate(GrowthFn::FracExp(2), 0, &b(7), BUD).unwrap(), b(7));
        assert_eq!(iterate(GrowthFn::FracExp(2), 3, &b(4), BUD).unwrap(), b(256));
        assert_eq!(iterate(GrowthFn::ExpTower(1), 2, &b(2), BUD).unwrap(), b(16));
        assert_eq!(iterate(GrowthFn::FracExp(2), 3, &b(3), BUD).unwrap(), b(16));
    }

    #[test]
    fn default_iteration_counts() {
        assert_eq!(default_ell(2).unwrap(), 1);
        assert_eq!(default_ell(3).unwrap(), 11);
    }

    #[test]
    fn report_rows() {
        let rows = growth_report(2, 3..=20, 1, 3, BUD).unwrap();
        assert!(rows.iter().all(|r| r.pass_ell && r.pass_m));
        let rows0 = growth_report(2, 1..=5, 0, 3, BUD).unwrap();
        assert!(rows0.iter().all(|r| r.pass_ell));
        let mut buf = Vec::new();
        write_growth_csv(&rows[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,f,iter_ℓ,2^n,pass_ℓ,iter_m,pass_m\n3,4,4,8,true,16,true\n");
        assert!((rows[0].ratio_ell - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ratio_of_huge_values() {
        let x = BigUint::one() << 5000u32;
        assert_eq!(ratio_f64(&x, 4999), 2.0);
    }
}
