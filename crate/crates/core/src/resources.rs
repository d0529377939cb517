//! Physical-qubit budgets of the conventional and tracking schedules.
//!
//! All counts are exact integers and rates exact rationals; percentages are
//! only rounded when rendered.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn pow(base: u128, exp: u32, what: &'static str) -> Result<u128> {
    base.checked_pow(exp).ok_or(Error::Overflow(what))
}

fn check_level(l: u32) -> Result<u32> {
    if l == 0 {
        Err(Error::ZeroLevel)
    } else {
        Ok(l - 1)
    }
}

/// Physical qubits in one level-`l` logical block, `4 * 3^(l-1)`.
pub fn logical_block_size(l: u32) -> Result<u128> {
    Ok(4 * pow(3, check_level(l)?, "logical block size")?)
}

/// Physical qubits consumed preparing a level-`l` logical Bell pair.
pub fn bell_pair_cost(l: u32) -> Result<u128> {
    pow(12, check_level(l)?, "Bell pair cost")?
        .checked_mul(16)
        .ok_or(Error::Overflow("Bell pair cost"))
}

/// Physical qubits consumed preparing one level-`l` logical qubit.
pub fn logical_prep_cost(l: u32) -> Result<u128> {
    pow(12, check_level(l)?, "logical preparation cost")?
        .checked_mul(4)
        .ok_or(Error::Overflow("logical preparation cost"))
}

/// `n` logical QECs, one Bell pair each.
pub fn r_conventional(n: u32, l: u32) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidConfig("cycles must be at least 1".into()));
    }
    bell_pair_cost(l)?
        .checked_mul(n as u128)
        .ok_or(Error::Overflow("conventional resource count"))
}

/// `n - 1` single-qubit QECs (two ancillas per physical qubit) and one
/// logical QEC.
pub fn r_tracking(n: u32, l: u32) -> Result<u128> {
    if n < 2 {
        return Err(Error::InvalidConfig(
            "tracking needs at least 2 cycles".into(),
        ));
    }
    let ancillas = logical_block_size(l)?
        .checked_mul(2 * (n as u128 - 1))
        .ok_or(Error::Overflow("tracking resource count"))?;
    ancillas
        .checked_add(bell_pair_cost(l)?)
        .ok_or(Error::Overflow("tracking resource count"))
}

/// Closed-form reduction rate `(2(n-1) 4^(l-1) - n + 1) / (2n 4^(l-1))`.
pub fn reduction_rate(n: u32, l: u32) -> Result<Ratio<u128>> {
    if n < 2 {
        return Err(Error::InvalidConfig(
            "tracking needs at least 2 cycles".into(),
        ));
    }
    let four = pow(4, check_level(l)?, "reduction rate")?;
    let n = n as u128;
    let num = (2 * (n - 1))
        .checked_mul(four)
        .ok_or(Error::Overflow("reduction rate"))?
        - (n - 1);
    let den = (2 * n)
        .checked_mul(four)
        .ok_or(Error::Overflow("reduction rate"))?;
    Ok(Ratio::new(num, den))
}

/// A rate as a percentage with one decimal, rounded half away from zero.
pub fn percent_one_decimal(rate: Ratio<u128>) -> String {
    let tenths = (rate * Ratio::from_integer(1000u128)).round().to_integer();
    format!("{}.{}", tenths / 10, tenths % 10)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    #[serde(rename = "n")]
    pub cycles: u32,
    #[serde(rename = "l")]
    pub level: u32,
    pub r_conventional: u128,
    pub r_tracking: u128,
    pub saved: u128,
    /// Exact rate as `"num/den"`.
    #[serde(skip)]
    pub reduction_rate: Ratio<u128>,
    pub rate_percent: String,
}

impl ResourceReport {
    pub fn new(cycles: u32, level: u32) -> Result<Self> {
        let r_conventional = r_conventional(cycles, level)?;
        let r_tracking = r_tracking(cycles, level)?;
        let reduction_rate = reduction_rate(cycles, level)?;
        Ok(Self {
            cycles,
            level,
            r_conventional,
            r_tracking,
            saved: r_conventional - r_tracking,
            rate_percent: percent_one_decimal(reduction_rate),
            reduction_rate,
        })
    }
}

/// One report per level for a fixed number of cycles.
pub fn resource_table(cycles: u32, levels: &[u32]) -> Result<Vec<ResourceReport>> {
    levels
        .iter()
        .map(|&l| ResourceReport::new(cycles, l))
        .collect()
}

/// CSV with columns `n,l,r_conventional,r_tracking,saved,rate_percent`.
pub fn write_csv<W: std::io::Write>(rows: &[ResourceReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(rows: &[ResourceReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn conventional_counts() {
        assert_eq!(r_conventional(2, 1).unwrap(), 32);
        assert_eq!(r_conventional(2, 2).unwrap(), 384);
        assert_eq!(r_conventional(1, 1).unwrap(), 16);
    }

    #[test]
    fn tracking_counts() {
        assert_eq!(r_tracking(2, 1).unwrap(), 24);
        assert_eq!(r_tracking(2, 2).unwrap(), 216);
        assert_eq!(r_tracking(3, 1).unwrap(), 32);
        assert!(r_tracking(1, 1).is_err());
    }

    #[test]
    fn rates() {
        assert_eq!(reduction_rate(2, 1).unwrap(), Ratio::new(1, 4));
        assert_eq!(reduction_rate(2, 2).unwrap(), Ratio::new(7, 16));
        assert_eq!(reduction_rate(2, 5).unwrap(), Ratio::new(511, 1024));
        let pct: Vec<String> = (1..=5)
            .map(|l| percent_one_decimal(reduction_rate(2, l).unwrap()))
            .collect();
        assert_eq!(pct, ["25.0", "43.8", "48.4", "49.6", "49.9"]);
    }

    #[test]
    fn block_and_costs() {
        assert_eq!(logical_block_size(1).unwrap(), 4);
        assert_eq!(logical_block_size(3).unwrap(), 36);
        assert_eq!(bell_pair_cost(2).unwrap(), 192);
        assert_eq!(logical_prep_cost(1).unwrap(), 4);
        assert!(logical_block_size(0).is_err());
    }

    #[test]
    fn saved_qubits() {
        assert_eq!(ResourceReport::new(2, 1).unwrap().saved, 8);
        assert_eq!(ResourceReport::new(3, 1).unwrap().saved, 16);
        // two-cycle saving is 16*12^(l-1) - 8*3^(l-1)
        for l in 1..=6u32 {
            let expect = 16 * 12u128.pow(l - 1) - 8 * 3u128.pow(l - 1);
            assert_eq!(ResourceReport::new(2, l).unwrap().saved, expect);
        }
    }

    #[test]
    fn overflow_is_an_error() {
        assert!(matches!(r_conventional(2, 60), Err(Error::Overflow(_))));
    }

    #[test]
    fn closed_form_equals_difference_quotient() {
        for n in 2..=100u32 {
            for l in 1..=8u32 {
                let con = r_conventional(n, l).unwrap();
                let pro = r_tracking(n, l).unwrap();
                let rate = reduction_rate(n, l).unwrap();
                assert_eq!(
                    rate * Ratio::from_integer(con),
                    Ratio::from_integer(con - pro)
                );
            }
        }
    }

    #[test]
    fn two_cycle_closed_form() {
        for l in 1..=8u32 {
            let expect = Ratio::new(1u128, 2) - Ratio::new(1, 4 * 4u128.pow(l - 1));
            assert_eq!(reduction_rate(2, l).unwrap(), expect);
        }
    }

    #[test]
    fn csv_layout() {
        let rows = resource_table(2, &[1, 2]).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "n,l,r_conventional,r_tracking,saved,rate_percent\n2,1,32,24,8,25.0\n2,2,384,216,168,43.8\n"
        );
    }

    proptest! {
        #[test]
        fn rate_monotone(n in 2u32..60, l in 1u32..8) {
            let r = reduction_rate(n, l).unwrap();
            prop_assert!(reduction_rate(n + 1, l).unwrap() > r);
            prop_assert!(reduction_rate(n, l + 1).unwrap() > r);
            prop_assert!(r < Ratio::from_integer(1));
        }
    }
}
