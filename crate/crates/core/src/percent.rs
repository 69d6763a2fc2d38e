use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A percentage held as an exact count of hundredths (`7330` is 73.30%).
///
/// Ratios are rounded half-up in integer arithmetic, so table values never
/// depend on floating-point representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Percent(u64);

impl Percent {
    pub const HUNDRED: Percent = Percent(10_000);

    pub fn from_hundredths(h: u64) -> Self {
        Percent(h)
    }

    /// `100 * num / den` rounded half-up to two decimals; zero when `den == 0`.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            return Percent(0);
        }
        let (num, den) = (num as u128, den as u128);
        Percent(((20_000 * num + den) / (2 * den)) as u64)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// `100% - self`, saturating at zero.
    pub fn complement(self) -> Self {
        Percent(10_000u64.saturating_sub(self.0))
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{}.{:02}", self.0 / 100, self.0 % 100);
        f.pad(&s)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(serde::de::Error::custom(format!("invalid percentage {v}")));
        }
        Ok(Percent((v * 100.0).round() as u64))
    }
}
