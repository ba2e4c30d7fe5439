use super::{Result, SkewError};
use serde::{Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Exact dyadic rational `num / 2^level`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u128,
    level: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, level: 0 };

    pub fn new(num: u128, level: u32) -> Result<Self> {
        if level > 126 {
            return Err(SkewError::InvalidInterval(format!("level {level} too deep")));
        }
        Ok(Self::reduced(num, level))
    }

    fn reduced(mut num: u128, mut level: u32) -> Self {
        while level > 0 && num & 1 == 0 {
            num >>= 1;
            level -= 1;
        }
        Dyadic { num, level }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_unit_interval_point(&self) -> bool {
        self.num < 1u128 << self.level
    }

    /// Numerator at a level at least as deep as `self.level`.
    pub fn num_at(&self, level: u32) -> u128 {
        debug_assert!(level >= self.level);
        self.num << (level - self.level)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / 2f64.powi(self.level as i32)
    }

    fn check_unit(&self) -> Result<()> {
        if self.is_unit_interval_point() {
            Ok(())
        } else {
            Err(SkewError::OutOfRange(self.to_string()))
        }
    }

    /// Binary digits of `self` at `level` (which must be > `self.level`):
    /// the number of leading ones `n`, i.e. the band `[1−2^-n, 1−2^-n-1)`.
    fn band(&self, level: u32) -> u32 {
        let num = self.num_at(level);
        let mut n = 0;
        while n < level && (num >> (level - 1 - n)) & 1 == 1 {
            n += 1;
        }
        n
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.level)
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Accepts `p`, `p/2^q` and `p/d` with `d` a power of two.
impl FromStr for Dyadic {
    type Err = SkewError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SkewError::InvalidInterval(format!("not a dyadic rational: `{s}`"));
        let (num, level) = match s.trim().split_once('/') {
            None => (s.trim(), 0),
            Some((p, d)) => {
                let d = d.trim();
                let level = match d.strip_prefix("2^") {
                    Some(q) => q.parse::<u32>().map_err(|_| bad())?,
                    None => {
                        let d: u128 = d.parse().map_err(|_| bad())?;
                        if !d.is_power_of_two() {
                            return Err(bad());
                        }
                        d.trailing_zeros()
                    }
                };
                (p.trim(), level)
            }
        };
        Dyadic::new(num.parse().map_err(|_| bad())?, level)
    }
}

/// `[numerator/2^level, (numerator+1)/2^level)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DyadicInterval {
    pub numerator: u64,
    pub level: u32,
}

impl DyadicInterval {
    pub fn new(numerator: u64, level: u32) -> Result<Self> {
        if level > 62 || numerator >= 1u64 << level {
            return Err(SkewError::InvalidInterval(format!("{numerator}/2^{level}")));
        }
        Ok(DyadicInterval { numerator, level })
    }

    pub fn unit() -> Self {
        DyadicInterval { numerator: 0, level: 0 }
    }

    pub fn left(&self) -> Dyadic {
        Dyadic::reduced(self.numerator as u128, self.level)
    }

    pub fn width(&self) -> f64 {
        2f64.powi(-(self.level as i32))
    }

    /// Whether the level-`k` atom `atom` lies inside this interval
    /// (`k ≥ self.level`).
    pub fn contains_atom(&self, atom: u64, k: u32) -> bool {
        atom >> (k - self.level) == self.numerator
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.level)
    }
}

/// Accepts `num/2^K` (or `num/d` with `d = 2^K`).
impl FromStr for DyadicInterval {
    type Err = SkewError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SkewError::InvalidInterval(format!("expected `num/2^K`, got `{s}`"));
        let (p, d) = s.split_once('/').ok_or_else(bad)?;
        let numerator: u64 = p.trim().parse().map_err(|_| bad())?;
        let d = d.trim();
        let level = match d.strip_prefix("2^") {
            Some(q) => q.parse().map_err(|_| bad())?,
            None => {
                let d: u64 = d.parse().map_err(|_| bad())?;
                if !d.is_power_of_two() {
                    return Err(bad());
                }
                d.trailing_zeros()
            }
        };
        DyadicInterval::new(numerator, level)
    }
}

/// The von Neumann–Kakutani adding machine: `[1−2^-n, 1−2^-n-1)` is
/// translated onto `[2^-n-1, 2^-n)`.
pub fn odometer_map(x: Dyadic) -> Result<Dyadic> {
    x.check_unit()?;
    let level = x.level + 1;
    let n = x.band(level);
    let num = x.num_at(level) + (1u128 << (level - n)) + (1u128 << (level - n - 1)) - (1u128 << level);
    Ok(Dyadic::reduced(num, level))
}

/// Mathew-Nadkarni cocycle: on band `n`, 0 on the first half and 1 on the
/// second half.
pub fn mn_cocycle(x: Dyadic) -> Result<u8> {
    x.check_unit()?;
    let level = x.level + 2;
    let n = x.band(level);
    Ok(((x.num_at(level) >> (level - n - 2)) & 1) as u8)
}
