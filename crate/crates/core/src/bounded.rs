use serde::{Deserialize, Serialize};

/// A real number known to lie in `[value - error_bound, value + error_bound]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedValue {
    pub value: f64,
    pub error_bound: f64,
    pub exact: bool,
}

impl BoundedValue {
    pub fn exact(value: f64) -> Self {
        BoundedValue { value, error_bound: 0.0, exact: true }
    }

    pub fn new(value: f64, error_bound: f64) -> Self {
        debug_assert!(error_bound >= 0.0);
        if error_bound == 0.0 {
            Self::exact(value)
        } else {
            BoundedValue { value, error_bound, exact: false }
        }
    }

    /// Midpoint/radius form of the certified interval `[lower, upper]`.
    pub fn from_interval(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper);
        Self::new(0.5 * (lower + upper), 0.5 * (upper - lower))
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    /// True when `other`'s whole interval sits inside this one, up to `slack`
    /// for floating-point rounding.
    pub fn contains_interval(&self, other: &BoundedValue, slack: f64) -> bool {
        other.lower() >= self.lower() - slack && other.upper() <= self.upper() + slack
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lower() - slack && x <= self.upper() + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_form_round_trips() {
        let b = BoundedValue::from_interval(0.25, 0.75);
        assert_eq!(b.value, 0.5);
        assert_eq!(b.error_bound, 0.25);
        assert!(!b.exact);
        assert_eq!(b.lower(), 0.25);
        assert_eq!(b.upper(), 0.75);
    }

    #[test]
    fn degenerate_interval_is_exact() {
        let b = BoundedValue::from_interval(0.5, 0.5);
        assert!(b.exact);
        assert_eq!(b.error_bound, 0.0);
    }

    #[test]
    fn containment() {
        let outer = BoundedValue::new(0.5, 0.1);
        assert!(outer.contains_interval(&BoundedValue::new(0.52, 0.05), 0.0));
        assert!(!outer.contains_interval(&BoundedValue::new(0.58, 0.05), 0.0));
        assert!(outer.contains(0.6, 1e-15));
    }
}
