use serde::{Deserialize, Serialize};

/// Where a split sends rows whose split variable is missing.
///
/// `Left` and `Right` are the two threshold rules that also route missing
/// values; `MissingOnlyLeft` ignores the value entirely and separates
/// missing (left) from observed (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissingDirection {
    Left,
    Right,
    MissingOnlyLeft,
}

impl MissingDirection {
    /// Rank used for tie-breaking between equally good rules.
    pub fn rule_index(self) -> u8 {
        match self {
            MissingDirection::Left => 1,
            MissingDirection::Right => 2,
            MissingDirection::MissingOnlyLeft => 3,
        }
    }

    pub(crate) fn code(self) -> &'static str {
        match self {
            MissingDirection::Left => "left",
            MissingDirection::Right => "right",
            MissingDirection::MissingOnlyLeft => "missing-only-left",
        }
    }

    pub(crate) fn from_code(s: &str) -> Option<Self> {
        match s {
            "left" => Some(MissingDirection::Left),
            "right" => Some(MissingDirection::Right),
            "missing-only-left" => Some(MissingDirection::MissingOnlyLeft),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A binary split `x <= threshold` together with its missing-value routing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub variable: usize,
    pub threshold: f64,
    pub missing: MissingDirection,
}

impl SplitRule {
    pub fn new(variable: usize, threshold: f64, missing: MissingDirection) -> Self {
        Self {
            variable,
            threshold,
            missing,
        }
    }

    /// Routes one value; `None` means missing.
    pub fn route(&self, value: Option<f64>) -> Side {
        match (self.missing, value) {
            (MissingDirection::MissingOnlyLeft, None) => Side::Left,
            (MissingDirection::MissingOnlyLeft, Some(_)) => Side::Right,
            (MissingDirection::Left, None) => Side::Left,
            (MissingDirection::Right, None) => Side::Right,
            (_, Some(x)) if x <= self.threshold => Side::Left,
            (_, Some(_)) => Side::Right,
        }
    }

    /// Routes a raw cell where `NaN` encodes missing.
    #[inline]
    pub fn goes_left(&self, x: f64) -> bool {
        if x.is_nan() {
            !matches!(self.missing, MissingDirection::Right)
        } else {
            !matches!(self.missing, MissingDirection::MissingOnlyLeft) && x <= self.threshold
        }
    }
}

/// Free-function form of [`SplitRule::route`].
pub fn route(rule: &SplitRule, value: Option<f64>) -> Side {
    rule.route(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_and_goes_left_agree() {
        for dir in [
            MissingDirection::Left,
            MissingDirection::Right,
            MissingDirection::MissingOnlyLeft,
        ] {
            let rule = SplitRule::new(0, 0.5, dir);
            for v in [None, Some(-3.0), Some(0.5), Some(0.6)] {
                let left = rule.route(v) == Side::Left;
                assert_eq!(left, rule.goes_left(v.unwrap_or(f64::NAN)));
            }
        }
    }
}
