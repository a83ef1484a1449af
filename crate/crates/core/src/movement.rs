use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Conducting technique labels: the control and five extraneous movements.
///
/// Declaration order is the deterministic tie-break order used when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementClass {
    Control,
    Knee,
    Waist,
    Feet,
    Wrist,
    UpperArm,
}

impl MovementClass {
    pub const ALL: [MovementClass; 6] = [
        MovementClass::Control,
        MovementClass::Knee,
        MovementClass::Waist,
        MovementClass::Feet,
        MovementClass::Wrist,
        MovementClass::UpperArm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MovementClass::Control => "control",
            MovementClass::Knee => "knee",
            MovementClass::Waist => "waist",
            MovementClass::Feet => "feet",
            MovementClass::Wrist => "wrist",
            MovementClass::UpperArm => "upper_arm",
        }
    }

    pub fn is_extraneous(&self) -> bool {
        *self != MovementClass::Control
    }
}

impl fmt::Display for MovementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown movement class `{0}` (expected control, knee, waist, feet, wrist or upper_arm)")]
pub struct UnknownMovementClass(pub String);

impl FromStr for MovementClass {
    type Err = UnknownMovementClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        MovementClass::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .or_else(|| (norm == "none").then_some(MovementClass::Control))
            .ok_or_else(|| UnknownMovementClass(s.to_string()))
    }
}
