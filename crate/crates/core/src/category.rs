use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Cloth categories supported by the pipeline.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClothCategory {
    Towel,
    Tshirt,
    Shorts,
}

const TOWEL_KEYPOINTS: [&str; 4] = ["corner0", "corner1", "corner2", "corner3"];

const TSHIRT_KEYPOINTS: [&str; 12] = [
    "neck_left",
    "neck_right",
    "shoulder_left",
    "shoulder_right",
    "sleeve_left_top",
    "sleeve_left_bottom",
    "sleeve_right_top",
    "sleeve_right_bottom",
    "armpit_left",
    "armpit_right",
    "waist_left",
    "waist_right",
];

const SHORTS_KEYPOINTS: [&str; 7] = [
    "waist_left",
    "waist_right",
    "crotch",
    "hem_left_outer",
    "hem_left_inner",
    "hem_right_outer",
    "hem_right_inner",
];

impl ClothCategory {
    pub const ALL: [ClothCategory; 3] = [
        ClothCategory::Towel,
        ClothCategory::Tshirt,
        ClothCategory::Shorts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClothCategory::Towel => "towel",
            ClothCategory::Tshirt => "tshirt",
            ClothCategory::Shorts => "shorts",
        }
    }

    /// Canonical keypoint names, in the order used for annotation export.
    pub fn keypoint_names(self) -> &'static [&'static str] {
        match self {
            ClothCategory::Towel => &TOWEL_KEYPOINTS,
            ClothCategory::Tshirt => &TSHIRT_KEYPOINTS,
            ClothCategory::Shorts => &SHORTS_KEYPOINTS,
        }
    }

    /// Stable numeric id used for COCO `category_id` and seed derivation.
    pub fn id(self) -> u64 {
        match self {
            ClothCategory::Towel => 1,
            ClothCategory::Tshirt => 2,
            ClothCategory::Shorts => 3,
        }
    }

    pub fn from_id(id: u64) -> Option<Self> {
        ClothCategory::ALL.into_iter().find(|c| c.id() == id)
    }
}

impl fmt::Display for ClothCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClothCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ClothCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown cloth category `{s}`")))
    }
}

/// Swap `left` and `right` tokens in a keypoint name.
pub(crate) fn mirror_name(name: &str) -> String {
    if name.contains("left") {
        name.replace("left", "right")
    } else {
        name.replace("right", "left")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keypoint_set_sizes() {
        assert_eq!(ClothCategory::Towel.keypoint_names().len(), 4);
        assert_eq!(ClothCategory::Tshirt.keypoint_names().len(), 12);
        assert_eq!(ClothCategory::Shorts.keypoint_names().len(), 7);
    }

    #[test]
    fn mirrored_names_stay_in_the_set() {
        for cat in ClothCategory::ALL {
            let names = cat.keypoint_names();
            for n in names {
                assert!(names.contains(&mirror_name(n).as_str()), "{n}");
            }
        }
    }

    #[test]
    fn parse_roundtrip() {
        for cat in ClothCategory::ALL {
            assert_eq!(cat.name().parse::<ClothCategory>().unwrap(), cat);
            assert_eq!(ClothCategory::from_id(cat.id()), Some(cat));
        }
        assert!("boxershorts".parse::<ClothCategory>().is_err());
    }
}
