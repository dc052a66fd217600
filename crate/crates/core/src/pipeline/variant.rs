use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Ablation variants, from raw features to the full fusion model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Raw music features into BEL.
    BelM,
    /// Raw animation features into BEL.
    BelA,
    /// Auditory cortex into BEL.
    MBel,
    /// Visual cortex into BEL.
    ABel,
    /// Both cortices, fused, into BEL.
    AvfBel,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::BelM, Variant::BelA, Variant::MBel, Variant::ABel, Variant::AvfBel];

    pub fn name(self) -> &'static str {
        match self {
            Variant::BelM => "BEL-m",
            Variant::BelA => "BEL-a",
            Variant::MBel => "M-BEL",
            Variant::ABel => "A-BEL",
            Variant::AvfBel => "AVF-BEL",
        }
    }

    /// File-name tag.
    pub fn tag(self) -> &'static str {
        match self {
            Variant::BelM => "bel_m",
            Variant::BelA => "bel_a",
            Variant::MBel => "m_bel",
            Variant::ABel => "a_bel",
            Variant::AvfBel => "avf",
        }
    }

    pub fn uses_visual(self) -> bool {
        matches!(self, Variant::ABel | Variant::AvfBel)
    }

    pub fn uses_auditory(self) -> bool {
        matches!(self, Variant::MBel | Variant::AvfBel)
    }

    pub fn uses_fusion(self) -> bool {
        self == Variant::AvfBel
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// Accepts the display name or the tag, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(t) || v.tag().eq_ignore_ascii_case(t))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant `{s}` (expected one of BEL-m, BEL-a, M-BEL, A-BEL, AVF-BEL)"
                ))
            })
    }
}
