use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// One of the twelve standard ECG leads, in acquisition order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lead {
    D1,
    D2,
    D3,
    AvR,
    AvF,
    AvL,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
}

impl Lead {
    pub const ALL: [Lead; 12] = [
        Lead::D1,
        Lead::D2,
        Lead::D3,
        Lead::AvR,
        Lead::AvF,
        Lead::AvL,
        Lead::V1,
        Lead::V2,
        Lead::V3,
        Lead::V4,
        Lead::V5,
        Lead::V6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Lead> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Lead::D1 => "D1",
            Lead::D2 => "D2",
            Lead::D3 => "D3",
            Lead::AvR => "avR",
            Lead::AvF => "avF",
            Lead::AvL => "avL",
            Lead::V1 => "v1",
            Lead::V2 => "v2",
            Lead::V3 => "v3",
            Lead::V4 => "v4",
            Lead::V5 => "v5",
            Lead::V6 => "v6",
        }
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lead {
    type Err = Error;

    /// Case-insensitive match on the canonical names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lead::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown lead {s:?}")))
    }
}

/// Parses a comma-separated lead list such as `D1,avR`.
pub fn parse_lead_list(s: &str) -> Result<Vec<Lead>, Error> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}
