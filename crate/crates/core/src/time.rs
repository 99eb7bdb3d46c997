use std::fmt;

/// Euclidean time variable of an integrand.
///
/// `Tau1` is the insertion time of the first operator and runs over
/// `(-inf, 0]`, `Tau2` is the second insertion on `[0, inf)`, and
/// `Vertex(n)` (n >= 1) are interaction vertices integrated over the full axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeVar {
    Tau1,
    Tau2,
    Vertex(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    NegativeHalfAxis,
    PositiveHalfAxis,
    FullAxis,
}

impl TimeVar {
    pub fn domain(self) -> Domain {
        match self {
            TimeVar::Tau1 => Domain::NegativeHalfAxis,
            TimeVar::Tau2 => Domain::PositiveHalfAxis,
            TimeVar::Vertex(_) => Domain::FullAxis,
        }
    }

    pub fn is_vertex(self) -> bool {
        matches!(self, TimeVar::Vertex(_))
    }
}

impl fmt::Display for TimeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeVar::Tau1 => f.write_str("t1"),
            TimeVar::Tau2 => f.write_str("t2"),
            TimeVar::Vertex(n) => write!(f, "s{n}"),
        }
    }
}

impl std::str::FromStr for TimeVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "t1" => Ok(TimeVar::Tau1),
            "t2" => Ok(TimeVar::Tau2),
            _ => s
                .strip_prefix('s')
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|n| *n >= 1)
                .map(TimeVar::Vertex)
                .ok_or_else(|| format!("unknown time variable `{s}`")),
        }
    }
}
