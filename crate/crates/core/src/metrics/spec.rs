//! Metric identifiers and the `CANON-NORM-DIST` grammar.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::canon::CanonId;
use crate::error::{Error, Result};

/// Normalisation norms. `Skip` is only meaningful in the normalisation slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormId {
    L1,
    L2,
    Linf,
    WeightedL1,
    WeightedL2,
    WeightedLinf,
    Jrange,
    Skip,
}

impl NormId {
    pub const ALL: [NormId; 8] = [
        NormId::Skip,
        NormId::L1,
        NormId::L2,
        NormId::Linf,
        NormId::WeightedL1,
        NormId::WeightedL2,
        NormId::WeightedLinf,
        NormId::Jrange,
    ];

    pub fn token(self) -> &'static str {
        match self {
            NormId::Skip => "0",
            NormId::L1 => "1",
            NormId::L2 => "2",
            NormId::Linf => "inf",
            NormId::WeightedL1 => "weighted_1",
            NormId::WeightedL2 => "weighted_2",
            NormId::WeightedLinf => "weighted_inf",
            NormId::Jrange => "Jrange",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        NormId::ALL
            .into_iter()
            .find(|n| n.token() == token)
            .ok_or_else(|| Error::UnknownNorm(token.to_string()))
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, NormId::WeightedL1 | NormId::WeightedL2 | NormId::WeightedLinf)
    }

    pub fn is_linf(self) -> bool {
        matches!(self, NormId::Linf | NormId::WeightedLinf)
    }
}

impl fmt::Display for NormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Distance functions applied to standardised rewards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistId {
    L1,
    L2,
    Linf,
    WeightedL1,
    WeightedL2,
    WeightedLinf,
    Angle,
    Pearson,
}

impl DistId {
    pub const ALL: [DistId; 8] = [
        DistId::L1,
        DistId::L2,
        DistId::Linf,
        DistId::WeightedL1,
        DistId::WeightedL2,
        DistId::WeightedLinf,
        DistId::Angle,
        DistId::Pearson,
    ];

    pub fn token(self) -> &'static str {
        match self {
            DistId::L1 => "1",
            DistId::L2 => "2",
            DistId::Linf => "inf",
            DistId::WeightedL1 => "weighted_1",
            DistId::WeightedL2 => "weighted_2",
            DistId::WeightedLinf => "weighted_inf",
            DistId::Angle => "angle",
            DistId::Pearson => "pearson",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        DistId::ALL
            .into_iter()
            .find(|d| d.token() == token)
            .ok_or_else(|| Error::UnknownDist(token.to_string()))
    }

    /// The norm inducing this distance, if it is norm-induced.
    pub fn as_norm(self) -> Option<NormId> {
        match self {
            DistId::L1 => Some(NormId::L1),
            DistId::L2 => Some(NormId::L2),
            DistId::Linf => Some(NormId::Linf),
            DistId::WeightedL1 => Some(NormId::WeightedL1),
            DistId::WeightedL2 => Some(NormId::WeightedL2),
            DistId::WeightedLinf => Some(NormId::WeightedLinf),
            DistId::Angle | DistId::Pearson => None,
        }
    }
}

impl fmt::Display for DistId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One pseudometric: canonicalise, normalise, then measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetricSpec {
    pub canon: CanonId,
    pub norm: NormId,
    pub dist: DistId,
}

impl MetricSpec {
    pub fn new(canon: CanonId, norm: NormId, dist: DistId) -> Result<Self> {
        let spec = Self { canon, norm, dist };
        if canon == CanonId::MinimalPotential && norm.is_linf() {
            return Err(Error::ForbiddenCombination(spec.to_string()));
        }
        Ok(spec)
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.canon, self.norm, self.dist)
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_metric_spec(text)
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_metric_spec(&text).map_err(serde::de::Error::custom)
    }
}

/// Parses `<canon>-<norm>-<dist>`, e.g. `VAL-2-weighted_1` or `EPIC-0-inf`.
pub fn parse_metric_spec(text: &str) -> Result<MetricSpec> {
    let mut parts = text.trim().splitn(3, '-');
    let canon = parts.next().unwrap_or_default();
    let canon = CanonId::from_token(canon)?;
    let norm = parts
        .next()
        .ok_or_else(|| Error::UnknownNorm(String::new()))
        .and_then(NormId::from_token)?;
    let dist = parts
        .next()
        .ok_or_else(|| Error::UnknownDist(String::new()))
        .and_then(DistId::from_token)?;
    MetricSpec::new(canon, norm, dist)
}

/// Every spec the grammar admits, in canon/norm/dist declaration order.
pub fn all_metric_specs() -> Vec<MetricSpec> {
    let mut out = Vec::new();
    for canon in CanonId::ALL {
        for norm in NormId::ALL {
            for dist in DistId::ALL {
                if let Ok(spec) = MetricSpec::new(canon, norm, dist) {
                    out.push(spec);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_table_rows() {
        let spec = parse_metric_spec("VALPotential-1-weighted_1").unwrap();
        assert_eq!(
            (spec.canon, spec.norm, spec.dist),
            (CanonId::ValPotential, NormId::L1, DistId::WeightedL1)
        );
        let spec = parse_metric_spec("None-0-2").unwrap();
        assert_eq!(
            (spec.canon, spec.norm, spec.dist),
            (CanonId::None, NormId::Skip, DistId::L2)
        );
        let spec = parse_metric_spec("EPIC-0-inf").unwrap();
        assert_eq!((spec.norm, spec.dist), (NormId::Skip, DistId::Linf));
    }

    #[test]
    fn rejects_minimal_potential_with_linf() {
        assert!(matches!(
            parse_metric_spec("MinimalPotential-inf-2"),
            Err(Error::ForbiddenCombination(_))
        ));
        assert!(matches!(
            parse_metric_spec("MinimalPotential-weighted_inf-1"),
            Err(Error::ForbiddenCombination(_))
        ));
    }

    #[test]
    fn unknown_tokens_are_reported() {
        assert!(matches!(parse_metric_spec("FOO-2-2"), Err(Error::UnknownCanon(_))));
        assert!(matches!(parse_metric_spec("VAL-3-2"), Err(Error::UnknownNorm(_))));
        assert!(matches!(parse_metric_spec("VAL-2-cos"), Err(Error::UnknownDist(_))));
        assert!(matches!(parse_metric_spec("VAL-2"), Err(Error::UnknownDist(_))));
    }

    proptest! {
        #[test]
        fn format_inverts_parse(i in 0usize..all_metric_specs().len()) {
            let spec = all_metric_specs()[i];
            let text = spec.to_string();
            prop_assert_eq!(parse_metric_spec(&text).unwrap(), spec);
            prop_assert_eq!(parse_metric_spec(&text).unwrap().to_string(), text);
        }
    }
}
