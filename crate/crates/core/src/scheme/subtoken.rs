use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{SchemeError, SchemeSpec, ValidityVerdict, Witness};
use crate::causal::PointId;
use crate::num::Credits;
use crate::Network;

/// A sub-token requested at `origin` for presentation at `location`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubtokenRequest {
    pub origin: PointId,
    pub value: Credits,
    pub location: PointId,
}

impl SubtokenRequest {
    pub fn new(origin: impl Into<PointId>, value: Credits, location: impl Into<PointId>) -> Self {
        SubtokenRequest { origin: origin.into(), value, location: location.into() }
    }
}

/// Which presentation sites a clause admits, by region tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "filter", content = "region")]
pub enum LocationFilter {
    Any,
    /// All sites share one region.
    SameRegion,
    /// No two sites share a region.
    DistinctRegions,
    InRegion(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub max_total_value: Credits,
    pub max_locations: usize,
    pub filter: LocationFilter,
    pub max_per_location: Credits,
}

/// Disjunction of clauses: a presented multiset is legal iff some clause admits it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    clauses: Vec<Clause>,
}

impl ConstraintSet {
    pub fn new(clauses: Vec<Clause>) -> Result<Self, SchemeError> {
        if clauses.is_empty() {
            return Err(SchemeError::Configuration("constraint set needs at least one clause".into()));
        }
        if clauses.iter().any(|c| c.max_total_value < Credits::ZERO || c.max_per_location < Credits::ZERO) {
            return Err(SchemeError::Configuration("constraint bounds must be nonnegative".into()));
        }
        Ok(ConstraintSet { clauses })
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Whether the presented sub-tokens satisfy at least one clause.
    pub fn permits<'a, F>(&self, requests: &[SubtokenRequest], region_of: F) -> bool
    where
        F: Fn(&str) -> Option<&'a str>,
    {
        let mut per_location: BTreeMap<&str, Credits> = BTreeMap::new();
        for r in requests {
            let sum = per_location.entry(r.location.as_str()).or_insert(Credits::ZERO);
            *sum = *sum + r.value;
        }
        let total: Credits = requests.iter().map(|r| r.value).sum();
        let regions: Vec<Option<&str>> = per_location.keys().map(|l| region_of(l)).collect();
        self.clauses.iter().any(|clause| {
            let filter_ok = match &clause.filter {
                LocationFilter::Any => true,
                LocationFilter::SameRegion => match regions.first() {
                    None => true,
                    Some(first) => first.is_some() && regions.iter().all(|r| r == first),
                },
                LocationFilter::DistinctRegions => {
                    let tagged: Vec<&str> = regions.iter().flatten().copied().collect();
                    tagged.len() == regions.len() && tagged.iter().collect::<BTreeSet<_>>().len() == tagged.len()
                }
                LocationFilter::InRegion(name) => regions.iter().all(|r| *r == Some(name.as_str())),
            };
            filter_ok
                && total <= clause.max_total_value
                && per_location.len() <= clause.max_locations
                && per_location.values().all(|v| *v <= clause.max_per_location)
        })
    }
}

/// Sub-token constraints plus, per input point, the requests it may make.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtokenRules {
    pub constraints: ConstraintSet,
    pub alphabets: BTreeMap<PointId, Vec<SubtokenRequest>>,
}

/// Verdict at every requested location.
///
/// Requests from origins in a location's causal past are known there. Each
/// other declared origin may contribute nothing or any one request from its
/// alphabet. A location is valid when every such completion keeps the whole
/// presented multiset within the constraints.
pub fn subtoken_validate(
    spec: &SchemeSpec,
    network: &Network,
    requests: &[SubtokenRequest],
) -> Result<BTreeMap<PointId, ValidityVerdict>, SchemeError> {
    let rules = spec
        .subtokens
        .as_ref()
        .ok_or_else(|| SchemeError::Configuration("scheme declares no sub-token constraints".into()))?;
    let region_of = |id: &str| network.point(id).and_then(|p| p.region.as_deref());
    let locations: BTreeSet<&PointId> = requests.iter().map(|r| &r.location).collect();
    let mut verdicts = BTreeMap::new();
    for location in locations {
        let mut known = Vec::new();
        for r in requests {
            if network.precedes_or_equal(r.origin.as_str(), location.as_str())? {
                known.push(r.clone());
            }
        }
        let mut unknown: Vec<&Vec<SubtokenRequest>> = Vec::new();
        for (origin, options) in &rules.alphabets {
            if !network.precedes_or_equal(origin.as_str(), location.as_str())? {
                unknown.push(options);
            }
        }
        let verdict = if !rules.constraints.permits(&known, region_of) {
            ValidityVerdict::invalid(Witness::Constraint { requests: known })
        } else {
            let completions: u64 = unknown.iter().map(|o| o.len() as u64 + 1).product();
            if completions > super::validity::COMPLETION_CAP {
                return Err(SchemeError::CompletionInfeasible(format!(
                    "{completions} sub-token completions at `{location}`"
                )));
            }
            let mut index = vec![0usize; unknown.len()];
            let mut violation = None;
            'outer: loop {
                let mut presented = known.clone();
                presented.extend(index.iter().zip(&unknown).filter(|(i, _)| **i > 0).map(|(i, o)| o[*i - 1].clone()));
                if !rules.constraints.permits(&presented, region_of) {
                    violation = Some(presented);
                    break;
                }
                for (pos, options) in unknown.iter().enumerate() {
                    index[pos] += 1;
                    if index[pos] <= options.len() {
                        continue 'outer;
                    }
                    index[pos] = 0;
                }
                break;
            }
            match violation {
                Some(requests) => ValidityVerdict::potential_only(Witness::Constraint { requests }),
                None => ValidityVerdict::valid(Witness::None),
            }
        };
        verdicts.insert(location.clone(), verdict);
    }
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Fixed;
    use crate::scheme::{Predicate, SchemeKind, ValidityStatus};
    use crate::{SignallingModel, SpacetimePoint};

    fn market_rules() -> ConstraintSet {
        let c = Fixed::from_int;
        ConstraintSet::new(vec![
            Clause { max_total_value: c(10), max_locations: 1, filter: LocationFilter::Any, max_per_location: c(10) },
            Clause { max_total_value: c(7), max_locations: 3, filter: LocationFilter::SameRegion, max_per_location: c(7) },
            Clause {
                max_total_value: c(15),
                max_locations: 5,
                filter: LocationFilter::DistinctRegions,
                max_per_location: c(3),
            },
        ])
        .unwrap()
    }

    fn markets() -> Network {
        let site = |id: &str, x: f64, region: &str| SpacetimePoint::flat(id, 10.0, [x, 0.0, 0.0]).with_region(region);
        let mut points = vec![SpacetimePoint::flat("P", 0.0, [0.0, 0.0, 0.0]), SpacetimePoint::flat("F", 0.0, [500.0, 0.0, 0.0])];
        points.extend([site("M1", 1.0, "europe"), site("M2", 2.0, "europe"), site("M3", 3.0, "europe"), site("M4", 4.0, "asia")]);
        Network::new(points, SignallingModel::Flat)
    }

    fn spec(alphabets: BTreeMap<PointId, Vec<SubtokenRequest>>) -> SchemeSpec {
        let mut spec = SchemeSpec::new(SchemeKind::FreeChoiceOptimal, Predicate::Unconditional);
        spec.subtokens = Some(SubtokenRules { constraints: market_rules(), alphabets });
        spec
    }

    #[test]
    fn single_site_ten_credits() {
        let verdicts = subtoken_validate(&spec(BTreeMap::new()), &markets(), &[SubtokenRequest::new("P", Fixed::from_int(10), "M1")]).unwrap();
        assert_eq!(verdicts[&PointId::from("M1")].status, ValidityStatus::Valid);
    }

    #[test]
    fn eight_credits_on_one_continent_is_illegal() {
        let requests = [("M1", 3), ("M2", 3), ("M3", 2)].map(|(l, v)| SubtokenRequest::new("P", Fixed::from_int(v), l));
        let verdicts = subtoken_validate(&spec(BTreeMap::new()), &markets(), &requests).unwrap();
        assert!(verdicts.values().all(|v| v.status == ValidityStatus::Invalid));
    }

    #[test]
    fn empty_request_set_is_vacuous() {
        assert!(subtoken_validate(&spec(BTreeMap::new()), &markets(), &[]).unwrap().is_empty());
    }

    #[test]
    fn unseen_requests_block_validity() {
        let far = BTreeMap::from([(PointId::from("F"), vec![SubtokenRequest::new("F", Fixed::from_int(3), "M4")])]);
        let requests = [SubtokenRequest::new("P", Fixed::from_int(7), "M1")];
        let verdicts = subtoken_validate(&spec(far), &markets(), &requests).unwrap();
        assert_eq!(verdicts[&PointId::from("M1")].status, ValidityStatus::PotentialOnly);
    }

    #[test]
    fn missing_constraints_is_configuration_error() {
        let bare = SchemeSpec::new(SchemeKind::FreeChoiceOptimal, Predicate::Unconditional);
        assert!(matches!(subtoken_validate(&bare, &markets(), &[]), Err(SchemeError::Configuration(_))));
    }

    #[test]
    fn distinct_regions_clause() {
        let rules = market_rules();
        let net = markets();
        let region_of = |id: &str| net.point(id).and_then(|p| p.region.as_deref());
        let spread = [("M1", 3), ("M4", 3)].map(|(l, v)| SubtokenRequest::new("P", Fixed::from_int(v), l));
        assert!(rules.permits(&spread, region_of));
        let crowded = [("M1", 3), ("M2", 3), ("M4", 3)].map(|(l, v)| SubtokenRequest::new("P", Fixed::from_int(v), l));
        assert!(!rules.permits(&crowded, region_of));
    }
}
