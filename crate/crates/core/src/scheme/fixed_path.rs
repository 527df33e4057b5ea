use std::collections::{BTreeMap, BTreeSet};

use super::{SchemeError, ValidityVerdict, Witness};
use crate::causal::PointId;
use crate::Network;

/// Validity of a token presented at `z` under fixed-path money.
///
/// `confirmations` are the issuer-confirmed hops `(from, to)`. The token is
/// valid at `z` when the secret matches and the hops leaving `start` form a
/// single unbroken chain ending at `z`. A point with two outgoing hops is a
/// fork, and a chain continuing past `z` means the token moved on.
pub fn fixed_path_validate(
    network: &Network,
    start: &str,
    confirmations: &[(PointId, PointId)],
    z: &str,
    secret_ok: bool,
) -> Result<ValidityVerdict, SchemeError> {
    for point in [start, z] {
        if !network.contains(point) {
            return Err(crate::CausalError::UnknownPoint(point.into()).into());
        }
    }
    let mut outgoing: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (from, to) in confirmations {
        if !network.precedes(from.as_str(), to.as_str())? {
            return Err(SchemeError::NonCausalHop { from: from.clone(), to: to.clone() });
        }
        outgoing.entry(from.as_str()).or_default().insert(to.as_str());
    }
    if !secret_ok {
        return Ok(ValidityVerdict::invalid(Witness::SecretMismatch));
    }
    let mut path = vec![PointId::from(start)];
    let mut current = start;
    loop {
        let next = outgoing.get(current);
        if current == z {
            return Ok(match next.and_then(|n| n.iter().next()) {
                Some(onward) => ValidityVerdict::invalid(Witness::Propagated { next: (*onward).into() }),
                None => ValidityVerdict::valid(Witness::Path(path)),
            });
        }
        match next {
            None => return Ok(ValidityVerdict::invalid(Witness::MissingHop { from: current.into() })),
            Some(targets) if targets.len() > 1 => {
                return Ok(ValidityVerdict::invalid(Witness::Fork { at: current.into() }))
            }
            Some(targets) => {
                current = targets.iter().next().copied().unwrap_or_default();
                path.push(current.into());
            }
        }
    }
}
