//! Space-time points, signalling models and the causal partial order.
//!
//! Units are natural (c = 1). A point `p` precedes `q` when a signal
//! allowed by the [`SignallingModel`] can leave `p` and reach the location
//! of `q` no later than `q.t`. Light-like separation counts as precedence,
//! and comparisons carry the scalar's [`Scalar::causal_tolerance`] of slack.
//!
//! Everything here is generic over the coordinate scalar; the crate root
//! re-exports `f64` aliases used by the rest of the engine.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::{Ordering, Reverse};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

/// Opaque point label, unique within a network.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(String);

impl PointId {
    pub fn new(id: impl Into<String>) -> Self {
        PointId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for PointId {
    fn from(value: &str) -> Self {
        PointId(value.to_string())
    }
}

impl From<String> for PointId {
    fn from(value: String) -> Self {
        PointId(value)
    }
}

impl Borrow<str> for PointId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CausalError {
    #[error("point `{point}` has coordinates incompatible with the {model} model")]
    CoordinateMismatch { point: String, model: &'static str },
    #[error("malformed coordinates: {0}")]
    Malformed(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(PointId),
    #[error("invalid signalling model: {0}")]
    InvalidModel(String),
}

/// Spatial part of a point, in the convention of one model family.
#[derive(Clone, Debug, PartialEq)]
pub enum Location<T> {
    /// Flat space 3-vector.
    Cartesian([T; 3]),
    /// Latitude in [-π/2, π/2], longitude in [-π, π), radians.
    Spherical { lat: T, lon: T },
    /// Named site of an explicit signalling graph.
    Site(String),
}

impl<T: Scalar> Location<T> {
    fn convention(&self) -> &'static str {
        match self {
            Location::Cartesian(_) => "cartesian",
            Location::Spherical { .. } => "spherical",
            Location::Site(_) => "site",
        }
    }

    fn check(&self) -> Result<(), CausalError> {
        match self {
            Location::Cartesian(x) => {
                if x.iter().all(|c| c.is_finite()) {
                    Ok(())
                } else {
                    Err(CausalError::Malformed("non-finite cartesian coordinate".into()))
                }
            }
            Location::Spherical { lat, lon } => {
                let half_pi = T::FRAC_PI_2();
                if !(lat.is_finite() && lon.is_finite()) {
                    return Err(CausalError::Malformed("non-finite spherical coordinate".into()));
                }
                if *lat < -half_pi || *lat > half_pi {
                    return Err(CausalError::Malformed(format!("latitude {lat} outside [-π/2, π/2]")));
                }
                if *lon < -T::PI() || *lon >= T::PI() {
                    return Err(CausalError::Malformed(format!("longitude {lon} outside [-π, π)")));
                }
                Ok(())
            }
            Location::Site(name) if name.is_empty() => Err(CausalError::Malformed("empty site name".into())),
            Location::Site(_) => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacetimePoint<T> {
    pub id: PointId,
    pub t: T,
    pub location: Location<T>,
    /// Extent of the local exchange region. Metadata only: protocol events
    /// are treated as happening at the point itself.
    pub region_radius: T,
    /// Optional region tag (e.g. a continent), used by sub-token constraints.
    pub region: Option<String>,
}

impl<T: Scalar> SpacetimePoint<T> {
    pub fn new(id: impl Into<PointId>, t: T, location: Location<T>) -> Self {
        SpacetimePoint {
            id: id.into(),
            t,
            location,
            region_radius: T::zero(),
            region: None,
        }
    }

    pub fn flat(id: impl Into<PointId>, t: T, x: [T; 3]) -> Self {
        Self::new(id, t, Location::Cartesian(x))
    }

    pub fn spherical(id: impl Into<PointId>, t: T, lat: T, lon: T) -> Self {
        Self::new(id, t, Location::Spherical { lat, lon })
    }

    pub fn site(id: impl Into<PointId>, t: T, site: impl Into<String>) -> Self {
        Self::new(id, t, Location::Site(site.into()))
    }

    pub fn with_region(mut self, region: impl Into<String>) -> Self {
        self.region = Some(region.into());
        self
    }

    pub fn with_region_radius(mut self, radius: T) -> Self {
        self.region_radius = radius;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DagEdge<T> {
    pub from: String,
    pub to: String,
    pub delay: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SignallingModel<T> {
    /// Minkowski space, signals at c = 1 in straight lines.
    Flat,
    /// Signals confined to the surface of a sphere, along great circles.
    SphereSurface { radius: T, speed: T },
    /// Signals along the surface at c = 1, or through the interior along
    /// the chord at `interior_speed`, whichever arrives first.
    SphereInterior { radius: T, interior_speed: T },
    /// Directed signalling graph between named sites with per-edge delays.
    ExplicitDag { edges: Vec<DagEdge<T>> },
}

impl<T: Scalar> SignallingModel<T> {
    pub fn name(&self) -> &'static str {
        match self {
            SignallingModel::Flat => "flat",
            SignallingModel::SphereSurface { .. } => "sphere-surface",
            SignallingModel::SphereInterior { .. } => "sphere-interior",
            SignallingModel::ExplicitDag { .. } => "explicit-dag",
        }
    }

    pub fn surface(radius: T) -> Self {
        SignallingModel::SphereSurface { radius, speed: T::one() }
    }

    pub fn interior(radius: T) -> Self {
        SignallingModel::SphereInterior { radius, interior_speed: T::one() }
    }

    /// Checks parameter ranges and DAG acyclicity.
    pub fn validate(&self) -> Result<(), CausalError> {
        let check_speed = |speed: T| {
            if speed > T::zero() && speed <= T::one() {
                Ok(())
            } else {
                Err(CausalError::InvalidModel(format!("signal speed {speed} outside (0, 1]")))
            }
        };
        let check_radius = |radius: T| {
            if radius > T::zero() && radius.is_finite() {
                Ok(())
            } else {
                Err(CausalError::InvalidModel(format!("sphere radius {radius} must be positive")))
            }
        };
        match self {
            SignallingModel::Flat => Ok(()),
            SignallingModel::SphereSurface { radius, speed } => {
                check_radius(*radius)?;
                check_speed(*speed)
            }
            SignallingModel::SphereInterior { radius, interior_speed } => {
                check_radius(*radius)?;
                check_speed(*interior_speed)
            }
            SignallingModel::ExplicitDag { edges } => {
                if let Some(edge) = edges.iter().find(|e| !(e.delay >= T::zero() && e.delay.is_finite())) {
                    return Err(CausalError::InvalidModel(format!(
                        "edge {} -> {} has invalid delay {}",
                        edge.from, edge.to, edge.delay
                    )));
                }
                match dag_cycle(edges) {
                    Some(cycle) => Err(CausalError::InvalidModel(format!("cycle through sites {}", cycle.join(", ")))),
                    None => Ok(()),
                }
            }
        }
    }

    fn expects(&self) -> &'static str {
        match self {
            SignallingModel::Flat => "cartesian",
            SignallingModel::SphereSurface { .. } | SignallingModel::SphereInterior { .. } => "spherical",
            SignallingModel::ExplicitDag { .. } => "site",
        }
    }

    fn check_location(&self, owner: &str, location: &Location<T>) -> Result<(), CausalError> {
        location.check()?;
        if location.convention() == self.expects() {
            Ok(())
        } else {
            Err(CausalError::CoordinateMismatch { point: owner.to_string(), model: self.name() })
        }
    }

    /// Minimal signal travel time between two locations; infinite when no
    /// route exists.
    pub fn earliest_arrival(&self, from: &Location<T>, to: &Location<T>) -> Result<T, CausalError> {
        self.check_location("origin", from)?;
        self.check_location("destination", to)?;
        Ok(self.arrival_unchecked(from, to))
    }

    fn arrival_unchecked(&self, from: &Location<T>, to: &Location<T>) -> T {
        match (self, from, to) {
            (SignallingModel::Flat, Location::Cartesian(a), Location::Cartesian(b)) => {
                a.iter().zip(b).map(|(x, y)| (*x - *y).powi(2)).fold(T::zero(), |s, v| s + v).sqrt()
            }
            (SignallingModel::SphereSurface { radius, speed }, Location::Spherical { .. }, Location::Spherical { .. }) => {
                *radius * central_angle(from, to) / *speed
            }
            (
                SignallingModel::SphereInterior { radius, interior_speed },
                Location::Spherical { .. },
                Location::Spherical { .. },
            ) => {
                let angle = central_angle(from, to);
                let around = *radius * angle;
                let chord = T::lit(2.0) * *radius * (angle / T::lit(2.0)).sin();
                around.min(chord / *interior_speed)
            }
            (SignallingModel::ExplicitDag { edges }, Location::Site(a), Location::Site(b)) => dag_distance(edges, a, b),
            _ => unreachable!("locations checked against model"),
        }
    }

    /// Classifies `q` relative to `p`.
    pub fn causal_relation(
        &self,
        p: &SpacetimePoint<T>,
        q: &SpacetimePoint<T>,
    ) -> Result<CausalRelation, CausalError> {
        self.check_location(p.id.as_str(), &p.location)?;
        self.check_location(q.id.as_str(), &q.location)?;
        if !(p.t.is_finite() && q.t.is_finite()) {
            return Err(CausalError::Malformed("non-finite time coordinate".into()));
        }
        let tol = T::causal_tolerance();
        let dt = q.t - p.t;
        let forward = || self.arrival_unchecked(&p.location, &q.location);
        let backward = || self.arrival_unchecked(&q.location, &p.location);
        let relation = if dt.abs() <= tol {
            let (fwd, bwd) = (forward(), backward());
            match (fwd <= tol, bwd <= tol) {
                (true, true) => CausalRelation::Equal,
                (true, false) => CausalRelation::Precedes,
                (false, true) => CausalRelation::Succeeds,
                (false, false) => CausalRelation::Spacelike,
            }
        } else if dt > T::zero() {
            if dt >= forward() - tol {
                CausalRelation::Precedes
            } else {
                CausalRelation::Spacelike
            }
        } else if -dt >= backward() - tol {
            CausalRelation::Succeeds
        } else {
            CausalRelation::Spacelike
        };
        Ok(relation)
    }

    /// Spatial separation used by the region-size check; `None` when the
    /// model has no natural frame.
    fn spatial_separation(&self, a: &Location<T>, b: &Location<T>) -> Option<T> {
        match self {
            SignallingModel::Flat => Some(self.arrival_unchecked(a, b)),
            SignallingModel::SphereSurface { radius, .. } | SignallingModel::SphereInterior { radius, .. } => {
                Some(*radius * central_angle(a, b))
            }
            SignallingModel::ExplicitDag { .. } => None,
        }
    }
}

/// Great-circle central angle. The atan2 form keeps full precision for
/// nearly coincident and nearly antipodal pairs, where `acos` of the
/// law-of-cosines value loses about 1e-8 rad.
fn central_angle<T: Scalar>(a: &Location<T>, b: &Location<T>) -> T {
    let (Location::Spherical { lat: la, lon: oa }, Location::Spherical { lat: lb, lon: ob }) = (a, b) else {
        unreachable!("spherical locations")
    };
    let dlon = *ob - *oa;
    let cos = la.sin() * lb.sin() + la.cos() * lb.cos() * dlon.cos();
    let east = lb.cos() * dlon.sin();
    let north = la.cos() * lb.sin() - la.sin() * lb.cos() * dlon.cos();
    (east * east + north * north).sqrt().atan2(cos)
}

fn dag_distance<T: Scalar>(edges: &[DagEdge<T>], from: &str, to: &str) -> T {
    if from == to {
        return T::zero();
    }
    #[derive(PartialEq)]
    struct Entry<T>(T);
    impl<T: PartialOrd> Eq for Entry<T> {}
    impl<T: PartialOrd> PartialOrd for Entry<T> {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl<T: PartialOrd> Ord for Entry<T> {
        fn cmp(&self, other: &Self) -> Ordering {
            self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
        }
    }

    let mut best: BTreeMap<&str, T> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(from, T::zero());
    heap.push(Reverse((Entry(T::zero()), from)));
    while let Some(Reverse((Entry(dist), site))) = heap.pop() {
        if site == to {
            return dist;
        }
        if best.get(site).is_some_and(|d| *d < dist) {
            continue;
        }
        for edge in edges.iter().filter(|e| e.from == site) {
            let next = dist + edge.delay;
            if best.get(edge.to.as_str()).is_none_or(|d| next < *d) {
                best.insert(edge.to.as_str(), next);
                heap.push(Reverse((Entry(next), edge.to.as_str())));
            }
        }
    }
    T::infinity()
}

/// Returns the sites on some cycle, or `None` for an acyclic edge set.
fn dag_cycle<T>(edges: &[DagEdge<T>]) -> Option<Vec<String>> {
    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    for edge in edges {
        indegree.entry(edge.from.as_str()).or_default();
        *indegree.entry(edge.to.as_str()).or_default() += 1;
    }
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(s, _)| *s).collect();
    let mut removed = 0;
    while let Some(site) = ready.pop() {
        removed += 1;
        for edge in edges.iter().filter(|e| e.from == site) {
            let d = indegree.get_mut(edge.to.as_str()).expect("indexed");
            *d -= 1;
            if *d == 0 {
                ready.push(edge.to.as_str());
            }
        }
    }
    if removed == indegree.len() {
        None
    } else {
        Some(indegree.into_iter().filter(|(_, d)| *d > 0).map(|(s, _)| s.to_string()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalRelation {
    Equal,
    /// The first point lies in the causal past of the second.
    Precedes,
    /// The first point lies in the causal future of the second.
    Succeeds,
    Spacelike,
}

impl CausalRelation {
    /// `p ⪯ q`.
    pub fn precedes_or_equal(self) -> bool {
        matches!(self, CausalRelation::Equal | CausalRelation::Precedes)
    }

    pub fn reverse(self) -> Self {
        match self {
            CausalRelation::Precedes => CausalRelation::Succeeds,
            CausalRelation::Succeeds => CausalRelation::Precedes,
            other => other,
        }
    }
}

/// Free-function form of [`SignallingModel::causal_relation`].
pub fn causal_relation<T: Scalar>(
    p: &SpacetimePoint<T>,
    q: &SpacetimePoint<T>,
    model: &SignallingModel<T>,
) -> Result<CausalRelation, CausalError> {
    model.causal_relation(p, q)
}

/// Free-function form of [`SignallingModel::earliest_arrival`].
pub fn earliest_arrival<T: Scalar>(
    model: &SignallingModel<T>,
    from: &Location<T>,
    to: &Location<T>,
) -> Result<T, CausalError> {
    model.earliest_arrival(from, to)
}

/// A finite set of space-time points under one signalling model, with the
/// ordered input and presentation subsets. The subsets may overlap.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    points: Vec<SpacetimePoint<T>>,
    model: SignallingModel<T>,
    inputs: Vec<PointId>,
    presentations: Vec<PointId>,
    start: Option<PointId>,
    index: BTreeMap<PointId, usize>,
}

impl<T: Scalar> Network<T> {
    pub fn new(points: Vec<SpacetimePoint<T>>, model: SignallingModel<T>) -> Self {
        let mut index = BTreeMap::new();
        for (i, point) in points.iter().enumerate() {
            index.entry(point.id.clone()).or_insert(i);
        }
        Network {
            points,
            model,
            inputs: Vec::new(),
            presentations: Vec::new(),
            start: None,
            index,
        }
    }

    pub fn with_inputs<I, P>(mut self, inputs: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<PointId>,
    {
        self.inputs = inputs.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_presentations<I, P>(mut self, presentations: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<PointId>,
    {
        self.presentations = presentations.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_start(mut self, start: impl Into<PointId>) -> Self {
        self.start = Some(start.into());
        self
    }

    pub fn with_model(mut self, model: SignallingModel<T>) -> Self {
        self.model = model;
        self
    }

    pub fn points(&self) -> &[SpacetimePoint<T>] {
        &self.points
    }

    pub fn model(&self) -> &SignallingModel<T> {
        &self.model
    }

    pub fn input_points(&self) -> &[PointId] {
        &self.inputs
    }

    pub fn presentation_points(&self) -> &[PointId] {
        &self.presentations
    }

    pub fn start(&self) -> Option<&PointId> {
        self.start.as_ref()
    }

    pub fn point(&self, id: &str) -> Option<&SpacetimePoint<T>> {
        self.index.get(id).map(|&i| &self.points[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn is_input(&self, id: &str) -> bool {
        self.inputs.iter().any(|p| p.as_str() == id)
    }

    pub fn is_presentation(&self, id: &str) -> bool {
        self.presentations.iter().any(|p| p.as_str() == id)
    }

    fn lookup(&self, id: &str) -> Result<&SpacetimePoint<T>, CausalError> {
        self.point(id).ok_or_else(|| CausalError::UnknownPoint(PointId::new(id)))
    }

    /// Relation of `b` to `a` (e.g. `Precedes` when `a ≺ b`).
    pub fn relation(&self, a: &str, b: &str) -> Result<CausalRelation, CausalError> {
        self.model.causal_relation(self.lookup(a)?, self.lookup(b)?)
    }

    /// `a ⪯ b`.
    pub fn precedes_or_equal(&self, a: &str, b: &str) -> Result<bool, CausalError> {
        Ok(self.relation(a, b)?.precedes_or_equal())
    }

    /// `a ≺ b`, strictly.
    pub fn precedes(&self, a: &str, b: &str) -> Result<bool, CausalError> {
        Ok(self.relation(a, b)? == CausalRelation::Precedes)
    }

    pub fn spacelike(&self, a: &str, b: &str) -> Result<bool, CausalError> {
        Ok(self.relation(a, b)? == CausalRelation::Spacelike)
    }

    /// Signal travel time between the locations of two points.
    pub fn arrival_between(&self, a: &str, b: &str) -> Result<T, CausalError> {
        self.model.earliest_arrival(&self.lookup(a)?.location, &self.lookup(b)?.location)
    }

    /// Every unordered pair of points that are spacelike separated, with
    /// the smaller id first.
    pub fn spacelike_pairs(&self) -> Result<BTreeSet<(PointId, PointId)>, CausalError> {
        let mut pairs = BTreeSet::new();
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                if self.model.causal_relation(p, q)? == CausalRelation::Spacelike {
                    let pair = if p.id <= q.id {
                        (p.id.clone(), q.id.clone())
                    } else {
                        (q.id.clone(), p.id.clone())
                    };
                    pairs.insert(pair);
                }
            }
        }
        Ok(pairs)
    }

    /// Structural checks; problems are reported, not raised.
    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        if let Err(err) = self.model.validate() {
            match (&self.model, err) {
                (SignallingModel::ExplicitDag { edges }, CausalError::InvalidModel(_)) if dag_cycle(edges).is_some() => {
                    findings.push(Finding::CyclicDag { sites: dag_cycle(edges).unwrap_or_default() });
                }
                (_, other) => findings.push(Finding::InvalidModel(other.to_string())),
            }
        }

        let mut seen = BTreeSet::new();
        for point in &self.points {
            if !seen.insert(&point.id) {
                findings.push(Finding::DuplicateId(point.id.clone()));
            }
            if let Err(err) = self.model.check_location(point.id.as_str(), &point.location) {
                findings.push(Finding::MalformedPoint { id: point.id.clone(), reason: err.to_string() });
            } else if !(point.t.is_finite() && point.region_radius >= T::zero()) {
                findings.push(Finding::MalformedPoint {
                    id: point.id.clone(),
                    reason: "time must be finite and region radius non-negative".into(),
                });
            }
        }
        if findings.iter().any(|f| matches!(f, Finding::MalformedPoint { .. } | Finding::InvalidModel(_))) {
            return ValidationReport { findings };
        }

        let tol = T::causal_tolerance();
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                let Some(separation) = self.model.spatial_separation(&p.location, &q.location) else {
                    continue;
                };
                if separation <= tol {
                    continue;
                }
                let limit = separation / T::lit(2.0);
                if p.region_radius >= limit || q.region_radius >= limit {
                    findings.push(Finding::RegionOverlap(p.id.clone(), q.id.clone()));
                }
            }
        }

        for id in self.inputs.iter().chain(&self.presentations).chain(&self.start) {
            if !self.contains(id.as_str()) {
                findings.push(Finding::UnknownPoint(id.clone()));
            }
        }
        if findings.iter().any(|f| matches!(f, Finding::CyclicDag { .. })) {
            return ValidationReport { findings };
        }
        for q in &self.presentations {
            if !self.contains(q.as_str()) {
                continue;
            }
            let reachable = match &self.start {
                Some(start) if self.contains(start.as_str()) => {
                    self.precedes_or_equal(start.as_str(), q.as_str()).unwrap_or(false)
                }
                Some(_) => continue,
                None => self
                    .inputs
                    .iter()
                    .filter(|p| self.contains(p.as_str()))
                    .any(|p| self.precedes_or_equal(p.as_str(), q.as_str()).unwrap_or(false)),
            };
            if !reachable {
                findings.push(Finding::UnreachablePresentation(q.clone()));
            }
        }
        ValidationReport { findings }
    }
}

/// Free-function form of [`Network::spacelike_pairs`].
pub fn spacelike_pairs<T: Scalar>(network: &Network<T>) -> Result<BTreeSet<(PointId, PointId)>, CausalError> {
    network.spacelike_pairs()
}

/// Free-function form of [`Network::validate`].
pub fn validate_network<T: Scalar>(network: &Network<T>) -> ValidationReport {
    network.validate()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finding {
    DuplicateId(PointId),
    RegionOverlap(PointId, PointId),
    CyclicDag { sites: Vec<String> },
    UnreachablePresentation(PointId),
    UnknownPoint(PointId),
    MalformedPoint { id: PointId, reason: String },
    InvalidModel(String),
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateId(id) => write!(f, "duplicate point id `{id}`"),
            Finding::RegionOverlap(a, b) => write!(f, "exchange regions of `{a}` and `{b}` are too large for their separation"),
            Finding::CyclicDag { sites } => write!(f, "signalling graph is not acyclic (sites {})", sites.join(", ")),
            Finding::UnreachablePresentation(id) => write!(f, "presentation point `{id}` is not reachable"),
            Finding::UnknownPoint(id) => write!(f, "`{id}` is not a point of the network"),
            Finding::MalformedPoint { id, reason } => write!(f, "point `{id}`: {reason}"),
            Finding::InvalidModel(reason) => write!(f, "{reason}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn flat(id: &str, t: f64, x: f64) -> SpacetimePoint<f64> {
        SpacetimePoint::flat(id, t, [x, 0.0, 0.0])
    }

    #[test]
    fn flat_examples() {
        let m = SignallingModel::Flat;
        let p = flat("p", 0.0, 0.0);
        assert_eq!(m.causal_relation(&p, &flat("q", 2.0, 1.0)).unwrap(), CausalRelation::Precedes);
        assert_eq!(m.causal_relation(&p, &flat("q", 1.0, 2.0)).unwrap(), CausalRelation::Spacelike);
        assert_eq!(m.causal_relation(&p, &p).unwrap(), CausalRelation::Equal);
        assert!(CausalRelation::Equal.precedes_or_equal());
        assert_eq!(m.causal_relation(&flat("q", 2.0, 1.0), &p).unwrap(), CausalRelation::Succeeds);
    }

    #[test]
    fn light_like_counts_as_precedence() {
        let m = SignallingModel::Flat;
        let rel = m.causal_relation(&flat("p", 0.0, 0.0), &flat("q", 1.0, 1.0)).unwrap();
        assert_eq!(rel, CausalRelation::Precedes);
        let within_tol = m.causal_relation(&flat("p", 0.0, 0.0), &flat("q", 1.0, 1.0 + 5e-10)).unwrap();
        assert_eq!(within_tol, CausalRelation::Precedes);
        let outside = m.causal_relation(&flat("p", 0.0, 0.0), &flat("q", 1.0, 1.0 + 1e-6)).unwrap();
        assert_eq!(outside, CausalRelation::Spacelike);
    }

    #[test]
    fn coordinate_mismatch_is_an_error() {
        let m = SignallingModel::surface(1.0);
        let err = m.causal_relation(&flat("p", 0.0, 0.0), &flat("q", 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, CausalError::CoordinateMismatch { .. }));
        let bad_lon = SpacetimePoint::spherical("p", 0.0, 0.0, PI);
        assert!(matches!(m.causal_relation(&bad_lon, &bad_lon), Err(CausalError::Malformed(_))));
    }

    /// Arc length by summing chords of a finely subdivided great-circle
    /// path (slerp between unit vectors); independent of the closed form.
    fn numerical_geodesic(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
        let unit = |lat: f64, lon: f64| [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()];
        let (a, b) = (unit(lat1, lon1), unit(lat2, lon2));
        // Midpoint-free parametrisation: normalise linear interpolation.
        let steps = 200_000;
        let mut prev = a;
        let mut length = 0.0;
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            let raw = [0, 1, 2].map(|i| a[i] * (1.0 - s) + b[i] * s);
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cur = raw.map(|v| v / norm);
            length += (0..3).map(|i| (cur[i] - prev[i]).powi(2)).sum::<f64>().sqrt();
            prev = cur;
        }
        length
    }

    #[test]
    fn surface_arrival_equator_to_pole() {
        let m = SignallingModel::surface(1.0);
        let eq = Location::Spherical { lat: 0.0, lon: 0.3 };
        let pole = Location::Spherical { lat: FRAC_PI_2, lon: 0.0 };
        let t = m.earliest_arrival(&eq, &pole).unwrap();
        assert!((t - FRAC_PI_2).abs() < 1e-12);
        let oracle = numerical_geodesic(0.0, 0.3, FRAC_PI_2, 0.0);
        assert!((t - oracle).abs() < 1e-8, "{t} vs {oracle}");
    }

    #[test]
    fn antipodal_arrivals() {
        let a = Location::Spherical { lat: 0.0, lon: 0.0 };
        let b = Location::Spherical { lat: 0.0, lon: -PI };
        let surface = SignallingModel::surface(1.0).earliest_arrival(&a, &b).unwrap();
        assert!((surface - PI).abs() < 1e-12);
        let interior = SignallingModel::interior(1.0).earliest_arrival(&a, &b).unwrap();
        assert!((interior - 2.0).abs() < 1e-12);
        let slow = SignallingModel::SphereInterior { radius: 1.0, interior_speed: 2.0 / PI };
        assert!((slow.earliest_arrival(&a, &b).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn dag_arrivals_and_unreachability() {
        let m = SignallingModel::ExplicitDag {
            edges: vec![
                DagEdge { from: "a".into(), to: "b".into(), delay: 1.0 },
                DagEdge { from: "b".into(), to: "c".into(), delay: 1.0 },
                DagEdge { from: "a".into(), to: "c".into(), delay: 3.0 },
            ],
        };
        let site = |s: &str| Location::<f64>::Site(s.into());
        assert_eq!(m.earliest_arrival(&site("a"), &site("c")).unwrap(), 2.0);
        assert!(m.earliest_arrival(&site("c"), &site("a")).unwrap().is_infinite());
        let p = SpacetimePoint::site("p", 0.0, "a");
        let q = SpacetimePoint::site("q", 2.0, "c");
        assert_eq!(m.causal_relation(&p, &q).unwrap(), CausalRelation::Precedes);
        assert_eq!(m.causal_relation(&q, &p).unwrap(), CausalRelation::Succeeds);
        let late = SpacetimePoint::site("r", 5.0, "a");
        assert_eq!(m.causal_relation(&q, &late).unwrap(), CausalRelation::Spacelike);
    }

    #[test]
    fn spacelike_pair_examples() {
        let single = Network::new(vec![flat("a", 0.0, 0.0)], SignallingModel::Flat);
        assert!(single.spacelike_pairs().unwrap().is_empty());
        let chain = Network::new(vec![flat("a", 0.0, 0.0), flat("b", 2.0, 1.0)], SignallingModel::Flat);
        assert!(chain.spacelike_pairs().unwrap().is_empty());

        let t = FRAC_PI_2;
        let poles = Network::new(
            vec![
                SpacetimePoint::spherical("P1", 0.0, 0.0, 0.0),
                SpacetimePoint::spherical("P2", 0.0, 0.0, -PI),
                SpacetimePoint::spherical("Q1", t, FRAC_PI_2, 0.0),
                SpacetimePoint::spherical("Q2", t, -FRAC_PI_2, 0.0),
            ],
            SignallingModel::surface(1.0),
        );
        let pairs = poles.spacelike_pairs().unwrap();
        assert!(pairs.contains(&(PointId::from("Q1"), PointId::from("Q2"))));
        assert!(pairs.contains(&(PointId::from("P1"), PointId::from("P2"))));
        assert!(poles.precedes("P1", "Q1").unwrap());
    }

    #[test]
    fn validation_findings() {
        let dup = Network::new(vec![flat("a", 0.0, 0.0), flat("a", 1.0, 5.0)], SignallingModel::Flat);
        assert!(dup.validate().findings.contains(&Finding::DuplicateId("a".into())));

        let cyclic = Network::new(
            vec![SpacetimePoint::site("p", 0.0, "x")],
            SignallingModel::ExplicitDag {
                edges: vec![
                    DagEdge { from: "x".into(), to: "y".into(), delay: 1.0 },
                    DagEdge { from: "y".into(), to: "x".into(), delay: 1.0 },
                ],
            },
        );
        assert!(matches!(cyclic.validate().findings[..], [Finding::CyclicDag { .. }]));

        let overlap = Network::new(
            vec![flat("a", 0.0, 0.0).with_region_radius(0.6), flat("b", 0.0, 1.0)],
            SignallingModel::Flat,
        );
        assert!(matches!(overlap.validate().findings[..], [Finding::RegionOverlap(..)]));

        let unreachable = Network::new(vec![flat("p", 0.0, 0.0), flat("q", 1.0, 5.0)], SignallingModel::Flat)
            .with_inputs(["p"])
            .with_presentations(["q"]);
        assert_eq!(unreachable.validate().findings, vec![Finding::UnreachablePresentation("q".into())]);

        let fine = Network::new(vec![flat("p", 0.0, 0.0), flat("q", 5.0, 1.0)], SignallingModel::Flat)
            .with_inputs(["p"])
            .with_presentations(["q"]);
        assert!(fine.validate().is_empty());
    }

    #[test]
    fn generic_over_f32() {
        let m = SignallingModel::<f32>::surface(1.0);
        let p = SpacetimePoint::<f32>::spherical("p", 0.0, 0.0, 0.0);
        let q = SpacetimePoint::<f32>::spherical("q", std::f32::consts::FRAC_PI_2, std::f32::consts::FRAC_PI_2, 0.0);
        assert_eq!(m.causal_relation(&p, &q).unwrap(), CausalRelation::Precedes);
    }

    fn any_model() -> impl Strategy<Value = SignallingModel<f64>> {
        prop_oneof![
            Just(SignallingModel::Flat),
            (0.5f64..3.0, 0.2f64..=1.0).prop_map(|(radius, speed)| SignallingModel::SphereSurface { radius, speed }),
            (0.5f64..3.0, 0.2f64..=1.0)
                .prop_map(|(radius, interior_speed)| SignallingModel::SphereInterior { radius, interior_speed }),
            proptest::collection::vec((0usize..5, 0usize..5, 0.0f64..3.0), 0..10).prop_map(|raw| {
                // Orient every edge from lower to higher site index: acyclic.
                let edges = raw
                    .into_iter()
                    .filter(|(a, b, _)| a != b)
                    .map(|(a, b, delay)| DagEdge {
                        from: format!("s{}", a.min(b)),
                        to: format!("s{}", a.max(b)),
                        delay,
                    })
                    .collect();
                SignallingModel::ExplicitDag { edges }
            }),
        ]
    }

    fn point_for(model: &SignallingModel<f64>, id: &str, raw: (f64, f64, f64, usize)) -> SpacetimePoint<f64> {
        let (t, a, b, site) = raw;
        match model {
            SignallingModel::Flat => SpacetimePoint::flat(id, t * 4.0, [a * 3.0, b * 3.0, 0.0]),
            SignallingModel::ExplicitDag { .. } => SpacetimePoint::site(id, t * 4.0, format!("s{}", site % 5)),
            _ => SpacetimePoint::spherical(id, t * 4.0, (a - 0.5) * PI * 0.999, (b - 0.5) * 2.0 * PI * 0.999),
        }
    }

    fn raw_point() -> impl Strategy<Value = (f64, f64, f64, usize)> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0usize..5)
    }

    proptest! {
        #[test]
        fn relation_is_a_partial_order(model in any_model(), a in raw_point(), b in raw_point(), c in raw_point()) {
            let (p, q, r) = (point_for(&model, "p", a), point_for(&model, "q", b), point_for(&model, "r", c));
            let pq = model.causal_relation(&p, &q).unwrap();
            let qp = model.causal_relation(&q, &p).unwrap();
            prop_assert_eq!(pq.reverse(), qp);
            prop_assert_eq!(model.causal_relation(&p, &p).unwrap(), CausalRelation::Equal);
            let qr = model.causal_relation(&q, &r).unwrap();
            if pq == CausalRelation::Precedes && qr == CausalRelation::Precedes {
                prop_assert_eq!(model.causal_relation(&p, &r).unwrap(), CausalRelation::Precedes);
            }
        }

        #[test]
        fn arrival_is_symmetric_for_metric_models(model in any_model(), a in raw_point(), b in raw_point()) {
            prop_assume!(!matches!(model, SignallingModel::ExplicitDag { .. }));
            let (p, q) = (point_for(&model, "p", a), point_for(&model, "q", b));
            let ab = model.earliest_arrival(&p.location, &q.location).unwrap();
            let ba = model.earliest_arrival(&q.location, &p.location).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
        }

        #[test]
        fn precedence_matches_arrival_rule(model in any_model(), a in raw_point(), b in raw_point()) {
            let (p, q) = (point_for(&model, "p", a), point_for(&model, "q", b));
            let rel = model.causal_relation(&p, &q).unwrap();
            let arrival = model.earliest_arrival(&p.location, &q.location).unwrap();
            let dt = q.t - p.t;
            if dt > 1e-9 {
                prop_assert_eq!(rel == CausalRelation::Precedes, dt >= arrival - 1e-9);
            }
        }

        #[test]
        fn slow_interior_matches_surface(a in raw_point(), b in raw_point(), radius in 0.5f64..3.0, frac in 0.1f64..=1.0) {
            let surface = SignallingModel::SphereSurface { radius, speed: 1.0 };
            let interior = SignallingModel::SphereInterior { radius, interior_speed: frac * 2.0 / PI };
            let (p, q) = (point_for(&surface, "p", a), point_for(&surface, "q", b));
            let s = surface.earliest_arrival(&p.location, &q.location).unwrap();
            let i = interior.earliest_arrival(&p.location, &q.location).unwrap();
            prop_assert!(i >= s - 1e-12);
            prop_assert_eq!(surface.causal_relation(&p, &q).unwrap(), interior.causal_relation(&p, &q).unwrap());
            // Antipode of p.
            let (lat, lon) = match p.location { Location::Spherical { lat, lon } => (lat, lon), _ => unreachable!() };
            let anti_lon = if lon >= 0.0 { lon - PI } else { lon + PI };
            let anti = SpacetimePoint::spherical("a", p.t + s, -lat, anti_lon);
            prop_assert_eq!(surface.causal_relation(&p, &anti).unwrap(), interior.causal_relation(&p, &anti).unwrap());
        }
    }
}
