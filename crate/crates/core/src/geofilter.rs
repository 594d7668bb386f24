//! Bounding-box matching for geo-located posts.
//!
//! Two layers live here. [`stream_match`] reproduces what the streaming
//! platform does when a location filter is active: a post with precise
//! coordinates is tested against the box, and a post with only a place is
//! accepted when the place rectangle merely *touches* the box. That second rule
//! lets country-wide places leak into a city collection, so
//! [`strict_city_filter`] narrows it down to places lying entirely inside the
//! city.
//!
//! All comparisons are boundary inclusive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::RawPost;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("south-west latitude {sw} is north of north-east latitude {ne}")]
    Inverted { sw: f64, ne: f64 },
    #[error("box crosses the antimeridian (west longitude {west} > east longitude {east})")]
    Antimeridian { west: f64, east: f64 },
    #[error("a box needs at least one corner")]
    NoCorners,
}

/// A WGS84 position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Self { lat, lon })
    }
}

/// Axis-aligned latitude/longitude rectangle given by its south-west and
/// north-east corners. Boxes crossing the antimeridian cannot be built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxWire", into = "BoxWire")]
pub struct GeoBox {
    sw: GeoPoint,
    ne: GeoPoint,
}

#[derive(Serialize, Deserialize)]
struct BoxWire {
    sw_lat: f64,
    sw_lon: f64,
    ne_lat: f64,
    ne_lon: f64,
}

impl TryFrom<BoxWire> for GeoBox {
    type Error = GeoError;

    fn try_from(w: BoxWire) -> Result<Self, Self::Error> {
        GeoBox::from_degrees(w.sw_lat, w.sw_lon, w.ne_lat, w.ne_lon)
    }
}

impl From<GeoBox> for BoxWire {
    fn from(b: GeoBox) -> Self {
        BoxWire {
            sw_lat: b.sw.lat,
            sw_lon: b.sw.lon,
            ne_lat: b.ne.lat,
            ne_lon: b.ne.lon,
        }
    }
}

impl GeoBox {
    pub fn new(sw: GeoPoint, ne: GeoPoint) -> Result<Self, GeoError> {
        let sw = GeoPoint::new(sw.lat, sw.lon)?;
        let ne = GeoPoint::new(ne.lat, ne.lon)?;
        if sw.lat > ne.lat {
            return Err(GeoError::Inverted {
                sw: sw.lat,
                ne: ne.lat,
            });
        }
        if sw.lon > ne.lon {
            return Err(GeoError::Antimeridian {
                west: sw.lon,
                east: ne.lon,
            });
        }
        Ok(Self { sw, ne })
    }

    pub fn from_degrees(sw_lat: f64, sw_lon: f64, ne_lat: f64, ne_lon: f64) -> Result<Self, GeoError> {
        Self::new(
            GeoPoint { lat: sw_lat, lon: sw_lon },
            GeoPoint { lat: ne_lat, lon: ne_lon },
        )
    }

    /// Smallest box holding every corner. Place polygons arrive as four
    /// corners of an axis-aligned rectangle; this recovers the rectangle.
    pub fn hull<I: IntoIterator<Item = GeoPoint>>(corners: I) -> Result<Self, GeoError> {
        let mut it = corners.into_iter();
        let first = it.next().ok_or(GeoError::NoCorners)?;
        let (mut sw, mut ne) = (first, first);
        for p in it {
            sw.lat = sw.lat.min(p.lat);
            sw.lon = sw.lon.min(p.lon);
            ne.lat = ne.lat.max(p.lat);
            ne.lon = ne.lon.max(p.lon);
        }
        Self::new(sw, ne)
    }

    pub fn sw(&self) -> GeoPoint {
        self.sw
    }

    pub fn ne(&self) -> GeoPoint {
        self.ne
    }

    pub fn contains_point(&self, p: GeoPoint) -> bool {
        self.sw.lat <= p.lat && p.lat <= self.ne.lat && self.sw.lon <= p.lon && p.lon <= self.ne.lon
    }

    /// True when the two rectangles share at least one point; touching edges
    /// and corners count.
    pub fn overlaps(&self, other: &GeoBox) -> bool {
        self.sw.lat <= other.ne.lat
            && other.sw.lat <= self.ne.lat
            && self.sw.lon <= other.ne.lon
            && other.sw.lon <= self.ne.lon
    }

    pub fn contains_box(&self, inner: &GeoBox) -> bool {
        self.contains_point(inner.sw) && self.contains_point(inner.ne)
    }
}

pub fn contains_point(target: &GeoBox, p: GeoPoint) -> bool {
    target.contains_point(p)
}

pub fn boxes_overlap(a: &GeoBox, b: &GeoBox) -> bool {
    a.overlaps(b)
}

pub fn box_contains_box(outer: &GeoBox, inner: &GeoBox) -> bool {
    outer.contains_box(inner)
}

/// Which streaming heuristic (if any) selected a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchOutcome {
    ByCoordinates,
    ByPlaceOverlap,
    NoMatch,
}

/// The platform's location matching. The place is only consulted when the
/// post carries no coordinates.
pub fn stream_match(post: &RawPost, target: &GeoBox) -> MatchOutcome {
    match (post.point, post.place_box) {
        (Some(p), _) if target.contains_point(p) => MatchOutcome::ByCoordinates,
        (Some(_), _) => MatchOutcome::NoMatch,
        (None, Some(place)) if target.overlaps(&place) => MatchOutcome::ByPlaceOverlap,
        _ => MatchOutcome::NoMatch,
    }
}

/// Containment-corrected matching: coordinates must fall in the box, and a
/// place-only post is kept only if its whole place rectangle is inside.
///
/// A post with coordinates outside the box is rejected even when its place
/// lies inside; the precise point wins.
pub fn strict_city_filter(post: &RawPost, target: &GeoBox) -> bool {
    matches!(classify(post, target), GeoDecision::InByCoordinates | GeoDecision::InByPlace)
}

/// Full In/Out decomposition of one post against a city box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeoDecision {
    InByCoordinates,
    InByPlace,
    /// The platform would have matched it through place overlap, but the
    /// place is not contained in the box.
    OverlapOnly,
    /// Has a point or place, neither of which matches.
    Outside,
    NoGeo,
}

pub fn classify(post: &RawPost, target: &GeoBox) -> GeoDecision {
    match (post.point, post.place_box) {
        (None, None) => GeoDecision::NoGeo,
        (Some(p), _) => {
            if target.contains_point(p) {
                GeoDecision::InByCoordinates
            } else {
                GeoDecision::Outside
            }
        }
        (None, Some(place)) => {
            if target.contains_box(&place) {
                GeoDecision::InByPlace
            } else if target.overlaps(&place) {
                GeoDecision::OverlapOnly
            } else {
                GeoDecision::Outside
            }
        }
    }
}
