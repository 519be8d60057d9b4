//! Planar points and measured polylines.
//!
//! Coordinates are planar meters in a projected CRS. A [`MeasuredPolyline`]
//! carries the cumulative arc length at each vertex, which is the linear
//! referencing measure used by routes and sections.

use std::fmt;

use thiserror::Error;

/// Measure equality tolerance in meters.
pub const EPS_MEASURE: f64 = 1e-9;
/// Tolerance for deciding that a point lies on a line (side 0).
pub const EPS_SIDE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polyline needs at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("consecutive vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),
    #[error("measure {measure} outside [0, {length}]")]
    MeasureOutOfRange { measure: f64, length: f64 },
    #[error("empty measure interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("points coincide, direction undefined")]
    DegeneratePoints,
    #[error("invalid WKT: {0}")]
    Wkt(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(&self, other: &PlanarPoint, f: f64) -> PlanarPoint {
        PlanarPoint::new(
            self.x + (other.x - self.x) * f,
            self.y + (other.y - self.y) * f,
        )
    }

    pub fn to_wkt(&self) -> String {
        let p = wkt::types::Point::from_coord(coord(self));
        wkt::Wkt::Point(p).to_string()
    }

    pub fn from_wkt(text: &str) -> Result<Self, GeometryError> {
        match parse_wkt(text)? {
            wkt::Wkt::Point(p) => {
                let c = p
                    .coord()
                    .ok_or_else(|| GeometryError::Wkt("empty POINT".into()))?;
                Ok(PlanarPoint::new(c.x, c.y))
            }
            _ => Err(GeometryError::Wkt(format!("expected POINT: {text}"))),
        }
    }
}

impl fmt::Display for PlanarPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_wkt())
    }
}

/// Result of projecting a planar point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub measure: f64,
    pub distance: f64,
    /// +1 right of the increasing-measure direction, -1 left, 0 on the line.
    pub side: i8,
}

/// A polyline with cumulative arc-length measures, starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredPolyline {
    vertices: Vec<PlanarPoint>,
    measures: Vec<f64>,
}

impl MeasuredPolyline {
    pub fn new(vertices: Vec<PlanarPoint>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let mut measures = Vec::with_capacity(vertices.len());
        measures.push(0.0);
        for (i, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(GeometryError::NonFinite(i));
            }
            if i > 0 {
                let d = vertices[i - 1].distance(v);
                if d == 0.0 {
                    return Err(GeometryError::RepeatedVertex(i - 1, i));
                }
                measures.push(measures[i - 1] + d);
            }
        }
        Ok(Self { vertices, measures })
    }

    /// Builds a polyline after dropping consecutive duplicate vertices.
    pub fn new_dedup(mut vertices: Vec<PlanarPoint>) -> Result<Self, GeometryError> {
        vertices.dedup_by(|b, a| a.distance(b) == 0.0);
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[PlanarPoint] {
        &self.vertices
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn first(&self) -> PlanarPoint {
        self.vertices[0]
    }

    pub fn last(&self) -> PlanarPoint {
        *self.vertices.last().expect("polyline has vertices")
    }

    pub fn length(&self) -> f64 {
        *self.measures.last().expect("polyline has vertices")
    }

    pub fn reversed(&self) -> MeasuredPolyline {
        let mut v = self.vertices.clone();
        v.reverse();
        MeasuredPolyline::new(v).expect("reversal keeps validity")
    }

    /// Joins `other` onto the end of `self`. The shared junction vertex is
    /// kept once; a gap between the two ends becomes a connecting segment.
    pub fn concat(&self, other: &MeasuredPolyline) -> MeasuredPolyline {
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices);
        MeasuredPolyline::new_dedup(v).expect("concatenation of valid polylines")
    }

    fn check_measure(&self, m: f64) -> Result<f64, GeometryError> {
        let len = self.length();
        if !m.is_finite() || m < -EPS_MEASURE || m > len + EPS_MEASURE {
            return Err(GeometryError::MeasureOutOfRange {
                measure: m,
                length: len,
            });
        }
        Ok(m.clamp(0.0, len))
    }

    /// Index of the segment containing measure `m` (already clamped).
    fn segment_at(&self, m: f64) -> usize {
        let idx = self.measures.partition_point(|&x| x <= m);
        idx.saturating_sub(1).min(self.vertices.len() - 2)
    }

    pub fn locate_point(&self, m: f64) -> Result<PlanarPoint, GeometryError> {
        let m = self.check_measure(m)?;
        if m == 0.0 {
            return Ok(self.first());
        }
        if m == self.length() {
            return Ok(self.last());
        }
        let i = self.segment_at(m);
        let seg = self.measures[i + 1] - self.measures[i];
        Ok(self.vertices[i].lerp(&self.vertices[i + 1], (m - self.measures[i]) / seg))
    }

    pub fn project_point(&self, q: &PlanarPoint) -> Projection {
        let mut best: Option<(f64, f64, f64)> = None; // distance, measure, offset
        for i in 0..self.vertices.len() - 1 {
            let a = self.vertices[i];
            let b = self.vertices[i + 1];
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let seg_len = self.measures[i + 1] - self.measures[i];
            let t = (((q.x - a.x) * dx + (q.y - a.y) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let foot = a.lerp(&b, t);
            let dist = foot.distance(q);
            if best.is_none_or(|(d, _, _)| dist < d) {
                // signed perpendicular offset, positive to the left
                let cross = dx * (q.y - foot.y) - dy * (q.x - foot.x);
                best = Some((dist, self.measures[i] + t * seg_len, cross / seg_len));
            }
        }
        let (distance, measure, offset) = best.expect("polyline has a segment");
        let side = if offset.abs() < EPS_SIDE {
            0
        } else if offset > 0.0 {
            -1
        } else {
            1
        };
        Projection {
            measure,
            distance,
            side,
        }
    }

    /// Sub-curve between two measures, oriented from `m1` towards `m2`.
    pub fn sub_polyline(&self, m1: f64, m2: f64) -> Result<MeasuredPolyline, GeometryError> {
        let a = self.check_measure(m1)?;
        let b = self.check_measure(m2)?;
        if (a - b).abs() < EPS_MEASURE {
            return Err(GeometryError::EmptyInterval(m1, m2));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut pts = vec![self.locate_point(lo)?];
        pts.extend(
            self.vertices
                .iter()
                .zip(&self.measures)
                .filter(|(_, &m)| m > lo && m < hi)
                .map(|(v, _)| *v),
        );
        pts.push(self.locate_point(hi)?);
        if a > b {
            pts.reverse();
        }
        MeasuredPolyline::new_dedup(pts)
    }

    pub fn to_wkt(&self) -> String {
        let ls = wkt::types::LineString::new(
            self.vertices.iter().map(coord).collect(),
            wkt::types::Dimension::XY,
        );
        wkt::Wkt::LineString(ls).to_string()
    }

    pub fn from_wkt(text: &str) -> Result<Self, GeometryError> {
        match parse_wkt(text)? {
            wkt::Wkt::LineString(ls) => MeasuredPolyline::new(
                ls.coords()
                    .iter()
                    .map(|c| PlanarPoint::new(c.x, c.y))
                    .collect(),
            ),
            _ => Err(GeometryError::Wkt(format!("expected LINESTRING: {text}"))),
        }
    }
}

fn coord(p: &PlanarPoint) -> wkt::types::Coord<f64> {
    wkt::types::Coord {
        x: p.x,
        y: p.y,
        z: None,
        m: None,
    }
}

fn parse_wkt(text: &str) -> Result<wkt::Wkt<f64>, GeometryError> {
    let parsed: wkt::Wkt<f64> = text
        .trim()
        .parse()
        .map_err(|e: &str| GeometryError::Wkt(e.to_string()))?;
    use wkt::types::Dimension;
    let dim = match &parsed {
        wkt::Wkt::Point(p) => p.dimension(),
        wkt::Wkt::LineString(l) => l.dimension(),
        _ => Dimension::XY,
    };
    if dim != Dimension::XY {
        return Err(GeometryError::Wkt("only 2-D geometry is supported".into()));
    }
    Ok(parsed)
}

/// Counterclockwise angle from +x in degrees, in `[0, 360)`.
pub fn azimuth(from: &PlanarPoint, to: &PlanarPoint) -> Result<f64, GeometryError> {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    if dx.hypot(dy) < EPS_MEASURE {
        return Err(GeometryError::DegeneratePoints);
    }
    let deg = dy.atan2(dx).to_degrees();
    let deg = if deg < 0.0 { deg + 360.0 } else { deg };
    Ok(if deg >= 360.0 { 0.0 } else { deg })
}
