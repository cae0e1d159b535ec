//! Planar geometry kernel.
//!
//! Everything here assumes a single shared planar CRS. Rings are stored
//! closed (first vertex repeated at the end) and may have either winding.
//! Boundaries are inclusive: a point on any ring edge counts as inside.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("degenerate geometry")]
    Degenerate,
    #[error("invalid polygon")]
    InvalidPolygon,
    #[error("grid too coarse")]
    GridTooCoarse,
    #[error("grid step must be a positive finite number")]
    InvalidGridStep,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polyline needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polyline has consecutive duplicate vertices at index {0}")]
    DuplicateVertex(usize),
    #[error("ring is not closed")]
    UnclosedRing,
    #[error("ring needs at least 4 points, got {0}")]
    ShortRing(usize),
    #[error("multipolygon needs at least one part")]
    EmptyMultiPolygon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    /// Like [`Point::new`] but rejects NaN and infinities.
    pub fn checked(x: T, y: T) -> Result<Self, GeoError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(GeoError::NonFinite)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<U: Scalar>(self) -> Point<U> {
        Point { x: U::from_f64_lossy(self.x.to_f64_lossy()), y: U::from_f64_lossy(self.y.to_f64_lossy()) }
    }
}

/// Axis-aligned bounding box, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox<T> {
    pub min_x: T,
    pub min_y: T,
    pub max_x: T,
    pub max_y: T,
}

impl<T: Scalar> BBox<T> {
    pub fn new(min_x: T, min_y: T, max_x: T, max_y: T) -> Self {
        BBox { min_x, min_y, max_x, max_y }
    }

    fn empty() -> Self {
        BBox { min_x: T::infinity(), min_y: T::infinity(), max_x: T::neg_infinity(), max_y: T::neg_infinity() }
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point<T>>) -> Self {
        points.into_iter().fold(Self::empty(), |b, p| b.include(*p))
    }

    fn include(self, p: Point<T>) -> Self {
        BBox {
            min_x: self.min_x.min(p.x),
            min_y: self.min_y.min(p.y),
            max_x: self.max_x.max(p.x),
            max_y: self.max_y.max(p.y),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.min_x <= other.max_x && other.min_x <= self.max_x && self.min_y <= other.max_y && other.min_y <= self.max_y
    }

    pub fn width(&self) -> T {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> T {
        self.max_y - self.min_y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyLine<T> {
    vertices: Vec<Point<T>>,
    bbox: BBox<T>,
}

impl<T: Scalar> PolyLine<T> {
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self, GeoError> {
        if vertices.len() < 2 {
            return Err(GeoError::TooFewVertices(vertices.len()));
        }
        if !vertices.iter().all(Point::is_finite) {
            return Err(GeoError::NonFinite);
        }
        if let Some(i) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeoError::DuplicateVertex(i + 1));
        }
        let bbox = BBox::of_points(&vertices);
        Ok(PolyLine { vertices, bbox })
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn bbox(&self) -> BBox<T> {
        self.bbox
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        PolyLine { vertices, bbox: self.bbox }
    }

    pub fn length(&self) -> T {
        self.vertices.windows(2).map(|w| squared_distance(&w[0], &w[1]).sqrt()).fold(T::zero(), |a, b| a + b)
    }
}

fn validate_ring<T: Scalar>(ring: &[Point<T>]) -> Result<(), GeoError> {
    if !ring.iter().all(Point::is_finite) {
        return Err(GeoError::NonFinite);
    }
    if ring.first() != ring.last() {
        return Err(GeoError::UnclosedRing);
    }
    if ring.len() < 4 {
        return Err(GeoError::ShortRing(ring.len()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon<T> {
    exterior: Vec<Point<T>>,
    holes: Vec<Vec<Point<T>>>,
    bbox: BBox<T>,
}

impl<T: Scalar> Polygon<T> {
    pub fn new(exterior: Vec<Point<T>>, holes: Vec<Vec<Point<T>>>) -> Result<Self, GeoError> {
        validate_ring(&exterior)?;
        for h in &holes {
            validate_ring(h)?;
        }
        if ring_signed_area(&exterior) == T::zero() {
            return Err(GeoError::Degenerate);
        }
        let bbox = BBox::of_points(&exterior);
        Ok(Polygon { exterior, holes, bbox })
    }

    /// Axis-aligned rectangle, handy for fixtures and bounding regions.
    pub fn rect(min_x: T, min_y: T, max_x: T, max_y: T) -> Result<Self, GeoError> {
        let p = Point::new;
        Polygon::new(vec![p(min_x, min_y), p(max_x, min_y), p(max_x, max_y), p(min_x, max_y), p(min_x, min_y)], vec![])
    }

    pub fn exterior(&self) -> &[Point<T>] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point<T>>] {
        &self.holes
    }

    pub fn bbox(&self) -> BBox<T> {
        self.bbox
    }

    fn rings(&self) -> impl Iterator<Item = &[Point<T>]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    fn net_area(&self) -> T {
        let holes = self.holes.iter().map(|h| ring_signed_area(h).abs()).fold(T::zero(), |a, b| a + b);
        ring_signed_area(&self.exterior).abs() - holes
    }

    /// Area-weighted centroid and net area; holes subtract.
    fn centroid_and_area(&self) -> Result<(Point<T>, T), GeoError> {
        let (ce, ae) = ring_centroid(&self.exterior);
        let mut sx = ce.x * ae;
        let mut sy = ce.y * ae;
        let mut total = ae;
        for h in &self.holes {
            let (ch, ah) = ring_centroid(h);
            sx = sx - ch.x * ah;
            sy = sy - ch.y * ah;
            total = total - ah;
        }
        if !(total > T::zero()) {
            return Err(GeoError::Degenerate);
        }
        Ok((Point::new(sx / total, sy / total), total))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPolygon<T> {
    parts: Vec<Polygon<T>>,
    bbox: BBox<T>,
}

impl<T: Scalar> MultiPolygon<T> {
    pub fn new(parts: Vec<Polygon<T>>) -> Result<Self, GeoError> {
        if parts.is_empty() {
            return Err(GeoError::EmptyMultiPolygon);
        }
        let bbox = parts.iter().map(Polygon::bbox).reduce(|a, b| a.union(&b)).expect("nonempty");
        Ok(MultiPolygon { parts, bbox })
    }

    pub fn parts(&self) -> &[Polygon<T>] {
        &self.parts
    }

    pub fn bbox(&self) -> BBox<T> {
        self.bbox
    }
}

impl<T: Scalar> From<Polygon<T>> for MultiPolygon<T> {
    fn from(p: Polygon<T>) -> Self {
        let bbox = p.bbox;
        MultiPolygon { parts: vec![p], bbox }
    }
}

/// Anything made of polygon parts: a polygon, a multipolygon, or a slice of polygons.
pub trait Areal<T: Scalar> {
    fn parts(&self) -> &[Polygon<T>];

    fn bbox(&self) -> BBox<T> {
        self.parts().iter().map(Polygon::bbox).reduce(|a, b| a.union(&b)).unwrap_or_else(BBox::empty)
    }
}

impl<T: Scalar> Areal<T> for Polygon<T> {
    fn parts(&self) -> &[Polygon<T>] {
        std::slice::from_ref(self)
    }

    fn bbox(&self) -> BBox<T> {
        self.bbox
    }
}

impl<T: Scalar> Areal<T> for MultiPolygon<T> {
    fn parts(&self) -> &[Polygon<T>] {
        &self.parts
    }

    fn bbox(&self) -> BBox<T> {
        self.bbox
    }
}

impl<T: Scalar> Areal<T> for [Polygon<T>] {
    fn parts(&self) -> &[Polygon<T>] {
        self
    }
}

impl<T: Scalar> Areal<T> for Vec<Polygon<T>> {
    fn parts(&self) -> &[Polygon<T>] {
        self
    }
}

/// Any geometry a hydrological feature can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry<T> {
    Line(PolyLine<T>),
    Polygon(Polygon<T>),
    MultiPolygon(MultiPolygon<T>),
}

impl<T: Scalar> Geometry<T> {
    pub fn bbox(&self) -> BBox<T> {
        match self {
            Geometry::Line(l) => l.bbox(),
            Geometry::Polygon(p) => p.bbox(),
            Geometry::MultiPolygon(m) => m.bbox(),
        }
    }

    /// Polygon parts, or `None` for line geometry.
    pub fn polygons(&self) -> Option<&[Polygon<T>]> {
        match self {
            Geometry::Line(_) => None,
            Geometry::Polygon(p) => Some(std::slice::from_ref(p)),
            Geometry::MultiPolygon(m) => Some(m.parts()),
        }
    }

    pub fn centroid(&self) -> Result<Point<T>, GeoError> {
        match self {
            Geometry::Line(l) => polyline_centroid(l),
            Geometry::Polygon(p) => centroid(p),
            Geometry::MultiPolygon(m) => centroid(m),
        }
    }

    pub fn is_areal(&self) -> bool {
        !matches!(self, Geometry::Line(_))
    }
}

/// Signed shoelace area; counter-clockwise rings are positive.
fn ring_signed_area<T: Scalar>(ring: &[Point<T>]) -> T {
    let Some(origin) = ring.first() else {
        return T::zero();
    };
    let twice = ring.windows(2).fold(T::zero(), |acc, w| {
        let (ax, ay) = (w[0].x - origin.x, w[0].y - origin.y);
        let (bx, by) = (w[1].x - origin.x, w[1].y - origin.y);
        acc + (ax * by - bx * ay)
    });
    twice * T::half()
}

/// Centroid and absolute area of a single closed ring.
fn ring_centroid<T: Scalar>(ring: &[Point<T>]) -> (Point<T>, T) {
    let origin = ring[0];
    let mut twice = T::zero();
    let mut cx = T::zero();
    let mut cy = T::zero();
    for w in ring.windows(2) {
        let (ax, ay) = (w[0].x - origin.x, w[0].y - origin.y);
        let (bx, by) = (w[1].x - origin.x, w[1].y - origin.y);
        let cross = ax * by - bx * ay;
        twice = twice + cross;
        cx = cx + (ax + bx) * cross;
        cy = cy + (ay + by) * cross;
    }
    let area = twice * T::half();
    if area == T::zero() {
        return (origin, T::zero());
    }
    let six_a = T::from_f64_lossy(3.0) * twice;
    (Point::new(origin.x + cx / six_a, origin.y + cy / six_a), area.abs())
}

/// Length-weighted centroid of the segments.
pub fn polyline_centroid<T: Scalar>(line: &PolyLine<T>) -> Result<Point<T>, GeoError> {
    let mut total = T::zero();
    let mut sx = T::zero();
    let mut sy = T::zero();
    for w in line.vertices().windows(2) {
        let len = squared_distance(&w[0], &w[1]).sqrt();
        sx = sx + (w[0].x + w[1].x) * T::half() * len;
        sy = sy + (w[0].y + w[1].y) * T::half() * len;
        total = total + len;
    }
    if !(total > T::zero()) {
        return Err(GeoError::Degenerate);
    }
    Ok(Point::new(sx / total, sy / total))
}

/// Area-weighted centroid of a polygon or multipolygon.
pub fn centroid<T: Scalar, A: Areal<T> + ?Sized>(poly: &A) -> Result<Point<T>, GeoError> {
    let mut total = T::zero();
    let mut sx = T::zero();
    let mut sy = T::zero();
    for part in poly.parts() {
        let (c, a) = part.centroid_and_area()?;
        sx = sx + c.x * a;
        sy = sy + c.y * a;
        total = total + a;
    }
    if !(total > T::zero()) {
        return Err(GeoError::Degenerate);
    }
    let c = Point::new(sx / total, sy / total);
    debug_assert!(
        {
            let b = poly.bbox();
            let slack = (b.width() + b.height()) * T::from_f64_lossy(1e-9);
            c.x >= b.min_x - slack && c.x <= b.max_x + slack && c.y >= b.min_y - slack && c.y <= b.max_y + slack
        },
        "centroid outside bounding box"
    );
    Ok(c)
}

pub fn squared_distance<T: Scalar>(a: &Point<T>, b: &Point<T>) -> T {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Net area of a polygon or multipolygon in squared CRS units.
pub fn area<T: Scalar, A: Areal<T> + ?Sized>(poly: &A) -> Result<T, GeoError> {
    let mut total = T::zero();
    for part in poly.parts() {
        let a = part.net_area();
        if a < T::zero() {
            return Err(GeoError::InvalidPolygon);
        }
        total = total + a;
    }
    Ok(total)
}

fn cross<T: Scalar>(o: &Point<T>, a: &Point<T>, b: &Point<T>) -> T {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment<T: Scalar>(p: &Point<T>, a: &Point<T>, b: &Point<T>) -> bool {
    cross(a, b, p) == T::zero()
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test: touching endpoints and collinear overlap count.
pub fn segments_intersect<T: Scalar>(p1: &Point<T>, p2: &Point<T>, q1: &Point<T>, q2: &Point<T>) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

fn ring_parity<T: Scalar>(p: &Point<T>, ring: &[Point<T>]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_ring<T: Scalar>(p: &Point<T>, ring: &[Point<T>]) -> bool {
    ring.windows(2).any(|w| on_segment(p, &w[0], &w[1]))
}

fn point_in_part<T: Scalar>(p: &Point<T>, part: &Polygon<T>) -> bool {
    if !part.bbox.contains(p) {
        return false;
    }
    if part.rings().any(|r| on_ring(p, r)) {
        return true;
    }
    ring_parity(p, &part.exterior) && !part.holes.iter().any(|h| ring_parity(p, h))
}

/// Ray-casting containment with holes honored; boundary points are inside.
pub fn point_in_polygon<T: Scalar, A: Areal<T> + ?Sized>(p: &Point<T>, poly: &A) -> bool {
    poly.parts().iter().any(|part| point_in_part(p, part))
}

fn segments<T>(pts: &[Point<T>]) -> impl Iterator<Item = (&Point<T>, &Point<T>)> {
    pts.windows(2).map(|w| (&w[0], &w[1]))
}

/// True when the line crosses or touches any ring edge, or lies inside the polygon.
pub fn intersects<T: Scalar, A: Areal<T> + ?Sized>(line: &PolyLine<T>, poly: &A) -> bool {
    let lb = line.bbox();
    for part in poly.parts() {
        if !lb.intersects(&part.bbox) {
            continue;
        }
        for (a, b) in segments(line.vertices()) {
            for ring in part.rings() {
                if segments(ring).any(|(c, d)| segments_intersect(a, b, c, d)) {
                    return true;
                }
            }
        }
        if line.vertices().iter().any(|v| point_in_part(v, part)) {
            return true;
        }
    }
    false
}

/// Polygon/polygon overlap test: any edge contact or either containing a vertex of the other.
pub fn polygons_intersect<T: Scalar, A, B>(a: &A, b: &B) -> bool
where
    A: Areal<T> + ?Sized,
    B: Areal<T> + ?Sized,
{
    for pa in a.parts() {
        for pb in b.parts() {
            if !pa.bbox.intersects(&pb.bbox) {
                continue;
            }
            let edge_hit = pa.rings().any(|ra| {
                segments(ra).any(|(p1, p2)| {
                    pb.rings().any(|rb| segments(rb).any(|(q1, q2)| segments_intersect(p1, p2, q1, q2)))
                })
            });
            if edge_hit
                || pa.exterior.iter().any(|v| point_in_part(v, pb))
                || pb.exterior.iter().any(|v| point_in_part(v, pa))
            {
                return true;
            }
        }
    }
    false
}

fn grid_axis<T: Scalar>(min: T, max: T, step: T) -> impl Iterator<Item = T> {
    let mut i = 0usize;
    std::iter::from_fn(move || {
        let v = min + (T::from_usize(i)? + T::half()) * step;
        i += 1;
        (v <= max).then_some(v)
    })
}

/// Counts of lattice points inside the region and inside the region and the cover.
fn grid_counts<T, R, C>(region: &R, cover: &[C], grid_step: T) -> Result<(usize, usize), GeoError>
where
    T: Scalar,
    R: Areal<T> + ?Sized,
    C: Areal<T>,
{
    if !(grid_step > T::zero()) || !grid_step.is_finite() {
        return Err(GeoError::InvalidGridStep);
    }
    let rb = region.bbox();
    let cover_boxes: Vec<BBox<T>> = cover.iter().map(Areal::bbox).collect();
    let mut in_region = 0usize;
    let mut in_cover = 0usize;
    for y in grid_axis(rb.min_y, rb.max_y, grid_step) {
        let row_covers: Vec<usize> =
            (0..cover.len()).filter(|&i| cover_boxes[i].min_y <= y && y <= cover_boxes[i].max_y).collect();
        for x in grid_axis(rb.min_x, rb.max_x, grid_step) {
            let p = Point::new(x, y);
            if !point_in_polygon(&p, region) {
                continue;
            }
            in_region += 1;
            if row_covers.iter().any(|&i| cover_boxes[i].contains(&p) && point_in_polygon(&p, &cover[i])) {
                in_cover += 1;
            }
        }
    }
    Ok((in_region, in_cover))
}

/// Fraction of the region covered by any cover polygon, estimated on a regular lattice.
///
/// Lattice points sit at `bbox.min + (i + 1/2) * grid_step` along each axis; only
/// points inside the region are counted.
pub fn land_fraction<T, R, C>(region: &R, cover: &[C], grid_step: T) -> Result<T, GeoError>
where
    T: Scalar,
    R: Areal<T> + ?Sized,
    C: Areal<T>,
{
    let (in_region, in_cover) = grid_counts(region, cover, grid_step)?;
    if in_region == 0 {
        return Err(GeoError::GridTooCoarse);
    }
    Ok(T::from_usize(in_cover).unwrap_or_else(T::nan) / T::from_usize(in_region).unwrap_or_else(T::nan))
}

/// Largest power-of-two refinement of `sqrt(area / min_samples)` that puts at
/// least `min_samples` lattice points inside the region.
pub fn auto_grid_step<T, R>(region: &R, min_samples: usize) -> Result<T, GeoError>
where
    T: Scalar,
    R: Areal<T> + ?Sized,
{
    let a = area(region)?;
    let n = T::from_usize(min_samples.max(1)).unwrap_or_else(T::one);
    let mut step = (a / n).sqrt();
    if !(step > T::zero()) {
        return Err(GeoError::Degenerate);
    }
    let empty: [Polygon<T>; 0] = [];
    for _ in 0..32 {
        let (inside, _) = grid_counts(region, &empty, step)?;
        if inside >= min_samples {
            return Ok(step);
        }
        step = step * T::half();
    }
    Err(GeoError::GridTooCoarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y)
    }

    fn unit_square() -> Polygon<f64> {
        Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn square_with_hole() -> Polygon<f64> {
        Polygon::new(
            unit_square().exterior().to_vec(),
            vec![vec![p(0.25, 0.25), p(0.25, 0.75), p(0.75, 0.75), p(0.75, 0.25), p(0.25, 0.25)]],
        )
        .unwrap()
    }

    fn line(pts: &[(f64, f64)]) -> PolyLine<f64> {
        PolyLine::new(pts.iter().map(|&(x, y)| p(x, y)).collect()).unwrap()
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&unit_square()).unwrap(), p(0.5, 0.5));
        let c = polyline_centroid(&line(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0)])).unwrap();
        assert!((c.x - 1.5).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12, "{c:?}");
        let tri = Polygon::new(vec![p(0.0, 0.0), p(3.0, 0.0), p(0.0, 3.0), p(0.0, 0.0)], vec![]).unwrap();
        let c = centroid(&tri).unwrap();
        assert!((c.x - 1.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_with_hole_shifts_away_from_hole() {
        let hole = vec![p(0.0, 0.0), p(0.5, 0.0), p(0.5, 1.0), p(0.0, 1.0), p(0.0, 0.0)];
        let big = Polygon::rect(0.0, 0.0, 2.0, 1.0).unwrap();
        let poly = Polygon::new(big.exterior().to_vec(), vec![hole]).unwrap();
        let c = centroid(&poly).unwrap();
        // Remaining material is [0.5, 2] x [0, 1].
        assert!((c.x - 1.25).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn multipolygon_centroid_is_area_weighted() {
        let a = Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let b = Polygon::rect(2.0, 0.0, 4.0, 1.0).unwrap();
        let m = MultiPolygon::new(vec![a, b]).unwrap();
        let c: Point<f64> = centroid(&m).unwrap();
        assert!((c.x - (0.5 + 3.0 * 2.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let flat = vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(0.0, 0.0)];
        assert_eq!(Polygon::new(flat, vec![]).unwrap_err(), GeoError::Degenerate);
        // Hole as large as the exterior leaves nothing.
        let sq = unit_square();
        let filled = Polygon::new(sq.exterior().to_vec(), vec![sq.exterior().to_vec()]).unwrap();
        assert_eq!(centroid(&filled).unwrap_err(), GeoError::Degenerate);
        assert_eq!(PolyLine::new(vec![p(0.0, 0.0)]).unwrap_err(), GeoError::TooFewVertices(1));
        assert_eq!(
            PolyLine::new(vec![p(0.0, 0.0), p(0.0, 0.0), p(1.0, 1.0)]).unwrap_err(),
            GeoError::DuplicateVertex(1)
        );
        let open = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        assert_eq!(Polygon::new(open, vec![]).unwrap_err(), GeoError::UnclosedRing);
        assert_eq!(Point::checked(f64::NAN, 0.0).unwrap_err(), GeoError::NonFinite);
        assert_eq!(MultiPolygon::<f64>::new(vec![]).unwrap_err(), GeoError::EmptyMultiPolygon);
    }

    #[test]
    fn point_in_polygon_examples() {
        assert!(point_in_polygon(&p(0.5, 0.5), &unit_square()));
        assert!(!point_in_polygon(&p(2.0, 2.0), &unit_square()));
        assert!(!point_in_polygon(&p(0.5, 0.5), &square_with_hole()));
        assert!(point_in_polygon(&p(0.1, 0.5), &square_with_hole()));
    }

    #[test]
    fn boundary_points_are_inside() {
        let sq = unit_square();
        for q in [p(0.0, 0.0), p(1.0, 0.5), p(0.5, 1.0), p(0.0, 0.3)] {
            assert!(point_in_polygon(&q, &sq), "{q:?}");
        }
        // On the hole's boundary also counts.
        assert!(point_in_polygon(&p(0.25, 0.5), &square_with_hole()));
    }

    #[test]
    fn intersects_examples() {
        let sq = unit_square();
        assert!(intersects(&line(&[(-1.0, 0.5), (2.0, 0.5)]), &sq));
        assert!(!intersects(&line(&[(5.0, 5.0), (6.0, 6.0)]), &sq));
        let inner = line(&[(0.2, 0.2), (0.4, 0.4)]);
        let crosses_edge = sq
            .exterior()
            .windows(2)
            .any(|w| segments_intersect(&inner.vertices()[0], &inner.vertices()[1], &w[0], &w[1]));
        assert!(!crosses_edge);
        assert!(intersects(&inner, &sq));
        // Touching a corner counts.
        assert!(intersects(&line(&[(1.0, 1.0), (2.0, 2.0)]), &sq));
        // Fully inside the hole does not.
        assert!(!intersects(&line(&[(0.4, 0.4), (0.6, 0.6)]), &square_with_hole()));
    }

    #[test]
    fn area_examples() {
        assert_eq!(area(&unit_square()).unwrap(), 1.0);
        let hole = vec![p(0.0, 0.0), p(0.5, 0.0), p(0.5, 0.5), p(0.0, 0.5), p(0.0, 0.0)];
        let holed = Polygon::new(unit_square().exterior().to_vec(), vec![hole]).unwrap();
        assert_eq!(area(&holed).unwrap(), 0.75);
        let m = MultiPolygon::new(vec![unit_square(), Polygon::rect(3.0, 3.0, 4.0, 4.0).unwrap()]).unwrap();
        assert_eq!(area(&m).unwrap(), 2.0);
        let big_hole = vec![p(-1.0, -1.0), p(2.0, -1.0), p(2.0, 2.0), p(-1.0, 2.0), p(-1.0, -1.0)];
        let bad = Polygon::new(unit_square().exterior().to_vec(), vec![big_hole]).unwrap();
        assert_eq!(area(&bad).unwrap_err(), GeoError::InvalidPolygon);
    }

    #[test]
    fn land_fraction_examples() {
        let sq = unit_square();
        let left = Polygon::rect(0.0, 0.0, 0.5, 1.0).unwrap();
        let f = land_fraction(&sq, &[left], 0.01).unwrap();
        assert!((f - 0.5).abs() <= 0.01, "{f}");
        let none: [Polygon<f64>; 0] = [];
        assert_eq!(land_fraction(&sq, &none, 0.01).unwrap(), 0.0);
        assert_eq!(land_fraction(&sq, std::slice::from_ref(&sq), 0.01).unwrap(), 1.0);
        assert_eq!(land_fraction(&sq, &none, 5.0).unwrap_err(), GeoError::GridTooCoarse);
        assert_eq!(land_fraction(&sq, &none, 0.0).unwrap_err(), GeoError::InvalidGridStep);
    }

    #[test]
    fn auto_grid_step_reaches_sample_target() {
        let sq = Polygon::rect(0.0, 0.0, 1000.0, 500.0).unwrap();
        let step: f64 = auto_grid_step(&sq, 10_000).unwrap();
        let (inside, _) = grid_counts::<f64, _, Polygon<f64>>(&sq, &[], step).unwrap();
        assert!(inside >= 10_000);
    }

    #[test]
    fn squared_distance_examples() {
        assert_eq!(squared_distance(&p(0.0, 0.0), &p(3.0, 4.0)), 25.0);
        assert_eq!(squared_distance(&p(1.0, 1.0), &p(1.0, 1.0)), 0.0);
        assert_eq!(squared_distance(&p(-1.0, 0.0), &p(2.0, 0.0)), 9.0);
    }

    #[test]
    fn polygons_intersect_cases() {
        let a = unit_square();
        assert!(polygons_intersect(&a, &Polygon::rect(0.5, 0.5, 2.0, 2.0).unwrap()));
        assert!(polygons_intersect(&a, &Polygon::rect(0.2, 0.2, 0.3, 0.3).unwrap()));
        assert!(polygons_intersect(&Polygon::rect(0.2, 0.2, 0.3, 0.3).unwrap(), &a));
        assert!(!polygons_intersect(&a, &Polygon::rect(2.0, 2.0, 3.0, 3.0).unwrap()));
        // Sitting inside the hole is not an overlap.
        assert!(!polygons_intersect(&square_with_hole(), &Polygon::rect(0.4, 0.4, 0.6, 0.6).unwrap()));
    }

    #[test]
    fn works_in_single_precision() {
        let sq = Polygon::<f32>::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(area(&sq).unwrap(), 1.0f32);
        assert!(point_in_polygon(&Point::new(0.5f32, 0.5), &sq));
        let left = Polygon::<f32>::rect(0.0, 0.0, 0.5, 1.0).unwrap();
        assert!((land_fraction(&sq, &[left], 0.01f32).unwrap() - 0.5f32).abs() <= 0.01);
    }

    fn arb_convex() -> impl Strategy<Value = Polygon<f64>> {
        (3usize..9, -50.0f64..50.0, -50.0f64..50.0, 0.5f64..20.0, prop::collection::vec(0.0f64..1.0, 9)).prop_map(
            |(n, cx, cy, r, jitter)| {
                let mut angles: Vec<f64> =
                    (0..n).map(|i| (i as f64 + 0.8 * jitter[i]) * std::f64::consts::TAU / n as f64).collect();
                angles.sort_by(f64::total_cmp);
                let mut ring: Vec<Point<f64>> = angles.iter().map(|a| p(cx + r * a.cos(), cy + r * a.sin())).collect();
                ring.push(ring[0]);
                Polygon::new(ring, vec![]).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn area_translation_and_scaling(poly in arb_convex(), dx in -1e3f64..1e3, dy in -1e3f64..1e3, s in 0.1f64..10.0) {
            let a = area(&poly).unwrap();
            let moved: Vec<_> = poly.exterior().iter().map(|q| p(q.x + dx, q.y + dy)).collect();
            let scaled: Vec<_> = poly.exterior().iter().map(|q| p(q.x * s, q.y * s)).collect();
            let am = area(&Polygon::new(moved, vec![]).unwrap()).unwrap();
            let as_ = area(&Polygon::new(scaled, vec![]).unwrap()).unwrap();
            prop_assert!(((am - a) / a).abs() < 1e-9);
            prop_assert!(((as_ - s * s * a) / (s * s * a)).abs() < 1e-9);
        }

        #[test]
        fn centroid_inside_bbox(poly in arb_convex()) {
            let c = centroid(&poly).unwrap();
            prop_assert!(poly.bbox().contains(&c));
        }

        #[test]
        fn intersects_is_direction_free(poly in arb_convex(),
            pts in prop::collection::vec((-80.0f64..80.0, -80.0f64..80.0), 2..6)) {
            let verts: Vec<_> = pts.iter().map(|&(x, y)| p(x, y)).collect();
            if let Ok(l) = PolyLine::new(verts) {
                prop_assert_eq!(intersects(&l, &poly), intersects(&l.reversed(), &poly));
            }
        }

        #[test]
        fn land_fraction_monotone_in_cover(a in arb_convex(), b in arb_convex()) {
            let region = Polygon::rect(-60.0, -60.0, 60.0, 60.0).unwrap();
            let one = land_fraction(&region, std::slice::from_ref(&a), 2.0).unwrap();
            let two = land_fraction(&region, &[a, b], 2.0).unwrap();
            prop_assert!(two >= one);
        }
    }
}
