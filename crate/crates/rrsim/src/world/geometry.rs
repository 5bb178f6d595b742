//! Plane geometry used by the grid, planarization and face routing.

/// A position in the deployment plane, meters.
#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Midpoint of the segment from `self` to `other`.
    #[inline]
    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) * 0.5, (self.y + other.y) * 0.5)
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// Rectangular deployment area anchored at the origin.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn new(width: f64, height: f64) -> Self {
        assert!(width > 0.0 && height > 0.0, "bounds must be positive");
        Bounds { width, height }
    }

    pub fn square(side: f64) -> Self {
        Bounds::new(side, side)
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.x < self.width && p.y >= 0.0 && p.y < self.height
    }

    /// Clamp a point into the half-open area. Keeps positions valid after
    /// error injection or mobility overshoot.
    pub fn clamp(&self, p: Point) -> Point {
        // Stay strictly below the upper edge so the owning grid cell is
        // always well defined.
        let hi_x = self.width * (1.0 - 1e-12);
        let hi_y = self.height * (1.0 - 1e-12);
        Point::new(p.x.clamp(0.0, hi_x), p.y.clamp(0.0, hi_y))
    }

    pub fn center(&self) -> Point {
        Point::new(self.width * 0.5, self.height * 0.5)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Twice the signed area of triangle (a, b, c): positive when c lies to
/// the left of the directed line a -> b.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// True when segments (a,b) and (c,d) cross at a single interior point of
/// both. Touching at an endpoint or collinear overlap does not count;
/// random continuous coordinates make those cases measure-zero anyway.
pub fn segments_properly_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0) && o1 != 0.0 && o2 != 0.0 && o3 != 0.0 && o4 != 0.0
}

/// Intersection point of segments (a,b) and (c,d) when they properly
/// cross, else `None`.
pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    if !segments_properly_cross(a, b, c, d) {
        return None;
    }
    let rx = b.x - a.x;
    let ry = b.y - a.y;
    let sx = d.x - c.x;
    let sy = d.y - c.y;
    let denom = rx * sy - ry * sx;
    if denom == 0.0 {
        return None;
    }
    let t = ((c.x - a.x) * sy - (c.y - a.y) * sx) / denom;
    Some(Point::new(a.x + t * rx, a.y + t * ry))
}

/// Angle of the vector from `from` to `to`, in (-pi, pi].
#[inline]
pub fn angle_of(from: Point, to: Point) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

/// Counterclockwise sweep distance from angle `a` to angle `b`, in (0, 2*pi].
/// A zero delta maps to a full turn so "the same direction again" sorts last.
#[inline]
pub fn ccw_delta(a: f64, b: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut d = b - a;
    while d <= 0.0 {
        d += two_pi;
    }
    while d > two_pi {
        d -= two_pi;
    }
    d
}
