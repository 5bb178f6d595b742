//! Region grid: the deployment area divided into rectangular equal-sized
//! cells (boundary cells may be clipped by the space edge), numbered
//! row-major from the origin corner.

use super::geometry::{Bounds, Point};

/// Identifier of a grid region, `0..regions()` row-major.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RegionId(pub u32);

impl RegionId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for RegionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, PartialEq)]
pub enum GridError {
    /// Point lies outside the deployment area.
    OutOfBounds(Point),
    /// Region count does not tile the given bounds into equal cells.
    BadRegionCount { regions: u32 },
}

impl std::fmt::Display for GridError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridError::OutOfBounds(p) => write!(f, "point {p} outside deployment area"),
            GridError::BadRegionCount { regions } => {
                write!(f, "{regions} regions do not tile the area into an integer grid")
            }
        }
    }
}

impl std::error::Error for GridError {}

/// Partition of the deployment area into cells of nominal size
/// `side_w x side_h`; the last column/row is clipped when the side does
/// not divide the bounds evenly.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionGrid {
    bounds: Bounds,
    side_w: f64,
    side_h: f64,
    cols: u32,
    rows: u32,
}

impl RegionGrid {
    /// Build a grid with the given number of columns and rows (cells divide
    /// the bounds exactly).
    pub fn new(bounds: Bounds, cols: u32, rows: u32) -> Self {
        assert!(cols > 0 && rows > 0, "grid must have at least one cell");
        RegionGrid {
            bounds,
            cols,
            rows,
            side_w: bounds.width / cols as f64,
            side_h: bounds.height / rows as f64,
        }
    }

    /// Build a grid of `regions` equal cells. The count must factor into a
    /// cols x rows layout with square-ish cells; for a square area this
    /// means a perfect square count (4, 9, 16, 25, ...).
    pub fn from_region_count(bounds: Bounds, regions: u32) -> Result<Self, GridError> {
        if regions == 0 {
            return Err(GridError::BadRegionCount { regions });
        }
        // Prefer the factorization whose cell aspect ratio is closest to 1.
        let mut best: Option<(u32, u32, f64)> = None;
        for cols in 1..=regions {
            if regions % cols != 0 {
                continue;
            }
            let rows = regions / cols;
            let cw = bounds.width / cols as f64;
            let ch = bounds.height / rows as f64;
            let aspect = if cw > ch { cw / ch } else { ch / cw };
            if best.map_or(true, |(_, _, a)| aspect < a) {
                best = Some((cols, rows, aspect));
            }
        }
        let (cols, rows, aspect) = best.unwrap();
        // Reject layouts with badly elongated cells; region rendezvous
        // assumes cells comparable in width and height.
        if aspect > 1.5 {
            return Err(GridError::BadRegionCount { regions });
        }
        Ok(RegionGrid::new(bounds, cols, rows))
    }

    /// Build a grid from a cell side length: cols = ceil(width/side), with
    /// the last column/row clipped by the space edge.
    pub fn from_cell_side(bounds: Bounds, side: f64) -> Self {
        assert!(side > 0.0);
        let cols = (bounds.width / side).ceil().max(1.0) as u32;
        let rows = (bounds.height / side).ceil().max(1.0) as u32;
        RegionGrid {
            bounds,
            cols,
            rows,
            side_w: side.min(bounds.width),
            side_h: side.min(bounds.height),
        }
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn regions(&self) -> u32 {
        self.cols * self.rows
    }

    /// Nominal cell width (the last column may be narrower).
    pub fn cell_width(&self) -> f64 {
        self.side_w
    }

    /// Nominal cell height (the last row may be shorter).
    pub fn cell_height(&self) -> f64 {
        self.side_h
    }

    /// Perimeter of a nominal cell, meters.
    pub fn cell_perimeter(&self) -> f64 {
        2.0 * (self.side_w + self.side_h)
    }

    /// Region containing `p`; errors when `p` is outside the area.
    pub fn region_of(&self, p: Point) -> Result<RegionId, GridError> {
        if !self.bounds.contains(p) {
            return Err(GridError::OutOfBounds(p));
        }
        let col = ((p.x / self.side_w) as u32).min(self.cols - 1);
        let row = ((p.y / self.side_h) as u32).min(self.rows - 1);
        Ok(RegionId(row * self.cols + col))
    }

    /// Region containing `p` after clamping into the area. Total: every
    /// point maps somewhere, used on perceived positions that may drift.
    pub fn region_of_clamped(&self, p: Point) -> RegionId {
        self.region_of(self.bounds.clamp(p)).expect("clamped point is inside")
    }

    /// Geometric center of a region's (possibly clipped) rectangle, the
    /// routing target for rendezvous.
    pub fn center(&self, r: RegionId) -> Point {
        let (corner, w, h) = self.rect(r);
        Point::new(corner.x + w * 0.5, corner.y + h * 0.5)
    }

    /// Lower-left corner and actual size of a region.
    pub fn rect(&self, r: RegionId) -> (Point, f64, f64) {
        let (col, row) = self.col_row(r);
        let x0 = col as f64 * self.side_w;
        let y0 = row as f64 * self.side_h;
        (
            Point::new(x0, y0),
            (self.bounds.width - x0).min(self.side_w),
            (self.bounds.height - y0).min(self.side_h),
        )
    }

    fn col_row(&self, r: RegionId) -> (u32, u32) {
        assert!(r.0 < self.regions(), "region {r} out of range");
        (r.0 % self.cols, r.0 / self.cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_numbering() {
        let g = RegionGrid::new(Bounds::square(40.0), 4, 4);
        assert_eq!(g.region_of(Point::new(1.0, 1.0)).unwrap(), RegionId(0));
        assert_eq!(g.region_of(Point::new(39.0, 1.0)).unwrap(), RegionId(3));
        assert_eq!(g.region_of(Point::new(1.0, 11.0)).unwrap(), RegionId(4));
        assert_eq!(g.region_of(Point::new(39.0, 39.0)).unwrap(), RegionId(15));
        // (0,0) is region 0 on any grid.
        assert_eq!(g.region_of(Point::new(0.0, 0.0)).unwrap(), RegionId(0));
    }

    #[test]
    fn two_by_two_example() {
        let g = RegionGrid::from_cell_side(Bounds::new(200.0, 200.0), 100.0);
        assert_eq!((g.cols(), g.rows()), (2, 2));
        assert_eq!(g.region_of(Point::new(150.0, 50.0)).unwrap(), RegionId(1));
    }

    #[test]
    fn boundaries_belong_to_upper_cell() {
        let g = RegionGrid::new(Bounds::square(40.0), 4, 4);
        assert_eq!(g.region_of(Point::new(10.0, 0.0)).unwrap(), RegionId(1));
        assert_eq!(g.region_of(Point::new(0.0, 10.0)).unwrap(), RegionId(4));
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let g = RegionGrid::new(Bounds::square(40.0), 4, 4);
        assert!(g.region_of(Point::new(40.0, 0.0)).is_err());
        assert!(g.region_of(Point::new(-0.1, 5.0)).is_err());
        // Clamped mapping is total.
        assert_eq!(g.region_of_clamped(Point::new(40.0, 0.0)), RegionId(3));
    }

    #[test]
    fn centers_and_rects() {
        let g = RegionGrid::new(Bounds::square(40.0), 4, 4);
        let c = g.center(RegionId(5));
        assert_eq!(c, Point::new(15.0, 15.0));
        let (corner, w, h) = g.rect(RegionId(5));
        assert_eq!(corner, Point::new(10.0, 10.0));
        assert_eq!((w, h), (10.0, 10.0));
        assert_eq!(g.cell_perimeter(), 40.0);
    }

    #[test]
    fn clipped_boundary_cells() {
        // 100-wide area with side 30: 4 columns, the last 10 wide.
        let g = RegionGrid::from_cell_side(Bounds::new(100.0, 60.0), 30.0);
        assert_eq!((g.cols(), g.rows()), (4, 2));
        let (corner, w, h) = g.rect(RegionId(3));
        assert_eq!(corner, Point::new(90.0, 0.0));
        assert!((w - 10.0).abs() < 1e-9);
        assert!((h - 30.0).abs() < 1e-9);
        // Points in the clipped strip map to the clipped region.
        assert_eq!(g.region_of(Point::new(95.0, 10.0)).unwrap(), RegionId(3));
        let c = g.center(RegionId(3));
        assert!((c.x - 95.0).abs() < 1e-9);
    }

    #[test]
    fn region_count_factorization() {
        let b = Bounds::square(320.0);
        for r in [1u32, 4, 9, 16, 25] {
            let g = RegionGrid::from_region_count(b, r).unwrap();
            assert_eq!(g.regions(), r);
            assert_eq!(g.cols(), g.rows());
        }
        // Non-square counts on a square area make elongated cells.
        assert!(RegionGrid::from_region_count(b, 5).is_err());
        // On a 2:1 area, 2 regions tile fine.
        let g = RegionGrid::from_region_count(Bounds::new(200.0, 100.0), 2).unwrap();
        assert_eq!((g.cols(), g.rows()), (2, 1));
    }

    #[test]
    fn every_region_center_maps_back() {
        let g = RegionGrid::from_cell_side(Bounds::new(350.0, 280.0), 60.0);
        for i in 0..g.regions() {
            let r = RegionId(i);
            assert_eq!(g.region_of(g.center(r)).unwrap(), r, "center of {r}");
        }
    }

    // Partition property: region rectangles tile the space; sampled points
    // agree with rect membership.
    #[test]
    fn partition_tiles_the_space() {
        let g = RegionGrid::from_cell_side(Bounds::new(107.0, 93.0), 25.0);
        let mut rng = crate::sim::rng::RngStream::new(4, "grid");
        for _ in 0..5000 {
            let p = Point::new(rng.uniform(0.0, 107.0), rng.uniform(0.0, 93.0));
            let r = g.region_of(p).unwrap();
            let (corner, w, h) = g.rect(r);
            assert!(
                p.x >= corner.x && p.x < corner.x + w + 1e-9,
                "x not in region rect"
            );
            assert!(
                p.y >= corner.y && p.y < corner.y + h + 1e-9,
                "y not in region rect"
            );
        }
    }
}
