use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(self, dir: Point2, len: f64) -> Point2 {
        Point2::new(self.x + dir.x * len, self.y + dir.y * len)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min.x < other.max.x
            && other.min.x < self.max.x
            && self.min.y < other.max.y
            && other.min.y < self.max.y
    }

    /// Liang-Barsky clip of segment `a`-`b` against the rectangle.
    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for (p, q) in [
            (-dx, a.x - self.min.x),
            (dx, self.max.x - a.x),
            (-dy, a.y - self.min.y),
            (dy, self.max.y - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub rows: u32,
    pub cols: u32,
    pub block_size_m: f64,
    pub street_width_m: f64,
    pub park_slot: Option<(u32, u32)>,
}

impl From<&ScenarioConfig> for GridConfig {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            rows: c.grid_rows,
            cols: c.grid_cols,
            block_size_m: c.block_size_m,
            street_width_m: c.street_width_m,
            park_slot: c.park_slot.map(|[r, c]| (r, c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Building {
    pub slot: (u32, u32),
    pub footprint: Rect,
}

/// Block grid: buildings separated by streets, one block slot left open.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub extent: Rect,
    pub buildings: Vec<Building>,
    pub park: Option<Rect>,
    pub grid: GridConfig,
}

pub fn build_geometry(cfg: &GridConfig) -> Result<Geometry, ScenarioError> {
    if cfg.rows == 0 {
        return Err(ScenarioError::NonPositiveDimension("rows"));
    }
    if cfg.cols == 0 {
        return Err(ScenarioError::NonPositiveDimension("cols"));
    }
    if !(cfg.block_size_m > 0.0) {
        return Err(ScenarioError::NonPositiveDimension("block_size_m"));
    }
    if !(cfg.street_width_m >= 0.0) {
        return Err(ScenarioError::NonPositiveDimension("street_width_m"));
    }
    if let Some((row, col)) = cfg.park_slot {
        if row >= cfg.rows || col >= cfg.cols {
            return Err(ScenarioError::SlotOutOfGrid {
                row,
                col,
                rows: cfg.rows,
                cols: cfg.cols,
            });
        }
    }
    let pitch = cfg.block_size_m + cfg.street_width_m;
    let width = cfg.cols as f64 * pitch - cfg.street_width_m;
    let height = cfg.rows as f64 * pitch - cfg.street_width_m;
    let slot_rect = |r: u32, c: u32| {
        let min = Point2::new(c as f64 * pitch, r as f64 * pitch);
        Rect::new(
            min,
            Point2::new(min.x + cfg.block_size_m, min.y + cfg.block_size_m),
        )
    };
    let mut buildings = Vec::new();
    let mut park = None;
    for r in 0..cfg.rows {
        for c in 0..cfg.cols {
            if cfg.park_slot == Some((r, c)) {
                park = Some(slot_rect(r, c));
            } else {
                buildings.push(Building {
                    slot: (r, c),
                    footprint: slot_rect(r, c),
                });
            }
        }
    }
    Ok(Geometry {
        extent: Rect::new(Point2::new(0.0, 0.0), Point2::new(width, height)),
        buildings,
        park,
        grid: cfg.clone(),
    })
}

/// The four street axis directions.
pub const AXIS_DIRECTIONS: [Point2; 4] = [
    Point2::new(1.0, 0.0),
    Point2::new(-1.0, 0.0),
    Point2::new(0.0, 1.0),
    Point2::new(0.0, -1.0),
];

impl Geometry {
    pub fn slot_rect(&self, row: u32, col: u32) -> Rect {
        let pitch = self.grid.block_size_m + self.grid.street_width_m;
        let min = Point2::new(col as f64 * pitch, row as f64 * pitch);
        Rect::new(
            min,
            Point2::new(
                min.x + self.grid.block_size_m,
                min.y + self.grid.block_size_m,
            ),
        )
    }

    pub fn building_at_slot(&self, row: u32, col: u32) -> Option<usize> {
        self.buildings.iter().position(|b| b.slot == (row, col))
    }

    pub fn in_building(&self, p: Point2) -> bool {
        self.buildings.iter().any(|b| b.footprint.contains(p))
    }

    /// Inside the extent and outside every building footprint.
    pub fn is_street(&self, p: Point2) -> bool {
        self.extent.contains(p) && !self.in_building(p)
    }

    pub fn building_area(&self) -> f64 {
        self.buildings.iter().map(|b| b.footprint.area()).sum()
    }

    pub fn street_area(&self) -> f64 {
        self.extent.area() - self.building_area()
    }

    /// Axis directions along which a street continues for more than one
    /// street width from `p`.
    pub fn open_directions(&self, p: Point2) -> Vec<Point2> {
        let reach = self.grid.street_width_m + 1.0;
        AXIS_DIRECTIONS
            .iter()
            .copied()
            .filter(|&d| {
                let far = p.offset(d, reach);
                self.is_street(far) && self.is_street(p.offset(d, 0.5 * reach))
            })
            .collect()
    }

    /// True where both an x-axis and a y-axis street pass through `p`.
    pub fn is_intersection(&self, p: Point2) -> bool {
        let open = self.open_directions(p);
        open.iter().any(|d| d.x != 0.0) && open.iter().any(|d| d.y != 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_grid() -> GridConfig {
        GridConfig::from(&ScenarioConfig::default())
    }

    #[test]
    fn default_grid_has_fifteen_buildings_and_a_park() {
        let g = build_geometry(&default_grid()).unwrap();
        assert_eq!(g.buildings.len(), 15);
        assert!(g.park.is_some());
        assert_eq!(g.extent.width(), 543.0);
        assert_eq!(g.extent.height(), 543.0);
        for (i, a) in g.buildings.iter().enumerate() {
            for b in &g.buildings[i + 1..] {
                assert!(!a.footprint.overlaps(&b.footprint));
            }
        }
    }

    #[test]
    fn single_park_slot_leaves_everything_open() {
        let g = build_geometry(&GridConfig {
            rows: 1,
            cols: 1,
            block_size_m: 120.0,
            street_width_m: 21.0,
            park_slot: Some((0, 0)),
        })
        .unwrap();
        assert!(g.buildings.is_empty());
        assert_eq!(g.street_area(), g.extent.area());
    }

    #[test]
    fn areas_partition_the_extent() {
        let g = build_geometry(&default_grid()).unwrap();
        assert_eq!(g.street_area() + g.building_area(), g.extent.area());
        assert_eq!(g.building_area(), 15.0 * 120.0 * 120.0);
    }

    #[test]
    fn non_positive_dimensions_are_errors() {
        let mut c = default_grid();
        c.rows = 0;
        assert_eq!(
            build_geometry(&c),
            Err(ScenarioError::NonPositiveDimension("rows"))
        );
        let mut c = default_grid();
        c.block_size_m = 0.0;
        assert!(build_geometry(&c).is_err());
        let mut c = default_grid();
        c.park_slot = Some((9, 0));
        assert!(matches!(
            build_geometry(&c),
            Err(ScenarioError::SlotOutOfGrid { .. })
        ));
    }

    #[test]
    fn segment_clipping() {
        let r = Rect::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0));
        assert!(r.intersects_segment(Point2::new(-5.0, 5.0), Point2::new(15.0, 5.0)));
        assert!(!r.intersects_segment(Point2::new(-5.0, 11.0), Point2::new(15.0, 11.0)));
        assert!(!r.intersects_segment(Point2::new(-5.0, -5.0), Point2::new(-1.0, 20.0)));
        assert!(r.intersects_segment(Point2::new(5.0, 5.0), Point2::new(50.0, 50.0)));
    }

    #[test]
    fn street_directions() {
        let g = build_geometry(&default_grid()).unwrap();
        // middle of the horizontal street between rows 0 and 1
        let p = Point2::new(60.0, 130.5);
        let open = g.open_directions(p);
        assert!(open.iter().all(|d| d.y == 0.0));
        assert!(!open.is_empty());
        // crossing of the first vertical and horizontal streets
        assert!(g.is_intersection(Point2::new(130.5, 130.5)));
    }
}
