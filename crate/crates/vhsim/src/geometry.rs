//! Discretized spatial domain: rasterized mask over a uniform square grid.
//!
//! The domain is described either by closed polygon rings (cell membership
//! decided by a point-in-polygon test at each cell center, ties on edges
//! counted as inside) or by an explicit 0/1 ASCII mask grid. Cells are
//! uniform squares; the boundary is the set of masked-in cells with at
//! least one masked-out (or off-grid) 4-neighbor.

use crate::error::{Error, Result};
use crate::params::ParamField;

/// Mask input accepted by [`build_domain`].
#[derive(Debug, Clone)]
pub enum MaskSpec {
    /// Closed rings of (x, y) vertices in physical units. Membership uses
    /// the even-odd rule over all rings, so additional rings cut holes.
    Polygons(Vec<Vec<[f64; 2]>>),
    /// Explicit 0/1 grid, row-major with the first row at the origin
    /// (lowest y). The header fixes its own cell size and origin.
    Ascii(AsciiMask),
    /// Axis-aligned rectangle anchored at the origin.
    Rect { width: f64, height: f64 },
}

/// Parsed ASCII mask grid. See [`AsciiMask::parse`] for the format.
#[derive(Debug, Clone)]
pub struct AsciiMask {
    pub nrows: usize,
    pub ncols: usize,
    pub cell_size: f64,
    pub origin: [f64; 2],
    /// Row-major, `mask[row * ncols + col]`, row 0 at the origin.
    pub mask: Vec<bool>,
}

impl AsciiMask {
    /// Parse the documented ASCII mask format:
    ///
    /// ```text
    /// nrows 3
    /// ncols 4
    /// cell_size 0.5
    /// origin 0.0 0.0
    /// 0110
    /// 1111
    /// 0110
    /// ```
    ///
    /// Data rows are row-major starting at the origin row (lowest y);
    /// `1` marks a cell inside the domain.
    pub fn parse(text: &str) -> Result<AsciiMask> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidGeometry(format!("missing header line '{key}'")))?;
            let mut parts = line.split_whitespace();
            let k = parts.next().unwrap_or("");
            if k != key {
                return Err(Error::InvalidGeometry(format!(
                    "expected header '{key}', found '{k}'"
                )));
            }
            Ok(parts.map(str::to_owned).collect())
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidGeometry(format!("bad number '{s}' in mask header")))
        };
        let nrows: usize = header("nrows")?
            .first()
            .ok_or_else(|| Error::InvalidGeometry("nrows value missing".into()))?
            .parse()
            .map_err(|_| Error::InvalidGeometry("bad nrows".into()))?;
        let ncols: usize = header("ncols")?
            .first()
            .ok_or_else(|| Error::InvalidGeometry("ncols value missing".into()))?
            .parse()
            .map_err(|_| Error::InvalidGeometry("bad ncols".into()))?;
        let cell_size = parse_f(
            header("cell_size")?
                .first()
                .ok_or_else(|| Error::InvalidGeometry("cell_size value missing".into()))?,
        )?;
        let origin_vals = header("origin")?;
        if origin_vals.len() != 2 {
            return Err(Error::InvalidGeometry("origin needs two values".into()));
        }
        let origin = [parse_f(&origin_vals[0])?, parse_f(&origin_vals[1])?];

        let mut mask = vec![false; nrows * ncols];
        for row in 0..nrows {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidGeometry(format!("missing mask row {row}")))?;
            let line = line.trim();
            if line.len() != ncols {
                return Err(Error::InvalidGeometry(format!(
                    "mask row {row} has {} columns, expected {ncols}",
                    line.len()
                )));
            }
            for (col, ch) in line.chars().enumerate() {
                mask[row * ncols + col] = match ch {
                    '1' => true,
                    '0' => false,
                    _ => {
                        return Err(Error::InvalidGeometry(format!(
                            "mask row {row} contains '{ch}', expected 0/1"
                        )))
                    }
                };
            }
        }
        Ok(AsciiMask {
            nrows,
            ncols,
            cell_size,
            origin,
            mask,
        })
    }
}

/// Masked uniform grid over the spatial domain.
///
/// Masked-in cells carry compact indices `0..n_cells()` in row-major grid
/// order; all per-cell fields in the crate are indexed the same way.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpatialDomain {
    cell_size: f64,
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    mask: Vec<bool>,
    /// Grid (col, row) of each masked-in cell.
    cells: Vec<[u32; 2]>,
    /// Grid position -> compact cell index.
    grid_to_cell: Vec<u32>,
    /// Compact neighbor indices (west, east, south, north); `u32::MAX` = none.
    nbrs: Vec<[u32; 4]>,
    boundary: Vec<bool>,
}

const NO_NBR: u32 = u32::MAX;

/// Lebesgue and diffusion-weighted measures of the domain.
/// The weighted measure integrates `1/D(x)` over the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainMeasures {
    pub lebesgue: f64,
    pub mu: f64,
}

impl SpatialDomain {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Physical bounding box `[min_x, min_y, max_x, max_y]` of the grid.
    pub fn bounding_box(&self) -> [f64; 4] {
        [
            self.origin[0],
            self.origin[1],
            self.origin[0] + self.nx as f64 * self.cell_size,
            self.origin[1] + self.ny as f64 * self.cell_size,
        ]
    }

    /// Row-major grid mask (true = inside the domain).
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Grid (col, row) coordinates of masked-in cell `i`.
    pub fn cell_grid(&self, i: usize) -> (u32, u32) {
        let [c, r] = self.cells[i];
        (c, r)
    }

    /// Physical center of masked-in cell `i`.
    pub fn cell_center(&self, i: usize) -> [f64; 2] {
        let [c, r] = self.cells[i];
        [
            self.origin[0] + (c as f64 + 0.5) * self.cell_size,
            self.origin[1] + (r as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Compact index of the masked-in cell containing `(x, y)`, if any.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<usize> {
        let cx = ((x - self.origin[0]) / self.cell_size).floor();
        let cy = ((y - self.origin[1]) / self.cell_size).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.nx as f64 || cy >= self.ny as f64 {
            return None;
        }
        let g = cy as usize * self.nx + cx as usize;
        if self.mask[g] {
            Some(self.grid_to_cell[g] as usize)
        } else {
            None
        }
    }

    /// Compact neighbor indices of cell `i` (west, east, south, north).
    pub fn neighbors(&self, i: usize) -> [Option<usize>; 4] {
        self.nbrs[i].map(|n| (n != NO_NBR).then_some(n as usize))
    }

    /// True when cell `i` touches the domain boundary.
    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    /// Compact indices of cells with at least one masked-out neighbor.
    pub fn boundary_cells(&self) -> Vec<usize> {
        (0..self.n_cells()).filter(|&i| self.boundary[i]).collect()
    }

    /// Compact indices of cells fully surrounded by the domain.
    pub fn interior_cells(&self) -> Vec<usize> {
        (0..self.n_cells()).filter(|&i| !self.boundary[i]).collect()
    }

    /// Discrete integral of a per-cell field over the domain.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        field.iter().sum::<f64>() * self.cell_area()
    }
}

/// Rasterize a mask specification into a [`SpatialDomain`].
///
/// For polygon input, a cell belongs to the domain when its center passes
/// the even-odd test; centers exactly on an edge count as inside. The
/// result is deterministic for identical inputs. Self-intersecting rings
/// and empty masks are rejected.
pub fn build_domain(spec: &MaskSpec, cell_size: f64) -> Result<SpatialDomain> {
    if !(cell_size > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "cell_size must be positive, got {cell_size}"
        )));
    }
    let (nx, ny, origin, mask) = match spec {
        MaskSpec::Rect { width, height } => {
            if !(*width > 0.0 && *height > 0.0) {
                return Err(Error::InvalidGeometry("rectangle must have positive size".into()));
            }
            let ring = vec![
                [0.0, 0.0],
                [*width, 0.0],
                [*width, *height],
                [0.0, *height],
            ];
            rasterize_polygons(&[ring], cell_size)?
        }
        MaskSpec::Polygons(rings) => rasterize_polygons(rings, cell_size)?,
        MaskSpec::Ascii(grid) => {
            if (grid.cell_size - cell_size).abs() > 1e-12 * cell_size.max(grid.cell_size) {
                return Err(Error::InvalidGeometry(format!(
                    "cell_size {cell_size} does not match ASCII header {}",
                    grid.cell_size
                )));
            }
            if grid.mask.len() != grid.nrows * grid.ncols {
                return Err(Error::InvalidGeometry("ASCII mask length mismatch".into()));
            }
            (grid.ncols, grid.nrows, grid.origin, grid.mask.clone())
        }
    };

    let mut cells = Vec::new();
    let mut grid_to_cell = vec![NO_NBR; nx * ny];
    for r in 0..ny {
        for c in 0..nx {
            let g = r * nx + c;
            if mask[g] {
                grid_to_cell[g] = cells.len() as u32;
                cells.push([c as u32, r as u32]);
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyDomain);
    }

    let lookup = |c: i64, r: i64| -> u32 {
        if c < 0 || r < 0 || c >= nx as i64 || r >= ny as i64 {
            return NO_NBR;
        }
        let g = r as usize * nx + c as usize;
        if mask[g] {
            grid_to_cell[g]
        } else {
            NO_NBR
        }
    };
    let mut nbrs = Vec::with_capacity(cells.len());
    let mut boundary = Vec::with_capacity(cells.len());
    for &[c, r] in &cells {
        let (c, r) = (c as i64, r as i64);
        let n = [
            lookup(c - 1, r),
            lookup(c + 1, r),
            lookup(c, r - 1),
            lookup(c, r + 1),
        ];
        boundary.push(n.iter().any(|&x| x == NO_NBR));
        nbrs.push(n);
    }

    Ok(SpatialDomain {
        cell_size,
        nx,
        ny,
        origin,
        mask,
        cells,
        grid_to_cell,
        nbrs,
        boundary,
    })
}

/// Measures of the domain under Lebesgue and diffusion-weighted volume.
///
/// `mu` sums `cell_area / D(cell)`; for constant `D` this equals
/// `lebesgue / D` exactly up to floating rounding.
pub fn domain_measures(domain: &SpatialDomain, d: &ParamField) -> Result<DomainMeasures> {
    let n = domain.n_cells();
    d.check_len(n)?;
    let area = domain.cell_area();
    let mut mu = 0.0;
    for i in 0..n {
        let di = d.get(i);
        if !(di > 0.0) {
            return Err(Error::NonpositiveDiffusion { cell: i });
        }
        mu += area / di;
    }
    Ok(DomainMeasures {
        lebesgue: n as f64 * area,
        mu,
    })
}

fn rasterize_polygons(
    rings: &[Vec<[f64; 2]>],
    cell_size: f64,
) -> Result<(usize, usize, [f64; 2], Vec<bool>)> {
    if rings.is_empty() || rings.iter().all(|r| r.is_empty()) {
        return Err(Error::EmptyDomain);
    }
    for ring in rings {
        validate_ring(ring)?;
    }
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for ring in rings {
        for p in ring {
            for k in 0..2 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
    }
    let extent = |lo: f64, hi: f64| ((hi - lo) / cell_size - 1e-9).ceil().max(1.0) as usize;
    let nx = extent(min[0], max[0]);
    let ny = extent(min[1], max[1]);
    let origin = [min[0], min[1]];
    let mut mask = vec![false; nx * ny];
    for r in 0..ny {
        for c in 0..nx {
            let p = [
                origin[0] + (c as f64 + 0.5) * cell_size,
                origin[1] + (r as f64 + 0.5) * cell_size,
            ];
            mask[r * nx + c] = point_in_polygons(p, rings);
        }
    }
    Ok((nx, ny, origin, mask))
}

fn validate_ring(ring: &[[f64; 2]]) -> Result<()> {
    if ring.len() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "ring needs at least 3 vertices, got {}",
            ring.len()
        )));
    }
    if ring.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidGeometry("ring has non-finite vertex".into()));
    }
    let n = ring.len();
    let edge = |i: usize| (ring[i], ring[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 1)..n {
            // skip adjacent edges (shared endpoint), including the wrap pair
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            if segments_properly_intersect(a, b, c, d) {
                return Err(Error::InvalidGeometry(format!(
                    "ring is self-intersecting (edges {i} and {j})"
                )));
            }
        }
    }
    Ok(())
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_properly_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    if orient(a, b, p) != 0.0 {
        return false;
    }
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Even-odd membership over all rings; points on any edge are inside.
pub fn point_in_polygons(p: [f64; 2], rings: &[Vec<[f64; 2]>]) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            if on_segment(p, a, b) {
                return true;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x_int = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x_int {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Bundled study region: a simplified Mediterranean-coast arc band,
/// roughly 960 km long and 180 km wide, in km units. At `cell_size`
/// 17 km the rasterized domain has about 600 cells.
pub fn mediterranean_arc() -> Vec<Vec<[f64; 2]>> {
    let center = [300.0, 800.0];
    let (r_outer, r_inner) = (780.0, 600.0);
    let (theta0, theta1) = (230.0_f64.to_radians(), 310.0_f64.to_radians());
    let steps = 32;
    let mut ring = Vec::with_capacity(2 * (steps + 1));
    for k in 0..=steps {
        let t = theta0 + (theta1 - theta0) * k as f64 / steps as f64;
        ring.push([center[0] + r_outer * t.cos(), center[1] + r_outer * t.sin()]);
    }
    for k in (0..=steps).rev() {
        let t = theta0 + (theta1 - theta0) * k as f64 / steps as f64;
        ring.push([center[0] + r_inner * t.cos(), center[1] + r_inner * t.sin()]);
    }
    vec![ring]
}

/// Introduction point used with [`mediterranean_arc`]: near the eastern
/// end of the band.
pub const MEDITERRANEAN_ARC_INTRO: [f64; 2] = [700.0, 230.0];

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> MaskSpec {
        MaskSpec::Rect {
            width: 1.0,
            height: 1.0,
        }
    }

    #[test]
    fn unit_square_cell_counts() {
        let dom = build_domain(&unit_square(), 0.1).unwrap();
        assert_eq!(dom.n_cells(), 100);
        assert_eq!(dom.boundary_cells().len(), 36); // 4*10 - 4
        assert_eq!(dom.interior_cells().len(), 64);
    }

    #[test]
    fn l_shape_three_cells() {
        // covers all quadrants except the north-east one
        let ring = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [0.5, 0.5],
            [0.5, 1.0],
            [0.0, 1.0],
        ];
        let dom = build_domain(&MaskSpec::Polygons(vec![ring]), 0.5).unwrap();
        assert_eq!(dom.n_cells(), 3);
    }

    #[test]
    fn partition_covers_masked_cells() {
        let dom = build_domain(&MaskSpec::Polygons(mediterranean_arc()), 34.0).unwrap();
        let b = dom.boundary_cells().len();
        let i = dom.interior_cells().len();
        assert_eq!(b + i, dom.n_cells());
        for c in dom.boundary_cells() {
            assert!(dom.is_boundary(c));
        }
    }

    #[test]
    fn empty_mask_is_error() {
        let far_triangle = vec![[10.0, 10.0], [10.2, 10.0], [10.1, 10.15]];
        // triangle so thin no cell center falls inside at this resolution
        let err = build_domain(&MaskSpec::Polygons(vec![far_triangle]), 1.0).unwrap_err();
        assert!(matches!(err, Error::EmptyDomain), "{err}");
    }

    #[test]
    fn self_intersecting_ring_is_error() {
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let err = build_domain(&MaskSpec::Polygons(vec![bowtie]), 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidGeometry(_)), "{err}");
    }

    #[test]
    fn measures_constant_d() {
        let dom = build_domain(&unit_square(), 0.1).unwrap();
        let m1 = domain_measures(&dom, &ParamField::Scalar(1.0)).unwrap();
        assert!((m1.lebesgue - 1.0).abs() < 1e-12);
        assert!((m1.mu - 1.0).abs() < 1e-12);
        let m2 = domain_measures(&dom, &ParamField::Scalar(2.0)).unwrap();
        assert!((m2.lebesgue - 1.0).abs() < 1e-12);
        assert!((m2.mu - 0.5).abs() < 1e-12);
    }

    #[test]
    fn measures_reject_nonpositive_d() {
        let dom = build_domain(&unit_square(), 0.5).unwrap();
        let err = domain_measures(&dom, &ParamField::Scalar(0.0)).unwrap_err();
        assert!(matches!(err, Error::NonpositiveDiffusion { .. }));
    }

    #[test]
    fn measure_mu_matches_analytic_integral() {
        // D(x) = 1 + x0 on the unit square: integral of 1/(1+x0) is ln 2
        let dom = build_domain(&unit_square(), 0.01).unwrap();
        let d: Vec<f64> = (0..dom.n_cells())
            .map(|i| 1.0 + dom.cell_center(i)[0])
            .collect();
        let m = domain_measures(&dom, &ParamField::PerCell(d)).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!(
            (m.mu - ln2).abs() < 1e-4,
            "mu = {}, ln2 = {ln2} (expected O(h^2) agreement)",
            m.mu
        );
    }

    #[test]
    fn mu_scales_inversely_with_d() {
        let dom = build_domain(&MaskSpec::Polygons(mediterranean_arc()), 34.0).unwrap();
        let d: Vec<f64> = (0..dom.n_cells())
            .map(|i| 5.0 + (i % 7) as f64)
            .collect();
        let m1 = domain_measures(&dom, &ParamField::PerCell(d.clone())).unwrap();
        let scaled: Vec<f64> = d.iter().map(|x| 3.0 * x).collect();
        let m2 = domain_measures(&dom, &ParamField::PerCell(scaled)).unwrap();
        assert_eq!(m1.lebesgue, m2.lebesgue);
        assert!((m2.mu - m1.mu / 3.0).abs() <= 1e-15 * m1.mu);
    }

    #[test]
    fn ascii_round_trip() {
        let text = "nrows 3\nncols 4\ncell_size 0.5\norigin 1.0 2.0\n0110\n1111\n0110\n";
        let grid = AsciiMask::parse(text).unwrap();
        let dom = build_domain(&MaskSpec::Ascii(grid), 0.5).unwrap();
        assert_eq!(dom.n_cells(), 8);
        // origin row is row 0: cell centers at y = 2.25
        assert_eq!(dom.cell_at(1.75, 2.25), Some(0));
        assert_eq!(dom.cell_at(1.25, 2.25), None);
    }

    #[test]
    fn ascii_cell_size_mismatch_rejected() {
        let text = "nrows 1\nncols 1\ncell_size 0.5\norigin 0 0\n1\n";
        let grid = AsciiMask::parse(text).unwrap();
        assert!(build_domain(&MaskSpec::Ascii(grid), 0.25).is_err());
    }

    #[test]
    fn ties_on_edges_count_inside() {
        // cell centers on the right/top edges of a half-cell-aligned square
        let ring = vec![[0.0, 0.0], [0.25, 0.0], [0.25, 0.25], [0.0, 0.25]];
        let dom = build_domain(&MaskSpec::Polygons(vec![ring]), 0.5).unwrap();
        // single cell whose center (0.25, 0.25) is the polygon corner
        assert_eq!(dom.n_cells(), 1);
    }
}
