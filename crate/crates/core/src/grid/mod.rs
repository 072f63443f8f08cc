//! Grid coordinate abstraction: mapping between planar metric coordinates
//! and cell ids, and displacement arithmetic on ids.

mod mgrs;
mod planar;

pub use mgrs::{parse_mgrs, Gzd, MgrsId, MgrsSpec, RowLettering};
pub use planar::{PlanarId, PlanarSpec};

use crate::error::{Error, Result};

/// A 2D point in meters.
pub type Point = [f64; 2];

/// Euclidean distance between two points.
pub fn euclid(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Center of a grid cell, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCenter(pub Point);

impl CellCenter {
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn dist(&self, other: &CellCenter) -> f64 {
        euclid(self.0, other.0)
    }
}

/// Identifier of one grid cell. Equal ids denote the same cell at the same
/// resolution. The `Ord` impl provides the canonical order used for
/// deterministic tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GridId {
    Planar(PlanarId),
    Mgrs(MgrsId),
}

impl GridId {
    pub fn planar(col: i64, row: i64) -> Self {
        GridId::Planar(PlanarId::new(col, row))
    }
}

impl std::fmt::Display for GridId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridId::Planar(id) => id.fmt(f),
            GridId::Mgrs(id) => id.fmt(f),
        }
    }
}

impl std::str::FromStr for GridId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("c:") {
            planar::parse_planar(s).map(GridId::Planar)
        } else {
            parse_mgrs(s).map(GridId::Mgrs)
        }
    }
}

/// Grid system plus resolution; all codec operations go through a spec.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Planar(PlanarSpec),
    Mgrs(MgrsSpec),
}

impl GridSpec {
    /// Cell edge length D in meters.
    pub fn cell_size(&self) -> f64 {
        match self {
            GridSpec::Planar(s) => s.cell_size,
            GridSpec::Mgrs(s) => s.cell_size(),
        }
    }

    /// The unique cell containing `p`. Cells are half-open, so boundary
    /// points resolve to the cell with the larger index.
    pub fn id_of(&self, p: Point) -> Result<GridId> {
        match self {
            GridSpec::Planar(s) => s.id_of(p).map(GridId::Planar),
            GridSpec::Mgrs(s) => s.id_of(p).map(GridId::Mgrs),
        }
    }

    /// Center of the cell: its south-west corner plus (D/2, D/2).
    pub fn center_of(&self, id: &GridId) -> Result<CellCenter> {
        match (self, id) {
            (GridSpec::Planar(s), GridId::Planar(id)) => s.center_of(*id),
            (GridSpec::Mgrs(s), GridId::Mgrs(id)) => s.center_of(id),
            _ => Err(mismatch(id)),
        }
    }

    /// The cell `d_h` steps east and `d_v` steps north of `id`.
    pub fn offset_id(&self, id: &GridId, d_h: i64, d_v: i64) -> Result<GridId> {
        match (self, id) {
            (GridSpec::Planar(s), GridId::Planar(id)) => {
                s.offset(*id, d_h, d_v).map(GridId::Planar)
            }
            (GridSpec::Mgrs(s), GridId::Mgrs(id)) => s.offset(id, d_h, d_v).map(GridId::Mgrs),
            _ => Err(mismatch(id)),
        }
    }

    /// Inclusive offset bounds from `id` that stay in extent, `None` when
    /// the axis is unbounded.
    pub(crate) fn offset_bounds(
        &self,
        id: &GridId,
    ) -> Result<(Option<(i64, i64)>, Option<(i64, i64)>)> {
        match (self, id) {
            (GridSpec::Planar(s), GridId::Planar(id)) => {
                let (h, v) = s.offset_bounds(*id);
                Ok((h, v))
            }
            (GridSpec::Mgrs(s), GridId::Mgrs(id)) => {
                let (h, v) = s.offset_bounds(id)?;
                Ok((Some(h), Some(v)))
            }
            _ => Err(mismatch(id)),
        }
    }

    /// All in-extent cells whose centers fall inside the axis-aligned
    /// rectangle `[min, max]` (world coordinates), in canonical scan order.
    pub fn cells_in_rect(&self, min: Point, max: Point) -> Result<Vec<GridId>> {
        let d = self.cell_size();
        let origin = match self {
            GridSpec::Planar(s) => s.origin,
            GridSpec::Mgrs(_) => [0.0, 0.0],
        };
        let lo_cell = |v: f64, o: f64| ((v - o) / d - 0.5).ceil() as i64;
        let hi_cell = |v: f64, o: f64| ((v - o) / d - 0.5).floor() as i64;
        let mut out = Vec::new();
        for ce in lo_cell(min[0], origin[0])..=hi_cell(max[0], origin[0]) {
            for cn in lo_cell(min[1], origin[1])..=hi_cell(max[1], origin[1]) {
                let p = [
                    origin[0] + (ce as f64 + 0.5) * d,
                    origin[1] + (cn as f64 + 0.5) * d,
                ];
                if let Ok(id) = self.id_of(p) {
                    out.push(id);
                }
            }
        }
        Ok(out)
    }
}

fn mismatch(id: &GridId) -> Error {
    Error::SpecMismatch(format!("id {id} does not match the grid system of this spec"))
}

/// Leading textual components of an id, whole-component concatenation of
/// which reproduces the canonical serialization.
fn components(id: &GridId) -> Vec<String> {
    match id {
        GridId::Planar(p) => vec![format!("c:{},", p.col), format!("r:{}", p.row)],
        GridId::Mgrs(m) => {
            let n = m.digits as usize;
            vec![
                m.gzd.to_string(),
                format!("{}{}", m.column, m.row),
                format!("{:0n$}", m.easting),
                format!("{:0n$}", m.northing),
            ]
        }
    }
}

/// Strip the longest shared leading component run (GZD, square, digit
/// groups) from a set of ids. Returns the shared prefix and one suffix per
/// id; `prefix + suffix` reproduces each id's canonical text.
pub fn common_prefix_strip(ids: &[GridId]) -> Result<(String, Vec<String>)> {
    let first = ids
        .first()
        .ok_or_else(|| Error::Degenerate("empty id list".into()))?;
    let planar = matches!(first, GridId::Planar(_));
    let digits = match first {
        GridId::Mgrs(m) => Some(m.digits),
        GridId::Planar(_) => None,
    };
    for id in ids {
        match id {
            GridId::Planar(_) if planar => {}
            GridId::Mgrs(m) if !planar => {
                if Some(m.digits) != digits {
                    return Err(Error::SpecMismatch(
                        "ids have mixed resolutions".into(),
                    ));
                }
            }
            _ => return Err(Error::SpecMismatch("ids from mixed grid systems".into())),
        }
    }

    let parts: Vec<Vec<String>> = ids.iter().map(components).collect();
    let n_components = parts[0].len();
    let mut shared = n_components;
    for p in &parts[1..] {
        let k = parts[0]
            .iter()
            .zip(p.iter())
            .take_while(|(a, b)| a == b)
            .count();
        shared = shared.min(k);
    }
    let prefix = parts[0][..shared].concat();
    let suffixes = parts.iter().map(|p| p[shared..].concat()).collect();
    Ok((prefix, suffixes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar(d: f64) -> GridSpec {
        GridSpec::Planar(PlanarSpec::unbounded(d))
    }

    #[test]
    fn id_of_interior_and_boundary() {
        let g = planar(1.0);
        assert_eq!(g.id_of([0.5, 0.5]).unwrap(), GridId::planar(0, 0));
        // half-open cells: the boundary belongs to the larger index
        assert_eq!(g.id_of([1.0, 0.0]).unwrap(), GridId::planar(1, 0));
        let g2 = planar(2.0);
        assert_eq!(g2.id_of([5.3, 3.9]).unwrap(), GridId::planar(2, 1));
    }

    #[test]
    fn center_of_planar() {
        let g = planar(1.0);
        let c = g.center_of(&GridId::planar(0, 0)).unwrap();
        assert_eq!((c.x(), c.y()), (0.5, 0.5));
        let c = g.center_of(&GridId::planar(3, 7)).unwrap();
        assert_eq!((c.x(), c.y()), (3.5, 7.5));
        let g2 = planar(2.0);
        let c = g2.center_of(&GridId::planar(2, 1)).unwrap();
        assert_eq!((c.x(), c.y()), (5.0, 3.0));
    }

    #[test]
    fn offset_planar() {
        let g = planar(1.0);
        assert_eq!(
            g.offset_id(&GridId::planar(2, 3), 1, -1).unwrap(),
            GridId::planar(3, 2)
        );
        assert_eq!(
            g.offset_id(&GridId::planar(2, 3), 0, 0).unwrap(),
            GridId::planar(2, 3)
        );
    }

    #[test]
    fn offset_planar_extent() {
        let g = GridSpec::Planar(PlanarSpec::bounded(1.0, 4, 4));
        assert!(g.offset_id(&GridId::planar(3, 0), 1, 0).is_err());
        assert!(g.id_of([4.0, 0.0]).is_err());
        assert!(g.id_of([-0.1, 0.0]).is_err());
    }

    #[test]
    fn mgrs_offset_easting() {
        let spec = GridSpec::Mgrs(
            MgrsSpec::new(Gzd::new(10, 'Q').unwrap(), 'C', 'G', 4).unwrap(),
        );
        let id = GridId::Mgrs(parse_mgrs("10QCG12345678").unwrap());
        let moved = spec.offset_id(&id, 1, 0).unwrap();
        assert_eq!(moved.to_string(), "10QCG12355678");
    }

    #[test]
    fn mgrs_offset_carries_column_letter() {
        let spec = GridSpec::Mgrs(
            MgrsSpec::new(Gzd::new(10, 'Q').unwrap(), 'C', 'G', 4).unwrap(),
        );
        let id = GridId::Mgrs(parse_mgrs("10QCG99995678").unwrap());
        let moved = spec.offset_id(&id, 1, 0).unwrap();
        assert_eq!(moved.to_string(), "10QDG00005678");
        // moving back is the inverse
        assert_eq!(spec.offset_id(&moved, -1, 0).unwrap(), id);
    }

    #[test]
    fn mgrs_offset_skips_i_and_o_in_rows() {
        let spec = GridSpec::Mgrs(
            MgrsSpec::new(Gzd::new(10, 'Q').unwrap(), 'C', 'H', 4).unwrap(),
        );
        // H row + one full square north lands on J (I is skipped)
        let id = GridId::Mgrs(parse_mgrs("10QCH00009999").unwrap());
        let moved = spec.offset_id(&id, 0, 1).unwrap();
        assert_eq!(moved.to_string(), "10QCJ00000000");
    }

    #[test]
    fn mgrs_offset_rejects_zone_crossing() {
        // H is the last column of zone 10's block
        let spec = GridSpec::Mgrs(
            MgrsSpec::new(Gzd::new(10, 'Q').unwrap(), 'H', 'G', 4).unwrap(),
        );
        let id = GridId::Mgrs(parse_mgrs("10QHG99990000").unwrap());
        assert!(spec.offset_id(&id, 1, 0).is_err());
    }

    #[test]
    fn parse_examples() {
        let id = parse_mgrs("10QCG12345678").unwrap();
        assert_eq!(id.gzd.to_string(), "10Q");
        assert_eq!((id.column, id.row), ('C', 'G'));
        assert_eq!((id.easting, id.northing), (1234, 5678));
        assert_eq!(id.precision_m(), 10.0);

        let id = parse_mgrs("10QCG1234567890").unwrap();
        assert_eq!((id.easting, id.northing), (12345, 67890));
        assert_eq!(id.precision_m(), 1.0);

        assert!(parse_mgrs("10QCG123").is_err()); // odd digits
        assert!(parse_mgrs("10QIO1234").is_err()); // I/O letters
        assert!(parse_mgrs("99QCG1234").is_err()); // bad zone
        assert!(parse_mgrs("QCG1234").is_err()); // missing zone digits
    }

    #[test]
    fn prefix_strip_examples() {
        let a = GridId::Mgrs(parse_mgrs("10QCG12345678").unwrap());
        let b = GridId::Mgrs(parse_mgrs("10QCG12355678").unwrap());
        let (prefix, suffixes) = common_prefix_strip(&[a, b]).unwrap();
        assert_eq!(prefix, "10QCG");
        assert_eq!(suffixes, vec!["12345678".to_string(), "12355678".to_string()]);

        let (prefix, suffixes) = common_prefix_strip(&[a]).unwrap();
        assert_eq!(prefix, "10QCG12345678");
        assert_eq!(suffixes, vec![String::new()]);

        let c = GridId::Mgrs(parse_mgrs("13QCG12345678").unwrap());
        let (prefix, _) = common_prefix_strip(&[a, c]).unwrap();
        assert_eq!(prefix, "");

        assert!(common_prefix_strip(&[a, GridId::planar(0, 0)]).is_err());
    }

    #[test]
    fn prefix_strip_shares_easting_group() {
        let a = GridId::Mgrs(parse_mgrs("10QCG12345678").unwrap());
        let b = GridId::Mgrs(parse_mgrs("10QCG12345999").unwrap());
        let (prefix, suffixes) = common_prefix_strip(&[a, b]).unwrap();
        assert_eq!(prefix, "10QCG1234");
        assert_eq!(suffixes, vec!["5678".to_string(), "5999".to_string()]);
    }

    #[test]
    fn square_at_lettering_schemes() {
        // odd zone, AA scheme: equator row is A
        let (c, r) = MgrsSpec::square_at(11, 0, 0, RowLettering::Aa).unwrap();
        assert_eq!((c, r), ('J', 'A'));
        // even zone shifts the row cycle by five letters
        let (_, r) = MgrsSpec::square_at(10, 0, 0, RowLettering::Aa).unwrap();
        assert_eq!(r, 'F');
        let (_, r) = MgrsSpec::square_at(11, 0, 0, RowLettering::Al).unwrap();
        assert_eq!(r, 'L');
        let (_, r) = MgrsSpec::square_at(10, 0, 0, RowLettering::Al).unwrap();
        assert_eq!(r, 'R');
    }
}
