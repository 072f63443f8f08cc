//! Planar square-lattice grid.

use crate::error::{Error, Result};

use super::{CellCenter, Point};

/// Cell of a planar lattice: column index (east) and row index (north).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanarId {
    pub col: i64,
    pub row: i64,
}

impl PlanarId {
    pub fn new(col: i64, row: i64) -> Self {
        Self { col, row }
    }
}

impl std::fmt::Display for PlanarId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "c:{},r:{}", self.col, self.row)
    }
}

/// Planar lattice: square cells of edge `cell_size`, cell (0,0) having its
/// south-west corner at `origin`. Cells are half-open `[k*D, (k+1)*D)` on
/// both axes. An optional extent bounds valid cells to
/// `[0, cols) x [0, rows)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSpec {
    pub cell_size: f64,
    pub origin: Point,
    pub extent: Option<(i64, i64)>,
}

impl PlanarSpec {
    /// Unbounded lattice with the origin at (0, 0).
    pub fn unbounded(cell_size: f64) -> Self {
        Self {
            cell_size,
            origin: [0.0, 0.0],
            extent: None,
        }
    }

    /// Lattice of `cols x rows` cells with the origin at (0, 0).
    pub fn bounded(cell_size: f64, cols: i64, rows: i64) -> Self {
        Self {
            cell_size,
            origin: [0.0, 0.0],
            extent: Some((cols, rows)),
        }
    }

    pub(crate) fn in_extent(&self, col: i64, row: i64) -> bool {
        match self.extent {
            None => true,
            Some((cols, rows)) => col >= 0 && col < cols && row >= 0 && row < rows,
        }
    }

    pub(crate) fn id_of(&self, p: Point) -> Result<PlanarId> {
        let col = ((p[0] - self.origin[0]) / self.cell_size).floor() as i64;
        let row = ((p[1] - self.origin[1]) / self.cell_size).floor() as i64;
        if !self.in_extent(col, row) {
            return Err(Error::Extent(format!(
                "point ({}, {}) maps to cell ({col}, {row}) outside extent",
                p[0], p[1]
            )));
        }
        Ok(PlanarId { col, row })
    }

    pub(crate) fn center_of(&self, id: PlanarId) -> Result<CellCenter> {
        if !self.in_extent(id.col, id.row) {
            return Err(Error::Parse(format!("cell {id} outside extent")));
        }
        let d = self.cell_size;
        Ok(CellCenter([
            self.origin[0] + (id.col as f64 + 0.5) * d,
            self.origin[1] + (id.row as f64 + 0.5) * d,
        ]))
    }

    pub(crate) fn offset(&self, id: PlanarId, d_h: i64, d_v: i64) -> Result<PlanarId> {
        let col = id.col.checked_add(d_h);
        let row = id.row.checked_add(d_v);
        match (col, row) {
            (Some(col), Some(row)) if self.in_extent(col, row) => Ok(PlanarId { col, row }),
            _ => Err(Error::Extent(format!(
                "offset ({d_h}, {d_v}) from {id} leaves extent"
            ))),
        }
    }

    /// Valid offset range from `id` along each axis, unbounded as `None`.
    pub(crate) fn offset_bounds(&self, id: PlanarId) -> (Option<(i64, i64)>, Option<(i64, i64)>) {
        match self.extent {
            None => (None, None),
            Some((cols, rows)) => (
                Some((-id.col, cols - 1 - id.col)),
                Some((-id.row, rows - 1 - id.row)),
            ),
        }
    }
}

pub(crate) fn parse_planar(text: &str) -> Result<PlanarId> {
    let err = || Error::Parse(format!("malformed planar id {text:?}"));
    let rest = text.strip_prefix("c:").ok_or_else(err)?;
    let (col, rest) = rest.split_once(",r:").ok_or_else(err)?;
    let col = col.parse::<i64>().map_err(|_| err())?;
    let row = rest.parse::<i64>().map_err(|_| err())?;
    Ok(PlanarId { col, row })
}
