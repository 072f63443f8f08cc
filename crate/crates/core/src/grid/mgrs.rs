//! MGRS-subset grid: one grid zone, letter arithmetic on 100 km squares,
//! and easting/northing digit arithmetic at a fixed resolution.
//!
//! The subset is purely relative: metric coordinates are anchored at the
//! south-west corner of a reference 100 km square, and no geodetic (UTM /
//! latitude-longitude) conversion is performed. Crossing the grid zone
//! east or west is an extent error; rows are tracked within a +/-10 square
//! window around the reference square so that cell centers stay unambiguous
//! despite the 20-letter row cycle.

use crate::error::{Error, Result};

use super::{CellCenter, Point};

/// 100 km square column letters (I and O excluded), full 24-letter cycle.
const COL_LETTERS: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ";
/// 100 km square row letters (I and O excluded), 20-letter cycle.
const ROW_LETTERS: &[u8] = b"ABCDEFGHJKLMNPQRSTUV";
/// Latitude band letters usable in a grid zone designator.
const BAND_LETTERS: &[u8] = b"CDEFGHJKLMNPQRSTUVWX";

/// Width of a grid zone in 100 km square columns.
const BLOCK_COLS: i64 = 8;
/// Row-letter cycle length.
const ROW_CYCLE: i64 = 20;
/// Half-width of the supported row window around the reference square.
const ROW_WINDOW: i64 = 10;

/// Grid zone designator: UTM zone number (1..=60) plus latitude band letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gzd {
    pub zone: u8,
    pub band: char,
}

impl Gzd {
    pub fn new(zone: u8, band: char) -> Result<Self> {
        if !(1..=60).contains(&zone) {
            return Err(Error::Parse(format!("zone {zone} not in 1..=60")));
        }
        if !BAND_LETTERS.contains(&(band as u8)) {
            return Err(Error::Parse(format!("invalid latitude band {band:?}")));
        }
        Ok(Self { zone, band })
    }
}

impl std::fmt::Display for Gzd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.zone, self.band)
    }
}

/// Which row letter opens the cycle at the equator. Offset arithmetic is
/// independent of the scheme; it only matters when naming squares by
/// absolute row index ([`MgrsSpec::square_at`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowLettering {
    /// Odd zones open the row cycle at A, even zones at F.
    #[default]
    Aa,
    /// Legacy lettering: odd zones open at L, even zones at R.
    Al,
}

impl RowLettering {
    /// Row-letter index assigned to absolute row 0 (the equator) in `zone`.
    pub fn origin(self, zone: u8) -> i64 {
        let base = match self {
            RowLettering::Aa => 0,
            RowLettering::Al => 10,
        };
        let shift = if zone % 2 == 0 { 5 } else { 0 };
        (base + shift) % ROW_CYCLE
    }
}

/// MGRS cell id, e.g. `10QCG12345678`: GZD, 100 km square letters, and an
/// even run of digits split into easting then northing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MgrsId {
    pub gzd: Gzd,
    pub column: char,
    pub row: char,
    pub easting: u32,
    pub northing: u32,
    /// Digits per axis, 1..=5.
    pub digits: u8,
}

impl MgrsId {
    /// Cell edge in meters: 10^(5 - digits).
    pub fn precision_m(&self) -> f64 {
        10f64.powi(5 - self.digits as i32)
    }
}

impl std::fmt::Display for MgrsId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = self.digits as usize;
        write!(
            f,
            "{}{}{}{:0n$}{:0n$}",
            self.gzd, self.column, self.row, self.easting, self.northing
        )
    }
}

/// Column letter block for a zone (8 letters of the 24-letter cycle).
fn column_block(zone: u8) -> &'static [u8] {
    match zone % 3 {
        1 => &COL_LETTERS[0..8],
        2 => &COL_LETTERS[8..16],
        _ => &COL_LETTERS[16..24],
    }
}

fn column_index(zone: u8, letter: char) -> Result<i64> {
    column_block(zone)
        .iter()
        .position(|&c| c == letter as u8)
        .map(|i| i as i64)
        .ok_or_else(|| {
            Error::Parse(format!(
                "column letter {letter:?} not valid for zone {zone} (expected one of {})",
                std::str::from_utf8(column_block(zone)).unwrap()
            ))
        })
}

fn row_index(letter: char) -> Result<i64> {
    ROW_LETTERS
        .iter()
        .position(|&c| c == letter as u8)
        .map(|i| i as i64)
        .ok_or_else(|| Error::Parse(format!("invalid row letter {letter:?}")))
}

/// Map a residue mod 20 to the signed representative in [-10, 10).
fn signed_row_residue(delta: i64) -> i64 {
    let r = delta.rem_euclid(ROW_CYCLE);
    if r >= ROW_WINDOW {
        r - ROW_CYCLE
    } else {
        r
    }
}

/// MGRS-subset grid spec: a fixed GZD and reference 100 km square, with a
/// resolution given by the digit count. Metric coordinates are measured in
/// meters from the south-west corner of the reference square.
#[derive(Debug, Clone, PartialEq)]
pub struct MgrsSpec {
    pub gzd: Gzd,
    pub ref_column: char,
    pub ref_row: char,
    pub digits: u8,
    pub lettering: RowLettering,
}

impl MgrsSpec {
    pub fn new(gzd: Gzd, ref_column: char, ref_row: char, digits: u8) -> Result<Self> {
        Self::with_lettering(gzd, ref_column, ref_row, digits, RowLettering::default())
    }

    pub fn with_lettering(
        gzd: Gzd,
        ref_column: char,
        ref_row: char,
        digits: u8,
        lettering: RowLettering,
    ) -> Result<Self> {
        if !(1..=5).contains(&digits) {
            return Err(Error::Config(format!("digits {digits} not in 1..=5")));
        }
        column_index(gzd.zone, ref_column)?;
        row_index(ref_row)?;
        Ok(Self {
            gzd,
            ref_column,
            ref_row,
            digits,
            lettering,
        })
    }

    /// Square letters for a column index within the zone block and an
    /// absolute row index counted from the equator cycle origin.
    pub fn square_at(
        zone: u8,
        col_idx: u8,
        abs_row: i64,
        lettering: RowLettering,
    ) -> Result<(char, char)> {
        if col_idx as i64 >= BLOCK_COLS {
            return Err(Error::Extent(format!(
                "column index {col_idx} outside zone block"
            )));
        }
        let col = column_block(zone)[col_idx as usize] as char;
        let row_idx = (lettering.origin(zone) + abs_row).rem_euclid(ROW_CYCLE);
        let row = ROW_LETTERS[row_idx as usize] as char;
        Ok((col, row))
    }

    /// Cell edge in meters.
    pub fn cell_size(&self) -> f64 {
        10f64.powi(5 - self.digits as i32)
    }

    /// Cells per 100 km square along one axis.
    fn cells_per_square(&self) -> i64 {
        10i64.pow(self.digits as u32)
    }

    fn check_id(&self, id: &MgrsId) -> Result<()> {
        if id.gzd != self.gzd {
            return Err(Error::SpecMismatch(format!(
                "id {id} belongs to GZD {}, spec uses {}",
                id.gzd, self.gzd
            )));
        }
        if id.digits != self.digits {
            return Err(Error::SpecMismatch(format!(
                "id {id} has {} digits, spec uses {}",
                id.digits, self.digits
            )));
        }
        Ok(())
    }

    /// Cell coordinates of `id` relative to the reference square SW corner.
    pub(crate) fn cell_coords(&self, id: &MgrsId) -> Result<(i64, i64)> {
        self.check_id(id)?;
        let cps = self.cells_per_square();
        let col_delta = column_index(self.gzd.zone, id.column)?
            - column_index(self.gzd.zone, self.ref_column)?;
        let row_delta = signed_row_residue(row_index(id.row)? - row_index(self.ref_row)?);
        if id.easting as i64 >= cps || id.northing as i64 >= cps {
            return Err(Error::Parse(format!("digits of {id} exceed resolution")));
        }
        Ok((
            col_delta * cps + id.easting as i64,
            row_delta * cps + id.northing as i64,
        ))
    }

    /// Inverse of [`cell_coords`]: build the id for relative cell coords.
    pub(crate) fn id_at(&self, ce: i64, cn: i64) -> Result<MgrsId> {
        let cps = self.cells_per_square();
        let abs_col_cell = column_index(self.gzd.zone, self.ref_column)? * cps + ce;
        if abs_col_cell < 0 || abs_col_cell >= BLOCK_COLS * cps {
            return Err(Error::Extent(format!(
                "easting offset leaves grid zone {}",
                self.gzd
            )));
        }
        let row_steps = cn.div_euclid(cps);
        if !(-ROW_WINDOW..ROW_WINDOW).contains(&row_steps) {
            return Err(Error::Extent(format!(
                "northing offset leaves the supported row window of {}",
                self.gzd
            )));
        }
        let col = column_block(self.gzd.zone)[(abs_col_cell / cps) as usize] as char;
        let row_idx = (row_index(self.ref_row)? + row_steps).rem_euclid(ROW_CYCLE);
        let row = ROW_LETTERS[row_idx as usize] as char;
        Ok(MgrsId {
            gzd: self.gzd,
            column: col,
            row,
            easting: (abs_col_cell % cps) as u32,
            northing: cn.rem_euclid(cps) as u32,
            digits: self.digits,
        })
    }

    pub(crate) fn id_of(&self, p: Point) -> Result<MgrsId> {
        let d = self.cell_size();
        let ce = (p[0] / d).floor() as i64;
        let cn = (p[1] / d).floor() as i64;
        self.id_at(ce, cn)
    }

    pub(crate) fn center_of(&self, id: &MgrsId) -> Result<CellCenter> {
        let (ce, cn) = self.cell_coords(id)?;
        let d = self.cell_size();
        Ok(CellCenter([(ce as f64 + 0.5) * d, (cn as f64 + 0.5) * d]))
    }

    pub(crate) fn offset(&self, id: &MgrsId, d_h: i64, d_v: i64) -> Result<MgrsId> {
        let (ce, cn) = self.cell_coords(id)?;
        self.id_at(ce + d_h, cn + d_v)
    }

    pub(crate) fn offset_bounds(&self, id: &MgrsId) -> Result<((i64, i64), (i64, i64))> {
        let (ce, cn) = self.cell_coords(id)?;
        let cps = self.cells_per_square();
        let ref_col = column_index(self.gzd.zone, self.ref_column)?;
        let min_ce = -ref_col * cps;
        let max_ce = (BLOCK_COLS - ref_col) * cps - 1;
        let min_cn = -ROW_WINDOW * cps;
        let max_cn = ROW_WINDOW * cps - 1;
        Ok(((min_ce - ce, max_ce - ce), (min_cn - cn, max_cn - cn)))
    }
}

/// Parse an MGRS id of the form GZD + two square letters + 2n digits.
pub fn parse_mgrs(text: &str) -> Result<MgrsId> {
    let s = text.trim().to_ascii_uppercase();
    let bytes = s.as_bytes();
    let digit_len = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
    if digit_len == 0 || digit_len > 2 {
        return Err(Error::Parse(format!("malformed GZD in {text:?}")));
    }
    let zone: u8 = s[..digit_len]
        .parse()
        .map_err(|_| Error::Parse(format!("malformed GZD in {text:?}")))?;
    let rest = &bytes[digit_len..];
    if rest.len() < 3 {
        return Err(Error::Parse(format!("truncated MGRS id {text:?}")));
    }
    let gzd = Gzd::new(zone, rest[0] as char)?;
    let column = rest[1] as char;
    let row = rest[2] as char;
    column_index(zone, column)?;
    row_index(row)?;

    let digits = &rest[3..];
    if digits.is_empty() || digits.iter().any(|b| !b.is_ascii_digit()) {
        return Err(Error::Parse(format!("malformed digit block in {text:?}")));
    }
    if digits.len() % 2 != 0 {
        return Err(Error::Parse(format!(
            "odd digit count {} in {text:?}",
            digits.len()
        )));
    }
    let n = digits.len() / 2;
    if n > 5 {
        return Err(Error::Parse(format!(
            "more than 10 digits in {text:?}"
        )));
    }
    let parse_u32 = |b: &[u8]| -> u32 {
        std::str::from_utf8(b).unwrap().parse().unwrap()
    };
    Ok(MgrsId {
        gzd,
        column,
        row,
        easting: parse_u32(&digits[..n]),
        northing: parse_u32(&digits[n..]),
        digits: n as u8,
    })
}
