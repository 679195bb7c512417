//! Directional binary codes over the LL subband.
//!
//! The LL band is tiled into square cells. For every cell and each of the
//! four directions the first-order derivative is thresholded at the nine
//! positions of the 3x3 neighbourhood around the cell centre, giving a 9-bit
//! code. The four codes of a cell are averaged and scaled by `1/511`, so a
//! 50x50 band yields 100 coefficients in `[0, 1]`.
//!
//! Rows grow downward and columns rightward. With `I` the cell values and
//! `d` the derivative distance:
//!
//! ```text
//!   0 deg:  I(i,j) - I(i,   j-d)
//!  45 deg:  I(i,j) - I(i-d, j+d)
//!  90 deg:  I(i,j) - I(i-d, j  )
//! 135 deg:  I(i,j) - I(i-d, j-d)
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Largest decimal value of a 9-bit code; features are divided by it.
pub const FEATURE_SCALE: f64 = 511.0;
pub const CODE_BITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    pub fn degrees(self) -> u32 {
        match self {
            Direction::Deg0 => 0,
            Direction::Deg45 => 45,
            Direction::Deg90 => 90,
            Direction::Deg135 => 135,
        }
    }

    /// (row, col) step from a pixel to the neighbour it is compared with.
    pub fn neighbor_offset(self, d: usize) -> (isize, isize) {
        let d = d as isize;
        match self {
            Direction::Deg0 => (0, -d),
            Direction::Deg45 => (-d, d),
            Direction::Deg90 => (-d, 0),
            Direction::Deg135 => (-d, -d),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}deg", self.degrees())
    }
}

/// Positions read into a code, relative to the centre and in units of `d`.
/// The first entry is the most significant bit.
pub const READ_ORDER: [(isize, isize); CODE_BITS] = [
    (0, 0),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
];

/// Tiling and code parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbcConfig {
    /// Side of the (square) LL band.
    pub grid_side: usize,
    /// Side of one cell.
    pub cell_size: usize,
    /// Derivative distance.
    pub distance: usize,
}

impl Default for DbcConfig {
    fn default() -> Self {
        Self {
            grid_side: 50,
            cell_size: 5,
            distance: 1,
        }
    }
}

impl DbcConfig {
    pub fn with_distance(distance: usize) -> Self {
        Self {
            distance,
            ..Self::default()
        }
    }

    pub fn cells_per_side(&self) -> usize {
        self.grid_side / self.cell_size
    }

    pub fn feature_len(&self) -> usize {
        self.cells_per_side() * self.cells_per_side()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_size < 3 {
            return Err(Error::Config(format!(
                "cell size {} cannot hold a 3x3 neighbourhood",
                self.cell_size
            )));
        }
        if self.grid_side == 0 || !self.grid_side.is_multiple_of(self.cell_size) {
            return Err(Error::Config(format!(
                "LL side {} is not a multiple of cell size {}",
                self.grid_side, self.cell_size
            )));
        }
        check_distance(self.cell_size, self.distance)
    }
}

/// The outermost derivative reaches `2d` from the centre.
fn check_distance(cell_size: usize, d: usize) -> Result<()> {
    if d == 0 || 2 * d > cell_size / 2 {
        return Err(Error::Bounds(format!(
            "distance {d} reaches outside a {cell_size}x{cell_size} cell"
        )));
    }
    Ok(())
}

/// One square tile of the LL band.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    size: usize,
    values: Vec<f64>,
    pub row_index: usize,
    pub col_index: usize,
}

impl Cell {
    pub fn new(size: usize, values: Vec<f64>, row_index: usize, col_index: usize) -> Result<Self> {
        if size == 0 || values.len() != size * size {
            return Err(Error::Shape(format!(
                "cell of side {size} needs {} values, got {}",
                size * size,
                values.len()
            )));
        }
        Ok(Self {
            size,
            values,
            row_index,
            col_index,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    fn index(&self, row: isize, col: isize) -> Option<(usize, usize)> {
        let n = self.size as isize;
        ((0..n).contains(&row) && (0..n).contains(&col)).then_some((row as usize, col as usize))
    }

    pub fn center(&self) -> (usize, usize) {
        (self.size / 2, self.size / 2)
    }
}

/// Splits a `grid_side`-square LL band into row-major cells.
pub fn partition_cells(ll: &Grid, config: &DbcConfig) -> Result<Vec<Cell>> {
    let side = config.grid_side;
    if ll.width() != side || ll.height() != side {
        return Err(Error::Shape(format!(
            "expected a {side}x{side} LL band, got {}x{}",
            ll.width(),
            ll.height()
        )));
    }
    if config.cell_size == 0 || !side.is_multiple_of(config.cell_size) {
        return Err(Error::Shape(format!(
            "{side} is not a multiple of cell size {}",
            config.cell_size
        )));
    }
    let n = config.cell_size;
    let per_side = side / n;
    let mut cells = Vec::with_capacity(per_side * per_side);
    for cr in 0..per_side {
        for cc in 0..per_side {
            let mut values = Vec::with_capacity(n * n);
            for r in 0..n {
                values.extend_from_slice(&ll.row(cr * n + r)[cc * n..(cc + 1) * n]);
            }
            cells.push(Cell::new(n, values, cr, cc)?);
        }
    }
    Ok(cells)
}

/// Derivative at `(i, j)` towards the direction's neighbour at distance `d`.
pub fn directional_derivative(
    cell: &Cell,
    direction: Direction,
    d: usize,
    i: usize,
    j: usize,
) -> Result<f64> {
    let (dr, dc) = direction.neighbor_offset(d);
    let (ni, nj) = (i as isize + dr, j as isize + dc);
    match (cell.index(i as isize, j as isize), cell.index(ni, nj)) {
        (Some(_), Some((ni, nj))) => Ok(cell.get(i, j) - cell.get(ni, nj)),
        _ => Err(Error::Bounds(format!(
            "{direction} derivative at ({i}, {j}) with d={d} leaves the {0}x{0} cell",
            cell.size
        ))),
    }
}

#[inline]
pub fn binarize_derivative(v: f64) -> u8 {
    u8::from(v > 0.0)
}

/// A 9-bit directional code, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionalCode {
    pub direction: Direction,
    pub bits: [u8; CODE_BITS],
    pub decimal: u16,
}

impl DirectionalCode {
    pub fn from_bits(direction: Direction, bits: [u8; CODE_BITS]) -> Self {
        let decimal = bits
            .iter()
            .fold(0u16, |acc, &b| (acc << 1) | u16::from(b & 1));
        Self {
            direction,
            bits,
            decimal,
        }
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|b| char::from(b'0' + b)).collect()
    }
}

/// Code of the 3x3 neighbourhood around the cell centre.
pub fn cell_code(cell: &Cell, direction: Direction, d: usize) -> Result<DirectionalCode> {
    check_distance(cell.size, d)?;
    let (ci, cj) = cell.center();
    let mut bits = [0u8; CODE_BITS];
    for (bit, &(dr, dc)) in bits.iter_mut().zip(READ_ORDER.iter()) {
        let i = (ci as isize + dr * d as isize) as usize;
        let j = (cj as isize + dc * d as isize) as usize;
        *bit = binarize_derivative(directional_derivative(cell, direction, d, i, j)?);
    }
    Ok(DirectionalCode::from_bits(direction, bits))
}

/// Per-cell averaged codes, scaled into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    coeffs: Vec<f64>,
    scale: f64,
}

impl FeatureVector {
    /// Wraps already-scaled coefficients.
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            scale: FEATURE_SCALE,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Divisor applied to the raw averaged codes.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Comma-separated coefficients at round-trip precision.
    pub fn to_csv(&self) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(|v| v.to_string()).collect();
        parts.join(",")
    }

    pub fn parse_csv<'a>(fields: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let coeffs = fields
            .into_iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Gallery(format!("bad coefficient {f:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(v) = coeffs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Gallery(format!("coefficient {v} outside [0, 1]")));
        }
        Ok(Self::new(coeffs))
    }
}

/// Feature vector of an LL band under `config`.
pub fn extract_features_with(ll: &Grid, config: &DbcConfig) -> Result<FeatureVector> {
    check_distance(config.cell_size, config.distance)?;
    let cells = partition_cells(ll, config)?;
    let mut coeffs = Vec::with_capacity(cells.len());
    for cell in &cells {
        let mut total = 0u32;
        for direction in Direction::ALL {
            total += u32::from(cell_code(cell, direction, config.distance)?.decimal);
        }
        let mean = f64::from(total) / Direction::ALL.len() as f64;
        coeffs.push(mean / FEATURE_SCALE);
    }
    Ok(FeatureVector::new(coeffs))
}

/// Feature vector of a 50x50 LL band with 5x5 cells.
pub fn extract_features(ll: &Grid, d: usize) -> Result<FeatureVector> {
    extract_features_with(ll, &DbcConfig::with_distance(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell_from(f: impl Fn(usize, usize) -> f64) -> Cell {
        let values = (0..25).map(|k| f(k / 5, k % 5)).collect();
        Cell::new(5, values, 0, 0).unwrap()
    }

    #[test]
    fn partition_layout() {
        let ll = Grid::from_fn(50, 50, |i, j| (10 * i + j) as f64).unwrap();
        let cells = partition_cells(&ll, &DbcConfig::default()).unwrap();
        assert_eq!(cells.len(), 100);
        let first = &cells[0];
        for r in 0..5 {
            for c in 0..5 {
                assert_eq!(first.get(r, c), (10 * r + c) as f64);
            }
        }
        let c = &cells[23];
        assert_eq!((c.row_index, c.col_index), (2, 3));
        assert_eq!(c.get(0, 0), ll.get(10, 15));
        assert_eq!(c.get(4, 4), ll.get(14, 19));
    }

    #[test]
    fn partition_rejects_wrong_size() {
        let ll = Grid::filled(40, 40, 0.0).unwrap();
        assert!(matches!(
            partition_cells(&ll, &DbcConfig::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn derivatives_by_hand() {
        let flat = cell_from(|_, _| 4.0);
        for dir in Direction::ALL {
            assert_eq!(directional_derivative(&flat, dir, 1, 2, 2).unwrap(), 0.0);
        }
        let c = cell_from(|i, j| match (i, j) {
            (2, 2) => 5.0,
            (2, 1) => 3.0,
            (1, 3) => 7.0,
            (1, 2) => 1.0,
            (1, 1) => 9.0,
            _ => 0.0,
        });
        assert_eq!(
            directional_derivative(&c, Direction::Deg0, 1, 2, 2).unwrap(),
            2.0
        );
        assert_eq!(
            directional_derivative(&c, Direction::Deg45, 1, 2, 2).unwrap(),
            -2.0
        );
        assert_eq!(
            directional_derivative(&c, Direction::Deg90, 1, 2, 2).unwrap(),
            4.0
        );
        assert_eq!(
            directional_derivative(&c, Direction::Deg135, 1, 2, 2).unwrap(),
            -4.0
        );
    }

    #[test]
    fn derivative_out_of_cell() {
        let c = cell_from(|_, _| 0.0);
        assert!(matches!(
            directional_derivative(&c, Direction::Deg0, 1, 2, 0),
            Err(Error::Bounds(_))
        ));
        assert!(matches!(
            directional_derivative(&c, Direction::Deg45, 1, 0, 2),
            Err(Error::Bounds(_))
        ));
        assert!(matches!(
            directional_derivative(&c, Direction::Deg90, 1, 5, 2),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn binarize_boundary() {
        assert_eq!(binarize_derivative(0.0), 0);
        assert_eq!(binarize_derivative(-3.5), 0);
        assert_eq!(binarize_derivative(1e-12), 1);
    }

    #[test]
    fn constant_cell_codes_zero() {
        let c = cell_from(|_, _| 17.0);
        for dir in Direction::ALL {
            let code = cell_code(&c, dir, 1).unwrap();
            assert_eq!(code.bit_string(), "000000000");
            assert_eq!(code.decimal, 0);
        }
    }

    #[test]
    fn increasing_rows_code_all_ones_at_zero_degrees() {
        let c = cell_from(|_, j| j as f64 * 3.0);
        let code = cell_code(&c, Direction::Deg0, 1).unwrap();
        assert_eq!(code.bit_string(), "111111111");
        assert_eq!(code.decimal, 511);
    }

    #[test]
    fn bit_order_msb_is_center() {
        // only the centre exceeds its left neighbour
        let c = cell_from(|i, j| if (i, j) == (2, 2) { 1.0 } else { 0.0 });
        let code = cell_code(&c, Direction::Deg0, 1).unwrap();
        assert_eq!(code.bits[0], 1);
        // (2,3) now compares against the bright centre and goes negative
        assert_eq!(code.decimal, 256);
    }

    #[test]
    fn decimal_matches_bits() {
        let code = DirectionalCode::from_bits(Direction::Deg90, [1, 0, 1, 0, 0, 0, 0, 1, 1]);
        assert_eq!(code.decimal, 256 + 64 + 2 + 1);
    }

    #[test]
    fn distance_limits() {
        let c = cell_from(|i, j| (i * 5 + j) as f64);
        assert!(cell_code(&c, Direction::Deg0, 1).is_ok());
        for d in [0, 2, 3] {
            assert!(matches!(
                cell_code(&c, Direction::Deg0, d),
                Err(Error::Bounds(_))
            ));
        }
        let big = Cell::new(9, vec![0.0; 81], 0, 0).unwrap();
        assert!(cell_code(&big, Direction::Deg135, 2).is_ok());
    }

    #[test]
    fn constant_band_gives_zero_features() {
        let f = extract_features(&Grid::filled(50, 50, 80.0).unwrap(), 1).unwrap();
        assert_eq!(f.len(), 100);
        assert!(f.coeffs().iter().all(|&v| v == 0.0));
        assert_eq!(f.scale(), FEATURE_SCALE);
    }

    #[test]
    fn steep_ramp_gives_unit_features() {
        // 2i + j grows along every compared direction, including 45 deg
        let ll = Grid::from_fn(50, 50, |i, j| (2 * i + j) as f64).unwrap();
        let f = extract_features(&ll, 1).unwrap();
        assert!(f.coeffs().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn csv_round_trip() {
        let f = FeatureVector::new(vec![0.0, 1.0, 1.0 / 3.0, 0.123456789012345]);
        let text = f.to_csv();
        let back = FeatureVector::parse_csv(text.split(',')).unwrap();
        assert_eq!(back, f);
        assert!(FeatureVector::parse_csv(["1.5"]).is_err());
        assert!(FeatureVector::parse_csv(["x"]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DbcConfig::default().validate().is_ok());
        assert!(DbcConfig {
            grid_side: 48,
            ..DbcConfig::default()
        }
        .validate()
        .is_err());
        assert!(DbcConfig::with_distance(2).validate().is_err());
        assert!(DbcConfig {
            grid_side: 45,
            cell_size: 9,
            distance: 2
        }
        .validate()
        .is_ok());
    }
}
