use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::RasterError;

pub const DEFAULT_NODATA: f64 = -9999.0;
/// Class value reserved for missing pixels in a [`ClassGrid`].
pub const CLASS_NODATA: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub nrows: usize,
    pub ncols: usize,
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: f64,
}

impl GridHeader {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, xll: 0.0, yll: 0.0, cellsize: 1.0, nodata: DEFAULT_NODATA }
    }

    pub fn len(&self) -> usize {
        self.nrows * self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same dimensions and georeferencing; the nodata sentinel may differ.
    pub fn aligned(&self, other: &GridHeader) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.xll == other.xll
            && self.yll == other.yll
            && self.cellsize == other.cellsize
    }

    fn validate(&self) -> Result<(), RasterError> {
        if self.nrows == 0 || self.ncols == 0 {
            return Err(RasterError::MalformedHeader(format!("dimensions {}x{}", self.nrows, self.ncols)));
        }
        if !(self.cellsize.is_finite() && self.cellsize > 0.0) {
            return Err(RasterError::MalformedHeader(format!("cellsize {}", self.cellsize)));
        }
        if !(self.xll.is_finite() && self.yll.is_finite() && self.nodata.is_finite()) {
            return Err(RasterError::MalformedHeader("non-finite corner or nodata".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_aligned<'a>(mut headers: impl Iterator<Item = &'a GridHeader>) -> Result<(), RasterError> {
    let Some(first) = headers.next() else { return Ok(()) };
    for (i, h) in headers.enumerate() {
        if !first.aligned(h) {
            return Err(RasterError::GridShapeMismatch(format!(
                "input {} is {}x{} at ({}, {}) cell {}, input 0 is {}x{} at ({}, {}) cell {}",
                i + 1,
                h.nrows,
                h.ncols,
                h.xll,
                h.yll,
                h.cellsize,
                first.nrows,
                first.ncols,
                first.xll,
                first.yll,
                first.cellsize
            )));
        }
    }
    Ok(())
}

pub fn check_grids_aligned(grids: &[Grid]) -> Result<(), RasterError> {
    check_aligned(grids.iter().map(|g| &g.header))
}

/// Real-valued raster, row-major with the northern row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub header: GridHeader,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(header: GridHeader, values: Vec<f64>) -> Result<Self, RasterError> {
        header.validate()?;
        if values.len() != header.len() {
            return Err(RasterError::GridShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                header.nrows,
                header.ncols
            )));
        }
        Ok(Self { header, values })
    }

    pub fn filled(header: GridHeader, value: f64) -> Self {
        Self::new(header, vec![value; header.len()]).expect("valid header")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.header.ncols + col]
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.header.nodata
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(move |&v| !self.is_nodata(v))
    }

    /// Copy of `self` with `nodata` as the sentinel.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Grid {
        Grid { header: self.header, values }
    }
}

/// Raster of classes 1..5; 0 marks "factor absent" in stochastic layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGrid {
    pub header: GridHeader,
    values: Vec<u8>,
}

impl ClassGrid {
    pub fn new(header: GridHeader, values: Vec<u8>) -> Result<Self, RasterError> {
        header.validate()?;
        if values.len() != header.len() {
            return Err(RasterError::GridShapeMismatch(format!("{} classes for {} pixels", values.len(), header.len())));
        }
        if let Some(&bad) = values.iter().find(|&&c| c > 5 && c != CLASS_NODATA) {
            return Err(RasterError::InvalidClassValue(bad as f64));
        }
        Ok(Self { header, values })
    }

    pub fn filled(header: GridHeader, class: u8) -> Self {
        Self::new(header, vec![class; header.len()]).expect("valid class grid")
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    /// Reads classes back from a real grid (e.g. one loaded from disk).
    pub fn from_grid(grid: &Grid) -> Result<Self, RasterError> {
        let mut values = Vec::with_capacity(grid.values.len());
        for &v in &grid.values {
            if grid.is_nodata(v) {
                values.push(CLASS_NODATA);
            } else if v.fract() == 0.0 && (0.0..=5.0).contains(&v) {
                values.push(v as u8);
            } else {
                return Err(RasterError::InvalidClassValue(v));
            }
        }
        Ok(Self { header: grid.header, values })
    }

    pub fn to_grid(&self) -> Grid {
        let nodata = self.header.nodata;
        let values = self.values.iter().map(|&c| if c == CLASS_NODATA { nodata } else { c as f64 }).collect();
        Grid { header: self.header, values }
    }
}

/// Formats like C's `%.9g`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn to_ascii(grid: &Grid) -> String {
    let h = &grid.header;
    let mut out = String::with_capacity(grid.values.len() * 8 + 128);
    writeln!(out, "ncols {}", h.ncols).unwrap();
    writeln!(out, "nrows {}", h.nrows).unwrap();
    writeln!(out, "xllcorner {}", format_value(h.xll)).unwrap();
    writeln!(out, "yllcorner {}", format_value(h.yll)).unwrap();
    writeln!(out, "cellsize {}", format_value(h.cellsize)).unwrap();
    writeln!(out, "NODATA_value {}", format_value(h.nodata)).unwrap();
    for row in grid.values.chunks(h.ncols) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format_value(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_ascii(text: &str) -> Result<Grid, RasterError> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut xcenter = false;
    let mut ycenter = false;
    let mut cellsize = None;
    let mut nodata = None;

    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    while let Some(line) = lines.peek() {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let value = parts.next().ok_or_else(|| RasterError::MalformedHeader(format!("{key} has no value")))?;
        let number = |v: &str| -> Result<f64, RasterError> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| RasterError::MalformedHeader(format!("{key} = {v:?}")))
        };
        let count = |v: &str| -> Result<usize, RasterError> {
            v.parse::<usize>().map_err(|_| RasterError::MalformedHeader(format!("{key} = {v:?}")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(count(value)?),
            "nrows" => nrows = Some(count(value)?),
            "xllcorner" => xll = Some(number(value)?),
            "yllcorner" => yll = Some(number(value)?),
            "xllcenter" => {
                xll = Some(number(value)?);
                xcenter = true;
            }
            "yllcenter" => {
                yll = Some(number(value)?);
                ycenter = true;
            }
            "cellsize" => cellsize = Some(number(value)?),
            "nodata_value" => nodata = Some(number(value)?),
            other => return Err(RasterError::MalformedHeader(format!("unknown key {other:?}"))),
        }
        lines.next();
    }

    let missing = |k: &str| RasterError::MalformedHeader(format!("missing {k}"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;
    let mut xll = xll.ok_or_else(|| missing("xllcorner"))?;
    let mut yll = yll.ok_or_else(|| missing("yllcorner"))?;
    if xcenter {
        xll -= cellsize / 2.0;
    }
    if ycenter {
        yll -= cellsize / 2.0;
    }
    let header = GridHeader { nrows, ncols, xll, yll, cellsize, nodata: nodata.unwrap_or(DEFAULT_NODATA) };
    header.validate()?;

    let mut values = Vec::with_capacity(header.len());
    let mut row = 0;
    for line in lines {
        let start = values.len();
        for (col, token) in line.split_whitespace().enumerate() {
            let v = token.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| RasterError::NonNumericCell {
                row,
                col,
                token: token.to_string(),
            })?;
            values.push(v);
        }
        let found = values.len() - start;
        if found != ncols || row >= nrows {
            return Err(RasterError::RaggedRow { row, expected: if row < nrows { ncols } else { 0 }, found });
        }
        row += 1;
    }
    if row != nrows {
        return Err(RasterError::RaggedRow { row, expected: ncols, found: 0 });
    }
    Grid::new(header, values)
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid, RasterError> {
    parse_ascii(&fs::read_to_string(path)?)
}

pub fn write_grid(grid: &Grid, path: impl AsRef<Path>) -> Result<(), RasterError> {
    fs::write(path, to_ascii(grid))?;
    Ok(())
}
