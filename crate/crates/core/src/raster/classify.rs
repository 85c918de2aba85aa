use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grid::{ClassGrid, Grid, CLASS_NODATA};
use super::RasterError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsWorse,
    LowerIsWorse,
}

/// Four class boundaries. Intervals are `(lower, upper]`, so a value equal
/// to a threshold falls in the class below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakSet {
    thresholds: [f64; 4],
    orientation: Orientation,
}

impl BreakSet {
    pub fn new(thresholds: &[f64], orientation: Orientation) -> Result<Self, RasterError> {
        let t: [f64; 4] = thresholds.try_into().map_err(|_| RasterError::InvalidBreaks(thresholds.to_vec()))?;
        if t.iter().any(|x| !x.is_finite()) || t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RasterError::InvalidBreaks(thresholds.to_vec()));
        }
        Ok(Self { thresholds: t, orientation })
    }

    pub fn thresholds(&self) -> &[f64; 4] {
        &self.thresholds
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn class_of(&self, v: f64) -> u8 {
        let above = self.thresholds.iter().filter(|&&t| v > t).count() as u8;
        match self.orientation {
            Orientation::HigherIsWorse => 1 + above,
            Orientation::LowerIsWorse => 5 - above,
        }
    }
}

pub fn classify(grid: &Grid, breaks: &BreakSet) -> ClassGrid {
    let values = grid
        .values()
        .iter()
        .map(|&v| if grid.is_nodata(v) { CLASS_NODATA } else { breaks.class_of(v) })
        .collect();
    ClassGrid::new(grid.header, values).expect("classes are 1..5")
}

/// Lookup from land-cover code to class.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryMap {
    classes: BTreeMap<i64, u8>,
}

impl CategoryMap {
    pub fn new(pairs: impl IntoIterator<Item = (i64, u8)>) -> Result<Self, RasterError> {
        let mut classes = BTreeMap::new();
        for (code, class) in pairs {
            if !(1..=5).contains(&class) {
                return Err(RasterError::InvalidCategoryClass { code, class });
            }
            classes.insert(code, class);
        }
        Ok(Self { classes })
    }

    pub fn get(&self, code: i64) -> Option<u8> {
        self.classes.get(&code).copied()
    }

    pub fn codes(&self) -> impl Iterator<Item = (i64, u8)> + '_ {
        self.classes.iter().map(|(&c, &k)| (c, k))
    }
}

pub fn classify_categorical(grid: &Grid, map: &CategoryMap) -> Result<ClassGrid, RasterError> {
    let mut values = Vec::with_capacity(grid.values().len());
    for &v in grid.values() {
        if grid.is_nodata(v) {
            values.push(CLASS_NODATA);
            continue;
        }
        let code = v as i64;
        if code as f64 != v {
            return Err(RasterError::UnmappedCategory(code));
        }
        values.push(map.get(code).ok_or(RasterError::UnmappedCategory(code))?);
    }
    ClassGrid::new(grid.header, values)
}
