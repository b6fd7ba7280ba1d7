//! The 17 reference systems, one per region of the property diagram, and
//! their expected classification.

use std::fs;
use std::path::{Path, PathBuf};

use trackkit_core::properties::{PropertyProfile, PropertyTuple, VENN_REGIONS};

use crate::error::{Error, Result};
use crate::format::{parse_system, NamedSystem};

macro_rules! bundled {
    ($($n:literal => $id:literal),*) => {
        [$(($n, concat!("example_", $id, ".json"), include_str!(concat!("../corpus/example_", $id, ".json")))),*]
    };
}

const BUNDLED: [(u8, &str, &str); 17] = bundled!(
    1 => "01", 2 => "02", 3 => "03", 4 => "04", 5 => "05", 6 => "06", 7 => "07", 8 => "08", 9 => "09",
    10 => "10", 11 => "11", 12 => "12", 13 => "13", 14 => "14", 15 => "15", 16 => "16", 17 => "17"
);

/// Delay of each example; example 1 has no input-output coupling.
const DELAYS: [Option<usize>; 17] = [
    None,
    Some(1),
    Some(1),
    Some(1),
    Some(1),
    Some(2),
    Some(1),
    Some(1),
    Some(2),
    Some(2),
    Some(1),
    Some(1),
    Some(1),
    Some(1),
    Some(1),
    Some(1),
    Some(1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expected {
    pub example: u8,
    pub tuple: PropertyTuple,
    pub delay: Option<usize>,
}

pub fn expected(example: u8) -> Option<Expected> {
    let i = usize::from(example).checked_sub(1).filter(|&i| i < 17)?;
    Some(Expected { example, tuple: VENN_REGIONS[i], delay: DELAYS[i] })
}

impl Expected {
    /// Tuple, delay, region id and whether trackability is defined all agree.
    pub fn matches(&self, profile: &PropertyProfile) -> bool {
        profile.tuple() == self.tuple
            && profile.delay == self.delay
            && profile.trackable.is_some() == self.delay.is_some()
            && profile.venn_region == Some(self.example)
    }
}

/// The bundled systems as `(example, file name, system)`.
pub fn bundled() -> Vec<(u8, &'static str, NamedSystem)> {
    BUNDLED
        .iter()
        .map(|&(n, file, text)| (n, file, parse_system(text).expect("bundled corpus file is valid")))
        .collect()
}

/// Files named `example_NN.json` in `dir`, sorted by example number.
pub fn scan_dir(dir: &Path) -> Result<Vec<(u8, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(stem) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let number =
            stem.strip_prefix("example_").and_then(|s| s.strip_suffix(".json")).and_then(|s| s.parse::<u8>().ok());
        if let Some(n) = number {
            found.push((n, path));
        }
    }
    found.sort();
    Ok(found)
}
