//! Structured per-image logical descriptions: one entry per object class with
//! count, a nine-grid position token, and an area fraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed nine-grid position vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Position {
    TopLeft,
    Top,
    TopRight,
    Left,
    Center,
    Right,
    BottomLeft,
    Bottom,
    BottomRight,
}

impl Position {
    pub const ALL: [Position; 9] = [
        Position::TopLeft,
        Position::Top,
        Position::TopRight,
        Position::Left,
        Position::Center,
        Position::Right,
        Position::BottomLeft,
        Position::Bottom,
        Position::BottomRight,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Position::TopLeft => "top-left",
            Position::Top => "top",
            Position::TopRight => "top-right",
            Position::Left => "left",
            Position::Center => "center",
            Position::Right => "right",
            Position::BottomLeft => "bottom-left",
            Position::Bottom => "bottom",
            Position::BottomRight => "bottom-right",
        }
    }

    /// Column (0..3, left to right) of the grid cell.
    pub fn col(self) -> u32 {
        (self as u32) % 3
    }

    /// Row (0..3, top to bottom) of the grid cell.
    pub fn row(self) -> u32 {
        (self as u32) / 3
    }

    pub fn from_grid(col: u32, row: u32) -> Position {
        assert!(col < 3 && row < 3, "grid cell out of range");
        Position::ALL[(row * 3 + col) as usize]
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Position {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Position::ALL
            .iter()
            .copied()
            .find(|p| p.token() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown position token: {s}")))
    }
}

/// Description of one object class in one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCategoryText")]
pub struct CategoryText {
    pub class_name: String,
    pub count: u32,
    pub position: Position,
    pub size: f64,
}

#[derive(Deserialize)]
struct RawCategoryText {
    class_name: String,
    count: u32,
    position: Position,
    size: f64,
}

impl TryFrom<RawCategoryText> for CategoryText {
    type Error = Error;
    fn try_from(raw: RawCategoryText) -> Result<Self> {
        CategoryText::new(raw.class_name, raw.count, raw.position, raw.size)
    }
}

impl CategoryText {
    pub fn new(class_name: String, count: u32, position: Position, size: f64) -> Result<Self> {
        if class_name.is_empty() {
            return Err(Error::Invalid("class name must be nonempty".into()));
        }
        if count < 1 {
            return Err(Error::Invalid(format!("count must be >= 1 for {class_name}")));
        }
        if !size.is_finite() || !(0.0..=1.0).contains(&size) {
            return Err(Error::Invalid(format!(
                "size {size} of {class_name} outside [0, 1]"
            )));
        }
        Ok(CategoryText {
            class_name,
            count,
            position,
            size,
        })
    }
}

/// The full logical description of one image: class-sorted, class-unique
/// entries. The sort/uniqueness invariant is enforced on construction and
/// deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawImageText")]
pub struct ImageText {
    image_id: String,
    entries: Vec<CategoryText>,
}

#[derive(Deserialize)]
struct RawImageText {
    image_id: String,
    entries: Vec<CategoryText>,
}

impl TryFrom<RawImageText> for ImageText {
    type Error = Error;
    fn try_from(raw: RawImageText) -> Result<Self> {
        ImageText::new(raw.image_id, raw.entries)
    }
}

impl ImageText {
    pub fn new(image_id: String, mut entries: Vec<CategoryText>) -> Result<Self> {
        entries.sort_by(|a, b| a.class_name.cmp(&b.class_name));
        for pair in entries.windows(2) {
            if pair[0].class_name == pair[1].class_name {
                return Err(Error::Invalid(format!(
                    "duplicate class {} in image {image_id}",
                    pair[0].class_name
                )));
            }
        }
        Ok(ImageText { image_id, entries })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn entries(&self) -> &[CategoryText] {
        &self.entries
    }

    pub fn entry(&self, class_name: &str) -> Option<&CategoryText> {
        self.entries
            .binary_search_by(|e| e.class_name.as_str().cmp(class_name))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn contains_class(&self, class_name: &str) -> bool {
        self.entry(class_name).is_some()
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.class_name.as_str())
    }
}
