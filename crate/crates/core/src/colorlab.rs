//! Color coding of representative colors.
//!
//! Two systems are supported: the ten Munsell hue families (the primary
//! coding) and an eight-class HSV partition used as a comparison baseline.
//! Both are total functions over 8-bit RGB.
//!
//! Munsell classification maps sRGB to an HSV hue angle and looks the angle up
//! in a ten-sector table. Sector boundaries are the HSV hues of the Munsell
//! renotation family boundaries (10R, 10YR, ...) sampled at value 5 / chroma 10;
//! the table ships as `assets/munsell_sectors.json` and is regenerated by
//! `scripts/regen_munsell_table.py`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ColorError {
    #[error("post has no color information")]
    Empty,
    #[error("unknown color class `{0}`")]
    Unknown(String),
    #[error("invalid sector table: {0}")]
    Table(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MunsellHue {
    R,
    YR,
    Y,
    GY,
    G,
    BG,
    B,
    PB,
    P,
    RP,
}

impl MunsellHue {
    pub const ALL: [MunsellHue; 10] = [
        MunsellHue::R,
        MunsellHue::YR,
        MunsellHue::Y,
        MunsellHue::GY,
        MunsellHue::G,
        MunsellHue::BG,
        MunsellHue::B,
        MunsellHue::PB,
        MunsellHue::P,
        MunsellHue::RP,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MunsellHue::R => "R",
            MunsellHue::YR => "YR",
            MunsellHue::Y => "Y",
            MunsellHue::GY => "GY",
            MunsellHue::G => "G",
            MunsellHue::BG => "BG",
            MunsellHue::B => "B",
            MunsellHue::PB => "PB",
            MunsellHue::P => "P",
            MunsellHue::RP => "RP",
        }
    }
}

impl fmt::Display for MunsellHue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MunsellHue {
    type Err = ColorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MunsellHue::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| ColorError::Unknown(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hsv8Class {
    BlackWhite,
    Blue,
    Cyan,
    Green,
    Yellow,
    Orange,
    Red,
    Magenta,
}

impl Hsv8Class {
    pub const ALL: [Hsv8Class; 8] = [
        Hsv8Class::BlackWhite,
        Hsv8Class::Blue,
        Hsv8Class::Cyan,
        Hsv8Class::Green,
        Hsv8Class::Yellow,
        Hsv8Class::Orange,
        Hsv8Class::Red,
        Hsv8Class::Magenta,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Hsv8Class::BlackWhite => "black/white",
            Hsv8Class::Blue => "blue",
            Hsv8Class::Cyan => "cyan",
            Hsv8Class::Green => "green",
            Hsv8Class::Yellow => "yellow",
            Hsv8Class::Orange => "orange",
            Hsv8Class::Red => "red",
            Hsv8Class::Magenta => "magenta",
        }
    }
}

impl fmt::Display for Hsv8Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
}

pub fn rgb_to_hsv(rgb: [u8; 3]) -> Hsv {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let value = max;
    let saturation = if max > 0.0 { delta / max } else { 0.0 };
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    Hsv {
        hue: hue.rem_euclid(360.0),
        saturation,
        value,
    }
}

/// Inverse of [`rgb_to_hsv`], rounded to 8-bit components.
pub fn hsv_to_rgb(hsv: Hsv) -> [u8; 3] {
    let h = hsv.hue.rem_euclid(360.0) / 60.0;
    let c = hsv.value * hsv.saturation;
    let x = c * (1.0 - (h.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = hsv.value - c;
    [r, g, b].map(|u| ((u + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// Calibrated ten-sector hue table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorTable {
    pub version: u32,
    pub source: String,
    /// Hue (degrees) of each family's 5-step anchor. Informational.
    pub centers_deg: std::collections::BTreeMap<String, f64>,
    /// Hue (degrees) at which each family begins, walking counter-clockwise
    /// from its predecessor.
    pub lower_bounds_deg: std::collections::BTreeMap<String, f64>,
}

impl SectorTable {
    pub fn bundled() -> &'static SectorTable {
        static TABLE: OnceLock<SectorTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            SectorTable::from_json(include_str!("../assets/munsell_sectors.json"))
                .expect("bundled sector table is valid")
        })
    }

    pub fn from_json(s: &str) -> Result<SectorTable, ColorError> {
        let t: SectorTable =
            serde_json::from_str(s).map_err(|e| ColorError::Table(e.to_string()))?;
        t.lower_bounds()?;
        Ok(t)
    }

    /// Lower bounds in family order, validated to be a rotation of an
    /// increasing sequence on the circle.
    pub fn lower_bounds(&self) -> Result<[f64; 10], ColorError> {
        let mut out = [0.0; 10];
        for h in MunsellHue::ALL {
            out[h.index()] = *self
                .lower_bounds_deg
                .get(h.name())
                .ok_or_else(|| ColorError::Table(format!("missing bound for {h}")))?;
        }
        // Walking the families in order must wrap around the circle exactly once.
        let total: f64 = (0..10)
            .map(|i| (out[(i + 1) % 10] - out[i]).rem_euclid(360.0))
            .sum();
        if (total - 360.0).abs() > 1e-9 {
            return Err(ColorError::Table(
                "sector bounds are not in circular order".into(),
            ));
        }
        Ok(out)
    }

    pub fn classify_angle(&self, hue: f64) -> MunsellHue {
        let bounds = self.lower_bounds().expect("validated at construction");
        let hue = hue.rem_euclid(360.0);
        for (i, fam) in MunsellHue::ALL.iter().enumerate() {
            let lo = bounds[i];
            let width = (bounds[(i + 1) % 10] - lo).rem_euclid(360.0);
            if (hue - lo).rem_euclid(360.0) < width {
                return *fam;
            }
        }
        unreachable!("sectors cover the circle")
    }
}

/// Saturation/value cutoff below which a color counts as near-neutral for the
/// Munsell coding.
pub const MUNSELL_ACHROMATIC: f64 = 0.08;

/// Near-neutral test used by the Munsell coding.
pub fn is_munsell_achromatic(hsv: &Hsv) -> bool {
    hsv.saturation < MUNSELL_ACHROMATIC || hsv.value < MUNSELL_ACHROMATIC
}

/// Hue angle used for Munsell coding. The ten-family system has no neutral
/// class, so near-neutral colors are still classified by their hue angle; a
/// color with zero saturation has no hue and is assigned angle 0 (family R).
fn munsell_angle(hsv: &Hsv) -> f64 {
    if hsv.saturation == 0.0 {
        0.0
    } else {
        hsv.hue
    }
}

pub fn rgb_to_munsell_hue(rgb: [u8; 3]) -> MunsellHue {
    rgb_to_munsell_hue_with(SectorTable::bundled(), rgb)
}

pub fn rgb_to_munsell_hue_with(table: &SectorTable, rgb: [u8; 3]) -> MunsellHue {
    let hsv = rgb_to_hsv(rgb);
    table.classify_angle(munsell_angle(&hsv))
}

/// Saturation/value cutoff for the black/white class of the HSV baseline.
pub const HSV8_ACHROMATIC: f64 = 0.15;

pub fn rgb_to_hsv8(rgb: [u8; 3]) -> Hsv8Class {
    let hsv = rgb_to_hsv(rgb);
    if hsv.saturation < HSV8_ACHROMATIC || hsv.value < HSV8_ACHROMATIC {
        return Hsv8Class::BlackWhite;
    }
    let h = hsv.hue;
    if !(15.0..345.0).contains(&h) {
        Hsv8Class::Red
    } else if h < 45.0 {
        Hsv8Class::Orange
    } else if h < 75.0 {
        Hsv8Class::Yellow
    } else if h < 165.0 {
        Hsv8Class::Green
    } else if h < 195.0 {
        Hsv8Class::Cyan
    } else if h < 285.0 {
        Hsv8Class::Blue
    } else {
        Hsv8Class::Magenta
    }
}

/// Ten binary indicators ordered R, YR, Y, GY, G, BG, B, PB, P, RP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PostColorVector {
    pub bits: [u8; 10],
}

impl PostColorVector {
    pub fn has(&self, hue: MunsellHue) -> bool {
        self.bits[hue.index()] == 1
    }
}

/// Union of image hues for one post.
pub fn post_color_vector(hues: &[MunsellHue]) -> Result<PostColorVector, ColorError> {
    if hues.is_empty() {
        return Err(ColorError::Empty);
    }
    let mut bits = [0u8; 10];
    for h in hues {
        bits[h.index()] = 1;
    }
    Ok(PostColorVector { bits })
}

/// Eight-class analogue of [`post_color_vector`] for the HSV baseline.
pub fn post_hsv8_vector(classes: &[Hsv8Class]) -> Result<[u8; 8], ColorError> {
    if classes.is_empty() {
        return Err(ColorError::Empty);
    }
    let mut bits = [0u8; 8];
    for c in classes {
        bits[c.index()] = 1;
    }
    Ok(bits)
}
