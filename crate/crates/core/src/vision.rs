//! Cached vision-API annotations: labels with confidence scores and dominant
//! colors with pixel fractions, one document per image.
//!
//! Responses are replayed from disk; there is no network client here.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Maximum number of labels requested per image.
pub const MAX_LABELS: usize = 100;
/// Maximum number of dominant colors the service returns per image.
pub const MAX_COLORS: usize = 10;
/// Default label-score cutoff (inclusive).
pub const DEFAULT_MIN_SCORE: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum VisionError {
    #[error("schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("image `{0}` has no color information")]
    NoColor(String),
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> VisionError {
    VisionError::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAnnotation {
    pub description: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorAnnotation {
    pub rgb: [u8; 3],
    pub pixel_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnnotation {
    pub image_id: String,
    pub labels: Vec<LabelAnnotation>,
    pub colors: Vec<ColorAnnotation>,
}

impl ImageAnnotation {
    /// Re-check every field bound. Used on deserialized values that bypassed
    /// [`parse_vision_response`].
    pub fn check(&self) -> Result<(), VisionError> {
        if self.image_id.is_empty() {
            return Err(schema("image_id", "empty identifier"));
        }
        if self.labels.len() > MAX_LABELS {
            return Err(schema("labels", format!("more than {MAX_LABELS} labels")));
        }
        if self.colors.len() > MAX_COLORS {
            return Err(schema("colors", format!("more than {MAX_COLORS} colors")));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if l.description.is_empty() {
                return Err(schema(
                    format!("labels[{i}].description"),
                    "empty description",
                ));
            }
            if !(0.0..=1.0).contains(&l.score) {
                return Err(schema(
                    format!("labels[{i}].score"),
                    format!("{} outside [0, 1]", l.score),
                ));
            }
        }
        for (i, c) in self.colors.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.pixel_fraction) {
                return Err(schema(
                    format!("colors[{i}].pixel_fraction"),
                    format!("{} outside [0, 1]", c.pixel_fraction),
                ));
            }
        }
        Ok(())
    }
}

/// Lower-case and trim a label description so the label vocabulary is
/// case-insensitive.
pub fn normalize_label(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Parse one cached response document.
///
/// Expected shape:
/// `{"image_id": str, "labels": [{"description": str, "score": float}],
///   "colors": [{"rgb": [int, int, int], "pixel_fraction": float}]}`.
/// Every failure names the offending field.
pub fn parse_vision_response(raw: &Value) -> Result<ImageAnnotation, VisionError> {
    let obj = raw
        .as_object()
        .ok_or_else(|| schema("$", "expected a JSON object"))?;

    let image_id = match obj.get("image_id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err(schema("image_id", "expected a string")),
        None => return Err(schema("image_id", "missing")),
    };

    let labels_raw = obj
        .get("labels")
        .ok_or_else(|| schema("labels", "missing"))?
        .as_array()
        .ok_or_else(|| schema("labels", "expected an array"))?;
    let mut labels = Vec::with_capacity(labels_raw.len());
    for (i, l) in labels_raw.iter().enumerate() {
        let description = l
            .get("description")
            .ok_or_else(|| schema(format!("labels[{i}].description"), "missing"))?
            .as_str()
            .ok_or_else(|| schema(format!("labels[{i}].description"), "expected a string"))?;
        let score = l
            .get("score")
            .ok_or_else(|| schema(format!("labels[{i}].score"), "missing"))?
            .as_f64()
            .ok_or_else(|| schema(format!("labels[{i}].score"), "expected a number"))?;
        labels.push(LabelAnnotation {
            description: normalize_label(description),
            score,
        });
    }

    let colors_raw = obj
        .get("colors")
        .ok_or_else(|| schema("colors", "missing"))?
        .as_array()
        .ok_or_else(|| schema("colors", "expected an array"))?;
    let mut colors = Vec::with_capacity(colors_raw.len());
    for (i, c) in colors_raw.iter().enumerate() {
        let field = format!("colors[{i}].rgb");
        let rgb_raw = c
            .get("rgb")
            .ok_or_else(|| schema(&field, "missing"))?
            .as_array()
            .ok_or_else(|| schema(&field, "expected an array of three integers"))?;
        if rgb_raw.len() != 3 {
            return Err(schema(&field, "expected exactly three components"));
        }
        let mut rgb = [0u8; 3];
        for (k, comp) in rgb_raw.iter().enumerate() {
            let v = comp
                .as_u64()
                .filter(|v| *v <= 255)
                .ok_or_else(|| schema(format!("{field}[{k}]"), "expected an integer in 0..=255"))?;
            rgb[k] = v as u8;
        }
        let pixel_fraction = c
            .get("pixel_fraction")
            .ok_or_else(|| schema(format!("colors[{i}].pixel_fraction"), "missing"))?
            .as_f64()
            .ok_or_else(|| schema(format!("colors[{i}].pixel_fraction"), "expected a number"))?;
        colors.push(ColorAnnotation {
            rgb,
            pixel_fraction,
        });
    }

    let ann = ImageAnnotation {
        image_id,
        labels,
        colors,
    };
    ann.check()?;
    Ok(ann)
}

/// Descriptions of labels scoring at least `min_score`, in input order.
pub fn filter_labels(ann: &ImageAnnotation, min_score: f64) -> Vec<String> {
    ann.labels
        .iter()
        .filter(|l| l.score >= min_score)
        .map(|l| l.description.clone())
        .collect()
}

/// RGB of the dominant color with the largest pixel fraction. Ties go to the
/// first listed color.
pub fn representative_color(ann: &ImageAnnotation) -> Result<[u8; 3], VisionError> {
    let mut best: Option<&ColorAnnotation> = None;
    for c in &ann.colors {
        match best {
            Some(b) if c.pixel_fraction <= b.pixel_fraction => {}
            _ => best = Some(c),
        }
    }
    best.map(|c| c.rgb)
        .ok_or_else(|| VisionError::NoColor(ann.image_id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    /// Cached response for the cafe photo (food, iced coffee, sky).
    fn cafe_response() -> Value {
        json!({
            "image_id": "cafe-001",
            "labels": [
                {"description": "Food", "score": 0.96},
                {"description": "Tableware", "score": 0.93},
                {"description": "Sky", "score": 0.89},
                {"description": "Drinkware", "score": 0.87},
                {"description": "Ingredient", "score": 0.86},
                {"description": "Cloud", "score": 0.84}
            ],
            "colors": [
                {"rgb": [77, 153, 231], "pixel_fraction": 0.21},
                {"rgb": [226, 228, 232], "pixel_fraction": 0.12},
                {"rgb": [42, 47, 56], "pixel_fraction": 0.09},
                {"rgb": [164, 113, 71], "pixel_fraction": 0.05}
            ]
        })
    }

    fn response_with(n_labels: usize, n_colors: usize) -> Value {
        let labels: Vec<Value> = (0..n_labels)
            .map(|i| json!({"description": format!("label{i}"), "score": 0.5 + (i as f64) / 100.0}))
            .collect();
        let colors: Vec<Value> = (0..n_colors)
            .map(|i| json!({"rgb": [i * 20, 10, 10], "pixel_fraction": 0.05}))
            .collect();
        json!({"image_id": "img", "labels": labels, "colors": colors})
    }

    #[test]
    fn parses_counts_verbatim() {
        let ann = parse_vision_response(&response_with(12, 10)).unwrap();
        assert_eq!(ann.labels.len(), 12);
        assert_eq!(ann.colors.len(), 10);
    }

    #[test]
    fn score_out_of_bounds_is_schema_error() {
        let raw = json!({
            "image_id": "x",
            "labels": [{"description": "food", "score": 1.2}],
            "colors": []
        });
        match parse_vision_response(&raw) {
            Err(VisionError::Schema { field, .. }) => assert_eq!(field, "labels[0].score"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_fields_are_named() {
        let raw = json!({"image_id": "x", "labels": []});
        assert!(matches!(
            parse_vision_response(&raw),
            Err(VisionError::Schema { field, .. }) if field == "colors"
        ));
        let raw = json!({"image_id": "x", "labels": [{"score": 0.7}], "colors": []});
        assert!(matches!(
            parse_vision_response(&raw),
            Err(VisionError::Schema { field, .. }) if field == "labels[0].description"
        ));
        let raw = json!({"image_id": "x", "labels": [], "colors": [{"rgb": [1, 2, 300], "pixel_fraction": 0.1}]});
        assert!(matches!(
            parse_vision_response(&raw),
            Err(VisionError::Schema { field, .. }) if field == "colors[0].rgb[2]"
        ));
    }

    #[test]
    fn too_many_colors_rejected() {
        assert!(parse_vision_response(&response_with(1, 11)).is_err());
        assert!(parse_vision_response(&response_with(101, 1)).is_err());
    }

    #[test]
    fn cafe_sample_is_captured() {
        let ann = parse_vision_response(&cafe_response()).unwrap();
        let names: Vec<&str> = ann.labels.iter().map(|l| l.description.as_str()).collect();
        assert!(names.contains(&"food"));
        assert!(names.contains(&"tableware"));
        assert!(names.contains(&"sky"));
        assert!(ann.colors.iter().any(|c| c.rgb == [77, 153, 231]));
        assert_eq!(representative_color(&ann).unwrap(), [77, 153, 231]);
    }

    #[test]
    fn labels_are_normalized() {
        let raw = json!({"image_id": "x", "labels": [{"description": "  Human Body ", "score": 0.9}], "colors": []});
        assert_eq!(
            parse_vision_response(&raw).unwrap().labels[0].description,
            "human body"
        );
    }

    fn ann(labels: &[(&str, f64)], colors: &[([u8; 3], f64)]) -> ImageAnnotation {
        ImageAnnotation {
            image_id: "t".into(),
            labels: labels
                .iter()
                .map(|(d, s)| LabelAnnotation {
                    description: d.to_string(),
                    score: *s,
                })
                .collect(),
            colors: colors
                .iter()
                .map(|(rgb, f)| ColorAnnotation {
                    rgb: *rgb,
                    pixel_fraction: *f,
                })
                .collect(),
        }
    }

    #[test]
    fn filter_threshold_cases() {
        assert_eq!(
            filter_labels(&ann(&[("food", 0.9), ("sky", 0.49)], &[]), 0.5),
            vec!["food"]
        );
        assert_eq!(
            filter_labels(&ann(&[("a", 0.5), ("b", 0.7)], &[]), 0.5),
            vec!["a", "b"]
        );
        assert!(filter_labels(&ann(&[], &[]), 0.5).is_empty());
    }

    #[test]
    fn representative_color_cases() {
        assert_eq!(
            representative_color(&ann(&[], &[([1, 2, 3], 0.4)])).unwrap(),
            [1, 2, 3]
        );
        assert_eq!(
            representative_color(&ann(&[], &[([1, 1, 1], 0.3), ([2, 2, 2], 0.3)])).unwrap(),
            [1, 1, 1]
        );
        assert!(matches!(
            representative_color(&ann(&[], &[])),
            Err(VisionError::NoColor(_))
        ));
    }

    fn arb_annotation() -> impl Strategy<Value = ImageAnnotation> {
        (
            prop::collection::vec(("[a-z]{1,6}", 0.0f64..=1.0), 0..20),
            prop::collection::vec((any::<[u8; 3]>(), 0.0f64..=1.0), 1..10),
        )
            .prop_map(|(labels, colors)| ImageAnnotation {
                image_id: "p".into(),
                labels: labels
                    .into_iter()
                    .map(|(description, score)| LabelAnnotation { description, score })
                    .collect(),
                colors: colors
                    .into_iter()
                    .map(|(rgb, pixel_fraction)| ColorAnnotation {
                        rgb,
                        pixel_fraction,
                    })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn filter_is_monotone(a in arb_annotation(), lo in 0.0f64..1.0, bump in 0.0f64..1.0) {
            let hi = lo + bump;
            let kept_hi = filter_labels(&a, hi);
            let kept_lo = filter_labels(&a, lo);
            prop_assert!(kept_hi.len() <= kept_lo.len());
            for l in &kept_hi {
                prop_assert!(kept_lo.contains(l));
            }
        }

        #[test]
        fn representative_is_a_listed_color(a in arb_annotation()) {
            let rgb = representative_color(&a).unwrap();
            prop_assert!(a.colors.iter().any(|c| c.rgb == rgb));
            let max = a.colors.iter().map(|c| c.pixel_fraction).fold(f64::MIN, f64::max);
            let first = a.colors.iter().find(|c| c.pixel_fraction == max).unwrap();
            prop_assert_eq!(first.rgb, rgb);
        }

        #[test]
        fn every_valid_document_parses(a in arb_annotation()) {
            let raw = serde_json::to_value(&a).unwrap();
            let parsed = parse_vision_response(&raw).unwrap();
            prop_assert_eq!(parsed.labels.len(), a.labels.len());
            prop_assert_eq!(parsed.colors, a.colors);
        }
    }
}
