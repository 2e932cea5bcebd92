//! Themed GeoJSON feature collections (buildings, vendors, residential).

use serde_json::{Map, Value};

use super::{IngestError, Theme};
use crate::geometry::Point2;
use crate::polygon::open_ring;

/// Property keys consulted, in order, for a building height in meters.
const HEIGHT_KEYS: [&str; 4] = ["height", "building:height", "HEIGHT", "Height"];

/// Height applied when a building carries no usable height property.
pub const DEFAULT_BUILDING_HEIGHT_M: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub default_height_m: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { default_height_m: DEFAULT_BUILDING_HEIGHT_M }
    }
}

/// A feature in geographic coordinates (`x` = longitude, `y` = latitude).
#[derive(Debug, Clone, PartialEq)]
pub enum GeoFeature {
    Building { ring: Vec<Point2>, height_m: f64 },
    VendorPoint(Point2),
    VendorArea(Vec<Point2>),
    Residential(Vec<Point2>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTheme {
    pub features: Vec<GeoFeature>,
    /// Features dropped for an unsupported or invalid geometry.
    pub skipped: usize,
    /// Buildings that fell back to the default height.
    pub missing_height: usize,
    pub warnings: Vec<String>,
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    for (i, b) in bytes.iter().enumerate() {
        if current == line {
            return (i + column.saturating_sub(1)).min(bytes.len());
        }
        if *b == b'\n' {
            current += 1;
        }
    }
    bytes.len()
}

fn parse_height(props: Option<&Map<String, Value>>) -> Option<f64> {
    let props = props?;
    HEIGHT_KEYS.iter().find_map(|k| match props.get(*k)? {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => {
            let s = s.trim();
            let end = s
                .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+'))
                .unwrap_or(s.len());
            s[..end].parse::<f64>().ok()
        }
        _ => None,
    })
    .filter(|h| h.is_finite() && *h >= 0.0)
}

fn position(v: &Value) -> Option<Point2> {
    let arr = v.as_array()?;
    let x = arr.first()?.as_f64()?;
    let y = arr.get(1)?.as_f64()?;
    Point2::try_new(x, y).ok()
}

fn ring(v: &Value) -> Option<Vec<Point2>> {
    let pts: Option<Vec<Point2>> = v.as_array()?.iter().map(position).collect();
    let mut pts = open_ring(pts?);
    pts.dedup();
    (pts.len() >= 3).then_some(pts)
}

/// Exterior rings of a Polygon or MultiPolygon; holes are ignored.
fn exteriors(kind: &str, coords: &Value) -> Option<Vec<Vec<Point2>>> {
    match kind {
        "Polygon" => Some(vec![ring(coords.as_array()?.first()?)?]),
        "MultiPolygon" => coords
            .as_array()?
            .iter()
            .map(|poly| ring(poly.as_array()?.first()?))
            .collect(),
        _ => None,
    }
}

/// Parses a GeoJSON FeatureCollection for one data theme.
///
/// Buildings yield footprints with a height (falling back to
/// `opts.default_height_m`); vendors yield points or areas; residential
/// yields areas. Features with other geometry types are skipped and
/// counted.
pub fn parse_theme_geojson(
    bytes: &[u8],
    theme: Theme,
    opts: &ParseOptions,
) -> Result<ParsedTheme, IngestError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| IngestError::Json {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::NotFeatureCollection);
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or(IngestError::NotFeatureCollection)?;

    let mut out = ParsedTheme::default();
    for (idx, feature) in features.iter().enumerate() {
        let geometry = feature.get("geometry").filter(|g| !g.is_null());
        let kind = geometry
            .and_then(|g| g.get("type"))
            .and_then(Value::as_str)
            .unwrap_or("<none>");
        let coords = geometry.and_then(|g| g.get("coordinates"));
        let skip = |out: &mut ParsedTheme, why: &str| {
            out.skipped += 1;
            out.warnings.push(format!("{theme} feature {idx}: {why}"));
        };
        let Some(coords) = coords else {
            skip(&mut out, &format!("no coordinates for geometry `{kind}`"));
            continue;
        };
        match (theme, kind) {
            (Theme::Buildings, "Polygon" | "MultiPolygon") => {
                let Some(rings) = exteriors(kind, coords) else {
                    skip(&mut out, "invalid polygon coordinates");
                    continue;
                };
                let props = feature.get("properties").and_then(Value::as_object);
                let height_m = parse_height(props).unwrap_or_else(|| {
                    out.missing_height += 1;
                    opts.default_height_m
                });
                out.features
                    .extend(rings.into_iter().map(|ring| GeoFeature::Building { ring, height_m }));
            }
            (Theme::Vendors, "Point") => match position(coords) {
                Some(p) => out.features.push(GeoFeature::VendorPoint(p)),
                None => skip(&mut out, "invalid point coordinates"),
            },
            (Theme::Vendors, "MultiPoint") => match coords.as_array().map(|a| a.iter().map(position).collect::<Option<Vec<_>>>()) {
                Some(Some(ps)) => out.features.extend(ps.into_iter().map(GeoFeature::VendorPoint)),
                _ => skip(&mut out, "invalid multipoint coordinates"),
            },
            (Theme::Vendors, "Polygon" | "MultiPolygon") => match exteriors(kind, coords) {
                Some(rings) => out.features.extend(rings.into_iter().map(GeoFeature::VendorArea)),
                None => skip(&mut out, "invalid polygon coordinates"),
            },
            (Theme::Residential, "Polygon" | "MultiPolygon") => match exteriors(kind, coords) {
                Some(rings) => out.features.extend(rings.into_iter().map(GeoFeature::Residential)),
                None => skip(&mut out, "invalid polygon coordinates"),
            },
            (_, other) => skip(&mut out, &format!("unsupported geometry `{other}`")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"[[[-122.42,37.77],[-122.4199,37.77],[-122.4199,37.7701],[-122.42,37.7701],[-122.42,37.77]]]"#;

    fn collection(features: &[String]) -> Vec<u8> {
        format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, features.join(",")).into_bytes()
    }

    fn polygon(props: &str) -> String {
        format!(r#"{{"type":"Feature","properties":{props},"geometry":{{"type":"Polygon","coordinates":{SQUARE}}}}}"#)
    }

    #[test]
    fn one_building_with_height() {
        let parsed = parse_theme_geojson(&collection(&[polygon(r#"{"height":30}"#)]), Theme::Buildings, &ParseOptions::default()).unwrap();
        assert_eq!(parsed.features.len(), 1);
        match &parsed.features[0] {
            GeoFeature::Building { ring, height_m } => {
                assert_eq!(ring.len(), 4);
                assert_eq!(*height_m, 30.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parsed.missing_height, 0);
    }

    #[test]
    fn missing_height_uses_default() {
        let opts = ParseOptions { default_height_m: 12.5 };
        let parsed = parse_theme_geojson(&collection(&[polygon("{}"), polygon(r#"{"height":"21.5 m"}"#)]), Theme::Buildings, &opts).unwrap();
        assert_eq!(parsed.missing_height, 1);
        let heights: Vec<f64> = parsed
            .features
            .iter()
            .map(|f| match f {
                GeoFeature::Building { height_m, .. } => *height_m,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(heights, vec![12.5, 21.5]);
    }

    #[test]
    fn point_under_buildings_is_skipped() {
        let point = r#"{"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[-122.4,37.7]}}"#.to_string();
        let parsed = parse_theme_geojson(&collection(&[point, polygon("{}")]), Theme::Buildings, &ParseOptions::default()).unwrap();
        assert_eq!(parsed.skipped, 1);
        assert_eq!(parsed.features.len(), 1);
        assert!(parsed.warnings[0].contains("Point"));
    }

    #[test]
    fn vendors_accept_points_and_areas() {
        let point = r#"{"type":"Feature","properties":null,"geometry":{"type":"Point","coordinates":[-122.4,37.7]}}"#.to_string();
        let line = r#"{"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}}"#.to_string();
        let parsed = parse_theme_geojson(&collection(&[point, polygon("{}"), line]), Theme::Vendors, &ParseOptions::default()).unwrap();
        assert!(matches!(parsed.features[0], GeoFeature::VendorPoint(_)));
        assert!(matches!(parsed.features[1], GeoFeature::VendorArea(_)));
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn malformed_json_reports_offset() {
        let bad = b"{\"type\":\"FeatureCollection\",\n \"features\": [,]}";
        match parse_theme_geojson(bad, Theme::Residential, &ParseOptions::default()) {
            Err(IngestError::Json { offset, .. }) => assert_eq!(bad[offset], b','),
            other => panic!("expected json error, got {other:?}"),
        }
    }

    #[test]
    fn non_collection_rejected() {
        assert!(matches!(
            parse_theme_geojson(br#"{"type":"Feature"}"#, Theme::Residential, &ParseOptions::default()),
            Err(IngestError::NotFeatureCollection)
        ));
    }
}
