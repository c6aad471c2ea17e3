//! JSON files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{GcsError, Result};
use crate::gcs::{Gcs, GcsDocument};

/// Parse a JSON file; errors carry the line, column and field path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    parse_json(&text, &path.display().to_string())
}

pub fn parse_json<T: DeserializeOwned>(text: &str, file: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = if field == "." { inner.to_string() } else { format!("at `{field}`: {inner}") };
        GcsError::Parse { file: file.to_string(), message }
    })
}

/// Pretty JSON with a trailing newline. Output is a pure function of the
/// value, so equal values give byte-identical files.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Read and validate an instance file.
pub fn load_instance(path: &Path) -> Result<Gcs> {
    let doc: GcsDocument = read_json(path)?;
    Gcs::from_document(&doc)
}

pub fn save_instance(path: &Path, g: &Gcs) -> Result<()> {
    write_json(path, &g.to_document())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_name_the_field() {
        let text = r#"{"vertices": [{"id": "s", "set": {"type": "point", "point": [0.0]}, "cots": null}],
            "edges": [], "source": "s", "target": "s", "source_point": [0.0], "target_point": [0.0]}"#;
        let err = parse_json::<GcsDocument>(text, "x.json").unwrap_err().to_string();
        assert!(err.contains("vertices[0]") && err.contains("cots") && err.contains("line 1"), "{err}");
    }

    #[test]
    fn round_trip() {
        let g = crate::library::build_planar_instance().unwrap();
        let s = to_json_string(&g.to_document()).unwrap();
        let doc: GcsDocument = parse_json(&s, "mem").unwrap();
        assert_eq!(to_json_string(&doc).unwrap(), s);
    }
}
