//! Structured-output extraction: find the first JSON value in free text that
//! satisfies a schema descriptor.

use serde_json::Value;

use crate::error::{Error, Result};

/// Expected kind of a required top-level key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    String,
    Number,
    Bool,
    Array,
    Object,
    /// Array whose elements are all strings.
    StringArray,
}

impl FieldKind {
    fn accepts(&self, v: &Value) -> bool {
        match self {
            FieldKind::String => v.is_string(),
            FieldKind::Number => v.is_number(),
            FieldKind::Bool => v.is_boolean(),
            FieldKind::Array => v.is_array(),
            FieldKind::Object => v.is_object(),
            FieldKind::StringArray => v
                .as_array()
                .map_or(false, |a| a.iter().all(Value::is_string)),
        }
    }
}

/// Required keys and value kinds of the JSON object we are looking for.
#[derive(Clone, Debug, Default)]
pub struct Schema {
    required: Vec<(String, FieldKind)>,
}

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    pub fn require(mut self, key: impl Into<String>, kind: FieldKind) -> Self {
        self.required.push((key.into(), kind));
        self
    }

    /// `Ok` on match, otherwise the missing and mistyped key names.
    fn check(&self, v: &Value) -> std::result::Result<(), (Vec<String>, Vec<String>)> {
        if self.required.is_empty() {
            return Ok(());
        }
        let obj = match v.as_object() {
            Some(o) => o,
            None => {
                return Err((
                    self.required.iter().map(|(k, _)| k.clone()).collect(),
                    vec![],
                ))
            }
        };
        let mut missing = Vec::new();
        let mut mistyped = Vec::new();
        for (key, kind) in &self.required {
            match obj.get(key) {
                None => missing.push(key.clone()),
                Some(value) if !kind.accepts(value) => mistyped.push(key.clone()),
                Some(_) => {}
            }
        }
        if missing.is_empty() && mistyped.is_empty() {
            Ok(())
        } else {
            Err((missing, mistyped))
        }
    }
}

/// Returns the first well-formed JSON value in `text` that satisfies the
/// schema. Fenced code blocks are scanned first, then the whole text;
/// balanced `{...}`/`[...]` substrings are tried left to right by start
/// position, so a failing outer object does not hide a passing inner one.
pub fn extract_structured(text: &str, schema: &Schema) -> Result<Value> {
    let mut first_mismatch: Option<(Vec<String>, Vec<String>)> = None;
    let mut found_any = false;

    let mut regions: Vec<&str> = fenced_blocks(text);
    regions.push(text);

    for region in regions {
        if let Some(value) = scan_region(region, schema, &mut first_mismatch, &mut found_any) {
            return Ok(value);
        }
    }
    if !found_any {
        return Err(Error::NoJsonFound);
    }
    let (missing, mistyped) = first_mismatch.unwrap_or_default();
    Err(Error::SchemaMismatch { missing, mistyped })
}

fn scan_region(
    region: &str,
    schema: &Schema,
    first_mismatch: &mut Option<(Vec<String>, Vec<String>)>,
    found_any: &mut bool,
) -> Option<Value> {
    let bytes = region.as_bytes();
    for (start, &b) in bytes.iter().enumerate() {
        if b != b'{' && b != b'[' {
            continue;
        }
        let Some(end) = balanced_end(bytes, start) else {
            continue;
        };
        let candidate = &region[start..=end];
        let Ok(value) = serde_json::from_str::<Value>(candidate) else {
            continue;
        };
        *found_any = true;
        match schema.check(&value) {
            Ok(()) => return Some(value),
            Err(mismatch) => {
                first_mismatch.get_or_insert(mismatch);
            }
        }
    }
    None
}

/// Contents of ```-fenced blocks, in order, language tag stripped.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    let mut offset = 0;
    while let Some(open) = rest.find("```") {
        let after_open = offset + open + 3;
        let Some(tag_end) = text[after_open..].find('\n') else {
            break;
        };
        let body_start = after_open + tag_end + 1;
        let Some(close) = text[body_start..].find("```") else {
            break;
        };
        blocks.push(&text[body_start..body_start + close]);
        offset = body_start + close + 3;
        rest = &text[offset..];
    }
    blocks
}

/// Index of the closer balancing the bracket at `start`, honoring JSON
/// string literals and escapes.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' | b'[' => depth += 1,
            b'}' | b']' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn keep_schema() -> Schema {
        Schema::new().require("keep", FieldKind::StringArray)
    }

    #[test]
    fn fenced_block_preferred() {
        let text = "Keep these:\n```json\n{\"keep\":[\"algorithm\"]}\n```";
        let v = extract_structured(text, &keep_schema()).unwrap();
        assert_eq!(v, json!({"keep": ["algorithm"]}));
    }

    #[test]
    fn prose_only_is_no_json() {
        assert!(matches!(
            extract_structured("prose only", &keep_schema()),
            Err(Error::NoJsonFound)
        ));
    }

    #[test]
    fn second_block_passes_schema() {
        // first JSON value fails the schema, the later one passes
        let text = r#"{"nope": 1} and then {"keep": ["a", "b"]}"#;
        let v = extract_structured(text, &keep_schema()).unwrap();
        assert_eq!(v, json!({"keep": ["a", "b"]}));
    }

    #[test]
    fn nested_object_can_match() {
        let text = r#"{"wrapper": {"keep": ["a"]}}"#;
        let v = extract_structured(text, &keep_schema()).unwrap();
        assert_eq!(v, json!({"keep": ["a"]}));
    }

    #[test]
    fn schema_mismatch_lists_keys() {
        let text = r#"{"keep": "not-a-list"}"#;
        match extract_structured(text, &keep_schema()) {
            Err(Error::SchemaMismatch { missing, mistyped }) => {
                assert!(missing.is_empty());
                assert_eq!(mistyped, vec!["keep".to_string()]);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn braces_inside_strings_do_not_confuse() {
        let text = r#"note: "{" is fine. {"keep": ["x{y"]}"#;
        let v = extract_structured(text, &keep_schema()).unwrap();
        assert_eq!(v, json!({"keep": ["x{y"]}));
    }

    #[test]
    fn empty_schema_takes_first_value() {
        let text = "numbers: [1, 2, 3] and {\"a\": 1}";
        let v = extract_structured(text, &Schema::new()).unwrap();
        assert_eq!(v, json!([1, 2, 3]));
    }
}
