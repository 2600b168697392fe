//! Versioned prompt templates with `{space}`, `{history}`, `{analysis}`,
//! `{strategy}`, and `{n}` placeholders. Defaults are embedded; a template
//! directory (one file per role) can override them.

use std::path::Path;

use crate::config_space::{ConfigOption, ConfigSpace};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct PromptTemplates {
    pub filter: String,
    pub analyzer: String,
    pub designer: String,
    pub generator: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            filter: include_str!("../../prompts/filter.txt").to_string(),
            analyzer: include_str!("../../prompts/analyzer.txt").to_string(),
            designer: include_str!("../../prompts/designer.txt").to_string(),
            generator: include_str!("../../prompts/generator.txt").to_string(),
        }
    }
}

impl PromptTemplates {
    /// Loads `filter.txt`, `analyzer.txt`, `designer.txt`, and
    /// `generator.txt` from a directory.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        Ok(PromptTemplates {
            filter: std::fs::read_to_string(dir.join("filter.txt"))?,
            analyzer: std::fs::read_to_string(dir.join("analyzer.txt"))?,
            designer: std::fs::read_to_string(dir.join("designer.txt"))?,
            generator: std::fs::read_to_string(dir.join("generator.txt"))?,
        })
    }
}

pub(super) fn substitute(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// Space rendering used in prompts: one option per line with kind, values,
/// and (when available) the documented description.
pub(super) fn render_space(space: &ConfigSpace, docs: Option<&[ConfigOption]>) -> String {
    space
        .options()
        .iter()
        .map(|opt| {
            let values = opt
                .values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let description = docs
                .and_then(|d| d.iter().find(|o| o.name == opt.name))
                .map(|o| o.description.as_str())
                .filter(|d| !d.is_empty())
                .or(if opt.description.is_empty() { None } else { Some(&opt.description) });
            match description {
                Some(d) => format!("- {} ({:?}): [{}] — {}", opt.name, opt.kind, values, d),
                None => format!("- {} ({:?}): [{}]", opt.name, opt.kind, values),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_have_placeholders() {
        let t = PromptTemplates::default();
        assert!(t.filter.contains("{space}"));
        assert!(t.analyzer.contains("{history}"));
        assert!(t.designer.contains("{analysis}") && t.designer.contains("{n}"));
        assert!(t.generator.contains("{strategy}") && t.generator.contains("{n}"));
    }

    #[test]
    fn substitution_replaces_all() {
        let s = substitute("a {x} b {x} {y}", &[("x", "1"), ("y", "2")]);
        assert_eq!(s, "a 1 b 1 2");
    }

    #[test]
    fn directory_overrides_load() {
        let dir = tempfile::tempdir().unwrap();
        for role in ["filter", "analyzer", "designer", "generator"] {
            std::fs::write(dir.path().join(format!("{role}.txt")), format!("custom {role} {{space}}"))
                .unwrap();
        }
        let t = PromptTemplates::from_dir(dir.path()).unwrap();
        assert_eq!(t.filter, "custom filter {space}");
        assert_eq!(t.generator, "custom generator {space}");
        assert!(PromptTemplates::from_dir(&dir.path().join("missing")).is_err());
    }
}
