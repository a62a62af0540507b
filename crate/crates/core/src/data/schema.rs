use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a [`TagSchema`]'s tag inventory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagId(pub u16);

impl TagId {
    pub const OUTSIDE: TagId = TagId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What a tag says about the entity it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TagKind {
    Outside,
    Begin(usize),
    Inside(usize),
}

/// Entity types plus their IOB2 expansion.
///
/// Tag ids are laid out as `O`, then for each entity type in order `B-X`
/// followed by `I-X` when the type may span several tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagSchema {
    entity_types: Vec<String>,
    multi_token: Vec<bool>,
    tags: Vec<String>,
    kinds: Vec<TagKind>,
    begin: Vec<TagId>,
    inside: Vec<Option<TagId>>,
    by_name: HashMap<String, TagId>,
}

/// The 14 default entity types; `false` marks the single-token-only ones.
const DEFAULT_TYPES: [(&str, bool); 14] = [
    ("COUNTRY", true),
    ("CITY", true),
    ("DISTRICT", true),
    ("NEIGHBORHOOD", true),
    ("VILLAGE", true),
    ("STREET", true),
    ("AVENUE", true),
    ("BUILDING", true),
    ("SITE", true),
    ("BLOCK", false),
    ("FLOOR", false),
    ("DOOR", false),
    ("POSTCODE", false),
    ("POI", true),
];

fn valid_type_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

impl TagSchema {
    /// Build a schema from `(type name, may span multiple tokens)` pairs.
    pub fn new<S: Into<String>>(types: impl IntoIterator<Item = (S, bool)>) -> Result<Self> {
        let mut entity_types = Vec::new();
        let mut multi_token = Vec::new();
        for (name, multi) in types {
            let name = name.into();
            if !valid_type_name(&name) {
                return Err(Error::InvalidSchema(format!(
                    "`{name}` is not an uppercase ASCII identifier"
                )));
            }
            if entity_types.contains(&name) {
                return Err(Error::InvalidSchema(format!("duplicate entity type `{name}`")));
            }
            entity_types.push(name);
            multi_token.push(multi);
        }
        if entity_types.is_empty() {
            return Err(Error::InvalidSchema("no entity types".into()));
        }

        let mut tags = vec!["O".to_string()];
        let mut kinds = vec![TagKind::Outside];
        let mut begin = Vec::with_capacity(entity_types.len());
        let mut inside = Vec::with_capacity(entity_types.len());
        for (e, name) in entity_types.iter().enumerate() {
            begin.push(TagId(tags.len() as u16));
            tags.push(format!("B-{name}"));
            kinds.push(TagKind::Begin(e));
            if multi_token[e] {
                inside.push(Some(TagId(tags.len() as u16)));
                tags.push(format!("I-{name}"));
                kinds.push(TagKind::Inside(e));
            } else {
                inside.push(None);
            }
        }
        if tags.len() > u16::MAX as usize {
            return Err(Error::InvalidSchema("too many tags".into()));
        }
        let by_name = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TagId(i as u16)))
            .collect();
        Ok(Self {
            entity_types,
            multi_token,
            tags,
            kinds,
            begin,
            inside,
            by_name,
        })
    }

    /// Parse the line-oriented schema format: one entity type per line, a
    /// trailing `*` marks a single-token-only type. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut types = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, multi) = match line.strip_suffix('*') {
                Some(name) => (name.trim_end(), false),
                None => (line, true),
            };
            if !valid_type_name(name) {
                return Err(Error::Parse {
                    line: i + 1,
                    column: 1,
                    message: format!("`{name}` is not an uppercase ASCII identifier"),
                });
            }
            types.push((name.to_string(), multi));
        }
        Self::new(types)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, multi) in self.entity_types.iter().zip(&self.multi_token) {
            out.push_str(name);
            if !multi {
                out.push('*');
            }
            out.push('\n');
        }
        out
    }

    pub fn entity_types(&self) -> &[String] {
        &self.entity_types
    }

    pub fn is_multi_token(&self, entity: usize) -> bool {
        self.multi_token[entity]
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entity_types.iter().position(|t| t == name)
    }

    pub fn tag_count(&self) -> usize {
        self.tags.len()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag_name(&self, id: TagId) -> &str {
        &self.tags[id.index()]
    }

    pub fn tag_id(&self, name: &str) -> Option<TagId> {
        self.by_name.get(name).copied()
    }

    pub fn kind(&self, id: TagId) -> TagKind {
        self.kinds[id.index()]
    }

    pub fn begin(&self, entity: usize) -> TagId {
        self.begin[entity]
    }

    pub fn inside(&self, entity: usize) -> Option<TagId> {
        self.inside[entity]
    }

    pub fn entity_of(&self, id: TagId) -> Option<usize> {
        match self.kind(id) {
            TagKind::Outside => None,
            TagKind::Begin(e) | TagKind::Inside(e) => Some(e),
        }
    }

    pub fn contains(&self, id: TagId) -> bool {
        id.index() < self.tags.len()
    }

    /// Check IOB2 well-formedness of a sequence of tag ids.
    pub fn check_iob(&self, tags: &[TagId]) -> Result<()> {
        let mut prev: Option<usize> = None;
        for (index, &tag) in tags.iter().enumerate() {
            if !self.contains(tag) {
                return Err(Error::UnknownTag(tag.to_string()));
            }
            prev = match self.kind(tag) {
                TagKind::Outside => None,
                TagKind::Begin(e) => Some(e),
                TagKind::Inside(e) => match prev {
                    Some(p) if p == e => Some(e),
                    Some(p) => {
                        return Err(Error::IobViolation {
                            index,
                            reason: format!(
                                "{} follows an entity of type {}",
                                self.tag_name(tag),
                                self.entity_types[p]
                            ),
                        })
                    }
                    None => {
                        return Err(Error::IobViolation {
                            index,
                            reason: format!("{} has no opening B- tag", self.tag_name(tag)),
                        })
                    }
                },
            };
        }
        Ok(())
    }
}

impl Default for TagSchema {
    fn default() -> Self {
        default_schema()
    }
}

/// The built-in address schema: 14 entity types, 4 of them single-token,
/// giving 25 IOB tags.
pub fn default_schema() -> TagSchema {
    TagSchema::new(DEFAULT_TYPES).expect("default schema is valid")
}

/// Validate a tag sequence given by name.
///
/// Returns [`Error::UnknownTag`] for names outside the schema and
/// [`Error::IobViolation`] for the first ill-formed position.
pub fn validate_iob<S: AsRef<str>>(tags: &[S], schema: &TagSchema) -> Result<()> {
    let ids = tags
        .iter()
        .map(|t| {
            schema
                .tag_id(t.as_ref())
                .ok_or_else(|| Error::UnknownTag(t.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    schema.check_iob(&ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_inventory() {
        let s = default_schema();
        assert_eq!(s.entity_types().len(), 14);
        assert_eq!(s.tag_count(), 25);
        assert_eq!(s.tags().iter().filter(|t| *t == "O").count(), 1);
        assert_eq!(s.tag_id("O"), Some(TagId::OUTSIDE));
        assert!(s.tag_id("I-DOOR").is_none());
        assert!(s.tag_id("I-POI").is_some());
    }

    #[test]
    fn iob_examples() {
        let s = default_schema();
        validate_iob(&["B-POI", "I-POI", "B-POI", "I-POI"], &s).unwrap();
        match validate_iob(&["O", "I-CITY"], &s) {
            Err(Error::IobViolation { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match validate_iob(&["B-CITY", "I-POI"], &s) {
            Err(Error::IobViolation { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            validate_iob(&["B-NOPE"], &s),
            Err(Error::UnknownTag(t)) if t == "B-NOPE"
        ));
    }

    #[test]
    fn leading_inside_is_a_violation() {
        let s = default_schema();
        assert!(matches!(
            validate_iob(&["I-POI"], &s),
            Err(Error::IobViolation { index: 0, .. })
        ));
    }

    #[test]
    fn schema_file_round_trip() {
        let s = default_schema();
        let text = s.to_text();
        assert!(text.contains("DOOR*\n"));
        assert_eq!(TagSchema::parse(&text).unwrap(), s);
    }

    #[test]
    fn schema_rejects_bad_names() {
        assert!(TagSchema::parse("city\n").is_err());
        assert!(TagSchema::parse("CITY\nCITY\n").is_err());
        assert!(TagSchema::parse("\n# nothing\n").is_err());
        let s = TagSchema::parse("# comment\nPOI\nDOOR *\n").unwrap();
        assert_eq!(s.tags(), &["O", "B-POI", "I-POI", "B-DOOR"]);
    }
}
