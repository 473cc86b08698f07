//! Name-keyed registries for runtime-selectable strategies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Maps names to strategy values (trait objects, factories or plain data).
///
/// Lookups are case-insensitive; names are stored lower-case.
#[derive(Clone)]
pub struct Registry<T> {
    kind: &'static str,
    entries: BTreeMap<String, T>,
}

impl<T> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `value` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &str, value: T) -> &mut Self {
        self.entries.insert(name.to_ascii_lowercase(), value);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .get(&name.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(&name.to_ascii_lowercase())
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

impl<T> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names())
            .finish()
    }
}
