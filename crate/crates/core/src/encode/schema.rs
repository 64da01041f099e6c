use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_SCHEMA: &str = include_str!("default_schema.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrCategory {
    Context,
    Action,
    Outcome,
}

impl AttrCategory {
    pub const ALL: [AttrCategory; 3] = [AttrCategory::Context, AttrCategory::Action, AttrCategory::Outcome];

    pub fn name(self) -> &'static str {
        match self {
            AttrCategory::Context => "context",
            AttrCategory::Action => "action",
            AttrCategory::Outcome => "outcome",
        }
    }
}

impl fmt::Display for AttrCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDescriptor {
    pub name: String,
    pub category: AttrCategory,
    pub values: Vec<String>,
    #[serde(default = "one")]
    pub weight: u32,
}

fn one() -> u32 {
    1
}

impl AttributeDescriptor {
    pub fn value_index(&self, symbol: &str) -> Option<usize> {
        self.values.iter().position(|v| v == symbol)
    }

    /// `category.name`, e.g. `context.arg.side`.
    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.category, self.name)
    }
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("cannot read schema: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid schema file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("attribute `{0}` appears twice in its category")]
    Duplicate(String),
    #[error("attribute `{0}` needs at least two values")]
    SmallDomain(String),
    #[error("attribute `{0}` repeats a value")]
    RepeatedValue(String),
    #[error("weight given for unknown attribute `{0}`")]
    UnknownWeight(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    #[serde(rename = "attribute")]
    attributes: Vec<AttributeDescriptor>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeDescriptor>) -> Result<AttributeSchema, SchemaError> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &attributes {
            if !seen.insert((a.category, a.name.clone())) {
                return Err(SchemaError::Duplicate(a.qualified_name()));
            }
            if a.values.len() < 2 {
                return Err(SchemaError::SmallDomain(a.qualified_name()));
            }
            let distinct: std::collections::BTreeSet<_> = a.values.iter().collect();
            if distinct.len() != a.values.len() {
                return Err(SchemaError::RepeatedValue(a.qualified_name()));
            }
        }
        Ok(AttributeSchema { attributes })
    }

    pub fn from_toml_str(text: &str) -> Result<AttributeSchema, SchemaError> {
        let raw: AttributeSchema = toml::from_str(text)?;
        AttributeSchema::new(raw.attributes)
    }

    pub fn load(path: &Path) -> Result<AttributeSchema, SchemaError> {
        AttributeSchema::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn attributes(&self) -> &[AttributeDescriptor] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, category: AttrCategory, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.category == category && a.name == name)
    }

    pub fn count(&self, category: AttrCategory) -> usize {
        self.attributes.iter().filter(|a| a.category == category).count()
    }

    /// Override weights; keys are qualified names such as `context.arg.side`.
    pub fn apply_weights(&mut self, weights: &BTreeMap<String, u32>) -> Result<(), SchemaError> {
        for (key, w) in weights {
            let a = self
                .attributes
                .iter_mut()
                .find(|a| &a.qualified_name() == key)
                .ok_or_else(|| SchemaError::UnknownWeight(key.clone()))?;
            a.weight = *w;
        }
        Ok(())
    }
}

impl Default for AttributeSchema {
    fn default() -> AttributeSchema {
        AttributeSchema::from_toml_str(DEFAULT_SCHEMA).expect("embedded schema is valid")
    }
}
