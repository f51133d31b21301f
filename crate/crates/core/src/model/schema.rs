use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ModelError;

pub const MODEL_FORMAT: &str = "dca-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
}

impl Entity {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub members: Vec<String>,
}

impl Category {
    pub fn new(id: impl Into<String>, label: impl Into<String>, members: &[&str]) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            members: members.iter().map(|m| m.to_string()).collect(),
        }
    }
}

/// Problems, causes and effects with their category memberships.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseEffectModel {
    pub version: String,
    pub problems: Vec<Entity>,
    pub cause_categories: Vec<Category>,
    pub causes: Vec<Entity>,
    #[serde(default)]
    pub effect_categories: Vec<Category>,
    #[serde(default)]
    pub effects: Vec<Entity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Problem,
    CauseCategory,
    Cause,
    EffectCategory,
    Effect,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    format_version: u32,
    #[serde(flatten)]
    model: CauseEffectModel,
}

impl CauseEffectModel {
    pub fn kind_of(&self, id: &str) -> Option<EntityKind> {
        if self.problems.iter().any(|e| e.id == id) {
            Some(EntityKind::Problem)
        } else if self.causes.iter().any(|e| e.id == id) {
            Some(EntityKind::Cause)
        } else if self.effects.iter().any(|e| e.id == id) {
            Some(EntityKind::Effect)
        } else if self.cause_categories.iter().any(|c| c.id == id) {
            Some(EntityKind::CauseCategory)
        } else if self.effect_categories.iter().any(|c| c.id == id) {
            Some(EntityKind::EffectCategory)
        } else {
            None
        }
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.problems
            .iter()
            .chain(&self.causes)
            .chain(&self.effects)
            .find(|e| e.id == id)
            .map(|e| e.label.as_str())
            .or_else(|| {
                self.cause_categories
                    .iter()
                    .chain(&self.effect_categories)
                    .find(|c| c.id == id)
                    .map(|c| c.label.as_str())
            })
    }

    /// The cause category containing `cause_id`.
    pub fn category_of_cause(&self, cause_id: &str) -> Option<&Category> {
        self.cause_categories
            .iter()
            .find(|c| c.members.iter().any(|m| m == cause_id))
    }

    /// Every invariant violation, in a stable order.
    pub fn issues(&self) -> Vec<ModelError> {
        let mut issues = Vec::new();
        if self.problems.is_empty() {
            issues.push(ModelError::NoProblems);
        }
        let mut seen = BTreeSet::new();
        let all_ids = self
            .problems
            .iter()
            .map(|e| &e.id)
            .chain(self.cause_categories.iter().map(|c| &c.id))
            .chain(self.causes.iter().map(|e| &e.id))
            .chain(self.effect_categories.iter().map(|c| &c.id))
            .chain(self.effects.iter().map(|e| &e.id));
        for id in all_ids {
            if id.is_empty() {
                issues.push(ModelError::EmptyId);
            } else if !seen.insert(id.as_str()) {
                issues.push(ModelError::DuplicateId(id.clone()));
            }
        }
        check_memberships(&self.causes, &self.cause_categories, "cause", &mut issues);
        check_memberships(
            &self.effects,
            &self.effect_categories,
            "effect",
            &mut issues,
        );
        issues
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self.issues().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Non-fatal remarks, e.g. categories without members.
    pub fn warnings(&self) -> Vec<String> {
        let causes = self
            .cause_categories
            .iter()
            .filter(|c| c.members.is_empty())
            .map(|c| {
                format!(
                    "cause category {} has no members and becomes a root node with a learned prior",
                    c.id
                )
            });
        let effects = self
            .effect_categories
            .iter()
            .filter(|c| c.members.is_empty())
            .map(|c| format!("effect category {} has no members", c.id));
        causes.chain(effects).collect()
    }

    pub fn to_document(&self) -> String {
        let doc = ModelDocument {
            format: MODEL_FORMAT.to_string(),
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
    }
}

fn check_memberships(
    entities: &[Entity],
    categories: &[Category],
    what: &'static str,
    issues: &mut Vec<ModelError>,
) {
    let known: BTreeSet<&str> = entities.iter().map(|e| e.id.as_str()).collect();
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for cat in categories {
        for m in &cat.members {
            if !known.contains(m.as_str()) {
                issues.push(ModelError::OrphanMemberReference {
                    category: cat.id.clone(),
                    member: m.clone(),
                });
                continue;
            }
            if let Some(first) = owner.insert(m.as_str(), cat.id.as_str()) {
                if first != cat.id {
                    issues.push(ModelError::MultipleCategories {
                        kind: what,
                        id: m.clone(),
                        categories: [first.to_string(), cat.id.clone()],
                    });
                } else {
                    issues.push(ModelError::DuplicateId(m.clone()));
                }
            }
        }
    }
    for e in entities {
        if !owner.contains_key(e.id.as_str()) {
            issues.push(ModelError::Uncategorized {
                kind: what,
                id: e.id.clone(),
            });
        }
    }
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<CauseEffectModel, ModelError> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    if doc.format != MODEL_FORMAT {
        return Err(ModelError::Parse(format!(
            "expected format {MODEL_FORMAT}, found {}",
            doc.format
        )));
    }
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(ModelError::Parse(format!(
            "unsupported format_version {}",
            doc.format_version
        )));
    }
    doc.model.validate()?;
    Ok(doc.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal() -> CauseEffectModel {
        CauseEffectModel {
            version: "1".into(),
            problems: vec![Entity::new("P1", "Problem")],
            cause_categories: vec![Category::new("K1", "people", &["c1"])],
            causes: vec![Entity::new("c1", "Cause")],
            effect_categories: vec![],
            effects: vec![],
        }
    }

    #[test]
    fn minimal_model_is_valid() {
        assert!(minimal().validate().is_ok());
        let text = minimal().to_document();
        assert_eq!(parse_model(&text).unwrap(), minimal());
    }

    #[test]
    fn cause_in_two_categories() {
        let mut m = minimal();
        m.cause_categories
            .push(Category::new("K2", "input", &["c1"]));
        assert!(matches!(
            m.validate(),
            Err(ModelError::MultipleCategories { kind: "cause", .. })
        ));
    }

    #[test]
    fn duplicate_ids_across_entity_kinds() {
        let mut m = minimal();
        m.effects.push(Entity::new("P1", "clash"));
        assert!(m.issues().contains(&ModelError::DuplicateId("P1".into())));
    }

    #[test]
    fn orphan_member_and_missing_problem() {
        let mut m = minimal();
        m.problems.clear();
        m.cause_categories[0].members.push("ghost".into());
        let issues = m.issues();
        assert_eq!(issues[0], ModelError::NoProblems);
        assert!(issues.iter().any(
            |e| matches!(e, ModelError::OrphanMemberReference { member, .. } if member == "ghost")
        ));
    }

    #[test]
    fn uncategorized_cause() {
        let mut m = minimal();
        m.causes.push(Entity::new("c2", "stray"));
        assert!(m.issues().contains(&ModelError::Uncategorized {
            kind: "cause",
            id: "c2".into()
        }));
    }

    #[test]
    fn empty_category_is_a_warning_only() {
        let mut m = minimal();
        m.cause_categories.push(Category::new("K2", "tools", &[]));
        assert!(m.validate().is_ok());
        assert_eq!(m.warnings().len(), 1);
    }
}
