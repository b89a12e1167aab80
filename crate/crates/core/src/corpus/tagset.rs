//! The 42-class DAMSL clustering used by both corpora.
//!
//! The inventory lives in `data/damsl_tags.json` so it can be audited
//! independently of the code: one record per class with its id, canonical
//! label, description and the raw SwDA act tags collapsed into it.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Number of dialogue-act classes.
pub const NUM_TAGS: usize = 42;

/// Raw SwDA marker for an utterance that continues the speaker's previous one.
pub const CONTINUATION_MARKER: &str = "+";

const INVENTORY_JSON: &str = include_str!("../../data/damsl_tags.json");

/// Raw tags that keep their `^` suffix instead of being reduced to the head tag.
const CARET_EXCEPTIONS: [&str; 5] = ["qy^d", "qw^d", "b^m", "nn^e", "ny^e"];

/// Index of a tag in the inventory, `0..NUM_TAGS`.
pub type TagId = usize;

/// One record of the tag inventory file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRecord {
    pub id: TagId,
    pub label: String,
    pub description: String,
    pub raw_members: Vec<String>,
}

/// A dialogue-act class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DaTag {
    id: TagId,
    label: &'static str,
    description: &'static str,
}

impl DaTag {
    pub fn id(&self) -> TagId {
        self.id
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    pub fn description(&self) -> &'static str {
        self.description
    }
}

impl fmt::Display for DaTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label)
    }
}

/// The tag inventory with lookups by id, label and raw member.
#[derive(Debug)]
pub struct TagSet {
    tags: Vec<DaTag>,
    records: Vec<TagRecord>,
    by_label: HashMap<&'static str, TagId>,
    by_raw: HashMap<&'static str, TagId>,
}

impl TagSet {
    /// The shipped DAMSL inventory. Parsed once and shared.
    pub fn damsl() -> &'static TagSet {
        static TAGSET: OnceLock<TagSet> = OnceLock::new();
        TAGSET.get_or_init(|| {
            let records: Vec<TagRecord> =
                serde_json::from_str(INVENTORY_JSON).expect("bundled tag inventory is valid JSON");
            TagSet::from_records(records).expect("bundled tag inventory is consistent")
        })
    }

    // Labels are leaked into 'static storage; only the process-wide DAMSL
    // instance is ever built.
    fn from_records(mut records: Vec<TagRecord>) -> Result<TagSet, CorpusError> {
        validate_inventory(&mut records)?;

        let mut tags = Vec::with_capacity(NUM_TAGS);
        let mut by_label = HashMap::new();
        let mut by_raw = HashMap::new();
        for r in &records {
            let label: &'static str = Box::leak(r.label.clone().into_boxed_str());
            let description: &'static str = Box::leak(r.description.clone().into_boxed_str());
            by_label.insert(label, r.id);
            tags.push(DaTag {
                id: r.id,
                label,
                description,
            });
            for raw in &r.raw_members {
                by_raw.insert(&*Box::leak(raw.clone().into_boxed_str()), r.id);
            }
        }
        // canonical labels normalize to themselves
        for t in &tags {
            by_raw.entry(t.label).or_insert(t.id);
        }

        Ok(TagSet {
            tags,
            records,
            by_label,
            by_raw,
        })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[DaTag] {
        &self.tags
    }

    pub fn records(&self) -> &[TagRecord] {
        &self.records
    }

    pub fn get(&self, id: TagId) -> Option<DaTag> {
        self.tags.get(id).copied()
    }

    pub fn by_label(&self, label: &str) -> Option<DaTag> {
        self.by_label.get(label).map(|&id| self.tags[id])
    }

    pub fn labels(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.tags.iter().map(|t| t.label)
    }

    /// Map a raw SwDA act tag onto its class.
    ///
    /// Secondary annotations after `,` or `;` are dropped, `^` suffixes are
    /// removed (except for the tags that keep them, like `qy^d`), and the
    /// `( ) @ *` markup characters are stripped before the inventory lookup.
    /// The continuation marker `+` has no class of its own and is reported
    /// as [`CorpusError::Continuation`].
    pub fn normalize(&self, raw_tag: &str) -> Result<DaTag, CorpusError> {
        let primary = raw_tag
            .split([',', ';'])
            .next()
            .unwrap_or_default()
            .trim();
        if primary.is_empty() {
            return Err(CorpusError::UnknownTag(raw_tag.to_string()));
        }
        if primary == CONTINUATION_MARKER {
            return Err(CorpusError::Continuation);
        }
        if let Some(&id) = self.by_raw.get(primary) {
            return Ok(self.tags[id]);
        }

        let reduced = if CARET_EXCEPTIONS.contains(&primary) {
            primary.to_string()
        } else {
            let head = match primary.char_indices().skip(1).find(|&(_, c)| c == '^') {
                Some((i, _)) => &primary[..i],
                None => primary,
            };
            head.chars()
                .filter(|c| !matches!(c, '(' | ')' | '@' | '*'))
                .collect()
        };
        if reduced == CONTINUATION_MARKER {
            return Err(CorpusError::Continuation);
        }
        self.by_raw
            .get(reduced.as_str())
            .map(|&id| self.tags[id])
            .ok_or_else(|| CorpusError::UnknownTag(raw_tag.to_string()))
    }
}

/// Check that inventory ids form a bijection onto `0..NUM_TAGS` and that
/// labels and raw members are unique. Sorts `records` by id.
pub fn validate_inventory(records: &mut [TagRecord]) -> Result<(), CorpusError> {
    if records.len() != NUM_TAGS {
        return Err(CorpusError::Inventory(format!(
            "expected {NUM_TAGS} classes, found {}",
            records.len()
        )));
    }
    records.sort_by_key(|r| r.id);
    for (expected, r) in records.iter().enumerate() {
        if r.id != expected {
            return Err(CorpusError::Inventory(format!(
                "ids must cover 0..{NUM_TAGS} exactly; missing {expected}"
            )));
        }
    }
    let mut labels = HashMap::new();
    let mut raws = HashMap::new();
    for r in records.iter() {
        if labels.insert(r.label.as_str(), r.id).is_some() {
            return Err(CorpusError::Inventory(format!("duplicate label {:?}", r.label)));
        }
        for raw in &r.raw_members {
            if let Some(prev) = raws.insert(raw.as_str(), r.id) {
                if prev != r.id {
                    return Err(CorpusError::Inventory(format!(
                        "raw tag {raw:?} belongs to two classes"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Convenience wrapper around [`TagSet::normalize`] on the DAMSL inventory.
pub fn normalize_tag(raw_tag: &str) -> Result<DaTag, CorpusError> {
    TagSet::damsl().normalize(raw_tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_has_42_unique_labels() {
        let ts = TagSet::damsl();
        assert_eq!(ts.len(), NUM_TAGS);
        let mut labels: Vec<_> = ts.labels().collect();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels.len(), NUM_TAGS);
        for (i, t) in ts.tags().iter().enumerate() {
            assert_eq!(t.id(), i);
        }
    }

    #[test]
    fn canonical_labels_are_fixed_points() {
        let ts = TagSet::damsl();
        for t in ts.tags() {
            assert_eq!(ts.normalize(t.label()).unwrap(), *t);
        }
    }

    #[test]
    fn every_raw_member_resolves_to_its_class() {
        let ts = TagSet::damsl();
        for r in ts.records() {
            for raw in &r.raw_members {
                assert_eq!(ts.normalize(raw).unwrap().id(), r.id, "{raw}");
            }
        }
    }

    #[test]
    fn merged_groups() {
        let ts = TagSet::damsl();
        let other = ts.by_label("fo_o_fw_\"_by_bc").unwrap();
        for raw in ["fo", "o", "fw", "\"", "by", "bc"] {
            assert_eq!(ts.normalize(raw).unwrap(), other);
        }
        assert_eq!(ts.normalize("nd").unwrap(), ts.normalize("arp").unwrap());
        assert_eq!(ts.normalize("nd").unwrap().label(), "arp_nd");
        assert_eq!(ts.normalize("qr").unwrap().label(), "qy");
        assert_eq!(ts.normalize("fx").unwrap().label(), "sv");
    }

    #[test]
    fn declarative_question_stays_distinct() {
        let qyd = normalize_tag("qy^d").unwrap();
        let qy = normalize_tag("qy").unwrap();
        assert_eq!(qyd.label(), "qy^d");
        assert_ne!(qyd, qy);
    }

    #[test]
    fn secondary_annotations_are_dropped() {
        assert_eq!(normalize_tag("sd^e").unwrap().label(), "sd");
        assert_eq!(normalize_tag("sd,qy^d").unwrap().label(), "sd");
        assert_eq!(normalize_tag("qy;sd").unwrap().label(), "qy");
        assert_eq!(normalize_tag("sd(^q)").unwrap().label(), "sd");
        assert_eq!(normalize_tag("qw^t").unwrap().label(), "qw");
        assert_eq!(normalize_tag("^q").unwrap().label(), "^q");
        assert_eq!(normalize_tag("nn^e").unwrap().label(), "ng");
        assert_eq!(normalize_tag("ny^e").unwrap().label(), "na");
        assert_eq!(normalize_tag("*sd").unwrap().label(), "sd");
    }

    #[test]
    fn continuation_and_unknown() {
        assert!(matches!(normalize_tag("+"), Err(CorpusError::Continuation)));
        match normalize_tag("zz") {
            Err(CorpusError::UnknownTag(raw)) => assert_eq!(raw, "zz"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(normalize_tag(""), Err(CorpusError::UnknownTag(_))));
    }

    #[test]
    fn rejects_inconsistent_inventory() {
        let mut records = TagSet::damsl().records().to_vec();
        records.pop();
        assert!(validate_inventory(&mut records).is_err());

        let mut records = TagSet::damsl().records().to_vec();
        records[1].label = records[0].label.clone();
        assert!(validate_inventory(&mut records).is_err());

        let mut records = TagSet::damsl().records().to_vec();
        records[2].raw_members.push("sd".into());
        assert!(validate_inventory(&mut records).is_err());
    }
}
