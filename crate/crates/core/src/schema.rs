//! Curated label sets and the curation map tying mined candidate surfaces
//! to labels. Also compares labels with external indicator lists.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::CandidateTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Component,
    Aspect,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Component => "component",
            Role::Aspect => "aspect",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "component" => Ok(Role::Component),
            "aspect" => Ok(Role::Aspect),
            other => Err(Error::Config(format!("unknown role `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub product_type: String,
    pub component_labels: Vec<String>,
    pub aspect_labels: Vec<String>,
}

impl LabelSchema {
    pub fn new(
        product_type: impl Into<String>,
        component_labels: Vec<String>,
        aspect_labels: Vec<String>,
    ) -> Result<LabelSchema> {
        let schema = LabelSchema {
            product_type: product_type.into(),
            component_labels,
            aspect_labels,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Loads a TOML schema with `product_type`, `component_labels` and `aspect_labels`.
    pub fn load(path: &Path) -> Result<LabelSchema> {
        let text = crate::io::read_to_string(path)?;
        let schema: LabelSchema = toml::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        for role in [Role::Component, Role::Aspect] {
            let labels = self.labels(role);
            if labels.is_empty() {
                return Err(Error::Schema(format!("no {role} labels")));
            }
            let mut seen = HashSet::new();
            for label in labels {
                if label.trim().is_empty() {
                    return Err(Error::Schema(format!("empty {role} label")));
                }
                if !seen.insert(label.as_str()) {
                    return Err(Error::Schema(format!("duplicate {role} label `{label}`")));
                }
            }
        }
        Ok(())
    }

    pub fn labels(&self, role: Role) -> &[String] {
        match role {
            Role::Component => &self.component_labels,
            Role::Aspect => &self.aspect_labels,
        }
    }

    pub fn index_of(&self, role: Role, label: &str) -> Option<usize> {
        self.labels(role).iter().position(|l| l == label)
    }

    pub fn contains(&self, role: Role, label: &str) -> bool {
        self.index_of(role, label).is_some()
    }

    pub fn pair_count(&self) -> usize {
        self.component_labels.len() * self.aspect_labels.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disposition {
    Map,
    Improper,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationEntry {
    pub disposition: Disposition,
    pub target: Option<String>,
}

/// Human-authored decisions for mined candidate surfaces, keyed by `(surface, role)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CurationMap {
    entries: BTreeMap<(String, Role), CurationEntry>,
}

impl CurationMap {
    pub fn load(path: &Path) -> Result<CurationMap> {
        let text = crate::io::read_to_string(path)?;
        CurationMap::parse(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }

    /// Parses `surface<TAB>role<TAB>disposition<TAB>target` lines. Extra
    /// columns are ignored; a `todo` disposition means "not decided yet" and
    /// leaves the surface unresolved.
    pub fn parse(text: &str) -> Result<CurationMap> {
        let mut map = CurationMap::default();
        for (line, fields) in crate::io::tsv_records(text) {
            if fields.len() < 3 {
                return Err(Error::parse(
                    "<curation>",
                    line,
                    "expected surface, role, disposition[, target]",
                ));
            }
            let role: Role = fields[1]
                .parse()
                .map_err(|e: Error| Error::parse("<curation>", line, e.to_string()))?;
            let disposition = match fields[2].to_lowercase().as_str() {
                "map" => Disposition::Map,
                "improper" => Disposition::Improper,
                "ignore" => Disposition::Ignore,
                "todo" | "" => continue,
                other => {
                    return Err(Error::parse(
                        "<curation>",
                        line,
                        format!("unknown disposition `{other}`"),
                    ))
                }
            };
            let target = fields.get(3).filter(|t| !t.is_empty()).map(|t| t.to_string());
            if disposition == Disposition::Map && target.is_none() {
                return Err(Error::parse("<curation>", line, "`map` needs a target label"));
            }
            map.insert(fields[0], role, CurationEntry { disposition, target })?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, surface: &str, role: Role, entry: CurationEntry) -> Result<()> {
        let key = (surface.to_string(), role);
        if self.entries.contains_key(&key) {
            return Err(Error::Conflict(format!(
                "duplicate curation entry for `{surface}` ({role})"
            )));
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn get(&self, surface: &str, role: Role) -> Option<&CurationEntry> {
        self.entries.get(&(surface.to_string(), role))
    }

    pub fn validate(&self, schema: &LabelSchema) -> Result<()> {
        for ((surface, role), entry) in &self.entries {
            if let Some(target) = &entry.target {
                if !schema.contains(*role, target) {
                    return Err(Error::Schema(format!(
                        "curation entry `{surface}` targets unknown {role} label `{target}`"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurationReport {
    pub role: Role,
    /// Candidate occurrences absorbed per label, in schema order.
    pub coverage: Vec<(String, usize)>,
    pub mapped: Vec<(String, String, usize)>,
    pub improper: Vec<(String, usize)>,
    pub ignored: Vec<(String, usize)>,
    pub unresolved: Vec<(String, usize)>,
}

impl CurationReport {
    pub fn classified_rows(&self) -> usize {
        self.mapped.len() + self.improper.len() + self.ignored.len() + self.unresolved.len()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("surface\tcount\tstatus\tlabel\n");
        for (s, label, c) in &self.mapped {
            out.push_str(&format!("{s}\t{c}\tmapped\t{label}\n"));
        }
        for (status, rows) in [
            ("improper", &self.improper),
            ("ignored", &self.ignored),
            ("unresolved", &self.unresolved),
        ] {
            for (s, c) in rows {
                out.push_str(&format!("{s}\t{c}\t{status}\t\n"));
            }
        }
        out.push_str("\n# coverage\n");
        for (label, c) in &self.coverage {
            out.push_str(&format!("# {label}\t{c}\n"));
        }
        out
    }
}

/// Sorts every candidate row by its curation disposition; rows without one are unresolved.
pub fn apply_curation(
    candidates: &CandidateTable,
    map: &CurationMap,
    schema: &LabelSchema,
) -> Result<CurationReport> {
    map.validate(schema)?;
    let role = candidates.role;
    let mut coverage: Vec<(String, usize)> =
        schema.labels(role).iter().map(|l| (l.clone(), 0)).collect();
    let mut report = CurationReport {
        role,
        coverage: Vec::new(),
        mapped: Vec::new(),
        improper: Vec::new(),
        ignored: Vec::new(),
        unresolved: Vec::new(),
    };
    for row in &candidates.rows {
        match map.get(&row.surface, role) {
            Some(CurationEntry {
                disposition: Disposition::Map,
                target: Some(target),
            }) => {
                let idx = schema.index_of(role, target).expect("validated above");
                coverage[idx].1 += row.count;
                report.mapped.push((row.surface.clone(), target.clone(), row.count));
            }
            Some(CurationEntry {
                disposition: Disposition::Improper,
                ..
            }) => report.improper.push((row.surface.clone(), row.count)),
            Some(CurationEntry {
                disposition: Disposition::Ignore,
                ..
            }) => report.ignored.push((row.surface.clone(), row.count)),
            _ => report.unresolved.push((row.surface.clone(), row.count)),
        }
    }
    report.coverage = coverage;
    Ok(report)
}

/// Renders an editable curation file listing every candidate, most frequent first.
pub fn curation_template(tables: &[&CandidateTable]) -> String {
    let mut out = String::from(
        "# surface\trole\tdisposition (map|improper|ignore|todo)\ttarget label\tcount\n",
    );
    for table in tables {
        for row in &table.rows {
            out.push_str(&format!(
                "{}\t{}\ttodo\t\t{}\n",
                row.surface, table.role, row.count
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub name: String,
    pub source: String,
    /// Human judgment that the indicator is covered by some label.
    pub semantic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSet {
    pub role: Role,
    pub indicators: Vec<Indicator>,
}

impl IndicatorSet {
    pub fn load(path: &Path, role: Role) -> Result<IndicatorSet> {
        let text = crate::io::read_to_string(path)?;
        IndicatorSet::parse(&text, role).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }

    /// Parses `name<TAB>source<TAB>semantic-flag` lines.
    pub fn parse(text: &str, role: Role) -> Result<IndicatorSet> {
        let mut indicators = Vec::new();
        for (line, fields) in crate::io::tsv_records(text) {
            if fields.len() < 3 {
                return Err(Error::parse("<indicators>", line, "expected name, source, semantic"));
            }
            let semantic = match fields[2].to_lowercase().as_str() {
                "1" | "yes" | "y" | "true" | "semantic" => true,
                "0" | "no" | "n" | "false" | "" | "none" => false,
                other => {
                    return Err(Error::parse(
                        "<indicators>",
                        line,
                        format!("bad semantic flag `{other}`"),
                    ))
                }
            };
            indicators.push(Indicator {
                name: fields[0].to_string(),
                source: fields[1].to_string(),
                semantic,
            });
        }
        Ok(IndicatorSet { role, indicators })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    String,
    Semantic,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub string: usize,
    pub semantic: usize,
    pub none: usize,
}

impl MatchCounts {
    pub fn total(&self) -> usize {
        self.string + self.semantic + self.none
    }

    fn percent(&self, n: usize) -> u32 {
        if self.total() == 0 {
            0
        } else {
            (100.0 * n as f64 / self.total() as f64).round() as u32
        }
    }

    pub fn string_percent(&self) -> u32 {
        self.percent(self.string)
    }

    pub fn semantic_percent(&self) -> u32 {
        self.percent(self.semantic)
    }

    pub fn none_percent(&self) -> u32 {
        self.percent(self.none)
    }

    /// Share of indicators matched either way.
    pub fn matched_percent(&self) -> u32 {
        self.percent(self.string + self.semantic)
    }

    pub fn matched_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            (self.string + self.semantic) as f64 / self.total() as f64
        }
    }

    /// Indicator-count weighted combination of several comparisons.
    pub fn combined(parts: &[MatchCounts]) -> MatchCounts {
        parts.iter().fold(
            MatchCounts {
                string: 0,
                semantic: 0,
                none: 0,
            },
            |acc, c| MatchCounts {
                string: acc.string + c.string,
                semantic: acc.semantic + c.semantic,
                none: acc.none + c.none,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorComparison {
    pub role: Role,
    pub details: Vec<(String, MatchKind)>,
    pub counts: MatchCounts,
}

impl IndicatorComparison {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("indicator\tmatch\n");
        for (name, kind) in &self.details {
            let kind = match kind {
                MatchKind::String => "string",
                MatchKind::Semantic => "semantic",
                MatchKind::None => "none",
            };
            out.push_str(&format!("{name}\t{kind}\n"));
        }
        let c = &self.counts;
        out.push_str(&format!(
            "\n# role\t{}\n# indicators\t{}\n# string%\t{}\n# semantic%\t{}\n# matched%\t{}\n# none%\t{}\n",
            self.role,
            c.total(),
            c.string_percent(),
            c.semantic_percent(),
            c.matched_percent(),
            c.none_percent()
        ));
        out
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// String matches are computed (case-insensitive equality after whitespace
/// normalization); semantic matches come from the annotation. A string match
/// takes precedence over a semantic annotation.
pub fn compare_to_indicators(schema: &LabelSchema, reference: &IndicatorSet) -> IndicatorComparison {
    let labels: HashSet<String> = schema.labels(reference.role).iter().map(|l| normalize(l)).collect();
    let mut counts = MatchCounts {
        string: 0,
        semantic: 0,
        none: 0,
    };
    let details = reference
        .indicators
        .iter()
        .map(|ind| {
            let kind = if labels.contains(&normalize(&ind.name)) {
                counts.string += 1;
                MatchKind::String
            } else if ind.semantic {
                counts.semantic += 1;
                MatchKind::Semantic
            } else {
                counts.none += 1;
                MatchKind::None
            };
            (ind.name.clone(), kind)
        })
        .collect();
    IndicatorComparison {
        role: reference.role,
        details,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::CandidateRow;

    fn road_bike() -> LabelSchema {
        LabelSchema::new(
            "road bike",
            ["Tire", "Brake", "Saddle"].map(String::from).to_vec(),
            ["Durability", "Functionality", "Weight"].map(String::from).to_vec(),
        )
        .unwrap()
    }

    fn table(role: Role, rows: &[(&str, usize)]) -> CandidateTable {
        CandidateTable {
            role,
            rows: rows
                .iter()
                .map(|(s, c)| CandidateRow {
                    surface: s.to_string(),
                    count: *c,
                    cooccurring: vec![],
                })
                .collect(),
        }
    }

    #[test]
    fn duplicate_label_is_schema_error() {
        let err = LabelSchema::new(
            "x",
            vec!["Tire".into(), "Tire".into()],
            vec!["Weight".into()],
        );
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn empty_label_set_is_schema_error() {
        assert!(LabelSchema::new("x", vec![], vec!["Weight".into()]).is_err());
    }

    #[test]
    fn curation_classifies_every_row() {
        let schema = road_bike();
        let map = CurationMap::parse(
            "assembly\tcomponent\timproper\n\
             ブレーキ\tcomponent\tmap\tBrake\n\
             自転車\tcomponent\tignore\n\
             サドル\tcomponent\ttodo\n",
        )
        .unwrap();
        let t = table(
            Role::Component,
            &[("assembly", 250), ("ブレーキ", 153), ("自転車", 184), ("サドル", 75), ("値段", 69)],
        );
        let report = apply_curation(&t, &map, &schema).unwrap();
        assert_eq!(report.improper, vec![("assembly".to_string(), 250)]);
        assert_eq!(report.ignored.len(), 1);
        assert_eq!(report.unresolved.len(), 2);
        assert_eq!(report.classified_rows(), t.rows.len());
        assert_eq!(report.coverage[1], ("Brake".to_string(), 153));
        assert_eq!(apply_curation(&t, &map, &schema).unwrap(), report);
    }

    #[test]
    fn synonymous_aspect_words_share_a_label() {
        let schema = road_bike();
        let map = CurationMap::parse(
            "弱い\taspect\tmap\tFunctionality\n甘い\taspect\tmap\tFunctionality\n",
        )
        .unwrap();
        let t = table(Role::Aspect, &[("弱い", 4), ("甘い", 3)]);
        let report = apply_curation(&t, &map, &schema).unwrap();
        assert_eq!(report.coverage[1], ("Functionality".to_string(), 7));
    }

    #[test]
    fn unknown_target_is_schema_error() {
        let map = CurationMap::parse("x\tcomponent\tmap\tBell\n").unwrap();
        let t = table(Role::Component, &[("x", 1)]);
        assert!(matches!(
            apply_curation(&t, &map, &road_bike()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn duplicate_curation_entry_conflicts() {
        let err = CurationMap::parse("x\tcomponent\tignore\nx\tcomponent\timproper\n");
        assert!(matches!(err, Err(Error::Conflict(_))));
    }

    #[test]
    fn template_lists_candidates_in_rank_order() {
        let t = table(Role::Component, &[("assembly", 250), ("brake", 153)]);
        let tpl = curation_template(&[&t]);
        let map = CurationMap::parse(&tpl).unwrap();
        assert!(map.get("assembly", Role::Component).is_none());
        let lines: Vec<&str> = tpl.lines().skip(1).collect();
        assert_eq!(lines[0], "assembly\tcomponent\ttodo\t\t250");
    }

    #[test]
    fn string_match_wins_over_semantic_annotation() {
        let set = IndicatorSet::parse("  tire \tamazon\tyes\nTube\tamazon\tyes\nBasket\tamazon\tno\n", Role::Component).unwrap();
        let cmp = compare_to_indicators(&road_bike(), &set);
        assert_eq!(
            cmp.counts,
            MatchCounts {
                string: 1,
                semantic: 1,
                none: 1
            }
        );
    }

    #[test]
    fn empty_reference_is_all_zero() {
        let set = IndicatorSet {
            role: Role::Aspect,
            indicators: vec![],
        };
        let cmp = compare_to_indicators(&road_bike(), &set);
        assert!(cmp.details.is_empty());
        assert_eq!(cmp.counts.string_percent(), 0);
        assert_eq!(cmp.counts.semantic_percent(), 0);
        assert_eq!(cmp.counts.none_percent(), 0);
    }
}
