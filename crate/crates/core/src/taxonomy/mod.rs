//! Multi-axial label hierarchies (findings, differential diagnoses, locations)
//! and report-level label resolution.
//!
//! Tree files hold one node per line; the number of leading tabs is the depth
//! and a node reads `label [CUI:C0000000, counts:own, cumulative]`, with the
//! bracket part and each of its fields optional. Lines starting with `#` are
//! comments.

mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use resolve::{
    is_non_finding, map_labels_to_cuis, resolve_report_labels, resolve_unchanged, StudyTimeline, EXCLUDE, NORMAL,
    SUBOPTIMAL, UNCHANGED,
};

const FINDINGS: &str = include_str!("../../data/findings.tree");
const DIAGNOSES: &str = include_str!("../../data/diagnoses.tree");
const LOCATIONS: &str = include_str!("../../data/locations.tree");

/// Category roots that group labels but are never assigned themselves.
pub const CATEGORY_ROOTS: [&str; 3] = ["radiological finding", "differential diagnosis", "localization"];

pub type LabelSet = BTreeSet<String>;
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("depth must be at least 1")]
    InvalidDepth,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Findings,
    Diagnoses,
    Locations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptNode {
    /// Normalized label (lowercase, single spaces); the lookup key.
    pub label: String,
    /// Label as written in the tree file.
    pub display: String,
    pub cui: Option<String>,
    pub own_count: Option<u64>,
    pub stated_cumulative: Option<u64>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub line: usize,
}

impl ConceptNode {
    /// Cumulative count, falling back to the own count and then to 0.
    pub fn cumulative_count(&self) -> u64 {
        self.stated_cumulative.or(self.own_count).unwrap_or(0)
    }
}

/// A node whose stated cumulative count disagrees with its own count plus its children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountMismatch {
    pub line: usize,
    pub label: String,
    pub stated: u64,
    pub computed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaxonomyTree {
    pub kind: TreeKind,
    pub nodes: Vec<ConceptNode>,
    pub roots: Vec<NodeId>,
    pub special_labels: BTreeMap<String, u64>,
    pub count_mismatches: Vec<CountMismatch>,
    #[serde(skip)]
    index: BTreeMap<String, Vec<NodeId>>,
}

pub fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn is_valid_cui(cui: &str) -> bool {
    cui.len() == 8 && cui.starts_with('C') && cui[1..].bytes().all(|b| b.is_ascii_digit())
}

struct NodeSpec {
    display: String,
    cui: Option<String>,
    counts: Vec<u64>,
}

fn parse_node(text: &str, line: usize) -> Result<NodeSpec, TaxonomyError> {
    let err = |message: String| TaxonomyError::Parse { line, message };
    let (display, attrs) = match text.find('[') {
        None => (text.trim(), None),
        Some(open) => {
            let rest = text[open + 1..].trim_end();
            let inner = rest.strip_suffix(']').ok_or_else(|| err("unterminated `[`".into()))?;
            (text[..open].trim(), Some(inner.trim()))
        }
    };
    if display.is_empty() {
        return Err(err("empty label".into()));
    }
    let mut spec = NodeSpec { display: display.to_string(), cui: None, counts: Vec::new() };
    let Some(mut attrs) = attrs else {
        return Ok(spec);
    };
    if let Some(after) = attrs.strip_prefix("CUI:") {
        let end = after.find(',').unwrap_or(after.len());
        let cui = after[..end].trim();
        if !is_valid_cui(cui) {
            return Err(err(format!("malformed CUI `{cui}`")));
        }
        spec.cui = Some(cui.to_string());
        attrs = after[end..].trim_start_matches(',').trim();
    }
    if let Some(after) = attrs.strip_prefix("counts:") {
        for part in after.split(',') {
            let n = part.trim().parse().map_err(|_| err(format!("bad count `{}`", part.trim())))?;
            spec.counts.push(n);
        }
        if spec.counts.len() > 2 {
            return Err(err("at most two counts".into()));
        }
        attrs = "";
    }
    if !attrs.is_empty() {
        return Err(err(format!("unexpected attributes `{attrs}`")));
    }
    Ok(spec)
}

impl TaxonomyTree {
    pub fn parse(text: &str, kind: TreeKind) -> Result<Self, TaxonomyError> {
        let mut nodes: Vec<ConceptNode> = Vec::new();
        let mut roots = Vec::new();
        let mut stack: Vec<NodeId> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let depth = raw.len() - raw.trim_start_matches('\t').len();
            let body = &raw[depth..];
            if body.starts_with(char::is_whitespace) {
                return Err(TaxonomyError::Parse { line, message: "indent with tabs only".into() });
            }
            if depth > stack.len() {
                return Err(TaxonomyError::Parse { line, message: format!("depth {depth} skips a level") });
            }
            stack.truncate(depth);
            let spec = parse_node(body, line)?;
            let id = nodes.len();
            let parent = stack.last().copied();
            nodes.push(ConceptNode {
                label: normalize_label(&spec.display),
                display: spec.display,
                cui: spec.cui,
                own_count: spec.counts.first().copied(),
                stated_cumulative: spec.counts.get(1).copied(),
                children: Vec::new(),
                parent,
                depth,
                line,
            });
            match parent {
                Some(p) => nodes[p].children.push(id),
                None => roots.push(id),
            }
            stack.push(id);
        }
        let mut index: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
        for (id, n) in nodes.iter().enumerate() {
            index.entry(n.label.clone()).or_default().push(id);
        }
        let special_labels = [NORMAL, EXCLUDE, SUBOPTIMAL, UNCHANGED]
            .iter()
            .filter_map(|l| index.get(*l).map(|ids| (l.to_string(), nodes[ids[0]].cumulative_count())))
            .collect();
        let mut tree = Self { kind, nodes, roots, special_labels, count_mismatches: Vec::new(), index };
        tree.count_mismatches = tree.check_counts();
        for m in &tree.count_mismatches {
            log::warn!("line {}: `{}` states {} but children sum to {}", m.line, m.label, m.stated, m.computed);
        }
        Ok(tree)
    }

    pub fn load(path: impl AsRef<Path>, kind: TreeKind) -> Result<Self, TaxonomyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| TaxonomyError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, kind)
    }

    pub fn bundled(kind: TreeKind) -> Self {
        let text = match kind {
            TreeKind::Findings => FINDINGS,
            TreeKind::Diagnoses => DIAGNOSES,
            TreeKind::Locations => LOCATIONS,
        };
        Self::parse(text, kind).expect("bundled tree is well formed")
    }

    /// Nodes stating both counts whose cumulative count is not own + Σ children.
    pub fn check_counts(&self) -> Vec<CountMismatch> {
        self.nodes
            .iter()
            .filter_map(|n| {
                let (own, stated) = (n.own_count?, n.stated_cumulative?);
                let computed = own + n.children.iter().map(|&c| self.nodes[c].cumulative_count()).sum::<u64>();
                (computed != stated).then(|| CountMismatch { line: n.line, label: n.label.clone(), stated, computed })
            })
            .collect()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(&normalize_label(label))
    }

    /// Every node carrying `label`, in file order.
    pub fn occurrences(&self, label: &str) -> &[NodeId] {
        self.index.get(&normalize_label(label)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn node(&self, id: NodeId) -> &ConceptNode {
        &self.nodes[id]
    }

    /// Root-to-node label path for one node.
    pub fn path_to(&self, id: NodeId) -> Vec<String> {
        let mut path = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            path.push(self.nodes[c].label.clone());
            cur = self.nodes[c].parent;
        }
        path.reverse();
        path
    }

    /// One root-to-node path per occurrence of `label`.
    pub fn ancestors_of(&self, label: &str) -> Result<Vec<Vec<String>>, TaxonomyError> {
        let ids = self.occurrences(label);
        if ids.is_empty() {
            return Err(TaxonomyError::UnknownLabel(label.to_string()));
        }
        Ok(ids.iter().map(|&id| self.path_to(id)).collect())
    }

    /// Replace each label by its ancestors at `depth` (itself when shallower).
    pub fn expand_to_level(&self, labels: &LabelSet, depth: usize) -> Result<LabelSet, TaxonomyError> {
        if depth == 0 {
            return Err(TaxonomyError::InvalidDepth);
        }
        let mut out = LabelSet::new();
        for label in labels {
            for mut path in self.ancestors_of(label)? {
                if path.len() > depth + 1 {
                    path.truncate(depth + 1);
                }
                out.insert(path.pop().expect("paths are non-empty"));
            }
        }
        Ok(out)
    }

    /// First CUI attached to any occurrence of `label`.
    pub fn cui_of(&self, label: &str) -> Result<Option<&str>, TaxonomyError> {
        let ids = self.occurrences(label);
        if ids.is_empty() {
            return Err(TaxonomyError::UnknownLabel(label.to_string()));
        }
        Ok(ids.iter().find_map(|&id| self.nodes[id].cui.as_deref()))
    }
}

/// The three trees together.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    pub findings: TaxonomyTree,
    pub diagnoses: TaxonomyTree,
    pub locations: TaxonomyTree,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Taxonomy {
    pub fn bundled() -> Self {
        Self {
            findings: TaxonomyTree::bundled(TreeKind::Findings),
            diagnoses: TaxonomyTree::bundled(TreeKind::Diagnoses),
            locations: TaxonomyTree::bundled(TreeKind::Locations),
        }
    }

    pub fn trees(&self) -> [&TaxonomyTree; 3] {
        [&self.findings, &self.diagnoses, &self.locations]
    }

    /// The tree a label belongs to, searched in findings, diagnoses, locations order.
    pub fn tree_of(&self, label: &str) -> Option<&TaxonomyTree> {
        self.trees().into_iter().find(|t| t.contains(label))
    }

    pub fn cui_of(&self, label: &str) -> Result<Option<&str>, TaxonomyError> {
        self.tree_of(label)
            .ok_or_else(|| TaxonomyError::UnknownLabel(label.to_string()))?
            .cui_of(label)
    }

    /// Classifier label space: every finding and diagnosis label plus the special
    /// labels, sorted, without the category roots.
    pub fn label_space(&self) -> Vec<String> {
        self.findings
            .labels()
            .chain(self.diagnoses.labels())
            .filter(|l| !CATEGORY_ROOTS.contains(l))
            .map(str::to_string)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn is_location(&self, label: &str) -> bool {
        self.locations.contains(label) && !CATEGORY_ROOTS.contains(&normalize_label(label).as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# comment
normal [counts:5]
finding
\tgranuloma [CUI:C0235557, counts:481, 2646]
\t\tcalcified granuloma [CUI:C0333404, counts:2165, 2165]
\tcalcified densities [counts:10, 2175]
\t\tcalcified granuloma [CUI:C0333404, counts:2165, 2165]
\tlaminar atelectasis [counts:1, 1]
";

    #[test]
    fn parses_nodes_and_counts() {
        let t = TaxonomyTree::parse(SAMPLE, TreeKind::Findings).unwrap();
        assert_eq!(t.roots.len(), 2);
        assert!(t.count_mismatches.is_empty());
        let g = t.node(t.occurrences("granuloma")[0]);
        assert_eq!((g.own_count, g.stated_cumulative), (Some(481), Some(2646)));
        assert_eq!(g.cui.as_deref(), Some("C0235557"));
        assert_eq!(t.special_labels.get("normal"), Some(&5));
    }

    #[test]
    fn leaf_cumulative_defaults_to_own() {
        let t = TaxonomyTree::parse("a [counts:7]\n", TreeKind::Findings).unwrap();
        assert_eq!(t.node(0).cumulative_count(), 7);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["a [CUI:C12]", "a [counts:x]", "a [CUI:C0000001", "\t\ta", "a [foo]", " a"] {
            assert!(matches!(TaxonomyTree::parse(bad, TreeKind::Findings), Err(TaxonomyError::Parse { line: 1, .. })), "{bad}");
        }
    }

    #[test]
    fn reports_count_mismatch() {
        let t = TaxonomyTree::parse("a [counts:1, 5]\n\tb [counts:2, 2]\n", TreeKind::Findings).unwrap();
        assert_eq!(t.count_mismatches, vec![CountMismatch { line: 1, label: "a".into(), stated: 5, computed: 3 }]);
    }

    #[test]
    fn multi_axial_paths() {
        let t = TaxonomyTree::parse(SAMPLE, TreeKind::Findings).unwrap();
        let paths = t.ancestors_of("calcified granuloma").unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0], vec!["finding", "granuloma", "calcified granuloma"]);
        assert_eq!(t.ancestors_of("normal").unwrap(), vec![vec!["normal".to_string()]]);
        assert!(matches!(t.ancestors_of("nope"), Err(TaxonomyError::UnknownLabel(_))));
        let set: LabelSet = ["calcified granuloma".to_string()].into();
        let up = t.expand_to_level(&set, 1).unwrap();
        assert_eq!(up, ["granuloma".to_string(), "calcified densities".to_string()].into());
        assert!(t.expand_to_level(&set, 0).is_err());
    }

    #[test]
    fn label_lookup_is_normalized() {
        let t = TaxonomyTree::parse("NSG  tube [counts:3, 3]\n", TreeKind::Findings).unwrap();
        assert!(t.contains("nsg tube"));
        assert_eq!(t.cui_of("NSG tube").unwrap(), None);
    }
}
