//! Subgraph file parsing, lexicon-based label normalization, and the
//! change-records output.
//!
//! Subgraph files are UTF-8 and tab-separated. A unit block lists input
//! objects, one `M` line, output objects, and a `//` terminator:
//!
//! ```text
//! O	tomato
//! S	whole
//! O	knife
//! S	clean
//! M	chop	5	20
//! O	tomato
//! S	chopped
//! O	knife
//! S	dirty
//! //
//! ```
//!
//! State lines take `S<TAB>state1[,state2,...][<TAB>{ing1,ing2,...}]`; the
//! optional brace group lists container contents. Lines starting with `#`
//! are comments.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::graph::{FunctionalUnit, GraphError, ObjectNode};

/// A parsed per-video subgraph: an ordered list of functional units.
/// Units are kept sorted by time-window start, ties in file order.
#[derive(Debug, Clone)]
pub struct Subgraph {
    source: String,
    units: Vec<FunctionalUnit>,
}

impl Subgraph {
    pub fn new(source: &str, mut units: Vec<FunctionalUnit>) -> Self {
        units.sort_by_key(|u| u.time_window().0);
        Subgraph {
            source: source.to_string(),
            units,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn units(&self) -> &[FunctionalUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

/// A parse failure, with the 1-based line it was detected on.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("{source_name}:{line}: {kind}")]
pub struct ParseError {
    pub source_name: String,
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("unknown line tag `{0}`")]
    UnknownTag(String),
    #[error("malformed {0} line")]
    Malformed(&'static str),
    #[error("state line does not follow an object line")]
    StateWithoutObject,
    #[error("object `{0}` has no state line")]
    ObjectWithoutState(String),
    #[error("duplicate state line for object `{0}`")]
    DuplicateState(String),
    #[error("unit block starting here has no M line")]
    MissingMotion,
    #[error("unit block has a second M line")]
    DuplicateMotion,
    #[error("motion time `{0}` is not a non-negative integer")]
    BadTime(String),
    #[error("motion times {0}..{1} are inverted")]
    InvertedTimes(u64, u64),
    #[error("unit block starting here is missing its `//` terminator")]
    MissingTerminator,
    #[error("`//` terminator outside a unit block")]
    StrayTerminator,
    #[error("unit has no input objects")]
    NoInputs,
    #[error("unit has no output objects")]
    NoOutputs,
    #[error("invalid unit: {0}")]
    InvalidUnit(String),
}

fn err(source: &str, line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError {
        source_name: source.to_string(),
        line,
        kind,
    }
}

/// An object being accumulated: name plus not-yet-validated states/contents.
struct PendingObject {
    name_raw: String,
    line: usize,
    states: Option<(Vec<String>, Vec<String>)>,
}

struct PendingUnit {
    start_line: usize,
    inputs: Vec<PendingObject>,
    motion: Option<(String, u64, u64)>,
    outputs: Vec<PendingObject>,
}

impl PendingUnit {
    fn side_mut(&mut self) -> &mut Vec<PendingObject> {
        if self.motion.is_some() {
            &mut self.outputs
        } else {
            &mut self.inputs
        }
    }
}

/// Parses a subgraph file. Objects before the `M` line are inputs, after it
/// outputs; the time window comes from the `M` line. Labels are lowercased
/// and whitespace-collapsed; lexicon substitution is a separate step
/// ([`normalize`]).
pub fn parse_subgraph(text: &str, source_name: &str) -> Result<Subgraph, ParseError> {
    let mut units: Vec<FunctionalUnit> = Vec::new();
    let mut current: Option<PendingUnit> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0].trim() {
            "O" => {
                if fields.len() != 2 {
                    return Err(err(source_name, line_no, ParseErrorKind::Malformed("O")));
                }
                let unit = current.get_or_insert_with(|| PendingUnit {
                    start_line: line_no,
                    inputs: Vec::new(),
                    motion: None,
                    outputs: Vec::new(),
                });
                check_last_object_has_states(unit, source_name)?;
                unit.side_mut().push(PendingObject {
                    name_raw: fields[1].to_string(),
                    line: line_no,
                    states: None,
                });
            }
            "S" => {
                if fields.len() < 2 || fields.len() > 3 {
                    return Err(err(source_name, line_no, ParseErrorKind::Malformed("S")));
                }
                let unit = current
                    .as_mut()
                    .ok_or_else(|| err(source_name, line_no, ParseErrorKind::StateWithoutObject))?;
                let side = unit.side_mut();
                let obj = side
                    .last_mut()
                    .ok_or_else(|| err(source_name, line_no, ParseErrorKind::StateWithoutObject))?;
                if obj.states.is_some() {
                    return Err(err(
                        source_name,
                        line_no,
                        ParseErrorKind::DuplicateState(obj.name_raw.trim().to_string()),
                    ));
                }
                let states: Vec<String> =
                    fields[1].split(',').map(|s| s.to_string()).collect();
                let contents = if fields.len() == 3 {
                    let group = fields[2].trim();
                    let inner = group
                        .strip_prefix('{')
                        .and_then(|g| g.strip_suffix('}'))
                        .ok_or_else(|| err(source_name, line_no, ParseErrorKind::Malformed("S")))?;
                    inner
                        .split(',')
                        .map(|s| s.to_string())
                        .filter(|s| !s.trim().is_empty())
                        .collect()
                } else {
                    Vec::new()
                };
                obj.states = Some((states, contents));
            }
            "M" => {
                if fields.len() != 4 {
                    return Err(err(source_name, line_no, ParseErrorKind::Malformed("M")));
                }
                let unit = current.get_or_insert_with(|| PendingUnit {
                    start_line: line_no,
                    inputs: Vec::new(),
                    motion: None,
                    outputs: Vec::new(),
                });
                if unit.motion.is_some() {
                    return Err(err(source_name, line_no, ParseErrorKind::DuplicateMotion));
                }
                check_last_object_has_states(unit, source_name)?;
                let parse_time = |s: &str| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|_| err(source_name, line_no, ParseErrorKind::BadTime(s.trim().to_string())))
                };
                let start = parse_time(fields[2])?;
                let end = parse_time(fields[3])?;
                if start > end {
                    return Err(err(source_name, line_no, ParseErrorKind::InvertedTimes(start, end)));
                }
                unit.motion = Some((fields[1].to_string(), start, end));
            }
            "//" => {
                let mut unit = current
                    .take()
                    .ok_or_else(|| err(source_name, line_no, ParseErrorKind::StrayTerminator))?;
                check_last_object_has_states(&mut unit, source_name)?;
                units.push(finish_unit(unit, source_name)?);
            }
            tag => {
                return Err(err(
                    source_name,
                    line_no,
                    ParseErrorKind::UnknownTag(tag.to_string()),
                ));
            }
        }
    }

    if let Some(unit) = current {
        return Err(err(
            source_name,
            unit.start_line,
            ParseErrorKind::MissingTerminator,
        ));
    }
    Ok(Subgraph::new(source_name, units))
}

fn check_last_object_has_states(unit: &mut PendingUnit, source: &str) -> Result<(), ParseError> {
    let side = unit.side_mut();
    if let Some(obj) = side.last() {
        if obj.states.is_none() {
            return Err(err(
                source,
                obj.line,
                ParseErrorKind::ObjectWithoutState(obj.name_raw.trim().to_string()),
            ));
        }
    }
    Ok(())
}

fn finish_unit(unit: PendingUnit, source: &str) -> Result<FunctionalUnit, ParseError> {
    let (motion, start, end) = unit
        .motion
        .ok_or_else(|| err(source, unit.start_line, ParseErrorKind::MissingMotion))?;
    if unit.inputs.is_empty() {
        return Err(err(source, unit.start_line, ParseErrorKind::NoInputs));
    }
    if unit.outputs.is_empty() {
        return Err(err(source, unit.start_line, ParseErrorKind::NoOutputs));
    }
    let build = |objs: Vec<PendingObject>| -> Result<Vec<ObjectNode>, ParseError> {
        objs.into_iter()
            .map(|o| {
                let (states, contents) = o.states.expect("states checked per object");
                ObjectNode::new(&o.name_raw, states, contents)
                    .map_err(|e| err(source, o.line, ParseErrorKind::InvalidUnit(e.to_string())))
            })
            .collect()
    };
    let inputs = build(unit.inputs)?;
    let outputs = build(unit.outputs)?;
    FunctionalUnit::new(inputs, &motion, outputs, (start, end))
        .map_err(|e| err(source, unit.start_line, ParseErrorKind::InvalidUnit(e.to_string())))
}

/// Canonical text form of a subgraph. Round-trips through
/// [`parse_subgraph`]: objects are written in set order, so re-parsing
/// yields an equal subgraph (including time windows), and re-serializing
/// yields identical bytes.
pub fn serialize_subgraph(sub: &Subgraph) -> String {
    fn write_side(out: &mut String, objs: &BTreeSet<ObjectNode>) {
        for obj in objs {
            out.push_str(&format!("O\t{}\n", obj.name()));
            let states = obj.states().iter().cloned().collect::<Vec<_>>().join(",");
            if obj.contents().is_empty() {
                out.push_str(&format!("S\t{states}\n"));
            } else {
                let contents = obj.contents().iter().cloned().collect::<Vec<_>>().join(",");
                out.push_str(&format!("S\t{states}\t{{{contents}}}\n"));
            }
        }
    }
    let mut out = String::new();
    for unit in sub.units() {
        write_side(&mut out, unit.inputs());
        let (start, end) = unit.time_window();
        out.push_str(&format!("M\t{}\t{start}\t{end}\n", unit.motion()));
        write_side(&mut out, unit.outputs());
        out.push_str("//\n");
    }
    out
}

/// Errors raised while loading a lexicon file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("variant `{variant}` mapped to both `{first}` and `{second}`")]
    Conflict {
        variant: String,
        first: String,
        second: String,
    },
    #[error("lexicon chain through `{0}` forms a cycle")]
    Cycle(String),
}

/// Variant-to-canonical label map. Chains (a variant whose canonical is
/// itself a variant) are resolved at load, so lookups are single-step, and
/// canonical labels map to themselves.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    map: HashMap<String, String>,
}

impl Lexicon {
    /// An empty lexicon; every label is its own canonical form.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parses `canonical<TAB>variant[<TAB>variant...]` lines. Blank lines
    /// and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut raw: HashMap<String, String> = HashMap::new();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t').map(crate::graph::normalize_label);
            let canonical = match fields.next() {
                Some(c) if !c.is_empty() => c,
                _ => continue,
            };
            raw.entry(canonical.clone()).or_insert_with(|| canonical.clone());
            for variant in fields.filter(|v| !v.is_empty()) {
                if let Some(existing) = raw.get(&variant) {
                    if *existing != canonical {
                        return Err(LexiconError::Conflict {
                            variant,
                            first: existing.clone(),
                            second: canonical,
                        });
                    }
                } else {
                    raw.insert(variant, canonical.clone());
                }
            }
        }

        // Resolve chains: variant -> canonical where the canonical is itself
        // a variant elsewhere.
        let mut map = HashMap::with_capacity(raw.len());
        for variant in raw.keys() {
            let mut seen = vec![variant.clone()];
            let mut cursor = variant.clone();
            loop {
                let next = raw.get(&cursor).cloned().unwrap_or_else(|| cursor.clone());
                if next == cursor {
                    break;
                }
                if seen.contains(&next) {
                    return Err(LexiconError::Cycle(variant.clone()));
                }
                seen.push(next.clone());
                cursor = next;
            }
            map.insert(variant.clone(), cursor);
        }
        Ok(Lexicon { map })
    }

    /// Canonical form of a label: the mapped value, or the label itself
    /// (already normalized) when unknown.
    pub fn canonical(&self, label: &str) -> String {
        let label = crate::graph::normalize_label(label);
        self.map.get(&label).cloned().unwrap_or(label)
    }

    /// Whether the label appears in the lexicon at all.
    pub fn knows(&self, label: &str) -> bool {
        self.map.contains_key(&crate::graph::normalize_label(label))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// One label substitution applied during normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRecord {
    /// Canonical name of the object involved; empty for motion relabels.
    pub object: String,
    pub old_id: String,
    pub new_id: String,
    /// Comma-joined states of the object occurrence before normalization.
    pub initial_state: String,
    /// Comma-joined states after normalization.
    pub final_state: String,
    pub file: String,
    /// Canonical motion label of the unit the change occurred in.
    pub motion: String,
}

/// Substitution log plus the labels the lexicon did not know.
#[derive(Debug, Clone, Default)]
pub struct NormalizeReport {
    pub records: Vec<ChangeRecord>,
    pub unknown_labels: BTreeSet<String>,
}

impl NormalizeReport {
    pub fn unknown_count(&self) -> usize {
        self.unknown_labels.len()
    }
}

/// Rewrites every object name, state token, contents entry, and motion label
/// to its canonical form, logging one [`ChangeRecord`] per substitution.
/// Unknown labels pass through unchanged and are tallied in the report.
/// Idempotent: normalizing a normalized subgraph changes nothing.
pub fn normalize(sub: &Subgraph, lex: &Lexicon) -> (Subgraph, NormalizeReport) {
    let mut report = NormalizeReport::default();
    let mut units = Vec::with_capacity(sub.len());

    for unit in sub.units() {
        let motion_old = unit.motion().to_string();
        let motion_new = canonicalize(lex, &motion_old, &mut report);
        if motion_new != motion_old {
            report.records.push(ChangeRecord {
                object: String::new(),
                old_id: motion_old.clone(),
                new_id: motion_new.clone(),
                initial_state: String::new(),
                final_state: String::new(),
                file: sub.source().to_string(),
                motion: motion_new.clone(),
            });
        }

        let rewrite_side = |objs: &BTreeSet<ObjectNode>, report: &mut NormalizeReport| {
            objs.iter()
                .map(|obj| rewrite_object(obj, lex, sub.source(), &motion_new, report))
                .collect::<Vec<_>>()
        };
        let inputs = rewrite_side(unit.inputs(), &mut report);
        let outputs = rewrite_side(unit.outputs(), &mut report);
        units.push(
            FunctionalUnit::new(inputs, &motion_new, outputs, unit.time_window())
                .expect("normalization preserves unit shape"),
        );
    }
    (Subgraph::new(sub.source(), units), report)
}

fn canonicalize(lex: &Lexicon, label: &str, report: &mut NormalizeReport) -> String {
    if !lex.knows(label) {
        report.unknown_labels.insert(label.to_string());
        return label.to_string();
    }
    lex.canonical(label)
}

fn rewrite_object(
    obj: &ObjectNode,
    lex: &Lexicon,
    file: &str,
    motion: &str,
    report: &mut NormalizeReport,
) -> ObjectNode {
    let name_new = canonicalize(lex, obj.name(), report);
    let states_pairs: Vec<(String, String)> = obj
        .states()
        .iter()
        .map(|s| (s.clone(), canonicalize(lex, s, report)))
        .collect();
    let contents_pairs: Vec<(String, String)> = obj
        .contents()
        .iter()
        .map(|c| (c.clone(), canonicalize(lex, c, report)))
        .collect();

    let states_old = obj.states().iter().cloned().collect::<Vec<_>>().join(",");
    let states_new_set: BTreeSet<String> =
        states_pairs.iter().map(|(_, new)| new.clone()).collect();
    let states_new = states_new_set.iter().cloned().collect::<Vec<_>>().join(",");

    let mut changes: Vec<(String, String)> = Vec::new();
    if *obj.name() != name_new {
        changes.push((obj.name().to_string(), name_new.clone()));
    }
    changes.extend(states_pairs.into_iter().filter(|(old, new)| old != new));
    let contents_new: Vec<String> = contents_pairs
        .iter()
        .map(|(_, new)| new.clone())
        .collect();
    changes.extend(contents_pairs.into_iter().filter(|(old, new)| old != new));

    for (old_id, new_id) in changes {
        report.records.push(ChangeRecord {
            object: name_new.clone(),
            old_id,
            new_id,
            initial_state: states_old.clone(),
            final_state: states_new.clone(),
            file: file.to_string(),
            motion: motion.to_string(),
        });
    }

    ObjectNode::new(&name_new, states_new_set, contents_new)
        .expect("normalization preserves object shape")
}

/// Serializes change records as CSV with the header
/// `object,old_id,new_id,initial_state,final_state,file,motion`.
pub fn records_to_csv(records: &[ChangeRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "object",
            "old_id",
            "new_id",
            "initial_state",
            "final_state",
            "file",
            "motion",
        ])
        .expect("csv write to memory");
    for r in records {
        writer
            .write_record([
                &r.object,
                &r.old_id,
                &r.new_id,
                &r.initial_state,
                &r.final_state,
                &r.file,
                &r.motion,
            ])
            .expect("csv write to memory");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf-8")
}

/// Compares two subgraphs unit by unit, including time windows.
pub fn subgraphs_identical(a: &Subgraph, b: &Subgraph) -> bool {
    a.len() == b.len()
        && a.units()
            .iter()
            .zip(b.units())
            .all(|(x, y)| x == y && x.time_window() == y.time_window())
}

impl From<GraphError> for ParseErrorKind {
    fn from(e: GraphError) -> Self {
        ParseErrorKind::InvalidUnit(e.to_string())
    }
}
