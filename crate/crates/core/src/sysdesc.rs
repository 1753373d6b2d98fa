//! Textual system descriptions (`.f4ms`): parsing with located
//! diagnostics and canonical serialization.
//!
//! The schema is fixed; see `docs/FORMAT.md` at the repository root.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::behavior::BehaviorRegistry;
use crate::decimal::Decimal;
use crate::graph::{
    validate_system, ConnectorKind, InteractionEdge, InteractionGraph, SchedulingConnector, SchedulingGraph,
    Site, SystemModel,
};
use crate::model::{ComponentSpec, CostAnnotation, DataTag, Direction, Kind, PortRef, PortSpec};
use crate::tree::{self, Node, Pos, Spanned, Value};

pub const EXTENSION: &str = "f4ms";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceLocation {
    pub file: String,
    pub line: u32,
    pub column: u32,
    /// Field path such as `spg.connectors[2].targets`; empty when unknown.
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    SyntaxError,
    SchemaError,
    /// Forwarded from system validation, with the validation category.
    ValidationError(&'static str),
}

impl DiagnosticKind {
    pub fn name(self) -> &'static str {
        match self {
            DiagnosticKind::SyntaxError => "SyntaxError",
            DiagnosticKind::SchemaError => "SchemaError",
            DiagnosticKind::ValidationError(_) => "ValidationError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub location: SourceLocation,
    pub message: String,
}

/// `<file>:<line>:<col>: <category>: <message>`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = &self.location;
        write!(f, "{}:{}:{}: {}: ", loc.file, loc.line, loc.column, self.kind.name())?;
        if let DiagnosticKind::ValidationError(cat) = self.kind {
            write!(f, "{cat}: ")?;
        }
        f.write_str(&self.message)?;
        if !loc.path.is_empty() {
            write!(f, " (at {})", loc.path)?;
        }
        Ok(())
    }
}

struct Walker<'f> {
    file: &'f str,
    diags: Vec<Diagnostic>,
    locs: BTreeMap<String, Pos>,
}

type Fields<'s> = BTreeMap<&'s str, &'s Spanned>;

impl Walker<'_> {
    fn schema(&mut self, pos: Pos, path: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            kind: DiagnosticKind::SchemaError,
            location: SourceLocation { file: self.file.into(), line: pos.line, column: pos.col, path: path.into() },
            message: message.into(),
        });
    }

    fn visit(&mut self, node: &Spanned, path: &str) {
        self.locs.insert(path.to_string(), node.pos);
    }

    fn object<'s>(
        &mut self,
        node: &'s Spanned,
        path: &str,
        required: &[&str],
        optional: &[&str],
    ) -> Option<Fields<'s>> {
        self.visit(node, path);
        let Node::Object(entries) = &node.node else {
            self.schema(node.pos, path, format!("expected an object, found {}", node.node.type_name()));
            return None;
        };
        let mut fields = BTreeMap::new();
        for e in entries {
            let sub = join(path, &e.key);
            if !required.contains(&e.key.as_str()) && !optional.contains(&e.key.as_str()) {
                self.schema(e.key_pos, &sub, format!("unknown key `{}`", e.key));
            } else if fields.insert(e.key.as_str(), &e.value).is_some() {
                self.schema(e.key_pos, &sub, format!("duplicate key `{}`", e.key));
            }
        }
        for key in required {
            if !fields.contains_key(key) {
                self.schema(node.pos, path, format!("missing required key `{key}`"));
            }
        }
        Some(fields)
    }

    fn list<'s>(&mut self, node: &'s Spanned, path: &str) -> Option<&'s [Spanned]> {
        self.visit(node, path);
        match &node.node {
            Node::List(items) => Some(items),
            other => {
                self.schema(node.pos, path, format!("expected a list, found {}", other.type_name()));
                None
            }
        }
    }

    fn string(&mut self, node: &Spanned, path: &str) -> Option<String> {
        self.visit(node, path);
        match &node.node {
            Node::Str(s) => Some(s.clone()),
            other => {
                self.schema(node.pos, path, format!("expected a string, found {}", other.type_name()));
                None
            }
        }
    }

    fn decimal(&mut self, node: &Spanned, path: &str) -> Option<Decimal> {
        self.visit(node, path);
        match &node.node {
            Node::Num(raw) => match raw.parse::<Decimal>() {
                Ok(d) => Some(d),
                Err(e) => {
                    self.schema(node.pos, path, e.to_string());
                    None
                }
            },
            other => {
                self.schema(node.pos, path, format!("expected a number, found {}", other.type_name()));
                None
            }
        }
    }

    fn integer(&mut self, node: &Spanned, path: &str) -> Option<i64> {
        let d = self.decimal(node, path)?;
        match d.as_integer() {
            Some(i) if !node_has_dot(node) => Some(i),
            _ => {
                self.schema(node.pos, path, format!("expected an integer, found `{d}`"));
                None
            }
        }
    }

    fn strings(&mut self, node: &Spanned, path: &str) -> Option<Vec<String>> {
        let items = self.list(node, path)?;
        let mut out = Vec::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            match self.string(item, &format!("{path}[{i}]")) {
                Some(s) => out.push(s),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn port_ref(&mut self, node: &Spanned, path: &str) -> Option<PortRef> {
        let parts = self.strings(node, path)?;
        match <[String; 2]>::try_from(parts) {
            Ok([component, port]) => Some(PortRef { component, port }),
            Err(parts) => {
                self.schema(node.pos, path, format!("expected [component, port], found {} item(s)", parts.len()));
                None
            }
        }
    }
}

fn node_has_dot(node: &Spanned) -> bool {
    matches!(&node.node, Node::Num(raw) if raw.contains('.'))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

const COST_KEYS: [&str; 7] = ["sw_time", "hw_time", "hw_area", "sw_energy", "hw_energy", "sw_security", "hw_security"];

fn component(w: &mut Walker<'_>, node: &Spanned, path: &str) -> Option<ComponentSpec> {
    let f = w.object(node, path, &["id", "kinds", "inputs", "outputs", "costs", "behavior"], &[])?;
    let id = f.get("id").and_then(|n| w.string(n, &join(path, "id")));
    let behavior = f.get("behavior").and_then(|n| w.string(n, &join(path, "behavior")));

    let kinds = f.get("kinds").and_then(|n| {
        let kpath = join(path, "kinds");
        let raw = w.strings(n, &kpath)?;
        let mut set = BTreeSet::new();
        let mut ok = true;
        for (i, k) in raw.iter().enumerate() {
            match k.as_str() {
                "sw" => {
                    set.insert(Kind::Software);
                }
                "hw" => {
                    set.insert(Kind::Hardware);
                }
                other => {
                    let item_path = format!("{kpath}[{i}]");
                    let pos = w.locs[&item_path];
                    w.schema(pos, &item_path, format!("unknown kind `{other}` (expected \"sw\" or \"hw\")"));
                    ok = false;
                }
            }
        }
        ok.then_some(set)
    });

    let mut ports = Vec::new();
    let mut ports_ok = true;
    for (key, direction) in [("inputs", Direction::Input), ("outputs", Direction::Output)] {
        let ppath = join(path, key);
        let Some(items) = f.get(key).and_then(|n| w.list(n, &ppath)) else {
            ports_ok = false;
            continue;
        };
        for (i, item) in items.iter().enumerate() {
            let ipath = format!("{ppath}[{i}]");
            let Some(pf) = w.object(item, &ipath, &["name", "tag"], &[]) else {
                ports_ok = false;
                continue;
            };
            let name = pf.get("name").and_then(|n| w.string(n, &join(&ipath, "name")));
            let tag = pf.get("tag").and_then(|n| w.string(n, &join(&ipath, "tag")));
            match (name, tag) {
                (Some(name), Some(tag)) => ports.push(PortSpec { name, direction, tag: DataTag::new(tag) }),
                _ => ports_ok = false,
            }
        }
    }

    let costs = f.get("costs").and_then(|n| {
        let cpath = join(path, "costs");
        let cf = w.object(n, &cpath, &COST_KEYS, &[])?;
        let dec = |w: &mut Walker<'_>, key: &str| cf.get(key).and_then(|n| w.decimal(n, &join(&cpath, key)));
        let sw_time = dec(w, "sw_time");
        let hw_time = dec(w, "hw_time");
        let hw_area = dec(w, "hw_area");
        let sw_energy = dec(w, "sw_energy");
        let hw_energy = dec(w, "hw_energy");
        let sw_security = cf.get("sw_security").and_then(|n| w.integer(n, &join(&cpath, "sw_security")));
        let hw_security = cf.get("hw_security").and_then(|n| w.integer(n, &join(&cpath, "hw_security")));
        Some(CostAnnotation {
            sw_time: sw_time?,
            hw_time: hw_time?,
            hw_area: hw_area?,
            sw_energy: sw_energy?,
            hw_energy: hw_energy?,
            sw_security: sw_security?,
            hw_security: hw_security?,
        })
    });

    if !ports_ok {
        return None;
    }
    Some(ComponentSpec { id: id?, allowed_kinds: kinds?, ports, costs: costs?, behavior: behavior? })
}

fn connector(w: &mut Walker<'_>, node: &Spanned, path: &str) -> Option<SchedulingConnector> {
    let f = w.object(node, path, &["id", "kind", "from", "to"], &["guard_port", "labels", "default"])?;
    let id = f.get("id").and_then(|n| w.string(n, &join(path, "id")));
    let kind = f.get("kind").and_then(|n| {
        let kpath = join(path, "kind");
        let raw = w.string(n, &kpath)?;
        match raw.parse::<ConnectorKind>() {
            Ok(k) => Some(k),
            Err(msg) => {
                w.schema(n.pos, &kpath, msg);
                None
            }
        }
    });
    let sources = f.get("from").and_then(|n| w.strings(n, &join(path, "from")));
    let targets = f.get("to").and_then(|n| w.strings(n, &join(path, "to")));
    let guard_port = f.get("guard_port").and_then(|n| w.port_ref(n, &join(path, "guard_port")));
    let default_target = f.get("default").and_then(|n| w.string(n, &join(path, "default")));
    let mut labels_ok = true;
    let labels: BTreeMap<String, String> = match f.get("labels") {
        None => BTreeMap::new(),
        Some(n) => {
            let lpath = join(path, "labels");
            w.visit(n, &lpath);
            match &n.node {
                Node::Object(entries) => {
                    let mut map = BTreeMap::new();
                    for e in entries {
                        let epath = format!("{lpath}[{:?}]", e.key);
                        match w.string(&e.value, &epath) {
                            Some(label) => {
                                if map.insert(e.key.clone(), label).is_some() {
                                    w.schema(e.key_pos, &epath, format!("duplicate label target `{}`", e.key));
                                    labels_ok = false;
                                }
                            }
                            None => labels_ok = false,
                        }
                    }
                    map
                }
                other => {
                    w.schema(n.pos, &lpath, format!("expected an object, found {}", other.type_name()));
                    labels_ok = false;
                    BTreeMap::new()
                }
            }
        }
    };
    if kind == Some(ConnectorKind::ExclusiveChoice) {
        for (key, present) in [("labels", f.contains_key("labels")), ("guard_port", f.contains_key("guard_port"))] {
            if !present {
                w.schema(node.pos, path, format!("`xor` connector requires `{key}`"));
            }
        }
        if !f.contains_key("labels") || !f.contains_key("guard_port") {
            return None;
        }
    }
    if !labels_ok || (f.contains_key("guard_port") && guard_port.is_none()) || (f.contains_key("default") && default_target.is_none()) {
        return None;
    }
    Some(SchedulingConnector {
        id: id?,
        kind: kind?,
        sources: sources?,
        targets: targets?,
        guard_port,
        labels,
        default_target,
    })
}

/// Source index of each component id, for locating validation errors.
struct Layout {
    component_index: BTreeMap<String, usize>,
}

fn site_path(layout: &Layout, model: &SystemModel, site: &Site) -> String {
    match site {
        Site::Model => String::new(),
        Site::Component(id) => match layout.component_index.get(id) {
            Some(i) => format!("components[{i}]"),
            None => "components".into(),
        },
        Site::Port { component, direction, port } => {
            let Some(i) = layout.component_index.get(component) else { return "components".into() };
            let key = match direction {
                Direction::Input => "inputs",
                Direction::Output => "outputs",
            };
            let j = model
                .components
                .get(component)
                .and_then(|c| c.ports.iter().filter(|p| p.direction == *direction).position(|p| &p.name == port));
            match j {
                Some(j) => format!("components[{i}].{key}[{j}]"),
                None => format!("components[{i}]"),
            }
        }
        Site::Connector(k) => format!("spg.connectors[{k}]"),
        Site::Edge(k) => format!("ig[{k}]"),
        Site::Initial => "spg.initial".into(),
        Site::Finals => "spg.finals".into(),
    }
}

/// A model with the source position of every field path and the list index
/// of every component id.
pub type Parsed = (SystemModel, BTreeMap<String, Pos>, BTreeMap<String, usize>);

/// Parses without running system validation. Syntax and schema errors
/// are all reported.
pub fn parse_unvalidated(file: &str, text: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let (root, syntax) = tree::parse(text);
    let mut w = Walker { file, diags: Vec::new(), locs: BTreeMap::new() };
    for e in syntax {
        w.diags.push(Diagnostic {
            kind: DiagnosticKind::SyntaxError,
            location: SourceLocation { file: file.into(), line: e.pos.line, column: e.pos.col, path: String::new() },
            message: e.message,
        });
    }
    let Some(root) = root else { return Err(w.diags) };
    let had_syntax_errors = !w.diags.is_empty();

    let Some(top) = w.object(&root, "", &["name", "components", "spg", "ig"], &[]) else { return Err(w.diags) };
    let name = top.get("name").and_then(|n| w.string(n, "name"));

    let mut components = BTreeMap::new();
    let mut component_index = BTreeMap::new();
    if let Some(items) = top.get("components").and_then(|n| w.list(n, "components")) {
        for (i, item) in items.iter().enumerate() {
            let path = format!("components[{i}]");
            if let Some(c) = component(&mut w, item, &path) {
                if component_index.contains_key(&c.id) {
                    let pos = w.locs.get(&format!("{path}.id")).copied().unwrap_or(item.pos);
                    w.schema(pos, &format!("{path}.id"), format!("duplicate component id `{}`", c.id));
                } else {
                    component_index.insert(c.id.clone(), i);
                    components.insert(c.id.clone(), c);
                }
            }
        }
    }

    let spg = top.get("spg").and_then(|n| {
        let f = w.object(n, "spg", &["initial", "finals", "connectors"], &[])?;
        let initial = f.get("initial").and_then(|n| w.string(n, "spg.initial"));
        let finals = f.get("finals").and_then(|n| w.strings(n, "spg.finals"));
        let mut connectors = Vec::new();
        let mut ok = true;
        if let Some(items) = f.get("connectors").and_then(|n| w.list(n, "spg.connectors")) {
            for (i, item) in items.iter().enumerate() {
                match connector(&mut w, item, &format!("spg.connectors[{i}]")) {
                    Some(c) => connectors.push(c),
                    None => ok = false,
                }
            }
        } else {
            ok = false;
        }
        if let Some(finals) = &finals {
            let mut seen = BTreeSet::new();
            for (i, f) in finals.iter().enumerate() {
                if !seen.insert(f) {
                    let p = format!("spg.finals[{i}]");
                    let pos = w.locs[&p];
                    w.schema(pos, &p, format!("duplicate final component `{f}`"));
                }
            }
        }
        ok.then_some(())?;
        Some(SchedulingGraph {
            fsc: components.keys().cloned().collect(),
            connectors,
            initial: initial?,
            finals: finals?.into_iter().collect(),
        })
    });

    let ig = top.get("ig").and_then(|n| {
        let items = w.list(n, "ig")?;
        let mut edges = Vec::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let path = format!("ig[{i}]");
            let Some(f) = w.object(item, &path, &["from", "to"], &[]) else {
                ok = false;
                continue;
            };
            let from = f.get("from").and_then(|n| w.port_ref(n, &join(&path, "from")));
            let to = f.get("to").and_then(|n| w.port_ref(n, &join(&path, "to")));
            match (from, to) {
                (Some(from), Some(to)) => edges.push(InteractionEdge { from, to }),
                _ => ok = false,
            }
        }
        ok.then_some(InteractionGraph { edges })
    });

    if had_syntax_errors || !w.diags.is_empty() {
        return Err(w.diags);
    }
    let (Some(name), Some(spg), Some(ig)) = (name, spg, ig) else { return Err(w.diags) };
    Ok((SystemModel { name, components, spg, ig }, w.locs, component_index))
}

/// Parses and validates a system description.
pub fn parse_system(file: &str, text: &str, registry: &BehaviorRegistry) -> Result<SystemModel, Vec<Diagnostic>> {
    let (model, locs, component_index) = parse_unvalidated(file, text)?;
    validate_system(&model, registry).map_err(|errors| {
        let layout = Layout { component_index };
        errors
            .iter()
            .map(|e| {
                let path = site_path(&layout, &model, &e.site());
                let pos = locs.get(&path).copied().unwrap_or(Pos::START);
                Diagnostic {
                    kind: DiagnosticKind::ValidationError(e.category()),
                    location: SourceLocation { file: file.into(), line: pos.line, column: pos.col, path },
                    message: e.to_string(),
                }
            })
            .collect()
    })
}

fn port_ref_value(p: &PortRef) -> Value {
    Value::List(vec![Value::str(&p.component), Value::str(&p.port)])
}

fn strings_value<'a>(items: impl IntoIterator<Item = &'a String>) -> Value {
    Value::List(items.into_iter().map(Value::str).collect())
}

pub fn system_to_value(model: &SystemModel) -> Value {
    let components = model
        .components
        .values()
        .map(|c| {
            let kinds = c.allowed_kinds.iter().map(|k| Value::str(if *k == Kind::Software { "sw" } else { "hw" }));
            let ports = |dir| {
                Value::List(
                    c.ports
                        .iter()
                        .filter(|p| p.direction == dir)
                        .map(|p| Value::object([("name", Value::str(&p.name)), ("tag", Value::str(p.tag.as_str()))]))
                        .collect(),
                )
            };
            let k = &c.costs;
            Value::object([
                ("id", Value::str(&c.id)),
                ("kinds", Value::List(kinds.collect())),
                ("inputs", ports(Direction::Input)),
                ("outputs", ports(Direction::Output)),
                (
                    "costs",
                    Value::object([
                        ("sw_time", Value::num(k.sw_time)),
                        ("hw_time", Value::num(k.hw_time)),
                        ("hw_area", Value::num(k.hw_area)),
                        ("sw_energy", Value::num(k.sw_energy)),
                        ("hw_energy", Value::num(k.hw_energy)),
                        ("sw_security", Value::num(k.sw_security)),
                        ("hw_security", Value::num(k.hw_security)),
                    ]),
                ),
                ("behavior", Value::str(&c.behavior)),
            ])
        })
        .collect();
    let connectors = model
        .spg
        .connectors
        .iter()
        .map(|c| {
            let mut entries = vec![
                ("id".to_string(), Value::str(&c.id)),
                ("kind".to_string(), Value::str(c.kind.keyword())),
                ("from".to_string(), strings_value(&c.sources)),
                ("to".to_string(), strings_value(&c.targets)),
            ];
            if let Some(g) = &c.guard_port {
                entries.push(("guard_port".into(), port_ref_value(g)));
            }
            if c.kind == ConnectorKind::ExclusiveChoice || !c.labels.is_empty() {
                entries.push((
                    "labels".into(),
                    Value::Object(c.labels.iter().map(|(t, l)| (t.clone(), Value::str(l))).collect()),
                ));
            }
            if let Some(d) = &c.default_target {
                entries.push(("default".into(), Value::str(d)));
            }
            Value::Object(entries)
        })
        .collect();
    let edges = model
        .ig
        .edges
        .iter()
        .map(|e| Value::object([("from", port_ref_value(&e.from)), ("to", port_ref_value(&e.to))]))
        .collect();
    Value::object([
        ("name", Value::str(&model.name)),
        ("components", Value::List(components)),
        (
            "spg",
            Value::object([
                ("initial", Value::str(&model.spg.initial)),
                ("finals", strings_value(&model.spg.finals)),
                ("connectors", Value::List(connectors)),
            ]),
        ),
        ("ig", Value::List(edges)),
    ])
}

/// Canonical text: fixed key order, components sorted by id, connectors
/// and edges in declaration order.
pub fn serialize_system(model: &SystemModel) -> String {
    system_to_value(model).to_pretty()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
# smallest possible system
{
  name: "minimal",
  components: [
    {
      id: "c0", kinds: ["sw"], inputs: [], outputs: [],
      costs: {sw_time: 2, hw_time: 0, hw_area: 0, sw_energy: 0, hw_energy: 0, sw_security: 0, hw_security: 0},
      behavior: "echo",
    },
  ],
  spg: {initial: "c0", finals: ["c0"], connectors: []},
  ig: [],
}
"#;

    #[test]
    fn minimal_roundtrip() {
        let reg = BehaviorRegistry::with_builtins();
        let m = parse_system("min.f4ms", MINIMAL, &reg).unwrap();
        let text = serialize_system(&m);
        assert_eq!(text.matches("id: \"c0\"").count(), 1);
        assert!(text.contains("ig: [],"));
        assert_eq!(parse_system("again", &text, &reg).unwrap(), m);
        assert_eq!(serialize_system(&m), text);
    }

    #[test]
    fn empty_input_is_syntax_error_at_origin() {
        let reg = BehaviorRegistry::with_builtins();
        let d = parse_system("e.f4ms", "", &reg).unwrap_err();
        assert_eq!(d[0].kind, DiagnosticKind::SyntaxError);
        assert_eq!((d[0].location.line, d[0].location.column), (1, 1));
    }

    #[test]
    fn xor_without_labels_is_schema_error_at_connector() {
        let reg = BehaviorRegistry::with_builtins();
        let text = MINIMAL.replace(
            "connectors: []",
            "connectors: [{id: \"x\", kind: \"xor\", from: [\"c0\"], to: [\"c0\"]}]",
        );
        let d = parse_system("x.f4ms", &text, &reg).unwrap_err();
        assert!(d.iter().all(|d| d.kind == DiagnosticKind::SchemaError));
        assert!(d.iter().any(|d| d.location.path == "spg.connectors[0]" && d.message.contains("labels")));
    }

    #[test]
    fn independent_schema_errors_are_all_reported() {
        let reg = BehaviorRegistry::with_builtins();
        let text = MINIMAL
            .replace("sw_time: 2", "sw_time: 1e3")
            .replace("kinds: [\"sw\"]", "kinds: [\"fpga\"]")
            .replace("initial: \"c0\"", "initial: 7");
        let d = parse_system("s.f4ms", &text, &reg).unwrap_err();
        assert_eq!(d.len(), 3, "{d:#?}");
        let paths: Vec<_> = d.iter().map(|d| d.location.path.as_str()).collect();
        assert!(paths.contains(&"components[0].costs.sw_time"));
        assert!(paths.contains(&"components[0].kinds[0]"));
        assert!(paths.contains(&"spg.initial"));
    }

    #[test]
    fn validation_errors_are_located() {
        let reg = BehaviorRegistry::with_builtins();
        let text = MINIMAL.replace("behavior: \"echo\"", "behavior: \"nope\"");
        let d = parse_system("v.f4ms", &text, &reg).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::ValidationError("UnknownBehavior"));
        assert_eq!(d[0].location.path, "components[0]");
        assert_eq!(d[0].location.line, 6);
        let line = d[0].to_string();
        assert!(line.starts_with("v.f4ms:6:5: ValidationError: UnknownBehavior: "), "{line}");
    }

    #[test]
    fn security_must_be_integer() {
        let reg = BehaviorRegistry::with_builtins();
        let text = MINIMAL.replace("sw_security: 0", "sw_security: 1.0");
        let d = parse_system("s.f4ms", &text, &reg).unwrap_err();
        assert_eq!(d[0].location.path, "components[0].costs.sw_security");
    }
}
