//! JSON model files.
//!
//! ```text
//! {
//!   "type": "indirect" | "joint" | "projective",
//!   "dimS": 2, "dimA": 2,
//!   "U": matrix, "xi": vector, "M": matrix, "N": matrix (joint only),
//!   "A": matrix, "B": matrix,
//!   "projectors": [{"value": 1.0, "projector": matrix}, ...] (projective only),
//!   "states": [vector, ...]
//! }
//! ```
//!
//! A vector is an array of `[re, im]` pairs. A matrix is either an array of
//! rows of `[re, im]` pairs or one flat row-major array of pairs. Projective
//! models need only `dimS`, `A`, `B` and `projectors`; they are dilated when
//! checked. Extra top-level keys (such as a witness block) are preserved.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::measurement::{IndirectModel, JointModel, MeasurementError, Outcome, ProjectiveModel};
use crate::operator::{Operator, OperatorError, SpaceLayout, StateVector, C64};

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}, column {column}{}: {message}", .field.as_ref().map(|f| format!(" (in field `{f}`)")).unwrap_or_default())]
    Syntax {
        line: usize,
        column: usize,
        field: Option<String>,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("invalid model: {0}")]
    Model(#[from] MeasurementError),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ModelFileError {
    ModelFileError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Indirect,
    Joint,
    Projective,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Indirect => "indirect",
            ModelKind::Joint => "joint",
            ModelKind::Projective => "projective",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Indirect(IndirectModel),
    Joint(JointModel),
    Projective(ProjectiveModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Indirect(_) => ModelKind::Indirect,
            Model::Joint(_) => ModelKind::Joint,
            Model::Projective(_) => ModelKind::Projective,
        }
    }

    pub fn dim_system(&self) -> usize {
        match self {
            Model::Indirect(m) => m.layout().dim_system(),
            Model::Joint(m) => m.layout().dim_system(),
            Model::Projective(m) => m.dim(),
        }
    }

    /// Indirect model for single-meter relations. Two-outcome ±1 projective
    /// models use the qubit-ancilla dilation, others the cyclic one.
    pub fn indirect(&self) -> Option<Result<IndirectModel, MeasurementError>> {
        match self {
            Model::Indirect(m) => Some(Ok(m.clone())),
            Model::Joint(_) => None,
            Model::Projective(p) => Some(p.dilate().or_else(|_| p.dilate_cyclic())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: Model,
    pub states: Vec<StateVector>,
    /// Unrecognized top-level keys, kept verbatim.
    pub extra: Map<String, Value>,
}

const KNOWN_KEYS: [&str; 11] = ["type", "dimS", "dimA", "U", "xi", "M", "N", "A", "B", "projectors", "states"];

/// Last `"key":` starting before byte `end`, used to name the field a
/// syntax error interrupted.
fn last_key_before(text: &str, end: usize) -> Option<String> {
    let mut end = end.min(text.len());
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    let head = &text[..end];
    let mut search = head.len();
    while let Some(colon) = head[..search].rfind(':') {
        let before = head[..colon].trim_end();
        if let Some(stripped) = before.strip_suffix('"') {
            if let Some(open) = stripped.rfind('"') {
                let key = &stripped[open + 1..];
                if !key.is_empty() && !key.contains(['{', '}', '[', ']', ',']) {
                    return Some(key.to_string());
                }
            }
        }
        search = colon;
    }
    None
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.min(l.len());
        }
        offset += l.len();
    }
    text.len()
}

pub fn parse_json(text: &str) -> Result<Value, ModelFileError> {
    serde_json::from_str(text).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        ModelFileError::Syntax {
            line,
            column,
            field: last_key_before(text, byte_offset(text, line, column)),
            message: e.to_string(),
        }
    })
}

fn number(v: &Value, field: &str) -> Result<f64, ModelFileError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| field_err(field, format!("expected a finite number, found {v}")))
}

fn complex(v: &Value, field: &str) -> Result<C64, ModelFileError> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(C64::new(number(re, field)?, number(im, field)?)),
        _ => Err(field_err(field, format!("expected an [re, im] pair, found {v}"))),
    }
}

pub fn parse_vector(v: &Value, field: &str, dim: Option<usize>) -> Result<Vec<C64>, ModelFileError> {
    let items = v
        .as_array()
        .ok_or_else(|| field_err(field, "expected an array of [re, im] pairs"))?;
    if let Some(d) = dim {
        if items.len() != d {
            return Err(field_err(field, format!("expected {d} entries, found {}", items.len())));
        }
    }
    items
        .iter()
        .enumerate()
        .map(|(i, z)| complex(z, &format!("{field}[{i}]")))
        .collect()
}

pub fn parse_matrix(v: &Value, field: &str, dim: usize) -> Result<Operator, ModelFileError> {
    let items = v
        .as_array()
        .ok_or_else(|| field_err(field, "expected an array of rows"))?;
    let flat = items
        .first()
        .and_then(Value::as_array)
        .and_then(|first| first.first())
        .is_some_and(Value::is_number);
    let data = if flat {
        parse_vector(v, field, Some(dim * dim))?
    } else {
        if items.len() != dim {
            return Err(field_err(field, format!("expected {dim} rows, found {}", items.len())));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in items.iter().enumerate() {
            data.extend(parse_vector(row, &format!("{field}[{i}]"), Some(dim))?);
        }
        data
    };
    Operator::from_vec(dim, data).map_err(|e| field_err(field, e.to_string()))
}

fn state(v: &Value, field: &str, dim: usize) -> Result<StateVector, ModelFileError> {
    StateVector::new(parse_vector(v, field, Some(dim))?).map_err(|e| field_err(field, e.to_string()))
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, ModelFileError> {
    obj.get(key).ok_or_else(|| field_err(key, "missing"))
}

fn dimension(obj: &Map<String, Value>, key: &str, min: usize) -> Result<usize, ModelFileError> {
    let v = required(obj, key)?;
    let d = v
        .as_u64()
        .ok_or_else(|| field_err(key, format!("expected a positive integer, found {v}")))? as usize;
    if d < min {
        return Err(field_err(key, format!("must be at least {min}, found {d}")));
    }
    Ok(d)
}

fn layout_err(e: OperatorError) -> ModelFileError {
    field_err("dimS", e.to_string())
}

pub fn from_value(value: &Value) -> Result<ModelDocument, ModelFileError> {
    let obj = value
        .as_object()
        .ok_or_else(|| field_err("<root>", "expected a JSON object"))?;
    let kind = match required(obj, "type")?.as_str() {
        Some("indirect") => ModelKind::Indirect,
        Some("joint") => ModelKind::Joint,
        Some("projective") => ModelKind::Projective,
        _ => {
            return Err(field_err(
                "type",
                format!("expected \"indirect\", \"joint\" or \"projective\", found {}", obj["type"]),
            ))
        }
    };
    let dim_s = dimension(obj, "dimS", 2)?;
    let matrix = |key: &str, dim: usize| parse_matrix(required(obj, key)?, key, dim);
    let observable = matrix("A", dim_s)?;
    let conjugate = matrix("B", dim_s)?;

    let model = match kind {
        ModelKind::Projective => {
            let list = required(obj, "projectors")?
                .as_array()
                .ok_or_else(|| field_err("projectors", "expected an array"))?;
            let mut outcomes = Vec::with_capacity(list.len());
            for (i, entry) in list.iter().enumerate() {
                let field = format!("projectors[{i}]");
                let value = entry
                    .get("value")
                    .ok_or_else(|| field_err(format!("{field}.value"), "missing"))?;
                let projector = entry
                    .get("projector")
                    .ok_or_else(|| field_err(format!("{field}.projector"), "missing"))?;
                outcomes.push(Outcome {
                    value: number(value, &format!("{field}.value"))?,
                    projector: parse_matrix(projector, &format!("{field}.projector"), dim_s)?,
                });
            }
            Model::Projective(ProjectiveModel::new(outcomes, observable, conjugate)?)
        }
        ModelKind::Indirect | ModelKind::Joint => {
            let dim_a = dimension(obj, "dimA", 1)?;
            let layout = SpaceLayout::new(dim_s, dim_a).map_err(layout_err)?;
            let unitary = matrix("U", layout.composite())?;
            let xi = state(required(obj, "xi")?, "xi", dim_a)?;
            let meter = matrix("M", dim_a)?;
            if kind == ModelKind::Joint {
                let meter_b = matrix("N", dim_a)?;
                Model::Joint(JointModel::new(layout, unitary, xi, meter, meter_b, observable, conjugate)?)
            } else {
                Model::Indirect(IndirectModel::new(layout, unitary, xi, meter, observable, conjugate)?)
            }
        }
    };

    let states = match obj.get("states") {
        None => Vec::new(),
        Some(v) => v
            .as_array()
            .ok_or_else(|| field_err("states", "expected an array of vectors"))?
            .iter()
            .enumerate()
            .map(|(i, s)| state(s, &format!("states[{i}]"), dim_s))
            .collect::<Result<_, _>>()?,
    };
    let extra = obj
        .iter()
        .filter(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok(ModelDocument { model, states, extra })
}

pub fn parse_document(text: &str) -> Result<ModelDocument, ModelFileError> {
    from_value(&parse_json(text)?)
}

fn read(path: &Path) -> Result<String, ModelFileError> {
    fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<ModelDocument, ModelFileError> {
    parse_document(&read(path)?)
}

/// A standalone state file: a JSON vector of `[re, im]` pairs.
pub fn load_state(path: &Path, dim: usize) -> Result<StateVector, ModelFileError> {
    state(&parse_json(&read(path)?)?, "state", dim)
}

pub fn vector_to_value(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

pub fn matrix_to_value(m: &Operator) -> Value {
    Value::Array(m.rows().map(vector_to_value).collect())
}

impl ModelDocument {
    pub fn new(model: Model, states: Vec<StateVector>) -> Self {
        Self {
            model,
            states,
            extra: Map::new(),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("type".into(), json!(self.model.kind().as_str()));
        obj.insert("dimS".into(), json!(self.model.dim_system()));
        match &self.model {
            Model::Indirect(m) => {
                obj.insert("dimA".into(), json!(m.layout().dim_apparatus()));
                obj.insert("U".into(), matrix_to_value(m.unitary()));
                obj.insert("xi".into(), vector_to_value(m.xi().amplitudes()));
                obj.insert("M".into(), matrix_to_value(m.meter()));
                obj.insert("A".into(), matrix_to_value(m.observable()));
                obj.insert("B".into(), matrix_to_value(m.conjugate()));
            }
            Model::Joint(m) => {
                obj.insert("dimA".into(), json!(m.layout().dim_apparatus()));
                obj.insert("U".into(), matrix_to_value(m.unitary()));
                obj.insert("xi".into(), vector_to_value(m.xi().amplitudes()));
                obj.insert("M".into(), matrix_to_value(m.meter_a()));
                obj.insert("N".into(), matrix_to_value(m.meter_b()));
                obj.insert("A".into(), matrix_to_value(m.observable()));
                obj.insert("B".into(), matrix_to_value(m.conjugate()));
            }
            Model::Projective(p) => {
                obj.insert("A".into(), matrix_to_value(p.observable()));
                obj.insert("B".into(), matrix_to_value(p.conjugate()));
                let outcomes = p
                    .outcomes()
                    .iter()
                    .map(|o| json!({"value": o.value, "projector": matrix_to_value(&o.projector)}))
                    .collect();
                obj.insert("projectors".into(), Value::Array(outcomes));
            }
        }
        obj.insert(
            "states".into(),
            Value::Array(self.states.iter().map(|s| vector_to_value(s.amplitudes())).collect()),
        );
        for (k, v) in &self.extra {
            obj.insert(k.clone(), v.clone());
        }
        Value::Object(obj)
    }

    /// One top-level key per line and one matrix row (or state) per line.
    pub fn to_json(&self) -> String {
        let value = self.to_value();
        let obj = value.as_object().expect("documents are objects");
        let compact = |v: &Value| serde_json::to_string(v).expect("JSON values serialize");
        let keys = KNOWN_KEYS
            .iter()
            .map(|k| k.to_string())
            .filter(|k| obj.contains_key(k))
            .chain(self.extra.keys().cloned());
        let mut entries = Vec::new();
        for key in keys {
            let v = &obj[&key];
            let body = match v.as_array() {
                Some(items) if !items.is_empty() && items.iter().all(|i| i.is_array() || i.is_object()) => {
                    let lines: Vec<String> = items.iter().map(|i| format!("    {}", compact(i))).collect();
                    format!("[\n{}\n  ]", lines.join(",\n"))
                }
                _ => compact(v),
            };
            entries.push(format!("  {}: {body}", compact(&json!(key))));
        }
        format!("{{\n{}\n}}\n", entries.join(",\n"))
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        fs::write(path, self.to_json()).map_err(|source| ModelFileError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
