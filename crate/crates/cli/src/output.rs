//! Result rows and their CSV / JSON-lines encodings.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;

/// Bumped whenever a command's columns change.
pub const SCHEMA_VERSION: u32 = 1;

/// One output value.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "NaN".into(),
            Cell::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            // Non-finite floats have no JSON spelling.
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        i64::try_from(v).map_or_else(|_| Cell::Text(v.to_string()), Cell::Int)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// Column names of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Schema {
    pub command: &'static str,
    pub inputs: Vec<&'static str>,
    pub outputs: Vec<&'static str>,
}

impl Schema {
    fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["id"];
        h.extend(&self.inputs);
        h.extend(&self.outputs);
        h.extend(["provenance", "error"]);
        h
    }
}

/// One line of output. `inputs` and `outputs` follow the schema order;
/// a failed row has empty `outputs` and a message in `error`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub id: usize,
    pub inputs: Vec<Cell>,
    pub outputs: Vec<Cell>,
    pub provenance: String,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn ok(id: usize, inputs: Vec<Cell>, outputs: Vec<Cell>, provenance: &str) -> Self {
        ResultRow {
            id,
            inputs,
            outputs,
            provenance: provenance.to_string(),
            error: None,
        }
    }

    pub fn failed(id: usize, inputs: Vec<Cell>, provenance: &str, error: impl ToString) -> Self {
        ResultRow {
            id,
            inputs,
            outputs: Vec::new(),
            provenance: provenance.to_string(),
            error: Some(error.to_string()),
        }
    }

    fn cells(&self, schema: &Schema) -> Vec<Cell> {
        let mut out = vec![Cell::from(self.id)];
        out.extend(self.inputs.iter().cloned());
        let mut outputs = self.outputs.clone();
        outputs.resize(schema.outputs.len(), Cell::Null);
        out.extend(outputs);
        out.push(Cell::Text(self.provenance.clone()));
        out.push(self.error.clone().map_or(Cell::Null, Cell::Text));
        out
    }

    fn json(&self, schema: &Schema) -> Value {
        let named = |names: &[&str], cells: &[Cell]| -> Value {
            let mut m = Map::new();
            for (i, name) in names.iter().enumerate() {
                m.insert(name.to_string(), cells.get(i).unwrap_or(&Cell::Null).json());
            }
            Value::Object(m)
        };
        let mut m = Map::new();
        m.insert("id".into(), Value::from(self.id));
        m.insert("inputs".into(), named(&schema.inputs, &self.inputs));
        m.insert("outputs".into(), named(&schema.outputs, &self.outputs));
        m.insert("provenance".into(), Value::String(self.provenance.clone()));
        m.insert(
            "error".into(),
            self.error.clone().map_or(Value::Null, Value::String),
        );
        Value::Object(m)
    }
}

/// Writes the header comment, the column header and every row.
pub fn write_rows<W: Write>(
    out: W,
    format: Format,
    schema: &Schema,
    rows: &[ResultRow],
) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut out = out;
            writeln!(out, "# amo-lab {} schema v{SCHEMA_VERSION}", schema.command)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(schema.header())?;
            for row in rows {
                w.write_record(row.cells(schema).iter().map(Cell::csv))?;
            }
            w.flush()
        }
        Format::Json => {
            let mut out = out;
            for row in rows {
                serde_json::to_writer(&mut out, &row.json(schema))?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}
