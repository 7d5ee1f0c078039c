//! Certification report: constants tables plus flat per-check records.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use super::ConstantsTable;
use crate::spacetime::QUADRATURE_RULE;

/// One flat key-value record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record(Map<String, Value>);

impl Record {
    pub fn new(check: &str) -> Self {
        let mut m = Map::new();
        m.insert("check".into(), Value::from(check));
        m.insert("rule".into(), Value::from(QUADRATURE_RULE));
        Self(m)
    }

    pub fn constants(self, id: &str) -> Self {
        self.text("constants", id)
    }

    pub fn num(mut self, key: &str, x: f64) -> Self {
        self.0.insert(key.into(), Value::from(x));
        self
    }

    pub fn opt(self, key: &str, x: Option<f64>) -> Self {
        match x {
            Some(x) => self.num(key, x),
            None => self.null(key),
        }
    }

    pub fn int(mut self, key: &str, x: usize) -> Self {
        self.0.insert(key.into(), Value::from(x));
        self
    }

    pub fn flag(mut self, key: &str, b: bool) -> Self {
        self.0.insert(key.into(), Value::from(b));
        self
    }

    pub fn opt_flag(mut self, key: &str, b: Option<bool>) -> Self {
        self.0.insert(key.into(), b.map_or(Value::Null, Value::from));
        self
    }

    pub fn text(mut self, key: &str, s: &str) -> Self {
        self.0.insert(key.into(), Value::from(s));
        self
    }

    fn null(mut self, key: &str) -> Self {
        self.0.insert(key.into(), Value::Null);
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    /// Value of `certified`; records without one count as passing.
    pub fn passed(&self) -> bool {
        self.0.get("certified").and_then(Value::as_bool).unwrap_or(true)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CertificationReport {
    pub constants: BTreeMap<String, ConstantsTable>,
    pub records: Vec<Record>,
}

impl CertificationReport {
    pub fn add_constants(&mut self, id: &str, table: ConstantsTable) {
        self.constants.insert(id.to_string(), table);
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    /// True when every record passes.
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(Record::passed)
    }

    /// Every `constants` reference resolves to a dumped table.
    pub fn is_closed(&self) -> bool {
        self.records.iter().all(|r| match r.get("constants") {
            Some(Value::String(id)) => self.constants.contains_key(id),
            _ => true,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
