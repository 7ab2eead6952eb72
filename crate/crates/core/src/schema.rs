//! JSON schema for the config files.

use schemars::gen::{SchemaGenerator, SchemaSettings};
use schemars::schema::{RootSchema, Schema};
use schemars::JsonSchema;
use serde_json::{json, Value};

use crate::experiments::ExperimentConfig;
use crate::formula::{Conjunction, Dnf, Literal, Word};
use crate::oracle::OracleConfig;
use crate::VarSpace;

fn from_json(v: Value) -> Schema {
    serde_json::from_value(v).expect("static schema parses")
}

impl JsonSchema for Word {
    fn schema_name() -> String {
        "Word".into()
    }

    fn json_schema(_: &mut SchemaGenerator) -> Schema {
        from_json(json!({
            "type": "string",
            "pattern": "^[01]+$",
            "description": "Non-empty binary string."
        }))
    }
}

impl JsonSchema for Literal {
    fn schema_name() -> String {
        "Literal".into()
    }

    fn json_schema(_: &mut SchemaGenerator) -> Schema {
        from_json(json!({
            "type": "object",
            "required": ["b", "sign"],
            "properties": {
                "b": { "type": "string", "pattern": "^[01]+$" },
                "sign": { "enum": ["+", "-"] }
            },
            "patternProperties": {
                "^y[1-9][0-9]*$": { "type": "integer", "minimum": 0 }
            },
            "additionalProperties": false
        }))
    }
}

impl JsonSchema for Conjunction {
    fn schema_name() -> String {
        "Conjunction".into()
    }

    fn json_schema(gen: &mut SchemaGenerator) -> Schema {
        <Vec<Literal>>::json_schema(gen)
    }
}

impl JsonSchema for Dnf {
    fn schema_name() -> String {
        "Dnf".into()
    }

    fn json_schema(gen: &mut SchemaGenerator) -> Schema {
        let conj = serde_json::to_value(gen.subschema_for::<Vec<Conjunction>>()).expect("schema serializes");
        from_json(json!({
            "type": "object",
            "required": ["conjunctions", "width"],
            "properties": {
                "conjunctions": conj,
                "width": { "type": "integer", "minimum": 0 },
                "polarity": { "enum": ["dnf", "cnf"], "default": "dnf" }
            },
            "additionalProperties": false
        }))
    }
}

/// Stand-in for rationals written as `"p/q"`.
pub struct RatioText;

impl JsonSchema for RatioText {
    fn schema_name() -> String {
        "Ratio".into()
    }

    fn json_schema(_: &mut SchemaGenerator) -> Schema {
        from_json(json!({
            "type": "string",
            "pattern": "^-?[0-9]+(/[0-9]*[1-9][0-9]*)?$"
        }))
    }
}

fn root<T: JsonSchema>() -> RootSchema {
    let settings = SchemaSettings::draft07().with(|s| s.option_add_null_type = false);
    SchemaGenerator::new(settings).into_root_schema_for::<T>()
}

/// Names of the config kinds, matching the keys of [`config_schema`].
pub const CONFIG_KINDS: [&str; 3] = ["experimentConfig", "oracleConfig", "varSpace"];

/// One standalone draft-07 schema per config kind.
pub fn config_schema() -> Value {
    json!({
        "experimentConfig": root::<ExperimentConfig>(),
        "oracleConfig": root::<OracleConfig>(),
        "varSpace": root::<VarSpace>(),
    })
}
