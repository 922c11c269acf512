//! JSON assembly for the machine-readable outputs. Non-finite floats
//! (an infinite PSNR from a perfect reconstruction) serialize as null,
//! and the schemas mark those fields nullable.

use std::path::Path;

use scmap_core::metrics::StageTimings;
use serde_json::{json, Map, Value};

use crate::error::CliResult;

pub fn f64_or_null(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn timing_value(t: &StageTimings) -> Value {
    let mut stages = Map::new();
    for (name, r) in t.report() {
        stages.insert(
            name,
            json!({
                "count": r.count,
                "mean_s": f64_or_null(r.mean),
                "p50_s": f64_or_null(r.p50),
                "p95_s": f64_or_null(r.p95),
                "max_s": f64_or_null(r.max),
            }),
        );
    }
    Value::Object(stages)
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn print_json(value: &Value) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
