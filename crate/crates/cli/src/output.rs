//! Rendering helpers: fixed-format JSON so identical runs emit identical
//! bytes, error objects for nonzero exits, and atomic artifact writes.

use std::io;
use std::path::Path;

use serde_json::Value;
use tinet_core::Error;

/// Floats at 17 significant digits; doubles survive a round trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Deterministic renderer: objects keep insertion order, floats print at
/// full precision, integers stay integers.
pub fn print_value(v: &Value) -> String {
    let mut out = String::new();
    render(v, 0, &mut out);
    out
}

fn render(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                out.push_str(&n.to_string());
            } else {
                out.push_str(&fmt_float(n.as_f64().expect("finite by construction")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"))
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(depth + 1, out);
                render(item, depth + 1, out);
            }
            newline(depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (key, value)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(depth + 1, out);
                out.push_str(&serde_json::to_string(key).expect("strings always serialize"));
                out.push_str(": ");
                render(value, depth + 1, out);
            }
            newline(depth, out);
            out.push('}');
        }
    }
}

fn newline(depth: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Machine-readable error object mirroring the library error variants.
pub fn error_value(e: &Error) -> Value {
    use serde_json::json;
    let (kind, detail) = match e {
        Error::Dimension(msg) => return tagged("dimension", json!({ "detail": msg })),
        Error::Singular { sigma_min } => ("singular", json!({ "sigmaMin": sigma_min })),
        Error::NotHurwitz { max_real } => ("notHurwitz", json!({ "maxReal": max_real })),
        Error::IllConditioned { achieved, target } => (
            "illConditioned",
            json!({ "achieved": achieved, "target": target }),
        ),
        Error::OffCircle { modulus } => ("offCircle", json!({ "modulus": modulus })),
        Error::NotStabilizing { margin } => ("notStabilizing", json!({ "margin": margin })),
        Error::Inconclusive { margin, grid } => {
            ("inconclusive", json!({ "margin": margin, "grid": grid }))
        }
        Error::NoConvergence {
            max_points,
            last_change,
        } => (
            "noConvergence",
            json!({ "maxPoints": max_points, "lastChange": last_change }),
        ),
        Error::UnsupportedCoupling { d_tilde } => {
            ("unsupportedCoupling", json!({ "dTilde": d_tilde }))
        }
        Error::Stalled { step } => ("stalled", json!({ "step": step })),
        Error::StepLeavesStabilizingSet => ("stepLeavesStabilizingSet", json!({})),
        Error::RingTooSmall { n, min } => ("ringTooSmall", json!({ "N": n, "min": min })),
        Error::OracleTooLarge { dim, cap } => {
            ("oracleTooLarge", json!({ "dim": dim, "cap": cap }))
        }
        Error::OutputSelection { defect } => ("outputSelection", json!({ "defect": defect })),
        Error::EigFailure => ("eigFailure", json!({})),
        Error::Config(msg) => return tagged("config", json!({ "detail": msg })),
        Error::InvalidSpec(msg) => return tagged("invalidSpec", json!({ "detail": msg })),
    };
    let mut value = detail;
    value["message"] = Value::String(e.to_string());
    tagged(kind, value)
}

fn tagged(kind: &str, mut value: Value) -> Value {
    let obj = value.as_object_mut().expect("error payloads are objects");
    let mut out = serde_json::Map::new();
    out.insert("kind".into(), Value::String(kind.into()));
    for (k, v) in obj.iter() {
        out.insert(k.clone(), v.clone());
    }
    Value::Object(out)
}

/// Writes through a sibling temp file and renames, so readers never observe
/// a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    std::fs::write(tmp, bytes)?;
    std::fs::rename(tmp, path)
}
