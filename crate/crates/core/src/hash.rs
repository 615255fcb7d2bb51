//! Stable hashing over a canonical payload encoding.
//!
//! Group-by routing, registry content digests, and the fallback embedder all
//! need a hash that is identical across runs, platforms, and worker
//! processes, so we pin FNV-1a (64-bit) over a fixed byte encoding instead
//! of relying on `std`'s randomized hashers.

use serde_json::Value;

const FNV_OFFSET_BASIS: u64 = 14_695_981_039_346_656_037;
const FNV_PRIME: u64 = 1_099_511_628_211;

/// Separator placed between projected grouping elements before hashing.
pub const GROUP_SEPARATOR: u8 = 0x1F;

/// FNV-1a, 64-bit. `stable_hash(b"")` is the offset basis.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET_BASIS;
    for &byte in bytes {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Hex form of [`stable_hash`], used as the registry content digest.
pub fn content_digest(bytes: &[u8]) -> String {
    format!("{:016x}", stable_hash(bytes))
}

/// Canonical byte encoding of a payload value.
///
/// Integers as decimal text, floats as shortest round-trip decimal, strings
/// as raw UTF-8, sequences as `[` item `,` ... `]`. Booleans, nulls, and
/// maps are included so every JSON payload has a defined encoding; map keys
/// are emitted in document order.
pub fn canonical_bytes(value: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    encode_into(value, &mut out);
    out
}

fn encode_into(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.extend_from_slice(i.to_string().as_bytes());
            } else if let Some(u) = n.as_u64() {
                out.extend_from_slice(u.to_string().as_bytes());
            } else {
                // Display for f64 prints the shortest decimal that
                // round-trips, which is exactly the contract here.
                let f = n.as_f64().unwrap_or(f64::NAN);
                out.extend_from_slice(format!("{f}").as_bytes());
            }
        }
        Value::String(s) => out.extend_from_slice(s.as_bytes()),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                encode_into(item, out);
            }
            out.push(b']');
        }
        Value::Object(map) => {
            out.push(b'{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                out.extend_from_slice(key.as_bytes());
                out.push(b':');
                encode_into(item, out);
            }
            out.push(b'}');
        }
    }
}

/// Encoding of a projected tuple slice: canonical elements joined by the
/// unit separator byte.
pub fn projection_bytes<'a>(elements: impl IntoIterator<Item = &'a Value>) -> Vec<u8> {
    let mut out = Vec::new();
    for (i, element) in elements.into_iter().enumerate() {
        if i > 0 {
            out.push(GROUP_SEPARATOR);
        }
        encode_into(element, &mut out);
    }
    out
}
