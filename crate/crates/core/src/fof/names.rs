use std::collections::BTreeMap;

use super::FofError;

/// Prefix of escaped constant and theorem names.
pub const NAME_PREFIX: &str = "hh_";
/// Prefix of escaped type constructor names.
pub const TYPE_PREFIX: &str = "hht_";

/// Hex-escape every byte that is not an ASCII letter or digit (including `_`),
/// so the result is a legal TPTP lower word after prefixing.
pub fn escape(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for b in name.bytes() {
        if b.is_ascii_alphanumeric() {
            out.push(b as char);
        } else {
            out.push_str(&format!("_{:02x}", b));
        }
    }
    out
}

/// Inverse of [`escape`]. `None` for text that `escape` cannot produce.
pub fn unescape(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'_' => {
                let hex = text.get(i + 1..i + 3)?;
                if !hex.bytes().all(|c| c.is_ascii_digit() || (b'a'..=b'f').contains(&c)) {
                    return None;
                }
                let b = u8::from_str_radix(hex, 16).ok()?;
                if b.is_ascii_alphanumeric() {
                    return None;
                }
                out.push(b);
                i += 3;
            }
            b if b.is_ascii_alphanumeric() => {
                out.push(b);
                i += 1;
            }
            _ => return None,
        }
    }
    String::from_utf8(out).ok()
}

pub fn encode_name(name: &str) -> String {
    format!("{}{}", NAME_PREFIX, escape(name))
}

pub fn encode_type_name(name: &str) -> String {
    format!("{}{}", TYPE_PREFIX, escape(name))
}

/// Identifiers emitted by one encoding, with the names they stand for.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameMap {
    to_original: BTreeMap<String, String>,
}

impl NameMap {
    pub fn new() -> NameMap {
        NameMap::default()
    }

    /// Record `name` under its escaped identifier and return that identifier.
    pub fn insert(&mut self, name: &str) -> String {
        let id = encode_name(name);
        self.to_original.entry(id.clone()).or_insert_with(|| name.to_string());
        id
    }

    pub fn insert_type(&mut self, name: &str) -> String {
        let id = encode_type_name(name);
        self.to_original.entry(id.clone()).or_insert_with(|| name.to_string());
        id
    }

    pub fn decode(&self, id: &str) -> Result<&str, FofError> {
        self.to_original.get(id).map(String::as_str).ok_or_else(|| FofError::UnknownIdentifier(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.to_original.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.to_original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_original.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.to_original.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Look up the original name of an identifier emitted by the encoder.
pub fn decode_name<'m>(map: &'m NameMap, id: &str) -> Result<&'m str, FofError> {
    map.decode(id)
}
