//! Field serialization: `NLPF` magic, a little-endian u32 header length, a
//! JSON header with the grid metadata, then the values as f64 LE.

use serde::{Deserialize, Serialize};

use super::{Field, FieldError, Grid};

const MAGIC: &[u8; 4] = b"NLPF";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub grid: Grid,
    pub count: usize,
    pub encoding: String,
}

/// Parse and validate a JSON field header.
pub fn parse_field_header(text: &str) -> Result<FieldHeader, FieldError> {
    let h: FieldHeader = serde_json::from_str(text).map_err(|e| FieldError::Encoding(e.to_string()))?;
    h.grid.validate()?;
    if h.encoding != "f64le" {
        return Err(FieldError::Encoding(format!("unsupported encoding '{}'", h.encoding)));
    }
    if h.count != h.grid.len() {
        return Err(FieldError::Length { expected: h.grid.len(), got: h.count });
    }
    Ok(h)
}

pub fn encode_field(u: &Field) -> Vec<u8> {
    let header = FieldHeader { grid: u.grid.clone(), count: u.values.len(), encoding: "f64le".into() };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + 8 * u.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in &u.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field, FieldError> {
    let err = |m: &str| FieldError::Encoding(m.into());
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(err("missing NLPF magic"));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(8..8 + hlen).ok_or_else(|| err("truncated header"))?;
    let text = std::str::from_utf8(body).map_err(|_| err("header is not UTF-8"))?;
    let h = parse_field_header(text)?;
    let data = &bytes[8 + hlen..];
    if data.len() != 8 * h.count {
        return Err(FieldError::Length { expected: h.count, got: data.len() / 8 });
    }
    let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Field::new(h.grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;

    #[test]
    fn round_trip() {
        let g = Grid::new_2d([1.0, 2.0], [3, 4], [0.0, -1.0], Boundary::Periodic).unwrap();
        let u = Field::from_fn(&g, |c| (c[0] - c[1]).tanh());
        let back = decode_field(&encode_field(&u)).unwrap();
        assert_eq!(u, back);
    }

    #[test]
    fn rejects_corruption() {
        let g = Grid::new_1d(1.0, 4, 0.0, Boundary::Boxed).unwrap();
        let bytes = encode_field(&Field::constant(&g, 0.5));
        assert!(decode_field(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_field(b"XXXX").is_err());
        assert!(parse_field_header("{\"grid\":{\"dim\":3,\"extents\":[1,1],\"n\":[1,1],\"origin\":[0,0],\"boundary\":\"boxed\"},\"count\":1,\"encoding\":\"f64le\"}").is_err());
        assert!(parse_field_header("{}").is_err());
    }
}
