//! ASCII and binary little-endian PLY reader.

use super::{Mesh, Uv};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar(n, _) | Property::List(n, _, _) => n,
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, PartialEq)]
enum Format {
    Ascii,
    BinaryLe,
}

/// One parsed record: scalar values and list values, in property order.
type Record = Vec<Vec<f64>>;

/// Parses an ASCII or `binary_little_endian 1.0` PLY with `vertex` (x, y, z,
/// optional s/t or u/v) and `face` (vertex index list) elements.
pub fn parse_ply(bytes: &[u8]) -> Result<Mesh> {
    let (elements, format, body_start, header_lines) = parse_header(bytes)?;
    let body = &bytes[body_start..];
    let mut records: Vec<Vec<Record>> = Vec::with_capacity(elements.len());
    match format {
        Format::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::parse(header_lines, "body is not UTF-8"))?;
            let mut lines = text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + header_lines + 1, l))
                .filter(|(_, l)| !l.trim().is_empty());
            for el in &elements {
                let mut recs = Vec::with_capacity(el.count);
                for _ in 0..el.count {
                    let (line_no, line) = lines.next().ok_or_else(|| {
                        Error::parse(header_lines, format!("truncated `{}` element", el.name))
                    })?;
                    recs.push(parse_ascii_record(el, line, line_no)?);
                }
                records.push(recs);
            }
        }
        Format::BinaryLe => {
            let mut cursor = 0usize;
            for el in &elements {
                let mut recs = Vec::with_capacity(el.count);
                for _ in 0..el.count {
                    recs.push(parse_binary_record(el, body, &mut cursor)?);
                }
                records.push(recs);
            }
        }
    }

    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(header_lines, "missing vertex element"))?;
    let fi = elements
        .iter()
        .position(|e| e.name == "face")
        .ok_or_else(|| Error::parse(header_lines, "missing face element"))?;
    let vel = &elements[vi];
    let prop = |names: &[&str]| vel.props.iter().position(|p| names.contains(&p.name()));
    let (px, py, pz) = match (prop(&["x"]), prop(&["y"]), prop(&["z"])) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => {
            return Err(Error::parse(
                header_lines,
                "vertex element needs x, y and z",
            ))
        }
    };
    let uv_props = match (
        prop(&["s", "u", "texture_u", "texture_s"]),
        prop(&["t", "v", "texture_v", "texture_t"]),
    ) {
        (Some(s), Some(t)) => Some((s, t)),
        _ => None,
    };
    let vertices = records[vi]
        .iter()
        .map(|r| [r[px][0], r[py][0], r[pz][0]])
        .collect::<Vec<_>>();
    let uvs: Option<Vec<Uv>> =
        uv_props.map(|(s, t)| records[vi].iter().map(|r| [r[s][0], r[t][0]]).collect());

    let list = elements[fi]
        .props
        .iter()
        .position(|p| matches!(p, Property::List(n, _, _) if n == "vertex_indices" || n == "vertex_index"))
        .ok_or_else(|| Error::parse(header_lines, "face element needs a vertex_indices list"))?;
    if records[fi].is_empty() {
        return Err(Error::NoFaces);
    }
    let mut faces = Vec::with_capacity(records[fi].len());
    for (f, rec) in records[fi].iter().enumerate() {
        let idx = &rec[list];
        if idx.len() != 3 {
            return Err(Error::NonTriangular {
                face: f,
                corners: idx.len(),
            });
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            if idx[k] < 0.0 || idx[k].fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "face {f} has invalid index {}",
                    idx[k]
                )));
            }
            tri[k] = idx[k] as usize;
        }
        faces.push(tri);
    }
    let mesh = Mesh::new("mesh", vertices, faces)?;
    match uvs {
        Some(uvs) => mesh.with_vertex_uvs(&uvs),
        None => Ok(mesh),
    }
}

fn parse_header(bytes: &[u8]) -> Result<(Vec<Element>, Format, usize, usize)> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut elements: Vec<Element> = Vec::new();
    let mut format = None;
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(line_no + 1, "unterminated PLY header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| Error::parse(line_no + 1, "header is not UTF-8"))?
            .trim();
        pos += end + 1;
        line_no += 1;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("ply") if line_no == 1 => {}
            _ if line_no == 1 => return Err(Error::parse(1, "missing `ply` magic")),
            Some("format") => {
                format = Some(match (parts.next(), parts.next()) {
                    (Some("ascii"), Some("1.0")) => Format::Ascii,
                    (Some("binary_little_endian"), Some("1.0")) => Format::BinaryLe,
                    (f, _) => {
                        return Err(Error::parse(
                            line_no,
                            format!("unsupported format {}", f.unwrap_or("")),
                        ));
                    }
                });
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = parts
                    .next()
                    .ok_or_else(|| Error::parse(line_no, "element needs a name"))?;
                let count = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::parse(line_no, "element needs a count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "property before element"))?;
                let tokens: Vec<&str> = parts.collect();
                let bad = || Error::parse(line_no, "malformed property");
                let prop = if tokens.first() == Some(&"list") {
                    if tokens.len() != 4 {
                        return Err(bad());
                    }
                    Property::List(
                        tokens[3].to_string(),
                        Scalar::parse(tokens[1]).ok_or_else(bad)?,
                        Scalar::parse(tokens[2]).ok_or_else(bad)?,
                    )
                } else {
                    if tokens.len() != 2 {
                        return Err(bad());
                    }
                    Property::Scalar(
                        tokens[1].to_string(),
                        Scalar::parse(tokens[0]).ok_or_else(bad)?,
                    )
                };
                el.props.push(prop);
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(Error::parse(
                    line_no,
                    format!("unexpected header record `{other}`"),
                ))
            }
        }
    }
    let format = format.ok_or_else(|| Error::parse(line_no, "missing format line"))?;
    Ok((elements, format, pos, line_no))
}

fn parse_ascii_record(el: &Element, line: &str, line_no: usize) -> Result<Record> {
    let mut tokens = line.split_whitespace();
    let mut next = || -> Result<f64> {
        let t = tokens
            .next()
            .ok_or_else(|| Error::parse(line_no, format!("too few values for `{}`", el.name)))?;
        t.parse::<f64>()
            .map_err(|_| Error::parse(line_no, format!("invalid number `{t}`")))
    };
    let mut rec = Vec::with_capacity(el.props.len());
    for p in &el.props {
        match p {
            Property::Scalar(..) => rec.push(vec![next()?]),
            Property::List(..) => {
                let n = next()?;
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(Error::parse(line_no, "invalid list length"));
                }
                let vals = (0..n as usize)
                    .map(|_| next())
                    .collect::<Result<Vec<_>>>()?;
                rec.push(vals);
            }
        }
    }
    Ok(rec)
}

fn parse_binary_record(el: &Element, body: &[u8], cursor: &mut usize) -> Result<Record> {
    let mut take = |s: Scalar| -> Result<f64> {
        let end = *cursor + s.size();
        if end > body.len() {
            return Err(Error::InvalidArgument(format!(
                "binary PLY truncated in `{}`",
                el.name
            )));
        }
        let v = s.read_le(&body[*cursor..end]);
        *cursor = end;
        Ok(v)
    };
    let mut rec = Vec::with_capacity(el.props.len());
    for p in &el.props {
        match *p {
            Property::Scalar(_, s) => rec.push(vec![take(s)?]),
            Property::List(_, count_ty, item_ty) => {
                let n = take(count_ty)? as usize;
                let vals = (0..n).map(|_| take(item_ty)).collect::<Result<Vec<_>>>()?;
                rec.push(vals);
            }
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const CUBE_VERTS: [[f64; 3]; 8] = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    pub(crate) const CUBE_FACES: [[usize; 3]; 12] = [
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];

    fn ascii_cube() -> String {
        let mut s = String::from(
            "ply\nformat ascii 1.0\ncomment cube\nelement vertex 8\nproperty float x\nproperty float y\nproperty float z\nelement face 12\nproperty list uchar int vertex_indices\nend_header\n",
        );
        for v in CUBE_VERTS {
            s += &format!("{} {} {}\n", v[0], v[1], v[2]);
        }
        for f in CUBE_FACES {
            s += &format!("3 {} {} {}\n", f[0], f[1], f[2]);
        }
        s
    }

    fn binary_cube() -> Vec<u8> {
        let mut b = b"ply\nformat binary_little_endian 1.0\nelement vertex 8\nproperty double x\nproperty double y\nproperty double z\nelement face 12\nproperty list uchar uint vertex_indices\nend_header\n".to_vec();
        for v in CUBE_VERTS {
            for c in v {
                b.extend_from_slice(&c.to_le_bytes());
            }
        }
        for f in CUBE_FACES {
            b.push(3);
            for i in f {
                b.extend_from_slice(&(i as u32).to_le_bytes());
            }
        }
        b
    }

    #[test]
    fn ascii_cube_has_18_edges() {
        let m = parse_ply(ascii_cube().as_bytes()).unwrap();
        assert_eq!(
            (m.vertex_count(), m.face_count(), m.edge_count()),
            (8, 12, 18)
        );
        assert!(m.is_closed());
    }

    #[test]
    fn binary_matches_ascii() {
        let a = parse_ply(ascii_cube().as_bytes()).unwrap();
        let b = parse_ply(&binary_cube()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn zero_faces_is_an_error() {
        let src = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n";
        assert!(matches!(parse_ply(src.as_bytes()), Err(Error::NoFaces)));
    }

    #[test]
    fn vertex_uvs_are_marked_uniform() {
        let src = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty float s\nproperty float t\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 0 0\n1 0 0 1 0\n0 1 0 0 1\n3 0 1 2\n";
        let m = parse_ply(src.as_bytes()).unwrap();
        assert_eq!(m.uv_source(), Some(super::super::UvSource::PerVertex));
        assert_eq!(m.corner_uvs().unwrap()[0][1], [1.0, 0.0]);
    }

    #[test]
    fn rejects_quads() {
        let src = "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(
            parse_ply(src.as_bytes()),
            Err(Error::NonTriangular { corners: 4, .. })
        ));
    }
}
