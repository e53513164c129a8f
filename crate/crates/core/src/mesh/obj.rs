use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Mesh, Uv};
use crate::error::{Error, Result};

/// Parses a triangulated Wavefront OBJ.
///
/// `v`, `vt` and `f` records are used; `vn` is accepted and ignored because
/// normals are always recomputed. Faces may use the `v`, `v/vt`, `v//vn` and
/// `v/vt/vn` forms with 1-based or negative (relative) indices. Either every
/// face carries texture indices or none does.
pub fn parse_obj(bytes: &[u8]) -> Result<Mesh> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| Error::parse(0, format!("invalid UTF-8: {e}")))?;
    let mut name = String::from("mesh");
    let mut positions = Vec::new();
    let mut texcoords: Vec<Uv> = Vec::new();
    let mut faces = Vec::new();
    let mut face_uvs: Vec<[usize; 3]> = Vec::new();
    let mut face_lines = Vec::new();
    let mut has_uv: Option<bool> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap();
        match keyword {
            "v" => {
                let xyz = parse_floats(parts, line_no, 3, "vertex")?;
                positions.push([xyz[0], xyz[1], xyz[2]]);
            }
            "vt" => {
                let uv = parse_floats(parts, line_no, 2, "texture coordinate")?;
                texcoords.push([uv[0], uv[1]]);
            }
            "vn" => {
                parse_floats(parts, line_no, 3, "normal")?;
            }
            "f" => {
                let corners: Vec<&str> = parts.collect();
                if corners.len() != 3 {
                    if corners.len() < 3 {
                        return Err(Error::parse(
                            line_no,
                            format!("face has only {} corners", corners.len()),
                        ));
                    }
                    return Err(Error::NonTriangular {
                        face: faces.len(),
                        corners: corners.len(),
                    });
                }
                let mut vi = [0usize; 3];
                let mut ti = [0usize; 3];
                let mut face_has_uv = None;
                for (k, token) in corners.iter().enumerate() {
                    let mut fields = token.split('/');
                    let v = fields.next().unwrap_or("");
                    vi[k] = resolve_index(v, positions.len(), line_no)?;
                    let t = fields.next().unwrap_or("");
                    let this_has_uv = !t.is_empty();
                    if this_has_uv {
                        ti[k] = resolve_index(t, texcoords.len(), line_no)?;
                    }
                    if *face_has_uv.get_or_insert(this_has_uv) != this_has_uv {
                        return Err(Error::parse(
                            line_no,
                            "face mixes corners with and without texture indices",
                        ));
                    }
                }
                let face_has_uv = face_has_uv.unwrap_or(false);
                if *has_uv.get_or_insert(face_has_uv) != face_has_uv {
                    return Err(Error::parse(
                        line_no,
                        "some faces have texture indices and others do not",
                    ));
                }
                faces.push(vi);
                face_uvs.push(ti);
                face_lines.push(line_no);
            }
            "o" => {
                let rest = line[1..].trim();
                if !rest.is_empty() {
                    name = rest.to_string();
                }
            }
            "g" | "s" | "usemtl" | "mtllib" | "vp" => {}
            "l" | "p" => {
                return Err(Error::parse(
                    line_no,
                    format!("unsupported element `{keyword}`"),
                ));
            }
            other => {
                return Err(Error::parse(line_no, format!("unknown record `{other}`")));
            }
        }
    }

    if faces.is_empty() {
        return Err(Error::NoFaces);
    }
    let mesh = Mesh::new(name, positions, faces).map_err(|e| match e {
        Error::RepeatedVertex { face, vertex } => Error::parse(
            face_lines[face],
            format!("face repeats vertex {}", vertex + 1),
        ),
        other => other,
    })?;
    if has_uv == Some(true) {
        let uvs = face_uvs.iter().map(|t| t.map(|i| texcoords[i])).collect();
        mesh.with_corner_uvs(uvs)
    } else {
        Ok(mesh)
    }
}

fn parse_floats<'a>(
    parts: impl Iterator<Item = &'a str>,
    line: usize,
    min: usize,
    what: &str,
) -> Result<Vec<f64>> {
    let values = parts
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("invalid {what} component `{p}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() < min {
        return Err(Error::parse(line, format!("{what} needs {min} components")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::parse(line, format!("non-finite {what} component")));
    }
    Ok(values)
}

fn resolve_index(token: &str, count: usize, line: usize) -> Result<usize> {
    let raw: i64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid index `{token}`")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        return Err(Error::parse(line, "index 0 is not valid in OBJ"));
    };
    if idx < 0 || idx as usize >= count {
        return Err(Error::parse(
            line,
            format!("index {raw} out of range (have {count})"),
        ));
    }
    Ok(idx as usize)
}

/// Serializes `mesh` as OBJ.
///
/// When `uvs` is given (or the mesh carries per-corner UVs), texture
/// coordinates are emitted as `vt` records deduplicated per `(vertex, uv)`,
/// so a vertex on a seam gets one `vt` per chart it touches.
pub fn write_obj(mesh: &Mesh, uvs: Option<&[[Uv; 3]]>) -> Vec<u8> {
    let uvs = uvs.or(mesh.corner_uvs());
    let mut out = String::new();
    let _ = writeln!(out, "o {}", mesh.name());
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", p[0], p[1], p[2]);
    }
    match uvs {
        Some(uvs) => {
            let mut ids: HashMap<(usize, u64, u64), usize> = HashMap::new();
            let mut vt_lines = String::new();
            let mut f_lines = String::new();
            for (f, face) in mesh.faces().iter().enumerate() {
                let mut t = [0usize; 3];
                for k in 0..3 {
                    let uv = uvs[f][k];
                    let key = (face[k], uv[0].to_bits(), uv[1].to_bits());
                    let next = ids.len();
                    t[k] = *ids.entry(key).or_insert_with(|| {
                        let _ = writeln!(vt_lines, "vt {} {}", uv[0], uv[1]);
                        next
                    });
                }
                let _ = writeln!(
                    f_lines,
                    "f {}/{} {}/{} {}/{}",
                    face[0] + 1,
                    t[0] + 1,
                    face[1] + 1,
                    t[1] + 1,
                    face[2] + 1,
                    t[2] + 1
                );
            }
            out.push_str(&vt_lines);
            out.push_str(&f_lines);
        }
        None => {
            for f in mesh.faces() {
                let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    const TRIANGLE: &str = "# one face\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";

    #[test]
    fn parses_single_triangle() {
        let m = parse_obj(TRIANGLE.as_bytes()).unwrap();
        assert_eq!(
            (m.vertex_count(), m.edge_count(), m.face_count()),
            (3, 3, 1)
        );
        assert!(m.corner_uvs().is_none());
    }

    #[test]
    fn repeated_vertex_reports_line() {
        let err = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("repeats"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_quads_and_garbage() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(
            parse_obj(quad.as_bytes()),
            Err(Error::NonTriangular { corners: 4, .. })
        ));
        assert!(matches!(
            parse_obj(b"v 0 0 zz\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_obj(b"v 0 0 0\nf 1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn corner_forms_and_negative_indices() {
        let src =
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 1\nf -3/1/1 -2/2/1 -1/3/1\n";
        let m = parse_obj(src.as_bytes()).unwrap();
        assert_eq!(
            m.corner_uvs().unwrap()[0],
            [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        );
        let m2 = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n").unwrap();
        assert_eq!(m2.face_count(), 1);
    }

    #[test]
    fn icosahedron_file_has_30_manifold_edges() {
        let bytes = write_obj(&shapes::icosahedron(), None);
        let m = parse_obj(&bytes).unwrap();
        assert_eq!(m.edge_count(), 30);
        assert!((0..30).all(|e| m.edge_faces(e).1.is_some()));
        assert_eq!(m.vertex_count() as i64 - 30 + 20, 2);
    }

    #[test]
    fn round_trip_is_exact() {
        let m = shapes::icosphere(2);
        let back = parse_obj(&write_obj(&m, None)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.edges(), m.edges());
    }
}
