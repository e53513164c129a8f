//! Procedural meshes used as fixtures and as building blocks for the
//! synthetic dataset generator.

use std::collections::HashMap;

use crate::geom::{self, Vec3};
use crate::mesh::{Mesh, SeamLabels};

/// Unit icosahedron with poles on the z axis.
///
/// Vertex 0 is the north pole, 1..=5 the upper ring, 6..=10 the lower ring
/// (rotated by 36°) and 11 the south pole. Faces wind counter-clockwise when
/// seen from outside.
pub fn icosahedron() -> Mesh {
    let (verts, faces) = icosahedron_raw();
    Mesh::new("icosahedron", verts, faces).expect("valid icosahedron")
}

fn icosahedron_raw() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let h = 1.0 / 5f64.sqrt();
    let r = 2.0 * h;
    let mut verts = vec![[0.0, 0.0, 1.0]];
    for k in 0..5 {
        let a = (k as f64) * std::f64::consts::TAU / 5.0;
        verts.push([r * a.cos(), r * a.sin(), h]);
    }
    for k in 0..5 {
        let a = (k as f64 + 0.5) * std::f64::consts::TAU / 5.0;
        verts.push([r * a.cos(), r * a.sin(), -h]);
    }
    verts.push([0.0, 0.0, -1.0]);
    let u = |k: usize| 1 + k % 5;
    let l = |k: usize| 6 + k % 5;
    let mut faces = Vec::with_capacity(20);
    for k in 0..5 {
        faces.push([0, u(k), u(k + 1)]);
        faces.push([u(k), l(k), u(k + 1)]);
        faces.push([u(k + 1), l(k), l(k + 1)]);
        faces.push([11, l(k + 1), l(k)]);
    }
    (verts, faces)
}

/// Zig-zag loop through the ten ring vertices of [`icosahedron`], splitting it
/// into two halves of ten faces.
fn icosahedron_equator() -> Vec<[usize; 2]> {
    let mut out = Vec::with_capacity(10);
    for k in 0..5 {
        out.push([1 + k, 6 + k]);
        out.push([6 + k, 1 + (k + 1) % 5]);
    }
    out
}

/// Loop-subdivided icosahedron projected onto the unit sphere.
pub fn icosphere(level: u32) -> Mesh {
    icosphere_with_equator(level).0
}

/// Icosphere plus labels for the subdivided zig-zag equator, a closed seam
/// loop dividing the sphere into two congruent halves.
pub fn icosphere_with_equator(level: u32) -> (Mesh, SeamLabels) {
    let (mut verts, mut faces) = icosahedron_raw();
    let mut seams: Vec<[usize; 2]> = icosahedron_equator();
    for _ in 0..level {
        let mut mid: HashMap<[usize; 2], usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = [a.min(b), a.max(b)];
            *mid.entry(key).or_insert_with(|| {
                let p = geom::normalize(geom::add(verts[a], verts[b])).expect("antipodal edge");
                verts.push(p);
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
        seams = seams
            .into_iter()
            .flat_map(|[a, b]| {
                let m = midpoint(a, b, &mut verts);
                [[a, m], [m, b]]
            })
            .collect();
    }
    let mesh = Mesh::new(format!("icosphere{level}"), verts, faces).expect("valid icosphere");
    let labels = SeamLabels::from_edges(&mesh, &seams).expect("equator edges exist");
    (mesh, labels)
}

/// Flat `nx` × `ny` grid of squares in the z = 0 plane, each split along its
/// diagonal. Vertex `(i, j)` has index `j * (nx + 1) + i`.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> Mesh {
    let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push([i as f64 * spacing, j as f64 * spacing, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(format!("grid{nx}x{ny}"), verts, faces).expect("valid grid")
}

/// Flat disk: `rings` concentric rings of `segments` vertices around a centre.
pub fn disk(rings: usize, segments: usize) -> Mesh {
    assert!(rings >= 1 && segments >= 3);
    let mut verts = vec![[0.0, 0.0, 0.0]];
    for r in 1..=rings {
        let radius = r as f64 / rings as f64;
        for s in 0..segments {
            let a = s as f64 * std::f64::consts::TAU / segments as f64;
            verts.push([radius * a.cos(), radius * a.sin(), 0.0]);
        }
    }
    let id = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, id(1, s), id(1, s + 1)]);
    }
    for r in 1..rings {
        for s in 0..segments {
            faces.push([id(r, s), id(r + 1, s), id(r + 1, s + 1)]);
            faces.push([id(r, s), id(r + 1, s + 1), id(r, s + 1)]);
        }
    }
    Mesh::new(format!("disk{rings}x{segments}"), verts, faces).expect("valid disk")
}

/// Flat annulus between radii 1 and 2 with `segments` quads split in two.
pub fn annulus(segments: usize) -> Mesh {
    let mut verts = Vec::with_capacity(2 * segments);
    for ring in 0..2 {
        let radius = 1.0 + ring as f64;
        for s in 0..segments {
            let a = s as f64 * std::f64::consts::TAU / segments as f64;
            verts.push([radius * a.cos(), radius * a.sin(), 0.0]);
        }
    }
    let inner = |s: usize| s % segments;
    let outer = |s: usize| segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([inner(s), outer(s), outer(s + 1)]);
        faces.push([inner(s), outer(s + 1), inner(s + 1)]);
    }
    Mesh::new(format!("annulus{segments}"), verts, faces).expect("valid annulus")
}

/// Northern half (z > 0 side of the zig-zag equator) of an icosphere.
pub fn hemisphere(level: u32) -> Mesh {
    let (sphere, equator) = icosphere_with_equator(level);
    let part = crate::mesh::shells_from_labels(&sphere, &equator);
    let north = part.face_to_shell[0];
    submesh(&sphere, |f| part.face_to_shell[f] == north, "hemisphere")
}

/// Mesh made of the faces selected by `keep`, with unused vertices dropped.
pub fn submesh(mesh: &Mesh, keep: impl Fn(usize) -> bool, name: &str) -> Mesh {
    let mut remap = vec![usize::MAX; mesh.vertex_count()];
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        if !keep(f) {
            continue;
        }
        faces.push(face.map(|v| {
            if remap[v] == usize::MAX {
                remap[v] = verts.len();
                verts.push(mesh.vertices()[v]);
            }
            remap[v]
        }));
    }
    Mesh::new(name, verts, faces).expect("submesh of a valid mesh")
}
