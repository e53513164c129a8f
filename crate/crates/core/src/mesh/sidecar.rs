use serde::{Deserialize, Serialize};

use super::{Mesh, SeamLabels};
use crate::error::{Error, Result};

/// JSON label file stored next to a mesh:
/// `{"mesh": name, "edges": [[i, j], ...], "labels": [0|1, ...]}`
/// with edges in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub mesh: String,
    pub edges: Vec<[usize; 2]>,
    pub labels: Vec<u8>,
}

impl LabelSidecar {
    pub fn new(mesh: &Mesh, labels: &SeamLabels) -> Result<Self> {
        labels.check_len(mesh)?;
        Ok(Self {
            mesh: mesh.name().to_string(),
            edges: mesh.edges().to_vec(),
            labels: labels.to_bits(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sidecar serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Converts back to labels, checking the edge list matches `mesh`.
    pub fn to_labels(&self, mesh: &Mesh) -> Result<SeamLabels> {
        if self.labels.len() != self.edges.len() {
            return Err(Error::LengthMismatch {
                what: "sidecar labels",
                expected: self.edges.len(),
                actual: self.labels.len(),
            });
        }
        if self.edges != mesh.edges() {
            return Err(Error::InvalidArgument(format!(
                "sidecar edge list for `{}` does not match the mesh",
                self.mesh
            )));
        }
        SeamLabels::from_bits(&self.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn json_shape_and_round_trip() {
        let m = Mesh::new(
            "tri",
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let l = SeamLabels::from_bits(&[0, 1, 0]).unwrap();
        let s = LabelSidecar::new(&m, &l).unwrap();
        assert_eq!(
            s.to_json(),
            r#"{"mesh":"tri","edges":[[0,1],[0,2],[1,2]],"labels":[0,1,0]}"#
        );
        let back = LabelSidecar::from_json(&s.to_json()).unwrap();
        assert_eq!(back.to_labels(&m).unwrap(), l);
    }

    #[test]
    fn mismatched_mesh_is_rejected() {
        let m = shapes::icosahedron();
        let s = LabelSidecar::new(&m, &SeamLabels::zeros(30)).unwrap();
        let other = shapes::icosphere(1);
        assert!(s.to_labels(&other).is_err());
    }
}
