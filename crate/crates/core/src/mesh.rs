//! OFF-style ASCII meshes.

use crate::error::{MhError, Result};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OffMesh {
    pub vertices: Vec<Vec<f64>>,
    /// Vertex index lists; triangles for surfaces, pairs for curves.
    pub faces: Vec<Vec<usize>>,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> MhError {
    MhError::Parse(format!("OFF line {line}: {msg}"))
}

impl OffMesh {
    /// Parses `OFF` (3D) or `nOFF` with an explicit dimension line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
        let mut header_tokens = header.split_whitespace();
        let magic = header_tokens.next().unwrap_or("");
        let dim = match magic {
            "OFF" => 3,
            "nOFF" => {
                let tok = match header_tokens.next() {
                    Some(t) => t.to_string(),
                    None => lines
                        .next()
                        .ok_or_else(|| parse_err(ln, "missing dimension"))?
                        .1
                        .to_string(),
                };
                tok.parse::<usize>().map_err(|e| parse_err(ln, e))?
            }
            other => return Err(parse_err(ln, format!("unknown header {other:?}"))),
        };
        // counts may share the header line
        let rest: Vec<&str> = header_tokens.collect();
        let counts: Vec<usize> = if rest.len() >= 2 {
            rest.iter().map(|t| t.parse()).collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(ln, e))?
        } else {
            let (cl, c) = lines.next().ok_or_else(|| parse_err(ln, "missing counts"))?;
            c.split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(cl, e))?
        };
        if counts.len() < 2 {
            return Err(parse_err(ln, "counts line needs vertex and face counts"));
        }
        let (nv, nf) = (counts[0], counts[1]);
        let mut mesh = OffMesh::default();
        for _ in 0..nv {
            let (l, text) = lines.next().ok_or_else(|| parse_err(ln, "truncated vertex list"))?;
            let v: Vec<f64> = text
                .split_whitespace()
                .take(dim)
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(l, e))?;
            if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                return Err(parse_err(l, format!("vertex needs {dim} finite coordinates")));
            }
            mesh.vertices.push(v);
        }
        for _ in 0..nf {
            let (l, text) = lines.next().ok_or_else(|| parse_err(ln, "truncated face list"))?;
            let toks: Vec<usize> = text
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(l, e))?;
            let k = *toks.first().ok_or_else(|| parse_err(l, "empty face"))?;
            if toks.len() < k + 1 {
                return Err(parse_err(l, "face shorter than its declared size"));
            }
            let face = toks[1..=k].to_vec();
            if let Some(bad) = face.iter().find(|&&i| i >= nv) {
                return Err(parse_err(l, format!("vertex index {bad} out of range")));
            }
            mesh.faces.push(face);
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }

    pub fn to_off(&self) -> String {
        let mut s = String::new();
        if self.dim() == 3 {
            s.push_str("OFF\n");
        } else {
            let _ = writeln!(s, "nOFF\n{}", self.dim());
        }
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            let parts: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
            let _ = writeln!(s, "{}", parts.join(" "));
        }
        for f in &self.faces {
            let parts: Vec<String> = f.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{} {}", f.len(), parts.join(" "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tetrahedron_with_comments() {
        let text = "OFF\n# tet\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
        let m = OffMesh::parse(text).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.faces[3], vec![1, 2, 3]);
        let again = OffMesh::parse(&m.to_off()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn parses_planar_curve() {
        let m = OffMesh::parse("nOFF 2\n3 2 0\n0 0\n1 0\n2 0\n2 0 1\n2 1 2\n").unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.faces.len(), 2);
    }

    #[test]
    fn rejects_bad_indices() {
        let err = OffMesh::parse("OFF\n1 1 0\n0 0 0\n3 0 1 2\n").unwrap_err();
        assert!(matches!(err, MhError::Parse(_)));
    }
}
