//! ASCII Wavefront OBJ reading and writing (`v` and `f` records only).

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use glam::DVec3;

use super::{MeshError, Result, TriangleMesh};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(BufReader::new(file))
}

/// Parses OBJ text. Polygons with more than three corners are fan-triangulated;
/// texture and normal indices (`f 1/2/3 ...`) are ignored.
pub fn parse_obj(reader: impl Read) -> Result<TriangleMesh> {
    let reader = BufReader::new(reader);
    let mut vertices = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut face_ordinal = 0usize;

    for (ln, line) in reader.lines().enumerate() {
        let line_no = ln + 1;
        let line = line.map_err(|e| MeshError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.split('#').next().unwrap_or("");
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| MeshError::Parse {
                        line: line_no,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| MeshError::Parse {
                        line: line_no,
                        message: format!("bad coordinate `{tok}`"),
                    })?;
                }
                vertices.push(DVec3::from_array(xyz));
            }
            Some("f") => {
                let mut corners = Vec::with_capacity(4);
                for tok in tokens {
                    let idx_text = tok.split('/').next().unwrap_or("");
                    let raw: i64 = idx_text.parse().map_err(|_| MeshError::Parse {
                        line: line_no,
                        message: format!("bad face index `{tok}`"),
                    })?;
                    let count = vertices.len();
                    let resolved = match raw {
                        r if r > 0 => r - 1,
                        r if r < 0 => count as i64 + r,
                        _ => -1,
                    };
                    if resolved < 0 || resolved >= count as i64 {
                        return Err(MeshError::IndexOutOfRange {
                            face: face_ordinal,
                            line: line_no,
                            index: raw,
                            count,
                        });
                    }
                    corners.push(resolved as usize);
                }
                if corners.len() < 3 {
                    return Err(MeshError::TooFewCorners {
                        face: face_ordinal,
                        line: line_no,
                        corners: corners.len(),
                    });
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
                face_ordinal += 1;
            }
            _ => {}
        }
    }

    TriangleMesh::new(vertices, faces)
}

/// Writes `mesh` to `path`. Nothing is written for a mesh without faces.
pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if mesh.face_count() == 0 {
        return Err(MeshError::NoFaces);
    }
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf).expect("writing to a Vec cannot fail");
    fs::write(path, buf).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_obj(mesh: &TriangleMesh, mut out: impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(
            out,
            "v {} {} {}",
            format_coord(v.x),
            format_coord(v.y),
            format_coord(v.z)
        )?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Rounds to 9 significant digits and prints the shortest text that parses
/// back to the rounded value, so save/load/save is byte-stable.
fn format_coord(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "\
# unit square
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
f 1 2 3
f 1 3 4
";

    #[test]
    fn parses_square() {
        let m = parse_obj(SQUARE.as_bytes()).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.face_count(), 2);
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_index_names_face() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 9\n";
        match parse_obj(text.as_bytes()) {
            Err(MeshError::IndexOutOfRange { face, line, index, count }) => {
                assert_eq!((face, line, index, count), (1, 6, 9, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quad_is_fan_triangulated_and_slashes_ignored() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\n";
        let m = parse_obj(text.as_bytes()).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices_are_relative() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        assert_eq!(parse_obj(text.as_bytes()).unwrap().faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn two_corner_face_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nf 1 2\n";
        assert!(matches!(
            parse_obj(text.as_bytes()),
            Err(MeshError::TooFewCorners { corners: 2, .. })
        ));
    }

    #[test]
    fn zero_area_face_reported() {
        let text = "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nf 1 2 4\nf 1 2 3\n";
        assert!(matches!(
            parse_obj(text.as_bytes()),
            Err(MeshError::DegenerateFace { face: 1, .. })
        ));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "v 0 0 0\nv 1 x 0\n";
        assert!(matches!(parse_obj(text.as_bytes()), Err(MeshError::Parse { line: 2, .. })));
    }

    #[test]
    fn coordinate_formatting_is_stable() {
        for x in [0.1, -0.0, 1.0 / 3.0, 12345.678901234, -7.25e-9, 1e12] {
            let once = format_coord(x);
            let twice = format_coord(once.parse().unwrap());
            assert_eq!(once, twice);
        }
        assert_eq!(format_coord(-0.0), "0");
        assert_eq!(format_coord(1.0 / 3.0), "0.333333333");
    }

    #[test]
    fn save_rejects_missing_directory() {
        let m = parse_obj(SQUARE.as_bytes()).unwrap();
        let err = save_mesh(&m, "/nonexistent-dir/out.obj").unwrap_err();
        assert!(matches!(err, MeshError::Io { .. }));
    }
}
