//! Plain-text mesh format.
//!
//! ```text
//! dim n_vertices n_simplices
//! x y [z]              (one line per vertex, 17 significant digits)
//! i j k [l]            (one line per simplex, 0-based)
//! region <tag> <count>
//! i j k ...            (member indices, omitted when count is 0)
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{NodeSet, SimplicialMesh};
use crate::error::{CapError, Result};

pub fn write_mesh<W: Write>(mesh: &SimplicialMesh, mut out: W) -> Result<()> {
    writeln!(out, "{} {} {}", mesh.dim(), mesh.num_vertices(), mesh.num_simplices())?;
    for v in mesh.vertices() {
        let line: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    for s in mesh.simplices() {
        let line: Vec<String> = s.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    for (tag, set) in mesh.region_tags() {
        if tag.is_empty() || tag.chars().any(char::is_whitespace) {
            return Err(CapError::Argument(format!(
                "region tag '{tag}' cannot be written: tags must be non-empty without whitespace"
            )));
        }
        writeln!(out, "region {tag} {}", set.len())?;
        if !set.is_empty() {
            let line: Vec<String> = set.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(CapError::Parse {
        line,
        message: message.into(),
    })
}

fn numbers<T: std::str::FromStr>(line_no: usize, text: &str, expected: usize) -> Result<Vec<T>> {
    let vals: std::result::Result<Vec<T>, _> = text.split_whitespace().map(str::parse).collect();
    match vals {
        Ok(v) if v.len() == expected => Ok(v),
        Ok(v) => parse_err(line_no, format!("expected {expected} values, found {}", v.len())),
        Err(_) => parse_err(line_no, "malformed number"),
    }
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<SimplicialMesh> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let mut it = lines.iter().enumerate().map(|(i, l)| (i + 1, l.as_str()));
    let (no, header) = it.next().ok_or(CapError::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let head: Vec<usize> = numbers(no, header, 3)?;
    let (dim, nv, ns) = (head[0], head[1], head[2]);
    if dim != 2 && dim != 3 {
        return parse_err(no, format!("unsupported dimension {dim}"));
    }
    let mut coords = Vec::with_capacity(nv * dim);
    for _ in 0..nv {
        let (no, l) = it.next().ok_or(CapError::Parse {
            line: lines.len(),
            message: "unexpected end of vertex block".into(),
        })?;
        coords.extend(numbers::<f64>(no, l, dim)?);
    }
    let mut simplices = Vec::with_capacity(ns * (dim + 1));
    for _ in 0..ns {
        let (no, l) = it.next().ok_or(CapError::Parse {
            line: lines.len(),
            message: "unexpected end of simplex block".into(),
        })?;
        simplices.extend(numbers::<usize>(no, l, dim + 1)?);
    }
    let mut tags = BTreeMap::new();
    while let Some((no, l)) = it.next() {
        if l.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "region" {
            return parse_err(no, "expected 'region <tag> <count>'");
        }
        let count: usize = parts[2].parse().map_err(|_| CapError::Parse {
            line: no,
            message: "malformed region count".into(),
        })?;
        let members: Vec<usize> = if count == 0 {
            Vec::new()
        } else {
            let (no, l) = it.next().ok_or(CapError::Parse {
                line: lines.len(),
                message: "missing region member line".into(),
            })?;
            numbers(no, l, count)?
        };
        tags.insert(parts[1].to_string(), NodeSet::from(members));
    }
    SimplicialMesh::with_parts(dim, coords, simplices, tags, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Domain, DomainSpec};

    #[test]
    fn round_trip_preserves_geometry_and_tags() {
        let spec = DomainSpec::new(
            Domain::Annulus {
                center: vec![0.0, 0.0],
                inner: 0.25,
                outer: 1.0,
            },
            0.2,
        );
        let mesh = build_mesh(&spec)
            .unwrap()
            .mark_region("inner", |p| p[0].hypot(p[1]) <= 0.25 + 1e-9)
            .unwrap()
            .mark_region("empty", |_| false)
            .unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.coords(), mesh.coords());
        assert_eq!(back.region_tags(), mesh.region_tags());
        let mut again = Vec::new();
        write_mesh(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn reports_line_of_bad_input() {
        let text = "2 3 1\n0 0\n1 0\n0 x\n0 1 2\n";
        match read_mesh(text.as_bytes()) {
            Err(CapError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
