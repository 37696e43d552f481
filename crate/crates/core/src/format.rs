//! Line-oriented text exchange format for maps and augmented graphs.
//!
//! ```text
//! map <plane|torus> <V> <D>
//! v <id> <darts in counterclockwise rotation order>
//! t <dart> <twin>
//! outer <dart on the outer face>
//! boundary <vertex ids>
//! coord <vertex> <x> <y>
//! lift <dart> <dx> <dy>
//! meta <key> <value>
//! ```
//!
//! `outer`, `boundary`, `coord`, `lift` and `meta` lines are optional. The
//! writer emits lines in exactly this order, so `write(read(s)) == s` for
//! any `s` produced by the writer. Augmented graphs append
//! `diag <u> <v> <face>` and `site <id> <face> <class>` lines after the map
//! (see [`crate::matching`]).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::map::{CombinatorialMap, MapError, MapParts, Surface};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Map(#[from] MapError),
}

pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        msg: msg.into(),
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

pub fn write_map(map: &CombinatorialMap) -> String {
    let mut out = String::new();
    write_map_into(map, &mut out);
    out
}

pub(crate) fn write_map_into(map: &CombinatorialMap, out: &mut String) {
    let _ = writeln!(
        out,
        "map {} {} {}",
        map.surface().name(),
        map.vertex_count(),
        map.dart_count()
    );
    for v in 0..map.vertex_count() {
        let _ = write!(out, "v {v}");
        for d in map.vertex_darts(v) {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
    }
    for d in 0..map.dart_count() {
        let _ = writeln!(out, "t {} {}", d, map.twin(d));
    }
    if let Some(o) = map.outer_dart() {
        let _ = writeln!(out, "outer {o}");
    }
    if !map.boundary_vertices().is_empty() {
        out.push_str("boundary");
        for v in map.boundary_vertices() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    if let Some(coords) = map.coords() {
        for (v, c) in coords.iter().enumerate() {
            let _ = writeln!(out, "coord {} {} {}", v, c[0], c[1]);
        }
    }
    if let Some(lifts) = map.lifts() {
        for (d, l) in lifts.iter().enumerate() {
            let _ = writeln!(out, "lift {} {} {}", d, l[0], l[1]);
        }
    }
    for (k, v) in map.meta() {
        let _ = writeln!(out, "meta {k} {v}");
    }
}

/// Parses a map; lines the map grammar does not know are handed to `extra`.
pub(crate) fn read_map_with(
    text: &str,
    mut extra: impl FnMut(usize, &str, &mut std::str::SplitWhitespace<'_>) -> Result<(), FormatError>,
) -> Result<CombinatorialMap, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| syntax(1, "empty input"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("map") {
        return Err(syntax(hline, "expected `map` header"));
    }
    let surface_tok = toks.next().ok_or_else(|| syntax(hline, "missing surface"))?;
    let surface = Surface::parse(surface_tok).ok_or_else(|| syntax(hline, format!("unknown surface `{surface_tok}`")))?;
    let vertex_count: usize = parse_num(toks.next(), hline, "vertex count")?;
    let darts: usize = parse_num(toks.next(), hline, "dart count")?;

    let mut origin = vec![usize::MAX; darts];
    let mut rotation = vec![usize::MAX; darts];
    let mut twin = vec![usize::MAX; darts];
    let mut outer = None;
    let mut boundary = Vec::new();
    let mut coords: Option<Vec<[i32; 2]>> = None;
    let mut lifts: Option<Vec<[i32; 2]>> = None;
    let mut meta = BTreeMap::new();

    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        let Some(tag) = toks.next() else { continue };
        match tag {
            "v" => {
                let v: usize = parse_num(toks.next(), ln, "vertex id")?;
                if v >= vertex_count {
                    return Err(syntax(ln, "vertex id out of range"));
                }
                let ds: Vec<usize> = toks
                    .map(|t| parse_num(Some(t), ln, "dart id"))
                    .collect::<Result<_, _>>()?;
                if ds.is_empty() {
                    return Err(syntax(ln, "vertex without darts"));
                }
                for (i, &d) in ds.iter().enumerate() {
                    if d >= darts || origin[d] != usize::MAX {
                        return Err(syntax(ln, format!("dart {d} out of range or listed twice")));
                    }
                    origin[d] = v;
                    rotation[d] = ds[(i + 1) % ds.len()];
                }
            }
            "t" => {
                let d: usize = parse_num(toks.next(), ln, "dart id")?;
                let t: usize = parse_num(toks.next(), ln, "twin id")?;
                if d >= darts {
                    return Err(syntax(ln, "dart id out of range"));
                }
                twin[d] = t;
            }
            "outer" => outer = Some(parse_num(toks.next(), ln, "outer dart")?),
            "boundary" => {
                for t in toks {
                    boundary.push(parse_num(Some(t), ln, "boundary vertex")?);
                }
            }
            "coord" => {
                let c = coords.get_or_insert_with(|| vec![[0, 0]; vertex_count]);
                let v: usize = parse_num(toks.next(), ln, "vertex id")?;
                if v >= vertex_count {
                    return Err(syntax(ln, "vertex id out of range"));
                }
                c[v] = [parse_num(toks.next(), ln, "x")?, parse_num(toks.next(), ln, "y")?];
            }
            "lift" => {
                let l = lifts.get_or_insert_with(|| vec![[0, 0]; darts]);
                let d: usize = parse_num(toks.next(), ln, "dart id")?;
                if d >= darts {
                    return Err(syntax(ln, "dart id out of range"));
                }
                l[d] = [parse_num(toks.next(), ln, "dx")?, parse_num(toks.next(), ln, "dy")?];
            }
            "meta" => {
                let rest = line.trim_start()["meta".len()..].trim_start();
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                if k.is_empty() {
                    return Err(syntax(ln, "meta line without key"));
                }
                meta.insert(k.to_string(), v.to_string());
            }
            _ => extra(ln, tag, &mut toks)?,
        }
    }
    if let Some(d) = origin.iter().position(|&o| o == usize::MAX) {
        return Err(syntax(hline, format!("dart {d} not listed on any vertex line")));
    }
    if let Some(d) = twin.iter().position(|&t| t == usize::MAX) {
        return Err(syntax(hline, format!("dart {d} has no twin line")));
    }
    let map = CombinatorialMap::build(
        MapParts {
            vertex_count,
            origin,
            rotation,
            twin,
            outer_dart: outer,
            boundary,
            coords,
            lifts,
            meta,
        },
        surface,
    )?;
    Ok(map)
}

pub fn read_map(text: &str) -> Result<CombinatorialMap, FormatError> {
    read_map_with(text, |ln, tag, _| Err(syntax(ln, format!("unknown line tag `{tag}`"))))
}
