//! MPS export in the fixed-field column layout, plus a reader.
//!
//! Names longer than eight characters are written as is, so the reader
//! splits fields on whitespace (free MPS) rather than on column positions.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::model::{Constraint, Model, ObjSense, Sense, VarType};
use crate::error::ModelError;

const OBJ_ROW: &str = "OBJ";

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_whitespace() || c == '$' { '_' } else { c })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

pub(crate) fn unique_names(
    names: impl Iterator<Item = String>,
    f: impl Fn(&str) -> String,
    reserved: &[&str],
) -> Result<Vec<String>, ModelError> {
    let mut seen: HashSet<String> = reserved.iter().map(|s| s.to_string()).collect();
    names
        .map(|n| {
            let s = f(&n);
            if seen.insert(s.clone()) {
                Ok(s)
            } else {
                Err(ModelError::NameCollision(s))
            }
        })
        .collect()
}

fn field_line(out: &mut String, a: &str, b: &str, c: &str) {
    let _ = writeln!(out, "    {a:<8}  {b:<8}  {c:>12}");
}

pub fn write_mps(model: &Model) -> Result<String, ModelError> {
    let col_names = unique_names(model.vars().iter().map(|v| v.name.clone()), sanitize, &[])?;
    let row_names = unique_names(
        model.constraints().iter().map(|c| c.name.clone()),
        sanitize,
        &[OBJ_ROW],
    )?;
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", sanitize(&model.name));
    if model.sense() == ObjSense::Maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for (c, name) in model.constraints().iter().zip(&row_names) {
        let t = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {name}");
    }

    let mut col_entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.n_vars()];
    let mut obj = vec![0.0; model.n_vars()];
    for &(j, v) in model.objective() {
        obj[j] += v;
    }
    for (j, &v) in obj.iter().enumerate() {
        if v != 0.0 {
            col_entries[j].push((OBJ_ROW.to_string(), v));
        }
    }
    for (c, name) in model.constraints().iter().zip(&row_names) {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for &(j, a) in &c.terms {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(e) => e.1 += a,
                None => merged.push((j, a)),
            }
        }
        for (j, a) in merged {
            col_entries[j].push((name.clone(), a));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (j, v) in model.vars().iter().enumerate() {
        let int = v.vtype == VarType::Integer;
        if int != in_int {
            let tag = if int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER                 'MARKER'                 {tag}");
            in_int = int;
        }
        if col_entries[j].is_empty() {
            field_line(&mut out, &col_names[j], OBJ_ROW, "0");
        }
        for (row, a) in &col_entries[j] {
            field_line(&mut out, &col_names[j], row, &format!("{a}"));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER                 'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    if model.objective_constant() != 0.0 {
        field_line(&mut out, "RHS", OBJ_ROW, &format!("{}", -model.objective_constant()));
    }
    for (c, name) in model.constraints().iter().zip(&row_names) {
        if c.rhs != 0.0 {
            field_line(&mut out, "RHS", name, &format!("{}", c.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (v, name) in model.vars().iter().zip(&col_names) {
        let bound = |out: &mut String, t: &str, val: Option<f64>| {
            let val = val.map(|x| format!("{x}")).unwrap_or_default();
            let line = format!(" {t} BND       {name:<8}  {val:>12}");
            let _ = writeln!(out, "{}", line.trim_end());
        };
        if v.vtype == VarType::Binary && v.lower == 0.0 && v.upper == 1.0 {
            bound(&mut out, "BV", None);
            continue;
        }
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => bound(&mut out, "FX", Some(v.lower)),
            (false, false) => bound(&mut out, "FR", None),
            (lo_fin, hi_fin) => {
                if !lo_fin {
                    bound(&mut out, "MI", None);
                } else if v.lower != 0.0 || v.vtype != VarType::Continuous {
                    bound(&mut out, "LO", Some(v.lower));
                }
                if hi_fin {
                    bound(&mut out, "UP", Some(v.upper));
                } else if v.vtype != VarType::Continuous {
                    bound(&mut out, "PL", None);
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

pub fn read_mps(text: &str) -> Result<Model, ModelError> {
    #[derive(PartialEq)]
    enum Sec {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Bounds,
        End,
    }
    let err = |line: usize, msg: &str| ModelError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut model = Model::new("model");
    let mut sense = ObjSense::Minimize;
    let mut sec = Sec::None;
    let mut obj_name: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut obj: Vec<(usize, f64)> = Vec::new();
    let mut obj_const = 0.0;
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;

    let num = |s: &str, line: usize| s.parse::<f64>().map_err(|_| err(line, &format!("bad number {s:?}")));

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tok: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            sec = match tok[0] {
                "NAME" => {
                    model.name = tok.get(1).copied().unwrap_or("model").to_string();
                    Sec::None
                }
                "OBJSENSE" => {
                    if let Some(s) = tok.get(1) {
                        sense = if *s == "MAX" { ObjSense::Maximize } else { ObjSense::Minimize };
                    }
                    Sec::ObjSense
                }
                "ROWS" => Sec::Rows,
                "COLUMNS" => Sec::Columns,
                "RHS" => Sec::Rhs,
                "BOUNDS" => Sec::Bounds,
                "RANGES" => return Err(err(line, "RANGES section is not supported")),
                "ENDATA" => Sec::End,
                other => return Err(err(line, &format!("unknown section {other}"))),
            };
            continue;
        }
        match sec {
            Sec::ObjSense => {
                sense = match tok[0] {
                    "MAX" | "MAXIMIZE" => ObjSense::Maximize,
                    "MIN" | "MINIMIZE" => ObjSense::Minimize,
                    _ => return Err(err(line, "bad OBJSENSE")),
                }
            }
            Sec::Rows => {
                if tok.len() != 2 {
                    return Err(err(line, "ROWS entry needs type and name"));
                }
                let s = match tok[0] {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(tok[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(err(line, "bad row type")),
                };
                row_index.insert(tok[1].to_string(), rows.len());
                rows.push((tok[1].to_string(), s));
                row_terms.push(Vec::new());
                rhs.push(0.0);
            }
            Sec::Columns => {
                if tok.len() >= 3 && tok[1] == "'MARKER'" {
                    in_int = tok[2] == "'INTORG'";
                    continue;
                }
                if tok.len() != 3 && tok.len() != 5 {
                    return Err(err(line, "COLUMNS entry needs 3 or 5 fields"));
                }
                let j = match col_index.get(tok[0]) {
                    Some(&j) => j,
                    None => {
                        let vt = if in_int { VarType::Integer } else { VarType::Continuous };
                        let j = model.add_var(tok[0], 0.0, f64::INFINITY, vt)?;
                        col_index.insert(tok[0].to_string(), j);
                        j
                    }
                };
                for pair in tok[1..].chunks(2) {
                    let v = num(pair[1], line)?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        if v != 0.0 {
                            obj.push((j, v));
                        }
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(line, "unknown row"))?;
                        row_terms[r].push((j, v));
                    }
                }
            }
            Sec::Rhs => {
                let fields = if tok.len() % 2 == 1 { &tok[1..] } else { &tok[..] };
                for pair in fields.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(line, "RHS entry needs name/value pairs"));
                    }
                    let v = num(pair[1], line)?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        obj_const = -v;
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(line, "unknown row"))?;
                        rhs[r] = v;
                    }
                }
            }
            Sec::Bounds => {
                if tok.len() < 3 {
                    return Err(err(line, "BOUNDS entry too short"));
                }
                let j = *col_index.get(tok[2]).ok_or_else(|| err(line, "unknown column"))?;
                let val = tok.get(3).map(|s| num(s, line)).transpose()?;
                let need = || val.ok_or_else(|| err(line, "bound needs a value"));
                let v = model.var(j).clone();
                let (mut lo, mut hi, mut vt) = (v.lower, v.upper, v.vtype);
                match tok[0] {
                    "UP" | "UI" => {
                        hi = need()?;
                        if tok[0] == "UI" {
                            vt = VarType::Integer;
                        }
                    }
                    "LO" | "LI" => {
                        lo = need()?;
                        if tok[0] == "LI" {
                            vt = VarType::Integer;
                        }
                    }
                    "FX" => {
                        lo = need()?;
                        hi = lo;
                    }
                    "FR" => {
                        lo = f64::NEG_INFINITY;
                        hi = f64::INFINITY;
                    }
                    "MI" => lo = f64::NEG_INFINITY,
                    "PL" => hi = f64::INFINITY,
                    "BV" => {
                        lo = 0.0;
                        hi = 1.0;
                        vt = VarType::Binary;
                    }
                    _ => return Err(err(line, "unknown bound type")),
                }
                let name = v.name.clone();
                model.set_bounds(j, lo, hi).map_err(|_| err(line, &format!("inconsistent bounds for {name}")))?;
                if vt != v.vtype {
                    model.set_vtype(j, vt);
                }
            }
            Sec::None | Sec::End => return Err(err(line, "data outside a section")),
        }
    }
    if sec != Sec::End {
        return Err(err(text.lines().count(), "missing ENDATA"));
    }
    for (r, (name, s)) in rows.into_iter().enumerate() {
        model.add_constraint(Constraint::new(name, std::mem::take(&mut row_terms[r]), s, rhs[r]))?;
    }
    model.set_objective(sense, obj)?;
    model.set_objective_constant(obj_const);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn one_row() -> Model {
        let mut m = Model::new("tiny");
        let x = m.add_binary("x");
        m.add_row("c1", vec![(x, 2.0)], Sense::Le, 1.5).unwrap();
        m.set_objective(ObjSense::Maximize, vec![(x, 3.0)]).unwrap();
        m
    }

    #[test]
    fn golden_one_row() {
        let text = write_mps(&one_row()).unwrap();
        assert_eq!(text, include_str!("golden/one_row.mps"));
        assert_eq!(read_mps(&text).unwrap(), one_row());
    }

    #[test]
    fn empty_model_skeleton() {
        let text = write_mps(&Model::new("empty")).unwrap();
        assert!(text.contains("ROWS\n N  OBJ\nCOLUMNS\n"));
        let back = read_mps(&text).unwrap();
        assert_eq!(back.n_vars(), 0);
        assert_eq!(back.n_constraints(), 0);
    }

    #[test]
    fn mixed_types_round_trip() {
        let mut m = Model::new("mix");
        let a = m.add_var("a var", -1.0, 2.5, VarType::Continuous).unwrap();
        let b = m.add_var("b", 0.0, 7.0, VarType::Integer).unwrap();
        let c = m.add_binary("c");
        let d = m.add_var("d", 3.0, 3.0, VarType::Continuous).unwrap();
        m.add_row("r1", vec![(a, 1.0), (b, -2.0)], Sense::Ge, -4.0).unwrap();
        m.add_row("r2", vec![(b, 1.0), (c, 1.0), (d, 0.5)], Sense::Eq, 2.0).unwrap();
        m.set_objective(ObjSense::Minimize, vec![(a, 1.0), (c, -1.0)]).unwrap();
        m.set_objective_constant(0.25);
        let back = read_mps(&write_mps(&m).unwrap()).unwrap();
        assert_eq!(back.vars()[0].name, "a_var");
        assert_eq!(back.vars()[1..], m.vars()[1..]);
        assert_eq!(back.constraints(), m.constraints());
        assert_eq!(back.objective_constant(), 0.25);
    }

    #[test]
    fn collisions_are_reported() {
        let mut m = Model::new("c");
        m.add_binary("a b");
        m.add_binary("a_b");
        assert!(matches!(write_mps(&m), Err(ModelError::NameCollision(_))));
    }
}
