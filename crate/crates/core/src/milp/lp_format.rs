//! CPLEX-style LP text export and a reader for the same subset.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::model::{Constraint, Model, ObjSense, Sense, VarType};
use super::mps::unique_names;
use crate::error::ModelError;

fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| match c {
            '[' => '(',
            ']' => ')',
            c if c.is_ascii_alphanumeric() || "_.,()".contains(c) => c,
            _ => '_',
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E') {
        s.insert(0, '_');
    }
    s
}

fn write_expr(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0");
    }
    for &(j, a) in terms {
        let sign = if a < 0.0 || (a == 0.0 && a.is_sign_negative()) { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", a.abs(), names[j]);
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Writes the model with every column named in the objective (zero
/// coefficients included) so a reader recovers the original column order.
pub fn write_lp(model: &Model) -> Result<String, ModelError> {
    let names = unique_names(model.vars().iter().map(|v| v.name.clone()), sanitize, &[])?;
    let row_names = unique_names(model.constraints().iter().map(|c| c.name.clone()), sanitize, &["obj"])?;
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str(match model.sense() {
        ObjSense::Maximize => "Maximize\n",
        ObjSense::Minimize => "Minimize\n",
    });
    let mut obj = vec![0.0; model.n_vars()];
    for &(j, c) in model.objective() {
        obj[j] += c;
    }
    let terms: Vec<(usize, f64)> = obj.into_iter().enumerate().collect();
    out.push_str(" obj:");
    write_expr(&mut out, &terms, &names);
    if model.objective_constant() != 0.0 {
        let c = model.objective_constant();
        let _ = write!(out, " {} {}", if c < 0.0 { '-' } else { '+' }, c.abs());
    }
    out.push('\n');
    out.push_str("Subject To\n");
    for (c, name) in model.constraints().iter().zip(&row_names) {
        let _ = write!(out, " {name}:");
        write_expr(&mut out, &c.terms, &names);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for (v, name) in model.vars().iter().zip(&names) {
        if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", v.lower);
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", fmt_bound(v.lower), fmt_bound(v.upper));
        }
    }
    for (title, vt) in [("Binaries", VarType::Binary), ("Generals", VarType::Integer)] {
        let list: Vec<&String> = model
            .vars()
            .iter()
            .zip(&names)
            .filter(|(v, _)| v.vtype == vt)
            .map(|(_, n)| n)
            .collect();
        if !list.is_empty() {
            let _ = writeln!(out, "{title}");
            for n in list {
                let _ = writeln!(out, " {n}");
            }
        }
    }
    out.push_str("End\n");
    Ok(out)
}

struct Reader {
    model: Model,
    index: HashMap<String, usize>,
}

impl Reader {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self
            .model
            .add_var(name, 0.0, f64::INFINITY, VarType::Continuous)
            .expect("default bounds are valid");
        self.index.insert(name.to_string(), j);
        j
    }
}

fn parse_num(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

/// Splits `+ 2 x - y + 3` into linear terms and a constant.
fn parse_expr(r: &mut Reader, toks: &[&str], line: usize) -> Result<(Vec<(usize, f64)>, f64), ModelError> {
    let err = |msg: &str| ModelError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &t in toks {
        match t {
            "+" | "-" => {
                if let Some(v) = coef.take() {
                    constant += sign * v;
                }
                sign = if t == "+" { 1.0 } else { -1.0 };
            }
            _ => {
                if let Some(v) = parse_num(t) {
                    if coef.is_some() {
                        return Err(err("two numbers in a row"));
                    }
                    coef = Some(v);
                } else {
                    let j = r.var(t);
                    terms.push((j, sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            }
        }
    }
    if let Some(v) = coef {
        constant += sign * v;
    }
    Ok((terms, constant))
}

pub fn read_lp(text: &str) -> Result<Model, ModelError> {
    #[derive(PartialEq)]
    enum Sec {
        Head,
        Obj,
        Rows,
        Bounds,
        Bin,
        Gen,
        End,
    }
    let mut r = Reader {
        model: Model::new("model"),
        index: HashMap::new(),
    };
    let mut sense = ObjSense::Minimize;
    let mut sec = Sec::Head;
    let mut obj_terms = Vec::new();
    let mut obj_const = 0.0;
    let mut bounds_seen: Vec<bool> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |msg: &str| ModelError::Parse {
            line,
            msg: msg.to_string(),
        };
        if let Some(name) = raw.strip_prefix("\\ ") {
            if sec == Sec::Head {
                r.model.name = name.trim().to_string();
            }
            continue;
        }
        let body = raw.split('\\').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        match body.to_ascii_lowercase().as_str() {
            "maximize" | "maximum" | "max" => {
                sense = ObjSense::Maximize;
                sec = Sec::Obj;
                continue;
            }
            "minimize" | "minimum" | "min" => {
                sense = ObjSense::Minimize;
                sec = Sec::Obj;
                continue;
            }
            "subject to" | "such that" | "st" | "s.t." => {
                sec = Sec::Rows;
                continue;
            }
            "bounds" => {
                sec = Sec::Bounds;
                continue;
            }
            "binaries" | "binary" | "bin" => {
                sec = Sec::Bin;
                continue;
            }
            "generals" | "general" | "gen" => {
                sec = Sec::Gen;
                continue;
            }
            "end" => {
                sec = Sec::End;
                continue;
            }
            _ => {}
        }
        let (label, rest) = match body.split_once(':') {
            Some((l, rest)) => (Some(l.trim()), rest),
            None => (None, body),
        };
        let toks: Vec<&str> = rest.split_whitespace().collect();
        match sec {
            Sec::Obj => {
                let (t, c) = parse_expr(&mut r, &toks, line)?;
                obj_terms.extend(t);
                obj_const += c;
            }
            Sec::Rows => {
                let at = toks
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "=" | "<" | ">" | "=<" | "=>"))
                    .ok_or_else(|| err("row without a sense"))?;
                let s = match toks[at] {
                    "<=" | "<" | "=<" => Sense::Le,
                    ">=" | ">" | "=>" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let (terms, c) = parse_expr(&mut r, &toks[..at], line)?;
                let rhs_toks = &toks[at + 1..];
                let rhs = match rhs_toks {
                    [v] => parse_num(v),
                    ["-", v] => parse_num(v).map(|x| -x),
                    ["+", v] => parse_num(v),
                    _ => None,
                }
                .ok_or_else(|| err("bad right-hand side"))?;
                let name = label.map(str::to_string).unwrap_or_else(|| format!("R{}", r.model.n_constraints() + 1));
                r.model.add_constraint(Constraint::new(name, terms, s, rhs - c))?;
            }
            Sec::Bounds => {
                let set = |r: &mut Reader, name: &str, lo: Option<f64>, hi: Option<f64>| -> Result<(), ModelError> {
                    let j = r.var(name);
                    let v = r.model.var(j).clone();
                    r.model
                        .set_bounds(j, lo.unwrap_or(v.lower), hi.unwrap_or(v.upper))
                        .map_err(|_| err("inconsistent bounds"))
                };
                let name = match toks.as_slice() {
                    [lo, "<=", n, "<=", hi] => {
                        set(&mut r, n, parse_num(lo), parse_num(hi))?;
                        *n
                    }
                    [n, "free"] => {
                        set(&mut r, n, Some(f64::NEG_INFINITY), Some(f64::INFINITY))?;
                        *n
                    }
                    [n, "=", v] => {
                        let v = parse_num(v).ok_or_else(|| err("bad bound"))?;
                        set(&mut r, n, Some(v), Some(v))?;
                        *n
                    }
                    [a, "<=", b] => match parse_num(a) {
                        Some(lo) => {
                            set(&mut r, b, Some(lo), None)?;
                            *b
                        }
                        None => {
                            set(&mut r, a, None, parse_num(b))?;
                            *a
                        }
                    },
                    [n, ">=", v] => {
                        set(&mut r, n, parse_num(v), None)?;
                        *n
                    }
                    _ => return Err(err("unrecognized bound")),
                };
                let j = r.var(name);
                if bounds_seen.len() <= j {
                    bounds_seen.resize(j + 1, false);
                }
                bounds_seen[j] = true;
            }
            Sec::Bin | Sec::Gen => {
                for n in toks {
                    let j = r.var(n);
                    if sec == Sec::Bin {
                        r.model.set_vtype(j, VarType::Binary);
                        if !bounds_seen.get(j).copied().unwrap_or(false) {
                            r.model.set_bounds(j, 0.0, 1.0)?;
                        }
                    } else {
                        r.model.set_vtype(j, VarType::Integer);
                    }
                }
            }
            Sec::Head | Sec::End => return Err(err("text outside a section")),
        }
    }
    if sec != Sec::End {
        return Err(ModelError::Parse {
            line: text.lines().count(),
            msg: "missing End".into(),
        });
    }
    obj_terms.retain(|&(_, c): &(usize, f64)| c != 0.0);
    r.model.set_objective(sense, obj_terms)?;
    r.model.set_objective_constant(obj_const);
    Ok(r.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_structure() {
        let mut m = Model::new("lp");
        let a = m.add_var("a[1,2]", -1.0, 2.5, VarType::Continuous).unwrap();
        let b = m.add_var("b", 0.0, 7.0, VarType::Integer).unwrap();
        let c = m.add_binary("c");
        let e = m.add_binary("z");
        m.add_row("r1", vec![(a, 1.0), (b, -2.0)], Sense::Ge, -4.0).unwrap();
        m.add_row("r2", vec![(b, 1.0), (c, 1.0)], Sense::Eq, 2.0).unwrap();
        m.add_row("r3", vec![(e, 1.0)], Sense::Le, 1.0).unwrap();
        m.set_objective(ObjSense::Maximize, vec![(a, 1.5), (c, -1.0)]).unwrap();
        m.set_objective_constant(-2.0);
        let text = write_lp(&m).unwrap();
        assert!(text.contains("_a(1,2)") || text.contains("a(1,2)"));
        let back = read_lp(&text).unwrap();
        assert_eq!(back.n_vars(), m.n_vars());
        assert_eq!(back.n_constraints(), m.n_constraints());
        assert_eq!(back.vars()[1..], m.vars()[1..]);
        assert_eq!(back.constraints()[1..], m.constraints()[1..]);
        assert_eq!(back.objective_constant(), -2.0);
        assert_eq!(back.sense(), ObjSense::Maximize);
        assert_eq!(write_lp(&back).unwrap(), text);
    }

    #[test]
    fn empty_model() {
        let text = write_lp(&Model::new("e")).unwrap();
        let back = read_lp(&text).unwrap();
        assert_eq!(back.n_vars(), 0);
        assert_eq!(back.n_constraints(), 0);
    }
}
