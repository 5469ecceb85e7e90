//! CBF-style conic format with extension keywords for every supported cone.
//!
//! The grammar is documented in `docs/cbf_grammar.md`. Constraint records
//! `a_i x + b_i in K` map to `h - G x in K` with `G = -a` and `h = b`; `L=`
//! records become rows of `A x = b` with `b = -b_i`. When every variable sits in
//! a cone and there are no cone constraints, `G = -I`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{fmt_f64, numbered_lines, parse_num, perr, FormatError};
use crate::cones::{ConeSpec, GInfo, KrausOp, PerspecFunc, ZInfo};
use crate::model::Model;

const VERSIONS: [u32; 4] = [1, 2, 3, 4];

/// One declared domain of a `VAR` or `CON` record.
#[derive(Debug, Clone, PartialEq)]
pub enum CbfCone {
    Free(usize),
    Zero(usize),
    NonPos(usize),
    Cone(ConeSpec),
}

impl CbfCone {
    pub fn dim(&self) -> usize {
        match self {
            CbfCone::Free(k) | CbfCone::Zero(k) | CbfCone::NonPos(k) => *k,
            CbfCone::Cone(s) => s.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CbfProblem {
    pub version: u32,
    pub maximize: bool,
    pub nvar: usize,
    pub var_cones: Vec<CbfCone>,
    pub ncon: usize,
    pub con_cones: Vec<CbfCone>,
    pub obj: Vec<(usize, f64)>,
    pub obj_const: f64,
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<(usize, f64)>,
    pub kraus: BTreeMap<usize, Vec<KrausOp>>,
}

struct Decl {
    line: usize,
    keyword: String,
    params: Vec<String>,
    dim: usize,
}

struct Lines<'a> {
    it: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            numbered_lines(text).map(|(n, l)| (n, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines { it: it.peekable(), last: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), FormatError> {
        match self.it.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l.split_whitespace().collect()))
            }
            None => perr(self.last + 1, format!("unexpected end of file while reading {what}")),
        }
    }

    fn record<const K: usize>(&mut self, what: &str) -> Result<(usize, [&'a str; K]), FormatError> {
        let (n, toks) = self.next(what)?;
        match <[&str; K]>::try_from(toks.as_slice()) {
            Ok(arr) => Ok((n, arr)),
            Err(_) => perr(n, format!("expected {K} fields in {what}, found {}", toks.len())),
        }
    }
}

fn split_params(inner: &str) -> Vec<String> {
    let mut out = vec![];
    let mut depth = 0;
    let mut cur = String::new();
    for ch in inner.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        if !ch.is_whitespace() {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_decl(line: usize, toks: &[&str]) -> Result<Decl, FormatError> {
    if toks.len() < 2 {
        return perr(line, "cone record needs a cone and a dimension");
    }
    let dim: usize = parse_num(toks[toks.len() - 1], line, "cone dimension")?;
    let head = toks[..toks.len() - 1].concat();
    let (keyword, params) = match head.find('(') {
        Some(p) => {
            let Some(inner) = head[p + 1..].strip_suffix(')') else {
                return perr(line, format!("unbalanced parameter list in `{head}`"));
            };
            (head[..p].to_string(), split_params(inner))
        }
        None => (head, vec![]),
    };
    Ok(Decl { line, keyword, params, dim })
}

fn parse_list(v: &str, line: usize) -> Result<Vec<usize>, FormatError> {
    let Some(inner) = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')) else {
        return perr(line, format!("expected a list like [2;2], found `{v}`"));
    };
    inner.split(';').filter(|s| !s.is_empty()).map(|t| parse_num(t, line, "list entry")).collect()
}

#[derive(Default)]
struct Params {
    n: Option<usize>,
    complex: bool,
    dims: Option<Vec<usize>>,
    sys: Option<Vec<usize>>,
    blocks: Option<usize>,
    g: Option<usize>,
    z: Option<usize>,
    func: Option<PerspecFunc>,
}

fn parse_params(d: &Decl) -> Result<Params, FormatError> {
    let line = d.line;
    let mut p = Params::default();
    for raw in &d.params {
        if raw == "complex" {
            p.complex = true;
            continue;
        }
        let Some((k, v)) = raw.split_once('=') else {
            p.n = Some(parse_num(raw, line, "dimension parameter")?);
            continue;
        };
        match k {
            "n" => p.n = Some(parse_num(v, line, "n")?),
            "dims" => p.dims = Some(parse_list(v, line)?),
            "sys" => p.sys = Some(parse_list(v, line)?),
            "blocks" => p.blocks = Some(parse_num(v, line, "blocks")?),
            "g" => p.g = Some(parse_num(v, line, "Kraus set id")?),
            "z" => p.z = Some(parse_num(v, line, "Kraus set id")?),
            "func" => {
                p.func = Some(if v == "log" {
                    PerspecFunc::Log
                } else if let Some(e) = v.strip_prefix("pow:") {
                    PerspecFunc::Power(parse_num(e, line, "power")?)
                } else {
                    return perr(line, format!("unknown function `{v}`"));
                })
            }
            "complex" => p.complex = parse_num::<u8>(v, line, "complex flag")? != 0,
            _ => return perr(line, format!("unknown parameter `{k}` for {}", d.keyword)),
        }
    }
    Ok(p)
}

fn resolve(d: &Decl, kraus: &BTreeMap<usize, Vec<KrausOp>>) -> Result<CbfCone, FormatError> {
    let line = d.line;
    let plain = |p: &Params| -> Result<usize, FormatError> { p.n.map_or_else(|| perr(line, format!("{} needs n", d.keyword)), Ok) };
    let kset = |id: usize| -> Result<Vec<KrausOp>, FormatError> {
        kraus.get(&id).cloned().map_or_else(|| perr(line, format!("unknown Kraus set {id}")), Ok)
    };
    let cone = match d.keyword.as_str() {
        "F" | "L=" | "L-" | "L+" | "Q" => {
            if !d.params.is_empty() {
                return perr(line, format!("{} takes no parameters", d.keyword));
            }
            let k = d.dim;
            match d.keyword.as_str() {
                "F" => return Ok(CbfCone::Free(k)),
                "L=" => return Ok(CbfCone::Zero(k)),
                "L-" => return Ok(CbfCone::NonPos(k)),
                "L+" => ConeSpec::NonNegOrthant { n: k },
                _ if k == 0 => return perr(line, "Q needs dimension at least 1"),
                _ => ConeSpec::SecondOrder { n: k - 1 },
            }
        }
        kw => {
            let p = parse_params(d)?;
            let complex = p.complex;
            match kw {
                "nonneg" => ConeSpec::NonNegOrthant { n: plain(&p)? },
                "psd" => ConeSpec::PosSemidefinite { n: plain(&p)?, complex },
                "soc" => ConeSpec::SecondOrder { n: plain(&p)? },
                "class_entr" => ConeSpec::ClassEntr { n: plain(&p)? },
                "class_rel_entr" => ConeSpec::ClassRelEntr { n: plain(&p)? },
                "quant_entr" => ConeSpec::QuantEntr { n: plain(&p)?, complex },
                "quant_rel_entr" => ConeSpec::QuantRelEntr { n: plain(&p)?, complex },
                "quant_cond_entr" => match (p.dims, p.sys) {
                    (Some(dims), Some(sys)) => ConeSpec::QuantCondEntr { dims, sys, complex },
                    _ => return perr(line, "quant_cond_entr needs dims and sys"),
                },
                "quant_key_dist" => {
                    let g = match (p.n, p.g) {
                        (Some(n), None) => GInfo::Identity(n),
                        (None, Some(id)) => GInfo::Kraus(kset(id)?),
                        _ => return perr(line, "quant_key_dist needs exactly one of n and g"),
                    };
                    let z = match (p.blocks, p.dims, p.sys, p.z) {
                        (Some(r), None, None, None) => ZInfo::Blocks(r),
                        (None, Some(dims), Some(sys), None) => ZInfo::Subsystems { dims, sys },
                        (None, None, None, Some(id)) => ZInfo::Kraus(kset(id)?),
                        _ => return perr(line, "quant_key_dist needs exactly one of blocks, dims+sys and z"),
                    };
                    ConeSpec::QuantKeyDist { g, z, complex }
                }
                "op_perspec_tr" | "op_perspec_epi" => {
                    let n = plain(&p)?;
                    let Some(func) = p.func else {
                        return perr(line, format!("{kw} needs func"));
                    };
                    if kw == "op_perspec_tr" {
                        ConeSpec::OpPerspecTr { n, func, complex }
                    } else {
                        ConeSpec::OpPerspecEpi { n, func, complex }
                    }
                }
                _ => return Err(FormatError::UnsupportedCone { line, keyword: kw.to_string() }),
            }
        }
    };
    if let Err(e) = cone.validate() {
        return perr(line, format!("invalid cone parameters: {e}"));
    }
    if cone.dim() != d.dim {
        return perr(line, format!("{} has dimension {}, record declares {}", d.keyword, cone.dim(), d.dim));
    }
    Ok(CbfCone::Cone(cone))
}

fn read_decls(lines: &mut Lines, section: &str) -> Result<(usize, Vec<Decl>), FormatError> {
    let (ln, [total, k]) = lines.record::<2>(section)?;
    let total: usize = parse_num(total, ln, "size")?;
    let k: usize = parse_num(k, ln, "record count")?;
    let mut decls = Vec::with_capacity(k);
    for _ in 0..k {
        let (n, toks) = lines.next(section)?;
        decls.push(parse_decl(n, &toks)?);
    }
    let sum: usize = decls.iter().map(|d| d.dim).sum();
    if sum != total {
        return perr(ln, format!("{section} declares {total} entries but its records sum to {sum}"));
    }
    Ok((total, decls))
}

impl CbfProblem {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = Lines::new(text);
        let mut pr = CbfProblem::default();
        let mut var_decls = None;
        let mut con_decls: Option<(usize, Vec<Decl>)> = None;
        let mut seen_ver = false;
        let (mut obj_ln, mut a_ln, mut b_ln) = (vec![], vec![], vec![]);
        while lines.it.peek().is_some() {
            let (ln, toks) = lines.next("section")?;
            if toks.len() != 1 {
                return perr(ln, format!("expected a section keyword, found `{}`", toks.join(" ")));
            }
            match toks[0] {
                "VER" => {
                    let (n, [v]) = lines.record::<1>("VER")?;
                    pr.version = parse_num(v, n, "version")?;
                    if !VERSIONS.contains(&pr.version) {
                        return perr(n, format!("unsupported version {}", pr.version));
                    }
                    seen_ver = true;
                }
                _ if !seen_ver => return perr(ln, "file must start with VER"),
                "OBJSENSE" => {
                    let (n, [s]) = lines.record::<1>("OBJSENSE")?;
                    pr.maximize = match s {
                        "MIN" => false,
                        "MAX" => true,
                        _ => return perr(n, format!("unknown objective sense `{s}`")),
                    };
                }
                "VAR" => var_decls = Some(read_decls(&mut lines, "VAR")?),
                "CON" => con_decls = Some(read_decls(&mut lines, "CON")?),
                "OBJACOORD" => {
                    for (n, [j, v]) in coords::<2>(&mut lines, "OBJACOORD")? {
                        pr.obj.push((parse_num(j, n, "variable index")?, parse_num(v, n, "value")?));
                        obj_ln.push(n);
                    }
                }
                "OBJBCOORD" => {
                    let (n, [v]) = lines.record::<1>("OBJBCOORD")?;
                    pr.obj_const = parse_num(v, n, "value")?;
                }
                "ACOORD" => {
                    for (n, [i, j, v]) in coords::<3>(&mut lines, "ACOORD")? {
                        pr.a.push((parse_num(i, n, "row index")?, parse_num(j, n, "variable index")?, parse_num(v, n, "value")?));
                        a_ln.push(n);
                    }
                }
                "BCOORD" => {
                    for (n, [i, v]) in coords::<2>(&mut lines, "BCOORD")? {
                        pr.b.push((parse_num(i, n, "row index")?, parse_num(v, n, "value")?));
                        b_ln.push(n);
                    }
                }
                "KRAUS" => read_kraus(&mut lines, &mut pr.kraus)?,
                other => return perr(ln, format!("unsupported section `{other}`")),
            }
        }
        if !seen_ver {
            return perr(lines.last.max(1), "missing VER section");
        }
        let Some((nvar, vd)) = var_decls else {
            return perr(lines.last.max(1), "missing VAR section");
        };
        pr.nvar = nvar;
        pr.var_cones = vd.iter().map(|d| resolve(d, &pr.kraus)).collect::<Result<_, _>>()?;
        if let Some(CbfCone::Zero(_) | CbfCone::NonPos(_)) = pr.var_cones.iter().find(|c| matches!(c, CbfCone::Zero(_) | CbfCone::NonPos(_))) {
            let d = vd.iter().find(|d| d.keyword == "L=" || d.keyword == "L-").unwrap();
            return Err(FormatError::UnsupportedCone { line: d.line, keyword: format!("{} (as a variable domain)", d.keyword) });
        }
        if let Some((ncon, cd)) = con_decls {
            pr.ncon = ncon;
            pr.con_cones = cd.iter().map(|d| resolve(d, &pr.kraus)).collect::<Result<_, _>>()?;
        }
        for (&(j, v), &ln) in pr.obj.iter().zip(&obj_ln) {
            if j >= pr.nvar {
                return perr(ln, format!("variable {j} out of range"));
            }
            if !v.is_finite() {
                return perr(ln, "non-finite value");
            }
        }
        for (&(i, j, v), &ln) in pr.a.iter().zip(&a_ln) {
            if i >= pr.ncon || j >= pr.nvar {
                return perr(ln, format!("entry ({i}, {j}) out of range"));
            }
            if !v.is_finite() {
                return perr(ln, "non-finite value");
            }
        }
        for (&(i, v), &ln) in pr.b.iter().zip(&b_ln) {
            if i >= pr.ncon {
                return perr(ln, format!("row {i} out of range"));
            }
            if !v.is_finite() {
                return perr(ln, "non-finite value");
            }
        }
        Ok(pr)
    }

    pub fn to_model(&self) -> Result<Model, FormatError> {
        let n = self.nvar;
        let sign = if self.maximize { -1.0 } else { 1.0 };
        let mut c = DVector::zeros(n);
        for &(j, v) in &self.obj {
            c[j] += sign * v;
        }
        let mut acon = DMatrix::zeros(self.ncon, n);
        for &(i, j, v) in &self.a {
            acon[(i, j)] += v;
        }
        let mut bcon = DVector::<f64>::zeros(self.ncon);
        for &(i, v) in &self.b {
            bcon[i] += v;
        }

        let mut cones = vec![];
        let mut g_rows: Vec<(DVector<f64>, f64)> = vec![];
        let all_var_cones = self.var_cones.iter().all(|c| matches!(c, CbfCone::Cone(_)));
        let mut off = 0;
        for vc in &self.var_cones {
            if let CbfCone::Cone(s) = vc {
                cones.push(s.clone());
                for k in 0..s.dim() {
                    let mut row = DVector::zeros(n);
                    row[off + k] = -1.0;
                    g_rows.push((row, 0.0));
                }
            }
            off += vc.dim();
        }
        let mut a_rows: Vec<(DVector<f64>, f64)> = vec![];
        let mut off = 0;
        let mut has_con_cones = false;
        for cc in &self.con_cones {
            let k = cc.dim();
            for r in off..off + k {
                let row = acon.row(r).transpose();
                match cc {
                    CbfCone::Free(_) => {}
                    CbfCone::Zero(_) => a_rows.push((row, -bcon[r])),
                    CbfCone::NonPos(_) => g_rows.push((row, -bcon[r])),
                    CbfCone::Cone(_) => g_rows.push((-row, bcon[r])),
                }
            }
            match cc {
                CbfCone::NonPos(k) => {
                    cones.push(ConeSpec::NonNegOrthant { n: *k });
                    has_con_cones = true;
                }
                CbfCone::Cone(s) => {
                    cones.push(s.clone());
                    has_con_cones = true;
                }
                _ => {}
            }
            off += k;
        }
        let a = DMatrix::from_fn(a_rows.len(), n, |i, j| a_rows[i].0[j]);
        let b = DVector::from_iterator(a_rows.len(), a_rows.iter().map(|r| r.1));
        let (g, h) = if all_var_cones && !has_con_cones {
            (None, None)
        } else {
            let g = DMatrix::from_fn(g_rows.len(), n, |i, j| g_rows[i].0[j]);
            let h = DVector::from_iterator(g_rows.len(), g_rows.iter().map(|r| r.1));
            (Some(g), Some(h))
        };
        Ok(Model::new(c, a, b, g, h, cones, sign * self.obj_const)?)
    }

    pub fn from_model(model: &Model) -> Self {
        let (p, n) = (model.p(), model.n());
        let mut pr = CbfProblem { version: 4, nvar: n, ..Default::default() };
        let var_form = model.g.is_neg_identity() && model.h.iter().all(|&v| v == 0.0);
        let cones: Vec<CbfCone> = model.cones.iter().cloned().map(CbfCone::Cone).collect();
        if var_form {
            pr.var_cones = cones;
            if p > 0 {
                pr.con_cones.push(CbfCone::Zero(p));
            }
            pr.ncon = p;
        } else {
            pr.var_cones.push(CbfCone::Free(n));
            if p > 0 {
                pr.con_cones.push(CbfCone::Zero(p));
            }
            pr.con_cones.extend(cones);
            pr.ncon = p + model.q();
        }
        pr.obj = model.c.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect();
        pr.obj_const = model.offset;
        for i in 0..p {
            for j in 0..n {
                if model.a[(i, j)] != 0.0 {
                    pr.a.push((i, j, model.a[(i, j)]));
                }
            }
            if model.b[i] != 0.0 {
                pr.b.push((i, -model.b[i]));
            }
        }
        if !var_form {
            let g = model.g.to_dense();
            for i in 0..g.nrows() {
                for j in 0..n {
                    if g[(i, j)] != 0.0 {
                        pr.a.push((p + i, j, -g[(i, j)]));
                    }
                }
                if model.h[i] != 0.0 {
                    pr.b.push((p + i, model.h[i]));
                }
            }
        }
        pr
    }

    pub fn to_text(&self) -> String {
        let mut kraus: Vec<Vec<KrausOp>> = vec![];
        for c in self.var_cones.iter().chain(&self.con_cones) {
            if let CbfCone::Cone(ConeSpec::QuantKeyDist { g, z, .. }) = c {
                let sets = [if let GInfo::Kraus(k) = g { Some(k) } else { None }, if let ZInfo::Kraus(k) = z { Some(k) } else { None }];
                for k in sets.into_iter().flatten() {
                    if !kraus.contains(k) {
                        kraus.push(k.clone());
                    }
                }
            }
        }
        let decl = |c: &CbfCone| -> String {
            match c {
                CbfCone::Free(k) => format!("F {k}"),
                CbfCone::Zero(k) => format!("L= {k}"),
                CbfCone::NonPos(k) => format!("L- {k}"),
                CbfCone::Cone(s) => format!("{} {}", cone_keyword(s, &kraus), s.dim()),
            }
        };
        let var: Vec<String> = self.var_cones.iter().map(decl).collect();
        let con: Vec<String> = self.con_cones.iter().map(decl).collect();

        let mut out = format!("VER\n{}\n\n", self.version);
        out.push_str(&format!("OBJSENSE\n{}\n\n", if self.maximize { "MAX" } else { "MIN" }));
        if !kraus.is_empty() {
            out.push_str(&format!("KRAUS\n{}\n", kraus.len()));
            for (id, ops) in kraus.iter().enumerate() {
                let (r, c) = ops[0].shape();
                let nz: Vec<(usize, usize, usize, Complex64)> = ops
                    .iter()
                    .enumerate()
                    .flat_map(|(k, m)| {
                        (0..r).flat_map(move |i| (0..c).map(move |j| (k, i, j, m[(i, j)])))
                    })
                    .filter(|e| e.3 != Complex64::new(0.0, 0.0))
                    .collect();
                out.push_str(&format!("{id} {} {r} {c} {}\n", ops.len(), nz.len()));
                for (k, i, j, v) in nz {
                    out.push_str(&format!("{k} {i} {j} {} {}\n", fmt_f64(v.re), fmt_f64(v.im)));
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("VAR\n{} {}\n", self.nvar, var.len()));
        for v in var {
            out.push_str(&v);
            out.push('\n');
        }
        out.push('\n');
        if !con.is_empty() {
            out.push_str(&format!("CON\n{} {}\n", self.ncon, con.len()));
            for v in con {
                out.push_str(&v);
                out.push('\n');
            }
            out.push('\n');
        }
        if !self.obj.is_empty() {
            out.push_str(&format!("OBJACOORD\n{}\n", self.obj.len()));
            for &(j, v) in &self.obj {
                out.push_str(&format!("{j} {}\n", fmt_f64(v)));
            }
            out.push('\n');
        }
        if self.obj_const != 0.0 {
            out.push_str(&format!("OBJBCOORD\n{}\n\n", fmt_f64(self.obj_const)));
        }
        if !self.a.is_empty() {
            out.push_str(&format!("ACOORD\n{}\n", self.a.len()));
            for &(i, j, v) in &self.a {
                out.push_str(&format!("{i} {j} {}\n", fmt_f64(v)));
            }
            out.push('\n');
        }
        if !self.b.is_empty() {
            out.push_str(&format!("BCOORD\n{}\n", self.b.len()));
            for &(i, v) in &self.b {
                out.push_str(&format!("{i} {}\n", fmt_f64(v)));
            }
        }
        out
    }
}

fn coords<'a, const K: usize>(lines: &mut Lines<'a>, section: &str) -> Result<Vec<(usize, [&'a str; K])>, FormatError> {
    let (ln, [cnt]) = lines.record::<1>(section)?;
    let cnt: usize = parse_num(cnt, ln, "entry count")?;
    (0..cnt).map(|_| lines.record::<K>(section)).collect()
}

fn read_kraus(lines: &mut Lines, sets: &mut BTreeMap<usize, Vec<KrausOp>>) -> Result<(), FormatError> {
    let (ln, [cnt]) = lines.record::<1>("KRAUS")?;
    let cnt: usize = parse_num(cnt, ln, "set count")?;
    for _ in 0..cnt {
        let (ln, [id, nops, r, c, nnz]) = lines.record::<5>("KRAUS")?;
        let id: usize = parse_num(id, ln, "set id")?;
        let nops: usize = parse_num(nops, ln, "operator count")?;
        let r: usize = parse_num(r, ln, "row count")?;
        let c: usize = parse_num(c, ln, "column count")?;
        let nnz: usize = parse_num(nnz, ln, "entry count")?;
        if nops == 0 || r == 0 || c == 0 {
            return perr(ln, "empty Kraus set");
        }
        if sets.contains_key(&id) {
            return perr(ln, format!("duplicate Kraus set {id}"));
        }
        let mut ops = vec![DMatrix::from_element(r, c, Complex64::new(0.0, 0.0)); nops];
        for _ in 0..nnz {
            let (n, [k, i, j, re, im]) = lines.record::<5>("KRAUS")?;
            let k: usize = parse_num(k, n, "operator index")?;
            let i: usize = parse_num(i, n, "row index")?;
            let j: usize = parse_num(j, n, "column index")?;
            if k >= nops || i >= r || j >= c {
                return perr(n, format!("Kraus entry ({k}, {i}, {j}) out of range"));
            }
            ops[k][(i, j)] += Complex64::new(parse_num(re, n, "value")?, parse_num(im, n, "value")?);
        }
        sets.insert(id, ops);
    }
    Ok(())
}

fn list(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(usize::to_string).collect();
    format!("[{}]", items.join(";"))
}

fn cone_keyword(s: &ConeSpec, kraus: &[Vec<KrausOp>]) -> String {
    let id = |k: &Vec<KrausOp>| kraus.iter().position(|x| x == k).expect("collected Kraus set");
    let mut params: Vec<String> = match s {
        ConeSpec::NonNegOrthant { .. } => return format!("L+"),
        ConeSpec::SecondOrder { .. } => return format!("Q"),
        ConeSpec::QuantCondEntr { dims, sys, .. } => vec![format!("dims={}", list(dims)), format!("sys={}", list(sys))],
        ConeSpec::QuantKeyDist { g, z, .. } => {
            let g = match g {
                GInfo::Identity(n) => format!("n={n}"),
                GInfo::Kraus(k) => format!("g={}", id(k)),
            };
            let z = match z {
                ZInfo::Blocks(r) => format!("blocks={r}"),
                ZInfo::Subsystems { dims, sys } => format!("dims={},sys={}", list(dims), list(sys)),
                ZInfo::Kraus(k) => format!("z={}", id(k)),
            };
            vec![g, z]
        }
        ConeSpec::OpPerspecTr { n, func, .. } | ConeSpec::OpPerspecEpi { n, func, .. } => {
            let f = match func {
                PerspecFunc::Log => "log".to_string(),
                PerspecFunc::Power(p) => format!("pow:{p}"),
            };
            vec![format!("n={n}"), format!("func={f}")]
        }
        other => vec![format!("n={}", other.n())],
    };
    if s.is_complex() {
        params.push("complex".into());
    }
    format!("{}({})", s.keyword(), params.join(","))
}

pub fn read_cbf(text: &str) -> Result<Model, FormatError> {
    CbfProblem::parse(text)?.to_model()
}

pub fn write_cbf(model: &Model) -> String {
    CbfProblem::from_model(model).to_text()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LP: &str = "# x1 + x2 = 1, x >= 0\nVER\n4\n\nOBJSENSE\nMIN\n\nVAR\n2 1\nL+ 2\n\nCON\n1 1\nL= 1\n\nOBJACOORD\n2\n0 1.0\n1 2.0\n\nACOORD\n2\n0 0 1.0\n0 1 1.0\n\nBCOORD\n1\n0 -1.0\n";

    #[test]
    fn lp_file() {
        let m = read_cbf(LP).unwrap();
        assert_eq!(m.cones, vec![ConeSpec::NonNegOrthant { n: 2 }]);
        assert!(m.g.is_neg_identity());
        assert_eq!(m.b.as_slice(), &[1.0]);
        assert_eq!(m.c.as_slice(), &[1.0, 2.0]);
        assert_eq!(read_cbf(&write_cbf(&m)).unwrap(), m);
    }

    fn decl_model(decl: &str, dim: usize) -> Result<Model, FormatError> {
        read_cbf(&format!("VER\n4\nVAR\n{dim} 1\n{decl} {dim}\n"))
    }

    #[test]
    fn extension_keywords() {
        let cases = [
            ("quant_rel_entr(n=2)", ConeSpec::QuantRelEntr { n: 2, complex: false }, 9),
            ("quant_entr(2, complex)", ConeSpec::QuantEntr { n: 2, complex: true }, 10),
            ("psd(3)", ConeSpec::PosSemidefinite { n: 3, complex: false }, 9),
            (
                "quant_cond_entr(dims=[2;2],sys=[1])",
                ConeSpec::QuantCondEntr { dims: vec![2, 2], sys: vec![1], complex: false },
                17,
            ),
            (
                "quant_key_dist(n=4,dims=[2;2],sys=[1])",
                ConeSpec::QuantKeyDist {
                    g: GInfo::Identity(4),
                    z: ZInfo::Subsystems { dims: vec![2, 2], sys: vec![1] },
                    complex: false,
                },
                17,
            ),
            (
                "op_perspec_epi(n=2,func=pow:0.3)",
                ConeSpec::OpPerspecEpi { n: 2, func: PerspecFunc::Power(0.3), complex: false },
                12,
            ),
            ("Q", ConeSpec::SecondOrder { n: 2 }, 3),
        ];
        for (decl, spec, dim) in cases {
            let m = decl_model(decl, dim).unwrap_or_else(|e| panic!("{decl}: {e}"));
            assert_eq!(m.cones, vec![spec], "{decl}");
            assert_eq!(read_cbf(&write_cbf(&m)).unwrap(), m, "{decl}");
        }
    }

    #[test]
    fn kraus_sets_round_trip() {
        let z = |a: f64, b: f64| Complex64::new(a, b);
        let k0 = DMatrix::from_row_slice(2, 2, &[z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(0.0, 0.0)]);
        let k1 = DMatrix::from_row_slice(2, 2, &[z(0.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)]);
        let g = vec![DMatrix::from_row_slice(2, 2, &[z(0.6, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(0.8, 0.0)])];
        let spec = ConeSpec::QuantKeyDist { g: GInfo::Kraus(g), z: ZInfo::Kraus(vec![k0, k1]), complex: false };
        let m = Model::new(DVector::zeros(spec.dim()), DMatrix::zeros(0, spec.dim()), DVector::zeros(0), None, None, vec![spec], 0.0)
            .unwrap();
        let text = write_cbf(&m);
        assert!(text.contains("KRAUS"));
        assert_eq!(read_cbf(&text).unwrap(), m);
    }

    #[test]
    fn general_constraints() {
        let text = "VER\n4\nOBJSENSE\nMAX\nVAR\n2 1\nF 2\nCON\n4 2\nQ 3\nL- 1\nOBJACOORD\n1\n0 1.0\nOBJBCOORD\n2.5\nACOORD\n3\n1 0 1.0\n2 1 1.0\n3 0 1.0\nBCOORD\n2\n0 1.0\n3 -4.0\n";
        let m = read_cbf(text).unwrap();
        assert_eq!(m.cones, vec![ConeSpec::SecondOrder { n: 2 }, ConeSpec::NonNegOrthant { n: 1 }]);
        assert_eq!(m.c.as_slice(), &[-1.0, 0.0]);
        assert_eq!(m.offset, -2.5);
        let g = m.g.to_dense();
        assert_eq!(g.row(1).iter().copied().collect::<Vec<_>>(), vec![-1.0, 0.0]);
        // x0 - 4 <= 0  becomes  4 - x0 >= 0
        assert_eq!(g.row(3).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
        assert_eq!(m.h.as_slice(), &[1.0, 0.0, 0.0, 4.0]);
        assert_eq!(read_cbf(&write_cbf(&m)).unwrap(), m);
    }

    #[test]
    fn errors() {
        match decl_model("quant_magic(n=2)", 9) {
            Err(FormatError::UnsupportedCone { keyword, line }) => {
                assert_eq!(keyword, "quant_magic");
                assert_eq!(line, 5);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(decl_model("quant_rel_entr(n=2)", 8), Err(FormatError::Parse { line: 5, .. })));
        assert!(matches!(read_cbf("VER\n9\n"), Err(FormatError::Parse { line: 2, .. })));
        assert!(matches!(read_cbf("VER\n4\nVAR\n3 1\nL+ 2\n"), Err(FormatError::Parse { line: 4, .. })));
        assert!(matches!(read_cbf("VAR\n2 1\nL+ 2\n"), Err(FormatError::Parse { line: 1, .. })));
    }
}
