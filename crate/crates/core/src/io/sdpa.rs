//! SDPA sparse format.
//!
//! The file describes `max F0 . Y  s.t.  Fi . Y = ci (i = 1..m),  Y psd`.
//! It is read as the model `min -vec(F0)^T y  s.t.  A y = c,  y in K` where row
//! `i` of `A` is `vec(Fi)` over all blocks and `G = -I`, so the reported primal
//! objective is the negated SDPA optimum. Positive block sizes are PSD blocks,
//! negative ones nonnegative orthants. The `.dat-c` variant carries six fields
//! per entry (`mat blk i j re im`); a block becomes Hermitian when any of its
//! entries has a nonzero imaginary part.

use nalgebra::{DMatrix, DVector};

use super::{fmt_f64, numbered_lines, parse_num, perr, FormatError};
use crate::cones::ConeSpec;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpaEntry {
    /// 0 is the objective matrix `F0`.
    pub mat: usize,
    /// 1-based block index.
    pub blk: usize,
    pub i: usize,
    pub j: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub m: usize,
    pub blocks: Vec<i64>,
    pub objective: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
    pub complex: bool,
}

fn is_comment(tok: &str) -> bool {
    tok.starts_with('=') || tok.starts_with('"') || tok.starts_with('*')
}

fn header_tokens(line: &str) -> Vec<String> {
    line.replace(['{', '}', '(', ')', ','], " ").split_whitespace().map(str::to_string).collect()
}

impl SdpaProblem {
    pub fn parse(text: &str, complex: bool) -> Result<Self, FormatError> {
        let mut lines = numbered_lines(text)
            .filter(|(_, l)| !l.trim().is_empty())
            .skip_while(|(_, l)| {
                let t = l.trim_start();
                t.starts_with('"') || t.starts_with('*')
            });
        let mut last = 0;
        // Reads `count` numbers from consecutive lines; the rest of the last line may be a comment.
        let mut header = |count: usize, what: &str| -> Result<(Vec<String>, usize), FormatError> {
            let mut out = vec![];
            while out.len() < count {
                let Some((ln, l)) = lines.next() else {
                    return perr(last + 1, format!("unexpected end of file while reading {what}"));
                };
                last = ln;
                let toks = header_tokens(l);
                let mut it = toks.into_iter();
                for t in it.by_ref() {
                    if is_comment(&t) {
                        break;
                    }
                    if out.len() == count {
                        return perr(ln, format!("trailing garbage `{t}` after {what}"));
                    }
                    out.push(t);
                }
            }
            Ok((out, last))
        };
        let (m_tok, ln) = header(1, "the number of constraints")?;
        let m: usize = parse_num(&m_tok[0], ln, "constraint count")?;
        let (nb_tok, last) = header(1, "the number of blocks")?;
        let nb: usize = parse_num(&nb_tok[0], last, "block count")?;
        if nb == 0 {
            return perr(last, "at least one block is required");
        }
        let (bs_tok, last) = header(nb, "the block structure")?;
        let mut blocks = Vec::with_capacity(nb);
        for t in &bs_tok {
            let b: i64 = parse_num(t, last, "block size")?;
            if b == 0 {
                return perr(last, "block size 0");
            }
            blocks.push(b);
        }
        let (obj_tok, last) = header(m, "the objective vector")?;
        let objective = obj_tok.iter().map(|t| parse_num::<f64>(t, last, "objective value")).collect::<Result<_, _>>()?;

        let fields = if complex { 6 } else { 5 };
        let mut entries = vec![];
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != fields {
                return perr(ln, format!("expected {fields} fields, found {}", toks.len()));
            }
            let mat: usize = parse_num(toks[0], ln, "matrix number")?;
            let blk: usize = parse_num(toks[1], ln, "block number")?;
            let i: usize = parse_num(toks[2], ln, "row index")?;
            let j: usize = parse_num(toks[3], ln, "column index")?;
            let re: f64 = parse_num(toks[4], ln, "value")?;
            let im: f64 = if complex { parse_num(toks[5], ln, "imaginary part")? } else { 0.0 };
            if mat > m {
                return perr(ln, format!("matrix number {mat} exceeds {m}"));
            }
            if blk == 0 || blk > nb {
                return perr(ln, format!("block number {blk} outside 1..={nb}"));
            }
            let size = blocks[blk - 1];
            let n = size.unsigned_abs() as usize;
            if i == 0 || j == 0 || i > n || j > n {
                return perr(ln, format!("index ({i}, {j}) outside block of size {n}"));
            }
            if j < i {
                return perr(ln, format!("entry ({i}, {j}) below the diagonal"));
            }
            if size < 0 && i != j {
                return perr(ln, format!("off-diagonal entry ({i}, {j}) in a diagonal block"));
            }
            if i == j && im != 0.0 {
                return perr(ln, "diagonal entry with nonzero imaginary part");
            }
            if !re.is_finite() || !im.is_finite() {
                return perr(ln, "non-finite value");
            }
            entries.push(SdpaEntry { mat, blk, i, j, re, im });
        }
        Ok(SdpaProblem { m, blocks, objective, entries, complex })
    }

    /// Per-block flag: Hermitian when some entry carries an imaginary part.
    fn block_complex(&self) -> Vec<bool> {
        let mut flags = vec![false; self.blocks.len()];
        for e in &self.entries {
            if e.im != 0.0 {
                flags[e.blk - 1] = true;
            }
        }
        flags
    }

    pub fn cones(&self) -> Vec<ConeSpec> {
        let flags = self.block_complex();
        self.blocks
            .iter()
            .zip(flags)
            .map(|(&b, complex)| {
                if b > 0 {
                    ConeSpec::PosSemidefinite { n: b as usize, complex }
                } else {
                    ConeSpec::NonNegOrthant { n: b.unsigned_abs() as usize }
                }
            })
            .collect()
    }

    pub fn to_model(&self) -> Result<Model, FormatError> {
        let cones = self.cones();
        let mut offsets = vec![0];
        for c in &cones {
            offsets.push(offsets.last().unwrap() + c.dim());
        }
        let nvar = *offsets.last().unwrap();
        let mut f = DMatrix::zeros(self.m + 1, nvar);
        for e in &self.entries {
            let off = offsets[e.blk - 1];
            let (i, j) = (e.i - 1, e.j - 1);
            match cones[e.blk - 1] {
                ConeSpec::NonNegOrthant { .. } => f[(e.mat, off + i)] += e.re,
                ConeSpec::PosSemidefinite { n, complex } => {
                    let w = if complex { 2 } else { 1 };
                    let at = |r: usize, c: usize| off + (r * n + c) * w;
                    f[(e.mat, at(i, j))] += e.re;
                    if i != j {
                        f[(e.mat, at(j, i))] += e.re;
                    }
                    if complex {
                        f[(e.mat, at(i, j) + 1)] += e.im;
                        if i != j {
                            f[(e.mat, at(j, i) + 1)] -= e.im;
                        }
                    }
                }
                _ => unreachable!("SDPA blocks are PSD or orthant"),
            }
        }
        let c = -f.row(0).transpose();
        let a = f.rows(1, self.m).into_owned();
        let b = DVector::from_vec(self.objective.clone());
        Ok(Model::new(c, a, b, None, None, cones, 0.0)?)
    }

    /// Inverse of [`SdpaProblem::to_model`] for models of SDPA shape with symmetric data.
    pub fn from_model(model: &Model) -> Result<Self, FormatError> {
        let bad = |s: &str| Err(FormatError::Unrepresentable(s.into()));
        if !model.g.is_neg_identity() {
            return bad("G must be -I");
        }
        if model.h.iter().any(|&v| v != 0.0) || model.offset != 0.0 {
            return bad("h and the objective offset must vanish");
        }
        let mut blocks = vec![];
        for cone in &model.cones {
            match *cone {
                ConeSpec::NonNegOrthant { n } => blocks.push(-(n as i64)),
                ConeSpec::PosSemidefinite { n, .. } => blocks.push(n as i64),
                _ => return bad("only PSD and orthant cones are supported"),
            }
        }
        let complex = sdpa_needs_complex(model);
        let mut entries = vec![];
        let neg_c = -&model.c;
        let rows: Vec<DVector<f64>> =
            std::iter::once(neg_c).chain(model.a.row_iter().map(|r| r.transpose())).collect();
        for (mat, row) in rows.iter().enumerate() {
            let mut off = 0;
            for (k, cone) in model.cones.iter().enumerate() {
                let blk = k + 1;
                match *cone {
                    ConeSpec::NonNegOrthant { n } => {
                        for i in 0..n {
                            let re = row[off + i];
                            if re != 0.0 {
                                entries.push(SdpaEntry { mat, blk, i: i + 1, j: i + 1, re, im: 0.0 });
                            }
                        }
                    }
                    ConeSpec::PosSemidefinite { n, complex: cx } => {
                        let w = if cx { 2 } else { 1 };
                        let at = |r: usize, c: usize| off + (r * n + c) * w;
                        for i in 0..n {
                            for j in i..n {
                                let re = row[at(i, j)];
                                let im = if cx { row[at(i, j) + 1] } else { 0.0 };
                                let (re_t, im_t) = (row[at(j, i)], if cx { row[at(j, i) + 1] } else { 0.0 });
                                if re_t != re || im_t != -im || (i == j && im != 0.0) {
                                    return bad("matrix data must be symmetric/Hermitian");
                                }
                                if re != 0.0 || im != 0.0 {
                                    entries.push(SdpaEntry { mat, blk, i: i + 1, j: j + 1, re, im });
                                }
                            }
                        }
                    }
                    _ => unreachable!(),
                }
                off += cone.dim();
            }
        }
        Ok(SdpaProblem { m: model.p(), blocks, objective: model.b.iter().copied().collect(), entries, complex })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n{}\n", self.m, self.blocks.len()));
        let bs: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        out.push_str(&bs.join(" "));
        out.push('\n');
        let obj: Vec<String> = self.objective.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&obj.join(" "));
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!("{} {} {} {} {}", e.mat, e.blk, e.i, e.j, fmt_f64(e.re)));
            if self.complex {
                out.push(' ');
                out.push_str(&fmt_f64(e.im));
            }
            out.push('\n');
        }
        out
    }
}

/// Whether writing `model` requires the six-field complex variant.
pub fn sdpa_needs_complex(model: &Model) -> bool {
    model.cones.iter().any(ConeSpec::is_complex)
}

pub fn read_sdpa(text: &str, complex: bool) -> Result<Model, FormatError> {
    SdpaProblem::parse(text, complex)?.to_model()
}

/// Writes the model; use the `.dat-c` suffix when [`sdpa_needs_complex`] holds.
pub fn write_sdpa(model: &Model) -> Result<String, FormatError> {
    Ok(SdpaProblem::from_model(model)?.to_text())
}
