//! Machine-readable solution report; the schema lives in `docs/solution.schema.json`.

use serde::Serialize;
use serde_json::Value;

use crate::cones::ConeSpec;
use crate::ipm::SolveReport;
use crate::linalg::Block;

pub const SOLUTION_KEYS: [&str; 13] = [
    "x_opt", "y_opt", "z_opt", "s_opt", "sol_status", "exit_status", "num_iter", "solve_time", "p_obj", "d_obj",
    "opt_gap", "p_feas", "d_feas",
];

#[derive(Serialize)]
struct Solution<'a> {
    x_opt: &'a [f64],
    y_opt: &'a [f64],
    z_opt: Vec<Vec<Value>>,
    s_opt: Vec<Vec<Value>>,
    sol_status: &'static str,
    exit_status: &'static str,
    num_iter: usize,
    solve_time: f64,
    p_obj: f64,
    d_obj: f64,
    opt_gap: f64,
    p_feas: f64,
    d_feas: f64,
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Splits a cone-space vector into per-cone lists of blocks; matrices become
/// row-major nested arrays with `[re, im]` pairs when complex.
fn structured(v: &[f64], cones: &[ConeSpec]) -> Vec<Vec<Value>> {
    let mut off = 0;
    let mut out = vec![];
    for spec in cones {
        let layout = spec.build().expect("validated cone").layout();
        let mut blocks = vec![];
        for b in &layout.blocks {
            let slice = &v[off..off + b.vec_dim()];
            blocks.push(match *b {
                Block::Scalars(_) => Value::Array(slice.iter().map(|&x| num(x)).collect()),
                Block::Herm { n, complex } => Value::Array(
                    (0..n)
                        .map(|i| {
                            Value::Array(
                                (0..n)
                                    .map(|j| {
                                        if complex {
                                            let k = 2 * (i * n + j);
                                            Value::Array(vec![num(slice[k]), num(slice[k + 1])])
                                        } else {
                                            num(slice[i * n + j])
                                        }
                                    })
                                    .collect(),
                            )
                        })
                        .collect(),
                ),
            });
            off += b.vec_dim();
        }
        out.push(blocks);
    }
    out
}

fn solution<'a>(report: &'a SolveReport, cones: &[ConeSpec]) -> Solution<'a> {
    Solution {
        x_opt: report.x_opt.as_slice(),
        y_opt: report.y_opt.as_slice(),
        z_opt: structured(report.z_opt.as_slice(), cones),
        s_opt: structured(report.s_opt.as_slice(), cones),
        sol_status: report.sol_status.as_str(),
        exit_status: report.exit_status.as_str(),
        num_iter: report.num_iter,
        solve_time: report.solve_time,
        p_obj: report.p_obj,
        d_obj: report.d_obj,
        opt_gap: report.opt_gap,
        p_feas: report.p_feas,
        d_feas: report.d_feas,
    }
}

/// The report as a JSON value; `cones` must be the model's cone list.
pub fn solution_value(report: &SolveReport, cones: &[ConeSpec]) -> Value {
    serde_json::to_value(solution(report, cones)).expect("serializable report")
}

pub fn solution_json(report: &SolveReport, cones: &[ConeSpec]) -> String {
    serde_json::to_string_pretty(&solution(report, cones)).expect("serializable report")
}

/// Alias of [`solution_json`] with a trailing newline, as written to files.
pub fn write_solution_json(report: &SolveReport, cones: &[ConeSpec]) -> String {
    solution_json(report, cones) + "\n"
}
