//! CPLEX LP text format.
//!
//! Variables are named `b<k>` for the barrier coefficient at flat position `k`
//! of the maximal-degree tensor, then `eta` and `gamma`. Row `c<r>` is the
//! `r`-th assembled constraint; a comment line precedes each region block.

use std::fmt::Write;

use sbf_core::lp::LinearProgram;

const TERMS_PER_LINE: usize = 6;

fn var_name(lp: &LinearProgram, j: usize) -> String {
    if j < lp.num_barrier_vars {
        format!("b{}", lp.barrier_positions[j])
    } else if j == lp.eta_index() {
        "eta".to_string()
    } else {
        "gamma".to_string()
    }
}

fn write_terms(out: &mut String, lp: &LinearProgram, coeffs: &[(usize, f64)]) {
    if coeffs.is_empty() {
        out.push_str(" 0 b0");
    }
    for (n, &(j, c)) in coeffs.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {:e} {}", c.abs(), var_name(lp, j));
    }
}

pub fn to_lp_string(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ barrier LP: {} variables, {} constraints",
        lp.num_vars(),
        lp.num_constraints()
    );
    out.push_str("Minimize\n obj:");
    let obj: Vec<(usize, f64)> =
        lp.objective.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
    write_terms(&mut out, lp, &obj);
    out.push_str("\nSubject To\n");
    for span in &lp.blocks {
        let _ = writeln!(out, "\\ {:?} {:?} {:?}", span.kind, span.region.lo(), span.region.hi());
        for r in span.start..span.start + span.len {
            let mut row: Vec<(usize, f64)> =
                lp.a.row(r).iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
            if lp.eta_coeff[r] != 0.0 {
                row.push((lp.eta_index(), lp.eta_coeff[r]));
            }
            if lp.gamma_coeff[r] != 0.0 {
                row.push((lp.gamma_index(), lp.gamma_coeff[r]));
            }
            let _ = write!(out, " c{r}:");
            write_terms(&mut out, lp, &row);
            let _ = writeln!(out, " >= {:e}", lp.rhs[r]);
        }
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let name = var_name(lp, j);
        match (lp.lower[j], lp.upper[j]) {
            (None, None) => {
                let _ = writeln!(out, " {name} free");
            }
            (Some(lo), Some(hi)) => {
                let _ = writeln!(out, " {lo:e} <= {name} <= {hi:e}");
            }
            (Some(lo), None) => {
                let _ = writeln!(out, " {name} >= {lo:e}");
            }
            (None, Some(hi)) => {
                let _ = writeln!(out, " -inf <= {name} <= {hi:e}");
            }
        }
    }
    out.push_str("End\n");
    out
}
