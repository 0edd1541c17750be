//! Plain-text dump of an [`SdpProblem`], for debugging.

use std::fmt::Write;

use super::SdpProblem;

pub fn to_text(p: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "vars {}", p.num_vars);
    let _ = writeln!(out, "offset {:e}", p.c0);
    let _ = write!(out, "cost");
    for (i, v) in p.c.iter().enumerate() {
        if *v != 0.0 {
            let _ = write!(out, " {i}:{v:e}");
        }
    }
    out.push('\n');
    for r in 0..p.num_equalities() {
        let _ = write!(out, "eq {r} rhs {:e} |", p.b[r]);
        for (i, v) in p.a.row(r).iter().enumerate() {
            if *v != 0.0 {
                let _ = write!(out, " {i}:{v:e}");
            }
        }
        out.push('\n');
    }
    for (j, block) in p.blocks.iter().enumerate() {
        let _ = writeln!(out, "block {j} size {}", block.size);
        for r in 0..block.size {
            for c in r..block.size {
                let v = block.h[(r, c)];
                if v != 0.0 {
                    let _ = writeln!(out, "  h {r} {c} {v:e}");
                }
            }
        }
        for (var, entries) in &block.coefficients {
            for &(r, c, v) in entries.iter().filter(|e| e.0 <= e.1) {
                let _ = writeln!(out, "  g {var} {r} {c} {v:e}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::Model;

    #[test]
    fn dump_lists_blocks() {
        let mut m = Model::new();
        let x = m.herm_var(2);
        m.psd(&x);
        m.eq(&x.trace(), 1.0);
        let text = to_text(&m.to_problem());
        assert!(text.starts_with("vars 4"));
        assert!(text.contains("block 0 size 4"));
        assert!(text.contains("eq 0 rhs 1e0"));
    }
}
