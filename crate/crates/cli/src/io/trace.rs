use std::fmt::Write as _;

use amdreg::registration::LevelResult;

/// `level,factor,iteration,distance,grad_norm,step` rows for every level.
pub fn trace_csv(levels: &[LevelResult]) -> String {
    let mut s = String::from("level,factor,iteration,distance,grad_norm,step\n");
    for (k, l) in levels.iter().enumerate() {
        for r in &l.trace.records {
            let _ = writeln!(s, "{k},{},{},{},{},{}", l.factor, r.iteration, r.distance, r.grad_norm, r.step);
        }
    }
    s
}
