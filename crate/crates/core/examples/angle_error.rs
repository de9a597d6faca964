//! Classification when the vector rotation differs from the spatial one,
//! `theta_out = theta_in (1 + eps)`: TR invariants against a special-TR
//! baseline and raw moments.

use mghmi::harness::{angle_error_study, FlowTemplate};
use mghmi::invgen::{build_set, Model};

fn main() -> mghmi::Result<()> {
    let (_, set) = build_set(2, 2, Model::Tr, 2, 3);
    let templates = FlowTemplate::from_street(&FlowTemplate::template_street(), 10, 41, 100)?;
    let eps = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
    println!("  eps      TR   special-TR   raw");
    for row in angle_error_study(&set, &templates, 60, &eps, 8.0)? {
        println!(
            "{:5.2} {:7.2} {:12.2} {:6.2}",
            row.epsilon, row.tr_accuracy, row.special_tr_accuracy, row.raw_accuracy
        );
    }
    Ok(())
}
