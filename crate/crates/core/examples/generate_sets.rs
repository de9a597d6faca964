//! Generates the independent invariant sets for vector fields, RGB images
//! and color volumes, printing the pruning counts. Pass a directory to save
//! the sets as text files.

use std::path::PathBuf;
use std::time::Instant;

use mghmi::invgen::{build_set, save_invariant_set, Model};

fn main() -> mghmi::Result<()> {
    let out: Option<PathBuf> = std::env::args().nth(1).map(PathBuf::from);
    let rows = [
        ("2D vector fields", 2, 2, Model::Tr, 2, 3),
        ("2D vector fields", 2, 2, Model::Ra, 2, 3),
        ("RGB images", 2, 3, Model::Ra, 3, 3),
        ("color volumes", 3, 3, Model::Ra, 3, 3),
    ];
    println!("{:18} {:>5} {:>2} {:>2} {:>6} {:>5} {:>4} {:>6} {:>6}", "data", "model", "K", "O", "pairs", "zero", "dup", "cands", "indep");
    for (name, m, n, model, k, o) in rows {
        let t = Instant::now();
        let (report, set) = build_set(m, n, model, k, o);
        println!(
            "{name:18} {model:>5} {k:>2} {o:>2} {:>6} {:>5} {:>4} {:>6} {:>6}   ({:.2?})",
            report.pairs,
            report.zero,
            report.duplicate,
            report.candidates.len(),
            set.len(),
            t.elapsed()
        );
        if let Some(dir) = &out {
            let path = dir.join(format!("{}.txt", set.id()));
            save_invariant_set(&set, &path)?;
        }
    }
    let (_, tr) = build_set(2, 2, Model::Tr, 2, 3);
    println!("\nTR members:");
    for s in &tr.sources {
        println!("  {s}");
    }
    Ok(())
}
