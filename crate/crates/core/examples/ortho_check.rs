//! Orthogonality of the Gaussian-Hermite functions on a fine grid.

use mghmi::moments::{orthogonality_check, orthogonality_reference};

fn main() -> mghmi::Result<()> {
    let (halfwidth, step) = (12.0, 1e-3);
    let mut worst: f64 = 0.0;
    println!("p1 p2      integral        expected");
    for p1 in 0..=6 {
        for p2 in 0..=6 {
            let v = orthogonality_check(p1, p2, halfwidth, step)?;
            let e = orthogonality_reference(p1, p2);
            worst = worst.max((v - e).abs());
            if p1 <= p2 {
                println!("{p1:2} {p2:2} {v:15.9} {e:15.9}");
            }
        }
    }
    println!("max abs error {worst:.3e}");
    Ok(())
}
