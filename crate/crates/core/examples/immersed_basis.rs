//! Build the immersed shape functions on every cut element and report how well they satisfy
//! their defining conditions.
//!
//! ```bash
//! cargo run --release --example immersed_basis -- 16 1000
//! ```

use immersed_impes::fem::{condition_residuals, ImmersedBasis};
use immersed_impes::mesh::{classify_elements, Grid, LevelSet, Side};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().as_deref().unwrap_or("16").parse()?;
    let contrast: f64 = args.next().as_deref().unwrap_or("1000").parse()?;
    let grid = Grid::square(n, 0.0, 1.0)?;
    let level_set = LevelSet::new(|x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) - 1.0 / 16.0);
    let interface = classify_elements(&grid, &level_set)?;

    let mut worst_condition: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut worst_unity: f64 = 0.0;
    for cut in interface.cuts() {
        let basis = ImmersedBasis::build(&grid, cut, contrast, 1.0)?;
        worst_condition = worst_condition.max(basis.condition);
        for i in 0..4 {
            worst_residual = worst_residual.max(condition_residuals(&grid, cut, &basis, i).max());
        }
        // The four functions sum to one on both pieces.
        for side in [Side::Plus, Side::Minus] {
            let mut sum = [0.0; 4];
            for i in 0..4 {
                for (s, c) in sum.iter_mut().zip(basis.piece(i, side)) {
                    *s += c;
                }
            }
            let defect = (sum[0] - 1.0).abs().max(sum[1].abs()).max(sum[2].abs()).max(sum[3].abs());
            worst_unity = worst_unity.max(defect);
        }
    }
    println!("{} cut elements, beta+/beta- = {contrast}", interface.cuts().len());
    println!("largest condition estimate  {worst_condition:.3e}");
    println!("largest condition residual  {worst_residual:.3e}");
    println!("partition of unity defect   {worst_unity:.3e}");
    Ok(())
}
