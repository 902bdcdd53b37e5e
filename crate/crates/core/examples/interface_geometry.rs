//! Classify a grid against a circular interface and compare the cut areas with the exact disk.
//!
//! ```bash
//! cargo run --release --example interface_geometry -- 32
//! ```

use std::f64::consts::PI;

use immersed_impes::mesh::{classify_elements, polygon_area, ElementLabel, Grid, LevelSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).as_deref().unwrap_or("16").parse()?;
    let radius = 0.25;
    let grid = Grid::square(n, 0.0, 1.0)?;
    let level_set = LevelSet::new(move |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) - radius * radius);
    let interface = classify_elements(&grid, &level_set)?;

    let count = |label| interface.labels().iter().filter(|&&l| l == label).count();
    println!(
        "n={n}: {} plus, {} minus, {} cut elements",
        count(ElementLabel::Plus),
        count(ElementLabel::Minus),
        count(ElementLabel::Cut)
    );

    // Area inside the chord-approximated interface.
    let mut inside = count(ElementLabel::Minus) as f64 * grid.element_area();
    for cut in interface.cuts() {
        inside += polygon_area(&cut.minus_polygon);
    }
    let exact = PI * radius * radius;
    println!("disk area: discrete {inside:.8}, exact {exact:.8}, error {:.2e}", (inside - exact).abs());

    if let Some(cut) = interface.cuts().first() {
        println!(
            "first cut element {}: E = ({:.4}, {:.4}), F = ({:.4}, {:.4}), normal = ({:.4}, {:.4})",
            cut.element, cut.e[0], cut.e[1], cut.f[0], cut.f[1], cut.normal[0], cut.normal[1]
        );
    }
    Ok(())
}
