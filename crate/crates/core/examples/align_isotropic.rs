//! Snap a shifted edge onto a probability ridge with the isotropic prior.

use seal_core::align::{align, realize_labels, AlignConfig, AlignMode};
use seal_core::{EdgeLabelMap, PixelCoord, ProbMap};

fn main() {
    let (h, w) = (12, 16);
    // The detector responds on row 6; the annotation sits on row 4.
    let mut values = vec![0.02f32; h * w];
    for c in 2..14 {
        values[6 * w + c] = 0.95;
    }
    let prob = ProbMap::from_values(h, w, 1, values).unwrap();
    let mut y = EdgeLabelMap::new(h, w, 0).unwrap();
    for c in 2..14 {
        y.set(PixelCoord::new(4, c), true);
    }

    let cfg = AlignConfig::default();
    let m = align(&y, &prob, &cfg, AlignMode::Isotropic).expect("alignment");
    let aligned = realize_labels(&y, &m).unwrap();
    for r in 0..h {
        let row: String = (0..w)
            .map(|c| {
                match (
                    y.get(PixelCoord::new(r, c)),
                    aligned.get(PixelCoord::new(r, c)),
                ) {
                    (true, true) => '#',
                    (true, false) => 'o',
                    (false, true) => '*',
                    _ => '.',
                }
            })
            .collect();
        println!("{row}");
    }
    println!("o = annotation, * = aligned");
}
