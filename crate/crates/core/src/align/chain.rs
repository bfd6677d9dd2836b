//! Edge chains traced through annotated edge pixels, with tangent fitting
//! and along-edge (geodesic) neighbourhoods.

use std::collections::HashMap;

use crate::grid::{edge_pixels, EdgeLabelMap, PixelCoord};

use super::AlignError;

// 4-neighbours first so corner pixels of staircases are not skipped.
const STEP_ORDER: [(isize, isize); 8] = [
    (-1, 0),
    (0, 1),
    (1, 0),
    (0, -1),
    (-1, 1),
    (1, 1),
    (1, -1),
    (-1, -1),
];

/// Ordered 8-connected pixel sequences covering every edge pixel exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeChain {
    chains: Vec<Vec<PixelCoord>>,
    closed: Vec<bool>,
    index: HashMap<PixelCoord, (usize, usize)>,
}

/// Local tangent direction of an edge pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    /// Angle in `[0, pi)`, counter-clockwise from the +x (column) axis as the
    /// image is displayed, i.e. with rows growing downward.
    pub theta: f64,
    /// Set when too few chain pixels exist to define a direction.
    pub isotropic_fallback: bool,
}

impl EdgeChain {
    /// Traces chains starting from endpoints, then from whatever remains
    /// (closed contours and junction leftovers), both in row-major order.
    pub fn trace(map: &EdgeLabelMap) -> Self {
        let pixels = edge_pixels(map);
        let degree = |p: PixelCoord| {
            STEP_ORDER
                .iter()
                .filter(|(dr, dc)| map.get_signed(p.row as isize + dr, p.col as isize + dc))
                .count()
        };
        let mut visited: HashMap<PixelCoord, bool> = pixels.iter().map(|&p| (p, false)).collect();
        let next_unvisited = |p: PixelCoord, visited: &HashMap<PixelCoord, bool>| {
            STEP_ORDER.iter().find_map(|(dr, dc)| {
                let (r, c) = (p.row as isize + dr, p.col as isize + dc);
                if !map.get_signed(r, c) {
                    return None;
                }
                let n = PixelCoord::new(r as usize, c as usize);
                (!visited[&n]).then_some(n)
            })
        };

        let starts: Vec<PixelCoord> = pixels
            .iter()
            .copied()
            .filter(|&p| degree(p) == 1)
            .chain(pixels.iter().copied())
            .collect();

        let mut chains = Vec::new();
        for start in starts {
            if visited[&start] {
                continue;
            }
            visited.insert(start, true);
            let mut forward = vec![start];
            let mut cur = start;
            while let Some(n) = next_unvisited(cur, &visited) {
                visited.insert(n, true);
                forward.push(n);
                cur = n;
            }
            let mut backward = Vec::new();
            cur = start;
            while let Some(n) = next_unvisited(cur, &visited) {
                visited.insert(n, true);
                backward.push(n);
                cur = n;
            }
            backward.reverse();
            backward.extend(forward);
            chains.push(backward);
        }

        let closed = chains
            .iter()
            .map(|c| c.len() >= 4 && c[0].chebyshev(*c.last().unwrap()) == 1)
            .collect();
        let index = chains
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| c.iter().enumerate().map(move |(k, &p)| (p, (ci, k))))
            .collect();
        Self {
            chains,
            closed,
            index,
        }
    }

    pub fn chains(&self) -> &[Vec<PixelCoord>] {
        &self.chains
    }

    pub fn is_closed(&self, chain: usize) -> bool {
        self.closed[chain]
    }

    /// `(chain index, position)` of an edge pixel.
    pub fn locate(&self, q: PixelCoord) -> Option<(usize, usize)> {
        self.index.get(&q).copied()
    }

    pub fn pixel_count(&self) -> usize {
        self.index.len()
    }

    /// Chain pixels within `radius` steps of `q` (excluding `q`), nearest first.
    fn within(&self, q: PixelCoord, radius: usize) -> Result<Vec<PixelCoord>, AlignError> {
        let (ci, pos) = self.locate(q).ok_or(AlignError::NotOnChain(q))?;
        let chain = &self.chains[ci];
        let len = chain.len();
        let mut out = Vec::new();
        if self.closed[ci] {
            let reach = radius.min((len - 1) / 2);
            for d in 1..=reach {
                out.push(chain[(pos + d) % len]);
                out.push(chain[(pos + len - d) % len]);
            }
            // Even-length loops have one pixel exactly opposite.
            if len.is_multiple_of(2) && radius >= len / 2 {
                out.push(chain[(pos + len / 2) % len]);
            }
        } else {
            for d in 1..=radius {
                if pos + d < len {
                    out.push(chain[pos + d]);
                }
                if d <= pos {
                    out.push(chain[pos - d]);
                }
            }
        }
        Ok(out)
    }
}

/// Edge pixels whose along-chain distance from `q` is at most `g` steps.
pub fn geodesic_neighborhood(
    chain: &EdgeChain,
    q: PixelCoord,
    g: usize,
) -> Result<Vec<PixelCoord>, AlignError> {
    if g == 0 {
        return Err(AlignError::InvalidConfig(
            "geodesic radius must be at least 1".into(),
        ));
    }
    let mut out = chain.within(q, g)?;
    out.sort_unstable();
    Ok(out)
}

/// Total-least-squares direction of the chain pixels within `fit_radius`
/// steps of `q`.
pub fn estimate_tangent(
    chain: &EdgeChain,
    q: PixelCoord,
    fit_radius: usize,
) -> Result<Tangent, AlignError> {
    let mut pts = chain.within(q, fit_radius)?;
    pts.push(q);
    if pts.len() < 2 {
        return Ok(Tangent {
            theta: 0.0,
            isotropic_fallback: true,
        });
    }
    // x = column, y = -row so that angles read counter-clockwise on screen.
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(sx, sy), p| {
        (sx + p.col as f64 / n, sy - p.row as f64 / n)
    });
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let dx = p.col as f64 - mx;
        let dy = -(p.row as f64) - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let mut theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if theta < 0.0 {
        theta += std::f64::consts::PI;
    }
    if theta >= std::f64::consts::PI {
        theta -= std::f64::consts::PI;
    }
    Ok(Tangent {
        theta,
        isotropic_fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn px(r: usize, c: usize) -> PixelCoord {
        PixelCoord::new(r, c)
    }

    fn map(h: usize, w: usize, pixels: &[PixelCoord]) -> EdgeLabelMap {
        EdgeLabelMap::from_pixels(h, w, 0, pixels).unwrap()
    }

    #[test]
    fn traces_open_line_from_endpoint() {
        let pts: Vec<_> = (0..5).map(|c| px(2, c)).collect();
        let chain = EdgeChain::trace(&map(5, 5, &pts));
        assert_eq!(chain.chains(), std::slice::from_ref(&pts));
        assert!(!chain.is_closed(0));
    }

    #[test]
    fn every_pixel_on_exactly_one_chain() {
        // A plus sign: a junction splits it into several chains.
        let pts = [
            px(0, 2),
            px(1, 2),
            px(2, 0),
            px(2, 1),
            px(2, 2),
            px(2, 3),
            px(2, 4),
            px(3, 2),
            px(4, 2),
        ];
        let chain = EdgeChain::trace(&map(5, 5, &pts));
        let total: usize = chain.chains().iter().map(Vec::len).sum();
        assert_eq!(total, pts.len());
        assert_eq!(chain.pixel_count(), pts.len());
        for c in chain.chains() {
            for w in c.windows(2) {
                assert_eq!(w[0].chebyshev(w[1]), 1);
            }
        }
    }

    #[test]
    fn closed_square_loop() {
        let mut pts = Vec::new();
        for c in 1..5 {
            pts.push(px(1, c));
            pts.push(px(4, c));
        }
        for r in 2..4 {
            pts.push(px(r, 1));
            pts.push(px(r, 4));
        }
        let chain = EdgeChain::trace(&map(6, 6, &pts));
        assert_eq!(chain.chains().len(), 1);
        assert!(chain.is_closed(0));
        // Neighbourhood wraps around the seam.
        let n = geodesic_neighborhood(&chain, chain.chains()[0][0], 2).unwrap();
        assert_eq!(n.len(), 4);
    }

    #[test]
    fn geodesic_examples() {
        let iso = EdgeChain::trace(&map(3, 3, &[px(1, 1)]));
        assert!(geodesic_neighborhood(&iso, px(1, 1), 3).unwrap().is_empty());

        let five: Vec<_> = (0..5).map(|c| px(0, c)).collect();
        let chain = EdgeChain::trace(&map(1, 5, &five));
        assert_eq!(
            geodesic_neighborhood(&chain, px(0, 2), 1).unwrap(),
            vec![px(0, 1), px(0, 3)]
        );

        let nine: Vec<_> = (0..9).map(|c| px(0, c)).collect();
        let chain = EdgeChain::trace(&map(1, 9, &nine));
        assert_eq!(geodesic_neighborhood(&chain, px(0, 4), 3).unwrap().len(), 6);

        assert_eq!(
            geodesic_neighborhood(&chain, px(0, 20), 1),
            Err(AlignError::NotOnChain(px(0, 20)))
        );
    }

    #[test]
    fn tangent_examples() {
        let horiz: Vec<_> = (0..7).map(|c| px(3, c)).collect();
        let chain = EdgeChain::trace(&map(7, 7, &horiz));
        let t = estimate_tangent(&chain, px(3, 3), 4).unwrap();
        assert_eq!(t.theta, 0.0);
        assert!(!t.isotropic_fallback);

        let vert: Vec<_> = (0..7).map(|r| px(r, 3)).collect();
        let chain = EdgeChain::trace(&map(7, 7, &vert));
        assert!((estimate_tangent(&chain, px(3, 3), 4).unwrap().theta - FRAC_PI_2).abs() < 1e-12);

        // Rising diagonal on screen: bottom-left to top-right.
        let diag: Vec<_> = (0..7).map(|k| px(6 - k, k)).collect();
        let chain = EdgeChain::trace(&map(7, 7, &diag));
        assert!((estimate_tangent(&chain, px(3, 3), 4).unwrap().theta - FRAC_PI_4).abs() < 1e-12);

        let fall: Vec<_> = (0..7).map(|k| px(k, k)).collect();
        let chain = EdgeChain::trace(&map(7, 7, &fall));
        let t = estimate_tangent(&chain, px(3, 3), 4).unwrap().theta;
        assert!((t - 3.0 * FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn staircase_matches_eigen_oracle() {
        // 4-connected staircase rising to the right.
        let mut pts = Vec::new();
        for k in 0..4 {
            pts.push(px(7 - k, k));
            pts.push(px(7 - k, k + 1));
        }
        let chain = EdgeChain::trace(&map(8, 8, &pts));
        let q = pts[3];
        let t = estimate_tangent(&chain, q, 20).unwrap();
        // Oracle: principal eigenvector of the 2x2 scatter matrix, by the
        // quadratic formula rather than the double-angle identity.
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.col as f64).sum::<f64>() / n;
        let my = pts.iter().map(|p| -(p.row as f64)).sum::<f64>() / n;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for p in &pts {
            let dx = p.col as f64 - mx;
            let dy = -(p.row as f64) - my;
            a += dx * dx;
            b += dx * dy;
            c += dy * dy;
        }
        let lambda = 0.5 * (a + c) + (0.25 * (a - c).powi(2) + b * b).sqrt();
        let expected = b.atan2(lambda - c).rem_euclid(std::f64::consts::PI);
        assert!(
            (t.theta - expected).abs() < 1e-12,
            "{} vs {}",
            t.theta,
            expected
        );
        assert!((t.theta - FRAC_PI_4).abs() < 0.2);
    }

    #[test]
    fn isolated_pixel_falls_back() {
        let chain = EdgeChain::trace(&map(3, 3, &[px(1, 1)]));
        let t = estimate_tangent(&chain, px(1, 1), 4).unwrap();
        assert_eq!(t.theta, 0.0);
        assert!(t.isotropic_fallback);
        assert!(estimate_tangent(&chain, px(0, 0), 4).is_err());
    }
}
