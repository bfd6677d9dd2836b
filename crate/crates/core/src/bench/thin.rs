//! Skeletonization and dilation of binary edge maps.

use crate::grid::EdgeLabelMap;

/// Neighbours starting east, counter-clockwise: E, NE, N, NW, W, SW, S, SE.
const RING: [(isize, isize); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

fn ring(map: &EdgeLabelMap, r: usize, c: usize) -> [bool; 8] {
    RING.map(|(dr, dc)| map.get_signed(r as isize + dr, c as isize + dc))
}

/// Yokoi 8-connectivity number; a set pixel with value 1 is simple.
fn connectivity8(x: &[bool; 8]) -> usize {
    let nx = |k: usize| !x[k % 8] as usize;
    [0, 2, 4, 6]
        .iter()
        .map(|&k| nx(k) - nx(k) * nx(k + 1) * nx(k + 2))
        .sum()
}

fn removable(x: &[bool; 8]) -> bool {
    let b = x.iter().filter(|&&v| v).count();
    b >= 2 && connectivity8(x) == 1
}

/// Zhang-Suen sub-iteration candidates, in the usual P2..P9 notation
/// (P2 = N, clockwise).
fn zhang_suen_candidate(x: &[bool; 8], second: bool) -> bool {
    let [e, ne, n, nw, w, sw, s, se] = *x;
    let p = [n, ne, e, se, s, sw, w, nw];
    let b = p.iter().filter(|&&v| v).count();
    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if !(2..=6).contains(&b) || a != 1 {
        return false;
    }
    if second {
        !(n && e && w) && !(n && s && w)
    } else {
        !(n && e && s) && !(e && s && w)
    }
}

/// Corner of a 4-connected staircase whose removal leaves it 8-connected.
fn staircase_corner(x: &[bool; 8]) -> bool {
    let [e, ne, n, nw, w, sw, s, se] = *x;
    (n && e && !sw) || (e && s && !nw) || (s && w && !ne) || (w && n && !se)
}

/// Removes, in raster order, marked pixels that are still simple
/// non-endpoints at the time of removal.
fn sweep(map: &mut EdgeLabelMap, mark: impl Fn(&[bool; 8]) -> bool) -> bool {
    let (h, w) = map.dims();
    let mut marked = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let p = crate::grid::PixelCoord::new(r, c);
            if map.get(p) && mark(&ring(map, r, c)) {
                marked.push(p);
            }
        }
    }
    let mut changed = false;
    for p in marked {
        if removable(&ring(map, p.row, p.col)) {
            map.set(p, false);
            changed = true;
        }
    }
    changed
}

/// One-pixel-wide skeleton preserving the 8-connected topology of every
/// component. Zhang-Suen passes alternate with a staircase clean-up until
/// nothing changes, so the result is a fixed point.
pub fn thin(binary: &EdgeLabelMap) -> EdgeLabelMap {
    let mut map = binary.clone();
    loop {
        let mut changed = false;
        loop {
            let a = sweep(&mut map, |x| zhang_suen_candidate(x, false));
            let b = sweep(&mut map, |x| zhang_suen_candidate(x, true));
            if !(a || b) {
                break;
            }
            changed = true;
        }
        changed |= sweep(&mut map, staircase_corner);
        if !changed {
            return map;
        }
    }
}

/// Dilation by a (2r+1)x(2r+1) square, clipped at the borders.
pub fn dilate_gt(gt: &EdgeLabelMap, radius: usize) -> EdgeLabelMap {
    if radius == 0 {
        return gt.clone();
    }
    let (h, w) = gt.dims();
    let bits = gt.bits();
    let mut rows = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            if bits[r * w + c] {
                let c0 = c.saturating_sub(radius);
                let c1 = (c + radius).min(w - 1);
                rows[r * w + c0..=r * w + c1].fill(true);
            }
        }
    }
    let mut out = vec![false; h * w];
    for r in 0..h {
        let r0 = r.saturating_sub(radius);
        let r1 = (r + radius).min(h - 1);
        for c in 0..w {
            out[r * w + c] = (r0..=r1).any(|rr| rows[rr * w + c]);
        }
    }
    EdgeLabelMap::from_bits(h, w, gt.class_id(), out).expect("same dimensions")
}
