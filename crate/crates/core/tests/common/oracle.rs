//! Slow, direct reference extractor for order-3 co-occurrences.
//!
//! Written without reference to the library internals: plain nested loops
//! over pixels, a dense `L x L x L` array, and the merge done by visiting
//! each unordered tuple pair explicitly.

#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

pub type Pixels = Vec<Vec<[u8; 3]>>; // [y][x]

/// Rounds `num / den` to nearest, ties up (`num >= 0`, `den > 0`).
fn nearest(num: i128, den: i128) -> i128 {
    let q = num / den;
    if 2 * (num - q * den) >= den {
        q + 1
    } else {
        q
    }
}

/// H, S, Cb, Cr of one pixel.
pub fn chroma(p: [u8; 3]) -> [u8; 4] {
    let (r, g, b) = (p[0] as i128, p[1] as i128, p[2] as i128);
    let hi = r.max(g).max(b);
    let lo = r.min(g).min(b);
    let c = hi - lo;
    // angle * c / 60, in [0, 6c)
    let h = if c == 0 {
        0
    } else if hi == r && g >= b {
        nearest(255 * (g - b), 6 * c)
    } else if hi == r {
        nearest(255 * (6 * c + g - b), 6 * c)
    } else if hi == g {
        nearest(255 * (2 * c + b - r), 6 * c)
    } else {
        nearest(255 * (4 * c + r - g), 6 * c)
    };
    let s = if hi == 0 { 0 } else { nearest(255 * c, hi) };
    let cb = nearest(
        128_000_000 - 168_736 * r - 331_264 * g + 500_000 * b,
        1_000_000,
    );
    let cr = nearest(
        128_000_000 + 500_000 * r - 418_688 * g - 81_312 * b,
        1_000_000,
    );
    [h.min(255), s, cb.clamp(0, 255), cr.clamp(0, 255)].map(|v| v as u8)
}

/// Residual of an integer plane: `vertical` subtracts the pixel below,
/// otherwise the pixel to the right. Output is `[y][x]` over the valid region.
fn residual(plane: &[Vec<i32>], vertical: bool) -> Vec<Vec<i32>> {
    let h = plane.len();
    let w = plane[0].len();
    let (oh, ow) = if vertical { (h - 1, w) } else { (h, w - 1) };
    let mut out = vec![vec![0; ow]; oh];
    for y in 0..oh {
        for x in 0..ow {
            let next = if vertical {
                plane[y + 1][x]
            } else {
                plane[y][x + 1]
            };
            out[y][x] = plane[y][x] - next;
        }
    }
    out
}

/// Normalized counts of code triples `(c(p), c(p + o), c(p + 2o))`.
fn triples(codes: &[Vec<usize>], levels: usize, dx: usize, dy: usize) -> Vec<Vec<Vec<f64>>> {
    let h = codes.len();
    let w = codes[0].len();
    let mut m = vec![vec![vec![0.0; levels]; levels]; levels];
    let mut n = 0.0;
    for y in 0..h {
        for x in 0..w {
            if x + 2 * dx >= w || y + 2 * dy >= h {
                continue;
            }
            let a = codes[y][x];
            let b = codes[y + dy][x + dx];
            let c = codes[y + 2 * dy][x + 2 * dx];
            m[a][b][c] += 1.0;
            n += 1.0;
        }
    }
    assert!(n > 0.0, "no chain fits");
    for a in 0..levels {
        for b in 0..levels {
            for c in 0..levels {
                m[a][b][c] /= n;
            }
        }
    }
    m
}

fn merge(m: &[Vec<Vec<f64>>], levels: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for a in 0..levels {
        for b in 0..levels {
            for c in 0..levels {
                // (a,b,c) represents its pair when it is not above (c,b,a)
                if (a, b, c) < (c, b, a) {
                    out.push(m[a][b][c] + m[c][b][a]);
                } else if a == c {
                    out.push(m[a][b][c]);
                }
            }
        }
    }
    out
}

fn mean_and_merge(
    planes: &[Vec<Vec<usize>>],
    levels: usize,
    offsets: &[(usize, usize)],
) -> Vec<f64> {
    let mut acc = vec![vec![vec![0.0; levels]; levels]; levels];
    let count = (planes.len() * offsets.len()) as f64;
    for p in planes {
        for &(dx, dy) in offsets {
            let m = triples(p, levels, dx, dy);
            for a in 0..levels {
                for b in 0..levels {
                    for c in 0..levels {
                        acc[a][b][c] += m[a][b][c] / count;
                    }
                }
            }
        }
    }
    merge(&acc, levels)
}

/// Full feature vector. `verticals` lists the filters to use: `true` for the
/// vertical difference, `false` for the horizontal one.
pub fn features(
    img: &Pixels,
    tau: i32,
    verticals: &[bool],
    offsets: &[(usize, usize)],
) -> Vec<f64> {
    let channel = |k: usize| -> Vec<Vec<i32>> {
        img.iter()
            .map(|row| row.iter().map(|p| p[k] as i32).collect())
            .collect()
    };
    let mut out = Vec::new();

    let mut rgb = Vec::new();
    for &v in verticals {
        let res: Vec<Vec<Vec<i32>>> = (0..3).map(|k| residual(&channel(k), v)).collect();
        let h = res[0].len();
        let w = res[0][0].len();
        let mut codes = vec![vec![0usize; w]; h];
        for y in 0..h {
            for x in 0..w {
                for (k, r) in res.iter().enumerate() {
                    if r[y][x] > 0 {
                        codes[y][x] += 1 << k;
                    }
                }
            }
        }
        rgb.push(codes);
    }
    out.extend(mean_and_merge(&rgb, 8, offsets));

    for k in 0..4 {
        let plane: Vec<Vec<i32>> = img
            .iter()
            .map(|row| row.iter().map(|&p| chroma(p)[k] as i32).collect())
            .collect();
        let mut planes = Vec::new();
        for &v in verticals {
            let res = residual(&plane, v);
            planes.push(
                res.iter()
                    .map(|row| {
                        row.iter()
                            .map(|&e| (e.clamp(-tau, tau) + tau) as usize)
                            .collect()
                    })
                    .collect(),
            );
        }
        out.extend(mean_and_merge(&planes, (2 * tau + 1) as usize, offsets));
    }
    out
}

/// Default configuration: tau 2, both filters (vertical first), both offsets.
pub fn default_features(img: &Pixels) -> Vec<f64> {
    features(img, 2, &[true, false], &[(0, 1), (1, 0)])
}
