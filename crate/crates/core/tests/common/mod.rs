//! Reference implementations used as oracles by the integration tests.
//! None of these share code with the library.

#![allow(dead_code, clippy::too_many_arguments, clippy::needless_range_loop)]

use rand::Rng;

/// Gaussian elimination with full pivoting; `None` if numerically singular.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &v)| {
        let mut row = r.clone();
        row.push(v);
        row
    }).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().take(n).skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        if best <= 1e-10 * scale {
            return None;
        }
        m.swap(k, pr);
        for row in m.iter_mut() {
            row.swap(k, pc);
        }
        cols.swap(k, pc);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * z[j]).sum();
        z[k] = (m[k][n] - s) / m[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in cols.iter().enumerate() {
        x[c] = z[k];
    }
    Some(x)
}

fn combinations(m: usize, p: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, m: usize, p: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == p {
            f(cur);
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, p, cur, f);
            cur.pop();
        }
    }
    rec(0, m, p, &mut Vec::with_capacity(p), f);
}

/// Minimum of `vᵀb` over `Ab ≥ y` by enumerating basic feasible points.
/// Valid for bounded problems whose constraint matrix has full column rank.
pub fn vertex_optimum(v: &[f64], rows: &[Vec<f64>], y: &[f64]) -> Option<f64> {
    let p = v.len();
    let mut best: Option<f64> = None;
    combinations(rows.len(), p, &mut |s| {
        let a: Vec<Vec<f64>> = s.iter().map(|&i| rows[i].clone()).collect();
        let rhs: Vec<f64> = s.iter().map(|&i| y[i]).collect();
        if let Some(b) = solve_square(&a, &rhs) {
            let feasible = rows.iter().zip(y).all(|(r, &yi)| {
                let ab: f64 = r.iter().zip(&b).map(|(x, z)| x * z).sum();
                ab >= yi - 1e-8 * (1.0 + yi.abs())
            });
            if feasible {
                let obj: f64 = v.iter().zip(&b).map(|(x, z)| x * z).sum();
                best = Some(best.map_or(obj, |o: f64| o.min(obj)));
            }
        }
    });
    best
}

/// A random LP `min vᵀb, Ab ≥ y` that is feasible by construction and
/// bounded when `bounded` is set (then `v` is a nonnegative row combination).
pub fn random_lp<R: Rng>(rng: &mut R, p: usize, m: usize, bounded: bool) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let b0: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&b0).map(|(a, b)| a * b).sum::<f64>() - rng.gen_range(0.0..1.0))
        .collect();
    let v: Vec<f64> = if bounded {
        let g: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
        (0..p).map(|j| rows.iter().zip(&g).map(|(r, gi)| r[j] * gi).sum()).collect()
    } else {
        (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    (v, rows, y)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Nested adaptive Simpson over the box `[lo, hi]`.
pub fn box_integral(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], tol: f64) -> f64 {
    fn rec(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], prefix: &mut Vec<f64>, tol: f64) -> f64 {
        let d = prefix.len();
        if d == lo.len() {
            return f(prefix);
        }
        let prefix_cell = std::cell::RefCell::new(std::mem::take(prefix));
        let val = adaptive_simpson(
            |t| {
                let mut p = prefix_cell.borrow().clone();
                p.push(t);
                rec(f, lo, hi, &mut p, tol)
            },
            lo[d],
            hi[d],
            tol,
        );
        *prefix = prefix_cell.into_inner();
        val
    }
    rec(f, lo, hi, &mut Vec::new(), tol)
}

/// The selected ladder index by direct evaluation of the stopping rule:
/// the smallest `k ≤ K` whose comparison set fires, else `K`.
pub fn brute_force_k_hat(estimates: &[Vec<f64>], thresholds: &[f64]) -> usize {
    let top = estimates.len() - 2;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let fires: Vec<bool> = (0..=top)
        .map(|k| (0..=k).any(|l| dist(&estimates[k + 1], &estimates[l]) > thresholds[l] + thresholds[k + 1]))
        .collect();
    fires.iter().position(|&f| f).unwrap_or(top)
}

/// Smallest cube count over lower corners `k·edge/2` that keep the cube
/// inside `[0,1]^q`, together with the flush corner `1 - edge`.
pub fn brute_force_density(points: &[Vec<f64>], edge: f64) -> usize {
    let q = points.first().map_or(1, |p| p.len());
    let mut starts: Vec<f64> = (0..)
        .map(|k| k as f64 * edge / 2.0)
        .take_while(|s| s + edge < 1.0 - 1e-12)
        .collect();
    starts.push(1.0 - edge);
    let mut corners: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..q {
        corners = corners
            .into_iter()
            .flat_map(|c| {
                starts.iter().map(move |&s| {
                    let mut c = c.clone();
                    c.push(s);
                    c
                })
            })
            .collect();
    }
    corners
        .iter()
        .map(|c| {
            points
                .iter()
                .filter(|p| p.iter().zip(c).all(|(x, lo)| *x >= lo - 1e-12 && *x <= lo + edge + 1e-12))
                .count()
        })
        .min()
        .unwrap_or(0)
}

/// `{i/(N-1) : i = 0..N-1}^q`, both faces included.
pub fn closed_lattice(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..per_axis).map(|i| i as f64 / (per_axis - 1) as f64).collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut p = p.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}
