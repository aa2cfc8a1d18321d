//! Derivative-free minimisation: Brent's line search and Powell's method.

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105_1;

/// Brackets a minimum of `f` starting from `a`, `b`.
fn bracket<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64) -> (f64, f64, f64, f64) {
    let (mut fa, mut fb) = (f(a), f(b));
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLD * (b - a);
    let mut fc = f(c);
    let mut guard = 0;
    while fb > fc && guard < 100 {
        a = b;
        b = c;
        fb = fc;
        c = b + GOLD * (b - a);
        fc = f(c);
        guard += 1;
    }
    (a, b, c, fb)
}

/// Brent minimisation of a unimodal function inside the bracket `a < b < c`
/// (in any order). Returns `(x_min, f_min)`.
pub fn brent<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, c: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
    let (mut x, mut w, mut v) = (b, b, b);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (lo - x) && p < q * (hi - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { lo - x } else { hi - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                lo = x;
            } else {
                hi = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Line minimisation of `f(p + s·dir)` over `s`; returns the step and value.
fn line_min<F: FnMut(&[f64]) -> f64>(f: &mut F, p: &[f64], dir: &[f64], tol: f64) -> (f64, f64) {
    let mut buf = p.to_vec();
    let mut g = |s: f64| {
        for ((b, pi), di) in buf.iter_mut().zip(p).zip(dir) {
            *b = pi + s * di;
        }
        f(&buf)
    };
    let (a, b, c, _) = bracket(&mut g, 0.0, 1.0);
    brent(&mut g, a, b, c, tol)
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Powell's conjugate-direction method.
pub fn powell<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], ftol: f64, max_iter: usize) -> Minimum {
    let n = start.len();
    let mut dirs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut p = start.to_vec();
    let mut fp = f(&p);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let p0 = p.clone();
        let f0 = fp;
        let mut biggest = 0;
        let mut drop = 0.0;
        for (i, dir) in dirs.iter().enumerate() {
            let before = fp;
            let (s, fs) = line_min(&mut f, &p, dir, 1e-8);
            if fs < fp {
                for (pi, di) in p.iter_mut().zip(dir) {
                    *pi += s * di;
                }
                fp = fs;
            }
            if before - fp > drop {
                drop = before - fp;
                biggest = i;
            }
        }
        if 2.0 * (f0 - fp) <= ftol * (f0.abs() + fp.abs()) + 1e-30 {
            break;
        }
        let new_dir: Vec<f64> = p.iter().zip(&p0).map(|(a, b)| a - b).collect();
        let extrap: Vec<f64> = p.iter().zip(&p0).map(|(a, b)| 2.0 * a - b).collect();
        let fe = f(&extrap);
        if fe < f0 {
            let t = 2.0 * (f0 - 2.0 * fp + fe) * (f0 - fp - drop).powi(2) - drop * (f0 - fe).powi(2);
            if t < 0.0 {
                let (s, fs) = line_min(&mut f, &p, &new_dir, 1e-8);
                if fs < fp {
                    for (pi, di) in p.iter_mut().zip(&new_dir) {
                        *pi += s * di;
                    }
                    fp = fs;
                }
                dirs[biggest] = dirs[n - 1].clone();
                dirs[n - 1] = new_dir;
            }
        }
    }
    Minimum { x: p, value: fp, iterations }
}
