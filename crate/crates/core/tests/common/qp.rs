//! Nearest point of a polytope `{y : A y <= b}` by a primal active-set
//! method, for small dense problems with linearly independent rows.

use nalgebra::{DMatrix, DVector};

/// `argmin ||y - x||^2` subject to `a y <= b`, started from the feasible
/// point `start`.
pub fn nearest_point(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>, start: &DVector<f64>) -> DVector<f64> {
    let tol = 1e-12;
    let rows = a.nrows();
    assert!((a * start - b).iter().all(|r| *r <= tol), "start must be feasible");
    let mut y = start.clone();
    let mut active: Vec<usize> = Vec::new();
    for _ in 0..10_000 {
        let g = &y - x;
        let (p, mu) = if active.is_empty() {
            (-&g, DVector::zeros(0))
        } else {
            let aw = DMatrix::from_fn(active.len(), a.ncols(), |i, j| a[(active[i], j)]);
            let gram = &aw * aw.transpose();
            let rhs = -(&aw * &g);
            let mu = gram.lu().solve(&rhs).expect("independent active rows");
            (-&g - aw.transpose() * &mu, mu)
        };
        if p.norm() <= tol * (1.0 + y.norm()) {
            match mu.iter().enumerate().min_by(|l, r| l.1.total_cmp(r.1)) {
                Some((i, &m)) if m < -tol => {
                    active.remove(i);
                }
                _ => return y,
            }
            continue;
        }
        let mut step = 1.0;
        let mut blocking = None;
        for i in (0..rows).filter(|i| !active.contains(i)) {
            let ap = a.row(i).dot(&p.transpose());
            if ap > tol {
                let t = (b[i] - a.row(i).dot(&y.transpose())) / ap;
                if t < step {
                    step = t.max(0.0);
                    blocking = Some(i);
                }
            }
        }
        y += step * &p;
        if let Some(i) = blocking {
            active.push(i);
        }
    }
    panic!("active-set iteration did not terminate");
}

/// Rows `+I` and `-I` with bounds `e`: the box `|y_n| <= e_n`.
pub fn box_constraints(e: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = e.len();
    let a = DMatrix::from_fn(2 * n, n, |i, j| {
        if i % n != j {
            0.0
        } else if i < n {
            1.0
        } else {
            -1.0
        }
    });
    let b = DVector::from_fn(2 * n, |i, _| e[i % n]);
    (a, b)
}

/// Constraints `|Re X_k| <= d_re(k)`, `|Im X_k| <= d_im(k)` of a real 1D
/// signal of length `n`, one row pair per independent coefficient of the
/// half spectrum.
pub fn dft_box_constraints(n: usize, d_re: &[f64], d_im: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for k in 0..=n / 2 {
        let w = |t: usize| 2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
        let re: Vec<f64> = (0..n).map(|t| w(t).cos()).collect();
        rows.push((re.clone(), d_re[k]));
        rows.push((re.iter().map(|v| -v).collect(), d_re[k]));
        if 2 * k % n != 0 {
            let im: Vec<f64> = (0..n).map(|t| -w(t).sin()).collect();
            rows.push((im.clone(), d_im[k]));
            rows.push((im.iter().map(|v| -v).collect(), d_im[k]));
        }
    }
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
    let b = DVector::from_fn(rows.len(), |i, _| rows[i].1);
    (a, b)
}
