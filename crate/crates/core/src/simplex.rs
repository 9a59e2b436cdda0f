//! Box-constrained Nelder–Mead for low-dimensional polishing.
//!
//! Trial points are projected onto the box, so the method never evaluates the
//! objective outside it. The best vertex is monotonically non-increasing and
//! starts at `x0`, so the result is never worse than the starting point.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub x_tol: f64,
    /// Stop once the objective spread across vertices is below this.
    pub f_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iter: 4000,
            x_tol: 1e-10,
            f_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimize `f` over the box `[lo, hi]` starting from `x0` with initial edge
/// lengths `step` (a step that would leave the box is mirrored inward).
///
/// The simplex is rebuilt around the incumbent until a restart stops
/// improving, which recovers from simplices that collapse against a face.
pub fn minimize_box(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: SimplexOptions,
) -> SimplexResult {
    const RESTARTS: usize = 8;
    let mut best = run(&f, x0, step, lo, hi, opts);
    for _ in 0..RESTARTS {
        let next = run(&f, &best.x, step, lo, hi, opts);
        let iterations = best.iterations + next.iterations;
        let improved = next.fx < best.fx;
        let gain = best.fx - next.fx;
        if improved {
            best = SimplexResult { iterations, ..next };
        } else {
            best.iterations = iterations;
        }
        if !improved || gain <= 1e-15 * best.fx.abs() {
            break;
        }
    }
    best
}

fn run(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: SimplexOptions,
) -> SimplexResult {
    let dim = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut start = x0.to_vec();
    project(&mut start, lo, hi);
    let mut pts: Vec<Vec<f64>> = vec![start.clone()];
    for i in 0..dim {
        let mut p = start.clone();
        let up = p[i] + step[i];
        p[i] = if up <= hi[i] { up } else { p[i] - step[i] };
        project(&mut p, lo, hi);
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(f, p)).collect();

    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        // stable sort keeps the incumbent first among ties
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.x_tol || (vals[dim] - vals[0]).abs() <= opts.f_tol {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for p in &pts[..dim] {
            for k in 0..dim {
                centroid[k] += p[k] / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut q: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + t * (pts[dim][k] - centroid[k]))
                .collect();
            project(&mut q, lo, hi);
            q
        };

        let xr = along(-alpha);
        let fr = eval(f, &xr);
        if fr < vals[0] {
            let xe = along(-gamma);
            let fe = eval(f, &xe);
            if fe < fr {
                pts[dim] = xe;
                vals[dim] = fe;
            } else {
                pts[dim] = xr;
                vals[dim] = fr;
            }
            continue;
        }
        if fr < vals[dim - 1] {
            pts[dim] = xr;
            vals[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[dim] {
            let xc = along(-rho);
            let fc = eval(f, &xc);
            (xc, fc)
        } else {
            let xc = along(rho);
            let fc = eval(f, &xc);
            (xc, fc)
        };
        if fc < vals[dim].min(fr) {
            pts[dim] = xc;
            vals[dim] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best = pts[0].clone();
        for i in 1..=dim {
            for k in 0..dim {
                pts[i][k] = best[k] + sigma * (pts[i][k] - best[k]);
            }
            vals[i] = eval(f, &pts[i]);
        }
    }

    let (ib, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex has vertices");
    SimplexResult {
        x: pts[ib].clone(),
        fx: vals[ib],
        iterations,
    }
}
