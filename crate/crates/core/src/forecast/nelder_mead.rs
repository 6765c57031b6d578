//! Nelder–Mead simplex search restricted to the unit box.

/// Result of [`minimize_bounded`].
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 2000;
const STEP: f64 = 0.1;
const F_TOL: f64 = 1e-12;
const X_TOL: f64 = 1e-10;

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over `[0, 1]^d` from `start`. Trial points are clamped to
/// the box and non-finite objective values count as `+inf`. The best vertex
/// is never replaced by a worse one, so the result is no worse than `start`.
pub fn minimize_bounded<F>(mut f: F, start: &[f64]) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let d = start.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };

    let mut x0 = start.to_vec();
    clamp_unit(&mut x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let f0 = eval(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..d {
        let mut x = x0.clone();
        x[i] = if x[i] + STEP <= 1.0 { x[i] + STEP } else { x[i] - STEP };
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    while iterations < MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let spread = simplex
            .iter()
            .skip(1)
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= F_TOL * (best.abs() + F_TOL) || spread <= X_TOL {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let towards = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + coef * (w - c))
                .collect();
            clamp_unit(&mut p);
            p
        };

        let xr = towards(-1.0);
        let fr = eval(&xr);
        if fr < best {
            let xe = towards(-2.0);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = towards(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = towards(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < worst.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        // Shrink towards the best vertex.
        let anchor = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (v, a) in x.iter_mut().zip(&anchor) {
                *v = a + 0.5 * (*v - a);
            }
            *fx = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        value,
        iterations,
    }
}
