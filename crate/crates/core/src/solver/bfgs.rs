//! Full-memory BFGS with a strong Wolfe line search.
//!
//! The line search brackets with cubic extrapolation and refines by cubic
//! interpolation (the classic Moré–Thuente-style zoom). Every accepted step
//! carries a strong Wolfe certificate; if the search cannot certify a step
//! the solver stops and returns the best point seen, flagged, so outer loops
//! can carry on.

use crate::TrainError;
use ndarray::{Array1, Array2};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrainerOptions {
    pub max_iterations: usize,
    pub grad_tol: f64,
    /// Stop once an accepted step changes the loss by less than this
    /// (absolute). Zero disables the check.
    pub loss_change_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub ls_max_steps: usize,
}

impl Default for TrainerOptions {
    fn default() -> Self {
        TrainerOptions {
            max_iterations: 500,
            grad_tol: 1e-8,
            loss_change_tol: 1e-9,
            c1: 1e-4,
            c2: 0.9,
            ls_max_steps: 25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    GradientTol,
    LossChangeTol,
    MaxIterations,
    LineSearchFailure,
}

/// One line per BFGS iteration, emitted into the run's solver trace.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub loss: f64,
    pub gradient_norm: f64,
    pub step_length: f64,
    pub wolfe_ok: bool,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub trace: Vec<TraceRecord>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizer of the cubic through `(x1, f1, g1)` and `(x2, f2, g2)`,
/// clamped to `bounds`.
fn cubic_interpolate(
    x1: f64,
    f1: f64,
    g1: f64,
    x2: f64,
    f2: f64,
    g2: f64,
    bounds: Option<(f64, f64)>,
) -> f64 {
    let (lo, hi) = match bounds {
        Some(b) => b,
        None => {
            if x1 < x2 {
                (x1, x2)
            } else {
                (x2, x1)
            }
        }
    };
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2sq = d1 * d1 - g1 * g2;
    if d2sq >= 0.0 {
        let d2 = d2sq.sqrt();
        let min_pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if min_pos.is_finite() {
            min_pos.clamp(lo, hi)
        } else {
            0.5 * (lo + hi)
        }
    } else {
        0.5 * (lo + hi)
    }
}

struct Probe {
    t: f64,
    f: f64,
    g: Vec<f64>,
    gtd: f64,
}

/// Strong Wolfe line search along `d` from `x`; mirrors the cubic
/// bracket/zoom scheme used by the reference deep-learning BFGS trainers.
/// Returns the accepted probe and whether both Wolfe conditions were
/// certified.
#[allow(clippy::too_many_arguments)]
fn strong_wolfe<F>(
    eval: &mut F,
    x: &[f64],
    d: &[f64],
    f0: f64,
    g0: &[f64],
    t_init: f64,
    opts: &TrainerOptions,
) -> Option<(Probe, bool)>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let gtd0 = dot(g0, d);
    if gtd0 >= 0.0 {
        return None;
    }
    let d_norm_inf = d.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tolerance_change = 1e-10;
    let mut evals = 0usize;
    let mut probe = |t: f64| -> Option<Probe> {
        let xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + t * di).collect();
        let (f, g) = eval(&xt)?;
        let gtd = dot(&g, d);
        Some(Probe { t, f, g, gtd })
    };

    let mut t = t_init;
    let mut prev = Probe { t: 0.0, f: f0, g: g0.to_vec(), gtd: gtd0 };
    let mut bracket: Option<(Probe, Probe)> = None;
    let mut done: Option<Probe> = None;
    let mut ls_iter = 0;
    while ls_iter < opts.ls_max_steps {
        let cur = match probe(t) {
            Some(p) if p.f.is_finite() => p,
            // Non-finite trial: shrink hard toward the last good point.
            _ => {
                evals += 1;
                t = 0.5 * (prev.t + t.min(prev.t + 1.0));
                ls_iter += 1;
                if t - prev.t < 1e-14 {
                    return None;
                }
                continue;
            }
        };
        evals += 1;
        let _ = evals;
        if cur.f > f0 + opts.c1 * cur.t * gtd0 || (ls_iter > 1 && cur.f >= prev.f) {
            bracket = Some((prev, cur));
            break;
        }
        if cur.gtd.abs() <= -opts.c2 * gtd0 {
            done = Some(cur);
            break;
        }
        if cur.gtd >= 0.0 {
            bracket = Some((prev, cur));
            break;
        }
        let min_step = cur.t + 0.01 * (cur.t - prev.t);
        let max_step = cur.t * 10.0;
        let next_t = cubic_interpolate(
            prev.t,
            prev.f,
            prev.gtd,
            cur.t,
            cur.f,
            cur.gtd,
            Some((min_step, max_step)),
        );
        prev = cur;
        t = next_t;
        ls_iter += 1;
    }
    if let Some(p) = done {
        return Some((p, true));
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            // Ran out of bracketing steps.
            let cur = probe(t).filter(|p| p.f.is_finite())?;
            (Probe { t: 0.0, f: f0, g: g0.to_vec(), gtd: gtd0 }, cur)
        }
    };
    // Keep lo as the lower-f end.
    if hi.f < lo.f {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut insufficient = false;
    while ls_iter < opts.ls_max_steps {
        ls_iter += 1;
        if (hi.t - lo.t).abs() * d_norm_inf < tolerance_change {
            break;
        }
        let mut tz = cubic_interpolate(lo.t, lo.f, lo.gtd, hi.t, hi.f, hi.gtd, None);
        let (bmin, bmax) = (lo.t.min(hi.t), lo.t.max(hi.t));
        let eps = 0.1 * (bmax - bmin);
        if (bmax - tz).min(tz - bmin) < eps {
            if insufficient || tz >= bmax || tz <= bmin {
                tz = if (tz - bmax).abs() < (tz - bmin).abs() {
                    bmax - eps
                } else {
                    bmin + eps
                };
                insufficient = false;
            } else {
                insufficient = true;
            }
        } else {
            insufficient = false;
        }
        let cand = match probe(tz) {
            Some(p) if p.f.is_finite() => p,
            _ => {
                // Treat as a high point: shrink the bracket toward lo.
                hi = Probe {
                    t: tz,
                    f: f64::INFINITY,
                    g: hi.g.clone(),
                    gtd: hi.gtd,
                };
                continue;
            }
        };
        if cand.f > f0 + opts.c1 * cand.t * gtd0 || cand.f >= lo.f {
            hi = cand;
        } else {
            if cand.gtd.abs() <= -opts.c2 * gtd0 {
                return Some((cand, true));
            }
            if cand.gtd * (hi.t - lo.t) >= 0.0 {
                hi = Probe { t: lo.t, f: lo.f, g: lo.g.clone(), gtd: lo.gtd };
            }
            lo = cand;
        }
    }
    // No certified point.
    None
}

/// Minimize `f` from `x0`. `eval` must return the value and gradient; a
/// `TrainError` at the starting point aborts, while errors at trial points
/// are treated as rejected steps.
pub fn bfgs_minimize<F>(
    mut eval: F,
    x0: Vec<f64>,
    opts: &TrainerOptions,
) -> Result<BfgsResult, TrainError>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), TrainError>,
{
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = eval(&x)?;
    let mut trace = Vec::new();
    let mut gnorm = norm(&g);
    if gnorm <= opts.grad_tol {
        return Ok(BfgsResult {
            x,
            f,
            grad_norm: gnorm,
            iterations: 0,
            status: SolveStatus::GradientTol,
            trace,
        });
    }
    let mut h: Array2<f64> = Array2::eye(n);
    let mut first_update = true;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    for k in 0..opts.max_iterations {
        iterations = k + 1;
        let ga = Array1::from_vec(g.clone());
        let mut d: Vec<f64> = h.dot(&ga).iter().map(|v| -v).collect();
        if dot(&g, &d) >= 0.0 {
            // Curvature lost to rounding: restart from steepest descent.
            h = Array2::eye(n);
            first_update = true;
            d = g.iter().map(|v| -v).collect();
        }
        let t_init = if k == 0 {
            (1.0f64).min(1.0 / g.iter().map(|v| v.abs()).sum::<f64>().max(1e-16))
        } else {
            1.0
        };
        let mut probe_eval =
            |xt: &[f64]| -> Option<(f64, Vec<f64>)> { eval(xt).ok() };
        let Some((acc, certified)) =
            strong_wolfe(&mut probe_eval, &x, &d, f, &g, t_init, opts)
        else {
            status = SolveStatus::LineSearchFailure;
            trace.push(TraceRecord {
                iteration: k,
                loss: f,
                gradient_norm: gnorm,
                step_length: 0.0,
                wolfe_ok: false,
            });
            break;
        };
        debug_assert!(certified);
        let s: Vec<f64> = d.iter().map(|di| di * acc.t).collect();
        let y: Vec<f64> = acc.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let f_prev = f;
        f = acc.f;
        g = acc.g;
        gnorm = norm(&g);
        trace.push(TraceRecord {
            iteration: k,
            loss: f,
            gradient_norm: gnorm,
            step_length: acc.t,
            wolfe_ok: certified,
        });
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if first_update {
                let yy = dot(&y, &y);
                if yy > 0.0 {
                    let scale = sy / yy;
                    h.mapv_inplace(|v| v * scale);
                }
                first_update = false;
            }
            let rho = 1.0 / sy;
            let ya = Array1::from_vec(y.clone());
            let hy = h.dot(&ya);
            let yhy = ya.dot(&hy);
            let sa = Array1::from_vec(s.clone());
            let coeff = rho * rho * yhy + rho;
            // H ← H − ρ (s (Hy)ᵀ + (Hy) sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
            for i in 0..n {
                let hyi = hy[i];
                let si = sa[i];
                for j in 0..n {
                    h[[i, j]] += -rho * (si * hy[j] + hyi * sa[j]) + coeff * si * sa[j];
                }
            }
        }
        if gnorm <= opts.grad_tol {
            status = SolveStatus::GradientTol;
            break;
        }
        if opts.loss_change_tol > 0.0 && (f_prev - f).abs() <= opts.loss_change_tol {
            status = SolveStatus::LossChangeTol;
            break;
        }
    }
    Ok(BfgsResult { x, f, grad_norm: gnorm, iterations, status, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges_fast() {
        let a: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let dim = a.len();
        let a2 = a.clone();
        let eval = move |x: &[f64]| -> Result<(f64, Vec<f64>), TrainError> {
            let f = x
                .iter()
                .zip(&a2)
                .map(|(xi, ai)| 0.5 * (xi - ai) * (xi - ai))
                .sum();
            let g = x.iter().zip(&a2).map(|(xi, ai)| xi - ai).collect();
            Ok((f, g))
        };
        let res = bfgs_minimize(eval, vec![0.0; dim], &TrainerOptions {
            grad_tol: 1e-10,
            loss_change_tol: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert!(res.iterations <= dim + 2, "took {} iterations", res.iterations);
        assert!(res.grad_norm <= 1e-10);
        for (xi, ai) in res.x.iter().zip(&a) {
            assert!((xi - ai).abs() < 1e-9);
        }
    }

    #[test]
    fn rosenbrock_to_machine_precision() {
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>), TrainError> {
            let (a, b) = (1.0, 100.0);
            let f = (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2);
            let g = vec![
                -2.0 * (a - x[0]) - 4.0 * b * (x[1] - x[0] * x[0]) * x[0],
                2.0 * b * (x[1] - x[0] * x[0]),
            ];
            Ok((f, g))
        };
        let res = bfgs_minimize(eval, vec![-1.2, 1.0], &TrainerOptions {
            max_iterations: 200,
            grad_tol: 1e-12,
            loss_change_tol: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert!(res.f <= 1e-12, "rosenbrock f = {}", res.f);
    }

    #[test]
    fn already_optimal_returns_immediately() {
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>), TrainError> {
            let f = x.iter().map(|v| v * v).sum::<f64>();
            Ok((f, x.iter().map(|v| 2.0 * v).collect()))
        };
        let res = bfgs_minimize(eval, vec![0.0; 5], &TrainerOptions::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.status, SolveStatus::GradientTol);
    }

    #[test]
    fn trace_is_monotone_and_wolfe_certified() {
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>), TrainError> {
            // Non-convex but smooth.
            let f = (x[0].sin() + 1.2) * (x[1].cos() + 1.5) + 0.1 * (x[0] * x[0] + x[1] * x[1]);
            let g = vec![
                x[0].cos() * (x[1].cos() + 1.5) + 0.2 * x[0],
                -(x[0].sin() + 1.2) * x[1].sin() + 0.2 * x[1],
            ];
            Ok((f, g))
        };
        let res = bfgs_minimize(eval, vec![2.0, -1.0], &TrainerOptions {
            max_iterations: 60,
            grad_tol: 1e-9,
            ..Default::default()
        })
        .unwrap();
        let mut prev = f64::INFINITY;
        for rec in &res.trace {
            if rec.wolfe_ok {
                assert!(rec.loss < prev, "monotone decrease violated");
                prev = rec.loss;
            }
        }
        // Re-certify Wolfe conditions on the first accepted step.
        let (f0, g0) = eval(&[2.0, -1.0]).unwrap();
        let rec = res.trace[0];
        assert!(rec.wolfe_ok);
        // Reconstruct the first direction: H = I, so d = −g0.
        let d: Vec<f64> = g0.iter().map(|v| -v).collect();
        let gtd0 = dot(&g0, &d);
        let xt: Vec<f64> = [2.0, -1.0]
            .iter()
            .zip(&d)
            .map(|(x, di)| x + rec.step_length * di)
            .collect();
        let (ft, gt) = eval(&xt).unwrap();
        let opts = TrainerOptions::default();
        assert!(ft <= f0 + opts.c1 * rec.step_length * gtd0 + 1e-14);
        assert!(dot(&gt, &d).abs() <= -opts.c2 * gtd0 + 1e-14);
    }
}
