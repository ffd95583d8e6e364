//! Derivative-free local minimization (Nelder-Mead simplex).
//!
//! Objective values of `+inf` mark infeasible points; the simplex treats them
//! as worse than anything finite and contracts away from them.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMead {
    /// Stop once every vertex lies within this distance (max-norm) of the best.
    pub xtol: f64,
    /// Stop once the value spread falls below this and the simplex is small.
    pub ftol: f64,
    pub max_evaluations: usize,
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            xtol: 1e-9,
            ftol: 1e-15,
            max_evaluations: 2000,
            initial_step: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

impl NelderMead {
    pub fn with_step(mut self, step: f64) -> Self {
        self.initial_step = step;
        self
    }

    /// Minimizes `f` from `x0`, restarting from the incumbent while the budget
    /// allows and restarts keep improving.
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let mut evaluations = 0;
        let mut best = Minimum {
            x: x0.to_vec(),
            value: f(x0),
            evaluations: 0,
        };
        evaluations += 1;
        let mut step = self.initial_step;
        loop {
            let budget = self.max_evaluations.saturating_sub(evaluations);
            if budget <= x0.len() + 1 {
                break;
            }
            let run = self.run(&mut f, &best.x, step, budget);
            evaluations += run.evaluations;
            let improved = run.value < best.value - self.ftol;
            if run.value < best.value {
                best.x = run.x;
                best.value = run.value;
            }
            if !improved {
                break;
            }
            // A collapsed simplex can stall off the minimum; restart at a smaller scale.
            step = (step * 0.1).max(1e3 * self.xtol);
        }
        best.evaluations = evaluations;
        best
    }

    fn run(
        &self,
        f: &mut impl FnMut(&[f64]) -> f64,
        x0: &[f64],
        step: f64,
        budget: usize,
    ) -> Minimum {
        let n = x0.len();
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0, &mut evals)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step;
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }

        // One iteration costs at most n + 2 evaluations (reflect, contract, shrink).
        while evals + n + 2 <= budget {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best_x, best_v) = (&simplex[0].0, simplex[0].1);
            let worst_v = simplex[n].1;
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(best_x).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter <= self.xtol
                || (worst_v.is_finite() && worst_v - best_v <= self.ftol && diameter <= 1e-6)
            {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let xc = along(if fr < simplex[n].1 { 0.5 } else { -0.5 });
            let fc = eval(&xc, &mut evals);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = x_best
                    .iter()
                    .zip(&vertex.0)
                    .map(|(b, v)| b + 0.5 * (v - b))
                    .collect();
                let v = eval(&x, &mut evals);
                *vertex = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            evaluations: evals,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_evaluations: 5000,
            ..Default::default()
        };
        let m = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
        );
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{m:?}"
        );
        assert!(m.evaluations <= 5000);
    }

    #[test]
    fn respects_budget() {
        let nm = NelderMead {
            max_evaluations: 50,
            ..Default::default()
        };
        let m = nm.minimize(|x| x.iter().map(|v| v * v).sum(), &[1.0; 5]);
        assert!(m.evaluations <= 50);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // Minimum of x² + y² restricted to x >= 0.5.
        let nm = NelderMead::default().with_step(0.2);
        let m = nm.minimize(
            |x| {
                if x[0] < 0.5 {
                    f64::INFINITY
                } else {
                    x[0] * x[0] + x[1] * x[1]
                }
            },
            &[1.0, 1.0],
        );
        assert!(m.value < 0.25 + 1e-6, "{m:?}");
        assert!(m.x[0] >= 0.5);
    }

    #[test]
    fn quadratic_precision() {
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2) + (x[2] - 2.0).powi(2),
            &[0.0, 0.0, 0.0],
        );
        assert!(m.value < 1e-14, "{m:?}");
    }
}
