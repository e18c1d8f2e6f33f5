//! Embedded Dormand–Prince 5(4) pair with FSAL and standard step control.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-6,
            atol: 1e-9,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub h: f64,
    pub y: Vec<f64>,
    /// Derivative at the new point (first stage of the next step).
    pub f: Vec<f64>,
    pub h_next: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DormandPrince {
    pub tol: Tolerances,
    pub max_step: f64,
    pub min_step: f64,
}

impl DormandPrince {
    pub fn new(tol: Tolerances, max_step: f64) -> Self {
        DormandPrince {
            tol,
            max_step,
            min_step: 1e-14,
        }
    }

    /// One fixed-size step. Returns the new state, its derivative and the
    /// scaled error norm (≤ 1 means acceptable).
    pub fn try_step<F>(&self, rhs: &mut F, t: f64, y: &[f64], f0: &[f64], h: f64) -> (Vec<f64>, Vec<f64>, f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(f0.to_vec());
        let mut stage = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + h * acc;
            }
            let mut ks = vec![0.0; n];
            rhs(t + C[s] * h, &stage, &mut ks);
            k.push(ks);
        }
        // stage 7 is evaluated at the fifth-order solution (FSAL)
        let y_new = stage;
        let f_new = k[6].clone();
        if n == 0 {
            return (y_new, f_new, 0.0);
        }
        let mut sum = 0.0;
        for i in 0..n {
            let mut err = 0.0;
            for (j, kj) in k.iter().enumerate() {
                err += E[j] * kj[i];
            }
            err *= h;
            let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
            sum += (err / scale).powi(2);
        }
        (y_new, f_new, (sum / n as f64).sqrt())
    }

    /// Adaptive step of at most `h_max_here`, starting from a trial of `h`.
    pub fn step<F>(
        &self,
        rhs: &mut F,
        t: f64,
        y: &[f64],
        f0: &[f64],
        mut h: f64,
        h_max_here: f64,
    ) -> Option<StepOutcome>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        h = h.min(h_max_here).min(self.max_step);
        loop {
            if h < self.min_step {
                return None;
            }
            let (y_new, f_new, err) = self.try_step(rhs, t, y, f0, h);
            if err <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                return Some(StepOutcome {
                    h,
                    y: y_new,
                    f: f_new,
                    h_next: (h * factor).min(self.max_step),
                });
            }
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= factor;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let dp = DormandPrince::new(
            Tolerances {
                rtol: 1e-9,
                atol: 1e-12,
            },
            0.5,
        );
        let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let mut t = 0.0;
        let mut y = vec![1.0];
        let mut f = vec![-1.0];
        let mut h = 1e-3;
        while t < 2.0 {
            let out = dp.step(&mut rhs, t, &y, &f, h, 2.0 - t).unwrap();
            t += out.h;
            y = out.y;
            f = out.f;
            h = out.h_next;
        }
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn fifth_order_on_polynomial() {
        // y' = t^4 is integrated exactly by a fifth-order method
        let dp = DormandPrince::new(Tolerances::default(), 1.0);
        let mut rhs = |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = t.powi(4);
        let (y, _, _) = dp.try_step(&mut rhs, 0.0, &[0.0], &[0.0], 1.0);
        assert!((y[0] - 0.2).abs() < 1e-14);
    }
}
