//! Classical fourth-order Runge-Kutta stepping for small autonomous systems.

/// Advances `state` by one RK4 step of length `h` for `dy/ds = f(y)`.
///
/// `f(y, out)` must fully overwrite `out`.
pub fn rk4_step<F>(f: &mut F, state: &mut [f64], h: f64)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = state.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    f(state, &mut k1);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = state[i] + h * k3[i];
    }
    f(&tmp, &mut k4);
    for i in 0..n {
        state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates `dy/ds = f(y)` over `[0, length]` with `steps` equal RK4 steps.
pub fn rk4_integrate<F>(mut f: F, state: &mut [f64], length: f64, steps: usize)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let h = length / steps as f64;
    for _ in 0..steps {
        rk4_step(&mut f, state, h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |steps: usize| {
            let mut y = [1.0];
            rk4_integrate(|y, out| out[0] = -y[0], &mut y, 1.0, steps);
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn cubic_polynomial_flow_is_exact() {
        // x' = 1, y' = x, z' = y: polynomial of degree 2 in s.
        let mut y = [0.0, 0.0, 0.0];
        rk4_integrate(
            |y, out| {
                out[0] = 1.0;
                out[1] = y[0];
                out[2] = y[1];
            },
            &mut y,
            2.0,
            3,
        );
        assert!((y[2] - 8.0 / 6.0).abs() < 1e-14);
    }
}
