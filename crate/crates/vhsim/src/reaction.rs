//! Implicit-Euler reaction stage: independent 5-variable Newton solves per
//! cell, with a bisection fallback on the one-dimensional reduction of the
//! same algebraic system for cells where damped Newton leaves the
//! nonnegative branch.
//!
//! The backward-Euler system per cell, unknowns `y = (S_h, E_h, I_h, S_v, I_v)`:
//!
//! ```text
//! S_h - S_h0 + dt*bv*S_h*I_v                 = 0
//! E_h - E_h0 - dt*(bv*S_h*I_v - eps*E_h)     = 0
//! I_h - I_h0 - dt*eps*E_h                    = 0
//! S_v - S_v0 + dt*bh*S_v*I_h                 = 0
//! I_v - I_v0 - dt*bh*S_v*I_h                 = 0
//! ```
//!
//! Summing rows 1-3 (resp. 4-5) shows the per-cell host total (resp. vector
//! total) is preserved exactly at any root, so conservation holds to the
//! residual tolerance.

use crate::error::{Error, Result};
use crate::par;
use crate::params::ModelParams;
use crate::state::StateFields;

/// Residual infinity-norm at which a per-cell solve is accepted.
pub const NEWTON_TOL: f64 = 1e-10;
/// Newton iteration cap per cell.
pub const NEWTON_MAX_ITERS: usize = 50;
/// Most negative component tolerated in an accepted Newton root, relative
/// to the cell scale; anything lower triggers the bracketed fallback.
const NONNEG_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct CellRates {
    bv: f64,
    bh: f64,
    eps: f64,
    dt: f64,
}

#[inline]
fn residual(y: &[f64; 5], y0: &[f64; 5], r: CellRates) -> [f64; 5] {
    let [sh, eh, ih, sv, iv] = *y;
    let exposure = r.dt * r.bv * sh * iv;
    let infection = r.dt * r.bh * sv * ih;
    [
        sh - y0[0] + exposure,
        eh - y0[1] - exposure + r.dt * r.eps * eh,
        ih - y0[2] - r.dt * r.eps * eh,
        sv - y0[3] + infection,
        iv - y0[4] - infection,
    ]
}

#[inline]
fn inf_norm(v: &[f64; 5]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solve the 5x5 Newton correction `J s = f` by Gaussian elimination with
/// partial pivoting. Returns `None` for a numerically singular Jacobian.
fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let mut piv = col;
        for row in (col + 1)..5 {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..5 {
            let m = a[row][col] / a[col][col];
            if m != 0.0 {
                for k in col..5 {
                    a[row][k] -= m * a[col][k];
                }
                b[row] -= m * b[col];
            }
        }
    }
    let mut x = [0.0; 5];
    for col in (0..5).rev() {
        let mut s = b[col];
        for k in (col + 1)..5 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn jacobian(y: &[f64; 5], r: CellRates) -> [[f64; 5]; 5] {
    let [sh, _, ih, sv, iv] = *y;
    let (a, b, e) = (r.dt * r.bv, r.dt * r.bh, r.dt * r.eps);
    [
        [1.0 + a * iv, 0.0, 0.0, 0.0, a * sh],
        [-a * iv, 1.0 + e, 0.0, 0.0, -a * sh],
        [0.0, -e, 1.0, 0.0, 0.0],
        [0.0, 0.0, b * sv, 1.0 + b * ih, 0.0],
        [0.0, 0.0, -b * sv, -b * ih, 1.0],
    ]
}

/// Damped Newton from the current state: the step is halved while the
/// residual norm would increase. Returns the iterate and whether it
/// converged below [`NEWTON_TOL`].
fn newton(y0: &[f64; 5], r: CellRates) -> ([f64; 5], bool) {
    let mut y = *y0;
    let mut f = residual(&y, y0, r);
    let mut fnorm = inf_norm(&f);
    for _ in 0..NEWTON_MAX_ITERS {
        if fnorm < NEWTON_TOL {
            return (y, true);
        }
        let step = match solve5(jacobian(&y, r), f) {
            Some(s) => s,
            None => return (y, false),
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = [
                y[0] - lambda * step[0],
                y[1] - lambda * step[1],
                y[2] - lambda * step[2],
                y[3] - lambda * step[3],
                y[4] - lambda * step[4],
            ];
            let fc = residual(&cand, y0, r);
            let fc_norm = inf_norm(&fc);
            if fc_norm < fnorm {
                y = cand;
                f = fc;
                fnorm = fc_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return (y, false);
        }
    }
    (y, fnorm < NEWTON_TOL)
}

/// Given `I_v`, the remaining unknowns follow in closed form; composing
/// them yields a bounded increasing map whose fixed point is the
/// nonnegative root.
#[inline]
fn cascade(iv: f64, y0: &[f64; 5], r: CellRates) -> [f64; 5] {
    let sh = y0[0] / (1.0 + r.dt * r.bv * iv);
    let eh = (y0[1] + r.dt * r.bv * sh * iv) / (1.0 + r.dt * r.eps);
    let ih = y0[2] + r.dt * r.eps * eh;
    let sv = y0[3] / (1.0 + r.dt * r.bh * ih);
    let iv_out = y0[4] + r.dt * r.bh * sv * ih;
    [sh, eh, ih, sv, iv_out]
}

/// Bracketed solve: bisection on the fixed point of [`cascade`] followed by
/// a short undamped Newton polish. The fixed point lies in
/// `[I_v0, I_v0 + S_v0]` because the vector total is conserved.
fn bracketed_solve(y0: &[f64; 5], r: CellRates) -> ([f64; 5], f64) {
    let mut lo = y0[4];
    let mut hi = y0[4] + y0[3] + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cascade(mid, y0, r)[4] > mid {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let iv = 0.5 * (lo + hi);
    let mut y = cascade(iv, y0, r);
    y[4] = iv;
    for _ in 0..8 {
        let f = residual(&y, y0, r);
        if inf_norm(&f) < NEWTON_TOL {
            return (y, inf_norm(&f));
        }
        match solve5(jacobian(&y, r), f) {
            Some(s) => {
                for k in 0..5 {
                    y[k] -= s[k];
                }
            }
            None => break,
        }
    }
    let f = residual(&y, y0, r);
    (y, inf_norm(&f))
}

/// Advance one cell by an implicit-Euler reaction step.
pub fn solve_cell(y0: [f64; 5], dt: f64, bv: f64, bh: f64, eps: f64) -> Result<[f64; 5], f64> {
    let r = CellRates { bv, bh, eps, dt };
    let scale = inf_norm(&y0).max(1.0);
    let (y, converged) = newton(&y0, r);
    if converged && y.iter().all(|&v| v >= -NONNEG_SLACK * scale) {
        return Ok(y);
    }
    // Newton stalled or left the nonnegative branch: bracketed fallback.
    let (y, res) = bracketed_solve(&y0, r);
    if res < NEWTON_TOL && y.iter().all(|&v| v >= -NONNEG_SLACK * scale) {
        Ok(y)
    } else {
        Err(res)
    }
}

/// One implicit-Euler step of the reaction system on every cell.
///
/// Cells are independent and solved in parallel; per-cell host and vector
/// totals are preserved to the residual tolerance. Hosts are monotone:
/// `S_h` never increases and `I_h` never decreases.
pub fn reaction_step(state: &StateFields, params: &ModelParams, dt: f64) -> Result<StateFields> {
    assert!(dt > 0.0, "dt must be positive, got {dt}");
    let n = state.n_cells();
    let results = par::map_indexed(n, |i| {
        let y0 = [
            state.s_h[i],
            state.e_h[i],
            state.i_h[i],
            state.s_v[i],
            state.i_v[i],
        ];
        solve_cell(
            y0,
            dt,
            params.beta_v.get(i),
            params.beta_h.get(i),
            params.epsilon,
        )
    });
    let mut out = StateFields::zeros(n);
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(y) => {
                out.s_h[i] = y[0];
                out.e_h[i] = y[1];
                out.i_h[i] = y[2];
                out.s_v[i] = y[3];
                out.i_v[i] = y[4];
            }
            Err(residual) => return Err(Error::ReactionDiverged { cell: i, residual }),
        }
    }
    Ok(out)
}

/// Implicit-Euler step of the linearized vector pair
/// `dS_v/dt = -rate(x) S_v`, `dI_v/dt = +rate(x) S_v` with
/// `rate = beta_h * N`. Used by the periodic-orbit computation; the update
/// is closed-form and conserves `S_v + I_v` exactly.
pub fn linear_vector_reaction_step(
    s_v: &mut [f64],
    i_v: &mut [f64],
    rate: &[f64],
    dt: f64,
) {
    for i in 0..s_v.len() {
        let s_new = s_v[i] / (1.0 + dt * rate[i]);
        i_v[i] += dt * rate[i] * s_new;
        s_v[i] = s_new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;

    fn params(bv: f64, bh: f64, eps: f64) -> ModelParams {
        ModelParams::constant(bv, bh, eps.max(1e-9), 1.0).with_formulation(Default::default())
    }

    #[test]
    fn disease_free_state_is_fixed() {
        let state = StateFields::uniform(9, 300.0, 0.0, 0.0, 250.0, 0.0);
        let p = ModelParams::constant(0.5, 0.5, 1.0, 0.1);
        let out = reaction_step(&state, &p, 0.05).unwrap();
        assert_eq!(out, state);
    }

    #[test]
    fn zero_beta_v_keeps_sh_and_ih_constant() {
        let mut state = StateFields::uniform(4, 200.0, 0.0, 0.0, 100.0, 30.0);
        state.i_h[1] = 5.0;
        state.s_h[1] = 195.0;
        let p = ModelParams::constant(0.0, 0.3, 1.0, 0.2);
        let out = reaction_step(&state, &p, 0.1).unwrap();
        assert_eq!(out.s_h, state.s_h);
        assert_eq!(out.i_h, state.i_h);
    }

    #[test]
    fn host_and_vector_totals_preserved() {
        let mut state = StateFields::uniform(6, 280.0, 15.0, 5.0, 260.0, 40.0);
        state.i_v[3] = 120.0;
        let p = params(0.02, 0.05, 0.4);
        let out = reaction_step(&state, &p, 0.01).unwrap();
        for i in 0..6 {
            let h0 = state.s_h[i] + state.e_h[i] + state.i_h[i];
            let h1 = out.s_h[i] + out.e_h[i] + out.i_h[i];
            assert!((h1 - h0).abs() < 1e-9, "host total drift {}", h1 - h0);
            let v0 = state.s_v[i] + state.i_v[i];
            let v1 = out.s_v[i] + out.i_v[i];
            assert!((v1 - v0).abs() < 1e-9, "vector total drift {}", v1 - v0);
        }
    }

    #[test]
    fn monotone_hosts() {
        let state = StateFields::uniform(3, 250.0, 30.0, 20.0, 200.0, 100.0);
        let p = params(0.05, 0.08, 0.3);
        let out = reaction_step(&state, &p, 0.02).unwrap();
        for i in 0..3 {
            assert!(out.s_h[i] <= state.s_h[i] + 1e-12);
            assert!(out.i_h[i] >= state.i_h[i] - 1e-12);
        }
    }

    #[test]
    fn stiff_cells_converge_nonnegative() {
        // rates comparable to the stiffest sensitivity-campaign draws
        let mut worst: f64 = 0.0;
        for &(bv, bh, dt) in &[(25.0, 25.0, 0.05), (15.0, 15.0, 0.005), (25.0, 5.0, 0.1)] {
            let y0 = [300.0, 0.0, 0.0, 300.0, 1.0];
            let y = solve_cell(y0, dt, bv, bh, 0.02).unwrap();
            let r = CellRates {
                bv,
                bh,
                eps: 0.02,
                dt,
            };
            worst = worst.max(inf_norm(&residual(&y, &y0, r)));
            assert!(y.iter().all(|&v| v >= -1e-9), "negative root {y:?}");
        }
        assert!(worst < NEWTON_TOL);
    }

    #[test]
    fn randomized_states_always_solve() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for _ in 0..2000 {
            let bv = 10f64.powf(rng.gen_range(-3.0..1.5));
            let bh = 10f64.powf(rng.gen_range(-3.0..1.5));
            let eps = 10f64.powf(rng.gen_range(-2.0..0.5));
            let dt = 10f64.powf(rng.gen_range(-3.0..-1.0));
            let sh = rng.gen_range(0.0..300.0);
            let eh = rng.gen_range(0.0..(300.0 - sh));
            let ih = 300.0 - sh - eh;
            let sv = rng.gen_range(0.0..400.0);
            let iv = rng.gen_range(0.0..400.0);
            let y0 = [sh, eh, ih, sv, iv];
            let y = solve_cell(y0, dt, bv, bh, eps).expect("cell solve failed");
            assert!(y.iter().all(|&v| v >= -1e-7), "negative root {y:?}");
            let host = (y[0] + y[1] + y[2]) - 300.0;
            assert!(host.abs() < 1e-8, "host drift {host}");
        }
    }

    #[test]
    fn linear_vector_reaction_conserves_totals() {
        let mut s_v = vec![10.0, 250.0, 1e-30];
        let mut i_v = vec![0.0, 5.0, 0.0];
        let rate = vec![4500.0, 0.3, 100.0];
        let before: Vec<f64> = s_v.iter().zip(&i_v).map(|(a, b)| a + b).collect();
        linear_vector_reaction_step(&mut s_v, &mut i_v, &rate, 0.01);
        for i in 0..3 {
            assert!((s_v[i] + i_v[i] - before[i]).abs() <= 1e-12 * before[i].max(1.0));
            assert!(s_v[i] >= 0.0 && i_v[i] >= 0.0);
        }
    }
}
