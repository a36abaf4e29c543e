//! Independent propagator for the three-level master equation: the 9×9
//! Liouvillian is built entry by entry and exponentiated by scaling and
//! squaring, with no code shared with the RK4 engine.

#![allow(dead_code)]

use zeno_core::linalg::{Complex, Matrix3};

pub type Super = [[Complex; 9]; 9];

fn zero() -> Super {
    [[Complex::new(0.0, 0.0); 9]; 9]
}

fn mul(a: &Super, b: &Super) -> Super {
    let mut out = zero();
    for i in 0..9 {
        for k in 0..9 {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..9 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Row-major vectorization: ρ_ab ↦ index 3a + b.
pub fn liouvillian(omega_rf: f64, omega_opt: f64, gamma: f64) -> Super {
    let mut h = [[0.0f64; 3]; 3];
    h[0][1] = omega_rf / 2.0;
    h[1][0] = omega_rf / 2.0;
    h[0][2] = omega_opt / 2.0;
    h[2][0] = omega_opt / 2.0;
    let i = Complex::new(0.0, 1.0);
    let mut l = zero();
    for a in 0..3 {
        for b in 0..3 {
            let row = 3 * a + b;
            // −i(Hρ − ρH)_ab = −i Σ_c (H_ac ρ_cb − ρ_ac H_cb)
            for c in 0..3 {
                l[row][3 * c + b] += -i * h[a][c];
                l[row][3 * a + c] += i * h[c][b];
            }
            // Γ(σρσ† − ½{|3⟩⟨3|, ρ})
            if a == 0 && b == 0 {
                l[row][8] += Complex::new(gamma, 0.0);
            }
            let damp = 0.5 * gamma * ((a == 2) as u8 as f64 + (b == 2) as u8 as f64);
            l[row][row] -= Complex::new(damp, 0.0);
        }
    }
    l
}

pub fn expm(l: &Super, t: f64) -> Super {
    let norm: f64 = l.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = t / 2f64.powi(squarings as i32);
    let mut a = zero();
    for r in 0..9 {
        for c in 0..9 {
            a[r][c] = l[r][c] * scale;
        }
    }
    let mut result = zero();
    let mut term = zero();
    for k in 0..9 {
        result[k][k] = Complex::new(1.0, 0.0);
        term[k][k] = Complex::new(1.0, 0.0);
    }
    for n in 1..=24 {
        term = mul(&term, &a);
        for r in 0..9 {
            for c in 0..9 {
                term[r][c] /= n as f64;
                result[r][c] += term[r][c];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}

pub fn apply(p: &Super, rho: &Matrix3) -> Matrix3 {
    let mut out = Matrix3::zero();
    for r in 0..9 {
        let mut acc = Complex::new(0.0, 0.0);
        for c in 0..9 {
            acc += p[r][c] * rho[(c / 3, c % 3)];
        }
        out[(r / 3, r % 3)] = acc;
    }
    out
}

/// Final ρ of the pulsed protocol (end-aligned pulses, RF on or off during
/// the pulses) computed with exact segment propagators.
pub fn zeno_final_state(
    omega_rf: f64,
    omega_opt: f64,
    gamma: f64,
    n: usize,
    tau_p: f64,
    rf_during_pulse: bool,
) -> Matrix3 {
    let tau = std::f64::consts::PI / omega_rf / n as f64;
    let free = expm(&liouvillian(omega_rf, 0.0, gamma), tau - tau_p);
    let rf_pulse = if rf_during_pulse { omega_rf } else { 0.0 };
    let pulse = expm(&liouvillian(rf_pulse, omega_opt, gamma), tau_p);
    let mut rho = Matrix3::diag([1.0, 0.0, 0.0]);
    for _ in 0..n {
        rho = apply(&pulse, &apply(&free, &rho));
    }
    rho
}
