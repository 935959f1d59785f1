//! Independent reference computations shared by the integration tests:
//! classical fixed-step RK4 and hand-written right-hand sides for the
//! shipped scenarios. Nothing here calls into the library's integrators.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use conjlab::scenario::{Scenario, DEFAULT_SEED};

pub const RK4_H: f64 = 1e-4;

/// Classical RK4 from `t0` to `t1` (either direction) with step close to `h`.
pub fn rk4<F>(f: F, t0: f64, y0: &[f64], t1: f64, h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let n = ((t1 - t0).abs() / h).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / n as f64;
    let mut y = y0.to_vec();
    let axpy = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + c * b).collect()
    };
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        let k1 = f(t, &y);
        let k2 = f(t + dt / 2.0, &axpy(&y, &k1, dt / 2.0));
        let k3 = f(t + dt / 2.0, &axpy(&y, &k2, dt / 2.0));
        let k4 = f(t + dt, &axpy(&y, &k3, dt));
        for j in 0..y.len() {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

pub fn jiang_f(t: f64, y: f64) -> f64 {
    0.2 * (FRAC_PI_2 - (t + y.abs()).atan())
}

pub fn jiang_df(t: f64, y: f64) -> f64 {
    let u = t + y.abs();
    -0.2 * y.signum() / (1.0 + u * u)
}

/// `y' = −y + f(t,y)` for the Jiang example.
pub fn jiang_rhs(t: f64, y: &[f64]) -> Vec<f64> {
    vec![-y[0] + jiang_f(t, y[0])]
}

/// `(y, v)` with `v` the sensitivity `∂y/∂η`.
pub fn jiang_variational(t: f64, u: &[f64]) -> Vec<f64> {
    vec![-u[0] + jiang_f(t, u[0]), (-1.0 + jiang_df(t, u[0])) * u[1]]
}

pub const S3_A: [[f64; 2]; 2] = [[-1.0, 0.5], [-0.5, -1.0]];

pub fn s3_linear(_t: f64, x: &[f64]) -> Vec<f64> {
    vec![
        S3_A[0][0] * x[0] + S3_A[0][1] * x[1],
        S3_A[1][0] * x[0] + S3_A[1][1] * x[1],
    ]
}

pub fn s3_rhs(t: f64, y: &[f64]) -> Vec<f64> {
    let l = s3_linear(t, y);
    vec![l[0] + 0.2 * y[0].tanh(), l[1] + 0.2 * y[1].tanh()]
}

/// `Φ(t,s)` of the S3 system, column by column, row-major result.
pub fn s3_transition(t: f64, s: f64) -> [[f64; 2]; 2] {
    let c0 = rk4(s3_linear, s, &[1.0, 0.0], t, RK4_H);
    let c1 = rk4(s3_linear, s, &[0.0, 1.0], t, RK4_H);
    [[c0[0], c1[0]], [c0[1], c1[1]]]
}

/// `P(t)` of the S3 system with `Q = I`, from `−Ṗ = AᵀP + PA + I`
/// integrated backward from `P(t + horizon) = 0`. Row-major 2×2.
pub fn s3_lyapunov(t: f64, horizon: f64) -> [[f64; 2]; 2] {
    let a = S3_A;
    let rhs = |_t: f64, p: &[f64]| -> Vec<f64> {
        // p = [p00, p01, p10, p11]
        let pm = [[p[0], p[1]], [p[2], p[3]]];
        let mut out = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                let mut v = if i == j { 1.0 } else { 0.0 };
                for k in 0..2 {
                    v += a[k][i] * pm[k][j] + pm[i][k] * a[k][j];
                }
                out[2 * i + j] = -v;
            }
        }
        out
    };
    let p = rk4(rhs, t + horizon, &[0.0; 4], t, 1e-3);
    [[p[0], p[1]], [p[2], p[3]]]
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.scn"))
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("golden")
        .join(format!("{name}.json"))
}

pub fn shipped(name: &str) -> Scenario {
    Scenario::load(scenario_path(name), DEFAULT_SEED).expect("shipped scenario loads")
}

/// Reads a number or vector from a golden file.
pub fn golden(name: &str, key: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(golden_path(name)).expect("golden file present");
    let v: serde_json::Value = serde_json::from_str(&text).expect("golden JSON");
    let entry = &v["values"][key];
    match entry {
        serde_json::Value::Number(n) => vec![n.as_f64().unwrap()],
        serde_json::Value::Array(a) => a.iter().map(|x| x.as_f64().unwrap()).collect(),
        _ => panic!("golden value {name}/{key} missing"),
    }
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
