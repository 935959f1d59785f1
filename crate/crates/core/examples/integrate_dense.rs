//! Adaptive integration with dense output: a damped oscillator sampled
//! between steps, compared with its closed form.

use conjlab::ode::{self, IntegratorConfig};

fn main() -> conjlab::Result<()> {
    // x'' + 0.2x' + x = 0
    let rhs = |_t: f64, u: &[f64], out: &mut [f64]| {
        out[0] = u[1];
        out[1] = -u[0] - 0.2 * u[1];
    };
    let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-13);
    let sample = ode::integrate(rhs, 0.0, &[1.0, 0.0], 20.0, &cfg)?;
    println!("{} accepted steps on [0, 20]", sample.steps());

    let w = (1.0f64 - 0.01).sqrt();
    let exact = |t: f64| (-0.1 * t).exp() * ((w * t).cos() + 0.1 / w * (w * t).sin());
    println!("{:>6} {:>20} {:>12}", "t", "x(t)", "error");
    for k in 0..=10 {
        let t = 2.0 * k as f64 + 0.37;
        if t > 20.0 {
            break;
        }
        let x = sample.eval(t)[0];
        println!("{t:>6.2} {x:>20.14} {:>12.2e}", (x - exact(t)).abs());
    }

    let area = ode::quad_along(&sample, |_, u| vec![u[0] * u[0]], 0.0, 20.0, 1e-10)?;
    println!("∫₀²⁰ x² dt = {:.10}", area[0]);
    Ok(())
}
