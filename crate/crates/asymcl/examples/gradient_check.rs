//! Builds a small differentiation graph, runs the reverse pass, and checks
//! the result against central finite differences.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use asymcl::autodiff::{Tape, Tensor};

fn main() -> anyhow::Result<()> {
    // f(x) = Σ softmax-normalized squared entries, through several ops.
    let raw = vec![0.8, -0.4, 1.3, 0.2, -1.1, 0.6];

    let forward = |values: &[f64]| -> anyhow::Result<f64> {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2, 3], values.to_vec())?, false);
        let squared = tape.mul(x, x)?;
        let z = tape.l2_normalize_rows(squared)?;
        let e = tape.exp(z);
        let total = tape.sum(e);
        Ok(tape.value(total).scalar_value()?)
    };

    // Reverse pass.
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::new(vec![2, 3], raw.clone())?, true);
    let squared = tape.mul(x, x)?;
    let z = tape.l2_normalize_rows(squared)?;
    let e = tape.exp(z);
    let total = tape.sum(e);
    println!("f(x) = {:.12}", tape.value(total).scalar_value()?);

    let grads = tape.backward(total)?;
    let analytic = grads.get(x).expect("x requires grad").data();

    // Central differences, step 1e-6.
    let step = 1e-6;
    let mut probe = raw.clone();
    println!(
        "\n{:>3} {:>18} {:>18} {:>12}",
        "i", "backward", "central diff", "rel err"
    );
    for i in 0..raw.len() {
        probe[i] = raw[i] + step;
        let plus = forward(&probe)?;
        probe[i] = raw[i] - step;
        let minus = forward(&probe)?;
        probe[i] = raw[i];
        let numeric = (plus - minus) / (2.0 * step);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1.0);
        println!(
            "{i:>3} {:>18.12} {:>18.12} {rel:>12.3e}",
            analytic[i], numeric
        );
        assert!(rel < 1e-5);
    }
    println!("\nall entries agree within 1e-5 relative error");
    Ok(())
}
