//! Compares backpropagated gradients with central finite differences over
//! random architectures.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use drivenn::nn::{random_gradient_check, FD_STEP};

fn main() -> drivenn::Result<()> {
    let report = random_gradient_check(20, 1e-4, 0)?;
    println!("step {FD_STEP:e}, {} trials", report.trials);
    for g in &report.groups {
        println!(
            "{:<16} {:>5} elements  max rel {:.2e}  max abs {:.2e}",
            g.name, g.elements, g.max_relative_error, g.max_absolute_error
        );
    }
    println!(
        "{} (max relative error {:.2e})",
        if report.passed() { "pass" } else { "FAIL" },
        report.max_relative_error()
    );
    Ok(())
}
