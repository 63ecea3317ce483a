// SPDX-License-Identifier: Apache-2.0

//! Attack probability against path length for both schemes, as CSV.

use secure_lipsin::attack::{birthday_attempts, figure1_sweep, write_sweep_csv, SchemeGeometry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p_sc = 1e-6;
    println!(
        "# {} guesses give a 64-bit tag collision probability of {p_sc:e}",
        birthday_attempts(2f64.powi(64), p_sc)?
    );
    let rows = figure1_sweep(&SchemeGeometry::EFID, &SchemeGeometry::LIPSIN, p_sc, 1..=8)?;
    write_sweep_csv(&rows, std::io::stdout())?;
    Ok(())
}
