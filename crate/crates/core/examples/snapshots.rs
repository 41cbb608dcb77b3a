//! Configuration parsing and the NSCB snapshot format.

use nscb::io::{RawSnapshot, RunConfig};
use nscb::solver::make_initial_data;
use nscb::Result;

fn main() -> Result<()> {
    let cfg = RunConfig::parse(
        "grid.n = 16\n\
         initial_data.kind = single_mode\n\
         initial_data.wavevector = [0, 0, 1]\n\
         initial_data.polarization = [1, 0, 0]\n",
    )?;
    let grid = cfg.grid()?;
    let u = make_initial_data(&cfg.initial_data()?, &grid)?;
    let mut bytes = Vec::new();
    RawSnapshot::from_field(&u, 0.0).write(&mut bytes)?;
    let back = RawSnapshot::from_bytes(&bytes)?;
    let v = back.to_field_on(&grid)?;
    println!("{} bytes, n = {}, round-trip error {:.2e}", bytes.len(), back.n, v.sub(&u)?.l2_norm());
    println!("{}", serde_json::to_string_pretty(&cfg)?);
    Ok(())
}
