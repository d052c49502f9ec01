//! The portable convolutional denoiser: weight file round trip, schedule
//! binding, golden vectors and checksum protection.

use gramdiff::diffusion::neural::{emit_goldens, golden_max_abs_error, read_goldens, write_goldens};
use gramdiff::diffusion::{NeuralDenoiser, ScheduleParams};

fn main() -> gramdiff::Result<()> {
    let dir = std::env::temp_dir().join("gramdiff-goldens-example");
    std::fs::create_dir_all(&dir).map_err(|e| gramdiff::Error::Io { path: dir.clone(), source: e })?;
    let schedule = ScheduleParams::default();

    let net = NeuralDenoiser::random(16, 4, 32, 5).with_schedule_hash(schedule.hash());
    let weights = dir.join("weights.gdnw");
    net.save(&weights)?;
    let loaded = NeuralDenoiser::load_for_schedule(&weights, &schedule.hash())?;

    let goldens = emit_goldens(&loaded, schedule.t_max, 0)?;
    let golden_path = dir.join("goldens.gdgv");
    write_goldens(&golden_path, &goldens)?;
    let err = golden_max_abs_error(&loaded, &read_goldens(&golden_path)?, schedule.t_max)?;
    println!("{} goldens at t = {:?}, max abs error {err:.2e}", goldens.len(), goldens.iter().map(|g| g.t).collect::<Vec<_>>());

    let other = ScheduleParams { t_max: 200, ..schedule };
    match NeuralDenoiser::load_for_schedule(&weights, &other.hash()) {
        Err(e) => println!("schedule mismatch rejected: {e}"),
        Ok(_) => println!("unexpected: mismatched schedule accepted"),
    }

    let mut bytes = std::fs::read(&weights).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    match NeuralDenoiser::from_bytes(&bytes) {
        Err(e) => println!("corrupted blob rejected: {e}"),
        Ok(_) => println!("unexpected: corrupted blob accepted"),
    }
    Ok(())
}
