//! Runs every validation suite and prints one line per check.

use reward_lab::validation::Suite;

fn main() -> reward_lab::Result<()> {
    for suite in Suite::ALL {
        let start = std::time::Instant::now();
        for result in suite.run()? {
            println!("[{}] {result}", suite.name());
        }
        println!("  ({:.1?})", start.elapsed());
    }
    Ok(())
}
