//! Epsilon-greedy vs Thompson sampling (one stochastic dropout pass per
//! action) for a Q-network foraging in a 2D world.

use mcdrop::rl::{run_comparison, RlConfig, Strategy};

fn main() -> mcdrop::Result<()> {
    let cfg = RlConfig::default();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let r = run_comparison(&cfg, seed)?;
    for s in [Strategy::EpsilonGreedy, Strategy::Thompson] {
        let log = &r.log(s).avg_reward;
        // 20-batch means keep the printout short
        let coarse: Vec<String> = log.chunks(20).map(|c| format!("{:.3}", c.iter().sum::<f64>() / c.len() as f64)).collect();
        println!("{:>15}: {}", s.name(), coarse.join(" "));
        match r.batches_to_threshold(s) {
            Some(b) => println!("{:>15}  above {} after {b} batches", "", cfg.reward_threshold),
            None => println!("{:>15}  never above {}", "", cfg.reward_threshold),
        }
    }
    Ok(())
}
