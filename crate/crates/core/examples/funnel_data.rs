//! Regenerates `data/funnel_data.txt` from its recorded seed.
use persistent_sampling::targets::{generate_funnel_data, FUNNEL_DATA_SEED};

fn main() {
    println!("# funnel dataset: theta = 0, tau = 2, sigma = 0.1, seed {FUNNEL_DATA_SEED}");
    for d in generate_funnel_data(FUNNEL_DATA_SEED) {
        println!("{d:?}");
    }
}
