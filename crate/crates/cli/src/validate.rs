use carbonsched::time::format_timestamp;
use carbonsched::traces::Interval;

use crate::args::ValidateArgs;
use crate::simulate::{load_carbon, load_pool_arg, load_requests};
use crate::CliError;

fn span(iv: Interval) -> String {
    format!("{} .. {}", format_timestamp(&iv.start), format_timestamp(&iv.end))
}

pub fn run(a: ValidateArgs) -> Result<(), CliError> {
    if let Some(path) = &a.carbon {
        let t = load_carbon(path)?;
        println!("{}: ok, carbon trace", path.display());
        println!("rows: {}", t.len());
        println!("span: {}", span(t.span()));
        println!("intensity_g_per_kwh: min {} max {}", t.min_intensity(), t.max_intensity());
    } else if let Some(path) = &a.requests {
        let t = load_requests(path)?;
        let counts = t.samples().iter().map(|s| s.count);
        println!("{}: ok, request trace", path.display());
        println!("rows: {}", t.len());
        println!("span: {}", span(t.span()));
        println!("count: min {} max {} total {}", counts.clone().min().unwrap_or(0), counts.max().unwrap_or(0), t.total_count());
    } else {
        let (pool, source) = load_pool_arg(a.pool.as_deref(), a.pool_builtin.as_deref())?;
        println!("{source}: ok, model pool");
        println!("rows: {}", pool.len());
        print!("{}", pool.to_csv());
        let e = pool.energy_bounds();
        println!("energy_mj: min {} max {}", e.e_low, e.e_high);
    }
    Ok(())
}
