use anyhow::anyhow;
use carbonsched::emissions::{compare, EmissionsError};

use crate::args::CeeArgs;
use crate::format::sig4;
use crate::CliError;

pub fn run(a: CeeArgs) -> Result<(), CliError> {
    let cmp = compare("baseline", "candidate", a.baseline_error, a.candidate_error, a.baseline_carbon, a.candidate_carbon)
        .map_err(CliError::data)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&cmp).expect("comparison serializes"));
    } else {
        println!("quality_improvement_pct: {}", sig4(cmp.quality_improvement_pct));
        println!("delta_carbon_g: {}", sig4(cmp.delta_carbon_g));
        if let Some(cee) = cmp.cee {
            println!("cee: {}", sig4(cee));
        }
    }
    match cmp.cee {
        Some(_) => Ok(()),
        None => Err(CliError::data(anyhow!(EmissionsError::CeeUndefined))),
    }
}
