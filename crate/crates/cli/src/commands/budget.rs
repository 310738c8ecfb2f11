use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sqz_core::opo::{loss_budget_product, LossBudget};

use crate::error::{CliError, CliResult};
use crate::output::write_json;

pub const BUDGET_JSON: &str = "budget.json";

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Efficiency contribution `name=value`; repeatable.
    #[arg(long = "component", value_name = "NAME=EFF", required = true)]
    pub components: Vec<String>,
    /// Total efficiency from a spectrum fit, compared against the product.
    #[arg(long)]
    pub fitted_eta: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Component {
    name: String,
    efficiency: f64,
}

#[derive(Serialize)]
struct BudgetRecord {
    components: Vec<Component>,
    product: f64,
    fitted_eta: Option<f64>,
    residual: Option<f64>,
}

fn parse_component(s: &str) -> CliResult<(String, f64)> {
    let bad = || CliError::Usage(format!("component `{s}` must look like name=efficiency"));
    let (name, value) = s.split_once('=').ok_or_else(bad)?;
    let name = name.trim();
    if name.is_empty() {
        return Err(bad());
    }
    let value = value.trim().parse::<f64>().map_err(|_| bad())?;
    Ok((name.to_string(), value))
}

pub fn run(args: &BudgetArgs) -> CliResult<()> {
    let components = args
        .components
        .iter()
        .map(|s| parse_component(s))
        .collect::<CliResult<Vec<_>>>()?;
    let budget = LossBudget::new(components, args.fitted_eta)?;
    let summary = loss_budget_product(&budget);

    for (name, e) in budget.components() {
        println!("{name:<12} {e:.4}");
    }
    println!("product = {:.3}", summary.product);
    if let (Some(eta), Some(res)) = (summary.fitted_eta, summary.residual) {
        println!("fitted eta = {eta:.3}");
        println!("residual = {res:.3}");
    }
    let record = BudgetRecord {
        components: budget
            .components()
            .iter()
            .map(|(name, efficiency)| Component {
                name: name.clone(),
                efficiency: *efficiency,
            })
            .collect(),
        product: summary.product,
        fitted_eta: summary.fitted_eta,
        residual: summary.residual,
    };
    write_json(&args.out.join(BUDGET_JSON), &record)
}
