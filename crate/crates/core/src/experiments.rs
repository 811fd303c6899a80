//! Minimum-wage scenarios, their comparison and CSV export of every figure panel.
//!
//! A minimum wage is imposed by masking the shared wage grid, so all
//! scenarios have identical grids and their policies can be differenced
//! node by node.
//!
//! Every CSV has a header row, one observation per line, LF endings and
//! shortest round-trip float formatting. A set of files is written to
//! temporaries first and renamed only once all of them have been written.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use tempfile::NamedTempFile;

use crate::calibration::Parameters;
use crate::distribution::{steady_state, Stationary, SteadyState};
use crate::equilibrium::{solve_equilibrium, Equilibrium};
use crate::error::{Error, Result};
use crate::model::Model;

/// Wealth nodes shown in the by-wage slices: first, twelfth and last.
pub fn wealth_slices(n_a: usize) -> Vec<usize> {
    let mut s = vec![0, 11.min(n_a - 1), n_a - 1];
    s.dedup();
    s
}

/// The three canonical scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Baseline,
    Nonbinding,
    Binding,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Baseline, Scenario::Nonbinding, Scenario::Binding];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::Baseline => "baseline",
            Scenario::Nonbinding => "nonbinding",
            Scenario::Binding => "binding",
        }
    }

    pub fn w_min(self) -> f64 {
        match self {
            Scenario::Baseline => 0.0,
            Scenario::Nonbinding => 0.1,
            Scenario::Binding => 0.7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub label: String,
    pub model: Model,
    pub eq: Equilibrium,
    pub steady: SteadyState,
    pub stationary: Stationary,
}

impl ScenarioResult {
    pub fn params(&self) -> &Parameters {
        &self.model.params
    }
}

/// Solves one economy with the given wage floor.
pub fn run_scenario(p: &Parameters, w_min: f64, label: &str) -> Result<ScenarioResult> {
    if label.is_empty() {
        return Err(Error::domain("scenario", "label must not be empty"));
    }
    if !(0.0..=p.w_max).contains(&w_min) {
        return Err(Error::Invalid {
            key: "w_min",
            reason: format!("{w_min} not in [0, {}]", p.w_max),
        });
    }
    let model = Model::new(p.with_w_min(w_min))?;
    log::info!("solving scenario {label} (w_min = {w_min})");
    let eq = solve_equilibrium(&model)?;
    let (steady, stationary) = steady_state(&model, &eq)?;
    Ok(ScenarioResult {
        label: label.to_string(),
        model,
        eq,
        steady,
        stationary,
    })
}

/// Baseline, non-binding and binding floors, in that order.
pub fn run_experiment(p: &Parameters) -> Result<Vec<ScenarioResult>> {
    Scenario::ALL
        .par_iter()
        .map(|s| run_scenario(p, s.w_min(), s.label()))
        .collect()
}

/// Saving policy of the base scenario minus that of one alternative, in wealth
/// units, on the worker-state layouts.
#[derive(Clone, Debug, PartialEq)]
pub struct SavingDifference {
    pub label: String,
    /// `[eta][wealth]`.
    pub unemployed: Vec<f64>,
    /// `[eta][wage][wealth]`.
    pub employed: Vec<f64>,
}

impl SavingDifference {
    pub fn max(&self) -> f64 {
        self.unemployed
            .iter()
            .chain(&self.employed)
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }
}

/// Indicators of each scenario (base first) and saving differences base − alternative.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub labels: Vec<String>,
    pub u_rate_low: Vec<f64>,
    pub u_rate_high: Vec<f64>,
    pub j2j_rate: Vec<f64>,
    pub saving_diff: Vec<SavingDifference>,
}

pub fn compare_scenarios(
    base: &ScenarioResult,
    alts: &[ScenarioResult],
) -> Result<ComparisonTable> {
    let mut table = ComparisonTable {
        labels: vec![base.label.clone()],
        u_rate_low: vec![base.steady.u_rate_low()],
        u_rate_high: vec![base.steady.u_rate_high()],
        j2j_rate: vec![base.steady.j2j_rate],
        saving_diff: Vec::new(),
    };
    let wealth = &base.model.grids.wealth;
    for alt in alts {
        if alt.model.dims != base.model.dims
            || alt.model.grids.wealth != *wealth
            || alt.model.grids.wage != base.model.grids.wage
        {
            return Err(Error::Shape(format!(
                "scenario {} does not share the grids of {}",
                alt.label, base.label
            )));
        }
        let diff = |b: &[usize], a: &[usize]| -> Vec<f64> {
            b.iter()
                .zip(a)
                .map(|(&i, &j)| wealth[i] - wealth[j])
                .collect()
        };
        table.labels.push(alt.label.clone());
        table.u_rate_low.push(alt.steady.u_rate_low());
        table.u_rate_high.push(alt.steady.u_rate_high());
        table.j2j_rate.push(alt.steady.j2j_rate);
        table.saving_diff.push(SavingDifference {
            label: alt.label.clone(),
            unemployed: diff(&base.eq.ws.savings_u, &alt.eq.ws.savings_u),
            employed: diff(&base.eq.ws.savings_e, &alt.eq.ws.savings_e),
        });
    }
    Ok(table)
}

/// An in-memory CSV file awaiting an atomic write.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvFile {
    pub name: String,
    pub contents: String,
}

impl CsvFile {
    fn new(name: &str, header: &str) -> Self {
        CsvFile {
            name: name.to_string(),
            contents: format!("{header}\n"),
        }
    }

    fn row(&mut self, fields: std::fmt::Arguments) {
        self.contents
            .write_fmt(fields)
            .expect("writing to a String");
        self.contents.push('\n');
    }
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.contains([',', '\n', '"']) {
        return Err(Error::Export(format!("unusable scenario label {label:?}")));
    }
    Ok(())
}

fn eta_name(model: &Model, eta: usize) -> &'static str {
    match (eta, model.dims.n_eta) {
        (0, _) => "low",
        (e, n) if e + 1 == n => "high",
        _ => "mid",
    }
}

/// Panels describing a single scenario: search, saving and consumption
/// policies, the stationary distribution, firm values and tightness.
pub fn scenario_figures(s: &ScenarioResult) -> Result<Vec<CsvFile>> {
    check_label(&s.label)?;
    let m = &s.model;
    let d = m.dims;
    let ws = &s.eq.ws;
    let (wealth, wage) = (&m.grids.wealth, &m.grids.wage);
    let label = s.label.as_str();
    let high = d.n_eta - 1;
    let mut files = Vec::new();

    let unemployed_policy = |name: &str, column: &str, value: &dyn Fn(usize) -> String| {
        let mut f = CsvFile::new(name, &format!("scenario,eta,wealth_index,wealth,{column}"));
        for eta in 0..d.n_eta {
            for a in 0..d.n_a {
                let v = value(d.unemp(eta, a));
                f.row(format_args!(
                    "{label},{},{a},{},{v}",
                    eta_name(m, eta),
                    wealth[a]
                ));
            }
        }
        f
    };
    let employed_policy =
        |name: &str, eta: usize, column: &str, value: &dyn Fn(usize) -> String| {
            let mut f = CsvFile::new(
                name,
                &format!("scenario,wage_index,wage,wealth_index,wealth,{column}"),
            );
            for w in 0..d.n_w {
                for a in 0..d.n_a {
                    let v = value(d.emp(eta, w, a));
                    f.row(format_args!(
                        "{label},{w},{},{a},{},{v}",
                        wage[w], wealth[a]
                    ));
                }
            }
            f
        };

    let target = |t: usize| format!("{t},{}", wage[t]);
    files.push(unemployed_policy(
        "fig1a_search_unemployed.csv",
        "target_wage_index,target_wage",
        &|k| target(ws.target_wage_u[k]),
    ));
    files.push(employed_policy(
        "fig1b_search_employed_low.csv",
        0,
        "target_wage_index,target_wage",
        &|k| target(ws.target_wage_e[k]),
    ));
    files.push(employed_policy(
        "fig1c_search_employed_high.csv",
        high,
        "target_wage_index,target_wage",
        &|k| target(ws.target_wage_e[k]),
    ));

    let saving_u = |k: usize| format!("{}", wealth[ws.savings_u[k]] - wealth[k % d.n_a]);
    let saving_e = |k: usize| format!("{}", wealth[ws.savings_e[k]] - wealth[k % d.n_a]);
    files.push(unemployed_policy(
        "fig2a_saving_unemployed.csv",
        "saving",
        &saving_u,
    ));
    files.push(employed_policy(
        "fig2b_saving_employed_low.csv",
        0,
        "saving",
        &saving_e,
    ));
    files.push(employed_policy(
        "fig2c_saving_employed_high.csv",
        high,
        "saving",
        &saving_e,
    ));

    files.push(unemployed_policy(
        "fig3a_consumption_unemployed.csv",
        "consumption",
        &|k| format!("{}", ws.consumption_u[k]),
    ));
    files.push(employed_policy(
        "fig3b_consumption_employed_low.csv",
        0,
        "consumption",
        &|k| format!("{}", ws.consumption_e[k]),
    ));
    files.push(employed_policy(
        "fig3c_consumption_employed_high.csv",
        high,
        "consumption",
        &|k| format!("{}", ws.consumption_e[k]),
    ));

    let mut earn = CsvFile::new("fig4a_earnings.csv", EARNINGS_HEADER);
    earnings_rows(&mut earn, s);
    files.push(earn);
    let mut wl = CsvFile::new("fig4b_wealth.csv", WEALTH_HEADER);
    wealth_rows(&mut wl, s);
    files.push(wl);

    for (prefix, what, column, values) in [
        ("fig5", "firm_value", "value", &s.eq.market.j),
        ("fig6", "tightness", "theta", &s.eq.market.theta),
    ] {
        for (eta, letter) in [(0, ['a', 'c']), (high, ['b', 'd'])] {
            let who = eta_name(m, eta);
            let mut by_wealth = CsvFile::new(
                &format!("{prefix}{}_{what}_{who}_by_wealth.csv", letter[0]),
                &format!("scenario,wage_index,wage,wealth_index,wealth,{column}"),
            );
            for w in 0..d.n_w {
                for a in 0..d.n_a {
                    by_wealth.row(format_args!(
                        "{label},{w},{},{a},{},{}",
                        wage[w],
                        wealth[a],
                        values[d.emp(eta, w, a)]
                    ));
                }
            }
            let mut by_wage = CsvFile::new(
                &format!("{prefix}{}_{what}_{who}_by_wage.csv", letter[1]),
                &format!("scenario,wealth_index,wealth,wage_index,wage,{column}"),
            );
            for a in wealth_slices(d.n_a) {
                for w in 0..d.n_w {
                    by_wage.row(format_args!(
                        "{label},{a},{},{w},{},{}",
                        wealth[a],
                        wage[w],
                        values[d.emp(eta, w, a)]
                    ));
                }
            }
            files.push(by_wealth);
            files.push(by_wage);
        }
    }
    files.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(files)
}

const EARNINGS_HEADER: &str = "scenario,bin,status,earnings,mass";
const WEALTH_HEADER: &str = "scenario,wealth_index,wealth,mass";

/// Bin 0 holds the unemployed; bin `j + 1` holds employed workers at wage node `j`.
fn earnings_rows(f: &mut CsvFile, s: &ScenarioResult) {
    let wage = &s.model.grids.wage;
    for (bin, mass) in s.steady.earnings_hist.iter().enumerate() {
        if bin == 0 {
            f.row(format_args!("{},0,unemployed,0,{mass}", s.label));
        } else {
            f.row(format_args!(
                "{},{bin},employed,{},{mass}",
                s.label,
                wage[bin - 1]
            ));
        }
    }
}

fn wealth_rows(f: &mut CsvFile, s: &ScenarioResult) {
    let wealth = &s.model.grids.wealth;
    for (a, mass) in s.steady.wealth_hist.iter().enumerate() {
        f.row(format_args!("{},{a},{},{mass}", s.label, wealth[a]));
    }
}

/// Distribution overlays against the base scenario (one pair per alternative)
/// and the saving-policy differences against the last alternative.
pub fn comparison_figures(base: &ScenarioResult, alts: &[ScenarioResult]) -> Result<Vec<CsvFile>> {
    check_label(&base.label)?;
    for alt in alts {
        check_label(&alt.label)?;
    }
    let table = compare_scenarios(base, alts)?;
    let mut files = Vec::new();
    for (i, alt) in alts.iter().enumerate() {
        let fig = 7 + i;
        let mut earn = CsvFile::new(
            &format!("fig{fig}a_earnings_{}.csv", alt.label),
            EARNINGS_HEADER,
        );
        earnings_rows(&mut earn, base);
        earnings_rows(&mut earn, alt);
        let mut wl = CsvFile::new(
            &format!("fig{fig}b_wealth_{}.csv", alt.label),
            WEALTH_HEADER,
        );
        wealth_rows(&mut wl, base);
        wealth_rows(&mut wl, alt);
        files.push(earn);
        files.push(wl);
    }
    if let (Some(diff), Some(alt)) = (table.saving_diff.last(), alts.last()) {
        let fig = 7 + alts.len();
        let m = &base.model;
        let d = m.dims;
        let (wealth, wage) = (&m.grids.wealth, &m.grids.wage);
        let pair = format!("{}-{}", base.label, alt.label);
        let mut f = CsvFile::new(
            &format!("fig{fig}a_saving_difference_unemployed.csv"),
            "comparison,eta,wealth_index,wealth,difference",
        );
        for eta in 0..d.n_eta {
            for a in 0..d.n_a {
                f.row(format_args!(
                    "{pair},{},{a},{},{}",
                    eta_name(m, eta),
                    wealth[a],
                    diff.unemployed[d.unemp(eta, a)]
                ));
            }
        }
        files.push(f);
        for (eta, letter) in [(0, 'b'), (d.n_eta - 1, 'c')] {
            let mut f = CsvFile::new(
                &format!(
                    "fig{fig}{letter}_saving_difference_employed_{}.csv",
                    eta_name(m, eta)
                ),
                "comparison,wage_index,wage,wealth_index,wealth,difference",
            );
            for w in 0..d.n_w {
                for a in 0..d.n_a {
                    f.row(format_args!(
                        "{pair},{w},{},{a},{},{}",
                        wage[w],
                        wealth[a],
                        diff.employed[d.emp(eta, w, a)]
                    ));
                }
            }
            files.push(f);
        }
    }
    Ok(files)
}

/// Indicator table in percent, one row per indicator and one column per scenario.
pub fn indicator_table(table: &ComparisonTable) -> CsvFile {
    let mut f = CsvFile::new(
        "table3.csv",
        &format!("indicator,{}", table.labels.join(",")),
    );
    for (name, values) in [
        ("unemployment_rate_low_pct", &table.u_rate_low),
        ("unemployment_rate_high_pct", &table.u_rate_high),
        ("job_to_job_rate_pct", &table.j2j_rate),
    ] {
        let cells: Vec<String> = values.iter().map(|v| format!("{}", 100.0 * v)).collect();
        f.row(format_args!("{name},{}", cells.join(",")));
    }
    f
}

/// Writes all files into `dir`, or none of them.
pub fn write_atomically(dir: &Path, files: &[CsvFile]) -> Result<()> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut staged = Vec::with_capacity(files.len());
    for f in files {
        let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(f.contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        staged.push((tmp, dir.join(&f.name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| Error::Io {
            path: target.clone(),
            source: e.error,
        })?;
    }
    Ok(())
}

/// Every figure panel for a baseline and its alternatives (26 files for the
/// canonical three scenarios), written atomically to `dir`.
pub fn export_figure_data(
    base: &ScenarioResult,
    alts: &[ScenarioResult],
    dir: &Path,
) -> Result<Vec<String>> {
    let mut files = scenario_figures(base)?;
    files.extend(comparison_figures(base, alts)?);
    write_atomically(dir, &files)?;
    Ok(files.into_iter().map(|f| f.name).collect())
}
