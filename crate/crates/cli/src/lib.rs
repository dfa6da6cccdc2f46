// SPDX-License-Identifier: Apache-2.0

//! Command implementations behind the `pooling` binary.
//!
//! Each command turns a parsed [`ScenarioFile`] into a [`Report`]: summary
//! lines for people, an optional CSV table for scripts, and whether every
//! checked property held. Rationals are written as `p/q` everywhere.

use num::Zero;
use pooling_core::cost::{check_economies_of_scale, is_cost_efficient, is_viable, CostEfficiency};
use pooling_core::enumerate::Limits;
use pooling_core::equilibrium::{best_response_dynamics, is_strong_nash, scan_coalitions, ImprovementMode, Verdict};
use pooling_core::resource::{OwnerSet, PoolingConfiguration, ResourceUniverse};
use pooling_core::reward::{check_cauchy_linearity, check_egalitarianism, check_sybil_resilience, AxiomWitness};
use pooling_core::scenario::ScenarioFile;
use pooling_core::tokenomics::EmissionSchedule;
use pooling_core::{blueprint, rational, Error, Rational, Result};
use std::fmt::Write as _;

/// Exit codes shared by every command.
pub mod exit {
    pub const OK: u8 = 0;
    pub const PROPERTY_FAILED: u8 = 1;
    pub const INPUT_ERROR: u8 = 2;
    pub const LIMIT_ERROR: u8 = 3;
}

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub mode: Option<ImprovementMode>,
    /// Raises (or lowers) every enumeration bound to this owner count.
    pub max_owners: Option<usize>,
    pub seed: Option<u64>,
    pub epochs: Option<u64>,
    /// Last epoch of the emission table.
    pub through: Option<u64>,
}

impl Overrides {
    fn limits(&self) -> Limits {
        self.max_owners.map(Limits::uniform).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header).expect("write to memory");
        for row in &self.rows {
            writer.write_record(row).expect("write to memory");
        }
        String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 csv")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub summary: String,
    pub table: Option<Table>,
    pub passed: bool,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            exit::OK
        } else {
            exit::PROPERTY_FAILED
        }
    }
}

pub fn error_exit_code(error: &Error) -> u8 {
    match error {
        Error::EnumerationLimitExceeded { .. } | Error::TooManyOwners(..) => exit::LIMIT_ERROR,
        _ => exit::INPUT_ERROR,
    }
}

fn fmt(value: &Rational) -> String {
    rational::format(value)
}

/// Members joined by `;`, so sets never need CSV quoting.
fn members(set: OwnerSet) -> String {
    set.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(";")
}

fn describe_witness(w: &AxiomWitness) -> String {
    let sets: Vec<String> = w.sets.iter().map(ToString::to_string).collect();
    let measures: Vec<String> = w.measures.iter().map(fmt).collect();
    format!(
        "witness sets={} measures={} joint={} separate={}",
        sets.join(" "),
        measures.join(" "),
        fmt(&w.lhs),
        fmt(&w.rhs)
    )
}

/// Both reward axioms and additivity on the `k/N` grid.
pub fn axioms(file: &ScenarioFile, overrides: &Overrides) -> Result<Report> {
    let universe = file.universe()?;
    let model = file.reward_model()?;
    let limits = overrides.limits();
    let denominator = file.cauchy_denominator()?;

    let mut summary = String::new();
    let mut table = Table::new(["check", "verdict", "sets", "measures", "joint", "separate"]);
    let mut passed = true;
    let checks = [
        ("sybil_resilience", check_sybil_resilience(&model, &universe, &limits)?),
        ("egalitarianism", check_egalitarianism(&model, &universe, &limits)?),
    ];
    for (name, witness) in &checks {
        match witness {
            None => {
                writeln!(summary, "{name}: ok").unwrap();
                table.rows.push(vec![
                    name.to_string(),
                    "ok".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
            Some(w) => {
                passed = false;
                writeln!(summary, "{name}: {}", describe_witness(w)).unwrap();
                table.rows.push(vec![
                    name.to_string(),
                    "witness".into(),
                    w.sets.iter().map(|s| members(*s)).collect::<Vec<_>>().join(" "),
                    w.measures.iter().map(fmt).collect::<Vec<_>>().join(" "),
                    fmt(&w.lhs),
                    fmt(&w.rhs),
                ]);
            }
        }
    }
    match check_cauchy_linearity(&model, denominator)? {
        None => {
            writeln!(summary, "cauchy_linearity(N={denominator}): ok").unwrap();
            table.rows.push(vec![
                "cauchy_linearity".into(),
                "ok".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        Some(w) => {
            passed = false;
            writeln!(
                summary,
                "cauchy_linearity(N={denominator}): witness k={} value={} expected={}",
                w.k,
                fmt(&w.value),
                fmt(&w.expected)
            )
            .unwrap();
            table.rows.push(vec![
                "cauchy_linearity".into(),
                "witness".into(),
                w.k.to_string(),
                format!("{}/{denominator}", w.k),
                fmt(&w.value),
                fmt(&w.expected),
            ]);
        }
    }
    Ok(Report {
        summary,
        table: Some(table),
        passed,
    })
}

/// Pool diagnostics and the strong Nash verdict for the scenario
/// configuration. With `per_coalition` every coalition is scanned to the
/// end and reported as a table row.
pub fn equilibrium(file: &ScenarioFile, overrides: &Overrides, per_coalition: bool) -> Result<Report> {
    let inst = file.instance()?;
    let cfg = file.configuration()?;
    let mode = overrides.mode.unwrap_or(file.mode);
    let limits = overrides.limits();
    let universe = &inst.universe;

    let mut summary = String::new();
    for (index, pool) in cfg.pools.iter().enumerate() {
        let measure = universe.measure(pool.members)?;
        let cost = inst.cost.cost(universe, pool.members)?;
        let reward = inst.reward.evaluate(&measure)?;
        let viable = is_viable(pool.members, &inst.cost, &inst.reward, universe)?;
        let efficiency = match is_cost_efficient(pool.members, &inst.cost, universe, &limits)? {
            CostEfficiency::Efficient => "true".to_string(),
            CostEfficiency::Violated(subset) => format!("false (cheaper per unit: {subset})"),
        };
        writeln!(
            summary,
            "pool {index} {}: measure={} cost={} reward={} viable={viable} cost_efficient={efficiency}",
            pool.members,
            fmt(&measure),
            fmt(&cost),
            fmt(&reward)
        )
        .unwrap();
    }
    if let Some(model) = inst.cost.as_operator_linear() {
        let min_fixed = model.fixed().iter().min().expect("nonempty universe");
        writeln!(
            summary,
            "operator_linear: delta={} min_fixed={} delta_within_fixed={}",
            fmt(&model.delta()),
            fmt(min_fixed),
            model.satisfies_prop1_condition()
        )
        .unwrap();
    }
    match check_economies_of_scale(&inst.cost, universe, &limits) {
        Ok(None) => writeln!(summary, "economies_of_scale: ok").unwrap(),
        Ok(Some((a, b))) => writeln!(summary, "economies_of_scale: violated by {a} and {b}").unwrap(),
        // informational only; the verdict below carries the limit check
        Err(Error::EnumerationLimitExceeded { .. }) => {
            writeln!(summary, "economies_of_scale: skipped (owner limit)").unwrap()
        }
        Err(e) => return Err(e),
    }

    let report = is_strong_nash(&inst, &cfg, mode, &limits)?;
    let mode_name = match mode {
        ImprovementMode::AllStrictlyBetter => "strict",
        ImprovementMode::ParetoImprovement => "pareto",
    };
    match &report.verdict {
        Verdict::StrongNash => writeln!(
            summary,
            "verdict: StrongNash (mode={mode_name}, coalitions_checked={})",
            report.coalitions_checked
        )
        .unwrap(),
        Verdict::NotStrongNash(cert) => {
            writeln!(
                summary,
                "verdict: NotStrongNash (mode={mode_name}, coalitions_checked={})",
                report.coalitions_checked
            )
            .unwrap();
            let partition: Vec<String> = cert.partition.iter().map(ToString::to_string).collect();
            writeln!(
                summary,
                "certificate: coalition={} partition={} inactive={}",
                cert.coalition,
                if partition.is_empty() {
                    "-".into()
                } else {
                    partition.join(" ")
                },
                cert.inactive
            )
            .unwrap();
            for (owner, old) in &cert.old_utilities {
                writeln!(
                    summary,
                    "  owner {owner}: old={} new={}",
                    fmt(old),
                    fmt(&cert.new_utilities[owner])
                )
                .unwrap();
            }
        }
    }

    let table = if per_coalition {
        let mut table = Table::new(["coalition", "partitions_checked", "profitable", "partition", "inactive"]);
        for outcome in scan_coalitions(&inst, &cfg, mode, &limits)? {
            let (profitable, partition, inactive) = match &outcome.certificate {
                Some(cert) => (
                    "true",
                    cert.partition.iter().map(|p| members(*p)).collect::<Vec<_>>().join(" "),
                    members(cert.inactive),
                ),
                None => ("false", String::new(), String::new()),
            };
            table.rows.push(vec![
                members(outcome.coalition),
                outcome.partitions_checked.to_string(),
                profitable.into(),
                partition,
                inactive,
            ]);
        }
        Some(table)
    } else {
        None
    };

    Ok(Report {
        summary,
        table,
        passed: report.is_strong_nash(),
    })
}

fn pool_measure_range(universe: &ResourceUniverse, cfg: &PoolingConfiguration) -> Result<(String, String)> {
    let measures = cfg
        .pools
        .iter()
        .map(|p| universe.measure(p.members))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        measures.iter().min().map(fmt).unwrap_or_default(),
        measures.iter().max().map(fmt).unwrap_or_default(),
    ))
}

/// Best-response dynamics from the scenario's starting configuration. The
/// run passes when it converges.
pub fn dynamics(file: &ScenarioFile, overrides: &Overrides) -> Result<Report> {
    let inst = file.instance()?;
    let spec = file.dynamics()?;
    let start = file.dynamics_start()?;
    let seed = overrides.seed.unwrap_or(spec.seed);
    let max_iter = match overrides.epochs {
        Some(n) => usize::try_from(n).map_err(|_| Error::InvalidScenario("iteration bound too large".into()))?,
        None => spec.max_iter,
    };
    let trace = best_response_dynamics(&inst, &start, &spec.moves, max_iter, seed)?;

    let mut table = Table::new([
        "iteration",
        "mover",
        "move",
        "pool_count",
        "min_pool_measure",
        "max_pool_measure",
        "utility_before",
        "utility_after",
    ]);
    for step in &trace.steps {
        let (low, high) = pool_measure_range(&inst.universe, &step.configuration)?;
        table.rows.push(vec![
            step.iteration.to_string(),
            step.mover.to_string(),
            step.mv.to_string(),
            step.configuration.len().to_string(),
            low,
            high,
            fmt(&step.utility_before),
            fmt(&step.utility_after),
        ]);
    }

    let mut summary = String::new();
    let order: Vec<String> = trace.order.iter().map(ToString::to_string).collect();
    writeln!(summary, "seed={seed} order={}", order.join(",")).unwrap();
    let pools: Vec<String> = trace
        .final_configuration
        .pools
        .iter()
        .map(|p| p.members.to_string())
        .collect();
    writeln!(
        summary,
        "converged={} iterations={} steps={} pools={}",
        trace.converged,
        trace.iterations,
        trace.steps.len(),
        trace.final_configuration.len()
    )
    .unwrap();
    writeln!(
        summary,
        "final: {}",
        if pools.is_empty() { "-".into() } else { pools.join(" ") }
    )
    .unwrap();

    Ok(Report {
        summary,
        table: Some(table),
        passed: trace.converged,
    })
}

/// Epoch-by-epoch blueprint run. Fails if any epoch does not conserve
/// emission plus fees exactly.
pub fn simulate(file: &ScenarioFile, overrides: &Overrides) -> Result<Report> {
    let mut scenario = file.blueprint()?;
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    if let Some(epochs) = overrides.epochs {
        scenario.epochs = epochs;
    }
    let run = blueprint::run(&scenario)?;
    let pool_count = scenario.configuration.len();
    let owners: Vec<_> = scenario.instance.universe.owners().collect();

    let mut header: Vec<String> = ["epoch", "emission", "fees", "treasury", "committee"]
        .into_iter()
        .map(String::from)
        .collect();
    header.extend((0..pool_count).map(|i| format!("pool_{i}_reward")));
    header.extend(owners.iter().map(|o| format!("owner_{o}_cumulative")));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };

    let mut cumulative = vec![Rational::zero(); owners.len()];
    let mut conserved = true;
    let mut treasury = Rational::zero();
    for record in &run.records {
        let paid: Rational = record.pool_rewards.values().sum();
        conserved &= &record.pot.treasury_cut + &paid + &record.shortfall == &record.pot.emission + &record.pot.fees;
        treasury += record.treasury_total();
        let mut row = vec![
            record.epoch.to_string(),
            fmt(&record.pot.emission),
            fmt(&record.pot.fees),
            fmt(&record.treasury_total()),
            record
                .committee
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        ];
        row.extend((0..pool_count).map(|i| record.pool_rewards.get(&i).map(fmt).unwrap_or_else(|| "0".into())));
        for (slot, owner) in owners.iter().enumerate() {
            cumulative[slot] += &record.owner_rewards[owner];
            row.push(fmt(&cumulative[slot]));
        }
        table.rows.push(row);
    }

    let mut summary = String::new();
    writeln!(
        summary,
        "epochs={} k={} seed={} pools={}",
        scenario.epochs, scenario.k, scenario.seed, pool_count
    )
    .unwrap();
    writeln!(summary, "treasury_total={}", fmt(&treasury)).unwrap();
    for (owner, total) in &run.cumulative_owner_rewards {
        writeln!(summary, "owner {owner}: cumulative={}", fmt(total)).unwrap();
    }
    writeln!(summary, "conservation={}", if conserved { "ok" } else { "violated" }).unwrap();
    writeln!(summary, "standby pools earn 0; baseline is committee-relative stake").unwrap();

    Ok(Report {
        summary,
        table: Some(table),
        passed: conserved,
    })
}

/// Per-epoch emission and running total for epochs `0..=through`.
pub fn emission(file: &ScenarioFile, overrides: &Overrides) -> Result<Report> {
    let schedule = file.schedule()?;
    let count = match (overrides.through, overrides.epochs) {
        (Some(through), _) => through
            .checked_add(1)
            .ok_or_else(|| Error::InvalidScenario("epoch range too large".into()))?,
        (None, Some(epochs)) => epochs,
        (None, None) => file.blueprint.as_ref().map_or(20, |b| b.epochs),
    };

    let mut table = Table::new(["epoch", "emission", "cumulative"]);
    let mut running = Rational::zero();
    for epoch in 0..count {
        let amount = schedule.emission(epoch)?;
        running += &amount;
        table.rows.push(vec![epoch.to_string(), fmt(&amount), fmt(&running)]);
    }

    let kind = match &schedule {
        EmissionSchedule::Constant { .. } => "constant",
        EmissionSchedule::Halving { .. } => "halving",
        EmissionSchedule::Custom { .. } => "custom",
    };
    let mut summary = String::new();
    writeln!(summary, "schedule={kind} epochs={count}").unwrap();
    let mut passed = true;
    if count > 0 {
        let closed = schedule.cumulative_emission(count - 1)?;
        passed &= closed == running;
        writeln!(summary, "cumulative_through_{}={}", count - 1, fmt(&closed)).unwrap();
    }
    match schedule.total_supply() {
        Some(bound) => {
            if matches!(schedule, EmissionSchedule::Halving { .. }) && !bound.is_zero() {
                passed &= running < bound;
            }
            writeln!(summary, "supremum={}", fmt(&bound)).unwrap()
        }
        None => writeln!(summary, "supremum=unbounded").unwrap(),
    }

    Ok(Report {
        summary,
        table: Some(table),
        passed,
    })
}
