//! Configuration-driven experiment runs producing CSV tables.
//!
//! Each command returns a [`Table`]; [`render_csv`] turns it into the on-disk
//! format: one `#` comment line (tool version, command, config hash, seed),
//! a header row, then data rows sorted by their grid key with numbers printed
//! to 12 significant digits.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gauss::asymptotic_krcc;
use crate::optimizer::{optimal_channel, symmetric_closed_form, OptimizerConfig};
use crate::prob::{compose_f_given_y, BinaryChannel, BinaryDist};
use crate::sim::{
    derive_seed, fingerprint_attack, generate_dataset, krcc_trials, obfuscate, AttackPlan,
    Execution, KLetterMechanism, Stream, TieRule, TrialPlan,
};
use crate::tradeoff::{finite_m_bounds, leakage, FiniteMParams};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Settings shared by all commands. Missing fields take the defaults below
/// (n = 200, m in {10, 40, 100}, 40 trials, uniform source, BSC(0.1) query).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    /// Entry length for optimal-channel and attack-sim.
    pub m: usize,
    /// Entry lengths swept by krcc-sim.
    pub m_list: Vec<usize>,
    pub trials: usize,
    /// Probability of a 1 in the original data.
    pub px: f64,
    /// Upper end of the flip-probability grid.
    pub p_max: f64,
    pub p_step: f64,
    /// Block length of the obfuscation (product of the per-letter channel).
    pub k: usize,
    /// Crossover of the BSC query noise.
    pub query_q: f64,
    /// Leakage budget for optimal-channel, in bits.
    pub epsilon: f64,
    /// Explicit leakage grid for region; defaults to `epsilon_steps`
    /// equal steps from 0 to the noiseless leakage.
    pub epsilons: Option<Vec<f64>>,
    pub epsilon_steps: usize,
    /// Fingerprint length.
    pub q: usize,
    pub seed: u64,
    /// Resolvability constant of the finite-m leakage slack.
    pub b_const: f64,
    pub symmetric: bool,
    pub grid_resolution: usize,
    pub ties: TieRule,
    pub attack_levels: Vec<f64>,
    pub attack_trials: usize,
    /// Output path; not part of the config hash.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 200,
            m: 100,
            m_list: vec![10, 40, 100],
            trials: 40,
            px: 0.5,
            p_max: 0.5,
            p_step: 0.025,
            k: 1,
            query_q: 0.1,
            epsilon: 0.2,
            epsilons: None,
            epsilon_steps: 50,
            q: 20,
            seed: 2024,
            b_const: 1.0,
            symmetric: false,
            grid_resolution: 400,
            ties: TieRule::IndexOrder,
            attack_levels: vec![0.0, 0.1, 0.25, 0.5],
            attack_trials: 1000,
            out: None,
        }
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Config(format!("{name} = {x} is not a probability")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n", self.n),
            ("m", self.m),
            ("trials", self.trials),
            ("k", self.k),
            ("epsilon_steps", self.epsilon_steps),
            ("q", self.q),
            ("attack_trials", self.attack_trials),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n < 2 {
            return Err(Error::Config("n must be at least 2".to_string()));
        }
        if self.m_list.is_empty() || self.m_list.contains(&0) {
            return Err(Error::Config(
                "m_list must hold positive lengths".to_string(),
            ));
        }
        check_unit("px", self.px)?;
        check_unit("p_max", self.p_max)?;
        check_unit("query_q", self.query_q)?;
        for &p in &self.attack_levels {
            check_unit("attack level", p)?;
        }
        if !(self.p_step > 0.0) {
            return Err(Error::Config(format!(
                "p_step must be positive, got {}",
                self.p_step
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if let Some(grid) = &self.epsilons {
            if grid.iter().any(|e| !(*e >= 0.0)) {
                return Err(Error::Config(
                    "epsilon grid must be nonnegative".to_string(),
                ));
            }
        }
        if !(self.b_const >= 0.0) {
            return Err(Error::Config(format!(
                "b_const must be >= 0, got {}",
                self.b_const
            )));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form,
    /// ignoring the output path.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            out: None,
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }

    fn p_grid(&self) -> Vec<f64> {
        let steps = (self.p_max / self.p_step + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * self.p_step).collect()
    }

    fn source(&self) -> Result<BinaryDist<f64>> {
        BinaryDist::new(self.px)
    }

    fn query(&self) -> Result<BinaryChannel<f64>> {
        BinaryChannel::bsc(self.query_q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x, 12),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Formats `x` with `digits` significant digits in plain decimal notation,
/// trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // round first so that e.g. 0.99999999999999 picks the right exponent
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let rounded: f64 = sci.parse().expect("formatted float parses");
    let exp = rounded.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exp).max(0) as usize;
    let mut s = format!("{:.*}", decimals, rounded);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// A result table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let idx = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[idx].clone()).collect())
    }

    /// Column as floats; non-numeric cells become NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .iter()
                .map(|c| c.as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }
}

pub fn render_csv(table: &Table, cfg: &ExperimentConfig) -> Result<String> {
    let mut out = format!(
        "# rank-obf {} command={} config={} seed={}\n",
        TOOL_VERSION,
        table.command,
        cfg.hash(),
        cfg.seed
    );
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv encoding failed: {e}"));
    writer.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        writer
            .write_record(row.iter().map(Cell::render))
            .map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Config(format!("csv encoding failed: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// Companion gnuplot script plotting the CSV at `csv_path`.
pub fn gnuplot_script(table: &Table, csv_path: &str) -> String {
    let body = match table.command {
        "krcc-sim" => format!(
            "set xlabel 'p'\nset ylabel 'KRCC'\n\
             plot '{csv_path}' using 2:3 with lines title 'analytical', \\\n\
             \x20    '{csv_path}' using 2:4:5 with yerrorbars title 'empirical'\n"
        ),
        "krcc-surface" => format!(
            "set xlabel 'p1'\nset ylabel 'p2'\nset zlabel 'KRCC'\nset dgrid3d\n\
             splot '{csv_path}' using 1:2:3 with lines notitle\n"
        ),
        "region" => format!(
            "set xlabel 'epsilon (bits)'\nset ylabel 'delta'\n\
             plot '{csv_path}' using 1:4 with filledcurves y2=0.5 title 'achievable'\n"
        ),
        "attack-sim" => format!(
            "set xlabel 'obfuscation crossover'\nset ylabel 'identification accuracy'\n\
             plot '{csv_path}' using 1:2:3 with yerrorlines notitle\n"
        ),
        _ => format!("plot '{csv_path}' using 1:2\n"),
    };
    format!(
        "# generated by rank-obf {TOOL_VERSION}\nset datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n{body}"
    )
}

fn mechanism(p: f64, k: usize) -> Result<KLetterMechanism<f64>> {
    KLetterMechanism::product(&BinaryChannel::bsc(p)?, k)
}

/// Analytical versus empirical KRCC for BSC(p) obfuscation, per entry length.
pub fn cmd_krcc_sim(cfg: &ExperimentConfig, execution: Execution) -> Result<Table> {
    cfg.validate()?;
    let px = cfg.source()?;
    let mut m_list = cfg.m_list.clone();
    m_list.sort_unstable();
    m_list.dedup();
    let mut rows = Vec::new();
    for &m in &m_list {
        let plan = TrialPlan {
            n: cfg.n,
            m,
            trials: cfg.trials,
            seed: derive_seed(cfg.seed, Stream::Experiment, m as u64),
            ties: cfg.ties,
            execution,
        };
        for p in cfg.p_grid() {
            let channel = BinaryChannel::bsc(p)?;
            let analytical = asymptotic_krcc(&px, &channel)?;
            let summary = krcc_trials(&plan, &px, &mechanism(p, cfg.k)?)?;
            rows.push(vec![
                Cell::Int(m as u64),
                Cell::Num(p),
                Cell::Num(analytical),
                Cell::Num(summary.mean),
                Cell::Num(summary.stderr),
            ]);
        }
    }
    Ok(Table {
        command: "krcc-sim",
        header: vec!["m", "p", "analytical", "empirical_mean", "stderr"],
        rows,
    })
}

/// Asymptotic KRCC over a `(p1, p2)` grid.
pub fn cmd_krcc_surface(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let px = cfg.source()?;
    let grid = cfg.p_grid();
    let mut rows = Vec::with_capacity(grid.len() * grid.len());
    for &p1 in &grid {
        for &p2 in &grid {
            let q = asymptotic_krcc(&px, &BinaryChannel::new(p1, p2)?)?;
            rows.push(vec![Cell::Num(p1), Cell::Num(p2), Cell::Num(q)]);
        }
    }
    Ok(Table {
        command: "krcc-surface",
        header: vec!["p1", "p2", "krcc"],
        rows,
    })
}

/// The lower boundary `delta(epsilon)` of the achievable region.
pub fn cmd_region(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let px = cfg.source()?;
    let query = cfg.query()?;
    let ceiling = leakage(&px, &BinaryChannel::noiseless(), &query)?;
    let mut grid = match &cfg.epsilons {
        Some(g) => g.clone(),
        None => (0..=cfg.epsilon_steps)
            .map(|i| ceiling * i as f64 / cfg.epsilon_steps as f64)
            .collect(),
    };
    grid.sort_by(f64::total_cmp);

    let closed_form = cfg.symmetric && px.p_one() == 0.5 && cfg.query_q < 0.5;
    let mut rows = Vec::with_capacity(grid.len());
    for eps in grid {
        let solved = if closed_form {
            symmetric_closed_form(cfg.query_q, eps.min(1.0)).and_then(|p| {
                let channel = BinaryChannel::bsc(p)?;
                let status = if eps >= ceiling { "inactive" } else { "ok" };
                Ok((
                    channel,
                    leakage(&px, &channel, &query)?,
                    asymptotic_krcc(&px, &channel)?,
                    status,
                ))
            })
        } else {
            let mut opt = OptimizerConfig::new(eps).with_grid(cfg.grid_resolution);
            opt.symmetric_only = cfg.symmetric;
            optimal_channel(&px, &query, &opt).map(|o| {
                let status = if o.constraint_active {
                    "ok"
                } else {
                    "inactive"
                };
                (o.channel, o.leakage, o.delta, status)
            })
        };
        match solved {
            Ok((channel, achieved, delta, status)) => rows.push(vec![
                Cell::Num(eps),
                Cell::Num(channel.p1()),
                Cell::Num(channel.p2()),
                Cell::Num(delta),
                Cell::Num(achieved),
                Cell::Text(status.to_string()),
            ]),
            Err(Error::Infeasible(_)) => rows.push(vec![
                Cell::Num(eps),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Text("infeasible".to_string()),
            ]),
            Err(e) => return Err(e),
        }
    }
    Ok(Table {
        command: "region",
        header: vec!["epsilon", "p1", "p2", "delta", "achieved_epsilon", "status"],
        rows,
    })
}

/// Solver output for one budget plus the finite-m correction terms.
pub fn cmd_optimal_channel(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let px = cfg.source()?;
    let query = cfg.query()?;
    let mut opt = OptimizerConfig::new(cfg.epsilon).with_grid(cfg.grid_resolution);
    opt.symmetric_only = cfg.symmetric;
    let solved = optimal_channel(&px, &query, &opt)?;
    let params = FiniteMParams::new(cfg.n as u64, cfg.m as u64, cfg.q as u64).with_b(cfg.b_const);
    let bounds = finite_m_bounds(&px, &solved.channel, &query, &params);

    let mut row = vec![
        Cell::Num(cfg.epsilon),
        Cell::Num(solved.channel.p1()),
        Cell::Num(solved.channel.p2()),
        Cell::Num(solved.leakage),
        Cell::Num(solved.delta),
        Cell::Bool(solved.constraint_active),
    ];
    match bounds {
        Ok(b) => {
            row.extend(
                [
                    b.lambda_star,
                    b.theta,
                    b.gamma,
                    b.zeta,
                    b.be_slack,
                    b.priv_slack,
                ]
                .into_iter()
                .map(Cell::Num),
            );
            row.push(Cell::Bool(b.leakage_exact()));
            row.push(Cell::Text("ok".to_string()));
        }
        Err(Error::Degenerate(_)) | Err(Error::DeadSymbol { .. }) => {
            row.extend(std::iter::repeat_n(Cell::Empty, 7));
            row.push(Cell::Text("degenerate".to_string()));
        }
        Err(e) => return Err(e),
    }
    Ok(Table {
        command: "optimal-channel",
        header: vec![
            "epsilon",
            "p1",
            "p2",
            "achieved_epsilon",
            "delta",
            "constraint_active",
            "lambda_star",
            "theta",
            "gamma",
            "zeta",
            "be_slack",
            "priv_slack",
            "leakage_exact",
            "bounds_status",
        ],
        rows: vec![row],
    })
}

/// Fingerprint identification accuracy across obfuscation levels, all
/// levels sharing one original dataset and one sequence of attack draws.
pub fn cmd_attack_sim(cfg: &ExperimentConfig, execution: Execution) -> Result<Table> {
    cfg.validate()?;
    let px = cfg.source()?;
    let query = cfg.query()?;
    let original = generate_dataset(cfg.n, cfg.m, &px, derive_seed(cfg.seed, Stream::Data, 0));
    let plan = AttackPlan {
        q: cfg.q,
        trials: cfg.attack_trials,
        seed: derive_seed(cfg.seed, Stream::Attack, 0),
        execution,
    };
    let mut levels = cfg.attack_levels.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut rows = Vec::with_capacity(levels.len());
    for (i, &p) in levels.iter().enumerate() {
        let channel = BinaryChannel::bsc(p)?;
        let released = obfuscate(
            &original,
            &mechanism(p, cfg.k)?,
            derive_seed(cfg.seed, Stream::Obfuscation, i as u64),
        )?;
        let (_, f_given_y) = compose_f_given_y(&px, &channel, &query)?;
        let outcome = fingerprint_attack(&released, &original, &query, &f_given_y, &plan)?;
        rows.push(vec![
            Cell::Num(p),
            Cell::Num(outcome.accuracy),
            Cell::Num(outcome.stderr),
            Cell::Int(outcome.trials as u64),
            Cell::Num(1.0 / cfg.n as f64),
        ]);
    }
    Ok(Table {
        command: "attack-sim",
        header: vec!["p", "accuracy", "stderr", "trials", "chance"],
        rows,
    })
}
