use std::io::Write;

use lpir::allocation::{
    expand_to_full_with_limit, optimal_allocation, samy_allocation, PermutationScope,
    CYCLIC_TABLE_LIMIT, FULL_TABLE_LIMIT,
};
use lpir::audit::{
    exact_download_cost, measure_leakage, monte_carlo_cost, verify_correctness_with_limit,
    CorrectnessReport, LeakageReport, MonteCarloEstimate,
};
use lpir::optimizer::{build_p1, build_p2, kkt_certificate, solve, KktCertificate, REDUCTION_TOL};
use lpir::tradeoff::{cost_tsc, exponent_bounds, sweep, uniform_grid, ExponentBounds};
use lpir::{Error, SchemeParams, Shape};
use serde::Serialize;

use super::{
    AuditArgs, Cli, Command, ExponentArgs, Format, Scheme, SimulateArgs, TradeoffArgs, VerifyArgs,
};

/// Overrides every enumeration guard the CLI applies.
pub const ENUM_LIMIT_VAR: &str = "LPIR_ENUM_LIMIT";
/// Leakage above the target that an audit still accepts.
pub const LEAKAGE_SLACK: f64 = 1e-9;
/// Largest accepted gap between the reduced LP and its closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Largest accepted |z| for a simulation.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Lp(_) | Error::Decode(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 1,
            message: format!("i/o: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct RunReport<'a, R: Serialize> {
    command: &'static str,
    args: &'a [String],
    version: &'static str,
    seed: Option<u64>,
    params: ParamsEcho,
    results: R,
}

#[derive(Serialize)]
struct ParamsEcho {
    n: usize,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_nats: Option<f64>,
}

impl ParamsEcho {
    fn shape(shape: Shape) -> Self {
        ParamsEcho {
            n: shape.n(),
            k: shape.k(),
            epsilon_nats: None,
        }
    }

    fn params(p: &SchemeParams) -> Self {
        ParamsEcho {
            n: p.n(),
            k: p.k(),
            epsilon_nats: Some(p.epsilon()),
        }
    }
}

struct Ctx<'a> {
    argv: &'a [String],
    bits: bool,
}

impl Ctx<'_> {
    fn eps(&self, raw: f64) -> f64 {
        if self.bits {
            raw * std::f64::consts::LN_2
        } else {
            raw
        }
    }

    fn report<R: Serialize>(
        &self,
        command: &'static str,
        seed: Option<u64>,
        params: ParamsEcho,
        results: R,
    ) -> String {
        let report = RunReport {
            command,
            args: self.argv,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            params,
            results,
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        text
    }
}

pub fn run(cli: &Cli, argv: &[String]) -> CliResult<u8> {
    let ctx = Ctx {
        argv,
        bits: cli.bits,
    };
    match &cli.command {
        Command::Tradeoff(a) => tradeoff(&ctx, a),
        Command::Exponent(a) => exponent(&ctx, a),
        Command::Audit(a) => audit(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
    }
}

fn emit(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn enum_limit(default: u128) -> CliResult<u128> {
    match std::env::var(ENUM_LIMIT_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::usage(format!(
                "{ENUM_LIMIT_VAR}={v:?} is not a non-negative integer"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(default),
        Err(e) => Err(CliError::usage(format!("{ENUM_LIMIT_VAR}: {e}"))),
    }
}

fn tradeoff(ctx: &Ctx, a: &TradeoffArgs) -> CliResult<u8> {
    let shape = Shape::new(a.shape.n, a.shape.k)?;
    if a.steps == 0 {
        return Err(CliError::usage("--steps must be at least 1"));
    }
    let (lo, hi) = (ctx.eps(a.eps_min), ctx.eps(a.eps_max));
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(CliError::usage(format!(
            "--eps-min {lo} exceeds --eps-max {hi}"
        )));
    }
    let points = sweep(shape, &uniform_grid(lo, hi, a.steps))?;
    let text = match a.format {
        Format::Json => ctx.report("tradeoff", None, ParamsEcho::shape(shape), &points),
        Format::Csv => {
            let mut s = String::from("epsilon,d_tsc,d_ub,d_lb,gap_tsc_lb,gap_ub_lb\n");
            for p in &points {
                s.push_str(&format!(
                    "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                    p.epsilon, p.d_tsc, p.d_ub, p.d_lb, p.gap_tsc_lb, p.gap_ub_lb
                ));
            }
            s
        }
    };
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => emit(&text)?,
    }
    Ok(0)
}

#[derive(Serialize)]
struct ExponentResults {
    #[serde(flatten)]
    bounds: ExponentBounds,
    tsc_upper_holds: bool,
    ub_upper_holds: bool,
    ub_lower_holds: bool,
}

fn exponent(ctx: &Ctx, a: &ExponentArgs) -> CliResult<u8> {
    let shape = Shape::new(a.shape.n, a.shape.k)?;
    let bounds = exponent_bounds(shape, a.d)?;
    let results = ExponentResults {
        bounds,
        tsc_upper_holds: bounds.tsc_upper_holds(),
        ub_upper_holds: bounds.ub_upper_holds(),
        ub_lower_holds: bounds.ub_lower_holds(),
    };
    emit(&ctx.report("exponent", None, ParamsEcho::shape(shape), results))?;
    Ok(if bounds.all_hold() { 0 } else { 3 })
}

#[derive(Serialize)]
struct AuditResults {
    scheme: Scheme,
    leakage: LeakageReport,
    leakage_within_target: bool,
    exact_download_cost: f64,
    correctness: CorrectnessReport,
    passed: bool,
}

fn audit(ctx: &Ctx, a: &AuditArgs) -> CliResult<u8> {
    let params = SchemeParams::new(a.shape.n, a.shape.k, ctx.eps(a.eps))?;
    let alloc = match a.scheme {
        Scheme::Tsc => optimal_allocation(&params),
        Scheme::Samy => samy_allocation(&params),
    };
    let full = expand_to_full_with_limit(&params, &alloc, enum_limit(CYCLIC_TABLE_LIMIT)?)?;
    let correctness = verify_correctness_with_limit(
        params.shape(),
        PermutationScope::All,
        a.seed,
        enum_limit(FULL_TABLE_LIMIT)?,
    )?;
    let leakage = measure_leakage(&full)?;
    let leakage_within_target = leakage.empirical_epsilon <= params.epsilon() + LEAKAGE_SLACK;
    let passed = leakage_within_target && correctness.all_correct;
    let results = AuditResults {
        scheme: a.scheme,
        leakage,
        leakage_within_target,
        exact_download_cost: exact_download_cost(&full),
        correctness,
        passed,
    };
    emit(&ctx.report("audit", Some(a.seed), ParamsEcho::params(&params), results))?;
    Ok(if passed { 0 } else { 3 })
}

#[derive(Serialize)]
struct SimulateResults {
    message_index: usize,
    #[serde(flatten)]
    estimate: MonteCarloEstimate,
    analytic_cost: f64,
    /// `null` when the standard error is zero and the mean misses the analytic cost.
    z: Option<f64>,
    passed: bool,
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> CliResult<u8> {
    let params = SchemeParams::new(a.shape.n, a.shape.k, ctx.eps(a.eps))?;
    if a.message_index == 0 || a.message_index > params.k() {
        return Err(CliError::usage(format!(
            "--message-index {} is out of range [1, {}]",
            a.message_index,
            params.k()
        )));
    }
    let alloc = optimal_allocation(&params);
    let estimate = monte_carlo_cost(&params, &alloc, a.message_index, a.trials, a.seed)?;
    let analytic_cost = cost_tsc(&params);
    let diff = estimate.mean - analytic_cost;
    let z = if estimate.std_error > 0.0 {
        Some(diff / estimate.std_error)
    } else if diff.abs() <= 1e-12 * analytic_cost {
        Some(0.0)
    } else {
        None
    };
    let passed = z.is_some_and(|z| z.abs() <= Z_LIMIT);
    let results = SimulateResults {
        message_index: a.message_index,
        estimate,
        analytic_cost,
        z,
        passed,
    };
    emit(&ctx.report(
        "simulate",
        Some(a.seed),
        ParamsEcho::params(&params),
        results,
    ))?;
    Ok(if passed { 0 } else { 3 })
}

#[derive(Serialize)]
struct VerifyResults {
    p2_value: f64,
    closed_form: f64,
    p2_matches_closed_form: bool,
    p1_value: Option<f64>,
    p1_agrees: Option<bool>,
    kkt_max_residual: f64,
    kkt_holds: bool,
    kkt: KktCertificate,
    passed: bool,
}

fn verify(ctx: &Ctx, a: &VerifyArgs) -> CliResult<u8> {
    let params = SchemeParams::new(a.shape.n, a.shape.k, ctx.eps(a.eps))?;
    let p2_value = solve(&build_p2(&params)?).map_err(Error::from)?.value;
    let closed_form = cost_tsc(&params);
    let p2_matches_closed_form = (p2_value - closed_form).abs() <= CLOSED_FORM_TOL;
    let kkt = kkt_certificate(&params)?;

    let p1_value = if a.skip_p1 {
        eprintln!("warning: full-permutation LP skipped on request");
        None
    } else {
        match build_p1(&params) {
            Ok(lp) => Some(solve(&lp).map_err(Error::from)?.value),
            Err(e @ Error::GuardExceeded { .. }) => {
                eprintln!("warning: full-permutation LP skipped: {e}");
                None
            }
            Err(e) => return Err(e.into()),
        }
    };
    let p1_agrees = p1_value.map(|v| (v - p2_value).abs() <= REDUCTION_TOL);
    let passed = p2_matches_closed_form && kkt.holds() && p1_agrees.unwrap_or(true);
    let results = VerifyResults {
        p2_value,
        closed_form,
        p2_matches_closed_form,
        p1_value,
        p1_agrees,
        kkt_max_residual: kkt.max_residual,
        kkt_holds: kkt.holds(),
        kkt,
        passed,
    };
    emit(&ctx.report("verify", None, ParamsEcho::params(&params), results))?;
    Ok(if passed { 0 } else { 3 })
}
